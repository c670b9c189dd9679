//! Exact inference for a linear chain given dense log-potentials.

use crate::math::logsumexp;

/// Log-potentials of one sequence: per-position label scores plus transition,
/// start and end scores. `emissions` is row-major `len x n_labels`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainScores {
    pub n_labels: usize,
    pub emissions: Vec<f64>,
    pub transitions: Vec<f64>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl ChainScores {
    pub fn len(&self) -> usize {
        self.emissions.len().checked_div(self.n_labels).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn emit(&self, t: usize, y: usize) -> f64 {
        self.emissions[t * self.n_labels + y]
    }

    #[inline]
    pub fn trans(&self, from: usize, to: usize) -> f64 {
        self.transitions[from * self.n_labels + to]
    }

    /// Score of a complete label path, accumulated left to right.
    pub fn path_score(&self, path: &[usize]) -> f64 {
        let mut s = self.start[path[0]] + self.emit(0, path[0]);
        for t in 1..path.len() {
            s = s + self.trans(path[t - 1], path[t]) + self.emit(t, path[t]);
        }
        s + self.end[path[path.len() - 1]]
    }
}

/// Highest-scoring path and its score. Ties go to the lower label index.
pub fn viterbi(scores: &ChainScores) -> (Vec<usize>, f64) {
    let (n, l) = (scores.len(), scores.n_labels);
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let mut delta: Vec<f64> = (0..l).map(|y| scores.start[y] + scores.emit(0, y)).collect();
    let mut back = vec![0usize; n * l];
    let mut next = vec![0.0; l];
    for t in 1..n {
        for y in 0..l {
            let mut best = (0, f64::NEG_INFINITY);
            for (yp, &d) in delta.iter().enumerate() {
                let s = d + scores.trans(yp, y);
                if s > best.1 {
                    best = (yp, s);
                }
            }
            back[t * l + y] = best.0;
            next[y] = best.1 + scores.emit(t, y);
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (y, &d) in delta.iter().enumerate() {
        let s = d + scores.end[y];
        if s > best.1 {
            best = (y, s);
        }
    }
    let mut path = vec![best.0; n];
    for t in (1..n).rev() {
        path[t - 1] = back[t * l + path[t]];
    }
    (path, best.1)
}

/// Forward and backward log-messages with the log-partition.
#[derive(Clone, Debug)]
pub struct ForwardBackward {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub log_z: f64,
    n_labels: usize,
}

impl ForwardBackward {
    pub fn new(scores: &ChainScores) -> Self {
        let (n, l) = (scores.len(), scores.n_labels);
        let mut alpha = vec![0.0; n * l];
        let mut beta = vec![0.0; n * l];
        if n == 0 {
            return Self {
                alpha,
                beta,
                log_z: 0.0,
                n_labels: l,
            };
        }
        let mut buf = vec![0.0; l];
        for y in 0..l {
            alpha[y] = scores.start[y] + scores.emit(0, y);
        }
        for t in 1..n {
            for y in 0..l {
                for yp in 0..l {
                    buf[yp] = alpha[(t - 1) * l + yp] + scores.trans(yp, y);
                }
                alpha[t * l + y] = logsumexp(&buf) + scores.emit(t, y);
            }
        }
        for y in 0..l {
            beta[(n - 1) * l + y] = scores.end[y];
        }
        for t in (0..n - 1).rev() {
            for y in 0..l {
                for y2 in 0..l {
                    buf[y2] = scores.trans(y, y2) + scores.emit(t + 1, y2) + beta[(t + 1) * l + y2];
                }
                beta[t * l + y] = logsumexp(&buf);
            }
        }
        for y in 0..l {
            buf[y] = alpha[(n - 1) * l + y] + scores.end[y];
        }
        let log_z = logsumexp(&buf);
        Self {
            alpha,
            beta,
            log_z,
            n_labels: l,
        }
    }

    /// `P(y_t = y)`.
    pub fn node_marginal(&self, t: usize, y: usize) -> f64 {
        let i = t * self.n_labels + y;
        (self.alpha[i] + self.beta[i] - self.log_z).exp()
    }

    /// `P(y_{t-1} = from, y_t = to)` for `t >= 1`.
    pub fn edge_marginal(&self, scores: &ChainScores, t: usize, from: usize, to: usize) -> f64 {
        let l = self.n_labels;
        (self.alpha[(t - 1) * l + from] + scores.trans(from, to) + scores.emit(t, to) + self.beta[t * l + to]
            - self.log_z)
            .exp()
    }

    /// Per-position label distributions.
    pub fn marginals(&self, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|t| (0..self.n_labels).map(|y| self.node_marginal(t, y)).collect())
            .collect()
    }
}
