//! Max and sum dynamic programs over labeled segmentations.

use super::SegScorer;
use crate::math::logsumexp2;

/// Precomputed segment and transition scores of one token.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    n: usize,
    max_len: usize,
    n_labels: usize,
    spans: Vec<f64>,
    transitions: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Cell {
    score: f64,
    segments: usize,
    back: (usize, usize),
}

impl Lattice {
    pub fn build<S: SegScorer + ?Sized>(scorer: &S, chars: &[char]) -> Self {
        let n_labels = scorer.labels().len();
        let mut lattice = Self::zeros(chars.len(), scorer.max_seg_len(), n_labels);
        for i in 0..lattice.n {
            for len in 1..=lattice.max_len.min(lattice.n - i) {
                for y in 0..n_labels {
                    let k = lattice.index(i, len, y);
                    lattice.spans[k] = scorer.score(chars, i, i + len, y);
                }
            }
        }
        for a in 0..n_labels {
            for b in 0..n_labels {
                lattice.transitions[a * n_labels + b] = scorer.transition(a, b);
            }
        }
        lattice
    }

    pub(crate) fn zeros(n: usize, max_seg_len: usize, n_labels: usize) -> Self {
        let max_len = max_seg_len.min(n);
        Self {
            n,
            max_len,
            n_labels,
            spans: vec![0.0; n * max_len * n_labels],
            transitions: vec![0.0; n_labels * n_labels],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    fn index(&self, i: usize, len: usize, y: usize) -> usize {
        (i * self.max_len + len - 1) * self.n_labels + y
    }

    pub fn span(&self, i: usize, j: usize, y: usize) -> f64 {
        self.spans[self.index(i, j - i, y)]
    }

    pub(crate) fn span_mut(&mut self, i: usize, j: usize, y: usize) -> &mut f64 {
        let k = self.index(i, j - i, y);
        &mut self.spans[k]
    }

    pub fn trans(&self, from: usize, to: usize) -> f64 {
        self.transitions[from * self.n_labels + to]
    }

    pub(crate) fn set_transitions(&mut self, transitions: &[f64]) {
        self.transitions.copy_from_slice(transitions);
    }

    /// Score of a `(start, end, label)` path, summed left to right.
    pub fn path_score(&self, path: &[(usize, usize, usize)]) -> f64 {
        let mut total = 0.0;
        for (k, &(i, j, y)) in path.iter().enumerate() {
            if k > 0 {
                total += self.trans(path[k - 1].2, y);
            }
            total += self.span(i, j, y);
        }
        total
    }

    /// Best path and its score. Among equal scores the path with fewer
    /// segments wins, then the one found first in label order.
    pub fn best(&self) -> (Vec<(usize, usize, usize)>, f64) {
        let (n, nl) = (self.n, self.n_labels);
        let empty = Cell {
            score: f64::NEG_INFINITY,
            segments: usize::MAX,
            back: (0, usize::MAX),
        };
        let mut cells = vec![empty; (n + 1) * nl];
        let better = |c: &Cell, cur: &Cell| {
            c.score > cur.score || (c.score == cur.score && c.segments < cur.segments)
        };
        for j in 1..=n {
            for y in 0..nl {
                let mut cur = empty;
                for len in 1..=self.max_len.min(j) {
                    let i = j - len;
                    let s = self.span(i, j, y);
                    if i == 0 {
                        let c = Cell {
                            score: s,
                            segments: 1,
                            back: (0, usize::MAX),
                        };
                        if better(&c, &cur) {
                            cur = c;
                        }
                        continue;
                    }
                    for prev in 0..nl {
                        let p = &cells[i * nl + prev];
                        if p.segments == usize::MAX {
                            continue;
                        }
                        let c = Cell {
                            score: p.score + self.trans(prev, y) + s,
                            segments: p.segments + 1,
                            back: (i, prev),
                        };
                        if better(&c, &cur) {
                            cur = c;
                        }
                    }
                }
                cells[j * nl + y] = cur;
            }
        }
        let mut y = 0;
        for cand in 1..nl {
            if better(&cells[n * nl + cand], &cells[n * nl + y]) {
                y = cand;
            }
        }
        let score = cells[n * nl + y].score;
        let mut path = Vec::new();
        let mut j = n;
        loop {
            let cell = cells[j * nl + y];
            let (i, prev) = cell.back;
            path.push((i, j, y));
            if i == 0 {
                break;
            }
            j = i;
            y = prev;
        }
        path.reverse();
        (path, score)
    }

    /// `alpha[j * L + y]`: log-sum over labeled segmentations of `chars[..j)`
    /// whose last segment has label `y`. Row 0 is unused.
    pub fn forward(&self) -> Vec<f64> {
        let (n, nl) = (self.n, self.n_labels);
        let mut alpha = vec![f64::NEG_INFINITY; (n + 1) * nl];
        for j in 1..=n {
            for y in 0..nl {
                let mut acc = f64::NEG_INFINITY;
                for len in 1..=self.max_len.min(j) {
                    let i = j - len;
                    let s = self.span(i, j, y);
                    let v = if i == 0 { s } else { self.entering(&alpha, i, y) + s };
                    acc = logsumexp2(acc, v);
                }
                alpha[j * nl + y] = acc;
            }
        }
        alpha
    }

    /// `beta[i * L + y]`: log-sum over completions of `chars[i..)` given that
    /// the segment ending at `i` has label `y`.
    pub fn backward(&self) -> Vec<f64> {
        let (n, nl) = (self.n, self.n_labels);
        let mut beta = vec![f64::NEG_INFINITY; (n + 1) * nl];
        beta[n * nl..].fill(0.0);
        for i in (1..n).rev() {
            for y in 0..nl {
                let mut acc = f64::NEG_INFINITY;
                for len in 1..=self.max_len.min(n - i) {
                    for next in 0..nl {
                        let v = self.trans(y, next) + self.span(i, i + len, next) + beta[(i + len) * nl + next];
                        acc = logsumexp2(acc, v);
                    }
                }
                beta[i * nl + y] = acc;
            }
        }
        beta
    }

    /// Log-weight of all prefixes ending at `i` followed by a transition into `y`.
    pub(crate) fn entering(&self, alpha: &[f64], i: usize, y: usize) -> f64 {
        let nl = self.n_labels;
        (0..nl).fold(f64::NEG_INFINITY, |acc, prev| {
            logsumexp2(acc, alpha[i * nl + prev] + self.trans(prev, y))
        })
    }

    pub fn log_partition(&self) -> f64 {
        let nl = self.n_labels;
        let alpha = self.forward();
        alpha[self.n * nl..].iter().fold(f64::NEG_INFINITY, |acc, &a| logsumexp2(acc, a))
    }
}
