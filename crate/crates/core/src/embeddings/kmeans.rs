use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EmbeddingTable;
use crate::error::{Error, Result};
use crate::exec;
use crate::math::norm;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClusterId {
    Id(u32),
    /// Out-of-vocabulary word.
    Unk,
}

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterId::Id(i) => write!(f, "{i}"),
            ClusterId::Unk => f.write_str("UNK"),
        }
    }
}

/// Word to cluster-id lookup, the part of a fitted model that features need.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub k: usize,
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl ClusterAssignment {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            ..Default::default()
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, id: u32) {
        let word = word.into();
        if self.ids.insert(word.clone(), id).is_none() {
            self.words.push(word);
        }
    }

    pub fn cluster_id(&self, word: &str) -> ClusterId {
        self.ids.get(word).map_or(ClusterId::Unk, |&i| ClusterId::Id(i))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.words.iter().map(|w| (w.as_str(), self.ids[w]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: ClusterAssignment,
    pub inertia: f64,
    /// Objective after every assignment step, starting with the seeding.
    pub history: Vec<f64>,
}

impl ClusterModel {
    pub fn cluster_id(&self, word: &str) -> ClusterId {
        self.assignment.cluster_id(word)
    }

    /// `CLUSTERS v1` header, `word<TAB>id` lines, then a `CENTROIDS` block.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.centroids.first().map_or(0, Vec::len);
        writeln!(w, "CLUSTERS\tv1\tk={}\tdim={}\tinertia={}", self.k, dim, self.inertia)?;
        for (word, id) in self.assignment.iter() {
            writeln!(w, "{word}\t{id}")?;
        }
        writeln!(w, "CENTROIDS\t{}", self.centroids.len())?;
        for c in &self.centroids {
            let row: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::model("empty cluster file"))?;
        let header = header?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() < 5 || fields[0] != "CLUSTERS" || fields[1] != "v1" {
            return Err(Error::parse(1, "expected `CLUSTERS\\tv1` header"));
        }
        let field = |name: &str| -> Result<&str> {
            fields
                .iter()
                .find_map(|f| f.strip_prefix(name).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| Error::parse(1, format!("missing `{name}=` in header")))
        };
        let k: usize = field("k")?.parse().map_err(|_| Error::parse(1, "bad k"))?;
        let dim: usize = field("dim")?.parse().map_err(|_| Error::parse(1, "bad dim"))?;
        let inertia: f64 = field("inertia")?.parse().map_err(|_| Error::parse(1, "bad inertia"))?;
        let mut assignment = ClusterAssignment::new(k);
        let mut centroids = Vec::new();
        let mut n_centroids: Option<usize> = None;
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if let Some(n) = n_centroids {
                if centroids.len() == n {
                    break;
                }
                let row = line
                    .split_whitespace()
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::parse(lineno, e.to_string()))?;
                if row.len() != dim {
                    return Err(Error::parse(lineno, format!("centroid has {} values, expected {dim}", row.len())));
                }
                centroids.push(row);
            } else if let Some(n) = line.strip_prefix("CENTROIDS\t") {
                n_centroids = Some(n.parse().map_err(|_| Error::parse(lineno, "bad centroid count"))?);
            } else {
                let (word, id) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(lineno, "expected `word<TAB>id`"))?;
                let id: u32 = id.parse().map_err(|_| Error::parse(lineno, "bad cluster id"))?;
                if id as usize >= k {
                    return Err(Error::parse(lineno, format!("cluster id {id} out of range for k={k}")));
                }
                assignment.insert(word, id);
            }
        }
        if n_centroids.is_some_and(|n| n != centroids.len()) {
            return Err(Error::model("truncated centroid block"));
        }
        Ok(Self {
            k,
            centroids,
            assignment,
            inertia,
            history: vec![inertia],
        })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid (lowest index on ties) and its squared distance.
fn closest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    exec::map(points, |p| closest(p, centroids)).into_iter().unzip()
}

fn seed_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if r < d {
                        break;
                    }
                    r -= d;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // all remaining points coincide with a centroid
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen[next] = true;
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding over L2-normalized vectors.
///
/// The objective (sum of squared distances) is checked to be non-increasing after
/// every iteration. Empty clusters are re-seeded with the point farthest from its
/// centroid. With `k >= |vocabulary|` every word gets its own cluster.
pub fn kmeans(table: &EmbeddingTable, cfg: &KMeansConfig) -> Result<ClusterModel> {
    if cfg.k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if table.is_empty() {
        return Err(Error::InvalidInput("cannot cluster an empty vocabulary".into()));
    }
    let dim = table.dim().expect("non-empty table has a dimension");
    let points: Vec<Vec<f64>> = table
        .words()
        .iter()
        .map(|w| {
            let v = table.get(w).expect("word from table");
            let n = norm(v);
            if n > 0.0 {
                v.iter().map(|x| x / n).collect()
            } else {
                v.to_vec()
            }
        })
        .collect();
    let n = points.len();
    let mut assignment = ClusterAssignment::new(cfg.k);

    if cfg.k >= n {
        if cfg.k > n {
            log::warn!("k={} exceeds vocabulary size {n}; {} centroids stay unused", cfg.k, cfg.k - n);
        }
        for (i, w) in table.words().iter().enumerate() {
            assignment.insert(w.clone(), i as u32);
        }
        let mut centroids = points.clone();
        centroids.resize(cfg.k, vec![0.0; dim]);
        return Ok(ClusterModel {
            k: cfg.k,
            centroids,
            assignment,
            inertia: 0.0,
            history: vec![0.0],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = seed_plus_plus(&points, cfg.k, &mut rng);
    let (mut labels, mut dists) = assign(&points, &centroids);
    let mut inertia: f64 = dists.iter().sum();
    let mut history = vec![inertia];

    for _ in 0..cfg.max_iters {
        let mut sums = vec![vec![0.0; dim]; cfg.k];
        let mut counts = vec![0usize; cfg.k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for j in 0..cfg.k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        for (i, p) in points.iter().enumerate() {
            dists[i] = sq_dist(p, &centroids[labels[i]]);
        }
        for j in 0..cfg.k {
            if counts[j] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("non-empty");
                centroids[j] = points[far].clone();
                labels[far] = j;
                dists[far] = 0.0;
            }
        }
        let (new_labels, new_dists) = assign(&points, &centroids);
        let new_inertia: f64 = new_dists.iter().sum();
        assert!(
            new_inertia <= inertia + 1e-9 * inertia.max(1.0),
            "k-means objective increased from {inertia} to {new_inertia}"
        );
        let changed = new_labels != labels;
        let improvement = inertia - new_inertia;
        labels = new_labels;
        dists = new_dists;
        inertia = new_inertia;
        history.push(inertia);
        if !changed || improvement <= cfg.tol {
            break;
        }
    }

    for (w, &l) in table.words().iter().zip(&labels) {
        assignment.insert(w.clone(), l as u32);
    }
    Ok(ClusterModel {
        k: cfg.k,
        centroids,
        assignment,
        inertia,
        history,
    })
}
