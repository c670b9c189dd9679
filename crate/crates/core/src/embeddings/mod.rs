//! Static word embeddings: loading, cosine queries and k-means clustering.

mod kmeans;

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::exec;
use crate::math::{dot, norm};

pub use kmeans::{kmeans, ClusterAssignment, ClusterId, ClusterModel, KMeansConfig};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: Option<usize>,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vector; duplicate words keep the first entry and return `Ok(false)`.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<bool> {
        let word = word.into();
        match self.dim {
            Some(d) if d != vector.len() => {
                return Err(Error::InvalidInput(format!(
                    "vector for `{word}` has {} dimensions, table has {d}",
                    vector.len()
                )))
            }
            None if vector.is_empty() => {
                return Err(Error::InvalidInput(format!("empty vector for `{word}`")))
            }
            _ => {}
        }
        if self.index.contains_key(&word) {
            return Ok(false);
        }
        self.dim = Some(vector.len());
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend(vector);
        Ok(true)
    }

    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut t = Self::new();
        for (w, v) in entries {
            t.insert(w, v)?;
        }
        Ok(t)
    }

    /// `None` until the first vector is added.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        let d = self.dim.unwrap_or(0);
        &self.data[i * d..(i + 1) * d]
    }

    fn lookup(&self, word: &str) -> Result<&[f64]> {
        self.get(word).ok_or_else(|| Error::OutOfVocabulary(word.to_string()))
    }

    /// Multiplies every vector by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|x| *x *= factor);
        t
    }

    /// Copy with every non-zero vector scaled to unit length.
    pub fn normalized(&self) -> Self {
        let mut t = self.clone();
        if let Some(d) = t.dim {
            for row in t.data.chunks_mut(d) {
                let n = norm(row);
                if n > 0.0 {
                    row.iter_mut().for_each(|x| *x /= n);
                }
            }
        }
        t
    }

    pub fn cosine(&self, a: &str, b: &str) -> Result<f64> {
        let (va, vb) = (self.lookup(a)?, self.lookup(b)?);
        let (na, nb) = (norm(va), norm(vb));
        for (w, n) in [(a, na), (b, nb)] {
            if n == 0.0 {
                return Err(Error::InvalidInput(format!("zero vector for `{w}`")));
            }
        }
        Ok((dot(va, vb) / (na * nb)).clamp(-1.0, 1.0))
    }

    /// Ranks the vocabulary by cosine to `query`, descending, ties broken by word.
    /// Zero vectors and excluded words are skipped.
    fn rank_by_vector(&self, query: &[f64], exclude: &HashSet<&str>, n: usize) -> Vec<(String, f64)> {
        let qn = norm(query);
        if qn == 0.0 || n == 0 {
            return Vec::new();
        }
        let idx: Vec<usize> = (0..self.len()).collect();
        let mut scored: Vec<(usize, f64)> = exec::map_chunks(&idx, 1024, |_, chunk| {
            chunk
                .iter()
                .filter(|&&i| !exclude.contains(self.words[i].as_str()))
                .filter_map(|&i| {
                    let row = self.row(i);
                    let rn = norm(row);
                    (rn > 0.0).then(|| (i, dot(query, row) / (qn * rn)))
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.words[a.0].cmp(&self.words[b.0]))
        });
        scored.truncate(n);
        scored
            .into_iter()
            .map(|(i, s)| (self.words[i].clone(), s))
            .collect()
    }

    /// Up to `n` most similar words, never returning `word` or anything in `exclude`.
    pub fn nearest(&self, word: &str, n: usize, exclude: &[&str]) -> Result<Vec<(String, f64)>> {
        let v = self.lookup(word)?;
        if norm(v) == 0.0 {
            return Err(Error::InvalidInput(format!("zero vector for `{word}`")));
        }
        let mut ex: HashSet<&str> = exclude.iter().copied().collect();
        ex.insert(word);
        Ok(self.rank_by_vector(v, &ex, n))
    }

    /// 3CosAdd: the word closest to `b - a + c`, excluding the three query words.
    pub fn analogy(&self, a: &str, b: &str, c: &str) -> Result<String> {
        let (va, vb, vc) = (self.lookup(a)?, self.lookup(b)?, self.lookup(c)?);
        let target: Vec<f64> = vb.iter().zip(va).zip(vc).map(|((b, a), c)| b - a + c).collect();
        let exclude: HashSet<&str> = [a, b, c].into_iter().collect();
        if norm(&target) == 0.0 {
            // offset cancels to the origin; fall back to the neighbours of c
            return self
                .nearest(c, 1, &[a, b])?
                .into_iter()
                .next()
                .map(|(w, _)| w)
                .ok_or_else(|| Error::InvalidInput("no analogy candidates left".into()));
        }
        self.rank_by_vector(&target, &exclude, 1)
            .into_iter()
            .next()
            .map(|(w, _)| w)
            .ok_or_else(|| Error::InvalidInput("no analogy candidates left".into()))
    }
}

/// Reads whitespace-separated `word x1 x2 ...` lines, with an optional
/// `vocab dim` header on the first line.
pub fn load_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();
        if lineno == 1 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let vector = rest
            .iter()
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(lineno, format!("bad component for `{word}`: {e}")))?;
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::parse(lineno, format!("non-finite component for `{word}`")));
        }
        match table.insert(word, vector) {
            Ok(true) => {}
            Ok(false) => log::warn!("line {lineno}: duplicate word `{word}` ignored"),
            Err(e) => return Err(Error::parse(lineno, e.to_string())),
        }
    }
    Ok(table)
}
