//! Whole-token Naive Bayes baseline over TF-IDF weighted character n-grams.
//! Mixed tokens form a single `MIXED` class; no segmentation is attempted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::corpus::seglid::MIXED;
use crate::corpus::{LidLabel, SegLidRecord};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NbClass {
    Label(LidLabel),
    Mixed,
}

impl NbClass {
    pub fn of(record: &SegLidRecord) -> Self {
        match record.segments() {
            [only] => NbClass::Label(only.label),
            _ => NbClass::Mixed,
        }
    }
}

impl fmt::Display for NbClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NbClass::Label(l) => f.write_str(l.as_str()),
            NbClass::Mixed => f.write_str(MIXED),
        }
    }
}

impl FromStr for NbClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == MIXED {
            Ok(NbClass::Mixed)
        } else {
            Ok(NbClass::Label(s.parse()?))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NbModel {
    min_n: usize,
    max_n: usize,
    smoothing: f64,
    docs: usize,
    df: BTreeMap<String, usize>,
    classes: Vec<NbClass>,
    class_docs: Vec<usize>,
    /// Per class, summed TF-IDF weight of each n-gram.
    mass: Vec<HashMap<String, f64>>,
}

fn ngrams(token: &str, min_n: usize, max_n: usize) -> BTreeMap<String, usize> {
    let chars: Vec<char> = token.chars().collect();
    let mut out = BTreeMap::new();
    for k in min_n..=max_n {
        for w in chars.windows(k) {
            *out.entry(w.iter().collect()).or_insert(0) += 1;
        }
    }
    out
}

impl NbModel {
    pub fn classes(&self) -> &[NbClass] {
        &self.classes
    }

    fn idf(&self, df: usize) -> f64 {
        ((1.0 + self.docs as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    /// L2-normalized TF-IDF vector over n-grams seen in training.
    pub fn vectorize(&self, token: &str) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = ngrams(token, self.min_n, self.max_n)
            .into_iter()
            .filter_map(|(g, tf)| self.df.get(&g).map(|&df| (g, tf as f64 * self.idf(df))))
            .collect();
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, x)| *x /= norm);
        }
        v
    }

    /// Posterior over [`NbModel::classes`].
    pub fn posteriors(&self, token: &str) -> Result<Vec<f64>> {
        if token.is_empty() {
            return Err(Error::InvalidInput("empty token".into()));
        }
        let x = self.vectorize(token);
        let vocab = self.df.len() as f64;
        let total_docs = self.docs as f64;
        let scores: Vec<f64> = (0..self.classes.len())
            .map(|c| {
                let mass = &self.mass[c];
                let total: f64 = mass.values().sum();
                let denom = total + self.smoothing * vocab;
                let prior = (self.class_docs[c] as f64 / total_docs).ln();
                prior
                    + x.iter()
                        .map(|(g, w)| w * ((mass.get(g).copied().unwrap_or(0.0) + self.smoothing) / denom).ln())
                        .sum::<f64>()
            })
            .collect();
        let z = crate::math::logsumexp(&scores);
        Ok(scores.iter().map(|s| (s - z).exp()).collect())
    }

    /// Most probable class, earliest class on ties.
    pub fn classify(&self, token: &str) -> Result<NbClass> {
        let post = self.posteriors(token)?;
        Ok(self.classes[argmax(&post, |_| true)])
    }

    /// Whole-token record with the most probable label. A `MIXED` prediction
    /// cannot be segmented, so the best single label is used instead.
    pub fn tag(&self, token: &str) -> Result<SegLidRecord> {
        let post = self.posteriors(token)?;
        let best = argmax(&post, |c| self.classes[c] != NbClass::Mixed);
        match self.classes[best] {
            NbClass::Label(l) => SegLidRecord::whole(token, l),
            NbClass::Mixed => Err(Error::model("model has no single-label class")),
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "NB\tv1\tngram={}-{}\tsmoothing={}\tdocs={}",
            self.min_n, self.max_n, self.smoothing, self.docs
        )?;
        for (c, class) in self.classes.iter().enumerate() {
            writeln!(w, "class\t{class}\t{}", self.class_docs[c])?;
        }
        for (g, df) in &self.df {
            write!(w, "ngram\t{g}\t{df}")?;
            for mass in &self.mass {
                write!(w, "\t{}", mass.get(g).copied().unwrap_or(0.0))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut model = NbModel {
            min_n: 0,
            max_n: 0,
            smoothing: 0.0,
            docs: 0,
            df: BTreeMap::new(),
            classes: Vec::new(),
            class_docs: Vec::new(),
            mass: Vec::new(),
        };
        let mut header = false;
        for (i, line) in reader.lines().enumerate() {
            let (n, line) = (i + 1, line?);
            let parts: Vec<&str> = line.split('\t').collect();
            let bad = |what: &str| Error::parse(n, format!("bad {what}"));
            if n == 1 {
                if parts.len() != 5 || parts[0] != "NB" || parts[1] != "v1" {
                    return Err(Error::model("not a Naive Bayes model file"));
                }
                for field in &parts[2..] {
                    match field.split_once('=') {
                        Some(("ngram", v)) => {
                            let (a, b) = v.split_once('-').ok_or_else(|| bad("n-gram range"))?;
                            model.min_n = a.parse().map_err(|_| bad("n-gram range"))?;
                            model.max_n = b.parse().map_err(|_| bad("n-gram range"))?;
                        }
                        Some(("smoothing", v)) => model.smoothing = v.parse().map_err(|_| bad("smoothing"))?,
                        Some(("docs", v)) => model.docs = v.parse().map_err(|_| bad("document count"))?,
                        _ => return Err(bad("header field")),
                    }
                }
                header = true;
                continue;
            }
            match parts.as_slice() {
                ["class", name, count] => {
                    model.classes.push(name.parse()?);
                    model.class_docs.push(count.parse().map_err(|_| bad("class count"))?);
                    model.mass.push(HashMap::new());
                }
                ["ngram", g, df, masses @ ..] if masses.len() == model.classes.len() => {
                    model.df.insert(g.to_string(), df.parse().map_err(|_| bad("document frequency"))?);
                    for (c, m) in masses.iter().enumerate() {
                        let m: f64 = m.parse().map_err(|_| bad("weight"))?;
                        if m != 0.0 {
                            model.mass[c].insert(g.to_string(), m);
                        }
                    }
                }
                [""] => {}
                _ => return Err(Error::parse(n, "expected a `class` or `ngram` line")),
            }
        }
        if !header || model.classes.is_empty() || model.smoothing <= 0.0 || model.min_n == 0 {
            return Err(Error::model("incomplete Naive Bayes model"));
        }
        Ok(model)
    }
}

fn argmax(xs: &[f64], allowed: impl Fn(usize) -> bool) -> usize {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        if allowed(i) && best.is_none_or(|b| x > xs[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

/// Fits class priors and smoothed class-conditional n-gram weights.
pub fn train_nb(records: &[SegLidRecord], n_range: (usize, usize), smoothing: f64) -> Result<NbModel> {
    let (min_n, max_n) = n_range;
    if min_n == 0 || min_n > max_n {
        return Err(Error::Config(format!("invalid n-gram range {min_n}..{max_n}")));
    }
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(Error::Config("smoothing must be positive".into()));
    }
    if records.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty corpus".into()));
    }
    let classes: Vec<NbClass> = records.iter().map(NbClass::of).collect::<BTreeSet<_>>().into_iter().collect();
    let mut model = NbModel {
        min_n,
        max_n,
        smoothing,
        docs: records.len(),
        df: BTreeMap::new(),
        class_docs: vec![0; classes.len()],
        mass: vec![HashMap::new(); classes.len()],
        classes,
    };
    for r in records {
        for g in ngrams(r.token(), min_n, max_n).into_keys() {
            *model.df.entry(g).or_insert(0) += 1;
        }
    }
    for r in records {
        let c = model.classes.iter().position(|&c| c == NbClass::of(r)).expect("class collected above");
        model.class_docs[c] += 1;
        for (g, w) in model.vectorize(r.token()) {
            *model.mass[c].entry(g).or_insert(0.0) += w;
        }
    }
    Ok(model)
}
