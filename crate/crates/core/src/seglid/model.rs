//! Trainable log-linear segment scorer (a semi-Markov CRF).

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::features::{segment_features, SegContext};
use super::lattice::Lattice;
use super::{check_token, path_from_record, record_from_path, SegScorer, DEFAULT_MAX_SEG_LEN};
use crate::corpus::{LidLabel, SegLidRecord};
use crate::error::{Error, Result};
use crate::exec;
use crate::math::logsumexp2;
use crate::optim::{self, GradSink, Method, MinimizeConfig};
use crate::textproc::AffixTable;

#[derive(Clone, Debug, PartialEq)]
pub struct SegTrainConfig {
    pub l2_sigma: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub max_seg_len: usize,
    /// Let segment features see the neighbouring tokens.
    pub token_context: bool,
    /// Label set; `None` uses the labels present in the training corpus.
    pub labels: Option<Vec<LidLabel>>,
    pub affixes: AffixTable,
    pub seed: u64,
}

impl Default for SegTrainConfig {
    fn default() -> Self {
        Self {
            l2_sigma: 1.0,
            max_iters: 100,
            tol: 1e-7,
            max_seg_len: DEFAULT_MAX_SEG_LEN,
            token_context: false,
            labels: None,
            affixes: AffixTable::seglid_default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SegTrainReport {
    pub iterations: usize,
    pub objective: Vec<f64>,
    pub converged: bool,
}

/// Weights over `feature x label` plus label-to-label transitions.
#[derive(Clone, Debug)]
pub struct SegLidModel {
    labels: Vec<LidLabel>,
    max_seg_len: usize,
    affixes: AffixTable,
    token_context: bool,
    features: Vec<String>,
    index: HashMap<String, usize>,
    params: Vec<f64>,
}

struct Encoded {
    n: usize,
    spans: Vec<Vec<usize>>,
    gold: Vec<(usize, usize, usize)>,
}

impl SegLidModel {
    pub fn new(
        labels: Vec<LidLabel>,
        max_seg_len: usize,
        affixes: AffixTable,
        token_context: bool,
        features: Vec<String>,
    ) -> Self {
        let index = features.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let nl = labels.len();
        let params = vec![0.0; features.len() * nl + nl * nl];
        Self {
            labels,
            max_seg_len,
            affixes,
            token_context,
            features,
            index,
            params,
        }
    }

    pub fn max_seg_len(&self) -> usize {
        self.max_seg_len
    }

    pub fn affixes(&self) -> &AffixTable {
        &self.affixes
    }

    pub fn token_context(&self) -> bool {
        self.token_context
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn n_labels(&self) -> usize {
        self.labels.len()
    }

    fn trans_offset(&self) -> usize {
        self.features.len() * self.n_labels()
    }

    pub fn state_index(&self, feature: usize, label: usize) -> usize {
        feature * self.n_labels() + label
    }

    pub fn transition_index(&self, from: usize, to: usize) -> usize {
        self.trans_offset() + from * self.n_labels() + to
    }

    pub fn param_name(&self, i: usize) -> String {
        let nl = self.n_labels();
        if i < self.trans_offset() {
            format!("{}|{}", self.features[i / nl], self.labels[i % nl])
        } else {
            let j = i - self.trans_offset();
            format!("TRANS {}->{}", self.labels[j / nl], self.labels[j % nl])
        }
    }

    fn context<'a>(&self, ctx: SegContext<'a>) -> Option<SegContext<'a>> {
        self.token_context.then_some(ctx)
    }

    /// Known feature ids of every span, in lattice order `(i, len)`.
    fn span_features(&self, chars: &[char], ctx: SegContext<'_>) -> Vec<Vec<usize>> {
        let n = chars.len();
        let max_len = self.max_seg_len.min(n);
        let mut out = Vec::with_capacity(n * max_len);
        for i in 0..n {
            for len in 1..=max_len {
                if i + len > n {
                    out.push(Vec::new());
                    continue;
                }
                out.push(
                    segment_features(chars, i, i + len, &self.affixes, self.context(ctx))
                        .iter()
                        .filter_map(|f| self.index.get(f).copied())
                        .collect(),
                );
            }
        }
        out
    }

    fn lattice(&self, params: &[f64], n: usize, spans: &[Vec<usize>]) -> Lattice {
        let nl = self.n_labels();
        let mut lattice = Lattice::zeros(n, self.max_seg_len, nl);
        let max_len = lattice.max_len();
        for i in 0..n {
            for len in 1..=max_len.min(n - i) {
                for &f in &spans[i * max_len + len - 1] {
                    for y in 0..nl {
                        *lattice.span_mut(i, i + len, y) += params[f * nl + y];
                    }
                }
            }
        }
        let to = self.trans_offset();
        lattice.set_transitions(&params[to..to + nl * nl]);
        lattice
    }

    /// Score lattice of a token under the current weights.
    pub fn token_lattice(&self, token: &str, ctx: SegContext<'_>) -> Result<Lattice> {
        let chars = check_token(token)?;
        let spans = self.span_features(&chars, ctx);
        Ok(self.lattice(&self.params, chars.len(), &spans))
    }

    pub fn decode(&self, token: &str, ctx: SegContext<'_>) -> Result<SegLidRecord> {
        let (path, _) = self.token_lattice(token, ctx)?.best();
        record_from_path(token, &self.labels, &path)
    }

    /// Decodes every token of a sentence, each with its neighbours as context.
    pub fn decode_sentence<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<SegLidRecord>> {
        (0..tokens.len())
            .map(|k| self.decode(tokens[k].as_ref(), neighbours(tokens, k)))
            .collect()
    }

    pub fn decode_corpus<S: AsRef<str> + Sync>(&self, sentences: &[Vec<S>]) -> Result<Vec<Vec<SegLidRecord>>> {
        exec::map(sentences, |s| self.decode_sentence(s)).into_iter().collect()
    }

    fn encode(&self, record: &SegLidRecord, ctx: SegContext<'_>) -> Result<Encoded> {
        let chars = check_token(record.token())?;
        if let Some(s) = record.segments().iter().find(|s| s.len > self.max_seg_len) {
            return Err(Error::Segmentation {
                token: record.token().into(),
                message: format!("gold segment of {} characters exceeds the maximum of {}", s.len, self.max_seg_len),
            });
        }
        Ok(Encoded {
            n: chars.len(),
            spans: self.span_features(&chars, ctx),
            gold: path_from_record(&self.labels, record)?,
        })
    }

    fn accumulate(&self, params: &[f64], enc: &Encoded, grad: &mut impl GradSink) -> f64 {
        let nl = self.n_labels();
        let lattice = self.lattice(params, enc.n, &enc.spans);
        let alpha = lattice.forward();
        let beta = lattice.backward();
        let n = enc.n;
        let z = alpha[n * nl..].iter().fold(f64::NEG_INFINITY, |a, &b| logsumexp2(a, b));
        let nll = z - lattice.path_score(&enc.gold);
        let max_len = lattice.max_len();

        for i in 0..n {
            let entering: Vec<f64> = (0..nl)
                .map(|y| if i == 0 { 0.0 } else { lattice.entering(&alpha, i, y) })
                .collect();
            for len in 1..=max_len.min(n - i) {
                let j = i + len;
                let feats = &enc.spans[i * max_len + len - 1];
                for y in 0..nl {
                    let p = (entering[y] + lattice.span(i, j, y) + beta[j * nl + y] - z).exp();
                    for &f in feats {
                        grad.add(f * nl + y, p);
                    }
                }
            }
            if i == 0 {
                continue;
            }
            // segments starting at i, summed over their ends
            let starting: Vec<f64> = (0..nl)
                .map(|y| {
                    (1..=max_len.min(n - i)).fold(f64::NEG_INFINITY, |acc, len| {
                        logsumexp2(acc, lattice.span(i, i + len, y) + beta[(i + len) * nl + y])
                    })
                })
                .collect();
            for from in 0..nl {
                for to in 0..nl {
                    let p = (alpha[i * nl + from] + lattice.trans(from, to) + starting[to] - z).exp();
                    grad.add(self.transition_index(from, to), p);
                }
            }
        }
        for (k, &(i, j, y)) in enc.gold.iter().enumerate() {
            for &f in &enc.spans[i * max_len + (j - i) - 1] {
                grad.add(f * nl + y, -1.0);
            }
            if k > 0 {
                grad.add(self.transition_index(enc.gold[k - 1].2, y), -1.0);
            }
        }
        nll
    }

    /// Negative log-likelihood of a gold record and its gradient.
    pub fn record_nll_grad(&self, record: &SegLidRecord, ctx: SegContext<'_>) -> Result<(f64, Vec<f64>)> {
        let enc = self.encode(record, ctx)?;
        let mut grad = vec![0.0; self.params.len()];
        let nll = self.accumulate(&self.params, &enc, &mut grad);
        Ok((nll, grad))
    }

    fn objective(&self, params: &[f64], data: &[Encoded], sigma: f64, grad: &mut [f64]) -> f64 {
        let (nll, sparse) = exec::map_reduce(
            data,
            (0.0, Vec::new()),
            |_, chunk| {
                let mut g: HashMap<usize, f64> = HashMap::new();
                let nll: f64 = chunk.iter().map(|e| self.accumulate(params, e, &mut g)).sum();
                (nll, vec![g])
            },
            |(a, mut ga), (b, gb)| {
                ga.extend(gb);
                (a + b, ga)
            },
        );
        let inv = 1.0 / (sigma * sigma);
        for (g, &p) in grad.iter_mut().zip(params) {
            *g = p * inv;
        }
        for chunk in &sparse {
            for (&k, &v) in chunk {
                grad[k] += v;
            }
        }
        nll + 0.5 * inv * params.iter().map(|p| p * p).sum::<f64>()
    }
}

fn neighbours<S: AsRef<str>>(tokens: &[S], k: usize) -> SegContext<'_> {
    SegContext {
        prev: k.checked_sub(1).map(|i| tokens[i].as_ref()),
        next: tokens.get(k + 1).map(|t| t.as_ref()),
    }
}

impl SegScorer for SegLidModel {
    fn labels(&self) -> &[LidLabel] {
        &self.labels
    }

    fn max_seg_len(&self) -> usize {
        self.max_seg_len
    }

    fn score(&self, chars: &[char], i: usize, j: usize, label: usize) -> f64 {
        segment_features(chars, i, j, &self.affixes, self.context(SegContext::default()))
            .iter()
            .filter_map(|f| self.index.get(f))
            .map(|&f| self.params[self.state_index(f, label)])
            .sum()
    }

    fn transition(&self, from: usize, to: usize) -> f64 {
        self.params[self.transition_index(from, to)]
    }
}

/// Fits the segment scorer by L-BFGS on the regularized conditional
/// log-likelihood of the gold segmentations.
pub fn train_seglid(corpus: &[Vec<SegLidRecord>], cfg: &SegTrainConfig) -> Result<(SegLidModel, SegTrainReport)> {
    if !(cfg.l2_sigma.is_finite() && cfg.l2_sigma > 0.0) || cfg.max_seg_len == 0 || cfg.max_iters == 0 {
        return Err(Error::Config("sigma, maximum segment length and iterations must be positive".into()));
    }
    let items: Vec<(&SegLidRecord, SegContext<'_>)> = corpus
        .iter()
        .flat_map(|sentence| {
            let tokens: Vec<&str> = sentence.iter().map(|r| r.token()).collect();
            sentence
                .iter()
                .enumerate()
                .map(move |(k, r)| {
                    let ctx = SegContext {
                        prev: k.checked_sub(1).map(|i| tokens[i]),
                        next: tokens.get(k + 1).copied(),
                    };
                    (r, ctx)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    if items.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty corpus".into()));
    }
    let labels = match &cfg.labels {
        Some(l) if !l.is_empty() => l.clone(),
        Some(_) => return Err(Error::Config("label set must not be empty".into())),
        None => {
            let present: std::collections::BTreeSet<LidLabel> =
                items.iter().flat_map(|(r, _)| r.segments().iter().map(|s| s.label)).collect();
            present.into_iter().collect()
        }
    };

    let mut features = Vec::new();
    let mut seen = HashMap::new();
    for (r, ctx) in &items {
        let chars: Vec<char> = r.token().chars().collect();
        for i in 0..chars.len() {
            for j in i + 1..=(i + cfg.max_seg_len).min(chars.len()) {
                let ctx = cfg.token_context.then_some(*ctx);
                for f in segment_features(&chars, i, j, &cfg.affixes, ctx) {
                    if !seen.contains_key(&f) {
                        seen.insert(f.clone(), features.len());
                        features.push(f);
                    }
                }
            }
        }
    }
    let mut model = SegLidModel::new(labels, cfg.max_seg_len, cfg.affixes.clone(), cfg.token_context, features);
    let data = items
        .iter()
        .map(|(r, ctx)| model.encode(r, *ctx))
        .collect::<Result<Vec<_>>>()?;
    log::info!(
        "training segmenter: {} tokens, {} labels, {} features, L={}",
        data.len(),
        model.n_labels(),
        model.features.len(),
        model.max_seg_len
    );
    let mcfg = MinimizeConfig {
        method: Method::Lbfgs,
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        ..Default::default()
    };
    let m = &model;
    let result = optim::minimize(|x, g| m.objective(x, &data, cfg.l2_sigma, g), model.params.clone(), &mcfg);
    model.params = result.x;
    Ok((
        model,
        SegTrainReport {
            iterations: result.iterations,
            objective: result.history,
            converged: result.converged,
        },
    ))
}

const MAGIC: &str = "SEGLID\tv1";

impl SegLidModel {
    /// Text format: header with `L=` and context flag, label and affix lines,
    /// then non-zero `feature<TAB>label<TAB>weight` and
    /// `TRANS<TAB>from<TAB>to<TAB>weight` lines.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}\tL={}\tcontext={}", self.max_seg_len, self.token_context as u8)?;
        let labels: Vec<&str> = self.labels.iter().map(|l| l.as_str()).collect();
        writeln!(w, "labels\t{}", labels.join("\t"))?;
        writeln!(w, "prefixes\t{}", self.affixes.prefixes().join("\t"))?;
        writeln!(w, "suffixes\t{}", self.affixes.suffixes().join("\t"))?;
        writeln!(w, "weights")?;
        let nl = self.n_labels();
        for (f, name) in self.features.iter().enumerate() {
            for (y, label) in labels.iter().enumerate() {
                let v = self.params[self.state_index(f, y)];
                if v != 0.0 {
                    writeln!(w, "{name}\t{label}\t{v}")?;
                }
            }
        }
        for a in 0..nl {
            for b in 0..nl {
                let v = self.params[self.transition_index(a, b)];
                if v != 0.0 {
                    writeln!(w, "TRANS\t{}\t{}\t{v}", labels[a], labels[b])?;
                }
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, line)) => Ok((n, line?)),
                None => Err(Error::model(format!("unexpected end of file, expected {what}"))),
            }
        };
        let (n, header) = next("header")?;
        let rest = header
            .strip_prefix(MAGIC)
            .ok_or_else(|| Error::model("not a segmentation model file"))?;
        let (mut max_len, mut context) = (None, false);
        for field in rest.split('\t').filter(|f| !f.is_empty()) {
            match field.split_once('=') {
                Some(("L", v)) => max_len = v.parse::<usize>().ok().filter(|&l| l > 0),
                Some(("context", v)) => context = v == "1",
                _ => return Err(Error::parse(n, format!("unknown header field `{field}`"))),
            }
        }
        let max_len = max_len.ok_or_else(|| Error::parse(n, "missing or invalid `L=`"))?;
        let mut list = |key: &str| -> Result<Vec<String>> {
            let (n, line) = next(key)?;
            let mut parts = line.split('\t');
            if parts.next() != Some(key) {
                return Err(Error::parse(n, format!("expected `{key}` line")));
            }
            Ok(parts.filter(|p| !p.is_empty()).map(str::to_string).collect())
        };
        let labels = list("labels")?
            .iter()
            .map(|s| s.parse::<LidLabel>())
            .collect::<Result<Vec<_>>>()?;
        if labels.is_empty() {
            return Err(Error::model("empty label set"));
        }
        let affixes = AffixTable::new(list("prefixes")?, list("suffixes")?);
        let (n, line) = next("weights")?;
        if line != "weights" {
            return Err(Error::parse(n, "expected `weights`"));
        }
        let label = |n: usize, s: &str| {
            labels
                .iter()
                .position(|l| l.as_str() == s)
                .ok_or_else(|| Error::parse(n, format!("unknown label `{s}`")))
        };
        let weight = |n: usize, s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(n, format!("bad weight `{s}`")))
        };
        let mut state = Vec::new();
        let mut trans = Vec::new();
        for (n, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            match parts[..] {
                ["TRANS", a, b, v] => trans.push((label(n, a)?, label(n, b)?, weight(n, v)?)),
                [f, y, v] => state.push((f.to_string(), label(n, y)?, weight(n, v)?)),
                _ => return Err(Error::parse(n, "expected a weight line")),
            }
        }
        let mut features = Vec::new();
        let mut seen = HashMap::new();
        for (f, _, _) in &state {
            if !seen.contains_key(f) {
                seen.insert(f.clone(), features.len());
                features.push(f.clone());
            }
        }
        let mut model = SegLidModel::new(labels, max_len, affixes, context, features);
        for (f, y, v) in state {
            let i = model.state_index(seen[&f], y);
            model.params[i] = v;
        }
        for (a, b, v) in trans {
            let i = model.transition_index(a, b);
            model.params[i] = v;
        }
        Ok(model)
    }
}
