//! Linear-chain CRF named-entity tagger.
//!
//! Parameters live in one flat vector: state weights (`feature x label`), then
//! label-to-label transitions, then start and end transitions. Training
//! minimizes the L2-regularized negative log-likelihood
//! `sum_i -log p(y_i | x_i) + |theta|^2 / (2 sigma^2)`.

pub mod features;
pub mod inference;
mod io;
mod route;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabeledSentence, Tag};
use crate::error::{Error, Result};
use crate::exec;
use crate::optim::{self, GradSink, Method, MinimizeConfig};

pub use features::{extract_features, FeatureTemplates};
pub use inference::{viterbi, ChainScores, ForwardBackward};
pub use route::{route_tag, SequenceTagger};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Optimizer {
    /// Full-batch L-BFGS with backtracking line search.
    Lbfgs,
    /// Full-batch steepest descent with backtracking line search.
    GradientDescent,
    /// Shuffled per-sentence updates with a decaying learning rate.
    Sgd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub l2_sigma: f64,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2_sigma: 1.0,
            optimizer: Optimizer::Lbfgs,
            learning_rate: 0.1,
            max_epochs: 200,
            tol: 1e-7,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.l2_sigma, self.learning_rate, self.tol];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) || self.max_epochs == 0 {
            return Err(Error::Config(
                "sigma, learning rate, tolerance and max epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CrfModel {
    labels: Vec<Tag>,
    templates: FeatureTemplates,
    features: Vec<String>,
    feature_index: HashMap<String, usize>,
    params: Vec<f64>,
}

/// A sentence with features already mapped to indices.
struct Encoded {
    features: Vec<Vec<usize>>,
    gold: Vec<usize>,
}

impl CrfModel {
    /// Model with all weights zero.
    pub fn new(labels: Vec<Tag>, templates: FeatureTemplates, features: Vec<String>) -> Self {
        let feature_index = features.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let l = labels.len();
        let params = vec![0.0; features.len() * l + l * l + 2 * l];
        Self {
            labels,
            templates,
            features,
            feature_index,
            params,
        }
    }

    pub fn labels(&self) -> &[Tag] {
        &self.labels
    }

    pub fn templates(&self) -> &FeatureTemplates {
        &self.templates
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

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    fn trans_offset(&self) -> usize {
        self.features.len() * self.n_labels()
    }

    fn start_offset(&self) -> usize {
        self.trans_offset() + self.n_labels() * self.n_labels()
    }

    fn end_offset(&self) -> usize {
        self.start_offset() + self.n_labels()
    }

    pub fn state_index(&self, feature: usize, label: usize) -> usize {
        feature * self.n_labels() + label
    }

    pub fn transition_index(&self, from: usize, to: usize) -> usize {
        self.trans_offset() + from * self.n_labels() + to
    }

    pub fn start_index(&self, label: usize) -> usize {
        self.start_offset() + label
    }

    pub fn end_index(&self, label: usize) -> usize {
        self.end_offset() + label
    }

    /// Human-readable name of a parameter index.
    pub fn param_name(&self, i: usize) -> String {
        let l = self.n_labels();
        if i < self.trans_offset() {
            format!("{}|{}", self.features[i / l], self.labels[i % l])
        } else if i < self.start_offset() {
            let j = i - self.trans_offset();
            format!("TRANS {}->{}", self.labels[j / l], self.labels[j % l])
        } else if i < self.end_offset() {
            format!("TRANS <BOS>->{}", self.labels[i - self.start_offset()])
        } else {
            format!("TRANS {}-><EOS>", self.labels[i - self.end_offset()])
        }
    }

    pub fn state_weight(&self, feature: &str, label: Tag) -> f64 {
        match (self.feature_index.get(feature), self.label_index(label)) {
            (Some(&f), Some(y)) => self.params[self.state_index(f, y)],
            _ => 0.0,
        }
    }

    pub fn label_index(&self, tag: Tag) -> Option<usize> {
        self.labels.iter().position(|&l| l == tag)
    }

    fn feature_ids(&self, sentence: &LabeledSentence) -> Result<Vec<Vec<usize>>> {
        (0..sentence.len())
            .map(|t| {
                Ok(extract_features(sentence, t, &self.templates)?
                    .iter()
                    .filter_map(|f| self.feature_index.get(f).copied())
                    .collect())
            })
            .collect()
    }

    fn chain_scores(&self, params: &[f64], feats: &[Vec<usize>]) -> ChainScores {
        let l = self.n_labels();
        let mut emissions = vec![0.0; feats.len() * l];
        for (t, fs) in feats.iter().enumerate() {
            let row = &mut emissions[t * l..(t + 1) * l];
            for &f in fs {
                let w = &params[f * l..(f + 1) * l];
                row.iter_mut().zip(w).for_each(|(r, x)| *r += x);
            }
        }
        let (to, so, eo) = (self.trans_offset(), self.start_offset(), self.end_offset());
        ChainScores {
            n_labels: l,
            emissions,
            transitions: params[to..so].to_vec(),
            start: params[so..eo].to_vec(),
            end: params[eo..eo + l].to_vec(),
        }
    }

    /// Log-potentials of a sentence under the current weights. Unknown features
    /// contribute nothing.
    pub fn scores(&self, sentence: &LabeledSentence) -> Result<ChainScores> {
        Ok(self.chain_scores(&self.params, &self.feature_ids(sentence)?))
    }

    /// Viterbi labeling.
    pub fn decode(&self, sentence: &LabeledSentence) -> Result<Vec<Tag>> {
        if sentence.is_empty() {
            return Ok(Vec::new());
        }
        let (path, _) = viterbi(&self.scores(sentence)?);
        Ok(path.into_iter().map(|y| self.labels[y]).collect())
    }

    /// Viterbi labeling of many sentences.
    pub fn decode_batch(&self, sentences: &[LabeledSentence]) -> Result<Vec<Vec<Tag>>> {
        exec::map(sentences, |s| self.decode(s)).into_iter().collect()
    }

    /// Per-position label distributions and the log-partition.
    pub fn marginals(&self, sentence: &LabeledSentence) -> Result<(Vec<Vec<f64>>, f64)> {
        let scores = self.scores(sentence)?;
        let fb = ForwardBackward::new(&scores);
        Ok((fb.marginals(sentence.len()), fb.log_z))
    }

    fn encode(&self, sentence: &LabeledSentence) -> Result<Encoded> {
        let gold = sentence
            .tokens
            .iter()
            .map(|t| {
                self.label_index(t.tag)
                    .ok_or_else(|| Error::InvalidInput(format!("tag {} is not in the model's label set", t.tag)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Encoded {
            features: self.feature_ids(sentence)?,
            gold,
        })
    }

    /// Adds `scale * (expected - empirical)` counts to `grad` and returns the NLL.
    fn accumulate(&self, params: &[f64], enc: &Encoded, grad: &mut impl GradSink) -> f64 {
        let n = enc.gold.len();
        if n == 0 {
            return 0.0;
        }
        let l = self.n_labels();
        let scores = self.chain_scores(params, &enc.features);
        let fb = ForwardBackward::new(&scores);
        let nll = fb.log_z - scores.path_score(&enc.gold);

        for t in 0..n {
            let p: Vec<f64> = (0..l).map(|y| fb.node_marginal(t, y)).collect();
            for &f in &enc.features[t] {
                for (y, &py) in p.iter().enumerate() {
                    grad.add(self.state_index(f, y), py);
                }
                grad.add(self.state_index(f, enc.gold[t]), -1.0);
            }
            if t == 0 {
                for (y, &py) in p.iter().enumerate() {
                    grad.add(self.start_index(y), py);
                }
                grad.add(self.start_index(enc.gold[0]), -1.0);
            }
            if t == n - 1 {
                for (y, &py) in p.iter().enumerate() {
                    grad.add(self.end_index(y), py);
                }
                grad.add(self.end_index(enc.gold[n - 1]), -1.0);
            }
            if t > 0 {
                for from in 0..l {
                    for to in 0..l {
                        grad.add(self.transition_index(from, to), fb.edge_marginal(&scores, t, from, to));
                    }
                }
                grad.add(self.transition_index(enc.gold[t - 1], enc.gold[t]), -1.0);
            }
        }
        nll
    }

    /// Negative log-likelihood of the gold tags and its gradient with respect to
    /// every parameter (expected minus empirical feature counts).
    pub fn sequence_nll_grad(&self, sentence: &LabeledSentence) -> Result<(f64, Vec<f64>)> {
        let enc = self.encode(sentence)?;
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

/// Training trace returned next to the model.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub iterations: usize,
    pub objective: Vec<f64>,
    pub converged: bool,
}

/// Fits a CRF by maximum regularized likelihood.
pub fn train_crf(corpus: &[LabeledSentence], tcfg: &TrainConfig, fcfg: &FeatureTemplates) -> Result<(CrfModel, TrainReport)> {
    tcfg.validate()?;
    fcfg.validate()?;
    if corpus.iter().all(LabeledSentence::is_empty) {
        return Err(Error::InvalidInput("cannot train on an empty corpus".into()));
    }
    crate::corpus::validate_iob(corpus)?;

    let present: std::collections::BTreeSet<Tag> = corpus.iter().flat_map(|s| s.tags()).collect();
    let labels: Vec<Tag> = Tag::all().into_iter().filter(|t| present.contains(t)).collect();
    let mut features = Vec::new();
    let mut seen = HashMap::new();
    for s in corpus {
        for t in 0..s.len() {
            for f in extract_features(s, t, fcfg)? {
                if !seen.contains_key(&f) {
                    seen.insert(f.clone(), features.len());
                    features.push(f);
                }
            }
        }
    }
    let mut model = CrfModel::new(labels, fcfg.clone(), features);
    let data = corpus
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| model.encode(s))
        .collect::<Result<Vec<_>>>()?;
    log::info!(
        "training CRF: {} sentences, {} labels, {} features, {} parameters",
        data.len(),
        model.n_labels(),
        model.features.len(),
        model.params.len()
    );

    let report = match tcfg.optimizer {
        Optimizer::Lbfgs | Optimizer::GradientDescent => {
            let cfg = MinimizeConfig {
                method: if tcfg.optimizer == Optimizer::Lbfgs {
                    Method::Lbfgs
                } else {
                    Method::GradientDescent
                },
                max_iters: tcfg.max_epochs,
                tol: tcfg.tol,
                initial_step: tcfg.learning_rate,
                ..Default::default()
            };
            let x0 = model.params.clone();
            let m = &model;
            let result = optim::minimize(|x, g| m.objective(x, &data, tcfg.l2_sigma, g), x0, &cfg);
            model.params = result.x;
            TrainReport {
                iterations: result.iterations,
                objective: result.history,
                converged: result.converged,
            }
        }
        Optimizer::Sgd => sgd(&mut model, &data, tcfg),
    };
    Ok((model, report))
}

fn sgd(model: &mut CrfModel, data: &[Encoded], tcfg: &TrainConfig) -> TrainReport {
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let n = data.len() as f64;
    let inv = 1.0 / (tcfg.l2_sigma * tcfg.l2_sigma);
    let mut objective = Vec::new();
    let mut grad: HashMap<usize, f64> = HashMap::new();
    for epoch in 0..tcfg.max_epochs {
        order.shuffle(&mut rng);
        let lr = tcfg.learning_rate / (1.0 + epoch as f64);
        let mut total = 0.0;
        for &i in &order {
            grad.clear();
            total += model.accumulate(&model.params, &data[i], &mut grad);
            // regularizer spread evenly over the sentences of an epoch
            let decay = 1.0 - lr * inv / n;
            model.params.iter_mut().for_each(|p| *p *= decay);
            let mut entries: Vec<(usize, f64)> = grad.iter().map(|(&k, &v)| (k, v)).collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (k, v) in entries {
                model.params[k] -= lr * v;
            }
        }
        total += 0.5 * inv * model.params.iter().map(|p| p * p).sum::<f64>();
        let done = objective
            .last()
            .is_some_and(|&prev: &f64| (prev - total).abs() <= tcfg.tol * total.abs().max(1.0));
        objective.push(total);
        if done {
            return TrainReport {
                iterations: epoch + 1,
                objective,
                converged: true,
            };
        }
    }
    TrainReport {
        iterations: tcfg.max_epochs,
        objective,
        converged: false,
    }
}

impl SequenceTagger for CrfModel {
    fn tag(&self, sentence: &LabeledSentence) -> Result<Vec<Tag>> {
        self.decode(sentence)
    }
}
