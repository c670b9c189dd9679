//! Intra-word language identification.
//!
//! Each token is jointly segmented and labeled by a semi-Markov model: a
//! labeled segmentation scores `sum score(segment) + sum transition(prev, next)`
//! and decoding/partition run exact max/sum dynamic programs over all
//! segmentations with segment length at most `L`. [`SegLidModel`] provides a
//! trainable log-linear segment scorer; [`NbModel`] is the whole-token
//! Naive Bayes baseline.

mod features;
mod lattice;
mod model;
mod nb;

use crate::corpus::{LidLabel, SegLidRecord, Segment};
use crate::error::{Error, Result};

pub use features::{segment_features, SegContext};
pub use lattice::Lattice;
pub use model::{train_seglid, SegLidModel, SegTrainConfig, SegTrainReport};
pub use nb::{train_nb, NbClass, NbModel};

/// Tokens longer than this many characters are rejected.
pub const HARD_CAP: usize = 4096;
pub const DEFAULT_MAX_SEG_LEN: usize = 20;

/// Scores labeled segments of a token. Labels are addressed by their index in
/// [`SegScorer::labels`], which also fixes the tie-breaking order.
pub trait SegScorer {
    fn labels(&self) -> &[LidLabel];
    fn max_seg_len(&self) -> usize;
    /// Score of `chars[i..j)` carrying label `label`.
    fn score(&self, chars: &[char], i: usize, j: usize, label: usize) -> f64;
    fn transition(&self, from: usize, to: usize) -> f64;
}

pub(crate) fn check_token(token: &str) -> Result<Vec<char>> {
    let chars: Vec<char> = token.chars().collect();
    if chars.is_empty() {
        return Err(Error::Segmentation {
            token: token.into(),
            message: "empty token".into(),
        });
    }
    if chars.len() > HARD_CAP {
        return Err(Error::Segmentation {
            token: token.chars().take(32).collect::<String>() + "...",
            message: format!("{} characters exceeds the limit of {HARD_CAP}", chars.len()),
        });
    }
    Ok(chars)
}

fn check_scorer<S: SegScorer + ?Sized>(scorer: &S) -> Result<()> {
    if scorer.labels().is_empty() || scorer.max_seg_len() == 0 {
        return Err(Error::Config("scorer needs at least one label and a positive maximum segment length".into()));
    }
    Ok(())
}

/// Highest-scoring labeled segmentation. Ties prefer fewer segments, then
/// earlier labels.
pub fn decode_segmental<S: SegScorer + ?Sized>(scorer: &S, token: &str) -> Result<SegLidRecord> {
    check_scorer(scorer)?;
    let chars = check_token(token)?;
    let lattice = Lattice::build(scorer, &chars);
    let (path, _) = lattice.best();
    record_from_path(token, scorer.labels(), &path)
}

/// Log of the summed exponentiated scores of every labeled segmentation.
pub fn partition_segmental<S: SegScorer + ?Sized>(scorer: &S, token: &str) -> Result<f64> {
    check_scorer(scorer)?;
    let chars = check_token(token)?;
    Ok(Lattice::build(scorer, &chars).log_partition())
}

/// Score of a given labeled segmentation under `scorer`.
pub fn record_score<S: SegScorer + ?Sized>(scorer: &S, record: &SegLidRecord) -> Result<f64> {
    let chars: Vec<char> = record.token().chars().collect();
    let path = path_from_record(scorer.labels(), record)?;
    let mut total = 0.0;
    for (k, &(i, j, y)) in path.iter().enumerate() {
        if k > 0 {
            total += scorer.transition(path[k - 1].2, y);
        }
        total += scorer.score(&chars, i, j, y);
    }
    Ok(total)
}

/// `(start, end, label index)` triples of a record.
pub(crate) fn path_from_record(labels: &[LidLabel], record: &SegLidRecord) -> Result<Vec<(usize, usize, usize)>> {
    record
        .spans()
        .into_iter()
        .zip(record.segments())
        .map(|((i, j), s)| {
            let y = labels.iter().position(|&l| l == s.label).ok_or_else(|| Error::Segmentation {
                token: record.token().into(),
                message: format!("label {} is not in the label set", s.label),
            })?;
            Ok((i, j, y))
        })
        .collect()
}

pub(crate) fn record_from_path(token: &str, labels: &[LidLabel], path: &[(usize, usize, usize)]) -> Result<SegLidRecord> {
    SegLidRecord::new(token, path.iter().map(|&(i, j, y)| Segment::new(labels[y], j - i)).collect())
}

/// Rewrites `NE.AR` and `NE.EN` to language-neutral `NE`.
pub fn coarse_ne_transform(corpus: &[Vec<SegLidRecord>]) -> Vec<Vec<SegLidRecord>> {
    corpus
        .iter()
        .map(|s| s.iter().map(|r| r.map_labels(LidLabel::coarse)).collect())
        .collect()
}
