//! Corpus formats and corpus-level operations.
//!
//! Two formats are supported: CoNLL-style IOB files for named-entity data
//! ([`conll`]) and `token ||| LABEL:len ...` records for intra-word language
//! identification ([`seglid`]).

pub mod conll;
pub mod seglid;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use conll::{
    is_well_formed, read_conll, read_conll_lenient, repair_iob, validate_iob, write_conll, EntityType,
    LabeledSentence, Tag, Token,
};
pub use seglid::{
    corpus_stats, read_seglid, write_seglid, LidLabel, SegLidRecord, Segment, StatsReport,
};

/// Column or label convention a corpus follows. Corpora can only be pooled when
/// their schemes agree.
pub trait Scheme {
    /// `None` when the items do not constrain the scheme (e.g. an empty corpus).
    fn scheme(items: &[Self]) -> Result<Option<&'static str>>
    where
        Self: Sized;
}

/// Concatenates corpora in order after checking that their schemes agree.
pub fn pool_corpora<T: Scheme>(corpora: Vec<Vec<T>>) -> Result<Vec<T>> {
    let mut seen: Option<&'static str> = None;
    for (i, corpus) in corpora.iter().enumerate() {
        if let Some(s) = T::scheme(corpus)? {
            match seen {
                Some(prev) if prev != s => {
                    return Err(Error::InvalidInput(format!(
                        "corpus {i} uses scheme `{s}` but earlier corpora use `{prev}`"
                    )))
                }
                _ => seen = Some(s),
            }
        }
    }
    Ok(corpora.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = Self { train, val, test };
        let ok = [train, val, test].iter().all(|x| x.is_finite() && *x > 0.0)
            && (train + val + test - 1.0).abs() < 1e-9;
        if ok {
            Ok(r)
        } else {
            Err(Error::Config(format!(
                "split fractions must be positive and sum to 1, got ({train}, {val}, {test})"
            )))
        }
    }
}

/// Seeded shuffle-and-cut into train/validation/test. Each part keeps the
/// original corpus order.
pub fn split<T: Clone>(corpus: &[T], ratios: SplitRatios, seed: u64) -> (Vec<T>, Vec<T>, Vec<T>) {
    let n = corpus.len();
    let n_train = ((n as f64 * ratios.train).round() as usize).min(n);
    let n_val = ((n as f64 * ratios.val).round() as usize).min(n - n_train);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |part: &[usize]| {
        let mut part = part.to_vec();
        part.sort_unstable();
        part.into_iter().map(|i| corpus[i].clone()).collect::<Vec<_>>()
    };
    (
        pick(&idx[..n_train]),
        pick(&idx[n_train..n_train + n_val]),
        pick(&idx[n_train + n_val..]),
    )
}
