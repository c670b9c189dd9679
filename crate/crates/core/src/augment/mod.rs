//! Data augmentation for code-switched NER corpora: EDA, embedding
//! substitution and code-switch-preserving back-translation, with tag
//! projection for rewritten sentences and entity-count bookkeeping.

mod eda;
mod lexicon;
mod substitute;
mod translate;

use std::collections::{BTreeMap, HashMap};

use crate::corpus::{repair_iob, LabeledSentence, Tag, Token};
use crate::crf::SequenceTagger;
use crate::error::Result;
use crate::eval::entity_spans;

pub use eda::{eda_augment, EdaConfig, EdaOp};
pub use lexicon::{Lang, SynonymLexicon};
pub use substitute::{analogies_we_sub, full_we_sub, EntityTypeLists, DEFAULT_RANK};
#[cfg(feature = "http")]
pub use translate::HttpMtClient;
pub use translate::{
    back_translate, validate_chain, DictionaryMtClient, MtClient, Trigger, TriggerTable, CHAIN_FR, CHAIN_FR_DE,
};

/// Seed for the `index`-th sentence of a run, so sentences can be augmented in
/// any order or in parallel with the same result.
pub fn sentence_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Surface to tag of a labeled sentence; the first occurrence wins.
pub fn tag_dict(sentence: &LabeledSentence) -> HashMap<String, Tag> {
    let mut dict = HashMap::new();
    for t in &sentence.tokens {
        dict.entry(t.surface.clone()).or_insert(t.tag);
    }
    dict
}

/// Labels rewritten tokens: known surfaces keep their original tag, others
/// get the fallback tagger's label (or `O`), and the result is repaired to
/// valid IOB.
pub fn project_tags<S: AsRef<str>>(
    tokens: &[S],
    original: &HashMap<String, Tag>,
    fallback: Option<&dyn SequenceTagger>,
) -> Result<LabeledSentence> {
    let mut sentence = LabeledSentence::from_surfaces(tokens.iter().map(|t| t.as_ref()));
    let guessed = match fallback {
        Some(tagger) if tokens.iter().any(|t| !original.contains_key(t.as_ref())) => Some(tagger.tag(&sentence)?),
        _ => None,
    };
    let mut tags: Vec<Tag> = sentence
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            original
                .get(&t.surface)
                .copied()
                .or_else(|| guessed.as_ref().and_then(|g| g.get(i).copied()))
                .unwrap_or(Tag::O)
        })
        .collect();
    repair_iob(&mut tags);
    sentence.tokens = sentence
        .tokens
        .into_iter()
        .zip(tags)
        .map(|(t, tag)| Token { tag, ..t })
        .collect();
    Ok(sentence)
}

/// Entity spans per type name.
pub fn entity_counts(corpus: &[LabeledSentence]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for s in corpus {
        for (_, _, ty) in entity_spans(&s.tags()) {
            *counts.entry(ty.to_string()).or_insert(0) += 1;
        }
    }
    counts
}

pub const TOTAL: &str = "Total";

/// `after / before` per type plus a `Total` row over summed counts. `None`
/// marks a type that had no entities before.
pub fn increase_factor(
    before: &BTreeMap<String, usize>,
    after: &BTreeMap<String, usize>,
) -> BTreeMap<String, Option<f64>> {
    let ratio = |b: usize, a: usize| (b > 0).then(|| a as f64 / b as f64);
    let mut out: BTreeMap<String, Option<f64>> = before
        .keys()
        .chain(after.keys())
        .map(|k| {
            let b = before.get(k).copied().unwrap_or(0);
            let a = after.get(k).copied().unwrap_or(0);
            (k.clone(), ratio(b, a))
        })
        .collect();
    out.insert(TOTAL.into(), ratio(before.values().sum(), after.values().sum()));
    out
}
