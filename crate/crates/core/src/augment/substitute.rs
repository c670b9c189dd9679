//! Word-embedding substitution: entities by analogy, other words by a ranked
//! nearest neighbour.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{EntityType, LabeledSentence};
use crate::embeddings::EmbeddingTable;
use crate::textproc::detect_script;

pub const DEFAULT_RANK: usize = 5;

/// Entity surfaces per type, in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntityTypeLists {
    lists: BTreeMap<EntityType, Vec<String>>,
}

impl EntityTypeLists {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_corpus(corpus: &[LabeledSentence]) -> Self {
        let mut lists = Self::new();
        for s in corpus {
            for t in &s.tokens {
                if let Some(ty) = t.tag.entity_type() {
                    lists.insert(ty, &t.surface);
                }
            }
        }
        lists
    }

    pub fn insert(&mut self, ty: EntityType, surface: &str) {
        let list = self.lists.entry(ty).or_default();
        if !list.iter().any(|s| s == surface) {
            list.push(surface.to_string());
        }
    }

    pub fn get(&self, ty: EntityType) -> &[String] {
        self.lists.get(&ty).map_or(&[], Vec::as_slice)
    }
}

/// Replaces one entity token through `analogy(a, b, token)`, with `a` and `b`
/// two distinct random in-vocabulary members of its type list written in the
/// token's script. Returns `None` when that is impossible.
fn analogy_replacement(
    token: &str,
    ty: EntityType,
    lists: &EntityTypeLists,
    emb: &EmbeddingTable,
    rng: &mut ChaCha8Rng,
) -> Option<String> {
    let script = detect_script(token).ok()?;
    let pool: Vec<&String> = lists
        .get(ty)
        .iter()
        .filter(|w| emb.contains(w) && detect_script(w).ok() == Some(script))
        .collect();
    if pool.len() < 2 {
        log::warn!("fewer than two {ty} entities in {script} script with vectors; `{token}` kept");
        return None;
    }
    let picks = sample(rng, pool.len(), 2);
    let (a, b) = (pool[picks.index(0)], pool[picks.index(1)]);
    match emb.analogy(a, b, token) {
        Ok(w) => Some(w),
        Err(e) => {
            log::warn!("no analogy for `{token}`: {e}");
            None
        }
    }
}

/// Entity tokens replaced by analogy; everything else untouched.
pub fn analogies_we_sub(
    sentence: &LabeledSentence,
    lists: &EntityTypeLists,
    emb: &EmbeddingTable,
    seed: u64,
) -> LabeledSentence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = sentence.clone();
    for t in &mut out.tokens {
        if let Some(ty) = t.tag.entity_type() {
            if let Some(w) = analogy_replacement(&t.surface, ty, lists, emb, &mut rng) {
                t.surface = w;
            }
        }
    }
    out
}

/// Entities as in [`analogies_we_sub`]; every other in-vocabulary word becomes
/// its `rank`-th nearest neighbour (the deepest one available when fewer exist).
pub fn full_we_sub(
    sentence: &LabeledSentence,
    lists: &EntityTypeLists,
    emb: &EmbeddingTable,
    rank: usize,
    seed: u64,
) -> LabeledSentence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = sentence.clone();
    for t in &mut out.tokens {
        if let Some(ty) = t.tag.entity_type() {
            if let Some(w) = analogy_replacement(&t.surface, ty, lists, emb, &mut rng) {
                t.surface = w;
            }
            continue;
        }
        match emb.nearest(&t.surface, rank.max(1), &[]) {
            Ok(neighbours) => {
                if let Some((w, _)) = neighbours.last() {
                    t.surface = w.clone();
                }
            }
            Err(e) => log::warn!("`{}` kept: {e}", t.surface),
        }
    }
    out
}
