//! Easy data augmentation adapted to IOB-tagged code-switched sentences.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lexicon::SynonymLexicon;
use crate::corpus::{repair_iob, LabeledSentence, Tag, Token};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdaOp {
    /// Synonym replacement.
    Sr,
    /// Random insertion of a synonym.
    Ri,
    /// Random swap.
    Rs,
    /// Random deletion.
    Rd,
}

impl EdaOp {
    pub const ALL: [EdaOp; 4] = [EdaOp::Sr, EdaOp::Ri, EdaOp::Rs, EdaOp::Rd];
}

impl fmt::Display for EdaOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdaOp::Sr => "SR",
            EdaOp::Ri => "RI",
            EdaOp::Rs => "RS",
            EdaOp::Rd => "RD",
        })
    }
}

impl FromStr for EdaOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SR" => Ok(EdaOp::Sr),
            "RI" => Ok(EdaOp::Ri),
            "RS" => Ok(EdaOp::Rs),
            "RD" => Ok(EdaOp::Rd),
            _ => Err(Error::Config(format!("unknown EDA operation `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdaConfig {
    /// Fraction of the words edited per variant.
    pub alpha: f64,
    pub num_aug: usize,
    pub ops: Vec<EdaOp>,
    pub rd_prob: f64,
    pub seed: u64,
}

impl Default for EdaConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            num_aug: 4,
            ops: EdaOp::ALL.to_vec(),
            rd_prob: 0.1,
            seed: 0,
        }
    }
}

impl EdaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.rd_prob) {
            return Err(Error::Config(format!("deletion probability must be in [0, 1], got {}", self.rd_prob)));
        }
        if self.num_aug == 0 || self.ops.is_empty() {
            return Err(Error::Config("num_aug and the operation list must be non-empty".into()));
        }
        Ok(())
    }

    /// Edits per variant for a sentence of `len` tokens.
    pub fn edits(&self, len: usize) -> usize {
        ((self.alpha * len as f64).round() as usize).max(1)
    }

    /// Operation used by each variant: round-robin, so earlier operations get
    /// the remainder when `num_aug` is not a multiple of the operation count.
    pub fn schedule(&self) -> Vec<EdaOp> {
        (0..self.num_aug).map(|k| self.ops[k % self.ops.len()]).collect()
    }
}

/// Synonyms of `word` ranked by embedding similarity, most similar first;
/// synonyms without a vector follow, and ties are broken by spelling.
fn ranked_synonyms(word: &str, lex: &SynonymLexicon, emb: &EmbeddingTable) -> Vec<String> {
    let Some(syns) = lex.synonyms(word) else {
        return Vec::new();
    };
    let mut scored: Vec<(Option<f64>, &String)> = syns.iter().map(|s| (emb.cosine(word, s).ok(), s)).collect();
    scored.sort_by(|a, b| match (a.0, b.0) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.1.cmp(b.1)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.1.cmp(b.1),
    });
    scored.into_iter().map(|(_, s)| s.clone()).collect()
}

struct Editor<'a> {
    lex: &'a SynonymLexicon,
    emb: &'a EmbeddingTable,
    rng: ChaCha8Rng,
    /// How often each word has been replaced so far in this call.
    replaced: HashMap<String, usize>,
}

impl Editor<'_> {
    fn synonym_replace(&mut self, tokens: &mut [Token], n: usize) {
        let mut order: Vec<usize> = (0..tokens.len()).collect();
        order.shuffle(&mut self.rng);
        let mut done = 0;
        for i in order {
            if done == n {
                break;
            }
            let word = tokens[i].surface.clone();
            let ranked = ranked_synonyms(&word, self.lex, self.emb);
            if ranked.is_empty() {
                continue;
            }
            let k = self.replaced.entry(word).or_insert(0);
            tokens[i].surface = ranked[*k % ranked.len()].clone();
            *k += 1;
            done += 1;
        }
    }

    fn random_insert(&mut self, tokens: &mut Vec<Token>, n: usize) {
        for _ in 0..n {
            let mut synonym = None;
            for _ in 0..10 {
                let i = self.rng.gen_range(0..tokens.len());
                if let Some(syns) = self.lex.synonyms(&tokens[i].surface) {
                    synonym = syns.choose(&mut self.rng).cloned();
                    break;
                }
            }
            let Some(word) = synonym else { continue };
            // never split an entity
            let slots: Vec<usize> = (0..=tokens.len())
                .filter(|&p| !matches!(tokens.get(p).map(|t| t.tag), Some(Tag::I(_))))
                .collect();
            let p = *slots.choose(&mut self.rng).expect("the end slot is always free");
            tokens.insert(p, Token::new(word, Tag::O));
        }
    }

    fn random_swap(&mut self, tokens: &mut [Token], n: usize) {
        if tokens.len() < 2 {
            return;
        }
        for _ in 0..n {
            let i = self.rng.gen_range(0..tokens.len());
            let mut j = self.rng.gen_range(0..tokens.len() - 1);
            if j >= i {
                j += 1;
            }
            tokens.swap(i, j);
        }
    }

    fn random_delete(&mut self, tokens: &mut Vec<Token>, p: f64) {
        let original = tokens.clone();
        tokens.retain(|t| !t.tag.is_outside() || !self.rng.gen_bool(p));
        if tokens.is_empty() {
            tokens.push(original.choose(&mut self.rng).expect("non-empty sentence").clone());
        }
    }
}

/// Produces exactly `cfg.num_aug` variants of `sentence`. Edits whose word has
/// no synonym are skipped.
pub fn eda_augment(
    sentence: &LabeledSentence,
    cfg: &EdaConfig,
    lex: &SynonymLexicon,
    emb: &EmbeddingTable,
) -> Result<Vec<LabeledSentence>> {
    cfg.validate()?;
    if sentence.is_empty() {
        return Err(Error::InvalidInput("cannot augment an empty sentence".into()));
    }
    let n = cfg.edits(sentence.len());
    let mut editor = Editor {
        lex,
        emb,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        replaced: HashMap::new(),
    };
    let mut out = Vec::with_capacity(cfg.num_aug);
    for op in cfg.schedule() {
        let mut tokens = sentence.tokens.clone();
        match op {
            EdaOp::Sr => editor.synonym_replace(&mut tokens, n),
            EdaOp::Ri => editor.random_insert(&mut tokens, n),
            EdaOp::Rs => editor.random_swap(&mut tokens, n),
            EdaOp::Rd => editor.random_delete(&mut tokens, cfg.rd_prob),
        }
        let mut tags: Vec<Tag> = tokens.iter().map(|t| t.tag).collect();
        repair_iob(&mut tags);
        for (t, tag) in tokens.iter_mut().zip(tags) {
            t.tag = tag;
        }
        out.push(LabeledSentence::new(tokens));
    }
    Ok(out)
}
