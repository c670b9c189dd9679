//! Observation feature templates for the chain tagger.

use std::collections::HashSet;
use std::sync::Arc;

use crate::corpus::LabeledSentence;
use crate::embeddings::ClusterAssignment;
use crate::error::{Error, Result};
use crate::textproc::light_stem;

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

/// Which templates fire. Cluster lookups are named so several granularities
/// (e.g. `coarse` and `fine`) can be combined.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTemplates {
    pub use_current: bool,
    pub prev_window: usize,
    pub next_window: usize,
    pub use_stem: bool,
    pub use_first_char: bool,
    pub use_last_char: bool,
    pub use_pos: bool,
    pub clusters: Vec<(String, Arc<ClusterAssignment>)>,
}

impl Default for FeatureTemplates {
    /// Current word plus one previous word.
    fn default() -> Self {
        Self {
            use_current: true,
            prev_window: 1,
            next_window: 0,
            use_stem: false,
            use_first_char: false,
            use_last_char: false,
            use_pos: false,
            clusters: Vec::new(),
        }
    }
}

impl FeatureTemplates {
    pub fn current_only() -> Self {
        Self {
            prev_window: 0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prev_window > 2 || self.next_window > 2 {
            return Err(Error::Config("context windows are limited to 2 tokens".into()));
        }
        let any = self.use_current
            || self.prev_window > 0
            || self.next_window > 0
            || self.use_stem
            || self.use_first_char
            || self.use_last_char
            || self.use_pos
            || !self.clusters.is_empty();
        if !any {
            return Err(Error::Config("at least one feature template must be enabled".into()));
        }
        Ok(())
    }

    /// `key=value` summary used in model headers.
    pub fn describe(&self) -> Vec<String> {
        vec![
            format!("current={}", self.use_current as u8),
            format!("prev={}", self.prev_window),
            format!("next={}", self.next_window),
            format!("stem={}", self.use_stem as u8),
            format!("first={}", self.use_first_char as u8),
            format!("last={}", self.use_last_char as u8),
            format!("pos={}", self.use_pos as u8),
        ]
    }

    pub(crate) fn apply_description(&mut self, key: &str, value: &str) -> Result<()> {
        let flag = || -> Result<bool> {
            match value {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(Error::model(format!("bad flag `{key}={value}`"))),
            }
        };
        let num = || -> Result<usize> { value.parse().map_err(|_| Error::model(format!("bad `{key}={value}`"))) };
        match key {
            "current" => self.use_current = flag()?,
            "prev" => self.prev_window = num()?,
            "next" => self.next_window = num()?,
            "stem" => self.use_stem = flag()?,
            "first" => self.use_first_char = flag()?,
            "last" => self.use_last_char = flag()?,
            "pos" => self.use_pos = flag()?,
            _ => return Err(Error::model(format!("unknown template `{key}`"))),
        }
        Ok(())
    }
}

/// Feature strings for one position, deduplicated in template order.
pub fn extract_features(sentence: &LabeledSentence, position: usize, cfg: &FeatureTemplates) -> Result<Vec<String>> {
    let tokens = &sentence.tokens;
    if position >= tokens.len() {
        return Err(Error::InvalidInput(format!(
            "position {position} outside a sentence of {} tokens",
            tokens.len()
        )));
    }
    let word = tokens[position].surface.as_str();
    let mut out = Vec::with_capacity(8);
    if cfg.use_current {
        out.push(format!("w0={word}"));
    }
    for d in 1..=cfg.prev_window {
        let w = position.checked_sub(d).map_or(BOS, |i| tokens[i].surface.as_str());
        out.push(format!("w-{d}={w}"));
    }
    for d in 1..=cfg.next_window {
        let w = tokens.get(position + d).map_or(EOS, |t| t.surface.as_str());
        out.push(format!("w+{d}={w}"));
    }
    if cfg.use_stem {
        out.push(format!("stem={}", light_stem(word)));
    }
    if cfg.use_first_char {
        if let Some(c) = word.chars().next() {
            out.push(format!("c_first={c}"));
        }
    }
    if cfg.use_last_char {
        if let Some(c) = word.chars().last() {
            out.push(format!("c_last={c}"));
        }
    }
    if cfg.use_pos {
        let pos = tokens[position].pos.as_deref().ok_or_else(|| {
            Error::InvalidInput(format!("POS feature requested but token {position} (`{word}`) has no POS"))
        })?;
        out.push(format!("pos={pos}"));
    }
    for (name, clusters) in &cfg.clusters {
        out.push(format!("clu:{name}={}", clusters.cluster_id(word)));
    }
    let mut seen = HashSet::with_capacity(out.len());
    out.retain(|f| seen.insert(f.clone()));
    Ok(out)
}
