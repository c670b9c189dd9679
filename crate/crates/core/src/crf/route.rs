//! Script-routed tagging: each token is handed to the model trained for its
//! script, with the whole sentence as context.

use std::collections::BTreeMap;

use crate::corpus::{repair_iob, LabeledSentence, Tag};
use crate::error::{Error, Result};
use crate::textproc::{detect_script, Script};

pub trait SequenceTagger: Sync {
    fn tag(&self, sentence: &LabeledSentence) -> Result<Vec<Tag>>;
}

/// Tags every token with the model registered for its script. Scripts without
/// a model fall back to `default` (an error when that is `None`). Each model
/// sees the full sentence; only the labels of its own tokens are kept, and the
/// merged sequence is repaired to valid IOB.
pub fn route_tag(
    sentence: &LabeledSentence,
    models: &BTreeMap<Script, &dyn SequenceTagger>,
    default: Option<Script>,
) -> Result<Vec<Tag>> {
    let mut routes = Vec::with_capacity(sentence.len());
    for token in &sentence.tokens {
        let script = detect_script(&token.surface)?;
        let route = if models.contains_key(&script) {
            script
        } else {
            match default {
                Some(d) if models.contains_key(&d) => d,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "no model for {script} token `{}` and no usable default",
                        token.surface
                    )))
                }
            }
        };
        routes.push(route);
    }
    let mut tags = vec![Tag::O; sentence.len()];
    for (script, model) in models {
        if !routes.contains(script) {
            continue;
        }
        let predicted = model.tag(sentence)?;
        if predicted.len() != sentence.len() {
            return Err(Error::LengthMismatch {
                expected: sentence.len(),
                actual: predicted.len(),
            });
        }
        for (i, r) in routes.iter().enumerate() {
            if r == script {
                tags[i] = predicted[i];
            }
        }
    }
    repair_iob(&mut tags);
    Ok(tags)
}
