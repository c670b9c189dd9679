use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use anyhow::{Context, Result};
use cstk::augment::{
    analogies_we_sub, back_translate, eda_augment, entity_counts, full_we_sub, increase_factor, project_tags,
    sentence_seed, tag_dict, DictionaryMtClient, EdaConfig, EdaOp, EntityTypeLists, MtClient, SynonymLexicon,
    TriggerTable, CHAIN_FR, CHAIN_FR_DE, TOTAL,
};
use cstk::corpus::{read_conll, write_conll, LabeledSentence};
use cstk::crf::{CrfModel, SequenceTagger};
use cstk::embeddings::{load_embeddings, EmbeddingTable};
use log::warn;

use crate::args::{AugmentArgs, AugmentMethod};
use crate::io::{open_input, open_output};
use crate::ner::load_crf;
use crate::UsageError;

fn embeddings(a: &AugmentArgs, required: bool) -> Result<EmbeddingTable> {
    match &a.embeddings {
        Some(p) => load_embeddings(open_input(p)?).with_context(|| format!("reading `{}`", p.display())),
        None if required => Err(UsageError("this method needs --embeddings".into()).into()),
        None => Ok(EmbeddingTable::new()),
    }
}

fn mt_client(a: &AugmentArgs) -> Result<Box<dyn MtClient>> {
    match (&a.mt_dict, &a.mt_endpoint) {
        (Some(p), _) => {
            let client = DictionaryMtClient::read(open_input(p)?).with_context(|| format!("reading `{}`", p.display()))?;
            Ok(Box::new(client))
        }
        #[cfg(feature = "http")]
        (None, Some(url)) => Ok(Box::new(cstk::augment::HttpMtClient::new(url.clone()))),
        #[cfg(not(feature = "http"))]
        (None, Some(_)) => Err(UsageError("--mt-endpoint needs a build with the `http` feature".into()).into()),
        (None, None) => Err(UsageError("back-translation needs --mt-endpoint or --mt-dict".into()).into()),
    }
}

fn back_translation(
    corpus: &[LabeledSentence],
    a: &AugmentArgs,
    chain: &[&str],
) -> Result<Vec<Vec<LabeledSentence>>> {
    let mt = mt_client(a)?;
    let triggers = match &a.triggers {
        Some(p) => TriggerTable::read(open_input(p)?).with_context(|| format!("reading `{}`", p.display()))?,
        None => TriggerTable::default(),
    };
    let fallback: Option<CrfModel> = a.fallback_model.as_deref().map(load_crf).transpose()?;
    let fallback = fallback.as_ref().map(|m| m as &dyn SequenceTagger);
    let indexed: Vec<(usize, &LabeledSentence)> = corpus.iter().enumerate().collect();
    let results = cstk::exec::map(&indexed, |&(i, s)| {
        let tokens: Vec<String> = s.surfaces().map(str::to_string).collect();
        let out = back_translate(&tokens, mt.as_ref(), chain, &triggers, sentence_seed(a.seed, i))?;
        project_tags(&out, &tag_dict(s), fallback)
    });
    let mut variants = Vec::with_capacity(results.len());
    let mut failed = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => variants.push(vec![s]),
            Err(e @ cstk::Error::Translation { .. }) => {
                warn!("sentence {}: {e}; skipped", i + 1);
                failed += 1;
                variants.push(Vec::new());
            }
            Err(e) => return Err(e.into()),
        }
    }
    if failed > 0 && failed == corpus.len() {
        anyhow::bail!("back-translation failed for every sentence");
    }
    if failed > 0 {
        eprintln!("{failed} of {} sentences could not be back-translated", corpus.len());
    }
    Ok(variants)
}

pub fn augment_cmd(a: &AugmentArgs) -> Result<()> {
    let corpus = read_conll(open_input(&a.input)?).with_context(|| format!("reading `{}`", a.input.display()))?;
    let indexed: Vec<(usize, &LabeledSentence)> = corpus.iter().enumerate().collect();
    let variants: Vec<Vec<LabeledSentence>> = match a.method {
        AugmentMethod::Eda => {
            let ops = a
                .ops
                .iter()
                .map(|o| o.parse::<EdaOp>())
                .collect::<cstk::Result<Vec<_>>>()
                .map_err(|e| UsageError(e.to_string()))?;
            let base = EdaConfig {
                alpha: a.alpha,
                num_aug: a.num_aug,
                ops,
                rd_prob: a.rd_prob,
                seed: a.seed,
            };
            base.validate().map_err(|e| UsageError(e.to_string()))?;
            let lexicon = match &a.lexicon {
                Some(p) => SynonymLexicon::read(open_input(p)?).with_context(|| format!("reading `{}`", p.display()))?,
                None => SynonymLexicon::new(),
            };
            let emb = embeddings(a, false)?;
            cstk::exec::map(&indexed, |&(i, s)| {
                let cfg = EdaConfig {
                    seed: sentence_seed(a.seed, i),
                    ..base.clone()
                };
                eda_augment(s, &cfg, &lexicon, &emb)
            })
            .into_iter()
            .collect::<cstk::Result<_>>()?
        }
        AugmentMethod::Analogy | AugmentMethod::FullWe => {
            let emb = embeddings(a, true)?;
            let lists = EntityTypeLists::from_corpus(&corpus);
            let full = a.method == AugmentMethod::FullWe;
            cstk::exec::map(&indexed, |&(i, s)| {
                let seed = sentence_seed(a.seed, i);
                if full {
                    vec![full_we_sub(s, &lists, &emb, a.rank, seed)]
                } else {
                    vec![analogies_we_sub(s, &lists, &emb, seed)]
                }
            })
        }
        AugmentMethod::Bt => back_translation(&corpus, a, &CHAIN_FR)?,
        AugmentMethod::Bt2l => back_translation(&corpus, a, &CHAIN_FR_DE)?,
    };
    let mut produced: Vec<LabeledSentence> = Vec::new();
    for (s, vs) in corpus.iter().zip(variants) {
        if a.keep_original {
            produced.push(s.clone());
        }
        produced.extend(vs);
    }
    report_growth(&corpus, &produced, a.keep_original);
    let mut out = open_output(a.output.out.as_deref())?;
    write_conll(&mut out, &produced)?;
    out.flush()?;
    Ok(())
}

/// Entity counts and increase factors on stderr.
fn report_growth(before: &[LabeledSentence], produced: &[LabeledSentence], included: bool) {
    let b = entity_counts(before);
    let mut after = entity_counts(produced);
    if !included {
        for (k, v) in &b {
            *after.entry(k.clone()).or_default() += v;
        }
    }
    let factors = increase_factor(&b, &after);
    let total = |m: &BTreeMap<String, usize>| m.iter().filter(|(k, _)| *k != TOTAL).map(|(_, v)| v).sum::<usize>();
    let count = |m: &BTreeMap<String, usize>, k: &str| {
        if k == TOTAL {
            total(m)
        } else {
            m.get(k).copied().unwrap_or(0)
        }
    };
    let mut text = format!("{:<8} {:>8} {:>8} {:>8}\n", "type", "before", "after", "factor");
    for (k, f) in &factors {
        let f = f.map_or("-".to_string(), |f| format!("{f:.2}"));
        let _ = writeln!(
            text,
            "{:<8} {:>8} {:>8} {:>8}",
            k,
            count(&b, k),
            count(&after, k),
            f
        );
    }
    eprint!("{text}");
}
