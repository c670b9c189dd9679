use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use anyhow::{Context, Result};
use cstk::augment::entity_counts;
use cstk::corpus::{corpus_stats, read_conll, read_conll_lenient, read_seglid, LabeledSentence, SegLidRecord};
use cstk::embeddings::{kmeans, load_embeddings, KMeansConfig};
use cstk::eval::{entity_f1_conll, seg_metrics, token_metrics};
use cstk::textproc::{normalize, NormalizationConfig};
use log::{info, warn};

use crate::args::{ClusterArgs, CorpusKind, EvalLidArgs, EvalNerArgs, NormalizeArgs, ReportFormat, StatsArgs};
use crate::config::write_manifest;
use crate::io::{open_input, open_output};

pub fn normalize_cmd(a: &NormalizeArgs) -> Result<()> {
    let cfg = NormalizationConfig {
        unify_alef: !a.keep_alef,
        unify_ya_alefmaqsura: !a.keep_ya,
        strip_diacritics: !a.keep_diacritics,
        strip_tatweel: !a.keep_tatweel,
        punctuation_removal: a.strip_punct,
    };
    let reader = open_input(&a.input)?;
    let mut out = open_output(a.output.out.as_deref())?;
    for line in reader.lines() {
        let line = line?;
        if !a.conll {
            writeln!(out, "{}", normalize(&line, &cfg))?;
            continue;
        }
        let trimmed = line.trim_start();
        match trimmed.find([' ', '\t']) {
            Some(cut) => {
                let surface = normalize(&trimmed[..cut], &cfg);
                let surface = if surface.is_empty() { &trimmed[..cut] } else { surface.as_str() };
                writeln!(out, "{surface}{}", &trimmed[cut..])?;
            }
            None => writeln!(out, "{line}")?,
        }
    }
    out.flush()?;
    Ok(())
}

fn read_conll_file(path: &std::path::Path, strict: bool) -> Result<Vec<LabeledSentence>> {
    let reader = open_input(path)?;
    let corpus = if strict { read_conll(reader) } else { read_conll_lenient(reader) };
    corpus.with_context(|| format!("reading `{}`", path.display()))
}

pub fn read_seglid_file(path: &std::path::Path) -> Result<Vec<Vec<SegLidRecord>>> {
    read_seglid(open_input(path)?).with_context(|| format!("reading `{}`", path.display()))
}

fn looks_like_seglid(path: &std::path::Path) -> Result<bool> {
    if path.extension().is_some_and(|e| e == "seglid") {
        return Ok(true);
    }
    let mut reader = open_input(path)?;
    let mut line = String::new();
    while reader.read_line(&mut line)? > 0 {
        if !line.trim().is_empty() {
            return Ok(line.contains("|||"));
        }
        line.clear();
    }
    Ok(false)
}

fn conll_stats(corpus: &[LabeledSentence], format: ReportFormat) -> String {
    let tokens: usize = corpus.iter().map(LabeledSentence::len).sum();
    let mut rows: BTreeMap<String, usize> = BTreeMap::new();
    for (k, v) in entity_counts(corpus) {
        rows.insert(format!("entities.{k}"), v);
    }
    let mut out = String::new();
    match format {
        ReportFormat::Kv => {
            let _ = writeln!(out, "sentences\t{}", corpus.len());
            let _ = writeln!(out, "tokens\t{tokens}");
            for (k, v) in &rows {
                let _ = writeln!(out, "{k}\t{v}");
            }
        }
        ReportFormat::Table => {
            let _ = writeln!(out, "{:<16} {:>8}", "sentences", corpus.len());
            let _ = writeln!(out, "{:<16} {:>8}", "tokens", tokens);
            for (k, v) in &rows {
                let _ = writeln!(out, "{k:<16} {v:>8}");
            }
        }
    }
    out
}

pub fn stats_cmd(a: &StatsArgs) -> Result<()> {
    let seglid = match a.kind {
        CorpusKind::Seglid => true,
        CorpusKind::Conll => false,
        CorpusKind::Auto => looks_like_seglid(&a.input)?,
    };
    let text = if seglid {
        let report = corpus_stats(&read_seglid_file(&a.input)?);
        match a.format {
            ReportFormat::Table => report.to_table(),
            ReportFormat::Kv => report.to_kv(),
        }
    } else {
        conll_stats(&read_conll_file(&a.input, false)?, a.format)
    };
    let mut out = open_output(a.output.out.as_deref())?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn cluster_cmd(a: &ClusterArgs, settings: &[(String, String)]) -> Result<()> {
    let table = load_embeddings(open_input(&a.embeddings)?)
        .with_context(|| format!("reading `{}`", a.embeddings.display()))?;
    let cfg = KMeansConfig {
        max_iters: a.max_iters,
        ..KMeansConfig::new(a.k, a.seed)
    };
    let model = kmeans(&table, &cfg)?;
    info!("k-means: {} iterations, inertia {:.6}", model.history.len(), model.inertia);
    let mut w = open_output(Some(&a.model))?;
    model.write(&mut w)?;
    w.flush()?;
    write_manifest(&a.model, "cluster", a.seed, &[("embeddings", &a.embeddings)], settings)
}

pub fn eval_ner_cmd(a: &EvalNerArgs) -> Result<()> {
    let gold = read_conll_file(&a.gold, true)?;
    let pred = read_conll_file(&a.pred, false)?;
    if gold.len() != pred.len() {
        anyhow::bail!("gold has {} sentences, predictions have {}", gold.len(), pred.len());
    }
    for (i, (g, p)) in gold.iter().zip(&pred).enumerate() {
        if g.len() != p.len() {
            anyhow::bail!("sentence {}: gold has {} tokens, predictions have {}", i + 1, g.len(), p.len());
        }
        if g.surfaces().ne(p.surfaces()) {
            warn!("sentence {}: surfaces differ between gold and predictions", i + 1);
        }
    }
    let gold_tags: Vec<_> = gold.iter().flat_map(|s| s.tags()).collect();
    let pred_tags: Vec<_> = pred.iter().flat_map(|s| s.tags()).collect();
    let token = token_metrics(&gold_tags, &pred_tags)?;
    let pred_seqs: Vec<_> = pred.iter().map(LabeledSentence::tags).collect();
    let entity = entity_f1_conll(&gold, &pred_seqs)?;
    let text = match a.format {
        ReportFormat::Table => format!("token\n{}\nentity\n{}", token.to_table(), entity.to_table()),
        ReportFormat::Kv => format!("{}{}", token.to_kv("token."), entity.to_kv("entity.")),
    };
    let mut out = open_output(a.output.out.as_deref())?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn eval_lid_cmd(a: &EvalLidArgs) -> Result<()> {
    let gold: Vec<SegLidRecord> = read_seglid_file(&a.gold)?.into_iter().flatten().collect();
    let pred: Vec<SegLidRecord> = read_seglid_file(&a.pred)?.into_iter().flatten().collect();
    let report = seg_metrics(&gold, &pred)?;
    let text = match a.format {
        ReportFormat::Table => report.to_table(),
        ReportFormat::Kv => report.to_kv(),
    };
    let mut out = open_output(a.output.out.as_deref())?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}
