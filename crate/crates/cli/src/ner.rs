use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use cstk::corpus::{read_conll, read_conll_lenient, write_conll, LabeledSentence, Tag};
use cstk::crf::{route_tag, train_crf, CrfModel, FeatureTemplates, Optimizer, SequenceTagger, TrainConfig};
use cstk::embeddings::{kmeans, load_embeddings, ClusterModel, KMeansConfig};
use cstk::textproc::{tokenize, Script};
use log::info;

use crate::args::{OptimizerArg, RouteTagArgs, ScriptArg, TagNerArgs, TextFormat, TrainNerArgs};
use crate::config::write_manifest;
use crate::io::{line_chunks, open_input, open_output, shift_lines, Blocks, BATCH};
use crate::UsageError;

pub fn load_crf(path: &Path) -> Result<CrfModel> {
    CrfModel::read(open_input(path)?).with_context(|| format!("reading model `{}`", path.display()))
}

pub fn train_ner_cmd(a: &TrainNerArgs, settings: &[(String, String)]) -> Result<()> {
    let corpus = read_conll(open_input(&a.train)?).with_context(|| format!("reading `{}`", a.train.display()))?;
    let mut templates = FeatureTemplates {
        use_current: true,
        prev_window: a.window_prev,
        next_window: a.window_next,
        use_stem: a.stem,
        use_first_char: a.first_char,
        use_last_char: a.last_char,
        use_pos: a.pos,
        clusters: Vec::new(),
    };
    let mut inputs: Vec<(String, PathBuf)> = vec![("train".into(), a.train.clone())];
    if let Some(path) = &a.embeddings {
        let table = load_embeddings(open_input(path)?).with_context(|| format!("reading `{}`", path.display()))?;
        inputs.push(("embeddings".into(), path.clone()));
        for (name, k) in [("fine", a.fine_k), ("coarse", a.coarse_k)] {
            if k == 0 {
                continue;
            }
            let model = kmeans(&table, &KMeansConfig::new(k, a.seed))?;
            info!("{name} clusters: k={k}, inertia {:.6}", model.inertia);
            templates.clusters.push((name.into(), Arc::new(model.assignment)));
        }
    }
    for spec in &a.clusters {
        let (name, file) = spec
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--clusters expects NAME=FILE, got `{spec}`")))?;
        let model = ClusterModel::read(open_input(Path::new(file))?).with_context(|| format!("reading `{file}`"))?;
        templates.clusters.push((name.into(), Arc::new(model.assignment)));
        inputs.push((format!("clusters.{name}"), PathBuf::from(file)));
    }
    let tcfg = TrainConfig {
        l2_sigma: a.sigma,
        optimizer: match a.optimizer {
            OptimizerArg::Lbfgs => Optimizer::Lbfgs,
            OptimizerArg::Gd => Optimizer::GradientDescent,
            OptimizerArg::Sgd => Optimizer::Sgd,
        },
        learning_rate: a.learning_rate,
        max_epochs: a.max_epochs,
        tol: a.tol,
        seed: a.seed,
    };
    let (model, report) = train_crf(&corpus, &tcfg, &templates)?;
    info!(
        "trained on {} sentences: {} features, {} iterations, objective {:.6}, converged {}",
        corpus.len(),
        model.features().len(),
        report.iterations,
        report.objective.last().copied().unwrap_or(f64::NAN),
        report.converged
    );
    let mut w = open_output(Some(&a.model))?;
    model.write(&mut w)?;
    w.flush()?;
    let inputs: Vec<(&str, &Path)> = inputs.iter().map(|(n, p)| (n.as_str(), p.as_path())).collect();
    write_manifest(&a.model, "train-ner", a.seed, &inputs, settings)
}

/// Streams sentences from `input`, labels each batch with `decode` and writes
/// CoNLL to `out`.
fn tag_stream<F>(input: &Path, format: TextFormat, out: &mut dyn Write, decode: F) -> Result<()>
where
    F: Fn(&[LabeledSentence]) -> cstk::Result<Vec<Vec<Tag>>>,
{
    let mut first = true;
    let mut emit = |batch: Vec<LabeledSentence>, out: &mut dyn Write| -> Result<()> {
        let tags = decode(&batch)?;
        let tagged: Vec<LabeledSentence> = batch.iter().zip(&tags).map(|(s, t)| s.with_tags(t)).collect();
        if tagged.is_empty() {
            return Ok(());
        }
        if !first {
            writeln!(out)?;
        }
        first = false;
        write_conll(&mut *out, &tagged)?;
        Ok(())
    };
    let reader = open_input(input)?;
    match format {
        TextFormat::Conll => {
            for chunk in Blocks::new(reader, BATCH) {
                let (offset, text) = chunk?;
                let batch = read_conll_lenient(text.as_bytes())
                    .map_err(|e| shift_lines(e, offset))
                    .with_context(|| format!("reading `{}`", input.display()))?;
                emit(batch, out)?;
            }
        }
        TextFormat::Text => {
            for chunk in line_chunks(reader, BATCH) {
                let (_, lines) = chunk?;
                let batch: Vec<LabeledSentence> = lines
                    .iter()
                    .map(|l| tokenize(l))
                    .filter(|t| !t.is_empty())
                    .map(LabeledSentence::from_surfaces)
                    .collect();
                emit(batch, out)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn tag_ner_cmd(a: &TagNerArgs) -> Result<()> {
    let model = load_crf(&a.model)?;
    let mut out = open_output(a.output.out.as_deref())?;
    tag_stream(&a.input, a.input_format, &mut out, |batch| model.decode_batch(batch))
}

pub fn route_tag_cmd(a: &RouteTagArgs) -> Result<()> {
    let ar = a.ar_model.as_deref().map(load_crf).transpose()?;
    let en = a.en_model.as_deref().map(load_crf).transpose()?;
    let mut models: BTreeMap<Script, &dyn SequenceTagger> = BTreeMap::new();
    if let Some(m) = &ar {
        models.insert(Script::Arabic, m);
    }
    if let Some(m) = &en {
        models.insert(Script::Latin, m);
    }
    if models.is_empty() {
        return Err(UsageError("route-tag needs --ar-model, --en-model or both".into()).into());
    }
    let default = a.default.map(|d| match d {
        ScriptArg::Arabic => Script::Arabic,
        ScriptArg::Latin => Script::Latin,
    });
    if let Some(d) = default {
        if !models.contains_key(&d) {
            return Err(UsageError(format!("--default {} has no model", d.as_str())).into());
        }
    }
    let mut out = open_output(a.output.out.as_deref())?;
    tag_stream(&a.input, a.input_format, &mut out, |batch| {
        cstk::exec::map(batch, |s| route_tag(s, &models, default)).into_iter().collect()
    })
}
