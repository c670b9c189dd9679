use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use cstk::corpus::{read_conll_lenient, read_seglid, write_seglid, SegLidRecord};
use cstk::seglid::{coarse_ne_transform, train_nb, train_seglid, NbModel, SegLidModel, SegTrainConfig};
use cstk::textproc::{tokenize, AffixTable};
use log::info;

use crate::args::{LidInput, LidMethod, TagLidArgs, TrainLidArgs};
use crate::config::write_manifest;
use crate::data::read_seglid_file;
use crate::io::{line_chunks, open_input, open_output, shift_lines, Blocks, BATCH};

enum LidModel {
    Semi(SegLidModel),
    Nb(NbModel),
}

impl LidModel {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot open model `{}`", path.display()))?;
        let model = if text.starts_with("NB\t") {
            NbModel::read(text.as_bytes()).map(LidModel::Nb)
        } else {
            SegLidModel::read(text.as_bytes()).map(LidModel::Semi)
        };
        model.with_context(|| format!("reading model `{}`", path.display()))
    }

    fn tag(&self, sentences: &[Vec<String>]) -> cstk::Result<Vec<Vec<SegLidRecord>>> {
        match self {
            LidModel::Semi(m) => m.decode_corpus(sentences),
            LidModel::Nb(m) => cstk::exec::map(sentences, |s| s.iter().map(|t| m.tag(t)).collect())
                .into_iter()
                .collect(),
        }
    }
}

pub fn train_lid_cmd(a: &TrainLidArgs, settings: &[(String, String)]) -> Result<()> {
    let mut corpus = read_seglid_file(&a.train)?;
    if a.coarse_ne {
        corpus = coarse_ne_transform(&corpus);
    }
    let mut inputs: Vec<(&str, &Path)> = vec![("train", &a.train)];
    let mut w = open_output(Some(&a.model))?;
    match a.method {
        LidMethod::Seglid => {
            let affixes = match &a.affixes {
                Some(p) => {
                    inputs.push(("affixes", p));
                    AffixTable::read(open_input(p)?).with_context(|| format!("reading `{}`", p.display()))?
                }
                None => AffixTable::seglid_default(),
            };
            let cfg = SegTrainConfig {
                l2_sigma: a.sigma,
                max_iters: a.max_iters,
                tol: a.tol,
                max_seg_len: a.max_seg_len,
                token_context: a.context,
                labels: None,
                affixes,
                seed: a.seed,
            };
            let (model, report) = train_seglid(&corpus, &cfg)?;
            info!(
                "trained on {} sentences: {} features, {} iterations, objective {:.6}, converged {}",
                corpus.len(),
                model.features().len(),
                report.iterations,
                report.objective.last().copied().unwrap_or(f64::NAN),
                report.converged
            );
            model.write(&mut w)?;
        }
        LidMethod::Nb => {
            let records: Vec<SegLidRecord> = corpus.into_iter().flatten().collect();
            let model = train_nb(&records, (a.ngram_min, a.ngram_max), a.smoothing)?;
            info!("trained on {} tokens", records.len());
            model.write(&mut w)?;
        }
    }
    w.flush()?;
    write_manifest(&a.model, "train-lid", a.seed, &inputs, settings)
}

pub fn tag_lid_cmd(a: &TagLidArgs) -> Result<()> {
    let model = LidModel::load(&a.model)?;
    let reader = open_input(&a.input)?;
    let mut out = open_output(a.output.out.as_deref())?;
    let emit = |batch: Vec<Vec<String>>, out: &mut dyn Write| -> Result<()> {
        let batch: Vec<Vec<String>> = batch.into_iter().filter(|s| !s.is_empty()).collect();
        write_seglid(out, &model.tag(&batch)?)?;
        Ok(())
    };
    let context = || format!("reading `{}`", a.input.display());
    match a.input_format {
        LidInput::Text => {
            for chunk in line_chunks(reader, BATCH) {
                let (_, lines) = chunk?;
                emit(lines.iter().map(|l| tokenize(l)).collect(), &mut out)?;
            }
        }
        LidInput::Seglid => {
            for chunk in line_chunks(reader, BATCH) {
                let (offset, lines) = chunk?;
                let text = lines.join("\n");
                let corpus = read_seglid(text.as_bytes()).map_err(|e| shift_lines(e, offset)).with_context(context)?;
                emit(
                    corpus
                        .iter()
                        .map(|s| s.iter().map(|r| r.token().to_string()).collect())
                        .collect(),
                    &mut out,
                )?;
            }
        }
        LidInput::Conll => {
            for chunk in Blocks::new(reader, BATCH) {
                let (offset, text) = chunk?;
                let corpus = read_conll_lenient(text.as_bytes())
                    .map_err(|e| shift_lines(e, offset))
                    .with_context(context)?;
                emit(
                    corpus.iter().map(|s| s.surfaces().map(str::to_string).collect()).collect(),
                    &mut out,
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
