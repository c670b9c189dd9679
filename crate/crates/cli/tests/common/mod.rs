//! Helpers shared by the CLI test targets.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FIXTURES: &[&str] = &[
    "train.conll",
    "test.conll",
    "train.seglid",
    "emb.txt",
    "lexicon.txt",
    "mt.tsv",
    "sentences.txt",
    "raw.txt",
    "ner.cfg",
];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Fresh directory holding a copy of every fixture.
pub fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for f in FIXTURES {
        fs::copy(fixtures().join(f), dir.path().join(f)).unwrap();
    }
    dir
}

pub fn cstk(dir: &Path, threads: usize, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cstk"))
        .current_dir(dir)
        .env_remove("CSTK_THREADS")
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .unwrap()
}

pub fn ok(dir: &Path, threads: usize, args: &[&str]) -> Vec<u8> {
    let out = cstk(dir, threads, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// Runs every subcommand and returns each primary output.
pub fn pipeline(threads: usize) -> Vec<(String, Vec<u8>)> {
    let dir = workdir();
    let d = dir.path();
    let mut outputs = Vec::new();
    let mut run = |name: &str, args: &[&str]| outputs.push((name.to_string(), ok(d, threads, args)));
    run("normalize", &["normalize", "raw.txt"]);
    run("stats", &["stats", "train.seglid"]);
    run("cluster", &["cluster", "--embeddings", "emb.txt", "--model", "c.txt", "-k", "3", "--seed", "5"]);
    run(
        "train-ner",
        &[
            "train-ner", "train.conll", "--model", "m.crf", "--embeddings", "emb.txt", "--fine-k", "4", "--coarse-k",
            "2", "--window-next", "1", "--seed", "3",
        ],
    );
    run("tag-ner", &["tag-ner", "test.conll", "--model", "m.crf"]);
    run("tag-ner-text", &["tag-ner", "sentences.txt", "--model", "m.crf", "--input-format", "text"]);
    run(
        "route-tag",
        &["route-tag", "test.conll", "--ar-model", "m.crf", "--en-model", "m.crf", "--out", "routed.conll"],
    );
    run("train-lid", &["train-lid", "train.seglid", "--model", "lid.model", "--context"]);
    run("train-lid-nb", &["train-lid", "train.seglid", "--model", "nb.model", "--method", "nb"]);
    run(
        "tag-lid",
        &["tag-lid", "train.seglid", "--input-format", "seglid", "--model", "lid.model", "--out", "pred.seglid"],
    );
    run("tag-lid-nb", &["tag-lid", "sentences.txt", "--model", "nb.model"]);
    run(
        "augment-eda",
        &[
            "augment", "train.conll", "--method", "eda", "--lexicon", "lexicon.txt", "--embeddings", "emb.txt",
            "--alpha", "0.3", "--seed", "11",
        ],
    );
    run("augment-analogy", &["augment", "train.conll", "--method", "analogy", "--embeddings", "emb.txt"]);
    run(
        "augment-full-we",
        &["augment", "train.conll", "--method", "full-we", "--embeddings", "emb.txt", "--rank", "2"],
    );
    run("augment-bt", &["augment", "train.conll", "--method", "bt", "--mt-dict", "mt.tsv", "--seed", "9"]);
    run("augment-bt2l", &["augment", "train.conll", "--method", "bt2l", "--mt-dict", "mt.tsv"]);
    run("eval-ner", &["eval-ner", "--gold", "test.conll", "--pred", "routed.conll"]);
    run("eval-lid", &["eval-lid", "--gold", "train.seglid", "--pred", "pred.seglid", "--format", "kv"]);
    for file in [
        "c.txt",
        "c.txt.manifest",
        "m.crf",
        "m.crf.manifest",
        "routed.conll",
        "lid.model",
        "lid.model.manifest",
        "nb.model",
        "pred.seglid",
    ] {
        outputs.push((file.to_string(), fs::read(d.join(file)).unwrap()));
    }
    outputs
}
