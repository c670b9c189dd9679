//! Config files, resolved-config reporting and model manifests.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ArgMatches;
use sha2::{Digest, Sha256};

use crate::UsageError;

const GLOBAL_IDS: [&str; 3] = ["threads", "config", "verbose"];

/// Position of the subcommand name in `argv`, skipping global options.
fn subcommand_position(cmd: &clap::Command, argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let arg = argv[i].to_string_lossy();
        if arg == "--threads" || arg == "--config" {
            i += 2;
            continue;
        }
        if arg.starts_with('-') {
            i += 1;
            continue;
        }
        return cmd.find_subcommand(arg.as_ref()).map(|_| i);
    }
    None
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    let mut found = None;
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(rest) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(rest));
        }
    }
    found
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected `key = value`", n + 1)))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Inserts the config file's settings right after the subcommand name so that
/// flags given on the command line, which come later, take precedence.
pub fn expand_args(cmd: &clap::Command, argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(pos) = subcommand_position(cmd, &argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("cannot read config `{}`", path.display()))?;
    let sub = cmd
        .find_subcommand(argv[pos].to_string_lossy().as_ref())
        .expect("subcommand was found above");
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in parse_config(&text)? {
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| UsageError(format!("config key `{key}` is not an option of `{}`", sub.get_name())))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}").into());
            injected.push(value.into());
        } else {
            match value.as_str() {
                "true" | "yes" | "1" => injected.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                _ => return Err(UsageError(format!("config key `{key}` expects true or false")).into()),
            }
        }
    }
    let mut out = argv;
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}

/// `(option, value)` pairs of every subcommand option, in declaration order.
pub fn resolved(sub: &clap::Command, matches: &ArgMatches) -> Vec<(String, String)> {
    sub.get_arguments()
        .filter(|a| !a.is_global_set() && !GLOBAL_IDS.contains(&a.get_id().as_str()))
        .filter_map(|a| {
            let raw = matches.get_raw(a.get_id().as_str())?;
            let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            let name = a.get_long().map_or_else(|| a.get_id().to_string(), str::to_string);
            Some((name, values.join(",")))
        })
        .collect()
}

pub fn report(command: &str, threads: usize, settings: &[(String, String)]) {
    eprintln!("# {command}");
    eprintln!("threads = {threads}");
    for (k, v) in settings {
        eprintln!("{k} = {v}");
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("cannot open `{}`", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn manifest_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// Writes `<model>.manifest`: input digests, the seed and the resolved config.
pub fn write_manifest(
    model: &Path,
    command: &str,
    seed: u64,
    inputs: &[(&str, &Path)],
    settings: &[(String, String)],
) -> Result<()> {
    let mut text = String::new();
    writeln!(text, "manifest\tv1")?;
    writeln!(text, "command\t{command}")?;
    writeln!(text, "seed\t{seed}")?;
    for (name, path) in inputs {
        writeln!(text, "input\t{name}\t{}\tsha256:{}", path.display(), sha256_file(path)?)?;
    }
    for (k, v) in settings {
        writeln!(text, "config\t{k}\t{v}")?;
    }
    let path = manifest_path(model);
    fs::write(&path, text).with_context(|| format!("cannot write `{}`", path.display()))
}
