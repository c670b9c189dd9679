//! `cstk` command-line front end.
//!
//! Exit status is 0 on success, 1 on usage errors and 2 on data or validation
//! errors. Diagnostics go to stderr.

mod args;
mod augment;
mod config;
mod data;
mod io;
mod lid;
mod ner;

use std::process::ExitCode;

use anyhow::Result;
use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};

/// Bad flag combinations detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(command: &Command, settings: &[(String, String)]) -> Result<()> {
    match command {
        Command::Normalize(a) => data::normalize_cmd(a),
        Command::Stats(a) => data::stats_cmd(a),
        Command::Cluster(a) => data::cluster_cmd(a, settings),
        Command::TrainNer(a) => ner::train_ner_cmd(a, settings),
        Command::TagNer(a) => ner::tag_ner_cmd(a),
        Command::RouteTag(a) => ner::route_tag_cmd(a),
        Command::TrainLid(a) => lid::train_lid_cmd(a, settings),
        Command::TagLid(a) => lid::tag_lid_cmd(a),
        Command::Augment(a) => augment::augment_cmd(a),
        Command::EvalNer(a) => data::eval_ner_cmd(a),
        Command::EvalLid(a) => data::eval_lid_cmd(a),
    }
}

fn exit_for(err: &anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    if err.is::<UsageError>() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cmd = Cli::command();
    let argv = match config::expand_args(&cmd, std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return exit_for(&e),
    };
    let matches = match cmd.clone().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let name = cli.command.name();
    let settings = match (cmd.find_subcommand(name), matches.subcommand_matches(name)) {
        (Some(sub), Some(m)) => config::resolved(sub, m),
        _ => Vec::new(),
    };
    config::report(name, cli.threads, &settings);
    match cstk::exec::with_threads(cli.threads, || run(&cli.command, &settings)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}
