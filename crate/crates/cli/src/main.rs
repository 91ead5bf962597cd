use anyhow::{bail, Result};
use clap::Parser;
use epflow_cli::config::{Command, KEYS};
use epflow_cli::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

fn key_help() -> String {
    let mut s = String::from("Keys (default in parentheses), as `--key value` or `key = value` in a config file:\n");
    for (k, d) in KEYS.iter().filter(|(k, _)| *k != "command") {
        s.push_str(&format!("  {k:<14} {d}\n"));
    }
    s
}

#[derive(Parser, Debug)]
#[command(name = "epflow", version, about = "Euler-Poisson flow-map solver and experiment harness", after_help = key_help())]
struct Cli {
    /// solve | linearize | nonuniform | analyticity | selftest
    command: String,
    /// Config file, `key = value` lines or a JSON object.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `--key value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = vec![];
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(key) = a.strip_prefix("--") else {
            bail!("expected `--key value`, got `{a}`");
        };
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let Some(v) = it.next() else {
                bail!("missing value for --{key}");
            };
            out.push((key.to_string(), v.clone()));
        }
    }
    Ok(out)
}

fn parse(cli: &Cli) -> Result<RunConfig> {
    let mut pairs = vec![("command".to_string(), cli.command.clone())];
    pairs.extend(overrides(&cli.overrides)?);
    Command::parse(&cli.command)?;
    match &cli.config {
        Some(p) => {
            let config = RunConfig::from_file(p, &pairs)?;
            Ok(config)
        }
        None => RunConfig::from_parts(None, &pairs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match parse(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("epflow: {e:#}");
            return ExitCode::from(2);
        }
    };
    match epflow_cli::execute(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epflow: {e:#}");
            ExitCode::FAILURE
        }
    }
}
