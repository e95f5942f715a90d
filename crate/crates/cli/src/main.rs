mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use config::{ConfigError, Format, RunConfig};

/// Operator-model checks for quantum quaternion spheres and odd quantum spheres.
#[derive(Parser, Debug)]
#[command(name = "quatsphere", version)]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Report destination; `-` for standard output.
    #[arg(long, global = true)]
    output: Option<String>,
    /// Report format.
    #[arg(long, global = true, value_parser = ["json", "tsv"])]
    format: Option<String>,
    /// Record wall time in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Default)]
struct Common {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    band: Option<String>,
    /// Quotient level(s): a list, `all`, or `top`.
    #[arg(long)]
    k: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Residuals of every defining relation under the η representations.
    RelationsVerify(Common),
    /// Stabilized Fredholm indices of the compressed operators R_m.
    Index {
        #[arg(long, allow_hyphen_values = true)]
        m: Option<String>,
        #[arg(long)]
        ell: Option<String>,
        #[arg(long)]
        ladder: Option<String>,
    },
    /// Quotient maps, homogeneity probes and the A_m generator families.
    ExtCheck(Common),
    /// Compare the q = 0 presentation and operators with the odd sphere.
    QzeroDiff(Common),
    /// Iterated quantum double suspension of C(T) against the sphere generators.
    QdsCheck {
        #[arg(long)]
        ell: Option<String>,
        #[arg(long)]
        d: Option<String>,
    },
    /// Canonical text of the elementary representations and η images.
    RepDump(Common),
}

fn push(over: &mut Vec<(String, String)>, key: &str, v: &Option<String>) {
    if let Some(v) = v {
        over.push((key.to_string(), v.clone()));
    }
}

fn overrides(cli: &Cli) -> Result<Vec<(String, String)>, ConfigError> {
    let mut over = Vec::new();
    for s in &cli.set {
        let (k, v) = s.split_once('=').ok_or_else(|| ConfigError(format!("--set expects KEY=VALUE, got `{s}`")))?;
        over.push((k.trim().to_string(), v.trim().to_string()));
    }
    let common = |over: &mut Vec<(String, String)>, c: &Common| {
        push(over, "n", &c.n);
        push(over, "q", &c.q);
        push(over, "d", &c.d);
        push(over, "band", &c.band);
        push(over, "k", &c.k);
    };
    match &cli.command {
        Command::RelationsVerify(c) | Command::ExtCheck(c) | Command::QzeroDiff(c) | Command::RepDump(c) => {
            common(&mut over, c)
        }
        Command::Index { m, ell, ladder } => {
            push(&mut over, "m", m);
            push(&mut over, "ell", ell);
            push(&mut over, "ladder", ladder);
        }
        Command::QdsCheck { ell, d } => {
            push(&mut over, "ell", ell);
            push(&mut over, "d", d);
        }
    }
    push(&mut over, "output", &cli.output);
    push(&mut over, "format", &cli.format);
    if cli.timing {
        over.push(("timing".into(), "true".into()));
    }
    Ok(over)
}

fn run(cli: &Cli) -> Result<ExitCode, anyhow::Error> {
    let cfg = match overrides(cli).and_then(|o| RunConfig::load(cli.config.as_deref(), &o)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(2));
        }
    };
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::RelationsVerify(_) => commands::relations_verify(&cfg)?,
        Command::Index { .. } => commands::index_cmd(&cfg)?,
        Command::ExtCheck(_) => commands::ext_check(&cfg)?,
        Command::QzeroDiff(_) => commands::qzero_diff(&cfg)?,
        Command::QdsCheck { .. } => commands::qds_check(&cfg)?,
        Command::RepDump(_) => commands::rep_dump(&cfg)?,
    };
    if cfg.timing {
        report.elapsed_ms = Some(start.elapsed().as_millis() as u64);
    }
    let text = match cfg.format {
        Format::Json => report.to_json() + "\n",
        Format::Tsv => report.to_tsv(),
    };
    if cfg.output == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        std::fs::write(&cfg.output, text)?;
    }
    Ok(ExitCode::from(if report.pass { 0 } else { 1 }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(3)
        }
    }
}
