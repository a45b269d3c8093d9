use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use coclass_cli::*;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "coclass", version, about = "Infinite sequences of p-groups of fixed coclass")]
struct Cli {
    /// catalog file or directory
    #[arg(long, env = "COCLASS_CATALOG", global = true)]
    catalog: Option<PathBuf>,
    /// largest index i to check
    #[arg(long, default_value_t = 2, global = true)]
    i_max: u32,
    /// largest group enumerated element by element
    #[arg(long, default_value_t = coclass_core::analysis::DEFAULT_ENUM_BOUND, global = true)]
    enum_bound: u64,
    /// node budget of each isomorphism search
    #[arg(long, default_value_t = coclass_core::analysis::DEFAULT_ISO_EFFORT, global = true)]
    iso_effort: u64,
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// treat undecided claims as failures
    #[arg(long, global = true)]
    strict: bool,
    /// worker threads, 0 for one per core
    #[arg(long, default_value_t = 0, global = true)]
    parallel: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Target {
    /// family name such as G21, G31 or G22-S3
    family: String,
    /// secondary root
    #[arg(long)]
    l: Option<u32>,
    /// offset
    #[arg(long)]
    e: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Check every expected value in the catalog
    VerifyPaper,
    /// Cohomology H^2(R, A_i) with its decomposition
    H2 {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 0)]
        i: u32,
    },
    /// Build G_i of one sequence
    Instantiate {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 0)]
        i: u32,
        /// coefficients over the W basis, e.g. 1,0
        #[arg(long, conflicts_with = "beta")]
        w: Option<String>,
        /// flat list of the vectors w_j, e.g. (8,0,0)
        #[arg(long)]
        beta: Option<String>,
    },
    /// Partition the representatives (or the whole W space) into isomorphism classes
    Classify {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 0)]
        i: u32,
        /// classify every combination of the W basis
        #[arg(long)]
        all: bool,
    },
    /// Coclass tree fragment for i = 0..=i-max
    Graph {
        #[command(flatten)]
        target: Target,
    },
}

fn emit(config: &RunConfig, v: &Value) -> Result<()> {
    match config.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(v)?),
        Format::Text => print_text(v, ""),
        Format::Dot => bail!("dot output is only available for graph"),
    }
    Ok(())
}

fn print_text(v: &Value, indent: &str) {
    if let Value::Object(m) = v {
        for (k, x) in m {
            match x {
                Value::Object(_) => {
                    println!("{indent}{k}:");
                    print_text(x, &format!("{indent}  "));
                }
                Value::String(s) => println!("{indent}{k}: {s}"),
                other => println!("{indent}{k}: {other}"),
            }
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let mut config = RunConfig {
        i_max: cli.i_max,
        enum_bound: cli.enum_bound,
        iso_effort: cli.iso_effort,
        format: cli.format,
        strict: cli.strict,
        parallel: cli.parallel,
        ..RunConfig::default()
    };
    if let Some(c) = cli.catalog {
        config.catalog = c;
    }
    match cli.command {
        Command::VerifyPaper => {
            let report = verify_paper(&config)?;
            match config.format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                Format::Dot => bail!("dot output is only available for graph"),
            }
            return Ok(report.exit_code(config.strict) as u8);
        }
        Command::H2 { target, i } => emit(&config, &cmd_h2(&config, &target.family, target.l, target.e, i)?)?,
        Command::Instantiate { target, i, w, beta } => {
            let choice = match (w, beta) {
                (_, Some(b)) => Choice::Tails(parse_vector(&b)?),
                (Some(w), None) => Choice::Coefficients(parse_vector(&w)?),
                (None, None) => bail!("one of --w or --beta is required"),
            };
            emit(&config, &cmd_instantiate(&config, &target.family, target.l, target.e, i, choice)?)?
        }
        Command::Classify { target, i, all } => {
            emit(&config, &cmd_classify(&config, &target.family, target.l, target.e, i, all)?)?
        }
        Command::Graph { target } => print!("{}", cmd_graph(&config, &target.family, target.l, target.e)?),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
