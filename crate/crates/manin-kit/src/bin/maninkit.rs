//! Verification CLI: build catalog spaces from recipes and run their
//! verification suites, emitting deterministic JSON or text reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use manin_kit::error::Error;
use manin_kit::liegroup::MODEL_KEYS;
use manin_kit::recipe::{BASE_RECIPES, OPERATIONS};
use manin_kit::report::{emit_report, run, ReportFormat, RunConfig};

#[derive(Parser)]
#[command(name = "maninkit", version, about = "Verification runner for group-valued moment map constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Build the recipe's space and run its verification suite
    Verify {
        /// Group model key (see `list-models`)
        #[arg(long, default_value = "double-so3")]
        model: String,
        /// Space recipe, e.g. "4gon" or "fuse(2gon,quotient(4gon))"
        #[arg(long)]
        recipe: String,
        /// Sample points per check sweep
        #[arg(long, default_value_t = 3)]
        points: usize,
        /// RNG seed (falls back to MANINKIT_SEED, then 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Tolerance override, repeatable: --tol fd_step=1e-6
        #[arg(long = "tol", value_name = "KEY=VALUE")]
        tol: Vec<String>,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
    /// List the group model catalog
    ListModels,
    /// List recipe bases and operations
    ListRecipes,
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Error> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("MANINKIT_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|e| Error::InvalidConfig(format!("MANINKIT_SEED is not a 64-bit integer: {e}"))),
        Err(_) => Ok(0),
    }
}

fn parse_tol_overrides(items: &[String]) -> Result<Vec<(String, f64)>, Error> {
    items
        .iter()
        .map(|item| {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("--tol expects KEY=VALUE, got '{item}'")))?;
            let value: f64 = value
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("--tol {key}: bad value '{value}': {e}")))?;
            Ok((key.to_string(), value))
        })
        .collect()
}

fn verify(
    model: String,
    recipe: String,
    points: usize,
    seed: Option<u64>,
    tol: Vec<String>,
    out: Option<PathBuf>,
    format: FormatArg,
) -> Result<bool, Error> {
    let format = match format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Text => ReportFormat::Text,
    };
    let config = RunConfig {
        model,
        recipe,
        points,
        seed: resolve_seed(seed)?,
        tol_overrides: parse_tol_overrides(&tol)?,
        out: out.as_ref().map(|p| p.display().to_string()),
        format,
    };
    let report = run(&config)?;
    let bytes = emit_report(&report, format);
    match &out {
        Some(path) => std::fs::write(path, &bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify {
            model,
            recipe,
            points,
            seed,
            tol,
            out,
            format,
        } => match verify(model, recipe, points, seed, tol, out, format) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::ListModels => {
            for key in MODEL_KEYS {
                let desc = match *key {
                    "double-so3" => "double of so(3): SO(3) x SO(3), diagonal subgroup",
                    "double-su2" => "double of su(2): SU(2) x SU(2), diagonal subgroup",
                    "double-sl2r" => "double of sl(2,R): SL(2,R) x SL(2,R), diagonal subgroup",
                    "sl2c-su2" => "sl(2,C) as a real metrized algebra, subgroup SU(2)",
                    _ => "",
                };
                println!("{key:<14} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::ListRecipes => {
            println!("bases:");
            for b in BASE_RECIPES {
                println!("  {b}");
            }
            println!("operations (nest recipes):");
            for op in OPERATIONS {
                match op {
                    "fuse" => println!("  fuse(r1,r2)"),
                    "reduce" => println!("  reduce(r,edge)"),
                    other => println!("  {other}(r)"),
                }
            }
            ExitCode::SUCCESS
        }
    }
}
