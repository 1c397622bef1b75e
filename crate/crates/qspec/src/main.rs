use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qspec::commands::{self, DiagramQuery, ORACLE_THRESHOLD};
use qspec::pipeline;
use qspec_core::cost::CostParams;

/// Hadamard-test simulation of spectroscopic response functions.
#[derive(Parser)]
#[command(name = "qspec", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file and write spectra, response grids and a manifest.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.directory`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expand, list, or validate Feynman diagrams.
    Diagrams {
        /// Full commutator expansion of this order.
        #[arg(long, conflicts_with_all = ["catalog", "parse", "list"])]
        order: Option<usize>,
        /// Diagrams of a catalog entry.
        #[arg(long)]
        catalog: Option<String>,
        /// Validate and echo a diagram in the text format.
        #[arg(long)]
        parse: Option<String>,
        /// List the catalog.
        #[arg(long)]
        list: bool,
        /// Keep one member of every conjugate pair.
        #[arg(long)]
        reduce: bool,
    },
    /// Gate-cost breakdown.
    Cost {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        wmax: f64,
        #[arg(long)]
        dw: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 2.0)]
        poly: f64,
        #[arg(long, default_value_t = 1.0)]
        coeff: f64,
        /// Simulation error; adds ln(1/eps_sim) to the per-run cost.
        #[arg(long)]
        eps_sim: Option<f64>,
        /// Shot count scaling 1/eps instead of 1/eps^2.
        #[arg(long)]
        amplitude_estimation: bool,
        /// Correlation functions left after a phase-matching filter.
        #[arg(long)]
        surviving: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Compare circuit simulation with the operator-product oracle.
    OracleCheck {
        #[arg(long, default_value = "ladder3")]
        model: String,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check open dynamics with this dephasing rate.
        #[arg(long)]
        dephasing: Option<f64>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => {
            let report = pipeline::run_file(&config, out.as_deref())?;
            println!("wrote {} files to {}", report.files.len(), report.directory.display());
            for f in &report.files {
                println!("  {f}");
            }
        }
        Command::Diagrams { order, catalog, parse, list, reduce } => {
            let q = match (order, catalog.as_deref(), parse.as_deref(), list) {
                (Some(n), None, None, false) => DiagramQuery::Order { n, reduce },
                (None, Some(name), None, false) => DiagramQuery::Catalog { name, reduce },
                (None, None, Some(text), false) => DiagramQuery::Parse(text),
                (None, None, None, true) => DiagramQuery::List,
                _ => anyhow::bail!("give exactly one of --order, --catalog, --parse or --list"),
            };
            print!("{}", commands::diagrams(q)?);
        }
        Command::Cost { n, wmax, dw, eps, eta, poly, coeff, eps_sim, amplitude_estimation, surviving, json } => {
            let mut p = CostParams::new(n, wmax, dw, eps)
                .with_system(eta, poly, coeff)
                .with_amplitude_estimation(amplitude_estimation);
            if let Some(e) = eps_sim {
                p = p.with_eps_sim(e);
            }
            print!("{}", commands::cost(&p, surviving, json)?);
        }
        Command::OracleCheck { model, order, trials, seed, dephasing } => {
            let r = commands::oracle_check(&model, order, trials, seed, dephasing)?;
            println!("model {model}, order {order}, {} trials", r.trials);
            println!("max deviation {:.3e}", r.max_deviation);
            if r.max_deviation > ORACLE_THRESHOLD {
                if let Some(w) = r.worst {
                    println!("worst diagram: {w}");
                }
                println!("FAIL: deviation above {ORACLE_THRESHOLD:e}");
                return Ok(ExitCode::FAILURE);
            }
            println!("ok");
        }
    }
    Ok(ExitCode::SUCCESS)
}
