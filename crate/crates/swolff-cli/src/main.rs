//! Binary entry point. Exit codes: 0 when every requested task or check
//! passed, 1 when any failed, 2 for configuration and usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use swolff_cli::config::{parse_config, EpsilonSpec};
use swolff_cli::report::to_json_line_terminated;
use swolff_cli::suites::{run_suite, SUITE_NAMES};
use swolff_cli::tasks::{render_report, run_tasks};
use swolff_core::diagrams::{
    enumerate_generator_trees, enumerate_heff_trees, generator_tree_weight, heff_tree_weight,
};

#[derive(Parser)]
#[command(
    name = "swolff",
    version,
    about = "Effective low-energy Hamiltonians of gapped systems via exact and \
             perturbative block-diagonalizing rotations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the tasks in a JSON config and emit a JSON report
    Run {
        /// Path to the JSON run configuration
        config: PathBuf,
        /// Write the report to this file instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the truncation order from the config
        #[arg(long)]
        order: Option<usize>,
        /// Replace the coupling sweep with this single value
        #[arg(long)]
        epsilon: Option<f64>,
        /// Multiply every pass/fail threshold by this factor
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Enumerate the admissible diagram trees at one order as JSON
    Trees {
        /// Expansion order (number of leaves), between 1 and 8
        #[arg(long)]
        order: usize,
    },
    /// Run a named check suite on seeded random instances
    Verify {
        /// One of coefficients, trees, diagrams, convergence, closed_form,
        /// rotation, additivity, cluster, stability, local, equivalence, all
        #[arg(long)]
        suite: String,
        /// Base seed for the suite's random instances
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    if let Err(msg) = init_threads() {
        eprintln!("swolff: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    match Cli::parse().command {
        Command::Run { config, output, order, epsilon, tolerance_scale } => {
            cmd_run(config, output, order, epsilon, tolerance_scale)
        }
        Command::Trees { order } => cmd_trees(order),
        Command::Verify { suite, seed } => cmd_verify(&suite, seed),
    }
}

/// SWOLFF_THREADS caps intra-task parallelism; unset means the rayon default.
fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SWOLFF_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("SWOLFF_THREADS must be a positive integer, got '{raw}'"))?;
    if n == 0 {
        return Err("SWOLFF_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("thread pool setup failed: {e}"))
}

fn cmd_run(
    config: PathBuf,
    output: Option<PathBuf>,
    order: Option<usize>,
    epsilon: Option<f64>,
    tolerance_scale: f64,
) -> ExitCode {
    let (mut cfg, bytes) = match parse_config(&config) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("swolff: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(n) = order {
        cfg.order = n;
    }
    if let Some(e) = epsilon {
        if !e.is_finite() || e <= 0.0 {
            eprintln!("swolff: --epsilon must be finite and positive, got {e}");
            return ExitCode::from(EXIT_USAGE);
        }
        cfg.epsilon = EpsilonSpec::One(e);
    }
    if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
        eprintln!("swolff: --tolerance-scale must be finite and positive, got {tolerance_scale}");
        return ExitCode::from(EXIT_USAGE);
    }
    let report = match run_tasks(&cfg, &bytes, tolerance_scale) {
        Ok(r) => r,
        // only model construction fails here; per-task errors live in the report
        Err(e) => {
            eprintln!("swolff: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let text = render_report(&report);
    match output.or_else(|| cfg.output.clone()) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &text) {
                eprintln!("swolff: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_FAILED);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(if report.passed { 0 } else { EXIT_FAILED })
}

#[derive(Serialize)]
struct TreeRow {
    /// Preorder arity encoding; leaves are 0.
    encoding: Vec<u8>,
    /// Exact rational weight of the tree in its expansion.
    weight: String,
}

#[derive(Serialize)]
struct TreesOutput {
    order: usize,
    generator_count: usize,
    heff_count: usize,
    generator: Vec<TreeRow>,
    heff: Vec<TreeRow>,
}

/// Enumeration grows combinatorially; the CLI refuses orders above this.
const MAX_TREE_ORDER: usize = 8;

fn cmd_trees(order: usize) -> ExitCode {
    if order == 0 || order > MAX_TREE_ORDER {
        eprintln!("swolff: --order must be between 1 and {MAX_TREE_ORDER}, got {order}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = (|| -> Result<TreesOutput, swolff_core::SwError> {
        let mut generator = Vec::new();
        for t in enumerate_generator_trees(order)? {
            generator.push(TreeRow {
                encoding: t.encoding(),
                weight: generator_tree_weight(&t)?.to_string(),
            });
        }
        let mut heff = Vec::new();
        // the effective-Hamiltonian expansion starts at order 2
        if order >= 2 {
            for t in enumerate_heff_trees(order)? {
                heff.push(TreeRow {
                    encoding: t.encoding(),
                    weight: heff_tree_weight(&t)?.to_string(),
                });
            }
        }
        Ok(TreesOutput {
            order,
            generator_count: generator.len(),
            heff_count: heff.len(),
            generator,
            heff,
        })
    })();
    match result {
        Ok(out) => {
            print!("{}", to_json_line_terminated(&out));
            ExitCode::from(0)
        }
        Err(e) => {
            eprintln!("swolff: {e}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}

fn cmd_verify(suite: &str, seed: u64) -> ExitCode {
    if suite != "all" && !SUITE_NAMES.contains(&suite) {
        eprintln!("swolff: unknown suite '{suite}'; expected one of {SUITE_NAMES:?} or 'all'");
        return ExitCode::from(EXIT_USAGE);
    }
    match run_suite(suite, seed) {
        Ok(rep) => {
            print!("{}", to_json_line_terminated(&rep));
            ExitCode::from(if rep.passed { 0 } else { EXIT_FAILED })
        }
        Err(e) => {
            eprintln!("swolff: {e}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}
