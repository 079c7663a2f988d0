use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use packing_bb::bb::{self, BbConfig, BbError, NodeRule};
use packing_bb::geometry;
use packing_bb::harness::{self, ExperimentConfig, ExperimentKind, HarnessError};
use packing_bb::instance::{InstanceError, PackingInstance};
use packing_bb::oracle::{self, OracleCaps, OracleError};

/// Branch-and-bound for random 0/1 packing programs, with exhaustive
/// verification tools.
#[derive(Parser)]
#[command(name = "packing-bb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance (A, c uniform on [0,1], b_i = beta_i n).
    Generate {
        #[arg(short = 'm', long)]
        m: usize,
        #[arg(short = 'n', long)]
        n: usize,
        /// One value, or one per row, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if omitted.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Solve an instance and print a JSON summary.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "best-bound")]
        node_rule: NodeRule,
        /// first, most-fractional, random or adversarial-replay.
        #[arg(long, default_value = "first")]
        var_rule: String,
        /// Seed of the random variable rule.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated branching indices for adversarial-replay.
        #[arg(long, value_delimiter = ',')]
        script: Vec<usize>,
        #[arg(long, default_value_t = bb::DEFAULT_NODE_BUDGET)]
        node_budget: usize,
        /// Write the tree (one node per line) to this file.
        #[arg(long)]
        tree_dump: Option<PathBuf>,
    },
    /// Enumerate the good set and print the census as JSON.
    Census {
        instance: PathBuf,
        /// Largest n the census accepts.
        #[arg(long, default_value_t = oracle::DEFAULT_CENSUS_MAX_N)]
        cap: usize,
        /// Also solve with this node rule and check the tree against the bound.
        #[arg(long)]
        observe: Option<NodeRule>,
    },
    /// Node counts and integrality gaps across n.
    Scaling(ExperimentArgs),
    /// Point counts of random slabs around the column points.
    Slabs(ExperimentArgs),
    /// Distinct dual partial solutions of an instance.
    Arrangement {
        instance: PathBuf,
        /// Sampled duals.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include every cell pattern in the output.
        #[arg(long)]
        list: bool,
    },
    /// Run an experiment from a key = value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(short = 'm', long)]
    m: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    beta: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    #[arg(long, default_value_t = 1)]
    base_seed: u64,
    #[arg(long, default_value = "first")]
    var_rule: String,
    #[arg(long, default_value = "best-bound")]
    node_rule: NodeRule,
    #[arg(long, default_value_t = bb::DEFAULT_NODE_BUDGET)]
    node_budget: usize,
    /// Slabs per instance.
    #[arg(long, default_value_t = 50)]
    directions: usize,
    /// Rows CSV output.
    #[arg(long)]
    rows: Option<PathBuf>,
    /// Aggregate JSON output (also printed to stdout).
    #[arg(long)]
    aggregate: Option<PathBuf>,
    /// Per-task wall-clock times.
    #[arg(long)]
    timings: Option<PathBuf>,
}

impl ExperimentArgs {
    fn into_config(self, kind: ExperimentKind) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(kind, self.m, self.beta, self.n_list);
        config.replicas = self.replicas;
        config.base_seed = self.base_seed;
        config.var_rule = self.var_rule;
        config.node_rule = self.node_rule;
        config.node_budget = self.node_budget;
        config.directions = self.directions;
        config.rows = self.rows;
        config.aggregate = self.aggregate;
        config.timings = self.timings;
        config
    }
}

/// Error with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    fn assertion(message: impl ToString) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        Failure::usage(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::usage(e)
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } => Failure::usage(e),
            other => Failure::assertion(other),
        }
    }
}

impl From<BbError> for Failure {
    fn from(e: BbError) -> Self {
        match e {
            BbError::InvalidScript { .. } => Failure::usage(e),
            other => Failure::assertion(other),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_usage() || matches!(e, HarnessError::Io(_) | HarnessError::Instance(_)) {
            Failure::usage(e)
        } else {
            Failure::assertion(e)
        }
    }
}

fn load(path: &PathBuf) -> Result<PackingInstance, Failure> {
    let loaded = PackingInstance::load_from_path(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    for warning in &loaded.warnings {
        eprintln!("warning: {}: {warning}", path.display());
    }
    Ok(loaded.instance)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run_experiment(config: ExperimentConfig) -> Result<(), Failure> {
    let report = harness::run(&config)?;
    print_json(&report.aggregate)?;
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::assertion(report.failures.join("\n")))
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            m,
            n,
            beta,
            seed,
            output,
        } => {
            let beta = if beta.len() == 1 {
                vec![beta[0]; m]
            } else {
                beta
            };
            let inst = PackingInstance::generate(m, n, &beta, seed)?;
            match output {
                Some(path) => inst.save_to_path(path)?,
                None => inst.save(io::stdout().lock())?,
            }
        }
        Command::Solve {
            instance,
            node_rule,
            var_rule,
            seed,
            script,
            node_budget,
            tree_dump,
        } => {
            let inst = load(&instance)?;
            let rule =
                harness::parse_variable_rule(&var_rule, seed, &script).map_err(Failure::usage)?;
            let config = BbConfig {
                node_budget,
                ..BbConfig::default()
            };
            let result = bb::solve_with(&inst, &rule, node_rule, &config)?;
            if let Some(path) = tree_dump {
                let mut w = BufWriter::new(File::create(path)?);
                result.write_tree_dump(&mut w)?;
                w.flush()?;
            }
            print_json(&result.summary())?;
        }
        Command::Census {
            instance,
            cap,
            observe,
        } => {
            let inst = load(&instance)?;
            let caps = OracleCaps {
                census_max_n: cap,
                ..OracleCaps::default()
            };
            let mut report = oracle::good_set_capped(&inst, caps)?;
            if let Some(node_rule) = observe {
                let result = bb::solve(&inst, &bb::VariableRule::First, node_rule)?;
                report = report.with_observed(result.node_count);
            }
            print_json(&report)?;
            if report.bound_satisfied == Some(false) {
                return Err(Failure::assertion("node count exceeds the good-set bound"));
            }
        }
        Command::Scaling(args) => run_experiment(args.into_config(ExperimentKind::Scaling))?,
        Command::Slabs(args) => run_experiment(args.into_config(ExperimentKind::Slabs))?,
        Command::Arrangement {
            instance,
            trials,
            seed,
            list,
        } => {
            let inst = load(&instance)?;
            let sampled = geometry::sample_cells(&inst, trials, seed, &[]);
            let mut out = json!({
                "m": inst.m(),
                "n": inst.n(),
                "trials": trials,
                "sampled_distinct": sampled.len(),
            });
            let mut missing = 0;
            if inst.m() == 1 {
                let cells = geometry::enumerate_cells_1d(&inst).expect("m = 1");
                let known: HashSet<_> = cells.iter().map(|c| c.assignment.clone()).collect();
                missing = sampled
                    .iter()
                    .filter(|p| !known.contains(&p.assignment))
                    .count();
                out["exact_cells"] = json!(cells.len());
                out["cell_bound"] = json!(2 * inst.n() + 1);
                out["sampled_missing"] = json!(missing);
                if list {
                    out["cells"] = json!(cells.iter().map(|c| c.pattern()).collect::<Vec<_>>());
                }
            } else if list {
                out["cells"] = json!(sampled.iter().map(|c| c.pattern()).collect::<Vec<_>>());
            }
            print_json(&out)?;
            if missing > 0 {
                return Err(Failure::assertion(
                    "sampled duals outside the enumerated cells",
                ));
            }
        }
        Command::Run { config } => {
            let config = ExperimentConfig::from_path(&config)
                .map_err(|e| Failure::usage(format!("{}: {e}", config.display())))?;
            run_experiment(config)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
