use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use entroprune::ensemble_io::{BaseLearner, SplitSpec};
use entroprune::harness::{
    self, parse_generator, render, write_output, InputSpec, OutputFormat, RunConfig,
    DEFAULT_LAMBDA_GRID,
};
use entroprune::{Criterion, Error, Result};

/// Entropy-objective ensemble pruning experiments.
#[derive(Debug, Parser)]
#[command(name = "entroprune", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prune one ensemble and score the selection.
    Prune {
        #[command(flatten)]
        common: Common,
    },
    /// Accuracy of the greedy selection over a lambda x k grid.
    SweepLambda {
        #[command(flatten)]
        common: Common,
        /// Comma-separated lambda values [default: 0.1,0.3,0.5,0.7,0.9]
        #[arg(long)]
        lambdas: Option<String>,
        /// Comma-separated sub-ensemble sizes [default: the --k value]
        #[arg(long)]
        ks: Option<String>,
    },
    /// Objective and voted accuracy of every fixed-size combination.
    ValidateObjective {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        combo_size: usize,
    },
    /// Speedup and efficiency of the distributed greedy.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Comma-separated machine counts.
        #[arg(long, default_value = "1,2,3")]
        m_list: String,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
    },
    /// Greedy and distributed greedy against the exhaustive optimum.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Run a sweep over this many random small instances instead of the
        /// configured input.
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 5)]
        k_max: usize,
        /// Comma-separated machine counts cycled through by the sweep.
        #[arg(long, default_value = "2,3")]
        machine_list: String,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// key=value file supplying defaults for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// comep, reduce-error, kappa, random, domep, or epfd:<plugin>
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    machines: Option<usize>,
    /// Worker pool width [default: machines]
    #[arg(long)]
    workers: Option<usize>,
    /// Falls back to ENTROPRUNE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// tdas or voted-accuracy
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    test_predictions: Option<PathBuf>,
    #[arg(long)]
    test_labels: Option<PathBuf>,
    /// Feature CSV to bag base learners on.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    estimators: Option<usize>,
    /// stump or one_nn
    #[arg(long)]
    base: Option<String>,
    /// e.g. n=20,d=500,classes=2,accuracy=0.75,correlation=0.3,test_d=500
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv
    #[arg(long)]
    format: Option<String>,
}

fn read_config_file(path: &PathBuf) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            source_name: path.display().to_string(),
            line: no + 1,
            column: 1,
            message: "expected key=value".into(),
        })?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

/// Flag value, else config-file value, parsed.
fn pick<T: FromStr>(flag: Option<T>, file: &HashMap<String, String>, key: &str) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("config value '{raw}' for '{key}' does not parse"))),
    }
}

fn build_config(common: Common) -> Result<RunConfig> {
    let file = match &common.config {
        Some(p) => read_config_file(p)?,
        None => HashMap::new(),
    };
    let defaults = RunConfig::default();
    let env_seed = match std::env::var("ENTROPRUNE_SEED") {
        Ok(s) => Some(
            s.parse::<u64>()
                .map_err(|_| Error::Config(format!("ENTROPRUNE_SEED='{s}' is not an integer")))?,
        ),
        Err(_) => None,
    };
    let seed = pick(common.seed, &file, "seed")?.or(env_seed).unwrap_or(0);

    let predictions: Option<PathBuf> = pick(common.predictions, &file, "predictions")?;
    let labels: Option<PathBuf> = pick(common.labels, &file, "labels")?;
    let dataset: Option<PathBuf> = pick(common.dataset, &file, "dataset")?;
    let generator: Option<String> = pick(common.generator, &file, "generator")?;
    let input = match (predictions, labels, dataset, generator) {
        (Some(predictions), Some(labels), None, None) => InputSpec::Files {
            predictions,
            labels,
            test_predictions: pick(common.test_predictions, &file, "test-predictions")?,
            test_labels: pick(common.test_labels, &file, "test-labels")?,
        },
        (None, None, Some(path), None) => InputSpec::Dataset {
            path,
            estimators: pick(common.estimators, &file, "estimators")?.unwrap_or(20),
            base: BaseLearner::from_str(&pick(common.base, &file, "base")?.unwrap_or_else(|| "stump".into()))?,
            split: SplitSpec {
                seed,
                ..Default::default()
            },
        },
        (None, None, None, Some(g)) => parse_generator(&g, seed)?,
        (None, None, None, None) => parse_generator("", seed)?,
        (Some(_), None, _, _) | (None, Some(_), _, _) => {
            return Err(Error::Config("--predictions and --labels must be given together".into()))
        }
        _ => {
            return Err(Error::Config(
                "choose exactly one input: --predictions/--labels, --dataset, or --generator".into(),
            ))
        }
    };

    let criterion = match pick::<String>(common.criterion, &file, "criterion")? {
        Some(c) => Criterion::from_str(&c)?,
        None => defaults.criterion,
    };
    let format = match pick::<String>(common.format, &file, "format")? {
        Some(f) => OutputFormat::from_str(&f)?,
        None => defaults.format,
    };
    let config = RunConfig {
        algo: pick(common.algo, &file, "algo")?.unwrap_or(defaults.algo),
        lambda: pick(common.lambda, &file, "lambda")?.unwrap_or(defaults.lambda),
        k: pick(common.k, &file, "k")?.unwrap_or(defaults.k),
        machines: pick(common.machines, &file, "machines")?.unwrap_or(defaults.machines),
        workers: pick(common.workers, &file, "workers")?,
        seed,
        criterion,
        input,
        out: pick(common.out, &file, "out")?,
        format,
    };
    config.validate()?;
    Ok(config)
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("'{s}' in --{what} does not parse")))
        })
        .collect()
}

fn emit<T: serde::Serialize + harness::Tabular>(command: &str, config: &RunConfig, result: &T) -> Result<()> {
    let text = render(command, config, result, config.format)?;
    write_output(config.out.as_deref(), &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prune { common } => {
            let config = build_config(common)?;
            let report = harness::cmd_prune(&config)?;
            emit("prune", &config, &report)
        }
        Command::SweepLambda { common, lambdas, ks } => {
            let config = build_config(common)?;
            let lambdas = match lambdas {
                Some(s) => parse_list(&s, "lambdas")?,
                None => DEFAULT_LAMBDA_GRID.to_vec(),
            };
            let ks = match ks {
                Some(s) => parse_list(&s, "ks")?,
                None => vec![config.k],
            };
            let rows = harness::cmd_sweep_lambda(&config, &lambdas, &ks)?;
            emit("sweep-lambda", &config, &rows)
        }
        Command::ValidateObjective { common, combo_size } => {
            let config = build_config(common)?;
            let table = harness::cmd_validate_objective(&config, combo_size)?;
            emit("validate-objective", &config, &table)
        }
        Command::Benchmark {
            common,
            m_list,
            repetitions,
        } => {
            let config = build_config(common)?;
            let rows = harness::cmd_benchmark(&config, &parse_list(&m_list, "m-list")?, repetitions)?;
            emit("benchmark", &config, &rows)
        }
        Command::Oracle {
            common,
            instances,
            n_max,
            k_max,
            machine_list,
        } => {
            let config = build_config(common)?;
            match instances {
                Some(count) => {
                    let sweep = harness::oracle_sweep(
                        count,
                        n_max,
                        k_max,
                        &parse_list(&machine_list, "machine-list")?,
                        config.lambda,
                        config.seed,
                    )?;
                    emit("oracle", &config, &sweep)
                }
                None => {
                    let report = harness::cmd_oracle(&config)?;
                    emit("oracle", &config, &report)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{obj}");
            ExitCode::FAILURE
        }
    }
}
