//! Experiment drivers behind the `entroprune` binary.
//!
//! Every driver is a plain function from a [`RunConfig`] (plus
//! command-specific arguments) to a serializable result, so the binary only
//! parses flags and writes output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::distributed::{
    benchmark_speedup, Criterion, DistributedConfig, DistributedResult, DistributedRunner,
    Partition, SpeedupRow, Winner, WorkCounts,
};
use crate::ensemble_io::{
    bagging_train, load_dataset, load_predictions, synthetic_ensemble, synthetic_split,
    voted_accuracy, BaseLearner, SplitSpec, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::objective::{
    binomial, brute_force_optimum_capped, EnsemblePredictions, Objective, ObjectiveParams,
    DEFAULT_ORACLE_CAP,
};
use crate::pruners::{comep, pruner_by_name, Comep, PRUNER_NAMES};

/// Default lambda grid for sweeps: 0.1 to 0.9 in steps of 0.2.
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::config(format!("unknown format '{other}' (expected json or csv)"))),
        }
    }
}

/// Where the validation and test prediction matrices come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum InputSpec {
    Files {
        predictions: PathBuf,
        labels: PathBuf,
        test_predictions: Option<PathBuf>,
        test_labels: Option<PathBuf>,
    },
    Generator {
        spec: SyntheticSpec,
        test_d: usize,
    },
    Dataset {
        path: PathBuf,
        estimators: usize,
        base: BaseLearner,
        split: SplitSpec,
    },
}

impl Default for InputSpec {
    fn default() -> Self {
        InputSpec::Generator {
            spec: SyntheticSpec::default(),
            test_d: SyntheticSpec::default().d,
        }
    }
}

/// Parses a generator description such as
/// `n=20,d=500,classes=2,accuracy=0.75,correlation=0.3,test_d=500`.
/// Missing keys take their defaults; `test_d` defaults to `d`.
pub fn parse_generator(text: &str, seed: u64) -> Result<InputSpec> {
    let mut spec = SyntheticSpec {
        seed,
        ..Default::default()
    };
    let mut test_d = None;
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::config(format!("generator item '{item}' is not key=value")))?;
        let bad = || Error::config(format!("generator value '{value}' for '{key}' does not parse"));
        match key.trim() {
            "n" => spec.n = value.trim().parse().map_err(|_| bad())?,
            "d" => spec.d = value.trim().parse().map_err(|_| bad())?,
            "classes" | "n_classes" => spec.n_classes = value.trim().parse().map_err(|_| bad())?,
            "accuracy" | "base_accuracy" => spec.base_accuracy = value.trim().parse().map_err(|_| bad())?,
            "correlation" => spec.correlation = value.trim().parse().map_err(|_| bad())?,
            "seed" => spec.seed = value.trim().parse().map_err(|_| bad())?,
            "test_d" => test_d = Some(value.trim().parse().map_err(|_| bad())?),
            other => return Err(Error::config(format!("unknown generator key '{other}'"))),
        }
    }
    spec.validate()?;
    Ok(InputSpec::Generator {
        test_d: test_d.unwrap_or(spec.d),
        spec,
    })
}

/// Configuration shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algo: String,
    pub lambda: f64,
    pub k: usize,
    pub machines: usize,
    pub workers: Option<usize>,
    pub seed: u64,
    pub criterion: Criterion,
    pub input: InputSpec,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algo: "comep".into(),
            lambda: crate::objective::DEFAULT_LAMBDA,
            k: 5,
            machines: 1,
            workers: None,
            seed: 0,
            criterion: Criterion::Tdas,
            input: InputSpec::default(),
            out: None,
            format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ObjectiveParams> {
        ObjectiveParams::new(self.lambda, self.k)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.algo_choice()?;
        if self.machines < 1 {
            return Err(Error::config("--machines must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("--workers must be at least 1"));
        }
        Ok(())
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or(self.machines)
    }

    /// Resolves `--algo` into a pruner and whether the run is distributed.
    ///
    /// Plain plugin names run centrally when `machines == 1` and under the
    /// distributed wrapper otherwise; `domep` is the distributed greedy with
    /// the objective as criterion; `epfd:<plugin>` always runs distributed.
    pub fn algo_choice(&self) -> Result<AlgoChoice> {
        if self.algo == "domep" {
            return Ok(AlgoChoice {
                plugin: "comep".into(),
                distributed: true,
                criterion: Criterion::Tdas,
            });
        }
        if let Some(inner) = self.algo.strip_prefix("epfd:") {
            pruner_by_name(inner)?;
            return Ok(AlgoChoice {
                plugin: inner.into(),
                distributed: true,
                criterion: self.criterion,
            });
        }
        if PRUNER_NAMES.contains(&self.algo.as_str()) {
            return Ok(AlgoChoice {
                plugin: self.algo.clone(),
                distributed: self.machines > 1,
                criterion: self.criterion,
            });
        }
        Err(Error::config(format!(
            "unknown algorithm '{}' (expected one of {}, domep, epfd:<plugin>)",
            self.algo,
            PRUNER_NAMES.join(", ")
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgoChoice {
    pub plugin: String,
    pub distributed: bool,
    pub criterion: Criterion,
}

/// Validation and test prediction matrices for the same classifiers.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub validation: EnsemblePredictions,
    pub test: EnsemblePredictions,
}

pub fn load_inputs(input: &InputSpec) -> Result<Inputs> {
    match input {
        InputSpec::Files {
            predictions,
            labels,
            test_predictions,
            test_labels,
        } => {
            let validation = load_predictions(predictions, labels)?;
            let test = match (test_predictions, test_labels) {
                (Some(p), Some(l)) => load_predictions(p, l)?,
                (None, None) => validation.clone(),
                _ => {
                    return Err(Error::config(
                        "--test-predictions and --test-labels must be given together",
                    ))
                }
            };
            if test.n() != validation.n() {
                return Err(Error::invalid(format!(
                    "validation has {} classifiers but test has {}",
                    validation.n(),
                    test.n()
                )));
            }
            Ok(Inputs { validation, test })
        }
        InputSpec::Generator { spec, test_d } => {
            let (validation, test) = synthetic_split(spec, *test_d)?;
            Ok(Inputs { validation, test })
        }
        InputSpec::Dataset {
            path,
            estimators,
            base,
            split,
        } => {
            let data = load_dataset(path)?;
            let bagged = bagging_train(&data, split, *estimators, *base, split.seed)?;
            Ok(Inputs {
                validation: bagged.validation,
                test: bagged.test,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group_id: usize,
    pub members: Vec<usize>,
    pub selected: Vec<usize>,
    pub criterion_value: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedSummary {
    pub plugin: String,
    pub criterion: Criterion,
    pub winner: Winner,
    pub partition: Partition,
    pub per_group: Vec<GroupSummary>,
    pub union_members: Vec<usize>,
    pub union_selected: Vec<usize>,
    pub union_criterion_value: f64,
    pub work: WorkCounts,
}

impl DistributedSummary {
    fn new(plugin: &str, r: &DistributedResult) -> Self {
        Self {
            plugin: plugin.to_string(),
            criterion: r.criterion,
            winner: r.winner,
            partition: r.partition.clone(),
            per_group: r
                .per_group
                .iter()
                .map(|g| GroupSummary {
                    group_id: g.group_id,
                    members: g.members.clone(),
                    selected: g.selection.indices.clone(),
                    criterion_value: g.criterion_value,
                    wall_time_s: g.wall_time_s,
                })
                .collect(),
            union_members: r.union_members.clone(),
            union_selected: r.union_selection.indices.clone(),
            union_criterion_value: r.union_criterion_value,
            work: r.work,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WallTimes {
    pub total_s: f64,
    pub partition_s: Option<f64>,
    pub groups_s: Option<f64>,
    pub union_s: Option<f64>,
    pub select_s: Option<f64>,
}

/// Result of `prune`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub n: usize,
    pub k_effective: usize,
    pub selected: Vec<usize>,
    pub tdas: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    pub tdac_eval_count: u64,
    pub candidate_evals: u64,
    pub clamped: bool,
    pub wall_times: WallTimes,
    pub distributed: Option<DistributedSummary>,
}

/// Runs the configured pruner and scores the selection by plurality vote on
/// the validation and test matrices.
pub fn cmd_prune(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let inputs = load_inputs(&config.input)?;
    prune_inputs(config, &inputs)
}

pub fn prune_inputs(config: &RunConfig, inputs: &Inputs) -> Result<Report> {
    config.validate()?;
    let params = config.params()?;
    let choice = config.algo_choice()?;
    let plugin = pruner_by_name(&choice.plugin)?;
    let ens = &inputs.validation;
    let started = Instant::now();
    let (selection, distributed, mut wall_times) = if choice.distributed {
        let runner = DistributedRunner::new(config.workers())?;
        let cfg = DistributedConfig {
            machines: config.machines,
            workers: config.workers,
            seed: config.seed,
            criterion: choice.criterion,
        };
        let result = runner.epfd(ens, &params, plugin.as_ref(), &cfg)?;
        let times = WallTimes {
            total_s: 0.0,
            partition_s: Some(result.wall_times.partition_s),
            groups_s: Some(result.wall_times.groups_s),
            union_s: Some(result.wall_times.union_s),
            select_s: Some(result.wall_times.select_s),
        };
        let summary = DistributedSummary::new(&choice.plugin, &result);
        let mut selection = result.final_selection;
        // Instrumentation of a distributed run is its critical path.
        selection.tdac_eval_count = result.work.critical_path_tdac_evals;
        selection.candidate_evals = result.work.critical_path_candidate_evals;
        (selection, Some(summary), times)
    } else {
        (plugin.prune(ens, &params, config.seed)?, None, WallTimes::default())
    };
    wall_times.total_s = started.elapsed().as_secs_f64();

    let sorted = selection.sorted_indices();
    let tdas = Objective::with_base(ens, params.lambda, params.log_base)?.tdas_pairwise(&sorted)?;
    Ok(Report {
        config: config.clone(),
        n: ens.n(),
        k_effective: selection.len(),
        validation_accuracy: voted_accuracy(ens, &sorted)?,
        test_accuracy: voted_accuracy(&inputs.test, &sorted)?,
        selected: selection.indices,
        tdas,
        tdac_eval_count: selection.tdac_eval_count,
        candidate_evals: selection.candidate_evals,
        clamped: selection.clamped,
        wall_times,
        distributed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub k: usize,
    pub selected: Vec<usize>,
    pub tdas: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
}

/// Greedy selection accuracy over a `lambda x k` grid; distributed when
/// `config.machines > 1`.
pub fn cmd_sweep_lambda(config: &RunConfig, lambda_grid: &[f64], k_grid: &[usize]) -> Result<Vec<SweepRow>> {
    let inputs = load_inputs(&config.input)?;
    sweep_lambda_inputs(config, &inputs, lambda_grid, k_grid)
}

pub fn sweep_lambda_inputs(
    config: &RunConfig,
    inputs: &Inputs,
    lambda_grid: &[f64],
    k_grid: &[usize],
) -> Result<Vec<SweepRow>> {
    if lambda_grid.is_empty() || k_grid.is_empty() {
        return Err(Error::config("lambda and k grids must be nonempty"));
    }
    let runner = if config.machines > 1 {
        Some(DistributedRunner::new(config.workers())?)
    } else {
        None
    };
    let ens = &inputs.validation;
    let mut rows = Vec::new();
    for &k in k_grid {
        for &lambda in lambda_grid {
            let params = ObjectiveParams::new(lambda, k)?;
            let selection = match &runner {
                Some(r) => r.domep(ens, &params, config.machines, config.seed)?.final_selection,
                None => comep(ens, &params)?,
            };
            let sorted = selection.sorted_indices();
            rows.push(SweepRow {
                lambda,
                k,
                tdas: Objective::new(ens, lambda)?.tdas_pairwise(&sorted)?,
                validation_accuracy: voted_accuracy(ens, &sorted)?,
                test_accuracy: voted_accuracy(&inputs.test, &sorted)?,
                selected: selection.indices,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboRow {
    pub subset: Vec<usize>,
    pub tdas: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
}

/// Least-squares fit and correlation of accuracy against the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// `None` when either column has zero variance.
    pub pearson: Option<f64>,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Fit {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return Fit {
            slope: None,
            intercept: None,
            pearson: None,
        };
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let tiny = |s: f64, m: f64| s <= 1e-24 * (1.0 + m * m) * n;
    let slope = (!tiny(sxx, mx)).then(|| sxy / sxx);
    Fit {
        slope,
        intercept: slope.map(|s| my - s * mx),
        pearson: (!tiny(sxx, mx) && !tiny(syy, my)).then(|| sxy / (sxx * syy).sqrt()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValidation {
    pub combo_size: usize,
    pub lambda: f64,
    pub rows: Vec<ComboRow>,
    /// Validation accuracy against the objective (both from validation data).
    pub validation_fit: Fit,
    pub test_fit: Fit,
}

/// Enumerates every `combo_size`-subset and records objective and accuracy.
pub fn cmd_validate_objective(config: &RunConfig, combo_size: usize) -> Result<ObjectiveValidation> {
    let inputs = load_inputs(&config.input)?;
    validate_objective_inputs(config, &inputs, combo_size)
}

pub fn validate_objective_inputs(
    config: &RunConfig,
    inputs: &Inputs,
    combo_size: usize,
) -> Result<ObjectiveValidation> {
    let ens = &inputs.validation;
    if combo_size < 1 || combo_size > ens.n() {
        return Err(Error::invalid(format!(
            "combination size {combo_size} must lie in 1..={}",
            ens.n()
        )));
    }
    let candidates = binomial(ens.n(), combo_size);
    if candidates > DEFAULT_ORACLE_CAP as u128 {
        return Err(Error::OracleTooLarge {
            candidates,
            cap: DEFAULT_ORACLE_CAP,
        });
    }
    let objective = Objective::new(ens, config.lambda)?;
    let rows = (0..ens.n())
        .combinations(combo_size)
        .map(|subset| {
            Ok(ComboRow {
                tdas: objective.tdas_pairwise(&subset)?,
                validation_accuracy: voted_accuracy(ens, &subset)?,
                test_accuracy: voted_accuracy(&inputs.test, &subset)?,
                subset,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.tdas).collect();
    let yv: Vec<f64> = rows.iter().map(|r| r.validation_accuracy).collect();
    let yt: Vec<f64> = rows.iter().map(|r| r.test_accuracy).collect();
    Ok(ObjectiveValidation {
        combo_size,
        lambda: config.lambda,
        validation_fit: linear_fit(&x, &yv),
        test_fit: linear_fit(&x, &yt),
        rows,
    })
}

pub fn cmd_benchmark(config: &RunConfig, m_list: &[usize], repetitions: usize) -> Result<Vec<SpeedupRow>> {
    let inputs = load_inputs(&config.input)?;
    benchmark_speedup(&inputs.validation, &config.params()?, m_list, repetitions, config.seed)
}

/// Greedy and distributed-greedy objective against the exhaustive optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub k: usize,
    pub machines: usize,
    pub optimum_subset: Vec<usize>,
    pub optimum_tdas: f64,
    pub comep_subset: Vec<usize>,
    pub comep_tdas: f64,
    pub domep_subset: Vec<usize>,
    pub domep_tdas: f64,
    pub comep_ratio: f64,
    pub domep_ratio: f64,
}

fn ratio(value: f64, optimum: f64) -> f64 {
    if optimum <= 0.0 {
        1.0
    } else {
        value / optimum
    }
}

pub fn oracle_compare(
    ens: &EnsemblePredictions,
    params: &ObjectiveParams,
    machines: usize,
    seed: u64,
) -> Result<OracleReport> {
    let k = params.k.min(ens.n());
    let params = params.with_k(k);
    let (optimum_subset, optimum_tdas) = brute_force_optimum_capped(ens, &params, DEFAULT_ORACLE_CAP)?;
    let objective = Objective::new(ens, params.lambda)?;
    let c = comep(ens, &params)?;
    let comep_tdas = objective.tdas_pairwise(&c.sorted_indices())?;
    let d = DistributedRunner::new(machines)?.epfd(
        ens,
        &params,
        &Comep::default(),
        &DistributedConfig::new(machines, seed),
    )?;
    let domep_tdas = objective.tdas_pairwise(&d.final_selection.sorted_indices())?;
    Ok(OracleReport {
        n: ens.n(),
        k,
        machines,
        optimum_subset,
        optimum_tdas,
        comep_ratio: ratio(comep_tdas, optimum_tdas),
        domep_ratio: ratio(domep_tdas, optimum_tdas),
        comep_subset: c.sorted_indices(),
        comep_tdas,
        domep_subset: d.final_selection.sorted_indices(),
        domep_tdas,
    })
}

/// Single-instance oracle comparison on the configured input.
pub fn cmd_oracle(config: &RunConfig) -> Result<OracleReport> {
    config.params()?;
    let inputs = load_inputs(&config.input)?;
    let machines = config.machines.min(inputs.validation.n());
    oracle_compare(&inputs.validation, &config.params()?, machines, config.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSweep {
    pub instances: Vec<OracleReport>,
    pub min_comep_ratio: f64,
    pub min_domep_ratio: f64,
}

/// Random small instances: `n` in `max(k_max,machines)..=n_max`, `k` in
/// `1..=k_max`, machines cycling through `machine_list`.
pub fn oracle_sweep(
    count: usize,
    n_max: usize,
    k_max: usize,
    machine_list: &[usize],
    lambda: f64,
    seed: u64,
) -> Result<OracleSweep> {
    use rand::{Rng, SeedableRng};
    if machine_list.is_empty() {
        return Err(Error::config("machine list must be nonempty"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(count);
    for i in 0..count {
        let machines = machine_list[i % machine_list.len()];
        let n_min = k_max.max(machines).max(2);
        let n = rng.random_range(n_min..=n_max.max(n_min));
        let k = rng.random_range(1..=k_max.min(n));
        let spec = SyntheticSpec {
            n,
            d: rng.random_range(20..=200),
            n_classes: rng.random_range(2..=4),
            base_accuracy: rng.random_range(0.4..0.95),
            correlation: rng.random_range(0.0..0.8),
            seed: rng.random(),
        };
        let ens = synthetic_ensemble(&spec)?;
        instances.push(oracle_compare(&ens, &ObjectiveParams::new(lambda, k)?, machines, rng.random())?);
    }
    Ok(OracleSweep {
        min_comep_ratio: instances.iter().map(|r| r.comep_ratio).fold(f64::INFINITY, f64::min),
        min_domep_ratio: instances.iter().map(|r| r.domep_ratio).fold(f64::INFINITY, f64::min),
        instances,
    })
}

/// Writes `content` to `path` atomically (temp file in the same directory,
/// then rename), or to stdout when no path is given.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(content.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        }
    }
    Ok(())
}

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

/// Serialized command output: a JSON envelope `{command, config, result}` or
/// a CSV table.
pub trait Tabular {
    fn csv(&self) -> String;
}

impl Tabular for Report {
    fn csv(&self) -> String {
        format!(
            "algo,lambda,k,machines,seed,n,k_effective,selected,tdas,validation_accuracy,test_accuracy,tdac_eval_count,candidate_evals,clamped,total_s\n\
             {},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.config.algo,
            self.config.lambda,
            self.config.k,
            self.config.machines,
            self.config.seed,
            self.n,
            self.k_effective,
            join(&self.selected, " "),
            self.tdas,
            self.validation_accuracy,
            self.test_accuracy,
            self.tdac_eval_count,
            self.candidate_evals,
            self.clamped,
            self.wall_times.total_s
        )
    }
}

impl Tabular for Vec<SweepRow> {
    fn csv(&self) -> String {
        let mut out = String::from("lambda,k,selected,tdas,validation_accuracy,test_accuracy\n");
        for r in self {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.lambda,
                r.k,
                join(&r.selected, " "),
                r.tdas,
                r.validation_accuracy,
                r.test_accuracy
            ));
        }
        out
    }
}

impl Tabular for ObjectiveValidation {
    fn csv(&self) -> String {
        let mut out = format!(
            "# slope={} intercept={} pearson={} test_pearson={}\nsubset,tdas,validation_accuracy,test_accuracy\n",
            opt(self.validation_fit.slope),
            opt(self.validation_fit.intercept),
            opt(self.validation_fit.pearson),
            opt(self.test_fit.pearson)
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                join(&r.subset, " "),
                r.tdas,
                r.validation_accuracy,
                r.test_accuracy
            ));
        }
        out
    }
}

impl Tabular for Vec<SpeedupRow> {
    fn csv(&self) -> String {
        let mut out = String::from(
            "m,time_s,speedup,efficiency,eval_count,centralized_time_s,centralized_eval_count,max_group_eval_count,union_eval_count,eval_ratio\n",
        );
        for r in self {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.m,
                r.time_s,
                r.speedup,
                r.efficiency,
                r.eval_count,
                r.centralized_time_s,
                r.centralized_eval_count,
                r.max_group_eval_count,
                r.union_eval_count,
                r.eval_ratio
            ));
        }
        out
    }
}

impl Tabular for OracleReport {
    fn csv(&self) -> String {
        OracleSweep {
            instances: vec![self.clone()],
            min_comep_ratio: self.comep_ratio,
            min_domep_ratio: self.domep_ratio,
        }
        .csv()
    }
}

impl Tabular for OracleSweep {
    fn csv(&self) -> String {
        let mut out = String::from(
            "n,k,machines,optimum_tdas,comep_tdas,domep_tdas,comep_ratio,domep_ratio,optimum_subset,comep_subset,domep_subset\n",
        );
        for r in &self.instances {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.k,
                r.machines,
                r.optimum_tdas,
                r.comep_tdas,
                r.domep_tdas,
                r.comep_ratio,
                r.domep_ratio,
                join(&r.optimum_subset, " "),
                join(&r.comep_subset, " "),
                join(&r.domep_subset, " ")
            ));
        }
        out
    }
}

/// Renders a command result in the requested format.
pub fn render<T: Serialize + Tabular>(
    command: &str,
    config: &RunConfig,
    result: &T,
    format: OutputFormat,
) -> Result<String> {
    match format {
        OutputFormat::Csv => Ok(result.csv()),
        OutputFormat::Json => {
            let envelope = serde_json::json!({
                "command": command,
                "config": config,
                "result": result,
            });
            let mut s = serde_json::to_string_pretty(&envelope)
                .map_err(|e| Error::invalid(format!("cannot serialize report: {e}")))?;
            s.push('\n');
            Ok(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(algo: &str, k: usize, machines: usize) -> RunConfig {
        RunConfig {
            algo: algo.into(),
            k,
            machines,
            input: parse_generator("n=10,d=200,classes=2,accuracy=0.7,correlation=0.2,test_d=150", 3).unwrap(),
            ..Default::default()
        }
    }

    #[test]
    fn generator_parsing() {
        match parse_generator("n=8, d=100, accuracy=0.6", 4).unwrap() {
            InputSpec::Generator { spec, test_d } => {
                assert_eq!((spec.n, spec.d, spec.seed, test_d), (8, 100, 4, 100));
                assert_eq!(spec.base_accuracy, 0.6);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_generator("n=8,zzz=1", 0).is_err());
        assert!(parse_generator("n", 0).is_err());
        assert!(parse_generator("accuracy=2", 0).is_err());
    }

    #[test]
    fn algo_resolution() {
        let c = small_config("comep", 3, 1);
        assert!(!c.algo_choice().unwrap().distributed);
        assert!(small_config("comep", 3, 2).algo_choice().unwrap().distributed);
        assert!(small_config("epfd:kappa", 3, 1).algo_choice().unwrap().distributed);
        assert_eq!(small_config("domep", 3, 2).algo_choice().unwrap().plugin, "comep");
        assert!(matches!(small_config("epfd:nope", 3, 1).algo_choice(), Err(Error::Config(_))));
        assert!(small_config("pep", 3, 1).validate().is_err());
    }

    #[test]
    fn prune_full_set_matches_full_vote() {
        let config = small_config("comep", 10, 1);
        let inputs = load_inputs(&config.input).unwrap();
        let report = prune_inputs(&config, &inputs).unwrap();
        let all: Vec<usize> = (0..10).collect();
        let mut sel = report.selected.clone();
        sel.sort_unstable();
        assert_eq!(sel, all);
        assert_eq!(report.test_accuracy, voted_accuracy(&inputs.test, &all).unwrap());
    }

    #[test]
    fn centralized_and_wrapped_agree_on_one_machine() {
        let a = cmd_prune(&small_config("comep", 4, 1)).unwrap();
        let b = cmd_prune(&small_config("epfd:comep", 4, 1)).unwrap();
        let sort = |mut v: Vec<usize>| {
            v.sort_unstable();
            v
        };
        assert_eq!(sort(a.selected), sort(b.selected));
        assert!(b.distributed.is_some());
    }

    #[test]
    fn random_seeds_differ() {
        let mut c = RunConfig {
            algo: "random".into(),
            k: 5,
            input: parse_generator("n=20,d=50", 1).unwrap(),
            ..Default::default()
        };
        c.seed = 1;
        let a = cmd_prune(&c).unwrap();
        c.seed = 2;
        let b = cmd_prune(&c).unwrap();
        assert_ne!(a.selected, b.selected);
    }

    #[test]
    fn sweep_default_grid_and_clamping() {
        let config = small_config("comep", 3, 1);
        let inputs = load_inputs(&config.input).unwrap();
        let rows = sweep_lambda_inputs(&config, &inputs, &DEFAULT_LAMBDA_GRID, &[3, 12]).unwrap();
        assert_eq!(rows.len(), 10);
        let full = voted_accuracy(&inputs.test, &(0..10).collect::<Vec<_>>()).unwrap();
        for r in rows.iter().filter(|r| r.k == 12) {
            assert_eq!(r.test_accuracy, full);
        }
        assert!(sweep_lambda_inputs(&config, &inputs, &[], &[3]).is_err());
    }

    #[test]
    fn validate_objective_degenerate_and_full() {
        let ens = EnsemblePredictions::from_raw(vec![vec![0, 1, 1, 0, 1]; 5], vec![0, 1, 0, 0, 1]).unwrap();
        let inputs = Inputs {
            validation: ens.clone(),
            test: ens.clone(),
        };
        let config = RunConfig::default();
        let v = validate_objective_inputs(&config, &inputs, 3).unwrap();
        assert_eq!(v.rows.len(), 10);
        assert!(v.validation_fit.pearson.is_none());
        let csv = v.csv();
        assert!(csv.contains("pearson=NaN"));

        let full = validate_objective_inputs(&config, &inputs, 5).unwrap();
        assert_eq!(full.rows.len(), 1);
        assert!(validate_objective_inputs(&config, &inputs, 6).is_err());
    }

    #[test]
    fn linear_fit_recovers_a_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!((f.slope.unwrap() - 2.0).abs() < 1e-12);
        assert!((f.intercept.unwrap() - 1.0).abs() < 1e-12);
        assert!((f.pearson.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_on_full_instance() {
        let config = small_config("comep", 10, 2);
        let r = cmd_oracle(&config).unwrap();
        assert!((r.optimum_tdas - r.comep_tdas).abs() < 1e-9);
        assert!((r.optimum_tdas - r.domep_tdas).abs() < 1e-9);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_output(Some(&path), "one").unwrap();
        write_output(Some(&path), "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
