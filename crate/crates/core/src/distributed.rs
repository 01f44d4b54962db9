//! Two-round divide-and-conquer pruning.
//!
//! The ensemble is shuffled and cut into `m` balanced groups. Each group is
//! pruned independently on a worker pool, the union of the group outputs is
//! pruned again, and the best of the `m + 1` candidates under the chosen
//! criterion is returned. With the greedy maximizer and the objective as
//! criterion this is [`domep`]; with any [`Pruner`] it is [`epfd`].
//!
//! "Machines" are simulated as tasks on a rayon pool inside one process.
//! Group tasks share nothing mutable: each receives its own copy of the
//! group's rows and results are reduced in group-id order.

use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble_io::voted_accuracy;
use crate::error::{Error, Result};
use crate::objective::{EnsemblePredictions, Objective, ObjectiveParams};
use crate::pruners::{comep_eval_count, Comep, Pruner, Selection};

/// Disjoint groups covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub groups: Vec<Vec<usize>>,
    pub seed: u64,
}

impl Partition {
    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

/// Shuffles `0..n` and cuts it into `m` groups: the first `n mod m` groups
/// hold `ceil(n/m)` members and the remaining `m*ceil(n/m) - n` hold
/// `floor(n/m)`.
pub fn partition(n: usize, m: usize, seed: u64) -> Result<Partition> {
    if m < 1 || m > n {
        return Err(Error::invalid(format!(
            "machine count {m} must lie in 1..={n} for an ensemble of {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let small = n / m;
    let big_groups = n % m;
    let mut groups = Vec::with_capacity(m);
    let mut rest = order.as_slice();
    for g in 0..m {
        let size = if g < big_groups { small + 1 } else { small };
        let (head, tail) = rest.split_at(size);
        groups.push(head.to_vec());
        rest = tail;
    }
    Ok(Partition { groups, seed })
}

/// How the final candidate is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Largest set objective under the run's `lambda`.
    #[default]
    Tdas,
    /// Largest plurality-vote accuracy on the ensemble's labels.
    VotedAccuracy,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tdas" => Ok(Criterion::Tdas),
            "accuracy" | "voted-accuracy" => Ok(Criterion::VotedAccuracy),
            other => Err(Error::config(format!(
                "unknown criterion '{other}' (expected tdas or voted-accuracy)"
            ))),
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::Tdas => "tdas",
            Criterion::VotedAccuracy => "voted-accuracy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributedConfig {
    pub machines: usize,
    /// Worker pool width; defaults to `machines`.
    pub workers: Option<usize>,
    pub seed: u64,
    pub criterion: Criterion,
}

impl DistributedConfig {
    pub fn new(machines: usize, seed: u64) -> Self {
        Self {
            machines,
            workers: None,
            seed,
            criterion: Criterion::Tdas,
        }
    }

    pub fn with_criterion(self, criterion: Criterion) -> Self {
        Self { criterion, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "group")]
pub enum Winner {
    Union,
    Group(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub group_id: usize,
    pub members: Vec<usize>,
    /// Selection with global indices.
    pub selection: Selection,
    pub criterion_value: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub partition_s: f64,
    pub groups_s: f64,
    pub union_s: f64,
    pub select_s: f64,
    pub total_s: f64,
}

/// Work counters. The critical path is the slowest group plus the union
/// round, i.e. the sequential work with one worker per group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorkCounts {
    pub max_group_tdac_evals: u64,
    pub union_tdac_evals: u64,
    pub critical_path_tdac_evals: u64,
    pub total_tdac_evals: u64,
    pub max_group_candidate_evals: u64,
    pub union_candidate_evals: u64,
    pub critical_path_candidate_evals: u64,
    pub total_candidate_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedResult {
    pub final_selection: Selection,
    pub winner: Winner,
    pub criterion: Criterion,
    pub partition: Partition,
    pub per_group: Vec<GroupOutcome>,
    pub union_members: Vec<usize>,
    pub union_selection: Selection,
    pub union_criterion_value: f64,
    pub work: WorkCounts,
    pub wall_times: PhaseTimes,
}

impl DistributedResult {
    pub fn final_criterion_value(&self) -> f64 {
        match self.winner {
            Winner::Union => self.union_criterion_value,
            Winner::Group(g) => self.per_group[g].criterion_value,
        }
    }
}

fn mix_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over (seed, stream)
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Owns the worker pool that plays the role of the machines.
pub struct DistributedRunner {
    pool: rayon::ThreadPool,
}

impl DistributedRunner {
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .thread_name(|i| format!("entroprune-worker-{i}"))
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `alg` on each group, then on the union of the group outputs, and
    /// keeps the best candidate. Ties prefer the union candidate, then the
    /// lowest group id.
    pub fn epfd(
        &self,
        ens: &EnsemblePredictions,
        params: &ObjectiveParams,
        alg: &dyn Pruner,
        config: &DistributedConfig,
    ) -> Result<DistributedResult> {
        params.validate()?;
        let started = Instant::now();
        let partition = partition(ens.n(), config.machines, config.seed)?;
        let partition_s = started.elapsed().as_secs_f64();

        let groups_started = Instant::now();
        let outcomes: Vec<Result<(Selection, f64)>> = self.pool.install(|| {
            partition
                .groups
                .par_iter()
                .enumerate()
                .map(|(g, members)| {
                    let t = Instant::now();
                    let local = ens.subset(members)?;
                    let sel = alg.prune(&local, params, mix_seed(config.seed, g as u64 + 1))?;
                    Ok((sel.remap(members), t.elapsed().as_secs_f64()))
                })
                .collect()
        });
        let group_selections = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let groups_s = groups_started.elapsed().as_secs_f64();

        let union_started = Instant::now();
        let mut union_members: Vec<usize> = group_selections
            .iter()
            .flat_map(|(s, _)| s.indices.iter().copied())
            .collect();
        union_members.sort_unstable();
        union_members.dedup();
        let union_ens = ens.subset(&union_members)?;
        let union_selection = alg
            .prune(&union_ens, params, mix_seed(config.seed, 0))?
            .remap(&union_members);
        let union_s = union_started.elapsed().as_secs_f64();

        let select_started = Instant::now();
        let score = CandidateScorer::new(ens, &union_members, params, config.criterion)?;
        let union_value = score.value(&union_selection.indices)?;
        let mut winner = Winner::Union;
        let mut best = union_value;
        let mut per_group = Vec::with_capacity(group_selections.len());
        for (g, ((selection, wall), members)) in group_selections
            .into_iter()
            .zip(partition.groups.iter())
            .enumerate()
        {
            let value = score.value(&selection.indices)?;
            if value > best {
                best = value;
                winner = Winner::Group(g);
            }
            per_group.push(GroupOutcome {
                group_id: g,
                members: members.clone(),
                selection,
                criterion_value: value,
                wall_time_s: wall,
            });
        }
        let final_selection = match winner {
            Winner::Union => union_selection.clone(),
            Winner::Group(g) => per_group[g].selection.clone(),
        };
        let select_s = select_started.elapsed().as_secs_f64();

        let work = WorkCounts {
            max_group_tdac_evals: per_group.iter().map(|o| o.selection.tdac_eval_count).max().unwrap_or(0),
            union_tdac_evals: union_selection.tdac_eval_count,
            critical_path_tdac_evals: 0,
            total_tdac_evals: per_group.iter().map(|o| o.selection.tdac_eval_count).sum::<u64>()
                + union_selection.tdac_eval_count,
            max_group_candidate_evals: per_group.iter().map(|o| o.selection.candidate_evals).max().unwrap_or(0),
            union_candidate_evals: union_selection.candidate_evals,
            critical_path_candidate_evals: 0,
            total_candidate_evals: per_group.iter().map(|o| o.selection.candidate_evals).sum::<u64>()
                + union_selection.candidate_evals,
        };
        let work = WorkCounts {
            critical_path_tdac_evals: work.max_group_tdac_evals + work.union_tdac_evals,
            critical_path_candidate_evals: work.max_group_candidate_evals + work.union_candidate_evals,
            ..work
        };

        Ok(DistributedResult {
            final_selection,
            winner,
            criterion: config.criterion,
            partition,
            per_group,
            union_members,
            union_selection,
            union_criterion_value: union_value,
            work,
            wall_times: PhaseTimes {
                partition_s,
                groups_s,
                union_s,
                select_s,
                total_s: started.elapsed().as_secs_f64(),
            },
        })
    }

    /// The two-round distributed greedy: [`DistributedRunner::epfd`] with the
    /// greedy maximizer and the objective as criterion.
    pub fn domep(
        &self,
        ens: &EnsemblePredictions,
        params: &ObjectiveParams,
        machines: usize,
        seed: u64,
    ) -> Result<DistributedResult> {
        self.epfd(ens, params, &Comep::default(), &DistributedConfig::new(machines, seed))
    }
}

/// Scores candidates, all of which are subsets of the union members.
struct CandidateScorer<'a> {
    ens: &'a EnsemblePredictions,
    criterion: Criterion,
    union_ens: Option<EnsemblePredictions>,
    local: Vec<Option<usize>>,
    lambda: f64,
    base: crate::entropy::LogBase,
}

impl<'a> CandidateScorer<'a> {
    fn new(
        ens: &'a EnsemblePredictions,
        union_members: &[usize],
        params: &ObjectiveParams,
        criterion: Criterion,
    ) -> Result<Self> {
        let mut local = vec![None; ens.n()];
        for (pos, &g) in union_members.iter().enumerate() {
            local[g] = Some(pos);
        }
        let union_ens = match criterion {
            Criterion::Tdas => Some(ens.subset(union_members)?),
            Criterion::VotedAccuracy => None,
        };
        Ok(Self {
            ens,
            criterion,
            union_ens,
            local,
            lambda: params.lambda,
            base: params.log_base,
        })
    }

    /// Criterion value computed from the sorted index set, so identical sets
    /// always score identically.
    fn value(&self, indices: &[usize]) -> Result<f64> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        match self.criterion {
            Criterion::VotedAccuracy => voted_accuracy(self.ens, &sorted),
            Criterion::Tdas => {
                let union_ens = self.union_ens.as_ref().expect("built for tdas");
                let local: Vec<usize> = sorted
                    .iter()
                    .map(|&g| self.local[g].expect("candidates are subsets of the union"))
                    .collect();
                Objective::with_base(union_ens, self.lambda, self.base)?.tdas_pairwise(&local)
            }
        }
    }
}

/// [`DistributedRunner::epfd`] on a pool sized by `config.workers` (default
/// `config.machines`).
pub fn epfd(
    ens: &EnsemblePredictions,
    params: &ObjectiveParams,
    alg: &dyn Pruner,
    config: &DistributedConfig,
) -> Result<DistributedResult> {
    DistributedRunner::new(config.workers.unwrap_or(config.machines))?.epfd(ens, params, alg, config)
}

pub fn domep(
    ens: &EnsemblePredictions,
    params: &ObjectiveParams,
    machines: usize,
    seed: u64,
) -> Result<DistributedResult> {
    epfd(ens, params, &Comep::default(), &DistributedConfig::new(machines, seed))
}

/// One row of the speedup table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub m: usize,
    pub centralized_time_s: f64,
    pub time_s: f64,
    pub speedup: f64,
    pub efficiency: f64,
    pub centralized_eval_count: u64,
    /// Critical-path pairwise evaluations of the distributed run.
    pub eval_count: u64,
    pub max_group_eval_count: u64,
    pub union_eval_count: u64,
    /// Centralized evaluations over the slowest group's evaluations.
    pub eval_ratio: f64,
}

/// Times the centralized greedy against the distributed greedy for each
/// machine count, interleaving the two so drift affects both alike.
pub fn benchmark_speedup(
    ens: &EnsemblePredictions,
    params: &ObjectiveParams,
    m_list: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<Vec<SpeedupRow>> {
    if repetitions < 1 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    let mut rows = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let runner = DistributedRunner::new(m)?;
        // warm-up
        let central = crate::pruners::comep(ens, params)?;
        let mut dist = runner.domep(ens, params, m, seed)?;
        let mut central_time = 0.0;
        let mut dist_time = 0.0;
        for _ in 0..repetitions {
            let t = Instant::now();
            let _ = crate::pruners::comep(ens, params)?;
            central_time += t.elapsed().as_secs_f64();
            let t = Instant::now();
            dist = runner.domep(ens, params, m, seed)?;
            dist_time += t.elapsed().as_secs_f64();
        }
        let central_time = central_time / repetitions as f64;
        let dist_time = dist_time / repetitions as f64;
        let speedup = central_time / dist_time;
        debug_assert_eq!(central.tdac_eval_count, comep_eval_count(ens.n(), params.k));
        rows.push(SpeedupRow {
            m,
            centralized_time_s: central_time,
            time_s: dist_time,
            speedup,
            efficiency: speedup / m as f64,
            centralized_eval_count: central.tdac_eval_count,
            eval_count: dist.work.critical_path_tdac_evals,
            max_group_eval_count: dist.work.max_group_tdac_evals,
            union_eval_count: dist.work.union_tdac_evals,
            eval_ratio: if dist.work.max_group_tdac_evals == 0 {
                1.0
            } else {
                central.tdac_eval_count as f64 / dist.work.max_group_tdac_evals as f64
            },
        });
    }
    Ok(rows)
}
