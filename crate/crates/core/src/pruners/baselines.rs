//! Baseline pruners used to exercise the distributed framework.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{effective_k, Pruner, Selection};
use crate::ensemble_io::VoteTally;
use crate::entropy::LabelVector;
use crate::error::Result;
use crate::objective::{EnsemblePredictions, Objective, ObjectiveParams};

fn finish(
    ens: &EnsemblePredictions,
    params: &ObjectiveParams,
    indices: Vec<usize>,
    candidate_evals: u64,
    clamped: bool,
) -> Result<Selection> {
    let tdas = Objective::with_base(ens, params.lambda, params.log_base)?.tdas_pairwise(&indices)?;
    Ok(Selection {
        indices,
        tdas,
        tdac_eval_count: 0,
        candidate_evals,
        clamped,
    })
}

/// Greedy forward selection on voted accuracy against the ensemble's labels.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReduceErrorPruner;

impl Pruner for ReduceErrorPruner {
    fn name(&self) -> &str {
        "reduce-error"
    }

    fn prune(
        &self,
        ens: &EnsemblePredictions,
        params: &ObjectiveParams,
        _seed: u64,
    ) -> Result<Selection> {
        let (k, clamped) = effective_k(params, ens.n())?;
        let truth = ens.labels();
        let mut tally = VoteTally::new(ens.d(), ens.n_classes());
        let mut selected = Vec::with_capacity(k);
        let mut in_set = vec![false; ens.n()];
        let mut evals = 0u64;

        while selected.len() < k {
            let mut best: Option<(usize, usize)> = None;
            for h in (0..ens.n()).filter(|&h| !in_set[h]) {
                let correct = tally.correct_with(ens.row(h), truth);
                evals += 1;
                if best.is_none_or(|(_, c)| correct > c) {
                    best = Some((h, correct));
                }
            }
            let (h, _) = best.expect("candidates remain while |P| < k <= n");
            tally.add(ens.row(h));
            in_set[h] = true;
            selected.push(h);
        }
        finish(ens, params, selected, evals, clamped)
    }
}

/// Cohen's kappa between two prediction vectors over `n_classes` classes.
///
/// When expected agreement is 1 (both vectors constant on the same class)
/// the vectors agree perfectly and kappa is 1.
pub fn cohen_kappa(x: &LabelVector, y: &LabelVector, n_classes: u32) -> f64 {
    let d = x.len() as f64;
    let nc = n_classes as usize;
    let mut fx = vec![0u64; nc];
    let mut fy = vec![0u64; nc];
    let mut agree = 0u64;
    for (&a, &b) in x.values().iter().zip(y.values()) {
        fx[a as usize] += 1;
        fy[b as usize] += 1;
        agree += u64::from(a == b);
    }
    let observed = agree as f64 / d;
    let expected: f64 = fx
        .iter()
        .zip(&fy)
        .map(|(&a, &b)| (a as f64 / d) * (b as f64 / d))
        .sum();
    if (1.0 - expected).abs() < 1e-15 {
        return if observed >= 1.0 { 1.0 } else { 0.0 };
    }
    (observed - expected) / (1.0 - expected)
}

/// Seeds with the least-agreeing pair, then repeatedly adds the classifier
/// with the smallest summed kappa to the current members.
#[derive(Debug, Clone, Copy, Default)]
pub struct KappaPruner;

impl Pruner for KappaPruner {
    fn name(&self) -> &str {
        "kappa"
    }

    fn prune(
        &self,
        ens: &EnsemblePredictions,
        params: &ObjectiveParams,
        _seed: u64,
    ) -> Result<Selection> {
        let (k, clamped) = effective_k(params, ens.n())?;
        let n = ens.n();
        if n == 1 {
            return finish(ens, params, vec![0], 0, clamped);
        }
        let mut kappa = vec![vec![1.0; n]; n];
        let mut evals = 0u64;
        let mut seed_pair = (0, 1);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = cohen_kappa(ens.row(i), ens.row(j), ens.n_classes());
                evals += 1;
                kappa[i][j] = v;
                kappa[j][i] = v;
                if v < kappa[seed_pair.0][seed_pair.1] {
                    seed_pair = (i, j);
                }
            }
        }
        let mut selected = vec![seed_pair.0];
        if k >= 2 {
            selected.push(seed_pair.1);
        }
        let mut in_set = vec![false; n];
        for &i in &selected {
            in_set[i] = true;
        }
        while selected.len() < k {
            let mut best: Option<(usize, f64)> = None;
            for h in (0..n).filter(|&h| !in_set[h]) {
                let score: f64 = selected.iter().map(|&j| kappa[h][j]).sum();
                evals += 1;
                if best.is_none_or(|(_, s)| score < s) {
                    best = Some((h, score));
                }
            }
            let (h, _) = best.expect("candidates remain while |P| < k <= n");
            in_set[h] = true;
            selected.push(h);
        }
        finish(ens, params, selected, evals, clamped)
    }
}

/// Uniform `k`-subset drawn from the seed.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPruner;

impl Pruner for RandomPruner {
    fn name(&self) -> &str {
        "random"
    }

    fn prune(
        &self,
        ens: &EnsemblePredictions,
        params: &ObjectiveParams,
        seed: u64,
    ) -> Result<Selection> {
        let (k, clamped) = effective_k(params, ens.n())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices = rand::seq::index::sample(&mut rng, ens.n(), k).into_vec();
        indices.sort_unstable();
        finish(ens, params, indices, 0, clamped)
    }
}
