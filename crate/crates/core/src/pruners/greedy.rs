use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{effective_k, Pruner, Selection};
use crate::error::Result;
use crate::objective::{EnsemblePredictions, Objective, ObjectiveParams};

/// How the greedy maximizer picks its first member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstPick {
    /// The classifier with the largest `MI(h_i, c)`, smallest index on ties.
    #[default]
    MostRelevant,
    /// A uniformly random classifier drawn from the seed.
    Random,
}

/// Greedy maximizer of the set objective.
///
/// After the first pick, each round adds the candidate whose summed pairwise
/// score against the current selection is largest, scanning candidates in
/// ascending index order so ties go to the smallest index.
#[derive(Debug, Clone, Copy, Default)]
pub struct Comep {
    pub first_pick: FirstPick,
}

impl Pruner for Comep {
    fn name(&self) -> &str {
        "comep"
    }

    fn prune(
        &self,
        ens: &EnsemblePredictions,
        params: &ObjectiveParams,
        seed: u64,
    ) -> Result<Selection> {
        let (k, clamped) = effective_k(params, ens.n())?;
        let objective = Objective::with_base(ens, params.lambda, params.log_base)?;
        let n = ens.n();

        let first = match self.first_pick {
            FirstPick::MostRelevant => argmax_first(objective.relevance()),
            FirstPick::Random => ChaCha8Rng::seed_from_u64(seed).random_range(0..n),
        };
        let mut selected = vec![first];
        let mut remaining: Vec<usize> = (0..n).filter(|&i| i != first).collect();
        let mut tdas = 0.0;
        let mut tdac_evals = 0u64;
        let mut candidate_evals = 0u64;

        while selected.len() < k {
            let mut best: Option<(usize, f64)> = None;
            for (pos, &h) in remaining.iter().enumerate() {
                let gain: f64 = selected.iter().map(|&j| objective.tdac(h, j)).sum();
                tdac_evals += selected.len() as u64;
                candidate_evals += 1;
                if best.is_none_or(|(_, g)| gain > g) {
                    best = Some((pos, gain));
                }
            }
            let (pos, gain) = best.expect("remaining is nonempty while |P| < k <= n");
            selected.push(remaining.remove(pos));
            tdas += gain;
        }

        Ok(Selection {
            indices: selected,
            tdas,
            tdac_eval_count: tdac_evals,
            candidate_evals,
            clamped,
        })
    }
}

/// Greedy maximizer with the default first pick.
pub fn comep(ens: &EnsemblePredictions, params: &ObjectiveParams) -> Result<Selection> {
    Comep::default().prune(ens, params, 0)
}

/// Number of pairwise terms the greedy scan sums: `sum_{i=2}^{k} (i-1)(n-i+1)`.
pub fn comep_eval_count(n: usize, k: usize) -> u64 {
    let k = k.min(n);
    (2..=k).map(|i| ((i - 1) * (n - i + 1)) as u64).sum()
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
