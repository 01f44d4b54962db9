//! Pruning algorithms behind a common [`Pruner`] contract.
//!
//! Every pruner is deterministic given its inputs and seed, and returns a
//! [`Selection`] of distinct indices into the ensemble it was handed.

mod baselines;
mod greedy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{EnsemblePredictions, ObjectiveParams};

pub use baselines::{cohen_kappa, KappaPruner, RandomPruner, ReduceErrorPruner};
pub use greedy::{comep, comep_eval_count, Comep, FirstPick};

/// Names accepted by [`pruner_by_name`].
pub const PRUNER_NAMES: [&str; 4] = ["comep", "reduce-error", "kappa", "random"];

/// A pruned sub-ensemble plus instrumentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Selected classifier indices in the order they were chosen.
    pub indices: Vec<usize>,
    pub tdas: f64,
    /// Pairwise objective terms summed while scoring candidates.
    pub tdac_eval_count: u64,
    /// Candidates scored by the pruner's own inner loop.
    pub candidate_evals: u64,
    /// Set when the requested `k` exceeded the ensemble size.
    pub clamped: bool,
}

impl Selection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices in ascending order.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v
    }

    /// Rewrites local indices through `map` (e.g. group-local to global).
    pub(crate) fn remap(mut self, map: &[usize]) -> Self {
        for i in &mut self.indices {
            *i = map[*i];
        }
        self
    }
}

/// A pruning algorithm that can be plugged into the distributed framework.
pub trait Pruner: Send + Sync {
    fn name(&self) -> &str;

    fn prune(
        &self,
        ens: &EnsemblePredictions,
        params: &ObjectiveParams,
        seed: u64,
    ) -> Result<Selection>;
}

/// Looks a pruner up by its registry name.
pub fn pruner_by_name(name: &str) -> Result<Box<dyn Pruner>> {
    match name {
        "comep" => Ok(Box::new(Comep::default())),
        "reduce-error" => Ok(Box::new(ReduceErrorPruner)),
        "kappa" => Ok(Box::new(KappaPruner)),
        "random" => Ok(Box::new(RandomPruner)),
        other => Err(Error::config(format!(
            "unknown pruner '{other}' (expected one of {})",
            PRUNER_NAMES.join(", ")
        ))),
    }
}

/// Validates `k` and clamps it to the ensemble size.
pub(crate) fn effective_k(params: &ObjectiveParams, n: usize) -> Result<(usize, bool)> {
    params.validate()?;
    if params.k > n {
        Ok((n, true))
    } else {
        Ok((params.k, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_knows_every_name() {
        for name in PRUNER_NAMES {
            assert_eq!(pruner_by_name(name).unwrap().name(), name);
        }
        assert!(matches!(pruner_by_name("oo"), Err(Error::Config(_))));
    }
}
