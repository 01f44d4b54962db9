//! Data plane: CSV ingestion, synthetic ensembles, bagging, voting and scoring.

mod bagging;
mod csv;
mod synthetic;

pub use bagging::{bagging_train, BaggedEnsembles, BaseLearner, Dataset, SplitIndices, SplitSpec};
pub use csv::{
    format_labels, format_predictions, load_dataset, load_predictions, parse_dataset,
    parse_labels, parse_predictions, write_predictions,
};
pub use synthetic::{synthetic_ensemble, synthetic_split, SyntheticSpec};

use crate::entropy::LabelVector;
use crate::error::{Error, Result};
use crate::objective::{check_indices, EnsemblePredictions};

/// Per-instance vote counts of a growing sub-ensemble.
#[derive(Debug, Clone)]
pub struct VoteTally {
    n_classes: usize,
    counts: Vec<u32>,
}

impl VoteTally {
    pub fn new(d: usize, n_classes: u32) -> Self {
        Self {
            n_classes: n_classes as usize,
            counts: vec![0; d * n_classes as usize],
        }
    }

    pub fn add(&mut self, row: &LabelVector) {
        for (t, &v) in row.values().iter().enumerate() {
            self.counts[t * self.n_classes + v as usize] += 1;
        }
    }

    /// Plurality winner at instance `t`, smallest class id on ties.
    pub fn winner(&self, t: usize) -> u32 {
        let cell = &self.counts[t * self.n_classes..(t + 1) * self.n_classes];
        let mut best = 0;
        for (c, &v) in cell.iter().enumerate().skip(1) {
            if v > cell[best] {
                best = c;
            }
        }
        best as u32
    }

    /// Number of instances the tally plus `extra` votes for correctly,
    /// without modifying the tally.
    pub fn correct_with(&self, extra: &LabelVector, truth: &LabelVector) -> usize {
        let nc = self.n_classes;
        let mut correct = 0;
        for (t, (&e, &c)) in extra.values().iter().zip(truth.values()).enumerate() {
            let cell = &self.counts[t * nc..(t + 1) * nc];
            let mut best = 0usize;
            let mut best_votes = cell[0] + u32::from(e == 0);
            for (cls, &v) in cell.iter().enumerate().skip(1) {
                let votes = v + u32::from(e as usize == cls);
                if votes > best_votes {
                    best = cls;
                    best_votes = votes;
                }
            }
            correct += usize::from(best as u32 == c);
        }
        correct
    }

    pub fn predictions(&self) -> Vec<u32> {
        (0..self.counts.len() / self.n_classes.max(1))
            .map(|t| self.winner(t))
            .collect()
    }
}

/// Plurality vote of the chosen rows; ties go to the smallest class id.
pub fn majority_vote(ens: &EnsemblePredictions, subset: &[usize]) -> Result<LabelVector> {
    if subset.is_empty() {
        return Err(Error::invalid("cannot vote with an empty sub-ensemble"));
    }
    check_indices(ens.n(), subset)?;
    let mut tally = VoteTally::new(ens.d(), ens.n_classes());
    for &i in subset {
        tally.add(ens.row(i));
    }
    LabelVector::new(tally.predictions(), ens.n_classes())
}

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "prediction length {} differs from label length {}",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("cannot score an empty prediction"));
    }
    let hits = pred
        .values()
        .iter()
        .zip(truth.values())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Voted accuracy of a sub-ensemble against the ensemble's own labels.
pub fn voted_accuracy(ens: &EnsemblePredictions, subset: &[usize]) -> Result<f64> {
    accuracy(&majority_vote(ens, subset)?, ens.labels())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: &[u32]) -> LabelVector {
        LabelVector::new(v.to_vec(), 2).unwrap()
    }

    #[test]
    fn vote_of_identical_rows() {
        let ens = EnsemblePredictions::from_raw(vec![vec![0, 1, 1], vec![0, 1, 1]], vec![1, 1, 1]).unwrap();
        assert_eq!(majority_vote(&ens, &[0, 1]).unwrap().values(), &[0, 1, 1]);
    }

    #[test]
    fn vote_plurality_and_ties() {
        let ens = EnsemblePredictions::from_raw(vec![vec![0], vec![1], vec![1]], vec![1]).unwrap();
        assert_eq!(majority_vote(&ens, &[0, 1, 2]).unwrap().values(), &[1]);
        assert_eq!(majority_vote(&ens, &[0, 1]).unwrap().values(), &[0]);
        assert!(majority_vote(&ens, &[]).is_err());
    }

    #[test]
    fn single_member_vote_is_that_member() {
        let ens = EnsemblePredictions::from_raw(vec![vec![0, 2, 1, 2], vec![1, 1, 1, 0]], vec![0, 1, 2, 2]).unwrap();
        assert_eq!(majority_vote(&ens, &[0]).unwrap(), *ens.row(0));
    }

    #[test]
    fn accuracy_examples() {
        let t = lv(&[0, 1, 1, 0]);
        assert_eq!(accuracy(&t, &t).unwrap(), 1.0);
        assert_eq!(accuracy(&lv(&[1, 0, 0, 1]), &t).unwrap(), 0.0);
        assert_eq!(accuracy(&lv(&[0, 1, 0, 0]), &t).unwrap(), 0.75);
        assert!(accuracy(&lv(&[0, 1]), &t).is_err());
    }

    #[test]
    fn correct_with_agrees_with_full_vote() {
        let ens = EnsemblePredictions::from_raw(
            vec![vec![0, 1, 2, 1, 0], vec![2, 1, 0, 1, 1], vec![2, 2, 2, 0, 1]],
            vec![2, 1, 2, 1, 0],
        )
        .unwrap();
        let mut tally = VoteTally::new(5, 3);
        tally.add(ens.row(0));
        tally.add(ens.row(1));
        let fast = tally.correct_with(ens.row(2), ens.labels());
        let slow = voted_accuracy(&ens, &[0, 1, 2]).unwrap() * 5.0;
        assert_eq!(fast as f64, slow);
    }
}
