//! The pruning objective.
//!
//! For two distinct classifiers `i != j` the pairwise score is
//!
//! ```text
//! tdac(i, j) = lambda * VI(h_i, h_j) + (1 - lambda) * (MI(h_i, c) + MI(h_j, c)) / 2
//! ```
//!
//! and zero on the diagonal. The set score `tdas(S)` is half the double sum of
//! `tdac` over `S x S`, which can equivalently be written as
//!
//! ```text
//! tdas(S) = lambda / 2 * sum_{i,j in S} VI(h_i, h_j) + (|S| - 1) / 2 * (1 - lambda) * sum_{i in S} MI(h_i, c)
//! ```
//!
//! "Distinct" means distinct indices: two classifiers with identical
//! predictions still earn the relevance term.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::entropy::{entropy_in, ContingencyTable, LabelVector, LogBase, PairInfo};
use crate::error::{Error, Result};

/// Default trade-off weight between diversity and relevance.
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Default number of subsets the exhaustive oracle may enumerate.
pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    pub lambda: f64,
    pub k: usize,
    #[serde(default)]
    pub log_base: LogBase,
}

impl ObjectiveParams {
    pub fn new(lambda: f64, k: usize) -> Result<Self> {
        let params = Self {
            lambda,
            k,
            log_base: LogBase::Bits,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        validate_lambda(self.lambda)?;
        if self.k < 1 {
            return Err(Error::invalid("k must be at least 1"));
        }
        Ok(())
    }

    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }
}

pub(crate) fn validate_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// Predictions of `n` classifiers over `d` instances, with the true labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePredictions {
    rows: Vec<LabelVector>,
    labels: LabelVector,
    n_classes: u32,
}

impl EnsemblePredictions {
    /// All rows and labels are re-declared over the widest class universe seen.
    pub fn new(rows: Vec<LabelVector>, labels: LabelVector) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("an ensemble needs at least one classifier"));
        }
        let d = labels.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::invalid(format!(
                "classifier {i} has {} predictions but there are {d} labels",
                row.len()
            )));
        }
        let n_classes = rows
            .iter()
            .map(LabelVector::n_classes)
            .chain(std::iter::once(labels.n_classes()))
            .max()
            .unwrap_or(1)
            .max(1);
        let rows = rows
            .into_iter()
            .map(|r| r.with_n_classes(n_classes))
            .collect::<Result<Vec<_>>>()?;
        let labels = labels.with_n_classes(n_classes)?;
        Ok(Self {
            rows,
            labels,
            n_classes,
        })
    }

    /// Convenience constructor from raw class ids.
    pub fn from_raw(rows: Vec<Vec<u32>>, labels: Vec<u32>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(LabelVector::from_values)
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, LabelVector::from_values(labels)?)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn rows(&self) -> &[LabelVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &LabelVector {
        &self.rows[i]
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    /// Copies the given rows (in the given order) into a new ensemble sharing
    /// the labels and class universe.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        check_indices(self.n(), indices)?;
        if indices.is_empty() {
            return Err(Error::invalid("cannot take an empty sub-ensemble"));
        }
        Ok(Self {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self.labels.clone(),
            n_classes: self.n_classes,
        })
    }

    /// Same classifiers evaluated against different labels (e.g. a test split).
    pub fn relabeled(&self, labels: LabelVector) -> Result<Self> {
        Self::new(self.rows.clone(), labels)
    }
}

/// Rejects out-of-range and repeated indices.
pub(crate) fn check_indices(n: usize, indices: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(Error::invalid(format!(
                "classifier index {i} out of range for an ensemble of {n}"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(format!("classifier index {i} repeated in subset")));
        }
    }
    Ok(())
}

/// Objective evaluator bound to one ensemble and one `lambda`.
///
/// Per-classifier entropies and label relevances are computed once; each
/// [`Objective::tdac`] call then costs one contingency table over `d`
/// instances. The evaluator is immutable and can be shared across threads.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    ens: &'a EnsemblePredictions,
    lambda: f64,
    base: LogBase,
    entropies: Vec<f64>,
    relevance: Vec<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(ens: &'a EnsemblePredictions, lambda: f64) -> Result<Self> {
        Self::with_base(ens, lambda, LogBase::Bits)
    }

    pub fn with_base(ens: &'a EnsemblePredictions, lambda: f64, base: LogBase) -> Result<Self> {
        validate_lambda(lambda)?;
        let entropies = ens
            .rows
            .iter()
            .map(|r| entropy_in(r, base))
            .collect::<Result<Vec<_>>>()?;
        let label_entropy = entropy_in(&ens.labels, base)?;
        let relevance = ens
            .rows
            .iter()
            .zip(&entropies)
            .map(|(row, &h_row)| {
                let table = ContingencyTable::new(row, &ens.labels)?;
                Ok(PairInfo {
                    h_x: h_row,
                    h_y: label_entropy,
                    h_xy: table.joint_entropy(base),
                }
                .norm_mi())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ens,
            lambda,
            base,
            entropies,
            relevance,
        })
    }

    pub fn ensemble(&self) -> &EnsemblePredictions {
        self.ens
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `MI(h_i, c)` for every classifier.
    pub fn relevance(&self) -> &[f64] {
        &self.relevance
    }

    /// Normalized variation of information between two rows.
    pub fn diversity(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        // Lengths were validated when the ensemble was built.
        let table = ContingencyTable::new(&self.ens.rows[i], &self.ens.rows[j])
            .expect("ensemble rows share a length");
        PairInfo {
            h_x: self.entropies[i],
            h_y: self.entropies[j],
            h_xy: table.joint_entropy(self.base),
        }
        .norm_vi()
    }

    /// Pairwise score; zero when `i == j`. Indices must be in range.
    pub fn tdac(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.lambda * self.diversity(i, j)
            + (1.0 - self.lambda) * (self.relevance[i] + self.relevance[j]) / 2.0
    }

    /// Half the double sum of `tdac` over the subset, i.e. the sum over
    /// unordered pairs.
    pub fn tdas_pairwise(&self, subset: &[usize]) -> Result<f64> {
        check_indices(self.ens.n(), subset)?;
        let mut total = 0.0;
        for &i in subset {
            for &j in subset {
                total += self.tdac(i, j);
            }
        }
        Ok(total / 2.0)
    }

    /// Diversity and relevance terms computed separately.
    pub fn tdas_decomposed(&self, subset: &[usize]) -> Result<f64> {
        check_indices(self.ens.n(), subset)?;
        let s = subset.len();
        if s < 2 {
            return Ok(0.0);
        }
        let mut vi_sum = 0.0;
        for &i in subset {
            for &j in subset {
                vi_sum += self.diversity(i, j);
            }
        }
        let mi_sum: f64 = subset.iter().map(|&i| self.relevance[i]).sum();
        Ok(self.lambda / 2.0 * vi_sum + (s as f64 - 1.0) / 2.0 * (1.0 - self.lambda) * mi_sum)
    }

    /// Dense `n x n` matrix of pairwise scores.
    pub fn tdac_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.ens.n();
        (0..n).map(|i| (0..n).map(|j| self.tdac(i, j)).collect()).collect()
    }
}

fn check_index(n: usize, i: usize) -> Result<()> {
    if i >= n {
        return Err(Error::invalid(format!(
            "classifier index {i} out of range for an ensemble of {n}"
        )));
    }
    Ok(())
}

pub fn tdac(ens: &EnsemblePredictions, i: usize, j: usize, lambda: f64) -> Result<f64> {
    check_index(ens.n(), i)?;
    check_index(ens.n(), j)?;
    Ok(Objective::new(ens, lambda)?.tdac(i, j))
}

pub fn tdas_pairwise(ens: &EnsemblePredictions, subset: &[usize], lambda: f64) -> Result<f64> {
    Objective::new(ens, lambda)?.tdas_pairwise(subset)
}

pub fn tdas_decomposed(ens: &EnsemblePredictions, subset: &[usize], lambda: f64) -> Result<f64> {
    Objective::new(ens, lambda)?.tdas_decomposed(subset)
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exhaustive maximizer of `tdas` over all `k`-subsets, capped at
/// [`DEFAULT_ORACLE_CAP`] candidates.
pub fn brute_force_optimum(
    ens: &EnsemblePredictions,
    params: &ObjectiveParams,
) -> Result<(Vec<usize>, f64)> {
    brute_force_optimum_capped(ens, params, DEFAULT_ORACLE_CAP)
}

/// Ties go to the lexicographically smallest index set.
pub fn brute_force_optimum_capped(
    ens: &EnsemblePredictions,
    params: &ObjectiveParams,
    cap: u64,
) -> Result<(Vec<usize>, f64)> {
    params.validate()?;
    let n = ens.n();
    if params.k > n {
        return Err(Error::invalid(format!(
            "k = {} exceeds the ensemble size {n}",
            params.k
        )));
    }
    let candidates = binomial(n, params.k);
    if candidates > cap as u128 {
        return Err(Error::OracleTooLarge { candidates, cap });
    }
    let objective = Objective::with_base(ens, params.lambda, params.log_base)?;
    let scores = objective.tdac_matrix();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for combo in (0..n).combinations(params.k) {
        let mut value = 0.0;
        for (a, &i) in combo.iter().enumerate() {
            for &j in &combo[a + 1..] {
                value += scores[i][j];
            }
        }
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((combo, value));
        }
    }
    Ok(best.expect("at least one k-subset exists"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ensemble(rng: &mut ChaCha8Rng, n: usize, d: usize, nc: u32) -> EnsemblePredictions {
        let labels: Vec<u32> = (0..d).map(|_| rng.random_range(0..nc)).collect();
        let rows: Vec<Vec<u32>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(0..nc)).collect())
            .collect();
        EnsemblePredictions::new(
            rows.into_iter()
                .map(|r| LabelVector::new(r, nc).unwrap())
                .collect(),
            LabelVector::new(labels, nc).unwrap(),
        )
        .unwrap()
    }

    fn pair_ensemble(x: &[u32], y: &[u32], c: &[u32]) -> EnsemblePredictions {
        EnsemblePredictions::from_raw(vec![x.to_vec(), y.to_vec()], c.to_vec()).unwrap()
    }

    #[test]
    fn tdac_diagonal_is_zero() {
        let ens = pair_ensemble(&[0, 0, 1, 1], &[0, 1, 0, 1], &[0, 1, 1, 0]);
        for lambda in [0.0, 0.3, 1.0] {
            assert_eq!(tdac(&ens, 1, 1, lambda).unwrap(), 0.0);
        }
    }

    #[test]
    fn tdac_lambda_one_is_vi() {
        let ens = pair_ensemble(&[0, 0, 1, 1], &[0, 1, 0, 1], &[0, 1, 1, 0]);
        assert_abs_diff_eq!(tdac(&ens, 0, 1, 1.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tdac_mixed_example() {
        let ens = pair_ensemble(&[0, 0, 1, 1], &[0, 0, 1, 0], &[0, 0, 1, 1]);
        // Oracle values from the entropy counting tests.
        let h = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        let mi = 1.0 + h - 1.5;
        let vi = 1.0 - mi / 1.5;
        let expected = 0.5 * vi + 0.5 * (1.0 + mi / h.sqrt()) / 2.0;
        assert_abs_diff_eq!(expected, 0.73264, epsilon = 1e-5);
        assert_abs_diff_eq!(tdac(&ens, 0, 1, 0.5).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(tdac(&ens, 1, 0, 0.5).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn tdac_rejects_bad_index_and_lambda() {
        let ens = pair_ensemble(&[0, 1], &[1, 0], &[0, 1]);
        assert!(tdac(&ens, 0, 2, 0.5).is_err());
        assert!(tdac(&ens, 0, 1, 1.5).is_err());
    }

    #[test]
    fn tdas_small_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ens = random_ensemble(&mut rng, 5, 50, 3);
        let obj = Objective::new(&ens, 0.4).unwrap();
        assert_eq!(obj.tdas_pairwise(&[2]).unwrap(), 0.0);
        assert_eq!(obj.tdas_pairwise(&[]).unwrap(), 0.0);
        assert_abs_diff_eq!(obj.tdas_pairwise(&[1, 3]).unwrap(), obj.tdac(1, 3), epsilon = 1e-15);
        let by_hand = obj.tdac(0, 2) + obj.tdac(0, 4) + obj.tdac(2, 4);
        assert_abs_diff_eq!(obj.tdas_pairwise(&[0, 2, 4]).unwrap(), by_hand, epsilon = 1e-12);
    }

    #[test]
    fn tdas_rejects_repeated_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ens = random_ensemble(&mut rng, 4, 20, 2);
        assert!(tdas_pairwise(&ens, &[1, 1], 0.5).is_err());
        assert!(tdas_decomposed(&ens, &[0, 9], 0.5).is_err());
    }

    #[test]
    fn decomposed_matches_pairwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ens = random_ensemble(&mut rng, 8, 100, 3);
        let obj = Objective::new(&ens, 0.5).unwrap();
        let subset = [0, 3, 4, 6, 7];
        assert_abs_diff_eq!(
            obj.tdas_pairwise(&subset).unwrap(),
            obj.tdas_decomposed(&subset).unwrap(),
            epsilon = 1e-9
        );
        assert_eq!(obj.tdas_decomposed(&[5]).unwrap(), 0.0);
    }

    #[test]
    fn decomposed_lambda_zero_is_relevance_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ens = random_ensemble(&mut rng, 6, 80, 2);
        let obj = Objective::new(&ens, 0.0).unwrap();
        let subset = [1, 2, 5];
        let mi: f64 = subset.iter().map(|&i| obj.relevance()[i]).sum();
        assert_abs_diff_eq!(obj.tdas_decomposed(&subset).unwrap(), mi, epsilon = 1e-12);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(20, 5), 15504);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(1000, 500), u128::MAX);
    }

    #[test]
    fn oracle_full_set_and_singletons() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ens = random_ensemble(&mut rng, 5, 30, 2);
        let (set, value) = brute_force_optimum(&ens, &ObjectiveParams::new(0.5, 5).unwrap()).unwrap();
        assert_eq!(set, vec![0, 1, 2, 3, 4]);
        assert_abs_diff_eq!(value, tdas_pairwise(&ens, &set, 0.5).unwrap(), epsilon = 1e-12);
        let (set, value) = brute_force_optimum(&ens, &ObjectiveParams::new(0.5, 1).unwrap()).unwrap();
        assert_eq!(set, vec![0]);
        assert_eq!(value, 0.0);
    }

    #[test]
    fn oracle_matches_independent_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ens = random_ensemble(&mut rng, 6, 60, 3);
        let (set, value) = brute_force_optimum(&ens, &ObjectiveParams::new(0.5, 3).unwrap()).unwrap();
        // Re-enumerate with nested loops and the decomposed formula.
        let obj = Objective::new(&ens, 0.5).unwrap();
        let mut best = (vec![], f64::NEG_INFINITY);
        let mut count = 0;
        for a in 0..6 {
            for b in a + 1..6 {
                for c in b + 1..6 {
                    count += 1;
                    let v = obj.tdas_decomposed(&[a, b, c]).unwrap();
                    if v > best.1 + 1e-12 {
                        best = (vec![a, b, c], v);
                    }
                }
            }
        }
        assert_eq!(count, 20);
        assert_eq!(set, best.0);
        assert_abs_diff_eq!(value, best.1, epsilon = 1e-9);
    }

    #[test]
    fn oracle_refuses_large_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ens = random_ensemble(&mut rng, 30, 10, 2);
        let err = brute_force_optimum(&ens, &ObjectiveParams::new(0.5, 15).unwrap()).unwrap_err();
        assert!(matches!(err, Error::OracleTooLarge { .. }));
        assert!(err.to_string().contains("too large for oracle"));
    }

    #[test]
    fn superset_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ens = random_ensemble(&mut rng, 7, 40, 3);
        let obj = Objective::new(&ens, 0.7).unwrap();
        let base = [0, 2, 5];
        let v = obj.tdas_pairwise(&base).unwrap();
        for x in [1, 3, 4, 6] {
            let mut grown = base.to_vec();
            grown.push(x);
            assert!(obj.tdas_pairwise(&grown).unwrap() >= v);
        }
    }

    #[test]
    fn ensemble_rejects_ragged_rows() {
        assert!(EnsemblePredictions::from_raw(vec![vec![0, 1], vec![0]], vec![0, 1]).is_err());
        assert!(EnsemblePredictions::from_raw(vec![], vec![0, 1]).is_err());
    }
}
