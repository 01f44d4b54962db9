use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::LabelVector;
use crate::error::{Error, Result};
use crate::objective::EnsemblePredictions;

/// Parameters of a synthetic prediction matrix.
///
/// Each classifier is right with probability `base_accuracy`. With
/// probability `correlation` an instance's outcome for a classifier is taken
/// from a noise draw shared by all classifiers (same correct/wrong decision and
/// same wrong label), otherwise from the classifier's own draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub n_classes: u32,
    pub base_accuracy: f64,
    pub correlation: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 20,
            d: 500,
            n_classes: 2,
            base_accuracy: 0.75,
            correlation: 0.3,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.base_accuracy) {
            return Err(Error::invalid(format!("base_accuracy {} outside [0, 1]", self.base_accuracy)));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::invalid(format!("correlation {} outside [0, 1]", self.correlation)));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::invalid("synthetic ensembles need n >= 1 and d >= 1"));
        }
        if self.n_classes < 2 && self.base_accuracy < 1.0 {
            return Err(Error::invalid("at least two classes are needed to make errors"));
        }
        if self.n_classes < 1 {
            return Err(Error::invalid("n_classes must be at least 1"));
        }
        Ok(())
    }
}

fn wrong_label(rng: &mut ChaCha8Rng, truth: u32, n_classes: u32) -> u32 {
    let offset = rng.random_range(1..n_classes);
    (truth + offset) % n_classes
}

fn generate(spec: &SyntheticSpec) -> Result<(Vec<Vec<u32>>, Vec<u32>)> {
    spec.validate()?;
    let nc = spec.n_classes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<u32> = (0..spec.d).map(|_| rng.random_range(0..nc)).collect();
    let shared_u: Vec<f64> = (0..spec.d).map(|_| rng.random::<f64>()).collect();
    let shared_wrong: Vec<u32> = labels
        .iter()
        .map(|&c| if nc > 1 { wrong_label(&mut rng, c, nc) } else { c })
        .collect();
    let rows = (0..spec.n)
        .map(|_| {
            (0..spec.d)
                .map(|t| {
                    let shared = rng.random::<f64>() < spec.correlation;
                    let u = if shared { shared_u[t] } else { rng.random::<f64>() };
                    if u < spec.base_accuracy {
                        labels[t]
                    } else if shared {
                        shared_wrong[t]
                    } else {
                        wrong_label(&mut rng, labels[t], nc)
                    }
                })
                .collect()
        })
        .collect();
    Ok((rows, labels))
}

fn build(rows: Vec<Vec<u32>>, labels: Vec<u32>, nc: u32) -> Result<EnsemblePredictions> {
    EnsemblePredictions::new(
        rows.into_iter()
            .map(|r| LabelVector::new(r, nc))
            .collect::<Result<Vec<_>>>()?,
        LabelVector::new(labels, nc)?,
    )
}

/// Deterministic synthetic prediction matrix.
pub fn synthetic_ensemble(spec: &SyntheticSpec) -> Result<EnsemblePredictions> {
    let (rows, labels) = generate(spec)?;
    build(rows, labels, spec.n_classes)
}

/// Generates `spec.d + test_d` instances and returns the first `spec.d` as a
/// validation matrix and the rest as a test matrix for the same classifiers.
pub fn synthetic_split(
    spec: &SyntheticSpec,
    test_d: usize,
) -> Result<(EnsemblePredictions, EnsemblePredictions)> {
    if test_d == 0 {
        return Err(Error::invalid("test split must be nonempty"));
    }
    let total = SyntheticSpec {
        d: spec.d + test_d,
        ..*spec
    };
    let (mut rows, mut labels) = generate(&total)?;
    let test_labels = labels.split_off(spec.d);
    let test_rows: Vec<Vec<u32>> = rows.iter_mut().map(|r| r.split_off(spec.d)).collect();
    Ok((
        build(rows, labels, spec.n_classes)?,
        build(test_rows, test_labels, spec.n_classes)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble_io::accuracy;
    use crate::entropy::{norm_mi, norm_vi};

    #[test]
    fn perfect_accuracy_copies_labels() {
        let ens = synthetic_ensemble(&SyntheticSpec {
            n: 4,
            d: 50,
            base_accuracy: 1.0,
            correlation: 0.2,
            ..Default::default()
        })
        .unwrap();
        for i in 0..4 {
            assert_eq!(ens.row(i), ens.labels());
            assert_eq!(norm_mi(ens.row(i), ens.labels()).unwrap(), 1.0);
            assert_eq!(norm_vi(ens.row(i), ens.row((i + 1) % 4)).unwrap(), 0.0);
        }
    }

    #[test]
    fn full_correlation_gives_identical_rows() {
        let ens = synthetic_ensemble(&SyntheticSpec {
            n: 5,
            d: 80,
            n_classes: 3,
            base_accuracy: 0.6,
            correlation: 1.0,
            seed: 2,
        })
        .unwrap();
        for i in 1..5 {
            assert_eq!(ens.row(i), ens.row(0));
        }
    }

    #[test]
    fn per_row_accuracy_concentrates() {
        let ens = synthetic_ensemble(&SyntheticSpec {
            n: 10,
            d: 2000,
            base_accuracy: 0.8,
            correlation: 0.0,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        for i in 0..10 {
            let acc = accuracy(ens.row(i), ens.labels()).unwrap();
            assert!((acc - 0.8).abs() <= 0.03, "row {i}: {acc}");
        }
    }

    #[test]
    fn invalid_probabilities_rejected() {
        let bad = SyntheticSpec {
            base_accuracy: 1.2,
            ..Default::default()
        };
        assert!(synthetic_ensemble(&bad).is_err());
        let bad = SyntheticSpec {
            correlation: -0.1,
            ..Default::default()
        };
        assert!(synthetic_ensemble(&bad).is_err());
    }

    #[test]
    fn split_shares_classifiers() {
        let spec = SyntheticSpec {
            n: 3,
            d: 30,
            ..Default::default()
        };
        let (val, test) = synthetic_split(&spec, 20).unwrap();
        assert_eq!((val.n(), val.d(), test.n(), test.d()), (3, 30, 3, 20));
        assert_eq!(synthetic_split(&spec, 20).unwrap().1, test);
    }
}
