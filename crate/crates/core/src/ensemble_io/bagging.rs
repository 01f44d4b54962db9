//! Minimal bagging trainer with depth-1 stumps and 1-nearest-neighbour
//! base learners.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::LabelVector;
use crate::error::{Error, Result};
use crate::objective::EnsemblePredictions;

/// Feature matrix with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: LabelVector,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: LabelVector) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let width = features.first().map_or(0, Vec::len);
        if width == 0 || features.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("feature rows must share a nonzero width"));
        }
        if labels.n_classes() < 2 {
            return Err(Error::invalid("a dataset needs at least two classes"));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_classes(&self) -> u32 {
        self.labels.n_classes()
    }
}

/// Train / validation / test fractions and the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.6,
            validation_fraction: 0.2,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train_fraction, self.validation_fraction, self.test_fraction];
        if parts.iter().any(|f| f.is_nan() || *f <= 0.0) {
            return Err(Error::invalid("split fractions must be positive"));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Shuffles `0..d` and cuts it into three disjoint parts whose sizes are
    /// within one of the requested fractions.
    pub fn split(&self, d: usize) -> Result<SplitIndices> {
        self.validate()?;
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let n_train = (self.train_fraction * d as f64).round() as usize;
        let n_val = ((self.validation_fraction * d as f64).round() as usize).min(d - n_train.min(d));
        let n_train = n_train.min(d);
        let test = order.split_off(n_train + n_val);
        let validation = order.split_off(n_train);
        Ok(SplitIndices {
            train: order,
            validation,
            test,
        })
    }

    /// Repeated splits with derived seeds, one per cross-validation round.
    /// Each round reshuffles the whole set rather than rotating fixed folds.
    pub fn rounds(&self, count: usize) -> Vec<SplitSpec> {
        (0..count as u64)
            .map(|r| SplitSpec {
                seed: self.seed.wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                ..*self
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseLearner {
    Stump,
    OneNn,
}

impl std::str::FromStr for BaseLearner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stump" => Ok(BaseLearner::Stump),
            "one_nn" | "one-nn" | "1nn" => Ok(BaseLearner::OneNn),
            other => Err(Error::config(format!("unknown base learner '{other}' (expected stump or one_nn)"))),
        }
    }
}

/// A trained base learner.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Constant(u32),
    Stump {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    OneNn {
        points: Vec<Vec<f64>>,
        labels: Vec<u32>,
    },
}

fn plurality(counts: &[usize]) -> u32 {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate().skip(1) {
        if v > counts[best] {
            best = c;
        }
    }
    best as u32
}

impl BaseLearner {
    /// Fits on the rows `sample` of `data`. Returns the model and whether it
    /// fell back to a constant predictor because the sample had one class.
    pub fn fit(self, data: &Dataset, sample: &[usize]) -> (Fitted, bool) {
        let nc = data.n_classes() as usize;
        let labels = data.labels.values();
        let mut counts = vec![0usize; nc];
        for &i in sample {
            counts[labels[i] as usize] += 1;
        }
        let majority = plurality(&counts);
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            return (Fitted::Constant(majority), self == BaseLearner::Stump);
        }
        match self {
            BaseLearner::OneNn => (
                Fitted::OneNn {
                    points: sample.iter().map(|&i| data.features[i].clone()).collect(),
                    labels: sample.iter().map(|&i| labels[i]).collect(),
                },
                false,
            ),
            BaseLearner::Stump => (fit_stump(data, sample, &counts).unwrap_or(Fitted::Constant(majority)), false),
        }
    }
}

/// Best single-feature threshold split by misclassification count.
fn fit_stump(data: &Dataset, sample: &[usize], totals: &[usize]) -> Option<Fitted> {
    let labels = data.labels.values();
    let width = data.features[0].len();
    let n = sample.len();
    let mut best: Option<(usize, Fitted)> = None;
    let mut order = sample.to_vec();
    for feature in 0..width {
        let value = |i: usize| data.features[i][feature];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let mut left = vec![0usize; totals.len()];
        for pos in 0..n - 1 {
            left[labels[order[pos]] as usize] += 1;
            let (lo, hi) = (value(order[pos]), value(order[pos + 1]));
            if lo == hi {
                continue;
            }
            let right: Vec<usize> = totals.iter().zip(&left).map(|(t, l)| t - l).collect();
            let (lc, rc) = (plurality(&left), plurality(&right));
            let errors = (pos + 1 - left[lc as usize]) + (n - pos - 1 - right[rc as usize]);
            if best.as_ref().is_none_or(|(e, _)| errors < *e) {
                best = Some((
                    errors,
                    Fitted::Stump {
                        feature,
                        threshold: lo + (hi - lo) / 2.0,
                        left: lc,
                        right: rc,
                    },
                ));
            }
        }
    }
    best.map(|(_, f)| f)
}

impl Fitted {
    pub fn predict(&self, x: &[f64]) -> u32 {
        match self {
            Fitted::Constant(c) => *c,
            Fitted::Stump {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    *left
                } else {
                    *right
                }
            }
            Fitted::OneNn { points, labels } => {
                let mut best = (f64::INFINITY, 0u32);
                for (p, &l) in points.iter().zip(labels) {
                    let dist: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                    if dist < best.0 {
                        best = (dist, l);
                    }
                }
                best.1
            }
        }
    }
}

/// Prediction matrices of a bagged ensemble on the validation and test splits.
#[derive(Debug, Clone)]
pub struct BaggedEnsembles {
    pub validation: EnsemblePredictions,
    pub test: EnsemblePredictions,
    /// Learners that fell back to a constant predictor.
    pub fallback_learners: usize,
    pub split: SplitIndices,
}

/// Fits `n_estimators` learners on bootstrap resamples of the training split.
pub fn bagging_train(
    data: &Dataset,
    split: &SplitSpec,
    n_estimators: usize,
    base: BaseLearner,
    seed: u64,
) -> Result<BaggedEnsembles> {
    if n_estimators == 0 {
        return Err(Error::invalid("n_estimators must be at least 1"));
    }
    let parts = split.split(data.len())?;
    if parts.train.is_empty() || parts.validation.is_empty() || parts.test.is_empty() {
        return Err(Error::invalid(format!(
            "dataset of {} rows is too small for a three-way split",
            data.len()
        )));
    }
    let fits: Vec<(Fitted, bool)> = (0..n_estimators)
        .into_par_iter()
        .map(|e| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(e as u64);
            let sample: Vec<usize> = (0..parts.train.len())
                .map(|_| parts.train[rng.random_range(0..parts.train.len())])
                .collect();
            base.fit(data, &sample)
        })
        .collect();
    let nc = data.n_classes();
    let predict_on = |rows: &[usize]| -> Result<EnsemblePredictions> {
        let preds = fits
            .iter()
            .map(|(model, _)| {
                LabelVector::new(rows.iter().map(|&i| model.predict(&data.features[i])).collect(), nc)
            })
            .collect::<Result<Vec<_>>>()?;
        let truth = LabelVector::new(rows.iter().map(|&i| data.labels.values()[i]).collect(), nc)?;
        EnsemblePredictions::new(preds, truth)
    };
    Ok(BaggedEnsembles {
        validation: predict_on(&parts.validation)?,
        test: predict_on(&parts.test)?,
        fallback_learners: fits.iter().filter(|(_, f)| *f).count(),
        split: parts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble_io::accuracy;

    fn blobs(seed: u64, d: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..d {
            let c = (i % 2) as u32;
            let shift = if c == 0 { -1.0 } else { 1.0 };
            features.push(vec![shift + rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0)]);
            labels.push(c);
        }
        Dataset::new(features, LabelVector::new(labels, 2).unwrap()).unwrap()
    }

    #[test]
    fn split_partitions_exactly() {
        let spec = SplitSpec {
            seed: 5,
            ..Default::default()
        };
        for d in [1usize, 5, 7, 10, 101] {
            let s = spec.split(d).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..d).collect::<Vec<_>>());
            for (got, frac) in [(s.train.len(), 0.6), (s.validation.len(), 0.2), (s.test.len(), 0.2)] {
                assert!((got as f64 - frac * d as f64).abs() <= 1.0, "d={d} got {got} for {frac}");
            }
            assert_eq!(spec.split(d).unwrap(), s);
        }
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let bad = SplitSpec {
            train_fraction: 0.5,
            validation_fraction: 0.2,
            test_fraction: 0.2,
            seed: 0,
        };
        assert!(bad.split(10).is_err());
    }

    #[test]
    fn one_nn_memorizes_its_sample() {
        let data = blobs(1, 40);
        let sample: Vec<usize> = (0..40).collect();
        let (model, fallback) = BaseLearner::OneNn.fit(&data, &sample);
        assert!(!fallback);
        let pred = LabelVector::new(sample.iter().map(|&i| model.predict(&data.features[i])).collect(), 2).unwrap();
        assert_eq!(accuracy(&pred, &data.labels).unwrap(), 1.0);
    }

    #[test]
    fn stump_finds_the_separating_feature() {
        let features = vec![vec![5.0, 0.0], vec![1.0, 1.0], vec![4.0, 2.0], vec![0.0, 3.0]];
        let data = Dataset::new(features, LabelVector::new(vec![0, 0, 1, 1], 2).unwrap()).unwrap();
        let (model, _) = BaseLearner::Stump.fit(&data, &[0, 1, 2, 3]);
        assert_eq!(
            model,
            Fitted::Stump {
                feature: 1,
                threshold: 1.5,
                left: 0,
                right: 1
            }
        );
    }

    #[test]
    fn single_class_stump_falls_back() {
        let data = blobs(2, 10);
        let (model, fallback) = BaseLearner::Stump.fit(&data, &[0, 2, 4]);
        assert_eq!(model, Fitted::Constant(0));
        assert!(fallback);
    }

    #[test]
    fn bagging_is_deterministic() {
        let data = blobs(3, 60);
        let spec = SplitSpec::default();
        let a = bagging_train(&data, &spec, 5, BaseLearner::Stump, 9).unwrap();
        let b = bagging_train(&data, &spec, 5, BaseLearner::Stump, 9).unwrap();
        assert_eq!(a.validation, b.validation);
        assert_eq!(a.test, b.test);
        assert_eq!(a.validation.n(), 5);
        assert_eq!(a.validation.d(), 12);
    }

    #[test]
    fn bagging_rejects_zero_estimators() {
        assert!(bagging_train(&blobs(4, 20), &SplitSpec::default(), 0, BaseLearner::OneNn, 0).is_err());
    }
}
