//! Discrete entropy kernels over integer label vectors.
//!
//! Probabilities are empirical frequencies of class ids. No smoothing is
//! applied and classes that never occur are zero-count bins contributing
//! nothing. Quantities are reported in bits unless a [`LogBase`] is given.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logarithm base used to report entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    fn convert_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Bits => nats / std::f64::consts::LN_2,
            LogBase::Nats => nats,
        }
    }
}

/// A vector of class ids `0..n_classes` over `d` instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    values: Vec<u32>,
    n_classes: u32,
}

impl LabelVector {
    /// Builds a vector over the declared class universe `0..n_classes`.
    pub fn new(values: Vec<u32>, n_classes: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("label vector must be nonempty"));
        }
        if let Some((pos, &v)) = values.iter().enumerate().find(|(_, &v)| v >= n_classes) {
            return Err(Error::invalid(format!(
                "label {v} at position {pos} is outside the class universe 0..{n_classes}"
            )));
        }
        Ok(Self { values, n_classes })
    }

    /// Builds a vector whose class universe is inferred as `1 + max(values)`.
    pub fn from_values(values: Vec<u32>) -> Result<Self> {
        let n_classes = values.iter().max().map_or(0, |&m| m + 1);
        Self::new(values, n_classes)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false for a constructed vector; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    /// Re-declares the class universe, e.g. to align a row with its ensemble.
    pub fn with_n_classes(self, n_classes: u32) -> Result<Self> {
        Self::new(self.values, n_classes)
    }

    pub fn into_values(self) -> Vec<u32> {
        self.values
    }
}

/// Co-occurrence counts of two label vectors of equal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    joint: Vec<u64>,
    rows: usize,
    cols: usize,
    marginals_x: Vec<u64>,
    marginals_y: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(x: &LabelVector, y: &LabelVector) -> Result<Self> {
        check_same_len(x, y)?;
        let rows = x.n_classes as usize;
        let cols = y.n_classes as usize;
        let mut joint = vec![0u64; rows * cols];
        let mut marginals_x = vec![0u64; rows];
        let mut marginals_y = vec![0u64; cols];
        for (&a, &b) in x.values.iter().zip(&y.values) {
            joint[a as usize * cols + b as usize] += 1;
            marginals_x[a as usize] += 1;
            marginals_y[b as usize] += 1;
        }
        Ok(Self {
            joint,
            rows,
            cols,
            marginals_x,
            marginals_y,
            total: x.len() as u64,
        })
    }

    pub fn joint_count(&self, a: usize, b: usize) -> u64 {
        self.joint[a * self.cols + b]
    }

    pub fn marginals_x(&self) -> &[u64] {
        &self.marginals_x
    }

    pub fn marginals_y(&self) -> &[u64] {
        &self.marginals_y
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entropy_x(&self, base: LogBase) -> f64 {
        entropy_of_counts(&self.marginals_x, self.total, base)
    }

    pub fn entropy_y(&self, base: LogBase) -> f64 {
        entropy_of_counts(&self.marginals_y, self.total, base)
    }

    pub fn joint_entropy(&self, base: LogBase) -> f64 {
        entropy_of_counts(&self.joint, self.total, base)
    }

    /// Marginal and joint entropies of the table.
    pub fn info(&self, base: LogBase) -> PairInfo {
        PairInfo {
            h_x: self.entropy_x(base),
            h_y: self.entropy_y(base),
            h_xy: self.joint_entropy(base),
        }
    }
}

/// Marginal and joint entropies of a pair, from which MI and VI follow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairInfo {
    pub h_x: f64,
    pub h_y: f64,
    pub h_xy: f64,
}

impl PairInfo {
    /// `H(x) + H(y) - H(x,y)`, with cancellation noise clamped at zero.
    pub fn mutual_information(&self) -> f64 {
        (self.h_x + self.h_y - self.h_xy).max(0.0)
    }

    /// Zero when either marginal entropy is zero.
    pub fn norm_mi(&self) -> f64 {
        if self.h_x <= 0.0 || self.h_y <= 0.0 {
            return 0.0;
        }
        (self.mutual_information() / (self.h_x * self.h_y).sqrt()).clamp(0.0, 1.0)
    }

    /// Zero when the joint entropy is zero (both vectors constant).
    pub fn norm_vi(&self) -> f64 {
        if self.h_xy <= 0.0 {
            return 0.0;
        }
        (1.0 - self.mutual_information() / self.h_xy).clamp(0.0, 1.0)
    }
}

/// Entropy of a histogram. Nonzero cells are summed in sorted order so that
/// transposed tables give bitwise-identical results.
pub(crate) fn entropy_of_counts(counts: &[u64], total: u64, base: LogBase) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let mut nonzero: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    if nonzero.len() <= 1 {
        return 0.0;
    }
    nonzero.sort_unstable();
    let total = total as f64;
    let nats: f64 = nonzero
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    base.convert_nats(nats.max(0.0))
}

fn check_same_len(x: &LabelVector, y: &LabelVector) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "label vectors differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::invalid("label vectors must be nonempty"));
    }
    Ok(())
}

/// Shannon entropy of the empirical class distribution, in bits.
pub fn entropy(x: &LabelVector) -> Result<f64> {
    entropy_in(x, LogBase::Bits)
}

pub fn entropy_in(x: &LabelVector, base: LogBase) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::invalid("label vector must be nonempty"));
    }
    let mut counts = vec![0u64; x.n_classes as usize];
    for &v in &x.values {
        counts[v as usize] += 1;
    }
    Ok(entropy_of_counts(&counts, x.len() as u64, base))
}

pub fn joint_entropy(x: &LabelVector, y: &LabelVector) -> Result<f64> {
    joint_entropy_in(x, y, LogBase::Bits)
}

pub fn joint_entropy_in(x: &LabelVector, y: &LabelVector, base: LogBase) -> Result<f64> {
    Ok(ContingencyTable::new(x, y)?.joint_entropy(base))
}

pub fn mutual_information(x: &LabelVector, y: &LabelVector) -> Result<f64> {
    mutual_information_in(x, y, LogBase::Bits)
}

pub fn mutual_information_in(x: &LabelVector, y: &LabelVector, base: LogBase) -> Result<f64> {
    Ok(ContingencyTable::new(x, y)?.info(base).mutual_information())
}

/// `I(x;y) / sqrt(H(x) H(y))`, in `[0, 1]`.
pub fn norm_mi(x: &LabelVector, y: &LabelVector) -> Result<f64> {
    norm_mi_in(x, y, LogBase::Bits)
}

pub fn norm_mi_in(x: &LabelVector, y: &LabelVector, base: LogBase) -> Result<f64> {
    Ok(ContingencyTable::new(x, y)?.info(base).norm_mi())
}

/// `1 - I(x;y) / H(x,y)`, in `[0, 1]`; a metric on label partitions.
pub fn norm_vi(x: &LabelVector, y: &LabelVector) -> Result<f64> {
    norm_vi_in(x, y, LogBase::Bits)
}

pub fn norm_vi_in(x: &LabelVector, y: &LabelVector, base: LogBase) -> Result<f64> {
    Ok(ContingencyTable::new(x, y)?.info(base).norm_vi())
}
