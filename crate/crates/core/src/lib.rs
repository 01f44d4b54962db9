//! Entropy-objective ensemble pruning.
//!
//! Given the predictions of `n` classifiers over `d` labeled instances, pick a
//! size-`k` sub-ensemble that trades off pairwise diversity (normalized
//! variation of information between members) against relevance (normalized
//! mutual information between each member and the labels).
//!
//! The crate provides:
//!
//! - [`entropy`]: discrete entropy kernels over integer label vectors.
//! - [`objective`]: the pairwise and set-level objectives and an exhaustive oracle.
//! - [`pruners`]: the greedy maximizer plus accuracy, kappa and random baselines.
//! - [`distributed`]: balanced random partitioning, the two-round distributed
//!   greedy and the generic distributed wrapper around any [`pruners::Pruner`].
//! - [`ensemble_io`]: CSV ingestion, synthetic ensembles, bagging and voting.
//! - [`harness`]: the experiment drivers behind the `entroprune` binary.

pub mod distributed;
pub mod ensemble_io;
pub mod entropy;
pub mod error;
pub mod harness;
pub mod objective;
pub mod pruners;

pub use distributed::{
    benchmark_speedup, domep, epfd, partition, Criterion, DistributedConfig, DistributedResult,
    DistributedRunner, Partition, SpeedupRow, Winner,
};
pub use ensemble_io::{accuracy, majority_vote, synthetic_ensemble, SyntheticSpec};
pub use entropy::{
    entropy, joint_entropy, mutual_information, norm_mi, norm_vi, LabelVector, LogBase,
};
pub use error::{Error, Result};
pub use objective::{
    brute_force_optimum, tdac, tdas_decomposed, tdas_pairwise, EnsemblePredictions, Objective,
    ObjectiveParams,
};
pub use pruners::{comep, pruner_by_name, Pruner, Selection, PRUNER_NAMES};
