//! Hierarchical riffle-independent models over rankings.
//!
//! A model factors a distribution over rankings of `n` items along a binary
//! hierarchy of item subsets: leaves hold full tables over the relative
//! rankings of their items, internal nodes hold interleaving tables. The
//! crate covers exact evaluation and sampling, conditioning on partial
//! rankings, brute-force decomposability checks at small `n`, and learning
//! from partially ranked data by EM.

pub mod condition;
mod consistency;
pub mod dataset;
pub mod dense;
pub mod error;
pub mod exec;
pub mod hierarchy;
pub mod io;
pub mod items;
pub mod lab;
pub mod learn;
pub mod model;
pub mod perm;
pub mod ranking;
pub mod structure;

pub use condition::{
    condition_noisy, pr_condition, pr_condition_with, sample_posterior, ConditioningResult, MixtureModel, NoiseConfig,
    NoiseDenominator,
};
pub use dataset::{Dataset, Record};
pub use dense::DenseDistribution;
pub use error::{Error, Result};
pub use exec::Exec;
pub use hierarchy::Hierarchy;
pub use items::{ItemSet, ItemUniverse};
pub use learn::{censor, em_fit, loglik, mle_full, mle_weighted, uniform_fillin, EmConfig, EmMode, FitResult};
pub use model::RiffleModel;
pub use ranking::{Interleaving, PartialRanking, Ranking, Side};
pub use structure::{learn_structure, LearnedStructure, StructureConfig};
