//! Binary classification from similar pairs, dissimilar pairs and unlabeled points.
//!
//! Every estimator is an unbiased rewrite of the ordinary classification risk in terms of the
//! data that is actually observed, so a linear model can be fitted by minimizing it directly.

pub mod data;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod losses;
pub mod model;
pub mod prior_bounds;
pub mod priors;
pub mod risks;
pub mod rng;
pub mod solvers;

pub use data::{Label, LabeledDataset, LabeledSample, PairExample, PairSet, UnlabeledSet};
pub use error::{Error, Result};
pub use losses::{MarginLoss, MarginLossSpec};
pub use model::{build_design_matrices, classify, predict, DesignMatrices, FeatureMap, LinearModel};
pub use priors::{make_priors, ClassPriors, PRIOR_EPS};
pub use risks::{gamma_for_variant, GammaWeights, Variant};
pub use solvers::{fit, SolverConfig};
pub use datagen::{
    parse_csv, parse_libsvm, sample_gaussian_labeled, sample_pairs, sample_unlabeled, serialize_libsvm, GaussianSpec,
};
pub use prior_bounds::{bound_sdu, bounds_su_du_sd, estimate_prior, BoundConstants, BoundReport};
pub use rng::{mix_seed, rng_from_seed, RNG_ALGORITHM};
pub use eval::{accuracy, clustering_accuracy, cop_kmeans, cross_validate, kmeans, CvResult, HyperGrid, Mixing};
