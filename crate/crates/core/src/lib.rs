//! Random convolutional kernel transform (PPV features + ridge) together with
//! a set of numerical audits for it: Toeplitz coherence, sparsity axioms,
//! noise-robustness certificates, shift invariance and PCA effective
//! dimensionality.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod features;
pub mod kernel;
pub mod rng;
pub mod robustness;
pub mod sensing;
pub mod series;
pub mod sparsity;
pub mod special;
pub mod synthetic;

pub use error::{Error, Result};
pub use features::{fit_ridge, pca_effective_dim, predict, PcaReport, RidgeModel, RidgeOptions};

pub use kernel::{
    convolve, generate_kernels, ppv, transform, ConvolvedSeries, DilationPolicy, FeatureMatrix,
    KernelSpec, Padding, PaddingPolicy, TransformConfig, WeightLaw,
};
pub use series::{load_dataset, standardize, Dataset, LabeledSeries, TimeSeries};

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
