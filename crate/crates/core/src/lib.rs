//! fairgeo designs compressed data representations that stay useful for a
//! downstream task while keeping every representation value within a
//! point-wise chi-squared budget of the sensitive-attribute marginal.
//!
//! The design itself is spectral: perturbation directions of the sensitive
//! conditional map linearly into task-space and data-space deviations, and
//! for small budgets both mutual informations collapse to quadratic forms in
//! those directions. The best direction is the dominant feasible singular
//! vector of the task-side operator, shrunk by the smallest factor that
//! restores the compression budget. Everything the approximation claims is
//! checked against exact brute force: an exhaustive channel search for the
//! true trade-off and an error probe for the quadratic surrogate.
//!
//! Modules:
//! - [`dist`]: pmfs, channels, joints, exact information measures
//! - [`matrix`], [`svd`]: small dense linear algebra
//! - [`geometry`]: deviation operators, validity thresholds, quadratic forms
//! - [`designer`]: spectral design, K-scaling, reconstruction
//! - [`oracle`]: exhaustive search and the quadratic certifier
//! - [`instance`], [`sweep`]: instance files and CSV sweeps
//! - [`mod@reference`]: bundled instance with known-good constants

pub mod designer;
pub mod dist;
pub mod error;
pub mod geometry;
pub mod instance;
pub mod matrix;
pub mod oracle;
pub mod reference;
pub mod svd;
pub mod sweep;

pub use designer::{
    compute_k, low_rate_bound, select_direction, solve, DesignSolution, SpectralData,
};
pub use dist::{
    bayes_invert, chi_squared, compose, entropy, kl_divergence, mutual_information, parity_gap,
    Channel, JointDist, LogBase, Pmf,
};
pub use error::{Error, Result};
pub use geometry::{
    approx_mi_ty, approx_mi_xy, approximation_error_probe, build_operators, perturb_to_conditional,
    GeometryOperators, PerturbationDesign, ProblemInstance,
};
pub use instance::InstanceFile;
pub use oracle::{
    evaluate_channel, grid_search, quadratic_oracle, Measure, OracleConfig, OracleResult,
};
pub use svd::{svd_small, Svd};
