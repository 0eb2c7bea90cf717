//! Numerical laboratory for randomized radial zero sets: builds zero
//! configurations with prescribed moduli and independent uniform angles,
//! evaluates the associated canonical products entirely in the log domain,
//! and runs the growth, concentration, and norm diagnostics that decide
//! whether such a configuration is tame for a given weighted space.
//!
//! Layout:
//! - [`sequences`]: radial modulus families, counting functions, density
//!   classification;
//! - [`randomize`]: counter-based angle streams and point configurations;
//! - [`weight`]: radial weight profiles;
//! - [`product`]: elementary factors, genus/prefactor algebra, truncation
//!   policies, log-domain product evaluation;
//! - [`diagnostics`]: circle suprema, concentration experiments, growth
//!   exponent and deficit fits, norm quadrature, angular indicators;
//! - [`numeric`]: the small deterministic toolkit underneath.

pub mod diagnostics;
pub mod error;
pub mod numeric;
pub mod product;
pub mod randomize;
pub mod sequences;
pub mod weight;

pub use diagnostics::{
    circle_sup_log, concentration_experiment, fock_norm_estimate, hoeffding_bound,
    jensen_certificate, lp_indicator, nearest_safe_radius, uniqueness_exponent_fit,
    AngularDensityMeasure, CircleSup, DecayWitness, ExperimentReport, JensenStatus, JensenVerdict,
    NormEstimate, ProductForm, RadiusAggregate, TrialRecord,
};
pub use error::{Error, Result};
pub use product::{
    eval_circle, expected_log_product, log_elementary_factor, log_product, tail_sum, CirclePoint,
    GenusSpec, ProductValue, TailSum, TruncationPolicy,
};
pub use randomize::{equidistribution_stat, randomize, ConfigSpec, PointConfiguration};
pub use sequences::{
    classify_density, critical_deficit_fit, make_sequence, ClassificationRecord, CountingWindow,
    DensityLabel, Family, RadialSequence, Spacing,
};
pub use weight::WeightProfile;
