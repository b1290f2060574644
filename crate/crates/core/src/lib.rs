//! Exact finite-N Gibbs marginals of the random field Curie-Weiss model,
//! analysis of its free-energy landscape, and seeded experiments checking
//! propagation of chaos.
//!
//! The Gibbs measure on `{-1,+1}^N` is
//! `mu_N(s) = exp(-beta H_N(s)) / Z_N` with
//! `H_N(s) = -(1/2N) (sum_i s_i)^2 - sum_i h_i s_i` and i.i.d. fields `h_i`.
//! A Gaussian linearization turns every marginal of `mu_N` into a ratio of
//! one-dimensional integrals against `exp(N G_N(y))`, which [`marginals`]
//! evaluates by adaptive quadrature for any `N`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod field;
pub mod landscape;
pub mod marginals;
pub mod model;
pub mod numeric;
pub mod phase;
pub mod quadrature;
pub mod report;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Result, RfcwError};
pub use field::{sample_field, FieldSample, FieldSpec};
pub use landscape::{
    big_g, big_g_deriv, classify_maximum, delta_n, empirical_g, find_global_maxima, tail_radius,
    LandscapeReport, MaximumRecord,
};
pub use marginals::{
    exact_sample, log_partition, marginal_quadrature, predicted_product, select_j_index,
    QuadratureSpec,
};
pub use model::{
    brute_force_marginal, hamiltonian, kl_divergence, product_marginal, tv_distance, MarginalTable,
    ModelParams, SpinWord,
};
pub use phase::{
    classify_regime, first_order_beta, second_order_beta, tricritical_point, RegimeCase,
    RegimeLabel,
};
