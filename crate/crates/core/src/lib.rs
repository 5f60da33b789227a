//! Optimal irreversible investment under exponential Lévy uncertainty.
//!
//! A firm with operating profit `pi(e^{x + X_t}, C_t)` chooses a
//! nondecreasing capacity `C`. The optimal policy keeps capacity at or above
//! `b(x + X_t)`, where the boundary `b` solves, for every `u`,
//!
//! ```text
//! E[ pi_c(exp(u + I_{T_r}), b(u)) ] = r,
//! ```
//!
//! with `I_{T_r}` the running infimum of `X` at an independent exponential
//! time of rate `r`. This crate computes `b` (generic root finding, plus the
//! closed forms for Cobb-Douglas and CES profits), and checks the answer by
//! simulating the reflection policy: the integral equation, the
//! factorization identity, first-order conditions, optimality against
//! rescaled boundaries and the structure of the associated stopping value.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` and `*32` aliases below name the common instantiations.

// Validity checks are written `!(a < b)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod control;
pub mod error;
pub mod levy;
pub mod profit;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod scalar;
pub mod stats;
pub mod wiener_hopf;

pub use boundary::{
    ces_boundary_constant, ces_polynomial_constant, cobb_douglas_boundary, integral_equation_residual,
    integral_equation_residual_sampled, phi, solve_boundary_grid, solve_boundary_point, Boundary, BoundaryTable,
    CesBoundary, CobbDouglasBoundary, NoInvestment, Provenance, Scaled,
};
pub use control::{
    compare_policies, evaluate_profit, foc_residuals, simulate_policy, stopping_value, stopping_values, ComparisonRow,
    FocReport, FocRow, PolicyComparison, PolicyEvaluation, SimulationOptions, StoppingRule,
};
pub use error::{Error, Result};
pub use levy::{
    path_extrema, sample_horizon, sample_path, ExtremaMethod, ExtremaSample, Family, LevyModel, PathOptions, SamplePath,
};
pub use profit::{check_assumptions, AssumptionReport, CheckOptions, CheckStatus, ProfitFunction, ProfitKind};
pub use rng::Streams;
pub use scalar::Scalar;
pub use stats::{Estimate, PairedSamples};
pub use wiener_hopf::{cramer_roots, wh_identity_residual, FactorMode, IdentityCheck, WienerHopfFactors};

pub type LevyModel64 = LevyModel<f64>;
pub type LevyModel32 = LevyModel<f32>;
pub type ProfitFunction64 = ProfitFunction<f64>;
pub type ProfitFunction32 = ProfitFunction<f32>;
pub type WienerHopf64 = WienerHopfFactors<f64>;
pub type WienerHopf32 = WienerHopfFactors<f32>;
pub type BoundaryTable64 = BoundaryTable<f64>;
pub type BoundaryTable32 = BoundaryTable<f32>;
pub type Estimate64 = Estimate<f64>;
pub type PolicyEvaluation64 = PolicyEvaluation<f64>;
