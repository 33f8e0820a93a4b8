//! Numerical certification of optimal-transport-based Poincaré-Wirtinger
//! inequalities on bounded convex domains.
//!
//! The crate builds the signed-split probability measures of a sign-changing
//! field, computes m-Wasserstein distances by three methods (exact 1D quantile
//! sweep, exact linear programming, entropy-regularized scaling), realizes
//! displacement interpolation from static plans, solves Neumann p-Laplacian
//! eigenproblems, and reports signed slack for every inequality it certifies.

// `!(x > 0.0)` deliberately treats NaN as a validation failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod domain;
pub mod error;
pub mod field;
pub mod geodesic;
pub mod measure;
pub mod spectrum;
pub mod transport;

pub use domain::{ConvexDomain, Grid};
pub use error::{Error, Result};
pub use field::{
    dirichlet_energy, gradient, lr_norm, parse_expr, q_shift, signed_power_integral, split_parts,
    Expr, Polynomial, ScalarField, VectorField,
};
pub use measure::{half_mass_check, rho_pair, DiscreteMeasure};
pub use transport::{
    plan_cost, wasserstein_1d, wasserstein_entropic, wasserstein_exact, EntropicOptions,
    TransportPlan, DEFAULT_PAIR_CAP,
};
pub use geodesic::{
    displacement_interpolate, interpolant_density_1d, lq_convexity_check, GeodesicSample,
    PiecewiseDensity1d,
};
pub use spectrum::{neumann_eigenvalue, pi_p, EigenResult};
pub use certify::{
    check_eigen_bound, thin_box_scaling, x0_candidates, EigenBoundReport, InequalityId,
    InequalityReport, Instance, ScalingReport, SolverChoice,
};
