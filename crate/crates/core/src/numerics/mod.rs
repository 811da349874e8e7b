//! Quadrature, quasi-Monte Carlo integration and special functions.

mod qmc_integrate;
mod quadrature;
mod special;

pub use qmc_integrate::{expect_dirichlet_qmc, integrate_simplex_qmc, QMC_BATCHES};
pub use quadrature::{
    gauss_legendre, inner_integral, integrate_1d, integrate_1d_breaks, integrate_adaptive, Domain, GkOptions, QuadratureResult,
    DEFAULT_MAX_INTERVALS, INNER_TOL_FACTOR,
};
pub use special::{
    alternating_sum, gamma_p_inv, ln_gamma, normal_quantile, reg_inc_beta, Constants, CATALAN, CONSTANTS,
};
