//! Numerical laboratory for Dunkl operators and functional inequalities of
//! singular Boltzmann-Gibbs measures.
//!
//! The crate is organised around five subsystems:
//!
//! - [`root_system`]: root systems, reflections, the finite reflection group,
//!   Weyl chambers and the weight `w_k(x) = prod |<a,x>|^{2k_a}`.
//! - [`dunkl_calc`]: Dunkl operators `T_i`, exactly on rational polynomials
//!   and numerically on arbitrary scalar fields, with the Dunkl gradient,
//!   both forms of the Dunkl Laplacian and the generalised Leibniz rule.
//! - [`quadrature`]: deterministic tensor-panel Gauss-Legendre integration
//!   against the measures `mu_k`, `mu_U = Z^{-1} e^{-|x|^p} mu_k`, their
//!   Weyl-chamber restrictions and Dunkl ball measures.
//! - [`sampler`]: random-walk Metropolis and MALA chains for `mu_U`, an
//!   exact tridiagonal beta-ensemble oracle for the type-A Gaussian case,
//!   and chain diagnostics (split R-hat, ESS, Monte Carlo errors).
//! - [`inequality_lab`]: entropy and Dirichlet functionals, generic
//!   inequality reports, constant fitting, Rayleigh-quotient spectral-gap
//!   estimation, concentration and exponential-integrability scans, and a
//!   named catalogue of all implemented checks.

pub mod dunkl_calc;
pub mod inequality_lab;
pub mod quadrature;
pub mod root_system;
pub mod sampler;

pub(crate) mod vecmath;

// Exact coefficients appear in the public polynomial API.
pub use num_rational;
