//! Closed-form analysis: special functions, correlation moments,
//! antenna-to-user thresholds, residual estimates and SIR.

pub mod moments;
pub mod residual;
pub mod special;
pub mod thresholds;
pub mod walks;

pub use moments::{corr_cdf, corr_moments, corr_pdf, MomentSet};
pub use residual::{epsilon_estimate, error_upper_bound, sir_db, sir_linear, ErrorEstimate, MAX_ESTIMATE_TERMS};
pub use special::{b_am, beta, ln_gamma};
pub use thresholds::{
    convergence_alpha_threshold, ddm_alpha_threshold, max_users_convergence, max_users_ddm, mp_eigen_limits,
};
pub use walks::{epsilon_walk_expansion, walk_terms, WalkTerm, MAX_WALK_TERMS};
