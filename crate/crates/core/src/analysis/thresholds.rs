//! Antenna-to-user ratio thresholds for convergence and diagonal dominance.

use super::moments::corr_moments;
use crate::error::{Error, Result};
use crate::linalg::EigenExtremes;

/// Asymptotic extreme eigenvalues `M (1 -+ 1/sqrt(alpha))^2` of `H^H H`,
/// `alpha = M / K`.
pub fn mp_eigen_limits(antennas: usize, users: usize) -> Result<EigenExtremes> {
    if users == 0 || antennas < users {
        return Err(Error::Dimension(format!(
            "need M >= K >= 1, got M = {antennas}, K = {users}"
        )));
    }
    let m = antennas as f64;
    let inv_sqrt_alpha = (users as f64 / m).sqrt();
    Ok(EigenExtremes {
        lambda_min: m * (1.0 - inv_sqrt_alpha).powi(2),
        lambda_max: m * (1.0 + inv_sqrt_alpha).powi(2),
    })
}

/// `1 / (sqrt(2) - 1)^2 = 3 + 2 sqrt(2)`: the ratio at which the
/// asymptotic largest eigenvalue reaches `2M`.
pub fn convergence_alpha_threshold() -> f64 {
    3.0 + 2.0 * std::f64::consts::SQRT_2
}

/// Largest K with `M / K` strictly above the convergence threshold.
pub fn max_users_convergence(antennas: usize) -> Result<usize> {
    if antennas < 6 {
        return Err(Error::Domain(format!("M = {antennas} admits no user (need M >= 6)")));
    }
    let threshold = convergence_alpha_threshold();
    Ok(largest_qualifying(antennas, |k| antennas as f64 / k as f64 > threshold))
}

/// `M c / (c + 1)` with `c = E(x) + std(x)`.
pub fn ddm_alpha_threshold(antennas: usize) -> Result<f64> {
    let m = corr_moments(antennas)?;
    let c = m.mean_x + m.std_x;
    Ok(antennas as f64 * c / (c + 1.0))
}

/// Largest K (at most M) with `M / K` strictly above the diagonal-dominance
/// threshold.
pub fn max_users_ddm(antennas: usize) -> Result<usize> {
    let threshold = ddm_alpha_threshold(antennas)?;
    Ok(largest_qualifying(antennas, |k| antennas as f64 / k as f64 > threshold))
}

// Both predicates are monotone in K, so a forward scan stops at the first
// failure.
fn largest_qualifying(antennas: usize, ok: impl Fn(usize) -> bool) -> usize {
    let mut k = 0;
    while k < antennas && ok(k + 1) {
        k += 1;
    }
    k
}
