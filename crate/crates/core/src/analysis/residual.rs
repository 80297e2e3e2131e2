//! Closed-form estimates of the expected residual `eps_N = E ||Z^N||_F^2`
//! and the resulting signal-to-interference ratio `K / eps_N`.

use serde::{Deserialize, Serialize};

use super::special::b_am;
use crate::error::{Error, Result};

/// Largest N with a closed-form estimate.
pub const MAX_ESTIMATE_TERMS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub terms: usize,
    pub epsilon: f64,
    pub sir_linear: f64,
    pub sir_db: f64,
    /// Loose upper bound on `eps_N`; `None` when `M <= 4`.
    pub upper_bound: Option<f64>,
}

/// Closed-form `eps_N` for `N` in 1..=4.
///
/// `N = 1, 2` are exact under the `z_ij ~ r_ij` model. The `N = 3, 4`
/// forms drop higher-order walk terms and miss simulation by 15 to 45%;
/// `walks::epsilon_walk_expansion` gives the full expansion.
pub fn epsilon_estimate(antennas: usize, users: usize, terms: usize) -> Result<ErrorEstimate> {
    if users == 0 {
        return Err(Error::Dimension("K must be at least 1".into()));
    }
    if !(1..=MAX_ESTIMATE_TERMS).contains(&terms) {
        return Err(Error::Parameter(format!("no closed-form estimate for N = {terms}")));
    }
    let b2 = b_am(2.0, antennas)?;
    let b3 = b_am(3.0, antennas)?;
    let b4 = b_am(4.0, antennas)?;
    let k = users as f64;
    let epsilon = match terms {
        1 => k * (k - 1.0) * b2,
        2 => k * (k - 1.0) * b3 + 2.0 * (k - 2.0) * (k - 1.0) * k * b2 * b2,
        3 => (k - 2.0) * (k - 1.0) * k * (5.0 * k - 8.0) * b2.powi(3) + (2.0 * k - 3.0) * (k - 1.0) * k * b3 * b2,
        _ => {
            (2.0 * k - 3.0) * (k - 1.0) * k * b3 * b3
                + (2.0 * k - 3.0).powi(2) * (k - 1.0).powi(2) * k * b4 * b2
                + (k - 2.0) * (k - 1.0).powi(2) * k * k * b2.powi(4)
        }
    };
    let sir_linear = sir_linear(users, epsilon);
    Ok(ErrorEstimate {
        terms,
        epsilon,
        sir_linear,
        sir_db: 10.0 * sir_linear.log10(),
        upper_bound: error_upper_bound(antennas, users, terms),
    })
}

/// `[(K^2 - K) sqrt(2M(M+1) / ((M-1)(M-2)(M-3)(M-4)))]^N`, defined for `M > 4`.
pub fn error_upper_bound(antennas: usize, users: usize, terms: usize) -> Option<f64> {
    if antennas <= 4 {
        return None;
    }
    let m = antennas as f64;
    let k = users as f64;
    let root = (2.0 * m * (m + 1.0) / ((m - 1.0) * (m - 2.0) * (m - 3.0) * (m - 4.0))).sqrt();
    Some(((k * k - k) * root).powi(terms as i32))
}

/// `K / eps`; infinite for a zero residual.
pub fn sir_linear(users: usize, epsilon: f64) -> f64 {
    users as f64 / epsilon
}

/// `10 log10(K / eps)`.
pub fn sir_db(users: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("residual power {epsilon} must be positive")));
    }
    Ok(10.0 * sir_linear(users, epsilon).log10())
}
