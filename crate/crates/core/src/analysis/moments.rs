//! Moments of `x = |r_ij|`, whose density for M-dimensional Rayleigh vectors
//! is `f(x) = 2(M-1) x (1-x^2)^(M-2)` on `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::special::b_am;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub antennas: usize,
    /// `E(x)`
    pub mean_x: f64,
    /// `E(x^2)`
    pub second_moment: f64,
    /// `sqrt(E(x^2) - E(x)^2)`
    pub std_x: f64,
    /// `E(x^4)`
    pub fourth_moment: f64,
}

pub fn corr_moments(antennas: usize) -> Result<MomentSet> {
    let mean_x = b_am(1.5, antennas)?;
    let second_moment = b_am(2.0, antennas)?;
    let fourth_moment = b_am(3.0, antennas)?;
    let var = second_moment - mean_x * mean_x;
    if var < 0.0 {
        return Err(Error::Domain(format!("negative variance {var:e} at M = {antennas}")));
    }
    Ok(MomentSet {
        antennas,
        mean_x,
        second_moment,
        std_x: var.sqrt(),
        fourth_moment,
    })
}

/// Density of `|r_ij|`.
pub fn corr_pdf(antennas: usize, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) || antennas < 2 {
        return 0.0;
    }
    let m = antennas as f64;
    2.0 * (m - 1.0) * x * (1.0 - x * x).powf(m - 2.0)
}

/// Distribution function `P(|r_ij| <= x) = 1 - (1 - x^2)^(M-1)`.
pub fn corr_cdf(antennas: usize, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        // -expm1((M-1) ln(1-x^2)) keeps precision in the lower tail
        -(((antennas - 1) as f64) * (-x * x).ln_1p()).exp_m1()
    }
}
