//! Neumann-series approximation of `G^{-1}` and the residual quantities of
//! the truncated series.
//!
//! With a diagonal preconditioner `Theta`, the N-term approximation is
//! `sum_{n<N} (I - Theta G)^n Theta`. For `Theta = D^{-1}` the iteration
//! matrix is `-Z` with `Z = D^{-1} E`, and the truncation error satisfies
//! `(G^{-1} - G_N^{-1}) G = (-Z)^N` exactly, which is what the residual
//! functions below are built on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMatrix, GramMatrix};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm_sq, matmul, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PreconditionerKind {
    /// `1 / (M + K)` on every entry.
    Uniform,
    /// `delta / (M + K)` with `0 < delta < 1`.
    Attenuated { delta: f64 },
    /// `1 / g_ii`.
    DiagInv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner {
    kind: PreconditionerKind,
    diag: Vec<f64>,
}

impl Preconditioner {
    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NsApproximation {
    pub matrix: ComplexMatrix,
    pub terms: usize,
    pub preconditioner: PreconditionerKind,
}

pub fn make_preconditioner(g: &GramMatrix, antennas: usize, kind: PreconditionerKind) -> Result<Preconditioner> {
    let k = g.dim();
    if antennas < k {
        return Err(Error::Dimension(format!("M = {antennas} < K = {k}")));
    }
    let uniform = 1.0 / (antennas + k) as f64;
    let diag = match kind {
        PreconditionerKind::Uniform => vec![uniform; k],
        PreconditionerKind::Attenuated { delta } => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Parameter(format!("attenuation {delta} outside (0, 1)")));
            }
            vec![delta * uniform; k]
        }
        PreconditionerKind::DiagInv => {
            if let Some(bad) = g.diag().iter().find(|&&d| !(d > 0.0)) {
                return Err(Error::Degenerate(format!("Gram diagonal entry {bad}")));
            }
            g.diag().iter().map(|d| d.recip()).collect()
        }
    };
    Ok(Preconditioner { kind, diag })
}

fn check_dim(g: &GramMatrix, theta: &Preconditioner) -> Result<()> {
    if theta.diag.len() != g.dim() {
        return Err(Error::Dimension(format!(
            "preconditioner of size {} for K = {}",
            theta.diag.len(),
            g.dim()
        )));
    }
    Ok(())
}

/// `I - Theta G`.
pub fn iteration_matrix(g: &GramMatrix, theta: &Preconditioner) -> Result<ComplexMatrix> {
    check_dim(g, theta)?;
    let k = g.dim();
    let tg = g.matrix().scale_rows(&theta.diag)?;
    ComplexMatrix::identity(k).sub(&tg)
}

/// Truncated series with `terms` terms, accumulated as `X <- B X + Theta`.
pub fn ns_inverse(g: &GramMatrix, theta: &Preconditioner, terms: usize) -> Result<NsApproximation> {
    if terms == 0 {
        return Err(Error::Parameter("Neumann series needs at least one term".into()));
    }
    let b = iteration_matrix(g, theta)?;
    let theta_m = ComplexMatrix::from_diag(&theta.diag);
    let mut x = theta_m.clone();
    for _ in 1..terms {
        x = matmul(&b, &x)?.add(&theta_m)?;
    }
    Ok(NsApproximation {
        matrix: x,
        terms,
        preconditioner: theta.kind,
    })
}

/// `sum_{n<N} (-Z)^n D^{-1}`, the `D + E` split form, evaluated with
/// explicit powers of `Z`. Only meaningful for the `D^{-1}` preconditioner.
pub fn ns_inverse_decomposed(g: &GramMatrix, terms: usize) -> Result<ComplexMatrix> {
    if terms == 0 {
        return Err(Error::Parameter("Neumann series needs at least one term".into()));
    }
    let z = residual_matrix(g)?;
    let neg_z = z.scale(-1.0);
    let dinv: Vec<f64> = g.diag().iter().map(|d| d.recip()).collect();
    let k = g.dim();
    let mut power = ComplexMatrix::identity(k);
    let mut sum = ComplexMatrix::zeros(k, k);
    for n in 0..terms {
        if n > 0 {
            power = matmul(&power, &neg_z)?;
        }
        sum = sum.add(&power)?;
    }
    // right-multiplying by D^{-1} scales columns
    Ok(ComplexMatrix::from_fn(k, k, |r, c| sum[(r, c)] * dinv[c]))
}

/// `prod_{l<L} [I + B^{2^l}] Theta`, equal to the `2^L`-term series.
pub fn ns_inverse_product_form(g: &GramMatrix, theta: &Preconditioner, levels: u32) -> Result<NsApproximation> {
    if levels == 0 {
        return Err(Error::Parameter("product form needs L >= 1".into()));
    }
    if levels >= usize::BITS {
        return Err(Error::Parameter(format!("L = {levels} overflows the term count")));
    }
    let k = g.dim();
    let id = ComplexMatrix::identity(k);
    let mut b_pow = iteration_matrix(g, theta)?;
    let mut product = id.add(&b_pow)?;
    for _ in 1..levels {
        b_pow = matmul(&b_pow, &b_pow)?;
        product = matmul(&product, &id.add(&b_pow)?)?;
    }
    let matrix = ComplexMatrix::from_fn(k, k, |r, c| product[(r, c)] * theta.diag[c]);
    Ok(NsApproximation {
        matrix,
        terms: 1 << levels,
        preconditioner: theta.kind,
    })
}

/// Zero-forcing estimate `G_inv H^H y`, as two matrix-vector products.
pub fn zf_apply(h: &ChannelMatrix, g_inv: &ComplexMatrix, y: &[Complex64]) -> Result<Vec<Complex64>> {
    if g_inv.rows() != h.users() || g_inv.cols() != h.users() {
        return Err(Error::Dimension(format!(
            "{}x{} inverse for K = {}",
            g_inv.rows(),
            g_inv.cols(),
            h.users()
        )));
    }
    let matched = h.adjoint_mul_vec(y)?;
    g_inv.mul_vec(&matched)
}

/// `Z = D^{-1} E`.
pub fn residual_matrix(g: &GramMatrix) -> Result<ComplexMatrix> {
    if let Some(bad) = g.diag().iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::Degenerate(format!("Gram diagonal entry {bad}")));
    }
    let dinv: Vec<f64> = g.diag().iter().map(|d| d.recip()).collect();
    g.hollow().scale_rows(&dinv)
}

/// `||Z^N||_F^2`, the per-realization MSE of the N-term approximation.
pub fn residual_power(g: &GramMatrix, terms: usize) -> Result<f64> {
    if terms == 0 {
        return Err(Error::Parameter("N must be at least 1".into()));
    }
    Ok(residual_powers(g, terms)?[terms - 1])
}

/// `[||Z||_F^2, ||Z^2||_F^2, ..., ||Z^max||_F^2]`.
pub fn residual_powers(g: &GramMatrix, max_terms: usize) -> Result<Vec<f64>> {
    let z = residual_matrix(g)?;
    let mut out = Vec::with_capacity(max_terms);
    let mut power = z.clone();
    for n in 1..=max_terms {
        if n > 1 {
            power = matmul(&power, &z)?;
        }
        out.push(frobenius_norm_sq(&power));
    }
    Ok(out)
}

fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Uplink error `||(G_exact^{-1} - G_N^{-1}) G s||^2` for one symbol vector.
pub fn uplink_error(exact: &ComplexMatrix, approx: &ComplexMatrix, g: &GramMatrix, s: &[Complex64]) -> Result<f64> {
    let diff = exact.sub(approx)?;
    let gs = g.matrix().mul_vec(s)?;
    Ok(norm_sq(&diff.mul_vec(&gs)?))
}

/// Downlink error `||s^T (G_exact^{-1} - G_N^{-1}) G||^2` (plain transpose).
pub fn downlink_error(exact: &ComplexMatrix, approx: &ComplexMatrix, g: &GramMatrix, s: &[Complex64]) -> Result<f64> {
    let diff = exact.sub(approx)?;
    let row = diff.vec_mul(s)?;
    Ok(norm_sq(&g.matrix().vec_mul(&row)?))
}

/// Uplink MSE averaged over unit-power symbols, `||(G_exact^{-1} - G_N^{-1}) G||_F^2`.
pub fn uplink_mse(exact: &ComplexMatrix, approx: &ComplexMatrix, g: &GramMatrix) -> Result<f64> {
    Ok(frobenius_norm_sq(&matmul(&exact.sub(approx)?, g.matrix())?))
}

/// Downlink MSE averaged over unit-power symbols, `||G (G_exact^{-1} - G_N^{-1})||_F^2`.
pub fn downlink_mse(exact: &ComplexMatrix, approx: &ComplexMatrix, g: &GramMatrix) -> Result<f64> {
    Ok(frobenius_norm_sq(&matmul(g.matrix(), &exact.sub(approx)?)?))
}
