//! Dense complex matrix kernels.
//!
//! Everything here is sized for the K x K problems of multi-user detection
//! (K up to a few hundred), so the routines are plain O(K^3) loops over a
//! row-major buffer. The Hermitian eigensolver reduces to a real symmetric
//! tridiagonal matrix with Householder reflections and then runs implicit
//! QL; only eigenvalues are produced.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::GramMatrix;
use crate::error::{Error, Result};

/// Relative tolerance on `||A - A^H||_F / ||A||_F` for Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-8;

const QL_MAX_ITER: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Left-multiplies by `diag(d)`, i.e. scales row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.rows {
            return Err(Error::Dimension(format!(
                "row scaling of length {} for {} rows",
                d.len(),
                self.rows
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)] * d[r]))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} for {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Row vector times matrix: returns `x^T A`.
    pub fn vec_mul(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.rows {
            return Err(Error::Dimension(format!(
                "vector of length {} for {} rows",
                x.len(),
                self.rows
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (r, &xr) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += xr * a;
            }
        }
        Ok(out)
    }

    /// Relative Hermitian defect `||A - A^H||_F / ||A||_F` (0 for the zero matrix).
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut diff = 0.0;
        for r in 0..n {
            for c in 0..n {
                diff += (self[(r, c)] - self[(c, r)].conj()).norm_sqr();
            }
        }
        let norm = frobenius_norm_sq(self);
        if norm == 0.0 {
            0.0
        } else {
            (diff / norm).sqrt()
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenExtremes {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(Error::Dimension(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    // i-k-j order keeps the inner loop on contiguous rows of `b` and `out`.
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

pub fn frobenius_norm_sq(a: &ComplexMatrix) -> f64 {
    a.data.iter().map(|z| z.norm_sqr()).sum()
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("{}x{} is not square", a.rows, a.cols)));
    }
    let defect = a.hermitian_defect();
    if !(defect <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian(defect));
    }
    let (mut d, mut e) = tridiagonalize(a);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

pub fn hermitian_eig_extremes(a: &ComplexMatrix) -> Result<EigenExtremes> {
    let eig = hermitian_eigenvalues(a)?;
    match (eig.first(), eig.last()) {
        (Some(&lambda_min), Some(&lambda_max)) => Ok(EigenExtremes { lambda_min, lambda_max }),
        _ => Err(Error::Dimension("empty matrix".into())),
    }
}

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
/// form. Returns the diagonal and the sub-diagonal magnitudes, the latter
/// padded with a trailing zero so both vectors have length n.
fn tridiagonalize(a: &ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows;
    let mut w = a.data.clone();
    let mut off = vec![0.0; n];
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    let mut p = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let xnorm = (lo..n).map(|i| w[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = w[lo * n + k];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        off[k] = xnorm;

        for i in lo..n {
            u[i] = w[i * n + k];
        }
        u[lo] -= alpha;
        let unorm = (lo..n).map(|i| u[i].norm_sqr()).sum::<f64>().sqrt();
        if unorm == 0.0 {
            continue;
        }
        for ui in &mut u[lo..n] {
            *ui /= unorm;
        }

        // A' = A - u w^H - w u^H with w = 2p - 2(u^H p)u, p = A u.
        let mut c = 0.0;
        for i in lo..n {
            let row = &w[i * n..(i + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..n {
                acc += row[j] * u[j];
            }
            p[i] = acc;
            c += (u[i].conj() * acc).re;
        }
        for i in lo..n {
            p[i] = (p[i] - u[i] * c) * 2.0;
        }
        for i in lo..n {
            let (ui, pi) = (u[i], p[i]);
            let row = &mut w[i * n..(i + 1) * n];
            for j in lo..n {
                row[j] -= ui * p[j].conj() + pi * u[j].conj();
            }
        }
    }
    if n >= 2 {
        off[n - 2] = w[(n - 1) * n + (n - 2)].norm();
    }
    let diag = (0..n).map(|i| w[i * n + i].re).collect();
    (diag, off)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix; `d` is overwritten
/// with the eigenvalues (unsorted). `e[i]` couples rows i and i+1.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence(QL_MAX_ITER));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// `D^{-1/2} G D^{-1/2}`, the Hermitian matrix similar to `D^{-1} G`.
pub fn normalized_gram(g: &GramMatrix) -> Result<ComplexMatrix> {
    let diag = g.diag();
    if let Some(bad) = diag.iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::Degenerate(format!("non-positive Gram diagonal entry {bad}")));
    }
    let s: Vec<f64> = diag.iter().map(|d| d.sqrt().recip()).collect();
    let k = g.dim();
    let m = g.matrix();
    Ok(ComplexMatrix::from_fn(k, k, |r, c| {
        if r == c {
            Complex64::new(1.0, 0.0)
        } else {
            m[(r, c)] * (s[r] * s[c])
        }
    }))
}

/// Spectral radius of the Neumann iteration matrix `I - D^{-1} G`.
///
/// `I - D^{-1}G` is similar to `I - D^{-1/2} G D^{-1/2}`, so the radius is
/// `max(|1 - lambda_min|, |1 - lambda_max|)` over the normalized Gram matrix.
pub fn iteration_spectral_radius(g: &GramMatrix) -> Result<f64> {
    let ext = hermitian_eig_extremes(&normalized_gram(g)?)?;
    Ok((1.0 - ext.lambda_min).abs().max((ext.lambda_max - 1.0).abs()))
}

fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::Singular(format!("pivot {j} is {diag:e}")));
        }
        let ljj = diag.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Exact inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn exact_inverse(g: &GramMatrix) -> Result<ComplexMatrix> {
    hpd_inverse(g.matrix())
}

pub fn hpd_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("{}x{} is not square", a.rows, a.cols)));
    }
    let defect = a.hermitian_defect();
    if !(defect <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian(defect));
    }
    let n = a.rows;
    let l = cholesky(a)?;
    // L^{-1} by forward substitution, column by column.
    let mut linv = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        for r in c..n {
            let mut v = if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for k in c..r {
                v -= l[(r, k)] * linv[(k, c)];
            }
            linv[(r, c)] = v / l[(r, r)];
        }
    }
    // A^{-1} = L^{-H} L^{-1}; fill the upper triangle and mirror.
    let mut inv = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut v = Complex64::new(0.0, 0.0);
            for k in j..n {
                v += linv[(k, i)].conj() * linv[(k, j)];
            }
            inv[(i, j)] = v;
            inv[(j, i)] = v.conj();
        }
        inv[(i, i)].im = 0.0;
    }
    Ok(inv)
}
