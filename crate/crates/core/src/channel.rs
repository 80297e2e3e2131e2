//! Rayleigh channel realizations and the Gram matrix `G = H^H H`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HERMITIAN_TOL};

/// Random stream for one Monte Carlo trial.
///
/// The key is built from the base seed and a configuration id, and the trial
/// index selects the ChaCha stream, so every (seed, configuration, trial)
/// triple maps to its own independent sequence regardless of which worker
/// runs it.
pub fn trial_rng(base_seed: u64, config_id: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base_seed.to_le_bytes());
    key[8..16].copy_from_slice(&config_id.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// An M x K channel, stored column by column so each user's vector `h_k`
/// is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    antennas: usize,
    users: usize,
    cols: Vec<Complex64>,
}

impl ChannelMatrix {
    /// Wraps explicit user columns (`columns[k]` is `h_k`).
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let users = columns.len();
        let antennas = columns.first().map_or(0, Vec::len);
        check_dims(antennas, users)?;
        if columns.iter().any(|c| c.len() != antennas) {
            return Err(Error::Dimension("ragged channel columns".into()));
        }
        Ok(Self {
            antennas,
            users,
            cols: columns.concat(),
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.cols[k * self.antennas..(k + 1) * self.antennas]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.cols
    }

    /// `H x` for a length-K vector.
    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.users {
            return Err(Error::Dimension(format!(
                "vector of length {} for {} users",
                x.len(),
                self.users
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.antennas];
        for (k, &xk) in x.iter().enumerate() {
            for (o, &h) in out.iter_mut().zip(self.column(k)) {
                *o += h * xk;
            }
        }
        Ok(out)
    }

    /// `H^H y` for a length-M vector.
    pub fn adjoint_mul_vec(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.antennas {
            return Err(Error::Dimension(format!(
                "vector of length {} for {} antennas",
                y.len(),
                self.antennas
            )));
        }
        Ok((0..self.users).map(|k| dot_conj(self.column(k), y)).collect())
    }
}

fn check_dims(antennas: usize, users: usize) -> Result<()> {
    if users == 0 || antennas < users {
        return Err(Error::Dimension(format!(
            "need M >= K >= 1, got M = {antennas}, K = {users}"
        )));
    }
    Ok(())
}

/// Draws an M x K matrix of i.i.d. CN(0, 1) entries (each real component
/// has variance 1/2).
pub fn sample_channel<R: Rng + ?Sized>(antennas: usize, users: usize, rng: &mut R) -> Result<ChannelMatrix> {
    check_dims(antennas, users)?;
    let cols = (0..antennas * users)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        })
        .collect();
    Ok(ChannelMatrix { antennas, users, cols })
}

/// `sum conj(a_i) b_i`, with split accumulators so the loop pipelines.
fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            re[l] += x[l].re * y[l].re + x[l].im * y[l].im;
            im[l] += x[l].re * y[l].im - x[l].im * y[l].re;
        }
    }
    let mut r = (re[0] + re[1]) + (re[2] + re[3]);
    let mut i = (im[0] + im[1]) + (im[2] + im[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        r += x.re * y.re + x.im * y.im;
        i += x.re * y.im - x.im * y.re;
    }
    Complex64::new(r, i)
}

/// The K x K Gram matrix together with its split `G = D + E`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    full: ComplexMatrix,
    diag: Vec<f64>,
    hollow: ComplexMatrix,
}

impl GramMatrix {
    /// Accepts an explicit Hermitian matrix (synthetic inputs, tests). The
    /// diagonal is taken as real and the matrix is re-mirrored from its upper
    /// triangle.
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::Dimension(format!("{}x{} Gram matrix", m.rows(), m.cols())));
        }
        let defect = m.hermitian_defect();
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(defect));
        }
        let k = m.rows();
        let upper = |r: usize, c: usize| {
            if r == c {
                Complex64::new(m[(r, r)].re, 0.0)
            } else if r < c {
                m[(r, c)]
            } else {
                m[(c, r)].conj()
            }
        };
        Ok(Self::from_upper(k, upper))
    }

    fn from_upper(k: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let full = ComplexMatrix::from_fn(k, k, f);
        let diag = (0..k).map(|i| full[(i, i)].re).collect();
        let hollow = ComplexMatrix::from_fn(
            k,
            k,
            |r, c| {
                if r == c {
                    Complex64::new(0.0, 0.0)
                } else {
                    full[(r, c)]
                }
            },
        );
        Self { full, diag, hollow }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.full
    }

    /// The diagonal `g_ii = ||h_i||^2`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// The off-diagonal part `E` (zero diagonal).
    pub fn hollow(&self) -> &ComplexMatrix {
        &self.hollow
    }
}

/// `G = H^H H`. Only the upper triangle is accumulated; the lower triangle is
/// its conjugate mirror, so `G` is exactly Hermitian.
pub fn gram(h: &ChannelMatrix) -> GramMatrix {
    let k = h.users;
    let mut upper = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        let hi = h.column(i);
        upper[i * k + i] = Complex64::new(hi.iter().map(|z| z.norm_sqr()).sum(), 0.0);
        for j in i + 1..k {
            upper[i * k + j] = dot_conj(hi, h.column(j));
        }
    }
    GramMatrix::from_upper(k, |r, c| {
        if r <= c {
            upper[r * k + c]
        } else {
            upper[c * k + r].conj()
        }
    })
}

/// Normalized correlation `r_ij` between two user vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationCoefficient {
    pub value: Complex64,
}

impl CorrelationCoefficient {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// `r_ij = h_i^H h_j / (||h_i|| ||h_j||)` with zero-based user indices.
pub fn normalized_correlation(h: &ChannelMatrix, i: usize, j: usize) -> Result<CorrelationCoefficient> {
    let k = h.users;
    if i >= k || j >= k {
        return Err(Error::Index(format!("users ({i}, {j}) with K = {k}")));
    }
    if i == j {
        return Err(Error::Index(format!("correlation needs distinct users, got {i} twice")));
    }
    let (hi, hj) = (h.column(i), h.column(j));
    let ni = hi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nj = hj.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if ni == 0.0 || nj == 0.0 {
        return Err(Error::Degenerate(format!("zero-norm user column ({i} or {j})")));
    }
    let value = dot_conj(hi, hj) / (ni * nj);
    // Clamp rounding overshoot so |r| <= 1 holds exactly.
    let mag = value.norm();
    let value = if mag > 1.0 { value / mag } else { value };
    Ok(CorrelationCoefficient { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_dimensions() {
        let mut rng = trial_rng(1, 0, 0);
        assert!(matches!(sample_channel(1, 2, &mut rng), Err(Error::Dimension(_))));
        assert!(matches!(sample_channel(4, 0, &mut rng), Err(Error::Dimension(_))));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_channel(128, 16, &mut trial_rng(42, 7, 3)).unwrap();
        let b = sample_channel(128, 16, &mut trial_rng(42, 7, 3)).unwrap();
        assert_eq!(a, b);
        let other = sample_channel(128, 16, &mut trial_rng(42, 7, 4)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn gram_of_identity_and_scaled_identity() {
        let h = ChannelMatrix::from_columns(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        let g = gram(&h);
        assert_eq!(g.matrix(), &ComplexMatrix::identity(2));
        assert_eq!(g.hollow(), &ComplexMatrix::zeros(2, 2));

        let h3 =
            ChannelMatrix::from_columns(&[vec![c(3.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(3.0, 0.0)]]).unwrap();
        assert_eq!(gram(&h3).matrix(), &ComplexMatrix::identity(2).scale(9.0));
    }

    #[test]
    fn gram_splits_into_diag_plus_hollow() {
        let h = sample_channel(32, 5, &mut trial_rng(3, 1, 0)).unwrap();
        let g = gram(&h);
        let rebuilt = ComplexMatrix::from_diag(g.diag()).add(g.hollow()).unwrap();
        assert_eq!(&rebuilt, g.matrix());
        for i in 0..5 {
            let norm: f64 = h.column(i).iter().map(|z| z.norm_sqr()).sum();
            assert!((g.diag()[i] - norm).abs() <= 1e-12 * norm);
        }
        assert_eq!(g.matrix().hermitian_defect(), 0.0);
    }

    #[test]
    fn correlation_edge_cases() {
        let e1 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let e2 = vec![c(0.0, 0.0), c(0.0, 2.0)];
        let h = ChannelMatrix::from_columns(&[e1.clone(), e2]).unwrap();
        assert_eq!(normalized_correlation(&h, 0, 1).unwrap().magnitude(), 0.0);
        assert!(matches!(normalized_correlation(&h, 1, 1), Err(Error::Index(_))));
        assert!(matches!(normalized_correlation(&h, 0, 2), Err(Error::Index(_))));

        let same =
            ChannelMatrix::from_columns(&[vec![c(1.0, 2.0), c(-0.5, 0.3)], vec![c(1.0, 2.0), c(-0.5, 0.3)]]).unwrap();
        assert!((normalized_correlation(&same, 0, 1).unwrap().magnitude() - 1.0).abs() < 1e-15);

        let zero = ChannelMatrix::from_columns(&[e1, vec![c(0.0, 0.0); 2]]).unwrap();
        assert!(matches!(normalized_correlation(&zero, 0, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn from_matrix_rejects_asymmetric_input() {
        let m = ComplexMatrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(GramMatrix::from_matrix(&m), Err(Error::NotHermitian(_))));
    }
}
