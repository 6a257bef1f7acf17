//! Dense complex matrices and the boundary between floating point and `ℤ/m`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default tolerances.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Operator identities (`τ_u`).
    pub unitary: f64,
    /// Scalar extraction and snapping (`τ_s`).
    pub snap: f64,
    /// Composite pipelines.
    pub pipeline: f64,
    /// Exact-by-construction round trips.
    pub round_trip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unitary: 1e-9,
            snap: 1e-6,
            pipeline: 1e-8,
            round_trip: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Tolerances {
        Tolerances {
            unitary: self.unitary * s,
            snap: self.snap * s,
            pipeline: self.pipeline * s,
            round_trip: self.round_trip * s,
        }
    }
}

/// `exp(2πi k/m)`.
pub fn root(k: u64, m: u64) -> Complex64 {
    let t = std::f64::consts::TAU * (k % m) as f64 / m as f64;
    Complex64::new(t.cos(), t.sin())
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn scalar(n: usize, s: Complex64) -> CMat {
    CMat::from_diagonal_element(n, n, s)
}

pub fn diag(v: &[Complex64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

/// Haar-random unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let z = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Largest absolute entry of `a − b`.
pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `‖U*U − I‖_max`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    max_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// Best scalar `s` with `a ≈ s·I`, and the residual `‖a − s·I‖_max`.
pub fn scalar_part(a: &CMat) -> (Complex64, f64) {
    let n = a.nrows();
    let s = a.trace() / n as f64;
    (s, max_diff(a, &scalar(n, s)))
}

/// Best `s` with `a ≈ s·b`, and the residual.
pub fn projective_ratio(a: &CMat, b: &CMat) -> (Complex64, f64) {
    let num: Complex64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    let s = if den > 0.0 { num / den } else { ZERO };
    (s, max_diff(a, &(b * s)))
}

/// Snaps a unit scalar to `k` with `s = exp(2πi k/m)`.
pub fn snap(s: Complex64, m: u64, tol: f64, location: &dyn Fn() -> String) -> Result<u64> {
    if (s.norm() - 1.0).abs() > tol {
        return Err(Error::NotRoot {
            location: location(),
            modulus: m,
            residual: (s.norm() - 1.0).abs(),
        });
    }
    let t = s.arg() / std::f64::consts::TAU * m as f64;
    let k = t.round();
    let off = (t - k).abs() / m as f64 * std::f64::consts::TAU;
    if off > tol {
        return Err(Error::NotRoot {
            location: location(),
            modulus: m,
            residual: off,
        });
    }
    Ok((k as i64).rem_euclid(m as i64) as u64)
}

/// Extracts the scalar of an (expected) multiple of the identity and snaps it.
pub fn snap_scalar(a: &CMat, m: u64, tol: f64, location: &dyn Fn() -> String) -> Result<(u64, f64)> {
    let (s, res) = scalar_part(a);
    if res > tol {
        return Err(Error::NotScalar {
            location: location(),
            residual: res,
            tolerance: tol,
        });
    }
    Ok((snap(s, m, tol, location)?, res))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Block-diagonal matrix from equally sized square blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let d = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let n = blocks.len() * d;
    let mut out = CMat::zeros(n, n);
    for (x, b) in blocks.iter().enumerate() {
        out.view_mut((x * d, x * d), (d, d)).copy_from(b);
    }
    out
}

/// Permutation matrix `P` with `P e_j = e_{perm[j]}`, tensored with `I_d`.
pub fn permutation(perm: &[usize], d: usize) -> CMat {
    let n = perm.len() * d;
    let mut p = CMat::zeros(n, n);
    for (j, &i) in perm.iter().enumerate() {
        for k in 0..d {
            p[(i * d + k, j * d + k)] = ONE;
        }
    }
    p
}

/// Operator norm (largest singular value).
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// Numerical rank with relative tolerance.
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv.max();
    sv.iter().filter(|&&s| s > rel_tol * top.max(1e-300)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..6 {
            assert!(unitarity_defect(&random_unitary(n, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn snapping() {
        for m in [2, 3, 6, 12] {
            for k in 0..m {
                let s = root(k, m) * Complex64::new(1.0, 1e-9);
                assert_eq!(snap(s, m, 1e-6, &|| "t".into()).unwrap(), k);
            }
        }
        assert!(snap(root(1, 8), 4, 1e-6, &|| "t".into()).is_err());
    }

    #[test]
    fn scalar_detection() {
        let a = scalar(3, root(1, 3));
        let (k, r) = snap_scalar(&a, 6, 1e-6, &|| "t".into()).unwrap();
        assert_eq!(k, 2);
        assert!(r < 1e-15);
        let mut b = a.clone();
        b[(0, 1)] = ONE;
        assert!(snap_scalar(&b, 6, 1e-6, &|| "t".into()).is_err());
    }

    #[test]
    fn norm_of_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(4, &mut rng);
        assert!((op_norm(&u) - 1.0).abs() < 1e-12);
    }
}
