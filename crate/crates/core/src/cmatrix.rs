//! Small dense complex matrices and a cyclic Jacobi eigensolver for
//! Hermitian matrices.
//!
//! Everything here operates on Hilbert spaces of a handful of dimensions, so
//! the implementation favors simplicity and unconditional stability over
//! asymptotics. The Jacobi sweep is the standard one-sided rotation scheme
//! extended to complex Hermitian matrices via a phase factor on the rotation.

use num_complex::Complex64;

use crate::{Error, Result};

/// Dense square complex matrix, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.add_to(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn conjugate(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self.get(i, j).conj())
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        CMatrix::from_fn(self.n, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self.get(i, j) * s)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in i..self.n {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Quadratic form `<u| A |u>` for an arbitrary (not necessarily
    /// normalized) vector `u`.
    pub fn quadratic_form(&self, u: &[Complex64]) -> Complex64 {
        assert_eq!(u.len(), self.n);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.n {
            for j in 0..self.n {
                acc += u[i].conj() * self.get(i, j) * u[j];
            }
        }
        acc
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order together with the unitary whose
    /// columns are the matching eigenvectors.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, CMatrix)> {
        if !self.is_hermitian(1e-10) {
            return Err(Error::NotHermitian);
        }
        let n = self.n;
        let mut a = self.clone();
        // Symmetrize away representation round-off before sweeping.
        for i in 0..n {
            for j in 0..n {
                let h = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
                a.set(i, j, h);
            }
        }
        let mut v = CMatrix::identity(n);
        let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let target = 1e-15 * scale * n as f64;

        let mut converged = false;
        for _ in 0..200 {
            if a.off_diagonal_norm() <= target {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let mag = apq.norm();
                    if mag <= 1e-300 {
                        continue;
                    }
                    let phase = apq / mag;
                    let tau = (a.get(q, q).re - a.get(p, p).re) / (2.0 * mag);
                    let sgn = if tau >= 0.0 { 1.0 } else { -1.0 };
                    let t = sgn / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let se_pos = s * phase; // s * e^{i phi}
                    let se_neg = s * phase.conj();

                    // A <- U^dagger A U with the rotation acting on (p, q).
                    for i in 0..n {
                        let aip = a.get(i, p);
                        let aiq = a.get(i, q);
                        a.set(i, p, aip * c - aiq * se_neg);
                        a.set(i, q, aip * se_pos + aiq * c);
                    }
                    for j in 0..n {
                        let apj = a.get(p, j);
                        let aqj = a.get(q, j);
                        a.set(p, j, apj * c - aqj * se_pos);
                        a.set(q, j, apj * se_neg + aqj * c);
                    }
                    a.set(q, p, a.get(p, q).conj());

                    for i in 0..n {
                        let vip = v.get(i, p);
                        let viq = v.get(i, q);
                        v.set(i, p, vip * c - viq * se_neg);
                        v.set(i, q, vip * se_pos + viq * c);
                    }
                }
            }
        }
        if !converged && a.off_diagonal_norm() > target {
            return Err(Error::NoConvergence);
        }

        let mut order: Vec<usize> = (0..n).collect();
        let eig: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
        order.sort_by(|&i, &j| eig[i].partial_cmp(&eig[j]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| eig[i]).collect();
        let vectors = CMatrix::from_fn(n, |i, j| v.get(i, order[j]));
        Ok((values, vectors))
    }

    /// Hermitian positive-semidefinite square root via spectral decomposition.
    ///
    /// Eigenvalues in `(-clamp_tol, 0)` are treated as round-off and clamped
    /// to zero; anything more negative is an error.
    pub fn hermitian_sqrt(&self, clamp_tol: f64) -> Result<CMatrix> {
        let (values, vectors) = self.hermitian_eigen()?;
        let mut roots = Vec::with_capacity(values.len());
        for &lambda in &values {
            if lambda < -clamp_tol {
                return Err(Error::NegativeEigenvalue(lambda));
            }
            roots.push(lambda.max(0.0).sqrt());
        }
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for k in 0..n {
            let r = roots[k];
            if r == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    out.add_to(i, j, vectors.get(i, k) * vectors.get(j, k).conj() * r);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigen_of_diagonal() {
        let m = CMatrix::from_fn(3, |i, j| {
            if i == j {
                c((i as f64) + 1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let (vals, _) = m.hermitian_eigen().unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_of_pauli_y() {
        let m = CMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        });
        let (vals, vecs) = m.hermitian_eigen().unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        // Reconstruct and compare.
        let mut rec = CMatrix::zeros(2);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    rec.add_to(i, j, vecs.get(i, k) * vecs.get(j, k).conj() * vals[k]);
                }
            }
        }
        assert!(rec.max_abs_diff(&m) < 1e-13);
    }

    #[test]
    fn eigen_reconstructs_random_hermitian() {
        // Fixed pseudo-random Hermitian matrix.
        let mut seed = 0x12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let n = 5;
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, c(next(), 0.0));
            for j in (i + 1)..n {
                let z = c(next(), next());
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        let (vals, vecs) = m.hermitian_eigen().unwrap();
        let mut rec = CMatrix::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    rec.add_to(i, j, vecs.get(i, k) * vecs.get(j, k).conj() * vals[k]);
                }
            }
        }
        assert!(rec.max_abs_diff(&m) < 1e-12);
        // Eigenvectors unitary.
        let gram = vecs.dagger().mul(&vecs);
        assert!(gram.max_abs_diff(&CMatrix::identity(n)) < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let m = CMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => c(0.8, 0.0),
            (1, 1) => c(0.2, 0.0),
            (0, 1) => c(0.3, 0.1),
            (1, 0) => c(0.3, -0.1),
            _ => unreachable!(),
        });
        // Make it positive by shifting.
        let shifted = m.add(&CMatrix::identity(2));
        let root = shifted.hermitian_sqrt(1e-10).unwrap();
        assert!(root.mul(&root).max_abs_diff(&shifted) < 1e-12);
    }

    #[test]
    fn sqrt_rejects_negative() {
        let mut m = CMatrix::identity(2);
        m.set(1, 1, c(-0.5, 0.0));
        assert!(matches!(
            m.hermitian_sqrt(1e-10),
            Err(Error::NegativeEigenvalue(_))
        ));
    }
}
