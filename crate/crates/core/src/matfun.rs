//! Hermitian eigendecomposition and matrix functions.
//!
//! Functions of a Hermitian operator act on its support only: eigenvalues
//! inside the numerical kernel map to zero. This gives generalized inverses,
//! logarithms restricted to the support and complex powers that are partial
//! isometries on the support for purely imaginary exponents.
//!
//! An eigenvalue counts as zero iff `|lambda| <= dim * lambda_max * 1e-12`.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_asymmetry, CMat, C64};

/// Default relative Hermiticity tolerance.
pub const TOL_HERM: f64 = 1e-12;

/// Relative factor of the rank cutoff.
pub const RANK_RTOL: f64 = 1e-12;

/// Eigen-decomposition `U diag(lambda) U^dagger` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Unitary with eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: CMat,
}

pub fn eig_hermitian(h: &CMat) -> Result<Spectrum> {
    eig_hermitian_tol(h, TOL_HERM)
}

pub fn eig_hermitian_tol(h: &CMat, tol_herm: f64) -> Result<Spectrum> {
    if h.nrows() != h.ncols() {
        return Err(Error::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let asymmetry = hermitian_asymmetry(h);
    if asymmetry > tol_herm {
        return Err(Error::NotHermitian { asymmetry });
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Eigenvalues with magnitude at or below this are treated as zero.
    pub fn cutoff(&self) -> f64 {
        self.dim() as f64 * self.max_abs_eigenvalue() * RANK_RTOL
    }

    pub fn in_support(&self, lambda: f64) -> bool {
        lambda.abs() > self.cutoff()
    }

    pub fn rank(&self) -> usize {
        let cut = self.cutoff();
        self.eigenvalues.iter().filter(|l| l.abs() > cut).count()
    }

    /// `sum_i w_i |i><i|` for complex weights (one per eigenvalue).
    fn assemble(&self, weights: &[C64]) -> CMat {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut out = CMat::zeros(n, n);
        for (k, w) in weights.iter().enumerate() {
            if *w == C64::new(0.0, 0.0) {
                continue;
            }
            let col = u.column(k);
            for i in 0..n {
                let a = col[i] * w;
                for j in 0..n {
                    out[(i, j)] += a * col[j].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMat {
        let w: Vec<C64> = self.eigenvalues.iter().map(|&l| C64::new(l, 0.0)).collect();
        self.assemble(&w)
    }

    /// `f` applied on the support, zero on the kernel. Non-finite values of
    /// `f` at a support eigenvalue are domain errors.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<CMat> {
        let cut = self.cutoff();
        let mut w = Vec::with_capacity(self.dim());
        for &l in &self.eigenvalues {
            if l.abs() <= cut {
                w.push(C64::new(0.0, 0.0));
                continue;
            }
            let y = f(l);
            if !y.is_finite() {
                return Err(Error::Domain { eigenvalue: l });
            }
            w.push(C64::new(y, 0.0));
        }
        Ok(self.assemble(&w))
    }

    /// `exp(z ln lambda)` on the support, zero on the kernel. Requires the
    /// spectrum to be positive semi-definite up to the cutoff.
    pub fn power(&self, z: C64) -> Result<CMat> {
        let cut = self.cutoff();
        let mut w = Vec::with_capacity(self.dim());
        for &l in &self.eigenvalues {
            if l.abs() <= cut {
                w.push(C64::new(0.0, 0.0));
            } else if l < 0.0 {
                return Err(Error::Domain { eigenvalue: l });
            } else {
                w.push((z * l.ln()).exp());
            }
        }
        Ok(self.assemble(&w))
    }

    pub fn support_projector(&self) -> CMat {
        let cut = self.cutoff();
        let w: Vec<C64> = self
            .eigenvalues
            .iter()
            .map(|l| C64::new(if l.abs() > cut { 1.0 } else { 0.0 }, 0.0))
            .collect();
        self.assemble(&w)
    }

    pub fn kernel_projector(&self) -> CMat {
        CMat::identity(self.dim(), self.dim()) - self.support_projector()
    }
}

pub fn mat_func<F: Fn(f64) -> f64>(h: &CMat, f: F) -> Result<CMat> {
    eig_hermitian(h)?.map(f)
}

pub fn complex_power(h: &CMat, z: C64) -> Result<CMat> {
    eig_hermitian(h)?.power(z)
}

/// Real power of a positive semi-definite matrix; negative exponents give
/// generalized inverses.
pub fn psd_power(h: &CMat, p: f64) -> Result<CMat> {
    complex_power(h, C64::new(p, 0.0))
}

pub fn sqrt_psd(h: &CMat) -> Result<CMat> {
    psd_power(h, 0.5)
}

/// Binary logarithm on the support.
pub fn log2m(h: &CMat) -> Result<CMat> {
    mat_func(h, f64::log2)
}

pub fn support_projector(h: &CMat) -> Result<CMat> {
    Ok(eig_hermitian(h)?.support_projector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_diag, identity, max_abs};
    use approx::assert_abs_diff_eq;

    fn random_hermitian(d: usize, seed: u64) -> CMat {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 33) as f64) / (1u64 << 31) as f64 - 0.5
        };
        let g = CMat::from_fn(d, d, |_, _| c(next(), next()));
        (&g + g.adjoint()).scale(0.5)
    }

    #[test]
    fn identity_spectrum() {
        let s = eig_hermitian(&identity(3)).unwrap();
        for l in &s.eigenvalues {
            assert_abs_diff_eq!(*l, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn diagonal_sorted_ascending() {
        let s = eig_hermitian(&from_real_diag(&[2.0, 0.0])).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn reconstruction_and_unitarity() {
        let h = random_hermitian(4, 11);
        let s = eig_hermitian(&h).unwrap();
        let rel = crate::linalg::frobenius(&(s.reconstruct() - &h)) / crate::linalg::frobenius(&h);
        assert!(rel < 1e-10, "reconstruction error {rel}");
        let u = &s.eigenvectors;
        assert!(max_abs(&(u.adjoint() * u - identity(4))) < 1e-10);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = identity(2);
        m[(0, 1)] = c(0.5, 0.0);
        match eig_hermitian(&m) {
            Err(Error::NotHermitian { asymmetry }) => assert!(asymmetry > 0.4),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn binary_log_on_support() {
        let l = log2m(&from_real_diag(&[2.0, 0.0])).unwrap();
        assert!(max_abs(&(l - from_real_diag(&[1.0, 0.0]))) < 1e-14);
    }

    #[test]
    fn identity_function_is_identity() {
        let h = random_hermitian(3, 5);
        let out = mat_func(&h, |x| x).unwrap();
        assert!(max_abs(&(out - &h)) < 1e-12);
    }

    #[test]
    fn generalized_inverse_of_diagonal() {
        let inv = mat_func(&from_real_diag(&[4.0, 0.0, 0.5]), |x| 1.0 / x).unwrap();
        assert!(max_abs(&(inv - from_real_diag(&[0.25, 0.0, 2.0]))) < 1e-13);
    }

    #[test]
    fn log_of_negative_support_eigenvalue_is_domain_error() {
        match log2m(&from_real_diag(&[1.0, -0.5])) {
            Err(Error::Domain { eigenvalue }) => assert_abs_diff_eq!(eigenvalue, -0.5),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn complex_power_cases() {
        let p = complex_power(&identity(3), c(0.3, -1.7)).unwrap();
        assert!(max_abs(&(p - identity(3))) < 1e-14);

        let s = psd_power(&from_real_diag(&[4.0, 1.0]), 0.5).unwrap();
        assert!(max_abs(&(s - from_real_diag(&[2.0, 1.0]))) < 1e-14);

        let h = random_hermitian(4, 3);
        let pos = &h * &h + identity(4).scale(0.1);
        let u = complex_power(&pos, c(0.0, 0.8)).unwrap();
        assert!(max_abs(&(&u * u.adjoint() - identity(4))) < 1e-10);

        assert!(matches!(
            complex_power(&from_real_diag(&[1.0, -0.2]), c(0.5, 0.0)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn imaginary_powers_give_support_projector() {
        let v = random_hermitian(4, 21);
        // rank-2 PSD
        let s = eig_hermitian(&v).unwrap();
        let mut m = CMat::zeros(4, 4);
        for k in 2..4 {
            let col = s.eigenvectors.column(k).into_owned();
            m += &col * col.adjoint() * c(k as f64, 0.0);
        }
        let t = 1.3;
        let a = complex_power(&m, c(0.0, t)).unwrap();
        let b = complex_power(&m, c(0.0, -t)).unwrap();
        let proj = support_projector(&m).unwrap();
        assert!(max_abs(&(a * b - &proj)) < 1e-10);
        assert!(max_abs(&(&proj * &proj - &proj)) < 1e-10);
        assert!(max_abs(&(&proj - proj.adjoint())) < 1e-10);
    }

    #[test]
    fn sqrt_then_square_projects() {
        let h = random_hermitian(3, 8);
        let psd = &h * &h;
        let root = sqrt_psd(&psd).unwrap();
        assert!(max_abs(&(&root * &root - &psd)) < 1e-10);
    }
}
