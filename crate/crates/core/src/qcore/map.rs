//! Linear maps on operators: a common trait plus a dense Liouville-matrix
//! representation for maps that have no Kraus form (e.g. positive maps that
//! are not completely positive).

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, CMat, C64};
use crate::matfun::eig_hermitian_tol;

use super::channel::Channel;

/// Linear map `L(H_in) -> L(H_out)` together with its Hilbert-Schmidt adjoint.
pub trait LinearMap: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: &CMat) -> CMat;
    fn apply_adjoint(&self, y: &CMat) -> CMat;
}

/// Matrix unit `|i><j|` in dimension `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = linalg::zeros(d, d);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// Choi matrix `sum_ij |i><j| (x) N(|i><j|)`, input factor first.
pub fn choi_matrix<M: LinearMap + ?Sized>(map: &M) -> CMat {
    let din = map.in_dim();
    let dout = map.out_dim();
    let mut j = linalg::zeros(din * dout, din * dout);
    for a in 0..din {
        for b in 0..din {
            let img = map.apply(&matrix_unit(din, a, b));
            for p in 0..dout {
                for q in 0..dout {
                    j[(a * dout + p, b * dout + q)] = img[(p, q)];
                }
            }
        }
    }
    j
}

/// Smallest Choi eigenvalue; non-negative iff the map is completely positive.
pub fn min_choi_eigenvalue<M: LinearMap + ?Sized>(map: &M) -> f64 {
    let j = choi_matrix(map);
    eig_hermitian_tol(&linalg::hermitize(&j), 1e-6)
        .map(|s| s.min_eigenvalue())
        .unwrap_or(f64::NEG_INFINITY)
}

/// `max|N^dagger(I) - I|`.
pub fn trace_preservation_defect<M: LinearMap + ?Sized>(map: &M) -> f64 {
    let d = map.in_dim();
    max_abs(&(map.apply_adjoint(&linalg::identity(map.out_dim())) - linalg::identity(d)))
}

/// `max|N(I) - I|` (only meaningful for equal dimensions).
pub fn unitality_defect<M: LinearMap + ?Sized>(map: &M) -> f64 {
    if map.in_dim() != map.out_dim() {
        return f64::INFINITY;
    }
    let d = map.in_dim();
    max_abs(&(map.apply(&linalg::identity(d)) - linalg::identity(d)))
}

/// Largest eigenvalue of `N(I)`.
pub fn image_of_identity_max<M: LinearMap + ?Sized>(map: &M) -> f64 {
    let img = linalg::hermitize(&map.apply(&linalg::identity(map.in_dim())));
    eig_hermitian_tol(&img, 1e-6)
        .map(|s| s.max_eigenvalue())
        .unwrap_or(f64::INFINITY)
}

/// Largest eigenvalue of `N^dagger(I)`; at most 1 iff trace non-increasing
/// on positive inputs.
pub fn adjoint_identity_max<M: LinearMap + ?Sized>(map: &M) -> f64 {
    let img = linalg::hermitize(&map.apply_adjoint(&linalg::identity(map.out_dim())));
    eig_hermitian_tol(&img, 1e-6)
        .map(|s| s.max_eigenvalue())
        .unwrap_or(f64::INFINITY)
}

/// Apply `map` to factor `k` of an operator on factors `dims`, acting as the
/// identity on every other factor.
pub fn apply_on_factor<M: LinearMap + ?Sized>(map: &M, x: &CMat, dims: &[usize], k: usize) -> CMat {
    assert_eq!(dims[k], map.in_dim(), "apply_on_factor: factor dimension");
    let left: usize = dims[..k].iter().product();
    let right: usize = dims[k + 1..].iter().product();
    let din = dims[k];
    let dout = map.out_dim();
    let n_in = left * din * right;
    assert_eq!(x.nrows(), n_in);
    let mut out = linalg::zeros(left * dout * right, left * dout * right);
    let idx_in = |l: usize, a: usize, r: usize| (l * din + a) * right + r;
    let idx_out = |l: usize, a: usize, r: usize| (l * dout + a) * right + r;
    for l1 in 0..left {
        for r1 in 0..right {
            for l2 in 0..left {
                for r2 in 0..right {
                    let mut block = linalg::zeros(din, din);
                    let mut nonzero = false;
                    for a in 0..din {
                        for b in 0..din {
                            let v = x[(idx_in(l1, a, r1), idx_in(l2, b, r2))];
                            if v != C64::new(0.0, 0.0) {
                                nonzero = true;
                            }
                            block[(a, b)] = v;
                        }
                    }
                    if !nonzero {
                        continue;
                    }
                    let img = map.apply(&block);
                    for a in 0..dout {
                        for b in 0..dout {
                            out[(idx_out(l1, a, r1), idx_out(l2, b, r2))] = img[(a, b)];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Dense Liouville representation: `vec(N(X)) = S vec(X)` with row-major
/// vectorization.
#[derive(Clone, Debug)]
pub struct Superoperator {
    in_dim: usize,
    out_dim: usize,
    matrix: CMat,
}

fn vec_rm(x: &CMat) -> CMat {
    let (r, c) = x.shape();
    CMat::from_fn(r * c, 1, |k, _| x[(k / c, k % c)])
}

fn unvec_rm(v: &CMat, d: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| v[(i * d + j, 0)])
}

impl Superoperator {
    pub fn from_matrix(in_dim: usize, out_dim: usize, matrix: CMat) -> Result<Self> {
        if matrix.shape() != (out_dim * out_dim, in_dim * in_dim) {
            return Err(Error::DimensionMismatch {
                context: "superoperator shape",
                expected: out_dim * out_dim,
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            in_dim,
            out_dim,
            matrix,
        })
    }

    pub fn from_map<M: LinearMap + ?Sized>(map: &M) -> Self {
        let din = map.in_dim();
        let dout = map.out_dim();
        let mut s = linalg::zeros(dout * dout, din * din);
        for a in 0..din {
            for b in 0..din {
                let img = vec_rm(&map.apply(&matrix_unit(din, a, b)));
                s.set_column(a * din + b, &img.column(0));
            }
        }
        Self {
            in_dim: din,
            out_dim: dout,
            matrix: s,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            in_dim: d,
            out_dim: d,
            matrix: linalg::identity(d * d),
        }
    }

    /// Transposition in the computational basis: positive, not completely
    /// positive for `d >= 2`.
    pub fn transpose(d: usize) -> Self {
        let mut s = linalg::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                s[(j * d + i, i * d + j)] = C64::new(1.0, 0.0);
            }
        }
        Self {
            in_dim: d,
            out_dim: d,
            matrix: s,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Superoperator) -> Result<Self> {
        if first.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "superoperator composition",
                expected: self.in_dim,
                found: first.out_dim,
            });
        }
        Ok(Self {
            in_dim: first.in_dim,
            out_dim: self.out_dim,
            matrix: &self.matrix * &first.matrix,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            matrix: self.matrix.scale(c),
        }
    }

    pub fn add(&self, other: &Superoperator) -> Result<Self> {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return Err(Error::DimensionMismatch {
                context: "superoperator sum",
                expected: self.in_dim,
                found: other.in_dim,
            });
        }
        Ok(Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn choi(&self) -> CMat {
        choi_matrix(self)
    }

    /// Kraus form via the Choi eigendecomposition; fails with a witness when
    /// the Choi matrix has a negative eigenvalue below `-tol`.
    pub fn to_channel(&self, tol: f64) -> Result<Channel> {
        Channel::from_choi(&self.choi(), self.in_dim, self.out_dim, tol)
    }
}

impl LinearMap for Superoperator {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn apply(&self, x: &CMat) -> CMat {
        unvec_rm(&(&self.matrix * vec_rm(x)), self.out_dim)
    }

    fn apply_adjoint(&self, y: &CMat) -> CMat {
        unvec_rm(&(self.matrix.adjoint() * vec_rm(y)), self.in_dim)
    }
}

impl<M: LinearMap + ?Sized> LinearMap for &M {
    fn in_dim(&self) -> usize {
        (**self).in_dim()
    }
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn apply(&self, x: &CMat) -> CMat {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, y: &CMat) -> CMat {
        (**self).apply_adjoint(y)
    }
}

/// `second` after `first`, without materializing either map.
pub struct Composed<A, B> {
    pub first: A,
    pub second: B,
}

impl<A: LinearMap, B: LinearMap> LinearMap for Composed<A, B> {
    fn in_dim(&self) -> usize {
        self.first.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.second.out_dim()
    }
    fn apply(&self, x: &CMat) -> CMat {
        self.second.apply(&self.first.apply(x))
    }
    fn apply_adjoint(&self, y: &CMat) -> CMat {
        self.first.apply_adjoint(&self.second.apply_adjoint(y))
    }
}

/// `map (x) id_d` with the identity on a trailing factor.
pub struct ExtendedRight<M> {
    pub map: M,
    pub ancilla_dim: usize,
}

impl<M: LinearMap> LinearMap for ExtendedRight<M> {
    fn in_dim(&self) -> usize {
        self.map.in_dim() * self.ancilla_dim
    }
    fn out_dim(&self) -> usize {
        self.map.out_dim() * self.ancilla_dim
    }
    fn apply(&self, x: &CMat) -> CMat {
        apply_on_factor(&self.map, x, &[self.map.in_dim(), self.ancilla_dim], 0)
    }
    fn apply_adjoint(&self, y: &CMat) -> CMat {
        let adj = AdjointOf(&self.map);
        apply_on_factor(&adj, y, &[self.map.out_dim(), self.ancilla_dim], 0)
    }
}

/// The adjoint of a map, viewed as a map.
pub struct AdjointOf<M>(pub M);

impl<M: LinearMap> LinearMap for AdjointOf<M> {
    fn in_dim(&self) -> usize {
        self.0.out_dim()
    }
    fn out_dim(&self) -> usize {
        self.0.in_dim()
    }
    fn apply(&self, x: &CMat) -> CMat {
        self.0.apply_adjoint(x)
    }
    fn apply_adjoint(&self, y: &CMat) -> CMat {
        self.0.apply(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, kron};

    fn sample(d: usize, seed: u64) -> CMat {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 33) as f64) / (1u64 << 31) as f64 - 0.5
        };
        CMat::from_fn(d, d, |_, _| c(next(), next()))
    }

    #[test]
    fn transpose_is_positive_but_not_cp() {
        let t = Superoperator::transpose(2);
        let x = sample(2, 3);
        assert!(max_abs(&(t.apply(&x) - x.transpose())) < 1e-15);
        assert!(min_choi_eigenvalue(&t) < -0.5);
        assert!(trace_preservation_defect(&t) < 1e-15);
    }

    #[test]
    fn superoperator_adjoint_satisfies_inner_product_identity() {
        let s = Superoperator::from_matrix(2, 3, {
            let mut x = 7u64;
            CMat::from_fn(9, 4, |_, _| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
                c(((x >> 40) as f64) / 1e7, ((x >> 20) & 0xfff) as f64 / 1e3)
            })
        })
        .unwrap();
        let x = sample(2, 1);
        let y = sample(3, 2);
        let lhs = linalg::hs_inner(&y, &s.apply(&x));
        let rhs = linalg::hs_inner(&s.apply_adjoint(&y), &x);
        assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0));
    }

    #[test]
    fn apply_on_factor_matches_kron_for_product_inputs() {
        let t = Superoperator::transpose(2);
        let a = sample(3, 4);
        let b = sample(2, 5);
        let cc = sample(2, 6);
        let x = linalg::kron_all(&[&a, &b, &cc]);
        let got = apply_on_factor(&t, &x, &[3, 2, 2], 1);
        let want = linalg::kron_all(&[&a, &b.transpose(), &cc]);
        assert!(max_abs(&(got - want)) < 1e-13);
        let ext = ExtendedRight {
            map: &t,
            ancilla_dim: 3,
        };
        let x2 = kron(&b, &a);
        assert!(max_abs(&(ext.apply(&x2) - kron(&b.transpose(), &a))) < 1e-13);
    }
}
