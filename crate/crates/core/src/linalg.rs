//! Dense complex matrix helpers shared by every module.
//!
//! Tensor factors are always ordered as declared; index `i` of a composite
//! space with factor dimensions `[d0, d1, ..]` is the row-major multi-index
//! `i = ((i0 * d1) + i1) * d2 + ...`.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn from_real_diag(diag: &[f64]) -> CMat {
    let n = diag.len();
    let mut m = zeros(n, n);
    for (i, &x) in diag.iter().enumerate() {
        m[(i, i)] = r(x);
    }
    m
}

/// Matrix from row-major complex entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> CMat {
    CMat::from_row_slice(rows, cols, entries)
}

/// Computational-basis vector `|i>` in dimension `d`.
pub fn ket(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = r(1.0);
    v
}

pub fn outer(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}

pub fn projector(v: &CVec) -> CMat {
    outer(v, v)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all(factors: &[&CMat]) -> CMat {
    let mut acc = CMat::identity(1, 1);
    for f in factors {
        acc = acc.kronecker(*f);
    }
    acc
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

/// Hilbert-Schmidt inner product `Tr{X^dagger Y}`.
pub fn hs_inner(x: &CMat, y: &CMat) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// `(1/2)||a - b||_1`.
pub fn trace_distance(a: &CMat, b: &CMat) -> f64 {
    0.5 * trace_norm(&(a - b))
}

/// Relative asymmetry `max|H - H^dagger| / max|H|` (0 for the zero matrix).
pub fn hermitian_asymmetry(m: &CMat) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(m - m.adjoint())) / scale
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn split_index(mut i: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = i % dims[k];
        i /= dims[k];
    }
    out
}

/// Partial trace over the factors listed in `discard` (positions into `dims`).
pub fn partial_trace(m: &CMat, dims: &[usize], discard: &[usize]) -> CMat {
    let total: usize = dims.iter().product();
    assert_eq!(m.nrows(), total, "partial_trace: dims do not match matrix");
    let keep: Vec<usize> = (0..dims.len()).filter(|k| !discard.contains(k)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let disc_dims: Vec<usize> = discard.iter().map(|&k| dims[k]).collect();
    let keep_strides = strides(&keep_dims);
    let disc_strides = strides(&disc_dims);
    let keep_total: usize = keep_dims.iter().product();

    // (kept index, discarded index) for every full index
    let split: Vec<(usize, usize)> = (0..total)
        .map(|i| {
            let mi = split_index(i, dims);
            let kk = keep
                .iter()
                .zip(&keep_strides)
                .map(|(&k, &s)| mi[k] * s)
                .sum();
            let dd = discard
                .iter()
                .zip(&disc_strides)
                .map(|(&k, &s)| mi[k] * s)
                .sum();
            (kk, dd)
        })
        .collect();

    let mut out = zeros(keep_total, keep_total);
    for i in 0..total {
        let (ki, di) = split[i];
        for j in 0..total {
            let (kj, dj) = split[j];
            if di == dj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    out
}

/// Reorder tensor factors: factor `perm[k]` of the input becomes factor `k`
/// of the output.
pub fn permute_systems(m: &CMat, dims: &[usize], perm: &[usize]) -> CMat {
    let total: usize = dims.iter().product();
    assert_eq!(m.nrows(), total);
    assert_eq!(perm.len(), dims.len());
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_strides = strides(&new_dims);
    let map: Vec<usize> = (0..total)
        .map(|i| {
            let mi = split_index(i, dims);
            perm.iter()
                .zip(&new_strides)
                .map(|(&p, &s)| mi[p] * s)
                .sum()
        })
        .collect();
    let mut out = zeros(total, total);
    for i in 0..total {
        for j in 0..total {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}

/// Reorder the factors of a state vector; same convention as [`permute_systems`].
pub fn permute_vector(v: &CVec, dims: &[usize], perm: &[usize]) -> CVec {
    let total: usize = dims.iter().product();
    assert_eq!(v.len(), total);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_strides = strides(&new_dims);
    let mut out = CVec::zeros(total);
    for i in 0..total {
        let mi = split_index(i, dims);
        let j: usize = perm
            .iter()
            .zip(&new_strides)
            .map(|(&p, &s)| mi[p] * s)
            .sum();
        out[j] = v[i];
    }
    out
}

/// `(I (x) op (x) I) v` with `op` acting on factor `k` of `dims`.
pub fn apply_to_vector_factor(op: &CMat, v: &CVec, dims: &[usize], k: usize) -> CVec {
    assert_eq!(dims[k], op.ncols(), "apply_to_vector_factor: factor dimension");
    let left = identity(dims[..k].iter().product());
    let right = identity(dims[k + 1..].iter().product());
    kron_all(&[&left, op, &right]) * v
}

/// Row-major reshape of a vector into a `rows x cols` matrix.
pub fn reshape_vector(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_row_slice(rows, cols, v.as_slice())
}

/// Deviation `||V^dagger V - I||_max`.
pub fn isometry_defect(v: &CMat) -> f64 {
    max_abs(&(v.adjoint() * v - identity(v.ncols())))
}

/// Block-diagonal assembly `sum_x blocks[x] (x) |x><x|` with the classical
/// register as the *last* factor.
pub fn attach_classical(blocks: &[CMat]) -> CMat {
    let n = blocks.len();
    let d = blocks[0].nrows();
    let mut out = zeros(d * n, d * n);
    for (x, b) in blocks.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                out[(i * n + x, j * n + x)] = b[(i, j)];
            }
        }
    }
    out
}
