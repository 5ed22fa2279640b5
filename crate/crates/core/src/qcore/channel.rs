//! Completely positive maps in Kraus form.

use crate::error::{Error, Result};
use crate::linalg::{self, isometry_defect, kron, max_abs, CMat, C64};
use crate::matfun::eig_hermitian_tol;

use super::map::LinearMap;
use super::state::DensityOperator;

/// Default tolerance for the cached classification flags.
pub const FLAG_TOL: f64 = 1e-9;

/// Classification of a CP map, computed once at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelFlags {
    pub trace_preserving: bool,
    pub trace_non_increasing: bool,
    pub unital: bool,
    pub subunital: bool,
}

/// CP map `X -> sum_k K_k X K_k^dagger` with `out_dim x in_dim` Kraus operators.
#[derive(Clone, Debug)]
pub struct Channel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<CMat>,
    flags: ChannelFlags,
}

fn max_eig(h: &CMat) -> f64 {
    eig_hermitian_tol(&linalg::hermitize(h), 1e-6)
        .map(|s| s.max_eigenvalue())
        .unwrap_or(f64::INFINITY)
}

impl Channel {
    /// Any CP map; no normalization is required.
    pub fn from_kraus(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidConfig("channel needs at least one Kraus operator".into()))?;
        let (out_dim, in_dim) = first.shape();
        for k in &kraus {
            if k.shape() != (out_dim, in_dim) {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator shape",
                    expected: out_dim * in_dim,
                    found: k.nrows() * k.ncols(),
                });
            }
        }
        let mut ch = Self {
            in_dim,
            out_dim,
            kraus,
            flags: ChannelFlags {
                trace_preserving: false,
                trace_non_increasing: false,
                unital: false,
                subunital: false,
            },
        };
        ch.flags = ch.classify(FLAG_TOL);
        Ok(ch)
    }

    /// Like [`Channel::from_kraus`] but rejects maps that are not trace preserving
    /// within `tol`.
    pub fn cptp(kraus: Vec<CMat>, tol: f64) -> Result<Self> {
        let ch = Self::from_kraus(kraus)?;
        let dev = ch.trace_preservation_defect();
        if dev > tol {
            return Err(Error::NotTracePreserving { deviation: dev });
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self::from_kraus(vec![linalg::identity(d)]).expect("identity")
    }

    pub fn unitary(u: CMat) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::NotSquare {
                rows: u.nrows(),
                cols: u.ncols(),
            });
        }
        Self::isometry(u)
    }

    pub fn isometry(v: CMat) -> Result<Self> {
        let deviation = isometry_defect(&v);
        if deviation > 1e-10 {
            return Err(Error::NotIsometry { deviation });
        }
        Self::from_kraus(vec![v])
    }

    /// Kraus form of the map with Choi matrix `choi` (input factor first).
    pub fn from_choi(choi: &CMat, in_dim: usize, out_dim: usize, tol: f64) -> Result<Self> {
        if choi.nrows() != in_dim * out_dim {
            return Err(Error::DimensionMismatch {
                context: "Choi matrix",
                expected: in_dim * out_dim,
                found: choi.nrows(),
            });
        }
        let spec = eig_hermitian_tol(&linalg::hermitize(choi), 1e-8)?;
        let scale = spec.max_abs_eigenvalue().max(f64::MIN_POSITIVE);
        let lmin = spec.min_eigenvalue();
        if lmin < -tol * scale.max(1.0) {
            return Err(Error::NotCompletelyPositive {
                min_choi_eigenvalue: lmin,
                witness_weight: -lmin / scale,
                witness: spec.eigenvectors.column(0).iter().copied().collect(),
            });
        }
        let cut = spec.cutoff();
        let mut kraus = Vec::new();
        for (k, &l) in spec.eigenvalues.iter().enumerate().rev() {
            if l <= cut {
                continue;
            }
            let s = l.sqrt();
            let v = spec.eigenvectors.column(k);
            kraus.push(CMat::from_fn(out_dim, in_dim, |a, i| v[i * out_dim + a] * s));
        }
        if kraus.is_empty() {
            kraus.push(linalg::zeros(out_dim, in_dim));
        }
        Self::from_kraus(kraus)
    }

    /// Full dephasing in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let kraus = (0..d)
            .map(|k| linalg::projector(&linalg::ket(d, k)))
            .collect();
        Self::from_kraus(kraus).expect("dephasing")
    }

    /// `X -> (1-p) X + p Tr{X} I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                what: "depolarizing probability",
                value: p,
            });
        }
        let mut kraus = vec![linalg::identity(d).scale((1.0 - p).sqrt())];
        let w = (p / d as f64).sqrt();
        for i in 0..d {
            for j in 0..d {
                let mut k = linalg::zeros(d, d);
                k[(i, j)] = C64::new(w, 0.0);
                kraus.push(k);
            }
        }
        Self::from_kraus(kraus)
    }

    /// `X -> Tr{X} tau`.
    pub fn replacement(tau: &CMat, in_dim: usize) -> Result<Self> {
        let spec = eig_hermitian_tol(&linalg::hermitize(tau), 1e-8)?;
        let dout = tau.nrows();
        let mut kraus = Vec::new();
        for (k, &l) in spec.eigenvalues.iter().enumerate() {
            if !spec.in_support(l) {
                continue;
            }
            if l < 0.0 {
                return Err(Error::Domain { eigenvalue: l });
            }
            let t = spec.eigenvectors.column(k).into_owned();
            for i in 0..in_dim {
                kraus.push((&t * linalg::ket(in_dim, i).adjoint()).scale(l.sqrt()));
            }
        }
        if kraus.is_empty() {
            kraus.push(linalg::zeros(dout, in_dim));
        }
        Self::from_kraus(kraus)
    }

    /// Partial trace over the factors at positions `discard` of an input with
    /// factor dimensions `dims`.
    pub fn partial_trace(dims: &[usize], discard: &[usize]) -> Result<Self> {
        for &k in discard {
            if k >= dims.len() {
                return Err(Error::DimensionMismatch {
                    context: "partial trace factor",
                    expected: dims.len(),
                    found: k,
                });
            }
        }
        let total: usize = dims.iter().product();
        let keep: Vec<usize> = (0..dims.len()).filter(|k| !discard.contains(k)).collect();
        let keep_total: usize = keep.iter().map(|&k| dims[k]).product();
        let disc_total: usize = discard.iter().map(|&k| dims[k]).product();
        let mut kraus = vec![linalg::zeros(keep_total, total); disc_total];
        for i in 0..total {
            let mut rem = i;
            let mut multi = vec![0; dims.len()];
            for k in (0..dims.len()).rev() {
                multi[k] = rem % dims[k];
                rem /= dims[k];
            }
            let ki = keep.iter().fold(0, |acc, &k| acc * dims[k] + multi[k]);
            let di = discard.iter().fold(0, |acc, &k| acc * dims[k] + multi[k]);
            kraus[di][(ki, i)] = C64::new(1.0, 0.0);
        }
        Self::from_kraus(kraus)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn num_kraus(&self) -> usize {
        self.kraus.len()
    }

    pub fn flags(&self) -> ChannelFlags {
        self.flags
    }

    /// `sum_k K_k^dagger K_k`, which equals `N^dagger(I)`.
    pub fn kraus_sum(&self) -> CMat {
        let mut s = linalg::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        s
    }

    pub fn trace_preservation_defect(&self) -> f64 {
        max_abs(&(self.kraus_sum() - linalg::identity(self.in_dim)))
    }

    pub fn classify(&self, tol: f64) -> ChannelFlags {
        let ks = self.kraus_sum();
        let trace_preserving = max_abs(&(&ks - linalg::identity(self.in_dim))) <= tol;
        let trace_non_increasing = trace_preserving || max_eig(&ks) <= 1.0 + tol;
        let img = self.apply(&linalg::identity(self.in_dim));
        let unital = self.in_dim == self.out_dim
            && max_abs(&(&img - linalg::identity(self.out_dim))) <= tol;
        let subunital = unital || max_eig(&img) <= 1.0 + tol;
        ChannelFlags {
            trace_preserving,
            trace_non_increasing,
            unital,
            subunital,
        }
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        self.classify(tol).trace_preserving && self.min_choi_eigenvalue() >= -tol
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.classify(tol).unital
    }

    pub fn is_subunital(&self, tol: f64) -> bool {
        self.classify(tol).subunital
    }

    /// `sum_k vec(K_k) vec(K_k)^dagger` with `vec(K)[i * d_out + a] = K[a, i]`.
    pub fn choi(&self) -> CMat {
        let n = self.in_dim * self.out_dim;
        let mut vecs = linalg::zeros(n, self.kraus.len());
        for (k, op) in self.kraus.iter().enumerate() {
            for i in 0..self.in_dim {
                for a in 0..self.out_dim {
                    vecs[(i * self.out_dim + a, k)] = op[(a, i)];
                }
            }
        }
        &vecs * vecs.adjoint()
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        eig_hermitian_tol(&linalg::hermitize(&self.choi()), 1e-6)
            .map(|s| s.min_eigenvalue())
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Kraus operators are the conjugate transposes of the originals.
    pub fn adjoint(&self) -> Self {
        Self::from_kraus(self.kraus.iter().map(|k| k.adjoint()).collect()).expect("adjoint")
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Channel) -> Result<Self> {
        if first.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "channel composition",
                expected: self.in_dim,
                found: first.out_dim,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for a in &self.kraus {
            for b in &first.kraus {
                kraus.push(a * b);
            }
        }
        Self::from_kraus(kraus)
    }

    pub fn tensor(&self, other: &Channel) -> Self {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(kron(a, b));
            }
        }
        Self::from_kraus(kraus).expect("tensor")
    }

    /// `self (x) id_d`, identity on a trailing factor.
    pub fn extend_right(&self, d: usize) -> Self {
        self.tensor(&Channel::identity(d))
    }

    /// `id_d (x) self`, identity on a leading factor.
    pub fn extend_left(&self, d: usize) -> Self {
        Channel::identity(d).tensor(self)
    }

    /// Multiply the map by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c < 0.0 || !c.is_finite() {
            return Err(Error::OutOfRange {
                what: "channel scale",
                value: c,
            });
        }
        let s = c.sqrt();
        Self::from_kraus(self.kraus.iter().map(|k| k.scale(s)).collect())
    }

    pub fn sum(&self, other: &Channel) -> Result<Self> {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return Err(Error::DimensionMismatch {
                context: "channel sum",
                expected: self.in_dim * self.out_dim,
                found: other.in_dim * other.out_dim,
            });
        }
        let mut kraus = self.kraus.clone();
        kraus.extend(other.kraus.iter().cloned());
        Self::from_kraus(kraus)
    }

    /// Same map with at most `in_dim * out_dim` Kraus operators.
    pub fn compress(&self) -> Result<Self> {
        if self.kraus.len() <= 1 {
            return Ok(self.clone());
        }
        Self::from_choi(&self.choi(), self.in_dim, self.out_dim, 1e-9)
    }

    /// Apply to a state on a labelled factor of `rho`; the output factor
    /// keeps the label unless `out_label` is given.
    pub fn apply_to(&self, rho: &DensityOperator, label: &str, out_label: Option<&str>) -> Result<DensityOperator> {
        let k = rho.index_of(label)?;
        let dims = rho.dims();
        if dims[k] != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "channel input",
                expected: self.in_dim,
                found: dims[k],
            });
        }
        let out = super::map::apply_on_factor(self, rho.matrix(), &dims, k);
        let mut systems = rho.systems().to_vec();
        systems[k] = super::state::System::new(out_label.unwrap_or(label), self.out_dim);
        DensityOperator::with_tol(systems, linalg::hermitize(&out), 1e-8)
    }
}

impl LinearMap for Channel {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn apply(&self, x: &CMat) -> CMat {
        assert_eq!(x.nrows(), self.in_dim, "channel input dimension");
        let mut out = linalg::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    fn apply_adjoint(&self, y: &CMat) -> CMat {
        assert_eq!(y.nrows(), self.out_dim, "channel output dimension");
        let mut out = linalg::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            out += k.adjoint() * y * k;
        }
        out
    }
}
