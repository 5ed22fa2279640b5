//! Closed-form rotated Petz map of the partial trace `Tr_A` with reference
//! state `rho_AC`.

use crate::error::{Error, Result};
use crate::linalg::{self, kron, partial_trace, CMat, C64};
use crate::matfun::complex_power;
use crate::qcore::{Channel, DensityOperator, LinearMap};

use super::{integrated_recovery, QuadratureSpec};

/// `omega_C -> rho_AC^{(1-it)/2} [I_A (x) rho_C^{-(1-it)/2} omega_C rho_C^{-(1+it)/2}] rho_AC^{(1+it)/2}`.
#[derive(Clone, Debug)]
pub struct CmiRecovery {
    dim_a: usize,
    dim_c: usize,
    outer_left: CMat,
    outer_right: CMat,
    inner_left: CMat,
    inner_right: CMat,
}

impl CmiRecovery {
    /// `rho_ac` must carry exactly the two systems `a` and `c`; the output is
    /// ordered `(a, c)`.
    pub fn new(rho_ac: &DensityOperator, a: &str, c: &str, t: f64) -> Result<Self> {
        if rho_ac.systems().len() != 2 {
            return Err(Error::InvalidState(format!(
                "expected a bipartite state, found {} systems",
                rho_ac.systems().len()
            )));
        }
        let ordered = rho_ac.reorder(&[a, c])?;
        let dims = ordered.dims();
        Self::from_matrix(ordered.matrix(), dims[0], dims[1], t)
    }

    pub fn from_matrix(rho_ac: &CMat, dim_a: usize, dim_c: usize, t: f64) -> Result<Self> {
        if rho_ac.nrows() != dim_a * dim_c {
            return Err(Error::DimensionMismatch {
                context: "cmi recovery state",
                expected: dim_a * dim_c,
                found: rho_ac.nrows(),
            });
        }
        let rho_c = partial_trace(rho_ac, &[dim_a, dim_c], &[0]);
        Ok(Self {
            dim_a,
            dim_c,
            outer_left: complex_power(rho_ac, C64::new(0.5, -t / 2.0))?,
            outer_right: complex_power(rho_ac, C64::new(0.5, t / 2.0))?,
            inner_left: complex_power(&rho_c, C64::new(-0.5, t / 2.0))?,
            inner_right: complex_power(&rho_c, C64::new(-0.5, -t / 2.0))?,
        })
    }
}

impl LinearMap for CmiRecovery {
    fn in_dim(&self) -> usize {
        self.dim_c
    }

    fn out_dim(&self) -> usize {
        self.dim_a * self.dim_c
    }

    fn apply(&self, omega: &CMat) -> CMat {
        let inner = &self.inner_left * omega * &self.inner_right;
        &self.outer_left * kron(&linalg::identity(self.dim_a), &inner) * &self.outer_right
    }

    fn apply_adjoint(&self, y: &CMat) -> CMat {
        let mid = self.outer_left.adjoint() * y * self.outer_right.adjoint();
        let reduced = partial_trace(&mid, &[self.dim_a, self.dim_c], &[0]);
        self.inner_left.adjoint() * reduced * self.inner_right.adjoint()
    }
}

/// `R_{C -> AC}`: integrated recovery with `sigma = rho_AC` and `N = Tr_A`.
pub fn integrated_cmi_recovery(rho_ac: &CMat, dim_a: usize, dim_c: usize, quad: &QuadratureSpec) -> Result<Channel> {
    let tr_a = Channel::partial_trace(&[dim_a, dim_c], &[0])?;
    integrated_recovery(rho_ac, &tr_a, None, quad)
}
