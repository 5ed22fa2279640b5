use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, hermitize, CMat, CVec};
use crate::matfun::eig_hermitian_tol;

/// Tolerance for the density-operator invariants (trace, positivity).
pub const STATE_TOL: f64 = 1e-10;

/// One labeled tensor factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct System {
    pub label: String,
    pub dim: usize,
}

impl System {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
        }
    }
}

pub(crate) fn check_unique(systems: &[System]) -> Result<()> {
    for (i, s) in systems.iter().enumerate() {
        if systems[..i].iter().any(|t| t.label == s.label) {
            return Err(Error::DuplicateLabel(s.label.clone()));
        }
    }
    Ok(())
}

pub(crate) fn position(systems: &[System], label: &str) -> Result<usize> {
    systems
        .iter()
        .position(|s| s.label == label)
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

/// Unit-trace positive semi-definite operator on labeled tensor factors.
///
/// Factor order is declaration order and no operation silently reorders
/// factors; use [`DensityOperator::reorder`] explicitly.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    systems: Vec<System>,
    matrix: CMat,
}

impl DensityOperator {
    pub fn new(systems: Vec<System>, matrix: CMat) -> Result<Self> {
        Self::with_tol(systems, matrix, STATE_TOL)
    }

    pub fn with_tol(systems: Vec<System>, matrix: CMat, tol: f64) -> Result<Self> {
        check_unique(&systems)?;
        let d: usize = systems.iter().map(|s| s.dim).product();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "density operator",
                expected: d,
                found: matrix.nrows(),
            });
        }
        let spec = eig_hermitian_tol(&matrix, tol.max(1e-12))
            .map_err(|e| Error::InvalidState(e.to_string()))?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        if spec.min_eigenvalue() < -tol {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {:.3e}",
                spec.min_eigenvalue()
            )));
        }
        Ok(Self {
            systems,
            matrix: hermitize(&matrix),
        })
    }

    /// Single-factor state.
    pub fn single(label: impl Into<String>, matrix: CMat) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(vec![System::new(label, d)], matrix)
    }

    pub fn pure(systems: Vec<System>, vector: &CVec) -> Result<Self> {
        let n = vector.norm();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {n}")));
        }
        Self::new(systems, linalg::projector(vector))
    }

    pub fn maximally_mixed(label: impl Into<String>, dim: usize) -> Self {
        Self {
            systems: vec![System::new(label, dim)],
            matrix: linalg::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn basis(label: impl Into<String>, dim: usize, index: usize) -> Self {
        Self {
            systems: vec![System::new(label, dim)],
            matrix: linalg::projector(&linalg::ket(dim, index)),
        }
    }

    pub fn systems(&self) -> &[System] {
        &self.systems
    }

    pub fn dims(&self) -> Vec<usize> {
        self.systems.iter().map(|s| s.dim).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.systems.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        position(&self.systems, label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.systems[self.index_of(label)?].dim)
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<Self> {
        let mut systems = self.systems.clone();
        systems.extend(other.systems.iter().cloned());
        check_unique(&systems)?;
        Ok(Self {
            systems,
            matrix: linalg::kron(&self.matrix, &other.matrix),
        })
    }

    pub fn partial_trace(&self, discard: &[&str]) -> Result<Self> {
        let mut idx = Vec::with_capacity(discard.len());
        for l in discard {
            let i = self.index_of(l)?;
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        let matrix = linalg::partial_trace(&self.matrix, &self.dims(), &idx);
        let systems = self
            .systems
            .iter()
            .enumerate()
            .filter(|(i, _)| !idx.contains(i))
            .map(|(_, s)| s.clone())
            .collect();
        Ok(Self { systems, matrix })
    }

    /// Marginal on `keep`, factors remaining in declaration order.
    pub fn reduced(&self, keep: &[&str]) -> Result<Self> {
        for l in keep {
            self.index_of(l)?;
        }
        let discard: Vec<&str> = self
            .labels()
            .into_iter()
            .filter(|l| !keep.contains(l))
            .collect();
        self.partial_trace(&discard)
    }

    /// Permute factors into the given label order (must name every factor).
    pub fn reorder(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.systems.len() {
            return Err(Error::DimensionMismatch {
                context: "reorder label count",
                expected: self.systems.len(),
                found: order.len(),
            });
        }
        let perm = order
            .iter()
            .map(|l| self.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        let systems: Vec<System> = perm.iter().map(|&p| self.systems[p].clone()).collect();
        check_unique(&systems)?;
        Ok(Self {
            matrix: linalg::permute_systems(&self.matrix, &self.dims(), &perm),
            systems,
        })
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<Self> {
        let i = self.index_of(from)?;
        let mut systems = self.systems.clone();
        systems[i].label = to.to_string();
        check_unique(&systems)?;
        Ok(Self {
            systems,
            matrix: self.matrix.clone(),
        })
    }

    /// Merge all factors into a single labeled factor.
    pub fn flatten(&self, label: impl Into<String>) -> Self {
        Self {
            systems: vec![System::new(label, self.dim())],
            matrix: self.matrix.clone(),
        }
    }

    pub fn purify(&self, reference_label: &str) -> Result<Purification> {
        Purification::of(self, reference_label)
    }
}

/// Pure state on `reference (x) systems` whose reduction to `systems` is a
/// given density operator.
#[derive(Clone, Debug)]
pub struct Purification {
    pub reference: System,
    pub systems: Vec<System>,
    /// Amplitudes with the reference as the leading factor.
    pub vector: CVec,
}

impl Purification {
    /// Minimal purification built from the eigendecomposition: the reference
    /// dimension equals the numerical rank (at least 1).
    pub fn of(rho: &DensityOperator, reference_label: &str) -> Result<Self> {
        if rho.labels().contains(&reference_label) {
            return Err(Error::DuplicateLabel(reference_label.to_string()));
        }
        let spec = crate::matfun::eig_hermitian(rho.matrix())?;
        let d = rho.dim();
        let cut = spec.cutoff();
        let support: Vec<usize> = (0..d)
            .filter(|&i| spec.eigenvalues[i] > cut)
            .collect();
        let support = if support.is_empty() { vec![d - 1] } else { support };
        let rank = support.len();
        let mut vector = CVec::zeros(rank * d);
        for (k, &i) in support.iter().enumerate() {
            let amp = spec.eigenvalues[i].max(0.0).sqrt();
            let col = spec.eigenvectors.column(i);
            for a in 0..d {
                // |k>_R (x) sqrt(lambda_i) |e_i>
                vector[k * d + a] = col[a] * amp;
            }
        }
        let norm = vector.norm();
        vector.unscale_mut(norm);
        Ok(Self {
            reference: System::new(reference_label, rank),
            systems: rho.systems().to_vec(),
            vector,
        })
    }

    pub fn reference_dim(&self) -> usize {
        self.reference.dim
    }

    pub fn system_dim(&self) -> usize {
        self.systems.iter().map(|s| s.dim).product()
    }

    /// Amplitude matrix with rows indexed by the reference.
    pub fn amplitude_matrix(&self) -> CMat {
        CMat::from_row_slice(
            self.reference_dim(),
            self.system_dim(),
            self.vector.as_slice(),
        )
    }

    pub fn state(&self) -> DensityOperator {
        let mut systems = vec![self.reference.clone()];
        systems.extend(self.systems.iter().cloned());
        DensityOperator {
            systems,
            matrix: linalg::projector(&self.vector),
        }
    }

    /// Reduction onto the original systems.
    pub fn reduced(&self) -> DensityOperator {
        let a = self.amplitude_matrix();
        DensityOperator {
            systems: self.systems.clone(),
            matrix: a.transpose() * a.conjugate(),
        }
    }

    /// Reduction onto the reference.
    pub fn reference_state(&self) -> CMat {
        let a = self.amplitude_matrix();
        &a * a.adjoint()
    }
}

/// Classical-quantum state `sum_x w_x |x><x| (x) rho_x`, classical factor last.
#[derive(Clone, Debug)]
pub struct ClassicalQuantumState {
    pub classical_label: String,
    pub blocks: Vec<(f64, DensityOperator)>,
}

impl ClassicalQuantumState {
    pub fn new(classical_label: impl Into<String>, blocks: Vec<(f64, DensityOperator)>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidState("empty classical-quantum state".into()));
        }
        let systems = blocks[0].1.systems().to_vec();
        if blocks.iter().any(|(_, b)| b.systems() != systems.as_slice()) {
            return Err(Error::InvalidState("blocks live on different systems".into()));
        }
        let cq = Self {
            classical_label: classical_label.into(),
            blocks,
        };
        cq.assemble()?;
        Ok(cq)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|(w, _)| *w).collect()
    }

    pub fn assemble(&self) -> Result<DensityOperator> {
        let mats: Vec<CMat> = self
            .blocks
            .iter()
            .map(|(w, b)| b.matrix().scale(*w))
            .collect();
        let mut systems = self.blocks[0].1.systems().to_vec();
        systems.push(System::new(self.classical_label.clone(), self.blocks.len()));
        DensityOperator::new(systems, linalg::attach_classical(&mats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ket, max_abs, trace_distance};

    fn bell() -> DensityOperator {
        let mut v = CVec::zeros(4);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[3] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        DensityOperator::pure(vec![System::new("A", 2), System::new("B", 2)], &v).unwrap()
    }

    #[test]
    fn tensor_of_maximally_mixed() {
        let a = DensityOperator::maximally_mixed("A", 2);
        let b = DensityOperator::maximally_mixed("B", 2);
        let ab = a.tensor(&b).unwrap();
        assert!(max_abs(&(ab.matrix() - linalg::identity(4).scale(0.25))) < 1e-15);
        assert_eq!(ab.labels(), vec!["A", "B"]);
    }

    #[test]
    fn tensor_rejects_duplicate_labels() {
        let a = DensityOperator::maximally_mixed("A", 2);
        assert!(matches!(a.tensor(&a), Err(Error::DuplicateLabel(_))));
    }

    #[test]
    fn tensor_then_trace_inverts() {
        let rho = DensityOperator::single(
            "A",
            CMat::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]),
        )
        .unwrap();
        let zero = DensityOperator::basis("B", 2, 0);
        let back = rho.tensor(&zero).unwrap().partial_trace(&["B"]).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-15);
    }

    #[test]
    fn pure_tensor_pure_is_rank_one() {
        let a = DensityOperator::basis("A", 2, 1);
        let b = DensityOperator::basis("B", 3, 2);
        let s = crate::matfun::eig_hermitian(a.tensor(&b).unwrap().matrix()).unwrap();
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let a = bell().partial_trace(&["B"]).unwrap();
        assert!(max_abs(&(a.matrix() - linalg::identity(2).scale(0.5))) < 1e-15);
        assert!(matches!(bell().partial_trace(&["Z"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn rejects_invalid_states() {
        let bad = linalg::identity(2);
        assert!(DensityOperator::single("A", bad).is_err());
        let neg = linalg::from_real_diag(&[1.2, -0.2]);
        assert!(DensityOperator::single("A", neg).is_err());
    }

    #[test]
    fn purification_of_pure_state_has_trivial_reference() {
        let p = DensityOperator::basis("A", 3, 1).purify("R").unwrap();
        assert_eq!(p.reference_dim(), 1);
        assert!(trace_distance(p.reduced().matrix(), DensityOperator::basis("A", 3, 1).matrix()) < 1e-12);
    }

    #[test]
    fn purification_of_maximally_mixed_qubit_is_maximally_entangled() {
        let p = DensityOperator::maximally_mixed("A", 2).purify("R").unwrap();
        assert_eq!(p.reference_dim(), 2);
        let r = p.reference_state();
        assert!(max_abs(&(r - linalg::identity(2).scale(0.5))) < 1e-12);
        // Schmidt coefficients are all 1/sqrt(2)
        let sv = p.amplitude_matrix().svd(false, false).singular_values;
        for s in sv.iter() {
            assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn reorder_matches_permutation() {
        let a = DensityOperator::basis("A", 2, 0);
        let b = DensityOperator::basis("B", 3, 2);
        let ab = a.tensor(&b).unwrap();
        let ba = ab.reorder(&["B", "A"]).unwrap();
        assert!(max_abs(&(ba.matrix() - b.tensor(&a).unwrap().matrix())) < 1e-15);
        let _ = ket(2, 0);
    }

    #[test]
    fn cq_assembly() {
        let cq = ClassicalQuantumState::new(
            "X",
            vec![
                (0.5, DensityOperator::basis("S", 2, 0)),
                (0.5, DensityOperator::basis("S", 2, 1)),
            ],
        )
        .unwrap();
        let st = cq.assemble().unwrap();
        assert_eq!(st.labels(), vec!["S", "X"]);
        assert!((st.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((st.matrix()[(3, 3)].re - 0.5).abs() < 1e-15);
    }
}
