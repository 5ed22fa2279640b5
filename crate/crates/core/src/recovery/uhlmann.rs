//! Optimal reference isometry between two purifications.

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::qcore::Purification;

/// `U: X -> Y` maximizing `|<phi^sigma| (U (x) I) |phi^rho>|^2`.
#[derive(Clone, Debug)]
pub struct Uhlmann {
    pub isometry: CMat,
    /// `<phi^sigma| (U (x) I) |phi^rho>`, real and non-negative up to rounding.
    pub overlap: C64,
    /// `|overlap|^2`, which equals the fidelity of the reduced states.
    pub value: f64,
}

/// Amplitude matrices `a` (`d_X x d_S`) and `b` (`d_Y x d_S`) of
/// `sum a[x, s] |x>|s>` and `sum b[y, s] |y>|s>`. The isometry is
/// `U = V W^dagger` from the SVD `a b^dagger = W S V^dagger`.
pub fn uhlmann_from_amplitudes(a: &CMat, b: &CMat) -> Result<Uhlmann> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            context: "purified systems",
            expected: a.ncols(),
            found: b.ncols(),
        });
    }
    if b.nrows() < a.nrows() {
        return Err(Error::ReferenceTooSmall {
            source_dim: a.nrows(),
            target: b.nrows(),
        });
    }
    let m = a * b.adjoint();
    let svd = m.clone().svd(true, true);
    let w = svd.u.expect("requested");
    let v = svd.v_t.expect("requested").adjoint();
    // thin SVD: w is d_X x d_X, v is d_Y x d_X
    let u = &v * w.adjoint();
    let overlap = (&u * &m).trace();
    Ok(Uhlmann {
        isometry: u,
        overlap,
        value: overlap.norm_sqr(),
    })
}

pub fn uhlmann_isometry(phi_rho: &Purification, phi_sigma: &Purification) -> Result<Uhlmann> {
    if phi_rho.systems != phi_sigma.systems {
        return Err(Error::InvalidState("purifications of different systems".into()));
    }
    uhlmann_from_amplitudes(&phi_rho.amplitude_matrix(), &phi_sigma.amplitude_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::fidelity;
    use crate::linalg::{isometry_defect, max_abs};
    use crate::qcore::random::{haar_unitary, random_density, rng_from_seed};
    use crate::qcore::System;

    #[test]
    fn identical_purifications() {
        let rho = random_density(vec![System::new("A", 3)], 3, &mut rng_from_seed(1)).unwrap();
        let p = rho.purify("R").unwrap();
        let u = uhlmann_isometry(&p, &p).unwrap();
        assert!((u.value - 1.0).abs() < 1e-10);
        assert!(max_abs(&(u.isometry - crate::linalg::identity(3))) < 1e-10);
    }

    #[test]
    fn reference_gauge_is_undone() {
        let mut rng = rng_from_seed(2);
        let rho = random_density(vec![System::new("A", 3)], 3, &mut rng).unwrap();
        let a = rho.purify("R").unwrap().amplitude_matrix();
        let v = haar_unitary(3, &mut rng);
        let b = &v * &a;
        let u = uhlmann_from_amplitudes(&a, &b).unwrap();
        assert!((u.value - 1.0).abs() < 1e-10);
        assert!(max_abs(&(u.isometry - v)) < 1e-8);
    }

    #[test]
    fn value_is_fidelity() {
        let mut rng = rng_from_seed(3);
        for _ in 0..10 {
            let rho = random_density(vec![System::new("A", 3)], 2, &mut rng).unwrap();
            let sigma = random_density(vec![System::new("A", 3)], 3, &mut rng).unwrap();
            let u = uhlmann_isometry(&rho.purify("R").unwrap(), &sigma.purify("R").unwrap()).unwrap();
            let f = fidelity(rho.matrix(), sigma.matrix()).unwrap();
            assert!((u.value - f).abs() < 1e-8);
            assert!(u.value <= 1.0 + 1e-10);
            assert!(isometry_defect(&u.isometry) < 1e-10);
        }
    }

    #[test]
    fn small_target_reference_is_rejected() {
        let mut rng = rng_from_seed(4);
        let rho = random_density(vec![System::new("A", 3)], 3, &mut rng).unwrap();
        let sigma = random_density(vec![System::new("A", 3)], 1, &mut rng).unwrap();
        let r = uhlmann_isometry(&rho.purify("R").unwrap(), &sigma.purify("R").unwrap());
        assert!(matches!(r, Err(Error::ReferenceTooSmall { .. })));
    }
}
