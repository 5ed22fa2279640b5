//! `R(Y) = N^dagger(Y) + Tr{(I - N(I)) Y} tau`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::matfun::eig_hermitian_tol;
use crate::qcore::map::AdjointOf;
use crate::qcore::{Channel, LinearMap, Superoperator};

fn check_tau(tau: &CMat, d: usize) -> Result<()> {
    if tau.nrows() != d {
        return Err(Error::DimensionMismatch {
            context: "completion state",
            expected: d,
            found: tau.nrows(),
        });
    }
    Ok(())
}

/// Kraus form for a CP map `N`. Fails with a witness when `N(I) > I` in some
/// direction, since the completion weight is then negative.
pub fn adjoint_recovery(channel: &Channel, tau: &CMat) -> Result<Channel> {
    let din = channel.in_dim();
    let dout = channel.out_dim();
    check_tau(tau, din)?;
    let gap = linalg::identity(dout) - channel.apply(&linalg::identity(din));
    let gs = eig_hermitian_tol(&linalg::hermitize(&gap), 1e-8)?;
    let tol = 1e-10;
    if gs.min_eigenvalue() < -tol {
        return Err(Error::NotCompletelyPositive {
            min_choi_eigenvalue: gs.min_eigenvalue(),
            witness_weight: gs.min_eigenvalue(),
            witness: gs.eigenvectors.column(0).iter().copied().collect(),
        });
    }
    let ts = eig_hermitian_tol(&linalg::hermitize(tau), 1e-8)?;
    let mut kraus: Vec<CMat> = channel.kraus().iter().map(|k| k.adjoint()).collect();
    for (m, &cm) in gs.eigenvalues.iter().enumerate() {
        if cm <= tol {
            continue;
        }
        let bra = gs.eigenvectors.column(m).adjoint();
        for (j, &tj) in ts.eigenvalues.iter().enumerate() {
            if tj <= 0.0 || !ts.in_support(tj) {
                continue;
            }
            let ket = ts.eigenvectors.column(j);
            kraus.push((&ket * &bra).scale((cm * tj).sqrt()));
        }
    }
    Channel::from_kraus(kraus)
}

/// Same construction for an arbitrary linear map, as a dense superoperator.
/// No positivity is assumed.
pub fn adjoint_recovery_map<M: LinearMap + ?Sized>(map: &M, tau: &CMat) -> Result<Superoperator> {
    let din = map.in_dim();
    let dout = map.out_dim();
    check_tau(tau, din)?;
    let adj = Superoperator::from_map(&AdjointOf(map));
    let gap = linalg::identity(dout) - map.apply(&linalg::identity(din));
    // Y -> Tr{gap Y} tau, column (a, b) of the Liouville matrix is vec(gap[b, a] tau)
    let mut m = linalg::zeros(din * din, dout * dout);
    for a in 0..dout {
        for b in 0..dout {
            let w = gap[(b, a)];
            for i in 0..din {
                for j in 0..din {
                    m[(i * din + j, a * dout + b)] = w * tau[(i, j)];
                }
            }
        }
    }
    Superoperator::from_matrix(dout, din, adj.matrix() + m)
}
