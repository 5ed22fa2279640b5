//! Entropies, relative entropy, mutual information and fidelities, in bits.

use crate::error::{Error, Result};
use crate::linalg::{self, partial_trace, trace_norm, CMat};
use crate::matfun::{eig_hermitian_tol, Spectrum};
use crate::qcore::{DensityOperator, Ensemble};

/// Mass of `P` outside `supp(Q)` above which `D(P||Q)` is infinite.
pub const SUPPORT_TOL: f64 = 1e-9;

const HERM_TOL: f64 = 1e-8;

fn spectrum(m: &CMat) -> Result<Spectrum> {
    eig_hermitian_tol(&linalg::hermitize(m), HERM_TOL)
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// `-Tr{rho log rho}`; eigenvalues below zero (rounding) are ignored.
pub fn entropy(rho: &CMat) -> Result<f64> {
    let s = spectrum(rho)?;
    Ok(-s.eigenvalues.iter().map(|&l| xlog2x(l)).sum::<f64>())
}

pub fn entropy_of(rho: &DensityOperator) -> f64 {
    entropy(rho.matrix()).expect("validated state")
}

/// Shannon entropy of a probability vector.
pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::OutOfRange {
            what: "binary entropy argument",
            value: x,
        });
    }
    Ok(-xlog2x(x) - xlog2x(1.0 - x))
}

/// Relative entropy with an explicit support diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelEntropy {
    /// Bits; `f64::INFINITY` when the support condition fails.
    pub bits: f64,
    /// `Tr{P Pi}` with `Pi` the kernel projector of `Q`.
    pub support_violation: f64,
    pub infinite: bool,
}

impl RelEntropy {
    pub fn is_finite(&self) -> bool {
        !self.infinite
    }
}

pub fn rel_entropy(p: &CMat, q: &CMat) -> Result<RelEntropy> {
    rel_entropy_tol(p, q, SUPPORT_TOL)
}

/// `Tr{P [log P - log Q]}` for positive semi-definite `P != 0` and `Q`.
pub fn rel_entropy_tol(p: &CMat, q: &CMat, support_tol: f64) -> Result<RelEntropy> {
    if p.shape() != q.shape() {
        return Err(Error::DimensionMismatch {
            context: "relative entropy",
            expected: p.nrows(),
            found: q.nrows(),
        });
    }
    let sp = spectrum(p)?;
    if sp.max_abs_eigenvalue() == 0.0 || sp.rank() == 0 {
        return Err(Error::ZeroOperator);
    }
    let sq = spectrum(q)?;
    let support_violation = linalg::hs_inner(&sq.kernel_projector(), p).re.max(0.0);
    if support_violation > support_tol {
        return Ok(RelEntropy {
            bits: f64::INFINITY,
            support_violation,
            infinite: true,
        });
    }
    let p_log_p: f64 = sp.eigenvalues.iter().map(|&l| xlog2x(l)).sum();
    // Tr{P log Q} = sum_j <q_j|P|q_j> log q_j over the support of Q
    let cut = sq.cutoff();
    let u = &sq.eigenvectors;
    let mut p_log_q = 0.0;
    for (j, &l) in sq.eigenvalues.iter().enumerate() {
        if l <= cut {
            continue;
        }
        let col = u.column(j);
        let w = (col.adjoint() * p * col)[(0, 0)].re;
        p_log_q += w * l.log2();
    }
    Ok(RelEntropy {
        bits: p_log_p - p_log_q,
        support_violation,
        infinite: false,
    })
}

/// Positions of `labels` in `rho`.
fn positions(rho: &DensityOperator, labels: &[&str]) -> Result<Vec<usize>> {
    labels.iter().map(|l| rho.index_of(l)).collect()
}

/// Entropy of the marginal on the factors at `keep`.
pub fn marginal_entropy(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<f64> {
    let discard: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    if discard.is_empty() {
        return entropy(m);
    }
    if keep.is_empty() {
        return Ok(0.0);
    }
    entropy(&partial_trace(m, dims, &discard))
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// `H(A|B) = H(AB) - H(B)` on positional factor groups.
pub fn cond_entropy_dims(m: &CMat, dims: &[usize], a: &[usize], b: &[usize]) -> Result<f64> {
    Ok(marginal_entropy(m, dims, &union(a, b))? - marginal_entropy(m, dims, b)?)
}

/// `I(A;B) = H(A) + H(B) - H(AB)`.
pub fn mutual_info_dims(m: &CMat, dims: &[usize], a: &[usize], b: &[usize]) -> Result<f64> {
    Ok(marginal_entropy(m, dims, a)? + marginal_entropy(m, dims, b)? - marginal_entropy(m, dims, &union(a, b))?)
}

/// `I(A;B|C) = H(AC) + H(BC) - H(ABC) - H(C)`.
pub fn cmi_dims(m: &CMat, dims: &[usize], a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    let ac = union(a, c);
    let bc = union(b, c);
    let abc = union(&ac, b);
    Ok(marginal_entropy(m, dims, &ac)? + marginal_entropy(m, dims, &bc)?
        - marginal_entropy(m, dims, &abc)?
        - marginal_entropy(m, dims, c)?)
}

pub fn cond_entropy(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<f64> {
    cond_entropy_dims(rho.matrix(), &rho.dims(), &positions(rho, a)?, &positions(rho, b)?)
}

pub fn mutual_info(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<f64> {
    mutual_info_dims(rho.matrix(), &rho.dims(), &positions(rho, a)?, &positions(rho, b)?)
}

pub fn cmi(rho: &DensityOperator, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    cmi_dims(
        rho.matrix(),
        &rho.dims(),
        &positions(rho, a)?,
        &positions(rho, b)?,
        &positions(rho, c)?,
    )
}

/// `chi = H(sum_x p_x rho_x) - sum_x p_x H(rho_x)`.
pub fn holevo_chi(ens: &Ensemble) -> f64 {
    let avg = entropy(&ens.average()).expect("valid average");
    let members: f64 = ens
        .probs()
        .iter()
        .zip(ens.states())
        .map(|(p, s)| p * entropy_of(s))
        .sum();
    avg - members
}

/// Holevo information of `{p_x, rho_x}` given as raw matrices.
pub fn holevo_chi_matrices(probs: &[f64], states: &[CMat]) -> Result<f64> {
    let d = states[0].nrows();
    let mut avg = linalg::zeros(d, d);
    let mut members = 0.0;
    for (p, s) in probs.iter().zip(states) {
        avg += s.scale(*p);
        members += p * entropy(s)?;
    }
    Ok(entropy(&avg)? - members)
}

/// `||sqrt(P) sqrt(Q)||_1`.
pub fn root_fidelity(p: &CMat, q: &CMat) -> Result<f64> {
    let sp = spectrum(p)?.map(|x| x.max(0.0).sqrt())?;
    let sq = spectrum(q)?.map(|x| x.max(0.0).sqrt())?;
    Ok(trace_norm(&(sp * sq)))
}

/// `F(P, Q) = ||sqrt(P) sqrt(Q)||_1^2`.
pub fn fidelity(p: &CMat, q: &CMat) -> Result<f64> {
    let r = root_fidelity(p, q)?;
    Ok(r * r)
}

pub fn trace_distance(a: &CMat, b: &CMat) -> f64 {
    linalg::trace_distance(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_diag, r, CVec};
    use crate::qcore::random::{random_density_matrix, rng_from_seed};
    use crate::qcore::System;
    use approx::assert_abs_diff_eq;

    fn h2(x: f64) -> f64 {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&from_real_diag(&[1.0, 0.0])).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(entropy(&linalg::identity(2).scale(0.5)).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            entropy(&from_real_diag(&[0.75, 0.25])).unwrap(),
            h2(0.25),
            epsilon = 1e-13
        );
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(0.25).unwrap(), 0.8112781244591328, epsilon = 1e-15);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = random_density_matrix(3, 3, &mut rng_from_seed(1)).unwrap();
        assert_abs_diff_eq!(rel_entropy(&rho, &rho).unwrap().bits, 0.0, epsilon = 1e-12);
        let zero = from_real_diag(&[1.0, 0.0]);
        let d = rel_entropy(&zero, &linalg::identity(2).scale(0.5)).unwrap();
        assert_abs_diff_eq!(d.bits, 1.0, epsilon = 1e-14);
        let one = from_real_diag(&[0.0, 1.0]);
        let inf = rel_entropy(&zero, &one).unwrap();
        assert!(inf.infinite && inf.bits.is_infinite());
        assert_abs_diff_eq!(inf.support_violation, 1.0, epsilon = 1e-14);
        assert!(matches!(rel_entropy(&linalg::zeros(2, 2), &one), Err(Error::ZeroOperator)));
    }

    fn bell() -> DensityOperator {
        let h = 0.5f64.sqrt();
        let v = CVec::from_vec(vec![r(h), r(0.0), r(0.0), r(h)]);
        DensityOperator::pure(vec![System::new("A", 2), System::new("B", 2)], &v).unwrap()
    }

    #[test]
    fn mutual_information_examples() {
        assert_abs_diff_eq!(mutual_info(&bell(), &["A"], &["B"]).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cond_entropy(&bell(), &["A"], &["B"]).unwrap(), -1.0, epsilon = 1e-12);
        let a = DensityOperator::single("A", from_real_diag(&[0.3, 0.7])).unwrap();
        let b = DensityOperator::single("B", from_real_diag(&[0.6, 0.4])).unwrap();
        let cc = DensityOperator::single("C", from_real_diag(&[0.1, 0.9])).unwrap();
        let abc = a.tensor(&b).unwrap().tensor(&cc).unwrap();
        assert_abs_diff_eq!(mutual_info(&abc, &["A"], &["B"]).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cmi(&abc, &["A"], &["B"], &["C"]).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ghz_conditional_mutual_information() {
        let dims = [2, 2, 2];
        let systems = || vec![System::new("A", 2), System::new("B", 2), System::new("C", 2)];
        let classical = DensityOperator::new(systems(), from_real_diag(&[0.5, 0., 0., 0., 0., 0., 0., 0.5])).unwrap();
        assert_abs_diff_eq!(cmi(&classical, &["A"], &["B"], &["C"]).unwrap(), 0.0, epsilon = 1e-12);

        let h = 0.5f64.sqrt();
        let mut v = CVec::zeros(8);
        v[0] = r(h);
        v[7] = r(h);
        let ghz = DensityOperator::pure(systems(), &v).unwrap();
        let m = ghz.matrix();
        let hac = entropy(&partial_trace(m, &dims, &[1])).unwrap();
        let hbc = entropy(&partial_trace(m, &dims, &[0])).unwrap();
        let hc = entropy(&partial_trace(m, &dims, &[0, 1])).unwrap();
        let habc = entropy(m).unwrap();
        let oracle = hac + hbc - habc - hc;
        assert_abs_diff_eq!(cmi(&ghz, &["A"], &["B"], &["C"]).unwrap(), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn holevo_examples() {
        let z0 = DensityOperator::basis("A", 2, 0);
        let z1 = DensityOperator::basis("A", 2, 1);
        let e = Ensemble::new(vec![0.5, 0.5], vec![z0.clone(), z1]).unwrap();
        assert_abs_diff_eq!(holevo_chi(&e), 1.0, epsilon = 1e-14);
        let same = Ensemble::new(vec![0.3, 0.7], vec![z0.clone(), z0.clone()]).unwrap();
        assert_abs_diff_eq!(holevo_chi(&same), 0.0, epsilon = 1e-14);
        let plus = DensityOperator::single("A", CMat::from_element(2, 2, r(0.5))).unwrap();
        let e2 = Ensemble::new(vec![0.5, 0.5], vec![z0, plus]).unwrap();
        // average state has eigenvalues cos^2(pi/8), sin^2(pi/8); members are pure
        let cos2 = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert_abs_diff_eq!(holevo_chi(&e2), h2(cos2), epsilon = 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let rho = random_density_matrix(3, 2, &mut rng_from_seed(2)).unwrap();
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-10);
        let z0 = from_real_diag(&[1.0, 0.0]);
        let plus = CMat::from_element(2, 2, r(0.5));
        assert_abs_diff_eq!(fidelity(&z0, &plus).unwrap(), 0.5, epsilon = 1e-14);
        let a = CMat::from_fn(2, 2, |i, j| if i == j { r(0.5) } else { c(0.1, 0.2 * (i as f64 - j as f64)) });
        assert!(fidelity(&a, &z0).unwrap() <= 1.0);
    }

    #[test]
    fn fidelity_direct_sum() {
        let mut rng = rng_from_seed(7);
        let p = [0.2, 0.5, 0.3];
        let q = [0.4, 0.4, 0.2];
        let rs: Vec<CMat> = (0..3).map(|_| random_density_matrix(2, 2, &mut rng).unwrap()).collect();
        let ss: Vec<CMat> = (0..3).map(|_| random_density_matrix(2, 1, &mut rng).unwrap()).collect();
        let pr: Vec<CMat> = rs.iter().zip(p).map(|(m, w)| m.scale(w)).collect();
        let qs: Vec<CMat> = ss.iter().zip(q).map(|(m, w)| m.scale(w)).collect();
        let lhs = root_fidelity(&linalg::attach_classical(&pr), &linalg::attach_classical(&qs)).unwrap();
        let rhs: f64 = (0..3)
            .map(|x| (p[x] * q[x]).sqrt() * root_fidelity(&rs[x], &ss[x]).unwrap())
            .sum();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
    }
}
