//! Approximate data processing versus approximately CPTP reduced dynamics for
//! a system `Q` interacting with an environment `E` while a reference `R`
//! looks on.

use rand::Rng;

use crate::entropy::{binary_entropy, cmi_dims, fidelity, mutual_info_dims};
use crate::error::{Error, Result};
use crate::linalg::{self, hermitize, isometry_defect, kron, partial_trace, trace_distance, CMat};
use crate::qcore::map::apply_on_factor;
use crate::qcore::random::{haar_unitary, random_density_matrix, random_isometry};
use crate::qcore::{Channel, DensityOperator, System};
use crate::recovery::{integrated_recovery, QuadratureSpec};
use crate::theorems::{CheckReport, GAIN_TOL, RECOVERY_TOL};

pub const ISOMETRY_TOL: f64 = 1e-10;
pub const CPTP_TOL: f64 = 1e-8;

/// A state on `R (x) Q (x) E`, stored in that factor order.
#[derive(Clone, Debug)]
pub struct TripartiteConfiguration {
    state: DensityOperator,
}

impl TripartiteConfiguration {
    /// Accepts any factor order as long as the labels are exactly `R`, `Q`, `E`.
    pub fn new(state: DensityOperator) -> Result<Self> {
        let mut labels = state.labels();
        labels.sort_unstable();
        if labels != ["E", "Q", "R"] {
            return Err(Error::InvalidState(format!(
                "expected systems R, Q, E; found {:?}",
                state.labels()
            )));
        }
        Ok(Self {
            state: state.reorder(&["R", "Q", "E"])?,
        })
    }

    pub fn from_matrix(m: CMat, dims: [usize; 3]) -> Result<Self> {
        let systems = vec![System::new("R", dims[0]), System::new("Q", dims[1]), System::new("E", dims[2])];
        Self::new(DensityOperator::new(systems, m)?)
    }

    /// `rho_RQ (x) rho_E`.
    pub fn product(rho_rq: &CMat, dim_r: usize, rho_e: &CMat) -> Result<Self> {
        let dq = rho_rq.nrows() / dim_r;
        Self::from_matrix(kron(rho_rq, rho_e), [dim_r, dq, rho_e.nrows()])
    }

    /// `sum_x p_x rho_R^x (x) |x><x|_Q (x) rho_E^x`, a Markov chain `R - Q - E`.
    pub fn classical_markov(probs: &[f64], refs: &[CMat], envs: &[CMat]) -> Result<Self> {
        if probs.len() != refs.len() || probs.len() != envs.len() || probs.is_empty() {
            return Err(Error::InvalidConfig("Markov chain components disagree in length".into()));
        }
        let dq = probs.len();
        let (dr, de) = (refs[0].nrows(), envs[0].nrows());
        let mut m = linalg::zeros(dr * dq * de, dr * dq * de);
        for (x, p) in probs.iter().enumerate() {
            let q = linalg::projector(&linalg::ket(dq, x));
            m += kron(&kron(&refs[x], &q), &envs[x]).scale(*p);
        }
        Self::from_matrix(m, [dr, dq, de])
    }

    /// `|GHZ><GHZ|` on three qubits.
    pub fn ghz() -> Self {
        let mut v = crate::linalg::CVec::zeros(8);
        v[0] = linalg::r(0.5f64.sqrt());
        v[7] = linalg::r(0.5f64.sqrt());
        Self::from_matrix(linalg::projector(&v), [2, 2, 2]).expect("pure state")
    }

    pub fn random<R: Rng + ?Sized>(dims: [usize; 3], rank: usize, rng: &mut R) -> Result<Self> {
        let m = random_density_matrix(dims.iter().product(), rank, rng)?;
        Self::from_matrix(m, dims)
    }

    pub fn dims(&self) -> [usize; 3] {
        let d = self.state.dims();
        [d[0], d[1], d[2]]
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    pub fn matrix(&self) -> &CMat {
        self.state.matrix()
    }

    pub fn rho_rq(&self) -> CMat {
        hermitize(&partial_trace(self.matrix(), &self.dims(), &[2]))
    }

    pub fn rho_qe(&self) -> CMat {
        hermitize(&partial_trace(self.matrix(), &self.dims(), &[0]))
    }
}

/// Isometry `V: QE -> Q'E'`.
#[derive(Clone, Debug)]
pub struct Interaction {
    v: CMat,
    dims_in: [usize; 2],
    dims_out: [usize; 2],
}

impl Interaction {
    pub fn new(v: CMat, dims_in: [usize; 2], dims_out: [usize; 2]) -> Result<Self> {
        let (rows, cols) = v.shape();
        if cols != dims_in[0] * dims_in[1] || rows != dims_out[0] * dims_out[1] {
            return Err(Error::DimensionMismatch {
                context: "interaction shape",
                expected: dims_in[0] * dims_in[1],
                found: cols,
            });
        }
        let deviation = isometry_defect(&v);
        if deviation > ISOMETRY_TOL {
            return Err(Error::NotIsometry { deviation });
        }
        Ok(Self { v, dims_in, dims_out })
    }

    pub fn identity(dq: usize, de: usize) -> Self {
        Self::new(linalg::identity(dq * de), [dq, de], [dq, de]).expect("identity")
    }

    /// Exchanges `Q` and `E` (equal dimensions).
    pub fn swap(d: usize) -> Self {
        let mut v = linalg::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                v[(b * d + a, a * d + b)] = linalg::r(1.0);
            }
        }
        Self::new(v, [d, d], [d, d]).expect("permutation")
    }

    pub fn random_unitary<R: Rng + ?Sized>(dq: usize, de: usize, rng: &mut R) -> Self {
        Self::new(haar_unitary(dq * de, rng), [dq, de], [dq, de]).expect("Haar unitary")
    }

    pub fn random_isometry<R: Rng + ?Sized>(dims_in: [usize; 2], dims_out: [usize; 2], rng: &mut R) -> Result<Self> {
        let v = random_isometry(dims_out[0] * dims_out[1], dims_in[0] * dims_in[1], rng)?;
        Self::new(v, dims_in, dims_out)
    }

    pub fn matrix(&self) -> &CMat {
        &self.v
    }

    pub fn dims_in(&self) -> [usize; 2] {
        self.dims_in
    }

    pub fn dims_out(&self) -> [usize; 2] {
        self.dims_out
    }

    fn check(&self, config: &TripartiteConfiguration) -> Result<()> {
        let [_, dq, de] = config.dims();
        if [dq, de] != self.dims_in {
            return Err(Error::DimensionMismatch {
                context: "interaction input",
                expected: dq * de,
                found: self.dims_in[0] * self.dims_in[1],
            });
        }
        Ok(())
    }

    /// `sigma_{R Q' E'} = V rho_RQE V^dagger`.
    pub fn evolve(&self, config: &TripartiteConfiguration) -> Result<CMat> {
        self.check(config)?;
        let dr = config.dims()[0];
        let lift = kron(&linalg::identity(dr), &self.v);
        Ok(hermitize(&(&lift * config.matrix() * lift.adjoint())))
    }

    /// `sigma_{R Q'}`.
    pub fn evolve_rq(&self, config: &TripartiteConfiguration) -> Result<CMat> {
        let sigma = self.evolve(config)?;
        let [dq, de] = self.dims_out;
        Ok(hermitize(&partial_trace(&sigma, &[config.dims()[0], dq, de], &[2])))
    }
}

/// `I(R;Q')_sigma - I(R;Q)_rho`.
pub fn dp_slack(config: &TripartiteConfiguration, v: &Interaction) -> Result<f64> {
    let sigma_rq = v.evolve_rq(config)?;
    let [dr, dq, _] = config.dims();
    let after = mutual_info_dims(&sigma_rq, &[dr, v.dims_out[0]], &[0], &[1])?;
    let before = mutual_info_dims(&config.rho_rq(), &[dr, dq], &[0], &[1])?;
    Ok(after - before)
}

/// `I(R;E|Q)_rho`.
pub fn cmi_bound(config: &TripartiteConfiguration) -> Result<f64> {
    cmi_dims(config.matrix(), &config.dims(), &[0], &[2], &[1])
}

/// Data-processing slack of the evolution `Q' = QE` with trivial `E'`,
/// i.e. `I(R;QE) - I(R;Q)`.
pub fn special_evolution_slack(config: &TripartiteConfiguration) -> Result<f64> {
    let [dr, dq, de] = config.dims();
    let joint = mutual_info_dims(config.matrix(), &[dr, dq * de], &[0], &[1])?;
    let before = mutual_info_dims(&config.rho_rq(), &[dr, dq], &[0], &[1])?;
    Ok(joint - before)
}

/// The recovery `R_{Q -> QE}` built on `rho_QE` and the partial trace over `E`.
pub fn environment_recovery(config: &TripartiteConfiguration, quad: &QuadratureSpec) -> Result<Channel> {
    let [_, dq, de] = config.dims();
    let tr_e = Channel::partial_trace(&[dq, de], &[1])?;
    integrated_recovery(&config.rho_qe(), &tr_e, None, quad)
}

/// `E(.) = Tr_{E'}{V R_{Q->QE}(.) V^dagger}` with its check report, which
/// compares `-log F(sigma_RQ', E(rho_RQ))` against `I(R;E|Q)` and records
/// the measured trace distance in `aux.epsilon`.
pub fn reduced_dynamics(
    config: &TripartiteConfiguration,
    v: &Interaction,
    quad: &QuadratureSpec,
) -> Result<(Channel, Vec<CheckReport>)> {
    v.check(config)?;
    let recovery = environment_recovery(config, quad)?;
    let [dq_out, de_out] = v.dims_out;
    let tr = Channel::partial_trace(&[dq_out, de_out], &[1])?;
    let e = tr.compose(&Channel::isometry(v.v.clone())?.compose(&recovery)?)?.compress()?;
    let defect = e.trace_preservation_defect();
    let min_choi = e.min_choi_eigenvalue();

    let dr = config.dims()[0];
    let sigma_rq = v.evolve_rq(config)?;
    let image = hermitize(&apply_on_factor(&e, &config.rho_rq(), &[dr, config.dims()[1]], 1));
    let f = fidelity(&sigma_rq, &image)?;
    let cmi = cmi_bound(config)?;
    let reports = vec![
        CheckReport::new("reduced_dynamics", cmi, -f.log2(), RECOVERY_TOL)
            .with("fidelity", f)
            .with("epsilon", trace_distance(&sigma_rq, &image)),
        CheckReport::new("reduced_dynamics_cptp", 0.0, defect.max(-min_choi).max(0.0), CPTP_TOL)
            .with("trace_defect", defect)
            .with("min_choi_eigenvalue", min_choi),
    ];
    Ok((e, reports))
}

/// `2 eps log|R| + (1 + eps) h2(eps / (1 + eps))`.
pub fn afw_bound(eps: f64, dim_r: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange { what: "epsilon", value: eps });
    }
    Ok(2.0 * eps * (dim_r as f64).log2() + (1.0 + eps) * binary_entropy(eps / (1.0 + eps))?)
}

/// Converse direction: given `E` with `(1/2)||sigma_RQ' - E(rho_RQ)||_1 <= eps`,
/// data processing and the CMI bound hold up to the continuity term.
///
/// The CMI statement quantifies over every interaction, including `Q' = QE`,
/// so its epsilon is `max(eps, eps_special)` with `eps_special` the distance
/// achieved by the environment recovery on that evolution.
pub fn converse_bound(
    config: &TripartiteConfiguration,
    v: &Interaction,
    channel: &Channel,
    eps: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<CheckReport>> {
    let dr = config.dims()[0];
    afw_bound(eps, dr)?;
    let [_, dq, _] = config.dims();
    if channel.in_dim() != dq || channel.out_dim() != v.dims_out[0] {
        return Err(Error::DimensionMismatch {
            context: "converse channel",
            expected: dq * v.dims_out[0],
            found: channel.in_dim() * channel.out_dim(),
        });
    }
    let sigma_rq = v.evolve_rq(config)?;
    let image = hermitize(&apply_on_factor(channel, &config.rho_rq(), &[dr, dq], 1));
    let measured = trace_distance(&sigma_rq, &image);
    let vacuous = measured > eps + 1e-12;
    let before = mutual_info_dims(&config.rho_rq(), &[dr, dq], &[0], &[1])?;
    let after = mutual_info_dims(&sigma_rq, &[dr, v.dims_out[0]], &[0], &[1])?;

    let special = converse_cmi_epsilon(config, quad)?;
    let eps_cmi = eps.max(special);
    Ok(vec![
        CheckReport::new("converse_dp", before + afw_bound(eps, dr)?, after, GAIN_TOL)
            .with("epsilon", eps)
            .with("measured_epsilon", measured)
            .with("vacuous", vacuous),
        CheckReport::new("converse_cmi", afw_bound(eps_cmi, dr)?, cmi_bound(config)?, GAIN_TOL)
            .with("epsilon", eps_cmi)
            .with("special_epsilon", special),
    ])
}

/// Trace distance `(1/2)||rho_RQE - R_{Q->QE}(rho_RQ)||_1` for the evolution
/// `Q' = QE`, where the environment recovery itself is the reduced dynamics.
pub fn converse_cmi_epsilon(config: &TripartiteConfiguration, quad: &QuadratureSpec) -> Result<f64> {
    let [dr, dq, _] = config.dims();
    let recovery = environment_recovery(config, quad)?;
    let image = apply_on_factor(&recovery, &config.rho_rq(), &[dr, dq], 1);
    Ok(trace_distance(config.matrix(), &hermitize(&image)).min(1.0))
}

/// Reduced dynamics that ignore the input: replacement by `tau`.
pub fn replacement_dynamics(tau: &CMat, dq: usize) -> Result<Channel> {
    Channel::replacement(tau, dq)
}
