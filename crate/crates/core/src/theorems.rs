//! Executable checks of the entropy-gain, recoverability, information-gain
//! and entropic-disturbance inequalities.
//!
//! Every check returns [`CheckReport`]s in bits with the convention
//! `slack = lhs - rhs`, so a report holds when `slack >= -tol`.

use std::cell::RefCell;
use std::collections::BTreeMap;

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{
    cmi_dims, cond_entropy_dims, entropy, fidelity, holevo_chi, holevo_chi_matrices, mutual_info_dims, rel_entropy,
    root_fidelity, shannon,
};
use crate::error::{Error, Result};
use crate::linalg::{
    self, apply_to_vector_factor, hermitize, isometry_defect, kron, max_abs, partial_trace, permute_systems,
    permute_vector, reshape_vector, trace_norm, CMat, C64,
};
use crate::matfun::{eig_hermitian_tol, Spectrum};
use crate::qcore::map::{apply_on_factor, image_of_identity_max, trace_preservation_defect, ExtendedRight};
use crate::qcore::random::ginibre;
use crate::qcore::{Channel, DensityOperator, Ensemble, Instrument, LinearMap, System};
use crate::recovery::{
    adjoint_recovery, adjoint_recovery_map, integrated_cmi_recovery, uhlmann_from_amplitudes, PetzFamily, Quadrature,
    QuadratureSpec,
};

pub const GAIN_TOL: f64 = 1e-8;
pub const KLEIN_TOL: f64 = 1e-9;
pub const RECOVERY_TOL: f64 = 1e-6;
pub const INTEGRATED_RECOVERY_TOL: f64 = 1e-5;
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const CONSISTENCY_TOL: f64 = 1e-9;
pub const QSI_TOL: f64 = 1e-5;
pub const TP_FAMILY_TOL: f64 = 1e-8;
pub const DISTURBANCE_TOL: f64 = 1e-6;
pub const MONOTONICITY_TOL: f64 = 1e-9;
/// Outcomes below this probability are left out of every outcome sum.
pub const MIN_PROB: f64 = 1e-12;
/// Per-node fidelities below this mark a quadrature result as low confidence.
pub const LOW_FIDELITY: f64 = 1e-14;

const MAP_TP_TOL: f64 = 1e-9;
const SUBUNITAL_TOL: f64 = 1e-9;

/// Extra payload attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Aux {
    Num(f64),
    List(Vec<f64>),
    Flag(bool),
    Text(String),
}

impl From<f64> for Aux {
    fn from(v: f64) -> Self {
        Aux::Num(v)
    }
}

impl From<Vec<f64>> for Aux {
    fn from(v: Vec<f64>) -> Self {
        Aux::List(v)
    }
}

impl From<bool> for Aux {
    fn from(v: bool) -> Self {
        Aux::Flag(v)
    }
}

impl From<&str> for Aux {
    fn from(v: &str) -> Self {
        Aux::Text(v.to_string())
    }
}

impl From<String> for Aux {
    fn from(v: String) -> Self {
        Aux::Text(v)
    }
}

/// Identifies the random instance a report came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub seed: Option<u64>,
    pub trial: Option<u64>,
    pub dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub tol: f64,
    pub fingerprint: Fingerprint,
    pub aux: BTreeMap<String, Aux>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = lhs - rhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            slack,
            // NaN slack fails
            holds: slack >= -tol,
            tol,
            fingerprint: Fingerprint::default(),
            aux: BTreeMap::new(),
        }
    }

    /// `|a - b| <= tol`, recorded as `lhs = 0`, `rhs = |a - b|`.
    pub fn equality(name: impl Into<String>, a: f64, b: f64, tol: f64) -> Self {
        Self::new(name, 0.0, (a - b).abs(), tol).with("a", a).with("b", b)
    }

    pub fn with(mut self, key: &str, value: impl Into<Aux>) -> Self {
        self.aux.insert(key.to_string(), value.into());
        self
    }

    pub fn with_fingerprint(mut self, fingerprint: Fingerprint) -> Self {
        self.fingerprint = fingerprint;
        self
    }

    pub fn aux_num(&self, key: &str) -> Option<f64> {
        match self.aux.get(key) {
            Some(Aux::Num(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn low_confidence(&self) -> bool {
        matches!(self.aux.get("low_confidence"), Some(Aux::Flag(true)))
    }
}

fn expect_dim(m: &CMat, expected: usize, context: &'static str) -> Result<()> {
    if m.nrows() != expected || m.ncols() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found: m.nrows(),
        });
    }
    Ok(())
}

fn require_tp<M: LinearMap + ?Sized>(map: &M) -> Result<()> {
    let deviation = trace_preservation_defect(map);
    if deviation > MAP_TP_TOL {
        return Err(Error::NotTracePreserving { deviation });
    }
    Ok(())
}

fn neg_log2(x: f64) -> f64 {
    -x.log2()
}

fn maximally_mixed(d: usize) -> CMat {
    linalg::identity(d).unscale(d as f64)
}

/// `H(N(rho)) - H(rho) >= D(rho || N^dagger N(rho))` for a positive
/// trace-preserving map.
pub fn check_entropy_gain<M: LinearMap + ?Sized>(rho: &CMat, map: &M) -> Result<CheckReport> {
    expect_dim(rho, map.in_dim(), "entropy gain input")?;
    require_tp(map)?;
    let out = hermitize(&map.apply(rho));
    let back = hermitize(&map.apply_adjoint(&out));
    let lhs = entropy(&out)? - entropy(rho)?;
    let rel = rel_entropy(rho, &back)?;
    Ok(CheckReport::new("entropy_gain", lhs, rel.bits, GAIN_TOL).with("support_violation", rel.support_violation))
}

/// The subunital refinement with the adjoint-based recovery map. Returns the
/// main inequality, non-negativity of its right side and its dominance by the
/// plain adjoint bound.
pub fn check_entropy_gain_recovery<M: LinearMap + ?Sized>(rho: &CMat, map: &M, tau: &CMat) -> Result<Vec<CheckReport>> {
    expect_dim(rho, map.in_dim(), "entropy gain input")?;
    require_tp(map)?;
    let top = image_of_identity_max(map);
    if top > 1.0 + SUBUNITAL_TOL {
        return Err(Error::NotSubunital { max_eigenvalue: top });
    }
    let recovery = adjoint_recovery_map(map, tau)?;
    let out = hermitize(&map.apply(rho));
    let lhs = entropy(&out)? - entropy(rho)?;
    let recovered = hermitize(&recovery.apply(&out));
    let d_rec = rel_entropy(rho, &recovered)?.bits;
    let d_adj = rel_entropy(rho, &hermitize(&map.apply_adjoint(&out)))?.bits;
    Ok(vec![
        CheckReport::new("entropy_gain_recovery", lhs, d_rec, GAIN_TOL).with("adjoint_bound", d_adj),
        CheckReport::new("recovery_klein", d_rec, 0.0, KLEIN_TOL),
        CheckReport::new("recovery_dominance", d_adj, d_rec, GAIN_TOL),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerBudget {
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub evaluations: usize,
    /// Simplex standard-deviation tolerance used as the convergence test.
    pub sd_tolerance: f64,
}

impl Default for OptimizerBudget {
    fn default() -> Self {
        Self {
            restarts: 20,
            evaluations: 2000,
            sd_tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinGainResult {
    /// Smallest `H(N(rho)) - H(rho)` found, an upper bound on the infimum.
    pub value: f64,
    pub argmin: CMat,
    /// `D(rho || N^dagger N(rho))` at the argmin.
    pub bound_at_argmin: f64,
    /// Smallest `D(rho || N^dagger N(rho))` over every evaluated state.
    pub lower_bound_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct Tracker {
    evaluations: usize,
    best_value: f64,
    best_state: Option<CMat>,
    best_bound: f64,
    min_bound: f64,
}

struct GainObjective<'a> {
    channel: &'a Channel,
    dim: usize,
    budget: usize,
    tracker: &'a RefCell<Tracker>,
}

fn state_from_params(x: &[f64], d: usize) -> Option<CMat> {
    let l = CMat::from_fn(d, d, |i, j| C64::new(x[2 * (i * d + j)], x[2 * (i * d + j) + 1]));
    let rho = &l * l.adjoint();
    let tr = rho.trace().re;
    if !(tr > 1e-300) || !tr.is_finite() {
        return None;
    }
    Some(hermitize(&rho.unscale(tr)))
}

fn params_from_factor(l: &CMat) -> Vec<f64> {
    let d = l.nrows();
    let mut x = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            x.push(l[(i, j)].re);
            x.push(l[(i, j)].im);
        }
    }
    x
}

impl GainObjective<'_> {
    fn evaluate(&self, rho: &CMat) -> Option<(f64, f64)> {
        let out = hermitize(&self.channel.apply(rho));
        let gain = entropy(&out).ok()? - entropy(rho).ok()?;
        let back = hermitize(&self.channel.apply_adjoint(&out));
        let bound = rel_entropy(rho, &back).ok()?.bits;
        Some((gain, bound))
    }
}

impl CostFunction for GainObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let mut tr = self.tracker.borrow_mut();
        if tr.evaluations >= self.budget {
            return Err(argmin::core::Error::msg("evaluation budget exhausted"));
        }
        tr.evaluations += 1;
        let Some(rho) = state_from_params(x, self.dim) else {
            return Ok(f64::INFINITY);
        };
        let Some((gain, bound)) = self.evaluate(&rho) else {
            return Ok(f64::INFINITY);
        };
        tr.min_bound = tr.min_bound.min(bound);
        if gain < tr.best_value {
            tr.best_value = gain;
            tr.best_bound = bound;
            tr.best_state = Some(rho);
        }
        Ok(gain)
    }
}

/// Lazy power iteration `rho <- (rho + N(rho)) / 2` from the maximally mixed
/// state; the limit is a fixed point of `N` (gain exactly zero).
pub fn channel_fixed_point(channel: &Channel) -> Option<CMat> {
    let d = channel.in_dim();
    if channel.out_dim() != d {
        return None;
    }
    let mut rho = maximally_mixed(d);
    for _ in 0..20_000 {
        let next = hermitize(&(&rho + channel.apply(&rho)).unscale(2.0));
        let step = trace_norm(&(&next - &rho));
        rho = next;
        if step < 1e-14 {
            break;
        }
    }
    Some(rho)
}

/// Upper estimate of `inf_rho [H(N(rho)) - H(rho)]` by restarted Nelder-Mead
/// over `rho = L L^dagger / Tr`. Restart 0 starts at the maximally mixed
/// state, restart 1 at a fixed point of `N`, the rest at Ginibre factors.
pub fn minimal_entropy_gain<R: Rng + ?Sized>(
    channel: &Channel,
    budget: &OptimizerBudget,
    rng: &mut R,
) -> Result<MinGainResult> {
    if budget.restarts == 0 || budget.evaluations == 0 {
        return Err(Error::InvalidConfig("optimizer budget must be positive".into()));
    }
    let d = channel.in_dim();
    let n = 2 * d * d;
    let mut best: Option<(f64, CMat, f64, bool)> = None;
    let mut min_bound = f64::INFINITY;
    let mut evaluations = 0;
    let fixed = channel_fixed_point(channel).and_then(|f| crate::matfun::sqrt_psd(&f).ok());
    for restart in 0..budget.restarts {
        let factor = match restart {
            0 => linalg::identity(d),
            1 if fixed.is_some() => fixed.clone().expect("checked"),
            _ => ginibre(d, d, rng),
        };
        let x0 = params_from_factor(&factor);
        let scale = (x0.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt().max(1e-3);
        let mut simplex = vec![x0.clone()];
        for i in 0..n {
            let mut v = x0.clone();
            v[i] += 0.3 * scale;
            simplex.push(v);
        }
        let tracker = RefCell::new(Tracker {
            evaluations: 0,
            best_value: f64::INFINITY,
            best_state: None,
            best_bound: f64::INFINITY,
            min_bound: f64::INFINITY,
        });
        let objective = GainObjective {
            channel,
            dim: d,
            budget: budget.evaluations,
            tracker: &tracker,
        };
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(budget.sd_tolerance)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let outcome = Executor::new(objective, solver)
            .configure(|st| st.max_iters(budget.evaluations as u64))
            .run();
        let converged = matches!(
            outcome.as_ref().map(|r| r.state.get_termination_status().clone()),
            Ok(TerminationStatus::Terminated(TerminationReason::SolverConverged))
        );
        let tr = tracker.into_inner();
        evaluations += tr.evaluations;
        min_bound = min_bound.min(tr.min_bound);
        if let Some(state) = tr.best_state {
            if best.as_ref().is_none_or(|b| tr.best_value < b.0) {
                best = Some((tr.best_value, state, tr.best_bound, converged));
            }
        }
    }
    let (value, argmin, bound_at_argmin, converged) =
        best.ok_or_else(|| Error::InvalidState("no finite objective value found".into()))?;
    Ok(MinGainResult {
        value,
        argmin,
        bound_at_argmin,
        lower_bound_estimate: min_bound,
        converged,
        evaluations,
    })
}

/// Conditional version with a side system `B` the map does not touch.
pub fn check_cond_entropy_gain<M: LinearMap + ?Sized>(
    rho_ab: &CMat,
    dim_a: usize,
    dim_b: usize,
    map: &M,
) -> Result<CheckReport> {
    if map.in_dim() != dim_a {
        return Err(Error::DimensionMismatch {
            context: "conditional entropy gain map input",
            expected: dim_a,
            found: map.in_dim(),
        });
    }
    expect_dim(rho_ab, dim_a * dim_b, "conditional entropy gain input")?;
    require_tp(map)?;
    let ext = ExtendedRight {
        map,
        ancilla_dim: dim_b,
    };
    let sigma = hermitize(&ext.apply(rho_ab));
    let lhs = cond_entropy_dims(&sigma, &[map.out_dim(), dim_b], &[0], &[1])?
        - cond_entropy_dims(rho_ab, &[dim_a, dim_b], &[0], &[1])?;
    let rhs = rel_entropy(rho_ab, &hermitize(&ext.apply_adjoint(&sigma)))?.bits;
    Ok(CheckReport::new("cond_entropy_gain", lhs, rhs, GAIN_TOL))
}

/// `H(rho) - sum_x p_x H(rho_x)`.
pub fn groenewold_gain(instr: &Instrument, rho: &CMat) -> Result<f64> {
    expect_dim(rho, instr.in_dim(), "instrument input")?;
    let mut avg = 0.0;
    for (p, post) in instr.post_states(rho) {
        if p < MIN_PROB {
            continue;
        }
        if let Some(post) = post {
            avg += p * entropy(&hermitize(&post))?;
        }
    }
    Ok(entropy(rho)? - avg)
}

/// The instrument applied to a purification `phi_RA` of the input.
struct MeasuredReference {
    phi: crate::qcore::Purification,
    probs: Vec<f64>,
    /// `p_x sigma_R^x`.
    blocks: Vec<CMat>,
}

impl MeasuredReference {
    fn new(instr: &Instrument, rho: &CMat) -> Result<Self> {
        expect_dim(rho, instr.in_dim(), "instrument input")?;
        let phi = DensityOperator::single("A", rho.clone())?.purify("R")?;
        let dr = phi.reference_dim();
        let joint = linalg::projector(&phi.vector);
        let mut blocks = Vec::with_capacity(instr.num_outcomes());
        for x in 0..instr.num_outcomes() {
            let out = apply_on_factor(&instr.outcome_map(x), &joint, &[dr, instr.in_dim()], 1);
            blocks.push(hermitize(&partial_trace(&out, &[dr, instr.out_dim()], &[1])));
        }
        let probs = blocks.iter().map(|b| b.trace().re.max(0.0)).collect();
        Ok(Self { phi, probs, blocks })
    }

    fn dim_r(&self) -> usize {
        self.phi.reference_dim()
    }

    /// `sigma_RX` with the register last.
    fn cq(&self) -> CMat {
        linalg::attach_classical(&self.blocks)
    }

    fn dims(&self) -> [usize; 2] {
        [self.dim_r(), self.blocks.len()]
    }
}

/// `I_G <= H(X) - D(rho || N^dagger N(rho))` for the instrument channel `N`.
pub fn check_info_gain_upper(instr: &Instrument, rho: &CMat) -> Result<CheckReport> {
    let ch = instr.instrument_channel();
    expect_dim(rho, ch.in_dim(), "instrument input")?;
    let out = ch.apply(rho);
    let d = rel_entropy(rho, &hermitize(&ch.apply_adjoint(&out)))?.bits;
    let probs: Vec<f64> = instr.probabilities(rho).into_iter().map(|p| p.max(0.0)).collect();
    let h_x = shannon(&probs);
    let gain = groenewold_gain(instr, rho)?;
    Ok(CheckReport::new("info_gain_upper", h_x - d, gain, GAIN_TOL)
        .with("h_x", h_x)
        .with("adjoint_divergence", d))
}

/// `H(X|R) >= D(rho || R o N(rho))` for an efficient instrument, with `R` the
/// adjoint-based recovery of the instrument channel.
pub fn check_efficient_second_law(instr: &Instrument, rho: &CMat, tau: Option<&CMat>) -> Result<CheckReport> {
    instr.efficient_kraus()?;
    let m = MeasuredReference::new(instr, rho)?;
    let lhs = cond_entropy_dims(&m.cq(), &m.dims(), &[1], &[0])?;
    let ch = instr.instrument_channel();
    let default_tau = maximally_mixed(instr.in_dim());
    let recovery = adjoint_recovery(&ch, tau.unwrap_or(&default_tau))?;
    let recovered = hermitize(&recovery.apply(&ch.apply(rho)));
    let rhs = rel_entropy(rho, &recovered)?.bits;
    Ok(CheckReport::new("efficient_second_law", lhs, rhs, GAIN_TOL))
}

/// Information gain against recovery fidelity without side information.
///
/// Always returns `info_gain_fidelity` and the two-way consistency check of
/// its right side. Efficient instruments add the Uhlmann-witnessed bound
/// and the equality of the Groenewold gain with `I(R;X)`.
pub fn check_info_gain_no_qsi(instr: &Instrument, rho: &CMat) -> Result<Vec<CheckReport>> {
    let m = MeasuredReference::new(instr, rho)?;
    let dims = m.dims();
    let cq = m.cq();
    let i_rx = mutual_info_dims(&cq, &dims, &[0], &[1])?;
    let sigma_r = m.phi.reference_state();
    let product = kron(&sigma_r, &linalg::from_real_diag(&m.probs));
    let rhs_direct = neg_log2(fidelity(&cq, &product)?);
    let mut root_sum = 0.0;
    let mut roots = Vec::new();
    for (p, block) in m.probs.iter().zip(&m.blocks) {
        if *p < MIN_PROB {
            continue;
        }
        let r = root_fidelity(&block.unscale(*p), &sigma_r)?;
        roots.push(r);
        root_sum += p * r;
    }
    let rhs_sum = -2.0 * root_sum.log2();
    let mut reports = vec![
        CheckReport::new("info_gain_fidelity", i_rx, rhs_direct, GAIN_TOL).with("rhs_direct_sum", rhs_sum),
        CheckReport::equality("info_gain_fidelity_two_ways", rhs_direct, rhs_sum, CONSISTENCY_TOL),
    ];
    if instr.is_efficient() {
        let kraus = instr.efficient_kraus()?;
        let (dr, da, dout) = (m.dim_r(), instr.in_dim(), instr.out_dim());
        let target = reshape_vector(&m.phi.vector, dr, da).transpose();
        let mut sum = 0.0;
        let mut uhlmann_roots = Vec::new();
        let mut worst_defect: f64 = 0.0;
        let mut worst_gap: f64 = 0.0;
        let mut kept = 0;
        for (x, k) in kraus.iter().enumerate() {
            let p = m.probs[x];
            if p < MIN_PROB {
                continue;
            }
            let v = apply_to_vector_factor(k, &m.phi.vector, &[dr, da], 1).unscale(p.sqrt());
            let source = reshape_vector(&v, dr, dout).transpose();
            let u = uhlmann_from_amplitudes(&source, &target)?;
            let r = u.value.sqrt();
            worst_defect = worst_defect.max(isometry_defect(&u.isometry));
            worst_gap = worst_gap.max((r - roots[kept]).abs());
            kept += 1;
            uhlmann_roots.push(r);
            sum += p * r;
        }
        reports.push(
            CheckReport::new("info_gain_uhlmann", i_rx, -2.0 * sum.log2(), GAIN_TOL)
                .with("root_fidelities", uhlmann_roots)
                .with("isometry_defect", worst_defect)
                .with("uhlmann_vs_fidelity", worst_gap),
        );
        let gain = groenewold_gain(instr, rho)?;
        reports.push(CheckReport::equality("groenewold_equals_mutual_info", gain, i_rx, GAIN_TOL));
    }
    Ok(reports)
}

fn psd_spectrum(m: &CMat) -> Result<Spectrum> {
    eig_hermitian_tol(&hermitize(m), 1e-8)
}

/// Information gain with quantum side information `B`, under the quadrature.
///
/// Returns `info_gain_qsi`, the trace-preservation check of the B-side
/// recovery instrument, and for efficient instruments the Uhlmann-witnessed
/// bound `info_gain_qsi_uhlmann`.
pub fn check_info_gain_qsi(instr: &Instrument, rho_ab: &CMat, dim_b: usize, quad: &Quadrature) -> Result<Vec<CheckReport>> {
    let (da, dout, db) = (instr.in_dim(), instr.out_dim(), dim_b);
    expect_dim(rho_ab, da * db, "side-information input")?;
    let state = DensityOperator::new(vec![System::new("A", da), System::new("B", db)], rho_ab.clone())?;
    let phi = state.purify("R")?;
    let dr = phi.reference_dim();
    let dims3 = [dr, da, db];
    let joint = linalg::projector(&phi.vector);
    let omega_rb = hermitize(&partial_trace(&joint, &dims3, &[1]));
    let omega_b = hermitize(&partial_trace(&omega_rb, &[dr, db], &[0]));
    let sb = psd_spectrum(&omega_b)?;
    let support_b = sb.support_projector();

    let n = instr.num_outcomes();
    let mut probs = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(n);
    for x in 0..n {
        let out = apply_on_factor(&instr.outcome_map(x), &joint, &dims3, 1);
        let block = hermitize(&partial_trace(&out, &[dr, dout, db], &[1]));
        probs.push(block.trace().re.max(0.0));
        blocks.push(block);
    }
    let cq = linalg::attach_classical(&blocks);
    let cmi = cmi_dims(&cq, &[dr, db, n], &[0], &[2], &[1])?;

    struct Branch {
        p: f64,
        omega_rb: CMat,
        spec_b: Spectrum,
        target: Option<CMat>,
    }
    let efficient = instr.is_efficient();
    let kraus = if efficient { Some(instr.efficient_kraus()?) } else { None };
    let mut branches = Vec::new();
    for x in 0..n {
        let p = probs[x];
        if p < MIN_PROB {
            continue;
        }
        let omega_x = blocks[x].unscale(p);
        let omega_xb = partial_trace(&omega_x, &[dr, db], &[0]);
        // purification of omega^x_RB on A', as amplitudes with rows A'
        let target = kraus.as_ref().map(|k| {
            let v = apply_to_vector_factor(&k[x], &phi.vector, &dims3, 1).unscale(p.sqrt());
            let v = permute_vector(&v, &[dr, dout, db], &[1, 0, 2]);
            reshape_vector(&v, dout, dr * db)
        });
        branches.push(Branch {
            p,
            omega_rb: omega_x,
            spec_b: psd_spectrum(&omega_xb)?,
            target,
        });
    }

    let mut log_avg = 0.0;
    let mut log_avg_uhlmann = 0.0;
    let mut worst_tp: f64 = 0.0;
    let mut worst_tp_identity: f64 = 0.0;
    let mut min_fidelity = f64::INFINITY;
    let mut flagged_nodes = 0usize;
    let mut worst_uhlmann_gap: f64 = 0.0;
    let mut node_roots = Vec::with_capacity(quad.len());
    let id_r = linalg::identity(dr);
    for (&t, &w) in quad.nodes.iter().zip(&quad.weights) {
        let left = sb.power(C64::new(-0.5, 0.5 * t))?;
        let mut tp_sum = linalg::zeros(db, db);
        let mut sum = 0.0;
        let mut sum_uhlmann = 0.0;
        let mut node_flagged = false;
        for br in &branches {
            let k = br.spec_b.power(C64::new(0.5, -0.5 * t))? * &left;
            tp_sum += (k.adjoint() * &k).scale(br.p);
            let lift = kron(&id_r, &k);
            let recovered = hermitize(&(&lift * &omega_rb * lift.adjoint()));
            let f = fidelity(&br.omega_rb, &recovered)?;
            if f < LOW_FIDELITY {
                node_flagged = true;
            }
            min_fidelity = min_fidelity.min(f);
            sum += br.p * f.sqrt();
            if let Some(target) = &br.target {
                let v = apply_to_vector_factor(&k, &phi.vector, &dims3, 2);
                let v = permute_vector(&v, &dims3, &[1, 0, 2]);
                let source = reshape_vector(&v, da, dr * db);
                let u = uhlmann_from_amplitudes(&source, target)?;
                worst_uhlmann_gap = worst_uhlmann_gap.max((u.value - f).abs());
                sum_uhlmann += br.p * u.value.sqrt();
            }
        }
        if node_flagged {
            flagged_nodes += 1;
        }
        worst_tp = worst_tp.max(max_abs(&(&tp_sum - &support_b)));
        worst_tp_identity = worst_tp_identity.max(max_abs(&(&tp_sum - linalg::identity(db))));
        node_roots.push(sum);
        log_avg += w * sum.log2();
        log_avg_uhlmann += w * sum_uhlmann.log2();
    }
    let low_confidence = flagged_nodes > 0;
    let mut reports = vec![
        CheckReport::new("info_gain_qsi", cmi, -2.0 * log_avg, QSI_TOL)
            .with("low_confidence", low_confidence)
            .with("flagged_nodes", flagged_nodes as f64)
            .with("min_fidelity", min_fidelity)
            .with("node_root_fidelity_sums", node_roots),
        CheckReport::new("qsi_recovery_trace_preserving", 0.0, worst_tp, TP_FAMILY_TOL)
            .with("side_rank", sb.rank() as f64)
            .with("defect_vs_identity", worst_tp_identity),
    ];
    if efficient {
        reports.push(
            CheckReport::new("info_gain_qsi_uhlmann", cmi, -2.0 * log_avg_uhlmann, QSI_TOL)
                .with("uhlmann_vs_fidelity", worst_uhlmann_gap)
                .with("low_confidence", low_confidence),
        );
    }
    Ok(reports)
}

/// Holevo information loss against the recovery fidelity of the ensemble
/// members, with the integrated recovery built on the average state.
pub fn check_entropic_disturbance(ens: &Ensemble, channel: &Channel, quad: &QuadratureSpec) -> Result<Vec<CheckReport>> {
    let outs = ens.map_through(channel)?;
    let recovery = crate::recovery::integrated_recovery(&ens.average(), channel, None, quad)?;
    let chi_in = holevo_chi(ens);
    let chi_out = holevo_chi_matrices(ens.probs(), &outs)?;
    let mut avg_root = 0.0;
    for ((p, state), out) in ens.probs().iter().zip(ens.states()).zip(&outs) {
        if *p < MIN_PROB {
            continue;
        }
        avg_root += p * root_fidelity(state.matrix(), &hermitize(&recovery.apply(out)))?;
    }
    let loss = chi_in - chi_out;
    Ok(vec![
        CheckReport::new("entropic_disturbance", loss, -2.0 * avg_root.log2(), DISTURBANCE_TOL)
            .with("average_root_fidelity", avg_root),
        CheckReport::new("holevo_monotonicity", loss, 0.0, MONOTONICITY_TOL),
    ])
}

/// Relative-entropy decrease against the recovery fidelity of `rho`.
///
/// Returns `recoverability` (integrated recovery), `recoverability_integrated`
/// (the per-node averaged form) and `petz_fixed_point`.
pub fn check_recoverability(rho: &CMat, sigma: &CMat, channel: &Channel, quad: &QuadratureSpec) -> Result<Vec<CheckReport>> {
    expect_dim(rho, channel.in_dim(), "recoverability input")?;
    expect_dim(sigma, channel.in_dim(), "recoverability reference")?;
    let d_in = rel_entropy(rho, sigma)?;
    if d_in.infinite {
        return Err(Error::InvalidState(format!(
            "support of rho leaves the support of sigma (weight {:.3e})",
            d_in.support_violation
        )));
    }
    let n_rho = hermitize(&channel.apply(rho));
    let n_sigma = hermitize(&channel.apply(sigma));
    let decrease = d_in.bits - rel_entropy(&n_rho, &n_sigma)?.bits;

    let family = PetzFamily::new(sigma, channel)?;
    let q = quad.build()?;
    let recovery = family.integrated(&maximally_mixed(channel.in_dim()), &q)?;
    let f = fidelity(rho, &hermitize(&recovery.apply(&n_rho)))?;

    let mut averaged = 0.0;
    for (&t, &w) in q.nodes.iter().zip(&q.weights) {
        let rt = family.rotated(t / 2.0);
        averaged += w * neg_log2(fidelity(rho, &hermitize(&rt.apply(&n_rho)))?);
    }
    let petz = family.rotated(0.0);
    let fixed = trace_norm(&(petz.apply(&n_sigma) - sigma));
    Ok(vec![
        CheckReport::new("recoverability", decrease, neg_log2(f), RECOVERY_TOL).with("fidelity", f),
        CheckReport::new("recoverability_integrated", decrease, averaged, INTEGRATED_RECOVERY_TOL),
        CheckReport::new("petz_fixed_point", 0.0, fixed, FIXED_POINT_TOL),
    ])
}

/// `I(A;B|C) >= -log F(rho_ABC, R_{C->AC}(rho_BC))`.
pub fn check_cmi_recovery(rho_abc: &CMat, dims: [usize; 3], quad: &QuadratureSpec) -> Result<CheckReport> {
    let [da, db, dc] = dims;
    expect_dim(rho_abc, da * db * dc, "tripartite state")?;
    let cmi = cmi_dims(rho_abc, &dims, &[0], &[1], &[2])?;
    let rho_ac = hermitize(&partial_trace(rho_abc, &dims, &[1]));
    let rho_bc = hermitize(&partial_trace(rho_abc, &dims, &[0]));
    let recovery = integrated_cmi_recovery(&rho_ac, da, dc, quad)?;
    let bac = apply_on_factor(&recovery, &rho_bc, &[db, dc], 1);
    let recovered = hermitize(&permute_systems(&bac, &[db, da, dc], &[1, 0, 2]));
    let f = fidelity(rho_abc, &recovered)?;
    Ok(CheckReport::new("cmi_recovery", cmi, neg_log2(f), RECOVERY_TOL).with("fidelity", f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::r;
    use crate::qcore::random::{
        haar_unitary, random_channel, random_density_matrix, random_instrument, random_instrument_with,
        random_subunital_channel, rng_from_seed,
    };
    use crate::qcore::Superoperator;

    fn plus() -> CMat {
        CMat::from_element(2, 2, r(0.5))
    }

    fn z_measurement() -> Instrument {
        Instrument::projective(&[linalg::ket(2, 0), linalg::ket(2, 1)]).unwrap()
    }

    #[test]
    fn dephasing_on_plus_is_tight() {
        let rep = check_entropy_gain(&plus(), &Channel::dephasing(2)).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-12);
        assert!((rep.rhs - 1.0).abs() < 1e-12);
        assert!(rep.holds && rep.slack.abs() <= 1e-8);
    }

    #[test]
    fn unitary_gain_is_zero() {
        let mut rng = rng_from_seed(1);
        let u = Channel::unitary(haar_unitary(3, &mut rng)).unwrap();
        let rho = random_density_matrix(3, 2, &mut rng).unwrap();
        let rep = check_entropy_gain(&rho, &u).unwrap();
        assert!(rep.lhs.abs() < 1e-10 && rep.rhs.abs() < 1e-10);
        for r in check_entropy_gain_recovery(&rho, &u, &maximally_mixed(3)).unwrap() {
            assert!(r.lhs.abs() < 1e-9 && r.rhs.abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn rejects_non_trace_preserving_map() {
        let m = Channel::from_kraus(vec![linalg::identity(2).scale(0.5)]).unwrap();
        assert!(matches!(
            check_entropy_gain(&plus(), &m),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn random_cptp_campaign_holds() {
        let mut rng = rng_from_seed(2);
        for d in 2..=4 {
            for _ in 0..10 {
                let rho = random_density_matrix(d, rng.random_range(1..=d), &mut rng).unwrap();
                let ch = random_channel(d, rng.random_range(2..=4), 2, &mut rng).unwrap();
                let rep = check_entropy_gain(&rho, &ch).unwrap();
                assert!(rep.holds, "{rep:?}");
            }
        }
    }

    #[test]
    fn positive_non_cp_map_obeys_gain_bound() {
        let mut rng = rng_from_seed(3);
        for _ in 0..10 {
            let ch = random_channel(3, 3, 2, &mut rng).unwrap();
            let map = Superoperator::transpose(3).compose(&Superoperator::from_map(&ch)).unwrap();
            assert!(map.choi().symmetric_eigenvalues().min() < -1e-6);
            let rho = random_density_matrix(3, 3, &mut rng).unwrap();
            assert!(check_entropy_gain(&rho, &map).unwrap().holds);
        }
    }

    #[test]
    fn subunital_chain_holds() {
        let mut rng = rng_from_seed(4);
        for _ in 0..20 {
            let ch = random_subunital_channel(2, 3, 3, &mut rng).unwrap();
            let rho = random_density_matrix(2, 2, &mut rng).unwrap();
            let tau = random_density_matrix(2, 2, &mut rng).unwrap();
            let reps = check_entropy_gain_recovery(&rho, &ch, &tau).unwrap();
            assert!(reps[0].rhs > 1e-6);
            for rep in reps {
                assert!(rep.holds, "{rep:?}");
            }
        }
    }

    #[test]
    fn non_subunital_map_is_rejected() {
        // replacement channel onto |0><0| sends I to 2|0><0|
        let ch = Channel::replacement(&linalg::from_real_diag(&[1.0, 0.0]), 2).unwrap();
        assert!(matches!(
            check_entropy_gain_recovery(&plus(), &ch, &maximally_mixed(2)),
            Err(Error::NotSubunital { .. })
        ));
    }

    #[test]
    fn fixed_point_of_recovered_channel_has_zero_right_side() {
        let ch = Channel::dephasing(2);
        let rho = linalg::from_real_diag(&[0.3, 0.7]);
        let reps = check_entropy_gain_recovery(&rho, &ch, &maximally_mixed(2)).unwrap();
        assert!(reps[0].rhs.abs() < 1e-12 && reps[0].lhs >= -1e-12);
    }

    #[test]
    fn minimal_gain_examples() {
        let mut rng = rng_from_seed(5);
        let budget = OptimizerBudget {
            restarts: 3,
            evaluations: 600,
            ..Default::default()
        };
        let u = Channel::unitary(haar_unitary(2, &mut rng)).unwrap();
        let res = minimal_entropy_gain(&u, &budget, &mut rng).unwrap();
        assert!(res.value.abs() < 1e-8, "{}", res.value);

        let dep = Channel::depolarizing(2, 1.0).unwrap();
        let res = minimal_entropy_gain(&dep, &budget, &mut rng).unwrap();
        assert!(res.value.abs() < 1e-8);
        assert!(max_abs(&(res.argmin - maximally_mixed(2))) < 1e-4);

        let ch = random_channel(3, 3, 2, &mut rng).unwrap();
        let res = minimal_entropy_gain(&ch, &budget, &mut rng).unwrap();
        assert!(res.value <= 1e-8 && res.value >= -(3f64).log2() - 1e-8);
        assert!(res.value >= res.bound_at_argmin - 1e-8);
    }

    #[test]
    fn fixed_point_is_fixed() {
        let ch = random_channel(3, 3, 2, &mut rng_from_seed(6)).unwrap();
        let f = channel_fixed_point(&ch).unwrap();
        assert!(trace_norm(&(ch.apply(&f) - &f)) < 1e-10);
    }

    #[test]
    fn conditional_gain_reduces_for_product_states() {
        let mut rng = rng_from_seed(7);
        let ch = random_channel(2, 2, 2, &mut rng).unwrap();
        let ra = random_density_matrix(2, 2, &mut rng).unwrap();
        let rb = random_density_matrix(2, 2, &mut rng).unwrap();
        let cond = check_cond_entropy_gain(&kron(&ra, &rb), 2, 2, &ch).unwrap();
        let plain = check_entropy_gain(&ra, &ch).unwrap();
        assert!((cond.lhs - plain.lhs).abs() < 1e-10);
        assert!((cond.rhs - plain.rhs).abs() < 1e-10);

        for _ in 0..20 {
            let rho = random_density_matrix(4, 4, &mut rng).unwrap();
            let ch = random_channel(2, 2, 2, &mut rng).unwrap();
            assert!(check_cond_entropy_gain(&rho, 2, 2, &ch).unwrap().holds);
        }
    }

    #[test]
    fn groenewold_examples() {
        let id = Instrument::from_kraus_lists(vec![vec![linalg::identity(2)]]).unwrap();
        assert!(groenewold_gain(&id, &plus()).unwrap().abs() < 1e-12);
        assert!(groenewold_gain(&z_measurement(), &plus()).unwrap().abs() < 1e-12);
        let g = groenewold_gain(&z_measurement(), &maximally_mixed(2)).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_on_projective_measurement() {
        let rep = check_info_gain_upper(&z_measurement(), &maximally_mixed(2)).unwrap();
        assert!(rep.holds);
        assert!((rep.aux_num("h_x").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inefficient_instruments_can_have_negative_gain() {
        let mut rng = rng_from_seed(8);
        let mut seen_negative = false;
        for _ in 0..60 {
            let instr = random_instrument_with(2, 2, 2, false, 2, &mut rng).unwrap();
            let rho = random_density_matrix(2, 1, &mut rng).unwrap();
            let rep = check_info_gain_upper(&instr, &rho).unwrap();
            assert!(rep.holds, "{rep:?}");
            seen_negative |= rep.rhs < -1e-6;
        }
        assert!(seen_negative);
    }

    #[test]
    fn second_law_examples() {
        let aligned = check_efficient_second_law(&z_measurement(), &linalg::from_real_diag(&[1.0, 0.0]), None).unwrap();
        assert!(aligned.lhs.abs() < 1e-12 && aligned.rhs.abs() < 1e-12);
        let mixed = check_efficient_second_law(&z_measurement(), &maximally_mixed(2), None).unwrap();
        // the register is a copy of the reference's Z value
        assert!(mixed.lhs.abs() < 1e-10 && mixed.holds);
        let mut rng = rng_from_seed(9);
        for d in 2..=3 {
            for _ in 0..10 {
                let instr = random_instrument(d, rng.random_range(2..=4), true, &mut rng).unwrap();
                let rho = random_density_matrix(d, d, &mut rng).unwrap();
                assert!(check_efficient_second_law(&instr, &rho, None).unwrap().holds);
            }
        }
        let inefficient = random_instrument(2, 2, false, &mut rng).unwrap();
        assert!(check_efficient_second_law(&inefficient, &plus(), None).is_err());
    }

    #[test]
    fn no_qsi_examples() {
        let u = Instrument::from_kraus_lists(vec![vec![haar_unitary(2, &mut rng_from_seed(10))]]).unwrap();
        let reps = check_info_gain_no_qsi(&u, &plus()).unwrap();
        assert!(reps.iter().all(|r| r.holds));
        assert!(reps[0].lhs.abs() < 1e-12);
        match &reps[2].aux["root_fidelities"] {
            Aux::List(v) => assert!((v[0] - 1.0).abs() < 1e-10),
            other => panic!("{other:?}"),
        }

        let reps = check_info_gain_no_qsi(&z_measurement(), &linalg::from_real_diag(&[1.0, 0.0])).unwrap();
        assert!(reps[0].lhs.abs() < 1e-12 && reps[2].rhs.abs() < 1e-10);

        let reps = check_info_gain_no_qsi(&z_measurement(), &maximally_mixed(2)).unwrap();
        assert!((reps[0].lhs - 1.0).abs() < 1e-10);
        assert!(reps[2].rhs <= 1.0 + 1e-10);
        assert!(reps.iter().all(|r| r.holds), "{reps:?}");
    }

    #[test]
    fn no_qsi_random_efficient() {
        let mut rng = rng_from_seed(11);
        for _ in 0..20 {
            let d = rng.random_range(2..=3);
            let instr = random_instrument(d, rng.random_range(2..=4), true, &mut rng).unwrap();
            let rho = random_density_matrix(d, rng.random_range(1..=d), &mut rng).unwrap();
            let reps = check_info_gain_no_qsi(&instr, &rho).unwrap();
            assert_eq!(reps.len(), 4);
            for r in &reps {
                assert!(r.holds, "{r:?}");
            }
            assert!(reps[2].aux_num("uhlmann_vs_fidelity").unwrap() < 1e-8);
        }
    }

    fn default_quad() -> Quadrature {
        QuadratureSpec::default().build().unwrap()
    }

    #[test]
    fn qsi_classically_correlated_side_information() {
        let rho = linalg::from_real_diag(&[0.5, 0.0, 0.0, 0.5]);
        let reps = check_info_gain_qsi(&z_measurement(), &rho, 2, &default_quad()).unwrap();
        assert!(reps[0].lhs.abs() < 1e-10);
        assert!(reps[0].rhs.abs() < 1e-6 * 2.0, "{:?}", reps[0]);
        for r in &reps {
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn qsi_product_side_information_matches_no_qsi() {
        let mut rng = rng_from_seed(12);
        let instr = random_instrument(2, 3, true, &mut rng).unwrap();
        let ra = random_density_matrix(2, 2, &mut rng).unwrap();
        let rb = random_density_matrix(2, 2, &mut rng).unwrap();
        let qsi = check_info_gain_qsi(&instr, &kron(&ra, &rb), 2, &default_quad()).unwrap();
        let plain = check_info_gain_no_qsi(&instr, &ra).unwrap();
        assert!((qsi[0].lhs - plain[0].lhs).abs() < 1e-9);
        assert!(qsi.iter().all(|r| r.holds));
    }

    #[test]
    fn qsi_random_instances() {
        let mut rng = rng_from_seed(13);
        let quad = default_quad();
        for _ in 0..5 {
            let instr = random_instrument(2, rng.random_range(2..=4), true, &mut rng).unwrap();
            let rho = random_density_matrix(4, 4, &mut rng).unwrap();
            let reps = check_info_gain_qsi(&instr, &rho, 2, &quad).unwrap();
            assert_eq!(reps.len(), 3);
            for r in &reps {
                assert!(r.holds, "{r:?}");
            }
            assert!(reps[2].aux_num("uhlmann_vs_fidelity").unwrap() < 1e-8);
        }
    }

    #[test]
    fn disturbance_examples() {
        let spec = QuadratureSpec::default();
        let s0 = DensityOperator::basis("A", 2, 0);
        let splus = DensityOperator::single("A", plus()).unwrap();
        let ens = Ensemble::new(vec![0.5, 0.5], vec![s0.clone(), splus]).unwrap();

        let u = Channel::unitary(haar_unitary(2, &mut rng_from_seed(14))).unwrap();
        let reps = check_entropic_disturbance(&ens, &u, &spec).unwrap();
        assert!(reps[0].lhs.abs() < 1e-10);
        assert!((reps[0].aux_num("average_root_fidelity").unwrap() - 1.0).abs() < 1e-8);

        let dep = Channel::depolarizing(2, 0.3).unwrap();
        let reps = check_entropic_disturbance(&ens, &dep, &spec).unwrap();
        assert!(reps[0].lhs > 1e-3);
        assert!(reps.iter().all(|r| r.holds));

        let s1 = DensityOperator::single("A", linalg::from_real_diag(&[0.2, 0.8])).unwrap();
        let commuting = Ensemble::new(vec![0.4, 0.6], vec![s0, s1]).unwrap();
        let reps = check_entropic_disturbance(&commuting, &Channel::dephasing(2), &spec).unwrap();
        assert!(reps[0].lhs.abs() < 1e-12);
        assert!(reps[0].aux_num("average_root_fidelity").unwrap() >= 1.0 - 1e-8);
    }

    #[test]
    fn recoverability_random_instances() {
        let mut rng = rng_from_seed(15);
        let spec = QuadratureSpec::default();
        for _ in 0..5 {
            let d = rng.random_range(2..=3);
            let sigma = random_density_matrix(d, d, &mut rng).unwrap();
            let rho = random_density_matrix(d, rng.random_range(1..=d), &mut rng).unwrap();
            let ch = random_channel(d, rng.random_range(2..=3), 2, &mut rng).unwrap();
            for rep in check_recoverability(&rho, &sigma, &ch, &spec).unwrap() {
                assert!(rep.holds, "{rep:?}");
            }
        }
        let pure0 = linalg::from_real_diag(&[1.0, 0.0]);
        assert!(check_recoverability(&plus(), &pure0, &Channel::identity(2), &spec).is_err());
    }

    #[test]
    fn cmi_recovery_on_markov_chain_is_exact() {
        let mut rng = rng_from_seed(16);
        // sum_x p_x a_x (x) b_x (x) |x><x|_C is a Markov chain A - C - B
        let mut rho = linalg::zeros(8, 8);
        for (x, px) in [0.3, 0.7].iter().enumerate() {
            let a = random_density_matrix(2, 2, &mut rng).unwrap();
            let b = random_density_matrix(2, 2, &mut rng).unwrap();
            let cx = linalg::projector(&linalg::ket(2, x));
            rho += kron(&kron(&a, &b), &cx).scale(*px);
        }
        let spec = QuadratureSpec::default();
        let rep = check_cmi_recovery(&rho, [2, 2, 2], &spec).unwrap();
        assert!(rep.lhs.abs() < 1e-10);
        assert!(rep.aux_num("fidelity").unwrap() >= 1.0 - 1e-6, "{rep:?}");
        let rep = check_cmi_recovery(&random_density_matrix(8, 8, &mut rng).unwrap(), [2, 2, 2], &spec).unwrap();
        assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn report_semantics() {
        assert!(CheckReport::new("x", 1.0, 1.0 + 5e-9, 1e-8).holds);
        assert!(!CheckReport::new("x", 1.0, 1.0 + 5e-8, 1e-8).holds);
        assert!(!CheckReport::new("x", f64::NAN, 0.0, 1e-8).holds);
        assert!(!CheckReport::new("x", 0.0, f64::INFINITY, 1e-8).holds);
    }
}
