//! Pure-loss and quantum-limited amplifier channels on a truncated Fock space.
//!
//! Loss Kraus operators have entries `<n-k|K_k|n> = sqrt(C(n,k) eta^(n-k) (1-eta)^k)`
//! and amplifier ones `<n+k|A_k|n> = sqrt(C(n+k,k) (1-1/G)^k (1/G)^(n+1))`.
//! Entries that would leave `0..=n_max` are dropped, so the maps are trace
//! non-increasing and exact on low photon numbers. Identities that hold only
//! in infinite dimension are checked on the guarded levels `n <= n_max - guard`.

use serde::{Deserialize, Serialize};

use crate::entropy::{entropy, rel_entropy};
use crate::error::{Error, Result};
use crate::linalg::{self, hermitize, max_abs, CMat, C64};
use crate::qcore::{Channel, LinearMap};
use crate::theorems::CheckReport;

pub const DEFAULT_N_MAX: usize = 40;
pub const DEFAULT_GUARD: usize = 15;
pub const TRUNC_TOL: f64 = 1e-6;
/// Input mass above the guarded levels that is still accepted.
pub const INPUT_LEAKAGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockTruncation {
    pub n_max: usize,
    pub guard: usize,
}

impl Default for FockTruncation {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            guard: DEFAULT_GUARD,
        }
    }
}

impl FockTruncation {
    pub fn new(n_max: usize, guard: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        if guard >= n_max {
            return Err(Error::InvalidConfig(format!("guard {guard} leaves no levels below n_max {n_max}")));
        }
        Ok(Self { n_max, guard })
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Highest level inside the guarded subspace.
    pub fn guarded_max(&self) -> usize {
        self.n_max - self.guard
    }

    pub fn guarded_dim(&self) -> usize {
        self.guarded_max() + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaussianKind {
    Loss { eta: f64 },
    Amplifier { gain: f64 },
    /// Loss followed by amplification, `A_G o B_eta`.
    Composition { eta: f64, gain: f64 },
}

impl GaussianKind {
    pub fn name(&self) -> &'static str {
        match self {
            GaussianKind::Loss { .. } => "loss",
            GaussianKind::Amplifier { .. } => "amplifier",
            GaussianKind::Composition { .. } => "composition",
        }
    }

    pub fn parameter_label(&self) -> String {
        match self {
            GaussianKind::Loss { eta } => format!("{eta}"),
            GaussianKind::Amplifier { gain } => format!("{gain}"),
            GaussianKind::Composition { eta, gain } => format!("{eta}:{gain}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianChannelSpec {
    #[serde(flatten)]
    pub kind: GaussianKind,
    pub truncation: FockTruncation,
    pub trunc_tol: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange {
            what: "transmissivity",
            value: eta,
        });
    }
    Ok(())
}

fn check_gain(gain: f64) -> Result<()> {
    if !(gain >= 1.0 && gain.is_finite()) {
        return Err(Error::OutOfRange { what: "gain", value: gain });
    }
    Ok(())
}

/// Pascal triangle up to row `n`.
fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![1.0; i + 1];
        for k in 1..i {
            row[k] = rows[i - 1][k - 1] + rows[i - 1][k];
        }
        rows.push(row);
    }
    rows
}

pub fn loss_channel(eta: f64, trunc: FockTruncation) -> Result<Channel> {
    check_eta(eta)?;
    let d = trunc.dim();
    let c = binomials(trunc.n_max);
    let kraus = (0..d)
        .map(|k| {
            let mut m = linalg::zeros(d, d);
            for n in k..d {
                let w = c[n][k] * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32);
                m[(n - k, n)] = C64::new(w.sqrt(), 0.0);
            }
            m
        })
        .collect();
    Channel::from_kraus(kraus)
}

pub fn amp_channel(gain: f64, trunc: FockTruncation) -> Result<Channel> {
    check_gain(gain)?;
    let d = trunc.dim();
    let c = binomials(trunc.n_max);
    let inv = 1.0 / gain;
    let kraus = (0..d)
        .map(|k| {
            let mut m = linalg::zeros(d, d);
            for n in 0..d - k {
                let w = c[n + k][k] * (1.0 - inv).powi(k as i32) * inv.powi(n as i32 + 1);
                m[(n + k, n)] = C64::new(w.sqrt(), 0.0);
            }
            m
        })
        .collect();
    Channel::from_kraus(kraus)
}

/// Stages applied in order without multiplying out their Kraus operators,
/// which for a composition would be `(n_max + 1)^2` matrices.
#[derive(Clone, Debug)]
pub struct GaussianMap {
    stages: Vec<Channel>,
}

impl GaussianMap {
    fn single(ch: Channel) -> Self {
        Self { stages: vec![ch] }
    }

    /// `second o first`.
    fn then(first: Channel, second: Channel) -> Self {
        Self {
            stages: vec![first, second],
        }
    }

    pub fn stages(&self) -> &[Channel] {
        &self.stages
    }

    /// Kraus operators of the whole map, `K_{ab} = A_a B_b` for two stages.
    pub fn kraus(&self) -> Vec<CMat> {
        let mut ops = self.stages[0].kraus().to_vec();
        for stage in &self.stages[1..] {
            ops = stage
                .kraus()
                .iter()
                .flat_map(|a| ops.iter().map(move |b| a * b))
                .collect();
        }
        ops
    }

    pub fn into_channel(self) -> Result<Channel> {
        Channel::from_kraus(self.kraus())
    }
}

impl LinearMap for GaussianMap {
    fn in_dim(&self) -> usize {
        self.stages[0].in_dim()
    }
    fn out_dim(&self) -> usize {
        self.stages[self.stages.len() - 1].out_dim()
    }
    fn apply(&self, x: &CMat) -> CMat {
        self.stages.iter().fold(x.clone(), |acc, ch| ch.apply(&acc))
    }
    fn apply_adjoint(&self, y: &CMat) -> CMat {
        self.stages.iter().rev().fold(y.clone(), |acc, ch| ch.apply_adjoint(&acc))
    }
}

impl GaussianChannelSpec {
    pub fn new(kind: GaussianKind, truncation: FockTruncation) -> Result<Self> {
        let spec = Self {
            kind,
            truncation,
            trunc_tol: TRUNC_TOL,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        FockTruncation::new(self.truncation.n_max, self.truncation.guard)?;
        if !(self.trunc_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("trunc_tol must be positive, got {}", self.trunc_tol)));
        }
        match self.kind {
            GaussianKind::Loss { eta } => check_eta(eta),
            GaussianKind::Amplifier { gain } => check_gain(gain),
            GaussianKind::Composition { eta, gain } => check_eta(eta).and(check_gain(gain)),
        }
    }

    pub fn channel(&self) -> Result<GaussianMap> {
        let t = self.truncation;
        Ok(match self.kind {
            GaussianKind::Loss { eta } => GaussianMap::single(loss_channel(eta, t)?),
            GaussianKind::Amplifier { gain } => GaussianMap::single(amp_channel(gain, t)?),
            GaussianKind::Composition { eta, gain } => GaussianMap::then(loss_channel(eta, t)?, amp_channel(gain, t)?),
        })
    }

    /// `c` with `N(I) = c^{-1} I` and `N^dagger = c^{-1} M` for the reversal `M`.
    pub fn unitality_factor(&self) -> f64 {
        match self.kind {
            GaussianKind::Loss { eta } => eta,
            GaussianKind::Amplifier { gain } => gain,
            GaussianKind::Composition { eta, gain } => eta * gain,
        }
    }

    /// `A_{1/eta}`, `B_{1/G}` or `A_{1/eta} o B_{1/G}`.
    pub fn reversal(&self) -> Result<GaussianMap> {
        let t = self.truncation;
        let inv_eta = |eta: f64| {
            if eta > 0.0 {
                Ok(1.0 / eta)
            } else {
                Err(Error::OutOfRange {
                    what: "transmissivity for reversal",
                    value: eta,
                })
            }
        };
        Ok(match self.kind {
            GaussianKind::Loss { eta } => GaussianMap::single(amp_channel(inv_eta(eta)?, t)?),
            GaussianKind::Amplifier { gain } => GaussianMap::single(loss_channel(1.0 / gain, t)?),
            GaussianKind::Composition { eta, gain } => {
                GaussianMap::then(loss_channel(1.0 / gain, t)?, amp_channel(inv_eta(eta)?, t)?)
            }
        })
    }
}

fn guarded_block(m: &CMat, keep: usize) -> CMat {
    m.view((0, 0), (keep, keep)).into_owned()
}

/// `eta^{-1} - sum_{n <= n_max} C(n,m) eta^(m+1) (1-eta)^(n-m) / eta`, the
/// mass `B_eta(I)` misses at level `m` because inputs above `n_max` are cut.
fn loss_identity_tail(eta: f64, m: usize, n_max: usize) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    let mut partial = 0.0;
    // C(n, m) eta^m (1-eta)^(n-m), built incrementally in n
    let mut term = eta.powi(m as i32);
    for n in m..=n_max {
        if n > m {
            term *= n as f64 / (n - m) as f64 * (1.0 - eta);
        }
        partial += term;
    }
    (1.0 / eta - partial).max(0.0)
}

/// `N(I) = c^{-1} I` restricted to the guarded levels.
///
/// `aux.truncation_dominated` is set when the deviation is explained by
/// the input levels cut off above `n_max`, i.e. the guard band is too small.
pub fn check_almost_unital(spec: &GaussianChannelSpec) -> Result<CheckReport> {
    spec.validate()?;
    let t = spec.truncation;
    let ch = spec.channel()?;
    let image = ch.apply(&linalg::identity(t.dim()));
    let target = linalg::identity(t.guarded_dim()).unscale(spec.unitality_factor());
    let deviation = max_abs(&(guarded_block(&image, t.guarded_dim()) - target));
    let tail = match spec.kind {
        GaussianKind::Loss { eta } | GaussianKind::Composition { eta, .. } => (0..t.guarded_dim())
            .map(|m| loss_identity_tail(eta, m, t.n_max))
            .fold(0.0, f64::max),
        GaussianKind::Amplifier { .. } => 0.0,
    };
    let dominated = deviation > spec.trunc_tol && tail > spec.trunc_tol;
    Ok(CheckReport::new(format!("almost_unital_{}", spec.kind.name()), 0.0, deviation, spec.trunc_tol)
        .with("leakage", tail)
        .with("truncation_dominated", dominated)
        .with("guard", t.guard as f64))
}

/// Smallest guard `>= min_guard` for which [`check_almost_unital`] passes.
pub fn auto_guard(kind: GaussianKind, n_max: usize, min_guard: usize, trunc_tol: f64) -> Option<usize> {
    (min_guard..n_max).find(|&guard| {
        let spec = GaussianChannelSpec {
            kind,
            truncation: FockTruncation { n_max, guard },
            trunc_tol,
        };
        check_almost_unital(&spec).map(|r| r.holds).unwrap_or(false)
    })
}

/// Choi matrix restricted to input and output levels inside the guard,
/// accumulated from the nonzero guarded entries of each Kraus operator
/// (Fock-shift operators have at most one per column).
fn guarded_choi(kraus: &[CMat], t: FockTruncation) -> CMat {
    let g = t.guarded_dim();
    let mut j = linalg::zeros(g * g, g * g);
    let mut entries: Vec<(usize, C64)> = Vec::with_capacity(g * g);
    for op in kraus {
        entries.clear();
        for i in 0..g {
            for a in 0..g {
                let v = op[(a, i)];
                if v != C64::new(0.0, 0.0) {
                    entries.push((i * g + a, v));
                }
            }
        }
        for &(p, vp) in &entries {
            for &(q, vq) in &entries {
                j[(p, q)] += vp * vq.conj();
            }
        }
    }
    j
}

/// `N^dagger = c^{-1} M` on the guarded subspace, compared through Choi
/// matrices.
pub fn check_adjoint_relation(spec: &GaussianChannelSpec) -> Result<CheckReport> {
    spec.validate()?;
    let t = spec.truncation;
    let adjoint: Vec<CMat> = spec.channel()?.kraus().iter().map(|k| k.adjoint()).collect();
    let lhs = guarded_choi(&adjoint, t);
    let rhs = guarded_choi(&spec.reversal()?.kraus(), t).unscale(spec.unitality_factor());
    let deviation = max_abs(&(lhs - rhs));
    Ok(CheckReport::new(format!("adjoint_relation_{}", spec.kind.name()), 0.0, deviation, spec.trunc_tol)
        .with("guard", t.guard as f64))
}

/// Photon-number mass above the guarded levels and mean photon number.
pub fn energy_profile(rho: &CMat, t: FockTruncation) -> (f64, f64) {
    let leakage = (t.guarded_dim()..t.dim()).map(|n| rho[(n, n)].re).sum();
    let mean = (0..t.dim()).map(|n| n as f64 * rho[(n, n)].re).sum();
    (leakage, mean)
}

/// `H(N(rho)) - H(rho) >= D(rho || M o N(rho)) + log c`.
pub fn check_bosonic_entropy_gain(spec: &GaussianChannelSpec, rho: &CMat) -> Result<CheckReport> {
    spec.validate()?;
    let t = spec.truncation;
    if rho.nrows() != t.dim() {
        return Err(Error::DimensionMismatch {
            context: "bosonic input",
            expected: t.dim(),
            found: rho.nrows(),
        });
    }
    let (leakage, mean) = energy_profile(rho, t);
    if leakage > INPUT_LEAKAGE_TOL {
        return Err(Error::HighEnergyInput { leakage });
    }
    if mean > t.n_max as f64 / 4.0 {
        return Err(Error::OutOfRange {
            what: "mean photon number",
            value: mean,
        });
    }
    let ch = spec.channel()?;
    let out = hermitize(&ch.apply(rho));
    let back = hermitize(&spec.reversal()?.apply(&out));
    let lhs = entropy(&out)? - entropy(rho)?;
    let rhs = rel_entropy(rho, &back)?.bits + spec.unitality_factor().log2();
    Ok(
        CheckReport::new(format!("entropy_gain_{}", spec.kind.name()), lhs, rhs, spec.trunc_tol + 1e-6)
            .with("output_leakage", 1.0 - out.trace().re)
            .with("reversal_leakage", 1.0 - back.trace().re)
            .with("mean_photon_number", mean),
    )
}

pub fn fock_state(n: usize, t: FockTruncation) -> CMat {
    linalg::projector(&linalg::ket(t.dim(), n))
}

/// Geometric populations with the given mean, cut at the guarded levels
/// and renormalized.
pub fn thermal_state(mean: f64, t: FockTruncation) -> CMat {
    let q = mean / (1.0 + mean);
    let mut p: Vec<f64> = (0..t.dim())
        .map(|n| if n <= t.guarded_max() { q.powi(n as i32) } else { 0.0 })
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    linalg::from_real_diag(&p)
}

/// Coherent state cut at the guarded levels and renormalized.
pub fn coherent_state(alpha: f64, t: FockTruncation) -> CMat {
    let mut v = linalg::CVec::zeros(t.dim());
    let mut amp = 1.0;
    for n in 0..=t.guarded_max() {
        if n > 0 {
            amp *= alpha / (n as f64).sqrt();
        }
        v[n] = C64::new(amp, 0.0);
    }
    let norm = v.norm();
    linalg::projector(&v.unscale(norm))
}

/// Low-energy probes used by the sweep.
pub fn test_states(t: FockTruncation) -> Vec<(&'static str, CMat)> {
    vec![
        ("vacuum", fock_state(0, t)),
        ("fock1", fock_state(1, t)),
        ("thermal1", thermal_state(1.0, t)),
        ("coherent1", coherent_state(1.0, t)),
    ]
}

pub const ETA_GRID: [f64; 4] = [0.7, 0.8, 0.9, 0.99];
pub const GAIN_GRID: [f64; 3] = [1.01, 1.1, 1.25];

/// Every loss, amplifier and composition point of the default grid.
pub fn default_grid() -> Vec<GaussianKind> {
    let mut kinds: Vec<GaussianKind> = ETA_GRID.iter().map(|&eta| GaussianKind::Loss { eta }).collect();
    kinds.extend(GAIN_GRID.iter().map(|&gain| GaussianKind::Amplifier { gain }));
    for &eta in &ETA_GRID {
        for &gain in &GAIN_GRID {
            kinds.push(GaussianKind::Composition { eta, gain });
        }
    }
    kinds
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub kind: String,
    pub parameter: String,
    pub n_max: usize,
    pub guard: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub leakage: f64,
    pub holds: bool,
}

fn row(check: &str, spec: &GaussianChannelSpec, rep: &CheckReport, leakage: f64) -> SweepRow {
    SweepRow {
        kind: format!("{}/{}", spec.kind.name(), check),
        parameter: spec.kind.parameter_label(),
        n_max: spec.truncation.n_max,
        guard: spec.truncation.guard,
        lhs: rep.lhs,
        rhs: rep.rhs,
        slack: rep.slack,
        leakage,
        holds: rep.holds,
    }
}

/// All bosonic checks for one grid point.
pub fn sweep_point(spec: &GaussianChannelSpec) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let unital = check_almost_unital(spec)?;
    rows.push(row("almost_unital", spec, &unital, unital.aux_num("leakage").unwrap_or(0.0)));
    let adj = check_adjoint_relation(spec)?;
    rows.push(row("adjoint_relation", spec, &adj, 0.0));
    for (name, rho) in test_states(spec.truncation) {
        let rep = check_bosonic_entropy_gain(spec, &rho)?;
        let leak = rep.aux_num("reversal_leakage").unwrap_or(0.0);
        rows.push(row(&format!("entropy_gain:{name}"), spec, &rep, leak));
    }
    Ok(rows)
}

/// Loss semigroup `B_eta o B_eta' = B_{eta eta'}` on the guarded subspace.
pub fn semigroup_deviation(eta: f64, eta2: f64, t: FockTruncation) -> Result<f64> {
    let lhs = GaussianMap::then(loss_channel(eta2, t)?, loss_channel(eta, t)?);
    let rhs = loss_channel(eta * eta2, t)?;
    Ok(max_abs(&(guarded_choi(&lhs.kraus(), t) - guarded_choi(rhs.kraus(), t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_distance;

    fn small() -> FockTruncation {
        FockTruncation::new(20, 8).unwrap()
    }

    #[test]
    fn trivial_parameters_give_identity() {
        let t = small();
        let x = thermal_state(1.0, t);
        assert!(max_abs(&(loss_channel(1.0, t).unwrap().apply(&x) - &x)) < 1e-14);
        assert!(max_abs(&(amp_channel(1.0, t).unwrap().apply(&x) - &x)) < 1e-14);
        let out = loss_channel(0.0, t).unwrap().apply(&coherent_state(1.2, t));
        assert!(trace_distance(&out, &fock_state(0, t)) < 1e-10);
    }

    #[test]
    fn trace_preserving_on_low_levels() {
        let t = FockTruncation::default();
        let amp = amp_channel(1.1, t).unwrap();
        let s = amp.kraus_sum();
        for n in 0..=t.guarded_max() {
            assert!((s[(n, n)].re - 1.0).abs() < 1e-6, "level {n}: {}", s[(n, n)].re);
        }
        let loss = loss_channel(0.8, t).unwrap();
        assert!(loss.trace_preservation_defect() < 1e-12);
        assert!(amp.flags().trace_non_increasing);
    }

    #[test]
    fn amplifier_identity_is_exact() {
        let spec = GaussianChannelSpec::new(GaussianKind::Amplifier { gain: 1.2 }, FockTruncation::default()).unwrap();
        let rep = check_almost_unital(&spec).unwrap();
        assert!(rep.holds && rep.rhs < 1e-12, "{rep:?}");
    }

    #[test]
    fn loss_identity_needs_a_large_guard() {
        let t = FockTruncation::default();
        let weak = GaussianChannelSpec::new(GaussianKind::Loss { eta: 0.99 }, t).unwrap();
        assert!(check_almost_unital(&weak).unwrap().holds);
        let strong = GaussianChannelSpec::new(GaussianKind::Loss { eta: 0.8 }, t).unwrap();
        let rep = check_almost_unital(&strong).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.aux.get("truncation_dominated"), Some(&crate::theorems::Aux::Flag(true)));
        // the deviation is exactly the truncated tail
        assert!((rep.rhs - rep.aux_num("leakage").unwrap()).abs() < 1e-9);
        let g = auto_guard(GaussianKind::Loss { eta: 0.7 }, 40, 15, TRUNC_TOL).unwrap();
        assert!(g > 15 && g < 40);
    }

    #[test]
    fn adjoint_relations_hold_on_the_grid() {
        let t = FockTruncation::default();
        for kind in [
            GaussianKind::Loss { eta: 0.8 },
            GaussianKind::Amplifier { gain: 1.25 },
            GaussianKind::Composition { eta: 0.9, gain: 1.1 },
            GaussianKind::Loss { eta: 1.0 },
        ] {
            let rep = check_adjoint_relation(&GaussianChannelSpec::new(kind, t).unwrap()).unwrap();
            assert!(rep.holds, "{rep:?}");
        }
    }

    #[test]
    fn vacuum_through_loss_is_tight() {
        let t = FockTruncation::default();
        let spec = GaussianChannelSpec::new(GaussianKind::Loss { eta: 0.8 }, t).unwrap();
        let rep = check_bosonic_entropy_gain(&spec, &fock_state(0, t)).unwrap();
        assert!(rep.lhs.abs() < 1e-12);
        // D(vac || A_{1/eta}(vac)) = -log eta cancels the log eta term
        assert!(rep.rhs.abs() < 1e-9, "{rep:?}");
        assert!(rep.holds);
    }

    #[test]
    fn entropy_gain_examples() {
        let t = FockTruncation::new(30, 10).unwrap();
        let spec = GaussianChannelSpec::new(GaussianKind::Loss { eta: 0.9 }, t).unwrap();
        assert!(check_bosonic_entropy_gain(&spec, &fock_state(1, t)).unwrap().holds);
        let t = FockTruncation::default();
        let spec = GaussianChannelSpec::new(GaussianKind::Amplifier { gain: 1.1 }, t).unwrap();
        assert!(check_bosonic_entropy_gain(&spec, &thermal_state(1.0, t)).unwrap().holds);
    }

    #[test]
    fn high_energy_input_rejected() {
        let t = small();
        let spec = GaussianChannelSpec::new(GaussianKind::Loss { eta: 0.9 }, t).unwrap();
        assert!(matches!(
            check_bosonic_entropy_gain(&spec, &fock_state(t.n_max, t)),
            Err(Error::HighEnergyInput { .. })
        ));
    }

    #[test]
    fn loss_semigroup() {
        let t = small();
        assert!(semigroup_deviation(0.9, 0.7, t).unwrap() < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(loss_channel(1.2, small()).is_err());
        assert!(amp_channel(0.5, small()).is_err());
        assert!(FockTruncation::new(10, 10).is_err());
        assert!(FockTruncation::new(0, 0).is_err());
    }
}
