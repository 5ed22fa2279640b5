//! One function per suite turning `(config, trial)` into report rows.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::config::{BosonicConfig, CampaignConfig, Suite};
use super::report::Row;
use crate::bosonic::{
    self, auto_guard, check_adjoint_relation, check_almost_unital, check_bosonic_entropy_gain, FockTruncation,
    GaussianChannelSpec, GaussianKind, SweepRow,
};
use crate::cpdp::{self, Interaction, TripartiteConfiguration};
use crate::error::Result;
use crate::linalg::{self, hermitize, kron, permute_systems, CMat};
use crate::qcore::map::apply_on_factor;
use crate::qcore::random::{
    haar_unitary, random_channel, random_density_matrix, random_instrument_with, random_probability_vector,
    random_subunital_channel, trial_rng, TrialRng,
};
use crate::qcore::{Channel, DensityOperator, Ensemble};
use crate::theorems::{self as th, CheckReport};

/// Rows of one trial with their common fingerprint.
pub(crate) struct TrialRows {
    suite: Suite,
    seed: u64,
    trial: Option<u64>,
    rows: Vec<Row>,
}

impl TrialRows {
    fn new(suite: Suite, seed: u64, trial: Option<u64>) -> Self {
        Self {
            suite,
            seed,
            trial,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, dims: &[usize], rep: CheckReport) {
        self.rows.push(Row::from_report(self.suite, self.seed, self.trial, dims, &rep));
    }

    fn extend(&mut self, dims: &[usize], reps: Vec<CheckReport>) {
        for rep in reps {
            self.push(dims, rep);
        }
    }

    /// Records `result`, or an error row when it failed.
    fn record(&mut self, dims: &[usize], result: Result<Vec<CheckReport>>) {
        match result {
            Ok(reps) => self.extend(dims, reps),
            Err(e) => self.rows.push(Row::error(self.suite, self.seed, self.trial, dims, &e)),
        }
    }

    pub(crate) fn into_rows(self) -> Vec<Row> {
        self.rows
    }
}

fn renamed(mut reps: Vec<CheckReport>, suffix: &str) -> Vec<CheckReport> {
    for r in &mut reps {
        r.name = format!("{}_{suffix}", r.name);
    }
    reps
}

fn pick(pool: &[usize], rng: &mut TrialRng) -> usize {
    *pool.choose(rng).expect("validated non-empty dimension pool")
}

/// Random Stinespring channel with between the smallest admissible and
/// `max_env` environment dimensions.
fn draw_channel(d_in: usize, d_out: usize, max_env: usize, rng: &mut TrialRng) -> Result<Channel> {
    let min_env = d_in.div_ceil(d_out);
    let env = rng.random_range(min_env..=max_env.max(min_env));
    random_channel(d_in, d_out, env, rng)
}

fn rng_for(config: &CampaignConfig, suite: Suite, trial: u64) -> TrialRng {
    trial_rng(config.master_seed, suite.name(), trial)
}

/// Instances every run evaluates regardless of the random trials.
pub(crate) fn fixed_instances(config: &CampaignConfig, suite: Suite) -> Vec<Row> {
    let mut out = TrialRows::new(suite, config.master_seed, None);
    match suite {
        Suite::EntropyGain => {
            // dephasing on |+>: H-gain and D(rho || N^dag N rho) are both one bit
            let plus = CMat::from_element(2, 2, linalg::r(0.5));
            let res = th::check_entropy_gain(&plus, &Channel::dephasing(2)).map(|rep| {
                let tight = CheckReport::equality("entropy_gain_tight_dephasing", rep.lhs, rep.rhs, th::GAIN_TOL);
                vec![rep, tight]
            });
            out.record(&[2, 2], res);
        }
        Suite::Bosonic => {
            let t = FockTruncation::new(config.bosonic.n_max, config.bosonic.min_guard.min(config.bosonic.n_max - 1));
            let res = t.and_then(|t| {
                let dev = bosonic::semigroup_deviation(0.9, 0.8, t)?;
                Ok(vec![CheckReport::new("loss_semigroup", 0.0, dev, config.bosonic.trunc_tol)
                    .with("guard", t.guard as f64)])
            });
            out.record(&[config.bosonic.n_max + 1], res);
        }
        _ => {}
    }
    out.into_rows()
}

pub(crate) fn run_trial(config: &CampaignConfig, suite: Suite, trial: u64) -> Vec<Row> {
    match suite {
        Suite::EntropyGain => entropy_gain(config, trial),
        Suite::Recovery => recovery(config, trial),
        Suite::InfoGain => info_gain(config, trial),
        Suite::InfoGainQsi => info_gain_qsi(config, trial),
        Suite::Disturbance => disturbance(config, trial),
        Suite::Cpdp => cpdp_trial(config, trial),
        Suite::Bosonic => bosonic_point(config, trial),
    }
}

fn entropy_gain(config: &CampaignConfig, trial: u64) -> Vec<Row> {
    let suite = Suite::EntropyGain;
    let pool = config.dims_for(suite);
    let mut rng = rng_for(config, suite, trial);
    let mut out = TrialRows::new(suite, config.master_seed, Some(trial));

    let d = pick(&pool, &mut rng);
    let d_out = pick(&pool, &mut rng);
    let rank = rng.random_range(1..=d);
    let res = (|| {
        let rho = random_density_matrix(d, rank, &mut rng)?;
        let ch = draw_channel(d, d_out, 4, &mut rng)?;
        Ok(vec![th::check_entropy_gain(&rho, &ch)?])
    })();
    out.record(&[d, d_out], res);

    // subunital chain needs an output at least as large as the input
    let wider: Vec<usize> = pool.iter().copied().filter(|&x| x >= d).collect();
    let d_sub = pick(&wider, &mut rng);
    let terms = rng.random_range(1..=3);
    let res = (|| {
        let ch = random_subunital_channel(d, d_sub, terms, &mut rng)?;
        let rho = random_density_matrix(d, rng.random_range(1..=d), &mut rng)?;
        let tau = random_density_matrix(d, d, &mut rng)?;
        th::check_entropy_gain_recovery(&rho, &ch, &tau)
    })();
    out.record(&[d, d_sub], res);

    let d_b = pick(&pool, &mut rng);
    let res = (|| {
        let ch = draw_channel(d, d_out, 4, &mut rng)?;
        let rho_ab = random_density_matrix(d * d_b, rng.random_range(1..=d * d_b), &mut rng)?;
        Ok(vec![th::check_cond_entropy_gain(&rho_ab, d, d_b, &ch)?])
    })();
    out.record(&[d, d_b], res);

    let small: Vec<usize> = pool.iter().copied().filter(|&x| x <= 3).collect();
    if trial < config.min_gain_trials && !small.is_empty() {
        let dm = pick(&small, &mut rng);
        let res = (|| {
            let ch = draw_channel(dm, dm, dm, &mut rng)?;
            let m = th::minimal_entropy_gain(&ch, &config.optimizer, &mut rng)?;
            let floor = -(dm as f64).log2();
            Ok(vec![
                CheckReport::new("minimal_entropy_gain_upper", 0.0, m.value, th::GAIN_TOL)
                    .with("converged", m.converged)
                    .with("evaluations", m.evaluations as f64),
                CheckReport::new("minimal_entropy_gain_lower", m.value, floor, th::GAIN_TOL),
                CheckReport::new("minimal_entropy_gain_bound", m.value, m.bound_at_argmin, th::GAIN_TOL)
                    .with("lower_bound_estimate", m.lower_bound_estimate),
            ])
        })();
        out.record(&[dm, dm], res);
    }
    out.into_rows()
}

/// `rho_ABC = (id_B (x) M_{C -> AC})(rho_BC)` where `M` measures `C` in the
/// computational basis and prepares `a_x (x) |x><x|`. Exact Markov chain
/// `A - C - B`.
pub fn markov_chain_state(rho_bc: &CMat, dims: [usize; 3], rng: &mut TrialRng) -> Result<CMat> {
    let [da, db, dc] = dims;
    let mut kraus = Vec::with_capacity(da * dc);
    for x in 0..dc {
        let a = random_density_matrix(da, rng.random_range(1..=da), rng)?;
        let root = crate::matfun::sqrt_psd(&a)?;
        let ket_x = linalg::ket(dc, x);
        for j in 0..da {
            let col = root.column(j).into_owned();
            kraus.push(kron(&CMat::from_column_slice(da, 1, col.as_slice()), &CMat::from_column_slice(dc, 1, ket_x.as_slice())) * ket_x.adjoint());
        }
    }
    let m = Channel::from_kraus(kraus)?;
    let bac = apply_on_factor(&m, rho_bc, &[db, dc], 1);
    Ok(hermitize(&permute_systems(&bac, &[db, da, dc], &[1, 0, 2])))
}

fn recovery(config: &CampaignConfig, trial: u64) -> Vec<Row> {
    let suite = Suite::Recovery;
    let pool = config.dims_for(suite);
    let mut rng = rng_for(config, suite, trial);
    let mut out = TrialRows::new(suite, config.master_seed, Some(trial));
    let quad = &config.quadrature;

    let d = pick(&pool, &mut rng);
    let d_out = pick(&pool, &mut rng);
    let res = (|| {
        let sigma = random_density_matrix(d, d, &mut rng)?;
        let rho = random_density_matrix(d, rng.random_range(1..=d), &mut rng)?;
        let ch = draw_channel(d, d_out, 3, &mut rng)?;
        th::check_recoverability(&rho, &sigma, &ch, quad)
    })();
    out.record(&[d, d_out], res);

    let dc = *pool.iter().min().expect("validated non-empty dimension pool");
    let dims = [dc; 3];
    let total = dc * dc * dc;
    let res = (|| {
        let rho = random_density_matrix(total, rng.random_range(1..=total), &mut rng)?;
        Ok(vec![th::check_cmi_recovery(&rho, dims, quad)?])
    })();
    out.record(&dims, res);

    let res = (|| {
        let rho_bc = random_density_matrix(dc * dc, rng.random_range(1..=dc * dc), &mut rng)?;
        let rho = markov_chain_state(&rho_bc, dims, &mut rng)?;
        let rep = th::check_cmi_recovery(&rho, dims, quad)?;
        let f = rep.aux_num("fidelity").unwrap_or(f64::NAN);
        Ok(vec![
            CheckReport::equality("markov_cmi_zero", rep.lhs, 0.0, th::CONSISTENCY_TOL),
            CheckReport::new("markov_recovery_fidelity", f, 1.0, th::RECOVERY_TOL),
            CheckReport { name: "cmi_recovery_markov".into(), ..rep },
        ])
    })();
    out.record(&dims, res);
    out.into_rows()
}

fn info_gain(config: &CampaignConfig, trial: u64) -> Vec<Row> {
    let suite = Suite::InfoGain;
    let pool = config.dims_for(suite);
    let mut rng = rng_for(config, suite, trial);
    let mut out = TrialRows::new(suite, config.master_seed, Some(trial));

    let d = pick(&pool, &mut rng);
    let n = rng.random_range(2..=4);
    let res = (|| {
        let instr = random_instrument_with(d, d, n, true, 1, &mut rng)?;
        let rho = random_density_matrix(d, rng.random_range(1..=d), &mut rng)?;
        let mut reps = th::check_info_gain_no_qsi(&instr, &rho)?;
        reps.push(th::check_info_gain_upper(&instr, &rho)?);
        reps.push(th::check_efficient_second_law(&instr, &rho, None)?);
        Ok(reps)
    })();
    out.record(&[d, n], res);

    // pure inputs make negative Groenewold gain reachable
    let n = rng.random_range(2..=4);
    let res = (|| {
        let instr = random_instrument_with(d, d, n, false, 2, &mut rng)?;
        let rho = random_density_matrix(d, 1, &mut rng)?;
        let rep = th::check_info_gain_upper(&instr, &rho)?;
        let gain = rep.rhs;
        Ok(vec![CheckReport {
            name: "info_gain_upper_inefficient".into(),
            ..rep
        }
        .with("groenewold_gain", gain)])
    })();
    out.record(&[d, n], res);
    out.into_rows()
}

fn info_gain_qsi(config: &CampaignConfig, trial: u64) -> Vec<Row> {
    let suite = Suite::InfoGainQsi;
    let pool = config.dims_for(suite);
    let mut rng = rng_for(config, suite, trial);
    let mut out = TrialRows::new(suite, config.master_seed, Some(trial));
    let da = pick(&pool, &mut rng);
    let db = pick(&pool, &mut rng);
    let n = rng.random_range(2..=4);
    let res = (|| {
        let instr = random_instrument_with(da, da, n, true, 1, &mut rng)?;
        let rho = random_density_matrix(da * db, rng.random_range(1..=da * db), &mut rng)?;
        let quad = config.quadrature.build()?;
        th::check_info_gain_qsi(&instr, &rho, db, &quad)
    })();
    out.record(&[da, db, n], res);
    out.into_rows()
}

fn random_ensemble(d: usize, rng: &mut TrialRng) -> Result<Ensemble> {
    let k = rng.random_range(1..=4);
    let probs = random_probability_vector(k, rng);
    let mut states = Vec::with_capacity(k);
    for _ in 0..k {
        states.push(DensityOperator::single("A", random_density_matrix(d, rng.random_range(1..=d), rng)?)?);
    }
    Ensemble::new(probs, states)
}

fn disturbance(config: &CampaignConfig, trial: u64) -> Vec<Row> {
    let suite = Suite::Disturbance;
    let pool = config.dims_for(suite);
    let mut rng = rng_for(config, suite, trial);
    let mut out = TrialRows::new(suite, config.master_seed, Some(trial));
    let quad = &config.quadrature;

    let d = pick(&pool, &mut rng);
    let d_out = pick(&pool, &mut rng);
    let res = (|| {
        let ens = random_ensemble(d, &mut rng)?;
        let ch = draw_channel(d, d_out, 3, &mut rng)?;
        th::check_entropic_disturbance(&ens, &ch, quad)
    })();
    out.record(&[d, d_out], res);

    // states diagonal in a common random basis, dephased in that basis
    let res = (|| {
        let u = haar_unitary(d, &mut rng);
        let k = rng.random_range(1..=4);
        let probs = random_probability_vector(k, &mut rng);
        let mut states = Vec::with_capacity(k);
        for _ in 0..k {
            let diag = linalg::from_real_diag(&random_probability_vector(d, &mut rng));
            states.push(DensityOperator::single("A", hermitize(&(&u * diag * u.adjoint())))?);
        }
        let ens = Ensemble::new(probs, states)?;
        let kraus = (0..d)
            .map(|i| {
                let v = &u * linalg::ket(d, i);
                linalg::projector(&v)
            })
            .collect();
        let ch = Channel::from_kraus(kraus)?;
        let reps = th::check_entropic_disturbance(&ens, &ch, quad)?;
        let avg = reps[0].aux_num("average_root_fidelity").unwrap_or(f64::NAN);
        let mut reps = renamed(reps, "commuting");
        reps.push(CheckReport::new("commuting_recovery_fidelity", avg, 1.0, th::GAIN_TOL));
        Ok(reps)
    })();
    out.record(&[d, d], res);
    out.into_rows()
}

fn cpdp_trial(config: &CampaignConfig, trial: u64) -> Vec<Row> {
    let suite = Suite::Cpdp;
    let pool = config.dims_for(suite);
    let mut rng = rng_for(config, suite, trial);
    let mut out = TrialRows::new(suite, config.master_seed, Some(trial));
    let quad = &config.quadrature;
    let dims = [pick(&pool, &mut rng), pick(&pool, &mut rng), pick(&pool, &mut rng)];
    let [dr, dq, de] = dims;

    let res = (|| {
        let total = dr * dq * de;
        let c = TripartiteConfiguration::random(dims, rng.random_range(1..=total), &mut rng)?;
        let v = Interaction::random_unitary(dq, de, &mut rng);
        let (e, mut reps) = cpdp::reduced_dynamics(&c, &v, quad)?;
        let eps = reps[0].aux_num("epsilon").unwrap_or(f64::NAN).min(1.0);
        reps.extend(cpdp::converse_bound(&c, &v, &e, eps, quad)?);
        Ok(reps)
    })();
    out.record(&dims, res);

    let res = (|| {
        let rho_rq = random_density_matrix(dr * dq, rng.random_range(1..=dr * dq), &mut rng)?;
        let rho_e = random_density_matrix(de, rng.random_range(1..=de), &mut rng)?;
        let c = TripartiteConfiguration::product(&rho_rq, dr, &rho_e)?;
        let v = Interaction::random_unitary(dq, de, &mut rng);
        let (_, reps) = cpdp::reduced_dynamics(&c, &v, quad)?;
        let f = reps[0].aux_num("fidelity").unwrap_or(f64::NAN);
        let mut reps = renamed(reps, "product");
        reps.push(CheckReport::new("product_environment_fidelity", f, 1.0, th::RECOVERY_TOL));
        Ok(reps)
    })();
    out.record(&dims, res);
    out.into_rows()
}

/// Guard band for one grid point under the configured policy.
pub fn guard_for(kind: GaussianKind, cfg: &BosonicConfig) -> usize {
    cfg.guard.unwrap_or_else(|| {
        auto_guard(kind, cfg.n_max, cfg.min_guard, cfg.trunc_tol).unwrap_or(cfg.min_guard)
    })
}

fn grid_spec(kind: GaussianKind, cfg: &BosonicConfig) -> Result<GaussianChannelSpec> {
    let mut spec = GaussianChannelSpec::new(kind, FockTruncation::new(cfg.n_max, guard_for(kind, cfg))?)?;
    spec.trunc_tol = cfg.trunc_tol;
    Ok(spec)
}

fn bosonic_point(config: &CampaignConfig, trial: u64) -> Vec<Row> {
    let suite = Suite::Bosonic;
    let cfg = &config.bosonic;
    let kind = bosonic::default_grid()[trial as usize];
    let mut out = TrialRows::new(suite, config.master_seed, Some(trial));
    let dims = [cfg.n_max + 1];
    let spec = match grid_spec(kind, cfg) {
        Ok(s) => s,
        Err(e) => {
            out.record(&dims, Err(e));
            return out.into_rows();
        }
    };
    let label = |rep: CheckReport| rep.with("parameter", kind.parameter_label());
    out.record(&dims, check_almost_unital(&spec).map(|r| vec![label(r)]));
    out.record(&dims, check_adjoint_relation(&spec).map(|r| vec![label(r)]));
    for (name, rho) in bosonic::test_states(spec.truncation) {
        let res = check_bosonic_entropy_gain(&spec, &rho).map(|r| vec![label(r).with("state", name)]);
        out.record(&dims, res);
    }
    out.into_rows()
}

/// The bosonic grid as sweep rows.
pub fn bosonic_sweep(cfg: &BosonicConfig) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;
    let per_point: Vec<Result<Vec<SweepRow>>> = bosonic::default_grid()
        .into_par_iter()
        .map(|kind| bosonic::sweep_point(&grid_spec(kind, cfg)?))
        .collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}
