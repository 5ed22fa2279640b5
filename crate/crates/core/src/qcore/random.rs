//! Seeded random instances: Ginibre states, Haar unitaries, Stinespring
//! channels and instruments.
//!
//! Every trial draws from its own ChaCha20 stream derived from
//! `(master seed, suite tag, trial index)`, so results are independent of
//! scheduling and platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::matfun::psd_power;

use super::channel::Channel;
use super::instrument::Instrument;
use super::state::{DensityOperator, System};

pub type TrialRng = ChaCha20Rng;

/// 64-bit FNV-1a, used to fold a suite name into the seed.
pub fn tag_hash(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Independent stream for one trial.
pub fn trial_rng(master_seed: u64, tag: &str, trial: u64) -> TrialRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed ^ tag_hash(tag));
    rng.set_stream(trial);
    rng
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut m = linalg::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    let g = ginibre(d, 1, rng);
    let n = linalg::frobenius(&g);
    CVec::from_iterator(d, g.iter().map(|z| z / n))
}

/// Normalized `G G^dagger` with `G` a `dim x rank` Ginibre matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<CMat> {
    if rank == 0 || rank > dim {
        return Err(Error::OutOfRange {
            what: "rank",
            value: rank as f64,
        });
    }
    let g = ginibre(dim, rank, rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    Ok(linalg::hermitize(&m.unscale(t)))
}

pub fn random_density<R: Rng + ?Sized>(systems: Vec<System>, rank: usize, rng: &mut R) -> Result<DensityOperator> {
    let dim = systems.iter().map(|s| s.dim).product();
    DensityOperator::new(systems, random_density_matrix(dim, rank, rng)?)
}

/// [`random_density`] on a single system labelled `"A"` from a plain seed.
pub fn random_density_seeded(dim: usize, rank: usize, seed: u64) -> Result<DensityOperator> {
    random_density(vec![System::new("A", dim)], rank, &mut rng_from_seed(seed))
}

/// Haar unitary via QR of a Ginibre matrix with the phase of `R` removed.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let qr = ginibre(d, d, rng).qr();
    let q = qr.q();
    let rr = qr.r();
    let mut u = q;
    for j in 0..d {
        let x = rr[(j, j)];
        let ph = if x.norm() > 0.0 { x / x.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// `out_dim x in_dim` isometry: the first columns of a Haar unitary.
pub fn random_isometry<R: Rng + ?Sized>(out_dim: usize, in_dim: usize, rng: &mut R) -> Result<CMat> {
    if out_dim < in_dim {
        return Err(Error::DimensionMismatch {
            context: "isometry output dimension",
            expected: in_dim,
            found: out_dim,
        });
    }
    let u = haar_unitary(out_dim, rng);
    Ok(u.columns(0, in_dim).into_owned())
}

/// Kraus operators of the Stinespring isometry `V: A -> B (x) E` sliced on
/// the environment: `K_e[a, i] = V[a * env + e, i]`.
pub fn stinespring_kraus(v: &CMat, out_dim: usize, env_dim: usize) -> Vec<CMat> {
    let in_dim = v.ncols();
    (0..env_dim)
        .map(|e| CMat::from_fn(out_dim, in_dim, |a, i| v[(a * env_dim + e, i)]))
        .collect()
}

pub fn random_channel<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, env_dim: usize, rng: &mut R) -> Result<Channel> {
    if in_dim == 0 || out_dim == 0 || env_dim == 0 {
        return Err(Error::InvalidConfig("channel dimensions must be positive".into()));
    }
    if out_dim * env_dim < in_dim {
        return Err(Error::DimensionMismatch {
            context: "Stinespring dilation",
            expected: in_dim,
            found: out_dim * env_dim,
        });
    }
    let v = random_isometry(out_dim * env_dim, in_dim, rng)?;
    Channel::from_kraus(stinespring_kraus(&v, out_dim, env_dim))
}

pub fn random_channel_seeded(in_dim: usize, out_dim: usize, env_dim: usize, seed: u64) -> Result<Channel> {
    random_channel(in_dim, out_dim, env_dim, &mut rng_from_seed(seed))
}

/// Random mixture of `terms` Haar-unitary conjugations.
pub fn random_unital_channel<R: Rng + ?Sized>(d: usize, terms: usize, rng: &mut R) -> Result<Channel> {
    let w = random_probability_vector(terms, rng);
    let kraus = w
        .iter()
        .map(|p| haar_unitary(d, rng).scale(p.sqrt()))
        .collect();
    Channel::from_kraus(kraus)
}

/// Random mixture of isometric conjugations `A -> B` with `out_dim >= in_dim`.
/// Trace preserving and subunital; unital only when the dimensions agree.
pub fn random_subunital_channel<R: Rng + ?Sized>(
    in_dim: usize,
    out_dim: usize,
    terms: usize,
    rng: &mut R,
) -> Result<Channel> {
    let w = random_probability_vector(terms, rng);
    let mut kraus = Vec::with_capacity(terms);
    for p in w {
        kraus.push(random_isometry(out_dim, in_dim, rng)?.scale(p.sqrt()));
    }
    Channel::from_kraus(kraus)
}

/// Uniform point of the simplex.
pub fn random_probability_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn normalize_to_identity(ops: &mut [CMat]) -> Result<()> {
    let d = ops[0].ncols();
    let mut s = linalg::zeros(d, d);
    for k in ops.iter() {
        s += k.adjoint() * k;
    }
    let inv = psd_power(&linalg::hermitize(&s), -0.5)?;
    for k in ops.iter_mut() {
        *k = &*k * &inv;
    }
    Ok(())
}

/// Efficient: `A_x = V_x sqrt(Lambda_x)` with `{Lambda_x}` a random POVM and
/// `V_x` independent Haar unitaries. Otherwise each outcome is a random CP
/// map with `kraus_per_outcome` Kraus operators, jointly normalized.
pub fn random_instrument<R: Rng + ?Sized>(
    dim: usize,
    n_outcomes: usize,
    efficient: bool,
    rng: &mut R,
) -> Result<Instrument> {
    random_instrument_with(dim, dim, n_outcomes, efficient, 2, rng)
}

pub fn random_instrument_with<R: Rng + ?Sized>(
    in_dim: usize,
    out_dim: usize,
    n_outcomes: usize,
    efficient: bool,
    kraus_per_outcome: usize,
    rng: &mut R,
) -> Result<Instrument> {
    if n_outcomes == 0 || in_dim == 0 || out_dim == 0 {
        return Err(Error::InvalidConfig("instrument dimensions must be positive".into()));
    }
    if efficient {
        if out_dim < in_dim {
            return Err(Error::DimensionMismatch {
                context: "efficient instrument output",
                expected: in_dim,
                found: out_dim,
            });
        }
        let mut parts: Vec<CMat> = (0..n_outcomes)
            .map(|_| {
                let g = ginibre(in_dim, in_dim, rng);
                &g * g.adjoint()
            })
            .collect();
        let mut s = linalg::zeros(in_dim, in_dim);
        for p in &parts {
            s += p;
        }
        let inv = psd_power(&linalg::hermitize(&s), -0.5)?;
        for p in parts.iter_mut() {
            *p = linalg::hermitize(&(&inv * &*p * &inv));
        }
        let mut lists = Vec::with_capacity(n_outcomes);
        for p in parts {
            let root = psd_power(&p, 0.5)?;
            let v = random_isometry(out_dim, in_dim, rng)?;
            lists.push(vec![v * root]);
        }
        Instrument::from_kraus_lists(lists)
    } else {
        let k = kraus_per_outcome.max(2);
        let mut ops: Vec<CMat> = (0..n_outcomes * k)
            .map(|_| ginibre(out_dim, in_dim, rng))
            .collect();
        normalize_to_identity(&mut ops)?;
        let lists = ops.chunks(k).map(|c| c.to_vec()).collect();
        Instrument::from_kraus_lists(lists)
    }
}

pub fn random_instrument_seeded(dim: usize, n_outcomes: usize, efficient: bool, seed: u64) -> Result<Instrument> {
    random_instrument(dim, n_outcomes, efficient, &mut rng_from_seed(seed))
}
