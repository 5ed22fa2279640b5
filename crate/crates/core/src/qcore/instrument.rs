//! Quantum instruments and ensembles.

use crate::error::{Error, Result};
use crate::linalg::{self, kron, max_abs, CMat, CVec};

use super::channel::Channel;
use super::map::LinearMap;
use super::state::DensityOperator;

pub const INSTRUMENT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub label: String,
    pub kraus: Vec<CMat>,
}

/// Collection of CP trace-non-increasing maps whose sum is trace preserving.
#[derive(Clone, Debug)]
pub struct Instrument {
    in_dim: usize,
    out_dim: usize,
    outcomes: Vec<Outcome>,
    efficient: bool,
}

impl Instrument {
    pub fn new(outcomes: Vec<Outcome>) -> Result<Self> {
        Self::with_tol(outcomes, INSTRUMENT_TOL)
    }

    pub fn with_tol(outcomes: Vec<Outcome>, tol: f64) -> Result<Self> {
        let first = outcomes
            .first()
            .and_then(|o| o.kraus.first())
            .ok_or_else(|| Error::InvalidInstrument("no outcomes".into()))?;
        let (out_dim, in_dim) = first.shape();
        let mut total = linalg::zeros(in_dim, in_dim);
        for (x, o) in outcomes.iter().enumerate() {
            if o.kraus.is_empty() {
                return Err(Error::InvalidInstrument(format!("outcome {x} has no Kraus operators")));
            }
            for k in &o.kraus {
                if k.shape() != (out_dim, in_dim) {
                    return Err(Error::InvalidInstrument(format!(
                        "outcome {x}: Kraus shape {:?}, expected {:?}",
                        k.shape(),
                        (out_dim, in_dim)
                    )));
                }
                total += k.adjoint() * k;
            }
        }
        let deviation = max_abs(&(total - linalg::identity(in_dim)));
        if deviation > tol {
            return Err(Error::NotTracePreserving { deviation });
        }
        let efficient = outcomes.iter().all(|o| o.kraus.len() == 1);
        Ok(Self {
            in_dim,
            out_dim,
            outcomes,
            efficient,
        })
    }

    /// Outcomes labelled `0, 1, ..`.
    pub fn from_kraus_lists(lists: Vec<Vec<CMat>>) -> Result<Self> {
        Self::new(
            lists
                .into_iter()
                .enumerate()
                .map(|(x, kraus)| Outcome {
                    label: x.to_string(),
                    kraus,
                })
                .collect(),
        )
    }

    /// Projective measurement in the given orthonormal basis.
    pub fn projective(basis: &[CVec]) -> Result<Self> {
        Self::from_kraus_lists(basis.iter().map(|v| vec![linalg::projector(v)]).collect())
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn is_efficient(&self) -> bool {
        self.efficient
    }

    pub fn outcome_map(&self, x: usize) -> Channel {
        Channel::from_kraus(self.outcomes[x].kraus.clone()).expect("validated outcome")
    }

    /// The single Kraus operator of each outcome; errors for inefficient
    /// instruments.
    pub fn efficient_kraus(&self) -> Result<Vec<CMat>> {
        self.outcomes
            .iter()
            .enumerate()
            .map(|(x, o)| {
                if o.kraus.len() == 1 {
                    Ok(o.kraus[0].clone())
                } else {
                    Err(Error::InefficientInstrument {
                        outcome: x,
                        kraus: o.kraus.len(),
                    })
                }
            })
            .collect()
    }

    /// Sum of all outcome maps.
    pub fn sum_channel(&self) -> Channel {
        let kraus = self.outcomes.iter().flat_map(|o| o.kraus.iter().cloned()).collect();
        Channel::from_kraus(kraus).expect("validated instrument")
    }

    /// `P -> sum_x N^x(P) (x) |x><x|`, classical register last.
    pub fn instrument_channel(&self) -> Channel {
        let n = self.outcomes.len();
        let mut kraus = Vec::new();
        for (x, o) in self.outcomes.iter().enumerate() {
            let tag = linalg::ket(n, x);
            let tag = CMat::from_column_slice(n, 1, tag.as_slice());
            for k in &o.kraus {
                kraus.push(kron(k, &tag));
            }
        }
        Channel::from_kraus(kraus).expect("validated instrument")
    }

    /// Unnormalized post-measurement operators `N^x(rho)`.
    pub fn branches(&self, rho: &CMat) -> Vec<CMat> {
        (0..self.outcomes.len())
            .map(|x| self.outcome_map(x).apply(rho))
            .collect()
    }

    pub fn probabilities(&self, rho: &CMat) -> Vec<f64> {
        self.branches(rho).iter().map(|b| b.trace().re).collect()
    }

    /// `(p_x, N^x(rho)/p_x)`; branches with zero weight get `None`.
    pub fn post_states(&self, rho: &CMat) -> Vec<(f64, Option<CMat>)> {
        self.branches(rho)
            .into_iter()
            .map(|b| {
                let p = b.trace().re;
                if p > 1e-15 {
                    (p, Some(b.unscale(p)))
                } else {
                    (p.max(0.0), None)
                }
            })
            .collect()
    }
}

/// Probability vector with matching states on a common system.
#[derive(Clone, Debug)]
pub struct Ensemble {
    probs: Vec<f64>,
    states: Vec<DensityOperator>,
}

impl Ensemble {
    pub fn new(probs: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if probs.len() != states.len() || probs.is_empty() {
            return Err(Error::InvalidEnsemble(format!(
                "{} probabilities for {} states",
                probs.len(),
                states.len()
            )));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidEnsemble("negative probability".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidEnsemble(format!("probabilities sum to {s}")));
        }
        let dims = states[0].dims();
        if states.iter().any(|st| st.dims() != dims) {
            return Err(Error::InvalidEnsemble("states live on different systems".into()));
        }
        Ok(Self { probs, states })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn average(&self) -> CMat {
        let d = self.dim();
        let mut out = linalg::zeros(d, d);
        for (p, s) in self.probs.iter().zip(&self.states) {
            out += s.matrix().scale(*p);
        }
        out
    }

    /// `sum_x p_x rho_x (x) |x><x|` on the flattened system, register last.
    pub fn cq_matrix(&self) -> CMat {
        let blocks: Vec<CMat> = self
            .probs
            .iter()
            .zip(&self.states)
            .map(|(p, s)| s.matrix().scale(*p))
            .collect();
        linalg::attach_classical(&blocks)
    }

    /// Each member pushed through `channel`.
    pub fn map_through(&self, channel: &Channel) -> Result<Vec<CMat>> {
        if channel.in_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "ensemble channel",
                expected: self.dim(),
                found: channel.in_dim(),
            });
        }
        Ok(self.states.iter().map(|s| channel.apply(s.matrix())).collect())
    }
}
