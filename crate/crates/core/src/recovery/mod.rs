//! Recovery maps: Petz, rotated Petz, the integrated recovery channel, the
//! explicit conditional-mutual-information recovery, the adjoint-based
//! recovery and Uhlmann isometries.

mod adjoint;
mod cmi;
mod quadrature;
mod uhlmann;

pub use adjoint::{adjoint_recovery, adjoint_recovery_map};
pub use cmi::{integrated_cmi_recovery, CmiRecovery};
pub use quadrature::{gauss_legendre, p_weight, p_weight_form, Quadrature, QuadratureSpec, Scheme, WeightForm};
pub use uhlmann::{uhlmann_isometry, uhlmann_from_amplitudes, Uhlmann};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::matfun::{eig_hermitian_tol, Spectrum};
use crate::qcore::{Channel, LinearMap};

/// Reference data shared by every rotated Petz map of a pair `(sigma, N)`.
#[derive(Clone, Debug)]
pub struct PetzFamily {
    channel: Channel,
    sigma: Spectrum,
    image: Spectrum,
}

/// `(sigma, N, t)` describing `U_{sigma,-t} o P_{sigma,N} o U_{N(sigma),t}`.
#[derive(Clone, Debug)]
pub struct RotatedPetzSpec {
    pub sigma: CMat,
    pub channel: Channel,
    pub t: f64,
}

impl RotatedPetzSpec {
    pub fn build(&self) -> Result<Channel> {
        rotated_petz(&self.sigma, &self.channel, self.t)
    }
}

fn psd_spectrum(m: &CMat) -> Result<Spectrum> {
    let s = eig_hermitian_tol(&linalg::hermitize(m), 1e-8)?;
    if s.min_eigenvalue() < -s.cutoff().max(1e-12) {
        return Err(Error::Domain {
            eigenvalue: s.min_eigenvalue(),
        });
    }
    Ok(s)
}

impl PetzFamily {
    pub fn new(sigma: &CMat, channel: &Channel) -> Result<Self> {
        if sigma.nrows() != channel.in_dim() {
            return Err(Error::DimensionMismatch {
                context: "recovery reference state",
                expected: channel.in_dim(),
                found: sigma.nrows(),
            });
        }
        let sigma_spec = psd_spectrum(sigma)?;
        let image = psd_spectrum(&channel.apply(sigma))?;
        Ok(Self {
            channel: channel.clone(),
            sigma: sigma_spec,
            image,
        })
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    /// `Pi_{N(sigma)}`.
    pub fn image_support(&self) -> CMat {
        self.image.support_projector()
    }

    /// Kraus operators `sigma^{1/2 - i t} K_k^dagger N(sigma)^{-1/2 + i t}` of
    /// the rotated Petz map at rotation `t`.
    pub fn kraus_at(&self, t: f64) -> Vec<CMat> {
        let left = self.sigma.power(C64::new(0.5, -t)).expect("validated PSD");
        let right = self.image.power(C64::new(-0.5, t)).expect("validated PSD");
        self.channel
            .kraus()
            .iter()
            .map(|k| &left * k.adjoint() * &right)
            .collect()
    }

    pub fn rotated(&self, t: f64) -> Channel {
        Channel::from_kraus(self.kraus_at(t)).expect("consistent shapes")
    }

    /// Kraus operators of `Q -> Tr{(I - Pi_{N(sigma)}) Q} tau`.
    pub fn completion_kraus(&self, tau: &CMat) -> Result<Vec<CMat>> {
        let dout = self.channel.out_dim();
        let din = self.channel.in_dim();
        if tau.nrows() != din {
            return Err(Error::DimensionMismatch {
                context: "completion state",
                expected: din,
                found: tau.nrows(),
            });
        }
        let ts = psd_spectrum(tau)?;
        let cut = self.image.cutoff();
        let mut out = Vec::new();
        for (m, &lm) in self.image.eigenvalues.iter().enumerate() {
            if lm.abs() > cut {
                continue;
            }
            let bra = self.image.eigenvectors.column(m).adjoint();
            for (j, &tj) in ts.eigenvalues.iter().enumerate() {
                if !ts.in_support(tj) {
                    continue;
                }
                let ket = ts.eigenvectors.column(j);
                out.push((&ket * &bra).scale(tj.sqrt()));
            }
        }
        debug_assert!(out.iter().all(|k| k.shape() == (din, dout)));
        Ok(out)
    }

    /// `Tr{(I - Pi) Q} tau + sum_j w_j R^{t_j/2}(Q)`, compressed to at most
    /// `din * dout` Kraus operators.
    pub fn integrated(&self, tau: &CMat, quad: &Quadrature) -> Result<Channel> {
        let mut kraus = self.completion_kraus(tau)?;
        for (&t, &w) in quad.nodes.iter().zip(&quad.weights) {
            let s = w.sqrt();
            kraus.extend(self.kraus_at(t / 2.0).into_iter().map(|k| k.scale(s)));
        }
        Channel::from_kraus(kraus)?.compress()
    }
}

/// `P_{sigma,N}(Q) = sigma^{1/2} N^dagger(N(sigma)^{-1/2} Q N(sigma)^{-1/2}) sigma^{1/2}`.
pub fn petz_map(sigma: &CMat, channel: &Channel) -> Result<Channel> {
    Ok(PetzFamily::new(sigma, channel)?.rotated(0.0))
}

pub fn rotated_petz(sigma: &CMat, channel: &Channel, t: f64) -> Result<Channel> {
    Ok(PetzFamily::new(sigma, channel)?.rotated(t))
}

/// The integrated recovery channel; `tau` defaults to the maximally mixed
/// state on the input space.
pub fn integrated_recovery(
    sigma: &CMat,
    channel: &Channel,
    tau: Option<&CMat>,
    quad: &QuadratureSpec,
) -> Result<Channel> {
    let fam = PetzFamily::new(sigma, channel)?;
    let d = channel.in_dim();
    let default_tau = linalg::identity(d).unscale(d as f64);
    fam.integrated(tau.unwrap_or(&default_tau), &quad.build()?)
}
