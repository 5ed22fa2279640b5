//! The rotation density `p(t)` and its discretization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which closed form of `p(t)` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightForm {
    /// `(pi/2) / (cosh(pi t) + 1)`, a probability density.
    #[default]
    Normalized,
    /// `(pi/2) / (cosh(t) + 1)`, which integrates to `pi`. Kept for
    /// comparison only.
    Printed,
}

pub fn p_weight(t: f64) -> f64 {
    p_weight_form(t, WeightForm::Normalized)
}

pub fn p_weight_form(t: f64, form: WeightForm) -> f64 {
    let x = match form {
        WeightForm::Normalized => std::f64::consts::PI * t,
        WeightForm::Printed => t,
    };
    if x.abs() > 700.0 {
        return 0.0;
    }
    std::f64::consts::FRAC_PI_2 / (x.cosh() + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    GaussLegendre,
    Trapezoid,
}

/// Discretization of `int dt p(t) f(t)` on `[-T, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub half_width: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub form: WeightForm,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 101,
            half_width: 10.0,
            scheme: Scheme::GaussLegendre,
            form: WeightForm::Normalized,
        }
    }
}

/// Nodes `t_j` and weights `w_j`, with `sum_j w_j = 1` unless the raw
/// printed form is requested.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `sum_j w_j` before renormalization.
    pub raw_mass: f64,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        // recompute derivative at the converged node
        let mut p0 = 1.0;
        let mut p1 = 0.0;
        for j in 0..n {
            let p2 = p1;
            p1 = p0;
            p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
        }
        if z * z != 1.0 {
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Three Gauss-Legendre panels `[-T, -T/5]`, `[-T/5, T/5]`, `[T/5, T]`; the
/// central panel gets the odd node count nearest `0.3 n`. Falls back to a
/// single panel for `n < 7`.
pub fn composite_gauss_legendre(n: usize, t_max: f64) -> (Vec<f64>, Vec<f64>) {
    let panel = |a: f64, b: f64, m: usize, x: &mut Vec<f64>, w: &mut Vec<f64>| {
        let (xs, ws) = gauss_legendre(m);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        x.extend(xs.iter().map(|v| mid + half * v));
        w.extend(ws.iter().map(|v| half * v));
    };
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    if n < 7 {
        panel(-t_max, t_max, n, &mut x, &mut w);
        return (x, w);
    }
    let mut center = (0.3 * n as f64).round() as usize;
    if center % 2 == 0 {
        center += 1;
    }
    let outer = (n - center) / 2;
    let c = t_max / 5.0;
    panel(-t_max, -c, outer, &mut x, &mut w);
    panel(-c, c, center, &mut x, &mut w);
    panel(c, t_max, outer, &mut x, &mut w);
    (x, w)
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || self.nodes % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "quadrature node count must be odd and positive, got {}",
                self.nodes
            )));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "quadrature half-width must be positive, got {}",
                self.half_width
            )));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Quadrature> {
        self.validate()?;
        let t_max = self.half_width;
        let (nodes, base): (Vec<f64>, Vec<f64>) = match self.scheme {
            Scheme::GaussLegendre => composite_gauss_legendre(self.nodes, t_max),
            Scheme::Trapezoid => {
                let n = self.nodes;
                if n == 1 {
                    (vec![0.0], vec![2.0 * t_max])
                } else {
                    let h = 2.0 * t_max / (n - 1) as f64;
                    let x = (0..n).map(|i| -t_max + i as f64 * h).collect();
                    let w = (0..n)
                        .map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h })
                        .collect();
                    (x, w)
                }
            }
        };
        let mut weights: Vec<f64> = nodes
            .iter()
            .zip(&base)
            .map(|(&t, &b)| b * p_weight_form(t, self.form))
            .collect();
        let raw_mass: f64 = weights.iter().sum();
        if self.form == WeightForm::Normalized {
            for w in weights.iter_mut() {
                *w /= raw_mass;
            }
        }
        Ok(Quadrature {
            nodes,
            weights,
            raw_mass,
        })
    }
}

impl Quadrature {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
