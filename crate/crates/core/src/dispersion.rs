//! Dispersion relations `eps(k)`, radial in `k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DispersionKind {
    /// `eps(k) = 4 pi^2 beta |k|^2`, the transform of a centered Gaussian
    /// jump density of variance parameter `beta`.
    Gaussian { beta: f64 },
    /// Piecewise-linear in `|k|` through the given nodes, continued as
    /// `eps_last (|k| / k_last)^2` past the table. The caller declares a
    /// quadratic lower bound `eps >= a |k|^2` on `|k| <= radius`.
    Tabulated {
        k: Vec<f64>,
        eps: Vec<f64>,
        a: f64,
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub d: usize,
    #[serde(flatten)]
    pub kind: DispersionKind,
}

/// Surface area of the unit sphere in `R^d`, `2 pi^(d/2) / Gamma(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// `Gamma(d / 2)` for a positive integer `d`.
pub fn gamma_half(d: usize) -> f64 {
    assert!(d >= 1);
    let (mut g, mut x) = if d.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = d as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

impl Dispersion {
    pub fn gaussian(d: usize, beta: f64) -> Result<Self> {
        let s = Self {
            d,
            kind: DispersionKind::Gaussian { beta },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn tabulated(d: usize, k: Vec<f64>, eps: Vec<f64>, a: f64, radius: f64) -> Result<Self> {
        let s = Self {
            d,
            kind: DispersionKind::Tabulated { k, eps, a, radius },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("d", "dimension must be at least 1"));
        }
        match &self.kind {
            DispersionKind::Gaussian { beta } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(Error::invalid("beta", "must be positive and finite"));
                }
            }
            DispersionKind::Tabulated { k, eps, a, radius } => {
                if k.len() != eps.len() || k.len() < 2 {
                    return Err(Error::invalid("table", "need at least two (k, eps) nodes"));
                }
                if k[0] != 0.0 || eps[0] != 0.0 {
                    return Err(Error::invalid("table", "must start at eps(0) = 0"));
                }
                if k.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("table", "k must be strictly increasing"));
                }
                if eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                    return Err(Error::invalid("table", "eps must be finite and nonnegative"));
                }
                if !(*a > 0.0 && *radius > 0.0) {
                    return Err(Error::invalid("table", "quadratic bound (a, radius) must be positive"));
                }
                let probe = k
                    .iter()
                    .copied()
                    .filter(|&x| x > 0.0 && x <= *radius)
                    .chain(std::iter::once(*radius));
                for x in probe {
                    let e = self.eval_radial(x);
                    if e < a * x * x * (1.0 - 1e-12) {
                        return Err(Error::invalid(
                            "table",
                            format!("declared bound eps >= {a} k^2 fails at k = {x} (eps = {e})"),
                        ));
                    }
                }
                if !(self.quadratic_floor() > 0.0) {
                    return Err(Error::invalid("table", "eps must be positive away from k = 0"));
                }
            }
        }
        Ok(())
    }

    pub fn eval_radial(&self, r: f64) -> f64 {
        match &self.kind {
            DispersionKind::Gaussian { beta } => 4.0 * PI * PI * beta * r * r,
            DispersionKind::Tabulated { k, eps, .. } => {
                let last = k.len() - 1;
                if r >= k[last] {
                    return eps[last] * (r / k[last]).powi(2);
                }
                let i = k.partition_point(|&x| x <= r).saturating_sub(1);
                let t = (r - k[i]) / (k[i + 1] - k[i]);
                eps[i] + t * (eps[i + 1] - eps[i])
            }
        }
    }

    pub fn eval(&self, k: &[f64]) -> f64 {
        self.eval_radial(k.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// A constant `a > 0` with `eps(k) >= a |k|^2` for every `k`.
    pub fn quadratic_floor(&self) -> f64 {
        match &self.kind {
            DispersionKind::Gaussian { beta } => 4.0 * PI * PI * beta,
            DispersionKind::Tabulated { k, eps, .. } => k
                .iter()
                .zip(eps)
                .skip(1)
                .map(|(x, e)| e / (x * x))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Exponent `q` of the small-`k` behaviour `eps ~ |k|^q`.
    pub fn small_k_exponent(&self) -> f64 {
        match &self.kind {
            DispersionKind::Gaussian { .. } => 2.0,
            DispersionKind::Tabulated { eps, .. } => {
                if eps[1] > 0.0 {
                    1.0
                } else {
                    // flat first segment: eps vanishes on an interval
                    f64::INFINITY
                }
            }
        }
    }

    /// Whether `int_{|k|<1} dk / eps(k)` diverges.
    pub fn inverse_integral_diverges(&self) -> bool {
        self.d as f64 <= self.small_k_exponent()
    }

    /// `int_{R^d} e^(-n eps(k)) dk` in closed form, Gaussian kind only.
    pub fn gaussian_heat_kernel(&self, n: f64) -> Option<f64> {
        match self.kind {
            DispersionKind::Gaussian { beta } => Some((4.0 * PI * beta * n).powf(-(self.d as f64) / 2.0)),
            _ => None,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self.kind {
            DispersionKind::Gaussian { beta } => Some(beta),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1), 2.0, epsilon = 1e-15);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_basics() {
        let g = Dispersion::gaussian(3, 1.0).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0, 0.0]), 0.0);
        assert_relative_eq!(g.eval(&[0.5, 0.0, 0.0]), PI * PI, epsilon = 1e-14);
        assert!(!g.inverse_integral_diverges());
        assert!(Dispersion::gaussian(2, 1.0).unwrap().inverse_integral_diverges());
        assert!(Dispersion::gaussian(3, -1.0).is_err());
    }

    #[test]
    fn tabulated_interpolation_and_bounds() {
        let t = Dispersion::tabulated(3, vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 4.0], 1.0, 0.5).unwrap();
        assert_relative_eq!(t.eval_radial(0.25), 0.5);
        assert_relative_eq!(t.eval_radial(0.75), 2.5);
        assert_relative_eq!(t.eval_radial(2.0), 16.0);
        assert_relative_eq!(t.quadratic_floor(), 4.0);
        // declared bound violated at k = 0.5: eps = 1 < 5 * 0.25
        assert!(Dispersion::tabulated(3, vec![0.0, 0.5], vec![0.0, 1.0], 5.0, 0.5).is_err());
        assert!(Dispersion::tabulated(3, vec![0.0, 0.5], vec![0.1, 1.0], 1.0, 0.5).is_err());
    }
}
