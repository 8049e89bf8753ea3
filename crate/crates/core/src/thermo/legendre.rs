//! Free energy as the Legendre transform of the pressure, and the duality
//! and shift checks on grids.

use serde::Serialize;

use super::{Quantity, ThermoModel};
use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::weights::WeightSequence;

/// `q(rho)` together with the maximizing chemical potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEnergy {
    pub rho: f64,
    pub value: f64,
    pub error: f64,
    /// Maximizer `mu*`; equals the shift on the saturated branch.
    pub mu: f64,
    pub saturated: bool,
}

impl ThermoModel {
    /// `q(rho) = sup_mu [rho mu - p(mu)]`.
    ///
    /// Below the edge density `rho(shift)` the maximizer solves
    /// `rho(mu) = rho`, found by bracketing and bisection. At or above it the
    /// supremum sits at `mu = shift` and `q = rho shift - p(shift)`.
    pub fn free_energy(&self, rho: f64) -> Result<FreeEnergy> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::invalid("rho", "must be finite and nonnegative"));
        }
        let edge = self.weights.shift;
        if rho == 0.0 {
            return Ok(FreeEnergy {
                rho,
                value: 0.0,
                error: 0.0,
                mu: f64::NEG_INFINITY,
                saturated: false,
            });
        }
        let rho_edge = self.density(edge)?;
        if let Quantity::Finite { value: re, .. } = rho_edge {
            if rho >= re {
                let p = self.pressure(edge)?;
                let Quantity::Finite { value, error } = p else {
                    return Err(Error::UnboundedSearch(format!(
                        "rho = {rho} exceeds the edge density {re} but p({edge}) is infinite"
                    )));
                };
                return Ok(FreeEnergy {
                    rho,
                    value: rho * edge - value,
                    error,
                    mu: edge,
                    saturated: true,
                });
            }
        }
        let dens = |mu: f64| -> Result<f64> {
            match self.density(mu)? {
                Quantity::Finite { value, .. } => Ok(value),
                Quantity::Infinite => Ok(f64::INFINITY),
            }
        };
        // bracket [lo, hi] with rho(lo) < rho < rho(hi)
        let mut hi = edge;
        let mut step = 1.0;
        let mut lo = edge - step;
        while dens(lo)? >= rho {
            hi = lo;
            step *= 2.0;
            lo = edge - step;
            if step > 1e4 {
                return Err(Error::UnboundedSearch(format!(
                    "no mu >= {lo} with density below {rho}"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-14 * (1.0 + mid.abs()) {
                break;
            }
            if dens(mid)? < rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        let Quantity::Finite { value: p, error } = self.pressure(mu)? else {
            return Err(Error::UnboundedSearch(format!("p({mu}) is infinite")));
        };
        Ok(FreeEnergy {
            rho,
            value: rho * mu - p,
            error: error + rho * (hi - lo),
            mu,
            saturated: false,
        })
    }
}

/// `q(rho)`, within `tol` (plus the bisection width, reported in the error).
pub fn free_energy(disp: &Dispersion, weights: &WeightSequence, rho: f64, tol: f64) -> Result<FreeEnergy> {
    ThermoModel::new(disp, weights, tol)?.free_energy(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoResult {
    pub rho_c: Quantity,
    pub pressure: Vec<CurvePoint>,
    pub free_energy: Vec<CurvePoint>,
}

/// `rho_c`, `p` on `mu_grid` and `q` on `rho_grid`.
pub fn thermo_curves(model: &ThermoModel, mu_grid: &[f64], rho_grid: &[f64]) -> Result<ThermoResult> {
    let rho_c = model.critical_density()?;
    let mut pressure = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        let p = model.pressure(mu)?;
        pressure.push(CurvePoint {
            x: mu,
            value: p.value(),
            error: p.error(),
        });
    }
    let mut free_energy = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let q = model.free_energy(rho)?;
        free_energy.push(CurvePoint {
            x: rho,
            value: q.value,
            error: q.error,
        });
    }
    Ok(ThermoResult {
        rho_c,
        pressure,
        free_energy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub rho_c: Quantity,
    /// `max_i |p(mu_i) - max_j [rho_j mu_i - q(rho_j)]|`.
    pub legendre_residual: f64,
    /// Bound on `legendre_residual` from the rho-grid spacing.
    pub grid_bound: f64,
    /// `max_i |p(mu_i) - LT(LT(p))(mu_i)|`, both transforms on the grids.
    pub double_transform_residual: f64,
    /// Largest deviation of the slope of `q` from the shift (zero for
    /// unshifted weights) among grid pairs at or above the edge density
    /// `rho(shift)`; `None` if there are none.
    pub flat_slope_max: Option<f64>,
    /// Most negative second difference of `q`, scaled by the spacing.
    pub convexity_violation: f64,
    /// `max |p(mu; alpha + c l) - p(mu - c; alpha)|`, shifted side summed as a
    /// plain series.
    pub shift_pressure_residual: f64,
    /// `max |q(rho; alpha + c l) - q(rho; alpha) - c rho|`.
    pub shift_free_energy_residual: f64,
    pub tol: f64,
}

impl DualityReport {
    pub fn passes(&self, residual_tol: f64) -> bool {
        self.legendre_residual <= self.grid_bound + residual_tol
            && self.double_transform_residual <= residual_tol
            && self.flat_slope_max.is_none_or(|s| s <= residual_tol)
            && self.shift_pressure_residual <= residual_tol
            && self.shift_free_energy_residual <= residual_tol
    }
}

fn legendre(xs: &[f64], fs: &[f64], y: f64) -> f64 {
    xs.iter()
        .zip(fs)
        .map(|(x, f)| x * y - f)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Checks `p = LT(q)` on the grids, `q` flat past the edge density, and the
/// shift covariance `p(mu; alpha + c l) = p(mu - c; alpha)`,
/// `q(rho; alpha + c l) = q(rho; alpha) + c rho`.
///
/// `mu_grid` must lie strictly below the shift of `model`'s weights.
pub fn duality_and_shift_check(
    model: &ThermoModel,
    mu_grid: &[f64],
    rho_grid: &[f64],
    c: f64,
) -> Result<DualityReport> {
    let edge = model.weights.shift;
    if mu_grid.is_empty() || rho_grid.is_empty() {
        return Err(Error::invalid("grid", "grids must be nonempty"));
    }
    if mu_grid.iter().any(|&m| !(m < edge)) {
        return Err(Error::invalid("mu_grid", "points must lie below the shift"));
    }
    if rho_grid.iter().any(|&r| !(r >= 0.0)) || rho_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("rho_grid", "must be nonnegative and increasing"));
    }
    let rho_c = model.critical_density()?;
    let mut ps = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        ps.push(model.pressure(mu)?.value());
    }
    let mut qs = Vec::with_capacity(rho_grid.len());
    let mut argmax = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let q = model.free_energy(rho)?;
        qs.push(q.value);
        argmax.push(q.mu);
    }

    let mut legendre_residual: f64 = 0.0;
    let mut grid_bound: f64 = 0.0;
    for (&mu, &p) in mu_grid.iter().zip(&ps) {
        legendre_residual = legendre_residual.max((p - legendre(rho_grid, &qs, mu)).abs());
        // phi(rho) = rho mu - q(rho) is concave with phi'(rho_j) = mu - mu*_j,
        // so its max over a cell exceeds an endpoint by at most |phi'| * width
        let rho_mu = model.density(mu)?.value();
        let j = rho_grid.partition_point(|&r| r <= rho_mu);
        let cell = if j == 0 || j == rho_grid.len() {
            0.0
        } else {
            let w = rho_grid[j] - rho_grid[j - 1];
            let sl = if argmax[j - 1].is_finite() {
                (mu - argmax[j - 1]).abs()
            } else {
                f64::INFINITY
            };
            let sr = (mu - argmax[j]).abs();
            w * sl.min(sr)
        };
        grid_bound = grid_bound.max(cell);
    }

    let q_grid: Vec<f64> = rho_grid.iter().map(|&r| legendre(mu_grid, &ps, r)).collect();
    let double_transform_residual = mu_grid
        .iter()
        .zip(&ps)
        .map(|(&mu, &p)| (p - legendre(rho_grid, &q_grid, mu)).abs())
        .fold(0.0, f64::max);

    let rho_edge = model.density(edge)?.value();
    let flats: Vec<f64> = rho_grid
        .windows(2)
        .zip(qs.windows(2))
        .filter(|(r, _)| r[0] >= rho_edge)
        .map(|(r, q)| ((q[1] - q[0]) / (r[1] - r[0]) - edge).abs())
        .collect();
    let flat_slope_max = if flats.is_empty() {
        None
    } else {
        Some(flats.into_iter().fold(0.0, f64::max))
    };

    let mut convexity_violation: f64 = 0.0;
    for i in 1..rho_grid.len().saturating_sub(1) {
        let (h1, h2) = (rho_grid[i] - rho_grid[i - 1], rho_grid[i + 1] - rho_grid[i]);
        let s1 = (qs[i] - qs[i - 1]) / h1;
        let s2 = (qs[i + 1] - qs[i]) / h2;
        convexity_violation = convexity_violation.max(s1 - s2);
    }

    let shifted = model.with_weights(&model.weights.shifted(c))?;
    let mut shift_pressure_residual: f64 = 0.0;
    for &mu in mu_grid {
        let base = model.pressure(mu - c)?;
        let diff = if mu < shifted.weights.shift {
            // shifted side by the plain series, unshifted side resummed
            (shifted.pressure_series(mu)?.value() - base.value()).abs()
        } else if base.is_finite() {
            f64::INFINITY
        } else {
            0.0
        };
        shift_pressure_residual = shift_pressure_residual.max(diff);
    }
    let mut shift_free_energy_residual: f64 = 0.0;
    for (&rho, &q) in rho_grid.iter().zip(&qs) {
        let qs_shift = shifted.free_energy(rho)?.value;
        shift_free_energy_residual = shift_free_energy_residual.max((qs_shift - q - c * rho).abs());
    }

    Ok(DualityReport {
        rho_c,
        legendre_residual,
        grid_bound,
        double_transform_residual,
        flat_slope_max,
        convexity_violation,
        shift_pressure_residual,
        shift_free_energy_residual,
        tol: model.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(w: WeightSequence) -> ThermoModel {
        ThermoModel::new(&Dispersion::gaussian(3, 1.0).unwrap(), &w, 1e-11).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn free_energy_branches() {
        let m = model(WeightSequence::zero());
        assert_eq!(m.free_energy(0.0).unwrap().value, 0.0);
        let rc = m.critical_density().unwrap().value();
        let p0 = m.pressure(0.0).unwrap().value();
        let q2 = m.free_energy(2.0 * rc).unwrap();
        assert!(q2.saturated);
        assert!((q2.value + p0).abs() < 1e-10);
        assert!((m.free_energy(5.0 * rc).unwrap().value - q2.value).abs() < 1e-14);
        // below rho_c the maximizer reproduces the density and the duality
        let q = m.free_energy(rc / 2.0).unwrap();
        assert!(!q.saturated && q.mu < 0.0);
        let p = m.pressure(q.mu).unwrap().value();
        assert!((p - (rc / 2.0 * q.mu - q.value)).abs() < 1e-10);
        assert!((m.density(q.mu).unwrap().value() - rc / 2.0).abs() < 1e-9);
    }

    #[test]
    fn free_energy_in_two_dimensions_has_no_flat_part() {
        let m = ThermoModel::new(&Dispersion::gaussian(2, 1.0).unwrap(), &WeightSequence::zero(), 1e-10).unwrap();
        let q = m.free_energy(3.0).unwrap();
        assert!(!q.saturated && q.mu < 0.0);
    }

    #[test]
    fn duality_on_grids() {
        let m = model(WeightSequence::power(1.0, 2.0));
        let rc = m.critical_density().unwrap().value();
        let mus = grid(-3.0, -0.05, 120);
        let rhos = grid(0.0, 1.5 * rc, 150);
        let r = duality_and_shift_check(&m, &mus, &rhos, 0.7).unwrap();
        assert!(r.double_transform_residual < 1e-4, "{r:?}");
        assert!(r.legendre_residual <= r.grid_bound + 1e-9, "{r:?}");
        assert!(r.flat_slope_max.unwrap() < 1e-9, "{r:?}");
        assert!(r.convexity_violation < 1e-9, "{r:?}");
        assert!(r.shift_pressure_residual < 1e-9, "{r:?}");
        assert!(r.shift_free_energy_residual < 1e-9, "{r:?}");
    }

    #[test]
    fn zero_shift_is_exact() {
        let m = model(WeightSequence::zero());
        let r = duality_and_shift_check(&m, &[-1.0, -0.5], &[0.01, 0.02], 0.0).unwrap();
        assert!(r.shift_free_energy_residual == 0.0);
        assert!(r.shift_pressure_residual < 1e-10);
    }
}
