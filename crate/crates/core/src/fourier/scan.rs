use serde::Serialize;

use super::dp::partition_dp;
use super::lattice::build_lattice;
use super::observables::{cycle_density_clamped, mode_marginals};
use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::thermo::{critical_density, Quantity};
use crate::weights::WeightSequence;

/// Truncation parameters for the per-volume mode lattices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSpec {
    pub eps_cut: f64,
    pub delta_trunc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub l: f64,
    pub v: f64,
    pub n: usize,
    /// `micro`: lengths below `eta`; `meso`: `[eta, V/eta]`; `long`: above
    /// `V/eta`; `macro`: `[eta, sV]`. The first three partition all lengths.
    pub kind: String,
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroscopicScan {
    pub rho: f64,
    pub rho_c: Quantity,
    pub eta_exponent: f64,
    pub rows: Vec<ScanRow>,
    /// Per volume: `micro + meso + long` minus `N / V`.
    pub sum_residuals: Vec<f64>,
    /// Truncation bound on `Y` per volume.
    pub truncation_bounds: Vec<f64>,
}

impl MacroscopicScan {
    pub fn rows_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a ScanRow> + 'a {
        self.rows.iter().filter(move |r| r.kind == kind)
    }
}

/// `ceil(x)` and `floor(x)` that treat values within `1e-9` of an integer
/// as that integer.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

fn lengths(lo: f64, lo_inclusive: bool, hi: f64) -> (usize, usize) {
    let lo = snap(lo);
    let a = if lo_inclusive || lo.fract() != 0.0 {
        lo.ceil()
    } else {
        lo + 1.0
    };
    let b = snap(hi).floor();
    (a.max(1.0) as usize, b.max(0.0) as usize)
}

/// Exact finite-volume cycle densities in the length windows that separate
/// finite from macroscopic cycles, with `eta(V) = V^eta_exponent` and
/// `N = floor(rho V)`.
#[allow(clippy::too_many_arguments)]
pub fn macroscopic_scan(
    disp: &Dispersion,
    weights: &WeightSequence,
    rho: f64,
    l_list: &[f64],
    eta_exponent: f64,
    s_grid: &[f64],
    lattice: LatticeSpec,
    tol: f64,
) -> Result<MacroscopicScan> {
    if !(eta_exponent > 0.0 && eta_exponent < 1.0) {
        return Err(Error::invalid("eta_exponent", "must lie in (0, 1)"));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", "must be finite and nonnegative"));
    }
    if s_grid.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::invalid("s_grid", "must be nonnegative"));
    }
    let rho_c = critical_density(disp, weights, tol)?;
    let rc = rho_c.value();
    let excess = (rho - rc).max(0.0);
    let mut rows = Vec::new();
    let mut sum_residuals = Vec::new();
    let mut truncation_bounds = Vec::new();
    for &l in l_list {
        let lat = build_lattice(l, disp.d, disp, lattice.eps_cut, lattice.delta_trunc)?;
        let v = lat.volume();
        let n = (snap(rho * v)).floor() as usize;
        let tables = partition_dp(&lat, weights, n)?;
        truncation_bounds.push(tables.truncation_bound());
        let marg = mode_marginals(&tables);
        let eta = v.powf(eta_exponent);
        let mut row = |kind: &str, a: f64, b: f64, lo_incl: bool, target: f64| {
            let (ia, ib) = lengths(a, lo_incl, b);
            let value = cycle_density_clamped(&tables, &marg, ia, ib.min(n));
            rows.push(ScanRow {
                l,
                v,
                n,
                kind: kind.to_string(),
                a,
                b,
                value,
                target,
            });
            value
        };
        // micro: 1 <= l < eta
        let (_, micro_hi) = lengths(1.0, true, eta);
        let micro_b = if snap(eta).fract() == 0.0 {
            snap(eta) - 1.0
        } else {
            micro_hi as f64
        };
        let micro = row("micro", 1.0, micro_b, true, rho.min(rc));
        let meso = row("meso", eta, v / eta, true, 0.0);
        // past V/eta, or past eta when the meso window is empty
        let long = if v / eta >= eta {
            row("long", v / eta, n as f64, false, excess)
        } else {
            row("long", eta, n as f64, true, excess)
        };
        for &s in s_grid {
            let target = if rho <= rc { 0.0 } else { s.min(excess) };
            row("macro", eta, s * v, true, target);
        }
        sum_residuals.push(micro + meso + long - n as f64 / v);
    }
    Ok(MacroscopicScan {
        rho,
        rho_c,
        eta_exponent,
        rows,
        sum_residuals,
        truncation_bounds,
    })
}
