//! Pressure of the periodic box of side `L`, as a sum over the dual lattice
//! `(1/L) Z^d`.

use super::Quantity;
use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::lattice::{gaussian_tail_bound, norm2, points_within, radius_for_tail};
use crate::weights::WeightSequence;

struct Setup {
    tau: f64,
    z: f64,
    volume: f64,
    /// `eps(k)` for the retained modes.
    eps: Vec<f64>,
    lattice_tail: f64,
}

fn setup(disp: &Dispersion, weights: &WeightSequence, l: f64, mu: f64, budget: f64) -> Result<Setup> {
    disp.validate()?;
    weights.validate()?;
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid("L", "must be positive"));
    }
    let tau = weights.shift - mu;
    if !(tau > 0.0) {
        return Err(Error::invalid("mu", "must lie below the shift of the weights"));
    }
    let inf = weights.base_infimum();
    if inf == f64::NEG_INFINITY {
        return Err(Error::Truncation("cycle weights unbounded below: no tail bound".into()));
    }
    let z = (-inf).exp();
    let volume = l.powi(disp.d as i32);
    // every discarded mode contributes at most z e^(-tau) e^(-eps) / (1 - e^(-tau))
    let pref = z * (-tau).exp() / (-(-tau).exp_m1()) / volume;
    let c = disp.quadratic_floor() / (l * l);
    let r = radius_for_tail(c, disp.d, budget / pref);
    let lattice_tail = pref * gaussian_tail_bound(c, disp.d, r);
    if !(lattice_tail <= budget) {
        return Err(Error::Truncation(format!(
            "dual lattice tail bound {lattice_tail:e} above {budget:e}"
        )));
    }
    let pts = points_within(disp.d, r * r);
    if pts.len() > 50_000_000 {
        return Err(Error::TooLarge(format!("{} dual lattice points", pts.len())));
    }
    let eps = pts
        .iter()
        .map(|m| disp.eval_radial((norm2(m) as f64).sqrt() / l))
        .collect();
    Ok(Setup {
        tau,
        z,
        volume,
        eps,
        lattice_tail,
    })
}

/// `sum_n (e^(-base_n) - 1) e^(-x n) / n` with `x > 0`, and its tail bound.
fn deficit_sum(weights: &WeightSequence, z: f64, x: f64, budget: f64) -> (f64, f64) {
    let l0 = weights.explicit_len();
    let geo = -(-x).exp_m1();
    let general = (z - 1.0).max(1.0);
    let tail = |cut: usize| {
        let m = cut as f64 + 1.0;
        let damp = (-x * m).exp();
        let by_sum = weights.deficit_tail_sum_bound(cut, 1.0) * damp;
        let dmax = weights.deficit_bound(cut + 1).unwrap_or(general).min(general);
        by_sum.min(dmax * damp / (m * geo))
    };
    let mut cut = l0;
    while tail(cut) > budget {
        cut = (cut * 2).max(8);
        if cut > (1 << 26) {
            break;
        }
    }
    let mut sum = 0.0;
    for n in 1..=cut {
        let def = (-weights.base(n)).exp_m1();
        if def != 0.0 {
            sum += def * (-x * n as f64).exp() / n as f64;
        }
    }
    (sum, tail(cut))
}

/// `p_L(mu) = (1/V) sum_n e^(mu n - alpha_n) / n sum_{k in (1/L) Z^d} e^(-n eps(k))`
/// for `mu` below the shift of the weights, within `tol`.
///
/// Each mode's `n`-series is resummed as `-ln(1 - e^(-x))` plus the deficit
/// series, with `x = shift - mu + eps(k)`.
pub fn pressure_periodic_finite(
    disp: &Dispersion,
    weights: &WeightSequence,
    l: f64,
    mu: f64,
    tol: f64,
) -> Result<Quantity> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let s = setup(disp, weights, l, mu, tol / 2.0)?;
    let per_mode = tol / 4.0 * s.volume / s.eps.len() as f64;
    let mut sum = 0.0;
    let mut tails = 0.0;
    for &e in &s.eps {
        let x = s.tau + e;
        let bose = -(-(-x).exp_m1()).ln();
        let (d, t) = deficit_sum(weights, s.z, x, per_mode);
        sum += bose + d;
        tails += t;
    }
    let value = sum / s.volume;
    Ok(Quantity::Finite {
        value,
        error: s.lattice_tail + tails / s.volume + 1e-15 * value.abs() * s.eps.len() as f64,
    })
}

/// The same lattice sum with the `n`-series cut after `n_terms` terms.
pub fn pressure_periodic_truncated(
    disp: &Dispersion,
    weights: &WeightSequence,
    l: f64,
    mu: f64,
    n_terms: usize,
    tol: f64,
) -> Result<Quantity> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let s = setup(disp, weights, l, mu, tol)?;
    let mut total = 0.0;
    for n in 1..=n_terms {
        let nf = n as f64;
        let lattice: f64 = s.eps.iter().map(|e| (-nf * e).exp()).sum();
        total += (-weights.base(n) - s.tau * nf).exp() / nf * lattice;
    }
    Ok(Quantity::Finite {
        value: total / s.volume,
        error: s.lattice_tail,
    })
}
