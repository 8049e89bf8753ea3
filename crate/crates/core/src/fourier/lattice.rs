use serde::Serialize;

use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::lattice::{gaussian_tail_bound, norm2, points_within, radius_for_tail};

/// One dual-lattice mode `k = m / L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mode {
    pub m: Vec<i64>,
    /// `|k|`.
    pub k_norm: f64,
    pub eps: f64,
}

/// The dual lattice `(1/L) Z^d` cut to `eps(k) <= eps_cut`, sorted by `eps`
/// (the zero mode first), with a bound on the discarded mass
/// `sum_{eps(k) > eps_cut} e^(-eps(k))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeLattice {
    pub l: f64,
    pub d: usize,
    pub eps_cut: f64,
    pub modes: Vec<Mode>,
    /// Index ranges of modes sharing the same `eps`.
    pub groups: Vec<(usize, usize)>,
    pub certificate: f64,
}

const MAX_POINTS: usize = 20_000_000;

fn group_ranges(modes: &[Mode]) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=modes.len() {
        if i == modes.len() || modes[i].eps != modes[start].eps {
            groups.push((start, i));
            start = i;
        }
    }
    groups
}

impl ModeLattice {
    pub fn volume(&self) -> f64 {
        self.l.powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eps(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eps).collect()
    }

    /// A lattice from explicit modes, taken as the whole model (no truncation).
    /// Modes are sorted by `eps`; exactly one must have `eps = 0`.
    pub fn from_modes(l: f64, d: usize, mut modes: Vec<Mode>) -> Result<Self> {
        if !(l > 0.0) || d == 0 {
            return Err(Error::invalid("L", "side length and dimension must be positive"));
        }
        if modes.iter().any(|m| !(m.eps >= 0.0 && m.eps.is_finite())) {
            return Err(Error::invalid("modes", "eps must be finite and nonnegative"));
        }
        if modes.iter().filter(|m| m.eps == 0.0).count() != 1 {
            return Err(Error::invalid("modes", "exactly one mode must have eps = 0"));
        }
        modes.sort_by(|a, b| a.eps.total_cmp(&b.eps).then_with(|| a.m.cmp(&b.m)));
        let groups = group_ranges(&modes);
        Ok(Self {
            l,
            d,
            eps_cut: modes.last().map_or(0.0, |m| m.eps),
            modes,
            groups,
            certificate: 0.0,
        })
    }
}

/// Modes of `(1/L) Z^d` with `eps(k) <= eps_cut`.
///
/// The certificate is the discarded mass summed exactly out to a radius
/// where the Gaussian envelope `e^(-a |k|^2)` leaves less than
/// `delta_trunc / 1000`, plus that envelope bound. Fails with
/// [`Error::Certificate`] if the certificate exceeds `delta_trunc`.
pub fn build_lattice(l: f64, d: usize, disp: &Dispersion, eps_cut: f64, delta_trunc: f64) -> Result<ModeLattice> {
    disp.validate()?;
    if disp.d != d {
        return Err(Error::invalid(
            "d",
            format!("dispersion is {}-dimensional, lattice {d}", disp.d),
        ));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid("L", "must be positive"));
    }
    if !(eps_cut > 0.0 && eps_cut.is_finite()) {
        return Err(Error::invalid("eps_cut", "must be positive"));
    }
    if !(delta_trunc > 0.0) {
        return Err(Error::invalid("delta_trunc", "must be positive"));
    }
    let c = disp.quadratic_floor() / (l * l);
    let r_keep2 = eps_cut / c;
    let r_ext = radius_for_tail(c, d, delta_trunc * 1e-3).max(r_keep2.sqrt());
    let volume_ball = std::f64::consts::PI.powf(d as f64 / 2.0) / crate::dispersion::gamma_half(d + 2)
        * (r_ext + (d as f64).sqrt()).powi(d as i32);
    if volume_ball > MAX_POINTS as f64 {
        return Err(Error::TooLarge(format!(
            "about {volume_ball:.0} lattice points needed for the certificate"
        )));
    }
    let mut modes = Vec::new();
    let mut discarded = 0.0;
    for m in points_within(d, r_ext * r_ext) {
        let k_norm = (norm2(&m) as f64).sqrt() / l;
        let eps = disp.eval_radial(k_norm);
        if eps <= eps_cut {
            modes.push(Mode { m, k_norm, eps });
        } else {
            discarded += (-eps).exp();
        }
    }
    let certificate = discarded + gaussian_tail_bound(c, d, r_ext);
    if certificate > delta_trunc {
        return Err(Error::Certificate {
            achieved: certificate,
            requested: delta_trunc,
        });
    }
    modes.sort_by(|a, b| a.eps.total_cmp(&b.eps).then_with(|| a.m.cmp(&b.m)));
    let groups = group_ranges(&modes);
    Ok(ModeLattice {
        l,
        d,
        eps_cut,
        modes,
        groups,
        certificate,
    })
}
