//! Infinite-volume thermodynamics of the spatial model: pressure, critical
//! density, free energy and their Legendre duality.
//!
//! With `tau = shift - mu`, every quantity is a series
//! `sum_n e^(-base_n - tau n) I(n) / n^k` with `I(n) = int e^(-n eps(k)) dk`.
//! The part with `base = 0` is resummed under the integral into a single
//! Bose-type radial quadrature, and only the (summable) deficit
//! `e^(-base_n) - 1` is summed term by term. This keeps the cost bounded
//! at `tau = 0`, where the plain series converges like `n^(1 - d/2)`.

mod legendre;
mod periodic;

use std::f64::consts::PI;
use std::sync::Mutex;

use serde::Serialize;

pub use legendre::{duality_and_shift_check, free_energy, thermo_curves, CurvePoint, DualityReport, ThermoResult};
pub use periodic::{pressure_periodic_finite, pressure_periodic_truncated};

use crate::dispersion::{gamma_half, sphere_area, Dispersion, DispersionKind};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::weights::WeightSequence;

/// A thermodynamic value that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Quantity {
    Finite { value: f64, error: f64 },
    Infinite,
}

impl Quantity {
    pub fn value(&self) -> f64 {
        match self {
            Quantity::Finite { value, .. } => *value,
            Quantity::Infinite => f64::INFINITY,
        }
    }

    pub fn error(&self) -> f64 {
        match self {
            Quantity::Finite { error, .. } => *error,
            Quantity::Infinite => 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Quantity::Finite { .. })
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Quantity::Finite { value, .. } => Some(*value),
            Quantity::Infinite => None,
        }
    }
}

/// Upper bound on the upper incomplete gamma function `Gamma(s, x)` for
/// `x > max(s - 1, 0)`.
pub(crate) fn upper_gamma_bound(s: f64, x: f64) -> f64 {
    let lead = x.powf(s - 1.0) * (-x).exp();
    if s <= 1.0 {
        lead
    } else {
        lead / (1.0 - (s - 1.0) / x)
    }
}

/// Which of the two series is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Series {
    /// `sum e^(-alpha_n + mu n) I(n)`, the density.
    Density,
    /// `sum e^(-alpha_n + mu n) I(n) / n`, the pressure.
    Pressure,
}

impl Series {
    fn power(self) -> f64 {
        match self {
            Series::Density => 0.0,
            Series::Pressure => 1.0,
        }
    }
}

/// Dispersion and weights together, with a cache of `I(n)`.
///
/// All queries take `&self`; the cache sits behind a mutex so a model can be
/// shared between threads.
#[derive(Debug)]
pub struct ThermoModel {
    disp: Dispersion,
    weights: WeightSequence,
    tol: f64,
    a: f64,
    heat: Mutex<Vec<f64>>,
}

impl Clone for ThermoModel {
    fn clone(&self) -> Self {
        Self {
            disp: self.disp.clone(),
            weights: self.weights.clone(),
            tol: self.tol,
            a: self.a,
            heat: Mutex::new(self.heat.lock().expect("cache lock").clone()),
        }
    }
}

const HEAT_REL: f64 = 1e-13;

impl ThermoModel {
    pub fn new(disp: &Dispersion, weights: &WeightSequence, tol: f64) -> Result<Self> {
        disp.validate()?;
        weights.validate()?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        Ok(Self {
            disp: disp.clone(),
            weights: weights.clone(),
            tol,
            a: disp.quadratic_floor(),
            heat: Mutex::new(Vec::new()),
        })
    }

    pub fn dispersion(&self) -> &Dispersion {
        &self.disp
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Same dispersion and tolerance, different weights.
    pub fn with_weights(&self, weights: &WeightSequence) -> Result<Self> {
        Self::new(&self.disp, weights, self.tol)
    }

    fn d(&self) -> f64 {
        self.disp.d as f64
    }

    /// `(pi / a)^(d/2)`: `I(n) <= heat_constant * n^(-d/2)`.
    fn heat_constant(&self) -> f64 {
        (PI / self.a).powf(self.d() / 2.0)
    }

    /// Break points of the radial integrand inside `[0, r_max]`.
    fn breaks(&self, r_max: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        if let DispersionKind::Tabulated { k, .. } = &self.disp.kind {
            pts.extend(k.iter().copied().filter(|&x| x > 0.0 && x < r_max));
        }
        pts.push(r_max);
        pts
    }

    /// `S_{d-1} int_0^r_max r^(d-1) g(eps(r)) dr`, split at the table nodes.
    fn radial<G: Fn(f64) -> f64>(&self, g: G, r_max: f64, opts: QuadOptions, term: &str) -> Result<(f64, f64)> {
        let d = self.disp.d as i32;
        let s = sphere_area(self.disp.d);
        let f = |r: f64| {
            let v = g(self.disp.eval_radial(r));
            if v == 0.0 {
                0.0
            } else {
                r.powi(d - 1) * v
            }
        };
        let pts = self.breaks(r_max);
        let pieces = (pts.len() - 1) as f64;
        let piece_opts = QuadOptions {
            abs_tol: opts.abs_tol / pieces,
            ..opts
        };
        let (mut value, mut error) = (0.0, 0.0);
        for w in pts.windows(2) {
            match integrate(f, w[0], w[1], piece_opts) {
                Ok(q) => {
                    value += q.value;
                    error += q.error;
                }
                Err(q) => {
                    return Err(Error::Quadrature {
                        term: term.to_string(),
                        estimate: s * q.value,
                        error: s * q.error,
                    })
                }
            }
        }
        Ok((s * value, s * error))
    }

    /// `I(n) = int_{R^d} e^(-n eps(k)) dk` by radial quadrature.
    fn heat_quad(&self, n: usize) -> Result<f64> {
        let nf = n as f64;
        let s = self.d() / 2.0;
        // radius where the Gaussian envelope leaves a relative tail below 1e-17
        let mut x = 40.0 + s;
        while upper_gamma_bound(s, x) / gamma_half(self.disp.d) > 1e-17 {
            x *= 1.5;
        }
        let r_max = (x / (nf * self.a)).sqrt();
        let opts = QuadOptions {
            abs_tol: 1e-300,
            rel_tol: HEAT_REL,
            max_intervals: 4000,
        };
        let (v, _) = self.radial(|e| (-nf * e).exp(), r_max, opts, &format!("I({n})"))?;
        Ok(v)
    }

    /// `I(n)`, cached.
    pub fn heat(&self, n: usize) -> Result<f64> {
        assert!(n >= 1);
        {
            let cache = self.heat.lock().expect("cache lock");
            if let Some(&v) = cache.get(n - 1) {
                return Ok(v);
            }
        }
        let mut fresh = Vec::new();
        let start = self.heat.lock().expect("cache lock").len() + 1;
        for m in start..=n {
            fresh.push(self.heat_quad(m)?);
        }
        let mut cache = self.heat.lock().expect("cache lock");
        if cache.len() + 1 == start {
            cache.extend(fresh);
        }
        Ok(match cache.get(n - 1) {
            Some(&v) => v,
            None => self.heat_quad(n)?,
        })
    }

    /// `tau = shift - mu`; negative means the series diverge.
    fn tau(&self, mu: f64) -> f64 {
        self.weights.shift - mu
    }

    /// Upper bound on `sum_{n > cut} |e^(-base_n) - 1| e^(-tau n) I(n) / n^k`.
    fn deficit_tail(&self, cut: usize, tau: f64, series: Series) -> f64 {
        let s = self.d() / 2.0 + series.power();
        let c = self.heat_constant();
        let damp = (-tau * (cut as f64 + 1.0)).exp();
        let by_sum = self.weights.deficit_tail_sum_bound(cut, s) * damp;
        let by_geo = match self.weights.deficit_bound(cut + 1) {
            Some(dmax) if tau > 0.0 => dmax * (cut as f64 + 1.0).powf(-s) * damp / (-(-tau).exp_m1()),
            _ => f64::INFINITY,
        };
        c * by_sum.min(by_geo)
    }

    /// `sum_n (e^(-base_n) - 1) e^(-tau n) I(n) / n^k` with its error bound.
    fn deficit_series(&self, tau: f64, series: Series, budget: f64) -> Result<(f64, f64)> {
        let l0 = self.weights.explicit_len();
        let mut cut = l0.max(8);
        loop {
            let t = self.deficit_tail(cut, tau, series);
            if t <= budget {
                break;
            }
            if cut > (1 << 22) || !t.is_finite() && cut > (1 << 12) {
                return Err(Error::Truncation(format!(
                    "deficit series at tau = {tau} needs more than {cut} terms (tail bound {t:e})"
                )));
            }
            cut *= 2;
        }
        // shrink the cut while the bound still holds
        let (mut lo, mut hi) = (l0.max(1), cut);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.deficit_tail(mid, tau, series) <= budget {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let cut = if self.deficit_tail(lo, tau, series) <= budget {
            lo
        } else {
            hi
        };
        let tail = self.deficit_tail(cut, tau, series);
        let k = series.power();
        let (mut sum, mut abs) = (0.0, 0.0);
        for n in 1..=cut {
            let def = (-self.weights.base(n)).exp_m1();
            if def == 0.0 {
                continue;
            }
            let term = def * (-tau * n as f64).exp() * self.heat(n)? / (n as f64).powf(k);
            sum += term;
            abs += term.abs();
        }
        Ok((sum, tail + abs * (4.0 * HEAT_REL)))
    }

    /// Radius beyond which the Bose integrand contributes at most `budget`.
    fn bose_cutoff(&self, tau: f64, budget: f64) -> f64 {
        let s = self.d() / 2.0;
        let pref = sphere_area(self.disp.d) * 0.5 * self.a.powf(-s) * (-tau).exp();
        let mut x = 30.0 + s;
        while pref * upper_gamma_bound(s, x) / (-(-x).exp_m1()) > budget {
            x *= 1.25;
        }
        (x / self.a).sqrt()
    }

    /// The resummed `base = 0` part: `int dk / (e^(tau + eps) - 1)` for the
    /// density, `int -ln(1 - e^(-(tau + eps))) dk` for the pressure.
    fn bose_integral(&self, tau: f64, series: Series, budget: f64) -> Result<(f64, f64)> {
        let r_max = self.bose_cutoff(tau, budget / 2.0);
        let opts = QuadOptions {
            abs_tol: budget / 2.0,
            rel_tol: 0.0,
            max_intervals: 8000,
        };
        let (v, e) = match series {
            Series::Density => self.radial(|eps| 1.0 / (tau + eps).exp_m1(), r_max, opts, "density integral")?,
            Series::Pressure => {
                self.radial(|eps| -(-(-(tau + eps)).exp_m1()).ln(), r_max, opts, "pressure integral")?
            }
        };
        Ok((v, e + budget / 2.0))
    }

    fn evaluate(&self, mu: f64, series: Series) -> Result<Quantity> {
        if mu.is_nan() {
            return Err(Error::invalid("mu", "must be a number"));
        }
        let tau = self.tau(mu);
        if tau < 0.0 || tau.is_nan() {
            return Ok(Quantity::Infinite);
        }
        if tau == 0.0 {
            let flat = self.disp.small_k_exponent().is_infinite();
            let diverges = match series {
                Series::Density => self.disp.inverse_integral_diverges(),
                Series::Pressure => flat,
            };
            if diverges {
                return Ok(Quantity::Infinite);
            }
        }
        if self.weights.base_infimum() == f64::NEG_INFINITY {
            return Err(Error::Truncation("cycle weights unbounded below: no tail bound".into()));
        }
        let (bv, be) = self.bose_integral(tau, series, self.tol / 2.0)?;
        let (cv, ce) = self.deficit_series(tau, series, self.tol / 4.0)?;
        Ok(Quantity::Finite {
            value: bv + cv,
            error: be + ce,
        })
    }

    /// `p(mu)`. Infinite for `mu` above the shift; at `mu` equal to the shift
    /// this is the increasing limit from below.
    pub fn pressure(&self, mu: f64) -> Result<Quantity> {
        self.evaluate(mu, Series::Pressure)
    }

    /// `rho(mu) = p'(mu)`.
    pub fn density(&self, mu: f64) -> Result<Quantity> {
        self.evaluate(mu, Series::Density)
    }

    /// `rho_c = rho(0)`.
    pub fn critical_density(&self) -> Result<Quantity> {
        self.density(0.0)
    }

    /// `p(mu)` as the plain series `sum_n e^(mu n - alpha_n) I(n) / n`, summed
    /// term by term with a geometric tail. Only for `mu` below the shift.
    pub fn pressure_series(&self, mu: f64) -> Result<Quantity> {
        let tau = self.tau(mu);
        if !(tau > 0.0) {
            return Err(Error::invalid("mu", "series route needs mu below the shift"));
        }
        let inf = self.weights.base_infimum();
        if inf == f64::NEG_INFINITY {
            return Err(Error::Truncation("cycle weights unbounded below: no tail bound".into()));
        }
        let z = (-inf).exp();
        let c = self.heat_constant();
        let s = self.d() / 2.0 + 1.0;
        let budget = self.tol / 2.0;
        let tail = |n: usize| {
            let m = n as f64 + 1.0;
            z * c * m.powf(-s) * (-tau * m).exp() / (-(-tau).exp_m1())
        };
        let mut cut = 1usize;
        while tail(cut) > budget {
            cut *= 2;
            if cut > (1 << 24) {
                return Err(Error::Truncation(format!(
                    "pressure series at mu = {mu} needs more than {cut} terms"
                )));
            }
        }
        let (mut sum, mut abs) = (0.0, 0.0);
        for n in 1..=cut {
            let t = (-self.weights.base(n) - tau * n as f64).exp() * self.heat(n)? / n as f64;
            sum += t;
            abs += t.abs();
        }
        Ok(Quantity::Finite {
            value: sum,
            error: tail(cut) + abs * 4.0 * HEAT_REL,
        })
    }
}

/// `rho_c = sum_n e^(-alpha_n) int e^(-n eps(k)) dk`, within `tol`.
pub fn critical_density(disp: &Dispersion, weights: &WeightSequence, tol: f64) -> Result<Quantity> {
    ThermoModel::new(disp, weights, tol)?.critical_density()
}

/// `p(mu) = sum_n e^(mu n - alpha_n) / n int e^(-n eps(k)) dk`, within `tol`.
pub fn pressure(disp: &Dispersion, weights: &WeightSequence, mu: f64, tol: f64) -> Result<Quantity> {
    ThermoModel::new(disp, weights, tol)?.pressure(mu)
}

/// Density `rho(mu) = p'(mu)`, within `tol`.
pub fn density(disp: &Dispersion, weights: &WeightSequence, mu: f64, tol: f64) -> Result<Quantity> {
    ThermoModel::new(disp, weights, tol)?.density(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// `sum_n z^n n^(-s)` directly, with an integral tail.
    fn polylog(s: f64, z: f64) -> f64 {
        let mut sum = 0.0;
        let mut n = 1.0f64;
        loop {
            let t = z.powf(n) * n.powf(-s);
            sum += t;
            if t < 1e-18 * sum {
                break;
            }
            n += 1.0;
        }
        sum
    }

    /// `zeta(3/2)` with an Euler-Maclaurin tail.
    fn zeta_three_halves() -> f64 {
        let m = 100_000usize;
        let mut s: f64 = (1..m).map(|n| (n as f64).powf(-1.5)).sum();
        let mf = m as f64;
        s += 2.0 / mf.sqrt() + 0.5 * mf.powf(-1.5) + 1.5 / 12.0 * mf.powf(-2.5);
        s
    }

    fn gauss3() -> Dispersion {
        Dispersion::gaussian(3, 1.0).unwrap()
    }

    #[test]
    fn heat_matches_closed_form() {
        for d in 1..=4 {
            let disp = Dispersion::gaussian(d, 0.7).unwrap();
            let m = ThermoModel::new(&disp, &WeightSequence::zero(), 1e-10).unwrap();
            for n in [1, 2, 7, 100, 5000] {
                let exact = disp.gaussian_heat_kernel(n as f64).unwrap();
                assert_relative_eq!(m.heat(n).unwrap(), exact, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn critical_density_three_dimensions() {
        let rho = critical_density(&gauss3(), &WeightSequence::zero(), 1e-9).unwrap();
        let exact = zeta_three_halves() * (4.0 * PI).powf(-1.5);
        assert!((rho.value() - exact).abs() < 1e-9, "{rho:?} vs {exact}");
        assert!((exact - 0.0586437).abs() < 1e-7);
    }

    #[test]
    fn critical_density_infinite_in_low_dimension() {
        for d in [1, 2] {
            let disp = Dispersion::gaussian(d, 1.0).unwrap();
            let rho = critical_density(&disp, &WeightSequence::power(1.0, 2.0), 1e-8).unwrap();
            assert_eq!(rho, Quantity::Infinite);
        }
        // a positive shift makes every dimension finite
        let disp = Dispersion::gaussian(2, 1.0).unwrap();
        let w = WeightSequence::zero().shifted(1.0);
        let rho = critical_density(&disp, &w, 1e-10).unwrap();
        let exact: f64 = (1..200).map(|n| (-(n as f64)).exp() / (4.0 * PI * n as f64)).sum();
        assert_relative_eq!(rho.value(), exact, epsilon = 1e-10);
    }

    #[test]
    fn shifted_critical_density_is_damped_series() {
        let w = WeightSequence::zero().shifted(1.0);
        let rho = critical_density(&gauss3(), &w, 1e-11).unwrap();
        let exact: f64 = (1..200)
            .map(|n| (-(n as f64)).exp() * (4.0 * PI * n as f64).powf(-1.5))
            .sum();
        assert_relative_eq!(rho.value(), exact, epsilon = 1e-11);
        // equals the unshifted density at mu = -1
        let d = density(&gauss3(), &WeightSequence::zero(), -1.0, 1e-11).unwrap();
        assert_relative_eq!(rho.value(), d.value(), epsilon = 2e-11);
    }

    #[test]
    fn pressure_is_polylog() {
        let p = pressure(&gauss3(), &WeightSequence::zero(), -1.0, 1e-12).unwrap();
        let exact = polylog(2.5, (-1.0f64).exp()) * (4.0 * PI).powf(-1.5);
        assert_relative_eq!(p.value(), exact, epsilon = 1e-12);
        assert!(p.error() <= 1e-12);
        let p0 = pressure(&gauss3(), &WeightSequence::zero(), 0.0, 1e-10).unwrap();
        let exact0 = polylog(2.5, 1.0) * (4.0 * PI).powf(-1.5);
        assert_relative_eq!(p0.value(), exact0, epsilon = 1e-9);
        assert_eq!(
            pressure(&gauss3(), &WeightSequence::zero(), 0.1, 1e-8).unwrap(),
            Quantity::Infinite
        );
    }

    #[test]
    fn weighted_routes_agree() {
        let w = WeightSequence::power(1.0, 2.0);
        let m = ThermoModel::new(&gauss3(), &w, 1e-11).unwrap();
        for mu in [-3.0, -1.0, -0.2, -0.05] {
            let a = m.pressure(mu).unwrap().value();
            let b = m.pressure_series(mu).unwrap().value();
            assert_relative_eq!(a, b, epsilon = 5e-11);
        }
        // weighted rho_c against a long direct sum with an integral tail
        let rho = m.critical_density().unwrap().value();
        let n = 200_000usize;
        let mut direct: f64 = (1..=n)
            .map(|k| {
                let kf = k as f64;
                (-1.0 / (kf * kf)).exp() * (4.0 * PI * kf).powf(-1.5)
            })
            .sum();
        direct += (4.0 * PI).powf(-1.5) * 2.0 / (n as f64).sqrt();
        assert!((rho - direct).abs() < 1e-8, "{rho} vs {direct}");
    }

    #[test]
    fn pressure_monotone_and_vanishing() {
        let m = ThermoModel::new(&gauss3(), &WeightSequence::power(0.5, 1.0), 1e-14).unwrap();
        let mut prev = 0.0;
        for mu in [-20.0, -10.0, -5.0, -1.0, -0.1, 0.0] {
            let p = m.pressure(mu).unwrap().value();
            assert!(p > prev, "{mu}: {p} <= {prev}");
            prev = p;
        }
        assert!(m.pressure(-40.0).unwrap().value().abs() < 1e-13);
    }

    #[test]
    fn density_is_pressure_derivative() {
        let m = ThermoModel::new(&gauss3(), &WeightSequence::power(1.0, 2.0), 1e-12).unwrap();
        for mu in [-2.0, -0.3] {
            let h = 1e-4;
            let fd = (m.pressure(mu + h).unwrap().value() - m.pressure(mu - h).unwrap().value()) / (2.0 * h);
            assert_relative_eq!(fd, m.density(mu).unwrap().value(), max_relative = 1e-6);
        }
    }

    #[test]
    fn tabulated_quadratic_table_matches_gaussian() {
        // a table that reproduces 4 pi^2 k^2 exactly on its nodes and beyond
        let a = 4.0 * PI * PI;
        let k: Vec<f64> = (0..=400).map(|i| i as f64 * 0.005).collect();
        let eps: Vec<f64> = k.iter().map(|x| a * x * x).collect();
        let t = Dispersion::tabulated(3, k, eps, a * 0.999, 0.5).unwrap();
        let rho_t = critical_density(&t, &WeightSequence::zero(), 1e-9).unwrap().value();
        let rho_g = critical_density(&gauss3(), &WeightSequence::zero(), 1e-9)
            .unwrap()
            .value();
        // linear interpolation overestimates eps, mostly in the first cell
        assert!(rho_t < rho_g);
        // independent composite Simpson over each cell; past k = 2 the
        // integrand is below e^-150
        let f = |r: f64| {
            if r == 0.0 {
                0.0
            } else {
                4.0 * PI * r * r / t.eval_radial(r).exp_m1()
            }
        };
        let mut simpson = 0.0;
        for i in 0..400 {
            let (x0, h) = (i as f64 * 0.005, 0.005 / 200.0);
            let mut acc = f(x0) + f(x0 + 0.005);
            for j in 1..200 {
                acc += f(x0 + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
            }
            simpson += acc * h / 3.0;
        }
        assert!((rho_t - simpson).abs() < 1e-8, "{rho_t} vs {simpson}");
    }
}
