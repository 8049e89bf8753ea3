//! Permutations of `n` elements weighted by `exp(-sum_l alpha_l r_l)`.
//!
//! Everything here derives from the normalization sequence
//! `h_n = (1/n!) sum_pi exp(-sum_l alpha_l r_l(pi))`, computed by the
//! first-cycle recursion `h_n = (1/n) sum_{l=1}^n e^(-alpha_l) h_{n-l}`.

mod crosscheck;
mod cycles;
mod oracle;

pub use crosscheck::{h_crosscheck, BoundChecks, HCrosscheck, LaplaceCheck};
pub use cycles::{
    expected_cycle_numbers, first_cycle_length_dist, sample_permutation, shift_covariance_check, theorem21_scan,
    CycleTypeSample, ScanPoint, ShiftCheck, Theorem21Scan,
};
pub use oracle::{cycle_type_probabilities, enumerate_oracle, OracleTable, PARTITION_CAP_N};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::{Tail, WeightSequence};

const PLAIN_MIN: f64 = 1e-300;
const PLAIN_MAX: f64 = 1e300;

/// `h_0 .. h_{n_max}` for one weight sequence, with the weights it was built
/// from so that ratios such as `e^(-alpha_j) h_{n-j} / h_n` can be formed.
#[derive(Debug, Clone, Serialize)]
pub struct HSeries {
    n_max: usize,
    alphas: Vec<f64>,
    values: Vec<f64>,
    log_values: Vec<f64>,
    log_domain: bool,
    h_inf: Option<f64>,
    ratio_bound: f64,
    summable: bool,
}

/// Computes `h_0 .. h_{n_max}` in `O(n_max^2)`.
///
/// Values are kept as plain floats unless one of them leaves
/// `[1e-300, 1e300]`; then the recursion is redone with log-sum-exp and
/// [`HSeries::value`] may under- or overflow while ratios stay exact.
pub fn h_series(weights: &WeightSequence, n_max: usize) -> Result<HSeries> {
    weights.validate()?;
    let alphas = weights.alphas(n_max);
    let (values, log_values, log_domain) = match plain_recursion(&alphas) {
        Some(values) => {
            let logs = values.iter().map(|v| v.ln()).collect();
            (values, logs, false)
        }
        None => {
            let logs = log_recursion(&alphas)?;
            let values = logs.iter().map(|l| l.exp()).collect();
            (values, logs, true)
        }
    };
    let summable = weights.is_summable();
    let h_inf = if summable { Some(h_infinity(weights)) } else { None };
    let (lo, hi) = log_values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| {
            (lo.min(l), hi.max(l))
        });
    Ok(HSeries {
        n_max,
        alphas,
        values,
        log_values,
        log_domain,
        h_inf,
        ratio_bound: (hi - lo).exp(),
        summable,
    })
}

fn plain_recursion(alphas: &[f64]) -> Option<Vec<f64>> {
    let n_max = alphas.len();
    let decay: Vec<f64> = alphas.iter().map(|a| (-a).exp()).collect();
    let mut h = Vec::with_capacity(n_max + 1);
    h.push(1.0);
    for n in 1..=n_max {
        let mut acc = 0.0;
        for l in 1..=n {
            acc += decay[l - 1] * h[n - l];
        }
        let v = acc / n as f64;
        if !(PLAIN_MIN..=PLAIN_MAX).contains(&v) {
            return None;
        }
        h.push(v);
    }
    Some(h)
}

fn log_recursion(alphas: &[f64]) -> Result<Vec<f64>> {
    let n_max = alphas.len();
    let mut lh = Vec::with_capacity(n_max + 1);
    lh.push(0.0);
    let mut terms = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        terms.clear();
        terms.extend((1..=n).map(|l| -alphas[l - 1] + lh[n - l]));
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
        let v = m + s.ln() - (n as f64).ln();
        if !v.is_finite() {
            return Err(Error::Overflow { n });
        }
        lh.push(v);
    }
    Ok(lh)
}

/// `exp sum_l (e^(-alpha_l) - 1) / l` for a summable sequence.
fn h_infinity(weights: &WeightSequence) -> f64 {
    let l0 = weights.explicit_len();
    let cut = (l0 + 1).max(200_000);
    let mut s = 0.0;
    // Smallest terms first.
    for l in (1..=cut).rev() {
        s += (-weights.alpha(l)).exp_m1() / l as f64;
    }
    let m = cut as f64;
    s += match weights.tail {
        Tail::Zero => 0.0,
        Tail::Power { c, p } => {
            if c == 0.0 {
                0.0
            } else {
                // sum_{l>M} f(l) ~ int_M^inf f - f(M)/2, f(x) = (e^{-c x^-p} - 1)/x
                let u = c * m.powf(-p);
                let f_m = (-u).exp_m1() / m;
                -ein(u) / p - 0.5 * f_m
            }
        }
        Tail::LogDecay { c, p } => {
            if c == 0.0 {
                0.0
            } else {
                // int_{ln M}^inf (e^{-c t^-p} - 1) dt, expanded in powers of c
                let t = m.ln();
                let mut acc = 0.0;
                let mut term = 1.0;
                for k in 1..60 {
                    term *= -c / k as f64;
                    let e = p * k as f64 - 1.0;
                    let add = term * t.powf(-e) / e;
                    acc += add;
                    if add.abs() < 1e-18 * acc.abs().max(1e-300) {
                        break;
                    }
                }
                let f_m = (-c / t.powf(p)).exp_m1() / m;
                acc - 0.5 * f_m
            }
        }
    };
    s.exp()
}

/// `Ein(z) = int_0^z (1 - e^-t)/t dt = sum_{k>=1} (-1)^(k+1) z^k / (k k!)`.
fn ein(z: f64) -> f64 {
    let mut term = 1.0;
    let mut acc = 0.0;
    for k in 1..200 {
        term *= z / k as f64;
        let add = if k % 2 == 1 { term } else { -term } / k as f64;
        acc += add;
        if add.abs() <= 1e-17 * acc.abs() {
            break;
        }
    }
    acc
}

impl HSeries {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `h_n`. In log-domain mode this may be `0` or `inf`.
    pub fn value(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn log_value(&self, n: usize) -> f64 {
        self.log_values[n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_log_domain(&self) -> bool {
        self.log_domain
    }

    pub fn h_inf(&self) -> Option<f64> {
        self.h_inf
    }

    /// `max h / min h` over the stored range: a lower bound on the
    /// supremum over all lengths.
    pub fn ratio_bound(&self) -> f64 {
        self.ratio_bound
    }

    pub fn is_summable(&self) -> bool {
        self.summable
    }

    pub fn alpha(&self, l: usize) -> f64 {
        self.alphas[l - 1]
    }

    /// `h_m / h_n`.
    pub fn ratio(&self, m: usize, n: usize) -> f64 {
        if self.log_domain {
            (self.log_values[m] - self.log_values[n]).exp()
        } else {
            self.values[m] / self.values[n]
        }
    }

    /// `e^(-alpha_j) h_{n-j} / h_n`: the weight of a first cycle of length `j`.
    pub(crate) fn first_cycle_weight(&self, n: usize, j: usize) -> f64 {
        if self.log_domain {
            (-self.alphas[j - 1] + self.log_values[n - j] - self.log_values[n]).exp()
        } else {
            (-self.alphas[j - 1]).exp() * self.values[n - j] / self.values[n]
        }
    }

    pub(crate) fn check_n(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::Range(format!(
                "n = {n} exceeds computed range n_max = {}",
                self.n_max
            )));
        }
        Ok(())
    }
}
