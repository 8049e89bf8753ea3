use serde::Serialize;

use super::{h_series, HSeries};
use crate::error::{Error, Result};
use crate::weights::WeightSequence;

/// Laplace identity `sum_n e^(-gamma n) h_n = exp sum_j e^(-gamma j - alpha_j) / j`.
#[derive(Debug, Clone, Serialize)]
pub struct LaplaceCheck {
    pub gamma: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Upper bound on the discarded part of the left sum.
    pub lhs_truncation_bound: f64,
    /// Upper bound on the error of the right side.
    pub rhs_truncation_bound: f64,
    pub lhs_terms: usize,
    pub rel_discrepancy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundChecks {
    /// Largest relative violation of `h_n >= e^(-n alpha_1) / n!`.
    pub factorial_lower: f64,
    /// Largest relative violation of `h_n >= e^(-alpha_n) / n`.
    pub last_cycle_lower: f64,
    /// `Some` when the weights are subadditive on the range: largest
    /// relative violation of `h_n <= e^(-alpha_n)`.
    pub subadditive_upper: Option<f64>,
    /// `Some` when superadditive: largest relative violation of
    /// `h_n >= e^(-alpha_n)`.
    pub superadditive_lower: Option<f64>,
}

impl BoundChecks {
    pub fn max_violation(&self) -> f64 {
        [
            self.factorial_lower,
            self.last_cycle_lower,
            self.subadditive_upper.unwrap_or(0.0),
            self.superadditive_lower.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HCrosscheck {
    pub n_max: usize,
    pub recursion: Vec<f64>,
    pub explicit: Vec<f64>,
    pub increments: Vec<f64>,
    /// `max_n |explicit - recursion| / recursion`.
    pub explicit_max_rel: f64,
    pub increments_max_rel: f64,
    pub laplace: LaplaceCheck,
    pub bounds: BoundChecks,
}

impl HCrosscheck {
    /// Largest relative discrepancy across all identities.
    pub fn max_discrepancy(&self) -> f64 {
        self.explicit_max_rel
            .max(self.increments_max_rel)
            .max(self.laplace.rel_discrepancy)
    }
}

/// `sum_{k>=0} F^k / k!` truncated at degree `n`, for `F` with zero
/// constant term: the coefficients of `exp F`, expanded power by power.
fn exp_by_powers(f: &[f64], n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n + 1];
    acc[0] = 1.0;
    let mut power = acc.clone();
    for k in 1..=n {
        let mut next = vec![0.0; n + 1];
        // power has lowest degree k-1, f lowest degree 1
        for (i, &p) in power.iter().enumerate().skip(k - 1) {
            if p == 0.0 {
                continue;
            }
            for (j, &c) in f.iter().enumerate().take(n + 1 - i).skip(1) {
                next[i + j] += p * c;
            }
        }
        let inv_k = 1.0 / k as f64;
        next.iter_mut().for_each(|v| *v *= inv_k);
        for (a, v) in acc.iter_mut().zip(&next) {
            *a += v;
        }
        power = next;
    }
    acc
}

/// `h_n` from the explicit sum over compositions,
/// `sum_k (1/k!) sum_{l_1+..+l_k=n} prod e^(-alpha_{l_i}) / l_i`.
pub(crate) fn h_explicit(weights: &WeightSequence, n_max: usize) -> Vec<f64> {
    let mut f = vec![0.0; n_max + 1];
    for (m, c) in f.iter_mut().enumerate().skip(1) {
        *c = (-weights.alpha(m)).exp() / m as f64;
    }
    exp_by_powers(&f, n_max)
}

/// `h_n` as cumulative sums of the increments
/// `sum_k (1/k!) sum_{l_1+..+l_k=n} prod (e^(-alpha_{l_i}) - 1) / l_i`.
pub(crate) fn h_from_increments(weights: &WeightSequence, n_max: usize) -> Vec<f64> {
    let mut f = vec![0.0; n_max + 1];
    for (m, c) in f.iter_mut().enumerate().skip(1) {
        *c = (-weights.alpha(m)).exp_m1() / m as f64;
    }
    let inc = exp_by_powers(&f, n_max);
    inc.iter()
        .scan(0.0, |s, d| {
            *s += d;
            Some(*s)
        })
        .collect()
}

const LAPLACE_MAX_TERMS: usize = 20_000;

fn laplace_check(weights: &WeightSequence, h: &HSeries, gamma: f64) -> Result<LaplaceCheck> {
    // e^(-gamma n) h_n(alpha) = e^(-g n) h_n(alpha - shift*l) with g = gamma + shift
    let g = gamma + weights.shift;
    if !(g > 0.0) {
        return Err(Error::invalid(
            "gamma",
            format!("gamma + shift = {g} must be positive for the Laplace identity"),
        ));
    }
    if !weights.without_shift().has_sublinear_growth() {
        return Err(Error::invalid("weights", "Laplace identity needs alpha_l / l -> 0"));
    }
    let inf = weights.base_infimum();
    if !inf.is_finite() {
        return Err(Error::invalid("weights", "weights unbounded below"));
    }
    // e^{-base_l} <= z, so h_n(base) <= u_n(z) = coefficient of (1-x)^{-z}.
    let z = (-inf).exp();
    let q = (-g).exp();
    let rhs_sum = {
        let mut s = 0.0;
        let mut j = 1usize;
        loop {
            s += (-g * j as f64 - weights.base(j)).exp() / j as f64;
            let bound = z * q.powi(j as i32 + 1) / ((j + 1) as f64 * (1.0 - q));
            if bound <= 1e-17 * s.abs().max(1e-300) || j > LAPLACE_MAX_TERMS * 10 {
                break (s, bound);
            }
            j += 1;
        }
    };
    let rhs = rhs_sum.0.exp();
    let rhs_bound = rhs * rhs_sum.1.exp_m1();

    // Tail of the left side after N terms, with t_n = e^{-g n} u_n(z).
    let tail_after = |n_cut: usize| -> f64 {
        // t_{n_cut+1} and the worst ratio beyond it
        let mut log_t = 0.0;
        for i in 1..=n_cut + 1 {
            log_t += ((i as f64 - 1.0 + z) / i as f64).ln() - g;
        }
        let n1 = (n_cut + 1) as f64;
        let r = q * ((n1 + z) / (n1 + 1.0)).max(1.0);
        if r >= 1.0 {
            f64::INFINITY
        } else {
            log_t.exp() / (1.0 - r)
        }
    };
    let mut n_cut = h.n_max().max(1);
    while tail_after(n_cut) > 1e-16 * rhs && n_cut < LAPLACE_MAX_TERMS {
        n_cut = (n_cut * 2).min(LAPLACE_MAX_TERMS);
    }
    let lhs_bound = tail_after(n_cut);
    let base = weights.without_shift();
    let hl = if n_cut == h.n_max() && weights.shift == 0.0 {
        h.clone()
    } else {
        h_series(&base, n_cut)?
    };
    let mut lhs = 0.0;
    for n in (0..=n_cut).rev() {
        lhs += (-g * n as f64 + hl.log_value(n)).exp();
    }
    Ok(LaplaceCheck {
        gamma,
        lhs,
        rhs,
        lhs_truncation_bound: lhs_bound,
        rhs_truncation_bound: rhs_bound,
        lhs_terms: n_cut + 1,
        rel_discrepancy: (lhs - rhs).abs() / rhs,
    })
}

fn bound_checks(weights: &WeightSequence, h: &HSeries) -> BoundChecks {
    let n_max = h.n_max();
    let a1 = weights.alpha(1);
    let mut log_fact = 0.0;
    let mut factorial_lower = 0.0f64;
    let mut last_cycle_lower = 0.0f64;
    let sub = weights.is_subadditive_up_to(n_max);
    let sup = weights.is_superadditive_up_to(n_max);
    let mut sub_v = 0.0f64;
    let mut sup_v = 0.0f64;
    // relative violation of lhs >= rhs in log form
    let viol = |lhs: f64, rhs: f64| (rhs - lhs).exp_m1().max(0.0);
    for n in 1..=n_max {
        log_fact += (n as f64).ln();
        let lh = h.log_value(n);
        let an = weights.alpha(n);
        factorial_lower = factorial_lower.max(viol(lh, -(n as f64) * a1 - log_fact));
        last_cycle_lower = last_cycle_lower.max(viol(lh, -an - (n as f64).ln()));
        if sub {
            sub_v = sub_v.max(viol(-an, lh));
        }
        if sup {
            sup_v = sup_v.max(viol(lh, -an));
        }
    }
    BoundChecks {
        factorial_lower,
        last_cycle_lower,
        subadditive_upper: sub.then_some(sub_v),
        superadditive_lower: sup.then_some(sup_v),
    }
}

/// Recomputes `h_1 .. h_{n_max}` by the explicit composition formula and by
/// summed increments, checks the Laplace identity at `gamma`, and checks the
/// lower and upper bounds on `h_n`.
///
/// The composition routes cost `O(n_max^3)`; they are meant for moderate
/// `n_max` (a few hundred at most).
pub fn h_crosscheck(weights: &WeightSequence, n_max: usize, gamma: f64) -> Result<HCrosscheck> {
    if n_max < 1 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    let h = h_series(weights, n_max)?;
    let explicit = h_explicit(weights, n_max);
    let increments = h_from_increments(weights, n_max);
    let rel = |v: &[f64]| {
        (1..=n_max)
            .map(|n| (v[n] - h.value(n)).abs() / h.value(n))
            .fold(0.0, f64::max)
    };
    let explicit_max_rel = rel(&explicit);
    let increments_max_rel = rel(&increments);
    let laplace = laplace_check(weights, &h, gamma)?;
    let bounds = bound_checks(weights, &h);
    Ok(HCrosscheck {
        n_max,
        recursion: h.values().to_vec(),
        explicit,
        increments,
        explicit_max_rel,
        increments_max_rel,
        laplace,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_compositions_sum_to_one() {
        let v = h_explicit(&WeightSequence::zero(), 40);
        for (n, x) in v.iter().enumerate() {
            assert!((x - 1.0).abs() < 1e-12, "n = {n}: {x}");
        }
    }

    #[test]
    fn routes_agree_for_several_families() {
        for w in [
            WeightSequence::zero(),
            WeightSequence::power(1.0, 2.0),
            WeightSequence::first_only(2f64.ln()),
            WeightSequence::explicit(vec![-0.4, 0.9, 0.0, 1.5]),
        ] {
            let r = h_crosscheck(&w, 30, 0.5).unwrap();
            assert!(r.explicit_max_rel < 1e-10, "{w:?}: {}", r.explicit_max_rel);
            assert!(r.increments_max_rel < 1e-10, "{w:?}: {}", r.increments_max_rel);
            assert!(r.laplace.rel_discrepancy < 1e-10, "{w:?}: {:?}", r.laplace);
            assert!(r.bounds.max_violation() < 1e-12, "{w:?}: {:?}", r.bounds);
        }
    }

    #[test]
    fn laplace_with_truncation_bound_inverse_square() {
        let w = WeightSequence::power(1.0, 2.0);
        let r = h_crosscheck(&w, 20, 0.5).unwrap();
        let l = &r.laplace;
        assert!(l.lhs_truncation_bound < 1e-15);
        assert!((l.lhs - l.rhs).abs() <= l.lhs_truncation_bound + l.rhs_truncation_bound + 1e-13 * l.rhs);
    }

    #[test]
    fn additivity_bounds_are_checked_when_applicable() {
        // alpha_l = 0.1 l^2: superadditive
        let sq = WeightSequence::explicit((1..=25).map(|l| 0.1 * (l * l) as f64).collect());
        let r = h_crosscheck(&sq, 25, 1.0).unwrap();
        assert!(r.bounds.superadditive_lower.is_some());
        assert!(r.bounds.max_violation() < 1e-12);
        // alpha_l = sqrt(l): subadditive
        let rt = WeightSequence::explicit((1..=25).map(|l| (l as f64).sqrt()).collect());
        let r = h_crosscheck(&rt, 25, 1.0).unwrap();
        assert!(r.bounds.subadditive_upper.is_some());
        assert!(r.bounds.max_violation() < 1e-12);
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(h_crosscheck(&WeightSequence::zero(), 5, 0.0).is_err());
        assert!(h_crosscheck(&WeightSequence::zero(), 0, 1.0).is_err());
    }
}
