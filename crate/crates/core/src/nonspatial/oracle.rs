//! Brute-force reference: sum over cycle types (integer partitions) with
//! their exact multiplicities `n! / prod_l l^(r_l) r_l!`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::WeightSequence;

/// Largest `n` accepted by the partition enumeration (`p(60) = 966467`).
pub const PARTITION_CAP_N: usize = 60;

#[derive(Debug, Clone, Serialize)]
pub struct OracleTable {
    pub n: usize,
    pub h_n: f64,
    /// `by_length[l - 1] = E_n(N_{l,l})`.
    pub by_length: Vec<f64>,
}

impl OracleTable {
    /// `E_n(N_{a,b})`.
    pub fn expected(&self, a: usize, b: usize) -> f64 {
        self.by_length[a - 1..b].iter().sum()
    }
}

/// Visits every partition of `n` as multiplicities `r[l]` together with the
/// weight `prod_l (e^(-alpha_l)/l)^(r_l) / r_l!`.
fn for_each_partition(decay_over_len: &[f64], n: usize, visit: &mut impl FnMut(&[usize], f64)) {
    let mut r = vec![0usize; n + 1];
    fn rec(
        rest: usize,
        max_part: usize,
        weight: f64,
        w: &[f64],
        r: &mut [usize],
        visit: &mut impl FnMut(&[usize], f64),
    ) {
        if rest == 0 {
            visit(r, weight);
            return;
        }
        if max_part == 0 {
            return;
        }
        // parts strictly smaller than max_part first
        rec(rest, max_part - 1, weight, w, r, visit);
        let mut wk = weight;
        let mut k = 0;
        let mut left = rest;
        while left >= max_part {
            k += 1;
            left -= max_part;
            wk *= w[max_part] / k as f64;
            r[max_part] = k;
            rec(left, max_part - 1, wk, w, r, visit);
        }
        r[max_part] = 0;
    }
    rec(n, n, 1.0, decay_over_len, &mut r, visit);
}

fn decay_table(weights: &WeightSequence, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    for (l, v) in w.iter_mut().enumerate().skip(1) {
        *v = (-weights.alpha(l)).exp() / l as f64;
    }
    w
}

/// `h_n` and all `E_n(N_{l,l})` by direct enumeration of cycle types.
pub fn enumerate_oracle(weights: &WeightSequence, n: usize) -> Result<OracleTable> {
    weights.validate()?;
    if n > PARTITION_CAP_N {
        return Err(Error::TooLarge(format!(
            "partition enumeration capped at n = {PARTITION_CAP_N}, got {n}"
        )));
    }
    if n == 0 {
        return Ok(OracleTable {
            n,
            h_n: 1.0,
            by_length: Vec::new(),
        });
    }
    let w = decay_table(weights, n);
    let mut h = 0.0;
    let mut acc = vec![0.0; n];
    for_each_partition(&w, n, &mut |r, weight| {
        h += weight;
        for (l, &k) in r.iter().enumerate().skip(1) {
            if k > 0 {
                acc[l - 1] += weight * (l * k) as f64;
            }
        }
    });
    acc.iter_mut().for_each(|v| *v /= h);
    Ok(OracleTable {
        n,
        h_n: h,
        by_length: acc,
    })
}

/// Probability of each cycle type of `S_n` (partitions in decreasing order).
pub fn cycle_type_probabilities(weights: &WeightSequence, n: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    if n > PARTITION_CAP_N {
        return Err(Error::TooLarge(format!(
            "partition enumeration capped at n = {PARTITION_CAP_N}, got {n}"
        )));
    }
    let w = decay_table(weights, n);
    let mut out = Vec::new();
    let mut total = 0.0;
    for_each_partition(&w, n, &mut |r, weight| {
        let mut parts = Vec::new();
        for l in (1..r.len()).rev() {
            parts.extend(std::iter::repeat_n(l, r[l]));
        }
        total += weight;
        out.push((parts, weight));
    });
    out.iter_mut().for_each(|(_, p)| *p /= total);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonspatial::{expected_cycle_numbers, h_series};
    use approx::assert_relative_eq;

    #[test]
    fn partition_counts() {
        let mut count = 0usize;
        for_each_partition(&[1.0; 21], 20, &mut |_, _| count += 1);
        assert_eq!(count, 627);
    }

    #[test]
    fn uniform_and_small_cases() {
        assert_relative_eq!(
            enumerate_oracle(&WeightSequence::zero(), 8).unwrap().h_n,
            1.0,
            epsilon = 1e-14
        );
        let t = enumerate_oracle(&WeightSequence::first_only(2f64.ln()), 2).unwrap();
        assert_relative_eq!(t.h_n, 0.625, epsilon = 1e-15);
        assert_relative_eq!(t.expected(1, 1), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn agrees_with_recursion() {
        let w = WeightSequence::power(1.0, 2.0);
        let h = h_series(&w, 10).unwrap();
        let t = enumerate_oracle(&w, 10).unwrap();
        assert_relative_eq!(t.h_n, h.value(10), max_relative = 1e-12);
        for a in 1..=10 {
            for b in a..=10 {
                assert_relative_eq!(
                    t.expected(a, b),
                    expected_cycle_numbers(&h, 10, a, b).unwrap(),
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(
            enumerate_oracle(&WeightSequence::zero(), 61),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn cycle_type_law_sums_to_one() {
        let p = cycle_type_probabilities(&WeightSequence::power(1.0, 2.0), 6).unwrap();
        assert_eq!(p.len(), 11);
        let total: f64 = p.iter().map(|(_, q)| q).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
    }
}
