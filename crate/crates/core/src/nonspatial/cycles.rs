use rand::{Rng, RngExt};
use serde::Serialize;

use super::{h_series, HSeries};
use crate::error::{Error, Result};
use crate::weights::WeightSequence;

/// Exact `E_n(N_{a,b})`, the expected number of indices in cycles of
/// length `a..=b`, as `sum_{j=a}^b e^(-alpha_j) h_{n-j} / h_n`.
pub fn expected_cycle_numbers(h: &HSeries, n: usize, a: usize, b: usize) -> Result<f64> {
    h.check_n(n)?;
    if a < 1 || a > b || b > n {
        return Err(Error::Range(format!(
            "need 1 <= a <= b <= n, got a = {a}, b = {b}, n = {n}"
        )));
    }
    Ok((a..=b).map(|j| h.first_cycle_weight(n, j)).sum())
}

/// Law of the length of the cycle containing a given index:
/// entry `j - 1` is `e^(-alpha_j) h_{n-j} / (n h_n)`.
pub fn first_cycle_length_dist(h: &HSeries, n: usize) -> Result<Vec<f64>> {
    h.check_n(n)?;
    if n == 0 {
        return Err(Error::Range("n must be at least 1".into()));
    }
    let inv = 1.0 / n as f64;
    Ok((1..=n).map(|j| h.first_cycle_weight(n, j) * inv).collect())
}

/// A cycle type, optionally with a labeled permutation realizing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleTypeSample {
    pub n: usize,
    /// Cycle lengths in the order they were drawn.
    pub cycle_lengths: Vec<usize>,
    /// `permutation[i]` is the image of `i`.
    pub permutation: Option<Vec<usize>>,
}

impl CycleTypeSample {
    /// Cycle lengths sorted in decreasing order.
    pub fn partition(&self) -> Vec<usize> {
        let mut p = self.cycle_lengths.clone();
        p.sort_unstable_by(|a, b| b.cmp(a));
        p
    }

    pub fn num_cycles(&self) -> usize {
        self.cycle_lengths.len()
    }
}

/// Exact sampler: draw the length of the cycle through the lowest remaining
/// index from [`first_cycle_length_dist`], remove that cycle, repeat.
///
/// With `labeled`, the companions of the lowest index are a uniformly
/// random ordered selection of the remaining indices.
pub fn sample_permutation<R: Rng + ?Sized>(
    h: &HSeries,
    n: usize,
    labeled: bool,
    rng: &mut R,
) -> Result<CycleTypeSample> {
    h.check_n(n)?;
    let mut lengths = Vec::new();
    let mut perm = labeled.then(|| vec![0usize; n]);
    let mut pool: Vec<usize> = if labeled { (0..n).collect() } else { Vec::new() };
    let mut m = n;
    while m > 0 {
        let u: f64 = rng.random::<f64>() * m as f64;
        let mut acc = 0.0;
        let mut j = m;
        for l in 1..=m {
            acc += h.first_cycle_weight(m, l);
            if u < acc {
                j = l;
                break;
            }
        }
        lengths.push(j);
        if let Some(perm) = perm.as_mut() {
            // pool is kept sorted at position 0 by construction: take the
            // lowest remaining index, then j-1 uniform companions.
            let lowest_pos = pool
                .iter()
                .enumerate()
                .min_by_key(|(_, &v)| v)
                .map(|(i, _)| i)
                .expect("pool non-empty");
            let first = pool.swap_remove(lowest_pos);
            let mut prev = first;
            for _ in 1..j {
                let k = rng.random_range(0..pool.len());
                let next = pool.swap_remove(k);
                perm[prev] = next;
                prev = next;
            }
            perm[prev] = first;
        }
        m -= j;
    }
    Ok(CycleTypeSample {
        n,
        cycle_lengths: lengths,
        permutation: perm,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub s: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem21Scan {
    pub n: usize,
    pub points: Vec<ScanPoint>,
    /// False when the weights violate the summability hypothesis; the values
    /// are still exact at finite `n`.
    pub within_hypothesis: bool,
}

/// `E_n(N_{1, floor(s n)}) / n` for each `s` in the grid.
pub fn theorem21_scan(weights: &WeightSequence, n: usize, s_grid: &[f64]) -> Result<Theorem21Scan> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    if let Some(s) = s_grid.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::invalid("s_grid", format!("{s} not in [0, 1]")));
    }
    let h = h_series(weights, n)?;
    scan_with(&h, n, s_grid, weights.is_summable())
}

pub(crate) fn scan_with(h: &HSeries, n: usize, s_grid: &[f64], within_hypothesis: bool) -> Result<Theorem21Scan> {
    // cumulative weights once, then read off each s
    let mut cum = vec![0.0; n + 1];
    for j in 1..=n {
        cum[j] = cum[j - 1] + h.first_cycle_weight(n, j);
    }
    let points = s_grid
        .iter()
        .map(|&s| {
            let k = ((s * n as f64).floor() as usize).min(n);
            let value = if k == n { 1.0 } else { cum[k] / n as f64 };
            ScanPoint { s, value }
        })
        .collect();
    Ok(Theorem21Scan {
        n,
        points,
        within_hypothesis,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftCheck {
    pub c: f64,
    pub n_max: usize,
    /// `max_n |h_n(shifted) e^(c n) / h_n - 1|`.
    pub h_max_rel: f64,
    /// `max |p_n(l_1 = j; shifted) - p_n(l_1 = j)|` over all `n, j`.
    pub dist_max_abs: f64,
}

/// Compares `h_n` and the first-cycle law for `alpha` and `alpha + c l`.
pub fn shift_covariance_check(weights: &WeightSequence, c: f64, n_max: usize) -> Result<ShiftCheck> {
    if n_max < 1 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let h = h_series(weights, n_max)?;
    let hs = h_series(&weights.shifted(c), n_max)?;
    let mut h_max_rel = 0.0f64;
    let mut dist_max_abs = 0.0f64;
    for n in 1..=n_max {
        let r = (hs.log_value(n) + c * n as f64 - h.log_value(n)).exp_m1();
        h_max_rel = h_max_rel.max(r.abs());
        let d0 = first_cycle_length_dist(&h, n)?;
        let d1 = first_cycle_length_dist(&hs, n)?;
        for (a, b) in d0.iter().zip(&d1) {
            dist_max_abs = dist_max_abs.max((a - b).abs());
        }
    }
    Ok(ShiftCheck {
        c,
        n_max,
        h_max_rel,
        dist_max_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ln2() -> WeightSequence {
        WeightSequence::first_only(2f64.ln())
    }

    #[test]
    fn sum_rule_and_uniform_counts() {
        let w = WeightSequence::power(1.0, 2.0);
        let h = h_series(&w, 40).unwrap();
        for n in 1..=40 {
            assert_relative_eq!(
                expected_cycle_numbers(&h, n, 1, n).unwrap(),
                n as f64,
                max_relative = 1e-9
            );
        }
        let h0 = h_series(&WeightSequence::zero(), 12).unwrap();
        assert_relative_eq!(expected_cycle_numbers(&h0, 12, 3, 7).unwrap(), 5.0);
    }

    #[test]
    fn brute_force_small_case() {
        let h = h_series(&ln2(), 2).unwrap();
        assert_relative_eq!(expected_cycle_numbers(&h, 2, 1, 1).unwrap(), 0.4, epsilon = 1e-15);
        let d = first_cycle_length_dist(&h, 2).unwrap();
        assert_relative_eq!(d[0], 0.2, epsilon = 1e-15);
        assert_relative_eq!(d[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn range_errors() {
        let h = h_series(&WeightSequence::zero(), 5).unwrap();
        assert!(expected_cycle_numbers(&h, 5, 2, 6).is_err());
        assert!(expected_cycle_numbers(&h, 6, 1, 1).is_err());
        assert!(expected_cycle_numbers(&h, 5, 3, 2).is_err());
        assert!(first_cycle_length_dist(&h, 6).is_err());
    }

    #[test]
    fn first_cycle_dist_uniform_and_trivial() {
        let h = h_series(&WeightSequence::zero(), 7).unwrap();
        let d = first_cycle_length_dist(&h, 7).unwrap();
        assert!(d.iter().all(|&p| (p - 1.0 / 7.0).abs() < 1e-15));
        assert_eq!(first_cycle_length_dist(&h, 1).unwrap(), vec![1.0]);
    }

    #[test]
    fn sampler_single_element() {
        let h = h_series(&ln2(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let s = sample_permutation(&h, 1, true, &mut rng).unwrap();
            assert_eq!(s.cycle_lengths, vec![1]);
            assert_eq!(s.permutation, Some(vec![0]));
        }
    }

    #[test]
    fn labeled_permutation_matches_cycle_type() {
        let h = h_series(&WeightSequence::power(0.5, 1.0), 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let s = sample_permutation(&h, 30, true, &mut rng).unwrap();
            let perm = s.permutation.clone().unwrap();
            let mut seen = [false; 30];
            let mut lens = Vec::new();
            for i in 0..30 {
                if seen[i] {
                    continue;
                }
                let mut l = 0;
                let mut k = i;
                while !seen[k] {
                    seen[k] = true;
                    k = perm[k];
                    l += 1;
                }
                lens.push(l);
            }
            lens.sort_unstable_by(|a, b| b.cmp(a));
            assert_eq!(lens, s.partition());
            assert_eq!(s.cycle_lengths.iter().sum::<usize>(), 30);
        }
    }

    #[test]
    fn uniform_first_cycle_frequencies() {
        let h = h_series(&WeightSequence::zero(), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            let s = sample_permutation(&h, 4, false, &mut rng).unwrap();
            counts[s.cycle_lengths[0] - 1] += 1;
        }
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 0.25 * draws as f64).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn ln2_cycle_type_frequencies() {
        let h = h_series(&ln2(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 100_000;
        let ident = (0..draws)
            .filter(|_| sample_permutation(&h, 2, false, &mut rng).unwrap().num_cycles() == 2)
            .count();
        let sigma = (draws as f64 * 0.2 * 0.8).sqrt();
        assert!((ident as f64 - 0.2 * draws as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn theorem_scan_endpoints() {
        let w = WeightSequence::power(1.0, 2.0);
        let scan = theorem21_scan(&w, 50, &[0.0, 1.0]).unwrap();
        assert_eq!(scan.points[0].value, 0.0);
        assert_eq!(scan.points[1].value, 1.0);
        assert!(scan.within_hypothesis);
        let flagged = theorem21_scan(&WeightSequence::power(1.0, 0.0), 10, &[0.5]).unwrap();
        assert!(!flagged.within_hypothesis);
        assert!(theorem21_scan(&w, 10, &[1.5]).is_err());
    }

    #[test]
    fn shift_covariance() {
        let r = shift_covariance_check(&WeightSequence::power(1.0, 2.0), 0.0, 30).unwrap();
        assert_eq!(r.h_max_rel, 0.0);
        assert_eq!(r.dist_max_abs, 0.0);
        let r = shift_covariance_check(&WeightSequence::zero(), 1.0, 40).unwrap();
        assert!(r.h_max_rel < 1e-10);
        let hs = h_series(&WeightSequence::zero().shifted(1.0), 40).unwrap();
        for n in 0..=40 {
            assert_relative_eq!(hs.value(n), (-(n as f64)).exp(), max_relative = 1e-12);
        }
        let r = shift_covariance_check(&WeightSequence::power(1.0, 2.0), 0.3, 60).unwrap();
        assert!(r.h_max_rel < 1e-10);
        assert!(r.dist_max_abs < 1e-12);
    }
}
