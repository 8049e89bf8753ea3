#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatperm::nonspatial::{
    enumerate_oracle, expected_cycle_numbers, first_cycle_length_dist, h_series, sample_permutation,
    shift_covariance_check,
};
use spatperm::WeightSequence;

/// Every permutation of `0..n` in lexicographic order.
fn all_perms(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
        out.push(p.clone());
    }
}

fn cycles_of(p: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut out = vec![];
    for s in 0..p.len() {
        let (mut i, mut l) = (s, 0);
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            l += 1;
        }
        if l > 0 {
            out.push(l);
        }
    }
    out
}

/// `h_n` and `E_n(N_{a,b})` by summing over `S_n` directly.
fn brute(alpha: &[f64], n: usize) -> (f64, Vec<Vec<f64>>) {
    let perms = all_perms(n);
    let mut z = 0.0;
    let mut e = vec![vec![0.0; n + 1]; n + 1];
    for p in &perms {
        let lens = cycles_of(p);
        let w = (-lens.iter().map(|&l| alpha[l - 1]).sum::<f64>()).exp();
        z += w;
        for a in 1..=n {
            for b in a..=n {
                e[a][b] += w * lens.iter().filter(|&&l| l >= a && l <= b).sum::<usize>() as f64;
            }
        }
    }
    for row in e.iter_mut() {
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    (z / perms.len() as f64, e)
}

fn weights_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..3.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raising_one_weight_lowers_h(alpha in weights_strategy(12), j in 1usize..12, bump in 0.01f64..2.0) {
        let w = WeightSequence::explicit(alpha.clone());
        let mut raised = alpha.clone();
        raised[j - 1] += bump;
        let h = h_series(&w, 12).unwrap();
        let g = h_series(&WeightSequence::explicit(raised), 12).unwrap();
        for n in 0..=12 {
            if n < j {
                prop_assert!((g.value(n) - h.value(n)).abs() <= 1e-14 * h.value(n));
            } else {
                prop_assert!(g.value(n) < h.value(n));
            }
        }
    }

    #[test]
    fn recursion_matches_brute_force(alpha in weights_strategy(6), n in 1usize..=6) {
        let w = WeightSequence::explicit(alpha.clone());
        let h = h_series(&w, n).unwrap();
        let (hn, e) = brute(&alpha, n);
        prop_assert!((h.value(n) - hn).abs() <= 1e-12 * hn);
        for a in 1..=n {
            for b in a..=n {
                let v = expected_cycle_numbers(&h, n, a, b).unwrap();
                prop_assert!((v - e[a][b]).abs() <= 1e-11 * n as f64);
            }
        }
    }

    #[test]
    fn partition_oracle_matches_recursion(alpha in weights_strategy(16), n in 1usize..=16) {
        let w = WeightSequence::explicit(alpha);
        let h = h_series(&w, n).unwrap();
        let o = enumerate_oracle(&w, n).unwrap();
        prop_assert!((o.h_n - h.value(n)).abs() <= 1e-10 * h.value(n));
        for a in 1..=n {
            let v = expected_cycle_numbers(&h, n, a, n).unwrap();
            prop_assert!((o.expected(a, n) - v).abs() <= 1e-10 * n as f64);
        }
    }

    #[test]
    fn shift_is_a_pure_rescaling(alpha in weights_strategy(5), c in -3.0f64..3.0) {
        let w = WeightSequence::explicit(alpha);
        let r = shift_covariance_check(&w, c, 40).unwrap();
        prop_assert!(r.h_max_rel < 1e-10);
        prop_assert!(r.dist_max_abs < 1e-12);
        let h = h_series(&w, 40).unwrap();
        let hs = h_series(&w.shifted(c), 40).unwrap();
        for n in 1..=40 {
            let a = first_cycle_length_dist(&h, n).unwrap();
            let b = first_cycle_length_dist(&hs, n).unwrap();
            prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }
}

/// Chi-square quantile at upper tail 1e-3, Wilson-Hilferty.
fn chi2_crit(df: f64) -> f64 {
    let z = 3.09;
    df * (1.0 - 2.0 / (9.0 * df) + z * (2.0 / (9.0 * df)).sqrt()).powi(3)
}

#[test]
fn labeled_sampler_chi_square() {
    let alpha = [0.4, -0.3, 1.1, 0.2, 0.9, -0.5];
    for n in 2..=6 {
        let w = WeightSequence::explicit(alpha.to_vec());
        let h = h_series(&w, n).unwrap();
        let perms = all_perms(n);
        let (hn, _) = brute(&alpha, n);
        let nf: f64 = (1..=n).map(|i| i as f64).product();
        let exact: Vec<f64> = perms
            .iter()
            .map(|p| (-cycles_of(p).iter().map(|&l| alpha[l - 1]).sum::<f64>()).exp() / (nf * hn))
            .collect();
        let draws = 200_000;
        let mut counts = vec![0usize; perms.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(100 + n as u64);
        for _ in 0..draws {
            let s = sample_permutation(&h, n, true, &mut rng).unwrap();
            let p = s.permutation.unwrap();
            counts[perms.binary_search(&p).unwrap()] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&exact)
            .map(|(&c, &p)| {
                let e = p * draws as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let crit = chi2_crit((perms.len() - 1) as f64);
        assert!(chi2 < crit, "n = {n}: chi2 {chi2} >= {crit}");
    }
}

#[test]
fn uniform_weights_give_ones() {
    let h = h_series(&WeightSequence::zero(), 500).unwrap();
    assert!(h.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
}
