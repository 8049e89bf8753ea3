use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatperm::fourier::{
    build_lattice, cycle_density_expectation, enumerate_small, mode_marginals, n0_law_and_mgf, partition_dp,
    sample_occupations, Mode, ModeLattice,
};
use spatperm::{Dispersion, WeightSequence};

fn lattice(eps: &[f64]) -> ModeLattice {
    let mut modes = vec![Mode {
        m: vec![0],
        k_norm: 0.0,
        eps: 0.0,
    }];
    modes.extend(eps.iter().enumerate().map(|(i, &e)| Mode {
        m: vec![i as i64 + 1],
        k_norm: (i + 1) as f64,
        eps: e,
    }));
    ModeLattice::from_modes(2.0, 1, modes).unwrap()
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
    (
        prop::collection::vec(0.01f64..3.0, 0..=4),
        prop::collection::vec(-1.0f64..2.0, 5),
        1usize..=5,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn dp_matches_enumeration((eps, alpha, n) in instance()) {
        let lat = lattice(&eps);
        let w = WeightSequence::explicit(alpha);
        let t = partition_dp(&lat, &w, n).unwrap();
        let e = enumerate_small(&lat, &w, n).unwrap();
        prop_assert!((t.y() - e.y).abs() <= 1e-10 * e.y);
        let marg = mode_marginals(&t);
        for (k, m) in marg.iter().enumerate() {
            let exact = e.marginal(k);
            for (a, b) in m.iter().zip(&exact) {
                prop_assert!((a - b).abs() <= 1e-10, "mode {k}: {a} vs {b}");
            }
        }
        for a in 1..=n {
            for b in a..=n {
                let v = cycle_density_expectation(&t, a, b).unwrap();
                prop_assert!((v - e.cycle_density(a, b)).abs() <= 1e-10);
            }
        }
        let z = n0_law_and_mgf(&t, &[]);
        for (a, b) in z.law.iter().zip(&e.marginal(0)) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn shifted_weights_leave_laws_unchanged((eps, alpha, n) in instance(), c in -2.0f64..2.0) {
        let lat = lattice(&eps);
        let w = WeightSequence::explicit(alpha);
        let a = partition_dp(&lat, &w, n).unwrap();
        let b = partition_dp(&lat, &w.shifted(c), n).unwrap();
        prop_assert!((b.log_y() - a.log_y() + c * n as f64).abs() < 1e-10);
        for (x, y) in mode_marginals(&a).iter().flatten().zip(mode_marginals(&b).iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn sampler_frequencies_match_enumeration() {
    let lat = lattice(&[0.3, 0.3, 0.9, 1.7]);
    let w = WeightSequence::explicit(vec![0.2, -0.4, 0.5, 0.0, 0.8]);
    let n = 5;
    let t = partition_dp(&lat, &w, n).unwrap();
    let e = enumerate_small(&lat, &w, n).unwrap();
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(sample_occupations(&t, &mut rng)).or_insert(0usize) += 1;
    }
    for (occ, p) in &e.occupations {
        let c = *counts.get(occ).unwrap_or(&0) as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        // a handful of cells out of 126; 5 sigma keeps the family-wise rate small
        assert!(
            (c - draws as f64 * p).abs() <= 5.0 * sd.max(1.0),
            "{occ:?}: {c} vs {}",
            draws as f64 * p
        );
    }
    assert!(counts.keys().all(|o| e.occupation_probability(o) > 0.0));
}

#[test]
fn total_density_is_n_over_v() {
    let disp = Dispersion::gaussian(3, 1.0).unwrap();
    let lat = build_lattice(3.0, 3, &disp, 25.0, 1e-6).unwrap();
    let w = WeightSequence::power(1.0, 2.0);
    let t = partition_dp(&lat, &w, 30).unwrap();
    let v = cycle_density_expectation(&t, 1, 30).unwrap();
    assert!((v - 30.0 / 27.0).abs() <= 1e-8 * 30.0 / 27.0);
}
