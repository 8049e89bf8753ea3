use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatperm::fourier::{build_lattice, cycle_density_expectation, partition_dp};
use spatperm::spatial::{hamiltonian, mc_step, run_chain, uniform_positions, MCParams, PeriodicXi, SpatialState};
use spatperm::{Dispersion, WeightSequence};

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in all_perms(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Exact Metropolis kernel on a grid variant of the chain: a displacement
/// moves one index to a uniform grid point, a transposition swaps a uniform
/// pair. Returns the states and the transition matrix.
fn grid_kernel(
    xi: &PeriodicXi,
    w: &WeightSequence,
    n: usize,
    g: usize,
    p_disp: f64,
) -> (Vec<SpatialState>, Vec<Vec<f64>>) {
    let l = xi.l;
    let h = l / g as f64;
    let perms = all_perms(n);
    let mut states = vec![];
    let total = g.pow(n as u32);
    for p in &perms {
        for idx in 0..total {
            let mut r = idx;
            let pos: Vec<f64> = (0..n)
                .map(|_| {
                    let v = (r % g) as f64 * h;
                    r /= g;
                    v
                })
                .collect();
            states.push(SpatialState::new(xi, w, pos, p.clone()).unwrap());
        }
    }
    let index = |s: &SpatialState| -> usize {
        let pi = perms.binary_search(&s.perm().to_vec()).unwrap();
        let mut idx = 0;
        for i in (0..n).rev() {
            idx = idx * g + ((s.position(i)[0] / h).round() as usize % g);
        }
        pi * total + idx
    };
    let m = states.len();
    let mut t = vec![vec![0.0; m]; m];
    let pairs = n * (n - 1);
    for (a, s) in states.iter().enumerate() {
        let mut moves = vec![];
        for i in 0..n {
            for k in 0..g {
                moves.push((p_disp / (n * g) as f64, s.propose_displacement(xi, i, &[k as f64 * h])));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    moves.push(((1.0 - p_disp) / pairs as f64, s.propose_transposition(xi, w, i, j)));
                }
            }
        }
        for (q, prop) in moves {
            let acc = (-prop.delta()).exp().min(1.0);
            let mut next = s.clone();
            next.apply(&prop);
            assert!((next.energy() - hamiltonian(&next, xi, w)).abs() < 1e-12);
            let b = index(&next);
            t[a][b] += q * acc;
            t[a][a] += q * (1.0 - acc);
        }
    }
    (states, t)
}

fn check_detailed_balance(n: usize, g: usize, w: WeightSequence) {
    let xi = PeriodicXi::for_box(1, 0.5, 2.0).unwrap();
    let (states, t) = grid_kernel(&xi, &w, n, g, 0.6);
    let m = states.len();
    let gibbs: Vec<f64> = states.iter().map(|s| (-hamiltonian(s, &xi, &w)).exp()).collect();
    let z: f64 = gibbs.iter().sum();
    let gibbs: Vec<f64> = gibbs.iter().map(|x| x / z).collect();
    for a in 0..m {
        assert!((t[a].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for b in 0..m {
            assert!((gibbs[a] * t[a][b] - gibbs[b] * t[b][a]).abs() < 1e-14);
        }
    }
    // stationary law of T by power iteration from the uniform law
    let mut p = vec![1.0 / m as f64; m];
    for _ in 0..20_000 {
        let mut q = vec![0.0; m];
        for a in 0..m {
            for b in 0..m {
                q[b] += p[a] * t[a][b];
            }
        }
        let change: f64 = q.iter().zip(&p).map(|(x, y)| (x - y).abs()).sum();
        p = q;
        if change < 1e-15 {
            break;
        }
    }
    let err = p.iter().zip(&gibbs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "stationary law off by {err}");
}

#[test]
fn kernel_is_reversible_for_two_particles() {
    check_detailed_balance(2, 4, WeightSequence::explicit(vec![0.3, 1.2]));
}

#[test]
fn kernel_is_reversible_for_three_particles() {
    check_detailed_balance(3, 3, WeightSequence::explicit(vec![-0.2, 0.7, 1.5]));
}

fn chi2_crit(df: f64) -> f64 {
    let z = 3.09;
    df * (1.0 - 2.0 / (9.0 * df) + z * (2.0 / (9.0 * df)).sqrt()).powi(3)
}

#[test]
fn fixed_points_diffuse_uniformly() {
    let l = 4.0;
    let xi = PeriodicXi::for_box(1, 1.0, l).unwrap();
    let w = WeightSequence::power(0.5, 1.0);
    let mut s = SpatialState::identity(&xi, &w, vec![0.2, 0.2, 0.2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let bins = 10;
    let mut counts = vec![0usize; bins];
    let samples = 20_000;
    for _ in 0..samples {
        for _ in 0..600 {
            assert!(mc_step(&mut s, &xi, &w, 1.0, l / 10.0, &mut rng).accepted);
        }
        for i in 0..3 {
            counts[((s.position(i)[0] / l) * bins as f64) as usize] += 1;
        }
    }
    let e = 3.0 * samples as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    assert!(chi2 < chi2_crit((bins - 1) as f64), "{chi2} {counts:?}");
    assert!((s.energy() - 3.0 * xi.eval(&[0.0]) - 3.0 * 0.5).abs() < 1e-12);
}

#[test]
fn costly_transposition_rate() {
    // two far-from-interacting images; from the identity the only move is the
    // merge, accepted with e^(-dH)
    let xi = PeriodicXi::for_box(1, 1.0, 20.0).unwrap();
    let w = WeightSequence::explicit(vec![0.0, 5.0]);
    let init = SpatialState::identity(&xi, &w, vec![3.0, 3.7]).unwrap();
    let dh = 5.0 + 2.0 * xi.eval(&[0.7]) - 2.0 * xi.eval(&[0.0]);
    let mut s = init.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut tried, mut taken) = (0u64, 0u64);
    for _ in 0..400_000 {
        let from_identity = s.perm() == [0, 1];
        let out = mc_step(&mut s, &xi, &w, 0.0, 1.0, &mut rng);
        if from_identity {
            tried += 1;
            taken += out.accepted as u64;
        } else {
            assert!(out.accepted);
        }
    }
    let p = (-dh).exp();
    let sd = (tried as f64 * p * (1.0 - p)).sqrt();
    assert!(
        (taken as f64 - tried as f64 * p).abs() < 3.0 * sd,
        "{taken} of {tried}, expected p = {p}"
    );
}

#[test]
fn pair_cycle_density_matches_fourier() {
    let (l, beta, n) = (4.0, 1.0, 2);
    let w = WeightSequence::zero();
    let xi = PeriodicXi::for_box(1, beta, l).unwrap();
    let lat = build_lattice(l, 1, &Dispersion::gaussian(1, beta).unwrap(), 200.0, 1e-12).unwrap();
    let exact = cycle_density_expectation(&partition_dp(&lat, &w, n).unwrap(), 2, 2).unwrap();
    let init = SpatialState::identity(&xi, &w, uniform_positions(n, 1, l, 9)).unwrap();
    let params = MCParams {
        burn_in: 20_000,
        samples: 200_000,
        thin: 5,
        p_displace: 0.5,
        seed: 77,
        ..MCParams::default()
    };
    let out = run_chain(init, &xi, &w, &params, &[(2, 2)]).unwrap();
    let s = &out.summary.rho_ab[0];
    assert!(
        (s.mean - exact).abs() < 3.0 * s.std_error,
        "{} +- {} vs {exact}",
        s.mean,
        s.std_error
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cached_energy_tracks_recomputation(seed in any::<u64>(), n in 1usize..7, d in 1usize..4, p in 0.0f64..1.0) {
        let xi = PeriodicXi::for_box(d, 0.8, 2.5).unwrap();
        let w = WeightSequence::power(1.3, 0.7);
        let mut s = SpatialState::identity(&xi, &w, uniform_positions(n, d, 2.5, seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..5_000 {
            mc_step(&mut s, &xi, &w, p, 0.3, &mut rng);
        }
        prop_assert!(s.check_caches(&xi, &w, 1e-8));
        let tally = s.cycle_tally();
        prop_assert_eq!(tally.iter().enumerate().map(|(l, r)| l * r).sum::<usize>(), n);
    }
}
