use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::potential::PeriodicXi;
use super::state::SpatialState;
use crate::error::{Error, Result};
use crate::stats::{summarize, SeriesSummary};
use crate::weights::WeightSequence;

/// Metropolis chain settings. One step is one proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MCParams {
    pub burn_in: usize,
    /// Number of recorded samples.
    pub samples: usize,
    /// Steps between records.
    pub thin: usize,
    /// Displacement width; `None` means `L / 10`.
    pub sigma_x: Option<f64>,
    /// Probability of a displacement rather than a transposition.
    pub p_displace: f64,
    /// Adapt `sigma_x` toward 30-50% acceptance during burn-in.
    pub tune: bool,
    pub seed: u64,
}

impl Default for MCParams {
    fn default() -> Self {
        Self {
            burn_in: 10_000,
            samples: 10_000,
            thin: 10,
            sigma_x: None,
            p_displace: 0.5,
            tune: true,
            seed: 1,
        }
    }
}

impl MCParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_displace) {
            return Err(Error::invalid("p_displace", "must lie in [0, 1]"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin", "must be at least 1"));
        }
        if let Some(s) = self.sigma_x {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("sigma_x", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MoveKind {
    Displacement,
    Transposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
}

/// One Metropolis step: a Gaussian displacement of a uniform index with
/// probability `p_displace`, otherwise a transposition of a uniform pair.
/// Both proposals are symmetric, so acceptance is `min(1, e^(-dH))`.
pub fn mc_step<R: Rng + ?Sized>(
    state: &mut SpatialState,
    xi: &PeriodicXi,
    weights: &WeightSequence,
    p_displace: f64,
    sigma_x: f64,
    rng: &mut R,
) -> StepOutcome {
    let n = state.n();
    let displace = n < 2 || rng.random::<f64>() < p_displace;
    let proposal = if displace {
        let i = rng.random_range(0..n);
        let x: Vec<f64> = state
            .position(i)
            .iter()
            .map(|&t| {
                let z: f64 = StandardNormal.sample(rng);
                t + sigma_x * z
            })
            .collect();
        state.propose_displacement(xi, i, &x)
    } else {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        state.propose_transposition(xi, weights, i, j)
    };
    let delta = proposal.delta();
    let accepted = delta <= 0.0 || rng.random::<f64>() < (-delta).exp();
    if accepted {
        state.apply(&proposal);
    }
    StepOutcome {
        kind: if displace {
            MoveKind::Displacement
        } else {
            MoveKind::Transposition
        },
        accepted,
    }
}

/// One recorded sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRecord {
    /// Steps after burn-in.
    pub step: u64,
    pub energy: f64,
    /// `N_{a,b}` for each configured pair.
    pub n_ab: Vec<usize>,
    pub cycles: usize,
    /// `r_l` for `l = 1..=N`.
    pub tally: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub pairs: Vec<(usize, usize)>,
    pub energy: SeriesSummary,
    /// `N_{a,b} / V` per pair.
    pub rho_ab: Vec<SeriesSummary>,
    pub cycles: SeriesSummary,
    pub sigma_x: f64,
    /// Post-burn-in acceptance rates; `NaN` when no such move was proposed.
    pub displacement_acceptance: f64,
    pub transposition_acceptance: f64,
    pub steps: u64,
}

#[derive(Default)]
struct Counter {
    tried: u64,
    taken: u64,
}

impl Counter {
    fn add(&mut self, accepted: bool) {
        self.tried += 1;
        self.taken += accepted as u64;
    }

    fn rate(&self) -> f64 {
        if self.tried == 0 {
            f64::NAN
        } else {
            self.taken as f64 / self.tried as f64
        }
    }
}

const TUNE_WINDOW: u64 = 200;

/// Runs the chain from `init`, passing each record to `sink`. Deterministic
/// for a fixed seed. Tuning touches `sigma_x` only during burn-in.
pub fn run_chain_with<F: FnMut(&ChainRecord)>(
    init: SpatialState,
    xi: &PeriodicXi,
    weights: &WeightSequence,
    params: &MCParams,
    pairs: &[(usize, usize)],
    mut sink: F,
) -> Result<(ChainSummary, SpatialState)> {
    params.validate()?;
    weights.validate()?;
    if init.n() == 0 {
        return Err(Error::invalid("N", "must be positive"));
    }
    if pairs.iter().any(|&(a, b)| a == 0 || a > b) {
        return Err(Error::invalid("pairs", "need 1 <= a <= b"));
    }
    let mut state = init;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let l = state.l();
    let volume = l.powi(state.d() as i32);
    let mut sigma = params.sigma_x.unwrap_or(l / 10.0);
    let mut window = Counter::default();
    for _ in 0..params.burn_in {
        let out = mc_step(&mut state, xi, weights, params.p_displace, sigma, &mut rng);
        if params.tune && out.kind == MoveKind::Displacement {
            window.add(out.accepted);
            if window.tried == TUNE_WINDOW {
                let r = window.rate();
                if r < 0.3 {
                    sigma *= 0.8;
                } else if r > 0.5 {
                    sigma *= 1.25;
                }
                sigma = sigma.clamp(1e-6 * l, l);
                window = Counter::default();
            }
        }
    }
    let mut disp = Counter::default();
    let mut trans = Counter::default();
    let mut energy = Vec::with_capacity(params.samples);
    let mut rho: Vec<Vec<f64>> = vec![Vec::with_capacity(params.samples); pairs.len()];
    let mut cycles = Vec::with_capacity(params.samples);
    let mut step = 0u64;
    for _ in 0..params.samples {
        for _ in 0..params.thin {
            let out = mc_step(&mut state, xi, weights, params.p_displace, sigma, &mut rng);
            match out.kind {
                MoveKind::Displacement => disp.add(out.accepted),
                MoveKind::Transposition => trans.add(out.accepted),
            }
            step += 1;
        }
        let rec = ChainRecord {
            step,
            energy: state.energy(),
            n_ab: pairs.iter().map(|&(a, b)| state.n_ab(a, b)).collect(),
            cycles: state.cycle_count(),
            tally: state.cycle_tally()[1..].to_vec(),
        };
        energy.push(rec.energy);
        for (k, &c) in rec.n_ab.iter().enumerate() {
            rho[k].push(c as f64 / volume);
        }
        cycles.push(rec.cycles as f64);
        sink(&rec);
    }
    let summary = ChainSummary {
        pairs: pairs.to_vec(),
        energy: summarize(&energy),
        rho_ab: rho.iter().map(|xs| summarize(xs)).collect(),
        cycles: summarize(&cycles),
        sigma_x: sigma,
        displacement_acceptance: disp.rate(),
        transposition_acceptance: trans.rate(),
        steps: step,
    };
    Ok((summary, state))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainOutput {
    pub records: Vec<ChainRecord>,
    pub summary: ChainSummary,
    pub final_state: SpatialState,
}

/// [`run_chain_with`] collecting every record.
pub fn run_chain(
    init: SpatialState,
    xi: &PeriodicXi,
    weights: &WeightSequence,
    params: &MCParams,
    pairs: &[(usize, usize)],
) -> Result<ChainOutput> {
    let mut records = Vec::with_capacity(params.samples);
    let (summary, final_state) = run_chain_with(init, xi, weights, params, pairs, |r| records.push(r.clone()))?;
    Ok(ChainOutput {
        records,
        summary,
        final_state,
    })
}

/// `n` positions drawn uniformly on the box, row-major.
pub fn uniform_positions(n: usize, d: usize, l: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * d).map(|_| rng.random::<f64>() * l).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize, d: usize, l: f64) -> (PeriodicXi, SpatialState, WeightSequence) {
        let xi = PeriodicXi::for_box(d, 1.0, l).unwrap();
        let w = WeightSequence::power(0.6, 1.5);
        let s = SpatialState::identity(&xi, &w, uniform_positions(n, d, l, 5)).unwrap();
        (xi, s, w)
    }

    #[test]
    fn caches_survive_many_steps() {
        let (xi, mut s, w) = setup(6, 2, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            mc_step(&mut s, &xi, &w, 0.5, 0.4, &mut rng);
        }
        assert!(s.check_caches(&xi, &w, 1e-6));
        let e = super::super::state::hamiltonian(&s, &xi, &w);
        assert!((s.energy() - e).abs() < 1e-8, "{} vs {e}", s.energy());
    }

    #[test]
    fn deterministic_and_empty() {
        let (xi, s, w) = setup(4, 1, 4.0);
        let p = MCParams {
            burn_in: 500,
            samples: 300,
            thin: 3,
            seed: 42,
            ..MCParams::default()
        };
        let a = run_chain(s.clone(), &xi, &w, &p, &[(1, 1), (2, 4)]).unwrap();
        let b = run_chain(s.clone(), &xi, &w, &p, &[(1, 1), (2, 4)]).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 300);
        assert_eq!(a.records.last().unwrap().step, 900);
        for r in &a.records {
            assert_eq!(r.tally.iter().enumerate().map(|(l, c)| (l + 1) * c).sum::<usize>(), 4);
        }
        let none = run_chain(s, &xi, &w, &MCParams { samples: 0, ..p }, &[(1, 1)]).unwrap();
        assert!(none.records.is_empty());
    }

    #[test]
    fn zero_change_is_always_accepted() {
        // fixed points only: displacements never change the energy
        let (xi, mut s, w) = setup(3, 1, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            assert!(mc_step(&mut s, &xi, &w, 1.0, 0.7, &mut rng).accepted);
        }
    }

    #[test]
    fn tuning_reaches_the_band() {
        let (xi, s, w) = setup(5, 1, 30.0);
        let p = MCParams {
            burn_in: 40_000,
            samples: 20_000,
            thin: 1,
            p_displace: 1.0,
            seed: 3,
            ..MCParams::default()
        };
        // a frozen 5-cycle, so every displacement feels two jumps
        let s = SpatialState::new(&xi, &w, s.positions().to_vec(), vec![1, 2, 3, 4, 0]).unwrap();
        let out = run_chain(s, &xi, &w, &p, &[]).unwrap();
        let r = out.summary.displacement_acceptance;
        assert!((0.25..0.55).contains(&r), "{r}");
        assert!(out.summary.sigma_x != 3.0);
    }

    #[test]
    fn rejects_bad_params() {
        let (xi, s, w) = setup(2, 1, 4.0);
        let bad = MCParams {
            p_displace: 1.5,
            ..MCParams::default()
        };
        assert!(run_chain(s.clone(), &xi, &w, &bad, &[]).is_err());
        assert!(run_chain(s, &xi, &w, &MCParams::default(), &[(2, 1)]).is_err());
    }
}
