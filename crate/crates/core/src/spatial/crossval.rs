use serde::{Deserialize, Serialize};

use super::chain::{run_chain, uniform_positions, MCParams};
use super::potential::PeriodicXi;
use super::state::{cycle_lengths, SpatialState};
use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::fourier::{build_lattice, cycle_density_expectation, partition_dp};
use crate::weights::WeightSequence;

/// A small one-dimensional case checked mode by mode against the Fourier side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossValidationCase {
    pub n: usize,
    pub l: f64,
    pub beta: f64,
    #[serde(default)]
    pub weights: WeightSequence,
    pub eps_cut: f64,
    pub delta_trunc: f64,
    /// Target change between successive trapezoid refinements.
    pub quad_tol: f64,
    /// Length windows `[a, b]` compared by Monte Carlo.
    #[serde(default)]
    pub pairs: Vec<(usize, usize)>,
    #[serde(default)]
    pub mc: Option<MCParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermutationCheck {
    pub perm: Vec<usize>,
    pub cycle_lengths: Vec<usize>,
    /// `int_{L^N} e^(-H_L(x, pi)) dx`.
    pub integral: f64,
    pub quadrature_error: f64,
    /// Image-sum remainder carried into the integral.
    pub image_error: f64,
    /// `e^(-sum alpha) prod_cycles sum_k e^(-l eps(k))` over the kept modes.
    pub lattice_sum: f64,
    pub truncation_error: f64,
    pub difference: f64,
    pub bound: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCheck {
    pub a: usize,
    pub b: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub tau_int: f64,
    pub exact: f64,
    pub z: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidationReport {
    pub permutations: Vec<PermutationCheck>,
    pub monte_carlo: Vec<McCheck>,
    pub max_bound: f64,
    pub passed: bool,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

const MAX_POINTS_PER_AXIS: usize = 4096;
const MAX_GRID: usize = 1 << 22;

/// Periodic trapezoid estimate of `int_{L^N} prod_i e^(-xi_L(x_i - x_pi(i)))`
/// with `x_0 = 0` fixed by translation invariance; the grid doubles until
/// successive values differ by less than `tol` relative. Returns the value,
/// the last change and the number of grid points.
fn jump_integral(xi: &PeriodicXi, perm: &[usize], tol: f64) -> Result<(f64, f64, usize)> {
    let n = perm.len();
    let l = xi.l;
    let free = n - 1;
    let single = |x: &[f64]| -> f64 {
        let e: f64 = (0..n).map(|i| xi.eval(&[x[i] - x[perm[i]]])).sum();
        (-e).exp()
    };
    if free == 0 {
        return Ok((l * single(&[0.0]), 0.0, 1));
    }
    let estimate = |m: usize| -> f64 {
        let h = l / m as f64;
        let total = m.pow(free as u32);
        let mut x = vec![0.0; n];
        let mut s = 0.0;
        for idx in 0..total {
            let mut r = idx;
            for xv in x.iter_mut().skip(1) {
                *xv = (r % m) as f64 * h;
                r /= m;
            }
            s += single(&x);
        }
        l * s * h.powi(free as i32)
    };
    let mut m = 8;
    let mut prev = estimate(m);
    loop {
        m *= 2;
        if m > MAX_POINTS_PER_AXIS || m.pow(free as u32) > MAX_GRID {
            return Err(Error::Quadrature {
                term: format!("spatial integral for permutation {perm:?}"),
                estimate: prev,
                error: f64::NAN,
            });
        }
        let cur = estimate(m);
        let change = (cur - prev).abs();
        if change <= tol * cur.abs() {
            // the finer rule converges geometrically, so the last change bounds it
            return Ok((cur, change, m.pow(free as u32)));
        }
        prev = cur;
    }
}

/// Compares the spatial and Fourier representations permutation by
/// permutation, and optionally Monte Carlo cycle densities against the
/// exact Fourier values.
pub fn cross_validate(case: &CrossValidationCase) -> Result<CrossValidationReport> {
    if case.n == 0 || case.n > 3 {
        return Err(Error::invalid("n", "cross validation supports 1 <= N <= 3"));
    }
    if !(case.quad_tol > 0.0) {
        return Err(Error::invalid("quad_tol", "must be positive"));
    }
    case.weights.validate()?;
    let xi = PeriodicXi::for_box(1, case.beta, case.l)?;
    let disp = Dispersion::gaussian(1, case.beta)?;
    let lattice = build_lattice(case.l, 1, &disp, case.eps_cut, case.delta_trunc)?;
    let eps = lattice.eps();
    let mut checks = Vec::new();
    for perm in permutations(case.n) {
        let lens = cycle_lengths(&perm);
        let cyc: f64 = (-lens.iter().map(|&l| case.weights.alpha(l)).sum::<f64>()).exp();
        let (jumps, qerr, points) = jump_integral(&xi, &perm, case.quad_tol)?;
        let integral = cyc * jumps;
        let quadrature_error = cyc * qerr;
        let image_error = integral * ((case.n as f64) * xi.remainder.ln_1p()).exp_m1();
        // each discarded cycle sum is at most the lattice certificate
        let sums: Vec<f64> = lens
            .iter()
            .map(|&l| eps.iter().map(|e| (-(l as f64) * e).exp()).sum())
            .collect();
        let kept: f64 = sums.iter().product();
        let upper: f64 = sums.iter().map(|s| s + lattice.certificate).product();
        let lattice_sum = cyc * kept;
        let truncation_error = cyc * (upper - kept);
        let difference = integral - lattice_sum;
        // summation over the grid and the lattice, plus a few roundings per term
        let rounding = (points + eps.len() + 8 * case.n) as f64 * f64::EPSILON * integral.abs();
        let bound = quadrature_error + image_error + truncation_error + rounding;
        checks.push(PermutationCheck {
            perm,
            cycle_lengths: lens,
            integral,
            quadrature_error,
            image_error,
            lattice_sum,
            truncation_error,
            difference,
            bound,
            agrees: difference.abs() <= bound,
        });
    }
    let mut mc = Vec::new();
    if let Some(params) = &case.mc {
        let tables = partition_dp(&lattice, &case.weights, case.n)?;
        let init = SpatialState::identity(&xi, &case.weights, uniform_positions(case.n, 1, case.l, params.seed))?;
        let out = run_chain(init, &xi, &case.weights, params, &case.pairs)?;
        for (k, &(a, b)) in case.pairs.iter().enumerate() {
            let s = &out.summary.rho_ab[k];
            let exact = cycle_density_expectation(&tables, a, b.min(case.n))?;
            let z = if s.std_error > 0.0 {
                (s.mean - exact) / s.std_error
            } else if (s.mean - exact).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            mc.push(McCheck {
                a,
                b,
                estimate: s.mean,
                std_error: s.std_error,
                tau_int: s.tau_int,
                exact,
                z,
                agrees: z.abs() <= 3.0,
            });
        }
    }
    let max_bound = checks.iter().map(|c| c.bound).fold(0.0, f64::max);
    let passed = checks.iter().all(|c| c.agrees) && mc.iter().all(|c| c.agrees);
    Ok(CrossValidationReport {
        permutations: checks,
        monte_carlo: mc,
        max_bound,
        passed,
    })
}
