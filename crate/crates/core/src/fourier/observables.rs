use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dp::{rescale, DPTables};
use crate::error::{Error, Result};
use crate::nonspatial::expected_cycle_numbers;
use crate::thermo::Quantity;

/// `P(n_k = m)` for every mode `k` (lattice order) and `m = 0..=N`.
///
/// The leave-one-out partition function is formed as prefix times suffix,
/// once per group of modes with equal `eps`.
pub fn mode_marginals(tables: &DPTables) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); tables.num_modes()];
    for &(a, b) in &tables.groups {
        let law = tables.marginal(a);
        for slot in &mut out[a..b] {
            *slot = law.clone();
        }
    }
    out
}

/// Law of `n_0` and `E e^(lambda n_0 / V)` for each `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroModeLaw {
    pub law: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub mgf: Vec<f64>,
}

impl ZeroModeLaw {
    /// `P(|n_0 / V - x| < width)`.
    pub fn window_probability(&self, volume: f64, x: f64, width: f64) -> f64 {
        self.law
            .iter()
            .enumerate()
            .filter(|(m, _)| (*m as f64 / volume - x).abs() < width)
            .map(|(_, p)| p)
            .sum()
    }
}

pub fn n0_law_and_mgf(tables: &DPTables, lambdas: &[f64]) -> ZeroModeLaw {
    let law = tables.marginal(0);
    let v = tables.volume;
    let mgf = lambdas
        .iter()
        .map(|&l| law.iter().enumerate().map(|(m, p)| p * (l * m as f64 / v).exp()).sum())
        .collect();
    ZeroModeLaw {
        law,
        lambdas: lambdas.to_vec(),
        mgf,
    }
}

/// Exact draw of the occupation numbers (lattice order).
pub fn sample_occupations<R: rand::Rng + ?Sized>(tables: &DPTables, rng: &mut R) -> Vec<usize> {
    tables.sample(rng)
}

/// `E_m(N_{a,b})` for `m = 0..=N`, lengths clamped to `[a, min(b, m)]`.
pub(crate) fn cycle_count_table(tables: &DPTables, a: usize, b: usize) -> Vec<f64> {
    (0..=tables.n)
        .map(|m| {
            let hi = b.min(m);
            if a > hi {
                0.0
            } else {
                expected_cycle_numbers(&tables.h, m, a, hi).expect("range checked")
            }
        })
        .collect()
}

/// `(1/V) sum_k sum_m P(n_k = m) E_m(N_{a,b})` for arbitrary `1 <= a`,
/// with the window clamped to the available lengths.
pub(crate) fn cycle_density_clamped(tables: &DPTables, marginals: &[Vec<f64>], a: usize, b: usize) -> f64 {
    if tables.n == 0 || a > b {
        return 0.0;
    }
    let e = cycle_count_table(tables, a.max(1), b);
    let mut total = 0.0;
    for &(g0, g1) in &tables.groups {
        let law = &marginals[g0];
        let s: f64 = law.iter().zip(&e).map(|(p, x)| p * x).sum();
        total += s * (g1 - g0) as f64;
    }
    total / tables.volume
}

/// Exact `E(rho_{a,b})`, the expected density of indices in cycles of length
/// `a..=b`.
pub fn cycle_density_expectation(tables: &DPTables, a: usize, b: usize) -> Result<f64> {
    if tables.n == 0 {
        return Ok(0.0);
    }
    if a < 1 || a > b || b > tables.n {
        return Err(Error::Range(format!(
            "need 1 <= a <= b <= N, got a = {a}, b = {b}, N = {}",
            tables.n
        )));
    }
    Ok(cycle_density_clamped(tables, &mode_marginals(tables), a, b))
}

/// A probability with a confidence interval; degenerate when exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityEstimate {
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
    pub exact: bool,
}

impl ProbabilityEstimate {
    fn exact(p: f64) -> Self {
        Self {
            p,
            lo: p,
            hi: p,
            exact: true,
        }
    }

    /// Wilson score interval at `z = 1.96`.
    fn wilson(hits: usize, n: usize) -> Self {
        let z = 1.96f64;
        let nf = n as f64;
        let p = hits as f64 / nf;
        let denom = 1.0 + z * z / nf;
        let centre = (p + z * z / (2.0 * nf)) / denom;
        let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
        Self {
            p,
            lo: (centre - half).max(0.0),
            hi: (centre + half).min(1.0),
            exact: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TypicalityMethod {
    Exact,
    Sampled { draws: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Typicality {
    pub rho0: f64,
    /// The infinite critical density case is outside what the sets are
    /// known to describe; flagged rather than refused.
    pub rho_c_infinite: bool,
    /// `|n_0/V - rho0| < eps`.
    pub a: ProbabilityEstimate,
    /// `sum_{0 < |k| < delta} n_k < eps V`.
    pub b: ProbabilityEstimate,
    /// `sum_{|k| >= delta, n_k > M} n_k < eps V`.
    pub c: ProbabilityEstimate,
}

const EXACT_WORK_CAP: f64 = 4e8;

impl DPTables {
    /// Partition function over a subset of modes, rescaled.
    fn subset_partition(&self, modes: &[usize]) -> (Vec<f64>, f64) {
        let mut row = vec![0.0; self.n + 1];
        row[0] = 1.0;
        let mut scale = 0.0;
        for &k in modes {
            row = self.convolve(&row, k);
            scale += rescale(&mut row);
        }
        (row, scale)
    }

    /// Law of `sum_{k in S} n_k`.
    fn subset_sum_law(&self, set: &[usize]) -> Vec<f64> {
        let rest: Vec<usize> = (0..self.num_modes()).filter(|k| !set.contains(k)).collect();
        let (zs, _) = self.subset_partition(set);
        let (zr, _) = self.subset_partition(&rest);
        let n = self.n;
        let raw: Vec<f64> = (0..=n).map(|m| zs[m] * zr[n - m]).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|x| x / total).collect()
    }

    /// `P(sum_{k in K, n_k > cut} n_k <= tmax)` by a two-index DP.
    fn capped_large_sum_probability(&self, set: &[usize], cut: usize, tmax: usize) -> f64 {
        let n = self.n;
        let width = tmax + 2;
        let rest: Vec<usize> = (0..self.num_modes()).filter(|k| !set.contains(k)).collect();
        let (zr, _) = self.subset_partition(&rest);
        // z[m * width + t]; t = tmax + 1 collects every larger value
        let mut z = vec![0.0; (n + 1) * width];
        z[0] = 1.0;
        for &k in set {
            let w: Vec<f64> = (0..=n).map(|j| self.weight(k, j)).collect();
            let mut next = vec![0.0; (n + 1) * width];
            for m in 0..=n {
                for t in 0..width {
                    let v = z[m * width + t];
                    if v == 0.0 {
                        continue;
                    }
                    for (j, wj) in w.iter().enumerate().take(n - m + 1) {
                        let nt = if j > cut { (t + j).min(tmax + 1) } else { t };
                        next[(m + j) * width + nt] += v * wj;
                    }
                }
            }
            let max = next.iter().copied().fold(0.0, f64::max);
            if max > 0.0 {
                next.iter_mut().for_each(|x| *x /= max);
            }
            z = next;
        }
        let mut good = 0.0;
        let mut all = 0.0;
        for m in 0..=n {
            for t in 0..width {
                let v = z[m * width + t] * zr[n - m];
                all += v;
                if t <= tmax {
                    good += v;
                }
            }
        }
        good / all
    }
}

/// Largest integer strictly below `x` (nonnegative `x`), or `None` if none.
fn strictly_below(x: f64) -> Option<usize> {
    if x <= 0.0 {
        None
    } else {
        Some((x.ceil() - 1.0).max(0.0) as usize)
    }
}

/// Probabilities of the three typical-occupation events, with
/// `rho0 = max(0, N/V - rho_c)`.
pub fn typicality_probs(
    tables: &DPTables,
    rho_c: Quantity,
    eps: f64,
    delta: f64,
    m_cut: usize,
    method: TypicalityMethod,
) -> Result<Typicality> {
    if !(eps > 0.0) || !(delta > 0.0) {
        return Err(Error::invalid("eps", "eps and delta must be positive"));
    }
    let v = tables.volume;
    let n = tables.n;
    let rho = n as f64 / v;
    let rho0 = (rho - rho_c.value()).max(0.0);
    let rho0 = if rho0.is_finite() { rho0 } else { 0.0 };
    let small: Vec<usize> = (1..tables.num_modes())
        .filter(|&k| tables.k_norm[k] > 0.0 && tables.k_norm[k] < delta)
        .collect();
    let large: Vec<usize> = (0..tables.num_modes()).filter(|&k| tables.k_norm[k] >= delta).collect();
    let thr = strictly_below(eps * v);
    let (a, b, c) = match method {
        TypicalityMethod::Exact => {
            let zero = tables.marginal(0);
            let a = zero
                .iter()
                .enumerate()
                .filter(|(m, _)| (*m as f64 / v - rho0).abs() < eps)
                .map(|(_, p)| p)
                .sum::<f64>();
            let b = match thr {
                None => 0.0,
                Some(t) => tables.subset_sum_law(&small)[..=t.min(n)].iter().sum(),
            };
            let c = match thr {
                None => 0.0,
                Some(t) if t >= n || m_cut >= n => 1.0,
                Some(t) => {
                    let work = large.len() as f64 * ((n + 1) as f64).powi(2) * (t + 2) as f64;
                    if work > EXACT_WORK_CAP {
                        return Err(Error::TooLarge(format!(
                            "exact event C needs about {work:.0} operations; use sampling"
                        )));
                    }
                    tables.capped_large_sum_probability(&large, m_cut, t)
                }
            };
            (
                ProbabilityEstimate::exact(a.min(1.0)),
                ProbabilityEstimate::exact(b.min(1.0)),
                ProbabilityEstimate::exact(c.min(1.0)),
            )
        }
        TypicalityMethod::Sampled { draws, seed } => {
            if draws == 0 {
                return Err(Error::invalid("draws", "must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut ha, mut hb, mut hc) = (0, 0, 0);
            for _ in 0..draws {
                let occ = tables.sample(&mut rng);
                if (occ[0] as f64 / v - rho0).abs() < eps {
                    ha += 1;
                }
                let sb: usize = small.iter().map(|&k| occ[k]).sum();
                if (sb as f64) < eps * v {
                    hb += 1;
                }
                let sc: usize = large.iter().map(|&k| occ[k]).filter(|&x| x > m_cut).sum();
                if (sc as f64) < eps * v {
                    hc += 1;
                }
            }
            (
                ProbabilityEstimate::wilson(ha, draws),
                ProbabilityEstimate::wilson(hb, draws),
                ProbabilityEstimate::wilson(hc, draws),
            )
        }
    };
    Ok(Typicality {
        rho0,
        rho_c_infinite: !rho_c.is_finite(),
        a,
        b,
        c,
    })
}
