use rand::{Rng, RngExt};

use super::lattice::ModeLattice;
use crate::error::{Error, Result};
use crate::nonspatial::{h_series, HSeries};
use crate::weights::WeightSequence;

/// Prefix and suffix partition functions of the occupation-number law
/// `p(n) = (1/Y) prod_k e^(-n_k eps(k)) h_{n_k}` with `sum n_k = N`.
///
/// Rows are stored rescaled: `Z_j(m) = prefix[j][m] * e^(prefix_log[j])`.
/// The linear part of the cycle weights only multiplies `Y` by
/// `e^(-shift N)` and is factored out.
#[derive(Debug, Clone)]
pub struct DPTables {
    pub(crate) n: usize,
    pub(crate) volume: f64,
    pub(crate) eps: Vec<f64>,
    pub(crate) k_norm: Vec<f64>,
    pub(crate) groups: Vec<(usize, usize)>,
    pub(crate) certificate: f64,
    pub(crate) eps_cut: f64,
    /// `h_n` for the weights as given (shift included), for cycle statistics.
    pub(crate) h: HSeries,
    /// `ln h_n` without the linear term.
    log_h: Vec<f64>,
    shift: f64,
    /// `prefix[j]`: modes `0..j`.
    prefix: Vec<Vec<f64>>,
    prefix_log: Vec<f64>,
    /// `suffix[j]`: modes `j..J`.
    suffix: Vec<Vec<f64>>,
    suffix_log: Vec<f64>,
}

pub(crate) fn rescale(row: &mut [f64]) -> f64 {
    let max = row.iter().copied().fold(0.0, f64::max);
    if max > 0.0 && max.is_finite() {
        row.iter_mut().for_each(|x| *x /= max);
        max.ln()
    } else {
        0.0
    }
}

impl DPTables {
    /// `w_k(n) = e^(-n eps_k) h_n` without the linear term.
    pub(crate) fn weight(&self, k: usize, n: usize) -> f64 {
        (self.log_h[n] - n as f64 * self.eps[k]).exp()
    }

    fn weights_row(&self, k: usize, upto: usize) -> Vec<f64> {
        (0..=upto).map(|n| self.weight(k, n)).collect()
    }

    pub(crate) fn convolve(&self, row: &[f64], k: usize) -> Vec<f64> {
        let w = self.weights_row(k, self.n);
        let floor = 1e-300;
        let wmax = w.iter().copied().fold(0.0, f64::max);
        // drop the far tail of a mode once it falls below the relative floor
        let cut = w.iter().rposition(|&x| x >= floor * wmax).unwrap_or(0);
        let mut out = vec![0.0; self.n + 1];
        for (m, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, wj) in w.iter().enumerate().take(cut.min(m) + 1) {
                s += wj * row[m - j];
            }
            *o = s;
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn num_modes(&self) -> usize {
        self.eps.len()
    }

    pub fn h(&self) -> &HSeries {
        &self.h
    }

    /// `ln Y(Lambda, N)`.
    pub fn log_y(&self) -> f64 {
        let j = self.eps.len();
        self.prefix[j][self.n].ln() + self.prefix_log[j] - self.shift * self.n as f64
    }

    /// `Y(Lambda, N)`; may overflow to infinity where `log_y` does not.
    pub fn y(&self) -> f64 {
        self.log_y().exp()
    }

    /// `ln Y(Lambda, M)` for every `M <= N`.
    pub fn log_y_all(&self) -> Vec<f64> {
        let j = self.eps.len();
        self.prefix[j]
            .iter()
            .enumerate()
            .map(|(m, z)| z.ln() + self.prefix_log[j] - self.shift * m as f64)
            .collect()
    }

    /// `Z_{-k}(M)`, the partition function without mode `k`, for all `M`,
    /// rescaled by `e^(scale)`.
    fn leave_one_out(&self, k: usize) -> (Vec<f64>, f64) {
        let p = &self.prefix[k];
        let s = &self.suffix[k + 1];
        let mut out = vec![0.0; self.n + 1];
        for (m, o) in out.iter_mut().enumerate() {
            *o = (0..=m).map(|i| p[i] * s[m - i]).sum();
        }
        (out, self.prefix_log[k] + self.suffix_log[k + 1])
    }

    /// `P(n_k = m)` for `m = 0..=N`, as `w_k(m) Z_{-k}(N - m) / Y(N)`.
    pub(crate) fn marginal(&self, k: usize) -> Vec<f64> {
        let (z, scale) = self.leave_one_out(k);
        let jj = self.eps.len();
        let log_norm = scale - self.prefix_log[jj] - self.prefix[jj][self.n].ln();
        (0..=self.n)
            .map(|m| {
                let v = self.weight(k, m) * z[self.n - m];
                if v == 0.0 {
                    0.0
                } else {
                    (v.ln() + log_norm).exp()
                }
            })
            .collect()
    }

    /// Bound on `|Y_full(N) / Y(N) - 1|` from the discarded modes:
    /// `max_{M<N} Y(M)/Y(N) * (exp(H delta / (1 - e^(-eps_cut))) - 1)`,
    /// `H = max h_n`.
    pub fn truncation_bound(&self) -> f64 {
        if self.certificate == 0.0 || self.n == 0 {
            return 0.0;
        }
        let ly = self.log_y_all();
        let r = ly[..self.n].iter().map(|l| (l - ly[self.n]).exp()).fold(0.0, f64::max);
        let hmax = self.log_h[..=self.n]
            .iter()
            .enumerate()
            .map(|(n, l)| (l - self.shift * n as f64).exp())
            .fold(0.0, f64::max);
        r * (hmax * self.certificate / (-(-self.eps_cut).exp_m1())).exp_m1()
    }

    /// Exact draw from the occupation law, one count per mode in lattice order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let jj = self.eps.len();
        let mut occ = vec![0; jj];
        let mut m = self.n;
        let mut probs = Vec::with_capacity(self.n + 1);
        for j in (0..jj).rev() {
            if m == 0 {
                break;
            }
            probs.clear();
            let row = &self.prefix[j];
            for n in 0..=m {
                probs.push(self.weight(j, n) * row[m - n]);
            }
            let total: f64 = probs.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = m;
            for (n, p) in probs.iter().enumerate() {
                if u < *p {
                    pick = n;
                    break;
                }
                u -= p;
            }
            // guard against landing on a zero-probability tail through rounding
            while probs[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            occ[j] = pick;
            m -= pick;
        }
        occ
    }
}

/// Exact convolution DP over the modes of `lattice` for `N` particles.
pub fn partition_dp(lattice: &ModeLattice, weights: &WeightSequence, n: usize) -> Result<DPTables> {
    weights.validate()?;
    if lattice.is_empty() {
        return Err(Error::invalid("lattice", "no modes"));
    }
    let h = h_series(weights, n)?;
    let base = h_series(&weights.without_shift(), n)?;
    let log_h = (0..=n).map(|i| base.log_value(i)).collect();
    let jj = lattice.len();
    let mut t = DPTables {
        n,
        volume: lattice.volume(),
        eps: lattice.eps(),
        k_norm: lattice.modes.iter().map(|m| m.k_norm).collect(),
        groups: lattice.groups.clone(),
        certificate: lattice.certificate,
        eps_cut: lattice.eps_cut,
        h,
        log_h,
        shift: weights.shift,
        prefix: Vec::with_capacity(jj + 1),
        prefix_log: Vec::with_capacity(jj + 1),
        suffix: vec![Vec::new(); jj + 1],
        suffix_log: vec![0.0; jj + 1],
    };
    let mut unit = vec![0.0; n + 1];
    unit[0] = 1.0;
    t.prefix.push(unit.clone());
    t.prefix_log.push(0.0);
    for k in 0..jj {
        let mut row = t.convolve(&t.prefix[k], k);
        let s = rescale(&mut row) + t.prefix_log[k];
        t.prefix.push(row);
        t.prefix_log.push(s);
    }
    t.suffix[jj] = unit;
    for k in (0..jj).rev() {
        let mut row = t.convolve(&t.suffix[k + 1], k);
        let s = rescale(&mut row) + t.suffix_log[k + 1];
        t.suffix[k] = row;
        t.suffix_log[k] = s;
    }
    // with the zero mode present every entry of a full row is positive
    if t.prefix[jj].iter().any(|&z| !(z > 0.0)) || t.suffix[0].iter().any(|&z| !(z > 0.0)) {
        return Err(Error::Underflow(format!("partition DP over {jj} modes with N = {n}")));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::lattice::Mode;

    pub(crate) fn two_modes(e: f64) -> ModeLattice {
        ModeLattice::from_modes(
            1.0,
            1,
            vec![
                Mode {
                    m: vec![0],
                    k_norm: 0.0,
                    eps: 0.0,
                },
                Mode {
                    m: vec![1],
                    k_norm: 1.0,
                    eps: e,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_mode_gives_h() {
        let lat = ModeLattice::from_modes(
            1.0,
            1,
            vec![Mode {
                m: vec![0],
                k_norm: 0.0,
                eps: 0.0,
            }],
        )
        .unwrap();
        let w = WeightSequence::power(1.0, 2.0);
        let h = h_series(&w, 12).unwrap();
        for n in 0..=12 {
            let t = partition_dp(&lat, &w, n).unwrap();
            assert!((t.y() - h.value(n)).abs() < 1e-14 * h.value(n));
        }
    }

    #[test]
    fn two_modes_by_hand() {
        let t = partition_dp(&two_modes(1.0), &WeightSequence::zero(), 1).unwrap();
        assert!((t.y() - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        let t0 = partition_dp(&two_modes(1.0), &WeightSequence::zero(), 0).unwrap();
        assert_eq!(t0.y(), 1.0);
    }

    #[test]
    fn shift_factors_out() {
        let lat = two_modes(0.3);
        let w = WeightSequence::power(0.5, 1.0);
        let a = partition_dp(&lat, &w, 9).unwrap();
        let b = partition_dp(&lat, &w.shifted(0.7), 9).unwrap();
        assert!((b.log_y() - (a.log_y() - 0.7 * 9.0)).abs() < 1e-12);
    }
}
