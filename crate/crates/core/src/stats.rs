//! Error bars for correlated Monte Carlo time series.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    /// Integrated autocorrelation time, `1/2 + sum_t rho(t)` over the window.
    pub tau_int: f64,
    pub window: usize,
    /// `sqrt(2 tau_int var / n)`.
    pub std_error: f64,
}

/// Normalized autocorrelation function up to lag `max_lag`.
pub fn autocorrelation(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let n = xs.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let c0 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let max_lag = max_lag.min(n - 1);
    (0..=max_lag)
        .map(|t| {
            if c0 == 0.0 {
                return if t == 0 { 1.0 } else { 0.0 };
            }
            let c: f64 = xs[..n - t]
                .iter()
                .zip(&xs[t..])
                .map(|(a, b)| (a - mean) * (b - mean))
                .sum::<f64>()
                / n as f64;
            c / c0
        })
        .collect()
}

/// Mean and error with Sokal's automatic window: the smallest `W` with
/// `W >= c * tau_int(W)`, `c = 6`.
pub fn summarize(xs: &[f64]) -> SeriesSummary {
    const C: f64 = 6.0;
    let n = xs.len();
    if n == 0 {
        return SeriesSummary {
            samples: 0,
            mean: f64::NAN,
            variance: f64::NAN,
            tau_int: f64::NAN,
            window: 0,
            std_error: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if n < 2 || variance == 0.0 {
        return SeriesSummary {
            samples: n,
            mean,
            variance,
            tau_int: 0.5,
            window: 0,
            std_error: if n < 2 { f64::NAN } else { 0.0 },
        };
    }
    // lags computed in growing blocks so long series stay cheap
    let mut max_lag = 64.min(n - 1);
    loop {
        let rho = autocorrelation(xs, max_lag);
        let mut tau = 0.5;
        for (w, r) in rho.iter().enumerate().skip(1) {
            tau += r;
            if w as f64 >= C * tau {
                let tau = tau.max(0.5);
                return SeriesSummary {
                    samples: n,
                    mean,
                    variance,
                    tau_int: tau,
                    window: w,
                    std_error: (2.0 * tau * variance / n as f64).sqrt(),
                };
            }
        }
        if max_lag >= n - 1 || max_lag >= n / 2 {
            let tau = tau.max(0.5);
            return SeriesSummary {
                samples: n,
                mean,
                variance,
                tau_int: tau,
                window: max_lag,
                std_error: (2.0 * tau * variance / n as f64).sqrt(),
            };
        }
        max_lag = (max_lag * 4).min(n - 1);
    }
}
