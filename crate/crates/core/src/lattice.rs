//! Integer lattice enumeration and Gaussian tail bounds on `Z^d`.

/// All `m` in `Z^d` with `|m|^2 <= r2`, in lexicographic order.
pub fn points_within(d: usize, r2: f64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(d);
    fn rec(d: usize, left: f64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        let m = left.max(0.0).sqrt().floor() as i64;
        for x in -m..=m {
            let rest = left - (x * x) as f64;
            if rest < 0.0 {
                continue;
            }
            cur.push(x);
            rec(d, rest, cur, out);
            cur.pop();
        }
    }
    if r2 >= 0.0 {
        rec(d, r2, &mut cur, &mut out);
    }
    out
}

pub fn norm2(m: &[i64]) -> i64 {
    m.iter().map(|x| x * x).sum()
}

/// `sum_{m in Z} e^(-c m^2)` bounded above by `1 + sqrt(pi / c)`.
fn theta_upper(c: f64) -> f64 {
    1.0 + (std::f64::consts::PI / c).sqrt()
}

/// Upper bound on `sum_{m >= m0} e^(-c m^2)` for `m0 >= 1`.
fn half_tail(c: f64, m0: f64) -> f64 {
    (-c * m0 * m0).exp() / (-(-c * (2.0 * m0 + 1.0)).exp_m1())
}

/// Upper bound on `sum_{m in Z^d, |m| > r} e^(-c |m|^2)`.
///
/// Some coordinate of such an `m` exceeds `r / sqrt(d)` in absolute value,
/// which gives `d * theta^(d-1) * 2 * sum_{m >= m0} e^(-c m^2)`.
pub fn gaussian_tail_bound(c: f64, d: usize, r: f64) -> f64 {
    let m0 = (r / (d as f64).sqrt()).floor() + 1.0;
    d as f64 * theta_upper(c).powi(d as i32 - 1) * 2.0 * half_tail(c, m0)
}

/// Smallest radius (in lattice units) whose Gaussian tail bound is below `target`.
pub fn radius_for_tail(c: f64, d: usize, target: f64) -> f64 {
    let mut r = 1.0f64;
    while gaussian_tail_bound(c, d, r) > target {
        r *= 1.25;
        if r > 1e7 {
            break;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(points_within(1, 4.0).len(), 5);
        assert_eq!(points_within(2, 1.0).len(), 5);
        assert_eq!(points_within(3, 1.0).len(), 7);
        assert_eq!(points_within(3, 2.0).len(), 19);
        assert!(points_within(2, -1.0).is_empty());
    }

    #[test]
    fn tail_bound_dominates_exact_tail() {
        for &(c, d, r) in &[(0.5, 1, 2.0), (0.1, 2, 5.0), (0.3, 3, 3.0), (2.0, 3, 1.0)] {
            let inner: f64 = points_within(d, r * r)
                .iter()
                .map(|m| (-c * norm2(m) as f64).exp())
                .sum();
            let big: f64 = points_within(d, (r + 40.0).powi(2))
                .iter()
                .map(|m| (-c * norm2(m) as f64).exp())
                .sum();
            let exact = big - inner;
            let bound = gaussian_tail_bound(c, d, r);
            assert!(bound >= exact * (1.0 - 1e-12), "c={c} d={d} r={r}: {bound} < {exact}");
        }
    }
}
