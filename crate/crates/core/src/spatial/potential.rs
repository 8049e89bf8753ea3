use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative image-sum remainder accepted by [`PeriodicXi::new`].
pub const IMAGE_REMAINDER_TARGET: f64 = 1e-12;

/// Gaussian jump potential, `e^(-xi(x)) = (4 pi beta)^(-d/2) e^(-|x|^2 / (4 beta))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiPotential {
    pub d: usize,
    pub beta: f64,
    /// Images `y` with `max_i |y_i| <= m_img` enter the periodization.
    pub m_img: usize,
}

/// Bound on `(exact - truncated) / truncated` for `e^(-xi_L)` anywhere in the
/// cell. Per coordinate the neglected images `|y| > m` are at distance at
/// least `L (|y| - 1/2)` while the `y = 0` image is within `L / 2`, so their
/// ratio is at most `2 sum_{j > m} e^(-a j (j - 1))`, `a = L^2 / (4 beta)`.
pub fn image_remainder(d: usize, beta: f64, l: f64, m_img: usize) -> f64 {
    let a = l * l / (4.0 * beta);
    let m = m_img as f64;
    let r = 2.0 * (-a * m * (m + 1.0)).exp() / -(-2.0 * a * (m + 1.0)).exp_m1();
    (d as f64 * r.ln_1p()).exp_m1()
}

impl XiPotential {
    /// Smallest image radius meeting [`IMAGE_REMAINDER_TARGET`] on a box of side `l`.
    pub fn for_box(d: usize, beta: f64, l: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d", "must be positive"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", "must be positive"));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid("L", "must be positive"));
        }
        let m_img = (1..=10_000)
            .find(|&m| image_remainder(d, beta, l, m) < IMAGE_REMAINDER_TARGET)
            .ok_or_else(|| Error::TooLarge(format!("image sum for L = {l}, beta = {beta}")))?;
        Ok(Self { d, beta, m_img })
    }

    /// `xi(x)` on the whole space.
    pub fn xi(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        0.5 * self.d as f64 * (4.0 * std::f64::consts::PI * self.beta).ln() + r2 / (4.0 * self.beta)
    }
}

/// `xi_L` on a fixed box, with the image remainder checked once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodicXi {
    pub pot: XiPotential,
    pub l: f64,
    /// Bound on the relative error of `e^(-xi_L)`; also bounds the absolute
    /// error of `xi_L`.
    pub remainder: f64,
}

/// `t` reduced to `[-L/2, L/2)`.
pub fn reduce(t: f64, l: f64) -> f64 {
    let r = t - l * (t / l).round();
    if r >= 0.5 * l {
        r - l
    } else if r < -0.5 * l {
        r + l
    } else {
        r
    }
}

impl PeriodicXi {
    pub fn new(pot: XiPotential, l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid("L", "must be positive"));
        }
        if !(pot.beta > 0.0) || pot.d == 0 {
            return Err(Error::invalid("potential", "beta and d must be positive"));
        }
        let remainder = image_remainder(pot.d, pot.beta, l, pot.m_img);
        if !(remainder <= IMAGE_REMAINDER_TARGET) {
            return Err(Error::Certificate {
                achieved: remainder,
                requested: IMAGE_REMAINDER_TARGET,
            });
        }
        Ok(Self { pot, l, remainder })
    }

    pub fn for_box(d: usize, beta: f64, l: f64) -> Result<Self> {
        Self::new(XiPotential::for_box(d, beta, l)?, l)
    }

    /// `-ln sum_y e^(-xi(t - L y))` for one coordinate, without the
    /// normalization.
    fn coordinate(&self, t: f64) -> f64 {
        let t = reduce(t, self.l);
        let m = self.pot.m_img as i64;
        let c = 1.0 / (4.0 * self.pot.beta);
        // the y = 0 image is the largest once t is reduced
        let lead = t * t * c;
        let mut s = 0.0;
        for y in -m..=m {
            let u = t - self.l * y as f64;
            s += (lead - u * u * c).exp();
        }
        lead - s.ln()
    }

    /// `xi_L(x) = -ln sum_y e^(-xi(x - L y))`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let norm = 0.5 * (4.0 * std::f64::consts::PI * self.pot.beta).ln();
        x.iter().map(|&t| norm + self.coordinate(t)).sum()
    }

    /// `xi_L(x - y)`.
    pub fn between(&self, x: &[f64], y: &[f64]) -> f64 {
        let norm = 0.5 * (4.0 * std::f64::consts::PI * self.pot.beta).ln();
        x.iter().zip(y).map(|(a, b)| norm + self.coordinate(a - b)).sum()
    }
}

/// `xi_L(x)` on a box of side `l`; fails if the image radius of `pot` does not
/// certify [`IMAGE_REMAINDER_TARGET`] there.
pub fn periodized_xi(pot: &XiPotential, x: &[f64], l: f64) -> Result<f64> {
    if x.len() != pot.d {
        return Err(Error::invalid("x", format!("expected {} coordinates", pot.d)));
    }
    Ok(PeriodicXi::new(*pot, l)?.eval(x))
}
