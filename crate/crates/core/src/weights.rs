//! Cycle weights `alpha_l`, one real number per cycle length `l >= 1`.
//!
//! A [`WeightSequence`] is a finite explicit prefix, a tail rule for longer
//! cycles and an optional linear term `shift * l`. The linear term is kept
//! separate because it changes no probability on permutations and only
//! rescales normalizations, so several engines factor it out exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rule for `alpha_l` beyond the explicit prefix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Tail {
    /// `alpha_l = 0`.
    #[default]
    Zero,
    /// `alpha_l = c * l^(-p)`.
    Power { c: f64, p: f64 },
    /// `alpha_l = c / (ln l)^p`.
    LogDecay { c: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSequence {
    /// `alpha_1 .. alpha_{L0}`.
    #[serde(default)]
    pub explicit: Vec<f64>,
    #[serde(default)]
    pub tail: Tail,
    /// Coefficient `c` of the linear term `c * l`.
    #[serde(default)]
    pub shift: f64,
}

impl Default for WeightSequence {
    fn default() -> Self {
        Self::zero()
    }
}

impl WeightSequence {
    pub fn new(explicit: Vec<f64>, tail: Tail) -> Result<Self> {
        let w = Self {
            explicit,
            tail,
            shift: 0.0,
        };
        w.validate()?;
        Ok(w)
    }

    /// `alpha = 0` for every cycle length: the uniform measure.
    pub fn zero() -> Self {
        Self {
            explicit: Vec::new(),
            tail: Tail::Zero,
            shift: 0.0,
        }
    }

    /// `alpha_l = c * l^(-p)` for all `l`.
    pub fn power(c: f64, p: f64) -> Self {
        Self {
            explicit: Vec::new(),
            tail: Tail::Power { c, p },
            shift: 0.0,
        }
    }

    /// Only `alpha_1` is nonzero.
    pub fn first_only(alpha1: f64) -> Self {
        Self {
            explicit: vec![alpha1],
            tail: Tail::Zero,
            shift: 0.0,
        }
    }

    /// Finite explicit list, zero afterwards.
    pub fn explicit(values: Vec<f64>) -> Self {
        Self {
            explicit: values,
            tail: Tail::Zero,
            shift: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.explicit.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("explicit", format!("non-finite weight {v}")));
        }
        if !self.shift.is_finite() {
            return Err(Error::invalid("shift", "must be finite"));
        }
        match self.tail {
            Tail::Zero => {}
            Tail::Power { c, p } | Tail::LogDecay { c, p } => {
                if !c.is_finite() || !p.is_finite() {
                    return Err(Error::invalid("tail", "c and p must be finite"));
                }
            }
        }
        if matches!(self.tail, Tail::LogDecay { c, .. } if c != 0.0) && self.explicit.is_empty() {
            return Err(Error::invalid(
                "tail",
                "logdecay is undefined at l = 1; give alpha_1 explicitly",
            ));
        }
        Ok(())
    }

    /// The sequence `alpha_l + c * l`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut w = self.clone();
        w.shift += c;
        w
    }

    /// The sequence with its linear term removed.
    pub fn without_shift(&self) -> Self {
        let mut w = self.clone();
        w.shift = 0.0;
        w
    }

    /// Length of the explicit prefix.
    pub fn explicit_len(&self) -> usize {
        self.explicit.len()
    }

    /// `alpha_l` without the linear term.
    pub fn base(&self, l: usize) -> f64 {
        assert!(l >= 1, "cycle lengths start at 1");
        if let Some(&a) = self.explicit.get(l - 1) {
            return a;
        }
        let lf = l as f64;
        match self.tail {
            Tail::Zero => 0.0,
            Tail::Power { c, p } => c * lf.powf(-p),
            Tail::LogDecay { c, p } => {
                if c == 0.0 {
                    0.0
                } else {
                    c / lf.ln().powf(p)
                }
            }
        }
    }

    /// `alpha_l`.
    pub fn alpha(&self, l: usize) -> f64 {
        self.base(l) + self.shift * l as f64
    }

    /// `alpha_1 .. alpha_n`.
    pub fn alphas(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|l| self.alpha(l)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.shift == 0.0
            && self.explicit.iter().all(|&a| a == 0.0)
            && match self.tail {
                Tail::Zero => true,
                Tail::Power { c, .. } | Tail::LogDecay { c, .. } => c == 0.0,
            }
    }

    fn tail_is_zero(&self) -> bool {
        match self.tail {
            Tail::Zero => true,
            Tail::Power { c, .. } | Tail::LogDecay { c, .. } => c == 0.0,
        }
    }

    /// Whether `sum_l |1 - e^(-alpha_l)| / l` is finite.
    pub fn is_summable(&self) -> bool {
        if self.shift != 0.0 {
            return false;
        }
        if self.tail_is_zero() {
            return true;
        }
        match self.tail {
            Tail::Zero => true,
            Tail::Power { p, .. } => p > 0.0,
            Tail::LogDecay { p, .. } => p > 1.0,
        }
    }

    /// Whether `alpha_l / l -> 0`.
    pub fn has_sublinear_growth(&self) -> bool {
        if self.shift != 0.0 {
            return false;
        }
        match self.tail {
            Tail::Zero | Tail::LogDecay { .. } => true,
            Tail::Power { c, p } => c == 0.0 || p > -1.0,
        }
    }

    /// Infimum of `alpha_l` without the linear term, over all `l >= 1`.
    /// `-inf` when the tail is unbounded below.
    pub fn base_infimum(&self) -> f64 {
        let prefix = self.explicit.iter().copied().fold(f64::INFINITY, f64::min);
        let first_tail = self.explicit.len() + 1;
        let tail_inf = match self.tail {
            Tail::Zero => 0.0,
            Tail::Power { c, p } => {
                if c == 0.0 {
                    0.0
                } else if p > 0.0 {
                    if c > 0.0 {
                        0.0
                    } else {
                        c * (first_tail as f64).powf(-p)
                    }
                } else if p == 0.0 {
                    c
                } else if c > 0.0 {
                    c * (first_tail as f64).powf(-p)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Tail::LogDecay { c, p } => {
                if c >= 0.0 {
                    if p >= 0.0 {
                        0.0
                    } else {
                        self.base(first_tail.max(2))
                    }
                } else if p > 0.0 {
                    self.base(first_tail.max(2))
                } else {
                    f64::NEG_INFINITY
                }
            }
        };
        prefix.min(tail_inf)
    }

    /// Upper bound on `|e^(-alpha_n) - 1|` (base part only) valid for every
    /// `n >= from`, provided `from` lies past the explicit prefix. `None` when
    /// the tail does not decay.
    pub fn deficit_bound(&self, from: usize) -> Option<f64> {
        let n = from.max(self.explicit.len() + 1).max(2);
        let x = match self.tail {
            Tail::Zero => 0.0,
            Tail::Power { c, p } => {
                if c == 0.0 {
                    0.0
                } else if p <= 0.0 {
                    return None;
                } else {
                    c.abs() * (n as f64).powf(-p)
                }
            }
            Tail::LogDecay { c, p } => {
                if c == 0.0 {
                    0.0
                } else if p <= 0.0 {
                    return None;
                } else {
                    c.abs() / (n as f64).ln().powf(p)
                }
            }
        };
        Some(x * x.exp())
    }

    /// Upper bound on `sum_{n > cut} |e^(-alpha_n) - 1| * n^(-s)` (base part),
    /// for `cut` past the explicit prefix. Infinite when the bound diverges.
    pub fn deficit_tail_sum_bound(&self, cut: usize, s: f64) -> f64 {
        let n = cut.max(self.explicit.len()).max(2) as f64;
        match self.tail {
            Tail::Zero => 0.0,
            Tail::Power { c, p } => {
                if c == 0.0 {
                    return 0.0;
                }
                let e = p + s;
                if p <= 0.0 || e <= 1.0 {
                    return f64::INFINITY;
                }
                let x = c.abs() * n.powf(-p);
                x.exp() * c.abs() * n.powf(1.0 - e) / (e - 1.0)
            }
            Tail::LogDecay { c, p } => {
                if c == 0.0 {
                    return 0.0;
                }
                if p <= 0.0 || s <= 1.0 {
                    return f64::INFINITY;
                }
                let x = c.abs() / n.ln().powf(p);
                x.exp() * x * n.powf(1.0 - s) / (s - 1.0)
            }
        }
    }

    /// Whether `alpha_{a+b} <= alpha_a + alpha_b` for all `a + b <= n`.
    pub fn is_subadditive_up_to(&self, n: usize) -> bool {
        let a = self.alphas(n);
        (1..=n).all(|i| (1..=n - i).all(|j| a[i + j - 1] <= a[i - 1] + a[j - 1] + 1e-14))
    }

    /// Whether `alpha_{a+b} >= alpha_a + alpha_b` for all `a + b <= n`.
    pub fn is_superadditive_up_to(&self, n: usize) -> bool {
        let a = self.alphas(n);
        (1..=n).all(|i| (1..=n - i).all(|j| a[i + j - 1] >= a[i - 1] + a[j - 1] - 1e-14))
    }
}
