use serde::Serialize;

use super::potential::PeriodicXi;
use crate::error::{Error, Result};
use crate::weights::WeightSequence;

/// Positions on the torus `[0, L)^d` and a permutation, with cached jump
/// energies `xi_L(x_i - x_{pi(i)})`, cycle tally and total energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialState {
    l: f64,
    d: usize,
    /// Row-major, `n * d`.
    pos: Vec<f64>,
    perm: Vec<usize>,
    inv: Vec<usize>,
    jump: Vec<f64>,
    /// `tally[l]` is the number of cycles of length `l`.
    tally: Vec<usize>,
    energy: f64,
}

/// A proposed move with its energy change, applied by [`SpatialState::apply`].
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    Displace {
        i: usize,
        x: Vec<f64>,
        jumps: [(usize, f64); 2],
        delta: f64,
    },
    Transpose {
        i: usize,
        j: usize,
        jumps: [(usize, f64); 2],
        removed: Vec<usize>,
        added: Vec<usize>,
        delta: f64,
    },
}

impl Proposal {
    pub fn delta(&self) -> f64 {
        match self {
            Proposal::Displace { delta, .. } | Proposal::Transpose { delta, .. } => *delta,
        }
    }
}

fn wrap(t: f64, l: f64) -> f64 {
    let r = t.rem_euclid(l);
    if r >= l {
        0.0
    } else {
        r
    }
}

/// Cycle lengths of `perm`.
pub fn cycle_lengths(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for s in 0..perm.len() {
        let mut i = s;
        let mut len = 0;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len > 0 {
            out.push(len);
        }
    }
    out
}

impl SpatialState {
    /// State from `n * d` coordinates (row-major) and a permutation; positions
    /// are wrapped into `[0, L)`.
    pub fn new(xi: &PeriodicXi, weights: &WeightSequence, positions: Vec<f64>, perm: Vec<usize>) -> Result<Self> {
        let d = xi.pot.d;
        let n = perm.len();
        if positions.len() != n * d {
            return Err(Error::invalid("positions", format!("expected {} coordinates", n * d)));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("positions", "must be finite"));
        }
        let mut inv = vec![usize::MAX; n];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n || inv[p] != usize::MAX {
                return Err(Error::invalid("perm", "not a permutation"));
            }
            inv[p] = i;
        }
        let l = xi.l;
        let pos = positions.into_iter().map(|x| wrap(x, l)).collect();
        let mut s = Self {
            l,
            d,
            pos,
            perm,
            inv,
            jump: vec![0.0; n],
            tally: vec![0; n + 1],
            energy: 0.0,
        };
        for i in 0..n {
            s.jump[i] = xi.between(s.position(i), s.position(s.perm[i]));
        }
        for len in cycle_lengths(&s.perm) {
            s.tally[len] += 1;
        }
        s.energy = hamiltonian(&s, xi, weights);
        Ok(s)
    }

    /// Identity permutation with the given positions.
    pub fn identity(xi: &PeriodicXi, weights: &WeightSequence, positions: Vec<f64>) -> Result<Self> {
        let n = positions.len() / xi.pot.d.max(1);
        Self::new(xi, weights, positions, (0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.pos[i * self.d..(i + 1) * self.d]
    }

    pub fn positions(&self) -> &[f64] {
        &self.pos
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jump
    }

    /// Cached `r_l` for `l = 0..=N` (entry 0 unused).
    pub fn cycle_tally(&self) -> &[usize] {
        &self.tally
    }

    pub fn cycle_count(&self) -> usize {
        self.tally.iter().sum()
    }

    /// `N_{a,b}`: indices in cycles of length in `[a, b]`.
    pub fn n_ab(&self, a: usize, b: usize) -> usize {
        let b = b.min(self.n());
        (a.max(1)..=b).map(|l| l * self.tally[l]).sum()
    }

    /// Cached `H_L`, updated incrementally.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `t` with `pi^t(i) = j`, or `None` when `j` is in another cycle; also
    /// the length of the cycle through `i`.
    fn cycle_position(&self, i: usize, j: usize) -> (Option<usize>, usize) {
        let mut k = self.perm[i];
        let mut t = 1;
        let mut hit = if i == j { Some(0) } else { None };
        while k != i {
            if k == j {
                hit = Some(t);
            }
            k = self.perm[k];
            t += 1;
        }
        (hit, t)
    }

    fn cycle_len(&self, i: usize) -> usize {
        self.cycle_position(i, i).1
    }

    /// Move `x_i` to `x` (wrapped). Only the jumps out of `i` and into `i`
    /// change.
    pub fn propose_displacement(&self, xi: &PeriodicXi, i: usize, x: &[f64]) -> Proposal {
        let x: Vec<f64> = x.iter().map(|&t| wrap(t, self.l)).collect();
        let p = self.perm[i];
        if p == i {
            return Proposal::Displace {
                i,
                x,
                jumps: [(i, self.jump[i]), (i, self.jump[i])],
                delta: 0.0,
            };
        }
        let q = self.inv[i];
        let out = xi.between(&x, self.position(p));
        let inn = xi.between(self.position(q), &x);
        let delta = (out - self.jump[i]) + (inn - self.jump[q]);
        Proposal::Displace {
            i,
            x,
            jumps: [(i, out), (q, inn)],
            delta,
        }
    }

    /// `pi <- pi o (i j)`, so `pi(i)` and `pi(j)` swap. Splits the cycle
    /// through `i` when it contains `j`, merges the two cycles otherwise.
    pub fn propose_transposition(&self, xi: &PeriodicXi, weights: &WeightSequence, i: usize, j: usize) -> Proposal {
        assert!(i != j && i < self.n() && j < self.n());
        let (pi, pj) = (self.perm[i], self.perm[j]);
        let ji = xi.between(self.position(i), self.position(pj));
        let jj = xi.between(self.position(j), self.position(pi));
        let (hit, len) = self.cycle_position(i, j);
        let (removed, added) = match hit {
            Some(t) => (vec![len], vec![t, len - t]),
            None => {
                let other = self.cycle_len(j);
                (vec![len, other], vec![len + other])
            }
        };
        let cyc: f64 = added.iter().map(|&l| weights.alpha(l)).sum::<f64>()
            - removed.iter().map(|&l| weights.alpha(l)).sum::<f64>();
        let delta = (ji - self.jump[i]) + (jj - self.jump[j]) + cyc;
        Proposal::Transpose {
            i,
            j,
            jumps: [(i, ji), (j, jj)],
            removed,
            added,
            delta,
        }
    }

    pub fn apply(&mut self, p: &Proposal) {
        match p {
            Proposal::Displace { i, x, jumps, delta } => {
                self.pos[i * self.d..(i + 1) * self.d].copy_from_slice(x);
                for &(k, v) in jumps {
                    self.jump[k] = v;
                }
                self.energy += delta;
            }
            Proposal::Transpose {
                i,
                j,
                jumps,
                removed,
                added,
                delta,
            } => {
                let (i, j) = (*i, *j);
                self.perm.swap(i, j);
                self.inv[self.perm[i]] = i;
                self.inv[self.perm[j]] = j;
                for &(k, v) in jumps {
                    self.jump[k] = v;
                }
                for &l in removed {
                    self.tally[l] -= 1;
                }
                for &l in added {
                    self.tally[l] += 1;
                }
                self.energy += delta;
            }
        }
    }

    /// Replace the cached energy by a full recomputation.
    pub fn refresh(&mut self, xi: &PeriodicXi, weights: &WeightSequence) {
        for i in 0..self.n() {
            self.jump[i] = xi.between(self.position(i), self.position(self.perm[i]));
        }
        self.energy = hamiltonian(self, xi, weights);
    }

    /// Whether every cache matches recomputation, energies within `tol`.
    pub fn check_caches(&self, xi: &PeriodicXi, weights: &WeightSequence, tol: f64) -> bool {
        let mut tally = vec![0; self.n() + 1];
        for l in cycle_lengths(&self.perm) {
            tally[l] += 1;
        }
        let inv_ok = (0..self.n()).all(|i| self.inv[self.perm[i]] == i);
        let jumps_ok = (0..self.n())
            .all(|i| (self.jump[i] - xi.between(self.position(i), self.position(self.perm[i]))).abs() <= tol);
        let sum: usize = tally.iter().enumerate().map(|(l, r)| l * r).sum();
        inv_ok
            && jumps_ok
            && tally == self.tally
            && sum == self.n()
            && (self.energy - hamiltonian(self, xi, weights)).abs() <= tol
            && self.pos.iter().all(|&x| (0.0..self.l).contains(&x))
    }
}

/// `H_L(x, pi) = sum_i xi_L(x_i - x_{pi(i)}) + sum_l alpha_l r_l(pi)`,
/// recomputed from positions and permutation.
pub fn hamiltonian(state: &SpatialState, xi: &PeriodicXi, weights: &WeightSequence) -> f64 {
    let jumps: f64 = (0..state.n())
        .map(|i| xi.between(state.position(i), state.position(state.perm[i])))
        .sum();
    let cycles: f64 = cycle_lengths(&state.perm).iter().map(|&l| weights.alpha(l)).sum();
    jumps + cycles
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi() -> PeriodicXi {
        PeriodicXi::for_box(1, 1.0, 4.0).unwrap()
    }

    #[test]
    fn small_hamiltonians() {
        let p = xi();
        let w = WeightSequence::power(0.8, 1.0);
        let one = SpatialState::identity(&p, &w, vec![1.3]).unwrap();
        assert!((one.energy() - (p.eval(&[0.0]) + 0.8)).abs() < 1e-14);
        let z = WeightSequence::zero();
        let same = SpatialState::identity(&p, &z, vec![2.0; 4]).unwrap();
        assert!((same.energy() - 4.0 * p.eval(&[0.0])).abs() < 1e-13);
        let tr = SpatialState::new(&p, &w, vec![0.5, 3.2], vec![1, 0]).unwrap();
        let expect = 2.0 * p.eval(&[0.5 - 3.2]) + w.alpha(2);
        assert!((tr.energy() - expect).abs() < 1e-13);
    }

    #[test]
    fn merge_and_split_bookkeeping() {
        let p = xi();
        let w = WeightSequence::explicit(vec![0.1, 0.7, 1.9, 0.4]);
        // cycles (0 1 2) and (3)
        let mut s = SpatialState::new(&p, &w, vec![0.1, 1.0, 2.0, 3.5], vec![1, 2, 0, 3]).unwrap();
        let merge = s.propose_transposition(&p, &w, 0, 3);
        assert!(
            matches!(&merge, Proposal::Transpose { removed, added, .. } if removed == &vec![3, 1] && added == &vec![4])
        );
        s.apply(&merge);
        assert_eq!(s.cycle_tally()[4], 1);
        assert!(s.check_caches(&p, &w, 1e-12));
        // (0 3 1 2): pi^2(0) = 1 splits into lengths 2 and 2
        let split = s.propose_transposition(&p, &w, 0, 1);
        assert!(
            matches!(&split, Proposal::Transpose { removed, added, .. } if removed == &vec![4] && added == &vec![2, 2])
        );
        s.apply(&split);
        assert_eq!(s.cycle_tally()[2], 2);
        assert!(s.check_caches(&p, &w, 1e-12));
    }

    #[test]
    fn rejects_bad_input() {
        let p = xi();
        let w = WeightSequence::zero();
        assert!(SpatialState::new(&p, &w, vec![0.0, 1.0], vec![0, 0]).is_err());
        assert!(SpatialState::new(&p, &w, vec![0.0], vec![0, 1]).is_err());
        let s = SpatialState::identity(&p, &w, vec![-0.5, 9.0]).unwrap();
        assert!((s.position(0)[0] - 3.5).abs() < 1e-15 && (s.position(1)[0] - 1.0).abs() < 1e-15);
    }
}
