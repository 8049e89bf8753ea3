use std::collections::BTreeMap;

use serde::Serialize;

use super::lattice::ModeLattice;
use crate::error::{Error, Result};
use crate::weights::WeightSequence;

/// Cap on `sum_pi modes^(cycles(pi))`, the number of compatible
/// (mode vector, permutation) pairs.
pub const ENUMERATION_CAP: f64 = 1e6;

/// Exact law of the Fourier model by summing over every permutation and
/// every mode vector constant on its cycles.
#[derive(Debug, Clone, Serialize)]
pub struct SmallEnumeration {
    pub n: usize,
    pub volume: f64,
    /// Total weight, `(1/N!) sum_pi sum_k e^(-H)`.
    pub y: f64,
    /// Occupation vector (lattice order) and its probability.
    pub occupations: Vec<(Vec<usize>, f64)>,
    /// Cycle type (lengths, nonincreasing) and its probability.
    pub cycle_types: Vec<(Vec<usize>, f64)>,
    pub pairs: usize,
}

impl SmallEnumeration {
    /// `P(n_k = m)`, `m = 0..=N`.
    pub fn marginal(&self, k: usize) -> Vec<f64> {
        let mut law = vec![0.0; self.n + 1];
        for (occ, p) in &self.occupations {
            law[occ[k]] += p;
        }
        law
    }

    /// `E(rho_{a,b})`: expected number of indices in cycles of length in
    /// `[a, b]`, over the volume.
    pub fn cycle_density(&self, a: usize, b: usize) -> f64 {
        self.cycle_types
            .iter()
            .map(|(lens, p)| {
                let c: usize = lens.iter().filter(|&&l| l >= a && l <= b).sum();
                p * c as f64
            })
            .sum::<f64>()
            / self.volume
    }

    pub fn occupation_probability(&self, occ: &[usize]) -> f64 {
        self.occupations.iter().find(|(o, _)| o == occ).map_or(0.0, |(_, p)| *p)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

fn cycle_lengths(p: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut lens = Vec::new();
    for i in 0..p.len() {
        if seen[i] {
            continue;
        }
        let mut j = i;
        let mut l = 0;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            l += 1;
        }
        lens.push(l);
    }
    lens
}

/// Direct summation over `S_N` and compatible mode vectors.
pub fn enumerate_small(lattice: &ModeLattice, weights: &WeightSequence, n: usize) -> Result<SmallEnumeration> {
    weights.validate()?;
    let j = lattice.len();
    // rising factorial j (j+1) ... (j+n-1)
    let pairs: f64 = (0..n).map(|i| (j + i) as f64).product();
    if pairs > ENUMERATION_CAP {
        return Err(Error::TooLarge(format!(
            "{pairs:.0} (mode vector, permutation) pairs exceed the cap {ENUMERATION_CAP:.0}"
        )));
    }
    let eps = lattice.eps();
    let n_fact: f64 = (1..=n).map(|i| i as f64).product();
    let mut occ_law: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut type_law: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut total = 0.0;
    let mut count = 0usize;
    for p in permutations(n) {
        let lens = cycle_lengths(&p);
        let cyc: f64 = lens.iter().map(|&l| weights.alpha(l)).sum();
        let c = lens.len();
        // every assignment of a mode to each cycle
        let mut assign = vec![0usize; c];
        loop {
            let mut occ = vec![0usize; j];
            let mut energy = cyc;
            for (ci, &l) in lens.iter().enumerate() {
                occ[assign[ci]] += l;
                energy += l as f64 * eps[assign[ci]];
            }
            let w = (-energy).exp() / n_fact;
            *occ_law.entry(occ).or_insert(0.0) += w;
            let mut key = lens.clone();
            key.sort_unstable_by(|a, b| b.cmp(a));
            *type_law.entry(key).or_insert(0.0) += w;
            total += w;
            count += 1;
            let mut i = 0;
            while i < c {
                assign[i] += 1;
                if assign[i] < j {
                    break;
                }
                assign[i] = 0;
                i += 1;
            }
            if i == c {
                break;
            }
        }
    }
    Ok(SmallEnumeration {
        n,
        volume: lattice.volume(),
        y: total,
        occupations: occ_law.into_iter().map(|(k, w)| (k, w / total)).collect(),
        cycle_types: type_law.into_iter().map(|(k, w)| (k, w / total)).collect(),
        pairs: count,
    })
}
