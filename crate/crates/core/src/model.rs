//! Spins, energies, Gibbs marginals by enumeration, product measures and
//! divergences between spin-word distributions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfcwError};
use crate::field::FieldSample;
use crate::numeric::up_probability;

/// Largest word length a [`MarginalTable`] may enumerate.
pub const MAX_WORD_LEN: usize = 24;
/// Largest system size accepted by [`brute_force_marginal`].
pub const MAX_ENUMERATION_SITES: usize = 22;

const TABLE_SUM_TOL: f64 = 1e-10;

/// Inverse temperature and system size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    beta: f64,
    n_sites: usize,
}

impl ModelParams {
    pub fn new(beta: f64, n_sites: usize) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(RfcwError::arg(format!(
                "beta must be finite and > 0, got {beta}"
            )));
        }
        if n_sites == 0 {
            return Err(RfcwError::arg("n_sites must be >= 1"));
        }
        Ok(ModelParams { beta, n_sites })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
}

/// A configuration `(s_1, ..., s_k)` of the first `k` spins.
///
/// Words are ordered lexicographically with `+1` before `-1`; the index of a
/// word reads the spins as binary digits (`+1 -> 0`, `-1 -> 1`) with the
/// first spin most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinWord(Vec<i8>);

impl SpinWord {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() || spins.len() > MAX_WORD_LEN {
            return Err(RfcwError::arg(format!(
                "spin word length must be in 1..={MAX_WORD_LEN}, got {}",
                spins.len()
            )));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(RfcwError::arg("spin entries must be +1 or -1"));
        }
        Ok(SpinWord(spins))
    }

    pub fn from_index(k: usize, index: usize) -> SpinWord {
        SpinWord(
            (0..k)
                .map(|i| {
                    if (index >> (k - 1 - i)) & 1 == 0 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
        )
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, &s| (acc << 1) | usize::from(s == -1))
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SpinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(if *s == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// A probability table over `{-1,+1}^k`, indexed as in [`SpinWord::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalTable {
    k: usize,
    probs: Vec<f64>,
}

impl MarginalTable {
    pub fn new(k: usize, probs: Vec<f64>) -> Result<Self> {
        if k == 0 || k > MAX_WORD_LEN {
            return Err(RfcwError::arg(format!(
                "k must be in 1..={MAX_WORD_LEN}, got {k}"
            )));
        }
        if probs.len() != 1 << k {
            return Err(RfcwError::arg(format!(
                "table for k={k} needs {} entries, got {}",
                1usize << k,
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(RfcwError::arg("table entries must be finite and >= 0"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TABLE_SUM_TOL {
            return Err(RfcwError::arg(format!("table sums to {total}, expected 1")));
        }
        Ok(MarginalTable { k, probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        MarginalTable::new(k, vec![1.0 / (1u64 << k) as f64; 1 << k])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, word: &SpinWord) -> f64 {
        self.probs[word.index()]
    }

    pub fn words(&self) -> impl Iterator<Item = (SpinWord, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (SpinWord::from_index(self.k, i), p))
    }

    /// Marginal of the first `k - 1` spins. `None` when `k == 1`.
    pub fn marginalize_last(&self) -> Option<MarginalTable> {
        if self.k == 1 {
            return None;
        }
        let probs = self.probs.chunks(2).map(|c| c[0] + c[1]).collect();
        Some(MarginalTable {
            k: self.k - 1,
            probs,
        })
    }

    /// Probability that spin `i` (0-based) is `+1`.
    pub fn site_up_probability(&self, i: usize) -> f64 {
        let shift = self.k - 1 - i;
        self.probs
            .iter()
            .enumerate()
            .filter(|(w, _)| (w >> shift) & 1 == 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Image under the global flip `s -> -s`.
    pub fn spin_flipped(&self) -> MarginalTable {
        let mask = (1usize << self.k) - 1;
        let probs = (0..self.probs.len())
            .map(|w| self.probs[w ^ mask])
            .collect();
        MarginalTable { k: self.k, probs }
    }

    /// Table with coordinates `i` and `j` exchanged.
    pub fn swapped(&self, i: usize, j: usize) -> MarginalTable {
        let (si, sj) = (self.k - 1 - i, self.k - 1 - j);
        let probs = (0..self.probs.len())
            .map(|w| {
                let bi = (w >> si) & 1;
                let bj = (w >> sj) & 1;
                let src = if bi == bj {
                    w
                } else {
                    w ^ (1 << si) ^ (1 << sj)
                };
                self.probs[src]
            })
            .collect();
        MarginalTable { k: self.k, probs }
    }

    pub(crate) fn from_unnormalized(k: usize, mut weights: Vec<f64>) -> Result<(Self, f64)> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(RfcwError::Numerical {
                message: format!("marginal weights sum to {total}"),
                lo: 0.0,
                hi: 0.0,
            });
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok((MarginalTable { k, probs: weights }, total))
    }
}

fn check_same_k(p: &MarginalTable, q: &MarginalTable) -> Result<()> {
    if p.k != q.k {
        return Err(RfcwError::arg(format!(
            "table dimensions differ: k={} vs k={}",
            p.k, q.k
        )));
    }
    Ok(())
}

/// `H_N(s) = -(1/2N) (sum s_i)^2 - sum h_i s_i`.
pub fn hamiltonian(sigma: &[i8], h: &FieldSample) -> Result<f64> {
    let fields = h.values();
    if sigma.len() != fields.len() {
        return Err(RfcwError::arg(format!(
            "spin configuration has {} sites but field sample has {}",
            sigma.len(),
            fields.len()
        )));
    }
    if sigma.iter().any(|&s| s != 1 && s != -1) {
        return Err(RfcwError::arg("spin entries must be +1 or -1"));
    }
    let n = sigma.len() as f64;
    let m: f64 = sigma.iter().map(|&s| f64::from(s)).sum();
    let field: f64 = sigma
        .iter()
        .zip(fields)
        .map(|(&s, h)| f64::from(s) * h)
        .sum();
    Ok(-(m * m) / (2.0 * n) - field)
}

/// Energies of all `2^N` configurations of one field realization.
///
/// Energies do not depend on `beta`, so one table serves every temperature.
/// Configuration `c` has spin `i` equal to `-1` iff bit `N-1-i` of `c` is set.
#[derive(Debug, Clone)]
pub struct EnergyTable {
    n: usize,
    energies: Vec<f64>,
}

impl EnergyTable {
    pub fn new(h: &FieldSample) -> Result<Self> {
        let n = h.len();
        if n > MAX_ENUMERATION_SITES {
            return Err(RfcwError::Capacity {
                what: "N for enumeration",
                got: n,
                limit: MAX_ENUMERATION_SITES,
            });
        }
        let fields = h.values();
        let nf = n as f64;
        let energies = (0..1usize << n)
            .map(|c| {
                let mut m = 0.0;
                let mut field = 0.0;
                for (i, hi) in fields.iter().enumerate() {
                    let s = if (c >> (n - 1 - i)) & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    m += s;
                    field += s * hi;
                }
                -(m * m) / (2.0 * nf) - field
            })
            .collect();
        Ok(EnergyTable { n, energies })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn min_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `log Z_N` at inverse temperature `beta`.
    pub fn log_partition(&self, beta: f64) -> f64 {
        let e0 = self.min_energy();
        let s: f64 = self.energies.iter().map(|e| (-beta * (e - e0)).exp()).sum();
        -beta * e0 + s.ln()
    }

    /// Gibbs marginal of the first `k` spins at inverse temperature `beta`.
    pub fn marginal(&self, beta: f64, k: usize) -> Result<MarginalTable> {
        if k == 0 || k > self.n {
            return Err(RfcwError::arg(format!(
                "k must be in 1..={} for N={}, got {k}",
                self.n, self.n
            )));
        }
        let e0 = self.min_energy();
        let shift = self.n - k;
        let mut bins = vec![0.0; 1 << k];
        for (c, e) in self.energies.iter().enumerate() {
            bins[c >> shift] += (-beta * (e - e0)).exp();
        }
        MarginalTable::from_unnormalized(k, bins).map(|(t, _)| t)
    }
}

/// Exact marginal `mu_{N,k}` of the first `k` spins by full enumeration.
pub fn brute_force_marginal(
    params: &ModelParams,
    h: &FieldSample,
    k: usize,
) -> Result<MarginalTable> {
    check_sites(params, h)?;
    if k == 0 || k > h.len() {
        return Err(RfcwError::arg(format!(
            "k must be in 1..={}, got {k}",
            h.len()
        )));
    }
    EnergyTable::new(h)?.marginal(params.beta(), k)
}

pub(crate) fn check_sites(params: &ModelParams, h: &FieldSample) -> Result<()> {
    if params.n_sites() != h.len() {
        return Err(RfcwError::arg(format!(
            "params declare N={} but field sample has {} sites",
            params.n_sites(),
            h.len()
        )));
    }
    Ok(())
}

/// Product measure with `P(s_i = +1) = e^{a_i} / (2 cosh a_i)`,
/// `a_i = sqrt(beta) y + beta h_i`.
pub fn product_marginal(beta: f64, y: f64, h_prefix: &[f64]) -> Result<MarginalTable> {
    let k = h_prefix.len();
    if k == 0 || k > MAX_WORD_LEN {
        return Err(RfcwError::arg(format!(
            "field prefix length must be in 1..={MAX_WORD_LEN}, got {k}"
        )));
    }
    if !(beta >= 0.0) || !y.is_finite() {
        return Err(RfcwError::arg("beta must be >= 0 and y finite"));
    }
    let sb = beta.sqrt();
    let ups: Vec<(f64, f64)> = h_prefix
        .iter()
        .map(|hi| {
            let a = sb * y + beta * hi;
            (up_probability(a), up_probability(-a))
        })
        .collect();
    Ok(MarginalTable {
        k,
        probs: product_table(&ups),
    })
}

/// Product table from per-site `(P(+1), P(-1))` pairs.
pub(crate) fn product_table(site_probs: &[(f64, f64)]) -> Vec<f64> {
    let mut table = Vec::with_capacity(1 << site_probs.len());
    table.push(1.0);
    for &(up, down) in site_probs {
        let prev = std::mem::take(&mut table);
        table.reserve(prev.len() * 2);
        for p in prev {
            table.push(p * up);
            table.push(p * down);
        }
    }
    table
}

/// Relative entropy `H(p | q)`; `+inf` when `p` is not absolutely continuous
/// with respect to `q`.
pub fn kl_divergence(p: &MarginalTable, q: &MarginalTable) -> Result<f64> {
    check_same_k(p, q)?;
    let mut total = 0.0;
    for (&pi, &qi) in p.probs.iter().zip(&q.probs) {
        if pi == 0.0 {
            total += qi;
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        // p log(p/q) - p + q, each term >= 0
        total += pi * ((pi - qi) / qi).ln_1p() - (pi - qi);
    }
    Ok(total.max(0.0))
}

/// Total variation distance `(1/2) sum |p - q|`.
pub fn tv_distance(p: &MarginalTable, q: &MarginalTable) -> Result<f64> {
    check_same_k(p, q)?;
    let s: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * s).min(1.0))
}
