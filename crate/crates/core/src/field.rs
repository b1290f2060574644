//! Laws of the quenched external field and their realizations.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RfcwError};

const PROB_SUM_TOL: f64 = 1e-12;

/// A finitely supported law for the i.i.d. fields `h_i`.
///
/// Equal support values are merged on construction, so `dichotomous(0.0)`
/// is the point mass at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    name: String,
    support: Vec<(f64, f64)>,
}

impl FieldSpec {
    pub fn new(name: impl Into<String>, support: Vec<(f64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(RfcwError::arg("field support is empty"));
        }
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(support.len());
        for (v, p) in support {
            if !v.is_finite() {
                return Err(RfcwError::arg(format!("support value {v} is not finite")));
            }
            if !(p > 0.0) || !p.is_finite() {
                return Err(RfcwError::arg(format!(
                    "probability {p} of value {v} must be strictly positive"
                )));
            }
            match merged.iter_mut().find(|(u, _)| *u == v) {
                Some(slot) => slot.1 += p,
                None => merged.push((v, p)),
            }
        }
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = merged.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(RfcwError::arg(format!(
                "field probabilities sum to {total}, expected 1"
            )));
        }
        Ok(FieldSpec {
            name: name.into(),
            support: merged,
        })
    }

    /// `h = ±strength` with probability 1/2 each.
    pub fn dichotomous(strength: f64) -> Result<Self> {
        if !strength.is_finite() || strength < 0.0 {
            return Err(RfcwError::arg(format!(
                "dichotomous field strength must be finite and >= 0, got {strength}"
            )));
        }
        FieldSpec::new(
            format!("dichotomous:{strength}"),
            vec![(-strength, 0.5), (strength, 0.5)],
        )
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        FieldSpec::new(format!("discrete:{value}:1"), vec![(value, 1.0)])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Support points sorted by value, with their probabilities.
    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    /// Exact expectation `E_h[f(h)]`.
    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.support.iter().map(|&(v, p)| p * f(v)).sum()
    }

    pub fn mean_abs(&self) -> f64 {
        self.expect(f64::abs)
    }

    pub fn second_moment(&self) -> f64 {
        self.expect(|h| h * h)
    }

    pub fn contains(&self, value: f64) -> bool {
        self.support.iter().any(|&(v, _)| v == value)
    }

    /// Invariant under `h -> -h`.
    pub fn is_symmetric(&self) -> bool {
        self.support.iter().all(|&(v, p)| {
            self.support
                .iter()
                .any(|&(u, q)| u == -v && (p - q).abs() <= 1e-15)
        })
    }

    pub fn negated(&self) -> FieldSpec {
        let mut support: Vec<(f64, f64)> = self.support.iter().map(|&(v, p)| (-v, p)).collect();
        support.sort_by(|a, b| a.0.total_cmp(&b.0));
        FieldSpec {
            name: format!("-({})", self.name),
            support,
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Parses `dichotomous:<h>` or `discrete:<v:p,...>`.
impl FromStr for FieldSpec {
    type Err = RfcwError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| RfcwError::arg(format!("field `{s}`: expected <kind>:<params>")))?;
        match kind {
            "dichotomous" => {
                let h: f64 = rest
                    .trim()
                    .parse()
                    .map_err(|_| RfcwError::arg(format!("bad dichotomous strength `{rest}`")))?;
                FieldSpec::dichotomous(h)
            }
            "discrete" => {
                let mut support = Vec::new();
                for item in rest.split(',') {
                    let (v, p) = item
                        .split_once(':')
                        .ok_or_else(|| RfcwError::arg(format!("bad support entry `{item}`")))?;
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| RfcwError::arg(format!("bad support value `{v}`")))?;
                    let p: f64 = p
                        .trim()
                        .parse()
                        .map_err(|_| RfcwError::arg(format!("bad probability `{p}`")))?;
                    support.push((v, p));
                }
                FieldSpec::new(s, support)
            }
            other => Err(RfcwError::arg(format!("unknown field kind `{other}`"))),
        }
    }
}

/// One quenched realization `h_1, ..., h_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    values: Vec<f64>,
    seed: u64,
    spec_name: String,
}

impl FieldSample {
    /// Wraps explicit field values (seed recorded as 0).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(RfcwError::arg("field sample must have at least one site"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(RfcwError::arg(format!("field value {v} is not finite")));
        }
        Ok(FieldSample {
            values,
            seed: 0,
            spec_name: "explicit".to_string(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec_name(&self) -> &str {
        &self.spec_name
    }

    pub fn prefix(&self, k: usize) -> &[f64] {
        &self.values[..k.min(self.values.len())]
    }

    pub fn mean_abs(&self) -> f64 {
        self.values.iter().map(|h| h.abs()).sum::<f64>() / self.values.len() as f64
    }

    /// The sample with every field negated.
    pub fn negated(&self) -> FieldSample {
        FieldSample {
            values: self.values.iter().map(|h| -h).collect(),
            seed: self.seed,
            spec_name: format!("-({})", self.spec_name),
        }
    }

    /// Empirical law of the sample: distinct values with relative frequencies.
    pub fn empirical(&self) -> EmpiricalField {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let v = sorted[i];
            let mut j = i;
            while j < sorted.len() && sorted[j] == v {
                j += 1;
            }
            atoms.push((v, (j - i) as f64 / n));
            i = j;
        }
        EmpiricalField { atoms }
    }
}

/// Distinct field values with their empirical weights. Every sum over sites
/// in the model depends on the sample only through this measure.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalField {
    atoms: Vec<(f64, f64)>,
}

impl EmpiricalField {
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn average(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(v, w)| w * f(v)).sum()
    }
}

/// Draws `n` i.i.d. fields from `spec`; deterministic in `(spec, n, seed)`.
pub fn sample_field(spec: &FieldSpec, n: usize, seed: u64) -> Result<FieldSample> {
    if n == 0 {
        return Err(RfcwError::arg("field sample size must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = spec.support();
    let values = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for &(v, p) in support {
                acc += p;
                if u < acc {
                    return v;
                }
            }
            support[support.len() - 1].0
        })
        .collect();
    Ok(FieldSample {
        values,
        seed,
        spec_name: spec.name().to_string(),
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives the seed of one `(replica seed, N)` work item.
pub fn mix_seed(seed: u64, n: usize) -> u64 {
    splitmix64(seed ^ splitmix64(n as u64))
}
