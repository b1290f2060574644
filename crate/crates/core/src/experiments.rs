//! Seeded experiment drivers: convergence of `mu_{N,k}` to the predicted
//! product measures, the random choice of maximizer when `G` has several,
//! and the fluctuations of `sqrt(N) Delta_N` that drive that choice.
//!
//! Every work item `(N, replica)` draws its own field with seed
//! `mix_seed(base_seed + replica, N)`, so outputs do not depend on
//! scheduling and reruns are byte-identical.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfcwError};
use crate::field::{mix_seed, sample_field, FieldSpec};
use crate::landscape::{delta_n_with, find_global_maxima, LandscapeReport, DEFAULT_TOL_DEG};
use crate::marginals::{predicted_product, select_j_index, IntegralRepresentation, QuadratureSpec};
use crate::model::{kl_divergence, tv_distance, ModelParams, MAX_WORD_LEN};
use crate::numeric::{log_cosh, quantile};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "RFCW_THREADS";

/// How many leading spins to compare at system size `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    Fixed(usize),
    /// `k(N) = ceil(N^alpha)`, `0 < alpha < 1/2`.
    Growth {
        alpha: f64,
    },
}

impl KRule {
    pub fn k_for(&self, n: usize) -> usize {
        let k = match *self {
            KRule::Fixed(k) => k,
            KRule::Growth { alpha } => (n as f64).powf(alpha).ceil() as usize,
        };
        k.min(n).min(MAX_WORD_LEN)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            KRule::Fixed(k) if k == 0 || k > MAX_WORD_LEN => Err(RfcwError::arg(format!(
                "k must be in 1..={MAX_WORD_LEN}, got {k}"
            ))),
            KRule::Growth { alpha } if !(alpha > 0.0 && alpha < 0.5) => Err(RfcwError::arg(
                format!("growth exponent must be in (0, 1/2), got {alpha}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: FieldSpec,
    pub beta: f64,
    pub n_grid: Vec<usize>,
    pub k: KRule,
    pub replicas: usize,
    pub base_seed: u64,
    pub quad: QuadratureSpec,
    pub output_path: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(RfcwError::arg(format!(
                "beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(RfcwError::arg("n_grid must be non-empty with N >= 1"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RfcwError::arg("n_grid must be strictly increasing"));
        }
        if self.replicas == 0 {
            return Err(RfcwError::arg("replicas must be >= 1"));
        }
        self.k.validate()?;
        self.quad.validate()
    }

    fn work_items(&self) -> Vec<(usize, usize)> {
        self.n_grid
            .iter()
            .flat_map(|&n| (0..self.replicas).map(move |r| (n, r)))
            .collect()
    }

    fn seed_for(&self, n: usize, replica: usize) -> u64 {
        mix_seed(self.base_seed.wrapping_add(replica as u64), n)
    }
}

/// One `(N, replica)` comparison of `mu_{N,k}` with a product measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub j_index: usize,
    pub kl: f64,
    pub tv: f64,
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

/// Maps `f` over `items` keeping input order; parallel when enabled.
pub fn ordered_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap() {
            builder = builder.num_threads(n);
        }
        match builder.build() {
            Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
            Err(_) => items.into_iter().map(f).collect(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = thread_cap();
        items.into_iter().map(f).collect()
    }
}

struct ReplicaOutcome {
    row: ConvergenceRow,
    /// smallest TV against any other maximizer's product measure
    tv_other: Option<f64>,
}

fn run_replica(
    config: &ExperimentConfig,
    report: &LandscapeReport,
    n: usize,
    replica: usize,
    use_j_index: bool,
) -> Result<ReplicaOutcome> {
    let seed = config.seed_for(n, replica);
    let h = sample_field(&config.spec, n, seed)?;
    let params = ModelParams::new(config.beta, n)?;
    let k = config.k.k_for(n);
    let mu = IntegralRepresentation::new(&params, &h, &config.quad)?.marginal(k)?;
    let j = if use_j_index {
        select_j_index(&h, &config.spec, config.beta, report)?
    } else {
        0
    };
    let prefix = h.prefix(k);
    let rho = predicted_product(config.beta, report, j, prefix)?;
    let mut tv_other: Option<f64> = None;
    for other in (0..report.n_maxima()).filter(|&i| i != j) {
        let t = tv_distance(&mu, &predicted_product(config.beta, report, other, prefix)?)?;
        tv_other = Some(tv_other.map_or(t, |b| b.min(t)));
    }
    Ok(ReplicaOutcome {
        row: ConvergenceRow {
            n,
            k,
            seed,
            j_index: j,
            kl: kl_divergence(&mu, &rho)?,
            tv: tv_distance(&mu, &rho)?,
        },
        tv_other,
    })
}

/// KL and TV between `mu_{N,k}` and the product measure at the unique
/// maximizer of `G`, for every `N` and replica.
pub fn chaos_convergence_scan(config: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    config.validate()?;
    let report = find_global_maxima(&config.spec, config.beta, DEFAULT_TOL_DEG)?;
    if !report.is_unique() {
        return Err(RfcwError::Precondition(format!(
            "G has {} global maxima; use j_index_statistics for this regime",
            report.n_maxima()
        )));
    }
    ordered_map(config.work_items(), |(n, r)| {
        run_replica(config, &report, n, r, false).map(|o| o.row)
    })
    .into_iter()
    .collect()
}

/// Outcome of [`j_index_statistics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JIndexReport {
    pub locations: Vec<f64>,
    /// How often each maximizer was selected.
    pub frequencies: Vec<usize>,
    pub rows: Vec<ConvergenceRow>,
    /// Per row, the smallest TV against a non-selected maximizer.
    pub tv_other: Vec<f64>,
}

impl JIndexReport {
    pub fn tv_quantile(&self, q: f64) -> f64 {
        let tv: Vec<f64> = self.rows.iter().map(|r| r.tv).collect();
        quantile(&tv, q)
    }

    pub fn median_tv(&self) -> f64 {
        self.tv_quantile(0.5)
    }

    pub fn frequency_fractions(&self) -> Vec<f64> {
        let total = self.rows.len() as f64;
        self.frequencies.iter().map(|&c| c as f64 / total).collect()
    }
}

/// Selects `J` per replica and compares `mu_{N,k}` with `rho_J`.
pub fn j_index_statistics(config: &ExperimentConfig) -> Result<JIndexReport> {
    config.validate()?;
    if config.spec.second_moment() == 0.0 {
        return Err(RfcwError::Precondition(
            "the field law must have E h^2 != 0".into(),
        ));
    }
    let report = find_global_maxima(&config.spec, config.beta, DEFAULT_TOL_DEG)?;
    if report.n_maxima() < 2 {
        return Err(RfcwError::Precondition(
            "G has a unique global maximum; use chaos_convergence_scan".into(),
        ));
    }
    if let Some(m) = report.maxima.iter().find(|m| m.degeneracy_n != 1) {
        return Err(RfcwError::Precondition(format!(
            "maximum at {} is {}-degenerate; all maxima must be non-degenerate",
            m.location, m.degeneracy_n
        )));
    }
    let outcomes: Vec<ReplicaOutcome> = ordered_map(config.work_items(), |(n, r)| {
        run_replica(config, &report, n, r, true)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut frequencies = vec![0; report.n_maxima()];
    for o in &outcomes {
        frequencies[o.row.j_index] += 1;
    }
    Ok(JIndexReport {
        locations: report.locations(),
        frequencies,
        tv_other: outcomes.iter().map(|o| o.tv_other.unwrap_or(0.0)).collect(),
        rows: outcomes.into_iter().map(|o| o.row).collect(),
    })
}

/// Replica statistics of `sqrt(N) Delta_N(y0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub replicas: usize,
    pub y0: f64,
    pub mean: f64,
    pub variance: f64,
    /// `Var[log cosh(sqrt(beta) y0 + beta h)]` under the field law.
    pub target_variance: f64,
}

pub fn clt_diagnostic(
    spec: &FieldSpec,
    beta: f64,
    y0: f64,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<CltReport> {
    if replicas < 100 {
        return Err(RfcwError::arg(format!(
            "replicas must be >= 100, got {replicas}"
        )));
    }
    if n == 0 {
        return Err(RfcwError::arg("n must be >= 1"));
    }
    if !(beta > 0.0) || !y0.is_finite() {
        return Err(RfcwError::arg("beta must be > 0 and y0 finite"));
    }
    let scale = (n as f64).sqrt();
    let values: Vec<f64> = ordered_map((0..replicas).collect(), |r| -> Result<f64> {
        let h = sample_field(spec, n, mix_seed(seed.wrapping_add(r as u64), n))?;
        Ok(scale * delta_n_with(&h.empirical(), spec, beta, y0, 0)?)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let sb = beta.sqrt();
    let first = spec.expect(|h| log_cosh(sb * y0 + beta * h));
    let target_variance = spec
        .expect(|h| (log_cosh(sb * y0 + beta * h) - first).powi(2))
        .max(0.0);
    Ok(CltReport {
        n,
        replicas,
        y0,
        mean,
        variance,
        target_variance,
    })
}
