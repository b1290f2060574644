//! Finite-N marginals through the one-dimensional integral representation
//!
//! ```text
//! Z_N = 2^N sqrt(N / 2 pi) ∫ exp(N G_N(y)) dy
//! mu_{N,k}(s) = ∫ exp(N G_N(y)) g_s(y) dy / ∫ exp(N G_N(y)) dy
//! g_s(y) = prod_{i<=k} exp(s_i a_i(y)) / (2 cosh a_i(y)),  a_i = sqrt(beta) y + beta h_i
//! ```
//!
//! All integrals share one adaptive grid on `[-R, R]`, so the common factors
//! cancel exactly and the table is a weighted average of product measures.

use std::f64::consts::{LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RfcwError};
use crate::field::{EmpiricalField, FieldSample, FieldSpec};
use crate::landscape::{delta_n_with, sample_tail_radius, LandscapeReport};
use crate::model::{
    check_sites, product_marginal, product_table, MarginalTable, ModelParams, MAX_WORD_LEN,
};
use crate::numeric::{log_cosh, up_probability};
use crate::quadrature::AdaptiveGrid;

/// Beyond the safe radius the integrand is below `exp(-TAIL_LOG_MARGIN)`
/// times its bulk.
const TAIL_LOG_MARGIN: f64 = 50.0;
const RENORMALIZATION_TOL: f64 = 1e-8;
const SAMPLER_TV_TOL: f64 = 1e-6;
const SAMPLER_MAX_CELLS: usize = 1 << 22;
const J_TIE_TOL: f64 = 1e-14;
/// Node weights below this fraction of the integral are skipped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-30;

/// Integration domain and accuracy for the integral representation.
///
/// `radius` is a lower bound: it is raised to the problem's safe radius
/// (the tail radius of `G_N`, widened for small `N`) when smaller, so
/// `QuadratureSpec::default()` always integrates over a sufficient domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub radius: f64,
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radius: 0.0,
            rel_tol: 1e-12,
            max_refinements: 30,
        }
    }
}

impl QuadratureSpec {
    pub fn new(radius: f64, rel_tol: f64, max_refinements: usize) -> Result<Self> {
        let q = QuadratureSpec {
            radius,
            rel_tol,
            max_refinements,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius >= 0.0) || !self.radius.is_finite() {
            return Err(RfcwError::arg(format!(
                "radius must be finite and >= 0, got {}",
                self.radius
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-6) {
            return Err(RfcwError::arg(format!(
                "rel_tol must be in (0, 1e-6], got {}",
                self.rel_tol
            )));
        }
        if self.max_refinements > 30 {
            return Err(RfcwError::arg(format!(
                "max_refinements must be <= 30, got {}",
                self.max_refinements
            )));
        }
        Ok(())
    }
}

/// Smallest radius that keeps the truncated tails negligible for this sample.
pub fn safe_radius(params: &ModelParams, h: &FieldSample) -> f64 {
    let n = params.n_sites() as f64;
    sample_tail_radius(h, params.beta()).max((4.0 * TAIL_LOG_MARGIN / n).sqrt())
}

/// `exp(N G_N(y))` for one realization, tabulated on an adaptive grid.
#[derive(Debug, Clone)]
pub struct IntegralRepresentation {
    beta: f64,
    n_sites: usize,
    radius: f64,
    emp: EmpiricalField,
    fields: Vec<f64>,
    grid: AdaptiveGrid,
}

fn n_times_g_n(emp: &EmpiricalField, beta: f64, n: f64, y: f64) -> f64 {
    let sb = beta.sqrt();
    n * (-0.5 * y * y + emp.average(|h| log_cosh(sb * y + beta * h)))
}

impl IntegralRepresentation {
    pub fn new(params: &ModelParams, h: &FieldSample, quad: &QuadratureSpec) -> Result<Self> {
        check_sites(params, h)?;
        quad.validate()?;
        let beta = params.beta();
        let n = params.n_sites() as f64;
        let radius = quad.radius.max(safe_radius(params, h));
        let emp = h.empirical();
        // the peak has standard deviation >= 1/sqrt(N) since -G'' <= 1
        let panel_width = (2.0 / n.sqrt()).min(0.5);
        let initial = ((2.0 * radius) / panel_width).ceil() as usize;
        let log_f = |y: f64| n_times_g_n(&emp, beta, n, y);
        let grid = AdaptiveGrid::build(
            &log_f,
            -radius,
            radius,
            initial,
            quad.rel_tol,
            quad.max_refinements,
        )?;
        Ok(IntegralRepresentation {
            beta,
            n_sites: params.n_sites(),
            radius,
            emp,
            fields: h.values().to_vec(),
            grid,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grid(&self) -> &AdaptiveGrid {
        &self.grid
    }

    /// `log ∫ exp(N G_N(y)) dy` over `[-R, R]`.
    pub fn log_integral(&self) -> f64 {
        self.grid.log_integral()
    }

    pub fn log_partition(&self) -> f64 {
        let n = self.n_sites as f64;
        n * LN_2 + 0.5 * (n / (2.0 * PI)).ln() + self.grid.log_integral()
    }

    /// `mu_{N,k}` as the grid-weighted mixture of product tables.
    pub fn marginal(&self, k: usize) -> Result<MarginalTable> {
        if k == 0 || k > self.n_sites.min(MAX_WORD_LEN) {
            return Err(RfcwError::arg(format!(
                "k must be in 1..={}, got {k}",
                self.n_sites.min(MAX_WORD_LEN)
            )));
        }
        let sb = self.beta.sqrt();
        let prefix = &self.fields[..k];
        let log_total = self.grid.log_integral();
        let mut acc = vec![0.0; 1 << k];
        let mut mass = 0.0;
        let mut site = Vec::with_capacity(k);
        for (y, lw) in self.grid.nodes() {
            let w = (lw - log_total).exp();
            mass += w;
            if w < NEGLIGIBLE_WEIGHT {
                continue;
            }
            site.clear();
            site.extend(prefix.iter().map(|hi| {
                let a = sb * y + self.beta * hi;
                (up_probability(a), up_probability(-a))
            }));
            for (slot, p) in acc.iter_mut().zip(product_table(&site)) {
                *slot += w * p;
            }
        }
        let (table, total) = MarginalTable::from_unnormalized(k, acc)?;
        if (total - mass).abs() > RENORMALIZATION_TOL || (mass - 1.0).abs() > RENORMALIZATION_TOL {
            return Err(RfcwError::Numerical {
                message: format!(
                    "marginal renormalization by {total} exceeds tolerance (grid mass {mass})"
                ),
                lo: -self.radius,
                hi: self.radius,
            });
        }
        Ok(table)
    }

    /// Piecewise-linear tabulation of the density of `y`, refined until its
    /// total variation error is below `1e-6`.
    pub fn y_sampler(&self) -> Result<YSampler> {
        YSampler::build(self)
    }

    /// Draws full spin configurations; deterministic in `seed`.
    pub fn sample(&self, n_samples: usize, seed: u64) -> Result<Vec<Vec<i8>>> {
        if n_samples == 0 {
            return Err(RfcwError::arg("n_samples must be >= 1"));
        }
        let ys = self.y_sampler()?;
        let sb = self.beta.sqrt();
        let atoms: Vec<f64> = self.emp.atoms().iter().map(|a| a.0).collect();
        let site_atom: Vec<usize> = self
            .fields
            .iter()
            .map(|h| atoms.iter().position(|a| a == h).unwrap_or(0))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n_samples);
        let mut ups = vec![0.0; atoms.len()];
        for _ in 0..n_samples {
            let y = ys.draw(&mut rng);
            for (p, a) in ups.iter_mut().zip(&atoms) {
                *p = up_probability(sb * y + self.beta * a);
            }
            let config = site_atom
                .iter()
                .map(|&j| if rng.random::<f64>() < ups[j] { 1 } else { -1 })
                .collect();
            out.push(config);
        }
        Ok(out)
    }
}

/// Inverse-CDF sampler for a piecewise-linear density on a grid.
#[derive(Debug, Clone)]
pub struct YSampler {
    xs: Vec<f64>,
    ds: Vec<f64>,
    cum: Vec<f64>,
    tv_bound: f64,
}

impl YSampler {
    fn build(rep: &IntegralRepresentation) -> Result<Self> {
        let n = rep.n_sites as f64;
        let shift = rep
            .grid
            .panels()
            .iter()
            .flat_map(|p| p.nodes.iter())
            .map(|&(y, _)| n_times_g_n(&rep.emp, rep.beta, n, y))
            .fold(f64::NEG_INFINITY, f64::max);
        let density = |y: f64| (n_times_g_n(&rep.emp, rep.beta, n, y) - shift).exp();
        let mut xs: Vec<f64> = Vec::new();
        for p in rep.grid.panels() {
            for i in 0..8 {
                xs.push(p.a + (p.b - p.a) * i as f64 / 8.0);
            }
        }
        xs.push(rep.radius);
        let mut ds: Vec<f64> = xs.iter().map(|&x| density(x)).collect();
        loop {
            // deviation of the density from its chord at each cell midpoint
            let mids: Vec<(f64, f64)> = xs
                .windows(2)
                .map(|w| {
                    let m = 0.5 * (w[0] + w[1]);
                    (m, density(m))
                })
                .collect();
            let errs: Vec<f64> = (0..mids.len())
                .map(|i| {
                    let chord = 0.5 * (ds[i] + ds[i + 1]);
                    (2.0 / 3.0) * (xs[i + 1] - xs[i]) * (mids[i].1 - chord).abs()
                })
                .collect();
            let mass: f64 = (0..mids.len())
                .map(|i| 0.5 * (xs[i + 1] - xs[i]) * (ds[i] + ds[i + 1]))
                .sum();
            let err: f64 = errs.iter().sum();
            let tv_bound = 0.5 * err / mass;
            if tv_bound <= SAMPLER_TV_TOL {
                let mut cum = Vec::with_capacity(xs.len());
                cum.push(0.0);
                for i in 0..mids.len() {
                    let c = cum[i] + 0.5 * (xs[i + 1] - xs[i]) * (ds[i] + ds[i + 1]);
                    cum.push(c);
                }
                return Ok(YSampler {
                    xs,
                    ds,
                    cum,
                    tv_bound,
                });
            }
            if xs.len() > SAMPLER_MAX_CELLS {
                return Err(RfcwError::Numerical {
                    message: format!("sampler table did not reach TV bound (at {tv_bound:e})"),
                    lo: -rep.radius,
                    hi: rep.radius,
                });
            }
            let budget = 2.0 * SAMPLER_TV_TOL * mass / errs.len() as f64;
            let mut nx = Vec::with_capacity(xs.len() * 2);
            let mut nd = Vec::with_capacity(xs.len() * 2);
            for i in 0..mids.len() {
                nx.push(xs[i]);
                nd.push(ds[i]);
                if errs[i] > budget {
                    nx.push(mids[i].0);
                    nd.push(mids[i].1);
                }
            }
            nx.push(xs[xs.len() - 1]);
            nd.push(ds[ds.len() - 1]);
            xs = nx;
            ds = nd;
        }
    }

    /// Upper estimate of the total variation between the tabulated and the
    /// exact density of `y`.
    pub fn tv_bound(&self) -> f64 {
        self.tv_bound
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.cum[self.cum.len() - 1];
        let target = rng.random::<f64>() * total;
        let i = self
            .cum
            .partition_point(|&c| c <= target)
            .clamp(1, self.xs.len() - 1)
            - 1;
        let w = self.xs[i + 1] - self.xs[i];
        let (d0, d1) = (self.ds[i], self.ds[i + 1]);
        let r = target - self.cum[i];
        let slope = (d1 - d0) / w;
        // root of d0 t + slope t^2 / 2 = r, in cancellation-free form
        let disc = (d0 * d0 + 2.0 * slope * r).max(0.0);
        let denom = d0 + disc.sqrt();
        let t = if denom > 0.0 {
            2.0 * r / denom
        } else {
            0.5 * w
        };
        self.xs[i] + t.clamp(0.0, w)
    }
}

/// `log Z_N` through the integral representation.
pub fn log_partition(params: &ModelParams, h: &FieldSample, quad: &QuadratureSpec) -> Result<f64> {
    Ok(IntegralRepresentation::new(params, h, quad)?.log_partition())
}

/// `mu_{N,k}` for any `N`, without enumeration.
pub fn marginal_quadrature(
    params: &ModelParams,
    h: &FieldSample,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<MarginalTable> {
    IntegralRepresentation::new(params, h, quad)?.marginal(k)
}

/// Exact draws from `mu_N`: first `y` with density `∝ exp(N G_N(y))`, then
/// independent spins given `y`.
pub fn exact_sample(
    params: &ModelParams,
    h: &FieldSample,
    quad: &QuadratureSpec,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<i8>>> {
    IntegralRepresentation::new(params, h, quad)?.sample(n_samples, seed)
}

/// Index of the maximizer with the largest `Delta_N`, ties to the smallest index.
pub fn select_j_index(
    h: &FieldSample,
    spec: &FieldSpec,
    beta: f64,
    report: &LandscapeReport,
) -> Result<usize> {
    if report.maxima.is_empty() {
        return Err(RfcwError::arg("landscape report has no maxima"));
    }
    let emp = h.empirical();
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, m) in report.maxima.iter().enumerate() {
        let d = delta_n_with(&emp, spec, beta, m.location, 0)?;
        if d > best_val + J_TIE_TOL {
            best = j;
            best_val = d;
        }
    }
    Ok(best)
}

/// Product measure centred at maximizer `j` of the report.
pub fn predicted_product(
    beta: f64,
    report: &LandscapeReport,
    j: usize,
    h_prefix: &[f64],
) -> Result<MarginalTable> {
    let m = report.maxima.get(j).ok_or_else(|| {
        RfcwError::arg(format!(
            "maximum index {j} out of range for {} maxima",
            report.maxima.len()
        ))
    })?;
    product_marginal(beta, m.location, h_prefix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_field;
    use crate::landscape::{find_global_maxima, DEFAULT_TOL_DEG};
    use crate::model::{brute_force_marginal, tv_distance, EnergyTable};

    fn sample(v: &[f64]) -> FieldSample {
        FieldSample::from_values(v.to_vec()).unwrap()
    }

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec::new(5.0, 1e-5, 10).is_err());
        assert!(QuadratureSpec::new(5.0, 1e-10, 31).is_err());
        assert!(QuadratureSpec::new(-1.0, 1e-10, 10).is_err());
        assert!(QuadratureSpec::new(5.0, 1e-10, 30).is_ok());
    }

    #[test]
    fn log_partition_closed_forms() {
        let beta: f64 = 0.9;
        let lz = log_partition(&ModelParams::new(beta, 1).unwrap(), &sample(&[0.0]), &q()).unwrap();
        assert!((lz - (LN_2 + beta / 2.0)).abs() < 1e-11);
        let lz = log_partition(
            &ModelParams::new(beta, 2).unwrap(),
            &sample(&[0.0, 0.0]),
            &q(),
        )
        .unwrap();
        assert!((lz - (2.0 * beta.exp() + 2.0).ln()).abs() < 1e-10);
        let h = sample_field(&FieldSpec::dichotomous(0.7).unwrap(), 50, 3).unwrap();
        let lz = log_partition(&ModelParams::new(1e-12, 50).unwrap(), &h, &q()).unwrap();
        assert!((lz - 50.0 * LN_2).abs() < 1e-8);
    }

    #[test]
    fn single_site_marginal() {
        for &(beta, a) in &[(0.8, 0.25), (2.0, -1.0), (0.1, 3.0)] {
            let m =
                marginal_quadrature(&ModelParams::new(beta, 1).unwrap(), &sample(&[a]), 1, &q())
                    .unwrap();
            let want = (beta * a).exp() / (2.0 * (beta * a).cosh());
            assert!(
                (m.probs()[0] - want).abs() < 1e-12,
                "{} vs {want}",
                m.probs()[0]
            );
        }
    }

    #[test]
    fn high_temperature_is_uniform() {
        let h = sample_field(&FieldSpec::dichotomous(0.5).unwrap(), 100, 9).unwrap();
        let m = marginal_quadrature(&ModelParams::new(1e-12, 100).unwrap(), &h, 2, &q()).unwrap();
        for p in m.probs() {
            assert!((p - 0.25).abs() < 1e-8);
        }
    }

    #[test]
    fn matches_enumeration_n12() {
        let spec = FieldSpec::dichotomous(0.3).unwrap();
        let h = sample_field(&spec, 12, 5).unwrap();
        let params = ModelParams::new(1.2, 12).unwrap();
        let a = marginal_quadrature(&params, &h, 3, &q()).unwrap();
        let b = brute_force_marginal(&params, &h, 3).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-9);
        }
        let lz = log_partition(&params, &h, &q()).unwrap();
        assert!((lz - EnergyTable::new(&h).unwrap().log_partition(1.2)).abs() < 1e-10);
    }

    #[test]
    fn k_bounds() {
        let params = ModelParams::new(1.0, 3).unwrap();
        let h = sample(&[0.1, 0.2, 0.3]);
        assert!(marginal_quadrature(&params, &h, 0, &q()).is_err());
        assert!(marginal_quadrature(&params, &h, 4, &q()).is_err());
        let params = ModelParams::new(1.0, 2).unwrap();
        assert!(marginal_quadrature(&params, &h, 1, &q()).is_err());
    }

    #[test]
    fn doubling_radius_is_harmless() {
        let spec = FieldSpec::dichotomous(0.4).unwrap();
        for &n in &[1usize, 7, 300] {
            let h = sample_field(&spec, n, 11).unwrap();
            let params = ModelParams::new(1.4, n).unwrap();
            let r = safe_radius(&params, &h);
            let a = log_partition(&params, &h, &q()).unwrap();
            let wide = QuadratureSpec {
                radius: 2.0 * r,
                ..q()
            };
            let b = log_partition(&params, &h, &wide).unwrap();
            assert!((a - b).abs() <= 1e-10, "N={n}: {a} vs {b}");
        }
    }

    #[test]
    fn sampler_infinite_temperature() {
        let h = sample_field(&FieldSpec::dichotomous(0.5).unwrap(), 20, 1).unwrap();
        let params = ModelParams::new(1e-12, 20).unwrap();
        let draws = exact_sample(&params, &h, &q(), 4000, 3).unwrap();
        assert_eq!(draws.len(), 4000);
        assert!(draws.iter().all(|c| c.len() == 20));
        let mean = draws.iter().map(|c| f64::from(c[0])).sum::<f64>() / 4000.0;
        assert!(mean.abs() <= 4.0 / 4000f64.sqrt());
        assert_eq!(draws, exact_sample(&params, &h, &q(), 4000, 3).unwrap());
    }

    #[test]
    fn sampler_symmetric_paramagnet() {
        let h = sample(&[0.0; 30]);
        let params = ModelParams::new(0.5, 30).unwrap();
        let n = 5000;
        let draws = exact_sample(&params, &h, &q(), n, 8).unwrap();
        let mags: Vec<f64> = draws
            .iter()
            .map(|c| c.iter().map(|&s| f64::from(s)).sum::<f64>() / 30.0)
            .collect();
        let mean = mags.iter().sum::<f64>() / n as f64;
        let var = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() <= 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn sampler_table_meets_tv_bound() {
        let h = sample_field(&FieldSpec::dichotomous(0.25).unwrap(), 2000, 4).unwrap();
        let rep =
            IntegralRepresentation::new(&ModelParams::new(2.5, 2000).unwrap(), &h, &q()).unwrap();
        assert!(rep.y_sampler().unwrap().tv_bound() <= 1e-6);
    }

    #[test]
    fn j_index_rules() {
        let spec = FieldSpec::dichotomous(0.25).unwrap();
        let para = find_global_maxima(&spec, 0.8, DEFAULT_TOL_DEG).unwrap();
        let h = sample_field(&spec, 101, 2).unwrap();
        assert_eq!(select_j_index(&h, &spec, 0.8, &para).unwrap(), 0);

        let ferro = find_global_maxima(&spec, 2.5, DEFAULT_TOL_DEG).unwrap();
        assert_eq!(ferro.maxima.len(), 2);
        let balanced = sample(&[0.25, -0.25, 0.25, -0.25]);
        assert_eq!(select_j_index(&balanced, &spec, 2.5, &ferro).unwrap(), 0);
        let excess_up = sample(&[0.25, 0.25, -0.25, 0.25, -0.25]);
        let j = select_j_index(&excess_up, &spec, 2.5, &ferro).unwrap();
        assert!(ferro.maxima[j].location > 0.0);
        let j = select_j_index(&excess_up.negated(), &spec, 2.5, &ferro).unwrap();
        assert!(ferro.maxima[j].location < 0.0);

        let empty = LandscapeReport {
            maxima: vec![],
            tail_radius: 1.0,
            scan_tolerance: 1e-7,
        };
        assert!(select_j_index(&h, &spec, 0.8, &empty).is_err());
    }

    #[test]
    fn predicted_product_cases() {
        let spec = FieldSpec::dichotomous(0.25).unwrap();
        let para = find_global_maxima(&spec, 0.8, DEFAULT_TOL_DEG).unwrap();
        let hp = [0.25, -0.25];
        assert_eq!(
            predicted_product(0.8, &para, 0, &hp).unwrap(),
            product_marginal(0.8, para.maxima[0].location, &hp).unwrap()
        );
        assert!(predicted_product(0.8, &para, 1, &hp).is_err());

        let ferro = find_global_maxima(&spec, 2.5, DEFAULT_TOL_DEG).unwrap();
        let a = predicted_product(2.5, &ferro, 1, &hp).unwrap();
        let neg: Vec<f64> = hp.iter().map(|h| -h).collect();
        let b = predicted_product(2.5, &ferro, 0, &neg).unwrap();
        assert!(tv_distance(&a.spin_flipped(), &b).unwrap() < 1e-12);
        let up = predicted_product(2.5, &ferro, 1, &[0.25]).unwrap();
        assert!(up.probs()[0] > 0.5);
    }
}
