//! Adaptive composite Gauss-Legendre quadrature for integrands given by
//! their logarithm.
//!
//! Integrals of `exp(N G_N(y))` overflow for any interesting `N`, so every
//! panel stores log-values and panel sums are combined with log-sum-exp.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Result, RfcwError};
use crate::numeric::log_sum_exp;

/// Points per panel.
pub const PANEL_ORDER: usize = 15;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

pub fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
}

/// One Gauss-Legendre panel with the log-integrand at its nodes.
#[derive(Debug, Clone)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    /// `(y, log(w) + log f(y))` per node, `w` the scaled quadrature weight.
    pub nodes: Vec<(f64, f64)>,
    pub log_integral: f64,
}

impl Panel {
    fn new(log_f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Panel {
        let rule = panel_rule();
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes: Vec<(f64, f64)> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| {
                let y = mid + half * t;
                (y, (w * half).ln() + log_f(y))
            })
            .collect();
        let logs: Vec<f64> = nodes.iter().map(|n| n.1).collect();
        Panel {
            a,
            b,
            nodes,
            log_integral: log_sum_exp(&logs),
        }
    }
}

/// `log |e^x - e^y|`.
fn log_abs_diff(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (-(lo - hi).exp()).ln_1p()
}

struct Cell {
    left: Panel,
    right: Panel,
    log_err: f64,
}

impl Cell {
    fn new(log_f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Cell {
        let whole = Panel::new(log_f, a, b);
        let m = 0.5 * (a + b);
        let left = Panel::new(log_f, a, m);
        let right = Panel::new(log_f, m, b);
        let halves = log_sum_exp(&[left.log_integral, right.log_integral]);
        Cell {
            log_err: log_abs_diff(whole.log_integral, halves),
            left,
            right,
        }
    }
}

/// A converged partition of `[lo, hi]` into Gauss-Legendre panels.
#[derive(Debug, Clone)]
pub struct AdaptiveGrid {
    panels: Vec<Panel>,
    log_integral: f64,
    rel_error: f64,
}

impl AdaptiveGrid {
    /// Refines `initial_panels` equal panels on `[lo, hi]` until the summed
    /// panel-versus-halves discrepancy is at most `rel_tol` of the integral.
    pub fn build(
        log_f: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        initial_panels: usize,
        rel_tol: f64,
        max_refinements: usize,
    ) -> Result<Self> {
        if !(hi > lo) || initial_panels == 0 {
            return Err(RfcwError::arg("quadrature interval must be non-empty"));
        }
        let width = (hi - lo) / initial_panels as f64;
        let mut cells: Vec<Cell> = (0..initial_panels)
            .map(|i| {
                let a = lo + width * i as f64;
                let b = if i + 1 == initial_panels {
                    hi
                } else {
                    a + width
                };
                Cell::new(log_f, a, b)
            })
            .collect();
        let log_tol = rel_tol.ln();
        let mut round = 0;
        loop {
            let halves: Vec<f64> = cells
                .iter()
                .flat_map(|c| [c.left.log_integral, c.right.log_integral])
                .collect();
            let total = log_sum_exp(&halves);
            let errs: Vec<f64> = cells.iter().map(|c| c.log_err).collect();
            let total_err = log_sum_exp(&errs);
            if !total.is_finite() {
                return Err(RfcwError::Numerical {
                    message: format!("integral is not finite (log value {total})"),
                    lo,
                    hi,
                });
            }
            let rel_error = (total_err - total).exp();
            if total_err <= log_tol + total {
                let panels = cells.into_iter().flat_map(|c| [c.left, c.right]).collect();
                return Ok(AdaptiveGrid {
                    panels,
                    log_integral: total,
                    rel_error,
                });
            }
            if round == max_refinements {
                return Err(RfcwError::Quadrature {
                    achieved: rel_error,
                    requested: rel_tol,
                });
            }
            round += 1;
            let budget = log_tol + total - (cells.len() as f64).ln();
            let mut next = Vec::with_capacity(cells.len() + 16);
            for c in cells {
                if c.log_err > budget {
                    let (a, m, b) = (c.left.a, c.left.b, c.right.b);
                    next.push(Cell::new(log_f, a, m));
                    next.push(Cell::new(log_f, m, b));
                } else {
                    next.push(c);
                }
            }
            cells = next;
        }
    }

    pub fn log_integral(&self) -> f64 {
        self.log_integral
    }

    pub fn rel_error(&self) -> f64 {
        self.rel_error
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// Every quadrature node as `(y, log weighted integrand)`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.panels.iter().flat_map(|p| p.nodes.iter().copied())
    }

    /// `log` of the integral of `f * g` for `0 <= g`, given `log g`.
    pub fn log_integral_with(&self, log_g: impl Fn(f64) -> f64) -> f64 {
        let logs: Vec<f64> = self.nodes().map(|(y, lw)| lw + log_g(y)).collect();
        log_sum_exp(&logs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(PANEL_ORDER);
        let sum_w: f64 = rule.weights.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
        // exact through degree 29
        for deg in [2usize, 10, 28] {
            let q: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            let exact = 2.0 / (deg as f64 + 1.0);
            assert!((q - exact).abs() < 1e-14, "deg {deg}: {q} vs {exact}");
        }
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn small_rule_known_nodes() {
        let rule = GaussLegendre::new(2);
        let x = 1.0 / 3f64.sqrt();
        assert!((rule.nodes[1] - x).abs() < 1e-15);
        assert!((rule.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sharp_gaussian_peak() {
        let n = 1.0e6;
        let log_f = |y: f64| -0.5 * n * (y - 0.3) * (y - 0.3) + 5000.0;
        let grid = AdaptiveGrid::build(&log_f, -5.0, 5.0, 5000, 1e-13, 30).unwrap();
        let exact = 5000.0 + (2.0 * PI / n).sqrt().ln();
        assert!((grid.log_integral() - exact).abs() < 1e-12);
        assert!(grid.rel_error() <= 1e-13);
    }

    #[test]
    fn refinement_budget_is_enforced() {
        let log_f = |y: f64| -1e4 * y * y;
        let err = AdaptiveGrid::build(&log_f, -1.0, 1.0, 20, 1e-14, 0).unwrap_err();
        assert!(matches!(err, RfcwError::Quadrature { .. }));
    }

    #[test]
    fn weighted_integral() {
        let grid = AdaptiveGrid::build(&|_| 0.0, 0.0, 1.0, 1, 1e-14, 5).unwrap();
        let v = grid.log_integral_with(|y| (y * y).ln()).exp();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }
}
