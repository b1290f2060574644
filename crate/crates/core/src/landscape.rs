//! The free-energy surrogate `G(y) = -y^2/2 + E_h log cosh(sqrt(beta) y + beta h)`,
//! its empirical counterpart `G_N`, their derivatives, and the global maxima
//! of `G`.

use std::f64::consts::LN_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfcwError};
use crate::field::{EmpiricalField, FieldSample, FieldSpec};
use crate::numeric::{eval_poly, log_cosh, log_cosh_derivative_polys};

/// Highest derivative order available from [`big_g_deriv`].
pub const MAX_DERIV_ORDER: usize = 8;
/// Highest degeneracy order [`classify_maximum`] searches.
pub const MAX_DEGENERACY: usize = 4;
/// Default derivative tolerance for degeneracy classification.
pub const DEFAULT_TOL_DEG: f64 = 1e-7;

const NEWTON_GRAD_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;
const DEDUP_TOL: f64 = 1e-8;
const TIE_TOL: f64 = 1e-10;
const CRITICAL_POINT_TOL: f64 = 1e-10;

fn polys() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| log_cosh_derivative_polys(MAX_DERIV_ORDER))
}

/// A probability law on field values, averaged exactly.
pub trait FieldMeasure {
    fn average(&self, f: &mut dyn FnMut(f64) -> f64) -> f64;
}

impl FieldMeasure for FieldSpec {
    fn average(&self, f: &mut dyn FnMut(f64) -> f64) -> f64 {
        self.expect(f)
    }
}

impl FieldMeasure for EmpiricalField {
    fn average(&self, f: &mut dyn FnMut(f64) -> f64) -> f64 {
        EmpiricalField::average(self, f)
    }
}

/// `-y^2/2 + E log cosh(sqrt(beta) y + beta h)` under `law`.
pub fn surrogate<M: FieldMeasure + ?Sized>(law: &M, beta: f64, y: f64) -> f64 {
    let sb = beta.sqrt();
    -0.5 * y * y + law.average(&mut |h| log_cosh(sb * y + beta * h))
}

/// Derivative of order `0..=MAX_DERIV_ORDER` of [`surrogate`] in `y`.
pub fn surrogate_deriv<M: FieldMeasure + ?Sized>(
    law: &M,
    beta: f64,
    y: f64,
    order: usize,
) -> Result<f64> {
    if order > MAX_DERIV_ORDER {
        return Err(RfcwError::arg(format!(
            "derivative order must be <= {MAX_DERIV_ORDER}, got {order}"
        )));
    }
    let sb = beta.sqrt();
    let value = match order {
        0 => surrogate(law, beta, y),
        1 => -y + sb * law.average(&mut |h| (sb * y + beta * h).tanh()),
        2 => {
            -1.0 + beta
                * law.average(&mut |h| {
                    let c = (sb * y + beta * h).cosh();
                    1.0 / (c * c)
                })
        }
        m => {
            let poly = &polys()[m];
            sb.powi(m as i32) * law.average(&mut |h| eval_poly(poly, (sb * y + beta * h).tanh()))
        }
    };
    Ok(value)
}

/// `G(y)` for the field law `spec`.
pub fn big_g(spec: &FieldSpec, beta: f64, y: f64) -> f64 {
    surrogate(spec, beta, y)
}

/// `d^order G / dy^order` for `order` in `1..=8`.
pub fn big_g_deriv(spec: &FieldSpec, beta: f64, y: f64, order: usize) -> Result<f64> {
    if order == 0 {
        return Err(RfcwError::arg("derivative order must be >= 1"));
    }
    surrogate_deriv(spec, beta, y, order)
}

/// `G_N(y)` for one field realization.
pub fn empirical_g(h: &FieldSample, beta: f64, y: f64) -> f64 {
    surrogate(&h.empirical(), beta, y)
}

/// `order`-th derivative (0, 1 or 2) of `Delta_N = G_N - G`.
pub fn delta_n(h: &FieldSample, spec: &FieldSpec, beta: f64, y: f64, order: usize) -> Result<f64> {
    delta_n_with(&h.empirical(), spec, beta, y, order)
}

pub(crate) fn delta_n_with(
    emp: &EmpiricalField,
    spec: &FieldSpec,
    beta: f64,
    y: f64,
    order: usize,
) -> Result<f64> {
    if order > 2 {
        return Err(RfcwError::arg(format!(
            "Delta_N order must be <= 2, got {order}"
        )));
    }
    // the -y^2/2 parts cancel; keep only the log cosh averages
    let sb = beta.sqrt();
    let term = |law: &dyn FieldMeasure| -> f64 {
        match order {
            0 => law.average(&mut |h| log_cosh(sb * y + beta * h)),
            1 => sb * law.average(&mut |h| (sb * y + beta * h).tanh()),
            _ => {
                beta * law.average(&mut |h| {
                    let c = (sb * y + beta * h).cosh();
                    1.0 / (c * c)
                })
            }
        }
    };
    Ok(term(emp) - term(spec))
}

/// Radius beyond which `-y^2/2 + log 2 + sqrt(beta)|y| + beta m1 <= -y^2/4`,
/// where `m1` bounds the mean absolute field.
pub fn tail_radius_for(beta: f64, mean_abs_field: f64) -> f64 {
    let sb = beta.sqrt();
    1.0 + 2.0 * sb + 2.0 * (beta + LN_2 + beta * mean_abs_field).sqrt()
}

/// Tail radius of `G` for the law `spec`.
pub fn tail_radius(spec: &FieldSpec, beta: f64) -> f64 {
    tail_radius_for(beta, spec.mean_abs())
}

/// Tail radius of `G_N` for a field realization.
pub fn sample_tail_radius(h: &FieldSample, beta: f64) -> f64 {
    tail_radius_for(beta, h.mean_abs())
}

/// Degeneracy of a critical point: `G^{(l)} = 0` for `1 <= l < 2n` and
/// `G^{(2n)} < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degeneracy {
    pub n: usize,
    pub leading_derivative: f64,
}

/// One global maximum of `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximumRecord {
    pub location: f64,
    pub value: f64,
    pub degeneracy_n: usize,
    pub leading_derivative: f64,
    /// `-G''` at the maximum.
    pub curvature_eta: f64,
}

/// All global maxima of `G`, sorted by location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub maxima: Vec<MaximumRecord>,
    pub tail_radius: f64,
    pub scan_tolerance: f64,
}

impl LandscapeReport {
    pub fn n_maxima(&self) -> usize {
        self.maxima.len()
    }

    pub fn is_unique(&self) -> bool {
        self.maxima.len() == 1
    }

    pub fn locations(&self) -> Vec<f64> {
        self.maxima.iter().map(|m| m.location).collect()
    }

    /// Index of the maximum at `-location` of maximum `j`, if present.
    pub fn mirror_index(&self, j: usize) -> Option<usize> {
        let target = -self.maxima.get(j)?.location;
        self.maxima
            .iter()
            .position(|m| (m.location - target).abs() <= 1e-8)
    }
}

/// Smallest `n <= 4` making `y0` an `n`-degenerate maximum of `G`.
pub fn classify_maximum(spec: &FieldSpec, beta: f64, y0: f64, tol_deg: f64) -> Result<Degeneracy> {
    classify_with(spec, beta, y0, tol_deg)
}

fn classify_with<M: FieldMeasure + ?Sized>(
    law: &M,
    beta: f64,
    y0: f64,
    tol_deg: f64,
) -> Result<Degeneracy> {
    let g1 = surrogate_deriv(law, beta, y0, 1)?;
    if g1.abs() > CRITICAL_POINT_TOL {
        return Err(RfcwError::arg(format!(
            "y0 = {y0} is not a critical point: G'(y0) = {g1:e}"
        )));
    }
    let fail = || RfcwError::Classification {
        location: y0,
        max_order: MAX_DEGENERACY,
    };
    for n in 1..=MAX_DEGENERACY {
        // orders 2n-2 and 2n-1 are the ones not yet checked
        if n >= 2 {
            for l in [2 * n - 2, 2 * n - 1] {
                if surrogate_deriv(law, beta, y0, l)?.abs() > tol_deg {
                    return Err(fail());
                }
            }
        }
        let lead = surrogate_deriv(law, beta, y0, 2 * n)?;
        if lead < -tol_deg {
            return Ok(Degeneracy {
                n,
                leading_derivative: lead,
            });
        }
        if lead > tol_deg {
            return Err(fail());
        }
    }
    Err(fail())
}

/// Refines a maximum of a smooth function inside `[lo, hi]` where the first
/// derivative changes sign from `>= 0` to `< 0`.
///
/// Safeguarded Newton: a Newton step is taken only when it lands inside the
/// current bracket and the bracket halved over the previous two steps.
pub(crate) fn refine_critical_point(
    d1: &dyn Fn(f64) -> f64,
    d2: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    if d1(a) == 0.0 {
        return Ok(a);
    }
    let mut x = 0.5 * (a + b);
    let mut widths = [b - a; 2];
    for _ in 0..NEWTON_MAX_ITER {
        let g = d1(x);
        if g == 0.0 {
            return Ok(snap_to_zero(d1, lo, hi, x));
        }
        if g > 0.0 {
            a = x;
        } else {
            b = x;
        }
        let scale = x.abs().max(1.0);
        let curv = d2(x);
        let newton_step = if curv < 0.0 { -g / curv } else { f64::NAN };
        if g.abs() <= NEWTON_GRAD_TOL {
            let converged_newton = curv < -1e-6 && newton_step.abs() <= 1e-14 * scale;
            if converged_newton || b - a <= 1e-12 * scale {
                return Ok(snap_to_zero(d1, lo, hi, x));
            }
        }
        if b - a <= 4.0 * f64::EPSILON * scale {
            break;
        }
        let stalled = b - a > 0.5 * widths[0];
        widths = [widths[1], b - a];
        let candidate = x + newton_step;
        x = if !stalled && candidate.is_finite() && candidate > a && candidate < b {
            candidate
        } else {
            0.5 * (a + b)
        };
    }
    let g = d1(x);
    if g.abs() <= NEWTON_GRAD_TOL {
        return Ok(snap_to_zero(d1, lo, hi, x));
    }
    Err(RfcwError::Numerical {
        message: format!("critical-point refinement stalled with G' = {g:e}"),
        lo,
        hi,
    })
}

// Rounding limits how close a degenerate maximum can be located; prefer
// y = 0 when it is inside the bracket and at least as critical.
fn snap_to_zero(d1: &dyn Fn(f64) -> f64, lo: f64, hi: f64, x: f64) -> f64 {
    if lo <= 0.0 && 0.0 <= hi && d1(0.0).abs() <= d1(x).abs() {
        0.0
    } else {
        x
    }
}

/// All local maxima of `law`'s surrogate on `[lo, hi]`, refined.
pub(crate) fn local_maxima<M: FieldMeasure + ?Sized>(
    law: &M,
    beta: f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<Vec<f64>> {
    let d1 = |y: f64| surrogate_deriv(law, beta, y, 1).unwrap_or(f64::NAN);
    let d2 = |y: f64| surrogate_deriv(law, beta, y, 2).unwrap_or(f64::NAN);
    let steps = ((hi - lo) / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let slopes: Vec<f64> = grid.iter().map(|&y| d1(y)).collect();
    let mut out: Vec<f64> = Vec::new();
    for i in 0..steps {
        if slopes[i] >= 0.0 && slopes[i + 1] < 0.0 {
            let y = refine_critical_point(&d1, &d2, grid[i], grid[i + 1])?;
            if out.last().is_none_or(|&last| (y - last).abs() > DEDUP_TOL) {
                out.push(y);
            }
        }
    }
    Ok(out)
}

/// Scan step used on `[-R, R]`.
pub fn scan_step(radius: f64) -> f64 {
    (1e-3 * radius).min(1e-2)
}

/// Locates and classifies every global maximum of `G`.
///
/// `tol` is the derivative tolerance handed to [`classify_maximum`].
pub fn find_global_maxima(spec: &FieldSpec, beta: f64, tol: f64) -> Result<LandscapeReport> {
    if !(tol > 0.0) {
        return Err(RfcwError::arg(format!("tolerance must be > 0, got {tol}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(RfcwError::arg(format!(
            "beta must be finite and > 0, got {beta}"
        )));
    }
    let radius = tail_radius(spec, beta);
    let candidates = local_maxima(spec, beta, -radius, radius, scan_step(radius))?;
    if candidates.is_empty() {
        return Err(RfcwError::Numerical {
            message: "no maximum found in scan".into(),
            lo: -radius,
            hi: radius,
        });
    }
    let values: Vec<f64> = candidates.iter().map(|&y| big_g(spec, beta, y)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut maxima = Vec::new();
    for (&y, &v) in candidates.iter().zip(&values) {
        if v < best - TIE_TOL {
            continue;
        }
        let deg = classify_maximum(spec, beta, y, tol)?;
        maxima.push(MaximumRecord {
            location: y,
            value: v,
            degeneracy_n: deg.n,
            leading_derivative: deg.leading_derivative,
            curvature_eta: -big_g_deriv(spec, beta, y, 2)?,
        });
    }
    Ok(LandscapeReport {
        maxima,
        tail_radius: radius,
        scan_tolerance: tol,
    })
}

/// Largest value of `G` on `[lo, hi]`, including the endpoints.
pub fn max_on_interval(spec: &FieldSpec, beta: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let step = scan_step(hi.abs().max(lo.abs()).max(1.0));
    let mut best = (lo, big_g(spec, beta, lo));
    let end = (hi, big_g(spec, beta, hi));
    if end.1 > best.1 {
        best = end;
    }
    for y in local_maxima(spec, beta, lo, hi, step)? {
        let v = big_g(spec, beta, y);
        if v > best.1 {
            best = (y, v);
        }
    }
    Ok(best)
}
