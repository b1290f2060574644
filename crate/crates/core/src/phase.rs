//! Phase diagram of the model with dichotomous fields `h_i = ±h`.
//!
//! The critical line `beta = f(h)` has a second-order segment, where the
//! curvature of `G` at the origin vanishes, and a first-order segment, where
//! a symmetric pair of maxima ties with the origin. They meet at the
//! tricritical point `h* = (2/3) arcosh(sqrt(3/2))`, `beta* = 3/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfcwError};
use crate::field::FieldSpec;
use crate::landscape::{
    big_g, classify_maximum, find_global_maxima, max_on_interval, tail_radius, DEFAULT_TOL_DEG,
};

/// Fields at or above this strength never order.
pub const FIELD_CEILING: f64 = 0.5;
/// Window around the origin excluded when searching for the competing maxima.
pub const ORIGIN_EXCLUSION: f64 = 1e-4;
/// Distance from the critical line within which a point counts as on it.
pub const ON_LINE_TOL: f64 = 1e-9;

const SECOND_ORDER_BRACKET: (f64, f64) = (1.0, 10.0);
const FIRST_ORDER_BETA_MAX: f64 = 200.0;
const BISECTION_WIDTH: f64 = 1e-13;

/// `h* = (2/3) arcosh(sqrt(3/2))`.
pub fn tricritical_field() -> f64 {
    (2.0 / 3.0) * 1.5f64.sqrt().acosh()
}

/// Where the critical line changes from second to first order.
pub fn tricritical_point() -> (f64, f64) {
    let h = tricritical_field();
    let beta = second_order_beta(h).expect("tricritical field lies on the second-order segment");
    (h, beta)
}

fn bisect(mut lo: f64, mut hi: f64, mut positive: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if positive(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest `beta` with `beta sech^2(beta h) = 1`, i.e. `G''(0) = 0`.
pub fn second_order_beta(h_field: f64) -> Result<f64> {
    if !(h_field >= 0.0) || h_field > tricritical_field() + 1e-12 {
        return Err(RfcwError::Domain(format!(
            "second-order segment needs 0 <= h <= h* = {:.9}, got {h_field}",
            tricritical_field()
        )));
    }
    let excess = |beta: f64| {
        let c = (beta * h_field).cosh();
        beta / (c * c) - 1.0
    };
    let (lo, mut hi) = SECOND_ORDER_BRACKET;
    if excess(lo) >= 0.0 {
        return Ok(lo);
    }
    // beta sech^2(beta h) peaks where 2 u tanh u = 1, u = beta h
    if h_field > 0.0 {
        let u = bisect(0.0, 2.0, |u| Ok(2.0 * u * u.tanh() >= 1.0))?;
        hi = hi.min(u / h_field);
    }
    if excess(hi) < 0.0 {
        return Err(RfcwError::Domain(format!(
            "no second-order root in [{lo}, {hi}] for h = {h_field}"
        )));
    }
    bisect(lo, hi, |b| Ok(excess(b) >= 0.0))
}

/// `max_{y >= delta} G(y) - G(0)`.
fn tie_gap(spec: &FieldSpec, beta: f64) -> Result<f64> {
    let r = tail_radius(spec, beta);
    let (_, best) = max_on_interval(spec, beta, ORIGIN_EXCLUSION, r)?;
    Ok(best - big_g(spec, beta, 0.0))
}

/// `beta` at which the symmetric pair of maxima ties with the origin.
pub fn first_order_beta(h_field: f64) -> Result<f64> {
    let h_star = tricritical_field();
    if !(h_field > h_star && h_field < FIELD_CEILING) {
        return Err(RfcwError::Domain(format!(
            "first-order segment needs h* < h < 1/2, got {h_field}"
        )));
    }
    let spec = FieldSpec::dichotomous(h_field)?;
    let lo = second_order_beta(h_star)?;
    let hi = FIRST_ORDER_BETA_MAX;
    if tie_gap(&spec, lo)? >= 0.0 || tie_gap(&spec, hi)? < 0.0 {
        return Err(RfcwError::Domain(format!(
            "tie condition not bracketed by [{lo}, {hi}] for h = {h_field}"
        )));
    }
    bisect(lo, hi, |b| Ok(tie_gap(&spec, b)? >= 0.0))
}

/// `f(h)` on either segment.
pub fn critical_beta(h_field: f64) -> Result<f64> {
    if h_field <= tricritical_field() {
        second_order_beta(h_field)
    } else {
        first_order_beta(h_field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionOrder {
    Second,
    First,
}

impl TransitionOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransitionOrder::Second => "second",
            TransitionOrder::First => "first",
        }
    }
}

/// A point `(h, f(h))` of the critical line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub h_field: f64,
    pub beta_crit: f64,
    pub order: TransitionOrder,
}

/// `f` on the grid `h_max * i / steps`, `i = 0..=steps`.
pub fn trace_critical_line(h_max: f64, steps: usize) -> Result<Vec<CriticalPoint>> {
    if !(0.0..FIELD_CEILING).contains(&h_max) {
        return Err(RfcwError::arg(format!(
            "h_max must be in [0, 1/2), got {h_max}"
        )));
    }
    if steps == 0 {
        return Err(RfcwError::arg("steps must be >= 1"));
    }
    let h_star = tricritical_field();
    let point = |i: usize| -> Result<CriticalPoint> {
        let h = h_max * i as f64 / steps as f64;
        let order = if h <= h_star {
            TransitionOrder::Second
        } else {
            TransitionOrder::First
        };
        Ok(CriticalPoint {
            h_field: h,
            beta_crit: critical_beta(h)?,
            order,
        })
    };
    crate::experiments::ordered_map((0..=steps).collect(), point)
        .into_iter()
        .collect()
}

/// The enumerated regimes of the dichotomous model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeCase {
    /// `beta < f(h)`: unique non-degenerate maximum at the origin.
    ParaUnique,
    /// `beta = f(h)`, `h <= h*`: unique maximum at the origin, 2- or 3-degenerate.
    SecondOrderCritical,
    /// `beta = f(h)`, `h > h*`: three non-degenerate maxima.
    FirstOrderTriple,
    /// `beta > f(h)`: two symmetric non-degenerate maxima.
    FerroPair,
    /// `h >= 1/2`: unique maximum at the origin for every `beta`.
    HighFieldUnique,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub case: RegimeCase,
    /// Largest degeneracy order among the global maxima.
    pub degeneracy_n: usize,
    pub n_maxima: usize,
}

/// Regime of `(beta, h)`; points within [`ON_LINE_TOL`] of the critical line
/// are classified on the line itself.
pub fn classify_regime(beta: f64, h_field: f64) -> Result<RegimeLabel> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(RfcwError::arg(format!(
            "beta must be finite and > 0, got {beta}"
        )));
    }
    if !(h_field >= 0.0) || !h_field.is_finite() {
        return Err(RfcwError::arg(format!(
            "h must be finite and >= 0, got {h_field}"
        )));
    }
    let spec = FieldSpec::dichotomous(h_field)?;
    let label = |case, at_beta: f64| -> Result<RegimeLabel> {
        let report = find_global_maxima(&spec, at_beta, DEFAULT_TOL_DEG)?;
        Ok(RegimeLabel {
            case,
            degeneracy_n: report
                .maxima
                .iter()
                .map(|m| m.degeneracy_n)
                .max()
                .unwrap_or(1),
            n_maxima: report.n_maxima(),
        })
    };
    if h_field >= FIELD_CEILING {
        return label(RegimeCase::HighFieldUnique, beta);
    }
    let f = critical_beta(h_field)?;
    if (beta - f).abs() <= ON_LINE_TOL {
        return if h_field <= tricritical_field() {
            let deg = classify_maximum(&spec, f, 0.0, DEFAULT_TOL_DEG)?;
            Ok(RegimeLabel {
                case: RegimeCase::SecondOrderCritical,
                degeneracy_n: deg.n,
                n_maxima: 1,
            })
        } else {
            label(RegimeCase::FirstOrderTriple, f)
        };
    }
    if beta < f {
        label(RegimeCase::ParaUnique, beta)
    } else {
        label(RegimeCase::FerroPair, beta)
    }
}
