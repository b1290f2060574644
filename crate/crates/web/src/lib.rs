//! Browser bindings: landscape curve, critical line and the finite-N marginal
//! versus its product-measure prediction. Results cross the boundary as flat
//! `f64` arrays or JSON strings.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use rfcw_core::landscape::DEFAULT_TOL_DEG;
use rfcw_core::phase::trace_critical_line;
use rfcw_core::*;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// `[y_0, G(y_0), y_1, G(y_1), ...]` on `points` evenly spaced nodes of `[-y_max, y_max]`.
pub fn landscape_points(h: f64, beta: f64, y_max: f64, points: usize) -> Result<Vec<f64>> {
    let spec = FieldSpec::dichotomous(h)?;
    if !(y_max > 0.0) || points < 2 {
        return Err(RfcwError::Argument("need y_max > 0 and points >= 2".into()));
    }
    Ok((0..points)
        .flat_map(|i| {
            let y = -y_max + 2.0 * y_max * i as f64 / (points - 1) as f64;
            [y, big_g(&spec, beta, y)]
        })
        .collect())
}

/// Maxima and regime as JSON.
pub fn landscape_summary(h: f64, beta: f64) -> Result<String> {
    let spec = FieldSpec::dichotomous(h)?;
    let report = find_global_maxima(&spec, beta, DEFAULT_TOL_DEG)?;
    let regime = classify_regime(beta, h)?;
    Ok(json!({ "maxima": report.maxima, "regime": regime }).to_string())
}

/// `[h_0, beta_0, order_0, ...]` with order 2 (second) or 1 (first).
pub fn phase_points(h_max: f64, steps: usize) -> Result<Vec<f64>> {
    Ok(trace_critical_line(h_max, steps)?
        .into_iter()
        .flat_map(|p| {
            let order = match p.order {
                phase::TransitionOrder::Second => 2.0,
                phase::TransitionOrder::First => 1.0,
            };
            [p.h_field, p.beta_crit, order]
        })
        .collect())
}

/// Exact `mu_{N,k}` for one field realization next to the predicted product measure.
pub fn marginal_report(h: f64, beta: f64, n: usize, k: usize, seed: u64) -> Result<String> {
    let spec = FieldSpec::dichotomous(h)?;
    let params = ModelParams::new(beta, n)?;
    let field = sample_field(&spec, n, seed)?;
    let mu = marginal_quadrature(&params, &field, k, &QuadratureSpec::default())?;
    let report = find_global_maxima(&spec, beta, DEFAULT_TOL_DEG)?;
    let j = select_j_index(&field, &spec, beta, &report)?;
    let rho = predicted_product(beta, &report, j, field.prefix(k))?;
    Ok(json!({
        "words": mu.words().map(|(w, _)| w.to_string()).collect::<Vec<_>>(),
        "mu": mu.probs(),
        "rho": rho.probs(),
        "kl": kl_divergence(&mu, &rho)?,
        "tv": tv_distance(&mu, &rho)?,
        "j_index": j,
        "y_j": report.maxima[j].location,
        "fields": field.prefix(k),
    })
    .to_string())
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn landscape_curve(
    h: f64,
    beta: f64,
    y_max: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(landscape_points(h, beta, y_max, points))
}

#[wasm_bindgen]
pub fn landscape_maxima(h: f64, beta: f64) -> std::result::Result<String, JsError> {
    js(landscape_summary(h, beta))
}

#[wasm_bindgen]
pub fn phase_line(h_max: f64, steps: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(phase_points(h_max, steps))
}

#[wasm_bindgen]
pub fn marginal_comparison(
    h: f64,
    beta: f64,
    n: usize,
    k: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    js(marginal_report(h, beta, n, k, seed as u64))
}
