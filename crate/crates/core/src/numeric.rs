//! Small numerically careful helpers shared across modules.

use std::f64::consts::LN_2;

/// `log cosh x` without overflow for large `|x|`.
#[inline]
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `e^x / (2 cosh x)`, the probability of spin `+1` under local field `x`.
#[inline]
pub fn up_probability(x: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * x).exp())
}

/// `log sum exp` over a slice; `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Coefficients (in powers of `t = tanh x`) of `d^m/dx^m log cosh x`, m = 0..=max.
///
/// Order 0 is not polynomial and is left empty. Order 1 is `t`; each further
/// derivative uses `d/dx P(t) = P'(t) (1 - t^2)`.
pub fn log_cosh_derivative_polys(max_order: usize) -> Vec<Vec<f64>> {
    let mut polys = vec![Vec::new(), vec![0.0, 1.0]];
    for m in 2..=max_order {
        let prev = &polys[m - 1];
        // P'(t)
        let deriv: Vec<f64> = prev
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| i as f64 * c)
            .collect();
        let mut next = vec![0.0; deriv.len() + 2];
        for (i, c) in deriv.iter().enumerate() {
            next[i] += c;
            next[i + 2] -= c;
        }
        polys.push(next);
    }
    polys.truncate(max_order + 1);
    polys
}

#[inline]
pub fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Median of a non-empty slice (mean of the central pair for even length).
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolated quantile of a non-empty slice.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
