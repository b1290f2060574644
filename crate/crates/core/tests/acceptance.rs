//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfcw_core::experiments::{
    chaos_convergence_scan, clt_diagnostic, j_index_statistics, ExperimentConfig, KRule,
};
use rfcw_core::landscape::DEFAULT_TOL_DEG;
use rfcw_core::*;

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Result<Outcome>;

fn config(h: f64, beta: f64, n_grid: Vec<usize>, k: usize, replicas: usize) -> ExperimentConfig {
    ExperimentConfig {
        spec: FieldSpec::dichotomous(h).unwrap(),
        beta,
        n_grid,
        k: KRule::Fixed(k),
        replicas,
        base_seed: SEED,
        quad: QuadratureSpec::default(),
        output_path: None,
    }
}

fn oracle_equivalence() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let beta = rng.random_range(0.2..=3.0);
        let h = rng.random_range(0.0..=1.0);
        let n = rng.random_range(1..=14usize);
        let k = rng.random_range(1..=n.min(3));
        let field = sample_field(&FieldSpec::dichotomous(h)?, n, SEED + case)?;
        let params = ModelParams::new(beta, n)?;
        let exact = brute_force_marginal(&params, &field, k)?;
        let quadrature = marginal_quadrature(&params, &field, k, &quad)?;
        worst = worst.max(tv_distance(&exact, &quadrature)?);
    }
    Ok(outcome(
        worst <= 1e-9,
        format!("max TV = {worst:.3e} (limit 1e-9)"),
    ))
}

fn closed_forms() -> Result<Outcome> {
    let quad = QuadratureSpec::default();
    let mut worst_single: f64 = 0.0;
    for &(beta, a) in &[
        (0.3, 0.7),
        (1.0, -0.25),
        (2.5, 0.25),
        (3.0, 1.0),
        (0.8, 0.0),
    ] {
        let field = FieldSample::from_values(vec![a])?;
        let mu = marginal_quadrature(&ModelParams::new(beta, 1)?, &field, 1, &quad)?;
        let expected = (beta * a).exp() / (2.0 * (beta * a).cosh());
        worst_single = worst_single.max((mu.probs()[0] - expected).abs());
    }
    let mut worst_z: f64 = 0.0;
    for &beta in &[0.2, 1.0, 2.0, 3.0] {
        let field = FieldSample::from_values(vec![0.0, 0.0])?;
        let got = log_partition(&ModelParams::new(beta, 2)?, &field, &quad)?;
        let expected = (2.0 * beta.exp() + 2.0).ln();
        worst_z = worst_z.max((got - expected).abs());
    }
    Ok(outcome(
        worst_single <= 1e-12 && worst_z <= 1e-10,
        format!("single-spin err = {worst_single:.2e}, log Z err = {worst_z:.2e}"),
    ))
}

fn phase_anchors() -> Result<Outcome> {
    let f0 = second_order_beta(0.0)?;
    let (h_star, beta_star) = tricritical_point();
    let expected_h = (2.0 / 3.0) * 1.5f64.sqrt().acosh();
    let spec = FieldSpec::dichotomous(h_star)?;
    let g2 = big_g_deriv(&spec, beta_star, 0.0, 2)?;
    let g4 = big_g_deriv(&spec, beta_star, 0.0, 4)?;
    let g6 = big_g_deriv(&spec, beta_star, 0.0, 6)?;
    let pass = (f0 - 1.0).abs() <= 1e-9
        && (h_star - expected_h).abs() <= 1e-6
        && (h_star - 0.4389850).abs() <= 1e-6
        && (beta_star - 1.5).abs() <= 1e-9
        && g2.abs() <= 1e-8
        && g4.abs() <= 1e-8
        && g6 < 0.0;
    Ok(outcome(
        pass,
        format!(
            "f(0) = {f0:.12}, h* = {h_star:.9}, beta* = {beta_star:.12}, G'' = {g2:.1e}, G'''' = {g4:.1e}, G^(6) = {g6:.4}"
        ),
    ))
}

fn degeneracy() -> Result<Outcome> {
    let d = classify_maximum(&FieldSpec::dichotomous(0.0)?, 1.0, 0.0, DEFAULT_TOL_DEG)?;
    Ok(outcome(
        d.n == 2 && (d.leading_derivative + 2.0).abs() <= 1e-8,
        format!("n = {}, G'''' = {:.12}", d.n, d.leading_derivative),
    ))
}

fn kl_endpoints(rows: &[experiments::ConvergenceRow]) -> (f64, f64) {
    let kl_at = |n| rows.iter().find(|r| r.n == n).map(|r| r.kl).unwrap();
    (kl_at(250), kl_at(4000))
}

fn unique_nondegenerate_chaos() -> Result<Outcome> {
    let start = Instant::now();
    let rows = chaos_convergence_scan(&config(0.25, 0.8, vec![250, 1000, 4000], 3, 1))?;
    let elapsed = start.elapsed();
    let (kl_lo, kl_hi) = kl_endpoints(&rows);
    let kls: Vec<String> = rows
        .iter()
        .map(|r| format!("{}:{:.3e}", r.n, r.kl))
        .collect();
    Ok(outcome(
        kl_hi < kl_lo && kl_hi <= 5e-3 && elapsed <= Duration::from_secs(120),
        format!("KL by N = [{}], {:.2?}", kls.join(", "), elapsed),
    ))
}

fn unique_degenerate_chaos() -> Result<Outcome> {
    let rows = chaos_convergence_scan(&config(0.0, 1.0, vec![250, 1000, 4000], 2, 1))?;
    let (kl_lo, kl_hi) = kl_endpoints(&rows);
    let kls: Vec<String> = rows
        .iter()
        .map(|r| format!("{}:{:.3e}", r.n, r.kl))
        .collect();
    Ok(outcome(
        kl_hi < kl_lo,
        format!("KL by N = [{}]", kls.join(", ")),
    ))
}

fn random_pure_state_selection() -> Result<Outcome> {
    let start = Instant::now();
    let stats = j_index_statistics(&config(0.25, 2.5, vec![4000], 2, 100))?;
    let elapsed = start.elapsed();
    let median = stats.median_tv();
    let fractions = stats.frequency_fractions();
    let separated = stats.tv_other.iter().filter(|&&t| t > 0.1).count();
    let pass = median <= 0.05
        && fractions.iter().all(|f| (0.4..=0.6).contains(f))
        && separated >= 90
        && elapsed <= Duration::from_secs(600);
    Ok(outcome(
        pass,
        format!(
            "median TV = {median:.3e}, J frequencies = {fractions:?}, opposite TV > 0.1 in {separated}/100, {elapsed:.2?}"
        ),
    ))
}

fn sampler() -> Result<Outcome> {
    let n = 200;
    let samples = 100_000;
    let params = ModelParams::new(0.8, n)?;
    let field = sample_field(&FieldSpec::dichotomous(0.25)?, n, SEED)?;
    let quad = QuadratureSpec::default();
    let mu = marginal_quadrature(&params, &field, 5, &quad)?;
    let draws = exact_sample(&params, &field, &quad, samples, SEED)?;
    let mut worst_ratio: f64 = 0.0;
    for site in 0..5 {
        let p = mu.site_up_probability(site);
        let ups = draws.iter().filter(|s| s[site] == 1).count();
        let freq = ups as f64 / samples as f64;
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        worst_ratio = worst_ratio.max((freq - p).abs() / se);
    }
    Ok(outcome(
        worst_ratio <= 4.0,
        format!("max |freq - p| = {worst_ratio:.2} standard errors (limit 4)"),
    ))
}

fn clt() -> Result<Outcome> {
    let spec = FieldSpec::dichotomous(0.25)?;
    let beta = 2.5;
    let y0 = find_global_maxima(&spec, beta, DEFAULT_TOL_DEG)?
        .locations()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let r = clt_diagnostic(&spec, beta, y0, 2000, 2000, SEED)?;
    let rel = (r.variance - r.target_variance).abs() / r.target_variance;
    Ok(outcome(
        rel <= 0.10,
        format!(
            "y0 = {y0:.6}, variance = {:.5}, exact = {:.5}, relative error = {:.2}%",
            r.variance,
            r.target_variance,
            100.0 * rel
        ),
    ))
}

fn invariants() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x10);
    let quad = QuadratureSpec::default();
    let mut failures = Vec::new();
    for case in 0..200u64 {
        let beta = rng.random_range(0.2..=3.0);
        let h = rng.random_range(0.0..=1.0);
        let n = rng.random_range(2..=12usize);
        let k = rng.random_range(2..=n.min(4));
        let spec = FieldSpec::dichotomous(h)?;
        let field = sample_field(&spec, n, SEED + case)?;
        let params = ModelParams::new(beta, n)?;
        let mu = marginal_quadrature(&params, &field, k, &quad)?;
        let report = find_global_maxima(&spec, beta, DEFAULT_TOL_DEG)?;
        let j = select_j_index(&field, &spec, beta, &report)?;
        let rho = predicted_product(beta, &report, j, field.prefix(k))?;

        let norm = (mu.probs().iter().sum::<f64>() - 1.0)
            .abs()
            .max((rho.probs().iter().sum::<f64>() - 1.0).abs());
        if norm > 1e-12 {
            failures.push(format!("case {case}: normalization off by {norm:.1e}"));
        }

        let kl = kl_divergence(&mu, &rho)?;
        let tv = tv_distance(&mu, &rho)?;
        if tv > (kl / 2.0).sqrt() + 1e-12 {
            failures.push(format!("case {case}: Pinsker TV {tv} > sqrt(KL/2)"));
        }

        let shorter = marginal_quadrature(&params, &field, k - 1, &quad)?;
        let tower = tv_distance(&mu.marginalize_last().unwrap(), &shorter)?;
        if tower > 1e-12 {
            failures.push(format!("case {case}: tower property off by {tower:.1e}"));
        }

        let flipped = marginal_quadrature(&params, &field.negated(), k, &quad)?;
        let flip = tv_distance(&flipped, &mu.spin_flipped())?;
        let mut swapped_values = field.values().to_vec();
        swapped_values.swap(0, 1);
        let swapped = marginal_quadrature(
            &params,
            &FieldSample::from_values(swapped_values)?,
            k,
            &quad,
        )?;
        let perm = tv_distance(&swapped, &mu.swapped(0, 1))?;
        if flip > 1e-12 || perm > 1e-12 {
            failures.push(format!(
                "case {case}: symmetry covariance off ({flip:.1e}, {perm:.1e})"
            ));
        }

        let y = rng.random_range(-3.0..=3.0);
        let eps = 1e-3;
        for order in 1..=6 {
            let analytic = big_g_deriv(&spec, beta, y, order)?;
            let lower = |x: f64| -> Result<f64> {
                if order == 1 {
                    Ok(big_g(&spec, beta, x))
                } else {
                    big_g_deriv(&spec, beta, x, order - 1)
                }
            };
            // fourth-order central stencil
            let fd = (8.0 * (lower(y + eps)? - lower(y - eps)?)
                - (lower(y + 2.0 * eps)? - lower(y - 2.0 * eps)?))
                / (12.0 * eps);
            let err = (fd - analytic).abs();
            if err > 1e-6 * analytic.abs().max(1.0) {
                failures.push(format!(
                    "case {case}: order-{order} derivative at y = {y:.3}: {analytic} vs {fd}"
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        "200 cases: normalization, Pinsker, tower, flip/permutation covariance, derivatives".into()
    } else {
        format!("{} violations; first: {}", failures.len(), failures[0])
    };
    Ok(outcome(failures.is_empty(), detail))
}

fn main() {
    let checks: [(&str, Check); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("closed forms", closed_forms),
        ("phase anchors", phase_anchors),
        ("degeneracy at h=0, beta=1", degeneracy),
        ("unique non-degenerate maximum", unique_nondegenerate_chaos),
        ("unique degenerate maximum", unique_degenerate_chaos),
        ("several maxima, J index", random_pure_state_selection),
        ("exact sampler", sampler),
        ("CLT diagnostic", clt),
        ("invariant suites", invariants),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let line = match check() {
            Ok(o) => {
                if !o.pass {
                    failed += 1;
                }
                format!("{} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail)
            }
            Err(e) => {
                failed += 1;
                format!("FAIL error: {e}")
            }
        };
        println!(
            "criterion {:>2} [{name}] {line} ({:.2?})",
            i + 1,
            start.elapsed()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
