//! Runtime invariant checks across all modules for one configured case.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{model, model_inv, model_iter, potential_bounds, t_s_k, tail_threshold, ExternalAddress};
use crate::dynamics::{certified_address_prefix, exp_map, log_branch, strip_index, ComplexPoint};
use crate::param_rays::{tail_potential, trace_parameter_ray, verify_trace, ParamTraceConfig};
use crate::ray::{approximant, eval_ray, eval_ray_at_depth, ray_derivative_t, residual_bound, EvalConfig};
use crate::variation::dynamic_ray_variation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyCase {
    pub address: ExternalAddress,
    pub kappa: ComplexPoint,
    pub t_range: (f64, f64),
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub module: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

struct Suite(Vec<SuiteCheck>);

impl Suite {
    fn record(&mut self, module: &str, name: &str, outcome: Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.0.push(SuiteCheck { module: module.into(), name: name.into(), passed, detail });
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
}

fn worst(values: impl Iterator<Item = Result<f64, String>>, limit: f64, what: &str) -> Result<String, String> {
    let mut max = 0.0f64;
    for v in values {
        max = max.max(v?);
    }
    if max <= limit {
        Ok(format!("max {what} {max:.3e} <= {limit:.1e}"))
    } else {
        Err(format!("max {what} {max:.3e} > {limit:.1e}"))
    }
}

fn combinatorics_checks(suite: &mut Suite, s: &ExternalAddress) {
    suite.record(
        "combinatorics",
        "inverse_model",
        worst(grid(0.0, 700.0, 701).map(|t| Ok((model_inv(model(t)) - t).abs() / t)), 1e-14, "relative error"),
    );
    let coherent = (0..=20usize).all(|n| {
        let shifted = s.shift(n);
        (1..=100usize).all(|k| shifted.entry(k) == s.entry(n + k))
    });
    suite.record(
        "combinatorics",
        "shift_coherence",
        if coherent { Ok("entries agree for n <= 20, k <= 100".into()) } else { Err("shifted entries differ".into()) },
    );
    let t_star = potential_bounds(s).t_star;
    let transported = (0..=10usize).all(|n| {
        let bound = model_iter(t_star, n as i64);
        potential_bounds(&s.shift(n)).t_star <= bound * (1.0 + 1e-12)
    });
    suite.record(
        "combinatorics",
        "majorant_transport",
        if transported { Ok(format!("t* = {t_star}")) } else { Err("t*(σ^n s) exceeds F^n(t*)".into()) },
    );
    let mut sums_ok = true;
    for x in (0..=10).map(f64::from) {
        for t in (0..10).map(|j| 2.0 * x + 5.0 + 5.0 * j as f64) {
            let (mut a, mut b) = (0.0, 0.0);
            let (mut fx, mut ft) = (x, t);
            for _ in 0..64 {
                fx = model(fx);
                ft = model(ft);
                if !ft.is_finite() {
                    break;
                }
                a += 1.0 / (ft + 1.0);
                b += fx / (ft + 1.0);
            }
            sums_ok &= a < 3.0 * (-t).exp() && b < (x.exp() + 1.0) * (-t).exp();
        }
    }
    suite.record(
        "combinatorics",
        "summation_estimates",
        if sums_ok { Ok("both sums below their bounds".into()) } else { Err("a summation bound failed".into()) },
    );
}

fn dynamics_checks(suite: &mut Suite, kappa: ComplexPoint) {
    let mut max_err = 0.0f64;
    let mut strips_ok = true;
    for (i, r) in [1e-6, 1e-2, 1.0, 1e3, 1e12, 1e300].iter().enumerate() {
        let z = Complex64::from_polar(*r, -2.5 + 0.9 * i as f64);
        for j in -10..=10 {
            let Ok(w) = log_branch(kappa, j, z, 1e-12) else { continue };
            max_err = max_err.max((exp_map(kappa, w) - z).norm() / z.norm());
            strips_ok &= strip_index(kappa, w, 1e-12) == Ok(j);
        }
    }
    suite.record(
        "dynamics",
        "branch_inverse",
        if max_err <= 1e-13 && strips_ok {
            Ok(format!("max relative error {max_err:.2e}"))
        } else {
            Err(format!("max relative error {max_err:.2e}, strips ok: {strips_ok}"))
        },
    );
    let mut translated = true;
    for z in [Complex64::new(0.3, 0.4), Complex64::new(-1.0, 2.0), Complex64::new(1.5, -5.0)] {
        let base = certified_address_prefix(kappa, z, 4);
        for k in -3i64..=3 {
            let other = certified_address_prefix(kappa + Complex64::new(0.0, 2.0 * PI * k as f64), z, 4);
            translated &= base.iter().zip(&other).all(|(a, b)| *b == a + k);
        }
    }
    suite.record(
        "dynamics",
        "address_translation",
        if translated { Ok("entries shift by k".into()) } else { Err("translated address mismatch".into()) },
    );
}

fn ray_checks(suite: &mut Suite, case: &VerifyCase) {
    let (s, kappa, cfg) = (&case.address, case.kappa, &case.eval);
    let k = kappa.norm();
    let (lo, hi) = case.t_range;
    let shifted = s.shift(1);
    suite.record(
        "ray",
        "semiconjugacy",
        worst(
            grid(lo, hi, 24).map(|t| {
                let z = eval_ray(kappa, s, t, cfg).map_err(|e| e.to_string())?.z;
                let w = eval_ray(kappa, &shifted, model(t), cfg).map_err(|e| e.to_string())?.z;
                Ok((exp_map(kappa, z) - w).norm() / w.norm().max(1.0))
            }),
            1e-9,
            "scaled mismatch",
        ),
    );
    let tail_lo = t_s_k(s, k);
    suite.record(
        "ray",
        "residual_bound",
        worst(
            grid(tail_lo, tail_lo + 20.0, 24).map(|t| {
                let r = eval_ray(kappa, s, t, cfg).map_err(|e| e.to_string())?.residual.unwrap_or(0.0);
                Ok(if r < 5.0 { r / residual_bound(s, t, k) } else { f64::INFINITY })
            }),
            1.0,
            "residual / bound",
        ),
    );
    let tail = tail_threshold(s, k) + 0.5;
    suite.record(
        "ray",
        "approximant_convergence",
        worst(
            (1..=10usize).map(|n| {
                let exact = eval_ray(kappa, s, tail, cfg).map_err(|e| e.to_string())?.z;
                let gn = approximant(kappa, s, tail, n, cfg).map_err(|e| e.to_string())?;
                Ok((gn - exact).norm() * 2f64.powi(n as i32))
            }),
            1.0,
            "2^n |g^n - g|",
        ),
    );
    suite.record(
        "ray",
        "derivative_vs_differences",
        worst(
            grid(lo.max(tail_lo), hi.max(tail_lo + 5.0), 8).map(|t| {
                let d = ray_derivative_t(kappa, s, t, cfg).map_err(|e| e.to_string())?;
                let h = 1e-5;
                let depth = |x: f64| eval_ray(kappa, s, x, cfg).map(|r| r.depth_used).map_err(|e| e.to_string());
                let n = depth(t + h)?.max(depth(t - h)?);
                let p = eval_ray_at_depth(kappa, s, t + h, n, cfg).map_err(|e| e.to_string())?.z;
                let m = eval_ray_at_depth(kappa, s, t - h, n, cfg).map_err(|e| e.to_string())?.z;
                Ok(((p - m) / (2.0 * h) - d).norm() / d.norm())
            }),
            1e-6,
            "relative error",
        ),
    );
}

fn param_checks(suite: &mut Suite, case: &VerifyCase) {
    let s = &case.address;
    let start = tail_potential(s).max(30.0);
    let end = case.t_range.0.max(potential_bounds(s).t_min + 0.5).min(start - 1.0);
    let outcome = trace_parameter_ray(s, start, end, &ParamTraceConfig::default())
        .map_err(|e| e.to_string())
        .and_then(|trace| {
            if trace.stopped_early {
                return Err(format!("stopped early at t = {}", trace.samples.last().map_or(start, |x| x.t)));
            }
            let report = verify_trace(&trace);
            if report.is_clean() {
                Ok(format!("{} samples from t = {start} to {end}", trace.samples.len()))
            } else {
                Err(format!("{} violations, first {:?}", report.violations.len(), report.violations[0]))
            }
        });
    suite.record("param_rays", "trace_and_verify", outcome);
}

fn variation_checks(suite: &mut Suite, case: &VerifyCase) {
    let (lo, hi) = case.t_range;
    let outcome = dynamic_ray_variation(case.kappa, &case.address, lo, hi)
        .map_err(|e| e.to_string())
        .and_then(|r| {
            let detail = format!("alpha = {:.4}, N = {}, bound = {}", r.alpha.total(), r.n, r.bound);
            if r.within_bound && r.derivative_check {
                Ok(detail)
            } else {
                Err(detail)
            }
        });
    suite.record("variation", "ray_variation_bound", outcome);
}

/// Runs every module's checks on `case`.
pub fn run_suite(case: &VerifyCase) -> Vec<SuiteCheck> {
    let mut suite = Suite(Vec::new());
    combinatorics_checks(&mut suite, &case.address);
    dynamics_checks(&mut suite, case.kappa);
    ray_checks(&mut suite, case);
    param_checks(&mut suite, case);
    variation_checks(&mut suite, case);
    suite.0
}
