//! Parameter rays `G_s`: the parameters `κ` for which the singular value
//! lies on the dynamic ray of address `s` at potential `t`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::{potential_bounds, ExternalAddress};
use crate::dynamics::{certified_address_prefix, orbit, ComplexPoint, DEFAULT_ESCAPE_RE};
use crate::ray::{eval_ray_dual, EvalConfig, RayError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("Newton did not converge in {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("derivative {derivative:e} too small at κ = {kappa}")]
    SmallDerivative { kappa: ComplexPoint, derivative: f64 },
    #[error("ray undefined at κ = {kappa}: {source}")]
    DomainError {
        kappa: ComplexPoint,
        #[source]
        source: RayError,
    },
    #[error("potential {t} below the tail threshold {required}")]
    PotentialTooSmall { t: f64, required: f64 },
    #[error("invalid potential range: start {t_start}, end {t_end}")]
    InvalidRange { t_start: f64, t_end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub residual_tol: f64,
    pub max_iters: usize,
    pub min_derivative: f64,
    pub eval: EvalConfig,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { residual_tol: 1e-12, max_iters: 50, min_derivative: 1e-8, eval: EvalConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamTraceConfig {
    pub newton: NewtonConfig,
    pub max_kappa_step: f64,
    pub min_dt: f64,
    pub initial_dt: f64,
    /// Consecutive step halvings tolerated before the trace stops.
    pub max_halvings: usize,
}

impl Default for ParamTraceConfig {
    fn default() -> Self {
        Self {
            newton: NewtonConfig::default(),
            max_kappa_step: 0.1,
            min_dt: 1e-9,
            initial_dt: 0.1,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSample {
    pub t: f64,
    pub kappa: ComplexPoint,
    pub residual: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// `|κ - t - 2πi s_1| < 5`.
    pub near_asymptote: bool,
    /// `|κ| < 2πt`.
    pub modulus: bool,
}

/// Samples of `G_s`, ordered by strictly decreasing potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTrace {
    pub address: ExternalAddress,
    pub samples: Vec<ParamSample>,
    pub bound_checks: Vec<BoundCheck>,
    pub stopped_early: bool,
}

impl ParamTrace {
    pub fn new(address: ExternalAddress) -> Self {
        Self { address, samples: Vec::new(), bound_checks: Vec::new(), stopped_early: false }
    }

    pub fn push(&mut self, sample: ParamSample) {
        let s1 = self.address.entry(1).unwrap_or(0);
        let offset = sample.kappa - sample.t - Complex64::new(0.0, 2.0 * PI * s1 as f64);
        self.bound_checks.push(BoundCheck {
            near_asymptote: offset.norm() < 5.0,
            modulus: sample.kappa.norm() < 2.0 * PI * sample.t,
        });
        self.samples.push(sample);
    }

    pub fn points(&self) -> impl Iterator<Item = ComplexPoint> + '_ {
        self.samples.iter().map(|s| s.kappa)
    }

    /// CSV with columns `t, re_kappa, im_kappa, residual, iters`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re_kappa", "im_kappa", "residual", "iters"])?;
        for x in &self.samples {
            w.write_record([
                x.t.to_string(),
                x.kappa.re.to_string(),
                x.kappa.im.to_string(),
                x.residual.to_string(),
                x.newton_iters.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Potential `T_s = 20 + 2 t_s*` above which the tail seed is valid.
pub fn tail_potential(s: &ExternalAddress) -> f64 {
    20.0 + 2.0 * potential_bounds(s).t_star
}

/// The Newton starting point `t + 2πi s_1` on the tail of `G_s`.
pub fn tail_seed(s: &ExternalAddress, t: f64) -> Result<ComplexPoint, ParamError> {
    let required = tail_potential(s);
    if !(t >= required) {
        return Err(ParamError::PotentialTooSmall { t, required });
    }
    let s1 = s.entry(1).map_err(|e| ParamError::DomainError {
        kappa: Complex64::new(t, 0.0),
        source: RayError::Address(e),
    })?;
    Ok(Complex64::new(t, 2.0 * PI * s1 as f64))
}

/// Solves `g_s^κ(t) = 0` for `κ` by Newton's method, starting at `kappa0`.
/// Returns the root and the number of Newton updates taken.
pub fn newton_solve(
    s: &ExternalAddress,
    t: f64,
    kappa0: ComplexPoint,
    cfg: &NewtonConfig,
) -> Result<(ComplexPoint, usize), ParamError> {
    let mut kappa = kappa0;
    let mut residual = f64::INFINITY;
    for iters in 0..=cfg.max_iters {
        let (g, dg) = eval_ray_dual(kappa, s, t, &cfg.eval)
            .map_err(|source| ParamError::DomainError { kappa, source })?;
        residual = g.norm();
        if residual <= cfg.residual_tol {
            return Ok((kappa, iters));
        }
        if iters == cfg.max_iters {
            break;
        }
        if dg.norm() < cfg.min_derivative {
            return Err(ParamError::SmallDerivative { kappa, derivative: dg.norm() });
        }
        kappa -= g / dg;
        if !kappa.is_finite() {
            break;
        }
    }
    Err(ParamError::NoConvergence { iters: cfg.max_iters, residual })
}

/// Continues `G_s` from `t_start` down to `t_end` with a linear predictor
/// and Newton corrector.
///
/// Tracing failures do not produce an error: the partial trace comes back
/// with `stopped_early` set.
pub fn trace_parameter_ray(
    s: &ExternalAddress,
    t_start: f64,
    t_end: f64,
    cfg: &ParamTraceConfig,
) -> Result<ParamTrace, ParamError> {
    let t_min = potential_bounds(s).t_min;
    if !(t_end > t_min && t_end < t_start && t_start.is_finite()) {
        return Err(ParamError::InvalidRange { t_start, t_end });
    }
    let seed = tail_seed(s, t_start)?;
    let (kappa, iters) = newton_solve(s, t_start, seed, &cfg.newton)?;
    let mut trace = ParamTrace::new(s.clone());
    trace.push(ParamSample { t: t_start, kappa, residual: residual_at(s, t_start, kappa, cfg)?, newton_iters: iters });

    let mut dt = cfg.initial_dt;
    let mut successes = 0;
    let mut halvings = 0;
    while let Some(last) = trace.samples.last().copied() {
        if last.t <= t_end {
            break;
        }
        let t_next = (last.t - dt).max(t_end);
        let predicted = match trace.samples.len() {
            1 => tail_seed(s, t_next).unwrap_or(last.kappa),
            n => {
                let prev = trace.samples[n - 2];
                last.kappa + (last.kappa - prev.kappa) * ((t_next - last.t) / (last.t - prev.t))
            }
        };
        let accepted = newton_solve(s, t_next, predicted, &cfg.newton)
            .ok()
            .filter(|(k, _)| (k - last.kappa).norm() <= cfg.max_kappa_step);
        match accepted {
            Some((kappa, iters)) => {
                let residual = residual_at(s, t_next, kappa, cfg)?;
                trace.push(ParamSample { t: t_next, kappa, residual, newton_iters: iters });
                halvings = 0;
                successes += 1;
                if successes >= 3 {
                    dt *= 1.25;
                    successes = 0;
                }
            }
            None => {
                successes = 0;
                halvings += 1;
                dt = (last.t - t_next) / 2.0;
                if halvings >= cfg.max_halvings || dt < cfg.min_dt {
                    trace.stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(trace)
}

fn residual_at(s: &ExternalAddress, t: f64, kappa: ComplexPoint, cfg: &ParamTraceConfig) -> Result<f64, ParamError> {
    eval_ray_dual(kappa, s, t, &cfg.newton.eval)
        .map(|(g, _)| g.norm())
        .map_err(|source| ParamError::DomainError { kappa, source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Check {
    /// (a) `|κ - t - 2πi s_1| < 5` for `t >= 20 + 2t_s*`.
    TailDistance,
    /// (b) `|κ - t - 2πi s_1| <= 2e^{-t}(2πt + 2π|s_2| + 12)` on the same range.
    TailBound,
    /// (c) `|κ| < 2πt`.
    Modulus,
    /// (d) `|κ| <= 2t` for `t >= 30`; informational.
    LinearModulus,
    /// (e) the singular orbit escapes.
    SingularEscape,
    /// (f) the certified address of the singular value agrees with `s`.
    AddressPrefix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    pub check: Check,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
    /// Failures of check (d), which the theory does not guarantee.
    pub informational: Vec<Violation>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, check: Check) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }
}

/// Iterations allowed for the singular orbit to reach `Re > 50`.
const ESCAPE_ITERS: usize = 1000;
/// Address entries compared in check (f).
const ADDRESS_ENTRIES: usize = 64;

/// Runs the per-sample checks (a)–(f) over a parameter trace.
///
/// Checks (a) and (b) allow for the sample's own error: the Newton residual
/// plus a few ulps of `max(t, |κ|)`.
pub fn verify_trace(trace: &ParamTrace) -> VerifyReport {
    let mut report = VerifyReport::default();
    let s = &trace.address;
    let tail_from = tail_potential(s);
    let s1 = s.entry(1).unwrap_or(0) as f64;
    let s2 = s.entry_magnitude(2);
    for (index, x) in trace.samples.iter().enumerate() {
        report.checked += 1;
        let t = x.t;
        let mut flag = |check, value: f64, limit: f64, informational: bool| {
            let v = Violation { index, t, check, value, limit };
            if informational {
                report.informational.push(v);
            } else {
                report.violations.push(v);
            }
        };
        let modulus = x.kappa.norm();
        if t >= tail_from {
            let offset = (x.kappa - t - Complex64::new(0.0, 2.0 * PI * s1)).norm();
            let slack = x.residual + 8.0 * f64::EPSILON * t.max(modulus);
            if offset >= 5.0 + slack {
                flag(Check::TailDistance, offset, 5.0, false);
            }
            let bound = 2.0 * (-t).exp() * (2.0 * PI * t + 2.0 * PI * s2 + 12.0);
            if offset > bound + slack {
                flag(Check::TailBound, offset, bound, false);
            }
        }
        if modulus >= 2.0 * PI * t {
            flag(Check::Modulus, modulus, 2.0 * PI * t, false);
        }
        if t >= 30.0 && modulus > 2.0 * t {
            flag(Check::LinearModulus, modulus, 2.0 * t, true);
        }
        let zero = Complex64::new(0.0, 0.0);
        if !orbit(x.kappa, zero, ESCAPE_ITERS, DEFAULT_ESCAPE_RE).escaped {
            flag(Check::SingularEscape, 0.0, DEFAULT_ESCAPE_RE, false);
        }
        let prefix = certified_address_prefix(x.kappa, zero, ADDRESS_ENTRIES);
        if let Some(k) = prefix.iter().enumerate().position(|(k, e)| !matches!(s.entry(k + 1), Ok(x) if x == *e)) {
            flag(Check::AddressPrefix, k as f64 + 1.0, prefix.len() as f64, false);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::eval_ray_at_depth;

    fn addr(s: &str) -> ExternalAddress {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Root of `κ ↦ g_{0̄}^κ(t)` on the real line by bisection.
    fn real_root_by_bisection(t: f64, mut lo: f64, mut hi: f64) -> f64 {
        let cfg = EvalConfig::default();
        let g = |k: f64| crate::ray::eval_ray(c(k, 0.0), &addr("|0"), t, &cfg).unwrap().z.re;
        assert!(g(lo) * g(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) * g(lo) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn newton_on_the_real_tail() {
        let (kappa, iters) = newton_solve(&addr("|0"), 30.0, c(30.0, 0.0), &NewtonConfig::default()).unwrap();
        assert!(iters <= 4);
        let bound = 2.0 * (-30f64).exp() * (2.0 * PI * 30.0 + 12.0);
        assert!(bound < 5e-11);
        assert!((kappa - 30.0).norm() < bound);
        let oracle = real_root_by_bisection(30.0, 29.0, 31.0);
        assert!((kappa.re - oracle).abs() < 1e-12);
        assert_eq!(kappa.im, 0.0);
    }

    #[test]
    fn newton_with_first_entry_one() {
        let target = c(30.0, 2.0 * PI);
        let (kappa, _) = newton_solve(&addr("1|0"), 30.0, target, &NewtonConfig::default()).unwrap();
        assert!((kappa - target).norm() < 5e-11);
    }

    #[test]
    fn newton_from_far_away_never_lands_on_a_wrong_root() {
        // either an error, or the genuine root near t + 2πi s_1
        match newton_solve(&addr("|0"), 30.0, c(-100.0, 0.0), &NewtonConfig::default()) {
            Err(_) => {}
            Ok((kappa, _)) => assert!((kappa - 30.0).norm() < 5.0, "{kappa}"),
        }
    }

    #[test]
    fn tail_seed_values() {
        assert_eq!(tail_seed(&addr("|0"), 30.0).unwrap(), c(30.0, 0.0));
        assert_eq!(tail_seed(&addr("1|0"), 30.0).unwrap(), c(30.0, 2.0 * PI));
        assert!(matches!(tail_seed(&addr("|0"), 10.0), Err(ParamError::PotentialTooSmall { .. })));
    }

    #[test]
    fn zero_ray_down_to_one() {
        let trace = trace_parameter_ray(&addr("|0"), 40.0, 1.0, &ParamTraceConfig::default()).unwrap();
        assert!(!trace.stopped_early);
        assert_eq!(trace.samples.last().unwrap().t, 1.0);
        for (x, b) in trace.samples.iter().zip(&trace.bound_checks) {
            assert!(x.residual <= 1e-12);
            assert!(x.kappa.im.abs() <= 1e-10);
            assert!(b.modulus && b.near_asymptote, "t = {}", x.t);
        }
        for w in trace.samples.windows(2) {
            assert!(w[1].t < w[0].t);
        }
        let report = verify_trace(&trace);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn roots_survive_deeper_pullback() {
        let cfg = ParamTraceConfig::default();
        let s = addr("1|0");
        let trace = trace_parameter_ray(&s, 25.0, 3.0, &cfg).unwrap();
        assert!(!trace.stopped_early);
        for x in trace.samples.iter().step_by(7) {
            let depth = crate::ray::seed_depth(&s, x.t, x.kappa.norm(), 50.0, 4096).unwrap();
            let deep = eval_ray_at_depth(x.kappa, &s, x.t, 2 * depth + 2, &cfg.newton.eval).unwrap();
            assert!(deep.z.norm() <= 1e-12, "t = {}: {}", x.t, deep.z.norm());
        }
    }

    #[test]
    fn neighbouring_rays_are_disjoint() {
        let cfg = ParamTraceConfig::default();
        let a = trace_parameter_ray(&addr("|0"), 25.0, 5.0, &cfg).unwrap();
        let b = trace_parameter_ray(&addr("1|0"), 25.0, 5.0, &cfg).unwrap();
        for x in &a.samples {
            for y in &b.samples {
                assert!((x.kappa - y.kappa).norm() > 0.0);
            }
        }
        // at the common endpoint the distance is about 2π
        let d = (a.samples.last().unwrap().kappa - b.samples.last().unwrap().kappa).norm();
        assert!(d > 1.0);
    }

    #[test]
    fn reparametrization_coherence() {
        let s = addr("|1 0");
        let coarse = trace_parameter_ray(&s, 22.0, 4.0, &ParamTraceConfig::default()).unwrap();
        let fine_cfg = ParamTraceConfig { max_kappa_step: 0.05, initial_dt: 0.05, ..Default::default() };
        let fine = trace_parameter_ray(&s, 22.0, 4.0, &fine_cfg).unwrap();
        let (a, b) = (coarse.samples.last().unwrap(), fine.samples.last().unwrap());
        assert_eq!(a.t, b.t);
        assert!((a.kappa - b.kappa).norm() < 1e-9);
        // every fine sample is the root the coarse trace passes through
        for y in fine.samples.iter().step_by(5) {
            let i = coarse.samples.iter().position(|x| x.t <= y.t).unwrap();
            let guess = coarse.samples[i].kappa;
            let (k, _) = newton_solve(&s, y.t, guess, &NewtonConfig::default()).unwrap();
            assert!((k - y.kappa).norm() < 1e-9);
        }
    }

    #[test]
    fn fake_sample_flags_selectively() {
        let mut trace = ParamTrace::new(addr("|0"));
        trace.push(ParamSample { t: 30.0, kappa: c(100.0, 0.0), residual: 0.0, newton_iters: 0 });
        let report = verify_trace(&trace);
        assert_eq!(report.count(Check::TailDistance), 1);
        // (b) is strictly tighter than (a)
        assert_eq!(report.count(Check::TailBound), 1);
        assert_eq!(report.count(Check::Modulus), 0);
        assert_eq!(report.count(Check::SingularEscape), 0);
        assert_eq!(report.count(Check::AddressPrefix), 0);
    }

    #[test]
    fn empty_trace_empty_report() {
        let report = verify_trace(&ParamTrace::new(addr("|0")));
        assert_eq!(report, VerifyReport::default());
    }

    #[test]
    fn invalid_ranges() {
        let cfg = ParamTraceConfig::default();
        assert!(matches!(trace_parameter_ray(&addr("|0"), 10.0, 1.0, &cfg), Err(ParamError::PotentialTooSmall { .. })));
        assert!(matches!(trace_parameter_ray(&addr("|0"), 30.0, 0.0, &cfg), Err(ParamError::InvalidRange { .. })));
    }
}
