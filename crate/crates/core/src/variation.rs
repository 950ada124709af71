//! Winding numbers and variation numbers of sampled curves.
//!
//! The variation number `α(γ, a) = (1/2π) ∫ |Im(γ'/(γ - a))| dt` counts the
//! total turning of `γ` around `a`, with back-and-forth oscillation counted
//! every time.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::{model_iter, tail_threshold, ExternalAddress};
use crate::dynamics::ComplexPoint;
use crate::ray::{ray_derivative_t, ray_second_derivative_t, trace_ray, EvalConfig, RayError, TraceConfig, TraceError};

const BASE_EPS: f64 = 1e-9;
const QUAD_REL_TOL: f64 = 1e-6;
const QUAD_MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationError {
    #[error("sample {index} is within {distance:e} of the base point")]
    TooCloseToBase { index: usize, distance: f64 },
    #[error("curve has no derivative samples")]
    MissingDerivatives,
    #[error("argument jumps by {increment} between samples {index} and {}", index + 1)]
    Undersampled { index: usize, increment: f64 },
    #[error("curve is not closed (gap {gap:e})")]
    NotClosed { gap: f64 },
    #[error("malformed curve: {0}")]
    Malformed(&'static str),
    #[error("base point lies on the half line")]
    OnHalfLine,
    #[error(transparent)]
    Ray(#[from] RayError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Asymptotic constants that bound the integrand beyond the last sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tail {
    /// `|γ(t) - t| <= c_pos`, `|γ'(t) - 1| <= c_der / t`, `|γ''(t)| <= c_secder / t²`.
    Admissible { c_pos: f64, c_der: f64, c_secder: f64 },
    /// The curve is `γ'` of an admissible `γ` with the constants above.
    DerivativeOf { c_der: f64, c_secder: f64 },
}

impl Tail {
    /// Upper bound for `(1/2π) ∫_T^∞ |Im(γ'/(γ - a))| dt`, or `None` if
    /// `T` is too small for the constants to control the integrand.
    pub fn remainder(&self, t_last: f64, a: ComplexPoint) -> Option<f64> {
        match *self {
            Tail::Admissible { c_pos, c_der, .. } => {
                let b = c_pos + a.norm();
                (t_last > b && t_last > c_der)
                    .then(|| (b + c_der + c_der * b / t_last) / (t_last - b) / (2.0 * PI))
            }
            Tail::DerivativeOf { c_der, c_secder } => {
                (t_last > c_der).then(|| c_secder / (t_last - c_der) / (2.0 * PI))
            }
        }
    }
}

/// Constants valid on dynamic ray tails: `|r| < 5`, `|g' - 1| < e^{-t/2} <= 0.75/t`
/// and `|g''| < e^{-t/2} <= 2.2/t²`.
pub fn ray_tail(kappa: ComplexPoint, s1: i64) -> Tail {
    Tail::Admissible {
        c_pos: (Complex64::new(0.0, 2.0 * PI * s1 as f64) - kappa).norm() + 5.0,
        c_der: 0.75,
        c_secder: 2.2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    pub params: Vec<f64>,
    pub points: Vec<ComplexPoint>,
    pub derivs: Option<Vec<ComplexPoint>>,
    pub tail: Option<Tail>,
}

impl SampledCurve {
    pub fn new(params: Vec<f64>, points: Vec<ComplexPoint>, derivs: Option<Vec<ComplexPoint>>) -> Self {
        Self { params, points, derivs, tail: None }
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = Some(tail);
        self
    }

    /// Samples `f` and `f'` at `n + 1` equally spaced parameters.
    pub fn from_fn(
        lo: f64,
        hi: f64,
        n: usize,
        f: impl Fn(f64) -> ComplexPoint,
        df: impl Fn(f64) -> ComplexPoint,
    ) -> Self {
        let params: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let points = params.iter().map(|&t| f(t)).collect();
        let derivs = params.iter().map(|&t| df(t)).collect();
        Self::new(params, points, Some(derivs))
    }

    fn validate(&self) -> Result<(), VariationError> {
        if self.params.len() != self.points.len() || self.params.len() < 2 {
            return Err(VariationError::Malformed("need at least two samples with matching lengths"));
        }
        if self.params.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(VariationError::Malformed("parameters must increase strictly"));
        }
        if let Some(d) = &self.derivs {
            if d.len() != self.points.len() || d.iter().any(|z| !z.is_finite()) {
                return Err(VariationError::Malformed("derivatives must be finite, one per sample"));
            }
        }
        Ok(())
    }
}

/// Cubic Hermite piece on `[t_i, t_i + h]` in the local variable `u = t - t_i`:
/// `p0 + m0 u + c2 u² + c3 u³`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    p0: Complex64,
    m0: Complex64,
    c2: Complex64,
    c3: Complex64,
}

impl Piece {
    fn new(h: f64, p0: Complex64, p1: Complex64, m0: Complex64, m1: Complex64) -> Self {
        let slope = (p1 - p0) / h;
        Self { p0, m0, c2: (slope * 3.0 - m0 * 2.0 - m1) / h, c3: (m0 + m1 - slope * 2.0) / (h * h) }
    }

    fn value(&self, u: f64) -> Complex64 {
        self.p0 + (self.m0 + (self.c2 + self.c3 * u) * u) * u
    }

    fn deriv(&self, u: f64) -> Complex64 {
        self.m0 + (self.c2 * 2.0 + self.c3 * (3.0 * u)) * u
    }

    /// `(γ - p0) / u` and its derivative.
    fn quotient(&self, u: f64) -> (Complex64, Complex64) {
        (self.m0 + (self.c2 + self.c3 * u) * u, self.c2 + self.c3 * (2.0 * u))
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    fn step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let refined = left + right;
        let diff = refined - whole;
        if depth == 0 || diff.abs() <= 15.0 * QUAD_REL_TOL * refined.abs().max(1e-12 * (b - a)) {
            return refined + diff / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, depth - 1) + step(f, m, b, fm, frm, fb, right, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, QUAD_MAX_DEPTH)
}

/// Integral over the sampled range plus a certified bound for the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationValue {
    pub integral: f64,
    /// `None` when the curve has no tail record (or its constants do not
    /// apply at the last sample).
    pub tail_bound: Option<f64>,
}

impl VariationValue {
    pub fn total(&self) -> f64 {
        self.integral + self.tail_bound.unwrap_or(0.0)
    }
}

fn check_base(curve: &SampledCurve, a: ComplexPoint, skip_first: bool) -> Result<(), VariationError> {
    let scale = a.norm().max(1.0);
    for (index, z) in curve.points.iter().enumerate().skip(usize::from(skip_first)) {
        let distance = (z - a).norm();
        if distance < BASE_EPS * scale {
            return Err(VariationError::TooCloseToBase { index, distance });
        }
    }
    Ok(())
}

/// `(1/2π) ∫ Im(γ'/(γ - a)) dt` over each sample interval, with
/// `abs` choosing between the variation and the signed turning.
fn turning_integral(curve: &SampledCurve, a: ComplexPoint, abs: bool) -> Result<f64, VariationError> {
    curve.validate()?;
    let derivs = curve.derivs.as_ref().ok_or(VariationError::MissingDerivatives)?;
    let p0 = curve.points[0];
    let starts_at_base = (p0 - a).norm() <= 1e-12 * a.norm().max(1.0);
    check_base(curve, a, starts_at_base)?;
    let mut total = 0.0;
    for i in 0..curve.params.len() - 1 {
        let h = curve.params[i + 1] - curve.params[i];
        let piece = Piece::new(h, curve.points[i], curve.points[i + 1], derivs[i], derivs[i + 1]);
        let integrand = |u: f64| {
            // γ - a = u q(u) on the first piece removes the singularity at u = 0
            let v = if i == 0 && starts_at_base {
                let (q, dq) = piece.quotient(u);
                (dq / q).im
            } else {
                (piece.deriv(u) / (piece.value(u) - a)).im
            };
            if abs {
                v.abs()
            } else {
                v
            }
        };
        total += adaptive_simpson(&integrand, 0.0, h);
    }
    Ok(total / (2.0 * PI))
}

/// Variation number of `curve` around `a`.
pub fn variation_number(curve: &SampledCurve, a: ComplexPoint) -> Result<VariationValue, VariationError> {
    let integral = turning_integral(curve, a, true)?;
    let t_last = *curve.params.last().expect("validated");
    let tail_bound = curve.tail.and_then(|tail| tail.remainder(t_last, a));
    Ok(VariationValue { integral, tail_bound })
}

/// Signed turning `(1/2π) ∫ Im(γ'/(γ - a)) dt` over the sampled range.
pub fn signed_turning(curve: &SampledCurve, a: ComplexPoint) -> Result<f64, VariationError> {
    turning_integral(curve, a, false)
}

/// Winding number of a closed sampled curve around `a`.
pub fn winding_number(curve: &SampledCurve, a: ComplexPoint) -> Result<i64, VariationError> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return Err(VariationError::Malformed("closed curve needs at least three samples"));
    }
    let gap = (pts[0] - pts[pts.len() - 1]).norm();
    if gap > 1e-9 {
        return Err(VariationError::NotClosed { gap });
    }
    check_base(curve, a, false)?;
    let mut sum = 0.0;
    for (index, w) in pts.windows(2).enumerate() {
        let increment = ((w[1] - a) / (w[0] - a)).arg();
        if increment.abs() > PI / 2.0 {
            return Err(VariationError::Undersampled { index, increment });
        }
        sum += increment;
    }
    Ok((sum / (2.0 * PI)).round() as i64)
}

/// Variation number of the half line `t ↦ λt`, `t >= 0`, around `a`:
/// `|arg(a/λ) - π| / 2π` with the argument taken in `[0, 2π]`.
pub fn halfline_variation(lambda: ComplexPoint, a: ComplexPoint) -> Result<f64, VariationError> {
    if lambda.norm() == 0.0 {
        return Err(VariationError::Malformed("direction must be nonzero"));
    }
    let ratio = a / lambda;
    if ratio.re >= 0.0 && ratio.im.abs() <= 1e-15 * ratio.norm() {
        return Err(VariationError::OnHalfLine);
    }
    let arg = ratio.arg().rem_euclid(2.0 * PI);
    Ok((arg - PI).abs() / (2.0 * PI))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayVariation {
    /// Variation of `g_s^κ|_{(t0,∞)}` around `g_s^κ(t0)`.
    pub alpha: VariationValue,
    /// Variation of `(g_s^κ)'|_{(t0,∞)}` around 0.
    pub derivative_alpha: VariationValue,
    /// Smallest `n` for which `|g''/g'| < e^{-t/2}` held on the scan grid of
    /// the shifted ray `g_{σ^n s}`.
    pub n: u32,
    pub bound: f64,
    /// Potentials of `g_{σ^n s}` over which the criterion was checked.
    pub verified_range: (f64, f64),
    /// Whether `t_cap` reaches the ray tail, so the remainders are certified.
    pub tail_certified: bool,
    /// `alpha <= 2^n`, using the integral plus certified remainder.
    pub within_bound: bool,
    /// `alpha <= derivative_alpha + 1/2`, with the sampled integral on the
    /// left and the certified total on the right.
    pub derivative_check: bool,
}

const SCAN_PER_UNIT: f64 = 64.0;
const MAX_N: u32 = 64;

fn criterion_holds(kappa: ComplexPoint, s: &ExternalAddress, lo: f64, hi: f64, cfg: &EvalConfig) -> Result<bool, RayError> {
    let steps = ((hi - lo) * SCAN_PER_UNIT).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = lo + (hi - lo) * i as f64 / steps as f64;
        let d1 = ray_derivative_t(kappa, s, t, cfg)?;
        let d2 = ray_second_derivative_t(kappa, s, t, cfg)?;
        if !((d2.norm() / d1.norm()).ln() < -t / 2.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Measures the variation of a dynamic ray beyond `t0` and checks it
/// against `2^N`, where `N` comes from a grid scan of `|g''/g'| < e^{-t/2}`.
pub fn dynamic_ray_variation(
    kappa: ComplexPoint,
    s: &ExternalAddress,
    t0: f64,
    t_cap: f64,
) -> Result<RayVariation, VariationError> {
    let trace_cfg = TraceConfig::default();
    let cfg = trace_cfg.eval;
    let k = kappa.norm();

    let mut found = None;
    for n in 0..=MAX_N {
        let lo = model_iter(t0, i64::from(n));
        if !lo.is_finite() {
            found = Some((n, (lo, lo)));
            break;
        }
        let hi = t_cap.max(lo + 1.0);
        if criterion_holds(kappa, &s.shift(n as usize), lo, hi, &cfg)? {
            found = Some((n, (lo, hi)));
            break;
        }
    }
    let (n, verified_range) = found.ok_or(VariationError::Malformed("criterion never held"))?;

    let trace = trace_ray(kappa, s, t0, t_cap, &trace_cfg)?;
    let samples: Vec<_> = trace.samples.iter().rev().collect();
    let params: Vec<f64> = samples.iter().map(|x| x.t).collect();
    let points: Vec<ComplexPoint> = samples.iter().map(|x| x.z).collect();
    let derivs: Vec<ComplexPoint> = samples.iter().map(|x| x.dz_dt.expect("trace fills dz/dt")).collect();
    let second: Vec<ComplexPoint> = params
        .iter()
        .map(|&t| ray_second_derivative_t(kappa, s, t, &cfg))
        .collect::<Result<_, _>>()?;

    let tail_certified = t_cap >= tail_threshold(s, k);
    let mut curve = SampledCurve::new(params.clone(), points.clone(), Some(derivs.clone()));
    let mut derivative_curve = SampledCurve::new(params, derivs, Some(second));
    if tail_certified {
        let tail = ray_tail(kappa, s.entry(1).map_err(RayError::from)?);
        curve = curve.with_tail(tail);
        if let Tail::Admissible { c_der, c_secder, .. } = tail {
            derivative_curve = derivative_curve.with_tail(Tail::DerivativeOf { c_der, c_secder });
        }
    }
    let alpha = variation_number(&curve, points[0])?;
    let derivative_alpha = variation_number(&derivative_curve, Complex64::new(0.0, 0.0))?;
    let bound = 2f64.powi(n as i32);
    Ok(RayVariation {
        alpha,
        derivative_alpha,
        n,
        bound,
        verified_range,
        tail_certified,
        within_bound: alpha.total() <= bound,
        derivative_check: alpha.integral <= derivative_alpha.total() + 0.5,
    })
}
