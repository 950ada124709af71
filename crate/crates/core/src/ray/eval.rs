use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dual::DualComplex;
use crate::combinatorics::{
    log_model_iter, model_iter, potential_bounds, t_s_k, AddressError, ExternalAddress,
};
use crate::dynamics::{log_branch, ComplexPoint, DEFAULT_BOUNDARY_EPS};

pub const DEFAULT_SEED_THRESHOLD: f64 = 50.0;
pub const DEFAULT_DEPTH_CAP: usize = 4096;

/// Absolute seed error we are willing to leave in place, relative to the
/// seed's own magnitude.
const SEED_RELATIVE_ERROR: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RayError {
    #[error(transparent)]
    Address(#[from] AddressError),
    #[error("potential {t} is not above the minimal potential {t_min}")]
    PotentialTooLow { t: f64, t_min: f64 },
    #[error("seed threshold {0} outside [50, 300]")]
    InvalidThreshold(f64),
    #[error("seed depth would exceed the cap of {cap} levels")]
    DepthExceeded { cap: usize },
    #[error("pullback hit the branch cut at level {level} (z = {z})")]
    BranchCut { level: usize, z: ComplexPoint },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Potential `H` at which the asymptotic seed is placed.
    pub threshold: f64,
    pub depth_cap: usize,
    pub boundary_eps: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_SEED_THRESHOLD,
            depth_cap: DEFAULT_DEPTH_CAP,
            boundary_eps: DEFAULT_BOUNDARY_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub t: f64,
    pub z: ComplexPoint,
    pub dz_dt: Option<ComplexPoint>,
    pub dz_dkappa: Option<ComplexPoint>,
    /// `|z - (t - κ + 2πi s_1)|`.
    pub residual: Option<f64>,
    pub depth_used: usize,
}

fn two_pi_i(j: i64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * j as f64)
}

fn check_potential(s: &ExternalAddress, t: f64) -> Result<(), RayError> {
    let t_min = potential_bounds(s).t_min;
    if t.is_nan() || t <= t_min {
        return Err(RayError::PotentialTooLow { t, t_min });
    }
    Ok(())
}

/// Minimal `n` with `F^n(t) >= max(t_{σ^n s}^K, H)`; a saturated `F^n(t)`
/// counts as large enough.
pub fn seed_depth(s: &ExternalAddress, t: f64, k: f64, threshold: f64, cap: usize) -> Result<usize, RayError> {
    if !(50.0..=300.0).contains(&threshold) {
        return Err(RayError::InvalidThreshold(threshold));
    }
    check_potential(s, t)?;
    let mut ft = t;
    for n in 0..=cap {
        if ft.is_infinite() || ft >= t_s_k(&s.shift(n), k).max(threshold) {
            return Ok(n);
        }
        ft = model_iter(ft, 1);
    }
    Err(RayError::DepthExceeded { cap })
}

/// The pullback chain `z_0 = g_s(t), z_1 = g_{σs}(F(t)), ..., z_top`.
#[derive(Debug, Clone)]
pub(crate) struct Chain {
    /// `levels[k] ≈ g_{σ^k s}(F^k(t))`; the last entry is the seed.
    pub levels: Vec<Complex64>,
    /// `potentials[k] = F^k(t)`, finite for every stored level.
    pub potentials: Vec<f64>,
    /// `Log z_1`, when the chain has at least one pullback.
    pub first_log: Option<Complex64>,
    pub depth_used: usize,
}

#[derive(Debug, Clone, Copy)]
enum Seed {
    /// `F^n(t) - κ + 2πi s_{n+1}`.
    Asymptotic,
    /// The pullback approximant `L_{s_1} ∘ ... ∘ L_{s_n}(F^n(t))`.
    Potential,
}

/// Pulls a seed placed at level `depth` back to level 0.
fn pull_back(
    kappa: ComplexPoint,
    s: &ExternalAddress,
    t: f64,
    depth: usize,
    seed: Seed,
    eps: f64,
) -> Result<Chain, RayError> {
    let potentials_all: Vec<f64> = crate::combinatorics::model_orbit(t, depth + 1);
    // highest level whose potential is finite
    let finite_top = potentials_all.iter().take_while(|p| p.is_finite()).count() - 1;
    let (top, seed_value) = match seed {
        Seed::Asymptotic => {
            let top = depth.min(finite_top);
            (top, potentials_all[top] - kappa + two_pi_i(s.entry(top + 1)?))
        }
        Seed::Potential => {
            if depth == 0 {
                (0, Complex64::new(t, 0.0))
            } else if depth - 1 > finite_top {
                // log F^depth(t) = F^{depth-1}(t) to double precision here,
                // and every level above the last finite one collapses the same way
                (finite_top, potentials_all[finite_top] - kappa + two_pi_i(s.entry(finite_top + 1)?))
            } else {
                // L_{s_depth}(F^depth(t)) computed without overflow
                let top = depth - 1;
                let log_top = log_model_iter(t, depth as u32);
                (top, Complex64::new(log_top, 0.0) - kappa + two_pi_i(s.entry(depth)?))
            }
        }
    };
    let mut levels = vec![Complex64::new(0.0, 0.0); top + 1];
    levels[top] = seed_value;
    let mut first_log = None;
    for k in (1..=top).rev() {
        let z = levels[k];
        let w = log_branch(kappa, s.entry(k)?, z, eps).map_err(|_| RayError::BranchCut { level: k, z })?;
        if k == 1 {
            first_log = Some(z.ln());
        }
        levels[k - 1] = w;
    }
    let depth_used = match seed {
        Seed::Asymptotic => top,
        Seed::Potential => depth,
    };
    Ok(Chain {
        levels,
        potentials: potentials_all[..=top.min(finite_top)].to_vec(),
        first_log,
        depth_used,
    })
}

/// Seed depth plus the extra levels needed to push the asymptotic seed
/// error `2e^{-F^n(t)}(|κ| + 2π|s_{n+2}| + 12)` below rounding.
fn working_depth(kappa: ComplexPoint, s: &ExternalAddress, t: f64, cfg: &EvalConfig) -> Result<usize, RayError> {
    let k = kappa.norm();
    let mut n = seed_depth(s, t, k, cfg.threshold, cfg.depth_cap)?;
    loop {
        let ft = model_iter(t, n as i64);
        if !ft.is_finite() || n >= cfg.depth_cap {
            return Ok(n);
        }
        let err = 2.0 * (-ft).exp() * (k + 2.0 * PI * s.entry_magnitude(n + 2) + 12.0);
        if err <= SEED_RELATIVE_ERROR * ft.max(1.0) {
            return Ok(n);
        }
        n += 1;
    }
}

pub(crate) fn ray_chain(kappa: ComplexPoint, s: &ExternalAddress, t: f64, cfg: &EvalConfig) -> Result<Chain, RayError> {
    let depth = working_depth(kappa, s, t, cfg)?;
    pull_back(kappa, s, t, depth, Seed::Asymptotic, cfg.boundary_eps)
}

fn sample_from_chain(t: f64, chain: &Chain) -> RaySample {
    let residual = chain.first_log.map(|l| (l - t).norm()).unwrap_or(0.0);
    RaySample {
        t,
        z: chain.levels[0],
        dz_dt: None,
        dz_dkappa: None,
        residual: Some(residual),
        depth_used: chain.depth_used,
    }
}

/// `g_s^κ(t)` by pulling back an asymptotic seed.
pub fn eval_ray(kappa: ComplexPoint, s: &ExternalAddress, t: f64, cfg: &EvalConfig) -> Result<RaySample, RayError> {
    let chain = ray_chain(kappa, s, t, cfg)?;
    Ok(sample_from_chain(t, &chain))
}

/// Same as [`eval_ray`] but with the asymptotic seed placed at a fixed level.
pub fn eval_ray_at_depth(
    kappa: ComplexPoint,
    s: &ExternalAddress,
    t: f64,
    depth: usize,
    cfg: &EvalConfig,
) -> Result<RaySample, RayError> {
    check_potential(s, t)?;
    let chain = pull_back(kappa, s, t, depth, Seed::Asymptotic, cfg.boundary_eps)?;
    Ok(sample_from_chain(t, &chain))
}

/// The approximant `g^n(t) = L_{κ,s_1} ∘ ... ∘ L_{κ,s_n}(F^n(t))`.
pub fn approximant(kappa: ComplexPoint, s: &ExternalAddress, t: f64, n: usize, cfg: &EvalConfig) -> Result<ComplexPoint, RayError> {
    check_potential(s, t)?;
    Ok(pull_back(kappa, s, t, n, Seed::Potential, cfg.boundary_eps)?.levels[0])
}

/// `g_s^κ(t)` and `∂g_s^κ(t)/∂κ` by forward-mode differentiation of the
/// pullback chain.
pub fn eval_ray_dual(
    kappa: ComplexPoint,
    s: &ExternalAddress,
    t: f64,
    cfg: &EvalConfig,
) -> Result<(ComplexPoint, ComplexPoint), RayError> {
    let depth = working_depth(kappa, s, t, cfg)?;
    let potentials = crate::combinatorics::model_orbit(t, depth + 1);
    let top = depth.min(potentials.iter().take_while(|p| p.is_finite()).count() - 1);
    let kap = DualComplex::variable(kappa);
    let mut z = DualComplex::constant(Complex64::new(potentials[top], 0.0) + two_pi_i(s.entry(top + 1)?)) - kap;
    for k in (1..=top).rev() {
        if z.value.re <= 0.0 && z.value.im.abs() <= cfg.boundary_eps {
            return Err(RayError::BranchCut { level: k, z: z.value });
        }
        z = z.ln() - kap + DualComplex::constant(two_pi_i(s.entry(k)?));
    }
    Ok((z.value, z.d_kappa))
}

/// `(g_s^κ)'(t) = Π_{k≥1} (F^k(t) + 1) / g_{σ^k s}(F^k(t))`.
///
/// Each factor is evaluated as `1 / (1 + x_k)` with
/// `x_k = (z_k - F^k(t) - 1) / (F^k(t) + 1)`, which keeps full precision
/// even when `z_k` is huge. Levels above the seed use the asymptotic form
/// `z_k = F^k(t) - κ + 2πi s_{k+1}` until the factors round to 1.
pub fn ray_derivative_t(kappa: ComplexPoint, s: &ExternalAddress, t: f64, cfg: &EvalConfig) -> Result<ComplexPoint, RayError> {
    let chain = ray_chain(kappa, s, t, cfg)?;
    Ok(derivative_from_chain(kappa, s, &chain))
}

pub(crate) fn derivative_from_chain(kappa: ComplexPoint, s: &ExternalAddress, chain: &Chain) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let mut product = one;
    let top = chain.levels.len() - 1;
    for k in 1..=top {
        let fk = chain.potentials[k];
        let x = (chain.levels[k] - fk - 1.0) / (fk + 1.0);
        product *= one / (one + x);
    }
    // continue with asymptotic levels above the seed
    let mut fk = chain.potentials[top];
    let mut k = top;
    loop {
        fk = model_iter(fk, 1);
        k += 1;
        if !fk.is_finite() {
            break;
        }
        let Ok(next) = s.entry(k + 1) else { break };
        let x = (two_pi_i(next) - kappa - 1.0) / (fk + 1.0);
        if x.norm() < 1e-18 {
            break;
        }
        product *= one / (one + x);
    }
    product
}

/// `(g_s^κ)''(t)` by central differences of the analytic first derivative,
/// with step `1e-5 max(1, |t|)`; falls back to a one-sided stencil when
/// `t - h` would leave the domain.
pub fn ray_second_derivative_t(kappa: ComplexPoint, s: &ExternalAddress, t: f64, cfg: &EvalConfig) -> Result<ComplexPoint, RayError> {
    let h = 1e-5 * t.abs().max(1.0);
    let d = |x: f64| ray_derivative_t(kappa, s, x, cfg);
    if t - h > potential_bounds(s).t_min {
        Ok((d(t + h)? - d(t - h)?) / (2.0 * h))
    } else {
        Ok((d(t)? * -3.0 + d(t + h)? * 4.0 - d(t + 2.0 * h)?) / (2.0 * h))
    }
}

/// `eval_ray` with both derivatives filled in.
pub fn eval_ray_full(kappa: ComplexPoint, s: &ExternalAddress, t: f64, cfg: &EvalConfig) -> Result<RaySample, RayError> {
    let chain = ray_chain(kappa, s, t, cfg)?;
    let mut sample = sample_from_chain(t, &chain);
    sample.dz_dt = Some(derivative_from_chain(kappa, s, &chain));
    sample.dz_dkappa = Some(eval_ray_dual(kappa, s, t, cfg)?.1);
    Ok(sample)
}

/// Right-hand side of the asymptotic estimate
/// `|r_{κ,s}(t)| <= 2e^{-t}(K + 2π|s_2| + 12)`.
pub fn residual_bound(s: &ExternalAddress, t: f64, k: f64) -> f64 {
    2.0 * (-t).exp() * (k + 2.0 * PI * s.entry_magnitude(2) + 12.0)
}
