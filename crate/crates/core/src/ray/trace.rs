use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::eval::{derivative_from_chain, ray_chain, residual_bound, EvalConfig, RayError, RaySample};
use crate::combinatorics::{potential_bounds, t_s_k, ExternalAddress};
use crate::dynamics::ComplexPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub max_spatial_step: f64,
    /// Smallest potential step tried before giving up on a gap.
    pub min_dt: f64,
    pub eval: EvalConfig,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { max_spatial_step: 0.1, min_dt: 1e-12, eval: EvalConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceDiagnostics {
    /// Number of rejected steps that were bisected.
    pub refinements: usize,
    /// `residual / (2e^{-t}(|κ| + 2π|s_2| + 12))` for samples with `t >= t_s^K`.
    pub bound_ratios: Vec<Option<f64>>,
    pub max_bound_ratio: Option<f64>,
}

/// Samples of one ray, ordered by strictly decreasing potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub address: ExternalAddress,
    pub kappa: Option<ComplexPoint>,
    pub samples: Vec<RaySample>,
    pub diagnostics: TraceDiagnostics,
}

impl RayTrace {
    pub fn points(&self) -> impl Iterator<Item = ComplexPoint> + '_ {
        self.samples.iter().map(|s| s.z)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("invalid potential range [{t_lo}, {t_hi}]")]
    InvalidRange { t_lo: f64, t_hi: f64 },
    #[error("ray evaluation failed at t = {t}: {source}")]
    Failed {
        t: f64,
        #[source]
        source: RayError,
        partial: Box<RayTrace>,
    },
    #[error("spatial step not resolved at t = {t}")]
    Unresolved { t: f64, partial: Box<RayTrace> },
}

fn full_sample(kappa: ComplexPoint, s: &ExternalAddress, t: f64, cfg: &EvalConfig) -> Result<RaySample, RayError> {
    let chain = ray_chain(kappa, s, t, cfg)?;
    let residual = chain.first_log.map(|l| (l - t).norm()).unwrap_or(0.0);
    Ok(RaySample {
        t,
        z: chain.levels[0],
        dz_dt: Some(derivative_from_chain(kappa, s, &chain)),
        dz_dkappa: None,
        residual: Some(residual),
        depth_used: chain.depth_used,
    })
}

/// Traces `g_s^κ` from `t_hi` down to `t_lo`, bisecting potential steps
/// until consecutive points are at most `max_spatial_step` apart.
pub fn trace_ray(
    kappa: ComplexPoint,
    s: &ExternalAddress,
    t_lo: f64,
    t_hi: f64,
    cfg: &TraceConfig,
) -> Result<RayTrace, TraceError> {
    let t_min = potential_bounds(s).t_min;
    if !(t_lo > t_min && t_lo < t_hi && t_hi.is_finite()) {
        return Err(TraceError::InvalidRange { t_lo, t_hi });
    }
    let k = kappa.norm();
    let tail_start = t_s_k(s, k);
    let mut trace = RayTrace {
        address: s.clone(),
        kappa: Some(kappa),
        samples: Vec::new(),
        diagnostics: TraceDiagnostics::default(),
    };
    let push = |trace: &mut RayTrace, sample: RaySample| {
        let ratio = (sample.t >= tail_start)
            .then(|| sample.residual.unwrap_or(0.0) / residual_bound(s, sample.t, k));
        if let Some(r) = ratio {
            let m = trace.diagnostics.max_bound_ratio.get_or_insert(r);
            *m = m.max(r);
        }
        trace.diagnostics.bound_ratios.push(ratio);
        trace.samples.push(sample);
    };

    let first = match full_sample(kappa, s, t_hi, &cfg.eval) {
        Ok(x) => x,
        Err(source) => return Err(TraceError::Failed { t: t_hi, source, partial: Box::new(trace) }),
    };
    push(&mut trace, first);
    let mut dt = cfg.max_spatial_step.min(t_hi - t_lo);
    loop {
        let last = trace.samples.last().expect("trace has a sample");
        let (t, z) = (last.t, last.z);
        if t <= t_lo {
            break;
        }
        let t_next = (t - dt).max(t_lo);
        let next = match full_sample(kappa, s, t_next, &cfg.eval) {
            Ok(x) => x,
            Err(source) => return Err(TraceError::Failed { t: t_next, source, partial: Box::new(trace) }),
        };
        let dist = (next.z - z).norm();
        if dist > cfg.max_spatial_step {
            trace.diagnostics.refinements += 1;
            dt = (t - t_next) / 2.0;
            if dt < cfg.min_dt {
                return Err(TraceError::Unresolved { t, partial: Box::new(trace) });
            }
            continue;
        }
        push(&mut trace, next);
        if dist < 0.5 * cfg.max_spatial_step {
            dt *= 1.5;
        }
    }
    Ok(trace)
}
