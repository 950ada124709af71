//! Dynamic rays `g_s^κ` evaluated by pulling back an asymptotic seed.

mod dual;
mod eval;
mod trace;

pub use dual::DualComplex;
pub use eval::{
    approximant, eval_ray, eval_ray_at_depth, eval_ray_dual, eval_ray_full, ray_derivative_t,
    ray_second_derivative_t, residual_bound, seed_depth, EvalConfig, RayError, RaySample,
    DEFAULT_DEPTH_CAP, DEFAULT_SEED_THRESHOLD,
};
pub use trace::{trace_ray, RayTrace, TraceConfig, TraceDiagnostics, TraceError};
