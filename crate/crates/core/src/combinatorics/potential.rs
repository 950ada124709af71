use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::address::ExternalAddress;
use super::growth::model_iter;

/// Minimal potential `t_s`, the majorant `t_s*`, and the slow/fast flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialBounds {
    pub t_star: f64,
    pub t_min: f64,
    pub is_fast: bool,
}

/// `t_s* = sup_n F^{-(n-1)}(|s_n|)` together with `t_s`.
///
/// For eventually periodic addresses every term is bounded by
/// `F^{-(n-1)}(max |s|)`, so the scan stops as soon as that envelope falls
/// below the running maximum. Generated addresses are scanned until the
/// entries saturate; the supremum is then at least the limit `growth_x`.
pub fn potential_bounds(s: &ExternalAddress) -> PotentialBounds {
    match s {
        ExternalAddress::EventuallyPeriodic { preperiod, period } => {
            let envelope = preperiod
                .iter()
                .chain(period)
                .map(|e| e.unsigned_abs() as f64)
                .fold(0.0, f64::max);
            let span = preperiod.len() + period.len();
            let mut best = 0.0f64;
            let mut n = 1usize;
            loop {
                let term = model_iter(s.entry_magnitude(n), -(n as i64 - 1));
                best = best.max(term);
                // every later term is at most F^{-n}(envelope)
                if n >= span && model_iter(envelope, -(n as i64)) <= best {
                    break;
                }
                n += 1;
            }
            PotentialBounds { t_star: best, t_min: 0.0, is_fast: false }
        }
        ExternalAddress::Generated { growth_x, .. } => {
            let mut best = *growth_x;
            let mut n = 1usize;
            loop {
                let mag = s.entry_magnitude(n);
                if !mag.is_finite() || mag > 1e300 {
                    break;
                }
                best = best.max(model_iter(mag, -(n as i64 - 1)));
                n += 1;
            }
            PotentialBounds { t_star: best, t_min: *growth_x, is_fast: true }
        }
    }
}

/// `t_s^K = t_s* + 2 log(K + 3)`: the asymptotic ray estimate holds above it.
pub fn t_s_k(s: &ExternalAddress, k: f64) -> f64 {
    potential_bounds(s).t_star + 2.0 * (k + 3.0).ln()
}

/// Potential above which the first- and second-derivative estimates of a
/// dynamic ray are guaranteed, for `|kappa| <= k`.
///
/// Makes the unnamed "ray tail" constants explicit: besides `t >= t_s^K`
/// it requires `e^{t/2} >= 4e (12K + 24 + 8π(e^{t_s*} + 1))`, which is what
/// the summation estimates for `|g' - 1|` and `|g''|` need.
pub fn tail_threshold(s: &ExternalAddress, k: f64) -> f64 {
    let t_star = potential_bounds(s).t_star;
    let k = k.max(0.0);
    let derivative = 2.0
        * (4.0 * std::f64::consts::E * (12.0 * k + 24.0 + 8.0 * PI * (t_star.exp() + 1.0))).ln();
    (t_star + 2.0 * (k + 3.0).ln()).max(derivative)
}
