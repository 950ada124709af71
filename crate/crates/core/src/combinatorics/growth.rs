//! The model function `F(t) = e^t - 1` and its iterates.
//!
//! `F` transports potentials under one step of the exponential map, so
//! almost every quantity in the crate is expressed through it. Forward
//! iterates overflow quickly (`F^3(4)` is already past `f64::MAX`); they
//! saturate to `+inf`, which callers read as "asymptotic regime".

/// `F(t) = e^t - 1`, exact in relative terms near zero.
#[inline]
pub fn model(t: f64) -> f64 {
    t.exp_m1()
}

/// `F^{-1}(y) = log(1 + y)`.
#[inline]
pub fn model_inv(y: f64) -> f64 {
    y.ln_1p()
}

/// `F^{n}(t)`; negative `n` applies the inverse `|n|` times.
///
/// Forward iteration stops early once the value saturates to `+inf`.
pub fn model_iter(t: f64, n: i64) -> f64 {
    let mut x = t;
    if n >= 0 {
        for _ in 0..n {
            if x.is_infinite() {
                break;
            }
            x = model(x);
        }
    } else {
        for _ in 0..n.unsigned_abs() {
            x = model_inv(x);
        }
    }
    x
}

/// `log(F^{n}(t))` without materialising the overflowed value.
///
/// For `n >= 1` with `F^{n}(t) = +inf`, uses `log(e^x - 1) = x + log(1 - e^{-x})`
/// with `x = F^{n-1}(t)`; the correction underflows to zero there.
pub fn log_model_iter(t: f64, n: u32) -> f64 {
    if n == 0 {
        return t.ln();
    }
    let prev = model_iter(t, i64::from(n) - 1);
    let cur = model(prev);
    if cur.is_finite() {
        cur.ln()
    } else {
        prev + (-(-prev).exp()).ln_1p()
    }
}

/// The orbit `t, F(t), F^2(t), ...` truncated after `len` terms or at the
/// first saturated value (which is included).
pub fn model_orbit(t: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut x = t;
    for _ in 0..len {
        out.push(x);
        if x.is_infinite() {
            break;
        }
        x = model(x);
    }
    out
}
