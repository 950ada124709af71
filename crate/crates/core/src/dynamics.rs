//! The map `E_κ(z) = exp(z + κ)`, its orbits, the static partition into
//! strips `R_j`, and the inverse branches `L_{κ,j}`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ComplexPoint = Complex64;

/// Largest real part whose exponential is still finite.
const EXP_LIMIT: f64 = 709.782_712_893_384;

pub const DEFAULT_BOUNDARY_EPS: f64 = 1e-12;
pub const DEFAULT_ESCAPE_RE: f64 = 50.0;

/// Stand-in for a value whose real part overflowed.
pub const OVERFLOW: ComplexPoint = Complex64::new(f64::INFINITY, 0.0);

pub fn is_overflow(z: ComplexPoint) -> bool {
    z.re == f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("point {z} lies on the boundary of the static partition")]
    OnBoundary { z: ComplexPoint },
    #[error("point {z} lies on the branch cut of the principal logarithm")]
    BranchCut { z: ComplexPoint },
    #[error("orbit overflowed after {} address entries", entries.len())]
    Truncated { entries: Vec<i64> },
    #[error("orbit meets the strip boundary at entry {index}")]
    BoundaryAtEntry { index: usize, entries: Vec<i64> },
}

/// `E_κ(z)`, or [`OVERFLOW`] when `Re(z + κ)` is too large to exponentiate.
pub fn exp_map(kappa: ComplexPoint, z: ComplexPoint) -> ComplexPoint {
    let w = z + kappa;
    if is_overflow(z) || w.re > EXP_LIMIT || w.re.is_nan() {
        return OVERFLOW;
    }
    w.exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub points: Vec<ComplexPoint>,
    pub escaped: bool,
    pub escape_index: Option<usize>,
}

impl OrbitRecord {
    /// CSV with columns `n, re, im`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "re", "im"])?;
        for (n, z) in self.points.iter().enumerate() {
            w.write_record([n.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Iterates `E_κ` from `z0` for at most `n_max` steps, stopping at the first
/// point whose real part exceeds `escape_re`.
///
/// The verdict is one-sided: `escaped = true` means the orbit reached the
/// half plane `Re > escape_re`, after which the next modulus is at least
/// `e^{escape_re + Re κ}`; `escaped = false` only means "not detected".
pub fn orbit(kappa: ComplexPoint, z0: ComplexPoint, n_max: usize, escape_re: f64) -> OrbitRecord {
    let mut points = Vec::with_capacity(n_max.min(1024) + 1);
    let mut z = z0;
    for n in 0..=n_max {
        points.push(z);
        if z.re > escape_re {
            return OrbitRecord { points, escaped: true, escape_index: Some(n) };
        }
        if n < n_max {
            z = exp_map(kappa, z);
        }
    }
    OrbitRecord { points, escaped: false, escape_index: None }
}

/// Index of the first iterate with real part above `escape_re`, without
/// storing the orbit.
pub fn escape_time(kappa: ComplexPoint, z0: ComplexPoint, n_max: usize, escape_re: f64) -> Option<usize> {
    let mut z = z0;
    for n in 0..=n_max {
        if z.re > escape_re {
            return Some(n);
        }
        z = exp_map(kappa, z);
    }
    None
}

/// Distance of `Im z + Im κ` to the nearest strip boundary `π + 2πm`.
fn boundary_distance(kappa: ComplexPoint, z: ComplexPoint) -> f64 {
    let r = (z.im + kappa.im - PI).rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

/// The `j` with `z ∈ R_j`, i.e. `-Im κ - π + 2πj < Im z < -Im κ + π + 2πj`.
pub fn strip_index(kappa: ComplexPoint, z: ComplexPoint, eps: f64) -> Result<i64, DynamicsError> {
    if boundary_distance(kappa, z) < eps {
        return Err(DynamicsError::OnBoundary { z });
    }
    Ok(((z.im + kappa.im) / (2.0 * PI)).round() as i64)
}

/// `L_{κ,j}(z) = Log z - κ + 2πij` on the slit plane.
pub fn log_branch(kappa: ComplexPoint, j: i64, z: ComplexPoint, eps: f64) -> Result<ComplexPoint, DynamicsError> {
    if z.re <= 0.0 && z.im.abs() <= eps {
        return Err(DynamicsError::BranchCut { z });
    }
    Ok(z.ln() - kappa + Complex64::new(0.0, 2.0 * PI * j as f64))
}

/// `s_1 .. s_n` of the orbit of `z`.
///
/// Fails with `Truncated` (carrying the entries found) when the orbit
/// overflows first, and with `BoundaryAtEntry` when an iterate lands on a
/// strip boundary.
pub fn external_address(kappa: ComplexPoint, z: ComplexPoint, n: usize) -> Result<Vec<i64>, DynamicsError> {
    let mut entries = Vec::with_capacity(n);
    let mut w = z;
    for index in 1..=n {
        if is_overflow(w) || !w.im.is_finite() {
            return Err(DynamicsError::Truncated { entries });
        }
        match strip_index(kappa, w, DEFAULT_BOUNDARY_EPS) {
            Ok(j) => entries.push(j),
            Err(_) => return Err(DynamicsError::BoundaryAtEntry { index, entries }),
        }
        if index < n {
            w = exp_map(kappa, w);
        }
    }
    Ok(entries)
}

/// The longest prefix of the external address of `z` that floating point
/// iteration determines unambiguously.
///
/// Tracks a first-order bound on the absolute error of each iterate and
/// stops once that error could move the point across a strip boundary.
pub fn certified_address_prefix(kappa: ComplexPoint, z: ComplexPoint, n_max: usize) -> Vec<i64> {
    let ulp = f64::EPSILON;
    let mut entries = Vec::new();
    let mut w = z;
    let mut err = 0.0f64;
    for _ in 0..n_max {
        if is_overflow(w) || !w.is_finite() {
            break;
        }
        let margin = boundary_distance(kappa, w) - 4.0 * ulp * (w.im.abs() + kappa.im.abs());
        if err >= 0.25 * margin {
            break;
        }
        match strip_index(kappa, w, DEFAULT_BOUNDARY_EPS) {
            Ok(j) => entries.push(j),
            Err(_) => break,
        }
        let sum = w + kappa;
        let next = exp_map(kappa, w);
        // exp turns an absolute error in the exponent into a relative one
        err = next.norm() * (err + ulp * sum.norm() + 2.0 * ulp);
        w = next;
    }
    entries
}
