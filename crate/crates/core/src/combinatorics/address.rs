use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::growth::model_iter;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AddressError {
    #[error("invalid address literal {literal:?}: {reason}")]
    Parse { literal: String, reason: String },
    #[error("period must contain at least one entry")]
    EmptyPeriod,
    #[error("growth rule needs positive finite x and y (got x={x}, y={y})")]
    InvalidGrowthRule { x: f64, y: f64 },
    #[error("entry {index} of the generated address does not fit in a 64-bit integer")]
    EntryOverflow { index: usize },
    #[error("entry index must be at least 1")]
    ZeroIndex,
    #[error("addresses agree on the first {horizon} entries")]
    UndecidedAtHorizon { horizon: usize },
    #[error("comparing generated addresses needs an explicit horizon")]
    HorizonRequired,
}

/// An exponentially bounded integer sequence `s = (s_1, s_2, ...)`.
///
/// Only two shapes are representable: eventually periodic sequences
/// (bounded, hence slow) and the growth rule
/// `s_k = round(y * F^{k-1}(x))`, which is the crate's only way of
/// producing a fast address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ExternalAddress {
    EventuallyPeriodic { preperiod: Vec<i64>, period: Vec<i64> },
    Generated { growth_x: f64, scale_y: f64 },
}

impl ExternalAddress {
    pub fn periodic(preperiod: Vec<i64>, period: Vec<i64>) -> Result<Self, AddressError> {
        if period.is_empty() {
            return Err(AddressError::EmptyPeriod);
        }
        Ok(Self::EventuallyPeriodic { preperiod, period })
    }

    pub fn generated(growth_x: f64, scale_y: f64) -> Result<Self, AddressError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(growth_x) || !ok(scale_y) {
            return Err(AddressError::InvalidGrowthRule { x: growth_x, y: scale_y });
        }
        Ok(Self::Generated { growth_x, scale_y })
    }

    /// The constant address `j j j ...`.
    pub fn constant(j: i64) -> Self {
        Self::EventuallyPeriodic { preperiod: Vec::new(), period: vec![j] }
    }

    pub fn is_periodic_kind(&self) -> bool {
        matches!(self, Self::EventuallyPeriodic { .. })
    }

    /// `s_k`, 1-based.
    pub fn entry(&self, k: usize) -> Result<i64, AddressError> {
        if k == 0 {
            return Err(AddressError::ZeroIndex);
        }
        match self {
            Self::EventuallyPeriodic { preperiod, period } => {
                let i = k - 1;
                Ok(if i < preperiod.len() {
                    preperiod[i]
                } else {
                    period[(i - preperiod.len()) % period.len()]
                })
            }
            Self::Generated { .. } => {
                let v = self.entry_magnitude(k);
                // 2^63 is the first float outside the i64 range
                if v.is_finite() && v < 2f64.powi(63) {
                    Ok(v as i64)
                } else {
                    Err(AddressError::EntryOverflow { index: k })
                }
            }
        }
    }

    /// `|s_k|` as a float; for generated addresses this stays meaningful
    /// (possibly `+inf`) past the integer range.
    pub fn entry_magnitude(&self, k: usize) -> f64 {
        assert!(k >= 1, "entries are 1-based");
        match self {
            Self::EventuallyPeriodic { .. } => {
                self.entry(k).map(|e| e.unsigned_abs() as f64).unwrap_or(0.0)
            }
            Self::Generated { growth_x, scale_y } => {
                (scale_y * model_iter(*growth_x, k as i64 - 1)).round()
            }
        }
    }

    /// The first `n` entries.
    pub fn prefix(&self, n: usize) -> Result<Vec<i64>, AddressError> {
        (1..=n).map(|k| self.entry(k)).collect()
    }

    /// `σ^n(s)`. Generated addresses shift by replacing `x` with `F^n(x)`,
    /// which evaluates the rule through exactly the same float operations.
    pub fn shift(&self, n: usize) -> Self {
        if n == 0 {
            return self.clone();
        }
        match self {
            Self::EventuallyPeriodic { preperiod, period } => {
                if n <= preperiod.len() {
                    Self::EventuallyPeriodic {
                        preperiod: preperiod[n..].to_vec(),
                        period: period.clone(),
                    }
                } else {
                    let r = (n - preperiod.len()) % period.len();
                    let mut rotated = period[r..].to_vec();
                    rotated.extend_from_slice(&period[..r]);
                    Self::EventuallyPeriodic { preperiod: Vec::new(), period: rotated }
                }
            }
            Self::Generated { growth_x, scale_y } => Self::Generated {
                growth_x: model_iter(*growth_x, n as i64),
                scale_y: *scale_y,
            },
        }
    }

    /// Length of preperiod plus period, or `None` for generated addresses.
    pub(crate) fn periodic_span(&self) -> Option<(usize, usize)> {
        match self {
            Self::EventuallyPeriodic { preperiod, period } => Some((preperiod.len(), period.len())),
            Self::Generated { .. } => None,
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Lexicographic comparison of entry streams.
///
/// Two eventually periodic addresses are always decided (they agree forever
/// once they agree over both preperiods plus the lcm of the periods).
/// Anything involving a generated address needs `horizon`.
pub fn lex_compare(
    a: &ExternalAddress,
    b: &ExternalAddress,
    horizon: Option<usize>,
) -> Result<Ordering, AddressError> {
    let (limit, decided_at_limit) = match (a.periodic_span(), b.periodic_span()) {
        (Some((pa, la)), Some((pb, lb))) => (pa.max(pb) + la / gcd(la, lb) * lb, true),
        _ => (horizon.ok_or(AddressError::HorizonRequired)?, false),
    };
    for k in 1..=limit {
        match a.entry(k)?.cmp(&b.entry(k)?) {
            Ordering::Equal => continue,
            other => return Ok(other),
        }
    }
    if decided_at_limit {
        Ok(Ordering::Equal)
    } else {
        Err(AddressError::UndecidedAtHorizon { horizon: limit })
    }
}

impl fmt::Display for ExternalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EventuallyPeriodic { preperiod, period } => {
                let join = |v: &[i64]| {
                    v.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
                };
                write!(f, "{}|{}", join(preperiod), join(period))
            }
            Self::Generated { growth_x, scale_y } => write!(f, "gen x={growth_x} y={scale_y}"),
        }
    }
}

impl FromStr for ExternalAddress {
    type Err = AddressError;

    /// Accepts `"p1 p2 | q1 q2"` (bar mandatory, preperiod may be empty) and
    /// `"gen x=<real> y=<real>"`. A typographic minus is read as `-`.
    fn from_str(literal: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| AddressError::Parse {
            literal: literal.to_string(),
            reason: reason.to_string(),
        };
        let text = literal.trim().replace('\u{2212}', "-");
        if let Some(rest) = text.strip_prefix("gen") {
            let mut x = None;
            let mut y = None;
            for part in rest.split_whitespace() {
                let (key, value) = part.split_once('=').ok_or_else(|| fail("expected key=value"))?;
                let v: f64 = value.parse().map_err(|_| fail("growth parameter is not a number"))?;
                match key {
                    "x" => x = Some(v),
                    "y" => y = Some(v),
                    _ => return Err(fail("unknown growth key")),
                }
            }
            let (x, y) = x.zip(y).ok_or_else(|| fail("growth rule needs x and y"))?;
            return Self::generated(x, y);
        }
        let (pre, per) = text.split_once('|').ok_or_else(|| fail("missing '|' before the period"))?;
        let ints = |s: &str| -> Result<Vec<i64>, AddressError> {
            s.split_whitespace()
                .map(|w| w.parse::<i64>().map_err(|_| fail("entry is not an integer")))
                .collect()
        };
        let period = ints(per)?;
        if period.is_empty() {
            return Err(fail("period is empty"));
        }
        Self::periodic(ints(pre)?, period)
    }
}

impl TryFrom<String> for ExternalAddress {
    type Error = AddressError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ExternalAddress> for String {
    fn from(a: ExternalAddress) -> String {
        a.to_string()
    }
}
