//! Run settings shared by the CLI and config files.
//!
//! A config file holds one `key=value` per line; `#` starts a comment.
//! Keys use the flag names with `_` in place of `-`.

use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value '{value}' for {key}: {reason}")]
    BadValue { key: String, value: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
    Ppm,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "ppm" => Ok(Self::Ppm),
            other => Err(format!("expected csv, json or ppm, got '{other}'")),
        }
    }
}

/// `"re,im"`, or a bare real number.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let s = s.trim().replace('\u{2212}', "-");
    let (re, im) = s.split_once(',').unwrap_or((s.as_str(), "0"));
    let re: f64 = re.trim().parse().map_err(|_| format!("expected re,im, got '{s}'"))?;
    let im: f64 = im.trim().parse().map_err(|_| format!("expected re,im, got '{s}'"))?;
    if !(re.is_finite() && im.is_finite()) {
        return Err("components must be finite".into());
    }
    Ok(Complex64::new(re, im))
}

/// `"lo:hi"` with `lo < hi`.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.trim().split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower end '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper end '{hi}'"))?;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(format!("need finite lo < hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

pub fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().replace('\u{2212}', "-").parse().map_err(|_| format!("expected a number, got '{s}'"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

pub fn parse_count(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, got '{s}'")),
    }
}

/// Every setting is optional so that layers can be merged:
/// defaults < config file < flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub address: Option<String>,
    pub kappa: Option<Complex64>,
    pub t: Option<f64>,
    pub t_range: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub center: Option<Complex64>,
    pub width_units: Option<f64>,
    pub width_px: Option<usize>,
    pub height_px: Option<usize>,
    pub max_iter: Option<usize>,
    pub escape_re: Option<f64>,
    pub max_spatial_step: Option<f64>,
    pub seed_threshold: Option<f64>,
    pub depth_cap: Option<usize>,
}

impl Settings {
    /// Values in `over` replace values in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            address: over.address.or(self.address),
            kappa: over.kappa.or(self.kappa),
            t: over.t.or(self.t),
            t_range: over.t_range.or(self.t_range),
            out: over.out.or(self.out),
            format: over.format.or(self.format),
            center: over.center.or(self.center),
            width_units: over.width_units.or(self.width_units),
            width_px: over.width_px.or(self.width_px),
            height_px: over.height_px.or(self.height_px),
            max_iter: over.max_iter.or(self.max_iter),
            escape_re: over.escape_re.or(self.escape_re),
            max_spatial_step: over.max_spatial_step.or(self.max_spatial_step),
            seed_threshold: over.seed_threshold.or(self.seed_threshold),
            depth_cap: over.depth_cap.or(self.depth_cap),
        }
    }

    pub fn parse_config(text: &str) -> Result<Settings, ConfigError> {
        let mut out = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: line_no })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |reason: String| ConfigError::BadValue { key: key.to_string(), value: value.to_string(), reason };
            match key {
                "address" => out.address = Some(value.trim_matches('"').to_string()),
                "kappa" => out.kappa = Some(parse_complex(value).map_err(bad)?),
                "t" => out.t = Some(parse_real(value).map_err(bad)?),
                "t_range" => out.t_range = Some(parse_range(value).map_err(bad)?),
                "out" => out.out = Some(PathBuf::from(value)),
                "format" => out.format = Some(value.parse().map_err(bad)?),
                "center" => out.center = Some(parse_complex(value).map_err(bad)?),
                "width_units" => out.width_units = Some(parse_real(value).map_err(bad)?),
                "width_px" => out.width_px = Some(parse_count(value).map_err(bad)?),
                "height_px" => out.height_px = Some(parse_count(value).map_err(bad)?),
                "max_iter" => out.max_iter = Some(parse_count(value).map_err(bad)?),
                "escape_re" => out.escape_re = Some(parse_real(value).map_err(bad)?),
                "max_spatial_step" => out.max_spatial_step = Some(parse_real(value).map_err(bad)?),
                "seed_threshold" => out.seed_threshold = Some(parse_real(value).map_err(bad)?),
                "depth_cap" => out.depth_cap = Some(parse_count(value).map_err(bad)?),
                _ => return Err(ConfigError::UnknownKey { line: line_no, key: key.to_string() }),
            }
        }
        Ok(out)
    }
}
