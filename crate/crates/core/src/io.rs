//! CSV and JSON forms of traces.
//!
//! CSV floats use Rust's shortest round-trip formatting and JSON is written
//! with `float_roundtrip`, so reading back reproduces every value exactly.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::param_rays::{ParamSample, ParamTrace, ParamTraceConfig, VerifyReport};
use crate::ray::{RaySample, RayTrace, TraceConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
}

#[derive(Debug, Serialize, Deserialize)]
struct RayRow {
    t: f64,
    re: f64,
    im: f64,
    residual: f64,
    depth: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamRow {
    t: f64,
    re_kappa: f64,
    im_kappa: f64,
    residual: f64,
    iters: usize,
}

/// CSV with columns `t, re, im, residual, depth`.
pub fn write_ray_csv<W: Write>(trace: &RayTrace, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for x in &trace.samples {
        w.serialize(RayRow { t: x.t, re: x.z.re, im: x.z.im, residual: x.residual.unwrap_or(0.0), depth: x.depth_used })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ray_csv<R: Read>(input: R) -> Result<Vec<RaySample>, IoError> {
    csv::Reader::from_reader(input)
        .deserialize::<RayRow>()
        .map(|row| {
            let r = row?;
            Ok(RaySample {
                t: r.t,
                z: Complex64::new(r.re, r.im),
                dz_dt: None,
                dz_dkappa: None,
                residual: Some(r.residual),
                depth_used: r.depth,
            })
        })
        .collect()
}

/// CSV with columns `t, re_kappa, im_kappa, residual, iters`.
pub fn write_param_csv<W: Write>(trace: &ParamTrace, out: W) -> Result<(), IoError> {
    trace.write_csv(out)?;
    Ok(())
}

pub fn read_param_csv<R: Read>(input: R) -> Result<Vec<ParamSample>, IoError> {
    csv::Reader::from_reader(input)
        .deserialize::<ParamRow>()
        .map(|row| {
            let r = row?;
            Ok(ParamSample { t: r.t, kappa: Complex64::new(r.re_kappa, r.im_kappa), residual: r.residual, newton_iters: r.iters })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTraceDocument {
    pub schema_version: u32,
    pub config: TraceConfig,
    #[serde(flatten)]
    pub trace: RayTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTraceDocument {
    pub schema_version: u32,
    pub config: ParamTraceConfig,
    pub verify: VerifyReport,
    #[serde(flatten)]
    pub trace: ParamTrace,
}

/// Wraps any report with the schema version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Document<T> {
    pub fn new(body: T) -> Self {
        Self { schema_version: SCHEMA_VERSION, body }
    }
}

pub fn write_ray_json<W: Write>(trace: &RayTrace, config: &TraceConfig, out: W) -> Result<(), IoError> {
    let doc = RayTraceDocument { schema_version: SCHEMA_VERSION, config: *config, trace: trace.clone() };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn read_ray_json<R: Read>(input: R) -> Result<RayTraceDocument, IoError> {
    let doc: RayTraceDocument = serde_json::from_reader(input)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(IoError::Schema(doc.schema_version));
    }
    Ok(doc)
}

pub fn write_param_json<W: Write>(
    trace: &ParamTrace,
    config: &ParamTraceConfig,
    verify: &VerifyReport,
    out: W,
) -> Result<(), IoError> {
    let doc = ParamTraceDocument {
        schema_version: SCHEMA_VERSION,
        config: *config,
        verify: verify.clone(),
        trace: trace.clone(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn read_param_json<R: Read>(input: R) -> Result<ParamTraceDocument, IoError> {
    let doc: ParamTraceDocument = serde_json::from_reader(input)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(IoError::Schema(doc.schema_version));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param_rays::{trace_parameter_ray, verify_trace};
    use crate::ray::trace_ray;

    fn ray() -> RayTrace {
        trace_ray(Complex64::new(0.3, -0.8), &"-1 2|0 1".parse().unwrap(), 1.5, 8.0, &TraceConfig::default()).unwrap()
    }

    #[test]
    fn ray_csv_round_trip() {
        let trace = ray();
        let mut buf = Vec::new();
        write_ray_csv(&trace, &mut buf).unwrap();
        assert!(buf.starts_with(b"t,re,im,residual,depth\n"));
        let back = read_ray_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), trace.samples.len());
        for (a, b) in trace.samples.iter().zip(&back) {
            assert_eq!((a.t, a.z, a.residual, a.depth_used), (b.t, b.z, b.residual, b.depth_used));
        }
    }

    #[test]
    fn ray_json_round_trip() {
        let trace = ray();
        let mut buf = Vec::new();
        write_ray_json(&trace, &TraceConfig::default(), &mut buf).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(value["schema_version"], 1);
        assert_eq!(value["address"], "-1 2|0 1");
        let doc = read_ray_json(buf.as_slice()).unwrap();
        assert_eq!(doc.trace, trace);
    }

    #[test]
    fn param_round_trips() {
        let s = "1|0".parse().unwrap();
        let cfg = ParamTraceConfig::default();
        let trace = trace_parameter_ray(&s, 22.0, 18.0, &cfg).unwrap();
        let report = verify_trace(&trace);
        let mut csv_buf = Vec::new();
        write_param_csv(&trace, &mut csv_buf).unwrap();
        assert!(csv_buf.starts_with(b"t,re_kappa,im_kappa,residual,iters\n"));
        assert_eq!(read_param_csv(csv_buf.as_slice()).unwrap(), trace.samples);
        let mut json_buf = Vec::new();
        write_param_json(&trace, &cfg, &report, &mut json_buf).unwrap();
        let doc = read_param_json(json_buf.as_slice()).unwrap();
        assert_eq!(doc.trace, trace);
        assert_eq!(doc.verify, report);
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let mut buf = Vec::new();
        write_ray_json(&ray(), &TraceConfig::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("\"schema_version\": 1", "\"schema_version\": 7", 1);
        assert!(matches!(read_ray_json(text.as_bytes()), Err(IoError::Schema(7))));
    }
}
