use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use exprays::combinatorics::ExternalAddress;
use exprays::config::{parse_complex, parse_count, parse_range, parse_real, Format, Settings};
use exprays::dynamics::ComplexPoint;
use exprays::io::{write_param_csv, write_param_json, write_ray_csv, write_ray_json, Document};
use exprays::param_rays::{trace_parameter_ray, verify_trace, ParamTraceConfig};
use exprays::ray::{eval_ray, trace_ray, EvalConfig, TraceConfig};
use exprays::render::{render_dynamic_plane, render_parameter_plane, ImageSpec};
use exprays::variation::dynamic_ray_variation;
use exprays::verify::{run_suite, VerifyCase};

#[derive(Parser)]
#[command(name = "exprays", version, about = "Dynamic and parameter rays of exp(z + kappa)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Evaluate one ray point; prints t, re, im, residual.
    Eval,
    /// Trace a dynamic ray over --t-range.
    TraceDyn,
    /// Trace a parameter ray from the top of --t-range down to the bottom.
    TraceParam,
    /// Run the invariant suites of all modules; nonzero exit on any violation.
    Verify,
    /// Variation of a dynamic ray beyond the bottom of --t-range.
    Variation,
    /// Render the dynamical plane, overlaying the ray of --address if given.
    RenderDyn,
    /// Render the parameter plane, overlaying the parameter ray of --address if given.
    RenderParam,
}

#[derive(Args)]
struct Flags {
    /// External address, e.g. "1 | 0 -1" or "gen x=1 y=2".
    #[arg(long, global = true, value_parser = parse_address)]
    address: Option<String>,
    /// Parameter as re,im.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    kappa: Option<Complex64>,
    /// Potential for `eval`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_real)]
    t: Option<f64>,
    /// Potential range lo:hi.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_range)]
    t_range: Option<(f64, f64)>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = |s: &str| s.parse::<Format>())]
    format: Option<Format>,
    /// Config file of key=value lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Image centre as re,im.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    center: Option<Complex64>,
    #[arg(long, global = true, value_parser = parse_real)]
    width_units: Option<f64>,
    #[arg(long, global = true, value_parser = parse_count)]
    width_px: Option<usize>,
    #[arg(long, global = true, value_parser = parse_count)]
    height_px: Option<usize>,
    #[arg(long, global = true, value_parser = parse_count)]
    max_iter: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_real)]
    escape_re: Option<f64>,
    /// Largest distance between consecutive dynamic-ray samples.
    #[arg(long, global = true, value_parser = parse_real)]
    max_spatial_step: Option<f64>,
    /// Potential above which the ray recursion is seeded.
    #[arg(long, global = true, value_parser = parse_real)]
    seed_threshold: Option<f64>,
    #[arg(long, global = true, value_parser = parse_count)]
    depth_cap: Option<usize>,
}

fn parse_address(s: &str) -> Result<String, String> {
    s.parse::<ExternalAddress>().map(|_| s.to_string()).map_err(|e| e.to_string())
}

impl Flags {
    fn settings(&self) -> Settings {
        Settings {
            address: self.address.clone(),
            kappa: self.kappa,
            t: self.t,
            t_range: self.t_range,
            out: self.out.clone(),
            format: self.format,
            center: self.center,
            width_units: self.width_units,
            width_px: self.width_px,
            height_px: self.height_px,
            max_iter: self.max_iter,
            escape_re: self.escape_re,
            max_spatial_step: self.max_spatial_step,
            seed_threshold: self.seed_threshold,
            depth_cap: self.depth_cap,
        }
    }
}

enum Failure {
    Usage(String),
    Domain(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

fn io_fail(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(format!("output: {e}"))
}

struct Run {
    command: Command,
    set: Settings,
}

impl Run {
    fn address(&self) -> Result<ExternalAddress, Failure> {
        let text = self.set.address.as_deref().ok_or_else(|| usage("--address is required"))?;
        text.parse().map_err(|e| usage(format!("--address: {e}")))
    }

    fn kappa(&self) -> Result<ComplexPoint, Failure> {
        self.set.kappa.ok_or_else(|| usage("--kappa is required"))
    }

    fn t_range(&self) -> Result<(f64, f64), Failure> {
        self.set.t_range.ok_or_else(|| usage("--t-range is required"))
    }

    fn eval_config(&self) -> EvalConfig {
        let d = EvalConfig::default();
        EvalConfig {
            threshold: self.set.seed_threshold.unwrap_or(d.threshold),
            depth_cap: self.set.depth_cap.unwrap_or(d.depth_cap),
            ..d
        }
    }

    fn trace_config(&self) -> TraceConfig {
        let d = TraceConfig::default();
        TraceConfig { max_spatial_step: self.set.max_spatial_step.unwrap_or(d.max_spatial_step), eval: self.eval_config(), ..d }
    }

    fn param_config(&self) -> ParamTraceConfig {
        let mut cfg = ParamTraceConfig::default();
        cfg.newton.eval = self.eval_config();
        cfg
    }

    fn image_spec(&self, default_center: ComplexPoint) -> ImageSpec {
        let d = ImageSpec::default();
        ImageSpec {
            center: self.set.center.unwrap_or(default_center),
            width_units: self.set.width_units.unwrap_or(d.width_units),
            width_px: self.set.width_px.unwrap_or(d.width_px),
            height_px: self.set.height_px.unwrap_or(d.height_px),
            max_iter: self.set.max_iter.unwrap_or(d.max_iter),
            escape_re: self.set.escape_re.unwrap_or(d.escape_re),
        }
    }

    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
        let f = self.set.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(usage(format!("--format: {f:?} is not available for this command").to_lowercase()))
        }
    }

    fn output(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.set.out {
            Some(path) => {
                Box::new(BufWriter::new(File::create(path).map_err(|e| usage(format!("--out: {}: {e}", path.display())))?))
            }
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn write_json<T: Serialize>(&self, body: T) -> Result<(), Failure> {
        let mut out = self.output()?;
        serde_json::to_writer_pretty(&mut out, &Document::new(body)).map_err(io_fail)?;
        writeln!(out).and_then(|_| out.flush()).map_err(io_fail)
    }

    fn run(&self) -> Result<(), Failure> {
        match self.command {
            Command::Eval => self.eval(),
            Command::TraceDyn => self.trace_dyn(),
            Command::TraceParam => self.trace_param(),
            Command::Verify => self.verify(),
            Command::Variation => self.variation(),
            Command::RenderDyn => self.render(false),
            Command::RenderParam => self.render(true),
        }
    }

    fn eval(&self) -> Result<(), Failure> {
        let (s, kappa) = (self.address()?, self.kappa()?);
        let t = self.set.t.ok_or_else(|| usage("--t is required"))?;
        let sample = eval_ray(kappa, &s, t, &self.eval_config()).map_err(domain)?;
        if self.set.format == Some(Format::Json) {
            return self.write_json(sample);
        }
        let mut out = self.output()?;
        let residual = sample.residual.unwrap_or(0.0);
        writeln!(out, "t={} re={} im={} residual={:e}", sample.t, sample.z.re, sample.z.im, residual)
            .and_then(|_| out.flush())
            .map_err(io_fail)
    }

    fn trace_dyn(&self) -> Result<(), Failure> {
        let (s, kappa, (lo, hi)) = (self.address()?, self.kappa()?, self.t_range()?);
        let format = self.format(Format::Csv, &[Format::Csv, Format::Json])?;
        let cfg = self.trace_config();
        let trace = trace_ray(kappa, &s, lo, hi, &cfg).map_err(domain)?;
        let mut out = self.output()?;
        match format {
            Format::Json => write_ray_json(&trace, &cfg, &mut out),
            _ => write_ray_csv(&trace, &mut out),
        }
        .map_err(io_fail)?;
        out.flush().map_err(io_fail)
    }

    fn trace_param(&self) -> Result<(), Failure> {
        let (s, (lo, hi)) = (self.address()?, self.t_range()?);
        let format = self.format(Format::Csv, &[Format::Csv, Format::Json])?;
        let cfg = self.param_config();
        let trace = trace_parameter_ray(&s, hi, lo, &cfg).map_err(domain)?;
        let report = verify_trace(&trace);
        let mut out = self.output()?;
        match format {
            Format::Json => write_param_json(&trace, &cfg, &report, &mut out),
            _ => write_param_csv(&trace, &mut out),
        }
        .map_err(io_fail)?;
        out.flush().map_err(io_fail)?;
        if trace.stopped_early {
            let last = trace.samples.last().map_or(hi, |x| x.t);
            return Err(domain(format!("trace stopped early at t = {last}")));
        }
        if !report.is_clean() {
            return Err(domain(format!("{} check violations", report.violations.len())));
        }
        Ok(())
    }

    fn verify(&self) -> Result<(), Failure> {
        let format = self.format(Format::Csv, &[Format::Csv, Format::Json])?;
        let case = VerifyCase {
            address: self.set.address.as_ref().map_or(Ok(ExternalAddress::constant(0)), |_| self.address())?,
            kappa: self.set.kappa.unwrap_or(Complex64::new(-2.0, 0.0)),
            t_range: self.set.t_range.unwrap_or((1.0, 20.0)),
            eval: self.eval_config(),
        };
        let checks = run_suite(&case);
        let failed = checks.iter().filter(|c| !c.passed).count();
        if format == Format::Json {
            self.write_json(&checks)?;
        } else {
            let mut out = self.output()?;
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{tag} {}::{} {}", c.module, c.name, c.detail).map_err(io_fail)?;
            }
            out.flush().map_err(io_fail)?;
        }
        if failed > 0 {
            return Err(domain(format!("{failed} of {} checks failed", checks.len())));
        }
        Ok(())
    }

    fn variation(&self) -> Result<(), Failure> {
        let (s, kappa, (lo, hi)) = (self.address()?, self.kappa()?, self.t_range()?);
        let v = dynamic_ray_variation(kappa, &s, lo, hi).map_err(domain)?;
        if self.set.format == Some(Format::Json) {
            return self.write_json(&v);
        }
        let mut out = self.output()?;
        let text = format!(
            "variation={} tail_bound={:?}\nderivative_variation={}\nN={} bound={}\nverified_range={}:{}\nwithin_bound={} derivative_check={}",
            v.alpha.integral,
            v.alpha.tail_bound,
            v.derivative_alpha.total(),
            v.n,
            v.bound,
            v.verified_range.0,
            v.verified_range.1,
            v.within_bound,
            v.derivative_check
        );
        writeln!(out, "{text}").and_then(|_| out.flush()).map_err(io_fail)
    }

    fn render(&self, parameter_plane: bool) -> Result<(), Failure> {
        self.format(Format::Ppm, &[Format::Ppm])?;
        let spec;
        let mut overlay = Vec::new();
        let img = if parameter_plane {
            spec = self.image_spec(Complex64::new(-1.0, 0.0));
            if self.set.address.is_some() {
                let (lo, hi) = self.set.t_range.unwrap_or((1.0, 40.0));
                let trace = trace_parameter_ray(&self.address()?, hi, lo, &self.param_config()).map_err(domain)?;
                overlay = trace.points().collect();
            }
            render_parameter_plane(&spec, [overlay.as_slice()])
        } else {
            let kappa = self.kappa()?;
            spec = self.image_spec(Complex64::new(0.0, 0.0));
            if self.set.address.is_some() {
                let (lo, hi) = self.t_range()?;
                let trace = trace_ray(kappa, &self.address()?, lo, hi, &self.trace_config()).map_err(domain)?;
                overlay = trace.points().collect();
            }
            render_dynamic_plane(kappa, &spec, [overlay.as_slice()])
        };
        let mut out = self.output()?;
        img.write_ppm(&mut out).and_then(|_| out.flush()).map_err(io_fail)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut set = Settings::default();
    if let Some(path) = &cli.flags.config {
        let parsed = std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| Settings::parse_config(&text).map_err(|e| e.to_string()));
        match parsed {
            Ok(file) => set = set.overlay(file),
            Err(e) => {
                eprintln!("error: --config {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
    }
    let run = Run { command: cli.command, set: set.overlay(cli.flags.settings()) };
    match run.run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
