//! `contact-focus` command-line front end.
//!
//! Exit codes: 0 success, 1 verification negative, 2 usage or config error,
//! 3 numerical failure.

mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::closure::{self, default_p_max, parse_rational, CaseFile, ContactPotentialData};
use crate::contact::{
    constraint_drift, duffing_window, fit_decay_rate, locking_diagnostics, run_focusing_batch, ContactConfig,
    FitReport, LockingDiagnostics, Mode, TrajectoryRecord, DEFAULT_PHI0,
};
use crate::drift::{DriftSystem, DuffingParams};
use crate::error::{Error, Result};
use crate::geometry::SymTensor2;
use crate::spectral::{amplification_rate, duffing_regime, Regime};
use crate::transport::DEFAULT_STEP;

use svg::{LinePlot, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Caps the number of concurrent runs.
pub const THREADS_ENV: &str = "CONTACT_FOCUS_THREADS";

/// Tolerance on the fitted rates and locking exponents of the focusing
/// experiment.
pub const FIG1_RATE_TOL: f64 = 0.15;
/// Final deviation must be below this fraction of its peak.
pub const FIG1_DEVIATION_FRACTION: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "contact-focus", version, about = "Truncated contact dynamics: spectra, focusing runs and closure checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum, amplification rate and regime of a drift Jacobian at the origin.
    Spectral(SpectralArgs),
    /// Run the focusing configs described by a JSON file.
    Simulate {
        config: PathBuf,
    },
    /// Reproduce the driven Duffing focusing figure.
    Fig1 {
        output_dir: PathBuf,
        /// Skip the SVG panels.
        #[arg(long)]
        no_svg: bool,
    },
    /// Check the closure residuals of a built-in case or a JSON case file.
    Closure(ClosureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemKind {
    Duffing,
    ScalarDecay,
    Harmonic,
    Linear,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[arg(long, value_enum)]
    pub system: SystemKind,
    #[arg(long, required_if_eq("system", "duffing"), allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, required_if_eq("system", "duffing"), allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, required_if_eq("system", "scalar-decay"), allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Row-major matrix, rows separated by `;`, e.g. `-1,0;0,-2`.
    #[arg(long, required_if_eq("system", "linear"), allow_hyphen_values = true)]
    pub matrix: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClosureArgs {
    /// `harmonic`, `linear-const-k` or a path to a JSON case file.
    pub case: String,
    /// Highest residual order (default N + 2).
    #[arg(long)]
    pub p_max: Option<usize>,
    /// Stiffness constant for `linear-const-k`, integer or fraction.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub k: String,
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Spectral(args) => cmd_spectral(&args, out),
        Command::Simulate { config } => cmd_simulate(&config, out),
        Command::Fig1 { output_dir, no_svg } => cmd_fig1(&output_dir, !no_svg, out),
        Command::Closure(args) => cmd_closure(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } | Error::NoConvergence(_) | Error::TooFewPoints { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn parse_matrix(s: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| {
            r.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad matrix entry {v:?}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("matrix {s:?} is not square")));
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.into_iter().flatten()))
}

pub fn cmd_spectral(args: &SpectralArgs, out: &mut dyn Write) -> Result<i32> {
    let report = match args.system {
        SystemKind::Duffing => duffing_regime(args.delta.unwrap_or(f64::NAN), args.alpha.unwrap_or(f64::NAN))?,
        SystemKind::ScalarDecay => {
            let sys = DriftSystem::scalar_decay(args.lambda.unwrap_or(f64::NAN))?;
            amplification_rate(&sys.eval_jacobian(0.0, &[0.0])?)?
        }
        SystemKind::Harmonic => amplification_rate(&DriftSystem::harmonic().eval_jacobian(0.0, &[0.0, 0.0])?)?,
        SystemKind::Linear => {
            let m = parse_matrix(args.matrix.as_deref().unwrap_or(""))?;
            let sys = DriftSystem::linear(&m)?;
            amplification_rate(&sys.eval_jacobian(0.0, &vec![0.0; m.nrows()])?)?
        }
    };
    write_json(out, &report)?;
    Ok(EXIT_OK)
}

/// Multi-run configuration file. Keys mirror [`ContactConfig`] with a list
/// of initial fiber vectors, an output directory (relative paths resolve
/// against the config file's directory) and an SVG switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: DriftSystem,
    #[serde(default)]
    pub mode: Mode,
    pub y0: Vec<f64>,
    pub phi0: Vec<Vec<f64>>,
    /// Defaults to the identity.
    #[serde(default)]
    pub h2_0: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub c: f64,
    pub t_end: f64,
    #[serde(default = "default_step")]
    pub h: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Defaults to `[τ_f, min(3τ_f, t_end)]` from the origin spectrum.
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
    /// Defaults to true when the origin spectrum is underdamped.
    #[serde(default)]
    pub envelope_fit: Option<bool>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_svg: bool,
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_stride() -> usize {
    1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// One validated [`ContactConfig`] per initial fiber vector.
    pub fn contact_configs(&self) -> Result<Vec<ContactConfig>> {
        self.system.validate()?;
        if self.phi0.is_empty() {
            return Err(Error::Config("phi0 must list at least one vector".into()));
        }
        let m = self.system.dim();
        let h2_0 = match &self.h2_0 {
            None => SymTensor2::identity(m),
            Some(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(Error::Config(format!("h2_0 must be {m}×{m}")));
                }
                SymTensor2::new(DMatrix::from_row_iterator(m, m, rows.iter().flatten().copied()))?
            }
        };
        let spectrum = amplification_rate(&self.system.eval_jacobian(0.0, &vec![0.0; m])?)?;
        let fit_window = match self.fit_window {
            Some(w) => w,
            None => match spectrum.tau_f {
                Some(tau) if tau < self.t_end => (tau, (3.0 * tau).min(self.t_end)),
                _ => {
                    return Err(Error::Config(
                        "fit_window is required when τ_f is undefined or not below t_end".into(),
                    ))
                }
            },
        };
        let envelope_fit = self.envelope_fit.unwrap_or(spectrum.regime == Regime::Underdamped);
        self.phi0
            .iter()
            .map(|phi0| {
                let cfg = ContactConfig {
                    system: self.system.clone(),
                    mode: self.mode,
                    y0: self.y0.clone(),
                    phi0: phi0.clone(),
                    h2_0: h2_0.clone(),
                    c: self.c,
                    t_end: self.t_end,
                    h: self.h,
                    stride: self.stride,
                    fit_window,
                    envelope_fit,
                };
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

/// The focusing-figure setup as a [`RunConfig`].
pub fn fig1_run_config(output_dir: PathBuf, emit_svg: bool) -> RunConfig {
    let params = DuffingParams::standard();
    let base = ContactConfig::duffing_focusing(DEFAULT_PHI0[0]);
    RunConfig {
        system: DriftSystem::Duffing(params),
        mode: base.mode,
        y0: base.y0,
        phi0: DEFAULT_PHI0.iter().map(|p| p.to_vec()).collect(),
        h2_0: Some(base.h2_0.to_rows()),
        c: base.c,
        t_end: base.t_end,
        h: base.h,
        stride: base.stride,
        fit_window: Some(duffing_window(params, base.t_end)),
        envelope_fit: Some(true),
        output_dir,
        emit_svg,
    }
}

pub fn threads_from_env(default: usize) -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(default),
    }
}

pub fn csv_header(m: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=m).map(|i| format!("y{i}")));
    cols.extend((1..=m).map(|i| format!("yref{i}")));
    cols.extend((1..=m).map(|i| format!("phi{i}")));
    cols.extend(["h2_fro", "coupling_norm", "epsilon", "deviation"].map(String::from));
    cols.join(",")
}

/// CSV text of a record, 17 significant digits per value.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut s = csv_header(record.config.dim());
    s.push('\n');
    for r in &record.rows {
        let vals = std::iter::once(r.t)
            .chain(r.y.iter().copied())
            .chain(r.y_ref.iter().copied())
            .chain(r.phi.iter().copied())
            .chain([r.h2_fro, r.coupling_norm, r.epsilon, r.deviation]);
        let line: Vec<String> = vals.map(|v| format!("{v:.16e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub phi0: Vec<f64>,
    pub csv: String,
    pub fit: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub locking: Option<LockingDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locking_error: Option<String>,
    pub epsilon0: f64,
    pub constraint_drift: f64,
    pub constraint_tolerance: f64,
    pub max_deviation: f64,
    pub final_deviation: f64,
    /// True when `y` never left `y_ref`.
    pub zero_deviation: bool,
}

fn summarize(index: usize, record: &TrajectoryRecord) -> RunSummary {
    let cfg = &record.config;
    let (fit, fit_error) = match fit_decay_rate(record, cfg.fit_window, cfg.envelope_fit) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (locking, locking_error) = match record.predicted_sigma.map(|s| locking_diagnostics(record, s)) {
        Some(Ok(d)) => (Some(d), None),
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, Some("no predicted sigma at the origin".into())),
    };
    let epsilon0 = record.rows[0].epsilon;
    let max_deviation = record.max_deviation();
    RunSummary {
        index,
        phi0: cfg.phi0.clone(),
        csv: format!("trajectory_{index}.csv"),
        fit,
        fit_error,
        locking,
        locking_error,
        epsilon0,
        constraint_drift: constraint_drift(record),
        constraint_tolerance: 1e-6 * (1.0 + epsilon0.abs()),
        max_deviation,
        final_deviation: record.rows.last().expect("rows are never empty").deviation,
        zero_deviation: max_deviation == 0.0,
    }
}

fn provenance(cfg: &RunConfig, runs: &[ContactConfig], threads: usize) -> serde_json::Value {
    let first = &runs[0];
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "system": cfg.system,
        "mode": cfg.mode,
        "y0": cfg.y0,
        "phi0_set": cfg.phi0,
        "h2_0": first.h2_0,
        "c": cfg.c,
        "t_end": cfg.t_end,
        "h": cfg.h,
        "stride": cfg.stride,
        "fit_window": first.fit_window,
        "envelope_fit": first.envelope_fit,
        "threads": threads,
    })
}

struct Outcome {
    records: Vec<TrajectoryRecord>,
    summaries: Vec<RunSummary>,
    report: serde_json::Value,
}

fn execute(cfg: &RunConfig, command: &str) -> Result<Outcome> {
    let configs = cfg.contact_configs()?;
    let threads = threads_from_env(configs.len())?;
    fs::create_dir_all(&cfg.output_dir)?;
    let records = run_focusing_batch(&configs, threads).into_iter().collect::<Result<Vec<_>>>()?;
    let summaries: Vec<RunSummary> = records.iter().enumerate().map(|(k, r)| summarize(k, r)).collect();
    for (rec, summary) in records.iter().zip(&summaries) {
        fs::write(cfg.output_dir.join(&summary.csv), trajectory_csv(rec))?;
    }
    let report = json!({
        "command": command,
        "provenance": provenance(cfg, &configs, threads),
        "predicted_sigma": records[0].predicted_sigma,
        "runs": summaries,
    });
    Ok(Outcome { records, summaries, report })
}

fn write_report(dir: &Path, report: &serde_json::Value) -> Result<()> {
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}

pub fn cmd_simulate(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::load(path)?;
    let outcome = execute(&cfg, "simulate")?;
    if cfg.emit_svg {
        write_panels(&cfg.output_dir, &outcome.records, &outcome.summaries)?;
    }
    write_report(&cfg.output_dir, &outcome.report)?;
    writeln!(out, "{}", cfg.output_dir.join("report.json").display())?;
    Ok(EXIT_OK)
}

/// Per-run pass/fail of the focusing claims.
#[derive(Debug, Clone, Serialize)]
pub struct Fig1Check {
    pub index: usize,
    pub rate_relative_error: Option<f64>,
    pub rate_ok: bool,
    pub exponents_ok: bool,
    pub deviation_ratio: f64,
    pub deviation_ok: bool,
    pub constraint_ok: bool,
}

pub fn fig1_checks(summaries: &[RunSummary]) -> Vec<Fig1Check> {
    summaries
        .iter()
        .map(|s| {
            let rel = s.fit.as_ref().and_then(|f| f.relative_error);
            let exponents_ok = s.locking.as_ref().is_some_and(|d| {
                [&d.phi, &d.stiffness, &d.coupling].iter().all(|e| e.relative_error() <= FIG1_RATE_TOL)
            });
            let ratio = if s.max_deviation > 0.0 { s.final_deviation / s.max_deviation } else { 0.0 };
            Fig1Check {
                index: s.index,
                rate_relative_error: rel,
                rate_ok: rel.is_some_and(|r| r <= FIG1_RATE_TOL),
                exponents_ok,
                deviation_ratio: ratio,
                deviation_ok: ratio < FIG1_DEVIATION_FRACTION,
                constraint_ok: s.constraint_drift <= s.constraint_tolerance,
            }
        })
        .collect()
}

pub fn cmd_fig1(output_dir: &Path, emit_svg: bool, out: &mut dyn Write) -> Result<i32> {
    let cfg = fig1_run_config(output_dir.to_path_buf(), emit_svg);
    let mut outcome = execute(&cfg, "fig1")?;
    if emit_svg {
        write_panels(output_dir, &outcome.records, &outcome.summaries)?;
    }
    let checks = fig1_checks(&outcome.summaries);
    let all_ok = checks.iter().all(|c| c.rate_ok && c.exponents_ok && c.deviation_ok && c.constraint_ok);
    outcome.report["checks"] = json!({
        "rate_tolerance": FIG1_RATE_TOL,
        "deviation_fraction": FIG1_DEVIATION_FRACTION,
        "runs": checks,
        "all_ok": all_ok,
    });
    write_report(output_dir, &outcome.report)?;
    for c in &checks {
        writeln!(
            out,
            "run {}: rate rel. error {}, exponents {}, final/peak deviation {:.3} {}, constraint {}",
            c.index,
            c.rate_relative_error.map_or("n/a".into(), |r| format!("{r:.3}")),
            if c.exponents_ok { "ok" } else { "off" },
            c.deviation_ratio,
            if c.deviation_ok { "ok" } else { "off" },
            if c.constraint_ok { "ok" } else { "off" },
        )?;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_NEGATIVE })
}

fn write_panels(dir: &Path, records: &[TrajectoryRecord], summaries: &[RunSummary]) -> Result<()> {
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    for (k, (rec, s)) in records.iter().zip(summaries).enumerate() {
        let label = format!("phi0 = {:?}", s.phi0);
        top.push(Series {
            label: label.clone(),
            points: rec.rows.iter().map(|r| (r.t, r.y[0])).collect(),
            dashed: false,
            color: Some(k),
        });
        bottom.push(Series {
            label,
            points: rec.rows.iter().map(|r| (r.t, r.coupling_norm.ln())).collect(),
            dashed: false,
            color: Some(k),
        });
        if let Some(fit) = &s.fit {
            let (lo, hi) = fit.window;
            bottom.push(Series {
                label: format!("fit {k}: rate {:.3}", fit.fitted_rate),
                points: [lo, hi].iter().map(|&t| (t, fit.intercept - fit.fitted_rate * t)).collect(),
                dashed: true,
                color: Some(k),
            });
        }
    }
    if let Some(rec) = records.first() {
        top.push(Series {
            label: "reference".into(),
            points: rec.rows.iter().map(|r| (r.t, r.y_ref[0])).collect(),
            dashed: true,
            color: None,
        });
    }
    let panels = [
        ("panel_trajectory.svg", "Macroscopic trajectory", "y1", top),
        ("panel_coupling.svg", "Coupling decay", "ln |H2 phi|", bottom),
    ];
    for (file, title, y_label, series) in panels {
        let plot = LinePlot { title: title.into(), x_label: "t".into(), y_label: y_label.into(), series };
        fs::write(dir.join(file), plot.render())?;
    }
    Ok(())
}

fn load_case(args: &ClosureArgs) -> Result<ContactPotentialData> {
    match args.case.as_str() {
        "harmonic" => Ok(closure::harmonic()),
        "linear-const-k" => {
            let k = parse_rational(&args.k)?;
            if k == closure::rational(0, 1) {
                return Err(Error::Config("k must be nonzero".into()));
            }
            Ok(closure::linear_const_k(k))
        }
        path => CaseFile::load(Path::new(path)),
    }
}

pub fn cmd_closure(args: &ClosureArgs, out: &mut dyn Write) -> Result<i32> {
    let data = load_case(args)?;
    let p_max = args.p_max.unwrap_or_else(|| default_p_max(data.order()));
    let report = closure::verify_closure(&data, p_max).map_err(|e| Error::Config(e.to_string()))?;
    write_json(out, &report)?;
    Ok(if report.all_residuals_zero { EXIT_OK } else { EXIT_NEGATIVE })
}
