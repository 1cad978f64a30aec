//! Coupled contact flow for dissipative systems (`H⁽⁰⁾ = c`).
//!
//! One RK4 clock advances four blocks together:
//!
//! ```text
//! reference    ẏ_ref = B(t, y_ref)
//! fiber        φ̇     = -M(t, y*)ᵀ φ
//! stiffness    Ḣ⁽²⁾  = M(t, y*) H⁽²⁾ + H⁽²⁾ M(t, y*)ᵀ
//! macroscopic  ẏ     = B(t, y) + H⁽²⁾ φ
//! ```
//!
//! with `y* = y_ref` in [`Mode::Locked`] and `y* = y` in [`Mode::Coupled`].
//! Since the same `M` drives fiber and stiffness, the quadratic form
//! `½ φᵀ H⁽²⁾ φ` is an exact invariant of the continuous flow, and the
//! coupling `H⁽²⁾φ` obeys `ċ = M c`.

use std::thread;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::drift::{DriftSystem, DuffingParams};
use crate::error::{Error, Result};
use crate::geometry::SymTensor2;
use crate::spectral::{amplification_rate, duffing_regime};
use crate::transport::{rk4_step, time_grid, DEFAULT_STEP};

/// Minimum number of samples for a log-linear fit.
pub const MIN_FIT_POINTS: usize = 5;

/// Initial fiber vectors of the three Duffing focusing runs.
pub const DEFAULT_PHI0: [[f64; 2]; 3] = [[0.1, 0.1], [-0.2, 0.05], [0.05, -0.15]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Jacobian evaluated on the unperturbed reference characteristic.
    Locked,
    /// Jacobian evaluated on the perturbed macroscopic trajectory.
    #[default]
    Coupled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactConfig {
    pub system: DriftSystem,
    pub mode: Mode,
    pub y0: Vec<f64>,
    pub phi0: Vec<f64>,
    pub h2_0: SymTensor2,
    /// Constant zero-order potential `H⁽⁰⁾ = c`.
    pub c: f64,
    pub t_end: f64,
    pub h: f64,
    pub stride: usize,
    pub fit_window: (f64, f64),
    pub envelope_fit: bool,
}

impl ContactConfig {
    /// Driven Duffing focusing run: standard parameters, `y₀ = 0`,
    /// `H⁽²⁾(0) = I`, `t ∈ [0, 20]`, `h = 1e-3`, coupled mode and an envelope
    /// fit over `[τ_f, 3τ_f]`.
    pub fn duffing_focusing(phi0: [f64; 2]) -> Self {
        let params = DuffingParams::standard();
        let t_end = 20.0;
        ContactConfig {
            system: DriftSystem::Duffing(params),
            mode: Mode::Coupled,
            y0: vec![0.0, 0.0],
            phi0: phi0.to_vec(),
            h2_0: SymTensor2::identity(2),
            c: 0.0,
            t_end,
            h: DEFAULT_STEP,
            stride: 10,
            fit_window: duffing_window(params, t_end),
            envelope_fit: true,
        }
    }

    /// `scalar_decay{λ}` run from `y₀ = 1`, `φ₀ = 0.1`, `H⁽²⁾(0) = 1`.
    pub fn scalar_decay(lambda: f64) -> Result<Self> {
        Ok(ContactConfig {
            system: DriftSystem::scalar_decay(lambda)?,
            mode: Mode::Coupled,
            y0: vec![1.0],
            phi0: vec![0.1],
            h2_0: SymTensor2::identity(1),
            c: 0.0,
            t_end: 5.0,
            h: DEFAULT_STEP,
            stride: 1,
            fit_window: (1.0, 5.0),
            envelope_fit: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let m = self.dim();
        for (name, v) in [("y0", &self.y0), ("phi0", &self.phi0)] {
            if v.len() != m {
                return Err(Error::param(format!("{name} has length {}, expected {m}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::param(format!("{name} must be finite")));
            }
        }
        if self.h2_0.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, got: self.h2_0.dim() });
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::param(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if !(self.h > 0.0) {
            return Err(Error::param(format!("h must be > 0, got {}", self.h)));
        }
        if self.stride == 0 {
            return Err(Error::param("stride must be >= 1"));
        }
        if !self.c.is_finite() {
            return Err(Error::param("c must be finite"));
        }
        let (lo, hi) = self.fit_window;
        if !(lo < hi && hi <= self.t_end) {
            return Err(Error::param(format!(
                "fit window ({lo}, {hi}) must satisfy t_lo < t_hi <= t_end = {}",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// `[τ_f, min(3τ_f, t_end)]` for a Duffing system with positive damping
/// and stiffness; `[0, t_end]` otherwise.
pub fn duffing_window(params: DuffingParams, t_end: f64) -> (f64, f64) {
    match duffing_regime(params.delta, params.alpha) {
        Ok(report) => {
            let tau = report.tau_f.expect("duffing_regime always sets tau_f");
            (tau.min(t_end), (3.0 * tau).min(t_end))
        }
        Err(_) => (0.0, t_end),
    }
}

/// One sampled row of a focusing run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub y: Vec<f64>,
    pub y_ref: Vec<f64>,
    pub phi: Vec<f64>,
    pub h2_fro: f64,
    pub coupling: Vec<f64>,
    pub coupling_norm: f64,
    pub epsilon: f64,
    pub deviation: f64,
}

impl TrajectoryRow {
    pub fn phi_norm(&self) -> f64 {
        self.phi.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub config: ContactConfig,
    /// `σ` of the Jacobian at the origin, `None` when not dissipative there.
    pub predicted_sigma: Option<f64>,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn coupling_norms(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.coupling_norm).collect()
    }

    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.deviation).fold(0.0, f64::max)
    }
}

struct Layout {
    m: usize,
}

impl Layout {
    fn y(&self) -> std::ops::Range<usize> {
        0..self.m
    }
    fn y_ref(&self) -> std::ops::Range<usize> {
        self.m..2 * self.m
    }
    fn phi(&self) -> std::ops::Range<usize> {
        2 * self.m..3 * self.m
    }
    fn h2(&self) -> std::ops::Range<usize> {
        3 * self.m..3 * self.m + self.m * self.m
    }
}

fn epsilon(c: f64, phi: &DVector<f64>, h2: &DMatrix<f64>) -> f64 {
    -c + 0.5 * phi.dot(&(h2 * phi))
}

fn make_row(lay: &Layout, t: f64, s: &[f64], c: f64) -> TrajectoryRow {
    let m = lay.m;
    let y = &s[lay.y()];
    let y_ref = &s[lay.y_ref()];
    let phi = DVector::from_column_slice(&s[lay.phi()]);
    let h2 = DMatrix::from_column_slice(m, m, &s[lay.h2()]);
    let coupling = &h2 * &phi;
    let deviation = y.iter().zip(y_ref).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    TrajectoryRow {
        t,
        y: y.to_vec(),
        y_ref: y_ref.to_vec(),
        phi: phi.iter().copied().collect(),
        h2_fro: h2.norm(),
        coupling_norm: coupling.norm(),
        coupling: coupling.iter().copied().collect(),
        epsilon: epsilon(c, &phi, &h2),
        deviation,
    }
}

/// Integrates the coupled flow and samples every `stride` steps (plus the
/// final time).
pub fn run_focusing(config: &ContactConfig) -> Result<TrajectoryRecord> {
    config.validate()?;
    let system = &config.system;
    if !system.is_dissipative() {
        return Err(Error::Unsupported(format!(
            "focusing runs need a dissipative system, {} is not",
            system.name()
        )));
    }
    let m = config.dim();
    let lay = Layout { m };
    let predicted_sigma = amplification_rate(&system.eval_jacobian(0.0, &vec![0.0; m])?)?.sigma;

    let mut state: Vec<f64> = Vec::with_capacity(3 * m + m * m);
    state.extend(&config.y0);
    state.extend(&config.y0);
    state.extend(&config.phi0);
    state.extend(config.h2_0.matrix().iter());

    let rhs = |t: f64, s: &[f64]| -> Result<Vec<f64>> {
        let y = &s[lay.y()];
        let y_ref = &s[lay.y_ref()];
        let phi = DVector::from_column_slice(&s[lay.phi()]);
        let h2 = DMatrix::from_column_slice(m, m, &s[lay.h2()]);
        let y_star = match config.mode {
            Mode::Locked => y_ref,
            Mode::Coupled => y,
        };
        let jac = system.eval_jacobian(t, y_star)?;
        let dy = system.eval_drift(t, y)? + &h2 * &phi;
        let dy_ref = system.eval_drift(t, y_ref)?;
        let dphi = -(jac.transpose() * &phi);
        let mh = &jac * &h2;
        let dh2 = &mh + mh.transpose();
        let mut out = Vec::with_capacity(s.len());
        out.extend(dy.iter());
        out.extend(dy_ref.iter());
        out.extend(dphi.iter());
        out.extend(dh2.iter());
        Ok(out)
    };

    let times = time_grid(0.0, config.t_end, config.h)?;
    let last = times.len() - 1;
    let mut rows = Vec::with_capacity(last / config.stride + 2);
    rows.push(make_row(&lay, times[0], &state, config.c));
    for k in 0..last {
        let (t, dt) = (times[k], times[k + 1] - times[k]);
        state = rk4_step(rhs, t, &state, dt)?;
        let h2 = DMatrix::from_column_slice(m, m, &state[lay.h2()]);
        let sym = (&h2 + h2.transpose()) * 0.5;
        state[lay.h2()].copy_from_slice(sym.as_slice());
        if (k + 1) % config.stride == 0 || k + 1 == last {
            rows.push(make_row(&lay, times[k + 1], &state, config.c));
        }
    }
    Ok(TrajectoryRecord { config: config.clone(), predicted_sigma, rows })
}

/// Runs independent configs on at most `threads` worker threads; results
/// keep the input order.
pub fn run_focusing_batch(configs: &[ContactConfig], threads: usize) -> Vec<Result<TrajectoryRecord>> {
    let threads = threads.max(1).min(configs.len().max(1));
    let mut results: Vec<Option<Result<TrajectoryRecord>>> = (0..configs.len()).map(|_| None).collect();
    for (chunk_cfgs, chunk_out) in configs.chunks(threads).zip(results.chunks_mut(threads)) {
        thread::scope(|scope| {
            let handles: Vec<_> = chunk_cfgs.iter().map(|cfg| scope.spawn(move || run_focusing(cfg))).collect();
            for (slot, handle) in chunk_out.iter_mut().zip(handles) {
                *slot = Some(handle.join().expect("focusing worker panicked"));
            }
        });
    }
    results.into_iter().map(|r| r.expect("every slot filled")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Plain,
    Envelope,
}

/// Least-squares line through `(t, ln v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Samples dropped because they were not strictly positive.
    pub skipped: usize,
}

/// Fits `ln v` against `t` over the closed window. In envelope mode only
/// strict local maxima of `v` (compared with their neighbours in the full
/// series) are used.
pub fn fit_log_linear(times: &[f64], values: &[f64], window: (f64, f64), method: FitMethod) -> Result<LogLinearFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), got: values.len() });
    }
    let (lo, hi) = window;
    let in_window = |i: usize| times[i] >= lo && times[i] <= hi;
    let candidates: Vec<usize> = match method {
        FitMethod::Plain => (0..times.len()).filter(|&i| in_window(i)).collect(),
        FitMethod::Envelope => (1..times.len().saturating_sub(1))
            .filter(|&i| in_window(i) && values[i] > values[i - 1] && values[i] > values[i + 1])
            .collect(),
    };
    let usable: Vec<usize> = candidates.iter().copied().filter(|&i| values[i] > 0.0 && values[i].is_finite()).collect();
    let skipped = candidates.len() - usable.len();
    if skipped > 0 {
        warn!("log-linear fit skipped {skipped} non-positive samples in window [{lo}, {hi}]");
    }
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_FIT_POINTS, got: usable.len() });
    }

    let n = usable.len() as f64;
    let xs: Vec<f64> = usable.iter().map(|&i| times[i]).collect();
    let ys: Vec<f64> = usable.iter().map(|&i| values[i].ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let syy: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints { needed: MIN_FIT_POINTS, got: 1 });
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(LogLinearFit { slope, intercept, r_squared, n_points: usable.len(), skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub fitted_rate: f64,
    pub predicted_sigma: Option<f64>,
    pub relative_error: Option<f64>,
    pub r_squared: f64,
    pub n_points: usize,
    pub method: FitMethod,
    pub intercept: f64,
    pub window: (f64, f64),
}

fn method_for(envelope: bool) -> FitMethod {
    if envelope {
        FitMethod::Envelope
    } else {
        FitMethod::Plain
    }
}

/// Decay rate of `‖H⁽²⁾φ‖`: minus the slope of its log-linear fit.
pub fn fit_decay_rate(record: &TrajectoryRecord, window: (f64, f64), envelope: bool) -> Result<FitReport> {
    let method = method_for(envelope);
    let fit = fit_log_linear(&record.times(), &record.coupling_norms(), window, method)?;
    let fitted_rate = -fit.slope;
    Ok(FitReport {
        fitted_rate,
        predicted_sigma: record.predicted_sigma,
        relative_error: record.predicted_sigma.map(|s| (fitted_rate - s).abs() / s),
        r_squared: fit.r_squared,
        n_points: fit.n_points,
        method,
        intercept: fit.intercept,
        window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCheck {
    pub fitted: f64,
    pub expected: f64,
    /// `fitted / expected`.
    pub ratio: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl ExponentCheck {
    fn new(fit: LogLinearFit, expected: f64) -> Self {
        ExponentCheck {
            fitted: fit.slope,
            expected,
            ratio: fit.slope / expected,
            r_squared: fit.r_squared,
            n_points: fit.n_points,
        }
    }

    pub fn relative_error(&self) -> f64 {
        (self.fitted - self.expected).abs() / self.expected.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockingDiagnostics {
    pub sigma: f64,
    pub window: (f64, f64),
    pub method: FitMethod,
    /// `|φ| ∼ e^{+σt}`.
    pub phi: ExponentCheck,
    /// `‖H⁽²⁾‖ ∼ e^{-2σt}`.
    pub stiffness: ExponentCheck,
    /// `‖H⁽²⁾φ‖ ∼ e^{-σt}`.
    pub coupling: ExponentCheck,
    /// Range of the instantaneous `σ(M(t, y*))` over the sampled rows, when
    /// every sampled Jacobian is dissipative.
    pub instantaneous_sigma_range: Option<(f64, f64)>,
}

/// Fits the three locking exponents over the record's configured window
/// and fit method.
pub fn locking_diagnostics(record: &TrajectoryRecord, sigma: f64) -> Result<LockingDiagnostics> {
    let window = record.config.fit_window;
    let method = method_for(record.config.envelope_fit);
    let times = record.times();
    let series = |f: fn(&TrajectoryRow) -> f64| record.rows.iter().map(f).collect::<Vec<f64>>();

    let phi = fit_log_linear(&times, &series(TrajectoryRow::phi_norm), window, method)?;
    let stiffness = fit_log_linear(&times, &series(|r| r.h2_fro), window, method)?;
    let coupling = fit_log_linear(&times, &series(|r| r.coupling_norm), window, method)?;

    Ok(LockingDiagnostics {
        sigma,
        window,
        method,
        phi: ExponentCheck::new(phi, sigma),
        stiffness: ExponentCheck::new(stiffness, -2.0 * sigma),
        coupling: ExponentCheck::new(coupling, -sigma),
        instantaneous_sigma_range: instantaneous_sigma_range(record)?,
    })
}

fn instantaneous_sigma_range(record: &TrajectoryRecord) -> Result<Option<(f64, f64)>> {
    let system = &record.config.system;
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &record.rows {
        let y_star = match record.config.mode {
            Mode::Locked => &row.y_ref,
            Mode::Coupled => &row.y,
        };
        match amplification_rate(&system.eval_jacobian(row.t, y_star)?)?.sigma {
            Some(s) => range = (range.0.min(s), range.1.max(s)),
            None => return Ok(None),
        }
    }
    Ok(Some(range))
}

/// `max_t |ε(t) − ε(0)|`.
pub fn constraint_drift(record: &TrajectoryRecord) -> f64 {
    let Some(first) = record.rows.first() else {
        return 0.0;
    };
    record.rows.iter().map(|r| (r.epsilon - first.epsilon).abs()).fold(0.0, f64::max)
}

/// The three contributions to `d/dt (φᵀ H⁽²⁾ φ)` under the locked fiber and
/// stiffness equations: `-φᵀMH φ`, `φᵀ(MH + HMᵀ)φ` and `-φᵀHMᵀφ`. They sum
/// to zero identically.
pub fn epsilon_rate_terms(m: &DMatrix<f64>, h2: &DMatrix<f64>, phi: &DVector<f64>) -> [f64; 3] {
    let mh = m * h2;
    let hmt = h2 * m.transpose();
    [
        -phi.dot(&(&mh * phi)),
        phi.dot(&((&mh + &hmt) * phi)),
        -phi.dot(&(&hmt * phi)),
    ]
}
