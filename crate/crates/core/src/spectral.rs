//! Spectrum of the drift Jacobian, the amplification rate `σ` and its
//! timescale `τ_f = 1/σ`.
//!
//! `σ` is the decay rate of the slowest mode, `-max_k Re λ_k`, i.e. set by
//! the eigenvalue closest to the imaginary axis. It coincides with
//! `-min_k Re λ_k` whenever all eigenvalues share one real part (every
//! underdamped 2×2 Jacobian and every scalar system); in the overdamped
//! case the slowest mode is the one that governs the coupling decay.
//!
//! Eigenvalues come from the characteristic polynomial (Faddeev–LeVerrier)
//! followed by Durand–Kerner root iteration, which is adequate for the
//! `m ≤ 4` systems handled here.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drift::MAX_DIM;
use crate::error::{Error, Result};

const DK_MAX_ITER: usize = 200;
const DK_TOL: f64 = 1e-12;
/// Real parts must be below `-DISSIPATIVE_TOL` for a rate to exist.
const DISSIPATIVE_TOL: f64 = 1e-12;
/// Relative tolerance for "real" and "repeated" in regime classification.
const CLASSIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Underdamped,
    Critical,
    Overdamped,
    NonDissipative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Serialized as `[re, im]` pairs.
    pub eigenvalues: Vec<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau_f: Option<f64>,
    pub regime: Regime,
}

/// Coefficients `[c_0, …, c_{m-1}, 1]` of `det(λI - M)`, lowest degree first.
pub fn characteristic_polynomial(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut mk = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        mk = m * &mk;
        for i in 0..n {
            mk[(i, i)] += coeffs[n - k + 1];
        }
        coeffs[n - k] = -(m * &mk).trace() / k as f64;
    }
    coeffs
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Residual bound used to accept a root: `1e-9 (1 + ‖M‖_F^m)`.
pub fn residual_bound(m: &DMatrix<f64>) -> f64 {
    1e-9 * (1.0 + m.norm().powi(m.nrows() as i32))
}

/// All roots of the monic polynomial `coeffs` (lowest degree first).
fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let radius = 1.0 + coeffs[..n].iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();

    for _ in 0..DK_MAX_ITER {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let zi = roots[i];
            let denom = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, (_, &zj)| acc * (zi - zj));
            if denom.norm() == 0.0 {
                continue;
            }
            let step = horner(coeffs, zi) / denom;
            roots[i] = zi - step;
            max_step = max_step.max(step.norm());
        }
        if max_step <= DK_TOL * radius {
            break;
        }
    }
    roots
}

/// Eigenvalues of a real `m × m` matrix, `1 ≤ m ≤ 4`, sorted by real then
/// imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("matrix has non-finite entries"));
    }
    let coeffs = characteristic_polynomial(m);
    let mut roots = durand_kerner(&coeffs);
    let bound = residual_bound(m);
    for r in &roots {
        let res = horner(&coeffs, *r).norm();
        if !(res <= bound) {
            return Err(Error::NoConvergence(format!(
                "root {r} has residual {res:e} above {bound:e}"
            )));
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

fn classify(eigs: &[Complex64]) -> Regime {
    let is_real = |z: &Complex64| z.im.abs() <= CLASSIFY_TOL * (1.0 + z.norm());
    if eigs.iter().any(|z| !is_real(z)) {
        return Regime::Underdamped;
    }
    // Slowest (dominant) real eigenvalue repeated?
    let slowest = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let repeats = eigs
        .iter()
        .filter(|z| (z.re - slowest).abs() <= CLASSIFY_TOL * (1.0 + slowest.abs()))
        .count();
    if repeats > 1 {
        Regime::Critical
    } else {
        Regime::Overdamped
    }
}

/// `σ = -max_k Re λ_k` when every real part is strictly negative.
pub fn amplification_rate(m: &DMatrix<f64>) -> Result<SpectralReport> {
    let eigs = eigenvalues(m)?;
    let dissipative = eigs.iter().all(|z| z.re < -DISSIPATIVE_TOL);
    if !dissipative {
        return Ok(SpectralReport {
            eigenvalues: eigs,
            sigma: None,
            tau_f: None,
            regime: Regime::NonDissipative,
        });
    }
    let sigma = -eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralReport {
        regime: classify(&eigs),
        eigenvalues: eigs,
        sigma: Some(sigma),
        tau_f: Some(1.0 / sigma),
    })
}

/// Closed-form regimes of the Duffing origin Jacobian `((0,1),(-α,-δ))`.
pub fn duffing_regime(delta: f64, alpha: f64) -> Result<SpectralReport> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::param(format!("delta must be > 0, got {delta}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param(format!("alpha must be > 0, got {alpha}")));
    }
    let disc = delta * delta - 4.0 * alpha;
    let half = delta / 2.0;
    let (regime, sigma, eigenvalues) = if disc.abs() <= 1e-10 * (delta * delta).max(1.0) {
        let l = Complex64::new(-half, 0.0);
        (Regime::Critical, half, vec![l, l])
    } else if disc < 0.0 {
        let wd = (-disc).sqrt() / 2.0;
        (
            Regime::Underdamped,
            half,
            vec![Complex64::new(-half, -wd), Complex64::new(-half, wd)],
        )
    } else {
        let root = disc.sqrt();
        // (δ - √disc)/2 written without cancellation.
        let slow = 2.0 * alpha / (delta + root);
        let fast = (delta + root) / 2.0;
        (
            Regime::Overdamped,
            slow,
            vec![Complex64::new(-fast, 0.0), Complex64::new(-slow, 0.0)],
        )
    };
    Ok(SpectralReport {
        eigenvalues,
        sigma: Some(sigma),
        tau_f: Some(1.0 / sigma),
        regime,
    })
}
