//! Fixed-step RK4 integration of characteristics `ẏ = B(t, y)`, the
//! variational equation `Φ̇ = M Φ`, and three routes for the stiffness
//! tensor `H⁽²⁾` along a characteristic:
//!
//! * closed form `Φ H⁽²⁾₀ Φᵀ`,
//! * direct Lie transport `Ḣ = M H + H Mᵀ`,
//! * projected transport `Ḣ = M̃ H + H M̃ᵀ + Δ[H]` for systems with a
//!   conserved level function.
//!
//! Matrix ODEs along a path are integrated jointly with the path's own
//! state, so the Jacobian is evaluated at the same RK4 stage points that
//! produced the path.

use nalgebra::{DMatrix, DVector};

use crate::drift::DriftSystem;
use crate::error::{Error, Result};
use crate::geometry::{
    compensator, degeneracy_residual, projected_jacobian, projector, SymTensor2,
    DEFAULT_ZERO_GRADIENT_TOL,
};

/// Default integration step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Gradient of a level function `∇H⁽⁰⁾(t, y)`.
pub type GradientFn<'a> = &'a dyn Fn(f64, &[f64]) -> DVector<f64>;

fn check_finite(values: &[f64], t: f64) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp { t })
    }
}

/// One classical RK4 step of `ṡ = f(t, s)`.
pub fn rk4_step<F>(mut f: F, t: f64, s: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0) {
        return Err(Error::param(format!("step must be > 0, got {h}")));
    }
    let n = s.len();
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { (0..n).map(|i| s[i] + a * k[i]).collect() };

    let k1 = f(t, s)?;
    check_finite(&k1, t)?;
    let k2 = f(t + 0.5 * h, &axpy(0.5 * h, &k1))?;
    check_finite(&k2, t)?;
    let k3 = f(t + 0.5 * h, &axpy(0.5 * h, &k2))?;
    check_finite(&k3, t)?;
    let k4 = f(t + h, &axpy(h, &k3))?;
    check_finite(&k4, t)?;

    let next: Vec<f64> = (0..n)
        .map(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    check_finite(&next, t + h)?;
    Ok(next)
}

/// Grid `t₀, t₀+h, …, t_end`. When `h` does not divide the interval the
/// last step is shortened; ratios within `1e-9` relative of an integer are
/// treated as exact.
pub fn time_grid(t0: f64, t_end: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::param(format!("step must be > 0, got {h}")));
    }
    if !t0.is_finite() || !t_end.is_finite() {
        return Err(Error::param("time interval must be finite"));
    }
    if t_end < t0 {
        return Err(Error::param(format!("t_end {t_end} is before t0 {t0}")));
    }
    let ratio = (t_end - t0) / h;
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    };
    let mut times: Vec<f64> = (0..steps).map(|k| t0 + k as f64 * h).collect();
    times.push(t_end);
    Ok(times)
}

/// Sampled characteristic line `Y(t; t₀, y₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    system: DriftSystem,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    h: f64,
}

impl Path {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn system(&self) -> &DriftSystem {
        &self.system
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("path always holds its initial state")
    }

    /// The same path restarted at grid index `k`.
    pub fn tail(&self, k: usize) -> Path {
        Path {
            system: self.system.clone(),
            times: self.times[k..].to_vec(),
            states: self.states[k..].to_vec(),
            h: self.h,
        }
    }
}

pub fn integrate_characteristic(
    system: &DriftSystem,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    h: f64,
) -> Result<Path> {
    system.validate()?;
    if y0.len() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), got: y0.len() });
    }
    check_finite(y0, t0)?;
    let times = time_grid(t0, t_end, h)?;
    let mut states = Vec::with_capacity(times.len());
    states.push(y0.to_vec());
    for w in times.windows(2) {
        let (t, dt) = (w[0], w[1] - w[0]);
        let y = states.last().unwrap();
        let next = rk4_step(|tt, s| Ok(system.eval_drift(tt, s)?.data.into()), t, y, dt)?;
        states.push(next);
    }
    Ok(Path { system: system.clone(), times, states, h })
}

/// Integrates `Ẋ = g(t, y, X)` jointly with `ẏ = B(t, y)` along `path`,
/// where `X` is an `m × m` matrix. `post` is applied after every step.
fn integrate_matrix_along<G, P>(
    path: &Path,
    x0: DMatrix<f64>,
    mut rhs: G,
    mut post: P,
) -> Result<Vec<DMatrix<f64>>>
where
    G: FnMut(f64, &[f64], &DMatrix<f64>) -> Result<DMatrix<f64>>,
    P: FnMut(DMatrix<f64>) -> DMatrix<f64>,
{
    let system = &path.system;
    let m = system.dim();
    let mut out = Vec::with_capacity(path.len());
    out.push(x0.clone());
    let mut joint: Vec<f64> = path.states[0].iter().copied().chain(x0.iter().copied()).collect();

    for k in 0..path.len() - 1 {
        let t = path.times[k];
        let dt = path.times[k + 1] - t;
        let next = rk4_step(
            |tt, s| {
                let (y, x) = s.split_at(m);
                let x = DMatrix::from_column_slice(m, m, x);
                let dy = system.eval_drift(tt, y)?;
                let dx = rhs(tt, y, &x)?;
                Ok(dy.iter().chain(dx.iter()).copied().collect())
            },
            t,
            &joint,
            dt,
        )?;
        let (y, x) = next.split_at(m);
        debug_assert_eq!(y, path.states[k + 1].as_slice());
        let x = post(DMatrix::from_column_slice(m, m, x));
        joint = path.states[k + 1].iter().copied().chain(x.iter().copied()).collect();
        out.push(x);
    }
    Ok(out)
}

/// Fundamental matrix `Φ(t, t₀)` sampled on a path grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    pub times: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
    /// Stage evaluations where the projector fell back to the identity.
    pub identity_branch_hits: usize,
}

impl FundamentalMatrix {
    pub fn determinants(&self) -> Vec<f64> {
        self.matrices.iter().map(|p| p.determinant()).collect()
    }

    pub fn last(&self) -> &DMatrix<f64> {
        self.matrices.last().expect("non-empty")
    }
}

/// Solves `Φ̇ = M Φ` (or `Φ̇ = M̃ Φ` when `projected`), `Φ(t₀) = I`.
pub fn integrate_variational(
    system: &DriftSystem,
    path: &Path,
    projected: bool,
    grad_h0: Option<GradientFn<'_>>,
) -> Result<FundamentalMatrix> {
    check_path_system(system, path)?;
    if projected && grad_h0.is_none() {
        return Err(Error::Precondition(
            "projected variational equation needs a level-function gradient".into(),
        ));
    }
    let m = system.dim();
    let mut hits = 0usize;
    let matrices = integrate_matrix_along(
        path,
        DMatrix::identity(m, m),
        |t, y, phi| {
            let jac = system.eval_jacobian(t, y)?;
            let jac = match (projected, grad_h0) {
                (true, Some(grad)) => {
                    let p = projector(&grad(t, y), DEFAULT_ZERO_GRADIENT_TOL);
                    hits += p.is_identity_branch() as usize;
                    projected_jacobian(&jac, &p)?
                }
                _ => jac,
            };
            Ok(jac * phi)
        },
        |x| x,
    )?;
    Ok(FundamentalMatrix { times: path.times.clone(), matrices, identity_branch_hits: hits })
}

fn check_path_system(system: &DriftSystem, path: &Path) -> Result<()> {
    if system != &path.system {
        return Err(Error::Precondition(format!(
            "path was integrated for {} but {} was given",
            path.system.name(),
            system.name()
        )));
    }
    Ok(())
}

fn check_tensor_dim(system: &DriftSystem, h2: &SymTensor2) -> Result<()> {
    if h2.dim() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), got: h2.dim() });
    }
    Ok(())
}

/// `H⁽²⁾(t)` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSeries {
    pub times: Vec<f64>,
    pub tensors: Vec<SymTensor2>,
    pub identity_branch_hits: usize,
}

impl TensorSeries {
    /// Largest Frobenius distance between matching samples.
    pub fn max_distance(&self, other: &TensorSeries) -> f64 {
        self.tensors
            .iter()
            .zip(&other.tensors)
            .map(|(a, b)| (a.matrix() - b.matrix()).norm())
            .fold(0.0, f64::max)
    }
}

/// `Φ(t) H⁽²⁾₀ Φ(t)ᵀ` on every grid point.
pub fn h2_closed_form(phi: &FundamentalMatrix, h2_0: &SymTensor2) -> Result<TensorSeries> {
    let m = h2_0.dim();
    if let Some(p) = phi.matrices.first() {
        if p.nrows() != m {
            return Err(Error::DimensionMismatch { expected: p.nrows(), got: m });
        }
    }
    let tensors = phi
        .matrices
        .iter()
        .map(|p| SymTensor2::symmetrized(&(p * h2_0.matrix() * p.transpose())))
        .collect();
    Ok(TensorSeries { times: phi.times.clone(), tensors, identity_branch_hits: 0 })
}

fn symmetrize(x: DMatrix<f64>) -> DMatrix<f64> {
    (&x + x.transpose()) * 0.5
}

/// RK4 solution of `Ḣ = M H + H Mᵀ` along `path`.
pub fn h2_direct(system: &DriftSystem, path: &Path, h2_0: &SymTensor2) -> Result<TensorSeries> {
    check_path_system(system, path)?;
    check_tensor_dim(system, h2_0)?;
    let series = integrate_matrix_along(
        path,
        h2_0.matrix().clone(),
        |t, y, h| {
            let jac = system.eval_jacobian(t, y)?;
            let mh = &jac * h;
            Ok(&mh + mh.transpose())
        },
        symmetrize,
    )?;
    Ok(TensorSeries {
        times: path.times.clone(),
        tensors: series.into_iter().map(|x| SymTensor2::symmetrized(&x)).collect(),
        identity_branch_hits: 0,
    })
}

/// RK4 solution of `Ḣ = M̃ H + H M̃ᵀ + Δ[H]`, `M̃ = P⊥ M P⊥`, with `P⊥`
/// rebuilt from `grad_h0` at every stage.
///
/// Requires the initial tensor to annihilate the initial gradient.
pub fn h2_projected(
    system: &DriftSystem,
    path: &Path,
    h2_0: &SymTensor2,
    grad_h0: GradientFn<'_>,
) -> Result<TensorSeries> {
    check_path_system(system, path)?;
    check_tensor_dim(system, h2_0)?;
    let g0 = grad_h0(path.times[0], &path.states[0]);
    let res0 = degeneracy_residual(h2_0, &g0);
    if res0 > 1e-10 * (h2_0.frobenius() * g0.norm()).max(1.0) {
        return Err(Error::Precondition(format!(
            "initial stiffness violates the degeneracy condition (|H g| = {res0:e})"
        )));
    }
    let mut hits = 0usize;
    let series = integrate_matrix_along(
        path,
        h2_0.matrix().clone(),
        |t, y, h| {
            let jac = system.eval_jacobian(t, y)?;
            let p = projector(&grad_h0(t, y), DEFAULT_ZERO_GRADIENT_TOL);
            hits += p.is_identity_branch() as usize;
            let mt = projected_jacobian(&jac, &p)?;
            let h_sym = SymTensor2::symmetrized(h);
            let delta = compensator(&h_sym, &jac, &p)?;
            let mth = &mt * h;
            Ok(&mth + mth.transpose() + delta.matrix())
        },
        symmetrize,
    )?;
    Ok(TensorSeries {
        times: path.times.clone(),
        tensors: series.into_iter().map(|x| SymTensor2::symmetrized(&x)).collect(),
        identity_branch_hits: hits,
    })
}

/// `‖H⁽²⁾∇H⁽⁰⁾‖ / (‖H⁽²⁾‖‖∇H⁽⁰⁾‖)` at each grid point (0 when either
/// factor vanishes).
pub fn degeneracy_profile(series: &TensorSeries, path: &Path, grad_h0: GradientFn<'_>) -> Vec<f64> {
    series
        .tensors
        .iter()
        .zip(path.times.iter().zip(&path.states))
        .map(|(h2, (&t, y))| {
            let g = grad_h0(t, y);
            let scale = h2.frobenius() * g.norm();
            if scale == 0.0 {
                0.0
            } else {
                degeneracy_residual(h2, &g) / scale
            }
        })
        .collect()
}

/// Largest relative error of `det Φ(t)` against `exp(∫ tr M)` with the
/// integral taken by the composite trapezoid rule on the path grid.
pub fn liouville_error(system: &DriftSystem, path: &Path, phi: &FundamentalMatrix) -> Result<f64> {
    let traces = path
        .times
        .iter()
        .zip(&path.states)
        .map(|(&t, y)| Ok(system.eval_jacobian(t, y)?.trace()))
        .collect::<Result<Vec<f64>>>()?;
    let mut integral = 0.0;
    let mut worst = 0.0f64;
    for (k, det) in phi.determinants().into_iter().enumerate() {
        if k > 0 {
            let dt = path.times[k] - path.times[k - 1];
            integral += 0.5 * dt * (traces[k] + traces[k - 1]);
        }
        let expected = integral.exp();
        worst = worst.max((det - expected).abs() / expected);
    }
    Ok(worst)
}

/// Observed order `log₂(|y_h − y_{h/2}| / |y_{h/2} − y_{h/4}|)` of the
/// endpoint of a characteristic.
pub fn step_halving_order(system: &DriftSystem, y0: &[f64], t0: f64, t_end: f64, h: f64) -> Result<f64> {
    let end = |step: f64| -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(
            integrate_characteristic(system, y0, t0, t_end, step)?.last_state(),
        ))
    };
    let (a, b, c) = (end(h)?, end(h / 2.0)?, end(h / 4.0)?);
    Ok(((&a - &b).norm() / (&b - &c).norm()).log2())
}
