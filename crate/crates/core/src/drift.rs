//! Built-in drift fields `B(t, y)` with analytic Jacobians `M = ∂B/∂y`.
//!
//! Four families are provided. The Duffing oscillator is the driven,
//! damped system used in the focusing experiment; the other three exist
//! because they have closed-form answers for nearly everything:
//!
//! * `scalar_decay`: `B = -λ y` in one dimension,
//! * `linear`: `B = A y` for a constant square matrix `A` (m ≤ 4),
//! * `harmonic`: the conservative rotation `B = (y², -y¹)` with level
//!   function `H⁽⁰⁾ = ½|y|²`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `m × m` Jacobian of a drift field, entries in 1/time.
pub type JacobianMatrix = DMatrix<f64>;

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuffingParams {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl DuffingParams {
    /// Underdamped, driven setup used by the focusing experiment:
    /// δ=0.3, α=1, β=1, γ=0.5, ω=1.2.
    pub const fn standard() -> Self {
        DuffingParams {
            delta: 0.3,
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.5,
            omega: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearParams {
    /// Row-major square matrix `A`.
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarDecayParams {
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum DriftSystem {
    Duffing(DuffingParams),
    Linear(LinearParams),
    Harmonic,
    ScalarDecay(ScalarDecayParams),
}

impl DriftSystem {
    pub fn duffing(params: DuffingParams) -> Result<Self> {
        let sys = DriftSystem::Duffing(params);
        sys.validate()?;
        Ok(sys)
    }

    pub fn scalar_decay(lambda: f64) -> Result<Self> {
        let sys = DriftSystem::ScalarDecay(ScalarDecayParams { lambda });
        sys.validate()?;
        Ok(sys)
    }

    pub fn linear(a: &DMatrix<f64>) -> Result<Self> {
        let matrix = (0..a.nrows())
            .map(|i| a.row(i).iter().copied().collect())
            .collect();
        let sys = DriftSystem::Linear(LinearParams { matrix });
        sys.validate()?;
        Ok(sys)
    }

    pub fn harmonic() -> Self {
        DriftSystem::Harmonic
    }

    pub fn name(&self) -> &'static str {
        match self {
            DriftSystem::Duffing(_) => "duffing",
            DriftSystem::Linear(_) => "linear",
            DriftSystem::Harmonic => "harmonic",
            DriftSystem::ScalarDecay(_) => "scalar_decay",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DriftSystem::Duffing(_) | DriftSystem::Harmonic => 2,
            DriftSystem::ScalarDecay(_) => 1,
            DriftSystem::Linear(p) => p.matrix.len(),
        }
    }

    /// Checks the family-specific parameter invariants.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            DriftSystem::Duffing(p) => {
                finite("delta", p.delta)?;
                finite("alpha", p.alpha)?;
                finite("beta", p.beta)?;
                finite("gamma", p.gamma)?;
                finite("omega", p.omega)?;
                if p.delta < 0.0 {
                    return Err(Error::param(format!("delta must be >= 0, got {}", p.delta)));
                }
            }
            DriftSystem::ScalarDecay(p) => finite("lambda", p.lambda)?,
            DriftSystem::Linear(p) => {
                let m = p.matrix.len();
                if m == 0 || m > MAX_DIM {
                    return Err(Error::UnsupportedDimension(m));
                }
                for row in &p.matrix {
                    if row.len() != m {
                        return Err(Error::param(format!(
                            "linear matrix must be square, row has {} entries for {m} rows",
                            row.len()
                        )));
                    }
                    for &v in row {
                        finite("matrix entry", v)?;
                    }
                }
            }
            DriftSystem::Harmonic => {}
        }
        Ok(())
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(())
    }

    fn linear_matrix(p: &LinearParams) -> DMatrix<f64> {
        let m = p.matrix.len();
        DMatrix::from_fn(m, m, |i, j| p.matrix[i][j])
    }

    pub fn eval_drift(&self, t: f64, y: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(y)?;
        Ok(match self {
            DriftSystem::Duffing(p) => DVector::from_vec(vec![
                y[1],
                -p.delta * y[1] - p.alpha * y[0] - p.beta * y[0].powi(3)
                    + p.gamma * (p.omega * t).cos(),
            ]),
            DriftSystem::Linear(p) => Self::linear_matrix(p) * DVector::from_column_slice(y),
            DriftSystem::Harmonic => DVector::from_vec(vec![y[1], -y[0]]),
            DriftSystem::ScalarDecay(p) => DVector::from_vec(vec![-p.lambda * y[0]]),
        })
    }

    pub fn eval_jacobian(&self, _t: f64, y: &[f64]) -> Result<JacobianMatrix> {
        self.check_dim(y)?;
        Ok(match self {
            DriftSystem::Duffing(p) => DMatrix::from_row_slice(
                2,
                2,
                &[0.0, 1.0, -p.alpha - 3.0 * p.beta * y[0] * y[0], -p.delta],
            ),
            DriftSystem::Linear(p) => Self::linear_matrix(p),
            DriftSystem::Harmonic => DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            DriftSystem::ScalarDecay(p) => DMatrix::from_element(1, 1, -p.lambda),
        })
    }

    /// Central-difference Jacobian, column `j` is
    /// `(B(t, y + h eⱼ) - B(t, y - h eⱼ)) / 2h`.
    pub fn fd_jacobian(&self, t: f64, y: &[f64], h: f64) -> Result<JacobianMatrix> {
        if !(h > 0.0) {
            return Err(Error::param(format!("finite-difference step must be > 0, got {h}")));
        }
        self.check_dim(y)?;
        let m = self.dim();
        let mut jac = DMatrix::zeros(m, m);
        let mut probe = y.to_vec();
        for j in 0..m {
            probe[j] = y[j] + h;
            let fwd = self.eval_drift(t, &probe)?;
            probe[j] = y[j] - h;
            let bwd = self.eval_drift(t, &probe)?;
            probe[j] = y[j];
            jac.set_column(j, &((fwd - bwd) / (2.0 * h)));
        }
        Ok(jac)
    }

    /// Gradient of the conserved level function `H⁽⁰⁾`, when the family
    /// has one (`harmonic`: `∇H⁽⁰⁾ = y`). Dissipative families return `None`.
    pub fn level_gradient(&self, _t: f64, y: &[f64]) -> Option<DVector<f64>> {
        match self {
            DriftSystem::Harmonic => Some(DVector::from_column_slice(y)),
            _ => None,
        }
    }

    /// Whether the zero-order potential is forced to be constant, i.e. the
    /// flow contracts phase-space volume and has no conserved level function.
    pub fn is_dissipative(&self) -> bool {
        match self {
            DriftSystem::Duffing(p) => p.delta > 0.0,
            DriftSystem::ScalarDecay(p) => p.lambda > 0.0,
            DriftSystem::Harmonic => false,
            DriftSystem::Linear(p) => {
                let a = Self::linear_matrix(p);
                crate::spectral::amplification_rate(&a)
                    .map(|r| r.sigma.is_some())
                    .unwrap_or(false)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn systems() -> Vec<DriftSystem> {
        vec![
            DriftSystem::duffing(DuffingParams::standard()).unwrap(),
            DriftSystem::scalar_decay(2.0).unwrap(),
            DriftSystem::harmonic(),
            DriftSystem::linear(&DMatrix::from_row_slice(
                3,
                3,
                &[-1.0, 0.5, 0.0, -0.2, -2.0, 1.0, 0.3, 0.0, -0.7],
            ))
            .unwrap(),
        ]
    }

    #[test]
    fn duffing_drift_at_origin_is_pure_forcing() {
        let sys = DriftSystem::duffing(DuffingParams::standard()).unwrap();
        let b = sys.eval_drift(0.0, &[0.0, 0.0]).unwrap();
        assert_eq!(b.as_slice(), &[0.0, 0.5]);
    }

    #[test]
    fn simple_drifts() {
        let b = DriftSystem::scalar_decay(2.0).unwrap().eval_drift(0.0, &[3.0]).unwrap();
        assert_eq!(b.as_slice(), &[-6.0]);
        let b = DriftSystem::harmonic().eval_drift(0.0, &[1.0, 0.0]).unwrap();
        assert_eq!(b.as_slice(), &[0.0, -1.0]);
    }

    #[test]
    fn duffing_jacobian_entries() {
        let sys = DriftSystem::duffing(DuffingParams::standard()).unwrap();
        let m0 = sys.eval_jacobian(0.0, &[0.0, 0.4]).unwrap();
        assert_eq!(m0, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.3]));
        let m1 = sys.eval_jacobian(0.0, &[1.0, -2.0]).unwrap();
        assert_eq!(m1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.3]));
        let s = DriftSystem::scalar_decay(2.0).unwrap();
        assert_eq!(s.eval_jacobian(0.0, &[5.0]).unwrap()[(0, 0)], -2.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let sys = DriftSystem::harmonic();
        assert!(matches!(
            sys.eval_drift(0.0, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(sys.eval_jacobian(0.0, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn fd_step_must_be_positive() {
        let sys = DriftSystem::harmonic();
        assert!(sys.fd_jacobian(0.0, &[0.0, 0.0], 0.0).is_err());
        assert!(sys.fd_jacobian(0.0, &[0.0, 0.0], -1e-3).is_err());
    }

    #[test]
    fn fd_matches_analytic_at_named_points() {
        let duff = DriftSystem::duffing(DuffingParams::standard()).unwrap();
        let diff = duff.fd_jacobian(0.0, &[0.0, 0.0], 1e-5).unwrap()
            - duff.eval_jacobian(0.0, &[0.0, 0.0]).unwrap();
        assert!(diff.amax() <= 1e-8);

        let harm = DriftSystem::harmonic();
        let fd = harm.fd_jacobian(0.0, &[0.3, -0.7], 1e-5).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((fd - expected).amax() <= 1e-8);
    }

    #[test]
    fn fd_is_exact_for_linear_fields() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.5, 2.0, 0.25, -0.5]);
        let sys = DriftSystem::linear(&a).unwrap();
        let fd = sys.fd_jacobian(1.0, &[10.0, -3.0], 1e-3).unwrap();
        assert!((fd - a).amax() <= 1e-9);
    }

    #[test]
    fn analytic_and_fd_jacobians_agree_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for sys in systems() {
            for _ in 0..100 {
                let t = rng.gen_range(-10.0..10.0);
                let y: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let diff = sys.eval_jacobian(t, &y).unwrap() - sys.fd_jacobian(t, &y, 1e-5).unwrap();
                assert!(diff.amax() <= 1e-6, "{}: {}", sys.name(), diff.amax());
            }
        }
    }

    #[test]
    fn duffing_trace_is_minus_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = DuffingParams { delta: 0.7, alpha: -1.0, beta: 2.0, gamma: 0.3, omega: 0.9 };
        let sys = DriftSystem::duffing(p).unwrap();
        for _ in 0..100 {
            let y = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            assert_eq!(sys.eval_jacobian(rng.gen(), &y).unwrap().trace(), -0.7);
        }
    }

    #[test]
    fn harmonic_flow_is_tangent_to_energy_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = DriftSystem::harmonic();
        for _ in 0..100 {
            let y = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let b = sys.eval_drift(0.0, &y).unwrap();
            let g = sys.level_gradient(0.0, &y).unwrap();
            assert_abs_diff_eq!(b.dot(&g), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut p = DuffingParams::standard();
        p.delta = -0.1;
        assert!(DriftSystem::duffing(p).is_err());
        p.delta = f64::NAN;
        assert!(DriftSystem::duffing(p).is_err());
        assert!(DriftSystem::scalar_decay(f64::INFINITY).is_err());
        assert!(DriftSystem::linear(&DMatrix::zeros(5, 5)).is_err());
        let ragged = DriftSystem::Linear(LinearParams { matrix: vec![vec![1.0, 2.0], vec![3.0]] });
        assert!(ragged.validate().is_err());
    }

    #[test]
    fn dissipativity_by_family() {
        assert!(DriftSystem::duffing(DuffingParams::standard()).unwrap().is_dissipative());
        assert!(!DriftSystem::harmonic().is_dissipative());
        assert!(DriftSystem::scalar_decay(1.0).unwrap().is_dissipative());
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        assert!(DriftSystem::linear(&diag).unwrap().is_dissipative());
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(!DriftSystem::linear(&rot).unwrap().is_dissipative());
    }

    #[test]
    fn config_json_round_trip() {
        let sys = DriftSystem::duffing(DuffingParams::standard()).unwrap();
        let text = serde_json::to_string(&sys).unwrap();
        assert!(text.contains("\"id\":\"duffing\""));
        let back: DriftSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sys);
        let bad = r#"{"id":"duffing","delta":0.3,"alpha":1,"beta":1,"gamma":0.5,"omega":1.2,"typo":1}"#;
        assert!(serde_json::from_str::<DriftSystem>(bad).is_err());
        let sd: DriftSystem = serde_json::from_str(r#"{"id":"scalar_decay","lambda":1.0}"#).unwrap();
        assert_eq!(sd.dim(), 1);
    }
}
