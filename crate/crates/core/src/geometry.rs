//! Degeneracy projector `P⊥`, projected Jacobian `M̃ = P⊥ M P⊥` and the
//! rotational compensator `Δ[H⁽²⁾] = H⁽²⁾Mᵀ(I−P⊥) + (I−P⊥)MH⁽²⁾`.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Default threshold on `|∇H⁽⁰⁾|` below which the projector is the identity.
pub const DEFAULT_ZERO_GRADIENT_TOL: f64 = 1e-12;

/// Symmetric second-order stiffness tensor `H⁽²⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2(DMatrix<f64>);

impl SymTensor2 {
    /// Accepts `m` if it is square, finite and symmetric within `1e-12`
    /// relative to its largest entry.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("tensor has non-finite entries"));
        }
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * m.amax().max(1.0) {
            return Err(Error::param(format!("tensor is not symmetric (asymmetry {asym:e})")));
        }
        Ok(SymTensor2(m))
    }

    /// `(m + mᵀ)/2`, without a symmetry check.
    pub fn symmetrized(m: &DMatrix<f64>) -> Self {
        SymTensor2((m + m.transpose()) * 0.5)
    }

    pub fn identity(dim: usize) -> Self {
        SymTensor2(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        SymTensor2(DMatrix::zeros(dim, dim))
    }

    /// `v vᵀ`.
    pub fn outer(v: &DVector<f64>) -> Self {
        SymTensor2(v * v.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.0.row(i).iter().copied().collect()).collect()
    }
}

impl Serialize for SymTensor2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

/// Orthogonal projector onto the complement of a gradient direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: DMatrix<f64>,
    identity_branch: bool,
}

impl Projector {
    pub fn identity(dim: usize) -> Self {
        Projector { matrix: DMatrix::identity(dim, dim), identity_branch: true }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// True when the gradient was at or below the zero threshold.
    pub fn is_identity_branch(&self) -> bool {
        self.identity_branch
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `I − P⊥`, the projector onto the gradient direction.
    pub fn complement(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) - &self.matrix
    }
}

/// `I` when `|g| ≤ tol`, else `I − g gᵀ / |g|²`.
pub fn projector(g: &DVector<f64>, tol: f64) -> Projector {
    let m = g.len();
    let norm = g.norm();
    if norm <= tol {
        return Projector::identity(m);
    }
    let n = g / norm;
    Projector {
        matrix: DMatrix::identity(m, m) - &n * n.transpose(),
        identity_branch: false,
    }
}

fn check_square(expected: usize, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != expected || m.ncols() != expected {
        return Err(Error::DimensionMismatch { expected, got: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

/// `M̃ = P⊥ M P⊥`.
pub fn projected_jacobian(m: &DMatrix<f64>, p: &Projector) -> Result<DMatrix<f64>> {
    check_square(p.dim(), m)?;
    Ok(p.matrix() * m * p.matrix())
}

/// `Δ[H⁽²⁾] = H⁽²⁾Mᵀ(I−P⊥) + (I−P⊥)MH⁽²⁾`.
pub fn compensator(h2: &SymTensor2, m: &DMatrix<f64>, p: &Projector) -> Result<SymTensor2> {
    check_square(p.dim(), m)?;
    check_square(p.dim(), h2.matrix())?;
    if p.is_identity_branch() {
        return Ok(SymTensor2::zeros(p.dim()));
    }
    let q = p.complement();
    let half = h2.matrix() * m.transpose() * &q;
    // The two terms are transposes of each other.
    Ok(SymTensor2(&half + half.transpose()))
}

/// `‖H⁽²⁾ g‖`.
pub fn degeneracy_residual(h2: &SymTensor2, g: &DVector<f64>) -> f64 {
    (h2.matrix() * g).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn projector_examples() {
        let p = projector(&DVector::from_vec(vec![0.0, 0.0]), 1e-12);
        assert!(p.is_identity_branch());
        assert_eq!(p.matrix(), &DMatrix::identity(2, 2));

        let p = projector(&DVector::from_vec(vec![1.0, 0.0]), 1e-12);
        assert_eq!(p.matrix(), &m2(0.0, 0.0, 0.0, 1.0));

        // I − ggᵀ/2 for g = (1, 1).
        let p = projector(&DVector::from_vec(vec![1.0, 1.0]), 1e-12);
        assert!((p.matrix() - m2(0.5, -0.5, -0.5, 0.5)).amax() < 1e-15);
    }

    #[test]
    fn projected_jacobian_examples() {
        let m = m2(0.3, -1.2, 4.0, 0.7);
        assert_eq!(projected_jacobian(&m, &Projector::identity(2)).unwrap(), m);

        let p = projector(&DVector::from_vec(vec![1.0, 0.0]), 1e-12);
        let mt = projected_jacobian(&m2(0.0, 1.0, -1.0, 0.0), &p).unwrap();
        assert_eq!(mt, DMatrix::zeros(2, 2));

        let p1 = projector(&DVector::from_vec(vec![2.5]), 1e-12);
        let mt = projected_jacobian(&DMatrix::from_element(1, 1, -3.0), &p1).unwrap();
        assert_eq!(mt[(0, 0)], 0.0);

        assert!(projected_jacobian(&DMatrix::zeros(3, 3), &p).is_err());
    }

    #[test]
    fn compensator_examples() {
        let m = m2(0.0, 1.0, -1.0, 0.0);
        let h2 = SymTensor2::new(m2(0.0, 0.0, 0.0, 1.0)).unwrap();
        let delta = compensator(&h2, &m, &Projector::identity(2)).unwrap();
        assert_eq!(delta, SymTensor2::zeros(2));

        // I − P = ((1,0),(0,0)): H Mᵀ(I−P) = ((0,0),(1,0)) and
        // (I−P) M H = ((0,1),(0,0)). Same as d/dt (v vᵀ) at t = 0 for
        // v = (sin t, cos t), the exact harmonic solution through this point.
        let p = projector(&DVector::from_vec(vec![1.0, 0.0]), 1e-12);
        let delta = compensator(&h2, &m, &p).unwrap();
        assert_eq!(delta.matrix(), &m2(0.0, 1.0, 1.0, 0.0));

        let delta = compensator(&SymTensor2::zeros(2), &m, &p).unwrap();
        assert_eq!(delta.frobenius(), 0.0);
    }

    #[test]
    fn sym_tensor_validation() {
        assert!(SymTensor2::new(m2(1.0, 2.0, 2.0, 1.0)).is_ok());
        assert!(SymTensor2::new(m2(1.0, 2.0, 2.1, 1.0)).is_err());
        assert!(SymTensor2::new(DMatrix::zeros(2, 3)).is_err());
        assert!(SymTensor2::new(m2(f64::NAN, 0.0, 0.0, 1.0)).is_err());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        (1usize..=4).prop_flat_map(|m| prop::collection::vec(-10.0..10.0f64, m))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn projector_invariants(g in vec_strategy()) {
            let g = DVector::from_vec(g);
            let p = projector(&g, DEFAULT_ZERO_GRADIENT_TOL);
            let pm = p.matrix();
            prop_assert!((pm * pm - pm).amax() <= 1e-10);
            prop_assert!((pm - pm.transpose()).amax() <= 1e-12);
            if g.norm() > DEFAULT_ZERO_GRADIENT_TOL {
                prop_assert!((pm * &g).amax() <= 1e-10 * g.norm().max(1.0));
            }
        }

        #[test]
        fn compensator_is_symmetric_and_low_rank(
            m in 2usize..=4,
            seed in prop::collection::vec(-2.0..2.0f64, 40),
        ) {
            let mut it = seed.into_iter();
            let g = DVector::from_fn(m, |_, _| it.next().unwrap());
            let jac = DMatrix::from_fn(m, m, |_, _| it.next().unwrap());
            let a = DMatrix::from_fn(m, m, |_, _| it.next().unwrap());
            prop_assume!(g.norm() > 1e-3);
            let h2 = SymTensor2::symmetrized(&(&a * a.transpose()));
            let p = projector(&g, DEFAULT_ZERO_GRADIENT_TOL);
            let delta = compensator(&h2, &jac, &p).unwrap();
            let d = delta.matrix();
            prop_assert!((d - d.transpose()).amax() <= 1e-12 * d.amax().max(1.0));
            if m >= 3 {
                let sv = d.clone().svd(false, false).singular_values;
                let mut sv: Vec<f64> = sv.iter().copied().collect();
                sv.sort_by(|a, b| b.total_cmp(a));
                prop_assert!(sv[2] <= 1e-10 * d.norm().max(1e-300));
            }
        }

        #[test]
        fn zero_gradient_reduces_to_plain_transport(
            m in 1usize..=4,
            seed in prop::collection::vec(-2.0..2.0f64, 32),
        ) {
            let mut it = seed.into_iter();
            let jac = DMatrix::from_fn(m, m, |_, _| it.next().unwrap());
            let a = DMatrix::from_fn(m, m, |_, _| it.next().unwrap());
            let h2 = SymTensor2::symmetrized(&a);
            let p = projector(&DVector::zeros(m), DEFAULT_ZERO_GRADIENT_TOL);
            prop_assert_eq!(p.matrix(), &DMatrix::identity(m, m));
            prop_assert_eq!(projected_jacobian(&jac, &p).unwrap(), jac.clone());
            prop_assert_eq!(compensator(&h2, &jac, &p).unwrap(), SymTensor2::zeros(m));
        }
    }
}
