use contact_focus::drift::{DriftSystem, DuffingParams};
use contact_focus::geometry::SymTensor2;
use contact_focus::transport::{
    degeneracy_profile, h2_closed_form, h2_direct, h2_projected, integrate_characteristic, integrate_variational,
    liouville_error, step_halving_order,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn duffing() -> DriftSystem {
    DriftSystem::duffing(DuffingParams::standard()).unwrap()
}

fn diag12() -> DriftSystem {
    DriftSystem::linear(&DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]))).unwrap()
}

#[test]
fn duffing_determinant_is_exponential_of_trace() {
    let sys = duffing();
    let path = integrate_characteristic(&sys, &[0.0, 0.0], 0.0, 20.0, 1e-3).unwrap();
    let phi = integrate_variational(&sys, &path, false, None).unwrap();
    for (t, det) in phi.times.iter().zip(phi.determinants()) {
        let exact = (-0.3 * t).exp();
        assert!((det - exact).abs() <= 1e-6 * exact, "t = {t}");
    }
    assert!(liouville_error(&sys, &path, &phi).unwrap() <= 1e-6);
}

#[test]
fn liouville_holds_for_linear_and_scalar_systems() {
    for (sys, y0) in [(diag12(), vec![1.0, 1.0]), (DriftSystem::scalar_decay(0.7).unwrap(), vec![2.0])] {
        let path = integrate_characteristic(&sys, &y0, 0.0, 5.0, 1e-3).unwrap();
        let phi = integrate_variational(&sys, &path, false, None).unwrap();
        assert!(liouville_error(&sys, &path, &phi).unwrap() <= 1e-6);
    }
}

#[test]
fn fundamental_matrix_cocycle() {
    let sys = duffing();
    let path = integrate_characteristic(&sys, &[0.3, -0.4], 0.0, 10.0, 1e-3).unwrap();
    let full = integrate_variational(&sys, &path, false, None).unwrap();
    let k = 4000;
    let tail = integrate_variational(&sys, &path.tail(k), false, None).unwrap();
    let composed = tail.last() * &full.matrices[k];
    assert!((composed - full.last()).norm() <= 1e-8 * full.last().norm());
}

#[test]
fn linear_fundamental_matrix_is_matrix_exponential() {
    let a = DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, -2.0, -0.3]);
    let sys = DriftSystem::linear(&a).unwrap();
    let path = integrate_characteristic(&sys, &[1.0, 0.0], 0.0, 4.0, 1e-3).unwrap();
    let phi = integrate_variational(&sys, &path, false, None).unwrap();
    for (t, p) in phi.times.iter().zip(&phi.matrices).step_by(250) {
        assert!((p - (&a * *t).exp()).norm() <= 1e-10, "t = {t}");
    }
}

#[test]
fn direct_transport_matches_closed_form() {
    let cases: Vec<(DriftSystem, Vec<f64>, f64)> = vec![
        (DriftSystem::scalar_decay(1.0).unwrap(), vec![1.0], 5.0),
        (diag12(), vec![1.0, -1.0], 5.0),
        (duffing(), vec![0.0, 0.0], 20.0),
    ];
    for (sys, y0, t_end) in cases {
        let m = sys.dim();
        let path = integrate_characteristic(&sys, &y0, 0.0, t_end, 1e-3).unwrap();
        let phi = integrate_variational(&sys, &path, false, None).unwrap();
        let h0 = SymTensor2::identity(m);
        let closed = h2_closed_form(&phi, &h0).unwrap();
        let direct = h2_direct(&sys, &path, &h0).unwrap();
        let dist = closed.max_distance(&direct);
        assert!(dist <= 1e-6, "{}: {dist:e}", sys.name());
    }
}

#[test]
fn diagonal_transport_matches_exponentials() {
    let sys = diag12();
    let path = integrate_characteristic(&sys, &[1.0, 1.0], 0.0, 3.0, 1e-3).unwrap();
    let direct = h2_direct(&sys, &path, &SymTensor2::identity(2)).unwrap();
    for (t, h) in direct.times.iter().zip(&direct.tensors) {
        let exact = DMatrix::from_diagonal(&DVector::from_vec(vec![(-2.0 * t).exp(), (-4.0 * t).exp()]));
        assert!((h.matrix() - exact).norm() <= 1e-10);
    }
}

fn harmonic_grad(_t: f64, y: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(y)
}

#[test]
fn projected_transport_preserves_harmonic_degeneracy() {
    let sys = DriftSystem::harmonic();
    let path = integrate_characteristic(&sys, &[1.0, 0.0], 0.0, 10.0, 1e-3).unwrap();
    let h0 = SymTensor2::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])).unwrap();
    let series = h2_projected(&sys, &path, &h0, &harmonic_grad).unwrap();
    let profile = degeneracy_profile(&series, &path, &harmonic_grad);
    let worst = profile.iter().copied().fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst:e}");
    assert_eq!(series.identity_branch_hits, 0);

    // Exact solution v vᵀ with v = (sin t, cos t).
    for (t, h) in series.times.iter().zip(&series.tensors) {
        let v = DVector::from_vec(vec![t.sin(), t.cos()]);
        assert!((h.matrix() - &v * v.transpose()).norm() <= 1e-8, "t = {t}");
    }
}

#[test]
fn projected_transport_with_zero_gradient_is_direct_transport() {
    let sys = duffing();
    let path = integrate_characteristic(&sys, &[0.2, 0.1], 0.0, 5.0, 1e-3).unwrap();
    let h0 = SymTensor2::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
    let zero = |_t: f64, _y: &[f64]| DVector::zeros(2);
    let projected = h2_projected(&sys, &path, &h0, &zero).unwrap();
    let direct = h2_direct(&sys, &path, &h0).unwrap();
    assert_eq!(projected.max_distance(&direct), 0.0);
    assert!(projected.identity_branch_hits > 0);
}

#[test]
fn projected_transport_rejects_nondegenerate_start() {
    let sys = DriftSystem::harmonic();
    let path = integrate_characteristic(&sys, &[1.0, 0.0], 0.0, 1.0, 1e-3).unwrap();
    let bad = SymTensor2::identity(2);
    assert!(h2_projected(&sys, &path, &bad, &harmonic_grad).is_err());
}

#[test]
fn rk4_converges_at_fourth_order() {
    let scalar = step_halving_order(&DriftSystem::scalar_decay(1.0).unwrap(), &[1.0], 0.0, 2.0, 0.1).unwrap();
    let harmonic = step_halving_order(&DriftSystem::harmonic(), &[1.0, 0.0], 0.0, 2.0, 0.1).unwrap();
    assert!(scalar >= 3.8, "{scalar}");
    assert!(harmonic >= 3.8, "{harmonic}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn direct_transport_stays_symmetric_and_congruent(
        a in prop::collection::vec(-1.0..1.0f64, 4),
        b in prop::collection::vec(-1.0..1.0f64, 4),
    ) {
        let a = DMatrix::from_row_slice(2, 2, &a);
        let sys = DriftSystem::linear(&a).unwrap();
        let path = integrate_characteristic(&sys, &[1.0, 0.0], 0.0, 1.0, 1e-3).unwrap();
        let bm = DMatrix::from_row_slice(2, 2, &b);
        let h0 = SymTensor2::symmetrized(&(&bm * bm.transpose()));
        let direct = h2_direct(&sys, &path, &h0).unwrap();
        let exact = a.exp() * h0.matrix() * a.transpose().exp();
        let last = direct.tensors.last().unwrap().matrix();
        prop_assert!((last - last.transpose()).amax() == 0.0);
        prop_assert!((last - exact).norm() <= 1e-8 * (1.0 + h0.frobenius()));
    }
}
