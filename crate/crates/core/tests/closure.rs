use contact_focus::closure::{
    harmonic, linear_const_k, order_residual, poisson, random_rational_point, rational, recurrence, verify_closure,
    Exponents, Poly, Var,
};
use contact_focus::drift::DriftSystem;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coef() -> impl Strategy<Value = BigRational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| rational(n, d))
}

/// Random polynomial in `m` dimensions with total degree at most `max_deg`.
fn poly(m: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Poly> {
    let nvars = 1 + 2 * m;
    let exp = prop::collection::vec(0u32..=max_deg, nvars)
        .prop_filter("total degree", move |e: &Exponents| e.iter().sum::<u32>() <= max_deg);
    prop::collection::vec((exp, coef()), 1..=max_terms).prop_map(move |ts| Poly::from_terms(m, ts).unwrap())
}

/// Random polynomial homogeneous of φ-degree `n`.
fn homogeneous(m: usize, n: u32) -> impl Strategy<Value = Poly> {
    let yexp = prop::collection::vec(0u32..=2, 1 + m);
    let phiexp = prop::collection::vec(0u32..=n, m).prop_filter("φ-degree", move |e: &Vec<u32>| e.iter().sum::<u32>() == n);
    prop::collection::vec((yexp, phiexp, coef()), 1..=4).prop_map(move |ts| {
        Poly::from_terms(m, ts.into_iter().map(|(mut a, b, c)| {
            a.extend(b);
            (a, c)
        }))
        .unwrap()
    })
}

fn dims_and<S: Strategy>(f: impl Fn(usize) -> S + Clone + 'static) -> impl Strategy<Value = (usize, S::Value)>
where
    S::Value: std::fmt::Debug,
{
    (1usize..=2).prop_flat_map(move |m| (Just(m), f(m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bracket_is_antisymmetric((_, (f, g)) in dims_and(|m| (poly(m, 3, 5), poly(m, 3, 5)))) {
        let fg = poisson(&f, &g).unwrap();
        let gf = poisson(&g, &f).unwrap();
        prop_assert!((fg + &gf).is_zero());
        prop_assert!(poisson(&f, &f).unwrap().is_zero());
    }

    #[test]
    fn discriminant_equals_euler_minus_identity((_, h) in dims_and(|m| poly(m, 4, 6))) {
        prop_assert_eq!(h.discriminant(), h.euler() - &h);
    }

    #[test]
    fn phi_parts_sum_back((_, h) in dims_and(|m| poly(m, 4, 6))) {
        let parts = h.phi_parts();
        let sum = parts.values().fold(Poly::zero(h.dim()), |a, p| a + p);
        prop_assert_eq!(sum, h.clone());
        for (n, p) in &parts {
            prop_assert!(p.is_phi_homogeneous(*n));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn jacobi_identity((_, (f, g, k)) in dims_and(|m| (poly(m, 3, 4), poly(m, 3, 4), poly(m, 3, 4)))) {
        let b = |a: &Poly, c: &Poly| poisson(a, c).unwrap();
        let sum = b(&f, &b(&g, &k)) + &b(&g, &b(&k, &f)) + &b(&k, &b(&f, &g));
        prop_assert!(sum.is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn euler_eigenvalue((_, hs) in dims_and(|m| (homogeneous(m, 0), homogeneous(m, 1), homogeneous(m, 2), homogeneous(m, 3), homogeneous(m, 4)))) {
        let hs = [hs.0, hs.1, hs.2, hs.3, hs.4];
        for (n, h) in hs.iter().enumerate() {
            prop_assert_eq!(h.euler(), h.scale_int(n as i64));
        }
    }

    #[test]
    fn bracket_degree_law(
        (_, (a, b, c, d)) in dims_and(|m| (homogeneous(m, 1), homogeneous(m, 2), homogeneous(m, 3), homogeneous(m, 0)))
    ) {
        let hs = [(0u32, d), (1, a), (2, b), (3, c)];
        for (n, f) in &hs {
            for (k, g) in &hs {
                let br = poisson(f, g).unwrap();
                if !br.is_zero() {
                    prop_assert!(n + k >= 1);
                    prop_assert!(br.is_phi_homogeneous(n + k - 1), "{{H{n}, H{k}}} = {br}");
                }
            }
        }
    }
}

fn eval_f64(p: &Poly, x: &[f64]) -> f64 {
    p.terms()
        .map(|(exp, c)| c.to_f64().unwrap() * exp.iter().zip(x).map(|(&e, v)| v.powi(e as i32)).product::<f64>())
        .sum()
}

#[test]
fn harmonic_stiffness_commutes_with_rotation_numerically() {
    // Central-difference bracket of ½(−y²φ₁ + y¹φ₂)² and y²φ₁ − y¹φ₂.
    let data = harmonic();
    let (h1, h2) = (data.component(1), data.component(2));
    assert!(poisson(&h2, &h1).unwrap().is_zero());
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let eps = 1e-5;
    for _ in 0..20 {
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let partial = |p: &Poly, k: usize| {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[k] += eps;
            b[k] -= eps;
            (eval_f64(p, &a) - eval_f64(p, &b)) / (2.0 * eps)
        };
        let bracket: f64 = (0..2)
            .map(|i| partial(&h2, 1 + i) * partial(&h1, 3 + i) - partial(&h2, 3 + i) * partial(&h1, 1 + i))
            .sum();
        assert!(bracket.abs() < 1e-6, "{bracket}");
    }
}

#[test]
fn harmonic_drift_matches_built_in_field() {
    let drift = harmonic().drift();
    let sys = DriftSystem::harmonic();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b = sys.eval_drift(x[0], &x[1..3]).unwrap();
        for i in 0..2 {
            assert_eq!(eval_f64(&drift[i], &x), b[i]);
        }
    }
}

#[test]
fn harmonic_second_order_residual_vanishes_at_rational_points() {
    let data = harmonic();
    let c2 = order_residual(&data, 2);
    // Independent expansion: ∂_t H⁽²⁾ = 0, so C₂ = {H⁽²⁾, H⁽¹⁾} − 3{H⁽⁰⁾, H⁽³⁾}.
    let manual = poisson(&data.component(2), &data.component(1)).unwrap();
    assert_eq!(c2, manual);
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..50 {
        let x = random_rational_point(&mut rng, 2);
        assert_eq!(c2.eval(&x).unwrap(), rational(0, 1));
    }
}

#[test]
fn recurrence_matches_order_residual_for_random_higher_order_data() {
    // N = 4 potentials exercise every index range of the recurrence.
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strat = (homogeneous(2, 0), homogeneous(2, 1), homogeneous(2, 2), homogeneous(2, 3), homogeneous(2, 4));
    for _ in 0..10 {
        let (h0, h1, h2, h3, h4) = strat.new_tree(&mut runner).unwrap().current();
        let h0 = h0 + &(&Poly::t(2) * &Poly::y(2, 0));
        let data = contact_focus::closure::ContactPotentialData::new(2, vec![h0, h1, h2, h3, h4]).unwrap();
        for p in 2..=4 {
            assert_eq!(recurrence(&data, p), order_residual(&data, p), "p = {p}");
        }
        let report = verify_closure(&data, 7).unwrap();
        assert!(report.sample_check.routes_agree);
        assert!(report.sample_check.zero_claims_confirmed);
    }
}

#[test]
fn linear_const_k_second_order_residual_by_hand() {
    for (n, d) in [(1, 1), (-2, 3), (7, 2)] {
        let k = rational(n, d);
        let data = linear_const_k(k.clone());
        let phi = Poly::phi(1, 0);
        assert_eq!(order_residual(&data, 2), (&phi * &phi).scale(&k));
        let report = verify_closure(&data, 4).unwrap();
        assert!(!report.conditions.recurrence.holds);
        assert!(report.conditions.residual_brackets.holds);
    }
}

#[test]
fn diff_by_time_only_touches_t() {
    let m = 1;
    let p = &(&Poly::t(m) * &Poly::t(m)) * &Poly::y(m, 0);
    assert_eq!(p.diff(Var::T).unwrap(), (&Poly::t(m) * &Poly::y(m, 0)).scale_int(2));
}
