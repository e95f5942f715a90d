use num_complex::Complex64 as C64;
use proptest::prelude::*;
use quatsphere::fock::{
    format_expr, materialize, parse_expr, DiagFn, FactorKind, Mode, OperatorExpr, Primitive, SpaceSpec, TruncOp,
};

const MODES: [Mode; 2] = [Mode::Nat, Mode::Int];

fn prim() -> impl Strategy<Value = Primitive> {
    prop_oneof![
        Just(Primitive::Shift),
        Just(Primitive::CoShift),
        Just(Primitive::Id),
        (0i64..3).prop_map(Primitive::Proj),
        (1i32..3, 0i32..3).prop_map(|(slope, offset)| Primitive::Diag(DiagFn::QPow { slope, offset })),
        (1i32..3, 1i32..3).prop_map(|(slope, offset)| Primitive::Diag(DiagFn::Sq1m { slope, offset })),
    ]
}

fn int_prim() -> impl Strategy<Value = Primitive> {
    prop_oneof![
        Just(Primitive::Shift),
        Just(Primitive::CoShift),
        Just(Primitive::Id),
        (-1i64..2).prop_map(Primitive::Proj),
    ]
}

fn term() -> impl Strategy<Value = OperatorExpr> {
    (prop::collection::vec(prim(), 0..4), prop::collection::vec(int_prim(), 0..3), -2i32..3, -2i32..3).prop_map(
        |(a, b, re, im)| {
            OperatorExpr::tensor_word(&[(Mode::Nat, &a), (Mode::Int, &b)]).scale(C64::new(re as f64, im as f64 * 0.5))
        },
    )
}

fn expr() -> impl Strategy<Value = OperatorExpr> {
    prop::collection::vec(term(), 1..3)
        .prop_map(|ts| ts.iter().fold(OperatorExpr::zero(&MODES), |acc, t| acc.add(t).unwrap()))
}

fn space() -> SpaceSpec {
    SpaceSpec::new(vec![FactorKind::NatTrunc(5), FactorKind::IntTrunc(3)]).unwrap()
}

fn close(a: &TruncOp, b: &TruncOp) -> bool {
    a.max_abs_diff(b).unwrap() < 1e-12
}

/// Largest entry difference over columns far enough from the truncation edge
/// that no intermediate index of the product `e·f` leaves the space.
fn interior_gap(lhs: &TruncOp, rhs: &TruncOp, shift: i64) -> f64 {
    let s = lhs.space().clone();
    let d = lhs.sub(rhs).unwrap();
    d.entries()
        .filter(|&(_, c, _)| {
            s.labels(c).iter().zip(s.factors()).all(|(&n, k)| match k {
                FactorKind::NatTrunc(d) => n + shift < *d as i64,
                FactorKind::IntTrunc(d) => n.abs() + shift <= *d as i64,
            })
        })
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_is_involution(e in expr()) {
        prop_assert!(e.adjoint().adjoint().symbol_distance(&e).unwrap() < 1e-12);
    }

    #[test]
    fn adjoint_reverses_products(a in expr(), b in expr()) {
        let lhs = a.compose(&b).unwrap().adjoint();
        let rhs = b.adjoint().compose(&a.adjoint()).unwrap();
        prop_assert!(lhs.symbol_distance(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn symbolic_product_is_associative(a in expr(), b in expr(), c in expr()) {
        let l = a.compose(&b).unwrap().compose(&c).unwrap();
        let r = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert!(l.symbol_distance(&r).unwrap() < 1e-12);
    }

    #[test]
    fn matrix_laws(a in expr(), b in expr(), c in expr(), q in 0.05f64..0.95) {
        let sp = space();
        let (ma, mb, mc) = (
            materialize(&a, &sp, q).unwrap(),
            materialize(&b, &sp, q).unwrap(),
            materialize(&c, &sp, q).unwrap(),
        );
        let ab = ma.compose(&mb).unwrap();
        prop_assert!(close(&ab.compose(&mc).unwrap(), &ma.compose(&mb.compose(&mc).unwrap()).unwrap()));
        prop_assert!(close(
            &ma.compose(&mb.add(&mc).unwrap()).unwrap(),
            &ab.add(&ma.compose(&mc).unwrap()).unwrap()
        ));
        prop_assert!(close(&ab.adjoint(), &mb.adjoint().compose(&ma.adjoint()).unwrap()));
    }

    #[test]
    fn materialize_is_linear(a in expr(), b in expr(), q in 0.0f64..0.95) {
        let sp = space();
        let lhs = materialize(&a.add(&b).unwrap().scale(C64::new(0.5, -1.0)), &sp, q).unwrap();
        let rhs = materialize(&a, &sp, q).unwrap().add(&materialize(&b, &sp, q).unwrap()).unwrap()
            .scale(C64::new(0.5, -1.0));
        prop_assert!(close(&lhs, &rhs));
    }

    #[test]
    fn materialize_is_multiplicative_off_the_edge(a in expr(), b in expr(), q in 0.05f64..0.95) {
        let sp = space();
        let prod = materialize(&a.compose(&b).unwrap(), &sp, q).unwrap();
        let mat = materialize(&a, &sp, q).unwrap().compose(&materialize(&b, &sp, q).unwrap()).unwrap();
        let shift = b.max_shift() as i64;
        prop_assert!(interior_gap(&prod, &mat, shift) < 1e-12);
    }

    #[test]
    fn q_zero_specialization_commutes_with_materialize(a in expr()) {
        let sp = space();
        if let Ok(direct) = materialize(&a, &sp, 0.0) {
            let special = materialize(&a.at_q_zero().unwrap(), &sp, 0.0).unwrap();
            prop_assert!(close(&direct, &special));
        }
    }

    #[test]
    fn text_round_trip(a in expr()) {
        let s = format_expr(&a);
        let back = parse_expr(&s, &MODES).unwrap();
        prop_assert!(back.symbol_distance(&a).unwrap() < 1e-12);
        prop_assert_eq!(format_expr(&back), s);
    }

    #[test]
    fn tail_norm_is_monotone(a in expr(), q in 0.05f64..0.95) {
        let m = materialize(&a, &space(), q).unwrap();
        let norms: Vec<f64> = (0..5).map(|k| m.ess_norm_est(k, &[0]).unwrap()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
            prop_assert!(w[1] >= 0.0);
        }
    }

    #[test]
    fn q_zero_powers_are_vacuum_projection(alpha in 1i32..6) {
        let sp = SpaceSpec::new(vec![FactorKind::NatTrunc(6)]).unwrap();
        let e = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: alpha, offset: 0 })]);
        let p0 = materialize(&OperatorExpr::word(Mode::Nat, &[Primitive::Proj(0)]), &sp, 0.0).unwrap();
        prop_assert_eq!(materialize(&e, &sp, 0.0).unwrap(), p0);
    }
}

#[test]
fn shift_identities_on_the_half_line() {
    let sp = SpaceSpec::new(vec![FactorKind::NatTrunc(6)]).unwrap();
    let s = OperatorExpr::word(Mode::Nat, &[Primitive::Shift]);
    let id = OperatorExpr::identity(&[Mode::Nat]);
    assert_eq!(s.compose(&s.adjoint()).unwrap(), id);
    let m = materialize(&s, &sp, 0.5).unwrap();
    let one = TruncOp::identity(sp.clone());
    // S* S - 1 = -p_0 already in infinite dimensions.
    let defect = m.adjoint().compose(&m).unwrap().sub(&one).unwrap();
    assert!((defect.interior_residual(1).unwrap() - 1.0).abs() < 1e-15);
    // The truncation defect of S S* sits at the top index only.
    let top = m.compose(&m.adjoint()).unwrap().sub(&one).unwrap();
    assert_eq!(top.interior_residual(1).unwrap(), 0.0);
}
