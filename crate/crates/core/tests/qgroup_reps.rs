use num_complex::Complex64 as C64;
use quatsphere::fock::{format_expr, materialize, Mode, OperatorExpr, Primitive, SpaceSpec};
use quatsphere::qgroup::{
    assignment_search, circle_rep, convolve, elementary_rep, eta, torus_char, weyl_rep, word_rep, CircleMode,
    GeneratorAssignment, RepMap, WeylWord,
};
use quatsphere::relations::{build_presentation, verify, Generators, PresentationParams};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn same_table(a: &RepMap, b: &RepMap) -> bool {
    let n = a.n();
    (1..=2 * n).all(|i| (1..=2 * n).all(|j| a.entry(i, j) == b.entry(i, j)))
}

fn t() -> OperatorExpr {
    OperatorExpr::word(Mode::Int, &[Primitive::CoShift])
}

#[test]
fn elementary_tables() {
    let top = elementary_rep(2, 2).unwrap();
    assert_eq!(format_expr(top.entry(2, 2)), "sqrt(1-q^{4N+4})@1 * S@1");
    let first = elementary_rep(1, 2).unwrap();
    assert_eq!(format_expr(first.entry(2, 1)), "q^{N}@1");
    assert!(first.entry(1, 3).is_zero());
    assert!(elementary_rep(3, 2).is_err());
}

#[test]
fn torus_characters() {
    let one = torus_char(&[c(1.0, 0.0); 2], 2).unwrap();
    for i in 1..=4 {
        for j in 1..=4 {
            let want = if i == j { OperatorExpr::scalar(c(1.0, 0.0)) } else { OperatorExpr::scalar(c(0.0, 0.0)) };
            assert_eq!(*one.entry(i, j), want);
        }
    }
    let (t1, t2) = (C64::from_polar(1.0, 0.3), C64::from_polar(1.0, -1.1));
    let tau = torus_char(&[t1, t2], 2).unwrap();
    assert_eq!(*tau.entry(4, 4), OperatorExpr::scalar(t1));
    assert_eq!(*tau.entry(3, 3), OperatorExpr::scalar(t2));
    let tau = torus_char(&[c(0.0, 1.0), c(1.0, 0.0)], 2).unwrap();
    assert_eq!(*tau.entry(1, 1), OperatorExpr::scalar(c(0.0, -1.0)));
    assert!(torus_char(&[c(2.0, 0.0), c(1.0, 0.0)], 2).is_err());
}

#[test]
fn counit_is_a_left_unit() {
    let one = torus_char(&[c(1.0, 0.0); 2], 2).unwrap();
    for i in 1..=2 {
        let pi = elementary_rep(i, 2).unwrap();
        assert!(same_table(&convolve(&one, &pi).unwrap(), &pi));
    }
}

#[test]
fn character_times_elementary() {
    let t1 = C64::from_polar(1.0, 0.9);
    let tau = torus_char(&[t1, c(1.0, 0.0)], 2).unwrap();
    let got = convolve(&tau, &elementary_rep(1, 2).unwrap()).unwrap();
    let want = elementary_rep(1, 2).unwrap().entry(1, 1).scale(t1.conj());
    assert_eq!(*got.entry(1, 1), want);
}

#[test]
fn convolution_associates_on_letter_triples() {
    for a in 1..=2 {
        for b in 1..=2 {
            for d in 1..=2 {
                let (x, y, z) =
                    (elementary_rep(a, 2).unwrap(), elementary_rep(b, 2).unwrap(), elementary_rep(d, 2).unwrap());
                let left = convolve(&convolve(&x, &y).unwrap(), &z).unwrap();
                let right = convolve(&x, &convolve(&y, &z).unwrap()).unwrap();
                assert!(same_table(&left, &right), "s{a} s{b} s{d}");
            }
        }
    }
}

#[test]
fn weyl_words() {
    for n in 1..=4 {
        for k in 1..=2 * n {
            assert_eq!(WeylWord::omega(k, n).unwrap().len(), k - 1);
        }
    }
    assert_eq!(WeylWord::omega(4, 2).unwrap().letters, vec![1, 2, 1]);
    assert_eq!(WeylWord::omega(5, 3).unwrap().letters, vec![1, 2, 3, 2]);
    assert!(WeylWord::omega(5, 2).is_err());
}

#[test]
fn word_rep_shapes() {
    let circle = torus_char(&[C64::from_polar(1.0, 0.4), c(1.0, 0.0)], 2).unwrap();
    let empty = word_rep(&WeylWord::omega(1, 2).unwrap(), &circle).unwrap();
    assert!(same_table(&empty, &circle));
    assert_eq!(word_rep(&WeylWord::omega(2, 2).unwrap(), &circle).unwrap().modes(), &[Mode::Nat]);
    for n in 2..=3 {
        let bil = circle_rep(n, CircleMode::Bilateral).unwrap();
        let top = word_rep(&WeylWord::omega(2 * n, n).unwrap(), &bil).unwrap();
        assert_eq!(top.modes().iter().filter(|&&m| m == Mode::Nat).count(), 2 * n - 1);
        assert_eq!(top.modes()[0], Mode::Int);
    }
    assert_eq!(weyl_rep(&WeylWord::omega(3, 2).unwrap(), 2).unwrap().modes().len(), 2);
}

#[test]
fn first_level_is_the_circle() {
    for n in 1..=3 {
        let a = GeneratorAssignment::default_for(n).unwrap();
        let y = eta(1, n, CircleMode::Bilateral, &a).unwrap();
        assert_eq!(y[0], t());
        assert!(y[1..].iter().all(OperatorExpr::is_zero));
        let t0 = C64::from_polar(1.0, 0.7);
        let y = eta(1, n, CircleMode::Sampled(t0), &a).unwrap();
        assert_eq!(y[0], OperatorExpr::scalar(t0));
    }
}

#[test]
fn images_vanish_above_the_level() {
    for n in 2..=3 {
        let a = GeneratorAssignment::default_for(n).unwrap();
        for k in 1..=2 * n {
            let y = eta(k, n, CircleMode::Bilateral, &a).unwrap();
            assert!(y[k..].iter().all(OperatorExpr::is_zero), "n={n} k={k}");
            assert!(!y[k - 1].is_zero());
        }
    }
}

#[test]
fn diagonal_images_between_n_and_2n() {
    for n in 2..=3 {
        let a = GeneratorAssignment::default_for(n).unwrap();
        for k in n + 1..2 * n {
            let mut want = t();
            for f in 1..k {
                let slope = if f == n { 2 } else { 1 };
                want = want.tensor(&OperatorExpr::word(
                    Mode::Nat,
                    &[Primitive::Diag(quatsphere::fock::DiagFn::QPow { slope, offset: 0 })],
                ));
            }
            assert_eq!(eta(k, n, CircleMode::Bilateral, &a).unwrap()[k - 1], want, "n={n} k={k}");
        }
    }
}

#[test]
fn q_zero_images_are_partial_isometry_words() {
    for n in 2..=3 {
        let a = GeneratorAssignment::default_for(n).unwrap();
        for k in 1..=2 * n {
            for y in eta(k, n, CircleMode::Bilateral, &a).unwrap() {
                let y0 = y.at_q_zero().unwrap();
                assert!(y0.is_q_free());
                assert!(y0
                    .terms()
                    .all(|(key, _)| key.words.iter().all(|w| w.diag().is_identity() || w.diag().proj().is_some())));
            }
        }
    }
}

#[test]
fn reduced_expressions_agree() {
    let a = GeneratorAssignment::default_for(2).unwrap();
    let circle = circle_rep(2, CircleMode::Bilateral).unwrap();
    let rels = build_presentation(2);
    let params = PresentationParams::calibrated(2);
    let mut vacua = Vec::new();
    for letters in [vec![1, 2, 1, 2], vec![2, 1, 2, 1]] {
        let y = a.apply(&word_rep(&WeylWord { letters }, &circle).unwrap()).unwrap();
        let gens = Generators::new(y.clone()).unwrap();
        let worst = verify(&rels, &gens, &params, 0.5, 8, 2).unwrap().iter().map(|r| r.value).fold(0.0, f64::max);
        assert!(worst <= 1e-9);
        let space = SpaceSpec::uniform(gens.modes(), 4).unwrap();
        let vac = space.ravel(&space.factors().iter().map(|f| f.position(0).unwrap()).collect::<Vec<_>>());
        vacua.push(
            y.iter()
                .map(|e| materialize(&e.compose(&e.adjoint()).unwrap(), &space, 0.5).unwrap().get(vac, vac).re)
                .collect::<Vec<_>>(),
        );
    }
    for (x, y) in vacua[0].iter().zip(&vacua[1]) {
        assert!((x - y).abs() <= 1e-9);
    }
    assert_eq!(vacua[0].last().copied(), Some(1.0));
}

#[test]
fn rank_one_search() {
    let s = assignment_search(1, 8, 0.5, 2, 1e-8).unwrap();
    assert!(s.candidates.len() <= 8);
    assert!(s.winner_residual <= 1e-10);
    let a: GeneratorAssignment = s.winner.parse().unwrap();
    assert!(a.satisfies_k1(1).unwrap());
}

#[test]
fn first_level_constraint_is_hard() {
    assert!(!GeneratorAssignment::structural(2, 4, false, false).satisfies_k1(2).unwrap());
    assert!(GeneratorAssignment::default_for(2).unwrap().satisfies_k1(2).unwrap());
}
