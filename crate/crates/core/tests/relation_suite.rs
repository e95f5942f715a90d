use num_complex::Complex64 as C64;
use proptest::prelude::*;
use quatsphere::fock::{materialize, SpaceSpec};
use quatsphere::qgroup::{eta, CircleMode, GeneratorAssignment};
use quatsphere::relations::{
    build_presentation, compare_q0, eval_residual, eval_residual_matrix, format_relation, q_zero_presentation, verify,
    Family, Generators, PresentationParams,
};

fn gens(k: usize, n: usize, a: &GeneratorAssignment) -> Generators {
    Generators::new(eta(k, n, CircleMode::Bilateral, a).unwrap()).unwrap()
}

fn top(n: usize) -> Generators {
    gens(2 * n, n, &GeneratorAssignment::default_for(n).unwrap())
}

/// Row one, starred, not reversed: passes the first-level constraint but not
/// the relations.
fn wrong(n: usize) -> Generators {
    gens(2 * n, n, &GeneratorAssignment::structural(n, 1, true, false))
}

#[test]
fn every_relation_holds_at_the_top_level() {
    for n in 2..=3 {
        let g = top(n);
        let p = PresentationParams::calibrated(n);
        for q in [0.2, 0.5, 0.8] {
            let r16 = verify(&build_presentation(n), &g, &p, q, 16, 3).unwrap();
            let r32 = verify(&build_presentation(n), &g, &p, q, 32, 3).unwrap();
            for (a, b) in r16.iter().zip(&r32) {
                assert!(a.value <= 1e-9, "n={n} q={q} {}", a.id);
                assert!(b.value <= a.value, "n={n} q={q} {}", a.id);
            }
        }
    }
}

#[test]
fn unit_sum_holds_at_every_level() {
    for n in 2..=3 {
        let a = GeneratorAssignment::default_for(n).unwrap();
        let c8: Vec<_> = build_presentation(n).into_iter().filter(|r| r.family == Family::C8).collect();
        let p = PresentationParams::calibrated(n);
        for k in 1..=2 * n {
            let r = verify(&c8, &gens(k, n, &a), &p, 0.5, 16, 3).unwrap();
            assert!(r[0].value <= 1e-9, "n={n} k={k}");
        }
    }
}

#[test]
fn c3_at_the_top_index() {
    let rels = build_presentation(2);
    let c3 = rels.iter().find(|r| r.family == Family::C3 && r.indices == [4]).unwrap();
    assert_eq!(format_relation(c3), "c3[i=4]: z4* z1 - q^2 z1 z4* = 0");
    let r = eval_residual(c3, &top(2), &PresentationParams::calibrated(2), 0.5, 16, 3).unwrap();
    assert!(r.value <= 1e-9);
}

#[test]
fn the_unit_sum_detects_zero_images() {
    let g = top(2);
    let zero = g.scaled(C64::new(0.0, 0.0));
    let rels = build_presentation(2);
    let c8 = rels.iter().find(|r| r.family == Family::C8).unwrap();
    let r = eval_residual(c8, &zero, &PresentationParams::calibrated(2), 0.5, 6, 1).unwrap();
    assert!((r.value - 1.0).abs() < 1e-12);
}

#[test]
fn a_wrong_assignment_is_visible() {
    let r = verify(&build_presentation(2), &wrong(2), &PresentationParams::calibrated(2), 0.5, 8, 2).unwrap();
    assert!(r.iter().any(|x| x.value > 1e-2));
}

#[test]
fn symbolic_and_matrix_residuals_agree() {
    let g = wrong(2);
    let p = PresentationParams::calibrated(2);
    let space = SpaceSpec::uniform(g.modes(), 6).unwrap();
    let mats: Vec<_> = g.images().iter().map(|e| materialize(e, &space, 0.5).unwrap()).collect();
    for rel in build_presentation(2) {
        let sym = eval_residual(&rel, &g, &p, 0.5, 6, 2).unwrap().value;
        let mat = eval_residual_matrix(&rel, &mats, &p, 0.5, 2).unwrap();
        assert!((sym - mat).abs() <= 1e-9 * (1.0 + sym), "{}: {sym} vs {mat}", rel.id());
    }
}

#[test]
fn q_zero_presentation_on_the_spheres() {
    for (n, d) in [(2, 8), (3, 6)] {
        let c = compare_q0(n, d, 2 * n - 1, &GeneratorAssignment::default_for(n).unwrap()).unwrap();
        assert!(c.syntactic_pass, "n={n}");
        assert!(c.relations.iter().all(|r| r.value == 0.0));
    }
    let bad = compare_q0(2, 6, 2, &GeneratorAssignment::default_for(2).unwrap()).unwrap();
    assert!(!bad.pass);
}

#[test]
fn q_zero_presentation_contents() {
    let text: Vec<String> = q_zero_presentation(3).unwrap().iter().map(format_relation).collect();
    assert!(text.iter().any(|s| s.ends_with(": z6 z1 = 0")), "{text:?}");
    for i in 1..=6 {
        for j in 1..=6 {
            if i != j {
                let want = format!(": z{i}* z{j} = 0");
                assert!(text.iter().any(|s| s.ends_with(&want)), "{want}");
            }
        }
    }
}

#[test]
fn q_zero_images_satisfy_the_q_zero_presentation() {
    for n in 2..=3 {
        let g = top(n).at_q_zero().unwrap();
        let r = verify(&q_zero_presentation(n).unwrap(), &g, &PresentationParams::calibrated(n), 0.0, 8, 2).unwrap();
        assert!(r.iter().all(|x| x.value == 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn unimodular_scaling_leaves_residuals_unchanged(theta in 0.0f64..std::f64::consts::TAU, q in 0.1f64..0.9) {
        let g = wrong(2);
        let s = g.scaled(C64::from_polar(1.0, theta));
        let p = PresentationParams::calibrated(2);
        for rel in build_presentation(2).iter().filter(|r| r.family != Family::C8) {
            let a = eval_residual(rel, &g, &p, q, 5, 1).unwrap().value;
            let b = eval_residual(rel, &s, &p, q, 5, 1).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a), "{}: {} vs {}", rel.id(), a, b);
        }
    }
}
