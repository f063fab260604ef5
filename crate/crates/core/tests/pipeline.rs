//! End-to-end use of the public API across modules.

use fiskit_core::fixtures::{complex_t2, essentially_real_t2, elliptic_normal_t3};
use fiskit_core::logforms::{homotopy_operator, random_basic_form};
use fiskit_core::random::{random_form, random_trig_field, seeded};
use fiskit_core::structure::TwistForm;
use fiskit_core::{assemble, exterior_derivative, leafwise_cohomology, solve, wedge, ScalarField};
use proptest::prelude::*;

#[test]
fn exact_data_is_solved_to_roundoff() {
    let s = elliptic_normal_t3(8).unwrap();
    let w = ScalarField::from_real_fn(s.chart(), |p| 0.4 * p[1].sin());
    let cx = assemble(&s, &TwistForm::zero(s.chart()), 1, &w).unwrap();
    let mut rng = seeded(3);
    let g = cx.from_fields(0, &[vec![random_trig_field(s.chart(), 2, &mut rng)]]).unwrap();
    let f = cx.apply(0, &g).unwrap();
    let (u, rep) = solve(&cx, 1, &f).unwrap();
    assert!(rep.obstruction < 1e-9 * cx.norm(1, &f), "{rep:?}");
    let du = cx.apply(0, &u).unwrap();
    let err: Vec<_> = du.iter().zip(&f).map(|(a, b)| a - b).collect();
    assert!(cx.norm(1, &err) < 1e-9 * cx.norm(1, &f));
}

#[test]
fn constants_are_obstructed_on_the_flat_torus() {
    let s = complex_t2(8).unwrap();
    let cx = assemble(&s, &TwistForm::zero(s.chart()), 1, &ScalarField::zeros(s.chart())).unwrap();
    let f = vec![fiskit_core::C64::new(1.0, 0.0); cx.dim(1)];
    let (_, rep) = solve(&cx, 1, &f).unwrap();
    assert!((rep.obstruction - cx.norm(1, &f)).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn leafwise_defect_is_one_per_leaf(half in 2usize..8) {
        let n = 2 * half;
        let s = essentially_real_t2(n).unwrap();
        let rep = leafwise_cohomology(&s, &TwistForm::zero(s.chart()), 0).unwrap();
        prop_assert_eq!(rep.defect, n);
    }

    #[test]
    fn graded_leibniz_rule(seed in 0u64..1000, p in 0usize..2) {
        let s = essentially_real_t2(12).unwrap();
        let ch = s.chart();
        let mut rng = seeded(seed);
        let (a, b) = (random_form(ch, p, 2, &mut rng), random_form(ch, 1 - p, 2, &mut rng));
        let lhs = exterior_derivative(&wedge(&a, &b).unwrap()).unwrap();
        let da_b = wedge(&exterior_derivative(&a).unwrap(), &b).unwrap();
        let a_db = wedge(&a, &exterior_derivative(&b).unwrap()).unwrap();
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = da_b.add(&a_db.scale(fiskit_core::C64::new(sign, 0.0))).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-9 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn homotopy_inverts_d_on_closed_forms(seed in 0u64..1000, m in 1usize..4) {
        let f = random_basic_form(m, 0, 0, 5, &mut seeded(seed)).d();
        prop_assert_eq!(homotopy_operator(&f).unwrap().d(), f);
    }
}
