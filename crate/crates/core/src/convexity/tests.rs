use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::fixtures::{
    ball_mask, elliptic_normal_t3, essentially_real_t2, essentially_real_t3, levi_flat_cr, log_ball_weight,
    complex_t2,
};
use crate::grid::VectorField;
use crate::linalg::CMat;
use crate::structure::commutator_coefficients;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn real(chart: &std::sync::Arc<crate::grid::Chart>, f: impl Fn(&[f64]) -> f64) -> ScalarField {
    ScalarField::from_real_fn(chart, f)
}

/// V = span{∂₁, ∂₂ + sin x₁ ∂₁} on T³: real, with a nonzero bracket.
fn skewed_real_t3(res: usize) -> FIStructure {
    let s = essentially_real_t3(res).unwrap();
    let ch = s.chart().clone();
    let x2 = VectorField::new(vec![
        real(&ch, |p| p[0].sin()),
        ScalarField::constant(&ch, c(1.0)),
        ScalarField::zeros(&ch),
    ])
    .unwrap();
    FIStructure::new(vec![s.v_frame()[0].clone(), x2], s.complement().to_vec()).unwrap()
}

/// Another admissible (d, e): add f to both coefficients of the real frame field `l`.
fn shifted(e: &CommutatorCoefficients, l: usize, f: &ScalarField) -> CommutatorCoefficients {
    let n = e.n();
    let mut d = e.d_fields().to_vec();
    let mut ee = e.e_fields().to_vec();
    for j in 0..n {
        for k in 0..n {
            let i = (j * n + k) * n + l;
            let g = f.scale(c((1 + j + 2 * k) as f64));
            d[i] = &d[i] + &g;
            ee[i] = &ee[i] + &g;
        }
    }
    CommutatorCoefficients::from_fields(n, d, ee).unwrap()
}

fn rows_where(s: &FIStructure, mask: &[bool]) -> Vec<usize> {
    let ch = s.chart();
    let mut rows: Vec<usize> = (0..ch.len()).filter(|&p| mask[p]).map(|p| ch.unflatten(p)[0]).collect();
    rows.sort_unstable();
    rows.dedup();
    rows
}

#[test]
fn critical_rows_of_sine() {
    let s = essentially_real_t2(16).unwrap();
    let phi = real(s.chart(), |p| p[0].sin());
    let m = critical_sets(&s, &phi, MASK_TOL).unwrap();
    assert_eq!(rows_where(&s, &m.k), vec![4, 12]);
    assert_eq!(m.k, m.c);
}

#[test]
fn critical_center_of_elliptic_bump() {
    let s = complex_t2(16).unwrap();
    let phi = crate::fixtures::periodic_dist2(s.chart(), &[PI, PI]);
    let m = critical_sets(&s, &phi, MASK_TOL).unwrap();
    let centre = s.chart().flatten(&[8, 8]);
    assert!(m.c[centre]);
    assert!(m.k.iter().all(|&k| k));
}

#[test]
fn levi_flat_product_has_full_k() {
    let s = levi_flat_cr(8).unwrap();
    let phi = real(s.chart(), |p| p[0].sin() + p[2].cos());
    let m = critical_sets(&s, &phi, MASK_TOL).unwrap();
    assert_eq!(m.k_count(), s.chart().len());
    assert!(m.c.iter().zip(&m.k).all(|(&c, &k)| !c || k));
}

#[test]
fn constant_weight_has_zero_form() {
    let s = elliptic_normal_t3(8).unwrap();
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    let q = q_form(&s, &ScalarField::constant(s.chart(), c(3.0)), &e).unwrap();
    assert!(q.max_diff(&q.scale(0.0)) < 1e-13);
    for qq in 1..=2 {
        assert!(!check_q_convex(&s, &ScalarField::constant(s.chart(), c(3.0)), qq, 1e-9).unwrap().pass);
    }
    assert!(check_q_convex(&s, &ScalarField::constant(s.chart(), c(3.0)), 3, 1e-9).unwrap().pass);
}

#[test]
fn q_out_of_range() {
    let s = essentially_real_t2(8).unwrap();
    let phi = real(s.chart(), |p| p[0].cos());
    assert!(matches!(check_q_convex(&s, &phi, 0, 1e-9), Err(Error::OutOfRange(_))));
    assert!(matches!(check_q_convex(&s, &phi, 3, 1e-9), Err(Error::OutOfRange(_))));
}

#[test]
fn normal_form_eigenvalues_at_origin() {
    // Periodic version of |z|² + t²: 2(1 − cos x) has second derivative 2 at 0.
    let s = elliptic_normal_t3(16).unwrap();
    let phi = real(s.chart(), |p| 2.0 * (3.0 - p[0].cos() - p[1].cos() - p[2].cos()));
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    let q = q_form(&s, &phi, &e).unwrap();
    let vals = hermitian_eigen(q.at(0)).0;
    assert!((vals[0] - 1.0).abs() < 1e-10 && (vals[1] - 2.0).abs() < 1e-10, "{vals:?}");
}

#[test]
fn sign_count_examples() {
    assert_eq!(sign_counts(&CMat::identity(3, 3), None, 1e-12), (3, 0, 0));
    let d = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-1.0)]));
    assert_eq!(sign_counts(&d, None, 1e-12), (1, 0, 1));
    let d = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0), c(-1.0)]));
    let v = CMat::from_column_slice(2, 1, &[c(0.5f64.sqrt()), c(0.5f64.sqrt())]);
    // The 1×1 restriction is vᴴ D v = (2 − 1)/2.
    let restricted = (v.adjoint() * &d * &v)[(0, 0)].re;
    assert!((restricted - 0.5).abs() < 1e-15);
    assert_eq!(sign_counts(&d, Some(&v), 1e-12), (1, 0, 0));
}

#[test]
fn morse_index_sets_convexity_degree() {
    let s = essentially_real_t3(16).unwrap();
    let phi = real(s.chart(), |p| p[0].cos() + p[1].cos());
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    let degrees = convexity_degrees(&s, &phi, &e, 1e-9).unwrap();
    let ch = s.chart();
    let mut seen = 0;
    for (p, d) in degrees.iter().enumerate() {
        let Some(d) = d else { continue };
        let k = ch.unflatten(p);
        // Leafwise Hessian diag(−cos x₁, −cos x₂): one negative direction per coordinate at 0.
        let index = (k[0] == 0) as usize + (k[1] == 0) as usize;
        assert_eq!(*d, index + 1, "point {k:?}");
        seen += 1;
    }
    assert_eq!(seen, 4 * 16);
    for q in 1..=3 {
        assert_eq!(check_q_convex(&s, &phi, q, 1e-9).unwrap().pass, q == 3);
    }
}

#[test]
fn saddle_fails_one_passes_two() {
    let s = essentially_real_t2(16).unwrap();
    let phi = real(s.chart(), |p| p[0].cos());
    let r1 = check_q_convex(&s, &phi, 1, 1e-9).unwrap();
    assert!(!r1.pass);
    assert_eq!(s.chart().unflatten(r1.witness.unwrap())[0], 0);
    assert_eq!(r1.checked, 32);
    assert_eq!(r1.failures, 16);
    assert!(check_q_convex(&s, &phi, 2, 1e-9).unwrap().pass);
}

#[test]
fn e_choice_is_invisible_on_k() {
    let cases: Vec<(FIStructure, usize, ScalarField)> = {
        let a = skewed_real_t3(16);
        let pa = real(a.chart(), |p| p[0].cos() + p[1].sin() * p[2].cos());
        let b = elliptic_normal_t3(16).unwrap();
        let pb = real(b.chart(), |p| p[2].cos() + 0.5 * p[0].sin() * p[1].cos());
        vec![(a, 0, pa), (b, 1, pb)]
    };
    for (s, l, phi) in cases {
        let e = commutator_coefficients(&s, 1e-8).unwrap();
        let f = real(s.chart(), |p| 1.0 + p[0].cos() * p[2].sin());
        let alt = shifted(&e, l, &f);
        let q1 = q_form(&s, &phi, &e).unwrap();
        let q2 = q_form(&s, &phi, &alt).unwrap();
        let k = critical_sets(&s, &phi, MASK_TOL).unwrap().k;
        assert!(k.iter().any(|&b| b));
        assert!(q1.max_diff_on(&q2, &k) < 1e-8, "{}", q1.max_diff_on(&q2, &k));
        assert!(q1.max_diff(&q2) > 1e-3);
    }
}

fn regauged(s: &FIStructure, g: &[[ScalarField; 2]; 2]) -> FIStructure {
    let x = s.v_frame();
    let comb = |j: usize| x[0].scale_by(&g[0][j]).unwrap().add(&x[1].scale_by(&g[1][j]).unwrap()).unwrap();
    FIStructure::new(vec![comb(0), comb(1)], s.complement().to_vec()).unwrap()
}

fn k_sign_counts(s: &FIStructure, phi: &ScalarField) -> Vec<(usize, usize, usize)> {
    let e = commutator_coefficients(s, 1e-8).unwrap();
    let q = q_form(s, phi, &e).unwrap();
    let m = critical_sets(s, phi, MASK_TOL).unwrap();
    let xphi = frame_derivatives(s, phi).unwrap();
    (0..m.k.len())
        .filter(|&p| m.k[p])
        .map(|p| {
            let b: Vec<C64> = if m.c[p] { vec![ZERO; s.n()] } else { xphi.iter().map(|f| f.at(p)).collect() };
            sign_counts(q.at(p), Some(&kernel_subspace(&b)), 1e-6)
        })
        .collect()
}

#[test]
fn frame_change_preserves_sign_counts() {
    let s = elliptic_normal_t3(16).unwrap();
    let ch = s.chart().clone();
    let phi = real(&ch, |p| p[2].cos() + 0.5 * p[0].sin() * p[1].cos());
    let g = [
        [real(&ch, |p| 2.0 + p[1].cos()), ScalarField::from_fn(&ch, |p| C64::new(0.0, 0.3 * p[0].sin()))],
        [ScalarField::zeros(&ch), real(&ch, |p| 1.5 + 0.5 * p[2].sin())],
    ];
    let t = regauged(&s, &g);
    let before = k_sign_counts(&s, &phi);
    assert!(!before.is_empty());
    assert_eq!(before, k_sign_counts(&t, &phi));
}

#[test]
fn tensor_power_is_linear() {
    let s = elliptic_normal_t3(8).unwrap();
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    let w = real(s.chart(), |p| p[0].cos() * p[2].sin() + 0.3 * p[1].sin());
    let h = LineBundleMetric::single(w, 1).unwrap();
    let base = q_form_metric(&s, &h, 0, &e).unwrap();
    for tau in [2, 3, 7] {
        let qt = q_form_metric(&s, &h.with_tau(tau).unwrap(), 0, &e).unwrap();
        assert_eq!(qt.max_diff(&base.scale(tau as f64)), 0.0);
        let direct = q_form(&s, &h.with_tau(tau).unwrap().weight(0), &e).unwrap();
        assert!(direct.max_diff(&qt) < 1e-11 * tau as f64);
    }
}

#[test]
fn local_positivity_with_one_negative_direction() {
    let s = essentially_real_t3(16).unwrap();
    let ch = s.chart().clone();
    let w = real(&ch, |p| p[0].cos() + p[1].cos());
    let region = ball_mask(&ch, &[PI, 0.0, PI], 0.5 + PI);
    let region: Vec<bool> = (0..ch.len())
        .map(|p| {
            let x = ch.point(p);
            region[p] && (x[0] - PI).abs() < 0.5 && (x[1].min(2.0 * PI - x[1])) < 0.5
        })
        .collect();
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    // At (π, 0) the leafwise Hessian is diag(1, −1).
    for tau in [1, 4] {
        let h = LineBundleMetric::single(w.clone(), tau).unwrap();
        let r1 = check_q_positive_with(&s, &h, &e, 1, 1e-9, Some(&region)).unwrap();
        let r2 = check_q_positive_with(&s, &h, &e, 2, 1e-9, Some(&region)).unwrap();
        assert_eq!(r1.checked, 16);
        assert!(!r1.pass && r2.pass);
    }
    let bowl = LineBundleMetric::single(real(&ch, |p| p[0].cos() - p[1].cos()), 3).unwrap();
    assert!(check_q_positive_with(&s, &bowl, &e, 1, 1e-9, Some(&region)).unwrap().pass);
}

#[test]
fn discrepancy_is_rejected() {
    let s = levi_flat_cr(8).unwrap();
    let ch = s.chart().clone();
    let w0 = real(&ch, |p| p[0].cos());
    let f = ScalarField::from_fn(&ch, |p| C64::new(0.0, p[2].sin()).exp() * 2.0);
    let good = &w0 + &ScalarField::constant(&ch, c(4f64.ln()));
    let h = LineBundleMetric::new(vec![good, w0.clone()], vec![((0, 1), f.clone())], 1).unwrap();
    assert!(h.discrepancy_residual() < 1e-12);
    assert!(h.check(&s, 1e-9).is_ok());
    let bad = LineBundleMetric::new(vec![w0.clone(), w0], vec![((0, 1), f)], 1).unwrap();
    assert!(matches!(check_q_positive(&s, &bad, 1, 1e-9), Err(Error::Discrepancy(_))));
}

#[test]
fn log_ball_weight_is_one_convex_inside() {
    let s = complex_t2(32).unwrap();
    let ch = s.chart().clone();
    let phi = log_ball_weight(&ch, &[PI, PI], 3.0).unwrap();
    let region = ball_mask(&ch, &[PI, PI], 1.2);
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    assert!(check_q_convex_with(&s, &phi, &e, 1, 1e-9, Some(&region)).unwrap().pass);
    // The weight has saddles away from the ball.
    assert!(!check_q_convex_with(&s, &phi, &e, 1, 1e-9, None).unwrap().pass);
}

#[test]
fn compensation_lifts_to_target() {
    let s = essentially_real_t2(16).unwrap();
    let ch = s.chart().clone();
    let phi = real(&ch, |p| p[0].sin());
    let region: Vec<bool> = (0..ch.len()).map(|p| ch.point(p)[0].cos() > 0.5).collect();
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    let comp = compensate_e(&s, &phi, &e, &region).unwrap();
    let q = q_form(&s, &phi, &comp.e).unwrap();
    for p in (0..ch.len()).filter(|&p| region[p]) {
        let x = ch.point(p)[0];
        // X = cos x₁ ∂₁, X(φ) = cos² x₁, ψ = (1.5 + sin x₁)/cos² x₁, so Q′ = −sin x₁ + ψ cos² x₁.
        assert!((comp.x_phi[p] - x.cos().powi(2)).abs() < 1e-10);
        assert!((comp.psi.at(p).re - (1.5 + x.sin()) / x.cos().powi(2)).abs() < 1e-9);
        let lmin = hermitian_eigen(q.at(p)).0[0];
        assert!(lmin >= 1.0 - 1e-6);
        assert!((lmin - 1.5).abs() < 1e-9);
    }
}

#[test]
fn compensation_edge_cases() {
    let s = essentially_real_t2(8).unwrap();
    let ch = s.chart().clone();
    let phi = real(&ch, |p| p[0].sin());
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    let none = compensate_e(&s, &phi, &e, &vec![false; ch.len()]).unwrap();
    assert_eq!(none.psi.max_abs(), 0.0);
    for (a, b) in none.e.e_fields().iter().zip(e.e_fields()) {
        assert_eq!(a.data(), b.data());
    }
    let cr = levi_flat_cr(8).unwrap();
    let phi = real(cr.chart(), |p| p[0].sin());
    let e = commutator_coefficients(&cr, 1e-8).unwrap();
    let mut region = vec![false; cr.chart().len()];
    region[5] = true;
    assert!(matches!(compensate_e(&cr, &phi, &e, &region), Err(Error::NoRealDirection(5))));
}

fn metric(chart: &std::sync::Arc<crate::grid::Chart>, m: CMat) -> MatrixField {
    MatrixField::from_fn(chart, |_| m.clone()).unwrap()
}

#[test]
fn eigenfloor_examples() {
    let ch = crate::grid::Chart::torus(1, 4).unwrap();
    let one = ScalarField::constant(&ch, c(1.0));
    let id = eigenfloor_metric(&metric(&ch, CMat::identity(2, 2)), &one, 0.25).unwrap();
    assert!((id.matrices().at(0) - CMat::identity(2, 2)).norm() < 1e-14);
    let a = CMat::from_diagonal(&CVec::from_vec(vec![c(-1.0), c(2.0)]));
    let out = eigenfloor_metric(&metric(&ch, a), &one, 0.25).unwrap();
    let vals = out.eigenvalues(0);
    // θ(−1) = −1 + 5·2³ with κ = 1 + 1/δ = 5.
    assert!((vals[0] - 2.0).abs() < 1e-12 && (vals[1] - 39.0).abs() < 1e-12);
    assert!(vals[1] >= 4.0);
    assert!(matches!(eigenfloor_metric(&metric(&ch, CMat::identity(2, 2)), &one, 0.0), Err(Error::OutOfRange(_))));
}

#[test]
fn eigenfloor_commutes_with_unitaries() {
    let ch = crate::grid::Chart::torus(1, 4).unwrap();
    let eta = real(&ch, |p| 1.5 + p[0].sin());
    let a = CMat::from_row_slice(2, 2, &[c(0.3), C64::new(-1.0, 0.4), C64::new(-1.0, -0.4), c(-2.0)]);
    let (t, s) = (0.7f64, 1.1f64);
    let u = CMat::from_row_slice(
        2,
        2,
        &[C64::new(t.cos(), 0.0), -C64::from_polar(t.sin(), -s), C64::from_polar(t.sin(), s), c(t.cos())],
    );
    let lhs = eigenfloor_metric(&metric(&ch, &u * &a * u.adjoint()), &eta, 0.2).unwrap();
    let rhs = eigenfloor_metric(&metric(&ch, a), &eta, 0.2).unwrap();
    for p in 0..ch.len() {
        let r = &u * rhs.matrices().at(p) * u.adjoint();
        assert!((lhs.matrices().at(p) - r).norm() < 1e-10);
    }
}

#[test]
fn hermitian_metric_validation() {
    let ch = crate::grid::Chart::torus(1, 4).unwrap();
    let skew = CMat::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.0), c(1.0)]);
    assert!(HermitianMetricField::new(metric(&ch, skew)).is_err());
    let indefinite = CMat::from_diagonal(&CVec::from_vec(vec![c(-1.0), c(2.0)]));
    assert!(HermitianMetricField::new(metric(&ch, indefinite)).is_err());
}

#[test]
fn chi_from_local_convex_weight() {
    let s = complex_t2(32).unwrap();
    let ch = s.chart().clone();
    let phi = log_ball_weight(&ch, &[PI, PI], 3.0).unwrap();
    let region = ball_mask(&ch, &[PI, PI], 1.2);
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    let f = estimate_fields(&s, &phi, &e, EstimateParams::new(1), Some(&region)).unwrap();
    let t: Vec<f64> = (0..=40).map(|i| -2.5 + 0.05 * i as f64).collect();
    let tab = ChiTables::from_fields(&f, &t).unwrap();
    let chi = construct_chi(&tab).unwrap();
    let check = chi.verify(&f, 1e-8);
    assert!(check.pass, "{check:?}");
}

#[test]
fn chi_reports_unbounded_sup() {
    let s = essentially_real_t2(16).unwrap();
    let phi = real(s.chart(), |p| p[0].cos());
    let e = commutator_coefficients(&s, 1e-8).unwrap();
    let f = estimate_fields(&s, &phi, &e, EstimateParams::new(1), None).unwrap();
    let t: Vec<f64> = (0..=30).map(|i| -1.0 + 0.1 * i as f64).collect();
    assert!(matches!(ChiTables::from_fields(&f, &t), Err(Error::UnboundedSup { .. })));
    let short = [0.0, 0.5, 1.0];
    assert!(matches!(ChiTables::from_fields(&f, &short), Err(Error::OutOfRange(_))));
}

proptest! {
    #[test]
    fn eigenfloor_profile_bounds(t in -50.0f64..50.0, delta in 0.01f64..2.0) {
        let th = eigenfloor_profile(t, delta);
        if t <= 0.0 {
            prop_assert!(th >= t.abs() / delta - 1e-9 * t.abs());
        } else {
            prop_assert!(th >= t);
        }
        if t >= 1.0 {
            prop_assert_eq!(th, t);
        }
        prop_assert!(th > 0.0);
    }

    #[test]
    fn critical_masks_nest(a in -2.0f64..2.0, b in -2.0f64..2.0, k in 1i32..3) {
        let s = elliptic_normal_t3(8).unwrap();
        let phi = real(s.chart(), |p| a * (k as f64 * p[0]).cos() + b * p[2].sin() + p[1].sin() * p[2].cos());
        let m = critical_sets(&s, &phi, MASK_TOL).unwrap();
        prop_assert!(m.c.iter().zip(&m.k).all(|(&c, &k)| !c || k));
    }

    #[test]
    fn q_form_is_hermitian(seed in 0u64..1000) {
        let s = crate::fixtures::mizohata_free(8).unwrap();
        let mut rng = crate::random::seeded(seed);
        let phi = crate::random::random_real_trig_field(s.chart(), 2, &mut rng);
        let e = commutator_coefficients(&s, 1e-8).unwrap();
        let q = q_form(&s, &phi, &e).unwrap();
        for m in q.matrices().matrices() {
            prop_assert_eq!((m - m.adjoint()).norm(), 0.0);
        }
    }
}
