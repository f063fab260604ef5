use std::sync::Arc;

use super::*;
use crate::exterior::Basis;
use crate::fixtures;
use crate::grid::{partial_derivative, C64, I};
use crate::random::{random_trig_field, seeded};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn sf(chart: &Arc<Chart>, f: impl Fn(&[f64]) -> C64) -> ScalarField {
    ScalarField::from_fn(chart, f)
}

fn one_form(chart: &Arc<Chart>, comps: Vec<ScalarField>) -> Form {
    assert_eq!(comps.len(), chart.dim());
    Form::one_form(comps).unwrap()
}

fn differential(f: &ScalarField) -> Form {
    exterior_derivative(&Form::scalar(f.clone())).unwrap()
}

/// Elliptic normal chart with θ = e^{g}·dz, g = cos x₁ + sin t, so Ξ_V ≠ 0.
fn scaled_elliptic(res: usize) -> FIStructure {
    let ch = Chart::torus(3, res).unwrap();
    let inv = sf(&ch, |p| (-(p[0].cos() + p[2].sin())).exp() * c(1.0));
    let dz_dual = VectorField::constant(&ch, &[c(0.5), C64::new(0.0, -0.5), c(0.0)]).unwrap();
    FIStructure::new(
        vec![VectorField::constant(&ch, &[c(0.5), C64::new(0.0, 0.5), c(0.0)]).unwrap(), VectorField::coordinate(&ch, 2).unwrap()],
        vec![dz_dual.scale_by(&inv).unwrap()],
    )
    .unwrap()
}

/// V = span{∂₁, ∂₂ + sin x₁ ∂₁} on T³: involutive with a nonzero bracket.
fn skewed_real_t3(res: usize) -> FIStructure {
    let ch = Chart::torus(3, res).unwrap();
    let x2 = VectorField::new(vec![sf(&ch, |p| c(p[0].sin())), ScalarField::constant(&ch, c(1.0)), ScalarField::zeros(&ch)]).unwrap();
    FIStructure::new(vec![VectorField::coordinate(&ch, 0).unwrap(), x2], vec![VectorField::coordinate(&ch, 2).unwrap()]).unwrap()
}

fn rel(a: &Form, b: &Form) -> f64 {
    a.sub(b).unwrap().max_abs() / (1.0 + b.max_abs())
}

#[test]
fn theta_annihilates_v_frame() {
    for name in fixtures::NAMES {
        let s = fixtures::by_name(name, 8).unwrap();
        for j in 0..s.m() {
            for x in s.v_frame() {
                let pairing = interior(x, s.theta(j));
                assert!(pairing < 1e-10, "{name}: {pairing}");
            }
        }
    }
}

fn interior(x: &VectorField, th: &Form) -> f64 {
    let mut acc = ScalarField::zeros(x.chart());
    for (nu, c) in th.coeffs().iter().enumerate() {
        acc = &acc + &(c * x.component(nu));
    }
    acc.max_abs()
}

#[test]
fn normal_form_frame_is_integrable() {
    let s = fixtures::elliptic_normal_t3(8).unwrap();
    assert!(check_formal_integrability(&s, 1e-10).residual < 1e-12);
    let s = fixtures::mizohata_free(8).unwrap();
    assert_eq!(check_formal_integrability(&s, 1e-10).residual, 0.0);
}

#[test]
fn rotating_plane_field_is_not_integrable() {
    // [∂₁, cos x₁∂₂ + sin x₁∂₃] = −sin x₁∂₂ + cos x₁∂₃ is a unit vector orthogonal to V.
    let ch = Chart::torus(3, 8).unwrap();
    let rot = VectorField::new(vec![ScalarField::zeros(&ch), sf(&ch, |p| c(p[0].cos())), sf(&ch, |p| c(p[0].sin()))]).unwrap();
    let perp = VectorField::new(vec![ScalarField::zeros(&ch), sf(&ch, |p| c(-p[0].sin())), sf(&ch, |p| c(p[0].cos()))]).unwrap();
    let s = FIStructure::new(vec![VectorField::coordinate(&ch, 0).unwrap(), rot], vec![perp]).unwrap();
    let r = check_formal_integrability(&s, 1e-8);
    assert!(!r.pass);
    assert!((r.residual - 1.0).abs() < 1e-10);
}

#[test]
fn levi_flatness_examples() {
    let s = fixtures::planar(16, |p| 2.0 + p[1].sin()).unwrap();
    let r = check_levi_flat(&s, 1e-8).unwrap();
    assert!(r.pass && r.min_rank == 2);
    let s = fixtures::essentially_real_t2(8).unwrap();
    let r = check_levi_flat(&s, 1e-8).unwrap();
    assert!(r.pass && r.max_rank == 1);
    // a = sin x₂ vanishes on the grid rows x₂ ∈ {0, π}.
    let s = fixtures::planar(16, |p| p[1].sin()).unwrap();
    let r = check_levi_flat(&s, 1e-8).unwrap();
    assert!(!r.pass);
    assert_eq!((r.min_rank, r.max_rank), (1, 2));
}

#[test]
fn mizohata_commutator_coefficients() {
    let s = fixtures::mizohata_free(16).unwrap();
    let cc = commutator_coefficients(&s, 1e-8).unwrap();
    assert_eq!(cc.kernel_dim, 0);
    // [X, X̄] = −2i cos x₁ ∂₂ and X − X̄ = 2i(2 + sin x₁)∂₂ give d = e = −cos x₁/(2 + sin x₁).
    let expected = sf(s.chart(), |p| c(-p[0].cos() / (2.0 + p[0].sin())));
    assert!((cc.d(0, 0, 0) - &expected).max_abs() < 1e-10);
    assert!((cc.e(0, 0, 0) - &expected).max_abs() < 1e-10);
    assert!(cc.residual < 1e-10);
}

#[test]
fn commuting_frames_have_zero_coefficients() {
    for s in [fixtures::elliptic_normal_t3(8).unwrap(), fixtures::complex_t2(8).unwrap()] {
        let cc = commutator_coefficients(&s, 1e-8).unwrap();
        for f in cc.d_fields().iter().chain(cc.e_fields()) {
            assert!(f.max_abs() < 1e-12);
        }
    }
}

#[test]
fn commutator_reconstruction() {
    let s = skewed_real_t3(8);
    let cc = commutator_coefficients(&s, 1e-8).unwrap();
    let n = s.n();
    for j in 0..n {
        for k in 0..n {
            let br = lie_bracket(&s.v_frame()[j], &s.v_frame()[k].conj()).unwrap();
            for nu in 0..3 {
                let mut rec = ScalarField::zeros(s.chart());
                for l in 0..n {
                    let x = s.v_frame()[l].component(nu);
                    rec = &rec + &(&(cc.d(j, k, l) * x) - &(cc.e(j, k, l) * &x.conj()));
                }
                assert!((&rec - br.component(nu)).max_abs() < 1e-8);
            }
        }
    }
}

#[test]
fn infeasible_decomposition_is_reported() {
    let ch = Chart::torus(3, 8).unwrap();
    let rot = VectorField::new(vec![ScalarField::zeros(&ch), sf(&ch, |p| c(p[0].cos())), sf(&ch, |p| c(p[0].sin()))]).unwrap();
    let perp = VectorField::new(vec![ScalarField::zeros(&ch), sf(&ch, |p| c(-p[0].sin())), sf(&ch, |p| c(p[0].cos()))]).unwrap();
    let s = FIStructure::new(vec![VectorField::coordinate(&ch, 0).unwrap(), rot], vec![perp]).unwrap();
    assert!(matches!(commutator_coefficients(&s, 1e-8), Err(Error::InfeasibleDecomposition { .. })));
}

#[test]
fn closed_coframe_has_zero_structure_forms() {
    let s = fixtures::elliptic_normal_t3(8).unwrap();
    let sfm = structure_forms(&s, 1e-9).unwrap();
    assert!(sfm.forms[0][0].max_abs() < 1e-12);
    let xi = xi_operator(&s, &sfm).unwrap();
    assert!(xi.trace().max_abs() < 1e-12);
}

#[test]
fn rescaled_theta_structure_form_is_dg_mod_theta() {
    let s = scaled_elliptic(24);
    let sfm = structure_forms(&s, 1e-9).unwrap();
    assert!(sfm.residual < 1e-9);
    let g = sf(s.chart(), |p| c(p[0].cos() + p[2].sin()));
    let diff = sfm.forms[0][0].sub(&differential(&g)).unwrap();
    for coef in quotient_project(&s, &diff).unwrap() {
        assert!(coef.max_abs() < 1e-9, "{}", coef.max_abs());
    }
}

#[test]
fn xi_is_coframe_independent_on_mq_forms() {
    let a = fixtures::levi_flat_cr(8).unwrap();
    let b = fixtures::levi_flat_cr_rescaled(8).unwrap();
    let ops: Vec<MntOperator> = [&a, &b]
        .iter()
        .map(|s| MntOperator::new(s, &structure_forms(s, 1e-9).unwrap(), &TwistForm::zero(s.chart())).unwrap())
        .collect();
    let mut rng = seeded(11);
    for _ in 0..5 {
        let u = Form::coord(2, (0..3).map(|_| random_trig_field(a.chart(), 1, &mut rng)).collect()).unwrap();
        // Keep only the Θ-multiple so that u is an (m, 0)-form for both coframes.
        let coeffs = mq_coefficients(&a, 0, &u).unwrap();
        let u = mq_form(&a, 0, &coeffs).unwrap();
        let lhs = ops[0].apply(&u).unwrap();
        let rhs = ops[1].apply(&u).unwrap();
        assert!(rel(&lhs, &rhs) < 1e-9);
    }
}

#[test]
fn twist_validation_examples() {
    let s = fixtures::complex_t2(16).unwrap();
    let f = sf(s.chart(), |p| c(p[0].sin() * p[1].cos()));
    assert!(check_twist(&s, &differential(&f), 1e-9).unwrap().valid);
    let t = s.theta(0).mul_field(&sf(s.chart(), |p| c(p[1].sin()))).unwrap();
    assert!(check_twist(&s, &t, 1e-9).unwrap().valid);
    let s3 = fixtures::essentially_real_t3(16).unwrap();
    let ch = s3.chart().clone();
    let bad = one_form(&ch, vec![ScalarField::zeros(&ch), sf(&ch, |p| c(p[0].sin())), ScalarField::zeros(&ch)]);
    assert!(matches!(check_twist(&s3, &bad, 1e-9), Err(Error::InvalidTwist(r)) if (r - 1.0).abs() < 1e-9));
}

#[test]
fn basic_functions() {
    let ch = Chart::torus(2, 8).unwrap();
    let s = FIStructure::new(vec![VectorField::coordinate(&ch, 1).unwrap()], vec![VectorField::coordinate(&ch, 0).unwrap()]).unwrap();
    assert!(is_basic_scalar(&s, &sf(&ch, |p| (I * p[0]).exp()), 1e-10).unwrap());
    let cr = fixtures::levi_flat_cr(8).unwrap();
    assert!(is_basic_scalar(&cr, &sf(cr.chart(), |p| (I * p[2]).exp()), 1e-10).unwrap());
    assert!(!is_basic_scalar(&cr, &sf(cr.chart(), |p| c(p[0].cos())), 1e-10).unwrap());
    // Θ = dz∧dy is a basic form; dz̄ is not in Λ N*V.
    let theta = wedge(cr.theta(0), cr.theta(1)).unwrap();
    assert!(is_basic_form(&cr, &theta, 1e-10).unwrap());
    assert!(!is_basic_form(&cr, cr.omega(0), 1e-10).unwrap());
}

#[test]
fn quotient_projection_examples() {
    let s = fixtures::elliptic_normal_t3(8).unwrap();
    let a = wedge(s.theta(0), s.omega(0)).unwrap();
    assert!(quotient_project(&s, &a).unwrap().iter().all(|f| f.max_abs() < 1e-12));
    let b = wedge(s.omega(0), s.omega(1)).unwrap();
    let pb = quotient_project(&s, &b).unwrap();
    assert_eq!(pb.len(), 1);
    assert!((&pb[0] - &ScalarField::constant(s.chart(), c(1.0))).max_abs() < 1e-12);
    let mut rng = seeded(5);
    let u = crate::random::random_form(s.chart(), 1, 2, &mut rng);
    let tu = wedge(s.theta(0), &u).unwrap();
    assert!(quotient_project(&s, &tu).unwrap().iter().all(|f| f.max_abs() < 1e-12));
}

fn valid_twist(s: &FIStructure, seed: u64) -> TwistForm {
    // ϑ = df + h·θ¹ is closed modulo θ.
    let mut rng = seeded(seed);
    let f = random_trig_field(s.chart(), 1, &mut rng);
    let h = random_trig_field(s.chart(), 1, &mut rng);
    let t = differential(&f).add(&s.theta(0).mul_field(&h).unwrap()).unwrap();
    check_twist(s, &t, 1e-9).unwrap()
}

#[test]
fn operator_squares_to_zero() {
    for (s, seed) in [(fixtures::elliptic_normal_t3(16).unwrap(), 1), (fixtures::complex_t2(16).unwrap(), 2)] {
        let tw = valid_twist(&s, seed);
        let op = MntOperator::new(&s, &structure_forms(&s, 1e-9).unwrap(), &tw).unwrap();
        let mut rng = seeded(seed + 100);
        for q in 0..s.n() {
            for _ in 0..5 {
                let coeffs: Vec<ScalarField> =
                    (0..crate::exterior::binomial(s.n(), q)).map(|_| random_trig_field(s.chart(), 2, &mut rng)).collect();
                let u = mq_form(&s, q, &coeffs).unwrap();
                let du = op.apply(&u).unwrap();
                let ddu = op.apply(&du).unwrap();
                assert!(ddu.max_abs() < 1e-9 * (1.0 + du.max_abs()), "q={q}: {}", ddu.max_abs());
            }
        }
    }
}

#[test]
fn top_degree_maps_to_zero() {
    let s = fixtures::complex_t2(8).unwrap();
    let op = MntOperator::new(&s, &StructureForms::zero(&s), &TwistForm::zero(s.chart())).unwrap();
    let u = mq_form(&s, 1, &[ScalarField::constant(s.chart(), c(1.0))]).unwrap();
    let out = op.apply(&u).unwrap();
    assert_eq!(out.degree(), 3);
    assert_eq!(out.max_abs(), 0.0);
}

#[test]
fn basic_sections_are_in_the_kernel() {
    // On T² with V = ∂/∂z̄, u = f·Θ with f basic: the only periodic basic functions are constants.
    let s = fixtures::complex_t2(16).unwrap();
    let op = MntOperator::new(&s, &StructureForms::zero(&s), &TwistForm::zero(s.chart())).unwrap();
    let u = mq_form(&s, 0, &[ScalarField::constant(s.chart(), C64::new(0.3, -1.2))]).unwrap();
    assert!(op.apply(&u).unwrap().max_abs() < 1e-12);
    let v = mq_form(&s, 0, &[sf(s.chart(), |p| (I * p[0]).exp())]).unwrap();
    assert!(op.apply(&v).unwrap().max_abs() > 0.1);
}

#[test]
fn phi_signs() {
    let s = fixtures::complex_t2(8).unwrap();
    let one = ScalarField::constant(s.chart(), c(1.0));
    let u = mq_form(&s, 1, &[one.clone()]).unwrap();
    // u = dz̄∧dz = −dz∧dz̄, so v = −1 and Φ₁ flips back to +1.
    let v = theta_expansion(&s, 1, &u, 1e-10).unwrap();
    assert!((&v[0] + &one).max_abs() < 1e-12);
    assert!((&phi_iso(&s, 1, &u, 1e-10).unwrap()[0] - &one).max_abs() < 1e-12);
    let u0 = mq_form(&s, 0, &[one.clone()]).unwrap();
    assert!((&phi_iso(&s, 0, &u0, 1e-10).unwrap()[0] - &one).max_abs() < 1e-12);
    assert!(matches!(phi_iso(&s, 0, s.omega(0), 1e-10), Err(Error::MalformedExpansion(_))));
}

#[test]
fn quotient_operator_degree_zero_formula() {
    let s = fixtures::mizohata_free(16).unwrap();
    let tw = check_twist(&s, &differential(&sf(s.chart(), |p| c(p[1].cos()))), 1e-9).unwrap();
    let qo = mnt_quotient_operator(&s, &tw).unwrap();
    let f = sf(s.chart(), |p| C64::new(p[0].sin(), p[1].cos()));
    let out = qo.apply(0, &[f.clone()]).unwrap();
    // [ϑ](X) = X(cos x₂) = −i(2 + sin x₁) sin x₂.
    let xf = apply_vector(&s.v_frame()[0], &f).unwrap();
    let th = sf(s.chart(), |p| C64::new(0.0, -(2.0 + p[0].sin()) * p[1].sin()));
    assert!((&out[0] - &(&xf - &(&th * &f))).max_abs() < 1e-10);
}

#[test]
fn leafwise_derivative_for_essentially_real() {
    let s = fixtures::essentially_real_t2(16).unwrap();
    let qo = mnt_quotient_operator(&s, &TwistForm::zero(s.chart())).unwrap();
    let f = random_trig_field(s.chart(), 3, &mut seeded(2));
    let out = qo.apply(0, &[f.clone()]).unwrap();
    assert!((&out[0] - &partial_derivative(&f, 0).unwrap()).max_abs() < 1e-10);
}

#[test]
fn quotient_operator_squares_to_zero_with_brackets() {
    let s = skewed_real_t3(16);
    let qo = mnt_quotient_operator(&s, &valid_twist(&s, 9)).unwrap();
    assert!(qo.bracket_coefficient(0, 1, 0).max_abs() > 0.5);
    let mut rng = seeded(21);
    let f = random_trig_field(s.chart(), 2, &mut rng);
    let d1 = qo.apply(0, &[f]).unwrap();
    let d2 = qo.apply(1, &d1).unwrap();
    let scale = d1.iter().map(|f| f.max_abs()).fold(1.0, f64::max);
    assert!(d2[0].max_abs() < 1e-9 * scale, "{}", d2[0].max_abs());
}

#[test]
fn quotient_operator_matches_projected_full_operator() {
    let s = skewed_real_t3(16);
    let tw = valid_twist(&s, 4);
    let qo = mnt_quotient_operator(&s, &tw).unwrap();
    let mut rng = seeded(8);
    for q in 0..2 {
        let coeffs: Vec<ScalarField> =
            (0..crate::exterior::binomial(2, q)).map(|_| random_trig_field(s.chart(), 2, &mut rng)).collect();
        // Lift Σ c_J ω^J to a full form.
        let mut fields = vec![ScalarField::zeros(s.chart()); crate::exterior::binomial(3, q)];
        for (k, j) in multi_indices(2, q).iter().enumerate() {
            let pos = crate::exterior::IndexTable::new(3, q).position(j).unwrap();
            fields[pos] = coeffs[k].clone();
        }
        let u = change_basis(&Form::from_coeffs(q, s.coframe().basis(), 3, fields).unwrap(), s.coframe()).unwrap();
        let du = if q == 0 { differential(&u.coeffs()[0]) } else { exterior_derivative(&u).unwrap() };
        let full = du.sub(&wedge(&tw.form, &u).unwrap()).unwrap();
        let projected = quotient_project(&s, &full).unwrap();
        let direct = qo.apply(q, &coeffs).unwrap();
        for (a, b) in projected.iter().zip(&direct) {
            assert!((a - b).max_abs() < 1e-9 * (1.0 + b.max_abs()));
        }
    }
}

#[test]
fn phi_intertwines_full_and_quotient_operators() {
    for s in [scaled_elliptic(24), fixtures::elliptic_normal_t3(16).unwrap(), fixtures::levi_flat_cr(8).unwrap()] {
        let tw = valid_twist(&s, 6);
        let op = MntOperator::new(&s, &structure_forms(&s, 1e-9).unwrap(), &tw).unwrap();
        let qo = mnt_quotient_operator(&s, &tw).unwrap();
        let mut rng = seeded(30);
        for q in 0..s.n() {
            let coeffs: Vec<ScalarField> =
                (0..crate::exterior::binomial(s.n(), q)).map(|_| random_trig_field(s.chart(), 1, &mut rng)).collect();
            let u = mq_form(&s, q, &coeffs).unwrap();
            let lhs = phi_iso(&s, q + 1, &op.apply(&u).unwrap(), 1e-6).unwrap();
            let rhs = qo.apply(q, &phi_iso(&s, q, &u, 1e-10).unwrap()).unwrap();
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).max_abs() < 1e-8 * (1.0 + b.max_abs()), "n={} q={q}: {}", s.n(), (a - b).max_abs());
            }
        }
    }
}

#[test]
fn frame_change_term_matches_conjugated_operator() {
    // d(ũ·f⁻¹)·f = dũ + B ũ for a non-basic frame change f.
    let s = fixtures::complex_t2(32).unwrap();
    let ch = s.chart().clone();
    let f = crate::linalg::MatrixField::from_fn(&ch, |p| {
        let x = ch.point(p);
        crate::linalg::CMat::from_row_slice(2, 2, &[(I * x[0].sin()).exp(), c(0.0), c(x[1].cos()), c(1.0)])
    })
    .unwrap();
    let mut rng = seeded(12);
    let u: Vec<Form> = (0..2).map(|_| Form::coord(1, (0..2).map(|_| random_trig_field(&ch, 1, &mut rng)).collect()).unwrap()).collect();
    let b = frame_change_term(&u, &f).unwrap();
    let finv = f.map(|_, m| m.clone().try_inverse().unwrap()).unwrap();
    for col in 0..2 {
        let mut lhs = Form::zero_coord(&ch, 2);
        for a in 0..2 {
            let mut ualpha = Form::zero_coord(&ch, 1);
            for (k, uk) in u.iter().enumerate() {
                ualpha = ualpha.add(&uk.mul_field(&finv.entry(k, a)).unwrap()).unwrap();
            }
            lhs = lhs.add(&exterior_derivative(&ualpha).unwrap().mul_field(&f.entry(a, col)).unwrap()).unwrap();
        }
        let rhs = exterior_derivative(&u[col]).unwrap().add(&b[col]).unwrap();
        assert!(rel(&lhs, &rhs) < 1e-6, "{}", rel(&lhs, &rhs));
    }
}

#[test]
fn cocycle_checks() {
    let s = fixtures::levi_flat_cr(8).unwrap();
    let ch = s.chart().clone();
    let g = crate::linalg::MatrixField::from_fn(&ch, |p| {
        let y = ch.point(p)[2];
        crate::linalg::CMat::from_row_slice(1, 1, &[(I * y.sin()).exp()])
    })
    .unwrap();
    let ginv = g.map(|_, m| m.clone().try_inverse().unwrap()).unwrap();
    let id = crate::linalg::MatrixField::identity(&ch, 1);
    let bundle =
        BasicBundle::new(1, vec!["a".into(), "b".into()], vec![((0, 1), g.clone()), ((1, 0), ginv), ((0, 0), id)]).unwrap();
    assert!(bundle.check_cocycle(1e-12).is_ok());
    assert!(bundle.is_basic(&s, 1e-10).unwrap());
    let broken = BasicBundle::new(1, vec!["a".into(), "b".into()], vec![((0, 1), g.clone()), ((1, 0), g.clone()), ((0, 0), g)]).unwrap();
    assert!(matches!(broken.check_cocycle(1e-9), Err(Error::Cocycle(_))));
    assert_eq!(Basis::Coordinate, Form::zero_coord(&ch, 1).basis());
}
