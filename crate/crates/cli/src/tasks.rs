//! Task executors. Each returns a status and a JSON details object.

use std::path::Path;

use fiskit_core::convexity::{check_q_convex_with, construct_chi, estimate_fields, ChiTables, EstimateParams};
use fiskit_core::fixtures::ball_mask;
use fiskit_core::l2::{apriori_check, assemble, bochner_check, leafwise_cohomology, random_compact_sample, solve};
use fiskit_core::logforms::{
    divide_by_coords, extend_from_d, is_basic_pform, log_decompose, log_membership, poincare_homotopy, reduce_to_constants,
    residue, twist_sd, untwist_sd, NCHypersurface, NormalChart, ZForm,
};
use fiskit_core::random::{random_trig_field, seeded};
use fiskit_core::structure::{check_twist, commutator_coefficients, mq_form, structure_forms, MntOperator, TwistForm};
use fiskit_core::structure::{check_formal_integrability, check_levi_flat};
use fiskit_core::{exterior::binomial, DiscreteComplex, Error, FIStructure, ScalarField, C64};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::expr::{evaluate, parse, to_poly};
use crate::scenario::{Context, LogOp, Outcome, Region, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Ran without an assertion attached.
    Info,
    Error,
}

pub struct TaskOutcome {
    pub status: Status,
    pub details: Value,
}

fn verdict(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn asserted(expect: Option<bool>, got: bool) -> Status {
    expect.map_or(Status::Info, |want| verdict(want == got))
}

/// Parses a comma-separated 1-based multi-index into a sorted 0-based one.
pub fn parse_index(key: &str, degree: usize, vars: usize) -> Result<Vec<usize>, CliError> {
    let idx: Vec<usize> = if key.trim().is_empty() {
        vec![]
    } else {
        key.split(',')
            .map(|s| match s.trim().parse::<usize>() {
                Ok(i) if (1..=vars).contains(&i) => Ok(i - 1),
                _ => Err(CliError::Validation(format!("form index `{key}` must list integers in 1..={vars}"))),
            })
            .collect::<Result<_, _>>()?
    };
    if idx.len() != degree || idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Validation(format!("form index `{key}` must be {degree} strictly increasing entries")));
    }
    Ok(idx)
}

fn field(ctx: &Context, text: &str) -> Result<ScalarField, CliError> {
    evaluate(&parse(text)?, &ctx.env)
}

fn structure(ctx: &Context) -> &FIStructure {
    ctx.structure.as_ref().expect("validated: task needs a structure")
}

fn twist(ctx: &Context, s: &FIStructure) -> Result<TwistForm, CliError> {
    match &ctx.twist {
        Some(form) => {
            let t = check_twist(s, form, 1e-8)?;
            if !t.valid {
                return Err(Error::InvalidTwist(t.residual).into());
            }
            Ok(t)
        }
        None => Ok(TwistForm::zero(s.chart())),
    }
}

fn weight(ctx: &Context, s: &FIStructure, w: &Option<String>) -> Result<ScalarField, CliError> {
    match w {
        Some(text) => field(ctx, text),
        None => Ok(ScalarField::zeros(s.chart())),
    }
}

fn rng_for(ctx: &Context, index: usize) -> fiskit_core::random::SeededRng {
    seeded(ctx.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index as u64 + 1)))
}

fn dump(c: &DiscreteComplex, dir: Option<&Path>, index: usize) -> Result<(), CliError> {
    if let Some(dir) = dir {
        let sub = dir.join(format!("task{index}"));
        std::fs::create_dir_all(&sub).map_err(|e| CliError::Io(format!("{}: {e}", sub.display())))?;
        c.export_matrix_market(&sub).map_err(|e| CliError::Io(format!("{}: {e}", sub.display())))?;
    }
    Ok(())
}

/// Runs one task. Errors raised here are reported as task errors.
pub fn run_task(ctx: &Context, index: usize, task: &TaskSpec, dump_dir: Option<&Path>) -> Result<TaskOutcome, CliError> {
    match task {
        TaskSpec::CheckStructure { tol, expect_levi_flat, expect } => check_structure(ctx, *tol, *expect_levi_flat, expect),
        TaskSpec::Complex { samples, bandwidth, tol } => complex(ctx, index, *samples, *bandwidth, *tol),
        TaskSpec::Convexity { weight: w, q, tol, region, expect } => {
            let s = structure(ctx);
            let phi = field(ctx, w)?;
            let e = commutator_coefficients(s, 1e-8)?;
            let mask = region.as_ref().map(|r| ball_mask(s.chart(), &r.center, r.radius));
            let rep = check_q_convex_with(s, &phi, &e, *q, *tol, mask.as_deref())?;
            Ok(TaskOutcome { status: asserted(*expect, rep.pass), details: serde_json::to_value(&rep).expect("plain data") })
        }
        TaskSpec::Bochner { weight: w, q, samples, support, bandwidth, max_constant } => {
            let s = structure(ctx);
            let phi = weight(ctx, s, w)?;
            let c = assemble(s, &twist(ctx, s)?, 1, &phi)?;
            dump(&c, dump_dir, index)?;
            let e = commutator_coefficients(s, 1e-8)?;
            let mut rng = rng_for(ctx, index);
            let (mut worst, mut worst_rem) = (0.0f64, 0.0f64);
            for _ in 0..*samples {
                let g = random_compact_sample(&c, *q, &support.center, support.radius, *bandwidth, &mut rng)?;
                let rep = bochner_check(&c, &phi, &e, *q, &g)?;
                worst = worst.max(rep.constant);
                worst_rem = worst_rem.max(rep.remainder.abs());
            }
            let status = max_constant.map_or(Status::Info, |m| verdict(worst <= m));
            Ok(TaskOutcome { status, details: json!({ "samples": samples, "max_constant": worst, "max_abs_remainder": worst_rem }) })
        }
        TaskSpec::Apriori { weight: w, q, chi, region, interior_band, samples, support, jitter, bandwidth, tol, expect } => {
            let s = structure(ctx);
            let phi = weight(ctx, s, w)?;
            let mut details = serde_json::Map::new();
            let w = if *chi {
                let (chi_w, info) = constructed_weight(s, &phi, *q, region.as_ref().expect("validated"), *interior_band)?;
                details.insert("chi".into(), info);
                chi_w
            } else {
                phi
            };
            let c = assemble(s, &twist(ctx, s)?, 1, &w)?;
            dump(&c, dump_dir, index)?;
            let mut rng = rng_for(ctx, index);
            let gs = (0..*samples)
                .map(|_| {
                    let centre: Vec<f64> = support
                        .center
                        .iter()
                        .map(|x| if *jitter > 0.0 { x + rng.gen_range(-jitter..*jitter) } else { *x })
                        .collect();
                    random_compact_sample(&c, *q, &centre, support.radius, *bandwidth, &mut rng)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let rep = apriori_check(&c, *q, &gs, *tol)?;
            let status = match expect {
                Some(Outcome::Pass) => verdict(rep.passed == rep.samples),
                Some(Outcome::Violate) => verdict(rep.passed < rep.samples),
                None => Status::Info,
            };
            details.insert("estimate".into(), serde_json::to_value(&rep).expect("plain data"));
            Ok(TaskOutcome { status, details: Value::Object(details) })
        }
        TaskSpec::Solve { q, f, weight: w, max_residual, max_obstruction, expect_solution, solution_tol } => {
            let s = structure(ctx);
            let c = assemble(s, &twist(ctx, s)?, 1, &weight(ctx, s, w)?)?;
            dump(&c, dump_dir, index)?;
            let fs = f.iter().map(|t| field(ctx, t)).collect::<Result<Vec<_>, _>>()?;
            let data = c.from_fields(*q, &[fs])?;
            let (u, rep) = solve(&c, *q, &data)?;
            let mut ok = rep.residual < *max_residual;
            if let Some(m) = max_obstruction {
                ok &= rep.obstruction <= *m;
            }
            let mut details = serde_json::to_value(&rep).expect("plain data");
            if let Some(want) = expect_solution {
                let got = c.to_fields(q - 1, &u)?;
                let mut err = 0.0f64;
                for (g, w) in got[0].iter().zip(want) {
                    err = err.max((g - &field(ctx, w)?).max_abs());
                }
                ok &= err < *solution_tol;
                details["solution_error"] = json!(err);
            }
            Ok(TaskOutcome { status: verdict(ok), details })
        }
        TaskSpec::Leafwise { q, expect_defect } => {
            let s = structure(ctx);
            let rep = leafwise_cohomology(s, &twist(ctx, s)?, *q)?;
            let status = expect_defect.map_or(Status::Info, |d| verdict(d == rep.defect));
            Ok(TaskOutcome { status, details: serde_json::to_value(&rep).expect("plain data") })
        }
        TaskSpec::Logforms { op, m, k, a, degree, form, rho, component, expect } => {
            let vars = if *op == LogOp::Extend { m - 1 } else { *m };
            let terms = form
                .iter()
                .map(|(key, text)| Ok((parse_index(key, *degree, vars)?, to_poly(&parse(text)?, vars, *k)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let f = ZForm::from_terms(vars, *k, *degree, terms)?;
            let result = logform_op(*op, &f, *m, *k, *a, *rho, *component)?;
            let status = expect.as_ref().map_or(Status::Info, |e| verdict(e.trim() == result));
            Ok(TaskOutcome { status, details: json!({ "op": op, "input": f.to_string(), "result": result }) })
        }
    }
}

/// Turns the expected mathematical refusals into results so fixtures can assert on them.
fn refusal(r: Result<String, Error>) -> Result<String, CliError> {
    match r {
        Ok(s) => Ok(s),
        Err(e @ (Error::NotDivisible(_) | Error::NotLogarithmic(_) | Error::NotClosed(_))) => Ok(e.to_string()),
        Err(e) => Err(e.into()),
    }
}

fn logform_op(
    op: LogOp,
    f: &ZForm,
    m: usize,
    k: usize,
    a: usize,
    rho: Option<usize>,
    component: Option<usize>,
) -> Result<String, CliError> {
    let divisor = NCHypersurface::new(a, m)?;
    let r = match op {
        LogOp::Basic => is_basic_pform(f, &NormalChart::new(m, k)?).map(|b| b.to_string()),
        LogOp::Homotopy => poincare_homotopy(f).map(|g| g.to_string()),
        LogOp::Divide => {
            if f.degree() != 0 {
                return Err(CliError::Validation("divide takes a degree-0 form".into()));
            }
            divide_by_coords(&f.coeff(&[]), rho.expect("validated")).map(|g| g.to_string())
        }
        LogOp::Membership => log_membership(f, &divisor).map(|g| g.to_string()),
        LogOp::Decompose => log_membership(f, &divisor)
            .and_then(|g| log_decompose(&g, component.unwrap_or(1) - 1))
            .map(|(g1, g2)| format!("{g1} ; {g2}")),
        LogOp::Residue => log_membership(f, &divisor).and_then(|g| residue(&g)).map(|g| g.to_string()),
        LogOp::Extend => extend_from_d(f, &divisor).map(|g| g.to_string()),
        LogOp::Twist => twist_sd(f, &divisor).and_then(|t| {
            let back = untwist_sd(&t)?;
            Ok(format!("{} ; round trip {}", t.form, if back.to_form() == *f { "exact" } else { "broken" }))
        }),
        LogOp::Reduce => log_membership(f, &divisor).and_then(|g| reduce_to_constants(&g)).map(|red| red.constants.to_string()),
    };
    refusal(r)
}

fn check_structure(
    ctx: &Context,
    tol: f64,
    expect_levi_flat: Option<bool>,
    expect: &[crate::scenario::CoefficientExpect],
) -> Result<TaskOutcome, CliError> {
    let s = structure(ctx);
    let integ = check_formal_integrability(s, tol);
    let levi = check_levi_flat(s, 1e-8)?;
    let cc = commutator_coefficients(s, 1e-8)?;
    let n = s.n();
    // Coefficients at roundoff level are left out of the listing.
    let floor = 1e-12;
    let mut coeffs = Vec::new();
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                let (d, e) = (cc.d(j, k, l), cc.e(j, k, l));
                if d.max_abs() > floor || e.max_abs() > floor {
                    coeffs.push(json!({ "j": j + 1, "k": k + 1, "l": l + 1, "d_max_abs": d.max_abs(), "e_max_abs": e.max_abs() }));
                }
            }
        }
    }
    let mut ok = integ.pass && expect_levi_flat.is_none_or(|want| want == levi.pass);
    let mut checks = Vec::new();
    for x in expect {
        let (j, k, l) = (x.j - 1, x.k - 1, x.l - 1);
        for (name, text, got) in [("d", &x.d, cc.d(j, k, l)), ("e", &x.e, cc.e(j, k, l))] {
            if let Some(text) = text {
                let err = (got - &field(ctx, text)?).max_abs();
                ok &= err < x.tol;
                checks.push(json!({ "coefficient": format!("{name}[{},{},{}]", x.j, x.k, x.l), "expected": text, "max_error": err }));
            }
        }
    }
    Ok(TaskOutcome {
        status: verdict(ok),
        details: json!({
            "n": n,
            "m": s.m(),
            "integrability": integ,
            "levi": levi,
            "commutator": { "residual": cc.residual, "kernel_dim": cc.kernel_dim, "nonzero": coeffs },
            "expectations": checks,
        }),
    })
}

/// Worst `‖d d u‖ / ‖d u‖` (sup norms) over random band-limited forms, per degree q.
pub fn composition_defects(
    s: &FIStructure,
    twist: &TwistForm,
    samples: usize,
    bandwidth: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, CliError> {
    let op = MntOperator::new(s, &structure_forms(s, 1e-8)?, twist)?;
    let n = s.n();
    let mut out = Vec::with_capacity(n + 1);
    for q in 0..=n {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let coeffs: Vec<ScalarField> = (0..binomial(n, q)).map(|_| random_trig_field(s.chart(), bandwidth, rng)).collect();
            let u = mq_form(s, q, &coeffs)?;
            let du = op.apply(&u)?;
            let ddu = op.apply(&du)?;
            let scale = du.max_abs().max(u.max_abs());
            if scale > 0.0 {
                worst = worst.max(ddu.max_abs() / scale);
            }
        }
        out.push(worst);
    }
    Ok(out)
}

fn complex(ctx: &Context, index: usize, samples: usize, bandwidth: usize, tol: f64) -> Result<TaskOutcome, CliError> {
    let s = structure(ctx);
    let defects = composition_defects(s, &twist(ctx, s)?, samples, bandwidth, &mut rng_for(ctx, index))?;
    let worst = defects.iter().copied().fold(0.0, f64::max);
    Ok(TaskOutcome { status: verdict(worst < tol), details: json!({ "samples": samples, "relative_defect": defects, "max": worst }) })
}

/// χ∘φ built from sampled estimate tables on the region.
pub fn constructed_weight(
    s: &FIStructure,
    phi: &ScalarField,
    q: usize,
    region: &Region,
    interior_band: Option<f64>,
) -> Result<(ScalarField, Value), CliError> {
    let mask = ball_mask(s.chart(), &region.center, region.radius);
    let e = commutator_coefficients(s, 1e-8)?;
    let params = EstimateParams { interior_band: interior_band.unwrap_or(f64::INFINITY), ..EstimateParams::new(q) };
    let fields = estimate_fields(s, phi, &e, params, Some(&mask))?;
    let (lo, hi) = phi
        .data()
        .iter()
        .zip(&mask)
        .filter(|(_, &r)| r)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (v, _)| (a.min(v.re), b.max(v.re)));
    if !lo.is_finite() {
        return Err(CliError::Validation("chi region contains no grid points".into()));
    }
    const STEP: f64 = 0.05;
    let start = (lo / STEP).floor() * STEP - 1.0;
    let count = ((hi + 1.0 - start) / STEP).ceil() as usize + 1;
    let t: Vec<f64> = (0..count).map(|i| start + STEP * i as f64).collect();
    let chi = construct_chi(&ChiTables::from_fields(&fields, &t)?)?;
    let w = chi.compose(phi)?;
    let check = chi.verify(&fields, 1e-9);
    let info = json!({ "nodes": t.len(), "t_min": t[0], "t_max": t[t.len() - 1], "check": check });
    Ok((w, info))
}

/// Default data for the quotient-versus-full comparison; used by the acceptance tests.
pub fn mean_zero_field(s: &FIStructure, bandwidth: usize, rng: &mut impl Rng) -> ScalarField {
    let f = random_trig_field(s.chart(), bandwidth, rng);
    let mean = f.data().iter().sum::<C64>() / f.data().len() as f64;
    f.map(|z| z - mean)
}
