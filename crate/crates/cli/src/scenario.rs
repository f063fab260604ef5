//! Scenario files: schema, loading and validation.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use fiskit_core::fixtures;
use fiskit_core::{Axis, Chart, FIStructure, Form, ScalarField, VectorField, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Pos};
use crate::expr::{evaluate, parse, Env, Expr};

pub const SCHEMA: &str = "fiskit/1";

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub chart: Option<ChartSpec>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub structure: Option<StructureSpec>,
    /// Named scalar fields, evaluated in order; later entries may use earlier ones.
    #[serde(default)]
    pub weights: Vec<NamedExpr>,
    /// Components of the twist 1-form on `dx_a`.
    #[serde(default)]
    pub twist: Option<Vec<String>>,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
}

fn default_resolution() -> usize {
    16
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub dim: usize,
    #[serde(default)]
    pub periods: Option<Vec<f64>>,
    #[serde(default)]
    pub names: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    #[serde(default)]
    pub fixture: Option<String>,
    /// V-frame vector fields, one list of component expressions per field.
    #[serde(default)]
    pub frame: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub complement: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NamedExpr {
    pub name: String,
    pub expr: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Expected commutator coefficient fields, indices 1-based.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientExpect {
    pub j: usize,
    pub k: usize,
    pub l: usize,
    #[serde(default)]
    pub d: Option<String>,
    #[serde(default)]
    pub e: Option<String>,
    #[serde(default = "tol8")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Violate,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum LogOp {
    Basic,
    Homotopy,
    Divide,
    Membership,
    Decompose,
    Residue,
    Extend,
    Twist,
    Reduce,
}

fn tol9() -> f64 {
    1e-9
}
fn tol8() -> f64 {
    1e-8
}
fn fifty() -> usize {
    50
}
fn twenty() -> usize {
    20
}
fn two() -> usize {
    2
}
fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSpec {
    CheckStructure {
        #[serde(default = "tol9")]
        tol: f64,
        #[serde(default)]
        expect_levi_flat: Option<bool>,
        #[serde(default)]
        expect: Vec<CoefficientExpect>,
    },
    Complex {
        #[serde(default = "fifty")]
        samples: usize,
        #[serde(default = "two")]
        bandwidth: usize,
        #[serde(default = "tol9")]
        tol: f64,
    },
    Convexity {
        weight: String,
        q: usize,
        #[serde(default = "tol8")]
        tol: f64,
        #[serde(default)]
        region: Option<Region>,
        #[serde(default)]
        expect: Option<bool>,
    },
    Bochner {
        #[serde(default)]
        weight: Option<String>,
        q: usize,
        #[serde(default = "twenty")]
        samples: usize,
        support: Region,
        #[serde(default = "two")]
        bandwidth: usize,
        #[serde(default)]
        max_constant: Option<f64>,
    },
    Apriori {
        #[serde(default)]
        weight: Option<String>,
        q: usize,
        #[serde(default)]
        chi: bool,
        #[serde(default)]
        region: Option<Region>,
        #[serde(default)]
        interior_band: Option<f64>,
        #[serde(default = "twenty")]
        samples: usize,
        support: Region,
        #[serde(default)]
        jitter: f64,
        #[serde(default = "two")]
        bandwidth: usize,
        #[serde(default = "tol8")]
        tol: f64,
        #[serde(default)]
        expect: Option<Outcome>,
    },
    Solve {
        q: usize,
        /// One expression per coefficient, in lexicographic multi-index order.
        f: Vec<String>,
        #[serde(default)]
        weight: Option<String>,
        #[serde(default = "tol9")]
        max_residual: f64,
        #[serde(default)]
        max_obstruction: Option<f64>,
        #[serde(default)]
        expect_solution: Option<Vec<String>>,
        #[serde(default = "tol9")]
        solution_tol: f64,
    },
    Leafwise {
        q: usize,
        #[serde(default)]
        expect_defect: Option<usize>,
    },
    Logforms {
        op: LogOp,
        m: usize,
        #[serde(default)]
        k: usize,
        #[serde(default = "one")]
        a: usize,
        #[serde(default)]
        degree: usize,
        /// Coefficients keyed by comma-separated 1-based indices; `""` for degree 0.
        #[serde(default)]
        form: BTreeMap<String, String>,
        /// Coordinate count for `divide`.
        #[serde(default)]
        rho: Option<usize>,
        /// 1-based divisor component for `decompose`.
        #[serde(default)]
        component: Option<usize>,
        #[serde(default)]
        expect: Option<String>,
    },
}

impl TaskSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskSpec::CheckStructure { .. } => "check-structure",
            TaskSpec::Complex { .. } => "complex",
            TaskSpec::Convexity { .. } => "convexity",
            TaskSpec::Bochner { .. } => "bochner",
            TaskSpec::Apriori { .. } => "apriori",
            TaskSpec::Solve { .. } => "solve",
            TaskSpec::Leafwise { .. } => "leafwise",
            TaskSpec::Logforms { .. } => "logforms",
        }
    }

    fn needs_structure(&self) -> bool {
        !matches!(self, TaskSpec::Logforms { .. })
    }
}

fn toml_position(text: &str, offset: usize) -> Pos {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.chars().count(), |k| before[k + 1..].chars().count()) + 1;
    Pos { line, column }
}

/// Parses TOML, or JSON when the first non-blank character is `{`.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let sc: Scenario = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| {
            CliError::syntax(Pos { line: e.line(), column: e.column() }, e.to_string().split(" at line").next().unwrap_or_default().to_string())
        })?
    } else {
        toml::from_str(text).map_err(|e| {
            let pos = e.span().map_or(Pos { line: 1, column: 1 }, |s| toml_position(text, s.start));
            CliError::syntax(pos, e.message().to_string())
        })?
    };
    if sc.schema != SCHEMA {
        return Err(CliError::Validation(format!("schema `{}` is not `{SCHEMA}`", sc.schema)));
    }
    Ok(sc)
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| e.at(path.display().to_string()))
}

/// Everything tasks share: the chart, named values, the structure and the twist.
pub struct Context {
    pub env: Env,
    pub structure: Option<FIStructure>,
    pub twist: Option<Form>,
    pub resolution: usize,
    pub seed: u64,
}

fn parse_at(text: &str, what: &str) -> Result<Expr, CliError> {
    parse(text).map_err(|e| e.at(what.to_string()))
}

fn build_chart(sc: &Scenario, resolution: usize) -> Result<Arc<Chart>, CliError> {
    let fixture = sc.structure.as_ref().and_then(|s| s.fixture.as_deref());
    match (&sc.chart, fixture) {
        (Some(spec), _) => {
            if spec.dim == 0 {
                return Err(CliError::Validation("chart.dim must be positive".into()));
            }
            let periods = spec.periods.clone().unwrap_or_else(|| vec![2.0 * std::f64::consts::PI; spec.dim]);
            let names = spec.names.clone().unwrap_or_else(|| (1..=spec.dim).map(|i| format!("x{i}")).collect());
            if periods.len() != spec.dim || names.len() != spec.dim {
                return Err(CliError::Validation("chart.periods and chart.names need one entry per axis".into()));
            }
            if periods.iter().any(|p| !(*p > 0.0)) {
                return Err(CliError::Validation("chart periods must be positive".into()));
            }
            let axes = names.into_iter().zip(periods).map(|(n, p)| Axis::new(n, p, resolution)).collect();
            Ok(Chart::new(axes)?)
        }
        (None, None) if sc.structure.as_ref().is_some_and(|s| s.frame.as_ref().is_some_and(|f| !f.is_empty())) => {
            let dim = sc.structure.as_ref().and_then(|s| s.frame.as_ref()).map_or(1, |f| f[0].len()).max(1);
            Ok(Chart::torus(dim, resolution)?)
        }
        (None, Some(name)) => Ok(fixtures::by_name(name, resolution).map_err(|e| CliError::Validation(e.to_string()))?.chart().clone()),
        (None, None) => Ok(Chart::torus(1, resolution)?),
    }
}

fn vector_field(env: &Env, comps: &[String], what: &str) -> Result<VectorField, CliError> {
    if comps.len() != env.chart().dim() {
        return Err(CliError::Validation(format!("{what} needs {} components", env.chart().dim())));
    }
    let fields = comps
        .iter()
        .enumerate()
        .map(|(a, c)| evaluate(&parse_at(c, &format!("{what}[{a}]"))?, env).map_err(|e| e.at(format!("{what}[{a}]"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VectorField::new(fields)?)
}

fn check_expr(env: &Env, text: &str, what: &str) -> Result<Expr, CliError> {
    let e = parse_at(text, what)?;
    env.check(&e).map_err(|err| err.at(what.to_string()))?;
    Ok(e)
}

/// Validates references and ranges without building anything expensive.
pub fn validate(sc: &Scenario, resolution: usize) -> Result<(), CliError> {
    let chart = build_chart(sc, resolution)?;
    let mut env = Env::new(chart.clone());
    for (k, v) in &sc.params {
        env.set_param(k, C64::new(*v, 0.0));
    }
    for (i, w) in sc.weights.iter().enumerate() {
        check_expr(&env, &w.expr, &format!("weights[{i}]"))?;
        env.set_field(&w.name, ScalarField::zeros(&chart));
    }
    let n = match &sc.structure {
        Some(StructureSpec { fixture: Some(name), frame: None, complement: None }) => {
            fixtures::by_name(name, 4).map_err(|e| CliError::Validation(e.to_string()))?.n()
        }
        Some(StructureSpec { fixture: None, frame: Some(frame), complement }) => {
            for (i, v) in frame.iter().chain(complement.iter().flatten()).enumerate() {
                if v.len() != chart.dim() {
                    return Err(CliError::Validation(format!("structure field {i} needs {} components", chart.dim())));
                }
                for (a, c) in v.iter().enumerate() {
                    check_expr(&env, c, &format!("structure field {i} component {a}"))?;
                }
            }
            frame.len()
        }
        Some(_) => return Err(CliError::Validation("structure needs either `fixture` or `frame`".into())),
        None => 0,
    };
    if let Some(tw) = &sc.twist {
        if tw.len() != chart.dim() {
            return Err(CliError::Validation(format!("twist needs {} components", chart.dim())));
        }
        for (a, c) in tw.iter().enumerate() {
            check_expr(&env, c, &format!("twist[{a}]"))?;
        }
    }
    for (t, task) in sc.tasks.iter().enumerate() {
        let ctx = format!("tasks[{t}] ({})", task.kind());
        if task.needs_structure() && sc.structure.is_none() {
            return Err(CliError::Validation(format!("{ctx} needs a structure")));
        }
        let q_max = |q: usize, max: usize| -> Result<(), CliError> {
            if q > max {
                Err(CliError::Validation(format!("{ctx}: q = {q} exceeds {max}")))
            } else {
                Ok(())
            }
        };
        let check_region = |r: &Region| -> Result<(), CliError> {
            if r.center.len() != chart.dim() || !(r.radius > 0.0) {
                Err(CliError::Validation(format!("{ctx}: region needs {} center coordinates and a positive radius", chart.dim())))
            } else {
                Ok(())
            }
        };
        match task {
            TaskSpec::CheckStructure { expect, .. } => {
                for x in expect {
                    if [x.j, x.k, x.l].iter().any(|&i| i == 0 || i > n) {
                        return Err(CliError::Validation(format!("{ctx}: indices must lie in 1..={n}")));
                    }
                    for s in x.d.iter().chain(&x.e) {
                        check_expr(&env, s, &ctx)?;
                    }
                }
            }
            TaskSpec::Complex { samples, .. } => {
                if *samples == 0 {
                    return Err(CliError::Validation(format!("{ctx}: samples must be positive")));
                }
            }
            TaskSpec::Convexity { weight, q, region, .. } => {
                check_expr(&env, weight, &ctx)?;
                if *q == 0 {
                    return Err(CliError::Validation(format!("{ctx}: q starts at 1")));
                }
                q_max(*q, n + 1)?;
                region.as_ref().map(check_region).transpose()?;
            }
            TaskSpec::Bochner { weight, q, support, .. } => {
                weight.as_ref().map(|w| check_expr(&env, w, &ctx)).transpose()?;
                q_max(*q, n)?;
                check_region(support)?;
            }
            TaskSpec::Apriori { weight, q, chi, region, support, samples, .. } => {
                weight.as_ref().map(|w| check_expr(&env, w, &ctx)).transpose()?;
                q_max(*q, n)?;
                if *chi && (weight.is_none() || region.is_none() || *q == 0) {
                    return Err(CliError::Validation(format!("{ctx}: chi needs a weight, a region and q ≥ 1")));
                }
                region.as_ref().map(check_region).transpose()?;
                check_region(support)?;
                if *samples == 0 {
                    return Err(CliError::Validation(format!("{ctx}: samples must be positive")));
                }
            }
            TaskSpec::Solve { q, f, weight, expect_solution, .. } => {
                if *q == 0 {
                    return Err(CliError::Validation(format!("{ctx}: solve needs q ≥ 1")));
                }
                q_max(*q, n)?;
                let want = fiskit_core::exterior::binomial(n, *q);
                if f.len() != want {
                    return Err(CliError::Validation(format!("{ctx}: f needs {want} components")));
                }
                for s in f.iter().chain(weight.iter()).chain(expect_solution.iter().flatten()) {
                    check_expr(&env, s, &ctx)?;
                }
                if let Some(u) = expect_solution {
                    let want = fiskit_core::exterior::binomial(n, q - 1);
                    if u.len() != want {
                        return Err(CliError::Validation(format!("{ctx}: expect_solution needs {want} components")));
                    }
                }
            }
            TaskSpec::Leafwise { q, .. } => q_max(*q, n)?,
            TaskSpec::Logforms { op, m, a, degree, form, rho, component, expect, k } => {
                if component.is_some_and(|c| c == 0 || c > *a) {
                    return Err(CliError::Validation(format!("{ctx}: component must lie in 1..={a}")));
                }
                if *m == 0 || *a == 0 || *a > *m || *degree > *m {
                    return Err(CliError::Validation(format!("{ctx}: need 1 ≤ a ≤ m and degree ≤ m")));
                }
                if *op == LogOp::Divide && rho.is_none_or(|r| r > *m) {
                    return Err(CliError::Validation(format!("{ctx}: divide needs rho in 0..=m")));
                }
                let vars = if *op == LogOp::Extend { *m - 1 } else { *m };
                for (key, s) in form {
                    crate::tasks::parse_index(key, *degree, vars).map_err(|e| e.at(ctx.clone()))?;
                    crate::expr::to_poly(&parse_at(s, &ctx)?, vars, *k).map_err(|e| e.at(ctx.clone()))?;
                }
                if let Some(s) = expect {
                    if s.trim().is_empty() {
                        return Err(CliError::Validation(format!("{ctx}: expect is empty")));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Evaluates params, weights, structure and twist.
pub fn build_context(sc: &Scenario, resolution: usize, seed: u64) -> Result<Context, CliError> {
    let chart = build_chart(sc, resolution)?;
    let mut env = Env::new(chart.clone());
    for (k, v) in &sc.params {
        env.set_param(k, C64::new(*v, 0.0));
    }
    for (i, w) in sc.weights.iter().enumerate() {
        let what = format!("weights[{i}]");
        let f = evaluate(&parse_at(&w.expr, &what)?, &env).map_err(|e| e.at(what))?;
        env.set_field(&w.name, f);
    }
    let structure = match &sc.structure {
        Some(StructureSpec { fixture: Some(name), .. }) => Some(fixtures::by_name(name, resolution)?),
        Some(StructureSpec { frame: Some(frame), complement, .. }) => {
            let v = frame.iter().enumerate().map(|(i, c)| vector_field(&env, c, &format!("frame[{i}]"))).collect::<Result<Vec<_>, _>>()?;
            let w = complement
                .iter()
                .flatten()
                .enumerate()
                .map(|(i, c)| vector_field(&env, c, &format!("complement[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Some(FIStructure::new(v, w)?)
        }
        _ => None,
    };
    let twist = match &sc.twist {
        Some(comps) => {
            let fields = comps
                .iter()
                .enumerate()
                .map(|(a, c)| evaluate(&parse_at(c, &format!("twist[{a}]"))?, &env))
                .collect::<Result<Vec<_>, _>>()?;
            Some(Form::one_form(fields)?)
        }
        None => None,
    };
    Ok(Context { env, structure, twist, resolution, seed })
}
