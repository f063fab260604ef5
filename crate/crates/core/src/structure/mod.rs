//! Formally integrable structures given by frames.
//!
//! A structure is a V-frame `X_1..X_n` and a complement `P_1..P_m`. The dual
//! coframe lists `ω^1..ω^n` first and `θ^1..θ^m` last, so frame multi-indices
//! below `n` are ω-indices.

mod bundle;
mod operator;

pub use bundle::{frame_change_term, BasicBundle};
pub use operator::{
    mnt_quotient_operator, mq_coefficients, mq_form, phi_iso, quotient_project, theta_expansion, MntOperator,
    QuotientOperator,
};

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{change_basis, dual_coframe, exterior_derivative, multi_indices, pointwise_rank, wedge, CoFrame, Form};
use crate::grid::{apply_vector, lie_bracket, Chart, ScalarField, VectorField, ZERO};
use crate::linalg::{min_norm_solve, CMat, CVec};

#[derive(Debug, Clone)]
pub struct FIStructure {
    chart: Arc<Chart>,
    v_frame: Vec<VectorField>,
    complement: Vec<VectorField>,
    coframe: CoFrame,
    integrability_residual: f64,
}

impl FIStructure {
    /// Builds the structure and its dual coframe. Integrability is measured, not required.
    pub fn new(v_frame: Vec<VectorField>, complement: Vec<VectorField>) -> Result<Self> {
        let chart = v_frame
            .first()
            .or(complement.first())
            .ok_or_else(|| Error::Shape("empty frame".into()))?
            .chart()
            .clone();
        let all: Vec<VectorField> = v_frame.iter().chain(&complement).cloned().collect();
        let coframe = dual_coframe(&all)?;
        let mut s = FIStructure { chart, v_frame, complement, coframe, integrability_residual: 0.0 };
        s.integrability_residual = integrability_residual(&s)?;
        Ok(s)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// Rank of V.
    pub fn n(&self) -> usize {
        self.v_frame.len()
    }

    /// Corank of V.
    pub fn m(&self) -> usize {
        self.complement.len()
    }

    pub fn v_frame(&self) -> &[VectorField] {
        &self.v_frame
    }

    pub fn complement(&self) -> &[VectorField] {
        &self.complement
    }

    pub fn coframe(&self) -> &CoFrame {
        &self.coframe
    }

    pub fn omega(&self, j: usize) -> &Form {
        &self.coframe.forms()[j]
    }

    pub fn theta(&self, j: usize) -> &Form {
        &self.coframe.forms()[self.n() + j]
    }

    pub fn integrability_residual(&self) -> f64 {
        self.integrability_residual
    }

    /// Frame multi-index of Θ = θ^1∧…∧θ^m.
    pub fn theta_index(&self) -> Vec<usize> {
        (self.n()..self.n() + self.m()).collect()
    }

    /// V-frame components at a grid point as a dim×n matrix.
    pub fn v_matrix(&self, p: usize) -> CMat {
        CMat::from_fn(self.chart.dim(), self.n(), |nu, j| self.v_frame[j].component(nu).at(p))
    }
}

fn integrability_residual(s: &FIStructure) -> Result<f64> {
    let n = s.n();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in j + 1..n {
            let b = lie_bracket(&s.v_frame[j], &s.v_frame[k])?;
            for p in 0..s.chart.len() {
                let rhs = CVec::from_vec(b.at(p));
                let (_, res, _) = min_norm_solve(&s.v_matrix(p), &rhs, 1e-12);
                worst = worst.max(res);
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    pub residual: f64,
    pub pass: bool,
}

/// Largest least-squares distance of [X_j, X_k] from span{X}.
pub fn check_formal_integrability(s: &FIStructure, tol: f64) -> IntegrabilityReport {
    IntegrabilityReport { residual: s.integrability_residual, pass: s.integrability_residual < tol }
}

#[derive(Debug, Clone, Serialize)]
pub struct LeviReport {
    pub min_rank: usize,
    pub max_rank: usize,
    pub pass: bool,
}

/// Constant rank of V + V̄ over the grid.
pub fn check_levi_flat(s: &FIStructure, tol: f64) -> Result<LeviReport> {
    let mut fields: Vec<VectorField> = s.v_frame.clone();
    fields.extend(s.v_frame.iter().map(|x| x.conj()));
    let (lo, hi) = pointwise_rank(&fields, tol)?;
    Ok(LeviReport { min_rank: lo, max_rank: hi, pass: lo == hi })
}

/// Fields d_{jk}^l, e_{jk}^l with [X_j, X̄_k] = Σ d X_l − Σ e X̄_l.
#[derive(Debug, Clone)]
pub struct CommutatorCoefficients {
    n: usize,
    d: Vec<ScalarField>,
    e: Vec<ScalarField>,
    /// Largest pointwise reconstruction residual.
    pub residual: f64,
    /// Largest pointwise kernel dimension of the 2n-unknown system.
    pub kernel_dim: usize,
}

impl CommutatorCoefficients {
    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, j: usize, k: usize, l: usize) -> usize {
        (j * self.n + k) * self.n + l
    }

    pub fn d(&self, j: usize, k: usize, l: usize) -> &ScalarField {
        &self.d[self.slot(j, k, l)]
    }

    pub fn e(&self, j: usize, k: usize, l: usize) -> &ScalarField {
        &self.e[self.slot(j, k, l)]
    }

    /// Builds coefficients from explicit fields, indexed [j][k][l] row-major.
    pub fn from_fields(n: usize, d: Vec<ScalarField>, e: Vec<ScalarField>) -> Result<Self> {
        if d.len() != n * n * n || e.len() != n * n * n {
            return Err(Error::Shape("commutator coefficients need n³ fields each".into()));
        }
        Ok(CommutatorCoefficients { n, d, e, residual: 0.0, kernel_dim: 0 })
    }

    /// Returns a copy with e replaced.
    pub fn with_e(&self, e: Vec<ScalarField>) -> Result<Self> {
        let mut c = Self::from_fields(self.n, self.d.clone(), e)?;
        c.residual = self.residual;
        c.kernel_dim = self.kernel_dim;
        Ok(c)
    }

    pub fn e_fields(&self) -> &[ScalarField] {
        &self.e
    }

    pub fn d_fields(&self) -> &[ScalarField] {
        &self.d
    }
}

/// Pointwise minimum-norm solve of the commutator decomposition.
pub fn commutator_coefficients(s: &FIStructure, tol: f64) -> Result<CommutatorCoefficients> {
    let n = s.n();
    let chart = &s.chart;
    let mut d = vec![vec![ZERO; chart.len()]; n * n * n];
    let mut e = vec![vec![ZERO; chart.len()]; n * n * n];
    let mut residual: f64 = 0.0;
    let mut kernel_dim = 0;
    let brackets: Vec<Vec<VectorField>> = (0..n)
        .map(|j| (0..n).map(|k| lie_bracket(&s.v_frame[j], &s.v_frame[k].conj())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    for p in 0..chart.len() {
        let x = s.v_matrix(p);
        let mut a = CMat::zeros(chart.dim(), 2 * n);
        for l in 0..n {
            for nu in 0..chart.dim() {
                a[(nu, l)] = x[(nu, l)];
                a[(nu, n + l)] = -x[(nu, l)].conj();
            }
        }
        for j in 0..n {
            for k in 0..n {
                let rhs = CVec::from_vec(brackets[j][k].at(p));
                let (sol, res, ker) = min_norm_solve(&a, &rhs, 1e-10);
                let scale = 1.0 + rhs.norm();
                if res > tol * scale {
                    return Err(Error::InfeasibleDecomposition { point: p, residual: res });
                }
                residual = residual.max(res);
                kernel_dim = kernel_dim.max(ker);
                for l in 0..n {
                    d[(j * n + k) * n + l][p] = sol[l];
                    e[(j * n + k) * n + l][p] = sol[n + l];
                }
            }
        }
    }
    let to_fields = |v: Vec<Vec<crate::grid::C64>>| {
        v.into_iter().map(|d| ScalarField::from_vec(chart, d)).collect::<Result<Vec<_>>>()
    };
    Ok(CommutatorCoefficients { n, d: to_fields(d)?, e: to_fields(e)?, residual, kernel_dim })
}

/// 1-forms θ_ℓ^ȷ with dθ^ȷ = Σ_ℓ θ_ℓ^ȷ ∧ θ^ℓ.
#[derive(Debug, Clone)]
pub struct StructureForms {
    /// `forms[j][l]` is θ_l^j in the coordinate basis.
    pub forms: Vec<Vec<Form>>,
    pub residual: f64,
}

impl StructureForms {
    /// All structure forms zero.
    pub fn zero(s: &FIStructure) -> Self {
        let m = s.m();
        let forms = (0..m).map(|_| (0..m).map(|_| Form::zero_coord(&s.chart, 1)).collect()).collect();
        StructureForms { forms, residual: 0.0 }
    }

    /// Σ_ℓ θ_ℓ^ℓ.
    pub fn trace(&self, chart: &Arc<Chart>) -> Result<Form> {
        let mut t = Form::zero_coord(chart, 1);
        for (l, row) in self.forms.iter().enumerate() {
            t = t.add(&row[l])?;
        }
        Ok(t)
    }
}

/// Pointwise minimum-norm structure forms.
pub fn structure_forms(s: &FIStructure, tol: f64) -> Result<StructureForms> {
    let m = s.m();
    let dim = s.chart.dim();
    if dim < 2 {
        return Ok(StructureForms::zero(s));
    }
    let pairs = multi_indices(dim, 2);
    let dthetas = (0..m).map(|j| exterior_derivative(s.theta(j))).collect::<Result<Vec<_>>>()?;
    let mut out = vec![vec![vec![vec![ZERO; s.chart.len()]; dim]; m]; m];
    let mut residual: f64 = 0.0;
    for p in 0..s.chart.len() {
        // Column (l, ν) holds dx_ν ∧ θ^l.
        let mut a = CMat::zeros(pairs.len(), m * dim);
        for l in 0..m {
            let th = s.theta(l).at(p);
            for nu in 0..dim {
                for (r, pr) in pairs.iter().enumerate() {
                    let (i, j) = (pr[0], pr[1]);
                    let mut v = ZERO;
                    if nu == i {
                        v += th[j];
                    }
                    if nu == j {
                        v -= th[i];
                    }
                    a[(r, l * dim + nu)] = v;
                }
            }
        }
        for (j, dth) in dthetas.iter().enumerate() {
            let rhs = CVec::from_vec(dth.at(p));
            let (sol, res, _) = min_norm_solve(&a, &rhs, 1e-10);
            residual = residual.max(res);
            for l in 0..m {
                for nu in 0..dim {
                    out[j][l][nu][p] = sol[l * dim + nu];
                }
            }
        }
    }
    if residual > tol {
        return Err(Error::NotIntegrable(residual));
    }
    let forms = out
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|comps| {
                    let fields = comps.into_iter().map(|d| ScalarField::from_vec(&s.chart, d)).collect::<Result<Vec<_>>>()?;
                    Form::one_form(fields)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StructureForms { forms, residual })
}

/// Ξ_V: wedge by the trace of the structure forms.
#[derive(Debug, Clone)]
pub struct XiOperator {
    trace: Form,
}

pub fn xi_operator(s: &FIStructure, forms: &StructureForms) -> Result<XiOperator> {
    Ok(XiOperator { trace: forms.trace(&s.chart)? })
}

impl XiOperator {
    pub fn trace(&self) -> &Form {
        &self.trace
    }

    pub fn apply(&self, u: &Form) -> Result<Form> {
        wedge(&self.trace, u)
    }
}

/// A twist 1-form with its closedness residual modulo the conormal ideal.
#[derive(Debug, Clone)]
pub struct TwistForm {
    pub form: Form,
    pub residual: f64,
    pub valid: bool,
}

impl TwistForm {
    pub fn zero(chart: &Arc<Chart>) -> Self {
        TwistForm { form: Form::zero_coord(chart, 1), residual: 0.0, valid: true }
    }
}

/// Requires the θ-free part of dϑ to vanish.
pub fn check_twist(s: &FIStructure, twist: &Form, tol: f64) -> Result<TwistForm> {
    if twist.degree() != 1 {
        return Err(Error::Shape("twist must be a 1-form".into()));
    }
    let residual = if s.chart.dim() < 2 {
        0.0
    } else {
        let dv = change_basis(&exterior_derivative(twist)?, &s.coframe)?;
        dv.indices()
            .iter()
            .zip(dv.coeffs())
            .filter(|(idx, _)| idx.iter().all(|&i| i < s.n()))
            .map(|(_, c)| c.max_abs())
            .fold(0.0, f64::max)
    };
    if residual > tol {
        return Err(Error::InvalidTwist(residual));
    }
    Ok(TwistForm { form: twist.clone(), residual, valid: true })
}

/// max_j ‖X_j f‖ < tol.
pub fn is_basic_scalar(s: &FIStructure, f: &ScalarField, tol: f64) -> Result<bool> {
    for x in &s.v_frame {
        if apply_vector(x, f)?.max_abs() >= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A coordinate form is basic when it lies in Λ N*V with basic θ-coefficients.
pub fn is_basic_form(s: &FIStructure, form: &Form, tol: f64) -> Result<bool> {
    let fr = change_basis(form, &s.coframe)?;
    for (idx, c) in fr.indices().iter().zip(fr.coeffs()) {
        if idx.iter().any(|&i| i < s.n()) {
            if c.max_abs() >= tol {
                return Ok(false);
            }
        } else if !is_basic_scalar(s, c, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests;
