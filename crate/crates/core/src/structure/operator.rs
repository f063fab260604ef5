//! The twisted operator on (m,q)-forms and its quotient model on Λ^q V*.

use super::{FIStructure, StructureForms, TwistForm};
use crate::error::{Error, Result};
use crate::exterior::{change_basis, exterior_derivative, multi_indices, shuffle_sign, wedge, Basis, Form, IndexTable};
use crate::grid::{apply_vector, lie_bracket, ScalarField, VectorField, C64, ZERO};
use crate::linalg::{min_norm_solve, CVec};

/// `u ↦ (d − Ξ_V − ϑ∧) u`, acting on coordinate-basis forms componentwise.
#[derive(Debug, Clone)]
pub struct MntOperator {
    structure: FIStructure,
    zeroth: Form,
}

impl MntOperator {
    pub fn new(s: &FIStructure, forms: &StructureForms, twist: &TwistForm) -> Result<Self> {
        if !twist.valid {
            return Err(Error::InvalidTwist(twist.residual));
        }
        let zeroth = forms.trace(s.chart())?.add(&twist.form)?;
        Ok(MntOperator { structure: s.clone(), zeroth })
    }

    pub fn structure(&self) -> &FIStructure {
        &self.structure
    }

    /// The 1-form `Σθ_ℓ^ℓ + ϑ` wedged in front.
    pub fn zeroth_order(&self) -> &Form {
        &self.zeroth
    }

    pub fn apply(&self, u: &Form) -> Result<Form> {
        let dim = self.structure.chart().dim();
        let u = match u.basis() {
            Basis::Coordinate => u.clone(),
            Basis::Frame(_) => change_basis(u, self.structure.coframe())?,
        };
        if u.degree() >= dim {
            return Ok(Form::zero_coord(self.structure.chart(), u.degree() + 1));
        }
        exterior_derivative(&u)?.sub(&wedge(&self.zeroth, &u)?)
    }

    /// Componentwise action on an E-valued form given by its components in one trivialization.
    pub fn apply_valued(&self, u: &[Form]) -> Result<Vec<Form>> {
        u.iter().map(|c| self.apply(c)).collect()
    }
}

fn mq_index(s: &FIStructure, j: &[usize]) -> Vec<usize> {
    j.iter().copied().chain(s.theta_index()).collect()
}

fn sign_qm(q: usize, m: usize) -> C64 {
    if (q * m) % 2 == 0 {
        C64::new(1.0, 0.0)
    } else {
        C64::new(-1.0, 0.0)
    }
}

/// `Σ_J c_J ω^J∧Θ` in the coordinate basis; `coeffs` follow lexicographic J ⊂ {0..n}.
pub fn mq_form(s: &FIStructure, q: usize, coeffs: &[ScalarField]) -> Result<Form> {
    let js = multi_indices(s.n(), q);
    if coeffs.len() != js.len() {
        return Err(Error::Shape(format!("expected {} coefficients for q = {q}", js.len())));
    }
    let dim = s.chart().dim();
    let table = IndexTable::new(dim, q + s.m());
    let mut fields = vec![ScalarField::zeros(s.chart()); table.len()];
    for (j, c) in js.iter().zip(coeffs) {
        let pos = table.position(&mq_index(s, j)).expect("valid index");
        fields[pos] = c.clone();
    }
    let frame = Form::from_coeffs(q + s.m(), s.coframe().basis(), dim, fields)?;
    change_basis(&frame, s.coframe())
}

/// Coefficients of `u` on `ω^J∧Θ`, ignoring every other component.
pub fn mq_coefficients(s: &FIStructure, q: usize, u: &Form) -> Result<Vec<ScalarField>> {
    if u.degree() != q + s.m() {
        return Err(Error::MalformedExpansion(format!("degree {} is not m + q = {}", u.degree(), q + s.m())));
    }
    let fr = to_frame(s, u)?;
    Ok(multi_indices(s.n(), q)
        .iter()
        .map(|j| fr.coeff(&mq_index(s, j)).cloned().expect("index in range"))
        .collect())
}

fn to_frame(s: &FIStructure, u: &Form) -> Result<Form> {
    match u.basis() {
        Basis::Coordinate => change_basis(u, s.coframe()),
        Basis::Frame(id) if id == s.coframe().id() => Ok(u.clone()),
        Basis::Frame(_) => Err(Error::BasisMismatch),
    }
}

/// `v` with `u = Θ∧v`, `v = Σ v_J ω^J`. Components outside the Θ-ideal are rejected.
pub fn theta_expansion(s: &FIStructure, q: usize, u: &Form, tol: f64) -> Result<Vec<ScalarField>> {
    let fr = to_frame(s, u)?;
    if fr.degree() != q + s.m() {
        return Err(Error::MalformedExpansion(format!("degree {} is not m + q = {}", fr.degree(), q + s.m())));
    }
    let theta = s.theta_index();
    let scale = 1.0 + fr.max_abs();
    for (idx, c) in fr.indices().iter().zip(fr.coeffs()) {
        let has_theta = theta.iter().all(|t| idx.contains(t));
        if !has_theta && c.max_abs() > tol * scale {
            return Err(Error::MalformedExpansion(format!("component {idx:?} lies outside Θ∧Λ^q")));
        }
    }
    let sign = sign_qm(q, s.m());
    Ok(mq_coefficients(s, q, u)?.into_iter().map(|c| c.scale(sign)).collect())
}

/// `Φ_q(Θ∧v ⊗ σ) = (−1)^{qm} v` on the ω^J coefficients.
pub fn phi_iso(s: &FIStructure, q: usize, u: &Form, tol: f64) -> Result<Vec<ScalarField>> {
    let sign = sign_qm(q, s.m());
    Ok(theta_expansion(s, q, u, tol)?.into_iter().map(|c| c.scale(sign)).collect())
}

/// Coefficients of `u` on pure ω multi-indices; the θ-ideal is the kernel.
pub fn quotient_project(s: &FIStructure, u: &Form) -> Result<Vec<ScalarField>> {
    let fr = to_frame(s, u)?;
    Ok(multi_indices(s.n(), fr.degree())
        .iter()
        .map(|j| fr.coeff(j).cloned().expect("index in range"))
        .collect())
}

/// `d″_ϑ` on Λ^q V* coefficients via the Chevalley–Eilenberg formula.
#[derive(Debug, Clone)]
pub struct QuotientOperator {
    frame: Vec<VectorField>,
    /// `c^l_{ab}` with `[X_a, X_b] = Σ_l c^l_{ab} X_l`, stored at `(a·n + b)·n + l` for a < b.
    brackets: Vec<ScalarField>,
    /// `[ϑ](X_j) = ϑ(X_j)`.
    twist: Vec<ScalarField>,
    bracket_residual: f64,
}

pub fn mnt_quotient_operator(s: &FIStructure, twist: &TwistForm) -> Result<QuotientOperator> {
    if !twist.valid {
        return Err(Error::InvalidTwist(twist.residual));
    }
    let n = s.n();
    let chart = s.chart();
    let mut brackets = vec![ScalarField::zeros(chart); n * n * n];
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let br = lie_bracket(&s.v_frame()[a], &s.v_frame()[b])?;
            let mut cols = vec![vec![ZERO; chart.len()]; n];
            for p in 0..chart.len() {
                let (x, res, _) = min_norm_solve(&s.v_matrix(p), &CVec::from_vec(br.at(p)), 1e-12);
                worst = worst.max(res);
                for l in 0..n {
                    cols[l][p] = x[l];
                }
            }
            for (l, col) in cols.into_iter().enumerate() {
                brackets[(a * n + b) * n + l] = ScalarField::from_vec(chart, col)?;
            }
        }
    }
    let th = match twist.form.basis() {
        Basis::Coordinate => twist.form.clone(),
        Basis::Frame(_) => change_basis(&twist.form, s.coframe())?,
    };
    let twist_vals = s
        .v_frame()
        .iter()
        .map(|x| {
            let mut acc = ScalarField::zeros(chart);
            for (nu, c) in th.coeffs().iter().enumerate() {
                acc = &acc + &(c * x.component(nu));
            }
            acc
        })
        .collect();
    Ok(QuotientOperator { frame: s.v_frame().to_vec(), brackets, twist: twist_vals, bracket_residual: worst })
}

impl QuotientOperator {
    pub fn n(&self) -> usize {
        self.frame.len()
    }

    pub fn bracket_coefficient(&self, a: usize, b: usize, l: usize) -> &ScalarField {
        let n = self.n();
        &self.brackets[(a * n + b) * n + l]
    }

    pub fn twist_values(&self) -> &[ScalarField] {
        &self.twist
    }

    /// Largest pointwise distance of a bracket from span{X}.
    pub fn bracket_residual(&self) -> f64 {
        self.bracket_residual
    }

    /// Maps q-coefficients (lexicographic J) to (q+1)-coefficients.
    pub fn apply(&self, q: usize, u: &[ScalarField]) -> Result<Vec<ScalarField>> {
        let n = self.n();
        let ins = multi_indices(n, q);
        if u.len() != ins.len() {
            return Err(Error::Shape(format!("expected {} coefficients for q = {q}", ins.len())));
        }
        let outs = multi_indices(n, q + 1);
        let Some(chart) = u.first().map(|f| f.chart().clone()) else {
            return Ok(Vec::new());
        };
        let table = IndexTable::new(n, q);
        let coeff = |idx: &[usize]| &u[table.position(idx).expect("valid index")];
        let mut out = Vec::with_capacity(outs.len());
        for i in &outs {
            let mut acc = ScalarField::zeros(&chart);
            for a in 0..=q {
                let rest: Vec<usize> = i.iter().enumerate().filter(|&(k, _)| k != a).map(|(_, &v)| v).collect();
                let ua = coeff(&rest);
                let term = &apply_vector(&self.frame[i[a]], ua)? - &(&self.twist[i[a]] * ua);
                acc.axpy(alt(a), &term);
            }
            for a in 0..=q {
                for b in a + 1..=q {
                    let rest: Vec<usize> =
                        i.iter().enumerate().filter(|&(k, _)| k != a && k != b).map(|(_, &v)| v).collect();
                    for l in 0..n {
                        let Some(sg) = shuffle_sign(&[l], &rest) else { continue };
                        let mut idx = rest.clone();
                        idx.push(l);
                        idx.sort_unstable();
                        let term = self.bracket_coefficient(i[a], i[b], l) * coeff(&idx);
                        acc.axpy(alt(a + b) * sg, &term);
                    }
                }
            }
            out.push(acc);
        }
        Ok(out)
    }
}

fn alt(k: usize) -> C64 {
    if k % 2 == 0 {
        C64::new(1.0, 0.0)
    } else {
        C64::new(-1.0, 0.0)
    }
}
