//! Commutator-corrected Hessians, critical sets and convexity verdicts.

mod chi;

pub use chi::{construct_chi, estimate_fields, ChiCheck, ChiFunction, ChiTables, EstimateFields, EstimateParams};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{apply_vector, partial_derivative, ScalarField, C64, ZERO};
use crate::linalg::{hermitian_eigen, min_norm_solve, null_space, real_column_basis, CMat, CVec, MatrixField};
use crate::structure::{commutator_coefficients, is_basic_scalar, CommutatorCoefficients, FIStructure};

/// Default tolerance on first derivatives for the critical masks.
pub const MASK_TOL: f64 = 1e-6;

/// Grid masks of K_φ (real directions of V∩V̄ annihilate φ) and C_φ (all of V does).
#[derive(Debug, Clone, Serialize)]
pub struct CriticalSets {
    pub k: Vec<bool>,
    pub c: Vec<bool>,
}

impl CriticalSets {
    pub fn k_count(&self) -> usize {
        self.k.iter().filter(|&&b| b).count()
    }

    pub fn c_count(&self) -> usize {
        self.c.iter().filter(|&&b| b).count()
    }
}

/// Orthonormal real basis (columns, coordinate components) of V∩V̄ at a grid point.
pub fn real_intersection_basis(s: &FIStructure, p: usize, tol: f64) -> DMatrix<f64> {
    let b = s.v_matrix(p);
    let (dim, n) = b.shape();
    let mut stacked = CMat::zeros(dim, 2 * n);
    for j in 0..n {
        for nu in 0..dim {
            stacked[(nu, j)] = b[(nu, j)];
            stacked[(nu, n + j)] = -b[(nu, j)].conj();
        }
    }
    let ker = null_space(&stacked, tol);
    let vecs = b * ker.rows(0, n);
    let mut real = DMatrix::zeros(dim, 2 * vecs.ncols());
    for (k, col) in vecs.column_iter().enumerate() {
        for nu in 0..dim {
            real[(nu, 2 * k)] = col[nu].re;
            real[(nu, 2 * k + 1)] = col[nu].im;
        }
    }
    real_column_basis(&real, tol)
}

fn gradient(phi: &ScalarField) -> Result<Vec<ScalarField>> {
    (0..phi.chart().dim()).map(|a| partial_derivative(phi, a)).collect()
}

/// `X_j φ` for every frame field.
pub fn frame_derivatives(s: &FIStructure, phi: &ScalarField) -> Result<Vec<ScalarField>> {
    s.v_frame().iter().map(|x| apply_vector(x, phi)).collect()
}

pub fn critical_sets(s: &FIStructure, phi: &ScalarField, tol: f64) -> Result<CriticalSets> {
    phi.require_real()?;
    let grad = gradient(phi)?;
    let xphi = frame_derivatives(s, phi)?;
    let len = s.chart().len();
    let mut k = vec![false; len];
    let mut c = vec![false; len];
    for p in 0..len {
        c[p] = xphi.iter().all(|f| f.at(p).norm() <= tol);
        let basis = real_intersection_basis(s, p, 1e-8);
        k[p] = basis.column_iter().all(|y| {
            let v: f64 = y.iter().zip(&grad).map(|(&yn, g)| yn * g.at(p).re).sum();
            v.abs() <= tol
        });
        // C ⊆ K holds analytically; enforce it against rounding at the threshold.
        k[p] |= c[p];
    }
    Ok(CriticalSets { k, c })
}

/// Pointwise Hermitian matrix H with `Q(ξ) = ξ^H H ξ = Re Σ A_jk ξ_j ξ̄_k`.
#[derive(Debug, Clone)]
pub struct QFormField {
    matrices: MatrixField,
}

impl QFormField {
    pub fn new(matrices: MatrixField) -> Self {
        QFormField { matrices }
    }

    pub fn matrices(&self) -> &MatrixField {
        &self.matrices
    }

    pub fn at(&self, p: usize) -> &CMat {
        self.matrices.at(p)
    }

    pub fn n(&self) -> usize {
        self.matrices.shape().0
    }

    pub fn scale(&self, c: f64) -> QFormField {
        QFormField { matrices: self.matrices.map(|_, m| m * C64::new(c, 0.0)).expect("same shape") }
    }

    pub fn max_diff(&self, other: &QFormField) -> f64 {
        self.matrices.max_diff(&other.matrices)
    }

    /// Largest entry difference restricted to a mask.
    pub fn max_diff_on(&self, other: &QFormField, mask: &[bool]) -> f64 {
        (0..mask.len())
            .filter(|&p| mask[p])
            .map(|p| (self.at(p) - other.at(p)).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// The unsymmetrized matrix `A_jk = X_j X̄_k φ + Σ_l e_jk^l X̄_l φ`.
pub fn commutator_hessian(s: &FIStructure, phi: &ScalarField, e: &CommutatorCoefficients) -> Result<MatrixField> {
    let n = s.n();
    if e.n() != n {
        return Err(Error::Shape("commutator coefficients do not match the frame".into()));
    }
    let xbar_phi: Vec<ScalarField> =
        s.v_frame().iter().map(|x| apply_vector(&x.conj(), phi)).collect::<Result<_>>()?;
    let mut a = vec![vec![ScalarField::zeros(s.chart()); n]; n];
    for j in 0..n {
        for k in 0..n {
            let mut f = apply_vector(&s.v_frame()[j], &xbar_phi[k])?;
            for (l, xl) in xbar_phi.iter().enumerate() {
                f = &f + &(e.e(j, k, l) * xl);
            }
            a[j][k] = f;
        }
    }
    MatrixField::from_fn(s.chart(), |p| CMat::from_fn(n, n, |j, k| a[j][k].at(p)))
}

/// `Q(ξ) = Re Σ A_jk ξ_j ξ̄_k` as the Hermitian matrix `H = (Aᵀ + Ā)/2`.
pub fn q_form(s: &FIStructure, phi: &ScalarField, e: &CommutatorCoefficients) -> Result<QFormField> {
    let a = commutator_hessian(s, phi, e)?;
    let half = C64::new(0.5, 0.0);
    Ok(QFormField { matrices: a.map(|_, m| (m.transpose() + m.conjugate()) * half)? })
}

/// Sign counts (n₊, n₀, n₋) of a Hermitian matrix, optionally restricted to the span
/// of the orthonormal columns of `basis`.
pub fn sign_counts(h: &CMat, basis: Option<&CMat>, tol: f64) -> (usize, usize, usize) {
    let restricted;
    let h = match basis {
        Some(b) => {
            restricted = b.adjoint() * h * b;
            &restricted
        }
        None => h,
    };
    let (vals, _) = hermitian_eigen(h);
    let pos = vals.iter().filter(|&&v| v > tol).count();
    let neg = vals.iter().filter(|&&v| v < -tol).count();
    (pos, vals.len() - pos - neg, neg)
}

/// Per-point sign counts, with an optional pointwise subspace.
pub fn eig_stats(q: &QFormField, subspace: Option<&[CMat]>, tol: f64) -> Vec<(usize, usize, usize)> {
    (0..q.matrices.matrices().len()).map(|p| sign_counts(q.at(p), subspace.map(|s| &s[p]), tol)).collect()
}

/// Orthonormal basis of `{ξ : Σ ξ_j b_j = 0}`, the frame coordinates of V ∩ Ker dφ.
pub fn kernel_subspace(b: &[C64]) -> CMat {
    let row = CMat::from_fn(1, b.len(), |_, j| b[j]);
    if b.iter().all(|z| z.norm() == 0.0) {
        return CMat::identity(b.len(), b.len());
    }
    null_space(&row, 1e-12 * b.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub q: usize,
    pub pass: bool,
    /// Grid points of K_φ that were examined.
    pub checked: usize,
    /// First grid point violating the eigenvalue count.
    pub witness: Option<usize>,
    pub failures: usize,
}

fn check_q_range(q: usize, n: usize) -> Result<()> {
    if q == 0 || q > n + 1 {
        return Err(Error::OutOfRange(format!("q = {q} outside 1..={}", n + 1)));
    }
    Ok(())
}

/// q-convexity on K_φ: Q restricted to V∩Ker dφ has at least `dim − q + 1` positive eigenvalues.
pub fn check_q_convex(s: &FIStructure, phi: &ScalarField, q: usize, tol: f64) -> Result<ConvexityReport> {
    check_q_range(q, s.n())?;
    check_q_convex_with(s, phi, &commutator_coefficients(s, 1e-8)?, q, tol, None)
}

/// As [`check_q_convex`] with explicit coefficients, optionally restricted to a region.
pub fn check_q_convex_with(
    s: &FIStructure,
    phi: &ScalarField,
    e: &CommutatorCoefficients,
    q: usize,
    tol: f64,
    region: Option<&[bool]>,
) -> Result<ConvexityReport> {
    check_q_range(q, s.n())?;
    let qf = q_form(s, phi, e)?;
    let masks = critical_sets(s, phi, MASK_TOL)?;
    let xphi = frame_derivatives(s, phi)?;
    let mut report = ConvexityReport { q, pass: true, checked: 0, witness: None, failures: 0 };
    for p in (0..masks.k.len()).filter(|&p| masks.k[p] && region.map_or(true, |r| r[p])) {
        report.checked += 1;
        let need = restricted_requirement(&qf, &xphi, &masks, p, q, tol);
        if !need {
            report.failures += 1;
            report.pass = false;
            report.witness.get_or_insert(p);
        }
    }
    Ok(report)
}

fn frame_gradient(xphi: &[ScalarField], masks: &CriticalSets, p: usize) -> Vec<C64> {
    if masks.c[p] {
        vec![ZERO; xphi.len()]
    } else {
        xphi.iter().map(|f| f.at(p)).collect()
    }
}

fn restricted_requirement(qf: &QFormField, xphi: &[ScalarField], masks: &CriticalSets, p: usize, q: usize, tol: f64) -> bool {
    let sub = kernel_subspace(&frame_gradient(xphi, masks, p));
    let (pos, _, _) = sign_counts(qf.at(p), Some(&sub), tol);
    pos + q > sub.ncols()
}

/// Smallest q with `n₊ ≥ dim(V∩Ker dφ) − q + 1` at each K_φ point (None off K_φ).
pub fn convexity_degrees(
    s: &FIStructure,
    phi: &ScalarField,
    e: &CommutatorCoefficients,
    tol: f64,
) -> Result<Vec<Option<usize>>> {
    let qf = q_form(s, phi, e)?;
    let masks = critical_sets(s, phi, MASK_TOL)?;
    let xphi = frame_derivatives(s, phi)?;
    Ok((0..masks.k.len())
        .map(|p| {
            masks.k[p].then(|| {
                let sub = kernel_subspace(&frame_gradient(&xphi, &masks, p));
                let (pos, _, _) = sign_counts(qf.at(p), Some(&sub), tol);
                (sub.ncols() + 1).saturating_sub(pos).max(1)
            })
        })
        .collect())
}

/// Hermitian metric on a basic line bundle: local weights φ_α, transition functions
/// φ_αβ, and a tensor power τ.
#[derive(Debug, Clone)]
pub struct LineBundleMetric {
    weights: Vec<ScalarField>,
    cocycle: BTreeMap<(usize, usize), ScalarField>,
    tau: u32,
}

impl LineBundleMetric {
    pub fn new(weights: Vec<ScalarField>, cocycle: Vec<((usize, usize), ScalarField)>, tau: u32) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Shape("at least one local weight is required".into()));
        }
        if tau == 0 {
            return Err(Error::OutOfRange("tensor power must be at least 1".into()));
        }
        for w in &weights {
            w.require_real()?;
        }
        let mut map = BTreeMap::new();
        for ((a, b), f) in cocycle {
            if a >= weights.len() || b >= weights.len() {
                return Err(Error::OutOfRange(format!("transition ({a},{b})")));
            }
            map.insert((a, b), f);
        }
        Ok(LineBundleMetric { weights, cocycle: map, tau })
    }

    pub fn single(weight: ScalarField, tau: u32) -> Result<Self> {
        Self::new(vec![weight], Vec::new(), tau)
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    pub fn with_tau(&self, tau: u32) -> Result<Self> {
        Self::new(self.weights.clone(), self.cocycle.clone().into_iter().collect(), tau)
    }

    /// Weight of L^τ in trivialization α.
    pub fn weight(&self, alpha: usize) -> ScalarField {
        self.weights[alpha].scale(C64::new(self.tau as f64, 0.0))
    }

    /// Largest violation of `φ_α = φ_β + log|φ_αβ|²`.
    pub fn discrepancy_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&(a, b), f) in &self.cocycle {
            for p in 0..f.data().len() {
                let lhs = self.weights[a].at(p).re;
                let rhs = self.weights[b].at(p).re + f.at(p).norm_sqr().ln();
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }

    pub fn check(&self, s: &FIStructure, tol: f64) -> Result<()> {
        let r = self.discrepancy_residual();
        if r > tol {
            return Err(Error::Discrepancy(r));
        }
        for f in self.cocycle.values() {
            if !is_basic_scalar(s, f, 1e-8)? {
                return Err(Error::Cocycle("transition function is not basic".into()));
            }
        }
        Ok(())
    }
}

/// Q for `h^τ` in trivialization α: τ times the Q of φ_α.
pub fn q_form_metric(
    s: &FIStructure,
    h: &LineBundleMetric,
    alpha: usize,
    e: &CommutatorCoefficients,
) -> Result<QFormField> {
    Ok(q_form(s, &h.weights[alpha], e)?.scale(h.tau as f64))
}

/// q-positivity: full-space count `n₊ ≥ n − q + 1` on K_{h_L}.
pub fn check_q_positive(s: &FIStructure, h: &LineBundleMetric, q: usize, tol: f64) -> Result<ConvexityReport> {
    check_q_range(q, s.n())?;
    check_q_positive_with(s, h, &commutator_coefficients(s, 1e-8)?, q, tol, None)
}

pub fn check_q_positive_with(
    s: &FIStructure,
    h: &LineBundleMetric,
    e: &CommutatorCoefficients,
    q: usize,
    tol: f64,
    region: Option<&[bool]>,
) -> Result<ConvexityReport> {
    check_q_range(q, s.n())?;
    h.check(s, 1e-9)?;
    let qf = q_form_metric(s, h, 0, e)?;
    let masks = critical_sets(s, &h.weights[0], MASK_TOL)?;
    let n = s.n();
    let mut report = ConvexityReport { q, pass: true, checked: 0, witness: None, failures: 0 };
    for p in (0..masks.k.len()).filter(|&p| masks.k[p] && region.map_or(true, |r| r[p])) {
        report.checked += 1;
        let (pos, _, _) = sign_counts(qf.at(p), None, tol);
        if pos + q < n + 1 {
            report.failures += 1;
            report.pass = false;
            report.witness.get_or_insert(p);
        }
    }
    Ok(report)
}

/// Pointwise Hermitian positive-definite matrices.
#[derive(Debug, Clone)]
pub struct HermitianMetricField {
    matrices: MatrixField,
}

impl HermitianMetricField {
    pub fn new(matrices: MatrixField) -> Result<Self> {
        for (p, m) in matrices.matrices().iter().enumerate() {
            let skew = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if skew > 1e-12 {
                return Err(Error::Shape(format!("matrix at point {p} is not Hermitian ({skew:.2e})")));
            }
            let (vals, _) = hermitian_eigen(m);
            if vals.first().is_some_and(|&v| v <= 0.0) {
                return Err(Error::Shape(format!("matrix at point {p} is not positive definite")));
            }
        }
        Ok(HermitianMetricField { matrices })
    }

    pub fn matrices(&self) -> &MatrixField {
        &self.matrices
    }

    pub fn eigenvalues(&self, p: usize) -> Vec<f64> {
        hermitian_eigen(self.matrices.at(p)).0
    }
}

/// The fixed profile `θ(t) = t + κ(1 − t)³` for t < 1 and `θ(t) = t` for t ≥ 1,
/// with `κ = 1 + 1/δ`. It is C² at the single knot t = 1.
pub fn eigenfloor_profile(t: f64, delta: f64) -> f64 {
    if t >= 1.0 {
        t
    } else {
        let kappa = 1.0 + 1.0 / delta;
        t + kappa * (1.0 - t).powi(3)
    }
}

/// `A′ = η·θ(η⁻¹A)` by spectral calculus at every grid point.
pub fn eigenfloor_metric(a: &MatrixField, eta: &ScalarField, delta: f64) -> Result<HermitianMetricField> {
    if !(delta > 0.0) {
        return Err(Error::OutOfRange(format!("δ = {delta} must be positive")));
    }
    eta.require_real()?;
    if eta.data().iter().any(|z| z.re <= 0.0) {
        return Err(Error::OutOfRange("η must be positive".into()));
    }
    let out = a.map(|p, m| {
        let e = eta.at(p).re;
        let (vals, vecs) = hermitian_eigen(m);
        let d = CMat::from_diagonal(&CVec::from_iterator(
            vals.len(),
            vals.iter().map(|&l| C64::new(e * eigenfloor_profile(l / e, delta), 0.0)),
        ));
        let r = &vecs * d * vecs.adjoint();
        (&r + r.adjoint()) * C64::new(0.5, 0.0)
    })?;
    HermitianMetricField::new(out)
}

/// Output of the compensation step: new e-coefficients and the ψ field.
#[derive(Debug, Clone)]
pub struct Compensation {
    pub e: CommutatorCoefficients,
    pub psi: ScalarField,
    /// Coefficients e^l of the real field X = Σ e^l X_l.
    pub direction: Vec<ScalarField>,
    /// X(φ) on the grid.
    pub x_phi: Vec<f64>,
}

/// Margin above 1 for the compensated smallest eigenvalue.
const COMPENSATION_MARGIN: f64 = 0.5;

/// Replaces `e_jk^l` by `e_jk^l + ψ δ_jk ē^l` on `region`, where X = Σ e^l X_l is a real
/// field in V∩V̄ with X(φ) > 0 there.
pub fn compensate_e(
    s: &FIStructure,
    phi: &ScalarField,
    e: &CommutatorCoefficients,
    region: &[bool],
) -> Result<Compensation> {
    phi.require_real()?;
    let n = s.n();
    let chart = s.chart();
    let grad = gradient(phi)?;
    let qf = q_form(s, phi, e)?;
    let mut dir = vec![vec![ZERO; chart.len()]; n];
    let mut psi = vec![ZERO; chart.len()];
    let mut x_phi = vec![0.0; chart.len()];
    for p in (0..chart.len()).filter(|&p| region[p]) {
        let basis = real_intersection_basis(s, p, 1e-8);
        let mut x = vec![0.0; chart.dim()];
        let mut xf = 0.0;
        for y in basis.column_iter() {
            let yphi: f64 = y.iter().zip(&grad).map(|(&yn, g)| yn * g.at(p).re).sum();
            xf += yphi * yphi;
            for nu in 0..chart.dim() {
                x[nu] += yphi * y[nu];
            }
        }
        if xf <= MASK_TOL * MASK_TOL {
            return Err(Error::NoRealDirection(p));
        }
        let rhs = CVec::from_iterator(chart.dim(), x.iter().map(|&v| C64::new(v, 0.0)));
        let (coef, _, _) = min_norm_solve(&s.v_matrix(p), &rhs, 1e-12);
        for l in 0..n {
            dir[l][p] = coef[l];
        }
        let lmin = hermitian_eigen(qf.at(p)).0[0];
        psi[p] = C64::new((1.0 + COMPENSATION_MARGIN - lmin).max(0.0) / xf, 0.0);
        x_phi[p] = xf;
    }
    let dir: Vec<ScalarField> = dir.into_iter().map(|d| ScalarField::from_vec(chart, d)).collect::<Result<_>>()?;
    let psi = ScalarField::from_vec(chart, psi)?;
    let mut new_e = e.e_fields().to_vec();
    for j in 0..n {
        for l in 0..n {
            let idx = (j * n + j) * n + l;
            new_e[idx] = &new_e[idx] + &(&psi * &dir[l].conj());
        }
    }
    Ok(Compensation { e: e.with_e(new_e)?, psi, direction: dir, x_phi })
}

#[cfg(test)]
mod tests;
