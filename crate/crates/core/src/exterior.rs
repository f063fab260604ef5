//! Differential forms on a chart, frames and coframes.
//!
//! A k-form stores one coefficient field per strictly increasing multi-index,
//! in lexicographic order. Signs come from sorting transpositions: the
//! coefficient on `I` is the value on the basis vectors `E_{i_1},…,E_{i_k}`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{partial_derivative, same_chart, Chart, ScalarField, VectorField, C64, ONE, ZERO};
use crate::linalg::{det, select, singular_values, CMat};

/// Strictly increasing list of indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(idx: Vec<usize>, dim: usize) -> Result<Self> {
        if idx.windows(2).any(|w| w[0] >= w[1]) || idx.iter().any(|&i| i >= dim) {
            return Err(Error::Shape(format!("{idx:?} is not an increasing multi-index below {dim}")));
        }
        Ok(MultiIndex(idx))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// All increasing k-subsets of 0..dim, lexicographic.
pub fn multi_indices(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= dim {
        rec(0, dim, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn mask(idx: &[usize]) -> u64 {
    idx.iter().fold(0, |m, &i| m | (1 << i))
}

/// Position lookup for the multi-indices of one degree.
pub struct IndexTable {
    pub list: Vec<Vec<usize>>,
    pos: HashMap<u64, usize>,
}

impl IndexTable {
    pub fn new(dim: usize, k: usize) -> Self {
        let list = multi_indices(dim, k);
        let pos = list.iter().enumerate().map(|(p, i)| (mask(i), p)).collect();
        IndexTable { list, pos }
    }

    pub fn position(&self, idx: &[usize]) -> Option<usize> {
        self.pos.get(&mask(idx)).copied()
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }
}

/// Sign of the permutation sorting the concatenation `a ++ b` of two disjoint
/// increasing lists, or `None` when they intersect.
pub fn shuffle_sign(a: &[usize], b: &[usize]) -> Option<f64> {
    let mut inversions = 0;
    for &i in a {
        for &j in b {
            if i == j {
                return None;
            }
            if i > j {
                inversions += 1;
            }
        }
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

/// Sorted union of two disjoint increasing lists.
pub fn merge(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v
}

/// Which basis a form's coefficients refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Coordinate,
    /// Coframe basis, identified by the coframe's id.
    Frame(u64),
}

#[derive(Debug, Clone)]
pub struct Form {
    chart: Arc<Chart>,
    degree: usize,
    basis: Basis,
    size: usize,
    coeffs: Vec<ScalarField>,
}

impl Form {
    pub fn zero(chart: &Arc<Chart>, degree: usize, basis: Basis, size: usize) -> Self {
        let coeffs = (0..binomial(size, degree)).map(|_| ScalarField::zeros(chart)).collect();
        Form { chart: chart.clone(), degree, basis, size, coeffs }
    }

    /// Coordinate-basis zero form.
    pub fn zero_coord(chart: &Arc<Chart>, degree: usize) -> Self {
        Self::zero(chart, degree, Basis::Coordinate, chart.dim())
    }

    pub fn from_coeffs(degree: usize, basis: Basis, size: usize, coeffs: Vec<ScalarField>) -> Result<Self> {
        let chart = coeffs
            .first()
            .map(|c| c.chart().clone())
            .ok_or_else(|| Error::Shape("no coefficients; use Form::zero".into()))?;
        if coeffs.len() != binomial(size, degree) {
            return Err(Error::Shape(format!(
                "{} coefficients for degree {degree} over a basis of size {size}",
                coeffs.len()
            )));
        }
        for c in &coeffs {
            same_chart(&chart, c.chart())?;
        }
        Ok(Form { chart, degree, basis, size, coeffs })
    }

    pub fn coord(degree: usize, coeffs: Vec<ScalarField>) -> Result<Self> {
        let size = coeffs.first().map(|c| c.chart().dim()).unwrap_or(0);
        Self::from_coeffs(degree, Basis::Coordinate, size, coeffs)
    }

    pub fn scalar(f: ScalarField) -> Self {
        let size = f.chart().dim();
        Form { chart: f.chart().clone(), degree: 0, basis: Basis::Coordinate, size, coeffs: vec![f] }
    }

    /// Coordinate 1-form Σ a_ν dx_ν.
    pub fn one_form(comps: Vec<ScalarField>) -> Result<Self> {
        Self::coord(1, comps)
    }

    /// Basis k-form dx_I (or ε^I) with unit coefficient.
    pub fn basis_form(chart: &Arc<Chart>, basis: Basis, size: usize, idx: &[usize]) -> Result<Self> {
        let mut f = Self::zero(chart, idx.len(), basis, size);
        let pos = IndexTable::new(size, idx.len())
            .position(idx)
            .filter(|_| MultiIndex::new(idx.to_vec(), size).is_ok())
            .ok_or_else(|| Error::Shape(format!("{idx:?} is not an increasing multi-index")))?;
        f.coeffs[pos] = ScalarField::constant(chart, ONE);
        Ok(f)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn basis_size(&self) -> usize {
        self.size
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [ScalarField] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<ScalarField> {
        self.coeffs
    }

    /// Coefficient on an increasing multi-index.
    pub fn coeff(&self, idx: &[usize]) -> Option<&ScalarField> {
        IndexTable::new(self.size, self.degree).position(idx).map(|p| &self.coeffs[p])
    }

    pub fn indices(&self) -> Vec<Vec<usize>> {
        multi_indices(self.size, self.degree)
    }

    fn check_compatible(&self, other: &Form) -> Result<()> {
        same_chart(&self.chart, &other.chart)?;
        if self.basis != other.basis || self.size != other.size {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        self.check_compatible(other)?;
        if self.degree != other.degree {
            return Err(Error::Shape("adding forms of different degrees".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Form { coeffs, ..self.clone_meta() })
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Form {
        Form { coeffs: self.coeffs.iter().map(|f| f.scale(c)).collect(), ..self.clone_meta() }
    }

    /// Pointwise product with a scalar field.
    pub fn mul_field(&self, f: &ScalarField) -> Result<Form> {
        let coeffs = self.coeffs.iter().map(|c| c.zip_map(f, |a, b| a * b)).collect::<Result<_>>()?;
        Ok(Form { coeffs, ..self.clone_meta() })
    }

    fn clone_meta(&self) -> Form {
        Form { chart: self.chart.clone(), degree: self.degree, basis: self.basis, size: self.size, coeffs: Vec::new() }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    /// Euclidean norm of all samples of all coefficients.
    pub fn sample_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.sample_norm().powi(2)).sum::<f64>().sqrt()
    }

    /// Coefficients at one grid point.
    pub fn at(&self, idx: usize) -> Vec<C64> {
        self.coeffs.iter().map(|c| c.at(idx)).collect()
    }
}

/// a ∧ b with shuffle signs.
pub fn wedge(a: &Form, b: &Form) -> Result<Form> {
    a.check_compatible(b)?;
    let k = a.degree + b.degree;
    if k > a.size {
        return Err(Error::DegreeOverflow(format!("{} + {} exceeds {}", a.degree, b.degree, a.size)));
    }
    let out_table = IndexTable::new(a.size, k);
    let mut out = Form::zero(&a.chart, k, a.basis, a.size);
    for (ia, ii) in a.indices().iter().enumerate() {
        for (jb, jj) in b.indices().iter().enumerate() {
            if let Some(s) = shuffle_sign(ii, jj) {
                let p = out_table.position(&merge(ii, jj)).unwrap();
                let (ca, cb) = (&a.coeffs[ia], &b.coeffs[jb]);
                for ((o, &x), &y) in out.coeffs[p].data_mut().iter_mut().zip(ca.data()).zip(cb.data()) {
                    *o += s * x * y;
                }
            }
        }
    }
    Ok(out)
}

/// Exterior derivative of a coordinate-basis form.
pub fn exterior_derivative(a: &Form) -> Result<Form> {
    if a.basis != Basis::Coordinate {
        return Err(Error::BasisMismatch);
    }
    let dim = a.chart.dim();
    if a.degree >= dim {
        return Err(Error::DegreeOverflow(format!("d of a degree-{} form on a {dim}-dimensional chart", a.degree)));
    }
    let out_table = IndexTable::new(dim, a.degree + 1);
    let mut out = Form::zero_coord(&a.chart, a.degree + 1);
    for (ia, ii) in a.indices().iter().enumerate() {
        if a.coeffs[ia].max_abs() == 0.0 {
            continue;
        }
        for nu in 0..dim {
            if let Some(s) = shuffle_sign(&[nu], ii) {
                let p = out_table.position(&merge(&[nu], ii)).unwrap();
                let d = partial_derivative(&a.coeffs[ia], nu)?;
                out.coeffs[p].axpy(C64::new(s, 0.0), &d);
            }
        }
    }
    Ok(out)
}

/// X ⌟ a for a coordinate-basis form.
pub fn interior_product(x: &VectorField, a: &Form) -> Result<Form> {
    same_chart(x.chart(), &a.chart)?;
    if a.basis != Basis::Coordinate {
        return Err(Error::BasisMismatch);
    }
    if a.degree == 0 {
        return Err(Error::DegreeOverflow("contraction of a 0-form".into()));
    }
    let dim = a.chart.dim();
    let out_table = IndexTable::new(dim, a.degree - 1);
    let mut out = Form::zero_coord(&a.chart, a.degree - 1);
    for (ia, ii) in a.indices().iter().enumerate() {
        for (s, &nu) in ii.iter().enumerate() {
            let rest: Vec<usize> = ii.iter().copied().filter(|&j| j != nu).collect();
            let p = out_table.position(&rest).unwrap();
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            let term = x.component(nu).zip_map(&a.coeffs[ia], |u, v| sign * u * v)?;
            out.coeffs[p] = &out.coeffs[p] + &term;
        }
    }
    Ok(out)
}

static NEXT_FRAME_ID: AtomicU64 = AtomicU64::new(1);

/// A pointwise basis {E_a} of vector fields with its dual basis {ε^a}.
#[derive(Debug, Clone)]
pub struct CoFrame {
    chart: Arc<Chart>,
    id: u64,
    vectors: Vec<VectorField>,
    forms: Vec<Form>,
    // Column a holds the components of E_a.
    frame_mats: Vec<CMat>,
    // Row a holds the components of ε^a.
    dual_mats: Vec<CMat>,
}

/// Dual coframe by pointwise inversion of the frame matrix.
pub fn dual_coframe(frame: &[VectorField]) -> Result<CoFrame> {
    let chart = frame.first().ok_or_else(|| Error::Shape("empty frame".into()))?.chart().clone();
    let dim = chart.dim();
    if frame.len() != dim {
        return Err(Error::Shape(format!("{} vectors in a frame of a {dim}-dimensional chart", frame.len())));
    }
    for v in frame {
        same_chart(&chart, v.chart())?;
    }
    let mut frame_mats = Vec::with_capacity(chart.len());
    let mut dual_mats = Vec::with_capacity(chart.len());
    for p in 0..chart.len() {
        let f = CMat::from_fn(dim, dim, |nu, a| frame[a].component(nu).at(p));
        let smin = singular_values(&f).last().copied().unwrap_or(0.0);
        if smin < 1e-8 {
            return Err(Error::FrameDegenerate { point: p, singular_value: smin });
        }
        let g = f.clone().try_inverse().ok_or(Error::FrameDegenerate { point: p, singular_value: smin })?;
        frame_mats.push(f);
        dual_mats.push(g);
    }
    let forms = (0..dim)
        .map(|a| {
            let comps = (0..dim)
                .map(|nu| {
                    let data = dual_mats.iter().map(|g| g[(a, nu)]).collect();
                    ScalarField::from_vec(&chart, data)
                })
                .collect::<Result<Vec<_>>>()?;
            Form::one_form(comps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoFrame {
        chart,
        id: NEXT_FRAME_ID.fetch_add(1, Ordering::Relaxed),
        vectors: frame.to_vec(),
        forms,
        frame_mats,
        dual_mats,
    })
}

impl CoFrame {
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn basis(&self) -> Basis {
        Basis::Frame(self.id)
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[VectorField] {
        &self.vectors
    }

    /// Dual 1-forms in the coordinate basis.
    pub fn forms(&self) -> &[Form] {
        &self.forms
    }

    pub fn frame_matrix(&self, p: usize) -> &CMat {
        &self.frame_mats[p]
    }

    pub fn dual_matrix(&self, p: usize) -> &CMat {
        &self.dual_mats[p]
    }

    /// max |⟨ε^a, E_b⟩ − δ_ab| over the grid.
    pub fn pairing_error(&self) -> f64 {
        let dim = self.dim();
        self.frame_mats
            .iter()
            .zip(&self.dual_mats)
            .map(|(f, g)| (g * f - CMat::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Pointwise matrix taking frame coefficients of k-forms to coordinate ones:
    /// a_J = Σ_I c_I det(G[I,J]).
    pub fn to_coordinate_matrix(&self, p: usize, k: usize) -> CMat {
        let list = multi_indices(self.dim(), k);
        let g = &self.dual_mats[p];
        CMat::from_fn(list.len(), list.len(), |j, i| det(&select(g, &list[i], &list[j])))
    }

    /// Pointwise matrix taking coordinate coefficients of k-forms to frame ones:
    /// c_I = Σ_J a_J det(F[J,I]).
    pub fn to_frame_matrix(&self, p: usize, k: usize) -> CMat {
        let list = multi_indices(self.dim(), k);
        let f = &self.frame_mats[p];
        CMat::from_fn(list.len(), list.len(), |i, j| det(&select(f, &list[j], &list[i])))
    }
}

fn apply_pointwise(a: &Form, mats: impl Fn(usize) -> CMat, basis: Basis) -> Result<Form> {
    let chart = a.chart.clone();
    let nc = a.coeffs.len();
    let mut data = vec![vec![ZERO; chart.len()]; nc];
    for p in 0..chart.len() {
        let m = mats(p);
        for i in 0..nc {
            let mut s = ZERO;
            for j in 0..nc {
                s += m[(i, j)] * a.coeffs[j].at(p);
            }
            data[i][p] = s;
        }
    }
    let coeffs = data.into_iter().map(|d| ScalarField::from_vec(&chart, d)).collect::<Result<Vec<_>>>()?;
    if coeffs.is_empty() {
        return Ok(Form::zero(&chart, a.degree, basis, a.size));
    }
    Form::from_coeffs(a.degree, basis, a.size, coeffs)
}

/// Re-expresses a form between the coordinate basis and the coframe basis
/// (in whichever direction applies).
pub fn change_basis(a: &Form, coframe: &CoFrame) -> Result<Form> {
    same_chart(&a.chart, &coframe.chart)?;
    match a.basis {
        Basis::Coordinate => apply_pointwise(a, |p| coframe.to_frame_matrix(p, a.degree), coframe.basis()),
        Basis::Frame(id) if id == coframe.id => {
            apply_pointwise(a, |p| coframe.to_coordinate_matrix(p, a.degree), Basis::Coordinate)
        }
        Basis::Frame(_) => Err(Error::BasisMismatch),
    }
}

/// Extreme pointwise ranks of a family of vector fields.
pub fn pointwise_rank(vectors: &[VectorField], tol: f64) -> Result<(usize, usize)> {
    let chart = vectors.first().ok_or_else(|| Error::Shape("empty vector list".into()))?.chart().clone();
    for v in vectors {
        same_chart(&chart, v.chart())?;
    }
    let (mut lo, mut hi) = (usize::MAX, 0);
    for p in 0..chart.len() {
        let m = CMat::from_fn(chart.dim(), vectors.len(), |nu, a| vectors[a].component(nu).at(p));
        let r = singular_values(&m).iter().filter(|&&s| s > tol).count();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::I;

    fn t(dim: usize) -> Arc<Chart> {
        Chart::torus(dim, 8).unwrap()
    }

    fn dx(c: &Arc<Chart>, nu: usize) -> Form {
        Form::basis_form(c, Basis::Coordinate, c.dim(), &[nu]).unwrap()
    }

    #[test]
    fn multi_index_order_and_counts() {
        assert_eq!(multi_indices(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(binomial(4, 2), 6);
        assert!(MultiIndex::new(vec![1, 1], 3).is_err());
        assert!(MultiIndex::new(vec![0, 3], 3).is_err());
        assert_eq!(shuffle_sign(&[1], &[0]), Some(-1.0));
        assert_eq!(shuffle_sign(&[0, 2], &[1]), Some(-1.0));
        assert_eq!(shuffle_sign(&[1], &[1]), None);
    }

    #[test]
    fn wedge_examples() {
        let c = t(3);
        let w = wedge(&dx(&c, 0), &dx(&c, 1)).unwrap();
        assert_eq!(w.coeff(&[0, 1]).unwrap().at(0), ONE);
        let a = dx(&c, 0).mul_field(&ScalarField::from_real_fn(&c, |x| x[1].cos())).unwrap();
        assert_eq!(wedge(&a, &a).unwrap().max_abs(), 0.0);

        let s = ScalarField::from_real_fn(&c, |x| x[0].sin());
        let lhs = wedge(&dx(&c, 0).mul_field(&s).unwrap(), &dx(&c, 1).add(&dx(&c, 2)).unwrap()).unwrap();
        assert!((lhs.coeff(&[0, 1]).unwrap() - &s).max_abs() == 0.0);
        assert!((lhs.coeff(&[0, 2]).unwrap() - &s).max_abs() == 0.0);
        assert_eq!(lhs.coeff(&[1, 2]).unwrap().max_abs(), 0.0);

        let top = wedge(&w, &dx(&c, 2)).unwrap();
        assert!(wedge(&top, &dx(&c, 0)).is_err());
    }

    #[test]
    fn derivative_examples() {
        let c = t(2);
        let a = dx(&c, 1).mul_field(&ScalarField::from_real_fn(&c, |x| x[0].sin())).unwrap();
        let da = exterior_derivative(&a).unwrap();
        let want = ScalarField::from_real_fn(&c, |x| x[0].cos());
        assert!((da.coeff(&[0, 1]).unwrap() - &want).max_abs() < 1e-13);
        let f = ScalarField::from_real_fn(&c, |x| (x[0] + 2.0 * x[1]).sin());
        let ddf = exterior_derivative(&exterior_derivative(&Form::scalar(f)).unwrap()).unwrap();
        assert!(ddf.max_abs() < 1e-12);
        assert!(exterior_derivative(&da).is_err());
    }

    #[test]
    fn interior_examples() {
        let c = t(3);
        let w = wedge(&dx(&c, 0), &dx(&c, 1)).unwrap();
        let d1 = VectorField::coordinate(&c, 0).unwrap();
        let r = interior_product(&d1, &w).unwrap();
        assert_eq!(r.coeff(&[1]).unwrap().at(3), ONE);
        assert_eq!(r.coeff(&[0]).unwrap().max_abs(), 0.0);
        let d3 = VectorField::coordinate(&c, 2).unwrap();
        assert_eq!(interior_product(&d3, &w).unwrap().max_abs(), 0.0);
        let f = ScalarField::from_real_fn(&c, |x| x[0].cos());
        let g = ScalarField::from_real_fn(&c, |x| x[2].sin());
        let fx = VectorField::coordinate(&c, 0).unwrap().scale_by(&f).unwrap();
        let r = interior_product(&fx, &dx(&c, 0).mul_field(&g).unwrap()).unwrap();
        assert!((&r.coeffs()[0] - &(&f * &g)).max_abs() < 1e-15);
        assert!(interior_product(&d1, &Form::scalar(f)).is_err());
    }

    #[test]
    fn coordinate_frame_is_self_dual() {
        let c = t(2);
        let frame: Vec<_> = (0..2).map(|a| VectorField::coordinate(&c, a).unwrap()).collect();
        let cf = dual_coframe(&frame).unwrap();
        assert!(cf.pairing_error() < 1e-15);
        assert!((cf.forms()[0].coeff(&[0]).unwrap().at(5) - ONE).norm() < 1e-15);
        let r = change_basis(&dx(&c, 0), &cf).unwrap();
        assert_eq!(r.basis(), cf.basis());
        assert!((r.coeffs()[0].at(0) - ONE).norm() < 1e-15);
    }

    #[test]
    fn complex_frame_inverse() {
        let c = t(2);
        let a = VectorField::constant(&c, &[ONE, I]).unwrap();
        let cf = dual_coframe(&[a.clone(), a.conj()]).unwrap();
        let w0 = cf.forms()[0].at(0);
        assert!((w0[0] - C64::new(0.5, 0.0)).norm() < 1e-15 && (w0[1] - C64::new(0.0, -0.5)).norm() < 1e-15);
        let w1 = cf.forms()[1].at(0);
        assert!((w1[0] - C64::new(0.5, 0.0)).norm() < 1e-15 && (w1[1] - C64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_frame_rejected() {
        let c = t(2);
        let a = VectorField::coordinate(&c, 0).unwrap();
        assert!(matches!(dual_coframe(&[a.clone(), a]), Err(Error::FrameDegenerate { .. })));
    }

    #[test]
    fn ranks() {
        let c = t(2);
        let d1 = VectorField::coordinate(&c, 0).unwrap();
        let d2 = VectorField::coordinate(&c, 1).unwrap();
        assert_eq!(pointwise_rank(&[d1.clone(), d2], 1e-8).unwrap(), (2, 2));
        let s = d1.scale_by(&ScalarField::from_real_fn(&c, |x| x[0].sin())).unwrap();
        assert_eq!(pointwise_rank(&[d1, s], 1e-8).unwrap(), (1, 1));
    }
}
