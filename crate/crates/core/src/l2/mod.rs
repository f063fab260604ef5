//! Weighted discrete complexes: assembly, adjoints and Matrix Market export.
//!
//! A degree-q vector stacks the coefficients of `Θ∧ω^J ⊗ e_a` as
//! `(a · C(n,q) + J) · N + p`, with J lexicographic and p the flat grid index.
//! The frame is treated as orthonormal, so the weight of every slot at p is
//! `e^{−φ(p)}` times the cell volume.

mod estimates;
mod solve;

pub use estimates::{apriori_check, bochner_check, random_compact_sample, AprioriReport, BochnerReport};
pub use solve::{leafwise_cohomology, solve, LeafwiseReport, SolveReport};

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};
use crate::exterior::{binomial, multi_indices, shuffle_sign, IndexTable};
use crate::grid::{Chart, ScalarField, C64, ZERO};
use crate::structure::{mnt_quotient_operator, mq_coefficients, mq_form, FIStructure, MntOperator, StructureForms, TwistForm};

/// Weights are `e^{−φ}` with φ clipped to this magnitude.
pub const WEIGHT_CLIP: f64 = 40.0;

#[derive(Debug, Clone)]
pub struct DiscreteComplex {
    structure: FIStructure,
    twist: TwistForm,
    rank: usize,
    /// `ops[q]` maps degree q to degree q+1.
    ops: Vec<CsrMatrix<C64>>,
    weights: Vec<Vec<f64>>,
    /// Grid points where the weight was clipped.
    clipped: Vec<bool>,
}

fn sign(k: usize) -> C64 {
    if k % 2 == 0 {
        C64::new(1.0, 0.0)
    } else {
        C64::new(-1.0, 0.0)
    }
}

/// Entries `(row, col, value)` of the vector field `Σ a^ν ∂_ν` as a grid operator.
fn field_entries(chart: &Chart, comps: &[&ScalarField]) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for (nu, a) in comps.iter().enumerate() {
        if a.max_abs() == 0.0 {
            continue;
        }
        let n = chart.axes()[nu].resolution;
        let stride = chart.stride(nu);
        let dm = chart.diff_matrix(nu);
        for p in 0..chart.len() {
            let coef = a.at(p);
            if coef == ZERO {
                continue;
            }
            let k = (p / stride) % n;
            let base = p - k * stride;
            for kk in 0..n {
                let d = dm[k * n + kk];
                if d != ZERO {
                    out.push((p, base + kk * stride, coef * d));
                }
            }
        }
    }
    out
}

fn validate_weight(s: &FIStructure, weight: &ScalarField) -> Result<(Vec<f64>, Vec<bool>)> {
    if !Arc::ptr_eq(weight.chart(), s.chart()) && **weight.chart() != **s.chart() {
        return Err(Error::ChartMismatch);
    }
    weight.require_real()?;
    let cell = s.chart().cell_volume();
    let mut clipped = vec![false; weight.data().len()];
    let w = weight
        .data()
        .iter()
        .enumerate()
        .map(|(p, z)| {
            if z.re.abs() > WEIGHT_CLIP {
                clipped[p] = true;
            }
            (-z.re.clamp(-WEIGHT_CLIP, WEIGHT_CLIP)).exp() * cell
        })
        .collect();
    Ok((w, clipped))
}

impl DiscreteComplex {
    fn build(s: &FIStructure, twist: &TwistForm, rank: usize, weight: &ScalarField, blocks: Vec<CsrMatrix<C64>>) -> Result<Self> {
        let (w, clipped) = validate_weight(s, weight)?;
        let n = s.n();
        let ops = blocks.into_iter().map(|b| block_diagonal(&b, rank)).collect();
        let weights = (0..=n).map(|q| w.iter().cycle().take(rank * binomial(n, q) * w.len()).copied().collect()).collect();
        Ok(DiscreteComplex { structure: s.clone(), twist: twist.clone(), rank, ops, weights, clipped })
    }

    pub fn structure(&self) -> &FIStructure {
        &self.structure
    }

    pub fn twist(&self) -> &TwistForm {
        &self.twist
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.structure.chart()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Top degree n.
    pub fn n(&self) -> usize {
        self.structure.n()
    }

    pub fn dim(&self, q: usize) -> usize {
        self.weights[q].len()
    }

    pub fn op(&self, q: usize) -> Option<&CsrMatrix<C64>> {
        self.ops.get(q)
    }

    pub fn weight(&self, q: usize) -> &[f64] {
        &self.weights[q]
    }

    pub fn clipped(&self) -> &[bool] {
        &self.clipped
    }

    fn check_len(&self, q: usize, u: &[C64]) -> Result<()> {
        if q > self.n() || u.len() != self.dim(q) {
            return Err(Error::Shape(format!("vector of length {} is not a degree-{q} cochain", u.len())));
        }
        Ok(())
    }

    /// `D_q u`; the zero vector of degree n+1 is empty.
    pub fn apply(&self, q: usize, u: &[C64]) -> Result<Vec<C64>> {
        self.check_len(q, u)?;
        Ok(match self.ops.get(q) {
            Some(d) => matvec(d, u),
            None => Vec::new(),
        })
    }

    /// `D_q^{*w} v = W_q^{-1} D_q^H W_{q+1} v` for v of degree q+1.
    pub fn adjoint_apply(&self, q: usize, v: &[C64]) -> Result<Vec<C64>> {
        let d = self.ops.get(q).ok_or_else(|| Error::OutOfRange(format!("no map out of degree {q}")))?;
        self.check_len(q + 1, v)?;
        let wv: Vec<C64> = v.iter().zip(&self.weights[q + 1]).map(|(x, w)| x * *w).collect();
        let mut out = matvec_adjoint(d, &wv);
        for (o, w) in out.iter_mut().zip(&self.weights[q]) {
            *o /= *w;
        }
        Ok(out)
    }

    /// The matrix of `D_q^{*w}`.
    pub fn adjoint(&self, q: usize) -> Result<CsrMatrix<C64>> {
        let d = self.ops.get(q).ok_or_else(|| Error::OutOfRange(format!("no map out of degree {q}")))?;
        Ok(weighted_adjoint(d, &self.weights[q], &self.weights[q + 1]))
    }

    /// `⟨u, v⟩_W = Σ w u v̄`.
    pub fn inner(&self, q: usize, u: &[C64], v: &[C64]) -> C64 {
        u.iter().zip(v).zip(&self.weights[q]).map(|((a, b), w)| a * b.conj() * *w).sum()
    }

    pub fn norm(&self, q: usize, u: &[C64]) -> f64 {
        u.iter().zip(&self.weights[q]).map(|(a, w)| a.norm_sqr() * w).sum::<f64>().sqrt()
    }

    /// `‖D_{q+1} D_q‖_F / (‖D_{q+1}‖_F ‖D_q‖_F)`.
    pub fn composition_defect(&self, q: usize) -> Option<f64> {
        let (a, b) = (self.ops.get(q)?, self.ops.get(q + 1)?);
        let prod = b * a;
        Some(frobenius(&prod) / (frobenius(a) * frobenius(b)).max(f64::MIN_POSITIVE))
    }

    /// Splits a degree-q vector into fields indexed `[a][J]`.
    pub fn to_fields(&self, q: usize, u: &[C64]) -> Result<Vec<Vec<ScalarField>>> {
        self.check_len(q, u)?;
        let len = self.chart().len();
        let nj = binomial(self.n(), q);
        (0..self.rank)
            .map(|a| {
                (0..nj)
                    .map(|j| ScalarField::from_vec(self.chart(), u[(a * nj + j) * len..(a * nj + j + 1) * len].to_vec()))
                    .collect()
            })
            .collect()
    }

    pub fn from_fields(&self, q: usize, fields: &[Vec<ScalarField>]) -> Result<Vec<C64>> {
        let nj = binomial(self.n(), q);
        if fields.len() != self.rank || fields.iter().any(|f| f.len() != nj) {
            return Err(Error::Shape(format!("expected {} × {nj} coefficient fields", self.rank)));
        }
        Ok(fields.iter().flatten().flat_map(|f| f.data().iter().copied()).collect())
    }

    /// Writes `D_q.mtx` and the diagonal `W_q.mtx` for every degree.
    pub fn export_matrix_market(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (q, d) in self.ops.iter().enumerate() {
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("D_{q}.mtx")))?);
            write_matrix_market(&mut f, d)?;
        }
        for (q, w) in self.weights.iter().enumerate() {
            let diag = CsrMatrix::try_from_pattern_and_values(
                nalgebra_sparse::pattern::SparsityPattern::try_from_offsets_and_indices(
                    w.len(),
                    w.len(),
                    (0..=w.len()).collect(),
                    (0..w.len()).collect(),
                )
                .expect("diagonal pattern"),
                w.iter().map(|&x| C64::new(x, 0.0)).collect(),
            )
            .expect("diagonal values");
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("W_{q}.mtx")))?);
            write_matrix_market(&mut f, &diag)?;
        }
        Ok(())
    }
}

/// Assembles the quotient complex `d″_ϑ` on `Λ^q V* ⊗ E` for a trivial bundle of rank `rank`.
pub fn assemble(s: &FIStructure, twist: &TwistForm, rank: usize, weight: &ScalarField) -> Result<DiscreteComplex> {
    if rank == 0 {
        return Err(Error::OutOfRange("bundle rank must be positive".into()));
    }
    let quot = mnt_quotient_operator(s, twist)?;
    let n = s.n();
    let chart = s.chart();
    let len = chart.len();
    let fields: Vec<Vec<(usize, usize, C64)>> = s
        .v_frame()
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let comps: Vec<&ScalarField> = x.components().iter().collect();
            let mut e = field_entries(chart, &comps);
            for p in 0..len {
                e.push((p, p, -quot.twist_values()[j].at(p)));
            }
            e
        })
        .collect();
    let mut blocks = Vec::with_capacity(n);
    for q in 0..n {
        let ins = IndexTable::new(n, q);
        let outs = multi_indices(n, q + 1);
        let mut coo = CooMatrix::new(outs.len() * len, binomial(n, q) * len);
        for (row_j, i) in outs.iter().enumerate() {
            for a in 0..=q {
                let rest: Vec<usize> = i.iter().enumerate().filter(|&(k, _)| k != a).map(|(_, &v)| v).collect();
                let col_j = ins.position(&rest).expect("valid index");
                for &(r, c, v) in &fields[i[a]] {
                    coo.push(row_j * len + r, col_j * len + c, sign(a) * v);
                }
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
                        let col_j = ins.position(&idx).expect("valid index");
                        let c = quot.bracket_coefficient(i[a], i[b], l);
                        for p in 0..len {
                            let v = c.at(p);
                            if v != ZERO {
                                coo.push(row_j * len + p, col_j * len + p, sign(a + b) * sg * v);
                            }
                        }
                    }
                }
            }
        }
        blocks.push(CsrMatrix::from(&coo));
    }
    DiscreteComplex::build(s, twist, rank, weight, blocks)
}

/// Assembles the same complex by applying the full-form operator to every basis
/// coefficient of `Θ∧ω^J` and reading back the `Θ∧ω^I` coefficients.
pub fn assemble_full(
    s: &FIStructure,
    forms: &StructureForms,
    twist: &TwistForm,
    rank: usize,
    weight: &ScalarField,
) -> Result<DiscreteComplex> {
    if rank == 0 {
        return Err(Error::OutOfRange("bundle rank must be positive".into()));
    }
    let op = MntOperator::new(s, forms, twist)?;
    let n = s.n();
    let chart = s.chart();
    let len = chart.len();
    let mut blocks = Vec::with_capacity(n);
    for q in 0..n {
        let nin = binomial(n, q);
        let mut coo = CooMatrix::new(binomial(n, q + 1) * len, nin * len);
        for j in 0..nin {
            for p in 0..len {
                let mut coeffs = vec![ScalarField::zeros(chart); nin];
                coeffs[j].data_mut()[p] = C64::new(1.0, 0.0);
                let image = op.apply(&mq_form(s, q, &coeffs)?)?;
                for (i, f) in mq_coefficients(s, q + 1, &image)?.iter().enumerate() {
                    for (r, &v) in f.data().iter().enumerate() {
                        if v.norm() > 1e-14 {
                            coo.push(i * len + r, j * len + p, v);
                        }
                    }
                }
            }
        }
        blocks.push(CsrMatrix::from(&coo));
    }
    DiscreteComplex::build(s, twist, rank, weight, blocks)
}

fn block_diagonal(m: &CsrMatrix<C64>, rank: usize) -> CsrMatrix<C64> {
    if rank == 1 {
        return m.clone();
    }
    let mut coo = CooMatrix::new(m.nrows() * rank, m.ncols() * rank);
    for a in 0..rank {
        for (r, c, v) in m.triplet_iter() {
            coo.push(a * m.nrows() + r, a * m.ncols() + c, *v);
        }
    }
    CsrMatrix::from(&coo)
}

pub(crate) fn matvec(m: &CsrMatrix<C64>, u: &[C64]) -> Vec<C64> {
    m.row_iter()
        .map(|row| row.col_indices().iter().zip(row.values()).map(|(&c, v)| v * u[c]).sum())
        .collect()
}

pub(crate) fn matvec_adjoint(m: &CsrMatrix<C64>, v: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; m.ncols()];
    for (r, row) in m.row_iter().enumerate() {
        let x = v[r];
        if x == ZERO {
            continue;
        }
        for (&c, a) in row.col_indices().iter().zip(row.values()) {
            out[c] += a.conj() * x;
        }
    }
    out
}

fn weighted_adjoint(d: &CsrMatrix<C64>, w_in: &[f64], w_out: &[f64]) -> CsrMatrix<C64> {
    let mut coo = CooMatrix::new(d.ncols(), d.nrows());
    for (r, c, v) in d.triplet_iter() {
        coo.push(c, r, v.conj() * (w_out[r] / w_in[c]));
    }
    CsrMatrix::from(&coo)
}

fn frobenius(m: &CsrMatrix<C64>) -> f64 {
    m.values().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Sparse complex matrix in Matrix Market `coordinate complex general` format, 1-based.
pub fn write_matrix_market(w: &mut impl Write, m: &CsrMatrix<C64>) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (r, c, v) in m.triplet_iter() {
        writeln!(w, "{} {} {:.17e} {:.17e}", r + 1, c + 1, v.re, v.im)?;
    }
    Ok(())
}
