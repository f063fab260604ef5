//! Minimum-norm least-squares solves and leafwise cohomology ranks.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{assemble, matvec, matvec_adjoint, DiscreteComplex};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, C64, ZERO};
use crate::linalg::{rank, CMat};
use crate::structure::{FIStructure, TwistForm};

/// Relative tolerance on `D_q f` for the closedness precondition.
pub const CLOSED_TOL: f64 = 1e-8;
/// Relative stopping tolerance on the normal-equation residual.
const CG_TOL: f64 = 1e-13;
/// Floor on the normal-equation residual, relative to `‖A‖·‖b‖`.
const CG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// `‖D^{*w}(D u − f)‖_W`, the normal-equation residual.
    pub residual: f64,
    pub solution_norm: f64,
    /// `‖f − D u‖_W`: the part of f orthogonal to the range.
    pub obstruction: f64,
    /// `‖D u‖_W`.
    pub range_norm: f64,
    pub iterations: usize,
    /// `|‖f‖² − ‖Du‖² − obstruction²| / ‖f‖²`.
    pub pythagoras_defect: f64,
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Largest singular value of `W_{q+1}^{1/2} D_q W_q^{-1/2}` by power iteration.
fn op_norm(c: &DiscreteComplex, q: usize) -> f64 {
    let d = c.op(q).expect("degree checked");
    let (wi, wo) = (c.weight(q), c.weight(q + 1));
    let mut x: Vec<C64> = (0..d.ncols()).map(|i| C64::new(1.0 + (i % 7) as f64, (i % 3) as f64)).collect();
    let mut sigma = 0.0;
    for _ in 0..30 {
        let nx = norm2(&x).sqrt();
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|z| *z /= nx);
        let y: Vec<C64> = x.iter().zip(wi).map(|(z, w)| z / w.sqrt()).collect();
        let mut y = matvec(d, &y);
        y.iter_mut().zip(wo).for_each(|(z, w)| *z *= *w);
        sigma = norm2(&y.iter().zip(wo).map(|(z, w)| z / w.sqrt()).collect::<Vec<_>>()).sqrt();
        let mut z = matvec_adjoint(d, &y);
        z.iter_mut().zip(wi).for_each(|(v, w)| *v /= w.sqrt());
        x = z;
    }
    sigma
}

/// Solves `D_{q−1} u = f` in the least-squares sense with minimum `‖u‖_W`.
pub fn solve(c: &DiscreteComplex, q: usize, f: &[C64]) -> Result<(Vec<C64>, SolveReport)> {
    if q == 0 || q > c.n() {
        return Err(Error::OutOfRange(format!("solve needs 1 ≤ q ≤ {}", c.n())));
    }
    if f.len() != c.dim(q) {
        return Err(Error::Shape(format!("right-hand side has length {}, expected {}", f.len(), c.dim(q))));
    }
    let fnorm = c.norm(q, f);
    if q < c.n() {
        let df = c.apply(q, f)?;
        let scale = op_norm(c, q).max(1.0) * fnorm;
        let r = c.norm(q + 1, &df);
        if r > CLOSED_TOL * scale {
            return Err(Error::NotClosed(r / scale.max(f64::MIN_POSITIVE)));
        }
    }
    let d = c.op(q - 1).expect("degree checked");
    let (wi, wo) = (c.weight(q - 1), c.weight(q));
    let sw_out: Vec<f64> = wo.iter().map(|w| w.sqrt()).collect();
    let sw_in: Vec<f64> = wi.iter().map(|w| w.sqrt()).collect();
    // CGLS on A = W_out^{1/2} D W_in^{-1/2} with b = W_out^{1/2} f.
    let a = |y: &[C64]| -> Vec<C64> {
        let u: Vec<C64> = y.iter().zip(&sw_in).map(|(z, s)| z / s).collect();
        matvec(d, &u).into_iter().zip(&sw_out).map(|(z, s)| z * s).collect()
    };
    let ah = |r: &[C64]| -> Vec<C64> {
        let v: Vec<C64> = r.iter().zip(&sw_out).map(|(z, s)| z * s).collect();
        matvec_adjoint(d, &v).into_iter().zip(&sw_in).map(|(z, s)| z / s).collect()
    };
    let b: Vec<C64> = f.iter().zip(&sw_out).map(|(z, s)| z * s).collect();
    let mut y = vec![ZERO; d.ncols()];
    let mut r = b.clone();
    let mut s = ah(&r);
    let mut p = s.clone();
    let mut gamma = norm2(&s);
    let stop = (CG_TOL * gamma.sqrt()).max(CG_FLOOR * op_norm(c, q - 1) * norm2(&b).sqrt());
    let cap = 10 * d.ncols().max(1);
    let mut iterations = 0;
    let (mut amin, mut amax) = (f64::INFINITY, 0.0f64);
    while gamma.sqrt() > stop && gamma > 0.0 {
        if iterations >= cap {
            return Err(Error::IllConditioned(amax / amin.max(f64::MIN_POSITIVE)));
        }
        let qv = a(&p);
        let qq = norm2(&qv);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        amin = amin.min(alpha);
        amax = amax.max(alpha);
        y.iter_mut().zip(&p).for_each(|(yi, pi)| *yi += alpha * pi);
        r.iter_mut().zip(&qv).for_each(|(ri, qi)| *ri -= alpha * qi);
        s = ah(&r);
        let g2 = norm2(&s);
        let beta = g2 / gamma;
        gamma = g2;
        p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + beta * *pi);
        iterations += 1;
    }
    let u: Vec<C64> = y.iter().zip(&sw_in).map(|(z, s)| z / s).collect();
    let du = c.apply(q - 1, &u)?;
    let diff: Vec<C64> = du.iter().zip(f).map(|(a, b)| a - b).collect();
    let obstruction = c.norm(q, &diff);
    let range_norm = c.norm(q, &du);
    let residual = c.norm(q - 1, &c.adjoint_apply(q - 1, &diff)?);
    let pythagoras_defect = if fnorm > 0.0 {
        (fnorm * fnorm - range_norm * range_norm - obstruction * obstruction).abs() / (fnorm * fnorm)
    } else {
        0.0
    };
    let report = SolveReport {
        residual,
        solution_norm: c.norm(q - 1, &u),
        obstruction,
        range_norm,
        iterations,
        pythagoras_defect,
    };
    Ok((u, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafwiseReport {
    pub q: usize,
    pub kernel_dim: usize,
    /// Rank of the incoming map `D_{q−1}`.
    pub image_dim: usize,
    pub defect: usize,
}

/// Rank threshold relative to the largest singular value.
pub const RANK_RTOL: f64 = 1e-8;

fn dense(m: &nalgebra_sparse::CsrMatrix<C64>) -> CMat {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, c, v) in m.triplet_iter() {
        out[(r, c)] += *v;
    }
    out
}

fn numerical_rank(m: &CMat) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let smax = crate::linalg::singular_values(m).first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    rank(m, RANK_RTOL * smax)
}

/// Classifies the structure as essentially real (V = V̄) or CR-type (V∩V̄ = 0) at every point.
fn classify(s: &FIStructure) -> Result<()> {
    let n = s.n();
    let mut kinds = (0usize, 0usize);
    for p in 0..s.chart().len() {
        let b = s.v_matrix(p);
        let both = CMat::from_fn(b.nrows(), 2 * n, |r, c| if c < n { b[(r, c)] } else { b[(r, c - n)].conj() });
        match rank(&both, 1e-8) {
            r if r == n => kinds.0 += 1,
            r if r == 2 * n => kinds.1 += 1,
            r => return Err(Error::Unclassified(format!("rank of V + V̄ is {r} at grid point {p}"))),
        }
    }
    if kinds.0 > 0 && kinds.1 > 0 {
        return Err(Error::Unclassified("V ∩ V̄ changes type across the chart".into()));
    }
    Ok(())
}

/// Dimensions of the leafwise twisted cohomology of the quotient complex in degree q.
pub fn leafwise_cohomology(s: &FIStructure, twist: &TwistForm, q: usize) -> Result<LeafwiseReport> {
    classify(s)?;
    if q > s.n() {
        return Err(Error::OutOfRange(format!("q = {q} exceeds n = {}", s.n())));
    }
    let c = assemble(s, twist, 1, &ScalarField::zeros(s.chart()))?;
    let out_rank = c.op(q).map_or(0, |d| numerical_rank(&dense(d)));
    let image_dim = if q == 0 { 0 } else { numerical_rank(&dense(c.op(q - 1).expect("degree in range"))) };
    let kernel_dim = c.dim(q) - out_rank;
    Ok(LeafwiseReport { q, kernel_dim, image_dim, defect: kernel_dim - image_dim })
}
