//! Basic vector bundles on a single chart.

use std::collections::BTreeMap;

use super::{is_basic_scalar, FIStructure};
use crate::error::{Error, Result};
use crate::exterior::{exterior_derivative, wedge, Form};
use crate::grid::C64;
use crate::linalg::MatrixField;

/// Rank-r bundle with transition matrices `g_{αβ}` between trivializations of one chart.
#[derive(Debug, Clone)]
pub struct BasicBundle {
    rank: usize,
    labels: Vec<String>,
    transitions: BTreeMap<(usize, usize), MatrixField>,
}

impl BasicBundle {
    /// One trivialization, no transitions.
    pub fn trivial(rank: usize) -> Self {
        BasicBundle { rank, labels: vec!["U".into()], transitions: BTreeMap::new() }
    }

    pub fn new(rank: usize, labels: Vec<String>, transitions: Vec<((usize, usize), MatrixField)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for ((a, b), g) in transitions {
            if a >= labels.len() || b >= labels.len() {
                return Err(Error::OutOfRange(format!("transition ({a},{b}) with {} trivializations", labels.len())));
            }
            if g.shape() != (rank, rank) {
                return Err(Error::Shape(format!("transition must be {rank}×{rank}")));
            }
            map.insert((a, b), g);
        }
        Ok(BasicBundle { rank, labels, transitions: map })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transition(&self, a: usize, b: usize) -> Option<&MatrixField> {
        self.transitions.get(&(a, b))
    }

    /// Largest violation of `g_{αβ} g_{βγ} = g_{αγ}` and `g_{αα} = I` among stored transitions.
    pub fn cocycle_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&(a, b), g) in &self.transitions {
            if a == b {
                worst = worst.max(g.max_diff(&MatrixField::identity(g.chart(), self.rank)));
            }
            for (&(b2, c), h) in &self.transitions {
                if b2 != b {
                    continue;
                }
                if let Some(gac) = self.transitions.get(&(a, c)) {
                    let prod = g.map(|p, m| m * h.at(p)).expect("same chart");
                    worst = worst.max(prod.max_diff(gac));
                }
            }
        }
        worst
    }

    pub fn check_cocycle(&self, tol: f64) -> Result<f64> {
        let r = self.cocycle_residual();
        if r > tol {
            return Err(Error::Cocycle(format!("cocycle residual {r:.3e}")));
        }
        Ok(r)
    }

    /// Every transition entry is annihilated by the V-frame.
    pub fn is_basic(&self, s: &FIStructure, tol: f64) -> Result<bool> {
        for g in self.transitions.values() {
            for i in 0..self.rank {
                for j in 0..self.rank {
                    if !is_basic_scalar(s, &g.entry(i, j), tol)? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// Zero-order term `(−1)^{deg u} ũ ∧ d(f⁻¹)·f` picked up when the componentwise
/// operator is written in a frame `ẽ` with `e = f·ẽ`. `u` is the row of components.
pub fn frame_change_term(u: &[Form], f: &MatrixField) -> Result<Vec<Form>> {
    let r = u.len();
    if f.shape() != (r, r) {
        return Err(Error::Shape("frame change must match the bundle rank".into()));
    }
    let degree = u.first().map(Form::degree).unwrap_or(0);
    let chart = f.chart();
    let mut inv = Vec::with_capacity(chart.len());
    for (p, m) in f.matrices().iter().enumerate() {
        inv.push(m.clone().try_inverse().ok_or(Error::FrameDegenerate { point: p, singular_value: 0.0 })?);
    }
    let finv = MatrixField::new(chart, inv)?;
    let dfinv: Vec<Vec<Form>> = (0..r)
        .map(|a| (0..r).map(|c| exterior_derivative(&Form::scalar(finv.entry(a, c)))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let sign = if degree % 2 == 0 { 1.0 } else { -1.0 };
    let mut out = Vec::with_capacity(r);
    for b in 0..r {
        let mut acc = Form::zero_coord(chart, degree + 1);
        for (a, ua) in u.iter().enumerate() {
            for (c, dfac) in dfinv[a].iter().enumerate() {
                let term = wedge(ua, &dfac.mul_field(&f.entry(c, b))?)?;
                acc = acc.add(&term)?;
            }
        }
        out.push(acc.scale(C64::new(sign, 0.0)));
    }
    Ok(out)
}
