//! Numerical Bochner identity and the weighted a-priori inequality.

use rand::Rng;
use serde::Serialize;

use super::DiscreteComplex;
use crate::convexity::commutator_hessian;
use crate::error::{Error, Result};
use crate::exterior::{binomial, multi_indices, shuffle_sign, IndexTable};
use crate::grid::{apply_vector, ScalarField, C64};
use crate::random::random_compact_field;
use crate::structure::CommutatorCoefficients;

#[derive(Debug, Clone, Serialize)]
pub struct BochnerReport {
    /// `‖D_q g‖² + ‖D_{q−1}^{*w} g‖²`.
    pub lhs: f64,
    /// The Q-term `Re Σ ∫ A_jk g_kK ḡ_jK e^{−φ}`.
    pub q_term: f64,
    /// `Σ ∫ |X_j g_J|² e^{−φ}`.
    pub gradient_term: f64,
    pub remainder: f64,
    /// `G(g)` with `G² = gradient_term + ‖g‖²`.
    pub g_norm: f64,
    pub norm: f64,
    /// `|remainder| / (G(g)‖g‖)`.
    pub constant: f64,
}

fn check_support(c: &DiscreteComplex, g: &[C64]) -> Result<()> {
    let len = c.chart().len();
    let peak = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (i, z) in g.iter().enumerate() {
        let p = i % len;
        if z.norm() > 1e-14 * peak && (c.chart().on_boundary(p) || c.clipped()[p]) {
            return Err(Error::SupportOnBoundary(p));
        }
    }
    Ok(())
}

/// Evaluates both sides of the Bochner identity for a compactly supported degree-q cochain.
/// `c` must be assembled with weight φ.
pub fn bochner_check(
    c: &DiscreteComplex,
    phi: &ScalarField,
    e: &CommutatorCoefficients,
    q: usize,
    g: &[C64],
) -> Result<BochnerReport> {
    check_support(c, g)?;
    let s = c.structure();
    let n = c.n();
    let mut lhs = 0.0;
    if q < n {
        lhs += c.norm(q + 1, &c.apply(q, g)?).powi(2);
    }
    if q > 0 {
        lhs += c.norm(q - 1, &c.adjoint_apply(q - 1, g)?).powi(2);
    }
    let w = &c.weight(0)[..c.chart().len()];
    let fields = c.to_fields(q, g)?;
    let mut gradient_term = 0.0;
    for comp in &fields {
        for gj in comp {
            for x in s.v_frame() {
                let xg = apply_vector(x, gj)?;
                gradient_term += xg.data().iter().zip(w).map(|(z, w)| z.norm_sqr() * w).sum::<f64>();
            }
        }
    }
    let mut q_term = 0.0;
    if q > 0 {
        let a = commutator_hessian(s, phi, e)?;
        let table = IndexTable::new(n, q);
        // g_{kK} with the antisymmetric sign convention.
        let slot = |k: usize, kk: &[usize]| -> Option<(usize, f64)> {
            let sg = shuffle_sign(&[k], kk)?;
            let mut idx = kk.to_vec();
            idx.push(k);
            idx.sort_unstable();
            Some((table.position(&idx).expect("valid index"), sg))
        };
        for comp in &fields {
            for kk in multi_indices(n, q - 1) {
                for j in 0..n {
                    let Some((pj, sj)) = slot(j, &kk) else { continue };
                    for k in 0..n {
                        let Some((pk, sk)) = slot(k, &kk) else { continue };
                        for (p, wp) in w.iter().enumerate() {
                            let v = a.at(p)[(j, k)] * comp[pk].at(p) * comp[pj].at(p).conj() * (sj * sk);
                            q_term += v.re * wp;
                        }
                    }
                }
            }
        }
    }
    let norm = c.norm(q, g);
    let g_norm = (gradient_term + norm * norm).sqrt();
    let remainder = lhs - q_term - gradient_term;
    let denom = g_norm * norm;
    let constant = if denom > 0.0 { remainder.abs() / denom } else { 0.0 };
    Ok(BochnerReport { lhs, q_term, gradient_term, remainder, g_norm, norm, constant })
}

/// A degree-q cochain whose coefficients are independent bump-multiplied trigonometric polynomials.
pub fn random_compact_sample(
    c: &DiscreteComplex,
    q: usize,
    center: &[f64],
    radius: f64,
    bandwidth: usize,
    rng: &mut impl Rng,
) -> Result<Vec<C64>> {
    let nj = binomial(c.n(), q);
    let fields = (0..c.rank())
        .map(|_| (0..nj).map(|_| random_compact_field(c.chart(), center, radius, bandwidth, rng)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    c.from_fields(q, &fields)
}

#[derive(Debug, Clone, Serialize)]
pub struct AprioriReport {
    pub samples: usize,
    pub passed: usize,
    /// Smallest `(‖T*g‖² + ‖Sg‖² − ‖g‖²) / ‖g‖²`.
    pub worst_slack: f64,
    pub pass_rate: f64,
}

/// Checks `‖g‖² ≤ ‖D_{q−1}^{*w} g‖² + ‖D_q g‖²` for each sample, with relative slack ≥ −tol.
pub fn apriori_check(c: &DiscreteComplex, q: usize, samples: &[Vec<C64>], tol: f64) -> Result<AprioriReport> {
    if q > c.n() {
        return Err(Error::OutOfRange(format!("q = {q} exceeds n = {}", c.n())));
    }
    let mut passed = 0;
    let mut worst = f64::INFINITY;
    for g in samples {
        check_support(c, g)?;
        let g2 = c.norm(q, g).powi(2);
        if g2 == 0.0 {
            passed += 1;
            continue;
        }
        let mut rhs = 0.0;
        if q > 0 {
            rhs += c.norm(q - 1, &c.adjoint_apply(q - 1, g)?).powi(2);
        }
        if q < c.n() {
            rhs += c.norm(q + 1, &c.apply(q, g)?).powi(2);
        }
        let slack = (rhs - g2) / g2;
        worst = worst.min(slack);
        if slack >= -tol {
            passed += 1;
        }
    }
    let samples_n = samples.len();
    Ok(AprioriReport {
        samples: samples_n,
        passed,
        worst_slack: worst,
        pass_rate: if samples_n == 0 { 1.0 } else { passed as f64 / samples_n as f64 },
    })
}
