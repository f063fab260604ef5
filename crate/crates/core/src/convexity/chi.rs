//! Pointwise estimate data for a convex exhaustion and the reweighting χ built from it.

use serde::Serialize;

use super::{critical_sets, frame_derivatives, kernel_subspace, q_form, MASK_TOL};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, C64};
use crate::linalg::{hermitian_eigen, CVec};
use crate::structure::{CommutatorCoefficients, FIStructure};

#[derive(Debug, Clone, Copy)]
pub struct EstimateParams {
    /// Form degree the estimate targets.
    pub q: usize,
    /// Fraction of the negative leafwise eigenvalues kept after integration by parts, in (0, ½).
    pub epsilon: f64,
    /// Absorption constant for the mixed terms; the coupling constant is its reciprocal.
    pub varepsilon: f64,
    /// Lower-order term of the local estimates, taken constant.
    pub lower_order: f64,
    /// K∖C points with `|X_φ(φ)|` below this use the interior bound when Q is q-positive there.
    pub interior_band: f64,
}

impl EstimateParams {
    pub fn new(q: usize) -> Self {
        EstimateParams { q, epsilon: 0.25, varepsilon: 0.25, lower_order: -1.0, interior_band: 0.0 }
    }
}

/// Sampled estimate data at every grid point. Values outside `region` are kept but unused.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateFields {
    pub phi: Vec<f64>,
    /// 1 on K_φ∖C_φ, 0 elsewhere.
    pub psi: Vec<f64>,
    /// Lower bound on the tangential part (`+∞` when no tangential q-forms exist).
    pub mu: Vec<f64>,
    /// Lower bound on the normal part.
    pub r: Vec<f64>,
    /// `|X_φ(φ)|²`.
    pub xphi2: Vec<f64>,
    /// Sum of the q smallest eigenvalues of Q where Ψ = 0.
    pub lambda: Vec<f64>,
    pub lower_order: Vec<f64>,
    pub region: Vec<bool>,
}

/// Samples the estimate data for the weight φ with coefficients e (already compensated if needed).
pub fn estimate_fields(
    s: &FIStructure,
    phi: &ScalarField,
    e: &CommutatorCoefficients,
    params: EstimateParams,
    region: Option<&[bool]>,
) -> Result<EstimateFields> {
    let n = s.n();
    let q = params.q;
    if q == 0 || q > n {
        return Err(Error::OutOfRange(format!("q = {q} outside 1..={n}")));
    }
    if !(params.epsilon > 0.0 && params.epsilon < 0.5) || !(params.varepsilon > 0.0) {
        return Err(Error::OutOfRange("ε must lie in (0, ½) and ε' must be positive".into()));
    }
    let len = s.chart().len();
    let region = match region {
        Some(r) if r.len() != len => return Err(Error::Shape("region mask length".into())),
        Some(r) => r.to_vec(),
        None => vec![true; len],
    };
    let qf = q_form(s, phi, e)?;
    let masks = critical_sets(s, phi, MASK_TOL)?;
    let xphi = frame_derivatives(s, phi)?;
    let mut out = EstimateFields {
        phi: phi.data().iter().map(|z| z.re).collect(),
        psi: vec![0.0; len],
        mu: vec![f64::INFINITY; len],
        r: vec![0.0; len],
        xphi2: vec![0.0; len],
        lambda: vec![0.0; len],
        lower_order: vec![params.lower_order; len],
        region,
    };
    let keep = 1.0 - 2.0 * params.epsilon;
    for p in 0..len {
        let h = qf.at(p);
        let b: Vec<C64> = xphi.iter().map(|f| f.at(p)).collect();
        out.xphi2[p] = b.iter().map(|z| z.norm_sqr()).sum();
        let interior: f64 = hermitian_eigen(h).0[..q].iter().sum();
        let banded = out.xphi2[p] < params.interior_band * params.interior_band && interior > 0.0;
        if masks.k[p] && !masks.c[p] && !banded {
            out.psi[p] = 1.0;
            let norm = out.xphi2[p].sqrt();
            let un = CVec::from_iterator(n, b.iter().map(|z| z.conj() / norm));
            let tangential = kernel_subspace(&b);
            let block = tangential.adjoint() * h * &tangential;
            let (mu, rot) = hermitian_eigen(&block);
            let frame = &tangential * rot;
            let negative: f64 = mu.iter().filter(|&&m| m < 0.0).map(|&m| -keep * m).sum();
            if q <= mu.len() {
                out.mu[p] = negative + mu[..q].iter().sum::<f64>() - params.varepsilon;
            }
            let nn = (un.adjoint() * h * &un)[(0, 0)].re;
            let mixed: f64 = (frame.adjoint() * h * &un).iter().map(|z| z.norm_sqr()).sum();
            let frob = mu.iter().map(|m| m * m).sum::<f64>().sqrt();
            out.r[p] = negative + nn - frob - mixed / params.varepsilon;
        } else {
            out.lambda[p] = interior;
        }
    }
    Ok(out)
}

/// Sublevel suprema on a uniform t grid.
#[derive(Debug, Clone, Serialize)]
pub struct ChiTables {
    pub t: Vec<f64>,
    pub mu: Vec<f64>,
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl ChiTables {
    /// Suprema over `{φ < t + 1}` within the region.
    pub fn from_fields(f: &EstimateFields, t: &[f64]) -> Result<Self> {
        check_grid(t)?;
        let (lo, hi) = f
            .phi
            .iter()
            .zip(&f.region)
            .filter(|(_, &r)| r)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (&v, _)| (a.min(v), b.max(v)));
        if lo < t[0] || hi > t[t.len() - 1] {
            return Err(Error::OutOfRange(format!("t grid does not cover φ ∈ [{lo}, {hi}]")));
        }
        let mut tab = ChiTables {
            t: t.to_vec(),
            mu: vec![f64::NEG_INFINITY; t.len()],
            r: vec![f64::NEG_INFINITY; t.len()],
            c: vec![f64::NEG_INFINITY; t.len()],
            lambda: vec![f64::NEG_INFINITY; t.len()],
        };
        for (i, &ti) in t.iter().enumerate() {
            for p in (0..f.phi.len()).filter(|&p| f.region[p] && f.phi[p] < ti + 1.0) {
                let gap = 1.0 - f.lower_order[p];
                let psi = f.psi[p];
                tab.c[i] = tab.c[i].max(gap);
                if psi != 0.0 {
                    let need = gap * psi;
                    if f.mu[p] <= 0.0 && need > 0.0 {
                        return Err(unbounded(ti, "μ", p));
                    }
                    if f.mu[p].is_finite() {
                        tab.mu[i] = tab.mu[i].max(need / f.mu[p]);
                    }
                    if f.xphi2[p] <= 0.0 {
                        return Err(unbounded(ti, "|X_φ φ|²", p));
                    }
                    tab.r[i] = tab.r[i].max((psi - f.r[p]) / f.xphi2[p]);
                }
                if psi != 1.0 {
                    let need = gap * (1.0 - psi);
                    if f.lambda[p] <= 0.0 && need > 0.0 {
                        return Err(unbounded(ti, "λ", p));
                    }
                    tab.lambda[i] = tab.lambda[i].max(need / f.lambda[p]);
                }
            }
        }
        Ok(tab)
    }

    fn floor(&self, i: usize) -> f64 {
        let i = i.min(self.t.len() - 1);
        self.mu[i].max(self.c[i]).max(self.lambda[i])
    }
}

fn unbounded(t: f64, what: &str, p: usize) -> Error {
    Error::UnboundedSup { t, what: format!("{what} has a nonpositive denominator at grid point {p}") }
}

fn check_grid(t: &[f64]) -> Result<()> {
    if t.len() < 2 {
        return Err(Error::OutOfRange("t grid needs at least two nodes".into()));
    }
    let h = t[1] - t[0];
    if !(h > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::OutOfRange("t grid must be uniform and increasing".into()));
    }
    Ok(())
}

/// Convex increasing χ with `log χ′` continuous and piecewise linear on a uniform grid.
#[derive(Debug, Clone, Serialize)]
pub struct ChiFunction {
    t: Vec<f64>,
    /// `log χ′(t_i)`.
    log_d1: Vec<f64>,
    /// `χ(t_i)`, with χ(t₀) = t₀.
    values: Vec<f64>,
    /// Slope of `log χ′` on `[t_i, t_{i+1}]`.
    slopes: Vec<f64>,
}

/// Builds χ with `χ′ ≥ max(μ, C, λ)` and `χ″/χ′ ≥ R` on the sampled range.
pub fn construct_chi(tables: &ChiTables) -> Result<ChiFunction> {
    check_grid(&tables.t)?;
    let t = &tables.t;
    let h = t[1] - t[0];
    let log_floor = |i: usize| {
        let m = tables.floor(i);
        if m > 0.0 {
            m.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut log_d1 = vec![log_floor(1).max(0.0)];
    let mut slopes = Vec::with_capacity(t.len() - 1);
    for i in 0..t.len() - 1 {
        let catch_up = (log_floor(i + 2) - log_d1[i]) / h;
        let s = tables.r[(i + 1).min(t.len() - 1)].max(0.0).max(catch_up);
        slopes.push(s);
        log_d1.push(log_d1[i] + s * h);
    }
    let mut values = vec![t[0]];
    for i in 0..slopes.len() {
        values.push(values[i] + segment_integral(log_d1[i], slopes[i], h));
    }
    Ok(ChiFunction { t: t.clone(), log_d1, values, slopes })
}

fn segment_integral(a: f64, s: f64, tau: f64) -> f64 {
    if s.abs() < 1e-12 {
        a.exp() * tau * (1.0 + 0.5 * s * tau)
    } else {
        a.exp() * (s * tau).exp_m1() / s
    }
}

/// Slack of the three pointwise conditions; each must be ≥ 0.
#[derive(Debug, Clone, Serialize)]
pub struct ChiCheck {
    pub tangential: f64,
    pub normal: f64,
    pub interior: f64,
    pub pass: bool,
}

impl ChiFunction {
    fn segment(&self, t: f64) -> usize {
        let h = self.t[1] - self.t[0];
        (((t - self.t[0]) / h).floor().max(0.0) as usize).min(self.slopes.len() - 1)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    /// Slope of log χ′ on each grid cell.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn value(&self, t: f64) -> f64 {
        let i = self.segment(t);
        self.values[i] + segment_integral(self.log_d1[i], self.slopes[i], t - self.t[i])
    }

    pub fn d1(&self, t: f64) -> f64 {
        let i = self.segment(t);
        (self.log_d1[i] + self.slopes[i] * (t - self.t[i])).exp()
    }

    /// Right-hand second derivative.
    pub fn d2(&self, t: f64) -> f64 {
        self.slopes[self.segment(t)] * self.d1(t)
    }

    /// The field χ(φ).
    pub fn compose(&self, phi: &ScalarField) -> Result<ScalarField> {
        phi.require_real()?;
        Ok(phi.map(|z| C64::new(self.value(z.re), 0.0)))
    }

    /// Evaluates the three inequalities at every region point.
    pub fn verify(&self, f: &EstimateFields, tol: f64) -> ChiCheck {
        let mut chk = ChiCheck { tangential: f64::INFINITY, normal: f64::INFINITY, interior: f64::INFINITY, pass: true };
        for p in (0..f.phi.len()).filter(|&p| f.region[p]) {
            let (d1, d2) = (self.d1(f.phi[p]), self.d2(f.phi[p]));
            let (psi, c) = (f.psi[p], f.lower_order[p]);
            if psi != 0.0 {
                if f.mu[p].is_finite() {
                    chk.tangential = chk.tangential.min(d1 * f.mu[p] + c * psi - psi);
                }
                chk.normal = chk.normal.min(d1 * f.r[p] + d2 * psi * f.xphi2[p] + c * psi - psi);
            }
            if psi != 1.0 {
                chk.interior = chk.interior.min(d1 * f.lambda[p] + c * (1.0 - psi) - (1.0 - psi));
            }
        }
        chk.pass = chk.tangential >= -tol && chk.normal >= -tol && chk.interior >= -tol;
        chk
    }
}
