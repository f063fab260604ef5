//! Basic and logarithmic forms on elliptic normal charts, computed exactly on Laurent data in z.
//!
//! Coordinates are `z₁..z_m` (complex) and `t₁..t_k` (real). Indices are 0-based in this API.

mod poly;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;

pub use poly::{cq, cq_int, fmt_cq, insert_sign, rat, Cq, Monomial, Poly, ZForm, Q};

use crate::error::{Error, Result};

/// Normal chart with V spanned by `∂/∂z̄_ρ` and `∂/∂t_τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalChart {
    pub m: usize,
    pub k: usize,
}

impl NormalChart {
    pub fn new(m: usize, k: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::OutOfRange("a normal chart needs at least one complex coordinate".into()));
        }
        Ok(NormalChart { m, k })
    }
}

/// Basic forms are those whose coefficients are annihilated by every `∂/∂z̄_ρ` and `∂/∂t_τ`.
pub fn is_basic_pform(form: &ZForm, chart: &NormalChart) -> Result<bool> {
    if form.m() != chart.m || form.k() != chart.k {
        return Err(Error::Shape("form lives on a different chart".into()));
    }
    Ok(form.is_holomorphic())
}

/// `D = {z₁⋯z_a = 0}` with minimal defining function `F = z₁⋯z_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NCHypersurface {
    a: usize,
    m: usize,
}

impl NCHypersurface {
    pub fn new(a: usize, m: usize) -> Result<Self> {
        if a == 0 || a > m {
            return Err(Error::OutOfRange(format!("need 1 ≤ a ≤ m, got a = {a}, m = {m}")));
        }
        Ok(NCHypersurface { a, m })
    }

    pub fn components(&self) -> usize {
        self.a
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_smooth(&self) -> bool {
        self.a == 1
    }

    pub fn defining_function(&self, k: usize) -> Poly {
        (0..self.a).fold(Poly::one(self.m, k), |acc, i| acc.mul(&Poly::z(self.m, k, i)))
    }

    fn inverse_defining_function(&self, k: usize) -> Poly {
        (0..self.a).fold(Poly::one(self.m, k), |acc, i| acc.shift_z(i, -1))
    }
}

/// `G` with `F = z₁⋯z_ρ·G`; every monomial of F must contain each of `z₁..z_ρ`.
pub fn divide_by_coords(f: &Poly, rho: usize) -> Result<Poly> {
    if rho > f.m() {
        return Err(Error::OutOfRange(format!("ρ = {rho} exceeds m = {}", f.m())));
    }
    if !f.is_holomorphic() {
        return Err(Error::OutOfRange("dividend is not basic".into()));
    }
    for mono in f.terms().keys() {
        if mono.z.iter().any(|&e| e < 0) || mono.z[..rho].iter().any(|&e| e == 0) {
            return Err(Error::NotDivisible(mono.to_string()));
        }
    }
    Ok((0..rho).fold(f.clone(), |g, i| g.shift_z(i, -1)))
}

fn require_closed(f: &ZForm) -> Result<()> {
    let df = f.d();
    if df.is_zero() {
        Ok(())
    } else {
        Err(Error::NotClosed(df.magnitude()))
    }
}

fn require_polynomial_basic(f: &ZForm) -> Result<()> {
    if !f.is_holomorphic() {
        return Err(Error::OutOfRange("form is not basic".into()));
    }
    if !f.is_polynomial() {
        return Err(Error::OutOfRange("form has poles".into()));
    }
    Ok(())
}

/// The homotopy operator applied without a closedness check; `dH + Hd = id` in degrees ≥ 1.
pub fn homotopy_operator(f: &ZForm) -> Result<ZForm> {
    require_polynomial_basic(f)?;
    Ok(f.homotopy())
}

/// Primitive g of a closed basic p-form f (p ≥ 1) with `dg = f`.
pub fn poincare_homotopy(f: &ZForm) -> Result<ZForm> {
    if f.degree() == 0 {
        return Err(Error::OutOfRange("homotopy needs degree ≥ 1".into()));
    }
    require_polynomial_basic(f)?;
    require_closed(f)?;
    Ok(f.homotopy())
}

/// Logarithmic p-form in the generator basis `dz₁/z₁, …, dz_a/z_a, dz_{a+1}, …, dz_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogPForm {
    divisor: NCHypersurface,
    k: usize,
    p: usize,
    coeffs: BTreeMap<Vec<usize>, Poly>,
}

impl LogPForm {
    pub fn zero(divisor: NCHypersurface, k: usize, p: usize) -> Self {
        LogPForm { divisor, k, p, coeffs: BTreeMap::new() }
    }

    /// Builds a log form from generator-basis coefficients; each must be a basic polynomial.
    pub fn from_terms(divisor: NCHypersurface, k: usize, p: usize, terms: Vec<(Vec<usize>, Poly)>) -> Result<Self> {
        let probe = ZForm::from_terms(divisor.m, k, p, terms.clone())?;
        require_polynomial_basic(&probe)?;
        let mut out = LogPForm::zero(divisor, k, p);
        for (idx, c) in probe.coeffs() {
            out.coeffs.insert(idx.clone(), c.clone());
        }
        Ok(out)
    }

    /// The generator `dz_i/z_i` (i < a) or `dz_i`.
    pub fn generator(divisor: NCHypersurface, k: usize, i: usize) -> Self {
        let mut out = LogPForm::zero(divisor, k, 1);
        out.coeffs.insert(vec![i], Poly::one(divisor.m, k));
        out
    }

    pub fn divisor(&self) -> NCHypersurface {
        self.divisor
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<usize>, Poly> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Expands generators back into `Σ f_P dz_P` with Laurent coefficients.
    pub fn to_form(&self) -> ZForm {
        let m = self.divisor.m;
        let mut out = ZForm::zero(m, self.k, self.p);
        for (idx, c) in &self.coeffs {
            let f = idx.iter().filter(|&&i| i < self.divisor.a).fold(c.clone(), |g, &i| g.shift_z(i, -1));
            out.add_term(idx.clone(), f);
        }
        out
    }

    pub fn add(&self, other: &LogPForm) -> LogPForm {
        assert!(self.divisor == other.divisor && self.p == other.p && self.k == other.k, "log forms of different type");
        let mut out = self.clone();
        for (idx, c) in &other.coeffs {
            let sum = match out.coeffs.remove(idx) {
                Some(old) => old.add(c),
                None => c.clone(),
            };
            if !sum.is_zero() {
                out.coeffs.insert(idx.clone(), sum);
            }
        }
        out
    }

    pub fn neg(&self) -> LogPForm {
        let mut out = self.clone();
        out.coeffs.values_mut().for_each(|c| *c = c.neg());
        out
    }

    pub fn sub(&self, other: &LogPForm) -> LogPForm {
        self.add(&other.neg())
    }

    pub fn wedge(&self, other: &LogPForm) -> LogPForm {
        assert!(self.divisor == other.divisor && self.k == other.k, "log forms of different type");
        let mut out = LogPForm::zero(self.divisor, self.k, self.p + other.p);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let Some(sign) = crate::exterior::shuffle_sign(a, b) else { continue };
                let prod = ca.mul(cb);
                let term = LogPForm {
                    divisor: self.divisor,
                    k: self.k,
                    p: out.p,
                    coeffs: BTreeMap::from([(crate::exterior::merge(a, b), if sign < 0.0 { prod.neg() } else { prod })]),
                };
                out = out.add(&term);
            }
        }
        out
    }

    /// Exterior derivative; log forms are closed under d.
    pub fn d(&self) -> LogPForm {
        log_membership(&self.to_form().d(), &self.divisor).expect("d preserves logarithmic forms")
    }

    /// Whether every coefficient is constant.
    pub fn is_constant(&self) -> bool {
        self.coeffs.values().all(Poly::is_constant)
    }
}

impl std::fmt::Display for LogPForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let a = self.divisor.a;
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(idx, c)| {
                let gens: Vec<String> = idx
                    .iter()
                    .map(|&i| if i < a { format!("(dz{0}/z{0})", i + 1) } else { format!("dz{}", i + 1) })
                    .collect();
                if gens.is_empty() {
                    format!("({c})")
                } else {
                    format!("({c})*{}", gens.join("^"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Tests `F·f` and `F·df` for regularity and returns the generator expansion of f.
pub fn log_membership(f: &ZForm, divisor: &NCHypersurface) -> Result<LogPForm> {
    if f.m() != divisor.m {
        return Err(Error::Shape("form and hypersurface live on different charts".into()));
    }
    if !f.is_holomorphic() {
        return Err(Error::NotLogarithmic("coefficients are not basic".into()));
    }
    for (idx, c) in f.coeffs() {
        for i in divisor.a..divisor.m {
            if c.min_z_exponent(i) < 0 {
                return Err(Error::NotLogarithmic(format!("pole along z{} off D in the dz{idx:?} coefficient", i + 1)));
            }
        }
    }
    let inv_free = divisor.defining_function(f.k());
    if !f.mul_poly(&inv_free).is_polynomial() {
        return Err(Error::NotLogarithmic("F·f is not regular".into()));
    }
    if !f.d().mul_poly(&inv_free).is_polynomial() {
        return Err(Error::NotLogarithmic("F·df is not regular".into()));
    }
    let mut out = LogPForm::zero(*divisor, f.k(), f.degree());
    for (idx, c) in f.coeffs() {
        let coeff = idx.iter().filter(|&&i| i < divisor.a).fold(c.clone(), |g, &i| g.shift_z(i, 1));
        if !coeff.is_polynomial() {
            return Err(Error::MalformedExpansion(format!("generator coefficient {coeff} of {idx:?} has a pole")));
        }
        out.coeffs.insert(idx.clone(), coeff);
    }
    Ok(out)
}

/// Splits `f = (dz_a/z_a)∧f′ + f″` with f′ free of z_a and of `dz_a/z_a`.
pub fn log_decompose(f: &LogPForm, a: usize) -> Result<(LogPForm, LogPForm)> {
    if a >= f.divisor.a {
        return Err(Error::OutOfRange(format!("z{} is not a component of D", a + 1)));
    }
    if f.p == 0 {
        return Ok((LogPForm::zero(f.divisor, f.k, 0), f.clone()));
    }
    let mut h = LogPForm::zero(f.divisor, f.k, f.p - 1);
    let mut rest = LogPForm::zero(f.divisor, f.k, f.p);
    for (idx, c) in &f.coeffs {
        match idx.iter().position(|&i| i == a) {
            Some(pos) => {
                let mut sub = idx.clone();
                sub.remove(pos);
                h.coeffs.insert(sub, if pos % 2 == 1 { c.neg() } else { c.clone() });
            }
            None => {
                rest.coeffs.insert(idx.clone(), c.clone());
            }
        }
    }
    let mut f1 = LogPForm::zero(f.divisor, f.k, f.p - 1);
    let mut tail = LogPForm::zero(f.divisor, f.k, f.p - 1);
    for (idx, c) in &h.coeffs {
        let c0 = c.eval_z_zero(a)?;
        let diff = c.sub(&c0);
        if !c0.is_zero() {
            f1.coeffs.insert(idx.clone(), c0);
        }
        if !diff.is_zero() {
            tail.coeffs.insert(idx.clone(), diff);
        }
    }
    let f2 = rest.add(&LogPForm::generator(f.divisor, f.k, a).wedge(&tail));
    Ok((f1, f2))
}

/// Residue along a smooth D = {z₁ = 0}, as a basic form in `z₂..z_m`.
pub fn residue(f: &LogPForm) -> Result<ZForm> {
    if !f.divisor.is_smooth() {
        return Err(Error::OutOfRange("residue needs a smooth hypersurface (a = 1)".into()));
    }
    if f.p == 0 {
        return Ok(ZForm::zero(f.divisor.m - 1, f.k, 0));
    }
    let (f1, _) = log_decompose(f, 0)?;
    f1.to_form().remove_var(0)
}

/// `(dz₁/z₁)∧target` with target lifted constant in z₁; its residue is the target.
pub fn extend_from_d(target: &ZForm, divisor: &NCHypersurface) -> Result<LogPForm> {
    if !divisor.is_smooth() {
        return Err(Error::OutOfRange("extension needs a smooth hypersurface (a = 1)".into()));
    }
    if target.m() + 1 != divisor.m {
        return Err(Error::Shape(format!("target has {} variables, D has {}", target.m(), divisor.m - 1)));
    }
    require_polynomial_basic(target)?;
    let lift = target.insert_var(0);
    let lift = LogPForm { divisor: *divisor, k: target.k(), p: target.degree(), coeffs: lift.coeffs().clone() };
    Ok(LogPForm::generator(*divisor, target.k(), 0).wedge(&lift))
}

/// Top-degree log form multiplied by F, tagged with the divisor it is twisted by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistedForm {
    pub form: ZForm,
    pub divisor: NCHypersurface,
}

/// `f ↦ F·f ⊗ σ` on top-degree log forms.
pub fn twist_sd(f: &ZForm, divisor: &NCHypersurface) -> Result<TwistedForm> {
    if f.degree() != divisor.m {
        return Err(Error::OutOfRange(format!("twist needs top degree {}, got {}", divisor.m, f.degree())));
    }
    log_membership(f, divisor)?;
    Ok(TwistedForm { form: f.mul_poly(&divisor.defining_function(f.k())), divisor: *divisor })
}

/// Inverse of [`twist_sd`].
pub fn untwist_sd(g: &TwistedForm) -> Result<LogPForm> {
    if g.form.degree() != g.divisor.m {
        return Err(Error::OutOfRange("untwist needs a top-degree form".into()));
    }
    if !g.form.is_holomorphic() || !g.form.is_polynomial() {
        return Err(Error::NotDivisible("twisted form is not a regular basic form".into()));
    }
    log_membership(&g.form.mul_poly(&g.divisor.inverse_defining_function(g.form.k())), &g.divisor)
}

/// `f = constants + d(primitive)` with constants in the exterior algebra of the log generators.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub constants: LogPForm,
    /// None in degree 0.
    pub primitive: Option<LogPForm>,
}

impl Reduction {
    /// Number of nonzero constant coefficients.
    pub fn rank(&self) -> usize {
        self.constants.coeffs.len()
    }
}

type Constants = BTreeMap<Vec<usize>, Cq>;

/// Peels components `a−1, …, 0` off a closed form with poles only along `z_0..z_{a−1}`.
fn reduce_level(f: &ZForm, a: usize) -> Result<(Constants, Option<ZForm>)> {
    let (m, k, p) = (f.m(), f.k(), f.degree());
    if p == 0 {
        let c = f.coeff(&[]);
        if !c.is_constant() {
            return Err(Error::NotClosed(c.magnitude()));
        }
        let mut consts = Constants::new();
        if !c.is_zero() {
            consts.insert(vec![], c.constant_term());
        }
        return Ok((consts, None));
    }
    if a == 0 {
        return Ok((Constants::new(), Some(f.homotopy())));
    }
    let level = NCHypersurface::new(a, m)?;
    let lf = log_membership(f, &level)?;
    let (f1, f2) = log_decompose(&lf, a - 1)?;
    let (c1, pr1) = reduce_level(&f1.to_form(), a - 1)?;
    let (mut consts, pr2) = reduce_level(&f2.to_form(), a - 1)?;
    for (s, c) in c1 {
        let (idx, neg) = insert_sign(a - 1, &s).expect("index below a − 1");
        let c = if neg { -c } else { c };
        let sum = consts.remove(&idx).map_or(c.clone(), |old| old + c);
        if !sum.is_zero() {
            consts.insert(idx, sum);
        }
    }
    let gen = ZForm::dz(m, k, a - 1).mul_poly(&Poly::z_pow(m, k, a - 1, -1));
    let mut prim = pr2.unwrap_or_else(|| ZForm::zero(m, k, p - 1));
    if let Some(pr1) = pr1 {
        prim = prim.sub(&gen.wedge(&pr1));
    }
    Ok((consts, Some(prim)))
}

/// Reduces a closed log form to constant coefficients modulo d of a log form.
pub fn reduce_to_constants(f: &LogPForm) -> Result<Reduction> {
    let form = f.to_form();
    require_closed(&form)?;
    let (consts, prim) = reduce_level(&form, f.divisor.a)?;
    let mut constants = LogPForm::zero(f.divisor, f.k, f.p);
    for (idx, c) in consts {
        constants.coeffs.insert(idx, Poly::constant(f.divisor.m, f.k, c));
    }
    let primitive = prim.map(|g| log_membership(&g, &f.divisor)).transpose()?;
    let recomposed = match &primitive {
        Some(g) => constants.add(&g.d()),
        None => constants.clone(),
    };
    if recomposed != *f {
        return Err(Error::MalformedExpansion("constants plus d(primitive) does not recover the input".into()));
    }
    Ok(Reduction { constants, primitive })
}

/// Random holomorphic polynomial with small integer coefficients and total z degree ≤ `max_deg`.
pub fn random_poly(m: usize, k: usize, max_deg: u32, terms: usize, rng: &mut impl Rng) -> Poly {
    let mut out = Poly::zero(m, k);
    for _ in 0..terms {
        let mut mono = Monomial::one(m, k);
        let mut budget = rng.gen_range(0..=max_deg);
        while budget > 0 {
            mono.z[rng.gen_range(0..m)] += 1;
            budget -= 1;
        }
        let c = cq_int(rng.gen_range(-3..=3), rng.gen_range(-3..=3));
        out = out.add(&Poly::term(m, k, mono, c));
    }
    out
}

/// Random polynomial log p-form along `divisor`.
pub fn random_log_form(divisor: &NCHypersurface, k: usize, p: usize, max_deg: u32, rng: &mut impl Rng) -> LogPForm {
    let mut out = LogPForm::zero(*divisor, k, p);
    for idx in crate::exterior::multi_indices(divisor.m, p) {
        let c = random_poly(divisor.m, k, max_deg, 2, rng);
        if !c.is_zero() {
            out.coeffs.insert(idx, c);
        }
    }
    out
}

/// Random polynomial basic p-form.
pub fn random_basic_form(m: usize, k: usize, p: usize, max_deg: u32, rng: &mut impl Rng) -> ZForm {
    let terms = crate::exterior::multi_indices(m, p).into_iter().map(|idx| (idx, random_poly(m, k, max_deg, 2, rng))).collect();
    ZForm::from_terms(m, k, p, terms).expect("valid indices")
}

/// Exact rational number as `Cq`.
pub fn cq_rat(n: i64, d: i64) -> Cq {
    cq(rat(n, d), Q::zero())
}

/// The constant `1`.
pub fn cq_one() -> Cq {
    Cq::one()
}
