//! Exact Laurent polynomials in z (with formal z̄ and t) and holomorphic differential forms over them.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;
/// Exact complex rational.
pub type Cq = Complex<BigRational>;

pub fn rat(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn cq(re: Q, im: Q) -> Cq {
    Complex::new(re, im)
}

pub fn cq_int(re: i64, im: i64) -> Cq {
    Complex::new(rat(re, 1), rat(im, 1))
}

/// Exponents of `z^α z̄^β t^γ`. Only z exponents may be negative.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub z: Vec<i32>,
    pub zbar: Vec<u32>,
    pub t: Vec<u32>,
}

impl Monomial {
    pub fn one(m: usize, k: usize) -> Self {
        Monomial { z: vec![0; m], zbar: vec![0; m], t: vec![0; k] }
    }

    pub fn z_degree(&self) -> i64 {
        self.z.iter().map(|&e| e as i64).sum()
    }

    pub fn is_holomorphic(&self) -> bool {
        self.zbar.iter().chain(&self.t).all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            z: self.z.iter().zip(&other.z).map(|(a, b)| a + b).collect(),
            zbar: self.zbar.iter().zip(&other.zbar).map(|(a, b)| a + b).collect(),
            t: self.t.iter().zip(&other.t).map(|(a, b)| a + b).collect(),
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut push = |name: String, e: i64| match e {
            0 => {}
            1 => parts.push(name),
            e => parts.push(format!("{name}^{e}")),
        };
        for (i, &e) in self.z.iter().enumerate() {
            push(format!("z{}", i + 1), e as i64);
        }
        for (i, &e) in self.zbar.iter().enumerate() {
            push(format!("zbar{}", i + 1), e as i64);
        }
        for (i, &e) in self.t.iter().enumerate() {
            push(format!("t{}", i + 1), e as i64);
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

fn fmt_rat(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Formats an exact complex number as `a`, `b*i` or `(a+b*i)`.
pub fn fmt_cq(c: &Cq) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => fmt_rat(&c.re),
        (true, false) => format!("{}*i", fmt_rat(&c.im)),
        (false, false) => {
            let sign = if c.im.is_negative() { "-" } else { "+" };
            format!("({}{}{}*i)", fmt_rat(&c.re), sign, fmt_rat(&c.im.abs()))
        }
    }
}

/// Finite sum of monomials with exact complex rational coefficients, in m complex and k real variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    m: usize,
    k: usize,
    terms: BTreeMap<Monomial, Cq>,
}

impl Poly {
    pub fn zero(m: usize, k: usize) -> Self {
        Poly { m, k, terms: BTreeMap::new() }
    }

    pub fn constant(m: usize, k: usize, c: Cq) -> Self {
        Self::term(m, k, Monomial::one(m, k), c)
    }

    pub fn one(m: usize, k: usize) -> Self {
        Self::constant(m, k, Cq::one())
    }

    pub fn term(m: usize, k: usize, mono: Monomial, c: Cq) -> Self {
        assert!(mono.z.len() == m && mono.zbar.len() == m && mono.t.len() == k, "monomial arity");
        let mut p = Poly::zero(m, k);
        if !c.is_zero() {
            p.terms.insert(mono, c);
        }
        p
    }

    /// `z_i^e`; negative e gives a pole.
    pub fn z_pow(m: usize, k: usize, i: usize, e: i32) -> Self {
        let mut mono = Monomial::one(m, k);
        mono.z[i] = e;
        Self::term(m, k, mono, Cq::one())
    }

    pub fn z(m: usize, k: usize, i: usize) -> Self {
        Self::z_pow(m, k, i, 1)
    }

    pub fn zbar(m: usize, k: usize, i: usize) -> Self {
        let mut mono = Monomial::one(m, k);
        mono.zbar[i] = 1;
        Self::term(m, k, mono, Cq::one())
    }

    pub fn t(m: usize, k: usize, i: usize) -> Self {
        let mut mono = Monomial::one(m, k);
        mono.t[i] = 1;
        Self::term(m, k, mono, Cq::one())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Cq> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the constant monomial.
    pub fn constant_term(&self) -> Cq {
        self.terms.get(&Monomial::one(self.m, self.k)).cloned().unwrap_or_else(Cq::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|mono| *mono == Monomial::one(self.m, self.k))
    }

    /// Free of z̄ and t.
    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(Monomial::is_holomorphic)
    }

    /// No negative z exponents.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|mono| mono.z.iter().all(|&e| e >= 0))
    }

    /// Smallest exponent of z_i over all terms (0 for the zero polynomial).
    pub fn min_z_exponent(&self, i: usize) -> i32 {
        self.terms.keys().map(|mono| mono.z[i]).min().unwrap_or(0).min(0)
    }

    fn insert(&mut self, mono: Monomial, c: Cq) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_same(&self, other: &Poly) {
        assert!(self.m == other.m && self.k == other.k, "polynomials over different variable sets");
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.check_same(other);
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.insert(mono.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Cq::one())
    }

    pub fn scale(&self, c: &Cq) -> Poly {
        let mut out = Poly::zero(self.m, self.k);
        for (mono, v) in &self.terms {
            out.insert(mono.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.check_same(other);
        let mut out = Poly::zero(self.m, self.k);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.insert(a.mul(b), ca * cb);
            }
        }
        out
    }

    /// Multiplies by `z_i^e`.
    pub fn shift_z(&self, i: usize, e: i32) -> Poly {
        let mut out = Poly::zero(self.m, self.k);
        for (mono, c) in &self.terms {
            let mut mono = mono.clone();
            mono.z[i] += e;
            out.insert(mono, c.clone());
        }
        out
    }

    /// `∂/∂z_i`, treating z̄ and t as independent.
    pub fn d_z(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.m, self.k);
        for (mono, c) in &self.terms {
            if mono.z[i] != 0 {
                let e = mono.z[i];
                let mut mono = mono.clone();
                mono.z[i] -= 1;
                out.insert(mono, c * Cq::new(rat(e as i64, 1), Q::zero()));
            }
        }
        out
    }

    /// Sets `z_i = 0`. Terms with negative powers of z_i are rejected.
    pub fn eval_z_zero(&self, i: usize) -> Result<Poly> {
        if self.min_z_exponent(i) < 0 {
            return Err(Error::OutOfRange(format!("z{} has a pole; cannot evaluate at 0", i + 1)));
        }
        let mut out = Poly::zero(self.m, self.k);
        for (mono, c) in &self.terms {
            if mono.z[i] == 0 && mono.zbar[i] == 0 {
                out.insert(mono.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Whether the polynomial involves z_i or z̄_i at all.
    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|mono| mono.z[i] != 0 || mono.zbar[i] != 0)
    }

    /// Drops complex variable i; the polynomial must not depend on it.
    pub fn remove_var(&self, i: usize) -> Result<Poly> {
        if self.depends_on(i) {
            return Err(Error::OutOfRange(format!("polynomial depends on z{}", i + 1)));
        }
        let mut out = Poly::zero(self.m - 1, self.k);
        for (mono, c) in &self.terms {
            let mut mono = mono.clone();
            mono.z.remove(i);
            mono.zbar.remove(i);
            out.insert(mono, c.clone());
        }
        Ok(out)
    }

    /// Inserts a new complex variable at position i.
    pub fn insert_var(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.m + 1, self.k);
        for (mono, c) in &self.terms {
            let mut mono = mono.clone();
            mono.z.insert(i, 0);
            mono.zbar.insert(i, 0);
            out.insert(mono, c.clone());
        }
        out
    }

    /// Multiplies each term by `1/(p + deg_z)`; the z degree plus p must be positive.
    fn homotopy_weight(&self, p: usize) -> Poly {
        let mut out = Poly::zero(self.m, self.k);
        for (mono, c) in &self.terms {
            let w = p as i64 + mono.z_degree();
            assert!(w > 0, "homotopy weight on a term of degree {}", mono.z_degree());
            out.insert(mono.clone(), c * Cq::new(rat(1, w), Q::zero()));
        }
        out
    }

    /// Largest |re| + |im| over the coefficients, as a float.
    pub fn magnitude(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.terms.values().map(|c| c.re.abs().to_f64().unwrap_or(f64::MAX) + c.im.abs().to_f64().unwrap_or(f64::MAX)).fold(0.0, f64::max)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(mono, c)| {
                let mono_s = mono.to_string();
                match (mono_s.as_str(), c == &Cq::one()) {
                    ("1", _) => fmt_cq(c),
                    (_, true) => mono_s,
                    _ => format!("{}*{}", fmt_cq(c), mono_s),
                }
            })
            .collect();
        write!(f, "{}", parts[0])?;
        for part in &parts[1..] {
            match part.strip_prefix('-') {
                Some(rest) => write!(f, " - {rest}")?,
                None => write!(f, " + {part}")?,
            }
        }
        Ok(())
    }
}

/// Sign of `dz_i ∧ dz_P` and the merged index, or None when i ∈ P.
pub fn insert_sign(i: usize, p: &[usize]) -> Option<(Vec<usize>, bool)> {
    if p.contains(&i) {
        return None;
    }
    let before = p.iter().filter(|&&j| j < i).count();
    let mut idx = p.to_vec();
    idx.insert(before, i);
    Some((idx, before % 2 == 1))
}

/// `Σ_P f_P dz_P` with increasing multi-indices P, coefficients Laurent polynomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZForm {
    m: usize,
    k: usize,
    p: usize,
    coeffs: BTreeMap<Vec<usize>, Poly>,
}

impl ZForm {
    pub fn zero(m: usize, k: usize, p: usize) -> Self {
        ZForm { m, k, p, coeffs: BTreeMap::new() }
    }

    pub fn scalar(f: Poly) -> Self {
        let mut out = ZForm::zero(f.m(), f.k(), 0);
        out.add_term(vec![], f);
        out
    }

    /// `dz_i`.
    pub fn dz(m: usize, k: usize, i: usize) -> Self {
        let mut out = ZForm::zero(m, k, 1);
        out.add_term(vec![i], Poly::one(m, k));
        out
    }

    /// Builds a form from `(P, f_P)` pairs; indices must be increasing and of length p.
    pub fn from_terms(m: usize, k: usize, p: usize, terms: Vec<(Vec<usize>, Poly)>) -> Result<Self> {
        let mut out = ZForm::zero(m, k, p);
        for (idx, f) in terms {
            if idx.len() != p || idx.windows(2).any(|w| w[0] >= w[1]) || idx.iter().any(|&i| i >= m) {
                return Err(Error::Shape(format!("bad multi-index {idx:?} for degree {p} in {m} variables")));
            }
            if f.m() != m || f.k() != k {
                return Err(Error::Shape("coefficient over a different variable set".into()));
            }
            out.add_term(idx, f);
        }
        Ok(out)
    }

    pub fn m(&self) -> usize {
        self.m
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

    pub fn coeff(&self, idx: &[usize]) -> Poly {
        self.coeffs.get(idx).cloned().unwrap_or_else(|| Poly::zero(self.m, self.k))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub(crate) fn add_term(&mut self, idx: Vec<usize>, f: Poly) {
        let sum = match self.coeffs.remove(&idx) {
            Some(old) => old.add(&f),
            None => f,
        };
        if !sum.is_zero() {
            self.coeffs.insert(idx, sum);
        }
    }

    fn check_same(&self, other: &ZForm) {
        assert!(self.m == other.m && self.k == other.k && self.p == other.p, "forms of different type");
    }

    pub fn add(&self, other: &ZForm) -> ZForm {
        self.check_same(other);
        let mut out = self.clone();
        for (idx, f) in &other.coeffs {
            out.add_term(idx.clone(), f.clone());
        }
        out
    }

    pub fn sub(&self, other: &ZForm) -> ZForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ZForm {
        self.map(|f| f.neg())
    }

    pub fn map(&self, g: impl Fn(&Poly) -> Poly) -> ZForm {
        let mut out = ZForm::zero(self.m, self.k, self.p);
        for (idx, f) in &self.coeffs {
            out.add_term(idx.clone(), g(f));
        }
        out
    }

    pub fn mul_poly(&self, g: &Poly) -> ZForm {
        self.map(|f| f.mul(g))
    }

    pub fn wedge(&self, other: &ZForm) -> ZForm {
        assert!(self.m == other.m && self.k == other.k, "forms over different variable sets");
        let mut out = ZForm::zero(self.m, self.k, self.p + other.p);
        for (a, fa) in &self.coeffs {
            for (b, fb) in &other.coeffs {
                let Some(sign) = crate::exterior::shuffle_sign(a, b) else { continue };
                let idx = crate::exterior::merge(a, b);
                let prod = fa.mul(fb);
                out.add_term(idx, if sign < 0.0 { prod.neg() } else { prod });
            }
        }
        out
    }

    /// Holomorphic exterior derivative `Σ ∂f_P/∂z_ρ dz_ρ ∧ dz_P`.
    pub fn d(&self) -> ZForm {
        let mut out = ZForm::zero(self.m, self.k, self.p + 1);
        for (idx, f) in &self.coeffs {
            for rho in 0..self.m {
                let Some((merged, neg)) = insert_sign(rho, idx) else { continue };
                let df = f.d_z(rho);
                out.add_term(merged, if neg { df.neg() } else { df });
            }
        }
        out
    }

    pub fn is_holomorphic(&self) -> bool {
        self.coeffs.values().all(Poly::is_holomorphic)
    }

    pub fn is_polynomial(&self) -> bool {
        self.coeffs.values().all(Poly::is_polynomial)
    }

    /// Contraction with the Euler field `Σ z_ρ ∂/∂z_ρ`.
    pub fn euler_contract(&self) -> ZForm {
        assert!(self.p > 0, "contraction of a 0-form");
        let mut out = ZForm::zero(self.m, self.k, self.p - 1);
        for (idx, f) in &self.coeffs {
            for (pos, &i) in idx.iter().enumerate() {
                let mut rest = idx.clone();
                rest.remove(pos);
                let g = f.shift_z(i, 1);
                out.add_term(rest, if pos % 2 == 1 { g.neg() } else { g });
            }
        }
        out
    }

    /// `ξ⌟Σ(∫₀¹θ^{p−1}f_P(θz)dθ)dz_P` on polynomial holomorphic data; zero on 0-forms.
    pub(crate) fn homotopy(&self) -> ZForm {
        if self.p == 0 {
            return ZForm::zero(self.m, self.k, 0);
        }
        self.map(|f| f.homotopy_weight(self.p)).euler_contract()
    }

    pub fn magnitude(&self) -> f64 {
        self.coeffs.values().map(Poly::magnitude).fold(0.0, f64::max)
    }

    pub fn remove_var(&self, i: usize) -> Result<ZForm> {
        let mut out = ZForm::zero(self.m - 1, self.k, self.p);
        for (idx, f) in &self.coeffs {
            if idx.contains(&i) {
                return Err(Error::OutOfRange(format!("form contains dz{}", i + 1)));
            }
            let shifted = idx.iter().map(|&j| if j > i { j - 1 } else { j }).collect();
            out.add_term(shifted, f.remove_var(i)?);
        }
        Ok(out)
    }

    pub fn insert_var(&self, i: usize) -> ZForm {
        let mut out = ZForm::zero(self.m + 1, self.k, self.p);
        for (idx, f) in &self.coeffs {
            let shifted = idx.iter().map(|&j| if j >= i { j + 1 } else { j }).collect();
            out.add_term(shifted, f.insert_var(i));
        }
        out
    }
}

impl fmt::Display for ZForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(idx, c)| {
                if idx.is_empty() {
                    format!("({c})")
                } else {
                    let d: Vec<String> = idx.iter().map(|i| format!("dz{}", i + 1)).collect();
                    format!("({c})*{}", d.join("^"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
