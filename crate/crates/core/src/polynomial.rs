//! Exact multivariate polynomials over a fixed, ordered parameter set.
//!
//! Coefficients are arbitrary-precision rationals. Terms are kept in a
//! canonical graded-lexicographic order, so two polynomials are equal iff
//! their term maps are equal. Parsing lives in [`crate::textio`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used for coefficients and rewards.
pub type Rational = BigRational;

/// Converts a rational to the nearest double.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Builds the rational `num / den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("polynomials are defined over different parameter sets")]
    ParameterSetMismatch,
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter index {0} is out of range")]
    ParameterIndex(usize),
    #[error("duplicate parameter name `{0}`")]
    DuplicateParameter(String),
    #[error("instantiation has {got} values but {expected} parameters are declared")]
    MissingAssignment { expected: usize, got: usize },
}

/// Ordered set of distinct parameter names. The position of a name is the
/// parameter's index everywhere else in the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl ParameterSet {
    pub fn new<I, S>(names: I) -> Result<Arc<Self>, PolyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = ParameterSet {
            names: Vec::new(),
            index: HashMap::new(),
        };
        for name in names {
            let name = name.into();
            if out.index.contains_key(&name) {
                return Err(PolyError::DuplicateParameter(name));
            }
            out.index.insert(name.clone(), out.names.len());
            out.names.push(name);
        }
        Ok(Arc::new(out))
    }

    pub fn empty() -> Arc<Self> {
        Arc::new(ParameterSet {
            names: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn lookup(&self, name: &str) -> Result<usize, PolyError> {
        self.index_of(name)
            .ok_or_else(|| PolyError::UnknownParameter(name.to_string()))
    }
}

/// A power product `p_i1^e1 * p_i2^e2 * ...`, stored sparsely as
/// `(parameter index, exponent)` pairs with strictly increasing indices and
/// positive exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(usize, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Monomial(vec![(i, 1)])
    }

    /// Builds a monomial from arbitrary `(index, exponent)` pairs, merging
    /// repeated indices and dropping zero exponents.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut acc: BTreeMap<usize, u32> = BTreeMap::new();
        for (i, e) in pairs {
            *acc.entry(i).or_insert(0) += e;
        }
        Monomial(acc.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, i: usize) -> u32 {
        self.0.iter().find(|&&(v, _)| v == i).map_or(0, |&(_, e)| e)
    }

    pub fn factors(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// `d/dp_i` of the monomial as `(factor, monomial)`, or `None` if the
    /// monomial does not contain `p_i`.
    pub fn derivative(&self, i: usize) -> Option<(u32, Monomial)> {
        let pos = self.0.iter().position(|&(v, _)| v == i)?;
        let e = self.0[pos].1;
        let mut out = self.0.clone();
        if e == 1 {
            out.remove(pos);
        } else {
            out[pos].1 = e - 1;
        }
        Some((e, Monomial(out)))
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.0.iter().fold(1.0, |acc, &(i, e)| acc * powu(u[i], e))
    }

    fn eval_exact(&self, u: &[Rational]) -> Rational {
        let mut acc = Rational::one();
        for &(i, e) in &self.0 {
            for _ in 0..e {
                acc *= &u[i];
            }
        }
        acc
    }

    /// Lexicographic comparison of the dense exponent vectors, with the
    /// first parameter most significant.
    fn lex_cmp(&self, other: &Monomial) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        for k in 0..a.len().min(b.len()) {
            let (va, ea) = a[k];
            let (vb, eb) = b[k];
            if va != vb {
                // The side holding the smaller index has a positive exponent
                // where the other side has zero.
                return if va < vb {
                    Ordering::Greater
                } else {
                    Ordering::Less
                };
            }
            if ea != eb {
                return ea.cmp(&eb);
            }
        }
        a.len().cmp(&b.len())
    }
}

impl Ord for Monomial {
    /// Graded lexicographic order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.lex_cmp(other))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn powu(x: f64, e: u32) -> f64 {
    match e {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(e as i32),
    }
}

/// Canonical polynomial with rational coefficients. The zero polynomial has
/// no terms; no stored coefficient is ever zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    params: Arc<ParameterSet>,
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero(params: &Arc<ParameterSet>) -> Self {
        Polynomial {
            params: params.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(params: &Arc<ParameterSet>) -> Self {
        Self::constant(params, Rational::one())
    }

    pub fn constant(params: &Arc<ParameterSet>, c: Rational) -> Self {
        let mut p = Self::zero(params);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn var(params: &Arc<ParameterSet>, i: usize) -> Result<Self, PolyError> {
        if i >= params.len() {
            return Err(PolyError::ParameterIndex(i));
        }
        let mut p = Self::zero(params);
        p.terms.insert(Monomial::var(i), Rational::one());
        Ok(p)
    }

    pub fn var_named(params: &Arc<ParameterSet>, name: &str) -> Result<Self, PolyError> {
        Self::var(params, params.lookup(name)?)
    }

    /// Builds a polynomial from raw terms, merging equal monomials and
    /// dropping zero coefficients.
    pub fn from_terms<I>(params: &Arc<ParameterSet>, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut p = Self::zero(params);
        for (m, c) in terms {
            if let Some(&(i, _)) = m.0.iter().find(|&&(i, _)| i >= params.len()) {
                return Err(PolyError::ParameterIndex(i));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn params(&self) -> &Arc<ParameterSet> {
        &self.params
    }

    fn check_same(&self, other: &Polynomial) -> Result<(), PolyError> {
        if Arc::ptr_eq(&self.params, &other.params) || self.params == other.params {
            Ok(())
        } else {
            Err(PolyError::ParameterSetMismatch)
        }
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_same(other)?;
        let mut out = Self::zero(&self.params);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            params: self.params.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Polynomial {
        if k.is_zero() {
            return Self::zero(&self.params);
        }
        Polynomial {
            params: self.params.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    /// Symbolic partial derivative with respect to parameter `i`.
    pub fn derivative(&self, i: usize) -> Result<Polynomial, PolyError> {
        if i >= self.params.len() {
            return Err(PolyError::ParameterIndex(i));
        }
        let mut out = Self::zero(&self.params);
        for (m, c) in &self.terms {
            if let Some((e, dm)) = m.derivative(i) {
                out.add_term(dm, c * Rational::from_integer(BigInt::from(e)));
            }
        }
        Ok(out)
    }

    pub fn derivative_named(&self, name: &str) -> Result<Polynomial, PolyError> {
        self.derivative(self.params.lookup(name)?)
    }

    /// Floating-point evaluation; `u` holds one value per declared parameter.
    pub fn eval(&self, u: &[f64]) -> Result<f64, PolyError> {
        self.check_len(u.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| rational_to_f64(c) * m.eval(u))
            .sum())
    }

    /// Exact evaluation over the rationals.
    pub fn eval_exact(&self, u: &[Rational]) -> Result<Rational, PolyError> {
        self.check_len(u.len())?;
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            acc += c * m.eval_exact(u);
        }
        Ok(acc)
    }

    fn check_len(&self, got: usize) -> Result<(), PolyError> {
        if got == self.params.len() {
            Ok(())
        } else {
            Err(PolyError::MissingAssignment {
                expected: self.params.len(),
                got,
            })
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// The constant value, if the polynomial has no parametric terms.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.exponent(i) > 0)
    }

    /// Indices of all parameters occurring in the polynomial.
    pub fn variables(&self) -> BTreeSet<usize> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|&(i, _)| i))
            .collect()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending canonical order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// Lowers the polynomial to a double-precision form for repeated evaluation.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (rational_to_f64(c), m.clone()))
                .collect(),
        }
    }
}

/// Double-precision snapshot of a [`Polynomial`] for hot evaluation loops.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPoly {
    terms: Vec<(f64, Monomial)>,
}

impl CompiledPoly {
    /// Evaluates without length checks; `u` must cover every parameter index.
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.terms.iter().map(|(c, m)| c * m.eval(u)).sum()
    }
}

fn fmt_rational(f: &mut fmt::Formatter<'_>, r: &Rational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Polynomial {
    /// Writes the polynomial in the model grammar: highest-order term first,
    /// powers as repeated products, fractions as `n/d` literals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let mag = c.abs();
            if k == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut first = true;
            if !mag.is_one() || m.is_one() {
                fmt_rational(f, &mag)?;
                first = false;
            }
            for &(i, e) in m.factors() {
                for _ in 0..e {
                    if !first {
                        write!(f, "*")?;
                    }
                    write!(f, "{}", self.params.name(i))?;
                    first = false;
                }
            }
        }
        Ok(())
    }
}
