//! Exact rational arithmetic and multivariate polynomial algebra.
//!
//! Everything here is exact: coefficients are arbitrary-precision rationals,
//! polynomials are kept in a canonical form so that equality is structural,
//! and the formal differentiation operator and power-series inversion used by
//! the method generators never round.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational coefficient. Always reduced, denominator positive.
pub type Rational = num_rational::BigRational;

/// Convenience constructor for small rationals.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Convenience constructor for small integers.
pub fn int(num: i64) -> Rational {
    Rational::from_integer(BigInt::from(num))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    /// `series_inverse` requires a series with constant term 1.
    #[error("series is not normalized: constant term must be 1")]
    NotNormalized,
    /// Evaluation hit a variable missing from the assignment.
    #[error("unbound variable {0} in evaluation")]
    UnboundVariable(VarId),
    /// The formal derivative is only defined over derivative symbols.
    #[error("formal derivative is only defined for d-variables, found {0}")]
    NonDerivativeVariable(VarId),
}

/// Variable family. `D` carries derivative symbols d_j = f^(j)(x), `Y` the
/// transformed variables y_j, `Delta` the orbit increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    D,
    Y,
    Delta,
}

/// A named indexed variable such as `d3`, `y2` or `D1` (Delta_1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId {
    pub family: Family,
    pub index: u32,
}

impl VarId {
    pub const fn d(index: u32) -> Self {
        VarId { family: Family::D, index }
    }
    pub const fn y(index: u32) -> Self {
        VarId { family: Family::Y, index }
    }
    pub const fn delta(index: u32) -> Self {
        VarId { family: Family::Delta, index }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::D => write!(f, "d{}", self.index),
            Family::Y => write!(f, "y{}", self.index),
            Family::Delta => write!(f, "D{}", self.index),
        }
    }
}

/// Exponent multi-index: sorted `(variable, exponent)` pairs, exponents > 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(VarId, u32)>) -> Self {
        pairs.retain(|&(_, e)| e > 0);
        pairs.sort_by_key(|&(v, _)| v);
        // merge duplicates
        let mut out: Vec<(VarId, u32)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            match out.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => out.push((v, e)),
            }
        }
        Monomial(out)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.0
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn pairs(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut pairs = self.0.clone();
        pairs.extend_from_slice(&other.0);
        Monomial::from_pairs(pairs)
    }

    /// Divides out one power of `v`; caller guarantees it is present.
    fn without_one(&self, v: VarId) -> Monomial {
        let mut pairs = self.0.clone();
        for p in pairs.iter_mut() {
            if p.0 == v {
                p.1 -= 1;
            }
        }
        Monomial::from_pairs(pairs)
    }

    /// Strips every power of `v`.
    fn without_var(&self, v: VarId) -> Monomial {
        Monomial(self.0.iter().copied().filter(|&(w, _)| w != v).collect())
    }
}

/// Canonical term order: graded, ties broken by comparing exponents of the
/// highest variable downwards (smaller exponent first). This makes `y1 < y2`
/// and `D1^2 < D0*D2`, matching the display order of the generated forms.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut a = self.0.iter().rev();
        let mut b = other.0.iter().rev();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(&(va, ea)), Some(&(vb, eb))) => {
                    // Higher variable id means the monomial is "later".
                    match va.cmp(&vb) {
                        Ordering::Less => return Ordering::Less,
                        Ordering::Greater => return Ordering::Greater,
                        Ordering::Equal => match ea.cmp(&eb) {
                            Ordering::Equal => continue,
                            ord => return ord,
                        },
                    }
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial with rational coefficients in canonical
/// form: no zero coefficients, terms ordered by the canonical term order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = MultiPoly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn var(v: VarId) -> Self {
        let mut p = MultiPoly::zero();
        p.terms.insert(Monomial::var(v), Rational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// The constant term.
    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Some arbitrary-but-deterministic representation as a constant, if the
    /// polynomial is one.
    pub fn as_constant(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in self.terms.iter() {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (ma, ca) in self.terms.iter() {
            for (mb, cb) in other.terms.iter() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        let mut out = MultiPoly::zero();
        for (m, k) in self.terms.iter() {
            out.terms.insert(m.clone(), k * c);
        }
        out
    }

    pub fn mul_var(&self, v: VarId, e: u32) -> MultiPoly {
        let vm = Monomial::from_pairs(vec![(v, e)]);
        let mut out = MultiPoly::zero();
        for (m, c) in self.terms.iter() {
            out.terms.insert(m.mul(&vm), c.clone());
        }
        out
    }

    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut out = MultiPoly::constant(Rational::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: VarId) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// All variables appearing with nonzero exponent.
    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = Vec::new();
        for m in self.terms.keys() {
            for &(v, _) in m.pairs() {
                if !vs.contains(&v) {
                    vs.push(v);
                }
            }
        }
        vs.sort();
        vs
    }

    pub fn has_integer_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    /// Coefficient of `v^k`, as a polynomial in the remaining variables.
    pub fn coeff_of(&self, v: VarId, k: u32) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in self.terms.iter() {
            if m.exponent(v) == k {
                out.terms.insert(m.without_var(v), c.clone());
            }
        }
        out
    }

    /// Minimal exponent of `v` over all terms (the `v`-adic valuation).
    /// Returns `None` for the zero polynomial.
    pub fn valuation_in(&self, v: VarId) -> Option<u32> {
        self.terms.keys().map(|m| m.exponent(v)).min()
    }
}

/// Polynomial arithmetic entry point used by callers that hold an operator
/// tag instead of calling the methods directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Sub,
    Mul,
}

pub fn poly_arith(a: &MultiPoly, b: &MultiPoly, op: PolyOp) -> MultiPoly {
    match op {
        PolyOp::Add => a.add(b),
        PolyOp::Sub => a.sub(b),
        PolyOp::Mul => a.mul(b),
    }
}

/// The operator D with D(d_j) = d_{j+1}, extended by linearity and the
/// Leibniz rule. Rejects polynomials that mention non-derivative symbols.
pub fn formal_derivative(p: &MultiPoly) -> Result<MultiPoly, ExactError> {
    let mut out = MultiPoly::zero();
    for (m, c) in p.terms.iter() {
        for &(v, e) in m.pairs() {
            if v.family != Family::D {
                return Err(ExactError::NonDerivativeVariable(v));
            }
            let bumped = m.without_one(v).mul(&Monomial::var(VarId::d(v.index + 1)));
            out.add_term(bumped, c * int(e as i64));
        }
    }
    Ok(out)
}

/// Multiplicative inverse of a power series with polynomial coefficients.
///
/// Input `(c_0, ..., c_k)` with `c_0 = 1`; output `(b_0, ..., b_k)` with
/// `(sum c_i t^i)(sum b_i t^i) = 1 + O(t^{k+1})`.
pub fn series_inverse(s: &[MultiPoly], k: usize) -> Result<Vec<MultiPoly>, ExactError> {
    let one = MultiPoly::constant(Rational::one());
    if s.is_empty() || s[0] != one {
        return Err(ExactError::NotNormalized);
    }
    let coeff = |i: usize| -> MultiPoly {
        if i < s.len() {
            s[i].clone()
        } else {
            MultiPoly::zero()
        }
    };
    let mut b = vec![one];
    for m in 1..=k {
        let mut acc = MultiPoly::zero();
        for i in 1..=m {
            acc = acc.add(&coeff(i).mul(&b[m - i]));
        }
        b.push(acc.neg());
    }
    Ok(b)
}

/// Exact evaluation at a rational point.
pub fn poly_eval_exact(
    p: &MultiPoly,
    assignment: &BTreeMap<VarId, Rational>,
) -> Result<Rational, ExactError> {
    let mut total = Rational::zero();
    for (m, c) in p.terms.iter() {
        let mut term = c.clone();
        for &(v, e) in m.pairs() {
            let val = assignment
                .get(&v)
                .ok_or(ExactError::UnboundVariable(v))?;
            for _ in 0..e {
                term *= val;
            }
        }
        total += term;
    }
    Ok(total)
}

/// Unreduced rational function `num/den` over [`MultiPoly`]. Used for
/// schedule decompilation and symbolic divided differences; no gcd
/// simplification is ever attempted.
#[derive(Debug, Clone)]
pub struct RatFunc {
    pub num: MultiPoly,
    pub den: MultiPoly,
}

impl RatFunc {
    pub fn from_poly(p: MultiPoly) -> Self {
        RatFunc { num: p, den: MultiPoly::constant(Rational::one()) }
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        RatFunc {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        RatFunc {
            num: self.num.mul(&other.den).sub(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        RatFunc { num: self.num.mul(&other.num), den: self.den.mul(&other.den) }
    }

    pub fn div(&self, other: &RatFunc) -> RatFunc {
        RatFunc { num: self.num.mul(&other.den), den: self.den.mul(&other.num) }
    }

    pub fn scale(&self, c: &Rational) -> RatFunc {
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }
}

/// Decides `a/b = c/d` as rational functions: clears denominators and
/// compares polynomials; if the cross products differ structurally, falls
/// back to 20 exact evaluations at pseudo-random rational points away from
/// the denominators' zero sets.
pub fn ratfunc_eq(a: &RatFunc, b: &RatFunc) -> bool {
    let lhs = a.num.mul(&b.den);
    let rhs = b.num.mul(&a.den);
    if lhs == rhs {
        return true;
    }
    let diff = lhs.sub(&rhs);
    let mut vars = diff.vars();
    for v in a.den.vars().into_iter().chain(b.den.vars()) {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    vars.sort();
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        // splitmix64 step
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    };
    'outer: for _ in 0..20 {
        let mut assignment = BTreeMap::new();
        for &v in vars.iter() {
            let num = (next() % 2000) as i64 - 1000;
            let den = (next() % 50) as i64 + 1;
            assignment.insert(v, rat(num, den));
        }
        // denominators must not vanish at the sample point
        for d in [&a.den, &b.den] {
            if let Ok(v) = poly_eval_exact(d, &assignment) {
                if v.is_zero() {
                    continue 'outer;
                }
            }
        }
        match poly_eval_exact(&diff, &assignment) {
            Ok(v) if v.is_zero() => continue,
            _ => return false,
        }
    }
    true
}

fn fmt_coeff_magnitude(c: &Rational) -> String {
    let n = c.numer().abs();
    if c.is_integer() {
        n.to_string()
    } else {
        format!("{}/{}", n, c.denom())
    }
}

fn fmt_monomial(m: &Monomial) -> String {
    // y2 prints last inside a monomial (the pivot convention of the nested
    // forms); everything else ascends by (family, index).
    let y2 = VarId::y(2);
    let mut parts: Vec<String> = Vec::new();
    let mut y2_part: Option<String> = None;
    for &(v, e) in m.pairs() {
        let s = if e == 1 { v.to_string() } else { format!("{}^{}", v, e) };
        if v == y2 {
            y2_part = Some(s);
        } else {
            parts.push(s);
        }
    }
    if let Some(s) = y2_part {
        parts.push(s);
    }
    parts.join("*")
}

/// Deterministic text form: terms in canonical order, `num/den` coefficients,
/// `d3` / `y2` / `D1` variable spelling.
impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter() {
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = fmt_coeff_magnitude(c);
            if m.is_one() {
                write!(f, "{}", mag)?;
            } else if mag == "1" {
                write!(f, "{}", fmt_monomial(m))?;
            } else {
                write!(f, "{}*{}", mag, fmt_monomial(m))?;
            }
        }
        Ok(())
    }
}
