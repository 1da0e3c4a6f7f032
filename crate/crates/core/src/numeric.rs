//! Configurable-precision real arithmetic and truncated-Taylor jets.
//!
//! `Real` is an arbitrary-precision binary float; every value in a run is
//! created at the precision of one [`PrecisionContext`] and binary operations
//! preserve it, so results carry at least `digits` significant decimal
//! digits. A [`Jet`] holds the Taylor coefficients of a function at a point
//! and is the source of all derivative values in the method engines.

use std::fmt::Write as _;

use rug::float::Round;
use rug::ops::{CompleteRound, Pow};
use rug::Float;
use thiserror::Error;

/// Arbitrary-precision real number (sign, mantissa, exponent).
pub type Real = Float;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericError {
    #[error("jet division by zero (constant coefficient of divisor is zero)")]
    JetDivisionByZero,
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("jet truncation orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
}

/// Precision context: decimal significant digits, round-to-nearest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionContext {
    digits: u32,
    prec_bits: u32,
}

/// Smallest precision the evaluation contracts are stated for.
pub const MIN_DIGITS: u32 = 32;

impl PrecisionContext {
    /// A context carrying at least `ceil(digits * log2(10))` mantissa bits.
    ///
    /// `digits` below 32 are not supported.
    pub fn new(digits: u32) -> Self {
        assert!(digits >= MIN_DIGITS, "precision below {MIN_DIGITS} digits");
        // log2(10) = 3.3219...; +2 guard bits
        let bits = ((digits as f64) * std::f64::consts::LOG2_10).ceil() as u32 + 2;
        PrecisionContext { digits, prec_bits: bits }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn prec_bits(&self) -> u32 {
        self.prec_bits
    }

    pub fn real_from_i64(&self, v: i64) -> Real {
        Float::with_val(self.prec_bits, v)
    }

    pub fn real_from_f64(&self, v: f64) -> Real {
        Float::with_val(self.prec_bits, v)
    }

    /// Parses a decimal string at full context precision.
    pub fn real_from_str(&self, s: &str) -> Result<Real, rug::float::ParseFloatError> {
        Ok(Float::with_val(self.prec_bits, Float::parse(s)?))
    }

    /// 10^e at context precision.
    pub fn pow10(&self, e: i32) -> Real {
        Float::with_val(self.prec_bits, 10).pow(e)
    }

    /// Context with the same rounding and `factor` times the digits.
    pub fn scaled(&self, factor: u32) -> PrecisionContext {
        PrecisionContext::new(self.digits * factor)
    }
}

/// Decimal rendering with `digits` significant digits, plain or exponent
/// form depending on magnitude (mirrors `{:e}` for extreme exponents).
pub fn format_real(x: &Real, digits: u32) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() { "-inf".into() } else { "inf".into() };
    }
    if x.is_zero() {
        return "0".to_string();
    }
    let (sign, mantissa, exp) = to_decimal_parts(x, digits);
    let mut out = String::new();
    if sign {
        out.push('-');
    }
    // exp is the position of the decimal point relative to mantissa start
    if exp > 0 && (exp as usize) <= digits as usize + 4 {
        if (exp as usize) >= mantissa.len() {
            out.push_str(&mantissa);
            for _ in 0..(exp as usize - mantissa.len()) {
                out.push('0');
            }
        } else {
            out.push_str(&mantissa[..exp as usize]);
            out.push('.');
            out.push_str(&mantissa[exp as usize..]);
        }
    } else if exp <= 0 && exp > -6 {
        out.push_str("0.");
        for _ in 0..(-exp) {
            out.push('0');
        }
        out.push_str(&mantissa);
    } else {
        out.push_str(&mantissa[..1]);
        if mantissa.len() > 1 {
            out.push('.');
            out.push_str(&mantissa[1..]);
        }
        let _ = write!(out, "e{}", exp - 1);
    }
    out
}

fn to_decimal_parts(x: &Real, digits: u32) -> (bool, String, i32) {
    let (s, exp) = x.to_string_radix_round(10, Some(digits as usize), Round::Nearest);
    let sign = s.starts_with('-');
    let mantissa: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
    let mantissa = mantissa.trim_end_matches('0');
    let mantissa = if mantissa.is_empty() { "0" } else { mantissa };
    (sign, mantissa.to_string(), exp.unwrap_or(1) as i32)
}

/// Truncated Taylor coefficient sequence of a function at a point.
///
/// `coeffs[j]` is the j-th Taylor coefficient (so `f^(j) = coeffs[j] * j!`).
/// The truncation order is fixed at construction and preserved by all
/// arithmetic.
#[derive(Debug, Clone)]
pub struct Jet {
    coeffs: Vec<Real>,
    ctx: PrecisionContext,
}

impl Jet {
    /// Jet of the constant function `c`: (c, 0, ..., 0).
    pub fn constant(c: Real, order: usize, ctx: PrecisionContext) -> Jet {
        let mut coeffs = vec![Float::with_val(ctx.prec_bits(), 0); order + 1];
        coeffs[0] = c;
        Jet { coeffs, ctx }
    }

    /// Jet of the identity function at `x`: (x, 1, 0, ..., 0).
    pub fn identity(x: Real, order: usize, ctx: PrecisionContext) -> Jet {
        let mut j = Jet::constant(x, order, ctx);
        if order >= 1 {
            j.coeffs[1] = ctx.real_from_i64(1);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> &Real {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[Real] {
        &self.coeffs
    }

    pub fn ctx(&self) -> PrecisionContext {
        self.ctx
    }

    /// Value of the underlying function at the expansion point.
    pub fn value(&self) -> &Real {
        &self.coeffs[0]
    }

    fn check_order(&self, other: &Jet) -> Result<(), NumericError> {
        if self.order() != other.order() {
            return Err(NumericError::OrderMismatch(self.order(), other.order()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet, NumericError> {
        self.check_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a + b).complete(self.ctx.prec_bits()))
            .collect();
        Ok(Jet { coeffs, ctx: self.ctx })
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet, NumericError> {
        self.check_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).complete(self.ctx.prec_bits()))
            .collect();
        Ok(Jet { coeffs, ctx: self.ctx })
    }

    pub fn neg(&self) -> Jet {
        let coeffs = self.coeffs.iter().map(|a| (-a).complete(self.ctx.prec_bits())).collect();
        Jet { coeffs, ctx: self.ctx }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Jet) -> Result<Jet, NumericError> {
        self.check_order(other)?;
        let n = self.coeffs.len();
        let prec = self.ctx.prec_bits();
        let mut coeffs = vec![Float::with_val(prec, 0); n];
        for j in 0..n {
            let mut acc = Float::with_val(prec, 0);
            for i in 0..=j {
                acc += (&self.coeffs[i] * &other.coeffs[j - i]).complete(prec);
            }
            coeffs[j] = acc;
        }
        Ok(Jet { coeffs, ctx: self.ctx })
    }

    /// Forward-substitution division.
    pub fn div(&self, other: &Jet) -> Result<Jet, NumericError> {
        self.check_order(other)?;
        if other.coeffs[0].is_zero() {
            return Err(NumericError::JetDivisionByZero);
        }
        let n = self.coeffs.len();
        let prec = self.ctx.prec_bits();
        let mut q: Vec<Real> = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc = self.coeffs[j].clone();
            for i in 1..=j {
                acc -= (&other.coeffs[i] * &q[j - i]).complete(prec);
            }
            q.push(acc / &other.coeffs[0]);
        }
        Ok(Jet { coeffs: q, ctx: self.ctx })
    }

    pub fn add_real(&self, r: &Real) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] = (&out.coeffs[0] + r).complete(self.ctx.prec_bits());
        out
    }

    pub fn scale(&self, r: &Real) -> Jet {
        let prec = self.ctx.prec_bits();
        let coeffs = self.coeffs.iter().map(|c| (c * r).complete(prec)).collect();
        Jet { coeffs, ctx: self.ctx }
    }

    /// Integer power by repeated squaring; negative exponents go through the
    /// reciprocal (constant coefficient must be nonzero).
    pub fn powi(&self, e: i64) -> Result<Jet, NumericError> {
        if e < 0 {
            let one = Jet::constant(self.ctx.real_from_i64(1), self.order(), self.ctx);
            let inv = one.div(self)?;
            return inv.powi(-e);
        }
        let mut result = Jet::constant(self.ctx.real_from_i64(1), self.order(), self.ctx);
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Derivative values (f, f', ..., f^(k)) recovered from the coefficients.
    pub fn derivative_values(&self) -> Vec<Real> {
        let prec = self.ctx.prec_bits();
        let mut fact = Float::with_val(prec, 1);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if j > 1 {
                    fact *= j as u64;
                }
                (c * &fact).complete(prec)
            })
            .collect()
    }

    pub fn exp(&self) -> Jet {
        let n = self.coeffs.len();
        let prec = self.ctx.prec_bits();
        let mut e: Vec<Real> = Vec::with_capacity(n);
        e.push(self.coeffs[0].clone().exp());
        for j in 1..n {
            let mut acc = Float::with_val(prec, 0);
            for i in 1..=j {
                acc += (&self.coeffs[i] * &e[j - i]).complete(prec) * i as u64;
            }
            e.push(acc / j as u64);
        }
        Jet { coeffs: e, ctx: self.ctx }
    }

    pub fn log(&self) -> Result<Jet, NumericError> {
        if !(self.coeffs[0].clone() > 0) {
            return Err(NumericError::Domain("log of non-positive argument"));
        }
        let n = self.coeffs.len();
        let prec = self.ctx.prec_bits();
        let mut l: Vec<Real> = Vec::with_capacity(n);
        l.push(self.coeffs[0].clone().ln());
        for j in 1..n {
            let mut acc = (self.coeffs[j].clone() * j as u64).complete(prec);
            for i in 1..j {
                acc -= (&l[i] * &self.coeffs[j - i]).complete(prec) * i as u64;
            }
            l.push(acc / &self.coeffs[0] / j as u64);
        }
        Ok(Jet { coeffs: l, ctx: self.ctx })
    }

    pub fn sqrt(&self) -> Result<Jet, NumericError> {
        if self.coeffs[0].is_sign_negative() && !self.coeffs[0].is_zero() {
            return Err(NumericError::Domain("sqrt of negative argument"));
        }
        if self.coeffs[0].is_zero() {
            return Err(NumericError::Domain("sqrt at zero is not differentiable"));
        }
        let n = self.coeffs.len();
        let prec = self.ctx.prec_bits();
        let mut r: Vec<Real> = Vec::with_capacity(n);
        r.push(self.coeffs[0].clone().sqrt());
        for j in 1..n {
            let mut acc = self.coeffs[j].clone();
            for i in 1..j {
                acc -= (&r[i] * &r[j - i]).complete(prec);
            }
            let two_r0 = (&r[0] * 2u64).complete(prec);
            r.push(acc / two_r0);
        }
        Ok(Jet { coeffs: r, ctx: self.ctx })
    }

    fn sin_cos_pair(&self) -> (Jet, Jet) {
        let n = self.coeffs.len();
        let prec = self.ctx.prec_bits();
        let (s0, c0) = self.coeffs[0].clone().sin_cos(Float::new(prec));
        let mut s: Vec<Real> = vec![s0];
        let mut c: Vec<Real> = vec![c0];
        for j in 1..n {
            let mut sa = Float::with_val(prec, 0);
            let mut ca = Float::with_val(prec, 0);
            for i in 1..=j {
                let ai = (&self.coeffs[i] * i as u64).complete(prec);
                sa += (&ai * &c[j - i]).complete(prec);
                ca -= (&ai * &s[j - i]).complete(prec);
            }
            s.push(sa / j as u64);
            c.push(ca / j as u64);
        }
        (Jet { coeffs: s, ctx: self.ctx }, Jet { coeffs: c, ctx: self.ctx })
    }

    pub fn sin(&self) -> Jet {
        self.sin_cos_pair().0
    }

    pub fn cos(&self) -> Jet {
        self.sin_cos_pair().1
    }

    pub fn tan(&self) -> Result<Jet, NumericError> {
        let (s, c) = self.sin_cos_pair();
        if c.coeffs[0].is_zero() {
            return Err(NumericError::Domain("tan at a pole"));
        }
        s.div(&c)
    }

    fn sinh_cosh_pair(&self) -> (Jet, Jet) {
        let n = self.coeffs.len();
        let prec = self.ctx.prec_bits();
        let (s0, c0) = self.coeffs[0].clone().sinh_cosh(Float::new(prec));
        let mut s: Vec<Real> = vec![s0];
        let mut c: Vec<Real> = vec![c0];
        for j in 1..n {
            let mut sa = Float::with_val(prec, 0);
            let mut ca = Float::with_val(prec, 0);
            for i in 1..=j {
                let ai = (&self.coeffs[i] * i as u64).complete(prec);
                sa += (&ai * &c[j - i]).complete(prec);
                ca += (&ai * &s[j - i]).complete(prec);
            }
            s.push(sa / j as u64);
            c.push(ca / j as u64);
        }
        (Jet { coeffs: s, ctx: self.ctx }, Jet { coeffs: c, ctx: self.ctx })
    }

    pub fn sinh(&self) -> Jet {
        self.sinh_cosh_pair().0
    }

    pub fn cosh(&self) -> Jet {
        self.sinh_cosh_pair().1
    }

    /// atan via g' * (1 + a^2) = a'.
    pub fn atan(&self) -> Result<Jet, NumericError> {
        let n = self.coeffs.len();
        let prec = self.ctx.prec_bits();
        let mut g: Vec<Real> = vec![self.coeffs[0].clone().atan()];
        if n == 1 {
            return Ok(Jet { coeffs: g, ctx: self.ctx });
        }
        let a2 = self.mul(self)?;
        let mut u = a2.coeffs;
        u[0] += 1u64;
        // q = derivative jet of g; p = derivative jet of a
        let mut q: Vec<Real> = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let mut acc = (&self.coeffs[i + 1] * (i as u64 + 1)).complete(prec);
            for k in 1..=i {
                acc -= (&u[k] * &q[i - k]).complete(prec);
            }
            q.push(acc / &u[0]);
        }
        for (i, qi) in q.into_iter().enumerate() {
            g.push(qi / (i as u64 + 1));
        }
        Ok(Jet { coeffs: g, ctx: self.ctx })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx64() -> PrecisionContext {
        PrecisionContext::new(64)
    }

    fn assert_close(a: &Real, b: &Real, tol_exp: i32, ctx: PrecisionContext) {
        let diff = (a - b).complete(ctx.prec_bits()).abs();
        let tol = ctx.pow10(tol_exp);
        assert!(diff < tol, "difference {} exceeds 1e{}", diff, tol_exp);
    }

    #[test]
    fn identity_jet_square_minus_two() {
        // (x^2 - 2) at 1.5, order 2 -> (0.25, 3, 1)
        let ctx = ctx64();
        let x = Jet::identity(ctx.real_from_f64(1.5), 2, ctx);
        let sq = x.mul(&x).unwrap();
        let f = sq.add_real(&ctx.real_from_i64(-2));
        assert_close(f.coeff(0), &ctx.real_from_f64(0.25), -60, ctx);
        assert_close(f.coeff(1), &ctx.real_from_i64(3), -60, ctx);
        assert_close(f.coeff(2), &ctx.real_from_i64(1), -60, ctx);
    }

    #[test]
    fn self_division_is_one() {
        let ctx = ctx64();
        let mut a = Jet::identity(ctx.real_from_f64(0.7), 4, ctx);
        a = a.exp().add_real(&ctx.real_from_i64(2));
        let q = a.div(&a).unwrap();
        assert_close(q.coeff(0), &ctx.real_from_i64(1), -60, ctx);
        for j in 1..=4 {
            assert_close(q.coeff(j), &ctx.real_from_i64(0), -60, ctx);
        }
    }

    #[test]
    fn short_product() {
        // (1 + t)(1 - t) truncated at order 1 -> (1, 0)
        let ctx = ctx64();
        let mut a = Jet::constant(ctx.real_from_i64(1), 1, ctx);
        a.coeffs[1] = ctx.real_from_i64(1);
        let mut b = Jet::constant(ctx.real_from_i64(1), 1, ctx);
        b.coeffs[1] = ctx.real_from_i64(-1);
        let p = a.mul(&b).unwrap();
        assert_close(p.coeff(0), &ctx.real_from_i64(1), -60, ctx);
        assert_close(p.coeff(1), &ctx.real_from_i64(0), -60, ctx);
    }

    #[test]
    fn division_by_zero_jet() {
        let ctx = ctx64();
        let a = Jet::identity(ctx.real_from_i64(1), 2, ctx);
        let b = Jet::identity(ctx.real_from_i64(0), 2, ctx);
        assert_eq!(a.div(&b).unwrap_err(), NumericError::JetDivisionByZero);
    }

    #[test]
    fn exp_series_at_zero() {
        let ctx = ctx64();
        let x = Jet::identity(ctx.real_from_i64(0), 3, ctx);
        let e = x.exp();
        assert_close(e.coeff(0), &ctx.real_from_i64(1), -60, ctx);
        assert_close(e.coeff(1), &ctx.real_from_i64(1), -60, ctx);
        assert_close(e.coeff(2), &ctx.real_from_f64(0.5), -60, ctx);
        let sixth = ctx.real_from_i64(1) / ctx.real_from_i64(6);
        assert_close(e.coeff(3), &sixth, -60, ctx);
    }

    #[test]
    fn log_inverts_exp() {
        let ctx = ctx64();
        let mut a = Jet::identity(ctx.real_from_f64(0.37), 5, ctx);
        a.coeffs[3] = ctx.real_from_f64(-2.25);
        let back = a.exp().log().unwrap();
        for j in 0..=5 {
            assert_close(back.coeff(j), a.coeff(j), -58, ctx);
        }
    }

    #[test]
    fn pythagorean_identity() {
        let ctx = ctx64();
        let mut a = Jet::identity(ctx.real_from_f64(1.1), 4, ctx);
        a.coeffs[2] = ctx.real_from_f64(0.4);
        let (s, c) = a.sin_cos_pair();
        let id = s.mul(&s).unwrap().add(&c.mul(&c).unwrap()).unwrap();
        assert_close(id.coeff(0), &ctx.real_from_i64(1), -58, ctx);
        for j in 1..=4 {
            assert_close(id.coeff(j), &ctx.real_from_i64(0), -58, ctx);
        }
    }

    #[test]
    fn tan_matches_sin_over_cos_derivative() {
        // tan'(x) = 1 + tan(x)^2 at order 1
        let ctx = ctx64();
        let a = Jet::identity(ctx.real_from_f64(0.3), 1, ctx);
        let t = a.tan().unwrap();
        let expect = ctx.real_from_i64(1) + t.coeff(0).clone().square();
        assert_close(t.coeff(1), &expect, -58, ctx);
    }

    #[test]
    fn atan_derivative() {
        let ctx = ctx64();
        let a = Jet::identity(ctx.real_from_f64(0.5), 2, ctx);
        let g = a.atan().unwrap();
        let expect = ctx.real_from_i64(1) / ctx.real_from_f64(1.25);
        assert_close(g.coeff(1), &expect, -58, ctx);
        // second coefficient: atan''(x)/2 = -x/(1+x^2)^2
        let expect2 = ctx.real_from_f64(-0.5) / ctx.real_from_f64(1.25 * 1.25);
        assert_close(g.coeff(2), &expect2, -58, ctx);
    }

    #[test]
    fn sinh_cosh_identity() {
        let ctx = ctx64();
        let a = Jet::identity(ctx.real_from_f64(0.8), 3, ctx);
        let (s, c) = a.sinh_cosh_pair();
        let id = c.mul(&c).unwrap().sub(&s.mul(&s).unwrap()).unwrap();
        assert_close(id.coeff(0), &ctx.real_from_i64(1), -58, ctx);
        for j in 1..=3 {
            assert_close(id.coeff(j), &ctx.real_from_i64(0), -58, ctx);
        }
    }

    #[test]
    fn negative_power_through_reciprocal() {
        let ctx = ctx64();
        let a = Jet::identity(ctx.real_from_f64(2.0), 2, ctx);
        let p = a.powi(-2).unwrap();
        assert_close(p.coeff(0), &ctx.real_from_f64(0.25), -58, ctx);
        assert_close(p.coeff(1), &ctx.real_from_f64(-0.25), -58, ctx);
    }

    #[test]
    fn precision_scaling_sanity() {
        // doubling digits changes a composite result by less than 1e-62
        let lo = PrecisionContext::new(64);
        let hi = PrecisionContext::new(128);
        let f = |ctx: PrecisionContext| {
            let x = Jet::identity(ctx.real_from_f64(0.6), 3, ctx);
            let v = x.exp().mul(&x.sin()).unwrap().sqrt().unwrap();
            v.coeff(3).clone()
        };
        let a = f(lo);
        let b = f(hi);
        let diff = (&a - &b).complete(hi.prec_bits()).abs();
        assert!(diff < hi.pow10(-62));
    }

    #[test]
    fn format_real_shapes() {
        let ctx = ctx64();
        assert_eq!(format_real(&ctx.real_from_f64(0.25), 10), "0.25");
        assert_eq!(format_real(&ctx.real_from_i64(3), 10), "3");
        assert_eq!(format_real(&ctx.real_from_i64(0), 10), "0");
        let tiny = ctx.pow10(-40);
        assert_eq!(format_real(&tiny, 4), "1e-40");
        let sqrt2 = ctx.real_from_i64(2).sqrt();
        assert_eq!(format_real(&sqrt2, 10), "1.414213562");
    }

    #[test]
    #[should_panic(expected = "precision below")]
    fn context_rejects_low_precision() {
        let _ = PrecisionContext::new(16);
    }
}
