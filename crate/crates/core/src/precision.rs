//! Arbitrary-precision real arithmetic: constants, integer square roots,
//! trigonometric evaluation with exact-rational argument reduction modulo 2pi,
//! and precision budgeting.
//!
//! Arguments in this problem family arrive either as plain high-precision
//! reals or in the exact form (integer or rational) * sqrt(d) * pi. The
//! latter are reduced by computing frac(sqrt(d) * rational) in extended
//! precision and multiplying by the modulus afterwards, never by naive
//! floating subtraction; denominators up to ~1e15 would otherwise consume
//! the entire mantissa.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as IntSign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

/// Working floor: 33 significant digits plus one guard digit.
pub const MIN_DIGITS: u32 = 34;

/// Fractional bits that must survive argument reduction (34 decimal digits).
const REDUCTION_FRAC_BITS: usize = 113;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

fn bits_for_digits(digits: u32) -> usize {
    (digits as f64 * LOG2_10).ceil() as usize + 32
}

/// An arbitrary-precision real number. The semantic carrier for all time,
/// inverse-temperature, and series values in the toolkit.
#[derive(Clone)]
pub struct HPReal(pub(crate) BigFloat);

impl fmt::Debug for HPReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HPReal({})", self.0)
    }
}

impl fmt::Display for HPReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn op_prec(a: &BigFloat, b: &BigFloat) -> usize {
    a.mantissa_max_bit_len()
        .unwrap_or(0)
        .max(b.mantissa_max_bit_len().unwrap_or(0))
        .max(64)
}

impl HPReal {
    pub(crate) fn raw(&self) -> &BigFloat {
        &self.0
    }

    pub fn precision_bits(&self) -> usize {
        self.0.mantissa_max_bit_len().unwrap_or(0)
    }

    pub fn add(&self, rhs: &HPReal) -> HPReal {
        HPReal(self.0.add(&rhs.0, op_prec(&self.0, &rhs.0), RM))
    }

    pub fn sub(&self, rhs: &HPReal) -> HPReal {
        HPReal(self.0.sub(&rhs.0, op_prec(&self.0, &rhs.0), RM))
    }

    pub fn mul(&self, rhs: &HPReal) -> HPReal {
        HPReal(self.0.mul(&rhs.0, op_prec(&self.0, &rhs.0), RM))
    }

    pub fn div(&self, rhs: &HPReal) -> HPReal {
        HPReal(self.0.div(&rhs.0, op_prec(&self.0, &rhs.0), RM))
    }

    pub fn neg(&self) -> HPReal {
        HPReal(self.0.neg())
    }

    pub fn abs(&self) -> HPReal {
        let mut v = self.0.clone();
        v.set_sign(Sign::Pos);
        HPReal(v)
    }

    pub fn powi(&self, n: usize) -> HPReal {
        HPReal(self.0.powi(n, self.precision_bits().max(64), RM))
    }

    pub fn sqrt(&self) -> HPReal {
        HPReal(self.0.sqrt(self.precision_bits().max(64), RM))
    }

    pub fn floor(&self) -> HPReal {
        HPReal(self.0.floor())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive() && !self.0.is_zero()
    }

    /// Total order; NaN never appears in valid pipeline values.
    pub fn cmp(&self, rhs: &HPReal) -> std::cmp::Ordering {
        match self.0.cmp(&rhs.0) {
            Some(v) if v < 0 => std::cmp::Ordering::Less,
            Some(v) if v > 0 => std::cmp::Ordering::Greater,
            Some(_) => std::cmp::Ordering::Equal,
            None => panic!("NaN in HPReal comparison"),
        }
    }

    pub fn lt(&self, rhs: &HPReal) -> bool {
        self.cmp(rhs) == std::cmp::Ordering::Less
    }

    pub fn le(&self, rhs: &HPReal) -> bool {
        self.cmp(rhs) != std::cmp::Ordering::Greater
    }

    /// Nearest f64 (two top mantissa words).
    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        match self.0.as_raw_parts() {
            Some((words, _, sign, exp, _)) => {
                let nw = words.len();
                let top = words[nw - 1] as f64;
                let second = if nw >= 2 { words[nw - 2] as f64 } else { 0.0 };
                let mag = (top + second / 18446744073709551616.0)
                    * 2f64.powi(exp as i32 - 64);
                if sign == Sign::Neg {
                    -mag
                } else {
                    mag
                }
            }
            None => f64::NAN,
        }
    }

    /// Floor as an exact big integer.
    pub fn floor_to_bigint(&self) -> BigInt {
        let f = self.0.floor();
        if f.is_zero() {
            return BigInt::zero();
        }
        let (words, _, sign, exp, _) = f.as_raw_parts().expect("finite value");
        let nbits = words.len() * 64;
        let mut v = BigInt::from_bytes_le(
            IntSign::Plus,
            &words.iter().flat_map(|w| w.to_le_bytes()).collect::<Vec<_>>(),
        );
        // value = 0.mantissa * 2^exp with the mantissa occupying nbits bits
        let shift = exp as i64 - nbits as i64;
        if shift >= 0 {
            v <<= shift as usize;
        } else {
            v >>= (-shift) as usize;
        }
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }
}

/// Working decimal precision plus cached high-precision constants.
///
/// Immutable after construction except for the square-root cache, which is
/// guarded for concurrent read/insert. All operations are pure.
pub struct PrecisionContext {
    digits: u32,
    bits: usize,
    /// Extra bits carried by cached square roots so that multiplication by
    /// integer factors up to ~2^64 still leaves a full-width fraction.
    sqrt_bits: usize,
    pi: HPReal,
    two_pi: HPReal,
    sqrt_cache: RwLock<HashMap<u64, HPReal>>,
}

/// Builds a context with at least `digits` significant decimal digits.
/// Two contexts with equal `digits` produce bit-identical constants.
pub fn with_precision(digits: u32) -> Result<PrecisionContext> {
    if digits < MIN_DIGITS {
        return Err(Error::PrecisionConfig {
            requested: digits,
            minimum: MIN_DIGITS,
        });
    }
    let bits = bits_for_digits(digits);
    let pi = HPReal(with_consts(|cc| cc.pi(bits, RM)));
    let two = BigFloat::from_u64(2, bits);
    let two_pi = HPReal(pi.0.mul(&two, bits, RM));
    Ok(PrecisionContext {
        digits,
        bits,
        sqrt_bits: bits + 128,
        pi,
        two_pi,
        sqrt_cache: RwLock::new(HashMap::new()),
    })
}

/// Decimal digits needed to manipulate integers as large as `q_max`
/// alongside `target` significant fractional digits, plus two guard digits.
pub fn required_digits(q_max: &BigInt, target: u32) -> u32 {
    assert!(q_max.sign() != IntSign::Minus && !q_max.is_zero(), "q_max must be >= 1");
    assert!(target >= MIN_DIGITS, "target below the precision floor");
    let digits_q = q_max.to_string().len() as u32;
    digits_q + target + 2
}

impl PrecisionContext {
    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn pi(&self) -> &HPReal {
        &self.pi
    }

    pub fn two_pi(&self) -> &HPReal {
        &self.two_pi
    }

    pub fn zero(&self) -> HPReal {
        HPReal(BigFloat::new(self.bits))
    }

    pub fn one(&self) -> HPReal {
        HPReal(BigFloat::from_u64(1, self.bits))
    }

    pub fn from_u64(&self, v: u64) -> HPReal {
        HPReal(BigFloat::from_u64(v, self.bits))
    }

    pub fn from_i64(&self, v: i64) -> HPReal {
        HPReal(BigFloat::from_i64(v, self.bits))
    }

    pub fn from_f64(&self, v: f64) -> HPReal {
        HPReal(BigFloat::from_f64(v, self.bits))
    }

    pub fn from_bigint(&self, v: &BigInt) -> HPReal {
        self.bigint_at(v, self.bits)
    }

    fn bigint_at(&self, v: &BigInt, p: usize) -> HPReal {
        if v.is_zero() {
            return HPReal(BigFloat::new(p));
        }
        let (sign, mag) = (v.sign(), v.magnitude());
        let nbits = mag.bits() as usize;
        // normalize so the most significant bit sits at the top of a word
        let shift = (64 - nbits % 64) % 64;
        let shifted = mag << shift;
        let mut bytes = shifted.to_bytes_le();
        while bytes.len() % 8 != 0 {
            bytes.push(0);
        }
        let words: Vec<u64> = bytes
            .chunks(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let s = if sign == IntSign::Minus { Sign::Neg } else { Sign::Pos };
        let mut bf = BigFloat::from_words(&words, s, nbits as i32);
        bf.set_precision(p.max(words.len() * 64), RM).expect("widen");
        if p > bf.mantissa_max_bit_len().unwrap_or(0) {
            bf.set_precision(p, RM).expect("widen");
        }
        HPReal(bf)
    }

    pub fn from_ratio(&self, r: &BigRational) -> HPReal {
        self.ratio_at(r, self.bits)
    }

    fn ratio_at(&self, r: &BigRational, p: usize) -> HPReal {
        let num = self.bigint_at(r.numer(), p + 64);
        let den = self.bigint_at(r.denom(), p + 64);
        HPReal(num.0.div(&den.0, p, RM))
    }

    /// Parses an exact decimal or scientific literal.
    pub fn parse_decimal(&self, s: &str) -> Result<HPReal> {
        let v = with_consts(|cc| BigFloat::parse(s, Radix::Dec, self.bits, RM, cc));
        if v.is_nan() || v.is_inf() {
            return Err(Error::Parse(format!("not a finite decimal literal: {s:?}")));
        }
        Ok(HPReal(v))
    }

    /// Serializes with enough decimal digits that parsing recovers the value
    /// exactly at this context's precision.
    pub fn to_decimal_string(&self, x: &HPReal) -> String {
        // size from the actual mantissa length: precisions are rounded up to
        // whole words internally
        let bits = x.precision_bits().max(self.bits);
        let digits = (bits as f64 / LOG2_10).ceil() as usize + 2;
        self.to_decimal_sig(x, digits)
    }

    /// Fixed significant-digit scientific form, suitable for stable CSV output.
    pub fn to_decimal_sig(&self, x: &HPReal, sig: usize) -> String {
        if x.is_zero() {
            return "0".into();
        }
        // widen (exactly) so the radix conversion yields at least sig + 2
        // decimal digits before rounding
        let want_bits = (((sig + 2) as f64) * LOG2_10).ceil() as usize;
        let mut wide = x.0.clone();
        if wide.mantissa_max_bit_len().unwrap_or(0) < want_bits + 64 {
            wide.set_precision(want_bits + 64, RM).expect("widen");
        }
        let (sign, mut digits, mut exp) = with_consts(|cc| {
            wide.convert_to_radix(Radix::Dec, RM, cc)
                .expect("finite value")
        });
        // round the digit string to `sig` digits
        if digits.len() > sig {
            let round_up = digits[sig] >= 5;
            digits.truncate(sig);
            if round_up {
                let mut i = sig;
                loop {
                    if i == 0 {
                        digits.insert(0, 1);
                        digits.truncate(sig);
                        exp += 1;
                        break;
                    }
                    i -= 1;
                    if digits[i] == 9 {
                        digits[i] = 0;
                    } else {
                        digits[i] += 1;
                        break;
                    }
                }
            }
        }
        while digits.len() > 1 && *digits.last().unwrap() == 0 {
            digits.pop();
        }
        let mut out = String::new();
        if sign == Sign::Neg {
            out.push('-');
        }
        out.push((b'0' + digits[0]) as char);
        if digits.len() > 1 {
            out.push('.');
            for d in &digits[1..] {
                out.push((b'0' + d) as char);
            }
        }
        // convert_to_radix exponent is for a leading "0." mantissa
        out.push('e');
        out.push_str(&(exp as i64 - 1).to_string());
        out
    }

    /// sqrt(n) correct to the context precision; exact for perfect squares.
    /// Computed once per `n` by integer Newton iteration on scaled integers
    /// and cached.
    pub fn sqrt_int(&self, n: u64) -> HPReal {
        if let Some(v) = self.sqrt_cache.read().unwrap().get(&n) {
            let mut out = v.clone();
            out.0.set_precision(self.bits, RM).expect("narrow");
            return out;
        }
        let v = self.sqrt_int_at(n, self.sqrt_bits);
        self.sqrt_cache.write().unwrap().insert(n, v.clone());
        let mut out = v;
        out.0.set_precision(self.bits, RM).expect("narrow");
        out
    }

    fn sqrt_int_at(&self, n: u64, p: usize) -> HPReal {
        let big = BigInt::from(n);
        let root = big.sqrt();
        if &root * &root == big {
            return self.bigint_at(&root, p);
        }
        let shift = p + 32;
        let scaled: BigInt = &big << (2 * shift);
        let isqrt = scaled.sqrt();
        let num = self.bigint_at(&isqrt, p + 64);
        let mut den = BigFloat::from_u64(1, p + 64);
        den.set_exponent(1 + shift as i32);
        HPReal(num.0.div(&den, p, RM))
    }

    fn sqrt_extended(&self, n: u64, p: usize) -> HPReal {
        if p <= self.sqrt_bits {
            if let Some(v) = self.sqrt_cache.read().unwrap().get(&n) {
                let mut out = v.clone();
                out.0.set_precision(p, RM).expect("narrow");
                return out;
            }
            let v = self.sqrt_int_at(n, self.sqrt_bits);
            self.sqrt_cache.write().unwrap().insert(n, v.clone());
            let mut out = v;
            out.0.set_precision(p, RM).expect("narrow");
            return out;
        }
        self.sqrt_int_at(n, p)
    }

    /// Reduces `x` into [0, 2pi). Errors when the magnitude of `x` leaves
    /// fewer than 34 significant fractional digits at this precision.
    pub fn reduce_mod_2pi(&self, x: &HPReal) -> Result<HPReal> {
        let xp = x.precision_bits().max(self.bits);
        let exp_bits = x.0.exponent().unwrap_or(0).max(0) as usize;
        if exp_bits + REDUCTION_FRAC_BITS > xp {
            return Err(Error::InsufficientPrecision {
                magnitude_digits: (exp_bits as f64 / LOG2_10).ceil() as u32,
                needed_digits: MIN_DIGITS,
                available_digits: (xp as f64 / LOG2_10) as u32,
            });
        }
        let pw = xp + exp_bits + 64;
        let two_pi = HPReal(with_consts(|cc| {
            let pi = cc.pi(pw, RM);
            pi.mul(&BigFloat::from_u64(2, pw), pw, RM)
        }));
        let mut r = HPReal(x.0.rem(&two_pi.0));
        if r.is_negative() {
            r = r.add(&two_pi);
        }
        if !r.lt(&two_pi) {
            r = r.sub(&two_pi);
        }
        r.0.set_precision(self.bits, RM).expect("narrow");
        Ok(r)
    }

    /// cos with internal reduction; result correct to >= 33 digits.
    pub fn cos(&self, x: &HPReal) -> Result<HPReal> {
        let r = self.reduce_mod_2pi(x)?;
        Ok(self.cos_reduced(&r))
    }

    pub fn sin(&self, x: &HPReal) -> Result<HPReal> {
        let r = self.reduce_mod_2pi(x)?;
        Ok(self.sin_reduced(&r))
    }

    pub fn cos_sin(&self, x: &HPReal) -> Result<(HPReal, HPReal)> {
        let r = self.reduce_mod_2pi(x)?;
        Ok((self.cos_reduced(&r), self.sin_reduced(&r)))
    }

    /// cos of an already-reduced argument (|x| <= 2pi assumed).
    pub fn cos_reduced(&self, x: &HPReal) -> HPReal {
        HPReal(with_consts(|cc| x.0.cos(self.bits, RM, cc)))
    }

    pub fn sin_reduced(&self, x: &HPReal) -> HPReal {
        HPReal(with_consts(|cc| x.0.sin(self.bits, RM, cc)))
    }

    pub fn exp(&self, x: &HPReal) -> HPReal {
        HPReal(with_consts(|cc| x.0.exp(self.bits, RM, cc)))
    }

    pub fn ln(&self, x: &HPReal) -> HPReal {
        HPReal(with_consts(|cc| x.0.ln(self.bits, RM, cc)))
    }

    pub fn acos(&self, x: &HPReal) -> HPReal {
        HPReal(with_consts(|cc| x.0.acos(self.bits, RM, cc)))
    }

    pub fn atan(&self, x: &HPReal) -> HPReal {
        HPReal(with_consts(|cc| x.0.atan(self.bits, RM, cc)))
    }

    /// Standard atan2 built from atan with quadrant fixes.
    pub fn atan2(&self, y: &HPReal, x: &HPReal) -> HPReal {
        if x.is_zero() && y.is_zero() {
            return self.zero();
        }
        if x.is_zero() {
            let half_pi = HPReal(self.pi.0.mul(&BigFloat::from_f64(0.5, self.bits), self.bits, RM));
            return if y.is_negative() { half_pi.neg() } else { half_pi };
        }
        let base = self.atan(&y.div(x));
        if x.is_negative() {
            if y.is_negative() {
                base.sub(&self.pi)
            } else {
                base.add(&self.pi)
            }
        } else {
            base
        }
    }

    /// (sqrt(d) * r) mod `modulus` for an exact rational `r` and integer
    /// modulus (1 or 2), carried out so the integer part is cancelled in
    /// extended precision. Exact when d is a perfect square.
    pub fn sqrt_mul_mod(&self, d: u64, r: &BigRational, modulus: u32) -> HPReal {
        assert!(modulus >= 1);
        let m = BigInt::from(modulus);
        let root = BigInt::from(d).sqrt();
        if &root * &root == BigInt::from(d) {
            // exact rational path
            let v = r * BigRational::from(root);
            let q = (v.numer() * &m).div_floor(&(v.denom() * &m * &m)) * &m;
            let rem = &v - BigRational::from_integer(q);
            return self.from_ratio(&rem);
        }
        let int_bits = (r.numer().bits() as i64 - r.denom().bits() as i64).max(0) as usize
            + (64 - d.leading_zeros() as usize) / 2
            + 8;
        let pw = self.bits + int_bits + 64;
        let sq = self.sqrt_extended(d, pw);
        let num = self.bigint_at(r.numer(), pw);
        let den = self.bigint_at(r.denom(), pw);
        let y = HPReal(sq.0.mul(&num.0, pw, RM).div(&den.0, pw, RM));
        let mbf = HPReal(BigFloat::from_u64(modulus as u64, pw));
        let mut rem = HPReal(y.0.rem(&mbf.0));
        if rem.is_negative() {
            rem = rem.add(&mbf);
        }
        rem.0.set_precision(self.bits, RM).expect("narrow");
        rem
    }

    /// cos(sqrt(d) * r * pi) via the exact decomposition above; returns
    /// exactly 1 when sqrt(d) * r is an even integer.
    pub fn cos_sqrt_rational_pi(&self, d: u64, r: &BigRational) -> HPReal {
        let m2 = self.sqrt_mul_mod(d, r, 2);
        if m2.is_zero() {
            return self.one();
        }
        let angle = m2.mul(&self.pi);
        self.cos_reduced(&angle)
    }

    /// sqrt(d) * r at extended precision, sized so a later reduction still
    /// leaves a full-width fraction.
    pub fn sqrt_mul_hp(&self, d: u64, r: &BigRational) -> Result<HPReal> {
        let int_bits = (r.numer().bits() as i64 - r.denom().bits() as i64).max(0) as usize
            + (64 - d.leading_zeros() as usize) / 2
            + 8;
        let pw = self.bits + int_bits + 64;
        let sq = self.sqrt_extended(d, pw);
        let num = self.bigint_at(r.numer(), pw);
        let den = self.bigint_at(r.denom(), pw);
        Ok(HPReal(sq.0.mul(&num.0, pw, RM).div(&den.0, pw, RM)))
    }

    /// (cos, sin) of sqrt(d) * r for exact rational r, reduced mod 2pi in
    /// extended precision before evaluation.
    pub fn cos_sin_sqrt_rational(&self, d: u64, r: &BigRational) -> Result<(HPReal, HPReal)> {
        let y = self.sqrt_mul_hp(d, r)?;
        self.cos_sin(&y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn ctx() -> PrecisionContext {
        with_precision(50).unwrap()
    }

    #[test]
    fn pi_matches_doubled_precision() {
        let c = ctx();
        let c2 = with_precision(100).unwrap();
        let diff = c.pi().sub(c2.pi()).abs();
        let bound = c.parse_decimal("1e-49").unwrap();
        assert!(diff.lt(&bound), "pi mismatch: {diff:?}");
        assert!(c.to_decimal_sig(c.pi(), 21).starts_with("3.14159265358979323846"));
    }

    #[test]
    fn minimal_and_invalid_precision() {
        assert!(with_precision(34).is_ok());
        assert!(matches!(
            with_precision(10),
            Err(Error::PrecisionConfig { requested: 10, .. })
        ));
    }

    #[test]
    fn determinism_across_contexts() {
        let a = with_precision(50).unwrap();
        let b = with_precision(50).unwrap();
        assert_eq!(a.to_decimal_string(a.pi()), b.to_decimal_string(b.pi()));
        assert_eq!(
            a.to_decimal_string(&a.sqrt_int(2)),
            b.to_decimal_string(&b.sqrt_int(2))
        );
    }

    #[test]
    fn sqrt_perfect_squares_exact() {
        let c = ctx();
        let two = c.from_u64(2);
        assert!(c.sqrt_int(4).sub(&two).is_zero());
        assert!(c.sqrt_int(0).is_zero());
    }

    #[test]
    fn sqrt_two_squares_back() {
        let c = ctx();
        let s = c.sqrt_int(2);
        let err = s.mul(&s).sub(&c.from_u64(2)).abs();
        let bound = c.parse_decimal("2e-49").unwrap();
        assert!(err.lt(&bound), "sqrt(2)^2 error {err:?}");
    }

    #[test]
    fn reduce_two_pi_to_zero() {
        let c = ctx();
        let r = c.reduce_mod_2pi(c.two_pi()).unwrap();
        let bound = c.parse_decimal("1e-45").unwrap();
        // lands at 0 or just below 2pi depending on rounding of the input
        let near_zero = r.abs().lt(&bound);
        let near_two_pi = c.two_pi().sub(&r).abs().lt(&bound);
        assert!(near_zero || near_two_pi);
    }

    #[test]
    fn reduce_seven() {
        let c = ctx();
        let r = c.reduce_mod_2pi(&c.from_u64(7)).unwrap();
        let expect = c.from_u64(7).sub(c.two_pi());
        assert!(r.sub(&expect).abs().lt(&c.parse_decimal("1e-45").unwrap()));
        assert!(c.to_decimal_sig(&r, 6).starts_with("7.1681"));
    }

    #[test]
    fn reduction_budget_enforced() {
        let c = ctx();
        // ~1e60 consumes the whole 50-digit mantissa
        let huge = c.parse_decimal("1e60").unwrap();
        assert!(matches!(
            c.reduce_mod_2pi(&huge),
            Err(Error::InsufficientPrecision { .. })
        ));
    }

    #[test]
    fn trig_basics() {
        let c = ctx();
        assert!(c.cos(&c.zero()).unwrap().sub(&c.one()).is_zero());
        let half_pi = c.pi().mul(&c.from_f64(0.5));
        let s = c.sin(&half_pi).unwrap();
        assert!(s.sub(&c.one()).abs().lt(&c.parse_decimal("1e-48").unwrap()));
    }

    #[test]
    fn near_integer_sqrt_multiples_of_pi() {
        // 1 - cos(2 sqrt(2) q pi) fixtures for the two leading convergent
        // denominators of sqrt(2)
        let c = ctx();
        let one = c.one();
        for (q, expect, tol) in [
            (33461u64, 2.204e-9, 0.5e-2),
            (80782u64, 3.781e-10, 0.5e-2),
        ] {
            let r = BigRational::from_integer(BigInt::from(2 * q));
            let cosv = c.cos_sqrt_rational_pi(2, &r);
            let got = one.sub(&cosv).to_f64();
            assert!(
                (got / expect - 1.0).abs() < tol,
                "q={q}: got {got:e}, expected {expect:e}"
            );
        }
    }

    #[test]
    fn exact_even_multiple_gives_exact_one() {
        let c = ctx();
        // sqrt(4) * 3 = 6 is even, cos = 1 exactly
        let r = BigRational::from_integer(BigInt::from(3));
        let v = c.cos_sqrt_rational_pi(4, &r);
        assert!(v.sub(&c.one()).is_zero());
    }

    #[test]
    fn required_digits_fixtures() {
        assert_eq!(
            required_digits(&BigInt::from(847718631141214u64), 34),
            15 + 34 + 2
        );
        assert_eq!(required_digits(&BigInt::one(), 34), 37);
        assert_eq!(required_digits(&BigInt::from(1_000_000u64), 34), 43);
        // the reference working figure: 15 integer digits + 33 fractional
        assert_eq!(
            required_digits(&BigInt::from(847718631141214u64), 34) - 1,
            50
        );
    }

    #[test]
    fn decimal_roundtrip_lossless() {
        let c = ctx();
        for s in ["3.5", "-0.0078125", "1.644", "123456789.25"] {
            let x = c.parse_decimal(s).unwrap();
            let ser = c.to_decimal_string(&x);
            let back = c.parse_decimal(&ser).unwrap();
            assert!(x.sub(&back).is_zero(), "roundtrip failed for {s}: {ser}");
        }
        let sq = c.sqrt_int(3);
        let back = c.parse_decimal(&c.to_decimal_string(&sq)).unwrap();
        assert!(sq.sub(&back).is_zero());
    }

    #[test]
    fn sig_digit_formatting() {
        let c = ctx();
        let x = c.parse_decimal("0.00012345678").unwrap();
        assert_eq!(c.to_decimal_sig(&x, 4), "1.235e-4");
        let y = c.parse_decimal("9.9999").unwrap();
        assert_eq!(c.to_decimal_sig(&y, 2), "1e1");
        let z = c.parse_decimal("-250").unwrap();
        assert_eq!(c.to_decimal_sig(&z, 3), "-2.5e2");
    }

    #[test]
    fn floor_to_bigint() {
        let c = ctx();
        let x = c.parse_decimal("123456789123456789.75").unwrap();
        assert_eq!(x.floor_to_bigint(), BigInt::from(123456789123456789u64));
        let y = c.parse_decimal("-2.5").unwrap();
        assert_eq!(y.floor_to_bigint(), BigInt::from(-3));
    }

    #[test]
    fn to_f64_roundtrip() {
        let c = ctx();
        for v in [0.0, 1.5, -3.25, 1e-12, 4e8] {
            assert_eq!(c.from_f64(v).to_f64(), v);
        }
    }
}
