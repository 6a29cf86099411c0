//! Continued fractions of quadratic irrationals in exact integer arithmetic,
//! big-integer convergents with quality certificates, the pigeonhole
//! rational-approximation oracle, and construction of the candidate
//! denominator sets M (second order) and M-tilde (third order) used by the
//! near-zero sweeps at integer multiples of pi.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::precision::{required_digits, with_precision, HPReal, PrecisionContext};

/// (a + b sqrt(d)) / c in canonical reduced form: d not a perfect square,
/// b != 0, c > 0, gcd(a, b, c) = 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticIrrational {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: u64,
}

impl QuadraticIrrational {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: u64) -> Result<QuadraticIrrational> {
        if b.is_zero() {
            return Err(Error::RationalAlpha);
        }
        let root = BigInt::from(d).sqrt();
        if &root * &root == BigInt::from(d) {
            return Err(Error::RationalAlpha);
        }
        if c.is_zero() {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        let (a, b, c) = if c.is_negative() { (-a, -b, -c) } else { (a, b, c) };
        let g = a.gcd(&b).gcd(&c);
        Ok(QuadraticIrrational {
            a: &a / &g,
            b: &b / &g,
            c: &c / &g,
            d,
        })
    }

    /// sqrt(d) / k, the family the sweep candidates come from.
    pub fn sqrt_over(d: u64, k: u64) -> Result<QuadraticIrrational> {
        QuadraticIrrational::new(BigInt::zero(), BigInt::one(), BigInt::from(k), d)
    }

    pub fn value_hp(&self, ctx: &PrecisionContext) -> HPReal {
        ctx.from_bigint(&self.a)
            .add(&ctx.from_bigint(&self.b).mul(&ctx.sqrt_int(self.d)))
            .div(&ctx.from_bigint(&self.c))
    }

    pub fn label(&self) -> String {
        format!("({}+{}sqrt{})/{}", self.a, self.b, self.d, self.c)
    }
}

/// Exact sign of A + B sqrt(d) for rationals A, B.
fn sign_with_sqrt(a: &BigRational, b: &BigRational, d: u64) -> i32 {
    let sa = if a.is_zero() { 0 } else if a.is_positive() { 1 } else { -1 };
    let sb = if b.is_zero() { 0 } else if b.is_positive() { 1 } else { -1 };
    if sb == 0 {
        return sa;
    }
    if sa == 0 {
        return sb;
    }
    if sa == sb {
        return sa;
    }
    let lhs = a * a;
    let rhs = b * b * BigRational::from_integer(BigInt::from(d));
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => sa,
        std::cmp::Ordering::Less => sb,
        std::cmp::Ordering::Equal => 0,
    }
}

/// Partial quotients with period detection.
#[derive(Clone, Debug)]
pub struct ContinuedFraction {
    pub quotients: Vec<BigInt>,
    /// (preperiod length, period length) once a repeating state is seen.
    pub period: Option<(usize, usize)>,
}

/// Exact partial quotients of a quadratic surd via the integer algorithm;
/// no floating point is involved, so 15-digit denominators stay exact.
pub fn continued_fraction(alpha: &QuadraticIrrational, n_terms: usize) -> Result<ContinuedFraction> {
    if alpha.b.is_negative() {
        return Err(Error::InvalidParameter(
            "negative surd part unsupported for expansion".into(),
        ));
    }
    // normalize to (P + sqrt(N)) / Q with Q | (N - P^2)
    let mut p = alpha.a.clone();
    let mut n = &alpha.b * &alpha.b * BigInt::from(alpha.d);
    let mut q = alpha.c.clone();
    if (&n - &p * &p).mod_floor(&q) != BigInt::zero() {
        p = &p * &q;
        n = &n * &q * &q;
        q = &q * &q;
    }
    let isqrt_n = n.sqrt();
    let mut quotients = Vec::with_capacity(n_terms);
    let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
    let mut period = None;
    for i in 0..n_terms {
        if period.is_none() {
            if let Some(&start) = seen.get(&(p.clone(), q.clone())) {
                period = Some((start, i - start));
            } else {
                seen.insert((p.clone(), q.clone()), i);
            }
        }
        // a_i = floor((P + sqrt(N)) / Q)
        let num = &p + &isqrt_n;
        let ai = num.div_floor(&q);
        quotients.push(ai.clone());
        p = &ai * &q - &p;
        let num_q = &n - &p * &p;
        if num_q.is_zero() {
            return Err(Error::RationalAlpha);
        }
        q = num_q / &q;
    }
    Ok(ContinuedFraction { quotients, period })
}

/// One convergent p/q with its partial-quotient prefix.
#[derive(Clone, Debug)]
pub struct Convergent {
    pub index: usize,
    pub p: BigInt,
    pub q: BigInt,
    pub a_prefix: Vec<BigInt>,
}

/// Exact big-integer convergents for indices 0 ..= up_to_index.
pub fn convergents(alpha: &QuadraticIrrational, up_to_index: usize) -> Result<Vec<Convergent>> {
    let cf = continued_fraction(alpha, up_to_index + 1)?;
    let mut out = Vec::with_capacity(up_to_index + 1);
    let mut p_prev = BigInt::one();
    let mut q_prev = BigInt::zero();
    let mut p_cur = cf.quotients[0].clone();
    let mut q_cur = BigInt::one();
    out.push(Convergent {
        index: 0,
        p: p_cur.clone(),
        q: q_cur.clone(),
        a_prefix: cf.quotients[..1].to_vec(),
    });
    for (i, a) in cf.quotients.iter().enumerate().skip(1) {
        let p_next = a * &p_cur + &p_prev;
        let q_next = a * &q_cur + &q_prev;
        p_prev = std::mem::replace(&mut p_cur, p_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
        out.push(Convergent {
            index: i,
            p: p_cur.clone(),
            q: q_cur.clone(),
            a_prefix: cf.quotients[..=i].to_vec(),
        });
    }
    Ok(out)
}

/// Approximation-quality certificate of one convergent.
#[derive(Clone, Debug)]
pub struct Quality {
    pub err: HPReal,
    /// |alpha - p/q| < 1/q^2, decided by exact sign tests.
    pub passes_q2: bool,
    /// |alpha - p/q| <= 1/(a_{n+1} q^2), decided exactly.
    pub passes_next_quotient: bool,
}

pub fn quality(
    alpha: &QuadraticIrrational,
    conv: &Convergent,
    ctx: &PrecisionContext,
) -> Result<Quality> {
    // alpha - p/q = A + B sqrt(d) with A = (a q - p c)/(c q), B = b q/(c q)
    let cq = &alpha.c * &conv.q;
    let a_part = BigRational::new(&alpha.a * &conv.q - &conv.p * &alpha.c, cq.clone());
    let b_part = BigRational::new(&alpha.b * &conv.q, cq);
    let sgn = sign_with_sqrt(&a_part, &b_part, alpha.d);
    // |alpha - p/q| versus a rational bound, exact via shifted sign tests
    let cmp_abs_lt = |t: &BigRational, strict: bool| -> bool {
        let upper = sign_with_sqrt(&(&a_part - t), &b_part, alpha.d);
        let lower = sign_with_sqrt(&(&a_part + t), &b_part, alpha.d);
        if strict {
            if sgn >= 0 { upper < 0 } else { lower > 0 }
        } else if sgn >= 0 {
            upper <= 0
        } else {
            lower >= 0
        }
    };
    let q2 = BigRational::new(BigInt::one(), &conv.q * &conv.q);
    let passes_q2 = cmp_abs_lt(&q2, true);
    let cf = continued_fraction(alpha, conv.index + 2)?;
    let a_next = cf.quotients[conv.index + 1].clone();
    let bound = BigRational::new(BigInt::one(), &a_next * &conv.q * &conv.q);
    let passes_next_quotient = cmp_abs_lt(&bound, false);

    // decimal error at precision sized for the denominator
    let digits = required_digits(&conv.q.abs().max(BigInt::one()), 34).max(ctx.digits());
    let cw = with_precision(digits)?;
    let av = alpha.value_hp(&cw);
    let ratio = cw.from_bigint(&conv.p).div(&cw.from_bigint(&conv.q));
    let err = ctx.parse_decimal(&cw.to_decimal_string(&av.sub(&ratio).abs()))?;
    Ok(Quality {
        err,
        passes_q2,
        passes_next_quotient,
    })
}

/// Pigeonhole search: the least q in 1..Q with |alpha - p/q| <= 1/(qQ) for
/// p = round(q alpha); existence is guaranteed for Q > 1.
pub fn dirichlet_search(alpha: &HPReal, big_q: u64, ctx: &PrecisionContext) -> Result<(BigInt, BigInt)> {
    if big_q <= 1 {
        return Err(Error::InvalidParameter("Q must exceed 1".into()));
    }
    let half = ctx.from_f64(0.5);
    for q in 1..big_q {
        let qa = alpha.mul(&ctx.from_u64(q));
        let p = qa.add(&half).floor_to_bigint();
        let err = alpha.sub(&ctx.from_bigint(&p).div(&ctx.from_u64(q))).abs();
        let bound = ctx.one().div(&ctx.from_u64(q * big_q));
        if err.le(&bound) {
            let qb = BigInt::from(q);
            let g = p.gcd(&qb);
            if g.is_one() || p.is_zero() {
                return Ok((p, qb));
            }
            return Ok((&p / &g, &qb / &g));
        }
    }
    Err(Error::Domain(
        "pigeonhole search exhausted; alpha may not be finite".into(),
    ))
}

/// Half-width of the angular window that keeps 1 - cos within 4 epsilon.
pub fn delta_bound(epsilon: &HPReal, ctx: &PrecisionContext) -> Result<HPReal> {
    let half = ctx.from_f64(0.5);
    if !epsilon.is_positive() || !epsilon.le(&half) {
        return Err(Error::Domain(
            "epsilon must lie in (0, 1/2] for the arccos window".into(),
        ));
    }
    let four_eps = epsilon.mul(&ctx.from_u64(4));
    Ok(ctx.acos(&ctx.one().sub(&four_eps)).abs())
}

/// Default settings reproducing the published candidate family.
pub const DEFAULT_K_LIST: [u64; 4] = [1, 2, 3, 4];
pub const DEFAULT_MIN_INDEX: usize = 12;
pub const DEFAULT_DENOM_DIGIT_CAP: usize = 15;

/// Denominator set M: {0} plus every convergent denominator of sqrt(2)/k,
/// k in `k_list`, from `min_index` upward while the denominator keeps at
/// most `denominator_digit_cap` decimal digits.
pub fn build_candidate_set(
    k_list: &[u64],
    min_index: usize,
    denominator_digit_cap: usize,
) -> Result<BTreeSet<BigInt>> {
    let mut out = BTreeSet::new();
    out.insert(BigInt::zero());
    for &k in k_list {
        let alpha = QuadraticIrrational::sqrt_over(2, k)?;
        // denominators grow geometrically: four indices per digit is ample
        let max_index = min_index + denominator_digit_cap * 4;
        for conv in convergents(&alpha, max_index)? {
            if conv.index < min_index {
                continue;
            }
            if conv.q.to_string().len() > denominator_digit_cap {
                break;
            }
            out.insert(conv.q);
        }
    }
    Ok(out)
}

/// Third-order filter over M at fixed inverse temperature: keeps q when the
/// three-term weighted cosine average at t = q pi sits within `threshold`
/// of its maximum. The first term is exactly 1 for integer q; the others
/// reduce sqrt(2) q and sqrt(3) q modulo 2 exactly.
pub fn third_order_filter(
    m: &BTreeSet<BigInt>,
    beta: &HPReal,
    threshold: &HPReal,
    ctx: &PrecisionContext,
) -> Result<BTreeSet<BigInt>> {
    let b = ctx.exp(&beta.neg());
    let b2 = b.mul(&b);
    let b3 = b2.mul(&b);
    let denom = b.add(&b2).add(&b3);
    let qs: Vec<&BigInt> = m.iter().collect();
    let kept: Vec<BigInt> = qs
        .par_iter()
        .filter_map(|q| {
            if q.is_zero() {
                // the trivial zero passes for any threshold
                return Some(BigInt::zero());
            }
            let r2 = BigRational::from_integer(BigInt::from(2) * (*q).clone());
            let c2 = ctx.cos_sqrt_rational_pi(2, &r2);
            let c3 = ctx.cos_sqrt_rational_pi(3, &r2);
            let f = b.add(&b2.mul(&c2)).add(&b3.mul(&c3)).div(&denom);
            let one_minus = ctx.one().sub(&f);
            if one_minus.le(threshold) {
                Some((*q).clone())
            } else {
                None
            }
        })
        .collect();
    Ok(kept.into_iter().collect())
}

/// CSV row for the convergent-table export.
pub fn convergent_row(label: &str, conv: &Convergent, q: &Quality, ctx: &PrecisionContext) -> String {
    format!(
        "{},{},{},{},{}",
        label,
        conv.index,
        conv.p,
        conv.q,
        ctx.to_decimal_sig(&q.err, 34)
    )
}
