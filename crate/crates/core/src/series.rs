//! The thermal two-level-atom series: resonant coefficients L1, L3, L4, their
//! time derivatives, the detuned propagator elements, and the low-temperature
//! closed-form approximants, all with certified geometric truncation bounds.

use num_bigint::BigInt;
use num_rational::BigRational;


use crate::error::{Error, Result};
use crate::precision::{HPReal, PrecisionContext};

/// How many series terms to keep.
#[derive(Clone, Debug)]
pub enum TruncationPolicy {
    /// Keep this many terms of the n = 0,1,2,... expansion (so the cap on n
    /// is `fixed_terms - 1`).
    FixedTerms(usize),
    /// Smallest cap n_max with e^{-(n_max+1) beta} <= tolerance.
    Tolerance(HPReal),
}

impl TruncationPolicy {
    /// The default reproduces 33-digit certified output across the supported
    /// beta range.
    pub fn default_tolerance(ctx: &PrecisionContext) -> Self {
        TruncationPolicy::Tolerance(ctx.parse_decimal("1e-33").expect("literal"))
    }
}

/// Smallest N with e^{-(N+1) beta} <= tol.
pub fn truncation_index(beta: &HPReal, tol: &HPReal, ctx: &PrecisionContext) -> Result<usize> {
    if !beta.is_positive() {
        return Err(Error::InvalidParameter("beta must be positive".into()));
    }
    if !tol.is_positive() || !tol.lt(&ctx.one()) {
        return Err(Error::InvalidParameter("tolerance must lie in (0, 1)".into()));
    }
    // N+1 = ceil(ln(1/tol) / beta), then settle boundary cases exactly
    let x = ctx.ln(&ctx.one().div(tol)).div(beta);
    let guess = x.to_f64().ceil().max(1.0) as i64;
    for cand in (guess - 1).max(1)..=(guess + 1) {
        let e = ctx.exp(&beta.mul(&ctx.from_i64(-cand)));
        if e.le(tol) {
            return Ok((cand - 1) as usize);
        }
    }
    Ok(guess as usize)
}

/// Thermal-state parameters. Time arguments are in units of 1/|g| and the
/// inverse temperature is in units of the inverse photon energy.
#[derive(Clone)]
pub struct ThermalParams {
    pub beta: HPReal,
    pub delta_omega: HPReal,
    pub g: HPReal,
    pub trunc: TruncationPolicy,
    b: HPReal,
    one_minus_b: HPReal,
    sinh_beta: HPReal,
    cosh_beta_m1: HPReal,
    n_max: usize,
}

impl ThermalParams {
    pub fn resonant(beta: HPReal, trunc: TruncationPolicy, ctx: &PrecisionContext) -> Result<Self> {
        Self::new(beta, ctx.zero(), ctx.one(), trunc, ctx)
    }

    pub fn detuned(
        beta: HPReal,
        delta_omega: HPReal,
        trunc: TruncationPolicy,
        ctx: &PrecisionContext,
    ) -> Result<Self> {
        Self::new(beta, delta_omega, ctx.one(), trunc, ctx)
    }

    pub fn new(
        beta: HPReal,
        delta_omega: HPReal,
        g: HPReal,
        trunc: TruncationPolicy,
        ctx: &PrecisionContext,
    ) -> Result<Self> {
        if !beta.is_positive() {
            return Err(Error::InvalidParameter(
                "beta must be positive for a thermal photon distribution".into(),
            ));
        }
        let n_max = match &trunc {
            TruncationPolicy::FixedTerms(k) => {
                if *k == 0 {
                    return Err(Error::InvalidParameter("need at least one term".into()));
                }
                k - 1
            }
            TruncationPolicy::Tolerance(tol) => truncation_index(&beta, tol, ctx)?,
        };
        // e^{-beta} once per parameter set; all weights come from it by
        // repeated multiplication.
        let b = ctx.exp(&beta.neg());
        let one = ctx.one();
        let half = ctx.from_f64(0.5);
        let one_minus_b = one.sub(&b);
        let inv_b = one.div(&b);
        let sinh_beta = inv_b.sub(&b).mul(&half);
        let cosh_beta_m1 = one_minus_b.mul(&one_minus_b).div(&b).mul(&half);
        Ok(ThermalParams {
            beta,
            delta_omega,
            g,
            trunc,
            b,
            one_minus_b,
            sinh_beta,
            cosh_beta_m1,
            n_max,
        })
    }

    pub fn is_resonant(&self) -> bool {
        self.delta_omega.is_zero()
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn boltzmann_factor(&self) -> &HPReal {
        &self.b
    }
}

/// Which resonant coefficient a bound refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    L1,
    L3,
    L4,
}

/// Rigorous majorant of the dropped tail for a cap `n_max`.
///
/// L1 is majorized by the bare geometric tail b^{n_max+1}. The L3 and L4
/// sums carry the prefactors sinh(beta) and cosh(beta)-1, which tighten or
/// loosen the constant to (1+b)/(2b) and (1-b)/(2b) respectively.
pub fn tail_bound(which: Component, n_max: usize, params: &ThermalParams, ctx: &PrecisionContext) -> HPReal {
    let b = &params.b;
    let geo = b.powi(n_max + 1);
    let half = ctx.from_f64(0.5);
    match which {
        Component::L1 => geo,
        Component::L3 => ctx.one().add(b).mul(&half).div(b).mul(&geo),
        Component::L4 => ctx.one().sub(b).mul(&half).div(b).mul(&geo),
    }
}

/// Majorant of the differentiated tail for first derivatives.
pub fn tail_bound_derivative(n_max: usize, params: &ThermalParams, ctx: &PrecisionContext) -> HPReal {
    let two_rt = ctx.sqrt_int((n_max + 1) as u64).mul(&ctx.from_u64(2));
    two_rt.add(&ctx.one()).mul(&params.b.powi(n_max + 1))
}

/// A time argument in the exact form rational * sqrt(d) [* pi].
/// Carrying the decomposition instead of a rounded product is what keeps
/// reduction exact for lattice indices and 15-digit pi multiples.
#[derive(Clone, Debug)]
pub struct TimePoint {
    pub rat: BigRational,
    pub sqrt_d: u64,
    pub times_pi: bool,
}

impl TimePoint {
    pub fn rational(rat: BigRational) -> Self {
        TimePoint { rat, sqrt_d: 1, times_pi: false }
    }

    pub fn pi_multiple(rat: BigRational) -> Self {
        TimePoint { rat, sqrt_d: 1, times_pi: true }
    }

    pub fn to_hp(&self, ctx: &PrecisionContext) -> HPReal {
        let mut v = ctx.from_ratio(&self.rat);
        if self.sqrt_d != 1 {
            v = v.mul(&ctx.sqrt_int(self.sqrt_d));
        }
        if self.times_pi {
            v = v.mul(ctx.pi());
        }
        v
    }
}

/// cos and sin of sqrt(k) * t for k = 0 ..= k_max, shared by every series
/// evaluator so each lattice point pays one reduction per k.
pub(crate) struct TrigTables {
    pub cos: Vec<HPReal>,
    pub sin: Vec<HPReal>,
}

impl TrigTables {
    pub fn at_hp(t: &HPReal, k_max: usize, ctx: &PrecisionContext) -> Result<TrigTables> {
        let mut cos = Vec::with_capacity(k_max + 1);
        let mut sin = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            if k == 0 {
                cos.push(ctx.one());
                sin.push(ctx.zero());
                continue;
            }
            let arg = ctx.sqrt_int(k as u64).mul(t);
            let (c, s) = ctx.cos_sin(&arg)?;
            cos.push(c);
            sin.push(s);
        }
        Ok(TrigTables { cos, sin })
    }

    pub fn at_point(tp: &TimePoint, k_max: usize, ctx: &PrecisionContext) -> Result<TrigTables> {
        let mut cos = Vec::with_capacity(k_max + 1);
        let mut sin = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            if k == 0 {
                cos.push(ctx.one());
                sin.push(ctx.zero());
                continue;
            }
            let d = k as u64 * tp.sqrt_d;
            if tp.times_pi {
                // angle = pi * ((sqrt(d) * rat) mod 2)
                let m2 = ctx.sqrt_mul_mod(d, &tp.rat, 2);
                if m2.is_zero() {
                    cos.push(ctx.one());
                    sin.push(ctx.zero());
                } else if m2.sub(&ctx.one()).is_zero() {
                    cos.push(ctx.one().neg());
                    sin.push(ctx.zero());
                } else {
                    let angle = m2.mul(ctx.pi());
                    cos.push(ctx.cos_reduced(&angle));
                    sin.push(ctx.sin_reduced(&angle));
                }
            } else {
                let (c, s) = ctx.cos_sin_sqrt_rational(d, &tp.rat)?;
                cos.push(c);
                sin.push(s);
            }
        }
        Ok(TrigTables { cos, sin })
    }
}

/// All resonant coefficients and derivatives at one time.
#[derive(Clone, Debug)]
pub struct LValues {
    pub l1: HPReal,
    pub l3: HPReal,
    pub l4: HPReal,
    pub l1_dot: HPReal,
    pub l3_dot: HPReal,
    pub l4_dot: HPReal,
    pub l1_ddot: HPReal,
    pub l3_ddot: HPReal,
    pub l4_ddot: HPReal,
}

fn assemble(tables: &TrigTables, params: &ThermalParams, ctx: &PrecisionContext) -> LValues {
    let n_max = params.n_max;
    let b = &params.b;
    let one = ctx.one();
    let two = ctx.from_u64(2);
    let half = ctx.from_f64(0.5);

    let mut s_l1 = ctx.zero();
    let mut s_l1d = ctx.zero();
    let mut s_l1dd = ctx.zero();
    let mut s_cos2 = ctx.zero(); // sum b^n cos(2 sqrt(n) t), n >= 1
    let mut s_sin2w = ctx.zero(); // sum b^n 2 sqrt(n) sin(2 sqrt(n) t)
    let mut s_cos2w = ctx.zero(); // sum b^n 4 n cos(2 sqrt(n) t)

    let mut bp = one.clone();
    for n in 0..=n_max {
        let cn = &tables.cos[n];
        let sn = &tables.sin[n];
        let cn1 = &tables.cos[n + 1];
        let sn1 = &tables.sin[n + 1];
        let rt_n = ctx.sqrt_int(n as u64);
        let rt_n1 = ctx.sqrt_int((n + 1) as u64);

        s_l1 = s_l1.add(&bp.mul(&cn1.mul(cn)));
        let d = rt_n1.mul(&sn1.mul(cn)).add(&rt_n.mul(&cn1.mul(sn)));
        s_l1d = s_l1d.sub(&bp.mul(&d));
        let dd = ctx
            .from_u64((2 * n + 1) as u64)
            .mul(&cn1.mul(cn))
            .sub(&two.mul(&rt_n.mul(&rt_n1)).mul(&sn1.mul(sn)));
        s_l1dd = s_l1dd.sub(&bp.mul(&dd));

        if n >= 1 {
            let cos2 = two.mul(&cn.mul(cn)).sub(&one);
            let sin2 = two.mul(&sn.mul(cn));
            s_cos2 = s_cos2.add(&bp.mul(&cos2));
            s_sin2w = s_sin2w.add(&bp.mul(&two.mul(&rt_n).mul(&sin2)));
            s_cos2w = s_cos2w.add(&bp.mul(&ctx.from_u64(4 * n as u64).mul(&cos2)));
        }
        bp = bp.mul(b);
    }

    let omb = &params.one_minus_b;
    let l1 = omb.mul(&s_l1);
    let l1_dot = omb.mul(&s_l1d);
    let l1_ddot = omb.mul(&s_l1dd);
    let l3 = omb.mul(&half).add(&params.sinh_beta.mul(&s_cos2));
    let l4 = omb.mul(&half).neg().add(&params.cosh_beta_m1.mul(&s_cos2));
    let l3_dot = params.sinh_beta.mul(&s_sin2w).neg();
    let l4_dot = params.cosh_beta_m1.mul(&s_sin2w).neg();
    let l3_ddot = params.sinh_beta.mul(&s_cos2w).neg();
    let l4_ddot = params.cosh_beta_m1.mul(&s_cos2w).neg();

    LValues {
        l1,
        l3,
        l4,
        l1_dot,
        l3_dot,
        l4_dot,
        l1_ddot,
        l3_ddot,
        l4_ddot,
    }
}

/// Evaluates every resonant coefficient and derivative at a plain
/// high-precision time.
pub fn eval_all(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<LValues> {
    let tables = TrigTables::at_hp(t, params.n_max + 1, ctx)?;
    Ok(assemble(&tables, params, ctx))
}

/// Same, at an exactly-decomposed lattice time.
pub fn eval_all_at(tp: &TimePoint, params: &ThermalParams, ctx: &PrecisionContext) -> Result<LValues> {
    let tables = TrigTables::at_point(tp, params.n_max + 1, ctx)?;
    Ok(assemble(&tables, params, ctx))
}

pub fn eval_l1(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    Ok(eval_all(t, params, ctx)?.l1)
}

pub fn eval_l3(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    Ok(eval_all(t, params, ctx)?.l3)
}

pub fn eval_l4(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    Ok(eval_all(t, params, ctx)?.l4)
}

pub fn eval_l1_dot(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    Ok(eval_all(t, params, ctx)?.l1_dot)
}

pub fn eval_l3_dot(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    Ok(eval_all(t, params, ctx)?.l3_dot)
}

pub fn eval_l4_dot(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    Ok(eval_all(t, params, ctx)?.l4_dot)
}

pub fn eval_l1_ddot(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    Ok(eval_all(t, params, ctx)?.l1_ddot)
}

pub fn eval_l3_ddot(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    Ok(eval_all(t, params, ctx)?.l3_ddot)
}

pub fn eval_l4_ddot(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    Ok(eval_all(t, params, ctx)?.l4_ddot)
}

/// The four propagator elements of the general (detuned) Bloch map.
pub fn eval_detuned(
    t: &HPReal,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<(HPReal, HPReal, HPReal, HPReal)> {
    let n_max = params.n_max;
    let b = &params.b;
    let one = ctx.one();
    let half = ctx.from_f64(0.5);
    let hw = params.delta_omega.mul(&half); // delta_omega / 2
    let hw2 = hw.mul(&hw);
    let g2 = params.g.mul(&params.g);

    // per-level frequency sqrt((dw/2)^2 + g^2 k) and its trig values
    let mut rt = Vec::with_capacity(n_max + 2);
    let mut cos_t = Vec::with_capacity(n_max + 2);
    let mut sin_t = Vec::with_capacity(n_max + 2);
    for k in 0..=(n_max + 1) {
        let d_k = hw2.add(&g2.mul(&ctx.from_u64(k as u64)));
        let r = d_k.sqrt();
        if r.is_zero() {
            cos_t.push(ctx.one());
            sin_t.push(ctx.zero());
        } else {
            let (c, s) = ctx.cos_sin(&r.mul(t))?;
            cos_t.push(c);
            sin_t.push(s);
        }
        rt.push(r);
    }

    let mut a00 = ctx.zero();
    let mut a11 = ctx.zero();
    let mut a01_re = ctx.zero();
    let mut a01_im = ctx.zero();
    let mut bp = one.clone();
    for n in 0..=n_max {
        let k1 = n + 1;
        let d_k1 = hw2.add(&g2.mul(&ctx.from_u64(k1 as u64)));
        let num = hw2.add(&g2.mul(&ctx.from_u64(k1 as u64)).mul(&cos_t[k1].mul(&cos_t[k1])));
        a00 = a00.add(&bp.mul(&num.div(&d_k1)));

        if n >= 1 {
            let d_n = hw2.add(&g2.mul(&ctx.from_u64(n as u64)));
            let num = g2
                .mul(&ctx.from_u64(n as u64))
                .mul(&sin_t[n].mul(&sin_t[n]));
            a11 = a11.add(&bp.mul(&num.div(&d_n)));
        }

        // bracket_k = cos(tau_k) + i (dw/2) sin(tau_k)/rt_k ; at k = 0 and
        // zero detuning the sine factor vanishes identically
        let (re1, im1) = bracket(&cos_t[k1], &sin_t[k1], &rt[k1], &hw, ctx);
        let (re0, im0) = bracket(&cos_t[n], &sin_t[n], &rt[n], &hw, ctx);
        let prod_re = re1.mul(&re0).sub(&im1.mul(&im0));
        let prod_im = re1.mul(&im0).add(&im1.mul(&re0));
        a01_re = a01_re.add(&bp.mul(&prod_re));
        a01_im = a01_im.add(&bp.mul(&prod_im));

        bp = bp.mul(b);
    }
    let omb = &params.one_minus_b;
    let a00 = omb.mul(&a00);
    let a11 = omb.mul(&a11);
    let l1 = omb.mul(&a01_re);
    let l2 = omb.mul(&a01_im);
    let l3 = a00.sub(&a11);
    let l4 = a00.add(&a11).sub(&one);
    Ok((l1, l2, l3, l4))
}

fn bracket(
    c: &HPReal,
    s: &HPReal,
    rt: &HPReal,
    hw: &HPReal,
    ctx: &PrecisionContext,
) -> (HPReal, HPReal) {
    if hw.is_zero() || rt.is_zero() {
        (c.clone(), ctx.zero())
    } else {
        (c.clone(), hw.mul(s).div(rt))
    }
}

/// Low-temperature closed forms, accurate to the dropped O(b^2) terms.
pub fn approx_low_temp(
    t: &HPReal,
    beta: &HPReal,
    ctx: &PrecisionContext,
) -> Result<(HPReal, HPReal, HPReal)> {
    let b = ctx.exp(&beta.neg());
    let one = ctx.one();
    let half = ctx.from_f64(0.5);
    let omb = one.sub(&b);
    let (cos_t, _) = ctx.cos_sin(t)?;
    let cos_rt2 = ctx.cos(&ctx.sqrt_int(2).mul(t))?;
    let cos_2t = ctx.cos(&t.mul(&ctx.from_u64(2)))?;
    let lt1 = omb.mul(&cos_t).add(&b.mul(&cos_rt2).mul(&cos_t));
    let lt3 = omb.mul(&half).add(&cos_2t.mul(&half));
    let lt4 = omb
        .mul(&half)
        .neg()
        .add(&one.sub(&b.mul(&ctx.from_u64(2))).mul(&cos_2t).mul(&half));
    Ok((lt1, lt3, lt4))
}

/// Fluorescence correlation signal (resonant units): the two-time atomic
/// excited-population kernel.
pub fn fluorescence_signal(
    t1: &HPReal,
    t2: &HPReal,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<HPReal> {
    let n_max = params.n_max.max(1);
    let ta = TrigTables::at_hp(t1, n_max, ctx)?;
    let tb = TrigTables::at_hp(t2, n_max, ctx)?;
    let b = &params.b;
    let mut s = ctx.zero();
    // weights e^{-beta(n-1)} = b^{n-1} and e^{-beta n} = b^n
    let mut bp_m1 = ctx.one();
    for n in 1..=n_max {
        let cc = tb.cos[n].mul(&ta.cos[n]).mul(&bp_m1);
        let bp = bp_m1.mul(b);
        let ss = tb.sin[n].mul(&ta.sin[n]).mul(&bp);
        s = s.add(&cc.add(&ss));
        bp_m1 = bp;
    }
    Ok(params.one_minus_b.mul(&ctx.from_f64(0.5)).mul(&s))
}

pub(crate) fn qpi_point(q: &BigInt) -> TimePoint {
    TimePoint::pi_multiple(BigRational::from_integer(q.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::with_precision;
    use num_traits::{One, Zero};

    fn ctx() -> PrecisionContext {
        with_precision(50).unwrap()
    }

    fn params(beta: f64, c: &PrecisionContext) -> ThermalParams {
        ThermalParams::resonant(
            c.from_f64(beta),
            TruncationPolicy::default_tolerance(c),
            c,
        )
        .unwrap()
    }

    #[test]
    fn truncation_fixtures() {
        let c = ctx();
        let tol = c.parse_decimal("1.63e-33").unwrap();
        assert_eq!(
            truncation_index(&c.from_f64(0.5), &tol, &c).unwrap(),
            150
        );
        assert_eq!(truncation_index(&c.from_f64(5.0), &tol, &c).unwrap(), 15);
        let e10 = c.exp(&c.from_i64(-10));
        assert_eq!(truncation_index(&c.one(), &e10, &c).unwrap(), 9);
    }

    #[test]
    fn closed_form_values_at_zero() {
        let c = ctx();
        let tol = c.parse_decimal("1e-30").unwrap();
        for beta in [0.5, 1.0, 2.0, 5.0] {
            let p = params(beta, &c);
            let v = eval_all(&c.zero(), &p, &c).unwrap();
            assert!(v.l1.sub(&c.one()).abs().lt(&tol), "L1(0) at beta={beta}");
            assert!(v.l3.sub(&c.one()).abs().lt(&tol), "L3(0) at beta={beta}");
            assert!(v.l4.abs().lt(&tol), "L4(0) at beta={beta}");
            assert!(v.l1_dot.abs().lt(&tol));
            assert!(v.l4_dot.abs().lt(&tol));
        }
    }

    #[test]
    fn trajectory_value_near_first_crossing() {
        // frozen from two independent high-precision evaluations of the
        // series at t = 1.644, beta = 1
        let c = ctx();
        let p = params(1.0, &c);
        let t = c.parse_decimal("1.644").unwrap();
        let v = eval_all(&t, &p, &c).unwrap();
        assert!((v.l4.to_f64() + 0.485411613055).abs() < 1e-9);
        assert!((v.l1.to_f64() - 0.0638355122883).abs() < 1e-9);
    }

    #[test]
    fn richardson_truncation_consistency() {
        let c = ctx();
        let beta = 0.5f64;
        let p151 = ThermalParams::resonant(
            c.from_f64(beta),
            TruncationPolicy::FixedTerms(151),
            &c,
        )
        .unwrap();
        let p302 = ThermalParams::resonant(
            c.from_f64(beta),
            TruncationPolicy::FixedTerms(302),
            &c,
        )
        .unwrap();
        let bound = tail_bound(Component::L1, 150, &p151, &c);
        for tf in [0.7, 13.25, 200.0, 977.5] {
            let t = c.from_f64(tf);
            let a = eval_l1(&t, &p151, &c).unwrap();
            let b = eval_l1(&t, &p302, &c).unwrap();
            assert!(a.sub(&b).abs().le(&bound), "t={tf}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c = ctx();
        let p = params(1.0, &c);
        let h = c.parse_decimal("1e-10").unwrap();
        let tol = c.parse_decimal("1e-15").unwrap();
        let t = c.parse_decimal("0.5").unwrap();
        let v = eval_all(&t, &p, &c).unwrap();
        let up = eval_all(&t.add(&h), &p, &c).unwrap();
        let dn = eval_all(&t.sub(&h), &p, &c).unwrap();
        let two_h = h.mul(&c.from_u64(2));
        for (an, hi, lo) in [
            (&v.l1_dot, &up.l1, &dn.l1),
            (&v.l3_dot, &up.l3, &dn.l3),
            (&v.l4_dot, &up.l4, &dn.l4),
        ] {
            let fd = hi.sub(lo).div(&two_h);
            assert!(an.sub(&fd).abs().lt(&tol));
        }
        // second derivatives against first-derivative differences
        for (an, hi, lo) in [
            (&v.l1_ddot, &up.l1_dot, &dn.l1_dot),
            (&v.l4_ddot, &up.l4_dot, &dn.l4_dot),
        ] {
            let fd = hi.sub(lo).div(&two_h);
            assert!(an.sub(&fd).abs().lt(&tol));
        }
    }

    #[test]
    fn series_bounded_by_one() {
        let c = ctx();
        let p = params(0.5, &c);
        let lim = c.parse_decimal("1.0000000001").unwrap();
        for tf in [0.3, 1.9, 7.77, 42.0, 300.1] {
            let t = c.from_f64(tf);
            let v = eval_all(&t, &p, &c).unwrap();
            assert!(v.l1.abs().lt(&lim));
            assert!(v.l3.abs().lt(&lim));
            assert!(v.l4.abs().lt(&lim));
        }
    }

    #[test]
    fn detuned_reduces_to_resonant() {
        let c = ctx();
        let p = params(1.0, &c);
        let t = c.parse_decimal("1.7").unwrap();
        let (l1, l2, l3, l4) = eval_detuned(&t, &p, &c).unwrap();
        let v = eval_all(&t, &p, &c).unwrap();
        // the transverse element is term-by-term identical
        let tight = c.parse_decimal("1e-40").unwrap();
        assert!(l1.sub(&v.l1).abs().lt(&tight));
        assert!(l2.abs().lt(&tight));
        // the longitudinal elements use a different (resummed) grouping of
        // the same series, so the truncated routes agree to the tail bound
        let loose = tail_bound(Component::L3, p.n_max(), &p, &c)
            .mul(&c.from_u64(4));
        assert!(l3.sub(&v.l3).abs().lt(&loose));
        assert!(l4.sub(&v.l4).abs().lt(&loose));
    }

    #[test]
    fn detuned_identity_at_zero() {
        let c = ctx();
        let p = ThermalParams::detuned(
            c.from_f64(0.7),
            c.from_f64(0.9),
            TruncationPolicy::default_tolerance(&c),
            &c,
        )
        .unwrap();
        let (l1, l2, l3, l4) = eval_detuned(&c.zero(), &p, &c).unwrap();
        let tol = c.parse_decimal("1e-30").unwrap();
        assert!(l1.sub(&c.one()).abs().lt(&tol));
        assert!(l2.abs().lt(&tol));
        assert!(l3.sub(&c.one()).abs().lt(&tol));
        assert!(l4.abs().lt(&tol));
    }

    #[test]
    fn detuned_matches_independent_resummation() {
        // 30-term direct summation of the propagator elements at doubled
        // precision, written against the element formulas directly
        let c = ctx();
        let c2 = with_precision(100).unwrap();
        let p = ThermalParams::detuned(
            c.one(),
            c.from_f64(0.5),
            TruncationPolicy::FixedTerms(30),
            &c,
        )
        .unwrap();
        let t = c.one();
        let (l1, l2, l3, l4) = eval_detuned(&t, &p, &c).unwrap();

        // oracle at 100 digits
        let beta = c2.one();
        let b = c2.exp(&beta.neg());
        let omb = c2.one().sub(&b);
        let hw = c2.from_f64(0.25); // dw/2
        let hw2 = hw.mul(&hw);
        let dt = |k: u64| hw2.add(&c2.from_u64(k));
        let t2 = c2.one();
        let mut a00 = c2.zero();
        let mut a11 = c2.zero();
        let mut re = c2.zero();
        let mut im = c2.zero();
        let mut bp = c2.one();
        for n in 0u64..30 {
            let dk1 = dt(n + 1);
            let r1 = dk1.sqrt();
            let c1v = c2.cos(&r1.mul(&t2)).unwrap();
            let s1v = c2.sin(&r1.mul(&t2)).unwrap();
            a00 = a00.add(&bp.mul(&hw2.add(&c2.from_u64(n + 1).mul(&c1v.mul(&c1v))).div(&dk1)));
            if n >= 1 {
                let dn = dt(n);
                let rn = dn.sqrt();
                let sv = c2.sin(&rn.mul(&t2)).unwrap();
                a11 = a11.add(&bp.mul(&c2.from_u64(n).mul(&sv.mul(&sv)).div(&dn)));
            }
            let (r0v, i0v) = if n == 0 {
                let r0 = hw.clone();
                (
                    c2.cos(&r0.mul(&t2)).unwrap(),
                    hw.mul(&c2.sin(&r0.mul(&t2)).unwrap()).div(&r0),
                )
            } else {
                let rn = dt(n).sqrt();
                (
                    c2.cos(&rn.mul(&t2)).unwrap(),
                    hw.mul(&c2.sin(&rn.mul(&t2)).unwrap()).div(&rn),
                )
            };
            let i1v = hw.mul(&s1v).div(&r1);
            re = re.add(&bp.mul(&c1v.mul(&r0v).sub(&i1v.mul(&i0v))));
            im = im.add(&bp.mul(&c1v.mul(&i0v).add(&i1v.mul(&r0v))));
            bp = bp.mul(&b);
        }
        let tol = 1e-30;
        assert!((l1.to_f64() - omb.mul(&re).to_f64()).abs() < tol);
        assert!((l2.to_f64() - omb.mul(&im).to_f64()).abs() < tol);
        assert!((l3.to_f64() - omb.mul(&a00.sub(&a11)).to_f64()).abs() < tol);
        assert!((l4.to_f64() - omb.mul(&a00.add(&a11)).sub(&c2.one()).to_f64()).abs() < tol);
    }

    #[test]
    fn low_temp_approximants() {
        let c = ctx();
        let beta = c.from_u64(4);
        let b = c.exp(&beta.neg());
        // t = 0 values follow from the closed forms directly
        let (lt1, lt3, lt4) = approx_low_temp(&c.zero(), &beta, &c).unwrap();
        let tol = c.parse_decimal("1e-45").unwrap();
        assert!(lt1.sub(&c.one()).abs().lt(&tol));
        let half = c.from_f64(0.5);
        let expect3 = c.one().sub(&b.mul(&half));
        assert!(lt3.sub(&expect3).abs().lt(&tol));
        let expect4 = b.mul(&half).neg();
        assert!(lt4.sub(&expect4).abs().lt(&tol));

        // t = pi: cos(pi) = -1 substitution for the transverse component
        let (lt1pi, _, _) = approx_low_temp(c.pi(), &c.from_u64(5), &c).unwrap();
        let b5 = c.exp(&c.from_i64(-5));
        let expect = c
            .one()
            .sub(&b5)
            .neg()
            .sub(&b5.mul(&c.cos(&c.sqrt_int(2).mul(c.pi())).unwrap()));
        assert!(lt1pi.sub(&expect).abs().lt(&c.parse_decimal("1e-40").unwrap()));
    }

    #[test]
    fn low_temp_error_within_dropped_tail() {
        let c = ctx();
        let beta = c.from_u64(4);
        let p = params(4.0, &c);
        // C * e^{-2 beta} with C = 3 majorizes the dropped terms
        let bound = c.from_u64(3).mul(&c.exp(&c.from_i64(-8)));
        let mut t = c.zero();
        let step = c.parse_decimal("0.2").unwrap();
        for _ in 0..100 {
            t = t.add(&step);
            let (lt1, _, _) = approx_low_temp(&t, &beta, &c).unwrap();
            let l1 = eval_l1(&t, &p, &c).unwrap();
            assert!(lt1.sub(&l1).abs().lt(&bound));
        }
    }

    #[test]
    fn fluorescence_signal_basics() {
        let c = ctx();
        let p = params(1.0, &c);
        let half = c.from_f64(0.5);
        let v0 = fluorescence_signal(&c.zero(), &c.zero(), &p, &c).unwrap();
        assert!(v0.sub(&half).abs().lt(&c.parse_decimal("1e-30").unwrap()));
        let a = c.one();
        let b = c.from_u64(2);
        let f_ab = fluorescence_signal(&a, &b, &p, &c).unwrap();
        let f_ba = fluorescence_signal(&b, &a, &p, &c).unwrap();
        assert!(f_ab.sub(&f_ba).is_zero());
    }

    #[test]
    fn fluorescence_matches_direct_resummation() {
        let c = ctx();
        let c2 = with_precision(100).unwrap();
        let p = ThermalParams::resonant(c.one(), TruncationPolicy::FixedTerms(31), &c).unwrap();
        let got = fluorescence_signal(&c.one(), &c.from_u64(2), &p, &c).unwrap();
        let b = c2.exp(&c2.from_i64(-1));
        let mut s = c2.zero();
        for n in 1u64..=30 {
            let rt = c2.sqrt_int(n);
            let c1 = c2.cos(&rt.mul(&c2.one())).unwrap();
            let c2v = c2.cos(&rt.mul(&c2.from_u64(2))).unwrap();
            let s1 = c2.sin(&rt.mul(&c2.one())).unwrap();
            let s2v = c2.sin(&rt.mul(&c2.from_u64(2))).unwrap();
            let w1 = b.powi((n - 1) as usize);
            let w2 = b.powi(n as usize);
            s = s.add(&c2v.mul(&c1).mul(&w1).add(&s2v.mul(&s1).mul(&w2)));
        }
        let oracle = c2.one().sub(&b).mul(&c2.from_f64(0.5)).mul(&s);
        assert!((got.to_f64() - oracle.to_f64()).abs() < 1e-28);
    }

    #[test]
    fn qpi_lattice_time_is_exact() {
        let c = ctx();
        let p = params(2.0, &c);
        // at q = 0 the lattice point is t = 0 exactly
        let tp = qpi_point(&BigInt::zero());
        let v = eval_all_at(&tp, &p, &c).unwrap();
        assert!(v.l1.sub(&c.one()).abs().lt(&c.parse_decimal("1e-30").unwrap()));
        // a one-element sanity check against the plain-time path
        let tp = qpi_point(&BigInt::one());
        let v = eval_all_at(&tp, &p, &c).unwrap();
        let w = eval_all(&c.pi().clone(), &p, &c).unwrap();
        assert!(v.l4.sub(&w.l4).abs().lt(&c.parse_decimal("1e-45").unwrap()));
    }
}
