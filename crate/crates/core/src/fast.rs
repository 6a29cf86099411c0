//! Hardware-precision series evaluation for pre-filtering large sweeps.
//!
//! Plain f64 evaluation loses the argument of cos(2 sqrt(n) t) to rounding
//! once t reaches ~1e6, so angles are carried in double-double form: square
//! roots enter as value pairs accurate to ~1e-32 and reduction subtracts an
//! exact integer multiple of a double-double 2pi. The residual error budget
//! is below 1e-12 for t up to 1e10 (series truncation included); every
//! reported hit must still be confirmed at full precision.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::precision::{HPReal, PrecisionContext};
use crate::series::ThermalParams;

/// Unevaluated double-double value hi + lo with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = 134217729.0 * a; // 2^27 + 1
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl DD {
    pub fn from_f64(v: f64) -> DD {
        DD { hi: v, lo: 0.0 }
    }

    pub fn from_hp(v: &HPReal, ctx: &PrecisionContext) -> DD {
        let hi = v.to_f64();
        let lo = v.sub(&ctx.from_f64(hi)).to_f64();
        DD { hi, lo }
    }

    pub fn from_ratio(r: &BigRational) -> DD {
        let hi = ratio_f64(r);
        let rem = r - BigRational::from_float(hi).expect("finite");
        DD { hi, lo: ratio_f64(&rem) }
    }

    #[inline]
    pub fn add(self, rhs: DD) -> DD {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + rhs.lo);
        DD { hi, lo }
    }

    #[inline]
    pub fn sub(self, rhs: DD) -> DD {
        self.add(DD { hi: -rhs.hi, lo: -rhs.lo })
    }

    #[inline]
    pub fn mul_f64(self, f: f64) -> DD {
        let (p, e) = two_prod(self.hi, f);
        let (hi, lo) = quick_two_sum(p, e + self.lo * f);
        DD { hi, lo }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn ratio_f64(r: &BigRational) -> f64 {
    ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

const TWO_PI: DD = DD {
    hi: 6.283185307179586,
    lo: 2.4492935982947064e-16,
};

/// cos/sin of hi+lo with first-order correction in lo.
#[inline]
fn cos_dd(a: DD) -> f64 {
    a.hi.cos() - a.lo * a.hi.sin()
}

#[inline]
fn sin_dd(a: DD) -> f64 {
    a.hi.sin() + a.lo * a.hi.cos()
}

/// Reduce a double-double angle into (-pi, pi].
#[inline]
pub fn reduce_dd(y: DD) -> DD {
    let n = (y.hi / TWO_PI.hi).round();
    if n == 0.0 {
        return y;
    }
    y.sub(TWO_PI.mul_f64(n))
}

/// f64 mirror of the resonant-series parameter set.
pub struct FastSeries {
    pub b: f64,
    pub one_minus_b: f64,
    pub sinh_beta: f64,
    pub cosh_beta_m1: f64,
    pub n_max: usize,
    /// sqrt(k) for k = 0 ..= n_max + 1, double-double.
    sqrt_dd: Vec<DD>,
    weights: Vec<f64>,
}

/// All six resonant values at one time, hardware precision.
#[derive(Clone, Copy, Debug, Default)]
pub struct FastL {
    pub l1: f64,
    pub l3: f64,
    pub l4: f64,
    pub l1_dot: f64,
    pub l3_dot: f64,
    pub l4_dot: f64,
}

impl FastSeries {
    pub fn new(params: &ThermalParams, ctx: &PrecisionContext) -> FastSeries {
        let n_max = params.n_max();
        let b = params.boltzmann_factor().to_f64();
        let sqrt_dd = (0..=(n_max + 1) as u64)
            .map(|k| DD::from_hp(&ctx.sqrt_int(k), ctx))
            .collect();
        let mut weights = Vec::with_capacity(n_max + 1);
        let mut w = 1.0;
        for _ in 0..=n_max {
            weights.push(w);
            w *= b;
        }
        FastSeries {
            b,
            one_minus_b: 1.0 - b,
            sinh_beta: (1.0 / b - b) / 2.0,
            cosh_beta_m1: (1.0 - b) * (1.0 - b) / (2.0 * b),
            n_max,
            sqrt_dd,
            weights,
        }
    }

    /// cos/sin tables of sqrt(k) t at one time given as double-double.
    fn tables(&self, t: DD) -> (Vec<f64>, Vec<f64>) {
        let k_max = self.n_max + 1;
        let mut cos = Vec::with_capacity(k_max + 1);
        let mut sin = Vec::with_capacity(k_max + 1);
        cos.push(1.0);
        sin.push(0.0);
        for k in 1..=k_max {
            let y = t.mul_f64(self.sqrt_dd[k].hi).add(DD::from_f64(self.sqrt_dd[k].lo * t.hi));
            let r = reduce_dd(y);
            cos.push(cos_dd(r));
            sin.push(sin_dd(r));
        }
        (cos, sin)
    }

    pub fn eval(&self, t: DD) -> FastL {
        let (cos, sin) = self.tables(t);
        let mut s1 = 0.0;
        let mut s1d = 0.0;
        let mut sc2 = 0.0;
        let mut ss2w = 0.0;
        for n in 0..=self.n_max {
            let w = self.weights[n];
            s1 += w * cos[n + 1] * cos[n];
            s1d -= w
                * (self.sqrt_dd[n + 1].hi * sin[n + 1] * cos[n]
                    + self.sqrt_dd[n].hi * cos[n + 1] * sin[n]);
            if n >= 1 {
                let c2 = 2.0 * cos[n] * cos[n] - 1.0;
                let s2 = 2.0 * sin[n] * cos[n];
                sc2 += w * c2;
                ss2w += w * 2.0 * self.sqrt_dd[n].hi * s2;
            }
        }
        FastL {
            l1: self.one_minus_b * s1,
            l3: self.one_minus_b / 2.0 + self.sinh_beta * sc2,
            l4: -self.one_minus_b / 2.0 + self.cosh_beta_m1 * sc2,
            l1_dot: self.one_minus_b * s1d,
            l3_dot: -self.sinh_beta * ss2w,
            l4_dot: -self.cosh_beta_m1 * ss2w,
        }
    }

    pub fn eval_f64(&self, t: f64) -> FastL {
        self.eval(DD::from_f64(t))
    }

    /// Fluorescence-signal diagonal f(t), hardware precision.
    pub fn fluorescence(&self, t: DD) -> f64 {
        let (cos, sin) = self.tables(t);
        let mut s = 0.0;
        let mut w = 1.0; // b^{n-1}
        for n in 1..=self.n_max.max(1) {
            if n >= cos.len() {
                break;
            }
            s += w * cos[n] * cos[n] + w * self.b * sin[n] * sin[n];
            w *= self.b;
        }
        0.5 * self.one_minus_b * s
    }

    /// Streams L4 over the lattice j = j0 .. j1 (exclusive) with t = j dt,
    /// carrying one double-double angle per series level. `dt` is exact.
    ///
    /// Angles are re-seeded from `ctx` at the chunk start, so chunks can run
    /// in parallel and the accumulation error never spans more than one
    /// chunk.
    pub fn scan_l4_chunk(
        &self,
        dt: &BigRational,
        j0: u64,
        j1: u64,
        ctx: &PrecisionContext,
        mut sink: impl FnMut(u64, f64),
    ) {
        let n_max = self.n_max;
        // stride_n = (2 sqrt(n) dt) mod 2pi, seeded angle at j0
        let mut theta: Vec<DD> = Vec::with_capacity(n_max + 1);
        let mut stride: Vec<DD> = Vec::with_capacity(n_max + 1);
        let two_dt = BigRational::from_integer(BigInt::from(2)) * dt;
        for n in 1..=n_max {
            let s_hp = ctx
                .sqrt_int(n as u64)
                .mul(&ctx.from_ratio(&two_dt));
            let s_red = ctx.reduce_mod_2pi(&s_hp).expect("stride in budget");
            stride.push(DD::from_hp(&s_red, ctx));
            let a_hp = ctx
                .sqrt_int(n as u64)
                .mul(&ctx.from_ratio(&(two_dt.clone() * BigRational::from_integer(BigInt::from(j0)))));
            let a_red = ctx.reduce_mod_2pi(&a_hp).expect("seed in budget");
            theta.push(DD::from_hp(&a_red, ctx));
        }
        for j in j0..j1 {
            let mut sc2 = 0.0;
            let mut w = 1.0;
            for n in 1..=n_max {
                w *= self.b;
                sc2 += w * cos_dd(theta[n - 1]);
                let mut th = theta[n - 1].add(stride[n - 1]);
                if th.hi >= TWO_PI.hi {
                    th = th.sub(TWO_PI);
                }
                theta[n - 1] = th;
            }
            sink(j, -self.one_minus_b / 2.0 + self.cosh_beta_m1 * sc2);
        }
    }
}
