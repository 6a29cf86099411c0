//! Weyl-criterion sums in closed form, exact modulo-pi sequence generation,
//! histogramming, the histogram-based scale-invariance comparator, and the
//! time-average versus torus-average ergodicity check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::bloch::{SampleGrid, Sigma};
use crate::error::{Error, Result};
use crate::fast::{FastSeries, DD};
use crate::precision::{HPReal, PrecisionContext};
use crate::series::{approx_low_temp, ThermalParams};

/// Averaged exponential sum over the lattice, as magnitude and phase.
#[derive(Clone, Debug)]
pub struct WeylSum {
    pub magnitude: HPReal,
    pub phase: HPReal,
    /// Set when m dt is congruent to 0 mod 2pi and every term collapses to 1.
    pub degenerate: bool,
}

/// (1/(N+1)) sum_{n=0..N} e^{i m n dt} by the closed geometric form, never
/// term by term.
pub fn weyl_sum(m: i64, grid: &SampleGrid, ctx: &PrecisionContext) -> Result<WeylSum> {
    if m == 0 {
        return Err(Error::InvalidParameter("frequency index must be nonzero".into()));
    }
    let n_plus_1 = grid.n_samples + 1;
    // phi = |m| dt mod 2pi, reduced exactly from the lattice decomposition
    let m_abs = m.unsigned_abs();
    let phi = reduce_multiple(grid, m_abs, 1, ctx)?;
    if phi.is_zero() {
        return Ok(WeylSum {
            magnitude: ctx.one(),
            phase: ctx.zero(),
            degenerate: true,
        });
    }
    // sum = (1 - e^{i(N+1)phi}) / ((N+1)(1 - e^{i phi})) for the positive
    // frequency; the magnitude is sign-free and the phase conjugates
    let big_angle = ctx.reduce_mod_2pi(&phi.mul(&ctx.from_u64(n_plus_1)))?;
    let (c_big, s_big) = (
        ctx.cos_reduced(&big_angle),
        ctx.sin_reduced(&big_angle),
    );
    let (c_one, s_one) = (ctx.cos_reduced(&phi), ctx.sin_reduced(&phi));
    let num_re = ctx.one().sub(&c_big);
    let num_im = s_big.neg();
    let den_re = ctx.one().sub(&c_one);
    let den_im = s_one.neg();
    let den_norm = den_re.mul(&den_re).add(&den_im.mul(&den_im));
    let re = num_re.mul(&den_re).add(&num_im.mul(&den_im)).div(&den_norm);
    let im = num_im.mul(&den_re).sub(&num_re.mul(&den_im)).div(&den_norm);
    let scale = ctx.from_u64(n_plus_1);
    let re = re.div(&scale);
    let im = if m > 0 { im.div(&scale) } else { im.div(&scale).neg() };
    let magnitude = re.mul(&re).add(&im.mul(&im)).sqrt();
    let phase = ctx.atan2(&im, &re);
    Ok(WeylSum {
        magnitude,
        phase,
        degenerate: false,
    })
}

/// Exact bound 2 / ((N+1) |1 - e^{i m dt}|) from the closed form.
pub fn weyl_bound(m: i64, grid: &SampleGrid, ctx: &PrecisionContext) -> Result<HPReal> {
    let phi = reduce_multiple(grid, m.unsigned_abs(), 1, ctx)?;
    let (c_one, s_one) = (ctx.cos_reduced(&phi), ctx.sin_reduced(&phi));
    let den_re = ctx.one().sub(&c_one);
    let den = den_re.mul(&den_re).add(&s_one.mul(&s_one)).sqrt();
    Ok(ctx
        .from_u64(2)
        .div(&ctx.from_u64(grid.n_samples + 1).mul(&den)))
}

/// n * mult * dt mod (modulus), with mult = sqrt(d_mult) and the modulus a
/// half or full turn; every value comes from one exact extended-precision
/// reduction.
fn reduce_step(
    grid: &SampleGrid,
    n: u64,
    mult_d: u64,
    modulus_pi_halves: u32, // 1 => one pi, 2 => two pi
    ctx: &PrecisionContext,
) -> Result<HPReal> {
    let rat = grid.step_ratio() * BigRational::from_integer(BigInt::from(n));
    match grid.sigma() {
        Sigma::Pi => {
            // (rat * sqrt(mult_d) * pi) mod (modulus_pi_halves * pi)
            let m = ctx.sqrt_mul_mod(mult_d, &rat, modulus_pi_halves);
            Ok(m.mul(ctx.pi()))
        }
        Sigma::One => {
            let v = ctx.sqrt_mul_hp(mult_d, &rat)?;
            reduce_mod_pi_multiple(&v, modulus_pi_halves, ctx)
        }
        Sigma::SqrtInt(d) => {
            let v = ctx.sqrt_mul_hp(mult_d * d, &rat)?;
            reduce_mod_pi_multiple(&v, modulus_pi_halves, ctx)
        }
    }
}

fn reduce_mod_pi_multiple(v: &HPReal, halves: u32, ctx: &PrecisionContext) -> Result<HPReal> {
    let r = ctx.reduce_mod_2pi(v)?;
    if halves == 2 {
        return Ok(r);
    }
    if r.lt(ctx.pi()) {
        Ok(r)
    } else {
        Ok(r.sub(ctx.pi()))
    }
}

fn reduce_multiple(grid: &SampleGrid, m: u64, mult_d: u64, ctx: &PrecisionContext) -> Result<HPReal> {
    reduce_step(grid, m, mult_d, 2, ctx)
}

/// Modulus choice for sequence generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modulus {
    Pi,
    TwoPi,
}

/// {n * multiplier * dt mod modulus : n = 0..N}, exact per element.
pub fn sequence_mod(
    grid: &SampleGrid,
    modulus: Modulus,
    multiplier_d: u64,
    ctx: &PrecisionContext,
) -> Result<Vec<HPReal>> {
    let halves = match modulus {
        Modulus::Pi => 1,
        Modulus::TwoPi => 2,
    };
    (0..=grid.n_samples)
        .map(|n| reduce_step(grid, n, multiplier_d, halves, ctx))
        .collect()
}

/// Half-open-bin counting with an explicit overflow tally.
#[derive(Clone, Debug)]
pub struct Histogram {
    pub lo: HPReal,
    pub hi: HPReal,
    pub bin_width: HPReal,
    pub counts: Vec<u64>,
    pub total: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn bins(lo: f64, hi: f64, width: f64) -> usize {
        ((hi - lo) / width).ceil() as usize
    }
}

/// Builds a histogram over [lo, hi) with bins [lo + k w, lo + (k+1) w);
/// values outside land in the overflow tally.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bin_width: f64, ctx: &PrecisionContext) -> Histogram {
    let n_bins = Histogram::bins(lo, hi, bin_width);
    let mut counts = vec![0u64; n_bins];
    let mut overflow = 0u64;
    let mut total = 0u64;
    for &v in values {
        let r = (v - lo) / bin_width;
        let mut k = r.floor();
        // a value sitting on a decimal bin edge can land one ulp below the
        // computed edge; snap it to the half-open bin that starts there
        let rr = r.round();
        if (r - rr).abs() <= 8.0 * f64::EPSILON * rr.abs().max(1.0) {
            k = rr;
        }
        if k >= 0.0 && (k as usize) < n_bins {
            counts[k as usize] += 1;
            total += 1;
        } else {
            overflow += 1;
        }
    }
    Histogram {
        lo: ctx.from_f64(lo),
        hi: ctx.from_f64(hi),
        bin_width: ctx.from_f64(bin_width),
        counts,
        total,
        overflow,
    }
}

/// Two-sample Kolmogorov-Smirnov statistic on binned empirical CDFs,
/// computed exactly from the counts.
pub fn ks_distance(a: &Histogram, b: &Histogram, ctx: &PrecisionContext) -> HPReal {
    assert_eq!(a.counts.len(), b.counts.len(), "bin layouts must match");
    let (na, nb) = (a.total.max(1) as i128, b.total.max(1) as i128);
    let mut ca: i128 = 0;
    let mut cb: i128 = 0;
    let mut best_num: i128 = 0; // |ca * nb - cb * na| maximized
    for k in 0..a.counts.len() {
        ca += a.counts[k] as i128;
        cb += b.counts[k] as i128;
        let num = (ca * nb - cb * na).abs();
        if num > best_num {
            best_num = num;
        }
    }
    let num = ctx.from_bigint(&BigInt::from(best_num));
    let den = ctx.from_bigint(&BigInt::from(na * nb));
    num.div(&den)
}

/// Which sampled observable feeds the comparator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampledFunction {
    /// The longitudinal series f(t) behind the shift coefficient.
    ShiftSeries,
    /// The transverse series g(t).
    TransverseSeries,
    /// The fluorescence-signal diagonal.
    Fluorescence,
}

/// Kolmogorov-Smirnov distance between the value distributions of
/// {f(n dt_a)} and {f(n dt_b)}, n = 0..N, on bins of `bin_width`.
///
/// Samples are generated on the hardware fast path (well inside the bin
/// resolution); spot confirmation at full precision is part of the
/// acceptance checks. `enforce` applies the pseudorandom step-range
/// precondition.
#[allow(clippy::too_many_arguments)]
pub fn scale_invariance_distance(
    f: SampledFunction,
    dt_a: &BigRational,
    dt_b: &BigRational,
    n: u64,
    bin_width: f64,
    params: &ThermalParams,
    enforce: bool,
    ctx: &PrecisionContext,
) -> Result<HPReal> {
    if enforce {
        for dt in [dt_a, dt_b] {
            let v = ctx.from_ratio(dt);
            let lo_ok = match f {
                // the double-frequency arguments admit the (pi/2, pi) window
                SampledFunction::ShiftSeries | SampledFunction::Fluorescence => {
                    ctx.pi().mul(&ctx.from_f64(0.5)).lt(&v)
                }
                SampledFunction::TransverseSeries => ctx.pi().lt(&v),
            };
            if !(lo_ok && v.lt(ctx.two_pi())) {
                return Err(Error::InvalidParameter(format!(
                    "step {} outside the admissible pseudorandom window",
                    v
                )));
            }
        }
    }
    let sa = collect_samples(f, dt_a, n, params, ctx);
    let sb = collect_samples(f, dt_b, n, params, ctx);
    let (lo, hi) = match f {
        SampledFunction::Fluorescence => (0.0, 1.0),
        _ => (-1.25, 1.25),
    };
    let ha = histogram(&sa, lo, hi, bin_width, ctx);
    let hb = histogram(&sb, lo, hi, bin_width, ctx);
    Ok(ks_distance(&ha, &hb, ctx))
}

fn collect_samples(
    f: SampledFunction,
    dt: &BigRational,
    n: u64,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Vec<f64> {
    let fs = FastSeries::new(params, ctx);
    let mut out = Vec::with_capacity(n as usize + 1);
    for j in 0..=n {
        let t = DD::from_ratio(&(dt * BigRational::from_integer(BigInt::from(j))));
        let v = match f {
            SampledFunction::ShiftSeries => fs.eval(t).l4,
            SampledFunction::TransverseSeries => fs.eval(t).l1,
            SampledFunction::Fluorescence => fs.fluorescence(t),
        };
        out.push(v);
    }
    out
}

/// Time average of the two-frequency approximant over [0, T] by composite
/// Simpson at step 1e-2, next to the exact torus average (zero: every
/// Fourier mode carries a nonzero frequency in the first angle).
pub fn time_average_vs_phase_average(
    beta: &HPReal,
    t_end: &HPReal,
    ctx: &PrecisionContext,
) -> Result<(HPReal, HPReal)> {
    let step = ctx.parse_decimal("1e-2")?;
    let mut n = t_end.div(&step).to_f64().round() as u64;
    if n % 2 == 1 {
        n += 1;
    }
    let h = t_end.div(&ctx.from_u64(n));
    let lt1 = |t: &HPReal| -> Result<HPReal> { Ok(approx_low_temp(t, beta, ctx)?.0) };
    let mut acc = lt1(&ctx.zero())?.add(&lt1(t_end)?);
    let four = ctx.from_u64(4);
    let two = ctx.from_u64(2);
    for j in 1..n {
        let t = h.mul(&ctx.from_u64(j));
        let w = if j % 2 == 1 { &four } else { &two };
        acc = acc.add(&w.mul(&lt1(&t)?));
    }
    let integral = acc.mul(&h).div(&ctx.from_u64(3));
    Ok((integral.div(t_end), ctx.zero()))
}
