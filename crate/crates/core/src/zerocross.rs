//! Discrete-time sweeps for near-zeros of the longitudinal Bloch component,
//! with the temperature-dependent sample-count and threshold schedules, and
//! the companion sweep over integer multiples of pi driven by the
//! Diophantine candidate sets.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::bloch::SampleGrid;
use crate::error::{Error, Result};
use crate::fast::FastSeries;
use crate::precision::{HPReal, PrecisionContext};
use crate::series::{self, ThermalParams, TimePoint, TruncationPolicy};

/// Sweep sizing at one inverse temperature.
#[derive(Clone, Debug)]
pub struct SweepSchedule {
    pub beta: f64,
    pub n_samples: u64,
    pub epsilon: f64,
}

const N0: f64 = 619.3;
const C1: f64 = 13.37;
const EPS_HIGH: f64 = 7.5e-4;
const N_CAP: u64 = 400_000_000;
const EPS0: f64 = 1.875e-4;

/// Sample count and threshold for one beta. Above beta = 1 the sample count
/// shrinks as floor(N0 e^{c1/beta}) at fixed threshold; below it the count
/// is capped and the threshold opens up instead. `scale` <= 1 shrinks the
/// lattice for desk runs and widens epsilon by the same factor, keeping the
/// expected hit density (proportional to epsilon * N) roughly fixed.
pub fn schedule(beta: f64, scale: f64, allow_out_of_range: bool) -> Result<SweepSchedule> {
    if !allow_out_of_range && !(0.5..=5.0).contains(&beta) {
        return Err(Error::Range(format!(
            "beta = {beta} outside the sweep range [0.5, 5.0]"
        )));
    }
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::Range("scale must lie in (0, 1]".into()));
    }
    let (n, eps) = if beta >= 1.0 {
        ((N0 * (C1 / beta).exp()).floor() as u64, EPS_HIGH)
    } else {
        (N_CAP, EPS0 * (4f64.ln() / beta).exp())
    };
    let n_scaled = ((n as f64) * scale).floor() as u64;
    Ok(SweepSchedule {
        beta,
        n_samples: n_scaled.max(1),
        epsilon: eps / scale,
    })
}

/// One confirmed near-zero of the longitudinal component.
#[derive(Clone, Debug)]
pub struct HitRecord {
    pub beta: f64,
    pub index: u64,
    pub t: HPReal,
    pub sx: HPReal,
    pub sz: HPReal,
}

/// Hardware-precision error margin added to the threshold during
/// pre-filtering: far above the documented fast-path budget, so no
/// full-precision hit can be lost.
fn prefilter_margin(t: f64) -> f64 {
    1e-10 * t.max(1.0)
}

/// Scans t_n = n dt for |L4(t_n)| <= epsilon over n = 0..N. A widened
/// double-precision pass selects candidates; each one is confirmed at full
/// precision before it is recorded. Records are in index order.
pub fn scan(
    beta: f64,
    grid_dt: (u64, u64),
    sched: &SweepSchedule,
    ctx: &PrecisionContext,
) -> Result<Vec<HitRecord>> {
    let grid = SampleGrid::rational_step(grid_dt.0, grid_dt.1, sched.n_samples, ctx)?;
    let params = ThermalParams::resonant(
        ctx.from_f64(beta),
        TruncationPolicy::default_tolerance(ctx),
        ctx,
    )?;
    let fs = FastSeries::new(&params, ctx);
    let dt = grid.step_ratio();
    let dt_f = dt.to_f64().unwrap();
    let n_total = sched.n_samples;

    // chunked prefilter, parallel over index ranges
    const CHUNK: u64 = 1 << 16;
    let n_chunks = n_total / CHUNK + 1;
    let mut candidates: Vec<u64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|ci| {
            let j0 = ci * CHUNK;
            let j1 = ((ci + 1) * CHUNK).min(n_total + 1);
            let mut local = Vec::new();
            if j0 <= n_total {
                fs.scan_l4_chunk(&dt, j0, j1, ctx, |j, l4| {
                    let thr = sched.epsilon + prefilter_margin(j as f64 * dt_f);
                    if l4.abs() <= thr {
                        local.push(j);
                    }
                });
            }
            local.into_iter()
        })
        .collect();
    candidates.sort_unstable();

    // full-precision confirmation
    let eps_hp = ctx.from_f64(sched.epsilon);
    let confirmed: Vec<Option<HitRecord>> = candidates
        .par_iter()
        .map(|&j| {
            let tp = grid.time_at(j);
            let v = series::eval_all_at(&tp, &params, ctx).ok()?;
            if v.l4.abs().le(&eps_hp) {
                Some(HitRecord {
                    beta,
                    index: j,
                    t: tp.to_hp(ctx),
                    sx: v.l1,
                    sz: v.l4,
                })
            } else {
                None
            }
        })
        .collect();
    Ok(confirmed.into_iter().flatten().collect())
}

/// Runs `scan` across a beta grid, concatenating records in (beta, n)
/// order through the sink.
pub fn scatter_sweep(
    beta_lo: f64,
    beta_hi: f64,
    step: f64,
    grid_dt: (u64, u64),
    scale: f64,
    ctx: &PrecisionContext,
    mut sink: impl FnMut(HitRecord),
) -> Result<()> {
    if beta_hi < beta_lo {
        return Ok(());
    }
    let n_steps = ((beta_hi - beta_lo) / step).round() as usize;
    for i in 0..=n_steps {
        let beta = beta_lo + step * i as f64;
        let sched = schedule(beta, scale, false)?;
        for rec in scan(beta, grid_dt, &sched, ctx)? {
            sink(rec);
        }
    }
    Ok(())
}

/// (beta, S_x(q pi)) records over a candidate set and a beta grid; every
/// time is an exact integer multiple of pi. The context must carry the
/// digit budget for the largest q.
pub fn qpi_scan(
    q_set: &[BigInt],
    beta_lo: f64,
    beta_hi: f64,
    step: f64,
    ctx: &PrecisionContext,
    mut sink: impl FnMut(HitRecord),
) -> Result<()> {
    if beta_hi < beta_lo {
        return Ok(());
    }
    let n_steps = ((beta_hi - beta_lo) / step).round() as usize;
    for i in 0..=n_steps {
        let beta = beta_lo + step * i as f64;
        let params = ThermalParams::resonant(
            ctx.from_f64(beta),
            TruncationPolicy::default_tolerance(ctx),
            ctx,
        )?;
        let recs: Vec<HitRecord> = q_set
            .par_iter()
            .map(|q| {
                let tp = TimePoint::pi_multiple(BigRational::from_integer(q.clone()));
                let v = series::eval_all_at(&tp, &params, ctx)?;
                Ok(HitRecord {
                    beta,
                    index: q.to_u64().unwrap_or(u64::MAX),
                    t: tp.to_hp(ctx),
                    sx: v.l1,
                    sz: v.l4,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for rec in recs {
            sink(rec);
        }
    }
    Ok(())
}

/// Audits prefilter soundness on an index subrange: every full-precision
/// hit must already pass the widened hardware filter.
pub fn audit_prefilter(
    beta: f64,
    grid_dt: (u64, u64),
    eps: f64,
    j0: u64,
    j1: u64,
    ctx: &PrecisionContext,
) -> Result<bool> {
    let grid = SampleGrid::rational_step(grid_dt.0, grid_dt.1, j1, ctx)?;
    let params = ThermalParams::resonant(
        ctx.from_f64(beta),
        TruncationPolicy::default_tolerance(ctx),
        ctx,
    )?;
    let fs = FastSeries::new(&params, ctx);
    let dt = grid.step_ratio();
    let dt_f = dt.to_f64().unwrap();
    let mut fast_vals = Vec::new();
    fs.scan_l4_chunk(&dt, j0, j1, ctx, |_, l4| fast_vals.push(l4));
    let eps_hp = ctx.from_f64(eps);
    for (off, fv) in fast_vals.iter().enumerate() {
        let j = j0 + off as u64;
        let tp = grid.time_at(j);
        let v = series::eval_all_at(&tp, &params, ctx)?;
        if v.l4.abs().le(&eps_hp) {
            let widened = eps + prefilter_margin(j as f64 * dt_f);
            if fv.abs() > widened {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::with_precision;

    #[test]
    fn schedule_fixtures() {
        let s5 = schedule(5.0, 1.0, false).unwrap();
        assert_eq!(s5.n_samples, 8978);
        assert_eq!(s5.epsilon, 7.5e-4);
        let s1 = schedule(1.0, 1.0, false).unwrap();
        assert_eq!(s1.n_samples, 396_659_904);
        assert_eq!(s1.epsilon, 7.5e-4);
        let s05 = schedule(0.5, 1.0, false).unwrap();
        assert_eq!(s05.n_samples, 400_000_000);
        assert!((s05.epsilon - 3.0e-3).abs() < 1e-12);
        assert!(schedule(0.4, 1.0, false).is_err());
        assert!(schedule(0.4, 1.0, true).is_ok());
        // desk scaling trades samples for threshold
        let sc = schedule(1.0, 1e-3, false).unwrap();
        assert_eq!(sc.n_samples, 396_659);
        assert!((sc.epsilon - 0.75).abs() < 1e-9);
    }

    #[test]
    fn schedule_monotonicity() {
        let mut prev_n = u64::MAX;
        for i in 0..=40 {
            let beta = 1.0 + 0.1 * i as f64;
            let s = schedule(beta, 1.0, false).unwrap();
            assert!(s.n_samples < prev_n, "N must fall as beta grows");
            prev_n = s.n_samples;
        }
        let mut prev_eps = f64::INFINITY;
        for i in 0..5 {
            let beta = 0.5 + 0.1 * i as f64;
            let s = schedule(beta, 1.0, false).unwrap();
            assert!(s.epsilon < prev_eps, "epsilon must fall as beta grows");
            prev_eps = s.epsilon;
        }
    }

    #[test]
    fn scan_high_beta_hits() {
        let c = with_precision(50).unwrap();
        let sched = schedule(5.0, 1.0, false).unwrap();
        let hits = scan(5.0, (7, 2), &sched, &c).unwrap();
        // the trivial zero at n = 0 is always present
        assert_eq!(hits[0].index, 0);
        assert!(hits[0].sz.abs().to_f64() < 1e-30);
        assert!(hits[0].sx.sub(&c.one()).abs().to_f64() < 1e-30);
        // and the sweep finds genuine near-zeros beyond it
        assert!(hits.len() >= 2, "only {} hits", hits.len());
        let eps = c.from_f64(sched.epsilon);
        for h in &hits {
            assert!(h.sz.abs().le(&eps));
            assert!(h.sx.abs().to_f64() >= 0.9, "sx {}", h.sx.to_f64());
        }
        // records arrive in index order
        for w in hits.windows(2) {
            assert!(w[0].index < w[1].index);
        }
    }

    #[test]
    fn empty_beta_range_is_empty() {
        let c = with_precision(50).unwrap();
        let mut n = 0usize;
        scatter_sweep(2.0, 1.0, 0.1, (7, 2), 1.0, &c, |_| n += 1).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn qpi_scan_trivial_zero() {
        let c = with_precision(50).unwrap();
        let qs = [BigInt::from(0), BigInt::from(19601u64)];
        let mut recs = Vec::new();
        qpi_scan(&qs, 2.0, 2.0, 0.01, &c, |r| recs.push(r)).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].sx.sub(&c.one()).abs().to_f64() < 1e-30);
        assert!(recs[0].sz.abs().to_f64() < 1e-30);
        // the first nontrivial candidate keeps |L4| well under the filter
        assert!(recs[1].sz.abs().to_f64() < 0.0035);
    }

    #[test]
    fn prefilter_soundness_on_subrange() {
        let c = with_precision(50).unwrap();
        assert!(audit_prefilter(5.0, (7, 2), 7.5e-4, 0, 3000, &c).unwrap());
        assert!(audit_prefilter(1.0, (7, 2), 7.5e-4, 100_000, 103_000, &c).unwrap());
    }
}
