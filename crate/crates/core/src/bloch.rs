//! Bloch-vector trajectories: the affine evolution map, discrete-time
//! sampling on exact lattices, viewport filtering, and location of
//! trajectory self-intersections in the transverse/longitudinal plane.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fast::{FastSeries, DD};
use crate::precision::{HPReal, PrecisionContext};
use crate::series::{self, ThermalParams, TimePoint};

/// Atomic state as a real 3-vector; norm stays within the unit ball up to
/// the working tolerance.
#[derive(Clone, Debug)]
pub struct BlochState {
    pub sx: HPReal,
    pub sy: HPReal,
    pub sz: HPReal,
}

impl BlochState {
    pub fn new(sx: HPReal, sy: HPReal, sz: HPReal) -> BlochState {
        BlochState { sx, sy, sz }
    }

    pub fn norm_sq(&self) -> HPReal {
        self.sx
            .mul(&self.sx)
            .add(&self.sy.mul(&self.sy))
            .add(&self.sz.mul(&self.sz))
    }

    /// Density-matrix positivity: |S|^2 <= 1 + 1e-30.
    pub fn check_norm(&self, ctx: &PrecisionContext) -> Result<()> {
        let lim = ctx.one().add(&ctx.parse_decimal("1e-30").expect("literal"));
        if self.norm_sq().le(&lim) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "Bloch vector norm exceeds unity: |S|^2 = {}",
                self.norm_sq()
            )))
        }
    }
}

/// Pick of the scale factor in dt = sigma * p / q.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sigma {
    One,
    /// sqrt(d) for a small positive non-square integer d.
    SqrtInt(u64),
    /// pi itself; admissible only for oracle grids, never for
    /// pseudorandom sampling.
    Pi,
}

/// Discrete time lattice t_n = n * dt with dt = sigma * p / q exactly.
#[derive(Clone, Debug)]
pub struct SampleGrid {
    sigma: Sigma,
    p: BigInt,
    q: BigInt,
    pub n_samples: u64,
}

impl SampleGrid {
    /// `enforce_pseudorandom` turns on the pi < dt < 2pi admissibility check.
    pub fn new(
        sigma: Sigma,
        p: BigInt,
        q: BigInt,
        n_samples: u64,
        enforce_pseudorandom: bool,
        ctx: &PrecisionContext,
    ) -> Result<SampleGrid> {
        if p.is_negative() || p.is_zero() || q.is_negative() || q.is_zero() {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        let g = p.gcd(&q);
        let grid = SampleGrid {
            sigma,
            p: &p / &g,
            q: &q / &g,
            n_samples,
        };
        if enforce_pseudorandom {
            if sigma == Sigma::Pi {
                return Err(Error::InvalidParameter(
                    "a pi-multiple step never yields a pseudorandom lattice".into(),
                ));
            }
            let dt = grid.dt_hp(ctx);
            if !(ctx.pi().lt(&dt) && dt.lt(ctx.two_pi())) {
                return Err(Error::InvalidParameter(format!(
                    "dt = {} outside the pseudorandom window (pi, 2pi)",
                    dt
                )));
            }
        }
        Ok(grid)
    }

    pub fn rational_step(p: u64, q: u64, n_samples: u64, ctx: &PrecisionContext) -> Result<SampleGrid> {
        SampleGrid::new(Sigma::One, BigInt::from(p), BigInt::from(q), n_samples, true, ctx)
    }

    pub fn sigma(&self) -> Sigma {
        self.sigma
    }

    pub fn step_ratio(&self) -> BigRational {
        BigRational::new(self.p.clone(), self.q.clone())
    }

    pub fn dt_hp(&self, ctx: &PrecisionContext) -> HPReal {
        self.time_at(1).to_hp(ctx)
    }

    pub fn dt_f64(&self) -> f64 {
        let r = self.step_ratio().to_f64().unwrap_or(f64::NAN);
        match self.sigma {
            Sigma::One => r,
            Sigma::SqrtInt(d) => r * (d as f64).sqrt(),
            Sigma::Pi => r * std::f64::consts::PI,
        }
    }

    /// Exact lattice time t_n.
    pub fn time_at(&self, n: u64) -> TimePoint {
        let rat = BigRational::new(&self.p * BigInt::from(n), self.q.clone());
        match self.sigma {
            Sigma::One => TimePoint::rational(rat),
            Sigma::SqrtInt(d) => TimePoint { rat, sqrt_d: d, times_pi: false },
            Sigma::Pi => TimePoint::pi_multiple(rat),
        }
    }
}

/// Applies the one-step Bloch map at time `t`. Resonant parameters use the
/// diagonal transverse/longitudinal form; a nonzero detuning brings in the
/// rotation block.
pub fn evolve(
    s0: &BlochState,
    t: &HPReal,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<BlochState> {
    s0.check_norm(ctx)?;
    if params.is_resonant() {
        let v = series::eval_all(t, params, ctx)?;
        Ok(BlochState {
            sx: v.l1.mul(&s0.sx),
            sy: v.l1.mul(&s0.sy),
            sz: v.l3.mul(&s0.sz).add(&v.l4),
        })
    } else {
        let (l1, l2, l3, l4) = series::eval_detuned(t, params, ctx)?;
        Ok(BlochState {
            sx: l1.mul(&s0.sx).add(&l2.mul(&s0.sy)),
            sy: l2.mul(&s0.sx).neg().add(&l1.mul(&s0.sy)),
            sz: l3.mul(&s0.sz).add(&l4),
        })
    }
}

/// One record of a sampled trajectory.
#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub index: u64,
    pub t: HPReal,
    pub state: BlochState,
}

/// Rectangular window in the (sx, sz) plane.
#[derive(Clone, Copy, Debug)]
pub struct Viewport {
    pub x_lo: f64,
    pub x_hi: f64,
    pub z_lo: f64,
    pub z_hi: f64,
}

impl Viewport {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi && z >= self.z_lo && z <= self.z_hi
    }
}

/// Samples the trajectory over the grid, streaming records to `sink` so
/// billion-point zooms never materialize off-window points. Records arrive
/// in index order.
pub fn sample_trajectory(
    s0: &BlochState,
    grid: &SampleGrid,
    params: &ThermalParams,
    ctx: &PrecisionContext,
    window: Option<Viewport>,
    mut sink: impl FnMut(TrajectorySample),
) -> Result<()> {
    s0.check_norm(ctx)?;
    for n in 0..=grid.n_samples {
        let tp = grid.time_at(n);
        let v = series::eval_all_at(&tp, params, ctx)?;
        let state = BlochState {
            sx: v.l1.mul(&s0.sx),
            sy: v.l1.mul(&s0.sy),
            sz: v.l3.mul(&s0.sz).add(&v.l4),
        };
        if let Some(w) = window {
            if !w.contains(state.sx.to_f64(), state.sz.to_f64()) {
                continue;
            }
        }
        sink(TrajectorySample {
            index: n,
            t: tp.to_hp(ctx),
            state,
        });
    }
    Ok(())
}

/// Collected variant for small grids.
pub fn sample_trajectory_vec(
    s0: &BlochState,
    grid: &SampleGrid,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<Vec<TrajectorySample>> {
    let mut out = Vec::new();
    sample_trajectory(s0, grid, params, ctx, None, |s| out.push(s))?;
    Ok(out)
}

/// A located self-intersection of the planar trajectory.
#[derive(Clone, Debug)]
pub struct SelfIntersection {
    pub t1: HPReal,
    pub t2: HPReal,
    pub sx: HPReal,
    pub sz: HPReal,
}

fn orient(ax: f64, az: f64, bx: f64, bz: f64, cx: f64, cz: f64) -> f64 {
    (bx - ax) * (cz - az) - (bz - az) * (cx - ax)
}

fn segments_cross(p: [(f64, f64); 2], q: [(f64, f64); 2]) -> bool {
    let d1 = orient(p[0].0, p[0].1, p[1].0, p[1].1, q[0].0, q[0].1);
    let d2 = orient(p[0].0, p[0].1, p[1].0, p[1].1, q[1].0, q[1].1);
    let d3 = orient(q[0].0, q[0].1, q[1].0, q[1].1, p[0].0, p[0].1);
    let d4 = orient(q[0].0, q[0].1, q[1].0, q[1].1, p[1].0, p[1].1);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Finds self-intersections of the trajectory from S(0) = (1, 0, 0) on
/// [0, t_max]: a coarse double-precision polyline pass brackets candidate
/// segment pairs, then simultaneous bisection refines each crossing at full
/// precision. Pairs whose refined states still differ by `tol` or more are
/// dropped, so a zero tolerance reports only exact coincidences (none).
pub fn find_self_intersections(
    params: &ThermalParams,
    t_max: &HPReal,
    coarse_step: &HPReal,
    tol: &HPReal,
    ctx: &PrecisionContext,
) -> Result<Vec<SelfIntersection>> {
    let fs = FastSeries::new(params, ctx);
    let t_max_f = t_max.to_f64();
    let h = coarse_step.to_f64();
    let n = (t_max_f / h).ceil() as usize;
    let mut pts = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = (i as f64 * h).min(t_max_f);
        let v = fs.eval_f64(t);
        pts.push((t, v.l1, v.l4));
    }

    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        let p = [(pts[i].1, pts[i].2), (pts[i + 1].1, pts[i + 1].2)];
        for j in (i + 2)..n {
            let q = [(pts[j].1, pts[j].2), (pts[j + 1].1, pts[j + 1].2)];
            let (pl, ph) = (p[0].0.min(p[1].0), p[0].0.max(p[1].0));
            let (ql, qh) = (q[0].0.min(q[1].0), q[0].0.max(q[1].0));
            if ph < ql || qh < pl {
                continue;
            }
            let (pl, ph) = (p[0].1.min(p[1].1), p[0].1.max(p[1].1));
            let (ql, qh) = (q[0].1.min(q[1].1), q[0].1.max(q[1].1));
            if ph < ql || qh < pl {
                continue;
            }
            if segments_cross(p, q) {
                candidates.push((pts[i].0, pts[j].0));
            }
        }
    }

    let mut out = Vec::new();
    for (a, bstart) in candidates {
        if let Some(hit) = refine_crossing(params, a, a + h, bstart, bstart + h, tol, ctx)? {
            out.push(hit);
        }
    }
    out.sort_by(|a, b| a.t1.cmp(&b.t1));
    Ok(out)
}

fn eval_xz(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<(HPReal, HPReal)> {
    let v = series::eval_all(t, params, ctx)?;
    Ok((v.l1, v.l4))
}

fn refine_crossing(
    params: &ThermalParams,
    mut a0: f64,
    mut a1: f64,
    mut b0: f64,
    mut b1: f64,
    tol: &HPReal,
    ctx: &PrecisionContext,
) -> Result<Option<SelfIntersection>> {
    // simultaneous bisection on both parameter intervals; at each level the
    // crossing lies in exactly one of the four sub-pair combinations
    let eval = |t: f64| -> Result<(f64, f64)> {
        let (x, z) = eval_xz(&ctx.from_f64(t), params, ctx)?;
        Ok((x.to_f64(), z.to_f64()))
    };
    for _ in 0..60 {
        if (a1 - a0) < 1e-12 && (b1 - b0) < 1e-12 {
            break;
        }
        let am = 0.5 * (a0 + a1);
        let bm = 0.5 * (b0 + b1);
        let pa0 = eval(a0)?;
        let pam = eval(am)?;
        let pa1 = eval(a1)?;
        let pb0 = eval(b0)?;
        let pbm = eval(bm)?;
        let pb1 = eval(b1)?;
        let combos = [
            (a0, am, b0, bm, [pa0, pam], [pb0, pbm]),
            (a0, am, bm, b1, [pa0, pam], [pbm, pb1]),
            (am, a1, b0, bm, [pam, pa1], [pb0, pbm]),
            (am, a1, bm, b1, [pam, pa1], [pbm, pb1]),
        ];
        let mut found = false;
        for (na0, na1, nb0, nb1, ps, qs) in combos {
            if segments_cross(ps, qs) {
                a0 = na0;
                a1 = na1;
                b0 = nb0;
                b1 = nb1;
                found = true;
                break;
            }
        }
        if !found {
            // tangential at the current resolution; keep the midpoints
            break;
        }
    }
    let t1 = ctx.from_f64(0.5 * (a0 + a1));
    let t2 = ctx.from_f64(0.5 * (b0 + b1));
    let (x1, z1) = eval_xz(&t1, params, ctx)?;
    let (x2, z2) = eval_xz(&t2, params, ctx)?;
    let dx = x1.sub(&x2);
    let dz = z1.sub(&z2);
    let dist_sq = dx.mul(&dx).add(&dz.mul(&dz));
    let tol_sq = tol.mul(tol);
    if dist_sq.lt(&tol_sq) {
        let half = ctx.from_f64(0.5);
        Ok(Some(SelfIntersection {
            t1,
            t2,
            sx: x1.add(&x2).mul(&half),
            sz: z1.add(&z2).mul(&half),
        }))
    } else {
        Ok(None)
    }
}

/// RK4 integration of dx/dt = v(t, x) for the Eulerian field of the fluid
/// picture, hardware precision; used by consistency oracles.
pub fn track_lagrangian_f64(
    params: &ThermalParams,
    ctx: &PrecisionContext,
    t_end: f64,
    h: f64,
) -> (f64, f64, f64) {
    let fs = FastSeries::new(params, ctx);
    let field = |t: f64, x: f64, y: f64, z: f64| -> (f64, f64, f64) {
        let v = fs.eval(DD::from_f64(t));
        let a1 = v.l1_dot / v.l1;
        let a3 = v.l3_dot / v.l3;
        (a1 * x, a1 * y, a3 * (z - v.l4) + v.l4_dot)
    };
    let steps = (t_end / h).round() as usize;
    let (mut x, mut y, mut z) = (1.0, 0.0, 0.0);
    let mut t = 0.0;
    for _ in 0..steps {
        let k1 = field(t, x, y, z);
        let k2 = field(t + h / 2.0, x + h / 2.0 * k1.0, y + h / 2.0 * k1.1, z + h / 2.0 * k1.2);
        let k3 = field(t + h / 2.0, x + h / 2.0 * k2.0, y + h / 2.0 * k2.1, z + h / 2.0 * k2.2);
        let k4 = field(t + h, x + h * k3.0, y + h * k3.1, z + h * k3.2);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        z += h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
        t += h;
    }
    (x, y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TruncationPolicy;
    use num_traits::One;
    use crate::with_precision;

    fn ctx() -> PrecisionContext {
        with_precision(50).unwrap()
    }

    fn params(beta: f64, c: &PrecisionContext) -> ThermalParams {
        ThermalParams::resonant(c.from_f64(beta), TruncationPolicy::default_tolerance(c), c).unwrap()
    }

    fn xplus(c: &PrecisionContext) -> BlochState {
        BlochState::new(c.one(), c.zero(), c.zero())
    }

    #[test]
    fn evolve_identity_at_zero() {
        let c = ctx();
        let p = params(1.0, &c);
        let s0 = BlochState::new(
            c.parse_decimal("0.3").unwrap(),
            c.parse_decimal("0.4").unwrap(),
            c.parse_decimal("0.5").unwrap(),
        );
        let s = evolve(&s0, &c.zero(), &p, &c).unwrap();
        let tol = c.parse_decimal("1e-30").unwrap();
        assert!(s.sx.sub(&s0.sx).abs().lt(&tol));
        assert!(s.sy.sub(&s0.sy).abs().lt(&tol));
        assert!(s.sz.sub(&s0.sz).abs().lt(&tol));
    }

    #[test]
    fn xz_plane_confinement() {
        let c = ctx();
        let p = params(1.0, &c);
        for tf in [0.5, 1.7, 12.0] {
            let s = evolve(&xplus(&c), &c.from_f64(tf), &p, &c).unwrap();
            assert!(s.sy.is_zero(), "sy must be structurally zero");
            s.check_norm(&c).unwrap();
        }
    }

    #[test]
    fn z_axis_initial_state() {
        let c = ctx();
        let p = params(1.0, &c);
        let t = c.parse_decimal("2.3").unwrap();
        let s = evolve(&BlochState::new(c.zero(), c.zero(), c.one()), &t, &p, &c).unwrap();
        let v = series::eval_all(&t, &p, &c).unwrap();
        assert!(s.sx.is_zero());
        assert!(s.sz.sub(&v.l3.add(&v.l4)).is_zero());
    }

    #[test]
    fn evolve_is_affine() {
        // three collinear initial states stay collinear with the same ratio
        let c = ctx();
        let p = params(0.5, &c);
        let t = c.parse_decimal("3.3").unwrap();
        let a = BlochState::new(c.parse_decimal("0.8").unwrap(), c.zero(), c.parse_decimal("0.1").unwrap());
        let b = BlochState::new(c.parse_decimal("0.2").unwrap(), c.zero(), c.parse_decimal("0.5").unwrap());
        let alpha = c.parse_decimal("0.25").unwrap();
        let omalpha = c.one().sub(&alpha);
        let mid = BlochState::new(
            alpha.mul(&a.sx).add(&omalpha.mul(&b.sx)),
            c.zero(),
            alpha.mul(&a.sz).add(&omalpha.mul(&b.sz)),
        );
        let ea = evolve(&a, &t, &p, &c).unwrap();
        let eb = evolve(&b, &t, &p, &c).unwrap();
        let emid = evolve(&mid, &t, &p, &c).unwrap();
        let expect_x = alpha.mul(&ea.sx).add(&omalpha.mul(&eb.sx));
        let expect_z = alpha.mul(&ea.sz).add(&omalpha.mul(&eb.sz));
        let tol = c.parse_decimal("1e-45").unwrap();
        assert!(emid.sx.sub(&expect_x).abs().lt(&tol));
        assert!(emid.sz.sub(&expect_z).abs().lt(&tol));
    }

    #[test]
    fn grid_sampling_unrolled() {
        let c = ctx();
        let p = params(1.0, &c);
        let grid = SampleGrid::rational_step(7, 2, 2, &c).unwrap();
        let recs = sample_trajectory_vec(&xplus(&c), &grid, &p, &c).unwrap();
        assert_eq!(recs.len(), 3);
        let tol = c.parse_decimal("1e-30").unwrap();
        assert!(recs[0].state.sx.sub(&c.one()).abs().lt(&tol));
        assert!(recs[0].state.sz.abs().lt(&tol));
        for (i, r) in recs.iter().enumerate() {
            let expect_t = c.from_u64(i as u64 * 7).div(&c.from_u64(2));
            assert!(r.t.sub(&expect_t).is_zero());
            let v = series::eval_all(&r.t, &p, &c).unwrap();
            assert!(r.state.sx.sub(&v.l1).abs().lt(&c.parse_decimal("1e-45").unwrap()));
            assert!(r.state.sz.sub(&v.l4).abs().lt(&c.parse_decimal("1e-45").unwrap()));
        }
    }

    #[test]
    fn grid_rejects_small_step() {
        let c = ctx();
        assert!(SampleGrid::rational_step(1, 20, 10, &c).is_err());
        assert!(SampleGrid::rational_step(7, 1, 10, &c).is_err());
        assert!(SampleGrid::new(Sigma::Pi, BigInt::from(2), BigInt::one(), 4, true, &c).is_err());
        assert!(SampleGrid::new(Sigma::Pi, BigInt::from(2), BigInt::one(), 4, false, &c).is_ok());
    }

    #[test]
    fn norm_bound_along_trajectory() {
        let c = ctx();
        let p = params(0.5, &c);
        let grid = SampleGrid::rational_step(7, 2, 200, &c).unwrap();
        sample_trajectory(&xplus(&c), &grid, &p, &c, None, |s| {
            s.state.check_norm(&c).unwrap();
        })
        .unwrap();
    }

    #[test]
    fn window_filter_drops_outside_points() {
        let c = ctx();
        let p = params(1.0, &c);
        let grid = SampleGrid::rational_step(7, 2, 400, &c).unwrap();
        let w = Viewport { x_lo: 0.7, x_hi: 1.0, z_lo: -0.1, z_hi: 0.0 };
        let mut kept = 0usize;
        sample_trajectory(&xplus(&c), &grid, &p, &c, Some(w), |s| {
            assert!(w.contains(s.state.sx.to_f64(), s.state.sz.to_f64()));
            kept += 1;
        })
        .unwrap();
        assert!(kept > 0 && kept < 401);
    }

    #[test]
    fn single_crossing_on_short_horizon() {
        // frozen oracle: Newton refinement of the series crossing at 40-digit
        // precision gives t = (1.6492690702, 4.8062476019), the point
        // (0.0619218101, -0.4839099388)
        let c = ctx();
        let p = params(1.0, &c);
        let hits = find_self_intersections(
            &p,
            &c.from_u64(5),
            &c.parse_decimal("0.001").unwrap(),
            &c.parse_decimal("1e-6").unwrap(),
            &c,
        )
        .unwrap();
        assert_eq!(hits.len(), 1);
        let h = &hits[0];
        assert!((h.t1.to_f64() - 1.6492690702).abs() < 1e-6);
        assert!((h.t2.to_f64() - 4.8062476019).abs() < 1e-6);
        assert!((h.sx.to_f64() - 0.0619218101).abs() < 1e-6);
        assert!((h.sz.to_f64() + 0.4839099388).abs() < 1e-6);
    }

    #[test]
    fn no_crossing_on_simple_arc() {
        let c = ctx();
        let p = params(1.0, &c);
        let hits = find_self_intersections(
            &p,
            &c.parse_decimal("0.5").unwrap(),
            &c.parse_decimal("0.001").unwrap(),
            &c.parse_decimal("1e-6").unwrap(),
            &c,
        )
        .unwrap();
        assert!(hits.is_empty());
    }

    #[test]
    fn zero_tolerance_reports_nothing() {
        let c = ctx();
        let p = params(1.0, &c);
        let hits = find_self_intersections(
            &p,
            &c.from_u64(5),
            &c.parse_decimal("0.001").unwrap(),
            &c.zero(),
            &c,
        )
        .unwrap();
        assert!(hits.is_empty());
    }
}
