//! The fictitious compressible-fluid picture of the Bloch dynamics:
//! velocity, divergence, velocity potential, density, external force and its
//! potential. The flow is irrotational and inviscid; density and pressure
//! depend on time alone, so the force field carries the whole dynamics.
//!
//! Operations refuse to evaluate near zeros of the transverse or
//! longitudinal coefficient, where the Lagrangian-to-Eulerian inversion
//! degenerates.

use crate::error::{Error, Result};
use crate::precision::{HPReal, PrecisionContext};
use crate::series::{self, LValues, ThermalParams};

/// Position in the Bloch ball.
#[derive(Clone, Debug)]
pub struct Position {
    pub x: HPReal,
    pub y: HPReal,
    pub z: HPReal,
}

/// One fully-evaluated field sample.
#[derive(Clone, Debug)]
pub struct FlowSample {
    pub t: HPReal,
    pub pos: Position,
    pub v: [HPReal; 3],
    pub rho: HPReal,
    pub k_vec: [HPReal; 3],
    pub phi: HPReal,
    pub k_pot: HPReal,
}

fn guarded(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<LValues> {
    let v = series::eval_all(t, params, ctx)?;
    let floor = ctx.parse_decimal("1e-20").expect("literal");
    if v.l1.abs().lt(&floor) {
        return Err(Error::SingularTime { t: t.to_f64(), which: "L1" });
    }
    if v.l3.abs().lt(&floor) {
        return Err(Error::SingularTime { t: t.to_f64(), which: "L3" });
    }
    Ok(v)
}

/// Eulerian velocity at (t, pos).
pub fn velocity(
    t: &HPReal,
    pos: &Position,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<[HPReal; 3]> {
    let v = guarded(t, params, ctx)?;
    Ok(velocity_from(&v, pos))
}

fn velocity_from(v: &LValues, pos: &Position) -> [HPReal; 3] {
    let a1 = v.l1_dot.div(&v.l1);
    let a3 = v.l3_dot.div(&v.l3);
    [
        a1.mul(&pos.x),
        a1.mul(&pos.y),
        a3.mul(&pos.z.sub(&v.l4)).add(&v.l4_dot),
    ]
}

/// Divergence of the velocity field; position-independent.
pub fn divergence(t: &HPReal, params: &ThermalParams, ctx: &PrecisionContext) -> Result<HPReal> {
    let v = guarded(t, params, ctx)?;
    let a1 = v.l1_dot.div(&v.l1);
    let a3 = v.l3_dot.div(&v.l3);
    Ok(a1.add(&a1).add(&a3))
}

/// Velocity potential with v = grad(phi).
pub fn potential_phi(
    t: &HPReal,
    pos: &Position,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<HPReal> {
    let v = guarded(t, params, ctx)?;
    Ok(potential_from(&v, pos, ctx))
}

fn potential_from(v: &LValues, pos: &Position, ctx: &PrecisionContext) -> HPReal {
    let half = ctx.from_f64(0.5);
    let a1 = v.l1_dot.div(&v.l1);
    let a3 = v.l3_dot.div(&v.l3);
    let r2 = pos.x.mul(&pos.x).add(&pos.y.mul(&pos.y));
    let zterm = pos.z.mul(&pos.z).mul(&half).sub(&pos.z.mul(&v.l4));
    a1.mul(&r2)
        .mul(&half)
        .add(&a3.mul(&zterm))
        .add(&v.l4_dot.mul(&pos.z))
}

/// Fluid density rho(t) = rho0 / (L1^2 L3); position-independent.
pub fn density(
    t: &HPReal,
    rho0: &HPReal,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<HPReal> {
    let v = guarded(t, params, ctx)?;
    Ok(rho0.div(&v.l1.mul(&v.l1).mul(&v.l3)))
}

/// External force per unit mass.
pub fn external_force(
    t: &HPReal,
    pos: &Position,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<[HPReal; 3]> {
    let v = guarded(t, params, ctx)?;
    let b1 = v.l1_ddot.div(&v.l1);
    let b3 = v.l3_ddot.div(&v.l3);
    Ok([
        b1.mul(&pos.x),
        b1.mul(&pos.y),
        b3.mul(&pos.z.sub(&v.l4)).add(&v.l4_ddot),
    ])
}

/// Scalar potential of the external force, grad(k_pot) = -K.
pub fn force_potential(
    t: &HPReal,
    pos: &Position,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<HPReal> {
    let v = guarded(t, params, ctx)?;
    let half = ctx.from_f64(0.5);
    let b1 = v.l1_ddot.div(&v.l1);
    let b3 = v.l3_ddot.div(&v.l3);
    let r2 = pos.x.mul(&pos.x).add(&pos.y.mul(&pos.y));
    let zterm = pos.z.mul(&pos.z).mul(&half).sub(&pos.z.mul(&v.l4));
    Ok(b1
        .mul(&r2)
        .mul(&half)
        .add(&b3.mul(&zterm))
        .add(&v.l4_ddot.mul(&pos.z))
        .neg())
}

/// Everything at once, sharing a single series evaluation.
pub fn sample(
    t: &HPReal,
    pos: &Position,
    rho0: &HPReal,
    params: &ThermalParams,
    ctx: &PrecisionContext,
) -> Result<FlowSample> {
    let v = guarded(t, params, ctx)?;
    let vel = velocity_from(&v, pos);
    let phi = potential_from(&v, pos, ctx);
    let rho = rho0.div(&v.l1.mul(&v.l1).mul(&v.l3));
    let b1 = v.l1_ddot.div(&v.l1);
    let b3 = v.l3_ddot.div(&v.l3);
    let k_vec = [
        b1.mul(&pos.x),
        b1.mul(&pos.y),
        b3.mul(&pos.z.sub(&v.l4)).add(&v.l4_ddot),
    ];
    let half = ctx.from_f64(0.5);
    let r2 = pos.x.mul(&pos.x).add(&pos.y.mul(&pos.y));
    let zterm = pos.z.mul(&pos.z).mul(&half).sub(&pos.z.mul(&v.l4));
    let k_pot = b1
        .mul(&r2)
        .mul(&half)
        .add(&b3.mul(&zterm))
        .add(&v.l4_ddot.mul(&pos.z))
        .neg();
    Ok(FlowSample {
        t: t.clone(),
        pos: pos.clone(),
        v: vel,
        rho,
        k_vec,
        phi,
        k_pot,
    })
}
