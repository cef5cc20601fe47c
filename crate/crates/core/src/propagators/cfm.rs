//! Canonical Function Method propagation.
//!
//! From an anchor r₀ inside the classically allowed region the pair
//! α (α = 1, α′ = 0 at r₀) and β (β = 0, β′ = 1 at r₀) is carried toward
//! both boundaries. Deep in each forbidden region both functions are
//! dominated by the growing exponential, so ℓ(r) = −β(r)/α(r) levels off;
//! its plateau value is the inverse log-derivative y(r₀)/y′(r₀) of the
//! solution that vanishes on that side.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::PotentialModel;
use crate::units::kinetic_coefficient;

use super::mesh::{CanonicalRun, GridConfig, Mesh, MeshPlan};
use super::{count_sign_changes, Mapping, RadialGrid, SolutionTrace};

/// Canonical functions propagated in one direction from the anchor.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalPair {
    pub alpha: SolutionTrace,
    pub beta: SolutionTrace,
    /// Plateau value of −β/α.
    pub saturation_value: f64,
    /// Spread of the last three checkpoints on the plateau.
    pub saturation_error: f64,
    /// Radius where the plateau was accepted.
    pub saturation_r: f64,
}

impl CanonicalPair {
    /// α·β′ − α′·β at node i, undoing the per-node rescaling.
    pub fn wronskian(&self, i: usize) -> f64 {
        let da = self.alpha.dy.as_ref().expect("canonical traces carry derivatives");
        let db = self.beta.dy.as_ref().expect("canonical traces carry derivatives");
        let w = self.alpha.y[i] * db[i] - da[i] * self.beta.y[i];
        w * (2.0 * self.alpha.scale_exponent[i]).exp()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CfmResult {
    /// Toward the origin side; ℓ₋.
    pub inward: CanonicalPair,
    /// Toward large r; ℓ₊.
    pub outward: CanonicalPair,
}

impl CfmResult {
    /// ℓ₊ − ℓ₋; vanishes at an eigenvalue.
    pub fn mismatch(&self) -> f64 {
        self.outward.saturation_value - self.inward.saturation_value
    }
}

/// Propagates the canonical pair at energy `e` from `r0` in both directions.
pub fn cfm_propagate(
    p: &PotentialModel,
    mu: f64,
    e: f64,
    r0: f64,
    cfg: &GridConfig,
) -> Result<CfmResult> {
    if !(e < 0.0) {
        return Err(Error::domain(format!("bound states only: E = {e} must be negative")));
    }
    let v0 = p.eval(r0)?;
    if !(v0 < e) {
        return Err(Error::domain(format!(
            "anchor r0 = {r0} lies in the classically forbidden region (V = {v0} >= E = {e})"
        )));
    }
    let k = kinetic_coefficient(mu)?;
    let plan = MeshPlan::for_energy(p, k, e, r0, cfg)?;
    let mesh = Mesh::build(p, k, &plan, 0, true);
    let (ia, ib) = mesh.canonical_initial();
    let outward = mesh.canonical_run(e, 1, ia, ib, cfg, true)?;
    let inward = mesh.canonical_run(e, -1, ia, ib, cfg, true)?;
    Ok(CfmResult {
        inward: to_pair(&mesh, &inward, -1)?,
        outward: to_pair(&mesh, &outward, 1)?,
    })
}

fn to_pair(mesh: &Mesh, run: &CanonicalRun, dir: isize) -> Result<CanonicalPair> {
    let steps = run.values.len() - 1;
    let idx = |s: usize| (mesh.anchor as isize + dir * s as isize) as usize;
    // ascending-r order
    let order: Vec<usize> = if dir > 0 {
        (0..=steps).collect()
    } else {
        (0..=steps).rev().collect()
    };
    let (r_lo, r_hi) = (mesh.r[idx(order[0])], mesh.r[idx(order[steps])]);
    let grid = RadialGrid {
        r_start: r_lo,
        r_end: r_hi,
        step_h: mesh.h,
        mapping: mesh.mapping,
        steps,
    };

    let convert = |w: f64, dw: f64, r: f64| match mesh.mapping {
        Mapping::Uniform => (w, dw),
        Mapping::LogUniform => {
            let s = r.sqrt();
            (w * s, (dw + 0.5 * w) / s)
        }
    };
    let mut ay = Vec::with_capacity(steps + 1);
    let mut ad = Vec::with_capacity(steps + 1);
    let mut by = Vec::with_capacity(steps + 1);
    let mut bd = Vec::with_capacity(steps + 1);
    let mut scale = Vec::with_capacity(steps + 1);
    for &s in &order {
        let r = mesh.r[idx(s)];
        let (wa, wb) = run.values[s];
        let (da, db) = run.derivs[s];
        let (y, d) = convert(wa, da, r);
        ay.push(y);
        ad.push(d);
        let (y, d) = convert(wb, db, r);
        by.push(y);
        bd.push(d);
        scale.push(run.log_scale[s]);
    }
    let end = if dir > 0 { steps } else { 0 };
    let make = |y: Vec<f64>, d: Vec<f64>| SolutionTrace {
        grid,
        node_count: count_sign_changes(&y),
        y_prime_end: d[end],
        y,
        dy: Some(d),
        scale_exponent: scale.clone(),
    };
    let saturation_r = mesh.r[run.sat_index];
    Ok(CanonicalPair {
        alpha: make(ay, ad),
        beta: make(by, bd),
        saturation_value: -run.beta_r / run.alpha_r,
        saturation_error: run.spread,
        saturation_r,
    })
}
