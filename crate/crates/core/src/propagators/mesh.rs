//! Per-energy discretisation shared by both engines.
//!
//! The reduced equation y″ = f(r)·y is integrated on a grid uniform in
//! x = r (`Uniform`) or x = ln r (`LogUniform`). With the log mapping the
//! substitution y = √r·w gives w″(x) = g(x)·w with g = r²f + ¼, so both
//! mappings reduce to w″ = g·w where g is linear in the energy:
//! g_i = a_i − E·b_i.
//!
//! Each side of the matching point is summarised by a Prüfer phase
//! ψ = (zeros)·π + θ, θ ∈ [0, π) being the direction of (s·w′, w). The sum
//! ψ₋ + ψ₊ increases through (v + 1)·π exactly at the v-th eigenvalue of
//! the discrete problem, so floor((ψ₋ + ψ₊)/π) counts levels below E.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::potentials::{PotentialModel, Well};

use super::Mapping;

/// Tuning knobs shared by both engines.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GridConfig {
    /// Largest phase advance h·√|g| allowed per step inside the well on the
    /// coarsest rung.
    pub phase_step: f64,
    /// Number of grid rungs in the accuracy ladder (each halves the step).
    pub rungs: usize,
    /// Decay, in e-foldings, required beyond each classical turning point.
    pub decay_efolds: f64,
    /// Relative spread below which the canonical ratio counts as saturated.
    pub plateau_tol: f64,
    /// Steps between saturation checkpoints.
    pub checkpoint_spacing: usize,
    /// Stop extending into a wall once h·√g exceeds this multiple of `phase_step`.
    pub wall_cap: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            phase_step: 0.2,
            rungs: 3,
            decay_efolds: 35.0,
            plateau_tol: 1e-10,
            checkpoint_spacing: 32,
            wall_cap: 8.0,
        }
    }
}

/// Extents and base step of a mesh, fixed before any propagation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MeshPlan {
    pub mapping: Mapping,
    pub x_anchor: f64,
    pub n_in: usize,
    pub n_out: usize,
    pub h: f64,
    pub tp_out: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Mesh {
    pub mapping: Mapping,
    pub h: f64,
    pub anchor: usize,
    pub r: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    a_half: Vec<f64>,
    b_half: Vec<f64>,
    k: f64,
}

pub(crate) fn to_x(mapping: Mapping, r: f64) -> f64 {
    match mapping {
        Mapping::Uniform => r,
        Mapping::LogUniform => r.ln(),
    }
}

pub(crate) fn to_r(mapping: Mapping, x: f64) -> f64 {
    match mapping {
        Mapping::Uniform => x,
        Mapping::LogUniform => x.exp(),
    }
}

/// Coefficients (a, b) such that g = a − E·b at radius r.
#[inline]
fn coefficients(mapping: Mapping, v: f64, r: f64, k: f64) -> (f64, f64) {
    match mapping {
        Mapping::Uniform => (v / k, 1.0 / k),
        Mapping::LogUniform => {
            let r2k = r * r / k;
            (r2k * v + 0.25, r2k)
        }
    }
}

/// Classical turning points at energy `e` around the well; the inner one
/// falls back to the domain edge when the potential never rises above `e`.
pub(crate) fn turning_points(p: &PotentialModel, well: Well, e: f64) -> Result<(f64, f64)> {
    let (dom_lo, dom_hi) = p.domain();
    let f = |r: f64| p.value(r) - e;

    let lo_probe = dom_lo.max(well.r_min * 1e-6);
    let inner = if f(lo_probe) <= 0.0 {
        lo_probe
    } else {
        bisect_log(f, lo_probe, well.r_min)
    };

    let mut hi = well.r_min * 2.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > dom_hi || hi > 1e30 {
            return Err(Error::domain(format!(
                "no outer turning point found for E = {e}"
            )));
        }
    }
    let outer = bisect_log(f, well.r_min, hi);
    Ok((inner, outer))
}

// root of f between a and b (sign change assumed), bisected in ln r
fn bisect_log(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut la, mut lb) = (a.ln(), b.ln());
    let fa_neg = f(a) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (la + lb);
        if mid == la || mid == lb {
            break;
        }
        if (f(mid.exp()) < 0.0) == fa_neg {
            la = mid;
        } else {
            lb = mid;
        }
    }
    (0.5 * (la + lb)).exp()
}

impl MeshPlan {
    /// Plans a mesh adequate for energies up to `e_top` around the well.
    pub fn for_energy(
        p: &PotentialModel,
        k: f64,
        e_top: f64,
        anchor_r: f64,
        cfg: &GridConfig,
    ) -> Result<Self> {
        let well = p.well()?;
        if !(e_top > well.v_min && e_top < 0.0) {
            return Err(Error::domain(format!(
                "energy {e_top} outside (V_min = {}, 0)",
                well.v_min
            )));
        }
        let (tp_in, tp_out) = turning_points(p, well, e_top)?;
        let (dom_lo, dom_hi) = p.domain();

        // Decide the mapping from a provisional extent measured in r.
        let g_r = |r: f64| (p.value(r) - e_top) / k;
        let span_hint = (tp_out - tp_in).max(1e-12);
        let r_hi_uniform = extend_out(g_r, tp_out, span_hint, cfg.decay_efolds, dom_hi);
        let mapping = if r_hi_uniform / tp_in.max(dom_lo) > 50.0 {
            Mapping::LogUniform
        } else {
            Mapping::Uniform
        };

        let g_x = |x: f64| {
            let r = to_r(mapping, x);
            let (a, b) = coefficients(mapping, p.value(r), r, k);
            a - e_top * b
        };
        let (x_in, x_out) = (to_x(mapping, tp_in), to_x(mapping, tp_out));

        // Fastest oscillation inside the well sets the step.
        let samples = 4000;
        let mut g_max: f64 = 0.0;
        for i in 0..=samples {
            let x = x_in + (x_out - x_in) * i as f64 / samples as f64;
            g_max = g_max.max(-g_x(x));
        }
        let x_anchor = to_x(mapping, anchor_r);
        g_max = g_max.max(-g_x(x_anchor)).max(1e-300);
        let mut h = cfg.phase_step / g_max.sqrt();

        let sqrt_cap = cfg.wall_cap * cfg.phase_step / h;
        let x_dom_lo = if dom_lo > 0.0 { to_x(mapping, dom_lo) } else { f64::NEG_INFINITY };
        let x_dom_hi = to_x(mapping, dom_hi);
        let dx_max = ((x_out - x_in) / 50.0).max(h);
        let x_lo = extend_x(&g_x, x_in, -1.0, cfg.decay_efolds, sqrt_cap, dx_max, x_dom_lo);
        let x_hi = extend_x(&g_x, x_out, 1.0, cfg.decay_efolds, sqrt_cap, dx_max, x_dom_hi);

        let span = x_hi - x_lo;
        if span / h < 64.0 {
            h = span / 64.0;
        }
        let eps = 1e-9;
        let n_in_f = (x_anchor - x_lo) / h;
        let n_in = if x_lo <= x_dom_lo + eps * x_dom_lo.abs() {
            n_in_f.floor()
        } else {
            n_in_f.ceil()
        }
        .max(1.0) as usize;
        let n_out = ((x_hi - x_anchor) / h).ceil().max(1.0) as usize;
        let n_in = n_in.max(32);
        let n_out = n_out.max(32);
        let lowest = x_anchor - n_in as f64 * h;
        let n_in = if lowest < x_dom_lo {
            ((x_anchor - x_dom_lo) / h).floor() as usize
        } else {
            n_in
        };

        Ok(Self {
            mapping,
            x_anchor,
            n_in,
            n_out,
            h,
            tp_out,
        })
    }
}

// Outer extent in r for the mapping decision (uniform measure).
fn extend_out(g: impl Fn(f64) -> f64, tp: f64, span: f64, target: f64, dom_hi: f64) -> f64 {
    let mut r = tp;
    let mut decay = 0.0;
    let dr_max = span / 50.0;
    while decay < target && r < dom_hi {
        let gv = g(r).max(0.0);
        let dr = if gv > 0.0 { (0.1 / gv.sqrt()).min(dr_max.max(r * 0.05)) } else { dr_max };
        r += dr;
        decay += dr * g(r).max(0.0).sqrt();
        if r > 1e30 {
            break;
        }
    }
    r
}

// Walks from a turning point into the forbidden region until `target`
// e-foldings accumulate, the wall gets too steep or the domain ends.
fn extend_x(
    g: &impl Fn(f64) -> f64,
    x_tp: f64,
    dir: f64,
    target: f64,
    sqrt_cap: f64,
    dx_max: f64,
    x_edge: f64,
) -> f64 {
    let mut x = x_tp;
    let mut decay = 0.0;
    let mut sqrt_prev = g(x).max(0.0).sqrt();
    for _ in 0..1_000_000 {
        let dx = if sqrt_prev > 0.0 { (0.05 / sqrt_prev).min(dx_max) } else { dx_max };
        let x_next = x + dir * dx;
        if (dir < 0.0 && x_next <= x_edge) || (dir > 0.0 && x_next >= x_edge) {
            return x_edge;
        }
        let sqrt_next = g(x_next).max(0.0).sqrt();
        decay += 0.5 * dx * (sqrt_prev + sqrt_next);
        x = x_next;
        sqrt_prev = sqrt_next;
        if decay >= target || sqrt_next > sqrt_cap {
            break;
        }
    }
    x
}

/// One side's contribution to the phase sum.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SidePhase {
    pub zeros: usize,
    pub theta: f64,
}

impl SidePhase {
    pub fn psi(&self) -> f64 {
        self.zeros as f64 * PI + self.theta
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Phase {
    pub left: SidePhase,
    pub right: SidePhase,
}

impl Phase {
    pub fn sum(&self) -> f64 {
        self.left.psi() + self.right.psi()
    }

    /// Number of levels below the energy.
    pub fn count(&self) -> usize {
        (self.sum() / PI).floor().max(0.0) as usize
    }
}

/// Direction of the line through (a, b), folded into [0, π).
#[inline]
pub(crate) fn line_angle(a: f64, b: f64) -> f64 {
    let mut t = b.atan2(a);
    if t < 0.0 {
        t += PI;
    }
    if t >= PI {
        t -= PI;
    }
    t
}

#[inline]
fn sign_changes_step(prev_sign: &mut f64, value: f64, count: &mut usize) {
    if value != 0.0 {
        let s = value.signum();
        if *prev_sign != 0.0 && s != *prev_sign {
            *count += 1;
        }
        *prev_sign = s;
    }
}

/// Canonical-function propagation outcome in one direction.
#[derive(Debug, Clone)]
pub(crate) struct CanonicalRun {
    /// (α, β) at every node visited, starting at the anchor (common positive scale per node).
    pub values: Vec<(f64, f64)>,
    pub derivs: Vec<(f64, f64)>,
    pub log_scale: Vec<f64>,
    /// α, β at the saturation node.
    pub alpha_r: f64,
    pub beta_r: f64,
    pub spread: f64,
    pub sat_index: usize,
}

const RESCALE_LIMIT: f64 = 1e100;

// h²·g beyond which the Numerov recurrence is not trusted
const NUMEROV_STIFF: f64 = 2.25;

impl Mesh {
    pub fn build(p: &PotentialModel, k: f64, plan: &MeshPlan, refine: u32, with_half: bool) -> Self {
        let factor = 1usize << refine;
        let h = plan.h / factor as f64;
        let n_in = plan.n_in * factor;
        let n_out = plan.n_out * factor;
        let n = n_in + n_out + 1;
        let mut r = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for i in 0..n {
            let x = plan.x_anchor + (i as f64 - n_in as f64) * h;
            let ri = to_r(plan.mapping, x);
            let (ai, bi) = coefficients(plan.mapping, p.value(ri), ri, k);
            r.push(ri);
            a.push(ai);
            b.push(bi);
        }
        let (mut a_half, mut b_half) = (Vec::new(), Vec::new());
        if with_half {
            a_half.reserve(n - 1);
            b_half.reserve(n - 1);
            for i in 0..n - 1 {
                let x = plan.x_anchor + (i as f64 + 0.5 - n_in as f64) * h;
                let ri = to_r(plan.mapping, x);
                let (ai, bi) = coefficients(plan.mapping, p.value(ri), ri, k);
                a_half.push(ai);
                b_half.push(bi);
            }
        }
        Self {
            mapping: plan.mapping,
            h,
            anchor: n_in,
            r,
            a,
            b,
            a_half,
            b_half,
            k,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    #[inline]
    pub fn g(&self, i: usize, e: f64) -> f64 {
        self.a[i] - e * self.b[i]
    }

    #[inline]
    fn g_half(&self, i: usize, e: f64) -> f64 {
        self.a_half[i] - e * self.b_half[i]
    }

    /// Node closest to radius `r`, clamped so both Numerov sweeps have room.
    pub fn node_near(&self, r: f64) -> usize {
        let x = to_x(self.mapping, r);
        let x0 = to_x(self.mapping, self.r[0]);
        let i = ((x - x0) / self.h).round().max(0.0) as usize;
        i.clamp(self.anchor.min(self.len() - 3), self.len() - 3)
    }

    /// Nodes [lo, hi] around the anchor where h²·g stays below the stiffness
    /// limit. Sweeps start at these nodes; below the mesh's planning energy
    /// the outer nodes can be too deep in the forbidden region for Numerov.
    pub fn numerov_span(&self, e: f64) -> (usize, usize) {
        let lim = NUMEROV_STIFF / (self.h * self.h);
        let mut lo = self.anchor;
        while lo > 0 && self.g(lo - 1, e) < lim {
            lo -= 1;
        }
        let mut hi = self.anchor;
        while hi + 1 < self.len() && self.g(hi + 1, e) < lim {
            hi += 1;
        }
        (lo, hi)
    }

    /// Numerov from node `lo` outward to `m + 1`; returns (w_m, w_{m+1}, zeros before node m).
    fn numerov_out(&self, e: f64, lo: usize, m: usize) -> Result<(f64, f64, usize)> {
        let c = self.h * self.h / 12.0;
        let (mut w_prev, mut w) = (0.0, 1e-20);
        let (mut g_prev, mut g_cur) = (self.g(lo, e), self.g(lo + 1, e));
        let mut zeros = 0;
        let mut sign = 1.0;
        for i in lo + 1..=m {
            let g_next = self.g(i + 1, e);
            let w_next =
                (2.0 * (1.0 + 5.0 * c * g_cur) * w - (1.0 - c * g_prev) * w_prev) / (1.0 - c * g_next);
            if !w_next.is_finite() {
                return Err(Error::Integration {
                    node: i + 1,
                    msg: "non-finite value in outward Numerov sweep".into(),
                });
            }
            if i < m {
                sign_changes_step(&mut sign, w_next, &mut zeros);
            }
            w_prev = w;
            w = w_next;
            g_prev = g_cur;
            g_cur = g_next;
            let big = w.abs().max(w_prev.abs());
            if big > RESCALE_LIMIT {
                w /= big;
                w_prev /= big;
            }
        }
        // w_prev = w_m, w = w_{m+1}
        Ok((w_prev, w, zeros))
    }

    /// Numerov from node `last` inward to `m`; returns (w_m, w_{m+1}, zeros beyond node m+1).
    fn numerov_in(&self, e: f64, last: usize, m: usize) -> Result<(f64, f64, usize)> {
        let c = self.h * self.h / 12.0;
        let (mut w_prev, mut w) = (0.0, 1e-20);
        let (mut g_prev, mut g_cur) = (self.g(last, e), self.g(last - 1, e));
        let mut zeros = 0;
        let mut sign = 1.0;
        let mut i = last - 1;
        while i > m {
            let g_next = self.g(i - 1, e);
            let w_next =
                (2.0 * (1.0 + 5.0 * c * g_cur) * w - (1.0 - c * g_prev) * w_prev) / (1.0 - c * g_next);
            if !w_next.is_finite() {
                return Err(Error::Integration {
                    node: i - 1,
                    msg: "non-finite value in inward Numerov sweep".into(),
                });
            }
            if i - 1 > m {
                sign_changes_step(&mut sign, w_next, &mut zeros);
            }
            w_prev = w;
            w = w_next;
            g_prev = g_cur;
            g_cur = g_next;
            let big = w.abs().max(w_prev.abs());
            if big > RESCALE_LIMIT {
                w /= big;
                w_prev /= big;
            }
            i -= 1;
        }
        // w = w_m, w_prev = w_{m+1}
        Ok((w, w_prev, zeros))
    }

    fn slope_scale(&self, e: f64, m: usize) -> f64 {
        let g_mid = 0.5 * (self.g(m, e) + self.g(m + 1, e));
        let dg = (self.g(m + 1, e) - self.g(m, e)) / self.h;
        let airy = dg.abs().powf(2.0 / 3.0);
        1.0 / g_mid.abs().max(airy).max(1e-300).sqrt()
    }

    /// Prüfer phases of the two Numerov boundary solutions at x_{m+½}.
    pub fn numerov_phase(&self, e: f64, m: usize) -> Result<Phase> {
        let (lo, hi) = self.numerov_span(e);
        let m = self.clamp_match(m, lo, hi)?;
        let (om, om1, mut zl) = self.numerov_out(e, lo, m)?;
        let (im, im1, mut zr) = self.numerov_in(e, hi, m)?;
        // zeros of the linear interpolant on [x_m, x_{m+1}] split at the midpoint
        if om * om1 < 0.0 && om.abs() < om1.abs() {
            zl += 1;
        }
        if im * im1 < 0.0 && im1.abs() < im.abs() {
            zr += 1;
        }
        let s = self.slope_scale(e, m);
        let left = SidePhase {
            zeros: zl,
            theta: line_angle(s * (om1 - om) / self.h, 0.5 * (om + om1)),
        };
        let right = SidePhase {
            zeros: zr,
            theta: line_angle(-s * (im1 - im) / self.h, 0.5 * (im + im1)),
        };
        Ok(Phase { left, right })
    }

    /// Glued Numerov solution (outward up to m, inward beyond), for node counting.
    pub fn numerov_assembled(&self, e: f64, m: usize) -> Result<Vec<f64>> {
        let (lo, hi) = self.numerov_span(e);
        let m = self.clamp_match(m, lo, hi)?;
        let n = self.len();
        let c = self.h * self.h / 12.0;
        let mut out = vec![0.0; n];
        out[lo + 1] = 1e-20;
        for i in lo + 1..=m {
            out[i + 1] = (2.0 * (1.0 + 5.0 * c * self.g(i, e)) * out[i]
                - (1.0 - c * self.g(i - 1, e)) * out[i - 1])
                / (1.0 - c * self.g(i + 1, e));
            let big = out[i + 1].abs();
            if big > RESCALE_LIMIT {
                out[..=i + 1].iter_mut().for_each(|w| *w /= big);
            }
        }
        let mut inn = vec![0.0; n];
        inn[hi - 1] = 1e-20;
        let mut i = hi - 1;
        while i > m {
            inn[i - 1] = (2.0 * (1.0 + 5.0 * c * self.g(i, e)) * inn[i]
                - (1.0 - c * self.g(i + 1, e)) * inn[i + 1])
                / (1.0 - c * self.g(i - 1, e));
            let big = inn[i - 1].abs();
            if big > RESCALE_LIMIT {
                inn[i - 1..].iter_mut().for_each(|w| *w /= big);
            }
            i -= 1;
        }
        let scale = if inn[m] != 0.0 && out[m].abs() > 1e-300 {
            out[m] / inn[m]
        } else {
            out[m + 1] / inn[m + 1]
        };
        out[m + 1..].copy_from_slice(&inn[m + 1..]);
        out[m + 1..].iter_mut().for_each(|w| *w *= scale);
        Ok(out)
    }

    fn clamp_match(&self, m: usize, lo: usize, hi: usize) -> Result<usize> {
        if hi < lo + 3 {
            return Err(Error::Integration {
                node: lo,
                msg: "too few stable nodes for a Numerov sweep".into(),
            });
        }
        Ok(m.clamp(lo + 1, hi - 2))
    }

    /// RK4 propagation of the canonical pair from the anchor in direction `dir`
    /// (+1 outward, −1 inward) until the ratio β/α saturates.
    pub fn canonical_run(
        &self,
        e: f64,
        dir: isize,
        init_alpha: (f64, f64),
        init_beta: (f64, f64),
        cfg: &GridConfig,
        keep_derivs: bool,
    ) -> Result<CanonicalRun> {
        let hs = dir as f64 * self.h;
        let (mut wa, mut da) = init_alpha;
        let (mut wb, mut db) = init_beta;
        let mut values = vec![(wa, wb)];
        let mut derivs = if keep_derivs { vec![(da, db)] } else { Vec::new() };
        let mut log_scale = vec![0.0];
        let mut scale_acc = 0.0;
        let mut checkpoints: Vec<f64> = Vec::with_capacity(64);
        let mut i = self.anchor;
        let mut steps = 0usize;
        let last = self.len() - 1;
        let mut last_spread = f64::INFINITY;
        let spacing = cfg.checkpoint_spacing.min(self.deep_steps(e, dir) / 3).max(1);
        loop {
            let next = match dir {
                1 if i < last => i + 1,
                -1 if i > 0 => i - 1,
                _ => {
                    return Err(Error::Saturation {
                        direction: if dir > 0 { "outward" } else { "inward" },
                        r_edge: self.r[i],
                        spread: last_spread,
                    })
                }
            };
            let g0 = self.g(i, e);
            let gm = self.g_half(i.min(next), e);
            let g1 = self.g(next, e);
            let step = |w: f64, d: f64| -> (f64, f64) {
                let k1w = d;
                let k1d = g0 * w;
                let k2w = d + 0.5 * hs * k1d;
                let k2d = gm * (w + 0.5 * hs * k1w);
                let k3w = d + 0.5 * hs * k2d;
                let k3d = gm * (w + 0.5 * hs * k2w);
                let k4w = d + hs * k3d;
                let k4d = g1 * (w + hs * k3w);
                (
                    w + hs / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
                    d + hs / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
                )
            };
            (wa, da) = step(wa, da);
            (wb, db) = step(wb, db);
            if !(wa.is_finite() && wb.is_finite() && da.is_finite() && db.is_finite()) {
                return Err(Error::Integration {
                    node: next,
                    msg: "non-finite canonical function".into(),
                });
            }
            let big = wa.abs().max(wb.abs()).max(da.abs()).max(db.abs());
            if big > RESCALE_LIMIT {
                wa /= big;
                wb /= big;
                da /= big;
                db /= big;
                scale_acc += big.ln();
            }
            i = next;
            steps += 1;
            values.push((wa, wb));
            log_scale.push(scale_acc);
            if keep_derivs {
                derivs.push((da, db));
            }

            if steps % spacing == 0 {
                if g1 > 0.0 {
                    let theta = wb.atan2(wa);
                    checkpoints.push(theta);
                    let c = checkpoints.len();
                    if c >= 3 {
                        let t = &checkpoints[c - 3..];
                        let d1 = wrap_half_pi(t[1] - t[0]);
                        let d2 = wrap_half_pi(t[2] - t[1]);
                        let rel = [0.0, d1, d1 + d2];
                        let spread = rel.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                            - rel.iter().cloned().fold(f64::INFINITY, f64::min);
                        last_spread = spread;
                        if spread < cfg.plateau_tol {
                            let norm = wa.abs().max(wb.abs());
                            return Ok(CanonicalRun {
                                values,
                                derivs,
                                log_scale,
                                alpha_r: wa / norm,
                                beta_r: wb / norm,
                                spread,
                                sat_index: i,
                            });
                        }
                    }
                } else {
                    checkpoints.clear();
                }
            }
        }
    }

    /// Nodes in direction `dir` lying more than 20 e-foldings past the turning point.
    fn deep_steps(&self, e: f64, dir: isize) -> usize {
        let mut i = self.anchor;
        let mut decay = 0.0;
        let mut deep = 0;
        loop {
            let next = match dir {
                1 if i + 1 < self.len() => i + 1,
                -1 if i > 0 => i - 1,
                _ => return deep,
            };
            let g = self.g(next, e);
            if g <= 0.0 {
                decay = 0.0;
                deep = 0;
            } else {
                decay += self.h * g.sqrt();
                if decay > 20.0 {
                    deep += 1;
                }
            }
            i = next;
        }
    }

    /// Canonical initial data at the anchor in the integration variable,
    /// corresponding to (y, y′) = (1, 0) and (0, 1) in r.
    pub fn canonical_initial(&self) -> ((f64, f64), (f64, f64)) {
        match self.mapping {
            Mapping::Uniform => ((1.0, 0.0), (0.0, 1.0)),
            Mapping::LogUniform => {
                let r0 = self.r[self.anchor];
                let s = r0.sqrt();
                ((1.0 / s, -0.5 / s), (0.0, s))
            }
        }
    }

    /// Zeros of the boundary solution c_α·α + c_β·β from the anchor out to a
    /// few e-foldings past the turning point, where the decaying branch
    /// is still resolved.
    fn boundary_zeros(&self, run: &CanonicalRun, dir: isize, e: f64, c: (f64, f64)) -> usize {
        let mut zeros = 0;
        let mut sign = 0.0;
        let n = self.resolved_steps(run, dir, e);
        for &(wa, wb) in &run.values[..n] {
            sign_changes_step(&mut sign, c.0 * wa + c.1 * wb, &mut zeros);
        }
        zeros
    }

    /// Number of stored nodes of `run` up to four e-foldings past the turning point.
    pub fn resolved_steps(&self, run: &CanonicalRun, dir: isize, e: f64) -> usize {
        let mut decay = 0.0;
        for step in 0..run.values.len() {
            let idx = (self.anchor as isize + dir * step as isize) as usize;
            let g = self.g(idx, e);
            if g <= 0.0 {
                decay = 0.0;
            } else {
                decay += self.h * g.sqrt();
                if decay > 4.0 {
                    return step + 1;
                }
            }
        }
        run.values.len()
    }

    /// Prüfer phases at the anchor from saturated canonical functions.
    pub fn cfm_phase(&self, e: f64, cfg: &GridConfig) -> Result<(Phase, CanonicalRun, CanonicalRun)> {
        let (ia, ib) = self.canonical_initial();
        let outward = self.canonical_run(e, 1, ia, ib, cfg, false)?;
        let inward = self.canonical_run(e, -1, ia, ib, cfg, false)?;
        let phase = self.phase_from_runs(e, &inward, &outward);
        Ok((phase, inward, outward))
    }

    pub fn phase_from_runs(&self, e: f64, inward: &CanonicalRun, outward: &CanonicalRun) -> Phase {
        let f0 = (e - self.anchor_potential()) / self.k;
        let s = 1.0 / f0.abs().max(1e-300).sqrt();
        // boundary solution data (y, y') at the anchor: (β_R, −α_R)
        let cl = (inward.beta_r, -inward.alpha_r);
        let cr = (outward.beta_r, -outward.alpha_r);
        let left = SidePhase {
            zeros: self.boundary_zeros(inward, -1, e, cl),
            theta: line_angle(s * cl.1, cl.0),
        };
        let right = SidePhase {
            zeros: self.boundary_zeros(outward, 1, e, cr),
            theta: line_angle(-s * cr.1, cr.0),
        };
        Phase { left, right }
    }

    /// Glued CFM boundary solutions on the nodes both runs visited.
    pub fn cfm_assembled(&self, inward: &CanonicalRun, outward: &CanonicalRun) -> Vec<f64> {
        let cl = (inward.beta_r, -inward.alpha_r);
        let cr = (outward.beta_r, -outward.alpha_r);
        let scale = if cr.0.abs() > 1e-8 * cr.1.abs() {
            cl.0 / cr.0
        } else {
            cl.1 / cr.1
        };
        let mut w: Vec<f64> = inward
            .values
            .iter()
            .rev()
            .map(|&(a, b)| cl.0 * a + cl.1 * b)
            .collect();
        w.extend(
            outward
                .values
                .iter()
                .skip(1)
                .map(|&(a, b)| scale * (cr.0 * a + cr.1 * b)),
        );
        w
    }

    // V at the anchor recovered from the stored coefficients
    fn anchor_potential(&self) -> f64 {
        let i = self.anchor;
        match self.mapping {
            Mapping::Uniform => self.a[i] * self.k,
            Mapping::LogUniform => (self.a[i] - 0.25) / self.b[i],
        }
    }
}

fn wrap_half_pi(mut d: f64) -> f64 {
    while d > PI / 2.0 {
        d -= PI;
    }
    while d <= -PI / 2.0 {
        d += PI;
    }
    d
}
