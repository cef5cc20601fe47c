//! First-order WKB quantization and the LeRoy–Bernstein threshold law.
//!
//! Φ(E) = (1/π)∫√((E − V)/K) dr between the turning points; levels satisfy
//! Φ(E_v) = v + ½. Near threshold of a −Cₙ/rⁿ tail, dv/dE = Φ′(E) gives
//! (−E_v)^κ = (v_D − v)·H_n with κ = (n − 2)/(2n).

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::potentials::{PotentialModel, Well};
use crate::propagators::mesh::turning_points;
use crate::quadrature::integrate;
use crate::roots::brent;
use crate::units::kinetic_coefficient;

const QUAD_TOL: f64 = 1e-12;

/// ∫ g(r) dr over [a, b] where g has inverse-square-root (or square-root)
/// behaviour at turning points `a` (if `sing_a`) and `b` (if `sing_b`).
///
/// Each singular end is mapped through r = r_turn ± t², which makes the
/// integrand smooth; long outer ranges are cut into geometric pieces.
fn turning_point_integral(
    g: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    sing_a: bool,
    sing_b: bool,
    abs_tol: Option<f64>,
) -> Result<f64> {
    // roundoff in E − V near a turning point is noise the adaptive rule
    // would chase forever, so an absolute floor is always set
    let floor = match abs_tol {
        Some(t) => t,
        None => 1e-3 * QUAD_TOL * pieces(g, a, b, sing_a, sing_b, 1e-6, 0.0)?.abs(),
    };
    pieces(g, a, b, sing_a, sing_b, QUAD_TOL, floor)
}

fn pieces(
    g: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    sing_a: bool,
    sing_b: bool,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = a;
    let mut hi = b;
    if sing_a {
        let end = a + 0.25 * (b - a).min(a);
        let w = (end - a).sqrt();
        total += integrate(|t| 2.0 * t * g(a + t * t), 0.0, w, rel_tol, abs_tol)?.value;
        lo = end;
    }
    if sing_b {
        let start = b - 0.25 * (b - lo).min(b);
        let w = (b - start).sqrt();
        total += integrate(|t| 2.0 * t * g(b - t * t), 0.0, w, rel_tol, abs_tol)?.value;
        hi = start;
    }
    // geometric pieces keep the adaptive rule away from huge flat intervals
    let mut x = lo;
    while x < hi {
        let next = if x > 0.0 { (2.0 * x).min(hi) } else { hi };
        let next = if hi - next < 1e-3 * (hi - lo) { hi } else { next };
        total += integrate(|r| g(r), x, next, rel_tol, abs_tol)?.value;
        x = next;
    }
    Ok(total)
}

// inner turning point when V rises above E there, else the domain edge
fn limits(p: &PotentialModel, well: Well, e: f64) -> Result<(f64, f64, bool)> {
    let (dom_lo, _) = p.domain();
    let (inner, outer) = turning_points(p, well, e)?;
    let inner_is_turning = p.value(inner) >= e - 1e-12 * e.abs() && inner > dom_lo;
    Ok((inner, outer, inner_is_turning))
}

fn check_energy(p: &PotentialModel, e: f64) -> Result<Well> {
    let well = p.well()?;
    if !(e > well.v_min && e < 0.0) {
        return Err(Error::domain(format!(
            "E = {e} outside (V_min = {}, 0)",
            well.v_min
        )));
    }
    Ok(well)
}

/// Φ(E) = (1/π)∫√((E − V(r))/K) dr over the classically allowed region.
pub fn wkb_phase(p: &PotentialModel, mu: f64, e: f64) -> Result<f64> {
    let k = kinetic_coefficient(mu)?;
    let well = check_energy(p, e)?;
    let (a, b, sing_a) = limits(p, well, e)?;
    let g = |r: f64| ((e - p.value(r)) / k).max(0.0).sqrt();
    // the integral is πΦ, so QUAD_TOL is an absolute floor on the phase
    Ok(turning_point_integral(&g, a, b, sing_a, true, Some(QUAD_TOL))? / PI)
}

/// dΦ/dE = (1/2π√K)∫dr/√(E − V(r)).
pub fn wkb_phase_derivative(p: &PotentialModel, mu: f64, e: f64) -> Result<f64> {
    let k = kinetic_coefficient(mu)?;
    let well = check_energy(p, e)?;
    let (a, b, sing_a) = limits(p, well, e)?;
    let g = |r: f64| {
        let d = e - p.value(r);
        if d > 0.0 {
            1.0 / d.sqrt()
        } else {
            0.0
        }
    };
    Ok(turning_point_integral(&g, a, b, sing_a, true, None)? / (2.0 * PI * k.sqrt()))
}

/// Semiclassical level: root of Φ(E) = v + ½.
pub fn wkb_level(p: &PotentialModel, mu: f64, v: i64) -> Result<f64> {
    if v < 0 {
        return Err(Error::domain(format!("vibrational quantum number must be >= 0, got {v}")));
    }
    let well = p.well()?;
    let kappa = p.tail().and_then(|t| t.kappa()).unwrap_or(0.5);
    let target = v as f64 + 0.5;
    let e_of = |t: f64| -t.powf(1.0 / kappa);
    let t_of = |e: f64| (-e).powf(kappa);

    let e_lo = well.v_min * (1.0 - 1e-12);
    let e_hi = -1e-14 * well.v_min.abs();
    let f = |t: f64| wkb_phase(p, mu, e_of(t)).map(|ph| ph - target);
    let (t_hi, t_lo) = (t_of(e_hi), t_of(e_lo));
    let f_hi = f(t_hi)?;
    if f_hi < 0.0 {
        return Err(Error::domain(format!(
            "level v = {v} is not bound semiclassically (Φ(0⁻) = {:.6})",
            f_hi + target
        )));
    }
    let f_lo = f(t_lo)?;
    let t = brent(f, t_hi, t_lo, f_hi, f_lo, 1e-12 * t_hi.max(1e-300), 300)?
        .ok_or_else(|| Error::domain(format!("no WKB root bracketed for v = {v}")))?;
    Ok(e_of(t))
}

/// H_n from the closed form
/// (n − 2)·√π·Γ(1 + 1/n)·√K / (Cₙ^(1/n)·Γ(½ + 1/n)).
pub fn lb_slope_closed_form(n: u32, cn: f64, mu: f64) -> Result<f64> {
    check_lb_args(n, cn)?;
    let k = kinetic_coefficient(mu)?;
    let nf = n as f64;
    Ok((nf - 2.0) * PI.sqrt() * gamma(1.0 + 1.0 / nf) * k.sqrt()
        / (cn.powf(1.0 / nf) * gamma(0.5 + 1.0 / nf)))
}

fn check_lb_args(n: u32, cn: f64) -> Result<()> {
    if n <= 2 {
        return Err(Error::domain(format!(
            "LeRoy-Bernstein law requires n > 2, got n = {n}"
        )));
    }
    if !(cn > 0.0 && cn.is_finite()) {
        return Err(Error::domain(format!("Cn must be positive, got {cn}")));
    }
    Ok(())
}

/// I_n = ∫₀¹ x^(n/2)/√(1 − xⁿ) dx, the bare-tail Φ′ integral in the
/// reduced variable x = r/r_turn.
fn tail_integral(n: u32) -> Result<f64> {
    let nf = n as f64;
    let head = integrate(|x| x.powf(0.5 * nf) / (1.0 - x.powf(nf)).sqrt(), 0.0, 0.5, QUAD_TOL, 0.0)?;
    // x = 1 − t²; 1 − xⁿ via expm1/ln_1p keeps full precision near x = 1
    let w = 0.5f64.sqrt();
    let tail = integrate(
        |t| {
            if t == 0.0 {
                return 2.0 / nf.sqrt();
            }
            let x = 1.0 - t * t;
            2.0 * t * x.powf(0.5 * nf) / (-(nf * (-t * t).ln_1p()).exp_m1()).sqrt()
        },
        0.0,
        w,
        QUAD_TOL,
        0.0,
    )?;
    Ok(head.value + tail.value)
}

/// LeRoy–Bernstein slope H_n for the tail −Cₙ/rⁿ, in cm^κ per unit v.
///
/// For the bare tail Φ′(E) = r_t·I_n/(2π√(K|E|)) with r_t = (Cₙ/|E|)^(1/n),
/// so κ|E|^(κ−1)/Φ′(E) does not depend on E and one quadrature for I_n
/// fixes H_n. The result is checked against the closed form.
pub fn lb_slope(n: u32, cn: f64, mu: f64) -> Result<f64> {
    check_lb_args(n, cn)?;
    let k = kinetic_coefficient(mu)?;
    let nf = n as f64;
    let kappa = (nf - 2.0) / (2.0 * nf);
    let h = kappa * 2.0 * PI * k.sqrt() / (cn.powf(1.0 / nf) * tail_integral(n)?);
    let closed = lb_slope_closed_form(n, cn, mu)?;
    let rel = (h - closed).abs() / closed;
    if rel > 1e-6 {
        return Err(Error::domain(format!(
            "H_{n}: quadrature {h:.12e} and closed form {closed:.12e} differ by {rel:.1e}"
        )));
    }
    Ok(h)
}

/// Threshold slope of a full potential: κ(−E)^(κ−1)/Φ′(E) at
/// E = −10⁻⁴, −10⁻⁵, −10⁻⁶·|V_min|, Richardson-extrapolated to E → 0⁻.
pub fn threshold_slope(p: &PotentialModel, mu: f64) -> Result<f64> {
    let tail = p
        .tail()
        .ok_or_else(|| Error::domain("threshold slope needs a power-law tail"))?;
    let kappa = tail
        .kappa()
        .ok_or_else(|| Error::domain(format!("LeRoy-Bernstein law requires n > 2, got n = {}", tail.n)))?;
    let depth = p.well()?.v_min.abs();
    let ladder = [-1e-4 * depth, -1e-5 * depth, -1e-6 * depth];
    let mut h = [0.0; 3];
    for (slot, &e) in h.iter_mut().zip(&ladder) {
        *slot = kappa * (-e).powf(kappa - 1.0) / wkb_phase_derivative(p, mu, e)?;
    }
    // H(E) = H_n·(1 + c·|E|^(1/2 + 1/n) + …) once the inner well's share
    // of Φ′ becomes constant; one Richardson step removes c
    let s = 0.1f64.powf(0.5 + 1.0 / tail.n as f64);
    Ok((h[2] - s * h[1]) / (1.0 - s))
}

/// LeRoy–Bernstein law (−E_v)^κ = (v_D − v)·H_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LbModel {
    pub n: u32,
    pub h_n: f64,
    pub v_d: f64,
    pub kappa: f64,
}

impl LbModel {
    pub fn new(n: u32, h_n: f64, v_d: f64) -> Result<Self> {
        if n <= 2 {
            return Err(Error::domain(format!("LeRoy-Bernstein law requires n > 2, got n = {n}")));
        }
        if !(h_n > 0.0 && h_n.is_finite()) || !v_d.is_finite() {
            return Err(Error::domain(format!("invalid LB parameters H = {h_n}, v_D = {v_d}")));
        }
        let nf = n as f64;
        Ok(Self {
            n,
            h_n,
            v_d,
            kappa: (nf - 2.0) / (2.0 * nf),
        })
    }
}

/// E_v = −[(v_D − v)·H_n]^(1/κ).
pub fn lb_energy(m: &LbModel, v: f64) -> Result<f64> {
    if !(v < m.v_d) {
        return Err(Error::domain(format!("v = {v} is not below v_D = {}", m.v_d)));
    }
    Ok(-((m.v_d - v) * m.h_n).powf(1.0 / m.kappa))
}

/// Inverse of `lb_energy`: v = v_D − (−E)^κ/H_n.
pub fn lb_quantum_number(m: &LbModel, e: f64) -> Result<f64> {
    if !(e < 0.0) {
        return Err(Error::domain(format!("E = {e} must be negative")));
    }
    Ok(m.v_d - (-e).powf(m.kappa) / m.h_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_morse, make_power_tail, MorseParams, Wall};

    fn morse() -> PotentialModel {
        make_morse(MorseParams {
            de: 1000.0,
            a: 1.0,
            re: 3.0,
        })
        .unwrap()
    }

    // (√De − √−E)/(a√K)
    fn morse_phase(e: f64, mu: f64) -> f64 {
        let k = kinetic_coefficient(mu).unwrap();
        let a = 1.0;
        (1000f64.sqrt() - (-e).sqrt()) / (a * k.sqrt())
    }

    #[test]
    fn morse_phase_closed_form() {
        for e in [-999.0, -900.0, -500.0, -120.0, -3.0, -1e-3] {
            let q = wkb_phase(&morse(), 10.0, e).unwrap();
            let exact = morse_phase(e, 10.0);
            assert!(((q - exact) / exact).abs() < 1e-9, "E = {e}: {q} vs {exact}");
        }
    }

    #[test]
    fn phase_vanishes_at_bottom_and_increases() {
        let p = make_power_tail(3, 1e4, Some(Wall { m: 6, cm: 1e5 })).unwrap();
        let vmin = p.well().unwrap().v_min;
        assert!(wkb_phase(&p, 11.5, vmin * (1.0 - 1e-9)).unwrap() < 1e-3);
        let mut prev = 0.0;
        for i in 1..=100 {
            let e = vmin * (1.0 - i as f64 / 100.5);
            let ph = wkb_phase(&p, 11.5, e).unwrap();
            assert!(ph > prev, "E = {e}");
            assert!(wkb_phase_derivative(&p, 11.5, e).unwrap() > 0.0);
            prev = ph;
        }
    }

    #[test]
    fn wkb_exact_for_morse() {
        let k = kinetic_coefficient(10.0).unwrap();
        let omega = 2.0 * (1000.0 * k).sqrt();
        for v in [0, 1, 7, 15, 23] {
            let x = v as f64 + 0.5;
            let exact = -1000.0 + omega * x - omega * omega * x * x / 4000.0;
            let e = wkb_level(&morse(), 10.0, v).unwrap();
            assert!(((e - exact) / exact).abs() < 1e-9, "v = {v}");
        }
        assert!(wkb_level(&morse(), 10.0, 24).is_err());
        assert!(wkb_level(&morse(), 10.0, -1).is_err());
    }

    #[test]
    fn harmonic_spacing_at_the_bottom() {
        // deep wide well: near-constant spacing equal to the curvature frequency
        let p = make_morse(MorseParams {
            de: 1e5,
            a: 0.5,
            re: 3.0,
        })
        .unwrap();
        let k = kinetic_coefficient(20.0).unwrap();
        let omega = 2.0 * 0.5 * (1e5 * k).sqrt();
        let e: Vec<f64> = (0..4).map(|v| wkb_level(&p, 20.0, v).unwrap()).collect();
        for w in e.windows(2) {
            assert!(((w[1] - w[0]) / omega - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn slope_routes_agree() {
        for n in [3, 4, 6] {
            let q = lb_slope(n, 1.0, 1.0).unwrap();
            let c = lb_slope_closed_form(n, 1.0, 1.0).unwrap();
            assert!(((q - c) / c).abs() < 1e-6, "n = {n}");
        }
    }

    #[test]
    fn slope_scaling_laws() {
        let base = lb_slope(3, 1e4, 11.0).unwrap();
        for a in [2.0, 10.0] {
            let scaled = lb_slope(3, a * 1e4, 11.0).unwrap();
            let rel = scaled / (a.powf(-1.0 / 3.0) * base) - 1.0;
            assert!(rel.abs() < 1e-10, "a = {a}: {rel:e}");
            let heavy = lb_slope(3, 1e4, a * 11.0).unwrap();
            let rel = heavy / (a.powf(-0.5) * base) - 1.0;
            assert!(rel.abs() < 1e-10, "mass x{a}: {rel:e}");
        }
    }

    #[test]
    fn slope_needs_n_above_two() {
        assert!(lb_slope(2, 1.0, 1.0).is_err());
        assert!(lb_slope(1, 1.0, 1.0).is_err());
        assert!(lb_slope(3, -1.0, 1.0).is_err());
    }

    #[test]
    fn full_potential_threshold_slope_tends_to_tail_value() {
        let p = make_power_tail(3, 1e4, Some(Wall { m: 6, cm: 1e5 })).unwrap();
        let h = threshold_slope(&p, 11.494_888_5).unwrap();
        let tail = lb_slope_closed_form(3, 1e4, 11.494_888_5).unwrap();
        assert!(((h - tail) / tail).abs() < 1e-4, "{h} vs {tail}");
    }

    #[test]
    fn lb_law_unit_case_and_round_trip() {
        let m = LbModel::new(3, 0.0257, 40.3).unwrap();
        assert!((m.kappa - 1.0 / 6.0).abs() < 1e-15);
        let e = lb_energy(&m, m.v_d - 1.0 / m.h_n).unwrap();
        assert!((e + 1.0).abs() < 1e-12);
        for v in [0.0, 5.0, 39.0, 40.0] {
            let back = lb_quantum_number(&m, lb_energy(&m, v).unwrap()).unwrap();
            assert!((back - v).abs() < 1e-12, "{v} -> {back}");
        }
        assert!(lb_energy(&m, 40.3).is_err());
        assert!(lb_energy(&m, 41.0).is_err());
    }
}
