//! Radial potential models with an attractive −Cₙ/rⁿ long-range tail.
//!
//! Four constructions are supported: a power-law tail with an optional
//! repulsive Cₘ/rᵐ wall, the same curve parametrised by depth and position
//! (`LennardJonesLike`), the Morse oscillator (used as an exactly solvable
//! check) and tabulated curves joined smoothly onto an analytic tail.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spline::CubicSpline;

/// Attractive long-range tail −Cₙ/rⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tail {
    pub n: u32,
    /// Cₙ in cm⁻¹·Åⁿ.
    pub cn: f64,
}

impl Tail {
    pub fn value(&self, r: f64) -> f64 {
        -self.cn / r.powi(self.n as i32)
    }

    /// Near-threshold exponent κ = (n − 2)/(2n); `None` for n ≤ 2.
    pub fn kappa(&self) -> Option<f64> {
        (self.n > 2).then(|| (self.n as f64 - 2.0) / (2.0 * self.n as f64))
    }
}

/// Repulsive inner wall Cₘ/rᵐ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Wall {
    pub m: u32,
    pub cm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorseParams {
    /// Well depth, cm⁻¹.
    pub de: f64,
    /// Inverse range, Å⁻¹.
    pub a: f64,
    /// Equilibrium distance, Å.
    pub re: f64,
}

/// Tabulated curve: spline through the points, blended onto the tail over the
/// last grid interval, analytic tail beyond.
#[derive(Debug, Clone)]
pub struct TabulatedCurve {
    spline: CubicSpline,
    blend_start: f64,
    r_last: f64,
}

#[derive(Debug, Clone)]
pub enum PotentialKind {
    PowerTail { wall: Option<Wall> },
    LennardJonesLike { depth: f64, r_e: f64, m: u32 },
    Morse(MorseParams),
    Tabulated(TabulatedCurve),
}

/// Location and depth of the potential well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Well {
    pub r_min: f64,
    pub v_min: f64,
}

/// An evaluatable radial potential V(r) in cm⁻¹ with r in Å.
#[derive(Debug, Clone)]
pub struct PotentialModel {
    kind: PotentialKind,
    tail: Option<Tail>,
    r_domain: (f64, f64),
    well: Option<Well>,
}

impl PotentialModel {
    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// The declared −Cₙ/rⁿ tail. Morse has an exponential tail and returns `None`.
    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    pub fn domain(&self) -> (f64, f64) {
        self.r_domain
    }

    /// Evaluates V(r), refusing radii outside the validity range.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let (lo, hi) = self.r_domain;
        if !(r >= lo && r <= hi) {
            return Err(Error::domain(format!(
                "r = {r} outside potential domain [{lo}, {hi}]"
            )));
        }
        Ok(self.value(r))
    }

    /// Evaluates V(r) without the domain check. Callers keep r inside `domain()`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::PowerTail { wall } => {
                let tail = self.tail.expect("power tail always has a tail");
                let attractive = tail.value(r);
                match wall {
                    Some(w) => w.cm / r.powi(w.m as i32) + attractive,
                    None => attractive,
                }
            }
            PotentialKind::LennardJonesLike { depth, r_e, m } => {
                let n = self.tail.expect("LJ-like always has a tail").n;
                let (m, n) = (*m as i32, n as i32);
                let x = r_e / r;
                depth / (m - n) as f64 * (n as f64 * x.powi(m) - m as f64 * x.powi(n))
            }
            PotentialKind::Morse(p) => {
                let e = (-p.a * (r - p.re)).exp();
                p.de * e * (e - 2.0)
            }
            PotentialKind::Tabulated(curve) => {
                let tail = self.tail.expect("tabulated curve always has a tail");
                if r >= curve.r_last {
                    tail.value(r)
                } else if r > curve.blend_start {
                    let s = (r - curve.blend_start) / (curve.r_last - curve.blend_start);
                    let w = s * s * (3.0 - 2.0 * s);
                    (1.0 - w) * curve.spline.eval(r) + w * tail.value(r)
                } else {
                    curve.spline.eval(r)
                }
            }
        }
    }

    /// Radius beyond which V agrees with −Cₙ/rⁿ to 10⁻⁶ relative.
    pub fn tail_onset(&self) -> Option<f64> {
        let tail = self.tail?;
        match &self.kind {
            PotentialKind::PowerTail { wall: None } => Some(self.r_domain.0),
            PotentialKind::PowerTail { wall: Some(w) } => {
                let k = (w.m - tail.n) as f64;
                Some((1e6 * w.cm / tail.cn).powf(1.0 / k))
            }
            PotentialKind::LennardJonesLike { depth, r_e, m } => {
                let cm = depth * tail.n as f64 * r_e.powi(*m as i32) / (*m - tail.n) as f64;
                let k = (*m - tail.n) as f64;
                Some((1e6 * cm / tail.cn).powf(1.0 / k))
            }
            PotentialKind::Tabulated(curve) => Some(curve.r_last),
            PotentialKind::Morse(_) => None,
        }
    }

    /// The single well used for bound-state work.
    pub fn well(&self) -> Result<Well> {
        self.well
            .ok_or_else(|| Error::InvalidModel("potential has no attractive well".into()))
    }

    /// Short descriptive identifier used in output headers.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.kind, self.tail) {
            (PotentialKind::PowerTail { wall }, Some(t)) => {
                write!(f, "power_tail(n={},Cn={}", t.n, t.cn)?;
                if let Some(w) = wall {
                    write!(f, ",m={},Cm={}", w.m, w.cm)?;
                }
                write!(f, ")")
            }
            (PotentialKind::LennardJonesLike { depth, r_e, m }, Some(t)) => {
                write!(f, "lj_like(depth={depth},re={r_e},n={},m={m})", t.n)
            }
            (PotentialKind::Morse(p), _) => write!(f, "morse(De={},a={},re={})", p.de, p.a, p.re),
            (PotentialKind::Tabulated(c), Some(t)) => write!(
                f,
                "tabulated(points={},r=[{},{}],tail_n={},Cn={})",
                c.spline.knots().len(),
                c.spline.knots()[0],
                c.r_last,
                t.n,
                t.cn
            ),
            _ => write!(f, "potential"),
        }
    }
}

fn check_tail(n: u32, cn: f64) -> Result<Tail> {
    if n < 1 {
        return Err(Error::InvalidModel(format!("tail exponent must be >= 1, got {n}")));
    }
    if !(cn > 0.0) || !cn.is_finite() {
        return Err(Error::InvalidModel(format!("tail coefficient must be positive, got {cn}")));
    }
    Ok(Tail { n, cn })
}

/// V(r) = Cₘ/rᵐ − Cₙ/rⁿ, or the bare tail when `wall` is `None`.
pub fn make_power_tail(n: u32, cn: f64, wall: Option<Wall>) -> Result<PotentialModel> {
    let tail = check_tail(n, cn)?;
    let well = match wall {
        Some(w) => {
            if w.m <= n {
                return Err(Error::InvalidModel(format!(
                    "wall exponent m = {} must exceed tail exponent n = {n}",
                    w.m
                )));
            }
            if !(w.cm > 0.0) || !w.cm.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "wall coefficient must be positive, got {}",
                    w.cm
                )));
            }
            let r_min = (w.m as f64 * w.cm / (n as f64 * cn)).powf(1.0 / (w.m - n) as f64);
            let v_min = w.cm / r_min.powi(w.m as i32) - cn / r_min.powi(n as i32);
            Some(Well { r_min, v_min })
        }
        None => None,
    };
    Ok(PotentialModel {
        kind: PotentialKind::PowerTail { wall },
        tail: Some(tail),
        r_domain: (f64::MIN_POSITIVE, f64::INFINITY),
        well,
    })
}

/// Generalised Lennard-Jones curve with depth `depth` at `r_e`:
/// V = depth/(m−n)·[n(r_e/r)ᵐ − m(r_e/r)ⁿ].
pub fn make_lj_like(depth: f64, r_e: f64, n: u32, m: u32) -> Result<PotentialModel> {
    if !(depth > 0.0) || !(r_e > 0.0) {
        return Err(Error::InvalidModel("depth and r_e must be positive".into()));
    }
    if m <= n {
        return Err(Error::InvalidModel(format!("m = {m} must exceed n = {n}")));
    }
    let cn = depth * m as f64 * r_e.powi(n as i32) / (m - n) as f64;
    let tail = check_tail(n, cn)?;
    Ok(PotentialModel {
        kind: PotentialKind::LennardJonesLike { depth, r_e, m },
        tail: Some(tail),
        r_domain: (f64::MIN_POSITIVE, f64::INFINITY),
        well: Some(Well {
            r_min: r_e,
            v_min: -depth,
        }),
    })
}

pub fn make_morse(params: MorseParams) -> Result<PotentialModel> {
    let MorseParams { de, a, re } = params;
    if !(de > 0.0 && a > 0.0 && re > 0.0) || !(de.is_finite() && a.is_finite() && re.is_finite())
    {
        return Err(Error::InvalidModel(format!(
            "Morse parameters must be positive, got De={de}, a={a}, re={re}"
        )));
    }
    Ok(PotentialModel {
        kind: PotentialKind::Morse(params),
        tail: None,
        r_domain: (f64::MIN_POSITIVE, f64::INFINITY),
        well: Some(Well {
            r_min: re,
            v_min: -de,
        }),
    })
}

/// Builds a tabulated potential from (r, V) points and the declared tail.
pub fn load_tabulated(points: &[(f64, f64)], tail_n: u32, tail_cn: f64) -> Result<PotentialModel> {
    if points.len() < 8 {
        return Err(Error::format(
            None,
            format!("need at least 8 tabulated points, got {}", points.len()),
        ));
    }
    if points.iter().any(|(r, v)| !r.is_finite() || !v.is_finite()) {
        return Err(Error::format(None, "tabulated points contain NaN or infinite values"));
    }
    if let Some(i) = points.windows(2).position(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::format(
            None,
            format!("radii must be strictly increasing (point {} -> {})", i + 1, i + 2),
        ));
    }
    if !(points[0].0 > 0.0) {
        return Err(Error::format(None, "radii must be positive"));
    }
    let tail = check_tail(tail_n, tail_cn)?;

    let (r_last, v_last) = *points.last().unwrap();
    let v_tail = tail.value(r_last);
    let rel = (v_last - v_tail).abs() / v_last.abs();
    if !(rel <= 0.05) {
        return Err(Error::TailInconsistency {
            v_last,
            v_tail,
            rel,
        });
    }

    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let spline = CubicSpline::natural(&xs, &ys)?;
    let blend_start = xs[xs.len() - 2];
    let curve = TabulatedCurve {
        spline,
        blend_start,
        r_last,
    };
    let mut model = PotentialModel {
        kind: PotentialKind::Tabulated(curve),
        tail: Some(tail),
        r_domain: (xs[0], f64::INFINITY),
        well: None,
    };
    model.well = find_tabulated_well(&model, &xs, &ys)?;
    Ok(model)
}

fn find_tabulated_well(model: &PotentialModel, xs: &[f64], ys: &[f64]) -> Result<Option<Well>> {
    let (imin, &vmin_node) = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if vmin_node >= 0.0 {
        return Ok(None);
    }
    let local_minima = (1..ys.len() - 1)
        .filter(|&i| ys[i] < ys[i - 1] && ys[i] < ys[i + 1] && ys[i] < 0.0)
        .count();
    if local_minima > 1 {
        return Err(Error::InvalidModel(format!(
            "tabulated curve has {local_minima} separate wells; a single well is required"
        )));
    }
    let lo = xs[imin.saturating_sub(1)];
    let hi = xs[(imin + 1).min(xs.len() - 1)];
    let r_min = golden_section_min(|r| model.value(r), lo, hi, 1e-12);
    Ok(Some(Well {
        r_min,
        v_min: model.value(r_min),
    }))
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > rel_tol * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Parses the tabulated-potential text format: `#` comments, a required
/// `#tail n Cn` directive, then whitespace-separated `r V` lines.
pub fn parse_tabulated(text: &str) -> Result<PotentialModel> {
    let mut tail: Option<(u32, f64)> = None;
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("tail") {
                let n = words
                    .next()
                    .and_then(|w| w.parse::<u32>().ok())
                    .ok_or_else(|| Error::format(Some(line_no), "bad tail exponent in #tail directive"))?;
                let cn = words
                    .next()
                    .and_then(|w| w.parse::<f64>().ok())
                    .ok_or_else(|| Error::format(Some(line_no), "bad tail coefficient in #tail directive"))?;
                tail = Some((n, cn));
            }
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |w: Option<&str>| -> Result<f64> {
            w.and_then(|w| w.parse::<f64>().ok())
                .ok_or_else(|| Error::format(Some(line_no), format!("expected 'r V', got '{line}'")))
        };
        let r = parse(fields.next())?;
        let v = parse(fields.next())?;
        if fields.next().is_some() {
            return Err(Error::format(Some(line_no), "more than two columns"));
        }
        points.push((r, v));
    }
    let (n, cn) = tail.ok_or_else(|| Error::format(None, "missing '#tail n Cn' directive"))?;
    load_tabulated(&points, n, cn)
}

pub fn read_tabulated_file(path: impl AsRef<Path>) -> Result<PotentialModel> {
    let text = std::fs::read_to_string(path)?;
    parse_tabulated(&text)
}
