//! Integration of the reduced radial equation y″ = f(r)·y.
//!
//! Two independent integrators live here: the three-term Numerov recurrence
//! and the canonical-function propagation (classical fourth-order
//! Runge–Kutta on the pair α, β with unit initial data at an anchor).

mod cfm;
pub(crate) mod mesh;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub use cfm::{cfm_propagate, CanonicalPair, CfmResult};
pub use mesh::GridConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mapping {
    Uniform,
    /// Uniform in ln r.
    LogUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outward,
    Inward,
}

/// Equally spaced grid in r or ln r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialGrid {
    pub r_start: f64,
    pub r_end: f64,
    /// Step in the mapped variable (Å for `Uniform`, ln-units for `LogUniform`).
    pub step_h: f64,
    pub mapping: Mapping,
    steps: usize,
}

impl RadialGrid {
    pub const MIN_STEPS: usize = 64;

    pub fn new(r_start: f64, r_end: f64, steps: usize, mapping: Mapping) -> Result<Self> {
        if !(r_start < r_end) || !r_start.is_finite() || !r_end.is_finite() {
            return Err(Error::domain(format!("grid needs r_start < r_end, got [{r_start}, {r_end}]")));
        }
        if steps < Self::MIN_STEPS {
            return Err(Error::domain(format!(
                "grid needs at least {} steps, got {steps}",
                Self::MIN_STEPS
            )));
        }
        if mapping == Mapping::LogUniform && !(r_start > 0.0) {
            return Err(Error::domain("log-uniform grid requires r_start > 0"));
        }
        let span = mesh::to_x(mapping, r_end) - mesh::to_x(mapping, r_start);
        Ok(Self {
            r_start,
            r_end,
            step_h: span / steps as f64,
            mapping,
            steps,
        })
    }

    /// Grid with step close to `h` (rounded so the end point is hit exactly).
    pub fn with_step(r_start: f64, r_end: f64, h: f64, mapping: Mapping) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::domain("grid step must be positive"));
        }
        let span = if mapping == Mapping::LogUniform && r_start > 0.0 {
            (r_end / r_start).ln()
        } else {
            r_end - r_start
        };
        let steps = (span / h).round().max(1.0) as usize;
        Self::new(r_start, r_end, steps, mapping)
    }

    /// Uniform, switching to log-uniform when r_end/r_start > 50.
    pub fn auto(r_start: f64, r_end: f64, steps: usize) -> Result<Self> {
        let mapping = if r_start > 0.0 && r_end / r_start > 50.0 {
            Mapping::LogUniform
        } else {
            Mapping::Uniform
        };
        Self::new(r_start, r_end, steps, mapping)
    }

    // no validation: used for grids that mirror an existing mesh
    pub(crate) fn from_parts(r_start: f64, r_end: f64, step_h: f64, mapping: Mapping, steps: usize) -> Self {
        Self {
            r_start,
            r_end,
            step_h,
            mapping,
            steps,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn x_start(&self) -> f64 {
        mesh::to_x(self.mapping, self.r_start)
    }

    pub fn r(&self, i: usize) -> f64 {
        if i == self.steps {
            return self.r_end;
        }
        mesh::to_r(self.mapping, self.x_start() + i as f64 * self.step_h)
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.r(i)).collect()
    }
}

/// Values of one solution on a grid.
///
/// Stored values may carry a per-node rescaling: the true amplitude at node
/// i is `y[i] * exp(scale_exponent[i])`.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionTrace {
    pub grid: RadialGrid,
    pub y: Vec<f64>,
    /// dy/dr at every node when the integrator provides it.
    pub dy: Option<Vec<f64>>,
    /// dy/dr at the node where the integration stopped.
    pub y_prime_end: f64,
    pub node_count: usize,
    pub scale_exponent: Vec<f64>,
}

impl SolutionTrace {
    pub fn true_value(&self, i: usize) -> f64 {
        self.y[i] * self.scale_exponent[i].exp()
    }

    /// Debug dump as CSV `r,y,scale_exponent`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,y,scale_exponent")?;
        for (i, (y, s)) in self.y.iter().zip(&self.scale_exponent).enumerate() {
            writeln!(out, "{:.12e},{:.12e},{:.6}", self.grid.r(i), y, s)?;
        }
        Ok(())
    }
}

/// Strict sign changes of a sequence; exact zeros are skipped so a touching
/// zero between opposite signs counts once.
pub fn count_sign_changes(values: &[f64]) -> usize {
    let mut prev = 0.0;
    let mut count = 0;
    for &v in values {
        if v != 0.0 && v.is_finite() {
            let s = v.signum();
            if prev != 0.0 && s != prev {
                count += 1;
            }
            prev = s;
        }
    }
    count
}

pub fn count_nodes(trace: &SolutionTrace) -> usize {
    count_sign_changes(&trace.y)
}

const TRACE_RESCALE: f64 = 1e150;

/// Numerov integration of y″ = f(r)·y across `grid`.
///
/// `y0`, `y1` are the values at the first two nodes in the direction of
/// travel. On a log-uniform grid the equation is transformed internally
/// (y = √r·w) and the returned values are again y(r).
pub fn numerov_propagate(
    f: impl Fn(f64) -> f64,
    grid: &RadialGrid,
    y0: f64,
    y1: f64,
    direction: Direction,
) -> Result<SolutionTrace> {
    let n = grid.len();
    let h = grid.step_h;
    let c = h * h / 12.0;
    let radii = grid.radii();
    let g: Vec<f64> = radii
        .iter()
        .map(|&r| match grid.mapping {
            Mapping::Uniform => f(r),
            Mapping::LogUniform => r * r * f(r) + 0.25,
        })
        .collect();
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::Integration {
            node: i,
            msg: "coefficient function not finite".into(),
        });
    }
    let to_w = |y: f64, r: f64| match grid.mapping {
        Mapping::Uniform => y,
        Mapping::LogUniform => y / r.sqrt(),
    };

    // integrate in travel order, then put back in grid order
    let order: Vec<usize> = match direction {
        Direction::Outward => (0..n).collect(),
        Direction::Inward => (0..n).rev().collect(),
    };
    let mut w = vec![0.0; n];
    let mut scale = vec![0.0; n];
    w[0] = to_w(y0, radii[order[0]]);
    w[1] = to_w(y1, radii[order[1]]);
    let mut acc = 0.0;
    for k in 1..n - 1 {
        let (gp, gc, gn) = (g[order[k - 1]], g[order[k]], g[order[k + 1]]);
        let mut next = (2.0 * (1.0 + 5.0 * c * gc) * w[k] - (1.0 - c * gp) * w[k - 1]) / (1.0 - c * gn);
        if !next.is_finite() {
            return Err(Error::Integration {
                node: order[k + 1],
                msg: "Numerov value overflowed".into(),
            });
        }
        if next.abs() > TRACE_RESCALE {
            let s = next.abs();
            next /= s;
            w[k] /= s;
            acc += s.ln();
            scale[k] = acc;
        }
        w[k + 1] = next;
        scale[k + 1] = acc;
    }

    // derivative at the last node reached, O(h³) one-sided formula
    let (wl, wp) = (w[n - 1], w[n - 2]);
    let (gl, gp) = (g[order[n - 1]], g[order[n - 2]]);
    let dir_sign = if direction == Direction::Outward { 1.0 } else { -1.0 };
    // w[n-2] and w[n-1] always share one scale factor
    let dw_dx = dir_sign * (wl - wp + h * h * (2.0 * gl * wl + gp * wp) / 6.0) / h;

    let r_last = radii[order[n - 1]];
    let y_prime_end = match grid.mapping {
        Mapping::Uniform => dw_dx,
        Mapping::LogUniform => (dw_dx + 0.5 * wl) / r_last.sqrt(),
    };

    let mut y = vec![0.0; n];
    let mut scale_exponent = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        y[i] = match grid.mapping {
            Mapping::Uniform => w[k],
            Mapping::LogUniform => w[k] * radii[i].sqrt(),
        };
        scale_exponent[i] = scale[k];
    }
    let node_count = count_sign_changes(&y);
    Ok(SolutionTrace {
        grid: *grid,
        y,
        dy: None,
        y_prime_end,
        node_count,
        scale_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_invariants() {
        assert!(RadialGrid::new(1.0, 1.0, 100, Mapping::Uniform).is_err());
        assert!(RadialGrid::new(0.0, 1.0, 63, Mapping::Uniform).is_err());
        assert!(RadialGrid::new(0.0, 1.0, 64, Mapping::LogUniform).is_err());
        let g = RadialGrid::auto(1.0, 100.0, 200).unwrap();
        assert_eq!(g.mapping, Mapping::LogUniform);
        assert!((g.r(200) - 100.0).abs() < 1e-12);
        assert!((g.r(100) - 10.0).abs() < 1e-12);
        let g = RadialGrid::auto(1.0, 40.0, 200).unwrap();
        assert_eq!(g.mapping, Mapping::Uniform);
    }

    #[test]
    fn node_counting() {
        assert_eq!(count_sign_changes(&[1.0, -1.0]), 1);
        assert_eq!(count_sign_changes(&[1.0, 0.0, -1.0]), 1);
        assert_eq!(count_sign_changes(&[1.0, 0.0, 1.0]), 0);
        let samples: Vec<f64> = (1..2000).map(|i| (3.0 * PI * i as f64 / 2000.0).sin()).collect();
        assert_eq!(count_sign_changes(&samples), 2);
    }

    #[test]
    fn zero_potential_gives_straight_line() {
        let grid = RadialGrid::new(0.0, 5.0, 500, Mapping::Uniform).unwrap();
        let h = grid.step_h;
        let t = numerov_propagate(|_| 0.0, &grid, 0.0, h, Direction::Outward).unwrap();
        for i in 0..grid.len() {
            assert!((t.y[i] - grid.r(i)).abs() < 1e-12);
        }
        assert!((t.y_prime_end - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exponential_solution() {
        let grid = RadialGrid::new(0.0, 10.0, 10_000, Mapping::Uniform).unwrap();
        let h = grid.step_h;
        let t = numerov_propagate(|_| 1.0, &grid, 0.0, h.sinh(), Direction::Outward).unwrap();
        let end = t.true_value(grid.len() - 1);
        assert!((end / 10f64.sinh() - 1.0).abs() < 1e-8);
        assert!((t.y_prime_end / 10f64.cosh() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sine_solution() {
        let grid = RadialGrid::new(0.0, PI, 4000, Mapping::Uniform).unwrap();
        let h = grid.step_h;
        let t = numerov_propagate(|_| -1.0, &grid, 0.0, h.sin(), Direction::Outward).unwrap();
        let interior = &t.y[1..grid.len() - 1];
        assert_eq!(count_sign_changes(interior), 0);
        assert!(t.y[grid.len() - 1].abs() < 1e-8);
    }

    #[test]
    fn fourth_order_global_convergence() {
        // y(10) for y'' = -y with exact start values
        let err = |steps: usize| {
            let grid = RadialGrid::new(0.0, 10.0, steps, Mapping::Uniform).unwrap();
            let t = numerov_propagate(|_| -1.0, &grid, 0.0, grid.step_h.sin(), Direction::Outward)
                .unwrap();
            (t.y[steps] - 10f64.sin()).abs()
        };
        let order = (err(100) / err(200)).log2();
        assert!((3.7..=4.3).contains(&order), "observed order {order}");
    }

    #[test]
    fn log_uniform_matches_closed_form() {
        // y'' = y on [1, 100] with y = sinh(r - 1)
        let grid = RadialGrid::new(1.0, 60.0, 40_000, Mapping::LogUniform).unwrap();
        let r1 = grid.r(1);
        let t = numerov_propagate(|_| 1.0, &grid, 0.0, (r1 - 1.0).sinh(), Direction::Outward).unwrap();
        let i = grid.len() - 1;
        let rel = t.true_value(i) / 59f64.sinh() - 1.0;
        assert!(rel.abs() < 1e-7, "{rel}");
    }

    #[test]
    fn direction_symmetry() {
        let (a, b) = (0.5, 4.0);
        let f = |r: f64| -4.0 + (r - 2.0).powi(2);
        let mirrored = |r: f64| f(a + b - r);
        let grid = RadialGrid::new(a, b, 3000, Mapping::Uniform).unwrap();
        let out = numerov_propagate(f, &grid, 0.0, 1e-3, Direction::Outward).unwrap();
        let inn = numerov_propagate(mirrored, &grid, 0.0, 1e-3, Direction::Inward).unwrap();
        let n = grid.len();
        for i in 0..n {
            let lhs = out.y[i];
            let rhs = inn.y[n - 1 - i];
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-3), "node {i}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn rescaling_keeps_values_finite() {
        let grid = RadialGrid::new(0.0, 800.0, 80_000, Mapping::Uniform).unwrap();
        let t = numerov_propagate(|_| 1.0, &grid, 0.0, 1e-2, Direction::Outward).unwrap();
        assert!(t.y.iter().all(|v| v.is_finite()));
        let last = grid.len() - 1;
        assert!(t.scale_exponent[last] > 300.0);
        // ln y(800) ≈ 800 - ln 2 + ln(y1/sinh h)
        let ln_true = t.y[last].ln() + t.scale_exponent[last];
        let expected = 800.0 - 2f64.ln() + (1e-2 / grid.step_h.sinh()).ln();
        assert!((ln_true - expected).abs() < 1e-5);
    }

    #[test]
    fn trace_csv_dump() {
        let grid = RadialGrid::new(0.0, 1.0, 64, Mapping::Uniform).unwrap();
        let t = numerov_propagate(|_| 0.0, &grid, 0.0, grid.step_h, Direction::Outward).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,y,scale_exponent\n"));
        assert_eq!(text.lines().count(), 66);
    }
}
