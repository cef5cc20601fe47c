//! Bound-level search: bracketing by level count, root refinement of the
//! phase mismatch, and a grid-halving ladder with Richardson extrapolation.
//!
//! Roots are refined in t = (−E)^κ with κ = (n − 2)/(2n) from the tail
//! exponent (½ for Morse and n ≤ 2), which spreads the near-threshold
//! levels evenly.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::{PotentialModel, Well};
use crate::propagators::mesh::{turning_points, GridConfig, Mesh, MeshPlan, Phase};
use crate::propagators::{count_sign_changes, Mapping, RadialGrid, SolutionTrace};
use crate::roots::brent;
use crate::units::kinetic_coefficient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Engine {
    #[serde(rename = "CFM")]
    Cfm,
    Numerov,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Cfm => "CFM",
            Engine::Numerov => "Numerov",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cfm" => Ok(Engine::Cfm),
            "numerov" => Ok(Engine::Numerov),
            _ => Err(Error::domain(format!("unknown engine '{s}' (expected cfm or numerov)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Relative root tolerance in t = (−E)^κ.
    pub tol: f64,
    pub grid: GridConfig,
    /// The scan stops at E = −threshold_fraction·|V_min|.
    pub threshold_fraction: f64,
    /// Refuse potentials holding more levels than this below the scan ceiling.
    pub max_levels: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            grid: GridConfig::default(),
            threshold_fraction: 1e-12,
            max_levels: 5000,
        }
    }
}

/// Energy interval holding exactly level v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub v: usize,
    pub e_lo: f64,
    pub e_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    /// Base step of each rung in the integration variable.
    pub h_values: Vec<f64>,
    pub e_estimates: Vec<f64>,
    pub e_extrapolated: f64,
    /// |E(finest rung) − E(extrapolated)|.
    pub err_estimate: f64,
    /// log₂ of the ratio of successive differences, when defined.
    pub observed_order: Option<f64>,
}

impl AccuracyReport {
    fn from_ladder(h_values: Vec<f64>, e_estimates: Vec<f64>) -> Self {
        let k = e_estimates.len();
        let (last, prev) = (e_estimates[k - 1], e_estimates[k - 2]);
        let e_extrapolated = last + (last - prev) / 15.0;
        let observed_order = (k >= 3)
            .then(|| {
                let d1 = e_estimates[k - 3] - e_estimates[k - 2];
                let d2 = e_estimates[k - 2] - e_estimates[k - 1];
                (d1 / d2).log2()
            })
            .filter(|o| o.is_finite());
        Self {
            h_values,
            e_estimates,
            e_extrapolated,
            err_estimate: (last - e_extrapolated).abs(),
            observed_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub v: usize,
    /// Extrapolated eigenvalue, cm⁻¹.
    pub energy: f64,
    pub report: AccuracyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelFailure {
    pub v: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSpectrum {
    pub mu: f64,
    pub potential: String,
    pub engine: Engine,
    pub v_min: f64,
    pub levels: Vec<Level>,
    /// Highest energy probed by the scan.
    pub scan_ceiling: f64,
    pub failures: Vec<LevelFailure>,
}

impl LevelSpectrum {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// Levels found and the depth down to which the threshold region was scanned.
    pub fn threshold_statement(&self) -> String {
        format!(
            "{} levels found; scan resolved levels with E <= {:.3e} cm-1 ({:.0e} of the well depth)",
            self.levels.len(),
            self.scan_ceiling,
            (self.scan_ceiling / self.v_min).abs()
        )
    }

    /// Checks the ordering and range invariants.
    pub fn check_invariants(&self) -> Result<()> {
        for (i, l) in self.levels.iter().enumerate() {
            if l.v != i {
                return Err(Error::Solver {
                    v: i,
                    msg: format!("level list has a gap: expected v = {i}, found v = {}", l.v),
                });
            }
            if !(l.energy > self.v_min && l.energy < 0.0) {
                return Err(Error::Solver {
                    v: l.v,
                    msg: format!("E = {} outside ({}, 0)", l.energy, self.v_min),
                });
            }
            if i > 0 && !(l.energy > self.levels[i - 1].energy) {
                return Err(Error::Solver {
                    v: l.v,
                    msg: "energies not strictly increasing".into(),
                });
            }
        }
        Ok(())
    }
}

struct Problem<'a> {
    p: &'a PotentialModel,
    k: f64,
    well: Well,
    kappa: f64,
    engine: Engine,
    cfg: &'a SolverConfig,
}

impl<'a> Problem<'a> {
    fn new(p: &'a PotentialModel, mu: f64, engine: Engine, cfg: &'a SolverConfig) -> Result<Self> {
        let k = kinetic_coefficient(mu)?;
        let well = p.well()?;
        let kappa = p.tail().and_then(|t| t.kappa()).unwrap_or(0.5);
        Ok(Self {
            p,
            k,
            well,
            kappa,
            engine,
            cfg,
        })
    }

    fn t_of(&self, e: f64) -> f64 {
        (-e).powf(self.kappa)
    }

    fn e_of(&self, t: f64) -> f64 {
        -t.powf(1.0 / self.kappa)
    }

    fn e_top(&self) -> f64 {
        -self.cfg.threshold_fraction * self.well.v_min.abs()
    }

    fn plan(&self, e_top: f64) -> Result<MeshPlan> {
        MeshPlan::for_energy(self.p, self.k, e_top, self.well.r_min, &self.cfg.grid)
    }

    fn mesh(&self, plan: &MeshPlan, rung: u32) -> Mesh {
        Mesh::build(self.p, self.k, plan, rung, self.engine == Engine::Cfm)
    }

    fn phase(&self, mesh: &Mesh, m: usize, e: f64) -> Result<Phase> {
        match self.engine {
            Engine::Numerov => mesh.numerov_phase(e, m),
            Engine::Cfm => mesh.cfm_phase(e, &self.cfg.grid).map(|(ph, _, _)| ph),
        }
    }

    /// Phase at `e` on a coarse mesh planned for `e` itself.
    fn probe(&self, e: f64) -> Result<Phase> {
        let plan = self.plan(e)?;
        let mesh = self.mesh(&plan, 0);
        let m = mesh.node_near(plan.tp_out);
        self.phase(&mesh, m, e)
    }

    fn count(&self, e: f64) -> Result<usize> {
        Ok(self.probe(e)?.count())
    }

    fn brackets(&self) -> Result<Vec<Bracket>> {
        let e_top = self.e_top();
        let n_top = self.count(e_top)?;
        if n_top == 0 {
            return Ok(Vec::new());
        }
        if n_top > self.cfg.max_levels {
            return Err(Error::domain(format!(
                "{n_top} levels below {e_top:e} exceeds max_levels = {}",
                self.cfg.max_levels
            )));
        }
        let mut found = Vec::with_capacity(n_top);
        // (e_lo, count_lo, e_hi, count_hi)
        let mut stack = vec![(self.well.v_min, 0usize, e_top, n_top)];
        while let Some((e_lo, c_lo, e_hi, c_hi)) = stack.pop() {
            match c_hi - c_lo {
                0 => continue,
                1 => {
                    found.push(Bracket {
                        v: c_lo,
                        e_lo,
                        e_hi,
                    });
                    continue;
                }
                _ => {}
            }
            let e_mid = self.e_of(0.5 * (self.t_of(e_lo) + self.t_of(e_hi)));
            if !(e_mid > e_lo && e_mid < e_hi) {
                return Err(Error::Solver {
                    v: c_lo,
                    msg: format!("levels {c_lo}..{c_hi} not separable near E = {e_mid:e}"),
                });
            }
            // separate meshes per probe can disagree by one right at a level
            let c_mid = self.count(e_mid)?.clamp(c_lo, c_hi);
            stack.push((e_lo, c_lo, e_mid, c_mid));
            stack.push((e_mid, c_mid, e_hi, c_hi));
        }
        found.sort_by_key(|b| b.v);
        Ok(found)
    }

    fn solve(&self, b: &Bracket) -> Result<Level> {
        let v = b.v;
        let target = (v + 1) as f64 * PI;
        let floor = self.well.v_min;
        let mut e_lo = b.e_lo.max(floor + 1e-6 * (b.e_hi - floor));
        let mut e_hi = b.e_hi;

        // make sure rung 0 sees a sign change, widening the bracket if needed
        let mut attempt = 0;
        let (plan, m_r, f_lo, f_hi) = loop {
            let plan = self.plan(e_hi)?;
            let mesh = self.mesh(&plan, 0);
            let e_mid = self.e_of(0.5 * (self.t_of(e_lo) + self.t_of(e_hi)));
            let m_r = turning_points(self.p, self.well, e_mid)?.1;
            let m = mesh.node_near(m_r);
            let f_lo = self.phase(&mesh, m, e_lo)?.sum() - target;
            let f_hi = self.phase(&mesh, m, e_hi)?.sum() - target;
            if f_lo < 0.0 && f_hi > 0.0 {
                break (plan, m_r, f_lo, f_hi);
            }
            attempt += 1;
            if attempt > 8 {
                return Err(Error::Solver {
                    v,
                    msg: format!(
                        "bracket [{e_lo:e}, {e_hi:e}] lost: phase residuals {f_lo:.3e}, {f_hi:.3e}"
                    ),
                });
            }
            let width = self.t_of(e_lo) - self.t_of(e_hi);
            if f_lo >= 0.0 {
                let t = (self.t_of(e_lo) + 0.25 * width).min(self.t_of(floor));
                e_lo = self.e_of(t).max(floor + 1e-9 * (e_hi - floor));
            }
            if f_hi <= 0.0 {
                let t = (self.t_of(e_hi) - 0.25 * width).max(0.5 * self.t_of(self.e_top()));
                e_hi = self.e_of(t);
            }
        };

        let rungs = self.cfg.grid.rungs.max(3);
        let (t_lo, t_hi) = (self.t_of(e_lo), self.t_of(e_hi));
        let mut roots: Vec<f64> = Vec::with_capacity(rungs);
        let mut h_values = Vec::with_capacity(rungs);
        let mut finest = None;
        for rung in 0..rungs {
            let mesh = self.mesh(&plan, rung as u32);
            let m = mesh.node_near(m_r);
            let resid = |t: f64| -> Result<f64> {
                Ok(self.phase(&mesh, m, self.e_of(t))?.sum() - target)
            };
            let xtol = self.cfg.tol * t_hi.max(1e-300);
            let mut root = None;
            if rung >= 2 {
                // t grows as E falls, so the residual decreases in t
                let d = (roots[rung - 1] - roots[rung - 2]).abs();
                let step = (4.0 * d).max(1e3 * xtol);
                let (a, c) = ((roots[rung - 1] - step).max(t_hi), (roots[rung - 1] + step).min(t_lo));
                let (fa, fc) = (resid(a)?, resid(c)?);
                root = brent(resid, a, c, fa, fc, xtol, 200)?;
            }
            let root = match root {
                Some(r) => r,
                None => {
                    let (fa, fc) = if rung == 0 {
                        (f_hi, f_lo)
                    } else {
                        (resid(t_hi)?, resid(t_lo)?)
                    };
                    brent(resid, t_hi, t_lo, fa, fc, xtol, 200)?.ok_or_else(|| Error::Solver {
                        v,
                        msg: format!("no sign change on grid rung {rung} (residuals {fa:.3e}, {fc:.3e})"),
                    })?
                }
            };
            roots.push(root);
            h_values.push(mesh.h);
            if rung + 1 == rungs {
                finest = Some((mesh, m));
            }
        }

        let e_estimates: Vec<f64> = roots.iter().map(|&t| self.e_of(t)).collect();
        let report = AccuracyReport::from_ladder(h_values, e_estimates);
        let (mesh, m) = finest.expect("at least one rung");
        let e_last = *report.e_estimates.last().unwrap();
        let nodes = self.node_count(&mesh, m, e_last)?;
        if nodes != v {
            return Err(Error::Solver {
                v,
                msg: format!("wavefunction at E = {e_last:e} has {nodes} nodes"),
            });
        }
        Ok(Level {
            v,
            energy: report.e_extrapolated,
            report,
        })
    }

    fn node_count(&self, mesh: &Mesh, m: usize, e: f64) -> Result<usize> {
        Ok(match self.engine {
            Engine::Numerov => count_sign_changes(&mesh.numerov_assembled(e, m)?),
            Engine::Cfm => {
                let (_, inward, outward) = mesh.cfm_phase(e, &self.cfg.grid)?;
                let w = mesh.cfm_assembled(&inward, &outward);
                let n_in = inward.values.len();
                let lo = n_in - mesh.resolved_steps(&inward, -1, e);
                let hi = n_in - 1 + mesh.resolved_steps(&outward, 1, e);
                count_sign_changes(&w[lo..hi])
            }
        })
    }
}

/// Normalised phase mismatch at `e` and the number of levels below it.
///
/// The value is sin(ψ₋ + ψ₊), ψ± being the Prüfer phases of the solutions
/// regular at either boundary; it is the Wronskian of the two solutions
/// normalised to unit amplitude, continuous in E, and changes sign at every
/// eigenvalue.
pub fn mismatch(
    p: &PotentialModel,
    mu: f64,
    e: f64,
    engine: Engine,
    cfg: &SolverConfig,
) -> Result<(f64, usize)> {
    let prob = Problem::new(p, mu, engine, cfg)?;
    if !(e > prob.well.v_min && e < 0.0) {
        return Err(Error::domain(format!(
            "E = {e} outside (V_min = {}, 0)",
            prob.well.v_min
        )));
    }
    let phase = prob.probe(e)?;
    Ok((phase.sum().sin(), phase.count()))
}

/// One bracket per bound level below the scan ceiling; empty without a well.
pub fn bracket_levels(
    p: &PotentialModel,
    mu: f64,
    engine: Engine,
    cfg: &SolverConfig,
) -> Result<Vec<Bracket>> {
    if p.well().is_err() {
        return Ok(Vec::new());
    }
    Problem::new(p, mu, engine, cfg)?.brackets()
}

pub fn solve_level(
    p: &PotentialModel,
    mu: f64,
    v: usize,
    engine: Engine,
    cfg: &SolverConfig,
) -> Result<Level> {
    let prob = Problem::new(p, mu, engine, cfg)?;
    let brackets = prob.brackets()?;
    let b = brackets.get(v).ok_or_else(|| Error::Solver {
        v,
        msg: format!("only {} bound levels below the scan ceiling", brackets.len()),
    })?;
    prob.solve(b)
}

/// All levels, solved in parallel after a sequential bracketing pass.
pub fn solve_spectrum(
    p: &PotentialModel,
    mu: f64,
    engine: Engine,
    cfg: &SolverConfig,
) -> Result<LevelSpectrum> {
    let mut spectrum = LevelSpectrum {
        mu,
        potential: p.label(),
        engine,
        v_min: p.well().map(|w| w.v_min).unwrap_or(0.0),
        levels: Vec::new(),
        scan_ceiling: 0.0,
        failures: Vec::new(),
    };
    if p.well().is_err() {
        kinetic_coefficient(mu)?;
        return Ok(spectrum);
    }
    let prob = Problem::new(p, mu, engine, cfg)?;
    spectrum.scan_ceiling = prob.e_top();
    let brackets = prob.brackets()?;
    let results: Vec<Result<Level>> = brackets.par_iter().map(|b| prob.solve(b)).collect();
    for (b, r) in brackets.iter().zip(results) {
        match r {
            Ok(level) => spectrum.levels.push(level),
            Err(e) => spectrum.failures.push(LevelFailure {
                v: b.v,
                message: e.to_string(),
            }),
        }
    }
    if spectrum.failures.is_empty() {
        if let Err(e) = spectrum.check_invariants() {
            spectrum.failures.push(LevelFailure {
                v: match &e {
                    Error::Solver { v, .. } => *v,
                    _ => 0,
                },
                message: e.to_string(),
            });
        }
    }
    Ok(spectrum)
}

/// Wavefunction at energy `e` (normally an eigenvalue) from the Numerov
/// sweeps glued at the outer turning point, scaled to unit maximum.
pub fn wavefunction(p: &PotentialModel, mu: f64, e: f64, cfg: &SolverConfig) -> Result<SolutionTrace> {
    let prob = Problem::new(p, mu, Engine::Numerov, cfg)?;
    if !(e > prob.well.v_min && e < 0.0) {
        return Err(Error::domain(format!("E = {e} outside (V_min = {}, 0)", prob.well.v_min)));
    }
    let plan = prob.plan(e)?;
    let mesh = prob.mesh(&plan, 0);
    let m = mesh.node_near(plan.tp_out);
    let mut y = mesh.numerov_assembled(e, m)?;
    if mesh.mapping == Mapping::LogUniform {
        y.iter_mut().zip(&mesh.r).for_each(|(w, r)| *w *= r.sqrt());
    }
    let big = y.iter().fold(0.0f64, |a, w| a.max(w.abs()));
    if big > 0.0 {
        y.iter_mut().for_each(|w| *w /= big);
    }
    let n = mesh.len();
    let grid = RadialGrid::from_parts(mesh.r[0], mesh.r[n - 1], mesh.h, mesh.mapping, n - 1);
    let slope = (y[n - 1] - y[n - 2]) / (mesh.r[n - 1] - mesh.r[n - 2]);
    Ok(SolutionTrace {
        grid,
        node_count: count_sign_changes(&y),
        y_prime_end: slope,
        scale_exponent: vec![0.0; n],
        y,
        dy: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_morse, make_power_tail, MorseParams};

    fn morse() -> PotentialModel {
        make_morse(MorseParams {
            de: 1000.0,
            a: 1.0,
            re: 3.0,
        })
        .unwrap()
    }

    fn morse_levels(mu: f64) -> Vec<f64> {
        let k = kinetic_coefficient(mu).unwrap();
        let omega = 2.0 * (1000.0 * k).sqrt();
        (0..)
            .map(|v| {
                let x = v as f64 + 0.5;
                -1000.0 + omega * x - omega * omega * x * x / 4000.0
            })
            .take_while(|&e| e < 0.0)
            .take(24)
            .collect()
    }

    #[test]
    fn engine_parsing() {
        assert_eq!("CFM".parse::<Engine>().unwrap(), Engine::Cfm);
        assert_eq!("numerov".parse::<Engine>().unwrap(), Engine::Numerov);
        assert!("dvr".parse::<Engine>().is_err());
    }

    #[test]
    fn morse_bracket_count() {
        let cfg = SolverConfig::default();
        for engine in [Engine::Numerov, Engine::Cfm] {
            let b = bracket_levels(&morse(), 10.0, engine, &cfg).unwrap();
            assert_eq!(b.len(), 24, "{engine}");
            for (i, w) in b.iter().enumerate() {
                assert_eq!(w.v, i);
                assert!(w.e_lo < w.e_hi);
            }
        }
    }

    #[test]
    fn morse_levels_match_analytic() {
        let cfg = SolverConfig::default();
        let exact = morse_levels(10.0);
        for engine in [Engine::Numerov, Engine::Cfm] {
            let s = solve_spectrum(&morse(), 10.0, engine, &cfg).unwrap();
            assert!(s.is_complete(), "{:?}", s.failures);
            assert_eq!(s.levels.len(), exact.len());
            for (l, e) in s.levels.iter().zip(&exact) {
                let rel = ((l.energy - e) / e).abs();
                assert!(rel < 1e-8, "{engine} v={} E={} exact={} rel={rel:e}", l.v, l.energy, e);
            }
        }
    }

    #[test]
    fn mismatch_changes_sign_across_level() {
        let cfg = SolverConfig::default();
        let e0 = solve_level(&morse(), 10.0, 3, Engine::Numerov, &cfg).unwrap().energy;
        for engine in [Engine::Numerov, Engine::Cfm] {
            let (below, nb) = mismatch(&morse(), 10.0, e0 - 0.5, engine, &cfg).unwrap();
            let (above, na) = mismatch(&morse(), 10.0, e0 + 0.5, engine, &cfg).unwrap();
            assert!(below * above < 0.0, "{engine}");
            assert_eq!((nb, na), (3, 4));
        }
    }

    #[test]
    fn mismatch_vanishes_at_converged_root() {
        let mut cfg = SolverConfig::default();
        cfg.grid.phase_step = 0.02;
        let e0 = morse_levels(10.0)[5];
        let (value, _) = mismatch(&morse(), 10.0, e0, Engine::Numerov, &cfg).unwrap();
        assert!(value.abs() < 1e-6, "{value:e}");
    }

    #[test]
    fn mismatch_precondition() {
        let cfg = SolverConfig::default();
        assert!(mismatch(&morse(), 10.0, -1000.0, Engine::Cfm, &cfg).is_err());
        assert!(mismatch(&morse(), 10.0, 1.0, Engine::Numerov, &cfg).is_err());
    }

    #[test]
    fn level_beyond_last_is_error() {
        let cfg = SolverConfig::default();
        assert!(matches!(
            solve_level(&morse(), 10.0, 24, Engine::Numerov, &cfg),
            Err(Error::Solver { v: 24, .. })
        ));
    }

    #[test]
    fn repulsive_potential_has_no_levels() {
        let p = make_power_tail(3, 1e4, None).unwrap();
        let cfg = SolverConfig::default();
        assert!(bracket_levels(&p, 10.0, Engine::Cfm, &cfg).unwrap().is_empty());
        let s = solve_spectrum(&p, 10.0, Engine::Numerov, &cfg).unwrap();
        assert!(s.levels.is_empty() && s.is_complete());
    }

    #[test]
    fn ladder_reports_fourth_order() {
        let cfg = SolverConfig::default();
        let l = solve_level(&morse(), 10.0, 10, Engine::Numerov, &cfg).unwrap();
        let r = &l.report;
        assert_eq!(r.h_values.len(), 3);
        assert!((r.h_values[0] / r.h_values[1] - 2.0).abs() < 1e-12);
        assert!(r.err_estimate >= 0.0);
        let order = r.observed_order.unwrap();
        assert!(order > 3.5 && order < 4.5, "{order}");
    }

    #[test]
    fn wavefunction_has_v_nodes() {
        let cfg = SolverConfig::default();
        for v in [0, 4, 11] {
            let e = solve_level(&morse(), 10.0, v, Engine::Cfm, &cfg).unwrap().energy;
            let tr = wavefunction(&morse(), 10.0, e, &cfg).unwrap();
            assert_eq!(tr.node_count, v);
            assert_eq!(tr.y.len(), tr.grid.len());
        }
    }

    #[test]
    fn invariant_checker_flags_disorder() {
        let rep = AccuracyReport::from_ladder(vec![0.1, 0.05], vec![-5.0, -5.0]);
        let mut s = LevelSpectrum {
            mu: 1.0,
            potential: "x".into(),
            engine: Engine::Cfm,
            v_min: -10.0,
            levels: vec![
                Level { v: 0, energy: -3.0, report: rep.clone() },
                Level { v: 1, energy: -4.0, report: rep.clone() },
            ],
            scan_ceiling: -1e-11,
            failures: vec![],
        };
        assert!(s.check_invariants().is_err());
        s.levels[1].energy = -2.0;
        assert!(s.check_invariants().is_ok());
        s.levels[1].v = 2;
        assert!(s.check_invariants().is_err());
    }
}
