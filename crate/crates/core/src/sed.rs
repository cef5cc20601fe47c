//! Scaled energy differences.
//!
//! For levels E₁ < E₂ < … < 0 (1-based index i = v + 1) the entry at i ≥ 2
//! is SED_i = [(−E_{i−1})^κ − (−E_i)^κ]/H. A spectrum obeying the
//! LeRoy–Bernstein law exactly with H = H_n gives SED ≡ 1.

use serde::Serialize;

use crate::error::{Error, Result};

/// Where the normalisation H came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HSource {
    Explicit,
    /// Fixed so the entry at `index` equals `target`.
    Calibrated { index: usize, target: f64 },
    /// Threshold slope of a −Cₙ/rⁿ tail.
    LbSlope { n: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SedEntry {
    pub index: usize,
    pub energy: f64,
    pub sed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SedSequence {
    pub kappa: f64,
    pub h: f64,
    pub h_source: HSource,
    /// Label of the energy list the entries came from.
    pub source: String,
    pub entries: Vec<SedEntry>,
}

impl SedSequence {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.sed).collect()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.index == index).map(|e| e.sed)
    }
}

fn check_levels(levels: &[(usize, f64)], kappa: f64) -> Result<()> {
    if levels.len() < 2 {
        return Err(Error::domain("at least two levels are needed"));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    for w in levels.windows(2) {
        let ((i0, e0), (i1, e1)) = (w[0], w[1]);
        if i1 != i0 + 1 {
            return Err(Error::domain(format!("level indices not consecutive: {i0}, {i1}")));
        }
        if !(e1 > e0) {
            return Err(Error::domain(format!(
                "energies not strictly increasing at index {i1}: {e0} then {e1}"
            )));
        }
    }
    if let Some(&(i, e)) = levels.iter().find(|(_, e)| !(*e < 0.0)) {
        return Err(Error::domain(format!("energy at index {i} is not negative: {e}")));
    }
    Ok(())
}

/// SED entries for consecutive (index, E) pairs.
pub fn sed_sequence(levels: &[(usize, f64)], kappa: f64, h: f64, h_source: HSource) -> Result<SedSequence> {
    check_levels(levels, kappa)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("H must be positive, got {h}")));
    }
    let entries = levels
        .windows(2)
        .map(|w| SedEntry {
            index: w[1].0,
            energy: w[1].1,
            sed: ((-w[0].1).powf(kappa) - (-w[1].1).powf(kappa)) / h,
        })
        .collect();
    Ok(SedSequence {
        kappa,
        h,
        h_source,
        source: String::new(),
        entries,
    })
}

/// Numbers a plain ascending energy list from index 1.
pub fn indexed(energies: &[f64]) -> Vec<(usize, f64)> {
    energies.iter().enumerate().map(|(i, &e)| (i + 1, e)).collect()
}

/// H such that the entry at `index` equals `target`.
pub fn calibrate_h(levels: &[(usize, f64)], kappa: f64, index: usize, target: f64) -> Result<f64> {
    check_levels(levels, kappa)?;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::domain(format!("target SED must be positive, got {target}")));
    }
    let pos = levels
        .iter()
        .position(|(i, _)| *i == index)
        .filter(|&p| p >= 1)
        .ok_or_else(|| Error::domain(format!("index {index} has no preceding level")))?;
    let diff = (-levels[pos - 1].1).powf(kappa) - (-levels[pos].1).powf(kappa);
    if !(diff > 0.0) {
        return Err(Error::domain(format!("degenerate level pair at index {index}")));
    }
    Ok(diff / target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Rising,
    Falling,
}

/// Maximal stretch over which SED moves in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Run {
    pub start_index: usize,
    pub end_index: usize,
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    /// (index, |SED − 1|).
    pub deviations: Vec<(usize, f64)>,
    pub closest_index: usize,
    pub closest_deviation: f64,
    pub last_index: usize,
    pub last_deviation: f64,
    pub runs: Vec<Run>,
    /// Entries whose step from the previous value exceeds ten times the
    /// median step.
    pub outliers: Vec<usize>,
}

pub fn sed_trend_report(s: &SedSequence) -> Result<TrendReport> {
    let e = &s.entries;
    if e.len() < 3 {
        return Err(Error::domain("trend report needs at least three entries"));
    }
    let deviations: Vec<(usize, f64)> = e.iter().map(|x| (x.index, (x.sed - 1.0).abs())).collect();
    let (closest_index, closest_deviation) = deviations
        .iter()
        .fold((0, f64::INFINITY), |acc, &(i, d)| if d < acc.1 { (i, d) } else { acc });
    let &(last_index, last_deviation) = deviations.last().unwrap();

    let mut runs: Vec<Run> = Vec::new();
    for w in e.windows(2) {
        let trend = if w[1].sed > w[0].sed {
            Trend::Rising
        } else if w[1].sed < w[0].sed {
            Trend::Falling
        } else {
            continue;
        };
        match runs.last_mut() {
            Some(r) if r.trend == trend && r.end_index == w[0].index => r.end_index = w[1].index,
            _ => runs.push(Run {
                start_index: w[0].index,
                end_index: w[1].index,
                trend,
            }),
        }
    }

    let steps: Vec<f64> = e.windows(2).map(|w| (w[1].sed - w[0].sed).abs()).collect();
    let mut sorted = steps.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let outliers = steps
        .iter()
        .zip(&e[1..])
        .filter(|(&st, _)| st > 10.0 * median && st > 1e-9)
        .map(|(_, x)| x.index)
        .collect();

    Ok(TrendReport {
        deviations,
        closest_index,
        closest_deviation,
        last_index,
        last_deviation,
        runs,
        outliers,
    })
}
