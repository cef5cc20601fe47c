//! LeRoy–Bernstein fits to the top of a level list.
//!
//! Least squares through (v, (−E_v)^κ): the slope is −H_n and the
//! intercept H_n·v_D.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::semiclassical::{lb_energy, lb_slope, LbModel};

/// Which levels enter the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitWindow {
    /// The highest `k` levels.
    Last(usize),
    /// Levels with v in [first, last].
    Range { first: usize, last: usize },
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow::Last(8)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LbFitResult {
    pub model: LbModel,
    /// (v, (−E_v)^κ − H_n·(v_D − v)).
    pub residuals: Vec<(usize, f64)>,
    pub rms: f64,
    /// First and last v used.
    pub window: (usize, usize),
    pub weighted: bool,
    /// Cₙ implied by H_n at the supplied reduced mass.
    pub inferred_cn: Option<f64>,
}

impl LbFitResult {
    /// Adds the Cₙ for which the tail's threshold slope equals the fitted H_n
    /// (H_n ∝ Cₙ^(−1/n)).
    pub fn with_inferred_cn(mut self, mu: f64) -> Result<Self> {
        let unit = lb_slope(self.model.n, 1.0, mu)?;
        self.inferred_cn = Some((unit / self.model.h_n).powi(self.model.n as i32));
        Ok(self)
    }
}

fn select(levels: &[(usize, f64)], window: FitWindow) -> Vec<(usize, f64)> {
    let mut sorted = levels.to_vec();
    sorted.sort_by_key(|l| l.0);
    match window {
        FitWindow::Last(k) => sorted[sorted.len().saturating_sub(k)..].to_vec(),
        FitWindow::Range { first, last } => sorted
            .into_iter()
            .filter(|l| l.0 >= first && l.0 <= last)
            .collect(),
    }
}

/// Unweighted fit of the LeRoy–Bernstein law to `levels` (v, E).
pub fn fit_lb(levels: &[(usize, f64)], n: u32, window: FitWindow) -> Result<LbFitResult> {
    fit(levels, n, window, false)
}

/// Fit with weights ∝ (−E)^(−κ), which evens out the threshold crowding.
pub fn fit_lb_weighted(levels: &[(usize, f64)], n: u32, window: FitWindow) -> Result<LbFitResult> {
    fit(levels, n, window, true)
}

fn fit(levels: &[(usize, f64)], n: u32, window: FitWindow, weighted: bool) -> Result<LbFitResult> {
    if n <= 2 {
        return Err(Error::domain(format!("LeRoy-Bernstein law requires n > 2, got n = {n}")));
    }
    let kappa = (n as f64 - 2.0) / (2.0 * n as f64);
    let pts = select(levels, window);
    if pts.len() < 3 {
        return Err(Error::domain(format!(
            "fit window holds {} levels, at least 3 required",
            pts.len()
        )));
    }
    if let Some(&(v, e)) = pts.iter().find(|(_, e)| !(*e < 0.0)) {
        return Err(Error::domain(format!("level v = {v} has non-negative energy {e}")));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|p| (-p.1).powf(kappa)).collect();
    let ws: Vec<f64> = if weighted {
        ys.iter().map(|y| 1.0 / y).collect()
    } else {
        vec![1.0; ys.len()]
    };
    let sw: f64 = ws.iter().sum();
    let xm = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((x, y), w) in xs.iter().zip(&ys).zip(&ws) {
        sxx += w * (x - xm) * (x - xm);
        sxy += w * (x - xm) * (y - ym);
    }
    if sxx == 0.0 {
        return Err(Error::FitDegenerate("all levels share one v".into()));
    }
    let slope = sxy / sxx;
    let h_n = -slope;
    if !(h_n > 1e-12 * ym.abs()) {
        return Err(Error::FitDegenerate(format!(
            "fitted slope {slope:e} does not decrease toward threshold"
        )));
    }
    // centred form keeps v_D exact under integer shifts of v
    let v_d = xm + ym / h_n;
    let v_max = pts.last().unwrap().0;
    if !(v_d > v_max as f64) {
        return Err(Error::FitDegenerate(format!(
            "fitted v_D = {v_d} does not exceed the highest fitted v = {v_max}"
        )));
    }
    let model = LbModel::new(n, h_n, v_d)?;
    let residuals: Vec<(usize, f64)> = pts
        .iter()
        .zip(&ys)
        .map(|(p, y)| (p.0, y - h_n * (v_d - p.0 as f64)))
        .collect();
    let rms = (residuals.iter().map(|r| r.1 * r.1).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(LbFitResult {
        model,
        residuals,
        rms,
        window: (pts[0].0, v_max),
        weighted,
        inferred_cn: None,
    })
}

/// Energies for the next `count` integers above the fit window that lie below v_D.
pub fn extrapolate_levels(fit: &LbFitResult, count: usize) -> Result<Vec<(usize, f64)>> {
    if count == 0 {
        return Err(Error::domain("count must be at least 1"));
    }
    let start = fit.window.1 + 1;
    (start..start + count)
        .take_while(|&v| (v as f64) < fit.model.v_d)
        .map(|v| Ok((v, lb_energy(&fit.model, v as f64)?)))
        .collect()
}
