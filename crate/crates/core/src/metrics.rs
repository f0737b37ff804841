//! Benchmark deviation metrics, all in percent of the solver's value.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("no runs to average")]
    NoRuns,
}

fn positive(what: &'static str, value: f64) -> Result<f64, MetricsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(MetricsError::NonPositive { what, value })
    }
}

/// Best relative percentage deviation `(best - bks) / best * 100`.
pub fn brpd(best: f64, bks: f64) -> Result<f64, MetricsError> {
    let best = positive("best objective", best)?;
    positive("best known solution", bks)?;
    Ok((best - bks) / best * 100.0)
}

/// Average relative percentage deviation of the runs from `bks`.
pub fn arpd(runs: &[f64], bks: f64) -> Result<f64, MetricsError> {
    if runs.is_empty() {
        return Err(MetricsError::NoRuns);
    }
    positive("best known solution", bks)?;
    let mut total = 0.0;
    for &s in runs {
        let s = positive("run objective", s)?;
        total += (s - bks) / s * 100.0;
    }
    Ok(total / runs.len() as f64)
}

/// Optimality gap `(best - lb) / best * 100` against a lower bound.
pub fn gap(best: f64, lb: f64) -> Result<f64, MetricsError> {
    let best = positive("best objective", best)?;
    positive("lower bound", lb)?;
    Ok((best - lb) / best * 100.0)
}

/// Gap relative to the best known gap.
pub fn delta_gap(gap: f64, bkg: f64) -> f64 {
    gap - bkg
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub best: f64,
    pub time_to_best_s: f64,
    pub runs: Vec<f64>,
    pub brpd: Option<f64>,
    pub arpd: Option<f64>,
    pub gap: Option<f64>,
    pub delta_gap: Option<f64>,
}

/// Metrics over a set of runs. Reference values that are absent leave the
/// metrics depending on them empty.
pub fn metrics(
    runs: &[f64],
    time_to_best_s: f64,
    bks: Option<f64>,
    lb: Option<f64>,
    bkg: Option<f64>,
) -> Result<RunMetrics, MetricsError> {
    let best = runs.iter().copied().reduce(f64::min).ok_or(MetricsError::NoRuns)?;
    let brpd = bks.map(|b| brpd(best, b)).transpose()?;
    let arpd = bks.map(|b| arpd(runs, b)).transpose()?;
    let gap = lb.map(|l| gap(best, l)).transpose()?;
    let delta_gap = gap.zip(bkg).map(|(g, b)| delta_gap(g, b));
    Ok(RunMetrics {
        best,
        time_to_best_s,
        runs: runs.to_vec(),
        brpd,
        arpd,
        gap,
        delta_gap,
    })
}
