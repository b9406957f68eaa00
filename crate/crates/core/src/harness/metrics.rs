use serde::Serialize;

use super::config::ScenarioConfig;
use super::log::{Record, TrajectoryLog};
use crate::error::ConfigError;

/// Fraction at the end of each plateau treated as steady state.
pub const STEADY_FRACTION: f64 = 0.2;

/// Settling band: the larger of this fraction of the reference step and
/// [`SETTLING_FLOOR`].
const SETTLING_FRACTION: f64 = 0.02;
const SETTLING_FLOOR: f64 = 2e-5;

/// Minimum over the log of `∫ i² dτ` on windows of length `window`
/// (trapezoid rule on the logged samples).
pub fn pe_metric(log: &TrajectoryLog, window: f64) -> Result<f64, ConfigError> {
    let dt = log
        .sample_step()
        .ok_or_else(|| ConfigError::Other("PE metric needs at least two samples".into()))?;
    let span = log.records.last().map_or(0.0, |r| r.t) - log.records[0].t;
    if window.is_nan() || window <= 0.0 || window > span + 0.5 * dt {
        return Err(ConfigError::invalid(
            "pe window",
            "positive and no longer than the log",
            window,
        ));
    }
    let m = (window / dt).round().max(1.0) as usize;
    let sq: Vec<f64> = log.records.iter().map(|r| r.i * r.i).collect();
    let mut acc: f64 = sq[..=m].windows(2).map(|p| 0.5 * dt * (p[0] + p[1])).sum();
    let mut best = acc;
    for j in (m + 1)..sq.len() {
        acc += 0.5 * dt * (sq[j - 1] + sq[j]) - 0.5 * dt * (sq[j - m - 1] + sq[j - m]);
        best = best.min(acc);
    }
    Ok(best.max(0.0))
}

/// Steady-state statistics of one reference plateau (means over its final
/// [`STEADY_FRACTION`]).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlateauMetrics {
    pub index: usize,
    pub begin: f64,
    pub end: f64,
    pub q_star: f64,
    /// Mean `|q̂ − q|` (m).
    pub position_estimate_error: f64,
    /// Mean `q̂ − q` (m).
    pub position_estimate_bias: f64,
    /// Standard deviation of `q̂ − q` (m).
    pub position_jitter_rms: f64,
    pub flux_error: f64,
    /// Mean `|x̂3 − x3|` of the KKL observer.
    pub momentum_error: f64,
    pub momentum_error_luenberger: f64,
    pub resistance_error: f64,
    /// Mean `|q − q⋆|` (m).
    pub tracking_error: f64,
    /// Time from plateau start until `|q − q⋆|` stays inside the settling band.
    pub settling_time: Option<f64>,
}

/// Aggregate of the steady metrics over the plateaus after the first one
/// (the first absorbs the start-up transient). Falls back to the first when it
/// is the only one.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SteadySummary {
    pub plateaus: usize,
    pub position_estimate_error: f64,
    pub position_estimate_bias: f64,
    pub position_jitter_rms: f64,
    pub flux_error: f64,
    pub momentum_error: f64,
    pub momentum_error_luenberger: f64,
    pub resistance_error: f64,
    pub tracking_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunMetrics {
    pub plateaus: Vec<PlateauMetrics>,
    pub warnings: Vec<String>,
}

impl RunMetrics {
    pub fn steady(&self) -> SteadySummary {
        let used: &[PlateauMetrics] = match self.plateaus.as_slice() {
            [] => return SteadySummary::default(),
            [only] => std::slice::from_ref(only),
            [_, rest @ ..] => rest,
        };
        let n = used.len() as f64;
        let mean = |f: fn(&PlateauMetrics) -> f64| used.iter().map(f).sum::<f64>() / n;
        SteadySummary {
            plateaus: used.len(),
            position_estimate_error: mean(|p| p.position_estimate_error),
            position_estimate_bias: mean(|p| p.position_estimate_bias),
            position_jitter_rms: mean(|p| p.position_jitter_rms),
            flux_error: mean(|p| p.flux_error),
            momentum_error: mean(|p| p.momentum_error),
            momentum_error_luenberger: mean(|p| p.momentum_error_luenberger),
            resistance_error: mean(|p| p.resistance_error),
            tracking_error: mean(|p| p.tracking_error),
        }
    }
}

fn mean_of(window: &[Record], f: impl Fn(&Record) -> f64) -> f64 {
    window.iter().map(f).sum::<f64>() / window.len() as f64
}

/// Per-plateau error statistics. Plateaus shorter than the observer warm-up
/// or not fully covered by the log are skipped with a warning.
pub fn run_metrics(log: &TrajectoryLog, cfg: &ScenarioConfig) -> RunMetrics {
    let mut out = RunMetrics::default();
    let (Some(first), Some(last)) = (log.records.first(), log.records.last()) else {
        out.warnings.push("empty log".into());
        return out;
    };
    let dt = log.sample_step().unwrap_or(0.0);
    let profile = &cfg.reference;
    let warmup = cfg.injection.window();
    let c = cfg.plant.c;

    let plateau_count = if profile.period.is_finite() {
        // a final sample that lands exactly on a plateau boundary opens no new plateau
        profile.plateau_index((last.t - 0.5 * dt).max(first.t)) + 1
    } else {
        1
    };
    let mut previous_level = first.x2 + c;
    for index in 0..plateau_count {
        let (mut begin, mut end) = profile.plateau_bounds(index);
        if index == 0 {
            begin = begin.min(first.t);
        }
        if !end.is_finite() {
            end = last.t + dt;
        }
        let level = profile.reference(begin.max(profile.start));
        let step = (level - previous_level).abs();
        previous_level = level;
        if end - begin < warmup {
            out.warnings
                .push(format!("plateau {index} shorter than the observer warm-up; skipped"));
            continue;
        }
        if end > last.t + 0.5 * dt + 1e-12 {
            out.warnings
                .push(format!("plateau {index} not covered by the log; skipped"));
            continue;
        }
        let steady_from = end - STEADY_FRACTION * (end - begin);
        let in_range = |lo: f64, hi: f64| {
            let a = log.records.partition_point(|r| r.t < lo - 1e-9 * dt);
            let b = log.records.partition_point(|r| r.t < hi - 1e-9 * dt);
            &log.records[a..b]
        };
        let window = in_range(steady_from, end);
        if window.is_empty() {
            out.warnings
                .push(format!("plateau {index} has no samples in its steady window; skipped"));
            continue;
        }
        let bias = mean_of(window, |r| r.x2_hat - r.x2);
        let var = mean_of(window, |r| (r.x2_hat - r.x2 - bias).powi(2));

        let band = (SETTLING_FRACTION * step).max(SETTLING_FLOOR);
        let whole = in_range(begin, end);
        let settling_time = match whole.iter().rposition(|r| (r.x2 + c - level).abs() > band) {
            None => Some(0.0),
            Some(j) if j + 1 < whole.len() => Some(whole[j + 1].t - begin),
            Some(_) => None,
        };

        out.plateaus.push(PlateauMetrics {
            index,
            begin,
            end,
            q_star: level,
            position_estimate_error: mean_of(window, |r| (r.x2_hat - r.x2).abs()),
            position_estimate_bias: bias,
            position_jitter_rms: var.sqrt(),
            flux_error: mean_of(window, |r| (r.x1_hat - r.x1).abs()),
            momentum_error: mean_of(window, |r| (r.p_hat_kkl - r.x3).abs()),
            momentum_error_luenberger: mean_of(window, |r| (r.p_hat_luenberger - r.x3).abs()),
            resistance_error: mean_of(window, |r| (r.r_hat - cfg.plant.r).abs()),
            tracking_error: mean_of(window, |r| (r.x2 + c - r.q_star).abs()),
            settling_time,
        });
    }
    out
}
