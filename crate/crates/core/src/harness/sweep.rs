use serde::Serialize;

use super::config::ScenarioConfig;
use super::metrics::{run_metrics, RunMetrics};
use super::sim::simulate;
use crate::sigproc::{probe_primitive, InjectionConfig};
use crate::vout::{VoutEstimator, DEFAULT_CEILING};

/// Least-squares slope of `ln y` against `ln x`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ScalingFit {
    /// `None` when fewer than two usable points exist.
    pub slope: Option<f64>,
    pub points: usize,
}

impl ScalingFit {
    pub fn is_degenerate(&self) -> bool {
        self.slope.is_none()
    }
}

pub fn fit_loglog(points: &[(f64, f64)]) -> ScalingFit {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return ScalingFit { slope: None, points: n };
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    ScalingFit {
        slope: (sxx > 0.0).then(|| sxy / sxx),
        points: n,
    }
}

/// Worst `|Y(t) − S(t − d)·θ2(t − d)|` over `[w, duration]` for the synthetic
/// output `y = θ1(t) + S(t)·θ2(t)` with slowly varying `θ1 = ȳ` and
/// `θ2 = ε·y_v`.
pub fn lemma_residual(epsilon: f64, n: u32, steps_per_period: u32, duration: f64) -> f64 {
    let inj = InjectionConfig::new(1.0, epsilon, n);
    let h = inj.step(steps_per_period);
    let theta1 = |t: f64| -5e-4 * (1.0 + 0.1 * (2.0 * t).sin());
    let theta2 = |t: f64| epsilon * -0.004 * (1.0 + 0.05 * t.cos());
    let mut est = VoutEstimator::new(inj, 0.0, DEFAULT_CEILING, -0.004, h).expect("valid synthetic estimator");
    let d = inj.delay();
    let steps = (duration / h).round() as usize;
    let mut worst = 0.0f64;
    for k in 0..=steps {
        let t = k as f64 * h;
        let reg = est.build_regression(theta1(t) + probe_primitive(t, &inj) * theta2(t), t);
        if reg.warm {
            worst = worst.max((reg.value - probe_primitive(t - d, &inj) * theta2(t - d)).abs());
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRun {
    pub epsilon: f64,
    pub metrics: Result<RunMetrics, String>,
    pub lemma_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub runs: Vec<SweepRun>,
    pub position_estimate: ScalingFit,
    pub flux: ScalingFit,
    pub momentum: ScalingFit,
    pub resistance: ScalingFit,
    pub tracking: ScalingFit,
    pub lemma: ScalingFit,
}

impl SweepReport {
    pub fn is_degenerate(&self) -> bool {
        self.position_estimate.is_degenerate()
    }

    /// `(ε, metric)` pairs of the successful runs.
    pub fn series(&self, metric: impl Fn(&RunMetrics) -> f64) -> Vec<(f64, f64)> {
        self.runs
            .iter()
            .filter_map(|r| r.metrics.as_ref().ok().map(|m| (r.epsilon, metric(m))))
            .collect()
    }
}

/// Run `base` once per probe period (in parallel) and fit how the steady
/// errors scale with `ε`. Failed runs are reported and left out of the fits.
pub fn epsilon_sweep(base: &ScenarioConfig, epsilons: &[f64]) -> SweepReport {
    let runs: Vec<SweepRun> = std::thread::scope(|scope| {
        let handles: Vec<_> = epsilons
            .iter()
            .map(|&eps| {
                scope.spawn(move || {
                    let cfg = base.with_epsilon(eps);
                    let metrics = simulate(&cfg)
                        .map(|log| run_metrics(&log, &cfg))
                        .map_err(|e| e.to_string());
                    let lemma = lemma_residual(eps, cfg.injection.n, cfg.sim.steps_per_period, 1.0);
                    SweepRun {
                        epsilon: eps,
                        metrics,
                        lemma_residual: lemma,
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut report = SweepReport {
        runs,
        position_estimate: ScalingFit::default(),
        flux: ScalingFit::default(),
        momentum: ScalingFit::default(),
        resistance: ScalingFit::default(),
        tracking: ScalingFit::default(),
        lemma: ScalingFit::default(),
    };
    report.position_estimate = fit_loglog(&report.series(|m| m.steady().position_estimate_error));
    report.flux = fit_loglog(&report.series(|m| m.steady().flux_error));
    report.momentum = fit_loglog(&report.series(|m| m.steady().momentum_error));
    report.resistance = fit_loglog(&report.series(|m| m.steady().resistance_error));
    report.tracking = fit_loglog(&report.series(|m| m.steady().tracking_error));
    let lemma: Vec<(f64, f64)> = report.runs.iter().map(|r| (r.epsilon, r.lemma_residual)).collect();
    report.lemma = fit_loglog(&lemma);
    report
}
