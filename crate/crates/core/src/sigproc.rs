//! Probing signal and the two sampled linear operators used to extract the
//! virtual output: a pure delay and a windowed average of the running integral
//! (weighted zero-order hold).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{positive, ConfigError};

/// Probing signal parameters. The delay is `d = n·ε` and the averaging window
/// `w = 2·d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionConfig {
    /// Probe amplitude (V).
    #[serde(rename = "A0")]
    pub a0: f64,
    /// Probe period (s).
    pub epsilon: f64,
    /// Delay as a whole number of probe periods.
    pub n: u32,
}

impl InjectionConfig {
    pub const fn new(a0: f64, epsilon: f64, n: u32) -> Self {
        InjectionConfig { a0, epsilon, n }
    }

    /// `A0 = 1 V`, `ε = 1/300 s`, `d = 10ε`.
    pub const fn simulation() -> Self {
        InjectionConfig::new(1.0, 1.0 / 300.0, 10)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("injection.A0", self.a0)?;
        positive("injection.epsilon", self.epsilon)?;
        if self.n == 0 {
            return Err(ConfigError::invalid("injection.n", ">= 1", 0.0));
        }
        Ok(())
    }

    /// Delay `d = n·ε`.
    pub fn delay(&self) -> f64 {
        f64::from(self.n) * self.epsilon
    }

    /// Averaging window `w = 2·d`.
    pub fn window(&self) -> f64 {
        2.0 * self.delay()
    }

    /// Integration step for `steps_per_period` samples per probe period.
    pub fn step(&self, steps_per_period: u32) -> f64 {
        self.epsilon / f64::from(steps_per_period)
    }
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self::simulation()
    }
}

/// Probing voltage `s(t) = A0·sin(2πt/ε)`.
pub fn probe(t: f64, cfg: &InjectionConfig) -> f64 {
    cfg.a0 * (2.0 * PI * t / cfg.epsilon).sin()
}

/// Primitive of the probe, `S(t) = −(A0/2π)·cos(2πt/ε)`.
pub fn probe_primitive(t: f64, cfg: &InjectionConfig) -> f64 {
    -cfg.a0 / (2.0 * PI) * (2.0 * PI * t / cfg.epsilon).cos()
}

/// `∫ S²(μ − d) dμ` over one probe period, `A0²·ε/(8π²)`.
pub fn excitation_integral(cfg: &InjectionConfig) -> f64 {
    cfg.a0 * cfg.a0 * cfg.epsilon / (8.0 * PI * PI)
}

/// Number of samples `span/step`, rejecting spans that are not whole multiples.
pub fn aligned_samples(what: &'static str, span: f64, step: f64) -> Result<usize, ConfigError> {
    positive("step", step)?;
    let ratio = span / step;
    let count = ratio.round();
    if !span.is_finite() || count < 1.0 || (ratio - count).abs() > 1e-6 * count.max(1.0) {
        return Err(ConfigError::Misaligned { what, span, step });
    }
    Ok(count as usize)
}

/// Sampled pure delay `v ↦ v(t − d)` backed by a fixed ring buffer.
///
/// Until `d` worth of samples has been seen the output is the first sample.
#[derive(Clone, Debug)]
pub struct DelayLine {
    buf: Vec<f64>,
    head: usize,
    pushed: usize,
}

impl DelayLine {
    pub fn new(delay: f64, step: f64) -> Result<Self, ConfigError> {
        Ok(Self::with_samples(aligned_samples("delay", delay, step)?))
    }

    pub fn with_samples(samples: usize) -> Self {
        assert!(samples > 0, "delay line needs at least one sample");
        DelayLine {
            buf: vec![0.0; samples],
            head: 0,
            pushed: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.buf.len()
    }

    /// True once the last output was a stored sample rather than padding.
    pub fn is_filled(&self) -> bool {
        self.pushed > self.buf.len()
    }

    /// Store `sample` and return the value pushed `capacity` steps ago.
    pub fn push(&mut self, sample: f64) -> f64 {
        if self.pushed == 0 {
            self.buf.fill(sample);
        }
        let out = std::mem::replace(&mut self.buf[self.head], sample);
        self.head = (self.head + 1) % self.buf.len();
        self.pushed += 1;
        out
    }
}

/// Windowed average `(χ(t) − χ(t − w))/w` of the trapezoidal running integral
/// `χ` of the input.
///
/// The warm-up interval behaves as if the first sample had been applied for
/// all earlier time.
#[derive(Clone, Debug)]
pub struct RunningIntegral {
    history: Vec<f64>,
    head: usize,
    step: f64,
    chi: f64,
    last: f64,
    pushed: usize,
}

impl RunningIntegral {
    pub fn new(window: f64, step: f64) -> Result<Self, ConfigError> {
        Ok(Self::with_samples(aligned_samples("window", window, step)?, step))
    }

    pub fn with_samples(samples: usize, step: f64) -> Self {
        assert!(samples > 0, "window needs at least one sample");
        RunningIntegral {
            history: vec![0.0; samples],
            head: 0,
            step,
            chi: 0.0,
            last: 0.0,
            pushed: 0,
        }
    }

    /// Window length in seconds.
    pub fn window(&self) -> f64 {
        self.history.len() as f64 * self.step
    }

    pub fn is_filled(&self) -> bool {
        self.pushed > self.history.len()
    }

    /// Accumulated integral `χ(t)`.
    pub fn integral(&self) -> f64 {
        self.chi
    }

    /// Feed the next sample and return the window mean ending at it.
    pub fn push(&mut self, sample: f64) -> f64 {
        let len = self.history.len();
        if self.pushed == 0 {
            for (j, slot) in self.history.iter_mut().enumerate() {
                *slot = -((len - j) as f64) * self.step * sample;
            }
        } else {
            self.chi += 0.5 * self.step * (self.last + sample);
        }
        self.last = sample;
        let old = std::mem::replace(&mut self.history[self.head], self.chi);
        self.head = (self.head + 1) % len;
        self.pushed += 1;
        (self.chi - old) / self.window()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const CFG: InjectionConfig = InjectionConfig::simulation();

    #[test]
    fn probe_values() {
        assert_eq!(probe(0.0, &CFG), 0.0);
        assert_relative_eq!(probe(CFG.epsilon / 4.0, &CFG), 1.0, max_relative = 1e-14);
        assert_eq!(CFG.a0, 1.0);
        assert_relative_eq!(CFG.epsilon, 1.0 / 300.0);
        assert_relative_eq!(CFG.delay(), 10.0 / 300.0, max_relative = 1e-15);
        assert_eq!(CFG.window(), 2.0 * CFG.delay());
    }

    #[test]
    fn primitive_values_and_periodicity() {
        assert_relative_eq!(probe_primitive(0.0, &CFG), -1.0 / (2.0 * PI));
        for t in [0.0, 0.0123, 0.5, 1.7] {
            let a = probe_primitive(t, &CFG);
            let b = probe_primitive(t + CFG.epsilon, &CFG);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn primitive_derivative_matches_probe() {
        // S is the primitive in the fast time t/ε, so d(εS)/dt = s.
        // Central differences: error ~ h²·S'''/6, quartering when h halves.
        let err = |h: f64| {
            (0..50)
                .map(|j| {
                    let t = 0.37 + j as f64 * 1.3e-4;
                    let fd = CFG.epsilon * (probe_primitive(t + h, &CFG) - probe_primitive(t - h, &CFG)) / (2.0 * h);
                    (fd - probe(t, &CFG)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(CFG.epsilon / 100.0), err(CFG.epsilon / 200.0));
        assert!(e1 < 1e-3, "{e1}");
        assert_relative_eq!(e1 / e2, 4.0, max_relative = 0.05);
    }

    #[test]
    fn excitation_integral_closed_form_and_quadrature() {
        assert_relative_eq!(
            excitation_integral(&CFG),
            1.0 / (2400.0 * PI * PI),
            max_relative = 1e-14
        );
        assert_relative_eq!(excitation_integral(&CFG), 4.2217e-5, max_relative = 1e-4);
        // composite Simpson over one period, arbitrary start and delay
        let simpson = |t0: f64, d: f64| {
            let n = 2000;
            let h = CFG.epsilon / n as f64;
            let f = |mu: f64| probe_primitive(mu - d, &CFG).powi(2);
            let mut acc = f(t0) + f(t0 + CFG.epsilon);
            for j in 1..n {
                acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(t0 + j as f64 * h);
            }
            acc * h / 3.0
        };
        for (t0, d) in [(0.0, 0.0), (0.123, CFG.delay()), (2.5, 0.0171)] {
            assert_relative_eq!(simpson(t0, d), excitation_integral(&CFG), max_relative = 1e-10);
        }
        let doubled = InjectionConfig::new(2.0, CFG.epsilon, CFG.n);
        assert_relative_eq!(excitation_integral(&doubled), 4.0 * excitation_integral(&CFG));
    }

    #[test]
    fn misaligned_delay_rejected() {
        assert!(DelayLine::new(0.0105, 0.001).is_err());
        assert!(RunningIntegral::new(0.0105, 0.001).is_err());
        assert_eq!(DelayLine::new(CFG.delay(), CFG.step(200)).unwrap().capacity(), 2000);
        assert!(RunningIntegral::new(CFG.window(), CFG.step(200)).is_ok());
    }

    #[test]
    fn delay_of_constant_and_ramp() {
        let mut line = DelayLine::with_samples(5);
        for k in 0..20 {
            let out = line.push(3.5);
            assert_eq!(out, 3.5, "step {k}");
        }
        let h = 0.01;
        let mut line = DelayLine::new(0.05, h).unwrap();
        for k in 0..40 {
            let t = k as f64 * h;
            let out = line.push(t);
            if k >= 5 {
                assert_eq!(out, (k - 5) as f64 * h);
            } else {
                assert_eq!(out, 0.0, "padding is the first sample");
            }
        }
    }

    #[test]
    fn delayed_primitive_is_period_aligned() {
        let h = CFG.step(200);
        let mut line = DelayLine::new(CFG.delay(), h).unwrap();
        for k in 0..6000 {
            let t = k as f64 * h;
            let out = line.push(probe_primitive(t, &CFG));
            if line.is_filled() {
                let err = (out - probe_primitive(t, &CFG)).abs();
                assert!(err < 1e-12, "step {k}: {err}");
            }
        }
    }

    #[test]
    fn wzoh_of_constant_and_ramp() {
        let mut ri = RunningIntegral::with_samples(8, 0.25);
        for _ in 0..30 {
            assert_relative_eq!(ri.push(-1.25), -1.25, max_relative = 1e-14);
        }
        let h = 0.01;
        let mut ri = RunningIntegral::new(0.2, h).unwrap();
        for k in 0..100 {
            let t = k as f64 * h;
            let out = ri.push(t);
            if ri.is_filled() {
                assert!((out - (t - 0.1)).abs() < 1e-12, "{k}: {out}");
            }
        }
    }

    #[test]
    fn wzoh_of_primitive_vanishes_over_whole_periods() {
        let worst = |steps: u32| {
            let h = CFG.step(steps);
            let mut ri = RunningIntegral::new(CFG.window(), h).unwrap();
            let mut worst = 0.0f64;
            for k in 0..8000 {
                let out = ri.push(probe_primitive(k as f64 * h, &CFG));
                if ri.is_filled() {
                    worst = worst.max(out.abs());
                }
            }
            worst
        };
        // trapezoid over whole periods of a trig polynomial is exact up to rounding
        assert!(worst(200) < 1e-12, "{}", worst(200));
        assert!(worst(37) < 1e-12);
    }

    #[test]
    fn wzoh_claim_second_order_in_epsilon() {
        let residual = |eps: f64| {
            let cfg = InjectionConfig::new(1.0, eps, 10);
            let h = cfg.step(200);
            let mut ri = RunningIntegral::new(cfg.window(), h).unwrap();
            let w = cfg.window();
            let bar = |t: f64| 1.0 + 0.1 * (2.0 * t).sin();
            let mut worst = 0.0f64;
            let steps = (1.0 / h).round() as usize;
            for k in 0..=steps {
                let t = k as f64 * h;
                let r = bar(t) + eps * probe_primitive(t, &cfg) * (2.0 + 0.05 * t.cos());
                let z = ri.push(r);
                if t >= w {
                    worst = worst.max((z - bar(t - w / 2.0)).abs());
                }
            }
            worst
        };
        let ratio = residual(1.0 / 150.0) / residual(1.0 / 300.0);
        assert!((2.5..=6.0).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn delay_is_an_exact_shift(samples in proptest::collection::vec(-1e3f64..1e3, 1..200), lag in 1usize..20) {
            let mut line = DelayLine::with_samples(lag);
            for (k, &v) in samples.iter().enumerate() {
                let out = line.push(v);
                let expect = if k >= lag { samples[k - lag] } else { samples[0] };
                prop_assert_eq!(out.to_bits(), expect.to_bits());
            }
        }

        #[test]
        fn wzoh_commutes_with_constant_offsets(
            samples in proptest::collection::vec(-10.0f64..10.0, 1..150),
            offset in -5.0f64..5.0,
            len in 1usize..30,
        ) {
            let mut plain = RunningIntegral::with_samples(len, 0.01);
            let mut shifted = RunningIntegral::with_samples(len, 0.01);
            for &v in &samples {
                let a = plain.push(v);
                let b = shifted.push(v + offset);
                prop_assert!((b - (a + offset)).abs() < 1e-9);
            }
        }
    }
}
