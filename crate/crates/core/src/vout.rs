//! Virtual-output estimator.
//!
//! With the probe injected, the output behaves like the regression
//! `y ≈ θ1 + S(t)·θ2` with `θ2 = ε·y_v`. Subtracting the windowed average over
//! `2d` from the `d`-delayed output removes `θ1` and leaves the scalar
//! regression `Y(t) ≈ S(t − d)·θ2(t − d)`, which a projected gradient law
//! solves for `θ2`.

use serde::{Deserialize, Serialize};

use crate::error::{positive, ConfigError};
use crate::sigproc::{probe_primitive, DelayLine, InjectionConfig, RunningIntegral};

/// Default projection ceiling `ℓ` on the virtual output (m).
pub const DEFAULT_CEILING: f64 = -1e-4;

/// One sample of the scalar regression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    /// Measurable signal `Y = H_d[y] − Z_2d[y]`.
    pub value: f64,
    /// Regressor `S(t − d)`.
    pub regressor: f64,
    /// `false` while the delay and averaging windows still hold padding.
    pub warm: bool,
}

#[derive(Clone, Debug)]
pub struct VoutEstimator {
    theta2_hat: f64,
    gamma: f64,
    ell: f64,
    injection: InjectionConfig,
    delay: DelayLine,
    average: RunningIntegral,
}

impl VoutEstimator {
    /// Build the estimator for step `h`, starting from `ŷ_v(0) = initial_vout`.
    pub fn new(
        injection: InjectionConfig,
        gamma: f64,
        ell: f64,
        initial_vout: f64,
        h: f64,
    ) -> Result<Self, ConfigError> {
        injection.validate()?;
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(ConfigError::invalid("observer.gamma", "finite and >= 0", gamma));
        }
        if !(ell.is_finite() && ell < 0.0) {
            return Err(ConfigError::invalid("observer.ell", "finite and < 0", ell));
        }
        positive("step", h)?;
        let mut est = VoutEstimator {
            theta2_hat: 0.0,
            gamma,
            ell,
            injection,
            delay: DelayLine::new(injection.delay(), h)?,
            average: RunningIntegral::new(injection.window(), h)?,
        };
        est.set_virtual_output(initial_vout);
        Ok(est)
    }

    pub fn theta2_hat(&self) -> f64 {
        self.theta2_hat
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ceiling(&self) -> f64 {
        self.ell
    }

    pub fn injection(&self) -> &InjectionConfig {
        &self.injection
    }

    /// Overwrite the estimate, projected onto `θ̂2 ≤ ε·ℓ`.
    pub fn set_virtual_output(&mut self, vout: f64) {
        self.theta2_hat = self.project(self.injection.epsilon * vout);
    }

    /// `ŷ_v = θ̂2/ε`.
    pub fn virtual_output(&self) -> f64 {
        self.theta2_hat / self.injection.epsilon
    }

    fn project(&self, theta: f64) -> f64 {
        theta.min(self.injection.epsilon * self.ell)
    }

    /// Push the output sample taken at `t` and form `Y(t)`.
    pub fn build_regression(&mut self, y: f64, t: f64) -> Regression {
        let delayed = self.delay.push(y);
        let mean = self.average.push(y);
        Regression {
            value: delayed - mean,
            regressor: probe_primitive(t - self.injection.delay(), &self.injection),
            warm: self.delay.is_filled() && self.average.is_filled(),
        }
    }

    /// Forward-Euler gradient step on `θ̂2`, followed by the projection.
    pub fn drem_update(&mut self, reg: &Regression, h: f64) -> f64 {
        let s = reg.regressor;
        let theta = self.theta2_hat + h * self.gamma * s * (reg.value - s * self.theta2_hat);
        self.theta2_hat = self.project(theta);
        self.theta2_hat
    }

    /// Consume one output sample; adaptation starts once the windows are full.
    pub fn step(&mut self, y: f64, t: f64, h: f64) -> Regression {
        let reg = self.build_regression(y, t);
        if reg.warm {
            self.drem_update(&reg, h);
        }
        reg
    }
}
