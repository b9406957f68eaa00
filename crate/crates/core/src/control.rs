//! Position references and the three controllers: IDA-PBC fed by the observer,
//! the same law fed by the true state, and backstepping with integral action.

use serde::{Deserialize, Serialize};

use crate::error::{positive, ConfigError};
use crate::observer::StateEstimate;
use crate::plant::{PlantParams, PlantState};

/// Gains of the IDA-PBC law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdaPbcConfig {
    #[serde(rename = "Kp")]
    pub kp: f64,
    pub alpha: f64,
    /// Desired flux; `None` uses the levitation flux `√(2kmg)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    /// Symmetric saturation of the commanded voltage (V).
    pub u_max: f64,
}

impl IdaPbcConfig {
    pub const fn simulation() -> Self {
        IdaPbcConfig {
            kp: 200.7,
            alpha: 33.4,
            lambda_star: None,
            u_max: 30.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("controller.Kp", self.kp)?;
        positive("controller.alpha", self.alpha)?;
        positive("controller.u_max", self.u_max)?;
        if let Some(l) = self.lambda_star {
            positive("controller.lambda_star", l)?;
        }
        Ok(())
    }

    pub fn flux_target(&self, params: &PlantParams) -> f64 {
        self.lambda_star.unwrap_or_else(|| params.equilibrium_flux())
    }
}

impl Default for IdaPbcConfig {
    fn default() -> Self {
        Self::simulation()
    }
}

fn saturate(u: f64, limit: f64) -> f64 {
    u.clamp(-limit, limit)
}

fn ida_pbc_law(r: f64, y: f64, x: [f64; 3], q_star: f64, params: &PlantParams, cfg: &IdaPbcConfig) -> f64 {
    let [x1, x2, x3] = x;
    let lambda_star = cfg.flux_target(params);
    let u = -r / params.k * y
        - cfg.kp * ((x1 - lambda_star) / cfg.alpha + (x2 + params.c - q_star))
        - (cfg.alpha / params.m + cfg.kp) * x3;
    saturate(u, cfg.u_max)
}

/// Certainty-equivalence IDA-PBC: estimates replace `R` and the state; `y` is
/// the measured output.
pub fn ida_pbc_sensorless(est: &StateEstimate, y: f64, q_star: f64, params: &PlantParams, cfg: &IdaPbcConfig) -> f64 {
    ida_pbc_law(est.r_hat, y, [est.x1, est.x2, est.x3], q_star, params, cfg)
}

/// The same law driven by the true state and resistance.
pub fn ida_pbc_state_feedback(x: &PlantState, q_star: f64, params: &PlantParams, cfg: &IdaPbcConfig) -> f64 {
    ida_pbc_law(params.r, x.x1 * x.x2, x.to_array(), q_star, params, cfg)
}

/// Signals fed to the backstepping controller.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSource {
    #[default]
    Estimates,
    Truth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacksteppingConfig {
    #[serde(rename = "Ki")]
    pub ki: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(default)]
    pub p_star: f64,
    /// Where `(q, p)` come from.
    #[serde(default)]
    pub signals: SignalSource,
    /// Where `R` comes from.
    #[serde(default)]
    pub resistance: SignalSource,
}

impl BacksteppingConfig {
    pub const fn experiment() -> Self {
        BacksteppingConfig {
            ki: 1.0,
            gamma1: 340.0,
            gamma2: 3.0,
            p_star: 0.0,
            signals: SignalSource::Estimates,
            resistance: SignalSource::Estimates,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("controller.Ki", self.ki)?;
        positive("controller.gamma1", self.gamma1)?;
        positive("controller.gamma2", self.gamma2)
    }
}

impl Default for BacksteppingConfig {
    fn default() -> Self {
        Self::experiment()
    }
}

/// Backstepping law with an integrator on the position error.
#[derive(Clone, Debug, PartialEq)]
pub struct Backstepping {
    cfg: BacksteppingConfig,
    integral: f64,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Backstepping {
    pub fn new(cfg: BacksteppingConfig) -> Self {
        Backstepping { cfg, integral: 0.0 }
    }

    pub fn config(&self) -> &BacksteppingConfig {
        &self.cfg
    }

    /// `∫(q − q⋆)dτ` accumulated so far (m·s).
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// `Υ = (2/k)·(m·g − γ1·(p − p⋆) − γ2·m·(q − q⋆))`.
    pub fn upsilon(&self, q: f64, p: f64, q_star: f64, params: &PlantParams) -> f64 {
        let c = &self.cfg;
        2.0 / params.k * (params.m * params.g_acc - c.gamma1 * (p - c.p_star) - c.gamma2 * params.m * (q - q_star))
    }

    pub fn set_integral(&mut self, integral: f64) {
        self.integral = integral;
    }

    /// `u0` for a given value of the integral state.
    pub fn law(&self, q: f64, p: f64, q_star: f64, integral: f64, r: f64, params: &PlantParams) -> f64 {
        let ups = self.upsilon(q, p, q_star, params);
        r * (params.c - q) * ups.abs().sqrt() * sign(ups) - self.cfg.ki * integral
    }

    /// Advance the integral by `dt` with forward Euler and return `u0`.
    pub fn step(&mut self, q: f64, p: f64, q_star: f64, dt: f64, r: f64, params: &PlantParams) -> f64 {
        self.integral += (q - q_star) * dt;
        self.law(q, p, q_star, self.integral, r, params)
    }
}

/// Piecewise-constant position reference cycling through `levels`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceProfile {
    /// Absolute plateau positions `q⋆` (m).
    pub levels: Vec<f64>,
    /// Plateau duration (s).
    pub period: f64,
    /// Time at which the first plateau starts (s); earlier times hold it too.
    #[serde(default)]
    pub start: f64,
}

impl ReferenceProfile {
    pub fn constant(q_star: f64) -> Self {
        ReferenceProfile {
            levels: vec![q_star],
            period: f64::INFINITY,
            start: 0.0,
        }
    }

    /// Plateaus given as offsets from the magnet face `c`.
    pub fn relative_to(params: &PlantParams, offsets: &[f64], period: f64) -> Self {
        ReferenceProfile {
            levels: offsets.iter().map(|o| params.c + o).collect(),
            period,
            start: 0.0,
        }
    }

    /// Pulse train alternating between 2 mm and 4 mm below the magnet face.
    pub fn pulse_train(params: &PlantParams) -> Self {
        Self::relative_to(params, &[-0.002, -0.004], DEFAULT_PLATEAU)
    }

    pub fn validate(&self, params: &PlantParams) -> Result<(), ConfigError> {
        if self.levels.is_empty() {
            return Err(ConfigError::Other("reference.levels must not be empty".into()));
        }
        for &q in &self.levels {
            if !(q.is_finite() && q < params.c) {
                return Err(ConfigError::invalid("reference.levels", "finite and below c", q));
            }
        }
        if self.period.is_nan() || self.period <= 0.0 {
            return Err(ConfigError::invalid("reference.period", "> 0", self.period));
        }
        if !self.start.is_finite() {
            return Err(ConfigError::invalid("reference.start", "finite", self.start));
        }
        Ok(())
    }

    /// Index of the plateau active at `t`.
    pub fn plateau_index(&self, t: f64) -> usize {
        if t <= self.start || !self.period.is_finite() {
            0
        } else {
            ((t - self.start) / self.period).floor() as usize
        }
    }

    pub fn reference(&self, t: f64) -> f64 {
        self.levels[self.plateau_index(t) % self.levels.len()]
    }

    /// `[begin, end)` of plateau `index`; plateau 0 also covers `t < start`.
    pub fn plateau_bounds(&self, index: usize) -> (f64, f64) {
        (
            self.start + index as f64 * self.period,
            self.start + (index + 1) as f64 * self.period,
        )
    }
}

/// Default plateau length (s).
pub const DEFAULT_PLATEAU: f64 = 2.0;
