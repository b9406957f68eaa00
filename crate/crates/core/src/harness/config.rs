use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{BacksteppingConfig, IdaPbcConfig, ReferenceProfile, SignalSource, DEFAULT_PLATEAU};
use crate::error::{positive, ConfigError};
use crate::observer::ObserverConfig;
use crate::plant::{NoiseConfig, PlantParams, PlantState};
use crate::sigproc::{aligned_samples, InjectionConfig};

/// Controller driving the plant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    /// IDA-PBC fed by the observer.
    IdaSensorless,
    /// IDA-PBC fed by the true state; the observer runs open loop.
    #[default]
    IdaState,
    Backstepping,
}

impl std::str::FromStr for ControllerKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ida-sensorless" => Ok(ControllerKind::IdaSensorless),
            "ida-state" => Ok(ControllerKind::IdaState),
            "backstepping" => Ok(ControllerKind::Backstepping),
            other => Err(ConfigError::Other(format!("unknown controller `{other}`"))),
        }
    }
}

/// `[controller]` section: selection plus the gains of every law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    #[serde(rename = "Kp")]
    pub kp: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    pub u_max: f64,
    #[serde(rename = "Ki")]
    pub ki: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(default)]
    pub p_star: f64,
    #[serde(default)]
    pub backstepping_signals: SignalSource,
    #[serde(default)]
    pub backstepping_resistance: SignalSource,
}

impl ControllerConfig {
    pub fn new(kind: ControllerKind) -> Self {
        let ida = IdaPbcConfig::simulation();
        let bs = BacksteppingConfig::experiment();
        ControllerConfig {
            kind,
            kp: ida.kp,
            alpha: ida.alpha,
            lambda_star: ida.lambda_star,
            u_max: ida.u_max,
            ki: bs.ki,
            gamma1: bs.gamma1,
            gamma2: bs.gamma2,
            p_star: bs.p_star,
            backstepping_signals: bs.signals,
            backstepping_resistance: bs.resistance,
        }
    }

    pub fn ida(&self) -> IdaPbcConfig {
        IdaPbcConfig {
            kp: self.kp,
            alpha: self.alpha,
            lambda_star: self.lambda_star,
            u_max: self.u_max,
        }
    }

    pub fn backstepping(&self) -> BacksteppingConfig {
        BacksteppingConfig {
            ki: self.ki,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            p_star: self.p_star,
            signals: self.backstepping_signals,
            resistance: self.backstepping_resistance,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.kind {
            ControllerKind::Backstepping => {
                positive("controller.u_max", self.u_max)?;
                self.backstepping().validate()
            }
            _ => self.ida().validate(),
        }
    }
}

/// `[sim]` section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Simulated time (s).
    pub duration: f64,
    /// Integration steps per probe period; `h = ε/N`.
    pub steps_per_period: u32,
    /// Logged records per probe period; must divide `steps_per_period`.
    #[serde(default = "default_log_rate")]
    pub log_rate: u32,
    /// Initial plant state `(x1, x2, x3)`; defaults to `(√(2kmg), −c, 0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<[f64; 3]>,
}

fn default_log_rate() -> u32 {
    20
}

/// A complete closed-loop experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantParams,
    pub injection: InjectionConfig,
    pub observer: ObserverConfig,
    pub controller: ControllerConfig,
    pub reference: ReferenceProfile,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub sim: SimConfig,
}

impl ScenarioConfig {
    /// Observer study: simulation parameters, state-feedback IDA-PBC, ±3 mA
    /// current noise, two full cycles of the default pulse train.
    pub fn simulation() -> Self {
        let plant = PlantParams::simulation();
        ScenarioConfig {
            plant,
            injection: InjectionConfig::simulation(),
            observer: ObserverConfig::simulation(&plant),
            controller: ControllerConfig::new(ControllerKind::IdaState),
            reference: ReferenceProfile::pulse_train(&plant),
            noise: NoiseConfig::uniform(0.003, 1),
            sim: SimConfig {
                duration: 4.0 * DEFAULT_PLATEAU,
                steps_per_period: 200,
                log_rate: default_log_rate(),
                initial_state: None,
            },
        }
    }

    /// Same scenario closed through the observer.
    pub fn sensorless() -> Self {
        let mut cfg = Self::simulation();
        cfg.controller.kind = ControllerKind::IdaSensorless;
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Other(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Other(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| ConfigError::Other(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario config serialises")
    }

    /// Integration step `h = ε/N`.
    pub fn step(&self) -> f64 {
        self.injection.step(self.sim.steps_per_period)
    }

    pub fn total_steps(&self) -> usize {
        (self.sim.duration / self.step()).round() as usize
    }

    /// Steps between logged records.
    pub fn log_stride(&self) -> usize {
        (self.sim.steps_per_period / self.sim.log_rate) as usize
    }

    pub fn initial_state(&self) -> PlantState {
        self.sim
            .initial_state
            .map(PlantState::from_array)
            .unwrap_or_else(|| self.plant.equilibrium_state(0.0))
    }

    /// Copy with a different probe period, everything else unchanged.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut cfg = self.clone();
        cfg.injection.epsilon = epsilon;
        cfg
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.plant.validate()?;
        self.injection.validate()?;
        self.observer.validate()?;
        self.controller.validate()?;
        self.reference.validate(&self.plant)?;
        self.noise.validate()?;
        let n = self.sim.steps_per_period;
        if n == 0 {
            return Err(ConfigError::invalid("sim.steps_per_period", ">= 1", 0.0));
        }
        if self.sim.log_rate == 0 || !n.is_multiple_of(self.sim.log_rate) {
            return Err(ConfigError::invalid(
                "sim.log_rate",
                "a divisor of steps_per_period",
                f64::from(self.sim.log_rate),
            ));
        }
        if !(self.sim.duration.is_finite() && self.sim.duration >= 0.0) {
            return Err(ConfigError::invalid(
                "sim.duration",
                "finite and >= 0",
                self.sim.duration,
            ));
        }
        let h = self.step();
        aligned_samples("delay", self.injection.delay(), h)?;
        aligned_samples("window", self.injection.window(), h)?;
        let x0 = self.initial_state();
        if !(x0.is_finite() && x0.x2 < 0.0) {
            return Err(ConfigError::invalid("sim.initial_state[1]", "finite and < 0", x0.x2));
        }
        Ok(())
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::simulation()
    }
}
