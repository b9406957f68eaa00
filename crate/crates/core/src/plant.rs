//! Levitated-ball dynamics in the shifted coordinates `x = (λ, q − c, p)`.
//!
//! The coil is modelled with the unsaturated inductance law `λ = k/(c − q)·i`,
//! which turns the measurable current into the output `y = x1·x2 = −k·i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, ConfigError};

/// Physical constants of the levitated ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// Ball mass (kg).
    pub m: f64,
    /// Gravitational acceleration (m/s²).
    pub g_acc: f64,
    /// Coil resistance (Ω).
    #[serde(rename = "R")]
    pub r: f64,
    /// Position offset of the magnet face (m).
    pub c: f64,
    /// Inductance constant (H·m).
    pub k: f64,
}

impl PlantParams {
    /// Parameter set used in the simulation study.
    pub const fn simulation() -> Self {
        PlantParams {
            m: 0.0844,
            g_acc: 9.81,
            r: 2.52,
            c: 0.005,
            k: 6404.2e-6,
        }
    }

    /// Parameter set of the laboratory rig.
    pub const fn experiment() -> Self {
        PlantParams {
            m: 0.0844,
            g_acc: 9.81,
            r: 10.615,
            c: 0.0079,
            k: 49950e-6,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("plant.m", self.m)?;
        positive("plant.g_acc", self.g_acc)?;
        positive("plant.R", self.r)?;
        positive("plant.c", self.c)?;
        positive("plant.k", self.k)
    }

    /// Flux that balances gravity, `√(2·k·m·g)`.
    pub fn equilibrium_flux(&self) -> f64 {
        (2.0 * self.k * self.m * self.g_acc).sqrt()
    }

    /// Voltage holding the ball at rest at position `q`.
    pub fn equilibrium_voltage(&self, q: f64) -> f64 {
        -(self.r / self.k) * self.equilibrium_flux() * (q - self.c)
    }

    /// Rest state at absolute position `q`.
    pub fn equilibrium_state(&self, q: f64) -> PlantState {
        PlantState::new(self.equilibrium_flux(), q - self.c, 0.0)
    }
}

impl Default for PlantParams {
    fn default() -> Self {
        Self::simulation()
    }
}

/// Plant state `x = (λ, q − c, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    /// Flux linkage (Wb).
    pub x1: f64,
    /// Shifted position `q − c` (m); physically negative.
    pub x2: f64,
    /// Momentum (kg·m/s).
    pub x3: f64,
}

impl PlantState {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        PlantState { x1, x2, x3 }
    }

    pub const fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub const fn from_array(a: [f64; 3]) -> Self {
        PlantState::new(a[0], a[1], a[2])
    }

    /// Absolute ball position `q`.
    pub fn position(&self, params: &PlantParams) -> f64 {
        self.x2 + params.c
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }
}

/// Vector field `f(x) + g·u`.
pub fn dynamics(x: &PlantState, u: f64, params: &PlantParams) -> PlantState {
    PlantState {
        x1: params.r / params.k * x.x1 * x.x2 + u,
        x2: x.x3 / params.m,
        x3: x.x1 * x.x1 / (2.0 * params.k) - params.m * params.g_acc,
    }
}

/// Averaged system driven by the controller output alone. The vector field is
/// the same as [`dynamics`]; the probing term is simply absent from `u_c`.
pub fn averaged_dynamics(x: &PlantState, u_c: f64, params: &PlantParams) -> PlantState {
    dynamics(x, u_c, params)
}

/// Output `y = x1·x2` (Wb·m).
pub fn output(x: &PlantState) -> f64 {
    x.x1 * x.x2
}

/// Coil current `i = −x1·x2/k` (A).
pub fn current(x: &PlantState, params: &PlantParams) -> f64 {
    -x.x1 * x.x2 / params.k
}

/// Uniform current-sensor noise, sample-and-held.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Half-range of the uniform current noise (A).
    pub amplitude: f64,
    pub seed: u64,
    /// Hold period (s). `None` holds for one integration step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold_interval: Option<f64>,
}

impl NoiseConfig {
    pub const fn none() -> Self {
        NoiseConfig {
            amplitude: 0.0,
            seed: 0,
            hold_interval: None,
        }
    }

    /// Noise level of the simulation study: ±3 mA.
    pub const fn uniform(amplitude: f64, seed: u64) -> Self {
        NoiseConfig {
            amplitude,
            seed,
            hold_interval: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        non_negative("noise.amplitude", self.amplitude)?;
        if let Some(hold) = self.hold_interval {
            positive("noise.hold_interval", hold)?;
        }
        Ok(())
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::none()
    }
}

/// Deterministic noise generator. Slot `j` covers `[j·hold, (j+1)·hold)` and
/// draws the `j`-th value of the seeded stream, so the sequence depends only on
/// the seed and the hold period, never on how often it is queried.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    amplitude: f64,
    hold: f64,
    rng: ChaCha8Rng,
    slot: Option<u64>,
    value: f64,
}

impl NoiseSource {
    pub fn new(cfg: &NoiseConfig, default_hold: f64) -> Self {
        NoiseSource {
            amplitude: cfg.amplitude,
            hold: cfg.hold_interval.unwrap_or(default_hold),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            slot: None,
            value: 0.0,
        }
    }

    /// Current noise `ν(t)` in amperes. Times must be non-decreasing.
    pub fn sample(&mut self, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        // relative nudge so sample instants k·h land in slot k despite rounding
        let target = (t / self.hold * (1.0 + 1e-12) + 1e-9).floor().max(0.0) as u64;
        loop {
            match self.slot {
                Some(s) if s >= target => break,
                _ => {
                    self.value = self.rng.gen_range(-self.amplitude..=self.amplitude);
                    self.slot = Some(self.slot.map_or(0, |s| s + 1));
                }
            }
        }
        self.value
    }
}

/// Noisy measurement of `y`: the current is corrupted by `ν` and mapped back
/// through `y = −k·i`.
pub fn measure(x: &PlantState, params: &PlantParams, noise: &mut NoiseSource, t: f64) -> f64 {
    output(x) - params.k * noise.sample(t)
}
