//! Adaptive observers for resistance, flux, position and momentum, and the
//! seventh-order bundle that chains them behind the virtual-output estimator.
//!
//! Each component has an explicit Euler `step` for standalone use. The bundle
//! integrates its continuous part `(v1, v2, φ_R, R̂, x̂1, z, z1, z2)` with RK4
//! while `θ̂2` follows its forward-Euler gradient law, so `ŷ_v` is constant
//! within a step.

use serde::{Deserialize, Serialize};

use crate::error::{positive, ConfigError};
use crate::ode::rk4_step;
use crate::plant::PlantParams;
use crate::sigproc::InjectionConfig;
use crate::vout::{Regression, VoutEstimator, DEFAULT_CEILING};

/// Size of the continuous part of the bundle state.
pub const CONTINUOUS_DIM: usize = 8;

/// Filtered linear regression `Y_R = R·φ_R` for the coil resistance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistanceRegression {
    pub y_r: f64,
    pub phi_r: f64,
}

/// Gradient estimator of the coil resistance driven by first-order filters
/// `a/(s + a)` of the input, of `y/ŷ_v`, and of `y/k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceEstimator {
    pub v1: f64,
    pub v2: f64,
    pub phi_r: f64,
    pub r_hat: f64,
    a: f64,
    gamma_r: f64,
    k: f64,
}

impl ResistanceEstimator {
    pub fn new(a: f64, gamma_r: f64, k: f64, r_hat: f64) -> Self {
        ResistanceEstimator {
            v1: 0.0,
            v2: 0.0,
            phi_r: 0.0,
            r_hat,
            a,
            gamma_r,
            k,
        }
    }

    /// Start the filters at the fixed points they would reach for constant
    /// `u`, `y` and `ŷ_v`.
    pub fn settled(a: f64, gamma_r: f64, k: f64, r_hat: f64, u: f64, y: f64, yv_hat: f64) -> Self {
        ResistanceEstimator {
            v1: u,
            v2: y / yv_hat,
            phi_r: y / k,
            ..Self::new(a, gamma_r, k, r_hat)
        }
    }

    /// Read `(Y_R, φ_R)` for the current sample, then advance the filters.
    pub fn filter_step(&mut self, u: f64, y: f64, yv_hat: f64, h: f64) -> ResistanceRegression {
        let a = self.a;
        let flux = y / yv_hat;
        let reg = self.regression(y, yv_hat);
        self.v1 += h * (-a * self.v1 + a * u);
        self.v2 += h * (-a * self.v2 + a * flux);
        self.phi_r += h * (-a * self.phi_r + a / self.k * y);
        reg
    }

    /// Regression read from the current filter state.
    pub fn regression(&self, y: f64, yv_hat: f64) -> ResistanceRegression {
        ResistanceRegression {
            y_r: -self.v1 + self.a * y / yv_hat - self.a * self.v2,
            phi_r: self.phi_r,
        }
    }

    /// Time derivatives of `(v1, v2, φ_R, R̂)`.
    pub fn rates(&self, u: f64, y: f64, yv_hat: f64) -> [f64; 4] {
        let a = self.a;
        let reg = self.regression(y, yv_hat);
        [
            -a * self.v1 + a * u,
            -a * self.v2 + a * y / yv_hat,
            -a * self.phi_r + a / self.k * y,
            self.gamma_r * reg.phi_r * (reg.y_r - reg.phi_r * self.r_hat),
        ]
    }

    pub fn update(&mut self, reg: &ResistanceRegression, h: f64) -> f64 {
        self.r_hat += h * self.gamma_r * reg.phi_r * (reg.y_r - reg.phi_r * self.r_hat);
        self.r_hat
    }
}

/// Closed-loop flux observer with output injection through `ŷ_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxObserver {
    pub x1_hat: f64,
    gamma_lambda: f64,
}

impl FluxObserver {
    pub fn new(gamma_lambda: f64, x1_hat: f64) -> Self {
        FluxObserver { x1_hat, gamma_lambda }
    }

    /// Observer vector field `(R̂/k)·y + u − γ_λ·(y − ŷ_v·x̂1)`.
    pub fn derivative(&self, r_hat: f64, y: f64, u: f64, yv_hat: f64, k: f64) -> f64 {
        r_hat / k * y + u - self.gamma_lambda * (y - yv_hat * self.x1_hat)
    }

    pub fn step(&mut self, r_hat: f64, y: f64, u: f64, yv_hat: f64, k: f64, h: f64) -> f64 {
        self.x1_hat += h * self.derivative(r_hat, y, u, yv_hat, k);
        self.x1_hat
    }
}

/// Division-based flux estimate `y/ŷ_v`. Noise sensitive; diagnostics only.
pub fn algebraic_flux(y: f64, yv_hat: f64) -> f64 {
    y / yv_hat
}

/// Position estimate from the virtual output: `(x̂2, q̂) = (ŷ_v, ŷ_v + c)`.
pub fn position_estimate(yv_hat: f64, c: f64) -> (f64, f64) {
    (yv_hat, yv_hat + c)
}

/// KKL momentum observer. The internal state tracks `T = x3 − γ_p·y_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct KklObserver {
    pub z: f64,
    gamma_p: f64,
}

impl KklObserver {
    pub fn new(gamma_p: f64, z: f64) -> Self {
        KklObserver { z, gamma_p }
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    /// `x̂3 = z + γ_p·ŷ_v`.
    pub fn estimate(&self, yv_hat: f64) -> f64 {
        self.z + self.gamma_p * yv_hat
    }

    pub fn derivative(&self, x1_hat: f64, yv_hat: f64, params: &PlantParams) -> f64 {
        let gp = self.gamma_p;
        -gp / params.m * self.z + x1_hat * x1_hat / (2.0 * params.k)
            - gp * gp / params.m * yv_hat
            - params.m * params.g_acc
    }

    /// Advance `z` and return `(z, x̂3)`.
    pub fn step(&mut self, x1_hat: f64, yv_hat: f64, params: &PlantParams, h: f64) -> (f64, f64) {
        self.z += h * self.derivative(x1_hat, yv_hat, params);
        (self.z, self.estimate(yv_hat))
    }
}

/// Innovation used by the second Luenberger state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LuenbergerCorrection {
    /// `c2·(x̂2 − z2)`, exactly as the observer is usually written down.
    #[default]
    AsPrinted,
    /// `c2·(x̂2 − z1)`, the dimensionally consistent position innovation.
    PositionInnovation,
}

/// Second-order Luenberger alternative to the KKL momentum observer.
#[derive(Clone, Debug, PartialEq)]
pub struct LuenbergerObserver {
    pub z1: f64,
    pub z2: f64,
    c1: f64,
    c2: f64,
    correction: LuenbergerCorrection,
}

impl LuenbergerObserver {
    pub fn new(c1: f64, c2: f64, correction: LuenbergerCorrection, z1: f64, z2: f64) -> Self {
        LuenbergerObserver {
            z1,
            z2,
            c1,
            c2,
            correction,
        }
    }

    pub fn estimate(&self) -> f64 {
        self.z2
    }

    /// Time derivatives of `(z1, z2)`.
    pub fn derivative(&self, x1_hat: f64, x2_hat: f64, params: &PlantParams) -> [f64; 2] {
        let innovation2 = match self.correction {
            LuenbergerCorrection::AsPrinted => x2_hat - self.z2,
            LuenbergerCorrection::PositionInnovation => x2_hat - self.z1,
        };
        [
            self.z2 / params.m + self.c1 * (x2_hat - self.z1),
            x1_hat * x1_hat / (2.0 * params.k) - params.m * params.g_acc + self.c2 * innovation2,
        ]
    }

    /// Advance `(z1, z2)` and return `x̂3 = z2`.
    pub fn step(&mut self, x1_hat: f64, x2_hat: f64, params: &PlantParams, h: f64) -> f64 {
        let [dz1, dz2] = self.derivative(x1_hat, x2_hat, params);
        self.z1 += h * dz1;
        self.z2 += h * dz2;
        self.z2
    }
}

/// Which momentum estimate the bundle reports as `x̂3`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentaVariant {
    #[default]
    Kkl,
    Luenberger,
}

impl std::str::FromStr for MomentaVariant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kkl" => Ok(MomentaVariant::Kkl),
            "luenberger" => Ok(MomentaVariant::Luenberger),
            other => Err(ConfigError::Other(format!("unknown observer variant `{other}`"))),
        }
    }
}

/// Observer tuning and initial conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    /// Virtual-output adaptation gain γ.
    pub gamma: f64,
    /// Filter pole of the resistance regression (1/s).
    pub a: f64,
    #[serde(rename = "gamma_R")]
    pub gamma_r: f64,
    pub gamma_lambda: f64,
    pub gamma_p: f64,
    /// Projection ceiling on `ŷ_v` (m), strictly negative.
    pub ell: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(default)]
    pub momenta: MomentaVariant,
    #[serde(default)]
    pub luenberger_correction: LuenbergerCorrection,
    /// Initial resistance estimate; defaults to half the plant value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_hat0: Option<f64>,
    /// Initial virtual output; defaults to `−c` (ball at `q = 0`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yv_hat0: Option<f64>,
    /// Initial flux estimate; defaults to `y(0)/ŷ_v(0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1_hat0: Option<f64>,
    /// Initial KKL state; defaults to `−γ_p·ŷ_v(0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
}

impl ObserverConfig {
    /// Gains of the simulation study. `c1`, `c2` place both Luenberger error
    /// poles at the KKL rate `γ_p/m` when the position innovation is used.
    pub fn simulation(params: &PlantParams) -> Self {
        let gamma_p = 30.0;
        let rate = gamma_p / params.m;
        ObserverConfig {
            gamma: 3.89e3,
            a: 500.0,
            gamma_r: 500.0,
            gamma_lambda: 8000.0,
            gamma_p,
            ell: DEFAULT_CEILING,
            c1: 2.0 * rate,
            c2: params.m * rate * rate,
            momenta: MomentaVariant::Kkl,
            luenberger_correction: LuenbergerCorrection::AsPrinted,
            r_hat0: None,
            yv_hat0: None,
            x1_hat0: None,
            z0: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("observer.gamma", self.gamma)?;
        positive("observer.a", self.a)?;
        positive("observer.gamma_R", self.gamma_r)?;
        positive("observer.gamma_lambda", self.gamma_lambda)?;
        positive("observer.gamma_p", self.gamma_p)?;
        positive("observer.c1", self.c1)?;
        positive("observer.c2", self.c2)?;
        if !(self.ell.is_finite() && self.ell < 0.0) {
            return Err(ConfigError::invalid("observer.ell", "finite and < 0", self.ell));
        }
        if let Some(r) = self.r_hat0 {
            if !r.is_finite() {
                return Err(ConfigError::invalid("observer.r_hat0", "finite", r));
            }
        }
        Ok(())
    }
}

/// State estimate emitted by the bundle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateEstimate {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub r_hat: f64,
}

/// Everything produced by one bundle step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BundleStep {
    pub regression: Regression,
    pub resistance: ResistanceRegression,
    pub estimate: StateEstimate,
}

/// Seventh-order adaptive observer with state
/// `χ = (θ̂2, v1, v2, φ_R, R̂, x̂1, z)`. A Luenberger momentum observer runs
/// alongside on the same signals so the two can be compared.
#[derive(Clone, Debug)]
pub struct ObserverBundle {
    pub vout: VoutEstimator,
    pub resistance: ResistanceEstimator,
    pub flux: FluxObserver,
    pub kkl: KklObserver,
    pub luenberger: LuenbergerObserver,
    variant: MomentaVariant,
    params: PlantParams,
}

impl ObserverBundle {
    /// Initialise from the first output sample `y0`. The resistance filters
    /// start settled at the input `−(R̂(0)/k)·y0`, which makes the first
    /// resistance innovation zero.
    pub fn new(
        cfg: &ObserverConfig,
        injection: InjectionConfig,
        params: PlantParams,
        y0: f64,
        h: f64,
    ) -> Result<Self, ConfigError> {
        cfg.validate()?;
        params.validate()?;
        let vout = VoutEstimator::new(injection, cfg.gamma, cfg.ell, cfg.yv_hat0.unwrap_or(-params.c), h)?;
        let yv0 = vout.virtual_output();
        let r_hat0 = cfg.r_hat0.unwrap_or(0.5 * params.r);
        let x1_hat0 = cfg.x1_hat0.unwrap_or_else(|| algebraic_flux(y0, yv0));
        let z0 = cfg.z0.unwrap_or(-cfg.gamma_p * yv0);
        Ok(ObserverBundle {
            vout,
            resistance: ResistanceEstimator::settled(
                cfg.a,
                cfg.gamma_r,
                params.k,
                r_hat0,
                -r_hat0 / params.k * y0,
                y0,
                yv0,
            ),
            flux: FluxObserver::new(cfg.gamma_lambda, x1_hat0),
            kkl: KklObserver::new(cfg.gamma_p, z0),
            luenberger: LuenbergerObserver::new(cfg.c1, cfg.c2, cfg.luenberger_correction, yv0, 0.0),
            variant: cfg.momenta,
            params,
        })
    }

    pub fn variant(&self) -> MomentaVariant {
        self.variant
    }

    pub fn chi(&self) -> [f64; 7] {
        [
            self.vout.theta2_hat(),
            self.resistance.v1,
            self.resistance.v2,
            self.resistance.phi_r,
            self.resistance.r_hat,
            self.flux.x1_hat,
            self.kkl.z,
        ]
    }

    pub fn virtual_output(&self) -> f64 {
        self.vout.virtual_output()
    }

    pub fn kkl_momentum(&self) -> f64 {
        self.kkl.estimate(self.virtual_output())
    }

    pub fn luenberger_momentum(&self) -> f64 {
        self.luenberger.estimate()
    }

    /// Output map `x̂ = (x̂1, ŷ_v, x̂3)` with `x̂3` from the selected variant.
    pub fn estimate(&self) -> StateEstimate {
        let x3 = match self.variant {
            MomentaVariant::Kkl => self.kkl_momentum(),
            MomentaVariant::Luenberger => self.luenberger_momentum(),
        };
        StateEstimate {
            x1: self.flux.x1_hat,
            x2: self.virtual_output(),
            x3,
            r_hat: self.resistance.r_hat,
        }
    }

    /// Continuous part of the state, `(v1, v2, φ_R, R̂, x̂1, z, z1, z2)`.
    pub fn continuous_state(&self) -> [f64; CONTINUOUS_DIM] {
        [
            self.resistance.v1,
            self.resistance.v2,
            self.resistance.phi_r,
            self.resistance.r_hat,
            self.flux.x1_hat,
            self.kkl.z,
            self.luenberger.z1,
            self.luenberger.z2,
        ]
    }

    pub fn set_continuous_state(&mut self, s: [f64; CONTINUOUS_DIM]) {
        let [v1, v2, phi_r, r_hat, x1_hat, z, z1, z2] = s;
        self.resistance.v1 = v1;
        self.resistance.v2 = v2;
        self.resistance.phi_r = phi_r;
        self.resistance.r_hat = r_hat;
        self.flux.x1_hat = x1_hat;
        self.kkl.z = z;
        self.luenberger.z1 = z1;
        self.luenberger.z2 = z2;
    }

    fn with_continuous_state(
        &self,
        s: &[f64; CONTINUOUS_DIM],
    ) -> (ResistanceEstimator, FluxObserver, KklObserver, LuenbergerObserver) {
        let resistance = ResistanceEstimator {
            v1: s[0],
            v2: s[1],
            phi_r: s[2],
            r_hat: s[3],
            ..self.resistance.clone()
        };
        let flux = FluxObserver {
            x1_hat: s[4],
            ..self.flux.clone()
        };
        let kkl = KklObserver {
            z: s[5],
            ..self.kkl.clone()
        };
        let luenberger = LuenbergerObserver {
            z1: s[6],
            z2: s[7],
            ..self.luenberger.clone()
        };
        (resistance, flux, kkl, luenberger)
    }

    /// Output map applied to an arbitrary continuous state and virtual output.
    pub fn estimate_at(&self, s: &[f64; CONTINUOUS_DIM], yv: f64) -> StateEstimate {
        let x3 = match self.variant {
            MomentaVariant::Kkl => s[5] + self.kkl.gamma_p * yv,
            MomentaVariant::Luenberger => s[7],
        };
        StateEstimate {
            x1: s[4],
            x2: yv,
            x3,
            r_hat: s[3],
        }
    }

    /// Vector field of the continuous part for input `u`, output `y` and
    /// virtual output `yv`.
    pub fn rates(&self, s: &[f64; CONTINUOUS_DIM], u: f64, y: f64, yv: f64) -> [f64; CONTINUOUS_DIM] {
        let (res, flux, kkl, luenberger) = self.with_continuous_state(s);
        let [dv1, dv2, dphi, dr] = res.rates(u, y, yv);
        let dx1 = flux.derivative(res.r_hat, y, u, yv, self.params.k);
        let dz = kkl.derivative(flux.x1_hat, yv, &self.params);
        let [dz1, dz2] = luenberger.derivative(flux.x1_hat, yv, &self.params);
        [dv1, dv2, dphi, dr, dx1, dz, dz1, dz2]
    }

    /// Run the gradient update of `θ̂2` on the sample `y` taken at `t` and
    /// return the regression with `ŷ_v` before and after the update. Within
    /// the step `ŷ_v` follows the straight line between the two, which is the
    /// trajectory implied by forward Euler.
    pub fn advance_virtual_output(&mut self, y: f64, t: f64, h: f64) -> (Regression, f64, f64) {
        let before = self.virtual_output();
        let regression = self.vout.step(y, t, h);
        (regression, before, self.virtual_output())
    }

    /// Advance one step with `u` and `y` held over `[t, t + h]`: forward Euler
    /// on `θ̂2`, then RK4 on the continuous part.
    pub fn step(&mut self, u: f64, y: f64, t: f64, h: f64) -> BundleStep {
        let resistance = self.resistance.regression(y, self.virtual_output());
        let (regression, yv0, yv1) = self.advance_virtual_output(y, t, h);
        let next = rk4_step(
            |tau, s| self.rates(s, u, y, interpolate(yv0, yv1, (tau - t) / h)),
            t,
            self.continuous_state(),
            h,
        );
        self.set_continuous_state(next);
        BundleStep {
            regression,
            resistance,
            estimate: self.estimate(),
        }
    }
}

/// Linear interpolation `a + s·(b − a)`.
pub fn interpolate(a: f64, b: f64, s: f64) -> f64 {
    a + s * (b - a)
}
