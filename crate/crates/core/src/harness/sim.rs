use thiserror::Error;

use super::config::{ControllerKind, ScenarioConfig};
use super::log::{Record, TrajectoryLog};
use crate::control::{ida_pbc_sensorless, ida_pbc_state_feedback, Backstepping, SignalSource};
use crate::error::ConfigError;
use crate::observer::{algebraic_flux, interpolate, ObserverBundle, CONTINUOUS_DIM};
use crate::ode::rk4_step;
use crate::plant::{current, dynamics, measure, output, NoiseSource, PlantState};
use crate::sigproc::{probe, RunningIntegral};

/// Window of the logged excitation metric, in probe periods.
pub const PE_WINDOW_PERIODS: u32 = 10;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(#[from] ConfigError),
    #[error("ball reached the magnet (x2 = {x2:e} m) at t = {t:.6} s")]
    Crash { t: f64, x2: f64, log: Box<TrajectoryLog> },
    #[error("non-finite {what} at t = {t:.6} s")]
    Overflow {
        t: f64,
        what: &'static str,
        log: Box<TrajectoryLog>,
    },
}

impl SimError {
    /// Records logged before the run was aborted.
    pub fn partial_log(&self) -> Option<&TrajectoryLog> {
        match self {
            SimError::Config(_) => None,
            SimError::Crash { log, .. } | SimError::Overflow { log, .. } => Some(log),
        }
    }
}

/// Joint state integrated by RK4: plant, observer continuous part, and the
/// backstepping integral.
const JOINT_DIM: usize = 3 + CONTINUOUS_DIM + 1;

/// Run the closed loop at step `h = ε/N`.
///
/// Plant, continuous observer states, controller and probe form one
/// continuous-time system integrated with RK4. The measurement noise and the
/// reference are held over each step. `θ̂2` advances by forward Euler on the
/// sample taken at the start of the step and `ŷ_v` is interpolated linearly
/// in between.
pub fn simulate(cfg: &ScenarioConfig) -> Result<TrajectoryLog, SimError> {
    cfg.validate()?;
    let params = cfg.plant;
    let inj = cfg.injection;
    let h = cfg.step();
    let steps = cfg.total_steps();
    let stride = cfg.log_stride();
    let ida = cfg.controller.ida();
    let u_max = cfg.controller.u_max;
    let mut backstepping = Backstepping::new(cfg.controller.backstepping());
    let bs_cfg = *backstepping.config();

    let mut x = cfg.initial_state();
    let mut noise = NoiseSource::new(&cfg.noise, h);
    let y0 = measure(&x, &params, &mut noise, 0.0);
    let mut observer = ObserverBundle::new(&cfg.observer, inj, params, y0, h)?;
    let pe_samples = (PE_WINDOW_PERIODS * cfg.sim.steps_per_period) as usize;
    let mut pe = RunningIntegral::with_samples(pe_samples, h);
    let mut log = TrajectoryLog::with_capacity(steps / stride + 1);

    for k in 0..=steps {
        let t = k as f64 * h;
        let y = if k == 0 {
            y0
        } else {
            measure(&x, &params, &mut noise, t)
        };
        // noise held over the step: y(τ) = x1·x2 + offset
        let offset = y - output(&x);
        let q_star = cfg.reference.reference(t);

        // u_C as a function of the joint state within the step
        let control =
            |obs: &ObserverBundle, xs: &PlantState, os: &[f64; CONTINUOUS_DIM], yv: f64, integral: f64| match cfg
                .controller
                .kind
            {
                ControllerKind::IdaSensorless => {
                    ida_pbc_sensorless(&obs.estimate_at(os, yv), output(xs) + offset, q_star, &params, &ida)
                }
                ControllerKind::IdaState => ida_pbc_state_feedback(xs, q_star, &params, &ida),
                ControllerKind::Backstepping => {
                    let est = obs.estimate_at(os, yv);
                    let (q, p) = match bs_cfg.signals {
                        SignalSource::Estimates => (est.x2 + params.c, est.x3),
                        SignalSource::Truth => (xs.position(&params), xs.x3),
                    };
                    let r = match bs_cfg.resistance {
                        SignalSource::Estimates => est.r_hat,
                        SignalSource::Truth => params.r,
                    };
                    backstepping
                        .law(q, p, q_star, integral, r, &params)
                        .clamp(-u_max, u_max)
                }
            };
        let integral_rate = |xs: &PlantState, yv: f64| -> f64 {
            let q = match bs_cfg.signals {
                SignalSource::Estimates => yv + params.c,
                SignalSource::Truth => xs.position(&params),
            };
            q - q_star
        };

        let os = observer.continuous_state();
        let est = observer.estimate();
        let yv = observer.virtual_output();
        let u_c = control(&observer, &x, &os, yv, backstepping.integral());
        let s = probe(t, &inj);
        let u = u_c + s;
        let i = current(&x, &params);
        let pe_value = pe.push(i * i) * pe.window();
        let theta2 = observer.vout.theta2_hat();
        let p_kkl = observer.kkl_momentum();
        let p_luenberger = observer.luenberger_momentum();

        if !(est.x1.is_finite() && est.x2.is_finite() && est.x3.is_finite() && est.r_hat.is_finite())
            || !u_c.is_finite()
        {
            return Err(SimError::Overflow {
                t,
                what: "observer or controller output",
                log: Box::new(log),
            });
        }

        let (regression, yv0, yv1) = observer.advance_virtual_output(y, t, h);
        let mut joint = [0.0; JOINT_DIM];
        joint[..3].copy_from_slice(&x.to_array());
        joint[3..3 + CONTINUOUS_DIM].copy_from_slice(&os);
        joint[JOINT_DIM - 1] = backstepping.integral();
        let next = if k < steps {
            let obs = &observer;
            Some(rk4_step(
                |tau, j: &[f64; JOINT_DIM]| {
                    let xs = PlantState::new(j[0], j[1], j[2]);
                    let mut o = [0.0; CONTINUOUS_DIM];
                    o.copy_from_slice(&j[3..3 + CONTINUOUS_DIM]);
                    let yv = interpolate(yv0, yv1, (tau - t) / h);
                    let u = control(obs, &xs, &o, yv, j[JOINT_DIM - 1]) + probe(tau, &inj);
                    let dx = dynamics(&xs, u, &params);
                    let dobs = obs.rates(&o, u, output(&xs) + offset, yv);
                    let mut d = [0.0; JOINT_DIM];
                    d[..3].copy_from_slice(&dx.to_array());
                    d[3..3 + CONTINUOUS_DIM].copy_from_slice(&dobs);
                    d[JOINT_DIM - 1] = integral_rate(&xs, yv);
                    d
                },
                t,
                joint,
                h,
            ))
        } else {
            None
        };

        let mut o = [0.0; CONTINUOUS_DIM];
        o.copy_from_slice(&next.unwrap_or(joint)[3..3 + CONTINUOUS_DIM]);
        observer.set_continuous_state(o);

        if k % stride == 0 {
            log.records.push(Record {
                t,
                x1: x.x1,
                x2: x.x2,
                x3: x.x3,
                y,
                i,
                u,
                u_c,
                s,
                yv_hat: yv,
                x1_hat: est.x1,
                x2_hat: est.x2,
                x3_hat: est.x3,
                r_hat: est.r_hat,
                theta2_hat: theta2,
                y_reg: regression.value,
                q_star,
                pe: pe_value,
                z: os[5],
                p_hat_kkl: p_kkl,
                p_hat_luenberger: p_luenberger,
                x1_alg: algebraic_flux(y, yv),
            });
        }
        let Some(next) = next else { break };

        x = PlantState::new(next[0], next[1], next[2]);
        backstepping.set_integral(next[JOINT_DIM - 1]);
        if !x.is_finite() {
            return Err(SimError::Overflow {
                t: t + h,
                what: "plant state",
                log: Box::new(log),
            });
        }
        if x.x2 >= 0.0 {
            return Err(SimError::Crash {
                t: t + h,
                x2: x.x2,
                log: Box::new(log),
            });
        }
    }
    Ok(log)
}
