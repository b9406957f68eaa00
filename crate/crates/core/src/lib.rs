//! Sensorless observation and control of a magnetically levitated ball.
//!
//! A sinusoidal probe injected into the coil voltage makes the ball position
//! appear in the measured current as a virtual output. A gradient estimator
//! built on a delay and a windowed-average operator recovers it; flux,
//! resistance and momentum observers are layered on top, and the estimates
//! close an IDA-PBC loop.
//!
//! ```no_run
//! use maglev_core::harness::{run_metrics, simulate, ScenarioConfig};
//!
//! let cfg = ScenarioConfig::sensorless();
//! let log = simulate(&cfg).expect("run completes");
//! let metrics = run_metrics(&log, &cfg);
//! println!("{:?}", metrics.steady());
//! ```

pub mod control;
pub mod error;
pub mod harness;
pub mod observer;
pub mod ode;
pub mod plant;
pub mod sigproc;
pub mod vout;

pub use error::ConfigError;
