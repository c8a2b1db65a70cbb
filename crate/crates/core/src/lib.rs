//! Active input-output feedback linearization of a flexible-joint manipulator
//! through extended state observers.
//!
//! The crate is split along the closed loop:
//!
//! - [`plant`]: manipulator dynamics and a relative-degree check,
//! - [`observer`]: linear and nonlinear ESOs plus a Lyapunov certificate,
//! - [`differentiator`]: classic and tanh tracking differentiators,
//! - [`controller`]: fal/INLSEF state-error feedback and the linearizing law,
//! - [`odesim`]: RK4/RK45 closed-loop runner with events and noise,
//! - [`metrics`]: ITAE, ISU, IAU and OPI,
//! - [`tuner`]: GA parameter search,
//! - [`config`] and [`preset`]: TOML run descriptions and the shipped scenarios.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod config;
pub mod controller;
pub mod differentiator;
pub mod error;
pub mod metrics;
pub mod observer;
pub mod odesim;
pub mod plant;
pub mod preset;
pub mod tuner;

pub use config::SimConfig;
pub use controller::{aiofl_law, fal, inlsef, nlsef, ControlLaw, InlsefConfig, NlsefConfig};
pub use differentiator::{itd_derivative, td_derivative, TdConfig, TdState};
pub use error::{Error, Result};
pub use metrics::{MetricsReport, OpiWeights};
pub use observer::{
    g_function, gains_from_bandwidth, inleso_derivative, leso_derivative, lyapunov_validate, Eso, LyapunovReport,
    ObserverConfig, ObserverVariant,
};
pub use odesim::{
    rk4_step, run_closed_loop, ClosedLoop, Event, EventKind, Integrator, NoiseSpec, Reference, RunRecord, Sample,
    Scenario, CSV_HEADER,
};
pub use plant::{
    check_relative_degree, output, slfjm_default_params, slfjm_dynamics, PlantParams, PlantState, RelativeDegreeReport,
};
pub use preset::{preset, Preset, PRESET_NAMES};
pub use tuner::{ga_optimize, GaConfig, GaResult, SearchEntry, SearchSpace, TuneSpec};

/// `sign(0) = 0`.
#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
