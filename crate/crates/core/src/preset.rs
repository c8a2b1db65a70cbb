//! Registry of the shipped scenario/observer pairings.
//!
//! * `s1-*`: 20 s of `45·sin(2t)`, nominal plant.
//! * `s2-*`: s1 with load inertia ×1.4 from t = 0 and a 0.5 N·m disturbance step at t = 10.
//! * `s3-*`: s1 with Gaussian measurement noise (mean 0, variance 1e-4) and retuned observers.

use crate::config::SimConfig;
use crate::controller::{ControlLaw, InlsefConfig, NlsefConfig};
use crate::differentiator::TdConfig;
use crate::error::{Error, Result};
use crate::metrics::OpiWeights;
use crate::observer::{ObserverConfig, ObserverVariant};
use crate::odesim::{Event, EventKind, NoiseSpec, Scenario};
use crate::plant::PlantParams;

pub type Preset = SimConfig;

pub const PRESET_NAMES: [&str; 6] = ["s1-leso", "s1-inleso", "s2-leso", "s2-inleso", "s3-leso", "s3-inleso"];

/// Seed used by noisy presets unless overridden.
pub const DEFAULT_NOISE_SEED: u64 = 1;

const EVAL_HORIZON: f64 = 20.0;

#[derive(Clone, Copy, PartialEq)]
enum Observer {
    Leso,
    Inleso,
}

fn leso_s1() -> ObserverConfig {
    ObserverConfig {
        rho: 4,
        omega0: 513.8283,
        a: vec![8.772, 0.1946, 0.7384, 9.6881e-3, 2.2651e-6],
        b0: 22.771,
        variant: ObserverVariant::Linear,
    }
}

const INLESO_G: ObserverVariant =
    ObserverVariant::ImprovedNonlinear { k_alpha: 0.3682, k_beta: 0.1290, alpha: 0.6906, beta: 0.1880 };

fn inleso_s1() -> ObserverConfig {
    ObserverConfig {
        rho: 4,
        omega0: 104.6131,
        a: vec![0.1364, 0.6691, 0.6893, 0.0155, 14.3801e-6],
        b0: 8.745,
        variant: INLESO_G,
    }
}

fn leso_s3() -> ObserverConfig {
    ObserverConfig {
        rho: 4,
        omega0: 851.0106,
        a: vec![5.40326, 0.2871, 0.7644, 0.01, 1.22e-6],
        b0: 33.7432,
        variant: ObserverVariant::Linear,
    }
}

fn inleso_s3() -> ObserverConfig {
    ObserverConfig { rho: 4, omega0: 121.020, a: vec![0.205, 0.6, 0.42, 0.0232, 7.19e-6], b0: 9.7, variant: INLESO_G }
}

fn nlsef() -> ControlLaw {
    ControlLaw::Nlsef(NlsefConfig::new(0.3804, 16.6108, 0.4583, 14.6238))
}

fn inlsef() -> ControlLaw {
    ControlLaw::Inlsef(InlsefConfig {
        k11: 1.7741,
        k12: 1.2147,
        k21: 0.00115,
        k22: 0.3312,
        mu1: 3.8297,
        mu2: 10.9415,
        alpha1: 0.8244,
        alpha2: 1.8079,
        delta: 3.39,
    })
}

fn classic_td() -> TdConfig {
    TdConfig::Classic { r_limit: 2408.6918 }
}

fn improved_td() -> TdConfig {
    TdConfig::Improved { a: 0.9153, b: 8.7141, c: 0.0813, rho_td: 22.89333, normalized: true }
}

fn build(scenario_id: u8, obs: Observer) -> SimConfig {
    let mut scenario = Scenario { tf: EVAL_HORIZON, ..Scenario::default() };
    match scenario_id {
        2 => {
            scenario.events = vec![
                Event { time: 0.0, kind: EventKind::InertiaScale { factor: 1.4 } },
                Event { time: 10.0, kind: EventKind::DisturbanceStep { amplitude: 0.5 } },
            ];
        }
        3 => {
            scenario.noise = Some(NoiseSpec { mean: 0.0, variance: 1e-4, seed: DEFAULT_NOISE_SEED });
        }
        _ => {}
    }
    let observer = match (scenario_id, obs) {
        (3, Observer::Leso) => leso_s3(),
        (3, Observer::Inleso) => inleso_s3(),
        (_, Observer::Leso) => leso_s1(),
        (_, Observer::Inleso) => inleso_s1(),
    };
    let (controller, differentiator) = match obs {
        Observer::Leso => (nlsef(), classic_td()),
        Observer::Inleso => (inlsef(), improved_td()),
    };
    let tag = if obs == Observer::Leso { "leso" } else { "inleso" };
    SimConfig {
        name: format!("s{scenario_id}-{tag}"),
        plant: PlantParams::default(),
        scenario,
        observer,
        controller,
        differentiator,
        metrics: OpiWeights::reference(EVAL_HORIZON),
    }
}

/// Looks up a shipped preset by name.
pub fn preset(name: &str) -> Result<Preset> {
    let (sid, obs) = match name {
        "s1-leso" => (1, Observer::Leso),
        "s1-inleso" => (1, Observer::Inleso),
        "s2-leso" => (2, Observer::Leso),
        "s2-inleso" => (2, Observer::Inleso),
        "s3-leso" => (3, Observer::Leso),
        "s3-inleso" => (3, Observer::Inleso),
        _ => return Err(Error::UnknownPreset { name: name.to_string(), available: PRESET_NAMES.join(", ") }),
    };
    Ok(build(sid, obs))
}

pub fn all_presets() -> Vec<Preset> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("registry names resolve")).collect()
}
