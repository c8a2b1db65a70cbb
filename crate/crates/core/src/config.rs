//! Human-editable run configuration.
//!
//! A configuration file is TOML with one table per component:
//!
//! ```toml
//! name = "s1-leso"
//!
//! [plant]            # Ks, Jh, m, g, h, Km, Kg, Jl, Rm
//! [scenario]         # tf, dt, sample_dt, integrator ("rk4" | "rk45"), rtol, atol
//! [scenario.reference]   # kind = "sine" (amplitude, omega) | "constant" (value)
//! [scenario.noise]       # optional: mean, variance, seed
//! [[scenario.events]]    # time, kind = "disturbance_step" | "inertia_scale", value
//! [observer]         # variant = "linear" | "improved_nonlinear", omega0, a1..a5, b0,
//!                    # k_alpha, k_beta, alpha, beta
//! [controller]       # law = "nlsef" | "inlsef"
//! [controller.nlsef]     # alpha1, alpha2, delta1, delta2, kp, kd
//! [controller.inlsef]    # k11, k12, k21, k22, mu1, mu2, alpha1, alpha2, delta
//! [differentiator]   # variant = "classic" (R) | "improved" (a, b, c, rho_td, normalized)
//! [metrics]          # w1, w2, w3, N1, N2, N3, tf
//! ```
//!
//! Every numeric leaf is addressable by its dotted path (`observer.omega0`,
//! `controller.nlsef.delta1`, ...), which is what the tuner's search space
//! refers to.

use serde::{Deserialize, Serialize};

use crate::controller::{ControlLaw, InlsefConfig, NlsefConfig};
use crate::differentiator::TdConfig;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport, OpiWeights};
use crate::observer::{ObserverConfig, ObserverVariant};
use crate::odesim::{run_closed_loop, Event, EventKind, Integrator, NoiseSpec, Reference, RunRecord, Scenario};
use crate::plant::PlantParams;

/// Everything needed to run and score one closed-loop simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub name: String,
    pub plant: PlantParams,
    pub scenario: Scenario,
    pub observer: ObserverConfig,
    pub controller: ControlLaw,
    pub differentiator: TdConfig,
    pub metrics: OpiWeights,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.scenario.validate()?;
        self.observer.validate()?;
        if self.observer.rho != 4 {
            return Err(Error::invalid_config("the manipulator needs an observer with rho = 4"));
        }
        self.controller.validate()?;
        self.differentiator.validate()?;
        self.metrics.validate()?;
        if self.metrics.tf > self.scenario.tf {
            return Err(Error::invalid_config(format!(
                "metrics horizon {} exceeds scenario horizon {}",
                self.metrics.tf, self.scenario.tf
            )));
        }
        Ok(())
    }

    /// Simulates the scenario with these components.
    pub fn run(&self) -> Result<RunRecord> {
        run_closed_loop(&self.scenario, &self.plant, &self.observer, &self.controller, &self.differentiator)
    }

    /// Simulates and scores over `metrics.tf`.
    pub fn run_and_score(&self) -> Result<(RunRecord, MetricsReport)> {
        let rec = self.run()?;
        let m = metrics::evaluate(&rec, &self.metrics)?;
        Ok((rec, m))
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let cfg = SimConfig::try_from(file)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ConfigFile::from(self)).expect("config structure always serializes")
    }

    pub(crate) fn to_value(&self) -> toml::Value {
        toml::Value::try_from(ConfigFile::from(self)).expect("config structure always serializes")
    }

    pub(crate) fn from_value(v: toml::Value) -> Result<Self> {
        let file: ConfigFile = v.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        SimConfig::try_from(file)
    }

    /// Reads the numeric leaf at a dotted path.
    pub fn get_param(&self, path: &str) -> Result<f64> {
        let v = self.to_value();
        let leaf = lookup(&v, path)?;
        as_number(leaf).ok_or_else(|| Error::invalid_config(format!("config key `{path}` is not numeric")))
    }

    /// Returns a copy with the numeric leaf at `path` replaced by `value`.
    /// The key must already exist.
    pub fn with_param(&self, path: &str, value: f64) -> Result<Self> {
        self.with_params(&[(path, value)])
    }

    pub fn with_params(&self, assignments: &[(&str, f64)]) -> Result<Self> {
        let mut v = self.to_value();
        for &(path, value) in assignments {
            let leaf = lookup_mut(&mut v, path)?;
            *leaf = match leaf {
                toml::Value::Float(_) => toml::Value::Float(value),
                toml::Value::Integer(_) => {
                    if value.fract() != 0.0 || !value.is_finite() {
                        return Err(Error::invalid_config(format!("config key `{path}` needs an integer")));
                    }
                    toml::Value::Integer(value as i64)
                }
                _ => return Err(Error::invalid_config(format!("config key `{path}` is not numeric"))),
            };
        }
        SimConfig::from_value(v)
    }
}

fn as_number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn lookup<'a>(v: &'a toml::Value, path: &str) -> Result<&'a toml::Value> {
    path.split('.').try_fold(v, |node, key| {
        node.get(key).ok_or_else(|| Error::invalid_config(format!("unknown config key `{path}`")))
    })
}

fn lookup_mut<'a>(v: &'a mut toml::Value, path: &str) -> Result<&'a mut toml::Value> {
    path.split('.').try_fold(v, |node, key| {
        node.get_mut(key).ok_or_else(|| Error::invalid_config(format!("unknown config key `{path}`")))
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    name: String,
    plant: PlantParams,
    scenario: ScenarioFile,
    observer: ObserverFile,
    controller: ControllerFile,
    differentiator: DifferentiatorFile,
    metrics: MetricsFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    tf: f64,
    dt: f64,
    sample_dt: f64,
    #[serde(default = "default_integrator")]
    integrator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    atol: Option<f64>,
    reference: ReferenceFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    events: Vec<EventFile>,
}

fn default_integrator() -> String {
    "rk4".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceFile {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    mean: f64,
    variance: f64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventFile {
    time: f64,
    kind: String,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObserverFile {
    variant: String,
    omega0: f64,
    a1: f64,
    a2: f64,
    a3: f64,
    a4: f64,
    a5: f64,
    b0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerFile {
    law: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nlsef: Option<NlsefFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inlsef: Option<InlsefFile>,
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NlsefFile {
    alpha1: f64,
    alpha2: f64,
    delta1: f64,
    delta2: f64,
    #[serde(default = "one")]
    kp: f64,
    #[serde(default = "one")]
    kd: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InlsefFile {
    k11: f64,
    k12: f64,
    k21: f64,
    k22: f64,
    mu1: f64,
    mu2: f64,
    alpha1: f64,
    alpha2: f64,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DifferentiatorFile {
    variant: String,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    r_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho_td: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalized: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsFile {
    w1: f64,
    w2: f64,
    w3: f64,
    #[serde(rename = "N1")]
    n1: f64,
    #[serde(rename = "N2")]
    n2: f64,
    #[serde(rename = "N3")]
    n3: f64,
    tf: f64,
}

fn required(v: Option<f64>, what: &str) -> Result<f64> {
    v.ok_or_else(|| Error::invalid_config(format!("missing config key `{what}`")))
}

impl TryFrom<ConfigFile> for SimConfig {
    type Error = Error;

    fn try_from(f: ConfigFile) -> Result<Self> {
        let s = f.scenario;
        let reference = match s.reference.kind.as_str() {
            "sine" => Reference::Sine {
                amplitude: required(s.reference.amplitude, "scenario.reference.amplitude")?,
                omega: required(s.reference.omega, "scenario.reference.omega")?,
            },
            "constant" => Reference::Constant { value: required(s.reference.value, "scenario.reference.value")? },
            other => return Err(Error::invalid_config(format!("unknown reference kind `{other}`"))),
        };
        let integrator = match s.integrator.as_str() {
            "rk4" => Integrator::Rk4,
            "rk45" => Integrator::Rk45 { rtol: s.rtol.unwrap_or(1e-8), atol: s.atol.unwrap_or(1e-10) },
            other => return Err(Error::invalid_config(format!("unknown integrator `{other}`"))),
        };
        let events = s
            .events
            .into_iter()
            .map(|e| {
                let kind = match e.kind.as_str() {
                    "disturbance_step" => EventKind::DisturbanceStep { amplitude: e.value },
                    "inertia_scale" => EventKind::InertiaScale { factor: e.value },
                    other => return Err(Error::invalid_config(format!("unknown event kind `{other}`"))),
                };
                Ok(Event { time: e.time, kind })
            })
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario {
            reference,
            tf: s.tf,
            dt: s.dt,
            sample_dt: s.sample_dt,
            events,
            noise: s.noise.map(|n| NoiseSpec { mean: n.mean, variance: n.variance, seed: n.seed }),
            integrator,
        };

        let o = f.observer;
        let variant = match o.variant.as_str() {
            "linear" => ObserverVariant::Linear,
            "improved_nonlinear" => ObserverVariant::ImprovedNonlinear {
                k_alpha: required(o.k_alpha, "observer.k_alpha")?,
                k_beta: required(o.k_beta, "observer.k_beta")?,
                alpha: required(o.alpha, "observer.alpha")?,
                beta: required(o.beta, "observer.beta")?,
            },
            other => return Err(Error::invalid_config(format!("unknown observer variant `{other}`"))),
        };
        let observer =
            ObserverConfig { rho: 4, omega0: o.omega0, a: vec![o.a1, o.a2, o.a3, o.a4, o.a5], b0: o.b0, variant };

        let c = f.controller;
        let controller = match c.law.as_str() {
            "nlsef" => {
                let n = c.nlsef.ok_or_else(|| Error::invalid_config("missing [controller.nlsef] table"))?;
                ControlLaw::Nlsef(NlsefConfig {
                    alpha1: n.alpha1,
                    alpha2: n.alpha2,
                    delta1: n.delta1,
                    delta2: n.delta2,
                    kp: n.kp,
                    kd: n.kd,
                })
            }
            "inlsef" => {
                let n = c.inlsef.ok_or_else(|| Error::invalid_config("missing [controller.inlsef] table"))?;
                ControlLaw::Inlsef(InlsefConfig {
                    k11: n.k11,
                    k12: n.k12,
                    k21: n.k21,
                    k22: n.k22,
                    mu1: n.mu1,
                    mu2: n.mu2,
                    alpha1: n.alpha1,
                    alpha2: n.alpha2,
                    delta: n.delta,
                })
            }
            other => return Err(Error::invalid_config(format!("unknown control law `{other}`"))),
        };

        let d = f.differentiator;
        let differentiator = match d.variant.as_str() {
            "classic" => TdConfig::Classic { r_limit: required(d.r_limit, "differentiator.R")? },
            "improved" => TdConfig::Improved {
                a: required(d.a, "differentiator.a")?,
                b: required(d.b, "differentiator.b")?,
                c: required(d.c, "differentiator.c")?,
                rho_td: required(d.rho_td, "differentiator.rho_td")?,
                normalized: d.normalized.unwrap_or(true),
            },
            other => return Err(Error::invalid_config(format!("unknown differentiator variant `{other}`"))),
        };

        let m = f.metrics;
        Ok(SimConfig {
            name: f.name,
            plant: f.plant,
            scenario,
            observer,
            controller,
            differentiator,
            metrics: OpiWeights { w1: m.w1, w2: m.w2, w3: m.w3, n1: m.n1, n2: m.n2, n3: m.n3, tf: m.tf },
        })
    }
}

impl From<&SimConfig> for ConfigFile {
    fn from(c: &SimConfig) -> Self {
        let sc = &c.scenario;
        let reference = match sc.reference {
            Reference::Sine { amplitude, omega } => {
                ReferenceFile { kind: "sine".into(), amplitude: Some(amplitude), omega: Some(omega), value: None }
            }
            Reference::Constant { value } => {
                ReferenceFile { kind: "constant".into(), amplitude: None, omega: None, value: Some(value) }
            }
        };
        let (integrator, rtol, atol) = match sc.integrator {
            Integrator::Rk4 => ("rk4", None, None),
            Integrator::Rk45 { rtol, atol } => ("rk45", Some(rtol), Some(atol)),
        };
        let events = sc
            .events
            .iter()
            .map(|e| match e.kind {
                EventKind::DisturbanceStep { amplitude } => {
                    EventFile { time: e.time, kind: "disturbance_step".into(), value: amplitude }
                }
                EventKind::InertiaScale { factor } => {
                    EventFile { time: e.time, kind: "inertia_scale".into(), value: factor }
                }
            })
            .collect();
        let scenario = ScenarioFile {
            tf: sc.tf,
            dt: sc.dt,
            sample_dt: sc.sample_dt,
            integrator: integrator.into(),
            rtol,
            atol,
            reference,
            noise: sc.noise.map(|n| NoiseFile { mean: n.mean, variance: n.variance, seed: n.seed }),
            events,
        };

        let o = &c.observer;
        let (variant, k_alpha, k_beta, alpha, beta) = match o.variant {
            ObserverVariant::Linear => ("linear", None, None, None, None),
            ObserverVariant::ImprovedNonlinear { k_alpha, k_beta, alpha, beta } => {
                ("improved_nonlinear", Some(k_alpha), Some(k_beta), Some(alpha), Some(beta))
            }
        };
        let a = |i: usize| o.a.get(i).copied().unwrap_or(0.0);
        let observer = ObserverFile {
            variant: variant.into(),
            omega0: o.omega0,
            a1: a(0),
            a2: a(1),
            a3: a(2),
            a4: a(3),
            a5: a(4),
            b0: o.b0,
            k_alpha,
            k_beta,
            alpha,
            beta,
        };

        let controller = match c.controller {
            ControlLaw::Nlsef(n) => ControllerFile {
                law: "nlsef".into(),
                nlsef: Some(NlsefFile {
                    alpha1: n.alpha1,
                    alpha2: n.alpha2,
                    delta1: n.delta1,
                    delta2: n.delta2,
                    kp: n.kp,
                    kd: n.kd,
                }),
                inlsef: None,
            },
            ControlLaw::Inlsef(n) => ControllerFile {
                law: "inlsef".into(),
                nlsef: None,
                inlsef: Some(InlsefFile {
                    k11: n.k11,
                    k12: n.k12,
                    k21: n.k21,
                    k22: n.k22,
                    mu1: n.mu1,
                    mu2: n.mu2,
                    alpha1: n.alpha1,
                    alpha2: n.alpha2,
                    delta: n.delta,
                }),
            },
        };

        let differentiator = match c.differentiator {
            TdConfig::Classic { r_limit } => DifferentiatorFile {
                variant: "classic".into(),
                r_limit: Some(r_limit),
                a: None,
                b: None,
                c: None,
                rho_td: None,
                normalized: None,
            },
            TdConfig::Improved { a, b, c, rho_td, normalized } => DifferentiatorFile {
                variant: "improved".into(),
                r_limit: None,
                a: Some(a),
                b: Some(b),
                c: Some(c),
                rho_td: Some(rho_td),
                normalized: Some(normalized),
            },
        };

        let m = &c.metrics;
        ConfigFile {
            name: c.name.clone(),
            plant: c.plant,
            scenario,
            observer,
            controller,
            differentiator,
            metrics: MetricsFile { w1: m.w1, w2: m.w2, w3: m.w3, n1: m.n1, n2: m.n2, n3: m.n3, tf: m.tf },
        }
    }
}
