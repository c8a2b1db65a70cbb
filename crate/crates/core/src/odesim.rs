//! Closed-loop integration of plant, observer and tracking differentiator.
//!
//! The combined state is `[x₁..x₄, ξ̂₁..ξ̂₅, r₁, r₂]`. Each integration step
//! holds the measurement-noise sample, the disturbance torque and the plant
//! parameters constant; events take effect at the first grid time at or after
//! their scheduled time.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::controller::ControlLaw;
use crate::differentiator::{TdConfig, TdState};
use crate::error::{Error, Result};
use crate::observer::{Eso, ObserverConfig};
use crate::plant::PlantParams;

/// Closed-loop state dimension: plant (4) + observer (5) + differentiator (2).
pub const STATE_DIM: usize = 11;

/// Any state magnitude above this aborts a run.
pub const DIVERGENCE_BOUND: f64 = 1e9;

pub const CSV_HEADER: &str = "t,r,r1,r2,y,y_meas,u,v,xi1,xi2,xi3,xi4,xi5,x1,x2,x3,x4";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    Sine { amplitude: f64, omega: f64 },
    Constant { value: f64 },
}

impl Reference {
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Reference::Sine { amplitude, omega } => amplitude * (omega * t).sin(),
            Reference::Constant { value } => value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    /// Sets the disturbance torque τ_d (N·m) from the event time onward.
    DisturbanceStep { amplitude: f64 },
    /// Multiplies the load inertia Jl.
    InertiaScale { factor: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integrator {
    Rk4,
    /// Adaptive Dormand–Prince 5(4); noise-free scenarios only.
    Rk45 {
        rtol: f64,
        atol: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub reference: Reference,
    pub tf: f64,
    pub dt: f64,
    pub sample_dt: f64,
    pub events: Vec<Event>,
    pub noise: Option<NoiseSpec>,
    pub integrator: Integrator,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            reference: Reference::Sine { amplitude: 45.0, omega: 2.0 },
            tf: 20.0,
            dt: 1e-4,
            sample_dt: 1e-3,
            events: Vec::new(),
            noise: None,
            integrator: Integrator::Rk4,
        }
    }
}

impl Scenario {
    /// Number of integration steps and steps per logged sample.
    fn grid(&self) -> Result<(usize, usize)> {
        if !(self.dt > 0.0 && self.dt <= self.sample_dt && self.sample_dt <= self.tf) || !self.tf.is_finite() {
            return Err(Error::invalid_config(format!(
                "need 0 < dt <= sample_dt <= tf, got dt={}, sample_dt={}, tf={}",
                self.dt, self.sample_dt, self.tf
            )));
        }
        let steps = (self.tf / self.dt).round();
        let stride = (self.sample_dt / self.dt).round();
        if ((steps * self.dt) - self.tf).abs() > 1e-9 * self.tf {
            return Err(Error::invalid_config("tf must be an integer multiple of dt"));
        }
        if ((stride * self.dt) - self.sample_dt).abs() > 1e-9 * self.sample_dt {
            return Err(Error::invalid_config("sample_dt must be an integer multiple of dt"));
        }
        if !(steps as usize).is_multiple_of(stride as usize) {
            return Err(Error::invalid_config("tf must be an integer multiple of sample_dt"));
        }
        Ok((steps as usize, stride as usize))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        for e in &self.events {
            if !(e.time >= 0.0 && e.time <= self.tf) {
                return Err(Error::invalid_config(format!("event time {} outside [0, {}]", e.time, self.tf)));
            }
            if let EventKind::InertiaScale { factor } = e.kind {
                if !(factor > 0.0) {
                    return Err(Error::invalid_config(format!("inertia scale must be > 0, got {factor}")));
                }
            }
        }
        if let Some(n) = &self.noise {
            if !(n.variance >= 0.0) || !n.mean.is_finite() {
                return Err(Error::invalid_config("noise variance must be >= 0 and mean finite"));
            }
        }
        if let Integrator::Rk45 { rtol, atol } = self.integrator {
            if self.noise.is_some_and(|n| n.variance > 0.0) {
                return Err(Error::invalid_config("adaptive RK45 is only available for noise-free scenarios"));
            }
            if !(rtol > 0.0 && atol > 0.0) {
                return Err(Error::invalid_config("RK45 tolerances must be > 0"));
            }
        }
        Ok(())
    }
}

/// Applies one event to the plant parameters and current disturbance level.
pub fn apply_event(p: &PlantParams, tau_d: f64, e: &EventKind) -> Result<(PlantParams, f64)> {
    match *e {
        EventKind::DisturbanceStep { amplitude } => {
            if !amplitude.is_finite() {
                return Err(Error::invalid_input("disturbance amplitude must be finite"));
            }
            Ok((*p, amplitude))
        }
        EventKind::InertiaScale { factor } => {
            if !(factor > 0.0) || !factor.is_finite() {
                return Err(Error::invalid_input(format!("inertia scale factor must be > 0, got {factor}")));
            }
            let mut q = *p;
            q.jl *= factor;
            Ok((q, tau_d))
        }
    }
}

/// One Gaussian draw with the configured mean and variance.
pub fn noise_sample<R: Rng + ?Sized>(rng: &mut R, spec: &NoiseSpec) -> f64 {
    if spec.variance == 0.0 {
        return spec.mean;
    }
    // variance validated >= 0 upstream, so the distribution is well formed
    Normal::new(spec.mean, spec.variance.sqrt()).expect("finite mean, non-negative std").sample(rng)
}

/// Seeded measurement-noise stream.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    spec: NoiseSpec,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(spec: NoiseSpec) -> Self {
        Self { spec, rng: ChaCha8Rng::seed_from_u64(spec.seed) }
    }

    pub fn sample(&mut self) -> f64 {
        noise_sample(&mut self.rng, &self.spec)
    }
}

/// Classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(mut f: F, t: f64, x: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if !(h > 0.0) {
        return Err(Error::invalid_input(format!("step must be > 0, got {h}")));
    }
    let finite = |k: &[f64; N], tt: f64| {
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { t: tt })
        }
    };
    let axpy = |a: f64, k: &[f64; N]| {
        let mut y = *x;
        for i in 0..N {
            y[i] += a * k[i];
        }
        y
    };
    let half = 0.5 * h;
    let k1 = f(t, x);
    finite(&k1, t)?;
    let k2 = f(t + half, &axpy(half, &k1));
    finite(&k2, t + half)?;
    let k3 = f(t + half, &axpy(half, &k2));
    finite(&k3, t + half)?;
    let k4 = f(t + h, &axpy(h, &k3));
    finite(&k4, t + h)?;
    let mut out = *x;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    finite(&out, t + h)?;
    Ok(out)
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand–Prince integration from `t0` to `t1`.
///
/// `h` is the initial step guess; the last accepted step size is returned with
/// the state so consecutive calls can continue smoothly.
pub fn rk45_integrate<const N: usize, F>(
    mut f: F,
    t0: f64,
    x0: &[f64; N],
    t1: f64,
    h: f64,
    rtol: f64,
    atol: f64,
) -> Result<([f64; N], f64)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if !(t1 >= t0) || !(h > 0.0) || !(rtol > 0.0) || !(atol > 0.0) {
        return Err(Error::invalid_input("rk45 needs t1 >= t0 and positive step and tolerances"));
    }
    let span = t1 - t0;
    let min_step = 1e-14 * t1.abs().max(1.0);
    let mut t = t0;
    let mut x = *x0;
    let mut h = h.min(span.max(min_step));
    let mut last_ok = h;
    while t1 - t > min_step {
        let step = h.min(t1 - t);
        let mut k = [[0.0; N]; 7];
        for s in 0..7 {
            let mut xs = x;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = DP_A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        xs[i] += step * a * kj[i];
                    }
                }
            }
            k[s] = f(t + DP_C[s] * step, &xs);
            if k[s].iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t: t + DP_C[s] * step });
            }
        }
        let mut x5 = x;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += DP_B5[s] * k[s][i];
                d4 += DP_B4[s] * k[s][i];
            }
            x5[i] += step * d5;
            let sc = atol + rtol * x[i].abs().max(x5[i].abs());
            err = err.max((step * (d5 - d4)).abs() / sc);
        }
        if err <= 1.0 {
            t += step;
            x = x5;
            last_ok = step;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = step * factor;
        if h < min_step {
            return Err(Error::Numeric(format!("rk45 step size underflow at t = {t}")));
        }
    }
    Ok((x, last_ok))
}

/// One logged row of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub y: f64,
    pub y_meas: f64,
    pub u: f64,
    pub v: f64,
    pub xi: [f64; 5],
    pub x: [f64; 4],
}

/// Uniformly sampled time series of a closed-loop run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunRecord {
    pub samples: Vec<Sample>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for s in &self.samples {
            write!(w, "{},{},{},{},{},{},{},{}", s.t, s.r, s.r1, s.r2, s.y, s.y_meas, s.u, s.v)?;
            for v in s.xi.iter().chain(&s.x) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Fully assembled closed loop: plant, ESO, state-error feedback and TD.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    plant: PlantParams,
    eso: Eso,
    law: ControlLaw,
    td: TdConfig,
}

impl ClosedLoop {
    pub fn new(plant: PlantParams, observer: ObserverConfig, law: ControlLaw, td: TdConfig) -> Result<Self> {
        plant.validate()?;
        law.validate()?;
        td.validate()?;
        let eso = Eso::new(observer)?;
        if eso.dim() != 5 {
            return Err(Error::invalid_config(format!(
                "the manipulator has relative degree 4; observer rho is {}",
                eso.dim() - 1
            )));
        }
        Ok(Self { plant, eso, law, td })
    }

    /// `(u, v)` from the current closed-loop state. Only ξ̂₁ and ξ̂₂ enter the
    /// state-error feedback.
    #[inline]
    pub fn control(&self, s: &[f64; STATE_DIM]) -> (f64, f64) {
        let v = self.law.virtual_control(s[9] - s[4], s[10] - s[5]);
        (v - s[8] / self.eso.b0(), v)
    }

    #[inline]
    fn derivative(
        &self,
        t: f64,
        s: &[f64; STATE_DIM],
        reference: &Reference,
        noise: f64,
        tau_d: f64,
        p: &PlantParams,
    ) -> [f64; STATE_DIM] {
        let (u, _) = self.control(s);
        let x = [s[0], s[1], s[2], s[3]];
        let dx = p.derivative(&x, u, tau_d);
        let mut out = [0.0; STATE_DIM];
        out[..4].copy_from_slice(&dx);
        let y_meas = s[0] + s[1] + noise;
        self.eso.derivative_into(&s[4..9], y_meas, u, &mut out[4..9]);
        let (d1, d2) = self.td.derivative(TdState { r1: s[9], r2: s[10] }, reference.value(t));
        out[9] = d1;
        out[10] = d2;
        out
    }

    fn sample(&self, t: f64, s: &[f64; STATE_DIM], reference: &Reference, noise: f64) -> Sample {
        let (u, v) = self.control(s);
        let y = s[0] + s[1];
        Sample {
            t,
            r: reference.value(t),
            r1: s[9],
            r2: s[10],
            y,
            y_meas: y + noise,
            u,
            v,
            xi: [s[4], s[5], s[6], s[7], s[8]],
            x: [s[0], s[1], s[2], s[3]],
        }
    }

    /// Integrates the scenario from the all-zero initial state.
    pub fn run(&self, sc: &Scenario) -> Result<RunRecord> {
        sc.validate()?;
        let (steps, stride) = sc.grid()?;
        let mut events = sc.events.clone();
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut next_event = 0;
        let mut params = self.plant;
        let mut tau_d = 0.0;
        let mut noise_src = sc.noise.map(NoiseSource::new);
        let mut s = [0.0; STATE_DIM];
        let mut record = RunRecord { samples: Vec::with_capacity(steps / stride + 1) };
        let event_slack = 1e-6 * sc.dt;
        let mut h45 = sc.dt;

        for k in 0..=steps {
            let t = k as f64 * sc.dt;
            while next_event < events.len() && events[next_event].time <= t + event_slack {
                (params, tau_d) = apply_event(&params, tau_d, &events[next_event].kind)?;
                next_event += 1;
            }
            let noise = noise_src.as_mut().map_or(0.0, NoiseSource::sample);
            if k % stride == 0 {
                record.samples.push(self.sample(t, &s, &sc.reference, noise));
            }
            if k == steps {
                break;
            }
            let rhs = |tt: f64, ss: &[f64; STATE_DIM]| self.derivative(tt, ss, &sc.reference, noise, tau_d, &params);
            let stepped = match sc.integrator {
                Integrator::Rk4 => rk4_step(rhs, t, &s, sc.dt),
                Integrator::Rk45 { rtol, atol } => rk45_integrate(rhs, t, &s, (k + 1) as f64 * sc.dt, h45, rtol, atol)
                    .map(|(x, h)| {
                        h45 = h;
                        x
                    }),
            };
            let t_next = (k + 1) as f64 * sc.dt;
            match stepped {
                Ok(next) if next.iter().all(|v| v.abs() <= DIVERGENCE_BOUND) => s = next,
                Ok(_) | Err(Error::NonFinite { .. }) => {
                    return Err(Error::Diverged { t: t_next, record: Box::new(record) });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(record)
    }
}

/// Runs a closed-loop scenario with the given components.
pub fn run_closed_loop(
    sc: &Scenario,
    plant: &PlantParams,
    observer: &ObserverConfig,
    law: &ControlLaw,
    td: &TdConfig,
) -> Result<RunRecord> {
    ClosedLoop::new(*plant, observer.clone(), *law, *td)?.run(sc)
}
