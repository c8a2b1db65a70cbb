//! Performance indices over a logged run: ITAE, ISU, IAU and the weighted OPI.
//!
//! All integrals use the trapezoidal rule on the logged grid, so they can be
//! recomputed from a record CSV alone. When the horizon falls between two
//! samples the last partial interval is closed by linear interpolation.

use std::fmt;

use crate::error::{Error, Result};
use crate::odesim::{RunRecord, Sample};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpiWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    /// Evaluation horizon (s).
    pub tf: f64,
}

impl OpiWeights {
    /// Weights and normalizers used for tuning, taken as given (they sum to 1.4).
    pub fn reference(tf: f64) -> Self {
        Self { w1: 0.6, w2: 0.2, w3: 0.6, n1: 10.0, n2: 2.0, n3: 2.7, tf }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n1 > 0.0 && self.n2 > 0.0 && self.n3 > 0.0) {
            return Err(Error::invalid_config("OPI normalizers must be > 0"));
        }
        if !(self.tf > 0.0) {
            return Err(Error::invalid_config("OPI horizon must be > 0"));
        }
        if ![self.w1, self.w2, self.w3].iter().all(|w| w.is_finite()) {
            return Err(Error::invalid_config("OPI weights must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub itae: f64,
    pub isu: f64,
    pub iau: f64,
    pub opi: f64,
}

impl fmt::Display for MetricsReport {
    /// Flat `key=value` block.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "itae={}", self.itae)?;
        writeln!(f, "isu={}", self.isu)?;
        writeln!(f, "iau={}", self.iau)?;
        write!(f, "opi={}", self.opi)
    }
}

fn integrate(record: &RunRecord, horizon: f64, g: impl Fn(&Sample) -> f64) -> Result<f64> {
    let s = &record.samples;
    if s.is_empty() {
        return Err(Error::invalid_input("empty record"));
    }
    if !(horizon >= 0.0) {
        return Err(Error::invalid_input(format!("horizon must be >= 0, got {horizon}")));
    }
    let t0 = s[0].t;
    let t_end = record.t_end();
    let slack = 1e-9 * horizon.abs().max(1.0);
    if t0 > slack || horizon > t_end + slack {
        return Err(Error::invalid_input(format!("record covers [{t0}, {t_end}] but horizon {horizon} was requested")));
    }
    let mut acc = 0.0;
    for w in s.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.t >= horizon - slack {
            break;
        }
        let (ga, gb) = (g(a), g(b));
        if b.t <= horizon + slack {
            acc += 0.5 * (b.t - a.t) * (ga + gb);
        } else {
            let frac = (horizon - a.t) / (b.t - a.t);
            let gh = ga + frac * (gb - ga);
            acc += 0.5 * (horizon - a.t) * (ga + gh);
        }
    }
    Ok(acc)
}

/// `∫₀^T t·|y − r| dt`.
pub fn itae(record: &RunRecord, horizon: f64) -> Result<f64> {
    integrate(record, horizon, |s| s.t * (s.y - s.r).abs())
}

/// `∫₀^T u² dt`.
pub fn isu(record: &RunRecord, horizon: f64) -> Result<f64> {
    integrate(record, horizon, |s| s.u * s.u)
}

/// `∫₀^T |u| dt`.
pub fn iau(record: &RunRecord, horizon: f64) -> Result<f64> {
    integrate(record, horizon, |s| s.u.abs())
}

/// `w₁·ITAE/N₁ + w₂·ISU/N₂ + w₃·IAU/N₃`.
pub fn opi(itae: f64, isu: f64, iau: f64, w: &OpiWeights) -> f64 {
    w.w1 * itae / w.n1 + w.w2 * isu / w.n2 + w.w3 * iau / w.n3
}

/// All indices over `[0, w.tf]`.
pub fn evaluate(record: &RunRecord, w: &OpiWeights) -> Result<MetricsReport> {
    w.validate()?;
    let itae = itae(record, w.tf)?;
    let isu = isu(record, w.tf)?;
    let iau = iau(record, w.tf)?;
    Ok(MetricsReport { itae, isu, iau, opi: opi(itae, isu, iau, w) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    pub(crate) fn synth(tf: f64, dt: f64, err: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> RunRecord {
        let n = (tf / dt).floor() as usize;
        let samples = (0..=n)
            .map(|k| {
                let t = k as f64 * dt;
                Sample { t, r: 0.0, y: err(t), u: u(t), ..Sample::default() }
            })
            .collect();
        RunRecord { samples }
    }

    #[test]
    fn zero_error_zero_index() {
        let rec = synth(6.0, 1e-3, |_| 0.0, |_| 0.0);
        assert_eq!(itae(&rec, 6.0).unwrap(), 0.0);
        assert_eq!(isu(&rec, 6.0).unwrap(), 0.0);
        assert_eq!(iau(&rec, 6.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_integrands() {
        let rec = synth(6.0, 1e-3, |_| 1.0, |_| 2.0);
        assert_relative_eq!(itae(&rec, 6.0).unwrap(), 18.0, max_relative = 1e-12);
        assert_relative_eq!(isu(&rec, 6.0).unwrap(), 24.0, max_relative = 1e-12);
        assert_relative_eq!(iau(&rec, 6.0).unwrap(), 12.0, max_relative = 1e-12);
        // sub-horizon
        assert_relative_eq!(iau(&rec, 2.5).unwrap(), 5.0, max_relative = 1e-12);
    }

    #[test]
    fn sinusoidal_oracles() {
        let rec = synth(7.0, 1e-3, f64::sin, f64::sin);
        assert!((itae(&rec, 2.0 * PI).unwrap() - 4.0 * PI).abs() < 1e-4);
        assert!((isu(&rec, 2.0 * PI).unwrap() - PI).abs() < 1e-6);
        assert!((iau(&rec, 2.0 * PI).unwrap() - 4.0).abs() < 1e-5);
    }

    #[test]
    fn horizon_beyond_record_rejected() {
        let rec = synth(6.0, 1e-3, |_| 1.0, |_| 1.0);
        assert!(matches!(itae(&rec, 7.0), Err(Error::InvalidInput(_))));
        assert!(itae(&RunRecord::default(), 1.0).is_err());
    }

    #[test]
    fn opi_reference_weights() {
        let w = OpiWeights::reference(6.0);
        assert_eq!(opi(0.0, 0.0, 0.0, &w), 0.0);
        assert_relative_eq!(opi(10.0, 2.0, 2.7, &w), 1.4, max_relative = 1e-15);
    }

    #[test]
    fn display_block() {
        let m = MetricsReport { itae: 1.0, isu: 2.0, iau: 3.0, opi: 4.5 };
        assert_eq!(m.to_string(), "itae=1\nisu=2\niau=3\nopi=4.5");
    }

    #[test]
    fn quadrature_converges_quadratically() {
        let g = |t: f64| 2.0 + (3.0 * t).cos();
        let exact = 8.0 + (12.0f64).sin() / 3.0;
        let e1 = (iau(&synth(4.0, 1e-2, |_| 0.0, g), 4.0).unwrap() - exact).abs();
        let e2 = (iau(&synth(4.0, 5e-3, |_| 0.0, g), 4.0).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn opi_linear(i1 in 0.0f64..1e3, i2 in 0.0f64..1e3, i3 in 0.0f64..1e3, k in 0.0f64..10.0) {
            let w = OpiWeights::reference(20.0);
            let a = opi(k * i1, k * i2, k * i3, &w);
            let b = k * opi(i1, i2, i3, &w);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }

        #[test]
        fn indices_nonnegative(amp in -5.0f64..5.0, om in 0.1f64..10.0, h in 0.1f64..3.0) {
            let rec = synth(3.0, 1e-2, |t| amp * (om * t).sin(), |t| amp * (om * t).cos());
            prop_assert!(itae(&rec, h).unwrap() >= 0.0);
            prop_assert!(isu(&rec, h).unwrap() >= 0.0);
            prop_assert!(iau(&rec, h).unwrap() >= 0.0);
        }
    }
}
