//! Nonlinear state-error feedback laws and the active linearization law.

use crate::error::{Error, Result};
use crate::sign;

/// fal-based NLSEF: `v = kp·fal(e₁, α₁, δ₁) + kd·fal(e₂, α₂, δ₂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NlsefConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Multiplier on the first term; 1 gives the unweighted sum.
    pub kp: f64,
    /// Multiplier on the second term; 1 gives the unweighted sum.
    pub kd: f64,
}

impl NlsefConfig {
    pub fn new(alpha1: f64, delta1: f64, alpha2: f64, delta2: f64) -> Self {
        Self { alpha1, alpha2, delta1, delta2, kp: 1.0, kd: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::invalid_config(format!("NLSEF {name} must lie in (0, 1], got {a}")));
            }
        }
        for (name, d) in [("delta1", self.delta1), ("delta2", self.delta2)] {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::invalid_config(format!("NLSEF {name} must be > 0, got {d}")));
            }
        }
        if !self.kp.is_finite() || !self.kd.is_finite() {
            return Err(Error::invalid_config("NLSEF multipliers must be finite"));
        }
        Ok(())
    }
}

/// Sigmoid-scheduled INLSEF with tanh output saturation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InlsefConfig {
    pub k11: f64,
    pub k12: f64,
    pub k21: f64,
    pub k22: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta: f64,
}

impl InlsefConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("k11", self.k11),
            ("k12", self.k12),
            ("k21", self.k21),
            ("k22", self.k22),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid_config(format!("INLSEF {name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("alpha1", self.alpha1), ("alpha2", self.alpha2), ("delta", self.delta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid_config(format!("INLSEF {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControlLaw {
    Nlsef(NlsefConfig),
    Inlsef(InlsefConfig),
}

impl ControlLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            ControlLaw::Nlsef(c) => c.validate(),
            ControlLaw::Inlsef(c) => c.validate(),
        }
    }

    /// Virtual control `v` from the position and rate tracking errors.
    #[inline]
    pub fn virtual_control(&self, e1: f64, e2: f64) -> f64 {
        match self {
            ControlLaw::Nlsef(c) => nlsef(e1, e2, c),
            ControlLaw::Inlsef(c) => inlsef(e1, e2, c),
        }
    }
}

/// Linear inside `|e| ≤ δ` (slope `δ^(α-1)`), power law `|e|^α sign(e)` outside.
/// Both branches equal `δ^α` at `|e| = δ`.
#[inline]
pub fn fal(e: f64, alpha: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        e / delta.powf(1.0 - alpha)
    } else {
        e.abs().powf(alpha) * sign(e)
    }
}

#[inline]
pub fn nlsef(e1: f64, e2: f64, cfg: &NlsefConfig) -> f64 {
    cfg.kp * fal(e1, cfg.alpha1, cfg.delta1) + cfg.kd * fal(e2, cfg.alpha2, cfg.delta2)
}

#[inline]
fn scheduled_term(e: f64, k_low: f64, k_high: f64, mu: f64, alpha: f64) -> f64 {
    // exp overflows to inf for large mu·e², which correctly sends the sigmoid to 0
    let gain = k_low + k_high / (1.0 + (mu * e * e).exp());
    gain * e.abs().powf(alpha) * sign(e)
}

#[inline]
pub fn inlsef(e1: f64, e2: f64, cfg: &InlsefConfig) -> f64 {
    let v1 = scheduled_term(e1, cfg.k11, cfg.k12, cfg.mu1, cfg.alpha1);
    let v2 = scheduled_term(e2, cfg.k21, cfg.k22, cfg.mu2, cfg.alpha2);
    cfg.delta * ((v1 + v2) / cfg.delta).tanh()
}

/// `u = v - ξ̂_{ρ+1}/b0`.
pub fn aiofl_law(v: f64, disturbance_estimate: f64, b0: f64) -> Result<f64> {
    if b0 == 0.0 {
        return Err(Error::invalid_config("b0 must be nonzero"));
    }
    Ok(v - disturbance_estimate / b0)
}
