//! Tracking differentiators producing the transient profile `r₁` and its
//! derivative estimate `r₂` from a raw reference.

use crate::error::{Error, Result};
use crate::sign;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TdConfig {
    /// Time-optimal second-order TD with acceleration limit `R`.
    Classic { r_limit: f64 },
    /// tanh-based TD. With `normalized` the tanh argument is `(r₁ - r)/c`,
    /// otherwise `(b·r₁ - (1-a)·r)/c`.
    Improved { a: f64, b: f64, c: f64, rho_td: f64, normalized: bool },
}

impl TdConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TdConfig::Classic { r_limit } => {
                if !(r_limit > 0.0) || !r_limit.is_finite() {
                    return Err(Error::invalid_config(format!("TD R must be > 0, got {r_limit}")));
                }
            }
            TdConfig::Improved { a, b, c, rho_td, .. } => {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::invalid_config(format!("ITD a must lie in (0, 1), got {a}")));
                }
                if !(b > 0.0) || !(c > 0.0) || !(rho_td > 0.0) {
                    return Err(Error::invalid_config("ITD b, c and rho must be > 0"));
                }
            }
        }
        Ok(())
    }

    /// `(ṙ₁, ṙ₂)` for either variant.
    #[inline]
    pub fn derivative(&self, st: TdState, r: f64) -> (f64, f64) {
        match *self {
            TdConfig::Classic { r_limit } => classic(st, r, r_limit),
            TdConfig::Improved { a, b, c, rho_td, normalized } => improved(st, r, a, b, c, rho_td, normalized),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TdState {
    pub r1: f64,
    pub r2: f64,
}

#[inline]
fn classic(st: TdState, r: f64, rl: f64) -> (f64, f64) {
    let s = st.r1 - r + st.r2 * st.r2.abs() / (2.0 * rl);
    (st.r2, -rl * sign(s))
}

#[inline]
fn improved(st: TdState, r: f64, a: f64, b: f64, c: f64, rho: f64, normalized: bool) -> (f64, f64) {
    let arg = if normalized { (st.r1 - r) / c } else { (b * st.r1 - (1.0 - a) * r) / c };
    (st.r2, -rho * rho * arg.tanh() - rho * st.r2)
}

/// Classic TD right-hand side: `ṙ₁ = r₂`, `ṙ₂ = -R·sign(r₁ - r + r₂|r₂|/(2R))`.
pub fn td_derivative(st: TdState, r: f64, cfg: &TdConfig) -> Result<(f64, f64)> {
    match *cfg {
        TdConfig::Classic { r_limit } => {
            cfg.validate()?;
            Ok(classic(st, r, r_limit))
        }
        TdConfig::Improved { .. } => Err(Error::invalid_config("td_derivative needs a Classic TD")),
    }
}

/// Improved TD right-hand side.
pub fn itd_derivative(st: TdState, r: f64, cfg: &TdConfig) -> Result<(f64, f64)> {
    match *cfg {
        TdConfig::Improved { a, b, c, rho_td, normalized } => {
            cfg.validate()?;
            Ok(improved(st, r, a, b, c, rho_td, normalized))
        }
        TdConfig::Classic { .. } => Err(Error::invalid_config("itd_derivative needs an Improved TD")),
    }
}

/// Equilibrium `r₁*` for a constant reference `r` under the verbatim ITD form.
pub fn itd_verbatim_equilibrium(r: f64, a: f64, b: f64) -> f64 {
    (1.0 - a) / b * r
}
