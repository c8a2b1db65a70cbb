//! Single-link flexible-joint manipulator (SLFJM) and relative-degree checks
//! for affine-in-input SISO plants.

use serde::{Deserialize, Serialize};

use crate::autodiff::{flow_jet, Scalar};
use crate::error::{Error, Result};

/// Physical constants of the SLFJM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// Link stiffness (N·m/rad).
    #[serde(rename = "Ks")]
    pub ks: f64,
    /// Hub inertia (kg·m²).
    #[serde(rename = "Jh")]
    pub jh: f64,
    /// Link mass (kg).
    pub m: f64,
    /// Gravity (m/s²). Negative in the reference parameter set.
    pub g: f64,
    /// Hub height (m).
    pub h: f64,
    /// Motor constant.
    #[serde(rename = "Km")]
    pub km: f64,
    /// Gear ratio.
    #[serde(rename = "Kg")]
    pub kg: f64,
    /// Load inertia (kg·m²).
    #[serde(rename = "Jl")]
    pub jl: f64,
    /// Motor resistance (Ω).
    #[serde(rename = "Rm")]
    pub rm: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        slfjm_default_params()
    }
}

/// Reference coefficient set for the manipulator.
pub fn slfjm_default_params() -> PlantParams {
    PlantParams { ks: 1.61, jh: 0.0021, m: 0.403, g: -9.81, h: 0.06, km: 0.00767, kg: 70.0, jl: 0.0059, rm: 2.6 }
}

/// `(θ, α, θ̇, α̇)`: hub angle, link deflection and their rates (rad, rad/s).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlantState(pub [f64; 4]);

impl PlantState {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<[f64; 4]> for PlantState {
    fn from(x: [f64; 4]) -> Self {
        Self(x)
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.ks, self.jh, self.m, self.g, self.h, self.km, self.kg, self.jl, self.rm];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_config("plant parameters must be finite"));
        }
        for (name, v) in [("Jh", self.jh), ("Jl", self.jl), ("Rm", self.rm), ("Kg", self.kg)] {
            if v <= 0.0 {
                return Err(Error::invalid_config(format!("plant parameter {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Back-EMF damping coefficient `Km²Kg²/(Rm·Jh)`.
    pub fn damping(&self) -> f64 {
        self.km * self.km * self.kg * self.kg / (self.rm * self.jh)
    }

    /// Input gain `Km·Kg/(Rm·Jh)`; `b = (0, 0, gain, -gain)`.
    pub fn input_gain(&self) -> f64 {
        self.km * self.kg / (self.rm * self.jh)
    }

    /// `b = (0, 0, KmKg/(RmJh), -KmKg/(RmJh))`.
    pub fn input_vector(&self) -> [f64; 4] {
        let b = self.input_gain();
        [0.0, 0.0, b, -b]
    }

    /// `b_d = (0, 0, 1/Jh, -1/Jh)`.
    pub fn disturbance_vector(&self) -> [f64; 4] {
        let bd = 1.0 / self.jh;
        [0.0, 0.0, bd, -bd]
    }

    /// `L_g L_f³ h = Km·Kg·Ks/(Rm·Jh·Jl)`, the high-frequency gain from `u` to `y⁽⁴⁾`.
    pub fn high_frequency_gain(&self) -> f64 {
        self.km * self.kg * self.ks / (self.rm * self.jh * self.jl)
    }

    /// Drift field `f(x)` over any [`Scalar`].
    pub fn drift<S: Scalar>(&self, x: &[S; 4]) -> [S; 4] {
        let ks_jh = self.ks / self.jh;
        let ks_jl = self.ks / self.jl;
        let c = self.damping();
        let grav = self.m * self.g * self.h / self.jl;
        let f3 = x[1].scale(ks_jh) - x[2].scale(c);
        let f4 = -x[1].scale(ks_jh) - x[1].scale(ks_jl) + x[2].scale(c) + (x[0] + x[1]).sin().scale(grav);
        [x[2], x[3], f3, f4]
    }

    /// `f(x) + b·u + b_d·τ_d` without input validation.
    #[inline]
    pub fn derivative(&self, x: &[f64; 4], u: f64, tau_d: f64) -> [f64; 4] {
        let mut dx = self.drift(x);
        let b = self.input_gain() * u + tau_d / self.jh;
        dx[2] += b;
        dx[3] -= b;
        dx
    }
}

/// SLFJM state derivative `f(x) + b·u + b_d·τ_d`.
pub fn slfjm_dynamics(x: &PlantState, u: f64, tau_d: f64, p: &PlantParams) -> Result<[f64; 4]> {
    if !x.is_finite() || !u.is_finite() || !tau_d.is_finite() {
        return Err(Error::invalid_input("plant state and inputs must be finite"));
    }
    Ok(p.derivative(&x.0, u, tau_d))
}

/// Measured output `y = x₁ + x₂`.
#[inline]
pub fn output(x: &PlantState) -> f64 {
    x.0[0] + x.0[1]
}

/// A SISO plant `ẋ = f(x) + g(x)u, y = h(x)` whose fields can be evaluated over
/// any [`Scalar`].
pub trait AffinePlant {
    fn dim(&self) -> usize;
    fn drift_field<S: Scalar>(&self, x: &[S]) -> Vec<S>;
    fn input_field(&self, x: &[f64]) -> Vec<f64>;
    fn output_map<S: Scalar>(&self, x: &[S]) -> S;
}

impl AffinePlant for PlantParams {
    fn dim(&self) -> usize {
        4
    }

    fn drift_field<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let x: [S; 4] = [x[0], x[1], x[2], x[3]];
        self.drift(&x).to_vec()
    }

    fn input_field(&self, _x: &[f64]) -> Vec<f64> {
        self.input_vector().to_vec()
    }

    fn output_map<S: Scalar>(&self, x: &[S]) -> S {
        x[0] + x[1]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelativeDegreeReport {
    pub rho: usize,
    /// `residuals[i]` is the maximum of `|L_g L_f^i h|` over the samples, for `i < rho`.
    pub residuals: Vec<f64>,
    /// `L_g L_f^{rho-1} h` at the first sample.
    pub final_coefficient: f64,
    /// Smallest and largest `L_g L_f^{rho-1} h` over all samples.
    pub final_range: (f64, f64),
}

/// `L_g L_f^k h(x)` for `k = 0..order`, evaluated in one Taylor sweep.
pub fn lie_input_derivatives<P: AffinePlant>(plant: &P, x: &[f64], order: usize) -> Vec<f64> {
    let g = plant.input_field(x);
    let flow = flow_jet(|s| plant.drift_field(s), x, &g, order);
    let y = plant.output_map(&flow);
    let mut fact = 1.0;
    (0..order)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            fact * y.c[k].eps
        })
        .collect()
}

/// Relative degree of a generic affine plant over a set of sample states.
///
/// ρ is the first order whose `|L_g L_f^{ρ-1} h|` exceeds `tol` at some sample;
/// it must then exceed `tol` at every sample for the degree to be well defined.
pub fn check_relative_degree_of<P: AffinePlant>(
    plant: &P,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<RelativeDegreeReport> {
    if samples.is_empty() {
        return Err(Error::invalid_input("relative degree check needs at least one sample"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid_input(format!("tolerance must be > 0, got {tol}")));
    }
    let n = plant.dim();
    let mut table = Vec::with_capacity(samples.len());
    for x in samples {
        if x.len() != n || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_input("sample state has wrong dimension or non-finite entries"));
        }
        let row = lie_input_derivatives(plant, x, n);
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite Lie derivative at {x:?}")));
        }
        table.push(row);
    }
    let max_abs: Vec<f64> = (0..n).map(|k| table.iter().map(|r| r[k].abs()).fold(0.0, f64::max)).collect();
    let Some(k) = max_abs.iter().position(|&m| m > tol) else {
        return Err(Error::Numeric(format!("no input dependence up to order {n}; relative degree undefined")));
    };
    let finals: Vec<f64> = table.iter().map(|r| r[k]).collect();
    if finals.iter().any(|v| v.abs() <= tol) {
        return Err(Error::Numeric(format!(
            "L_g L_f^{k} h vanishes at some samples; relative degree not well defined"
        )));
    }
    let lo = finals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RelativeDegreeReport {
        rho: k + 1,
        residuals: max_abs[..k].to_vec(),
        final_coefficient: finals[0],
        final_range: (lo, hi),
    })
}

/// Relative degree of the SLFJM with parameters `p`.
pub fn check_relative_degree(p: &PlantParams, samples: &[PlantState], tol: f64) -> Result<RelativeDegreeReport> {
    p.validate()?;
    let s: Vec<Vec<f64>> = samples.iter().map(|x| x.0.to_vec()).collect();
    check_relative_degree_of(p, &s, tol)
}
