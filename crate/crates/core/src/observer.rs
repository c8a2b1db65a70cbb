//! Extended state observers: linear (LESO) and improved nonlinear (INLESO),
//! bandwidth gain construction, and a Lyapunov certificate for the scaled
//! error dynamics.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sign;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObserverVariant {
    Linear,
    /// Innovation shaped by `𝒢(e) = k_α|e|^α sign(e) + k_β|e|^β e`.
    ImprovedNonlinear {
        k_alpha: f64,
        k_beta: f64,
        alpha: f64,
        beta: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObserverConfig {
    /// Relative degree of the plant; the observer has `rho + 1` states.
    pub rho: usize,
    /// Bandwidth ω0 (rad/s).
    pub omega0: f64,
    /// Gain coefficients a₁..a_{ρ+1}.
    pub a: Vec<f64>,
    /// Nominal input gain.
    pub b0: f64,
    pub variant: ObserverVariant,
}

impl ObserverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho == 0 {
            return Err(Error::invalid_config("observer rho must be >= 1"));
        }
        if self.a.len() != self.rho + 1 {
            return Err(Error::invalid_config(format!(
                "observer needs {} gain coefficients, got {}",
                self.rho + 1,
                self.a.len()
            )));
        }
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(Error::invalid_config(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        if self.b0 == 0.0 || !self.b0.is_finite() {
            return Err(Error::invalid_config("b0 must be finite and nonzero"));
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_config("observer coefficients must be finite"));
        }
        if let ObserverVariant::ImprovedNonlinear { k_alpha, k_beta, alpha, beta } = self.variant {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::invalid_config(format!("INLESO alpha must lie in (0, 1), got {alpha}")));
            }
            if !(beta >= 0.0) || !(k_alpha >= 0.0) || !(k_beta >= 0.0) {
                return Err(Error::invalid_config("INLESO beta, k_alpha and k_beta must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn gains(&self) -> Vec<f64> {
        gains_from_bandwidth(&self.a, self.omega0)
    }
}

/// `βᵢ = aᵢ·ω0^i`, i = 1..=a.len().
pub fn gains_from_bandwidth(a: &[f64], omega0: f64) -> Vec<f64> {
    let mut w = 1.0;
    a.iter()
        .map(|&ai| {
            w *= omega0;
            ai * w
        })
        .collect()
}

/// `𝒢(e) = k_α|e|^α sign(e) + k_β|e|^β e`.
#[inline]
pub fn g_function(e: f64, k_alpha: f64, k_beta: f64, alpha: f64, beta: f64) -> f64 {
    let a = e.abs();
    k_alpha * a.powf(alpha) * sign(e) + k_beta * a.powf(beta) * e
}

/// Observer with its gains precomputed, for use inside an integrator.
#[derive(Clone, Debug)]
pub struct Eso {
    cfg: ObserverConfig,
    beta: Vec<f64>,
}

impl Eso {
    pub fn new(cfg: ObserverConfig) -> Result<Self> {
        cfg.validate()?;
        let beta = cfg.gains();
        Ok(Self { cfg, beta })
    }

    pub fn config(&self) -> &ObserverConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.cfg.rho + 1
    }

    pub fn b0(&self) -> f64 {
        self.cfg.b0
    }

    #[inline]
    fn innovation(&self, e: f64) -> f64 {
        match self.cfg.variant {
            ObserverVariant::Linear => e,
            ObserverVariant::ImprovedNonlinear { k_alpha, k_beta, alpha, beta } => {
                g_function(e, k_alpha, k_beta, alpha, beta)
            }
        }
    }

    /// Writes `dξ̂/dt` into `out`. `xi` and `out` have `rho + 1` entries.
    #[inline]
    pub fn derivative_into(&self, xi: &[f64], y: f64, u: f64, out: &mut [f64]) {
        let n = self.dim();
        debug_assert!(xi.len() == n && out.len() == n);
        let g = self.innovation(y - xi[0]);
        for i in 0..n - 1 {
            out[i] = xi[i + 1] + self.beta[i] * g;
        }
        out[n - 2] += self.cfg.b0 * u;
        out[n - 1] = self.beta[n - 1] * g;
    }

    pub fn derivative(&self, xi: &[f64], y: f64, u: f64) -> Result<Vec<f64>> {
        if xi.len() != self.dim() {
            return Err(Error::invalid_input(format!(
                "observer state has {} entries, expected {}",
                xi.len(),
                self.dim()
            )));
        }
        let mut out = vec![0.0; xi.len()];
        self.derivative_into(xi, y, u, &mut out);
        Ok(out)
    }
}

/// LESO right-hand side.
pub fn leso_derivative(xi: &[f64], y: f64, u: f64, cfg: &ObserverConfig) -> Result<Vec<f64>> {
    if cfg.variant != ObserverVariant::Linear {
        return Err(Error::invalid_config("leso_derivative needs a Linear observer"));
    }
    Eso::new(cfg.clone())?.derivative(xi, y, u)
}

/// INLESO right-hand side.
pub fn inleso_derivative(xi: &[f64], y: f64, u: f64, cfg: &ObserverConfig) -> Result<Vec<f64>> {
    if !matches!(cfg.variant, ObserverVariant::ImprovedNonlinear { .. }) {
        return Err(Error::invalid_config("inleso_derivative needs an ImprovedNonlinear observer"));
    }
    Eso::new(cfg.clone())?.derivative(xi, y, u)
}

#[derive(Clone, Debug)]
pub struct LyapunovReport {
    pub hurwitz: bool,
    /// Eigenvalues of the scaled error matrix, as (re, im).
    pub eigenvalues: Vec<(f64, f64)>,
    /// Solution of `AᵀP + PA = -I`; `None` when the matrix is not Hurwitz.
    pub p: Option<DMatrix<f64>>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `2M·λmax²/(ω0·λmin)`.
    pub bound_constant: f64,
}

/// Scaled error-dynamics matrix: first column `-a`, ones on the superdiagonal.
pub fn error_matrix(a: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| {
        if j == 0 {
            -a[i]
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// Solves `AᵀP + PA = -Q` by vectorization, `(I⊗Aᵀ + Aᵀ⊗I) vec(P) = -vec(Q)`.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) {
        return Err(Error::invalid_input("Lyapunov solve needs square matrices of equal size"));
    }
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let sol = k.lu().solve(&rhs).ok_or_else(|| Error::Numeric("Lyapunov operator is singular".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    // symmetrize away rounding
    Ok((&p + p.transpose()) * 0.5)
}

/// Hurwitz test and Lyapunov certificate for coefficients `a` at bandwidth ω0.
pub fn lyapunov_validate(a: &[f64], omega0: f64, m_bound: f64) -> Result<LyapunovReport> {
    if a.len() < 2 {
        return Err(Error::invalid_input("need at least two observer coefficients"));
    }
    if !(omega0 > 0.0) {
        return Err(Error::invalid_input(format!("omega0 must be > 0, got {omega0}")));
    }
    if !(m_bound >= 0.0) {
        return Err(Error::invalid_input("disturbance-rate bound M must be >= 0"));
    }
    let a_mat = error_matrix(a);
    let eig = a_mat.clone().complex_eigenvalues();
    let eigenvalues: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();
    let hurwitz = eigenvalues.iter().all(|&(re, _)| re < 0.0);
    if !hurwitz {
        return Ok(LyapunovReport {
            hurwitz,
            eigenvalues,
            p: None,
            lambda_min: f64::NAN,
            lambda_max: f64::NAN,
            bound_constant: f64::NAN,
        });
    }
    let n = a.len();
    let p = solve_lyapunov(&a_mat, &DMatrix::identity(n, n))?;
    let sym = p.clone().symmetric_eigen();
    let lambda_min = sym.eigenvalues.min();
    let lambda_max = sym.eigenvalues.max();
    if !(lambda_min > 0.0) {
        return Err(Error::Numeric(format!("Lyapunov solution not positive definite (λmin = {lambda_min})")));
    }
    Ok(LyapunovReport {
        hurwitz,
        eigenvalues,
        p: Some(p),
        lambda_min,
        lambda_max,
        bound_constant: 2.0 * m_bound * lambda_max * lambda_max / (omega0 * lambda_min),
    })
}
