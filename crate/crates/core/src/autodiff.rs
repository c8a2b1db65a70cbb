//! Forward-mode differentiation used by the Lie-derivative checker.
//!
//! [`Jet`] is a truncated Taylor series in time whose coefficients are
//! [`Dual`] numbers. Propagating a state through the flow of a drift field
//! in jet arithmetic yields every `L_f^k h` in the real parts and the
//! directional derivative along the seeded direction in the dual parts,
//! with no step-size selection and only rounding error.

use std::ops::{Add, Mul, Neg, Sub};

/// Number types the plant models can be evaluated over.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn from_f64(c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(c: f64) -> Self {
        c
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub const ZERO: Dual = Dual { re: 0.0, eps: 0.0 };

    pub fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    fn div_f64(self, c: f64) -> Self {
        Self::new(self.re / c, self.eps / c)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl Scalar for Dual {
    fn from_f64(c: f64) -> Self {
        Dual::new(c, 0.0)
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -self.eps * self.re.sin())
    }
}

/// Number of stored Taylor coefficients; supports plants up to this dimension.
pub const JET_LEN: usize = 10;

/// Truncated Taylor series `Σ c[k]·t^k`, k < [`JET_LEN`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [Dual; JET_LEN],
}

impl Jet {
    pub fn constant(d: Dual) -> Self {
        let mut c = [Dual::ZERO; JET_LEN];
        c[0] = d;
        Self { c }
    }

    /// Simultaneous sine and cosine through the usual coefficient recurrences.
    fn sin_cos(self) -> (Jet, Jet) {
        let u = &self.c;
        let mut s = [Dual::ZERO; JET_LEN];
        let mut co = [Dual::ZERO; JET_LEN];
        s[0] = u[0].sin();
        co[0] = u[0].cos();
        for k in 1..JET_LEN {
            let mut ds = Dual::ZERO;
            let mut dc = Dual::ZERO;
            for j in 1..=k {
                let ju = u[j] * Dual::from_f64(j as f64);
                ds = ds + ju * co[k - j];
                dc = dc + ju * s[k - j];
            }
            s[k] = ds.div_f64(k as f64);
            co[k] = -dc.div_f64(k as f64);
        }
        (Jet { c: s }, Jet { c: co })
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a = *a + b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a = *a - b;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [Dual::ZERO; JET_LEN];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate().take(JET_LEN - i) {
                c[i + j] = c[i + j] + *a * *b;
            }
        }
        Jet { c }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for a in self.c.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Scalar for Jet {
    fn from_f64(c: f64) -> Self {
        Jet::constant(Dual::from_f64(c))
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn scale(mut self, c: f64) -> Self {
        for a in self.c.iter_mut() {
            *a = Dual::new(a.re * c, a.eps * c);
        }
        self
    }
}

/// Taylor coefficients of the flow of `drift` started at `x0 + ε·direction`,
/// truncated at `order`. Returned as one [`Jet`] per state component.
pub fn flow_jet<F>(drift: F, x0: &[f64], direction: &[f64], order: usize) -> Vec<Jet>
where
    F: Fn(&[Jet]) -> Vec<Jet>,
{
    assert!(order < JET_LEN, "jet order {order} exceeds capacity {JET_LEN}");
    assert_eq!(x0.len(), direction.len());
    let mut x: Vec<Jet> = x0.iter().zip(direction).map(|(&v, &d)| Jet::constant(Dual::new(v, d))).collect();
    // x_{k+1} = [t^k] f(x(t)) / (k + 1); coefficient k of f only depends on x_0..x_k.
    for k in 0..order {
        let fx = drift(&x);
        for (xi, fi) in x.iter_mut().zip(&fx) {
            xi.c[k + 1] = fi.c[k].div_f64((k + 1) as f64);
        }
    }
    x
}
