//! Truncated power series (jets) and the `exp(-g)` derivative recurrence.
//!
//! A [`Jet`] stores Taylor coefficients `c[k] = f^(k)(s0)/k!` of a scalar
//! function at an expansion point. The coverage evaluator needs derivatives of
//! interference Laplace transforms `L(s) = exp(-g(s))` up to order 18; those
//! come from per-order quadrature of the exponent's closed-form s-derivatives
//! followed by [`laplace_derivatives`], with jet arithmetic serving as the
//! independent second route the test suite checks against.

use crate::numerics::special::{binomial, factorial, LogSigned};

/// Hard ceiling on supported derivative order (covers the deepest fading
/// order used anywhere, m = 19, which needs order 18, with headroom).
pub const MAX_ORDER: usize = 20;

/// Truncated Taylor series: `c[k]` is the k-th coefficient f^(k)/k!.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    c: Vec<f64>,
}

impl Jet {
    /// The constant `x` to the given order.
    pub fn constant(x: f64, order: usize) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = vec![0.0; order + 1];
        c[0] = x;
        Jet { c }
    }

    /// The identity variable expanded at `x0`: value x0, first derivative 1.
    pub fn variable(x0: f64, order: usize) -> Jet {
        let mut jet = Jet::constant(x0, order);
        if order >= 1 {
            jet.c[1] = 1.0;
        }
        jet
    }

    /// Build from raw Taylor coefficients (index k holds f^(k)/k!).
    pub fn from_coefficients(c: Vec<f64>) -> Jet {
        assert!(!c.is_empty() && c.len() <= MAX_ORDER + 1);
        Jet { c }
    }

    /// Build from raw derivatives f^(k) (not divided by k!).
    pub fn from_derivatives(derivs: &[f64]) -> Jet {
        assert!(!derivs.is_empty() && derivs.len() <= MAX_ORDER + 1);
        let c = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| d / factorial(k as u32))
            .collect();
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    /// The k-th derivative: c[k] · k!.
    pub fn derivative(&self, k: usize) -> f64 {
        self.coefficient(k) * factorial(k as u32)
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, x: f64) -> Jet {
        Jet {
            c: self.c.iter().map(|a| a * x).collect(),
        }
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    /// Cauchy product truncated at min(order, order).
    pub fn mul(&self, other: &Jet) -> Jet {
        let order = self.order().min(other.order());
        let mut c = vec![0.0; order + 1];
        for k in 0..=order {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += self.c[j] * other.c[k - j];
            }
            c[k] = acc;
        }
        Jet { c }
    }

    /// exp of a jet via the ODE recurrence (exp g)' = g'·exp g, order by
    /// order: (k+1)·b[k+1] = Σ_{j=0..k} (j+1)·a[j+1]·b[k-j].
    pub fn exp(&self) -> Jet {
        let order = self.order();
        let mut b = vec![0.0; order + 1];
        b[0] = self.c[0].exp();
        for k in 0..order {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += (j + 1) as f64 * self.c[j + 1] * b[k - j];
            }
            b[k + 1] = acc / (k + 1) as f64;
        }
        Jet { c: b }
    }

    /// Reciprocal 1/a, requiring a nonzero leading coefficient.
    pub fn recip(&self) -> Jet {
        let order = self.order();
        let a0 = self.c[0];
        assert!(a0 != 0.0, "reciprocal of a jet with zero value");
        let mut b = vec![0.0; order + 1];
        b[0] = 1.0 / a0;
        for k in 1..=order {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * b[k - j];
            }
            b[k] = -acc / a0;
        }
        Jet { c: b }
    }

    /// Integer power by binary exponentiation.
    pub fn powi(&self, mut n: u32) -> Jet {
        let mut base = self.clone();
        let mut acc = Jet::constant(1.0, self.order());
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        let order = self.order().min(other.order());
        let c = (0..=order).map(|k| op(self.c[k], other.c[k])).collect();
        Jet { c }
    }
}

/// exp of a jet (free-function form).
pub fn jet_exp(x: &Jet) -> Jet {
    x.exp()
}

/// Raw derivatives of `L(s) = exp(-g(s))` up to order K from the raw
/// derivatives `g_derivs[j] = g^(j)(s0)`, j = 0..=K, by the Leibniz
/// recurrence `L^(k) = -Σ_{j=0..k-1} C(k-1, j) · g^(j+1) · L^(k-1-j)`.
pub fn laplace_derivatives(g_derivs: &[f64], order: usize) -> Vec<f64> {
    assert!(g_derivs.len() > order, "need g^(j) through j = {order}");
    let mut l = vec![0.0; order + 1];
    l[0] = (-g_derivs[0]).exp();
    for k in 1..=order {
        let mut acc = 0.0;
        for j in 0..k {
            acc += binomial((k - 1) as u32, j as u32) * g_derivs[j + 1] * l[k - 1 - j];
        }
        l[k] = -acc;
    }
    l
}

/// Same recurrence carried in signed log space.
///
/// Works on `M_k = L^(k) / L^(0)` so the (possibly underflowing) factor
/// `exp(-g0)` enters only once, as a log shift: handles exponents g0 in the
/// hundreds and derivative magnitudes far outside f64 range.
pub fn laplace_derivatives_log(g_derivs: &[f64], order: usize) -> Vec<LogSigned> {
    assert!(g_derivs.len() > order, "need g^(j) through j = {order}");
    let g_log: Vec<LogSigned> = g_derivs.iter().map(|&g| LogSigned::from_value(g)).collect();
    let mut m = vec![LogSigned::ZERO; order + 1];
    m[0] = LogSigned::ONE;
    for k in 1..=order {
        let terms = (0..k).map(|j| {
            LogSigned::from_value(binomial((k - 1) as u32, j as u32))
                .mul(g_log[j + 1])
                .mul(m[k - 1 - j])
        });
        m[k] = LogSigned::sum(terms).neg();
    }
    let shift = -g_derivs[0];
    m.into_iter()
        .map(|mk| LogSigned::new(mk.sign, mk.ln_abs + shift))
        .collect()
}
