//! Closed-form holomorphic expressions used as Weierstrass data.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::complexgrid::{ArnoldiPolynomial, ComplexPolynomial};
use crate::C64;

/// A small expression tree for holomorphic (or meromorphic) functions of `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Holo {
    Const { value: C64 },
    Z,
    Poly { poly: ComplexPolynomial },
    Arnoldi { poly: Box<ArnoldiPolynomial> },
    Exp { arg: Box<Holo> },
    Add { a: Box<Holo>, b: Box<Holo> },
    Mul { a: Box<Holo>, b: Box<Holo> },
    Div { a: Box<Holo>, b: Box<Holo> },
    Powi { base: Box<Holo>, n: i32 },
}

impl Holo {
    pub fn constant(value: C64) -> Self {
        Holo::Const { value }
    }

    pub fn real(x: f64) -> Self {
        Holo::Const {
            value: C64::new(x, 0.0),
        }
    }

    pub fn z() -> Self {
        Holo::Z
    }

    pub fn poly(poly: ComplexPolynomial) -> Self {
        Holo::Poly { poly }
    }

    pub fn arnoldi(poly: ArnoldiPolynomial) -> Self {
        Holo::Arnoldi { poly: Box::new(poly) }
    }

    pub fn exp(arg: Holo) -> Self {
        Holo::Exp { arg: Box::new(arg) }
    }

    pub fn add(a: Holo, b: Holo) -> Self {
        Holo::Add {
            a: Box::new(a),
            b: Box::new(b),
        }
    }

    pub fn mul(a: Holo, b: Holo) -> Self {
        Holo::Mul {
            a: Box::new(a),
            b: Box::new(b),
        }
    }

    pub fn div(a: Holo, b: Holo) -> Self {
        Holo::Div {
            a: Box::new(a),
            b: Box::new(b),
        }
    }

    pub fn powi(base: Holo, n: i32) -> Self {
        Holo::Powi {
            base: Box::new(base),
            n,
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        match self {
            Holo::Const { value } => *value,
            Holo::Z => z,
            Holo::Poly { poly } => poly.eval(z),
            Holo::Arnoldi { poly } => poly.eval(z),
            Holo::Exp { arg } => arg.eval(z).exp(),
            Holo::Add { a, b } => a.eval(z) + b.eval(z),
            Holo::Mul { a, b } => a.eval(z) * b.eval(z),
            Holo::Div { a, b } => a.eval(z) / b.eval(z),
            Holo::Powi { base, n } => base.eval(z).powi(*n),
        }
    }

    pub fn sample(&self, points: &[C64]) -> Vec<C64> {
        points.iter().map(|&z| self.eval(z)).collect()
    }
}

impl fmt::Display for Holo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Holo::Const { value } => {
                if value.im == 0.0 {
                    write!(f, "{}", value.re)
                } else {
                    write!(f, "({}{:+}i)", value.re, value.im)
                }
            }
            Holo::Z => write!(f, "z"),
            Holo::Poly { poly } => {
                write!(f, "poly[")?;
                for (k, c) in poly.coeffs().iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}{:+}i", c.re, c.im)?;
                }
                write!(f, "]")
            }
            Holo::Arnoldi { poly } => write!(f, "arnoldi[degree {}]", poly.degree()),
            Holo::Exp { arg } => write!(f, "exp({arg})"),
            Holo::Add { a, b } => write!(f, "({a} + {b})"),
            Holo::Mul { a, b } => write!(f, "{a}*{b}"),
            Holo::Div { a, b } => write!(f, "{a}/({b})"),
            Holo::Powi { base, n } => write!(f, "{base}^{n}"),
        }
    }
}
