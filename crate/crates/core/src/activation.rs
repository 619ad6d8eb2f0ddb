//! Curve activation functions and the closed forms the rest of the crate needs:
//! value, first derivative, inverse, and derivative expressed through the output.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    /// Only meant for test fixtures: the tangent approximation is exact.
    Identity,
}

impl Activation {
    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }

    /// φ′(φ⁻¹(y)), written directly in terms of the output `y`.
    #[inline]
    pub fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }

    /// Inverse of [`Activation::eval`]. Diverges at the ends of the output range.
    #[inline]
    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => y.atanh(),
            Activation::Sigmoid => (y / (1.0 - y)).ln(),
            Activation::Identity => y,
        }
    }

    /// Open output range `(lo, hi)`; `None` for the unbounded identity.
    pub fn output_range(self) -> Option<(f64, f64)> {
        match self {
            Activation::Tanh => Some((-1.0, 1.0)),
            Activation::Sigmoid => Some((0.0, 1.0)),
            Activation::Identity => None,
        }
    }

    /// Largest value of |φ′| over the real line.
    pub fn max_abs_derivative(self) -> f64 {
        match self {
            Activation::Tanh | Activation::Identity => 1.0,
            Activation::Sigmoid => 0.25,
        }
    }

    pub fn is_curve(self) -> bool {
        !matches!(self, Activation::Identity)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" | "t" => Ok(Activation::Tanh),
            "sigmoid" | "s" => Ok(Activation::Sigmoid),
            "identity" | "i" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}
