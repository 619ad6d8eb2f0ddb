//! Per-neuron piecewise linear approximation built from tangent lines of the
//! activation curve.
//!
//! Piece `t` (0-based) is the tangent line at `p_t` and is active on the half-open
//! interval `(η_{t-1}, η_t]`, with `η_{-1} = -∞` and `η_{k-1} = +∞`. The interior
//! breakpoint between two adjacent tangent points is the intersection of their lines
//! when it falls in `[p_t, p_{t+1})`, and their midpoint otherwise (parallel lines, or
//! an intersection pushed outside by an inflection point). With the midpoint rule the
//! function may jump at that breakpoint.

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};

/// Tangent points closer than this are considered the same point.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;
/// Slopes closer than this are treated as parallel.
const PARALLEL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFn {
    activation: Activation,
    tangent_points: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    breakpoints: Vec<f64>,
}

impl PiecewiseLinearFn {
    /// Single tangent line at 0, the linear regime of the activation.
    pub fn initial(activation: Activation) -> Self {
        Self::from_tangent_points(activation, vec![0.0]).expect("single tangent point is valid")
    }

    /// Builds the function from a set of tangent points (any order).
    pub fn from_tangent_points(activation: Activation, mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("at least one tangent point is required".into()));
        }
        if let Some(bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::Config(format!("non-finite tangent point {bad}")));
        }
        points.sort_by(f64::total_cmp);
        if let Some(w) = points.windows(2).find(|w| w[1] - w[0] <= DUPLICATE_TOLERANCE) {
            return Err(Error::DuplicateTangent(w[1]));
        }
        let slopes: Vec<f64> = points.iter().map(|&p| activation.derivative(p)).collect();
        let intercepts: Vec<f64> = points
            .iter()
            .zip(&slopes)
            .map(|(&p, &a)| activation.eval(p) - a * p)
            .collect();
        let breakpoints = (0..points.len() - 1)
            .map(|t| {
                breakpoint(
                    (points[t], slopes[t], intercepts[t]),
                    (points[t + 1], slopes[t + 1], intercepts[t + 1]),
                )
            })
            .collect();
        Ok(Self {
            activation,
            tangent_points: points,
            slopes,
            intercepts,
            breakpoints,
        })
    }

    /// A copy with one more tangent line at `p`; `self` is left untouched.
    pub fn insert_tangent(&self, p: f64) -> Result<Self> {
        if self.is_duplicate(p) {
            return Err(Error::DuplicateTangent(p));
        }
        let mut points = self.tangent_points.clone();
        points.push(p);
        Self::from_tangent_points(self.activation, points)
    }

    pub fn is_duplicate(&self, p: f64) -> bool {
        let i = self.tangent_points.partition_point(|&q| q < p);
        let near = |j: usize| {
            self.tangent_points
                .get(j)
                .is_some_and(|&q| (q - p).abs() <= DUPLICATE_TOLERANCE)
        };
        near(i) || (i > 0 && near(i - 1))
    }

    /// 0-based index of the piece whose interval `(η_{s-1}, η_s]` contains `z`.
    #[inline]
    pub fn active_index(&self, z: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < z)
    }

    #[inline]
    pub fn evaluate(&self, z: f64) -> f64 {
        let s = self.active_index(z);
        self.slopes[s] * z + self.intercepts[s]
    }

    /// Number of pieces `k`.
    pub fn pieces(&self) -> usize {
        self.tangent_points.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn tangent_points(&self) -> &[f64] {
        &self.tangent_points
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `(α, β)` of piece `s`.
    pub fn piece(&self, s: usize) -> Option<(f64, f64)> {
        Some((*self.slopes.get(s)?, self.intercepts[s]))
    }
}

fn breakpoint(left: (f64, f64, f64), right: (f64, f64, f64)) -> f64 {
    let (p0, a0, b0) = left;
    let (p1, a1, b1) = right;
    let midpoint = 0.5 * (p0 + p1);
    if (a0 - a1).abs() < PARALLEL_TOLERANCE {
        return midpoint;
    }
    let x = (b1 - b0) / (a0 - a1);
    if x >= p0 && x < p1 {
        x
    } else {
        midpoint
    }
}

/// JSON form. Slopes, intercepts and breakpoints are recomputed from the tangent
/// points on load; stored breakpoints must agree with the recomputed ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiecewiseLinearFile {
    pub activation: Activation,
    pub tangent_points: Vec<f64>,
    pub breakpoints: Vec<f64>,
}

impl From<&PiecewiseLinearFn> for PiecewiseLinearFile {
    fn from(f: &PiecewiseLinearFn) -> Self {
        Self {
            activation: f.activation,
            tangent_points: f.tangent_points.clone(),
            breakpoints: f.breakpoints.clone(),
        }
    }
}

impl TryFrom<PiecewiseLinearFile> for PiecewiseLinearFn {
    type Error = Error;

    fn try_from(file: PiecewiseLinearFile) -> Result<Self> {
        let f = PiecewiseLinearFn::from_tangent_points(file.activation, file.tangent_points)?;
        let consistent = f.breakpoints.len() == file.breakpoints.len()
            && f
                .breakpoints
                .iter()
                .zip(&file.breakpoints)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        if !consistent {
            return Err(Error::Model(
                "stored breakpoints disagree with tangent points".into(),
            ));
        }
        Ok(f)
    }
}

impl Serialize for PiecewiseLinearFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PiecewiseLinearFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewiseLinearFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = PiecewiseLinearFile::deserialize(d)?;
        PiecewiseLinearFn::try_from(file).map_err(serde::de::Error::custom)
    }
}
