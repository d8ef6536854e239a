use std::fmt;
use std::ops::Deref;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};

/// Open interval `(lo, hi)`; a missing end is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Interval {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval { lo: None, hi: None };

    pub fn above(lo: f64) -> Self {
        Interval {
            lo: Some(lo),
            hi: None,
        }
    }

    pub fn between(lo: f64, hi: f64) -> Self {
        Interval {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    fn distance_inside(&self, x: f64) -> f64 {
        let below = self.lo.map_or(f64::INFINITY, |lo| x - lo);
        let above = self.hi.map_or(f64::INFINITY, |hi| hi - x);
        below.min(above)
    }
}

/// Extra shape restriction on top of the per-axis bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Constraint {
    /// Open Euclidean ball `|x| < radius` centred at the chart origin.
    Ball { radius: f64 },
}

/// A single coordinate patch: dimension, open box and optional constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub dim: usize,
    pub bounds: Vec<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<Constraint>,
}

impl PatchSpec {
    pub fn unbounded(dim: usize) -> Self {
        PatchSpec {
            dim,
            bounds: vec![Interval::UNBOUNDED; dim],
            constraint: None,
        }
    }

    /// `x[axis] > lo`, all other axes free.
    pub fn half_space(dim: usize, axis: usize, lo: f64) -> Self {
        let mut bounds = vec![Interval::UNBOUNDED; dim];
        bounds[axis] = Interval::above(lo);
        PatchSpec {
            dim,
            bounds,
            constraint: None,
        }
    }

    pub fn ball(dim: usize, radius: f64) -> Self {
        PatchSpec {
            dim,
            bounds: vec![Interval::UNBOUNDED; dim],
            constraint: Some(Constraint::Ball { radius }),
        }
    }

    pub fn boxed(bounds: Vec<Interval>) -> Self {
        PatchSpec {
            dim: bounds.len(),
            bounds,
            constraint: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(FinslerError::InvalidParameter("patch dimension must be >= 1".into()));
        }
        if self.bounds.len() != self.dim {
            return Err(FinslerError::DimensionMismatch {
                expected: self.dim,
                got: self.bounds.len(),
            });
        }
        for (axis, b) in self.bounds.iter().enumerate() {
            if let (Some(lo), Some(hi)) = (b.lo, b.hi) {
                if !(lo < hi) {
                    return Err(FinslerError::InvalidParameter(format!(
                        "empty interval on axis {axis}: ({lo}, {hi})"
                    )));
                }
            }
        }
        if let Some(Constraint::Ball { radius }) = self.constraint {
            if !(radius > 0.0) {
                return Err(FinslerError::InvalidParameter("ball radius must be positive".into()));
            }
        }
        Ok(())
    }

    /// Euclidean chart distance from `x` to the patch boundary; negative
    /// outside, infinite for unbounded patches.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        let mut d = self
            .bounds
            .iter()
            .zip(x)
            .map(|(b, &xi)| b.distance_inside(xi))
            .fold(f64::INFINITY, f64::min);
        if let Some(Constraint::Ball { radius }) = self.constraint {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            d = d.min(radius - norm);
        }
        d
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|v| v.is_finite()) && self.boundary_distance(x) > 0.0
    }

    /// Fails unless `x` is at least `margin` away from the boundary.
    pub fn require_interior(&self, x: &[f64], margin: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(FinslerError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(FinslerError::domain(x, "non-finite coordinate"));
        }
        let d = self.boundary_distance(x);
        if d <= margin.max(0.0) {
            return Err(FinslerError::domain(
                x,
                format!("boundary distance {d:e} within margin {margin:e}"),
            ));
        }
        Ok(())
    }
}

/// Coordinates of a point of the patch.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct ChartPoint(DVector<f64>);

impl ChartPoint {
    pub fn new(coords: DVector<f64>) -> Self {
        ChartPoint(coords)
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        ChartPoint(DVector::from_column_slice(coords))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl Deref for ChartPoint {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl From<Vec<f64>> for ChartPoint {
    fn from(v: Vec<f64>) -> Self {
        ChartPoint(DVector::from_vec(v))
    }
}

impl From<ChartPoint> for Vec<f64> {
    fn from(p: ChartPoint) -> Self {
        p.0.as_slice().to_vec()
    }
}

impl From<DVector<f64>> for ChartPoint {
    fn from(v: DVector<f64>) -> Self {
        ChartPoint(v)
    }
}

impl fmt::Debug for ChartPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChartPoint{:?}", self.0.as_slice())
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: ChartPoint,
    #[serde(with = "crate::numcore::serde_vec")]
    pub components: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: ChartPoint, components: DVector<f64>) -> Result<Self> {
        if base.len() != components.len() {
            return Err(FinslerError::DimensionMismatch {
                expected: base.len(),
                got: components.len(),
            });
        }
        Ok(TangentVector { base, components })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_plane_boundary_distance() {
        let patch = PatchSpec::half_space(2, 1, 0.0);
        assert_eq!(patch.boundary_distance(&[5.0, 0.25]), 0.25);
        assert!(patch.contains(&[0.0, 1.0]));
        assert!(!patch.contains(&[0.0, -1.0]));
        assert!(!patch.contains(&[0.0, 0.0]));
    }

    #[test]
    fn ball_constraint() {
        let patch = PatchSpec::ball(2, 1.0);
        assert!(patch.contains(&[0.5, 0.5]));
        assert!(!patch.contains(&[0.8, 0.8]));
        assert!((patch.boundary_distance(&[0.6, 0.0]) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn interior_margin_is_enforced() {
        let patch = PatchSpec::half_space(2, 1, 0.0);
        assert!(patch.require_interior(&[0.0, 1e-6], 1e-5).is_err());
        assert!(patch.require_interior(&[0.0, 1e-3], 1e-5).is_ok());
        assert!(matches!(
            patch.require_interior(&[0.0], 0.0),
            Err(FinslerError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_patches_rejected() {
        assert!(PatchSpec::unbounded(0).validate().is_err());
        assert!(PatchSpec::boxed(vec![Interval::between(1.0, 0.0)]).validate().is_err());
    }

    #[test]
    fn chart_point_serializes_as_plain_array() {
        let p = ChartPoint::from_slice(&[1.0, 2.5]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[1.0,2.5]");
        let back: ChartPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
