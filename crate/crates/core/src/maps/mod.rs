//! Maps between patches: isometry diagnostics, reconstruction of isometries
//! from distance preservation, and submetries onto the real line.

mod isometry;
mod myers_steenrod;
mod submetry;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::metrics::FinslerMetric;
use crate::numcore::{jacobian, DiffConfig};

pub use isometry::{
    geodesic_image_defect, isometry_defect, isometry_verdict, propagate_from_derivative, spray_pushforward_defect,
    GeodesicImageDefect, IsometryVerdict, SampledDefect, ISOMETRY_TOL_EXACT, ISOMETRY_TOL_FD,
};
pub use myers_steenrod::{myers_steenrod_reconstruct, DistanceAudit, MyersSteenrodOptions, MyersSteenrodReport};
pub use submetry::{
    submetry_ball_image, submetry_differential, BallImage, SubmetryDifferential, SubmetryProbe,
};

type PointFn = dyn Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync;
type DerivFn = dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync;

/// A smooth map `phi` from a patch of `source` into a patch of `target`.
#[derive(Clone)]
pub struct MapProbe {
    pub name: String,
    pub source: FinslerMetric,
    pub target: FinslerMetric,
    forward: Arc<PointFn>,
    derivative: Option<Arc<DerivFn>>,
    preimage: Option<Arc<PointFn>>,
}

impl fmt::Debug for MapProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapProbe")
            .field("name", &self.name)
            .field("source", &self.source.name())
            .field("target", &self.target.name())
            .field("derivative", &self.derivative.is_some())
            .field("preimage", &self.preimage.is_some())
            .finish()
    }
}

impl MapProbe {
    pub fn new<F>(name: impl Into<String>, source: FinslerMetric, target: FinslerMetric, forward: F) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync + 'static,
    {
        if source.dim() != target.dim() {
            return Err(FinslerError::DimensionMismatch {
                expected: source.dim(),
                got: target.dim(),
            });
        }
        Ok(MapProbe {
            name: name.into(),
            source,
            target,
            forward: Arc::new(forward),
            derivative: None,
            preimage: None,
        })
    }

    pub fn with_derivative<D>(mut self, d: D) -> Self
    where
        D: Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn with_preimage<P>(mut self, p: P) -> Self
    where
        P: Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync + 'static,
    {
        self.preimage = Some(Arc::new(p));
        self
    }

    /// The same map with only point evaluations available.
    pub fn point_only(&self) -> Self {
        MapProbe {
            derivative: None,
            preimage: None,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn has_exact_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// `phi(x)`, required to land inside the target patch.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let y = (self.forward)(x)?;
        self.target.check_point(&y)?;
        Ok(y)
    }

    pub fn preimage(&self, y: &DVector<f64>) -> Option<Result<DVector<f64>>> {
        self.preimage.as_ref().map(|f| f(y))
    }

    /// `D phi(x)`; finite differences (checked for convergence) when no
    /// exact derivative was supplied.
    pub fn derivative(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if let Some(d) = &self.derivative {
            return d(x);
        }
        let f = |z: &DVector<f64>| (self.forward)(z);
        let fine = jacobian(f, x, &DiffConfig::default())?;
        let coarse = jacobian(
            f,
            x,
            &DiffConfig {
                fd_step: 4.0 * DiffConfig::default().fd_step,
                ..DiffConfig::default()
            },
        )?;
        let gap = (&fine - &coarse).amax();
        if !(gap <= 1e-6 * (1.0 + fine.amax())) {
            return Err(FinslerError::NonSmoothMap(format!(
                "difference quotients at {:?} move by {gap:e} under step refinement",
                x.as_slice()
            )));
        }
        Ok(fine)
    }

    /// `phi_* v` at `x`.
    pub fn push(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.derivative(x)? * v)
    }
}

/// Built-in point maps, all of the form `x -> A x + c` except `bend`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case")]
pub enum MapSpec {
    /// Rotation by `angle` in the `(x1, x2)` plane.
    Rotation { angle: f64 },
    Translation { offset: Vec<f64> },
    Scaling { factor: f64 },
    /// `x1 -> x1 + amount x2`.
    Shear { amount: f64 },
    /// `x2 -> x2 + amount x1^2`.
    Bend { amount: f64 },
}

impl MapSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MapSpec::Rotation { .. } => "rotation",
            MapSpec::Translation { .. } => "translation",
            MapSpec::Scaling { .. } => "scaling",
            MapSpec::Shear { .. } => "shear",
            MapSpec::Bend { .. } => "bend",
        }
    }

    fn linear_part(&self, n: usize) -> Result<Option<(DMatrix<f64>, DVector<f64>)>> {
        let mut a = DMatrix::identity(n, n);
        let mut c = DVector::zeros(n);
        match self {
            MapSpec::Rotation { angle } => {
                if n < 2 {
                    return Err(FinslerError::InvalidParameter("rotation needs dim >= 2".into()));
                }
                let (s, co) = angle.sin_cos();
                a[(0, 0)] = co;
                a[(0, 1)] = -s;
                a[(1, 0)] = s;
                a[(1, 1)] = co;
            }
            MapSpec::Translation { offset } => {
                if offset.len() != n {
                    return Err(FinslerError::DimensionMismatch {
                        expected: n,
                        got: offset.len(),
                    });
                }
                c = DVector::from_column_slice(offset);
            }
            MapSpec::Scaling { factor } => {
                if !(*factor > 0.0) {
                    return Err(FinslerError::InvalidParameter("scaling factor must be positive".into()));
                }
                a *= *factor;
            }
            MapSpec::Shear { amount } => {
                if n < 2 {
                    return Err(FinslerError::InvalidParameter("shear needs dim >= 2".into()));
                }
                a[(0, 1)] = *amount;
            }
            MapSpec::Bend { .. } => return Ok(None),
        }
        Ok(Some((a, c)))
    }

    /// Self-map of `metric` with exact derivative and inverse.
    pub fn probe(&self, metric: &FinslerMetric) -> Result<MapProbe> {
        let n = metric.dim();
        let m = metric.clone();
        match self.linear_part(n)? {
            Some((a, c)) => {
                let inv = a
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| FinslerError::InvalidParameter("singular linear part".into()))?;
                let (a1, c1, a2, c2) = (a.clone(), c.clone(), a, c);
                Ok(MapProbe::new(self.name(), m.clone(), m, move |x| Ok(&a1 * x + &c1))?
                    .with_derivative(move |_| Ok(a2.clone()))
                    .with_preimage(move |y| Ok(&inv * (y - &c2))))
            }
            None => {
                let MapSpec::Bend { amount } = *self else { unreachable!() };
                if n < 2 {
                    return Err(FinslerError::InvalidParameter("bend needs dim >= 2".into()));
                }
                Ok(MapProbe::new(self.name(), m.clone(), m, move |x| {
                    let mut y = x.clone();
                    y[1] += amount * x[0] * x[0];
                    Ok(y)
                })?
                .with_derivative(move |x| {
                    let mut d = DMatrix::identity(n, n);
                    d[(1, 0)] = 2.0 * amount * x[0];
                    Ok(d)
                })
                .with_preimage(move |y| {
                    let mut x = y.clone();
                    x[1] -= amount * y[0] * y[0];
                    Ok(x)
                }))
            }
        }
    }
}
