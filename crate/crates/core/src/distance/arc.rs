use nalgebra::DVector;

use crate::error::{FinslerError, Result};
use crate::geodesics::GeodesicPath;
use crate::metrics::FinslerMetric;

/// A piecewise-smooth curve in chart coordinates.
pub trait Curve {
    fn domain(&self) -> (f64, f64);
    fn point(&self, t: f64) -> Result<DVector<f64>>;
    fn velocity(&self, t: f64) -> Result<DVector<f64>>;
    /// Interior parameters where the velocity may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Straight segments through the vertices, parametrized on `[0, k]` with
/// segment `i` on `[i, i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<DVector<f64>>,
}

impl Polyline {
    pub fn new(vertices: Vec<DVector<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(FinslerError::InvalidParameter("a polyline needs at least 2 vertices".into()));
        }
        let n = vertices[0].len();
        if let Some(bad) = vertices.iter().find(|v| v.len() != n) {
            return Err(FinslerError::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Ok(Polyline { vertices })
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.vertices.len() - 1;
        (t.floor().max(0.0) as usize).min(k - 1)
    }
}

impl Curve for Polyline {
    fn domain(&self) -> (f64, f64) {
        (0.0, (self.vertices.len() - 1) as f64)
    }

    fn point(&self, t: f64) -> Result<DVector<f64>> {
        let i = self.segment(t);
        let s = t - i as f64;
        Ok(&self.vertices[i] * (1.0 - s) + &self.vertices[i + 1] * s)
    }

    fn velocity(&self, t: f64) -> Result<DVector<f64>> {
        let i = self.segment(t);
        Ok(&self.vertices[i + 1] - &self.vertices[i])
    }

    fn breakpoints(&self) -> Vec<f64> {
        (1..self.vertices.len() - 1).map(|i| i as f64).collect()
    }
}

type CurveFn = Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// A smooth curve given by closures for position and velocity.
pub struct ParametricCurve {
    pub t0: f64,
    pub t1: f64,
    position: CurveFn,
    velocity: CurveFn,
}

impl ParametricCurve {
    pub fn new<P, V>(t0: f64, t1: f64, position: P, velocity: V) -> Self
    where
        P: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        V: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        ParametricCurve {
            t0,
            t1,
            position: Box::new(position),
            velocity: Box::new(velocity),
        }
    }
}

impl Curve for ParametricCurve {
    fn domain(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    fn point(&self, t: f64) -> Result<DVector<f64>> {
        Ok((self.position)(t))
    }

    fn velocity(&self, t: f64) -> Result<DVector<f64>> {
        Ok((self.velocity)(t))
    }
}

impl Curve for GeodesicPath {
    fn domain(&self) -> (f64, f64) {
        (self.t_minus, self.t_plus)
    }

    fn point(&self, t: f64) -> Result<DVector<f64>> {
        self.position_at(t)
    }

    fn velocity(&self, t: f64) -> Result<DVector<f64>> {
        self.velocity_at(t)
    }
}

// 8-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn piece(m: &FinslerMetric, c: &dyn Curve, a: f64, b: f64, cells: usize) -> Result<f64> {
    let h = (b - a) / cells as f64;
    let mut total = 0.0;
    for k in 0..cells {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            for t in [mid - 0.5 * h * x, mid + 0.5 * h * x] {
                let p = c.point(t)?;
                m.check_point(&p)?;
                total += w * m.evaluate_f(&p, &c.velocity(t)?)?;
            }
        }
    }
    Ok(0.5 * h * total)
}

/// `L(c) = int F(c, c')` by composite Gauss-Legendre on every smooth piece,
/// doubling the cell count until two successive totals agree to 1e-8
/// relative.
pub fn arc_length(m: &FinslerMetric, c: &dyn Curve) -> Result<f64> {
    let (t0, t1) = c.domain();
    if !(t1 > t0) {
        return Err(FinslerError::InvalidParameter(format!("empty curve domain [{t0}, {t1}]")));
    }
    let mut knots = vec![t0];
    knots.extend(c.breakpoints().into_iter().filter(|t| *t > t0 && *t < t1));
    knots.push(t1);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let mut cells = 1;
        let mut prev = piece(m, c, w[0], w[1], cells)?;
        loop {
            cells *= 2;
            let next = piece(m, c, w[0], w[1], cells)?;
            if (next - prev).abs() <= 1e-8 * next.abs().max(f64::MIN_POSITIVE) {
                total += next;
                break;
            }
            if cells >= 1 << 14 {
                return Err(FinslerError::Numeric(format!(
                    "arc length did not settle on [{}, {}] (last change {:e})",
                    w[0],
                    w[1],
                    (next - prev).abs()
                )));
            }
            prev = next;
        }
    }
    Ok(total)
}
