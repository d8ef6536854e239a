//! Distance coordinates `theta = (r_{p_1}, .., r_{p_n})` around a point.
//!
//! Base point `p_k` emanates from `p` along a direction `v_k` tangent to all
//! earlier distance spheres, so with `J[(i, j)] = v_j(r_{p_i})` the Jacobian
//! is lower triangular.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distance::{default_tol, invert_exp_from};
use crate::error::{FinslerError, Result};
use crate::geodesics::{emanating_point, EmanatingPoint};
use crate::metrics::{FinslerMetric, MetricFamily};
use crate::numcore::sampling::{seeded_rng, unit_direction};
use crate::numcore::{
    canonical_basis, central_difference_vec, null_space_basis_with, second_derivative, seeded_frame, serde_mat,
    serde_vec, serde_vecs, ChartPoint,
};

/// Below this a radial gradient counts as vanished.
const GRADIENT_FLOOR: f64 = 1e-8;
const ROUND_TRIP_TOL: f64 = 1e-7;
const MAX_HALVINGS: i32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartOptions {
    pub seed: u64,
    /// Candidate directions come from the canonical basis instead of a
    /// seeded frame.
    pub canonical_frame: bool,
    /// `delta_k = delta_fraction * budget / F(p, v_k)`.
    pub delta_fraction: f64,
    /// Probe points per certification radius.
    pub probes: usize,
}

impl ChartOptions {
    pub fn seeded(seed: u64) -> Self {
        ChartOptions {
            seed,
            canonical_frame: false,
            delta_fraction: 0.25,
            probes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceChart {
    pub metric: MetricFamily,
    #[serde(with = "serde_vec")]
    pub center: DVector<f64>,
    pub base_points: Vec<ChartPoint>,
    /// `rho(p_i, p)`.
    pub radii: Vec<f64>,
    #[serde(with = "serde_vecs")]
    pub directions: Vec<DVector<f64>>,
    pub emanating: Vec<EmanatingPoint>,
    /// `exp_{p_i}^{-1}(p)`, used to warm-start shooting from `p_i`.
    #[serde(with = "serde_vecs")]
    pub shooting: Vec<DVector<f64>>,
    /// `J[(i, j)] = v_j(r_{p_i})`.
    #[serde(with = "serde_mat")]
    pub jacobian: DMatrix<f64>,
    /// Chart-coordinate derivative of `theta` at `p`.
    #[serde(with = "serde_mat")]
    pub dtheta: DMatrix<f64>,
    /// F-radius around `p` on which the round trip was verified.
    pub certified_radius: f64,
    /// Half-width (max norm) of the box around `theta(p)` covered by the
    /// certification probes.
    pub image_half_width: f64,
    pub options: ChartOptions,
}

fn chart_eval_err(index: usize, e: FinslerError) -> FinslerError {
    FinslerError::ChartEvaluation {
        index,
        reason: e.to_string(),
    }
}

/// `r_base(a)` via shooting warm-started at `warm`.
fn radial(m: &FinslerMetric, base: &DVector<f64>, a: &DVector<f64>, warm: &DVector<f64>) -> Result<f64> {
    let res = invert_exp_from(m, base, a, warm, default_tol(a))?;
    m.evaluate_f(base, &res.v)
}

fn fd_step(a: &DVector<f64>) -> f64 {
    1e-3 * (1.0 + a.amax())
}

/// Chart-coordinate gradient of `r_base` at `a` (central differences, one
/// Richardson level).
pub fn radial_gradient(m: &FinslerMetric, base: &DVector<f64>, a: &DVector<f64>) -> Result<DVector<f64>> {
    radial_gradient_warm(m, base, a, &(a - base))
}

fn radial_gradient_warm(m: &FinslerMetric, base: &DVector<f64>, a: &DVector<f64>, warm: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.len();
    let h = fd_step(a);
    let mut g = DVector::zeros(n);
    for (j, e) in canonical_basis(n).iter().enumerate() {
        let d = central_difference_vec(
            |x| radial(m, base, x, warm).map(|r| DVector::from_element(1, r)),
            a,
            e,
            h,
            2,
        )?;
        g[j] = d[0];
    }
    Ok(g)
}

fn radial_directional(
    m: &FinslerMetric,
    base: &DVector<f64>,
    a: &DVector<f64>,
    v: &DVector<f64>,
    warm: &DVector<f64>,
) -> Result<f64> {
    let h = fd_step(a) / v.norm();
    let d = central_difference_vec(|x| radial(m, base, x, warm).map(|r| DVector::from_element(1, r)), a, v, h, 2)?;
    Ok(d[0])
}

/// Hessian of `r_base` at `a` from four-point stencils with step `h`.
pub fn radial_hessian(m: &FinslerMetric, base: &DVector<f64>, a: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let n = a.len();
    let warm = a - base;
    let e = canonical_basis(n);
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let d = second_derivative(|x| radial(m, base, x, &warm), a, &e[i], &e[j], h, h, 1)?;
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    Ok(out)
}

/// Orthonormal basis of the common kernel of `d r_{p_i}` at `p`.
pub fn sphere_tangent_basis(m: &FinslerMetric, p: &DVector<f64>, base_points: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let grads = base_points
        .iter()
        .map(|b| radial_gradient(m, b, p))
        .collect::<Result<Vec<_>>>()?;
    kernel(&grads, m.dim(), &canonical_basis(m.dim()))
}

fn kernel(grads: &[DVector<f64>], n: usize, candidates: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    for (i, g) in grads.iter().enumerate() {
        if g.norm() < GRADIENT_FLOOR {
            return Err(FinslerError::Degenerate(format!("gradient of r_{{p_{}}} vanishes at the center", i + 1)));
        }
    }
    null_space_basis_with(grads, n, 1e-6, candidates)
}

pub fn build_distance_chart(m: &FinslerMetric, p: &DVector<f64>, radius_budget: f64, seed: u64) -> Result<DistanceChart> {
    build_distance_chart_with(m, p, radius_budget, &ChartOptions::seeded(seed))
}

pub fn build_distance_chart_with(
    m: &FinslerMetric,
    p: &DVector<f64>,
    radius_budget: f64,
    opts: &ChartOptions,
) -> Result<DistanceChart> {
    if !(radius_budget > 0.0 && radius_budget.is_finite()) {
        return Err(FinslerError::InvalidParameter(format!("radius budget must be positive, got {radius_budget}")));
    }
    if !(opts.delta_fraction > 0.0 && opts.delta_fraction < 1.0) {
        return Err(FinslerError::InvalidParameter("delta_fraction must lie in (0, 1)".into()));
    }
    m.check_point(p)?;
    let n = m.dim();
    let candidates = if opts.canonical_frame {
        canonical_basis(n)
    } else {
        seeded_frame(n, opts.seed)
    };
    let construction = |index: usize| move |e: FinslerError| FinslerError::ChartConstruction {
        index,
        reason: e.to_string(),
    };

    let mut bases: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut grads: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut directions = Vec::with_capacity(n);
    let mut emanating = Vec::with_capacity(n);
    let mut shooting = Vec::with_capacity(n);
    let mut radii = Vec::with_capacity(n);
    for k in 0..n {
        let v = kernel(&grads, n, &candidates).map_err(construction(k))?.swap_remove(0);
        let speed = m.evaluate_f(p, &v)?;
        let delta = opts.delta_fraction * radius_budget / speed;
        let e = emanating_point(m, p, &v, delta).map_err(construction(k))?;
        let base = e.q.coords().clone();
        let warm = &e.w * e.return_time();
        let res = invert_exp_from(m, &base, p, &warm, default_tol(p)).map_err(construction(k))?;
        radii.push(m.evaluate_f(&base, &res.v)?);
        let g = radial_gradient_warm(m, &base, p, &res.v).map_err(construction(k))?;
        grads.push(g);
        shooting.push(res.v);
        bases.push(base);
        directions.push(v);
        emanating.push(e);
    }

    let mut jacobian = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            jacobian[(i, j)] =
                radial_directional(m, &bases[i], p, &directions[j], &shooting[i]).map_err(construction(i))?;
        }
    }
    let dtheta = DMatrix::from_fn(n, n, |i, j| grads[i][j]);
    if dtheta.determinant().abs() < 1e-12 || jacobian.determinant().abs() < 1e-12 {
        return Err(FinslerError::ChartConstruction {
            index: n - 1,
            reason: "distance Jacobian is singular".into(),
        });
    }

    let mut chart = DistanceChart {
        metric: m.family().clone(),
        center: p.clone(),
        base_points: bases.into_iter().map(ChartPoint::new).collect(),
        radii,
        directions,
        emanating,
        shooting,
        jacobian,
        dtheta,
        certified_radius: 0.0,
        image_half_width: 0.0,
        options: opts.clone(),
    };
    certify(m, &mut chart, radius_budget)?;
    Ok(chart)
}

fn probe_points(m: &FinslerMetric, chart: &DistanceChart, r: f64) -> Result<Vec<DVector<f64>>> {
    let n = m.dim();
    let p = &chart.center;
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[i] = s;
            dirs.push(e);
        }
    }
    let mut rng = seeded_rng(chart.options.seed ^ 0xc3a7);
    while dirs.len() < chart.options.probes.max(2 * n) {
        dirs.push(unit_direction(&mut rng, n));
    }
    dirs.truncate(chart.options.probes.max(1));
    dirs.into_iter()
        .map(|u| Ok(p + &u * (r / m.evaluate_f(p, &u)?)))
        .collect()
}

/// Largest `budget / 2^k`, `k >= 1`, whose probes all round-trip.
fn certify(m: &FinslerMetric, chart: &mut DistanceChart, budget: f64) -> Result<()> {
    let theta_p = DVector::from_vec(chart.radii.clone());
    for k in 1..=MAX_HALVINGS {
        let r = budget / 2f64.powi(k);
        let mut ok = true;
        let mut width = 0.0f64;
        for a in probe_points(m, chart, r)? {
            if m.check_point(&a).is_err() {
                ok = false;
                break;
            }
            let trip = evaluate_with(m, chart, &a).and_then(|t| {
                width = width.max((&t - &theta_p).amax());
                solve(m, chart, &t, 1e-10 * (1.0 + t.amax()))
            });
            match trip {
                Ok(b) if (&b - &a).amax() < ROUND_TRIP_TOL => {}
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            chart.certified_radius = r;
            chart.image_half_width = width;
            return Ok(());
        }
    }
    Err(FinslerError::ChartConstruction {
        index: chart.radii.len() - 1,
        reason: format!("no round-trip certificate down to radius {:e}", budget / 2f64.powi(MAX_HALVINGS)),
    })
}

fn evaluate_with(m: &FinslerMetric, chart: &DistanceChart, a: &DVector<f64>) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(chart.radii.len());
    for (i, (b, warm)) in chart.base_points.iter().zip(&chart.shooting).enumerate() {
        out[i] = radial(m, b.coords(), a, warm).map_err(|e| chart_eval_err(i, e))?;
    }
    Ok(out)
}

/// Broyden iteration from the center with `dtheta` as the initial
/// derivative; the derivative is refreshed by differences when a step fails
/// to reduce the residual.
fn solve(m: &FinslerMetric, chart: &DistanceChart, target: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let outside = |why: String| FinslerError::OutsideCertifiedNeighbourhood(why);
    let mut x = chart.center.clone();
    let mut b = chart.dtheta.clone();
    let mut r = evaluate_with(m, chart, &x)? - target;
    let mut fresh = true;
    for _ in 0..60 {
        if r.amax() < tol {
            return Ok(x);
        }
        let dx = b
            .clone()
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| outside("singular chart derivative".into()))?;
        let trial = &x + &dx;
        let next = if m.check_point(&trial).is_ok() {
            evaluate_with(m, chart, &trial).ok().map(|t| t - target)
        } else {
            None
        };
        match next {
            Some(rn) if rn.norm() < r.norm() => {
                let dr = &rn - &r;
                let denom = dx.norm_squared();
                b += (dr - &b * &dx) * dx.transpose() / denom;
                x = trial;
                r = rn;
                fresh = false;
            }
            _ if !fresh => {
                b = DMatrix::from_fn(chart.radii.len(), m.dim(), |_, _| 0.0);
                for (i, (base, warm)) in chart.base_points.iter().zip(&chart.shooting).enumerate() {
                    let g = radial_gradient_warm(m, base.coords(), &x, warm).map_err(|e| outside(e.to_string()))?;
                    b.set_row(i, &g.transpose());
                }
                fresh = true;
            }
            _ => return Err(outside(format!("no descent from residual {:e}", r.amax()))),
        }
    }
    Err(outside(format!("no convergence, residual {:e}", r.amax())))
}

impl DistanceChart {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn metric(&self) -> Result<FinslerMetric> {
        FinslerMetric::new(self.metric.clone())
    }

    /// `theta(a) = (rho(p_1, a), .., rho(p_n, a))`.
    pub fn evaluate(&self, a: &DVector<f64>) -> Result<DVector<f64>> {
        evaluate_with(&self.metric()?, self, a)
    }

    /// Point with the given distance coordinates; the target must lie in the
    /// certified image box.
    pub fn invert(&self, target: &DVector<f64>, tol: f64) -> Result<ChartPoint> {
        if target.len() != self.dim() {
            return Err(FinslerError::DimensionMismatch {
                expected: self.dim(),
                got: target.len(),
            });
        }
        let theta_p = DVector::from_vec(self.radii.clone());
        let off = (target - theta_p).amax();
        if off > self.image_half_width {
            return Err(FinslerError::OutsideCertifiedNeighbourhood(format!(
                "target is {off:e} from theta(p), certified box half-width {:e}",
                self.image_half_width
            )));
        }
        Ok(ChartPoint::new(solve(&self.metric()?, self, target, tol)?))
    }

    /// Largest `|J[(i, j)]|` above the diagonal.
    pub fn upper_mass(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.jacobian[(i, j)].abs())
            .fold(0.0, f64::max)
    }

    /// `F(w_i) / lambda_i`, the value `J[(i, i)]` should take: the speed at
    /// which `r_{p_i}` grows along the geodesic through `p_i` and `p`.
    pub fn expected_diagonal(&self) -> Result<DVector<f64>> {
        let m = self.metric()?;
        let vals = self
            .emanating
            .iter()
            .map(|e| Ok(m.evaluate_f(e.q.coords(), &e.w)? / e.lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(vals))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| FinslerError::Table(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| FinslerError::Table(e.to_string()))
    }
}

pub fn evaluate_chart(chart: &DistanceChart, a: &DVector<f64>) -> Result<DVector<f64>> {
    chart.evaluate(a)
}

pub fn invert_chart(chart: &DistanceChart, target: &DVector<f64>, tol: f64) -> Result<ChartPoint> {
    chart.invert(target, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn canonical() -> ChartOptions {
        ChartOptions {
            canonical_frame: true,
            ..ChartOptions::seeded(0)
        }
    }

    #[test]
    fn tangent_basis_examples() {
        let e = FinslerMetric::euclidean(2);
        let b = sphere_tangent_basis(&e, &v(&[0.0, 0.0]), &[v(&[-1.0, 0.0])]).unwrap();
        assert_eq!(b.len(), 1);
        assert_relative_eq!(b[0][0], 0.0, epsilon = 1e-7);
        assert_relative_eq!(b[0][1].abs(), 1.0, epsilon = 1e-7);
        let none = sphere_tangent_basis(&e, &v(&[0.0, 0.0]), &[v(&[-1.0, 0.0]), v(&[0.0, -1.0])]).unwrap();
        assert!(none.is_empty());

        let h = FinslerMetric::hyperbolic();
        let g = radial_gradient(&h, &v(&[0.0, (-0.3f64).exp()]), &v(&[0.0, 1.0])).unwrap();
        assert_relative_eq!(g, v(&[0.0, 1.0]), epsilon = 1e-7);
        let b = sphere_tangent_basis(&h, &v(&[0.0, 1.0]), &[v(&[0.0, (-0.3f64).exp()])]).unwrap();
        assert_relative_eq!(b[0][1], 0.0, epsilon = 1e-7);
    }

    #[test]
    fn vanishing_gradient_is_degenerate() {
        let e = FinslerMetric::euclidean(2);
        let err = kernel(&[v(&[0.0, 0.0])], 2, &canonical_basis(2)).unwrap_err();
        assert!(matches!(err, FinslerError::Degenerate(_)));
        assert!(sphere_tangent_basis(&e, &v(&[0.0, 0.0]), &[v(&[0.0, 0.0])]).is_err());
    }

    #[test]
    fn euclidean_chart_is_identity() {
        let e = FinslerMetric::euclidean(2);
        let c = build_distance_chart_with(&e, &v(&[0.0, 0.0]), 4.0, &canonical()).unwrap();
        assert_relative_eq!(c.base_points[0].coords().clone(), v(&[-1.0, 0.0]), epsilon = 1e-10);
        assert_relative_eq!(c.base_points[1].coords().clone(), v(&[0.0, -1.0]), epsilon = 1e-10);
        assert_relative_eq!(c.jacobian, DMatrix::identity(2, 2), epsilon = 1e-7);
        assert_relative_eq!(c.evaluate(&v(&[0.0, 0.0])).unwrap(), v(&[1.0, 1.0]), epsilon = 1e-10);
        assert_relative_eq!(c.evaluate(&v(&[0.1, 0.0])).unwrap(), v(&[1.1, 1.01f64.sqrt()]), epsilon = 1e-10);
        let back = c.invert(&v(&[1.0, 1.0]), 1e-12).unwrap();
        assert_relative_eq!(back.coords().clone(), v(&[0.0, 0.0]), epsilon = 1e-10);
        assert!(matches!(c.invert(&v(&[100.0, 100.0]), 1e-10), Err(FinslerError::OutsideCertifiedNeighbourhood(_))));
    }

    #[test]
    fn randers_chart_triangular() {
        let r = FinslerMetric::randers_flat(&[0.5, 0.0]);
        let c = build_distance_chart(&r, &v(&[0.0, 0.0]), 1.0, 7).unwrap();
        assert!(c.upper_mass() < 1e-6 * c.jacobian.norm());
        let diag = c.expected_diagonal().unwrap();
        for i in 0..2 {
            assert!(c.jacobian[(i, i)] > 0.0);
            assert_relative_eq!(c.jacobian[(i, i)], diag[i], max_relative = 1e-4);
        }
    }

    #[test]
    fn hyperbolic_round_trip_and_json() {
        let h = FinslerMetric::hyperbolic();
        let p = v(&[0.0, 1.0]);
        let c = build_distance_chart(&h, &p, 0.5, 3).unwrap();
        assert!(c.upper_mass() < 1e-6 * c.jacobian.norm());
        assert_relative_eq!(c.evaluate(&p).unwrap(), DVector::from_vec(c.radii.clone()), epsilon = 1e-10);
        let a = &p + v(&[0.3, -0.2]) * (0.5 * c.certified_radius);
        let back = c.invert(&c.evaluate(&a).unwrap(), 1e-10).unwrap();
        assert!((back.coords() - &a).amax() < 1e-7);
        let again = DistanceChart::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn radial_hessian_settles_under_refinement() {
        let h = FinslerMetric::hyperbolic();
        let base = v(&[0.0, 0.7]);
        let a = v(&[0.1, 1.0]);
        let coarse = radial_hessian(&h, &base, &a, 2e-3).unwrap();
        let fine = radial_hessian(&h, &base, &a, 1e-3).unwrap();
        assert!((coarse - &fine).amax() < 1e-3 * (1.0 + fine.amax()));
    }
}
