use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::MapProbe;
use crate::distance::{default_tol, invert_exp};
use crate::error::{FinslerError, Result};
use crate::geodesics::{exponential, integrate_geodesic, GeodesicPath};
use crate::metrics::FinslerMetric;
use crate::numcore::sampling::{seeded_rng, unit_direction};
use crate::numcore::serde_vecs;
use crate::report::Witness;
use crate::spray::spray_coefficients;

/// Isometry verdict threshold on `isometry_defect` with an exact derivative.
pub const ISOMETRY_TOL_EXACT: f64 = 1e-6;
/// Same with a finite-difference derivative.
pub const ISOMETRY_TOL_FD: f64 = 1e-3;
const SPRAY_TOL_EXACT: f64 = 1e-5;
const SPRAY_TOL_FD: f64 = 1e-3;
const GEODESIC_TOL: f64 = 1e-6;
const GEODESIC_PATH_TOL: f64 = 1e-11;

/// Worst value of a sampled defect and where it occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDefect {
    pub value: f64,
    pub witness: Option<Witness>,
    /// Evaluated `(point, vector)` pairs.
    pub samples: usize,
    /// Base points whose image left the target patch.
    pub skipped: usize,
}

impl SampledDefect {
    fn new() -> Self {
        SampledDefect {
            value: 0.0,
            witness: None,
            samples: 0,
            skipped: 0,
        }
    }

    fn observe(&mut self, r: f64, p: &DVector<f64>, v: &DVector<f64>) {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        self.samples += 1;
        if r > self.value || self.witness.is_none() {
            self.value = r;
            self.witness = Some(Witness {
                description: "p, v".into(),
                values: p.iter().chain(v.iter()).cloned().collect(),
            });
        }
    }
}

/// `+-e_i`, `(+-e_i +- e_j)/sqrt 2` and `extra` seeded unit vectors.
pub(super) fn direction_fan(n: usize, extra: usize, seed: u64) -> Vec<DVector<f64>> {
    let e = |i: usize| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
    let mut out = Vec::new();
    for i in 0..n {
        out.push(e(i));
        out.push(-e(i));
        for j in i + 1..n {
            for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                out.push((e(i) * a + e(j) * b) / 2f64.sqrt());
            }
        }
    }
    let mut rng = seeded_rng(seed);
    out.extend((0..extra).map(|_| unit_direction(&mut rng, n)));
    out
}

fn base_points(probe: &MapProbe, n_points: usize, seed: u64) -> Vec<DVector<f64>> {
    let region = probe.source.sampling_region();
    let mut rng = seeded_rng(seed);
    let mut pts = vec![region.center()];
    pts.extend((1..n_points.max(1)).map(|_| region.sample(&mut rng)));
    pts
}

/// Image point, or `None` when it leaves the target patch.
fn image(probe: &MapProbe, p: &DVector<f64>) -> Result<Option<DVector<f64>>> {
    match probe.apply(p) {
        Ok(q) => Ok(Some(q)),
        Err(e) if e.is_domain() => Ok(None),
        Err(e) => Err(e),
    }
}

/// `max |F_bar(phi(p), phi_* v) - F(p, v)|` over seeded base points and
/// Euclidean-unit vectors `v`.
pub fn isometry_defect(probe: &MapProbe, n_points: usize, seed: u64) -> Result<SampledDefect> {
    let n = probe.dim();
    let dirs = direction_fan(n, 4, seed ^ 0x15);
    let mut out = SampledDefect::new();
    for p in base_points(probe, n_points, seed) {
        let Some(q) = image(probe, &p)? else {
            out.skipped += 1;
            continue;
        };
        let d = probe.derivative(&p)?;
        for v in &dirs {
            let r = probe.target.evaluate_f(&q, &(&d * v))? - probe.source.evaluate_f(&p, v)?;
            out.observe(r.abs(), &p, v);
        }
    }
    Ok(out)
}

/// `D^2 phi(p)(y, y)` from second differences with one Richardson step.
fn second_directional(probe: &MapProbe, p: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let h = 1e-2 * (1.0 + p.amax());
    let f0 = probe.apply(p)?;
    let s = |h: f64| -> Result<DVector<f64>> {
        Ok((probe.apply(&(p + y * h))? - &f0 * 2.0 + probe.apply(&(p - y * h))?) / (h * h))
    };
    Ok((s(0.5 * h)? * 4.0 - s(h)?) / 3.0)
}

/// Coordinate form of `phi_** S = S_bar phi_*`: for `x_bar = phi(x)` along a
/// geodesic, `x_bar'' = D^2 phi(y, y) - 2 D phi G(x, y)` must equal
/// `-2 G_bar(phi(x), D phi y)`. Returns the worst mismatch.
pub fn spray_pushforward_defect(probe: &MapProbe, n_points: usize, seed: u64) -> Result<SampledDefect> {
    let n = probe.dim();
    let dirs = direction_fan(n, 4, seed ^ 0x25);
    let mut out = SampledDefect::new();
    for p in base_points(probe, n_points, seed) {
        let Some(q) = image(probe, &p)? else {
            out.skipped += 1;
            continue;
        };
        let d = probe.derivative(&p)?;
        for y in &dirs {
            let pushed = second_directional(probe, &p, y)? - &d * spray_coefficients(&probe.source, &p, y)? * 2.0;
            let target = spray_coefficients(&probe.target, &q, &(&d * y))? * -2.0;
            out.observe((pushed - target).norm(), &p, y);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicImageDefect {
    pub value: f64,
    /// Times where both curves were available.
    pub compared: usize,
    /// The target geodesic left its patch before the end of the span.
    pub truncated: bool,
}

/// Largest gap between `phi o gamma` and the target geodesic with initial
/// data `(phi(gamma(0)), phi_* gamma'(0))`, over the mesh of `gamma`.
/// Necessary for an isometry but not sufficient: homotheties of flat
/// metrics pass.
pub fn geodesic_image_defect(probe: &MapProbe, gamma: &GeodesicPath, tol: f64) -> Result<GeodesicImageDefect> {
    let x0 = probe.apply(&gamma.p)?;
    let v0 = probe.push(&gamma.p, &gamma.v)?;
    let path = integrate_geodesic(&probe.target, &x0, &v0, (gamma.t_minus, gamma.t_plus), tol)?;
    let mut out = GeodesicImageDefect {
        value: 0.0,
        compared: 0,
        truncated: path.is_truncated(),
    };
    for s in &gamma.samples {
        match path.position_at(s.t) {
            Ok(x) => {
                let gap = (probe.apply(&s.x)? - x).norm();
                out.value = out.value.max(if gap.is_nan() { f64::INFINITY } else { gap });
                out.compared += 1;
            }
            Err(FinslerError::PatchExit { .. }) => out.truncated = true,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// `exp_{p'}(L exp_p^{-1}(r))` for each target `r`: the only candidate for
/// an isometry with `phi(p) = p'` and `phi_* = L` at `p`. Refuses unless
/// `L` preserves `F` at `p` to 1e-9 relative.
pub fn propagate_from_derivative(
    m: &FinslerMetric,
    p: &DVector<f64>,
    p_image: &DVector<f64>,
    l: &DMatrix<f64>,
    targets: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    let n = m.dim();
    if l.nrows() != n || l.ncols() != n {
        return Err(FinslerError::DimensionMismatch {
            expected: n,
            got: l.nrows(),
        });
    }
    m.check_point(p)?;
    m.check_point(p_image)?;
    let mut defect = 0.0f64;
    for u in direction_fan(n, 8, 0x5eed) {
        let f = m.evaluate_f(p, &u)?;
        defect = defect.max((m.evaluate_f(p_image, &(l * &u))? - f).abs() / f);
    }
    if !(defect <= 1e-9) {
        return Err(FinslerError::NotAnIsometrySeed { defect });
    }
    targets
        .iter()
        .map(|r| {
            let v = invert_exp(m, p, r, default_tol(r))?.v;
            Ok(exponential(m, p_image, &(l * v))?.into_inner())
        })
        .collect()
}

/// The three diagnostics together; only `isometry_defect` decides against a
/// map on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryVerdict {
    pub isometry: SampledDefect,
    pub spray: SampledDefect,
    pub geodesic: GeodesicImageDefect,
    pub isometry_threshold: f64,
    pub spray_threshold: f64,
    pub geodesic_threshold: f64,
    pub exact_derivative: bool,
    pub is_isometry: bool,
    /// Geodesic used for the image check (initial point and velocity).
    #[serde(with = "serde_vecs")]
    pub geodesic_seed: Vec<DVector<f64>>,
}

pub fn isometry_verdict(probe: &MapProbe, n_points: usize, seed: u64) -> Result<IsometryVerdict> {
    let exact = probe.has_exact_derivative();
    let isometry = isometry_defect(probe, n_points, seed)?;
    let spray = spray_pushforward_defect(probe, n_points, seed)?;
    let p = probe.source.sampling_region().center();
    let mut rng = seeded_rng(seed ^ 0x9e0);
    let u = unit_direction(&mut rng, probe.dim());
    let v = &u * (0.5 / probe.source.evaluate_f(&p, &u)?);
    let gamma = integrate_geodesic(&probe.source, &p, &v, (-0.5, 0.5), GEODESIC_PATH_TOL)?;
    let geodesic = geodesic_image_defect(probe, &gamma, GEODESIC_PATH_TOL)?;
    let (it, st) = if exact {
        (ISOMETRY_TOL_EXACT, SPRAY_TOL_EXACT)
    } else {
        (ISOMETRY_TOL_FD, SPRAY_TOL_FD)
    };
    let is_isometry = isometry.value < it && spray.value < st && geodesic.value < GEODESIC_TOL;
    Ok(IsometryVerdict {
        isometry,
        spray,
        geodesic,
        isometry_threshold: it,
        spray_threshold: st,
        geodesic_threshold: GEODESIC_TOL,
        exact_derivative: exact,
        is_isometry,
        geodesic_seed: vec![p, v],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::PATH_TOL;
    use crate::maps::MapSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn isometry_defect_examples() {
        let e = FinslerMetric::euclidean(2);
        let rot = MapSpec::Rotation { angle: FRAC_PI_2 }.probe(&e).unwrap();
        assert!(isometry_defect(&rot, 5, 1).unwrap().value < 1e-9);
        let scale = MapSpec::Scaling { factor: 2.0 }.probe(&e).unwrap();
        assert_relative_eq!(isometry_defect(&scale, 5, 1).unwrap().value, 1.0, epsilon = 1e-12);

        let r = FinslerMetric::randers_flat(&[0.5, 0.0]);
        let rr = MapSpec::Rotation { angle: FRAC_PI_2 }.probe(&r).unwrap();
        let d = isometry_defect(&rr, 5, 1).unwrap();
        assert_relative_eq!(d.value, 0.5 * 2f64.sqrt(), epsilon = 1e-12);
        let w = d.witness.unwrap();
        assert_relative_eq!(w.values[2].abs(), 0.5 * 2f64.sqrt(), epsilon = 1e-12);
        let rt = MapSpec::Translation { offset: vec![0.3, -0.2] }.probe(&r).unwrap();
        assert!(isometry_defect(&rt, 5, 1).unwrap().value < 1e-9);
    }

    #[test]
    fn spray_pushforward_examples() {
        let e = FinslerMetric::euclidean(2);
        let rot = MapSpec::Rotation { angle: FRAC_PI_2 }.probe(&e).unwrap();
        assert!(spray_pushforward_defect(&rot, 5, 2).unwrap().value < 1e-6);
        let h = FinslerMetric::hyperbolic();
        let t = MapSpec::Translation { offset: vec![1.0, 0.0] }.probe(&h).unwrap();
        assert!(spray_pushforward_defect(&t, 5, 2).unwrap().value < 1e-5);
        assert!(isometry_defect(&t, 5, 2).unwrap().value < 1e-9);
        // affine maps push straight lines to straight lines
        let shear = MapSpec::Shear { amount: 1.0 }.probe(&e).unwrap();
        assert!(spray_pushforward_defect(&shear, 5, 2).unwrap().value < 1e-6);
        let bend = MapSpec::Bend { amount: 0.3 }.probe(&e).unwrap();
        assert!(spray_pushforward_defect(&bend, 5, 2).unwrap().value > 0.01);
    }

    #[test]
    fn geodesic_image_examples() {
        let e = FinslerMetric::euclidean(2);
        let g = integrate_geodesic(&e, &v(&[0.1, 0.2]), &v(&[1.0, 0.5]), (-1.0, 1.0), PATH_TOL).unwrap();
        let rot = MapSpec::Rotation { angle: 0.7 }.probe(&e).unwrap();
        assert!(geodesic_image_defect(&rot, &g, PATH_TOL).unwrap().value < 1e-8);
        let scale = MapSpec::Scaling { factor: 2.0 }.probe(&e).unwrap();
        assert!(geodesic_image_defect(&scale, &g, PATH_TOL).unwrap().value < 1e-8);

        let h = FinslerMetric::hyperbolic();
        let ray = integrate_geodesic(&h, &v(&[0.0, 1.0]), &v(&[0.0, 1.0]), (-0.5, 0.5), 1e-11).unwrap();
        let t = MapSpec::Translation { offset: vec![1.0, 0.0] }.probe(&h).unwrap();
        let d = geodesic_image_defect(&t, &ray, 1e-11).unwrap();
        assert!(d.value < 1e-7 && !d.truncated && d.compared > 2);
    }

    #[test]
    fn propagation_examples() {
        let e = FinslerMetric::euclidean(2);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let o = v(&[0.0, 0.0]);
        let out = propagate_from_derivative(&e, &o, &o, &rot, &[v(&[1.0, 0.0])]).unwrap();
        assert_relative_eq!(out[0], v(&[0.0, 1.0]), epsilon = 1e-9);
        let twice = DMatrix::identity(2, 2) * 2.0;
        assert!(matches!(
            propagate_from_derivative(&e, &o, &o, &twice, &[]),
            Err(FinslerError::NotAnIsometrySeed { .. })
        ));

        let h = FinslerMetric::hyperbolic();
        let targets = [v(&[0.2, 1.1]), v(&[-0.3, 0.8]), v(&[0.1, 1.4])];
        let out =
            propagate_from_derivative(&h, &v(&[0.0, 1.0]), &v(&[1.0, 1.0]), &DMatrix::identity(2, 2), &targets).unwrap();
        for (t, o) in targets.iter().zip(&out) {
            assert_relative_eq!(o.clone(), t + v(&[1.0, 0.0]), epsilon = 1e-6);
        }
    }

    #[test]
    fn verdicts() {
        let e = FinslerMetric::euclidean(2);
        let rot = MapSpec::Rotation { angle: 0.4 }.probe(&e).unwrap();
        assert!(isometry_verdict(&rot, 4, 3).unwrap().is_isometry);
        assert!(isometry_verdict(&rot.point_only(), 4, 3).unwrap().is_isometry);
        let shear = MapSpec::Shear { amount: 1.0 }.probe(&e).unwrap();
        let v = isometry_verdict(&shear, 4, 3).unwrap();
        assert!(!v.is_isometry && v.isometry.value > v.isometry_threshold);
    }
}
