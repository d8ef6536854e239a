//! Central differences with Richardson extrapolation.
//!
//! For `levels = L` the stencil is evaluated at steps `H, H/2, .., H/2^(L-1)`
//! where the smallest step equals the scaled base step, and the even error
//! expansion of the central stencil is eliminated column by column.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffConfig {
    /// Relative central-difference step, in `(0, 1e-2]`.
    pub fd_step: f64,
    pub richardson_levels: usize,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            fd_step: f64::EPSILON.cbrt(),
            richardson_levels: 2,
        }
    }
}

impl DiffConfig {
    pub fn new(fd_step: f64, richardson_levels: usize) -> Result<Self> {
        let cfg = DiffConfig {
            fd_step,
            richardson_levels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0 && self.fd_step <= 1e-2) {
            return Err(FinslerError::InvalidParameter(format!(
                "fd_step {} outside (0, 1e-2]",
                self.fd_step
            )));
        }
        if self.richardson_levels == 0 {
            return Err(FinslerError::InvalidParameter(
                "richardson_levels must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Base step for first derivatives at a point of the given magnitude.
    pub fn step_at(&self, magnitude: f64) -> f64 {
        self.fd_step * (1.0 + magnitude)
    }

    /// Base step for second derivatives (`fd_step^(3/4)`, scaled).
    pub fn second_step_at(&self, magnitude: f64) -> f64 {
        self.fd_step.powf(0.75) * (1.0 + magnitude)
    }

    /// Largest displacement any stencil of this config makes, relative to
    /// the base step.
    pub fn reach_factor(&self) -> f64 {
        2f64.powi(self.richardson_levels as i32 - 1)
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_finite(v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(FinslerError::Numeric(format!(
            "non-finite field value {:?}",
            v.as_slice()
        )))
    }
}

/// Richardson table over `stencil(h_k)` with `h_k = smallest * 2^(L-1-k)`.
fn richardson<G>(smallest: f64, levels: usize, mut stencil: G) -> Result<DVector<f64>>
where
    G: FnMut(f64) -> Result<DVector<f64>>,
{
    let top = smallest * 2f64.powi(levels as i32 - 1);
    let mut prev: Vec<DVector<f64>> = Vec::with_capacity(levels);
    for k in 0..levels {
        let h = top / 2f64.powi(k as i32);
        let est = stencil(h)?;
        check_finite(&est)?;
        let mut row = Vec::with_capacity(k + 1);
        row.push(est);
        for j in 1..=k {
            let factor = 4f64.powi(j as i32) - 1.0;
            let next = &row[j - 1] + (&row[j - 1] - &prev[j - 1]) / factor;
            row.push(next);
        }
        prev = row;
    }
    Ok(prev.pop().expect("levels >= 1"))
}

/// Derivative of a vector field `f` at `p` along `v`.
pub fn directional_derivative_vec<F>(
    f: F,
    p: &DVector<f64>,
    v: &DVector<f64>,
    cfg: &DiffConfig,
) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    cfg.validate()?;
    if p.len() != v.len() {
        return Err(FinslerError::DimensionMismatch {
            expected: p.len(),
            got: v.len(),
        });
    }
    let vn = v.norm();
    if vn == 0.0 {
        return Err(FinslerError::Degenerate("zero direction".into()));
    }
    central_difference_vec(f, p, v, cfg.step_at(inf_norm(p)) / vn, cfg.richardson_levels)
}

/// Central difference of `f` along `v` with an explicit smallest parameter
/// step `h` (the stencil visits `p +- h_k v`).
pub fn central_difference_vec<F>(
    f: F,
    p: &DVector<f64>,
    v: &DVector<f64>,
    h: f64,
    levels: usize,
) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(h > 0.0) || levels == 0 {
        return Err(FinslerError::InvalidParameter(format!("bad stencil h={h}, levels={levels}")));
    }
    richardson(h, levels, |h| {
        let fp = f(&(p + v * h))?;
        let fm = f(&(p - v * h))?;
        Ok((fp - fm) / (2.0 * h))
    })
}

/// Derivative of a scalar field `f` at `p` along `v`.
pub fn directional_derivative<F>(f: F, p: &DVector<f64>, v: &DVector<f64>, cfg: &DiffConfig) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let d = directional_derivative_vec(|x| f(x).map(|s| DVector::from_element(1, s)), p, v, cfg)?;
    Ok(d[0])
}

/// `dim_out x dim_in` matrix of partial derivatives of `map` at `p`.
pub fn jacobian<F>(map: F, p: &DVector<f64>, cfg: &DiffConfig) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = p.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
        cols.push(directional_derivative_vec(&map, p, &e, cfg)?);
    }
    let m = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(m, n, |i, j| cols[j][i]))
}

/// Gradient (as a covector in chart coordinates) of a scalar field.
pub fn gradient<F>(f: F, p: &DVector<f64>, cfg: &DiffConfig) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let jac = jacobian(|x| f(x).map(|s| DVector::from_element(1, s)), p, cfg)?;
    Ok(jac.row(0).transpose())
}

/// Mixed second derivative `d/ds d/dt f(p + s*u + t*w)` at zero, with
/// explicit smallest parameter steps along `u` and `w`.
pub fn second_derivative<F>(
    f: F,
    p: &DVector<f64>,
    u: &DVector<f64>,
    w: &DVector<f64>,
    u_step: f64,
    w_step: f64,
    levels: usize,
) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    if !(u_step > 0.0 && w_step > 0.0) || levels == 0 {
        return Err(FinslerError::InvalidParameter("bad second-derivative stencil".into()));
    }
    let d = richardson(1.0, levels, |k| {
        let (a, b) = (u_step * k, w_step * k);
        let fpp = f(&(p + u * a + w * b))?;
        let fpm = f(&(p + u * a - w * b))?;
        let fmp = f(&(p - u * a + w * b))?;
        let fmm = f(&(p - u * a - w * b))?;
        Ok(DVector::from_element(1, (fpp - fpm - fmp + fmm) / (4.0 * a * b)))
    })?;
    Ok(d[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn polynomial_derivative() {
        let d = directional_derivative(|x| Ok(x[0] * x[0]), &v(&[3.0]), &v(&[1.0]), &DiffConfig::default()).unwrap();
        assert_relative_eq!(d, 6.0, epsilon = 1e-9);
    }

    #[test]
    fn gradient_of_norm() {
        let d = directional_derivative(|x| Ok(x.norm()), &v(&[3.0, 4.0]), &v(&[1.0, 0.0]), &DiffConfig::default())
            .unwrap();
        assert_relative_eq!(d, 0.6, epsilon = 1e-9);
    }

    #[test]
    fn constant_field() {
        let d = directional_derivative(|_| Ok(7.0), &v(&[1.0, -2.0]), &v(&[0.3, 0.1]), &DiffConfig::default())
            .unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn jacobian_examples() {
        let cfg = DiffConfig::default();
        let id = jacobian(|x| Ok(x.clone()), &v(&[0.4, -1.2, 3.0]), &cfg).unwrap();
        assert_relative_eq!(id, DMatrix::identity(3, 3), epsilon = 1e-10);

        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let lin = jacobian(|x| Ok(&a * x), &v(&[2.0, 1.0]), &cfg).unwrap();
        assert_relative_eq!(lin, a, epsilon = 1e-10);

        let sq = jacobian(|x| Ok(v(&[x[0] * x[0], x[1]])), &v(&[1.0, 1.0]), &cfg).unwrap();
        assert_relative_eq!(sq, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]), epsilon = 1e-9);
    }

    #[test]
    fn richardson_improves_on_plain_central() {
        let f = |x: &DVector<f64>| Ok(x[0].exp().sin());
        let p = v(&[0.7]);
        let exact = 0.7f64.exp() * 0.7f64.exp().cos();
        let coarse = DiffConfig::new(1e-2, 1).unwrap();
        let fine = DiffConfig::new(1e-2, 3).unwrap();
        let e1 = (directional_derivative(f, &p, &v(&[1.0]), &coarse).unwrap() - exact).abs();
        let e3 = (directional_derivative(f, &p, &v(&[1.0]), &fine).unwrap() - exact).abs();
        assert!(e3 < e1 * 1e-3, "{e1} vs {e3}");
    }

    #[test]
    fn mixed_second_derivative() {
        // f = x^2 y^3 -> f_xy = 6 x y^2
        let f = |x: &DVector<f64>| Ok(x[0] * x[0] * x[1].powi(3));
        let p = v(&[0.8, 1.3]);
        let cfg = DiffConfig::default();
        let (h0, h1) = (cfg.second_step_at(0.8), cfg.second_step_at(1.3));
        let d = second_derivative(f, &p, &v(&[1.0, 0.0]), &v(&[0.0, 1.0]), h0, h1, 2).unwrap();
        assert_relative_eq!(d, 6.0 * 0.8 * 1.3 * 1.3, max_relative = 1e-8);
        let dxx = second_derivative(f, &p, &v(&[1.0, 0.0]), &v(&[1.0, 0.0]), h0, h0, 2).unwrap();
        assert_relative_eq!(dxx, 2.0 * 1.3f64.powi(3), max_relative = 1e-8);
    }

    #[test]
    fn errors_propagate() {
        let cfg = DiffConfig::default();
        let nan = directional_derivative(|_| Ok(f64::NAN), &v(&[1.0]), &v(&[1.0]), &cfg);
        assert!(matches!(nan, Err(FinslerError::Numeric(_))));
        let dom = directional_derivative(
            |x| if x[0] > 0.0 { Ok(x[0].ln()) } else { Err(FinslerError::domain(x.as_slice(), "x <= 0")) },
            &v(&[0.0]),
            &v(&[1.0]),
            &cfg,
        );
        assert!(matches!(dom, Err(FinslerError::Domain { .. })));
        assert!(DiffConfig::new(0.5, 2).is_err());
        assert!(DiffConfig::new(1e-3, 0).is_err());
    }
}
