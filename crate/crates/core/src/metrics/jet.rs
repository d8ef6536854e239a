//! Derivatives of `F` and of the energy `E = F^2 / 2` at a point of the slit
//! tangent bundle.
//!
//! Mixed blocks use the layout `f_xy[(k, l)] = d^2 F / dx^k dy^l`.

use nalgebra::{DMatrix, DVector};

/// `F` together with its first and second partials.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub f: f64,
    pub f_x: DVector<f64>,
    pub f_y: DVector<f64>,
    pub f_yy: DMatrix<f64>,
    pub f_xy: DMatrix<f64>,
}

/// Energy `E = F^2 / 2` with the partials the spray needs; `e_yy` is the
/// fundamental tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyJet {
    pub e: f64,
    pub e_x: DVector<f64>,
    pub e_y: DVector<f64>,
    pub e_yy: DMatrix<f64>,
    pub e_xy: DMatrix<f64>,
}

impl Jet {
    pub fn dim(&self) -> usize {
        self.f_x.len()
    }

    /// Chain rule for `E = F^2 / 2`.
    pub fn energy(&self) -> EnergyJet {
        let f = self.f;
        EnergyJet {
            e: 0.5 * f * f,
            e_x: &self.f_x * f,
            e_y: &self.f_y * f,
            e_yy: &self.f_y * self.f_y.transpose() + &self.f_yy * f,
            e_xy: &self.f_x * self.f_y.transpose() + &self.f_xy * f,
        }
    }
}

impl EnergyJet {
    pub fn dim(&self) -> usize {
        self.e_x.len()
    }

    /// Right-hand side `(E_xy^T y - E_x) / 2` of the spray system `g G = rhs`.
    pub fn spray_rhs(&self, y: &DVector<f64>) -> DVector<f64> {
        (self.e_xy.tr_mul(y) - &self.e_x) * 0.5
    }
}
