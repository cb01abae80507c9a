use nalgebra::DMatrix;

use crate::error::Result;
use crate::grid::DomainMask;
use crate::linalg;

/// A symmetric positive definite operator on vectors over a mask, with a
/// dense matrix available for solvers that need entry access.
pub trait SpdOperator: Send + Sync {
    fn mask(&self) -> &DomainMask;

    /// Fractional order `s`.
    fn order(&self) -> f64;

    /// Dense matrix of the operator acting on nodal values.
    fn matrix(&self) -> &DMatrix<f64>;

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>>;

    /// Solution `ω` of `L ω = f`.
    fn solve(&self, f: &[f64]) -> Result<Vec<f64>>;

    /// Short description used in reports.
    fn label(&self) -> String;

    fn len(&self) -> usize {
        self.mask().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn weight(&self) -> f64 {
        self.mask().weight()
    }

    /// `⟨L v, v⟩` in the `h^dim`-weighted inner product.
    fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        let lv = self.apply(v)?;
        Ok(linalg::wdot(self.weight(), &lv, v))
    }

    /// `⟨L u, v⟩` in the weighted inner product.
    fn bilinear(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let lu = self.apply(u)?;
        Ok(linalg::wdot(self.weight(), &lu, v))
    }
}
