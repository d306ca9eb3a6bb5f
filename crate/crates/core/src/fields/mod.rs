//! Structure fields on a compact manifold given by an atlas of charts.

pub mod bracket;
pub mod forms;
pub mod sampling;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fiber::{b_shift, from_symplectic, FiberStructure};
use forms::{fd_exterior_derivative, Form};
pub use sampling::{Sample, SampledManifold};

/// A chart name with the periods of its periodic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartInfo {
    pub name: String,
    pub periods: Vec<Option<f64>>,
}

/// Charts covering a compact manifold embedded in some Euclidean space.
pub trait Atlas: Send + Sync {
    fn dim(&self) -> usize;

    fn charts(&self) -> Vec<ChartInfo>;

    fn in_domain(&self, chart: usize, x: &[f64]) -> bool;

    fn embed(&self, chart: usize, x: &[f64]) -> Vec<f64>;

    /// Coordinates of an embedded point in a chart, chosen nearest to `near`
    /// in periodic coordinates. `None` if the point is outside the chart.
    fn to_chart(&self, emb: &[f64], chart: usize, near: &[f64]) -> Option<Vec<f64>>;

    /// The preferred chart and coordinates of an embedded point.
    fn locate(&self, emb: &[f64]) -> (usize, Vec<f64>);

    fn check(&self, chart: usize, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        if self.in_domain(chart, x) {
            Ok(())
        } else {
            Err(Error::OutOfChart { chart })
        }
    }
}

/// Metric, structure and form fields evaluated in chart coordinates.
pub trait FieldEvaluator: Atlas {
    fn metric(&self, chart: usize, x: &[f64]) -> Result<DMatrix<f64>>;

    fn structure(&self, chart: usize, x: &[f64]) -> Result<FiberStructure>;

    fn twist(&self, chart: usize, x: &[f64]) -> Result<Form> {
        self.check(chart, x)?;
        Ok(Form::zero(self.dim(), 3))
    }

    fn symplectic(&self, chart: usize, x: &[f64]) -> Result<Option<Form>>;

    fn b_field(&self, chart: usize, x: &[f64]) -> Result<Option<Form>> {
        self.check(chart, x)?;
        Ok(None)
    }
}

/// The structure of a symplectic form, B-shifted when a B-field is given.
pub fn symplectic_structure(omega: &Form, b: Option<&Form>) -> Result<FiberStructure> {
    let j = from_symplectic(&omega.interior_matrix())?;
    match b {
        Some(b) => b_shift(&j, &b.interior_matrix()),
        None => Ok(j),
    }
}

/// `dH` at a point; zero for a closed twist.
pub fn twist_derivative(
    f: &dyn FieldEvaluator,
    chart: usize,
    x: &[f64],
    step: f64,
) -> Result<Form> {
    fd_exterior_derivative(|y| f.twist(chart, y), x, step)
}

/// Integrability residual of the structure field at a point of a chart.
pub fn integrability_at(f: &dyn FieldEvaluator, chart: usize, x: &[f64], step: f64) -> Result<f64> {
    f.check(chart, x)?;
    bracket::integrability_residual(|y| f.structure(chart, y), |y| f.twist(chart, y), x, step)
}
