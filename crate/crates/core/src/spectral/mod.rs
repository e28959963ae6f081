//! Finite-difference discretization of `-(a u')' + c u` on an interval with
//! Dirichlet conditions, and its spectral calculus.

mod eigen;
mod expr;
mod operator;

pub use eigen::{EigenDecomposition, Group, GROUPING_TOL};
pub use expr::{Expr, Func};
pub use operator::{assemble, assemble_with_drift, Coefficient, OperatorConfig, OperatorSpec, Tridiagonal};

use crate::error::{FracError, Result};
use serde::{Deserialize, Serialize};

/// Values over the interior nodes; boundary values are zero and not stored.
pub type Field = Vec<f64>;

/// Assembles and decomposes in one step, keeping `n_modes` modes (all if `None`).
pub fn eigendecompose(spec: &OperatorSpec, n_modes: Option<usize>) -> Result<EigenDecomposition> {
    let a = assemble(spec)?;
    EigenDecomposition::new(&a, spec.step(), n_modes.unwrap_or(spec.n_interior))
}

/// Where the solution is observed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationSpec {
    Subdomain { mask: Vec<bool> },
    Point { index: usize },
}

impl ObservationSpec {
    /// Subdomain of interior nodes with `lo <= x <= hi`.
    pub fn interval(spec: &OperatorSpec, lo: f64, hi: f64) -> Result<Self> {
        let eps = 1e-12 * spec.length;
        let mask = spec.nodes().iter().map(|&x| x >= lo - eps && x <= hi + eps).collect();
        let obs = ObservationSpec::Subdomain { mask };
        obs.validate(spec.n_interior)?;
        Ok(obs)
    }

    /// Interior node closest to `x`.
    pub fn point_at(spec: &OperatorSpec, x: f64) -> Result<Self> {
        let k = (x / spec.step()).round() as isize - 1;
        if k < 0 || k as usize >= spec.n_interior {
            return Err(FracError::Invalid(format!("observation point {x} is not interior")));
        }
        Ok(ObservationSpec::Point { index: k as usize })
    }

    pub fn validate(&self, n_interior: usize) -> Result<()> {
        match self {
            ObservationSpec::Subdomain { mask } => {
                if mask.len() != n_interior {
                    return Err(FracError::DimensionMismatch {
                        expected: n_interior,
                        got: mask.len(),
                    });
                }
                let idx = self.indices();
                if idx.is_empty() {
                    return Err(FracError::Invalid("observation subdomain is empty".into()));
                }
                if idx.last().unwrap() - idx[0] + 1 != idx.len() {
                    return Err(FracError::Invalid("observation subdomain must be contiguous".into()));
                }
                Ok(())
            }
            ObservationSpec::Point { index } => {
                if *index >= n_interior {
                    return Err(FracError::Invalid(format!(
                        "observation index {index} is not an interior node (n = {n_interior})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Observed interior node indices, ascending.
    pub fn indices(&self) -> Vec<usize> {
        match self {
            ObservationSpec::Subdomain { mask } => (0..mask.len()).filter(|&i| mask[i]).collect(),
            ObservationSpec::Point { index } => vec![*index],
        }
    }
}
