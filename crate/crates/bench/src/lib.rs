//! Fixtures shared by the benchmarks.

use fracsrc_core::spectral::{eigendecompose, EigenDecomposition, OperatorSpec};
use fracsrc_core::{GridFunction, TemporalGrid};
use std::f64::consts::PI;

/// Unit interval, `a = 1`, `c = 0`, `n` interior nodes.
pub fn laplacian(n: usize) -> (OperatorSpec, EigenDecomposition) {
    let spec = OperatorSpec::uniform(1.0, n, 1.0, 0.0).expect("valid operator");
    let e = eigendecompose(&spec, None).expect("symmetric operator");
    (spec, e)
}

pub fn spatial_factor(spec: &OperatorSpec) -> Vec<f64> {
    spec.nodes().iter().map(|&x| (PI * x).sin() * (1.0 + 0.5 * x)).collect()
}

pub fn temporal_factor(grid: TemporalGrid) -> GridFunction {
    GridFunction::from_fn(grid, |t| 1.0 + (2.0 * PI * t).sin())
}
