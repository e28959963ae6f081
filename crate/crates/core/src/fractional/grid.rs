use crate::error::{FracError, Result};
use crate::io::fmt_f64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Uniform nodes `t_i = i T / (n_steps - 1)` on `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalGrid {
    pub horizon: f64,
    pub n_steps: usize,
}

impl TemporalGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(FracError::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if n_steps < 2 {
            return Err(FracError::Domain(format!("a grid needs at least 2 nodes, got {n_steps}")));
        }
        Ok(TemporalGrid { horizon, n_steps })
    }

    pub fn step(&self) -> f64 {
        self.horizon / (self.n_steps - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n_steps
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_steps).map(|i| self.node(i)).collect()
    }

    /// Grid with `factor` times as many cells over the same horizon.
    pub fn refined(&self, factor: usize) -> TemporalGrid {
        TemporalGrid {
            horizon: self.horizon,
            n_steps: (self.n_steps - 1) * factor + 1,
        }
    }

    pub(crate) fn ensure_same(&self, other: &TemporalGrid) -> Result<()> {
        if self.n_steps != other.n_steps || self.horizon != other.horizon {
            return Err(FracError::GridMismatch(format!(
                "({}, {} nodes) vs ({}, {} nodes)",
                self.horizon, self.n_steps, other.horizon, other.n_steps
            )));
        }
        Ok(())
    }
}

/// Samples of a function of time on a [`TemporalGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: TemporalGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TemporalGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_steps {
            return Err(FracError::DimensionMismatch {
                expected: grid.n_steps,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FracError::Invalid(format!("non-finite grid value at node {i}")));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: TemporalGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn zeros(grid: TemporalGrid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.n_steps],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Trapezoidal L2(0, T) norm.
    pub fn l2_norm(&self) -> f64 {
        trapezoid_sq(&self.values, self.grid.step()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            out.write_record([fmt_f64(self.grid.node(i)), fmt_f64(*v)])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads `t,value` rows; the nodes must form a uniform grid starting at 0.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| FracError::Invalid("expected columns t,value".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| FracError::Invalid(format!("bad number: {e}")))
            };
            ts.push(parse(0)?);
            vs.push(parse(1)?);
        }
        if ts.len() < 2 || ts[0] != 0.0 {
            return Err(FracError::Invalid("grid CSV must start at t = 0 and have at least 2 rows".into()));
        }
        let grid = TemporalGrid::new(*ts.last().unwrap(), ts.len())?;
        let h = grid.step();
        for (i, t) in ts.iter().enumerate() {
            if (t - grid.node(i)).abs() > 1e-9 * grid.horizon.max(h) {
                return Err(FracError::GridMismatch(format!("node {i} at t = {t} is not uniform")));
            }
        }
        GridFunction::new(grid, vs)
    }
}

pub(crate) fn trapezoid_sq(v: &[f64], h: f64) -> f64 {
    let n = v.len();
    let mut s: f64 = v.iter().map(|x| x * x).sum();
    s -= 0.5 * (v[0] * v[0] + v[n - 1] * v[n - 1]);
    s * h
}
