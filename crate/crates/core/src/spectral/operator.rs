use super::expr::Expr;
use crate::error::{FracError, Result};
use serde::{Deserialize, Serialize};

/// A coefficient given as an expression in `x`, a constant, or explicit samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Constant(f64),
    Expr(String),
    Samples(Vec<f64>),
}

impl Coefficient {
    fn sample(&self, points: &[f64], what: &str) -> Result<Vec<f64>> {
        match self {
            Coefficient::Constant(v) => Ok(vec![*v; points.len()]),
            Coefficient::Expr(src) => {
                let e = Expr::parse(src, "x")?;
                Ok(points.iter().map(|&x| e.eval(x)).collect())
            }
            Coefficient::Samples(v) => {
                if v.len() != points.len() {
                    return Err(FracError::Invalid(format!(
                        "coefficient {what} needs {} samples, got {}",
                        points.len(),
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

/// JSON form of an operator: `{"L": .., "n": .., "a": .., "c": .., "b": ..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    #[serde(rename = "L")]
    pub length: f64,
    pub n: usize,
    #[serde(default = "one")]
    pub a: Coefficient,
    #[serde(default = "zero")]
    pub c: Coefficient,
    #[serde(default)]
    pub b: Option<Coefficient>,
}

fn one() -> Coefficient {
    Coefficient::Constant(1.0)
}

fn zero() -> Coefficient {
    Coefficient::Constant(0.0)
}

/// `A u = -(a u')' + b u' + c u` on `(0, L)` with homogeneous Dirichlet conditions,
/// sampled for a finite-difference grid of `n_interior` nodes `x_i = i h`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    pub length: f64,
    pub n_interior: usize,
    /// `a` at the `n_interior + 1` cell midpoints `(i + 1/2) h`.
    pub a: Vec<f64>,
    /// `c` at the interior nodes.
    pub c: Vec<f64>,
    /// Optional drift `b` at the interior nodes; only the time-stepping oracle reads it.
    pub b: Option<Vec<f64>>,
}

impl OperatorSpec {
    pub fn new(length: f64, n_interior: usize, a: Vec<f64>, c: Vec<f64>, b: Option<Vec<f64>>) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(FracError::Domain(format!("domain length must be positive, got {length}")));
        }
        if n_interior < 3 {
            return Err(FracError::Domain(format!("need at least 3 interior nodes, got {n_interior}")));
        }
        if a.len() != n_interior + 1 {
            return Err(FracError::DimensionMismatch {
                expected: n_interior + 1,
                got: a.len(),
            });
        }
        if c.len() != n_interior {
            return Err(FracError::DimensionMismatch {
                expected: n_interior,
                got: c.len(),
            });
        }
        if let Some(b) = &b {
            if b.len() != n_interior {
                return Err(FracError::DimensionMismatch {
                    expected: n_interior,
                    got: b.len(),
                });
            }
        }
        let all = a.iter().chain(&c).chain(b.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(FracError::Invalid("operator coefficients must be finite".into()));
        }
        if let Some((index, &value)) = a.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(FracError::Ellipticity { index, value });
        }
        Ok(OperatorSpec {
            length,
            n_interior,
            a,
            c,
            b,
        })
    }

    /// Constant coefficients `a` and `c`, no drift.
    pub fn uniform(length: f64, n_interior: usize, a: f64, c: f64) -> Result<Self> {
        OperatorSpec::new(length, n_interior, vec![a; n_interior + 1], vec![c; n_interior], None)
    }

    pub fn from_config(cfg: &OperatorConfig) -> Result<Self> {
        let n = cfg.n;
        if n < 3 {
            return Err(FracError::Domain(format!("need at least 3 interior nodes, got {n}")));
        }
        let h = cfg.length / (n + 1) as f64;
        let nodes: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        let mids: Vec<f64> = (0..=n).map(|i| (i as f64 + 0.5) * h).collect();
        let b = cfg.b.as_ref().map(|b| b.sample(&nodes, "b")).transpose()?;
        OperatorSpec::new(cfg.length, n, cfg.a.sample(&mids, "a")?, cfg.c.sample(&nodes, "c")?, b)
    }

    pub fn step(&self) -> f64 {
        self.length / (self.n_interior + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (1..=self.n_interior).map(|i| i as f64 * h).collect()
    }

    /// Ellipticity constant: the smallest sampled `a`.
    pub fn kappa(&self) -> f64 {
        self.a.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_reaction(&self) -> f64 {
        self.c.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Tridiagonal matrix; `lower[i]` couples row `i + 1` to column `i`, `upper[i]` row `i` to column `i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == self.upper
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `(shift I + self) x = rhs` by the Thomas algorithm.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = shift + self.diag[0];
        for i in 0..n {
            if i > 0 {
                piv = shift + self.diag[i] - self.lower[i - 1] * c[i - 1];
            }
            if piv == 0.0 || !piv.is_finite() {
                return Err(FracError::Singular(format!("zero pivot at row {i} of a tridiagonal solve")));
            }
            c[i] = if i + 1 < n { self.upper[i] / piv } else { 0.0 };
            d[i] = (rhs[i] - if i > 0 { self.lower[i - 1] * d[i - 1] } else { 0.0 }) / piv;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// LDL^T pivots of a symmetric tridiagonal matrix.
    pub fn ldl_pivots(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let prev = if i > 0 { self.upper[i - 1] * self.upper[i - 1] / p[i - 1] } else { 0.0 };
            p.push(self.diag[i] - prev);
        }
        p
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j + 1 == i {
                self.lower[j]
            } else if i + 1 == j {
                self.upper[i]
            } else {
                0.0
            }
        })
    }
}

/// Symmetric part `-(a u')' + c u`, checked for positive definiteness.
pub fn assemble(spec: &OperatorSpec) -> Result<Tridiagonal> {
    let t = assemble_parts(spec, false);
    for (row, &pivot) in t.ldl_pivots().iter().enumerate() {
        if !(pivot > 0.0) {
            return Err(FracError::NotPositiveDefinite { row, pivot });
        }
    }
    Ok(t)
}

/// Full operator including the central-difference drift `b u'`; not necessarily symmetric.
pub fn assemble_with_drift(spec: &OperatorSpec) -> Tridiagonal {
    assemble_parts(spec, true)
}

fn assemble_parts(spec: &OperatorSpec, drift: bool) -> Tridiagonal {
    let n = spec.n_interior;
    let h = spec.step();
    let h2 = h * h;
    let diag: Vec<f64> = (0..n).map(|i| (spec.a[i] + spec.a[i + 1]) / h2 + spec.c[i]).collect();
    let off: Vec<f64> = (0..n - 1).map(|i| -spec.a[i + 1] / h2).collect();
    let mut lower = off.clone();
    let mut upper = off;
    if drift {
        if let Some(b) = &spec.b {
            for i in 0..n - 1 {
                upper[i] += b[i] / (2.0 * h);
                lower[i] -= b[i + 1] / (2.0 * h);
            }
        }
    }
    Tridiagonal { lower, diag, upper }
}
