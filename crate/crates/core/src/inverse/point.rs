use super::{difference_matrix, LeastSquares, NormalSystem, RegularizationKind, RegularizationSpec};
use crate::error::{FracError, Result};
use crate::fractional::{DeltaTrain, GridFunction, ProductWeights, TemporalGrid};
use crate::mittag_leffler::MlKernel;
use crate::spectral::EigenDecomposition;
use nalgebra::DMatrix;
use rayon::prelude::*;

/// `K(t) = sum_n w_n t^(order-1) E_{alpha,order}(-lambda_n t^alpha)` with
/// `w_n = (f, phi_n) phi_n(x0)`.
///
/// With `order = alpha` this is the response of `u(x0, .)` to a unit impulse in time;
/// with `order = alpha + beta` it is the response of `v = J_beta u`.
#[derive(Clone, Debug)]
pub struct PointKernel {
    pub grid: TemporalGrid,
    pub alpha: f64,
    pub order: f64,
    /// Observed interior node.
    pub x0: usize,
    /// `K(t_i)`; entry 0 is 0 when `order < 1` (the kernel is singular there).
    pub values: Vec<f64>,
    /// `f` has one sign at every node and does not vanish.
    pub sign_condition: bool,
    lambdas: Vec<f64>,
    weights: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
}

impl PointKernel {
    fn modes(&self) -> impl Iterator<Item = (MlKernel, f64)> + '_ {
        self.lambdas
            .iter()
            .zip(&self.weights)
            .map(|(&l, &w)| (MlKernel::new(self.alpha, self.order, l), w))
    }

    /// `K(tau)`, zero for `tau <= 0`.
    pub fn value(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        self.modes().map(|(k, w)| w * k.value(tau)).sum()
    }

    /// `K'(tau)` for `tau > 0`: closed form when `order > 1`, centred difference otherwise.
    pub fn derivative(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        if self.order > 1.0 {
            return self.modes().map(|(k, w)| w * k.derivative(tau).unwrap_or(0.0)).sum();
        }
        let d = 1e-6 * tau;
        (self.value(tau + d) - self.value(tau - d)) / (2.0 * d)
    }

    /// `int_0^T K` from the exact antiderivatives.
    pub fn integral(&self) -> f64 {
        *self.f1.last().unwrap_or(&0.0)
    }

    /// Product-integration weights of `mu -> int_0^t K(t - s) mu(s) ds`.
    pub fn product_weights(&self) -> ProductWeights {
        ProductWeights::from_antiderivatives(&self.f1, &self.f2, self.grid.step())
    }

    /// `(K * mu)(t_i)`.
    pub fn convolve(&self, mu: &GridFunction) -> Result<GridFunction> {
        self.grid.ensure_same(&mu.grid)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self.product_weights().apply(&mu.values),
        })
    }

    /// `sum_k r_k K(t_i - a_k)`.
    pub fn atom_response(&self, train: &DeltaTrain) -> GridFunction {
        GridFunction::from_fn(self.grid, |t| train.atoms().iter().map(|at| at.r * self.value(t - at.a)).sum())
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

/// Point kernel for `u(x0, .)`.
pub fn build_point_kernel(e: &EigenDecomposition, f: &[f64], alpha: f64, x0: usize, grid: &TemporalGrid) -> Result<PointKernel> {
    build_point_kernel_of_order(e, f, alpha, alpha, x0, grid)
}

/// Point kernel with an arbitrary order, e.g. `alpha + beta` for data on `v = J_beta u`.
pub fn build_point_kernel_of_order(
    e: &EigenDecomposition,
    f: &[f64],
    alpha: f64,
    order: f64,
    x0: usize,
    grid: &TemporalGrid,
) -> Result<PointKernel> {
    if !(alpha > 0.0 && alpha <= 1.0) || order <= 0.0 {
        return Err(FracError::Domain(format!("need alpha in (0, 1] and order > 0, got {alpha}, {order}")));
    }
    if x0 >= e.n_interior() {
        return Err(FracError::Invalid(format!("observation index {x0} is not an interior node")));
    }
    if f.len() != e.n_interior() {
        return Err(FracError::DimensionMismatch {
            expected: e.n_interior(),
            got: f.len(),
        });
    }
    let coeffs = e.project(f)?;
    let all: Vec<f64> = (0..e.n_modes()).map(|n| coeffs[n] * e.modes[n][x0]).collect();
    let peak = all.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let keep: Vec<usize> = (0..all.len()).filter(|&n| all[n].abs() > 1e-15 * peak).collect();
    let lambdas: Vec<f64> = keep.iter().map(|&n| e.lambdas[n]).collect();
    let weights: Vec<f64> = keep.iter().map(|&n| all[n]).collect();
    let sign_condition = f.iter().any(|&v| v != 0.0) && (f.iter().all(|&v| v >= 0.0) || f.iter().all(|&v| v <= 0.0));
    let h = grid.step();
    let sums: Vec<(f64, f64)> = (0..grid.n_steps)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * h;
            lambdas.iter().zip(&weights).fold((0.0, 0.0), |(a, b), (&l, &w)| {
                let k = MlKernel::new(alpha, order, l);
                (a + w * k.f1(t), b + w * k.f2(t))
            })
        })
        .collect();
    let mut kernel = PointKernel {
        grid: *grid,
        alpha,
        order,
        x0,
        values: Vec::new(),
        sign_condition,
        lambdas,
        weights,
        f1: sums.iter().map(|s| s.0).collect(),
        f2: sums.iter().map(|s| s.1).collect(),
    };
    kernel.values = (0..grid.n_steps)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                if order == 1.0 {
                    kernel.weights.iter().sum()
                } else {
                    0.0
                }
            } else {
                kernel.value(i as f64 * h)
            }
        })
        .collect();
    Ok(kernel)
}

/// Deconvolution result for a square-integrable temporal factor.
#[derive(Clone, Debug)]
pub struct MuReconstruction {
    pub mu: GridFunction,
    pub fit: LeastSquares,
    /// Condition number of the convolution map from `mu(t_1..)` to the data at `t_1..`.
    pub condition_number: f64,
}

/// Regularized deconvolution of `data = K * mu`, using data at `t_1..`.
pub fn recover_mu_l2(data: &GridFunction, k: &PointKernel, reg: &RegularizationSpec) -> Result<MuReconstruction> {
    k.grid.ensure_same(&data.grid)?;
    if k.is_zero() {
        return Err(FracError::ZeroKernel);
    }
    let n = k.grid.n_steps;
    let full = k.product_weights().matrix(n);
    let w = full.rows(1, n - 1).into_owned();
    let sv = w.columns(1, n - 1).into_owned().singular_values();
    let condition_number = sv.max() / sv.min();
    let r = match reg.kind {
        RegularizationKind::Ridge => DMatrix::identity(n, n),
        RegularizationKind::RidgeOnDerivative => difference_matrix(n, k.grid.step(), false),
    };
    let fit = NormalSystem::new(&w, &data.values[1..], &r)?.solve(reg)?;
    Ok(MuReconstruction {
        mu: GridFunction {
            grid: k.grid,
            values: fit.solution.clone(),
        },
        fit,
        condition_number,
    })
}
