//! Recovery of the spatial factor `f` from subdomain observations and of the
//! temporal factor `mu` from single-point observations.

mod atoms;
mod diagnostics;
mod point;

pub use atoms::{recover_delta_train, AtomFit};
pub use diagnostics::{asymptotic_diagnostic, injectivity_report, max_principle_violations, AsymptoticDiagnostic, InjectivityReport};
pub use point::{build_point_kernel, build_point_kernel_of_order, recover_mu_l2, MuReconstruction, PointKernel};

use crate::error::{FracError, Result};
use crate::forward::{modal_weights, solve_timestep_oracle, SpaceTimeField};
use crate::fractional::{GridFunction, TemporalGrid};
use crate::spectral::{EigenDecomposition, ObservationSpec, OperatorSpec};
use crate::tolerances;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizationKind {
    /// Penalizes `||x||^2`.
    Ridge,
    /// Penalizes the squared forward differences of the unknown.
    RidgeOnDerivative,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WeightSelection {
    #[default]
    Fixed,
    /// Per-entry noise standard deviation; the weight is tuned until the residual
    /// matches `noise_level sqrt(n)`.
    Discrepancy { noise_level: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationSpec {
    pub kind: RegularizationKind,
    pub weight: f64,
    #[serde(default)]
    pub selection: WeightSelection,
}

impl RegularizationSpec {
    pub fn ridge(weight: f64) -> Self {
        RegularizationSpec {
            kind: RegularizationKind::Ridge,
            weight,
            selection: WeightSelection::Fixed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(FracError::Invalid(format!("regularization weight must be >= 0, got {}", self.weight)));
        }
        if let WeightSelection::Discrepancy { noise_level } = self.selection {
            if !(noise_level >= 0.0 && noise_level.is_finite()) {
                return Err(FracError::Invalid(format!("noise level must be >= 0, got {noise_level}")));
            }
        }
        Ok(())
    }
}

/// Outcome of a regularized least-squares solve.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    /// Weight actually used.
    pub weight: f64,
    /// `||M x - d||`.
    pub residual: f64,
    /// `||M x - d|| / ||d||`, or 0 for zero data.
    pub relative_residual: f64,
    /// `false` when the discrepancy rule could not bracket its target.
    pub discrepancy_met: bool,
}

/// Minimizes `||M x - d||^2 + w ||R x||^2` through the normal equations.
pub(crate) struct NormalSystem<'a> {
    m: &'a DMatrix<f64>,
    d: DVector<f64>,
    mtm: DMatrix<f64>,
    mtd: DVector<f64>,
    rtr: DMatrix<f64>,
}

impl<'a> NormalSystem<'a> {
    pub(crate) fn new(m: &'a DMatrix<f64>, d: &[f64], r: &DMatrix<f64>) -> Result<Self> {
        if d.len() != m.nrows() {
            return Err(FracError::DimensionMismatch {
                expected: m.nrows(),
                got: d.len(),
            });
        }
        let d = DVector::from_column_slice(d);
        Ok(NormalSystem {
            mtm: m.tr_mul(m),
            mtd: m.tr_mul(&d),
            rtr: r.tr_mul(r),
            m,
            d,
        })
    }

    fn solve_with(&self, weight: f64) -> Result<DVector<f64>> {
        if weight == 0.0 {
            let sv = self.m.singular_values();
            let hi = sv.max();
            if !(sv.min() > tolerances::RANK_RTOL * hi) {
                return Err(FracError::Singular(
                    "normal matrix is singular: unregularized problem is rank deficient".into(),
                ));
            }
        }
        let a = &self.mtm + &self.rtr * weight;
        match a.cholesky() {
            Some(c) => Ok(c.solve(&self.mtd)),
            None => Err(FracError::Singular("normal matrix is not positive definite".into())),
        }
    }

    fn residual(&self, x: &DVector<f64>) -> f64 {
        (self.m * x - &self.d).norm()
    }

    fn finish(&self, x: DVector<f64>, weight: f64, discrepancy_met: bool) -> LeastSquares {
        let residual = self.residual(&x);
        let dn = self.d.norm();
        LeastSquares {
            solution: x.iter().copied().collect(),
            weight,
            residual,
            relative_residual: if dn > 0.0 { residual / dn } else { 0.0 },
            discrepancy_met,
        }
    }

    pub(crate) fn solve(&self, reg: &RegularizationSpec) -> Result<LeastSquares> {
        reg.validate()?;
        match reg.selection {
            WeightSelection::Fixed => {
                let x = self.solve_with(reg.weight)?;
                Ok(self.finish(x, reg.weight, true))
            }
            WeightSelection::Discrepancy { noise_level } => self.discrepancy(noise_level),
        }
    }

    /// Morozov's rule: bisection over `log w` for `||M x_w - d|| = noise_level sqrt(n)`;
    /// the residual grows monotonically with `w`.
    fn discrepancy(&self, noise_level: f64) -> Result<LeastSquares> {
        if self.d.iter().all(|&v| v == 0.0) {
            // any positive weight gives the zero minimizer
            return Ok(self.finish(DVector::zeros(self.mtm.ncols()), 0.0, noise_level == 0.0));
        }
        let target = noise_level * (self.d.len() as f64).sqrt();
        let scale = self.mtm.diagonal().max() / self.rtr.diagonal().max().max(f64::MIN_POSITIVE);
        let (mut lo, mut hi) = ((1e-16 * scale).log10(), (1e4 * scale).log10());
        let band = tolerances::DISCREPANCY_BAND / 2.0;
        let at = |lw: f64| -> Option<(DVector<f64>, f64)> {
            let x = self.solve_with(10f64.powf(lw)).ok()?;
            let r = self.residual(&x);
            Some((x, r))
        };
        // the smallest weights may leave the normal matrix numerically indefinite
        let (x_lo, r_lo) = loop {
            if let Some(v) = at(lo) {
                break v;
            }
            lo += 0.5;
            if lo > hi {
                return Err(FracError::Singular("no weight in range gives a definite normal matrix".into()));
            }
        };
        if r_lo >= target {
            return Ok(self.finish(x_lo, 10f64.powf(lo), r_lo <= target * (1.0 + band)));
        }
        let (x_hi, r_hi) = at(hi).ok_or_else(|| FracError::Singular("normal matrix is not positive definite".into()))?;
        if r_hi <= target {
            return Ok(self.finish(x_hi, 10f64.powf(hi), r_hi >= target * (1.0 - band)));
        }
        // largest weight whose residual stays at or below the target
        let mut best = (x_lo, r_lo, lo);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let Some((x, r)) = at(mid) else {
                lo = mid;
                continue;
            };
            if r <= target {
                lo = mid;
                best = (x, r, mid);
                if r >= target * (1.0 - 1e-6) {
                    break;
                }
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        let met = (best.1 / target - 1.0).abs() <= band;
        Ok(self.finish(best.0, 10f64.powf(best.2), met))
    }
}

/// Forward differences `(x_{k+1} - x_k) / h` of `n` unknowns with zero values
/// appended on both sides when `dirichlet` is set.
pub(crate) fn difference_matrix(n: usize, h: f64, dirichlet: bool) -> DMatrix<f64> {
    if dirichlet {
        DMatrix::from_fn(n + 1, n, |i, j| {
            if i == j {
                1.0 / h
            } else if i == j + 1 {
                -1.0 / h
            } else {
                0.0
            }
        })
    } else {
        DMatrix::from_fn(n.saturating_sub(1), n, |i, j| {
            if j == i + 1 {
                1.0 / h
            } else if j == i {
                -1.0 / h
            } else {
                0.0
            }
        })
    }
}

/// How the unknown spatial factor is represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parameterization {
    /// One unknown per interior node.
    Nodal,
    /// The first `n_modes` eigen-coefficients.
    Modal { n_modes: usize },
}

/// Discretized linear map from the spatial factor to the observations `v|_{omega x (0, T]}`.
///
/// Rows are ordered time-major (time nodes `1..`, then observed nodes).
#[derive(Clone, Debug)]
pub struct ForwardMap {
    pub matrix: DMatrix<f64>,
    pub observation: ObservationSpec,
    pub grid: TemporalGrid,
    pub parameterization: Parameterization,
    /// Maps unknowns to nodal values (`n_interior x n_unknowns`).
    basis: DMatrix<f64>,
    h: f64,
}

impl ForwardMap {
    pub fn n_unknowns(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Observation vector of a field on the same grids.
    pub fn observe(&self, v: &SpaceTimeField) -> Result<Vec<f64>> {
        self.grid.ensure_same(&v.grid)?;
        self.observation.validate(v.n_interior)?;
        let idx = self.observation.indices();
        let mut out = Vec::with_capacity(self.n_rows());
        for i in 1..v.n_steps() {
            out.extend(idx.iter().map(|&k| v.at(i, k)));
        }
        Ok(out)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(x)).iter().copied().collect()
    }

    /// Nodal values of the unknowns `x`.
    pub fn to_field(&self, x: &[f64]) -> Vec<f64> {
        (&self.basis * DVector::from_column_slice(x)).iter().copied().collect()
    }

    fn penalty(&self, kind: RegularizationKind) -> DMatrix<f64> {
        let n = self.n_unknowns();
        match (kind, self.parameterization) {
            (RegularizationKind::Ridge, _) => DMatrix::identity(n, n),
            (RegularizationKind::RidgeOnDerivative, Parameterization::Nodal) => difference_matrix(n, self.h, true),
            (RegularizationKind::RidgeOnDerivative, Parameterization::Modal { .. }) => {
                difference_matrix(self.basis.nrows(), self.h, true) * &self.basis
            }
        }
    }
}

fn check_map_inputs(e: &EigenDecomposition, g: &GridFunction, obs: &ObservationSpec, grid: &TemporalGrid) -> Result<()> {
    grid.ensure_same(&g.grid)?;
    obs.validate(e.n_interior())?;
    if matches!(obs, ObservationSpec::Point { .. }) {
        return Err(FracError::Invalid("the f-map needs a subdomain observation".into()));
    }
    if g.values.iter().all(|&v| v == 0.0) {
        return Err(FracError::DegenerateSource);
    }
    Ok(())
}

/// Per-mode time series `(J^{alpha}-kernel * g)(t_i)`, `i = 1..`, for the first `n_modes` modes.
fn modal_responses(e: &EigenDecomposition, g: &GridFunction, alpha: f64, n_modes: usize, grid: &TemporalGrid) -> Vec<Vec<f64>> {
    (0..n_modes)
        .into_par_iter()
        .map(|n| modal_weights(alpha, alpha, e.lambdas[n], grid).apply(&g.values))
        .collect()
}

/// Nodal forward map: column `j` is the observed response to the unit vector at node `j`.
pub fn build_forward_map_f(
    e: &EigenDecomposition,
    g: &GridFunction,
    alpha: f64,
    obs: &ObservationSpec,
    grid: &TemporalGrid,
) -> Result<ForwardMap> {
    check_map_inputs(e, g, obs, grid)?;
    let n = e.n_interior();
    let nm = e.n_modes();
    let c = modal_responses(e, g, alpha, nm, grid);
    let idx = obs.indices();
    // (f, phi_m) = h phi_m . f, so column j picks up h phi_m(x_j)
    let phi = DMatrix::from_fn(n, nm, |x, m| e.modes[m][x]);
    let phi_obs = DMatrix::from_fn(idx.len(), nm, |r, m| e.modes[m][idx[r]]);
    let phit_h = phi.transpose() * e.h;
    let blocks: Vec<DMatrix<f64>> = (1..grid.n_steps)
        .into_par_iter()
        .map(|i| {
            let scaled = DMatrix::from_fn(idx.len(), nm, |r, m| phi_obs[(r, m)] * c[m][i]);
            scaled * &phit_h
        })
        .collect();
    let mut matrix = DMatrix::zeros(blocks.len() * idx.len(), n);
    for (b, block) in blocks.iter().enumerate() {
        matrix.view_mut((b * idx.len(), 0), (idx.len(), n)).copy_from(block);
    }
    Ok(ForwardMap {
        matrix,
        observation: obs.clone(),
        grid: *grid,
        parameterization: Parameterization::Nodal,
        basis: DMatrix::identity(n, n),
        h: e.h,
    })
}

/// Forward map over the first `n_modes` eigen-coefficients of `f`.
pub fn build_forward_map_f_modal(
    e: &EigenDecomposition,
    g: &GridFunction,
    alpha: f64,
    obs: &ObservationSpec,
    grid: &TemporalGrid,
    n_modes: usize,
) -> Result<ForwardMap> {
    check_map_inputs(e, g, obs, grid)?;
    if n_modes == 0 || n_modes > e.n_modes() {
        return Err(FracError::Invalid(format!(
            "n_modes must lie in 1..={}, got {n_modes}",
            e.n_modes()
        )));
    }
    let c = modal_responses(e, g, alpha, n_modes, grid);
    let idx = obs.indices();
    let rows = (grid.n_steps - 1) * idx.len();
    let matrix = DMatrix::from_fn(rows, n_modes, |row, m| {
        let (i, r) = (row / idx.len() + 1, row % idx.len());
        c[m][i] * e.modes[m][idx[r]]
    });
    let n = e.n_interior();
    Ok(ForwardMap {
        matrix,
        observation: obs.clone(),
        grid: *grid,
        parameterization: Parameterization::Modal { n_modes },
        basis: DMatrix::from_fn(n, n_modes, |x, m| e.modes[m][x]),
        h: e.h,
    })
}

/// Reconstruction of the spatial factor.
#[derive(Clone, Debug)]
pub struct FReconstruction {
    /// Nodal values of the estimate.
    pub f: Vec<f64>,
    pub fit: LeastSquares,
}

/// Regularized least-squares estimate of `f` from observations `data`
/// (ordered as [`ForwardMap::observe`]).
pub fn recover_f(data: &[f64], fmap: &ForwardMap, reg: &RegularizationSpec) -> Result<FReconstruction> {
    let r = fmap.penalty(reg.kind);
    let fit = NormalSystem::new(&fmap.matrix, data, &r)?.solve(reg)?;
    Ok(FReconstruction {
        f: fmap.to_field(&fit.solution),
        fit,
    })
}

/// Synthetic observations that avoid the inverse crime: the L1 time-stepping
/// oracle on a grid twice as fine in time, sampled back onto `grid`.
pub fn oracle_data(
    spec: &OperatorSpec,
    f: &[f64],
    g: impl Fn(f64) -> f64,
    alpha: f64,
    grid: &TemporalGrid,
) -> Result<SpaceTimeField> {
    let fine = grid.refined(2);
    let gf = GridFunction::from_fn(fine, g);
    solve_timestep_oracle(spec, f, &gf, alpha, &fine)?.downsample(2, 1)
}

/// Adds independent `N(0, sigma^2)` noise drawn from a seeded ChaCha stream.
pub fn add_noise(values: &mut [f64], sigma: f64, seed: u64) -> Result<()> {
    let normal = Normal::new(0.0, sigma).map_err(|e| FracError::Invalid(format!("noise level: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in values.iter_mut() {
        *v += normal.sample(&mut rng);
    }
    Ok(())
}

/// Root mean square of `values`.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// `||a - b|| / ||b||` in the Euclidean norm.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[cfg(test)]
mod tests;
