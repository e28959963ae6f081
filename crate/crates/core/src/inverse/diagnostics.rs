use super::ForwardMap;
use crate::error::{FracError, Result};
use crate::mittag_leffler;
use crate::spectral::{assemble, EigenDecomposition, OperatorSpec};
use crate::special::rgamma;
use crate::tolerances;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Singular-value summary of a linear map.
#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub condition_number: f64,
    /// Count of `sigma > RANK_RTOL sigma_max`.
    pub numerical_rank: usize,
    /// `sigma_min > RANK_RTOL sigma_max`.
    pub numerically_unique: bool,
}

impl InjectivityReport {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let sigma_max = sv.first().copied().unwrap_or(0.0);
        // a wide matrix has a nontrivial kernel
        let sigma_min = if m.nrows() < m.ncols() { 0.0 } else { sv.last().copied().unwrap_or(0.0) };
        let cut = tolerances::RANK_RTOL * sigma_max;
        InjectivityReport {
            numerical_rank: sv.iter().filter(|&&s| s > cut).count(),
            numerically_unique: sigma_min > cut,
            condition_number: sigma_max / sigma_min,
            singular_values: sv,
            sigma_max,
            sigma_min,
        }
    }
}

pub fn injectivity_report(fmap: &ForwardMap) -> InjectivityReport {
    InjectivityReport::from_matrix(&fmap.matrix)
}

/// Long-time behaviour of `z(x0, t)` against the prediction `(A^-1 f)(x0) / (Gamma(1-alpha) t^alpha)`.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticDiagnostic {
    /// `(A^-1 f)(x0) = sum_n (P_n f)(x0) / rho_n`.
    pub s: f64,
    /// `s / Gamma(1 - alpha)`.
    pub predicted: f64,
    /// Fitted coefficient of `t^-alpha`.
    pub fitted: f64,
    pub relative_gap: f64,
    pub horizon: f64,
}

/// Number of powers `t^-alpha, t^-2 alpha, ..` in the least-squares fit.
pub const FIT_TERMS: usize = 3;
const FIT_SAMPLES: usize = 200;

/// Fits `z(x0, t) ~ sum_k c_k t^(-k alpha)` over `t` in `[horizon/10, horizon]`
/// (geometric samples) and compares `c_1` with `(A^-1 f)(x0) / Gamma(1 - alpha)`.
/// The default horizon is `50 lambda_1^(-1/alpha)`.
pub fn asymptotic_diagnostic(
    e: &EigenDecomposition,
    f: &[f64],
    alpha: f64,
    x0: usize,
    horizon: Option<f64>,
) -> Result<AsymptoticDiagnostic> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FracError::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if x0 >= e.n_interior() {
        return Err(FracError::Invalid(format!("observation index {x0} is not an interior node")));
    }
    let s = e.apply_inverse(f)?[x0];
    let coeffs = e.project(f)?;
    let w: Vec<f64> = (0..e.n_modes()).map(|n| coeffs[n] * e.modes[n][x0]).collect();
    let horizon = horizon.unwrap_or(50.0 * e.lambdas[0].powf(-1.0 / alpha));
    let lo = horizon / 10.0;
    let ts: Vec<f64> = (0..FIT_SAMPLES)
        .map(|i| lo * 10f64.powf(i as f64 / (FIT_SAMPLES - 1) as f64))
        .collect();
    let z: Vec<f64> = ts
        .iter()
        .map(|&t| {
            w.iter()
                .zip(&e.lambdas)
                .map(|(wn, l)| wn * mittag_leffler::eval(alpha, 1.0, -l * t.powf(alpha)))
                .sum()
        })
        .collect();
    let x = DMatrix::from_fn(FIT_SAMPLES, FIT_TERMS, |i, k| ts[i].powf(-alpha * (k + 1) as f64));
    let c = x
        .svd(true, true)
        .solve(&DVector::from_vec(z), 1e-15)
        .map_err(|m| FracError::Singular(m.to_string()))?;
    let predicted = s * rgamma(1.0 - alpha);
    let fitted = c[0];
    Ok(AsymptoticDiagnostic {
        s,
        predicted,
        fitted,
        relative_gap: (fitted - predicted).abs() / predicted.abs(),
        horizon,
    })
}

/// Number of entries of the inverse stiffness matrix that are not strictly positive.
/// Zero is the discrete strong maximum principle.
pub fn max_principle_violations(spec: &OperatorSpec) -> Result<usize> {
    let inv = assemble(spec)?
        .to_dense()
        .try_inverse()
        .ok_or_else(|| FracError::Singular("stiffness matrix".into()))?;
    Ok(inv.iter().filter(|&&v| !(v > 0.0)).count())
}
