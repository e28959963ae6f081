//! Two-parameter Mittag-Leffler function on the nonpositive real axis.
//!
//! Three regimes are combined: the Taylor series near the origin, an
//! integral representation over the spectral density for larger arguments,
//! and the recurrence `E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z` to
//! bring `b` into `(0, 1]`, where that representation is well conditioned.

use crate::error::{domain, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::special::{gamma, ln_gamma, rgamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const SERIES_CAP: usize = 500;
const SERIES_STOP: f64 = 1e-18;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MLParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return domain(format!("Mittag-Leffler alpha must lie in (0, 1], got {alpha}"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return domain(format!("Mittag-Leffler beta must be positive, got {beta}"));
        }
        Ok(MLParams { alpha, beta })
    }
}

/// `E_{alpha,beta}(z)` for `z <= 0`.
pub fn ml_eval(p: MLParams, z: f64) -> Result<f64> {
    let p = MLParams::new(p.alpha, p.beta)?;
    if z.is_nan() || z > 0.0 {
        return domain(format!("Mittag-Leffler argument must be <= 0, got {z}"));
    }
    Ok(eval(p.alpha, p.beta, z))
}

/// `t^(alpha-1) E_{alpha,alpha}(-lambda t^alpha)`, the modal convolution kernel.
pub fn ml_kernel(alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return domain(format!("kernel rate lambda must be >= 0, got {lambda}"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("kernel argument t must be > 0, got {t}"));
    }
    Ok(MlKernel::new(alpha, alpha, lambda).value(t))
}

/// Leading term `1 / (Gamma(1-alpha) rho t^alpha)` of `E_{alpha,1}(-rho t^alpha)` as `t -> oo`.
pub fn ml_asymptotic_leading(alpha: f64, rho: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if !(rho > 0.0) || !(t > 0.0) {
        return domain(format!("rho and t must be positive, got rho = {rho}, t = {t}"));
    }
    Ok(rgamma(1.0 - alpha) / (rho * t.powf(alpha)))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        domain(format!("alpha must lie in (0, 1], got {alpha}"))
    }
}

pub(crate) fn eval(alpha: f64, beta: f64, z: f64) -> f64 {
    if z == 0.0 {
        return rgamma(beta);
    }
    if alpha == 1.0 {
        return eval_alpha_one(beta, z);
    }
    if -z <= regimes::switch_point(alpha) {
        if let Some(v) = regimes::series(alpha, beta, z) {
            return v;
        }
    }
    // The density integral degrades as beta approaches 1 + alpha, so the
    // recurrence lowers beta into (0, 1] first.
    if beta <= 1.0 {
        regimes::integral(alpha, beta, z)
    } else {
        (eval(alpha, beta - alpha, z) - rgamma(beta - alpha)) / z
    }
}

fn eval_alpha_one(beta: f64, z: f64) -> f64 {
    if -z <= 5.0 {
        if let Some(v) = regimes::series(1.0, beta, z) {
            return v;
        }
    }
    if beta == 1.0 {
        return z.exp();
    }
    if beta < 1.0 {
        return rgamma(beta) + z * eval_alpha_one(beta + 1.0, z);
    }
    // E_{1,b}(z) = 1/Gamma(b-1) * int_0^1 e^{z s} (1-s)^{b-2} ds, b > 1.
    let x = -z;
    let tol = Tolerance {
        abs: 1e-300,
        rel: 1e-14,
        max_intervals: 400,
    };
    if beta < 2.0 {
        // u = 1 - s = w^{1/(b-1)} removes the endpoint singularity.
        let p = 1.0 / (beta - 1.0);
        let breaks: Vec<f64> = [1.0, 10.0, 40.0].iter().map(|k| 1.0 - k / (p * x)).collect();
        let est = integrate(|w: f64| (-x * (1.0 - w.powf(p))).exp(), 0.0, 1.0, &breaks, tol);
        rgamma(beta) * est.value
    } else {
        let breaks: Vec<f64> = [1.0, 10.0, 40.0].iter().map(|k| 1.0 - k / x).collect();
        let q = beta - 2.0;
        let est = integrate(|u: f64| (-x * (1.0 - u)).exp() * u.powf(q), 0.0, 1.0, &breaks, tol);
        rgamma(beta - 1.0) * est.value
    }
}

fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}

fn cos_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.5 || r == 1.5 {
        return 0.0;
    }
    (PI * r).cos()
}

/// The individual evaluation regimes, exposed for cross-checks.
pub mod regimes {
    use super::*;

    /// Argument magnitude below which the series is used for `alpha < 1`.
    /// The series terms peak near `|z|^{1/alpha}`, so the cut scales as `5^alpha`.
    pub fn switch_point(alpha: f64) -> f64 {
        5f64.powf(alpha)
    }

    /// Taylor series with compensated summation, or `None` if the term cap is hit.
    pub fn series(alpha: f64, beta: f64, z: f64) -> Option<f64> {
        let ln_abs = z.abs().ln();
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        let mut small = 0;
        for k in 0..SERIES_CAP {
            let arg = alpha * k as f64 + beta;
            let term = if arg > 170.0 {
                let mag = (k as f64 * ln_abs - ln_gamma(arg)).exp();
                if z < 0.0 && k % 2 == 1 {
                    -mag
                } else {
                    mag
                }
            } else {
                z.powi(k as i32) * rgamma(arg)
            };
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            if k > 0 && term.abs() < SERIES_STOP * (sum + comp).abs() {
                small += 1;
                if small >= 2 {
                    return Some(sum + comp);
                }
            } else {
                small = 0;
            }
        }
        None
    }

    /// Integral over the spectral density, valid for `0 < alpha < 1`,
    /// `beta < 1 + alpha` and `z < 0`.
    pub fn integral(alpha: f64, beta: f64, z: f64) -> f64 {
        debug_assert!(alpha < 1.0 && beta < 1.0 + alpha && z < 0.0);
        let x = -z;
        let g = (1.0 - beta) / alpha;
        let s1 = sin_pi(1.0 - beta);
        let s2 = sin_pi(1.0 - beta + alpha);
        let c = cos_pi(alpha);
        let inv = 1.0 / alpha;
        let rest = move |chi: f64| {
            (-chi.powf(inv)).exp() * (chi * s1 + x * s2) / (chi * chi + 2.0 * chi * x * c + x * x)
        };
        let top = 60f64.powf(alpha);
        let mut pts: Vec<f64> = [1.0, x * c.abs(), x]
            .into_iter()
            .filter(|&p| p > 0.0 && p < top)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let b0 = pts.first().copied().unwrap_or(top);
        let tol = Tolerance {
            abs: 1e-30,
            rel: 1e-14,
            max_intervals: 600,
        };
        let head = if g < 0.0 {
            // chi = b0 w^{1/(g+1)} absorbs the chi^g endpoint singularity.
            let e = 1.0 / (g + 1.0);
            let scale = b0.powf(g + 1.0) * e;
            scale * integrate(|w: f64| rest(b0 * w.powf(e)), 0.0, 1.0, &[], tol).value
        } else {
            integrate(|chi: f64| chi.powf(g) * rest(chi), 0.0, b0, &[], tol).value
        };
        let tail = if b0 < top {
            integrate(|chi: f64| chi.powf(g) * rest(chi), b0, top, &pts, tol).value
        } else {
            0.0
        };
        (head + tail) / (alpha * PI)
    }
}

/// The kernel family `k(t) = t^(gamma-1) E_{alpha,gamma}(-lambda t^alpha)` with its first two
/// antiderivatives, which drive exact product-integration weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlKernel {
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl MlKernel {
    pub fn new(alpha: f64, gamma: f64, lambda: f64) -> Self {
        debug_assert!(alpha > 0.0 && alpha <= 1.0 && gamma > 0.0 && lambda >= 0.0);
        MlKernel { alpha, gamma, lambda }
    }

    /// Riemann-Liouville kernel `t^(order-1) / Gamma(order)`.
    pub fn riemann_liouville(order: f64) -> Self {
        MlKernel::new(1.0, order, 0.0)
    }

    fn ml(&self, beta: f64, t: f64) -> f64 {
        if self.lambda == 0.0 {
            rgamma(beta)
        } else {
            eval(self.alpha, beta, -self.lambda * t.powf(self.alpha))
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.lambda == 0.0 {
            return t.powf(self.gamma - 1.0) * rgamma(self.gamma);
        }
        t.powf(self.gamma - 1.0) * self.ml(self.gamma, t)
    }

    /// `d/dt k(t) = t^(gamma-2) E_{alpha,gamma-1}(-lambda t^alpha)`, available for `gamma > 1`.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        if self.gamma <= 1.0 {
            return None;
        }
        Some(t.powf(self.gamma - 2.0) * self.ml(self.gamma - 1.0, t))
    }

    /// `int_0^t k = t^gamma E_{alpha,gamma+1}(-lambda t^alpha)`.
    pub fn f1(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if self.lambda == 0.0 {
            return t.powf(self.gamma) / gamma(self.gamma + 1.0);
        }
        t.powf(self.gamma) * self.ml(self.gamma + 1.0, t)
    }

    /// `int_0^t f1 = t^(gamma+1) E_{alpha,gamma+2}(-lambda t^alpha)`.
    pub fn f2(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if self.lambda == 0.0 {
            return t.powf(self.gamma + 1.0) / gamma(self.gamma + 2.0);
        }
        t.powf(self.gamma + 1.0) * self.ml(self.gamma + 2.0, t)
    }
}
