//! Forward solvers for `(d_t^alpha + A) u = mu(t) f(x)` with zero initial data,
//! and for the homogeneous problem with initial datum `f`.
//!
//! Three independent routes are provided: eigenfunction expansion of the
//! homogeneous solution combined with Duhamel's principle, direct modal
//! convolution with the kernel `t^(alpha-1) E_{alpha,alpha}(-lambda t^alpha)`, and
//! implicit L1 time stepping on the finite-difference operator.

mod field;

pub use field::{SpaceTimeField, FSTF_MAGIC, FSTF_VERSION};

use crate::error::{FracError, Result};
use crate::fractional::{l1_caputo, l1_coefficients, regularize_source, DeltaTrain, FracParams, GridFunction, ProductWeights, TemporalGrid, TemporalSource};
use crate::mittag_leffler::{self, MlKernel};
use crate::quadrature::{integrate, Tolerance};
use crate::spectral::{assemble_with_drift, EigenDecomposition, OperatorSpec, Tridiagonal};
use crate::special::{gamma, rgamma};
use crate::tolerances;
use nalgebra::DMatrix;
use rayon::prelude::*;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(FracError::Domain(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

fn check_field(e: &EigenDecomposition, f: &[f64]) -> Result<()> {
    if f.len() != e.n_interior() {
        return Err(FracError::DimensionMismatch {
            expected: e.n_interior(),
            got: f.len(),
        });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(FracError::Invalid("spatial factor has non-finite entries".into()));
    }
    Ok(())
}

/// Modes whose coefficient is negligible next to the largest are skipped.
fn active_modes(coeffs: &[f64]) -> Vec<usize> {
    let peak = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    (0..coeffs.len()).filter(|&n| coeffs[n].abs() > 1e-15 * peak).collect()
}

/// `sum_n series[n][i] phi_n` for every time row, summed in mode order.
fn synthesize(e: &EigenDecomposition, modes: &[usize], series: &[Vec<f64>], grid: TemporalGrid) -> SpaceTimeField {
    let n = e.n_interior();
    let mut out = SpaceTimeField::zeros(grid, e.h * (n + 1) as f64, n);
    out.values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            for (&m, s) in modes.iter().zip(series) {
                let c = s[i];
                if c != 0.0 {
                    for (r, p) in row.iter_mut().zip(&e.modes[m]) {
                        *r += c * p;
                    }
                }
            }
        });
    out
}

/// Modal coefficients of the homogeneous solution: `E_{alpha,1}(-lambda_n t_i^alpha)`.
pub fn homogeneous_series(alpha: f64, lambda: f64, grid: &TemporalGrid) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|&t| mittag_leffler::eval(alpha, 1.0, -lambda * t.powf(alpha)))
        .collect()
}

/// `z(t) = sum_n E_{alpha,1}(-lambda_n t^alpha) (f, phi_n) phi_n`, solving
/// `(d_t^alpha + A) z = 0`, `z(0) = f`.
pub fn solve_homogeneous(e: &EigenDecomposition, f: &[f64], alpha: f64, grid: &TemporalGrid) -> Result<SpaceTimeField> {
    check_alpha(alpha)?;
    check_field(e, f)?;
    let coeffs = e.project(f)?;
    let modes = active_modes(&coeffs);
    let series: Vec<Vec<f64>> = modes
        .par_iter()
        .map(|&n| {
            homogeneous_series(alpha, e.lambdas[n], grid)
                .into_iter()
                .map(|v| v * coeffs[n])
                .collect()
        })
        .collect();
    let mut out = synthesize(e, &modes, &series, *grid);
    out.tail = e.parseval_tail(f)?;
    if e.n_modes() == e.n_interior() {
        // the full expansion at t = 0 is the identity
        out.row_mut(0).copy_from_slice(f);
    }
    Ok(out)
}

/// Product-integration weights of `k_n(t) = t^(gamma-1) E_{alpha,gamma}(-lambda_n t^alpha)`.
pub fn modal_weights(alpha: f64, gamma: f64, lambda: f64, grid: &TemporalGrid) -> ProductWeights {
    ProductWeights::new(&MlKernel::new(alpha, gamma, lambda), grid.step(), grid.n_steps)
}

fn convolve_modes(
    e: &EigenDecomposition,
    f: &[f64],
    g: &GridFunction,
    alpha: f64,
    gamma: f64,
    grid: &TemporalGrid,
) -> Result<SpaceTimeField> {
    check_alpha(alpha)?;
    check_field(e, f)?;
    grid.ensure_same(&g.grid)?;
    let coeffs = e.project(f)?;
    let modes = if g.values.iter().all(|&v| v == 0.0) {
        Vec::new()
    } else {
        active_modes(&coeffs)
    };
    let series: Vec<Vec<f64>> = modes
        .par_iter()
        .map(|&n| {
            modal_weights(alpha, gamma, e.lambdas[n], grid)
                .apply(&g.values)
                .into_iter()
                .map(|v| v * coeffs[n])
                .collect()
        })
        .collect();
    Ok(synthesize(e, &modes, &series, *grid))
}

/// Duhamel's principle: `w(t) = int_0^t g(s) z(t - s) ds` with `z` from [`solve_homogeneous`].
/// Solves `(d_t^alpha + A) w = (J_{1-alpha} g) f`, `w(0) = 0`.
pub fn solve_duhamel(
    e: &EigenDecomposition,
    f: &[f64],
    g: &GridFunction,
    alpha: f64,
    grid: &TemporalGrid,
) -> Result<SpaceTimeField> {
    convolve_modes(e, f, g, alpha, 1.0, grid)
}

/// `v(t) = sum_n (int_0^t s^(alpha-1) E_{alpha,alpha}(-lambda_n s^alpha) g(t - s) ds) (f, phi_n) phi_n`,
/// solving `(d_t^alpha + A) v = g f`, `v(0) = 0`.
pub fn solve_modal_convolution(
    e: &EigenDecomposition,
    f: &[f64],
    g: &GridFunction,
    alpha: f64,
    grid: &TemporalGrid,
) -> Result<SpaceTimeField> {
    convolve_modes(e, f, g, alpha, alpha, grid)
}

/// Output of [`solve_singular`].
#[derive(Clone, Debug)]
pub struct SingularSolution {
    /// The transformed source `g = J_beta mu`.
    pub g: GridFunction,
    /// Solution of the regularized problem, `v = J_beta u`.
    pub v: SpaceTimeField,
    /// `u` itself, available when `mu` is a pure delta train.
    pub u_atoms: Option<SpaceTimeField>,
    /// Largest per-mode relative mismatch between `J_beta u` and `v`.
    pub transform_mismatch: Option<f64>,
}

/// Solves the problem with a singular temporal factor through the regularized
/// system `(d_t^alpha + A) v = (J_beta mu) f`.
///
/// The square-integrable part of `g` goes through [`solve_modal_convolution`].
/// Each atom `r delta_a` contributes `r (t-a)^(alpha+beta-1) E_{alpha,alpha+beta}(-lambda (t-a)^alpha)`
/// per mode, the closed form of the modal convolution of the kernel with `J_beta delta_a`.
pub fn solve_singular(
    e: &EigenDecomposition,
    f: &[f64],
    mu: &TemporalSource,
    params: &FracParams,
    grid: &TemporalGrid,
) -> Result<SingularSolution> {
    params.validate_singular()?;
    let (alpha, beta) = (params.alpha, params.beta);
    let g = regularize_source(beta, mu, grid)?;
    let train = mu.train();
    let mut v = match (mu.regular(), train) {
        (_, None) => solve_modal_convolution(e, f, &g, alpha, grid)?,
        (Some(r), Some(_)) => {
            let regular = regularize_source(beta, &TemporalSource::Regular(r.clone()), grid)?;
            solve_modal_convolution(e, f, &regular, alpha, grid)?
        }
        (None, Some(_)) => SpaceTimeField::zeros(*grid, e.h * (e.n_interior() + 1) as f64, e.n_interior()),
    };
    let mut u_atoms = None;
    let mut transform_mismatch = None;
    if let Some(train) = train {
        let atoms_v = atom_field(e, f, train, alpha, alpha + beta, grid)?;
        for (a, b) in v.values.iter_mut().zip(&atoms_v.values) {
            *a += b;
        }
        if mu.regular().is_none() {
            u_atoms = Some(atom_field(e, f, train, alpha, alpha, grid)?);
            let mismatch = transform_consistency(e, train, alpha, beta, grid, tolerances::TRANSFORM_CHECK_MODES);
            if !(mismatch <= tolerances::TRANSFORM_CONSISTENCY) {
                return Err(FracError::TransformMismatch(mismatch));
            }
            transform_mismatch = Some(mismatch);
        }
    }
    Ok(SingularSolution {
        g,
        v,
        u_atoms,
        transform_mismatch,
    })
}

/// `sum_k r_k k_n(t - a_k)` per mode, `k_n = t^(gamma-1) E_{alpha,gamma}(-lambda_n t^alpha)`, synthesized.
fn atom_field(
    e: &EigenDecomposition,
    f: &[f64],
    train: &DeltaTrain,
    alpha: f64,
    gamma: f64,
    grid: &TemporalGrid,
) -> Result<SpaceTimeField> {
    check_field(e, f)?;
    let coeffs = e.project(f)?;
    let modes = active_modes(&coeffs);
    let nodes = grid.nodes();
    let series: Vec<Vec<f64>> = modes
        .par_iter()
        .map(|&n| {
            let k = MlKernel::new(alpha, gamma, e.lambdas[n]);
            nodes
                .iter()
                .map(|&t| {
                    let s: f64 = train
                        .atoms()
                        .iter()
                        .filter(|at| t > at.a)
                        .map(|at| at.r * k.value(t - at.a))
                        .sum();
                    s * coeffs[n]
                })
                .collect()
        })
        .collect();
    Ok(synthesize(e, &modes, &series, *grid))
}

/// `(J_beta k)(tau)` for `k(s) = s^(alpha-1) E_{alpha,alpha}(-lambda s^alpha)` by adaptive quadrature.
///
/// With `s = tau sigma` the integrand is `(1-sigma)^(beta-1) sigma^(alpha-1) E(..)`; the power
/// substitutions `sigma = w^(1/alpha)` on `[0, 1/2]` and `1 - sigma = w^(1/beta)` on `[1/2, 1]`
/// remove both endpoint singularities.
pub fn rl_of_modal_kernel(alpha: f64, beta: f64, lambda: f64, tau: f64) -> f64 {
    let lt = lambda * tau.powf(alpha);
    let e = |s: f64| mittag_leffler::eval(alpha, alpha, -lt * s.powf(alpha));
    let tol = Tolerance {
        abs: 1e-300,
        rel: 1e-11,
        max_intervals: 200,
    };
    let (ia, ib) = (1.0 / alpha, 1.0 / beta);
    let left = integrate(
        |w: f64| {
            let s = w.powf(ia);
            (1.0 - s).powf(beta - 1.0) * e(s)
        },
        0.0,
        0.5f64.powf(alpha),
        &[],
        tol,
    )
    .value
        / alpha;
    let right = integrate(
        |w: f64| {
            let s = 1.0 - w.powf(ib);
            s.powf(alpha - 1.0) * e(s)
        },
        0.0,
        0.5f64.powf(beta),
        &[],
        tol,
    )
    .value
        / beta;
    tau.powf(alpha + beta - 1.0) * (left + right) * rgamma(beta)
}

/// Largest per-mode relative gap between `J_beta u_n`, evaluated by quadrature of the
/// point-mass response `u_n`, and the closed-form `v_n`, over the first `n_check` modes
/// and about a dozen nodes.
pub fn transform_consistency(
    e: &EigenDecomposition,
    train: &DeltaTrain,
    alpha: f64,
    beta: f64,
    grid: &TemporalGrid,
    n_check: usize,
) -> f64 {
    let nodes = grid.nodes();
    let stride = (grid.n_steps / 12).max(1);
    let sample: Vec<f64> = nodes.iter().copied().step_by(stride).collect();
    let modes: Vec<usize> = (0..n_check.min(e.n_modes())).collect();
    modes
        .par_iter()
        .map(|&n| {
            let lam = e.lambdas[n];
            let closed = MlKernel::new(alpha, alpha + beta, lam);
            let (mut gap, mut scale) = (0.0f64, 0.0f64);
            for &t in &sample {
                let mut quad = 0.0;
                let mut exact = 0.0;
                for at in train.atoms().iter().filter(|at| t > at.a) {
                    quad += at.r * rl_of_modal_kernel(alpha, beta, lam, t - at.a);
                    exact += at.r * closed.value(t - at.a);
                }
                gap = gap.max((quad - exact).abs());
                scale = scale.max(exact.abs());
            }
            if scale > 0.0 {
                gap / scale
            } else {
                gap
            }
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Implicit L1 time stepping of `(d_t^alpha + A) v = g f`, `v(0) = 0`, with the drift term
/// of `spec` included. First order in time.
pub fn solve_timestep_oracle(
    spec: &OperatorSpec,
    f: &[f64],
    g: &GridFunction,
    alpha: f64,
    grid: &TemporalGrid,
) -> Result<SpaceTimeField> {
    check_alpha(alpha)?;
    grid.ensure_same(&g.grid)?;
    let n = spec.n_interior;
    if f.len() != n {
        return Err(FracError::DimensionMismatch { expected: n, got: f.len() });
    }
    let a = assemble_with_drift(spec);
    let nt = grid.n_steps;
    let c0 = grid.step().powf(-alpha) * rgamma(2.0 - alpha);
    let b = l1_coefficients(alpha, nt);
    let mut out = SpaceTimeField::zeros(*grid, spec.length, n);
    // increments d_j = v^j - v^{j-1}
    let mut incr: Vec<Vec<f64>> = Vec::with_capacity(nt);
    incr.push(vec![0.0; n]);
    for i in 1..nt {
        let mut rhs: Vec<f64> = f.iter().map(|fx| g.values[i] * fx).collect();
        let prev = out.row(i - 1).to_vec();
        for x in 0..n {
            let mut hist = prev[x];
            for k in 1..i {
                hist -= b[k] * incr[i - k][x];
            }
            rhs[x] += c0 * hist;
        }
        let vi = a.solve_shifted(c0, &rhs)?;
        incr.push(vi.iter().zip(&prev).map(|(a, b)| a - b).collect());
        out.row_mut(i).copy_from_slice(&vi);
    }
    Ok(out)
}

/// Relative residual of `(d_t^alpha + A) v = g f` over rows `1..`, with the
/// L1 derivative in time and `a` in space.
pub fn pde_residual(v: &SpaceTimeField, a: &Tridiagonal, f: &[f64], g: &GridFunction, alpha: f64) -> Result<f64> {
    v.grid.ensure_same(&g.grid)?;
    let n = v.n_interior;
    if a.len() != n || f.len() != n {
        return Err(FracError::DimensionMismatch { expected: n, got: f.len() });
    }
    let mut dt = vec![vec![0.0; v.n_steps()]; n];
    for (x, col) in dt.iter_mut().enumerate() {
        let series = GridFunction {
            grid: v.grid,
            values: v.column(x),
        };
        *col = l1_caputo(alpha, &series)?.values;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..v.n_steps() {
        let av = a.matvec(v.row(i));
        for x in 0..n {
            let rhs = g.values[i] * f[x];
            let r = dt[x][i] + av[x] - rhs;
            num += r * r;
            den += rhs * rhs;
        }
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}

/// 2-norm condition number of the per-step matrix `c_0 I + A` of the L1 march.
pub fn marching_condition_number(spec: &OperatorSpec, alpha: f64, grid: &TemporalGrid) -> Result<f64> {
    check_alpha(alpha)?;
    let a = assemble_with_drift(spec);
    let c0 = grid.step().powf(-alpha) / gamma(2.0 - alpha);
    let n = a.len();
    let m = a.to_dense() + DMatrix::identity(n, n) * c0;
    let sv = m.singular_values();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for s in sv.iter() {
        lo = lo.min(*s);
        hi = hi.max(*s);
    }
    if lo == 0.0 {
        return Err(FracError::Singular("marching matrix is singular".into()));
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{caputo, convolve, rl_forward, Atom};
    use crate::spectral::{assemble, eigendecompose};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn laplacian(length: f64, n: usize) -> (OperatorSpec, EigenDecomposition) {
        let spec = OperatorSpec::uniform(length, n, 1.0, 0.0).unwrap();
        let e = eigendecompose(&spec, None).unwrap();
        (spec, e)
    }

    /// Coefficient of mode `m` in every time row.
    fn mode_series(e: &EigenDecomposition, v: &SpaceTimeField, m: usize) -> Vec<f64> {
        (0..v.n_steps()).map(|i| e.inner(v.row(i), &e.modes[m])).collect()
    }

    fn bump(x: &[f64]) -> Vec<f64> {
        x.iter().map(|&x| x * x * (1.0 - x) * (2.0 + x.sin())).collect()
    }

    fn max_rel(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn homogeneous_starts_at_initial_datum() {
        let (spec, e) = laplacian(1.0, 49);
        let f = bump(&spec.nodes());
        let grid = TemporalGrid::new(1.0, 11).unwrap();
        let z = solve_homogeneous(&e, &f, 0.6, &grid).unwrap();
        assert_eq!(z.row(0), f.as_slice());
        assert!(z.tail < 1e-12);
    }

    #[test]
    fn homogeneous_heat_limit() {
        let (spec, e) = laplacian(1.0, 49);
        let f = bump(&spec.nodes());
        let grid = TemporalGrid::new(0.2, 21).unwrap();
        let z = solve_homogeneous(&e, &f, 1.0, &grid).unwrap();
        let c = e.project(&f).unwrap();
        for i in 1..grid.n_steps {
            let t = grid.node(i);
            let heat = e
                .synthesize(&c.iter().zip(&e.lambdas).map(|(c, l)| c * (-l * t).exp()).collect::<Vec<_>>())
                .unwrap();
            let err = z.row(i).iter().zip(&heat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "t = {t}: {err}");
        }
    }

    #[test]
    fn homogeneous_single_mode() {
        // discrete lambda_1 of the Dirichlet Laplacian on (0, pi), 63 interior nodes
        let (_, e) = laplacian(PI, 63);
        assert!((e.lambdas[0] - 0.99979921851159697797).abs() < 1e-12);
        let grid = TemporalGrid::new(4.0, 17).unwrap();
        let z = solve_homogeneous(&e, &e.modes[0], 0.5, &grid).unwrap();
        for (i, want) in [(1, 0.61574181702722215872), (4, 0.42763843829463880701), (16, 0.25543856855745317355)] {
            let got = e.norm(z.row(i));
            assert!((got - want).abs() < 1e-10, "row {i}: {got} vs {want}");
        }
    }

    #[test]
    fn duhamel_examples() {
        let (_, e) = laplacian(1.0, 31);
        let grid = TemporalGrid::new(0.5, 101).unwrap();
        let f = e.modes[0].clone();
        let w = solve_duhamel(&e, &f, &GridFunction::zeros(grid), 0.7, &grid).unwrap();
        assert!(w.values.iter().all(|&v| v == 0.0));
        let one = GridFunction::from_fn(grid, |_| 1.0);
        let w = solve_duhamel(&e, &f, &one, 1.0, &grid).unwrap();
        let lam = e.lambdas[0];
        let got = mode_series(&e, &w, 0);
        for (i, g) in got.iter().enumerate() {
            let want = (1.0 - (-lam * grid.node(i)).exp()) / lam;
            assert!((g - want).abs() < 1e-10 * want.max(1.0), "node {i}");
        }
        let other = TemporalGrid::new(0.5, 51).unwrap();
        assert!(solve_duhamel(&e, &f, &GridFunction::zeros(other), 0.7, &grid).is_err());
    }

    #[test]
    fn modal_convolution_examples() {
        let (_, e) = laplacian(1.0, 31);
        let grid = TemporalGrid::new(1.0, 201).unwrap();
        let f = e.modes[1].clone();
        let v = solve_modal_convolution(&e, &f, &GridFunction::zeros(grid), 0.4, &grid).unwrap();
        assert!(v.values.iter().all(|&x| x == 0.0));
        for alpha in [0.3, 0.6, 0.9] {
            let one = GridFunction::from_fn(grid, |_| 1.0);
            let v = solve_modal_convolution(&e, &f, &one, alpha, &grid).unwrap();
            let lam = e.lambdas[1];
            let got = mode_series(&e, &v, 1);
            for (i, g) in got.iter().enumerate() {
                let want = (1.0 - mittag_leffler::eval(alpha, 1.0, -lam * grid.node(i).powf(alpha))) / lam;
                assert!((g - want).abs() < 1e-10 / lam, "alpha {alpha}, node {i}");
            }
        }
    }

    #[test]
    fn zero_eigenvalue_mode_is_a_fractional_integral() {
        let m = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 2.0]));
        let e = EigenDecomposition::from_symmetric_matrix(m, 1.0, 2).unwrap();
        let grid = TemporalGrid::new(1.0, 81).unwrap();
        let g = GridFunction::from_fn(grid, |t| (3.0 * t).cos() + t);
        let v = solve_modal_convolution(&e, &[1.0, 0.0], &g, 0.45, &grid).unwrap();
        let j = rl_forward(0.45, &g).unwrap();
        for i in 0..grid.n_steps {
            assert!((v.at(i, 0) - j.values[i]).abs() < 1e-12);
            assert_eq!(v.at(i, 1), 0.0);
        }
    }

    #[test]
    fn convolution_commutes_with_caputo() {
        let grid = TemporalGrid::new(1.0, 401).unwrap();
        let alpha = 0.6;
        let g = GridFunction::from_fn(grid, |t| 1.0 + (2.0 * t).sin());
        let v = GridFunction::from_fn(grid, |t| t * t * (1.0 + t).ln() + t);
        let lhs = caputo(alpha, &convolve(&g, &v).unwrap()).unwrap();
        let rhs = convolve(&g, &caputo(alpha, &v).unwrap()).unwrap();
        let err = max_rel(&lhs.values[1..], &rhs.values[1..]);
        assert!(err < tolerances::COMMUTATION, "{err}");
    }

    #[test]
    fn duhamel_and_modal_routes_agree() {
        let (spec, e) = laplacian(1.0, 49);
        let f = bump(&spec.nodes());
        let grid = TemporalGrid::new(1.0, 401).unwrap();
        for alpha in [0.4, 0.75] {
            let g = GridFunction::from_fn(grid, |t| t * (1.0 + t * (3.0 * t).cos()));
            let modal = solve_modal_convolution(&e, &f, &g, alpha, &grid).unwrap();
            let d = caputo(1.0 - alpha, &g).unwrap();
            let duhamel = solve_duhamel(&e, &f, &d, alpha, &grid).unwrap();
            let err = duhamel.relative_l2_error(&modal).unwrap();
            assert!(err < tolerances::ROUTE_CONSISTENCY, "alpha {alpha}: {err}");
        }
    }

    fn oracle_gap(alpha: f64, nt: usize, n: usize) -> f64 {
        let cfg = crate::spectral::OperatorConfig {
            length: 1.0,
            n,
            a: crate::spectral::Coefficient::Expr("1 + x / 2".into()),
            c: crate::spectral::Coefficient::Constant(1.0),
            b: None,
        };
        let spec = OperatorSpec::from_config(&cfg).unwrap();
        let e = eigendecompose(&spec, None).unwrap();
        let f = bump(&spec.nodes());
        let grid = TemporalGrid::new(1.0, nt).unwrap();
        let g = GridFunction::from_fn(grid, |t| 1.0 + (4.0 * t).sin());
        let modal = solve_modal_convolution(&e, &f, &g, alpha, &grid).unwrap();
        let march = solve_timestep_oracle(&spec, &f, &g, alpha, &grid).unwrap();
        march.relative_l2_error(&modal).unwrap()
    }

    #[test]
    fn time_stepping_oracle_agrees_and_converges() {
        for alpha in [0.3, 0.7] {
            let coarse = oracle_gap(alpha, 101, 39);
            let fine = oracle_gap(alpha, 201, 39);
            let h: f64 = 1.0 / 200.0;
            let bound = (tolerances::ORACLE_FACTOR * h.powf(alpha)).max(tolerances::ORACLE_FLOOR);
            assert!(fine < bound, "alpha {alpha}: {fine} vs {bound}");
            assert!(fine < coarse, "alpha {alpha}: {coarse} -> {fine}");
        }
    }

    #[test]
    fn backward_euler_heat_decay() {
        let spec = OperatorSpec::uniform(1.0, 31, 1.0, 0.0).unwrap();
        let e = eigendecompose(&spec, None).unwrap();
        let lam = e.lambdas[0];
        let gap = |nt: usize| {
            let grid = TemporalGrid::new(0.1, nt).unwrap();
            let one = GridFunction::from_fn(grid, |_| 1.0);
            let v = solve_timestep_oracle(&spec, &e.modes[0], &one, 1.0, &grid).unwrap();
            let got = mode_series(&e, &v, 0);
            (0..nt)
                .map(|i| (got[i] - (1.0 - (-lam * grid.node(i)).exp()) / lam).abs())
                .fold(0.0, f64::max)
        };
        let (a, b) = (gap(51), gap(101));
        assert!(a < 5e-3 && (a / b - 2.0).abs() < 0.2, "{a} {b}");
        let grid = TemporalGrid::new(0.1, 11).unwrap();
        let zero = solve_timestep_oracle(&spec, &e.modes[0], &GridFunction::zeros(grid), 0.5, &grid).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oracle_accepts_drift() {
        let mut spec = OperatorSpec::uniform(1.0, 39, 1.0, 0.0).unwrap();
        spec.b = Some(vec![2.0; 39]);
        let grid = TemporalGrid::new(0.5, 51).unwrap();
        let g = GridFunction::from_fn(grid, |_| 1.0);
        let f = bump(&spec.nodes());
        let v = solve_timestep_oracle(&spec, &f, &g, 0.5, &grid).unwrap();
        assert!(v.values.iter().all(|x| x.is_finite()));
        let a = assemble_with_drift(&spec);
        assert!(!a.is_symmetric());
        assert!(pde_residual(&v, &a, &f, &g, 0.5).unwrap() < 1e-12);
    }

    #[test]
    fn residual_gauge() {
        let spec = OperatorSpec::uniform(1.0, 39, 1.0, 0.0).unwrap();
        let e = eigendecompose(&spec, None).unwrap();
        let a = assemble(&spec).unwrap();
        let f = bump(&spec.nodes());
        let grid = TemporalGrid::new(1.0, 101).unwrap();
        let g = GridFunction::from_fn(grid, |t| 1.0 + t);
        let march = solve_timestep_oracle(&spec, &f, &g, 0.6, &grid).unwrap();
        assert!(pde_residual(&march, &a, &f, &g, 0.6).unwrap() < 1e-12);
        let zero = SpaceTimeField::zeros(grid, 1.0, 39);
        assert_eq!(pde_residual(&zero, &a, &f, &g, 0.6).unwrap(), 1.0);
        let modal = solve_modal_convolution(&e, &f, &g, 0.6, &grid).unwrap();
        assert!(pde_residual(&modal, &a, &f, &g, 0.6).unwrap() < 5e-2);
    }

    #[test]
    fn modal_residual_at_production_resolution() {
        let spec = OperatorSpec::uniform(1.0, 199, 1.0, 0.0).unwrap();
        let e = eigendecompose(&spec, None).unwrap();
        let a = assemble(&spec).unwrap();
        let f = bump(&spec.nodes());
        let grid = TemporalGrid::new(1.0, 801).unwrap();
        let g = GridFunction::from_fn(grid, |t| 1.0 + (3.0 * t).sin());
        let v = solve_modal_convolution(&e, &f, &g, 0.5, &grid).unwrap();
        let r = pde_residual(&v, &a, &f, &g, 0.5).unwrap();
        assert!(r < 1e-2, "{r}");
    }

    #[test]
    fn marching_matrix_is_well_conditioned() {
        let spec = OperatorSpec::uniform(1.0, 49, 1.0, 0.0).unwrap();
        let grid = TemporalGrid::new(1.0, 101).unwrap();
        let k = marching_condition_number(&spec, 0.5, &grid).unwrap();
        let lmax = assemble(&spec).unwrap().to_dense().symmetric_eigenvalues().max();
        let c0 = 100f64.sqrt() / gamma(1.5);
        assert!(k > 1.0 && k <= (c0 + lmax) / c0 * 1.0001, "{k}");
    }

    #[test]
    fn single_atom_response() {
        let (_, e) = laplacian(1.0, 31);
        let grid = TemporalGrid::new(1.0, 101).unwrap();
        let (alpha, beta) = (0.6, 0.8);
        let params = FracParams { alpha, beta, theta: 0.0 };
        let a = 0.305;
        let mu = TemporalSource::Atomic(DeltaTrain::new(vec![Atom { a, r: 1.0 }], 1.0).unwrap());
        let sol = solve_singular(&e, &e.modes[0], &mu, &params, &grid).unwrap();
        let u = sol.u_atoms.unwrap();
        let lam = e.lambdas[0];
        let got = mode_series(&e, &u, 0);
        for (i, g) in got.iter().enumerate() {
            let t = grid.node(i);
            let want = if t > a {
                (t - a).powf(alpha - 1.0) * mittag_leffler::eval(alpha, alpha, -lam * (t - a).powf(alpha))
            } else {
                0.0
            };
            assert!((g - want).abs() < 1e-10 * want.abs().max(1.0), "node {i}");
        }
        assert!(sol.transform_mismatch.unwrap() < tolerances::TRANSFORM_CONSISTENCY);
    }

    #[test]
    fn point_mass_is_the_limit_of_narrow_bumps() {
        // u-coefficient of one mode for mu = delta_a, against square pulses of width w
        let (_, e) = laplacian(1.0, 15);
        let (alpha, a): (f64, f64) = (0.5, 0.3);
        let lam = e.lambdas[0];
        let t: f64 = 0.8;
        let exact = (t - a).powf(alpha - 1.0) * mittag_leffler::eval(alpha, alpha, -lam * (t - a).powf(alpha));
        let mut gaps = Vec::new();
        for w in [0.04, 0.02, 0.01] {
            let grid = TemporalGrid::new(t, 8001).unwrap();
            let g = GridFunction::from_fn(grid, |s| if (s - a).abs() < 0.5 * w { 1.0 / w } else { 0.0 });
            let v = solve_modal_convolution(&e, &e.modes[0], &g, alpha, &grid).unwrap();
            let got = e.inner(v.row(grid.n_steps - 1), &e.modes[0]);
            gaps.push((got - exact).abs() / exact);
        }
        assert!(gaps[2] < gaps[1] && gaps[1] < gaps[0] && gaps[2] < 1e-2, "{gaps:?}");
    }

    #[test]
    fn two_atoms_superpose() {
        let (spec, e) = laplacian(1.0, 31);
        let f = bump(&spec.nodes());
        let grid = TemporalGrid::new(1.0, 81).unwrap();
        let params = FracParams { alpha: 0.5, beta: 0.75, theta: 0.0 };
        let solve = |atoms: Vec<Atom>| {
            let mu = TemporalSource::Atomic(DeltaTrain::new(atoms, 1.0).unwrap());
            solve_singular(&e, &f, &mu, &params, &grid).unwrap()
        };
        let both = solve(vec![Atom { a: 0.25, r: 2.0 }, Atom { a: 0.75, r: 3.0 }]);
        let first = solve(vec![Atom { a: 0.25, r: 1.0 }]);
        let second = solve(vec![Atom { a: 0.75, r: 1.0 }]);
        for (field, one, two) in [
            (both.u_atoms.as_ref().unwrap(), first.u_atoms.as_ref().unwrap(), second.u_atoms.as_ref().unwrap()),
            (&both.v, &first.v, &second.v),
        ] {
            for j in 0..field.values.len() {
                let want = 2.0 * one.values[j] + 3.0 * two.values[j];
                assert!((field.values[j] - want).abs() < 1e-12 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn regular_sources_share_the_modal_path() {
        let (spec, e) = laplacian(1.0, 31);
        let f = bump(&spec.nodes());
        let grid = TemporalGrid::new(1.0, 81).unwrap();
        let params = FracParams { alpha: 0.5, beta: 0.75, theta: 0.0 };
        let mu = GridFunction::from_fn(grid, |t| (2.0 * t).cos());
        let sol = solve_singular(&e, &f, &TemporalSource::Regular(mu.clone()), &params, &grid).unwrap();
        let direct = solve_modal_convolution(&e, &f, &rl_forward(0.75, &mu).unwrap(), 0.5, &grid).unwrap();
        assert_eq!(sol.v, direct);
        assert!(sol.u_atoms.is_none());
        let bad = FracParams { alpha: 0.8, beta: 0.6, theta: 0.0 };
        assert!(matches!(
            solve_singular(&e, &f, &TemporalSource::Regular(mu), &bad, &grid),
            Err(FracError::ParamChain(_))
        ));
    }

    #[test]
    fn decay_bound() {
        let (spec, e) = laplacian(1.0, 49);
        let f: Vec<f64> = spec.nodes().iter().map(|x| if *x < 0.4 { 1.0 } else { 0.2 }).collect();
        let grid = TemporalGrid::new(2.0, 41).unwrap();
        for alpha in [0.3, 0.8] {
            let z = solve_homogeneous(&e, &f, alpha, &grid).unwrap();
            let norms: Vec<f64> = (0..grid.n_steps).map(|i| e.norm(z.row(i))).collect();
            assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            for (i, nz) in norms.iter().enumerate() {
                let bound = mittag_leffler::eval(alpha, 1.0, -e.lambdas[0] * grid.node(i).powf(alpha)) * e.norm(&f);
                assert!(*nz <= bound * (1.0 + 1e-10));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn solvers_are_linear(s in -3.0f64..3.0, p in 0.0f64..6.0, alpha in 0.2f64..1.0) {
            let (spec, e) = laplacian(1.0, 15);
            let grid = TemporalGrid::new(1.0, 21).unwrap();
            let f1 = bump(&spec.nodes());
            let f2: Vec<f64> = spec.nodes().iter().map(|x| (p * x).cos()).collect();
            let g = GridFunction::from_fn(grid, |t| 1.0 + (p * t).sin());
            let mix: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| s * a + b).collect();
            let whole = solve_modal_convolution(&e, &mix, &g, alpha, &grid).unwrap();
            let a = solve_modal_convolution(&e, &f1, &g, alpha, &grid).unwrap();
            let b = solve_modal_convolution(&e, &f2, &g, alpha, &grid).unwrap();
            for j in 0..whole.values.len() {
                let want = s * a.values[j] + b.values[j];
                prop_assert!((whole.values[j] - want).abs() < 1e-12 * (1.0 + want.abs()));
            }
            let sg = GridFunction::from_fn(grid, |t| s * (1.0 + (p * t).sin()));
            let scaled = solve_modal_convolution(&e, &f1, &sg, alpha, &grid).unwrap();
            for j in 0..scaled.values.len() {
                prop_assert!((scaled.values[j] - s * a.values[j]).abs() < 1e-12 * (1.0 + a.values[j].abs()));
            }
        }

        #[test]
        fn modal_output_is_reproducible(alpha in 0.2f64..1.0) {
            let (spec, e) = laplacian(1.0, 31);
            let grid = TemporalGrid::new(1.0, 41).unwrap();
            let f = bump(&spec.nodes());
            let g = GridFunction::from_fn(grid, |t| t.cos());
            let a = solve_modal_convolution(&e, &f, &g, alpha, &grid).unwrap();
            let b = solve_modal_convolution(&e, &f, &g, alpha, &grid).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
