//! Acceptance suite on the reference configuration: `Omega = (0, 1)`, `a = 1`, `c = 0`,
//! `alpha = 0.5`, `beta = 0.75`, `T = 1`, 101 time nodes, 99 interior nodes.
//!
//! Every criterion returns an [`Outcome`] listing the measured quantities next to
//! their limits. Nothing here depends on wall-clock time, so the serialized report
//! is reproducible bit for bit.

use crate::error::Result;
use crate::forward::{solve_duhamel, solve_modal_convolution, solve_singular, solve_timestep_oracle};
use crate::fractional::{caputo, convolve, rl_forward, Atom, DeltaTrain, FracParams, GridFunction, TemporalGrid, TemporalSource};
use crate::inverse::{
    asymptotic_diagnostic, build_forward_map_f, build_point_kernel, build_point_kernel_of_order, injectivity_report,
    max_principle_violations, oracle_data, recover_delta_train, recover_f, recover_mu_l2, relative_error, rms,
    RegularizationKind, RegularizationSpec, WeightSelection,
};
use crate::mittag_leffler::{eval as ml, regimes, MlKernel};
use crate::quadrature::composite_gauss;
use crate::spectral::{eigendecompose, EigenDecomposition, ObservationSpec, OperatorSpec};
use crate::special::{gamma, rgamma};
use crate::tolerances as tol;
use crate::ml_asymptotic_leading;
use serde::Serialize;
use std::f64::consts::PI;

pub const ALPHA: f64 = 0.5;
pub const BETA: f64 = 0.75;
pub const HORIZON: f64 = 1.0;
pub const TIME_NODES: usize = 101;
pub const INTERIOR_NODES: usize = 99;
/// Criteria computed by [`run`]; the determinism criterion is checked by rerunning it.
pub const CRITERIA: [u32; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// One measured quantity against its limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `"<="`, `">="`, `"<"` or `">"`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check::new(name, value, limit, "<=", value <= limit)
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check::new(name, value, limit, ">=", value >= limit)
    }

    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check::new(name, value, limit, "<", value < limit)
    }

    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check::new(name, value, limit, ">", value > limit)
    }

    fn new(name: impl Into<String>, value: f64, limit: f64, relation: &'static str, passed: bool) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            relation,
            passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Set when a computation failed before all checks could run.
    pub error: Option<String>,
}

impl Outcome {
    fn from_checks(id: u32, checks: Vec<Check>) -> Self {
        Outcome {
            id,
            title: title(id).to_string(),
            passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
            checks,
            error: None,
        }
    }

    /// `criterion 3 [PASS] asymptotics: name = value (<= limit); ..`
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let mark = if c.passed { "" } else { " !" };
                format!("{} = {:.3e} ({} {:.1e}){mark}", c.name, c.value, c.relation, c.limit)
            })
            .collect();
        if let Some(e) = &self.error {
            parts.push(format!("error: {e}"));
        }
        format!("criterion {} [{verdict}] {}: {}", self.id, self.title, parts.join("; "))
    }
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "special functions",
        2 => "kernel identities",
        3 => "asymptotics",
        4 => "operator calculus",
        5 => "transform pipeline",
        6 => "duhamel routes",
        7 => "inverse-f",
        8 => "inverse-mu",
        9 => "long-time diagnostic",
        10 => "determinism",
        _ => "unknown",
    }
}

/// Runs criterion `id` (1 to 9). A numerical error becomes a failed outcome.
pub fn run(id: u32) -> Outcome {
    let checks = match id {
        1 => special_functions(),
        2 => kernel_identities(),
        3 => asymptotics(),
        4 => operator_calculus(),
        5 => transform_pipeline(),
        6 => duhamel_routes(),
        7 => inverse_f(),
        8 => inverse_mu(),
        9 => long_time(),
        _ => Err(crate::FracError::Invalid(format!("no acceptance criterion {id}"))),
    };
    match checks {
        Ok(c) => Outcome::from_checks(id, c),
        Err(e) => Outcome {
            id,
            title: title(id).to_string(),
            passed: false,
            checks: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().map(|&id| run(id)).collect()
}

/// Positive spatial factor used throughout.
pub fn reference_f(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&x| (PI * x).sin() * (1.0 + 0.5 * x)).collect()
}

fn reference_operator(n: usize) -> Result<(OperatorSpec, EigenDecomposition)> {
    let spec = OperatorSpec::uniform(1.0, n, 1.0, 0.0)?;
    let e = eigendecompose(&spec, None)?;
    Ok((spec, e))
}

fn reference_grid() -> Result<TemporalGrid> {
    TemporalGrid::new(HORIZON, TIME_NODES)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

fn special_functions() -> Result<Vec<Check>> {
    let exp_gap = (0..=5000)
        .map(|i| {
            let x = i as f64 * 0.01;
            (ml(1.0, 1.0, -x) - (-x).exp()).abs()
        })
        .fold(0.0, f64::max);

    let mut overlap: f64 = 0.0;
    for a in [0.8, 0.9, 0.95] {
        for b in [1.0, a] {
            for i in 0..=40 {
                let z = -(4.0 + 2.0 * i as f64 / 40.0);
                let q = regimes::integral(a, b, z);
                overlap = match regimes::series(a, b, z) {
                    Some(s) => overlap.max((s - q).abs()),
                    None => f64::INFINITY,
                };
            }
        }
    }

    // E_{alpha,1}(-x) on x in [1e-3, 1e3]: nonnegative, nonincreasing, convex
    let xs = log_space(1e-3, 1e3, 241);
    let mut violations = 0usize;
    for a in [0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
        let v: Vec<f64> = xs.iter().map(|&x| ml(a, 1.0, -x)).collect();
        violations += v.iter().filter(|&&y| y < 0.0).count();
        violations += v.windows(2).filter(|w| w[1] > w[0]).count();
        let slopes: Vec<f64> = (1..xs.len()).map(|i| (v[i] - v[i - 1]) / (xs[i] - xs[i - 1])).collect();
        violations += slopes
            .windows(2)
            .filter(|s| s[1] < s[0] - 1e-9 * s[0].abs())
            .count();
    }

    Ok(vec![
        Check::at_most("exp_identity_max_abs", exp_gap, tol::ML_EXP_IDENTITY),
        Check::at_most("regime_overlap_max_abs", overlap, tol::ML_REGIME_OVERLAP),
        Check::at_most("monotonicity_violations", violations as f64, 0.0),
    ])
}

fn kernel_identities() -> Result<Vec<Check>> {
    let mut worst_order = f64::INFINITY;
    for a in [0.3, 0.5, 0.8] {
        for lam in [1.0, 10.0, 100.0] {
            let t = 0.7;
            let lhs = lam * MlKernel::new(a, a, lam).value(t);
            let fd = |h: f64| -(ml(a, 1.0, -lam * (t + h).powf(a)) - ml(a, 1.0, -lam * (t - h).powf(a))) / (2.0 * h);
            let order = ((fd(1e-2) - lhs).abs() / (fd(5e-3) - lhs).abs()).log2();
            worst_order = worst_order.min(order);
        }
    }

    let mut integral_gap: f64 = 0.0;
    for a in [0.3, 0.5, 0.8] {
        for lam in [1.0, 10.0, 100.0] {
            // t = s^(1/alpha) turns the integrand into lambda/alpha E_{alpha,alpha}(-lambda s)
            let edges: Vec<f64> = (0..=400).map(|i| (i as f64 / 400.0).powi(2)).collect();
            let quad = composite_gauss(|s| lam / a * ml(a, a, -lam * s), &edges, 10);
            integral_gap = integral_gap.max((quad - (1.0 - ml(a, 1.0, -lam))).abs());
        }
    }

    let ts = log_space(1e-4, 1e2, 10_000);
    let mut negative = 0usize;
    for a in [0.1, 0.5, 0.9] {
        for lam in [1.0, 100.0] {
            let k = MlKernel::new(a, a, lam);
            negative += ts.iter().filter(|&&t| !(k.value(t) >= 0.0)).count();
        }
    }

    Ok(vec![
        Check::at_least("derivative_identity_order", worst_order, tol::ML_DERIVATIVE_ORDER),
        Check::at_most("integral_identity_max_abs", integral_gap, tol::ML_INTEGRAL_IDENTITY),
        Check::at_most("kernel_sign_violations", negative as f64, 0.0),
    ])
}

/// `R = |E_{alpha,1}(-rho t^alpha) - leading| rho^2 t^(2 alpha)`, maximized over the sample.
fn scaled_residual(alpha: f64, ts: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for rho in [1.0, 10.0, 100.0] {
        for &t in ts {
            let x = rho * t.powf(alpha);
            let r = (ml(alpha, 1.0, -x) - ml_asymptotic_leading(alpha, rho, t)?).abs() * x * x;
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

fn asymptotics() -> Result<Vec<Check>> {
    // C is calibrated on one sample per decade; the bound C / (rho t^alpha)^2 must then
    // hold with 20% slack on a sample fifteen times denser.
    let coarse = log_space(10.0, 1e4, 4);
    let fine = log_space(10.0, 1e4, 46);
    let mut checks = Vec::new();
    for alpha in [0.3, 0.5, 0.8] {
        let c = scaled_residual(alpha, &coarse)?;
        let c_fine = scaled_residual(alpha, &fine)?;
        checks.push(Check::at_most(
            format!("bound_ratio_alpha_{alpha}"),
            c_fine / c,
            1.0 + tol::ASYMPTOTIC_CONSTANT_DRIFT,
        ));
    }
    Ok(checks)
}

fn operator_calculus() -> Result<Vec<Check>> {
    let smooth = |g: TemporalGrid, c: [f64; 4]| {
        GridFunction::from_fn(g, |t| {
            c[0] * t + c[1] * (3.0 * t).sin() + c[2] * t * t * (1.5 - t) + c[3] * (1.0 - (-2.0 * t).exp())
        })
    };
    let g401 = TemporalGrid::new(HORIZON, 401)?;
    let v = smooth(g401, [1.0, 0.7, -0.4, 0.3]);
    let mut semigroup: f64 = 0.0;
    for (p, q) in [(0.3, 0.4), (0.4, 0.3), (ALPHA, 0.25), (0.25, ALPHA), (ALPHA, 0.45)] {
        let direct = rl_forward(p + q, &v)?;
        let nested = rl_forward(p, &rl_forward(q, &v)?)?;
        semigroup = semigroup.max(max_abs_diff(&nested.values, &direct.values));
    }

    let grid = reference_grid()?;
    let mut round_trip: f64 = 0.0;
    for (c, o) in [([1.0, 0.7, -0.4, 0.3], ALPHA), ([-2.0, 1.5, 1.0, -0.5], 0.2), ([0.5, -1.0, 2.0, 1.0], 0.8)] {
        let w = smooth(grid, c);
        let back = caputo(o, &rl_forward(o, &w)?)?;
        round_trip = round_trip.max(max_abs_diff(&back.values, &w.values));
    }

    // J_o t^p = Gamma(p+1)/Gamma(p+1+o) t^(p+o), p in {0, 1}: exact for piecewise linears
    let mut monomial: f64 = 0.0;
    for o in [0.2, ALPHA, BETA, 0.9] {
        for p in [0.0f64, 1.0] {
            let j = rl_forward(o, &GridFunction::from_fn(grid, |t| t.powf(p)))?;
            for (t, got) in grid.nodes().iter().zip(&j.values) {
                let want = gamma(p + 1.0) * rgamma(p + 1.0 + o) * t.powf(p + o);
                monomial = monomial.max((got - want).abs());
            }
        }
    }

    Ok(vec![
        Check::at_most("semigroup_max_abs", semigroup, tol::SEMIGROUP),
        Check::at_most("caputo_round_trip_max_abs", round_trip, tol::CAPUTO_ROUND_TRIP),
        Check::at_most("monomial_max_abs", monomial, 1e-12),
    ])
}

fn transform_pipeline() -> Result<Vec<Check>> {
    let (spec, e) = reference_operator(INTERIOR_NODES)?;
    let grid = reference_grid()?;
    let f = reference_f(&spec.nodes());
    let params = FracParams {
        alpha: ALPHA,
        beta: BETA,
        theta: 0.0,
    };
    let delta = TemporalSource::Atomic(DeltaTrain::new(vec![Atom { a: 0.5, r: 1.0 }], HORIZON)?);
    let sol = solve_singular(&e, &f, &delta, &params, &grid)?;
    let mismatch = sol.transform_mismatch.unwrap_or(f64::INFINITY);

    let mu = GridFunction::from_fn(grid, |t| 1.0 + (2.0 * PI * t).sin());
    let via_singular = solve_singular(&e, &f, &TemporalSource::Regular(mu.clone()), &params, &grid)?;
    let direct = solve_modal_convolution(&e, &f, &rl_forward(BETA, &mu)?, ALPHA, &grid)?;
    let differing = via_singular
        .v
        .values
        .iter()
        .zip(&direct.values)
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();

    Ok(vec![
        Check::at_most("delta_per_mode_mismatch", mismatch, tol::TRANSFORM_CONSISTENCY),
        Check::at_most("l2_path_differing_entries", differing as f64, 0.0),
    ])
}

fn duhamel_routes() -> Result<Vec<Check>> {
    let (spec, e) = reference_operator(INTERIOR_NODES)?;
    let f = reference_f(&spec.nodes());
    let source = |t: f64| t * (1.0 + t * (3.0 * t).cos());

    let g401 = TemporalGrid::new(HORIZON, 401)?;
    let gs = GridFunction::from_fn(g401, |t| 1.0 + (2.0 * t).sin());
    let vs = GridFunction::from_fn(g401, |t| t * t * (1.0 + t).ln() + t);
    let lhs = caputo(ALPHA, &convolve(&gs, &vs)?)?;
    let rhs = convolve(&gs, &caputo(ALPHA, &vs)?)?;
    let scale = rhs.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let commutation = max_abs_diff(&lhs.values[1..], &rhs.values[1..]) / scale;

    let g = GridFunction::from_fn(g401, source);
    let modal = solve_modal_convolution(&e, &f, &g, ALPHA, &g401)?;
    let duhamel = solve_duhamel(&e, &f, &caputo(1.0 - ALPHA, &g)?, ALPHA, &g401)?;
    let routes = duhamel.relative_l2_error(&modal)?;

    let gaps = |nt: usize| -> Result<(f64, f64)> {
        let grid = TemporalGrid::new(HORIZON, nt)?;
        let g = GridFunction::from_fn(grid, source);
        let march = solve_timestep_oracle(&spec, &f, &g, ALPHA, &grid)?;
        let modal = solve_modal_convolution(&e, &f, &g, ALPHA, &grid)?;
        let duhamel = solve_duhamel(&e, &f, &caputo(1.0 - ALPHA, &g)?, ALPHA, &grid)?;
        Ok((march.relative_l2_error(&modal)?, march.relative_l2_error(&duhamel)?))
    };
    let (modal_coarse, duhamel_coarse) = gaps(TIME_NODES)?;
    let (modal_fine, duhamel_fine) = gaps(2 * TIME_NODES - 1)?;
    let h = HORIZON / (TIME_NODES - 1) as f64;
    let bound = (tol::ORACLE_FACTOR * h.powf(ALPHA)).max(tol::ORACLE_FLOOR);

    Ok(vec![
        Check::at_most("commutation_max_rel", commutation, tol::COMMUTATION),
        Check::at_most("route_consistency_rel_l2", routes, tol::ROUTE_CONSISTENCY),
        Check::at_most("oracle_gap_modal", modal_coarse, bound),
        Check::at_most("oracle_gap_duhamel", duhamel_coarse, bound),
        Check::below("oracle_halving_ratio_modal", modal_fine / modal_coarse, 1.0),
        Check::below("oracle_halving_ratio_duhamel", duhamel_fine / duhamel_coarse, 1.0),
    ])
}

fn inverse_f() -> Result<Vec<Check>> {
    let (spec, e) = reference_operator(INTERIOR_NODES)?;
    let grid = reference_grid()?;
    let f = reference_f(&spec.nodes());
    // mu = 1, so g = J_beta 1 = t^beta / Gamma(1 + beta)
    let g_fn = |t: f64| t.powf(BETA) * rgamma(1.0 + BETA);
    let g = GridFunction::from_fn(grid, g_fn);
    let obs = ObservationSpec::interval(&spec, 0.375, 0.625)?;
    let fmap = build_forward_map_f(&e, &g, ALPHA, &obs, &grid)?;
    let data = fmap.observe(&oracle_data(&spec, &f, g_fn, ALPHA, &grid)?)?;
    // Noiseless data still carry the oracle's discretization error; the weight
    // follows the discrepancy principle at that level.
    let model_gap: Vec<f64> = data.iter().zip(fmap.apply(&f)).map(|(d, m)| d - m).collect();
    let reg = RegularizationSpec {
        kind: RegularizationKind::RidgeOnDerivative,
        weight: 0.0,
        selection: WeightSelection::Discrepancy {
            noise_level: rms(&model_gap),
        },
    };
    let rec = recover_f(&data, &fmap, &reg)?;
    let round_trip = relative_error(&rec.f, &f);

    let mut checks = vec![Check::at_most("round_trip_rel_l2", round_trip, tol::INVERSE_F)];
    for (n, nt) in [(25, 26), (49, 51), (INTERIOR_NODES, TIME_NODES)] {
        let (spec, e) = reference_operator(n)?;
        let grid = TemporalGrid::new(HORIZON, nt)?;
        let g = GridFunction::from_fn(grid, g_fn);
        let obs = ObservationSpec::interval(&spec, 0.375, 0.625)?;
        let rep = injectivity_report(&build_forward_map_f(&e, &g, ALPHA, &obs, &grid)?);
        checks.push(Check::above(format!("sigma_min_ratio_n{n}"), rep.sigma_min / rep.sigma_max, 0.0));
    }

    let zero = recover_f(&vec![0.0; fmap.n_rows()], &fmap, &RegularizationSpec::ridge(1e-12))?;
    let nonzero = zero.f.iter().filter(|&&v| v != 0.0).count();
    checks.push(Check::at_most("zero_data_nonzero_entries", nonzero as f64, 0.0));
    Ok(checks)
}

fn inverse_mu() -> Result<Vec<Check>> {
    let (spec, e) = reference_operator(INTERIOR_NODES)?;
    let grid = reference_grid()?;
    let f = reference_f(&spec.nodes());
    let x0 = INTERIOR_NODES / 2;
    let mu = |t: f64| 1.0 + (2.0 * PI * t).sin();
    let d = GridFunction {
        grid,
        values: oracle_data(&spec, &f, mu, ALPHA, &grid)?.column(x0),
    };
    let k = build_point_kernel(&e, &f, ALPHA, x0, &grid)?;
    let reg = RegularizationSpec {
        kind: RegularizationKind::RidgeOnDerivative,
        weight: 1e-12,
        selection: WeightSelection::Fixed,
    };
    let rec = recover_mu_l2(&d, &k, &reg)?;
    let truth: Vec<f64> = grid.nodes().iter().map(|&t| mu(t)).collect();
    let smooth_err = relative_error(&rec.mu.values[2..], &truth[2..]);

    // data on v = J_beta u at x = 0.5, from the spectral route on a space grid twice as fine
    let truth = DeltaTrain::new(vec![Atom { a: 0.25, r: 2.0 }, Atom { a: 0.75, r: 3.0 }], HORIZON)?;
    let (fine_spec, fine_e) = reference_operator(2 * INTERIOR_NODES + 1)?;
    let fine_k = build_point_kernel_of_order(&fine_e, &reference_f(&fine_spec.nodes()), ALPHA, ALPHA + BETA, INTERIOR_NODES, &grid)?;
    let data = fine_k.atom_response(&truth);
    let k = build_point_kernel_of_order(&e, &f, ALPHA, ALPHA + BETA, x0, &grid)?;
    let fit = recover_delta_train(&data, &k, 4, 1e-3)?;
    let atoms = fit.atoms();
    let mut checks = vec![
        Check::at_most("smooth_mu_rel_l2", smooth_err, tol::INVERSE_MU),
        Check::at_most("atom_count_error", (atoms.len() as f64 - 2.0).abs(), 0.0),
    ];
    if atoms.len() == 2 {
        let loc = atoms.iter().zip(truth.atoms()).map(|(p, q)| (p.a - q.a).abs()).fold(0.0, f64::max);
        let wt = atoms
            .iter()
            .zip(truth.atoms())
            .map(|(p, q)| (p.r - q.r).abs() / q.r.abs())
            .fold(0.0, f64::max);
        checks.push(Check::at_most("atom_location_error", loc, grid.step()));
        checks.push(Check::at_most("atom_weight_rel_error", wt, tol::ATOM_WEIGHT));
    }
    Ok(checks)
}

fn long_time() -> Result<Vec<Check>> {
    let (spec, e) = reference_operator(INTERIOR_NODES)?;
    let f = reference_f(&spec.nodes());
    let diag = asymptotic_diagnostic(&e, &f, ALPHA, INTERIOR_NODES / 2, None)?;
    Ok(vec![
        Check::at_most("coefficient_rel_gap", diag.relative_gap, tol::ASYMPTOTIC_FIT),
        Check::above("inverse_operator_at_x0", diag.s, 0.0),
        Check::at_most("m_matrix_violations", max_principle_violations(&spec)? as f64, 0.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_compare_in_the_stated_direction() {
        assert!(Check::at_most("x", 1.0, 1.0).passed);
        assert!(!Check::below("x", 1.0, 1.0).passed);
        assert!(Check::at_least("x", 2.0, 1.0).passed);
        assert!(!Check::above("x", f64::NAN, 0.0).passed);
        assert!(!Check::at_most("x", f64::NAN, 1.0).passed);
    }

    #[test]
    fn outcome_needs_every_check() {
        let o = Outcome::from_checks(4, vec![Check::at_most("a", 0.0, 1.0), Check::at_most("b", 2.0, 1.0)]);
        assert!(!o.passed);
        assert!(o.line().starts_with("criterion 4 [FAIL] operator calculus:"));
        assert!(!Outcome::from_checks(4, Vec::new()).passed);
        assert!(!run(11).passed);
    }
}
