use crate::config::{sample_spatial, Experiment, ExperimentConfig};
use fracsrc_core::acceptance::{self, Check, Outcome};
use fracsrc_core::forward::{pde_residual, solve_singular, solve_timestep_oracle, SpaceTimeField};
use fracsrc_core::fractional::regularize_source;
use fracsrc_core::inverse::{
    add_noise, build_forward_map_f, build_forward_map_f_modal, build_point_kernel, build_point_kernel_of_order,
    injectivity_report, recover_delta_train, recover_f, recover_mu_l2, relative_error, rms, Parameterization,
    RegularizationSpec, WeightSelection,
};
use fracsrc_core::io::{fmt_f64, write_json};
use fracsrc_core::spectral::{assemble, eigendecompose, ObservationSpec, OperatorSpec};
use fracsrc_core::{ml_eval, FracError, GridFunction, MLParams, Result, TemporalSource};
use serde::Serialize;
use serde_json::json;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn prepare(config: &Path) -> Result<Experiment> {
    let exp = ExperimentConfig::load(config)?.validate()?;
    fs::create_dir_all(&exp.config.output_dir)?;
    Ok(exp)
}

fn out(exp: &Experiment, name: &str) -> PathBuf {
    exp.config.output_dir.join(name)
}

/// Writes to `path`, or to standard output when it is `None`.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn ml(alpha: f64, beta: f64, xmax: f64, n: usize, output: Option<&Path>) -> Result<()> {
    let p = MLParams::new(alpha, beta)?;
    if !(xmax >= 0.0 && xmax.is_finite()) || n < 2 {
        return Err(FracError::Invalid(format!("need xmax >= 0 and n >= 2, got {xmax}, {n}")));
    }
    let mut w = csv::Writer::from_writer(sink(output)?);
    w.write_record(["x", "value"]).map_err(FracError::from)?;
    for i in 0..n {
        let x = xmax * i as f64 / (n - 1) as f64;
        w.write_record([fmt_f64(x), fmt_f64(ml_eval(p, -x)?)]).map_err(FracError::from)?;
    }
    w.flush()?;
    Ok(())
}

pub fn transform(config: &Path) -> Result<()> {
    let exp = prepare(config)?;
    let g = regularize_source(exp.params.beta, &exp.source, &exp.grid)?;
    g.write_csv(create(&out(&exp, "transform.csv"))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Solver {
    /// Spectral convolution with closed-form atom responses.
    Spectral,
    /// L1 time stepping of the regularized problem.
    Oracle,
}

pub fn forward(config: &Path, solver: Solver) -> Result<()> {
    let exp = prepare(config)?;
    let alpha = exp.params.alpha;
    let (g, v, u, mismatch) = match solver {
        Solver::Spectral => {
            let e = eigendecompose(&exp.spec, None)?;
            let sol = solve_singular(&e, &exp.f, &exp.source, &exp.params, &exp.grid)?;
            (sol.g, sol.v, sol.u_atoms, sol.transform_mismatch)
        }
        Solver::Oracle => {
            let g = regularize_source(exp.params.beta, &exp.source, &exp.grid)?;
            let v = solve_timestep_oracle(&exp.spec, &exp.f, &g, alpha, &exp.grid)?;
            (g, v, None, None)
        }
    };
    v.write_csv(create(&out(&exp, "field.csv"))?)?;
    v.write_fstf(create(&out(&exp, "field.fstf"))?)?;
    g.write_csv(create(&out(&exp, "transform.csv"))?)?;
    if let Some(u) = &u {
        u.write_csv(create(&out(&exp, "u_field.csv"))?)?;
    }
    let residual = if exp.spec.b.is_none() {
        Some(pde_residual(&v, &assemble(&exp.spec)?, &exp.f, &g, alpha)?)
    } else {
        None
    };
    let summary = json!({
        "solver": format!("{solver:?}").to_lowercase(),
        "n_steps": exp.grid.n_steps,
        "n_interior": exp.spec.n_interior,
        "field_l2_norm": v.l2_norm(),
        "pde_residual": residual,
        "transform_mismatch": mismatch,
    });
    write_json(create(&out(&exp, "summary.json"))?, &summary)
}

/// Noise with standard deviation `level * rms(data)`; returns that deviation.
fn perturb(data: &mut [f64], level: f64, seed: u64) -> Result<f64> {
    let sigma = level * rms(data);
    if sigma > 0.0 {
        add_noise(data, sigma, seed)?;
    }
    Ok(sigma)
}

/// A discrepancy rule with `noise_level = 0` uses the level of the injected noise.
fn injected_level(reg: RegularizationSpec, sigma: f64) -> RegularizationSpec {
    match reg.selection {
        WeightSelection::Discrepancy { noise_level } if noise_level == 0.0 => RegularizationSpec {
            selection: WeightSelection::Discrepancy { noise_level: sigma },
            ..reg
        },
        _ => reg,
    }
}

/// Observations of the time-stepping oracle run at twice the time resolution.
fn oracle_field(exp: &Experiment, spec: &OperatorSpec, f: &[f64], source: &TemporalSource, transform: bool) -> Result<SpaceTimeField> {
    let fine = exp.grid.refined(2);
    let src = exp.config.source.build(fine)?;
    let g = if transform {
        regularize_source(exp.params.beta, &src, &fine)?
    } else {
        src.regular()
            .cloned()
            .ok_or_else(|| FracError::Invalid(format!("a regular temporal factor is required, got {source:?}")))?
    };
    solve_timestep_oracle(spec, f, &g, exp.params.alpha, &fine)?.downsample(2, 1)
}

pub fn invert_f(config: &Path) -> Result<()> {
    let exp = prepare(config)?;
    let obs = match &exp.observation {
        Some(o @ ObservationSpec::Subdomain { .. }) => o.clone(),
        _ => return Err(FracError::Invalid("invert-f needs an interval observation".into())),
    };
    let alpha = exp.params.alpha;
    let e = eigendecompose(&exp.spec, None)?;
    let g = regularize_source(exp.params.beta, &exp.source, &exp.grid)?;
    let fmap = match exp.config.inverse.parameterization {
        Parameterization::Nodal => build_forward_map_f(&e, &g, alpha, &obs, &exp.grid)?,
        Parameterization::Modal { n_modes } => build_forward_map_f_modal(&e, &g, alpha, &obs, &exp.grid, n_modes)?,
    };
    let mut data = fmap.observe(&oracle_field(&exp, &exp.spec, &exp.f, &exp.source, true)?)?;
    let sigma = perturb(&mut data, exp.config.inverse.noise, exp.config.seed)?;
    let rec = recover_f(&data, &fmap, &injected_level(exp.regularization, sigma))?;
    let inj = injectivity_report(&fmap);

    let mut w = csv::Writer::from_writer(create(&out(&exp, "f_reconstruction.csv"))?);
    w.write_record(["x", "f_true", "f_recovered"]).map_err(FracError::from)?;
    for ((x, t), r) in exp.spec.nodes().iter().zip(&exp.f).zip(&rec.f) {
        w.write_record([fmt_f64(*x), fmt_f64(*t), fmt_f64(*r)]).map_err(FracError::from)?;
    }
    w.flush()?;
    let diag = json!({
        "relative_error": relative_error(&rec.f, &exp.f),
        "weight": rec.fit.weight,
        "residual": rec.fit.residual,
        "relative_residual": rec.fit.relative_residual,
        "discrepancy_met": rec.fit.discrepancy_met,
        "noise_sigma": sigma,
        "n_data": data.len(),
        "n_unknowns": fmap.n_unknowns(),
        "injectivity": {
            "sigma_max": inj.sigma_max,
            "sigma_min": inj.sigma_min,
            "condition_number": inj.condition_number,
            "numerical_rank": inj.numerical_rank,
            "numerically_unique": inj.numerically_unique,
        },
    });
    write_json(create(&out(&exp, "diagnostics.json"))?, &diag)
}

pub fn invert_mu(config: &Path) -> Result<()> {
    let exp = prepare(config)?;
    let x0 = match exp.observation {
        Some(ObservationSpec::Point { index }) => index,
        _ => return Err(FracError::Invalid("invert-mu needs a point observation".into())),
    };
    let alpha = exp.params.alpha;
    let e = eigendecompose(&exp.spec, None)?;
    let inv = &exp.config.inverse;
    let diag = match &exp.source {
        TemporalSource::Atomic(truth) => {
            // data on v = J_beta u from the spectral route on a space grid twice as fine
            let order = alpha + exp.params.beta;
            let mut fine_cfg = exp.config.operator.clone();
            fine_cfg.n = 2 * exp.spec.n_interior + 1;
            let fine_spec = OperatorSpec::from_config(&fine_cfg)?;
            let fine_e = eigendecompose(&fine_spec, None)?;
            let fine_f = sample_spatial(&exp.config.f, &fine_spec)?;
            let fine_k = build_point_kernel_of_order(&fine_e, &fine_f, alpha, order, 2 * x0 + 1, &exp.grid)?;
            let mut data = fine_k.atom_response(truth);
            let sigma = perturb(&mut data.values, inv.noise, exp.config.seed)?;
            data.write_csv(create(&out(&exp, "data.csv"))?)?;
            let k = build_point_kernel_of_order(&e, &exp.f, alpha, order, x0, &exp.grid)?;
            let fit = recover_delta_train(&data, &k, inv.max_atoms, inv.atom_tol)?;
            let found = fit.atoms();
            let matched = found.len() == truth.len();
            let (loc, wt) = if matched {
                (
                    Some(found.iter().zip(truth.atoms()).map(|(p, q)| (p.a - q.a).abs()).fold(0.0, f64::max)),
                    Some(found.iter().zip(truth.atoms()).map(|(p, q)| ((p.r - q.r) / q.r).abs()).fold(0.0, f64::max)),
                )
            } else {
                (None, None)
            };
            json!({
                "route": "atoms",
                "x0": exp.spec.nodes()[x0],
                "atoms": found,
                "true_atoms": truth.atoms(),
                "relative_residual": fit.residual,
                "iterations": fit.iterations,
                "max_location_error": loc,
                "max_weight_rel_error": wt,
                "time_step": exp.grid.step(),
                "noise_sigma": sigma,
            })
        }
        TemporalSource::Regular(mu) => {
            let mut data = GridFunction {
                grid: exp.grid,
                values: oracle_field(&exp, &exp.spec, &exp.f, &exp.source, false)?.column(x0),
            };
            let sigma = perturb(&mut data.values, inv.noise, exp.config.seed)?;
            data.write_csv(create(&out(&exp, "data.csv"))?)?;
            let k = build_point_kernel(&e, &exp.f, alpha, x0, &exp.grid)?;
            let rec = recover_mu_l2(&data, &k, &injected_level(exp.regularization, sigma))?;
            let trim = inv.trim.min(exp.grid.n_steps - 1);
            let mut w = csv::Writer::from_writer(create(&out(&exp, "mu_reconstruction.csv"))?);
            w.write_record(["t", "mu_true", "mu_recovered"]).map_err(FracError::from)?;
            for (i, t) in exp.grid.nodes().iter().enumerate() {
                w.write_record([fmt_f64(*t), fmt_f64(mu.values[i]), fmt_f64(rec.mu.values[i])])
                    .map_err(FracError::from)?;
            }
            w.flush()?;
            json!({
                "route": "regular",
                "x0": exp.spec.nodes()[x0],
                "relative_error": relative_error(&rec.mu.values[trim..], &mu.values[trim..]),
                "trim": trim,
                "condition_number": rec.condition_number,
                "weight": rec.fit.weight,
                "relative_residual": rec.fit.relative_residual,
                "discrepancy_met": rec.fit.discrepancy_met,
                "noise_sigma": sigma,
            })
        }
        TemporalSource::Mixed(..) => {
            return Err(FracError::Invalid("invert-mu handles a regular factor or a delta train, not both".into()))
        }
    };
    write_json(create(&out(&exp, "diagnostics.json"))?, &diag)
}

#[derive(Serialize)]
struct Report {
    seed: u64,
    passed: bool,
    criteria: Vec<Outcome>,
}

/// Runs the acceptance suite; `Ok(false)` when some criterion fails.
pub fn report(seed: u64, output: Option<&Path>) -> Result<bool> {
    let criteria = acceptance::run_all();
    let passed = criteria.iter().all(|c| c.passed);
    for c in &criteria {
        eprintln!("{}", c.line());
    }
    write_json(sink(output)?, &Report { seed, passed, criteria })?;
    Ok(passed)
}

fn check_line(c: &Check) -> String {
    let verdict = if c.passed { "ok  " } else { "FAIL" };
    format!("{verdict} {} = {:.3e} ({} {:.1e})", c.name, c.value, c.relation, c.limit)
}

/// Runs the invariant suite; `Ok(false)` when some invariant fails.
pub fn selftest() -> Result<bool> {
    let checks = fracsrc_core::selftest::run();
    let mut stdout = std::io::stdout().lock();
    for c in &checks {
        writeln!(stdout, "{}", check_line(c))?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(stdout, "{} invariants, {failed} failed", checks.len())?;
    Ok(failed == 0)
}
