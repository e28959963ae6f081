//! Quick invariant suite: exact identities and structural properties on small
//! problems with seeded random inputs. Runs in well under a second.

use crate::acceptance::Check;
use crate::error::Result;
use crate::forward::{solve_modal_convolution, SpaceTimeField};
use crate::fractional::{regularize_source, reflect, rl_backward, rl_forward, Atom, DeltaTrain, GridFunction, TemporalGrid, TemporalSource};
use crate::inverse::{build_forward_map_f, build_point_kernel, recover_f, recover_mu_l2, RegularizationSpec};
use crate::mittag_leffler::{eval as ml, MlKernel};
use crate::spectral::{eigendecompose, ObservationSpec, OperatorSpec};
use crate::special::rgamma;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

fn differing(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x.to_bits() != y.to_bits()).count() as f64
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Every invariant as one [`Check`]; a failed computation yields a single failing check.
pub fn run() -> Vec<Check> {
    invariants().unwrap_or_else(|e| vec![Check::at_most(format!("error: {e}"), 1.0, 0.0)])
}

fn invariants() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checks = Vec::new();

    let mut at_zero: f64 = 0.0;
    let mut negative = 0.0;
    for _ in 0..64 {
        let a: f64 = rng.random_range(0.05..1.0);
        let b: f64 = rng.random_range(0.1..3.0);
        at_zero = at_zero.max((ml(a, b, 0.0) - rgamma(b)).abs());
        let k = MlKernel::new(a, a, rng.random_range(0.0..1e3));
        if !(k.value(rng.random_range(1e-6..10.0)) >= 0.0) {
            negative += 1.0;
        }
    }
    checks.push(Check::at_most("ml_value_at_zero", at_zero, 1e-15));
    checks.push(Check::at_most("kernel_sign_violations", negative, 0.0));

    let grid = TemporalGrid::new(1.0, 41)?;
    let c: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let v = GridFunction::from_fn(grid, |t| c[0] + c[1] * t + c[2] * (5.0 * t).sin());
    checks.push(Check::at_most("reflection_involution", differing(&reflect(&reflect(&v)).values, &v.values), 0.0));
    let back = rl_backward(0.6, &v)?;
    let conj = reflect(&rl_forward(0.6, &reflect(&v))?);
    checks.push(Check::at_most("backward_is_reflected_forward", differing(&back.values, &conj.values), 0.0));

    let train = DeltaTrain::new(vec![Atom { a: 0.5, r: 1.0 }], 1.0)?;
    let g = regularize_source(0.75, &TemporalSource::Atomic(train), &grid)?;
    let early = grid
        .nodes()
        .iter()
        .zip(&g.values)
        .filter(|(t, v)| **t <= 0.5 && **v != 0.0)
        .count();
    checks.push(Check::at_most("transform_causality", early as f64, 0.0));

    let spec = OperatorSpec::uniform(1.0, 21, 1.0, 0.0)?;
    let e = eigendecompose(&spec, None)?;
    checks.push(Check::at_most("eigen_orthonormality", e.orthonormality_defect(), 1e-12));
    checks.push(Check::at_most("eigen_residual", e.max_relative_residual(), 1e-10));
    let f: Vec<f64> = (0..21).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f2: Vec<f64> = (0..21).map(|_| rng.random_range(-1.0..1.0)).collect();
    checks.push(Check::at_most("spectral_round_trip", rel_gap(&e.synthesize(&e.project(&f)?)?, &f), 1e-12));

    let s: f64 = rng.random_range(-3.0..3.0);
    let comb: Vec<f64> = f.iter().zip(&f2).map(|(a, b)| s * a + b).collect();
    let v1 = solve_modal_convolution(&e, &f, &v, 0.5, &grid)?;
    let v2 = solve_modal_convolution(&e, &f2, &v, 0.5, &grid)?;
    let vc = solve_modal_convolution(&e, &comb, &v, 0.5, &grid)?;
    let lin: Vec<f64> = v1.values.iter().zip(&v2.values).map(|(a, b)| s * a + b).collect();
    checks.push(Check::at_most("solver_linearity", rel_gap(&vc.values, &lin), 1e-12));
    let again = solve_modal_convolution(&e, &f, &v, 0.5, &grid)?;
    checks.push(Check::at_most("solver_reproducibility", differing(&again.values, &v1.values), 0.0));

    let mut buf = Vec::new();
    v1.write_fstf(&mut buf)?;
    let read = SpaceTimeField::read_fstf(buf.as_slice())?;
    checks.push(Check::at_most("fstf_round_trip", differing(&read.values, &v1.values), 0.0));

    let obs = ObservationSpec::interval(&spec, 0.3, 0.7)?;
    let fmap = build_forward_map_f(&e, &v, 0.5, &obs, &grid)?;
    let reg = RegularizationSpec::ridge(1e-8);
    let zero_f = recover_f(&vec![0.0; fmap.n_rows()], &fmap, &reg)?;
    let k = build_point_kernel(&e, &f, 0.5, 10, &grid)?;
    let zero_mu = recover_mu_l2(&GridFunction::zeros(grid), &k, &reg)?;
    let nonzero = zero_f.f.iter().chain(&zero_mu.mu.values).filter(|&&x| x != 0.0).count();
    checks.push(Check::at_most("zero_data_zero_reconstruction", nonzero as f64, 0.0));
    Ok(checks)
}
