//! Riemann-Liouville integrals, the Caputo derivative and the regularizing
//! transform `g = J_beta mu` on uniform time grids.

mod grid;
mod source;
mod weights;

pub use grid::{GridFunction, TemporalGrid};
pub use source::{Atom, DeltaTrain, FracParams, TemporalSource};
pub use weights::ProductWeights;

pub(crate) use weights::extrapolation_coefficients;

use crate::error::{domain, FracError, Result};
use crate::mittag_leffler::MlKernel;
use crate::special::{gamma, rgamma};

fn check_order(order: f64) -> Result<()> {
    if order > 0.0 && order < 1.0 {
        Ok(())
    } else {
        domain(format!("fractional order must lie in (0, 1), got {order}"))
    }
}

/// Weights of `J_order` on `grid`.
pub fn rl_weights(order: f64, grid: &TemporalGrid) -> Result<ProductWeights> {
    check_order(order)?;
    Ok(ProductWeights::new(&MlKernel::riemann_liouville(order), grid.step(), grid.n_steps))
}

/// Forward integral `(J_order v)(t) = 1/Gamma(order) int_0^t (t-s)^(order-1) v(s) ds`.
pub fn rl_forward(order: f64, v: &GridFunction) -> Result<GridFunction> {
    let w = rl_weights(order, &v.grid)?;
    Ok(GridFunction {
        grid: v.grid,
        values: w.apply(&v.values),
    })
}

/// Backward integral over `(t, T)`, computed as the conjugate of [`rl_forward`] by [`reflect`].
pub fn rl_backward(order: f64, v: &GridFunction) -> Result<GridFunction> {
    Ok(reflect(&rl_forward(order, &reflect(v))?))
}

/// `v(T - t)`.
pub fn reflect(v: &GridFunction) -> GridFunction {
    let mut values = v.values.clone();
    values.reverse();
    GridFunction { grid: v.grid, values }
}

/// Caputo derivative of a grid function vanishing at `t = 0`, defined as the
/// exact inverse of [`rl_forward`] on nodes `1..n`.
pub fn caputo(order: f64, v: &GridFunction) -> Result<GridFunction> {
    check_order(order)?;
    let scale = v.max_abs();
    if v.values[0].abs() > 1e-12 * scale {
        return Err(FracError::Precondition(format!(
            "Caputo derivative needs v(0) = 0, got v(0) = {:e} (max |v| = {scale:e})",
            v.values[0]
        )));
    }
    let w = rl_weights(order, &v.grid)?;
    Ok(GridFunction {
        grid: v.grid,
        values: w.solve(&v.values),
    })
}

/// Classical L1 discretization of the Caputo derivative.
pub fn l1_caputo(order: f64, v: &GridFunction) -> Result<GridFunction> {
    check_order(order)?;
    let n = v.len();
    let b = l1_coefficients(order, n);
    let c0 = v.grid.step().powf(-order) * rgamma(2.0 - order);
    let x = &v.values;
    let mut out = vec![0.0; n];
    for i in 1..n {
        let mut s = 0.0;
        for k in 0..i {
            s += b[k] * (x[i - k] - x[i - k - 1]);
        }
        out[i] = c0 * s;
    }
    let closure = extrapolation_coefficients(n);
    out[0] = closure.iter().enumerate().map(|(j, c)| c * out[j + 1]).sum();
    Ok(GridFunction { grid: v.grid, values: out })
}

/// `b_k = (k+1)^(1-a) - k^(1-a)` for `k = 0..n`.
pub fn l1_coefficients(order: f64, n: usize) -> Vec<f64> {
    let p = 1.0 - order;
    (0..n)
        .map(|k| ((k + 1) as f64).powf(p) - (k as f64).powf(p))
        .collect()
}

/// `(g * v)(t) = int_0^t g(s) v(t - s) ds`, exact for piecewise linear `g` and `v`.
pub fn convolve(g: &GridFunction, v: &GridFunction) -> Result<GridFunction> {
    g.grid.ensure_same(&v.grid)?;
    let h = g.grid.step();
    let (gv, vv) = (&g.values, &v.values);
    let n = gv.len();
    let mut out = vec![0.0; n];
    for i in 1..n {
        let mut s = 0.0;
        for j in 0..i {
            let (p0, p1) = (gv[j], gv[j + 1]);
            let (q0, q1) = (vv[i - j], vv[i - j - 1]);
            s += 2.0 * p0 * q0 + p0 * q1 + p1 * q0 + 2.0 * p1 * q1;
        }
        out[i] = s * h / 6.0;
    }
    Ok(GridFunction { grid: g.grid, values: out })
}

/// `J_beta (r delta_a)` sampled at the grid nodes: `r (t - a)^(beta-1) / Gamma(beta)` for `t > a`.
pub fn atom_transform(beta: f64, atom: Atom, grid: &TemporalGrid) -> Vec<f64> {
    let c = atom.r / gamma(beta);
    grid.nodes()
        .into_iter()
        .map(|t| if t > atom.a { c * (t - atom.a).powf(beta - 1.0) } else { 0.0 })
        .collect()
}

/// The regularizing transform `g = J_beta mu`.
pub fn regularize_source(beta: f64, mu: &TemporalSource, grid: &TemporalGrid) -> Result<GridFunction> {
    check_order(beta)?;
    let mut g = match mu.regular() {
        Some(r) => {
            grid.ensure_same(&r.grid)?;
            rl_forward(beta, r)?
        }
        None => GridFunction::zeros(*grid),
    };
    if let Some(train) = mu.train() {
        if let Some(at) = train.atoms().iter().find(|at| !(at.a > 0.0 && at.a < grid.horizon)) {
            return Err(FracError::Invalid(format!("atom at {} outside (0, {})", at.a, grid.horizon)));
        }
        for &atom in train.atoms() {
            for (gi, ai) in g.values.iter_mut().zip(atom_transform(beta, atom, grid)) {
                *gi += ai;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, Tolerance};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TemporalGrid {
        TemporalGrid::new(1.0, n).unwrap()
    }

    fn smooth(g: TemporalGrid, seed: &[f64; 4]) -> GridFunction {
        GridFunction::from_fn(g, |t| {
            seed[0] * t + seed[1] * (3.0 * t).sin() + seed[2] * t * t * (1.5 - t) + seed[3] * (1.0 - (-2.0 * t).exp())
        })
    }

    #[test]
    fn constant_and_linear_are_integrated_exactly() {
        let g = grid(201);
        let one = GridFunction::from_fn(g, |_| 1.0);
        let j = rl_forward(0.5, &one).unwrap();
        for (i, t) in g.nodes().into_iter().enumerate() {
            assert!((j.values[i] - 2.0 * (t / PI).sqrt()).abs() < 1e-12);
        }
        assert!((j.values[200] - 1.1283791670955126).abs() < 1e-6);
        for &o in &[0.2, 0.5, 0.9] {
            let lin = GridFunction::from_fn(g, |t| t);
            let j = rl_forward(o, &lin).unwrap();
            for (i, t) in g.nodes().into_iter().enumerate() {
                let exact = t.powf(1.0 + o) / gamma(2.0 + o);
                assert!((j.values[i] - exact).abs() < 1e-12, "order {o} node {i}");
            }
        }
    }

    #[test]
    fn quadratic_is_second_order() {
        let err = |n: usize| {
            let g = grid(n);
            let sq = GridFunction::from_fn(g, |t| t * t);
            let j = rl_forward(0.4, &sq).unwrap();
            g.nodes()
                .iter()
                .zip(&j.values)
                .map(|(t, v)| (v - 2.0 * t.powf(2.4) / gamma(3.4)).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(51) / err(101)).log2();
        assert!(order > 1.9, "observed order {order}");
    }

    #[test]
    fn semigroup_for_functions_vanishing_at_zero() {
        let g = grid(401);
        let v = smooth(g, &[1.0, 0.7, -0.4, 0.3]);
        let direct = rl_forward(0.7, &v).unwrap();
        let a = rl_forward(0.3, &rl_forward(0.4, &v).unwrap()).unwrap();
        let b = rl_forward(0.4, &rl_forward(0.3, &v).unwrap()).unwrap();
        for i in 0..401 {
            assert!((a.values[i] - direct.values[i]).abs() < 1e-5);
            assert!((b.values[i] - direct.values[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn backward_is_reflected_forward() {
        let g = grid(401);
        let v = GridFunction::from_fn(g, |t| (4.0 * t).sin());
        let back = rl_backward(0.7, &v).unwrap();
        assert_eq!(back, reflect(&rl_forward(0.7, &reflect(&v)).unwrap()));
        let one = GridFunction::from_fn(g, |_| 1.0);
        let b1 = rl_backward(0.5, &one).unwrap();
        for (i, t) in g.nodes().into_iter().enumerate() {
            assert!((b1.values[i] - 2.0 * ((1.0 - t) / PI).sqrt()).abs() < 1e-12);
        }
        // direct quadrature of (1/Gamma(0.7)) int_t^1 (s-t)^(-0.3) sin(4s) ds
        let tol = Tolerance { rel: 1e-10, ..Default::default() };
        for i in (0..400).step_by(17) {
            let t = g.node(i);
            // u = (s - t)^0.7 removes the endpoint singularity
            let top = (1.0 - t).powf(0.7);
            let q = integrate(|u: f64| (4.0 * (t + u.powf(1.0 / 0.7))).sin(), 0.0, top, &[], tol).value / (0.7 * gamma(0.7));
            assert!((back.values[i] - q).abs() < 1e-5, "node {i}: {} vs {q}", back.values[i]);
        }
    }

    #[test]
    fn reflection_is_an_isometric_involution() {
        let g = grid(3);
        let v = GridFunction::new(g, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(reflect(&v).values, vec![2.0, 1.0, 0.0]);
        assert_eq!(reflect(&reflect(&v)), v);
        assert_eq!(reflect(&v).l2_norm(), v.l2_norm());
    }

    #[test]
    fn caputo_examples() {
        let g = grid(201);
        let j1 = GridFunction::from_fn(g, |t| t.sqrt() / gamma(1.5));
        let w = caputo(0.5, &j1).unwrap();
        assert!(w.values.iter().skip(1).all(|x| (x - 1.0).abs() < 1e-4));
        let lin = GridFunction::from_fn(g, |t| t);
        let d = caputo(0.5, &lin).unwrap();
        // sqrt(t) is not smooth at 0, so accuracy builds up away from the origin
        for (i, t) in g.nodes().into_iter().enumerate().skip(20) {
            assert!((d.values[i] - t.sqrt() / gamma(1.5)).abs() < 2e-5, "node {i}");
        }
        let bad = GridFunction::from_fn(g, |t| 1.0 + t);
        assert!(matches!(caputo(0.5, &bad), Err(FracError::Precondition(_))));
    }

    #[test]
    fn caputo_converges_on_exact_samples() {
        // w = cos t, v = J_0.5 w sampled analytically through the series of cos
        let v_exact = |t: f64| {
            let mut s = 0.0;
            for k in 0..30 {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * t.powf(2.0 * k as f64 + 0.5) / gamma(2.0 * k as f64 + 1.5);
            }
            s
        };
        let err = |n: usize| {
            let g = grid(n);
            let w = caputo(0.5, &GridFunction::from_fn(g, v_exact)).unwrap();
            g.nodes()
                .iter()
                .zip(&w.values)
                .map(|(t, x)| (x - t.cos()).powi(2))
                .sum::<f64>()
                .sqrt()
                / (n as f64).sqrt()
        };
        let (e1, e2) = (err(101), err(201));
        assert!((e1 / e2).log2() >= 1.5, "orders {e1:e} {e2:e}");
    }

    #[test]
    fn l1_matches_caputo_for_smooth_data() {
        let g = grid(401);
        let v = GridFunction::from_fn(g, |t| t * t);
        let d = l1_caputo(0.5, &v).unwrap();
        let exact = |t: f64| 2.0 * t.powf(1.5) / gamma(2.5);
        assert!((d.values[400] - exact(1.0)).abs() < 1e-3);
    }

    #[test]
    fn convolution_is_exact_for_linears() {
        let g = grid(11);
        let a = GridFunction::from_fn(g, |t| 1.0 + t);
        let b = GridFunction::from_fn(g, |t| 2.0 - t);
        let c = convolve(&a, &b).unwrap();
        // int_0^t (1+s)(2-(t-s)) ds
        let exact = |t: f64| (2.0 - t) * (t + t * t / 2.0) + t * t / 2.0 + t * t * t / 3.0;
        for (i, t) in g.nodes().into_iter().enumerate() {
            assert!((c.values[i] - exact(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn single_atom_transform() {
        let g = grid(101);
        let mu = TemporalSource::Atomic(DeltaTrain::new(vec![Atom { a: 0.5, r: 1.0 }], 1.0).unwrap());
        let tr = regularize_source(0.75, &mu, &g).unwrap();
        for (i, t) in g.nodes().into_iter().enumerate() {
            let want = if t > 0.5 { (t - 0.5).powf(-0.25) / gamma(0.75) } else { 0.0 };
            assert!((tr.values[i] - want).abs() <= 1e-15 * want.abs());
        }
        assert!(regularize_source(1.0, &mu, &g).is_err());
    }

    #[test]
    fn regular_source_uses_forward_integral() {
        let g = grid(51);
        let mu = GridFunction::from_fn(g, |t| (2.0 * t).cos());
        let tr = regularize_source(0.6, &TemporalSource::Regular(mu.clone()), &g).unwrap();
        assert_eq!(tr, rl_forward(0.6, &mu).unwrap());
    }

    #[test]
    fn two_atom_transform_converges_under_refinement() {
        let mu = TemporalSource::Atomic(
            DeltaTrain::new(vec![Atom { a: 0.25, r: 2.0 }, Atom { a: 0.75, r: 3.0 }], 1.0).unwrap(),
        );
        // g is in L2 with norm^2 = sum over pairs of an explicit integral; compare grid norms
        let norm = |n: usize| regularize_source(0.75, &mu, &grid(n)).unwrap().l2_norm();
        let (n1, n2, n3) = (norm(401), norm(801), norm(1601));
        let d1 = (n2 - n1).abs();
        let d2 = (n3 - n2).abs();
        let rate = (d1 / d2).log2();
        let richardson = d2 / (2f64.powf(rate) - 1.0);
        let refined = regularize_source(0.75, &mu, &grid(3201)).unwrap().l2_norm();
        assert!((refined - n3).abs() <= 1.5 * richardson, "{refined} {n3} {richardson:e}");
    }

    proptest! {
        #[test]
        fn positivity(vals in proptest::collection::vec(0.0f64..10.0, 2..60), o in 0.05f64..0.95) {
            let g = TemporalGrid::new(1.0, vals.len()).unwrap();
            let j = rl_forward(o, &GridFunction::new(g, vals).unwrap()).unwrap();
            prop_assert!(j.values.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn caputo_round_trip(c in proptest::array::uniform4(-2.0f64..2.0), o in 0.1f64..0.9) {
            let g = TemporalGrid::new(1.0, 101).unwrap();
            let w = smooth(g, &c);
            let back = caputo(o, &rl_forward(o, &w).unwrap()).unwrap();
            for i in 1..101 {
                prop_assert!((back.values[i] - w.values[i]).abs() < 1e-6, "node {} err {:e}", i, back.values[i] - w.values[i]);
            }
            // node 0 is closed by cubic extrapolation, accurate to O(h^4)
            prop_assert!((back.values[0] - w.values[0]).abs() < 1e-6);
        }
    }
}
