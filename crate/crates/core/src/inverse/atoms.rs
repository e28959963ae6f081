use super::PointKernel;
use crate::error::{FracError, Result};
use crate::fractional::{Atom, DeltaTrain, GridFunction};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Candidate locations per time step in the matching-pursuit search.
pub const SUBGRID: usize = 8;
const MAX_ITERATIONS: usize = 200;

/// Result of delta-train recovery.
#[derive(Clone, Debug)]
pub struct AtomFit {
    /// `None` when the data vanish.
    pub train: Option<DeltaTrain>,
    /// `||d - sum r_k K(. - a_k)|| / ||d||` over `t_1..`.
    pub residual: f64,
    /// Gauss-Newton iterations used.
    pub iterations: usize,
}

impl AtomFit {
    pub fn atoms(&self) -> &[Atom] {
        self.train.as_ref().map(|t| t.atoms()).unwrap_or(&[])
    }
}

fn model(k: &PointKernel, nodes: &[f64], p: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .map(|&t| p.chunks(2).map(|ar| ar[1] * k.value(t - ar[0])).sum())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Recovers `mu = sum r_k delta_{a_k}` from `data = sum r_k K(. - a_k)`.
///
/// Greedy matching pursuit over shifts on a grid `SUBGRID` times finer than the data.
/// After each pick all locations and weights are refined jointly by damped Gauss-Newton;
/// the search stops once the relative residual is below `tol` or `max_atoms` atoms are in use.
pub fn recover_delta_train(data: &GridFunction, k: &PointKernel, max_atoms: usize, tol: f64) -> Result<AtomFit> {
    k.grid.ensure_same(&data.grid)?;
    if k.is_zero() {
        return Err(FracError::ZeroKernel);
    }
    let d = &data.values[1..];
    let nodes: Vec<f64> = k.grid.nodes()[1..].to_vec();
    let dn = norm(d);
    if dn == 0.0 || max_atoms == 0 {
        return Ok(AtomFit {
            train: None,
            residual: 0.0,
            iterations: 0,
        });
    }
    let n = k.grid.n_steps;
    let fine = k.grid.step() / SUBGRID as f64;
    let n_fine = SUBGRID * (n - 1);
    // K on the fine lag grid; node t_i minus candidate a_c has lag SUBGRID i - c.
    let table: Vec<f64> = (0..=n_fine).into_par_iter().map(|m| k.value(m as f64 * fine)).collect();
    let columns: Vec<Vec<f64>> = (1..n_fine)
        .into_par_iter()
        .map(|c| {
            (1..n)
                .map(|i| {
                    let lag = SUBGRID * i;
                    if lag > c {
                        table[lag - c]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let col_norms: Vec<f64> = columns.iter().map(|c| norm(c)).collect();

    let mut p: Vec<f64> = Vec::new();
    let mut resid = d.to_vec();
    let mut iterations = 0;
    while p.len() / 2 < max_atoms && norm(&resid) > tol * dn {
        let best = (0..columns.len())
            .filter(|&c| col_norms[c] > 0.0)
            .map(|c| {
                let ip: f64 = columns[c].iter().zip(&resid).map(|(a, b)| a * b).sum();
                (c, ip, ip.abs() / col_norms[c])
            })
            .fold(None, |acc: Option<(usize, f64, f64)>, x| match acc {
                Some(a) if a.2 >= x.2 => Some(a),
                _ => Some(x),
            });
        let Some((c, ip, _)) = best else { break };
        p.extend([(c + 1) as f64 * fine, ip / (col_norms[c] * col_norms[c])]);
        let (q, it, converged) = refine(k, &nodes, d, &p);
        iterations += it;
        p = q;
        let fitted = model(k, &nodes, &p);
        resid = d.iter().zip(&fitted).map(|(y, m)| y - m).collect();
        if !converged {
            let mut best: Vec<Atom> = p.chunks(2).map(|ar| Atom { a: ar[0], r: ar[1] }).collect();
            best.sort_by(|x, y| x.a.total_cmp(&y.a));
            return Err(FracError::NonConvergence {
                iterations,
                residual: norm(&resid) / dn,
                best,
            });
        }
    }

    let residual = norm(&resid) / dn;
    let mut atoms: Vec<Atom> = p.chunks(2).map(|ar| Atom { a: ar[0], r: ar[1] }).collect();
    atoms.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(AtomFit {
        train: Some(DeltaTrain::new(atoms, k.grid.horizon)?),
        residual,
        iterations,
    })
}

/// Levenberg-Marquardt on `(a_1, r_1, a_2, r_2, ..)`. Returns the best iterate.
fn refine(k: &PointKernel, nodes: &[f64], d: &[f64], p0: &[f64]) -> (Vec<f64>, usize, bool) {
    let horizon = k.grid.horizon;
    let lo = k.grid.step() / SUBGRID as f64;
    let cost = |p: &[f64]| -> f64 {
        model(k, nodes, p)
            .iter()
            .zip(d)
            .map(|(m, y)| (m - y) * (m - y))
            .sum()
    };
    let mut p = p0.to_vec();
    let mut c = cost(&p);
    let mut damping = 1e-3;
    let np = p.len();
    for it in 0..MAX_ITERATIONS {
        let jac = DMatrix::from_fn(nodes.len(), np, |i, j| {
            let (a, r) = (p[j - j % 2], p[j - j % 2 + 1]);
            let tau = nodes[i] - a;
            if j % 2 == 0 {
                -r * k.derivative(tau)
            } else {
                k.value(tau)
            }
        });
        let res = DVector::from_iterator(
            nodes.len(),
            model(k, nodes, &p).iter().zip(d).map(|(m, y)| m - y),
        );
        let jtj = jac.tr_mul(&jac);
        let g = jac.tr_mul(&res);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..np {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-300);
            }
            let Some(chol) = a.cholesky() else {
                damping *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial: Vec<f64> = p
                .iter()
                .zip(step.iter())
                .enumerate()
                .map(|(i, (x, s))| if i % 2 == 0 { (x + s).clamp(lo, horizon - lo) } else { x + s })
                .collect();
            let ct = cost(&trial);
            if ct < c {
                let moved = trial
                    .iter()
                    .zip(&p)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                let scale = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let small = moved <= 1e-12 * scale || (c - ct) <= 1e-14 * c;
                p = trial;
                c = ct;
                damping = (damping / 3.0).max(1e-12);
                improved = true;
                if small {
                    return (p, it + 1, true);
                }
                break;
            }
            damping *= 4.0;
        }
        if !improved {
            // no descent direction left: a stationary point
            return (p, it + 1, true);
        }
    }
    (p, MAX_ITERATIONS, false)
}
