//! First nontrivial Neumann eigenvalue of the p-Laplacian on tensor grids,
//! and the sharp 1D constant pi_p.
//!
//! For p = 2 the zero-flux finite-difference Laplacian on an interval or box
//! separates into per-axis Neumann chains; the second-smallest eigenvalue is
//! the smallest nonzero chain eigenvalue, obtained by deflated inverse
//! iteration with direct tridiagonal solves. For p != 2 there is no linear
//! eigensolver: the Rayleigh quotient ∫|∇u|^p / ∫|u|^p is minimized by
//! projected gradient descent, re-imposing the signed-power constraint each
//! iteration through the q-mean shift and renormalizing, initialized from the
//! p = 2 eigenvector. The descent value is an upper estimate of the discrete
//! infimum.

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::field::{
    dirichlet_energy, dirichlet_energy_smoothed, dirichlet_energy_smoothed_grad, lr_norm,
    lr_norm_grad, q_shift, signed_power_integral, ScalarField,
};
use serde::Serialize;
use std::io::Write;
use std::sync::Arc;

/// Eigenvalue estimate with its eigenfunction and solve diagnostics.
#[derive(Debug)]
pub struct EigenResult {
    /// Eigenvalue estimate, units 1/length^p.
    pub value: f64,
    /// Eigenfunction, normalized to unit L^p norm.
    pub eigenfunction: ScalarField,
    /// |∫ |u|^{p-2} u| after the final projection.
    pub constraint_residual: f64,
    /// Rayleigh-quotient history of the iteration.
    pub history: Vec<f64>,
    /// Cells per axis of the grid used.
    pub resolution: u32,
    pub iterations: usize,
    pub p: f64,
}

/// Summary row for CSV export.
#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub resolution: u32,
    pub p: f64,
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl EigenResult {
    pub fn summary(&self) -> EigenSummary {
        EigenSummary {
            resolution: self.resolution,
            p: self.p,
            eigenvalue: self.value,
            residual: self.constraint_residual,
            iterations: self.iterations,
        }
    }
}

/// CSV rows `resolution,p,eigenvalue,residual,iterations`.
pub fn write_eigen_csv(results: &[EigenSummary], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "resolution,p,eigenvalue,residual,iterations")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.resolution, r.p, r.eigenvalue, r.residual, r.iterations
        )?;
    }
    Ok(())
}

/// The sharp 1D Poincaré constant: pi_p = 2 pi (p-1)^{1/p} / (p sin(pi/p)).
pub fn pi_p(p: f64) -> f64 {
    assert!(p > 1.0, "pi_p requires p > 1");
    let pi = std::f64::consts::PI;
    2.0 * pi * (p - 1.0).powf(1.0 / p) / (p * (pi / p).sin())
}

/// Solve the tridiagonal system M y = b by the Thomas algorithm, where M is
/// the Neumann chain with its first row and column removed (grounded chain).
/// `diag` and `off` describe M; both are overwritten workspaces.
fn thomas_grounded(n: usize, inv_h2: f64, b: &[f64], work: &mut Vec<f64>, out: &mut Vec<f64>) {
    // M has size n-1: diag = 2/h^2 everywhere except the last entry 1/h^2,
    // off-diagonals -1/h^2.
    let size = n - 1;
    work.clear();
    work.resize(size, 0.0);
    out.clear();
    out.resize(size, 0.0);
    let diag_at = |i: usize| if i + 1 == size { inv_h2 } else { 2.0 * inv_h2 };
    // Forward sweep.
    let mut c_prev = -inv_h2 / diag_at(0);
    let mut d_prev = b[0] / diag_at(0);
    work[0] = c_prev;
    out[0] = d_prev;
    for i in 1..size {
        let denom = diag_at(i) + inv_h2 * c_prev;
        c_prev = -inv_h2 / denom;
        d_prev = (b[i] + inv_h2 * d_prev) / denom;
        work[i] = c_prev;
        out[i] = d_prev;
    }
    // Back substitution.
    for i in (0..size.saturating_sub(1)).rev() {
        let next = out[i + 1];
        out[i] -= work[i] * next;
    }
}

/// Second-smallest eigenvalue (and eigenvector) of the 1D Neumann chain with
/// `n` cells of width `h`, by deflated inverse iteration.
fn chain_second_eigen(n: usize, h: f64, history: &mut Vec<f64>) -> (f64, Vec<f64>, usize) {
    let inv_h2 = 1.0 / (h * h);
    let pi = std::f64::consts::PI;
    let mut v: Vec<f64> = (0..n)
        .map(|i| (pi * (i as f64 + 0.5) / n as f64).cos())
        .collect();
    let deflate = |u: &mut Vec<f64>| {
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        u.iter_mut().for_each(|x| *x -= mean);
    };
    let normalize = |u: &mut Vec<f64>| {
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x /= norm);
    };
    let rayleigh = |u: &[f64]| -> f64 {
        let energy: f64 = u.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
        energy * inv_h2 / u.iter().map(|x| x * x).sum::<f64>()
    };
    deflate(&mut v);
    normalize(&mut v);
    let mut work = Vec::new();
    let mut solved = Vec::new();
    let mut lambda = rayleigh(&v);
    let mut iterations = 0usize;
    for _ in 0..200 {
        iterations += 1;
        thomas_grounded(n, inv_h2, &v[1..], &mut work, &mut solved);
        let mut x = Vec::with_capacity(n);
        x.push(0.0);
        x.extend_from_slice(&solved);
        deflate(&mut x);
        normalize(&mut x);
        let next = rayleigh(&x);
        history.push(next);
        v = x;
        if (lambda - next).abs() <= 1e-13 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    (lambda, v, iterations)
}

fn require_tensor(grid: &Grid) -> Result<()> {
    if grid.is_tensor() {
        Ok(())
    } else {
        Err(Error::UnsupportedGrid(
            "eigensolves are defined on interval/box grids".into(),
        ))
    }
}

/// p = 2 path: assemble-free separable solve of the zero-flux Laplacian.
fn neumann_eigen_linear(grid: &Arc<Grid>) -> Result<EigenResult> {
    require_tensor(grid)?;
    let dim = grid.dim();
    let mut best: Option<(f64, usize, Vec<f64>, usize)> = None;
    let mut history = Vec::new();
    for axis in 0..dim {
        let n = grid.shape()[axis];
        let h = grid.spacing()[axis];
        let mut hist = Vec::new();
        let (lambda, vec, iters) = chain_second_eigen(n, h, &mut hist);
        let better = match &best {
            None => true,
            Some((cur, _, _, _)) => lambda < *cur,
        };
        if better {
            best = Some((lambda, axis, vec, iters));
            history = hist;
        }
    }
    let (lambda, axis, chain_vec, iterations) = best.expect("at least one axis");
    let values: Vec<f64> = (0..grid.len())
        .map(|i| chain_vec[grid.cell_coord(i, axis)])
        .collect();
    let field = ScalarField::from_values(grid, "neumann-mode", values)?;
    let norm = lr_norm(&field, 2.0).powf(0.5);
    let eigenfunction = field.scaled(1.0 / norm);
    let constraint_residual = signed_power_integral(&eigenfunction, 2.0).abs();
    Ok(EigenResult {
        value: lambda,
        eigenfunction,
        constraint_residual,
        history,
        resolution: grid.shape()[0] as u32,
        iterations,
        p: 2.0,
    })
}

/// Project onto the constraint manifold: subtract the p-mean shift, then
/// normalize to unit L^p norm.
fn project(field: &ScalarField, p: f64) -> ScalarField {
    let shifted = field.shifted(q_shift(field, p));
    let norm = lr_norm(&shifted, p).powf(1.0 / p);
    shifted.scaled(1.0 / norm)
}

const DESCENT_CAP: usize = 20_000;
const DESCENT_WINDOW: usize = 50;
const DESCENT_RTOL: f64 = 1e-10;

/// First nontrivial Neumann eigenvalue of the p-Laplacian on `grid`.
pub fn neumann_eigenvalue(grid: &Arc<Grid>, p: f64) -> Result<EigenResult> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(format!("eigen exponent p = {p} must be > 1")));
    }
    let linear = neumann_eigen_linear(grid)?;
    if (p - 2.0).abs() < 1e-12 {
        return Ok(linear);
    }

    let mut u = project(&linear.eigenfunction, p);
    let mut history = vec![dirichlet_energy(&u, p)];
    let mut iterations = 0usize;
    let mut converged = false;

    // For p < 2 the energy gradient is not Lipschitz where ∇u vanishes, so the
    // minimization runs through a smoothing continuation (|∇u|^2 + δ^2)^{p/2}
    // with δ annealed to zero; the reported value is the true quotient either
    // way, hence an upper bound on the discrete infimum.
    let deltas: Vec<f64> = if p < 2.0 {
        let gscale = dirichlet_energy(&u, 2.0).sqrt();
        vec![1e-2 * gscale, 1e-4 * gscale, 1e-6 * gscale, 0.0]
    } else {
        vec![0.0]
    };

    'stages: for (stage, &delta) in deltas.iter().enumerate() {
        let mut energy = dirichlet_energy_smoothed(&u, p, delta);
        let mut stage_history = vec![energy];
        // Barzilai-Borwein spectral steps with a backtracking safeguard.
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut fallback_step = 0.1 / (1.0 + energy);
        let last_stage = stage + 1 == deltas.len();
        // Warm-start stages only need rough convergence.
        let window_rtol = if last_stage { DESCENT_RTOL } else { 1e-8 };

        while iterations < DESCENT_CAP {
            iterations += 1;
            // Gradient of the smoothed Rayleigh quotient at unit L^p norm.
            let ge = dirichlet_energy_smoothed_grad(&u, p, delta);
            let gd = lr_norm_grad(&u, p);
            let grad: Vec<f64> = ge
                .iter()
                .zip(&gd)
                .map(|(a, b)| a - energy * b)
                .collect();
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm == 0.0 {
                converged = last_stage;
                continue 'stages;
            }

            let mut step = match &prev {
                Some((pu, pg)) => {
                    let mut ss = 0.0;
                    let mut sy = 0.0;
                    for i in 0..grad.len() {
                        let s = u.values()[i] - pu[i];
                        let y = grad[i] - pg[i];
                        ss += s * s;
                        sy += s * y;
                    }
                    if sy > 0.0 && ss > 0.0 {
                        ss / sy
                    } else {
                        fallback_step
                    }
                }
                None => fallback_step,
            };
            prev = Some((u.values().to_vec(), grad.clone()));

            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = u
                    .values()
                    .iter()
                    .zip(&grad)
                    .map(|(v, g)| v - step * g)
                    .collect();
                let trial = ScalarField::from_values(u.grid(), "descent", trial)?;
                let trial = project(&trial, p);
                let e_trial = dirichlet_energy_smoothed(&trial, p, delta);
                if e_trial < energy {
                    u = trial;
                    energy = e_trial;
                    fallback_step = step * 1.3;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // No descent at any scale; this stage has stagnated.
                history.push(dirichlet_energy(&u, p));
                converged = last_stage;
                continue 'stages;
            }
            stage_history.push(energy);
            history.push(dirichlet_energy(&u, p));
            if stage_history.len() > DESCENT_WINDOW {
                let past = stage_history[stage_history.len() - 1 - DESCENT_WINDOW];
                if past - energy < window_rtol * past.abs() {
                    converged = last_stage;
                    continue 'stages;
                }
            }
        }
        break;
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "Rayleigh descent still oscillating after {DESCENT_CAP} iterations"
        )));
    }
    let energy = dirichlet_energy(&u, p);

    let constraint_residual = signed_power_integral(&u, p).abs();
    Ok(EigenResult {
        value: energy,
        eigenfunction: u,
        constraint_residual,
        history,
        resolution: grid.shape()[0] as u32,
        iterations,
        p,
    })
}
