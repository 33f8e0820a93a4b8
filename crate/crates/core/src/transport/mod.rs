//! m-Wasserstein distances and optimal plans between discrete measures.
//!
//! Three routes: an exact 1D quantile sweep, an exact network-simplex linear
//! program, and entropy-regularized iterative scaling with epsilon annealing.
//! The exponent m enters only through the ground cost |x - y|^m; callers pick
//! m (the inequality checks use m = p/(p-q)).

mod entropic;
mod quantile;
mod simplex;

pub use entropic::{wasserstein_entropic, wasserstein_entropic_opts, EntropicOptions, EntropicSolve};
pub use quantile::{wasserstein_1d, wasserstein_1d_plan};

use crate::error::{Error, Result};
use crate::measure::{point_distance, DiscreteMeasure};
use std::io::Write;

/// Default cap on atom pairs for the exact linear-programming solver.
pub const DEFAULT_PAIR_CAP: usize = 250_000;

/// A nonnegative coupling between two discrete measures with prescribed marginals.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    /// Sparse coupling entries (source atom, target atom, mass).
    entries: Vec<(u32, u32, f64)>,
    exponent: f64,
    /// Transported cost Σ γ_ij |x_i - y_j|^m (so distance = cost^{1/m}).
    cost: f64,
}

impl TransportPlan {
    pub(crate) fn new(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        entries: Vec<(u32, u32, f64)>,
        exponent: f64,
    ) -> Result<Self> {
        let cost = entries
            .iter()
            .map(|(i, j, w)| {
                w * point_distance(source.position(*i as usize), target.position(*j as usize))
                    .powf(exponent)
            })
            .sum();
        let plan = TransportPlan {
            source,
            target,
            entries,
            exponent,
            cost,
        };
        let residual = plan.marginal_residual();
        if residual > 1e-8 {
            return Err(Error::Infeasible(residual));
        }
        Ok(plan)
    }

    pub fn source(&self) -> &DiscreteMeasure {
        &self.source
    }

    pub fn target(&self) -> &DiscreteMeasure {
        &self.target
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Transported cost Σ γ_ij |x_i - y_j|^m at the plan's own exponent.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Reported distance, cost^{1/m}.
    pub fn distance(&self) -> f64 {
        self.cost.powf(1.0 / self.exponent)
    }

    /// Largest deviation of row/column sums from the prescribed marginals.
    pub fn marginal_residual(&self) -> f64 {
        let mut row = vec![0.0; self.source.len()];
        let mut col = vec![0.0; self.target.len()];
        for (i, j, w) in &self.entries {
            row[*i as usize] += w;
            col[*j as usize] += w;
        }
        let mut worst = 0.0f64;
        for (i, r) in row.iter().enumerate() {
            worst = worst.max((r - self.source.weight(i)).abs());
        }
        for (j, c) in col.iter().enumerate() {
            worst = worst.max((c - self.target.weight(j)).abs());
        }
        for (_, _, w) in &self.entries {
            if *w < 0.0 {
                worst = worst.max(-w);
            }
        }
        worst
    }

    /// CSV audit dump: rows `i,j,weight`.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "i,j,weight")?;
        for (i, j, w) in &self.entries {
            writeln!(out, "{i},{j},{w}")?;
        }
        Ok(())
    }
}

/// Σ γ_ij |x_i - y_j|^m for an arbitrary exponent m.
pub fn plan_cost(plan: &TransportPlan, m: f64) -> f64 {
    assert!(m > 0.0);
    plan.entries
        .iter()
        .map(|(i, j, w)| {
            w * point_distance(
                plan.source.position(*i as usize),
                plan.target.position(*j as usize),
            )
            .powf(m)
        })
        .sum()
}

fn check_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure, m: f64) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(mu.dim(), nu.dim()));
    }
    if !(m > 1.0) {
        return Err(Error::InvalidExponent(format!("wasserstein exponent m = {m} must be > 1")));
    }
    let mass_gap = (mu.total_mass() - nu.total_mass()).abs();
    if mass_gap > 1e-10 {
        return Err(Error::Infeasible(mass_gap));
    }
    Ok(())
}

/// Exact m-Wasserstein distance and optimal plan via the network simplex.
pub fn wasserstein_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    m: f64,
) -> Result<(f64, TransportPlan)> {
    wasserstein_exact_with_cap(mu, nu, m, DEFAULT_PAIR_CAP)
}

/// Exact solve with an explicit atom-pair cap.
pub fn wasserstein_exact_with_cap(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    m: f64,
    cap: usize,
) -> Result<(f64, TransportPlan)> {
    check_pair(mu, nu, m)?;
    let pairs = mu.len() * nu.len();
    if pairs > cap {
        return Err(Error::TooLarge { pairs, cap });
    }
    let ncols = nu.len();
    let cost: Vec<f64> = (0..mu.len())
        .flat_map(|i| {
            (0..ncols).map(move |j| (i, j))
        })
        .map(|(i, j)| point_distance(mu.position(i), nu.position(j)).powf(m))
        .collect();
    let entries = simplex::solve_transportation(mu.weights(), nu.weights(), &cost)?;
    let plan = TransportPlan::new(mu.clone(), nu.clone(), entries, m)?;
    let d = plan.distance();
    Ok((d, plan))
}
