//! Evaluates both sides of each certified inequality for a field/domain/
//! parameter tuple and reports signed slack with solver provenance.
//!
//! Every grid-based check is evaluated at the requested resolution and at half
//! resolution; the difference feeds the error bar, together with the dual gap
//! of the transport solver where one is involved. Acceptance of a report is
//! always `slack >= -error_bar`, never raw sign, because discretization can
//! leak tiny negatives on true equalities.

use crate::domain::{ConvexDomain, Grid};
use crate::error::{Error, Result};
use crate::field::{dirichlet_energy, lr_norm, q_shift, signed_power_integral, ScalarField};
use crate::measure::{point_distance, rho_pair, DiscreteMeasure};
use crate::spectrum::{neumann_eigenvalue, pi_p, EigenResult};
use crate::transport::{
    wasserstein_1d, wasserstein_entropic_opts, wasserstein_exact_with_cap, EntropicOptions,
    DEFAULT_PAIR_CAP,
};
use serde::Serialize;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

/// Relative admission tolerance for the signed-power constraint.
pub const ADMISSION_REL_TOL: f64 = 1e-8;

/// Which inequality a report certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    Main,
    Moment,
    Triangle,
    Expedient,
    Nash,
    Pw,
    EigenPw,
    EigenSharp,
}

impl InequalityId {
    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityId::Main => "main",
            InequalityId::Moment => "moment",
            InequalityId::Triangle => "triangle",
            InequalityId::Expedient => "expedient",
            InequalityId::Nash => "nash",
            InequalityId::Pw => "pw",
            InequalityId::EigenPw => "eigen_pw",
            InequalityId::EigenSharp => "eigen_sharp",
        }
    }
}

/// One certified inequality instance.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub id: InequalityId,
    pub p: f64,
    pub q: f64,
    /// p/(p-q) for the main family; NaN for the eigenvalue bounds.
    pub r: f64,
    pub domain: String,
    pub resolution: u32,
    pub solver: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub error_bar: f64,
    pub runtime_ms: f64,
    /// Extra named quantities (optimal centers, distance ratios, ...).
    pub notes: Vec<(String, f64)>,
}

impl InequalityReport {
    /// The pass criterion shared by the whole suite.
    pub fn holds(&self) -> bool {
        self.slack >= -self.error_bar
    }
}

/// Append reports to a CSV stream with the fixed column order. Timings are
/// zeroed unless `include_timings` is set, keeping reruns byte-identical.
pub fn write_reports_csv(
    experiment: &str,
    reports: &[InequalityReport],
    include_timings: bool,
    out: &mut impl Write,
    header: bool,
) -> std::io::Result<()> {
    if header {
        writeln!(
            out,
            "experiment_id,inequality_id,p,q,r,domain,resolution,solver,lhs,rhs,slack,error_bar,runtime_ms"
        )?;
    }
    for r in reports {
        let ms = if include_timings { r.runtime_ms } else { 0.0 };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            experiment,
            r.id.as_str(),
            r.p,
            r.q,
            r.r,
            r.domain,
            r.resolution,
            r.solver,
            r.lhs,
            r.rhs,
            r.slack,
            r.error_bar,
            ms
        )?;
    }
    Ok(())
}

/// Wasserstein backend selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    /// 1D quantile when possible, exact LP under the pair cap, else entropic.
    Auto,
    Exact,
    Entropic,
    /// Quantile sweep; errors on multidimensional measures.
    OneD,
}

impl SolverChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SolverChoice::Auto),
            "exact" => Ok(SolverChoice::Exact),
            "entropic" => Ok(SolverChoice::Entropic),
            "1d" => Ok(SolverChoice::OneD),
            other => Err(Error::ParseError(format!(
                "unknown solver '{other}' (expected auto|exact|entropic|1d)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverChoice::Auto => "auto",
            SolverChoice::Exact => "exact",
            SolverChoice::Entropic => "entropic",
            SolverChoice::OneD => "1d",
        }
    }
}

/// A Wasserstein solve with a one-sided uncertainty estimate on the distance.
#[derive(Debug, Clone)]
pub struct WSolve {
    /// Reported distance; for the entropic backend this is the cost of a
    /// genuine feasible coupling, hence an upper estimate.
    pub distance: f64,
    /// Distance uncertainty (zero for the exact backends).
    pub gap: f64,
    pub method: &'static str,
}

/// Run the selected Wasserstein backend on a measure pair.
pub fn solve_w(
    rho0: &DiscreteMeasure,
    rho1: &DiscreteMeasure,
    m: f64,
    choice: SolverChoice,
    cap: usize,
) -> Result<WSolve> {
    let pairs = rho0.len() * rho1.len();
    let effective = match choice {
        SolverChoice::Auto => {
            if rho0.dim() == 1 {
                SolverChoice::OneD
            } else if pairs <= cap {
                SolverChoice::Exact
            } else {
                SolverChoice::Entropic
            }
        }
        other => other,
    };
    match effective {
        SolverChoice::OneD => Ok(WSolve {
            distance: wasserstein_1d(rho0, rho1, m)?,
            gap: 0.0,
            method: "1d",
        }),
        SolverChoice::Exact => {
            let (d, _) = wasserstein_exact_with_cap(rho0, rho1, m, cap)?;
            Ok(WSolve {
                distance: d,
                gap: 0.0,
                method: "exact",
            })
        }
        SolverChoice::Entropic => {
            let solve = wasserstein_entropic_opts(rho0, rho1, m, &EntropicOptions::default())?;
            let lower = solve.dual_lower.max(0.0).powf(1.0 / m);
            Ok(WSolve {
                distance: solve.distance,
                gap: (solve.distance - lower).max(0.0),
                method: "entropic",
            })
        }
        SolverChoice::Auto => unreachable!(),
    }
}

/// Both sides of one inequality at a fixed resolution.
#[derive(Debug, Clone)]
pub struct SideEval {
    pub lhs: f64,
    pub rhs: f64,
    /// rhs (or lhs) uncertainty induced by the transport solver gap.
    pub w_error: f64,
    pub solver: &'static str,
    pub notes: Vec<(String, f64)>,
}

fn require_main_exponents(p: f64, q: f64) -> Result<f64> {
    if !(q > 1.0 && q < p) {
        return Err(Error::InvalidExponent(format!(
            "main-family checks need 1 < q < p, got p = {p}, q = {q}"
        )));
    }
    Ok(p / (p - q))
}

/// Admission: |∫|f|^{q-2} f| must not exceed ADMISSION_REL_TOL x ∫|f|^{q-1}.
fn require_admissible(f: &ScalarField, q: f64) -> Result<()> {
    let residual = signed_power_integral(f, q).abs();
    let tolerance = ADMISSION_REL_TOL * lr_norm(f, q - 1.0);
    if residual > tolerance {
        return Err(Error::ConstraintViolated {
            residual,
            tolerance,
        });
    }
    Ok(())
}

/// Σ |x_i - x0|^r |f_i|^{q-1} vol_i, the weighted moment the corollaries use.
pub fn weighted_moment(f: &ScalarField, q: f64, r: f64, x0: &[f64]) -> f64 {
    let grid = f.grid();
    (0..grid.len())
        .map(|i| {
            point_distance(grid.node(i), x0).powf(r)
                * f.values()[i].abs().powf(q - 1.0)
                * grid.volume(i)
        })
        .sum()
}

/// Nearest point of the closed domain (used to keep x0 feasible).
fn project_into_domain(domain: &ConvexDomain, x: &[f64]) -> Vec<f64> {
    if domain.contains(x, 1e-12) {
        return x.to_vec();
    }
    match domain {
        ConvexDomain::Interval { a, b } => vec![x[0].clamp(*a, *b)],
        ConvexDomain::Box { lo, hi } => x
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect(),
        ConvexDomain::Polygon2d { vertices } => {
            let mut best = vertices[0].to_vec();
            let mut best_d = f64::INFINITY;
            let n = vertices.len();
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                let len2 = ex * ex + ey * ey;
                let t = (((x[0] - a[0]) * ex + (x[1] - a[1]) * ey) / len2).clamp(0.0, 1.0);
                let cand = [a[0] + t * ex, a[1] + t * ey];
                let d = point_distance(&cand, x);
                if d < best_d {
                    best_d = d;
                    best = cand.to_vec();
                }
            }
            best
        }
    }
}

/// Minimize the convex map x0 -> weighted_moment over the domain by cyclic
/// coordinate ternary search on the bounding box, projected back inside.
pub fn minimize_weighted_moment(
    f: &ScalarField,
    q: f64,
    r: f64,
    ternary_steps: usize,
) -> (Vec<f64>, f64) {
    let domain = f.grid().domain();
    let (lo, hi) = domain.bounding_box();
    let dim = lo.len();
    let mut x = domain.centroid();
    for _round in 0..4 {
        for axis in 0..dim {
            let (mut a, mut b) = (lo[axis], hi[axis]);
            for _ in 0..ternary_steps {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                let eval = |v: f64, x: &mut Vec<f64>| {
                    x[axis] = v;
                    weighted_moment(f, q, r, x)
                };
                let f1 = eval(m1, &mut x);
                let f2 = eval(m2, &mut x);
                if f1 <= f2 {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            x[axis] = 0.5 * (a + b);
        }
    }
    let x = project_into_domain(domain, &x);
    let value = weighted_moment(f, q, r, &x);
    (x, value)
}

/// Deterministic interior candidate centers: centroid toward farthest vertex.
pub fn x0_candidates(domain: &ConvexDomain, count: usize) -> Vec<Vec<f64>> {
    let c = domain.centroid();
    let (lo, hi) = domain.bounding_box();
    // Farthest corner of the bounding box that lies in the domain direction.
    let far: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(a, v)| if hi[a] - v >= v - lo[a] { hi[a] } else { lo[a] })
        .collect();
    (0..count)
        .map(|k| {
            let s = if count == 1 {
                0.0
            } else {
                0.9 * k as f64 / (count - 1) as f64
            };
            let raw: Vec<f64> = c.iter().zip(&far).map(|(a, b)| a + s * (b - a)).collect();
            project_into_domain(domain, &raw)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Field-level side evaluations.
// ---------------------------------------------------------------------------

/// (∫|f|^q)^{p-q+1} <= W_r(rho0, rho1)^p / 2^{p-1} ∫|∇f|^p (∫|f|^{q-1})^{p-q}.
pub fn main_sides(
    f: &ScalarField,
    p: f64,
    q: f64,
    solver: SolverChoice,
    cap: usize,
) -> Result<SideEval> {
    let r = require_main_exponents(p, q)?;
    require_admissible(f, q)?;
    let (rho0, rho1) = rho_pair(f, q)?;
    let w = solve_w(&rho0, &rho1, r, solver, cap)?;
    let lhs = lr_norm(f, q).powf(p - q + 1.0);
    let energy = dirichlet_energy(f, p);
    let mass = lr_norm(f, q - 1.0).powf(p - q);
    let rhs_at = |dist: f64| dist.powf(p) / 2.0f64.powf(p - 1.0) * energy * mass;
    let rhs = rhs_at(w.distance);
    let w_error = rhs - rhs_at((w.distance - w.gap).max(0.0));
    Ok(SideEval {
        lhs,
        rhs,
        w_error,
        solver: w.method,
        notes: vec![("w_distance".into(), w.distance)],
    })
}

/// (∫|f|^q)^{p-q+1} <= 2 (inf_{x0} ∫|x-x0|^r |f|^{q-1})^{p-q} ∫|∇f|^p.
pub fn moment_sides(f: &ScalarField, p: f64, q: f64, ternary_steps: usize) -> Result<SideEval> {
    let r = require_main_exponents(p, q)?;
    require_admissible(f, q)?;
    // The split pair must exist for the inequality to be meaningful.
    rho_pair(f, q)?;
    let (x0, inf_moment) = minimize_weighted_moment(f, q, r, ternary_steps);
    let lhs = lr_norm(f, q).powf(p - q + 1.0);
    let rhs = 2.0 * inf_moment.powf(p - q) * dirichlet_energy(f, p);
    let mut notes: Vec<(String, f64)> = x0
        .iter()
        .enumerate()
        .map(|(a, v)| (format!("x0_{}", a + 1), *v))
        .collect();
    notes.push(("inf_moment".into(), inf_moment));
    Ok(SideEval {
        lhs,
        rhs,
        w_error: 0.0,
        solver: "moment",
        notes,
    })
}

/// W_r(rho0, rho1) <= 2 (∫|x-x0|^r |f|^{q-1})^{1/r} (∫|f|^{q-1})^{(q-p)/p}.
pub fn triangle_sides(
    f: &ScalarField,
    p: f64,
    q: f64,
    x0: &[f64],
    solver: SolverChoice,
    cap: usize,
) -> Result<SideEval> {
    let r = require_main_exponents(p, q)?;
    require_admissible(f, q)?;
    let (rho0, rho1) = rho_pair(f, q)?;
    let w = solve_w(&rho0, &rho1, r, solver, cap)?;
    let moment = weighted_moment(f, q, r, x0);
    let rhs = 2.0 * moment.powf(1.0 / r) * lr_norm(f, q - 1.0).powf((q - p) / p);
    Ok(SideEval {
        lhs: w.distance,
        rhs,
        w_error: w.gap,
        solver: w.method,
        notes: vec![("moment_at_x0".into(), moment)],
    })
}

/// ∫ phi (f1 - f0) <= W_r ‖∇phi‖_p ((‖f0‖_{q'}^{q'} + ‖f1‖_{q'}^{q'})/2)^{(q-1)/p}
/// for arbitrary unit-mass densities f0, f1 (broader than the split pair).
pub fn expedient_sides(
    phi: &ScalarField,
    f0: &ScalarField,
    f1: &ScalarField,
    p: f64,
    q: f64,
    solver: SolverChoice,
    cap: usize,
) -> Result<SideEval> {
    let r = require_main_exponents(p, q)?;
    let mass0 = lr_norm(f0, 1.0);
    let mass1 = lr_norm(f1, 1.0);
    if !(mass0 > 0.0) || !(mass1 > 0.0) {
        return Err(Error::ZeroMass);
    }
    let g0 = f0.scaled(1.0 / mass0);
    let g1 = f1.scaled(1.0 / mass1);
    let rho0 = DiscreteMeasure::from_density(&g0)?;
    let rho1 = DiscreteMeasure::from_density(&g1)?;
    let w = solve_w(&rho0, &rho1, r, solver, cap)?;
    let grid = phi.grid();
    let lhs: f64 = (0..grid.len())
        .map(|i| phi.values()[i] * (g1.values()[i] - g0.values()[i]) * grid.volume(i))
        .sum();
    let qp = q / (q - 1.0);
    let pair_norm = ((lr_norm(&g0, qp) + lr_norm(&g1, qp)) / 2.0).powf((q - 1.0) / p);
    let energy = dirichlet_energy(phi, p).powf(1.0 / p);
    let rhs_at = |dist: f64| dist * energy * pair_norm;
    let rhs = rhs_at(w.distance);
    let w_error = rhs - rhs_at((w.distance - w.gap).max(0.0));
    Ok(SideEval {
        lhs,
        rhs,
        w_error,
        solver: w.method,
        notes: vec![("w_distance".into(), w.distance)],
    })
}

/// (∫|f|^q)^{p-q+1} <= diam^p / 2^{p-1} ∫|∇f|^p (∫|f|^{q-1})^{p-q},
/// also verifying W_r <= diam(Ω) within solver tolerance.
pub fn nash_sides(
    f: &ScalarField,
    p: f64,
    q: f64,
    solver: SolverChoice,
    cap: usize,
) -> Result<SideEval> {
    let r = require_main_exponents(p, q)?;
    require_admissible(f, q)?;
    let (rho0, rho1) = rho_pair(f, q)?;
    let w = solve_w(&rho0, &rho1, r, solver, cap)?;
    let diam = f.grid().domain().diameter();
    if w.distance - w.gap > diam * (1.0 + 1e-9) {
        return Err(Error::Infeasible(w.distance - diam));
    }
    let lhs = lr_norm(f, q).powf(p - q + 1.0);
    let rhs = diam.powf(p) / 2.0f64.powf(p - 1.0)
        * dirichlet_energy(f, p)
        * lr_norm(f, q - 1.0).powf(p - q);
    Ok(SideEval {
        lhs,
        rhs,
        w_error: 0.0,
        solver: w.method,
        notes: vec![
            ("w_distance".into(), w.distance),
            ("w_over_diam".into(), w.distance / diam),
        ],
    })
}

/// min_t (∫|f-t|^q)^{p/q} <= diam^p / 2^{p-1} |Ω|^{p/q-1} ∫|∇f|^p.
pub fn pw_sides(f: &ScalarField, p: f64, q: f64) -> Result<SideEval> {
    require_main_exponents(p, q)?;
    let t = q_shift(f, q);
    let shifted = f.shifted(t);
    let domain = f.grid().domain();
    let lhs = lr_norm(&shifted, q).powf(p / q);
    let rhs = domain.diameter().powf(p) / 2.0f64.powf(p - 1.0)
        * domain.volume().powf(p / q - 1.0)
        * dirichlet_energy(f, p);
    Ok(SideEval {
        lhs,
        rhs,
        w_error: 0.0,
        solver: "pw",
        notes: vec![("t_q".into(), t)],
    })
}

// ---------------------------------------------------------------------------
// Instance-level checks: pre-shift, evaluate at two resolutions, bar the gap.
// ---------------------------------------------------------------------------

/// A domain/resolution/parameter tuple on which inequalities are certified.
/// Fields enter as closures so each resolution can resample them.
pub struct Instance<'a> {
    pub domain: &'a ConvexDomain,
    pub resolution: u32,
    pub p: f64,
    pub q: f64,
    pub solver: SolverChoice,
    pub pair_cap: usize,
}

/// Noise floor added to every error bar.
fn bar_floor(lhs: f64, rhs: f64) -> f64 {
    1e-13 * (lhs.abs() + rhs.abs())
}

impl<'a> Instance<'a> {
    pub fn new(domain: &'a ConvexDomain, resolution: u32, p: f64, q: f64) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::ResolutionTooLow(resolution));
        }
        Ok(Instance {
            domain,
            resolution,
            p,
            q,
            solver: SolverChoice::Auto,
            pair_cap: DEFAULT_PAIR_CAP,
        })
    }

    pub fn with_solver(mut self, solver: SolverChoice) -> Self {
        self.solver = solver;
        self
    }

    fn grids(&self) -> Result<(Arc<Grid>, Arc<Grid>)> {
        let fine = self.domain.discretize(self.resolution)?;
        let coarse = self.domain.discretize(self.resolution / 2)?;
        Ok((fine, coarse))
    }

    /// Shifted field on a grid: f - q_shift(f, q).
    fn admissible_field(
        &self,
        grid: &Arc<Grid>,
        field: &dyn Fn(&[f64]) -> f64,
    ) -> Result<ScalarField> {
        let raw = ScalarField::from_fn(grid, "field", field);
        let shifted = raw.shifted(q_shift(&raw, self.q));
        if shifted.max() <= 0.0 || shifted.min() >= 0.0 {
            return Err(Error::OneSigned);
        }
        Ok(shifted)
    }

    fn finish(
        &self,
        id: InequalityId,
        fine: SideEval,
        coarse: SideEval,
        started: Instant,
    ) -> InequalityReport {
        let error_bar = (fine.lhs - coarse.lhs).abs()
            + (fine.rhs - coarse.rhs).abs()
            + fine.w_error
            + bar_floor(fine.lhs, fine.rhs);
        InequalityReport {
            id,
            p: self.p,
            q: self.q,
            r: self.p / (self.p - self.q),
            domain: self.domain.id(),
            resolution: self.resolution,
            solver: fine.solver.to_string(),
            lhs: fine.lhs,
            rhs: fine.rhs,
            slack: fine.rhs - fine.lhs,
            error_bar,
            runtime_ms: started.elapsed().as_secs_f64() * 1e3,
            notes: fine.notes,
        }
    }

    pub fn check_main(&self, field: &dyn Fn(&[f64]) -> f64) -> Result<InequalityReport> {
        let started = Instant::now();
        let (gf, gc) = self.grids()?;
        let fine = main_sides(&self.admissible_field(&gf, field)?, self.p, self.q, self.solver, self.pair_cap)?;
        let coarse = main_sides(&self.admissible_field(&gc, field)?, self.p, self.q, self.solver, self.pair_cap)?;
        Ok(self.finish(InequalityId::Main, fine, coarse, started))
    }

    pub fn check_moment(
        &self,
        field: &dyn Fn(&[f64]) -> f64,
        ternary_steps: usize,
    ) -> Result<InequalityReport> {
        let started = Instant::now();
        let (gf, gc) = self.grids()?;
        let fine = moment_sides(&self.admissible_field(&gf, field)?, self.p, self.q, ternary_steps)?;
        let coarse = moment_sides(&self.admissible_field(&gc, field)?, self.p, self.q, ternary_steps)?;
        Ok(self.finish(InequalityId::Moment, fine, coarse, started))
    }

    pub fn check_triangle_bound(
        &self,
        field: &dyn Fn(&[f64]) -> f64,
        x0: &[f64],
    ) -> Result<InequalityReport> {
        let started = Instant::now();
        if !self.domain.contains(x0, 1e-12) {
            return Err(Error::Degenerate(format!("x0 {x0:?} outside the domain")));
        }
        let (gf, gc) = self.grids()?;
        let fine = triangle_sides(&self.admissible_field(&gf, field)?, self.p, self.q, x0, self.solver, self.pair_cap)?;
        let coarse = triangle_sides(&self.admissible_field(&gc, field)?, self.p, self.q, x0, self.solver, self.pair_cap)?;
        Ok(self.finish(InequalityId::Triangle, fine, coarse, started))
    }

    pub fn check_nash(&self, field: &dyn Fn(&[f64]) -> f64) -> Result<InequalityReport> {
        let started = Instant::now();
        let (gf, gc) = self.grids()?;
        let fine = nash_sides(&self.admissible_field(&gf, field)?, self.p, self.q, self.solver, self.pair_cap)?;
        let coarse = nash_sides(&self.admissible_field(&gc, field)?, self.p, self.q, self.solver, self.pair_cap)?;
        Ok(self.finish(InequalityId::Nash, fine, coarse, started))
    }

    pub fn check_pw(&self, field: &dyn Fn(&[f64]) -> f64) -> Result<InequalityReport> {
        let started = Instant::now();
        let (gf, gc) = self.grids()?;
        // No admission constraint: the shift inside pw_sides supplies it.
        let fine = pw_sides(&ScalarField::from_fn(&gf, "field", field), self.p, self.q)?;
        let coarse = pw_sides(&ScalarField::from_fn(&gc, "field", field), self.p, self.q)?;
        Ok(self.finish(InequalityId::Pw, fine, coarse, started))
    }

    pub fn check_expedient(
        &self,
        phi: &dyn Fn(&[f64]) -> f64,
        f0: &dyn Fn(&[f64]) -> f64,
        f1: &dyn Fn(&[f64]) -> f64,
    ) -> Result<InequalityReport> {
        let started = Instant::now();
        let (gf, gc) = self.grids()?;
        let build = |g: &Arc<Grid>| -> Result<SideEval> {
            expedient_sides(
                &ScalarField::from_fn(g, "phi", phi),
                &ScalarField::from_fn(g, "f0", f0),
                &ScalarField::from_fn(g, "f1", f1),
                self.p,
                self.q,
                self.solver,
                self.pair_cap,
            )
        };
        let fine = build(&gf)?;
        let coarse = build(&gc)?;
        Ok(self.finish(InequalityId::Expedient, fine, coarse, started))
    }
}

// ---------------------------------------------------------------------------
// Eigenvalue bounds and the thin-box study.
// ---------------------------------------------------------------------------

/// The two diameter lower bounds on the first nontrivial Neumann eigenvalue.
#[derive(Debug)]
pub struct EigenBoundReport {
    /// 2^{p-1} / diam^p <= mu.
    pub pw: InequalityReport,
    /// (pi_p / diam)^p <= mu (sharp).
    pub sharp: InequalityReport,
    /// mu diam^p / pi_p^p.
    pub sharpness_ratio: f64,
    pub eigen: EigenResult,
}

/// Solve the eigenproblem at `resolution` and half of it, and compare both
/// lower bounds against the estimate with a refinement-based error bar
/// (Richardson for p = 2).
pub fn check_eigen_bound(
    domain: &ConvexDomain,
    p: f64,
    resolution: u32,
) -> Result<EigenBoundReport> {
    let started = Instant::now();
    if resolution < 4 {
        return Err(Error::ResolutionTooLow(resolution));
    }
    let fine = neumann_eigenvalue(&domain.discretize(resolution)?, p)?;
    let coarse = neumann_eigenvalue(&domain.discretize(resolution / 2)?, p)?;
    let error_bar = if (p - 2.0).abs() < 1e-12 {
        // O(h^2) convergence: Richardson gap, doubled for safety.
        2.0 / 3.0 * (fine.value - coarse.value).abs()
    } else {
        2.0 * (fine.value - coarse.value).abs()
    } + 1e-13 * fine.value;
    let diam = domain.diameter();
    let mu = fine.value;
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
    let report = |id: InequalityId, lhs: f64| InequalityReport {
        id,
        p,
        q: p,
        r: f64::NAN,
        domain: domain.id(),
        resolution,
        solver: if (p - 2.0).abs() < 1e-12 {
            "linear-eigen".to_string()
        } else {
            "rayleigh-descent".to_string()
        },
        lhs,
        rhs: mu,
        slack: mu - lhs,
        error_bar,
        runtime_ms,
        notes: vec![
            ("mu".into(), mu),
            ("diam".into(), diam),
            ("iterations".into(), fine.iterations as f64),
        ],
    };
    let pw = report(InequalityId::EigenPw, 2.0f64.powf(p - 1.0) / diam.powf(p));
    let sharp = report(InequalityId::EigenSharp, (pi_p(p) / diam).powf(p));
    let sharpness_ratio = mu * diam.powf(p) / pi_p(p).powf(p);
    Ok(EigenBoundReport {
        pw,
        sharp,
        sharpness_ratio,
        eigen: fine,
    })
}

/// One thin-box data point.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub n: u32,
    pub volume: f64,
    pub ratio: f64,
}

/// Log-log fit of the Poincaré ratio against |Ω_n| on the box family
/// `[0,1] x [0,1/n]`.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub p: f64,
    pub q: f64,
    pub rows: Vec<ScalingRow>,
    pub slope: f64,
    pub target_slope: f64,
}

impl ScalingReport {
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "n,volume,ratio")?;
        for row in &self.rows {
            writeln!(out, "{},{},{}", row.n, row.volume, row.ratio)?;
        }
        Ok(())
    }
}

/// Ratio R_n = (min_t ∫|x1 - t|^q)^{p/q} / ∫|∇x1|^p on `[0,1] x [0,1/n]` for
/// each n, with the fitted slope of log R_n against log |Ω_n|.
pub fn thin_box_scaling(
    p: f64,
    q: f64,
    n_list: &[u32],
    resolution: u32,
) -> Result<ScalingReport> {
    require_main_exponents(p, q)?;
    if n_list.len() < 3 {
        return Err(Error::InvalidExponent(format!(
            "thin-box scaling needs at least 3 box parameters, got {}",
            n_list.len()
        )));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let domain = ConvexDomain::box_nd(vec![0.0, 0.0], vec![1.0, 1.0 / n as f64])?;
        let grid = domain.discretize(resolution)?;
        let f = ScalarField::from_fn(&grid, "x1", |x| x[0]);
        let shifted = f.shifted(q_shift(&f, q));
        let ratio = lr_norm(&shifted, q).powf(p / q) / dirichlet_energy(&f, p);
        rows.push(ScalingRow {
            n,
            volume: domain.volume(),
            ratio,
        });
    }
    // Least-squares slope in log-log coordinates.
    let xs: Vec<f64> = rows.iter().map(|r| r.volume.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ratio.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    Ok(ScalingReport {
        p,
        q,
        rows,
        slope: sxy / sxx,
        target_slope: (p - q) / q,
    })
}
