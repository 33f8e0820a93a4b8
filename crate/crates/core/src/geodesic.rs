//! Displacement interpolation along Wasserstein geodesics and the geodesic
//! convexity check for L^q norms.
//!
//! Interpolation is realized statically from an optimal plan: atoms move along
//! straight segments. In 1D a closed-form density mode is also available: the
//! monotone map between the piecewise-linear CDFs transports each source cell
//! onto a warped interval, which gives an exact piecewise-constant pushforward
//! density (no atom-cloud binning).

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::field::{lr_norm, ScalarField};
use crate::measure::DiscreteMeasure;
use crate::transport::TransportPlan;
use std::io::Write;
use std::sync::Arc;

/// One time slice of a displacement interpolation.
#[derive(Debug, Clone)]
pub struct GeodesicSample {
    pub t: f64,
    pub measure: DiscreteMeasure,
    /// Present in the 1D closed-form density mode.
    pub density: Option<PiecewiseDensity1d>,
}

impl GeodesicSample {
    /// CSV rows `t,x1,...,xd,weight`.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        for i in 0..self.measure.len() {
            write!(out, "{}", self.t)?;
            for c in self.measure.position(i) {
                write!(out, ",{c}")?;
            }
            writeln!(out, ",{}", self.measure.weight(i))?;
        }
        Ok(())
    }
}

/// Atoms at (1-t) x_i + t y_j with the plan weights; coincident points merged.
pub fn displacement_interpolate(plan: &TransportPlan, t: f64) -> Result<GeodesicSample> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::BadTime(t));
    }
    let dim = plan.source().dim();
    let mut atoms: Vec<(Vec<f64>, f64)> = Vec::with_capacity(plan.entries().len());
    for (i, j, w) in plan.entries() {
        let x = plan.source().position(*i as usize);
        let y = plan.target().position(*j as usize);
        let pos: Vec<f64> = x
            .iter()
            .zip(y)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        atoms.push((pos, *w));
    }
    // Deterministic merge of exactly coincident atoms.
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite positions"));
    let mut positions = Vec::with_capacity(atoms.len() * dim);
    let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut last: Option<&[f64]> = None;
    for (pos, w) in &atoms {
        if last == Some(pos.as_slice()) {
            *weights.last_mut().expect("nonempty") += w;
        } else {
            positions.extend_from_slice(pos);
            weights.push(*w);
            last = Some(pos.as_slice());
        }
    }
    let measure = DiscreteMeasure::from_atoms(dim, positions, weights)?;
    Ok(GeodesicSample {
        t,
        measure,
        density: None,
    })
}

/// Piecewise-constant density on consecutive breakpoints.
#[derive(Debug, Clone)]
pub struct PiecewiseDensity1d {
    /// n + 1 nondecreasing breakpoints.
    pub breaks: Vec<f64>,
    /// n density values, one per piece.
    pub density: Vec<f64>,
}

impl PiecewiseDensity1d {
    pub fn mass(&self) -> f64 {
        self.density
            .iter()
            .enumerate()
            .map(|(k, d)| d * (self.breaks[k + 1] - self.breaks[k]))
            .sum()
    }

    /// ∫ f^q, exact on the representation.
    pub fn lq_integral(&self, q: f64) -> f64 {
        assert!(q >= 1.0);
        self.density
            .iter()
            .enumerate()
            .map(|(k, d)| d.powf(q) * (self.breaks[k + 1] - self.breaks[k]))
            .sum()
    }

    /// Conservative rebinning onto grid cells: value = overlapped mass / cell width.
    pub fn resample(&self, grid: &Arc<Grid>, name: &str) -> Result<ScalarField> {
        if grid.dim() != 1 {
            return Err(Error::DimensionMismatch(grid.dim(), 1));
        }
        let mut values = vec![0.0; grid.len()];
        for (i, value) in values.iter_mut().enumerate() {
            let h = grid.volume(i);
            let lo = grid.node(i)[0] - 0.5 * h;
            let hi = grid.node(i)[0] + 0.5 * h;
            let mut mass = 0.0;
            for (k, d) in self.density.iter().enumerate() {
                let a = self.breaks[k].max(lo);
                let b = self.breaks[k + 1].min(hi);
                if b > a {
                    mass += d * (b - a);
                }
            }
            *value = mass / h;
        }
        ScalarField::from_values(grid, name, values)
    }

    /// Atoms at piece midpoints weighted by piece mass.
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        let mut positions = Vec::new();
        let mut weights = Vec::new();
        for (k, d) in self.density.iter().enumerate() {
            let w = d * (self.breaks[k + 1] - self.breaks[k]);
            if w > 0.0 {
                positions.push(0.5 * (self.breaks[k] + self.breaks[k + 1]));
                weights.push(w);
            }
        }
        DiscreteMeasure::from_atoms(1, positions, weights)
    }
}

/// Output of the 1D closed-form interpolant.
#[derive(Debug, Clone)]
pub struct InterpolantDensity {
    /// Density resampled onto the input grid.
    pub field: ScalarField,
    /// Exact warped-cell representation.
    pub piecewise: PiecewiseDensity1d,
    /// |input mass - 1|, reported to the caller.
    pub mass_drift: f64,
    pub renormalized: bool,
}

struct Cdf1d {
    /// Cell edges (n + 1 values).
    edges: Vec<f64>,
    /// Cumulative mass at cell edges, scaled to end at 1.
    cum: Vec<f64>,
    /// Per-cell density of the scaled CDF.
    slope: Vec<f64>,
}

impl Cdf1d {
    fn build(f: &ScalarField) -> Result<(Self, f64)> {
        let grid = f.grid();
        if grid.dim() != 1 {
            return Err(Error::DimensionMismatch(grid.dim(), 1));
        }
        for (i, v) in f.values().iter().enumerate() {
            if *v < 0.0 {
                return Err(Error::NegativeDensity { node: i, value: *v });
            }
        }
        let n = grid.len();
        let mut edges = Vec::with_capacity(n + 1);
        for i in 0..n {
            edges.push(grid.node(i)[0] - 0.5 * grid.volume(i));
        }
        edges.push(grid.node(n - 1)[0] + 0.5 * grid.volume(n - 1));
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            cum[i + 1] = cum[i] + f.values()[i] * grid.volume(i);
        }
        let total = cum[n];
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(total));
        }
        let slope: Vec<f64> = f.values().iter().map(|v| v / total).collect();
        for c in cum.iter_mut() {
            *c /= total;
        }
        Ok((Cdf1d { edges, cum, slope }, total))
    }

    /// Generalized inverse F^{-1}(s) = inf{x : F(x) >= s}, with s = 0 mapped to
    /// the left end of the support.
    fn inverse(&self, s: f64) -> f64 {
        let n = self.slope.len();
        if s <= 0.0 {
            let first = self.slope.iter().position(|d| *d > 0.0).unwrap_or(0);
            return self.edges[first];
        }
        if s >= 1.0 {
            let last = n - 1 - self.slope.iter().rev().position(|d| *d > 0.0).unwrap_or(0);
            return self.edges[last + 1];
        }
        // First increasing cell whose cumulative range reaches s.
        let mut lo = 0usize;
        let mut hi = n;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cum[mid + 1] >= s {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let l = lo;
        let ds = self.cum[l + 1] - self.cum[l];
        if ds <= 0.0 {
            return self.edges[l];
        }
        let frac = (s - self.cum[l]) / ds;
        self.edges[l] + frac * (self.edges[l + 1] - self.edges[l])
    }

    /// True if a zero-density piece of positive width lies strictly inside (a, b).
    fn has_interior_plateau(&self, a: f64, b: f64) -> bool {
        for (l, d) in self.slope.iter().enumerate() {
            if *d > 0.0 {
                continue;
            }
            let lo = self.edges[l].max(a);
            let hi = self.edges[l + 1].min(b);
            if hi - lo > 1e-13 * (self.edges[self.slope.len()] - self.edges[0]) {
                return true;
            }
        }
        false
    }
}

/// Closed-form 1D displacement interpolant between grid densities `f0`, `f1`
/// at time `t`, via the monotone map of their piecewise-linear CDFs.
pub fn interpolant_density_1d(
    f0: &ScalarField,
    f1: &ScalarField,
    t: f64,
) -> Result<InterpolantDensity> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::BadTime(t));
    }
    if !Arc::ptr_eq(f0.grid(), f1.grid()) && f0.grid().domain() != f1.grid().domain() {
        return Err(Error::GridMismatch("interpolant needs a shared domain".into()));
    }
    if f0.grid().len() != f1.grid().len() {
        return Err(Error::GridMismatch("interpolant needs equal resolutions".into()));
    }
    let (cdf0, total0) = Cdf1d::build(f0)?;
    let (cdf1, _) = Cdf1d::build(f1)?;
    let grid = f0.grid();
    let n = grid.len();

    // Warp source-cell edges: e -> (1-t) e + t T(e), T = F1^{-1} ∘ F0.
    let mut breaks = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let target = cdf1.inverse(cdf0.cum[k]);
        breaks.push((1.0 - t) * cdf0.edges[k] + t * target);
    }
    let mut density = Vec::with_capacity(n);
    for k in 0..n {
        let mass = cdf0.slope[k] * (cdf0.edges[k + 1] - cdf0.edges[k]);
        if mass > 0.0 {
            let (ta, tb) = (cdf1.inverse(cdf0.cum[k]), cdf1.inverse(cdf0.cum[k + 1]));
            if cdf1.has_interior_plateau(ta, tb) {
                return Err(Error::DegenerateCdf(k));
            }
        }
        let width = breaks[k + 1] - breaks[k];
        density.push(if width > 0.0 && mass > 0.0 {
            mass / width
        } else {
            0.0
        });
    }
    let piecewise = PiecewiseDensity1d { breaks, density };

    let mass_drift = (total0 - 1.0).abs();
    let renormalized = mass_drift > 1e-6;
    let mut field = piecewise.resample(grid, &format!("interp(t={t})"))?;
    if renormalized {
        field = field.scaled(1.0 / total0);
    }
    Ok(InterpolantDensity {
        field,
        piecewise,
        mass_drift,
        renormalized,
    })
}

/// Max over sampled t of ‖f_t‖_q - ((1-t) ‖f0‖_q^q + t ‖f1‖_q^q)^{1/q}.
/// Nonpositive up to numerical tolerance when the densities are admissible.
pub fn lq_convexity_check(
    f0: &ScalarField,
    f1: &ScalarField,
    q: f64,
    t_samples: &[f64],
) -> Result<f64> {
    assert!(q >= 1.0, "lq_convexity_check requires q >= 1");
    let n0 = lr_norm(f0, q);
    let n1 = lr_norm(f1, q);
    let mut worst = f64::NEG_INFINITY;
    for &t in t_samples {
        let interp = interpolant_density_1d(f0, f1, t)?;
        let lhs = interp.piecewise.lq_integral(q).powf(1.0 / q);
        let rhs = ((1.0 - t) * n0 + t * n1).powf(1.0 / q);
        worst = worst.max(lhs - rhs);
    }
    Ok(worst)
}
