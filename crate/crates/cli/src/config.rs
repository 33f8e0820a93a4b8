//! Experiment configuration: JSON schema, validation, and the mapping onto
//! core domain/field values.

use anyhow::{anyhow, bail, Context, Result};
use otcert_core::{parse_expr, ConvexDomain, Grid, Polynomial, SolverChoice};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polygon2d { vertices: Vec<[f64; 2]> },
}

impl DomainSpec {
    pub fn build(&self) -> Result<ConvexDomain> {
        let d = match self {
            DomainSpec::Interval { a, b } => ConvexDomain::interval(*a, *b),
            DomainSpec::Box { lo, hi } => ConvexDomain::box_nd(lo.clone(), hi.clone()),
            DomainSpec::Polygon2d { vertices } => ConvexDomain::polygon(vertices.clone()),
        };
        d.map_err(|e| anyhow!("invalid domain: {e}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct PolyTermSpec {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PolySpec {
    pub terms: Vec<PolyTermSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    /// Closed-form expression over x1..xN, e.g. `{"expr": "x1 - 0.5"}`.
    Expr { expr: String },
    /// Coefficient list, e.g. `{"poly": {"terms": [{"coef":1,"powers":[2,0]}]}}`.
    Poly { poly: PolySpec },
    /// Node values from a CSV of `index,value` rows sampled on `resolution`.
    Csv { csv: PathBuf },
}

/// Boxed field closure, shareable across sweep workers.
pub type FieldFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + Send + 'a>;

/// A field that can be sampled on any grid over the domain.
pub enum FieldSource {
    Fn(FieldFn<'static>),
    /// Values pinned to a reference grid; resampled by nearest node.
    Pinned { grid: Arc<Grid>, values: Vec<f64> },
}

impl FieldSource {
    pub fn as_fn(&self) -> FieldFn<'_> {
        match self {
            FieldSource::Fn(f) => Box::new(move |x: &[f64]| f(x)),
            FieldSource::Pinned { grid, values } => {
                let grid = Arc::clone(grid);
                let values = values.clone();
                Box::new(move |x: &[f64]| values[grid.nearest_node(x)])
            }
        }
    }
}

impl FieldSpec {
    pub fn build(&self, domain: &ConvexDomain, resolution: u32) -> Result<FieldSource> {
        match self {
            FieldSpec::Expr { expr } => {
                let parsed = parse_expr(expr).map_err(|e| anyhow!("invalid field: {e}"))?;
                if parsed.max_axis() > domain.dim() {
                    bail!(
                        "field references x{} but the domain has dimension {}",
                        parsed.max_axis(),
                        domain.dim()
                    );
                }
                Ok(FieldSource::Fn(Box::new(move |x: &[f64]| parsed.eval(x))))
            }
            FieldSpec::Poly { poly } => {
                let dim = domain.dim();
                for t in &poly.terms {
                    if t.powers.len() != dim {
                        bail!(
                            "polynomial term has {} powers for a {}-dimensional domain",
                            t.powers.len(),
                            dim
                        );
                    }
                }
                let p = Polynomial {
                    dim,
                    terms: poly.terms.iter().map(|t| (t.coef, t.powers.clone())).collect(),
                };
                Ok(FieldSource::Fn(Box::new(move |x: &[f64]| p.eval(x))))
            }
            FieldSpec::Csv { csv } => {
                let grid = domain
                    .discretize(resolution)
                    .map_err(|e| anyhow!("cannot grid domain: {e}"))?;
                let values = read_field_csv(csv, grid.len())?;
                Ok(FieldSource::Pinned { grid, values })
            }
        }
    }
}

/// Parse `index,value` rows (optional header) into a node-value vector.
pub fn read_field_csv(path: &Path, nodes: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading field CSV {}", path.display()))?;
    let mut values = vec![f64::NAN; nodes];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let first = parts.next().unwrap_or_default().trim();
        if lineno == 0 && first.parse::<usize>().is_err() {
            continue; // header
        }
        let idx: usize = first
            .parse()
            .with_context(|| format!("line {}: bad node index '{first}'", lineno + 1))?;
        let val: f64 = parts
            .next()
            .ok_or_else(|| anyhow!("line {}: missing value", lineno + 1))?
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad value", lineno + 1))?;
        if idx >= nodes {
            bail!("line {}: node index {idx} out of range ({nodes} nodes)", lineno + 1);
        }
        values[idx] = val;
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        bail!("field CSV leaves node {i} unset");
    }
    Ok(values)
}

fn default_experiment() -> String {
    "experiment".to_string()
}

fn default_solver() -> String {
    "auto".to_string()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_fields_per_case() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_solver")]
    pub solver: String,
    pub resolution: Option<u32>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub domain: Option<DomainSpec>,
    pub field: Option<FieldSpec>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// Sweep grid; falls back to `p`/`q` singletons.
    #[serde(default)]
    pub p_values: Vec<f64>,
    #[serde(default)]
    pub q_values: Vec<f64>,
    /// Seeded random fields per (p, q) cell when no explicit field is given.
    #[serde(default = "default_fields_per_case")]
    pub fields_per_case: usize,
    /// Density pair for the geodesic subcommand.
    #[serde(default)]
    pub densities: Vec<FieldSpec>,
    #[serde(default)]
    pub t_samples: Vec<f64>,
    #[serde(default)]
    pub q_norms: Vec<f64>,
    /// Thin-box parameters for the scaling subcommand.
    #[serde(default)]
    pub n_list: Vec<u32>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn solver_choice(&self) -> Result<SolverChoice> {
        SolverChoice::parse(&self.solver).map_err(|e| anyhow!("{e}"))
    }

    pub fn domain(&self) -> Result<ConvexDomain> {
        self.domain
            .as_ref()
            .ok_or_else(|| anyhow!("config needs a \"domain\" section"))?
            .build()
    }

    /// Resolution with a dimension-aware default (1D grids can afford more cells).
    pub fn resolution_for(&self, dim: usize) -> u32 {
        self.resolution.unwrap_or(if dim == 1 { 256 } else { 24 })
    }

    /// The (p, q) grid: explicit lists, else the singletons.
    pub fn pq_grid(&self) -> Result<Vec<(f64, f64)>> {
        let ps = if self.p_values.is_empty() {
            vec![self.p.ok_or_else(|| anyhow!("config needs \"p\" or \"p_values\""))?]
        } else {
            self.p_values.clone()
        };
        let qs = if self.q_values.is_empty() {
            vec![self.q.ok_or_else(|| anyhow!("config needs \"q\" or \"q_values\""))?]
        } else {
            self.q_values.clone()
        };
        let mut grid = Vec::new();
        for &p in &ps {
            for &q in &qs {
                grid.push((p, q));
            }
        }
        Ok(grid)
    }
}

/// Human-readable schema, printed by `otcert version --schema`.
pub const CONFIG_SCHEMA: &str = r#"Config file (JSON):
{
  "experiment": "string id (default: \"experiment\")",
  "seed": 0,
  "solver": "auto | exact | entropic | 1d",
  "resolution": 256,               // cells per axis; default 256 (1D) / 24 (2D)
  "out": "output directory",
  "domain": {"kind": "interval", "a": 0, "b": 1}
          | {"kind": "box", "lo": [0, 0], "hi": [1, 0.5]}
          | {"kind": "polygon2d", "vertices": [[0,0], [1,0], [0,1]]},
  "field": {"expr": "x1 - 0.5"}
         | {"poly": {"terms": [{"coef": 1.0, "powers": [2, 0]}]}}
         | {"csv": "nodes.csv"},   // rows: node_index,value
  "p": 3.0, "q": 2.0,              // single instance (certify, eigen, scaling)
  "p_values": [2.2, 3, 4],         // sweep grid (overrides p/q)
  "q_values": [1.5, 2],
  "fields_per_case": 3,            // seeded random degree-4 fields per cell
  "densities": [fieldspec, fieldspec],  // geodesic: two nonnegative densities
  "t_samples": [0, 0.1, ..., 1],   // geodesic times (default 0..1 step 0.1)
  "q_norms": [1, 2, 3],            // geodesic convexity exponents
  "n_list": [1, 2, 4, 8, 16]       // scaling: thin boxes [0,1] x [0,1/n]
}

Subcommand requirements:
  certify:  domain, field, p, q
  sweep:    domain, p_values/q_values (field optional; else seeded fields)
  eigen:    domain, p (or p_values)
  geodesic: 1D domain, densities (normalized internally to unit mass)
  scaling:  p, q, n_list
"#;
