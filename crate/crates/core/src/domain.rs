//! Bounded convex domains and their cell-centered discretizations.
//!
//! Three domain kinds are supported: intervals, axis-aligned boxes in R^N,
//! and convex polygons in the plane. A [`Grid`] is a uniform cell partition
//! (clipped to the polygon in the 2D polygon case) carrying one quadrature
//! node per cell together with the cell volume.

use crate::error::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

/// A bounded convex domain in R^N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ConvexDomain {
    /// Open interval (a, b) with a < b.
    Interval { a: f64, b: f64 },
    /// Axis-aligned box with lo < hi componentwise.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Convex polygon, vertices in counterclockwise order, positive area.
    Polygon2d { vertices: Vec<[f64; 2]> },
}

/// Signed area of a polygon via the shoelace formula (positive for CCW).
fn shoelace_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for i in 0..n {
        let [x0, y0] = vertices[i];
        let [x1, y1] = vertices[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    0.5 * twice
}

/// Centroid of a polygon with the given (signed, nonzero) area.
fn polygon_centroid(vertices: &[[f64; 2]], area: f64) -> [f64; 2] {
    let n = vertices.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let [x0, y0] = vertices[i];
        let [x1, y1] = vertices[(i + 1) % n];
        let w = x0 * y1 - x1 * y0;
        cx += (x0 + x1) * w;
        cy += (y0 + y1) * w;
    }
    [cx / (6.0 * area), cy / (6.0 * area)]
}

/// Clip a convex polygon against the half-plane {x: n·x <= c} (Sutherland-Hodgman step).
fn clip_halfplane(poly: &[[f64; 2]], normal: [f64; 2], offset: f64, out: &mut Vec<[f64; 2]>) {
    out.clear();
    let n = poly.len();
    if n == 0 {
        return;
    }
    for i in 0..n {
        let cur = poly[i];
        let next = poly[(i + 1) % n];
        let dc = normal[0] * cur[0] + normal[1] * cur[1] - offset;
        let dn = normal[0] * next[0] + normal[1] * next[1] - offset;
        if dc <= 0.0 {
            out.push(cur);
        }
        if (dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0) {
            let t = dc / (dc - dn);
            out.push([cur[0] + t * (next[0] - cur[0]), cur[1] + t * (next[1] - cur[1])]);
        }
    }
}

/// Intersection of a convex polygon with an axis-aligned rectangle.
fn clip_to_rect(poly: &[[f64; 2]], xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Vec<[f64; 2]> {
    let mut a = poly.to_vec();
    let mut b = Vec::with_capacity(poly.len() + 4);
    clip_halfplane(&a, [-1.0, 0.0], -xmin, &mut b);
    clip_halfplane(&b, [1.0, 0.0], xmax, &mut a);
    clip_halfplane(&a, [0.0, -1.0], -ymin, &mut b);
    clip_halfplane(&b, [0.0, 1.0], ymax, &mut a);
    a
}

impl ConvexDomain {
    /// Open interval (a, b).
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(b - a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Degenerate(format!("interval ({a}, {b})")));
        }
        Ok(ConvexDomain::Interval { a, b })
    }

    /// Axis-aligned box with corners `lo` and `hi`.
    pub fn box_nd(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Degenerate(format!(
                "box corner dimensions {} vs {}",
                lo.len(),
                hi.len()
            )));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(h - l > 0.0) || !l.is_finite() || !h.is_finite() {
                return Err(Error::Degenerate(format!("box side [{l}, {h}]")));
            }
        }
        Ok(ConvexDomain::Box { lo, hi })
    }

    /// Convex polygon from its vertex list. Clockwise input is reversed to
    /// counterclockwise; a vertex order that is neither is rejected.
    pub fn polygon(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Degenerate("polygon needs at least 3 vertices".into()));
        }
        for i in 0..vertices.len() {
            for j in (i + 1)..vertices.len() {
                if vertices[i] == vertices[j] {
                    return Err(Error::NonConvex(format!("repeated vertex at {i} and {j}")));
                }
            }
        }
        // Cross products of consecutive edges must share one sign (no reflex
        // turns); a sign mix means a self-crossing or nonconvex vertex order.
        let n = vertices.len();
        let scale: f64 = vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(1.0f64, |a, c| a.max(c.abs()));
        let tol = 1e-12 * scale * scale;
        let (mut any_pos, mut any_neg) = (false, false);
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            any_pos |= cross > tol;
            any_neg |= cross < -tol;
        }
        if any_pos && any_neg {
            return Err(Error::NonConvex("vertex order has turns of both signs".into()));
        }
        if any_neg {
            vertices.reverse();
        }
        let area = shoelace_area(&vertices);
        if !(area > tol) {
            return Err(Error::Degenerate(format!("polygon area {area}")));
        }
        Ok(ConvexDomain::Polygon2d { vertices })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            ConvexDomain::Interval { .. } => 1,
            ConvexDomain::Box { lo, .. } => lo.len(),
            ConvexDomain::Polygon2d { .. } => 2,
        }
    }

    /// Supremum of pairwise point distances. Attained at vertex pairs for polytopes.
    pub fn diameter(&self) -> f64 {
        match self {
            ConvexDomain::Interval { a, b } => b - a,
            ConvexDomain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (h - l) * (h - l))
                .sum::<f64>()
                .sqrt(),
            ConvexDomain::Polygon2d { vertices } => {
                let mut best = 0.0f64;
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        let d2 = (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
                        best = best.max(d2);
                    }
                }
                best.sqrt()
            }
        }
    }

    /// Lebesgue measure of the domain.
    pub fn volume(&self) -> f64 {
        match self {
            ConvexDomain::Interval { a, b } => b - a,
            ConvexDomain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
            ConvexDomain::Polygon2d { vertices } => shoelace_area(vertices),
        }
    }

    /// Axis-aligned bounding box as (lo, hi) corner vectors.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ConvexDomain::Interval { a, b } => (vec![*a], vec![*b]),
            ConvexDomain::Box { lo, hi } => (lo.clone(), hi.clone()),
            ConvexDomain::Polygon2d { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Whether `x` lies in the closed domain, up to an absolute slack `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexDomain::Interval { a, b } => {
                x.len() == 1 && x[0] >= a - tol && x[0] <= b + tol
            }
            ConvexDomain::Box { lo, hi } => {
                x.len() == lo.len()
                    && x.iter()
                        .zip(lo.iter().zip(hi))
                        .all(|(xi, (l, h))| *xi >= l - tol && *xi <= h + tol)
            }
            ConvexDomain::Polygon2d { vertices } => {
                if x.len() != 2 {
                    return false;
                }
                let n = vertices.len();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
                    let edge = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    if cross < -tol * edge.max(1.0) {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// A canonical interior point (midpoint or area centroid).
    pub fn centroid(&self) -> Vec<f64> {
        match self {
            ConvexDomain::Interval { a, b } => vec![0.5 * (a + b)],
            ConvexDomain::Box { lo, hi } => {
                lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect()
            }
            ConvexDomain::Polygon2d { vertices } => {
                polygon_centroid(vertices, shoelace_area(vertices)).to_vec()
            }
        }
    }

    /// Short textual id for report rows; contains no commas so it embeds in CSV.
    pub fn id(&self) -> String {
        match self {
            ConvexDomain::Interval { a, b } => format!("interval({a}..{b})"),
            ConvexDomain::Box { lo, hi } => {
                let sides: Vec<String> = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| format!("[{l}..{h}]"))
                    .collect();
                format!("box{}", sides.join("x"))
            }
            ConvexDomain::Polygon2d { vertices } => format!("polygon2d({}v)", vertices.len()),
        }
    }

    /// Uniform cell-centered grid with `resolution` cells per axis.
    ///
    /// For a polygon the uniform background grid over the bounding box is
    /// clipped cell by cell; a cut cell keeps its clipped area as quadrature
    /// weight and places its node at the clipped-region centroid (which lies
    /// inside the domain by convexity).
    pub fn discretize(&self, resolution: u32) -> Result<Arc<Grid>> {
        if resolution < 2 {
            return Err(Error::ResolutionTooLow(resolution));
        }
        let r = resolution as usize;
        match self {
            ConvexDomain::Interval { a, b } => {
                let h = (b - a) / r as f64;
                let mut nodes = Vec::with_capacity(r);
                for i in 0..r {
                    nodes.push(a + (i as f64 + 0.5) * h);
                }
                Ok(Arc::new(Grid {
                    domain: self.clone(),
                    dim: 1,
                    shape: vec![r],
                    spacing: vec![h],
                    nodes,
                    volumes: vec![h; r],
                    node_index: (0..r as u32).map(Some).collect(),
                    cell_index: (0..r).collect(),
                }))
            }
            ConvexDomain::Box { lo, hi } => {
                let dim = lo.len();
                let spacing: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| (h - l) / r as f64).collect();
                let count = r.checked_pow(dim as u32).ok_or_else(|| {
                    Error::Degenerate("grid size overflows".into())
                })?;
                let cell_vol: f64 = spacing.iter().product();
                let mut nodes = Vec::with_capacity(count * dim);
                for flat in 0..count {
                    let mut rem = flat;
                    for a in 0..dim {
                        let ia = rem % r;
                        rem /= r;
                        nodes.push(lo[a] + (ia as f64 + 0.5) * spacing[a]);
                    }
                }
                Ok(Arc::new(Grid {
                    domain: self.clone(),
                    dim,
                    shape: vec![r; dim],
                    spacing,
                    nodes,
                    volumes: vec![cell_vol; count],
                    node_index: (0..count as u32).map(Some).collect(),
                    cell_index: (0..count).collect(),
                }))
            }
            ConvexDomain::Polygon2d { vertices } => {
                let (lo, hi) = self.bounding_box();
                let spacing = [(hi[0] - lo[0]) / r as f64, (hi[1] - lo[1]) / r as f64];
                let cell_area = spacing[0] * spacing[1];
                let mut nodes = Vec::new();
                let mut volumes = Vec::new();
                let mut node_index = vec![None; r * r];
                let mut cell_index = Vec::new();
                for iy in 0..r {
                    for ix in 0..r {
                        let xmin = lo[0] + ix as f64 * spacing[0];
                        let ymin = lo[1] + iy as f64 * spacing[1];
                        let clipped =
                            clip_to_rect(vertices, xmin, xmin + spacing[0], ymin, ymin + spacing[1]);
                        if clipped.len() < 3 {
                            continue;
                        }
                        let area = shoelace_area(&clipped);
                        if area <= 1e-12 * cell_area {
                            continue;
                        }
                        let c = polygon_centroid(&clipped, area);
                        let flat = ix + iy * r;
                        node_index[flat] = Some(nodes.len() as u32 / 2);
                        cell_index.push(flat);
                        nodes.extend_from_slice(&c);
                        volumes.push(area);
                    }
                }
                if volumes.is_empty() {
                    return Err(Error::Degenerate("polygon grid has no cells".into()));
                }
                Ok(Arc::new(Grid {
                    domain: self.clone(),
                    dim: 2,
                    shape: vec![r, r],
                    spacing: spacing.to_vec(),
                    nodes,
                    volumes,
                    node_index,
                    cell_index,
                }))
            }
        }
    }
}

/// Cell-centered quadrature grid over a [`ConvexDomain`].
///
/// Nodes are cell centers (clipped-cell centroids for polygon cut cells) and
/// the per-node volume is the cell volume, so `sum(volumes) == |domain|` up to
/// clipping arithmetic.
#[derive(Debug)]
pub struct Grid {
    domain: ConvexDomain,
    dim: usize,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    /// Node coordinates, flattened: `nodes[node * dim + axis]`.
    nodes: Vec<f64>,
    volumes: Vec<f64>,
    /// Background-cell flat index -> node id (dense for interval/box grids).
    node_index: Vec<Option<u32>>,
    /// Node id -> background-cell flat index.
    cell_index: Vec<usize>,
}

impl Grid {
    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes (= cells with positive volume).
    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    /// Cells per axis of the (background) tensor grid.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Grid spacing per axis.
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Coordinates of node `i`.
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// Quadrature weight (cell volume) of node `i`.
    pub fn volume(&self, i: usize) -> f64 {
        self.volumes[i]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Sum of all cell volumes.
    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// True when the grid is a full tensor product (interval or box domain).
    pub fn is_tensor(&self) -> bool {
        matches!(
            self.domain,
            ConvexDomain::Interval { .. } | ConvexDomain::Box { .. }
        )
    }

    /// Node whose cell contains (or is nearest to) `x`.
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let (lo, _) = self.domain.bounding_box();
        let mut flat = 0usize;
        let mut stride = 1usize;
        for a in 0..self.dim {
            let ia = ((x[a] - lo[a]) / self.spacing[a]).floor() as i64;
            let ia = ia.clamp(0, self.shape[a] as i64 - 1) as usize;
            flat += ia * stride;
            stride *= self.shape[a];
        }
        if let Some(i) = self.node_index[flat] {
            return i as usize;
        }
        // Clipped-away background cell: fall back to a scan.
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for i in 0..self.len() {
            let d: f64 = self
                .node(i)
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Per-axis cell index of node `i` in the background tensor grid.
    pub fn cell_coord(&self, i: usize, axis: usize) -> usize {
        let mut rem = self.cell_index[i];
        for a in 0..axis {
            rem /= self.shape[a];
        }
        rem % self.shape[axis]
    }

    /// Neighboring node of `i` one cell away along `axis` (`dir` = -1 or +1),
    /// or `None` at the domain edge.
    pub fn neighbor(&self, i: usize, axis: usize, dir: i64) -> Option<usize> {
        let flat = self.cell_index[i];
        let mut rem = flat;
        let mut stride = 1usize;
        let mut coord = 0usize;
        for a in 0..self.dim {
            let ia = rem % self.shape[a];
            rem /= self.shape[a];
            if a == axis {
                coord = ia;
                break;
            }
            stride *= self.shape[a];
        }
        let next = coord as i64 + dir;
        if next < 0 || next >= self.shape[axis] as i64 {
            return None;
        }
        let nflat = (flat as i64 + dir * stride as i64) as usize;
        self.node_index[nflat].map(|v| v as usize)
    }
}
