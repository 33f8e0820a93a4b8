//! Grid-sampled scalar fields and the discrete Sobolev quantities the
//! inequality checks consume: gradients, L^r integrals, the signed-power
//! constraint and the q-mean shift.

use crate::domain::Grid;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::sync::Arc;

/// sign(x) * |x|^e, with 0 mapped to 0.
#[inline]
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

/// A real scalar function sampled at the grid nodes.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    name: String,
}

/// An R^N-valued function sampled at the grid nodes (`comps[node*dim + axis]`).
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<Grid>,
    comps: Vec<f64>,
}

impl ScalarField {
    /// Sample `f` at every grid node.
    pub fn from_fn(grid: &Arc<Grid>, name: &str, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        ScalarField {
            grid: Arc::clone(grid),
            values,
            name: name.to_string(),
        }
    }

    /// Wrap precomputed node values.
    pub fn from_values(grid: &Arc<Grid>, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::GridMismatch(format!("non-finite value at node {i}")));
        }
        Ok(ScalarField {
            grid: Arc::clone(grid),
            values,
            name: name.to_string(),
        })
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        ScalarField {
            grid: Arc::clone(grid),
            values: vec![c; grid.len()],
            name: format!("const({c})"),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Field minus a constant.
    pub fn shifted(&self, t: f64) -> ScalarField {
        ScalarField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v - t).collect(),
            name: format!("{}-{t}", self.name),
        }
    }

    /// Field times a constant.
    pub fn scaled(&self, lambda: f64) -> ScalarField {
        ScalarField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| lambda * v).collect(),
            name: format!("{lambda}*{}", self.name),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl VectorField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Components at node `i`.
    pub fn at(&self, i: usize) -> &[f64] {
        let d = self.grid.dim();
        &self.comps[i * d..(i + 1) * d]
    }

    /// Euclidean norm at node `i`.
    pub fn norm_at(&self, i: usize) -> f64 {
        self.at(i).iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Discrete gradient: central differences where both neighbors exist, one-sided
/// at boundary-adjacent nodes, zero where a direction has no neighbor at all.
/// Exact for affine fields.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let dim = grid.dim();
    let n = grid.len();
    let mut comps = vec![0.0; n * dim];
    for i in 0..n {
        for a in 0..dim {
            let minus = grid.neighbor(i, a, -1);
            let plus = grid.neighbor(i, a, 1);
            let g = match (minus, plus) {
                (Some(m), Some(p)) => {
                    (f.values[p] - f.values[m]) / (grid.node(p)[a] - grid.node(m)[a])
                }
                (None, Some(p)) => {
                    (f.values[p] - f.values[i]) / (grid.node(p)[a] - grid.node(i)[a])
                }
                (Some(m), None) => {
                    (f.values[i] - f.values[m]) / (grid.node(i)[a] - grid.node(m)[a])
                }
                (None, None) => 0.0,
            };
            comps[i * dim + a] = g;
        }
    }
    VectorField {
        grid: Arc::clone(grid),
        comps,
    }
}

/// Integral of |f|^r over the domain via midpoint quadrature (not the r-th root).
pub fn lr_norm(f: &ScalarField, r: f64) -> f64 {
    assert!(r > 0.0, "lr_norm requires r > 0");
    f.values
        .iter()
        .zip(f.grid.volumes())
        .map(|(v, w)| v.abs().powf(r) * w)
        .sum()
}

/// Integral of |∇f|^p over the domain.
pub fn dirichlet_energy(f: &ScalarField, p: f64) -> f64 {
    assert!(p > 1.0, "dirichlet_energy requires p > 1");
    let g = gradient(f);
    (0..f.len())
        .map(|i| g.norm_at(i).powf(p) * f.grid.volume(i))
        .sum()
}

/// Integral of |f|^{q-2} f = sign(f) |f|^{q-1}.
pub fn signed_power_integral(f: &ScalarField, q: f64) -> f64 {
    assert!(q > 1.0, "signed_power_integral requires q > 1");
    f.values
        .iter()
        .zip(f.grid.volumes())
        .map(|(v, w)| signed_pow(*v, q - 1.0) * w)
        .sum()
}

/// The unique shift t with `signed_power_integral(f - t, q) == 0`, i.e. the
/// minimizer of t -> ∫|f - t|^q. Solved by safeguarded Newton bisection on the
/// strictly decreasing residual, bracketed by [min f, max f].
pub fn q_shift(f: &ScalarField, q: f64) -> f64 {
    assert!(q > 1.0, "q_shift requires q > 1");
    let (mut lo, mut hi) = (f.min(), f.max());
    if lo == hi {
        return lo;
    }
    let weights = f.grid.volumes();
    let span = hi - lo;
    // Residual scale for the stopping test: ∫|f - t|^{q-1} at the midpoint.
    let mid = 0.5 * (lo + hi);
    let scale: f64 = f
        .values
        .iter()
        .zip(weights)
        .map(|(v, w)| (v - mid).abs().powf(q - 1.0) * w)
        .sum();
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);

    // Weighted mean is the exact answer for q = 2 and a good start otherwise.
    let wsum: f64 = weights.iter().sum();
    let mut t = f
        .values
        .iter()
        .zip(weights)
        .map(|(v, w)| v * w)
        .sum::<f64>()
        / wsum;
    t = t.clamp(lo, hi);

    for _ in 0..200 {
        let mut g = 0.0;
        let mut gp = 0.0;
        for (v, w) in f.values.iter().zip(weights) {
            let d = v - t;
            let ad = d.abs();
            if ad == 0.0 {
                continue;
            }
            let base = ad.powf(q - 2.0);
            g += d.signum() * base * ad * w;
            gp -= (q - 1.0) * base * w;
        }
        if g.abs() <= tol {
            return t;
        }
        if g > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 4.0 * f64::EPSILON * span {
            return 0.5 * (lo + hi);
        }
        let newton = t - g / gp;
        t = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    t
}

/// Signed-power split: `pos = (f_+)^{q-1}`, `neg = (f_-)^{q-1}`, so that
/// `pos - neg = |f|^{q-2} f` and `pos * neg = 0` nodewise.
pub fn split_parts(f: &ScalarField, q: f64) -> (ScalarField, ScalarField) {
    assert!(q > 1.0, "split_parts requires q > 1");
    let pos: Vec<f64> = f
        .values
        .iter()
        .map(|v| if *v > 0.0 { v.powf(q - 1.0) } else { 0.0 })
        .collect();
    let neg: Vec<f64> = f
        .values
        .iter()
        .map(|v| if *v < 0.0 { (-v).powf(q - 1.0) } else { 0.0 })
        .collect();
    (
        ScalarField {
            grid: Arc::clone(&f.grid),
            values: pos,
            name: format!("{}+^{}", f.name, q - 1.0),
        },
        ScalarField {
            grid: Arc::clone(&f.grid),
            values: neg,
            name: format!("{}-^{}", f.name, q - 1.0),
        },
    )
}

/// Integral of (|∇f|^2 + delta^2)^{p/2}; equals `dirichlet_energy` at delta = 0.
/// The smoothing keeps the integrand's derivative Lipschitz for p < 2.
pub fn dirichlet_energy_smoothed(f: &ScalarField, p: f64, delta: f64) -> f64 {
    assert!(p > 1.0);
    let g = gradient(f);
    let d2 = delta * delta;
    (0..f.len())
        .map(|i| {
            let n = g.norm_at(i);
            (n * n + d2).powf(0.5 * p) * f.grid.volume(i)
        })
        .sum()
}

/// Gradient of `u -> dirichlet_energy_smoothed(u, p, delta)` in the node values.
pub fn dirichlet_energy_smoothed_grad(f: &ScalarField, p: f64, delta: f64) -> Vec<f64> {
    assert!(p > 1.0);
    let grid = f.grid();
    let dim = grid.dim();
    let n = grid.len();
    let g = gradient(f);
    let d2 = delta * delta;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let norm2 = {
            let nn = g.norm_at(i);
            nn * nn + d2
        };
        if norm2 < 1e-300 {
            continue;
        }
        let factor = grid.volume(i) * p * norm2.powf(0.5 * p - 1.0);
        for a in 0..dim {
            let z = factor * g.at(i)[a];
            if z == 0.0 {
                continue;
            }
            let minus = grid.neighbor(i, a, -1);
            let plus = grid.neighbor(i, a, 1);
            match (minus, plus) {
                (Some(m), Some(pn)) => {
                    let inv = 1.0 / (grid.node(pn)[a] - grid.node(m)[a]);
                    out[pn] += z * inv;
                    out[m] -= z * inv;
                }
                (None, Some(pn)) => {
                    let inv = 1.0 / (grid.node(pn)[a] - grid.node(i)[a]);
                    out[pn] += z * inv;
                    out[i] -= z * inv;
                }
                (Some(m), None) => {
                    let inv = 1.0 / (grid.node(i)[a] - grid.node(m)[a]);
                    out[i] += z * inv;
                    out[m] -= z * inv;
                }
                (None, None) => {}
            }
        }
    }
    out
}

/// Gradient of `u -> dirichlet_energy(u, p)` with respect to the node values.
///
/// Used by the Rayleigh-quotient descent in the eigensolver; chains the
/// quadrature weights through the adjoint of the difference stencil.
pub fn dirichlet_energy_grad(f: &ScalarField, p: f64) -> Vec<f64> {
    dirichlet_energy_smoothed_grad(f, p, 0.0)
}

/// Gradient of `u -> lr_norm(u, p)` with respect to the node values.
pub fn lr_norm_grad(f: &ScalarField, p: f64) -> Vec<f64> {
    assert!(p > 1.0);
    f.values
        .iter()
        .zip(f.grid.volumes())
        .map(|(v, w)| p * signed_pow(*v, p - 1.0) * w)
        .collect()
}

// ---------------------------------------------------------------------------
// Closed-form field expressions (CLI/config surface).
// ---------------------------------------------------------------------------

/// A multivariate polynomial as a list of (coefficient, per-axis powers) terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, pw)| {
                c * pw
                    .iter()
                    .enumerate()
                    .map(|(a, e)| x[a].powi(*e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Seeded random polynomial with total degree <= `max_degree` and at least
    /// one substantial non-constant coefficient, so the field is never constant.
    pub fn random(dim: usize, max_degree: u32, rng: &mut impl rand::Rng) -> Polynomial {
        fn monomials(dim: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if cur.len() == dim {
                out.push(cur.clone());
                return;
            }
            for e in 0..=left {
                cur.push(e);
                monomials(dim, left - e, cur, out);
                cur.pop();
            }
        }
        let mut powers = Vec::new();
        monomials(dim, max_degree, &mut Vec::new(), &mut powers);
        let mut terms: Vec<(f64, Vec<u32>)> = powers
            .into_iter()
            .map(|pw| (rng.gen_range(-1.0..1.0), pw))
            .collect();
        let has_strong = terms
            .iter()
            .any(|(c, pw)| pw.iter().any(|e| *e > 0) && c.abs() >= 0.2);
        if !has_strong {
            if let Some(term) = terms.iter_mut().find(|(_, pw)| pw.iter().any(|e| *e > 0)) {
                term.0 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
        }
        Polynomial { dim, terms }
    }

    pub fn display(&self) -> String {
        let mut s = String::new();
        for (k, (c, pw)) in self.terms.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            if k > 0 {
                s.push('+');
            }
            let _ = write!(s, "{c}");
            for (a, e) in pw.iter().enumerate() {
                if *e > 0 {
                    let _ = write!(s, "*x{}^{}", a + 1, e);
                }
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

/// Parsed arithmetic expression over coordinates `x1..xN`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Coord(a) => x.get(*a).copied().unwrap_or(0.0),
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(l, r) => l.eval(x) + r.eval(x),
            Expr::Sub(l, r) => l.eval(x) - r.eval(x),
            Expr::Mul(l, r) => l.eval(x) * r.eval(x),
            Expr::Div(l, r) => l.eval(x) / r.eval(x),
            Expr::Pow(b, e) => b.eval(x).powi(*e),
        }
    }

    /// Largest coordinate index referenced, as a 1-based axis count.
    pub fn max_axis(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Coord(a) => a + 1,
            Expr::Neg(e) => e.max_axis(),
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) => {
                l.max_axis().max(r.max_axis())
            }
            Expr::Pow(b, _) => b.max_axis(),
        }
    }
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.chars.peek() {
                Some('+') => {
                    self.chars.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.chars.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            match self.chars.peek() {
                Some('*') => {
                    self.chars.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some('/') => {
                    self.chars.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        self.skip_ws();
        if matches!(self.chars.peek(), Some('-')) {
            self.chars.next();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        self.skip_ws();
        if matches!(self.chars.peek(), Some('^')) {
            self.chars.next();
            self.skip_ws();
            let mut digits = String::new();
            while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                digits.push(self.chars.next().unwrap());
            }
            let e: i32 = digits
                .parse()
                .map_err(|_| Error::ParseError("exponent must be a nonnegative integer".into()))?;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.chars.peek() {
            Some('(') => {
                self.chars.next();
                let inner = self.expr()?;
                self.skip_ws();
                if self.chars.next() != Some(')') {
                    return Err(Error::ParseError("missing closing parenthesis".into()));
                }
                Ok(inner)
            }
            Some('x') => {
                self.chars.next();
                let mut digits = String::new();
                while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                    digits.push(self.chars.next().unwrap());
                }
                let axis: usize = digits
                    .parse()
                    .map_err(|_| Error::ParseError("coordinate must be x1, x2, ...".into()))?;
                if axis == 0 {
                    return Err(Error::ParseError("coordinates are 1-based (x1, x2, ...)".into()));
                }
                Ok(Expr::Coord(axis - 1))
            }
            Some(c) if c.is_ascii_digit() || *c == '.' => {
                let mut num = String::new();
                while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit() || *c == '.' || *c == 'e' || *c == 'E')
                {
                    let ch = self.chars.next().unwrap();
                    num.push(ch);
                    if (ch == 'e' || ch == 'E')
                        && matches!(self.chars.peek(), Some('+') | Some('-'))
                    {
                        num.push(self.chars.next().unwrap());
                    }
                }
                num.parse::<f64>()
                    .map(Expr::Num)
                    .map_err(|_| Error::ParseError(format!("bad number literal '{num}'")))
            }
            other => Err(Error::ParseError(format!("unexpected character {other:?}"))),
        }
    }
}

/// Parse an expression like `x1 - 0.5`, `x1^2`, `(x1-0.5)*(x2-0.5)`.
pub fn parse_expr(s: &str) -> Result<Expr> {
    let mut p = Parser {
        chars: s.chars().peekable(),
    };
    let e = p.expr()?;
    p.skip_ws();
    if let Some(c) = p.chars.next() {
        return Err(Error::ParseError(format!("trailing input at '{c}'")));
    }
    Ok(e)
}
