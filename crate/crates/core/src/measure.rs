//! Finitely supported probability measures and the signed-split measure pair.

use crate::error::{Error, Result};
use crate::field::{lr_norm, split_parts, ScalarField};
use std::io::Write;

/// A probability measure with finitely many atoms in R^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    /// Atom coordinates, flattened: `positions[atom * dim + axis]`.
    positions: Vec<f64>,
    weights: Vec<f64>,
}

/// Euclidean distance between two points given as slices.
#[inline]
pub(crate) fn point_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl DiscreteMeasure {
    /// Build from explicit atoms; weights are normalized to total mass 1.
    pub fn from_atoms(dim: usize, positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() * dim {
            return Err(Error::DimensionMismatch(positions.len(), weights.len() * dim));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
            return Err(Error::NegativeDensity { node: i, value: *w });
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::Degenerate("non-finite atom position".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }
        let mut pos = Vec::with_capacity(positions.len());
        let mut wts = Vec::with_capacity(weights.len());
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                pos.extend_from_slice(&positions[i * dim..(i + 1) * dim]);
                wts.push(w / total);
            }
        }
        Ok(DiscreteMeasure {
            dim,
            positions: pos,
            weights: wts,
        })
    }

    /// One atom per grid cell at the cell node, weighted by density x volume,
    /// normalized to total mass 1. Zero-weight atoms are dropped.
    pub fn from_density(f: &ScalarField) -> Result<Self> {
        let grid = f.grid();
        for (i, v) in f.values().iter().enumerate() {
            if *v < 0.0 {
                return Err(Error::NegativeDensity { node: i, value: *v });
            }
        }
        let weights: Vec<f64> = f
            .values()
            .iter()
            .zip(grid.volumes())
            .map(|(v, w)| v * w)
            .collect();
        let positions: Vec<f64> = (0..grid.len())
            .flat_map(|i| grid.node(i).to_vec())
            .collect();
        DiscreteMeasure::from_atoms(grid.dim(), positions, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Σ w_i |x_i - x0|^m.
    pub fn moment(&self, m: f64, x0: &[f64]) -> f64 {
        assert!(m >= 1.0, "moment requires m >= 1");
        assert!(x0.iter().all(|v| v.is_finite()), "moment center must be finite");
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * point_distance(self.position(i), x0).powf(m))
            .sum()
    }

    /// CSV rows `x1,...,xd,weight`.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        for a in 0..self.dim {
            write!(out, "x{},", a + 1)?;
        }
        writeln!(out, "weight")?;
        for i in 0..self.len() {
            for c in self.position(i) {
                write!(out, "{c},")?;
            }
            writeln!(out, "{}", self.weight(i))?;
        }
        Ok(())
    }
}

/// The theorem's measure pair: `rho1` built from the positive split part,
/// `rho0` from the negative part, each normalized.
pub fn rho_pair(f: &ScalarField, q: f64) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let (pos, neg) = split_parts(f, q);
    let rho1 = DiscreteMeasure::from_density(&pos).map_err(|e| match e {
        Error::ZeroMass => Error::OneSigned,
        other => other,
    })?;
    let rho0 = DiscreteMeasure::from_density(&neg).map_err(|e| match e {
        Error::ZeroMass => Error::OneSigned,
        other => other,
    })?;
    Ok((rho0, rho1))
}

/// Residual of the half-mass identity
/// ∫|f|^{q-1} = 2∫(f_+)^{q-1} = 2∫(f_-)^{q-1},
/// which holds exactly when the signed-power constraint is satisfied.
pub fn half_mass_check(f: &ScalarField, q: f64) -> f64 {
    assert!(q > 1.0);
    let (pos, neg) = split_parts(f, q);
    let full = lr_norm(f, q - 1.0);
    let two_pos = 2.0 * lr_norm(&pos, 1.0);
    let two_neg = 2.0 * lr_norm(&neg, 1.0);
    (full - two_pos).abs().max((full - two_neg).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConvexDomain;
    use crate::field::{q_shift, signed_power_integral, Polynomial};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn interval_grid(res: u32) -> Arc<crate::domain::Grid> {
        ConvexDomain::interval(0.0, 1.0)
            .unwrap()
            .discretize(res)
            .unwrap()
    }

    #[test]
    fn from_density_uniform_and_linear() {
        let g = interval_grid(4);
        let mu = DiscreteMeasure::from_density(&ScalarField::constant(&g, 1.0)).unwrap();
        assert_eq!(mu.len(), 4);
        for i in 0..4 {
            assert_relative_eq!(mu.weight(i), 0.25);
        }

        let zero = ScalarField::constant(&g, 0.0);
        assert!(matches!(
            DiscreteMeasure::from_density(&zero),
            Err(Error::ZeroMass)
        ));

        let g2 = interval_grid(2);
        let f = ScalarField::from_fn(&g2, "x", |x| x[0]);
        let mu = DiscreteMeasure::from_density(&f).unwrap();
        assert_eq!(mu.len(), 2);
        assert_relative_eq!(mu.position(0)[0], 0.25);
        assert_relative_eq!(mu.position(1)[0], 0.75);
        assert_relative_eq!(mu.weight(0), 0.25);
        assert_relative_eq!(mu.weight(1), 0.75);
    }

    #[test]
    fn moment_examples() {
        let dirac = DiscreteMeasure::from_atoms(1, vec![0.3], vec![1.0]).unwrap();
        assert_eq!(dirac.moment(2.0, &[0.3]), 0.0);

        let two = DiscreteMeasure::from_atoms(1, vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(two.moment(2.0, &[0.0]), 0.5);

        let g = interval_grid(512);
        let unif = DiscreteMeasure::from_density(&ScalarField::constant(&g, 1.0)).unwrap();
        assert!((unif.moment(2.0, &[0.0]) - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn moment_is_convex_in_center() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = interval_grid(64);
        let f = ScalarField::from_fn(&g, "d", |x| 1.0 + x[0]);
        let mu = DiscreteMeasure::from_density(&f).unwrap();
        for m in [1.5, 2.0, 3.0] {
            for _ in 0..50 {
                let a = [rng.gen_range(-1.0..2.0)];
                let b = [rng.gen_range(-1.0..2.0)];
                let mid = [0.5 * (a[0] + b[0])];
                let lhs = mu.moment(m, &mid);
                let rhs = 0.5 * (mu.moment(m, &a) + mu.moment(m, &b));
                assert!(lhs <= rhs + 1e-10);
            }
        }
    }

    #[test]
    fn rho_pair_examples() {
        let g = interval_grid(512);
        let f = ScalarField::from_fn(&g, "x-1/2", |x| x[0] - 0.5);
        let (rho0, rho1) = rho_pair(&f, 2.0).unwrap();
        assert_relative_eq!(rho0.total_mass(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(rho1.total_mass(), 1.0, max_relative = 1e-12);
        for i in 0..rho1.len() {
            assert!(rho1.position(i)[0] > 0.5);
        }
        for i in 0..rho0.len() {
            assert!(rho0.position(i)[0] < 0.5);
        }

        let pos = ScalarField::from_fn(&g, "x", |x| x[0]);
        assert!(matches!(rho_pair(&pos, 2.0), Err(Error::OneSigned)));

        // q = 3: rho1 weights ∝ (x-1/2)^2 on x > 1/2; first moment 7/8.
        let (_, rho1) = rho_pair(&f, 3.0).unwrap();
        let first: f64 = (0..rho1.len())
            .map(|i| rho1.weight(i) * rho1.position(i)[0])
            .sum();
        assert!((first - 7.0 / 8.0).abs() < 1e-3);
    }

    #[test]
    fn half_mass_examples() {
        let g = interval_grid(512);
        let f = ScalarField::from_fn(&g, "x-1/2", |x| x[0] - 0.5);
        assert!(half_mass_check(&f, 2.0) < 1e-10);

        // Shifted random polynomial, q = 3.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let poly = Polynomial::random(1, 3, &mut rng);
        let raw = ScalarField::from_fn(&g, "poly", |x| poly.eval(x));
        let shifted = raw.shifted(q_shift(&raw, 3.0));
        assert!(signed_power_integral(&shifted, 3.0).abs() < 1e-10);
        assert!(half_mass_check(&shifted, 3.0) < 1e-8);

        // Constraint violated on purpose: f = x, q = 2.
        let lin = ScalarField::from_fn(&g, "x", |x| x[0]);
        assert_relative_eq!(half_mass_check(&lin, 2.0), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn csv_roundtrip_shape() {
        let mu = DiscreteMeasure::from_atoms(2, vec![0.0, 0.5, 1.0, 0.25], vec![0.5, 0.5]).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,weight");
        assert_eq!(lines.len(), 3);
    }
}
