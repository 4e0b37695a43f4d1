use serde::{Deserialize, Serialize};

use crate::spectral::{SpectralField, WaveGrid};
use crate::velocity::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Exact squared radius `|k|^2` of the shell.
    pub radius_sq: u64,
    pub mass: f64,
}

impl Atom {
    pub fn radius(&self) -> f64 {
        (self.radius_sq as f64).sqrt()
    }
}

/// Atomic nonnegative measure on radii, one atom per lattice shell,
/// sorted by radius.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShellMeasure {
    atoms: Vec<Atom>,
    #[serde(skip)]
    prefix: Vec<f64>,
    #[serde(skip)]
    radii: Vec<f64>,
}

impl ShellMeasure {
    /// Build from `(radius_sq, mass)` pairs; equal radii are merged.
    pub fn from_atoms(mut atoms: Vec<Atom>) -> Self {
        atoms.sort_by_key(|a| a.radius_sq);
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            assert!(
                a.mass >= 0.0 && a.mass.is_finite(),
                "shell masses must be finite and nonnegative"
            );
            match merged.last_mut() {
                Some(last) if last.radius_sq == a.radius_sq => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        let mut m = Self {
            atoms: merged,
            prefix: Vec::new(),
            radii: Vec::new(),
        };
        m.rebuild();
        m
    }

    /// Masses given per shell of `grid`.
    pub fn from_grid(grid: &WaveGrid, masses: &[f64]) -> Self {
        assert_eq!(masses.len(), grid.shell_count());
        Self::from_atoms(
            grid.shell_radius_sq()
                .iter()
                .zip(masses)
                .map(|(&r, &m)| Atom {
                    radius_sq: r as u64,
                    mass: m.max(0.0),
                })
                .collect(),
        )
    }

    fn rebuild(&mut self) {
        self.radii = self.atoms.iter().map(Atom::radius).collect();
        self.prefix = std::iter::once(0.0)
            .chain(self.atoms.iter().scan(0.0, |acc, a| {
                *acc += a.mass;
                Some(*acc)
            }))
            .collect();
    }

    /// Restore the lookup tables after deserialization.
    pub fn reindex(&mut self) {
        self.rebuild();
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.iter().all(|a| a.mass == 0.0)
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Mass of the closed interval `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        let start = self.radii.partition_point(|&r| r < lo);
        let end = self.radii.partition_point(|&r| r <= hi);
        if end <= start {
            0.0
        } else {
            // summed directly for short ranges to avoid prefix cancellation
            if end - start <= 64 {
                self.atoms[start..end].iter().map(|a| a.mass).sum()
            } else {
                (self.prefix[end] - self.prefix[start]).max(0.0)
            }
        }
    }

    /// `m([r, r + h])`, both endpoints included.
    pub fn annulus_mass(&self, r: f64, h: f64) -> f64 {
        self.mass_between(r, r + h)
    }

    /// `(w^{-1} * m)(r) = sum_rho m(rho) / w(|r - rho|)`.
    pub fn weight_convolve(&self, weight: &Weight, r: f64) -> f64 {
        match *weight {
            // only atoms within distance L contribute
            Weight::Indicator { band } => self.mass_between(r - band, r + band) / (2.0 * band),
            Weight::Polynomial { .. } => self
                .atoms
                .iter()
                .filter(|a| a.mass > 0.0)
                .map(|a| a.mass * weight.reciprocal((r - a.radius()).abs()))
                .sum(),
        }
    }

    /// Sorted radii of atoms with positive mass.
    pub fn support(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .filter(|a| a.mass > 0.0)
            .map(Atom::radius)
            .collect()
    }
}

/// `m_t(E) = sum_{|k| in E} |phi_hat(k)|^2`.
pub fn instantaneous_mass(phi: &SpectralField) -> ShellMeasure {
    let grid = phi.grid();
    let mut masses = vec![0.0; grid.shell_count()];
    for (i, a) in phi.amplitudes().iter().enumerate() {
        masses[grid.shell_of(i)] += a.norm_sqr();
    }
    ShellMeasure::from_grid(grid, &masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn unit_atom() -> ShellMeasure {
        ShellMeasure::from_atoms(vec![Atom {
            radius_sq: 1,
            mass: 1.0,
        }])
    }

    #[test]
    fn cosine_mode_is_single_atom() {
        let grid = Arc::new(WaveGrid::new(4));
        let g = SpectralField::cosine_mode(grid, 1, 0).unwrap();
        let m = instantaneous_mass(&g);
        assert_eq!(m.support(), vec![1.0]);
        assert!((m.annulus_mass(1.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equal_moduli_coalesce() {
        let grid = Arc::new(WaveGrid::new(4));
        let mut g = SpectralField::cosine_mode(grid.clone(), 1, 0).unwrap();
        g.add_scaled(1.0, &SpectralField::cosine_mode(grid, 0, 1).unwrap());
        let m = instantaneous_mass(&g);
        assert_eq!(m.support(), vec![1.0]);
        assert!((m.total() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn annulus_closed_endpoints() {
        let m = unit_atom();
        assert_eq!(m.annulus_mass(1.0, 1.0), 1.0);
        assert_eq!(m.annulus_mass(0.0, 1.0), 1.0);
        assert_eq!(m.annulus_mass(1.5, 0.4), 0.0);
        // abutting annuli both see the atom on their shared endpoint
        assert_eq!(m.annulus_mass(0.5, 0.5) + m.annulus_mass(1.0, 0.5), 2.0);
    }

    #[test]
    fn weight_convolution_examples() {
        let m = unit_atom();
        assert_eq!(m.weight_convolve(&Weight::Polynomial { q: 2.0 }, 1.0), 0.5);
        assert_eq!(
            ShellMeasure::default().weight_convolve(&Weight::Polynomial { q: 2.0 }, 1.0),
            0.0
        );
        let w = Weight::Indicator { band: 1.0 };
        assert_eq!(m.weight_convolve(&w, 1.7), 0.5);
        assert_eq!(m.weight_convolve(&w, 2.0), 0.5);
        assert_eq!(m.weight_convolve(&w, 2.1), 0.0);
    }

    #[test]
    fn indicator_convolution_is_scaled_annulus() {
        let grid = Arc::new(WaveGrid::new(8));
        let phi = SpectralField::random_band(grid, 8, 3).unwrap();
        let m = instantaneous_mass(&phi);
        for band in [1.0, 2.0, 3.5] {
            let w = Weight::Indicator { band };
            for i in 0..60 {
                let r = i as f64 * 0.23;
                let direct: f64 = m
                    .atoms()
                    .iter()
                    .map(|a| a.mass * w.reciprocal((r - a.radius()).abs()))
                    .sum();
                let via = m.annulus_mass(r - band, 2.0 * band) / (2.0 * band);
                assert!((direct - via).abs() <= 1e-15 * (1.0 + direct));
                assert!((m.weight_convolve(&w, r) - via).abs() <= 1e-15 * (1.0 + via));
            }
        }
    }

    #[test]
    fn totals_match_parseval() {
        let grid = Arc::new(WaveGrid::new(8));
        for seed in 0..10 {
            let phi = SpectralField::random_band(grid.clone(), 7, seed).unwrap();
            let m = instantaneous_mass(&phi);
            assert!((m.total() - phi.l2_norm_sq()).abs() < 1e-12);
            assert!((m.mass_between(0.0, 1e9) - m.total()).abs() < 1e-12);
        }
    }
}
