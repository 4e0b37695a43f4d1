use num_complex::Complex64;

use super::{Weight, WeightValue};

/// One active velocity mode: wavevector and vector coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityMode {
    pub k1: i64,
    pub k2: i64,
    pub coeff: [Complex64; 2],
}

impl VelocityMode {
    /// Euclidean magnitude of the vector coefficient.
    pub fn magnitude(&self) -> f64 {
        (self.coeff[0].norm_sqr() + self.coeff[1].norm_sqr()).sqrt()
    }

    pub fn modulus(&self) -> f64 {
        ((self.k1 * self.k1 + self.k2 * self.k2) as f64).sqrt()
    }

    /// `q . u_hat` for an integer vector `q`.
    pub fn dot(&self, q1: i64, q2: i64) -> Complex64 {
        self.coeff[0] * q1 as f64 + self.coeff[1] * q2 as f64
    }
}

/// Sparse list of the nonzero Fourier modes of a velocity at one time.
/// Both `k` and `-k` are listed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VelocityCoeffs {
    modes: Vec<VelocityMode>,
}

impl VelocityCoeffs {
    pub fn zero() -> Self {
        Self { modes: Vec::new() }
    }

    pub fn new(modes: Vec<VelocityMode>) -> Self {
        Self { modes }
    }

    pub fn modes(&self) -> &[VelocityMode] {
        &self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.magnitude() == 0.0)
    }

    pub fn get(&self, k1: i64, k2: i64) -> Option<&VelocityMode> {
        self.modes.iter().find(|m| m.k1 == k1 && m.k2 == k2)
    }

    /// Unweighted `sum_k |u_hat(k)|`.
    pub fn l1_norm(&self) -> f64 {
        self.modes.iter().map(VelocityMode::magnitude).sum()
    }

    /// `sum_k |k . u_hat(k)|`; zero for divergence-free fields.
    pub fn divergence_defect(&self) -> f64 {
        self.modes.iter().map(|m| m.dot(m.k1, m.k2).norm()).sum()
    }

    /// Largest violation of `u_hat(-k) = conj u_hat(k)`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in &self.modes {
            let partner = self.get(-m.k1, -m.k2);
            let d = match partner {
                Some(p) => {
                    (m.coeff[0] - p.coeff[0].conj()).norm()
                        + (m.coeff[1] - p.coeff[1].conj()).norm()
                }
                None => m.magnitude(),
            };
            worst = worst.max(d);
        }
        worst
    }

    /// Largest `|k|` among active modes.
    pub fn support_radius(&self) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.magnitude() > 0.0)
            .map(VelocityMode::modulus)
            .fold(0.0, f64::max)
    }

    /// `sum_k w(|k|) |u_hat(k)|`; `None` stands for `+infinity`.
    pub fn weighted_l1(&self, weight: &Weight) -> Option<f64> {
        let mut total = 0.0;
        for m in &self.modes {
            let mag = m.magnitude();
            if mag == 0.0 {
                continue;
            }
            match weight.value(m.modulus()) {
                WeightValue::Finite(w) => total += w * mag,
                WeightValue::Infinite => return None,
            }
        }
        Some(total)
    }
}
