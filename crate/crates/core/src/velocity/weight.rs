use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest polynomial exponent accepted; beyond it `||w u_hat||_l1` overflows
/// long before the flux audit becomes informative.
pub const MAX_POLYNOMIAL_EXPONENT: f64 = 64.0;

/// Increasing weight `w : [0, inf) -> [1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight {
    /// `w(s) = 2L` for `s <= L`, `+inf` otherwise.
    Indicator { band: f64 },
    /// `w(s) = 2 (1 + s)^q`.
    Polynomial { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightValue {
    Finite(f64),
    Infinite,
}

impl Weight {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Weight::Indicator { band } if !(band > 0.0) => Err(Error::config(format!(
                "indicator band must be positive, got {band}"
            ))),
            Weight::Polynomial { q } if !(0.0..=MAX_POLYNOMIAL_EXPONENT).contains(&q) => {
                Err(Error::config(format!(
                    "polynomial exponent must lie in [0, {MAX_POLYNOMIAL_EXPONENT}], got {q}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, s: f64) -> WeightValue {
        match *self {
            Weight::Indicator { band } => {
                if s <= band {
                    WeightValue::Finite(2.0 * band)
                } else {
                    WeightValue::Infinite
                }
            }
            Weight::Polynomial { q } => WeightValue::Finite(2.0 * (1.0 + s).powf(q)),
        }
    }

    /// `1 / w(s)` with `1 / inf = 0` exactly.
    pub fn reciprocal(&self, s: f64) -> f64 {
        match self.value(s) {
            WeightValue::Finite(w) => 1.0 / w,
            WeightValue::Infinite => 0.0,
        }
    }

    /// `int_0^inf ds / w(s)` in closed form (`None` when divergent).
    pub fn reciprocal_integral(&self) -> Option<f64> {
        match *self {
            Weight::Indicator { .. } => Some(0.5),
            Weight::Polynomial { q } if q > 1.0 => Some(0.5 / (q - 1.0)),
            Weight::Polynomial { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Weight::Indicator { band } => format!("indicator(L={band})"),
            Weight::Polynomial { q } => format!("polynomial(q={q})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_values() {
        let w = Weight::Indicator { band: 1.0 };
        assert_eq!(w.value(0.0), WeightValue::Finite(2.0));
        assert_eq!(w.value(1.0), WeightValue::Finite(2.0));
        assert_eq!(w.value(1.0 + 1e-12), WeightValue::Infinite);
        assert_eq!(w.reciprocal(3.0), 0.0);
        assert_eq!(w.reciprocal(0.5), 0.5);
    }

    #[test]
    fn polynomial_is_increasing_and_at_least_one() {
        let w = Weight::Polynomial { q: 2.0 };
        let mut last = 0.0;
        for i in 0..200 {
            let s = i as f64 * 0.1;
            let WeightValue::Finite(v) = w.value(s) else {
                panic!()
            };
            assert!(v >= 1.0 && v >= last);
            last = v;
        }
        assert_eq!(w.reciprocal(0.0), 0.5);
    }

    #[test]
    fn reciprocal_integral_hypothesis() {
        assert!(
            Weight::Indicator { band: 3.0 }
                .reciprocal_integral()
                .unwrap()
                <= 0.5
        );
        assert!(Weight::Polynomial { q: 2.0 }.reciprocal_integral().unwrap() <= 0.5);
        assert!(Weight::Polynomial { q: 1.5 }.reciprocal_integral().unwrap() > 0.5);
        assert!(Weight::Polynomial { q: 1.0 }
            .reciprocal_integral()
            .is_none());
        // numerical check of the polynomial closed form
        let w = Weight::Polynomial { q: 3.0 };
        let h = 1e-3;
        let numeric: f64 = (0..200_000)
            .map(|i| h * w.reciprocal((i as f64 + 0.5) * h))
            .sum();
        assert!((numeric - w.reciprocal_integral().unwrap()).abs() < 1e-5);
    }

    #[test]
    fn validation_caps_exponent() {
        assert!(Weight::Polynomial { q: 64.0 }.validate().is_ok());
        assert!(Weight::Polynomial { q: 65.0 }.validate().is_err());
        assert!(Weight::Indicator { band: 0.0 }.validate().is_err());
    }
}
