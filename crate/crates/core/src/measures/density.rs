use serde::{Deserialize, Serialize};

use super::ShellMeasure;
use crate::error::{Error, Result};

/// Grid resolution for indicator-based log densities.
pub const POINTS_PER_DECADE: usize = 512;

/// Finite union of closed intervals, kept sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.retain(|(lo, hi)| hi > lo);
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Self { intervals: merged }
    }

    pub fn single(lo: f64, hi: f64) -> Self {
        Self::new(vec![(lo, hi)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, r: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= r && r <= hi)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        IntervalSet::new(all)
    }
}

fn check_window(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0) || !(a < b) || !b.is_finite() {
        return Err(Error::invalid(format!(
            "log density needs 0 < a < b, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

/// `mu_{a,b}(E) = (1 / log(b/a)) int_{E cap [a,b]} dr / r`, exact for
/// interval unions.
pub fn log_density(set: &IntervalSet, a: f64, b: f64) -> Result<f64> {
    check_window(a, b)?;
    let total: f64 = set
        .intervals
        .iter()
        .filter_map(|&(lo, hi)| {
            let (lo, hi) = (lo.max(a), hi.min(b));
            (hi > lo).then(|| (hi / lo).ln())
        })
        .fold(0.0, |s, v| s + v);
    Ok((total / (b / a).ln()).clamp(0.0, 1.0))
}

/// `mu_{a,b}` of `{r : member(r)}` by the trapezoid rule on a log-spaced
/// grid with at least [`POINTS_PER_DECADE`] points per decade.
pub fn log_density_indicator(member: impl Fn(f64) -> bool, a: f64, b: f64) -> Result<f64> {
    check_window(a, b)?;
    let span = (b / a).ln();
    let decades = span / std::f64::consts::LN_10;
    let cells = ((decades * POINTS_PER_DECADE as f64).ceil() as usize).max(POINTS_PER_DECADE);
    let du = span / cells as f64;
    let value = |i: usize| {
        if member(a * (i as f64 * du).exp()) {
            1.0
        } else {
            0.0
        }
    };
    let mut sum = 0.5 * (value(0) + value(cells));
    for i in 1..cells {
        sum += value(i);
    }
    Ok(sum * du / span)
}

/// Log-spaced radii grid with `points` nodes from `a` to `b`.
pub fn log_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && a > 0.0 && b > a);
    let step = (b / a).ln() / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                b
            } else {
                a * (i as f64 * step).exp()
            }
        })
        .collect()
}

/// Pieces of `[a, b]` on which `r -> m([r, r + h])` is constant, with that
/// constant value. Breakpoints are the atoms and the atoms shifted by `-h`.
fn annulus_pieces(m: &ShellMeasure, h: f64, a: f64, b: f64) -> Vec<(f64, f64, f64)> {
    let mut cuts = vec![a, b];
    for rho in m.support() {
        for c in [rho - h, rho] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[0], w[1], m.annulus_mass(mid, h))
        })
        .collect()
}

/// `B_{h,alpha} cap [a, b]` where `B_{h,alpha} = {r : m([r, r+h]) <= alpha h / r}`,
/// as an exact interval union (up to the finitely many breakpoints).
pub fn bad_intervals(m: &ShellMeasure, h: f64, alpha: f64, a: f64, b: f64) -> Result<IntervalSet> {
    bad_intervals_padded(m, h, alpha, a, b, 0.0)
}

/// Like [`bad_intervals`] but with `extra` added to every annulus mass, the
/// conservative treatment of mass not captured by a finite horizon.
pub fn bad_intervals_padded(
    m: &ShellMeasure,
    h: f64,
    alpha: f64,
    a: f64,
    b: f64,
    extra: f64,
) -> Result<IntervalSet> {
    check_params(h, alpha, a, b)?;
    if !(extra >= 0.0) {
        return Err(Error::invalid(format!(
            "padding must be nonnegative, got {extra}"
        )));
    }
    let mut out = Vec::new();
    for (lo, hi, mass) in annulus_pieces(m, h, a, b) {
        let mass = mass + extra;
        if mass <= 0.0 {
            out.push((lo, hi));
        } else {
            let edge = alpha * h / mass;
            if edge > lo {
                out.push((lo, hi.min(edge)));
            }
        }
    }
    Ok(IntervalSet::new(out))
}

/// Overcharged radii `{r : m([r, r+h]) >= alpha h / r}` within `[a, b]`.
pub fn overcharged_intervals(
    m: &ShellMeasure,
    h: f64,
    alpha: f64,
    a: f64,
    b: f64,
) -> Result<IntervalSet> {
    check_params(h, alpha, a, b)?;
    let mut out = Vec::new();
    for (lo, hi, mass) in annulus_pieces(m, h, a, b) {
        if mass > 0.0 {
            let edge = alpha * h / mass;
            if edge < hi {
                out.push((lo.max(edge), hi));
            }
        }
    }
    Ok(IntervalSet::new(out))
}

/// `alpha* = inf_{r in [a,b]} r m([r, r+h]) / h`: the largest `alpha` with
/// `mu_{a,b}(B_{h,alpha}) = 0`.
pub fn alpha_star(m: &ShellMeasure, h: f64, a: f64, b: f64) -> Result<f64> {
    check_params(h, 1.0, a, b)?;
    Ok(annulus_pieces(m, h, a, b)
        .into_iter()
        .map(|(lo, _, mass)| lo * mass / h)
        .fold(f64::INFINITY, f64::min))
}

/// Indicator of `B_{h,alpha}` on the given radii.
pub fn bad_set(m: &ShellMeasure, h: f64, alpha: f64, r_grid: &[f64]) -> Result<Vec<bool>> {
    check_params(h, alpha, 1.0, 2.0)?;
    Ok(r_grid
        .iter()
        .map(|&r| m.annulus_mass(r, h) <= alpha * h / r)
        .collect())
}

/// Indicator of the overcharged set on the given radii.
pub fn overcharged_set(m: &ShellMeasure, h: f64, alpha: f64, r_grid: &[f64]) -> Result<Vec<bool>> {
    check_params(h, alpha, 1.0, 2.0)?;
    Ok(r_grid
        .iter()
        .map(|&r| m.annulus_mass(r, h) >= alpha * h / r)
        .collect())
}

fn check_params(h: f64, alpha: f64, a: f64, b: f64) -> Result<()> {
    if !(h > 0.0) || !(alpha > 0.0) {
        return Err(Error::invalid(format!(
            "need h > 0 and alpha > 0, got h = {h}, alpha = {alpha}"
        )));
    }
    check_window(a, b)
}
