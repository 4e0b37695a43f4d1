use std::collections::BTreeMap;

/// Truncated integer wavevector lattice `{k in Z^2 : |k1|, |k2| <= N}`.
///
/// Modes are stored row-major with `k1` as the slow index, so a fixed-`k1`
/// column of `k2` values is contiguous. The layout is point-symmetric: the
/// index of `-k` is `len - 1 - index(k)`.
///
/// Every lattice site carries its exact squared modulus and a shell id; a
/// shell is the set of sites sharing the same `|k|^2`, so shell masses
/// coalesce without floating point comparisons.
#[derive(Debug, Clone)]
pub struct WaveGrid {
    max_mode: usize,
    side: usize,
    modulus_sq: Vec<u32>,
    modulus: Vec<f64>,
    shell_of: Vec<u32>,
    shell_radius_sq: Vec<u32>,
    shell_radius: Vec<f64>,
}

impl WaveGrid {
    pub fn new(max_mode: usize) -> Self {
        assert!(
            max_mode >= 1,
            "grid needs at least one nonzero mode per axis"
        );
        assert!(max_mode <= 4096, "grid too large");
        let side = 2 * max_mode + 1;
        let n = max_mode as i64;
        let mut modulus_sq = Vec::with_capacity(side * side);
        for k1 in -n..=n {
            for k2 in -n..=n {
                modulus_sq.push((k1 * k1 + k2 * k2) as u32);
            }
        }
        let modulus = modulus_sq.iter().map(|&m| (m as f64).sqrt()).collect();

        let mut distinct = BTreeMap::new();
        for &m in &modulus_sq {
            distinct.insert(m, 0u32);
        }
        for (id, slot) in distinct.values_mut().enumerate() {
            *slot = id as u32;
        }
        let shell_of = modulus_sq.iter().map(|m| distinct[m]).collect();
        let shell_radius_sq: Vec<u32> = distinct.keys().copied().collect();
        let shell_radius = shell_radius_sq.iter().map(|&m| (m as f64).sqrt()).collect();

        Self {
            max_mode,
            side,
            modulus_sq,
            modulus,
            shell_of,
            shell_radius_sq,
            shell_radius,
        }
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    /// Number of modes per axis, `2N + 1`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k1: i64, k2: i64) -> bool {
        let n = self.max_mode as i64;
        k1.abs() <= n && k2.abs() <= n
    }

    pub fn index(&self, k1: i64, k2: i64) -> Option<usize> {
        if self.contains(k1, k2) {
            let n = self.max_mode as i64;
            Some(((k1 + n) as usize) * self.side + (k2 + n) as usize)
        } else {
            None
        }
    }

    pub fn mode(&self, index: usize) -> (i64, i64) {
        let n = self.max_mode as i64;
        (
            (index / self.side) as i64 - n,
            (index % self.side) as i64 - n,
        )
    }

    pub fn negated(&self, index: usize) -> usize {
        self.len() - 1 - index
    }

    pub fn zero_index(&self) -> usize {
        self.len() / 2
    }

    pub fn modulus_sq(&self, index: usize) -> u32 {
        self.modulus_sq[index]
    }

    pub fn modulus(&self, index: usize) -> f64 {
        self.modulus[index]
    }

    pub fn moduli(&self) -> &[f64] {
        &self.modulus
    }

    pub fn shell_of(&self, index: usize) -> usize {
        self.shell_of[index] as usize
    }

    pub fn shell_count(&self) -> usize {
        self.shell_radius_sq.len()
    }

    pub fn shell_radius_sq(&self) -> &[u32] {
        &self.shell_radius_sq
    }

    pub fn shell_radii(&self) -> &[f64] {
        &self.shell_radius
    }

    /// Index of the first shell with radius `>= r`, or `shell_count()` if none.
    pub fn first_shell_at_least(&self, r: f64) -> usize {
        self.shell_radius.partition_point(|&rho| rho < r)
    }

    /// Distinct grid radii in ascending order, including 0.
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.shell_radius.iter().copied()
    }

    /// Iterate `(index, k1, k2)` over every lattice site.
    pub fn modes(&self) -> impl Iterator<Item = (usize, i64, i64)> + '_ {
        (0..self.len()).map(move |i| {
            let (k1, k2) = self.mode(i);
            (i, k1, k2)
        })
    }
}

impl PartialEq for WaveGrid {
    fn eq(&self, other: &Self) -> bool {
        self.max_mode == other.max_mode
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_is_point_reflection() {
        let grid = WaveGrid::new(5);
        for (i, k1, k2) in grid.modes() {
            let j = grid.negated(i);
            assert_eq!(grid.mode(j), (-k1, -k2));
        }
        assert_eq!(grid.mode(grid.zero_index()), (0, 0));
    }

    #[test]
    fn modulus_table_is_exact() {
        let grid = WaveGrid::new(7);
        for (i, k1, k2) in grid.modes() {
            assert_eq!(grid.modulus(i), ((k1 * k1 + k2 * k2) as f64).sqrt());
            let shell = grid.shell_of(i);
            assert_eq!(grid.shell_radius_sq()[shell], (k1 * k1 + k2 * k2) as u32);
        }
    }

    #[test]
    fn shells_are_sorted_and_distinct() {
        let grid = WaveGrid::new(6);
        let radii = grid.shell_radius_sq();
        assert_eq!(radii[0], 0);
        assert_eq!(radii[1], 1);
        assert_eq!(radii[2], 2);
        assert!(radii.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(grid.first_shell_at_least(1.0), 1);
        assert_eq!(grid.first_shell_at_least(1.2), 2);
        assert_eq!(grid.first_shell_at_least(1e9), grid.shell_count());
    }
}
