//! The tree pseudometric of an excursion.
//!
//! An excursion `f` turns the unit interval into a real tree: points
//! `x <= y` sit at distance
//!
//! ```text
//! d_f(x, y) = f(x) + f(y) - 2 min{ f(t) : x <= t <= y }
//! ```
//!
//! On a grid this needs one range-minimum query per distance, served in
//! O(1) by a sparse table built in O(N log N). Two grid points with
//! `d_f = 0` are the same point of the tree (the comparison is exact
//! equality, which is meaningful here: on lattice-valued grids, see the
//! sampler notes, the whole formula evaluates without rounding).
//!
//! `d_f` is a pseudometric and moreover 0-hyperbolic: for any four points
//! the two largest of the three pairings
//! `d(a,b)+d(c,d), d(a,c)+d(b,d), d(a,d)+d(b,c)` coincide.

use crate::error::{Error, Result};
use crate::excursion::ExcursionGrid;
use crate::metric::{MetricKind, MetricOracle};

/// Sparse table answering range minima (value and leftmost attaining
/// index) over a fixed array, inclusive bounds, O(1) per query.
#[derive(Debug, Clone)]
pub(crate) struct SparseTable {
    len: usize,
    vals: Vec<f64>,
    /// Level `l` row holds the argmin over `[i, i + 2^l)` at offset `i`.
    idx: Vec<u32>,
}

impl SparseTable {
    pub(crate) fn build(vals: Vec<f64>) -> Self {
        let len = vals.len();
        assert!(len > 0 && len <= u32::MAX as usize);
        let levels = usize::ilog2(len) as usize + 1;
        let mut idx = vec![0u32; levels * len];
        for (i, slot) in idx.iter_mut().take(len).enumerate() {
            *slot = i as u32;
        }
        for l in 1..levels {
            let half = 1usize << (l - 1);
            for i in 0..=(len - (1 << l)) {
                let a = idx[(l - 1) * len + i];
                let b = idx[(l - 1) * len + i + half];
                // a indexes an earlier block, so on ties it is the
                // leftmost attaining index.
                idx[l * len + i] = if vals[b as usize] < vals[a as usize] { b } else { a };
            }
        }
        Self { len, vals, idx }
    }

    /// Minimum over the inclusive range `[l, r]`.
    #[inline]
    pub(crate) fn min(&self, l: usize, r: usize) -> f64 {
        self.vals[self.argmin(l, r)]
    }

    /// Leftmost index attaining the minimum over the inclusive `[l, r]`.
    #[inline]
    pub(crate) fn argmin(&self, l: usize, r: usize) -> usize {
        debug_assert!(l <= r && r < self.len);
        let k = usize::ilog2(r - l + 1) as usize;
        let a = self.idx[k * self.len + l] as usize;
        let b = self.idx[k * self.len + r + 1 - (1usize << k)] as usize;
        // The blocks overlap; on ties the smaller index wins.
        if self.vals[b] < self.vals[a] {
            b
        } else if self.vals[a] < self.vals[b] {
            a
        } else {
            a.min(b)
        }
    }

    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.len
    }
}

/// Tree pseudometric over the grid points of an excursion.
#[derive(Debug, Clone)]
pub struct TreeMetric {
    grid: ExcursionGrid,
    table: SparseTable,
}

impl TreeMetric {
    #[must_use]
    pub fn build(grid: ExcursionGrid) -> Self {
        let table = SparseTable::build(grid.values().to_vec());
        Self { grid, table }
    }

    #[must_use]
    pub fn grid(&self) -> &ExcursionGrid {
        &self.grid
    }

    /// Number of grid points, `n_cells + 1`.
    #[must_use]
    pub fn len(&self) -> usize {
        self.table.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::arg(format!(
                "grid index {i} out of bounds for {} points",
                self.len()
            )));
        }
        Ok(())
    }

    /// Minimum excursion value between two grid points, order-free.
    pub fn interval_min(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.table.min(i.min(j), i.max(j)))
    }

    /// Leftmost grid index attaining [`interval_min`](Self::interval_min).
    pub fn interval_argmin(&self, i: usize, j: usize) -> Result<usize> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.table.argmin(i.min(j), i.max(j)))
    }

    /// Tree distance between grid points `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.dist_unchecked(i, j))
    }

    /// Whether two grid points are the same point of the tree.
    ///
    /// Exact zero test by design; see the module notes on lattice grids.
    pub fn is_equivalent(&self, i: usize, j: usize) -> Result<bool> {
        Ok(self.dist(i, j)? == 0.0)
    }

    /// Strict interior local maxima of the excursion, i.e. the leaves of
    /// the tree among grid points. Plateau edges do not qualify.
    #[must_use]
    pub fn leaves(&self) -> Vec<usize> {
        let v = self.grid.values();
        (1..v.len() - 1)
            .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
            .collect()
    }

    #[inline]
    pub(crate) fn interval_min_unchecked(&self, i: usize, j: usize) -> f64 {
        self.table.min(i.min(j), i.max(j))
    }

    #[inline]
    pub(crate) fn dist_unchecked(&self, i: usize, j: usize) -> f64 {
        let v = self.grid.values();
        v[i] + v[j] - 2.0 * self.interval_min_unchecked(i, j)
    }
}

impl MetricOracle for TreeMetric {
    fn dist(&self, a: usize, b: usize) -> f64 {
        debug_assert!(a < self.len() && b < self.len());
        self.dist_unchecked(a, b)
    }

    fn kind(&self) -> MetricKind {
        MetricKind::Tree
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excursion::{brownian_excursion, grid_from_function, zigzag_grid, ZigZagParams};

    fn brute_min(v: &[f64], i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        v[a..=b].iter().cloned().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn sparse_table_matches_brute_force() {
        for seed in 0..20 {
            let ex = brownian_excursion(64, seed).unwrap();
            let t = SparseTable::build(ex.values().to_vec());
            for i in 0..ex.values().len() {
                for j in i..ex.values().len() {
                    assert_eq!(t.min(i, j), brute_min(ex.values(), i, j), "seed {seed} [{i},{j}]");
                }
            }
        }
    }

    #[test]
    fn sparse_table_argmin_is_leftmost() {
        let t = SparseTable::build(vec![2.0, 1.0, 3.0, 1.0, 1.0, 5.0]);
        assert_eq!(t.argmin(0, 5), 1);
        assert_eq!(t.argmin(2, 5), 3);
        assert_eq!(t.argmin(4, 5), 4);
        assert_eq!(t.argmin(2, 2), 2);
    }

    #[test]
    fn zigzag_distances() {
        let tm = TreeMetric::build(zigzag_grid(ZigZagParams::new(4).unwrap(), 16).unwrap());
        // Points at heights 1/2 and 1 with interval minimum 1/2.
        assert_eq!(tm.dist(1, 2).unwrap(), 0.5);
        // Root is one point: both endpoints at height 0.
        assert!(tm.is_equivalent(0, 16).unwrap());
        assert_eq!(tm.interval_min(0, 16).unwrap(), 0.0);
    }

    #[test]
    fn triangle_profile_identifications() {
        // f(t) = min(t, 1-t) on 4 cells: values [0, 1/4, 1/2, 1/4, 0].
        let g = grid_from_function(|t| t.min(1.0 - t), 4).unwrap();
        let tm = TreeMetric::build(g);
        // Same height on both flanks of the single peak, interval min 1/4:
        // distance 1/4 + 1/4 - 2/4 = 0, one tree point.
        assert_eq!(tm.dist(1, 3).unwrap(), 0.0);
        assert!(tm.is_equivalent(1, 3).unwrap());
        assert_eq!(tm.dist(2, 1).unwrap(), 0.25);
        assert_eq!(tm.dist(2, 3).unwrap(), 0.25);
    }

    #[test]
    fn leaves_are_strict_interior_maxima() {
        let tm = TreeMetric::build(zigzag_grid(ZigZagParams::new(4).unwrap(), 8).unwrap());
        assert_eq!(tm.leaves(), vec![1, 3, 5, 7]);

        // Plateaus are excluded.
        let g = grid_from_function(
            |t| if (0.25..=0.75).contains(&t) { 1.0 } else { 2.0 * t.min(1.0 - t) },
            8,
        )
        .unwrap();
        let tm = TreeMetric::build(g);
        assert_eq!(tm.leaves(), Vec::<usize>::new());
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let tm = TreeMetric::build(zigzag_grid(ZigZagParams::new(2).unwrap(), 8).unwrap());
        assert!(tm.dist(0, 9).is_err());
        assert!(tm.interval_min(42, 0).is_err());
        assert!(tm.is_equivalent(9, 9).is_err());
    }

    #[test]
    fn distances_are_nonnegative_and_symmetric() {
        let tm = TreeMetric::build(brownian_excursion(256, 5).unwrap());
        for i in (0..=256).step_by(7) {
            for j in (0..=256).step_by(11) {
                let d = tm.dist(i, j).unwrap();
                assert!(d >= 0.0);
                assert_eq!(d, tm.dist(j, i).unwrap());
            }
        }
    }
}
