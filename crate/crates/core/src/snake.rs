//! Gaussian labels on the tree and the derived map pseudometrics.
//!
//! Conditionally on an excursion grid, the label field `z` is the
//! centered Gaussian vector with
//!
//! ```text
//! Cov(z_i, z_j) = interval_min(i, j)        Var(z_i) = f(t_i)
//! ```
//!
//! equivalently `E[(z_i - z_j)^2] = d_f(i, j)`: labels perform Brownian
//! motion along the branches of the tree, with independent increments on
//! disjoint branches. [`simulate_labels`] realizes the field in one O(N)
//! sweep along the contour, maintaining the ancestral line as a stack of
//! `(height, label)` pairs. Ascents extend the line with fresh Gaussian
//! increments. A descent to level `m` pops the finished branches; when
//! `m` falls strictly between the retained stack entry and the last
//! popped one, the landing sits inside an already-labeled segment, so its
//! label is drawn from the Brownian bridge between the two recorded
//! endpoints (a fresh increment there would decorrelate the subtrees and
//! break the covariance above).
//!
//! From the labels, two pseudometrics on the cyclically identified grid
//! (`0` and `n_cells` are the same point):
//!
//! * `d_circ(i, j) = z_i + z_j - 2 max(min z over [i..j], min z over [j..i])`,
//!   where the ranges are the two cyclic arcs.
//! * `d_map`, the shortest-path closure of `d_circ` over a subsample of
//!   grid points. The closure only relaxes sums, so `d_map <= d_circ`
//!   entrywise, and refining the subsample can only tighten it further.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{MetricKind, MetricOracle};
use crate::rng::{DrawStream, DOMAIN_SNAKE};
use crate::treemetric::{SparseTable, TreeMetric};

/// Hard cap on subsample size; the closure is cubic in it.
pub const MAX_SUBSAMPLE: usize = 1024;
/// Default subsample size for map metrics.
pub const DEFAULT_SUBSAMPLE: usize = 512;

/// A realized label field over a grid.
#[derive(Debug, Clone)]
pub struct SnakeLabels {
    n_cells: usize,
    labels: Vec<f64>,
    /// RMQ over the doubled label array, for cyclic arc minima.
    doubled: SparseTable,
}

impl SnakeLabels {
    /// Wraps an explicit label vector (`n_cells + 1` values, both ends
    /// exactly zero). Used for crafted fields in tests and diagnostics;
    /// sampled fields come from [`simulate_labels`].
    pub fn from_values(labels: Vec<f64>) -> Result<Self> {
        if labels.len() < 3 {
            return Err(Error::arg(format!(
                "label field needs at least 2 cells, got {} samples",
                labels.len()
            )));
        }
        let n = labels.len() - 1;
        if let Some((i, v)) = labels.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::arg(format!("label {v} at index {i} is not finite")));
        }
        if labels[0] != 0.0 || labels[n] != 0.0 {
            return Err(Error::arg(format!(
                "labels must vanish at both ends (0 and n identified), got {} and {}",
                labels[0], labels[n]
            )));
        }
        let mut doubled = labels.clone();
        doubled.extend_from_slice(&labels[1..]);
        let doubled = SparseTable::build(doubled);
        Ok(Self {
            n_cells: n,
            labels,
            doubled,
        })
    }

    #[must_use]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Label values, `n_cells + 1` of them; first and last are zero.
    #[must_use]
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    fn check(&self, i: usize) -> Result<()> {
        if i > self.n_cells {
            return Err(Error::arg(format!(
                "grid index {i} out of bounds for {} points",
                self.n_cells + 1
            )));
        }
        Ok(())
    }

    /// Minimum label along the cyclic arc from `a` forward to `b`.
    #[must_use]
    pub(crate) fn cyclic_min(&self, a: usize, b: usize) -> f64 {
        debug_assert!(a <= self.n_cells && b <= self.n_cells);
        if a <= b {
            self.doubled.min(a, b)
        } else {
            // Wraps: [a, n] followed by [0, b]; z_0 = z_n makes the
            // doubled table cover both with one query.
            self.doubled.min(a, self.n_cells + b)
        }
    }

    /// Cyclic label pseudometric
    /// `z_i + z_j - 2 max(arc min i->j, arc min j->i)`.
    pub fn d_circ(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.d_circ_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn d_circ_unchecked(&self, i: usize, j: usize) -> f64 {
        let fwd = self.cyclic_min(i, j);
        let bwd = self.cyclic_min(j, i);
        self.labels[i] + self.labels[j] - 2.0 * fwd.max(bwd)
    }
}

/// Realizes the label field along the contour of `tm`'s excursion.
///
/// One Gaussian draw per ascent step plus one per interior landing, all
/// from the counter stream keyed by `(seed, draw index)`, so a fixed
/// `(grid, seed)` reproduces the field bit for bit.
#[must_use]
pub fn simulate_labels(tm: &TreeMetric, seed: u64) -> SnakeLabels {
    let v = tm.grid().values();
    let n = tm.grid().n_cells();
    let mut draws = DrawStream::new(seed, DOMAIN_SNAKE);
    let mut labels = Vec::with_capacity(n + 1);
    labels.push(0.0);
    // Ancestral line: strictly increasing heights, bottom pinned at the
    // root. Invariant between steps: top height equals v[i].
    let mut stack: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for i in 0..n {
        let m = v[i].min(v[i + 1]);
        let mut last_popped: Option<(f64, f64)> = None;
        while stack.last().expect("root entry is never popped").0 > m {
            last_popped = stack.pop();
        }
        let &(h_a, l_a) = stack.last().expect("root entry is never popped");
        let l_m = if h_a == m {
            l_a
        } else {
            // Interior landing: bridge between the retained entry and the
            // last popped one.
            let (h_b, l_b) = last_popped.expect("interior landing implies a pop");
            debug_assert!(h_a < m && m < h_b);
            let frac = (m - h_a) / (h_b - h_a);
            let var = (m - h_a) * (h_b - m) / (h_b - h_a);
            let l_m = l_a + (l_b - l_a) * frac + var.sqrt() * draws.next_normal();
            stack.push((m, l_m));
            l_m
        };
        if v[i + 1] > m {
            let l_up = l_m + (v[i + 1] - m).sqrt() * draws.next_normal();
            stack.push((v[i + 1], l_up));
            labels.push(l_up);
        } else {
            labels.push(l_m);
        }
    }
    debug_assert_eq!(labels[n], 0.0);
    SnakeLabels::from_values(labels).expect("walk produces a valid label field")
}

/// How map subsamples are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStrategy {
    /// Evenly spaced grid indices.
    UniformStride,
    /// Strict local extrema of the label path first, stride fill after.
    IncludeExtremes,
}

/// Subsampled map pseudometric: `d_circ` entries and their shortest-path
/// closure `d_map` over `m` grid points.
#[derive(Debug, Clone)]
pub struct MapMetric {
    sample_indices: Vec<usize>,
    m: usize,
    d_circ: Vec<f64>,
    d_map: Vec<f64>,
}

impl MapMetric {
    /// Sorted grid indices carried by the subsample.
    #[must_use]
    pub fn sample_indices(&self) -> &[usize] {
        &self.sample_indices
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.m
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Position of a grid index within the subsample, if present.
    /// `n_cells` is folded onto `0` (one cyclic point).
    #[must_use]
    pub fn position_of(&self, grid_index: usize) -> Option<usize> {
        self.sample_indices.binary_search(&grid_index).ok()
    }

    /// `d_circ` between subsample positions.
    #[must_use]
    pub fn d_circ_at(&self, a: usize, b: usize) -> f64 {
        self.d_circ[a * self.m + b]
    }

    /// Closed map distance between subsample positions.
    #[must_use]
    pub fn d_map_at(&self, a: usize, b: usize) -> f64 {
        self.d_map[a * self.m + b]
    }

    /// Closed map distance addressed by grid indices.
    pub fn d_map_by_grid(&self, gi: usize, gj: usize) -> Result<f64> {
        let a = self.position_of(gi).ok_or(Error::MissingIndex(gi))?;
        let b = self.position_of(gj).ok_or(Error::MissingIndex(gj))?;
        Ok(self.d_map_at(a, b))
    }
}

/// As a metric oracle the map answers by subsample position (0..m).
impl MetricOracle for MapMetric {
    fn dist(&self, a: usize, b: usize) -> f64 {
        self.d_map_at(a, b)
    }

    fn kind(&self) -> MetricKind {
        MetricKind::Map
    }
}

/// Builds the subsampled map metric. `m` in `2..=MAX_SUBSAMPLE`, at most
/// the number of distinct cyclic grid points.
pub fn map_metric(sl: &SnakeLabels, m: usize, strategy: SampleStrategy) -> Result<MapMetric> {
    map_metric_with_required(sl, m, strategy, &[])
}

/// [`map_metric`] with indices that must be part of the subsample
/// (star anchors and similar). Counts toward the budget `m`.
pub fn map_metric_with_required(
    sl: &SnakeLabels,
    m: usize,
    strategy: SampleStrategy,
    required: &[usize],
) -> Result<MapMetric> {
    let n = sl.n_cells();
    if m < 2 || m > MAX_SUBSAMPLE {
        return Err(Error::arg(format!(
            "subsample size {m} outside 2..={MAX_SUBSAMPLE}"
        )));
    }
    if m > n {
        return Err(Error::arg(format!(
            "subsample size {m} exceeds the {n} distinct cyclic grid points"
        )));
    }

    let mut picked = std::collections::BTreeSet::new();
    for &r in required {
        if r > n {
            return Err(Error::arg(format!("required index {r} out of bounds")));
        }
        picked.insert(if r == n { 0 } else { r });
    }
    if picked.len() > m {
        return Err(Error::arg(format!(
            "{} required indices exceed subsample budget {m}",
            picked.len()
        )));
    }

    if strategy == SampleStrategy::IncludeExtremes {
        let z = sl.labels();
        let extrema: Vec<usize> = (1..n)
            .filter(|&i| {
                (z[i] > z[i - 1] && z[i] > z[i + 1]) || (z[i] < z[i - 1] && z[i] < z[i + 1])
            })
            .collect();
        // Thin deterministically to leave room for the stride fill.
        let budget = (m - picked.len()).saturating_sub(1).max(1);
        let step = extrema.len().div_ceil(budget).max(1);
        for idx in extrema.into_iter().step_by(step) {
            if picked.len() >= m {
                break;
            }
            picked.insert(idx);
        }
    }

    // Stride fill up to the budget, skipping indices already present.
    let mut k = 0usize;
    while picked.len() < m && k < m {
        picked.insert(k * n / m);
        k += 1;
    }
    // Dedup collisions may leave the set short; sweep remaining indices.
    let mut i = 0usize;
    while picked.len() < m && i < n {
        picked.insert(i);
        i += 1;
    }

    let sample_indices: Vec<usize> = picked.into_iter().collect();
    let mm = sample_indices.len();
    let mut d_circ = vec![0.0; mm * mm];
    for a in 0..mm {
        for b in (a + 1)..mm {
            let d = sl.d_circ_unchecked(sample_indices[a], sample_indices[b]);
            d_circ[a * mm + b] = d;
            d_circ[b * mm + a] = d;
        }
    }
    let mut d_map = d_circ.clone();
    apsp_fixpoint(&mut d_map, mm);

    Ok(MapMetric {
        sample_indices,
        m: mm,
        d_circ,
        d_map,
    })
}

/// Floyd-Warshall closure repeated until no entry changes.
///
/// A single pass does not guarantee `d[i][j] <= d[i][k] + d[k][j]` in
/// floating point once later relaxations lower intermediate entries; the
/// fixpoint does, exactly and by construction. Entries only decrease and
/// each holds one of finitely many float values, so this terminates.
fn apsp_fixpoint(d: &mut [f64], m: usize) {
    debug_assert_eq!(d.len(), m * m);
    loop {
        let mut changed = false;
        for k in 0..m {
            // Within a stage row k and column k are stable: the only
            // candidate update adds a zero diagonal term.
            let row_k = d[k * m..(k + 1) * m].to_vec();
            let stage_changed = d
                .par_chunks_mut(m)
                .map(|row| {
                    let d_ik = row[k];
                    if !d_ik.is_finite() {
                        return false;
                    }
                    let mut local = false;
                    for (cell, &dkj) in row.iter_mut().zip(&row_k) {
                        let via = d_ik + dkj;
                        if via < *cell {
                            *cell = via;
                            local = true;
                        }
                    }
                    local
                })
                .reduce(|| false, |a, b| a || b);
            changed |= stage_changed;
        }
        if !changed {
            break;
        }
    }
}

/// Diagnostic comparison of the closed map metric against its bounds.
/// Nothing here is asserted; negative lower-bound margins are reported,
/// not failed.
///
/// The Lipschitz bound `d_map >= |z_i - z_j|` holds for every chain in
/// real arithmetic (each link dominates its label difference), so its
/// margin should only ever dip below zero by accumulated rounding. The
/// ancestor bound is heuristic: it compares against the label of the
/// tree ancestor of i and j, which a short relay route may undercut.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    /// Number of unordered subsample pairs inspected.
    pub pairs: usize,
    /// Pairs with `d_map > d_circ`. Zero by construction of the closure.
    pub upper_violations: usize,
    /// Minimum over pairs of `d_map - (z_i + z_j - 2 z[k*])`, where `k*`
    /// is the leftmost grid index attaining the excursion minimum
    /// between i and j (the label of the tree ancestor).
    pub min_ancestor_margin: f64,
    /// Pairs where that margin is negative.
    pub ancestor_negative: usize,
    /// Minimum over pairs of `d_map - |z_i - z_j|`.
    pub min_lipschitz_margin: f64,
    /// Pairs where the Lipschitz margin is negative.
    pub lipschitz_negative: usize,
}

/// Compares `d_map` to its upper bound `d_circ` and to two label lower
/// bounds, over all subsample pairs.
pub fn check_bounds(sl: &SnakeLabels, tm: &TreeMetric, mm: &MapMetric) -> Result<BoundsReport> {
    if tm.grid().n_cells() != sl.n_cells() {
        return Err(Error::arg(format!(
            "grid has {} cells but labels have {}",
            tm.grid().n_cells(),
            sl.n_cells()
        )));
    }
    let z = sl.labels();
    let idx = mm.sample_indices();
    let mut report = BoundsReport {
        pairs: 0,
        upper_violations: 0,
        min_ancestor_margin: f64::INFINITY,
        ancestor_negative: 0,
        min_lipschitz_margin: f64::INFINITY,
        lipschitz_negative: 0,
    };
    for a in 0..idx.len() {
        for b in (a + 1)..idx.len() {
            let (i, j) = (idx[a], idx[b]);
            let dm = mm.d_map_at(a, b);
            report.pairs += 1;
            if dm > mm.d_circ_at(a, b) {
                report.upper_violations += 1;
            }
            let k_star = tm.interval_argmin(i, j)?;
            let ancestor = z[i] + z[j] - 2.0 * z[k_star];
            let margin = dm - ancestor;
            report.min_ancestor_margin = report.min_ancestor_margin.min(margin);
            if margin < 0.0 {
                report.ancestor_negative += 1;
            }
            let margin = dm - (z[i] - z[j]).abs();
            report.min_lipschitz_margin = report.min_lipschitz_margin.min(margin);
            if margin < 0.0 {
                report.lipschitz_negative += 1;
            }
        }
    }
    Ok(report)
}
