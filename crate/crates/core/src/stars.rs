//! Approximate star certificates and zig-zag window matching.
//!
//! An (a, eta)-star with n satellites around a center x_0 is a point
//! configuration with, for some scale rho > 0,
//!
//! ```text
//! rho <= d(x_0, x_i) <= (1 + eta) rho          (satellites near one shell)
//! (a - eta) rho <= d(x_i, x_j) <= a rho        (pairwise spread)
//! ```
//!
//! for all distinct satellites, under `a > 1` and `0 < eta < (a - 1)/2`
//! (so the pairwise floor exceeds the shell diameter and satellites
//! cannot collapse). Large stars are the obstruction this crate hunts
//! for: spaces quasisymmetric to a fixed target can only contain them up
//! to a bounded n, so exhibiting n-stars at all scales with n unbounded
//! rules the embedding out (see `dimension::qs_obstruction`).
//!
//! Stars are extracted from excursions by locating windows where the
//! excursion tracks a rescaled zig-zag profile F_n ([`scan_windows`]),
//! then reading off the peak/valley configuration inside the window,
//! either in the tree metric ([`star_from_window`]) or in the map
//! pseudometric over a subsample ([`map_star_from_window`]).
//! [`generic_star_search`] is a metric-agnostic heuristic for comparison
//! fixtures.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::excursion::{zigzag_eval, ExcursionGrid, ZigZagParams};
use crate::metric::{MetricKind, MetricOracle};
use crate::snake::MapMetric;
use crate::treemetric::TreeMetric;

/// A verified approximate star: the named inequalities hold verbatim for
/// the stored parameters. Produced only by the verification routines.
#[derive(Debug, Clone, PartialEq)]
pub struct StarCertificate {
    metric: MetricKind,
    center: usize,
    satellites: Vec<usize>,
    a: f64,
    eta: f64,
    rho: f64,
}

impl StarCertificate {
    #[must_use]
    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    /// Number of satellites.
    #[must_use]
    pub fn n(&self) -> usize {
        self.satellites.len()
    }

    #[must_use]
    pub fn center(&self) -> usize {
        self.center
    }

    #[must_use]
    pub fn satellites(&self) -> &[usize] {
        &self.satellites
    }

    #[must_use]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[must_use]
    pub fn eta(&self) -> f64 {
        self.eta
    }

    #[must_use]
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Assembles a certificate without verification. Only for carrying
    /// parameters that were verified elsewhere (deserialized reports);
    /// the distance-bearing routines all go through [`verify_star`].
    pub(crate) fn from_parts(
        metric: MetricKind,
        center: usize,
        satellites: Vec<usize>,
        a: f64,
        eta: f64,
        rho: f64,
    ) -> Self {
        Self {
            metric,
            center,
            satellites,
            a,
            eta,
            rho,
        }
    }
}

fn check_star_params(n: usize, a: f64, eta: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::arg(format!("a star needs at least 2 satellites, got {n}")));
    }
    if !a.is_finite() || a <= 1.0 {
        return Err(Error::arg(format!("star parameter a must exceed 1, got {a}")));
    }
    if !eta.is_finite() || eta <= 0.0 || eta >= (a - 1.0) / 2.0 {
        return Err(Error::arg(format!(
            "eta must lie in (0, (a-1)/2) = (0, {}), got {eta}",
            (a - 1.0) / 2.0
        )));
    }
    Ok(())
}

fn check_distinct(center: usize, satellites: &[usize]) -> Result<()> {
    let mut seen = satellites.to_vec();
    seen.push(center);
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::arg("star points must be pairwise distinct".to_string()));
    }
    Ok(())
}

/// Checks the star inequalities at one fixed scale `rho`.
pub fn verify_star_at<O: MetricOracle + ?Sized>(
    oracle: &O,
    center: usize,
    satellites: &[usize],
    a: f64,
    eta: f64,
    rho: f64,
) -> Result<bool> {
    check_star_params(satellites.len(), a, eta)?;
    check_distinct(center, satellites)?;
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::arg(format!("rho must be a positive real, got {rho}")));
    }
    Ok(star_holds(oracle, center, satellites, a, eta, rho))
}

fn star_holds<O: MetricOracle + ?Sized>(
    oracle: &O,
    center: usize,
    satellites: &[usize],
    a: f64,
    eta: f64,
    rho: f64,
) -> bool {
    for &s in satellites {
        let d = oracle.dist(center, s);
        if !(rho <= d && d <= (1.0 + eta) * rho) {
            return false;
        }
    }
    for (i, &s) in satellites.iter().enumerate() {
        for &t in &satellites[i + 1..] {
            let d = oracle.dist(s, t);
            if !((a - eta) * rho <= d && d <= a * rho) {
                return false;
            }
        }
    }
    true
}

/// Verifies a star configuration, choosing the scale itself.
///
/// The definition only asserts that some rho works. The feasible set is
/// an intersection of intervals, so this tries the canonical endpoint
/// rho = min center distance and then an 8-point sweep across
/// `[max center distance / (1 + eta), min center distance]` (the full
/// range the center constraints allow). Returns the certificate for the
/// first scale that checks out, `None` if none does.
pub fn verify_star<O: MetricOracle + ?Sized>(
    oracle: &O,
    center: usize,
    satellites: &[usize],
    a: f64,
    eta: f64,
) -> Result<Option<StarCertificate>> {
    verify_star_candidates(oracle, center, satellites, a, eta, &[])
}

/// [`verify_star`] with caller-supplied scales tried before the default
/// candidates. Window constructions pass their analytic rho here so the
/// emitted certificate carries the designed scale when it is feasible.
pub(crate) fn verify_star_candidates<O: MetricOracle + ?Sized>(
    oracle: &O,
    center: usize,
    satellites: &[usize],
    a: f64,
    eta: f64,
    preferred: &[f64],
) -> Result<Option<StarCertificate>> {
    check_star_params(satellites.len(), a, eta)?;
    check_distinct(center, satellites)?;

    let d0: Vec<f64> = satellites.iter().map(|&s| oracle.dist(center, s)).collect();
    let lo = d0.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d0.iter().copied().fold(0.0f64, f64::max);
    if !(lo > 0.0 && hi.is_finite()) {
        return Ok(None);
    }

    let mut candidates: Vec<f64> = preferred.to_vec();
    candidates.push(lo);
    let sweep_lo = hi / (1.0 + eta);
    if sweep_lo < lo {
        for k in 0..8 {
            candidates.push(sweep_lo + (lo - sweep_lo) * k as f64 / 7.0);
        }
    }
    let mut tried: Vec<f64> = Vec::with_capacity(candidates.len());
    for rho in candidates {
        if !(rho.is_finite() && rho > 0.0) || tried.contains(&rho) {
            continue;
        }
        tried.push(rho);
        if star_holds(oracle, center, satellites, a, eta, rho) {
            return Ok(Some(StarCertificate {
                metric: oracle.kind(),
                center,
                satellites: satellites.to_vec(),
                a,
                eta,
                rho,
            }));
        }
    }
    Ok(None)
}

/// A grid window on which the excursion tracks a rescaled zig-zag F_n.
///
/// `tol` is the achieved sup deviation divided by the square root of the
/// window's t-length. Invariants expected of a genuine match (not
/// enforced by the type, the scanner guarantees them): `s_idx < t_idx`
/// and `tol < 2^(1-n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatch {
    pub n: u32,
    pub s_idx: usize,
    pub t_idx: usize,
    pub tol: f64,
}

impl WindowMatch {
    /// Window length in cells.
    #[must_use]
    pub fn len_cells(&self) -> usize {
        self.t_idx - self.s_idx
    }
}

/// Matching threshold on the normalized sup deviation.
#[must_use]
pub fn window_tolerance(n: u32) -> f64 {
    2f64.powi(1 - n as i32)
}

/// Power-of-two window lengths from just above `4
/// n` up to a quarter of the grid. The general-purpose scan preset.
#[must_use]
pub fn default_window_lengths(n: u32, n_cells: usize) -> Vec<usize> {
    let min_len = (4 * n as usize).next_power_of_two();
    let mut lens = Vec::new();
    let mut len = min_len;
    while len <= n_cells / 4 {
        lens.push(len);
        len *= 2;
    }
    lens
}

/// Window lengths 2^(-(n+k+2)) of the grid, k = 1, 2, ...: the dyadic
/// scale family behind the almost-sure matching argument. Assumes a
/// power-of-two grid; lengths stop once windows get too short to resolve
/// the profile.
#[must_use]
pub fn ank_window_lengths(n: u32, n_cells: usize) -> Vec<usize> {
    let mut lens = Vec::new();
    for k in 1u32.. {
        let shift = n + k + 2;
        if shift >= usize::BITS || (n_cells >> shift) < 4 * n as usize {
            break;
        }
        lens.push(n_cells >> shift);
    }
    lens
}

/// Scans the grid for windows matching the order-n zig-zag.
///
/// Every requested length slides across the grid with stride length/4;
/// a window starting at cell s matches when
///
/// ```text
/// max_j |f(s+j) - f(s) - sqrt(delta) F_n(j / len)| / sqrt(delta) < 2^(1-n)
/// ```
///
/// with delta the window's t-length. Matches are reduced to a
/// left-to-right greedy packing, so the returned windows are pairwise
/// disjoint (treating them as half-open index ranges) and the output is
/// deterministic.
pub fn scan_windows(
    grid: &ExcursionGrid,
    n: u32,
    window_lengths: &[usize],
) -> Result<Vec<WindowMatch>> {
    if n < 2 {
        return Err(Error::arg(format!("zig-zag order must be at least 2, got {n}")));
    }
    let params = ZigZagParams::new(n)?;
    let n_cells = grid.n_cells();
    let mut lengths: Vec<usize> = window_lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    for &len in &lengths {
        if !len.is_power_of_two() || len < 4 * n as usize {
            return Err(Error::arg(format!(
                "window length {len} is not a dyadic cell count >= 4n = {}",
                4 * n
            )));
        }
        if len > n_cells {
            return Err(Error::arg(format!(
                "window length {len} exceeds the {n_cells}-cell grid"
            )));
        }
    }

    let f = grid.values();
    let threshold = window_tolerance(n);
    let mut matches: Vec<WindowMatch> = Vec::new();
    for &len in &lengths {
        let profile: Vec<f64> = (0..=len)
            .map(|j| zigzag_eval(params, j as f64 / len as f64))
            .collect();
        let sqrt_delta = (len as f64 / n_cells as f64).sqrt();
        let stride = len / 4;
        let starts: Vec<usize> = (0..=n_cells - len).step_by(stride).collect();
        let found: Vec<WindowMatch> = starts
            .par_iter()
            .filter_map(|&s| {
                let base = f[s];
                let dev = profile
                    .iter()
                    .enumerate()
                    .map(|(j, &p)| (f[s + j] - base - sqrt_delta * p).abs())
                    .fold(0.0f64, f64::max);
                let tol = dev / sqrt_delta;
                (tol < threshold).then_some(WindowMatch {
                    n,
                    s_idx: s,
                    t_idx: s + len,
                    tol,
                })
            })
            .collect();
        matches.extend(found);
    }

    matches.sort_by(|a, b| (a.s_idx, a.t_idx).cmp(&(b.s_idx, b.t_idx)));
    let mut packed: Vec<WindowMatch> = Vec::new();
    for m in matches {
        if packed.last().map_or(true, |p| m.s_idx >= p.t_idx) {
            packed.push(m);
        }
    }
    Ok(packed)
}

/// Reads a tree-metric star out of a matched window.
///
/// The center sits at window fraction 1/(4n) and the satellites at the
/// first n-1 peak fractions (2p+1)/(2n), all snapped to nearest grid
/// indices. Verification runs with the order-n parameters
///
/// ```text
/// a_n = (2 + 2^(4-n)) / (1 - 2^(4-n))
/// eta_n = (1 + 2^(4-n)) / (1 - 2^(4-n)) - 1
/// rho_n = (1 - 2^(4-n)) sqrt(delta) / 2
/// ```
///
/// trying rho_n first; a window with tol below threshold on a grid that
/// resolves it (at least 4n cells) always certifies.
pub fn star_from_window(tm: &TreeMetric, wm: &WindowMatch) -> Result<Option<StarCertificate>> {
    if wm.n < 6 {
        return Err(Error::arg(format!(
            "tree star extraction needs zig-zag order >= 6 (a_n > 2), got {}",
            wm.n
        )));
    }
    let n = wm.n as usize;
    let n_cells = tm.grid().n_cells();
    if wm.s_idx >= wm.t_idx || wm.t_idx > n_cells {
        return Err(Error::arg(format!(
            "window [{}, {}] does not fit a {n_cells}-cell grid",
            wm.s_idx, wm.t_idx
        )));
    }
    let len = wm.len_cells();
    if len < 4 * n {
        return Err(Error::arg(format!(
            "window of {len} cells cannot resolve an order-{n} star (needs >= {})",
            4 * n
        )));
    }

    let q = 2f64.powi(4 - wm.n as i32);
    let a = (2.0 + q) / (1.0 - q);
    let eta = (1.0 + q) / (1.0 - q) - 1.0;
    let delta = len as f64 / n_cells as f64;
    let rho = (1.0 - q) * 0.5 * delta.sqrt();

    let snap = |frac: f64| wm.s_idx + (frac * len as f64).round() as usize;
    let center = snap(1.0 / (4.0 * n as f64));
    let satellites: Vec<usize> = (0..n - 1)
        .map(|p| snap((2 * p + 1) as f64 / (2.0 * n as f64)))
        .collect();

    verify_star_candidates(tm, center, &satellites, a, eta, &[rho])
}

/// Valley and peak anchors of a matched window plus the preferred map
/// scale. `None` when the window is too loose or its profile too flat
/// to separate peaks from valleys.
struct WindowFrame {
    /// Valleys; `x[0]` is the wrap valley at the deeper-resolved end.
    x: Vec<usize>,
    /// Peaks, one per window n-th.
    y: Vec<usize>,
    m_scale: f64,
}

fn window_frame(grid: &ExcursionGrid, wm: &WindowMatch) -> Result<Option<WindowFrame>> {
    if wm.n < 3 {
        return Err(Error::arg(format!(
            "map star extraction needs zig-zag order >= 3, got {}",
            wm.n
        )));
    }
    let n = wm.n as usize;
    let n_cells = grid.n_cells();
    if wm.s_idx >= wm.t_idx || wm.t_idx > n_cells {
        return Err(Error::arg(format!(
            "window [{}, {}] does not fit a {n_cells}-cell grid",
            wm.s_idx, wm.t_idx
        )));
    }
    let len = wm.len_cells();
    if len < 4 * n {
        return Err(Error::arg(format!(
            "window of {len} cells cannot resolve an order-{n} star (needs >= {})",
            4 * n
        )));
    }
    if !(wm.tol < window_tolerance(wm.n)) {
        return Ok(None);
    }

    let f = grid.values();
    let span = |lo_frac: f64, hi_frac: f64| -> (usize, usize) {
        let lo = (wm.s_idx as f64 + lo_frac * len as f64).ceil() as usize;
        let hi = (wm.s_idx as f64 + hi_frac * len as f64).floor() as usize;
        (lo.max(wm.s_idx), hi.min(wm.t_idx))
    };
    // min_by keeps the first of equal keys, so ties go to the smallest
    // index in both directions.
    let argmin = |lo: usize, hi: usize| (lo..=hi).min_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap();
    let argmax = |lo: usize, hi: usize| (lo..=hi).min_by(|&a, &b| f[b].total_cmp(&f[a])).unwrap();

    // Valleys x_1..x_(n-1), then the wrap valley x_0: the window end
    // whose half-cell minimum is larger (the better-separated one).
    let nf = n as f64;
    let mut x = Vec::with_capacity(n);
    let (l_lo, l_hi) = span(0.0, 0.5 / nf);
    let (r_lo, r_hi) = span(1.0 - 0.5 / nf, 1.0);
    let left = argmin(l_lo, l_hi);
    let right = argmin(r_lo, r_hi);
    x.push(if f[left] >= f[right] { left } else { right });
    for p in 1..n {
        let (lo, hi) = span((p as f64 - 0.5) / nf, (p as f64 + 0.5) / nf);
        x.push(argmin(lo, hi));
    }
    let y: Vec<usize> = (0..n)
        .map(|p| {
            let (lo, hi) = span(p as f64 / nf, (p + 1) as f64 / nf);
            argmax(lo, hi)
        })
        .collect();

    let m_sq = (0..n)
        .map(|k| f[y[k]] - f[x[k]].max(f[x[(k + 1) % n]]))
        .fold(f64::NEG_INFINITY, f64::max);
    if !(m_sq > 0.0) {
        return Ok(None);
    }
    Ok(Some(WindowFrame { x, y, m_scale: m_sq.sqrt() }))
}

/// Grid indices [`map_star_from_window`] will query on the map metric.
///
/// Pass these to `map_metric_with_required` when building the subsample
/// so the extraction cannot fail on a missing index. Empty when the
/// window would be rejected before any metric lookup.
pub fn map_star_required_indices(grid: &ExcursionGrid, wm: &WindowMatch) -> Result<Vec<usize>> {
    Ok(match window_frame(grid, wm)? {
        Some(frame) => {
            let n = wm.n as usize;
            let mut req = vec![frame.x[1]];
            req.extend_from_slice(&frame.y[..n - 1]);
            req
        }
        None => Vec::new(),
    })
}

/// Reads a map-metric star out of a matched window.
///
/// Inside the window the excursion is close to a rescaled F_n, so its
/// exact extrema identify the configuration: x_p = argmin of f over
/// window fractions [(p-1/2)/n, (p+1/2)/n], the wrap valley x_0 = the
/// deeper-resolved end of the window, y_p = argmax over [p/n, (p+1)/n]
/// (ties always to the smallest index). The center is x_1 and the
/// satellites are y_0..y_(n-2); distances are taken from the closed map
/// metric, so all of those indices must be in `mm`'s subsample (build it
/// with `map_metric_with_required`). The verification sweep starts at
/// the operating point
///
/// ```text
/// a* = (2 + 16 q) / (1 - 6 q)     eta* = 32 q / (1 - 6 q)     q = 2^-n
/// ```
///
/// with preferred scale M = max_k sqrt(f(y_k) - max(f(x_k), f(x_k+1))).
pub fn map_star_from_window(
    grid: &ExcursionGrid,
    mm: &MapMetric,
    wm: &WindowMatch,
) -> Result<Option<StarCertificate>> {
    let Some(frame) = window_frame(grid, wm)? else {
        return Ok(None);
    };
    let n = wm.n as usize;
    let m_scale = frame.m_scale;
    let center = frame.x[1];
    let satellites = &frame.y[..n - 1];
    let center_pos = mm.position_of(center).ok_or(Error::MissingIndex(center))?;
    let sat_pos = satellites
        .iter()
        .map(|&s| mm.position_of(s).ok_or(Error::MissingIndex(s)))
        .collect::<Result<Vec<usize>>>()?;

    let q = 2f64.powi(-(wm.n as i32));
    let a_star = (2.0 + 16.0 * q) / (1.0 - 6.0 * q);
    let eta_star = 32.0 * q / (1.0 - 6.0 * q);
    let sweep = [
        (a_star, eta_star),
        (a_star, 1.5 * eta_star),
        (2.25, 0.55),
        (2.5, 0.6),
        (3.0, 2.0 / 3.0),
    ];
    for (a, eta) in sweep {
        if !(a > 1.0 && eta > 0.0 && eta < (a - 1.0) / 2.0) {
            continue;
        }
        if let Some(cert) =
            verify_star_candidates(mm, center_pos, &sat_pos, a, eta, &[m_scale])?
        {
            // The certificate came back in subsample positions; report
            // grid indices like every other star.
            let idx = mm.sample_indices();
            return Ok(Some(StarCertificate {
                metric: cert.metric,
                center: idx[cert.center],
                satellites: cert.satellites.iter().map(|&p| idx[p]).collect(),
                a: cert.a,
                eta: cert.eta,
                rho: cert.rho,
            }));
        }
    }
    Ok(None)
}

/// Heuristic star search over an explicit point set.
///
/// For each candidate center the scale sweeps a geometric ladder across
/// the realized distance range; at each scale the points inside the
/// shell [rho, (1+eta) rho] are greedily thinned to a pairwise-separated
/// subset and handed to [`verify_star`]. First certificate wins. The
/// search is deterministic but makes no completeness claim.
pub fn generic_star_search<O: MetricOracle + ?Sized>(
    oracle: &O,
    points: &[usize],
    n: usize,
    a: f64,
    eta: f64,
) -> Result<Option<StarCertificate>> {
    check_star_params(n, a, eta)?;
    if points.len() < n + 1 {
        return Err(Error::arg(format!(
            "searching for {n} satellites needs at least {} points, got {}",
            n + 1,
            points.len()
        )));
    }

    for &center in points {
        let dists: Vec<(usize, f64)> = points
            .iter()
            .filter(|&&p| p != center)
            .map(|&p| (p, oracle.dist(center, p)))
            .collect();
        let lo = dists
            .iter()
            .map(|&(_, d)| d)
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let hi = dists.iter().map(|&(_, d)| d).fold(0.0f64, f64::max);
        if !(lo.is_finite() && hi > 0.0) {
            continue;
        }
        let mut rho = lo;
        for _ in 0..200 {
            if rho > hi {
                break;
            }
            let mut selected: Vec<usize> = Vec::with_capacity(n);
            for &(p, d) in &dists {
                if d < rho || d > (1.0 + eta) * rho {
                    continue;
                }
                let fits = selected.iter().all(|&q| {
                    let dpq = oracle.dist(p, q);
                    (a - eta) * rho <= dpq && dpq <= a * rho
                });
                if fits {
                    selected.push(p);
                    if selected.len() == n {
                        break;
                    }
                }
            }
            if selected.len() == n {
                if let Some(cert) =
                    verify_star_candidates(oracle, center, &selected, a, eta, &[rho])?
                {
                    return Ok(Some(cert));
                }
            }
            rho *= 1.25;
        }
    }
    Ok(None)
}
