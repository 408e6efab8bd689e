//! Covering numbers, Assouad exponent estimation, and embedding
//! obstructions.
//!
//! The Assouad dimension of a metric space is the infimal alpha such
//! that every ball B(x, R) can be covered by C (R/r)^alpha sets of
//! diameter at most r. Everything here works with finite point sets and
//! a metric oracle, so the module estimates rather than decides: covers
//! are greedy (within a constant factor of optimal), exponents are
//! reported as per-scale slopes and a sup-slope fit, and unbounded
//! dimension only ever shows up as exponent growth across scales, never
//! as a claimed limit.
//!
//! The bridge to the star machinery is [`qs_obstruction`]: a
//! quasisymmetric map with control function psi distorts an n-star's
//! shell into a ball pair with radius ratio at most 4 psi(1) psi(1+eta),
//! and the n satellites stay r-separated inside it, forcing
//! N(B(x, R), r) >= n at that ratio. A star with n above
//! `c (4 psi(1) psi(1+eta))^s` therefore contradicts every (c, s)
//! Assouad bound on every psi-quasisymmetric image at once.
//!
//! [`CounterexampleSpace`] is the standing fixture against intuition: a
//! countable bounded pseudometric space whose n-th column is an n-point
//! equilateral configuration at scale 2^-n. Its covering numbers grow
//! without bound relative to scale, and it contains no wide stars at
//! all, which keeps the two notions visibly independent in tests.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::MetricOracle;
use crate::rng::{DrawStream, DOMAIN_PROBE};
use crate::stars::StarCertificate;

/// One covering measurement: `count` greedy half-radius balls covered
/// B(center, r_outer) down to diameter r_inner.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSample {
    pub center: usize,
    pub r_outer: f64,
    pub r_inner: f64,
    pub count: usize,
}

impl CoverSample {
    /// Per-sample exponent `log count / log (R/r)`.
    #[must_use]
    pub fn exponent(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.count as f64).ln() / (self.r_outer / self.r_inner).ln()
    }
}

/// Result of an Assouad estimation run. Raw samples are kept so other
/// fits can be run on the same data.
#[derive(Debug, Clone, PartialEq)]
pub struct AssouadReport {
    pub samples: Vec<CoverSample>,
    /// Sup-slope exponent after the global C fit; never negative.
    pub fitted_alpha: f64,
    pub fitted_c: f64,
    /// Per-scale exponents kept rising through the finest scale, the
    /// finite-sample signature of unbounded dimension.
    pub diverging: bool,
}

/// Greedy half-radius cover of a ball.
///
/// Restricts `points` to B(center, R) (closed), then repeatedly takes
/// the first uncovered point in canonical order (distance from center,
/// then index) and covers everything within r/2 of it. A radius-r/2
/// ball has diameter at most r, so the result is an upper bound for the
/// minimal diameter-r cover and a lower bound for the diameter-r/2 one:
/// a constant-factor surrogate for the NP-hard exact count. The fixed
/// canonical order makes the count monotone in both radii.
pub fn covering_number<O: MetricOracle + ?Sized>(
    points: &[usize],
    oracle: &O,
    center: usize,
    r_outer: f64,
    r_inner: f64,
) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::arg("covering an empty point set".to_string()));
    }
    if !(r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
        return Err(Error::arg(format!(
            "need 0 < r < R, got r = {r_inner}, R = {r_outer}"
        )));
    }
    let ball = collect_ball(points, oracle, center, r_outer);
    Ok(greedy_cover(&ball, oracle, r_inner / 2.0))
}

/// Members of B(center, R) in canonical order.
fn collect_ball<O: MetricOracle + ?Sized>(
    points: &[usize],
    oracle: &O,
    center: usize,
    r_outer: f64,
) -> Vec<(usize, f64)> {
    let mut ball: Vec<(usize, f64)> = points
        .iter()
        .map(|&p| (p, oracle.dist(center, p)))
        .filter(|&(_, d)| d <= r_outer)
        .collect();
    ball.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ball
}

fn greedy_cover<O: MetricOracle + ?Sized>(
    ball: &[(usize, f64)],
    oracle: &O,
    radius: f64,
) -> usize {
    let mut covered = vec![false; ball.len()];
    let mut count = 0usize;
    for i in 0..ball.len() {
        if covered[i] {
            continue;
        }
        count += 1;
        let anchor = ball[i].0;
        for (j, c) in covered.iter_mut().enumerate() {
            if !*c && oracle.dist(anchor, ball[j].0) <= radius {
                *c = true;
            }
        }
    }
    count
}

/// Default number of evenly strided centers for [`assouad_estimate`].
pub const DEFAULT_CENTERS: usize = 16;

/// Estimates the Assouad exponent from covering counts.
///
/// Needs at least 10 scale pairs whose overall scale range spans two
/// decades (largest R at least 100 times the smallest r). Centers are
/// up to [`DEFAULT_CENTERS`] points evenly strided through `points`;
/// use [`assouad_estimate_with_centers`] when specific centers matter
/// (the counterexample space needs its column anchors).
pub fn assouad_estimate<O: MetricOracle + Sync + ?Sized>(
    points: &[usize],
    oracle: &O,
    scale_pairs: &[(f64, f64)],
) -> Result<AssouadReport> {
    let stride_centers: Vec<usize> = if points.len() <= DEFAULT_CENTERS {
        points.to_vec()
    } else {
        (0..DEFAULT_CENTERS)
            .map(|k| points[k * points.len() / DEFAULT_CENTERS])
            .collect()
    };
    assouad_estimate_with_centers(points, oracle, scale_pairs, &stride_centers)
}

/// [`assouad_estimate`] with an explicit center list.
pub fn assouad_estimate_with_centers<O: MetricOracle + Sync + ?Sized>(
    points: &[usize],
    oracle: &O,
    scale_pairs: &[(f64, f64)],
    centers: &[usize],
) -> Result<AssouadReport> {
    if scale_pairs.len() < 10 {
        return Err(Error::arg(format!(
            "need at least 10 scale pairs, got {}",
            scale_pairs.len()
        )));
    }
    if centers.is_empty() {
        return Err(Error::arg("need at least one center".to_string()));
    }
    for &(r_outer, r_inner) in scale_pairs {
        if !(r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
            return Err(Error::arg(format!(
                "scale pair needs 0 < r < R, got r = {r_inner}, R = {r_outer}"
            )));
        }
    }
    let max_r = scale_pairs.iter().map(|p| p.0).fold(0.0f64, f64::max);
    let min_r = scale_pairs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if max_r / min_r < 100.0 {
        return Err(Error::arg(format!(
            "scale pairs span only a factor {} of scales, need two decades (>= 100)",
            max_r / min_r
        )));
    }

    let samples: Vec<CoverSample> = scale_pairs
        .par_iter()
        .flat_map_iter(|&(r_outer, r_inner)| {
            centers.iter().map(move |&center| (center, r_outer, r_inner))
        })
        .map(|(center, r_outer, r_inner)| {
            let ball = collect_ball(points, oracle, center, r_outer);
            let count = greedy_cover(&ball, oracle, r_inner / 2.0);
            CoverSample {
                center,
                r_outer,
                r_inner,
                count,
            }
        })
        .collect();

    // Per-pair sup over centers, in the order the pairs were given.
    let per_pair: Vec<(f64, f64, usize)> = scale_pairs
        .iter()
        .map(|&(r_outer, r_inner)| {
            let sup = samples
                .iter()
                .filter(|s| s.r_outer == r_outer && s.r_inner == r_inner)
                .map(|s| s.count)
                .max()
                .unwrap_or(0);
            (r_outer, r_inner, sup.max(1))
        })
        .collect();

    // Two-pass fit of log N = log C + alpha log(R/r): least squares for
    // the intercept, then the sup slope. Averaging the slope would
    // underestimate a sup-defined quantity.
    let xs: Vec<f64> = per_pair.iter().map(|&(ro, ri, _)| (ro / ri).ln()).collect();
    let ys: Vec<f64> = per_pair.iter().map(|&(_, _, n)| (n as f64).ln()).collect();
    let k = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let log_c = if sxx > 0.0 {
        mean_y - (sxy / sxx) * mean_x
    } else {
        mean_y
    };
    let fitted_alpha = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| (y - log_c) / x)
        .fold(0.0f64, f64::max);

    // Divergence: per-pair exponents still strictly rising at the
    // finest scale, coarse to fine.
    let mut ordered: Vec<(f64, f64)> = per_pair
        .iter()
        .map(|&(ro, ri, n)| (ro, (n as f64).ln() / (ro / ri).ln()))
        .collect();
    ordered.sort_by(|a, b| b.0.total_cmp(&a.0));
    let exps: Vec<f64> = ordered.iter().map(|&(_, e)| e).collect();
    let diverging = exps.len() >= 3 && exps.windows(2).all(|w| w[0] < w[1]);

    Ok(AssouadReport {
        samples,
        fitted_alpha,
        fitted_c: log_c.exp(),
        diverging,
    })
}

/// A point (n, m) of the countable counterexample space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CounterexamplePoint {
    pub n: u32,
    pub m: u32,
}

impl CounterexamplePoint {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n < 1 || m < 1 {
            return Err(Error::arg(format!(
                "counterexample points need n, m >= 1, got ({n}, {m})"
            )));
        }
        Ok(Self { n, m })
    }
}

/// The five-case pseudometric on counterexample points.
///
/// Column n carries points m = 1..n pairwise at distance 2^-n, with
/// every m > n identified with (n, 1). Distinct columns sit at
/// 2 sum of k^-2 over min(n, n') <= k <= max(n, n'), independent of m.
#[must_use]
pub fn counterexample_distance(p: CounterexamplePoint, q: CounterexamplePoint) -> f64 {
    if p.n == q.n {
        let (lo, hi) = (p.m.min(q.m), p.m.max(q.m));
        if lo == hi || (lo == 1 && hi > p.n) || lo > p.n {
            return 0.0;
        }
        return 2f64.powi(-(p.n as i32));
    }
    let (lo, hi) = (p.n.min(q.n), p.n.max(q.n));
    2.0 * (lo..=hi).map(|k| 1.0 / (k as f64 * k as f64)).sum::<f64>()
}

/// Truncation cap keeping the precomputed matrix small.
pub const MAX_COUNTEREXAMPLE_N: u32 = 32;

/// Finite truncation of the counterexample space: all (n, m) with
/// n, m <= n_max, distances precomputed. Point ids for the oracle are
/// row-major: (n, m) at index (n-1) n_max + (m-1).
#[derive(Debug, Clone)]
pub struct CounterexampleSpace {
    n_max: u32,
    points: Vec<CounterexamplePoint>,
    d: Vec<f64>,
}

impl CounterexampleSpace {
    pub fn new(n_max: u32) -> Result<Self> {
        if n_max < 1 || n_max > MAX_COUNTEREXAMPLE_N {
            return Err(Error::arg(format!(
                "truncation must lie in 1..={MAX_COUNTEREXAMPLE_N}, got {n_max}"
            )));
        }
        let side = n_max as usize;
        let mut points = Vec::with_capacity(side * side);
        for n in 1..=n_max {
            for m in 1..=n_max {
                points.push(CounterexamplePoint { n, m });
            }
        }
        let len = points.len();
        let mut d = vec![0.0; len * len];
        for i in 0..len {
            for j in (i + 1)..len {
                let dist = counterexample_distance(points[i], points[j]);
                d[i * len + j] = dist;
                d[j * len + i] = dist;
            }
        }
        Ok(Self { n_max, points, d })
    }

    #[must_use]
    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[must_use]
    pub fn points(&self) -> &[CounterexamplePoint] {
        &self.points
    }

    #[must_use]
    pub fn point(&self, id: usize) -> CounterexamplePoint {
        self.points[id]
    }

    /// Oracle id of (n, m), if inside the truncation.
    #[must_use]
    pub fn id_of(&self, n: u32, m: u32) -> Option<usize> {
        (n >= 1 && n <= self.n_max && m >= 1 && m <= self.n_max)
            .then(|| ((n - 1) * self.n_max + (m - 1)) as usize)
    }

    /// All oracle ids.
    #[must_use]
    pub fn ids(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }
}

impl MetricOracle for CounterexampleSpace {
    fn dist(&self, a: usize, b: usize) -> f64 {
        self.d[a * self.points.len() + b]
    }
}

/// Control function of a quasisymmetric map.
#[derive(Debug, Clone)]
pub enum QsProfile {
    /// psi(t) = t.
    Linear,
    /// psi(t) = t^alpha, alpha > 0.
    Power { alpha: f64 },
    /// Piecewise-linear interpolation of tabulated values.
    Table { ts: Vec<f64>, vals: Vec<f64> },
}

impl QsProfile {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "power profile needs alpha > 0, got {alpha}"
            )));
        }
        Ok(Self::Power { alpha })
    }

    /// Validates the table at construction: strictly increasing
    /// positive abscissae, positive nondecreasing values.
    pub fn table(ts: Vec<f64>, vals: Vec<f64>) -> Result<Self> {
        if ts.len() != vals.len() || ts.len() < 2 {
            return Err(Error::InvalidProfile(format!(
                "table needs matching lists of at least 2 entries, got {} and {}",
                ts.len(),
                vals.len()
            )));
        }
        if ts[0] <= 0.0 || ts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidProfile(
                "table abscissae must be positive and strictly increasing".to_string(),
            ));
        }
        if vals[0] <= 0.0 || vals.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidProfile(
                "table values must be positive and nondecreasing".to_string(),
            ));
        }
        Ok(Self::Table { ts, vals })
    }

    /// Evaluates psi at t > 0.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "profiles are defined on (0, inf), queried at {t}"
            )));
        }
        match self {
            Self::Linear => Ok(t),
            Self::Power { alpha } => Ok(t.powf(*alpha)),
            Self::Table { ts, vals } => {
                if t < ts[0] || t > *ts.last().unwrap() {
                    return Err(Error::InvalidProfile(format!(
                        "query {t} outside the tabulated range [{}, {}]",
                        ts[0],
                        ts.last().unwrap()
                    )));
                }
                let hi = ts.partition_point(|&x| x < t).min(ts.len() - 1).max(1);
                let (t0, t1) = (ts[hi - 1], ts[hi]);
                let (v0, v1) = (vals[hi - 1], vals[hi]);
                Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
            }
        }
    }
}

/// Outcome of testing a star against an Assouad bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    /// The star is too wide: no psi-quasisymmetric image of its space
    /// satisfies the (c, s) covering bound.
    Contradicts,
    /// The star is consistent with the bound; a wider one is needed.
    Insufficient,
}

impl VerdictKind {
    #[must_use]
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Contradicts => "CONTRADICTS",
            Self::Insufficient => "INSUFFICIENT",
        }
    }
}

/// A fully audited obstruction verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Satellite count of the star under test.
    pub n: usize,
    /// The bound `c (4 psi(1) psi(1 + eta))^s` the count is compared to.
    pub threshold: f64,
    pub psi1: f64,
    pub psi1eta: f64,
    pub c: f64,
    pub s: f64,
    /// Smallest satellite count that would contradict; absent when the
    /// star already does.
    pub required_n: Option<usize>,
}

/// Tests an n-star against the covering bound `N(B(x,R), r) <= c (R/r)^s`.
///
/// A psi-quasisymmetric image of an (a, eta)-star keeps its n
/// satellites r-separated inside a ball of radius at most
/// `4 psi(1) psi(1 + eta) r`, so the image needs
/// `N >= n` at that radius ratio. If n exceeds the bound's value there,
/// no such image exists. The verdict depends only on (n, eta, psi, c, s);
/// it is invariant under rescaling all star distances.
pub fn qs_obstruction(
    star: &StarCertificate,
    psi: &QsProfile,
    c: f64,
    s: f64,
) -> Result<Verdict> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::arg(format!("need c > 0, got {c}")));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::arg(format!("need s >= 0, got {s}")));
    }
    let psi1 = psi.eval(1.0)?;
    let psi1eta = psi.eval(1.0 + star.eta())?;
    if psi1 > psi1eta {
        return Err(Error::InvalidProfile(format!(
            "profile decreases between 1 and {}: {psi1} > {psi1eta}",
            1.0 + star.eta()
        )));
    }
    let threshold = c * (4.0 * psi1 * psi1eta).powf(s);
    let n = star.n();
    let kind = if (n as f64) > threshold {
        VerdictKind::Contradicts
    } else {
        VerdictKind::Insufficient
    };
    let required_n = match kind {
        VerdictKind::Contradicts => None,
        VerdictKind::Insufficient => {
            let need = threshold.floor() + 1.0;
            Some(if need >= usize::MAX as f64 {
                usize::MAX
            } else {
                need as usize
            })
        }
    };
    Ok(Verdict {
        kind,
        n,
        threshold,
        psi1,
        psi1eta,
        c,
        s,
        required_n,
    })
}

/// Random probe for the doubling property: max over trials of the
/// half-radius cover count of B(center, r).
///
/// Each trial draws a center uniformly from `points` and r uniformly
/// from that center's realized positive distances, so every occupied
/// scale is reachable. A sequence of probes whose maxima keep growing
/// as the space is refined is evidence against doubling; a doubling
/// space answers with a constant.
pub fn doubling_probe<O: MetricOracle + ?Sized>(
    points: &[usize],
    oracle: &O,
    trials: usize,
    seed: u64,
) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::arg("probing an empty point set".to_string()));
    }
    if trials < 1 {
        return Err(Error::arg("need at least one trial".to_string()));
    }
    let mut draws = DrawStream::new(seed, DOMAIN_PROBE);
    let mut worst = 1usize;
    for _ in 0..trials {
        let center = points[draws.next_index(points.len())];
        let dists: Vec<f64> = points
            .iter()
            .map(|&p| oracle.dist(center, p))
            .filter(|&d| d > 0.0)
            .collect();
        if dists.is_empty() {
            continue;
        }
        let r = dists[draws.next_index(dists.len())];
        let ball = collect_ball(points, oracle, center, r);
        worst = worst.max(greedy_cover(&ball, oracle, r / 2.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{DenseMetric, UniformGrid1d};
    use crate::stars::{generic_star_search, verify_star};

    fn cp(n: u32, m: u32) -> CounterexamplePoint {
        CounterexamplePoint::new(n, m).unwrap()
    }

    #[test]
    fn counterexample_distance_cases() {
        assert_eq!(counterexample_distance(cp(3, 1), cp(3, 2)), 0.125);
        assert_eq!(counterexample_distance(cp(3, 5), cp(3, 1)), 0.0);
        assert_eq!(counterexample_distance(cp(3, 5), cp(3, 4)), 0.0);
        assert_eq!(counterexample_distance(cp(3, 3), cp(3, 2)), 0.125);
        let expected = 2.0 * (0.25 + 1.0 / 9.0 + 0.0625);
        assert!((counterexample_distance(cp(2, 1), cp(4, 7)) - expected).abs() < 1e-15);
        assert_eq!(
            counterexample_distance(cp(2, 1), cp(4, 7)),
            counterexample_distance(cp(4, 7), cp(2, 1))
        );
        assert!(CounterexamplePoint::new(0, 1).is_err());
    }

    #[test]
    fn counterexample_is_a_pseudometric_up_to_six() {
        let space = CounterexampleSpace::new(6).unwrap();
        let n = space.len();
        for i in 0..n {
            assert_eq!(space.dist(i, i), 0.0);
            for j in 0..n {
                assert_eq!(space.dist(i, j), space.dist(j, i));
                for k in 0..n {
                    assert!(
                        space.dist(i, j) <= space.dist(i, k) + space.dist(k, j),
                        "triangle fails at {:?} {:?} {:?}",
                        space.point(i),
                        space.point(j),
                        space.point(k)
                    );
                }
            }
        }
    }

    #[test]
    fn column_ball_needs_n_covers() {
        let space = CounterexampleSpace::new(8).unwrap();
        let ids = space.ids();
        let center = space.id_of(5, 1).unwrap();
        let count =
            covering_number(&ids, &space, center, 2f64.powi(-5), 2f64.powi(-6)).unwrap();
        assert_eq!(count, 5);
    }

    #[test]
    fn covering_basics() {
        let g = UniformGrid1d::new(1024);
        let pts: Vec<usize> = (0..g.len()).collect();
        assert!(covering_number(&pts, &g, 512, 0.01, 0.25).is_err());
        assert!(covering_number(&pts, &g, 512, 0.25, 0.25).is_err());
        let n = covering_number(&pts, &g, 0, 0.25, 1.0 / 32.0).unwrap();
        assert!((8..=17).contains(&n), "greedy count {n} outside [8, 17]");

        // A restricted set of diameter below r/2 fits one ball.
        let two = DenseMetric::from_fn(2, |i, j| if i == j { 0.0 } else { 0.1 });
        assert_eq!(covering_number(&[0, 1], &two, 0, 1.0, 0.5).unwrap(), 1);
    }

    #[test]
    fn covering_is_monotone_in_both_radii() {
        let g = UniformGrid1d::new(257);
        let pts: Vec<usize> = (0..g.len()).collect();
        let space = CounterexampleSpace::new(10).unwrap();
        let ids = space.ids();
        let radii = [0.004, 0.01, 0.03, 0.09, 0.2, 0.5];
        for center in [0usize, 60, 93] {
            for (ri, &r_outer) in radii.iter().enumerate() {
                for &r_inner in &radii[..ri] {
                    let base = covering_number(&pts, &g, center, r_outer, r_inner).unwrap();
                    let coarser =
                        covering_number(&pts, &g, center, r_outer, r_inner * 1.7).unwrap();
                    assert!(coarser <= base);
                    let wider =
                        covering_number(&pts, &g, center, r_outer * 1.6, r_inner).unwrap();
                    assert!(wider >= base);

                    let cbase = covering_number(&ids, &space, center, r_outer, r_inner).unwrap();
                    let ccoarser =
                        covering_number(&ids, &space, center, r_outer, r_inner * 1.7).unwrap();
                    assert!(ccoarser <= cbase);
                    let cwider =
                        covering_number(&ids, &space, center, r_outer * 1.6, r_inner).unwrap();
                    assert!(cwider >= cbase);
                }
            }
        }
    }

    #[test]
    fn line_has_exponent_one() {
        let g = UniformGrid1d::new(1024);
        let pts: Vec<usize> = (0..g.len()).collect();
        let ratios = [4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 64.0, 128.0, 256.0];
        let pairs: Vec<(f64, f64)> = ratios.iter().map(|&q| (0.25, 0.25 / q)).collect();
        let report = assouad_estimate(&pts, &g, &pairs).unwrap();
        assert!(
            report.fitted_alpha >= 0.8 && report.fitted_alpha <= 1.3,
            "alpha = {}",
            report.fitted_alpha
        );
        assert!(!report.diverging);
        assert_eq!(report.samples.len(), pairs.len() * DEFAULT_CENTERS);
        for s in &report.samples {
            assert!(s.count >= 1);
        }
    }

    #[test]
    fn single_point_has_exponent_zero() {
        let d = DenseMetric::from_fn(1, |_, _| 0.0);
        let pairs: Vec<(f64, f64)> = (0..10).map(|k| (1.0, 0.005 / (k + 1) as f64)).collect();
        let report = assouad_estimate(&[0], &d, &pairs).unwrap();
        assert_eq!(report.fitted_alpha, 0.0);
        assert!(assouad_estimate(&[0], &d, &pairs[..5]).is_err());
    }

    #[test]
    fn counterexample_exponents_rise_without_bound() {
        let space = CounterexampleSpace::new(24).unwrap();
        let ids = space.ids();
        // Stop the pairs one column short of the truncation: the sup at
        // scale 2^-n is taken at the head of column n + 1, whose classes
        // sit exactly one halving below the ball radius.
        let pairs: Vec<(f64, f64)> =
            (8..=23).map(|n| (2f64.powi(-n), 2f64.powi(-n - 1))).collect();
        let centers: Vec<usize> = (8..=24).map(|n| space.id_of(n, 1).unwrap()).collect();
        let report = assouad_estimate_with_centers(&ids, &space, &pairs, &centers).unwrap();
        assert!(report.diverging, "expected per-scale exponents to keep rising");
        assert!(report.fitted_alpha.is_finite());
        // Sup covering count at scale 2^-n is exactly n + 1: column n + 1
        // has n + 1 classes, pairwise separated just above the greedy
        // radius 2^-(n+2), while column n + 2 collapses onto one ball.
        let mut per_scale: Vec<(f64, usize)> = pairs
            .iter()
            .map(|&(ro, ri)| {
                let sup = report
                    .samples
                    .iter()
                    .filter(|s| s.r_outer == ro && s.r_inner == ri)
                    .map(|s| s.count)
                    .max()
                    .unwrap();
                (ro, sup)
            })
            .collect();
        per_scale.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (k, &(_, sup)) in per_scale.iter().enumerate() {
            assert_eq!(sup, k + 9);
        }
    }

    #[test]
    fn no_wide_stars_in_the_counterexample_space() {
        let space = CounterexampleSpace::new(10).unwrap();
        let ids = space.ids();
        for n in [6usize, 8] {
            for (a, eta) in [(2.0, 0.4), (2.5, 0.3), (3.0, 0.6)] {
                assert!(generic_star_search(&space, &ids, n, a, eta).unwrap().is_none());
            }
        }
    }

    fn wide_star(n: usize) -> StarCertificate {
        let d = DenseMetric::from_fn(n + 1, |i, j| {
            if i == j {
                0.0
            } else if i == 0 || j == 0 {
                1.0
            } else {
                2.5
            }
        });
        let sats: Vec<usize> = (1..=n).collect();
        verify_star(&d, 0, &sats, 3.0, 2.0 / 3.0).unwrap().unwrap()
    }

    #[test]
    fn obstruction_threshold_at_linear_profile() {
        // c = 1, s = 2, eta = 2/3: threshold (4 * 5/3)^2 = 400/9.
        let psi = QsProfile::Linear;
        let v45 = qs_obstruction(&wide_star(45), &psi, 1.0, 2.0).unwrap();
        assert_eq!(v45.kind, VerdictKind::Contradicts);
        assert!((v45.threshold - 400.0 / 9.0).abs() < 1e-12);
        assert_eq!(v45.required_n, None);

        let v44 = qs_obstruction(&wide_star(44), &psi, 1.0, 2.0).unwrap();
        assert_eq!(v44.kind, VerdictKind::Insufficient);
        assert_eq!(v44.required_n, Some(45));

        let degenerate = qs_obstruction(&wide_star(3), &psi, 2.5, 0.0).unwrap();
        assert!((degenerate.threshold - 2.5).abs() < 1e-15);
        assert_eq!(degenerate.kind, VerdictKind::Contradicts);
    }

    #[test]
    fn obstruction_profiles_and_errors() {
        let star = wide_star(10);
        assert!(qs_obstruction(&star, &QsProfile::Linear, 0.0, 2.0).is_err());
        assert!(qs_obstruction(&star, &QsProfile::Linear, 1.0, -1.0).is_err());
        assert!(QsProfile::power(0.0).is_err());
        assert!(QsProfile::table(vec![1.0, 0.5], vec![1.0, 2.0]).is_err());
        assert!(QsProfile::table(vec![0.5, 1.0], vec![2.0, 1.0]).is_err());

        let table = QsProfile::table(vec![0.5, 1.0, 2.0], vec![0.7, 1.0, 1.8]).unwrap();
        assert_eq!(table.eval(1.0).unwrap(), 1.0);
        assert!((table.eval(1.5).unwrap() - 1.4).abs() < 1e-15);
        assert!(table.eval(3.0).is_err());
        let v = qs_obstruction(&star, &table, 1.0, 1.0).unwrap();
        assert!(v.threshold > 0.0);

        let power = QsProfile::power(0.5).unwrap();
        let vp = qs_obstruction(&star, &power, 1.0, 2.0).unwrap();
        assert!((vp.psi1eta - (1.0 + star.eta()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn obstruction_is_scale_free() {
        // Same configuration at two scales: identical verdict fields.
        let mk = |scale: f64| {
            let d = DenseMetric::from_fn(11, |i, j| {
                if i == j {
                    0.0
                } else if i == 0 || j == 0 {
                    scale
                } else {
                    2.5 * scale
                }
            });
            let sats: Vec<usize> = (1..=10).collect();
            verify_star(&d, 0, &sats, 3.0, 2.0 / 3.0).unwrap().unwrap()
        };
        let a = qs_obstruction(&mk(1.0), &QsProfile::Linear, 1.0, 2.0).unwrap();
        let b = qs_obstruction(&mk(1e-6), &QsProfile::Linear, 1.0, 2.0).unwrap();
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.threshold, b.threshold);
        assert_eq!(a.required_n, b.required_n);
    }

    #[test]
    fn probe_bounded_on_the_line_unbounded_on_columns() {
        let g = UniformGrid1d::new(256);
        let pts: Vec<usize> = (0..g.len()).collect();
        let line_max = doubling_probe(&pts, &g, 2000, 7).unwrap();
        assert!(line_max <= 3, "line probe found {line_max}");

        let space = CounterexampleSpace::new(12).unwrap();
        let ids = space.ids();
        let col_max = doubling_probe(&ids, &space, 20_000, 7).unwrap();
        assert!(col_max >= 12, "column probe found only {col_max}");

        let single = DenseMetric::from_fn(1, |_, _| 0.0);
        assert_eq!(doubling_probe(&[0], &single, 5, 1).unwrap(), 1);
        assert!(doubling_probe(&[], &single, 5, 1).is_err());
    }
}
