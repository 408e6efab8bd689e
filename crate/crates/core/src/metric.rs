//! Metric oracle abstraction shared by the star and dimension machinery.

/// Which geometry a distance oracle answers for. Report metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Tree pseudometric of an excursion grid.
    Tree,
    /// Shortest-path closure over snake labels.
    Map,
    /// Anything else (test fixtures, the counterexample space).
    Generic,
}

impl MetricKind {
    #[must_use]
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Tree => "tree",
            MetricKind::Map => "map",
            MetricKind::Generic => "generic",
        }
    }
}

/// A pseudometric answered point-id by point-id.
///
/// Implementations must be symmetric with zero diagonal; callers are
/// allowed to rely on both without re-checking. Ids are whatever the
/// implementation says they are (grid indices, subsample positions, rows
/// of a fixture matrix).
pub trait MetricOracle: Sync {
    fn dist(&self, a: usize, b: usize) -> f64;

    fn kind(&self) -> MetricKind {
        MetricKind::Generic
    }
}

/// Dense symmetric matrix fixture.
#[derive(Debug, Clone)]
pub struct DenseMetric {
    n: usize,
    d: Vec<f64>,
}

impl DenseMetric {
    /// Builds from a symmetric distance function on `0..n`.
    pub fn from_fn<F: Fn(usize, usize) -> f64>(n: usize, f: F) -> Self {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = f(i, j);
            }
        }
        Self { n, d }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.n
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl MetricOracle for DenseMetric {
    fn dist(&self, a: usize, b: usize) -> f64 {
        self.d[a * self.n + b]
    }
}

/// `n` evenly spaced points on `[0, 1]` with the line metric.
#[derive(Debug, Clone, Copy)]
pub struct UniformGrid1d {
    n: usize,
}

impl UniformGrid1d {
    /// Needs at least 2 points.
    #[must_use]
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        Self { n }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.n
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of point `i`.
    #[must_use]
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 / (self.n - 1) as f64
    }
}

impl MetricOracle for UniformGrid1d {
    fn dist(&self, a: usize, b: usize) -> f64 {
        (self.coord(a) - self.coord(b)).abs()
    }
}
