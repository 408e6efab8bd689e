//! Random tree and map pseudometrics, approximate star certificates,
//! and Assouad dimension probes.
//!
//! The pipeline starts from a nonnegative excursion sampled on a uniform
//! grid ([`excursion`]): Brownian (via bridge and Vervaat transform),
//! the deterministic zig-zag family F_n, or a pinned slow-stairs
//! example. An excursion induces a tree pseudometric on grid points
//! ([`treemetric`]); Gaussian labels along the tree induce the cyclic
//! label pseudometric and its shortest-path closure, the map metric
//! ([`snake`]). On top of the metrics sit two kinds of geometric probes:
//! approximate n-star certificates extracted from zig-zag-shaped windows
//! ([`stars`]) and covering-number estimates of the Assouad exponent
//! with quasisymmetric-embedding obstruction verdicts ([`dimension`]).
//! [`io`] holds the CSV/JSON artifact formats.
//!
//! Everything derived from a seed is reproducible bit for bit: sampling
//! uses counter-mode streams ([`rng`]), increments are quantized to a
//! dyadic lattice so the metric identities hold exactly in floating
//! point, and all parallel reductions have canonical orderings.

pub mod dimension;
pub mod error;
pub mod excursion;
pub mod io;
pub mod metric;
pub mod rng;
pub mod snake;
pub mod stars;
pub mod treemetric;

pub use error::{Error, Result};
pub use excursion::{brownian_excursion, example51_grid, zigzag_grid, ExcursionGrid, ZigZagParams};
pub use metric::{MetricKind, MetricOracle};
pub use snake::{map_metric, simulate_labels, MapMetric, SampleStrategy, SnakeLabels};
pub use stars::{scan_windows, star_from_window, verify_star, StarCertificate, WindowMatch};
pub use treemetric::TreeMetric;
