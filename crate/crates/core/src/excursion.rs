//! Excursion grids and their samplers.
//!
//! An excursion is a nonnegative function on `[0, 1]` vanishing at both
//! ends. We work with uniform grids: `n_cells + 1` samples at
//! `t_i = i / n_cells`, no interpolation anywhere. Grids come from three
//! places:
//!
//! * Brownian sampling: a Wiener walk `W` with Gaussian increments of
//!   variance `1 / n_cells`, turned into a bridge
//!   `B_i = W_i - (i / n) W_n`, then into an excursion by the Vervaat
//!   rotation (cut the bridge at its minimum and swap the halves).
//! * Deterministic profiles: the zigzag family `F_n` and the slow-stairs
//!   example [`example51_eval`].
//! * Arbitrary callables via [`grid_from_function`].
//!
//! # Exactness
//!
//! Wiener increments are quantized to the `2^-26` lattice as the last step
//! of the sampling transform. On a power-of-two grid every derived value
//! (bridge, rotation, tree distances downstream) is then an exact multiple
//! of a power of two with well under 53 mantissa bits, so identities such
//! as the triangle inequality hold in real arithmetic rather than up to
//! rounding. The statistical cost is a relative variance distortion around
//! `1e-17`, far below Monte Carlo resolution. The quantization is part of
//! the documented sampler contract, not an implementation detail: a given
//! `(n_cells, seed)` pair denotes one exact sequence of lattice points.

use crate::error::{Error, Result};
use crate::rng::{CounterStream, DOMAIN_WIENER};

/// Absolute slack allowed when clamping sampled endpoint values to zero.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Increment lattice spacing used by [`sample_wiener`], `2^-26`.
pub const INCREMENT_QUANTUM: f64 = 1.0 / (1u64 << 26) as f64;

/// Where a grid's values came from. Carried for reporting only; no
/// numerical behavior depends on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Vervaat excursion of a sampled Brownian bridge.
    Brownian { seed: u64 },
    /// Zigzag profile with `n` teeth.
    ZigZag { n: u32 },
    /// The slow-stairs example, truncated after `terms` staircase levels.
    Example51 { terms: u32 },
    /// Sampled from a caller-supplied function.
    Function,
    /// Parsed from a CSV file.
    File,
}

/// A validated excursion on a uniform grid.
///
/// Invariants, enforced at construction: at least 2 cells, all values
/// finite and nonnegative, both endpoint values exactly `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionGrid {
    n_cells: usize,
    values: Vec<f64>,
    provenance: Provenance,
}

impl ExcursionGrid {
    /// Validates `values` (length `n_cells + 1`) and wraps them.
    pub fn new(mut values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::arg(format!(
                "excursion grid needs at least 2 cells, got {} samples",
                values.len()
            )));
        }
        let n = values.len() - 1;
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidExcursion {
                    index: i,
                    reason: format!("value {v} is not finite"),
                });
            }
            if *v < 0.0 {
                return Err(Error::InvalidExcursion {
                    index: i,
                    reason: format!("value {v} is negative"),
                });
            }
            if *v == 0.0 {
                // Canonicalize -0.0 so formatting is byte-stable.
                *v = 0.0;
            }
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidExcursion {
                index: 0,
                reason: format!("endpoint value {} must be exactly 0", values[0]),
            });
        }
        if values[n] != 0.0 {
            return Err(Error::InvalidExcursion {
                index: n,
                reason: format!("endpoint value {} must be exactly 0", values[n]),
            });
        }
        Ok(Self {
            n_cells: n,
            values,
            provenance,
        })
    }

    #[must_use]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Grid values, `n_cells + 1` of them.
    #[must_use]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Time coordinate of grid index `i`.
    #[must_use]
    pub fn t(&self, i: usize) -> f64 {
        i as f64 / self.n_cells as f64
    }

    #[must_use]
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub(crate) fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

#[inline]
fn quantize_increment(x: f64) -> f64 {
    // x * 2^26 is exact (pure exponent shift), round() is exact, and the
    // final scaling is exact again, so the result is the nearest lattice
    // point with ties away from zero.
    (x * (1u64 << 26) as f64).round() * INCREMENT_QUANTUM
}

/// Samples a Wiener walk on `n_cells + 1` grid points.
///
/// `W_0 = 0` and `W_{i+1} = W_i + q(sigma * g_i)` where
/// `sigma = sqrt(1 / n_cells)`, `g_i` is the standard normal of the
/// counter stream keyed by `(seed, i)`, and `q` rounds to the `2^-26`
/// lattice (see the module notes). Increments are independent across `i`
/// and across seeds, and any increment can be regenerated in isolation.
pub fn sample_wiener(n_cells: usize, seed: u64) -> Result<Vec<f64>> {
    if n_cells < 2 {
        return Err(Error::arg(format!("n_cells must be at least 2, got {n_cells}")));
    }
    let stream = CounterStream::new(seed, DOMAIN_WIENER);
    let sigma = (1.0 / n_cells as f64).sqrt();
    let mut w = Vec::with_capacity(n_cells + 1);
    let mut acc = 0.0;
    w.push(acc);
    for i in 0..n_cells {
        acc += quantize_increment(sigma * stream.standard_normal(i as u64));
        w.push(acc);
    }
    Ok(w)
}

/// Pins a walk to zero at the right endpoint: `B_i = W_i - (i / n) W_n`.
///
/// Requires `w[0] == 0` and at least 2 cells. `B_0` and `B_n` are exactly
/// zero by construction.
pub fn bridge_from_wiener(w: &[f64]) -> Result<Vec<f64>> {
    if w.len() < 3 {
        return Err(Error::arg(format!(
            "walk needs at least 2 cells, got {} samples",
            w.len()
        )));
    }
    if w[0] != 0.0 {
        return Err(Error::arg(format!("walk must start at 0, got {}", w[0])));
    }
    let n = w.len() - 1;
    let wn = w[n];
    Ok((0..=n)
        .map(|i| w[i] - (i as f64 / n as f64) * wn)
        .collect())
}

/// Vervaat rotation: cuts a bridge at its minimum and glues the halves in
/// the other order, producing an excursion.
///
/// The cut goes at the smallest index attaining the minimum. Output values
/// are `b[(j + i_min) mod n] - b[i_min]`, which are nonnegative exactly
/// (each is a rounded-to-nearest difference of a value and a smaller one)
/// and exactly zero at both ends.
pub fn vervaat_excursion(bridge: &[f64]) -> Result<ExcursionGrid> {
    if bridge.len() < 3 {
        return Err(Error::arg(format!(
            "bridge needs at least 2 cells, got {} samples",
            bridge.len()
        )));
    }
    let n = bridge.len() - 1;
    if bridge[0] != 0.0 || bridge[n] != 0.0 {
        return Err(Error::arg(format!(
            "not a bridge: endpoints {} and {}",
            bridge[0], bridge[n]
        )));
    }
    let mut i_min = 0;
    for (i, &v) in bridge.iter().enumerate().take(n) {
        // Strict inequality keeps the smallest index on ties.
        if v < bridge[i_min] {
            i_min = i;
        }
    }
    let low = bridge[i_min];
    let values = (0..=n).map(|j| bridge[(j + i_min) % n] - low).collect();
    ExcursionGrid::new(values, Provenance::Function)
}

/// Convenience pipeline: Wiener walk, bridge, Vervaat rotation.
pub fn brownian_excursion(n_cells: usize, seed: u64) -> Result<ExcursionGrid> {
    let w = sample_wiener(n_cells, seed)?;
    let b = bridge_from_wiener(&w)?;
    Ok(vervaat_excursion(&b)?.with_provenance(Provenance::Brownian { seed }))
}

/// Parameters of the zigzag profile family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZigZagParams {
    n: u32,
}

impl ZigZagParams {
    /// `n >= 1` teeth.
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("zigzag needs n >= 1"));
        }
        Ok(Self { n })
    }

    #[must_use]
    pub fn n(&self) -> u32 {
        self.n
    }
}

/// Evaluates the zigzag profile `F_n` at `x` in `[0, 1]`.
///
/// `F_n` rises from 0 with slope `2n`, then alternates descents of slope
/// `-n` and ascents of slope `n` between height 1 (reached at the odd
/// multiples of `1/(2n)`) and height 1/2 (reached at the interior
/// multiples of `1/n`), and finally drops back to 0 with slope `-2n`.
/// Piecewise:
///
/// ```text
/// 2nx                     on [0, 1/(2n))
/// -nx + (2k+3)/2          on [(2k+1)/(2n), (k+1)/n)      k = 0 .. n-2
/// nx - k - 1/2            on [(k+1)/n, (2k+3)/(2n))      k = 0 .. n-2
/// -2nx + 2n               on [(2n-1)/(2n), 1]
/// ```
///
/// At dyadic `x` with small denominator every branch evaluates exactly in
/// binary floating point.
///
/// # Panics
///
/// If `x` is outside `[0, 1]`.
#[must_use]
pub fn zigzag_eval(params: ZigZagParams, x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "zigzag argument {x} outside [0, 1]");
    let n = f64::from(params.n);
    let two_n = 2.0 * n;
    if x < 1.0 / two_n {
        return two_n * x;
    }
    if x >= (two_n - 1.0) / two_n {
        return -two_n * x + two_n;
    }
    // Half-cell index in [1, 2n-2]. Odd means a descent from the peak at
    // m/(2n), even means an ascent out of the valley at m/(2n). The clamp
    // only matters when 2n*x rounds across a breakpoint, where both
    // neighboring branches agree by continuity.
    let m = ((two_n * x).floor() as i64).clamp(1, 2 * i64::from(params.n) - 2);
    if m % 2 == 1 {
        let k = ((m - 1) / 2) as f64;
        -n * x + (2.0 * k + 3.0) / 2.0
    } else {
        let k = (m / 2 - 1) as f64;
        n * x - k - 0.5
    }
}

/// Samples `F_n` on a uniform grid.
pub fn zigzag_grid(params: ZigZagParams, n_cells: usize) -> Result<ExcursionGrid> {
    Ok(grid_from_function(|x| zigzag_eval(params, x), n_cells)?
        .with_provenance(Provenance::ZigZag { n: params.n }))
}

/// Default truncation depth for [`example51_eval`].
pub const EXAMPLE51_DEFAULT_TERMS: u32 = 20;

#[inline]
fn ex51_a(k: u32) -> f64 {
    0.5 - 2f64.powi(-(k as i32) - 1)
}

#[inline]
fn ex51_len(k: u32) -> f64 {
    2f64.powi(-(k as i32) - 3)
}

/// Measure of `[0, x]` left after removing the staircase windows
/// `[a_k, a_k + len_k]`, `k = 1..=terms`.
fn ex51_g1(x: f64, terms: u32) -> f64 {
    let mut removed = 0.0;
    for k in 1..=terms {
        let a = ex51_a(k);
        if x <= a {
            break; // a_k increases with k, nothing further overlaps [0, x]
        }
        removed += (x - a).min(ex51_len(k));
    }
    x - removed
}

/// Sawtooth overlay: on window `k` a triangle wave with `(k+1)^k` teeth of
/// slope 2, scaled to the window. Zero elsewhere.
fn ex51_s(x: f64, terms: u32) -> f64 {
    for k in 1..=terms {
        let a = ex51_a(k);
        if x < a {
            return 0.0;
        }
        let len = ex51_len(k);
        if x <= a + len {
            let u = (x - a) / len;
            // (k+1)^k overflows u64 for k >= 16; the f64 value is all we
            // need since the amplitude len/m is below 1e-20 there anyway.
            let m = (f64::from(k) + 1.0).powi(k as i32);
            let z = (m * u).fract();
            return len * (2.0 / m) * z.min(1.0 - z);
        }
    }
    0.0
}

/// The slow-stairs excursion with the default truncation depth.
#[must_use]
pub fn example51_eval(x: f64) -> f64 {
    example51_eval_terms(x, EXAMPLE51_DEFAULT_TERMS)
}

/// The slow-stairs excursion: a rising part whose derivative vanishes on a
/// sequence of windows accumulating at `x = 1/2` (each carrying a small
/// sawtooth), glued to a straight descent back to zero.
///
/// ```text
/// f(x) = g(x) + s(x)
/// g(x) = g1(x)                       for x < 1/2
/// g(x) = 2 g1(1/2) (1 - x)           for x >= 1/2
/// ```
///
/// where `g1` removes the window measure from `x` and `s` is the sawtooth
/// overlay. Truncating the window sequence after `terms` entries perturbs
/// values by less than `2^-(terms + 3)`.
///
/// # Panics
///
/// If `x` is outside `[0, 1]` or `terms == 0`.
#[must_use]
pub fn example51_eval_terms(x: f64, terms: u32) -> f64 {
    assert!((0.0..=1.0).contains(&x), "argument {x} outside [0, 1]");
    assert!(terms >= 1, "need at least one staircase term");
    let g = if x < 0.5 {
        ex51_g1(x, terms)
    } else {
        2.0 * ex51_g1(0.5, terms) * (1.0 - x)
    };
    g + ex51_s(x, terms)
}

/// Samples the slow-stairs excursion on a uniform grid.
pub fn example51_grid(terms: u32, n_cells: usize) -> Result<ExcursionGrid> {
    Ok(
        grid_from_function(|x| example51_eval_terms(x, terms), n_cells)?
            .with_provenance(Provenance::Example51 { terms }),
    )
}

/// Samples `f` at the grid points and validates the result.
///
/// Endpoint samples within [`ENDPOINT_TOL`] of zero are clamped to exactly
/// zero; anything further off, and any negative or non-finite interior
/// sample, is rejected with the offending index.
pub fn grid_from_function<F>(f: F, n_cells: usize) -> Result<ExcursionGrid>
where
    F: Fn(f64) -> f64,
{
    if n_cells < 2 {
        return Err(Error::arg(format!("n_cells must be at least 2, got {n_cells}")));
    }
    let mut values: Vec<f64> = (0..=n_cells)
        .map(|i| f(i as f64 / n_cells as f64))
        .collect();
    for i in [0, n_cells] {
        if values[i] != 0.0 && values[i].abs() < ENDPOINT_TOL {
            values[i] = 0.0;
        }
    }
    ExcursionGrid::new(values, Provenance::Function)
}
