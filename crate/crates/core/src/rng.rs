//! Counter-based deterministic random streams.
//!
//! Every random quantity in this crate is a pure function of
//! `(seed, domain, counter)`. The generator is the splitmix64 output
//! function applied to a keyed affine counter walk:
//!
//! ```text
//! raw(i) = mix64(key + i * 0x9E3779B97F4A7C15)      key = mix64(seed ^ mix64(domain))
//! ```
//!
//! where `mix64` is the splitmix64 finalizer (Steele, Lea, Flood 2014).
//! Because `raw(i)` needs no state besides the key, any index can be
//! produced out of order or in parallel, and a fixed `(seed, domain)`
//! reproduces the same values bit for bit on every run.
//!
//! Uniforms take the top 53 bits of `raw` and live in `(0, 1]` (the open
//! end at zero keeps `ln` finite). Standard normals are Box-Muller pairs
//! built from the uniforms at counters `2i` and `2i + 1`.
//!
//! Domains separate logical streams that share a user seed, so e.g. the
//! Wiener increments and the snake label increments of one run never
//! overlap.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream of Wiener increments.
pub const DOMAIN_WIENER: u64 = 0x5749_454e_4552_0001;
/// Stream of snake label increments.
pub const DOMAIN_SNAKE: u64 = 0x534e_414b_4531_0001;
/// Stream backing randomized probes (doubling probe draws).
pub const DOMAIN_PROBE: u64 = 0x5052_4f42_4531_0001;

/// splitmix64 finalizer: a bijective avalanche mix on 64 bits.
#[inline]
#[must_use]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed counter stream. Copy-cheap; hand it around by value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterStream {
    key: u64,
}

impl CounterStream {
    #[must_use]
    pub fn new(seed: u64, domain: u64) -> Self {
        Self {
            key: mix64(seed ^ mix64(domain)),
        }
    }

    /// Raw 64 random bits at `index`.
    #[inline]
    #[must_use]
    pub fn raw(&self, index: u64) -> u64 {
        mix64(self.key.wrapping_add(index.wrapping_mul(GOLDEN)))
    }

    /// Uniform variate in `(0, 1]` at `index`.
    #[inline]
    #[must_use]
    pub fn uniform(&self, index: u64) -> f64 {
        // Top 53 bits give a uniform on [0, 1 - 2^-53]; flipping the end
        // keeps zero out so ln(u) below stays finite.
        let u = (self.raw(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        1.0 - u
    }

    /// Standard normal variate at `index`, via Box-Muller on the uniforms
    /// at counters `2 * index` and `2 * index + 1`.
    ///
    /// The magnitude is bounded by `sqrt(-2 ln 2^-53)` which is about 8.6,
    /// so no special casing for infinities is needed.
    #[inline]
    #[must_use]
    pub fn standard_normal(&self, index: u64) -> f64 {
        let u1 = self.uniform(2 * index);
        let u2 = self.uniform(2 * index + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Sequential adapter over a [`CounterStream`] for consumers that draw an
/// input-dependent number of variates (the snake walk, random probes).
///
/// Each logical draw owns the raw counter pair `{2i, 2i + 1}`, whether it
/// needs one word or two, so normal and uniform draws can interleave
/// without ever touching the same raw output.
#[derive(Debug, Clone)]
pub struct DrawStream {
    stream: CounterStream,
    next: u64,
}

impl DrawStream {
    #[must_use]
    pub fn new(seed: u64, domain: u64) -> Self {
        Self {
            stream: CounterStream::new(seed, domain),
            next: 0,
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        let i = self.next;
        self.next += 1;
        self.stream.standard_normal(i)
    }

    pub fn next_uniform(&mut self) -> f64 {
        let i = self.next;
        self.next += 1;
        self.stream.uniform(2 * i)
    }

    /// Uniform draw from `0..bound` by scaling the high bits of a raw word;
    /// the bias at 64 bits is far below anything observable here.
    pub fn next_index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        let i = self.next;
        self.next += 1;
        ((self.stream.raw(2 * i) as u128 * bound as u128) >> 64) as usize
    }
}
