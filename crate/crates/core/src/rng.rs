//! Deterministic random streams.
//!
//! Every source of randomness in the generator is a [`RngStream`] derived
//! from `(seed, domain_tag, index)`. Streams for distinct tags or indices are
//! independent, and the same triple always yields the same sequence, which is
//! what makes whole runs reproducible regardless of worker count: each
//! entity, pattern, or subsystem draws only from its own stream.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// An independent deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha12Rng,
}

/// Derive the stream for `(seed, domain_tag, index)`.
pub fn rng_stream(seed: u64, domain_tag: &str, index: u64) -> RngStream {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update([0x1f]); // separator so ("ab",1) and ("a",b1...) cannot collide
    h.update(domain_tag.as_bytes());
    h.update([0x1f]);
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    RngStream {
        inner: ChaCha12Rng::from_seed(key),
    }
}

impl RngStream {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[lo, hi)`.
    pub fn range_u64(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo < hi);
        self.inner.random_range(lo..hi)
    }

    pub fn range_usize(&mut self, lo: usize, hi: usize) -> usize {
        self.range_u64(lo as u64, hi as u64) as usize
    }

    /// Uniform float in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.unit() * (hi - lo)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Exponential with the given mean (inverse-CDF).
    pub fn exp(&mut self, mean: f64) -> f64 {
        debug_assert!(mean > 0.0);
        -mean * (1.0 - self.unit()).ln()
    }

    /// Standard normal via `rand_distr`.
    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        let d = rand_distr::Normal::new(mean, std_dev).expect("valid normal parameters");
        self.inner.sample(d)
    }

    /// Log-normal with the given underlying mu/sigma.
    pub fn log_normal(&mut self, mu: f64, sigma: f64) -> f64 {
        let d = rand_distr::LogNormal::new(mu, sigma).expect("valid log-normal parameters");
        self.inner.sample(d)
    }

    /// Poisson count for the given mean.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let d = rand_distr::Poisson::new(mean).expect("valid poisson mean");
        self.inner.sample(d) as u64
    }

    /// Index drawn from cumulative weights (linear scan; weight lists here
    /// are short). `cum` must be nondecreasing with a positive last element.
    pub fn pick_cumulative(&mut self, cum: &[f64]) -> usize {
        debug_assert!(!cum.is_empty());
        let total = *cum.last().unwrap();
        let x = self.unit() * total;
        match cum.iter().position(|&c| x < c) {
            Some(i) => i,
            None => cum.len() - 1,
        }
    }

    /// Split `total` into `parts` nonnegative integers that sum exactly to
    /// `total`, with a symmetric random simplex (Dirichlet(1)) shape.
    pub fn simplex_split(&mut self, total: i64, parts: usize) -> Vec<i64> {
        assert!(parts > 0);
        if parts == 1 {
            return vec![total];
        }
        let draws: Vec<f64> = (0..parts).map(|_| self.exp(1.0).max(1e-12)).collect();
        let sum: f64 = draws.iter().sum();
        largest_remainder_round(total, &draws.iter().map(|d| d / sum).collect::<Vec<_>>())
    }

    /// Access the raw generator for `rand` adaptors.
    pub fn raw(&mut self) -> &mut ChaCha12Rng {
        &mut self.inner
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

/// Apportion `total` across `fractions` (which sum to ~1) so the integer
/// parts sum exactly to `total`.
pub fn largest_remainder_round(total: i64, fractions: &[f64]) -> Vec<i64> {
    let mut parts: Vec<i64> = Vec::with_capacity(fractions.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(fractions.len());
    let mut assigned = 0i64;
    for (i, f) in fractions.iter().enumerate() {
        let exact = total as f64 * f;
        let floor = exact.floor() as i64;
        parts.push(floor);
        assigned += floor;
        remainders.push((i, exact - floor as f64));
    }
    // Deterministic ordering: remainder desc, then index asc.
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut leftover = total - assigned;
    let mut k = 0;
    while leftover > 0 {
        parts[remainders[k % remainders.len()].0] += 1;
        leftover -= 1;
        k += 1;
    }
    parts
}

/// Weighted index with precomputed cumulative sums, for repeated draws
/// against a fixed weight vector (merchant and counterparty selection).
#[derive(Debug, Clone)]
pub struct WeightedPicker {
    cum: Vec<f64>,
}

impl WeightedPicker {
    pub fn new(weights: impl IntoIterator<Item = f64>) -> Self {
        let mut cum = Vec::new();
        let mut acc = 0.0;
        for w in weights {
            acc += w.max(0.0);
            cum.push(acc);
        }
        assert!(
            !cum.is_empty() && *cum.last().unwrap() > 0.0,
            "weighted picker needs positive total weight"
        );
        Self { cum }
    }

    pub fn pick(&self, stream: &mut RngStream) -> usize {
        let x = stream.unit() * self.cum.last().unwrap();
        self.cum.partition_point(|&c| c <= x).min(self.cum.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.cum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum.is_empty()
    }
}
