//! Deterministic pseudo-random numbers for initial data and mesh perturbation.
//!
//! The generator is SplitMix64 (Steele, Lea, Flood 2014): state advances by
//! the odd constant `0x9E3779B97F4A7C15` and the output is finalized with two
//! xor-shift-multiply rounds (`0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`).
//! Doubles in `[0, 1)` take the top 53 bits. The algorithm is spelled out here
//! so runs reproduce bit-for-bit across platforms and languages.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}
