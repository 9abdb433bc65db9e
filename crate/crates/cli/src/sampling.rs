//! Seeded sampling.
//!
//! The stream is SplitMix64: the state advances by `0x9e3779b97f4a7c15`
//! (wrapping) and each output is
//!
//! ```text
//! z = state
//! z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//! z ^ (z >> 31)
//! ```
//!
//! with the seed as the initial state. Uniform reals are `(z >> 11) · 2⁻⁵³`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use solenoid::nonwandering::GapSet;
use solenoid::{CircleMap, CirclePoint, Itinerary, Result};

pub struct Sampler {
    rng: SplitMix64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: SplitMix64::seed_from_u64(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n` by reduction modulo `n`.
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Uniform base point outside `avoid`, by rejection.
    pub fn base_point(&mut self, avoid: Option<&GapSet>) -> CirclePoint {
        loop {
            let t = CirclePoint::new(self.next_f64());
            if avoid.map_or(true, |set| !set.contains(t)) {
                return t;
            }
        }
    }

    /// A random base point and `depth` random preimage choices.
    pub fn branch(&mut self, base: &CircleMap, depth: usize, avoid: Option<&GapSet>) -> (CirclePoint, Vec<usize>) {
        let t0 = self.base_point(avoid);
        let choices = (0..depth).map(|_| self.below(base.degree() as usize)).collect();
        (t0, choices)
    }

    /// Random backward branch of length `depth` from a random base point.
    pub fn itinerary(&mut self, base: &CircleMap, depth: usize, avoid: Option<&GapSet>) -> Result<Itinerary> {
        let (t0, choices) = self.branch(base, depth, avoid);
        Itinerary::from_branch_choices(base, t0, &choices)
    }
}
