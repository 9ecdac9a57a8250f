//! Seeded generator for random classifiers.
//!
//! The stream is SplitMix64 (state `s ← s + 0x9e3779b97f4a7c15`, output
//! mixed with the usual two multiply-xorshift rounds), seeded with the state
//! equal to the 64-bit seed. A uniform draw on `[0, 1)` is
//! `(next_u64 >> 11) · 2⁻⁵³`.

use std::sync::Arc;

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::classifiers::{Scene, TabulatedClassifier};
use crate::ext::ExtReal;

#[derive(Clone, Debug)]
pub struct SeededRng(SplitMix64);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(SplitMix64::from_seed(seed.to_le_bytes()))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// A classifier on `scene` with values `4u − 2`, one draw per point in scene order.
    pub fn classifier(&mut self, scene: Arc<Scene>) -> TabulatedClassifier {
        let values = (0..scene.len()).map(|_| ExtReal::Finite(self.uniform(-2.0, 2.0))).collect();
        TabulatedClassifier::new(scene, values).expect("one finite value per scene point")
    }
}
