//! Counter-based randomness keyed by (seed, step, coordinate).
//!
//! Draws come from ChaCha8 with the stream id set to the step and the word
//! position set from the coordinate, so any (step, coordinate) cell can be
//! regenerated in isolation and results never depend on call order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved per coordinate (two u64 draws).
const LANE_WORDS: u128 = 4;
/// Separate purposes live in disjoint regions of the keystream.
const PURPOSE_SHIFT: u32 = 48;

#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    base: ChaCha8Rng,
}

/// What a draw is used for; distinct purposes never share keystream words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Noise = 0,
    Aux = 1,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, base: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sequential reader positioned at `coordinate` of `step`.
    pub fn lanes(&self, purpose: Purpose, step: u64, coordinate: u64) -> Lanes {
        let mut rng = self.base.clone();
        rng.set_stream(step);
        rng.set_word_pos(((purpose as u128) << PURPOSE_SHIFT) + LANE_WORDS * coordinate as u128);
        Lanes { rng }
    }

    /// n iid uniforms in [0, 1), one per coordinate.
    pub fn uniforms(&self, purpose: Purpose, step: u64, n: usize) -> Vec<f64> {
        let mut lanes = self.lanes(purpose, step, 0);
        (0..n).map(|_| lanes.next_pair().0).collect()
    }

    /// n iid standard normals, one per coordinate.
    pub fn normals(&self, purpose: Purpose, step: u64, n: usize) -> Vec<f64> {
        let mut lanes = self.lanes(purpose, step, 0);
        (0..n).map(|_| lanes.next_normal()).collect()
    }
}

/// Reads whole lanes; each call consumes exactly one coordinate.
pub struct Lanes {
    rng: ChaCha8Rng,
}

impl Lanes {
    /// Two uniforms in [0, 1) from this lane.
    pub fn next_pair(&mut self) -> (f64, f64) {
        let a = to_unit(self.rng.next_u64());
        let b = to_unit(self.rng.next_u64());
        (a, b)
    }

    /// Box-Muller normal from one lane.
    pub fn next_normal(&mut self) -> f64 {
        let (u1, u2) = self.next_pair();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        r * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

fn to_unit(v: u64) -> f64 {
    (v >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Ordinary seeded generator for auxiliary Monte-Carlo work.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform vector in [lo, hi)^n from an ordinary generator.
pub fn uniform_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}
