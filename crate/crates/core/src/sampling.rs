//! Hidden-variable sampling.
//!
//! The hidden variable λ of the model is the tuple of four input phases. Each
//! tuple is a pure function of `(master_seed, sample_index)`: sample `i` reads
//! ChaCha8 keystream block `i` under a key derived from the master seed, so
//! any partition of the index range across workers yields the same phases.

use core::f64::consts::TAU;
// f64 math without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::field::{FieldState, Stage};

/// Amplitude of every seed mode: half a photon of intensity.
pub const SEED_AMPLITUDE: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// u32 words per ChaCha block.
const WORDS_PER_BLOCK: u128 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedSpec {
    pub master_seed: u64,
    pub sample_index: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, sample_index: u64) -> Self {
        Self {
            master_seed,
            sample_index,
        }
    }
}

/// The four input phases `(δ₁, δ₂, δ₃, δ₄)`, each in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HiddenPhases {
    pub delta: [f64; 4],
}

/// Map 64 random bits to a uniform angle in `[0, 2π)` with 53-bit resolution.
#[inline]
pub fn unit_angle(bits: u64) -> f64 {
    let u = (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let theta = u * TAU;
    if theta >= TAU {
        0.0
    } else {
        theta
    }
}

/// Map 64 random bits to a uniform double in `[0, 1)`.
#[inline]
pub fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential reader over the counter-keyed keystream.
///
/// `block(i)` always yields the same eight words for a given master seed; the
/// reader only avoids re-keying the cipher for consecutive indices.
#[derive(Clone, Debug)]
pub struct CounterStream {
    rng: ChaCha8Rng,
    next_index: u64,
}

impl CounterStream {
    pub fn new(master_seed: u64, start_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_word_pos(start_index as u128 * WORDS_PER_BLOCK);
        Self {
            rng,
            next_index: start_index,
        }
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// The eight 64-bit words of the current block; advances by one index.
    #[inline]
    pub fn next_block(&mut self) -> [u64; 8] {
        self.next_index = self.next_index.wrapping_add(1);
        core::array::from_fn(|_| self.rng.next_u64())
    }

    #[inline]
    pub fn next_phases(&mut self) -> HiddenPhases {
        let w = self.next_block();
        HiddenPhases {
            delta: [unit_angle(w[0]), unit_angle(w[1]), unit_angle(w[2]), unit_angle(w[3])],
        }
    }
}

/// Phases for one `(master_seed, sample_index)` pair.
pub fn sample_phases(seed: SeedSpec) -> HiddenPhases {
    CounterStream::new(seed.master_seed, seed.sample_index).next_phases()
}

/// Initial field with every mode at amplitude √0.5 and phase `δᵢ`.
pub fn make_input(phases: &HiddenPhases) -> FieldState {
    FieldState::new(
        phases.delta.map(|d| {
            let (s, c) = d.sin_cos();
            Complex64::new(SEED_AMPLITUDE * c, SEED_AMPLITUDE * s)
        }),
        Stage::Initial,
    )
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for sub-experiment `index` within `domain` (sweep point, run,
/// toy model, ...). Distinct domains never share seeds by construction of the
/// tag constants, and the map is a pure function of its arguments.
pub fn derive_seed(master_seed: u64, domain: SeedDomain, index: u64) -> u64 {
    let tag = domain as u64;
    mix64(master_seed ^ mix64(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ mix64(index)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum SeedDomain {
    SweepPoint = 1,
    Run = 2,
    RandomAlpha = 3,
    ChshMember = 4,
    CoinToy = 5,
    Polarizer = 6,
}
