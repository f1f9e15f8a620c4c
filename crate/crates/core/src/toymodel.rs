//! Two contrast models for postselection.
//!
//! The coin model: Alice and Bob each pick a setting bit and flip a fair
//! coin; a third party keeps or discards each trial by looking at all four
//! bits. Keeping trials selectively manufactures correlations, up to a perfect
//! one, between bits that are independent in the full ensemble.
//!
//! The polarizer model: a photon with hidden polarization θ meets an ideal
//! polarizer at angle `a` and passes with probability `cos²(θ − a)`. The pair
//! `{a, a + π/2}` is a complementary set whose detection probabilities sum to
//! one for every θ, so any two such sets sample θ identically.

use crate::error::ModelError;
use crate::sampling::{derive_seed, unit_angle, unit_interval, CounterStream, SeedDomain};
// f64 math without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

/// One coin trial. All four bits are 0 or 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoinTrial {
    pub alice_setting: u8,
    pub alice_outcome: u8,
    pub bob_setting: u8,
    pub bob_outcome: u8,
    pub kept: bool,
}

impl CoinTrial {
    /// Index of the joint bit pattern `(α, A, β, B)` in `0..16`.
    pub fn pattern(&self) -> usize {
        pattern_index(
            self.alice_setting,
            self.alice_outcome,
            self.bob_setting,
            self.bob_outcome,
        )
    }
}

pub const fn pattern_index(alpha: u8, a: u8, beta: u8, b: u8) -> usize {
    ((alpha as usize) << 3) | ((a as usize) << 2) | ((beta as usize) << 1) | b as usize
}

/// Patterns where the outcomes agree unless both settings are 1, in which
/// case they disagree. Keeping exactly these gives E = +1, +1, +1, −1 and
/// hence S = 4.
const CHSH_MAXIMAL_MASK: u16 = {
    let mut mask = 0u16;
    let mut p = 0;
    while p < 16 {
        let (alpha, a, beta, b) = ((p >> 3) & 1, (p >> 2) & 1, (p >> 1) & 1, p & 1);
        if (a ^ b) == (alpha & beta) {
            mask |= 1 << p;
        }
        p += 1;
    }
    mask
};

const SETTING_MATCHES_BOB_MASK: u16 = {
    let mut mask = 0u16;
    let mut p = 0;
    while p < 16 {
        if (p >> 3) & 1 == p & 1 {
            mask |= 1 << p;
        }
        p += 1;
    }
    mask
};

/// Which trials the selector keeps, as a set of joint bit patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum KeepRule {
    Always,
    /// Keep when Alice's setting equals Bob's outcome.
    SettingMatchesBobOutcome,
    /// Preset that drives the kept-subensemble CHSH value to 4.
    ChshMaximal,
    /// Bit `p` set keeps pattern `p` (see [`pattern_index`]).
    Patterns(u16),
}

impl KeepRule {
    pub const fn mask(&self) -> u16 {
        match self {
            KeepRule::Always => u16::MAX,
            KeepRule::SettingMatchesBobOutcome => SETTING_MATCHES_BOB_MASK,
            KeepRule::ChshMaximal => CHSH_MAXIMAL_MASK,
            KeepRule::Patterns(m) => *m,
        }
    }

    pub fn keeps(&self, pattern: usize) -> bool {
        self.mask() >> pattern & 1 == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelatorSet {
    /// `E(α,β)` for setting pairs `(0,0), (0,1), (1,0), (1,1)`; `None` when
    /// no trial with that pair is present.
    pub values: [Option<f64>; 4],
    pub std_errs: [Option<f64>; 4],
    /// `None` unless all four correlators are defined.
    pub s: Option<f64>,
}

impl CorrelatorSet {
    fn from_counts(counts: &[u64; 16]) -> Self {
        let mut values = [None; 4];
        let mut std_errs = [None; 4];
        for pair in 0..4 {
            let (alpha, beta) = ((pair >> 1) as u8, (pair & 1) as u8);
            let (mut same, mut total) = (0u64, 0u64);
            for a in 0..2u8 {
                for b in 0..2u8 {
                    let c = counts[pattern_index(alpha, a, beta, b)];
                    total += c;
                    if a == b {
                        same += c;
                    }
                }
            }
            if total > 0 {
                let e = (2.0 * same as f64 - total as f64) / total as f64;
                values[pair] = Some(e);
                std_errs[pair] = Some(((1.0 - e * e) / total as f64).sqrt());
            }
        }
        Self {
            values,
            std_errs,
            s: match values {
                [Some(a), Some(b), Some(c), Some(d)] => Some(a + b + c - d),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoinStats {
    pub n: u64,
    pub kept: u64,
    pub keep_rate: f64,
    /// Trial counts per joint pattern, before selection.
    pub pattern_counts: [u64; 16],
    pub p_setting_eq_bob_all: f64,
    pub p_setting_eq_bob_kept: f64,
    /// `P(B = 1 | α = 0)`, `P(B = 1 | α = 1)` over all trials.
    pub p_bob_given_setting_all: [Option<f64>; 2],
    /// Same, over kept trials (`None` when a setting never survives selection).
    pub p_bob_given_setting_kept: [Option<f64>; 2],
    pub correlators_all: CorrelatorSet,
    pub correlators_kept: CorrelatorSet,
}

fn trial_from_bits(bits: u64) -> [u8; 4] {
    [
        (bits & 1) as u8,
        (bits >> 1 & 1) as u8,
        (bits >> 2 & 1) as u8,
        (bits >> 3 & 1) as u8,
    ]
}

/// Trial `index` of the coin stream for `seed`; `[α, A, β, B]`.
pub fn coin_bits(seed: u64, index: u64) -> [u8; 4] {
    trial_from_bits(CounterStream::new(derive_seed(seed, SeedDomain::CoinToy, 0), index).next_block()[0])
}

pub fn run_coin_toy(n: u64, rule: KeepRule, seed: u64) -> Result<CoinStats, ModelError> {
    if n == 0 {
        return Err(ModelError::InvalidConfig("coin toy needs at least one trial"));
    }
    let mut counts = [0u64; 16];
    let mut stream = CounterStream::new(derive_seed(seed, SeedDomain::CoinToy, 0), 0);
    for _ in 0..n {
        let [alpha, a, beta, b] = trial_from_bits(stream.next_block()[0]);
        counts[pattern_index(alpha, a, beta, b)] += 1;
    }
    coin_stats_from_counts(counts, rule)
}

/// Statistics of a coin ensemble given its pattern histogram.
pub fn coin_stats_from_counts(counts: [u64; 16], rule: KeepRule) -> Result<CoinStats, ModelError> {
    let n: u64 = counts.iter().sum();
    let mut kept_counts = [0u64; 16];
    for (p, c) in counts.iter().enumerate() {
        if rule.keeps(p) {
            kept_counts[p] = *c;
        }
    }
    let kept: u64 = kept_counts.iter().sum();
    if kept == 0 {
        return Err(ModelError::EmptyKeptSet);
    }
    // Both histograms are non-empty here.
    let frac = |c: &[u64; 16], pred: &dyn Fn(usize) -> bool| -> f64 {
        let total: u64 = c.iter().sum();
        let hit: u64 = (0..16).filter(|&p| pred(p)).map(|p| c[p]).sum();
        hit as f64 / total as f64
    };
    let setting_eq_bob = |p: usize| (p >> 3) & 1 == p & 1;
    let bob_given = |c: &[u64; 16]| -> [Option<f64>; 2] {
        core::array::from_fn(|alpha| {
            let with: u64 = (0..16).filter(|p| p >> 3 == alpha).map(|p| c[p]).sum();
            let ones: u64 = (0..16).filter(|p| p >> 3 == alpha && p & 1 == 1).map(|p| c[p]).sum();
            (with > 0).then(|| ones as f64 / with as f64)
        })
    };
    Ok(CoinStats {
        n,
        kept,
        keep_rate: kept as f64 / n as f64,
        pattern_counts: counts,
        p_setting_eq_bob_all: frac(&counts, &setting_eq_bob),
        p_setting_eq_bob_kept: frac(&kept_counts, &setting_eq_bob),
        p_bob_given_setting_all: bob_given(&counts),
        p_bob_given_setting_kept: bob_given(&kept_counts),
        correlators_all: CorrelatorSet::from_counts(&counts),
        correlators_kept: CorrelatorSet::from_counts(&kept_counts),
    })
}

// ---------------------------------------------------------------------------
// Polarizer

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ThetaPrior {
    /// θ uniform on `[0, π)`.
    Uniform,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolarizerTrial {
    pub theta: f64,
    pub measurement_angle: f64,
    pub detected: bool,
}

/// Malus's law.
pub fn detection_probability(theta: f64, angle: f64) -> f64 {
    (theta - angle).cos().powi(2)
}

/// Draw a detection for hidden polarization `theta` from uniform `u ∈ [0, 1)`.
pub fn polarizer_trial(theta: f64, measurement_angle: f64, u: f64) -> PolarizerTrial {
    PolarizerTrial {
        theta,
        measurement_angle,
        detected: u < detection_probability(theta, measurement_angle),
    }
}

/// The two-member complementary set `{a, a + π/2}`.
pub fn polarizer_set(angle: f64) -> [f64; 2] {
    [angle, angle + core::f64::consts::FRAC_PI_2]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampledDetections {
    /// Detections per member of M, then per member of M′.
    pub member_detections: [u64; 4],
    /// Trials in which at least one member of M (resp. M′) fired.
    pub any_m: u64,
    pub any_m_prime: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolarizerReport {
    pub n: u64,
    pub angle_m: f64,
    pub angle_m_prime: f64,
    /// `max_θ |Σ_M p − Σ_M′ p|` over the sampled θ.
    pub max_abs_difference: f64,
    /// `max_θ max(|Σ_M p − 1|, |Σ_M′ p − 1|)`.
    pub max_deviation_from_one: f64,
    pub mean_sum_m: f64,
    pub mean_sum_m_prime: f64,
    /// Fraction of θ where exactly one of the two sets has nonzero total
    /// detection probability.
    pub disagreement_fraction: f64,
    pub sampled: Option<SampledDetections>,
}

pub fn run_polarizer_demo(
    n: u64,
    prior: ThetaPrior,
    angle_m: f64,
    angle_m_prime: f64,
    seed: u64,
    sampled: bool,
) -> Result<PolarizerReport, ModelError> {
    if n == 0 {
        return Err(ModelError::InvalidConfig("polarizer demo needs at least one sample"));
    }
    let set_m = polarizer_set(angle_m);
    let set_mp = polarizer_set(angle_m_prime);
    let mut stream = CounterStream::new(derive_seed(seed, SeedDomain::Polarizer, 0), 0);
    let (mut max_diff, mut max_dev, mut sum_m, mut sum_mp) = (0.0f64, 0.0f64, 0.0, 0.0);
    let mut disagree = 0u64;
    let mut det = SampledDetections::default();
    for _ in 0..n {
        let w = stream.next_block();
        let theta = match prior {
            ThetaPrior::Uniform => 0.5 * unit_angle(w[0]),
            ThetaPrior::Fixed(t) => t,
        };
        let pm: f64 = set_m.iter().map(|&a| detection_probability(theta, a)).sum();
        let pmp: f64 = set_mp.iter().map(|&a| detection_probability(theta, a)).sum();
        max_diff = max_diff.max((pm - pmp).abs());
        max_dev = max_dev.max((pm - 1.0).abs()).max((pmp - 1.0).abs());
        sum_m += pm;
        sum_mp += pmp;
        disagree += ((pm > 0.0) != (pmp > 0.0)) as u64;
        if sampled {
            let angles = [set_m[0], set_m[1], set_mp[0], set_mp[1]];
            let fired: [bool; 4] =
                core::array::from_fn(|k| polarizer_trial(theta, angles[k], unit_interval(w[1 + k])).detected);
            for (c, f) in det.member_detections.iter_mut().zip(fired) {
                *c += f as u64;
            }
            det.any_m += (fired[0] || fired[1]) as u64;
            det.any_m_prime += (fired[2] || fired[3]) as u64;
        }
    }
    Ok(PolarizerReport {
        n,
        angle_m,
        angle_m_prime,
        max_abs_difference: max_diff,
        max_deviation_from_one: max_dev,
        mean_sum_m: sum_m / n as f64,
        mean_sum_m_prime: sum_mp / n as f64,
        disagreement_fraction: disagree as f64 / n as f64,
        sampled: sampled.then_some(det),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_masks() {
        // α = B patterns: α bit (3) equals B bit (0).
        for p in 0..16 {
            assert_eq!(KeepRule::SettingMatchesBobOutcome.keeps(p), (p >> 3) & 1 == p & 1);
            assert!(KeepRule::Always.keeps(p));
        }
        assert_eq!(KeepRule::ChshMaximal.mask().count_ones(), 8);
        assert_eq!(KeepRule::Patterns(0b1).mask(), 1);
    }

    #[test]
    fn perfect_setting_outcome_correlation_after_selection() {
        let s = run_coin_toy(200_000, KeepRule::SettingMatchesBobOutcome, 7).unwrap();
        assert_eq!(s.p_setting_eq_bob_kept, 1.0);
        assert!((s.p_setting_eq_bob_all - 0.5).abs() < 4.0 * (0.25 / s.n as f64).sqrt());
        assert_eq!(s.p_bob_given_setting_kept, [Some(0.0), Some(1.0)]);
        for p in s.p_bob_given_setting_all {
            assert!((p.unwrap() - 0.5).abs() < 4.0 * (0.25 / (s.n as f64 / 2.0)).sqrt());
        }
        assert!((s.keep_rate - 0.5).abs() < 0.01);
    }

    #[test]
    fn unselected_coins_are_uncorrelated() {
        let s = run_coin_toy(400_000, KeepRule::Always, 3).unwrap();
        assert_eq!(s.kept, s.n);
        for k in 0..4 {
            let (e, se) = (
                s.correlators_all.values[k].unwrap(),
                s.correlators_all.std_errs[k].unwrap(),
            );
            assert!(e.abs() < 4.0 * se);
        }
        assert_eq!(s.correlators_all, s.correlators_kept);
    }

    #[test]
    fn chsh_preset_reaches_four() {
        let s = run_coin_toy(50_000, KeepRule::ChshMaximal, 1).unwrap();
        assert_eq!(s.correlators_kept.values, [1.0, 1.0, 1.0, -1.0].map(Some));
        assert_eq!(s.correlators_kept.s, Some(4.0));
        assert!(s.correlators_all.s.unwrap().abs() < 0.1);
    }

    #[test]
    fn empty_selection_is_an_error() {
        assert_eq!(
            run_coin_toy(100, KeepRule::Patterns(0), 0),
            Err(ModelError::EmptyKeptSet)
        );
        assert!(run_coin_toy(0, KeepRule::Always, 0).is_err());
    }

    #[test]
    fn coin_bits_match_stream() {
        let s = run_coin_toy(64, KeepRule::Always, 5).unwrap();
        let mut counts = [0u64; 16];
        for i in 0..64 {
            let [a, b, c, d] = coin_bits(5, i);
            counts[pattern_index(a, b, c, d)] += 1;
        }
        assert_eq!(counts, s.pattern_counts);
    }

    #[test]
    fn malus_pairs_are_complete() {
        for k in 0..1000 {
            let theta = 0.0123 * k as f64;
            let a = 0.77 - 0.031 * k as f64;
            let [m1, m2] = polarizer_set(a);
            let total = detection_probability(theta, m1) + detection_probability(theta, m2);
            assert!((total - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn polarizer_demo_satisfies_set_condition() {
        let r = run_polarizer_demo(100_000, ThetaPrior::Uniform, 0.0, 0.6, 9, true).unwrap();
        assert!(r.max_abs_difference <= 1e-12);
        assert!(r.max_deviation_from_one <= 1e-12);
        assert_eq!(r.disagreement_fraction, 0.0);
        let d = r.sampled.unwrap();
        // Each set fires 1 detection per trial on average.
        let sd = (r.n as f64).sqrt();
        let m: u64 = d.member_detections[..2].iter().sum();
        let mp: u64 = d.member_detections[2..].iter().sum();
        assert!((m as f64 - r.n as f64).abs() < 4.0 * sd);
        assert!((mp as f64 - r.n as f64).abs() < 4.0 * sd);

        let fixed = run_polarizer_demo(10, ThetaPrior::Fixed(0.3), 0.3, 1.0, 0, false).unwrap();
        assert!(fixed.sampled.is_none());
        assert!((fixed.mean_sum_m - 1.0).abs() < 1e-15);
    }
}
