//! Post-processing of ensemble results.
//!
//! * cosine fit of the joint rate against `α + β`,
//! * complementary setting sets and the rate normalizations built on them,
//! * CHSH evaluation on complementary-set-normalized rates,
//! * hidden-variable overlap between two complementary sets, evaluated on a
//!   common λ stream so that only the settings change between members.

use alloc::vec::Vec;
use core::f64::consts::PI;
// f64 math without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::ModelError;
use crate::field::Settings;
use crate::montecarlo::{
    chunk_count, chunk_range, run_ensemble, EnsembleConfig, EnsembleResult, EnsembleStats, Executor,
};
use crate::sampling::{derive_seed, CounterStream, SeedDomain};

// ---------------------------------------------------------------------------
// Cosine fit

/// Minimum number of distinct phase sums accepted by [`fit_cosine`].
pub const MIN_FIT_POINTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub phase_sum: f64,
    pub p: f64,
    pub std_err: f64,
}

/// Result of fitting `p(x) = A·(2 + 2·cos x) + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveFit {
    pub amplitude: f64,
    /// Clamped at zero; see `raw_offset` for the unconstrained estimate.
    pub offset: f64,
    pub residual_rms: f64,
    pub amplitude_std_err: f64,
    pub offset_std_err: f64,
    pub raw_offset: f64,
    pub offset_clamped: bool,
    /// False when the unweighted fallback was used.
    pub weighted: bool,
}

impl CurveFit {
    pub fn eval(&self, phase_sum: f64) -> f64 {
        self.amplitude * cosine_basis(phase_sum) + self.offset
    }
}

#[inline]
pub fn cosine_basis(phase_sum: f64) -> f64 {
    2.0 + 2.0 * phase_sum.cos()
}

/// Weighted least squares over `(A, offset)` with inverse-variance weights.
///
/// Falls back to ordinary least squares, with parameter errors scaled by the
/// residual variance, when any point has a zero or non-finite standard error.
/// A negative offset is clamped to zero and `A` refitted with the offset held
/// there.
pub fn fit_cosine(curve: &[CurvePoint]) -> Result<CurveFit, ModelError> {
    let mut xs: Vec<f64> = curve.iter().map(|c| c.phase_sum).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() == 1 {
        return Err(ModelError::SingularFit);
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(ModelError::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: xs.len(),
        });
    }

    let weighted = curve.iter().all(|c| c.std_err.is_finite() && c.std_err > 0.0);
    let weight = |c: &CurvePoint| if weighted { c.std_err.powi(-2) } else { 1.0 };

    let (mut s, mut sf, mut sff, mut sy, mut sfy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for c in curve {
        let w = weight(c);
        let f = cosine_basis(c.phase_sum);
        s += w;
        sf += w * f;
        sff += w * f * f;
        sy += w * c.p;
        sfy += w * f * c.p;
    }
    let det = s * sff - sf * sf;
    if !(det > 1e-12 * s * sff) {
        return Err(ModelError::SingularFit);
    }

    let n = curve.len() as f64;
    let rss = |a: f64, off: f64| -> f64 {
        curve
            .iter()
            .map(|c| (c.p - a * cosine_basis(c.phase_sum) - off).powi(2))
            .sum()
    };

    let amplitude = (s * sfy - sf * sy) / det;
    let raw_offset = (sff * sy - sf * sfy) / det;

    let (amplitude, offset, mut var_a, mut var_off, dof) = if raw_offset < 0.0 {
        (sfy / sff, 0.0, 1.0 / sff, 0.0, n - 1.0)
    } else {
        (amplitude, raw_offset, s / det, sff / det, n - 2.0)
    };
    let residual = rss(amplitude, offset);
    if !weighted {
        let sigma2 = residual / dof;
        var_a *= sigma2;
        var_off *= sigma2;
    }
    Ok(CurveFit {
        amplitude,
        offset,
        residual_rms: (residual / n).sqrt(),
        amplitude_std_err: var_a.sqrt(),
        offset_std_err: var_off.sqrt(),
        raw_offset,
        offset_clamped: raw_offset < 0.0,
        weighted,
    })
}

/// Curve points from pooled sweep results. `phase_sums` supplies the
/// unreduced abscissae (so a point at 2π stays at 2π).
pub fn curve_points(results: &[EnsembleResult], phase_sums: &[f64]) -> Vec<CurvePoint> {
    results
        .iter()
        .zip(phase_sums)
        .map(|(r, &x)| CurvePoint {
            phase_sum: x,
            p: r.pooled.p_joint,
            std_err: r.pooled.std_err_joint,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Complementary sets and normalization

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComplementarySet {
    pub base: Settings,
    /// `[(α, β), (α+π, β), (α, β+π), (α+π, β+π)]`.
    pub members: [Settings; 4],
}

pub fn complementary_set(base: Settings) -> ComplementarySet {
    ComplementarySet {
        base,
        members: [base, base.shifted(PI, 0.0), base.shifted(0.0, PI), base.shifted(PI, PI)],
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalizedProbability {
    pub numerator_rate: f64,
    pub partition_z: f64,
    pub p: f64,
}

impl NormalizedProbability {
    /// `p = numerator / Z` for any choice of partition function.
    pub fn new(numerator_rate: f64, partition_z: f64) -> Result<Self, ModelError> {
        if !(partition_z > 0.0) || !partition_z.is_finite() {
            return Err(ModelError::UndefinedNormalization);
        }
        Ok(Self {
            numerator_rate,
            partition_z,
            p: numerator_rate / partition_z,
        })
    }
}

fn check_rates(rates: &[f64; 4]) -> Result<f64, ModelError> {
    if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(ModelError::InvalidConfig("rates must be finite and non-negative"));
    }
    let z: f64 = rates.iter().sum();
    if z > 0.0 {
        Ok(z)
    } else {
        Err(ModelError::UndefinedNormalization)
    }
}

/// Normalize member `which` of a complementary set by the sum of all four.
pub fn normalize_rates(rates: [f64; 4], which: usize) -> Result<NormalizedProbability, ModelError> {
    if which >= 4 {
        return Err(ModelError::InvalidMemberIndex(which));
    }
    let z = check_rates(&rates)?;
    NormalizedProbability::new(rates[which], z)
}

/// Sign of each complementary-set member in the correlator.
const CORRELATOR_SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

/// `E = [N(α,β) + N(α+π,β+π) − N(α+π,β) − N(α,β+π)] / Z`.
pub fn correlator(rates: [f64; 4]) -> Result<f64, ModelError> {
    let z = check_rates(&rates)?;
    Ok(rates.iter().zip(CORRELATOR_SIGNS).map(|(r, s)| r * s).sum::<f64>() / z)
}

/// Correlator and its delta-method standard error from independent binomial
/// member ensembles.
pub fn correlator_with_error(members: &[EnsembleStats; 4]) -> Result<(f64, f64), ModelError> {
    let rates = members.map(|m| m.p_joint);
    let e = correlator(rates)?;
    let z: f64 = rates.iter().sum();
    let var: f64 = members
        .iter()
        .zip(CORRELATOR_SIGNS)
        .map(|(m, sign)| ((sign - e) / z).powi(2) * m.std_err(m.p_joint).powi(2))
        .sum();
    Ok((e, var.sqrt()))
}

// ---------------------------------------------------------------------------
// CHSH

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChshQuad {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshQuad {
    pub const fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        Self { a, a_prime, b, b_prime }
    }

    /// Base settings in correlator order `(a,b), (a,b′), (a′,b), (a′,b′)`.
    pub fn pairs(&self) -> [Settings; 4] {
        [
            Settings::new(self.a, self.b),
            Settings::new(self.a, self.b_prime),
            Settings::new(self.a_prime, self.b),
            Settings::new(self.a_prime, self.b_prime),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChshResult {
    pub quad: ChshQuad,
    /// `E(a,b), E(a,b′), E(a′,b), E(a′,b′)`.
    pub correlators: [f64; 4],
    pub correlator_std_errs: [f64; 4],
    pub s: f64,
    pub s_std_err: f64,
}

fn chsh_combination(e: &[f64; 4]) -> f64 {
    e[0] + e[1] + e[2] - e[3]
}

/// CHSH from raw member rates, `rates[pair][member]`.
pub fn chsh_from_rates(quad: ChshQuad, rates: &[[f64; 4]; 4]) -> Result<ChshResult, ModelError> {
    let mut correlators = [0.0; 4];
    for (e, r) in correlators.iter_mut().zip(rates) {
        *e = correlator(*r)?;
    }
    Ok(ChshResult {
        quad,
        correlators,
        correlator_std_errs: [0.0; 4],
        s: chsh_combination(&correlators),
        s_std_err: 0.0,
    })
}

/// CHSH from sixteen member ensembles, `stats[pair][member]`, with
/// propagated binomial errors.
pub fn chsh_from_stats(quad: ChshQuad, stats: &[[EnsembleStats; 4]; 4]) -> Result<ChshResult, ModelError> {
    let mut correlators = [0.0; 4];
    let mut errs = [0.0; 4];
    for k in 0..4 {
        let (e, se) = correlator_with_error(&stats[k])?;
        correlators[k] = e;
        errs[k] = se;
    }
    Ok(ChshResult {
        quad,
        correlators,
        correlator_std_errs: errs,
        s: chsh_combination(&correlators),
        s_std_err: errs.iter().map(|e| e * e).sum::<f64>().sqrt(),
    })
}

/// Run the sixteen member ensembles of a CHSH quad and evaluate it. Member
/// `k` (pair-major) runs under `derive_seed(master, ChshMember, k)`.
pub fn chsh<E: Executor>(
    quad: ChshQuad,
    template: &EnsembleConfig,
    exec: &E,
) -> Result<(ChshResult, Vec<EnsembleResult>), ModelError> {
    let mut results = Vec::with_capacity(16);
    for (p, base) in quad.pairs().into_iter().enumerate() {
        for (m, s) in complementary_set(base).members.into_iter().enumerate() {
            let seed = derive_seed(template.master_seed, SeedDomain::ChshMember, (4 * p + m) as u64);
            let cfg = EnsembleConfig {
                record_lambdas: false,
                ..template.with_settings(s).with_seed(seed)
            };
            results.push(run_ensemble(&cfg, exec, None)?);
        }
    }
    let stats: [[EnsembleStats; 4]; 4] = core::array::from_fn(|p| core::array::from_fn(|m| results[4 * p + m].pooled));
    Ok((chsh_from_stats(quad, &stats)?, results))
}

// ---------------------------------------------------------------------------
// Overlap between complementary sets on a shared λ stream

/// Histogram of 8-bit postselection masks over a common λ stream.
///
/// Bit `i` (0..4) is set when λ is postselected under member `i` of the first
/// set, bit `4 + i` under member `i` of the second. Every overlap and
/// per-member statistic is a function of this histogram.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MembershipTally {
    pub n: u64,
    pub masks: Vec<u64>,
}

impl MembershipTally {
    pub fn new() -> Self {
        Self {
            n: 0,
            masks: alloc::vec![0; 256],
        }
    }

    pub fn merge(&mut self, other: &MembershipTally) {
        self.n += other.n;
        for (a, b) in self.masks.iter_mut().zip(&other.masks) {
            *a += b;
        }
    }

    pub fn count_where(&self, pred: impl Fn(u8) -> bool) -> u64 {
        self.masks
            .iter()
            .enumerate()
            .filter(|(m, _)| pred(*m as u8))
            .map(|(_, c)| c)
            .sum()
    }
}

impl Default for MembershipTally {
    fn default() -> Self {
        Self::new()
    }
}

const SET_M: u8 = 0x0f;
const SET_M_PRIME: u8 = 0xf0;

/// Evaluate both sets on the same λ stream: run `r` of `cfg` supplies samples
/// `0..n_samples` keyed by `cfg.run_seed(r)`, and every one of those samples is
/// propagated under all eight member settings.
pub fn membership_tally<E: Executor>(
    m: &ComplementarySet,
    m_prime: &ComplementarySet,
    cfg: &EnsembleConfig,
    exec: &E,
) -> Result<MembershipTally, ModelError> {
    cfg.validate()?;
    let evals: [_; 8] = core::array::from_fn(|k| {
        let s = if k < 4 { m.members[k] } else { m_prime.members[k - 4] };
        cfg.evaluator(s)
    });
    let mut total = MembershipTally::new();
    for r in 0..cfg.n_runs {
        let seed = cfg.run_seed(r);
        let n = cfg.n_samples;
        let parts = exec.map_indexed(chunk_count(n), |c| {
            let range = chunk_range(n, c);
            let mut t = MembershipTally::new();
            let mut stream = CounterStream::new(seed, range.start);
            for _ in range {
                let phases = stream.next_phases();
                let mut mask = 0usize;
                for (bit, e) in evals.iter().enumerate() {
                    mask |= (e.evaluate(&phases).joint as usize) << bit;
                }
                t.masks[mask] += 1;
                t.n += 1;
            }
            t
        });
        for p in &parts {
            total.merge(p);
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SiOverlapReport {
    pub set_m: ComplementarySet,
    pub set_m_prime: ComplementarySet,
    pub n: u64,
    /// λ postselected under at least one member of M.
    pub lambdas_m: u64,
    /// λ postselected under at least one member of M′.
    pub lambdas_m_prime: u64,
    pub lambdas_both: u64,
    /// `lambdas_both / lambdas_m`.
    pub overlap_fraction: f64,
    /// `lambdas_both / lambdas_m_prime`.
    pub reverse_fraction: f64,
    /// Postselection counts per member, M then M′.
    pub member_counts: [u64; 8],
    /// For each member, the fraction of its postselected λ that the other set
    /// postselects under at least one of its members (`None` if the member
    /// postselected nothing).
    pub member_overlap: [Option<f64>; 8],
}

pub fn si_overlap_from_tally(
    m: &ComplementarySet,
    m_prime: &ComplementarySet,
    t: &MembershipTally,
) -> Result<SiOverlapReport, ModelError> {
    let lambdas_m = t.count_where(|k| k & SET_M != 0);
    let lambdas_m_prime = t.count_where(|k| k & SET_M_PRIME != 0);
    let lambdas_both = t.count_where(|k| k & SET_M != 0 && k & SET_M_PRIME != 0);
    if lambdas_m == 0 || lambdas_m_prime == 0 {
        return Err(ModelError::EmptyPostselection);
    }
    let member_counts: [u64; 8] = core::array::from_fn(|b| t.count_where(|k| k & (1 << b) != 0));
    let member_overlap: [Option<f64>; 8] = core::array::from_fn(|b| {
        let other = if b < 4 { SET_M_PRIME } else { SET_M };
        let hit = t.count_where(|k| k & (1 << b) != 0 && k & other != 0);
        (member_counts[b] > 0).then(|| hit as f64 / member_counts[b] as f64)
    });
    Ok(SiOverlapReport {
        set_m: *m,
        set_m_prime: *m_prime,
        n: t.n,
        lambdas_m,
        lambdas_m_prime,
        lambdas_both,
        overlap_fraction: lambdas_both as f64 / lambdas_m as f64,
        reverse_fraction: lambdas_both as f64 / lambdas_m_prime as f64,
        member_counts,
        member_overlap,
    })
}

pub fn si_overlap<E: Executor>(
    m: &ComplementarySet,
    m_prime: &ComplementarySet,
    cfg: &EnsembleConfig,
    exec: &E,
) -> Result<SiOverlapReport, ModelError> {
    si_overlap_from_tally(m, m_prime, &membership_tally(m, m_prime, cfg, exec)?)
}

/// Per-λ member-detection counts for two sets and how often their
/// "postselected at all" indicators disagree.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CsetReport {
    pub set_m: ComplementarySet,
    pub set_m_prime: ComplementarySet,
    pub n: u64,
    /// `histogram_m[k]` = number of λ postselected under exactly `k` members of M.
    pub histogram_m: [u64; 5],
    pub histogram_m_prime: [u64; 5],
    pub disagreement_count: u64,
    pub disagreement_fraction: f64,
}

pub fn cset_report_from_tally(m: &ComplementarySet, m_prime: &ComplementarySet, t: &MembershipTally) -> CsetReport {
    let mut histogram_m = [0u64; 5];
    let mut histogram_m_prime = [0u64; 5];
    let mut disagreement_count = 0;
    for (mask, &c) in t.masks.iter().enumerate() {
        let mask = mask as u8;
        let in_m = (mask & SET_M).count_ones() as usize;
        let in_mp = (mask & SET_M_PRIME).count_ones() as usize;
        histogram_m[in_m] += c;
        histogram_m_prime[in_mp] += c;
        if (in_m > 0) != (in_mp > 0) {
            disagreement_count += c;
        }
    }
    CsetReport {
        set_m: *m,
        set_m_prime: *m_prime,
        n: t.n,
        histogram_m,
        histogram_m_prime,
        disagreement_count,
        disagreement_fraction: if t.n == 0 {
            0.0
        } else {
            disagreement_count as f64 / t.n as f64
        },
    }
}

pub fn cset_condition_check<E: Executor>(
    m: &ComplementarySet,
    m_prime: &ComplementarySet,
    cfg: &EnsembleConfig,
    exec: &E,
) -> Result<CsetReport, ModelError> {
    Ok(cset_report_from_tally(
        m,
        m_prime,
        &membership_tally(m, m_prime, cfg, exec)?,
    ))
}
