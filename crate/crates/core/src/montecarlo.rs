//! Ensemble evaluation: sample λ, propagate, detect, count.
//!
//! The index range of every run is cut into fixed-size chunks whose layout
//! does not depend on the executor. Each chunk is a pure function of its
//! range and produces integer tallies, so summing them is exact and the
//! result is identical for any number of workers.

use alloc::vec::Vec;
use core::ops::{AddAssign, Range};
// f64 math without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::detection::{classify, DetectionThresholds, RunOutcome};
use crate::error::ModelError;
use crate::field::{reduce_angle, Gain, Propagator, Settings};
use crate::sampling::{derive_seed, make_input, unit_angle, CounterStream, HiddenPhases, SeedDomain};

/// Samples per work unit.
pub const CHUNK_SIZE: u64 = 1 << 14;

/// Chunks evaluated between flushes of recorded λ values.
const RECORD_WINDOW: usize = 64;

/// Runs a batch of independent indexed jobs and returns results in index order.
pub trait Executor {
    fn workers(&self) -> usize;

    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every job on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Serial;

impl Executor for Serial {
    fn workers(&self) -> usize {
        1
    }

    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

/// Integer detection counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tally {
    pub n: u64,
    pub joint: u64,
    pub side_iii: u64,
    pub side_iv: u64,
    pub either_side: u64,
    pub any_mode_iii: u64,
    pub any_mode_iv: u64,
    pub any_mode_either: u64,
}

impl Tally {
    #[inline]
    pub fn record(&mut self, o: &RunOutcome) {
        self.n += 1;
        self.joint += o.joint as u64;
        self.side_iii += o.side_iii as u64;
        self.side_iv += o.side_iv as u64;
        self.either_side += o.either_side() as u64;
        self.any_mode_iii += o.any_mode_iii() as u64;
        self.any_mode_iv += o.any_mode_iv() as u64;
        self.any_mode_either += (o.any_mode_iii() || o.any_mode_iv()) as u64;
    }
}

impl AddAssign for Tally {
    fn add_assign(&mut self, o: Tally) {
        self.n += o.n;
        self.joint += o.joint;
        self.side_iii += o.side_iii;
        self.side_iv += o.side_iv;
        self.either_side += o.either_side;
        self.any_mode_iii += o.any_mode_iii;
        self.any_mode_iv += o.any_mode_iv;
        self.any_mode_either += o.any_mode_either;
    }
}

impl core::iter::Sum for Tally {
    fn sum<I: Iterator<Item = Tally>>(iter: I) -> Self {
        iter.fold(Tally::default(), |mut acc, t| {
            acc += t;
            acc
        })
    }
}

/// Binomial standard error of a rate estimated from `n` trials.
pub fn binomial_std_err(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Rates derived once from final counts.
///
/// `p_marginal_*` follow the two-mode side definition (both modes of the
/// crystal detected). `p_any_mode_*` count a side when at least one of its
/// two modes is detected and are reported alongside for comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleStats {
    pub n: u64,
    pub joint_count: u64,
    pub side_iii_count: u64,
    pub side_iv_count: u64,
    pub either_side_count: u64,
    pub any_mode_iii_count: u64,
    pub any_mode_iv_count: u64,
    pub any_mode_either_count: u64,
    pub p_joint: f64,
    pub p_marginal_iii: f64,
    pub p_marginal_iv: f64,
    pub p_either: f64,
    pub p_any_mode_iii: f64,
    pub p_any_mode_iv: f64,
    pub p_any_mode_either: f64,
    pub std_err_joint: f64,
}

impl EnsembleStats {
    pub fn from_tally(t: &Tally) -> Self {
        let rate = |c: u64| if t.n == 0 { 0.0 } else { c as f64 / t.n as f64 };
        let p_joint = rate(t.joint);
        Self {
            n: t.n,
            joint_count: t.joint,
            side_iii_count: t.side_iii,
            side_iv_count: t.side_iv,
            either_side_count: t.either_side,
            any_mode_iii_count: t.any_mode_iii,
            any_mode_iv_count: t.any_mode_iv,
            any_mode_either_count: t.any_mode_either,
            p_joint,
            p_marginal_iii: rate(t.side_iii),
            p_marginal_iv: rate(t.side_iv),
            p_either: rate(t.either_side),
            p_any_mode_iii: rate(t.any_mode_iii),
            p_any_mode_iv: rate(t.any_mode_iv),
            p_any_mode_either: rate(t.any_mode_either),
            std_err_joint: binomial_std_err(p_joint, t.n),
        }
    }

    pub fn tally(&self) -> Tally {
        Tally {
            n: self.n,
            joint: self.joint_count,
            side_iii: self.side_iii_count,
            side_iv: self.side_iv_count,
            either_side: self.either_side_count,
            any_mode_iii: self.any_mode_iii_count,
            any_mode_iv: self.any_mode_iv_count,
            any_mode_either: self.any_mode_either_count,
        }
    }

    /// Binomial standard error of any rate measured on this ensemble.
    pub fn std_err(&self, p: f64) -> f64 {
        binomial_std_err(p, self.n)
    }
}

/// One retained hidden-variable sample.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LambdaRecord {
    pub run: u32,
    pub sample_index: u64,
    pub phases: HiddenPhases,
    pub joint: bool,
}

/// Destination for recorded λ values, fed in sample order.
pub trait LambdaSink {
    fn accept(&mut self, records: &[LambdaRecord]) -> Result<(), ModelError>;
}

impl LambdaSink for Vec<LambdaRecord> {
    fn accept(&mut self, records: &[LambdaRecord]) -> Result<(), ModelError> {
        self.try_reserve(records.len())
            .map_err(|_| ModelError::ResourceExhausted {
                requested: self.len().saturating_add(records.len()),
            })?;
        self.extend_from_slice(records);
        Ok(())
    }
}

/// In-memory sink with a hard record limit.
#[derive(Clone, Debug)]
pub struct BoundedSink {
    pub records: Vec<LambdaRecord>,
    limit: usize,
}

impl BoundedSink {
    pub fn new(limit: usize) -> Self {
        Self {
            records: Vec::new(),
            limit,
        }
    }
}

impl LambdaSink for BoundedSink {
    fn accept(&mut self, records: &[LambdaRecord]) -> Result<(), ModelError> {
        let requested = self.records.len().saturating_add(records.len());
        if requested > self.limit {
            return Err(ModelError::ResourceExhausted { requested });
        }
        self.records.accept(records)
    }
}

/// Per-sample pipeline for one (gain, settings, thresholds) triple.
#[derive(Clone, Copy, Debug)]
pub struct Evaluator {
    propagator: Propagator,
    thresholds: DetectionThresholds,
}

impl Evaluator {
    pub fn new(gain: Gain, settings: Settings, thresholds: DetectionThresholds) -> Self {
        Self {
            propagator: Propagator::new(gain, settings),
            thresholds,
        }
    }

    #[inline]
    pub fn evaluate(&self, phases: &HiddenPhases) -> RunOutcome {
        let out = self.propagator.apply(&make_input(phases).components);
        classify(out.map(|c| c.norm_sqr().sqrt()), &self.thresholds)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleConfig {
    pub n_samples: u64,
    pub n_runs: u32,
    pub master_seed: u64,
    pub gain: Gain,
    pub settings: Settings,
    pub thresholds: DetectionThresholds,
    pub record_lambdas: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            n_runs: 10,
            master_seed: 0,
            gain: Gain::DEFAULT,
            settings: Settings::default(),
            thresholds: DetectionThresholds::default(),
            record_lambdas: false,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_samples == 0 {
            return Err(ModelError::InvalidConfig("n_samples must be at least 1"));
        }
        if self.n_runs == 0 {
            return Err(ModelError::InvalidConfig("n_runs must be at least 1"));
        }
        Ok(())
    }

    pub fn with_settings(mut self, settings: Settings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    /// Keystream seed of run `r`.
    pub fn run_seed(&self, run: u32) -> u64 {
        derive_seed(self.master_seed, SeedDomain::Run, run as u64)
    }

    pub fn evaluator(&self, settings: Settings) -> Evaluator {
        Evaluator::new(self.gain, settings, self.thresholds)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunStats {
    pub settings: Settings,
    pub stats: EnsembleStats,
}

/// Pooled statistics over all runs plus the per-run breakdown.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleResult {
    pub settings: Settings,
    pub pooled: EnsembleStats,
    pub runs: Vec<RunStats>,
}

impl EnsembleResult {
    /// Sample standard deviation of the per-run joint rate (0 for one run).
    pub fn run_scatter(&self) -> f64 {
        let k = self.runs.len();
        if k < 2 {
            return 0.0;
        }
        let mean = self.runs.iter().map(|r| r.stats.p_joint).sum::<f64>() / k as f64;
        let ss: f64 = self.runs.iter().map(|r| (r.stats.p_joint - mean).powi(2)).sum();
        (ss / (k - 1) as f64).sqrt()
    }
}

/// Evaluate samples `range` of the stream keyed by `stream_seed`.
pub fn tally_range(
    eval: &Evaluator,
    stream_seed: u64,
    range: Range<u64>,
    run: u32,
    mut records: Option<&mut Vec<LambdaRecord>>,
) -> Tally {
    let mut tally = Tally::default();
    let mut stream = CounterStream::new(stream_seed, range.start);
    for sample_index in range {
        let phases = stream.next_phases();
        let o = eval.evaluate(&phases);
        tally.record(&o);
        if let Some(buf) = records.as_deref_mut() {
            buf.push(LambdaRecord {
                run,
                sample_index,
                phases,
                joint: o.joint,
            });
        }
    }
    tally
}

pub(crate) fn chunk_count(n: u64) -> usize {
    n.div_ceil(CHUNK_SIZE) as usize
}

pub(crate) fn chunk_range(n: u64, chunk: usize) -> Range<u64> {
    let start = chunk as u64 * CHUNK_SIZE;
    start..(start + CHUNK_SIZE).min(n)
}

fn run_single<'s, E: Executor>(
    eval: &Evaluator,
    n: u64,
    stream_seed: u64,
    run: u32,
    exec: &E,
    sink: Option<&mut (dyn LambdaSink + 's)>,
) -> Result<Tally, ModelError> {
    let chunks = chunk_count(n);
    let Some(sink) = sink else {
        return Ok(exec
            .map_indexed(chunks, |c| tally_range(eval, stream_seed, chunk_range(n, c), run, None))
            .into_iter()
            .sum());
    };
    let mut total = Tally::default();
    let mut first = 0;
    while first < chunks {
        let len = RECORD_WINDOW.min(chunks - first);
        let parts = exec.map_indexed(len, |k| {
            let range = chunk_range(n, first + k);
            let mut buf = Vec::new();
            let t = tally_range(eval, stream_seed, range, run, Some(&mut buf));
            (t, buf)
        });
        for (t, buf) in parts {
            total += t;
            sink.accept(&buf)?;
        }
        first += len;
    }
    Ok(total)
}

fn run_with_settings<E, F>(
    cfg: &EnsembleConfig,
    nominal: Settings,
    run_settings: F,
    exec: &E,
    mut sink: Option<&mut dyn LambdaSink>,
) -> Result<EnsembleResult, ModelError>
where
    E: Executor,
    F: Fn(u32) -> Settings,
{
    cfg.validate()?;
    if cfg.record_lambdas && sink.is_none() {
        return Err(ModelError::InvalidConfig("record_lambdas requires a sink"));
    }
    if !cfg.record_lambdas {
        sink = None;
    }
    let mut pooled = Tally::default();
    let mut runs = Vec::with_capacity(cfg.n_runs as usize);
    for r in 0..cfg.n_runs {
        let settings = run_settings(r);
        let eval = cfg.evaluator(settings);
        let t = run_single(&eval, cfg.n_samples, cfg.run_seed(r), r, exec, sink.as_deref_mut())?;
        pooled += t;
        runs.push(RunStats {
            settings,
            stats: EnsembleStats::from_tally(&t),
        });
    }
    Ok(EnsembleResult {
        settings: nominal,
        pooled: EnsembleStats::from_tally(&pooled),
        runs,
    })
}

/// `n_runs` independent runs of `n_samples` each at `cfg.settings`.
pub fn run_ensemble<E: Executor>(
    cfg: &EnsembleConfig,
    exec: &E,
    sink: Option<&mut dyn LambdaSink>,
) -> Result<EnsembleResult, ModelError> {
    run_with_settings(cfg, cfg.settings, |_| cfg.settings, exec, sink)
}

/// Master seed used for sweep point `index`.
pub fn point_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, SeedDomain::SweepPoint, index as u64)
}

/// One ensemble per settings point; point `i` runs under `point_seed(master, i)`.
pub fn sweep<E: Executor>(
    settings_list: &[Settings],
    template: &EnsembleConfig,
    exec: &E,
) -> Result<Vec<EnsembleResult>, ModelError> {
    if settings_list.is_empty() {
        return Err(ModelError::InvalidConfig("sweep needs at least one settings point"));
    }
    settings_list
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let cfg = template.with_settings(s).with_seed(point_seed(template.master_seed, i));
            run_ensemble(&cfg, exec, None)
        })
        .collect()
}

/// How α is chosen for each run of a phase-sum sweep point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum AlphaMode {
    /// Every run uses the fixed α and `β = sum − α`.
    #[default]
    Fixed,
    /// The first half of the runs (rounded up) use the fixed α; the rest draw
    /// α uniformly from a seed derived from the point seed and set
    /// `β = sum − α`.
    Mixed,
}

/// `points` evenly spaced phase sums covering `[0, 2π]` inclusive.
pub fn phase_sum_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..points)
            .map(|k| core::f64::consts::TAU * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Sweep over phase sums `α + β`. Reported sums are not reduced, so a grid
/// ending at 2π keeps its last point at 2π.
pub fn sweep_phase_sums<E: Executor>(
    sums: &[f64],
    alpha: f64,
    mode: AlphaMode,
    template: &EnsembleConfig,
    exec: &E,
) -> Result<Vec<EnsembleResult>, ModelError> {
    if sums.is_empty() {
        return Err(ModelError::InvalidConfig("sweep needs at least one settings point"));
    }
    let fixed_runs = template.n_runs.div_ceil(2);
    sums.iter()
        .enumerate()
        .map(|(i, &sum)| {
            let seed = point_seed(template.master_seed, i);
            let cfg = template.with_seed(seed);
            let nominal = Settings::new(alpha, sum - alpha);
            let per_run = |r: u32| match mode {
                AlphaMode::Fixed => nominal,
                AlphaMode::Mixed if r < fixed_runs => nominal,
                AlphaMode::Mixed => {
                    let a = unit_angle(derive_seed(seed, SeedDomain::RandomAlpha, r as u64));
                    Settings::new(a, reduce_angle(sum - a))
                }
            };
            run_with_settings(&cfg, nominal, per_run, exec, None)
        })
        .collect()
}
