//! Classical four-crystal three-wave-mixing model.
//!
//! Four random-phase seed fields of half a photon each are amplified by two
//! crystals, phase-shifted and interchanged, amplified again by two more
//! crystals, and threshold-detected. Postselecting on four-fold detection
//! makes the joint rate follow `A·(2 + 2cos(α + β))`, and the crate provides
//! the diagnostics that trace the resulting Bell-type "violation" back to the
//! selection: λ-overlap between complementary setting sets, CHSH on
//! normalized rates, and two toy models for contrast.
//!
//! The crate is `no_std` with `alloc`. Parallel execution, file formats and
//! the command line live in the `bellsim` crate, which plugs into the
//! [`montecarlo::Executor`] trait.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod detection;
pub mod error;
pub mod field;
pub mod montecarlo;
pub mod sampling;
pub mod toymodel;

pub use analysis::{
    chsh, complementary_set, cset_condition_check, fit_cosine, normalize_rates, si_overlap, ChshQuad, ChshResult,
    ComplementarySet, CsetReport, CurveFit, CurvePoint, NormalizedProbability, SiOverlapReport,
};
pub use detection::{detect, either_side, DetectionThresholds, RunOutcome};
pub use error::ModelError;
pub use field::{
    crystal_transform, gain_matrix, interchange_matrix, propagate, ComplexAmp, FieldState, Gain, Settings, Stage,
};
pub use montecarlo::{
    run_ensemble, sweep, EnsembleConfig, EnsembleResult, EnsembleStats, Executor, LambdaRecord, LambdaSink, Serial,
};
pub use sampling::{make_input, sample_phases, HiddenPhases, SeedSpec};
