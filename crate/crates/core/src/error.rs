use thiserror::Error;

use crate::field::Stage;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("gain must be finite and non-negative, got {0}")]
    InvalidGain(f64),
    #[error("expected a field state at stage {expected:?}, found {found:?}")]
    WrongStage { expected: Stage, found: Stage },
    #[error("detection thresholds must satisfy 0 < lower < upper, got lower={lower}, upper={upper}")]
    InvalidThresholds { lower: f64, upper: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("curve fit needs at least {needed} distinct phase sums, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("curve fit is singular: the phase sums do not separate amplitude from offset")]
    SingularFit,
    #[error("normalization is undefined: all complementary-set rates are zero")]
    UndefinedNormalization,
    #[error("member index {0} is out of range for a four-member set")]
    InvalidMemberIndex(usize),
    #[error("no hidden-variable sample was postselected under the reference set")]
    EmptyPostselection,
    #[error("the keep rule discarded every trial")]
    EmptyKeptSet,
    #[error("could not reserve storage for {requested} lambda records")]
    ResourceExhausted { requested: usize },
    #[error("lambda sink failed to store records")]
    SinkFailed,
}
