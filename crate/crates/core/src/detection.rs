//! Threshold detection on the output field.
//!
//! Mode `i` counts as detected when `lower ≤ |cᵢ| < upper`. Side III is the
//! pair of modes leaving the third crystal (components 0 and 1), side IV the
//! pair leaving the fourth (components 2 and 3).

use crate::error::ModelError;
use crate::field::{FieldState, Stage};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionThresholds {
    lower: f64,
    upper: f64,
}

impl DetectionThresholds {
    /// One photon of intensity.
    pub const DEFAULT_LOWER: f64 = 1.0;
    /// Two photons of intensity.
    pub const DEFAULT_UPPER: f64 = core::f64::consts::SQRT_2;

    /// `upper` may be `+∞` to drop the two-photon cut entirely.
    pub fn new(lower: f64, upper: f64) -> Result<Self, ModelError> {
        if lower.is_finite() && lower > 0.0 && upper > lower && !upper.is_nan() {
            Ok(Self { lower, upper })
        } else {
            Err(ModelError::InvalidThresholds { lower, upper })
        }
    }

    pub const fn lower(&self) -> f64 {
        self.lower
    }

    pub const fn upper(&self) -> f64 {
        self.upper
    }

    #[inline]
    pub fn contains(&self, magnitude: f64) -> bool {
        self.lower <= magnitude && magnitude < self.upper
    }
}

impl Default for DetectionThresholds {
    fn default() -> Self {
        Self {
            lower: Self::DEFAULT_LOWER,
            upper: Self::DEFAULT_UPPER,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOutcome {
    /// All four modes detected.
    pub joint: bool,
    /// Both modes of the third crystal detected.
    pub side_iii: bool,
    /// Both modes of the fourth crystal detected.
    pub side_iv: bool,
    pub magnitudes: [f64; 4],
    pub detected: [bool; 4],
}

impl RunOutcome {
    pub fn either_side(&self) -> bool {
        self.side_iii || self.side_iv
    }

    /// At least one mode of the third crystal detected.
    pub fn any_mode_iii(&self) -> bool {
        self.detected[0] || self.detected[1]
    }

    /// At least one mode of the fourth crystal detected.
    pub fn any_mode_iv(&self) -> bool {
        self.detected[2] || self.detected[3]
    }
}

/// Classify four output magnitudes. Stage-free; used in the sampling loop.
#[inline]
pub fn classify(magnitudes: [f64; 4], thr: &DetectionThresholds) -> RunOutcome {
    let detected = magnitudes.map(|m| thr.contains(m));
    let side_iii = detected[0] && detected[1];
    let side_iv = detected[2] && detected[3];
    RunOutcome {
        joint: side_iii && side_iv,
        side_iii,
        side_iv,
        magnitudes,
        detected,
    }
}

pub fn detect(output: &FieldState, thr: &DetectionThresholds) -> Result<RunOutcome, ModelError> {
    if output.stage != Stage::Final {
        return Err(ModelError::WrongStage {
            expected: Stage::Final,
            found: output.stage,
        });
    }
    Ok(classify(output.magnitudes(), thr))
}

pub fn either_side(outcome: &RunOutcome) -> bool {
    outcome.either_side()
}
