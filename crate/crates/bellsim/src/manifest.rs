//! Run manifests: everything needed to repeat a run bit for bit.

use std::time::{SystemTime, UNIX_EPOCH};

use bellsim_core::montecarlo::AlphaMode;
use bellsim_core::toymodel::{KeepRule, ThetaPrior};
use bellsim_core::{ChshQuad, DetectionThresholds, EnsembleConfig, Gain, ModelError, Settings};
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Sweep,
    Marginals,
    Chsh,
    SiOverlap,
    CsetCheck,
    Toy,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Sweep => "sweep",
            CommandKind::Marginals => "marginals",
            CommandKind::Chsh => "chsh",
            CommandKind::SiOverlap => "si-overlap",
            CommandKind::CsetCheck => "cset-check",
            CommandKind::Toy => "toy",
        }
    }
}

/// Parameters shared by every command that runs the four-crystal ensemble.
/// Angles elsewhere in the manifest are always radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub gain: f64,
    pub samples: u64,
    pub runs: u32,
    pub seed: u64,
    pub threshold_lower: f64,
    /// `None` means no upper cut (JSON has no infinity).
    pub threshold_upper: Option<f64>,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            gain: Gain::DEFAULT.value(),
            samples: 1_000_000,
            runs: 10,
            seed: 0,
            threshold_lower: DetectionThresholds::DEFAULT_LOWER,
            threshold_upper: Some(DetectionThresholds::DEFAULT_UPPER),
        }
    }
}

impl Physics {
    pub fn ensemble(&self, settings: Settings) -> Result<EnsembleConfig, ModelError> {
        let cfg = EnsembleConfig {
            n_samples: self.samples,
            n_runs: self.runs,
            master_seed: self.seed,
            gain: Gain::new(self.gain)?,
            settings,
            thresholds: DetectionThresholds::new(self.threshold_lower, self.threshold_upper.unwrap_or(f64::INFINITY))?,
            record_lambdas: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Fully resolved configuration of one invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "job", rename_all = "kebab-case")]
pub enum Job {
    Sweep {
        physics: Physics,
        alpha: f64,
        points: usize,
        alpha_mode: AlphaMode,
    },
    Marginals {
        physics: Physics,
        alpha: f64,
        beta: f64,
        /// Side length of an additional `(α, β)` grid; 0 for none.
        grid: usize,
    },
    Chsh {
        physics: Physics,
        quad: ChshQuad,
    },
    SiOverlap {
        physics: Physics,
        set_m: [f64; 2],
        set_m_prime: [f64; 2],
    },
    CsetCheck {
        physics: Physics,
        set_m: [f64; 2],
        set_m_prime: [f64; 2],
    },
    ToyCoin {
        samples: u64,
        seed: u64,
        rule: KeepRule,
    },
    ToyPolarizer {
        samples: u64,
        seed: u64,
        angle: f64,
        angle2: f64,
        prior: ThetaPrior,
        sampled: bool,
    },
}

impl Job {
    pub fn kind(&self) -> CommandKind {
        match self {
            Job::Sweep { .. } => CommandKind::Sweep,
            Job::Marginals { .. } => CommandKind::Marginals,
            Job::Chsh { .. } => CommandKind::Chsh,
            Job::SiOverlap { .. } => CommandKind::SiOverlap,
            Job::CsetCheck { .. } => CommandKind::CsetCheck,
            Job::ToyCoin { .. } | Job::ToyPolarizer { .. } => CommandKind::Toy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: CommandKind,
    pub config: Job,
    pub tool_version: String,
    /// Seconds since the Unix epoch. Honors `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(config: Job) -> Self {
        Self {
            command: config.kind(),
            config,
            tool_version: TOOL_VERSION.to_owned(),
            timestamp: now(),
        }
    }
}

fn now() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
    {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
