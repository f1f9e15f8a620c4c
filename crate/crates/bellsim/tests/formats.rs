//! Serialization round trips and worker-count independence.

use bellsim::cli::{execute, Outcome};
use bellsim::manifest::{Job, Physics};
use bellsim::report::{ChshReport, MarginalsReport, SweepReport};
use bellsim::{Rayon, RunManifest, Summary};
use bellsim_core::montecarlo::AlphaMode;
use bellsim_core::toymodel::{CoinStats, KeepRule, PolarizerReport, ThetaPrior};
use bellsim_core::{ChshQuad, CsetReport, Serial, SiOverlapReport};
use proptest::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn physics(samples: u64) -> Physics {
    Physics {
        samples,
        runs: 2,
        seed: 17,
        ..Physics::default()
    }
}

fn jobs() -> Vec<Job> {
    let p = physics(40_000);
    vec![
        Job::Sweep {
            physics: p,
            alpha: 0.3,
            points: 6,
            alpha_mode: AlphaMode::Mixed,
        },
        Job::Marginals {
            physics: p,
            alpha: 1.0,
            beta: -2.0,
            grid: 2,
        },
        Job::Chsh {
            physics: p,
            quad: ChshQuad::new(0.0, 1.5707963, -0.7853982, 0.7853982),
        },
        Job::SiOverlap {
            physics: p,
            set_m: [0.0, 0.7853981633974483],
            set_m_prime: [0.0, 2.356194490192345],
        },
        Job::CsetCheck {
            physics: p,
            set_m: [0.0, 0.7853981633974483],
            set_m_prime: [0.0, 2.356194490192345],
        },
        Job::ToyCoin {
            samples: 10_000,
            seed: 3,
            rule: KeepRule::Patterns(0x00ff),
        },
        Job::ToyPolarizer {
            samples: 10_000,
            seed: 3,
            angle: 0.1,
            angle2: 0.9,
            prior: ThetaPrior::Uniform,
            sampled: true,
        },
    ]
}

#[test]
fn counts_do_not_depend_on_worker_count() {
    // Enough samples for several chunks per run.
    let p = physics(100_000);
    let job = Job::Marginals {
        physics: p,
        alpha: 0.4,
        beta: 0.2,
        grid: 0,
    };
    let serial = execute(&job, &Serial, None).unwrap();
    for w in [1, 4, 16] {
        let exec = Rayon::new(w).unwrap();
        assert_eq!(execute(&job, &exec, None).unwrap(), serial, "{w} workers");
    }
    for job in jobs() {
        let a = execute(&job, &Rayon::new(1).unwrap(), None).unwrap();
        let b = execute(&job, &Rayon::new(16).unwrap(), None).unwrap();
        assert_eq!(a, b, "{:?}", job.kind());
    }
}

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(manifest: &RunManifest, result: T) {
    let s = Summary {
        manifest: manifest.clone(),
        result,
    };
    let text = serde_json::to_string_pretty(&s).unwrap();
    let back: Summary<T> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
    // A second pass is byte-stable.
    assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
}

#[test]
fn json_summaries_round_trip_exactly() {
    for job in jobs() {
        let m = RunManifest::new(job.clone());
        match execute(&job, &Serial, None).unwrap() {
            Outcome::Sweep(r) => round_trip::<SweepReport>(&m, r),
            Outcome::Marginals(r) => round_trip::<MarginalsReport>(&m, r),
            Outcome::Chsh(r) => round_trip::<ChshReport>(&m, r),
            Outcome::SiOverlap(r) => round_trip::<SiOverlapReport>(&m, r),
            Outcome::CsetCheck(r) => round_trip::<CsetReport>(&m, r),
            Outcome::Coin(r) => round_trip::<CoinStats>(&m, r),
            Outcome::Polarizer(r) => round_trip::<PolarizerReport>(&m, r),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn manifests_round_trip(gain in 0.0..2.0f64, samples in 1u64..u64::MAX, runs in 1u32.., seed in any::<u64>(),
                            lo in 0.1..1.5f64, alpha in -10.0..10.0f64, points in 0usize..100, open in any::<bool>()) {
        let job = Job::Sweep {
            physics: Physics {
                gain,
                samples,
                runs,
                seed,
                threshold_lower: lo,
                threshold_upper: (!open).then_some(lo * 1.5),
            },
            alpha,
            points,
            alpha_mode: AlphaMode::Fixed,
        };
        let m = RunManifest::new(job);
        let back: RunManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }
}
