//! Command-line front end.

use std::f64::consts::FRAC_PI_4;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use bellsim_core::analysis::MIN_FIT_POINTS;
use bellsim_core::montecarlo::{phase_sum_grid, sweep_phase_sums, AlphaMode};
use bellsim_core::toymodel::{run_coin_toy, run_polarizer_demo, KeepRule, ThetaPrior};
use bellsim_core::{
    chsh, complementary_set, cset_condition_check, fit_cosine, run_ensemble, si_overlap, ChshQuad, Executor,
    ModelError, Settings,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::exec::Rayon;
use crate::manifest::{Job, Physics, RunManifest};
use crate::output::{write_csv, write_json, CurveRow, Summary};
use crate::report::{ChshReport, MarginalsReport, SweepReport};
use crate::sink::LambdaCsvSink;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Model(_) | CliError::Invalid(_) => EXIT_VALIDATION,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bellsim",
    version,
    about = "Classical field model of postselected four-crystal Bell tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint detection rate against the phase sum α+β.
    Sweep(SweepArgs),
    /// Single-side and either-side detection rates at one setting.
    Marginals(MarginalsArgs),
    /// CHSH value from complementary-set-normalized joint rates.
    Chsh(ChshArgs),
    /// Fraction of hidden variables shared by two complementary sets.
    SiOverlap(SetPairArgs),
    /// Whether two complementary sets postselect the same hidden variables.
    CsetCheck(SetPairArgs),
    /// Toy models of selection bias.
    #[command(subcommand)]
    Toy(ToyCommand),
    /// Repeat a run from a manifest or a JSON result file.
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum ToyCommand {
    /// Four fair coins and a selector that keeps some joint outcomes.
    Coin(CoinArgs),
    /// Malus-law polarizers, for which complementary sets are complete.
    Polarizer(PolarizerArgs),
}

#[derive(Debug, Args)]
pub struct PhysicsArgs {
    /// Parametric gain g of every crystal.
    #[arg(long, default_value_t = 0.25)]
    pub gain: f64,
    /// Hidden-variable samples per run.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 10)]
    pub runs: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest detectable amplitude.
    #[arg(long, default_value_t = 1.0)]
    pub threshold_lower: f64,
    /// Amplitude at and above which a mode is not counted; `inf` disables it.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub threshold_upper: f64,
}

impl PhysicsArgs {
    fn resolve(&self) -> Physics {
        Physics {
            gain: self.gain,
            samples: self.samples,
            runs: self.runs,
            seed: self.seed,
            threshold_lower: self.threshold_lower,
            threshold_upper: (self.threshold_upper != f64::INFINITY).then_some(self.threshold_upper),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent. CSV output to a file also writes
    /// `PATH.manifest.json`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads; 0 uses every logical CPU. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// α held fixed while β = sum − α.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Evenly spaced phase sums covering [0, 2π].
    #[arg(long, default_value_t = 17)]
    pub points: usize,
    /// `mixed` draws a random α for the second half of the runs.
    #[arg(long, value_enum, default_value_t = AlphaModeArg::Fixed)]
    pub alpha_mode: AlphaModeArg,
    /// Read angles as degrees.
    #[arg(long)]
    pub degrees: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlphaModeArg {
    Fixed,
    Mixed,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MarginalsArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Also run a K×K grid of (α, β) over [0, 2π)² and report the spread.
    #[arg(long, value_name = "K", default_value_t = 0)]
    pub grid: usize,
    #[arg(long)]
    pub degrees: bool,
    /// Stream every hidden variable of the main setting to this CSV file.
    #[arg(long, value_name = "PATH")]
    pub lambdas: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ChshArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Settings a,a′,b,b′.
    #[arg(long, value_name = "A,A',B,B'", value_parser = parse_quad, allow_hyphen_values = true,
          default_value = "0,1.5707963267948966,-0.7853981633974483,0.7853981633974483")]
    pub quad: [f64; 4],
    #[arg(long)]
    pub degrees: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SetPairArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Base α of the first complementary set.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Base β of the first complementary set.
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub beta: f64,
    /// Base α of the second complementary set.
    #[arg(long, default_value_t = 0.0)]
    pub alpha2: f64,
    /// Base β of the second complementary set.
    #[arg(long, default_value_t = 3.0 * FRAC_PI_4)]
    pub beta2: f64,
    #[arg(long)]
    pub degrees: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CoinArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `always`, `setting-matches-bob`, `chsh-maximal`, or a 16-bit pattern
    /// mask such as `0x9669`.
    #[arg(long, default_value = "chsh-maximal", value_parser = parse_rule)]
    pub rule: KeepRule,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PolarizerArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base angle of the first set {a, a+π/2}.
    #[arg(long, default_value_t = 0.0)]
    pub angle: f64,
    /// Base angle of the second set.
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub angle2: f64,
    /// Fix the hidden polarization instead of drawing it uniformly.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Also sample detector clicks.
    #[arg(long)]
    pub sampled: bool,
    #[arg(long)]
    pub degrees: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A manifest, a CSV sidecar manifest, or a JSON result file.
    pub manifest: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_rule(s: &str) -> Result<KeepRule, String> {
    match s {
        "always" => Ok(KeepRule::Always),
        "setting-matches-bob" => Ok(KeepRule::SettingMatchesBobOutcome),
        "chsh-maximal" => Ok(KeepRule::ChshMaximal),
        _ => {
            let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X"));
            let parsed = match digits {
                Some(h) => u16::from_str_radix(h, 16),
                None => s.parse(),
            };
            parsed
                .map(KeepRule::Patterns)
                .map_err(|_| format!("unknown rule `{s}`"))
        }
    }
}

fn parse_quad(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected four comma-separated angles, got {}", v.len()))
}

fn angle(x: f64, degrees: bool) -> Result<f64, CliError> {
    if !x.is_finite() {
        return Err(CliError::Invalid(format!("angle {x} is not finite")));
    }
    Ok(if degrees { x.to_radians() } else { x })
}

/// Turn parsed arguments into a job plus output options.
pub fn resolve(command: Command) -> Result<(Job, OutputArgs), CliError> {
    Ok(match command {
        Command::Sweep(a) => (
            Job::Sweep {
                physics: a.physics.resolve(),
                alpha: angle(a.alpha, a.degrees)?,
                points: a.points,
                alpha_mode: match a.alpha_mode {
                    AlphaModeArg::Fixed => AlphaMode::Fixed,
                    AlphaModeArg::Mixed => AlphaMode::Mixed,
                },
            },
            a.output,
        ),
        // `--lambdas` is an extra output, not part of the job; see `dispatch`.
        Command::Marginals(a) => (
            Job::Marginals {
                physics: a.physics.resolve(),
                alpha: angle(a.alpha, a.degrees)?,
                beta: angle(a.beta, a.degrees)?,
                grid: a.grid,
            },
            a.output,
        ),
        Command::Chsh(a) => {
            let q: Vec<f64> = a.quad.iter().map(|&x| angle(x, a.degrees)).collect::<Result<_, _>>()?;
            (
                Job::Chsh {
                    physics: a.physics.resolve(),
                    quad: ChshQuad::new(q[0], q[1], q[2], q[3]),
                },
                a.output,
            )
        }
        Command::SiOverlap(a) => {
            let (set_m, set_m_prime) = set_pair(&a)?;
            (
                Job::SiOverlap {
                    physics: a.physics.resolve(),
                    set_m,
                    set_m_prime,
                },
                a.output,
            )
        }
        Command::CsetCheck(a) => {
            let (set_m, set_m_prime) = set_pair(&a)?;
            (
                Job::CsetCheck {
                    physics: a.physics.resolve(),
                    set_m,
                    set_m_prime,
                },
                a.output,
            )
        }
        Command::Toy(ToyCommand::Coin(a)) => (
            Job::ToyCoin {
                samples: a.samples,
                seed: a.seed,
                rule: a.rule,
            },
            a.output,
        ),
        Command::Toy(ToyCommand::Polarizer(a)) => (
            Job::ToyPolarizer {
                samples: a.samples,
                seed: a.seed,
                angle: angle(a.angle, a.degrees)?,
                angle2: angle(a.angle2, a.degrees)?,
                prior: match a.theta {
                    Some(t) => ThetaPrior::Fixed(angle(t, a.degrees)?),
                    None => ThetaPrior::Uniform,
                },
                sampled: a.sampled,
            },
            a.output,
        ),
        Command::Replay(a) => (read_manifest(&a.manifest)?.config, a.output),
    })
}

fn set_pair(a: &SetPairArgs) -> Result<([f64; 2], [f64; 2]), CliError> {
    Ok((
        [angle(a.alpha, a.degrees)?, angle(a.beta, a.degrees)?],
        [angle(a.alpha2, a.degrees)?, angle(a.beta2, a.degrees)?],
    ))
}

/// Accepts a bare manifest or any JSON result file carrying one.
pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let inner = value.get("manifest").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| CliError::Invalid(format!("{}: not a run manifest: {e}", path.display())))
}

/// Result of a job, ready to serialize.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Sweep(SweepReport),
    Marginals(MarginalsReport),
    Chsh(ChshReport),
    SiOverlap(bellsim_core::SiOverlapReport),
    CsetCheck(bellsim_core::CsetReport),
    Coin(bellsim_core::toymodel::CoinStats),
    Polarizer(bellsim_core::toymodel::PolarizerReport),
}

impl Outcome {
    /// Curve rows for CSV output, if the result has that shape.
    pub fn rows(&self) -> Option<Vec<CurveRow>> {
        match self {
            Outcome::Sweep(r) => Some(r.rows.clone()),
            Outcome::Marginals(r) => {
                let mut rows = vec![r.row];
                if let Some(g) = &r.grid {
                    rows.extend(g.rows.iter().copied());
                }
                Some(rows)
            }
            Outcome::Chsh(r) => Some(r.member_rows()),
            _ => None,
        }
    }
}

fn set_from(base: [f64; 2]) -> bellsim_core::ComplementarySet {
    complementary_set(Settings::new(base[0], base[1]))
}

/// Run a resolved job. `sink` receives hidden-variable records of the main
/// marginals ensemble when given.
pub fn execute<E: Executor>(
    job: &Job,
    exec: &E,
    sink: Option<&mut dyn bellsim_core::LambdaSink>,
) -> Result<Outcome, CliError> {
    Ok(match *job {
        Job::Sweep {
            physics,
            alpha,
            points,
            alpha_mode,
        } => {
            let template = physics.ensemble(Settings::default())?;
            let sums = phase_sum_grid(points);
            let results = if sums.is_empty() {
                Vec::new()
            } else {
                sweep_phase_sums(&sums, alpha, alpha_mode, &template, exec)?
            };
            let rows: Vec<CurveRow> = results
                .iter()
                .zip(&sums)
                .map(|(r, &x)| CurveRow::from_result(r, x))
                .collect();
            let fit = if rows.len() >= MIN_FIT_POINTS {
                fit_cosine(&bellsim_core::analysis::curve_points(&results, &sums)).ok()
            } else {
                None
            };
            Outcome::Sweep(SweepReport::new(rows, results, fit))
        }
        Job::Marginals {
            physics,
            alpha,
            beta,
            grid,
        } => {
            let settings = Settings::new(alpha, beta);
            let mut cfg = physics.ensemble(settings)?;
            cfg.record_lambdas = sink.is_some();
            let main = run_ensemble(&cfg, exec, sink)?;
            let grid = if grid > 0 {
                Some(crate::report::marginal_grid(&physics, grid, exec)?)
            } else {
                None
            };
            Outcome::Marginals(MarginalsReport::new(main, grid))
        }
        Job::Chsh { physics, quad } => {
            let template = physics.ensemble(Settings::default())?;
            let (result, members) = chsh(quad, &template, exec)?;
            Outcome::Chsh(ChshReport { result, members })
        }
        Job::SiOverlap {
            physics,
            set_m,
            set_m_prime,
        } => {
            let cfg = physics.ensemble(Settings::default())?;
            Outcome::SiOverlap(si_overlap(&set_from(set_m), &set_from(set_m_prime), &cfg, exec)?)
        }
        Job::CsetCheck {
            physics,
            set_m,
            set_m_prime,
        } => {
            let cfg = physics.ensemble(Settings::default())?;
            Outcome::CsetCheck(cset_condition_check(
                &set_from(set_m),
                &set_from(set_m_prime),
                &cfg,
                exec,
            )?)
        }
        Job::ToyCoin { samples, seed, rule } => Outcome::Coin(run_coin_toy(samples, rule, seed)?),
        Job::ToyPolarizer {
            samples,
            seed,
            angle,
            angle2,
            prior,
            sampled,
        } => Outcome::Polarizer(run_polarizer_demo(samples, prior, angle, angle2, seed, sampled)?),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Path of the manifest written next to a CSV file.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s: OsString = csv.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn emit(manifest: RunManifest, outcome: &Outcome, output: &OutputArgs) -> Result<(), CliError> {
    let stdout_err = |e| CliError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    match output.format {
        Format::Json => {
            let summary = Summary {
                manifest,
                result: outcome,
            };
            match &output.out {
                Some(p) => write_json(&summary, create(p)?).map_err(|e| CliError::io(p, e)),
                None => write_json(&summary, io::stdout().lock()).map_err(stdout_err),
            }
        }
        Format::Csv => {
            let rows = outcome.rows().ok_or_else(|| {
                CliError::Usage(format!(
                    "{} results have no CSV form; use --format json",
                    manifest.command.name()
                ))
            })?;
            match &output.out {
                Some(p) => {
                    write_csv(&rows, create(p)?).map_err(|e| CliError::io(p, e))?;
                    let side = sidecar_path(p);
                    write_json(&manifest, create(&side)?).map_err(|e| CliError::io(&side, e))
                }
                None => write_csv(&rows, io::stdout().lock()).map_err(stdout_err),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let lambdas = match &cli.command {
        Command::Marginals(a) => a.lambdas.clone(),
        _ => None,
    };
    let (job, output) = resolve(cli.command)?;
    if output.format == Format::Csv && !matches!(job, Job::Sweep { .. } | Job::Marginals { .. } | Job::Chsh { .. }) {
        return Err(CliError::Usage(format!(
            "{} results have no CSV form; use --format json",
            job.kind().name()
        )));
    }
    let exec = Rayon::new(output.workers).map_err(|e| CliError::Invalid(e.to_string()))?;
    let manifest = RunManifest::new(job.clone());
    let outcome = match &lambdas {
        Some(path) => {
            let mut sink = LambdaCsvSink::new(create(path)?);
            let out = match execute(&job, &exec, Some(&mut sink)) {
                Ok(out) => out,
                Err(e) => return Err(sink.take_error().map_or(e, |io| CliError::io(path, io))),
            };
            sink.finish().map_err(|e| CliError::io(path, e))?;
            out
        }
        None => execute(&job, &exec, None)?,
    };
    emit(manifest, &outcome, &output)
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bellsim: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quad_parses() {
        assert_eq!(parse_quad("0, 1,-2,3"), Ok([0.0, 1.0, -2.0, 3.0]));
        assert!(parse_quad("0,1,2").is_err());
        assert!(parse_quad("0,1,2,x").is_err());
    }

    #[test]
    fn rules_parse() {
        assert_eq!(parse_rule("always"), Ok(KeepRule::Always));
        assert_eq!(parse_rule("0x9669"), Ok(KeepRule::Patterns(0x9669)));
        assert_eq!(parse_rule("255"), Ok(KeepRule::Patterns(255)));
        assert!(parse_rule("sometimes").is_err());
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(
            sidecar_path(Path::new("a/b.csv")),
            PathBuf::from("a/b.csv.manifest.json")
        );
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["bellsim", "sweep"]).unwrap();
        let (job, out) = resolve(cli.command).unwrap();
        assert_eq!(out.format, Format::Json);
        let Job::Sweep {
            physics, points, alpha, ..
        } = job
        else {
            panic!("wrong job")
        };
        assert_eq!(physics, Physics::default());
        assert_eq!((points, alpha), (17, 0.0));
    }

    #[test]
    fn degrees_are_converted() {
        let cli = Cli::try_parse_from(["bellsim", "chsh", "--degrees", "--quad", "0,90,-45,45"]).unwrap();
        let (job, _) = resolve(cli.command).unwrap();
        let Job::Chsh { quad, .. } = job else { panic!() };
        assert_eq!(quad, ChshQuad::new(0.0, PI / 2.0, -FRAC_PI_4, FRAC_PI_4));
    }
}
