use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use erasekit::config::{
    parse_levels, parse_mean, parse_scheme, pick, validate_distinct_paths, AugmentDetJob,
    AugmentJob, ConfigFile, FillSetting, OccludeJob, PipelineSettings, Preset, DEFAULT_ATTEMPTS,
    DEFAULT_PAD,
};
use erasekit::error::CliError;
use erasekit::pipeline::{run_augment, run_augment_det, run_occlude, run_verify};
use erasekit::validation::{run_validation, SuiteConfig};

/// Deterministic random-erasing augmentation toolkit.
#[derive(Parser)]
#[command(name = "erasekit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Erase randomly placed rectangles across a whole-image corpus.
    Augment(AugmentArgs),
    /// Box-aware erasing over an annotated detection corpus.
    AugmentDet(AugmentDetArgs),
    /// Build occlusion test sets at fixed area levels (no gate).
    Occlude(OccludeArgs),
    /// Run the statistical validation suite and write its JSON report.
    Stats(StatsArgs),
    /// Audit an object-aware run: modified pixels must stay inside boxes.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Input directory (PNG/PPM/PGM) or IDX image file.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Output directory, or IDX file when the input is one.
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// Optional JSON config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Parameter preset to start from.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Probability that an image is erased at all.
    #[arg(long)]
    p: Option<f64>,
    /// Lower bound on erased area as a fraction of the frame.
    #[arg(long)]
    area_min: Option<f64>,
    /// Upper bound on erased area as a fraction of the frame.
    #[arg(long)]
    area_max: Option<f64>,
    /// Lower bound on the erased rectangle's height/width ratio.
    #[arg(long)]
    aspect_min: Option<f64>,
    /// Upper bound on the erased rectangle's height/width ratio.
    #[arg(long)]
    aspect_max: Option<f64>,
    /// Fill law inside the erased rectangle.
    #[arg(long, value_enum)]
    fill: Option<FillSetting>,
    /// Custom constant for --fill mean: V (gray) or R,G,B.
    #[arg(long, value_name = "R,G,B")]
    mean: Option<String>,
    /// Rejection-loop cap per erase.
    #[arg(long, value_name = "N")]
    attempts: Option<u32>,
    /// Global seed; item streams derive from it by index.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count (0 = all cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Manifest path (defaults to manifest.json beside the outputs).
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Flip horizontally with probability 0.5 before erasing.
    #[arg(long)]
    flip: bool,
    /// Zero-pad by --pad and random-crop back to the original size.
    #[arg(long)]
    crop: bool,
    /// Padding margin used by --crop.
    #[arg(long, value_name = "N")]
    pad: Option<u32>,
}

#[derive(Args)]
struct AugmentDetArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Erasing scheme: ire, ore, or i+ore.
    #[arg(long, value_name = "SCHEME")]
    scheme: Option<String>,
    /// Annotation JSON path (defaults to <in>/annotations.json).
    #[arg(long, value_name = "PATH")]
    annotations: Option<PathBuf>,
}

#[derive(Args)]
struct OccludeArgs {
    /// Input directory (PNG/PPM/PGM) or IDX image file.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Output directory, or IDX file when the input is one.
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// Optional JSON config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Occluded-area fraction(s): one value or a comma-separated sweep.
    #[arg(long, value_name = "F[,F...]")]
    level: Option<String>,
    /// Global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count (0 = all cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Manifest path.
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Report output path.
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// Suite seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplier on every check tolerance (diagnostics; 0 forces fails).
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory holding the original images.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Directory holding the erased outputs.
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// Annotation JSON describing the boxes.
    #[arg(long, value_name = "PATH")]
    annotations: PathBuf,
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile, CliError> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn resolve_settings(
    common: &CommonArgs,
    file: &ConfigFile,
    flip: bool,
    crop: bool,
    pad: Option<u32>,
) -> Result<PipelineSettings, CliError> {
    let preset = pick(common.preset, file.preset, Preset::Classification).params();
    let mean_color = match &common.mean {
        Some(s) => Some(parse_mean(s)?),
        None => file.mean.clone(),
    };
    let crop = crop || file.crop.unwrap_or(false);
    let pad_given = pad.is_some() || file.pad.is_some();
    if pad_given && !crop {
        return Err(CliError::Usage("--pad only makes sense with --crop".into()));
    }
    let settings = PipelineSettings {
        p: pick(common.p, file.p, preset.p),
        area_min: pick(common.area_min, file.area_min, preset.area_min),
        area_max: pick(common.area_max, file.area_max, preset.area_max),
        aspect_min: pick(common.aspect_min, file.aspect_min, preset.aspect_min),
        aspect_max: pick(common.aspect_max, file.aspect_max, preset.aspect_max),
        attempts: pick(common.attempts, file.attempts, DEFAULT_ATTEMPTS),
        fill: pick(common.fill, file.fill, FillSetting::Random),
        mean_color,
        flip: flip || file.flip.unwrap_or(false),
        crop,
        pad: pick(pad, file.pad, DEFAULT_PAD),
    };
    settings.validate()?;
    Ok(settings)
}

fn resolve_augment(args: &AugmentArgs) -> Result<AugmentJob, CliError> {
    let file = load_config(&args.common.config)?;
    validate_distinct_paths(&args.common.input, &args.common.output)?;
    let settings = resolve_settings(&args.common, &file, args.flip, args.crop, args.pad)?;
    Ok(AugmentJob {
        input: args.common.input.clone(),
        output: args.common.output.clone(),
        settings,
        seed: pick(args.common.seed, file.seed, 0),
        jobs: pick(args.common.jobs, file.jobs, 0),
        manifest: args.common.manifest.clone().or(file.manifest),
    })
}

fn resolve_augment_det(args: &AugmentDetArgs) -> Result<AugmentDetJob, CliError> {
    let file = load_config(&args.common.config)?;
    validate_distinct_paths(&args.common.input, &args.common.output)?;
    let settings = resolve_settings(&args.common, &file, false, false, None)?;
    if settings.flip || settings.crop {
        return Err(CliError::Usage(
            "flip/crop are not supported for annotated runs: they would detach box coordinates"
                .into(),
        ));
    }
    let scheme_str = args
        .scheme
        .clone()
        .or(file.scheme.clone())
        .unwrap_or_else(|| "ire".into());
    let annotations = args
        .annotations
        .clone()
        .or(file.annotations.clone())
        .unwrap_or_else(|| args.common.input.join("annotations.json"));
    Ok(AugmentDetJob {
        base: AugmentJob {
            input: args.common.input.clone(),
            output: args.common.output.clone(),
            settings,
            seed: pick(args.common.seed, file.seed, 0),
            jobs: pick(args.common.jobs, file.jobs, 0),
            manifest: args.common.manifest.clone().or(file.manifest),
        },
        scheme: parse_scheme(&scheme_str)?,
        annotations,
    })
}

fn resolve_occlude(args: &OccludeArgs) -> Result<OccludeJob, CliError> {
    let file = load_config(&args.config)?;
    validate_distinct_paths(&args.input, &args.output)?;
    let levels = match &args.level {
        Some(s) => parse_levels(s)?,
        None => file
            .level
            .clone()
            .ok_or_else(|| CliError::Usage("occlude requires --level".into()))?,
    };
    for &l in &levels {
        if !(0.0..=1.0).contains(&l) {
            return Err(CliError::Usage(format!(
                "occlusion level {l} outside [0, 1]"
            )));
        }
    }
    Ok(OccludeJob {
        input: args.input.clone(),
        output: args.output.clone(),
        levels,
        seed: pick(args.seed, file.seed, 0),
        jobs: pick(args.jobs, file.jobs, 0),
        manifest: args.manifest.clone().or(file.manifest),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Augment(args) => {
            let job = resolve_augment(&args)?;
            let manifest = run_augment(&job)?;
            report_counters(&manifest.counters)
        }
        Command::AugmentDet(args) => {
            let job = resolve_augment_det(&args)?;
            let manifest = run_augment_det(&job)?;
            report_counters(&manifest.counters)
        }
        Command::Occlude(args) => {
            let job = resolve_occlude(&args)?;
            let manifest = run_occlude(&job)?;
            report_counters(&manifest.counters)
        }
        Command::Stats(args) => {
            let config = SuiteConfig {
                seed: args.seed.unwrap_or_else(|| SuiteConfig::default().seed),
                tolerance_scale: args.tolerance_scale,
            };
            let report = run_validation(&config);
            report.write(&args.output)?;
            for c in &report.checks {
                println!(
                    "{} {} (empirical {:.6}, oracle {:.6}, tolerance {:.6})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.empirical,
                    c.oracle,
                    c.tolerance
                );
            }
            if report.all_pass() {
                Ok(())
            } else {
                Err(CliError::CheckFailure(format!(
                    "{} of {} checks failed",
                    report.checks.iter().filter(|c| !c.pass).count(),
                    report.checks.len()
                )))
            }
        }
        Command::Verify(args) => {
            let (checked, violations) = run_verify(&args.input, &args.output, &args.annotations)?;
            for v in &violations {
                eprintln!("violation in {}: {}", v.image, v.detail);
            }
            if violations.is_empty() {
                println!("verified {checked} image(s): all modifications inside boxes");
                Ok(())
            } else {
                Err(CliError::CheckFailure(format!(
                    "{} of {checked} image(s) violate containment",
                    violations.len()
                )))
            }
        }
    }
}

fn report_counters(counters: &erasekit::manifest::Counters) -> Result<(), CliError> {
    println!(
        "processed {} item(s): {} erased, {} no-fit, {} error(s)",
        counters.processed, counters.erased, counters.nofit, counters.errors
    );
    if counters.errors > 0 {
        Err(CliError::Failure(format!(
            "{} item(s) failed",
            counters.errors
        )))
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
