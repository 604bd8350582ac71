//! Job configuration: built-in presets, an optional JSON config file, and
//! command-line flags, merged in that order (flags override the file,
//! the file overrides the preset). Invalid combinations are rejected
//! before any I/O happens.

use std::fs;
use std::path::{Path, PathBuf};

use erasekit_core::detection::Scheme;
use erasekit_core::sampler::DEFAULT_MAX_ATTEMPTS;
use erasekit_core::transforms::OcclusionLevel;
use erasekit_core::{Channels, Color, EraseParams, FillMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Parameter presets mirroring the two standard usages: classification
/// (larger maximum erased area) and detection / re-identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Classification,
    Detection,
}

impl Preset {
    pub fn params(self) -> EraseParams {
        match self {
            Preset::Classification => EraseParams::classification(),
            Preset::Detection => EraseParams::detection(),
        }
    }
}

/// Fill-mode selector; `mean` uses the built-in mean constant unless a
/// custom color is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FillSetting {
    Random,
    Mean,
    Zero,
    Max,
}

/// Everything the per-item pipeline needs, fully resolved. Embedded in
/// run manifests so items can be replayed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PipelineSettings {
    pub p: f64,
    pub area_min: f64,
    pub area_max: f64,
    pub aspect_min: f64,
    pub aspect_max: f64,
    pub attempts: u32,
    pub fill: FillSetting,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_color: Option<Vec<u8>>,
    pub flip: bool,
    pub crop: bool,
    pub pad: u32,
}

impl PipelineSettings {
    pub fn erase_params(&self) -> EraseParams {
        EraseParams {
            p: self.p,
            area_min: self.area_min,
            area_max: self.area_max,
            aspect_min: self.aspect_min,
            aspect_max: self.aspect_max,
            max_attempts: self.attempts,
        }
    }

    /// Resolves the fill mode against a concrete image layout. A custom
    /// mean color whose arity does not match the image is a per-item
    /// error, reported as a string for the manifest.
    pub fn resolve_fill(&self, channels: Channels) -> Result<FillMode, String> {
        Ok(match self.fill {
            FillSetting::Random => FillMode::RandomPerPixel,
            FillSetting::Zero => FillMode::Zero,
            FillSetting::Max => FillMode::Max,
            FillSetting::Mean => match &self.mean_color {
                None => FillMode::default_mean(channels),
                Some(c) => match (c.as_slice(), channels) {
                    ([v], Channels::Gray) => FillMode::ConstantMean(Color::Gray(*v)),
                    ([r, g, b], Channels::Rgb) => {
                        FillMode::ConstantMean(Color::Rgb([*r, *g, *b]))
                    }
                    _ => {
                        return Err(format!(
                            "mean color has {} component(s) but the image has {}",
                            c.len(),
                            channels.count()
                        ))
                    }
                },
            },
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.erase_params()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(c) = &self.mean_color {
            if c.len() != 1 && c.len() != 3 {
                return Err(CliError::Usage(
                    "--mean takes one value (gray) or three (R,G,B)".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Optional JSON config file; every field mirrors a flag. Unknown keys are
/// rejected so typos cannot silently fall back to defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<Preset>,
    pub p: Option<f64>,
    pub area_min: Option<f64>,
    pub area_max: Option<f64>,
    pub aspect_min: Option<f64>,
    pub aspect_max: Option<f64>,
    pub fill: Option<FillSetting>,
    pub mean: Option<Vec<u8>>,
    pub flip: Option<bool>,
    pub crop: Option<bool>,
    pub pad: Option<u32>,
    pub seed: Option<u64>,
    pub attempts: Option<u32>,
    pub jobs: Option<usize>,
    pub scheme: Option<String>,
    pub level: Option<Vec<f64>>,
    pub annotations: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    match s {
        "ire" => Ok(Scheme::ImageAware),
        "ore" => Ok(Scheme::ObjectAware),
        "i+ore" => Ok(Scheme::ImageAndObject),
        other => Err(CliError::Usage(format!(
            "unknown scheme '{other}' (expected ire, ore, or i+ore)"
        ))),
    }
}

pub fn scheme_name(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::ImageAware => "ire",
        Scheme::ObjectAware => "ore",
        Scheme::ImageAndObject => "i+ore",
    }
}

/// Parses `--level`: one value or a comma-separated sweep.
pub fn parse_levels(s: &str) -> Result<Vec<f64>, CliError> {
    let levels: Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let levels =
        levels.map_err(|e| CliError::Usage(format!("invalid --level value '{s}': {e}")))?;
    if levels.is_empty() {
        return Err(CliError::Usage("--level requires at least one value".into()));
    }
    for &l in &levels {
        OcclusionLevel::new(l).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(levels)
}

/// Parses `--mean`: `V` for grayscale or `R,G,B` for color.
pub fn parse_mean(s: &str) -> Result<Vec<u8>, CliError> {
    let comps: Result<Vec<u8>, _> = s.split(',').map(|v| v.trim().parse::<u8>()).collect();
    let comps = comps.map_err(|e| CliError::Usage(format!("invalid --mean value '{s}': {e}")))?;
    if comps.len() != 1 && comps.len() != 3 {
        return Err(CliError::Usage(
            "--mean takes one value (gray) or three (R,G,B)".into(),
        ));
    }
    Ok(comps)
}

/// A fully resolved augmentation job.
#[derive(Debug, Clone)]
pub struct AugmentJob {
    pub input: PathBuf,
    pub output: PathBuf,
    pub settings: PipelineSettings,
    pub seed: u64,
    pub jobs: usize,
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct AugmentDetJob {
    pub base: AugmentJob,
    pub scheme: Scheme,
    pub annotations: PathBuf,
}

#[derive(Debug, Clone)]
pub struct OccludeJob {
    pub input: PathBuf,
    pub output: PathBuf,
    pub levels: Vec<f64>,
    pub seed: u64,
    pub jobs: usize,
    pub manifest: Option<PathBuf>,
}

pub const DEFAULT_ATTEMPTS: u32 = DEFAULT_MAX_ATTEMPTS;
pub const DEFAULT_PAD: u32 = 4;

/// Shared three-way merge helper: flag beats config file beats default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn validate_distinct_paths(input: &Path, output: &Path) -> Result<(), CliError> {
    if input == output {
        return Err(CliError::Usage(
            "--in and --out must be distinct paths".into(),
        ));
    }
    Ok(())
}
