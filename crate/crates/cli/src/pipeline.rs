//! Batch execution: dataset enumeration, the per-item transform pipeline,
//! deterministic parallelism, and manifest assembly.
//!
//! Output bytes are a pure function of the input bytes, the resolved
//! settings, and the global seed. Each item runs on a stream derived from
//! `(seed, item_index)` where indices follow the lexicographic byte order
//! of input names, so the worker count never changes results. Image and
//! manifest writes go through a temp-file-then-rename, so a killed run
//! never leaves truncated files.

use std::fs;
use std::path::{Path, PathBuf};

use erasekit_core::detection::{
    erase_image_and_objects_traced, erase_image_aware_traced, erase_object_aware_traced,
    AnnotatedImage, Scheme, SchemeTrace,
};
use erasekit_core::sampler::SampleOutcome;
use erasekit_core::transforms::{
    erase_with_trace, occlude_with_trace, random_crop_with_padding, random_flip, EraseTrace,
    OcclusionLevel,
};
use erasekit_core::{derive_seed, Image, RngStream};
use rayon::prelude::*;

use crate::annotations::{self, AnnotationEntry};
use crate::codec::{self, idx, write_atomic, ImageFormat};
use crate::config::{scheme_name, AugmentDetJob, AugmentJob, OccludeJob, PipelineSettings};
use crate::error::CliError;
use crate::manifest::{
    region_array, BoxRecord, Counters, GateRecord, ItemRecord, RunManifest, StageRecord,
};

/// Lists the supported image files in a directory, sorted by the byte
/// order of their names (locale-independent; this order defines item
/// indices and therefore derived seeds).
pub fn enumerate_dir(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let mut items = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let path = entry.path();
        if !ImageFormat::is_supported_path(&path) {
            continue;
        }
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            items.push((name.to_owned(), path));
        }
    }
    items.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
    Ok(items)
}

/// Runs a closure inside a pool of `jobs` workers; 0 means the default
/// pool size.
fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Failure(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// The per-item transform pipeline in its fixed draw order: optional flip,
/// optional pad-and-crop back to the original size, then the gated erase.
pub fn pipeline_one(
    img: &Image,
    settings: &PipelineSettings,
    item_seed: u64,
) -> Result<(Image, EraseTrace), String> {
    let mut rng = RngStream::new(item_seed);
    let mut current = if settings.flip {
        random_flip(img, 0.5, &mut rng)
    } else {
        img.clone()
    };
    if settings.crop {
        current = random_crop_with_padding(&current, settings.pad, img.width(), img.height(), &mut rng)
            .map_err(|e| e.to_string())?;
    }
    let fill = settings.resolve_fill(current.channels())?;
    erase_with_trace(&current, &settings.erase_params(), fill, &mut rng).map_err(|e| e.to_string())
}

fn blank_record(input: String, output: String, item_seed: u64) -> ItemRecord {
    ItemRecord {
        input,
        output,
        item_seed,
        gated: false,
        region: None,
        attempts: 0,
        level: None,
        stages: None,
        error: None,
    }
}

fn apply_erase_trace(record: &mut ItemRecord, trace: &EraseTrace) {
    record.gated = trace.gated;
    record.region = trace.erased_region().map(region_array);
    record.attempts = trace.outcome.map(|o| o.attempts()).unwrap_or(0);
}

fn tally(records: &[ItemRecord]) -> Counters {
    let mut counters = Counters {
        processed: records.len() as u64,
        ..Counters::default()
    };
    for r in records {
        if r.error.is_some() {
            counters.errors += 1;
        }
        let mut erased = r.region.is_some();
        let mut nofit = u64::from(r.gated && r.attempts > 0 && r.region.is_none());
        if let Some(stages) = &r.stages {
            // item-level fields mirror the image stage; only count the
            // object stage on top of them
            for b in &stages.object {
                erased |= b.region.is_some();
                nofit += u64::from(b.gated && b.attempts > 0 && b.region.is_none());
            }
        }
        counters.erased += u64::from(erased);
        counters.nofit += nofit;
    }
    counters
}

/// Default manifest location: `manifest.json` inside a directory output,
/// or `<stem>.manifest.json` next to a single-file output.
pub fn default_manifest_path(output: &Path, output_is_dir: bool) -> PathBuf {
    if output_is_dir {
        output.join("manifest.json")
    } else {
        output.with_extension("manifest.json")
    }
}

fn finish(manifest: RunManifest, path: PathBuf) -> Result<RunManifest, CliError> {
    manifest.write(&path)?;
    Ok(manifest)
}

/// Whole-image augmentation over a directory of PNG/PPM/PGM files or a
/// single IDX image file.
pub fn run_augment(job: &AugmentJob) -> Result<RunManifest, CliError> {
    let records = if job.input.is_dir() {
        let items = enumerate_dir(&job.input)?;
        fs::create_dir_all(&job.output)?;
        with_pool(job.jobs, || {
            items
                .par_iter()
                .enumerate()
                .map(|(i, (name, path))| {
                    let item_seed = derive_seed(job.seed, i as u64);
                    let mut record = blank_record(name.clone(), name.clone(), item_seed);
                    match codec::load_image(path) {
                        Err(e) => record.error = Some(e.to_string()),
                        Ok(img) => match pipeline_one(&img, &job.settings, item_seed) {
                            Err(e) => record.error = Some(e),
                            Ok((out, trace)) => {
                                apply_erase_trace(&mut record, &trace);
                                if let Err(e) = codec::save_image(&job.output.join(name), &out) {
                                    record.error = Some(e.to_string());
                                }
                            }
                        },
                    }
                    record
                })
                .collect::<Vec<_>>()
        })?
    } else {
        let images =
            idx::load_images(&job.input).map_err(|e| CliError::Failure(e.to_string()))?;
        let results: Vec<(ItemRecord, Image)> = with_pool(job.jobs, || {
            images
                .par_iter()
                .enumerate()
                .map(|(i, img)| {
                    let item_seed = derive_seed(job.seed, i as u64);
                    let name = format!("{i:06}");
                    let mut record = blank_record(name.clone(), name, item_seed);
                    match pipeline_one(img, &job.settings, item_seed) {
                        Err(e) => {
                            record.error = Some(e);
                            (record, img.clone())
                        }
                        Ok((out, trace)) => {
                            apply_erase_trace(&mut record, &trace);
                            (record, out)
                        }
                    }
                })
                .collect()
        })?;
        let (records, out_images): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        if let Some(parent) = job.output.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        idx::save_images(&job.output, &out_images)
            .map_err(|e| CliError::Failure(e.to_string()))?;
        records
    };

    let counters = tally(&records);
    let manifest = RunManifest {
        seed: job.seed,
        command: "augment".into(),
        settings: Some(job.settings.clone()),
        scheme: None,
        levels: None,
        items: records,
        counters,
    };
    let path = job
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&job.output, job.input.is_dir()));
    finish(manifest, path)
}

fn scheme_trace_records(trace: &SchemeTrace) -> (Vec<BoxRecord>, Option<GateRecord>) {
    let object = trace
        .object_stage
        .iter()
        .map(|o| {
            let (region, attempts) = match o.outcome {
                Some(SampleOutcome::Accepted { region, attempts }) => {
                    (Some(region_array(region)), attempts)
                }
                Some(SampleOutcome::NoFit { attempts }) => (None, attempts),
                None => (None, 0),
            };
            BoxRecord {
                box_index: o.box_index,
                gated: o.gated,
                region,
                attempts,
            }
        })
        .collect();
    let image = trace.image_stage.as_ref().map(GateRecord::from_trace);
    (object, image)
}

/// Box-aware augmentation: images named by an annotation file, erased
/// under the selected scheme; the annotation file passes through to the
/// output directory byte-identical.
pub fn run_augment_det(job: &AugmentDetJob) -> Result<RunManifest, CliError> {
    let mut entries =
        annotations::load(&job.annotations).map_err(|e| CliError::Failure(e.to_string()))?;
    entries.sort_by(|a, b| a.image.as_bytes().cmp(b.image.as_bytes()));
    fs::create_dir_all(&job.base.output)?;

    let records: Vec<ItemRecord> = with_pool(job.base.jobs, || {
        entries
            .par_iter()
            .enumerate()
            .map(|(i, entry)| process_det_item(job, i, entry))
            .collect()
    })?;

    let ann_bytes = fs::read(&job.annotations)?;
    let ann_name = job
        .annotations
        .file_name()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("annotations.json"));
    write_atomic(&job.base.output.join(ann_name), &ann_bytes)?;

    let counters = tally(&records);
    let manifest = RunManifest {
        seed: job.base.seed,
        command: "augment-det".into(),
        settings: Some(job.base.settings.clone()),
        scheme: Some(scheme_name(job.scheme).into()),
        levels: None,
        items: records,
        counters,
    };
    let path = job
        .base
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&job.base.output, true));
    finish(manifest, path)
}

fn process_det_item(job: &AugmentDetJob, index: usize, entry: &AnnotationEntry) -> ItemRecord {
    let item_seed = derive_seed(job.base.seed, index as u64);
    let mut record = blank_record(entry.image.clone(), entry.image.clone(), item_seed);
    let path = job.base.input.join(&entry.image);
    let img = match codec::load_image(&path) {
        Ok(img) => img,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let boxes = entry.boxes.iter().map(|b| b.to_bbox()).collect();
    let ann = match AnnotatedImage::new(img, boxes) {
        Ok(ann) => ann,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let fill = match job.base.settings.resolve_fill(ann.image.channels()) {
        Ok(fill) => fill,
        Err(e) => {
            record.error = Some(e);
            return record;
        }
    };
    let params = job.base.settings.erase_params();
    let mut rng = RngStream::new(item_seed);
    let result = match job.scheme {
        Scheme::ImageAware => erase_image_aware_traced(&ann, &params, fill, &mut rng),
        Scheme::ObjectAware => erase_object_aware_traced(&ann, &params, fill, &mut rng),
        Scheme::ImageAndObject => erase_image_and_objects_traced(&ann, &params, fill, &mut rng),
    };
    match result {
        Err(e) => record.error = Some(e.to_string()),
        Ok((out, trace)) => {
            let (object, image) = scheme_trace_records(&trace);
            if let Some(image_stage) = &image {
                record.gated = image_stage.gated;
                record.region = image_stage.region;
                record.attempts = image_stage.attempts;
            } else {
                record.gated = object.iter().any(|b| b.gated);
            }
            record.stages = Some(StageRecord { object, image });
            if let Err(e) = codec::save_image(&job.base.output.join(&entry.image), &out.image) {
                record.error = Some(e.to_string());
            }
        }
    }
    record
}

/// Test-time occlusion: every image occluded (no gate) at each requested
/// level. Multiple levels write sibling output sets (`l<level>/`
/// subdirectories, or `-l<level>` file suffixes in IDX mode), and item
/// indices run level-major so every (level, image) pair has its own
/// derived stream.
pub fn run_occlude(job: &OccludeJob) -> Result<RunManifest, CliError> {
    let multi = job.levels.len() > 1;
    let records = if job.input.is_dir() {
        let items = enumerate_dir(&job.input)?;
        let mut level_dirs = Vec::new();
        for &level in &job.levels {
            let dir = if multi {
                job.output.join(format!("l{level}"))
            } else {
                job.output.clone()
            };
            fs::create_dir_all(&dir)?;
            level_dirs.push(dir);
        }
        let mut work: Vec<(usize, f64, &Path, &String, &PathBuf)> = Vec::new();
        for (li, &level) in job.levels.iter().enumerate() {
            for (ii, (name, path)) in items.iter().enumerate() {
                work.push((li * items.len() + ii, level, level_dirs[li].as_path(), name, path));
            }
        }
        with_pool(job.jobs, || {
            work.par_iter()
                .map(|&(index, level, dir, name, path)| {
                    let item_seed = derive_seed(job.seed, index as u64);
                    let output_name = if multi {
                        format!("l{level}/{name}")
                    } else {
                        name.clone()
                    };
                    let mut record = blank_record(name.clone(), output_name, item_seed);
                    record.level = Some(level);
                    match codec::load_image(path) {
                        Err(e) => record.error = Some(e.to_string()),
                        Ok(img) => {
                            let mut rng = RngStream::new(item_seed);
                            let level = OcclusionLevel::new(level)
                                .expect("levels validated at parse time");
                            let (out, trace) = occlude_with_trace(&img, level, &mut rng);
                            if let Some(t) = trace {
                                record.gated = true;
                                record.region = Some(region_array(t.region));
                                record.attempts = t.attempts;
                            }
                            if let Err(e) = codec::save_image(&dir.join(name), &out) {
                                record.error = Some(e.to_string());
                            }
                        }
                    }
                    record
                })
                .collect::<Vec<_>>()
        })?
    } else {
        let images =
            idx::load_images(&job.input).map_err(|e| CliError::Failure(e.to_string()))?;
        if let Some(parent) = job.output.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let mut all_records = Vec::new();
        for (li, &level) in job.levels.iter().enumerate() {
            let results: Vec<(ItemRecord, Image)> = with_pool(job.jobs, || {
                images
                    .par_iter()
                    .enumerate()
                    .map(|(ii, img)| {
                        let index = li * images.len() + ii;
                        let item_seed = derive_seed(job.seed, index as u64);
                        let name = format!("{ii:06}");
                        let output_name = if multi {
                            format!("l{level}/{ii:06}")
                        } else {
                            name.clone()
                        };
                        let mut record = blank_record(name, output_name, item_seed);
                        record.level = Some(level);
                        let mut rng = RngStream::new(item_seed);
                        let lv =
                            OcclusionLevel::new(level).expect("levels validated at parse time");
                        let (out, trace) = occlude_with_trace(img, lv, &mut rng);
                        if let Some(t) = trace {
                            record.gated = true;
                            record.region = Some(region_array(t.region));
                            record.attempts = t.attempts;
                        }
                        (record, out)
                    })
                    .collect()
            })?;
            let (records, out_images): (Vec<_>, Vec<_>) = results.into_iter().unzip();
            let target = if multi {
                level_suffixed_path(&job.output, level)
            } else {
                job.output.clone()
            };
            idx::save_images(&target, &out_images)
                .map_err(|e| CliError::Failure(e.to_string()))?;
            all_records.extend(records);
        }
        all_records
    };

    let counters = tally(&records);
    let manifest = RunManifest {
        seed: job.seed,
        command: "occlude".into(),
        settings: None,
        scheme: None,
        levels: Some(job.levels.clone()),
        items: records,
        counters,
    };
    let path = job
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&job.output, job.input.is_dir()));
    finish(manifest, path)
}

/// `out.idx` at level 0.3 becomes `out-l0.3.idx`.
fn level_suffixed_path(output: &Path, level: f64) -> PathBuf {
    let stem = output
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("occluded");
    let name = match output.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-l{level}.{ext}"),
        None => format!("{stem}-l{level}"),
    };
    output.with_file_name(name)
}

/// One containment violation found by [`run_verify`].
#[derive(Debug)]
pub struct Violation {
    pub image: String,
    pub detail: String,
}

/// Audits an object-aware run: every pixel that differs between the
/// original and erased image must lie inside one of that image's annotated
/// boxes.
pub fn run_verify(
    input: &Path,
    erased: &Path,
    annotations_path: &Path,
) -> Result<(u64, Vec<Violation>), CliError> {
    let entries =
        annotations::load(annotations_path).map_err(|e| CliError::Failure(e.to_string()))?;
    let mut violations = Vec::new();
    let mut checked = 0u64;
    for entry in &entries {
        let orig = codec::load_image(&input.join(&entry.image))
            .map_err(|e| CliError::Failure(format!("{}: {e}", entry.image)))?;
        let out = codec::load_image(&erased.join(&entry.image))
            .map_err(|e| CliError::Failure(format!("{}: {e}", entry.image)))?;
        checked += 1;
        if orig.width() != out.width()
            || orig.height() != out.height()
            || orig.channels() != out.channels()
        {
            violations.push(Violation {
                image: entry.image.clone(),
                detail: "image shape changed".into(),
            });
            continue;
        }
        'pixels: for y in 0..orig.height() {
            for x in 0..orig.width() {
                let differs =
                    (0..orig.channels().count()).any(|c| orig.sample(x, y, c) != out.sample(x, y, c));
                if differs
                    && !entry
                        .boxes
                        .iter()
                        .any(|b| b.to_bbox().region.contains(x, y))
                {
                    violations.push(Violation {
                        image: entry.image.clone(),
                        detail: format!("pixel ({x},{y}) modified outside all boxes"),
                    });
                    break 'pixels;
                }
            }
        }
    }
    Ok((checked, violations))
}
