//! The `mclc` command line: `recover`, `eval`, `sweep`, `synth`, `render`.
//!
//! Log verbosity comes from `MCLC_LOG` (`error`, `warn`, `info`, `debug`,
//! or any `env_logger` filter); the default is `warn`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::annotation::TargetCategory;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::imaging::{load_image, load_mask, save_heatmap_png, save_mask_png};
use crate::manifest::{DatasetManifest, ManifestAnnotation, ManifestEntry};
use crate::monte_carlo::MclcParams;
use crate::pipeline::{self, LabeledImage, SweepAxis};
use crate::plot::save_line_plot;
use crate::refine::CrfParams;
use crate::synth::standard_corpus;

#[derive(Debug, Parser)]
#[command(
    name = "mclc",
    version,
    about = "Pseudo masks for infrared small targets from point labels"
)]
pub struct Cli {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base noise seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (overrides the config).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Skip CRF refinement and threshold the probability map instead.
    #[arg(long, global = true)]
    pub no_crf: bool,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover masks for every labeled target in a manifest.
    Recover { manifest: PathBuf },
    /// Score predicted masks against the manifest's ground truth.
    Eval {
        manifest: PathBuf,
        /// Directory holding `<image>_mask.png`; defaults to the output directory.
        #[arg(long)]
        pred: Option<PathBuf>,
    },
    /// Recover and evaluate once per value of one parameter.
    Sweep {
        manifest: PathBuf,
        /// noise-type, noise-intensity, cluster-count, label-deviation or binarize-threshold
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Write the built-in synthetic corpus with ground truth and a manifest.
    Synth,
    /// Plot a sweep CSV, or colour a probability-map PNG as a heatmap.
    Render { input: PathBuf },
}

/// Per-target provenance, enough to re-run that target alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub image: PathBuf,
    pub x: usize,
    pub y: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<TargetCategory>,
    pub seed: u64,
    pub runs: u32,
    pub params: MclcParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crf: Option<CrfParams>,
    pub wall_time_s: f64,
    pub tpm: PathBuf,
    pub mask: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image: PathBuf,
    pub mask: PathBuf,
    pub targets: Vec<TargetRecord>,
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("MCLC_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_from_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(errors) => {
            for e in &errors {
                eprintln!("error: {e}");
            }
            1
        }
    }
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.mclc.noise.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if cli.no_crf {
        cfg.crf = None;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command; on failure returns every error encountered.
pub fn run(cli: Cli) -> std::result::Result<(), Vec<Error>> {
    let cfg = resolve_config(&cli).map_err(|e| vec![e])?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| vec![Error::Config(e.to_string())])?;
    pool.install(|| match &cli.command {
        Command::Recover { manifest } => cmd_recover(manifest, &cfg),
        Command::Eval { manifest, pred } => {
            let pred = pred.clone().unwrap_or_else(|| cfg.output_dir.clone());
            cmd_eval(manifest, &pred, &cfg).map_err(|e| vec![e])
        }
        Command::Sweep {
            manifest,
            axis,
            values,
        } => cmd_sweep(manifest, &cfg, *axis, values).map_err(|e| vec![e]),
        Command::Synth => cmd_synth(&cfg.output_dir).map_err(|e| vec![e]),
        Command::Render { input } => cmd_render(input, cli.out.as_deref()).map_err(|e| vec![e]),
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Loads every entry that passes the manifest checks; problems with the
/// others are returned alongside.
fn load_entries(
    manifest: &DatasetManifest,
    need_gt: bool,
) -> (Vec<(ManifestEntry, LabeledImage)>, Vec<Error>) {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for entry in &manifest.entries {
        let loaded = manifest.check_entry(entry).and_then(|()| {
            let image = load_image(manifest.image_path(entry))?;
            let gt = match manifest.gt_path(entry) {
                Some(p) => Some(load_mask(p)?),
                None if need_gt => {
                    return Err(Error::MissingGroundTruth(
                        entry.image_path.display().to_string(),
                    ))
                }
                None => None,
            };
            Ok(LabeledImage {
                id: entry.id(),
                image,
                annotations: entry.point_annotations(),
                gt,
            })
        });
        match loaded {
            Ok(li) => ok.push((entry.clone(), li)),
            Err(e) => errors.push(e),
        }
    }
    (ok, errors)
}

pub fn cmd_recover(manifest_path: &Path, cfg: &RunConfig) -> std::result::Result<(), Vec<Error>> {
    let manifest = DatasetManifest::load(manifest_path).map_err(|e| vec![e])?;
    let (entries, mut errors) = load_entries(&manifest, false);
    let out = &cfg.output_dir;
    create_dir(out).map_err(|e| vec![e])?;
    let images: Vec<LabeledImage> = entries.iter().map(|e| e.1.clone()).collect();
    let results =
        match pipeline::recover_all(&images, |a| cfg.params_for(a.category), cfg.crf.as_ref()) {
            Ok(r) => r,
            Err(e) => {
                errors.push(e);
                return Err(errors);
            }
        };
    for ((entry, _), res) in entries.iter().zip(&results) {
        if let Err(e) = write_image_outputs(&manifest, entry, res, cfg) {
            errors.push(e);
        }
    }
    log::info!(
        "recovered {} targets in {} images",
        results.iter().map(|r| r.targets.len()).sum::<usize>(),
        results.len()
    );
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn write_image_outputs(
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    res: &pipeline::ImageResult,
    cfg: &RunConfig,
) -> Result<()> {
    let out = &cfg.output_dir;
    let id = entry.id();
    let mut targets = Vec::with_capacity(res.targets.len());
    for (k, t) in res.targets.iter().enumerate() {
        let tpm = PathBuf::from(format!("{id}_t{k}_tpm.png"));
        let mask = PathBuf::from(format!("{id}_t{k}_target.png"));
        save_mask_png(&t.tpm, out.join(&tpm))?;
        save_mask_png(&t.mask, out.join(&mask))?;
        let params = cfg.params_for(t.annotation.category);
        targets.push(TargetRecord {
            image: manifest.image_path(entry),
            x: t.annotation.x,
            y: t.annotation.y,
            category: t.annotation.category,
            seed: params.noise.seed,
            runs: t.tpm.runs_accumulated(),
            params,
            crf: cfg.crf.clone(),
            wall_time_s: t.wall_time_s,
            tpm,
            mask,
            note: t.note.clone(),
        });
    }
    let mask = PathBuf::from(format!("{id}_mask.png"));
    save_mask_png(&res.merged, out.join(&mask))?;
    write_json(
        &out.join(format!("{id}.json")),
        &ImageRecord {
            image: manifest.image_path(entry),
            mask,
            targets,
        },
    )
}

pub fn cmd_eval(manifest_path: &Path, pred_dir: &Path, cfg: &RunConfig) -> Result<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let mut ids = Vec::new();
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for entry in &manifest.entries {
        let gt = manifest
            .gt_path(entry)
            .ok_or_else(|| Error::MissingGroundTruth(entry.image_path.display().to_string()))?;
        let pred = pred_dir.join(format!("{}_mask.png", entry.id()));
        if !pred.is_file() {
            return Err(Error::io(&pred, "prediction not found"));
        }
        ids.push(entry.id());
        preds.push(load_mask(&pred)?);
        gts.push(load_mask(&gt)?);
    }
    let summary = pipeline::evaluate(&ids, &preds, &gts, cfg.metrics.match_radius)?;
    let table = format!(
        "{}mean per-image IoU: {:.4}\n",
        summary.report.to_table(),
        summary.mean_image_iou
    );
    print!("{table}");
    create_dir(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("eval.txt"), &table)
        .map_err(|e| Error::io(cfg.output_dir.join("eval.txt"), e))?;
    write_json(&cfg.output_dir.join("eval.json"), &summary)
}

pub fn cmd_sweep(
    manifest_path: &Path,
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[String],
) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParams("--values is empty".into()));
    }
    let manifest = DatasetManifest::load(manifest_path)?;
    let (entries, errors) = load_entries(&manifest, true);
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    let images: Vec<LabeledImage> = entries.into_iter().map(|e| e.1).collect();
    let rows = pipeline::sweep(
        &images,
        &cfg.mclc,
        cfg.crf.as_ref(),
        cfg.metrics.match_radius,
        axis,
        values,
    )?;
    create_dir(&cfg.output_dir)?;
    let name = serde_json::to_value(axis)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| "sweep".into());
    let csv_path = cfg.output_dir.join(format!("sweep_{name}.csv"));
    let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    pipeline::write_sweep_csv(&rows, file)?;
    let points: Vec<(String, f64)> = rows.iter().map(|r| (r.value.clone(), r.iou)).collect();
    save_line_plot(&points, cfg.output_dir.join(format!("sweep_{name}.png")))?;
    for r in &rows {
        println!("{}\t{:.4}\t{:.4}\t{:.3e}", r.value, r.iou, r.pd, r.fa);
    }
    Ok(())
}

/// Writes `scene_NNN.png`, `scene_NNN_gt.png` and `manifest.json`.
pub fn cmd_synth(out: &Path) -> Result<()> {
    create_dir(out)?;
    let mut entries = Vec::new();
    for scene in standard_corpus() {
        let image_path = PathBuf::from(format!("{}.png", scene.id));
        let gt_path = PathBuf::from(format!("{}_gt.png", scene.id));
        save_mask_png(&scene.image, out.join(&image_path))?;
        save_mask_png(&scene.gt_mask, out.join(&gt_path))?;
        entries.push(ManifestEntry {
            image_path,
            annotations: scene
                .annotations
                .iter()
                .map(|a| ManifestAnnotation {
                    x: a.x,
                    y: a.y,
                    category: a.category,
                })
                .collect(),
            gt_mask_path: Some(gt_path),
        });
    }
    DatasetManifest {
        root: out.to_path_buf(),
        entries,
    }
    .save(out.join("manifest.json"))
}

/// `.csv` input: line plot of the `iou` column. Anything else: an 8-bit
/// grayscale image rendered as a heatmap.
pub fn cmd_render(input: &Path, out: Option<&Path>) -> Result<()> {
    let is_csv = input
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let default_out = input.with_extension(if is_csv { "png" } else { "heat.png" });
    let out = out.map(Path::to_path_buf).unwrap_or(default_out);
    if is_csv {
        let mut rdr = csv::Reader::from_path(input).map_err(|e| Error::io(input, e))?;
        let mut points = Vec::new();
        for rec in rdr.deserialize::<(String, f64, f64, f64)>() {
            let (value, iou, _, _) = rec.map_err(|e| Error::io(input, e))?;
            points.push((value, iou));
        }
        save_line_plot(&points, &out)
    } else {
        let img = load_image(input)?;
        save_heatmap_png(&img, &out)
    }
}
