//! Recover a pseudo mask for one labeled target: Monte Carlo clustering,
//! then thresholding and CRF refinement, written out as PNGs.
//!
//! ```text
//! cargo run --release --example recover_target [out_dir]
//! ```

use std::path::PathBuf;

use mclc::imaging::save_mask_png;
use mclc::metrics::compute_iou;
use mclc::monte_carlo::{binarize, run_mclc};
use mclc::refine::refine_tpm;
use mclc::synth::{corpus_spec, generate_scene};
use mclc::{CrfParams, MclcParams};

fn main() -> mclc::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("mclc-recover"));
    std::fs::create_dir_all(&out).map_err(|e| mclc::Error::io(&out, e))?;

    let scene = generate_scene(&corpus_spec(1))?;
    let anno = &scene.annotations[0];
    let params = MclcParams::default();
    let tpm = run_mclc(&scene.image, anno, &params)?;
    println!(
        "{} target at ({}, {}): {} runs",
        scene.id,
        anno.x,
        anno.y,
        tpm.runs_accumulated()
    );

    let thresholded = binarize(&tpm, params.binarize_threshold, anno)?;
    let refined = refine_tpm(&scene.image, &tpm, anno, &CrfParams::default())?;
    let truth = &scene.target_masks[0];
    println!(
        "thresholded: {:4} px, IoU {:.3}",
        thresholded.count(),
        compute_iou(&thresholded, truth)?
    );
    println!(
        "refined:     {:4} px, IoU {:.3}",
        refined.count(),
        compute_iou(&refined, truth)?
    );

    save_mask_png(&scene.image, out.join("image.png"))?;
    save_mask_png(&tpm, out.join("tpm.png"))?;
    save_mask_png(&refined, out.join("mask.png"))?;
    println!("wrote {}", out.display());
    Ok(())
}
