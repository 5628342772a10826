//! Dense CRF refinement of a probability map on every target of a few
//! scenes, with the mean-field free energy of one window.

use mclc::metrics::compute_iou;
use mclc::monte_carlo::{binarize, run_mclc, Domain};
use mclc::refine::{mean_field, refine_tpm};
use mclc::synth::{corpus_spec, generate_scene};
use mclc::{CrfParams, MclcParams};

fn main() -> mclc::Result<()> {
    let params = MclcParams::default();
    let crf = CrfParams::default();
    for seed in 1..=4 {
        let scene = generate_scene(&corpus_spec(seed))?;
        for (anno, truth) in scene.annotations.iter().zip(&scene.target_masks) {
            let tpm = run_mclc(&scene.image, anno, &params)?;
            let before =
                binarize(&tpm, params.binarize_threshold, anno).map(|m| compute_iou(&m, truth));
            let after = refine_tpm(&scene.image, &tpm, anno, &crf).map(|m| compute_iou(&m, truth));
            println!(
                "{} ({:3}, {:3}) {:?}: IoU {:.3} -> {:.3}",
                scene.id,
                anno.x,
                anno.y,
                anno.category.unwrap(),
                before.and_then(|r| r).unwrap_or(0.0),
                after.and_then(|r| r).unwrap_or(0.0)
            );
        }
    }

    let scene = generate_scene(&corpus_spec(7))?;
    let anno = &scene.annotations[0];
    let tpm = run_mclc(&scene.image, anno, &params)?;
    let d = Domain::around(&scene.image, anno, Some(crf.window_radius));
    let mut c = Vec::new();
    let mut p = Vec::new();
    for y in d.y0..d.y0 + d.height {
        for x in d.x0..d.x0 + d.width {
            c.push(scene.image.get(x, y));
            p.push(tpm.prob(x, y));
        }
    }
    let mf = mean_field(d.width, d.height, &c, &p, &crf)?;
    let energies: Vec<String> = mf.free_energy.iter().map(|e| format!("{e:.1}")).collect();
    println!("free energy per iteration: {}", energies.join(" "));
    Ok(())
}
