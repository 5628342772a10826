//! IoU, detection probability and false-alarm rate for a batch of
//! predictions against ground truth.

use mclc::metrics::{compute_pd_fa, DEFAULT_MATCH_RADIUS};
use mclc::pipeline::{evaluate, recover_all, LabeledImage};
use mclc::synth::standard_corpus;
use mclc::MclcParams;

fn main() -> mclc::Result<()> {
    let images: Vec<LabeledImage> = standard_corpus()
        .iter()
        .take(6)
        .map(LabeledImage::from)
        .collect();
    let params = MclcParams::default().with_fixed_runs(30);
    let results = recover_all(&images, |_| params.clone(), None)?;

    let ids: Vec<String> = results.iter().map(|r| r.id.clone()).collect();
    let preds: Vec<_> = results.iter().map(|r| r.merged.clone()).collect();
    let gts: Vec<_> = images.iter().map(|i| i.gt.clone().unwrap()).collect();
    for (id, (p, g)) in ids.iter().zip(preds.iter().zip(&gts)) {
        let d = compute_pd_fa(p, g, DEFAULT_MATCH_RADIUS)?;
        println!(
            "{id}: Pd {:.2}, Fa {:.2e}, {} px predicted",
            d.pd,
            d.fa,
            p.count()
        );
    }
    let summary = evaluate(&ids, &preds, &gts, DEFAULT_MATCH_RADIUS)?;
    print!("{}", summary.report.to_table());
    println!("mean per-image IoU {:.4}", summary.mean_image_iou);
    Ok(())
}
