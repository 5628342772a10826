//! A salt-intensity sweep over part of the corpus, written as CSV plus a
//! line plot.
//!
//! ```text
//! cargo run --release --example sweep [out_dir]
//! ```

use std::path::PathBuf;

use mclc::metrics::DEFAULT_MATCH_RADIUS;
use mclc::pipeline::{sweep, write_sweep_csv, LabeledImage, SweepAxis};
use mclc::plot::save_line_plot;
use mclc::synth::standard_corpus;
use mclc::MclcParams;

fn main() -> mclc::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("mclc-sweep"));
    std::fs::create_dir_all(&out).map_err(|e| mclc::Error::io(&out, e))?;

    let images: Vec<LabeledImage> = standard_corpus()
        .iter()
        .take(8)
        .map(LabeledImage::from)
        .collect();
    let values: Vec<String> = ["0", "0.02", "0.05", "0.1", "0.3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let base = MclcParams::default().with_fixed_runs(40);
    let rows = sweep(
        &images,
        &base,
        None,
        DEFAULT_MATCH_RADIUS,
        SweepAxis::NoiseIntensity,
        &values,
    )?;
    for r in &rows {
        println!(
            "salt {:>5}: IoU {:.4}  Pd {:.3}  Fa {:.2e}",
            r.value, r.iou, r.pd, r.fa
        );
    }

    let csv = out.join("salt.csv");
    let file = std::fs::File::create(&csv).map_err(|e| mclc::Error::io(&csv, e))?;
    write_sweep_csv(&rows, file)?;
    let points: Vec<(String, f64)> = rows.iter().map(|r| (r.value.clone(), r.iou)).collect();
    save_line_plot(&points, out.join("salt.png"))?;
    println!("wrote {}", out.display());
    Ok(())
}
