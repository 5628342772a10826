//! The three perturbation models and how strongly each one moves dim
//! background and bright target pixels.

use mclc::imaging::{add_noise, NoiseSpec};
use mclc::synth::{corpus_spec, generate_scene};

fn main() -> mclc::Result<()> {
    let scene = generate_scene(&corpus_spec(1))?;
    let data = scene.image.data();
    let bright: Vec<usize> = (0..data.len())
        .filter(|&i| scene.gt_mask.data()[i])
        .collect();
    let dim: Vec<usize> = (0..data.len())
        .filter(|&i| !scene.gt_mask.data()[i])
        .collect();
    for spec in [
        NoiseSpec::salt(0.05, 1),
        NoiseSpec::pepper(0.05, 1),
        NoiseSpec::gaussian(20.0, 1),
    ] {
        let noisy = add_noise(&scene.image, &spec)?;
        let shift = |idx: &[usize]| {
            idx.iter()
                .map(|&i| (noisy.data()[i] - data[i]).abs())
                .sum::<f64>()
                / idx.len() as f64
        };
        let changed = data
            .iter()
            .zip(noisy.data())
            .filter(|(a, b)| a != b)
            .count();
        println!(
            "{:?} {:>5}: {changed:6} px changed, mean |shift| background {:6.2}, target {:6.2}",
            spec.kind,
            spec.intensity,
            shift(&dim),
            shift(&bright)
        );
    }
    Ok(())
}
