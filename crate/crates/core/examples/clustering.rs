//! One clustering pass on its own: grid seeding, the iteration trace, and
//! the region that the label falls into.

use mclc::clustering::{
    extract_target_cluster, grid_interval, run_lca_traced, Backend, ClusterParams,
};
use mclc::synth::{corpus_spec, generate_scene};

fn main() -> mclc::Result<()> {
    let scene = generate_scene(&corpus_spec(7))?;
    let anno = &scene.annotations[0];
    for (backend, n_clusters) in [
        (Backend::SlicLike, 4),
        (Backend::SlicLike, 9),
        (Backend::SlicLike, 25),
        (Backend::KMeans, 9),
    ] {
        let params = ClusterParams {
            backend,
            n_clusters,
            ..ClusterParams::default()
        };
        let (field, trace) = run_lca_traced(&scene.image, &params)?;
        println!(
            "{backend:?} N = {n_clusters}: S = {:.2}, {} updates, converged {}",
            grid_interval(256, 256, params.n_clusters),
            field.iterations_run,
            field.converged
        );
        for (i, step) in trace.iter().enumerate() {
            let c = step.centers[field.label_at(anno.x, anno.y) as usize];
            println!(
                "  step {i}: label cluster at ({:6.2}, {:6.2}) intensity {:6.2}",
                c.x, c.y, c.c
            );
        }
        let region = extract_target_cluster(&field, anno)?;
        println!(
            "  label region: {} px (target is {} px)",
            region.count(),
            scene.target_masks[0].count()
        );
    }
    Ok(())
}
