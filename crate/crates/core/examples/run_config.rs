//! Writing and reading a run configuration, per-category presets, and a
//! manifest parsed from JSON.

use mclc::annotation::TargetCategory;
use mclc::config::RunConfig;
use mclc::manifest::DatasetManifest;

const MANIFEST: &str = r#"{
  "entries": [
    {
      "image_path": "images/0001.png",
      "annotations": [{ "x": 120, "y": 64, "category": "spot" }, { "x": 30, "y": 200 }],
      "gt_mask_path": "masks/0001.png"
    }
  ]
}"#;

fn main() -> mclc::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.mclc.noise.intensity = 0.05;
    cfg.jobs = 2;
    cfg.category_clusters.insert(TargetCategory::Extended, 4);
    let dir = std::env::temp_dir().join("mclc-config");
    std::fs::create_dir_all(&dir).map_err(|e| mclc::Error::io(&dir, e))?;
    let path = dir.join("run.toml");
    cfg.save(&path)?;
    println!(
        "{}",
        std::fs::read_to_string(&path).map_err(|e| mclc::Error::io(&path, e))?
    );

    let back = RunConfig::load(&path)?;
    assert_eq!(back, cfg);
    println!(
        "extended targets use {} clusters",
        back.params_for(Some(TargetCategory::Extended))
            .cluster
            .n_clusters
    );
    println!(
        "unlabeled targets use {} clusters",
        back.params_for(None).cluster.n_clusters
    );

    let m = DatasetManifest::from_json(MANIFEST, "/data/sirst")?;
    for e in &m.entries {
        println!(
            "{} -> {} labels, image {}",
            e.id(),
            e.annotations.len(),
            m.image_path(e).display()
        );
    }
    Ok(())
}
