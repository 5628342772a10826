//! Invariant checks shared by the property tests and the acceptance run.
//! Each check returns a short summary on success and the failure otherwise.

use mclc::annotation::{PointAnnotation, TargetCategory};
use mclc::clustering::{distance, grid_interval, run_lca, run_lca_traced, Backend, ClusterParams};
use mclc::diagnostics::measure_color_shift;
use mclc::imaging::{add_noise, InfraredImage, NoiseSpec};
use mclc::manifest::{DatasetManifest, ManifestAnnotation, ManifestEntry};
use mclc::metrics::{compute_iou, compute_pd_fa, evaluate_dataset};
use mclc::monte_carlo::{binarize, cluster_once, run_mclc, run_mclc_with_snapshots, MclcParams};
use mclc::refine::{mean_field, refine_tpm, CrfParams};
use mclc::synth::{
    corpus_spec, cutoff_radius, generate_scene, perturb_annotation, BackgroundSpec, GeneratedScene,
    SceneSpec, TargetSpec,
};
use mclc::{PseudoMask, TargetProbabilityMap};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use super::{ref_lca, RefImage, RefParams};

pub type Check = Result<String, String>;

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Check {
    runner(cases)
        .run(&strategy, test)
        .map(|_| format!("{cases} cases"))
        .map_err(|e| e.to_string())
}

pub fn image(min: usize, max: usize, top: u8) -> impl Strategy<Value = InfraredImage> {
    (min..=max, min..=max).prop_flat_map(move |(w, h)| {
        proptest::collection::vec(0..=top, w * h).prop_map(move |v| {
            InfraredImage::new(w, h, v.into_iter().map(f64::from).collect()).unwrap()
        })
    })
}

fn noise_spec() -> impl Strategy<Value = NoiseSpec> {
    prop_oneof![
        (0.0..=1.0f64, any::<u64>()).prop_map(|(p, s)| NoiseSpec::salt(p, s)),
        (0.0..=1.0f64, any::<u64>()).prop_map(|(p, s)| NoiseSpec::pepper(p, s)),
        (0.0..300.0f64, any::<u64>()).prop_map(|(p, s)| NoiseSpec::gaussian(p, s)),
    ]
}

fn image_with_point(
    min: usize,
    max: usize,
) -> impl Strategy<Value = (InfraredImage, PointAnnotation)> {
    image(min, max, 255).prop_flat_map(|img| {
        let (w, h) = (img.width(), img.height());
        (Just(img), 0..w, 0..h).prop_map(|(img, x, y)| (img, PointAnnotation::new("p", x, y)))
    })
}

fn rect_mask(w: usize, h: usize) -> impl Strategy<Value = PseudoMask> {
    proptest::collection::vec((0..w, 0..h, 1..4usize, 1..4usize), 0..4).prop_map(move |rects| {
        PseudoMask::from_fn(w, h, |x, y| {
            rects
                .iter()
                .any(|&(x0, y0, rw, rh)| x >= x0 && x < x0 + rw && y >= y0 && y < y0 + rh)
        })
    })
}

// ---- imaging

pub fn noise_determinism() -> Check {
    run(64, (image(1, 16, 255), noise_spec()), |(img, spec)| {
        let a = add_noise(&img, &spec).unwrap();
        let b = add_noise(&img, &spec).unwrap();
        prop_assert_eq!(a.data(), b.data());
        Ok(())
    })
}

pub fn salt_count_law() -> Check {
    run(
        128,
        (image(1, 20, 255), 0.0..=1.0f64, any::<u64>()),
        |(img, p, seed)| {
            let spec = NoiseSpec::salt(p, seed);
            let out = add_noise(&img, &spec).unwrap();
            let n_sel = spec.replaced_count(img.len());
            let changed = img
                .data()
                .iter()
                .zip(out.data())
                .filter(|(a, b)| a != b)
                .count();
            let saturated_before = img.data().iter().filter(|&&v| v == 255.0).count();
            let saturated_after = out.data().iter().filter(|&&v| v == 255.0).count();
            prop_assert!(changed <= n_sel);
            prop_assert!(saturated_after >= n_sel);
            prop_assert_eq!(saturated_after, saturated_before + changed);
            if saturated_before == 0 {
                prop_assert_eq!(changed, n_sel);
            }
            Ok(())
        },
    )
}

pub fn clip_safety() -> Check {
    run(128, (image(1, 16, 255), noise_spec()), |(img, spec)| {
        let out = add_noise(&img, &spec).unwrap();
        prop_assert_eq!((out.width(), out.height()), (img.width(), img.height()));
        prop_assert!(out.data().iter().all(|v| (0.0..=255.0).contains(v)));
        Ok(())
    })
}

/// Mean absolute change under salt 0.05 over dim background pixels against
/// bright target pixels, ten seeds per scene.
pub fn target_background_sensitivity(corpus: &[GeneratedScene]) -> Check {
    let mut tested = 0;
    for s in corpus {
        let data = s.image.data();
        let bg: Vec<usize> = (0..data.len()).filter(|&i| data[i] < 100.0).collect();
        let fg: Vec<usize> = (0..data.len()).filter(|&i| data[i] > 200.0).collect();
        if bg.is_empty() || fg.is_empty() {
            continue;
        }
        let (mut d_bg, mut d_fg) = (0.0, 0.0);
        for seed in 1..=10 {
            let out = add_noise(&s.image, &NoiseSpec::salt(0.05, seed)).unwrap();
            let o = out.data();
            d_bg += bg.iter().map(|&i| (o[i] - data[i]).abs()).sum::<f64>() / bg.len() as f64;
            d_fg += fg.iter().map(|&i| (o[i] - data[i]).abs()).sum::<f64>() / fg.len() as f64;
        }
        if d_bg <= d_fg {
            return Err(format!(
                "{}: background {:.3} <= target {:.3}",
                s.id,
                d_bg / 10.0,
                d_fg / 10.0
            ));
        }
        tested += 1;
    }
    if tested == 0 {
        return Err("no scene has both dim and bright pixels".into());
    }
    Ok(format!("{tested} scenes"))
}

// ---- clustering

fn cluster_case() -> impl Strategy<Value = (InfraredImage, ClusterParams)> {
    (
        image(3, 12, 255),
        1..=6usize,
        1.0..80.0f64,
        0..12usize,
        any::<bool>(),
    )
        .prop_map(|(img, n, mu_c, iters, km)| {
            let n = n.min(img.len());
            let params = ClusterParams {
                n_clusters: n,
                mu_c,
                max_iters: iters,
                backend: if km {
                    Backend::KMeans
                } else {
                    Backend::SlicLike
                },
                ..ClusterParams::default()
            };
            (img, params)
        })
}

pub fn assignment_optimality() -> Check {
    run(96, cluster_case(), |(img, params)| {
        let field = run_lca(&img, &params).unwrap();
        let metric = params.metric(img.width(), img.height());
        let s = grid_interval(img.width(), img.height(), params.n_clusters);
        for y in 0..img.height() {
            for x in 0..img.width() {
                let px = (img.get(x, y), x as f64, y as f64);
                let mut candidates: Vec<usize> = (0..field.centers.len())
                    .filter(|&k| {
                        let c = &field.centers[k];
                        params.backend == Backend::KMeans
                            || ((x as f64 - c.x).abs() <= s && (y as f64 - c.y).abs() <= s)
                    })
                    .collect();
                if candidates.is_empty() {
                    candidates = (0..field.centers.len()).collect();
                }
                let label = field.label_at(x, y) as usize;
                prop_assert!(candidates.contains(&label));
                let own = distance(&field.centers[label], px, &metric);
                for k in candidates {
                    prop_assert!(distance(&field.centers[k], px, &metric) >= own);
                }
            }
        }
        Ok(())
    })
}

pub fn termination() -> Check {
    run(96, cluster_case(), |(img, params)| {
        let (field, trace) = run_lca_traced(&img, &params).unwrap();
        prop_assert!(field.iterations_run <= params.max_iters);
        prop_assert!(field.converged || field.iterations_run == params.max_iters);
        prop_assert_eq!(trace.len(), field.iterations_run + 1);
        prop_assert!(field
            .labels
            .iter()
            .all(|&l| (l as usize) < params.n_clusters));
        prop_assert_eq!(field.centers.len(), params.n_clusters);
        for c in &field.centers {
            prop_assert!((0.0..=255.0).contains(&c.c));
            prop_assert!(c.x >= 0.0 && c.x <= (img.width() - 1) as f64);
            prop_assert!(c.y >= 0.0 && c.y <= (img.height() - 1) as f64);
        }
        Ok(())
    })
}

/// Same content placed at two offsets inside constant canvases; clustering
/// the patch around the label gives masks that differ by the offset.
pub fn scale_covariance() -> Check {
    let case = (
        image(9, 9, 255),
        0..20usize,
        0..20usize,
        0..20usize,
        0..20usize,
        1..=5usize,
    );
    run(48, case, |(content, ax, ay, bx, by, n)| {
        let place = |ox: usize, oy: usize| {
            InfraredImage::from_fn(40, 40, |x, y| {
                if x >= ox && x < ox + 9 && y >= oy && y < oy + 9 {
                    content.get(x - ox, y - oy)
                } else {
                    30.0
                }
            })
        };
        let params = ClusterParams {
            n_clusters: n,
            ..ClusterParams::default()
        };
        let a = cluster_once(
            &place(ax, ay),
            &PointAnnotation::new("a", ax + 4, ay + 4),
            &params,
            None,
            Some(4),
        )
        .unwrap();
        let b = cluster_once(
            &place(bx, by),
            &PointAnnotation::new("b", bx + 4, by + 4),
            &params,
            None,
            Some(4),
        )
        .unwrap();
        for y in 0..9 {
            for x in 0..9 {
                prop_assert_eq!(a.mask.get(ax + x, ay + y), b.mask.get(bx + x, by + y));
            }
        }
        prop_assert_eq!(a.mask.count(), b.mask.count());
        Ok(())
    })
}

/// Global-search clustering against the reference Lloyd iteration on
/// random 8x8 images with up to three clusters.
pub fn kmeans_oracle(seeds: u64) -> Check {
    use rand::{Rng, SeedableRng};
    let mut compared = 0;
    for seed in 0..seeds {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let img = InfraredImage::from_fn(8, 8, |_, _| f64::from(rng.random_range(0u8..=255)));
        let reference_img = RefImage::of(&img);
        for n in 1..=3 {
            let params = ClusterParams {
                n_clusters: n,
                backend: Backend::KMeans,
                ..ClusterParams::default()
            };
            let field = run_lca(&img, &params).unwrap();
            let trace = ref_lca(
                &reference_img,
                &RefParams {
                    n,
                    mu_c: params.mu_c,
                    mu_s: None,
                    threshold: params.conv_threshold,
                    max_iters: params.max_iters,
                    windowed: false,
                },
            );
            let last = trace.last().unwrap();
            if field.labels != last.labels {
                return Err(format!("seed {seed}, N={n}: labels differ"));
            }
            if field.iterations_run + 1 != trace.len() {
                return Err(format!(
                    "seed {seed}, N={n}: {} vs {} steps",
                    field.iterations_run + 1,
                    trace.len()
                ));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} clusterings identical"))
}

// ---- mclc

fn mclc_case() -> impl Strategy<Value = (InfraredImage, PointAnnotation, MclcParams)> {
    (
        image_with_point(4, 14),
        1..=4usize,
        1..=8usize,
        0.0..0.3f64,
        any::<u64>(),
    )
        .prop_map(|((img, anno), n, k, p, seed)| {
            let mut params = MclcParams::default().with_fixed_runs(k);
            params.cluster.n_clusters = n.min(img.len());
            params.noise = NoiseSpec::salt(p, seed);
            (img, anno, params)
        })
}

pub fn tpm_determinism() -> Check {
    run(32, mclc_case(), |(img, anno, params)| {
        let a = run_mclc(&img, &anno, &params).unwrap();
        let b = run_mclc(&img, &anno, &params).unwrap();
        prop_assert_eq!(a, b);
        Ok(())
    })
}

pub fn tpm_quantized() -> Check {
    run(32, mclc_case(), |(img, anno, params)| {
        let tpm = run_mclc(&img, &anno, &params).unwrap();
        let k = tpm.runs_accumulated() as f64;
        prop_assert!(tpm.runs_accumulated() as usize <= params.max_runs);
        prop_assert!(tpm.runs_accumulated() >= 1);
        for p in tpm.probs() {
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!((p * k - (p * k).round()).abs() < 1e-9);
        }
        prop_assert_eq!(tpm.prob(anno.x, anno.y), 1.0);
        Ok(())
    })
}

pub fn order_independence() -> Check {
    let masks = (2..10usize, 2..10usize).prop_flat_map(|(w, h)| {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), w * h), 1..12)
            .prop_map(move |v| (w, h, v))
            .prop_flat_map(|(w, h, v)| {
                let order: Vec<usize> = (0..v.len()).collect();
                (Just((w, h, v)), Just(order).prop_shuffle())
            })
    });
    run(64, masks, |((w, h, data), order)| {
        let masks: Vec<PseudoMask> = data
            .into_iter()
            .map(|d| PseudoMask::from_vec(w, h, d).unwrap())
            .collect();
        let mut a = TargetProbabilityMap::new(w, h);
        let mut b = TargetProbabilityMap::new(w, h);
        for m in &masks {
            a.add(m).unwrap();
        }
        for &i in &order {
            b.add(&masks[i]).unwrap();
        }
        for (pa, pb) in a.probs().iter().zip(b.probs()) {
            prop_assert!((pa - pb).abs() <= 1e-12);
        }
        Ok(())
    })
}

/// The labeled pixel holds the TPM maximum for every target of a scene.
pub fn anchor_coverage(corpus: &[GeneratedScene], params: &MclcParams) -> Check {
    use rayon::prelude::*;
    let ok: Vec<bool> = corpus
        .par_iter()
        .map(|s| {
            s.annotations.iter().all(|a| {
                let tpm = run_mclc(&s.image, a, params).unwrap();
                let top = tpm.probs().into_iter().fold(0.0, f64::max);
                tpm.prob(a.x, a.y) >= top
            })
        })
        .collect();
    let hits = ok.iter().filter(|&&b| b).count();
    let msg = format!("{hits}/{} scenes", corpus.len());
    if hits as f64 >= 0.9 * corpus.len() as f64 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Scene IoU of the binarized TPM after 1, 20 and 100 runs.
pub fn monotone_refinement(corpus: &[GeneratedScene], params: &MclcParams) -> Check {
    use rayon::prelude::*;
    let checkpoints = [1usize, 20, 100];
    let params = params.clone().with_fixed_runs(100);
    let ok: Vec<bool> = corpus
        .par_iter()
        .map(|s| {
            let mut merged =
                vec![PseudoMask::empty(s.image.width(), s.image.height()); checkpoints.len()];
            for a in &s.annotations {
                let (_, snaps) =
                    run_mclc_with_snapshots(&s.image, a, &params, &checkpoints).unwrap();
                for (m, tpm) in merged.iter_mut().zip(&snaps) {
                    if let Ok(b) = binarize(tpm, params.binarize_threshold, a) {
                        m.union_with(&b).unwrap();
                    }
                }
            }
            let ious: Vec<f64> = merged
                .iter()
                .map(|m| compute_iou(m, &s.gt_mask).unwrap())
                .collect();
            ious.windows(2).all(|w| w[1] >= w[0])
        })
        .collect();
    let hits = ok.iter().filter(|&&b| b).count();
    let msg = format!("{hits}/{} scenes", corpus.len());
    if hits as f64 >= 0.7 * corpus.len() as f64 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

pub fn diagnostics_bounds_ordered(corpus: &[GeneratedScene]) -> Check {
    let params = MclcParams::default();
    let mut n = 0;
    for s in corpus.iter().take(4) {
        for a in &s.annotations {
            let recs = measure_color_shift(&s.image, a, &s.gt_mask, &params, &[0.0, 0.05, 0.2], 3)
                .map_err(|e| e.to_string())?;
            for r in &recs {
                if r.delta_dc_false_min > r.delta_dc_false_max {
                    return Err(format!(
                        "{}: min {} > max {}",
                        s.id, r.delta_dc_false_min, r.delta_dc_false_max
                    ));
                }
            }
            if recs[0].delta_dc_true != 0.0 || recs[0].delta_dc_false_max != 0.0 {
                return Err(format!("{}: nonzero shift at intensity 0", s.id));
            }
            n += recs.len();
        }
    }
    Ok(format!("{n} records"))
}

// ---- refine

fn crf_params() -> impl Strategy<Value = CrfParams> {
    (
        0.0..20.0f64,
        0.0..10.0f64,
        0.5..20.0f64,
        0.5..40.0f64,
        0.5..10.0f64,
        1..6usize,
        0.001..0.3f64,
    )
        .prop_map(|(wa, ws, ta, tb, tg, iters, eps)| CrfParams {
            window_radius: 8,
            iters,
            w_appearance: wa,
            w_smoothness: ws,
            theta_alpha: ta,
            theta_beta: tb,
            theta_gamma: tg,
            unary_epsilon: eps,
        })
}

pub fn posterior_normalized() -> Check {
    let case = (image(1, 10, 255), crf_params()).prop_flat_map(|(img, p)| {
        let n = img.len();
        (
            Just(img),
            Just(p),
            proptest::collection::vec(0.0..=1.0f64, n),
        )
    });
    run(64, case, |(img, params, probs)| {
        let mf = mean_field(img.width(), img.height(), img.data(), &probs, &params).unwrap();
        prop_assert_eq!(mf.history.len(), params.iters);
        for q in &mf.history {
            for p in q {
                prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-9);
                prop_assert!(p[0] >= 0.0 && p[1] >= 0.0);
            }
        }
        prop_assert!(mf.free_energy.iter().all(|e| e.is_finite()));
        Ok(())
    })
}

pub fn window_containment() -> Check {
    let case = (image_with_point(6, 30), 1..=6usize, any::<u64>()).prop_flat_map(
        |((img, anno), r, seed)| {
            let n = img.len();
            (
                Just((img, anno, r, seed)),
                proptest::collection::vec(0..=4u32, n),
            )
        },
    );
    run(48, case, |((img, anno, r, _), counts)| {
        let tpm = TargetProbabilityMap::from_counts(img.width(), img.height(), counts, 4).unwrap();
        let params = CrfParams {
            window_radius: r,
            ..CrfParams::default()
        };
        if let Ok(mask) = refine_tpm(&img, &tpm, &anno, &params) {
            for y in 0..img.height() {
                for x in 0..img.width() {
                    if mask.get(x, y) {
                        prop_assert!(x.abs_diff(anno.x) <= r && y.abs_diff(anno.y) <= r);
                    }
                }
            }
        }
        Ok(())
    })
}

// ---- metrics

pub fn iou_symmetry() -> Check {
    let case = (1..12usize, 1..12usize).prop_flat_map(|(w, h)| (rect_mask(w, h), rect_mask(w, h)));
    run(128, case, |(a, b)| {
        let ab = compute_iou(&a, &b).unwrap();
        prop_assert_eq!(ab, compute_iou(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(compute_iou(&a, &a).unwrap(), 1.0);
        Ok(())
    })
}

/// Adds a copy of one ground-truth component to the prediction, away from
/// every existing predicted pixel.
pub fn monotone_pd() -> Check {
    let case = (8..24usize, 8..24usize).prop_flat_map(|(w, h)| {
        (
            rect_mask(w, h),
            rect_mask(w, h),
            any::<prop::sample::Index>(),
        )
    });
    run(256, case, |(gt, pred, pick)| {
        let comps = gt.components();
        if comps.is_empty() {
            return Ok(());
        }
        let c = &comps[pick.index(comps.len())];
        let (w, h) = (gt.width(), gt.height());
        let touches = c.pixels.iter().any(|&i| {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            (-1..=1).any(|dy| {
                (-1..=1).any(|dx| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx >= 0
                        && ny >= 0
                        && nx < w as isize
                        && ny < h as isize
                        && pred.get(nx as usize, ny as usize)
                })
            })
        });
        if touches {
            return Ok(());
        }
        let before = compute_pd_fa(&pred, &gt, 3.0).unwrap();
        let mut more = pred.clone();
        for &i in &c.pixels {
            more.set(i % w, i / w, true);
        }
        let after = compute_pd_fa(&more, &gt, 3.0).unwrap();
        prop_assert!(after.pd >= before.pd);
        Ok(())
    })
}

pub fn fa_bound() -> Check {
    let case = (1..16usize, 1..16usize, 0.0..6.0f64)
        .prop_flat_map(|(w, h, r)| (rect_mask(w, h), rect_mask(w, h), Just(r)));
    run(128, case, |(pred, gt, r)| {
        let d = compute_pd_fa(&pred, &gt, r).unwrap();
        let bound = pred.count() as f64 / (pred.width() * pred.height()) as f64;
        prop_assert!(d.fa <= bound + 1e-15);
        prop_assert!((0.0..=1.0).contains(&d.pd));
        if d.counts.n_targets_gt > 0 {
            prop_assert_eq!(
                d.pd,
                d.counts.n_targets_detected as f64 / d.counts.n_targets_gt as f64
            );
        }
        Ok(())
    })
}

pub fn report_units() -> Check {
    let case = (4..16usize, 4..16usize).prop_flat_map(|(w, h)| {
        proptest::collection::vec((rect_mask(w, h), rect_mask(w, h)), 1..4)
    });
    run(64, case, |pairs| {
        let (preds, gts): (Vec<PseudoMask>, Vec<PseudoMask>) = pairs.into_iter().unzip();
        let r = evaluate_dataset(&preds, &gts, 3.0).unwrap();
        let (iou, pd, fa) = r.table_units();
        prop_assert_eq!(iou, r.iou * 1e2);
        prop_assert_eq!(pd, r.pd * 1e2);
        prop_assert_eq!(fa, r.fa * 1e6);
        let table = r.to_table();
        let row: Vec<&str> = table.lines().nth(1).unwrap().split_whitespace().collect();
        prop_assert_eq!(row[0], format!("{iou:.2}"));
        prop_assert_eq!(row[1], format!("{pd:.2}"));
        prop_assert_eq!(row[2], format!("{fa:.2}"));
        Ok(())
    })
}

// ---- synth

pub fn synth_determinism() -> Check {
    run(8, 1..500u64, |seed| {
        let spec = corpus_spec(seed);
        let a = generate_scene(&spec).unwrap();
        let b = generate_scene(&spec).unwrap();
        prop_assert_eq!(a.image.data(), b.image.data());
        prop_assert_eq!(&a.gt_mask, &b.gt_mask);
        prop_assert_eq!(&a.annotations, &b.annotations);
        Ok(())
    })
}

/// Annotation against the median of the non-target pixels of a 9x9 window
/// (grown until it holds some).
pub fn saliency(corpus: &[GeneratedScene]) -> Check {
    let mut worst = f64::INFINITY;
    for s in corpus {
        let sigma = s.spec.background.clutter_sigma;
        for a in &s.annotations {
            let mut r = 4usize;
            let bg = loop {
                let mut v = Vec::new();
                for y in a.y.saturating_sub(r)..=(a.y + r).min(s.image.height() - 1) {
                    for x in a.x.saturating_sub(r)..=(a.x + r).min(s.image.width() - 1) {
                        if !s.gt_mask.get(x, y) {
                            v.push(s.image.get(x, y));
                        }
                    }
                }
                if !v.is_empty() {
                    break v;
                }
                r += 1;
            };
            let mut bg = bg;
            bg.sort_by(f64::total_cmp);
            let median = if bg.len() % 2 == 1 {
                bg[bg.len() / 2]
            } else {
                0.5 * (bg[bg.len() / 2 - 1] + bg[bg.len() / 2])
            };
            let margin = (s.image.get(a.x, a.y) - median) / sigma;
            worst = worst.min(margin);
            if margin < 3.0 {
                return Err(format!(
                    "{} ({}, {}): {margin:.2} clutter sigmas",
                    s.id, a.x, a.y
                ));
            }
        }
    }
    Ok(format!("smallest margin {worst:.1} clutter sigmas"))
}

pub fn gt_structure(corpus: &[GeneratedScene]) -> Check {
    let limit = 0.0015 * 256.0 * 256.0;
    for s in corpus {
        let comps = s.gt_mask.components();
        if comps.len() != s.spec.targets.len() || s.annotations.len() != s.spec.targets.len() {
            return Err(format!(
                "{}: {} components for {} targets",
                s.id,
                comps.len(),
                s.spec.targets.len()
            ));
        }
        for ((a, t), m) in s
            .annotations
            .iter()
            .zip(&s.spec.targets)
            .zip(&s.target_masks)
        {
            if !m.get(a.x, a.y) || !s.gt_mask.get(a.x, a.y) {
                return Err(format!(
                    "{}: label ({}, {}) outside its target",
                    s.id, a.x, a.y
                ));
            }
            if t.kind != TargetCategory::Extended && m.count() as f64 >= limit {
                return Err(format!("{}: small target covers {} px", s.id, m.count()));
            }
        }
    }
    Ok(format!("{} scenes", corpus.len()))
}

/// One spot on a flat background: the mask is the disc where the profile
/// reaches a tenth of the peak.
pub fn analytic_disc() -> Check {
    let spec = SceneSpec {
        width: 256,
        height: 256,
        targets: vec![TargetSpec::isotropic(
            TargetCategory::Spot,
            (128.0, 127.0),
            200.0,
            2.0,
        )],
        background: BackgroundSpec {
            base: 30.0,
            clutter_sigma: 0.0,
            blobs: 0,
        },
        seed: 3,
    };
    let scene = generate_scene(&spec).map_err(|e| e.to_string())?;
    let r = 2.0 * (2.0 * 10f64.ln()).sqrt();
    if (cutoff_radius(2.0) - r).abs() > 1e-12 {
        return Err(format!("cutoff radius {}", cutoff_radius(2.0)));
    }
    for y in 0..256 {
        for x in 0..256 {
            let d = ((x as f64 - 128.0).powi(2) + (y as f64 - 127.0).powi(2)).sqrt();
            if scene.gt_mask.get(x, y) != (d <= r) {
                return Err(format!("pixel ({x}, {y}) at distance {d:.3}"));
            }
        }
    }
    let other = generate_scene(&SceneSpec { seed: 4, ..spec }).map_err(|e| e.to_string())?;
    if other.gt_mask != scene.gt_mask {
        return Err("mask depends on the seed".into());
    }
    Ok(format!("{} px disc", scene.gt_mask.count()))
}

pub fn perturbation_spread() -> Check {
    let anno = PointAnnotation::new("p", 128, 128);
    let n = 10_000u64;
    let mut within = 0;
    for seed in 0..n {
        let p = perturb_annotation(&anno, 1.0, seed, 256, 256);
        let d = ((p.x as f64 - 128.0).powi(2) + (p.y as f64 - 128.0).powi(2)).sqrt();
        if d <= 3.0 {
            within += 1;
        }
    }
    let corner = perturb_annotation(&PointAnnotation::new("c", 0, 255), 50.0, 9, 256, 256);
    if corner.x >= 256 || corner.y >= 256 {
        return Err("corner label left the image".into());
    }
    if perturb_annotation(&anno, 0.0, 1, 256, 256) != anno {
        return Err("sigma 0 moved the label".into());
    }
    let frac = within as f64 / n as f64;
    if frac >= 0.95 {
        Ok(format!("{:.2}% within 3 px", 100.0 * frac))
    } else {
        Err(format!("{:.2}% within 3 px", 100.0 * frac))
    }
}

// ---- manifest

pub fn manifest_round_trip() -> Check {
    let category = prop_oneof![
        Just(None),
        Just(Some(TargetCategory::Point)),
        Just(Some(TargetCategory::Spot)),
        Just(Some(TargetCategory::Extended)),
    ];
    let anno = (0..4096usize, 0..4096usize, category)
        .prop_map(|(x, y, category)| ManifestAnnotation { x, y, category });
    let entry = (
        "[a-z0-9_]{1,12}",
        proptest::collection::vec(anno, 0..5),
        proptest::option::of("[a-z0-9_]{1,12}"),
    )
        .prop_map(|(name, annotations, gt)| ManifestEntry {
            image_path: format!("images/{name}.png").into(),
            annotations,
            gt_mask_path: gt.map(|g| format!("masks/{g}.png").into()),
        });
    run(128, proptest::collection::vec(entry, 0..6), |entries| {
        let m = DatasetManifest {
            root: "/data".into(),
            entries,
        };
        let back = DatasetManifest::from_json(&m.to_json().unwrap(), "/data").unwrap();
        prop_assert_eq!(back, m);
        Ok(())
    })
}
