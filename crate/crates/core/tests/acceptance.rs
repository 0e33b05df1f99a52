//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ldi4d_core::animation::EulerianFlow;
use ldi4d_core::camera::{
    interpolate_pose, project, render_intrinsics, unproject, AutocruiseConfig, CameraIntrinsics,
};
use ldi4d_core::layering::{assign_layers, build_layer_stack, cluster_depth, ClusterConfig};
use ldi4d_core::metrics::{
    photometric_consistency, psnr, sequence_consistency, ssim, SequenceFrame, PSNR_CAP,
};
use ldi4d_core::pointcloud::lift_scene;
use ldi4d_core::renderer::{render_frame, splat};
use ldi4d_core::synthetic::{
    generate_scene, orbit_pose, per_frame_generation, reference_render, Preset, SynthConfig,
};
use ldi4d_core::{
    Camera, CameraPose, FeaturePointCloud, ImageBuffer, InpaintedLayer, Margins, RenderConfig,
    SceneAssets, SplatConfig, SplatPoints, Trajectory,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn max_abs_diff(a: &[f32], b: &[f32]) -> f32 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f32::max)
}

fn splat_matches_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0f32;
    for case in 0..10 {
        let (w, h) = (rng.gen_range(24..72), rng.gen_range(24..72));
        let k = CameraIntrinsics::centered(w, h, Some(rng.gen_range(20.0..60.0))).unwrap();
        let n = rng.gen_range(1..=10_000);
        let mut positions = Vec::with_capacity(n);
        let mut refs = Vec::with_capacity(n);
        for _ in 0..n {
            let z: f64 = rng.gen_range(0.5..12.0);
            let u = rng.gen_range(-4.0..w as f64 + 4.0);
            let v = rng.gen_range(-4.0..h as f64 + 4.0);
            positions.push(unproject(u, v, z, &k, &CameraPose::identity()));
            refs.push(z * rng.gen_range(0.5..2.0));
        }
        // A few duplicated depths exercise the order-key tie break.
        for i in (0..n).step_by(97) {
            positions[i].z = 3.0;
        }
        let features: Vec<[f32; 3]> = (0..n).map(|_| rng.gen()).collect();
        let weights: Vec<f32> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let pose = if case % 2 == 0 {
            CameraPose::identity()
        } else {
            CameraPose::new(
                UnitQuaternion::from_euler_angles(0.05, -0.08, 0.02),
                Vector3::new(0.1, -0.05, 0.2),
            )
        };
        let config = SplatConfig {
            radius: rng.gen_range(0.5..2.5),
            depth_adaptive: case % 3 != 0,
            max_radius: 6.0,
            kernel_sharpness: rng.gen_range(0.5..3.0),
            max_points_per_pixel: rng.gen_range(1..12),
            tile_size: [4, 8, 16, 32][case % 4],
            ..Default::default()
        };
        let points = SplatPoints {
            reference_depths: Some(&refs),
            ..SplatPoints::new(&positions, &features, &weights)
        };
        let camera = Camera {
            intrinsics: k,
            pose,
        };
        let fast = splat(&points, &camera, &config).unwrap();
        let slow = reference_render(&points, &camera, &config).unwrap();
        let fc: Vec<f32> = fast.color.iter().flatten().copied().collect();
        let sc: Vec<f32> = slow.color.iter().flatten().copied().collect();
        worst = worst
            .max(max_abs_diff(&fc, &sc))
            .max(max_abs_diff(fast.coverage.data(), slow.coverage.data()))
            .max(max_abs_diff(fast.depth.data(), slow.depth.data()));
        if fast.hole_mask != slow.hole_mask {
            return outcome(false, format!("hole masks differ in case {case}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-5 && secs < 60.0,
        format!("max abs diff {worst:.2e}, {secs:.1} s"),
    )
}

fn identity_reconstruction() -> Outcome {
    let config = SynthConfig {
        margins: Margins::default(),
        ..Default::default()
    };
    let scene = generate_scene(Preset::Planes, 21, &config).unwrap();
    let (_, cloud) = lift_scene(&scene.assets, &ClusterConfig::default()).unwrap();
    let k = render_intrinsics(&scene.assets).unwrap();
    let (w, h) = k.dims();
    let trajectory = Trajectory::fixed(CameraPose::identity(), 2, k);
    let flow = scene.flow(1);
    let fb = render_frame(&cloud, &flow, &trajectory, 0, &RenderConfig::default()).unwrap();
    let image = fb.normalized_color().unwrap();
    let mut worst = 0f32;
    let mut covered = 0;
    for y in 0..h {
        for x in 0..w {
            if fb.hole_mask.is_set(x, y) {
                continue;
            }
            covered += 1;
            worst = worst.max(max_abs_diff(
                image.pixel(x, y),
                scene.assets.original.pixel(x, y),
            ));
        }
    }
    outcome(
        worst <= 1e-5 && covered == w * h,
        format!(
            "max abs diff {worst:.2e} over {covered}/{} covered pixels",
            w * h
        ),
    )
}

/// Mean consistency over consecutive frame pairs, excluding disocclusions.
fn mean_consistency(frames: &[SequenceFrame], trajectory: &Trajectory) -> f64 {
    let pairs = sequence_consistency(frames, trajectory).unwrap();
    pairs.iter().sum::<f64>() / pairs.len() as f64
}

fn static_consistency() -> Outcome {
    let scene = generate_scene(Preset::Planes, 3, &SynthConfig::default()).unwrap();
    let (_, cloud) = lift_scene(&scene.assets, &ClusterConfig::default()).unwrap();
    let k = render_intrinsics(&scene.assets).unwrap();
    let n = 50;
    let trajectory = Trajectory::autocruise(&cloud, n, k, &AutocruiseConfig::default()).unwrap();
    let (fw, fh) = scene.assets.frame_dims();
    let flow = EulerianFlow::zeros(fw, fh, trajectory.loop_length());
    let config = RenderConfig::default();
    let ours: Vec<_> = (0..n)
        .map(|t| {
            let fb = render_frame(&cloud, &flow, &trajectory, t, &config).unwrap();
            SequenceFrame {
                image: fb.normalized_color().unwrap(),
                depth: fb.depth.clone(),
                holes: Some(fb.hole_mask.clone()),
            }
        })
        .collect();
    let ours_score = mean_consistency(&ours, &trajectory);

    let baseline = per_frame_generation(
        &ours[0].image,
        &ours[0].depth,
        &trajectory,
        0.05,
        17,
        &config.splat,
    )
    .unwrap();
    let baseline: Vec<_> = baseline
        .into_iter()
        .map(|(image, depth)| SequenceFrame {
            image,
            depth,
            holes: None,
        })
        .collect();
    let baseline_score = mean_consistency(&baseline, &trajectory);
    outcome(
        ours_score <= 1.5 && baseline_score > 3.0,
        format!("layered {ours_score:.3} (<= 1.5), re-noised baseline {baseline_score:.3} (> 3.0)"),
    )
}

fn zero_flow_collapse() -> Outcome {
    let scene = generate_scene(Preset::Planes, 5, &SynthConfig::default()).unwrap();
    let (_, cloud) = lift_scene(&scene.assets, &ClusterConfig::default()).unwrap();
    let k = render_intrinsics(&scene.assets).unwrap();
    let n = 12;
    let trajectory = Trajectory::fixed(CameraPose::identity(), n, k);
    let (fw, fh) = scene.assets.frame_dims();
    let flow = EulerianFlow::zeros(fw, fh, trajectory.loop_length());
    let config = RenderConfig::default();
    let first = render_frame(&cloud, &flow, &trajectory, 0, &config).unwrap();
    let differing = (1..n)
        .filter(|&t| render_frame(&cloud, &flow, &trajectory, t, &config).unwrap() != first)
        .count();
    outcome(
        differing == 0,
        format!("{differing}/{} frames differ from frame 0", n - 1),
    )
}

fn remap_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut failures = Vec::new();
    for case in 0..1000 {
        let (w, h) = (rng.gen_range(2..12), rng.gen_range(2..12));
        let levels: Vec<f32> = (0..6).map(|_| rng.gen_range(0.2f32..40.0)).collect();
        let depth = ImageBuffer::from_fn::<1>(w, h, |_, _| {
            [levels[rng.gen_range(0..6)] + rng.gen_range(0.0f32..0.3)]
        });
        let mut distinct = depth.data().to_vec();
        distinct.sort_by(f32::total_cmp);
        distinct.dedup();
        let layers = rng.gen_range(1..=distinct.len().min(5));
        let intervals = cluster_depth(&depth, &ClusterConfig::with_layers(layers)).unwrap();
        let color = ImageBuffer::filled(w, h, 3, 0.5);
        let mut assets = SceneAssets::new(
            color.clone(),
            color,
            Margins::default(),
            depth,
            ImageBuffer::filled(w, h, 2, 0.0),
        )
        .unwrap();
        // Inpainted validity: the layer's own pixels plus random hidden ones;
        // the farthest layer is complete.
        let raw = assign_layers(&assets.outpainted, &assets.depth, &intervals).unwrap();
        assets.inpainted_layers = raw
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let last = i + 1 == layers;
                let validity = ImageBuffer::from_fn::<1>(w, h, |x, y| {
                    [if last || r.mask.is_set(x, y) || rng.gen_bool(0.3) {
                        1.0
                    } else {
                        0.0
                    }]
                });
                InpaintedLayer {
                    color: r.color.clone(),
                    validity,
                }
            })
            .collect();
        let predicted: Vec<ImageBuffer> = (0..layers)
            .map(|_| {
                let scale = rng.gen_range(0.01f32..100.0);
                ImageBuffer::from_fn::<1>(w, h, |_, _| [rng.gen_range(0.0f32..1.0) * scale + 0.01])
            })
            .collect();
        let stack = build_layer_stack(&assets, &intervals, &predicted).unwrap();
        for (i, layer) in stack.layers.iter().enumerate() {
            let (lo, hi) = intervals.interval(i);
            let pairs: Vec<(f32, f32)> = predicted[i]
                .data()
                .iter()
                .zip(layer.depth.data())
                .zip(layer.validity.data())
                .filter(|(_, &m)| m > 0.5)
                .map(|((&p, &o), _)| (p, o))
                .collect();
            let non_constant = pairs.iter().any(|p| p.0 != pairs[0].0);
            let min = pairs.iter().map(|p| p.1).fold(f32::INFINITY, f32::min);
            let max = pairs.iter().map(|p| p.1).fold(f32::NEG_INFINITY, f32::max);
            if non_constant && (min != lo || max != hi) {
                failures.push(format!(
                    "case {case} layer {i}: range [{min}, {max}] vs [{lo}, {hi}]"
                ));
            }
            let mut sorted = pairs.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            if sorted.windows(2).any(|p| p[1].1 < p[0].1) {
                failures.push(format!("case {case} layer {i}: order not preserved"));
            }
        }
        let ranges = stack.depth_ranges();
        if ranges
            .windows(2)
            .any(|p| p[0].1 > p[1].0 || p[0].1.is_nan())
        {
            failures.push(format!("case {case}: ranges not ordered {ranges:?}"));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "1000 stacks".to_string()
        } else {
            format!("{} failures, first: {}", failures.len(), failures[0])
        },
    )
}

/// Naive single-linkage clustering: repeatedly merge the adjacent pair of
/// clusters with the smallest gap (leftmost on ties) until `target` remain.
fn brute_force_clusters(values: &[f32], target: usize) -> Vec<f32> {
    let mut v = values.to_vec();
    v.sort_by(f32::total_cmp);
    v.dedup();
    let mut clusters: Vec<Vec<f32>> = v.into_iter().map(|x| vec![x]).collect();
    while clusters.len() > target {
        let mut best = 0;
        let mut best_gap = f64::INFINITY;
        for i in 0..clusters.len() - 1 {
            let gap = clusters[i + 1][0] as f64 - *clusters[i].last().unwrap() as f64;
            if gap < best_gap {
                best_gap = gap;
                best = i;
            }
        }
        let next = clusters.remove(best + 1);
        clusters[best].extend(next);
    }
    let mut b = vec![clusters[0][0]];
    for pair in clusters.windows(2) {
        let a = *pair[0].last().unwrap() as f64;
        let c = pair[1][0] as f64;
        b.push(((a + c) / 2.0) as f32);
    }
    b.push(*clusters.last().unwrap().last().unwrap());
    b
}

fn partition_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut failures = Vec::new();
    for case in 0..1000 {
        let (w, h) = (rng.gen_range(1..16), rng.gen_range(1..16));
        let levels = rng.gen_range(1..8);
        let palette: Vec<f32> = (0..levels).map(|_| rng.gen_range(0.1f32..30.0)).collect();
        let depth = ImageBuffer::from_fn::<1>(w, h, |_, _| {
            let base = palette[rng.gen_range(0..levels)];
            [if rng.gen_bool(0.3) {
                base + rng.gen_range(0.0f32..0.5)
            } else {
                base
            }]
        });
        let mut distinct: Vec<f32> = depth.data().to_vec();
        distinct.sort_by(f32::total_cmp);
        distinct.dedup();
        let layers = rng.gen_range(1..=distinct.len().min(5));
        let intervals = cluster_depth(&depth, &ClusterConfig::with_layers(layers)).unwrap();
        let image = ImageBuffer::from_fn::<3>(w, h, |x, y| [x as f32 / 16.0, y as f32 / 16.0, 0.5]);
        let raw = assign_layers(&image, &depth, &intervals).unwrap();
        for y in 0..h {
            for x in 0..w {
                let owners = raw.iter().filter(|l| l.mask.is_set(x, y)).count();
                if owners != 1 {
                    failures.push(format!("case {case}: pixel ({x},{y}) in {owners} layers"));
                }
            }
        }
        if distinct.len() > 1 {
            let expected = brute_force_clusters(depth.data(), layers);
            if intervals.boundaries() != expected.as_slice() {
                failures.push(format!(
                    "case {case}: boundaries {:?} vs oracle {expected:?}",
                    intervals.boundaries()
                ));
            }
        }
    }
    let fixed = ImageBuffer::new(8, 1, 1, vec![1.0, 1.0, 1.0, 5.0, 5.0, 9.0, 9.0, 9.0]).unwrap();
    let iv = cluster_depth(&fixed, &ClusterConfig::with_layers(3)).unwrap();
    let oracle = brute_force_clusters(fixed.data(), 3);
    if iv.boundaries() != [1.0, 3.0, 7.0, 9.0] || oracle != [1.0, 3.0, 7.0, 9.0] {
        failures.push(format!(
            "fixed case: {:?}, oracle {oracle:?}",
            iv.boundaries()
        ));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "1000 maps + fixed case".to_string()
        } else {
            format!("{} failures, first: {}", failures.len(), failures[0])
        },
    )
}

fn orbit_hole_fraction(cloud: &FeaturePointCloud<3>, camera: &Camera) -> f64 {
    let weights = vec![1.0; cloud.len()];
    let points = SplatPoints {
        reference_depths: Some(&cloud.base_depths),
        ..SplatPoints::new(&cloud.positions, &cloud.features, &weights)
    };
    splat(&points, camera, &SplatConfig::default())
        .unwrap()
        .hole_fraction()
}

fn inpainting_ablation() -> Outcome {
    let config = SynthConfig {
        margins: Margins::uniform(48),
        plane_depths: vec![4.0, 10.0],
        ..Default::default()
    };
    let scene = generate_scene(Preset::Planes, 9, &config).unwrap();
    let (_, full) = lift_scene(&scene.assets, &ClusterConfig::with_layers(2)).unwrap();
    let mut single = scene.assets.clone();
    single.inpainted_layers.clear();
    single.layer_depths = vec![single.depth.clone()];
    let (_, layer1) = lift_scene(&single, &ClusterConfig::with_layers(1)).unwrap();

    let camera = Camera {
        intrinsics: render_intrinsics(&scene.assets).unwrap(),
        pose: orbit_pose(&Vector3::new(0.0, 0.0, 10.0), 30f64.to_radians()),
    };
    let without = orbit_hole_fraction(&layer1, &camera);
    let with = orbit_hole_fraction(&full, &camera);
    outcome(
        without > 0.02 && with < 0.001,
        format!(
            "single layer {:.2}% (> 2%), inpainted stack {:.3}% (< 0.1%)",
            without * 100.0,
            with * 100.0
        ),
    )
}

fn geometry_roundtrips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut worst_px = 0f64;
    for _ in 0..100_000 {
        let (w, h) = (rng.gen_range(1..2000), rng.gen_range(1..2000));
        let f = rng.gen_range(50.0..3000.0);
        let k = CameraIntrinsics::new(
            f,
            f * rng.gen_range(0.8..1.25),
            w as f64 / 2.0,
            h as f64 / 2.0,
            w,
            h,
        )
        .unwrap();
        let pose = CameraPose::new(
            UnitQuaternion::from_euler_angles(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-3.0..3.0),
            ),
            Vector3::new(
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
            ),
        );
        let (u, v) = (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64));
        let d = rng.gen_range(0.01..1000.0);
        let p = project(&unproject(u, v, d, &k, &pose), &k, &pose).unwrap();
        worst_px = worst_px.max((p.u - u).abs()).max((p.v - v).abs());
    }
    let mut endpoint_exact = true;
    let mut drift = 0f64;
    for _ in 0..1000 {
        let random_pose = |rng: &mut ChaCha8Rng| {
            CameraPose::new(
                UnitQuaternion::from_euler_angles(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-3.0..3.0),
                ),
                Vector3::new(
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                ),
            )
        };
        let (a, b) = (random_pose(&mut rng), random_pose(&mut rng));
        endpoint_exact &= interpolate_pose(&a, &b, 0.0) == a && interpolate_pose(&a, &b, 1.0) == b;
        for s in 0..=20 {
            let p = interpolate_pose(&a, &b, s as f64 / 20.0);
            drift = drift.max((p.rotation.quaternion().norm() - 1.0).abs());
        }
    }
    outcome(
        worst_px <= 1e-4 && endpoint_exact && drift <= 1e-9,
        format!("reprojection {worst_px:.2e} px, endpoints exact: {endpoint_exact}, norm drift {drift:.1e}"),
    )
}

fn metric_self_tests() -> Outcome {
    let (w, h) = (32, 32);
    let a = ImageBuffer::filled(w, h, 3, 0.5);
    let b = ImageBuffer::filled(w, h, 3, 0.6);
    let textured = ImageBuffer::from_fn::<3>(w, h, |x, y| {
        let v = ((x * 7 + y * 13) % 17) as f32 / 16.0;
        [v, 1.0 - v, 0.5]
    });
    let cap = psnr(&textured, &textured).unwrap();
    let twenty = psnr(&a, &b).unwrap();
    let ssim_id = ssim(&textured, &textured).unwrap();
    let k = CameraIntrinsics::centered(w, h, None).unwrap();
    let depth = ImageBuffer::filled(w, h, 1, 2.0);
    let id = CameraPose::identity();
    let c_id = photometric_consistency(&textured, &textured, &depth, &id, &k, None).unwrap();
    let c_shift = photometric_consistency(&a, &b, &depth, &id, &k, None).unwrap();
    let pass = cap == PSNR_CAP
        && (twenty - 20.0).abs() < 1e-4
        && (ssim_id - 1.0).abs() < 1e-12
        && c_id == 0.0
        && (c_shift - 10.0).abs() < 1e-4;
    outcome(
        pass,
        format!("cap {cap}, uniform 0.1 {twenty:.5} dB, ssim {ssim_id}, consistency {c_id} / {c_shift:.5}"),
    )
}

fn performance() -> Outcome {
    let (w, h) = (512, 512);
    let n = 1_000_000;
    let k = CameraIntrinsics::centered(w, h, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let positions: Vec<Vector3<f64>> = (0..n)
        .map(|_| {
            let z = rng.gen_range(1.0..20.0);
            unproject(
                rng.gen_range(0.0..w as f64),
                rng.gen_range(0.0..h as f64),
                z,
                &k,
                &CameraPose::identity(),
            )
        })
        .collect();
    let features: Vec<[f32; 3]> = (0..n).map(|_| rng.gen()).collect();
    let weights = vec![1.0f32; n];
    let points = SplatPoints::new(&positions, &features, &weights);
    let camera = Camera {
        intrinsics: k,
        pose: CameraPose::identity(),
    };
    let config = SplatConfig {
        radius: 1.0,
        depth_adaptive: false,
        ..Default::default()
    };
    splat(&points, &camera, &config).unwrap();
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let start = Instant::now();
        splat(&points, &camera, &config).unwrap();
        best = best.min(start.elapsed().as_secs_f64() * 1e3);
    }
    let threads = rayon::current_num_threads();
    let note = if best <= 250.0 {
        "within 250 ms target"
    } else {
        "over 250 ms target, within 2x"
    };
    outcome(
        best <= 500.0,
        format!(
            "{best:.0} ms on {threads} thread(s); {}",
            if best <= 500.0 {
                note
            } else {
                "over 2x budget"
            }
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("splat matches gather oracle", splat_matches_oracle),
        ("identity reconstruction", identity_reconstruction),
        (
            "static consistency vs re-noised baseline",
            static_consistency,
        ),
        ("zero-flow collapse", zero_flow_collapse),
        ("layer depth remap properties", remap_properties),
        (
            "depth partition and clustering oracle",
            partition_properties,
        ),
        ("inpainting ablation under orbit", inpainting_ablation),
        ("geometry roundtrips", geometry_roundtrips),
        ("metric self-tests", metric_self_tests),
        ("splat performance", performance),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({})",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            name,
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
