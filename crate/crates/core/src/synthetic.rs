//! Procedural scenes with exact ground truth, and the brute-force gather
//! renderer used to check the splatter.
//!
//! Scenes are built from planes seen by an identity camera over the
//! outpainted frame. Each plane carries deterministic value-noise texture
//! over its full extent, so content hidden in the source view still has a
//! defined color (the ground-truth stand-in for layer inpainting).

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::animation::EulerianFlow;
use crate::assets::{png::quantize, InpaintedLayer, Margins, SceneAssets};
use crate::camera::{outpainted_intrinsics, unproject, CameraIntrinsics, CameraPose, Trajectory};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::layering::{assign_layers, cluster_depth, ClusterConfig, Layer, LayerStack};
use crate::pointcloud::{lift_layers, FeaturePointCloud};
use crate::renderer::{
    composite, deposit, project_footprints, splat, write_pixel, Camera, Framebuffer, SplatConfig,
    SplatPoints,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Fronto-parallel planes at distinct depths with a moving "sky".
    Planes,
    /// Horizontal terraces stepping away under a far sky plane.
    TerracedTerrain,
    /// Two walls, a floor and an end wall; tilted surfaces, a flowing
    /// channel on the floor.
    Corridor,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planes" => Ok(Preset::Planes),
            "terraced-terrain" | "terraced" => Ok(Preset::TerracedTerrain),
            "corridor" => Ok(Preset::Corridor),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset {other:?} (expected planes, terraced-terrain or corridor)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    /// Original (pre-outpainting) image size.
    pub width: usize,
    pub height: usize,
    pub margins: Margins,
    /// Plane depths for [`Preset::Planes`], nearest first (2 to 4 planes).
    pub plane_depths: Vec<f32>,
    /// Peak flow speed in pixels per frame.
    pub flow_speed: f32,
    /// Poses at which ground-truth views are rendered with the oracle.
    pub view_poses: Vec<CameraPose>,
    pub splat: SplatConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            width: 64,
            height: 64,
            margins: Margins::uniform(16),
            plane_depths: vec![2.0, 5.0, 10.0],
            flow_speed: 0.6,
            view_poses: Vec::new(),
            splat: SplatConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthView {
    pub pose: CameraPose,
    pub image: ImageBuffer,
    pub depth: ImageBuffer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub preset: Preset,
    pub seed: u64,
    pub assets: SceneAssets,
    pub gt_layer_stack: LayerStack,
    /// Pixels of the outpainted frame where the flow is non-zero by
    /// construction.
    pub fluid_mask: ImageBuffer,
    pub gt_views: Vec<GroundTruthView>,
    /// Per view: pixels visible in the view but not in the source image.
    pub disocclusion_masks: Vec<ImageBuffer>,
}

impl SyntheticScene {
    pub fn source_intrinsics(&self) -> CameraIntrinsics {
        outpainted_intrinsics(&self.assets).expect("synthetic assets are valid")
    }

    /// Ground-truth cloud lifted from every layer (including hidden content).
    pub fn full_cloud(&self) -> FeaturePointCloud<3> {
        lift_layers(
            &self.gt_layer_stack,
            &self.source_intrinsics(),
            &CameraPose::identity(),
        )
        .expect("synthetic stack is valid")
    }

    /// Cloud of the surfaces visible in the source view only.
    pub fn visible_cloud(&self) -> FeaturePointCloud<3> {
        let mut stack = self.gt_layer_stack.clone();
        for l in &mut stack.layers {
            l.validity = l.mask.clone();
        }
        lift_layers(&stack, &self.source_intrinsics(), &CameraPose::identity())
            .expect("synthetic stack is valid")
    }

    pub fn flow(&self, loop_length: usize) -> EulerianFlow {
        EulerianFlow::new(self.assets.flow.clone(), loop_length).expect("synthetic flow is valid")
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn lattice(ix: i64, iy: i64, seed: u64) -> f64 {
    let h =
        splitmix(seed ^ splitmix((ix as u64).wrapping_mul(0x1000_0000_01B3) ^ splitmix(iy as u64)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Smooth value noise in `[0, 1]`.
fn value_noise(x: f64, y: f64, seed: u64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = lattice(ix, iy, seed);
    let b = lattice(ix + 1, iy, seed);
    let c = lattice(ix, iy + 1, seed);
    let d = lattice(ix + 1, iy + 1, seed);
    let top = a + (b - a) * sx;
    let bottom = c + (d - c) * sx;
    top + (bottom - top) * sy
}

/// Surface texture: a base color modulated by two octaves of noise over
/// surface coordinates `(s, t)` (world units).
#[derive(Clone, Copy, Debug)]
struct Texture {
    base: [f64; 3],
    seed: u64,
    scale: f64,
}

impl Texture {
    fn random(rng: &mut ChaCha8Rng, scale: f64) -> Self {
        Texture {
            base: [
                rng.gen_range(0.2..0.8),
                rng.gen_range(0.2..0.8),
                rng.gen_range(0.2..0.8),
            ],
            seed: rng.gen(),
            scale,
        }
    }

    fn color(&self, s: f64, t: f64) -> [f32; 3] {
        let n1 = value_noise(s * self.scale, t * self.scale, self.seed);
        let n2 = value_noise(
            s * self.scale * 3.1,
            t * self.scale * 3.1,
            self.seed ^ 0xABCD,
        );
        let m = 0.65 * (n1 - 0.5) + 0.35 * (n2 - 0.5);
        let mut out = [0f32; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let shift = 0.6 * m * (1.0 + 0.3 * c as f64);
            *o = (self.base[c] + shift).clamp(0.0, 1.0) as f32;
        }
        out
    }
}

/// One surface layer of the ground truth, over the outpainted frame.
struct SurfaceLayer {
    color: ImageBuffer,
    validity: ImageBuffer,
    depth: ImageBuffer,
}

struct Construction {
    layers: Vec<SurfaceLayer>,
    fluid: ImageBuffer,
    flow: ImageBuffer,
}

/// Builds a scene. The same `(preset, seed, config)` always yields
/// bit-identical output.
pub fn generate_scene(preset: Preset, seed: u64, config: &SynthConfig) -> Result<SyntheticScene> {
    if config.width < 4 || config.height < 4 {
        return Err(Error::InvalidArgument(
            "synthetic scenes need at least 4x4 pixels".into(),
        ));
    }
    let frame = config.margins.expand((config.width, config.height));
    let probe = SceneAssets::new(
        ImageBuffer::filled(config.width, config.height, 3, 0.0),
        ImageBuffer::filled(frame.0, frame.1, 3, 0.0),
        config.margins,
        ImageBuffer::filled(frame.0, frame.1, 1, 1.0),
        ImageBuffer::filled(frame.0, frame.1, 2, 0.0),
    )?;
    let k = outpainted_intrinsics(&probe)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let built = match preset {
        Preset::Planes => build_planes(&k, config, &mut rng)?,
        Preset::TerracedTerrain => build_terraces(&k, config, &mut rng),
        Preset::Corridor => build_corridor(&k, config, &mut rng),
    };

    // Visible surface = first valid layer, front to back.
    let (w, h) = frame;
    let mut outpainted = ImageBuffer::filled(w, h, 3, 0.0);
    let mut depth = ImageBuffer::filled(w, h, 1, 0.0);
    for y in 0..h {
        for x in 0..w {
            let l = built
                .layers
                .iter()
                .find(|l| l.validity.is_set(x, y))
                .expect("last synthetic layer is complete");
            outpainted
                .pixel_mut(x, y)
                .copy_from_slice(l.color.pixel(x, y));
            depth.set(x, y, 0, l.depth.get(x, y, 0));
        }
    }
    let original = outpainted.crop(
        config.margins.left,
        config.margins.top,
        config.width,
        config.height,
    )?;

    let intervals = cluster_depth(&depth, &ClusterConfig::with_layers(built.layers.len()))?;
    let raw = assign_layers(&outpainted, &depth, &intervals)?;
    let layers: Vec<Layer> = built
        .layers
        .iter()
        .zip(raw)
        .enumerate()
        .map(|(i, (s, r))| Layer {
            index: i,
            mask: r.mask,
            validity: s.validity.clone(),
            color: s.color.clone(),
            depth: s.depth.clone(),
        })
        .collect();
    let gt_layer_stack = LayerStack {
        layers,
        intervals,
        inpainted: true,
    };

    let mut assets = SceneAssets::new(original, outpainted, config.margins, depth, built.flow)?;
    assets.inpainted_layers = built
        .layers
        .iter()
        .map(|s| InpaintedLayer {
            color: s.color.clone(),
            validity: s.validity.clone(),
        })
        .collect();
    assets.layer_depths = built.layers.iter().map(|s| s.depth.clone()).collect();
    assets.extra.insert(
        "synthetic.preset".into(),
        format!("{preset:?}").to_lowercase(),
    );
    assets
        .extra
        .insert("synthetic.seed".into(), seed.to_string());
    assets.validate()?;

    let mut scene = SyntheticScene {
        preset,
        seed,
        assets,
        gt_layer_stack,
        fluid_mask: built.fluid,
        gt_views: Vec::new(),
        disocclusion_masks: Vec::new(),
    };
    if !config.view_poses.is_empty() {
        let full = scene.full_cloud();
        let visible = scene.visible_cloud();
        let render_k = crate::camera::render_intrinsics(&scene.assets)?;
        for pose in &config.view_poses {
            let camera = Camera {
                intrinsics: render_k,
                pose: *pose,
            };
            let fb = reference_render(
                &cloud_points(&full, &vec![1.0; full.len()]),
                &camera,
                &config.splat,
            )?;
            let seen = reference_render(
                &cloud_points(&visible, &vec![1.0; visible.len()]),
                &camera,
                &config.splat,
            )?;
            let mask = disocclusion_from(&fb, &seen);
            scene.gt_views.push(GroundTruthView {
                pose: *pose,
                image: fb.normalized_color()?,
                depth: fb.depth.clone(),
            });
            scene.disocclusion_masks.push(mask);
        }
    }
    Ok(scene)
}

/// Splat inputs for a static cloud with the given weights.
pub fn cloud_points<'a>(cloud: &'a FeaturePointCloud<3>, weights: &'a [f32]) -> SplatPoints<'a, 3> {
    SplatPoints {
        positions: &cloud.positions,
        features: &cloud.features,
        weights,
        reference_depths: Some(&cloud.base_depths),
        order: None,
    }
}

/// Pixels covered by the full scene but left open by the source-visible
/// surfaces.
pub fn disocclusion_from(full: &Framebuffer<3>, visible: &Framebuffer<3>) -> ImageBuffer {
    let data = full
        .hole_mask
        .data()
        .iter()
        .zip(visible.hole_mask.data())
        .map(|(&a, &b)| if a < 0.5 && b > 0.5 { 1.0 } else { 0.0 })
        .collect();
    ImageBuffer::new(full.width, full.height, 1, data).expect("mask dimensions")
}

fn fill_layer(
    w: usize,
    h: usize,
    mut f: impl FnMut(usize, usize) -> Option<([f32; 3], f32)>,
) -> SurfaceLayer {
    let mut color = ImageBuffer::filled(w, h, 3, 0.0);
    let mut validity = ImageBuffer::filled(w, h, 1, 0.0);
    let mut depth = ImageBuffer::filled(w, h, 1, 1.0);
    let mut last = 1.0f32;
    for y in 0..h {
        for x in 0..w {
            if let Some((c, d)) = f(x, y) {
                color.pixel_mut(x, y).copy_from_slice(&c);
                validity.set(x, y, 0, 1.0);
                depth.set(x, y, 0, d);
                last = d;
            }
        }
    }
    // Depth outside the layer's extent is never lifted; keep it in range.
    for y in 0..h {
        for x in 0..w {
            if !validity.is_set(x, y) {
                depth.set(x, y, 0, last);
            }
        }
    }
    quantize(&mut color);
    SurfaceLayer {
        color,
        validity,
        depth,
    }
}

/// World point on the fronto-parallel plane `z = depth` seen at pixel `(x, y)`.
fn plane_point(k: &CameraIntrinsics, x: usize, y: usize, depth: f64) -> Vector3<f64> {
    unproject(x as f64, y as f64, depth, k, &CameraPose::identity())
}

fn sky_flow(
    w: usize,
    h: usize,
    speed: f32,
    phase: f64,
    fluid: impl Fn(usize, usize) -> bool,
) -> (ImageBuffer, ImageBuffer) {
    let mut flow = ImageBuffer::filled(w, h, 2, 0.0);
    let mut mask = ImageBuffer::filled(w, h, 1, 0.0);
    let tau = std::f64::consts::TAU;
    for y in 0..h {
        for x in 0..w {
            if !fluid(x, y) {
                continue;
            }
            let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
            // A drifting field whose vertical component diverges from a
            // horizontal line through the region.
            let fx = 1.0 + 0.3 * (tau * (v * 2.0 + phase)).sin();
            let fy = 0.35 * (tau * (u + phase)).sin();
            flow.set(x, y, 0, (speed as f64 * fx) as f32);
            flow.set(x, y, 1, (speed as f64 * fy) as f32);
            mask.set(x, y, 0, 1.0);
        }
    }
    (flow, mask)
}

fn build_planes(
    k: &CameraIntrinsics,
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Construction> {
    let depths = &config.plane_depths;
    if !(2..=4).contains(&depths.len())
        || depths.windows(2).any(|d| d[0] >= d[1])
        || depths[0] <= 0.0
    {
        return Err(Error::InvalidArgument(format!(
            "plane depths must be 2-4 increasing positive values, got {depths:?}"
        )));
    }
    let (w, h) = k.dims();
    let (wf, hf) = (w as f64, h as f64);
    let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-0.04..0.04);
    // Regions of the non-background planes in frame fractions, nearest first.
    type Region = Box<dyn Fn(f64, f64) -> bool>;
    let count = depths.len();
    let mut regions: Vec<Region> = Vec::new();
    let disc = (0.68 + jitter(rng), 0.64 + jitter(rng), 0.18);
    let rects = [
        (0.12 + jitter(rng), 0.36 + jitter(rng), 0.55, 0.96),
        (0.30 + jitter(rng), 0.10 + jitter(rng), 0.62, 0.45),
    ];
    for i in 0..count - 1 {
        // Two planes: a single large block in front of the background.
        let region: Region = match (count, i) {
            (2, _) => {
                let (x0, y0) = (0.2 + jitter(rng), 0.25 + jitter(rng));
                Box::new(move |u, v| u >= x0 && u <= 0.72 && v >= y0 && v <= 0.85)
            }
            (_, 0) => {
                let (cu, cv, r) = disc;
                Box::new(move |u, v| (u - cu).powi(2) + (v - cv).powi(2) <= r * r)
            }
            (_, 1) => {
                let (x0, y0, x1, y1) = rects[0];
                Box::new(move |u, v| u >= x0 && u <= x1 && v >= y0 && v <= y1)
            }
            _ => {
                let (x0, y0, x1, y1) = rects[1];
                Box::new(move |u, v| u >= x0 && u <= x1 && v >= y0 && v <= y1)
            }
        };
        regions.push(region);
    }

    let mut layers = Vec::with_capacity(count);
    for (i, &d) in depths.iter().enumerate() {
        let tex = Texture::random(rng, 2.0 / d as f64 * 4.0);
        let region = regions.get(i);
        layers.push(fill_layer(w, h, |x, y| {
            let inside = region.is_none_or(|r| r((x as f64 + 0.5) / wf, (y as f64 + 0.5) / hf));
            inside.then(|| {
                let p = plane_point(k, x, y, d as f64);
                (tex.color(p.x, p.y), d)
            })
        }));
    }
    let back = count - 1;
    let visible_back = |x: usize, y: usize| layers[..back].iter().all(|l| !l.validity.is_set(x, y));
    let phase = rng.gen_range(0.0..1.0);
    let (flow, fluid) = sky_flow(w, h, config.flow_speed, phase, |x, y| {
        (y as f64) < 0.3 * hf && visible_back(x, y)
    });
    Ok(Construction {
        layers,
        fluid,
        flow,
    })
}

fn build_terraces(
    k: &CameraIntrinsics,
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Construction {
    let (w, h) = k.dims();
    let hf = h as f64;
    // (depth, top row fraction), nearest first; the sky is the last layer.
    let terraces = [(3.0f32, 0.74), (6.0, 0.56), (12.0, 0.42)];
    let mut layers = Vec::new();
    for &(d, top) in &terraces {
        let top = top + rng.gen_range(-0.03..0.03);
        let tex = Texture::random(rng, 1.5);
        layers.push(fill_layer(w, h, |x, y| {
            ((y as f64) >= top * hf).then(|| {
                let p = plane_point(k, x, y, d as f64);
                (tex.color(p.x, p.y), d)
            })
        }));
    }
    let sky_depth = 30.0f32;
    let tex = Texture::random(rng, 0.3);
    layers.push(fill_layer(w, h, |x, y| {
        let p = plane_point(k, x, y, sky_depth as f64);
        Some((tex.color(p.x, p.y), sky_depth))
    }));
    let horizon = 0.42 * hf - 0.03 * hf;
    let phase = rng.gen_range(0.0..1.0);
    let (flow, fluid) = sky_flow(w, h, config.flow_speed, phase, |_, y| {
        (y as f64) < horizon.min(0.3 * hf)
    });
    Construction {
        layers,
        fluid,
        flow,
    }
}

fn build_corridor(
    k: &CameraIntrinsics,
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Construction {
    let (w, h) = k.dims();
    let half_width = 1.0f64;
    let floor = 0.6f64;
    let end = 8.0f64;
    let textures: Vec<Texture> = (0..4).map(|_| Texture::random(rng, 2.0)).collect();

    // Visible surface per pixel: (surface id, depth, surface coords).
    let hit = |x: usize, y: usize| -> (usize, f64, f64, f64) {
        let rx = (x as f64 - k.cx) / k.fx;
        let ry = (y as f64 - k.cy) / k.fy;
        let mut best = (3usize, end, rx * end, ry * end);
        let mut consider = |id: usize, z: f64, s: f64, t: f64| {
            if z > 0.0 && z < best.1 {
                best = (id, z, s, t);
            }
        };
        if rx < 0.0 {
            let z = -half_width / rx;
            consider(0, z, z, ry * z);
        }
        if rx > 0.0 {
            let z = half_width / rx;
            consider(1, z, z, ry * z);
        }
        if ry > 0.0 {
            let z = floor / ry;
            consider(2, z, rx * z, z);
        }
        best
    };
    let mut surface = vec![(0usize, 0.0f64, 0.0f64, 0.0f64); w * h];
    let mut depth = ImageBuffer::filled(w, h, 1, 1.0);
    for y in 0..h {
        for x in 0..w {
            let s = hit(x, y);
            surface[y * w + x] = s;
            depth.set(x, y, 0, s.1 as f32);
        }
    }
    // Layers are depth slices; the farthest slice is completed with the end
    // wall extended behind the side walls.
    let intervals = cluster_depth(&depth, &ClusterConfig::with_layers(3))
        .expect("corridor depth has 3+ values");
    let count = intervals.layer_count();
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        layers.push(fill_layer(w, h, |x, y| {
            let (id, z, s, t) = surface[y * w + x];
            let z32 = z as f32;
            if intervals.layer_of(z32) == i {
                Some((textures[id].color(s, t), z32))
            } else if i == count - 1 {
                let rx = (x as f64 - k.cx) / k.fx;
                let ry = (y as f64 - k.cy) / k.fy;
                Some((textures[3].color(rx * end, ry * end), end as f32))
            } else {
                None
            }
        }));
    }
    // A channel of water down the middle of the floor, flowing toward the
    // camera.
    let mut flow = ImageBuffer::filled(w, h, 2, 0.0);
    let mut fluid = ImageBuffer::filled(w, h, 1, 0.0);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    for y in 0..h {
        for x in 0..w {
            let (id, _, s, t) = surface[y * w + x];
            if id == 2 && s.abs() < 0.35 * half_width {
                let speed = config.flow_speed as f64;
                flow.set(x, y, 0, (0.25 * speed * (t + phase).sin()) as f32);
                flow.set(x, y, 1, speed as f32);
                fluid.set(x, y, 0, 1.0);
            }
        }
    }
    Construction {
        layers,
        fluid,
        flow,
    }
}

/// Gather renderer: for every pixel, scans all projected points, keeps those
/// whose footprint covers the pixel centre, and composites them with the
/// same math as [`crate::renderer::splat`]. `O(pixels * points)`.
pub fn reference_render<const C: usize>(
    points: &SplatPoints<'_, C>,
    camera: &Camera,
    config: &SplatConfig,
) -> Result<Framebuffer<C>> {
    config.validate()?;
    if points.features.len() != points.len() || points.weights.len() != points.len() {
        return Err(Error::InvalidArgument(
            "splat inputs differ in length".into(),
        ));
    }
    let (w, h) = camera.intrinsics.dims();
    let table: Vec<_> = project_footprints(points, camera, config)
        .into_iter()
        .flatten()
        .collect();
    let mut fb = Framebuffer::blank(w, h);
    let mut fragments = Vec::new();
    for y in 0..h {
        for x in 0..w {
            fragments.clear();
            for slot in 0..table.len() {
                deposit(
                    &mut fragments,
                    &table,
                    slot as u32,
                    x as f64,
                    y as f64,
                    config.max_points_per_pixel,
                );
            }
            let px = composite(&fragments, &table);
            write_pixel(&mut fb, y * w + x, px, config.alpha_threshold);
        }
    }
    Ok(fb)
}

/// Camera on a horizontal arc around `pivot`, rotated by `angle` radians
/// from the identity pose and looking at the pivot's original bearing.
pub fn orbit_pose(pivot: &Vector3<f64>, angle: f64) -> CameraPose {
    let rot = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), angle);
    let center = pivot + rot * (-pivot);
    CameraPose::from_center(rot, center)
}

/// Autoregressive per-frame baseline: each frame is rendered from the
/// previous *output* (re-lifted at its rendered depth) rather than from a
/// fixed scene, and then re-noised with Gaussian noise of `noise_sigma`,
/// mimicking a generator that re-synthesises every frame. Holes are filled
/// with noise around mid-gray at the farthest depth seen.
///
/// Returns `(image, depth)` per frame; frame 0 is `first`.
pub fn per_frame_generation(
    first: &ImageBuffer,
    first_depth: &ImageBuffer,
    trajectory: &Trajectory,
    noise_sigma: f64,
    seed: u64,
    config: &SplatConfig,
) -> Result<Vec<(ImageBuffer, ImageBuffer)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr_normal(noise_sigma);
    let mut frames = vec![(first.clone(), first_depth.clone())];
    for t in 1..trajectory.len() {
        let (img, depth) = &frames[t - 1];
        let prev = trajectory.frames[t - 1];
        let k = prev.intrinsics;
        let mut cloud = FeaturePointCloud::<3>::empty(k, prev.pose);
        let (w, h) = img.dims();
        for y in 0..h {
            for x in 0..w {
                let d = depth.get(x, y, 0) as f64;
                if d > 0.0 {
                    let c = img.pixel(x, y);
                    let (u, v) = (x as f64, y as f64);
                    cloud.push(
                        unproject(u, v, d, &k, &prev.pose),
                        [c[0], c[1], c[2]],
                        [u, v],
                        0,
                        d,
                    );
                }
            }
        }
        let cur = trajectory.frames[t];
        let camera = Camera {
            intrinsics: cur.intrinsics,
            pose: cur.pose,
        };
        let weights = vec![1.0; cloud.len()];
        let fb = splat(&cloud_points(&cloud, &weights), &camera, config)?;
        let mut out = fb.normalized_color()?;
        let mut out_depth = fb.depth.clone();
        let far = out_depth
            .data()
            .iter()
            .copied()
            .fold(0.0f32, f32::max)
            .max(1.0);
        for p in 0..w * h {
            let hole = fb.hole_mask.data()[p] > 0.5;
            if hole {
                out_depth.data_mut()[p] = far;
            }
            for c in 0..3 {
                let base = if hole {
                    0.5
                } else {
                    out.data()[p * 3 + c] as f64
                };
                let v = (base + normal(&mut rng)).clamp(0.0, 1.0) as f32;
                out.data_mut()[p * 3 + c] = v;
            }
        }
        frames.push((out, out_depth));
    }
    Ok(frames)
}

/// Box-Muller sampler for `N(0, sigma^2)`.
fn rand_distr_normal(sigma: f64) -> impl Fn(&mut ChaCha8Rng) -> f64 {
    move |rng: &mut ChaCha8Rng| {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
