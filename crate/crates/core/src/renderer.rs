//! Soft point splatting.
//!
//! Every point deposits a truncated Gaussian footprint
//! `a = w * exp(-gamma * r^2 / R^2)` (for `r < R`) on the pixels around its
//! projection. Per pixel, contributions are ordered by camera depth with the
//! point's order key breaking ties, capped at `max_points_per_pixel`, and
//! composited front to back:
//!
//! ```text
//! C = sum_k a_k * prod_{j<k} (1 - a_j) * f_k
//! ```
//!
//! The scatter implementation bins projected footprints into screen tiles
//! and composites each tile independently, so the output does not depend on
//! the number of worker threads.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::animation::{symmetric_clouds_with, AnimationConfig, EulerianFlow};
use crate::assets::png::write_png;
use crate::assets::write_pfm;
use crate::camera::{CameraIntrinsics, CameraPose, Trajectory, MIN_DEPTH};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::pointcloud::FeaturePointCloud;

#[derive(Clone, Debug, PartialEq)]
pub struct SplatConfig {
    /// Footprint radius in pixels.
    pub radius: f64,
    /// Grow the radius by `reference_depth / depth` for points that carry a
    /// reference depth, so surfaces stay closed as the camera approaches.
    pub depth_adaptive: bool,
    /// Upper bound on the depth-adapted radius.
    pub max_radius: f64,
    /// Gaussian falloff `gamma`.
    pub kernel_sharpness: f32,
    /// Coverage below which a pixel is reported as a hole.
    pub alpha_threshold: f32,
    pub max_points_per_pixel: usize,
    pub tile_size: usize,
}

impl Default for SplatConfig {
    fn default() -> Self {
        SplatConfig {
            radius: 0.75,
            depth_adaptive: true,
            max_radius: 16.0,
            kernel_sharpness: 1.0,
            alpha_threshold: 0.05,
            max_points_per_pixel: 8,
            tile_size: 16,
        }
    }
}

impl SplatConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "splat radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.max_radius >= self.radius) {
            return Err(Error::InvalidArgument(
                "max_radius must be at least radius".into(),
            ));
        }
        if !(self.kernel_sharpness > 0.0 && self.kernel_sharpness.is_finite()) {
            return Err(Error::InvalidArgument(
                "kernel sharpness must be positive".into(),
            ));
        }
        if !(self.alpha_threshold > 0.0 && self.alpha_threshold < 1.0) {
            return Err(Error::InvalidArgument(
                "alpha_threshold must lie in (0, 1)".into(),
            ));
        }
        if self.max_points_per_pixel == 0 || self.tile_size == 0 {
            return Err(Error::InvalidArgument(
                "max_points_per_pixel and tile_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The view a frame is rendered from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub pose: CameraPose,
}

/// Borrowed point columns fed to the splatter.
#[derive(Clone, Copy, Debug)]
pub struct SplatPoints<'a, const C: usize> {
    pub positions: &'a [Vector3<f64>],
    pub features: &'a [[f32; C]],
    /// Per-point opacity scale in `[0, 1]`.
    pub weights: &'a [f32],
    /// Depth at which the footprint has exactly `radius`; used when
    /// `depth_adaptive` is set.
    pub reference_depths: Option<&'a [f64]>,
    /// Tie-break keys for equal depths; the point index when absent.
    pub order: Option<&'a [u64]>,
}

impl<'a, const C: usize> SplatPoints<'a, C> {
    pub fn new(
        positions: &'a [Vector3<f64>],
        features: &'a [[f32; C]],
        weights: &'a [f32],
    ) -> Self {
        SplatPoints {
            positions,
            features,
            weights,
            reference_depths: None,
            order: None,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        let bad = self.features.len() != n
            || self.weights.len() != n
            || self.reference_depths.is_some_and(|r| r.len() != n)
            || self.order.is_some_and(|o| o.len() != n);
        if bad {
            return Err(Error::InvalidArgument(
                "splat inputs differ in length".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Framebuffer<const C: usize = 3> {
    pub width: usize,
    pub height: usize,
    /// Premultiplied composited features.
    pub color: Vec<[f32; C]>,
    /// Accumulated alpha in `[0, 1]`.
    pub coverage: ImageBuffer,
    /// Depth of the nearest composited contribution, 0 where nothing landed.
    pub depth: ImageBuffer,
    /// 1 where `coverage < alpha_threshold`.
    pub hole_mask: ImageBuffer,
}

impl<const C: usize> Framebuffer<C> {
    pub(crate) fn blank(width: usize, height: usize) -> Self {
        Framebuffer {
            width,
            height,
            color: vec![[0.0; C]; width * height],
            coverage: ImageBuffer::filled(width, height, 1, 0.0),
            depth: ImageBuffer::filled(width, height, 1, 0.0),
            hole_mask: ImageBuffer::filled(width, height, 1, 1.0),
        }
    }

    pub fn hole_count(&self) -> usize {
        self.hole_mask.count_set()
    }

    pub fn hole_fraction(&self) -> f64 {
        self.hole_count() as f64 / (self.width * self.height) as f64
    }

    /// Premultiplied color as an image (`C <= 3`).
    pub fn color_image(&self) -> Result<ImageBuffer> {
        ImageBuffer::new(
            self.width,
            self.height,
            C,
            self.color.iter().flatten().copied().collect(),
        )
    }

    /// Color divided by coverage; holes are black.
    pub fn normalized_color(&self) -> Result<ImageBuffer> {
        let data = self
            .color
            .iter()
            .zip(self.coverage.data())
            .zip(self.hole_mask.data())
            .flat_map(|((c, &a), &hole)| {
                let scale = if hole > 0.5 || a <= 0.0 { 0.0 } else { 1.0 / a };
                c.map(|v| (v * scale).clamp(0.0, 1.0))
            })
            .collect();
        ImageBuffer::new(self.width, self.height, C, data)
    }
}

/// A projected point footprint, clipped to the image.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Footprint<const C: usize> {
    pub u: f64,
    pub v: f64,
    pub z: f64,
    /// Squared radius.
    pub r2: f64,
    /// `-gamma / R^2`.
    pub falloff: f64,
    pub weight: f32,
    pub key: u64,
    pub feature: [f32; C],
    /// Inclusive pixel bounds.
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

/// One contribution to a pixel: a footprint, identified by its slot in the
/// footprint table, and the alpha it deposits.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Fragment {
    /// Bit pattern of the (positive) depth; sorts like the value.
    depth_bits: u64,
    key: u64,
    slot: u32,
    alpha: f32,
}

impl Fragment {
    /// Compositing order: depth, then order key, then slot. Slots increase
    /// with point index in every footprint table.
    #[inline]
    fn order(&self) -> (u64, u64, u32) {
        (self.depth_bits, self.key, self.slot)
    }
}

/// Deposits footprint `table[slot]` on the pixel centred at `(px, py)`.
/// The pixel's list stays sorted front to back and capped at `cap`.
#[inline]
pub(crate) fn deposit<const C: usize>(
    list: &mut Vec<Fragment>,
    table: &[Footprint<C>],
    slot: u32,
    px: f64,
    py: f64,
    cap: usize,
) {
    let f = &table[slot as usize];
    let (dx, dy) = (px - f.u, py - f.v);
    let r2 = dx * dx + dy * dy;
    if r2 >= f.r2 {
        return;
    }
    let mut fragment = Fragment {
        depth_bits: f.z.to_bits(),
        key: f.key,
        slot,
        alpha: 0.0,
    };
    let order = fragment.order();
    if list.len() >= cap {
        if list.last().is_none_or(|l| order >= l.order()) {
            return;
        }
        list.pop();
    }
    fragment.alpha = f.weight * ((f.falloff * r2) as f32).exp();
    let pos = list.partition_point(|l| l.order() < order);
    list.insert(pos, fragment);
}

/// Smallest integer `>= x` for `x >= 0`, without a libm call.
#[inline]
fn ceil_nonneg(x: f64) -> u32 {
    let t = x as u32;
    if (t as f64) < x {
        t + 1
    } else {
        t
    }
}

const PROJECT_CHUNK: usize = 1 << 14;

/// Projects all points with positive weight that land in front of the
/// camera and touch the image, in point order, as consecutive chunks.
/// Shared by the scatter renderer and the gather oracle.
pub(crate) fn project_footprints<const C: usize>(
    points: &SplatPoints<'_, C>,
    camera: &Camera,
    config: &SplatConfig,
) -> Vec<Vec<Footprint<C>>> {
    let k = camera.intrinsics;
    let (wf, hf) = (k.width as f64 - 1.0, k.height as f64 - 1.0);
    let rotation = camera.pose.rotation.to_rotation_matrix();
    let translation = camera.pose.translation;
    let falloff_scale = -(config.kernel_sharpness as f64);
    let one = |i: usize| -> Option<Footprint<C>> {
        let weight = points.weights[i].min(1.0);
        if !(weight > 0.0) {
            return None;
        }
        let cam = rotation * points.positions[i] + translation;
        let z = cam.z;
        if !(z > MIN_DEPTH) {
            return None;
        }
        let u = k.fx * cam.x / z + k.cx;
        let v = k.fy * cam.y / z + k.cy;
        if !(u.is_finite() && v.is_finite()) {
            return None;
        }
        let radius = match points.reference_depths {
            Some(r) if config.depth_adaptive => {
                (config.radius * r[i] / z).clamp(config.radius, config.max_radius)
            }
            _ => config.radius,
        };
        let (ax, ay) = ((u - radius).max(0.0), (v - radius).max(0.0));
        let (bx, by) = ((u + radius).min(wf), (v + radius).min(hf));
        if ax > wf || ay > hf || bx < 0.0 || by < 0.0 {
            return None;
        }
        let (x0, y0) = (ceil_nonneg(ax), ceil_nonneg(ay));
        let (x1, y1) = (bx as u32, by as u32);
        if x0 > x1 || y0 > y1 {
            return None;
        }
        let r2 = radius * radius;
        Some(Footprint {
            u,
            v,
            z,
            r2,
            falloff: falloff_scale / r2,
            weight,
            key: points.order.map_or(i as u64, |o| o[i]),
            feature: points.features[i],
            x0,
            y0,
            x1,
            y1,
        })
    };
    let n = points.len();
    (0..n.div_ceil(PROJECT_CHUNK))
        .into_par_iter()
        .map(|c| {
            (c * PROJECT_CHUNK..((c + 1) * PROJECT_CHUNK).min(n))
                .filter_map(one)
                .collect()
        })
        .collect()
}

/// Composites one pixel's fragments, already ordered by [`deposit`].
/// Returns `(color, coverage, nearest depth)`.
#[inline]
pub(crate) fn composite<const C: usize>(
    fragments: &[Fragment],
    table: &[Footprint<C>],
) -> ([f32; C], f32, f32) {
    let mut color = [0f32; C];
    let mut coverage = 0f32;
    let mut transmittance = 1f32;
    for f in fragments.iter() {
        let w = f.alpha * transmittance;
        let feature = &table[f.slot as usize].feature;
        for c in 0..C {
            color[c] += w * feature[c];
        }
        coverage += w;
        transmittance *= 1.0 - f.alpha;
    }
    let depth = fragments
        .first()
        .map_or(0.0, |f| f64::from_bits(f.depth_bits) as f32);
    (color, coverage.clamp(0.0, 1.0), depth)
}

pub(crate) fn write_pixel<const C: usize>(
    fb: &mut Framebuffer<C>,
    p: usize,
    (color, coverage, depth): ([f32; C], f32, f32),
    threshold: f32,
) {
    fb.color[p] = color;
    fb.coverage.data_mut()[p] = coverage;
    fb.depth.data_mut()[p] = depth;
    fb.hole_mask.data_mut()[p] = if coverage < threshold { 1.0 } else { 0.0 };
}

/// Composited `(color, coverage, depth)` of one pixel.
type TilePixel<const C: usize> = ([f32; C], f32, f32);

/// Scatter-based splatting of `points` into `camera`'s image.
pub fn splat<const C: usize>(
    points: &SplatPoints<'_, C>,
    camera: &Camera,
    config: &SplatConfig,
) -> Result<Framebuffer<C>> {
    config.validate()?;
    points.validate()?;
    let (w, h) = camera.intrinsics.dims();
    let mut fb = Framebuffer::blank(w, h);
    let footprints = project_footprints(points, camera, config);
    let Some(&first) = footprints.iter().flatten().next() else {
        return Ok(fb);
    };

    // Bin footprint copies by tile so each tile reads a contiguous run.
    let ts = config.tile_size as u32;
    let (ntx, nty) = (w.div_ceil(ts as usize), h.div_ceil(ts as usize));
    let mut offsets = vec![0usize; ntx * nty + 1];
    for f in footprints.iter().flatten() {
        for ty in f.y0 / ts..=f.y1 / ts {
            for tx in f.x0 / ts..=f.x1 / ts {
                offsets[ty as usize * ntx + tx as usize + 1] += 1;
            }
        }
    }
    for i in 1..offsets.len() {
        offsets[i] += offsets[i - 1];
    }
    let mut cursor = offsets.clone();
    let mut binned = vec![first; offsets[ntx * nty]];
    for f in footprints.iter().flatten() {
        for ty in f.y0 / ts..=f.y1 / ts {
            for tx in f.x0 / ts..=f.x1 / ts {
                let slot = &mut cursor[ty as usize * ntx + tx as usize];
                binned[*slot] = *f;
                *slot += 1;
            }
        }
    }
    drop(footprints);

    let ts = ts as usize;
    let cap = config.max_points_per_pixel;
    let tiles: Vec<(usize, Vec<TilePixel<C>>)> = (0..ntx * nty)
        .into_par_iter()
        .map_init(
            || vec![Vec::<Fragment>::with_capacity(cap); ts * ts],
            |lists, tile| {
                let (tx, ty) = (tile % ntx, tile / ntx);
                let (x0, y0) = (tx * ts, ty * ts);
                let (x1, y1) = ((x0 + ts).min(w), (y0 + ts).min(h));
                let tw = x1 - x0;
                for l in lists.iter_mut() {
                    l.clear();
                }
                for slot in offsets[tile]..offsets[tile + 1] {
                    let f = &binned[slot];
                    for y in (f.y0 as usize).max(y0)..=(f.y1 as usize).min(y1 - 1) {
                        let row = (y - y0) * tw;
                        for x in (f.x0 as usize).max(x0)..=(f.x1 as usize).min(x1 - 1) {
                            deposit(
                                &mut lists[row + x - x0],
                                &binned,
                                slot as u32,
                                x as f64,
                                y as f64,
                                cap,
                            );
                        }
                    }
                }
                let out = (0..(y1 - y0) * tw)
                    .map(|p| composite(&lists[p], &binned))
                    .collect();
                (tile, out)
            },
        )
        .collect();

    for (tile, pixels) in tiles {
        let (tx, ty) = (tile % ntx, tile / ntx);
        let (x0, y0) = (tx * ts, ty * ts);
        let tw = (x0 + ts).min(w) - x0;
        for (p, px) in pixels.into_iter().enumerate() {
            let (x, y) = (x0 + p % tw, y0 + p / tw);
            write_pixel(&mut fb, y * w + x, px, config.alpha_threshold);
        }
    }
    Ok(fb)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RenderConfig {
    pub splat: SplatConfig,
    pub animation: AnimationConfig,
}

/// Point columns for frame `t`: static points once with weight 1, animated
/// points as a forward and a backward copy with the cross-fade weights.
/// Order keys interleave copies (`2i`, `2i + 1`) so tie-breaks are stable
/// across frames.
pub struct FramePoints<const C: usize> {
    pub positions: Vec<Vector3<f64>>,
    pub features: Vec<[f32; C]>,
    pub weights: Vec<f32>,
    pub reference_depths: Vec<f64>,
    pub order: Vec<u64>,
}

impl<const C: usize> FramePoints<C> {
    pub fn as_splat_points(&self) -> SplatPoints<'_, C> {
        SplatPoints {
            positions: &self.positions,
            features: &self.features,
            weights: &self.weights,
            reference_depths: Some(&self.reference_depths),
            order: Some(&self.order),
        }
    }
}

pub fn frame_points<const C: usize>(
    cloud: &FeaturePointCloud<C>,
    flow: &EulerianFlow,
    t: usize,
    config: &AnimationConfig,
) -> Result<FramePoints<C>> {
    let n = flow.loop_length();
    let anim = symmetric_clouds_with(cloud, flow, t, n, config)?;
    let cap = cloud.len() + anim.animated.iter().filter(|&&a| a).count();
    let mut out = FramePoints {
        positions: Vec::with_capacity(cap),
        features: Vec::with_capacity(cap),
        weights: Vec::with_capacity(cap),
        reference_depths: Vec::with_capacity(cap),
        order: Vec::with_capacity(cap),
    };
    let mut push = |pos: Vector3<f64>, w: f32, key: u64, i: usize| {
        if w > 0.0 {
            out.positions.push(pos);
            out.features.push(cloud.features[i]);
            out.weights.push(w);
            out.reference_depths.push(cloud.base_depths[i]);
            out.order.push(key);
        }
    };
    for i in 0..cloud.len() {
        let key = 2 * i as u64;
        if anim.animated[i] {
            push(anim.forward_positions[i], anim.forward_weight, key, i);
            push(anim.backward_positions[i], anim.backward_weight, key + 1, i);
        } else {
            push(cloud.positions[i], 1.0, key, i);
        }
    }
    Ok(out)
}

/// Renders frame `t` of `trajectory`, animating with `flow` (whose loop
/// length must cover `t`).
pub fn render_frame<const C: usize>(
    cloud: &FeaturePointCloud<C>,
    flow: &EulerianFlow,
    trajectory: &Trajectory,
    t: usize,
    config: &RenderConfig,
) -> Result<Framebuffer<C>> {
    let frame = trajectory.frames.get(t).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "frame {t} outside trajectory of {}",
            trajectory.len()
        ))
    })?;
    let points = frame_points(cloud, flow, t, &config.animation)?;
    let camera = Camera {
        intrinsics: frame.intrinsics,
        pose: frame.pose,
    };
    splat(&points.as_splat_points(), &camera, &config.splat)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceReport {
    pub frame_paths: Vec<PathBuf>,
    pub hole_fractions: Vec<f64>,
}

impl SequenceReport {
    pub fn mean_hole_fraction(&self) -> f64 {
        if self.hole_fractions.is_empty() {
            return 0.0;
        }
        self.hole_fractions.iter().sum::<f64>() / self.hole_fractions.len() as f64
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("frame,hole_fraction\n");
        for (i, h) in self.hole_fractions.iter().enumerate() {
            s.push_str(&format!("{i},{h:.6}\n"));
        }
        s.push_str(&format!("mean,{:.6}\n", self.mean_hole_fraction()));
        s
    }
}

pub fn frame_file_name(t: usize) -> String {
    format!("frame_{t:04}.png")
}

pub fn depth_file_name(t: usize) -> String {
    format!("depth_{t:04}.pfm")
}

pub fn holes_file_name(t: usize) -> String {
    format!("holes_{t:04}.png")
}

/// Renders every frame of `trajectory` to `out_dir/frame_%04d.png` (and
/// `depth_%04d.pfm` and `holes_%04d.png` when `write_depth` is set) plus a
/// `holes.txt` report.
pub fn render_sequence(
    cloud: &FeaturePointCloud<3>,
    flow: &EulerianFlow,
    trajectory: &Trajectory,
    config: &RenderConfig,
    out_dir: impl AsRef<Path>,
    write_depth: bool,
) -> Result<SequenceReport> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut report = SequenceReport {
        frame_paths: Vec::with_capacity(trajectory.len()),
        hole_fractions: Vec::with_capacity(trajectory.len()),
    };
    for t in 0..trajectory.len() {
        let fb = render_frame(cloud, flow, trajectory, t, config)?;
        let path = out_dir.join(frame_file_name(t));
        write_png(&fb.normalized_color()?, &path)?;
        if write_depth {
            write_pfm(&fb.depth, out_dir.join(depth_file_name(t)))?;
            write_png(&fb.hole_mask, out_dir.join(holes_file_name(t)))?;
        }
        report.frame_paths.push(path);
        report.hole_fractions.push(fb.hole_fraction());
    }
    let holes = out_dir.join("holes.txt");
    fs::write(&holes, report.to_text()).map_err(|e| Error::io(&holes, e))?;
    Ok(report)
}
