//! Eulerian scene animation.
//!
//! A time-invariant flow field `F` (pixels per frame) is integrated with
//! explicit Euler steps from each point's source pixel. The displaced pixel
//! is lifted back at the point's original depth, which turns the 2D motion
//! into a 3D scene flow. Two copies of the cloud, integrated forward from
//! `t = 0` and backward from `t = N`, are cross-faded so that regions
//! vacated by one copy are covered by the other.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::camera::unproject;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::pointcloud::FeaturePointCloud;

/// Flow magnitude above which a pixel counts as animated.
pub const DEFAULT_MOTION_THRESHOLD: f32 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct EulerianFlow {
    field: ImageBuffer,
    loop_length: usize,
}

impl EulerianFlow {
    pub fn new(field: ImageBuffer, loop_length: usize) -> Result<Self> {
        if field.channels() != 2 {
            return Err(Error::InvalidArgument(format!(
                "flow field needs 2 channels, got {}",
                field.channels()
            )));
        }
        field.check_finite("flow")?;
        Ok(EulerianFlow { field, loop_length })
    }

    pub fn zeros(width: usize, height: usize, loop_length: usize) -> Self {
        EulerianFlow {
            field: ImageBuffer::filled(width, height, 2, 0.0),
            loop_length,
        }
    }

    pub fn field(&self) -> &ImageBuffer {
        &self.field
    }

    pub fn loop_length(&self) -> usize {
        self.loop_length
    }

    pub fn dims(&self) -> (usize, usize) {
        self.field.dims()
    }

    /// The field multiplied by `scale`.
    pub fn scaled(&self, scale: f32) -> Result<Self> {
        let mut field = self.field.clone();
        for v in field.data_mut() {
            *v *= scale;
        }
        Self::new(field, self.loop_length)
    }

    #[inline]
    fn clamp_index(v: f64, len: usize) -> usize {
        let r = v.round();
        if r <= 0.0 || r.is_nan() {
            0
        } else {
            (r as usize).min(len - 1)
        }
    }

    /// Nearest-neighbour lookup, clamped to the frame.
    #[inline]
    pub fn sample_nearest(&self, u: f64, v: f64) -> [f64; 2] {
        let (w, h) = self.field.dims();
        let p = self
            .field
            .pixel(Self::clamp_index(u, w), Self::clamp_index(v, h));
        [p[0] as f64, p[1] as f64]
    }

    /// Bilinear lookup, clamped to the frame.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> [f64; 2] {
        let (w, h) = self.field.dims();
        let u = u.clamp(0.0, (w - 1) as f64);
        let v = v.clamp(0.0, (h - 1) as f64);
        let (x0, y0) = (u.floor() as usize, v.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (u - x0 as f64, v - y0 as f64);
        let mut out = [0.0; 2];
        for (c, o) in out.iter_mut().enumerate() {
            let s = |x, y| self.field.get(x, y, c) as f64;
            let top = s(x0, y0) * (1.0 - fx) + s(x1, y0) * fx;
            let bottom = s(x0, y1) * (1.0 - fx) + s(x1, y1) * fx;
            *o = top * (1.0 - fy) + bottom * fy;
        }
        out
    }

    /// Default animation mask: pixels where `|F| > DEFAULT_MOTION_THRESHOLD`.
    pub fn motion_mask(&self) -> ImageBuffer {
        let (w, h) = self.field.dims();
        let data = self
            .field
            .data()
            .chunks_exact(2)
            .map(|f| {
                if f[0].hypot(f[1]) > DEFAULT_MOTION_THRESHOLD {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        ImageBuffer::new(w, h, 1, data).expect("mask dimensions")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlowSampling {
    #[default]
    Nearest,
    Bilinear,
}

/// Cross-fade curve between the forward and backward copies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BlendCurve {
    #[default]
    Linear,
    SmoothStep,
}

impl BlendCurve {
    /// `(forward_weight, backward_weight)` at frame `t` of `n`; they sum to 1.
    pub fn weights(self, t: usize, n: usize) -> (f32, f32) {
        if t == 0 {
            return (1.0, 0.0);
        }
        if t >= n {
            return (0.0, 1.0);
        }
        let s = t as f64 / n as f64;
        let b = match self {
            BlendCurve::Linear => s,
            BlendCurve::SmoothStep => s * s * (3.0 - 2.0 * s),
        } as f32;
        (1.0 - b, b)
    }
}

/// Euler integration of `flow` for `t` steps from `start`; backward
/// integration follows `-F`.
pub fn integrate_flow(
    flow: &EulerianFlow,
    start: [f64; 2],
    t: usize,
    direction: Direction,
) -> [f64; 2] {
    integrate_flow_with(flow, start, t, direction, FlowSampling::Nearest)
}

pub fn integrate_flow_with(
    flow: &EulerianFlow,
    start: [f64; 2],
    t: usize,
    direction: Direction,
    sampling: FlowSampling,
) -> [f64; 2] {
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let mut p = start;
    for _ in 0..t {
        let f = match sampling {
            FlowSampling::Nearest => flow.sample_nearest(p[0], p[1]),
            FlowSampling::Bilinear => flow.sample_bilinear(p[0], p[1]),
        };
        p = [p[0] + sign * f[0], p[1] + sign * f[1]];
    }
    p
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnimationConfig {
    pub sampling: FlowSampling,
    pub blend: BlendCurve,
    /// Explicit animation mask over the flow frame; defaults to
    /// [`EulerianFlow::motion_mask`].
    pub mask: Option<ImageBuffer>,
}

/// Which points move: those whose source pixel is set in the mask.
pub fn animated_points<const C: usize>(
    cloud: &FeaturePointCloud<C>,
    flow: &EulerianFlow,
    mask: Option<&ImageBuffer>,
) -> Vec<bool> {
    let default_mask;
    let mask = match mask {
        Some(m) => m,
        None => {
            default_mask = flow.motion_mask();
            &default_mask
        }
    };
    let (w, h) = mask.dims();
    cloud
        .source_pixels
        .iter()
        .map(|p| {
            mask.is_set(
                EulerianFlow::clamp_index(p[0], w),
                EulerianFlow::clamp_index(p[1], h),
            )
        })
        .collect()
}

/// Positions after `t` steps in `direction`. Depth is held fixed along the
/// motion path; points outside the animation mask do not move.
pub fn displace_cloud<const C: usize>(
    cloud: &FeaturePointCloud<C>,
    flow: &EulerianFlow,
    t: usize,
    direction: Direction,
    mask: Option<&ImageBuffer>,
) -> Vec<Vector3<f64>> {
    let animated = animated_points(cloud, flow, mask);
    displace_masked(cloud, flow, t, direction, &animated, FlowSampling::Nearest)
}

fn displace_masked<const C: usize>(
    cloud: &FeaturePointCloud<C>,
    flow: &EulerianFlow,
    t: usize,
    direction: Direction,
    animated: &[bool],
    sampling: FlowSampling,
) -> Vec<Vector3<f64>> {
    let k = &cloud.source_intrinsics;
    let pose = &cloud.source_pose;
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let x = cloud.positions[i];
            if !animated[i] || t == 0 {
                return x;
            }
            let p = cloud.source_pixels[i];
            let q = integrate_flow_with(flow, p, t, direction, sampling);
            if q == p {
                return x;
            }
            let d = cloud.base_depths[i];
            let from = unproject(p[0], p[1], d, k, pose);
            let to = unproject(q[0], q[1], d, k, pose);
            x + (to - from)
        })
        .collect()
}

/// Forward and backward copies of the cloud at frame `t` of a loop of `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnimatedCloud {
    pub forward_positions: Vec<Vector3<f64>>,
    pub backward_positions: Vec<Vector3<f64>>,
    pub forward_weight: f32,
    pub backward_weight: f32,
    pub time: usize,
    /// Points inside the animation mask. Static points have identical
    /// forward and backward positions.
    pub animated: Vec<bool>,
}

pub fn symmetric_clouds<const C: usize>(
    cloud: &FeaturePointCloud<C>,
    flow: &EulerianFlow,
    t: usize,
    n: usize,
) -> Result<AnimatedCloud> {
    symmetric_clouds_with(cloud, flow, t, n, &AnimationConfig::default())
}

pub fn symmetric_clouds_with<const C: usize>(
    cloud: &FeaturePointCloud<C>,
    flow: &EulerianFlow,
    t: usize,
    n: usize,
    config: &AnimationConfig,
) -> Result<AnimatedCloud> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "animation loop length must be positive".into(),
        ));
    }
    if t > n {
        return Err(Error::InvalidArgument(format!(
            "frame {t} outside loop of {n}"
        )));
    }
    let animated = animated_points(cloud, flow, config.mask.as_ref());
    let forward_positions = displace_masked(
        cloud,
        flow,
        t,
        Direction::Forward,
        &animated,
        config.sampling,
    );
    let backward_positions = displace_masked(
        cloud,
        flow,
        n - t,
        Direction::Backward,
        &animated,
        config.sampling,
    );
    let (forward_weight, backward_weight) = config.blend.weights(t, n);
    Ok(AnimatedCloud {
        forward_positions,
        backward_positions,
        forward_weight,
        backward_weight,
        time: t,
        animated,
    })
}
