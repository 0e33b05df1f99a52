//! Image quality and multi-view consistency metrics.

use std::fmt::Write as _;

use crate::camera::{project_camera, unproject_camera, CameraIntrinsics, CameraPose, Trajectory};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// PSNR reported for (near-)identical images.
pub const PSNR_CAP: f64 = 99.0;
const MSE_FLOOR: f64 = 1e-10;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Relative depth jump treated as a discontinuity when estimating
/// disocclusions.
pub const DISCONTINUITY_THRESHOLD: f64 = 0.1;

fn same_shape(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    b.ensure_dims("metric operand", a.dims())?;
    if a.channels() != b.channels() {
        return Err(Error::InvalidArgument(format!(
            "channel mismatch: {} vs {}",
            a.channels(),
            b.channels()
        )));
    }
    Ok(())
}

pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    same_shape(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(1 / MSE)` for data in `[0, 1]`, capped at [`PSNR_CAP`].
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    let m = mse(a, b)?;
    if m < MSE_FLOOR {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable "valid" filtering of a single-channel plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - SSIM_WINDOW + 1, h - SSIM_WINDOW + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW)
                .map(|i| k[i] * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean structural similarity over all full 11x11 Gaussian windows
/// (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1), averaged over
/// channels.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    same_shape(a, b)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let k = gaussian_kernel();
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let ch = a.channels();
    let mut total = 0.0;
    for c in 0..ch {
        let pa: Vec<f64> = a
            .data()
            .iter()
            .skip(c)
            .step_by(ch)
            .map(|&v| v as f64)
            .collect();
        let pb: Vec<f64> = b
            .data()
            .iter()
            .skip(c)
            .step_by(ch)
            .map(|&v| v as f64)
            .collect();
        let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
        let mu_a = filter_valid(&pa, w, h, &k);
        let mu_b = filter_valid(&pb, w, h, &k);
        let aa = filter_valid(&prod(&pa, &pa), w, h, &k);
        let bb = filter_valid(&prod(&pb, &pb), w, h, &k);
        let ab = filter_valid(&prod(&pa, &pb), w, h, &k);
        let mut sum = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
        total += sum / mu_a.len() as f64;
    }
    Ok(total / ch as f64)
}

fn bilinear(img: &ImageBuffer, u: f64, v: f64, out: &mut [f64]) {
    let (w, h) = img.dims();
    let (x0, y0) = (u.floor() as usize, v.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (u - x0 as f64, v - y0 as f64);
    for (c, o) in out.iter_mut().enumerate() {
        let s = |x, y| img.get(x, y, c) as f64;
        let top = s(x0, y0) * (1.0 - fx) + s(x1, y0) * fx;
        let bottom = s(x0, y1) * (1.0 - fx) + s(x1, y1) * fx;
        *o = top * (1.0 - fy) + bottom * fy;
    }
}

/// Where pixel `(x, y)` of view `t` lands in view `t + 1`, if inside it.
#[inline]
fn warp(
    x: usize,
    y: usize,
    depth: f64,
    relative_pose: &CameraPose,
    k: &CameraIntrinsics,
) -> Option<(f64, f64, f64)> {
    let cam_t = unproject_camera(x as f64, y as f64, depth, k);
    let p = project_camera(&relative_pose.transform(&cam_t), k)?;
    let inside =
        p.u >= 0.0 && p.v >= 0.0 && p.u <= (k.width - 1) as f64 && p.v <= (k.height - 1) as f64;
    inside.then_some((p.u, p.v, p.z))
}

/// Mean L1 error (times 100) between `frame_t` and `frame_t1` backward-warped
/// into view `t` through `depth_t` and `relative_pose` (camera `t` to camera
/// `t + 1`). Pixels without depth, excluded pixels and pixels warping outside
/// the image are skipped.
pub fn photometric_consistency(
    frame_t: &ImageBuffer,
    frame_t1: &ImageBuffer,
    depth_t: &ImageBuffer,
    relative_pose: &CameraPose,
    intrinsics: &CameraIntrinsics,
    exclusion: Option<&ImageBuffer>,
) -> Result<f64> {
    same_shape(frame_t, frame_t1)?;
    let dims = frame_t.dims();
    depth_t.ensure_dims("depth", dims)?;
    if intrinsics.dims() != dims {
        return Err(Error::DimensionMismatch {
            what: "intrinsics".into(),
            expected: dims,
            found: intrinsics.dims(),
        });
    }
    if let Some(m) = exclusion {
        m.ensure_dims("exclusion mask", dims)?;
    }
    let ch = frame_t.channels();
    let mut sample = vec![0.0; ch];
    let (mut sum, mut count) = (0.0f64, 0usize);
    for y in 0..dims.1 {
        for x in 0..dims.0 {
            let d = depth_t.get(x, y, 0) as f64;
            if !(d > 0.0) || exclusion.is_some_and(|m| m.is_set(x, y)) {
                continue;
            }
            let Some((u, v, _)) = warp(x, y, d, relative_pose, intrinsics) else {
                continue;
            };
            bilinear(frame_t1, u, v, &mut sample);
            let px = frame_t.pixel(x, y);
            let l1: f64 = px
                .iter()
                .zip(&sample)
                .map(|(&a, &b)| (a as f64 - b).abs())
                .sum();
            sum += l1 / ch as f64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Empty(
            "no valid pixels for photometric consistency".into(),
        ));
    }
    Ok(100.0 * sum / count as f64)
}

/// Default exclusion for consistency: holes of either frame plus pixels whose
/// warp lands on a depth discontinuity or disagrees with the next frame's
/// depth by more than [`DISCONTINUITY_THRESHOLD`] (relative).
pub fn disocclusion_mask(
    depth_t: &ImageBuffer,
    holes_t: Option<&ImageBuffer>,
    depth_t1: &ImageBuffer,
    holes_t1: Option<&ImageBuffer>,
    relative_pose: &CameraPose,
    intrinsics: &CameraIntrinsics,
) -> Result<ImageBuffer> {
    let dims = depth_t.dims();
    depth_t1.ensure_dims("next depth", dims)?;
    let (w, h) = dims;
    let mut mask = ImageBuffer::filled(w, h, 1, 0.0);
    let thr = DISCONTINUITY_THRESHOLD;
    for y in 0..h {
        for x in 0..w {
            let d = depth_t.get(x, y, 0) as f64;
            let excluded = if !(d > 0.0) || holes_t.is_some_and(|m| m.is_set(x, y)) {
                true
            } else if let Some((u, v, z)) = warp(x, y, d, relative_pose, intrinsics) {
                let (x0, y0) = (u.floor() as usize, v.floor() as usize);
                let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
                let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)];
                corners.iter().any(|&(cx, cy)| {
                    let dn = depth_t1.get(cx, cy, 0) as f64;
                    holes_t1.is_some_and(|m| m.is_set(cx, cy))
                        || !(dn > 0.0)
                        || (dn - z).abs() > thr * z
                })
            } else {
                false
            };
            if excluded {
                mask.set(x, y, 0, 1.0);
            }
        }
    }
    Ok(mask)
}

/// A rendered frame: color, depth (0 where empty) and an optional hole mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceFrame {
    pub image: ImageBuffer,
    pub depth: ImageBuffer,
    pub holes: Option<ImageBuffer>,
}

/// Consistency of every consecutive pair `(t, t + 1)` along `trajectory`,
/// each scored outside its [`disocclusion_mask`].
pub fn sequence_consistency(frames: &[SequenceFrame], trajectory: &Trajectory) -> Result<Vec<f64>> {
    if frames.len() != trajectory.len() {
        return Err(Error::InvalidArgument(format!(
            "{} frames for a trajectory of {}",
            frames.len(),
            trajectory.len()
        )));
    }
    frames
        .windows(2)
        .zip(trajectory.frames.windows(2))
        .map(|(f, p)| {
            let rel = p[0].pose.relative_to(&p[1].pose);
            let k = &p[0].intrinsics;
            let mask = disocclusion_mask(
                &f[0].depth,
                f[0].holes.as_ref(),
                &f[1].depth,
                f[1].holes.as_ref(),
                &rel,
                k,
            )?;
            photometric_consistency(&f[0].image, &f[1].image, &f[0].depth, &rel, k, Some(&mask))
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub consistency: Option<f64>,
}

/// Per-frame metrics and their means.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub frames: Vec<FrameMetrics>,
}

impl MetricsReport {
    fn mean(&self, f: impl Fn(&FrameMetrics) -> Option<f64>) -> Option<f64> {
        let v: Vec<f64> = self.frames.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn psnr(&self) -> Option<f64> {
        self.mean(|f| f.psnr)
    }

    pub fn ssim(&self) -> Option<f64> {
        self.mean(|f| f.ssim)
    }

    pub fn consistency(&self) -> Option<f64> {
        self.mean(|f| f.consistency)
    }

    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
        let mut s = String::from("frame,psnr,ssim,consistency\n");
        for f in &self.frames {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                f.frame,
                cell(f.psnr),
                cell(f.ssim),
                cell(f.consistency)
            );
        }
        let _ = writeln!(
            s,
            "mean,{},{},{}",
            cell(self.psnr()),
            cell(self.ssim()),
            cell(self.consistency())
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, v: f32) -> ImageBuffer {
        ImageBuffer::filled(w, h, 3, v)
    }

    #[test]
    fn psnr_cap_and_uniform_offset() {
        let a = img(8, 8, 0.5);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        let b = img(8, 8, 0.6);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-5);
        assert!(psnr(&a, &img(4, 8, 0.5)).is_err());
    }

    #[test]
    fn ssim_identity_and_size_check() {
        let a = ImageBuffer::from_fn(16, 12, |x, y| [((x * 7 + y * 3) % 11) as f32 / 10.0]);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let small = ImageBuffer::filled(10, 20, 1, 0.0);
        assert!(ssim(&small, &small).is_err());
    }

    #[test]
    fn ssim_constant_images_reduce_to_luminance_term() {
        // sigma = 0 everywhere, so only the luminance factor is left.
        let a = ImageBuffer::filled(11, 11, 1, 0.25);
        let b = ImageBuffer::filled(11, 11, 1, 0.75);
        let c1 = 0.0001;
        let expected = (2.0 * 0.25 * 0.75 + c1) / (0.25f64.powi(2) + 0.75f64.powi(2) + c1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn consistency_identity_and_offset() {
        let k = CameraIntrinsics::centered(16, 16, None).unwrap();
        let depth = ImageBuffer::filled(16, 16, 1, 3.0);
        let a = img(16, 16, 0.5);
        let id = CameraPose::identity();
        assert_eq!(
            photometric_consistency(&a, &a, &depth, &id, &k, None).unwrap(),
            0.0
        );
        let b = img(16, 16, 0.6);
        let c = photometric_consistency(&a, &b, &depth, &id, &k, None).unwrap();
        assert!((c - 10.0).abs() < 1e-4, "{c}");
    }

    #[test]
    fn consistency_needs_valid_pixels() {
        let k = CameraIntrinsics::centered(4, 4, None).unwrap();
        let a = img(4, 4, 0.5);
        let none = ImageBuffer::filled(4, 4, 1, 0.0);
        let id = CameraPose::identity();
        assert!(photometric_consistency(&a, &a, &none, &id, &k, None).is_err());
        let depth = ImageBuffer::filled(4, 4, 1, 1.0);
        let all = ImageBuffer::filled(4, 4, 1, 1.0);
        assert!(photometric_consistency(&a, &a, &depth, &id, &k, Some(&all)).is_err());
    }

    #[test]
    fn report_means_match_frames() {
        let r = MetricsReport {
            frames: vec![
                FrameMetrics {
                    frame: 0,
                    psnr: Some(20.0),
                    ssim: Some(0.5),
                    consistency: Some(1.0),
                },
                FrameMetrics {
                    frame: 1,
                    psnr: Some(30.0),
                    ssim: Some(0.7),
                    consistency: None,
                },
            ],
        };
        assert_eq!(r.psnr(), Some(25.0));
        assert_eq!(r.consistency(), Some(1.0));
        assert!(r.to_csv().ends_with("mean,25.000000,0.600000,1.000000\n"));
    }
}
