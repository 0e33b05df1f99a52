//! Pinhole cameras, poses and trajectories.
//!
//! Pixel coordinates are continuous with pixel `(x, y)` centred at
//! `(x, y)`. Camera frames are x right, y down, z forward. Poses map world
//! points into the camera frame: `x_cam = R * X + t`. The world frame is the
//! camera frame of the first pose.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};

use crate::assets::SceneAssets;
use crate::error::{Error, Result};
use crate::pointcloud::FeaturePointCloud;

/// Points closer than this to the camera plane are treated as behind it.
pub const MIN_DEPTH: f64 = 1e-6;

/// Default focal length as a fraction of the larger image side.
pub const DEFAULT_FOCAL_FACTOR: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "focal lengths must be positive, got ({fx}, {fy})"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "image size must be at least 1x1".into(),
            ));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidArgument(
                "principal point must be finite".into(),
            ));
        }
        Ok(CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Centred principal point; focal defaults to `0.8 * max(width, height)`.
    pub fn centered(width: usize, height: usize, focal: Option<f64>) -> Result<Self> {
        let f = focal.unwrap_or(DEFAULT_FOCAL_FACTOR * width.max(height) as f64);
        Self::new(
            f,
            f,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
        )
    }

    /// The same camera restricted to a `width x height` window whose top-left
    /// corner sits at `(left, top)`.
    pub fn crop(&self, left: usize, top: usize, width: usize, height: usize) -> Result<Self> {
        Self::new(
            self.fx,
            self.fy,
            self.cx - left as f64,
            self.cy - top as f64,
            width,
            height,
        )
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// World-to-camera rigid transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Default for CameraPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl CameraPose {
    pub fn identity() -> Self {
        CameraPose {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        CameraPose {
            rotation,
            translation,
        }
    }

    /// Pose of a camera centred at `center` with camera-to-world rotation
    /// `orientation`.
    pub fn from_center(orientation: UnitQuaternion<f64>, center: Vector3<f64>) -> Self {
        let rotation = orientation.inverse();
        CameraPose {
            rotation,
            translation: -(rotation * center),
        }
    }

    #[inline]
    pub fn transform(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * world + self.translation
    }

    #[inline]
    pub fn inverse_transform(&self, cam: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * (cam - self.translation)
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.inverse() * self.translation)
    }

    /// Transform taking points in `self`'s camera frame into `other`'s.
    pub fn relative_to(&self, other: &CameraPose) -> CameraPose {
        let rotation = other.rotation * self.rotation.inverse();
        CameraPose {
            rotation,
            translation: other.translation - rotation * self.translation,
        }
    }

    /// Whether the quaternion is unit length within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.rotation.quaternion().norm() - 1.0).abs() <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    /// Depth along the camera z axis.
    pub z: f64,
}

/// Projects a world point; `None` when it lies behind the camera.
#[inline]
pub fn project(
    point: &Vector3<f64>,
    intrinsics: &CameraIntrinsics,
    pose: &CameraPose,
) -> Option<Projection> {
    project_camera(&pose.transform(point), intrinsics)
}

#[inline]
pub fn project_camera(cam: &Vector3<f64>, k: &CameraIntrinsics) -> Option<Projection> {
    let z = cam.z;
    if z <= MIN_DEPTH {
        return None;
    }
    Some(Projection {
        u: k.fx * cam.x / z + k.cx,
        v: k.fy * cam.y / z + k.cy,
        z,
    })
}

#[inline]
pub fn unproject_camera(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Vector3<f64> {
    Vector3::new((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth)
}

/// Lifts pixel `(u, v)` at camera depth `depth` into world coordinates.
#[inline]
pub fn unproject(
    u: f64,
    v: f64,
    depth: f64,
    intrinsics: &CameraIntrinsics,
    pose: &CameraPose,
) -> Vector3<f64> {
    pose.inverse_transform(&unproject_camera(u, v, depth, intrinsics))
}

/// Shortest-arc spherical interpolation; exact at both endpoints.
pub fn slerp(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, s: f64) -> UnitQuaternion<f64> {
    if s <= 0.0 {
        return *a;
    }
    if s >= 1.0 {
        return *b;
    }
    let qa = a.quaternion().coords;
    let mut qb = b.quaternion().coords;
    if qa.dot(&qb) < 0.0 {
        qb = -qb;
    }
    // Angle between the 4-vectors, stable for nearly equal inputs.
    let theta = 2.0 * (qa - qb).norm().atan2((qa + qb).norm());
    let blended = if theta < 1e-12 {
        qa * (1.0 - s) + qb * s
    } else {
        let sin = theta.sin();
        qa * (((1.0 - s) * theta).sin() / sin) + qb * ((s * theta).sin() / sin)
    };
    UnitQuaternion::from_quaternion(Quaternion::from(blended))
}

/// Linear translation, spherical rotation. `s = 0` gives `c1`, `s = 1` gives
/// `cn`, both bit-exact.
pub fn interpolate_pose(c1: &CameraPose, cn: &CameraPose, s: f64) -> CameraPose {
    if s <= 0.0 {
        return *c1;
    }
    if s >= 1.0 {
        return *cn;
    }
    CameraPose {
        rotation: slerp(&c1.rotation, &cn.rotation, s),
        translation: c1.translation * (1.0 - s) + cn.translation * s,
    }
}

/// Camera at `position` looking at `target`, with its image-down axis kept
/// as close as possible to world +y (no roll relative to the start camera).
///
/// Returns `None` when `target` coincides with `position` or the view
/// direction is parallel to the y axis.
pub fn look_at(position: &Vector3<f64>, target: &Vector3<f64>) -> Option<CameraPose> {
    let forward = (target - position).try_normalize(1e-12)?;
    let down = Vector3::y();
    let right = down.cross(&forward).try_normalize(1e-12)?;
    let cam_down = forward.cross(&right);
    let cam_to_world = Matrix3::from_columns(&[right, cam_down, forward]);
    let orientation =
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(cam_to_world));
    Some(CameraPose::from_center(orientation, *position))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutocruiseConfig {
    /// Fraction of the median scene depth to advance, in `(0, 1)`.
    pub advance_fraction: f64,
    /// Depth quantile above which points count as "far".
    pub far_percentile: f64,
}

impl Default for AutocruiseConfig {
    fn default() -> Self {
        AutocruiseConfig {
            advance_fraction: 0.3,
            far_percentile: 0.95,
        }
    }
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Picks an end pose by flying toward the far, central part of the scene.
///
/// The target is the centroid of points whose depth under `c1` reaches the
/// `far_percentile` quantile and whose source pixel lies in the central
/// third of the frame horizontally. The camera advances
/// `advance_fraction * median depth` toward it and re-aims at it. With no
/// such points it advances straight ahead.
pub fn autocruise_end_pose<const C: usize>(
    cloud: &FeaturePointCloud<C>,
    c1: &CameraPose,
    config: &AutocruiseConfig,
) -> Result<CameraPose> {
    if cloud.is_empty() {
        return Err(Error::Empty(
            "autocruise needs a non-empty point cloud".into(),
        ));
    }
    if !(0.0..1.0).contains(&config.advance_fraction)
        || !(0.0..=1.0).contains(&config.far_percentile)
    {
        return Err(Error::InvalidArgument(format!(
            "autocruise fractions out of range: {config:?}"
        )));
    }
    let depths: Vec<f64> = cloud.positions.iter().map(|p| c1.transform(p).z).collect();
    let mut sorted = depths.clone();
    sorted.sort_by(f64::total_cmp);
    let median = nearest_rank(&sorted, 0.5);
    let far = nearest_rank(&sorted, config.far_percentile);

    let width = cloud.source_intrinsics.width as f64;
    let (lo, hi) = (width / 3.0, 2.0 * width / 3.0);
    let mut sum = Vector3::zeros();
    let mut count = 0usize;
    for (i, p) in cloud.positions.iter().enumerate() {
        let u = cloud.source_pixels[i][0];
        if depths[i] >= far && u >= lo && u < hi {
            sum += p;
            count += 1;
        }
    }
    let start = c1.center();
    let ahead = c1.rotation.inverse() * Vector3::z();
    let target = if count == 0 {
        start + ahead * median
    } else {
        sum / count as f64
    };
    let direction = (target - start).try_normalize(1e-12).unwrap_or(ahead);
    let position = start + direction * (config.advance_fraction * median);
    Ok(look_at(&position, &target)
        .unwrap_or(CameraPose::from_center(c1.rotation.inverse(), position)))
}

/// Intrinsics of the outpainted frame: the original camera with its
/// principal point shifted by the left/top margins.
pub fn outpainted_intrinsics(assets: &SceneAssets) -> Result<CameraIntrinsics> {
    let (w, h) = assets.original.dims();
    let (fw, fh) = assets.frame_dims();
    let f = assets
        .focal_length
        .unwrap_or(DEFAULT_FOCAL_FACTOR * w.max(h) as f64);
    CameraIntrinsics::new(
        f,
        f,
        assets.margins.left as f64 + (w as f64 - 1.0) / 2.0,
        assets.margins.top as f64 + (h as f64 - 1.0) / 2.0,
        fw,
        fh,
    )
}

/// Intrinsics used for output frames: original resolution, same focal length,
/// principal point moved back by the margins.
pub fn render_intrinsics(assets: &SceneAssets) -> Result<CameraIntrinsics> {
    let (w, h) = assets.original.dims();
    outpainted_intrinsics(assets)?.crop(assets.margins.left, assets.margins.top, w, h)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryFrame {
    pub pose: CameraPose,
    pub intrinsics: CameraIntrinsics,
}

/// Camera path for an `N`-frame video.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<TrajectoryFrame>,
}

impl Trajectory {
    /// `n` frames from `c1` to `cn`, endpoints exact.
    pub fn interpolate(
        c1: &CameraPose,
        cn: &CameraPose,
        n: usize,
        intrinsics: CameraIntrinsics,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "a trajectory needs at least 2 frames, got {n}"
            )));
        }
        let frames = (0..n)
            .map(|k| TrajectoryFrame {
                pose: interpolate_pose(c1, cn, k as f64 / (n - 1) as f64),
                intrinsics,
            })
            .collect();
        Ok(Trajectory { frames })
    }

    /// `n` frames from the identity pose to the autocruise end pose.
    pub fn autocruise<const C: usize>(
        cloud: &FeaturePointCloud<C>,
        n: usize,
        intrinsics: CameraIntrinsics,
        config: &AutocruiseConfig,
    ) -> Result<Self> {
        let c1 = CameraPose::identity();
        let cn = autocruise_end_pose(cloud, &c1, config)?;
        Self::interpolate(&c1, &cn, n, intrinsics)
    }

    pub fn fixed(pose: CameraPose, n: usize, intrinsics: CameraIntrinsics) -> Self {
        Trajectory {
            frames: vec![TrajectoryFrame { pose, intrinsics }; n],
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Animation period: the last frame sits at `t = len - 1`.
    pub fn loop_length(&self) -> usize {
        self.frames.len().saturating_sub(1)
    }

    /// Text form, one frame per line:
    /// `qw qx qy qz tx ty tz [fx fy cx cy width height]`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# qw qx qy qz tx ty tz fx fy cx cy width height\n");
        for f in &self.frames {
            let q = f.pose.rotation.quaternion();
            let t = f.pose.translation;
            let k = f.intrinsics;
            let _ = writeln!(
                out,
                "{:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {} {}",
                q.w, q.i, q.j, q.k, t.x, t.y, t.z, k.fx, k.fy, k.cx, k.cy, k.width, k.height
            );
        }
        out
    }

    /// Parses [`Trajectory::to_text`] output. Lines without intrinsics use
    /// `default_intrinsics`.
    pub fn parse(text: &str, default_intrinsics: Option<CameraIntrinsics>) -> Result<Self> {
        let mut frames = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| Error::Manifest {
                line: i + 1,
                reason: format!("trajectory: {reason}"),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 7 && fields.len() != 13 {
                return Err(bad(format!(
                    "expected 7 or 13 fields, found {}",
                    fields.len()
                )));
            }
            let nums: Vec<f64> = fields[..fields.len().min(11)]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| bad(format!("bad number {s:?}")))
                })
                .collect::<Result<_>>()?;
            let q = Quaternion::new(nums[0], nums[1], nums[2], nums[3]);
            if (q.norm() - 1.0).abs() > 1e-6 {
                return Err(bad(format!("quaternion norm {} is not 1", q.norm())));
            }
            let pose = CameraPose::new(
                UnitQuaternion::new_unchecked(q),
                Vector3::new(nums[4], nums[5], nums[6]),
            );
            let intrinsics = if fields.len() == 13 {
                let dim = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| bad(format!("bad size {s:?}")))
                };
                CameraIntrinsics::new(
                    nums[7],
                    nums[8],
                    nums[9],
                    nums[10],
                    dim(fields[11])?,
                    dim(fields[12])?,
                )?
            } else {
                default_intrinsics
                    .ok_or_else(|| bad("no intrinsics on line and no default".into()))?
            };
            frames.push(TrajectoryFrame { pose, intrinsics });
        }
        if frames.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a trajectory needs at least 2 frames, got {}",
                frames.len()
            )));
        }
        Ok(Trajectory { frames })
    }

    pub fn read(
        path: impl AsRef<Path>,
        default_intrinsics: Option<CameraIntrinsics>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, default_intrinsics)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 64.0, 64.0, 128, 128).unwrap()
    }

    #[test]
    fn principal_ray_and_similar_triangles() {
        let id = CameraPose::identity();
        let p = project(&Vector3::new(0.0, 0.0, 2.0), &cam(), &id).unwrap();
        assert_eq!((p.u, p.v, p.z), (64.0, 64.0, 2.0));
        let p = project(&Vector3::new(2.0, 0.0, 2.0), &cam(), &id).unwrap();
        assert_eq!((p.u, p.v, p.z), (164.0, 64.0, 2.0));
        assert!(project(&Vector3::new(0.0, 0.0, -1.0), &cam(), &id).is_none());
    }

    #[test]
    fn unproject_inverts_examples() {
        let id = CameraPose::identity();
        assert_eq!(
            unproject(64.0, 64.0, 2.0, &cam(), &id),
            Vector3::new(0.0, 0.0, 2.0)
        );
        assert_eq!(
            unproject(164.0, 64.0, 2.0, &cam(), &id),
            Vector3::new(2.0, 0.0, 2.0)
        );
    }

    #[test]
    fn slerp_halfway_of_quarter_turn() {
        let c1 = CameraPose::identity();
        let cn = CameraPose::new(
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2),
            Vector3::new(1.0, 2.0, 3.0),
        );
        let mid = interpolate_pose(&c1, &cn, 0.5);
        assert_relative_eq!(mid.rotation.angle(), FRAC_PI_2 / 2.0, epsilon = 1e-12);
        assert_relative_eq!(
            mid.rotation.axis().unwrap().into_inner(),
            Vector3::z(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            mid.translation,
            Vector3::new(0.5, 1.0, 1.5),
            epsilon = 1e-15
        );
        assert_eq!(interpolate_pose(&c1, &cn, 0.0), c1);
        assert_eq!(interpolate_pose(&c1, &cn, 1.0), cn);
    }

    #[test]
    fn slerp_takes_shortest_arc() {
        let a = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 0.1);
        let b = UnitQuaternion::new_unchecked(
            -UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 0.3).into_inner(),
        );
        let m = slerp(&a, &b, 0.5);
        assert_relative_eq!(m.angle_to(&a), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn look_at_straight_ahead_is_identity_rotation() {
        let pose = look_at(&Vector3::zeros(), &Vector3::new(0.0, 0.0, 5.0)).unwrap();
        assert_relative_eq!(pose.rotation.angle(), 0.0, epsilon = 1e-12);
        let p = project(&Vector3::new(0.0, 0.0, 5.0), &cam(), &pose).unwrap();
        assert_relative_eq!(p.u, 64.0, epsilon = 1e-12);
        assert!(look_at(&Vector3::zeros(), &Vector3::zeros()).is_none());
    }

    #[test]
    fn look_at_centres_target() {
        let pos = Vector3::new(1.0, -0.5, 0.3);
        let target = Vector3::new(-2.0, 1.0, 7.0);
        let pose = look_at(&pos, &target).unwrap();
        let p = project(&target, &cam(), &pose).unwrap();
        assert_relative_eq!(p.u, 64.0, epsilon = 1e-9);
        assert_relative_eq!(p.v, 64.0, epsilon = 1e-9);
        assert_relative_eq!(pose.center(), pos, epsilon = 1e-12);
        // Camera x axis stays horizontal (no roll).
        let right = pose.rotation.inverse() * Vector3::x();
        assert_relative_eq!(right.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn crop_shifts_principal_point() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 320.0, 640, 640).unwrap();
        let r = k.crop(64, 64, 512, 512).unwrap();
        assert_eq!((r.cx, r.cy, r.fx, r.width), (256.0, 256.0, 500.0, 512));
        assert_eq!(k.crop(0, 0, 640, 640).unwrap(), k);
    }

    #[test]
    fn relative_pose_maps_between_frames() {
        let a = CameraPose::new(
            UnitQuaternion::from_euler_angles(0.1, -0.2, 0.3),
            Vector3::new(0.5, 0.0, -1.0),
        );
        let b = CameraPose::new(
            UnitQuaternion::from_euler_angles(-0.3, 0.1, 0.0),
            Vector3::new(0.0, 1.0, 2.0),
        );
        let x = Vector3::new(0.3, -0.7, 4.0);
        let rel = a.relative_to(&b);
        assert_relative_eq!(
            rel.transform(&a.transform(&x)),
            b.transform(&x),
            epsilon = 1e-12
        );
    }

    #[test]
    fn trajectory_text_round_trip() {
        let k = cam();
        let cn = CameraPose::new(
            UnitQuaternion::from_euler_angles(0.0, 0.3, 0.0),
            Vector3::new(0.1, 0.0, -0.7),
        );
        let t = Trajectory::interpolate(&CameraPose::identity(), &cn, 5, k).unwrap();
        let back = Trajectory::parse(&t.to_text(), None).unwrap();
        assert_eq!(t, back);
        assert_eq!(back.loop_length(), 4);
        assert!(Trajectory::parse("1 0 0 0 0 0 0\n", Some(k)).is_err());
        assert!(Trajectory::parse("1 0 0 0 0 0\n1 0 0 0 0 0 0\n", Some(k)).is_err());
        assert!(Trajectory::parse("2 0 0 0 0 0 0\n1 0 0 0 0 0 0\n", Some(k)).is_err());
    }
}
