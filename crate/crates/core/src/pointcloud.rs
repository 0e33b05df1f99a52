//! Feature point clouds lifted from a layer stack.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::assets::SceneAssets;
use crate::camera::{outpainted_intrinsics, unproject, CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};
use crate::layering::{
    build_layer_stack, cluster_depth, fallback_layer_depths, ClusterConfig, LayerStack,
};

/// Points with `C`-channel features. The default `C = 3` carries RGB.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePointCloud<const C: usize = 3> {
    pub positions: Vec<Vector3<f64>>,
    pub features: Vec<[f32; C]>,
    /// Pixel each point was lifted from, in source-frame coordinates.
    pub source_pixels: Vec<[f64; 2]>,
    pub layer_ids: Vec<u16>,
    /// Camera depth at lift time.
    pub base_depths: Vec<f64>,
    pub source_intrinsics: CameraIntrinsics,
    pub source_pose: CameraPose,
}

impl<const C: usize> FeaturePointCloud<C> {
    pub fn empty(source_intrinsics: CameraIntrinsics, source_pose: CameraPose) -> Self {
        FeaturePointCloud {
            positions: Vec::new(),
            features: Vec::new(),
            source_pixels: Vec::new(),
            layer_ids: Vec::new(),
            base_depths: Vec::new(),
            source_intrinsics,
            source_pose,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn push(
        &mut self,
        position: Vector3<f64>,
        feature: [f32; C],
        pixel: [f64; 2],
        layer: u16,
        depth: f64,
    ) {
        self.positions.push(position);
        self.features.push(feature);
        self.source_pixels.push(pixel);
        self.layer_ids.push(layer);
        self.base_depths.push(depth);
    }

    /// Points of the given layers only, order preserved.
    pub fn filter_layers(&self, keep: impl Fn(u16) -> bool) -> Self {
        let mut out = Self::empty(self.source_intrinsics, self.source_pose);
        for i in 0..self.len() {
            if keep(self.layer_ids[i]) {
                out.push(
                    self.positions[i],
                    self.features[i],
                    self.source_pixels[i],
                    self.layer_ids[i],
                    self.base_depths[i],
                );
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if self.features.len() != n
            || self.source_pixels.len() != n
            || self.layer_ids.len() != n
            || self.base_depths.len() != n
        {
            return Err(Error::InvalidArgument(
                "point cloud columns differ in length".into(),
            ));
        }
        if let Some(i) = self
            .positions
            .iter()
            .position(|p| !p.iter().all(|v| v.is_finite()))
        {
            return Err(Error::InvalidArgument(format!(
                "point {i} has a non-finite position"
            )));
        }
        if let Some(i) = self.base_depths.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "point {i} has non-positive depth"
            )));
        }
        Ok(())
    }
}

impl FeaturePointCloud<3> {
    /// ASCII PLY with positions and 8-bit colors, for debugging.
    pub fn to_ply(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
             property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
            self.len()
        );
        for (p, f) in self.positions.iter().zip(&self.features) {
            let c = f.map(crate::assets::png::to_u8);
            let _ = writeln!(s, "{} {} {} {} {} {}", p.x, p.y, p.z, c[0], c[1], c[2]);
        }
        s
    }

    pub fn write_ply(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_ply()).map_err(|e| Error::io(path, e))
    }
}

/// Unprojects every valid pixel of every layer at its layer depth.
///
/// Validity is the layer's inpainting mask (its raw mask without
/// inpainting). Points are ordered layer-major, then row-major.
pub fn lift_layers(
    stack: &LayerStack,
    intrinsics: &CameraIntrinsics,
    pose: &CameraPose,
) -> Result<FeaturePointCloud<3>> {
    let mut cloud = FeaturePointCloud::empty(*intrinsics, *pose);
    for layer in &stack.layers {
        layer.color.ensure_dims("layer color", intrinsics.dims())?;
        if layer.color.channels() != 3 {
            return Err(Error::InvalidArgument(
                "layer colors must have 3 channels".into(),
            ));
        }
    }
    let per_layer: Vec<FeaturePointCloud<3>> = stack
        .layers
        .par_iter()
        .map(|layer| {
            let mut part = FeaturePointCloud::empty(*intrinsics, *pose);
            let (w, h) = layer.color.dims();
            for y in 0..h {
                for x in 0..w {
                    if !layer.validity.is_set(x, y) {
                        continue;
                    }
                    let d = layer.depth.get(x, y, 0) as f64;
                    let (u, v) = (x as f64, y as f64);
                    let c = layer.color.pixel(x, y);
                    part.push(
                        unproject(u, v, d, intrinsics, pose),
                        [c[0], c[1], c[2]],
                        [u, v],
                        layer.index as u16,
                        d,
                    );
                }
            }
            part
        })
        .collect();
    for part in per_layer {
        cloud.positions.extend(part.positions);
        cloud.features.extend(part.features);
        cloud.source_pixels.extend(part.source_pixels);
        cloud.layer_ids.extend(part.layer_ids);
        cloud.base_depths.extend(part.base_depths);
    }
    cloud.validate()?;
    Ok(cloud)
}

/// The full front end on a bundle: cluster depth, build the layer stack
/// (using the bundle's per-layer depth when present, the fallback
/// otherwise) and lift it from the identity pose.
pub fn lift_scene(
    assets: &SceneAssets,
    clustering: &ClusterConfig,
) -> Result<(LayerStack, FeaturePointCloud<3>)> {
    assets.validate()?;
    let intervals = cluster_depth(&assets.depth, clustering)?;
    let predicted = if assets.layer_depths.len() == intervals.layer_count() {
        assets.layer_depths.clone()
    } else {
        if !assets.layer_depths.is_empty() {
            log::warn!(
                "bundle has {} layer depth map(s) but clustering produced {} layer(s); using fallback depth",
                assets.layer_depths.len(),
                intervals.layer_count()
            );
        }
        fallback_layer_depths(assets, &intervals)
    };
    let stack = build_layer_stack(assets, &intervals, &predicted)?;
    let k = outpainted_intrinsics(assets)?;
    let cloud = lift_layers(&stack, &k, &CameraPose::identity())?;
    Ok((stack, cloud))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::project;
    use crate::image::ImageBuffer;
    use crate::layering::{DepthIntervals, Layer};

    fn two_by_two() -> LayerStack {
        let color = ImageBuffer::new(
            2,
            2,
            3,
            vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.0, 0.5],
        )
        .unwrap();
        let ones = ImageBuffer::filled(2, 2, 1, 1.0);
        LayerStack {
            layers: vec![Layer {
                index: 0,
                mask: ones.clone(),
                validity: ones.clone(),
                color,
                depth: ones,
            }],
            intervals: DepthIntervals::new(vec![1.0, 1.001]).unwrap(),
            inpainted: true,
        }
    }

    #[test]
    fn lifts_each_pixel_along_its_ray() {
        let k = CameraIntrinsics::new(2.0, 2.0, 0.5, 0.5, 2, 2).unwrap();
        let cloud = lift_layers(&two_by_two(), &k, &CameraPose::identity()).unwrap();
        assert_eq!(cloud.len(), 4);
        assert_eq!(cloud.positions[0], Vector3::new(-0.25, -0.25, 1.0));
        assert_eq!(cloud.positions[3], Vector3::new(0.25, 0.25, 1.0));
        assert_eq!(cloud.features[1], [0.4, 0.5, 0.6]);
        assert_eq!(cloud.source_pixels[2], [0.0, 1.0]);
        for (p, s) in cloud.positions.iter().zip(&cloud.source_pixels) {
            let q = project(p, &k, &cloud.source_pose).unwrap();
            assert!((q.u - s[0]).abs() < 1e-12 && (q.v - s[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn ply_header_counts_vertices() {
        let k = CameraIntrinsics::new(2.0, 2.0, 0.5, 0.5, 2, 2).unwrap();
        let cloud = lift_layers(&two_by_two(), &k, &CameraPose::identity()).unwrap();
        let ply = cloud.to_ply();
        assert!(ply.contains("element vertex 4\n"));
        assert_eq!(ply.lines().count(), 10 + 4);
    }
}
