//! Layered-depth-image scene engine.
//!
//! Turns a single image plus file-based provider assets (outpainting, depth,
//! per-layer inpainting, Eulerian flow) into an animated fly-through:
//!
//! 1. [`layering`] clusters depth into intervals, splits the image into
//!    layers and remaps per-layer depth into each interval.
//! 2. [`pointcloud`] lifts every layer into a feature point cloud.
//! 3. [`animation`] integrates the flow and lifts it to scene flow, producing
//!    forward and backward copies of the cloud per frame.
//! 4. [`camera`] builds the trajectory; [`renderer`] splats each frame.
//! 5. [`metrics`] scores the result.
//!
//! [`synthetic`] builds scenes with exact ground truth and holds the
//! gather-based oracle renderer.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod animation;
pub mod assets;
pub mod camera;
mod error;
mod image;
pub mod layering;
pub mod metrics;
pub mod pointcloud;
pub mod renderer;
pub mod synthetic;

pub use crate::animation::{AnimatedCloud, EulerianFlow};
pub use crate::assets::{load_bundle, save_bundle, InpaintedLayer, Margins, SceneAssets};
pub use crate::camera::{CameraIntrinsics, CameraPose, Trajectory};
pub use crate::error::{Error, Result};
pub use crate::image::ImageBuffer;
pub use crate::layering::{DepthIntervals, Layer, LayerStack};
pub use crate::pointcloud::FeaturePointCloud;
pub use crate::renderer::{Camera, Framebuffer, RenderConfig, SplatConfig, SplatPoints};
