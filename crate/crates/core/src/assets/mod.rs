//! Scene bundles on disk and the codecs behind them.
//!
//! A bundle directory looks like
//!
//! ```text
//! manifest
//! original.png
//! outpainted.png
//! depth.pfm
//! flow.flo
//! layers/layer_<k>_color.png
//! layers/layer_<k>_mask.png
//! layers/layer_<k>_depth.pfm      (optional)
//! ```
//!
//! See [`manifest`] for the key schema.

mod flo;
pub mod manifest;
mod pfm;
pub mod png;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub use flo::{read_flo, write_flo, FLO_MAGIC};
pub use manifest::{Manifest, MANIFEST_VERSION};
pub use pfm::{read_pfm, write_pfm};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Epsilon used when converting disparity to depth at load time.
pub const DISPARITY_EPS: f32 = 1e-6;

/// Outpaint margins in pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Margins {
    pub left: usize,
    pub right: usize,
    pub top: usize,
    pub bottom: usize,
}

impl Margins {
    pub fn uniform(m: usize) -> Self {
        Margins {
            left: m,
            right: m,
            top: m,
            bottom: m,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Margins::default()
    }

    /// Outpainted frame size for an original of `dims`.
    pub fn expand(&self, dims: (usize, usize)) -> (usize, usize) {
        (
            dims.0 + self.left + self.right,
            dims.1 + self.top + self.bottom,
        )
    }
}

/// Inpainted color of one layer plus the mask of pixels the inpainter filled.
#[derive(Clone, Debug, PartialEq)]
pub struct InpaintedLayer {
    pub color: ImageBuffer,
    pub validity: ImageBuffer,
}

/// Everything the engine consumes from neural providers, aligned to the
/// outpainted frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneAssets {
    pub original: ImageBuffer,
    pub outpainted: ImageBuffer,
    pub margins: Margins,
    /// Camera depth over the outpainted frame, larger = farther.
    pub depth: ImageBuffer,
    /// Eulerian flow in pixels per frame over the outpainted frame.
    pub flow: ImageBuffer,
    /// Front-to-back inpainted layers; empty when no inpainting was run.
    pub inpainted_layers: Vec<InpaintedLayer>,
    /// Per-layer depth predicted by an external estimator on the overlay
    /// composites; empty when absent.
    pub layer_depths: Vec<ImageBuffer>,
    pub focal_length: Option<f64>,
    pub prompt: Option<String>,
    /// Unrecognised manifest entries, preserved on save.
    pub extra: BTreeMap<String, String>,
    pub manifest_version: u32,
}

impl SceneAssets {
    /// Assets with no inpainting, no provider depth and no metadata.
    pub fn new(
        original: ImageBuffer,
        outpainted: ImageBuffer,
        margins: Margins,
        depth: ImageBuffer,
        flow: ImageBuffer,
    ) -> Result<Self> {
        let assets = SceneAssets {
            original,
            outpainted,
            margins,
            depth,
            flow,
            inpainted_layers: Vec::new(),
            layer_depths: Vec::new(),
            focal_length: None,
            prompt: None,
            extra: BTreeMap::new(),
            manifest_version: MANIFEST_VERSION,
        };
        assets.validate()?;
        Ok(assets)
    }

    pub fn frame_dims(&self) -> (usize, usize) {
        self.outpainted.dims()
    }

    pub fn validate(&self) -> Result<()> {
        expect_channels("original", &self.original, 3)?;
        expect_channels("outpainted", &self.outpainted, 3)?;
        expect_channels("depth", &self.depth, 1)?;
        expect_channels("flow", &self.flow, 2)?;
        let frame = self.margins.expand(self.original.dims());
        self.outpainted
            .ensure_dims("outpainted (original + margins)", frame)?;
        self.depth.ensure_dims("depth", frame)?;
        self.flow.ensure_dims("flow", frame)?;
        self.depth.check_finite("depth")?;
        self.depth.check_positive("depth")?;
        self.flow.check_finite("flow")?;
        for (i, layer) in self.inpainted_layers.iter().enumerate() {
            let k = i + 1;
            expect_channels(&format!("layer {k} color"), &layer.color, 3)?;
            expect_channels(&format!("layer {k} mask"), &layer.validity, 1)?;
            layer
                .color
                .ensure_dims(&format!("layer {k} color"), frame)?;
            layer
                .validity
                .ensure_dims(&format!("layer {k} mask"), frame)?;
        }
        for (i, d) in self.layer_depths.iter().enumerate() {
            let what = format!("layer {} depth", i + 1);
            expect_channels(&what, d, 1)?;
            d.ensure_dims(&what, frame)?;
            d.check_finite(&what)?;
        }
        if let Some(f) = self.focal_length {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "focal_length must be positive, got {f}"
                )));
            }
        }
        Ok(())
    }
}

fn expect_channels(what: &str, img: &ImageBuffer, channels: usize) -> Result<()> {
    if img.channels() != channels {
        return Err(Error::InvalidArgument(format!(
            "{what}: expected {channels} channel(s), found {}",
            img.channels()
        )));
    }
    Ok(())
}

const KNOWN_KEYS: &[&str] = &[
    "manifest_version",
    "original",
    "outpainted",
    "depth",
    "flow",
    "margin_left",
    "margin_right",
    "margin_top",
    "margin_bottom",
    "depth_is_disparity",
    "focal_length",
    "prompt",
    "layer_count",
    "layer_depth_count",
];

fn is_layer_key(key: &str) -> bool {
    key.starts_with("layer.")
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest")
}

/// Loads and validates a bundle directory. Either every invariant holds or
/// an error naming the offending file is returned.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<SceneAssets> {
    let dir = dir.as_ref();
    let mpath = manifest_path(dir);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest = Manifest::parse(&text)?;

    let version: u32 = manifest
        .parsed("manifest_version")?
        .unwrap_or(MANIFEST_VERSION);
    if version != MANIFEST_VERSION {
        return Err(Error::Manifest {
            line: 0,
            reason: format!("unsupported manifest_version {version}"),
        });
    }
    let file = |key: &str| -> Result<PathBuf> { Ok(dir.join(manifest.require(key)?)) };

    let original = png::read_color_png(file("original")?)?;
    let outpainted = png::read_color_png(file("outpainted")?)?;
    let depth_path = file("depth")?;
    let mut depth = read_pfm(&depth_path)?;
    let flow = read_flo(file("flow")?)?;

    if manifest
        .parsed::<bool>("depth_is_disparity")?
        .unwrap_or(false)
    {
        for v in depth.data_mut() {
            *v = 1.0 / (*v + DISPARITY_EPS);
        }
    }
    let margins = Margins {
        left: manifest.parsed("margin_left")?.unwrap_or(0),
        right: manifest.parsed("margin_right")?.unwrap_or(0),
        top: manifest.parsed("margin_top")?.unwrap_or(0),
        bottom: manifest.parsed("margin_bottom")?.unwrap_or(0),
    };

    let layer_count: usize = manifest.parsed("layer_count")?.unwrap_or(0);
    let mut inpainted_layers = Vec::with_capacity(layer_count);
    for k in 1..=layer_count {
        let color = png::read_color_png(file(&format!("layer.{k}.color"))?)?;
        let validity = png::read_mask_png(file(&format!("layer.{k}.mask"))?)?;
        inpainted_layers.push(InpaintedLayer { color, validity });
    }
    let depth_count: usize = manifest.parsed("layer_depth_count")?.unwrap_or(0);
    let mut layer_depths = Vec::with_capacity(depth_count);
    for k in 1..=depth_count {
        layer_depths.push(read_pfm(file(&format!("layer.{k}.depth"))?)?);
    }

    let extra = manifest
        .keys()
        .filter(|k| !KNOWN_KEYS.contains(k) && !is_layer_key(k))
        .map(|k| {
            (
                k.to_string(),
                manifest.get(k).unwrap_or_default().to_string(),
            )
        })
        .collect();

    let assets = SceneAssets {
        original,
        outpainted,
        margins,
        depth,
        flow,
        inpainted_layers,
        layer_depths,
        focal_length: manifest.parsed("focal_length")?,
        prompt: manifest.get("prompt").map(str::to_string),
        extra,
        manifest_version: version,
    };
    assets.validate().map_err(|e| match e {
        Error::NonPositiveDepth { x, y, value, .. } => Error::NonPositiveDepth {
            what: depth_path.display().to_string(),
            x,
            y,
            value,
        },
        other => other,
    })?;
    Ok(assets)
}

/// Writes `assets` so that [`load_bundle`] reproduces it sample for sample.
///
/// Color samples must sit on the 8-bit grid (see [`png::quantize`]) for the
/// round trip to be exact.
pub fn save_bundle(assets: &SceneAssets, dir: impl AsRef<Path>) -> Result<()> {
    assets.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut m = Manifest::default();
    m.set("manifest_version", assets.manifest_version);
    m.set("original", "original.png");
    m.set("outpainted", "outpainted.png");
    m.set("depth", "depth.pfm");
    m.set("flow", "flow.flo");
    m.set("margin_left", assets.margins.left);
    m.set("margin_right", assets.margins.right);
    m.set("margin_top", assets.margins.top);
    m.set("margin_bottom", assets.margins.bottom);
    m.set("depth_is_disparity", false);
    if let Some(f) = assets.focal_length {
        // `{:?}` prints the shortest representation that parses back exactly.
        m.set("focal_length", format!("{f:?}"));
    }
    if let Some(p) = &assets.prompt {
        m.set("prompt", p.replace(['\n', '\r'], " "));
    }
    for (k, v) in &assets.extra {
        m.set(k.clone(), v.replace(['\n', '\r'], " "));
    }

    png::write_png(&assets.original, dir.join("original.png"))?;
    png::write_png(&assets.outpainted, dir.join("outpainted.png"))?;
    write_pfm(&assets.depth, dir.join("depth.pfm"))?;
    write_flo(&assets.flow, dir.join("flow.flo"))?;

    if !assets.inpainted_layers.is_empty() || !assets.layer_depths.is_empty() {
        let layers = dir.join("layers");
        fs::create_dir_all(&layers).map_err(|e| Error::io(&layers, e))?;
    }
    if !assets.inpainted_layers.is_empty() {
        m.set("layer_count", assets.inpainted_layers.len());
    }
    for (i, layer) in assets.inpainted_layers.iter().enumerate() {
        let k = i + 1;
        let color = format!("layers/layer_{k}_color.png");
        let mask = format!("layers/layer_{k}_mask.png");
        png::write_png(&layer.color, dir.join(&color))?;
        png::write_png(&layer.validity, dir.join(&mask))?;
        m.set(format!("layer.{k}.color"), color);
        m.set(format!("layer.{k}.mask"), mask);
    }
    if !assets.layer_depths.is_empty() {
        m.set("layer_depth_count", assets.layer_depths.len());
    }
    for (i, d) in assets.layer_depths.iter().enumerate() {
        let k = i + 1;
        let name = format!("layers/layer_{k}_depth.pfm");
        write_pfm(d, dir.join(&name))?;
        m.set(format!("layer.{k}.depth"), name);
    }

    let mpath = manifest_path(dir);
    fs::write(&mpath, m.render()).map_err(|e| Error::io(&mpath, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(margins: Margins) -> SceneAssets {
        let (w, h) = (4, 3);
        let frame = margins.expand((w, h));
        let mut original = ImageBuffer::from_fn(w, h, |x, y| [x as f32 / 4.0, y as f32 / 3.0, 0.5]);
        png::quantize(&mut original);
        let mut outpainted = ImageBuffer::filled(frame.0, frame.1, 3, 0.2);
        png::quantize(&mut outpainted);
        let depth = ImageBuffer::filled(frame.0, frame.1, 1, 3.0);
        let flow = ImageBuffer::filled(frame.0, frame.1, 2, 0.0);
        SceneAssets::new(original, outpainted, margins, depth, flow).unwrap()
    }

    #[test]
    fn margins_expand_dimensions() {
        assert_eq!(Margins::uniform(64).expand((512, 512)), (640, 640));
        let m = Margins {
            left: 1,
            right: 2,
            top: 3,
            bottom: 4,
        };
        assert_eq!(m.expand((10, 10)), (13, 17));
    }

    #[test]
    fn zero_depth_is_rejected() {
        let mut a = tiny(Margins::default());
        a.depth.set(1, 2, 0, 0.0);
        let err = a.validate().unwrap_err();
        assert!(err.to_string().contains("non-positive depth"), "{err}");
    }

    #[test]
    fn zero_margins_and_absent_layers_survive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = tiny(Margins::default());
        save_bundle(&a, dir.path()).unwrap();
        assert!(!dir.path().join("layers").exists());
        let b = load_bundle(dir.path()).unwrap();
        assert_eq!(a, b);
        assert!(b.margins.is_zero());
        assert!(b.inpainted_layers.is_empty());
    }

    #[test]
    fn disparity_flag_converts_to_depth() {
        let dir = tempfile::tempdir().unwrap();
        let a = tiny(Margins::default());
        save_bundle(&a, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("manifest")).unwrap();
        fs::write(
            dir.path().join("manifest"),
            text.replace("depth_is_disparity = false", "depth_is_disparity = true"),
        )
        .unwrap();
        let b = load_bundle(dir.path()).unwrap();
        let expected = 1.0 / (3.0f32 + DISPARITY_EPS);
        assert!(b.depth.data().iter().all(|&v| v == expected));
    }

    #[test]
    fn missing_asset_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&tiny(Margins::default()), dir.path()).unwrap();
        fs::remove_file(dir.path().join("flow.flo")).unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        assert!(matches!(err, Error::MissingFile { ref path } if path.ends_with("flow.flo")));
    }

    #[test]
    fn mismatched_outpaint_dimensions_are_rejected() {
        let mut a = tiny(Margins::uniform(2));
        a.margins.left = 1;
        assert!(matches!(a.validate(), Err(Error::DimensionMismatch { .. })));
    }
}
