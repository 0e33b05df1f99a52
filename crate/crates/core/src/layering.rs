//! Layered depth images: depth clustering, layer assignment, cumulative
//! overlay for per-layer depth prediction, and remapping of predicted depth
//! into each layer's interval.
//!
//! Layer indices are 0-based here (0 = nearest); files on disk use 1-based
//! names.

use crate::assets::{InpaintedLayer, SceneAssets};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Sorted depth boundaries `d_0 < d_1 < ... < d_L` delimiting `L` layers.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthIntervals {
    boundaries: Vec<f32>,
}

impl DepthIntervals {
    pub fn new(boundaries: Vec<f32>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidArgument(
                "depth intervals need at least two boundaries".into(),
            ));
        }
        if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidArgument(format!(
                "depth boundaries must be finite and strictly increasing: {boundaries:?}"
            )));
        }
        Ok(DepthIntervals { boundaries })
    }

    pub fn boundaries(&self) -> &[f32] {
        &self.boundaries
    }

    pub fn layer_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// `[d_i, d_{i+1}]` for layer `i`.
    pub fn interval(&self, i: usize) -> (f32, f32) {
        (self.boundaries[i], self.boundaries[i + 1])
    }

    /// Layer of a depth value: half-open intervals, the last one closed.
    /// Values outside the range clamp to the first or last layer.
    #[inline]
    pub fn layer_of(&self, depth: f32) -> usize {
        let interior = &self.boundaries[1..self.boundaries.len() - 1];
        interior.partition_point(|&b| b <= depth)
    }

    /// One line per boundary, as written by `ldi4d layer`.
    pub fn to_text(&self) -> String {
        let mut s = format!("# {} layers\n", self.layer_count());
        for b in &self.boundaries {
            s.push_str(&format!("{b:?}\n"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterConfig {
    /// Fixed layer count; `None` merges until the smallest gap between
    /// clusters exceeds `merge_threshold * (max - min)`.
    pub target_layers: Option<usize>,
    pub merge_threshold: f64,
    /// Width of the single interval produced for a constant depth map.
    pub min_interval_width: f32,
    /// Cap on the number of depth samples clustered.
    pub max_samples: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            target_layers: Some(3),
            merge_threshold: 0.1,
            min_interval_width: 1e-3,
            max_samples: 65_536,
        }
    }
}

impl ClusterConfig {
    pub fn auto() -> Self {
        ClusterConfig {
            target_layers: None,
            ..Default::default()
        }
    }

    pub fn with_layers(layers: usize) -> Self {
        ClusterConfig {
            target_layers: Some(layers),
            ..Default::default()
        }
    }
}

/// Splits the depth range into intervals by single-linkage agglomerative
/// clustering of the (subsampled) depth values.
///
/// In one dimension single linkage always merges the two adjacent clusters
/// separated by the smallest gap, so the final clusters are the runs left
/// after cutting the sorted values at the largest gaps. Equal gaps merge
/// left to right. Interior boundaries sit at the midpoint of each cut gap.
pub fn cluster_depth(depth: &ImageBuffer, config: &ClusterConfig) -> Result<DepthIntervals> {
    let values = depth.data();
    if values.is_empty() {
        return Err(Error::Empty("depth map".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "depth".into(),
            x: (i / depth.channels()) % depth.width(),
            y: (i / depth.channels()) / depth.width(),
            channel: 0,
        });
    }
    let (lo, hi) = values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });

    let mut sample: Vec<f32> = if values.len() > config.max_samples.max(2) {
        let n = config.max_samples.max(2);
        (0..n).map(|k| values[k * values.len() / n]).collect()
    } else {
        values.to_vec()
    };
    sample.push(lo);
    sample.push(hi);
    sample.sort_by(f32::total_cmp);
    sample.dedup();

    let distinct = sample.len();
    let layers = match config.target_layers {
        Some(0) => {
            return Err(Error::InvalidArgument(
                "target_layers must be at least 1".into(),
            ))
        }
        Some(l) if l > distinct => {
            return Err(Error::InvalidArgument(format!(
                "target_layers {l} exceeds the {distinct} distinct depth value(s)"
            )))
        }
        other => other,
    };

    if distinct == 1 {
        let width = config.min_interval_width.max(f32::EPSILON * lo.abs());
        return DepthIntervals::new(vec![lo, lo + width]);
    }

    // gaps[j] separates sample[j] and sample[j + 1].
    let gaps: Vec<f64> = sample
        .windows(2)
        .map(|w| w[1] as f64 - w[0] as f64)
        .collect();
    let mut cuts: Vec<usize> = match layers {
        Some(l) => {
            let mut order: Vec<usize> = (0..gaps.len()).collect();
            // Largest gaps survive; among equal gaps the leftmost merges first.
            order.sort_by(|&a, &b| gaps[b].total_cmp(&gaps[a]).then(b.cmp(&a)));
            order.truncate(l - 1);
            order
        }
        None => {
            let limit = config.merge_threshold * (hi as f64 - lo as f64);
            (0..gaps.len()).filter(|&j| gaps[j] > limit).collect()
        }
    };
    cuts.sort_unstable();

    let mut boundaries = Vec::with_capacity(cuts.len() + 2);
    boundaries.push(lo);
    for j in cuts {
        let (a, b) = (sample[j], sample[j + 1]);
        let mid = ((a as f64 + b as f64) / 2.0) as f32;
        // The upper cluster must start at or after the boundary.
        boundaries.push(if mid > a { mid.min(b) } else { b });
    }
    let last = *boundaries.last().expect("non-empty");
    // A single-value top cluster whose boundary landed on it still needs a
    // non-empty closed interval.
    boundaries.push(if hi > last { hi } else { last.next_up() });
    DepthIntervals::new(boundaries)
}

/// A layer before inpainting: the pixels whose depth falls in its interval.
#[derive(Clone, Debug, PartialEq)]
pub struct RawLayer {
    pub mask: ImageBuffer,
    /// Input color where `mask` is set, zero elsewhere.
    pub color: ImageBuffer,
}

/// Per-pixel layer index.
pub fn layer_index_map(depth: &ImageBuffer, intervals: &DepthIntervals) -> Vec<usize> {
    depth
        .data()
        .iter()
        .map(|&d| intervals.layer_of(d))
        .collect()
}

/// Partitions `image` by depth interval. Masks are pairwise disjoint and
/// cover every pixel.
pub fn assign_layers(
    image: &ImageBuffer,
    depth: &ImageBuffer,
    intervals: &DepthIntervals,
) -> Result<Vec<RawLayer>> {
    depth.ensure_dims("depth", image.dims())?;
    let (w, h) = image.dims();
    let c = image.channels();
    let index = layer_index_map(depth, intervals);
    let mut layers: Vec<RawLayer> = (0..intervals.layer_count())
        .map(|_| RawLayer {
            mask: ImageBuffer::filled(w, h, 1, 0.0),
            color: ImageBuffer::filled(w, h, c, 0.0),
        })
        .collect();
    for (p, &l) in index.iter().enumerate() {
        let layer = &mut layers[l];
        layer.mask.data_mut()[p] = 1.0;
        layer.color.data_mut()[p * c..(p + 1) * c]
            .copy_from_slice(&image.data()[p * c..(p + 1) * c]);
    }
    Ok(layers)
}

/// Cumulative overlay of layers `from..L`: each pixel takes the color of the
/// nearest layer at or behind `from` whose validity mask covers it.
pub fn composite_overlay(layers: &[InpaintedLayer], from: usize) -> Result<ImageBuffer> {
    if from >= layers.len() {
        return Err(Error::InvalidArgument(format!(
            "overlay start {from} outside {} layer(s)",
            layers.len()
        )));
    }
    let (w, h) = layers[from].color.dims();
    let c = layers[from].color.channels();
    for l in &layers[from..] {
        l.color.ensure_dims("layer color", (w, h))?;
        l.validity.ensure_dims("layer mask", (w, h))?;
    }
    let mut out = ImageBuffer::filled(w, h, c, 0.0);
    for y in 0..h {
        for x in 0..w {
            let src = layers[from..]
                .iter()
                .find(|l| l.validity.is_set(x, y))
                .ok_or(Error::UncoveredPixel {
                    x,
                    y,
                    from_layer: from,
                })?;
            out.pixel_mut(x, y).copy_from_slice(src.color.pixel(x, y));
        }
    }
    Ok(out)
}

/// Affinely maps predicted depth so that its range over `mask` becomes
/// `[lo, hi]`. A constant prediction maps to the interval midpoint. Pixels
/// outside the mask are mapped by the same affine function and clamped.
pub fn remap_layer_depth(
    predicted: &ImageBuffer,
    mask: &ImageBuffer,
    interval: (f32, f32),
) -> Result<ImageBuffer> {
    mask.ensure_dims("layer mask", predicted.dims())?;
    let (lo, hi) = interval;
    let masked = predicted
        .data()
        .iter()
        .zip(mask.data())
        .filter(|(_, &m)| m > 0.5)
        .map(|(&v, _)| v);
    let (min, max) = masked.fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if min > max {
        return Err(Error::Empty("layer mask".into()));
    }
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::InvalidArgument(
            "predicted depth is not finite on the mask".into(),
        ));
    }
    let mid = ((lo as f64 + hi as f64) / 2.0) as f32;
    let span = max as f64 - min as f64;
    let data = predicted
        .data()
        .iter()
        .map(|&v| {
            if span == 0.0 {
                mid
            } else if v <= min {
                lo
            } else if v >= max {
                hi
            } else {
                let t = (v as f64 - min as f64) / span;
                ((hi as f64 - lo as f64) * t + lo as f64).clamp(lo as f64, hi as f64) as f32
            }
        })
        .collect();
    ImageBuffer::new(predicted.width(), predicted.height(), 1, data)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub index: usize,
    /// Pixels assigned to this layer in the source view.
    pub mask: ImageBuffer,
    /// Pixels with defined color: the inpainting mask, or `mask` without
    /// inpainting. Always a superset of `mask`.
    pub validity: ImageBuffer,
    pub color: ImageBuffer,
    /// Depth remapped into this layer's interval.
    pub depth: ImageBuffer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack {
    /// Front to back.
    pub layers: Vec<Layer>,
    pub intervals: DepthIntervals,
    /// False when the stack was built from raw masked colors because the
    /// bundle had no inpainted layers.
    pub inpainted: bool,
}

impl LayerStack {
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// `(min, max)` depth over each layer's validity mask.
    pub fn depth_ranges(&self) -> Vec<(f32, f32)> {
        self.layers
            .iter()
            .map(|l| {
                l.depth
                    .data()
                    .iter()
                    .zip(l.validity.data())
                    .filter(|(_, &m)| m > 0.5)
                    .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), (&d, _)| {
                        (a.min(d), b.max(d))
                    })
            })
            .collect()
    }

    /// Keeps only the first `n` layers.
    pub fn truncated(&self, n: usize) -> LayerStack {
        LayerStack {
            layers: self.layers.iter().take(n).cloned().collect(),
            intervals: self.intervals.clone(),
            inpainted: self.inpainted,
        }
    }
}

/// Assembles the layer stack from the bundle and one predicted depth map per
/// layer (each predicted over `composite_overlay(.., i)`).
pub fn build_layer_stack(
    assets: &SceneAssets,
    intervals: &DepthIntervals,
    predicted: &[ImageBuffer],
) -> Result<LayerStack> {
    let count = intervals.layer_count();
    if predicted.len() != count {
        return Err(Error::LayerCountMismatch {
            expected: count,
            found: predicted.len(),
        });
    }
    let inpainted = !assets.inpainted_layers.is_empty();
    if inpainted && assets.inpainted_layers.len() != count {
        return Err(Error::LayerCountMismatch {
            expected: count,
            found: assets.inpainted_layers.len(),
        });
    }
    if !inpainted {
        log::warn!("bundle has no inpainted layers; occluded content will render as holes");
    }
    let raw = assign_layers(&assets.outpainted, &assets.depth, intervals)?;
    let mut layers = Vec::with_capacity(count);
    for (i, raw) in raw.into_iter().enumerate() {
        let (color, validity) = if inpainted {
            let src = &assets.inpainted_layers[i];
            let mut validity = src.validity.clone();
            for (v, &m) in validity.data_mut().iter_mut().zip(raw.mask.data()) {
                *v = if *v > 0.5 || m > 0.5 { 1.0 } else { 0.0 };
            }
            (src.color.clone(), validity)
        } else {
            (raw.color, raw.mask.clone())
        };
        let depth = remap_layer_depth(&predicted[i], &validity, intervals.interval(i))?;
        layers.push(Layer {
            index: i,
            mask: raw.mask,
            validity,
            color,
            depth,
        });
    }
    Ok(LayerStack {
        layers,
        intervals: intervals.clone(),
        inpainted,
    })
}

/// Per-layer depth used when no external estimator has run: the global depth
/// where the pixel belongs to this layer or one behind it, and the median
/// depth of the layer's own pixels where nearer content hides it.
pub fn fallback_layer_depths(assets: &SceneAssets, intervals: &DepthIntervals) -> Vec<ImageBuffer> {
    let index = layer_index_map(&assets.depth, intervals);
    let (w, h) = assets.frame_dims();
    (0..intervals.layer_count())
        .map(|i| {
            let mut own: Vec<f32> = index
                .iter()
                .zip(assets.depth.data())
                .filter(|(&l, _)| l == i)
                .map(|(_, &d)| d)
                .collect();
            own.sort_by(f32::total_cmp);
            let fill = own
                .get(own.len() / 2)
                .copied()
                .unwrap_or(intervals.interval(i).0);
            let data = index
                .iter()
                .zip(assets.depth.data())
                .map(|(&l, &d)| if l >= i { d } else { fill })
                .collect();
            ImageBuffer::new(w, h, 1, data).expect("depth map dimensions")
        })
        .collect()
}
