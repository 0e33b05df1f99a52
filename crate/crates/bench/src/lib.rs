//! Shared inputs for the benchmarks.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ldi4d_core::camera::unproject;
use ldi4d_core::renderer::Camera;
use ldi4d_core::{CameraIntrinsics, CameraPose};

/// Points scattered uniformly over the image of a `width x height` camera at
/// depths in `[1, 20)`, with random colors.
pub struct RandomCloud {
    pub camera: Camera,
    pub positions: Vec<Vector3<f64>>,
    pub features: Vec<[f32; 3]>,
    pub weights: Vec<f32>,
}

impl RandomCloud {
    pub fn new(width: usize, height: usize, n: usize, seed: u64) -> Self {
        let k = CameraIntrinsics::centered(width, height, None).expect("valid size");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..n)
            .map(|_| {
                let z = rng.gen_range(1.0..20.0);
                let (u, v) = (
                    rng.gen_range(0.0..width as f64),
                    rng.gen_range(0.0..height as f64),
                );
                unproject(u, v, z, &k, &CameraPose::identity())
            })
            .collect();
        RandomCloud {
            camera: Camera {
                intrinsics: k,
                pose: CameraPose::identity(),
            },
            positions,
            features: (0..n).map(|_| rng.gen()).collect(),
            weights: vec![1.0; n],
        }
    }
}
