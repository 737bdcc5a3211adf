//! Seeded random problem instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DpError, Result};
use crate::matrix::Matrix;
use crate::model::{DistortionMatrix, GroundMetric, JointChannel, Problem};

/// Raw matrices of a random instance, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstance {
    pub p_xy: Matrix,
    pub distortion: Option<Matrix>,
}

/// Joint entries drawn uniformly from `(0, 1]` then normalized; distortion
/// entries, when requested, uniform on `[0, 1)`. Same seed, same instance.
pub fn random_instance(seed: u64, n_x: usize, n_y: usize, random_distortion: bool) -> Result<RandomInstance> {
    if n_x == 0 || n_y == 0 {
        return Err(DpError::DimensionMismatch {
            what: "instance size",
            expected: "n_x >= 1 and n_y >= 1".into(),
            got: format!("{n_x}x{n_y}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Matrix::from_fn(n_x, n_y, |_, _| 1.0 - rng.gen::<f64>());
    let total: f64 = raw.as_slice().iter().sum();
    let p_xy = raw.map(|v| v / total);
    let distortion = random_distortion.then(|| Matrix::from_fn(n_x, n_x, |_, _| rng.gen::<f64>()));
    Ok(RandomInstance { p_xy, distortion })
}

/// A validated random problem with Hamming metric. The joint pmf is
/// renormalized once more so that it sums to one within validation tolerance.
pub fn random_problem(seed: u64, n_x: usize, n_y: usize, random_distortion: bool) -> Result<Problem> {
    let inst = random_instance(seed, n_x, n_y, random_distortion)?;
    let channel = JointChannel::new(inst.p_xy)?;
    let d = match inst.distortion {
        Some(m) => DistortionMatrix::new(m)?,
        None => DistortionMatrix::hamming(n_x),
    };
    Problem::new(channel, d, GroundMetric::hamming(n_x))
}
