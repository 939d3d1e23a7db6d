//! Reproducible random sources.
//!
//! Every random draw in the crate comes from a [`SeededStream`]: a master seed
//! plus a stream index. Parallel tasks derive their own stream from the task
//! index, so results do not depend on scheduling or thread count.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diophantine::FormSystem;
use crate::error::Result;
use crate::geometry::UnimodularBasis;
use crate::lattice::AffineLattice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeededStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        SeededStream {
            master_seed,
            stream_index,
        }
    }

    /// A child stream, e.g. one per Monte Carlo sample.
    pub fn derive(&self, child: u64) -> SeededStream {
        SeededStream {
            master_seed: self.master_seed,
            stream_index: splitmix64(self.stream_index ^ splitmix64(child.wrapping_add(1))),
        }
    }

    /// A ChaCha8 generator keyed by the master seed, on the ChaCha stream
    /// given by the stream index.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Uniform `A` on `[0,1)^{m x n}` and, when `affine`, uniform `w` on `[0,1)^m`.
pub fn sample_form(
    m: usize,
    n: usize,
    b: f64,
    affine: bool,
    stream: &SeededStream,
) -> Result<FormSystem> {
    let mut rng = stream.rng();
    let a = DMatrix::from_fn(m, n, |_, _| rng.gen::<f64>());
    let w = if affine {
        (0..m).map(|_| rng.gen::<f64>()).collect()
    } else {
        vec![0.0; m]
    };
    FormSystem::new(a, w, b)
}

/// The unrotated fundamental-domain point `(x, y)` used by [`sample_haar_x2`].
///
/// `x = sin(phi)` with `phi` uniform on `[-pi/6, pi/6]` gives the marginal
/// density `1/sqrt(1 - x^2)` of `dx dy / y^2` on the standard domain;
/// `y` then has density proportional to `y^{-2}` on `[sqrt(1 - x^2), inf)`.
pub fn sample_fundamental_domain<R: Rng>(rng: &mut R) -> (f64, f64) {
    let phi = (rng.gen::<f64>() - 0.5) * (PI / 3.0);
    let x = phi.sin();
    let u: f64 = rng.gen();
    let y = (1.0 - x * x).sqrt() / (1.0 - u);
    (x, y)
}

/// The lattice with basis `(1, 0)/sqrt(y)`, `(x, y)/sqrt(y)`.
pub fn basis_from_upper_half_plane(x: f64, y: f64) -> UnimodularBasis {
    let s = y.sqrt();
    let g = DMatrix::from_row_slice(2, 2, &[1.0 / s, x / s, 0.0, s]);
    UnimodularBasis::from_raw(g, 1, 1)
}

/// A Haar-random unimodular lattice in `R^2`: a fundamental-domain shape
/// followed by a uniform rotation.
pub fn sample_haar_x2(stream: &SeededStream) -> UnimodularBasis {
    let mut rng = stream.rng();
    let (x, y) = sample_fundamental_domain(&mut rng);
    let phi = rng.gen::<f64>() * 2.0 * PI;
    basis_from_upper_half_plane(x, y)
        .rotate(phi)
        .expect("d = 2")
}

/// Uniform offset coefficients on `[0,1)^d`.
pub fn sample_affine_offset(basis: &UnimodularBasis, stream: &SeededStream) -> AffineLattice {
    let mut rng = stream.rng();
    let offset: Vec<f64> = (0..basis.dim()).map(|_| rng.gen::<f64>()).collect();
    AffineLattice::new(basis.clone(), offset).expect("dimensions match")
}
