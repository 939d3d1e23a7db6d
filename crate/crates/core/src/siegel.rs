//! Monte Carlo averages of the Siegel transform over random planar lattices.

use rayon::prelude::*;

use crate::count::{count_points, CountRequest, Strategy};
use crate::error::{Error, Result};
use crate::region::ThinningRegion;
use crate::sampling::{sample_affine_offset, sample_haar_x2, SeededStream};
use crate::stats::MCEstimate;

/// Which lattice transform is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiegelVariant {
    /// all nonzero lattice vectors
    Plain,
    /// primitive vectors only
    Primitive,
    /// all points of a uniformly translated lattice
    Affine,
}

/// Riemann zeta at an integer `d >= 2`.
///
/// Sums `k^{-d}` for `k < K` and closes the tail with Euler-Maclaurin
/// terms; the first omitted term is below `1e-16` for `K = 1000`.
pub fn zeta(d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("zeta: need d >= 2, got {d}")));
    }
    let s = d as f64;
    let k = 1000.0f64;
    let mut head = 0.0;
    // small terms first
    for i in (1..1000u32).rev() {
        head += (i as f64).powf(-s);
    }
    let tail = k.powf(1.0 - s) / (s - 1.0) + 0.5 * k.powf(-s) + s / 12.0 * k.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * k.powf(-s - 3.0);
    Ok(head + tail)
}

/// The value the average converges to: `vol(region)`, divided by `zeta(2)`
/// for primitive vectors.
pub fn siegel_target(region: &ThinningRegion, variant: SiegelVariant) -> Result<f64> {
    Ok(match variant {
        SiegelVariant::Primitive => region.volume() / zeta(2)?,
        _ => region.volume(),
    })
}

/// Per-sample transform values; sample `i` uses stream `stream.derive(i)`.
pub fn siegel_values(
    region: &ThinningRegion,
    samples: u64,
    variant: SiegelVariant,
    stream: &SeededStream,
) -> Result<Vec<u64>> {
    if region.dim() != 2 {
        return Err(Error::Unsupported(
            "Siegel averages need a Haar sampler, which exists only for d = 2".into(),
        ));
    }
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = stream.derive(i);
            let basis = sample_haar_x2(&s);
            let req = match variant {
                SiegelVariant::Plain => CountRequest::new(basis, *region),
                SiegelVariant::Primitive => CountRequest::new(basis, *region).primitive(true),
                SiegelVariant::Affine => {
                    CountRequest::new(sample_affine_offset(&basis, &s.derive(u64::MAX)), *region)
                }
            };
            count_points(&req.strategy(Strategy::Auto))
        })
        .collect()
}

/// Mean and standard error of the transform over `samples` Haar lattices.
pub fn siegel_average(
    region: &ThinningRegion,
    samples: u64,
    variant: SiegelVariant,
    stream: &SeededStream,
) -> Result<MCEstimate> {
    if samples < 100 {
        return Err(Error::invalid("siegel_average needs at least 100 samples"));
    }
    let values = siegel_values(region, samples, variant, stream)?;
    MCEstimate::from_values(values.into_iter().map(|v| v as f64))
}
