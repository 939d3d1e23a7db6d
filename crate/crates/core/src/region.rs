//! Thinning (hyperbolic) regions `{ |x|^m |y|^n <= b, y_lo <= |y| < y_hi }`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, check_dims, sphere_area, SplitVector};
use crate::sampling::SeededStream;
use crate::stats::MCEstimate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinningRegion {
    b: f64,
    m: usize,
    n: usize,
    y_lo: f64,
    y_hi: f64,
    theta: f64,
}

/// `|v|^k` computed from the sum of squares (no square root for even `k`).
#[inline]
pub(crate) fn norm_pow(v: &[f64], k: usize) -> f64 {
    let s: f64 = v.iter().map(|c| c * c).sum();
    if k.is_multiple_of(2) {
        s.powi(k as i32 / 2)
    } else {
        s.sqrt().powi(k as i32)
    }
}

impl ThinningRegion {
    pub fn new(b: f64, m: usize, n: usize, y_lo: f64, y_hi: f64) -> Result<Self> {
        Self::rotated(b, m, n, y_lo, y_hi, 0.0)
    }

    /// A region rotated by `theta` (only for `m = n = 1`).
    pub fn rotated(b: f64, m: usize, n: usize, y_lo: f64, y_hi: f64, theta: f64) -> Result<Self> {
        check_dims(m, n)?;
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!("b must be positive, got {b}")));
        }
        if !(y_lo >= 1.0 && y_lo.is_finite()) {
            return Err(Error::invalid(format!("y_lo must be >= 1, got {y_lo}")));
        }
        if !(y_hi >= y_lo && y_hi.is_finite()) {
            return Err(Error::invalid(format!(
                "y_hi must be finite and >= y_lo, got [{y_lo}, {y_hi})"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("theta must be finite"));
        }
        if theta != 0.0 && (m, n) != (1, 1) {
            return Err(Error::Unsupported(
                "rotated regions are only defined for m = n = 1".into(),
            ));
        }
        Ok(ThinningRegion {
            b,
            m,
            n,
            y_lo,
            y_hi,
            theta,
        })
    }

    /// `{ |x|^m |y|^n <= b, 1 <= |y| < t }`.
    pub fn up_to(b: f64, m: usize, n: usize, t: f64) -> Result<Self> {
        Self::new(b, m, n, 1.0, t)
    }

    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        self.m + self.n
    }
    pub fn y_lo(&self) -> f64 {
        self.y_lo
    }
    pub fn y_hi(&self) -> f64 {
        self.y_hi
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn with_shell(&self, y_lo: f64, y_hi: f64) -> Result<Self> {
        Self::rotated(self.b, self.m, self.n, y_lo, y_hi, self.theta)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::rotated(self.b, self.m, self.n, self.y_lo, self.y_hi, theta)
    }

    pub fn is_empty(&self) -> bool {
        self.y_hi <= self.y_lo
    }

    pub fn contains(&self, v: &SplitVector) -> Result<bool> {
        if v.m() != self.m || v.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.coords().len(),
            });
        }
        Ok(self.contains_coords(v.coords()))
    }

    /// Membership for raw coordinates of length `m + n`.
    pub fn contains_coords(&self, v: &[f64]) -> bool {
        if self.theta != 0.0 {
            let (s, c) = self.theta.sin_cos();
            let xr = c * v[0] + s * v[1];
            let yr = -s * v[0] + c * v[1];
            return self.contains_unrotated(&[xr, yr]);
        }
        self.contains_unrotated(v)
    }

    /// Membership ignoring `theta` (coordinates already in the region frame).
    #[inline]
    pub(crate) fn contains_unrotated(&self, v: &[f64]) -> bool {
        let (x, y) = v.split_at(self.m);
        let ys: f64 = y.iter().map(|c| c * c).sum();
        let yn = ys.sqrt();
        if !(yn >= self.y_lo && yn < self.y_hi) {
            return false;
        }
        let ypow = if self.n.is_multiple_of(2) {
            ys.powi(self.n as i32 / 2)
        } else {
            yn.powi(self.n as i32)
        };
        norm_pow(x, self.m) * ypow <= self.b
    }

    /// Largest `|x|` over the region: `(b / y_lo^n)^(1/m)`.
    pub fn x_radius(&self) -> f64 {
        (self.b / self.y_lo.powi(self.n as i32)).powf(1.0 / self.m as f64)
    }

    /// Half-widths of an axis-aligned box (ambient frame) containing the region.
    pub fn bounding_half_widths(&self) -> Vec<f64> {
        let r = self.x_radius();
        if self.theta != 0.0 {
            let (s, c) = self.theta.sin_cos();
            let (s, c) = (s.abs(), c.abs());
            return vec![r * c + self.y_hi * s, r * s + self.y_hi * c];
        }
        let mut h = vec![r; self.m];
        h.extend(std::iter::repeat_n(self.y_hi, self.n));
        h
    }

    /// `b B_m C_n log(y_hi / y_lo)`.
    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.b
            * ball_volume(self.m).expect("m >= 1")
            * sphere_area(self.n).expect("n >= 1")
            * (self.y_hi / self.y_lo).ln()
    }
}

/// The `j`-th dyadic block `{ |x|^m |y|^n <= b, 2^j <= |y| < 2^{j+1} }`.
pub fn dyadic_block(b: f64, m: usize, n: usize, j: u32) -> Result<ThinningRegion> {
    let lo = (j as f64).exp2();
    ThinningRegion::new(b, m, n, lo, 2.0 * lo)
}

/// Hit-or-miss Monte Carlo over the bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeSample {
    pub hits: u64,
    pub samples: u64,
    pub box_volume: f64,
}

impl VolumeSample {
    pub fn estimate(&self) -> MCEstimate {
        let p = self.hits as f64 / self.samples as f64;
        MCEstimate {
            mean: self.box_volume * p,
            stderr: self.box_volume * (p * (1.0 - p) / self.samples as f64).sqrt(),
            samples: self.samples,
        }
    }
}

const MC_CHUNK: u64 = 1 << 16;

/// Monte Carlo volume of `region` with `samples` uniform points in its
/// bounding box; chunks are evaluated in parallel on derived streams.
pub fn monte_carlo_volume(
    region: &ThinningRegion,
    samples: u64,
    stream: &SeededStream,
) -> VolumeSample {
    let h = region.bounding_half_widths();
    let box_volume: f64 = h.iter().map(|w| 2.0 * w).product();
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.derive(c).rng();
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut v = vec![0.0; h.len()];
            let mut hits = 0u64;
            for _ in 0..count {
                for (vi, w) in v.iter_mut().zip(&h) {
                    *vi = (2.0 * rng.gen::<f64>() - 1.0) * w;
                }
                hits += region.contains_coords(&v) as u64;
            }
            hits
        })
        .sum();
    VolumeSample {
        hits,
        samples,
        box_volume,
    }
}
