//! Direct counters for approximations by linear and affine forms and for
//! shrinking targets of toral translations.
//!
//! Forms use `<=` and toral translations use `<`; both conventions are kept.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::count::{count_points, CountRequest, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::geometry::shear_matrix;
use crate::lattice::{frac, AffineLattice, Lattice};
use crate::region::ThinningRegion;

/// `m` affine forms `q -> A q - w` in `n` variables, with threshold `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormSystem {
    a: DMatrix<f64>,
    w: Vec<f64>,
    b: f64,
}

impl FormSystem {
    pub fn new(a: DMatrix<f64>, w: Vec<f64>, b: f64) -> Result<Self> {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Err(Error::invalid("A must have at least one row and column"));
        }
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: w.len(),
            });
        }
        if a.iter().chain(&w).any(|v| !v.is_finite()) {
            return Err(Error::invalid("form entries must be finite"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!("b must be positive, got {b}")));
        }
        let w = w.into_iter().map(frac).collect();
        Ok(FormSystem { a, w, b })
    }

    pub fn homogeneous(a: DMatrix<f64>, b: f64) -> Result<Self> {
        let m = a.nrows();
        Self::new(a, vec![0.0; m], b)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn w(&self) -> &[f64] {
        &self.w
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn m(&self) -> usize {
        self.a.nrows()
    }
    pub fn n(&self) -> usize {
        self.a.ncols()
    }
    pub fn is_affine(&self) -> bool {
        self.w.iter().any(|&w| w != 0.0)
    }
}

/// Counts solutions `(p, q)` with `|A q - p - w| <= b |q|^{-n/m}` per
/// `q`-shell; `on_solution` receives `|q|` for each solution with
/// `1 <= |q| < t`.
fn scan_forms<F>(sys: &FormSystem, t: f64, budget: f64, init: F) -> Result<Vec<u64>>
where
    F: Fn() -> FormsAccumulator + Sync,
{
    let (m, n) = (sys.m(), sys.n());
    let qmax = (t.ceil() as i64).max(1);
    let side = (2 * qmax + 1) as f64;
    let candidates = side.powi(n as i32);
    if candidates > budget {
        return Err(Error::BudgetExceeded {
            candidates,
            budget,
            hint: "q-shell too large, use a smaller T",
        });
    }
    let exponent = -(n as f64) / (m as f64);
    let t2 = t * t;
    let slice = |(q0_lo, q0_hi): (i64, i64)| {
        let mut acc = init();
        let mut q = vec![-qmax; n];
        let mut center = vec![0.0; m];
        let mut p = vec![0i64; m];
        let mut plo = vec![0i64; m];
        let mut phi = vec![0i64; m];
        for q0 in q0_lo..q0_hi {
            q.iter_mut().for_each(|v| *v = -qmax);
            q[0] = q0;
            loop {
                let qn2: f64 = q.iter().map(|&v| (v * v) as f64).sum();
                if qn2 >= 1.0 && qn2 < t2 {
                    let qn = qn2.sqrt();
                    let r = sys.b * qn.powf(exponent);
                    for (i, c) in center.iter_mut().enumerate() {
                        let mut s = 0.0;
                        for (j, &qj) in q.iter().enumerate() {
                            s += sys.a[(i, j)] * qj as f64;
                        }
                        *c = s - sys.w[i];
                    }
                    if r < 0.5 {
                        for (pi, c) in p.iter_mut().zip(&center) {
                            *pi = c.round() as i64;
                        }
                        if residual(&center, &p) <= r {
                            acc.push(qn);
                        }
                    } else {
                        for i in 0..m {
                            plo[i] = (center[i] - r).ceil() as i64;
                            phi[i] = (center[i] + r).floor() as i64;
                        }
                        if plo.iter().zip(&phi).all(|(l, h)| l <= h) {
                            p.copy_from_slice(&plo);
                            loop {
                                if residual(&center, &p) <= r {
                                    acc.push(qn);
                                }
                                let mut advanced = false;
                                for i in 0..m {
                                    if p[i] < phi[i] {
                                        p[i] += 1;
                                        advanced = true;
                                        break;
                                    }
                                    p[i] = plo[i];
                                }
                                if !advanced {
                                    break;
                                }
                            }
                        }
                    }
                }
                // lexicographic odometer over q[1..]
                let mut advanced = false;
                for i in (1..n).rev() {
                    if q[i] < qmax {
                        q[i] += 1;
                        advanced = true;
                        break;
                    }
                    q[i] = -qmax;
                }
                if !advanced {
                    break;
                }
            }
        }
        acc
    };
    // chunks of first coordinates keep per-task setup off the hot path
    let chunk = (4096 / (side as i64).pow(n as u32 - 1)).max(1);
    let ranges: Vec<(i64, i64)> = (-qmax..=qmax)
        .step_by(chunk as usize)
        .map(|lo| (lo, (lo + chunk).min(qmax + 1)))
        .collect();
    let parts: Vec<FormsAccumulator> = ranges.into_par_iter().map(slice).collect();
    let mut total = init();
    for part in parts {
        total.merge(&part);
    }
    Ok(total.bins)
}

#[inline]
fn residual(center: &[f64], p: &[i64]) -> f64 {
    center
        .iter()
        .zip(p)
        .map(|(c, &p)| (c - p as f64) * (c - p as f64))
        .sum::<f64>()
        .sqrt()
}

/// Histogram of solutions by dyadic block of `|q|` (a single bin when
/// `blocks == 0`).
#[derive(Debug, Clone)]
struct FormsAccumulator {
    bins: Vec<u64>,
}

impl FormsAccumulator {
    fn new(blocks: usize) -> Self {
        FormsAccumulator {
            bins: vec![0; blocks.max(1)],
        }
    }

    #[inline]
    fn push(&mut self, qn: f64) {
        let k = self.bins.len();
        let j = if k == 1 {
            0
        } else {
            (qn.log2().floor().max(0.0) as usize).min(k - 1)
        };
        // log2 can misround right at a power of two
        let j = if j + 1 < k && qn >= ((j + 1) as f64).exp2() {
            j + 1
        } else if j > 0 && qn < (j as f64).exp2() {
            j - 1
        } else {
            j
        };
        self.bins[j] += 1;
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
    }
}

/// `N(A, w, b, T)`: solutions `(p, q) in Z^m x Z^n` of
/// `|A q - p - w| <= b |q|^{-n/m}` with `1 <= |q| < T`.
pub fn count_forms(sys: &FormSystem, t: f64) -> Result<u64> {
    count_forms_with_budget(sys, t, DEFAULT_BUDGET)
}

pub fn count_forms_with_budget(sys: &FormSystem, t: f64, budget: f64) -> Result<u64> {
    if t.is_nan() || t <= 1.0 {
        if t == 1.0 {
            return Ok(0);
        }
        return Err(Error::invalid(format!("T must be > 1, got {t}")));
    }
    Ok(scan_forms(sys, t, budget, || FormsAccumulator::new(0))?[0])
}

/// Solutions per dyadic block `2^j <= |q| < 2^{j+1}`, `j < k`.
pub fn forms_block_counts(sys: &FormSystem, k: u32) -> Result<Vec<u64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let t = (k as f64).exp2();
    scan_forms(sys, t, DEFAULT_BUDGET, || FormsAccumulator::new(k as usize))
}

/// The lattice `h_A Z^d` (translated by `(w, 0)` when affine) whose points in
/// `{ |x|^m |y|^n <= b^m, 1 <= |y| < T }` are the solutions of the system.
pub fn forms_lattice(sys: &FormSystem) -> Result<Lattice> {
    let h = shear_matrix(sys.a())?;
    if sys.is_affine() {
        let mut v = sys.w().to_vec();
        v.extend(std::iter::repeat_n(0.0, sys.n()));
        Ok(AffineLattice::from_ambient_offset(h, &v)?.into())
    } else {
        Ok(h.into())
    }
}

/// Counts the system both directly and through its lattice.
pub fn forms_lattice_crosscheck(sys: &FormSystem, t: f64) -> Result<(u64, u64)> {
    let direct = count_forms(sys, t)?;
    if t <= 1.0 {
        return Ok((direct, 0));
    }
    let region = ThinningRegion::up_to(sys.b().powi(sys.m() as i32), sys.m(), sys.n(), t)?;
    let via = count_points(&CountRequest::new(forms_lattice(sys)?, region))?;
    Ok((direct, via))
}

/// Translation by `alpha` on `T^m` with a shrinking target around `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToralSystem {
    alpha: Vec<f64>,
    target: Vec<f64>,
    b: f64,
}

impl ToralSystem {
    pub fn new(alpha: Vec<f64>, target: Vec<f64>, b: f64) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != target.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                got: target.len(),
            });
        }
        if alpha.iter().chain(&target).any(|v| !v.is_finite()) {
            return Err(Error::invalid("toral entries must be finite"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!("b must be positive, got {b}")));
        }
        Ok(ToralSystem {
            alpha: alpha.into_iter().map(frac).collect(),
            target: target.into_iter().map(frac).collect(),
            b,
        })
    }

    pub fn homogeneous(alpha: Vec<f64>, b: f64) -> Result<Self> {
        let m = alpha.len();
        Self::new(alpha, vec![0.0; m], b)
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
    pub fn target(&self) -> &[f64] {
        &self.target
    }
    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Distance to `Z^m` of `v`, each coordinate reduced to `[-1/2, 1/2]`.
pub fn dist_to_integers(v: &[f64]) -> f64 {
    v.iter()
        .map(|&c| {
            let r = c - c.round();
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// `S_{b,N}(alpha, v)`: the number of `1 <= k <= N` with
/// `|k alpha - v|_Z < b k^{-1/m}`.
pub fn count_toral(sys: &ToralSystem, big_n: u64) -> Result<u64> {
    if big_n == 0 {
        return Err(Error::invalid("N must be >= 1"));
    }
    Ok(*toral_counts_at(sys, &[big_n])?.last().unwrap())
}

/// Cumulative `S_{b,N}` at each of the increasing `scales`, in one pass.
pub fn toral_counts_at(sys: &ToralSystem, scales: &[u64]) -> Result<Vec<u64>> {
    if scales.windows(2).any(|w| w[0] >= w[1]) || scales.first() == Some(&0) {
        return Err(Error::invalid("scales must be positive and increasing"));
    }
    let m = sys.m();
    let exponent = -1.0 / m as f64;
    let mut pos = vec![0.0; m];
    let mut diff = vec![0.0; m];
    let mut out = Vec::with_capacity(scales.len());
    let mut count = 0u64;
    let mut next = 0usize;
    let last = scales.last().copied().unwrap_or(0);
    for k in 1..=last {
        for ((p, a), (d, t)) in pos
            .iter_mut()
            .zip(&sys.alpha)
            .zip(diff.iter_mut().zip(&sys.target))
        {
            *p += a;
            if *p >= 1.0 {
                *p -= 1.0;
            }
            *d = *p - t;
        }
        if dist_to_integers(&diff) < sys.b * (k as f64).powf(exponent) {
            count += 1;
        }
        if k == scales[next] {
            out.push(count);
            next += 1;
        }
    }
    Ok(out)
}
