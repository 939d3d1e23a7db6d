//! Counting lattice points in thinning regions.
//!
//! Every strategy evaluates membership on the same canonical coordinates
//! `g (k + c)` in the region frame, so the direct scan and the dyadic
//! (Birkhoff) decomposition agree exactly, not just up to rounding.
//!
//! The dyadic path splits the shell `[y_lo, y_hi)` into blocks
//! `[y_lo 2^j, y_lo 2^{j+1})`; block `j` of `Lambda` is block `0` of
//! `g_{j log 2} Lambda`. Candidates for each block are generated from an LLL
//! reduction of the flowed basis, which keeps the scan box of size `O(b)`
//! however far the lattice has been flowed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dyadic_factors, SplitVector};
use crate::lattice::{lll, Lattice, LLL_DELTA};
use crate::region::ThinningRegion;

/// Default cap on the number of integer candidates scanned per box.
pub const DEFAULT_BUDGET: f64 = 1e9;

/// Shells wider than this ratio use the dyadic path under [`Strategy::Auto`].
pub const AUTO_DYADIC_RATIO: f64 = 64.0;

const PARALLEL_THRESHOLD: f64 = 2e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Direct,
    Dyadic,
    #[default]
    Auto,
}

impl Strategy {
    fn resolve(self, region: &ThinningRegion) -> Strategy {
        match self {
            Strategy::Auto if region.y_hi() / region.y_lo() > AUTO_DYADIC_RATIO => Strategy::Dyadic,
            Strategy::Auto => Strategy::Direct,
            s => s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CountRequest {
    pub lattice: Lattice,
    pub region: ThinningRegion,
    pub primitive_only: bool,
    pub strategy: Strategy,
    pub budget: f64,
}

impl CountRequest {
    pub fn new(lattice: impl Into<Lattice>, region: ThinningRegion) -> Self {
        CountRequest {
            lattice: lattice.into(),
            region,
            primitive_only: false,
            strategy: Strategy::Auto,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn primitive(mut self, yes: bool) -> Self {
        self.primitive_only = yes;
        self
    }

    pub fn strategy(mut self, s: Strategy) -> Self {
        self.strategy = s;
        self
    }

    pub fn budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.lattice.m() != self.region.m() || self.lattice.n() != self.region.n() {
            return Err(Error::DimensionMismatch {
                expected: self.region.dim(),
                got: self.lattice.dim(),
            });
        }
        if self.primitive_only && self.lattice.is_affine() {
            return Err(Error::invalid(
                "primitive vectors are not defined for affine lattices",
            ));
        }
        Ok(())
    }
}

/// Canonical data: the basis in the region frame and the offset.
struct Canonical {
    m: usize,
    n: usize,
    d: usize,
    /// row-major `d x d`
    basis: Vec<f64>,
    offset: Vec<f64>,
    region: ThinningRegion,
    primitive: bool,
}

impl Canonical {
    fn new(req: &CountRequest) -> Result<Self> {
        req.validate()?;
        let region = req.region;
        let b = if region.theta() != 0.0 {
            req.lattice.basis().rotate(-region.theta())?
        } else {
            req.lattice.basis().clone()
        };
        let d = b.dim();
        let mat = b.matrix();
        let basis = (0..d * d).map(|i| mat[(i / d, i % d)]).collect();
        Ok(Canonical {
            m: b.m(),
            n: b.n(),
            d,
            basis,
            offset: req.lattice.offset_coeffs(),
            region: region.with_theta(0.0)?,
            primitive: req.primitive_only,
        })
    }

    /// `g (k + c)` in the region frame, written into `out`.
    #[inline]
    fn point(&self, k: &[i64], out: &mut [f64]) {
        let d = self.d;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.basis[i * d..(i + 1) * d];
            *o = row
                .iter()
                .zip(k.iter().zip(&self.offset))
                .map(|(g, (&k, &c))| g * (k as f64 + c))
                .sum();
        }
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn is_primitive(k: &[i64]) -> bool {
    k.iter().fold(0, |g, &x| gcd(g, x)) == 1
}

/// One shell `[lo, hi)` of the region, scanned through the basis flowed by
/// `g_{j log 2}` and LLL-reduced.
struct BlockScan<'a> {
    canon: &'a Canonical,
    shell: ThinningRegion,
    /// flowed reduced basis, row-major
    r: Vec<f64>,
    /// `k_orig = u k' + shift`
    u: Vec<i64>,
    shift: Vec<i64>,
    cprime: Vec<f64>,
    h: Vec<f64>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    inner: usize,
    outer: usize,
}

impl<'a> BlockScan<'a> {
    fn new(canon: &'a Canonical, lo: f64, hi: f64, j: i32, budget: f64) -> Result<Option<Self>> {
        let d = canon.d;
        let shell = canon.region.with_shell(lo, hi)?;
        if shell.is_empty() {
            return Ok(None);
        }
        let (up, down) = dyadic_factors(canon.m, canon.n, j);
        let flowed = nalgebra::DMatrix::from_fn(d, d, |i, c| {
            let s = if i < canon.m { up } else { down };
            canon.basis[i * d + c] * s
        });
        let red = lll(&flowed, LLL_DELTA);
        let r: Vec<f64> = (0..d * d).map(|i| red.reduced[(i / d, i % d)]).collect();

        // offset in reduced coordinates: c' = U^{-1} c - f, k_orig = U k' - U f
        let mut cprime = vec![0.0; d];
        let mut floor = vec![0i64; d];
        for i in 0..d {
            let v: f64 = (0..d)
                .map(|c| red.u_inv(i, c) as f64 * canon.offset[c])
                .sum();
            let f = v.floor();
            floor[i] = f as i64;
            cprime[i] = v - f;
        }
        let shift: Vec<i64> = (0..d)
            .map(|i| -(0..d).map(|c| red.u(i, c) * floor[c]).sum::<i64>())
            .collect();

        // flowed-frame box
        let flowed_shell = canon.region.with_shell(lo * down, hi * down)?;
        let h: Vec<f64> = flowed_shell
            .bounding_half_widths()
            .into_iter()
            .map(|w| w * (1.0 + 1e-9) + 1e-12)
            .collect();
        let rinv = red
            .reduced
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("singular flowed basis"))?;
        let mut lo_k = vec![0i64; d];
        let mut hi_k = vec![0i64; d];
        let mut candidates = 1.0f64;
        for i in 0..d {
            let radius: f64 = (0..d).map(|c| rinv[(i, c)].abs() * h[c]).sum();
            let radius = radius * (1.0 + 1e-9) + 1e-9;
            lo_k[i] = (-radius - cprime[i]).ceil() as i64;
            hi_k[i] = (radius - cprime[i]).floor() as i64;
            candidates *= (hi_k[i] - lo_k[i] + 1).max(0) as f64;
        }
        if candidates > budget {
            return Err(Error::BudgetExceeded {
                candidates,
                budget,
                hint: "enumeration too large, use dyadic strategy",
            });
        }
        if candidates == 0.0 {
            return Ok(None);
        }
        let inner = (0..d).max_by_key(|&i| hi_k[i] - lo_k[i]).unwrap();
        let outer = (0..d)
            .filter(|&i| i != inner)
            .max_by_key(|&i| hi_k[i] - lo_k[i])
            .unwrap();
        Ok(Some(BlockScan {
            canon,
            shell,
            r,
            u: red.transform,
            shift,
            cprime,
            h,
            lo: lo_k,
            hi: hi_k,
            inner,
            outer,
        }))
    }

    fn candidate_count(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l + 1) as f64)
            .product()
    }

    /// Visits every lattice point of the shell whose `outer` coefficient
    /// equals `outer_val`; `visit` gets the original integer coefficients and
    /// the canonical point.
    fn scan_slice(&self, outer_val: i64, visit: &mut impl FnMut(&[i64], &[f64])) {
        let d = self.canon.d;
        let (inner, outer) = (self.inner, self.outer);
        let mut kp = self.lo.clone();
        kp[outer] = outer_val;
        let free: Vec<usize> = (0..d).filter(|&i| i != inner && i != outer).collect();
        for &i in &free {
            kp[i] = self.lo[i];
        }
        let mut q0 = vec![0.0; d];
        let mut korig = vec![0i64; d];
        let mut p = vec![0.0; d];
        loop {
            // q0 = R (k' + c') with k'_inner = 0
            for (i, q) in q0.iter_mut().enumerate() {
                let row = &self.r[i * d..(i + 1) * d];
                let mut s = 0.0;
                for c in 0..d {
                    let kc = if c == inner { 0.0 } else { kp[c] as f64 };
                    s += row[c] * (kc + self.cprime[c]);
                }
                *q = s;
            }
            let (mut tmin, mut tmax) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut empty = false;
            for i in 0..d {
                let a = self.r[i * d + inner];
                if a.abs() > 1e-300 {
                    let e1 = (-self.h[i] - q0[i]) / a;
                    let e2 = (self.h[i] - q0[i]) / a;
                    tmin = tmin.max(e1.min(e2));
                    tmax = tmax.min(e1.max(e2));
                } else if q0[i].abs() > self.h[i] {
                    empty = true;
                }
            }
            if !empty && tmin <= tmax {
                let kmin = (tmin.ceil() as i64).max(self.lo[inner]);
                let kmax = (tmax.floor() as i64).min(self.hi[inner]);
                for t in kmin..=kmax {
                    kp[inner] = t;
                    for (i, ko) in korig.iter_mut().enumerate() {
                        let row = &self.u[i * d..(i + 1) * d];
                        *ko = self.shift[i] + row.iter().zip(&kp).map(|(u, k)| u * k).sum::<i64>();
                    }
                    self.canon.point(&korig, &mut p);
                    if self.shell.contains_unrotated(&p)
                        && (!self.canon.primitive || is_primitive(&korig))
                    {
                        visit(&korig, &p);
                    }
                }
                kp[inner] = self.lo[inner];
            }
            // odometer over the free coordinates
            let mut advanced = false;
            for &i in &free {
                if kp[i] < self.hi[i] {
                    kp[i] += 1;
                    advanced = true;
                    break;
                }
                kp[i] = self.lo[i];
            }
            if !advanced {
                break;
            }
        }
    }

    fn count(&self) -> u64 {
        let range = self.lo[self.outer]..=self.hi[self.outer];
        let slice = |v: i64| {
            let mut c = 0u64;
            self.scan_slice(v, &mut |_, _| c += 1);
            c
        };
        if self.candidate_count() > PARALLEL_THRESHOLD {
            range.into_par_iter().map(slice).sum()
        } else {
            range.map(slice).sum()
        }
    }

    fn coefficients(&self) -> Vec<Vec<i64>> {
        let range = self.lo[self.outer]..=self.hi[self.outer];
        let slice = |v: i64| {
            let mut out = Vec::new();
            self.scan_slice(v, &mut |k, _| out.push(k.to_vec()));
            out
        };
        if self.candidate_count() > PARALLEL_THRESHOLD {
            range.into_par_iter().flat_map_iter(slice).collect()
        } else {
            range.flat_map(slice).collect()
        }
    }
}

/// The shells `(lo, hi, j)` visited by a strategy.
fn shells(region: &ThinningRegion, strategy: Strategy) -> Vec<(f64, f64, i32)> {
    let (lo, hi) = (region.y_lo(), region.y_hi());
    if region.is_empty() {
        return Vec::new();
    }
    match strategy.resolve(region) {
        Strategy::Dyadic => {
            let mut out = Vec::new();
            let mut j = 0i32;
            loop {
                let a = lo * (j as f64).exp2();
                if a >= hi {
                    break;
                }
                out.push((a, (2.0 * a).min(hi), j));
                j += 1;
            }
            out
        }
        _ => vec![(lo, hi, 0)],
    }
}

fn block_counts_for(
    canon: &Canonical,
    shells: &[(f64, f64, i32)],
    budget: f64,
) -> Result<Vec<u64>> {
    shells
        .par_iter()
        .map(|&(lo, hi, j)| {
            Ok(BlockScan::new(canon, lo, hi, j, budget)?
                .map(|s| s.count())
                .unwrap_or(0))
        })
        .collect()
}

/// Number of (primitive, if requested) lattice points in the region.
pub fn count_points(req: &CountRequest) -> Result<u64> {
    let canon = Canonical::new(req)?;
    let shells = shells(&req.region, req.strategy);
    Ok(block_counts_for(&canon, &shells, req.budget)?.iter().sum())
}

/// Integer coefficients `k` of the points `g (k + c)` in the region,
/// ordered by shell and then by scan order.
pub fn enumerate_coefficients(req: &CountRequest) -> Result<Vec<Vec<i64>>> {
    let canon = Canonical::new(req)?;
    let mut out = Vec::new();
    for (lo, hi, j) in shells(&req.region, req.strategy) {
        if let Some(scan) = BlockScan::new(&canon, lo, hi, j, req.budget)? {
            out.extend(scan.coefficients());
        }
    }
    Ok(out)
}

/// The lattice (or translate) points lying in `region`.
pub fn enumerate_points(lattice: &Lattice, region: &ThinningRegion) -> Result<Vec<SplitVector>> {
    let req = CountRequest::new(lattice.clone(), *region);
    Ok(enumerate_coefficients(&req)?
        .iter()
        .map(|k| lattice.point(k))
        .collect())
}

/// Partial sums `sum_{i<j} #(block_0 ∩ g_{log 2}^i Lambda)` for `j = 1..=k`,
/// blocks taken over `1 <= |y| < 2`.
pub fn birkhoff_counts(lattice: &Lattice, b: f64, k: u32) -> Result<Vec<u64>> {
    birkhoff_counts_with(lattice, b, k, false)
}

pub fn birkhoff_counts_with(
    lattice: &Lattice,
    b: f64,
    k: u32,
    primitive: bool,
) -> Result<Vec<u64>> {
    let region = ThinningRegion::up_to(b, lattice.m(), lattice.n(), (k.max(1) as f64).exp2())?;
    let req = CountRequest::new(lattice.clone(), region).primitive(primitive);
    let canon = Canonical::new(&req)?;
    let shells: Vec<_> = (0..k as i32)
        .map(|j| ((j as f64).exp2(), (j as f64 + 1.0).exp2(), j))
        .collect();
    let blocks = block_counts_for(&canon, &shells, DEFAULT_BUDGET)?;
    Ok(blocks
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect())
}

/// Per-block counts for the dyadic blocks `[2^j, 2^{j+1})`, `j < k`, of a
/// possibly rotated region with parameters taken from `template`.
pub fn dyadic_block_counts(req: &CountRequest, k: u32) -> Result<Vec<u64>> {
    let canon = Canonical::new(req)?;
    let shells: Vec<_> = (0..k as i32)
        .map(|j| ((j as f64).exp2(), (j as f64 + 1.0).exp2(), j))
        .collect();
    block_counts_for(&canon, &shells, req.budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnimodularBasis;
    use crate::lattice::AffineLattice;

    fn z2() -> Lattice {
        UnimodularBasis::identity(1, 1).unwrap().into()
    }

    fn sorted(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts
    }

    #[test]
    fn z2_fixture() {
        let region = ThinningRegion::up_to(1.0, 1, 1, 4.0).unwrap();
        let pts: Vec<Vec<f64>> = enumerate_points(&z2(), &region)
            .unwrap()
            .iter()
            .map(|p| p.coords().to_vec())
            .collect();
        let mut want = vec![];
        for x in [-1.0, 0.0, 1.0] {
            want.push(vec![x, 1.0]);
            want.push(vec![x, -1.0]);
        }
        for y in [-3.0, -2.0, 2.0, 3.0] {
            want.push(vec![0.0, y]);
        }
        assert_eq!(sorted(pts), sorted(want));
        for s in [Strategy::Direct, Strategy::Dyadic] {
            let req = CountRequest::new(z2(), region).strategy(s);
            assert_eq!(count_points(&req).unwrap(), 10);
            assert_eq!(count_points(&req.clone().primitive(true)).unwrap(), 6);
        }
    }

    #[test]
    fn stretched_fixture() {
        let b = UnimodularBasis::from_columns(&[vec![2.0, 0.0], vec![0.0, 0.5]], 1, 1).unwrap();
        let region = ThinningRegion::up_to(0.1, 1, 1, 2.0).unwrap();
        let pts: Vec<Vec<f64>> = enumerate_points(&b.into(), &region)
            .unwrap()
            .iter()
            .map(|p| p.coords().to_vec())
            .collect();
        assert_eq!(
            sorted(pts),
            vec![
                vec![0.0, -1.5],
                vec![0.0, -1.0],
                vec![0.0, 1.0],
                vec![0.0, 1.5]
            ]
        );
    }

    #[test]
    fn affine_fixture() {
        let aff =
            AffineLattice::new(UnimodularBasis::identity(1, 1).unwrap(), vec![0.5, 0.5]).unwrap();
        let region = ThinningRegion::up_to(1.0, 1, 1, 2.0).unwrap();
        let pts: Vec<Vec<f64>> = enumerate_points(&aff.clone().into(), &region)
            .unwrap()
            .iter()
            .map(|p| p.coords().to_vec())
            .collect();
        assert_eq!(
            sorted(pts),
            vec![
                vec![-0.5, -1.5],
                vec![-0.5, 1.5],
                vec![0.5, -1.5],
                vec![0.5, 1.5]
            ]
        );
        assert_eq!(birkhoff_counts(&aff.into(), 1.0, 2).unwrap(), vec![4, 4]);
    }

    #[test]
    fn birkhoff_fixture() {
        assert_eq!(birkhoff_counts(&z2(), 1.0, 0).unwrap(), Vec::<u64>::new());
        assert_eq!(birkhoff_counts(&z2(), 1.0, 2).unwrap(), vec![6, 10]);
    }

    #[test]
    fn empty_region_and_errors() {
        let region = ThinningRegion::new(1.0, 1, 1, 3.0, 3.0).unwrap();
        assert_eq!(count_points(&CountRequest::new(z2(), region)).unwrap(), 0);
        let aff =
            AffineLattice::new(UnimodularBasis::identity(1, 1).unwrap(), vec![0.5, 0.5]).unwrap();
        let r = ThinningRegion::up_to(1.0, 1, 1, 4.0).unwrap();
        assert!(count_points(&CountRequest::new(aff, r).primitive(true)).is_err());
        let r3 = ThinningRegion::up_to(1.0, 1, 2, 4.0).unwrap();
        assert!(count_points(&CountRequest::new(z2(), r3)).is_err());
        let big = ThinningRegion::up_to(1.0, 1, 1, 1e7).unwrap();
        let err = count_points(
            &CountRequest::new(z2(), big)
                .strategy(Strategy::Direct)
                .budget(1e6),
        );
        assert!(matches!(err, Err(Error::BudgetExceeded { .. })));
        // the y-axis alone carries ~2e7 points, so only the larger default budget suffices
        assert!(count_points(&CountRequest::new(z2(), big).budget(1e6)).is_err());
        assert!(count_points(&CountRequest::new(z2(), big)).is_ok());
    }

    #[test]
    fn rotated_region_counts_rotated_points() {
        // Rotating the region by theta is the same as rotating the lattice by -theta.
        let theta = 0.3;
        let region = ThinningRegion::rotated(1.0, 1, 1, 1.0, 64.0, theta).unwrap();
        let rotated = UnimodularBasis::identity(1, 1)
            .unwrap()
            .rotate(-theta)
            .unwrap();
        let plain = ThinningRegion::up_to(1.0, 1, 1, 64.0).unwrap();
        let a = count_points(&CountRequest::new(z2(), region)).unwrap();
        let b = count_points(&CountRequest::new(rotated, plain)).unwrap();
        assert_eq!(a, b);
    }
}
