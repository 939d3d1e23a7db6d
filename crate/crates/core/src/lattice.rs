//! Plain and affine lattices, and LLL basis reduction.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{SplitVector, UnimodularBasis};

/// Lovász parameter used by [`reduce_basis`].
pub const LLL_DELTA: f64 = 0.75;

/// The translate `{ g (k + c) : k in Z^d }` with `c` reduced to `[0,1)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLattice {
    basis: UnimodularBasis,
    offset_coeffs: Vec<f64>,
}

pub(crate) fn frac(c: f64) -> f64 {
    let f = c - c.floor();
    // c slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

impl AffineLattice {
    pub fn new(basis: UnimodularBasis, offset_coeffs: Vec<f64>) -> Result<Self> {
        if offset_coeffs.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: offset_coeffs.len(),
            });
        }
        if offset_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("offset must be finite"));
        }
        let offset_coeffs = offset_coeffs.into_iter().map(frac).collect();
        Ok(AffineLattice {
            basis,
            offset_coeffs,
        })
    }

    /// `basis Z^d + v` for an ambient vector `v`.
    pub fn from_ambient_offset(basis: UnimodularBasis, v: &[f64]) -> Result<Self> {
        if v.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: v.len(),
            });
        }
        let inv = basis
            .matrix()
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("singular basis"))?;
        let c = inv * nalgebra::DVector::from_column_slice(v);
        Self::new(basis, c.iter().copied().collect())
    }

    pub fn basis(&self) -> &UnimodularBasis {
        &self.basis
    }

    pub fn offset_coeffs(&self) -> &[f64] {
        &self.offset_coeffs
    }

    pub fn offset_vector(&self) -> Vec<f64> {
        self.basis.point(&self.offset_coeffs).coords().to_vec()
    }
}

/// A lattice or a translate of one.
#[derive(Debug, Clone, PartialEq)]
pub enum Lattice {
    Plain(UnimodularBasis),
    Affine(AffineLattice),
}

impl Lattice {
    pub fn basis(&self) -> &UnimodularBasis {
        match self {
            Lattice::Plain(b) => b,
            Lattice::Affine(a) => a.basis(),
        }
    }

    /// Offset coefficients (all zero for a plain lattice).
    pub fn offset_coeffs(&self) -> Vec<f64> {
        match self {
            Lattice::Plain(b) => vec![0.0; b.dim()],
            Lattice::Affine(a) => a.offset_coeffs().to_vec(),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Lattice::Affine(_))
    }

    pub fn m(&self) -> usize {
        self.basis().m()
    }

    pub fn n(&self) -> usize {
        self.basis().n()
    }

    pub fn dim(&self) -> usize {
        self.basis().dim()
    }

    /// The point `g (k + c)`.
    pub fn point(&self, k: &[i64]) -> SplitVector {
        let c = self.offset_coeffs();
        let coeffs: Vec<f64> = k.iter().zip(&c).map(|(&k, &c)| k as f64 + c).collect();
        self.basis().point(&coeffs)
    }

    /// Same point set written in another basis of the same lattice.
    pub fn with_basis(&self, basis: UnimodularBasis) -> Result<Lattice> {
        match self {
            Lattice::Plain(_) => Ok(Lattice::Plain(basis)),
            Lattice::Affine(a) => {
                AffineLattice::from_ambient_offset(basis, &a.offset_vector()).map(Lattice::Affine)
            }
        }
    }
}

impl From<UnimodularBasis> for Lattice {
    fn from(b: UnimodularBasis) -> Self {
        Lattice::Plain(b)
    }
}

impl From<AffineLattice> for Lattice {
    fn from(a: AffineLattice) -> Self {
        Lattice::Affine(a)
    }
}

/// Result of LLL reduction: `reduced = original * transform`, with
/// `transform` an integer matrix of determinant `+-1` and `inverse` its inverse.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// Reduced columns, `d x d`, column-major.
    pub reduced: DMatrix<f64>,
    pub transform: Vec<i64>,
    pub inverse: Vec<i64>,
}

impl Reduction {
    /// Entry `(i, j)` of the integer transform (row-major storage).
    pub fn u(&self, i: usize, j: usize) -> i64 {
        self.transform[i * self.reduced.ncols() + j]
    }

    pub fn u_inv(&self, i: usize, j: usize) -> i64 {
        self.inverse[i * self.reduced.ncols() + j]
    }
}

fn gram_schmidt(b: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let d = b.ncols();
    let mut star = b.clone();
    let mut norms = vec![0.0; d];
    for i in 0..d {
        for j in 0..i {
            let mu = b.column(i).dot(&star.column(j)) / norms[j];
            let sj = star.column(j).into_owned();
            star.column_mut(i).axpy(-mu, &sj, 1.0);
        }
        norms[i] = star.column(i).norm_squared();
    }
    (star, norms)
}

/// LLL reduction of the columns of `b` with parameter `delta`, tracking the
/// integer change of basis.
pub fn lll(b: &DMatrix<f64>, delta: f64) -> Reduction {
    let d = b.ncols();
    let mut b = b.clone();
    let mut u = vec![0i64; d * d];
    let mut uinv = vec![0i64; d * d];
    for i in 0..d {
        u[i * d + i] = 1;
        uinv[i * d + i] = 1;
    }
    let mut k = 1;
    let mut guard = 0usize;
    while k < d && guard < 10_000 * d {
        guard += 1;
        let (star, norms) = gram_schmidt(&b);
        for j in (0..k).rev() {
            let mu = b.column(k).dot(&star.column(j)) / norms[j];
            if mu.abs() > 0.5 {
                let q = mu.round();
                let bj = b.column(j).into_owned();
                b.column_mut(k).axpy(-q, &bj, 1.0);
                let qi = q as i64;
                for r in 0..d {
                    u[r * d + k] -= qi * u[r * d + j];
                }
                for c in 0..d {
                    uinv[j * d + c] += qi * uinv[k * d + c];
                }
            }
        }
        let (star, norms) = gram_schmidt(&b);
        let mu = b.column(k).dot(&star.column(k - 1)) / norms[k - 1];
        if norms[k] >= (delta - mu * mu) * norms[k - 1] {
            k += 1;
        } else {
            b.swap_columns(k, k - 1);
            for r in 0..d {
                u.swap(r * d + k, r * d + k - 1);
            }
            for c in 0..d {
                uinv.swap(k * d + c, (k - 1) * d + c);
            }
            k = k.saturating_sub(1).max(1);
        }
    }
    Reduction {
        reduced: b,
        transform: u,
        inverse: uinv,
    }
}

/// An LLL-reduced (`delta = 0.75`) basis of the same lattice.
pub fn reduce_basis(basis: &UnimodularBasis) -> UnimodularBasis {
    let red = lll(basis.matrix(), LLL_DELTA);
    UnimodularBasis::from_raw(red.reduced, basis.m(), basis.n())
}
