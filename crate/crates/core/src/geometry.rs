//! Split coordinates `(x, y)`, unimodular bases, the diagonal flow and the
//! horospherical shear.
//!
//! A vector in `R^d` with `d = m + n` is split as `(x, y)` with `x` the first
//! `m` coordinates and `y` the last `n`. All matrices act on column vectors.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance on `| |det| - 1 |` accepted at construction.
pub const DET_TOLERANCE: f64 = 1e-9;

/// Number of flow steps between determinant renormalizations in [`FlowOrbit`].
pub const RENORMALIZE_EVERY: usize = 50;

/// Volume of the unit ball in `R^k`, `pi^(k/2) / Gamma(k/2 + 1)`.
pub fn ball_volume(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("ball_volume: dimension must be >= 1"));
    }
    // B_k = 2*pi/k * B_{k-2}, B_0 = 1, B_1 = 2.
    let (mut v, start) = if k.is_multiple_of(2) {
        (1.0, 2)
    } else {
        (2.0, 3)
    };
    let mut j = start;
    while j <= k {
        v *= 2.0 * PI / j as f64;
        j += 2;
    }
    Ok(v)
}

/// Surface area of the unit sphere `S^{k-1}` in `R^k`, `2 pi^(k/2) / Gamma(k/2)`.
pub fn sphere_area(k: usize) -> Result<f64> {
    Ok(k as f64 * ball_volume(k)?)
}

/// A point of `R^m x R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVector {
    coords: Vec<f64>,
    m: usize,
    n: usize,
}

impl SplitVector {
    pub fn new(coords: Vec<f64>, m: usize, n: usize) -> Result<Self> {
        check_dims(m, n)?;
        if coords.len() != m + n {
            return Err(Error::DimensionMismatch {
                expected: m + n,
                got: coords.len(),
            });
        }
        Ok(SplitVector { coords, m, n })
    }

    pub fn from_parts(x: &[f64], y: &[f64]) -> Result<Self> {
        let mut coords = x.to_vec();
        coords.extend_from_slice(y);
        Self::new(coords, x.len(), y.len())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &[f64] {
        &self.coords[..self.m]
    }

    pub fn y(&self) -> &[f64] {
        &self.coords[self.m..]
    }

    pub fn x_norm(&self) -> f64 {
        norm(self.x())
    }

    pub fn y_norm(&self) -> f64 {
        norm(self.y())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!(
            "split dimensions must be positive (m = {m}, n = {n})"
        )));
    }
    Ok(())
}

/// A basis `g` of the lattice `g Z^d`, stored column by column, with `|det g| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnimodularBasis {
    columns: DMatrix<f64>,
    m: usize,
    n: usize,
}

impl UnimodularBasis {
    pub fn new(columns: DMatrix<f64>, m: usize, n: usize) -> Result<Self> {
        check_dims(m, n)?;
        let d = m + n;
        if columns.nrows() != d || columns.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: columns.nrows().max(columns.ncols()),
            });
        }
        if columns.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("basis has non-finite entries"));
        }
        let det = columns.determinant();
        if (det.abs() - 1.0).abs() > DET_TOLERANCE {
            return Err(Error::NotUnimodular(det.abs()));
        }
        Ok(UnimodularBasis { columns, m, n })
    }

    /// Builds a basis from its column vectors.
    pub fn from_columns(cols: &[Vec<f64>], m: usize, n: usize) -> Result<Self> {
        let d = m + n;
        if cols.len() != d || cols.iter().any(|c| c.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cols.len(),
            });
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| cols[j][i]), m, n)
    }

    pub fn identity(m: usize, n: usize) -> Result<Self> {
        check_dims(m, n)?;
        Ok(UnimodularBasis {
            columns: DMatrix::identity(m + n, m + n),
            m,
            n,
        })
    }

    /// Rescales an invertible matrix by `|det|^(-1/d)` to make it unimodular.
    pub fn normalized(columns: DMatrix<f64>, m: usize, n: usize) -> Result<Self> {
        let d = (m + n) as f64;
        let det = columns.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::invalid("cannot normalize a singular matrix"));
        }
        Self::new(columns * det.abs().powf(-1.0 / d), m, n)
    }

    pub(crate) fn from_raw(columns: DMatrix<f64>, m: usize, n: usize) -> Self {
        UnimodularBasis { columns, m, n }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
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

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.columns.column(j).iter().copied().collect()
    }

    pub fn determinant(&self) -> f64 {
        self.columns.determinant()
    }

    /// The lattice point `g k` as a split vector.
    pub fn point(&self, coeffs: &[f64]) -> SplitVector {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (j, &k) in coeffs.iter().enumerate().take(d) {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.columns[(i, j)] * k;
            }
        }
        SplitVector {
            coords: out,
            m: self.m,
            n: self.n,
        }
    }

    /// `g_t = diag(e^{(n/m) t} I_m, e^{-t} I_n)` applied on the left.
    pub fn apply_flow(&self, t: f64) -> UnimodularBasis {
        let up = (self.n as f64 / self.m as f64 * t).exp();
        let down = (-t).exp();
        self.scaled_rows(up, down)
    }

    /// `g_{j log 2}` with the scale factors taken as exact powers of two
    /// (exact whenever `j n / m` is an integer).
    pub fn apply_dyadic_flow(&self, j: i32) -> UnimodularBasis {
        let (up, down) = dyadic_factors(self.m, self.n, j);
        self.scaled_rows(up, down)
    }

    fn scaled_rows(&self, up: f64, down: f64) -> UnimodularBasis {
        let mut cols = self.columns.clone();
        for i in 0..self.dim() {
            let s = if i < self.m { up } else { down };
            cols.row_mut(i).scale_mut(s);
        }
        UnimodularBasis::from_raw(cols, self.m, self.n)
    }

    /// Rotation of the plane by `theta` applied on the left (`d = 2` only).
    pub fn rotate(&self, theta: f64) -> Result<UnimodularBasis> {
        if self.dim() != 2 {
            return Err(Error::Unsupported(
                "rotation is only defined for d = 2".into(),
            ));
        }
        let (s, c) = theta.sin_cos();
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        Ok(UnimodularBasis::from_raw(&r * &self.columns, 1, 1))
    }

    /// Left multiplication by `h`, keeping the split.
    pub fn left_mul(&self, h: &DMatrix<f64>) -> Result<UnimodularBasis> {
        UnimodularBasis::new(h * &self.columns, self.m, self.n)
    }

    /// Rescales so that `|det| = 1` again (removes floating-point drift).
    pub fn renormalize(&self) -> UnimodularBasis {
        let det = self.columns.determinant().abs();
        let s = det.powf(-1.0 / self.dim() as f64);
        UnimodularBasis::from_raw(&self.columns * s, self.m, self.n)
    }
}

pub(crate) fn dyadic_factors(m: usize, n: usize, j: i32) -> (f64, f64) {
    let up = (j as f64 * n as f64 / m as f64).exp2();
    let down = (-(j as f64)).exp2();
    (up, down)
}

/// Iterates `g_t^k Lambda` for `k = 0, 1, 2, ...`, renormalizing the
/// determinant every [`RENORMALIZE_EVERY`] steps.
#[derive(Debug, Clone)]
pub struct FlowOrbit {
    current: UnimodularBasis,
    t: f64,
    steps: usize,
}

impl FlowOrbit {
    pub fn new(start: UnimodularBasis, t: f64) -> Self {
        FlowOrbit {
            current: start,
            t,
            steps: 0,
        }
    }
}

impl Iterator for FlowOrbit {
    type Item = UnimodularBasis;

    fn next(&mut self) -> Option<UnimodularBasis> {
        let out = self.current.clone();
        let mut next = self.current.apply_flow(self.t);
        self.steps += 1;
        if self.steps.is_multiple_of(RENORMALIZE_EVERY) {
            next = next.renormalize();
        }
        self.current = next;
        Some(out)
    }
}

/// The shear `h_A = [[I_m, -A], [0, I_n]]` for an `m x n` matrix `A`.
pub fn shear_matrix(a: &DMatrix<f64>) -> Result<UnimodularBasis> {
    let (m, n) = a.shape();
    check_dims(m, n)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("shear matrix entries must be finite"));
    }
    let d = m + n;
    let mut h = DMatrix::identity(d, d);
    h.view_mut((0, m), (m, n)).copy_from(&(-a));
    Ok(UnimodularBasis::from_raw(h, m, n))
}

/// `g = [[B, 0], [C, D]] h_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct HDecomposition {
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

impl HDecomposition {
    pub fn m(&self) -> usize {
        self.b.nrows()
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    /// Multiplies the factors back together.
    pub fn recompose(&self) -> DMatrix<f64> {
        let (m, n) = (self.m(), self.n());
        let mut lower = DMatrix::zeros(m + n, m + n);
        lower.view_mut((0, 0), (m, m)).copy_from(&self.b);
        lower.view_mut((m, 0), (n, m)).copy_from(&self.c);
        lower.view_mut((m, m), (n, n)).copy_from(&self.d);
        let h = shear_matrix(&self.a).expect("finite shear");
        lower * h.matrix()
    }
}

/// Splits `g = [[beta, alpha], [gamma, delta]]` as `[[B, 0], [C, D]] h_A` with
/// `B = beta`, `C = gamma`, `A = -beta^{-1} alpha`, `D = delta - gamma beta^{-1} alpha`.
pub fn decompose(g: &DMatrix<f64>, m: usize, n: usize) -> Result<HDecomposition> {
    check_dims(m, n)?;
    let basis = UnimodularBasis::new(g.clone(), m, n)?;
    let g = basis.matrix();
    let beta = g.view((0, 0), (m, m)).into_owned();
    let alpha = g.view((0, m), (m, n)).into_owned();
    let gamma = g.view((m, 0), (n, m)).into_owned();
    let delta = g.view((m, m), (n, n)).into_owned();
    let lu = beta.clone().lu();
    let scale = beta.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    if lu.determinant().abs() <= 1e-12 * scale.powi(m as i32) {
        return Err(Error::SingularBlock(m));
    }
    let beta_inv_alpha = lu.solve(&alpha).ok_or(Error::SingularBlock(m))?;
    let a = -&beta_inv_alpha;
    let d = &delta - &gamma * &beta_inv_alpha;
    Ok(HDecomposition {
        b: beta,
        c: gamma,
        d,
        a,
    })
}
