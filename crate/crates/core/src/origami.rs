//! Square-tiled translation surfaces and their saddle connections.
//!
//! An origami on `N` unit squares is given by two permutations: `r(s)` is the
//! square to the right of `s` and `u(s)` the square above it. Squares are
//! 0-indexed internally and 1-indexed in files.
//!
//! A vertex is labelled by the squares having it as their bottom-left corner;
//! walking once around it maps that square to `u r u^{-1} r^{-1} (s)`, so the
//! vertices are the cycles of this commutator and a cycle of length `c` is a
//! cone point of angle `2 pi c`. A separatrix germ in a given direction is
//! identified with one square of its vertex's cycle.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::count::{enumerate_coefficients, CountRequest, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::geometry::UnimodularBasis;
use crate::region::ThinningRegion;
use crate::sampling::SeededStream;
use crate::stats::MCEstimate;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origami {
    r: Vec<usize>,
    u: Vec<usize>,
    r_inv: Vec<usize>,
    u_inv: Vec<usize>,
    /// vertex (commutator cycle) of the bottom-left corner of each square
    vertex_of: Vec<usize>,
    vertices: Vec<Vec<usize>>,
    /// whether each vertex is a zero of the 1-form (or a marked point)
    marked: Vec<bool>,
}

/// A vertex class with its cone angle `2 pi * angle_multiple`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConePoint {
    /// squares whose bottom-left corner is this vertex, in cycle order
    pub squares: Vec<usize>,
    pub angle_multiple: usize,
    /// zero of the 1-form, or the marked point of a genus-one surface
    pub marked: bool,
}

fn invert(p: &[usize]) -> Option<Vec<usize>> {
    let mut inv = vec![usize::MAX; p.len()];
    for (i, &j) in p.iter().enumerate() {
        if j >= p.len() || inv[j] != usize::MAX {
            return None;
        }
        inv[j] = i;
    }
    Some(inv)
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Origami {
    /// Builds an origami from 0-indexed right/up permutations.
    pub fn new(r: Vec<usize>, u: Vec<usize>) -> Result<Self> {
        let n = r.len();
        if n == 0 || u.len() != n {
            return Err(Error::InvalidOrigami(format!(
                "need two permutations of the same positive size, got {} and {}",
                r.len(),
                u.len()
            )));
        }
        let r_inv =
            invert(&r).ok_or_else(|| Error::InvalidOrigami("h is not a permutation".into()))?;
        let u_inv =
            invert(&u).ok_or_else(|| Error::InvalidOrigami("v is not a permutation".into()))?;

        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(s) = queue.pop_front() {
            for t in [r[s], u[s], r_inv[s], u_inv[s]] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        if seen.iter().any(|&v| !v) {
            return Err(Error::InvalidOrigami("surface is disconnected".into()));
        }

        let comm = |s: usize| u[r[u_inv[r_inv[s]]]];
        let mut vertex_of = vec![usize::MAX; n];
        let mut vertices = Vec::new();
        for s in 0..n {
            if vertex_of[s] != usize::MAX {
                continue;
            }
            let mut cycle = vec![s];
            vertex_of[s] = vertices.len();
            let mut t = comm(s);
            while t != s {
                vertex_of[t] = vertices.len();
                cycle.push(t);
                t = comm(t);
            }
            vertices.push(cycle);
        }
        let any_cone = vertices.iter().any(|c| c.len() > 1);
        let marked = vertices.iter().map(|c| c.len() > 1 || !any_cone).collect();
        Ok(Origami {
            r,
            u,
            r_inv,
            u_inv,
            vertex_of,
            vertices,
            marked,
        })
    }

    /// Builds an origami from 1-indexed one-line notation.
    pub fn from_one_based(h: &[usize], v: &[usize]) -> Result<Self> {
        let conv = |p: &[usize], name: &str| -> Result<Vec<usize>> {
            p.iter()
                .map(|&x| {
                    x.checked_sub(1)
                        .ok_or_else(|| Error::InvalidOrigami(format!("{name} contains 0")))
                })
                .collect()
        };
        Self::new(conv(h, "h")?, conv(v, "v")?)
    }

    /// The one-square torus.
    pub fn torus() -> Self {
        Self::new(vec![0], vec![0]).expect("valid")
    }

    /// The three-square L: squares 1, 2 side by side and 3 on top of 1.
    pub fn l_shape() -> Self {
        Self::from_one_based(&[2, 1, 3], &[3, 2, 1]).expect("valid")
    }

    /// Parses the text format: `N`, then `h`, then `v` in 1-indexed one-line
    /// notation. Lines starting with `#` and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let eof = |what: &str| Error::OrigamiFormat {
            line: text.lines().count() + 1,
            msg: format!("missing {what}"),
        };
        let (ln, first) = lines.next().ok_or_else(|| eof("square count"))?;
        let n: usize = first.parse().map_err(|_| Error::OrigamiFormat {
            line: ln,
            msg: format!("expected a positive square count, got {first:?}"),
        })?;
        if n == 0 {
            return Err(Error::OrigamiFormat {
                line: ln,
                msg: "square count must be positive".into(),
            });
        }
        let mut perm = |name: &str| -> Result<Vec<usize>> {
            let (ln, l) = lines.next().ok_or_else(|| eof(name))?;
            let vals: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::OrigamiFormat {
                    line: ln,
                    msg: format!("{name}: {e}"),
                })?;
            if vals.len() != n {
                return Err(Error::OrigamiFormat {
                    line: ln,
                    msg: format!("{name}: expected {n} entries, got {}", vals.len()),
                });
            }
            if vals.iter().any(|&x| x == 0 || x > n)
                || invert(&vals.iter().map(|x| x - 1).collect::<Vec<_>>()).is_none()
            {
                return Err(Error::OrigamiFormat {
                    line: ln,
                    msg: format!("{name} is not a permutation of 1..{n}"),
                });
            }
            Ok(vals.into_iter().map(|x| x - 1).collect())
        };
        let h = perm("h")?;
        let v = perm("v")?;
        let v_line = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#'))
            .nth(2)
            .map(|(i, _)| i + 1)
            .unwrap_or(0);
        Self::new(h, v).map_err(|e| Error::OrigamiFormat {
            line: v_line,
            msg: e.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The text format, 1-indexed.
    pub fn to_text(&self) -> String {
        let fmt = |p: &[usize]| {
            p.iter()
                .map(|x| (x + 1).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("{}\n{}\n{}\n", self.squares(), fmt(&self.r), fmt(&self.u))
    }

    pub fn squares(&self) -> usize {
        self.r.len()
    }

    pub fn right(&self) -> &[usize] {
        &self.r
    }

    pub fn up(&self) -> &[usize] {
        &self.u
    }

    /// Conjugates by the relabelling `s -> perm[s]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.squares();
        if perm.len() != n || invert(perm).is_none() {
            return Err(Error::invalid("relabelling must be a permutation"));
        }
        let mut r = vec![0; n];
        let mut u = vec![0; n];
        for s in 0..n {
            r[perm[s]] = perm[self.r[s]];
            u[perm[s]] = perm[self.u[s]];
        }
        Self::new(r, u)
    }

    pub fn cone_points(&self) -> Vec<ConePoint> {
        self.vertices
            .iter()
            .zip(&self.marked)
            .map(|(c, &marked)| ConePoint {
                squares: c.clone(),
                angle_multiple: c.len(),
                marked,
            })
            .collect()
    }

    /// `sum (c_i - 1) = 2g - 2`.
    pub fn genus(&self) -> usize {
        let excess: usize = self.vertices.iter().map(|c| c.len() - 1).sum();
        excess / 2 + 1
    }

    /// `V - E + F` of the square complex, with `V` found by gluing corners
    /// directly (independent of the commutator).
    pub fn euler_characteristic(&self) -> i64 {
        let n = self.squares();
        // corners: 0 BL, 1 BR, 2 TL, 3 TR
        let mut parent: Vec<usize> = (0..4 * n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let union = |p: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra != rb {
                p[ra] = rb;
            }
        };
        for s in 0..n {
            let (rs, us) = (self.r[s], self.u[s]);
            union(&mut parent, 4 * s + 1, 4 * rs);
            union(&mut parent, 4 * s + 3, 4 * rs + 2);
            union(&mut parent, 4 * s + 2, 4 * us);
            union(&mut parent, 4 * s + 3, 4 * us + 1);
        }
        let v = (0..4 * n).filter(|&x| find(&mut parent, x) == x).count() as i64;
        v - 2 * n as i64 + n as i64
    }

    pub fn is_marked_germ(&self, s: usize) -> bool {
        s < self.squares() && self.marked[self.vertex_of[s]]
    }

    /// Germs at zeros: squares whose bottom-left vertex is marked.
    pub fn germs(&self) -> Vec<usize> {
        (0..self.squares())
            .filter(|&s| self.is_marked_germ(s))
            .collect()
    }

    /// Follows the segment of holonomy `(p, q)` (primitive) leaving the vertex
    /// of germ `s`; returns the germ label of the vertex reached.
    fn period_end(&self, s: usize, p: i64, q: i64) -> usize {
        match (p.signum(), q.signum()) {
            (0, 1) => return self.u[s],
            (1, 0) => return self.r[s],
            (0, -1) => return self.u_inv[s],
            (-1, 0) => return self.r_inv[s],
            _ => {}
        }
        let (ap, aq) = (p.abs(), q.abs());
        let (east, north) = (p > 0, q > 0);
        let mut x = match (east, north) {
            (true, true) => s,
            (false, true) => self.r_inv[s],
            (false, false) => self.r_inv[self.u_inv[s]],
            (true, false) => self.u_inv[s],
        };
        let hmove = if east { &self.r } else { &self.r_inv };
        let vmove = if north { &self.u } else { &self.u_inv };
        // crossings of x = i at t = i/|p| and y = j at t = j/|q|
        let (mut i, mut j) = (1i64, 1i64);
        while i < ap || j < aq {
            if j >= aq || (i < ap && i * aq < j * ap) {
                x = hmove[x];
                i += 1;
            } else {
                x = vmove[x];
                j += 1;
            }
        }
        match (east, north) {
            (true, true) => self.u[self.r[x]],
            (false, true) => self.u[x],
            (false, false) => x,
            (true, false) => self.r[x],
        }
    }

    /// Traces the separatrix from germ `start` in the primitive direction
    /// `(p, q)`; returns its holonomy `(k p, k q)` when it hits a zero after
    /// `k <= max_periods` periods, passing straight through unmarked vertices.
    pub fn trace_separatrix(
        &self,
        start: usize,
        p: i64,
        q: i64,
        max_periods: usize,
    ) -> Result<Option<(i64, i64)>> {
        if !self.is_marked_germ(start) {
            return Err(Error::InvalidGerm(format!(
                "square {start} does not have a zero at its bottom-left corner"
            )));
        }
        if (p, q) == (0, 0) || gcd(p, q) != 1 {
            return Err(Error::invalid(format!(
                "direction ({p},{q}) is not primitive"
            )));
        }
        Ok(self
            .first_hit(start, p, q, max_periods)
            .map(|k| (k as i64 * p, k as i64 * q)))
    }

    fn first_hit(&self, start: usize, p: i64, q: i64, max_periods: usize) -> Option<usize> {
        let mut s = start;
        for k in 1..=max_periods {
            s = self.period_end(s, p, q);
            if self.marked[self.vertex_of[s]] {
                return Some(k);
            }
        }
        None
    }

    /// For each germ, the period at which the separatrix in direction
    /// `(p, q)` first hits a zero.
    fn hits_in_direction(&self, p: i64, q: i64) -> Result<Vec<usize>> {
        let max = self.squares();
        self.germs()
            .into_iter()
            .map(|g| {
                self.first_hit(g, p, q, max).ok_or(Error::TraceExhausted {
                    germ: g,
                    p,
                    q,
                    periods: max,
                })
            })
            .collect()
    }

    /// Saddle connections with holonomy `w` rotated by `-theta` in
    /// `{ |x'y'| <= b, y_lo <= y' < y_hi }`.
    pub fn saddle_connections_in_shell(
        &self,
        b: f64,
        y_lo: f64,
        y_hi: f64,
        theta: f64,
        distinct_holonomies: bool,
    ) -> Result<(u64, SaddleConnectionSet)> {
        let region = ThinningRegion::rotated(b, 1, 1, y_lo, y_hi, theta)?;
        let z2 = UnimodularBasis::identity(1, 1)?;
        let req = CountRequest::new(z2, region).budget(DEFAULT_BUDGET);
        let (sin, cos) = theta.sin_cos();
        let mut candidates: Vec<(i64, i64)> = enumerate_coefficients(&req)?
            .into_iter()
            .map(|k| (k[0], k[1]))
            .filter(|&(a, c)| -sin * a as f64 + cos * c as f64 > 0.0)
            .collect();
        candidates.sort_unstable();

        let mut memo: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut entries = Vec::new();
        let mut count = 0u64;
        for (a, c) in candidates {
            let g = gcd(a, c);
            let dir = (a / g, c / g);
            if let std::collections::hash_map::Entry::Vacant(e) = memo.entry(dir) {
                e.insert(self.hits_in_direction(dir.0, dir.1)?);
            }
            let mult = memo[&dir].iter().filter(|&&k| k as i64 == g).count() as u64;
            if mult > 0 {
                count += if distinct_holonomies { 1 } else { mult };
                entries.push(HolonomyEntry {
                    holonomy: (a, c),
                    multiplicity: mult,
                });
            }
        }
        Ok((count, SaddleConnectionSet { entries }))
    }

    /// `R_{b,T}` of the surface rotated by `theta`: saddle connections whose
    /// holonomy, rotated by `-theta`, has `|x'y'| <= b` and `1 <= y' < T`.
    pub fn count_saddle_connections(
        &self,
        b: f64,
        t: f64,
        theta: f64,
    ) -> Result<(u64, SaddleConnectionSet)> {
        self.count_saddle_connections_with(b, t, theta, false)
    }

    pub fn count_saddle_connections_with(
        &self,
        b: f64,
        t: f64,
        theta: f64,
        distinct_holonomies: bool,
    ) -> Result<(u64, SaddleConnectionSet)> {
        if t <= 1.0 {
            return Ok((0, SaddleConnectionSet::default()));
        }
        self.saddle_connections_in_shell(b, 1.0, t, theta, distinct_holonomies)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HolonomyEntry {
    pub holonomy: (i64, i64),
    pub multiplicity: u64,
}

/// Holonomies of saddle connections with their multiplicities, sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SaddleConnectionSet {
    pub entries: Vec<HolonomyEntry>,
}

impl SaddleConnectionSet {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    pub fn as_map(&self) -> BTreeMap<(i64, i64), u64> {
        self.entries
            .iter()
            .map(|e| (e.holonomy, e.multiplicity))
            .collect()
    }
}

/// Per-sample ratios `R_{b,T}(r_theta omega) / (2 b log T)` for uniform
/// `theta`; sample `i` draws its angle from `stream.derive(i)`.
pub fn sv_ratios(
    origami: &Origami,
    b: f64,
    log2_t: u32,
    theta_samples: u64,
    stream: &SeededStream,
) -> Result<Vec<f64>> {
    let t = (log2_t as f64).exp2();
    let norm = 2.0 * b * t.ln();
    (0..theta_samples)
        .into_par_iter()
        .map(|i| {
            let theta = stream.derive(i).rng().gen::<f64>() * std::f64::consts::TAU;
            let (count, _) = origami.count_saddle_connections(b, t, theta)?;
            Ok(count as f64 / norm)
        })
        .collect()
}

/// Empirical Siegel-Veech constant: mean of `R_{b,T}/(2 b log T)` over
/// uniformly rotated copies of the surface.
pub fn estimate_sv_constant(
    origami: &Origami,
    b: f64,
    log2_t: u32,
    theta_samples: u64,
    stream: &SeededStream,
) -> Result<MCEstimate> {
    if log2_t < 6 {
        return Err(Error::invalid("estimate_sv_constant needs log2T >= 6"));
    }
    if theta_samples < 10 {
        return Err(Error::invalid(
            "estimate_sv_constant needs at least 10 angles",
        ));
    }
    MCEstimate::from_values(sv_ratios(origami, b, log2_t, theta_samples, stream)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::{count_points, CountRequest};

    #[test]
    fn torus_and_l_combinatorics() {
        let t = Origami::torus();
        let cp = t.cone_points();
        assert_eq!(cp.len(), 1);
        assert_eq!(cp[0].angle_multiple, 1);
        assert!(cp[0].marked);
        assert_eq!(t.genus(), 1);

        let l = Origami::l_shape();
        let cp = l.cone_points();
        assert_eq!(cp.len(), 1);
        assert_eq!(cp[0].angle_multiple, 3);
        assert_eq!(l.genus(), 2);
        assert_eq!(l.euler_characteristic(), -2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Origami::new(vec![0, 0], vec![0, 1]).is_err());
        assert!(Origami::new(vec![0, 1], vec![0, 1]).is_err()); // disconnected
        assert!(Origami::new(vec![], vec![]).is_err());
        assert!(Origami::from_one_based(&[0], &[1]).is_err());
    }

    #[test]
    fn parse_format() {
        let text = "# L-shaped surface\n3\n2 1 3\n\n# up\n3 2 1\n";
        assert_eq!(Origami::parse(text).unwrap(), Origami::l_shape());
        assert_eq!(
            Origami::parse(&Origami::l_shape().to_text()).unwrap(),
            Origami::l_shape()
        );

        let err = Origami::parse("3\n2 1 1\n3 2 1\n").unwrap_err();
        assert!(matches!(err, Error::OrigamiFormat { line: 2, .. }), "{err}");
        let err = Origami::parse("# c\n3\n2 1 3\n3 2 x\n").unwrap_err();
        assert!(matches!(err, Error::OrigamiFormat { line: 4, .. }), "{err}");
        let err = Origami::parse("2\n1 2\n1 2\n").unwrap_err();
        assert!(matches!(err, Error::OrigamiFormat { line: 3, .. }), "{err}");
        assert!(Origami::parse("2\n2 1\n").is_err());
        assert!(Origami::parse("zero\n").is_err());
    }

    #[test]
    fn torus_traces() {
        let t = Origami::torus();
        assert_eq!(t.trace_separatrix(0, 0, 1, 1).unwrap(), Some((0, 1)));
        assert_eq!(t.trace_separatrix(0, 1, 1, 1).unwrap(), Some((1, 1)));
        assert_eq!(t.trace_separatrix(0, -3, 7, 1).unwrap(), Some((-3, 7)));
        assert!(t.trace_separatrix(0, 2, 2, 1).is_err());
    }

    #[test]
    fn l_shape_traces_end_after_one_period() {
        // every corner of the 3-square L is the single cone point
        let l = Origami::l_shape();
        for (p, q) in [(0, 1), (1, 0), (1, 1), (-2, 3), (5, -1)] {
            for g in l.germs() {
                assert_eq!(l.trace_separatrix(g, p, q, 3).unwrap(), Some((p, q)));
            }
        }
        let two_square = Origami::from_one_based(&[2, 1], &[1, 2]).unwrap();
        // genus one: every vertex is a marked point
        assert!(two_square.cone_points().iter().all(|c| c.marked));
    }

    #[test]
    fn traces_pass_through_regular_vertices() {
        // 4-square L: a cone point of angle 6 pi and one regular vertex
        let l4 = Origami::from_one_based(&[2, 3, 1, 4], &[4, 2, 3, 1]).unwrap();
        let mut angles: Vec<usize> = l4.cone_points().iter().map(|c| c.angle_multiple).collect();
        angles.sort();
        assert_eq!(angles, vec![1, 3]);
        assert_eq!(l4.germs().len(), 3);
        // the bottom row is a horizontal cylinder of length 3 whose boundary
        // passes the regular vertex
        let ks: Vec<i64> = l4
            .germs()
            .into_iter()
            .map(|g| l4.trace_separatrix(g, 1, 0, 4).unwrap().unwrap().0)
            .collect();
        assert!(ks.iter().all(|&k| (1..=3).contains(&k)), "{ks:?}");
        assert!(ks.iter().any(|&k| k > 1), "{ks:?}");
        assert_eq!(l4.trace_separatrix(0, 1, 0, 0).unwrap(), None);
    }

    #[test]
    fn invalid_germ() {
        // squares 1..3 of a 3-square torus cover where only vertices exist
        let l = Origami::l_shape();
        assert!(l.trace_separatrix(7, 0, 1, 3).is_err());
    }

    #[test]
    fn torus_fixture_count() {
        let (count, set) = Origami::torus()
            .count_saddle_connections(1.0, 4.0, 0.0)
            .unwrap();
        assert_eq!(count, 3);
        let map = set.as_map();
        assert_eq!(map.len(), 3);
        for h in [(0, 1), (1, 1), (-1, 1)] {
            assert_eq!(map[&h], 1);
        }
        assert_eq!(
            Origami::l_shape()
                .count_saddle_connections(1.0, 1.0, 0.3)
                .unwrap()
                .0,
            0
        );
    }

    #[test]
    fn torus_matches_primitive_lattice_count() {
        for theta in [0.0, 0.4, 1.3, 2.9, 4.4, 6.0] {
            let (count, _) = Origami::torus()
                .count_saddle_connections(1.0, 512.0, theta)
                .unwrap();
            let region = ThinningRegion::rotated(1.0, 1, 1, 1.0, 512.0, theta).unwrap();
            let z2 = UnimodularBasis::identity(1, 1).unwrap();
            let all = count_points(&CountRequest::new(z2, region).primitive(true)).unwrap();
            // primitive vectors come in +-pairs and exactly one of each has y' > 0
            assert_eq!(2 * count, all, "theta = {theta}");
        }
    }

    #[test]
    fn spectrum_entries_are_well_formed() {
        let l = Origami::l_shape();
        for theta in [0.0, 0.7, 2.2] {
            let (count, set) = l.count_saddle_connections(1.5, 256.0, theta).unwrap();
            assert_eq!(count, set.total());
            for e in &set.entries {
                assert!(e.multiplicity > 0);
                assert!(e.multiplicity as usize <= l.germs().len());
            }
            let (distinct, _) = l
                .count_saddle_connections_with(1.5, 256.0, theta, true)
                .unwrap();
            assert_eq!(distinct as usize, set.entries.len());
        }
    }

    #[test]
    fn shell_counts_are_additive() {
        let l = Origami::l_shape();
        let theta = 0.9;
        let (whole, _) = l.count_saddle_connections(1.0, 1024.0, theta).unwrap();
        let blocks: u64 = (0..10)
            .map(|j| {
                let lo = (j as f64).exp2();
                l.saddle_connections_in_shell(1.0, lo, 2.0 * lo, theta, false)
                    .unwrap()
                    .0
            })
            .sum();
        assert_eq!(whole, blocks);
    }
}
