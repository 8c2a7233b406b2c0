//! Potentials on the unit disk whose differentials are pairwise disjoint graph disks
//! with prescribed boundary braid, and their nesting along a census tower.
//!
//! Everything lives on a polar grid over the annulus `[r0, 1] x S^1`; inside `r0`
//! each potential is the linear function given by its center covector. On ring `i`,
//! `phi[i][k]` sits at the node angle `k dtheta`, and the forward difference
//! `phi[i][k+1] - phi[i][k]` is the angular derivative on cell `k` (midpoint angle).
//! A section `f dtheta + g dr` stores `f` per cell and `g` per node.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transfer::{AngleShift, StrandCensus, TransferMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LamError {
    #[error("grid needs at least 8 rings and 8 angles, got {nr} x {ntheta}")]
    BadGrid { nr: usize, ntheta: usize },
    #[error("inner radius must lie in (0, 1), got {0}")]
    BadRadius(f64),
    #[error("section has {got} samples, grid has {want}")]
    Resolution { got: usize, want: usize },
    #[error("section f and g lengths differ: {0} vs {1}")]
    Length(usize, usize),
    #[error("section is not exact: flux of f is {0:e}")]
    NotExact(f64),
    #[error("no strands given")]
    NoStrands,
    #[error("strands {i} and {j} meet at sample {k}")]
    NotDisjoint { i: usize, j: usize, k: usize },
    #[error("loop family passes through the origin at ring {ring}, node {node}")]
    OriginTouched { ring: usize, node: usize },
    #[error("curve {curve} changes sign at ring {ring}; refine the sampling")]
    InconsistentSign { curve: usize, ring: usize },
    #[error("cannot trace markers at ring {ring}; refine the sampling")]
    Tracing { ring: usize },
    #[error("collection for strands ({i}, {j}) disagrees with the fixed data at ring {ring}")]
    Inconsistent { i: usize, j: usize, ring: usize },
    #[error("no collection for strands ({0}, {1})")]
    MissingCollection(usize, usize),
    #[error("collection refers to strands ({0}, {1}) that do not exist")]
    BadPair(usize, usize),
    #[error("collection was sampled on a different grid")]
    GridMismatch,
    #[error("infeasible after {iterations} iterations: {constraint}")]
    Infeasible {
        iterations: usize,
        constraint: String,
    },
    #[error(
        "strand {strand} at depth {depth} leaves its parent's tube: {distance:e} > {allowed:e}"
    )]
    Containment {
        depth: usize,
        strand: usize,
        distance: f64,
        allowed: f64,
    },
    #[error("strand {strand} at depth {depth} has no valid parent")]
    BadParent { depth: usize, strand: usize },
    #[error("contraction must lie in (0, 1/2], got {0}")]
    BadContraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub nr: usize,
    pub ntheta: usize,
    pub r0: f64,
}

impl Default for PolarGrid {
    fn default() -> Self {
        PolarGrid {
            nr: 64,
            ntheta: 256,
            r0: 0.1,
        }
    }
}

impl PolarGrid {
    pub fn validate(&self) -> Result<(), LamError> {
        if self.nr < 8 || self.ntheta < 8 {
            return Err(LamError::BadGrid {
                nr: self.nr,
                ntheta: self.ntheta,
            });
        }
        if !(self.r0 > 0.0 && self.r0 < 1.0) {
            return Err(LamError::BadRadius(self.r0));
        }
        Ok(())
    }

    pub fn dr(&self) -> f64 {
        (1.0 - self.r0) / (self.nr - 1) as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.ntheta as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.r0 + i as f64 * self.dr()
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dtheta()
    }

    pub fn mid(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dtheta()
    }

    fn len(&self) -> usize {
        self.nr * self.ntheta
    }

    fn at(&self, i: usize, k: usize) -> usize {
        i * self.ntheta + k
    }
}

/// The section `f dtheta + g dr` over the unit circle, sampled at `K` angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySection {
    /// Angular component on cell `k`.
    pub f: Vec<f64>,
    /// Radial component at node `k`.
    pub g: Vec<f64>,
}

const FLUX_TOL: f64 = 1e-9;

impl BoundarySection {
    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Result<Self, LamError> {
        let s = BoundarySection { f, g };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), LamError> {
        if self.f.len() != self.g.len() {
            return Err(LamError::Length(self.f.len(), self.g.len()));
        }
        let flux = self.flux();
        let scale = 1.0 + self.f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if flux.abs() > FLUX_TOL * scale {
            return Err(LamError::NotExact(flux));
        }
        Ok(())
    }

    pub fn resolution(&self) -> usize {
        self.f.len()
    }

    /// `integral f dtheta` by the midpoint rule.
    pub fn flux(&self) -> f64 {
        let k = self.f.len().max(1) as f64;
        self.f.iter().sum::<f64>() * 2.0 * PI / k
    }

    /// Angular part from potential values at the nodes.
    pub fn from_potential(p: &[f64], g: Vec<f64>) -> Result<Self, LamError> {
        let k = p.len();
        let dt = 2.0 * PI / k as f64;
        let f = (0..k).map(|j| (p[(j + 1) % k] - p[j]) / dt).collect();
        BoundarySection::new(f, g)
    }

    /// The restriction of `d(a x + b y)`, exactly reproducible on the grid.
    pub fn constant(a: f64, b: f64, k: usize) -> Self {
        let dt = 2.0 * PI / k as f64;
        let p: Vec<f64> = (0..k)
            .map(|j| a * (j as f64 * dt).cos() + b * (j as f64 * dt).sin())
            .collect();
        Self::from_potential(&p, p.clone()).expect("closed by construction")
    }

    pub fn zero(k: usize) -> Self {
        BoundarySection {
            f: vec![0.0; k],
            g: vec![0.0; k],
        }
    }

    /// Drops the flux of `f`, returning the exact part and the removed flux.
    pub fn exact_part(f: Vec<f64>, g: Vec<f64>) -> Result<(Self, f64), LamError> {
        if f.len() != g.len() {
            return Err(LamError::Length(f.len(), g.len()));
        }
        let mean = f.iter().sum::<f64>() / f.len().max(1) as f64;
        let f = f.into_iter().map(|x| x - mean).collect();
        Ok((BoundarySection { f, g }, mean * 2.0 * PI))
    }

    pub fn minus(&self, other: &BoundarySection) -> BoundarySection {
        BoundarySection {
            f: self.f.iter().zip(&other.f).map(|(a, b)| a - b).collect(),
            g: self.g.iter().zip(&other.g).map(|(a, b)| a - b).collect(),
        }
    }

    /// Least-squares constant covector `(a, b)` for this section.
    pub fn affine_fit(&self) -> [f64; 2] {
        let k = self.f.len();
        let dt = 2.0 * PI / k as f64;
        let node = |j: usize| j as f64 * dt;
        // basis columns evaluated on (f cells, g nodes)
        let (mut aa, mut ab, mut bb, mut ya, mut yb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..k {
            let fa = ((node(j + 1)).cos() - node(j).cos()) / dt;
            let fb = ((node(j + 1)).sin() - node(j).sin()) / dt;
            let (ga, gb) = (node(j).cos(), node(j).sin());
            aa += fa * fa + ga * ga;
            ab += fa * fb + ga * gb;
            bb += fb * fb + gb * gb;
            ya += fa * self.f[j] + ga * self.g[j];
            yb += fb * self.f[j] + gb * self.g[j];
        }
        let det = aa * bb - ab * ab;
        [(ya * bb - yb * ab) / det, (yb * aa - ya * ab) / det]
    }
}

/// A boundary strand together with the covector of its linear inner patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strand {
    pub boundary: BoundarySection,
    pub center: [f64; 2],
}

impl Strand {
    /// Uses the least-squares constant covector as the inner patch.
    pub fn fitted(boundary: BoundarySection) -> Self {
        let center = boundary.affine_fit();
        Strand { boundary, center }
    }
}

/// A sampled loop family `Gamma(r, theta)` in the `(dtheta, dr)` fiber plane.
///
/// The angular component is sampled per cell, the radial one per node, so that
/// sign changes of the angular component fall on nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopFamily {
    pub grid: PolarGrid,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
}

impl LoopFamily {
    pub fn from_fn(grid: PolarGrid, gamma: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut g1 = vec![0.0; grid.len()];
        let mut g2 = vec![0.0; grid.len()];
        for i in 0..grid.nr {
            let r = grid.radius(i);
            for k in 0..grid.ntheta {
                g1[grid.at(i, k)] = gamma(r, grid.mid(k)).0;
                g2[grid.at(i, k)] = gamma(r, grid.node(k)).1;
            }
        }
        LoopFamily {
            grid,
            gamma1: g1,
            gamma2: g2,
        }
    }

    /// Angular component from a potential family: cell differences of `p(r, theta)`.
    pub fn from_potential(
        grid: PolarGrid,
        p: impl Fn(f64, f64) -> f64,
        radial: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut g1 = vec![0.0; grid.len()];
        let mut g2 = vec![0.0; grid.len()];
        let dt = grid.dtheta();
        for i in 0..grid.nr {
            let r = grid.radius(i);
            let vals: Vec<f64> = (0..grid.ntheta).map(|k| p(r, grid.node(k))).collect();
            for k in 0..grid.ntheta {
                g1[grid.at(i, k)] = (vals[(k + 1) % grid.ntheta] - vals[k]) / dt;
                g2[grid.at(i, k)] = radial(r, grid.node(k));
            }
        }
        LoopFamily {
            grid,
            gamma1: g1,
            gamma2: g2,
        }
    }

    /// Straight-line family from the round loop of `center` (inner two rings) to
    /// `outer` (outer two rings).
    pub fn straight(grid: PolarGrid, outer: &BoundarySection, center: [f64; 2]) -> Self {
        let (nr, nt) = (grid.nr, grid.ntheta);
        let dt = grid.dtheta();
        let mut g1 = vec![0.0; grid.len()];
        let mut g2 = vec![0.0; grid.len()];
        for i in 0..nr {
            let r = grid.radius(i);
            let w = ((i as f64 - 1.0) / (nr as f64 - 3.0)).clamp(0.0, 1.0);
            for k in 0..nt {
                let (t0, t1) = (grid.node(k), grid.node(k + 1));
                let round1 = r
                    * (center[0] * (t1.cos() - t0.cos()) + center[1] * (t1.sin() - t0.sin()))
                    / dt;
                let round2 = center[0] * t0.cos() + center[1] * t0.sin();
                g1[grid.at(i, k)] = (1.0 - w) * round1 + w * outer.f[k];
                g2[grid.at(i, k)] = (1.0 - w) * round2 + w * outer.g[k];
            }
        }
        LoopFamily {
            grid,
            gamma1: g1,
            gamma2: g2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    /// Angular local maximum.
    Red,
    /// Angular local minimum.
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub ring: usize,
    pub node: usize,
    pub color: Color,
    /// Sign of the radial component at the marker.
    pub sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Connects the two boundary circles.
    Through,
    /// Both ends on the outer circle.
    OuterArc,
    /// Both ends on the inner circle.
    InnerArc,
    Circle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedCurve {
    pub kind: CurveKind,
    pub sign: i8,
    /// Markers in order along the curve.
    pub points: Vec<Marker>,
}

impl SignedCurve {
    /// Colors of the first and last marker.
    pub fn end_colors(&self) -> (Color, Color) {
        (
            self.points[0].color,
            self.points[self.points.len() - 1].color,
        )
    }

    /// Deepest ring the curve reaches.
    pub fn min_ring(&self) -> usize {
        self.points.iter().map(|m| m.ring).min().unwrap_or(0)
    }
}

/// Curves of angular extrema of `phi_j - phi_i` on the annulus, for `pair = (i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedCurveCollection {
    pub grid: PolarGrid,
    pub pair: (usize, usize),
    pub curves: Vec<SignedCurve>,
}

impl SignedCurveCollection {
    pub fn for_pair(mut self, i: usize, j: usize) -> Self {
        if i > j {
            self = self.reversed();
            self.pair = (j, i);
        } else {
            self.pair = (i, j);
        }
        self
    }

    /// The same curves seen from the other strand: colors and signs swap.
    pub fn reversed(&self) -> Self {
        let flip = |c: Color| {
            if c == Color::Red {
                Color::Blue
            } else {
                Color::Red
            }
        };
        let curves = self
            .curves
            .iter()
            .map(|c| SignedCurve {
                kind: c.kind,
                sign: -c.sign,
                points: c
                    .points
                    .iter()
                    .map(|m| Marker {
                        color: flip(m.color),
                        sign: -m.sign,
                        ..*m
                    })
                    .collect(),
            })
            .collect();
        SignedCurveCollection {
            grid: self.grid,
            pair: (self.pair.1, self.pair.0),
            curves,
        }
    }

    /// Markers on ring `i`, sorted by node, with their curve index.
    pub fn ring(&self, i: usize) -> Vec<(Marker, usize)> {
        let mut out: Vec<(Marker, usize)> = self
            .curves
            .iter()
            .enumerate()
            .flat_map(|(c, curve)| {
                curve
                    .points
                    .iter()
                    .filter(move |m| m.ring == i)
                    .map(move |m| (*m, c))
            })
            .collect();
        out.sort_by_key(|(m, _)| m.node);
        out
    }

    pub fn count(&self, kind: CurveKind) -> usize {
        self.curves.iter().filter(|c| c.kind == kind).count()
    }

    /// Exactly two through curves, each with equal end colors.
    pub fn is_valid(&self) -> bool {
        let through: Vec<&SignedCurve> = self
            .curves
            .iter()
            .filter(|c| c.kind == CurveKind::Through)
            .collect();
        through.len() == 2
            && through.iter().all(|c| c.end_colors().0 == c.end_colors().1)
            && self
                .curves
                .iter()
                .all(|c| c.points.iter().all(|m| m.sign == c.sign))
    }
}

fn sign_of(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Markers of a ring: nodes where the cell sign of `cells` changes.
fn ring_markers(cells: &[f64]) -> Vec<(usize, Color)> {
    let n = cells.len();
    (0..n)
        .filter_map(|k| {
            let (a, b) = (sign_of(cells[(k + n - 1) % n]), sign_of(cells[k]));
            match (a, b) {
                (1, -1) => Some((k, Color::Red)),
                (-1, 1) => Some((k, Color::Blue)),
                _ => None,
            }
        })
        .collect()
}

fn circ(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Greedy nearest same-color matching between two marker lists.
fn match_rings(lower: &[Marker], upper: &[Marker], n: usize, jump: usize) -> Vec<(usize, usize)> {
    let mut cand = Vec::new();
    for (a, m) in lower.iter().enumerate() {
        for (b, q) in upper.iter().enumerate() {
            let d = circ(m.node, q.node, n);
            if m.color == q.color && d <= jump {
                cand.push((d, a, b));
            }
        }
    }
    cand.sort();
    let mut used_a = vec![false; lower.len()];
    let mut used_b = vec![false; upper.len()];
    let mut out = Vec::new();
    for (_, a, b) in cand {
        if !used_a[a] && !used_b[b] {
            used_a[a] = true;
            used_b[b] = true;
            out.push((a, b));
        }
    }
    out
}

/// Pairs unmatched red and blue markers on one ring into curve tips.
fn pair_tips(ring: &[Marker], idx: &[usize], n: usize) -> Option<Vec<(usize, usize)>> {
    let mut cand = Vec::new();
    for (x, &a) in idx.iter().enumerate() {
        for &b in &idx[x + 1..] {
            if ring[a].color != ring[b].color {
                cand.push((circ(ring[a].node, ring[b].node, n), a, b));
            }
        }
    }
    cand.sort();
    let mut used = vec![false; ring.len()];
    let mut out = Vec::new();
    for (_, a, b) in cand {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            out.push((a, b));
        }
    }
    if out.len() * 2 == idx.len() {
        Some(out)
    } else {
        None
    }
}

/// Traces the curves of angular crossings of a loop family.
pub fn collection_from_isotopy(gamma: &LoopFamily) -> Result<SignedCurveCollection, LamError> {
    let grid = gamma.grid;
    grid.validate()?;
    let (nr, nt) = (grid.nr, grid.ntheta);
    if gamma.gamma1.len() != grid.len() || gamma.gamma2.len() != grid.len() {
        return Err(LamError::Resolution {
            got: gamma.gamma1.len(),
            want: grid.len(),
        });
    }
    let scale = gamma
        .gamma2
        .iter()
        .chain(&gamma.gamma1)
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1e-300);
    let mut rings: Vec<Vec<Marker>> = Vec::with_capacity(nr);
    for i in 0..nr {
        let cells = &gamma.gamma1[i * nt..(i + 1) * nt];
        // a vanishing cell next to a vanishing radial value puts the loop on the origin
        for k in 0..nt {
            let flat = cells[k].abs() <= 1e-12 * scale;
            let g = |q: usize| gamma.gamma2[grid.at(i, q % nt)].abs() <= 1e-12 * scale;
            if flat && (g(k) || g(k + 1)) {
                return Err(LamError::OriginTouched { ring: i, node: k });
            }
        }
        let mut ms = Vec::new();
        for (node, color) in ring_markers(cells) {
            let g2 = gamma.gamma2[grid.at(i, node)];
            if g2.abs() <= 1e-12 * scale {
                return Err(LamError::OriginTouched { ring: i, node });
            }
            ms.push(Marker {
                ring: i,
                node,
                color,
                sign: sign_of(g2),
            });
        }
        rings.push(ms);
    }
    // global ids and links
    let mut offset = vec![0usize; nr + 1];
    for i in 0..nr {
        offset[i + 1] = offset[i] + rings[i].len();
    }
    let total = offset[nr];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut up = vec![false; total];
    let mut down = vec![false; total];
    let jump = (nt / 32).max(4);
    for i in 0..nr - 1 {
        for (a, b) in match_rings(&rings[i], &rings[i + 1], nt, jump) {
            let (x, y) = (offset[i] + a, offset[i + 1] + b);
            adj[x].push(y);
            adj[y].push(x);
            up[x] = true;
            down[y] = true;
        }
    }
    for i in 0..nr {
        for (flags, boundary) in [(&up, nr - 1), (&down, 0)] {
            if i == boundary {
                continue;
            }
            let open: Vec<usize> = (0..rings[i].len())
                .filter(|&a| !flags[offset[i] + a])
                .collect();
            let pairs = pair_tips(&rings[i], &open, nt).ok_or(LamError::Tracing { ring: i })?;
            for (a, b) in pairs {
                let (x, y) = (offset[i] + a, offset[i] + b);
                adj[x].push(y);
                adj[y].push(x);
            }
        }
    }
    let flat: Vec<Marker> = rings.into_iter().flatten().collect();
    if adj.iter().any(|a| a.len() > 2) {
        let bad = adj.iter().position(|a| a.len() > 2).unwrap();
        return Err(LamError::Tracing {
            ring: flat[bad].ring,
        });
    }
    let mut seen = vec![false; total];
    let mut curves = Vec::new();
    // open curves first, from their lowest-id endpoint
    let starts: Vec<usize> = (0..total)
        .filter(|&x| adj[x].len() < 2)
        .chain(0..total)
        .collect();
    for s in starts {
        if seen[s] {
            continue;
        }
        let mut order = vec![s];
        seen[s] = true;
        let mut cur = s;
        while let Some(&nx) = adj[cur].iter().find(|&&y| !seen[y]) {
            seen[nx] = true;
            order.push(nx);
            cur = nx;
        }
        let pts: Vec<Marker> = order.iter().map(|&x| flat[x]).collect();
        let closed = adj[s].len() == 2;
        let (first, last) = (pts[0].ring, pts[pts.len() - 1].ring);
        let kind = if closed {
            CurveKind::Circle
        } else if first != last {
            CurveKind::Through
        } else if first == nr - 1 {
            CurveKind::OuterArc
        } else {
            CurveKind::InnerArc
        };
        let sign = pts[0].sign;
        if let Some(m) = pts.iter().find(|m| m.sign != sign) {
            return Err(LamError::InconsistentSign {
                curve: curves.len(),
                ring: m.ring,
            });
        }
        // through curves run outward
        let mut pts = pts;
        if kind == CurveKind::Through && first > last {
            pts.reverse();
        }
        curves.push(SignedCurve {
            kind,
            sign,
            points: pts,
        });
    }
    Ok(SignedCurveCollection {
        grid,
        pair: (0, 1),
        curves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Required magnitude of constrained derivatives.
    pub margin: f64,
    /// The solver aims for `slack * margin` and stops once `margin` holds.
    pub slack: f64,
    pub rho: f64,
    pub max_iter: usize,
    /// Relative weight of the radial part of the energy.
    pub radial_weight: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            margin: 1e-4,
            slack: 2.0,
            rho: 1.0,
            max_iter: 20_000,
            radial_weight: 1.0,
        }
    }
}

/// Grid potentials, one per strand, with their inner linear patches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potentials {
    pub grid: PolarGrid,
    pub centers: Vec<[f64; 2]>,
    /// `values[s][i * ntheta + k]`.
    pub values: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl Potentials {
    pub fn value(&self, s: usize, i: usize, k: usize) -> f64 {
        self.values[s][self.grid.at(i, k)]
    }

    /// Value of strand `s` at a point of the disk, linear inside `r0`.
    pub fn inner_value(&self, s: usize, x: f64, y: f64) -> f64 {
        self.centers[s][0] * x + self.centers[s][1] * y
    }

    /// Discrete `(d_r, d_theta / r)` of `phi_s - phi_t` on cell `(i, k)`;
    /// `t = None` means the zero function.
    pub fn gradient(&self, s: usize, t: Option<usize>, i: usize, k: usize) -> (f64, f64) {
        let g = self.grid;
        let d =
            |ii: usize, kk: usize| self.value(s, ii, kk) - t.map_or(0.0, |t| self.value(t, ii, kk));
        let k1 = (k + 1) % g.ntheta;
        let dth = (d(i, k1) - d(i, k)) / g.dtheta() / g.radius(i);
        let dr = if i + 1 < g.nr {
            (d(i + 1, k) - d(i, k)) / g.dr()
        } else {
            (d(i, k) - d(i - 1, k)) / g.dr()
        };
        (dr, dth)
    }

    /// `(1 - t) self + t other`.
    pub fn blend(&self, other: &Potentials, t: f64) -> Potentials {
        let mix = |a: f64, b: f64| (1.0 - t) * a + t * b;
        Potentials {
            grid: self.grid,
            centers: self
                .centers
                .iter()
                .zip(&other.centers)
                .map(|(a, b)| [mix(a[0], b[0]), mix(a[1], b[1])])
                .collect(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| mix(*x, *y)).collect())
                .collect(),
            iterations: 0,
        }
    }
}

/// Weighted discrete gradient and its Dirichlet Laplacian on the free rings.
///
/// Rings `0, 1` (inner patch) and `nr-2, nr-1` (boundary data) are fixed.
struct Operator {
    grid: PolarGrid,
    /// Weight of the angular row on ring `i`.
    alpha: Vec<f64>,
    /// Weight of the radial row between rings `i` and `i + 1`.
    beta: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Operator {
    fn new(grid: PolarGrid, radial_weight: f64) -> Self {
        let (dr, dt) = (grid.dr(), grid.dtheta());
        let alpha = (0..grid.nr)
            .map(|i| (dr / (grid.radius(i) * dt)).sqrt())
            .collect();
        let beta = (0..grid.nr - 1)
            .map(|i| (radial_weight * (grid.radius(i) + 0.5 * dr) * dt / dr).sqrt())
            .collect();
        let mut planner = FftPlanner::new();
        Operator {
            grid,
            alpha,
            beta,
            fwd: planner.plan_fft_forward(grid.ntheta),
            inv: planner.plan_fft_inverse(grid.ntheta),
        }
    }

    fn free(&self) -> std::ops::Range<usize> {
        2..self.grid.nr - 2
    }

    fn n_theta_rows(&self) -> usize {
        (self.grid.nr - 4) * self.grid.ntheta
    }

    fn n_rows(&self) -> usize {
        self.n_theta_rows() + (self.grid.nr - 3) * self.grid.ntheta
    }

    fn theta_row(&self, i: usize, k: usize) -> usize {
        (i - 2) * self.grid.ntheta + k
    }

    fn radial_row(&self, i: usize, k: usize) -> usize {
        self.n_theta_rows() + (i - 1) * self.grid.ntheta + k
    }

    /// Rows of `G phi` for a full ring array.
    fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let nt = g.ntheta;
        let mut out = vec![0.0; self.n_rows()];
        for i in self.free() {
            for k in 0..nt {
                out[self.theta_row(i, k)] =
                    self.alpha[i] * (phi[g.at(i, (k + 1) % nt)] - phi[g.at(i, k)]);
            }
        }
        for i in 1..g.nr - 2 {
            for k in 0..nt {
                out[self.radial_row(i, k)] = self.beta[i] * (phi[g.at(i + 1, k)] - phi[g.at(i, k)]);
            }
        }
        out
    }

    /// `G^T rows`, restricted to the free rings (returned as a full ring array).
    fn adjoint(&self, rows: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let nt = g.ntheta;
        let mut out = vec![0.0; g.len()];
        for i in self.free() {
            for k in 0..nt {
                let v = self.alpha[i] * rows[self.theta_row(i, k)];
                out[g.at(i, (k + 1) % nt)] += v;
                out[g.at(i, k)] -= v;
            }
        }
        for i in 1..g.nr - 2 {
            for k in 0..nt {
                let v = self.beta[i] * rows[self.radial_row(i, k)];
                out[g.at(i + 1, k)] += v;
                out[g.at(i, k)] -= v;
            }
        }
        for i in (0..2).chain(g.nr - 2..g.nr) {
            for k in 0..nt {
                out[g.at(i, k)] = 0.0;
            }
        }
        out
    }

    /// Solves `G_f^T G_f x = rhs` on the free rings; fixed rings of the result are zero.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let nt = g.ntheta;
        let free: Vec<usize> = self.free().collect();
        let mut spec: Vec<Vec<Complex64>> = free
            .iter()
            .map(|&i| {
                let mut buf: Vec<Complex64> = (0..nt)
                    .map(|k| Complex64::new(rhs[g.at(i, k)], 0.0))
                    .collect();
                self.fwd.process(&mut buf);
                buf
            })
            .collect();
        let m = free.len();
        let mut c = vec![0.0; m];
        let mut d = vec![Complex64::new(0.0, 0.0); m];
        for mode in 0..nt {
            let lam = 2.0 - 2.0 * (2.0 * PI * mode as f64 / nt as f64).cos();
            // Thomas algorithm; sub- and super-diagonals are -beta^2
            let mut prev_c = 0.0;
            let mut prev_d = Complex64::new(0.0, 0.0);
            for (j, &i) in free.iter().enumerate() {
                let b2lo = self.beta[i - 1].powi(2);
                let b2hi = self.beta[i].powi(2);
                let diag = self.alpha[i].powi(2) * lam + b2lo + b2hi;
                let lower = if j == 0 { 0.0 } else { -b2lo };
                let upper = if j + 1 == m { 0.0 } else { -b2hi };
                let den = diag - lower * prev_c;
                c[j] = upper / den;
                d[j] = (spec[j][mode] - prev_d * lower) / den;
                prev_c = c[j];
                prev_d = d[j];
            }
            for j in (0..m).rev() {
                let next = if j + 1 < m {
                    spec[j + 1][mode]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                spec[j][mode] = d[j] - next * c[j];
            }
        }
        let mut out = vec![0.0; g.len()];
        for (j, &i) in free.iter().enumerate() {
            self.inv.process(&mut spec[j]);
            for k in 0..nt {
                out[g.at(i, k)] = spec[j][k].re / nt as f64;
            }
        }
        out
    }
}

fn affine_values(grid: &PolarGrid, c: [f64; 2]) -> Vec<f64> {
    let mut v = vec![0.0; grid.len()];
    for i in 0..grid.nr {
        let r = grid.radius(i);
        for k in 0..grid.ntheta {
            let t = grid.node(k);
            v[grid.at(i, k)] = r * (c[0] * t.cos() + c[1] * t.sin());
        }
    }
    v
}

/// Fixed rings of one strand: linear patch inside, boundary data outside.
fn fixed_values(grid: &PolarGrid, s: &Strand) -> Vec<f64> {
    let (nr, nt) = (grid.nr, grid.ntheta);
    let mut v = affine_values(grid, s.center);
    let dt = grid.dtheta();
    let mut outer = vec![0.0; nt];
    for k in 1..nt {
        outer[k] = outer[k - 1] + s.boundary.f[k - 1] * dt;
    }
    // normalize against the linear part
    let shift = (0..nt)
        .map(|k| outer[k] - v[grid.at(nr - 1, k)])
        .sum::<f64>()
        / nt as f64;
    for k in 0..nt {
        v[grid.at(nr - 1, k)] = outer[k] - shift;
        v[grid.at(nr - 2, k)] = outer[k] - shift - grid.dr() * s.boundary.g[k];
    }
    v
}

/// A row constraint `sign * row >= bound`.
#[derive(Debug, Clone, Copy)]
struct Bound {
    row: usize,
    sign: f64,
    /// Required value of `sign * row` at margin one.
    unit: f64,
    ring: usize,
    node: usize,
    curve: Option<usize>,
}

fn cell_signs(markers: &[(Marker, usize)], nt: usize) -> Option<Vec<f64>> {
    if markers.len() < 2 {
        return None;
    }
    for w in 0..markers.len() {
        let (a, b) = (markers[w].0, markers[(w + 1) % markers.len()].0);
        if a.color == b.color || a.node == b.node {
            return None;
        }
    }
    let mut signs = vec![0.0; nt];
    let last = markers[markers.len() - 1].0;
    let mut cur = if last.color == Color::Red { -1.0 } else { 1.0 };
    let mut next = 0;
    for (k, s) in signs.iter_mut().enumerate() {
        while next < markers.len() && markers[next].0.node == k {
            cur = if markers[next].0.color == Color::Red {
                -1.0
            } else {
                1.0
            };
            next += 1;
        }
        *s = cur;
    }
    Some(signs)
}

fn pair_bounds(op: &Operator, c: &SignedCurveCollection) -> Result<Vec<Bound>, LamError> {
    let g = op.grid;
    let (dr, dt) = (g.dr(), g.dtheta());
    let mut out = Vec::new();
    for i in 0..g.nr {
        let ms = c.ring(i);
        if op.free().contains(&i) {
            let signs = cell_signs(&ms, g.ntheta).ok_or(LamError::Inconsistent {
                i: c.pair.0,
                j: c.pair.1,
                ring: i,
            })?;
            for (k, s) in signs.into_iter().enumerate() {
                out.push(Bound {
                    row: op.theta_row(i, k),
                    sign: s,
                    unit: op.alpha[i] * dt,
                    ring: i,
                    node: k,
                    curve: None,
                });
            }
        }
        if (1..g.nr - 2).contains(&i) {
            for (m, curve) in ms {
                out.push(Bound {
                    row: op.radial_row(i, m.node),
                    sign: m.sign as f64,
                    unit: op.beta[i] * dr,
                    ring: i,
                    node: m.node,
                    curve: Some(curve),
                });
            }
        }
    }
    Ok(out)
}

/// Sign-change structure of a difference ring: `(node, color)` sorted.
fn difference_markers(a: &[f64], b: &[f64]) -> Vec<(usize, Color)> {
    let n = a.len();
    let cells: Vec<f64> = (0..n)
        .map(|k| (a[(k + 1) % n] - b[(k + 1) % n]) - (a[k] - b[k]))
        .collect();
    ring_markers(&cells)
}

fn collection_markers(c: &SignedCurveCollection, i: usize) -> Vec<(usize, Color)> {
    c.ring(i)
        .into_iter()
        .map(|(m, _)| (m.node, m.color))
        .collect()
}

/// Builds the constrained least-squares potentials.
pub fn solve_potentials(
    strands: &[Strand],
    collections: &[SignedCurveCollection],
    grid: &PolarGrid,
    opts: &SolveOptions,
) -> Result<Potentials, LamError> {
    grid.validate()?;
    let g = *grid;
    let (nr, nt) = (g.nr, g.ntheta);
    let n = strands.len();
    if n == 0 {
        return Err(LamError::NoStrands);
    }
    for s in strands {
        s.boundary.check()?;
        if s.boundary.resolution() != nt {
            return Err(LamError::Resolution {
                got: s.boundary.resolution(),
                want: nt,
            });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&strands[i].boundary, &strands[j].boundary);
            if let Some(k) = (0..nt).find(|&k| a.f[k] == b.f[k] && a.g[k] == b.g[k]) {
                return Err(LamError::NotDisjoint { i, j, k });
            }
        }
    }
    // one collection per pair, oriented i < j
    let mut pairs: Vec<SignedCurveCollection> = Vec::new();
    for c in collections {
        if c.grid != g {
            return Err(LamError::GridMismatch);
        }
        let (i, j) = c.pair;
        if i >= n || j >= n || i == j {
            return Err(LamError::BadPair(i, j));
        }
        pairs.push(c.clone().for_pair(i, j));
    }
    pairs.sort_by_key(|c| c.pair);
    for i in 0..n {
        for j in i + 1..n {
            if !pairs.iter().any(|c| c.pair == (i, j)) {
                return Err(LamError::MissingCollection(i, j));
            }
        }
    }
    let op = Operator::new(g, opts.radial_weight);
    let fixed: Vec<Vec<f64>> = strands.iter().map(|s| fixed_values(&g, s)).collect();
    let affine: Vec<Vec<f64>> = strands
        .iter()
        .map(|s| affine_values(&g, s.center))
        .collect();
    // the collection must agree with the fixed data on the innermost and outermost ring
    for c in &pairs {
        let (i, j) = c.pair;
        for ring in [0, nr - 1] {
            let row = |v: &Vec<f64>| v[ring * nt..(ring + 1) * nt].to_vec();
            let data = difference_markers(&row(&fixed[j]), &row(&fixed[i]));
            if data != collection_markers(c, ring) {
                return Err(LamError::Inconsistent { i, j, ring });
            }
        }
    }
    // unknowns are deviations from the linear patches
    let psi_fixed: Vec<Vec<f64>> = fixed
        .iter()
        .zip(&affine)
        .map(|(f, a)| {
            let mut v: Vec<f64> = f.iter().zip(a).map(|(x, y)| x - y).collect();
            for i in op.free() {
                for k in 0..nt {
                    v[g.at(i, k)] = 0.0;
                }
            }
            v
        })
        .collect();
    let b: Vec<Vec<f64>> = psi_fixed.iter().map(|v| op.apply(v)).collect();
    let harmonic = |rows: &[f64]| -> Vec<f64> {
        let neg: Vec<f64> = rows.iter().map(|x| -x).collect();
        op.solve(&op.adjoint(&neg))
    };
    let assemble = |x: &[f64], s: usize| -> Vec<f64> {
        x.iter().zip(&psi_fixed[s]).map(|(a, c)| a + c).collect()
    };
    let mut psi: Vec<Vec<f64>> = (0..n).map(|s| assemble(&harmonic(&b[s]), s)).collect();
    let mut iterations = 0;
    if n > 1 {
        let bounds: Vec<Vec<Bound>> = pairs
            .iter()
            .map(|c| pair_bounds(&op, c))
            .collect::<Result<_, _>>()?;
        let shift: Vec<Vec<f64>> = pairs
            .iter()
            .map(|c| {
                let d: Vec<f64> = affine[c.pair.1]
                    .iter()
                    .zip(&affine[c.pair.0])
                    .map(|(x, y)| x - y)
                    .collect();
                op.apply(&d)
            })
            .collect();
        let target = opts.margin * opts.slack;
        let project = |w: &mut [f64], p: usize| {
            for bd in &bounds[p] {
                let v = w[bd.row] + shift[p][bd.row];
                let need = target * bd.unit;
                if bd.sign * v < need {
                    w[bd.row] = bd.sign * need - shift[p][bd.row];
                }
            }
        };
        let diff_rows = |psi: &[Vec<f64>], p: usize| -> Vec<f64> {
            let (i, j) = pairs[p].pair;
            let d: Vec<f64> = psi[j].iter().zip(&psi[i]).map(|(x, y)| x - y).collect();
            op.apply(&d)
        };
        let worst = |psi: &[Vec<f64>]| -> Option<(f64, usize, Bound)> {
            let mut out: Option<(f64, usize, Bound)> = None;
            for p in 0..pairs.len() {
                let w = diff_rows(psi, p);
                for bd in &bounds[p] {
                    let gap = bd.sign * (w[bd.row] + shift[p][bd.row]) / bd.unit - opts.margin;
                    if gap < 0.0 && out.as_ref().is_none_or(|o| gap < o.0) {
                        out = Some((gap, p, *bd));
                    }
                }
            }
            out
        };
        let mut z: Vec<Vec<f64>> = (0..pairs.len())
            .map(|p| {
                let mut w = diff_rows(&psi, p);
                project(&mut w, p);
                w
            })
            .collect();
        let rows = op.n_rows();
        let mut u: Vec<Vec<f64>> = vec![vec![0.0; rows]; pairs.len()];
        let mut rho = opts.rho;
        let mut last = worst(&psi);
        while last.is_some() && iterations < opts.max_iter {
            iterations += 1;
            let scale = rho / (1.0 + rho * n as f64);
            let mut cs: Vec<Vec<f64>> = vec![vec![0.0; rows]; n];
            for (p, c) in pairs.iter().enumerate() {
                let (i, j) = c.pair;
                for r in 0..rows {
                    let v = z[p][r] - u[p][r];
                    cs[j][r] += v;
                    cs[i][r] -= v;
                }
            }
            for s in 0..n {
                let rhs: Vec<f64> = b[s]
                    .iter()
                    .zip(&cs[s])
                    .map(|(bb, cc)| -bb + scale * cc)
                    .collect();
                psi[s] = assemble(&op.solve(&op.adjoint(&rhs)), s);
            }
            let (mut primal, mut dual) = (0.0f64, 0.0f64);
            for p in 0..pairs.len() {
                let w = diff_rows(&psi, p);
                let mut zn: Vec<f64> = w.iter().zip(&u[p]).map(|(a, b)| a + b).collect();
                project(&mut zn, p);
                for r in 0..rows {
                    let res = w[r] - zn[r];
                    u[p][r] += res;
                    primal += res * res;
                    dual += (zn[r] - z[p][r]).powi(2);
                }
                z[p] = zn;
            }
            let dual = rho * dual.sqrt();
            let primal = primal.sqrt();
            if primal > 10.0 * dual {
                rho *= 2.0;
                u.iter_mut().flatten().for_each(|x| *x /= 2.0);
            } else if dual > 10.0 * primal {
                rho /= 2.0;
                u.iter_mut().flatten().for_each(|x| *x *= 2.0);
            }
            if iterations % 10 == 0 {
                last = worst(&psi);
            }
        }
        if let Some((gap, p, bd)) = worst(&psi) {
            let (i, j) = pairs[p].pair;
            let what = match bd.curve {
                Some(c) => format!("radial sign of curve {c}"),
                None => "angular sign".to_string(),
            };
            return Err(LamError::Infeasible {
                iterations,
                constraint: format!(
                    "{what} for strands ({i}, {j}) at ring {}, node {} misses the margin by {:e}",
                    bd.ring, bd.node, -gap
                ),
            });
        }
    }
    let values = psi
        .iter()
        .zip(&affine)
        .map(|(p, a)| p.iter().zip(a).map(|(x, y)| x + y).collect())
        .collect();
    Ok(Potentials {
        grid: g,
        centers: strands.iter().map(|s| s.center).collect(),
        values,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Largest mismatch of the discrete boundary differential with the data.
    pub boundary_error: f64,
    /// Largest deviation from the linear patch on the two inner rings.
    pub inner_error: f64,
    /// Smallest `|d(phi_i - phi_j)|` over all pairs and cells; infinite for one strand.
    pub min_gradient: f64,
    /// Rings whose angular extrema differ from the collection's markers.
    pub sign_mismatches: usize,
    /// Markers where the radial difference has the wrong sign.
    pub radial_mismatches: usize,
    pub single_valued: bool,
}

impl SolveReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.boundary_error <= tol
            && self.inner_error <= tol
            && self.min_gradient > 0.0
            && self.sign_mismatches == 0
            && self.radial_mismatches == 0
            && self.single_valued
    }
}

fn near(a: &[(usize, Color)], b: &[(usize, Color)], n: usize, tol: usize) -> bool {
    a.len() == b.len()
        && a.iter()
            .all(|(k, c)| b.iter().any(|(q, d)| c == d && circ(*k, *q, n) <= tol))
}

/// Checks the post-conditions of a solve.
pub fn verify(
    p: &Potentials,
    strands: &[Strand],
    collections: &[SignedCurveCollection],
) -> SolveReport {
    let g = p.grid;
    let (nr, nt) = (g.nr, g.ntheta);
    let (dr, dt) = (g.dr(), g.dtheta());
    let mut boundary_error = 0.0f64;
    let mut inner_error = 0.0f64;
    for (s, st) in strands.iter().enumerate() {
        for k in 0..nt {
            let k1 = (k + 1) % nt;
            let dth = (p.value(s, nr - 1, k1) - p.value(s, nr - 1, k)) / dt;
            let drr = (p.value(s, nr - 1, k) - p.value(s, nr - 2, k)) / dr;
            boundary_error = boundary_error
                .max((dth - st.boundary.f[k]).abs())
                .max((drr - st.boundary.g[k]).abs());
            for i in 0..2 {
                let (r, t) = (g.radius(i), g.node(k));
                let lin = p.inner_value(s, r * t.cos(), r * t.sin());
                inner_error = inner_error.max((p.value(s, i, k) - lin).abs());
            }
        }
    }
    let single_valued = p.values.iter().flatten().all(|x| x.is_finite())
        && p.values.iter().all(|v| v.len() == g.len());
    let mut min_gradient = f64::INFINITY;
    let mut sign_mismatches = 0;
    let mut radial_mismatches = 0;
    for c in collections {
        let c = c.clone().for_pair(c.pair.0, c.pair.1);
        let (i, j) = c.pair;
        if i >= strands.len() || j >= strands.len() || c.grid != g {
            sign_mismatches += 1;
            continue;
        }
        for ring in 0..nr {
            for k in 0..nt {
                let (a, b) = p.gradient(j, Some(i), ring, k);
                min_gradient = min_gradient.min(a.hypot(b));
            }
            let row = |s: usize| p.values[s][ring * nt..(ring + 1) * nt].to_vec();
            let actual = difference_markers(&row(j), &row(i));
            let want = collection_markers(&c, ring);
            let tol = if ring == 1 || ring == nr - 2 { 1 } else { 0 };
            if !near(&actual, &want, nt, tol) {
                sign_mismatches += 1;
            }
            for (m, _) in c.ring(ring) {
                let (d, _) = p.gradient(j, Some(i), ring, m.node);
                if sign_of(d) != m.sign || d == 0.0 {
                    radial_mismatches += 1;
                }
            }
        }
    }
    SolveReport {
        boundary_error,
        inner_error,
        min_gradient,
        sign_mismatches,
        radial_mismatches,
        single_valued,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyReport {
    pub samples: Vec<(f64, SolveReport)>,
    pub feasible: bool,
}

/// Checks `eta_t = (1 - t) phi + t zeta` at `samples` evenly spaced times.
pub fn linear_homotopy(
    phi: &Potentials,
    zeta: &Potentials,
    strands: &[Strand],
    collections: &[SignedCurveCollection],
    samples: usize,
    tol: f64,
) -> HomotopyReport {
    let samples: Vec<(f64, SolveReport)> = (0..samples)
        .map(|s| {
            let t = if samples > 1 {
                s as f64 / (samples - 1) as f64
            } else {
                0.0
            };
            (t, verify(&phi.blend(zeta, t), strands, collections))
        })
        .collect();
    let feasible = samples.iter().all(|(_, r)| r.ok(tol));
    HomotopyReport { samples, feasible }
}

/// A finger move of the angular component near `theta`, appearing outside `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerMove {
    pub theta: f64,
    /// Normalised radius `(r - r0) / (1 - r0)` below which the move is absent.
    pub threshold: f64,
    pub height: f64,
    pub width: f64,
}

fn ramp(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Loop family of `p = A y + sum h_i(r) bump_i(theta)` with radial part `A sin theta`,
/// together with the two strands it connects: the zero section and `d p` at `r = 1`.
pub fn finger_move_family(
    grid: PolarGrid,
    amplitude: f64,
    moves: &[FingerMove],
) -> (LoopFamily, Vec<Strand>) {
    let r0 = grid.r0;
    let moves = moves.to_vec();
    let pot = move |r: f64, t: f64| -> f64 {
        let s = (r - r0) / (1.0 - r0);
        let mut v = amplitude * r * t.sin();
        for m in &moves {
            let h = m.height * ramp((s - m.threshold) / (1.0 - m.threshold));
            v += h * (((t - m.theta).cos() - 1.0) / m.width.powi(2)).exp();
        }
        v
    };
    let radial = move |_r: f64, t: f64| amplitude * t.sin();
    let family = LoopFamily::from_potential(grid, &pot, radial);
    let nt = grid.ntheta;
    let outer: Vec<f64> = (0..nt).map(|k| pot(1.0, grid.node(k))).collect();
    let g: Vec<f64> = (0..nt).map(|k| radial(1.0, grid.node(k))).collect();
    let l1 = BoundarySection::from_potential(&outer, g).expect("closed by construction");
    let strands = vec![
        Strand {
            boundary: BoundarySection::zero(nt),
            center: [0.0, 0.0],
        },
        Strand {
            boundary: l1,
            center: [0.0, amplitude],
        },
    ];
    (family, strands)
}

/// One strand of a nesting tower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerStrand {
    pub id: String,
    /// Index into the previous level.
    pub parent: Option<usize>,
    pub boundary: BoundarySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestOptions {
    /// Contraction `r`: depth-`m` tubes have radius `2 r^m`.
    pub contraction: f64,
    pub grid: PolarGrid,
}

impl Default for NestOptions {
    fn default() -> Self {
        NestOptions {
            contraction: 0.125,
            grid: PolarGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyEntry {
    pub strand: String,
    pub m: usize,
    pub n: usize,
    pub distance: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestReport {
    pub depth: usize,
    pub solves: usize,
    /// Per depth, the largest child-to-parent distance and its allowance.
    pub links: Vec<(usize, f64, f64)>,
    pub entries: Vec<CauchyEntry>,
    pub passes: bool,
}

/// Sup distance between the differentials of two one-strand solutions.
fn gradient_distance(a: &Potentials, b: &Potentials) -> f64 {
    let g = a.grid;
    let mut d = (a.centers[0][0] - b.centers[0][0]).hypot(a.centers[0][1] - b.centers[0][1]);
    for i in 0..g.nr {
        for k in 0..g.ntheta {
            let (x, y) = a.gradient(0, None, i, k);
            let (u, v) = b.gradient(0, None, i, k);
            d = d.max((x - u).hypot(y - v));
        }
    }
    d
}

/// Solves every strand of the tower and checks tube nesting and the Cauchy bounds.
///
/// `levels[m - 1]` holds the depth-`m` strands. A child at depth `m + 1` must sit in
/// its parent's tube with its own tube inside: `d + 2 r^(m+1) <= 2 r^m`. Along every
/// lineage the report checks `d(m, n) <= 4 r^min(m, n)`.
pub fn nest_disks(
    levels: &[Vec<TowerStrand>],
    depth: usize,
    opts: &NestOptions,
) -> Result<NestReport, LamError> {
    let r = opts.contraction;
    if !(r > 0.0 && r <= 0.5) {
        return Err(LamError::BadContraction(r));
    }
    let depth = depth.min(levels.len());
    let mut sols: Vec<Vec<Potentials>> = Vec::with_capacity(depth);
    let mut links = Vec::new();
    let mut solves = 0;
    for m in 1..=depth {
        let mut level = Vec::with_capacity(levels[m - 1].len());
        let mut worst = (0.0f64, 0.0f64);
        for (s, st) in levels[m - 1].iter().enumerate() {
            let p = solve_potentials(
                &[Strand::fitted(st.boundary.clone())],
                &[],
                &opts.grid,
                &SolveOptions::default(),
            )?;
            solves += 1;
            if m > 1 {
                let parent =
                    st.parent
                        .filter(|&q| q < sols[m - 2].len())
                        .ok_or(LamError::BadParent {
                            depth: m,
                            strand: s,
                        })?;
                let d = gradient_distance(&p, &sols[m - 2][parent]);
                let allowed = 2.0 * r.powi(m as i32 - 1) - 2.0 * r.powi(m as i32);
                if d > allowed {
                    return Err(LamError::Containment {
                        depth: m,
                        strand: s,
                        distance: d,
                        allowed,
                    });
                }
                if d > worst.0 {
                    worst = (d, allowed);
                }
            }
            level.push(p);
        }
        if m > 1 {
            links.push((
                m,
                worst.0,
                2.0 * r.powi(m as i32 - 1) - 2.0 * r.powi(m as i32),
            ));
        }
        sols.push(level);
    }
    let mut entries = Vec::new();
    if depth > 0 {
        for (s, st) in levels[depth - 1].iter().enumerate() {
            // lineage from the deepest level back to depth one
            let mut chain = vec![(depth, s)];
            let mut cur = st.parent;
            for m in (1..depth).rev() {
                let q = cur.ok_or(LamError::BadParent {
                    depth: m + 1,
                    strand: chain[chain.len() - 1].1,
                })?;
                chain.push((m, q));
                cur = levels[m - 1][q].parent;
            }
            for x in 0..chain.len() {
                for y in x + 1..chain.len() {
                    let ((n, a), (m, b)) = (chain[x], chain[y]);
                    let distance = gradient_distance(&sols[n - 1][a], &sols[m - 1][b]);
                    entries.push(CauchyEntry {
                        strand: st.id.clone(),
                        m,
                        n,
                        distance,
                        bound: 4.0 * r.powi(m.min(n) as i32),
                    });
                }
            }
        }
    }
    let passes = entries.iter().all(|e| e.distance <= e.bound);
    Ok(NestReport {
        depth,
        solves,
        links,
        entries,
        passes,
    })
}

/// Boundary section of the fiber loop `theta -> strand(theta, 0)` of a census node.
///
/// The fiber coordinates are read as a Cartesian covector at the boundary point;
/// the angular flux, if any, is dropped.
pub fn census_section(
    psi: &TransferMatrix,
    census: &StrandCensus,
    node: usize,
    k: usize,
) -> BoundarySection {
    let atoms: Vec<&crate::transfer::MapAtom> = census
        .terms_of(node)
        .iter()
        .flat_map(|&t| psi.terms[t as usize].atoms.iter())
        .collect();
    let shifts = atoms
        .iter()
        .filter(|a| a.angle_shift == AngleShift::Pi)
        .count() as f64;
    let eval = |theta: f64| -> (f64, f64) {
        let mut p = (theta - shifts * PI, 0.0, 0.0);
        for a in atoms.iter().rev() {
            p = a.apply(p.0, p.1, p.2);
        }
        (p.1, p.2)
    };
    let dt = 2.0 * PI / k as f64;
    let f = (0..k)
        .map(|j| {
            let t = (j as f64 + 0.5) * dt;
            let (x, y) = eval(t);
            -x * t.sin() + y * t.cos()
        })
        .collect();
    let g = (0..k)
        .map(|j| {
            let t = j as f64 * dt;
            let (x, y) = eval(t);
            x * t.cos() + y * t.sin()
        })
        .collect();
    BoundarySection::exact_part(f, g).expect("equal lengths").0
}

/// Tower of census strands into `head`, depths `1..=depth`, as `nest_disks` input.
pub fn census_tower(
    psi: &TransferMatrix,
    census: &StrandCensus,
    head: usize,
    depth: usize,
    k: usize,
) -> Vec<Vec<TowerStrand>> {
    let depth = depth.min(census.depth);
    let mut levels: Vec<Vec<TowerStrand>> = Vec::with_capacity(depth);
    let mut index_prev: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for m in 1..=depth {
        let mut level = Vec::new();
        let mut index = std::collections::HashMap::new();
        for node in census.level(m) {
            if census.head[node] as usize != head {
                continue;
            }
            let parent = if m == 1 {
                None
            } else {
                index_prev.get(&(census.parent[node] as usize)).copied()
            };
            index.insert(node, level.len());
            level.push(TowerStrand {
                id: census.strand_id(node),
                parent,
                boundary: census_section(psi, census, node, k),
            });
        }
        index_prev = index;
        levels.push(level);
    }
    levels
}
