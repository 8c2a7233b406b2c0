//! Dimension one: curves on the plumbing surface, train-track weights, stretch factors
//! and the crossing count between tracks of opposite families.
//!
//! The surface deformation retracts onto the union of its core circles, a 4-valent
//! ribbon graph whose vertices are the plumbing points. Curves are cyclically reduced
//! dart walks on it, which makes them canonical up to free homotopy.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plumbing::{Gluing, PlumbingGraph, Sign};
use crate::twistsys::{
    apply_f, invariant_track, penner_orientation, sign_consistent, DiskChoice, Orientation,
    TwistError, TwistFactor, TwistWord,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("surface operations need a dimension-one graph, got n = {0}")]
    NotSurface(u32),
    #[error("unknown sphere {0}")]
    UnknownSphere(String),
    #[error("curve is not carried: turn {turn} at point {point}")]
    NotCarried { point: String, turn: String },
    #[error("twist along {sphere} with exponent {exponent} has the wrong handedness for the {orientation:?} family")]
    SignMismatch {
        sphere: String,
        exponent: i32,
        orientation: Orientation,
    },
    #[error("word is not of generalized Penner type")]
    NotPenner,
    #[error("word is not sign-consistent with the {0:?} family")]
    WrongFamily(Orientation),
    #[error("crossing table needs one standard and one opposite track")]
    OrientationMismatch,
    #[error("leading eigenvector is ambiguous; recurrent classes {0:?}")]
    Ambiguous(Vec<Vec<String>>),
    #[error("weight vector has {got} coordinates, expected {expected}")]
    Size { expected: usize, got: usize },
    #[error(transparent)]
    Twist(#[from] TwistError),
}

/// Half-edge `k` (0..4, counterclockwise) at a plumbing point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfEdge {
    pub point: u32,
    pub k: u8,
}

impl HalfEdge {
    fn rot(self, d: i32) -> HalfEdge {
        HalfEdge {
            point: self.point,
            k: ((self.k as i32 + d).rem_euclid(4)) as u8,
        }
    }

    /// Counterclockwise position of `self` seen from `from` at the same vertex.
    fn ccw_from(self, from: HalfEdge) -> u8 {
        (self.k + 4 - from.k) % 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub sphere: usize,
    pub tail: HalfEdge,
    pub head: HalfEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dart {
    pub edge: u32,
    pub forward: bool,
}

impl Dart {
    pub fn reverse(self) -> Dart {
        Dart {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

/// The ribbon graph of a dimension-one plumbing.
#[derive(Debug, Clone)]
pub struct Ribbon {
    pub graph: PlumbingGraph,
    pub edges: Vec<Edge>,
    /// Edges of each circle in cyclic order.
    pub circle_edges: Vec<Vec<u32>>,
    /// Per point, which sphere and direction each half-edge follows: `(sphere, plus)`.
    pub half_edges: Vec<[(usize, bool); 4]>,
    /// `(edge, is_tail)` for each half-edge.
    edge_of: Vec<[(u32, bool); 4]>,
}

impl Ribbon {
    pub fn new(graph: &PlumbingGraph) -> Result<Self, SurfaceError> {
        if graph.n != 1 {
            return Err(SurfaceError::NotSurface(graph.n));
        }
        let n = graph.points.len();
        let mut half_edges = Vec::with_capacity(n);
        for (p, pt) in graph.points.iter().enumerate() {
            let (a, b) = (graph.alpha_of(p), graph.beta_of(p));
            half_edges.push(match pt.gluing {
                Gluing::F => [(a, true), (b, true), (a, false), (b, false)],
                Gluing::G => [(a, true), (b, false), (a, false), (b, true)],
            });
        }
        let find = |p: usize, s: usize, plus: bool| -> u8 {
            half_edges[p]
                .iter()
                .position(|&h| h == (s, plus))
                .expect("point lies on sphere") as u8
        };
        let mut edges = Vec::new();
        let mut circle_edges = vec![Vec::new(); graph.spheres.len()];
        let mut edge_of = vec![[(u32::MAX, false); 4]; n];
        for s in 0..graph.spheres.len() {
            let order = graph.cyclic_order(s);
            for i in 0..order.len() {
                let (p, q) = (order[i], order[(i + 1) % order.len()]);
                let tail = HalfEdge {
                    point: p as u32,
                    k: find(p, s, true),
                };
                let head = HalfEdge {
                    point: q as u32,
                    k: find(q, s, false),
                };
                let e = edges.len() as u32;
                edge_of[p][tail.k as usize] = (e, true);
                edge_of[q][head.k as usize] = (e, false);
                edges.push(Edge {
                    sphere: s,
                    tail,
                    head,
                });
                circle_edges[s].push(e);
            }
        }
        Ok(Ribbon {
            graph: graph.clone(),
            edges,
            circle_edges,
            half_edges,
            edge_of,
        })
    }

    pub fn tail(&self, d: Dart) -> HalfEdge {
        let e = &self.edges[d.edge as usize];
        if d.forward {
            e.tail
        } else {
            e.head
        }
    }

    pub fn head(&self, d: Dart) -> HalfEdge {
        let e = &self.edges[d.edge as usize];
        if d.forward {
            e.head
        } else {
            e.tail
        }
    }

    /// The dart leaving through half-edge `h`.
    pub fn dart_from(&self, h: HalfEdge) -> Dart {
        let (edge, is_tail) = self.edge_of[h.point as usize][h.k as usize];
        Dart {
            edge,
            forward: is_tail,
        }
    }

    fn plus_half_edge(&self, p: usize, s: usize) -> HalfEdge {
        let k = self.half_edges[p]
            .iter()
            .position(|&h| h == (s, true))
            .expect("point lies on sphere");
        HalfEdge {
            point: p as u32,
            k: k as u8,
        }
    }

    /// The half-edge leaving `p` on the left of circle `s` in its forward direction.
    pub fn left_of(&self, p: usize, s: usize) -> HalfEdge {
        self.plus_half_edge(p, s).rot(1)
    }

    pub fn core(&self, s: usize) -> Curve {
        Curve {
            darts: self.circle_edges[s]
                .iter()
                .map(|&e| Dart {
                    edge: e,
                    forward: true,
                })
                .collect(),
        }
    }

    /// Full loop around circle `s` starting and ending at `p`, leaving through `start`.
    fn loop_from(&self, s: usize, start: HalfEdge) -> Vec<Dart> {
        let k = self.circle_edges[s].len();
        let mut out = Vec::with_capacity(k);
        let mut d = self.dart_from(start);
        for _ in 0..k {
            out.push(d);
            let h = self.head(d);
            d = self.dart_from(h.rot(2));
        }
        out
    }

    /// Applies the unit twist along `s`; right-handed when `right`.
    pub fn twist_unit(&self, c: &Curve, s: usize, right: bool) -> Curve {
        let a = c.darts.len();
        let on_s = |d: Dart| self.edges[d.edge as usize].sphere == s;
        if a == 0 || c.darts.iter().all(|&d| on_s(d)) {
            return c.clone();
        }
        let pts_on: Vec<bool> = (0..self.graph.points.len())
            .map(|p| self.graph.point_on_sphere(p, s))
            .collect();
        // inserts[i] = loop placed right after dart i
        let mut inserts: Vec<Option<Vec<Dart>>> = vec![None; a];
        for i in 0..a {
            let d = c.darts[i];
            let h_in = self.head(d);
            let v = h_in.point as usize;
            if on_s(d) || !pts_on[v] {
                continue;
            }
            // run of darts along s after position i
            let mut len = 0;
            while on_s(c.darts[(i + 1 + len) % a]) {
                len += 1;
            }
            let h_out = self.tail(c.darts[(i + 1 + len) % a]);
            let exit_vertex = h_out.point as usize;
            let entry_left = h_in == self.left_of(v, s);
            let exit_left = h_out == self.left_of(exit_vertex, s);
            if entry_left == exit_left {
                continue;
            }
            let turn = if right { h_in.rot(1) } else { h_in.rot(-1) };
            inserts[i] = Some(self.loop_from(s, turn));
        }
        let mut darts = Vec::with_capacity(a);
        for i in 0..a {
            darts.push(c.darts[i]);
            if let Some(l) = &inserts[i] {
                darts.extend_from_slice(l);
            }
        }
        Curve::reduced(darts)
    }

    pub fn twist(&self, c: &Curve, f: TwistFactor) -> Curve {
        let mut out = c.clone();
        for _ in 0..f.exponent.unsigned_abs() {
            out = self.twist_unit(&out, f.sphere, f.exponent > 0);
        }
        out
    }

    /// Image of `c` under the word, rightmost factor first.
    pub fn apply_word(&self, w: &TwistWord, c: &Curve) -> Curve {
        let mut out = c.clone();
        for f in w.factors.iter().rev() {
            out = self.twist(&out, *f);
        }
        out
    }

    /// Minimal geometric intersection number of two primitive curves.
    pub fn intersection(&self, x: &Curve, y: &Curve) -> u64 {
        if x.darts.is_empty() || y.darts.is_empty() {
            return 0;
        }
        self.crossings(x, y, true) + self.crossings(x, &y.reversed(), false)
    }

    fn crossings(&self, x: &Curve, y: &Curve, with_vertices: bool) -> u64 {
        let (a, b) = (x.darts.len(), y.darts.len());
        let (xd, yd) = (&x.darts, &y.darts);
        let cap = a * b + 1;
        let mut count = 0;
        for i in 0..a {
            let x_in = self.head(xd[i]);
            let x_out = self.tail(xd[(i + 1) % a]);
            for j in 0..b {
                if xd[i] == yd[j] {
                    continue;
                }
                let y_in = self.head(yd[j]);
                if y_in.point != x_in.point {
                    continue;
                }
                let y_out = self.tail(yd[(j + 1) % b]);
                if x_out == y_out {
                    let mut len = 1;
                    while len < cap && xd[(i + 1 + len) % a] == yd[(j + 1 + len) % b] {
                        len += 1;
                    }
                    if len >= cap {
                        continue;
                    }
                    let i_d = self.head(xd[(i + len) % a]);
                    let a_out = self.tail(xd[(i + 1 + len) % a]);
                    let b_out = self.tail(yd[(j + 1 + len) % b]);
                    let start = x_in.ccw_from(x_out) < y_in.ccw_from(x_out);
                    let end = a_out.ccw_from(i_d) < b_out.ccw_from(i_d);
                    if start == end {
                        count += 1;
                    }
                } else if with_vertices {
                    let hs = [x_in.k, x_out.k, y_in.k, y_out.k];
                    let distinct = (0..4).all(|u| (0..u).all(|w| hs[u] != hs[w]));
                    if distinct && (x_in.k + 4 - x_out.k) % 4 == 2 {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    pub fn normal_curve(&self, c: &Curve) -> NormalCurve {
        let mut edge_counts = BTreeMap::new();
        let mut corner_counts = BTreeMap::new();
        let a = c.darts.len();
        for i in 0..a {
            let e = &self.edges[c.darts[i].edge as usize];
            let name = format!("{}:{}", self.graph.spheres[e.sphere].id, c.darts[i].edge);
            *edge_counts.entry(name).or_insert(0u64) += 1;
            let h_in = self.head(c.darts[i]);
            let h_out = self.tail(c.darts[(i + 1) % a]);
            let (lo, hi) = (h_in.k.min(h_out.k), h_in.k.max(h_out.k));
            let key = format!("{}:h{lo}h{hi}", self.graph.points[h_in.point as usize].id);
            *corner_counts.entry(key).or_insert(0u64) += 1;
        }
        NormalCurve {
            edge_counts,
            corner_counts,
        }
    }

    pub fn sphere_index(&self, id: &str) -> Result<usize, SurfaceError> {
        self.graph
            .sphere_index(id)
            .ok_or_else(|| SurfaceError::UnknownSphere(id.to_string()))
    }
}

/// A cyclically reduced closed walk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curve {
    pub darts: Vec<Dart>,
}

impl Curve {
    pub fn reduced(darts: Vec<Dart>) -> Curve {
        let mut st: Vec<Dart> = Vec::with_capacity(darts.len());
        for d in darts {
            if st.last() == Some(&d.reverse()) {
                st.pop();
            } else {
                st.push(d);
            }
        }
        let (mut lo, mut hi) = (0, st.len());
        while hi - lo >= 2 && st[hi - 1] == st[lo].reverse() {
            lo += 1;
            hi -= 1;
        }
        Curve {
            darts: st[lo..hi].to_vec(),
        }
    }

    pub fn reversed(&self) -> Curve {
        Curve {
            darts: self.darts.iter().rev().map(|d| d.reverse()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.darts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.darts.is_empty()
    }

    /// Equal as unoriented free homotopy classes.
    pub fn same_class(&self, other: &Curve) -> bool {
        let n = self.darts.len();
        if n != other.darts.len() {
            return false;
        }
        if n == 0 {
            return true;
        }
        let r = other.reversed();
        (0..n).any(|s| {
            (0..n).all(|i| self.darts[(i + s) % n] == other.darts[i])
                || (0..n).all(|i| self.darts[(i + s) % n] == r.darts[i])
        })
    }
}

/// Edge crossing counts and per-vertex turn counts of a curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalCurve {
    pub edge_counts: BTreeMap<String, u64>,
    pub corner_counts: BTreeMap<String, u64>,
}

/// The three branches of a track at a point, as half-edge index pairs.
pub fn branches(dc: &DiskChoice, p: usize) -> [(u8, u8); 3] {
    let through = if dc.disk_on_alpha(p) { (0, 2) } else { (1, 3) };
    match dc.orientation {
        Orientation::Standard => [through, (1, 2), (0, 3)],
        Orientation::Opposite => [through, (0, 1), (2, 3)],
    }
}

const BRANCH_NAMES: [&str; 3] = ["through", "corner1", "corner2"];

/// Rational weights on the branches of a track, three per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector {
    pub dc: DiskChoice,
    pub w: Vec<BigRational>,
}

impl WeightVector {
    pub fn zero(dc: &DiskChoice) -> Self {
        WeightVector {
            dc: dc.clone(),
            w: vec![BigRational::zero(); 3 * dc.signs.len()],
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        WeightVector {
            dc: self.dc.clone(),
            w: self.w.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &WeightVector) -> Self {
        WeightVector {
            dc: self.dc.clone(),
            w: self.w.iter().zip(&other.w).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn to_map(&self, graph: &PlumbingGraph) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        for (p, pt) in graph.points.iter().enumerate() {
            for (b, name) in BRANCH_NAMES.iter().enumerate() {
                m.insert(format!("{name}:{}", pt.id), self.w[3 * p + b].to_string());
            }
        }
        m
    }

    /// Total weight through half-edge `h`.
    pub fn usage(&self, h: HalfEdge) -> BigRational {
        let p = h.point as usize;
        let mut u = BigRational::zero();
        for (b, (i, j)) in branches(&self.dc, p).into_iter().enumerate() {
            if i == h.k || j == h.k {
                u += &self.w[3 * p + b];
            }
        }
        u
    }

    pub fn switch_ok(&self, ribbon: &Ribbon) -> bool {
        self.w.iter().all(|x| !x.is_negative())
            && ribbon
                .edges
                .iter()
                .all(|e| self.usage(e.tail) == self.usage(e.head))
    }

    pub fn is_zero(&self) -> bool {
        self.w.iter().all(|x| x.is_zero())
    }
}

fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Weights of a carried curve: how often it takes each branch.
pub fn walk_weights(
    ribbon: &Ribbon,
    c: &Curve,
    dc: &DiskChoice,
) -> Result<WeightVector, SurfaceError> {
    let mut w = vec![0i64; 3 * dc.signs.len()];
    let a = c.darts.len();
    for i in 0..a {
        let h_in = ribbon.head(c.darts[i]);
        let h_out = ribbon.tail(c.darts[(i + 1) % a]);
        let p = h_in.point as usize;
        let pair = (h_in.k.min(h_out.k), h_in.k.max(h_out.k));
        let b = branches(dc, p)
            .iter()
            .position(|&x| x == pair)
            .ok_or_else(|| SurfaceError::NotCarried {
                point: ribbon.graph.points[p].id.clone(),
                turn: format!("h{}-h{}", pair.0, pair.1),
            })?;
        w[3 * p + b] += 1;
    }
    Ok(WeightVector {
        dc: dc.clone(),
        w: w.into_iter().map(int).collect(),
    })
}

/// Weight one on the through branches of the core of `sphere`.
pub fn core_weights(
    ribbon: &Ribbon,
    sphere: usize,
    dc: &DiskChoice,
) -> Result<WeightVector, SurfaceError> {
    let mut wv = WeightVector::zero(dc);
    let s = ribbon.graph.sphere(sphere).sign;
    for p in ribbon.graph.points_on(sphere) {
        if dc.disk_sphere_sign(p) != s {
            return Err(SurfaceError::NotCarried {
                point: ribbon.graph.points[p].id.clone(),
                turn: format!("through {}", ribbon.graph.spheres[sphere].id),
            });
        }
        wv.w[3 * p] = BigRational::one();
    }
    Ok(wv)
}

pub type IntMatrix = Vec<Vec<BigInt>>;

fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect())
        .collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    let mut out = vec![vec![BigInt::zero(); m]; n];
    for i in 0..n {
        for (k, aik) in a[i].iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * &b[k][j];
            }
        }
    }
    out
}

pub fn mat_vec(m: &IntMatrix, w: &WeightVector, dc: DiskChoice) -> WeightVector {
    let out = m
        .iter()
        .map(|row| {
            row.iter()
                .zip(&w.w)
                .fold(BigRational::zero(), |acc, (a, x)| {
                    acc + BigRational::from_integer(a.clone()) * x
                })
        })
        .collect();
    WeightVector { dc, w: out }
}

/// Linear action of one unit twist on branch weights, and the new track.
pub fn twist_weight_matrix(
    ribbon: &Ribbon,
    factor: TwistFactor,
    dc: &DiskChoice,
) -> Result<(IntMatrix, DiskChoice), SurfaceError> {
    let g = &ribbon.graph;
    let x = factor.sphere;
    let xs = g.sphere(x).sign;
    if factor.exponent != dc.orientation.exponent_sign(xs) {
        return Err(SurfaceError::SignMismatch {
            sphere: g.spheres[x].id.clone(),
            exponent: factor.exponent,
            orientation: dc.orientation,
        });
    }
    let n = g.points.len();
    let mut m = identity(3 * n);
    let on_x = g.points_on(x);
    // crossing count C as a row vector over old coordinates
    let mut c = vec![0i64; 3 * n];
    for &q in &on_x {
        let h = ribbon.left_of(q, x);
        for (b, (i, j)) in branches(dc, q).into_iter().enumerate() {
            if i == h.k || j == h.k {
                c[3 * q + b] += 1;
            }
        }
    }
    for &q in &on_x {
        let on_x_already = dc.disk_sphere_sign(q) == xs;
        let mut row: Vec<i64> = c.clone();
        if on_x_already {
            row[3 * q] += 1;
        } else {
            row[3 * q] -= 1;
            m[3 * q + 1][3 * q] += 1;
            m[3 * q + 2][3 * q] += 1;
        }
        m[3 * q] = row.into_iter().map(BigInt::from).collect();
    }
    let target = apply_f(factor, dc, g)?;
    Ok((m, target))
}

/// Composite weight matrix of a word from track `start`, with the final track.
pub fn word_weight_matrix(
    ribbon: &Ribbon,
    word: &TwistWord,
    start: &DiskChoice,
) -> Result<(IntMatrix, DiskChoice), SurfaceError> {
    let mut m = identity(3 * start.signs.len());
    let mut dc = start.clone();
    for f in word.unit_factors().iter().rev() {
        let (t, next) = twist_weight_matrix(ribbon, *f, &dc)?;
        m = mat_mul(&t, &m);
        dc = next;
    }
    Ok((m, dc))
}

/// Pushes a weight vector through a word, rightmost factor first.
pub fn push_weights(
    ribbon: &Ribbon,
    word: &TwistWord,
    w: &WeightVector,
) -> Result<WeightVector, SurfaceError> {
    let (m, dc) = word_weight_matrix(ribbon, word, &w.dc)?;
    Ok(mat_vec(&m, w, dc))
}

/// Characteristic polynomial `det(xI - A)`, coefficients from constant term up.
pub fn charpoly(a: &IntMatrix) -> Vec<BigRational> {
    let n = a.len();
    let ar: Vec<Vec<BigRational>> = a
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    let mut c = vec![BigRational::zero(); n + 1];
    c[n] = BigRational::one();
    let mut mk = vec![vec![BigRational::zero(); n]; n];
    for k in 1..=n {
        let mut next = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = BigRational::zero();
                for l in 0..n {
                    if !ar[i][l].is_zero() && !mk[l][j].is_zero() {
                        s += &ar[i][l] * &mk[l][j];
                    }
                }
                if i == j {
                    s += &c[n - k + 1];
                }
                next[i][j] = s;
            }
        }
        mk = next;
        let mut tr = BigRational::zero();
        for i in 0..n {
            for l in 0..n {
                tr += &ar[i][l] * &mk[l][i];
            }
        }
        c[n - k] = -tr / int(k as i64);
    }
    c
}

fn eval(c: &[BigRational], x: &BigRational) -> BigRational {
    c.iter()
        .rev()
        .fold(BigRational::zero(), |acc, a| acc * x + a)
}

fn to_f64(m: &IntMatrix) -> Vec<Vec<f64>> {
    m.iter()
        .map(|r| {
            r.iter()
                .map(|x| x.to_f64().unwrap_or(f64::INFINITY))
                .collect()
        })
        .collect()
}

struct Power {
    lambda: f64,
    vector: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn power_iteration(m: &[Vec<f64>], start: &[f64], tol: f64) -> Power {
    let n = m.len();
    let norm = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let s = norm(start);
    let mut v: Vec<f64> = start.iter().map(|x| x / s).collect();
    let mut lambda = 0.0;
    for it in 1..=100_000 {
        let mut w = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                w[i] += m[i][j] * v[j];
            }
        }
        let l = norm(&w);
        if l == 0.0 {
            return Power {
                lambda: 0.0,
                vector: w,
                iterations: it,
                converged: true,
            };
        }
        w.iter_mut().for_each(|x| *x /= l);
        let dv = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let done = (l - lambda).abs() <= tol * l.max(1.0) && dv <= tol;
        lambda = l;
        v = w;
        if done {
            return Power {
                lambda,
                vector: v,
                iterations: it,
                converged: true,
            };
        }
    }
    Power {
        lambda,
        vector: v,
        iterations: 100_000,
        converged: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchReport {
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Characteristic polynomial of the composite matrix, constant term first.
    pub charpoly: Vec<String>,
    /// The polynomial changes sign across `lambda ± 1e-6`.
    pub root_bracketed: bool,
    pub track: String,
}

fn start_vector(ribbon: &Ribbon, dc: &DiskChoice) -> WeightVector {
    let mut acc = WeightVector::zero(dc);
    for s in 0..ribbon.graph.spheres.len() {
        if let Ok(w) = core_weights(ribbon, s, dc) {
            acc = acc.add(&w);
        }
    }
    acc
}

fn penner_setup(
    ribbon: &Ribbon,
    word: &TwistWord,
) -> Result<(IntMatrix, DiskChoice, WeightVector), SurfaceError> {
    penner_orientation(word, &ribbon.graph).ok_or(SurfaceError::NotPenner)?;
    let dc = invariant_track(word, &ribbon.graph)?;
    let (m, end) = word_weight_matrix(ribbon, word, &dc)?;
    debug_assert_eq!(end, dc);
    let start = start_vector(ribbon, &dc);
    let pushed = mat_vec(&m, &start, dc.clone());
    Ok((m, dc, start.add(&pushed)))
}

/// Leading eigenvalue of the word's weight action on its invariant track.
pub fn stretch_factor(ribbon: &Ribbon, word: &TwistWord) -> Result<StretchReport, SurfaceError> {
    let (m, dc, start) = penner_setup(ribbon, word)?;
    let v0: Vec<f64> = start.w.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect();
    let p = power_iteration(&to_f64(&m), &v0, 1e-12);
    let cp = charpoly(&m);
    let delta = 1e-6;
    let lo = BigRational::from_float(p.lambda - delta).unwrap_or_else(BigRational::zero);
    let hi = BigRational::from_float(p.lambda + delta).unwrap_or_else(BigRational::zero);
    let (a, b) = (eval(&cp, &lo), eval(&cp, &hi));
    let root_bracketed = a.is_zero() || b.is_zero() || (a.is_positive() != b.is_positive());
    Ok(StretchReport {
        lambda: p.lambda,
        iterations: p.iterations,
        converged: p.converged,
        charpoly: cp.iter().map(|c| c.to_string()).collect(),
        root_bracketed,
        track: dc.label(&ribbon.graph),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantWeights {
    pub lambda: f64,
    /// Normalized to total weight one.
    pub weights: BTreeMap<String, f64>,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub recurrent_classes: Vec<Vec<String>>,
}

/// Projective eigenvector of the weight action, supported on the recurrent part.
pub fn invariant_weights(
    ribbon: &Ribbon,
    word: &TwistWord,
) -> Result<InvariantWeights, SurfaceError> {
    let (m, _dc, start) = penner_setup(ribbon, word)?;
    let mf = to_f64(&m);
    let n = mf.len();
    let names: Vec<String> = ribbon
        .graph
        .points
        .iter()
        .flat_map(|pt| BRANCH_NAMES.iter().map(move |b| format!("{b}:{}", pt.id)))
        .collect();
    let mut dg = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..n).map(|i| dg.add_node(i)).collect();
    for i in 0..n {
        for j in 0..n {
            if mf[i][j] > 0.0 {
                dg.add_edge(nodes[j], nodes[i], ());
            }
        }
    }
    let mut classes = Vec::new();
    for scc in tarjan_scc(&dg) {
        let idx: Vec<usize> = scc.iter().map(|&x| dg[x]).collect();
        let recurrent = idx.len() > 1 || mf[idx[0]][idx[0]] > 0.0;
        if !recurrent {
            continue;
        }
        let sub: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| mf[i][j]).collect())
            .collect();
        let r = power_iteration(&sub, &vec![1.0; idx.len()], 1e-12).lambda;
        let mut members: Vec<usize> = idx;
        members.sort();
        classes.push((r, members));
    }
    classes.sort_by(|a, b| a.1.cmp(&b.1));
    let class_names: Vec<Vec<String>> = classes
        .iter()
        .map(|(_, c)| c.iter().map(|&i| names[i].clone()).collect())
        .collect();
    let top = classes.iter().map(|c| c.0).fold(0.0, f64::max);
    let leaders = classes
        .iter()
        .filter(|c| (c.0 - top).abs() <= 1e-9 * top.max(1.0))
        .count();
    if leaders > 1 {
        return Err(SurfaceError::Ambiguous(class_names));
    }
    let v0: Vec<f64> = start.w.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect();
    let p = power_iteration(&mf, &v0, 1e-13);
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let mv: f64 = (0..n).map(|j| mf[i][j] * p.vector[j]).sum();
        residual = residual.max((mv - p.lambda * p.vector[i]).abs());
    }
    let total: f64 = p.vector.iter().sum();
    let vector: Vec<f64> = p.vector.iter().map(|x| x / total).collect();
    let weights = names.iter().cloned().zip(vector.iter().copied()).collect();
    Ok(InvariantWeights {
        lambda: p.lambda,
        weights,
        vector,
        residual: residual / total,
        recurrent_classes: class_names,
    })
}

/// Boundary slot of track family `o` on side `k` of the square around point `p`.
fn slot(ribbon: &Ribbon, p: usize, k: u8, o: Orientation) -> u8 {
    let op_after = match k {
        0 => true,
        2 => false,
        1 => ribbon.graph.points[p].gluing == Gluing::F,
        _ => ribbon.graph.points[p].gluing == Gluing::G,
    };
    let first_is_standard = op_after;
    let is_standard = o == Orientation::Standard;
    2 * k
        + if is_standard == first_is_standard {
            0
        } else {
            1
        }
}

fn interleaved(a: (u8, u8), b: (u8, u8)) -> bool {
    let (lo, hi) = (a.0.min(a.1), a.0.max(a.1));
    let inside = |x: u8| lo < x && x < hi;
    inside(b.0) != inside(b.1)
}

/// Crossing count of the tracks' branches weighted by `w0 · w1`.
pub fn intersection_number(
    ribbon: &Ribbon,
    w0: &WeightVector,
    w1: &WeightVector,
) -> Result<BigRational, SurfaceError> {
    let (s, o) = match (w0.dc.orientation, w1.dc.orientation) {
        (Orientation::Standard, Orientation::Opposite) => (w0, w1),
        (Orientation::Opposite, Orientation::Standard) => (w1, w0),
        _ => return Err(SurfaceError::OrientationMismatch),
    };
    let n = ribbon.graph.points.len();
    for w in [s, o] {
        if w.w.len() != 3 * n {
            return Err(SurfaceError::Size {
                expected: 3 * n,
                got: w.w.len(),
            });
        }
    }
    let mut total = BigRational::zero();
    for p in 0..n {
        let bs = branches(&s.dc, p);
        let bo = branches(&o.dc, p);
        for (i, x) in bs.iter().enumerate() {
            let cx = (
                slot(ribbon, p, x.0, Orientation::Standard),
                slot(ribbon, p, x.1, Orientation::Standard),
            );
            for (j, y) in bo.iter().enumerate() {
                let cy = (
                    slot(ribbon, p, y.0, Orientation::Opposite),
                    slot(ribbon, p, y.1, Orientation::Opposite),
                );
                if interleaved(cx, cy) {
                    total += &s.w[3 * p + i] * &o.w[3 * p + j];
                }
            }
        }
    }
    Ok(total)
}

/// The track a core starts on: its own points carry the disk on it, the rest on alpha.
pub fn starting_track(graph: &PlumbingGraph, core: usize, o: Orientation) -> DiskChoice {
    let s = graph.sphere(core).sign;
    let signs = (0..graph.points.len())
        .map(|p| {
            if graph.point_on_sphere(p, core) {
                o.label_for(s)
            } else {
                o.label_for(Sign::Positive)
            }
        })
        .collect();
    DiskChoice::new(o, signs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumption {
    pub name: String,
    pub status: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloerReport {
    pub hf_sum: u64,
    pub intersection: u64,
    pub oracle: u64,
    pub agrees: bool,
    pub assumptions: Vec<Assumption>,
}

fn as_u64(x: &BigRational) -> u64 {
    x.to_integer().to_u64().unwrap_or(u64::MAX)
}

/// `dim HF^0 + dim HF^1` of `word0(core0)` and `word1(core1)`, as a crossing count.
pub fn floer_dims(
    ribbon: &Ribbon,
    word0: &TwistWord,
    core0: usize,
    word1: &TwistWord,
    core1: usize,
) -> Result<FloerReport, SurfaceError> {
    let g = &ribbon.graph;
    if !sign_consistent(word0, g, Orientation::Standard) {
        return Err(SurfaceError::WrongFamily(Orientation::Standard));
    }
    if !sign_consistent(word1, g, Orientation::Opposite) {
        return Err(SurfaceError::WrongFamily(Orientation::Opposite));
    }
    let dc0 = starting_track(g, core0, Orientation::Standard);
    let dc1 = starting_track(g, core1, Orientation::Opposite);
    let w0 = push_weights(ribbon, word0, &core_weights(ribbon, core0, &dc0)?)?;
    let w1 = push_weights(ribbon, word1, &core_weights(ribbon, core1, &dc1)?)?;
    let i = as_u64(&intersection_number(ribbon, &w0, &w1)?);
    let c0 = ribbon.apply_word(word0, &ribbon.core(core0));
    let c1 = ribbon.apply_word(word1, &ribbon.core(core1));
    let oracle = ribbon.intersection(&c0, &c1);
    let carried0 = walk_weights(ribbon, &c0, &w0.dc)
        .map(|w| w == w0)
        .unwrap_or(false);
    let carried1 = walk_weights(ribbon, &c1, &w1.dc)
        .map(|w| w == w1)
        .unwrap_or(false);
    let distinct = !c0.same_class(&c1);
    let yes = |b: bool| if b { "holds" } else { "fails" }.to_string();
    let assumptions = vec![
        Assumption {
            name: "eta-invariance".into(),
            status: "by construction".into(),
            note: "cores are fixed by the involution, which commutes with every twist".into(),
        },
        Assumption {
            name: "carried by opposite families".into(),
            status: yes(carried0 && carried1),
            note: format!("{} and {}", w0.dc.label(g), w1.dc.label(g)),
        },
        Assumption {
            name: "equivariant transversality".into(),
            status: "by construction".into(),
            note: "crossings sit inside plumbing squares, away from plumbing points".into(),
        },
        Assumption {
            name: "not isotopic".into(),
            status: yes(distinct),
            note: "heuristic: compares reduced walks up to rotation and reversal".into(),
        },
    ];
    Ok(FloerReport {
        hf_sum: i,
        intersection: i,
        oracle,
        agrees: i == oracle,
        assumptions,
    })
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .darts
            .iter()
            .map(|d| format!("{}{}", if d.forward { "+" } else { "-" }, d.edge))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}
