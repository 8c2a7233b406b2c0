//! Transfer matrices over formal sums of typed fiber maps.
//!
//! Rows and columns are singular disks of the target and source tracks. An entry is a
//! list of terms; a term is a composable sequence of atoms, listed outermost first.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diskdecomp::{disk_index, slot_index, slots, CarriedClass, Flavor, Group, Slot};
use crate::plumbing::{PlumbingGraph, Sign};
use crate::twistsys::{apply_f, invariant_track, DiskChoice, TwistError, TwistFactor, TwistWord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("cannot compose: left factor starts at {left} but right factor ends at {right}")]
    DomainMismatch { left: String, right: String },
    #[error("twist along sphere {sphere} with exponent {exponent} does not match the {orientation:?} family")]
    SignMismatch {
        sphere: String,
        exponent: i32,
        orientation: crate::twistsys::Orientation,
    },
    #[error("strand census needs an endomorphism; source and target tracks differ")]
    NotEndomorphism,
    #[error("depth must be non-negative, got {0}")]
    NegativeDepth(i64),
    #[error("census at depth {depth} would exceed {limit} strands")]
    TooLarge { depth: usize, limit: usize },
    #[error(transparent)]
    Twist(#[from] TwistError),
}

/// Radii and offsets of the canonical fiber maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams {
    /// Center offset of singular atoms.
    pub r0: f64,
    /// Scale of scaling atoms.
    pub r1: f64,
    /// Scale of singular atoms.
    pub r2: f64,
    /// Scale of trivial atoms.
    pub trivial_scale: f64,
    /// Distance of trivial-atom centers from the fiber center.
    pub trivial_radius: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            r0: 0.5,
            r1: 0.125,
            r2: 0.125,
            trivial_scale: 0.125,
            trivial_radius: 0.8125,
        }
    }
}

impl GeometryParams {
    /// Inequalities every admissible parameter set satisfies; returns the broken ones.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let GeometryParams {
            r0,
            r1,
            r2,
            trivial_scale: rt,
            trivial_radius: c,
        } = *self;
        for (name, x) in [
            ("r0", r0),
            ("r1", r1),
            ("r2", r2),
            ("trivial_scale", rt),
            ("trivial_radius", c),
        ] {
            if !(x > 0.0 && x < 1.0) {
                v.push(format!("{name} = {x} must lie in (0, 1)"));
            }
        }
        if r1 + r2 >= r0 {
            v.push(format!(
                "r1 + r2 = {} must be smaller than r0 = {r0}",
                r1 + r2
            ));
        }
        if r0 + r2 >= 1.0 {
            v.push(format!("r0 + r2 = {} must be smaller than 1", r0 + r2));
        }
        if (c - r0).abs() <= rt + r2 {
            v.push(format!(
                "trivial centers at radius {c} touch the singular images"
            ));
        }
        if c <= rt + r1 {
            v.push(format!(
                "trivial centers at radius {c} touch the scaling image"
            ));
        }
        if c + rt >= 1.0 {
            v.push(format!("trivial images at radius {c} leave the fiber disk"));
        }
        v
    }

    fn trivial_center(&self, source_point: usize, n_points: usize) -> (f64, f64) {
        let phi = 2.0 * PI * source_point as f64 / n_points.max(1) as f64;
        (
            self.trivial_radius * phi.cos(),
            self.trivial_radius * phi.sin(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Scaling,
    Singular1,
    Singular2,
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AngleShift {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "pi")]
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// One typed map `S^1 x D^n -> S^1 x D^n` between boundary neighborhoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapAtom {
    pub label: String,
    pub kind: AtomKind,
    pub identity: bool,
    pub source: Slot,
    pub target: Slot,
    pub angle_shift: AngleShift,
    pub fiber_scale: f64,
    pub center_offset: f64,
    pub center_phase: Phase,
    pub fiber_rotation_degree: u8,
    pub translation: (f64, f64),
}

impl MapAtom {
    fn identity(slot: Slot) -> Self {
        MapAtom {
            label: "id".into(),
            kind: AtomKind::Scaling,
            identity: true,
            source: slot,
            target: slot,
            angle_shift: AngleShift::Zero,
            fiber_scale: 1.0,
            center_offset: 0.0,
            center_phase: Phase::Plus,
            fiber_rotation_degree: 0,
            translation: (0.0, 0.0),
        }
    }

    /// Center of the image tube in target coordinates, as a function of the target angle.
    pub fn center_family(&self) -> CenterFamily {
        match self.kind {
            AtomKind::Scaling => CenterFamily::Origin,
            AtomKind::Singular1 | AtomKind::Singular2 => {
                let mut s = if self.center_phase == Phase::Plus {
                    1.0
                } else {
                    -1.0
                };
                if self.angle_shift == AngleShift::Pi {
                    s = -s;
                }
                CenterFamily::Circle {
                    sign: s,
                    radius: self.center_offset,
                }
            }
            AtomKind::Trivial => CenterFamily::Constant(self.translation),
        }
    }

    /// Evaluates the atom on a fiber point `(theta, x, y)`.
    pub fn apply(&self, theta: f64, x: f64, y: f64) -> (f64, f64, f64) {
        let t_out = match self.angle_shift {
            AngleShift::Zero => theta,
            AngleShift::Pi => theta + PI,
        };
        let r = self.fiber_scale;
        let (mut fx, mut fy) = (x, y);
        if self.fiber_rotation_degree == 2 {
            let (c, s) = ((2.0 * theta).cos(), (2.0 * theta).sin());
            (fx, fy) = (x * c - y * s, x * s + y * c);
        }
        let (cx, cy) = match self.kind {
            AtomKind::Scaling => (0.0, 0.0),
            AtomKind::Singular1 | AtomKind::Singular2 => {
                let s = if self.center_phase == Phase::Plus {
                    1.0
                } else {
                    -1.0
                };
                (
                    s * self.center_offset * theta.cos(),
                    s * self.center_offset * theta.sin(),
                )
            }
            AtomKind::Trivial => self.translation,
        };
        let sign = if self.kind == AtomKind::Scaling && self.angle_shift == AngleShift::Pi {
            -1.0
        } else {
            1.0
        };
        (t_out, cx + sign * r * fx, cy + sign * r * fy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CenterFamily {
    Origin,
    Circle { sign: f64, radius: f64 },
    Constant((f64, f64)),
}

impl CenterFamily {
    /// Minimum over the angle of the distance between two center curves.
    pub fn min_distance(&self, other: &CenterFamily) -> f64 {
        use CenterFamily::*;
        let norm = |c: (f64, f64)| c.0.hypot(c.1);
        match (*self, *other) {
            (Origin, Origin) => 0.0,
            (Origin, Circle { radius, .. }) | (Circle { radius, .. }, Origin) => radius,
            (Circle { sign: s, radius: r }, Circle { sign: t, radius: q }) => {
                if s == t {
                    (r - q).abs()
                } else {
                    r + q
                }
            }
            (Origin, Constant(c)) | (Constant(c), Origin) => norm(c),
            (Circle { radius, .. }, Constant(c)) | (Constant(c), Circle { radius, .. }) => {
                (norm(c) - radius).abs()
            }
            (Constant(a), Constant(b)) => (a.0 - b.0).hypot(a.1 - b.1),
        }
    }

    pub fn max_norm(&self) -> f64 {
        match *self {
            CenterFamily::Origin => 0.0,
            CenterFamily::Circle { radius, .. } => radius,
            CenterFamily::Constant(c) => c.0.hypot(c.1),
        }
    }
}

/// A composite of atoms, outermost first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub atoms: Vec<MapAtom>,
}

impl Term {
    pub fn source(&self) -> Slot {
        self.atoms.last().expect("terms are non-empty").source
    }

    pub fn target(&self) -> Slot {
        self.atoms[0].target
    }

    pub fn scale(&self) -> f64 {
        self.atoms.iter().map(|a| a.fiber_scale).product()
    }

    pub fn has_trivial(&self) -> bool {
        self.atoms.iter().any(|a| a.kind == AtomKind::Trivial)
    }

    pub fn label(&self) -> String {
        self.atoms
            .iter()
            .map(|a| a.label.as_str())
            .collect::<Vec<_>>()
            .join("∘")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub source: DiskChoice,
    pub target: DiskChoice,
    pub n_points: usize,
    pub terms: Vec<Term>,
}

impl TransferMatrix {
    pub fn identity(dc: &DiskChoice) -> Self {
        let n = dc.signs.len();
        let terms = slots(n)
            .into_iter()
            .map(|s| Term {
                atoms: vec![MapAtom::identity(s)],
            })
            .collect();
        TransferMatrix {
            source: dc.clone(),
            target: dc.clone(),
            n_points: n,
            terms,
        }
    }

    pub fn n_disks(&self) -> usize {
        3 * self.n_points
    }

    /// Terms in the entry `(row disk, column disk)`.
    pub fn entry(&self, row: usize, col: usize) -> Vec<&Term> {
        self.terms
            .iter()
            .filter(|t| t.target().disk == row && t.source().disk == col)
            .collect()
    }

    /// Atom-label multiset of every nonempty entry, keyed by `(row, col)`.
    pub fn pattern(&self) -> BTreeMap<(usize, usize), Vec<String>> {
        let mut out: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
        for t in &self.terms {
            out.entry((t.target().disk, t.source().disk))
                .or_default()
                .push(t.label());
        }
        for v in out.values_mut() {
            v.sort();
        }
        out
    }

    pub fn terms_into(&self, slot: Slot) -> impl Iterator<Item = (usize, &Term)> {
        self.terms
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.target() == slot)
    }

    pub fn is_endomorphism(&self) -> bool {
        self.source == self.target
    }
}

fn sort_terms(terms: &mut [Term]) {
    terms.sort_by(|a, b| {
        (slot_index(a.target()), slot_index(a.source()))
            .cmp(&(slot_index(b.target()), slot_index(b.source())))
            .then_with(|| a.label().cmp(&b.label()))
    });
}

fn ensure_handedness(
    factor: TwistFactor,
    dc: &DiskChoice,
    graph: &PlumbingGraph,
) -> Result<(), TransferError> {
    let sphere = graph.sphere(factor.sphere);
    if factor.exponent != dc.orientation.exponent_sign(sphere.sign) {
        return Err(TransferError::SignMismatch {
            sphere: sphere.id.clone(),
            exponent: factor.exponent,
            orientation: dc.orientation,
        });
    }
    Ok(())
}

struct Labels {
    bar_scale: &'static str,
    bar_sing: [&'static str; 2],
    bar_triv: &'static str,
    disk_scale: &'static str,
    disk_sing: [&'static str; 2],
    disk_triv: &'static str,
}

fn labels(sign: Sign) -> Labels {
    match sign {
        Sign::Positive => Labels {
            bar_scale: "h1",
            bar_sing: ["h2", "h3"],
            bar_triv: "i_t",
            disk_scale: "i",
            disk_sing: ["j1", "j2"],
            disk_triv: "h_t",
        },
        Sign::Negative => Labels {
            bar_scale: "f1",
            bar_sing: ["f2", "f3"],
            bar_triv: "f_t",
            disk_scale: "g3",
            disk_sing: ["g1", "g2"],
            disk_triv: "g_t",
        },
    }
}

/// The matrix of one unit twist acting on the track `dc`.
pub fn twist_matrix(
    factor: TwistFactor,
    dc: &DiskChoice,
    graph: &PlumbingGraph,
    params: &GeometryParams,
) -> Result<TransferMatrix, TransferError> {
    ensure_handedness(factor, dc, graph)?;
    let target = apply_f(factor, dc, graph)?;
    let n = graph.points.len();
    let x = factor.sphere;
    let xsign = graph.sphere(x).sign;
    let xlabel = dc.orientation.label_for(xsign);
    let names = labels(xsign);
    let xbar = Flavor::bar_on(xsign);
    let on_x = graph.points_on(x);

    let mk =
        |label: &str, kind: AtomKind, source: Slot, target: Slot, shift: AngleShift, scale: f64| {
            MapAtom {
                label: label.to_string(),
                kind,
                identity: false,
                source,
                target,
                angle_shift: shift,
                fiber_scale: scale,
                center_offset: 0.0,
                center_phase: Phase::Plus,
                fiber_rotation_degree: 0,
                translation: (0.0, 0.0),
            }
        };
    let singular = |label: &str, second: bool, source: Slot, target: Slot, shift: AngleShift| {
        let mut a = mk(
            label,
            if second {
                AtomKind::Singular2
            } else {
                AtomKind::Singular1
            },
            source,
            target,
            shift,
            params.r2,
        );
        a.center_offset = params.r0;
        a.center_phase = if second { Phase::Minus } else { Phase::Plus };
        a.fiber_rotation_degree = if second { 2 } else { 0 };
        a
    };
    let trivial = |label: &str, q: usize, target: Slot| {
        let mut a = mk(
            label,
            AtomKind::Trivial,
            Slot {
                disk: disk_index(q, Flavor::Branch(dc.signs[q])),
                group: Group::Bar,
            },
            target,
            AngleShift::Zero,
            params.trivial_scale,
        );
        a.translation = params.trivial_center(q, n);
        a
    };

    let mut atoms = Vec::new();
    for p in 0..n {
        let sp = disk_index(p, Flavor::Branch(dc.signs[p]));
        let tilde = Slot {
            disk: sp,
            group: Group::Tilde,
        };
        let bar = Slot {
            disk: sp,
            group: Group::Bar,
        };
        if !on_x.contains(&p) {
            for s in [
                tilde,
                bar,
                Slot {
                    disk: 3 * p + 1,
                    group: Group::Whole,
                },
                Slot {
                    disk: 3 * p + 2,
                    group: Group::Whole,
                },
            ] {
                atoms.push(MapAtom::identity(s));
            }
            continue;
        }
        let xb = Slot {
            disk: disk_index(p, xbar),
            group: Group::Whole,
        };
        let other_bar = Slot {
            disk: disk_index(p, Flavor::bar_on(xsign.flip())),
            group: Group::Whole,
        };
        atoms.push(MapAtom::identity(other_bar));

        // antipodal disk on the twisted sphere
        atoms.push(mk(
            names.bar_scale,
            AtomKind::Scaling,
            tilde,
            xb,
            AngleShift::Pi,
            params.r1,
        ));
        atoms.push(singular(names.bar_sing[0], false, bar, xb, AngleShift::Pi));
        atoms.push(singular(names.bar_sing[1], true, bar, xb, AngleShift::Pi));
        for &q in on_x.iter().filter(|&&q| q != p) {
            atoms.push(trivial(names.bar_triv, q, xb));
        }

        // branch disk at p, now on the twisted sphere
        let t_tilde = Slot {
            disk: sp,
            group: Group::Tilde,
        };
        let t_bar = Slot {
            disk: sp,
            group: Group::Bar,
        };
        atoms.push(mk(
            names.disk_scale,
            AtomKind::Scaling,
            xb,
            t_tilde,
            AngleShift::Pi,
            params.r1,
        ));
        if dc.signs[p] != xlabel {
            atoms.push(singular(
                names.disk_sing[0],
                false,
                bar,
                t_bar,
                AngleShift::Zero,
            ));
            atoms.push(singular(
                names.disk_sing[1],
                true,
                bar,
                t_bar,
                AngleShift::Zero,
            ));
        }
        for &q in on_x.iter().filter(|&&q| q != p) {
            atoms.push(trivial(names.disk_triv, q, t_bar));
        }
    }
    let mut terms: Vec<Term> = atoms.into_iter().map(|a| Term { atoms: vec![a] }).collect();
    sort_terms(&mut terms);
    Ok(TransferMatrix {
        source: dc.clone(),
        target,
        n_points: n,
        terms,
    })
}

/// `m2 · m1`: apply `m1` first.
pub fn compose(m2: &TransferMatrix, m1: &TransferMatrix) -> Result<TransferMatrix, TransferError> {
    if m2.source != m1.target {
        return Err(TransferError::DomainMismatch {
            left: format!("{:?}", m2.source.signs),
            right: format!("{:?}", m1.target.signs),
        });
    }
    let mut terms = Vec::new();
    for a2 in &m2.terms {
        for a1 in m1.terms.iter().filter(|a1| a1.target() == a2.source()) {
            let mut atoms = a2.atoms.clone();
            atoms.extend(a1.atoms.iter().cloned());
            terms.push(Term { atoms });
        }
    }
    sort_terms(&mut terms);
    Ok(TransferMatrix {
        source: m1.source.clone(),
        target: m2.target.clone(),
        n_points: m1.n_points,
        terms,
    })
}

/// A word's matrix together with its per-factor matrices (outermost first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoredMatrix {
    pub factors: Vec<TransferMatrix>,
    pub product: TransferMatrix,
}

/// Builds the factor matrices of `word` starting from the track `start`.
pub fn word_matrix_from(
    word: &TwistWord,
    start: &DiskChoice,
    graph: &PlumbingGraph,
    params: &GeometryParams,
) -> Result<FactoredMatrix, TransferError> {
    let units = word.unit_factors();
    let mut dc = start.clone();
    let mut factors = Vec::with_capacity(units.len());
    for f in units.iter().rev() {
        let m = twist_matrix(*f, &dc, graph, params)?;
        dc = m.target.clone();
        factors.push(m);
    }
    factors.reverse();
    let mut product = TransferMatrix::identity(&dc);
    for m in &factors {
        product = compose(&product, m)?;
    }
    if !factors.is_empty() {
        // drop the leading identity atom added by the seed
        for t in &mut product.terms {
            t.atoms.remove(0);
        }
    }
    Ok(FactoredMatrix { factors, product })
}

/// The matrix `Psi` of a Penner word acting on its invariant track.
pub fn word_matrix(
    word: &TwistWord,
    graph: &PlumbingGraph,
    params: &GeometryParams,
) -> Result<FactoredMatrix, TransferError> {
    let b = invariant_track(word, graph)?;
    word_matrix_from(word, &b, graph, params)
}

/// Number of terms from each source slot to each target slot: `C[target][source]`.
pub fn counting_matrix(m: &TransferMatrix) -> Vec<Vec<u64>> {
    let k = 4 * m.n_points;
    let mut c = vec![vec![0u64; k]; k];
    for t in &m.terms {
        c[slot_index(t.target())][slot_index(t.source())] += 1;
    }
    c
}

pub fn mat_mul(a: &[Vec<u64>], b: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    let mut out = vec![vec![0u64; m]; n];
    for i in 0..n {
        for (k, &aik) in a[i].iter().enumerate() {
            if aik == 0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Strands of `Psi^m`, stored as a prefix tree so that depth `m+1` extends depth `m`.
#[derive(Debug, Clone)]
pub struct StrandCensus {
    pub depth: usize,
    pub n_slots: usize,
    /// Node arrays; roots are the identity strands, one per slot.
    pub parent: Vec<u32>,
    pub term: Vec<u32>,
    pub radius: Vec<f64>,
    /// Current source-side slot of each node.
    pub tail: Vec<u16>,
    /// Target slot of each node's strand.
    pub head: Vec<u16>,
    /// `levels[m]` is the node range at depth `m`.
    pub levels: Vec<std::ops::Range<usize>>,
}

pub const ROOT: u32 = u32::MAX;

impl StrandCensus {
    pub fn level(&self, m: usize) -> std::ops::Range<usize> {
        self.levels[m].clone()
    }

    /// Per target slot strand counts at depth `m`.
    pub fn counts(&self, m: usize) -> Vec<u64> {
        let mut c = vec![0u64; self.n_slots];
        for i in self.level(m) {
            c[self.head[i] as usize] += 1;
        }
        c
    }

    /// Term indices of a strand, outermost first.
    pub fn terms_of(&self, node: usize) -> Vec<u32> {
        let mut out = Vec::new();
        let mut i = node;
        while self.parent[i] != ROOT {
            out.push(self.term[i]);
            i = self.parent[i] as usize;
        }
        out.reverse();
        out
    }

    /// Stable strand id: target slot index followed by the term indices.
    pub fn strand_id(&self, node: usize) -> String {
        let mut s = format!("{}", self.head[node]);
        for t in self.terms_of(node) {
            s.push('.');
            s.push_str(&t.to_string());
        }
        s
    }
}

/// Enumerates every group-compatible strand of `psi^m` up to depth `m`.
pub fn strand_census(psi: &TransferMatrix, depth: i64) -> Result<StrandCensus, TransferError> {
    strand_census_limited(psi, depth, 200_000_000)
}

pub fn strand_census_limited(
    psi: &TransferMatrix,
    depth: i64,
    limit: usize,
) -> Result<StrandCensus, TransferError> {
    if depth < 0 {
        return Err(TransferError::NegativeDepth(depth));
    }
    if !psi.is_endomorphism() {
        return Err(TransferError::NotEndomorphism);
    }
    let depth = depth as usize;
    let k = 4 * psi.n_points;
    let mut by_target: Vec<Vec<(u32, u16, f64)>> = vec![Vec::new(); k];
    for (i, t) in psi.terms.iter().enumerate() {
        by_target[slot_index(t.target())].push((
            i as u32,
            slot_index(t.source()) as u16,
            t.scale(),
        ));
    }
    let mut c = StrandCensus {
        depth,
        n_slots: k,
        parent: Vec::new(),
        term: Vec::new(),
        radius: Vec::new(),
        tail: Vec::new(),
        head: Vec::new(),
        levels: Vec::new(),
    };
    for s in 0..k {
        c.parent.push(ROOT);
        c.term.push(ROOT);
        c.radius.push(1.0);
        c.tail.push(s as u16);
        c.head.push(s as u16);
    }
    c.levels.push(0..k);
    for m in 1..=depth {
        let prev = c.levels[m - 1].clone();
        let start = c.parent.len();
        let mut projected = start;
        for i in prev.clone() {
            projected += by_target[c.tail[i] as usize].len();
        }
        if projected > limit {
            return Err(TransferError::TooLarge { depth: m, limit });
        }
        c.parent.reserve(projected - start);
        for i in prev {
            let (tail, r, head) = (c.tail[i] as usize, c.radius[i], c.head[i]);
            for &(t, src, scale) in &by_target[tail] {
                c.parent.push(i as u32);
                c.term.push(t);
                c.radius.push(r * scale);
                c.tail.push(src);
                c.head.push(head);
            }
        }
        c.levels.push(start..c.parent.len());
    }
    Ok(c)
}

/// Largest composite scale among the terms of a matrix.
pub fn r_max(m: &TransferMatrix) -> f64 {
    m.terms.iter().map(|t| t.scale()).fold(0.0, f64::max)
}

/// The carried class described by the depth-`m` census counts.
pub fn carried_class(
    census: &StrandCensus,
    m: usize,
    carrier: &DiskChoice,
    graph: &PlumbingGraph,
) -> CarriedClass {
    CarriedClass::from_slot_counts(carrier, graph, &census.counts(m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryCertificate {
    pub pass: bool,
    pub scales_below_one: bool,
    pub singular_constraint: bool,
    pub parameters_admissible: bool,
    pub tubes_disjoint: bool,
    pub tubes_contained: bool,
    pub r_max: f64,
    pub failures: Vec<String>,
}

fn atoms_separated(a: &MapAtom, b: &MapAtom) -> Result<(), String> {
    if a.identity || b.identity {
        if a.target.group != b.target.group {
            return Ok(());
        }
        return Err(format!(
            "identity {} shares its group with {}",
            a.label, b.label
        ));
    }
    let d = a.center_family().min_distance(&b.center_family());
    if d > a.fiber_scale + b.fiber_scale {
        Ok(())
    } else {
        Err(format!(
            "images of {} and {} meet: center distance {d} vs radii {} + {}",
            a.label, b.label, a.fiber_scale, b.fiber_scale
        ))
    }
}

/// Analytic certificate that images landing in a common disk are disjoint tubes.
///
/// Two terms into the same disk are compared at their first differing atom; below a
/// shared prefix the images are nested inside injective images of distinct atoms.
pub fn geometry_check(m: &TransferMatrix, params: &GeometryParams) -> GeometryCertificate {
    let mut failures = Vec::new();
    let admissible = params.violations();
    failures.extend(admissible.iter().cloned());
    let singular_constraint = params.r1 + params.r2 < params.r0;
    let mut scales_ok = true;
    let mut contained = true;
    for t in &m.terms {
        for a in t.atoms.iter().filter(|a| !a.identity) {
            if !(a.fiber_scale < 1.0) {
                scales_ok = false;
                failures.push(format!("atom {} has scale {}", a.label, a.fiber_scale));
            }
            if a.center_family().max_norm() + a.fiber_scale >= 1.0 {
                contained = false;
                failures.push(format!("image of {} leaves the fiber disk", a.label));
            }
        }
    }
    let mut disjoint = true;
    let mut by_disk: BTreeMap<usize, Vec<&Term>> = BTreeMap::new();
    for t in &m.terms {
        by_disk.entry(t.target().disk).or_default().push(t);
    }
    for terms in by_disk.values() {
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                let (a, b) = (terms[i], terms[j]);
                let k = a.atoms.iter().zip(&b.atoms).position(|(x, y)| x != y);
                let Some(k) = k else {
                    disjoint = false;
                    failures.push(format!("duplicate term {}", a.label()));
                    continue;
                };
                if let Err(e) = atoms_separated(&a.atoms[k], &b.atoms[k]) {
                    disjoint = false;
                    failures.push(e);
                }
            }
        }
    }
    failures.sort();
    failures.dedup();
    let parameters_admissible = admissible.is_empty();
    GeometryCertificate {
        pass: scales_ok && singular_constraint && parameters_admissible && disjoint && contained,
        scales_below_one: scales_ok,
        singular_constraint,
        parameters_admissible,
        tubes_disjoint: disjoint,
        tubes_contained: contained,
        r_max: r_max(m),
        failures,
    }
}
