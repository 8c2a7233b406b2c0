//! Plumbing graphs of Penner type and their fixed surfaces.
//!
//! A plumbing is described combinatorially: a list of signed spheres, a list of
//! plumbing points joining one positive and one negative sphere, and per point a
//! gluing tag plus the point's position along the equator of each sphere it lies on.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

/// Which local symplectomorphism glues the two cotangent charts at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gluing {
    F,
    G,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sphere {
    pub id: String,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlumbingPoint {
    pub id: String,
    pub a: String,
    pub b: String,
    #[serde(default = "default_gluing")]
    pub gluing: Gluing,
    /// Position along the equator of sphere `a`; defaults to input order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_a: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_b: Option<i64>,
}

fn default_gluing() -> Gluing {
    Gluing::F
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlumbingGraph {
    pub n: u32,
    pub spheres: Vec<Sphere>,
    pub points: Vec<PlumbingPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ZeroDimension,
    DuplicateSphereId { id: String },
    DuplicatePointId { id: String },
    UnknownSphere { point: String, sphere: String },
    SelfPlumbing { point: String },
    SignClash { point: String, sign: Sign },
    DuplicatePosition { sphere: String, position: i64 },
    NoOppositeSign,
    Disconnected { components: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroDimension => write!(f, "dimension must be positive"),
            Violation::DuplicateSphereId { id } => write!(f, "duplicate sphere id {id}"),
            Violation::DuplicatePointId { id } => write!(f, "duplicate point id {id}"),
            Violation::UnknownSphere { point, sphere } => {
                write!(f, "point {point} refers to unknown sphere {sphere}")
            }
            Violation::SelfPlumbing { point } => {
                write!(f, "point {point} joins a sphere to itself")
            }
            Violation::SignClash { point, sign } => {
                write!(f, "point {point} joins two {sign:?} spheres")
            }
            Violation::DuplicatePosition { sphere, position } => {
                write!(f, "two points share position {position} on sphere {sphere}")
            }
            Violation::NoOppositeSign => {
                write!(
                    f,
                    "graph needs at least one positive and one negative sphere joined by a point"
                )
            }
            Violation::Disconnected { components } => {
                write!(f, "incidence graph has {components} components")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlumbingError {
    #[error("invalid plumbing graph: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown sphere {0}")]
    UnknownSphere(String),
    #[error("unknown point {0}")]
    UnknownPoint(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl PlumbingGraph {
    pub fn sphere_index(&self, id: &str) -> Option<usize> {
        self.spheres.iter().position(|s| s.id == id)
    }

    pub fn point_index(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p.id == id)
    }

    pub fn sphere(&self, i: usize) -> &Sphere {
        &self.spheres[i]
    }

    /// Index of the positive sphere through point `p`. Assumes a valid graph.
    pub fn alpha_of(&self, p: usize) -> usize {
        let pt = &self.points[p];
        let a = self.sphere_index(&pt.a).expect("valid graph");
        if self.spheres[a].sign == Sign::Positive {
            a
        } else {
            self.sphere_index(&pt.b).expect("valid graph")
        }
    }

    /// Index of the negative sphere through point `p`. Assumes a valid graph.
    pub fn beta_of(&self, p: usize) -> usize {
        let pt = &self.points[p];
        let a = self.sphere_index(&pt.a).expect("valid graph");
        if self.spheres[a].sign == Sign::Negative {
            a
        } else {
            self.sphere_index(&pt.b).expect("valid graph")
        }
    }

    pub fn point_on_sphere(&self, p: usize, s: usize) -> bool {
        let id = &self.spheres[s].id;
        self.points[p].a == *id || self.points[p].b == *id
    }

    fn position_on(&self, p: usize, s: usize) -> i64 {
        let pt = &self.points[p];
        let id = &self.spheres[s].id;
        let explicit = if pt.a == *id { pt.pos_a } else { pt.pos_b };
        explicit.unwrap_or(p as i64)
    }

    /// Points on sphere `s` in the cyclic order of its equator.
    pub fn cyclic_order(&self, s: usize) -> Vec<usize> {
        let mut pts: Vec<usize> = (0..self.points.len())
            .filter(|&p| self.point_on_sphere(p, s))
            .collect();
        pts.sort_by_key(|&p| (self.position_on(p, s), p));
        pts
    }

    pub fn points_on(&self, s: usize) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&p| self.point_on_sphere(p, s))
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    pub fn ensure_valid(&self) -> Result<(), PlumbingError> {
        let r = validate(self);
        if r.is_valid() {
            Ok(())
        } else {
            Err(PlumbingError::Invalid(r.violations))
        }
    }
}

pub fn validate(graph: &PlumbingGraph) -> ValidationReport {
    let mut violations = Vec::new();
    if graph.n == 0 {
        violations.push(Violation::ZeroDimension);
    }
    let mut seen = BTreeSet::new();
    for s in &graph.spheres {
        if !seen.insert(s.id.as_str()) {
            violations.push(Violation::DuplicateSphereId { id: s.id.clone() });
        }
    }
    let mut seen = BTreeSet::new();
    for p in &graph.points {
        if !seen.insert(p.id.as_str()) {
            violations.push(Violation::DuplicatePointId { id: p.id.clone() });
        }
    }
    let sign_of: BTreeMap<&str, Sign> = graph
        .spheres
        .iter()
        .map(|s| (s.id.as_str(), s.sign))
        .collect();
    let mut positions: BTreeMap<(&str, i64), usize> = BTreeMap::new();
    let mut edges = Vec::new();
    for (i, p) in graph.points.iter().enumerate() {
        let mut ok = true;
        for sid in [&p.a, &p.b] {
            if !sign_of.contains_key(sid.as_str()) {
                violations.push(Violation::UnknownSphere {
                    point: p.id.clone(),
                    sphere: sid.clone(),
                });
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        if p.a == p.b {
            violations.push(Violation::SelfPlumbing {
                point: p.id.clone(),
            });
            continue;
        }
        let (sa, sb) = (sign_of[p.a.as_str()], sign_of[p.b.as_str()]);
        if sa == sb {
            violations.push(Violation::SignClash {
                point: p.id.clone(),
                sign: sa,
            });
        }
        for (sid, pos) in [(&p.a, p.pos_a), (&p.b, p.pos_b)] {
            let pos = pos.unwrap_or(i as i64);
            if positions.insert((sid.as_str(), pos), i).is_some() {
                violations.push(Violation::DuplicatePosition {
                    sphere: sid.clone(),
                    position: pos,
                });
            }
        }
        edges.push((p.a.as_str(), p.b.as_str()));
    }
    let has_pos = graph.spheres.iter().any(|s| s.sign == Sign::Positive);
    let has_neg = graph.spheres.iter().any(|s| s.sign == Sign::Negative);
    if !has_pos || !has_neg || edges.is_empty() {
        violations.push(Violation::NoOppositeSign);
    }
    let components = count_components(graph.spheres.iter().map(|s| s.id.as_str()), &edges);
    if components > 1 {
        violations.push(Violation::Disconnected { components });
    }
    ValidationReport { violations }
}

fn count_components<'a>(
    nodes: impl Iterator<Item = &'a str>,
    edges: &[(&'a str, &'a str)],
) -> usize {
    let nodes: BTreeSet<&str> = nodes.collect();
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen = BTreeSet::new();
    let mut count = 0;
    for &start in &nodes {
        if seen.contains(start) {
            continue;
        }
        count += 1;
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(v) = queue.pop_front() {
            for &w in adj.get(v).into_iter().flatten() {
                if nodes.contains(w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
    }
    count
}

/// The dimension-one plumbing fixed by the anti-diagonal involution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedSurfaceGraph {
    pub graph: PlumbingGraph,
    /// Original sphere id to the id of its equator circle.
    pub provenance: BTreeMap<String, String>,
}

pub fn fixed_surface(graph: &PlumbingGraph) -> Result<FixedSurfaceGraph, PlumbingError> {
    graph.ensure_valid()?;
    let mut g = graph.clone();
    g.n = 1;
    let provenance = graph
        .spheres
        .iter()
        .map(|s| (s.id.clone(), s.id.clone()))
        .collect();
    Ok(FixedSurfaceGraph {
        graph: g,
        provenance,
    })
}

/// Symmetric sphere-by-sphere matrix counting shared plumbing points.
pub fn incidence_matrix(graph: &PlumbingGraph) -> Vec<Vec<u32>> {
    let k = graph.spheres.len();
    let mut m = vec![vec![0u32; k]; k];
    for p in &graph.points {
        if let (Some(a), Some(b)) = (graph.sphere_index(&p.a), graph.sphere_index(&p.b)) {
            if a != b {
                m[a][b] += 1;
                m[b][a] += 1;
            }
        }
    }
    m
}

/// Builders for the small plumbings used throughout tests and examples.
pub mod samples {
    use super::*;

    pub fn sphere(id: &str, sign: Sign) -> Sphere {
        Sphere {
            id: id.to_string(),
            sign,
        }
    }

    pub fn point(id: &str, a: &str, b: &str, gluing: Gluing) -> PlumbingPoint {
        PlumbingPoint {
            id: id.into(),
            a: a.into(),
            b: b.into(),
            gluing,
            pos_a: None,
            pos_b: None,
        }
    }

    /// `P(alpha, beta)` with one point: the punctured torus in dimension one.
    pub fn one_point(n: u32) -> PlumbingGraph {
        PlumbingGraph {
            n,
            spheres: vec![sphere("a", Sign::Positive), sphere("b", Sign::Negative)],
            points: vec![point("p", "a", "b", Gluing::F)],
        }
    }

    /// `P(alpha, beta)` meeting in two points with gluings `(f, f)`.
    pub fn two_point(n: u32) -> PlumbingGraph {
        PlumbingGraph {
            n,
            spheres: vec![sphere("a", Sign::Positive), sphere("b", Sign::Negative)],
            points: vec![
                point("p", "a", "b", Gluing::F),
                point("q", "a", "b", Gluing::F),
            ],
        }
    }

    /// `P(alpha_0, beta_1, beta_2)` with `p` on `beta_1` and `q` on `beta_2`.
    pub fn chain3(n: u32) -> PlumbingGraph {
        PlumbingGraph {
            n,
            spheres: vec![
                sphere("0", Sign::Positive),
                sphere("1", Sign::Negative),
                sphere("2", Sign::Negative),
            ],
            points: vec![
                point("p", "0", "1", Gluing::F),
                point("q", "0", "2", Gluing::F),
            ],
        }
    }

    /// `P(alpha_1, alpha_2, beta_0)` with both points on `beta_0`.
    pub fn chain3_dual(n: u32) -> PlumbingGraph {
        PlumbingGraph {
            n,
            spheres: vec![
                sphere("1", Sign::Positive),
                sphere("2", Sign::Positive),
                sphere("0", Sign::Negative),
            ],
            points: vec![
                point("p", "1", "0", Gluing::F),
                point("q", "2", "0", Gluing::F),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::samples::*;
    use super::*;

    #[test]
    fn two_point_torus_is_valid() {
        assert!(validate(&two_point(2)).is_valid());
        assert_eq!(
            incidence_matrix(&two_point(2)),
            vec![vec![0, 2], vec![2, 0]]
        );
    }

    #[test]
    fn lone_sphere_is_rejected() {
        let g = PlumbingGraph {
            n: 2,
            spheres: vec![sphere("a", Sign::Positive)],
            points: vec![],
        };
        let r = validate(&g);
        assert!(r.violations.contains(&Violation::NoOppositeSign));
    }

    #[test]
    fn same_sign_point_is_a_clash() {
        let g = PlumbingGraph {
            n: 2,
            spheres: vec![sphere("a", Sign::Positive), sphere("c", Sign::Positive)],
            points: vec![point("p", "a", "c", Gluing::F)],
        };
        assert!(matches!(
            validate(&g).violations[0],
            Violation::SignClash { .. }
        ));
    }

    #[test]
    fn chain_incidence_row() {
        assert_eq!(incidence_matrix(&chain3(3))[0], vec![0, 1, 1]);
    }

    #[test]
    fn cyclic_order_respects_positions() {
        let mut g = two_point(1);
        g.points[0].pos_a = Some(5);
        g.points[1].pos_a = Some(1);
        assert_eq!(g.cyclic_order(0), vec![1, 0]);
        assert_eq!(g.cyclic_order(1), vec![0, 1]);
    }
}
