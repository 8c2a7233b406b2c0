//! Limit braids: classifying strands of `Psi^m`, extending prefixes until a
//! trivial-type atom appears, and decay/nesting certificates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diskdecomp::{slot_index, Slot};
use crate::plumbing::PlumbingGraph;
use crate::transfer::{
    geometry_check, r_max, strand_census, AtomKind, FactoredMatrix, GeometryParams, MapAtom,
    TransferError, TransferMatrix,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitsError {
    #[error("prefix is not realizable: {0}")]
    Unrealizable(String),
    #[error("no trivial atom reachable from slot {0}")]
    Unreachable(usize),
    #[error("geometry check failed: {0:?}")]
    Geometry(Vec<String>),
    #[error("period length {len} is not a multiple of the word length {l}")]
    BadPeriod { len: usize, l: usize },
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    DiskBounding,
    Accumulation,
    Undetermined,
}

/// A finite atom sequence of some `Psi^m`, outermost first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrandPrefix {
    pub atoms: Vec<MapAtom>,
    pub radius: f64,
    pub target: Slot,
    pub classification: Classification,
}

impl StrandPrefix {
    pub fn new(atoms: Vec<MapAtom>) -> Option<Self> {
        let target = atoms.first()?.target;
        let radius = atoms.iter().map(|a| a.fiber_scale).product();
        let classification = if atoms.iter().any(|a| a.kind == AtomKind::Trivial) {
            Classification::DiskBounding
        } else {
            Classification::Undetermined
        };
        Some(StrandPrefix {
            atoms,
            radius,
            target,
            classification,
        })
    }

    pub fn labels(&self) -> Vec<String> {
        self.atoms.iter().map(|a| a.label.clone()).collect()
    }
}

/// Checks that consecutive atoms chain and that atom `i` belongs to factor `i mod l`.
fn check_realizable(
    atoms: &[MapAtom],
    offset: usize,
    word: &FactoredMatrix,
) -> Result<(), LimitsError> {
    let l = word.factors.len();
    for (i, a) in atoms.iter().enumerate() {
        let f = &word.factors[(offset + i) % l];
        if !f
            .terms
            .iter()
            .any(|t| t.atoms.len() == 1 && &t.atoms[0] == a)
        {
            return Err(LimitsError::Unrealizable(format!(
                "atom {i} ({}) is not in factor {}",
                a.label,
                (offset + i) % l
            )));
        }
        if i > 0 && atoms[i - 1].source != a.target {
            return Err(LimitsError::Unrealizable(format!(
                "atoms {} and {i} do not chain",
                i - 1
            )));
        }
    }
    Ok(())
}

/// Classifies the eventually periodic strand `prefix · period^∞`.
pub fn classify_strand(
    prefix: &[MapAtom],
    period: &[MapAtom],
    word: &FactoredMatrix,
) -> Result<Classification, LimitsError> {
    let l = word.factors.len();
    if l == 0 || !prefix.len().is_multiple_of(l) {
        return Err(LimitsError::BadPeriod {
            len: prefix.len(),
            l,
        });
    }
    if !period.len().is_multiple_of(l) {
        return Err(LimitsError::BadPeriod {
            len: period.len(),
            l,
        });
    }
    check_realizable(prefix, 0, word)?;
    check_realizable(period, 0, word)?;
    if let (Some(p), Some(q)) = (prefix.last(), period.first()) {
        if p.source != q.target {
            return Err(LimitsError::Unrealizable(
                "period does not continue the prefix".into(),
            ));
        }
    }
    if let (Some(a), Some(b)) = (period.last(), period.first()) {
        if a.source != b.target {
            return Err(LimitsError::Unrealizable("period does not close up".into()));
        }
    }
    let trivial = prefix
        .iter()
        .chain(period)
        .any(|a| a.kind == AtomKind::Trivial);
    Ok(if trivial {
        Classification::DiskBounding
    } else if period.is_empty() {
        Classification::Undetermined
    } else {
        Classification::Accumulation
    })
}

/// The layered transition graph whose nodes are `(factor position, slot)`.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    pub l: usize,
    pub n_slots: usize,
    /// Edges out of node `pos * n_slots + slot`: (atom index in factor, next node).
    edges: Vec<Vec<(usize, usize)>>,
    trivial_out: Vec<bool>,
}

impl TransitionGraph {
    pub fn new(word: &FactoredMatrix) -> Self {
        let l = word.factors.len();
        let n_slots = 4 * word.product.n_points;
        let mut edges = vec![Vec::new(); l * n_slots];
        let mut trivial_out = vec![false; l * n_slots];
        for (pos, f) in word.factors.iter().enumerate() {
            for (ai, t) in f.terms.iter().enumerate() {
                let a = &t.atoms[0];
                let from = pos * n_slots + slot_index(a.target);
                let to = ((pos + 1) % l) * n_slots + slot_index(a.source);
                edges[from].push((ai, to));
                if a.kind == AtomKind::Trivial {
                    trivial_out[from] = true;
                }
            }
        }
        TransitionGraph {
            l,
            n_slots,
            edges,
            trivial_out,
        }
    }

    fn bfs(&self, start: usize) -> Vec<Option<(usize, usize)>> {
        let mut prev = vec![None; self.edges.len()];
        let mut seen = vec![false; self.edges.len()];
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(u) = q.pop_front() {
            for &(ai, v) in &self.edges[u] {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((u, ai));
                    q.push_back(v);
                }
            }
        }
        prev
    }

    /// Longest shortest path between nodes reachable from depth-zero nodes.
    pub fn diameter(&self) -> usize {
        let mut best = 0;
        for s in 0..self.edges.len() {
            let mut dist = vec![usize::MAX; self.edges.len()];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &(_, v) in &self.edges[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        best = best.max(dist[v]);
                        q.push_back(v);
                    }
                }
            }
        }
        best
    }
}

/// Diameter of the slot graph of `Psi` (one edge per term).
pub fn psi_diameter(psi: &TransferMatrix) -> usize {
    let k = 4 * psi.n_points;
    let mut adj = vec![Vec::new(); k];
    for t in &psi.terms {
        adj[slot_index(t.target())].push(slot_index(t.source()));
    }
    let mut best = 0;
    for s in 0..k {
        let mut dist = vec![usize::MAX; k];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    best = best.max(dist[v]);
                    q.push_back(v);
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Approximation {
    Extended {
        strand: StrandPrefix,
        /// Atoms appended after the prefix, the trivial one included.
        n_k: usize,
        atom_diameter: usize,
        psi_diameter: usize,
    },
    /// No sphere has two plumbing points; the limit is handled by spinning.
    SpinningFallback,
}

/// Extends a depth-`k` prefix by the shortest atom path ending in a trivial atom.
pub fn approximate_sequence(
    prefix: &[MapAtom],
    word: &FactoredMatrix,
    graph: &PlumbingGraph,
) -> Result<Approximation, LimitsError> {
    if !(0..graph.spheres.len()).any(|s| graph.points_on(s).len() >= 2) {
        return Ok(Approximation::SpinningFallback);
    }
    let l = word.factors.len();
    if l == 0 || !prefix.len().is_multiple_of(l) {
        return Err(LimitsError::BadPeriod {
            len: prefix.len(),
            l,
        });
    }
    check_realizable(prefix, 0, word)?;
    let tg = TransitionGraph::new(word);
    let atom_diameter = tg.diameter();
    let psi_d = psi_diameter(&word.product);
    if prefix.last().is_some_and(|a| a.kind == AtomKind::Trivial) {
        let strand = StrandPrefix::new(prefix.to_vec()).expect("nonempty");
        return Ok(Approximation::Extended {
            strand,
            n_k: 0,
            atom_diameter,
            psi_diameter: psi_d,
        });
    }
    // the strand's current source side
    let slot = match prefix.last() {
        Some(a) => a.source,
        None => {
            return Err(LimitsError::Unrealizable(
                "empty prefix has no source slot".into(),
            ))
        }
    };
    let start = slot_index(slot);
    let prev = tg.bfs(start);
    let goal = (0..tg.edges.len())
        .filter(|&v| v == start || prev[v].is_some())
        .filter(|&v| tg.trivial_out[v])
        .min_by_key(|&v| (path_len(&prev, v, start), v))
        .ok_or(LimitsError::Unreachable(start))?;
    let mut path = Vec::new();
    let mut v = goal;
    while v != start {
        let (u, ai) = prev[v].expect("on bfs tree");
        path.push((u, ai));
        v = u;
    }
    path.reverse();
    let mut atoms = prefix.to_vec();
    for (u, ai) in path {
        atoms.push(word.factors[u / tg.n_slots].terms[ai].atoms[0].clone());
    }
    let pos = goal / tg.n_slots;
    let s = goal % tg.n_slots;
    let triv = word.factors[pos]
        .terms
        .iter()
        .map(|t| &t.atoms[0])
        .find(|a| a.kind == AtomKind::Trivial && slot_index(a.target) == s)
        .expect("trivial_out marks a trivial atom");
    atoms.push(triv.clone());
    let n_k = atoms.len() - prefix.len();
    let strand = StrandPrefix::new(atoms).expect("nonempty");
    Ok(Approximation::Extended {
        strand,
        n_k,
        atom_diameter,
        psi_diameter: psi_d,
    })
}

fn path_len(prev: &[Option<(usize, usize)>], mut v: usize, start: usize) -> usize {
    let mut n = 0;
    while v != start {
        v = prev[v].expect("reachable").0;
        n += 1;
    }
    n
}

/// Chained all-scaling atom sequences of `k` full periods.
pub fn scaling_prefixes(word: &FactoredMatrix, k: usize) -> Vec<Vec<MapAtom>> {
    let l = word.factors.len();
    let mut out: Vec<Vec<MapAtom>> = vec![Vec::new()];
    for i in 0..k * l {
        let mut next = Vec::new();
        for p in &out {
            for t in &word.factors[i % l].terms {
                let a = &t.atoms[0];
                if a.kind == AtomKind::Scaling && p.last().is_none_or(|b| b.source == a.target) {
                    let mut q = p.clone();
                    q.push(a.clone());
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub depth: usize,
    pub r_max: f64,
    pub bound: f64,
    pub max_radius: f64,
    pub radii_bounded: bool,
    pub nesting: bool,
    pub strands: usize,
    pub pass: bool,
}

/// Certifies radius decay and nesting of the census of `psi` up to depth `m`.
pub fn decay_certificate(
    psi: &TransferMatrix,
    m: usize,
    params: &GeometryParams,
) -> Result<DecayCertificate, LimitsError> {
    let geo = geometry_check(psi, params);
    if !geo.pass {
        return Err(LimitsError::Geometry(geo.failures));
    }
    let rm = r_max(psi);
    if m == 0 {
        return Ok(DecayCertificate {
            depth: 0,
            r_max: rm,
            bound: 1.0,
            max_radius: 1.0,
            radii_bounded: true,
            nesting: true,
            strands: 4 * psi.n_points,
            pass: true,
        });
    }
    let census = strand_census(psi, m as i64)?;
    let mut nesting = true;
    let mut radii_bounded = true;
    let mut max_radius: f64 = 0.0;
    for d in 1..=m {
        let bound = rm.powi(d as i32) * (1.0 + 1e-12);
        let parents = census.level(d - 1);
        for i in census.level(d) {
            let p = census.parent[i] as usize;
            if !parents.contains(&p)
                || !(census.radius[i] < census.radius[p])
                || census.head[i] != census.head[p]
            {
                nesting = false;
            }
            if census.radius[i] > bound {
                radii_bounded = false;
            }
            if d == m {
                max_radius = max_radius.max(census.radius[i]);
            }
        }
    }
    let bound = rm.powi(m as i32);
    Ok(DecayCertificate {
        depth: m,
        r_max: rm,
        bound,
        max_radius,
        radii_bounded,
        nesting,
        strands: census.level(m).len(),
        pass: radii_bounded && nesting,
    })
}
