//! Combinatorial decomposition of a branched track into parts, singular disks and
//! regular disks.
//!
//! Disks are tokens; their radii and charts only exist in the numerical layer.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::plumbing::{PlumbingGraph, Sign};
use crate::twistsys::{DiskChoice, DiskSign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    SphereComplement,
    Neck,
    Disk,
    AntipodalDisk,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrackPart {
    pub id: String,
    pub kind: PartKind,
    /// Sphere id for complements, point id otherwise.
    pub anchor: String,
    pub sign: Option<DiskSign>,
}

/// The parts `alpha_i'`, `beta_j'`, and per point `N_p`, `D_p`, `D̄_p^+`, `D̄_p^-`.
pub fn decompose(dc: &DiskChoice, graph: &PlumbingGraph) -> Vec<TrackPart> {
    let mut parts: Vec<TrackPart> = graph
        .spheres
        .iter()
        .map(|s| TrackPart {
            id: format!("C:{}", s.id),
            kind: PartKind::SphereComplement,
            anchor: s.id.clone(),
            sign: None,
        })
        .collect();
    for (p, pt) in graph.points.iter().enumerate() {
        let s = dc.signs[p];
        parts.push(TrackPart {
            id: format!("N:{}", pt.id),
            kind: PartKind::Neck,
            anchor: pt.id.clone(),
            sign: None,
        });
        parts.push(TrackPart {
            id: format!("D{}:{}", s.symbol(), pt.id),
            kind: PartKind::Disk,
            anchor: pt.id.clone(),
            sign: Some(s),
        });
        for bar in [DiskSign::Plus, DiskSign::Minus] {
            parts.push(TrackPart {
                id: format!("Dbar{}:{}", bar.symbol(), pt.id),
                kind: PartKind::AntipodalDisk,
                anchor: pt.id.clone(),
                sign: Some(bar),
            });
        }
    }
    parts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// `S_p`, carrying the track's sign at `p`; it contains the branch locus.
    Branch(DiskSign),
    /// `S̄_p^+`, centered at the antipode of `p` on the positive sphere.
    BarPlus,
    /// `S̄_p^-`, centered at the antipode of `p` on the negative sphere.
    BarMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Center {
    Point,
    TauImage,
    SigmaInvImage,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SingularDisk {
    pub id: String,
    pub point: usize,
    pub flavor: Flavor,
    pub center: Center,
    pub on_branch_locus: bool,
}

impl Flavor {
    pub fn center(self) -> Center {
        match self {
            Flavor::Branch(_) => Center::Point,
            Flavor::BarPlus => Center::TauImage,
            Flavor::BarMinus => Center::SigmaInvImage,
        }
    }

    /// The antipodal flavor on the sphere of sign `s`.
    pub fn bar_on(s: Sign) -> Flavor {
        match s {
            Sign::Positive => Flavor::BarPlus,
            Sign::Negative => Flavor::BarMinus,
        }
    }

    fn family(self) -> u8 {
        match self {
            Flavor::Branch(_) => 0,
            Flavor::BarPlus => 1,
            Flavor::BarMinus => 2,
        }
    }
}

pub fn disk_id(graph: &PlumbingGraph, point: usize, flavor: Flavor) -> String {
    let pid = &graph.points[point].id;
    match flavor {
        Flavor::Branch(s) => format!("S{}:{pid}", s.symbol()),
        Flavor::BarPlus => format!("Sbar+:{pid}"),
        Flavor::BarMinus => format!("Sbar-:{pid}"),
    }
}

/// Three disks per point, in the order `S_p`, `S̄_p^+`, `S̄_p^-`.
pub fn singular_disks(dc: &DiskChoice, graph: &PlumbingGraph) -> Vec<SingularDisk> {
    let mut out = Vec::with_capacity(3 * graph.points.len());
    for p in 0..graph.points.len() {
        for flavor in [
            Flavor::Branch(dc.signs[p]),
            Flavor::BarPlus,
            Flavor::BarMinus,
        ] {
            out.push(SingularDisk {
                id: disk_id(graph, p, flavor),
                point: p,
                flavor,
                center: flavor.center(),
                on_branch_locus: matches!(flavor, Flavor::Branch(_)),
            });
        }
    }
    out
}

/// Position of a disk in the per-track ordering used by transfer matrices.
pub fn disk_index(point: usize, flavor: Flavor) -> usize {
    3 * point + flavor.family() as usize
}

/// The strand groups a disk's boundary braid splits into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    /// Strands carried through the sheet the disk sits in.
    Tilde,
    /// Strands arriving through the fiber interior.
    Bar,
    /// The undivided braid of a disk off the branch locus.
    Whole,
}

/// A `(disk, group)` index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub disk: usize,
    pub group: Group,
}

/// All slots of a track with `n_points` points: four per point.
pub fn slots(n_points: usize) -> Vec<Slot> {
    let mut out = Vec::with_capacity(4 * n_points);
    for p in 0..n_points {
        out.push(Slot {
            disk: 3 * p,
            group: Group::Tilde,
        });
        out.push(Slot {
            disk: 3 * p,
            group: Group::Bar,
        });
        out.push(Slot {
            disk: 3 * p + 1,
            group: Group::Whole,
        });
        out.push(Slot {
            disk: 3 * p + 2,
            group: Group::Whole,
        });
    }
    out
}

pub fn slot_index(slot: Slot) -> usize {
    let p = slot.disk / 3;
    4 * p
        + match (slot.disk % 3, slot.group) {
            (0, Group::Tilde) => 0,
            (0, _) => 1,
            (1, _) => 2,
            _ => 3,
        }
}

pub fn slot_label(graph: &PlumbingGraph, dc: &DiskChoice, slot: Slot) -> String {
    let disks = singular_disks(dc, graph);
    let g = match slot.group {
        Group::Tilde => "tilde",
        Group::Bar => "bar",
        Group::Whole => "whole",
    };
    format!("{}/{g}", disks[slot.disk].id)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularDisk {
    pub id: String,
    pub parts: Vec<String>,
    pub adjacent: Vec<String>,
}

/// Regular pieces in the one-dimensional shadow.
///
/// On each sphere circle the plumbing points and their antipodes are marked; every
/// gap between consecutive marks is one piece, and every neck leaves one piece
/// outside its branch disk. A sphere with no points is cut into two hemispheres.
pub fn regular_disks(dc: &DiskChoice, graph: &PlumbingGraph) -> Vec<RegularDisk> {
    let mut out = Vec::new();
    for (s, sphere) in graph.spheres.iter().enumerate() {
        let order = graph.cyclic_order(s);
        let part = format!("C:{}", sphere.id);
        if order.is_empty() {
            for h in ["north", "south"] {
                out.push(RegularDisk {
                    id: format!("R:{}:{h}", sphere.id),
                    parts: vec![part.clone()],
                    adjacent: vec![],
                });
            }
            continue;
        }
        let bar = Flavor::bar_on(sphere.sign);
        let marks: Vec<String> = order
            .iter()
            .map(|&p| disk_id(graph, p, Flavor::Branch(dc.signs[p])))
            .chain(order.iter().map(|&p| disk_id(graph, p, bar)))
            .collect();
        for i in 0..marks.len() {
            let next = &marks[(i + 1) % marks.len()];
            out.push(RegularDisk {
                id: format!("R:{}:{i}", sphere.id),
                parts: vec![part.clone()],
                adjacent: vec![marks[i].clone(), next.clone()],
            });
        }
    }
    for (p, pt) in graph.points.iter().enumerate() {
        out.push(RegularDisk {
            id: format!("R:N:{}", pt.id),
            parts: vec![format!("N:{}", pt.id)],
            adjacent: vec![disk_id(graph, p, Flavor::Branch(dc.signs[p]))],
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub singular: Vec<SingularDisk>,
    pub regular: Vec<RegularDisk>,
}

pub fn canonical_decomposition(dc: &DiskChoice, graph: &PlumbingGraph) -> Decomposition {
    Decomposition {
        singular: singular_disks(dc, graph),
        regular: regular_disks(dc, graph),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: u8,
    pub name: String,
    pub pass: bool,
    pub detail: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub conditions: Vec<ConditionResult>,
}

impl DecompositionReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn condition(&self, k: u8) -> &ConditionResult {
        &self.conditions[(k - 1) as usize]
    }
}

/// Verifies the five conditions a singular/regular decomposition must satisfy.
pub fn check_decomposition(
    dc: &DiskChoice,
    graph: &PlumbingGraph,
    dec: &Decomposition,
) -> DecompositionReport {
    let mut conds = Vec::new();

    // 1. every singular value sits inside some singular disk
    let mut d1 = Vec::new();
    for p in 0..graph.points.len() {
        for need in [
            Flavor::Branch(dc.signs[p]),
            Flavor::BarPlus,
            Flavor::BarMinus,
        ] {
            let found = dec
                .singular
                .iter()
                .any(|d| d.point == p && d.flavor.family() == need.family());
            if !found {
                d1.push(format!("no disk around {}", disk_id(graph, p, need)));
            }
        }
    }
    conds.push(cond(1, "singular values covered", d1));

    // 2. each disk lies in one sector, matching the track, one per slot
    let mut d2 = Vec::new();
    let mut per_family: BTreeMap<(usize, u8), usize> = BTreeMap::new();
    for d in &dec.singular {
        if d.point >= graph.points.len() {
            d2.push(format!("{} refers to a missing point", d.id));
            continue;
        }
        *per_family.entry((d.point, d.flavor.family())).or_default() += 1;
        if let Flavor::Branch(s) = d.flavor {
            if s != dc.signs[d.point] {
                d2.push(format!("{} disagrees with the track sign", d.id));
            }
        }
        if d.center != d.flavor.center()
            || d.on_branch_locus != matches!(d.flavor, Flavor::Branch(_))
        {
            d2.push(format!("{} has inconsistent center or locus flag", d.id));
        }
    }
    for ((p, fam), count) in &per_family {
        if *count > 1 {
            d2.push(format!(
                "{count} disks share flavor {fam} at point {}",
                graph.points[*p].id
            ));
        }
    }
    conds.push(cond(2, "disks placed in sectors", d2));

    // 3. pairwise disjoint: centers are distinct
    let mut d3 = Vec::new();
    let mut centers = BTreeSet::new();
    for d in &dec.singular {
        if !centers.insert((d.point, d.center)) {
            d3.push(format!("{} overlaps another disk", d.id));
        }
    }
    conds.push(cond(3, "singular disks disjoint", d3));

    // 4. regular pieces tile the rest
    let mut d4 = Vec::new();
    let expected = regular_disks(dc, graph);
    let have: BTreeSet<&str> = dec.regular.iter().map(|r| r.id.as_str()).collect();
    for r in &expected {
        if !have.contains(r.id.as_str()) {
            d4.push(format!("missing regular piece {}", r.id));
        }
    }
    let known: BTreeSet<&str> = dec.singular.iter().map(|d| d.id.as_str()).collect();
    for r in &dec.regular {
        for a in &r.adjacent {
            if !known.contains(a.as_str()) {
                d4.push(format!("{} borders unknown disk {a}", r.id));
            }
        }
    }
    conds.push(cond(4, "regular pieces tile the complement", d4));

    // 5. regular pieces meet singular disks only along boundaries
    let mut d5 = Vec::new();
    let parts: BTreeMap<String, PartKind> = decompose(dc, graph)
        .into_iter()
        .map(|p| (p.id, p.kind))
        .collect();
    for r in &dec.regular {
        for part in &r.parts {
            match parts.get(part) {
                Some(PartKind::Disk) | Some(PartKind::AntipodalDisk) => {
                    d5.push(format!("{} overlaps the interior of {part}", r.id))
                }
                None if known.contains(part.as_str()) => {
                    d5.push(format!("{} overlaps singular disk {part}", r.id))
                }
                None => d5.push(format!("{} covers unknown part {part}", r.id)),
                _ => {}
            }
        }
    }
    conds.push(cond(5, "boundary-only meetings", d5));

    DecompositionReport { conditions: conds }
}

fn cond(k: u8, name: &str, detail: Vec<String>) -> ConditionResult {
    ConditionResult {
        condition: k,
        name: name.to_string(),
        pass: detail.is_empty(),
        detail,
    }
}

/// A carried class seen through its strand counts on the singular disks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarriedClass {
    pub carrier: DiskChoice,
    /// Keys `sheet:tilde:<p>`, `sheet:bar:<p>`, `full:<p>`, `bar+:<p>`, `bar-:<p>`.
    pub sector_counts: BTreeMap<String, u64>,
    /// Singular components, each located in a singular disk (by id).
    pub markers: Vec<String>,
}

impl CarriedClass {
    /// Builds the class from per-slot counts in the order of [`slots`].
    pub fn from_slot_counts(carrier: &DiskChoice, graph: &PlumbingGraph, counts: &[u64]) -> Self {
        let mut sector_counts = BTreeMap::new();
        for (p, pt) in graph.points.iter().enumerate() {
            let c = &counts[4 * p..4 * p + 4];
            sector_counts.insert(format!("sheet:tilde:{}", pt.id), c[0]);
            sector_counts.insert(format!("sheet:bar:{}", pt.id), c[1]);
            sector_counts.insert(format!("full:{}", pt.id), c[0] + c[1]);
            sector_counts.insert(format!("bar+:{}", pt.id), c[2]);
            sector_counts.insert(format!("bar-:{}", pt.id), c[3]);
        }
        let markers = singular_disks(carrier, graph)
            .into_iter()
            .map(|d| d.id)
            .collect();
        CarriedClass {
            carrier: carrier.clone(),
            sector_counts,
            markers,
        }
    }

    /// Switch condition at each branch locus component and marker placement.
    pub fn switch_ok(&self, graph: &PlumbingGraph) -> bool {
        let disks: BTreeSet<String> = singular_disks(&self.carrier, graph)
            .into_iter()
            .map(|d| d.id)
            .collect();
        let markers_ok = self.markers.iter().all(|m| disks.contains(m));
        let sums_ok = graph.points.iter().all(|pt| {
            let get = |k: &str| self.sector_counts.get(&format!("{k}:{}", pt.id)).copied();
            match (get("full"), get("sheet:tilde"), get("sheet:bar")) {
                (Some(f), Some(t), Some(b)) => f == t + b,
                _ => false,
            }
        });
        markers_ok && sums_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plumbing::samples::*;
    use crate::twistsys::Orientation;

    #[test]
    fn part_counts() {
        let g = one_point(2);
        let dc = DiskChoice::uniform(Orientation::Standard, 1, DiskSign::Plus);
        assert_eq!(decompose(&dc, &g).len(), 6);
        let g = chain3(2);
        let dc = DiskChoice::uniform(Orientation::Standard, 2, DiskSign::Plus);
        assert_eq!(decompose(&dc, &g).len(), 11);
    }

    #[test]
    fn running_example_disk_list() {
        let g = chain3(2);
        let dc = DiskChoice::uniform(Orientation::Standard, 2, DiskSign::Plus);
        let ids: Vec<String> = singular_disks(&dc, &g).into_iter().map(|d| d.id).collect();
        assert_eq!(
            ids,
            ["S+:p", "Sbar+:p", "Sbar-:p", "S+:q", "Sbar+:q", "Sbar-:q"]
        );
    }

    #[test]
    fn canonical_decomposition_passes() {
        let g = chain3(2);
        let dc = DiskChoice::uniform(Orientation::Standard, 2, DiskSign::Plus);
        let dec = canonical_decomposition(&dc, &g);
        assert!(check_decomposition(&dc, &g, &dec).all_pass());
    }

    #[test]
    fn one_point_regular_pieces() {
        let g = one_point(1);
        let dc = DiskChoice::uniform(Orientation::Standard, 1, DiskSign::Plus);
        let r = regular_disks(&dc, &g);
        assert_eq!(r.len(), 5);
        assert_eq!(r.iter().filter(|x| x.parts == ["C:a"]).count(), 2);
        assert_eq!(r.iter().filter(|x| x.parts == ["N:p"]).count(), 1);
    }

    #[test]
    fn slot_indexing_roundtrip() {
        for (i, s) in slots(3).into_iter().enumerate() {
            assert_eq!(slot_index(s), i);
        }
    }
}
