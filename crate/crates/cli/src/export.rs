//! DOT and CSV renderings of matrices, censuses and track decompositions.

use std::fmt::Write;

use penner_core::diskdecomp::{decompose, slot_index, slot_label, slots, Flavor, PartKind};
use penner_core::transfer::StrandCensus;
use penner_core::{DiskChoice, PlumbingGraph, TransferMatrix};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn kinds(t: &penner_core::Term) -> String {
    t.atoms
        .iter()
        .map(|a| format!("{:?}", a.kind).to_lowercase())
        .collect::<Vec<_>>()
        .join("+")
}

/// One node per slot and one edge per term, source slot to target slot.
pub fn matrix_dot(g: &PlumbingGraph, m: &TransferMatrix) -> String {
    let mut out = String::from("digraph transfer {\n  rankdir=LR;\n");
    for s in slots(m.n_points) {
        let i = slot_index(s);
        let _ = writeln!(
            out,
            "  src{i} [label={}, shape=box];",
            quote(&slot_label(g, &m.source, s))
        );
        let _ = writeln!(
            out,
            "  dst{i} [label={}, shape=box];",
            quote(&slot_label(g, &m.target, s))
        );
    }
    for t in &m.terms {
        let _ = writeln!(
            out,
            "  src{} -> dst{} [label={}, kind={}];",
            slot_index(t.source()),
            slot_index(t.target()),
            quote(&t.label()),
            quote(&kinds(t))
        );
    }
    out.push_str("}\n");
    out
}

pub fn matrix_csv(g: &PlumbingGraph, m: &TransferMatrix) -> String {
    let mut out = String::from("term,source,target,label,kinds,scale\n");
    for (i, t) in m.terms.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            csv_field(&slot_label(g, &m.source, t.source())),
            csv_field(&slot_label(g, &m.target, t.target())),
            csv_field(&t.label()),
            kinds(t),
            t.scale()
        );
    }
    out
}

/// Strands deepest-last, each with the disk it lands in and its fiber radius.
pub fn census_csv(g: &PlumbingGraph, psi: &TransferMatrix, c: &StrandCensus) -> String {
    let all = slots(psi.n_points);
    let labels: Vec<String> = all.iter().map(|&s| slot_label(g, &psi.target, s)).collect();
    let mut out = String::from("strand,depth,disk,radius\n");
    for m in 1..=c.depth {
        for i in c.level(m) {
            let _ = writeln!(
                out,
                "{},{m},{},{}",
                c.strand_id(i),
                csv_field(&labels[c.head[i] as usize]),
                c.radius[i]
            );
        }
    }
    out
}

/// The prefix tree of the census, one node per strand.
pub fn census_dot(g: &PlumbingGraph, psi: &TransferMatrix, c: &StrandCensus) -> String {
    let all = slots(psi.n_points);
    let mut out = String::from("digraph census {\n");
    for i in c.level(0) {
        let label = slot_label(g, &psi.target, all[c.head[i] as usize]);
        let _ = writeln!(
            out,
            "  {} [label={}, shape=box];",
            quote(&c.strand_id(i)),
            quote(&label)
        );
    }
    for m in 1..=c.depth {
        for i in c.level(m) {
            let id = c.strand_id(i);
            let _ = writeln!(
                out,
                "  {} [label={}];",
                quote(&id),
                quote(&format!("{id} r={}", c.radius[i]))
            );
            let _ = writeln!(
                out,
                "  {} -> {};",
                quote(&c.strand_id(c.parent[i] as usize)),
                quote(&id)
            );
        }
    }
    out.push_str("}\n");
    out
}

/// Adjacency of the decomposition parts: complement to neck, neck to disk,
/// complement to the antipodal disk on its sphere.
pub fn decomposition_edges(g: &PlumbingGraph, dc: &DiskChoice) -> Vec<(String, String)> {
    let parts = decompose(dc, g);
    let mut edges = Vec::new();
    for (p, pt) in g.points.iter().enumerate() {
        let neck = format!("N:{}", pt.id);
        for s in [&pt.a, &pt.b] {
            edges.push((format!("C:{s}"), neck.clone()));
        }
        if let Some(d) = parts
            .iter()
            .find(|x| x.kind == PartKind::Disk && x.anchor == pt.id)
        {
            edges.push((neck.clone(), d.id.clone()));
        }
        for s in [g.alpha_of(p), g.beta_of(p)] {
            let sphere = g.sphere(s);
            let bar = match Flavor::bar_on(sphere.sign) {
                Flavor::BarPlus => "+",
                _ => "-",
            };
            edges.push((format!("C:{}", sphere.id), format!("Dbar{bar}:{}", pt.id)));
        }
    }
    edges
}

pub fn decomposition_dot(g: &PlumbingGraph, dc: &DiskChoice) -> String {
    let mut out = String::from("graph decomposition {\n");
    for part in decompose(dc, g) {
        let shape = match part.kind {
            PartKind::SphereComplement => "ellipse",
            PartKind::Neck => "diamond",
            PartKind::Disk => "box",
            PartKind::AntipodalDisk => "box, style=dashed",
        };
        let _ = writeln!(out, "  {} [shape={shape}];", quote(&part.id));
    }
    for (a, b) in decomposition_edges(g, dc) {
        let _ = writeln!(out, "  {} -- {};", quote(&a), quote(&b));
    }
    out.push_str("}\n");
    out
}

pub fn decomposition_csv(g: &PlumbingGraph, dc: &DiskChoice) -> String {
    let mut out = String::from("id,kind,anchor,sign\n");
    for part in decompose(dc, g) {
        let sign = part
            .sign
            .map(|s| s.symbol().to_string())
            .unwrap_or_default();
        let kind = serde_json::to_value(part.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{kind},{},{sign}",
            csv_field(&part.id),
            csv_field(&part.anchor)
        );
    }
    out
}
