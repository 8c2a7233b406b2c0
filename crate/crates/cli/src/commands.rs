use std::collections::BTreeMap;

use penner_core::diskdecomp::{slot_label, slots};
use penner_core::geomlab::{oracle_suite, surgery_isotopy_demo, SuiteOptions, TwistProfile};
use penner_core::lamsolve::*;
use penner_core::limits::{
    approximate_sequence, decay_certificate, psi_diameter, scaling_prefixes, Approximation,
};
use penner_core::plumbing::{fixed_surface, incidence_matrix, validate};
use penner_core::surface::{floer_dims, invariant_weights, stretch_factor, Ribbon};
use penner_core::transfer::{
    counting_matrix, geometry_check, r_max, strand_census_limited, word_matrix, FactoredMatrix,
    StrandCensus,
};
use penner_core::twistsys::{
    invariant_track, parse_word, penner_diagnostics, penner_orientation, sweep_outputs,
};
use penner_core::{DiskChoice, Orientation, PlumbingGraph, Sign, TransferMatrix, TwistWord};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

/// What a command produced and whether its checks passed.
pub struct Outcome {
    pub ok: bool,
    pub result: Value,
}

impl Outcome {
    fn new(ok: bool, result: Value) -> Self {
        Outcome { ok, result }
    }
}

/// Every sphere twisted once in the standard family, positive spheres leftmost.
pub fn default_word(g: &PlumbingGraph) -> String {
    let mut parts = Vec::new();
    for s in g.spheres.iter().filter(|s| s.sign == Sign::Positive) {
        parts.push(format!("t{}", s.id));
    }
    for s in g.spheres.iter().filter(|s| s.sign == Sign::Negative) {
        parts.push(format!("s{}^-1", s.id));
    }
    parts.join(" ")
}

pub fn word(g: &PlumbingGraph, text: Option<&str>) -> Result<(String, TwistWord), CliError> {
    let text = text.map(str::to_string).unwrap_or_else(|| default_word(g));
    let w = parse_word(&text, g)?;
    Ok((text, w))
}

pub fn plumb_validate(g: &PlumbingGraph) -> Outcome {
    let rep = validate(g);
    let ok = rep.is_valid();
    let messages: Vec<String> = rep.violations.iter().map(|v| v.to_string()).collect();
    Outcome::new(
        ok,
        json!({
            "n": g.n,
            "spheres": g.spheres.len(),
            "points": g.points.len(),
            "valid": ok,
            "violations": rep.violations,
            "messages": messages,
        }),
    )
}

pub fn plumb_fixed_surface(g: &PlumbingGraph) -> Result<Outcome, CliError> {
    let fs = fixed_surface(g)?;
    let ids: Vec<&str> = g.spheres.iter().map(|s| s.id.as_str()).collect();
    Ok(Outcome::new(
        true,
        json!({"fixed_surface": fs, "spheres": ids, "incidence": incidence_matrix(g)}),
    ))
}

pub fn twist_check(g: &PlumbingGraph, text: Option<&str>) -> Result<Outcome, CliError> {
    g.ensure_valid()?;
    let (text, w) = word(g, text)?;
    let standard = penner_diagnostics(&w, g, Orientation::Standard);
    let opposite = penner_diagnostics(&w, g, Orientation::Opposite);
    let family = penner_orientation(&w, g);
    let mut sweep = Value::Null;
    let mut constant = false;
    if let Some(o) = family {
        let outs = sweep_outputs(&w, g, o)?;
        let track = invariant_track(&w, g)?;
        constant = outs.len() == 1 && outs[0] == track;
        sweep = json!({
            "choices": 1u64 << g.points.len(),
            "distinct_outputs": outs.iter().map(|d| d.label(g)).collect::<Vec<_>>(),
            "constant": constant,
            "invariant_track": track.label(g),
        });
    }
    Ok(Outcome::new(
        family.is_some() && constant,
        json!({
            "word": text,
            "family": family,
            "standard": standard,
            "opposite": opposite,
            "sweep": sweep,
        }),
    ))
}

pub fn track_invariant(g: &PlumbingGraph, text: Option<&str>) -> Result<Outcome, CliError> {
    g.ensure_valid()?;
    let (text, w) = word(g, text)?;
    let b = invariant_track(&w, g)?;
    Ok(Outcome::new(
        true,
        json!({"word": text, "orientation": b.orientation, "choice": b.to_map(g), "label": b.label(g)}),
    ))
}

fn matrix_json(g: &PlumbingGraph, m: &TransferMatrix) -> Value {
    let mut entries = Vec::new();
    let mut cells: BTreeMap<(usize, usize), Vec<Value>> = BTreeMap::new();
    for t in &m.terms {
        let kinds: Vec<_> = t.atoms.iter().map(|a| a.kind).collect();
        cells
            .entry((
                penner_core::diskdecomp::slot_index(t.target()),
                penner_core::diskdecomp::slot_index(t.source()),
            ))
            .or_default()
            .push(json!({"label": t.label(), "kinds": kinds, "scale": t.scale()}));
    }
    let all = slots(m.n_points);
    for ((row, col), mut terms) in cells {
        terms.sort_by_key(|v| v["label"].as_str().unwrap_or("").to_string());
        entries.push(json!({
            "row": slot_label(g, &m.target, all[row]),
            "col": slot_label(g, &m.source, all[col]),
            "terms": terms,
        }));
    }
    json!({
        "source": m.source.label(g),
        "target": m.target.label(g),
        "rows": all.iter().map(|&s| slot_label(g, &m.target, s)).collect::<Vec<_>>(),
        "cols": all.iter().map(|&s| slot_label(g, &m.source, s)).collect::<Vec<_>>(),
        "entries": entries,
        "counting": counting_matrix(m),
    })
}

pub fn psi(
    g: &PlumbingGraph,
    text: Option<&str>,
    cfg: &RunConfig,
) -> Result<(String, FactoredMatrix), CliError> {
    g.ensure_valid()?;
    let (text, w) = word(g, text)?;
    Ok((text, word_matrix(&w, g, &cfg.geometry)?))
}

pub fn transfer_matrix(
    g: &PlumbingGraph,
    text: Option<&str>,
    factor: Option<usize>,
    cfg: &RunConfig,
) -> Result<Outcome, CliError> {
    let (text, fm) = psi(g, text, cfg)?;
    let m = match factor {
        Some(i) => fm.factors.get(i).ok_or_else(|| {
            CliError::Config(format!(
                "factor {i} out of range: the word has {} unit factors",
                fm.factors.len()
            ))
        })?,
        None => &fm.product,
    };
    let cert = geometry_check(m, &cfg.geometry);
    Ok(Outcome::new(
        cert.pass,
        json!({
            "word": text,
            "factor": factor,
            "factors": fm.factors.len(),
            "matrix": matrix_json(g, m),
            "r_max": r_max(m),
            "certificate": cert,
        }),
    ))
}

pub fn census(
    g: &PlumbingGraph,
    text: Option<&str>,
    cfg: &RunConfig,
) -> Result<(String, FactoredMatrix, StrandCensus), CliError> {
    let (text, fm) = psi(g, text, cfg)?;
    let c = strand_census_limited(&fm.product, cfg.depth as i64, cfg.strand_limit)?;
    Ok((text, fm, c))
}

pub fn transfer_census(
    g: &PlumbingGraph,
    text: Option<&str>,
    cfg: &RunConfig,
) -> Result<Outcome, CliError> {
    let (text, fm, c) = census(g, text, cfg)?;
    let p = &fm.product;
    let labels: Vec<String> = slots(p.n_points)
        .into_iter()
        .map(|s| slot_label(g, &p.target, s))
        .collect();
    let rm = r_max(p);
    let mut levels = Vec::new();
    let mut ok = true;
    for m in 0..=c.depth {
        let counts = c.counts(m);
        let into: BTreeMap<&str, u64> = labels
            .iter()
            .zip(&counts)
            .filter(|(_, &n)| n > 0)
            .map(|(l, &n)| (l.as_str(), n))
            .collect();
        let max_radius = c.level(m).map(|i| c.radius[i]).fold(0.0f64, f64::max);
        let bound = rm.powi(m as i32);
        ok &= max_radius <= bound * (1.0 + 1e-12);
        levels.push(json!({
            "depth": m,
            "strands": counts.iter().sum::<u64>(),
            "into": into,
            "max_radius": max_radius,
            "bound": bound,
        }));
    }
    Ok(Outcome::new(
        ok,
        json!({"word": text, "depth": c.depth, "r_max": rm, "levels": levels}),
    ))
}

pub fn limits_certify(
    g: &PlumbingGraph,
    text: Option<&str>,
    reach: usize,
    cfg: &RunConfig,
) -> Result<Outcome, CliError> {
    let (text, fm) = psi(g, text, cfg)?;
    let cert = decay_certificate(&fm.product, cfg.depth, &cfg.geometry)?;
    let mut levels = Vec::new();
    let mut ok = cert.pass;
    for k in 1..=reach {
        let prefixes = scaling_prefixes(&fm, k);
        let mut max_nk = 0;
        let mut bound = 0;
        let mut spinning = 0;
        for pre in &prefixes {
            match approximate_sequence(pre, &fm, g)? {
                Approximation::Extended {
                    n_k, atom_diameter, ..
                } => {
                    max_nk = max_nk.max(n_k);
                    bound = atom_diameter + 1;
                    ok &= n_k <= bound;
                }
                Approximation::SpinningFallback => spinning += 1,
            }
        }
        levels.push(json!({
            "periods": k,
            "prefixes": prefixes.len(),
            "max_extension": max_nk,
            "bound": bound,
            "spinning_fallback": spinning,
        }));
    }
    Ok(Outcome::new(
        ok,
        json!({
            "word": text,
            "decay": cert,
            "psi_diameter": psi_diameter(&fm.product),
            "reachability": levels,
        }),
    ))
}

fn ribbon(g: &PlumbingGraph) -> Result<Ribbon, CliError> {
    let fs = fixed_surface(g)?;
    Ok(Ribbon::new(&fs.graph)?)
}

pub fn surface_stretch(g: &PlumbingGraph, text: Option<&str>) -> Result<Outcome, CliError> {
    let r = ribbon(g)?;
    let (text, w) = word(g, text)?;
    let rep = stretch_factor(&r, &w)?;
    Ok(Outcome::new(
        rep.converged && rep.root_bracketed,
        json!({"word": text, "stretch": rep}),
    ))
}

pub fn surface_weights(
    g: &PlumbingGraph,
    text: Option<&str>,
    cfg: &RunConfig,
) -> Result<Outcome, CliError> {
    let r = ribbon(g)?;
    let (text, w) = word(g, text)?;
    let rep = invariant_weights(&r, &w)?;
    Ok(Outcome::new(
        rep.residual <= cfg.tolerance.max(1e-9),
        json!({"word": text, "weights": rep}),
    ))
}

pub fn floer(
    g: &PlumbingGraph,
    w0: &str,
    c0: &str,
    w1: &str,
    c1: &str,
) -> Result<Outcome, CliError> {
    let r = ribbon(g)?;
    let word0 = parse_word(w0, g)?;
    let word1 = parse_word(w1, g)?;
    let rep = floer_dims(&r, &word0, r.sphere_index(c0)?, &word1, r.sphere_index(c1)?)?;
    Ok(Outcome::new(
        rep.agrees,
        json!({"word0": w0, "core0": c0, "word1": w1, "core1": c1, "floer": rep}),
    ))
}

pub fn geomlab_check(g: &PlumbingGraph, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = g.n.max(1) as usize;
    let opts = SuiteOptions {
        n,
        samples: cfg.samples,
        epsilon: cfg.epsilon,
        step: cfg.step,
        seed: cfg.seed,
    };
    let suite = oracle_suite(&opts)?;
    let surgery: Vec<_> = [TwistProfile::plateau(), TwistProfile::sloped()]
        .iter()
        .map(|p| surgery_isotopy_demo(n, p, 6, cfg.samples.min(200), cfg.seed))
        .collect();
    let ok = suite.iter().all(|r| r.pass) && surgery.iter().all(|r| r.pass);
    Ok(Outcome::new(
        ok,
        json!({"options": opts, "suite": suite, "surgery": surgery}),
    ))
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LamInput {
    FingerMoves {
        #[serde(default)]
        grid: Option<PolarGrid>,
        #[serde(default = "one")]
        amplitude: f64,
        moves: Vec<FingerMove>,
        #[serde(default)]
        options: Option<SolveOptions>,
        #[serde(default)]
        homotopy_samples: Option<usize>,
    },
    Strands {
        #[serde(default)]
        grid: Option<PolarGrid>,
        strands: Vec<Strand>,
        #[serde(default)]
        families: Vec<FamilySpec>,
        #[serde(default)]
        options: Option<SolveOptions>,
        #[serde(default)]
        homotopy_samples: Option<usize>,
    },
    Tower {
        #[serde(default)]
        grid: Option<PolarGrid>,
        #[serde(default = "eighth")]
        contraction: f64,
        depth: usize,
        levels: Vec<Vec<TowerStrand>>,
    },
    Census {
        #[serde(default)]
        word: Option<String>,
        head: usize,
        depth: usize,
        #[serde(default)]
        grid: Option<PolarGrid>,
        #[serde(default = "eighth")]
        contraction: f64,
    },
}

/// Loops joining two strands: explicit, or the straight isotopy of their difference.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub pair: (usize, usize),
    #[serde(default)]
    pub loops: Option<LoopFamily>,
}

fn one() -> f64 {
    1.0
}

fn eighth() -> f64 {
    0.125
}

fn collection_json(c: &SignedCurveCollection) -> Value {
    let curves: Vec<Value> = c
        .curves
        .iter()
        .map(|x| {
            json!({
                "kind": x.kind,
                "sign": x.sign,
                "ends": x.end_colors(),
                "min_ring": x.min_ring(),
                "markers": x.points.len(),
                "first_angle": x.points.first().map(|m| c.grid.node(m.node)),
            })
        })
        .collect();
    json!({"pair": c.pair, "curves": curves})
}

fn solve_and_check(
    strands: &[Strand],
    cols: &[SignedCurveCollection],
    grid: &PolarGrid,
    opts: &SolveOptions,
    homotopy: Option<usize>,
    tol: f64,
) -> Result<(bool, Value), CliError> {
    let phi = solve_potentials(strands, cols, grid, opts)?;
    let rep = verify(&phi, strands, cols);
    let mut ok = rep.ok(tol);
    let mut h = Value::Null;
    if let Some(n) = homotopy {
        let other = SolveOptions {
            margin: 5.0 * opts.margin,
            radial_weight: 2.0 * opts.radial_weight,
            ..opts.clone()
        };
        let zeta = solve_potentials(strands, cols, grid, &other)?;
        let hr = linear_homotopy(&phi, &zeta, strands, cols, n, tol);
        ok &= hr.feasible;
        h = json!({"samples": n, "feasible": hr.feasible, "worst_min_gradient":
            hr.samples.iter().map(|(_, r)| r.min_gradient).fold(f64::INFINITY, f64::min)});
    }
    Ok((
        ok,
        json!({"iterations": phi.iterations, "centers": phi.centers, "report": rep, "homotopy": h}),
    ))
}

pub fn lamsolve_run(
    g: &PlumbingGraph,
    input: LamInput,
    cfg: &RunConfig,
) -> Result<Outcome, CliError> {
    let tol = cfg.tolerance;
    match input {
        LamInput::FingerMoves {
            grid,
            amplitude,
            moves,
            options,
            homotopy_samples,
        } => {
            let grid = grid.unwrap_or(cfg.grid);
            grid.validate()?;
            let (fam, strands) = finger_move_family(grid, amplitude, &moves);
            let c = collection_from_isotopy(&fam)?;
            let opts = options.unwrap_or_default();
            let cols = [c];
            let (ok, solve) =
                solve_and_check(&strands, &cols, &grid, &opts, homotopy_samples, tol)?;
            let valid = cols[0].is_valid();
            Ok(Outcome::new(
                ok && valid,
                json!({"grid": grid, "collection": collection_json(&cols[0]), "collection_valid": valid, "solve": solve}),
            ))
        }
        LamInput::Strands {
            grid,
            strands,
            families,
            options,
            homotopy_samples,
        } => {
            let grid = grid.unwrap_or(cfg.grid);
            grid.validate()?;
            let mut cols = Vec::new();
            for f in families {
                let (i, j) = f.pair;
                if i >= strands.len() || j >= strands.len() || i == j {
                    return Err(CliError::Config(format!(
                        "family pair ({i}, {j}) does not name two strands"
                    )));
                }
                let loops = match f.loops {
                    Some(l) => l,
                    None => {
                        let (a, b) = (&strands[i], &strands[j]);
                        let d = b.boundary.minus(&a.boundary);
                        LoopFamily::straight(
                            grid,
                            &d,
                            [b.center[0] - a.center[0], b.center[1] - a.center[1]],
                        )
                    }
                };
                cols.push(collection_from_isotopy(&loops)?.for_pair(i, j));
            }
            let opts = options.unwrap_or_default();
            let (ok, solve) =
                solve_and_check(&strands, &cols, &grid, &opts, homotopy_samples, tol)?;
            Ok(Outcome::new(
                ok,
                json!({"grid": grid, "collections": cols.iter().map(collection_json).collect::<Vec<_>>(), "solve": solve}),
            ))
        }
        LamInput::Tower {
            grid,
            contraction,
            depth,
            levels,
        } => {
            let grid = grid.unwrap_or(cfg.grid);
            let rep = nest_disks(&levels, depth, &NestOptions { contraction, grid })?;
            Ok(Outcome::new(rep.passes, json!({"grid": grid, "nest": rep})))
        }
        LamInput::Census {
            word: text,
            head,
            depth,
            grid,
            contraction,
        } => {
            let grid = grid.unwrap_or(PolarGrid {
                nr: 32,
                ntheta: 128,
                r0: 0.1,
            });
            let (text, fm) = psi(g, text.as_deref(), cfg)?;
            let c = strand_census_limited(&fm.product, depth as i64, cfg.strand_limit)?;
            let tower = census_tower(&fm.product, &c, head, depth, grid.ntheta);
            let rep = nest_disks(&tower, depth, &NestOptions { contraction, grid })?;
            Ok(Outcome::new(
                rep.passes,
                json!({"word": text, "head": head, "grid": grid, "nest": rep}),
            ))
        }
    }
}

/// The track a word's matrix lives on, for exports that only need a disk choice.
pub fn track_of(g: &PlumbingGraph, text: Option<&str>) -> Result<DiskChoice, CliError> {
    g.ensure_valid()?;
    let (_, w) = word(g, text)?;
    Ok(invariant_track(&w, g)?)
}
