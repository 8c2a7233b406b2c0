use std::path::PathBuf;
use std::process::{Command, Output};

use penner_core::diskdecomp::decompose;
use penner_core::lamsolve::{BoundarySection, PolarGrid, Strand};
use penner_core::plumbing::samples::{chain3, one_point};
use penner_core::surface::{floer_dims, Ribbon};
use penner_core::transfer::{strand_census, word_matrix, GeometryParams};
use penner_core::twistsys::{invariant_track, parse_word};
use serde_json::Value;

fn penner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_penner"))
        .args(args)
        .output()
        .unwrap()
}

fn report(args: &[&str]) -> Value {
    let out = penner(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name]
        .iter()
        .collect();
    p.display().to_string()
}

#[test]
fn invariant_track_of_the_running_word() {
    let r = report(&[
        "--deterministic",
        "track",
        "invariant",
        "--word",
        "t0 s1^-1 s2^-1",
    ]);
    assert_eq!(r["command"], "track invariant");
    assert_eq!(r["ok"], true);
    assert_eq!(r["result"]["choice"]["p"], "+");
    assert_eq!(r["result"]["choice"]["q"], "+");
    assert!(r.get("elapsed_ms").is_none());
}

#[test]
fn depth_one_census_has_three_strands_into_the_antipodal_disk() {
    let r = report(&["--deterministic", "transfer", "census", "--depth", "1"]);
    let level = &r["result"]["levels"][1];
    assert_eq!(level["depth"], 1);
    assert_eq!(level["into"]["Sbar-:q/whole"], 3);
}

#[test]
fn floer_command_matches_the_surface_module() {
    let g = one_point(1);
    let r = Ribbon::new(&g).unwrap();
    for (w0, c0, w1, c1) in [
        ("ta sb^-1", "a", "ta^-1 sb", "b"),
        ("ta^2 sb^-1", "b", "sb", "a"),
    ] {
        let want = floer_dims(
            &r,
            &parse_word(w0, &g).unwrap(),
            g.sphere_index(c0).unwrap(),
            &parse_word(w1, &g).unwrap(),
            g.sphere_index(c1).unwrap(),
        )
        .unwrap();
        let got = report(&[
            "--sample",
            "one-point",
            "--dim",
            "1",
            "--deterministic",
            "floer",
            "--word0",
            w0,
            "--core0",
            c0,
            "--word1",
            w1,
            "--core1",
            c1,
        ]);
        assert_eq!(got["result"]["floer"]["hf_sum"], want.hf_sum);
        assert_eq!(got["result"]["floer"]["oracle"], want.oracle);
    }
}

#[test]
fn sample_files_match_the_builtin_graphs() {
    for (file, sample) in [("chain3.json", "chain3"), ("one_point.json", "one-point")] {
        let dim = if sample == "chain3" { "2" } else { "1" };
        let a = report(&[
            "--deterministic",
            "--graph",
            &data(file),
            "transfer",
            "matrix",
            "--word",
            if dim == "2" {
                "t0 s1^-1 s2^-1"
            } else {
                "ta sb^-1"
            },
        ]);
        let b = report(&[
            "--deterministic",
            "--sample",
            sample,
            "--dim",
            dim,
            "transfer",
            "matrix",
            "--word",
            if dim == "2" {
                "t0 s1^-1 s2^-1"
            } else {
                "ta sb^-1"
            },
        ]);
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(penner(&["no-such-command"]).status.code(), Some(2));
    let bad = penner(&["--r1", "0.5", "track", "invariant"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("[config] r1 + r2"));
    assert_eq!(
        penner(&["--epsilon", "0", "geomlab", "check"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        penner(&["--nr", "2", "geomlab", "check"]).status.code(),
        Some(2)
    );
    assert_eq!(
        penner(&["--graph", "/nonexistent.json", "plumb", "validate"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        penner(&["limits", "certify", "--reach", "9"]).status.code(),
        Some(2)
    );
    // module errors name their module
    let np = penner(&["track", "invariant", "--word", "t0 s1^-1"]);
    assert_eq!(np.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&np.stderr).starts_with("[twistsys]"));
    let wrong = penner(&[
        "--sample",
        "one-point",
        "floer",
        "--word0",
        "ta",
        "--core0",
        "a",
        "--word1",
        "ta",
        "--core1",
        "b",
    ]);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&wrong.stderr).starts_with("[surface]"));
    // failed checks still print their report
    let nc = penner(&["--deterministic", "twist", "check", "--word", "t0 s1^-1"]);
    assert_eq!(nc.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&nc.stdout).unwrap();
    assert_eq!(v["ok"], false);
    assert_eq!(v["result"]["standard"]["missing_spheres"][0], "2");
}

#[test]
fn invalid_graphs_fail_validation() {
    let dir = std::env::temp_dir().join(format!("penner-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut g = chain3(2);
    g.points[1].b = "0".into();
    let path = dir.join("bad.json");
    std::fs::write(&path, serde_json::to_string(&g).unwrap()).unwrap();
    let out = penner(&[
        "--deterministic",
        "--graph",
        path.to_str().unwrap(),
        "plumb",
        "validate",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["valid"], false);
    let out = penner(&["--graph", path.to_str().unwrap(), "transfer", "matrix"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("[plumbing]"));
}

#[test]
fn output_flag_writes_the_report() {
    let path = std::env::temp_dir().join(format!("penner-out-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let out = penner(&["--deterministic", "-o", p, "plumb", "validate"]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["valid"], true);
}

#[test]
fn timing_appears_without_the_deterministic_flag() {
    let r = report(&["plumb", "validate"]);
    assert!(r["elapsed_ms"].is_u64());
}

#[test]
fn decomposition_export_uses_the_part_ids() {
    let g = chain3(2);
    let w = parse_word("t0 s1^-1 s2^-1", &g).unwrap();
    let b = invariant_track(&w, &g).unwrap();
    let out = penner(&["export", "--kind", "decomposition", "--format", "dot"]);
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("graph decomposition {"));
    let parts = decompose(&b, &g);
    for p in &parts {
        assert!(dot.contains(&format!("\"{}\" [shape=", p.id)), "{}", p.id);
    }
    // every edge joins two declared parts
    for line in dot.lines().filter(|l| l.contains(" -- ")) {
        for end in line.trim().trim_end_matches(';').split(" -- ") {
            assert!(
                parts.iter().any(|p| format!("\"{}\"", p.id) == end),
                "{line}"
            );
        }
    }
    let csv =
        String::from_utf8(penner(&["export", "--kind", "decomposition", "--format", "csv"]).stdout)
            .unwrap();
    assert_eq!(csv.lines().count(), parts.len() + 1);
}

#[test]
fn matrix_and_census_exports_have_one_line_per_item() {
    let g = chain3(2);
    let w = parse_word("t0 s1^-1 s2^-1", &g).unwrap();
    let psi = word_matrix(&w, &g, &GeometryParams::default())
        .unwrap()
        .product;
    let dot = String::from_utf8(penner(&["export", "--kind", "matrix"]).stdout).unwrap();
    assert_eq!(
        dot.lines().filter(|l| l.contains(" -> ")).count(),
        psi.terms.len()
    );
    assert!(dot.contains("kind=\"scaling"));
    let csv = String::from_utf8(
        penner(&[
            "--depth", "2", "export", "--kind", "census", "--format", "csv",
        ])
        .stdout,
    )
    .unwrap();
    let census = strand_census(&psi, 2).unwrap();
    let strands: usize = (1..=2).map(|m| census.level(m).len()).sum();
    assert_eq!(csv.lines().count(), strands + 1);
    assert_eq!(csv.lines().next(), Some("strand,depth,disk,radius"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.iter().all(|r| r.split(',').count() == 4));
}

#[test]
fn lamsolve_runs_from_files() {
    let r = report(&[
        "--deterministic",
        "lamsolve",
        "run",
        "--input",
        &data("finger_moves.json"),
    ]);
    assert_eq!(r["ok"], true);
    let curves = r["result"]["collection"]["curves"].as_array().unwrap();
    assert_eq!(
        curves.iter().filter(|c| c["kind"] == "outer_arc").count(),
        3
    );
    assert_eq!(r["result"]["solve"]["homotopy"]["feasible"], true);
}

#[test]
fn lamsolve_straight_family_between_two_strands() {
    let grid = PolarGrid {
        nr: 16,
        ntheta: 64,
        r0: 0.1,
    };
    let outer: Vec<f64> = (0..64)
        .map(|k| grid.node(k).sin() + 0.15 * (3.0 * grid.node(k)).sin())
        .collect();
    let g: Vec<f64> = (0..64)
        .map(|k| grid.node(k).sin() + 0.2 * (2.0 * grid.node(k)).cos())
        .collect();
    let l1 = Strand::fitted(BoundarySection::from_potential(&outer, g).unwrap());
    let zero = Strand {
        boundary: BoundarySection::zero(64),
        center: [0.0, 0.0],
    };
    let input = serde_json::json!({
        "kind": "strands",
        "grid": grid,
        "strands": [zero, l1],
        "families": [{"pair": [0, 1]}],
        "homotopy_samples": 10,
    });
    let path = std::env::temp_dir().join(format!("penner-strands-{}.json", std::process::id()));
    std::fs::write(&path, input.to_string()).unwrap();
    let r = report(&[
        "--deterministic",
        "lamsolve",
        "run",
        "--input",
        path.to_str().unwrap(),
    ]);
    assert_eq!(r["ok"], true, "{r}");
    assert!(
        r["result"]["solve"]["report"]["min_gradient"]
            .as_f64()
            .unwrap()
            > 0.0
    );
    assert_eq!(r["result"]["solve"]["homotopy"]["feasible"], true);
}
