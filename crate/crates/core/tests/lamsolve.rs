use std::f64::consts::PI;

use penner_core::lamsolve::*;
use penner_core::plumbing::samples::chain3;
use penner_core::transfer::{strand_census, word_matrix, GeometryParams, TransferMatrix};
use penner_core::twistsys::parse_word;
use proptest::prelude::*;

fn fingers() -> Vec<FingerMove> {
    vec![
        FingerMove {
            theta: 0.4,
            threshold: 0.5,
            height: 0.5,
            width: 0.15,
        },
        FingerMove {
            theta: 5.3,
            threshold: 0.75,
            height: 0.5,
            width: 0.15,
        },
        FingerMove {
            theta: 0.95,
            threshold: 0.25,
            height: 0.5,
            width: 0.15,
        },
    ]
}

/// Two strands joined by the straight isotopy through `l1`.
fn two_strands(grid: PolarGrid) -> (Vec<Strand>, SignedCurveCollection) {
    let nt = grid.ntheta;
    let outer: Vec<f64> = (0..nt)
        .map(|k| {
            let t = grid.node(k);
            t.sin() + 0.15 * (3.0 * t).sin()
        })
        .collect();
    let g: Vec<f64> = (0..nt)
        .map(|k| {
            let t = grid.node(k);
            t.sin() + 0.2 * (2.0 * t).cos()
        })
        .collect();
    let l1 = BoundarySection::from_potential(&outer, g).unwrap();
    let s1 = Strand::fitted(l1.clone());
    let fam = LoopFamily::straight(grid, &l1, s1.center);
    let c = collection_from_isotopy(&fam).unwrap();
    (
        vec![
            Strand {
                boundary: BoundarySection::zero(nt),
                center: [0.0, 0.0],
            },
            s1,
        ],
        c,
    )
}

fn running_psi() -> TransferMatrix {
    let g = chain3(2);
    let w = parse_word("t0 s1^-1 s2^-1", &g).unwrap();
    word_matrix(&w, &g, &GeometryParams::default())
        .unwrap()
        .product
}

#[test]
fn finger_moves_become_outer_arcs() {
    let grid = PolarGrid::default();
    let (fam, strands) = finger_move_family(grid, 1.0, &fingers());
    let c = collection_from_isotopy(&fam).unwrap();
    assert!(c.is_valid());
    assert_eq!(c.count(CurveKind::Through), 2);
    assert_eq!(c.count(CurveKind::OuterArc), 3);
    assert_eq!(c.count(CurveKind::InnerArc) + c.count(CurveKind::Circle), 0);
    for arc in c.curves.iter().filter(|x| x.kind == CurveKind::OuterArc) {
        assert_eq!(arc.end_colors(), (Color::Red, Color::Blue));
    }
    // the move that appears last reaches least far inward
    let shallow = c
        .curves
        .iter()
        .filter(|x| x.kind == CurveKind::OuterArc)
        .max_by_key(|x| x.min_ring())
        .unwrap();
    let k = shallow.points[0].node;
    assert!((grid.node(k) - 5.3).abs() < 0.3);
    assert!(shallow.min_ring() >= (0.75 * (grid.nr - 1) as f64) as usize - 2);
    // its crossings lie on the negative radial axis
    assert_eq!(shallow.sign, -1);
    assert!(shallow.points.iter().all(|m| m.sign == -1));
    let mut through: Vec<_> = c
        .curves
        .iter()
        .filter(|x| x.kind == CurveKind::Through)
        .map(|x| (x.sign, x.points[0].color))
        .collect();
    through.sort();
    assert_eq!(through, [(-1, Color::Blue), (1, Color::Red)]);

    let p = solve_potentials(
        &strands,
        std::slice::from_ref(&c),
        &grid,
        &SolveOptions::default(),
    )
    .unwrap();
    let rep = verify(&p, &strands, &[c]);
    assert!(rep.ok(1e-9), "{rep:?}");
    assert!(rep.min_gradient > 1e-4);
}

#[test]
fn straight_isotopy_solves_and_is_convex() {
    let grid = PolarGrid::default();
    let (strands, c) = two_strands(grid);
    assert!(c.is_valid());
    assert_eq!(c.count(CurveKind::Through), 2);
    let phi = solve_potentials(
        &strands,
        std::slice::from_ref(&c),
        &grid,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(verify(&phi, &strands, std::slice::from_ref(&c)).ok(1e-9));
    let other = SolveOptions {
        margin: 5e-4,
        radial_weight: 2.0,
        ..SolveOptions::default()
    };
    let zeta = solve_potentials(&strands, std::slice::from_ref(&c), &grid, &other).unwrap();
    assert!(verify(&zeta, &strands, std::slice::from_ref(&c)).ok(1e-9));
    assert!(linear_homotopy(&phi, &zeta, &strands, &[c], 10, 1e-9).feasible);
}

#[test]
fn different_isotopies_give_homotopic_solutions() {
    let grid = PolarGrid::default();
    let (strands, c) = two_strands(grid);
    let phi = solve_potentials(
        &strands,
        std::slice::from_ref(&c),
        &grid,
        &SolveOptions::default(),
    )
    .unwrap();
    // the same ends joined through an interior circle
    let l1 = strands[1].clone();
    let mut fam = LoopFamily::straight(grid, &l1.boundary, l1.center);
    let bump = |s: f64| {
        if s > 0.3 && s < 0.7 {
            (PI * (s - 0.3) / 0.4).sin().powi(2)
        } else {
            0.0
        }
    };
    let hill = |t: f64| (-((t - 3.0) / 0.15).powi(2)).exp();
    for i in 0..grid.nr {
        let h = 2.0 * bump((grid.radius(i) - grid.r0) / (1.0 - grid.r0));
        for k in 0..grid.ntheta {
            fam.gamma1[i * grid.ntheta + k] +=
                h * (hill(grid.node(k + 1)) - hill(grid.node(k))) / grid.dtheta();
        }
    }
    let c2 = collection_from_isotopy(&fam).unwrap();
    assert!(c2.is_valid());
    assert_eq!(c2.count(CurveKind::Circle), 1);
    let zeta = solve_potentials(
        &strands,
        std::slice::from_ref(&c2),
        &grid,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(verify(&zeta, &strands, &[c2]).ok(1e-9));
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let rep = verify(&phi.blend(&zeta, t), &strands, &[]);
        assert!(rep.boundary_error <= 1e-9 && rep.inner_error <= 1e-9);
        let eta = phi.blend(&zeta, t);
        let mut m = f64::INFINITY;
        for i in 0..grid.nr {
            for k in 0..grid.ntheta {
                let (a, b) = eta.gradient(1, Some(0), i, k);
                m = m.min(a.hypot(b));
            }
        }
        assert!(m > 0.0, "t = {t}");
    }
}

#[test]
fn ill_posed_inputs_are_rejected() {
    let grid = PolarGrid {
        nr: 16,
        ntheta: 64,
        r0: 0.1,
    };
    let opts = SolveOptions::default();
    assert!(matches!(
        solve_potentials(&[], &[], &grid, &opts),
        Err(LamError::NoStrands)
    ));
    let bad = PolarGrid { nr: 3, ..grid };
    let s = Strand::fitted(BoundarySection::zero(64));
    assert!(solve_potentials(std::slice::from_ref(&s), &[], &bad, &opts).is_err());
    let a = Strand::fitted(BoundarySection::constant(0.1, 0.2, 64));
    assert!(matches!(
        solve_potentials(&[s.clone(), a.clone()], &[], &grid, &opts),
        Err(LamError::MissingCollection(..))
    ));
    assert!(matches!(
        solve_potentials(
            &[Strand::fitted(BoundarySection::zero(32))],
            &[],
            &grid,
            &opts
        ),
        Err(LamError::Resolution { .. })
    ));
    // a section joined to itself gives the constant loop at the origin
    let fam = LoopFamily::straight(grid, &s.boundary, s.center);
    assert!(matches!(
        collection_from_isotopy(&fam),
        Err(LamError::OriginTouched { .. })
    ));
}

#[test]
fn negated_collection_is_refused() {
    let grid = PolarGrid {
        nr: 16,
        ntheta: 64,
        r0: 0.1,
    };
    let (fam, strands) = finger_move_family(grid, 1.0, &[]);
    let c = collection_from_isotopy(&fam).unwrap();
    let opts = SolveOptions {
        max_iter: 200,
        ..SolveOptions::default()
    };
    // relabelling the pair describes the same difference
    assert!(solve_potentials(&strands, &[c.reversed()], &grid, &opts).is_ok());
    // the collection of the negated difference contradicts the boundary data
    let mut neg = c.clone();
    for curve in &mut neg.curves {
        curve.sign = -curve.sign;
        for m in &mut curve.points {
            m.sign = -m.sign;
            m.color = if m.color == Color::Red {
                Color::Blue
            } else {
                Color::Red
            };
        }
    }
    let err = solve_potentials(&strands, &[neg], &grid, &opts).unwrap_err();
    assert!(
        matches!(
            err,
            LamError::Inconsistent { .. } | LamError::Infeasible { .. }
        ),
        "{err:?}"
    );
}

#[test]
fn census_tower_nests() {
    let psi = running_psi();
    let census = strand_census(&psi, 3).unwrap();
    for head in [0, 3] {
        let grid = PolarGrid {
            nr: 32,
            ntheta: 128,
            r0: 0.1,
        };
        let tower = census_tower(&psi, &census, head, 3, grid.ntheta);
        assert_eq!(tower.len(), 3);
        let rep = nest_disks(
            &tower,
            3,
            &NestOptions {
                grid,
                ..NestOptions::default()
            },
        )
        .unwrap();
        assert!(rep.passes, "head {head}");
        assert_eq!(rep.solves, tower.iter().map(Vec::len).sum::<usize>());
        for (_, worst, allowed) in &rep.links {
            assert!(worst <= allowed);
        }
        for e in &rep.entries {
            assert!(e.distance <= e.bound);
        }
    }
}

/// Binary tower of constant sections; each child sits `frac` of the way to the
/// edge of its parent's allowance.
fn constant_tower(depth: usize, r: f64, frac: f64, k: usize) -> Vec<Vec<TowerStrand>> {
    let mut levels: Vec<Vec<TowerStrand>> = Vec::new();
    let mut centers = vec![[0.3, -0.2]];
    levels.push(vec![TowerStrand {
        id: "0".into(),
        parent: None,
        boundary: BoundarySection::constant(0.3, -0.2, k),
    }]);
    for m in 2..=depth {
        let allowed = 2.0 * r.powi(m as i32 - 1) - 2.0 * r.powi(m as i32);
        let mut next = Vec::new();
        let mut level = Vec::new();
        for (q, c) in centers.iter().enumerate() {
            for b in 0..2 {
                let (d, a) = (frac * allowed, 0.4 + 2.8 * b as f64);
                let z = [c[0] + d * a.cos(), c[1] + d * a.sin()];
                level.push(TowerStrand {
                    id: format!("{}.{b}", levels[m - 2][q].id),
                    parent: Some(q),
                    boundary: BoundarySection::constant(z[0], z[1], k),
                });
                next.push(z);
            }
        }
        centers = next;
        levels.push(level);
    }
    levels
}

#[test]
fn constant_tower_is_cauchy_to_depth_five() {
    let grid = PolarGrid {
        nr: 16,
        ntheta: 64,
        r0: 0.1,
    };
    let r = 0.125;
    let tower = constant_tower(5, r, 0.9, grid.ntheta);
    let rep = nest_disks(
        &tower,
        5,
        &NestOptions {
            contraction: r,
            grid,
        },
    )
    .unwrap();
    assert!(rep.passes);
    assert_eq!(rep.solves, 31);
    for e in &rep.entries {
        assert!(e.distance <= 4.0 * r.powi(e.m.min(e.n) as i32));
    }
    let one = nest_disks(
        &tower,
        1,
        &NestOptions {
            contraction: r,
            grid,
        },
    )
    .unwrap();
    assert_eq!(one.solves, 1);
    assert!(one.passes && one.links.is_empty());
}

#[test]
fn wide_contraction_is_refused() {
    let psi = running_psi();
    let census = strand_census(&psi, 2).unwrap();
    let grid = PolarGrid {
        nr: 16,
        ntheta: 64,
        r0: 0.1,
    };
    let tower = census_tower(&psi, &census, 0, 2, grid.ntheta);
    let opts = NestOptions {
        contraction: 0.9,
        grid,
    };
    assert!(matches!(
        nest_disks(&tower, 2, &opts),
        Err(LamError::BadContraction(_))
    ));
    // a child far from its parent leaves the parent's tube
    let mut moved = tower.clone();
    moved[1][0].boundary = BoundarySection::constant(3.0, 0.0, grid.ntheta);
    let opts = NestOptions {
        grid,
        ..NestOptions::default()
    };
    assert!(matches!(
        nest_disks(&moved, 2, &opts),
        Err(LamError::Containment { depth: 2, .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_sections_solve_exactly(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let grid = PolarGrid { nr: 12, ntheta: 32, r0: 0.1 };
        let s = Strand::fitted(BoundarySection::constant(a, b, grid.ntheta));
        let p = solve_potentials(std::slice::from_ref(&s), &[], &grid, &SolveOptions::default()).unwrap();
        for i in 0..grid.nr {
            for k in 0..grid.ntheta {
                let (r, t) = (grid.radius(i), grid.node(k));
                prop_assert!((p.value(0, i, k) - (a * r * t.cos() + b * r * t.sin())).abs() < 1e-12);
            }
        }
        prop_assert!(verify(&p, &[s], &[]).ok(1e-9));
    }

    #[test]
    fn exact_part_removes_flux(f in prop::collection::vec(-1.0f64..1.0, 16), g in prop::collection::vec(-1.0f64..1.0, 16)) {
        let (s, flux) = BoundarySection::exact_part(f.clone(), g).unwrap();
        prop_assert!(s.flux().abs() < 1e-12);
        let mean = f.iter().sum::<f64>() / 16.0;
        prop_assert!((flux - mean * 2.0 * PI).abs() < 1e-9);
    }
}
