use penner_core::plumbing::samples::{chain3, chain3_dual, one_point, point, sphere, two_point};
use penner_core::plumbing::{validate, Violation};
use penner_core::twistsys::*;
use penner_core::{Gluing, PlumbingGraph, Sign};
use proptest::prelude::*;

/// `na` alpha spheres, `nb` beta spheres and one point per listed pair.
fn graph(na: usize, nb: usize, pairs: &[(usize, usize)]) -> PlumbingGraph {
    let mut spheres: Vec<_> = (0..na)
        .map(|i| sphere(&format!("a{i}"), Sign::Positive))
        .collect();
    spheres.extend((0..nb).map(|j| sphere(&format!("b{j}"), Sign::Negative)));
    let points = pairs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            point(
                &format!("p{k}"),
                &format!("a{i}"),
                &format!("b{j}"),
                Gluing::F,
            )
        })
        .collect();
    PlumbingGraph {
        n: 2,
        spheres,
        points,
    }
}

/// Which sphere carries the disk at each point after the factors act right to left.
fn simulate(word: &TwistWord, g: &PlumbingGraph, start: &[usize]) -> Vec<usize> {
    let mut at = start.to_vec();
    for f in word.factors.iter().rev() {
        let id = &g.spheres[f.sphere].id;
        for (p, pt) in g.points.iter().enumerate() {
            if &pt.a == id || &pt.b == id {
                at[p] = f.sphere;
            }
        }
    }
    at
}

fn carrier(dc: &DiskChoice, g: &PlumbingGraph, p: usize) -> usize {
    let pt = &g.points[p];
    let id = if dc.disk_on_alpha(p) { &pt.a } else { &pt.b };
    g.sphere_index(id).unwrap()
}

prop_compose! {
    fn plumbing()(na in 1usize..4, nb in 1usize..4)
        (pairs in prop::collection::vec((0..na, 0..nb), 1..7), na in Just(na), nb in Just(nb)) -> PlumbingGraph {
        graph(na, nb, &pairs)
    }
}

fn penner_word(
    g: PlumbingGraph,
    opposite: bool,
) -> impl Strategy<Value = (PlumbingGraph, TwistWord)> {
    let k = g.spheres.len();
    let extra = prop::collection::vec((0..k, 1i32..3), 0..5);
    (
        Just(g),
        Just((0..k).collect::<Vec<_>>()).prop_shuffle(),
        extra,
    )
        .prop_map(move |(g, order, extra)| {
            let o = if opposite {
                Orientation::Opposite
            } else {
                Orientation::Standard
            };
            let sign = |s: usize| o.exponent_sign(g.spheres[s].sign);
            let mut factors: Vec<TwistFactor> = order
                .iter()
                .map(|&s| TwistFactor {
                    sphere: s,
                    exponent: sign(s),
                })
                .collect();
            for (i, (s, e)) in extra.into_iter().enumerate() {
                let at = (i * 7) % (factors.len() + 1);
                factors.insert(
                    at,
                    TwistFactor {
                        sphere: s,
                        exponent: sign(s) * e,
                    },
                );
            }
            (g, TwistWord { factors })
        })
}

proptest! {
    #[test]
    fn every_disk_choice_lands_on_the_invariant_track(
        (g, w) in plumbing().prop_filter("valid", |g| validate(g).is_valid()).prop_flat_map(|g| penner_word(g, false)),
    ) {
        let b = invariant_track(&w, &g).unwrap();
        prop_assert_eq!(sweep_outputs(&w, &g, Orientation::Standard).unwrap(), vec![b.clone()]);
        prop_assert_eq!(apply_word(&w, &b, &g).unwrap(), b.clone());
        let n = g.points.len();
        let start: Vec<usize> = (0..n).map(|p| g.sphere_index(&g.points[p].b).unwrap()).collect();
        let sim = simulate(&w, &g, &start);
        for p in 0..n {
            prop_assert_eq!(carrier(&b, &g, p), sim[p]);
        }
    }

    #[test]
    fn opposite_words_land_on_their_track(
        (g, w) in plumbing().prop_filter("valid", |g| validate(g).is_valid()).prop_flat_map(|g| penner_word(g, true)),
    ) {
        prop_assert_eq!(penner_orientation(&w, &g), Some(Orientation::Opposite));
        let b = invariant_track(&w, &g).unwrap();
        prop_assert_eq!(sweep_outputs(&w, &g, Orientation::Opposite).unwrap(), vec![b]);
    }

    #[test]
    fn display_round_trips((g, w) in plumbing().prop_flat_map(|g| penner_word(g, false))) {
        let text = w.display(&g).to_string();
        prop_assert_eq!(parse_word(&text, &g).unwrap(), w);
    }
}

#[test]
fn running_word_on_sample_graphs() {
    let cases = [
        (one_point(2), "ta sb^-1", vec![DiskSign::Plus]),
        (
            two_point(2),
            "sb^-1 ta",
            vec![DiskSign::Minus, DiskSign::Minus],
        ),
        (
            chain3(2),
            "t0 s1^-1 s2^-1",
            vec![DiskSign::Plus, DiskSign::Plus],
        ),
        (
            chain3_dual(2),
            "s0^-1 t1 t2",
            vec![DiskSign::Minus, DiskSign::Minus],
        ),
    ];
    for (g, text, want) in cases {
        let w = parse_word(text, &g).unwrap();
        assert!(is_generalized_penner(&w, &g).penner);
        assert_eq!(invariant_track(&w, &g).unwrap().signs, want, "{text}");
    }
}

#[test]
fn non_penner_words_have_no_invariant_track() {
    let g = chain3(2);
    for text in ["t0 s1^-1", "t0 s1 s2^-1", "t0^-1 s1^-1 s2^-1"] {
        let w = parse_word(text, &g).unwrap();
        assert!(
            matches!(invariant_track(&w, &g), Err(TwistError::NotPenner(_))),
            "{text}"
        );
    }
}

#[test]
fn validation_reports_each_problem() {
    let mut g = two_point(2);
    g.points[1].b = "a".into();
    assert!(validate(&g)
        .violations
        .contains(&Violation::SelfPlumbing { point: "q".into() }));
    let mut g = two_point(2);
    g.spheres[1].sign = Sign::Positive;
    assert!(validate(&g)
        .violations
        .iter()
        .any(|v| matches!(v, Violation::SignClash { .. })));
    let mut g = two_point(2);
    g.points[1].id = "p".into();
    assert!(validate(&g)
        .violations
        .contains(&Violation::DuplicatePointId { id: "p".into() }));
    let mut g = two_point(0);
    g.points[0].b = "z".into();
    let v = validate(&g).violations;
    assert!(v.contains(&Violation::ZeroDimension));
    assert!(v
        .iter()
        .any(|x| matches!(x, Violation::UnknownSphere { .. })));
    let g = graph(2, 2, &[(0, 0), (1, 1)]);
    assert!(validate(&g)
        .violations
        .contains(&Violation::Disconnected { components: 2 }));
}

#[test]
fn graphs_round_trip_through_json() {
    for g in [one_point(3), two_point(2), chain3(2), chain3_dual(1)] {
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<PlumbingGraph>(&s).unwrap(), g);
    }
}
