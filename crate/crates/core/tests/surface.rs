use num_bigint::BigInt;
use num_rational::BigRational;
use penner_core::plumbing::samples::{one_point, two_point};
use penner_core::surface::*;
use penner_core::twistsys::parse_word;
use penner_core::{Orientation, PlumbingGraph};
use proptest::prelude::*;

fn golden_square() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

/// Growth of the crossing count of an iterated curve with the other core: the last
/// of at most `steps` ratios, stopping once the curve is long.
fn growth(g: &PlumbingGraph, text: &str, start: usize, steps: usize) -> f64 {
    let r = Ribbon::new(g).unwrap();
    let w = parse_word(text, g).unwrap();
    let other = r.core(1 - start);
    let mut c = r.core(start);
    let mut prev = r.intersection(&c, &other) as f64;
    let mut ratio = 0.0;
    for _ in 0..steps {
        c = r.apply_word(&w, &c);
        let i = r.intersection(&c, &other) as f64;
        ratio = i / prev;
        prev = i;
        if c.len() > 100_000 {
            break;
        }
    }
    ratio
}

#[test]
fn golden_stretch_factor() {
    let g = one_point(1);
    let r = Ribbon::new(&g).unwrap();
    let s = stretch_factor(&r, &parse_word("ta sb^-1", &g).unwrap()).unwrap();
    assert!((s.lambda - golden_square()).abs() < 1e-9);
    assert!(s.converged && s.root_bracketed);
    assert!((growth(&g, "ta sb^-1", 1, 12) - golden_square()).abs() < 1e-6);
}

#[test]
fn stretch_matches_curve_growth() {
    let cases = [
        (one_point(1), "ta sb^-1"),
        (one_point(1), "ta^2 sb^-1"),
        (two_point(1), "ta sb^-1"),
        (two_point(1), "ta^2 sb^-3"),
    ];
    for (g, text) in cases {
        let r = Ribbon::new(&g).unwrap();
        let s = stretch_factor(&r, &parse_word(text, &g).unwrap()).unwrap();
        let oracle = growth(&g, text, 1, 12);
        assert!(
            (s.lambda - oracle).abs() < 1e-4 * oracle,
            "{text}: {} vs {oracle}",
            s.lambda
        );
    }
}

#[test]
fn stretch_of_a_square_is_squared() {
    for (g, text, twice) in [
        (one_point(1), "ta sb^-1", "ta sb^-1 ta sb^-1"),
        (two_point(1), "ta sb^-2", "ta sb^-2 ta sb^-2"),
    ] {
        let r = Ribbon::new(&g).unwrap();
        let l1 = stretch_factor(&r, &parse_word(text, &g).unwrap())
            .unwrap()
            .lambda;
        let l2 = stretch_factor(&r, &parse_word(twice, &g).unwrap())
            .unwrap()
            .lambda;
        assert!((l2 - l1 * l1).abs() < 1e-8 * l2, "{l2} vs {}", l1 * l1);
    }
}

#[test]
fn invariant_weights_are_an_eigenvector() {
    let g = two_point(1);
    let r = Ribbon::new(&g).unwrap();
    let iw = invariant_weights(&r, &parse_word("ta sb^-1", &g).unwrap()).unwrap();
    assert!(iw.residual < 1e-9);
    assert!(iw.vector.iter().all(|&x| x >= -1e-12));
}

#[test]
fn pushed_weights_follow_the_curve() {
    let g = two_point(1);
    let r = Ribbon::new(&g).unwrap();
    let w = parse_word("ta sb^-1", &g).unwrap();
    let dc = starting_track(&g, 1, Orientation::Standard);
    let w0 = core_weights(&r, 1, &dc).unwrap();
    let pushed = push_weights(&r, &w, &w0).unwrap();
    assert!(pushed.switch_ok(&r));
    let walked = walk_weights(&r, &r.apply_word(&w, &r.core(1)), &pushed.dc).unwrap();
    assert_eq!(walked, pushed);
}

#[test]
fn floer_counts_match_geometric_intersection() {
    let cases = [
        (one_point(1), "ta sb^-1", 0, "ta^-1 sb", 1),
        (one_point(1), "ta^2 sb^-1", 1, "sb", 0),
        (one_point(1), "", 0, "ta^-1 sb^2", 1),
        (two_point(1), "ta sb^-1", 0, "ta^-1 sb", 1),
        (two_point(1), "ta", 1, "sb ta^-1", 0),
    ];
    for (g, a, c0, b, c1) in cases {
        let r = Ribbon::new(&g).unwrap();
        let rep = floer_dims(
            &r,
            &parse_word(a, &g).unwrap(),
            c0,
            &parse_word(b, &g).unwrap(),
            c1,
        )
        .unwrap();
        assert!(rep.agrees, "{a} / {b}: {} vs {}", rep.hf_sum, rep.oracle);
        assert_eq!(rep.hf_sum, rep.oracle);
        let carried = rep
            .assumptions
            .iter()
            .find(|x| x.name == "carried by opposite families")
            .unwrap();
        assert_eq!(carried.status, "holds");
    }
}

#[test]
fn wrong_family_is_rejected() {
    let g = one_point(1);
    let r = Ribbon::new(&g).unwrap();
    let w = parse_word("ta sb^-1", &g).unwrap();
    assert!(matches!(
        floer_dims(&r, &w, 0, &w, 1),
        Err(SurfaceError::WrongFamily(Orientation::Opposite))
    ));
}

fn weights(dc: &penner_core::DiskChoice, xs: &[i64]) -> WeightVector {
    WeightVector {
        dc: dc.clone(),
        w: xs
            .iter()
            .map(|&x| BigRational::from_integer(BigInt::from(x)))
            .collect(),
    }
}

proptest! {
    #[test]
    fn intersection_is_bilinear(
        a in prop::collection::vec(0i64..20, 6),
        b in prop::collection::vec(0i64..20, 6),
        c in prop::collection::vec(0i64..20, 6),
        k in 1i64..7,
    ) {
        let g = two_point(1);
        let r = Ribbon::new(&g).unwrap();
        let ds = starting_track(&g, 0, Orientation::Standard);
        let dopp = starting_track(&g, 1, Orientation::Opposite);
        let (wa, wb, wc) = (weights(&ds, &a), weights(&ds, &b), weights(&dopp, &c));
        let lhs = intersection_number(&r, &wa.add(&wb), &wc).unwrap();
        let rhs = intersection_number(&r, &wa, &wc).unwrap() + intersection_number(&r, &wb, &wc).unwrap();
        prop_assert_eq!(lhs, rhs);
        let kk = BigRational::from_integer(BigInt::from(k));
        let scaled = intersection_number(&r, &wa.scale(&kk), &wc).unwrap();
        prop_assert_eq!(scaled, kk * intersection_number(&r, &wa, &wc).unwrap());
        prop_assert_eq!(intersection_number(&r, &wc, &wa).unwrap(), intersection_number(&r, &wa, &wc).unwrap());
    }
}
