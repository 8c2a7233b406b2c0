//! Twist words, disk choices and the induced action on the finite set of tracks.
//!
//! A word `d1 d2 ... dl` denotes the composite `d1 ∘ d2 ∘ ... ∘ dl`: the rightmost
//! factor acts first.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plumbing::{PlumbingGraph, Sign};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TwistError {
    #[error("syntax error in word at token {token:?}: {reason}")]
    Syntax { token: String, reason: String },
    #[error("unknown sphere {0}")]
    UnknownSphere(String),
    #[error("generator {token:?} names sphere {sphere} of the wrong sign")]
    LetterMismatch { token: String, sphere: String },
    #[error("zero exponent in token {0:?}")]
    ZeroExponent(String),
    #[error("word is not of generalized Penner type: {0}")]
    NotPenner(String),
    #[error("disk choice covers {got} points, graph has {expected}")]
    ChoiceSize { expected: usize, got: usize },
}

/// One factor `tau_i^k` or `sigma_j^k` of a twist word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwistFactor {
    pub sphere: usize,
    pub exponent: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TwistWord {
    pub factors: Vec<TwistFactor>,
}

impl TwistWord {
    pub fn identity() -> Self {
        TwistWord {
            factors: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// The same word with every exponent expanded into unit factors.
    pub fn unit_factors(&self) -> Vec<TwistFactor> {
        let mut out = Vec::new();
        for f in &self.factors {
            let unit = f.exponent.signum();
            for _ in 0..f.exponent.unsigned_abs() {
                out.push(TwistFactor {
                    sphere: f.sphere,
                    exponent: unit,
                });
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> TwistWord {
        let mut factors = Vec::with_capacity(self.factors.len() * k);
        for _ in 0..k {
            factors.extend_from_slice(&self.factors);
        }
        TwistWord { factors }
    }

    pub fn display<'a>(&'a self, graph: &'a PlumbingGraph) -> WordDisplay<'a> {
        WordDisplay { word: self, graph }
    }
}

pub struct WordDisplay<'a> {
    word: &'a TwistWord,
    graph: &'a PlumbingGraph,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, fac) in self.word.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            let s = self.graph.sphere(fac.sphere);
            let letter = if s.sign == Sign::Positive { 't' } else { 's' };
            write!(f, "{letter}{}", s.id)?;
            if fac.exponent != 1 {
                write!(f, "^{}", fac.exponent)?;
            }
        }
        Ok(())
    }
}

/// Parses `t<id>` / `s<id>` generators with optional `^k` exponents.
///
/// `t` names a twist along a positive sphere and `s` along a negative one.
pub fn parse_word(text: &str, graph: &PlumbingGraph) -> Result<TwistWord, TwistError> {
    let mut factors = Vec::new();
    for token in text.split_whitespace() {
        let syntax = |reason: &str| TwistError::Syntax {
            token: token.to_string(),
            reason: reason.to_string(),
        };
        let mut chars = token.chars();
        let letter = chars.next().ok_or_else(|| syntax("empty token"))?;
        let want = match letter {
            't' | 'τ' => Sign::Positive,
            's' | 'σ' => Sign::Negative,
            _ => return Err(syntax("generator must start with 't' or 's'")),
        };
        let rest = chars.as_str();
        let (id, exponent) = match rest.split_once('^') {
            Some((id, e)) => {
                let e: i32 = e
                    .parse()
                    .map_err(|_| syntax("exponent is not an integer"))?;
                (id, e)
            }
            None => (rest, 1),
        };
        if id.is_empty() {
            return Err(syntax("missing sphere id"));
        }
        if exponent == 0 {
            return Err(TwistError::ZeroExponent(token.to_string()));
        }
        let sphere = graph
            .sphere_index(id)
            .ok_or_else(|| TwistError::UnknownSphere(id.to_string()))?;
        if graph.sphere(sphere).sign != want {
            return Err(TwistError::LetterMismatch {
                token: token.to_string(),
                sphere: id.to_string(),
            });
        }
        factors.push(TwistFactor { sphere, exponent });
    }
    Ok(TwistWord { factors })
}

/// Which surgery family a track belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Standard,
    Opposite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiskSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl DiskSign {
    pub fn symbol(self) -> char {
        match self {
            DiskSign::Plus => '+',
            DiskSign::Minus => '-',
        }
    }

    pub fn flip(self) -> DiskSign {
        match self {
            DiskSign::Plus => DiskSign::Minus,
            DiskSign::Minus => DiskSign::Plus,
        }
    }
}

impl Orientation {
    /// The label that puts the disk `D_p` on a sphere of sign `s`.
    ///
    /// In the standard family `+` means the disk lies on the positive sphere; the
    /// opposite family swaps the roles.
    pub fn label_for(self, s: Sign) -> DiskSign {
        match (self, s) {
            (Orientation::Standard, Sign::Positive) | (Orientation::Opposite, Sign::Negative) => {
                DiskSign::Plus
            }
            _ => DiskSign::Minus,
        }
    }

    /// The exponent sign that twists along a sphere of sign `s` must carry.
    pub fn exponent_sign(self, s: Sign) -> i32 {
        match (self, s) {
            (Orientation::Standard, Sign::Positive) | (Orientation::Opposite, Sign::Negative) => 1,
            _ => -1,
        }
    }
}

/// An element of the standard or opposite track family: one sign per plumbing point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiskChoice {
    pub orientation: Orientation,
    pub signs: Vec<DiskSign>,
}

impl DiskChoice {
    pub fn new(orientation: Orientation, signs: Vec<DiskSign>) -> Self {
        DiskChoice { orientation, signs }
    }

    pub fn uniform(orientation: Orientation, n_points: usize, s: DiskSign) -> Self {
        DiskChoice {
            orientation,
            signs: vec![s; n_points],
        }
    }

    /// The `index`-th element in the binary enumeration of all `2^N` choices.
    pub fn from_index(orientation: Orientation, n_points: usize, index: u64) -> Self {
        let signs = (0..n_points)
            .map(|i| {
                if index >> i & 1 == 0 {
                    DiskSign::Plus
                } else {
                    DiskSign::Minus
                }
            })
            .collect();
        DiskChoice { orientation, signs }
    }

    pub fn check_size(&self, graph: &PlumbingGraph) -> Result<(), TwistError> {
        if self.signs.len() == graph.points.len() {
            Ok(())
        } else {
            Err(TwistError::ChoiceSize {
                expected: graph.points.len(),
                got: self.signs.len(),
            })
        }
    }

    /// True when the disk at point `p` lies on the positive sphere.
    pub fn disk_on_alpha(&self, p: usize) -> bool {
        self.signs[p] == self.orientation.label_for(Sign::Positive)
    }

    /// The sign of the sphere carrying the disk at `p`.
    pub fn disk_sphere_sign(&self, p: usize) -> Sign {
        if self.disk_on_alpha(p) {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn to_map(&self, graph: &PlumbingGraph) -> BTreeMap<String, DiskSign> {
        graph
            .points
            .iter()
            .zip(&self.signs)
            .map(|(p, s)| (p.id.clone(), *s))
            .collect()
    }

    pub fn label(&self, graph: &PlumbingGraph) -> String {
        let body: Vec<String> = graph
            .points
            .iter()
            .zip(&self.signs)
            .map(|(p, s)| format!("{}{}", p.id, s.symbol()))
            .collect();
        let fam = match self.orientation {
            Orientation::Standard => "B",
            Orientation::Opposite => "Bop",
        };
        format!("{fam}[{}]", body.join(","))
    }
}

/// `F_delta` for a single twist factor: every point on the twisted sphere gets its
/// disk moved onto that sphere.
pub fn apply_f(
    factor: TwistFactor,
    dc: &DiskChoice,
    graph: &PlumbingGraph,
) -> Result<DiskChoice, TwistError> {
    if factor.sphere >= graph.spheres.len() {
        return Err(TwistError::UnknownSphere(factor.sphere.to_string()));
    }
    dc.check_size(graph)?;
    let label = dc.orientation.label_for(graph.sphere(factor.sphere).sign);
    let mut out = dc.clone();
    for p in graph.points_on(factor.sphere) {
        out.signs[p] = label;
    }
    Ok(out)
}

/// `F_psi`: the factors act right to left.
pub fn apply_word(
    word: &TwistWord,
    dc: &DiskChoice,
    graph: &PlumbingGraph,
) -> Result<DiskChoice, TwistError> {
    let mut cur = dc.clone();
    for f in word.factors.iter().rev() {
        cur = apply_f(*f, &cur, graph)?;
    }
    Ok(cur)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PennerDiagnostics {
    pub penner: bool,
    pub orientation: Option<Orientation>,
    pub missing_spheres: Vec<String>,
    pub bad_exponents: Vec<usize>,
}

/// Checks the sign pattern of `word` against `orientation` and that every sphere occurs.
pub fn penner_diagnostics(
    word: &TwistWord,
    graph: &PlumbingGraph,
    orientation: Orientation,
) -> PennerDiagnostics {
    let mut present = vec![false; graph.spheres.len()];
    let mut bad = Vec::new();
    for (i, f) in word.factors.iter().enumerate() {
        present[f.sphere] = true;
        if f.exponent.signum() != orientation.exponent_sign(graph.sphere(f.sphere).sign) {
            bad.push(i);
        }
    }
    let missing: Vec<String> = graph
        .spheres
        .iter()
        .zip(&present)
        .filter(|(_, &p)| !p)
        .map(|(s, _)| s.id.clone())
        .collect();
    let penner = missing.is_empty() && bad.is_empty();
    PennerDiagnostics {
        penner,
        orientation: penner.then_some(orientation),
        missing_spheres: missing,
        bad_exponents: bad,
    }
}

/// Positive powers along positive spheres, negative along negative ones, every sphere used.
pub fn is_generalized_penner(word: &TwistWord, graph: &PlumbingGraph) -> PennerDiagnostics {
    penner_diagnostics(word, graph, Orientation::Standard)
}

/// The family a Penner-type word belongs to, if any.
pub fn penner_orientation(word: &TwistWord, graph: &PlumbingGraph) -> Option<Orientation> {
    [Orientation::Standard, Orientation::Opposite]
        .into_iter()
        .find(|&o| penner_diagnostics(word, graph, o).penner)
}

/// True when every factor has the handedness required by `orientation`.
pub fn sign_consistent(word: &TwistWord, graph: &PlumbingGraph, orientation: Orientation) -> bool {
    penner_diagnostics(word, graph, orientation)
        .bad_exponents
        .is_empty()
}

/// The common value of `F_psi` on its family.
///
/// At `p` on `alpha_i` and `beta_j` the disk sits on `alpha_i` exactly when the
/// leftmost twist along `alpha_i` comes before the leftmost twist along `beta_j`.
pub fn invariant_track(word: &TwistWord, graph: &PlumbingGraph) -> Result<DiskChoice, TwistError> {
    let orientation = penner_orientation(word, graph).ok_or_else(|| {
        let d = is_generalized_penner(word, graph);
        TwistError::NotPenner(format!(
            "missing spheres {:?}, factors with wrong sign {:?}",
            d.missing_spheres, d.bad_exponents
        ))
    })?;
    let first = |s: usize| {
        word.factors
            .iter()
            .position(|f| f.sphere == s)
            .expect("penner word uses every sphere")
    };
    let signs = (0..graph.points.len())
        .map(|p| {
            let on_alpha = first(graph.alpha_of(p)) < first(graph.beta_of(p));
            orientation.label_for(if on_alpha {
                Sign::Positive
            } else {
                Sign::Negative
            })
        })
        .collect();
    Ok(DiskChoice { orientation, signs })
}

/// Applies `F_psi` to all `2^N` choices of the word's family and returns the distinct outputs.
pub fn sweep_outputs(
    word: &TwistWord,
    graph: &PlumbingGraph,
    orientation: Orientation,
) -> Result<Vec<DiskChoice>, TwistError> {
    let n = graph.points.len();
    let mut outs = std::collections::BTreeSet::new();
    for idx in 0..(1u64 << n) {
        let dc = DiskChoice::from_index(orientation, n, idx);
        outs.insert(apply_word(word, &dc, graph)?);
    }
    Ok(outs.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plumbing::samples::*;

    #[test]
    fn parses_running_word() {
        let g = chain3(2);
        let w = parse_word("t0 s1^-1 s2^-1", &g).unwrap();
        assert_eq!(w.factors.len(), 3);
        assert_eq!(
            w.factors[1],
            TwistFactor {
                sphere: 1,
                exponent: -1
            }
        );
        assert_eq!(w.display(&g).to_string(), "t0 s1^-1 s2^-1");
    }

    #[test]
    fn parse_errors() {
        let g = one_point(2);
        assert!(parse_word("", &g).unwrap().is_empty());
        assert_eq!(
            parse_word("t9", &g),
            Err(TwistError::UnknownSphere("9".into()))
        );
        assert!(matches!(
            parse_word("ta^0", &g),
            Err(TwistError::ZeroExponent(_))
        ));
        assert!(matches!(
            parse_word("x1", &g),
            Err(TwistError::Syntax { .. })
        ));
        assert!(matches!(
            parse_word("sa", &g),
            Err(TwistError::LetterMismatch { .. })
        ));
    }

    #[test]
    fn penner_check() {
        let g = chain3(2);
        assert!(is_generalized_penner(&parse_word("t0 s1^-1 s2^-1", &g).unwrap(), &g).penner);
        let d = is_generalized_penner(&parse_word("t0", &g).unwrap(), &g);
        assert_eq!(d.missing_spheres, vec!["1".to_string(), "2".to_string()]);
        assert!(!is_generalized_penner(&parse_word("t0 s1 s2^-1", &g).unwrap(), &g).penner);
    }

    #[test]
    fn f_tau_moves_disks_to_alpha() {
        let g = chain3(2);
        let dc = DiskChoice::uniform(Orientation::Standard, 2, DiskSign::Minus);
        let out = apply_f(
            TwistFactor {
                sphere: 0,
                exponent: 1,
            },
            &dc,
            &g,
        )
        .unwrap();
        assert_eq!(out.signs, vec![DiskSign::Plus, DiskSign::Plus]);
        assert_eq!(
            apply_f(
                TwistFactor {
                    sphere: 0,
                    exponent: 1
                },
                &out,
                &g
            )
            .unwrap(),
            out
        );
    }

    #[test]
    fn invariant_track_examples() {
        let g = chain3(2);
        let w = parse_word("t0 s1^-1 s2^-1", &g).unwrap();
        assert_eq!(
            invariant_track(&w, &g).unwrap().signs,
            vec![DiskSign::Plus, DiskSign::Plus]
        );
        let w = parse_word("s1^-1 t0 s2^-1", &g).unwrap();
        let b = invariant_track(&w, &g).unwrap();
        assert_eq!(b.signs, vec![DiskSign::Minus, DiskSign::Plus]);
        assert_eq!(apply_word(&w, &b, &g).unwrap(), b);
    }

    #[test]
    fn opposite_family_swaps_labels() {
        let g = one_point(1);
        let w = parse_word("ta^-1 sb", &g).unwrap();
        assert_eq!(penner_orientation(&w, &g), Some(Orientation::Opposite));
        let b = invariant_track(&w, &g).unwrap();
        assert!(b.disk_on_alpha(0));
        assert_eq!(b.signs, vec![DiskSign::Minus]);
    }
}
