//! Ternary reversible functions as ancilla-free circuits.
//!
//! A permutation of `{0,1,2}^n` is split into transpositions of tritstrings,
//! and each transposition becomes a two-level axial reflection: one
//! `(n-1)`-controlled `X_ab` sandwiched between singly-controlled swaps.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{index_of, trits_of, AncillaUse, Circuit, ControlPattern, Gate, Perm3, SynthResult};
use crate::sim::{classical_action, ClassicalAction};
use crate::synth::{ctrl_unitary_pattern, SynthError};

/// Largest trit count accepted, to keep `3^n` tables addressable.
pub const MAX_TRITS: usize = 12;

#[derive(Debug, Error)]
pub enum PermError {
    #[error("map has {len} entries, expected 3^{n} = {expected}")]
    WrongLength { n: usize, len: usize, expected: usize },
    #[error("image {image} out of range for {n} trits")]
    OutOfRange { n: usize, image: usize },
    #[error("rows {first} and {second} both map to {image}")]
    Collision { first: String, second: String, image: String },
    #[error("row {0} is missing")]
    MissingRow(String),
    #[error("row {0} appears twice")]
    DuplicateRow(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("bad JSON permutation: {0}")]
    Json(#[from] serde_json::Error),
    #[error("tritstrings {0} and {1} are equal")]
    Degenerate(String, String),
    #[error("{0} trits is outside 1..={max}", max = MAX_TRITS)]
    BadWidth(usize),
    #[error("lower bound needs n >= 2, got {0}")]
    Domain(usize),
    #[error("circuit is not classical: basis state {0} does not map to a basis state")]
    NotClassical(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

fn tritstring(x: usize, n: usize) -> String {
    trits_of(x, n).iter().map(|t| char::from(b'0' + t)).collect()
}

/// A bijection on `{0,…,3^n − 1}`, indices in the wire-0-first encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TritPermutation {
    pub n: usize,
    pub map: Vec<usize>,
}

impl TritPermutation {
    pub fn new(n: usize, map: Vec<usize>) -> Result<Self, PermError> {
        if n == 0 || n > MAX_TRITS {
            return Err(PermError::BadWidth(n));
        }
        let dim = 3usize.pow(n as u32);
        if map.len() != dim {
            return Err(PermError::WrongLength { n, len: map.len(), expected: dim });
        }
        let mut pre: Vec<Option<usize>> = vec![None; dim];
        for (x, &y) in map.iter().enumerate() {
            if y >= dim {
                return Err(PermError::OutOfRange { n, image: y });
            }
            if let Some(first) = pre[y] {
                return Err(PermError::Collision {
                    first: tritstring(first, n),
                    second: tritstring(x, n),
                    image: tritstring(y, n),
                });
            }
            pre[y] = Some(x);
        }
        Ok(TritPermutation { n, map })
    }

    pub fn identity(n: usize) -> Self {
        TritPermutation { n, map: (0..3usize.pow(n as u32)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(x, &y)| x == y)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.dim()];
        for (x, &y) in self.map.iter().enumerate() {
            inv[y] = x;
        }
        TritPermutation { n: self.n, map: inv }
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &TritPermutation) -> Self {
        TritPermutation { n: self.n, map: self.map.iter().map(|&y| next.map[y]).collect() }
    }

    /// The permutation a classical circuit applies to basis states.
    pub fn of_circuit(c: &Circuit) -> Result<Self, PermError> {
        match classical_action(c) {
            ClassicalAction::Permutation(map) => Ok(TritPermutation { n: c.width, map }),
            ClassicalAction::NotClassical { witness } => Err(PermError::NotClassical(tritstring(witness, c.width))),
        }
    }

    /// Uniformly random permutation from a seeded generator.
    pub fn random(n: usize, rng: &mut impl rand::Rng) -> Self {
        use rand::seq::SliceRandom;
        let mut map: Vec<usize> = (0..3usize.pow(n as u32)).collect();
        map.shuffle(rng);
        TritPermutation { n, map }
    }

    /// Accepts `{"n": .., "map": [..]}` or a truth table.
    pub fn parse(text: &str) -> Result<Self, PermError> {
        if text.trim_start().starts_with('{') {
            let raw: TritPermutation = serde_json::from_str(text)?;
            return TritPermutation::new(raw.n, raw.map);
        }
        Self::parse_table(text)
    }

    /// Lines `x₁…xₙ -> y₁…yₙ` (or `→`), one per input row, `#` comments.
    pub fn parse_table(text: &str) -> Result<Self, PermError> {
        let mut n = None;
        let mut rows: HashMap<usize, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| PermError::Parse { line: line_no, msg: msg.to_string() };
            let (lhs, rhs) = line
                .split_once("->")
                .or_else(|| line.split_once('→'))
                .ok_or_else(|| err("expected `x -> y`"))?;
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            let width = *n.get_or_insert(lhs.len());
            if lhs.len() != width || rhs.len() != width {
                return Err(err("row length differs from the first row"));
            }
            if width == 0 || width > MAX_TRITS {
                return Err(PermError::BadWidth(width));
            }
            let x = parse_trits(lhs).ok_or_else(|| err("tritstrings use digits 0, 1, 2"))?;
            let y = parse_trits(rhs).ok_or_else(|| err("tritstrings use digits 0, 1, 2"))?;
            if rows.insert(x, y).is_some() {
                return Err(PermError::DuplicateRow(lhs.to_string()));
            }
        }
        let n = n.ok_or(PermError::Parse { line: 0, msg: "empty table".into() })?;
        let dim = 3usize.pow(n as u32);
        let map = (0..dim)
            .map(|x| rows.get(&x).copied().ok_or_else(|| PermError::MissingRow(tritstring(x, n))))
            .collect::<Result<Vec<_>, _>>()?;
        TritPermutation::new(n, map)
    }

    pub fn to_table(&self) -> String {
        self.map
            .iter()
            .enumerate()
            .map(|(x, &y)| format!("{} -> {}\n", tritstring(x, self.n), tritstring(y, self.n)))
            .collect()
    }
}

impl FromStr for TritPermutation {
    type Err = PermError;
    fn from_str(s: &str) -> Result<Self, PermError> {
        TritPermutation::parse(s)
    }
}

fn parse_trits(s: &str) -> Option<usize> {
    let trits = s
        .bytes()
        .map(|b| matches!(b, b'0'..=b'2').then(|| b - b'0'))
        .collect::<Option<Vec<u8>>>()?;
    Some(index_of(&trits))
}

/// Transposition of two distinct tritstrings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoCycle {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
}

impl TwoCycle {
    pub fn new(a: Vec<u8>, b: Vec<u8>) -> Result<Self, PermError> {
        if a.len() != b.len() || a.is_empty() || a.len() > MAX_TRITS {
            return Err(PermError::BadWidth(a.len().max(b.len())));
        }
        if a.iter().chain(&b).any(|&t| t > 2) {
            return Err(PermError::Parse { line: 0, msg: "trits must be 0, 1 or 2".into() });
        }
        if a == b {
            let s: String = a.iter().map(|t| char::from(b'0' + t)).collect();
            return Err(PermError::Degenerate(s.clone(), s));
        }
        Ok(TwoCycle { a, b })
    }

    pub fn from_indices(x: usize, y: usize, n: usize) -> Result<Self, PermError> {
        TwoCycle::new(trits_of(x, n), trits_of(y, n))
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn as_permutation(&self) -> TritPermutation {
        let mut p = TritPermutation::identity(self.n());
        let (x, y) = (index_of(&self.a), index_of(&self.b));
        p.map.swap(x, y);
        p
    }
}

impl fmt::Display for TwoCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: &[u8]| v.iter().map(|t| char::from(b'0' + t)).collect::<String>();
        write!(f, "({} {})", s(&self.a), s(&self.b))
    }
}

/// Transpositions in application order whose composite is `p`.
///
/// Cycles are visited by smallest element `d₁`; the cycle
/// `d₁ → d₂ → … → d_k → d₁` becomes `(d₁ d₂), (d₁ d₃), …, (d₁ d_k)`.
pub fn cycle_decompose(p: &TritPermutation) -> Vec<TwoCycle> {
    let mut seen = vec![false; p.dim()];
    let mut out = Vec::new();
    for start in 0..p.dim() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut x = p.apply(start);
        while x != start {
            seen[x] = true;
            out.push(TwoCycle::from_indices(start, x, p.n).expect("distinct cycle members"));
            x = p.apply(x);
        }
    }
    out
}

/// Ancilla-free circuit swapping basis states `a` and `b`.
pub fn reflection_circuit(t: &TwoCycle) -> Result<SynthResult, PermError> {
    let n = t.n();
    let star = (0..n).rev().find(|&j| t.a[j] != t.b[j]).expect("a != b");
    let (an, bn) = (t.a[star], t.b[star]);
    let swap = |a: u8, b: u8| Circuit { width: 1, gates: vec![Gate::X(Perm3::swap(a, b), 0)] };
    let mut c = Circuit::new(n);
    if n == 1 {
        c.push(Gate::X(Perm3::swap(an, bn), 0));
        return Ok(SynthResult::new(c, AncillaUse::None, 0));
    }

    // |b⟩ on the pivot wire swaps a_j ↔ b_j elsewhere
    let mut outer = Circuit::new(n);
    for j in (0..n).filter(|&j| j != star && t.a[j] != t.b[j]) {
        let pattern = ControlPattern { entries: vec![Some(bn), None] };
        let r = ctrl_unitary_pattern(&swap(t.a[j], t.b[j]), &pattern)?;
        outer.extend(&r.circuit.embed(n, &[star, j]));
    }

    let pattern = ControlPattern {
        entries: (0..n).map(|j| (j != star).then_some(t.a[j])).collect(),
    };
    let mid = ctrl_unitary_pattern(&swap(an, bn), &pattern)?;

    c.extend(&outer);
    c.extend(&mid.circuit);
    c.extend(&outer);
    Ok(SynthResult::new(c, AncillaUse::None, mid.base_blocks))
}

/// Circuit implementing `p` on `p.n` wires with no ancilla.
pub fn synthesize_permutation(p: &TritPermutation) -> Result<SynthResult, PermError> {
    let mut c = Circuit::new(p.n);
    let mut blocks = 0;
    for t in cycle_decompose(p) {
        let r = reflection_circuit(&t)?;
        c.extend(&r.circuit);
        blocks += r.base_blocks;
    }
    Ok(SynthResult::new(c, AncillaUse::None, blocks))
}

/// Counting bound `(ln 3 / 6)·n·3ⁿ / ln n` on the gates some `n`-trit
/// function needs.
pub fn gate_count_lower_bound(n: usize) -> Result<f64, PermError> {
    if n < 2 {
        return Err(PermError::Domain(n));
    }
    let nf = n as f64;
    // ratio first so that n = 3 comes out exact
    let ratio = 3f64.ln() / nf.ln();
    Ok(ratio * nf * 3f64.powi(n as i32) / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn compose(ts: &[TwoCycle], n: usize) -> TritPermutation {
        ts.iter().fold(TritPermutation::identity(n), |acc, t| acc.then(&t.as_permutation()))
    }

    #[test]
    fn identity_has_no_cycles() {
        assert!(cycle_decompose(&TritPermutation::identity(2)).is_empty());
        let r = synthesize_permutation(&TritPermutation::identity(2)).unwrap();
        assert!(r.circuit.is_empty());
        assert_eq!(r.t_count, 0);
    }

    #[test]
    fn single_swap_is_one_two_cycle() {
        let t = TwoCycle::new(vec![0, 0], vec![1, 2]).unwrap();
        let p = t.as_permutation();
        assert_eq!(cycle_decompose(&p), vec![t]);
    }

    #[test]
    fn three_cycle_order_is_locked() {
        // 0 → 1 → 2 → 0
        let p = TritPermutation::new(1, vec![1, 2, 0]).unwrap();
        let ts = cycle_decompose(&p);
        assert_eq!(ts, vec![TwoCycle::new(vec![0], vec![1]).unwrap(), TwoCycle::new(vec![0], vec![2]).unwrap()]);
        assert_eq!(compose(&ts, 1), p);
    }

    #[test]
    fn decomposition_recomposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            for _ in 0..10 {
                let p = TritPermutation::random(n, &mut rng);
                let ts = cycle_decompose(&p);
                assert!(ts.len() < p.dim());
                assert_eq!(compose(&ts, n), p);
            }
        }
    }

    #[test]
    fn single_wire_reflection_is_bare_swap() {
        let r = reflection_circuit(&TwoCycle::new(vec![0], vec![1]).unwrap()).unwrap();
        assert_eq!(r.circuit.gates, vec![Gate::X(Perm3::Swap01, 0)]);
    }

    #[test]
    fn reflections_fix_everything_else() {
        for n in 1..=3 {
            let dim = 3usize.pow(n as u32);
            for x in 0..dim {
                for y in (x + 1)..dim {
                    if n == 3 && (x + y) % 5 != 0 {
                        continue;
                    }
                    let t = TwoCycle::from_indices(x, y, n).unwrap();
                    let r = reflection_circuit(&t).unwrap();
                    assert_eq!(r.circuit.width, n);
                    assert_eq!(TritPermutation::of_circuit(&r.circuit).unwrap(), t.as_permutation(), "{t}");
                }
            }
        }
    }

    #[test]
    fn cx_table_recompiles() {
        let map = (0..9).map(|x| {
            let (i, j) = (x / 3, x % 3);
            i * 3 + (i + j) % 3
        });
        let p = TritPermutation::new(2, map.collect()).unwrap();
        let r = synthesize_permutation(&p).unwrap();
        assert_eq!(TritPermutation::of_circuit(&r.circuit).unwrap(), p);
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(gate_count_lower_bound(3).unwrap(), 13.5);
        let b2 = gate_count_lower_bound(2).unwrap();
        assert!((b2 - 3f64.ln() / 6.0 * 18.0 / 2f64.ln()).abs() < 1e-12);
        assert!((b2 - 4.755).abs() < 1e-3);
        assert!(matches!(gate_count_lower_bound(1), Err(PermError::Domain(1))));
    }

    #[test]
    fn parse_formats() {
        let p = TritPermutation::parse("{\"n\": 1, \"map\": [2, 0, 1]}").unwrap();
        assert_eq!(p.map, vec![2, 0, 1]);
        let q = TritPermutation::parse("# rot\n0 -> 2\n1 → 0\n2 -> 1\n").unwrap();
        assert_eq!(p, q);
        assert_eq!(TritPermutation::parse(&p.to_table()).unwrap(), p);
    }

    #[test]
    fn collision_names_rows() {
        let err = TritPermutation::parse("00 -> 01\n01 -> 01\n").unwrap_err();
        let msg = err.to_string();
        // rows listed before the table is checked for completeness
        assert!(matches!(err, PermError::MissingRow(_)), "{msg}");
        let mut lines: Vec<String> = (0..9).map(|x| format!("{} -> {}", tritstring(x, 2), tritstring(x, 2))).collect();
        lines[4] = "11 -> 22".into();
        let err = TritPermutation::parse(&lines.join("\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("11") && msg.contains("22"), "{msg}");
        assert!(matches!(err, PermError::Collision { .. }));
        assert!(TritPermutation::new(1, vec![0, 0, 1]).is_err());
    }

    #[test]
    fn degenerate_two_cycle() {
        assert!(matches!(TwoCycle::new(vec![1, 2], vec![1, 2]), Err(PermError::Degenerate(..))));
    }
}
