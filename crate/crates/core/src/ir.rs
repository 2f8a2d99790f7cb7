//! Circuit representation: the primitive gate alphabet, circuits over `n`
//! qutrit wires, control patterns and the line-oriented text format.
//!
//! Wire 0 is the most significant trit, so `|x₀x₁…⟩` has index
//! `Σ xᵢ·3^(n−1−i)`.

use std::fmt;
use std::str::FromStr;

use serde_json::json;
use thiserror::Error;

use crate::arith::{CycloNumber, Matrix};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IrError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("gate {gate} touches wire {wire} but the circuit has width {width}")]
    WireOutOfRange { gate: String, wire: usize, width: usize },
    #[error("gate {0} uses the same wire twice")]
    RepeatedWire(String),
    #[error("bad control pattern {0:?}")]
    BadPattern(String),
    #[error("width {width} exceeds the oracle limit of {limit} wires")]
    OracleTooLarge { width: usize, limit: usize },
    #[error("pattern has {free} free wires but the target acts on {width}")]
    PatternMismatch { free: usize, width: usize },
}

/// The five nontrivial classical permutations of `{0, 1, 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Perm3 {
    Plus1,
    Minus1,
    Swap01,
    Swap02,
    Swap12,
}

impl Perm3 {
    pub const ALL: [Perm3; 5] = [Perm3::Plus1, Perm3::Minus1, Perm3::Swap01, Perm3::Swap02, Perm3::Swap12];

    /// Image of each input digit.
    pub fn table(self) -> [u8; 3] {
        match self {
            Perm3::Plus1 => [1, 2, 0],
            Perm3::Minus1 => [2, 0, 1],
            Perm3::Swap01 => [1, 0, 2],
            Perm3::Swap02 => [2, 1, 0],
            Perm3::Swap12 => [0, 2, 1],
        }
    }

    pub fn apply(self, digit: u8) -> u8 {
        self.table()[digit as usize]
    }

    pub fn inverse(self) -> Perm3 {
        match self {
            Perm3::Plus1 => Perm3::Minus1,
            Perm3::Minus1 => Perm3::Plus1,
            p => p,
        }
    }

    /// The transposition exchanging two distinct digits.
    pub fn swap(a: u8, b: u8) -> Perm3 {
        match (a.min(b), a.max(b)) {
            (0, 1) => Perm3::Swap01,
            (0, 2) => Perm3::Swap02,
            (1, 2) => Perm3::Swap12,
            _ => panic!("swap needs two distinct digits below 3, got {a} and {b}"),
        }
    }

    /// Some permutation mapping digit `from` to `to`, preferring shifts.
    pub fn shift(from: u8, to: u8) -> Option<Perm3> {
        match (to + 3 - from) % 3 {
            0 => None,
            1 => Some(Perm3::Plus1),
            _ => Some(Perm3::Minus1),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Perm3::Plus1 => "X+1",
            Perm3::Minus1 => "X-1",
            Perm3::Swap01 => "X01",
            Perm3::Swap02 => "X02",
            Perm3::Swap12 => "X12",
        }
    }
}

/// A rational phase parameter `n/3` reduced mod 3, stored as `n ∈ 0..9`.
///
/// `ω^(n/3) = ζ^n`, so the stored value is also the ζ exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Thirds(u8);

impl Thirds {
    pub fn new(n: i64) -> Self {
        Thirds(n.rem_euclid(9) as u8)
    }

    /// An integer parameter.
    pub fn int(a: i64) -> Self {
        Self::new(3 * a)
    }

    pub fn zeta_exp(self) -> u8 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 3 == 0
    }

    pub fn neg(self) -> Self {
        Self::new(-(self.0 as i64))
    }
}

impl fmt::Display for Thirds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 3)
        } else {
            write!(f, "{}/3", self.0)
        }
    }
}

impl FromStr for Thirds {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p, q),
            None => (s, "1"),
        };
        let p: i64 = p.trim().parse().map_err(|_| format!("malformed rational {s:?}"))?;
        let q: i64 = q.trim().parse().map_err(|_| format!("malformed rational {s:?}"))?;
        match q {
            1 => Ok(Thirds::new(3 * p)),
            3 => Ok(Thirds::new(p)),
            -1 => Ok(Thirds::new(-3 * p)),
            -3 => Ok(Thirds::new(-p)),
            _ => Err(format!("rational {s:?} has a denominator other than 1 or 3")),
        }
    }
}

/// A primitive gate together with the wires it acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    X(Perm3, usize),
    H(usize),
    Hdg(usize),
    S(usize),
    Sdg(usize),
    /// `T^k` for `k ∈ 1..=8`.
    T(u8, usize),
    /// `Z(a, b) = diag(1, ω^a, ω^b)`.
    Z(Thirds, Thirds, usize),
    /// `X(a, b) = H Z(a, b) H†`.
    XPhase(Thirds, Thirds, usize),
    /// `|c, t⟩ ↦ |c, t + c⟩`, fields are (control, target).
    CX(usize, usize),
    CXdg(usize, usize),
}

impl Gate {
    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::X(_, w)
            | Gate::H(w)
            | Gate::Hdg(w)
            | Gate::S(w)
            | Gate::Sdg(w)
            | Gate::T(_, w)
            | Gate::Z(_, _, w)
            | Gate::XPhase(_, _, w) => vec![w],
            Gate::CX(c, t) | Gate::CXdg(c, t) => vec![c, t],
        }
    }

    /// The same gate acting on remapped wires.
    pub fn map_wires(&self, f: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::X(p, w) => Gate::X(p, f(w)),
            Gate::H(w) => Gate::H(f(w)),
            Gate::Hdg(w) => Gate::Hdg(f(w)),
            Gate::S(w) => Gate::S(f(w)),
            Gate::Sdg(w) => Gate::Sdg(f(w)),
            Gate::T(k, w) => Gate::T(k, f(w)),
            Gate::Z(a, b, w) => Gate::Z(a, b, f(w)),
            Gate::XPhase(a, b, w) => Gate::XPhase(a, b, f(w)),
            Gate::CX(c, t) => Gate::CX(f(c), f(t)),
            Gate::CXdg(c, t) => Gate::CXdg(f(c), f(t)),
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::X(p, w) => Gate::X(p.inverse(), w),
            Gate::H(w) => Gate::Hdg(w),
            Gate::Hdg(w) => Gate::H(w),
            Gate::S(w) => Gate::Sdg(w),
            Gate::Sdg(w) => Gate::S(w),
            Gate::T(k, w) => Gate::T(9 - k, w),
            Gate::Z(a, b, w) => Gate::Z(a.neg(), b.neg(), w),
            Gate::XPhase(a, b, w) => Gate::XPhase(a.neg(), b.neg(), w),
            Gate::CX(c, t) => Gate::CXdg(c, t),
            Gate::CXdg(c, t) => Gate::CX(c, t),
        }
    }

    /// Non-Clifford gates count one each, whatever their power.
    pub fn is_t_like(&self) -> bool {
        match *self {
            Gate::T(..) => true,
            Gate::Z(a, b, _) | Gate::XPhase(a, b, _) => !(a.is_integer() && b.is_integer()),
            _ => false,
        }
    }

    pub fn kind_name(&self) -> String {
        match *self {
            Gate::X(p, _) => p.name().to_string(),
            Gate::H(_) => "H".into(),
            Gate::Hdg(_) => "Hdg".into(),
            Gate::S(_) => "S".into(),
            Gate::Sdg(_) => "Sdg".into(),
            Gate::T(1, _) => "T".into(),
            Gate::T(k, _) => format!("T^{k}"),
            Gate::Z(..) => "Z".into(),
            Gate::XPhase(..) => "X".into(),
            Gate::CX(..) => "CX".into(),
            Gate::CXdg(..) => "CXdg".into(),
        }
    }

    fn params(&self) -> Vec<String> {
        match *self {
            Gate::Z(a, b, _) | Gate::XPhase(a, b, _) => vec![a.to_string(), b.to_string()],
            _ => Vec::new(),
        }
    }

    /// Exact unitary on the gate's own wires (3×3, or 9×9 for CX kinds with
    /// the control as the high trit).
    pub fn unitary(&self) -> Matrix {
        gate_unitary(self)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind_name())?;
        for p in self.params() {
            write!(f, " {p}")?;
        }
        for w in self.wires() {
            write!(f, " {w}")?;
        }
        Ok(())
    }
}

fn diag_zeta(exps: [i64; 3]) -> Matrix {
    Matrix::diagonal(exps.iter().map(|&e| CycloNumber::zeta_pow(e)).collect())
}

fn perm_matrix(p: Perm3) -> Matrix {
    let t = p.table();
    let cols = (0..3)
        .map(|j| {
            let mut col = vec![CycloNumber::zero(); 3];
            col[t[j] as usize] = CycloNumber::one();
            col
        })
        .collect();
    Matrix::from_columns(cols)
}

fn hadamard(inverse: bool) -> Matrix {
    let sign = if inverse { -1 } else { 1 };
    let scale = if inverse { -CycloNumber::hadamard_scale() } else { CycloNumber::hadamard_scale() };
    let rows = (0..3)
        .map(|j| (0..3).map(|k| CycloNumber::zeta_pow(sign * 3 * j * k).clone()).collect())
        .collect();
    Matrix::from_rows(rows).scale(&scale)
}

/// Exact unitary of a single gate.
pub fn gate_unitary(g: &Gate) -> Matrix {
    match *g {
        Gate::X(p, _) => perm_matrix(p),
        Gate::H(_) => hadamard(false),
        Gate::Hdg(_) => hadamard(true),
        Gate::S(_) => diag_zeta([8, 8, 2]),
        Gate::Sdg(_) => diag_zeta([1, 1, 7]),
        Gate::T(k, _) => diag_zeta([0, k as i64, -(k as i64)]),
        Gate::Z(a, b, _) => diag_zeta([0, a.zeta_exp() as i64, b.zeta_exp() as i64]),
        Gate::XPhase(a, b, _) => {
            let z = diag_zeta([0, a.zeta_exp() as i64, b.zeta_exp() as i64]);
            hadamard(false).matmul(&z).matmul(&hadamard(true))
        }
        Gate::CX(..) | Gate::CXdg(..) => {
            let sign = if matches!(g, Gate::CX(..)) { 1 } else { 2 };
            let cols = (0..9)
                .map(|j| {
                    let (c, t) = (j / 3, j % 3);
                    let mut col = vec![CycloNumber::zero(); 9];
                    col[c * 3 + (t + sign * c) % 3] = CycloNumber::one();
                    col
                })
                .collect();
            Matrix::from_columns(cols)
        }
    }
}

/// An ordered gate list over `width` wires. The empty list is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Circuit {
    pub width: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Circuit { width, gates: Vec::new() }
    }

    /// Builds a circuit, checking every gate against the width.
    pub fn from_gates(width: usize, gates: Vec<Gate>) -> Result<Self, IrError> {
        let c = Circuit { width, gates };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), IrError> {
        for g in &self.gates {
            check_gate(g, self.width)?;
        }
        Ok(())
    }

    pub fn push(&mut self, g: Gate) {
        debug_assert!(check_gate(&g, self.width).is_ok(), "{g} outside width {}", self.width);
        self.gates.push(g);
    }

    pub fn extend(&mut self, other: &Circuit) {
        assert_eq!(self.width, other.width, "width mismatch");
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn t_count(&self) -> usize {
        t_count(self)
    }

    pub fn dagger(&self) -> Circuit {
        dagger(self)
    }

    /// Places this circuit on wires `map[i]` of a wider circuit.
    pub fn embed(&self, width: usize, map: &[usize]) -> Circuit {
        assert_eq!(map.len(), self.width, "wire map length");
        Circuit {
            width,
            gates: self.gates.iter().map(|g| g.map_wires(|w| map[w])).collect(),
        }
    }

    /// The line-oriented text form, with a `qutrits n` header.
    pub fn to_text(&self) -> String {
        serialize_circuit(self)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let gates: Vec<_> = self
            .gates
            .iter()
            .map(|g| json!({ "kind": g.kind_name(), "params": g.params(), "wires": g.wires() }))
            .collect();
        json!({ "width": self.width, "gates": gates, "t_count": self.t_count() })
    }
}

fn check_gate(g: &Gate, width: usize) -> Result<(), IrError> {
    let wires = g.wires();
    for &w in &wires {
        if w >= width {
            return Err(IrError::WireOutOfRange { gate: g.to_string(), wire: w, width });
        }
    }
    if wires.len() == 2 && wires[0] == wires[1] {
        return Err(IrError::RepeatedWire(g.to_string()));
    }
    Ok(())
}

pub fn t_count(c: &Circuit) -> usize {
    c.gates.iter().filter(|g| g.is_t_like()).count()
}

/// Reversed circuit with every gate inverted.
pub fn dagger(c: &Circuit) -> Circuit {
    Circuit {
        width: c.width,
        gates: c.gates.iter().rev().map(Gate::inverse).collect(),
    }
}

pub fn serialize_circuit(c: &Circuit) -> String {
    let mut out = format!("qutrits {}\n", c.width);
    for g in &c.gates {
        out.push_str(&g.to_string());
        out.push('\n');
    }
    out
}

fn parse_wire(tok: &str, line: usize) -> Result<usize, IrError> {
    tok.parse()
        .map_err(|_| IrError::Parse { line, msg: format!("bad wire index {tok:?}") })
}

fn parse_gate(toks: &[&str], line: usize) -> Result<Gate, IrError> {
    let err = |msg: String| IrError::Parse { line, msg };
    let name = toks[0];
    let args = &toks[1..];
    let expect = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(err(format!("{name} takes {n} arguments, got {}", args.len())))
        }
    };
    let one = |mk: fn(usize) -> Gate| -> Result<Gate, IrError> {
        expect(1)?;
        Ok(mk(parse_wire(args[0], line)?))
    };
    match name {
        "X+1" => one(|w| Gate::X(Perm3::Plus1, w)),
        "X-1" => one(|w| Gate::X(Perm3::Minus1, w)),
        "X01" => one(|w| Gate::X(Perm3::Swap01, w)),
        "X02" => one(|w| Gate::X(Perm3::Swap02, w)),
        "X12" => one(|w| Gate::X(Perm3::Swap12, w)),
        "H" => one(Gate::H),
        "Hdg" => one(Gate::Hdg),
        "S" => one(Gate::S),
        "Sdg" => one(Gate::Sdg),
        "T" => one(|w| Gate::T(1, w)),
        "CX" | "CXdg" => {
            expect(2)?;
            let (c, t) = (parse_wire(args[0], line)?, parse_wire(args[1], line)?);
            Ok(if name == "CX" { Gate::CX(c, t) } else { Gate::CXdg(c, t) })
        }
        "Z" | "X" => {
            expect(3)?;
            let a: Thirds = args[0].parse().map_err(err)?;
            let b: Thirds = args[1].parse().map_err(err)?;
            let w = parse_wire(args[2], line)?;
            Ok(if name == "Z" { Gate::Z(a, b, w) } else { Gate::XPhase(a, b, w) })
        }
        _ => {
            if let Some(k) = name.strip_prefix("T^") {
                match k.parse::<u8>() {
                    Ok(k @ 1..=8) => {
                        expect(1)?;
                        Ok(Gate::T(k, parse_wire(args[0], line)?))
                    }
                    _ => Err(err(format!("T power must be 1..8, got {k:?}"))),
                }
            } else {
                Err(err(format!("unknown gate {name:?}")))
            }
        }
    }
}

/// Parses the text format. Without a `qutrits n` header the width is one
/// more than the largest wire index used.
pub fn parse_circuit(text: &str) -> Result<Circuit, IrError> {
    let mut width: Option<usize> = None;
    let mut gates = Vec::new();
    let mut lines_of = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks[0] == "qutrits" {
            if width.is_some() || !gates.is_empty() {
                return Err(IrError::Parse { line, msg: "header must come first and only once".into() });
            }
            if toks.len() != 2 {
                return Err(IrError::Parse { line, msg: "expected `qutrits n`".into() });
            }
            width = Some(toks[1].parse().map_err(|_| IrError::Parse {
                line,
                msg: format!("bad width {:?}", toks[1]),
            })?);
            continue;
        }
        gates.push(parse_gate(&toks, line)?);
        lines_of.push(line);
    }
    let width = width.unwrap_or_else(|| gates.iter().flat_map(Gate::wires).max().map_or(0, |m| m + 1));
    for (g, &line) in gates.iter().zip(&lines_of) {
        check_gate(g, width).map_err(|e| IrError::Parse { line, msg: e.to_string() })?;
    }
    Ok(Circuit { width, gates })
}

impl FromStr for Circuit {
    type Err = IrError;
    fn from_str(s: &str) -> Result<Self, IrError> {
        parse_circuit(s)
    }
}

/// Per-wire control values; `None` marks a free (target) wire.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ControlPattern {
    pub entries: Vec<Option<u8>>,
}

impl ControlPattern {
    /// `k` wires controlled on `|2⟩` followed by `free` target wires.
    pub fn twos(k: usize, free: usize) -> Self {
        let mut entries = vec![Some(2); k];
        entries.extend(std::iter::repeat(None).take(free));
        ControlPattern { entries }
    }

    pub fn width(&self) -> usize {
        self.entries.len()
    }

    pub fn controls(&self) -> Vec<(usize, u8)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(w, v)| v.map(|v| (w, v)))
            .collect()
    }

    pub fn free_wires(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(w, _)| w)
            .collect()
    }

    /// Whether basis state `index` (over `self.width()` wires) fires.
    pub fn matches(&self, index: usize) -> bool {
        let n = self.width();
        self.entries.iter().enumerate().all(|(w, v)| match v {
            Some(v) => digit(index, w, n) == *v,
            None => true,
        })
    }
}

impl FromStr for ControlPattern {
    type Err = IrError;
    /// Accepts digits `0 1 2` and any of `· . - _` for free wires.
    fn from_str(s: &str) -> Result<Self, IrError> {
        let entries = s
            .chars()
            .map(|ch| match ch {
                '0' | '1' | '2' => Ok(Some(ch as u8 - b'0')),
                '·' | '.' | '-' | '_' => Ok(None),
                _ => Err(IrError::BadPattern(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if entries.is_empty() {
            return Err(IrError::BadPattern(s.to_string()));
        }
        Ok(ControlPattern { entries })
    }
}

impl fmt::Display for ControlPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.entries {
            match v {
                Some(v) => write!(f, "{v}")?,
                None => write!(f, "·")?,
            }
        }
        Ok(())
    }
}

/// Trit of wire `w` in basis index `index` over `n` wires.
pub fn digit(index: usize, w: usize, n: usize) -> u8 {
    ((index / 3usize.pow((n - 1 - w) as u32)) % 3) as u8
}

/// Basis index of a tritstring, wire 0 first.
pub fn index_of(trits: &[u8]) -> usize {
    trits.iter().fold(0, |acc, &t| acc * 3 + t as usize)
}

pub fn trits_of(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|w| digit(index, w, n)).collect()
}

/// Ancilla usage of a synthesized circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AncillaUse {
    None,
    /// A wire in an arbitrary state that is returned unchanged.
    Borrowed(usize),
}

/// A synthesized circuit plus its resource report.
#[derive(Clone, Debug)]
pub struct SynthResult {
    pub circuit: Circuit,
    pub t_count: usize,
    pub gate_count: usize,
    pub ancilla: AncillaUse,
    /// Number of two-controlled X₊₁ blocks emitted, where tracked.
    pub base_blocks: usize,
}

impl SynthResult {
    pub fn new(circuit: Circuit, ancilla: AncillaUse, base_blocks: usize) -> Self {
        SynthResult {
            t_count: circuit.t_count(),
            gate_count: circuit.len(),
            circuit,
            ancilla,
            base_blocks,
        }
    }
}

/// Default width cap for dense oracle matrices.
pub const DEFAULT_ORACLE_LIMIT: usize = 6;

/// Dense matrix of the `pattern`-controlled version of `u`. The free wires of
/// the pattern carry `u`'s wires in order.
pub fn controlled_unitary_oracle(u: &Circuit, pattern: &ControlPattern, limit: usize) -> Result<Matrix, IrError> {
    let width = pattern.width();
    if width > limit {
        return Err(IrError::OracleTooLarge { width, limit });
    }
    let free = pattern.free_wires();
    if free.len() != u.width {
        return Err(IrError::PatternMismatch { free: free.len(), width: u.width });
    }
    let inner = crate::sim::circuit_unitary(u, limit)?;
    Ok(embed_controlled(&inner, pattern))
}

/// Same as [`controlled_unitary_oracle`] for a single gate on wires `0..`.
pub fn controlled_gate_oracle(g: &Gate, pattern: &ControlPattern, limit: usize) -> Result<Matrix, IrError> {
    let arity = g.wires().len();
    let local = g.map_wires(|w| g.wires().iter().position(|&x| x == w).unwrap());
    controlled_unitary_oracle(&Circuit { width: arity, gates: vec![local] }, pattern, limit)
}

/// Block assembly: identity off-pattern, `inner` on matching basis states.
pub fn embed_controlled(inner: &Matrix, pattern: &ControlPattern) -> Matrix {
    let n = pattern.width();
    let free = pattern.free_wires();
    let dim = 3usize.pow(n as u32);
    let mut m = Matrix::zeros(dim);
    for col in 0..dim {
        if !pattern.matches(col) {
            m.set(col, col, CycloNumber::one());
            continue;
        }
        let sub = |idx: usize| free.iter().fold(0, |acc, &w| acc * 3 + digit(idx, w, n) as usize);
        let j = sub(col);
        for row in 0..dim {
            // rows that agree with col on every control wire
            if pattern.controls().iter().all(|&(w, _)| digit(row, w, n) == digit(col, w, n)) {
                let v = inner.get(sub(row), j);
                if !v.is_zero() {
                    m.set(row, col, v.clone());
                }
            }
        }
    }
    m
}
