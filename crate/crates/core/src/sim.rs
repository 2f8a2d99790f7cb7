//! State-vector simulation, exact over [`CycloNumber`] or in `f64`.
//!
//! Synthesized circuits are large but act on few wires, and applied to a
//! basis state they keep a tiny support, so most checks run a sparse state
//! one column at a time.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{CycloNumber, Matrix};
use crate::ir::{digit, Circuit, ControlPattern, Gate, IrError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("circuit has width {circuit} but the state has width {state}")]
    WidthMismatch { circuit: usize, state: usize },
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Scalar types a state can be built from.
pub trait Amplitude: Clone + Send + Sync + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul_zeta(&self, k: u8) -> Self;
    /// Multiplies by `-i/√3` (or `i/√3` when `inverse`).
    fn mul_h_scale(&self, inverse: bool) -> Self;
    fn from_exact(x: &CycloNumber) -> Self;
}

impl Amplitude for CycloNumber {
    fn zero() -> Self {
        CycloNumber::zero()
    }
    fn one() -> Self {
        CycloNumber::one()
    }
    fn is_zero(&self) -> bool {
        CycloNumber::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul_zeta(&self, k: u8) -> Self {
        self.mul_zeta_pow(k as i64)
    }
    fn mul_h_scale(&self, inverse: bool) -> Self {
        let x = self.mul_hadamard_scale();
        if inverse {
            -x
        } else {
            x
        }
    }
    fn from_exact(x: &CycloNumber) -> Self {
        x.clone()
    }
}

fn zeta_table() -> &'static [Complex64; 9] {
    static TABLE: std::sync::OnceLock<[Complex64; 9]> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 9.0)))
}

impl Amplitude for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    /// Cancellations leave rounding residue; pruning it below `1e-14` keeps
    /// sparse states sparse at no visible cost to a `1e-9` comparison.
    fn is_zero(&self) -> bool {
        self.norm_sqr() < 1e-28
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul_zeta(&self, k: u8) -> Self {
        self * zeta_table()[k as usize % 9]
    }
    fn mul_h_scale(&self, inverse: bool) -> Self {
        let s = 1.0 / 3f64.sqrt();
        self * if inverse { Complex64::new(0.0, s) } else { Complex64::new(0.0, -s) }
    }
    fn from_exact(x: &CycloNumber) -> Self {
        x.to_complex()
    }
}

/// A gate lowered to an index-level action.
#[derive(Clone, Copy, Debug)]
enum Op {
    /// Digit `d` on wire `w` becomes `perm[d]`, picking up `ζ^phase[d]`.
    Mono { w: usize, perm: [u8; 3], phase: [u8; 3] },
    Had { w: usize, inverse: bool },
    /// Target digit gains `sign·c`.
    Cx { c: usize, t: usize, sign: u8 },
}

/// A circuit compiled for repeated simulation.
#[derive(Clone, Debug)]
pub struct Program {
    width: usize,
    ops: Vec<Op>,
}

impl Program {
    pub fn new(c: &Circuit) -> Self {
        let mut ops = Vec::with_capacity(c.len());
        let id = [0, 1, 2];
        for g in &c.gates {
            match *g {
                Gate::X(p, w) => ops.push(Op::Mono { w, perm: p.table(), phase: [0; 3] }),
                Gate::H(w) => ops.push(Op::Had { w, inverse: false }),
                Gate::Hdg(w) => ops.push(Op::Had { w, inverse: true }),
                Gate::S(w) => ops.push(Op::Mono { w, perm: id, phase: [8, 8, 2] }),
                Gate::Sdg(w) => ops.push(Op::Mono { w, perm: id, phase: [1, 1, 7] }),
                Gate::T(k, w) => ops.push(Op::Mono { w, perm: id, phase: [0, k % 9, (9 - k % 9) % 9] }),
                Gate::Z(a, b, w) => ops.push(Op::Mono { w, perm: id, phase: [0, a.zeta_exp(), b.zeta_exp()] }),
                Gate::XPhase(a, b, w) => {
                    ops.push(Op::Had { w, inverse: true });
                    ops.push(Op::Mono { w, perm: id, phase: [0, a.zeta_exp(), b.zeta_exp()] });
                    ops.push(Op::Had { w, inverse: false });
                }
                Gate::CX(c, t) => ops.push(Op::Cx { c, t, sign: 1 }),
                Gate::CXdg(c, t) => ops.push(Op::Cx { c, t, sign: 2 }),
            }
        }
        Program { width: c.width, ops }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn stride(&self, w: usize) -> usize {
        3usize.pow((self.width - 1 - w) as u32)
    }

    /// Runs the program on a sparse state in place.
    pub fn run_sparse<A: Amplitude>(&self, s: &mut SparseState<A>) {
        assert_eq!(s.width, self.width, "width mismatch");
        for op in &self.ops {
            match *op {
                Op::Mono { w, perm, phase } => {
                    let st = self.stride(w);
                    for (idx, a) in s.entries.iter_mut() {
                        let d = (*idx / st) % 3;
                        *idx = *idx - d * st + perm[d] as usize * st;
                        if phase[d] != 0 {
                            *a = a.mul_zeta(phase[d]);
                        }
                    }
                }
                Op::Cx { c, t, sign } => {
                    let (sc, stt) = (self.stride(c), self.stride(t));
                    for (idx, _) in s.entries.iter_mut() {
                        let dc = (*idx / sc) % 3;
                        let dt = (*idx / stt) % 3;
                        let nt = (dt + sign as usize * dc) % 3;
                        *idx = *idx - dt * stt + nt * stt;
                    }
                }
                Op::Had { w, inverse } => {
                    let st = self.stride(w);
                    let mut entries = std::mem::take(&mut s.entries);
                    entries.sort_unstable_by_key(|(idx, _)| {
                        let d = (idx / st) % 3;
                        (idx - d * st, d)
                    });
                    let mut out = Vec::with_capacity(entries.len() * 3);
                    let mut i = 0;
                    while i < entries.len() {
                        let base = entries[i].0 - ((entries[i].0 / st) % 3) * st;
                        let mut input: [Option<A>; 3] = [None, None, None];
                        while i < entries.len() {
                            let d = (entries[i].0 / st) % 3;
                            if entries[i].0 - d * st != base {
                                break;
                            }
                            input[d] = Some(std::mem::replace(&mut entries[i].1, A::zero()));
                            i += 1;
                        }
                        for (k, v) in hadamard3(&input, inverse).into_iter().enumerate() {
                            if !v.is_zero() {
                                out.push((base + k * st, v));
                            }
                        }
                    }
                    s.entries = out;
                }
            }
        }
    }

    /// Runs the program on a dense state.
    pub fn run_dense<A: Amplitude>(&self, s: &StateVector<A>) -> StateVector<A> {
        let mut sparse = SparseState {
            width: s.width,
            entries: s
                .amps
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .map(|(i, a)| (i, a.clone()))
                .collect(),
        };
        self.run_sparse(&mut sparse);
        sparse.to_dense()
    }

    /// Image of basis state `col`.
    pub fn column<A: Amplitude>(&self, col: usize) -> SparseState<A> {
        let mut s = SparseState::basis(self.width, col);
        self.run_sparse(&mut s);
        s.canonicalize();
        s
    }
}

/// `out[k] = s·Σ_j ω^(±jk)·in[j]`.
fn hadamard3<A: Amplitude>(input: &[Option<A>; 3], inverse: bool) -> [A; 3] {
    std::array::from_fn(|k| {
        let mut acc = A::zero();
        for (j, a) in input.iter().enumerate() {
            if let Some(a) = a {
                let e = (3 * j * k) % 9;
                let e = if inverse { (9 - e) % 9 } else { e } as u8;
                acc = acc.add(&a.mul_zeta(e));
            }
        }
        acc.mul_h_scale(inverse)
    })
}

/// A state stored as its nonzero amplitudes.
#[derive(Clone, Debug)]
pub struct SparseState<A> {
    pub width: usize,
    pub entries: Vec<(usize, A)>,
}

impl<A: Amplitude> SparseState<A> {
    pub fn basis(width: usize, index: usize) -> Self {
        SparseState { width, entries: vec![(index, A::one())] }
    }

    /// Sorts by index and drops explicit zeros.
    pub fn canonicalize(&mut self) {
        self.entries.retain(|(_, a)| !a.is_zero());
        self.entries.sort_unstable_by_key(|(i, _)| *i);
    }

    pub fn to_dense(&self) -> StateVector<A> {
        let mut amps = vec![A::zero(); 3usize.pow(self.width as u32)];
        for (i, a) in &self.entries {
            amps[*i] = amps[*i].add(a);
        }
        StateVector { width: self.width, amps }
    }
}

/// Dense state over `3^width` amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<A> {
    pub width: usize,
    pub amps: Vec<A>,
}

impl<A: Amplitude> StateVector<A> {
    pub fn basis(width: usize, index: usize) -> Self {
        let mut amps = vec![A::zero(); 3usize.pow(width as u32)];
        amps[index] = A::one();
        StateVector { width, amps }
    }
}

impl StateVector<Complex64> {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Applies `c` to `s`, gates left to right.
pub fn apply_circuit<A: Amplitude>(c: &Circuit, s: &StateVector<A>) -> Result<StateVector<A>, SimError> {
    if c.width != s.width {
        return Err(SimError::WidthMismatch { circuit: c.width, state: s.width });
    }
    Ok(Program::new(c).run_dense(s))
}

/// Dense unitary; column `j` is the image of basis state `j`.
pub fn circuit_unitary(c: &Circuit, limit: usize) -> Result<Matrix, IrError> {
    if c.width > limit {
        return Err(IrError::OracleTooLarge { width: c.width, limit });
    }
    let prog = Program::new(c);
    let dim = 3usize.pow(c.width as u32);
    let cols: Vec<Vec<CycloNumber>> = (0..dim)
        .into_par_iter()
        .map(|j| prog.column::<CycloNumber>(j).to_dense().amps)
        .collect();
    Ok(Matrix::from_columns(cols))
}

/// Something a circuit can be compared against, column by column.
#[derive(Clone, Debug)]
pub enum Target {
    Matrix(Matrix),
    /// `inner` applied on the pattern's free wires when the controls match.
    Controlled { pattern: ControlPattern, inner: Matrix },
    Circuit(Circuit),
}

impl Target {
    pub fn controlled(pattern: ControlPattern, inner: Matrix) -> Self {
        assert_eq!(inner.dim(), 3usize.pow(pattern.free_wires().len() as u32), "inner size");
        Target::Controlled { pattern, inner }
    }

    /// `pattern`-controlled version of a small circuit `u`.
    pub fn controlled_circuit(pattern: ControlPattern, u: &Circuit) -> Result<Self, IrError> {
        let inner = circuit_unitary(u, crate::ir::DEFAULT_ORACLE_LIMIT)?;
        Ok(Target::controlled(pattern, inner))
    }

    pub fn width(&self) -> usize {
        match self {
            Target::Matrix(m) => (m.dim() as f64).log(3.0).round() as usize,
            Target::Controlled { pattern, .. } => pattern.width(),
            Target::Circuit(c) => c.width,
        }
    }

    /// Sparse exact column `col`, sorted by row.
    pub fn column(&self, col: usize) -> Vec<(usize, CycloNumber)> {
        match self {
            Target::Matrix(m) => (0..m.dim())
                .filter_map(|r| {
                    let v = m.get(r, col);
                    (!v.is_zero()).then(|| (r, v.clone()))
                })
                .collect(),
            Target::Controlled { pattern, inner } => {
                if !pattern.matches(col) {
                    return vec![(col, CycloNumber::one())];
                }
                let n = pattern.width();
                let free = pattern.free_wires();
                let j = free.iter().fold(0, |acc, &w| acc * 3 + digit(col, w, n) as usize);
                let mut base = col;
                for &w in &free {
                    base -= digit(col, w, n) as usize * 3usize.pow((n - 1 - w) as u32);
                }
                let mut out: Vec<(usize, CycloNumber)> = (0..inner.dim())
                    .filter_map(|i| {
                        let v = inner.get(i, j);
                        if v.is_zero() {
                            return None;
                        }
                        let mut row = base;
                        for (pos, &w) in free.iter().enumerate() {
                            let d = (i / 3usize.pow((free.len() - 1 - pos) as u32)) % 3;
                            row += d * 3usize.pow((n - 1 - w) as u32);
                        }
                        Some((row, v.clone()))
                    })
                    .collect();
                out.sort_by_key(|(r, _)| *r);
                out
            }
            Target::Circuit(c) => Program::new(c).column::<CycloNumber>(col).entries,
        }
    }

    /// Whether column `col` lies inside the firing subspace.
    fn fires(&self, col: usize) -> bool {
        match self {
            Target::Controlled { pattern, .. } => pattern.matches(col),
            _ => true,
        }
    }
}

/// Which basis columns a check visits.
#[derive(Clone, Debug)]
pub enum Columns {
    All,
    Subset(Vec<usize>),
}

impl Columns {
    fn resolve(&self, width: usize) -> Vec<usize> {
        match self {
            Columns::All => (0..3usize.pow(width as u32)).collect(),
            Columns::Subset(v) => v.clone(),
        }
    }
}

/// `samples` seeded random columns plus, for each control wire and value,
/// the state with that wire at the value, all other controls at 2 and the
/// free wires at 0.
pub fn sampled_columns(width: usize, pattern: Option<&ControlPattern>, samples: usize, seed: u64) -> Vec<usize> {
    let dim = 3usize.pow(width as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<usize> = (0..samples).map(|_| rng.gen_range(0..dim)).collect();
    if let Some(p) = pattern {
        let ctrl = p.controls();
        for &(w, _) in &ctrl {
            for v in 0..3u8 {
                let mut trits = vec![0u8; width];
                for &(cw, _) in &ctrl {
                    trits[cw] = 2;
                }
                trits[w] = v;
                cols.push(crate::ir::index_of(&trits));
            }
        }
    }
    cols.sort_unstable();
    cols.dedup();
    cols
}

/// Outcome of a phase-aware comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhaseVerdict {
    Exact,
    /// Equal after multiplying the firing subspace of the target by `ζ^k`.
    Phase(u8),
    Unequal { column: usize },
}

fn check_width(c: &Circuit, t: &Target) -> Result<(), SimError> {
    if c.width != t.width() {
        return Err(SimError::WidthMismatch { circuit: c.width, state: t.width() });
    }
    Ok(())
}

/// Exact column-by-column equality including global phase.
pub fn equal_exact(c: &Circuit, target: &Target, cols: &Columns) -> Result<bool, SimError> {
    Ok(first_mismatch(c, target, cols)?.is_none())
}

/// First column where `c` and `target` differ, if any.
pub fn first_mismatch(c: &Circuit, target: &Target, cols: &Columns) -> Result<Option<usize>, SimError> {
    check_width(c, target)?;
    let prog = Program::new(c);
    let cols = cols.resolve(c.width);
    Ok(cols
        .into_par_iter()
        .find_first(|&j| prog.column::<CycloNumber>(j).entries != target.column(j)))
}

/// Decides whether `c` equals `target` up to a phase `ζ^k` on the firing
/// subspace of `target` (which should be a [`Target::Controlled`]).
pub fn equal_up_to_controlled_phase(c: &Circuit, target: &Target, cols: &Columns) -> Result<PhaseVerdict, SimError> {
    check_width(c, target)?;
    let prog = Program::new(c);
    let cols = cols.resolve(c.width);
    let mut phase: Option<u8> = None;
    for j in cols {
        let got = prog.column::<CycloNumber>(j).entries;
        let want = target.column(j);
        if !target.fires(j) {
            if got != want {
                return Ok(PhaseVerdict::Unequal { column: j });
            }
            continue;
        }
        if got.len() != want.len() || got.iter().zip(&want).any(|(a, b)| a.0 != b.0) {
            return Ok(PhaseVerdict::Unequal { column: j });
        }
        let k = match got.first() {
            Some((_, a)) => a.zeta_ratio(&want[0].1),
            None => Some(0),
        };
        let Some(k) = k else {
            return Ok(PhaseVerdict::Unequal { column: j });
        };
        if phase.is_some_and(|p| p != k) {
            return Ok(PhaseVerdict::Unequal { column: j });
        }
        phase = Some(k);
        if got.iter().zip(&want).any(|(a, b)| a.1 != b.1.mul_zeta_pow(k as i64)) {
            return Ok(PhaseVerdict::Unequal { column: j });
        }
    }
    Ok(match phase {
        None | Some(0) => PhaseVerdict::Exact,
        Some(k) => PhaseVerdict::Phase(k),
    })
}

/// Float comparison per amplitude with tolerance `tol`.
pub fn equal_float(c: &Circuit, target: &Target, cols: &Columns, tol: f64) -> Result<bool, SimError> {
    check_width(c, target)?;
    let prog = Program::new(c);
    let cols = cols.resolve(c.width);
    Ok(cols.into_par_iter().all(|j| {
        let got = prog.column::<Complex64>(j).to_dense();
        let mut want = vec![Complex64::new(0.0, 0.0); got.amps.len()];
        for (r, v) in target.column(j) {
            want[r] = v.to_complex();
        }
        got.amps.iter().zip(&want).all(|(a, b)| (a - b).norm() <= tol)
    }))
}

/// Either the basis permutation a circuit implements, or a witness input
/// whose image is not a single basis state with amplitude exactly 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassicalAction {
    Permutation(Vec<usize>),
    NotClassical { witness: usize },
}

pub fn classical_action(c: &Circuit) -> ClassicalAction {
    let prog = Program::new(c);
    let dim = 3usize.pow(c.width as u32);
    let images: Vec<Result<usize, usize>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let s = prog.column::<CycloNumber>(j);
            match s.entries.as_slice() {
                [(i, a)] if a.is_one() => Ok(*i),
                _ => Err(j),
            }
        })
        .collect();
    let mut map = Vec::with_capacity(dim);
    let mut seen = vec![false; dim];
    for (j, r) in images.into_iter().enumerate() {
        match r {
            Ok(i) if !seen[i] => {
                seen[i] = true;
                map.push(i);
            }
            _ => return ClassicalAction::NotClassical { witness: j },
        }
    }
    ClassicalAction::Permutation(map)
}

/// Single-wire states used to probe a borrowed ancilla: the three basis
/// states and the three Fourier states `(|0⟩ + ω^j|1⟩ + ω^(2j)|2⟩)/√3`.
pub fn ancilla_probe_states() -> Vec<[Complex64; 3]> {
    let z = zeta_table();
    let mut out: Vec<[Complex64; 3]> = (0..3)
        .map(|i| std::array::from_fn(|d| if d == i { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }))
        .collect();
    let s = 1.0 / 3f64.sqrt();
    for j in 0..3 {
        out.push(std::array::from_fn(|d| z[(3 * j * d) % 9] * s));
    }
    out
}

/// Checks that `c` acts as `target ⊗ I` on the ancilla wire `anc` for each
/// basis input of the other wires, with the ancilla prepared in each probe
/// state. Float comparison within `tol`; inputs restricted to `rest_cols`
/// (indices over the non-ancilla wires) when given.
pub fn check_borrowed_ancilla_float(
    c: &Circuit,
    target: &Target,
    anc: usize,
    rest_cols: Option<&[usize]>,
    tol: f64,
) -> Result<bool, SimError> {
    let n = c.width;
    if target.width() + 1 != n {
        return Err(SimError::WidthMismatch { circuit: n, state: target.width() + 1 });
    }
    let prog = Program::new(c);
    let rest_dim = 3usize.pow((n - 1) as u32);
    let cols: Vec<usize> = rest_cols.map_or_else(|| (0..rest_dim).collect(), <[usize]>::to_vec);
    let insert = |rest: usize, a: usize| -> usize {
        let st = 3usize.pow((n - 1 - anc) as u32);
        let hi = rest / st;
        let lo = rest % st;
        (hi * 3 + a) * st + lo
    };
    let probes = ancilla_probe_states();
    Ok(cols.into_par_iter().all(|j| {
        let want_rest = target.column(j);
        probes.iter().all(|probe| {
            let mut s = SparseState::<Complex64> {
                width: n,
                entries: (0..3).filter(|&a| probe[a].norm() > 0.0).map(|a| (insert(j, a), probe[a])).collect(),
            };
            prog.run_sparse(&mut s);
            let got = s.to_dense();
            let mut want = vec![Complex64::new(0.0, 0.0); got.amps.len()];
            for (r, v) in &want_rest {
                for a in 0..3 {
                    want[insert(*r, a)] += v.to_complex() * probe[a];
                }
            }
            got.amps.iter().zip(&want).all(|(x, y)| (x - y).norm() <= tol)
        })
    }))
}

/// Exact borrowed-ancilla check: for each ancilla basis value the circuit
/// must map `|rest⟩|a⟩` to `target|rest⟩ ⊗ |a⟩`.
pub fn check_borrowed_ancilla_exact(
    c: &Circuit,
    target: &Target,
    anc: usize,
    rest_cols: Option<&[usize]>,
) -> Result<bool, SimError> {
    let n = c.width;
    if target.width() + 1 != n {
        return Err(SimError::WidthMismatch { circuit: n, state: target.width() + 1 });
    }
    let prog = Program::new(c);
    let rest_dim = 3usize.pow((n - 1) as u32);
    let cols: Vec<usize> = rest_cols.map_or_else(|| (0..rest_dim).collect(), <[usize]>::to_vec);
    let st = 3usize.pow((n - 1 - anc) as u32);
    let insert = |rest: usize, a: usize| (rest / st * 3 + a) * st + rest % st;
    Ok(cols.into_par_iter().all(|j| {
        let want_rest = target.column(j);
        (0..3).all(|a| {
            let got = prog.column::<CycloNumber>(insert(j, a)).entries;
            let mut want: Vec<(usize, CycloNumber)> = want_rest.iter().map(|(r, v)| (insert(*r, a), v.clone())).collect();
            want.sort_by_key(|(r, _)| *r);
            got == want
        })
    }))
}

/// Uniform random complex state with a fixed seed, for float tests.
pub fn random_float_state(width: usize, seed: u64) -> StateVector<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> = (0..3usize.pow(width as u32))
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector { width, amps: amps.into_iter().map(|a| a / norm).collect() }
}
