//! Multiply-controlled gate synthesis.
//!
//! Every construction here is `|2…2⟩`-controlled: the gate fires when each
//! control wire holds `|2⟩`. Other control values are reached by
//! [`conjugate_controls`]. Circuits are emitted in application order.
//!
//! Wire layout of the public constructors: controls on wires `0..k`, the
//! target next, then a borrowed ancilla if the construction needs one.

use std::sync::OnceLock;

use thiserror::Error;

use crate::arith::{CycloNumber, Matrix};
use crate::ir::{
    gate_unitary, parse_circuit, AncillaUse, Circuit, ControlPattern, Gate, IrError, Perm3, SynthResult, Thirds,
};
use crate::sim::{self, Columns, PhaseVerdict, Target};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("{op} needs at least {min} controls, got {k}")]
    TooFewControls { op: &'static str, k: usize, min: usize },
    #[error("ancilla wire {0} collides with a control or target")]
    AncillaCollision(usize),
    #[error("controlled {0} is not exactly realizable here: {1}")]
    Unsupported(String, &'static str),
    #[error("patterns {0} and {1} do not have the same control wires")]
    IncompatiblePatterns(String, String),
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// A verified two-wire building block (wire 0 control, wire 1 target).
#[derive(Clone, Debug)]
pub struct BaseTemplate {
    pub name: &'static str,
    pub circuit: Circuit,
    /// `Some(k)` when the circuit equals its target only up to a controlled
    /// phase `ζ^k`.
    pub phase: Option<u8>,
    /// Control value the template fires on.
    pub control: u8,
    pub target_gate: Gate,
}

impl BaseTemplate {
    pub fn t_count(&self) -> usize {
        self.circuit.t_count()
    }

    /// Target matrix on two wires, including the documented phase.
    pub fn oracle(&self) -> Target {
        let mut pattern = ControlPattern::twos(1, 1);
        pattern.entries[0] = Some(self.control);
        Target::controlled(pattern, gate_unitary(&self.target_gate))
    }

    /// Runs the oracle comparison and returns the phase found.
    pub fn check(&self) -> PhaseVerdict {
        sim::equal_up_to_controlled_phase(&self.circuit, &self.oracle(), &Columns::All).expect("two-wire template")
    }
}

pub const TEMPLATE_NAMES: [&str; 6] =
    ["ctrl0_Z", "ctrl2_Xplus1", "ctrl2_X01", "ctrl2_S", "ctrl2_Z22_relphase", "ctrl2_H"];

fn load_templates() -> Vec<BaseTemplate> {
    let z = Thirds::int;
    let raw: [(&str, &str, Option<u8>, u8, Gate); 6] = [
        ("ctrl0_Z", include_str!("../templates/ctrl0_Z.qt"), None, 0, Gate::Z(z(1), z(2), 0)),
        ("ctrl2_Xplus1", include_str!("../templates/ctrl2_Xplus1.qt"), None, 2, Gate::X(Perm3::Plus1, 0)),
        ("ctrl2_X01", include_str!("../templates/ctrl2_X01.qt"), None, 2, Gate::X(Perm3::Swap01, 0)),
        ("ctrl2_S", include_str!("../templates/ctrl2_S.qt"), None, 2, Gate::S(0)),
        ("ctrl2_Z22_relphase", include_str!("../templates/ctrl2_Z22_relphase.qt"), Some(2), 2, Gate::Z(z(2), z(2), 0)),
        ("ctrl2_H", include_str!("../templates/ctrl2_H.qt"), None, 2, Gate::H(0)),
    ];
    raw.into_iter()
        .map(|(name, text, phase, control, target_gate)| {
            let circuit = parse_circuit(text).unwrap_or_else(|e| panic!("template {name}: {e}"));
            let t = BaseTemplate { name, circuit, phase, control, target_gate };
            let expect = match phase {
                None => PhaseVerdict::Exact,
                Some(k) => PhaseVerdict::Phase(k),
            };
            let got = t.check();
            assert_eq!(got, expect, "template {name} fails its oracle");
            t
        })
        .collect()
}

fn templates() -> &'static [BaseTemplate] {
    static CELL: OnceLock<Vec<BaseTemplate>> = OnceLock::new();
    CELL.get_or_init(load_templates)
}

/// Looks up a verified template. The first call verifies all of them and
/// panics if any fails.
pub fn base_template(name: &str) -> Result<&'static BaseTemplate, SynthError> {
    templates()
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| SynthError::UnknownTemplate(name.to_string()))
}

fn tpl(name: &str) -> &'static Circuit {
    &base_template(name).expect("built-in template").circuit
}

/// Rewrites a circuit controlled by `from` into one controlled by `to` by
/// conjugating each control wire with an X permutation.
pub fn conjugate_controls(c: &Circuit, from: &ControlPattern, to: &ControlPattern) -> Result<Circuit, SynthError> {
    let incompatible = || SynthError::IncompatiblePatterns(from.to_string(), to.to_string());
    if from.width() != to.width() || from.width() > c.width {
        return Err(incompatible());
    }
    let mut pre = Vec::new();
    for (w, (f, t)) in from.entries.iter().zip(&to.entries).enumerate() {
        match (f, t) {
            (None, None) => {}
            (Some(f), Some(t)) => {
                if let Some(p) = Perm3::shift(*t, *f) {
                    pre.push(Gate::X(p, w));
                }
            }
            _ => return Err(incompatible()),
        }
    }
    let mut out = Circuit::new(c.width);
    out.gates.extend(pre.iter().copied());
    out.gates.extend(c.gates.iter().copied());
    out.gates.extend(pre.iter().rev().map(Gate::inverse));
    Ok(out)
}

/// Exponent vector `(d0, d1, d2)` of `diag(ζ^d0, ζ^d1, ζ^d2)`, mod 9.
type Diag = [i64; 3];

fn m9(x: i64) -> i64 {
    x.rem_euclid(9)
}

/// Gate-level emitter with a counter of two-controlled X±1 blocks.
struct Emitter {
    width: usize,
    gates: Vec<Gate>,
    blocks: usize,
}

impl Emitter {
    fn new(width: usize) -> Self {
        Emitter { width, gates: Vec::new(), blocks: 0 }
    }

    fn finish(self, ancilla: AncillaUse) -> SynthResult {
        let c = Circuit { width: self.width, gates: self.gates };
        debug_assert!(c.validate().is_ok());
        SynthResult::new(c, ancilla, self.blocks)
    }

    fn g(&mut self, g: Gate) {
        self.gates.push(g);
    }

    fn x(&mut self, p: Perm3, w: usize) {
        self.g(Gate::X(p, w));
    }

    fn template(&mut self, c: &Circuit, ctrl: usize, t: usize) {
        self.gates.extend(c.gates.iter().map(|g| g.map_wires(|w| [ctrl, t][w])));
    }

    /// Emits the inverse of whatever `f` emits.
    fn dagger_of(&mut self, f: impl FnOnce(&mut Self)) {
        let start = self.gates.len();
        f(self);
        let tail: Vec<Gate> = self.gates.drain(start..).rev().map(|g| g.inverse()).collect();
        self.gates.extend(tail);
    }

    /// Runs `f` (a `|2⟩`-controlled construction on `c`) so that it fires on
    /// `|v⟩` instead.
    fn on_value(&mut self, c: usize, v: u8, f: impl FnOnce(&mut Self)) {
        let p = Perm3::shift(v, 2);
        if let Some(p) = p {
            self.x(p, c);
        }
        f(self);
        if let Some(p) = p {
            self.x(p.inverse(), c);
        }
    }

    fn diag(&mut self, d: [i64; 2], w: usize) {
        // diag(1, ζ^d1, ζ^d2) as T^j Z(a, b); needs d1 + d2 ≡ 0 mod 3
        let (d1, d2) = (m9(d[0]), m9(d[1]));
        debug_assert_eq!((d1 + d2) % 3, 0);
        let j = d1 % 3;
        if j != 0 {
            self.g(Gate::T(j as u8, w));
        }
        let (a, b) = (m9(d1 - j), m9(d2 + j));
        if a != 0 || b != 0 {
            self.g(Gate::Z(Thirds::new(a), Thirds::new(b), w));
        }
    }

    /// Ancilla-free `|2^k⟩`-controlled X₊₁.
    fn mc_plus1(&mut self, ctrls: &[usize], t: usize) {
        match ctrls.len() {
            0 => self.x(Perm3::Plus1, t),
            1 => self.template(tpl("ctrl2_Xplus1"), ctrls[0], t),
            k => {
                if k == 2 {
                    self.blocks += 1;
                }
                // X+1 · X01 · X+1 · X01 · X+1 fires as X+1, else X+1³ = I
                self.x(Perm3::Plus1, t);
                self.mc_x01(ctrls, t);
                self.x(Perm3::Plus1, t);
                self.mc_x01(ctrls, t);
                self.x(Perm3::Plus1, t);
            }
        }
    }

    fn mc_minus1(&mut self, ctrls: &[usize], t: usize) {
        self.dagger_of(|e| e.mc_plus1(ctrls, t));
    }

    fn mc_shift(&mut self, ctrls: &[usize], t: usize, plus: bool) {
        if plus {
            self.mc_plus1(ctrls, t)
        } else {
            self.mc_minus1(ctrls, t)
        }
    }

    /// X±1 with one borrowed wire `anc`, cycling the ancilla three times.
    fn mc_shift_borrowed(&mut self, ctrls: &[usize], t: usize, anc: usize, plus: bool) {
        if ctrls.len() <= 2 {
            return self.mc_shift(ctrls, t, plus);
        }
        let half = ctrls.len().div_ceil(2);
        let (a, b) = ctrls.split_at(half);
        let mut b_anc: Vec<usize> = b.to_vec();
        b_anc.push(anc);
        b_anc.sort_unstable();
        let mut pool_a: Vec<usize> = b.to_vec();
        pool_a.push(t);
        let pool_b = a.to_vec();
        for _ in 0..3 {
            self.mc_shift_pool(a, anc, true, &pool_a);
            self.mc_shift_pool(&b_anc, t, plus, &pool_b);
        }
    }

    /// Controlled shift that borrows the lowest wire of `pool` when it has
    /// three or more controls.
    fn mc_shift_pool(&mut self, ctrls: &[usize], t: usize, plus: bool, pool: &[usize]) {
        if ctrls.len() <= 2 {
            self.mc_shift(ctrls, t, plus);
        } else {
            let anc = *pool.iter().min().expect("an idle wire to borrow");
            self.mc_shift_borrowed(ctrls, t, anc, plus);
        }
    }

    /// `|V⟩` on `t` when `b = 2`, `V²` when `b = 1`, both under `a`:
    /// the single-control V/V² trick.
    fn vv2(
        &mut self,
        a: &[usize],
        b: usize,
        t: usize,
        ctrl1_v: impl Fn(&mut Self, usize, usize),
        ctrl1_vdg: impl Fn(&mut Self, usize, usize),
        outer_v: impl FnOnce(&mut Self),
    ) {
        self.on_value(b, 1, |e| ctrl1_v(e, b, t));
        self.mc_shift_pool(a, b, true, &[t]);
        self.on_value(b, 1, |e| ctrl1_vdg(e, b, t));
        self.mc_shift_pool(a, b, false, &[t]);
        outer_v(self);
    }

    fn mc_x01(&mut self, ctrls: &[usize], t: usize) {
        match ctrls.len() {
            0 => self.x(Perm3::Swap01, t),
            1 => self.template(tpl("ctrl2_X01"), ctrls[0], t),
            k => {
                let (a, b) = (&ctrls[..k - 1], ctrls[k - 1]);
                let x01 = |e: &mut Self, c: usize, t: usize| e.template(tpl("ctrl2_X01"), c, t);
                self.vv2(a, b, t, x01, x01, |e| e.mc_x01(a, t));
            }
        }
    }

    fn mc_perm(&mut self, ctrls: &[usize], p: Perm3, t: usize) {
        match p {
            Perm3::Plus1 => self.mc_plus1(ctrls, t),
            Perm3::Minus1 => self.mc_minus1(ctrls, t),
            Perm3::Swap01 => self.mc_x01(ctrls, t),
            Perm3::Swap12 => {
                self.x(Perm3::Minus1, t);
                self.mc_x01(ctrls, t);
                self.x(Perm3::Plus1, t);
            }
            Perm3::Swap02 => {
                self.x(Perm3::Plus1, t);
                self.mc_x01(ctrls, t);
                self.x(Perm3::Minus1, t);
            }
        }
    }

    /// Fires `X₋₁ E X₊₁ E⁻¹`, i.e. `(e1, e2 − e1, −e2)` for `E = (0, e1, e2)`.
    fn mc_cyclic(&mut self, ctrls: &[usize], t: usize, e: [i64; 2]) {
        self.diag([-e[0], -e[1]], t);
        self.mc_plus1(ctrls, t);
        self.diag(e, t);
        self.mc_minus1(ctrls, t);
    }

    /// Fires `T^j` using `X₁₂ T⁴ X₁₂ = T⁵`.
    fn mc_t(&mut self, ctrls: &[usize], t: usize, j: i64) {
        let j = m9(j);
        if j == 0 {
            return;
        }
        self.g(Gate::T(m9(5 * j) as u8, t));
        self.mc_perm(ctrls, Perm3::Swap12, t);
        self.g(Gate::T(m9(4 * j) as u8, t));
        self.mc_perm(ctrls, Perm3::Swap12, t);
    }

    fn mc_s(&mut self, ctrls: &[usize], t: usize) {
        if ctrls.len() == 1 {
            return self.template(tpl("ctrl2_S"), ctrls[0], t);
        }
        self.mc_cyclic(ctrls, t, [8, 7]);
    }

    /// Controlled `ζ² Z(2,2)`.
    fn mc_z22_rel(&mut self, ctrls: &[usize], t: usize) {
        if ctrls.len() == 1 {
            return self.template(tpl("ctrl2_Z22_relphase"), ctrls[0], t);
        }
        self.mc_cyclic(ctrls, t, [2, 1]);
    }

    /// Controlled `Z(0, p)` on `t`, borrowing `anc`: a cyclic sandwich on
    /// the ancilla controlled by the controls and `t`.
    fn mc_z0p_borrowed(&mut self, ctrls: &[usize], t: usize, p: i64, anc: usize) {
        let mut all = ctrls.to_vec();
        all.push(t);
        all.sort_unstable();
        self.mc_cyclic(&all, anc, [3 * p, 6 * p]);
    }

    /// `ω^p` on the subspace where every wire of `ctrls` is 2, borrowing
    /// `spare` when there are two or more controls.
    fn mc_omega(&mut self, ctrls: &[usize], p: i64, spare: usize) {
        let p = p.rem_euclid(3);
        if p == 0 {
            return;
        }
        match ctrls.len() {
            0 => panic!("a global phase cannot be emitted"),
            1 => self.g(Gate::Z(Thirds::int(0), Thirds::int(p), ctrls[0])),
            k => self.mc_z0p_borrowed(&ctrls[..k - 1], ctrls[k - 1], p, spare),
        }
    }

    /// Controlled `ζ^p·I` on `t` via controlled `Z(0,p)` and `S^(−p)`.
    fn mc_zeta(&mut self, ctrls: &[usize], t: usize, p: i64, anc: usize) {
        let p = m9(p);
        let (omega, rest) = (p / 3, p % 3);
        self.mc_omega(ctrls, omega, t);
        if rest != 0 {
            self.mc_z0p_borrowed(ctrls, t, rest, anc);
            for _ in 0..rest {
                self.dagger_of(|e| e.mc_s(ctrls, t));
            }
        }
    }

    fn mc_h(&mut self, ctrls: &[usize], t: usize) {
        if ctrls.len() == 1 {
            return self.template(tpl("ctrl2_H"), ctrls[0], t);
        }
        // ζ²Z(2,2) · H ζ²Z(2,2) H† · ζ²Z(2,2) = ζ⁶ H, then ω
        self.mc_z22_rel(ctrls, t);
        self.g(Gate::Hdg(t));
        self.mc_z22_rel(ctrls, t);
        self.g(Gate::H(t));
        self.mc_z22_rel(ctrls, t);
        self.mc_omega(ctrls, 1, t);
    }

    /// Controlled diagonal `diag(ζ^d0, ζ^d1, ζ^d2)`. A residual phase that is
    /// not a power of ω needs the borrowed wire `spare`.
    fn mc_diag(&mut self, ctrls: &[usize], t: usize, d: Diag, spare: Option<usize>, label: &str) -> Result<(), SynthError> {
        let s = m9(d[0] + d[1] + d[2]);
        if s % 3 != 0 {
            return Err(SynthError::Unsupported(
                label.to_string(),
                "determinant is not a power of omega, so no Clifford+T circuit exists",
            ));
        }
        let gamma = (s / 3) % 3;
        if gamma != 0 && spare.is_none() {
            return Err(SynthError::Unsupported(
                label.to_string(),
                "the residual zeta phase needs a spare wire to borrow",
            ));
        }
        let dp: Diag = [d[0] - gamma, d[1] - gamma, d[2] - gamma];
        let m = (dp[1] - dp[0]).rem_euclid(3);
        let r: Diag = [dp[0], dp[1] - m, dp[2] + m];
        // R0 ≡ R1 ≡ R2 mod 3 and ΣR ≡ 0 mod 9
        self.mc_t(ctrls, t, m);
        if r.iter().any(|&x| m9(x) != 0) {
            self.mc_cyclic(ctrls, t, [r[0], -r[2]]);
        }
        if gamma != 0 {
            self.mc_zeta(ctrls, t, gamma, spare.expect("checked"));
        }
        Ok(())
    }

    /// `|2^k⟩`-controlled CX from the V/V² trick with `V = X₋₁`.
    fn mc_cx(&mut self, ctrls: &[usize], c: usize, t: usize) {
        if ctrls.is_empty() {
            return self.g(Gate::CX(c, t));
        }
        let v = |e: &mut Self, b: usize, t: usize| e.mc_minus1(&[b], t);
        let vdg = |e: &mut Self, b: usize, t: usize| e.mc_plus1(&[b], t);
        self.vv2(ctrls, c, t, v, vdg, |e| e.mc_shift_pool(ctrls, t, false, &[c]));
    }

    /// `|2^k⟩`-controlled version of a single primitive gate.
    fn mc_gate(&mut self, ctrls: &[usize], g: &Gate, spare: Option<usize>) -> Result<(), SynthError> {
        match *g {
            Gate::X(p, w) => self.mc_perm(ctrls, p, w),
            Gate::H(w) => self.mc_h(ctrls, w),
            Gate::Hdg(w) => self.dagger_of(|e| e.mc_h(ctrls, w)),
            Gate::S(w) => self.mc_s(ctrls, w),
            Gate::Sdg(w) => self.dagger_of(|e| e.mc_s(ctrls, w)),
            Gate::T(j, w) => self.mc_t(ctrls, w, j as i64),
            Gate::Z(a, b, w) => {
                self.mc_diag(ctrls, w, [0, a.zeta_exp() as i64, b.zeta_exp() as i64], spare, &g.to_string())?
            }
            Gate::XPhase(a, b, w) => {
                self.g(Gate::Hdg(w));
                self.mc_diag(ctrls, w, [0, a.zeta_exp() as i64, b.zeta_exp() as i64], spare, &g.to_string())?;
                self.g(Gate::H(w));
            }
            Gate::CX(c, t) => self.mc_cx(ctrls, c, t),
            Gate::CXdg(c, t) => self.dagger_of(|e| e.mc_cx(ctrls, c, t)),
        }
        Ok(())
    }
}

fn need(op: &'static str, k: usize, min: usize) -> Result<(), SynthError> {
    if k < min {
        Err(SynthError::TooFewControls { op, k, min })
    } else {
        Ok(())
    }
}

fn range(k: usize) -> Vec<usize> {
    (0..k).collect()
}

/// `|2^k⟩`-controlled X₀₁ on `k + 1` wires, no ancilla.
pub fn ctrl_x01(k: usize) -> Result<SynthResult, SynthError> {
    need("ctrl_x01", k, 1)?;
    let mut e = Emitter::new(k + 1);
    e.mc_x01(&range(k), k);
    Ok(e.finish(AncillaUse::None))
}

/// `|2^k⟩`-controlled X₊₁ on `k + 1` wires, no ancilla.
pub fn ctrl_xplus1(k: usize) -> Result<SynthResult, SynthError> {
    need("ctrl_xplus1", k, 1)?;
    let mut e = Emitter::new(k + 1);
    e.mc_plus1(&range(k), k);
    Ok(e.finish(AncillaUse::None))
}

/// `|2^k⟩`-controlled X₊₁ with one borrowed wire. Controls and target take
/// the wires of `0..k+2` other than `ancilla`, in order.
pub fn ctrl_xplus1_borrowed(k: usize, ancilla: usize) -> Result<SynthResult, SynthError> {
    need("ctrl_xplus1_borrowed", k, 2)?;
    if ancilla >= k + 2 {
        return Err(SynthError::AncillaCollision(ancilla));
    }
    let wires: Vec<usize> = (0..k + 2).filter(|&w| w != ancilla).collect();
    ctrl_xplus1_borrowed_on(k + 2, &wires[..k], wires[k], ancilla)
}

/// [`ctrl_xplus1_borrowed`] on explicit wires.
pub fn ctrl_xplus1_borrowed_on(width: usize, ctrls: &[usize], t: usize, ancilla: usize) -> Result<SynthResult, SynthError> {
    need("ctrl_xplus1_borrowed", ctrls.len(), 2)?;
    if ctrls.contains(&ancilla) || t == ancilla {
        return Err(SynthError::AncillaCollision(ancilla));
    }
    let mut e = Emitter::new(width);
    e.mc_shift_borrowed(ctrls, t, ancilla, true);
    Ok(e.finish(AncillaUse::Borrowed(ancilla)))
}

/// `|2^k⟩`-controlled CX: controls `0..k`, CX control `k`, CX target `k+1`.
pub fn ctrl_cx(k: usize) -> Result<SynthResult, SynthError> {
    need("ctrl_cx", k, 1)?;
    let mut e = Emitter::new(k + 2);
    e.mc_cx(&range(k), k, k + 1);
    Ok(e.finish(AncillaUse::None))
}

/// `|2^k⟩`-controlled T.
pub fn ctrl_t(k: usize) -> Result<SynthResult, SynthError> {
    ctrl_t_pow(k, 1)
}

/// `|2^k⟩`-controlled `T^j`.
pub fn ctrl_t_pow(k: usize, j: i64) -> Result<SynthResult, SynthError> {
    need("ctrl_t", k, 1)?;
    let mut e = Emitter::new(k + 1);
    e.mc_t(&range(k), k, j);
    Ok(e.finish(AncillaUse::None))
}

/// `|2^k⟩`-controlled S, including the `ζ⁸` phase of S.
pub fn ctrl_s(k: usize) -> Result<SynthResult, SynthError> {
    need("ctrl_s", k, 1)?;
    let mut e = Emitter::new(k + 1);
    e.mc_s(&range(k), k);
    Ok(e.finish(AncillaUse::None))
}

/// `|2^k⟩`-controlled Z(2,2) up to the controlled phase returned (`ζ²`).
pub fn ctrl_z22_relphase(k: usize) -> Result<(SynthResult, u8), SynthError> {
    need("ctrl_z22_relphase", k, 1)?;
    let mut e = Emitter::new(k + 1);
    e.mc_z22_rel(&range(k), k);
    Ok((e.finish(AncillaUse::None), 2))
}

/// `|2^k⟩`-controlled Z(0,1) on wire `k`, borrowing wire `k+1`.
pub fn ctrl_z01_borrowed(k: usize) -> Result<SynthResult, SynthError> {
    need("ctrl_z01_borrowed", k, 1)?;
    let mut e = Emitter::new(k + 2);
    e.mc_z0p_borrowed(&range(k), k, 1, k + 1);
    Ok(e.finish(AncillaUse::Borrowed(k + 1)))
}

/// `|2^k⟩`-controlled `ζ·I` on wire `k`, borrowing wire `k+1`.
///
/// The controlled phase has determinant `ω` on `k + 1` wires while every
/// Clifford+T circuit on two or more wires has determinant `±1`, so the
/// borrowed wire cannot be dropped.
pub fn ctrl_zeta_phase(k: usize) -> Result<SynthResult, SynthError> {
    need("ctrl_zeta_phase", k, 1)?;
    let mut e = Emitter::new(k + 2);
    e.mc_zeta(&range(k), k, 1, k + 1);
    Ok(e.finish(AncillaUse::Borrowed(k + 1)))
}

/// `|2^k⟩`-controlled H, including the `−i` of H.
pub fn ctrl_h(k: usize) -> Result<SynthResult, SynthError> {
    need("ctrl_h", k, 1)?;
    let mut e = Emitter::new(k + 1);
    e.mc_h(&range(k), k);
    Ok(e.finish(AncillaUse::None))
}

/// `|2^k⟩`-controlled X permutation.
pub fn ctrl_perm(k: usize, p: Perm3) -> Result<SynthResult, SynthError> {
    need("ctrl_perm", k, 1)?;
    let mut e = Emitter::new(k + 1);
    e.mc_perm(&range(k), p, k);
    Ok(e.finish(AncillaUse::None))
}

/// `|2^k⟩`-controlled `u`, gate by gate. Controls are wires `0..k`; wire `i`
/// of `u` becomes wire `k + i`. Idle wires of `u` are borrowed where a gate
/// needs one, so the result is still ancilla-free.
pub fn ctrl_unitary(u: &Circuit, k: usize) -> Result<SynthResult, SynthError> {
    ctrl_unitary_pattern(u, &ControlPattern::twos(k, u.width))
}

/// Like [`ctrl_unitary`] for an arbitrary pattern of control values.
pub fn ctrl_unitary_pattern(u: &Circuit, pattern: &ControlPattern) -> Result<SynthResult, SynthError> {
    let free = pattern.free_wires();
    if free.len() != u.width {
        return Err(IrError::PatternMismatch { free: free.len(), width: u.width }.into());
    }
    let ctrls: Vec<usize> = pattern.controls().iter().map(|&(w, _)| w).collect();
    let mut e = Emitter::new(pattern.width());
    for g in &u.gates {
        let g = g.map_wires(|w| free[w]);
        let busy = g.wires();
        let spare = free.iter().copied().find(|w| !busy.contains(w));
        e.mc_gate(&ctrls, &g, spare)?;
    }
    let twos = ControlPattern {
        entries: pattern.entries.iter().map(|v| v.map(|_| 2)).collect(),
    };
    let c = conjugate_controls(&Circuit { width: e.width, gates: e.gates }, &twos, pattern)?;
    Ok(SynthResult::new(c, AncillaUse::None, e.blocks))
}

/// Λ(U) on two wires: `U^c` on wire 1 when wire 0 holds `c`.
#[derive(Clone, Debug)]
pub struct LambdaResult {
    pub result: SynthResult,
    /// A single Clifford gate with the same action, when one exists.
    pub reduces_to: Option<Gate>,
}

/// |1⟩-controlled U followed by |2⟩-controlled U².
pub fn lambda_ctrl(u: &Circuit) -> Result<LambdaResult, SynthError> {
    if u.width != 1 {
        return Err(IrError::PatternMismatch { free: 1, width: u.width }.into());
    }
    let mut c = Circuit::new(2);
    if !u.is_empty() {
        let one = ctrl_unitary_pattern(u, &"1·".parse()?)?;
        let mut uu = u.clone();
        uu.extend(u);
        let two = ctrl_unitary_pattern(&uu, &"2·".parse()?)?;
        c.extend(&one.circuit);
        c.extend(&two.circuit);
    }
    let m = sim::circuit_unitary(u, 1)?;
    let reduces_to = [Gate::CX(0, 1), Gate::CXdg(0, 1)].into_iter().zip([Perm3::Plus1, Perm3::Minus1]).find_map(|(cx, p)| {
        (m == gate_unitary(&Gate::X(p, 0))).then_some(cx)
    });
    Ok(LambdaResult { result: SynthResult::new(c, AncillaUse::None, 0), reduces_to })
}

/// Matrix of `ζ^k · I_d`.
pub fn zeta_identity(dim: usize, k: i64) -> Matrix {
    Matrix::identity(dim).scale(&CycloNumber::zeta_pow(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{controlled_gate_oracle, DEFAULT_ORACLE_LIMIT};
    use crate::sim::{equal_exact, equal_up_to_controlled_phase};

    fn ctrl_target(k: usize, g: Gate) -> Target {
        Target::controlled(ControlPattern::twos(k, g.wires().len()), gate_unitary(&g))
    }

    fn assert_exact(r: &SynthResult, target: &Target) {
        let bad = sim::first_mismatch(&r.circuit, target, &Columns::All).unwrap();
        assert_eq!(bad, None, "mismatch at column {bad:?}");
    }

    #[test]
    fn templates_verify_with_documented_phase() {
        for name in TEMPLATE_NAMES {
            let t = base_template(name).unwrap();
            let expect = t.phase.map_or(PhaseVerdict::Exact, PhaseVerdict::Phase);
            assert_eq!(t.check(), expect, "{name}");
        }
        assert_eq!(base_template("ctrl0_Z").unwrap().t_count(), 3);
        assert_eq!(base_template("ctrl2_Z22_relphase").unwrap().phase, Some(2));
        assert!(matches!(base_template("nope"), Err(SynthError::UnknownTemplate(_))));
    }

    #[test]
    fn ctrl0_z_against_dense_oracle() {
        let t = base_template("ctrl0_Z").unwrap();
        let oracle = controlled_gate_oracle(&t.target_gate, &"0·".parse().unwrap(), DEFAULT_ORACLE_LIMIT).unwrap();
        assert!(equal_exact(&t.circuit, &Target::Matrix(oracle), &Columns::All).unwrap());
    }

    #[test]
    fn x01_moved_to_other_control_values() {
        let base = tpl("ctrl2_X01");
        for (to, expect) in [("0·", "0·"), ("1·", "1·"), ("2·", "2·")] {
            let c = conjugate_controls(base, &"2·".parse().unwrap(), &to.parse().unwrap()).unwrap();
            let target = Target::controlled(expect.parse().unwrap(), gate_unitary(&Gate::X(Perm3::Swap01, 0)));
            assert!(equal_exact(&c, &target, &Columns::All).unwrap(), "{to}");
        }
        let same = conjugate_controls(base, &"2·".parse().unwrap(), &"2·".parse().unwrap()).unwrap();
        assert_eq!(&same, base);
    }

    #[test]
    fn two_wire_pattern_change() {
        let r = ctrl_x01(2).unwrap();
        let c = conjugate_controls(&r.circuit, &"22·".parse().unwrap(), &"01·".parse().unwrap()).unwrap();
        let target = Target::controlled("01·".parse().unwrap(), gate_unitary(&Gate::X(Perm3::Swap01, 0)));
        assert!(equal_exact(&c, &target, &Columns::All).unwrap());
        assert!(conjugate_controls(&r.circuit, &"22·".parse().unwrap(), &"2··".parse().unwrap()).is_err());
    }

    #[test]
    fn x01_and_xplus1_small_k() {
        for k in 1..=3 {
            let r = ctrl_x01(k).unwrap();
            assert_eq!(r.circuit.width, k + 1);
            assert_exact(&r, &ctrl_target(k, Gate::X(Perm3::Swap01, 0)));
            let r = ctrl_xplus1(k).unwrap();
            assert_exact(&r, &ctrl_target(k, Gate::X(Perm3::Plus1, 0)));
        }
        assert_eq!(ctrl_x01(1).unwrap().t_count, base_template("ctrl2_X01").unwrap().t_count());
        assert!(ctrl_x01(0).is_err());
    }

    #[test]
    fn every_perm_label() {
        for k in 1..=2 {
            for p in Perm3::ALL {
                assert_exact(&ctrl_perm(k, p).unwrap(), &ctrl_target(k, Gate::X(p, 0)));
            }
        }
    }

    #[test]
    fn minus1_is_dagger_of_plus1() {
        assert_eq!(ctrl_perm(2, Perm3::Minus1).unwrap().circuit, ctrl_xplus1(2).unwrap().circuit.dagger());
    }

    #[test]
    fn borrowed_counts_follow_the_split_recursion() {
        // 3·C(⌈k/2⌉) + 3·C(⌊k/2⌋ + 1), C(2) = 1
        let expect = [(2, 1), (3, 6), (4, 21), (5, 36), (8, 171)];
        for (k, n) in expect {
            assert_eq!(ctrl_xplus1_borrowed(k, k + 1).unwrap().base_blocks, n, "k = {k}");
        }
    }

    #[test]
    fn borrowed_xplus1_restores_ancilla() {
        for k in 2..=4 {
            let r = ctrl_xplus1_borrowed(k, k + 1).unwrap();
            let target = ctrl_target(k, Gate::X(Perm3::Plus1, 0));
            assert!(sim::check_borrowed_ancilla_exact(&r.circuit, &target, k + 1, None).unwrap(), "k = {k}");
        }
        // ancilla in the middle
        let r = ctrl_xplus1_borrowed(3, 1).unwrap();
        let target = ctrl_target(3, Gate::X(Perm3::Plus1, 0));
        assert!(sim::check_borrowed_ancilla_exact(&r.circuit, &target, 1, None).unwrap());
        assert!(matches!(ctrl_xplus1_borrowed(3, 9), Err(SynthError::AncillaCollision(9))));
        assert!(ctrl_xplus1_borrowed_on(5, &[0, 1, 2], 3, 2).is_err());
    }

    #[test]
    fn phase_gates_small_k() {
        for k in 1..=2 {
            assert_exact(&ctrl_t(k).unwrap(), &ctrl_target(k, Gate::T(1, 0)));
            assert_exact(&ctrl_s(k).unwrap(), &ctrl_target(k, Gate::S(0)));
            assert_exact(&ctrl_h(k).unwrap(), &ctrl_target(k, Gate::H(0)));
            let (r, ph) = ctrl_z22_relphase(k).unwrap();
            let target = ctrl_target(k, Gate::Z(Thirds::int(2), Thirds::int(2), 0));
            assert_eq!(equal_up_to_controlled_phase(&r.circuit, &target, &Columns::All).unwrap(), PhaseVerdict::Phase(ph));
        }
    }

    #[test]
    fn t_powers_and_dagger() {
        assert!(ctrl_t_pow(1, 0).unwrap().circuit.is_empty());
        for j in 1..9 {
            assert_exact(&ctrl_t_pow(1, j).unwrap(), &ctrl_target(1, Gate::T(j as u8, 0)));
        }
        let d = SynthResult::new(ctrl_t(2).unwrap().circuit.dagger(), AncillaUse::None, 0);
        assert_exact(&d, &ctrl_target(2, Gate::T(8, 0)));
    }

    #[test]
    fn cx_small_k() {
        for k in 1..=2 {
            let r = ctrl_cx(k).unwrap();
            assert_eq!(r.circuit.width, k + 2);
            let target = Target::controlled(ControlPattern::twos(k, 2), gate_unitary(&Gate::CX(0, 1)));
            assert_exact(&r, &target);
        }
    }

    #[test]
    fn z01_and_zeta_with_borrowed_wire() {
        for k in 1..=2 {
            let r = ctrl_z01_borrowed(k).unwrap();
            assert_eq!(r.ancilla, AncillaUse::Borrowed(k + 1));
            let target = ctrl_target(k, Gate::Z(Thirds::int(0), Thirds::int(1), 0));
            assert!(sim::check_borrowed_ancilla_exact(&r.circuit, &target, k + 1, None).unwrap());
            let r = ctrl_zeta_phase(k).unwrap();
            let target = Target::controlled(ControlPattern::twos(k, 1), zeta_identity(3, 1));
            assert!(sim::check_borrowed_ancilla_exact(&r.circuit, &target, k + 1, None).unwrap());
        }
    }

    #[test]
    fn diag_with_residual_phase() {
        // Z(1,0) = ζ·diag(ζ^8, ζ^2, ζ^8): the ζ residue borrows the idle wire
        let u = parse_circuit("qutrits 1\nZ 1 0 0").unwrap();
        assert!(matches!(ctrl_unitary(&u, 1), Err(SynthError::Unsupported(..))));
        let u = parse_circuit("qutrits 2\nZ 1 0 1").unwrap();
        for k in 1..=2 {
            let r = ctrl_unitary(&u, k).unwrap();
            let target = Target::controlled_circuit(ControlPattern::twos(k, 2), &u).unwrap();
            assert!(equal_exact(&r.circuit, &target, &Columns::All).unwrap(), "k = {k}");
        }
    }

    #[test]
    fn diag_with_zeta_residue_needs_spare_wire() {
        // Z(2/3, 1/3): ζ-exponents (0, 2, 1) sum to 3, residue ζ
        let u = parse_circuit("qutrits 1\nZ 2/3 1/3 0").unwrap();
        assert!(matches!(ctrl_unitary(&u, 1), Err(SynthError::Unsupported(..))));
        let u2 = parse_circuit("qutrits 2\nZ 2/3 1/3 0").unwrap();
        let r = ctrl_unitary(&u2, 1).unwrap();
        let target = Target::controlled_circuit(ControlPattern::twos(1, 2), &u2).unwrap();
        assert!(equal_exact(&r.circuit, &target, &Columns::All).unwrap());
        // determinant ζ: impossible
        let bad = parse_circuit("qutrits 2\nZ 0 1/3 0").unwrap();
        assert!(matches!(ctrl_unitary(&bad, 1), Err(SynthError::Unsupported(..))));
    }

    #[test]
    fn ctrl_unitary_examples() {
        let t = parse_circuit("qutrits 1\nT 0").unwrap();
        assert_eq!(ctrl_unitary(&t, 2).unwrap().circuit, ctrl_t(2).unwrap().circuit);
        for (text, k) in [("qutrits 1\nH 0\nT 0\nH 0", 1), ("qutrits 2\nCX 0 1\nT 1", 1), ("qutrits 2\nX 1 2 1\nCXdg 1 0\nSdg 0\nX 1/3 8/3 0", 1)] {
            let u = parse_circuit(text).unwrap();
            let r = ctrl_unitary(&u, k).unwrap();
            let target = Target::controlled_circuit(ControlPattern::twos(k, u.width), &u).unwrap();
            assert!(equal_exact(&r.circuit, &target, &Columns::All).unwrap(), "{text}");
        }
    }

    #[test]
    fn mixed_control_values() {
        let u = parse_circuit("qutrits 1\nH 0\nT^2 0").unwrap();
        let p: ControlPattern = "10·".parse().unwrap();
        let r = ctrl_unitary_pattern(&u, &p).unwrap();
        let target = Target::controlled_circuit(p, &u).unwrap();
        assert!(equal_exact(&r.circuit, &target, &Columns::All).unwrap());
    }

    #[test]
    fn lambda_examples() {
        let xp = parse_circuit("qutrits 1\nX+1 0").unwrap();
        let l = lambda_ctrl(&xp).unwrap();
        assert_eq!(l.reduces_to, Some(Gate::CX(0, 1)));
        assert!(equal_exact(&l.result.circuit, &Target::Matrix(gate_unitary(&Gate::CX(0, 1))), &Columns::All).unwrap());
        let t = parse_circuit("qutrits 1\nT 0").unwrap();
        let l = lambda_ctrl(&t).unwrap();
        assert_eq!(l.reduces_to, None);
        let diag = Matrix::diagonal(
            [0i64, 0, 0, 0, 1, -1, 0, 2, -2].iter().map(|&e| CycloNumber::zeta_pow(e)).collect(),
        );
        assert!(equal_exact(&l.result.circuit, &Target::Matrix(diag), &Columns::All).unwrap());
        assert!(lambda_ctrl(&Circuit::new(1)).unwrap().result.circuit.is_empty());
    }

    #[test]
    fn only_primitive_gates_and_exact_widths() {
        for k in 1..=3 {
            for r in [ctrl_x01(k), ctrl_xplus1(k), ctrl_t(k), ctrl_s(k), ctrl_h(k)] {
                let r = r.unwrap();
                assert_eq!(r.circuit.width, k + 1);
                assert_eq!(r.ancilla, AncillaUse::None);
                // every gate parses back from the text format
                assert_eq!(parse_circuit(&r.circuit.to_text()).unwrap(), r.circuit);
            }
        }
    }
}
