#![allow(dead_code)]

use qutrit_synth::{Circuit, Gate, Perm3, Thirds};
use rand::Rng;

pub fn random_gate(width: usize, rng: &mut impl Rng) -> Gate {
    random_gate_from(width, rng, |_, _| true)
}

/// Random primitive gate whose phase parameters `(a, b)` (in ninths of a
/// turn, i.e. ζ exponents) pass `keep`.
pub fn random_gate_from(width: usize, rng: &mut impl Rng, keep: impl Fn(u8, u8) -> bool) -> Gate {
    let w = rng.gen_range(0..width);
    let kinds = if width > 1 { 10 } else { 8 };
    match rng.gen_range(0..kinds) {
        0 => Gate::X(Perm3::ALL[rng.gen_range(0..5)], w),
        1 => Gate::H(w),
        2 => Gate::Hdg(w),
        3 => Gate::S(w),
        4 => Gate::Sdg(w),
        5 => Gate::T(rng.gen_range(1..=8), w),
        k @ (6 | 7) => loop {
            let (a, b) = (rng.gen_range(0..9u8), rng.gen_range(0..9u8));
            if keep(a, b) {
                let (a, b) = (Thirds::new(a as i64), Thirds::new(b as i64));
                break if k == 6 { Gate::Z(a, b, w) } else { Gate::XPhase(a, b, w) };
            }
        },
        k => {
            let c = rng.gen_range(0..width);
            let mut t = rng.gen_range(0..width - 1);
            if t >= c {
                t += 1;
            }
            if k == 8 {
                Gate::CX(c, t)
            } else {
                Gate::CXdg(c, t)
            }
        }
    }
}

pub fn random_circuit(width: usize, len: usize, rng: &mut impl Rng) -> Circuit {
    Circuit { width, gates: (0..len).map(|_| random_gate(width, rng)).collect() }
}

/// Circuits whose every gate has a controlled version on `width` wires:
/// phase gates need a ζ-exponent sum divisible by 3, and by 9 when there is
/// no idle wire to borrow.
pub fn controllable_circuit(width: usize, len: usize, rng: &mut impl Rng) -> Circuit {
    let modulus = if width > 1 { 3 } else { 9 };
    let gates = (0..len)
        .map(|_| random_gate_from(width, rng, |a, b| (a as u32 + b as u32) % modulus == 0))
        .collect();
    Circuit { width, gates }
}
