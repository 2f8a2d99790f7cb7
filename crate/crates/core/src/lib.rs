//! Exact qutrit Clifford+T synthesis.
//!
//! Builds multiply-controlled Clifford+T gates and ternary reversible
//! functions as explicit circuits over the gates `X±1`, `X01/02/12`, `H`,
//! `S`, `T^k`, `Z(a,b)`, `X(a,b)` and `CX`, without ancillae where that is
//! possible, and checks every construction by exact simulation over
//! `Z[1/3, ζ₉]`.

pub mod arith;
pub mod cli;
pub mod ir;
pub mod perm;
pub mod sim;
pub mod synth;

pub use arith::{CycloNumber, Matrix};
pub use ir::{AncillaUse, Circuit, ControlPattern, Gate, Perm3, SynthResult, Thirds};
