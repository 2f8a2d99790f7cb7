//! The `qutrit` command-line tool.
//!
//! Every command prints a JSON report on stdout. Exit codes: 0 when the
//! result verified (or verification was skipped), 2 when verification ran
//! and failed, 1 for usage, parse and I/O errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arith::{CycloNumber, Matrix};
use crate::ir::{gate_unitary, parse_circuit, Circuit, ControlPattern, Gate, IrError, Perm3, Thirds, DEFAULT_ORACLE_LIMIT};
use crate::perm::{cycle_decompose, gate_count_lower_bound, synthesize_permutation, PermError, TritPermutation};
use crate::sim::{
    self, equal_float, equal_up_to_controlled_phase, first_mismatch, sampled_columns, Columns, PhaseVerdict, SimError,
    Target,
};
use crate::synth::{ctrl_unitary_pattern, SynthError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Parser, Debug)]
#[command(name = "qutrit", version, about = "Exact qutrit Clifford+T synthesis and verification")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a multiply-controlled gate or circuit.
    Ctrl(CtrlArgs),
    /// Check a circuit against a controlled gate, another circuit or a permutation.
    Verify(VerifyArgs),
    /// Compile a ternary reversible function.
    Perm(PermArgs),
    /// Print T-count and gate count of a circuit file.
    Count { circuit: PathBuf },
    /// Run the exact algebraic identity suite.
    Identities,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Args, Debug, Clone)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    /// Per-amplitude tolerance in float mode.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Check this many seeded random columns plus the control-boundary states.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_verify: bool,
}

#[derive(Args, Debug)]
struct CtrlArgs {
    /// Gate in circuit-file syntax without wires, e.g. `T`, `X01`, `Z 1/3 2/3`, `CX`.
    #[arg(long, conflicts_with = "circuit", required_unless_present = "circuit")]
    gate: Option<String>,
    /// Circuit file to control as a whole.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Control values, e.g. `22`; may include free markers (`·` or `.`) to place the targets.
    #[arg(long)]
    controls: String,
    /// Where to write the circuit text; JSON goes next to it with a `.json` suffix.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    circuit: PathBuf,
    /// Target gate (with `--controls`).
    #[arg(long, requires = "controls", conflicts_with_all = ["against", "classical"])]
    gate: Option<String>,
    #[arg(long)]
    controls: Option<String>,
    /// Target circuit file.
    #[arg(long, conflicts_with = "classical")]
    against: Option<PathBuf>,
    /// Target permutation file (JSON or truth table).
    #[arg(long)]
    classical: Option<PathBuf>,
    /// Accept equality up to a phase on the firing subspace.
    #[arg(long)]
    allow_phase: bool,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args, Debug)]
struct PermArgs {
    permutation: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_verify: bool,
}

/// How much of the unitary a verification looked at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coverage {
    FullMatrix,
    BasisSweep,
    Sampled,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub coverage: Coverage,
    pub arithmetic: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub columns: usize,
    /// `verified`, `failed`, or `phase ζ^k`.
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub input_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub width: usize,
    pub t_count: usize,
    pub gate_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ancilla: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_cycles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    pub verification: Option<Verification>,
    pub ok: bool,
}

impl Report {
    fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            2
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            if code == 0 {
                let _ = write!(out, "{}", e.render());
            } else {
                let _ = write!(err, "{}", e.render());
            }
            return code;
        }
    };
    match dispatch(cli.cmd, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    let report = match cmd {
        Command::Ctrl(a) => cmd_ctrl(&a)?,
        Command::Verify(a) => cmd_verify(&a)?,
        Command::Perm(a) => cmd_perm(&a)?,
        Command::Count { circuit } => {
            let c = load_circuit(&circuit)?;
            let v = serde_json::json!({ "width": c.width, "t_count": c.t_count(), "gate_count": c.len() });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?).map_err(io_err("stdout"))?;
            return Ok(0);
        }
        Command::Identities => {
            let results = identity_suite();
            let mut all = true;
            for (name, ok) in &results {
                all &= ok;
                writeln!(out, "{} {name}", if *ok { "PASS" } else { "FAIL" }).map_err(io_err("stdout"))?;
            }
            return Ok(if all { 0 } else { 2 });
        }
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?).map_err(io_err("stdout"))?;
    Ok(report.exit_code())
}

fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn load_circuit(path: &Path) -> Result<Circuit, CliError> {
    Ok(parse_circuit(&read(path)?)?)
}

fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

/// A gate given without wires, as a circuit on its own wires.
pub fn gate_from_spec(spec: &str) -> Result<Circuit, CliError> {
    let name = spec.split_whitespace().next().unwrap_or("");
    let arity = if name.starts_with("CX") { 2 } else { 1 };
    let wires: Vec<String> = (0..arity).map(|w| w.to_string()).collect();
    let text = format!("qutrits {arity}\n{spec} {}", wires.join(" "));
    parse_circuit(&text).map_err(|e| CliError::Usage(format!("bad gate {spec:?}: {e}")))
}

/// Control values alone get `free` target wires appended.
fn full_pattern(spec: &str, free: usize) -> Result<ControlPattern, CliError> {
    let mut p: ControlPattern = spec.parse()?;
    if p.free_wires().is_empty() {
        p.entries.extend(std::iter::repeat(None).take(free));
    }
    if p.free_wires().len() != free {
        return Err(IrError::PatternMismatch { free: p.free_wires().len(), width: free }.into());
    }
    Ok(p)
}

fn write_outputs(path: &Path, c: &Circuit) -> Result<String, CliError> {
    fs::write(path, c.to_text()).map_err(io_err(path))?;
    let mut json_path = path.as_os_str().to_owned();
    json_path.push(".json");
    let json_path = PathBuf::from(json_path);
    let body = serde_json::to_string_pretty(&c.to_json())? + "\n";
    fs::write(&json_path, body).map_err(io_err(&json_path))?;
    Ok(path.display().to_string())
}

fn is_classical(u: &Circuit) -> bool {
    matches!(sim::classical_action(u), sim::ClassicalAction::Permutation(_))
}

/// Columns to visit for a check on `width` wires.
fn plan(width: usize, pattern: Option<&ControlPattern>, classical: bool, a: &CheckArgs) -> Result<(Columns, Coverage), CliError> {
    if let Some(n) = a.sample {
        return Ok((Columns::Subset(sampled_columns(width, pattern, n, a.seed)), Coverage::Sampled));
    }
    if width <= DEFAULT_ORACLE_LIMIT {
        return Ok((Columns::All, Coverage::FullMatrix));
    }
    if classical {
        return Ok((Columns::All, Coverage::BasisSweep));
    }
    Err(CliError::Usage(format!(
        "{width} wires is over the full-check limit of {DEFAULT_ORACLE_LIMIT}; pass --sample N (and --seed S) or --no-verify"
    )))
}

fn check(c: &Circuit, target: &Target, cols: Columns, coverage: Coverage, a: &CheckArgs, phase_ok: bool) -> Result<Verification, CliError> {
    let count = match &cols {
        Columns::All => 3usize.pow(c.width as u32),
        Columns::Subset(v) => v.len(),
    };
    let (verdict, mismatch) = match a.mode {
        Mode::Float => {
            let ok = equal_float(c, target, &cols, a.tol)?;
            ((if ok { "verified" } else { "failed" }).to_string(), None)
        }
        Mode::Exact if phase_ok => match equal_up_to_controlled_phase(c, target, &cols)? {
            PhaseVerdict::Exact => ("verified".to_string(), None),
            PhaseVerdict::Phase(k) => (format!("phase ζ^{k}"), None),
            PhaseVerdict::Unequal { column } => ("failed".to_string(), Some(basis_label(column, c.width))),
        },
        Mode::Exact => match first_mismatch(c, target, &cols)? {
            None => ("verified".to_string(), None),
            Some(column) => ("failed".to_string(), Some(basis_label(column, c.width))),
        },
    };
    Ok(Verification {
        coverage,
        arithmetic: a.mode,
        tol: (a.mode == Mode::Float).then_some(a.tol),
        seed: (coverage == Coverage::Sampled).then_some(a.seed),
        columns: count,
        verdict,
        mismatch,
    })
}

fn basis_label(index: usize, n: usize) -> String {
    let s: String = crate::ir::trits_of(index, n).iter().map(|t| char::from(b'0' + t)).collect();
    format!("|{s}⟩")
}

fn cmd_ctrl(a: &CtrlArgs) -> Result<Report, CliError> {
    let (u, source) = match (&a.gate, &a.circuit) {
        (Some(g), _) => (gate_from_spec(g)?, g.clone().into_bytes()),
        (None, Some(p)) => {
            let text = read(p)?;
            (parse_circuit(&text)?, text.into_bytes())
        }
        (None, None) => return Err(CliError::Usage("give --gate or --circuit".into())),
    };
    let pattern = full_pattern(&a.controls, u.width)?;
    let r = ctrl_unitary_pattern(&u, &pattern)?;
    let output = a.out.as_deref().map(|p| write_outputs(p, &r.circuit)).transpose()?;
    let verification = if a.check.no_verify {
        None
    } else {
        let (cols, coverage) = plan(r.circuit.width, Some(&pattern), is_classical(&u), &a.check)?;
        let target = Target::controlled_circuit(pattern.clone(), &u)?;
        Some(check(&r.circuit, &target, cols, coverage, &a.check, false)?)
    };
    let ok = verification.as_ref().is_none_or(|v| v.verdict == "verified");
    Ok(Report {
        command: format!("ctrl {} --controls {}", a.gate.as_deref().unwrap_or("<circuit>"), pattern),
        input_sha256: sha256_hex(&[&source, pattern.to_string().as_bytes()]),
        output,
        width: r.circuit.width,
        t_count: r.t_count,
        gate_count: r.gate_count,
        ancilla: Some("none".into()),
        two_cycles: None,
        lower_bound: None,
        verification,
        ok,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<Report, CliError> {
    let text = read(&a.circuit)?;
    let c = parse_circuit(&text)?;
    let mut report = Report {
        command: format!("verify {}", a.circuit.display()),
        input_sha256: String::new(),
        output: None,
        width: c.width,
        t_count: c.t_count(),
        gate_count: c.len(),
        ancilla: None,
        two_cycles: None,
        lower_bound: None,
        verification: None,
        ok: true,
    };
    let verification = if let Some(path) = &a.classical {
        let ptext = read(path)?;
        report.input_sha256 = sha256_hex(&[text.as_bytes(), ptext.as_bytes()]);
        let p = TritPermutation::parse(&ptext)?;
        if p.n != c.width {
            return Err(CliError::Usage(format!("permutation has {} trits, circuit has {} wires", p.n, c.width)));
        }
        let (verdict, mismatch) = match TritPermutation::of_circuit(&c) {
            Ok(q) if q == p => ("verified".to_string(), None),
            Ok(q) => {
                let x = (0..p.dim()).find(|&x| p.apply(x) != q.apply(x)).expect("differs somewhere");
                ("failed".to_string(), Some(basis_label(x, c.width)))
            }
            Err(PermError::NotClassical(w)) => ("failed".to_string(), Some(format!("|{w}⟩ not classical"))),
            Err(e) => return Err(e.into()),
        };
        Verification {
            coverage: Coverage::BasisSweep,
            arithmetic: Mode::Exact,
            tol: None,
            seed: None,
            columns: p.dim(),
            verdict,
            mismatch,
        }
    } else {
        let (target, pattern, classical, tag) = if let Some(path) = &a.against {
            let other_text = read(path)?;
            let other = parse_circuit(&other_text)?;
            report.input_sha256 = sha256_hex(&[text.as_bytes(), other_text.as_bytes()]);
            let classical = is_classical(&other);
            (Target::Circuit(other), None, classical, path.display().to_string())
        } else if let (Some(g), Some(ctrls)) = (&a.gate, &a.controls) {
            let u = gate_from_spec(g)?;
            let pattern = full_pattern(ctrls, u.width)?;
            report.input_sha256 = sha256_hex(&[text.as_bytes(), g.as_bytes(), pattern.to_string().as_bytes()]);
            let classical = is_classical(&u);
            (Target::controlled_circuit(pattern.clone(), &u)?, Some(pattern), classical, format!("{g} --controls {ctrls}"))
        } else {
            return Err(CliError::Usage("give --gate/--controls, --against or --classical".into()));
        };
        report.command.push_str(&format!(" against {tag}"));
        if target.width() != c.width {
            return Err(SimError::WidthMismatch { circuit: c.width, state: target.width() }.into());
        }
        if a.check.no_verify {
            return Ok(report);
        }
        let (cols, coverage) = plan(c.width, pattern.as_ref(), classical, &a.check)?;
        check(&c, &target, cols, coverage, &a.check, pattern.is_some())?
    };
    report.ok = verification.verdict == "verified" || (a.allow_phase && verification.verdict.starts_with("phase"));
    report.verification = Some(verification);
    Ok(report)
}

fn cmd_perm(a: &PermArgs) -> Result<Report, CliError> {
    let text = read(&a.permutation)?;
    let p = TritPermutation::parse(&text)?;
    let r = synthesize_permutation(&p)?;
    let output = a.out.as_deref().map(|path| write_outputs(path, &r.circuit)).transpose()?;
    let verification = (!a.no_verify).then(|| {
        let got = TritPermutation::of_circuit(&r.circuit);
        let ok = got.as_ref().is_ok_and(|q| *q == p);
        Verification {
            coverage: Coverage::BasisSweep,
            arithmetic: Mode::Exact,
            tol: None,
            seed: None,
            columns: p.dim(),
            verdict: (if ok { "verified" } else { "failed" }).to_string(),
            mismatch: None,
        }
    });
    let ok = verification.as_ref().is_none_or(|v| v.verdict == "verified");
    Ok(Report {
        command: format!("perm {}", a.permutation.display()),
        input_sha256: sha256_hex(&[text.as_bytes()]),
        output,
        width: p.n,
        t_count: r.t_count,
        gate_count: r.gate_count,
        ancilla: Some("none".into()),
        two_cycles: Some(cycle_decompose(&p).len()),
        lower_bound: gate_count_lower_bound(p.n).ok(),
        verification,
        ok,
    })
}

fn u(g: Gate) -> Matrix {
    gate_unitary(&g)
}

/// Operator product, leftmost factor applied last.
fn prod(ms: &[Matrix]) -> Matrix {
    ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.matmul(m))
}

/// Exact single-qutrit identities between the primitive gates, each as a
/// name and whether it holds.
pub fn identity_suite() -> Vec<(String, bool)> {
    let i3 = Matrix::identity(3);
    let h = u(Gate::H(0));
    let hdg = u(Gate::Hdg(0));
    let x = |p| u(Gate::X(p, 0));
    let t = |k| u(Gate::T(k, 0));
    let th = |n: i64| Thirds::new(n);
    let zp = |a: i64, b: i64| u(Gate::Z(th(3 * a), th(3 * b), 0));
    let xp = |a: i64, b: i64| u(Gate::XPhase(th(3 * a), th(3 * b), 0));
    let minus = CycloNumber::from_int(-1);
    let omega = CycloNumber::omega();
    vec![
        ("H^4 = I", h.pow(4) == i3),
        ("H^2 = -X12", h.pow(2) == x(Perm3::Swap12).scale(&minus)),
        // read left to right as a circuit: Hdg first
        ("Z = Hdg X+1 H", zp(1, 2) == prod(&[h.clone(), x(Perm3::Plus1), hdg.clone()])),
        ("H = Z(2,2) X(2,2) Z(2,2)", h == prod(&[zp(2, 2), xp(2, 2), zp(2, 2)])),
        ("H = X(2,2) Z(2,2) X(2,2)", h == prod(&[xp(2, 2), zp(2, 2), xp(2, 2)])),
        ("Hdg = Z(1,1) X(1,1) Z(1,1)", hdg == prod(&[zp(1, 1), xp(1, 1), zp(1, 1)])),
        ("Hdg = X(1,1) Z(1,1) X(1,1)", hdg == prod(&[xp(1, 1), zp(1, 1), xp(1, 1)])),
        ("T^9 = I", t(1).pow(9) == i3),
        ("(T^5)^2 = T", t(5).pow(2) == t(1)),
        ("X12 T^4 X12 = T^5", prod(&[x(Perm3::Swap12), t(4), x(Perm3::Swap12)]) == t(5)),
        (
            "Z-1 X02 Z-1 X02 = omega I",
            prod(&[zp(2, 1), x(Perm3::Swap02), zp(2, 1), x(Perm3::Swap02)]) == i3.scale(&omega),
        ),
        ("X+1 = X(2,1)", x(Perm3::Plus1) == xp(2, 1)),
        ("X-1 = X(1,2)", x(Perm3::Minus1) == xp(1, 2)),
        ("Z(a,b) Z(c,d) = Z(a+c,b+d)", zp(1, 0).matmul(&zp(2, 2)) == zp(0, 2)),
        ("T = Z(1/3,-1/3)", t(1) == u(Gate::Z(th(1), th(-1), 0))),
    ]
    .into_iter()
    .map(|(n, ok)| (n.to_string(), ok))
    .collect()
}
