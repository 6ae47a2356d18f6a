//! Command-line front end.
//!
//! Exit statuses: 0 on success, 1 when a rewrite is refused or a
//! verification fails (or a file cannot be read or written), 2 on usage
//! errors and malformed circuit files. `-` names standard input or
//! output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Read;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::circuit::{Circuit, EmbeddedCircuit, Gate, Mat2};
use crate::clifford::{normal_form, parallelize_clifford};
use crate::error::QparError;
use crate::format::{emit_circuit, emit_embedded_circuit, parse_circuit, parse_embedded_circuit};
use crate::gen::{gen_random, Family, GeneratorSpec};
use crate::gf2::affine_of_cnot_x_circuit;
use crate::par::basic::{
    parallelize_commuting_circuit_seeded, parallelize_diagonal_series, parallelize_fanout,
    permutation_with_ancillae, widen_embedding, CommutingMode, ControlledSeries, Permutation,
};
use crate::par::cnot::{parallelize_cnot_circuit, parallelize_cnot_diagonal};
use crate::sim::verify_embedding_auto;

#[derive(Parser)]
#[command(name = "qpar", version, about = "Depth parallelizer for quantum circuits")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a circuit from a named family and write it out.
    Gen(GenArgs),
    /// Rewrite a circuit to lower depth, possibly adding ancillae.
    Parallelize(ParArgs),
    /// Print width, ancilla count, depth, and gate counts.
    Stats {
        /// Input circuit file, or - for standard input.
        input: String,
    },
    /// Check that a candidate with ancillae acts like a reference.
    Verify(VerifyArgs),
    /// Rewrite a Clifford-family circuit into its banded normal form.
    NormalForm(NormalFormArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Circuit family.
    #[arg(value_enum)]
    family: FamilyArg,
    /// Number of wires.
    #[arg(short = 'n', long = "width", default_value_t = 4)]
    n: usize,
    /// Gate count for the random families.
    #[arg(long, default_value_t = 20)]
    gates: usize,
    /// Seed for the random families.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Staircase unitary: x, h, z, or phase:<angle in radians>.
    #[arg(long, default_value = "x")]
    unitary: String,
    /// Fourier only: append the bit-reversal routing.
    #[arg(long)]
    reverse: bool,
    /// Output file; standard output by default.
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Qft,
    Staircase,
    #[value(name = "random_cnot")]
    RandomCnot,
    #[value(name = "random_clifford")]
    RandomClifford,
    #[value(name = "random_diag")]
    RandomDiag,
    #[value(name = "css_demo")]
    CssDemo,
}

#[derive(Args)]
struct ParArgs {
    /// Input circuit file, or - for standard input.
    input: String,
    /// Rewrite pass; auto tries cnot, cnot_diag, clifford, commuting.
    #[arg(long = "pass", value_enum, default_value_t = PassArg::Auto)]
    pass: PassArg,
    /// Check the rewrite against the input before writing it.
    #[arg(long)]
    verify: bool,
    /// Demand exact equality rather than equality up to a global phase.
    #[arg(long = "exact-phase")]
    exact_phase: bool,
    /// Seed for randomized search inside the passes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output by default.
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PassArg {
    Auto,
    Cnot,
    #[value(name = "cnot_diag")]
    CnotDiag,
    #[value(name = "diag_series")]
    DiagSeries,
    Commuting,
    Clifford,
    Fanout,
    Perm,
}

#[derive(Args)]
struct VerifyArgs {
    /// Candidate circuit file; an ancillae header marks its top wires.
    candidate: String,
    /// Reference circuit file over the data wires alone.
    reference: String,
    /// Ancilla count, overriding the candidate file's header.
    #[arg(long)]
    ancillae: Option<usize>,
    /// Demand exact equality rather than equality up to a global phase.
    #[arg(long = "exact-phase")]
    exact_phase: bool,
    /// Largest tolerated matrix-entry deviation.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct NormalFormArgs {
    /// Input circuit file, or - for standard input.
    input: String,
    /// Output file; standard output by default.
    #[arg(short, long)]
    output: Option<String>,
}

/// Runs one invocation and returns its exit status; the binary is a
/// one-line wrapper around this, and tests call it in process.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err((code, msg)) => {
            eprintln!("qpar: {msg}");
            code
        }
    }
}

type CmdResult = Result<(), (i32, String)>;

fn read_input(path: &str) -> Result<String, (i32, String)> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| (1, format!("reading standard input: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| (1, format!("reading {path}: {e}")))
    }
}

fn write_output(target: &Option<String>, text: &str) -> CmdResult {
    match target.as_deref() {
        None | Some("-") => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            std::fs::write(path, text).map_err(|e| (1, format!("writing {path}: {e}")))
        }
    }
}

/// Circuit files that fail to parse are treated like usage errors.
fn circuit_from(path: &str) -> Result<Circuit, (i32, String)> {
    parse_circuit(&read_input(path)?).map_err(|e| (2, format!("{path}: {e}")))
}

fn run(cli: Cli) -> CmdResult {
    match cli.cmd {
        Cmd::Gen(a) => run_gen(a),
        Cmd::Parallelize(a) => run_parallelize(a),
        Cmd::Stats { input } => run_stats(&input),
        Cmd::Verify(a) => run_verify(a),
        Cmd::NormalForm(a) => run_normal_form(a),
    }
}

fn unitary_by_name(name: &str) -> Result<Mat2, (i32, String)> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match name {
        "x" => Ok([zero, one, one, zero]),
        "z" => Ok([one, zero, zero, -one]),
        "h" => {
            let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            Ok([s, s, s, -s])
        }
        _ => {
            if let Some(t) = name.strip_prefix("phase:") {
                let theta: f64 = t
                    .parse()
                    .map_err(|_| (2, format!("bad phase angle '{t}'")))?;
                return Ok([one, zero, zero, Complex64::new(0.0, theta).exp()]);
            }
            Err((2, format!("unknown unitary '{name}'; use x, z, h, or phase:<angle>")))
        }
    }
}

fn run_gen(a: GenArgs) -> CmdResult {
    if a.n < 1 {
        return Err((2, "width must be at least 1".into()));
    }
    let family = match a.family {
        FamilyArg::Qft => Family::Qft,
        FamilyArg::Staircase => Family::Staircase,
        FamilyArg::RandomCnot => Family::RandomCnot,
        FamilyArg::RandomClifford => Family::RandomClifford,
        FamilyArg::RandomDiag => Family::RandomDiag,
        FamilyArg::CssDemo => Family::CssDemo,
    };
    let mut spec = GeneratorSpec::new(family, a.n);
    spec.gate_count = a.gates;
    spec.seed = a.seed;
    spec.qft_reverse = a.reverse;
    if family == Family::Staircase {
        spec.staircase_u = Some(unitary_by_name(&a.unitary)?);
    }
    let c = gen_random(&spec).map_err(|e| (1, e.to_string()))?;
    write_output(&a.output, &emit_circuit(&c))
}

/// The message shown when no pass applies: chains of general controlled
/// gates have no known sublinear-depth rewrite, so only their diagonal
/// and off-diagonal special cases are supported.
const RESIST_MSG: &str = "circuit resists the provided passes: a chain of general \
controlled gates admits no known sublinear-depth rewrite; only diagonal or \
off-diagonal controlled gates are supported";

fn apply_pass(c: &Circuit, pass: PassArg, seed: u64) -> Result<EmbeddedCircuit, (i32, String)> {
    let op = |e: QparError| (1, e.to_string());
    match pass {
        PassArg::Auto => [PassArg::Cnot, PassArg::CnotDiag, PassArg::Clifford, PassArg::Commuting]
            .iter()
            .find_map(|&p| apply_pass(c, p, seed).ok())
            .ok_or((1, RESIST_MSG.into())),
        PassArg::Cnot => parallelize_cnot_circuit(c).map_err(op),
        PassArg::CnotDiag => parallelize_cnot_diagonal(c).map_err(op),
        PassArg::DiagSeries => {
            let gates: Vec<Gate> = c.gates().cloned().collect();
            parallelize_diagonal_series(&gates)
                .map(|e| widen_embedding(&e, c.width()))
                .map_err(op)
        }
        PassArg::Commuting => {
            parallelize_commuting_circuit_seeded(c, CommutingMode::LogDepth, seed).map_err(op)
        }
        PassArg::Clifford => parallelize_clifford(c).map_err(op),
        PassArg::Fanout => {
            let series = fanout_series_of(c).map_err(op)?;
            Ok(widen_embedding(&parallelize_fanout(&series), c.width()))
        }
        PassArg::Perm => {
            let (m, offset) = affine_of_cnot_x_circuit(c).map_err(op)?;
            if offset.iter().any(|&b| b) || !m.is_permutation() {
                return Err((
                    1,
                    "the perm pass wants a circuit acting as a pure wire permutation".into(),
                ));
            }
            let n = m.n();
            let mut images = vec![0usize; n];
            for r in 0..n {
                for col in 0..n {
                    if m.get(r, col) {
                        images[col] = r;
                    }
                }
            }
            let p = Permutation::new(images).map_err(op)?;
            Ok(permutation_with_ancillae(&p))
        }
    }
}

/// Reads the whole circuit as one fan-out series: every gate must be a
/// two-qubit controlled gate and all controls must agree.
fn fanout_series_of(c: &Circuit) -> crate::error::Result<ControlledSeries> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut control: Option<usize> = None;
    let mut items: Vec<(usize, Mat2)> = Vec::new();
    for g in c.gates() {
        let (ctl, t, u): (usize, usize, Mat2) = match g {
            Gate::CX(a, b) => (*a, *b, [zero, one, one, zero]),
            Gate::CZ(a, b) => (*a, *b, [one, zero, zero, -one]),
            Gate::Phase { theta, a, b } => {
                (*a, *b, [one, zero, zero, Complex64::new(0.0, *theta).exp()])
            }
            Gate::CU { control, target, u } => (*control, *target, *u),
            other => {
                return Err(QparError::UnsupportedGate {
                    context: "fan-out pass".into(),
                    found: other.kind_name().into(),
                })
            }
        };
        match control {
            None => control = Some(ctl),
            Some(c0) if c0 != ctl => {
                return Err(QparError::ShapeViolation(format!(
                    "fan-out pass wants one shared control, saw {c0} and {ctl}"
                )))
            }
            Some(_) => {}
        }
        items.push((t, u));
    }
    let control = control.ok_or_else(|| {
        QparError::ShapeViolation("fan-out pass wants at least one controlled gate".into())
    })?;
    ControlledSeries::new(control, items)
}

fn run_parallelize(a: ParArgs) -> CmdResult {
    let c = circuit_from(&a.input)?;
    let e = apply_pass(&c, a.pass, a.seed)?;
    if a.verify {
        match verify_embedding_auto(&e, &c, 1e-9, !a.exact_phase) {
            Ok(Some(rep)) => {
                if !rep.equivalent {
                    return Err((
                        1,
                        format!(
                            "verification failed: max deviation {:.3e}{}",
                            rep.max_deviation,
                            if rep.subspace_preserved {
                                ""
                            } else {
                                "; ancillae do not return to zero"
                            }
                        ),
                    ));
                }
            }
            Ok(None) => {
                eprintln!(
                    "qpar: note: verification skipped, {} wires exceed every checker's range",
                    e.circuit.width()
                );
            }
            Err(err) => return Err((1, format!("verification error: {err}"))),
        }
    }
    write_output(&a.output, &emit_embedded_circuit(&e))
}

fn run_stats(input: &str) -> CmdResult {
    let e = parse_embedded_circuit(&read_input(input)?).map_err(|err| (2, format!("{input}: {err}")))?;
    let mut out = String::new();
    out.push_str(&format!("width {}\n", e.circuit.width()));
    out.push_str(&format!("ancillae {}\n", e.n_anc));
    out.push_str(&format!("depth {}\n", e.circuit.depth()));
    out.push_str(&format!("gates {}\n", e.circuit.gate_count()));
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for g in e.circuit.gates() {
        *counts.entry(g.kind_name()).or_insert(0) += 1;
    }
    for (kind, count) in counts {
        out.push_str(&format!("  {kind} {count}\n"));
    }
    print!("{out}");
    Ok(())
}

fn run_verify(a: VerifyArgs) -> CmdResult {
    let mut cand = parse_embedded_circuit(&read_input(&a.candidate)?)
        .map_err(|err| (2, format!("{}: {err}", a.candidate)))?;
    if let Some(m) = a.ancillae {
        let w = cand.circuit.width();
        if m > w {
            return Err((2, format!("{m} ancillae exceed the {w} wires present")));
        }
        cand = EmbeddedCircuit::new(cand.circuit, w - m, m);
    }
    let reference = circuit_from(&a.reference)?;
    match verify_embedding_auto(&cand, &reference, a.tol, !a.exact_phase)
        .map_err(|err| (1, format!("verification error: {err}")))?
    {
        Some(rep) if rep.equivalent => {
            println!(
                "equivalent: max deviation {:.3e}, global phase {:+.6}{:+.6}i",
                rep.max_deviation, rep.global_phase.re, rep.global_phase.im
            );
            Ok(())
        }
        Some(rep) => Err((
            1,
            format!(
                "not equivalent: max deviation {:.3e}{}",
                rep.max_deviation,
                if rep.subspace_preserved { "" } else { "; ancillae do not return to zero" }
            ),
        )),
        None => Err((
            1,
            format!(
                "unable to verify: {} wires exceed every checker's range",
                cand.circuit.width()
            ),
        )),
    }
}

fn run_normal_form(a: NormalFormArgs) -> CmdResult {
    let c = circuit_from(&a.input)?;
    let nf = normal_form(&c).map_err(|e| (1, e.to_string()))?;
    let mut text = String::new();
    if (nf.phase - Complex64::new(-1.0, 0.0)).norm() < 1e-9 {
        text.push_str("# global phase -1\n");
    }
    text.push_str(&emit_circuit(&nf.to_circuit()));
    write_output(&a.output, &text)
}
