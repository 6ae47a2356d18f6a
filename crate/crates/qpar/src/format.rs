//! Line-based circuit text format.
//!
//! ```text
//! qubits N             mandatory header
//! ancillae M           optional; the top M indices are ancillae
//! H q | X q | Z q
//! CX a b               a control, b target
//! CZ a b | W a b       symmetric
//! PHASE theta a b
//! DIAG k q1 .. qk : w0 .. w_{2^k-1}
//! CU a b : u00r,u00i u01r,u01i u10r,u10i u11r,u11i
//! U1 q : (same four entries)
//! ---                  explicit layer separator
//! ```
//!
//! `#` starts a comment, keywords are case-insensitive. If any `---`
//! appears, gates between separators form explicit layers (disjointness
//! enforced); otherwise every gate is its own layer. Emission always uses
//! explicit separators and prints angles with 17 significant digits, so
//! parse(emit(c)) reproduces c exactly.

use num_complex::Complex64;

use crate::circuit::{Circuit, EmbeddedCircuit, Gate, Mat2};
use crate::error::{QparError, Result};

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    Ok(parse_embedded_circuit(text)?.circuit)
}

pub fn parse_embedded_circuit(text: &str) -> Result<EmbeddedCircuit> {
    let mut lines: Vec<(usize, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let body = body.trim();
        if !body.is_empty() {
            lines.push((i + 1, body.to_string()));
        }
    }

    let syntax = |line: usize, msg: String| QparError::Syntax { line, msg };

    let mut it = lines.into_iter().peekable();
    let (hline, header) = it
        .next()
        .ok_or_else(|| syntax(1, "missing 'qubits N' header".into()))?;
    let width = match header.split_whitespace().collect::<Vec<_>>()[..] {
        [kw, n] if kw.eq_ignore_ascii_case("qubits") => n
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| syntax(hline, format!("bad qubit count '{n}'")))?,
        _ => return Err(syntax(hline, "expected 'qubits N' header".into())),
    };

    let mut n_anc = 0usize;
    if let Some((aline, l)) = it.peek() {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() == 2 && toks[0].eq_ignore_ascii_case("ancillae") {
            n_anc = toks[1]
                .parse::<usize>()
                .ok()
                .filter(|&m| m <= width)
                .ok_or_else(|| {
                    syntax(*aline, format!("bad ancilla count '{}'", toks[1]))
                })?;
            it.next();
        }
    }

    let body: Vec<(usize, String)> = it.collect();
    let explicit = body.iter().any(|(_, l)| l == "---");

    let mut circuit = Circuit::new(width);
    let mut layer: Vec<Gate> = Vec::new();
    for (line, l) in body {
        if l == "---" {
            circuit.try_push_layer(std::mem::take(&mut layer))?;
            continue;
        }
        let g = parse_gate(line, &l)?;
        match g.validate(width) {
            Ok(()) => {}
            Err(QparError::NonUnitary { dev }) => {
                return Err(QparError::NonUnitary { dev })
            }
            Err(e) => return Err(syntax(line, e.to_string())),
        }
        if explicit {
            layer.push(g);
        } else {
            circuit.try_push_layer(vec![g])?;
        }
    }
    circuit.try_push_layer(layer)?;

    Ok(EmbeddedCircuit::new(circuit, width - n_anc, n_anc))
}

fn parse_gate(line: usize, l: &str) -> Result<Gate> {
    let syntax = |msg: String| QparError::Syntax { line, msg };
    let toks: Vec<&str> = l.split_whitespace().collect();
    let kw = toks[0].to_ascii_uppercase();

    let qubit = |t: &str| -> Result<usize> {
        t.parse::<usize>()
            .map_err(|_| syntax(format!("bad qubit index '{t}'")))
    };
    let angle = |t: &str| -> Result<f64> {
        t.parse::<f64>()
            .map_err(|_| syntax(format!("bad angle '{t}'")))
    };

    // Gates carrying a matrix or angle table put it after a ':' token.
    let split_at_colon = |toks: &[&str]| -> (Vec<String>, Vec<String>, bool) {
        match toks.iter().position(|t| *t == ":") {
            Some(p) => (
                toks[..p].iter().map(|s| s.to_string()).collect(),
                toks[p + 1..].iter().map(|s| s.to_string()).collect(),
                true,
            ),
            None => (toks.to_vec().iter().map(|s| s.to_string()).collect(), Vec::new(), false),
        }
    };

    let complex = |t: &str| -> Result<Complex64> {
        let (re, im) = t
            .split_once(',')
            .ok_or_else(|| syntax(format!("bad complex entry '{t}' (want re,im)")))?;
        let re = re
            .parse::<f64>()
            .map_err(|_| syntax(format!("bad real part '{re}'")))?;
        let im = im
            .parse::<f64>()
            .map_err(|_| syntax(format!("bad imaginary part '{im}'")))?;
        Ok(Complex64::new(re, im))
    };
    let mat2 = |entries: &[String]| -> Result<Mat2> {
        if entries.len() != 4 {
            return Err(syntax(format!(
                "expected 4 complex entries, got {}",
                entries.len()
            )));
        }
        Ok([
            complex(&entries[0])?,
            complex(&entries[1])?,
            complex(&entries[2])?,
            complex(&entries[3])?,
        ])
    };

    match kw.as_str() {
        "H" | "X" | "Z" if toks.len() == 2 => {
            let q = qubit(toks[1])?;
            Ok(match kw.as_str() {
                "H" => Gate::H(q),
                "X" => Gate::X(q),
                _ => Gate::Z(q),
            })
        }
        "CX" | "CZ" | "W" if toks.len() == 3 => {
            let a = qubit(toks[1])?;
            let b = qubit(toks[2])?;
            Ok(match kw.as_str() {
                "CX" => Gate::CX(a, b),
                "CZ" => Gate::CZ(a, b),
                _ => Gate::W(a, b),
            })
        }
        "PHASE" if toks.len() == 4 => Ok(Gate::Phase {
            theta: angle(toks[1])?,
            a: qubit(toks[2])?,
            b: qubit(toks[3])?,
        }),
        "DIAG" => {
            let (head, tail, had_colon) = split_at_colon(&toks);
            if !had_colon || head.len() < 3 {
                return Err(syntax("DIAG wants 'DIAG k q1 .. qk : angles'".into()));
            }
            let k = head[1]
                .parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| syntax(format!("bad qubit count '{}'", head[1])))?;
            if head.len() != 2 + k {
                return Err(syntax(format!(
                    "DIAG {} lists {} qubits, expected {}",
                    k,
                    head.len() - 2,
                    k
                )));
            }
            let qubits = head[2..]
                .iter()
                .map(|t| qubit(t))
                .collect::<Result<Vec<_>>>()?;
            if tail.len() != 1 << k {
                return Err(syntax(format!(
                    "DIAG {} wants {} angles, got {}",
                    k,
                    1usize << k,
                    tail.len()
                )));
            }
            let angles = tail.iter().map(|t| angle(t)).collect::<Result<Vec<_>>>()?;
            Ok(Gate::Diag { qubits, angles })
        }
        "CU" => {
            let (head, tail, had_colon) = split_at_colon(&toks);
            if !had_colon || head.len() != 3 {
                return Err(syntax("CU wants 'CU a b : four complex entries'".into()));
            }
            Ok(Gate::CU {
                control: qubit(&head[1])?,
                target: qubit(&head[2])?,
                u: mat2(&tail)?,
            })
        }
        "U1" => {
            let (head, tail, had_colon) = split_at_colon(&toks);
            if !had_colon || head.len() != 2 {
                return Err(syntax("U1 wants 'U1 q : four complex entries'".into()));
            }
            Ok(Gate::U1 { qubit: qubit(&head[1])?, u: mat2(&tail)? })
        }
        _ => Err(syntax(format!("unknown gate '{}'", toks[0]))),
    }
}

pub fn emit_circuit(c: &Circuit) -> String {
    emit_lines(c, 0)
}

pub fn emit_embedded_circuit(e: &EmbeddedCircuit) -> String {
    emit_lines(&e.circuit, e.n_anc)
}

fn emit_lines(c: &Circuit, n_anc: usize) -> String {
    let mut out = format!("qubits {}\n", c.width());
    if n_anc > 0 {
        out.push_str(&format!("ancillae {n_anc}\n"));
    }
    // Every layer is terminated by a separator, so even a single layer of
    // disjoint gates reparses in explicit-layer mode.
    for layer in c.layers() {
        for g in layer {
            out.push_str(&emit_gate(g));
            out.push('\n');
        }
        out.push_str("---\n");
    }
    out
}

/// 17 significant digits: enough for an exact double round trip.
fn fmt_angle(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_complex(z: Complex64) -> String {
    format!("{},{}", fmt_angle(z.re), fmt_angle(z.im))
}

fn emit_gate(g: &Gate) -> String {
    match g {
        Gate::H(q) => format!("H {q}"),
        Gate::X(q) => format!("X {q}"),
        Gate::Z(q) => format!("Z {q}"),
        Gate::CX(a, b) => format!("CX {a} {b}"),
        Gate::CZ(a, b) => format!("CZ {a} {b}"),
        Gate::W(a, b) => format!("W {a} {b}"),
        Gate::Phase { theta, a, b } => {
            format!("PHASE {} {a} {b}", fmt_angle(*theta))
        }
        Gate::Diag { qubits, angles } => {
            let qs: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
            let ws: Vec<String> = angles.iter().map(|w| fmt_angle(*w)).collect();
            format!("DIAG {} {} : {}", qubits.len(), qs.join(" "), ws.join(" "))
        }
        Gate::CU { control, target, u } => {
            let es: Vec<String> = u.iter().map(|z| fmt_complex(*z)).collect();
            format!("CU {control} {target} : {}", es.join(" "))
        }
        Gate::U1 { qubit, u } => {
            let es: Vec<String> = u.iter().map(|z| fmt_complex(*z)).collect();
            format!("U1 {qubit} : {}", es.join(" "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_input_parses_to_one_cx_layer() {
        let c = parse_circuit("qubits 2\nCX 0 1\n").unwrap();
        assert_eq!(c.width(), 2);
        assert_eq!(c.depth(), 1);
        assert_eq!(c.layers()[0], vec![Gate::CX(0, 1)]);
    }

    #[test]
    fn explicit_separator_groups_gates_into_layers() {
        let c = parse_circuit("qubits 2\nH 0\nH 1\n---\nCZ 0 1\n").unwrap();
        assert_eq!(c.depth(), 2);
        assert_eq!(c.layers()[0].len(), 2);
        assert_eq!(c.layers()[1], vec![Gate::CZ(0, 1)]);
    }

    #[test]
    fn overlapping_gates_in_one_explicit_layer_are_rejected() {
        let err = parse_circuit("qubits 2\nCX 0 1\nCX 0 1\n---\n");
        assert!(matches!(err, Err(QparError::LayerOverlap { .. })));
    }

    #[test]
    fn without_separators_each_gate_is_its_own_layer() {
        let c = parse_circuit("qubits 2\nH 0\nH 1\n").unwrap();
        assert_eq!(c.depth(), 2);
    }

    #[test]
    fn empty_circuit_emits_header_only() {
        assert_eq!(emit_circuit(&Circuit::new(3)), "qubits 3\n");
    }

    #[test]
    fn keywords_are_case_insensitive_and_comments_are_stripped() {
        let text = "# leading comment\nQuBits 3  # trailing\n cx 0 2\nphase 1.5 0 1\n";
        let c = parse_circuit(text).unwrap();
        assert_eq!(c.gate_count(), 2);
        assert!(c.gates().next().unwrap().approx_eq(&Gate::CX(0, 2)));
    }

    #[test]
    fn ancillae_header_marks_top_wires() {
        let e = parse_embedded_circuit("qubits 5\nancillae 2\nCX 0 4\n").unwrap();
        assert_eq!(e.n_data, 3);
        assert_eq!(e.n_anc, 2);
        let text = emit_embedded_circuit(&e);
        assert!(text.starts_with("qubits 5\nancillae 2\n"));
        assert_eq!(parse_embedded_circuit(&text).unwrap(), e);
    }

    #[test]
    fn single_layer_of_disjoint_gates_round_trips_as_one_layer() {
        let mut c = Circuit::new(4);
        c.push_layer(vec![Gate::CX(0, 1), Gate::CX(2, 3)]);
        let back = parse_circuit(&emit_circuit(&c)).unwrap();
        assert_eq!(back.depth(), 1);
        assert_eq!(back, c);
    }

    #[test]
    fn qubit_index_out_of_range_reports_the_line() {
        let err = parse_circuit("qubits 2\nH 0\nCX 0 2\n");
        match err {
            Err(QparError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn missing_header_and_unknown_gate_are_syntax_errors() {
        assert!(matches!(
            parse_circuit("H 0\n"),
            Err(QparError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_circuit("qubits 1\nFOO 0\n"),
            Err(QparError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn non_unitary_cu_matrix_is_rejected() {
        let err = parse_circuit("qubits 2\nCU 0 1 : 2,0 0,0 0,0 1,0\n");
        assert!(matches!(err, Err(QparError::NonUnitary { .. })));
    }

    #[test]
    fn all_gate_kinds_round_trip_exactly() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = Circuit::from_gates(
            4,
            [
                Gate::H(0),
                Gate::X(1),
                Gate::Z(2),
                Gate::CX(0, 1),
                Gate::CZ(1, 2),
                Gate::W(2, 3),
                Gate::Phase { theta: 0.1234567890123456789, a: 0, b: 3 },
                Gate::Diag {
                    qubits: vec![2, 0],
                    angles: vec![0.25, -1.5, 3.0e-13, 2.0],
                },
                Gate::CU {
                    control: 3,
                    target: 1,
                    u: [
                        Complex64::new(s, 0.0),
                        Complex64::new(0.0, s),
                        Complex64::new(0.0, s),
                        Complex64::new(s, 0.0),
                    ],
                },
                Gate::U1 {
                    qubit: 2,
                    u: [
                        Complex64::new(0.0, 1.0),
                        Complex64::new(0.0, 0.0),
                        Complex64::new(0.0, 0.0),
                        Complex64::new(0.0, -1.0),
                    ],
                },
            ],
        );
        let reparsed = parse_circuit(&emit_circuit(&c)).unwrap();
        assert_eq!(reparsed, c);
    }

    fn arb_gate(width: usize) -> impl Strategy<Value = Gate> {
        let q = 0..width;
        let pair = (0..width, 0..width).prop_filter("distinct", |(a, b)| a != b);
        let ang = -10.0..10.0f64;
        prop_oneof![
            q.clone().prop_map(Gate::H),
            q.clone().prop_map(Gate::X),
            q.clone().prop_map(Gate::Z),
            pair.clone().prop_map(|(a, b)| Gate::CX(a, b)),
            pair.clone().prop_map(|(a, b)| Gate::CZ(a, b)),
            pair.clone().prop_map(|(a, b)| Gate::W(a, b)),
            (ang.clone(), pair.clone())
                .prop_map(|(theta, (a, b))| Gate::Phase { theta, a, b }),
            (pair.clone(), proptest::collection::vec(ang.clone(), 4)).prop_map(
                |((a, b), angles)| Gate::Diag { qubits: vec![a, b], angles }
            ),
            // u = phase-twisted Hadamard-like unitary, exactly unitary.
            (ang.clone(), pair).prop_map(|(t, (a, b))| {
                let (sin, cos) = t.sin_cos();
                let u = [
                    Complex64::new(cos, 0.0),
                    Complex64::new(0.0, sin),
                    Complex64::new(0.0, sin),
                    Complex64::new(cos, 0.0),
                ];
                Gate::CU { control: a, target: b, u }
            }),
            (ang, q).prop_map(|(t, q)| {
                let (sin, cos) = t.sin_cos();
                let u = [
                    Complex64::new(cos, 0.0),
                    Complex64::new(sin, 0.0),
                    Complex64::new(-sin, 0.0),
                    Complex64::new(cos, 0.0),
                ];
                Gate::U1 { qubit: q, u }
            }),
        ]
    }

    proptest! {
        #[test]
        fn random_circuits_round_trip_structurally(
            gates in proptest::collection::vec(arb_gate(5), 0..20)
        ) {
            let c = Circuit::from_gates(5, gates);
            let text = emit_circuit(&c);
            let back = parse_circuit(&text).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
