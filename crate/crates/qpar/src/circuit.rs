//! Circuit intermediate representation.
//!
//! A [`Circuit`] is an ordered sequence of layers; each layer is a set of
//! gates with pairwise disjoint qubit supports, so every layer can act
//! simultaneously. Depth is the number of layers.
//!
//! Index convention used everywhere in this crate: qubit 0 is the top wire
//! and the most significant bit of a basis-state index, so the bit of qubit
//! `q` in state index `a` on `n` wires is `(a >> (n - 1 - q)) & 1`.

use num_complex::Complex64;

use crate::error::{QparError, Result};

/// Gates compare equal when angles agree within this tolerance.
pub const ANGLE_TOL: f64 = 1e-12;
/// Attached 2x2 matrices must be unitary within this tolerance.
pub const UNITARY_TOL: f64 = 1e-9;

/// A 2x2 complex matrix in row-major order: `[u00, u01, u10, u11]`.
pub type Mat2 = [Complex64; 4];

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    /// Controlled-not: `CX(control, target)`.
    CX(usize, usize),
    /// Symmetric pi phase shift diag(1,1,1,-1).
    CZ(usize, usize),
    /// The pi-shift conjugated by Hadamards on both wires; symmetric.
    W(usize, usize),
    /// Symmetric phase shift diag(1,1,1,e^{i theta}).
    Phase { theta: f64, a: usize, b: usize },
    /// k-qubit diagonal with 2^k phase angles; `qubits[0]` indexes the most
    /// significant bit of the angle table.
    Diag { qubits: Vec<usize>, angles: Vec<f64> },
    /// Controlled one-qubit unitary.
    CU { control: usize, target: usize, u: Mat2 },
    /// Arbitrary one-qubit unitary.
    U1 { qubit: usize, u: Mat2 },
}

impl Gate {
    /// Qubits the gate acts on, in the order that indexes its local matrix
    /// (first entry = most significant local bit).
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) => vec![*q],
            Gate::CX(a, b) | Gate::CZ(a, b) | Gate::W(a, b) => vec![*a, *b],
            Gate::Phase { a, b, .. } => vec![*a, *b],
            Gate::Diag { qubits, .. } => qubits.clone(),
            Gate::CU { control, target, .. } => vec![*control, *target],
            Gate::U1 { qubit, .. } => vec![*qubit],
        }
    }

    pub fn arity(&self) -> usize {
        self.qubits().len()
    }

    /// True for gates that are diagonal in the computational basis.
    pub fn is_diagonal_kind(&self) -> bool {
        matches!(
            self,
            Gate::Z(_) | Gate::CZ(..) | Gate::Phase { .. } | Gate::Diag { .. }
        )
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::X(_) => "X",
            Gate::Z(_) => "Z",
            Gate::CX(..) => "CX",
            Gate::CZ(..) => "CZ",
            Gate::W(..) => "W",
            Gate::Phase { .. } => "PHASE",
            Gate::Diag { .. } => "DIAG",
            Gate::CU { .. } => "CU",
            Gate::U1 { .. } => "U1",
        }
    }

    /// Dense local matrix over `self.qubits()`, row-major, dimension
    /// 2^arity. The first listed qubit is the most significant local bit.
    pub fn local_matrix(&self) -> Vec<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Gate::H(_) => {
                let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                vec![s, s, s, -s]
            }
            Gate::X(_) => vec![zero, one, one, zero],
            Gate::Z(_) => vec![one, zero, zero, -one],
            Gate::CX(..) => {
                let mut m = vec![zero; 16];
                for (col, row) in [0usize, 1, 3, 2].iter().enumerate() {
                    m[row * 4 + col] = one;
                }
                m
            }
            Gate::CZ(..) => {
                let mut m = vec![zero; 16];
                for i in 0..4 {
                    m[i * 4 + i] = if i == 3 { -one } else { one };
                }
                m
            }
            Gate::W(..) => {
                // One half of a sign pattern that is symmetric under qubit
                // exchange; equals (H x H) CZ (H x H).
                let h = Complex64::new(0.5, 0.0);
                let signs: [f64; 16] = [
                    1.0, 1.0, 1.0, -1.0, //
                    1.0, 1.0, -1.0, 1.0, //
                    1.0, -1.0, 1.0, 1.0, //
                    -1.0, 1.0, 1.0, 1.0,
                ];
                signs.iter().map(|s| h * *s).collect()
            }
            Gate::Phase { theta, .. } => {
                let mut m = vec![zero; 16];
                for i in 0..3 {
                    m[i * 4 + i] = one;
                }
                m[15] = Complex64::from_polar(1.0, *theta);
                m
            }
            Gate::Diag { angles, .. } => {
                let d = angles.len();
                let mut m = vec![zero; d * d];
                for (i, w) in angles.iter().enumerate() {
                    m[i * d + i] = Complex64::from_polar(1.0, *w);
                }
                m
            }
            Gate::CU { u, .. } => {
                let mut m = vec![zero; 16];
                m[0] = one;
                m[5] = one;
                m[10] = u[0];
                m[11] = u[1];
                m[14] = u[2];
                m[15] = u[3];
                m
            }
            Gate::U1 { u, .. } => u.to_vec(),
        }
    }

    /// Structural checks: index bounds, distinctness, parameter counts, and
    /// unitarity of attached matrices.
    pub fn validate(&self, width: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= width {
                return Err(QparError::WidthMismatch {
                    expected: width,
                    got: q + 1,
                });
            }
        }
        for i in 0..qs.len() {
            for j in i + 1..qs.len() {
                if qs[i] == qs[j] {
                    return Err(QparError::ShapeViolation(format!(
                        "{} repeats qubit {}",
                        self.kind_name(),
                        qs[i]
                    )));
                }
            }
        }
        match self {
            Gate::Diag { qubits, angles } => {
                if qubits.is_empty() || angles.len() != 1 << qubits.len() {
                    return Err(QparError::ShapeViolation(format!(
                        "DIAG on {} qubits needs {} angles, got {}",
                        qubits.len(),
                        1usize << qubits.len(),
                        angles.len()
                    )));
                }
            }
            Gate::CU { u, .. } | Gate::U1 { u, .. } => {
                let dev = unitarity_deviation(u);
                if dev > UNITARY_TOL {
                    return Err(QparError::NonUnitary { dev });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Equality up to the angle/matrix tolerance, with symmetric gates
    /// compared without regard to qubit order.
    pub fn approx_eq(&self, other: &Gate) -> bool {
        use Gate::*;
        match (self, other) {
            (H(a), H(b)) | (X(a), X(b)) | (Z(a), Z(b)) => a == b,
            (CX(a, b), CX(c, d)) => a == c && b == d,
            (CZ(a, b), CZ(c, d)) | (W(a, b), W(c, d)) => {
                (a, b) == (c, d) || (a, b) == (d, c)
            }
            (
                Phase { theta: t1, a: a1, b: b1 },
                Phase { theta: t2, a: a2, b: b2 },
            ) => {
                let same = (a1, b1) == (a2, b2) || (a1, b1) == (b2, a2);
                same && (t1 - t2).abs() <= ANGLE_TOL
            }
            (
                Diag { qubits: q1, angles: w1 },
                Diag { qubits: q2, angles: w2 },
            ) => {
                q1 == q2
                    && w1.len() == w2.len()
                    && w1.iter().zip(w2).all(|(x, y)| (x - y).abs() <= ANGLE_TOL)
            }
            (
                CU { control: c1, target: t1, u: u1 },
                CU { control: c2, target: t2, u: u2 },
            ) => c1 == c2 && t1 == t2 && mat2_close(u1, u2),
            (U1 { qubit: q1, u: u1 }, U1 { qubit: q2, u: u2 }) => {
                q1 == q2 && mat2_close(u1, u2)
            }
            _ => false,
        }
    }
}

fn mat2_close(a: &Mat2, b: &Mat2) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= ANGLE_TOL)
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for r in 0..2 {
        for c in 0..2 {
            for k in 0..2 {
                out[r * 2 + c] += a[r * 2 + k] * b[k * 2 + c];
            }
        }
    }
    out
}

pub fn mat2_dagger(a: &Mat2) -> Mat2 {
    [a[0].conj(), a[2].conj(), a[1].conj(), a[3].conj()]
}

pub fn mat2_identity() -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [one, zero, zero, one]
}

pub fn mat2_x() -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [zero, one, one, zero]
}

pub fn mat2_z() -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [one, zero, zero, -one]
}

pub fn mat2_h() -> Mat2 {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [s, s, s, -s]
}

pub fn mat2_max_dev(a: &Mat2, b: &Mat2) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn mat2_is_diagonal(u: &Mat2, tol: f64) -> bool {
    u[1].norm() <= tol && u[2].norm() <= tol
}

/// Max-entry deviation of u * u^dagger from the identity.
pub fn unitarity_deviation(u: &Mat2) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                s += u[r * 2 + k] * u[c * 2 + k].conj();
            }
            let expect = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((s - expect).norm());
        }
    }
    dev
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    width: usize,
    layers: Vec<Vec<Gate>>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Circuit { width, layers: Vec::new() }
    }

    /// One layer per gate; the caller's gate order becomes time order.
    pub fn from_gates<I: IntoIterator<Item = Gate>>(width: usize, gates: I) -> Self {
        let mut c = Circuit::new(width);
        for g in gates {
            c.push_gate(g);
        }
        c
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    /// Appends a gate as its own layer. Panics on malformed gates: circuits
    /// constructed by this crate's passes must be valid by construction.
    pub fn push_gate(&mut self, g: Gate) {
        g.validate(self.width).expect("gate invalid for circuit width");
        self.layers.push(vec![g]);
    }

    pub fn push_layer(&mut self, layer: Vec<Gate>) {
        self.try_push_layer(layer).expect("invalid layer");
    }

    /// Appends a simultaneous layer, rejecting overlapping supports.
    pub fn try_push_layer(&mut self, layer: Vec<Gate>) -> Result<()> {
        let mut seen = vec![false; self.width];
        for g in &layer {
            g.validate(self.width)?;
            for q in g.qubits() {
                if seen[q] {
                    return Err(QparError::LayerOverlap {
                        layer: self.layers.len(),
                        qubit: q,
                    });
                }
                seen[q] = true;
            }
        }
        if !layer.is_empty() {
            self.layers.push(layer);
        }
        Ok(())
    }

    /// Sequential composition; widths must match.
    pub fn concat(&self, other: &Circuit) -> Circuit {
        assert_eq!(self.width, other.width, "concat width mismatch");
        let mut c = self.clone();
        c.layers.extend(other.layers.iter().cloned());
        c
    }

    /// Same gates on a wider register (new wires are idle).
    pub fn extended(&self, new_width: usize) -> Circuit {
        assert!(new_width >= self.width);
        Circuit { width: new_width, layers: self.layers.clone() }
    }

    /// Layers in reverse order. Only meaningful when every gate is its own
    /// inverse (CX, CZ, H, X, Z, W), which holds for the copy scaffolding
    /// this is used on.
    pub fn reversed(&self) -> Circuit {
        Circuit {
            width: self.width,
            layers: self.layers.iter().rev().cloned().collect(),
        }
    }
}

/// Greedy repacking: every gate moves to the earliest layer that keeps it
/// after all earlier gates sharing one of its qubits. Relative order of
/// gates on a common qubit is preserved, and depth never increases.
pub fn layerize(c: &Circuit) -> Circuit {
    let mut frontier = vec![0usize; c.width()];
    let mut layers: Vec<Vec<Gate>> = Vec::new();
    for g in c.gates() {
        let at = g.qubits().iter().map(|&q| frontier[q]).max().unwrap_or(0);
        if at == layers.len() {
            layers.push(Vec::new());
        }
        for q in g.qubits() {
            frontier[q] = at + 1;
        }
        layers[at].push(g.clone());
    }
    Circuit { width: c.width(), layers }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Metrics {
    pub depth: usize,
    pub width: usize,
    pub gate_count: usize,
    pub two_qubit_count: usize,
}

pub fn metrics(c: &Circuit) -> Metrics {
    Metrics {
        depth: c.depth(),
        width: c.width(),
        gate_count: c.gate_count(),
        two_qubit_count: c.gates().filter(|g| g.arity() >= 2).count(),
    }
}

/// A circuit on `n_data + n_anc` wires whose top `n_data` wires carry the
/// data. The ancillae occupy the highest indices and are required to enter
/// and leave in |0>; under that restriction the circuit acts as the target
/// operator on the data wires alone.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedCircuit {
    pub circuit: Circuit,
    pub n_data: usize,
    pub n_anc: usize,
}

impl EmbeddedCircuit {
    pub fn new(circuit: Circuit, n_data: usize, n_anc: usize) -> Self {
        assert_eq!(circuit.width(), n_data + n_anc, "embedding width mismatch");
        EmbeddedCircuit { circuit, n_data, n_anc }
    }

    /// An ordinary circuit viewed as an embedding with no ancillae.
    pub fn trivial(circuit: Circuit) -> Self {
        let n = circuit.width();
        EmbeddedCircuit::new(circuit, n, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_circuit_metrics_count_three_gates_depth_three() {
        let c = Circuit::from_gates(
            2,
            [Gate::CX(0, 1), Gate::CX(1, 0), Gate::CX(0, 1)],
        );
        let m = metrics(&c);
        assert_eq!(m.depth, 3);
        assert_eq!(m.gate_count, 3);
        assert_eq!(m.two_qubit_count, 3);
    }

    #[test]
    fn layerize_merges_disjoint_gates_into_one_layer() {
        let c = Circuit::from_gates(4, [Gate::CX(0, 1), Gate::CX(2, 3)]);
        assert_eq!(layerize(&c).depth(), 1);
    }

    #[test]
    fn layerize_keeps_gates_sharing_a_qubit_in_order() {
        let c = Circuit::from_gates(3, [Gate::CX(0, 1), Gate::CX(1, 2)]);
        let l = layerize(&c);
        assert_eq!(l.depth(), 2);
        assert_eq!(l.layers()[0], vec![Gate::CX(0, 1)]);
        assert_eq!(l.layers()[1], vec![Gate::CX(1, 2)]);
    }

    #[test]
    fn layer_with_overlapping_supports_is_rejected() {
        let mut c = Circuit::new(2);
        let err = c.try_push_layer(vec![Gate::CX(0, 1), Gate::CX(0, 1)]);
        assert!(matches!(err, Err(QparError::LayerOverlap { qubit: 0, .. })));
    }

    #[test]
    fn w_matrix_is_half_sign_pattern_and_symmetric() {
        let m = Gate::W(0, 1).local_matrix();
        // Column index = input bits; minus signs on the anti-diagonal.
        for r in 0..4 {
            for c in 0..4 {
                let want = if r + c == 3 { -0.5 } else { 0.5 };
                assert!((m[r * 4 + c] - want).norm() < 1e-15);
                // symmetric under qubit exchange: swapping both bit pairs
                let rs = ((r & 1) << 1) | (r >> 1);
                let cs = ((c & 1) << 1) | (c >> 1);
                assert_eq!(m[r * 4 + c], m[rs * 4 + cs]);
            }
        }
    }

    #[test]
    fn diag_gate_demands_one_angle_per_basis_state() {
        let bad = Gate::Diag { qubits: vec![0, 1], angles: vec![0.0, 1.0] };
        assert!(bad.validate(2).is_err());
        let good = Gate::Diag { qubits: vec![0, 1], angles: vec![0.0; 4] };
        assert!(good.validate(2).is_ok());
    }

    #[test]
    fn non_unitary_attached_matrix_is_rejected() {
        let z = Complex64::new(0.0, 0.0);
        let g = Gate::U1 { qubit: 0, u: [z, z, z, z] };
        assert!(matches!(g.validate(1), Err(QparError::NonUnitary { .. })));
    }

    #[test]
    fn symmetric_gates_compare_equal_under_qubit_swap() {
        assert!(Gate::CZ(0, 1).approx_eq(&Gate::CZ(1, 0)));
        assert!(Gate::W(2, 5).approx_eq(&Gate::W(5, 2)));
        assert!(!Gate::CX(0, 1).approx_eq(&Gate::CX(1, 0)));
    }
}
