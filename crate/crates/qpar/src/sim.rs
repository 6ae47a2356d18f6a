//! Dense state-vector oracle and the embedding checker.
//!
//! Everything every rewrite pass claims is checked here. The dense path is
//! the ground truth up to a width cap; two exact structural oracles cover
//! wider outputs for restricted gate classes:
//!
//! * circuits of CX and X gates are affine maps over GF(2) and are checked
//!   exactly at any width,
//! * circuits of CX, X, and diagonal gates map basis states to basis
//!   states, so a per-basis-state walk accumulating phases decides
//!   equivalence without materializing any 2^n x 2^n matrix.

use num_complex::Complex64;

use crate::circuit::{Circuit, EmbeddedCircuit, Gate};
use crate::error::{QparError, Result};
use crate::gf2::affine_of_cnot_x_circuit;

/// Dense simulation refuses circuits wider than this many qubits.
pub const SIM_WIDTH_CAP: usize = 12;
/// The phase-walk oracle sweeps 2^n_data basis states; cap the sweep.
pub const WALK_DATA_CAP: usize = 20;

#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n: usize, index: usize) -> Self {
        assert!(index < 1 << n);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn zero(n: usize) -> Self {
        StateVector::basis(n, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct UnitaryMatrix {
    n: usize,
    /// Row-major, dimension 2^n.
    entries: Vec<Complex64>,
}

impl UnitaryMatrix {
    pub fn identity(n: usize) -> Self {
        let dim = 1usize << n;
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        UnitaryMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.dim() + c]
    }

    pub fn mul(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if self.n != other.n {
            return Err(QparError::DimensionMismatch { a: self.n, b: other.n });
        }
        let dim = self.dim();
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for k in 0..dim {
                let x = self.entry(r, k);
                if x.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..dim {
                    entries[r * dim + c] += x * other.entry(k, c);
                }
            }
        }
        Ok(UnitaryMatrix { n: self.n, entries })
    }
}

pub fn max_entry_deviation(u: &UnitaryMatrix, v: &UnitaryMatrix) -> f64 {
    u.entries
        .iter()
        .zip(&v.entries)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// In-place application of one gate to a dense amplitude vector.
fn apply_gate(n: usize, amps: &mut [Complex64], g: &Gate) {
    let qs = g.qubits();
    let k = qs.len();
    let shifts: Vec<usize> = qs.iter().map(|&q| n - 1 - q).collect();
    let local_index = |a: usize| -> usize {
        let mut l = 0usize;
        for (i, &s) in shifts.iter().enumerate() {
            l |= ((a >> s) & 1) << (k - 1 - i);
        }
        l
    };

    if g.is_diagonal_kind() {
        let m = g.local_matrix();
        let dim = 1usize << k;
        let diag: Vec<Complex64> = (0..dim).map(|i| m[i * dim + i]).collect();
        for (a, amp) in amps.iter_mut().enumerate() {
            *amp *= diag[local_index(a)];
        }
        return;
    }

    let m = g.local_matrix();
    let dim = 1usize << k;
    let support: usize = shifts.iter().map(|&s| 1usize << s).sum();
    let mut gathered = vec![Complex64::new(0.0, 0.0); dim];
    for base in 0..amps.len() {
        if base & support != 0 {
            continue;
        }
        // Indices of the 2^k amplitudes this gate mixes, by local index.
        // Non-diagonal gates have arity <= 2; diagonal gates of any arity
        // took the fast path above.
        let mut idx = [0usize; 4];
        assert!(dim <= idx.len());
        let idx = &mut idx[..dim];
        for (l, slot) in idx.iter_mut().enumerate() {
            let mut a = base;
            for (i, &s) in shifts.iter().enumerate() {
                if (l >> (k - 1 - i)) & 1 == 1 {
                    a |= 1 << s;
                }
            }
            *slot = a;
        }
        for (l, slot) in idx.iter().enumerate() {
            gathered[l] = amps[*slot];
        }
        for (r, slot) in idx.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, x) in gathered.iter().enumerate() {
                acc += m[r * dim + l] * x;
            }
            amps[*slot] = acc;
        }
    }
}

pub fn apply_state(c: &Circuit, s: &StateVector) -> Result<StateVector> {
    if c.width() != s.n {
        return Err(QparError::WidthMismatch { expected: c.width(), got: s.n });
    }
    let mut out = s.clone();
    for layer in c.layers() {
        for g in layer {
            apply_gate(out.n, &mut out.amps, g);
        }
    }
    Ok(out)
}

pub fn unitary_of(c: &Circuit) -> Result<UnitaryMatrix> {
    unitary_of_with_cap(c, SIM_WIDTH_CAP)
}

/// Column a is the image of basis state a; unitarity follows because every
/// gate matrix is unitary and columns are images of an orthonormal basis.
pub fn unitary_of_with_cap(c: &Circuit, cap: usize) -> Result<UnitaryMatrix> {
    let n = c.width();
    if n > cap {
        return Err(QparError::WidthOverCap { width: n, cap });
    }
    let dim = 1usize << n;
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for a in 0..dim {
        let col = apply_state(c, &StateVector::basis(n, a))?;
        for r in 0..dim {
            entries[r * dim + a] = col.amps[r];
        }
    }
    Ok(UnitaryMatrix { n, entries })
}

/// Tests u = e^{i phi} v entrywise within tol, reading phi off the
/// largest-magnitude entry of v.
pub fn equal_up_to_phase(
    u: &UnitaryMatrix,
    v: &UnitaryMatrix,
    tol: f64,
) -> Result<(bool, Complex64)> {
    if u.n != v.n {
        return Err(QparError::DimensionMismatch { a: u.n, b: v.n });
    }
    let mut best = 0usize;
    for (i, e) in v.entries.iter().enumerate() {
        if e.norm_sqr() > v.entries[best].norm_sqr() {
            best = i;
        }
    }
    let anchor = v.entries[best];
    if anchor.norm() == 0.0 {
        return Ok((false, Complex64::new(1.0, 0.0)));
    }
    let phi = u.entries[best] / anchor;
    let phi = if phi.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        phi / phi.norm()
    };
    let dev = u
        .entries
        .iter()
        .zip(&v.entries)
        .map(|(a, b)| (a - phi * b).norm())
        .fold(0.0, f64::max);
    Ok((dev <= tol, phi))
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub equivalent: bool,
    pub subspace_preserved: bool,
    pub global_phase: Complex64,
    pub max_deviation: f64,
}

pub fn verify_embedding(
    e: &EmbeddedCircuit,
    reference: &Circuit,
    tol: f64,
    up_to_phase: bool,
) -> Result<VerificationReport> {
    verify_embedding_with_cap(e, reference, tol, up_to_phase, SIM_WIDTH_CAP)
}

/// Dense check of the ancilla-restricted action: for every data basis
/// state |a>, run the embedded circuit on |a>|0..0>, demand the amplitude
/// mass off the ancillae=|0> subspace be at most tol, and compare the
/// restricted columns against the reference unitary.
pub fn verify_embedding_with_cap(
    e: &EmbeddedCircuit,
    reference: &Circuit,
    tol: f64,
    up_to_phase: bool,
    cap: usize,
) -> Result<VerificationReport> {
    if reference.width() != e.n_data {
        return Err(QparError::WidthMismatch {
            expected: e.n_data,
            got: reference.width(),
        });
    }
    let total = e.circuit.width();
    if total > cap {
        return Err(QparError::WidthOverCap { width: total, cap });
    }

    let nd = e.n_data;
    let m = e.n_anc;
    let ref_u = unitary_of_with_cap(reference, cap)?;
    let dim = 1usize << nd;
    let anc_mask = (1usize << m) - 1;

    let mut subspace_preserved = true;
    let mut restricted = UnitaryMatrix {
        n: nd,
        entries: vec![Complex64::new(0.0, 0.0); dim * dim],
    };
    for a in 0..dim {
        // Data occupies the high bits (qubit 0 is most significant).
        let input = StateVector::basis(total, a << m);
        let out = apply_state(&e.circuit, &input)?;
        let mut leaked = 0.0;
        for (j, amp) in out.amps.iter().enumerate() {
            if j & anc_mask != 0 {
                leaked += amp.norm_sqr();
            }
        }
        if leaked > tol {
            subspace_preserved = false;
        }
        for b in 0..dim {
            restricted.entries[b * dim + a] = out.amps[b << m];
        }
    }

    let (matched, phi, dev) = if up_to_phase {
        let (ok, phi) = equal_up_to_phase(&restricted, &ref_u, tol)?;
        let dev = restricted
            .entries
            .iter()
            .zip(&ref_u.entries)
            .map(|(x, y)| (x - phi * y).norm())
            .fold(0.0, f64::max);
        (ok, phi, dev)
    } else {
        let dev = max_entry_deviation(&restricted, &ref_u);
        (dev <= tol, Complex64::new(1.0, 0.0), dev)
    };

    Ok(VerificationReport {
        equivalent: subspace_preserved && matched,
        subspace_preserved,
        global_phase: phi,
        max_deviation: dev,
    })
}

/// Exact embedding check for circuits of CX and X gates at any width.
///
/// Such a circuit acts on basis states as |q> -> |Mq + t|. On the
/// ancillae=|0> subspace the action is determined by the data columns of M
/// and by t, so the check is: data rows restricted to data columns match
/// the reference's matrix and offset, ancilla rows have no data support and
/// zero offset. Ancilla columns are unconstrained: input ancillae are zero.
pub fn verify_embedding_gf2(
    e: &EmbeddedCircuit,
    reference: &Circuit,
) -> Result<VerificationReport> {
    if reference.width() != e.n_data {
        return Err(QparError::WidthMismatch {
            expected: e.n_data,
            got: reference.width(),
        });
    }
    let nd = e.n_data;
    let (mc, tc) = affine_of_cnot_x_circuit(&e.circuit)?;
    let (mr, tr) = affine_of_cnot_x_circuit(reference)?;

    let mut data_ok = true;
    for i in 0..nd {
        if tc[i] != tr[i] {
            data_ok = false;
        }
        for j in 0..nd {
            if mc.get(i, j) != mr.get(i, j) {
                data_ok = false;
            }
        }
    }
    let mut anc_ok = true;
    for i in nd..e.circuit.width() {
        if tc[i] {
            anc_ok = false;
        }
        for j in 0..nd {
            if mc.get(i, j) {
                anc_ok = false;
            }
        }
    }

    let equivalent = data_ok && anc_ok;
    Ok(VerificationReport {
        equivalent,
        subspace_preserved: anc_ok,
        global_phase: Complex64::new(1.0, 0.0),
        max_deviation: if equivalent { 0.0 } else { 1.0 },
    })
}

fn walkable(c: &Circuit) -> bool {
    c.gates()
        .all(|g| matches!(g, Gate::CX(..) | Gate::X(_)) || g.is_diagonal_kind())
}

fn cx_x_only(c: &Circuit) -> bool {
    c.gates().all(|g| matches!(g, Gate::CX(..) | Gate::X(_)))
}

/// One basis-state pass of a CX/X/diagonal circuit: permutes bits and
/// accumulates the diagonal phase.
fn walk(c: &Circuit, bits: &mut [bool]) -> f64 {
    let mut theta = 0.0f64;
    for g in c.gates() {
        match g {
            Gate::CX(a, b) => {
                let ta = bits[*a];
                bits[*b] ^= ta;
            }
            Gate::X(q) => bits[*q] = !bits[*q],
            Gate::Z(q) => {
                if bits[*q] {
                    theta += std::f64::consts::PI;
                }
            }
            Gate::CZ(a, b) => {
                if bits[*a] && bits[*b] {
                    theta += std::f64::consts::PI;
                }
            }
            Gate::Phase { theta: t, a, b } => {
                if bits[*a] && bits[*b] {
                    theta += t;
                }
            }
            Gate::Diag { qubits, angles } => {
                let mut l = 0usize;
                for (i, &q) in qubits.iter().enumerate() {
                    l |= (bits[q] as usize) << (qubits.len() - 1 - i);
                }
                theta += angles[l];
            }
            other => unreachable!("walk on non-walkable gate {}", other.kind_name()),
        }
    }
    theta
}

/// Exact-bit, phase-accumulating embedding check for circuits of CX, X,
/// and diagonal gates. Bit images must match exactly; phases must agree up
/// to one common offset (or exactly, when up_to_phase is false). Sweeps
/// all 2^n_data basis states.
pub fn verify_embedding_phases(
    e: &EmbeddedCircuit,
    reference: &Circuit,
    tol: f64,
    up_to_phase: bool,
) -> Result<VerificationReport> {
    if reference.width() != e.n_data {
        return Err(QparError::WidthMismatch {
            expected: e.n_data,
            got: reference.width(),
        });
    }
    if e.n_data > WALK_DATA_CAP {
        return Err(QparError::WidthOverCap { width: e.n_data, cap: WALK_DATA_CAP });
    }
    if !walkable(&e.circuit) || !walkable(reference) {
        return Err(QparError::UnsupportedGate {
            context: "verify_embedding_phases".into(),
            found: "non-diagonal one- or two-qubit unitary".into(),
        });
    }

    let nd = e.n_data;
    let total = e.circuit.width();
    let mut bits_ok = true;
    let mut anc_ok = true;
    let mut offset: Option<Complex64> = None;
    let mut dev = 0.0f64;

    for a in 0..1usize << nd {
        let mut cand_bits = vec![false; total];
        let mut ref_bits = vec![false; nd];
        for q in 0..nd {
            let bit = (a >> (nd - 1 - q)) & 1 == 1;
            cand_bits[q] = bit;
            ref_bits[q] = bit;
        }
        let tc = walk(&e.circuit, &mut cand_bits);
        let tr = walk(reference, &mut ref_bits);
        if cand_bits[..nd] != ref_bits[..] {
            bits_ok = false;
        }
        if cand_bits[nd..].iter().any(|&b| b) {
            anc_ok = false;
        }
        let delta = Complex64::from_polar(1.0, tc - tr);
        let anchor = *offset.get_or_insert(delta);
        dev = dev.max((delta - anchor).norm());
    }

    let phi = offset.unwrap_or(Complex64::new(1.0, 0.0));
    if !up_to_phase {
        dev = dev.max((phi - 1.0).norm());
    }
    let equivalent = bits_ok && anc_ok && dev <= tol;
    Ok(VerificationReport {
        equivalent,
        subspace_preserved: anc_ok,
        global_phase: phi,
        max_deviation: if bits_ok { dev } else { 1.0 },
    })
}

/// Picks the strongest applicable oracle: exact GF(2) for CX/X circuits,
/// the phase walk for CX/X/diagonal circuits, dense simulation under the
/// width cap. Returns None when no oracle applies.
pub fn verify_embedding_auto(
    e: &EmbeddedCircuit,
    reference: &Circuit,
    tol: f64,
    up_to_phase: bool,
) -> Result<Option<VerificationReport>> {
    if cx_x_only(&e.circuit) && cx_x_only(reference) {
        return verify_embedding_gf2(e, reference).map(Some);
    }
    if walkable(&e.circuit) && walkable(reference) && e.n_data <= WALK_DATA_CAP {
        return verify_embedding_phases(e, reference, tol, up_to_phase).map(Some);
    }
    if e.circuit.width() <= SIM_WIDTH_CAP {
        return verify_embedding(e, reference, tol, up_to_phase).map(Some);
    }
    Ok(None)
}
