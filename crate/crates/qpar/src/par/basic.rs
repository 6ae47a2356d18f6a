//! Elementary parallelization gadgets.
//!
//! Common theme: a qubit may be copied (in the controlled-not sense, not
//! cloned) onto fresh |0> ancillae in logarithmically many doubling
//! rounds; gates that only read the classical value of a wire, or that are
//! diagonal, then act on distinct copies simultaneously; mirroring the
//! copy tree restores the ancillae.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::circuit::{
    mat2_dagger, mat2_identity, mat2_is_diagonal, mat2_mul, mat2_x, unitarity_deviation,
    Circuit, EmbeddedCircuit, Gate, Mat2, ANGLE_TOL, UNITARY_TOL,
};
use crate::error::{QparError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    n: usize,
    images: Vec<usize>,
}

impl Permutation {
    /// images[i] is the destination wire of qubit i; must be a bijection.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &im in &images {
            if im >= n || seen[im] {
                return Err(QparError::ShapeViolation(format!(
                    "images {images:?} is not a bijection on 0..{n}"
                )));
            }
            seen[im] = true;
        }
        Ok(Permutation { n, images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { n, images: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0usize; self.n];
        for (i, &im) in self.images.iter().enumerate() {
            inv[im] = i;
        }
        Permutation { n: self.n, images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &im)| i == im)
    }

    /// Cycles of length >= 2, each starting at its smallest element.
    fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] || self.images[start] == start {
                seen[start] = true;
                continue;
            }
            let mut cycle = Vec::new();
            let mut at = start;
            while !seen[at] {
                seen[at] = true;
                cycle.push(at);
                at = self.images[at];
            }
            out.push(cycle);
        }
        out
    }

    /// A direct sequential realization: one 3-CX swap per transposition of
    /// each cycle. Used as the verification reference.
    pub fn reference_circuit(&self) -> Circuit {
        let mut c = Circuit::new(self.n);
        for cycle in self.cycles() {
            // Applying swap(c0,c1), swap(c0,c2), ..., swap(c0,ck-1) left to
            // right advances every element one step along the cycle.
            for j in 1..cycle.len() {
                let (a, b) = (cycle[0], cycle[j]);
                c.push_gate(Gate::CX(a, b));
                c.push_gate(Gate::CX(b, a));
                c.push_gate(Gate::CX(a, b));
            }
        }
        c
    }
}

/// Routes any permutation in exactly 4 controlled-not layers using n
/// ancillae: copy every qubit onto the ancilla at its destination, cancel
/// the originals, recopy onto the permuted data wires, cancel the
/// ancillae.
pub fn permutation_with_ancillae(p: &Permutation) -> EmbeddedCircuit {
    let n = p.n();
    let mut c = Circuit::new(2 * n);
    c.push_layer((0..n).map(|i| Gate::CX(i, n + p.image(i))).collect());
    c.push_layer((0..n).map(|i| Gate::CX(n + p.image(i), i)).collect());
    c.push_layer((0..n).map(|j| Gate::CX(n + j, j)).collect());
    c.push_layer((0..n).map(|j| Gate::CX(j, n + j)).collect());
    EmbeddedCircuit::new(c, n, n)
}

/// Routes any permutation in at most 6 controlled-not layers with no
/// ancillae: each cycle factors into two reflections, every reflection is
/// a set of disjoint transpositions, and each transposition set costs 3
/// simultaneous CX layers.
pub fn permutation_in_place(p: &Permutation) -> Circuit {
    let n = p.n();
    // Reflection 1 swaps cycle positions i and -i; reflection 2 swaps i
    // and 1-i (indices mod cycle length). Their composition advances every
    // position by one, which is the cycle itself.
    let mut first: Vec<(usize, usize)> = Vec::new();
    let mut second: Vec<(usize, usize)> = Vec::new();
    for cycle in p.cycles() {
        let k = cycle.len();
        for i in 1..k {
            let j = k - i;
            if i < j {
                first.push((cycle[i], cycle[j]));
            }
        }
        for i in 0..k {
            let j = (k + 1 - i) % k;
            if i < j {
                second.push((cycle[i], cycle[j]));
            }
        }
    }
    let mut c = Circuit::new(n);
    for swaps in [first, second] {
        if swaps.is_empty() {
            continue;
        }
        c.push_layer(swaps.iter().map(|&(a, b)| Gate::CX(a, b)).collect());
        c.push_layer(swaps.iter().map(|&(a, b)| Gate::CX(b, a)).collect());
        c.push_layer(swaps.iter().map(|&(a, b)| Gate::CX(a, b)).collect());
    }
    c
}

#[derive(Clone, Debug)]
pub struct ControlledSeries {
    pub control: usize,
    /// (target, one-qubit unitary) pairs; targets pairwise distinct and
    /// never equal to the control.
    pub items: Vec<(usize, Mat2)>,
}

impl ControlledSeries {
    pub fn new(control: usize, items: Vec<(usize, Mat2)>) -> Result<Self> {
        let mut seen: Vec<usize> = Vec::new();
        for (t, u) in &items {
            if *t == control || seen.contains(t) {
                return Err(QparError::ShapeViolation(format!(
                    "fan-out targets must be distinct and differ from control {control}, got target {t}"
                )));
            }
            let dev = unitarity_deviation(u);
            if dev > UNITARY_TOL {
                return Err(QparError::NonUnitary { dev });
            }
            seen.push(*t);
        }
        if items.is_empty() {
            return Err(QparError::ShapeViolation("empty controlled series".into()));
        }
        Ok(ControlledSeries { control, items })
    }

    pub fn data_width(&self) -> usize {
        let m = self.items.iter().map(|(t, _)| *t).max().unwrap_or(0);
        m.max(self.control) + 1
    }

    /// The sequential circuit the gadget must reproduce.
    pub fn reference_circuit(&self) -> Circuit {
        Circuit::from_gates(
            self.data_width(),
            self.items
                .iter()
                .map(|(t, u)| Gate::CU { control: self.control, target: *t, u: *u }),
        )
    }
}

/// Doubling copy tree: starting from `seed`, spreads its value over the
/// `copies` wires (all assumed |0>) in ceil(log2(copies+1)) layers.
/// Returns the layers; the caller mirrors them to uncopy.
fn copy_tree_layers(seed: usize, copies: &[usize]) -> Vec<Vec<Gate>> {
    let mut holders = vec![seed];
    let mut layers = Vec::new();
    let mut next = copies.iter().copied();
    let total = copies.len() + 1;
    while holders.len() < total {
        let mut layer = Vec::new();
        let mut fresh = Vec::new();
        for &src in &holders {
            if let Some(dst) = next.next() {
                layer.push(Gate::CX(src, dst));
                fresh.push(dst);
            } else {
                break;
            }
        }
        holders.extend(fresh);
        layers.push(layer);
    }
    layers
}

/// Applies a series of gates controlled by one shared qubit in depth
/// exactly 2*ceil(log2 k) + 1 with k-1 ancillae: copy the control, run
/// all k controlled gates on distinct copies at once, uncopy.
pub fn parallelize_fanout(s: &ControlledSeries) -> EmbeddedCircuit {
    let nd = s.data_width();
    let k = s.items.len();
    let anc: Vec<usize> = (nd..nd + k - 1).collect();
    let copy_layers = copy_tree_layers(s.control, &anc);

    let mut c = Circuit::new(nd + k - 1);
    for l in &copy_layers {
        c.push_layer(l.clone());
    }
    let mut holders = vec![s.control];
    holders.extend(&anc);
    c.push_layer(
        s.items
            .iter()
            .zip(&holders)
            .map(|(&(t, u), &ctl)| Gate::CU { control: ctl, target: t, u })
            .collect(),
    );
    for l in copy_layers.iter().rev() {
        c.push_layer(l.clone());
    }
    EmbeddedCircuit::new(c, nd, k - 1)
}

/// View of any diagonal-kind gate as an ordered qubit tuple plus its
/// 2^k angle table.
fn as_diag(g: &Gate) -> Result<(Vec<usize>, Vec<f64>)> {
    use std::f64::consts::PI;
    match g {
        Gate::Z(q) => Ok((vec![*q], vec![0.0, PI])),
        Gate::CZ(a, b) => Ok((vec![*a, *b], vec![0.0, 0.0, 0.0, PI])),
        Gate::Phase { theta, a, b } => Ok((vec![*a, *b], vec![0.0, 0.0, 0.0, *theta])),
        Gate::Diag { qubits, angles } => Ok((qubits.clone(), angles.clone())),
        other => Err(QparError::UnsupportedGate {
            context: "diagonal series".into(),
            found: other.kind_name().into(),
        }),
    }
}

/// Reindexes an angle table from one qubit order to another order of the
/// same qubits.
fn permute_diag(qubits: &[usize], angles: &[f64], new_order: &[usize]) -> Vec<f64> {
    let k = qubits.len();
    let mut out = vec![0.0; angles.len()];
    for (l, &w) in angles.iter().enumerate() {
        let mut l2 = 0usize;
        for (i, q) in qubits.iter().enumerate() {
            let bit = (l >> (k - 1 - i)) & 1;
            let pos = new_order.iter().position(|x| x == q).unwrap();
            l2 |= bit << (k - 1 - pos);
        }
        out[l2] = w;
    }
    out
}

/// Parallelizes g diagonal gates sharing one qubit tuple to depth
/// 2*ceil(log2 g) + 1 with (g-1)*k ancillae: copy the whole tuple onto
/// entangled ancilla tuples, apply every gate on its own tuple in one
/// layer, uncopy. The phases add per basis state, so the net effect is the
/// product of the gates.
pub fn parallelize_diagonal_series(gates: &[Gate]) -> Result<EmbeddedCircuit> {
    if gates.is_empty() {
        return Err(QparError::ShapeViolation("empty diagonal series".into()));
    }
    let (tuple, _) = as_diag(&gates[0])?;
    let k = tuple.len();
    let mut tables = Vec::new();
    for g in gates {
        let (qs, angles) = as_diag(g)?;
        if qs.iter().collect::<std::collections::BTreeSet<_>>()
            != tuple.iter().collect()
        {
            return Err(QparError::ShapeViolation(format!(
                "diagonal series mixes supports {tuple:?} and {qs:?}"
            )));
        }
        tables.push(permute_diag(&qs, &angles, &tuple));
    }

    let nd = tuple.iter().max().unwrap() + 1;
    let g = gates.len();
    if g == 1 {
        let c = Circuit::from_gates(nd, [gates[0].clone()]);
        return Ok(EmbeddedCircuit::trivial(c));
    }

    let mut c = Circuit::new(nd + (g - 1) * k);
    // Tuple copy j lives on wires nd + j*k .. nd + (j+1)*k.
    let tuple_wires = |j: usize| -> Vec<usize> {
        if j == 0 {
            tuple.clone()
        } else {
            (0..k).map(|i| nd + (j - 1) * k + i).collect()
        }
    };
    let mut copy_layers: Vec<Vec<Gate>> = Vec::new();
    let mut have = 1usize;
    while have < g {
        let mut layer = Vec::new();
        let fresh = (g - have).min(have);
        for j in 0..fresh {
            let src = tuple_wires(j);
            let dst = tuple_wires(have + j);
            for i in 0..k {
                layer.push(Gate::CX(src[i], dst[i]));
            }
        }
        have += fresh;
        copy_layers.push(layer);
    }
    for l in &copy_layers {
        c.push_layer(l.clone());
    }
    c.push_layer(
        tables
            .iter()
            .enumerate()
            .map(|(j, angles)| Gate::Diag {
                qubits: tuple_wires(j),
                angles: angles.clone(),
            })
            .collect(),
    );
    for l in copy_layers.iter().rev() {
        c.push_layer(l.clone());
    }
    Ok(EmbeddedCircuit::new(c, nd, (g - 1) * k))
}

fn commutator_norm(a: &Mat2, b: &Mat2) -> f64 {
    let ab = mat2_mul(a, b);
    let ba = mat2_mul(b, a);
    ab.iter().zip(&ba).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Closed-form eigenbasis of a 2x2 Hermitian matrix [[a, b], [conj b, c]]:
/// columns of the returned unitary are orthonormal eigenvectors.
fn hermitian_eigenbasis(a: f64, b: Complex64, c: f64) -> Mat2 {
    if b.norm() < 1e-14 {
        return mat2_identity();
    }
    let half_diff = (a - c) / 2.0;
    let lambda1 = (a + c) / 2.0 + (half_diff * half_diff + b.norm_sqr()).sqrt();
    let r = lambda1 - a; // real
    let s = (b.norm_sqr() + r * r).sqrt();
    [b / s, Complex64::new(-r / s, 0.0), Complex64::new(r / s, 0.0), b.conj() / s]
}

/// Finds one unitary T with every T^dag u T diagonal within 1e-8, by
/// eigendecomposing a seeded random Hermitian combination of the gates.
/// Retries with fresh coefficients up to 3 times.
fn common_diagonalizer(us: &[Mat2], seed: u64) -> Result<Mat2> {
    const DIAG_TOL: f64 = 1e-8;
    const ATTEMPTS: usize = 3;
    for attempt in 0..ATTEMPTS {
        let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let mut h00 = 0.0f64;
        let mut h11 = 0.0f64;
        let mut h01 = Complex64::new(0.0, 0.0);
        for u in us {
            let cr: f64 = rng.gen_range(-1.0..1.0);
            let ci: f64 = rng.gen_range(-1.0..1.0);
            // cr*(U+U^dag)/2 + ci*(U-U^dag)/(2i) is Hermitian.
            let d = mat2_dagger(u);
            let re = [
                (u[0] + d[0]) * 0.5,
                (u[1] + d[1]) * 0.5,
                (u[2] + d[2]) * 0.5,
                (u[3] + d[3]) * 0.5,
            ];
            let im = [
                (u[0] - d[0]) / Complex64::new(0.0, 2.0),
                (u[1] - d[1]) / Complex64::new(0.0, 2.0),
                (u[2] - d[2]) / Complex64::new(0.0, 2.0),
                (u[3] - d[3]) / Complex64::new(0.0, 2.0),
            ];
            h00 += cr * re[0].re + ci * im[0].re;
            h11 += cr * re[3].re + ci * im[3].re;
            h01 += cr * re[1] + ci * im[1];
        }
        let t = hermitian_eigenbasis(h00, h01, h11);
        let td = mat2_dagger(&t);
        if us
            .iter()
            .all(|u| mat2_is_diagonal(&mat2_mul(&td, &mat2_mul(u, &t)), DIAG_TOL))
        {
            return Ok(t);
        }
    }
    Err(QparError::DiagonalizationFailed { attempts: ATTEMPTS })
}

pub fn parallelize_commuting_series(gates: &[Gate]) -> Result<EmbeddedCircuit> {
    parallelize_commuting_series_seeded(gates, 0)
}

/// Parallelizes controlled gates sharing one target whose one-qubit
/// unitaries mutually commute: conjugate the target into the common
/// eigenbasis, the gates become controlled-diagonals, and those
/// parallelize onto entangled copies of the target. Depth is at most
/// 2*ceil(log2 g) + 3 (the +2 pays for the basis change, skipped when
/// every gate is already diagonal).
pub fn parallelize_commuting_series_seeded(
    gates: &[Gate],
    seed: u64,
) -> Result<EmbeddedCircuit> {
    if gates.is_empty() {
        return Err(QparError::ShapeViolation("empty commuting series".into()));
    }
    let mut target: Option<usize> = None;
    let mut items: Vec<(usize, Mat2)> = Vec::new();
    for g in gates {
        let Gate::CU { control, target: t, u } = g else {
            return Err(QparError::UnsupportedGate {
                context: "parallelize_commuting_series".into(),
                found: g.kind_name().into(),
            });
        };
        match target {
            None => target = Some(*t),
            Some(t0) if t0 != *t => {
                return Err(QparError::ShapeViolation(format!(
                    "series mixes targets {t0} and {t}"
                )))
            }
            _ => {}
        }
        items.push((*control, *u));
    }
    let t = target.unwrap();

    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let norm = commutator_norm(&items[i].1, &items[j].1);
            if norm > UNITARY_TOL {
                return Err(QparError::NonCommuting { i, j, norm });
            }
        }
    }

    // Gates sharing a control wire compose into one controlled unitary.
    let mut merged: Vec<(usize, Mat2)> = Vec::new();
    for (ctl, u) in items {
        match merged.iter_mut().find(|(c0, _)| *c0 == ctl) {
            Some((_, u0)) => *u0 = mat2_mul(&u, u0),
            None => merged.push((ctl, u)),
        }
    }

    let nd = merged.iter().map(|(c0, _)| *c0).max().unwrap().max(t) + 1;
    let g = merged.len();
    if g == 1 {
        let (control, u) = merged[0];
        let c = Circuit::from_gates(nd, [Gate::CU { control, target: t, u }]);
        return Ok(EmbeddedCircuit::trivial(c));
    }

    let all_diagonal = merged.iter().all(|(_, u)| mat2_is_diagonal(u, ANGLE_TOL));
    let basis = if all_diagonal {
        mat2_identity()
    } else {
        common_diagonalizer(
            &merged.iter().map(|(_, u)| *u).collect::<Vec<_>>(),
            seed,
        )?
    };
    let basis_dag = mat2_dagger(&basis);

    let anc: Vec<usize> = (nd..nd + g - 1).collect();
    let copy_layers = copy_tree_layers(t, &anc);
    let mut holders = vec![t];
    holders.extend(&anc);

    let mut c = Circuit::new(nd + g - 1);
    if !all_diagonal {
        c.push_layer(vec![Gate::U1 { qubit: t, u: basis_dag }]);
    }
    for l in &copy_layers {
        c.push_layer(l.clone());
    }
    c.push_layer(
        merged
            .iter()
            .zip(&holders)
            .map(|((ctl, u), &copy)| {
                let d = mat2_mul(&basis_dag, &mat2_mul(u, &basis));
                Gate::Diag {
                    qubits: vec![*ctl, copy],
                    angles: vec![0.0, 0.0, d[0].arg(), d[3].arg()],
                }
            })
            .collect(),
    );
    for l in copy_layers.iter().rev() {
        c.push_layer(l.clone());
    }
    if !all_diagonal {
        c.push_layer(vec![Gate::U1 { qubit: t, u: basis }]);
    }
    Ok(EmbeddedCircuit::new(c, nd, g - 1))
}

/// The binary-exponent circuit: k exponent qubits (qubit 0 the most
/// significant) and one target on wire k; control i applies u^(2^(k-1-i)),
/// so exponent basis state q drives the target through u^q. Powers of one
/// unitary always commute, so the series parallelizer accepts the result.
pub fn gen_power_circuit(u: &Mat2, k: usize) -> Circuit {
    assert!(k >= 1);
    let mut c = Circuit::new(k + 1);
    let mut power = *u;
    let mut by_control: Vec<Mat2> = Vec::new();
    for _ in 0..k {
        by_control.push(power);
        power = mat2_mul(&power, &power);
    }
    for i in 0..k {
        let p = by_control[k - 1 - i];
        if crate::circuit::mat2_max_dev(&p, &mat2_x()) <= ANGLE_TOL {
            c.push_gate(Gate::CX(i, k));
        } else {
            c.push_gate(Gate::CU { control: i, target: k, u: p });
        }
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutingMode {
    /// Merge per support tuple and pack tuples into disjoint rounds;
    /// no ancillae.
    Compress,
    /// Fan out per-qubit copies and run every merged gate at once;
    /// logarithmic depth, ancillae per demand.
    LogDepth,
}

/// Merges all diagonal gates of c per sorted support tuple. Returns
/// (sorted tuple -> angle table), tuples in lexicographic order.
fn merge_diagonals(c: &Circuit) -> Result<BTreeMap<Vec<usize>, Vec<f64>>> {
    let mut merged: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    for g in c.gates() {
        let (qs, angles) = as_diag(g)?;
        let mut sorted = qs.clone();
        sorted.sort_unstable();
        if sorted.len() > 3 {
            return Err(QparError::ShapeViolation(format!(
                "diagonal support of size {} exceeds the supported maximum of 3",
                sorted.len()
            )));
        }
        let table = permute_diag(&qs, &angles, &sorted);
        merged
            .entry(sorted)
            .and_modify(|acc| {
                for (a, w) in acc.iter_mut().zip(&table) {
                    *a += w;
                }
            })
            .or_insert(table);
    }
    Ok(merged)
}

/// Round-robin tournament rounds over vertices 0..n-1: each round is a
/// set of disjoint pairs, and every pair appears in exactly one round.
/// n-1 rounds for even n, n rounds for odd n.
fn round_robin_round_of(n: usize) -> BTreeMap<(usize, usize), usize> {
    let even_n = if n % 2 == 0 { n } else { n + 1 };
    let m = even_n - 1;
    let mut round_of = BTreeMap::new();
    for r in 0..m {
        // Fixed vertex even_n-1 plays r; rotate the rest.
        let pin = even_n - 1;
        let mut pair = |a: usize, b: usize| {
            if a < n && b < n {
                round_of.insert((a.min(b), a.max(b)), r);
            }
        };
        pair(pin, r);
        for i in 1..=(m - 1) / 2 {
            pair((r + i) % m, (r + m - i) % m);
        }
    }
    round_of
}

pub fn parallelize_commuting_circuit(
    c: &Circuit,
    mode: CommutingMode,
) -> Result<EmbeddedCircuit> {
    parallelize_commuting_circuit_seeded(c, mode, 0)
}

/// Parallelizes a circuit of commuting gates. Two supported shapes: all
/// gates diagonal (any mix of supports, each of size at most 3), or all
/// gates controlled unitaries on one shared control/target pair. Compress
/// mode packs merged gates into disjoint rounds with no ancillae;
/// log-depth mode fans out per-qubit copies and runs everything at once.
pub fn parallelize_commuting_circuit_seeded(
    c: &Circuit,
    mode: CommutingMode,
    seed: u64,
) -> Result<EmbeddedCircuit> {
    if c.gate_count() == 1 {
        return Ok(EmbeddedCircuit::trivial(c.clone()));
    }

    let all_diagonal = c.gates().all(|g| g.is_diagonal_kind());
    if !all_diagonal {
        // The other supported family: controlled unitaries sharing one
        // control/target pair (necessarily commuting up to tolerance).
        let mut support: Option<(usize, usize)> = None;
        for g in c.gates() {
            let Gate::CU { control, target, .. } = g else {
                return Err(QparError::UnsupportedGate {
                    context: "parallelize_commuting_circuit".into(),
                    found: g.kind_name().into(),
                });
            };
            match support {
                None => support = Some((*control, *target)),
                Some(s) if s != (*control, *target) => {
                    return Err(QparError::UnsupportedGate {
                        context: "parallelize_commuting_circuit".into(),
                        found: "controlled gates on distinct overlapping supports"
                            .into(),
                    })
                }
                _ => {}
            }
        }
        let (control, target) = support.unwrap();
        let mut u = mat2_identity();
        for g in c.gates() {
            if let Gate::CU { u: ug, .. } = g {
                u = mat2_mul(ug, &u);
            }
        }
        return match mode {
            CommutingMode::Compress => {
                let out = Circuit::from_gates(
                    c.width(),
                    [Gate::CU { control, target, u }],
                );
                Ok(EmbeddedCircuit::trivial(out))
            }
            CommutingMode::LogDepth => {
                let gates: Vec<Gate> = c.gates().cloned().collect();
                let e = parallelize_commuting_series_seeded(&gates, seed)?;
                // Rebase onto the full input width.
                Ok(widen_embedding(&e, c.width()))
            }
        };
    }

    let merged = merge_diagonals(c)?;
    let n = c.width();

    match mode {
        CommutingMode::Compress => {
            let round_of = round_robin_round_of(n);
            let mut rounds: Vec<Vec<Gate>> = Vec::new();
            let mut extra: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
            for (tuple, angles) in merged {
                if tuple.len() == 2 {
                    let r = round_of[&(tuple[0], tuple[1])];
                    if rounds.len() <= r {
                        rounds.resize(r + 1, Vec::new());
                    }
                    rounds[r].push(Gate::Diag { qubits: tuple, angles });
                } else {
                    extra.push((tuple, angles));
                }
            }
            // Singles and triples go first-fit into an existing round.
            for (tuple, angles) in extra {
                let g = Gate::Diag { qubits: tuple, angles };
                let mut placed = false;
                for round in rounds.iter_mut() {
                    let busy: Vec<usize> =
                        round.iter().flat_map(|x| x.qubits()).collect();
                    if g.qubits().iter().all(|q| !busy.contains(q)) {
                        round.push(g.clone());
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    rounds.push(vec![g]);
                }
            }
            let mut out = Circuit::new(n);
            for round in rounds {
                out.try_push_layer(round)?;
            }
            Ok(EmbeddedCircuit::trivial(out))
        }
        CommutingMode::LogDepth => {
            // Demand: how many merged gates touch each qubit. Supply: the
            // original wire plus demand-1 entangled copies.
            let mut demand = vec![0usize; n];
            for tuple in merged.keys() {
                for &q in tuple {
                    demand[q] += 1;
                }
            }
            let mut supply: Vec<Vec<usize>> = (0..n).map(|q| vec![q]).collect();
            let mut next = n;
            for q in 0..n {
                for _ in 1..demand[q].max(1) {
                    supply[q].push(next);
                    next += 1;
                }
            }
            let n_anc = next - n;

            let mut c_out = Circuit::new(next);
            let mut copy_layers: Vec<Vec<Gate>> = Vec::new();
            let mut have: Vec<usize> = (0..n).map(|_| 1).collect();
            loop {
                let mut layer = Vec::new();
                for q in 0..n {
                    let want = supply[q].len();
                    let fresh = (want - have[q]).min(have[q]);
                    for j in 0..fresh {
                        layer.push(Gate::CX(supply[q][j], supply[q][have[q] + j]));
                    }
                    have[q] += fresh;
                }
                if layer.is_empty() {
                    break;
                }
                copy_layers.push(layer);
            }
            for l in &copy_layers {
                c_out.push_layer(l.clone());
            }
            let mut used = vec![0usize; n];
            let mut big_layer = Vec::new();
            for (tuple, angles) in &merged {
                let wires: Vec<usize> = tuple
                    .iter()
                    .map(|&q| {
                        let w = supply[q][used[q]];
                        used[q] += 1;
                        w
                    })
                    .collect();
                big_layer.push(Gate::Diag { qubits: wires, angles: angles.clone() });
            }
            c_out.push_layer(big_layer);
            for l in copy_layers.iter().rev() {
                c_out.push_layer(l.clone());
            }
            Ok(EmbeddedCircuit::new(c_out, n, n_anc))
        }
    }
}

/// Re-embeds e on a wider data register: data wires keep their indices,
/// ancillae shift up to stay the top block.
pub(crate) fn widen_embedding(e: &EmbeddedCircuit, new_data: usize) -> EmbeddedCircuit {
    assert!(new_data >= e.n_data);
    if new_data == e.n_data {
        return e.clone();
    }
    let shift = new_data - e.n_data;
    let mut c = Circuit::new(new_data + e.n_anc);
    for layer in e.circuit.layers() {
        let moved: Vec<Gate> = layer.iter().map(|g| shift_gate(g, e.n_data, shift)).collect();
        c.push_layer(moved);
    }
    EmbeddedCircuit::new(c, new_data, e.n_anc)
}

fn shift_gate(g: &Gate, boundary: usize, shift: usize) -> Gate {
    let f = |q: usize| if q >= boundary { q + shift } else { q };
    match g {
        Gate::H(q) => Gate::H(f(*q)),
        Gate::X(q) => Gate::X(f(*q)),
        Gate::Z(q) => Gate::Z(f(*q)),
        Gate::CX(a, b) => Gate::CX(f(*a), f(*b)),
        Gate::CZ(a, b) => Gate::CZ(f(*a), f(*b)),
        Gate::W(a, b) => Gate::W(f(*a), f(*b)),
        Gate::Phase { theta, a, b } => Gate::Phase { theta: *theta, a: f(*a), b: f(*b) },
        Gate::Diag { qubits, angles } => Gate::Diag {
            qubits: qubits.iter().map(|&q| f(q)).collect(),
            angles: angles.clone(),
        },
        Gate::CU { control, target, u } => {
            Gate::CU { control: f(*control), target: f(*target), u: *u }
        }
        Gate::U1 { qubit, u } => Gate::U1 { qubit: f(*qubit), u: *u },
    }
}
