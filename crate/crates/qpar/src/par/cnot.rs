//! Log-depth resynthesis of controlled-not circuits, alone or mixed with
//! diagonal gates.
//!
//! A pure CX circuit is the linear map q -> Mq over GF(2). Rather than
//! replaying the gate list, the output sums are recomputed from scratch:
//! balanced XOR trees build every row of M into fresh ancillae in
//! O(log n) rounds, a mirrored cascade returns the scaffolding to |0>,
//! and the same trick applied to M^-1 cancels the original inputs so the
//! results can move home. Diagonal gates riding inside a CX circuit
//! commute out as parity-conditioned phases evaluated on the final state.

use std::ops::Range;

use crate::circuit::{Circuit, EmbeddedCircuit, Gate};
use crate::error::{QparError, Result};
use crate::gf2::{matrix_of_cnot_circuit, GF2Matrix};

/// One internal XOR node: `ancilla` receives `left` then `right` during
/// build round `round` (two CX layers per round).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumNode {
    pub ancilla: usize,
    pub round: usize,
    pub left: usize,
    pub right: usize,
}

/// The schedule of one tree stage: which input indices each output row
/// sums, and the intermediate partial-sum nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParitySumPlan {
    pub targets: Vec<Vec<usize>>,
    pub tree: Vec<SumNode>,
}

/// Layer spans of one compute/uncompute stage inside the output circuit:
/// `mirrored` is `forward` reversed, with `transfer` (a single layer)
/// between them.
#[derive(Clone, Debug)]
pub struct StageSpan {
    pub forward: Range<usize>,
    pub transfer: usize,
    pub mirrored: Range<usize>,
}

#[derive(Clone, Debug)]
pub struct CnotLayout {
    pub w_plan: ParitySumPlan,
    pub v_plan: ParitySumPlan,
    pub w_span: StageSpan,
    pub v_span: StageSpan,
    /// The two closing layers that move results onto the data wires and
    /// clear the output ancillae.
    pub final_layers: (usize, usize),
}

struct SumStage {
    copy_layers: Vec<Vec<Gate>>,
    build_layers: Vec<Vec<Gate>>,
    roots: Vec<usize>,
    plan: ParitySumPlan,
    next_free: usize,
}

/// Builds every row sum of `m` over the wires `leaf_of(j)`. Leaves in
/// demand by several rows are first spread over entangled copies in
/// doubling rounds; each row then gets a private balanced tree, split at
/// the median of its sorted index list, two CX layers per level.
fn build_sum_stage(
    m: &GF2Matrix,
    leaf_of: impl Fn(usize) -> usize,
    mut next_free: usize,
) -> SumStage {
    let n = m.n();
    let mut demand = vec![0usize; n];
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let idx = m.row_indices(i);
        for &j in &idx {
            demand[j] += 1;
        }
        targets.push(idx);
    }

    let mut supply: Vec<Vec<usize>> = (0..n).map(|j| vec![leaf_of(j)]).collect();
    for (j, &d) in demand.iter().enumerate() {
        for _ in 1..d.max(1) {
            supply[j].push(next_free);
            next_free += 1;
        }
    }

    let mut copy_layers: Vec<Vec<Gate>> = Vec::new();
    let mut have = vec![1usize; n];
    loop {
        let mut layer = Vec::new();
        for j in 0..n {
            let want = supply[j].len();
            let fresh = (want - have[j]).min(have[j]);
            for t in 0..fresh {
                layer.push(Gate::CX(supply[j][t], supply[j][have[j] + t]));
            }
            have[j] += fresh;
        }
        if layer.is_empty() {
            break;
        }
        copy_layers.push(layer);
    }

    let mut slots = vec![0usize; n];
    let mut build_layers: Vec<Vec<Gate>> = Vec::new();
    let mut tree = Vec::new();
    let mut roots = Vec::with_capacity(n);
    for idx in &targets {
        let leaves: Vec<usize> = idx
            .iter()
            .map(|&j| {
                let w = supply[j][slots[j]];
                slots[j] += 1;
                w
            })
            .collect();
        let (root, _) =
            build_tree(&leaves, &mut next_free, &mut tree, &mut build_layers);
        roots.push(root);
    }

    SumStage {
        copy_layers,
        build_layers,
        roots,
        plan: ParitySumPlan { targets, tree },
        next_free,
    }
}

/// Returns (root wire, level). A node at level L is scheduled in round
/// L-1; both of its children are complete by then.
fn build_tree(
    wires: &[usize],
    next_free: &mut usize,
    tree: &mut Vec<SumNode>,
    layers: &mut Vec<Vec<Gate>>,
) -> (usize, usize) {
    if wires.len() == 1 {
        return (wires[0], 0);
    }
    let mid = (wires.len() + 1) / 2;
    let (left, ll) = build_tree(&wires[..mid], next_free, tree, layers);
    let (right, rl) = build_tree(&wires[mid..], next_free, tree, layers);
    let level = 1 + ll.max(rl);
    let ancilla = *next_free;
    *next_free += 1;
    let round = level - 1;
    if layers.len() < 2 * level {
        layers.resize(2 * level, Vec::new());
    }
    layers[2 * round].push(Gate::CX(left, ancilla));
    layers[2 * round + 1].push(Gate::CX(right, ancilla));
    tree.push(SumNode { ancilla, round, left, right });
    (ancilla, level)
}

pub fn parallelize_cnot_circuit(c: &Circuit) -> Result<EmbeddedCircuit> {
    parallelize_cnot_circuit_with_plan(c).map(|(e, _)| e)
}

/// The full pipeline, also reporting the tree schedules and the layer
/// spans of each phase for structural tests.
pub fn parallelize_cnot_circuit_with_plan(
    c: &Circuit,
) -> Result<(EmbeddedCircuit, CnotLayout)> {
    let n = c.width();
    let m = matrix_of_cnot_circuit(c)?;
    let minv = m.invert()?;

    let w = build_sum_stage(&m, |j| j, n);
    let out_base = w.next_free;
    let v = build_sum_stage(&minv, |j| out_base + j, out_base + n);
    let width = v.next_free;

    let mut circ = Circuit::new(width);
    let push = |circ: &mut Circuit, layer: Vec<Gate>| {
        circ.push_layer(layer);
        circ.depth() - 1
    };

    // Stage W: build Mq into the out wires, then unwind the scaffolding.
    let w_start = circ.depth();
    for l in w.copy_layers.iter().chain(&w.build_layers) {
        push(&mut circ, l.clone());
    }
    let w_transfer = push(
        &mut circ,
        (0..n).map(|i| Gate::CX(w.roots[i], out_base + i)).collect(),
    );
    let w_mirror_start = circ.depth();
    for l in w.build_layers.iter().rev().chain(w.copy_layers.iter().rev()) {
        push(&mut circ, l.clone());
    }
    let w_span = StageSpan {
        forward: w_start..w_transfer,
        transfer: w_transfer,
        mirrored: w_mirror_start..circ.depth(),
    };

    // Stage V: recompute q = M^-1(Mq) from the out wires and cancel the
    // original inputs, then unwind again.
    let v_start = circ.depth();
    for l in v.copy_layers.iter().chain(&v.build_layers) {
        push(&mut circ, l.clone());
    }
    let v_transfer = push(
        &mut circ,
        (0..n).map(|i| Gate::CX(v.roots[i], i)).collect(),
    );
    let v_mirror_start = circ.depth();
    for l in v.build_layers.iter().rev().chain(v.copy_layers.iter().rev()) {
        push(&mut circ, l.clone());
    }
    let v_span = StageSpan {
        forward: v_start..v_transfer,
        transfer: v_transfer,
        mirrored: v_mirror_start..circ.depth(),
    };

    // Move the results home and clear the out wires.
    let f1 = push(
        &mut circ,
        (0..n).map(|i| Gate::CX(out_base + i, i)).collect(),
    );
    let f2 = push(
        &mut circ,
        (0..n).map(|i| Gate::CX(i, out_base + i)).collect(),
    );

    let e = EmbeddedCircuit::new(circ, n, width - n);
    Ok((
        e,
        CnotLayout {
            w_plan: w.plan,
            v_plan: v.plan,
            w_span,
            v_span,
            final_layers: (f1, f2),
        },
    ))
}

/// Parallelizes a circuit of CX plus diagonal gates. The CX product
/// collapses into one resynthesized block; every diagonal gate becomes a
/// phase conditioned on parities of the final state (the rows of the
/// inverse suffix matrix at its original position), and all of those run
/// simultaneously on copy-fanned parity wires.
pub fn parallelize_cnot_diagonal(c: &Circuit) -> Result<EmbeddedCircuit> {
    let n = c.width();

    // Factor the gate list and record, per diagonal gate, the inverse
    // GF(2) matrix of the CX suffix behind it. Walking backward, passing
    // CX(a,b) prepends it to the suffix, which on the inverse matrix is
    // row b += row a.
    let gates: Vec<&Gate> = c.gates().collect();
    let mut rinv = GF2Matrix::identity(n)?;
    let mut diags_rev: Vec<(Gate, GF2Matrix)> = Vec::new();
    for g in gates.iter().rev() {
        match g {
            Gate::CX(a, b) => rinv.xor_row_into(*a, *b),
            g if g.is_diagonal_kind() => {
                if g.arity() > 3 {
                    return Err(QparError::ShapeViolation(format!(
                        "diagonal support of size {} exceeds the supported maximum of 3",
                        g.arity()
                    )));
                }
                diags_rev.push(((*g).clone(), rinv.clone()));
            }
            other => {
                return Err(QparError::UnsupportedGate {
                    context: "parallelize_cnot_diagonal".into(),
                    found: other.kind_name().into(),
                })
            }
        }
    }
    if diags_rev.is_empty() {
        return parallelize_cnot_circuit(c);
    }
    let diags: Vec<(Gate, GF2Matrix)> = diags_rev.into_iter().rev().collect();

    let cx_only = Circuit::from_gates(
        n,
        c.gates().filter(|g| matches!(g, Gate::CX(..))).cloned(),
    );
    let cx_block = parallelize_cnot_circuit(&cx_only)?;
    let base = cx_block.circuit.width();

    // Parity rows needed on the final state: one per (diagonal, qubit).
    let mut rows: Vec<Vec<usize>> = Vec::new();
    for (g, r) in &diags {
        for q in g.qubits() {
            rows.push(r.row_indices(q));
        }
    }
    let mut demand = vec![0usize; n];
    for row in &rows {
        for &w in row {
            demand[w] += 1;
        }
    }
    let mut next = base;
    let mut supply: Vec<Vec<usize>> = (0..n).map(|w| vec![w]).collect();
    for (w, &d) in demand.iter().enumerate() {
        for _ in 1..d.max(1) {
            supply[w].push(next);
            next += 1;
        }
    }

    let mut circ = Circuit::new(next);
    for layer in cx_block.circuit.layers() {
        circ.push_layer(layer.clone());
    }

    let mut copy_layers: Vec<Vec<Gate>> = Vec::new();
    let mut have = vec![1usize; n];
    loop {
        let mut layer = Vec::new();
        for w in 0..n {
            let want = supply[w].len();
            let fresh = (want - have[w]).min(have[w]);
            for t in 0..fresh {
                layer.push(Gate::CX(supply[w][t], supply[w][have[w] + t]));
            }
            have[w] += fresh;
        }
        if layer.is_empty() {
            break;
        }
        copy_layers.push(layer);
    }

    // Each row folds its assigned wires with an in-place pairing tree;
    // the largest wire index survives holding the parity.
    let mut slots = vec![0usize; n];
    let mut survivors: Vec<usize> = Vec::new();
    let mut fold_layers: Vec<Vec<Gate>> = Vec::new();
    for row in &rows {
        let mut live: Vec<usize> = row
            .iter()
            .map(|&w| {
                let s = supply[w][slots[w]];
                slots[w] += 1;
                s
            })
            .collect();
        live.sort_unstable();
        let mut round = 0usize;
        while live.len() > 1 {
            if fold_layers.len() <= round {
                fold_layers.push(Vec::new());
            }
            let mut nextlive = Vec::new();
            let mut i = 0;
            while i + 1 < live.len() {
                fold_layers[round].push(Gate::CX(live[i], live[i + 1]));
                nextlive.push(live[i + 1]);
                i += 2;
            }
            if i < live.len() {
                nextlive.push(live[i]);
            }
            live = nextlive;
            round += 1;
        }
        survivors.push(live[0]);
    }

    for l in copy_layers.iter().chain(&fold_layers) {
        circ.push_layer(l.clone());
    }

    // One simultaneous layer of all conjugated diagonals, each reading
    // its parity wires in the original gate's qubit-role order.
    let mut diag_layer = Vec::new();
    let mut at = 0usize;
    for (g, _) in &diags {
        let qs = g.qubits();
        let wires: Vec<usize> = survivors[at..at + qs.len()].to_vec();
        at += qs.len();
        let angles = diag_angles(g);
        diag_layer.push(Gate::Diag { qubits: wires, angles });
    }
    circ.push_layer(diag_layer);

    for l in fold_layers.iter().rev().chain(copy_layers.iter().rev()) {
        circ.push_layer(l.clone());
    }

    Ok(EmbeddedCircuit::new(circ, n, next - n))
}

/// Angle table of any diagonal-kind gate, indexed by its qubits() order.
fn diag_angles(g: &Gate) -> Vec<f64> {
    use std::f64::consts::PI;
    match g {
        Gate::Z(_) => vec![0.0, PI],
        Gate::CZ(..) => vec![0.0, 0.0, 0.0, PI],
        Gate::Phase { theta, .. } => vec![0.0, 0.0, 0.0, *theta],
        Gate::Diag { angles, .. } => angles.clone(),
        _ => unreachable!("diag_angles on non-diagonal gate"),
    }
}
