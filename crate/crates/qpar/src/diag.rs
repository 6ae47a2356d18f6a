//! Exact synthesis of diagonal unitaries from parity-phase blocks.
//!
//! Any n-qubit diagonal unitary is diag(e^{i omega}) for a vector of
//! 2^n angles. Expanding omega over the parity basis mu_s (+1 on basis
//! states with an even number of set bits inside s, -1 otherwise) turns
//! the diagonal into a product of independent blocks, one per subset s
//! with a nonzero coefficient: fold the parity of s onto one wire, shift
//! its phase by +-theta_s, unfold. The expansion is a Walsh-Hadamard
//! transform, so the coefficients come out of a butterfly pass.

use std::f64::consts::TAU;

use crate::circuit::{Circuit, Gate};
use crate::error::{QparError, Result};

/// Angle cap for the coefficient transform: 2^12 entries.
pub const MU_WIDTH_CAP: usize = 12;
/// Synthesis emits up to 2^n parity blocks, so it is capped harder.
pub const SYNTH_WIDTH_CAP: usize = 6;

/// The phase angles of a diagonal unitary diag(e^{i omega_a}), indexed
/// by basis state. Angles are meaningful modulo 2 pi.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseVector {
    n: usize,
    omega: Vec<f64>,
}

impl PhaseVector {
    pub fn new(n: usize, omega: Vec<f64>) -> Result<Self> {
        if n > MU_WIDTH_CAP {
            return Err(QparError::WidthOverCap { width: n, cap: MU_WIDTH_CAP });
        }
        if omega.len() != 1 << n {
            return Err(QparError::ShapeViolation(format!(
                "phase vector for {} qubits needs {} angles, got {}",
                n,
                1usize << n,
                omega.len()
            )));
        }
        Ok(PhaseVector { n, omega })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
}

/// Coefficients theta_s of the expansion omega_a = sum_s theta_s mu_s(a).
/// Subsets are keyed by their state-index bit mask: qubit q contributes
/// bit (n-1-q), so mask order matches basis-state order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParityCoefficients {
    n: usize,
    theta: Vec<f64>,
}

impl ParityCoefficients {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficient for the subset with the given state-bit mask.
    pub fn theta(&self, mask: usize) -> f64 {
        self.theta[mask]
    }

    /// Coefficient for a subset given as qubit indices.
    pub fn theta_of(&self, qubits: &[usize]) -> f64 {
        self.theta[mask_of(qubits, self.n)]
    }

    /// Evaluates the expansion back at one basis state.
    pub fn reconstruct(&self, a: usize) -> f64 {
        self.theta
            .iter()
            .enumerate()
            .map(|(s, th)| if (s & a).count_ones() % 2 == 0 { *th } else { -th })
            .sum()
    }
}

fn mask_of(qubits: &[usize], n: usize) -> usize {
    qubits.iter().map(|&q| 1usize << (n - 1 - q)).sum()
}

/// Expands a phase vector over the parity basis:
/// theta_s = 2^{-n} sum_a mu_s(a) omega_a, computed by an in-place
/// butterfly (one pass per bit).
pub fn mu_coefficients(p: &PhaseVector) -> Result<ParityCoefficients> {
    let n = p.n;
    if n > MU_WIDTH_CAP {
        return Err(QparError::WidthOverCap { width: n, cap: MU_WIDTH_CAP });
    }
    let mut t = p.omega.clone();
    let len = t.len();
    let mut half = 1;
    while half < len {
        let mut base = 0;
        while base < len {
            for i in base..base + half {
                let x = t[i];
                let y = t[i + half];
                t[i] = x + y;
                t[i + half] = x - y;
            }
            base += 2 * half;
        }
        half *= 2;
    }
    let scale = 1.0 / len as f64;
    for v in &mut t {
        *v *= scale;
    }
    Ok(ParityCoefficients { n, theta: t })
}

/// A depth 2 ceil(lg |s|) + 1 block realizing diag over a of
/// e^{i theta mu_s(a)}: a balanced CX fold onto the largest wire of s,
/// one phase shift diag(e^{i theta}, e^{-i theta}) there, and the mirror
/// fold. No ancillae; every non-representative wire is restored.
pub fn parity_phase_circuit(s: &[usize], theta: f64, n: usize) -> Result<Circuit> {
    if s.is_empty() {
        return Err(QparError::ShapeViolation(
            "empty parity subset has no representative wire".into(),
        ));
    }
    let mut wires: Vec<usize> = s.to_vec();
    wires.sort_unstable();
    wires.dedup();
    let mut c = Circuit::new(n);

    let mut fold: Vec<Vec<Gate>> = Vec::new();
    let mut live = wires;
    while live.len() > 1 {
        let mut layer = Vec::new();
        let mut next = Vec::new();
        let mut i = 0;
        while i + 1 < live.len() {
            layer.push(Gate::CX(live[i], live[i + 1]));
            next.push(live[i + 1]);
            i += 2;
        }
        if i < live.len() {
            next.push(live[i]);
        }
        fold.push(layer);
        live = next;
    }
    let rep = live[0];

    for l in &fold {
        c.push_layer(l.clone());
    }
    c.push_layer(vec![Gate::Diag { qubits: vec![rep], angles: vec![theta, -theta] }]);
    for l in fold.iter().rev() {
        c.push_layer(l.clone());
    }
    Ok(c)
}

/// Synthesizes diag(e^{i omega}) exactly (global phase included) from
/// parity-phase blocks, one per subset with |theta_s| above 1e-12, in
/// ascending mask order. The empty subset is a global phase, realized as
/// an equal-angle one-qubit diagonal on wire 0. Output gates: CX and
/// one-qubit diagonals only.
pub fn synthesize_diagonal(p: &PhaseVector) -> Result<Circuit> {
    let n = p.n;
    if n > SYNTH_WIDTH_CAP {
        return Err(QparError::WidthOverCap { width: n, cap: SYNTH_WIDTH_CAP });
    }
    let coeff = mu_coefficients(p)?;
    let mut c = Circuit::new(n);
    for mask in 0..1usize << n {
        let theta = coeff.theta(mask);
        if theta.abs() <= 1e-12 {
            continue;
        }
        if mask == 0 {
            c.push_layer(vec![Gate::Diag {
                qubits: vec![0],
                angles: vec![theta, theta],
            }]);
            continue;
        }
        let qubits: Vec<usize> =
            (0..n).filter(|&q| mask >> (n - 1 - q) & 1 == 1).collect();
        c = c.concat(&parity_phase_circuit(&qubits, theta, n)?);
    }
    Ok(c)
}

/// Componentwise sum of two phase vectors, reduced mod 2 pi.
pub fn add_phase_vectors(a: &PhaseVector, b: &PhaseVector) -> Result<PhaseVector> {
    if a.n != b.n {
        return Err(QparError::DimensionMismatch { a: a.n, b: b.n });
    }
    PhaseVector::new(
        a.n,
        a.omega
            .iter()
            .zip(&b.omega)
            .map(|(x, y)| (x + y).rem_euclid(TAU))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::EmbeddedCircuit;
    use crate::gf2::matrix_of_cnot_circuit;
    use crate::sim::{unitary_of, verify_embedding};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    fn random_vector(n: usize, seed: u64) -> PhaseVector {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        PhaseVector::new(n, (0..1 << n).map(|_| rng.gen_range(-PI..PI)).collect())
            .unwrap()
    }

    /// Reference circuit: the whole diagonal as a single gate.
    fn diag_reference(p: &PhaseVector) -> Circuit {
        Circuit::from_gates(
            p.n(),
            [Gate::Diag { qubits: (0..p.n()).collect(), angles: p.omega().to_vec() }],
        )
    }

    #[test]
    fn cz_coefficients_match_the_closed_form() {
        let p = PhaseVector::new(2, vec![0.0, 0.0, 0.0, PI]).unwrap();
        let c = mu_coefficients(&p).unwrap();
        assert!((c.theta_of(&[]) - PI / 4.0).abs() < 1e-12);
        assert!((c.theta_of(&[0]) + PI / 4.0).abs() < 1e-12);
        assert!((c.theta_of(&[1]) + PI / 4.0).abs() < 1e-12);
        assert!((c.theta_of(&[0, 1]) - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn constant_vector_is_a_pure_global_phase() {
        let p = PhaseVector::new(3, vec![0.7; 8]).unwrap();
        let c = mu_coefficients(&p).unwrap();
        assert!((c.theta(0) - 0.7).abs() < 1e-12);
        for mask in 1..8 {
            assert!(c.theta(mask).abs() < 1e-12, "mask {mask}");
        }
    }

    #[test]
    fn butterfly_matches_the_direct_summation_oracle() {
        for n in 1..=4usize {
            let p = random_vector(n, 40 + n as u64);
            let fast = mu_coefficients(&p).unwrap();
            for s in 0..1usize << n {
                let direct: f64 = (0..1usize << n)
                    .map(|a| {
                        let mu = if (s & a).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        mu * p.omega()[a]
                    })
                    .sum::<f64>()
                    / (1 << n) as f64;
                assert!((fast.theta(s) - direct).abs() < 1e-12, "n {n} s {s}");
            }
        }
    }

    #[test]
    fn reconstruction_reproduces_the_input_angles() {
        for seed in 0..100u64 {
            let n = 1 + (seed as usize % 6);
            let p = random_vector(n, seed);
            let c = mu_coefficients(&p).unwrap();
            for a in 0..1usize << n {
                assert!(
                    (c.reconstruct(a) - p.omega()[a]).abs() < 1e-9,
                    "seed {seed} a {a}"
                );
            }
        }
    }

    #[test]
    fn pair_subset_block_matches_its_sign_pattern() {
        let c = parity_phase_circuit(&[0, 1], PI / 4.0, 2).unwrap();
        let u = unitary_of(&c).unwrap();
        let e = |th: f64| Complex64::from_polar(1.0, th);
        let want = [e(PI / 4.0), e(-PI / 4.0), e(-PI / 4.0), e(PI / 4.0)];
        for (a, w) in want.iter().enumerate() {
            assert!((u.entry(a, a) - w).norm() < 1e-12, "state {a}");
        }
    }

    #[test]
    fn full_subset_block_follows_the_parity_of_popcount() {
        let th = 0.3;
        let c = parity_phase_circuit(&[0, 1, 2, 3], th, 4).unwrap();
        assert_eq!(c.depth(), 2 * 2 + 1);
        let u = unitary_of(&c).unwrap();
        for a in 0..16usize {
            let sign = if a.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let want = Complex64::from_polar(1.0, sign * th);
            assert!((u.entry(a, a) - want).norm() < 1e-12, "state {a}");
        }
    }

    #[test]
    fn parity_block_uses_no_ancillae_and_restores_every_wire() {
        let c = parity_phase_circuit(&[1, 2, 4], 1.1, 5).unwrap();
        let cx_only = Circuit::from_gates(
            5,
            c.gates().filter(|g| matches!(g, Gate::CX(..))).cloned(),
        );
        let m = matrix_of_cnot_circuit(&cx_only).unwrap();
        assert!(m.is_identity());
    }

    #[test]
    fn singleton_subset_is_one_diagonal_gate() {
        let c = parity_phase_circuit(&[2], 0.9, 4).unwrap();
        assert_eq!(c.depth(), 1);
        assert_eq!(c.gate_count(), 1);
    }

    #[test]
    fn representative_is_the_largest_wire_of_the_subset() {
        let c = parity_phase_circuit(&[0, 2, 3], 0.5, 5).unwrap();
        let diags: Vec<_> = c
            .gates()
            .filter(|g| matches!(g, Gate::Diag { .. }))
            .collect();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].qubits(), vec![3]);
    }

    #[test]
    fn empty_subset_is_rejected() {
        assert!(matches!(
            parity_phase_circuit(&[], 0.2, 3),
            Err(QparError::ShapeViolation(_))
        ));
    }

    #[test]
    fn cz_phase_vector_synthesizes_phase_exactly() {
        let p = PhaseVector::new(2, vec![0.0, 0.0, 0.0, PI]).unwrap();
        let c = synthesize_diagonal(&p).unwrap();
        let reference = Circuit::from_gates(2, [Gate::CZ(0, 1)]);
        let r = verify_embedding(
            &EmbeddedCircuit::trivial(c),
            &reference,
            1e-9,
            true,
        )
        .unwrap();
        assert!(r.equivalent);
        assert!(r.max_deviation < 1e-9);
    }

    #[test]
    fn zero_vector_synthesizes_to_an_empty_circuit() {
        let p = PhaseVector::new(3, vec![0.0; 8]).unwrap();
        let c = synthesize_diagonal(&p).unwrap();
        assert_eq!(c.depth(), 0);
        assert_eq!(c.gate_count(), 0);
    }

    #[test]
    fn random_vectors_synthesize_exactly() {
        for n in 1..=4usize {
            for seed in 0..5u64 {
                let p = random_vector(n, 100 * n as u64 + seed);
                let c = synthesize_diagonal(&p).unwrap();
                let r = verify_embedding(
                    &EmbeddedCircuit::trivial(c),
                    &diag_reference(&p),
                    1e-9,
                    true,
                )
                .unwrap();
                assert!(r.equivalent, "n {n} seed {seed}");
            }
        }
    }

    #[test]
    fn output_contains_only_cx_and_one_qubit_diagonals() {
        let p = random_vector(4, 77);
        let c = synthesize_diagonal(&p).unwrap();
        for g in c.gates() {
            match g {
                Gate::CX(..) => {}
                Gate::Diag { qubits, .. } => assert_eq!(qubits.len(), 1),
                other => panic!("unexpected gate {other:?}"),
            }
        }
    }

    #[test]
    fn width_caps_are_enforced() {
        assert!(PhaseVector::new(13, vec![0.0; 1 << 13]).is_err());
        let p = random_vector(7, 3);
        assert!(matches!(
            synthesize_diagonal(&p),
            Err(QparError::WidthOverCap { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn synthesis_is_additive_in_the_phase_vector(
            seed_a in 0u64..1000, seed_b in 0u64..1000
        ) {
            let n = 3usize;
            let pa = random_vector(n, seed_a);
            let pb = random_vector(n, 7000 + seed_b);
            let ca = synthesize_diagonal(&pa).unwrap();
            let cb = synthesize_diagonal(&pb).unwrap();
            let sum = add_phase_vectors(&pa, &pb).unwrap();
            let reference = synthesize_diagonal(&sum).unwrap();
            let r = verify_embedding(
                &EmbeddedCircuit::trivial(ca.concat(&cb)),
                &reference,
                1e-9,
                true,
            )
            .unwrap();
            prop_assert!(r.equivalent);
        }
    }
}
