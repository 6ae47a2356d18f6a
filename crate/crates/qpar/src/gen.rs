//! Circuit generators: the Fourier transform on its tight schedule,
//! controlled-gate staircases, seeded random families, and a small
//! encoder-style demonstration circuit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::circuit::{Circuit, Gate, Mat2, ANGLE_TOL};
use crate::error::{QparError, Result};
use crate::par::basic::{permutation_in_place, Permutation};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Qft,
    Staircase,
    RandomCnot,
    RandomClifford,
    RandomDiag,
    CssDemo,
}

/// A reproducible recipe: the family plus whatever parameters it reads.
/// The seed fully determines the random families' output.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    pub gate_count: usize,
    pub seed: u64,
    /// Staircase only: the controlled one-qubit unitary.
    pub staircase_u: Option<Mat2>,
    /// Fourier only: append the bit-reversal permutation.
    pub qft_reverse: bool,
}

impl GeneratorSpec {
    pub fn new(family: Family, n: usize) -> Self {
        GeneratorSpec {
            family,
            n,
            gate_count: 0,
            seed: 0,
            staircase_u: None,
            qft_reverse: false,
        }
    }
}

/// The quantum Fourier transform on `n` wires, scheduled explicitly in
/// exactly 2n-1 layers: the Hadamard on wire i sits in layer 2i+1 and
/// the symmetric phase between wires i < j in layer i+j+1, which
/// respects every ordering constraint because phase gates commute with
/// one another. Output bits come out in reversed wire order; with
/// `reverse` the routing that restores them is appended (at most three
/// extra layers, since the reversal is an involution).
pub fn gen_qft(n: usize, reverse: bool) -> Circuit {
    let mut c = Circuit::new(n);
    for t in 1..=(2 * n).saturating_sub(1) {
        let mut layer = Vec::new();
        if t % 2 == 1 {
            layer.push(Gate::H((t - 1) / 2));
        }
        for i in 0..n {
            // Partner j with i + j + 1 = t.
            let Some(j) = t.checked_sub(i + 1) else { continue };
            if j > i && j < n {
                let theta = std::f64::consts::PI / (1u64 << (j - i)) as f64;
                layer.push(Gate::Phase { theta, a: i, b: j });
            }
        }
        c.push_layer(layer);
    }
    if reverse {
        let p = Permutation::new((0..n).map(|i| n - 1 - i).collect())
            .expect("reversal is a permutation");
        c = c.concat(&permutation_in_place(&p));
    }
    c
}

/// A chain of controlled-u gates down adjacent wires: control i, target
/// i+1, for i = 0..n-2. Diagonal u becomes a plain phase gate and
/// off-diagonal u becomes a phase part followed by a controlled-not, so
/// the two parallelizable carve-outs land directly in the gate families
/// the rewriting passes accept; anything else stays a controlled
/// unitary, which every pass refuses.
pub fn gen_staircase(n: usize, u: &Mat2) -> Circuit {
    let mut gates = Vec::new();
    for i in 0..n.saturating_sub(1) {
        push_controlled(&mut gates, i, i + 1, u);
    }
    Circuit::from_gates(n, gates)
}

fn push_controlled(gates: &mut Vec<Gate>, c: usize, t: usize, u: &Mat2) {
    let diag_part = |gates: &mut Vec<Gate>, d0: Complex64, d1: Complex64| {
        let (a0, a1) = (d0.arg(), d1.arg());
        if a0.abs() <= ANGLE_TOL && a1.abs() <= ANGLE_TOL {
            return;
        }
        if a0.abs() <= ANGLE_TOL {
            gates.push(Gate::Phase { theta: a1, a: c, b: t });
        } else {
            gates.push(Gate::Diag { qubits: vec![c, t], angles: vec![0.0, 0.0, a0, a1] });
        }
    };
    if u[1].norm() <= ANGLE_TOL && u[2].norm() <= ANGLE_TOL {
        diag_part(gates, u[0], u[3]);
    } else if u[0].norm() <= ANGLE_TOL && u[3].norm() <= ANGLE_TOL {
        // u = X * diag(u10, u01), so the phase part acts first.
        diag_part(gates, u[2], u[1]);
        gates.push(Gate::CX(c, t));
    } else {
        gates.push(Gate::CU { control: c, target: t, u: *u });
    }
}

/// Draws a seeded circuit from the requested family; the fixed generator
/// makes equal specs produce equal circuits. Qft, staircase, and the
/// demo encoder dispatch to their dedicated constructors.
pub fn gen_random(spec: &GeneratorSpec) -> Result<Circuit> {
    match spec.family {
        Family::Qft => return Ok(gen_qft(spec.n, spec.qft_reverse)),
        Family::Staircase => {
            let x = [
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ];
            return Ok(gen_staircase(spec.n, spec.staircase_u.as_ref().unwrap_or(&x)));
        }
        Family::CssDemo => return Ok(gen_css_demo()),
        Family::RandomCnot | Family::RandomClifford | Family::RandomDiag => {}
    }
    let n = spec.n;
    if n < 2 {
        return Err(QparError::ShapeViolation(format!(
            "random families draw two-wire gates and need width >= 2, got {n}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let pair = |rng: &mut ChaCha12Rng| {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        (a, b)
    };
    let mut gates = Vec::with_capacity(spec.gate_count);
    for _ in 0..spec.gate_count {
        let g = match spec.family {
            Family::RandomCnot => {
                let (a, b) = pair(&mut rng);
                Gate::CX(a, b)
            }
            Family::RandomClifford => {
                let (a, b) = pair(&mut rng);
                match rng.gen_range(0..6) {
                    0 => Gate::CX(a, b),
                    1 => Gate::CZ(a.min(b), a.max(b)),
                    2 => Gate::W(a.min(b), a.max(b)),
                    3 => Gate::X(a),
                    4 => Gate::Z(a),
                    _ => Gate::H(a),
                }
            }
            Family::RandomDiag => {
                let (a, b) = pair(&mut rng);
                let tau = std::f64::consts::TAU;
                match rng.gen_range(0..4) {
                    0 => Gate::CX(a, b),
                    1 => Gate::CZ(a.min(b), a.max(b)),
                    2 => Gate::Phase {
                        theta: rng.gen::<f64>() * tau,
                        a: a.min(b),
                        b: a.max(b),
                    },
                    _ => {
                        let qubits =
                            if rng.gen_range(0..2) == 0 { vec![a] } else { vec![a, b] };
                        let angles =
                            (0..1usize << qubits.len()).map(|_| rng.gen::<f64>() * tau).collect();
                        Gate::Diag { qubits, angles }
                    }
                }
            }
            _ => unreachable!(),
        };
        gates.push(g);
    }
    Ok(Circuit::from_gates(n, gates))
}

/// A seven-wire encoder-shaped circuit over Hadamards and controlled-nots
/// only: three wires are opened into superposition and parity patterns
/// are copied across the block, in the style of a stabilizer-code
/// encoder. Its contract here is gate-class membership, not any code
/// property.
pub fn gen_css_demo() -> Circuit {
    Circuit::from_gates(
        7,
        [
            Gate::H(0),
            Gate::H(1),
            Gate::H(2),
            Gate::CX(3, 4),
            Gate::CX(3, 5),
            Gate::CX(0, 3),
            Gate::CX(0, 5),
            Gate::CX(0, 6),
            Gate::CX(1, 3),
            Gate::CX(1, 4),
            Gate::CX(1, 6),
            Gate::CX(2, 4),
            Gate::CX(2, 5),
            Gate::CX(2, 6),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{normal_form, parallelize_clifford};
    use crate::sim::unitary_of;

    #[test]
    fn qft_depth_is_exactly_two_n_minus_one() {
        for n in 1..=64 {
            assert_eq!(gen_qft(n, false).depth(), 2 * n - 1, "n={n}");
        }
    }

    #[test]
    fn qft_single_wire_is_a_lone_hadamard() {
        let c = gen_qft(1, false);
        assert_eq!(c.gates().cloned().collect::<Vec<_>>(), vec![Gate::H(0)]);
    }

    fn dft_entry(n: usize, r: usize, c: usize) -> Complex64 {
        let dim = 1usize << n;
        let arg = std::f64::consts::TAU * (r * c % dim) as f64 / dim as f64;
        Complex64::new(0.0, arg).exp() / (dim as f64).sqrt()
    }

    #[test]
    fn reversed_qft_matches_the_discrete_fourier_matrix() {
        for n in 1..=6 {
            let u = unitary_of(&gen_qft(n, true)).unwrap();
            for r in 0..u.dim() {
                for c in 0..u.dim() {
                    let dev = (u.entry(r, c) - dft_entry(n, r, c)).norm();
                    assert!(dev <= 1e-9, "n={n} entry ({r},{c}) off by {dev}");
                }
            }
        }
    }

    #[test]
    fn unreversed_qft_is_the_fourier_matrix_with_rows_bit_reversed() {
        let n = 3;
        let rev = |y: usize| -> usize {
            (0..n).fold(0, |acc, i| acc | (((y >> i) & 1) << (n - 1 - i)))
        };
        let u = unitary_of(&gen_qft(n, false)).unwrap();
        for r in 0..u.dim() {
            for c in 0..u.dim() {
                let dev = (u.entry(rev(r), c) - dft_entry(n, r, c)).norm();
                assert!(dev <= 1e-9, "entry ({r},{c}) off by {dev}");
            }
        }
    }

    #[test]
    fn staircase_of_x_is_a_plain_controlled_not_chain() {
        let x = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let c = gen_staircase(4, &x);
        let gates: Vec<Gate> = c.gates().cloned().collect();
        assert_eq!(gates, vec![Gate::CX(0, 1), Gate::CX(1, 2), Gate::CX(2, 3)]);
        assert_eq!(c.depth(), 3);
    }

    #[test]
    fn staircase_of_a_phase_becomes_phase_gates() {
        let u = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.7).exp(),
        ];
        let c = gen_staircase(3, &u);
        for g in c.gates() {
            match g {
                Gate::Phase { theta, .. } => assert!((theta - 0.7).abs() <= 1e-12),
                other => panic!("unexpected gate {other:?}"),
            }
        }
        assert_eq!(c.gate_count(), 2);
    }

    #[test]
    fn staircase_of_hadamard_keeps_controlled_unitaries() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = [
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ];
        let c = gen_staircase(4, &h);
        assert_eq!(c.gate_count(), 3);
        for g in c.gates() {
            assert!(matches!(g, Gate::CU { .. }));
        }
    }

    #[test]
    fn staircase_decompositions_preserve_the_unitary() {
        let i0 = Complex64::new(0.0, 0.0);
        let us: Vec<Mat2> = vec![
            // Off-diagonal with distinct phases.
            [i0, Complex64::new(0.0, 0.4).exp(), Complex64::new(0.0, -1.1).exp(), i0],
            // Diagonal with a nontrivial upper phase.
            [
                Complex64::new(0.0, 0.9).exp(),
                i0,
                i0,
                Complex64::new(0.0, 2.2).exp(),
            ],
        ];
        for u in &us {
            let decomposed = gen_staircase(3, u);
            let literal = Circuit::from_gates(
                3,
                [
                    Gate::CU { control: 0, target: 1, u: *u },
                    Gate::CU { control: 1, target: 2, u: *u },
                ],
            );
            let ud = unitary_of(&decomposed).unwrap();
            let ul = unitary_of(&literal).unwrap();
            assert!(crate::sim::max_entry_deviation(&ud, &ul) <= 1e-12);
        }
    }

    #[test]
    fn random_families_are_deterministic_under_the_seed() {
        for family in [Family::RandomCnot, Family::RandomClifford, Family::RandomDiag] {
            let mut spec = GeneratorSpec::new(family, 5);
            spec.gate_count = 30;
            spec.seed = 11;
            let a = gen_random(&spec).unwrap();
            let b = gen_random(&spec).unwrap();
            assert_eq!(a.gates().collect::<Vec<_>>(), b.gates().collect::<Vec<_>>());
            spec.seed = 12;
            let c = gen_random(&spec).unwrap();
            assert_ne!(a.gates().collect::<Vec<_>>(), c.gates().collect::<Vec<_>>());
        }
        let mut empty = GeneratorSpec::new(Family::RandomCnot, 4);
        empty.gate_count = 0;
        assert_eq!(gen_random(&empty).unwrap().depth(), 0);
    }

    #[test]
    fn random_family_alphabets_stay_confined() {
        let mut spec = GeneratorSpec::new(Family::RandomCnot, 6);
        spec.gate_count = 60;
        spec.seed = 3;
        for g in gen_random(&spec).unwrap().gates() {
            assert!(matches!(g, Gate::CX(..)));
        }
        spec.family = Family::RandomClifford;
        for g in gen_random(&spec).unwrap().gates() {
            assert!(matches!(
                g,
                Gate::H(_) | Gate::X(_) | Gate::Z(_) | Gate::CX(..) | Gate::CZ(..) | Gate::W(..)
            ));
        }
        spec.family = Family::RandomDiag;
        for g in gen_random(&spec).unwrap().gates() {
            match g {
                Gate::CX(..) | Gate::CZ(..) | Gate::Phase { .. } => {}
                Gate::Diag { qubits, .. } => assert!(qubits.len() <= 2),
                other => panic!("unexpected gate {other:?}"),
            }
        }
    }

    #[test]
    fn the_demo_encoder_stays_in_the_copy_and_hadamard_class() {
        let c = gen_css_demo();
        assert_eq!(c.width(), 7);
        for g in c.gates() {
            assert!(matches!(g, Gate::H(_) | Gate::CX(..)));
        }
    }

    #[test]
    fn the_demo_encoder_normalizes_and_parallelizes() {
        let c = gen_css_demo();
        let nf = normal_form(&c).unwrap();
        let uo = unitary_of(&nf.to_circuit()).unwrap();
        let ur = unitary_of(&c).unwrap();
        let (eq, _) = crate::sim::equal_up_to_phase(&uo, &ur, 1e-9).unwrap();
        assert!(eq);
        let e = parallelize_clifford(&c).unwrap();
        assert_eq!(e.n_data, 7);
    }
}
