//! Bit-matrix algebra over GF(2).
//!
//! A circuit of controlled-nots computes an invertible linear map on the
//! bit vector of its basis states: |q> maps to |Mq>. This module holds the
//! matrix type, elimination, and the circuit-to-matrix bridge, packed
//! 64 bits per word so depth-scaling experiments run at n in the hundreds
//! without touching the simulator.

use crate::circuit::{Circuit, Gate};
use crate::error::{QparError, Result};

/// Largest supported dimension; elimination is cubic, so this keeps the
/// worst case around 4096^3 / 64 word operations.
pub const GF2_DIM_CAP: usize = 4096;

const WORD: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GF2Matrix {
    n: usize,
    /// Row-major; bit j of row i lives at word j/64, bit j%64.
    rows: Vec<Vec<u64>>,
}

impl GF2Matrix {
    pub fn zero(n: usize) -> Result<Self> {
        if n > GF2_DIM_CAP {
            return Err(QparError::DimensionOverCap { n, cap: GF2_DIM_CAP });
        }
        let words = n.div_ceil(WORD);
        Ok(GF2Matrix { n, rows: vec![vec![0u64; words]; n] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = GF2Matrix::zero(n)?;
        for i in 0..n {
            m.set(i, i, true);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.rows[i][j / WORD] >> (j % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let mask = 1u64 << (j % WORD);
        if v {
            self.rows[i][j / WORD] |= mask;
        } else {
            self.rows[i][j / WORD] &= !mask;
        }
    }

    /// row[dst] ^= row[src]; the elementary operation of both elimination
    /// and CX application.
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        assert_ne!(src, dst);
        let (a, b) = if src < dst {
            let (lo, hi) = self.rows.split_at_mut(dst);
            (&lo[src], &mut hi[0])
        } else {
            let (lo, hi) = self.rows.split_at_mut(src);
            (&hi[0], &mut lo[dst])
        };
        for (d, s) in b.iter_mut().zip(a.iter()) {
            *d ^= *s;
        }
    }

    /// Column indices of the 1-entries of row i, ascending.
    pub fn row_indices(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, &word) in self.rows[i].iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                out.push(w * WORD + b);
                bits &= bits - 1;
            }
        }
        out
    }

    /// Number of 1-entries in row i.
    pub fn row_weight(&self, i: usize) -> usize {
        self.rows[i].iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn mul(&self, b: &GF2Matrix) -> Result<GF2Matrix> {
        if self.n != b.n {
            return Err(QparError::DimensionMismatch { a: self.n, b: b.n });
        }
        let mut out = GF2Matrix::zero(self.n)?;
        for i in 0..self.n {
            // (AB) row i = XOR of rows of B selected by row i of A.
            for k in self.row_indices(i) {
                for (d, s) in out.rows[i].iter_mut().zip(b.rows[k].iter()) {
                    *d ^= *s;
                }
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        let (rank, _) = self.clone().eliminate(None);
        rank
    }

    pub fn invert(&self) -> Result<GF2Matrix> {
        let mut aug = GF2Matrix::identity(self.n)?;
        let (rank, work) = self.clone().eliminate(Some(&mut aug));
        if rank < self.n {
            return Err(QparError::SingularMatrix);
        }
        // Back-substitution: work is upper triangular with unit diagonal.
        for col in (0..self.n).rev() {
            for row in 0..col {
                if work.get(row, col) {
                    // work row ^= pivot row only affects columns >= col;
                    // mirroring it on aug completes the inverse.
                    aug.xor_row_into(col, row);
                }
            }
        }
        Ok(aug)
    }

    /// Forward elimination with partial pivoting by row swap; mirrors every
    /// operation onto `aug` when given. Returns (rank, echelon form).
    fn eliminate(mut self, mut aug: Option<&mut GF2Matrix>) -> (usize, GF2Matrix) {
        let mut rank = 0;
        for col in 0..self.n {
            let Some(pivot) = (rank..self.n).find(|&r| self.get(r, col)) else {
                continue;
            };
            self.rows.swap(rank, pivot);
            if let Some(a) = aug.as_deref_mut() {
                a.rows.swap(rank, pivot);
            }
            for r in rank + 1..self.n {
                if self.get(r, col) {
                    self.xor_row_into(rank, r);
                    if let Some(a) = aug.as_deref_mut() {
                        a.xor_row_into(rank, r);
                    }
                }
            }
            rank += 1;
        }
        (rank, self)
    }

    /// Total number of 1-entries.
    pub fn weight(&self) -> usize {
        (0..self.n).map(|i| self.row_weight(i)).sum()
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|i| {
            self.row_weight(i) == 1 && self.get(i, i)
        })
    }

    /// True when every row and every column holds exactly one 1.
    pub fn is_permutation(&self) -> bool {
        let mut col_seen = vec![false; self.n];
        for i in 0..self.n {
            let idx = self.row_indices(i);
            if idx.len() != 1 || col_seen[idx[0]] {
                return false;
            }
            col_seen[idx[0]] = true;
        }
        true
    }
}

/// M with |q> -> |Mq>: applying CX(a,b) replaces bit b by b xor a, so row b
/// of the current matrix gains row a. Folding left-to-right leaves the last
/// gate's elementary matrix leftmost in the product, matching the
/// simulator's composition order.
pub fn matrix_of_cnot_circuit(c: &Circuit) -> Result<GF2Matrix> {
    let mut m = GF2Matrix::identity(c.width())?;
    for g in c.gates() {
        match g {
            Gate::CX(a, b) => m.xor_row_into(*a, *b),
            other => {
                return Err(QparError::UnsupportedGate {
                    context: "matrix_of_cnot_circuit".into(),
                    found: other.kind_name().into(),
                })
            }
        }
    }
    Ok(m)
}

/// Affine GF(2) action of a circuit of CX and X gates: |q> -> |Mq + t>.
pub fn affine_of_cnot_x_circuit(c: &Circuit) -> Result<(GF2Matrix, Vec<bool>)> {
    let mut m = GF2Matrix::identity(c.width())?;
    let mut t = vec![false; c.width()];
    for g in c.gates() {
        match g {
            Gate::CX(a, b) => {
                m.xor_row_into(*a, *b);
                let ta = t[*a];
                t[*b] ^= ta;
            }
            Gate::X(q) => t[*q] = !t[*q],
            other => {
                return Err(QparError::UnsupportedGate {
                    context: "affine_of_cnot_x_circuit".into(),
                    found: other.kind_name().into(),
                })
            }
        }
    }
    Ok((m, t))
}
