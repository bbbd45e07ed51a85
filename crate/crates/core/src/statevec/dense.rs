//! Dense-matrix reference for the strided kernels.
//!
//! Builds the full `2^n × 2^n` matrix of a gate from explicit Kronecker
//! products, `q_{n-1}` leftmost and `q_0` rightmost. Only meant for small
//! registers in tests.

use super::Gate;
use crate::error::{Error, Result};

/// Largest register the oracle will expand.
pub const MAX_ORACLE_QUBITS: usize = 5;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "matrix must be square");
            data.extend_from_slice(row);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn kron(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let dim = self.dim * rhs.dim;
        let mut data = vec![0.0; dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                if a == 0.0 {
                    continue;
                }
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        data[(i * rhs.dim + k) * dim + j * rhs.dim + l] = a * rhs.get(k, l);
                    }
                }
            }
        }
        DenseMatrix { dim, data }
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim);
        DenseMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                for j in 0..d {
                    data[i * d + j] += a * rhs.get(k, j);
                }
            }
        }
        DenseMatrix { dim: d, data }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, rhs: &DenseMatrix) -> f64 {
        assert_eq!(self.dim, rhs.dim);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn ry(theta: f64) -> DenseMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    DenseMatrix::from_rows(&[&[c, -s], &[s, c]])
}

fn pauli_x() -> DenseMatrix {
    DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

fn projector(bit: usize) -> DenseMatrix {
    if bit == 0 {
        DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]])
    } else {
        DenseMatrix::from_rows(&[&[0.0, 0.0], &[0.0, 1.0]])
    }
}

/// `factors[k]` acts on qubit `k`; the product is taken with `q_{n-1}` as the
/// leftmost Kronecker factor.
fn kron_chain(factors: &[DenseMatrix]) -> DenseMatrix {
    factors
        .iter()
        .rev()
        .fold(DenseMatrix::identity(1), |acc, f| acc.kron(f))
}

fn single(n: usize, qubit: usize, op: DenseMatrix) -> DenseMatrix {
    let mut factors = vec![DenseMatrix::identity(2); n];
    factors[qubit] = op;
    kron_chain(&factors)
}

/// `|0><0|_c ⊗ I + |1><1|_c ⊗ U_t`.
fn controlled(n: usize, control: usize, target: usize, op: DenseMatrix) -> DenseMatrix {
    let mut off = vec![DenseMatrix::identity(2); n];
    off[control] = projector(0);
    let mut on = vec![DenseMatrix::identity(2); n];
    on[control] = projector(1);
    on[target] = op;
    kron_chain(&off).add(&kron_chain(&on))
}

/// Full matrix of `gate` on an `n`-qubit register.
pub fn dense_unitary(gate: &Gate, n: usize) -> Result<DenseMatrix> {
    if n == 0 || n > MAX_ORACLE_QUBITS {
        return Err(Error::Capacity {
            n,
            cap: MAX_ORACLE_QUBITS,
        });
    }
    gate.check(n)?;
    Ok(match *gate {
        Gate::Ry { qubit, theta } => single(n, qubit, ry(theta)),
        Gate::R { qubit, angle } => {
            let (s, c) = angle.sin_cos();
            single(n, qubit, DenseMatrix::from_rows(&[&[c, -s], &[s, c]]))
        }
        Gate::CRy {
            control,
            target,
            theta,
        } => controlled(n, control, target, ry(theta)),
        Gate::Cnot { control, target } => controlled(n, control, target, pauli_x()),
    })
}

/// Product of a gate sequence, first gate applied first (rightmost factor).
pub fn dense_circuit(gates: &[Gate], n: usize) -> Result<DenseMatrix> {
    let mut acc = DenseMatrix::identity(1 << n);
    for g in gates {
        acc = dense_unitary(g, n)?.matmul(&acc);
    }
    Ok(acc)
}
