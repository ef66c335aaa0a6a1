// SPDX-License-Identifier: Apache-2.0

//! Qubits ⊗ cavity tensor-product layout and the single-site operators that
//! live on it.
//!
//! Layout: qubit 0 is the most significant tensor factor, then qubit 1, ...,
//! and the truncated cavity Fock space is the least significant. The basis
//! index of `|q_0 q_1 ... q_{N-1}⟩ ⊗ |n⟩` is `bits(q) * d + n` where `bits`
//! reads the qubit string as a big-endian binary number. Qubits are indexed
//! from zero.

use crate::error::{QsimError, Result};
use crate::linalg::{kron, ComplexMatrix, C64, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    n_qubits: usize,
    cavity_dim: usize,
}

/// A tensor factor of a [`HilbertSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    Qubit(usize),
    Cavity,
}

impl HilbertSpace {
    pub fn new(n_qubits: usize, cavity_dim: usize) -> Result<Self> {
        if cavity_dim == 0 {
            return Err(QsimError::InvalidArgument("cavity dimension must be positive".into()));
        }
        if n_qubits > 16 {
            return Err(QsimError::InvalidArgument(format!("{n_qubits} qubits exceeds dense-storage limit of 16")));
        }
        Ok(Self { n_qubits, cavity_dim })
    }

    /// Qubit register without a cavity (`d = 1`).
    pub fn qubits_only(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, 1)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn cavity_dim(&self) -> usize {
        self.cavity_dim
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.cavity_dim
    }

    /// Flat index of `|qubit_bits⟩ ⊗ |fock⟩`.
    pub fn index(&self, qubit_bits: usize, fock: usize) -> usize {
        debug_assert!(qubit_bits < self.qubit_dim() && fock < self.cavity_dim);
        qubit_bits * self.cavity_dim + fock
    }

    fn site_dim(&self, site: Site) -> Result<usize> {
        match site {
            Site::Qubit(j) if j < self.n_qubits => Ok(2),
            Site::Qubit(j) => {
                Err(QsimError::InvalidArgument(format!("qubit {j} out of range for {} qubits", self.n_qubits)))
            }
            Site::Cavity => Ok(self.cavity_dim),
        }
    }
}

/// Places `op` on `site` and identities everywhere else.
pub fn embed(op: &ComplexMatrix, site: Site, space: &HilbertSpace) -> Result<ComplexMatrix> {
    let expected = space.site_dim(site)?;
    if op.rows() != expected || op.cols() != expected {
        return Err(QsimError::DimensionMismatch { context: "embed", expected, found: op.rows().max(op.cols()) });
    }
    match site {
        Site::Cavity => Ok(kron(&ComplexMatrix::identity(space.qubit_dim()), op)),
        Site::Qubit(j) => {
            let left = ComplexMatrix::identity(1 << j);
            let right = ComplexMatrix::identity((1 << (space.n_qubits - j - 1)) * space.cavity_dim);
            Ok(kron(&kron(&left, op), &right))
        }
    }
}

/// Operator `qubit_op ⊗ cavity_op` where `qubit_op` acts on the whole register.
pub fn qubit_cavity_product(
    qubit_op: &ComplexMatrix,
    cavity_op: &ComplexMatrix,
    space: &HilbertSpace,
) -> Result<ComplexMatrix> {
    if qubit_op.rows() != space.qubit_dim() || !qubit_op.is_square() {
        return Err(QsimError::DimensionMismatch {
            context: "qubit_cavity_product (register)",
            expected: space.qubit_dim(),
            found: qubit_op.rows(),
        });
    }
    if cavity_op.rows() != space.cavity_dim() || !cavity_op.is_square() {
        return Err(QsimError::DimensionMismatch {
            context: "qubit_cavity_product (cavity)",
            expected: space.cavity_dim(),
            found: cavity_op.rows(),
        });
    }
    Ok(kron(qubit_op, cavity_op))
}

fn mat2(a: C64, b: C64, c: C64, d: C64) -> ComplexMatrix {
    ComplexMatrix::from_vec(2, 2, vec![a, b, c, d]).expect("2x2")
}

pub fn pauli_x() -> ComplexMatrix {
    mat2(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> ComplexMatrix {
    mat2(ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO)
}

/// `diag(1, -1)`, so `σ^z|0⟩ = +|0⟩`.
pub fn pauli_z() -> ComplexMatrix {
    mat2(ONE, ZERO, ZERO, -ONE)
}

/// `σ⁺ = |1⟩⟨0|`.
pub fn sigma_plus() -> ComplexMatrix {
    mat2(ZERO, ZERO, ONE, ZERO)
}

/// `σ⁻ = |0⟩⟨1|`.
pub fn sigma_minus() -> ComplexMatrix {
    mat2(ZERO, ONE, ZERO, ZERO)
}

/// `|+⟩⟨−| = (σ^z − iσ^y)/2` with `|±⟩ = (|0⟩ ± |1⟩)/√2`.
pub fn plus_minus() -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    (pauli_z() - pauli_y().scale(i)).scale_real(0.5)
}

/// Truncated annihilation operator, `a[n-1, n] = √n`.
pub fn annihilation(d: usize) -> Result<ComplexMatrix> {
    if d < 2 {
        return Err(QsimError::InvalidArgument(format!("Fock truncation must be at least 2, got {d}")));
    }
    let mut a = ComplexMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

pub fn creation(d: usize) -> Result<ComplexMatrix> {
    Ok(annihilation(d)?.dagger())
}

pub fn number(d: usize) -> Result<ComplexMatrix> {
    let a = annihilation(d)?;
    Ok(&a.dagger() * &a)
}

/// `x = (a† + a)/√2`.
pub fn quadrature_x(d: usize) -> Result<ComplexMatrix> {
    let a = annihilation(d)?;
    Ok((&a.dagger() + &a).scale_real(std::f64::consts::FRAC_1_SQRT_2))
}

/// `p = i(a† − a)/√2`.
pub fn quadrature_p(d: usize) -> Result<ComplexMatrix> {
    let a = annihilation(d)?;
    Ok((&a.dagger() - &a).scale(C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)))
}
