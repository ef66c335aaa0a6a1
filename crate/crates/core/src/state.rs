// SPDX-License-Identifier: Apache-2.0

//! Density matrices on a [`HilbertSpace`].

use crate::error::{QsimError, Result};
use crate::linalg::{kron, matexp, min_eigenvalue_hermitian, ComplexMatrix, Ket, C64, ZERO};
use crate::space::{annihilation, HilbertSpace};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// A validated density matrix together with the space it lives on.
#[derive(Clone, Debug)]
pub struct QuantumState {
    space: HilbertSpace,
    rho: ComplexMatrix,
}

impl QuantumState {
    /// Validates trace, Hermiticity and numerical positivity.
    pub fn new(space: HilbertSpace, rho: ComplexMatrix) -> Result<Self> {
        check_dims(&space, &rho)?;
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(QsimError::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let herm = rho.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(QsimError::InvalidState(format!("non-Hermitian density matrix (error {herm:.3e})")));
        }
        let min_eig = min_eigenvalue_hermitian(&rho)?;
        if min_eig < -POSITIVITY_TOL {
            return Err(QsimError::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { space, rho })
    }

    pub fn from_ket(space: HilbertSpace, psi: &Ket) -> Result<Self> {
        if psi.dim() != space.dim() {
            return Err(QsimError::DimensionMismatch {
                context: "QuantumState::from_ket",
                expected: space.dim(),
                found: psi.dim(),
            });
        }
        Self::new(space, psi.normalized().projector())
    }

    /// `rho_qubits ⊗ rho_cavity`.
    pub fn product(space: HilbertSpace, rho_qubits: &ComplexMatrix, rho_cavity: &ComplexMatrix) -> Result<Self> {
        if rho_qubits.rows() != space.qubit_dim() || rho_cavity.rows() != space.cavity_dim() {
            return Err(QsimError::DimensionMismatch {
                context: "QuantumState::product",
                expected: space.dim(),
                found: rho_qubits.rows() * rho_cavity.rows(),
            });
        }
        Self::new(space, kron(rho_qubits, rho_cavity))
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn into_rho(self) -> ComplexMatrix {
        self.rho
    }

    /// Reduced density matrix of the qubit register.
    pub fn partial_trace_cavity(&self) -> ComplexMatrix {
        trace_out_cavity(&self.rho, &self.space).expect("validated at construction")
    }

    /// `tr(ρ · op)`.
    pub fn expectation(&self, op: &ComplexMatrix) -> Result<C64> {
        expectation(&self.rho, op)
    }

    pub fn purity(&self) -> f64 {
        purity(&self.rho)
    }
}

fn check_dims(space: &HilbertSpace, rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(QsimError::NotSquare { rows: rho.rows(), cols: rho.cols() });
    }
    if rho.rows() != space.dim() {
        return Err(QsimError::DimensionMismatch {
            context: "density matrix vs space",
            expected: space.dim(),
            found: rho.rows(),
        });
    }
    Ok(())
}

/// `ρ_q[i, j] = Σ_n ρ[i·d + n, j·d + n]`, without validating `rho`.
pub fn trace_out_cavity(rho: &ComplexMatrix, space: &HilbertSpace) -> Result<ComplexMatrix> {
    check_dims(space, rho)?;
    let (q, d) = (space.qubit_dim(), space.cavity_dim());
    let mut out = ComplexMatrix::zeros(q, q);
    for i in 0..q {
        for j in 0..q {
            let mut acc = ZERO;
            for n in 0..d {
                acc += rho[(i * d + n, j * d + n)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// `tr(ρ · op)` without forming the product.
pub fn expectation(rho: &ComplexMatrix, op: &ComplexMatrix) -> Result<C64> {
    if rho.rows() != op.cols() || rho.cols() != op.rows() {
        return Err(QsimError::DimensionMismatch { context: "expectation", expected: rho.rows(), found: op.cols() });
    }
    let n = rho.rows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += rho[(i, k)] * op[(k, i)];
        }
    }
    Ok(acc)
}

/// `tr(ρ²)`, real part.
pub fn purity(rho: &ComplexMatrix) -> f64 {
    expectation(rho, rho).map(|z| z.re).unwrap_or(f64::NAN)
}

/// Fock state `|n⟩` in a `d`-level truncation.
pub fn fock(d: usize, n: usize) -> Result<Ket> {
    if n >= d {
        return Err(QsimError::InvalidArgument(format!("Fock level {n} outside truncation {d}")));
    }
    Ok(Ket::basis(d, n))
}

/// `exp(α a† − α* a)|0⟩` computed on the truncated space.
pub fn displaced_vacuum(d: usize, alpha: C64) -> Result<Ket> {
    let a = annihilation(d)?;
    let generator = a.dagger().scale(alpha) - a.scale(alpha.conj());
    matexp(&generator)?.apply(&Ket::basis(d, 0))
}
