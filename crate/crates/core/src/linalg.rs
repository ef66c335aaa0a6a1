// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] stores entries row-major and is the carrier for every
//! operator, density matrix and propagator in the crate. [`Ket`] is a plain
//! column state vector. A small CSR type is kept private to the crate for the
//! master-equation right-hand side.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QsimError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used to classify a matrix as Hermitian or anti-Hermitian before
/// picking the exponential algorithm.
const HERMITIAN_CLASSIFY_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(QsimError::InvalidArgument(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(QsimError::DimensionMismatch {
                context: "ComplexMatrix::from_vec",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Row-major real entries; convenient for small literal matrices.
    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "axpy shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(QsimError::DimensionMismatch { context: "matmul", expected: self.cols, found: other.rows });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(n, m);
        for i in 0..n {
            let out_row = &mut out.data[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[p * m..(p + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &Ket) -> Result<Ket> {
        if self.cols != v.dim() {
            return Err(QsimError::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                found: v.dim(),
            });
        }
        let out = (0..self.rows).map(|r| self.row(r).iter().zip(v.as_slice()).map(|(&a, &b)| a * b).sum()).collect();
        Ok(Ket::new(out))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// Largest entrywise modulus of `self - other`. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "max_abs_diff shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (max column sum).
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.data[r * self.cols + c].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// max |A - A†| entrywise; infinite for non-square input.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut err: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                err = err.max((self.data[r * n + c] - self.data[c * n + r].conj()).norm());
            }
        }
        err
    }

    fn anti_hermiticity_error(&self) -> f64 {
        let n = self.rows;
        let mut err: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                err = err.max((self.data[r * n + c] + self.data[c * n + r].conj()).norm());
            }
        }
        err
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    /// max |A†A - I| entrywise.
    pub fn unitarity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self.dagger().matmul(self).expect("square");
        prod.max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() < tol
    }

    /// `(A + A†)/2`, in place.
    pub fn symmetrize_hermitian(&mut self) {
        let n = self.rows;
        debug_assert!(self.is_square());
        for r in 0..n {
            let d = self.data[r * n + r];
            self.data[r * n + r] = C64::new(d.re, 0.0);
            for c in (r + 1)..n {
                let avg = (self.data[r * n + c] + self.data[c * n + r].conj()) * 0.5;
                self.data[r * n + c] = avg;
                self.data[c * n + r] = avg.conj();
            }
        }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(self.matmul(other)? - other.matmul(self)?)
    }

    /// `(row, col, value)` for every entry that is exactly non-zero.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for (c, &z) in self.row(r).iter().enumerate() {
                if z != ZERO {
                    out.push((r, c, z));
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(m[(r, c)]);
            }
        }
        Self { rows, cols, data }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        &mut self.data[r * self.cols + c]
    }
}

macro_rules! elementwise {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(mut self, rhs: ComplexMatrix) -> ComplexMatrix {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
                for (a, b) in self.data.iter_mut().zip(rhs.data) {
                    *a $op b;
                }
                self
            }
        }
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                self.clone().$method(rhs.clone())
            }
        }
    };
}

elementwise!(Add, add, +=);
elementwise!(Sub, sub, -=);

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.axpy(ONE, rhs);
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Panicking product for dimension-checked call sites.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

/// Kronecker product. Row index of the result is `ra * b.rows + rb`, so the
/// left factor is the more significant one.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ra in 0..a.rows {
        for ca in 0..a.cols {
            let x = a.data[ra * a.cols + ca];
            if x == ZERO {
                continue;
            }
            for rb in 0..b.rows {
                let r = ra * b.rows + rb;
                for cb in 0..b.cols {
                    out.data[r * cols + ca * b.cols + cb] = x * b.data[rb * b.cols + cb];
                }
            }
        }
    }
    out
}

/// Real eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !a.is_square() {
        return Err(QsimError::NotSquare { rows: a.rows, cols: a.cols });
    }
    let eig = SymmetricEigen::new(a.to_nalgebra());
    let mut order: Vec<usize> = (0..a.rows).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(a.rows, a.rows);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..a.rows {
            vectors.data[r * a.rows + new_c] = eig.eigenvectors[(r, old_c)];
        }
    }
    Ok((values, vectors))
}

pub fn min_eigenvalue_hermitian(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(QsimError::NotSquare { rows: a.rows, cols: a.cols });
    }
    Ok(a.to_nalgebra().symmetric_eigenvalues().iter().copied().reduce(f64::min).unwrap_or(f64::NAN))
}

/// `V diag(f(w)) V†` for Hermitian `a = V diag(w) V†`.
fn hermitian_function(a: &ComplexMatrix, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
    let (w, v) = eigh(a)?;
    let n = a.rows;
    let fw: Vec<C64> = w.iter().map(|&x| f(x)).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut acc = ZERO;
            for k in 0..n {
                acc += v.data[r * n + k] * fw[k] * v.data[c * n + k].conj();
            }
            out.data[r * n + c] = acc;
        }
    }
    Ok(out)
}

/// Matrix exponential `e^A`.
///
/// Hermitian and anti-Hermitian inputs go through an eigendecomposition, so
/// `matexp(-iH)` is unitary to roundoff. Anything else falls back to Padé
/// scaling and squaring.
pub fn matexp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(QsimError::NotSquare { rows: a.rows, cols: a.cols });
    }
    let scale = a.max_abs().max(1.0);
    if a.hermiticity_error() <= HERMITIAN_CLASSIFY_TOL * scale {
        hermitian_function(a, |x| C64::new(x.exp(), 0.0))
    } else if a.anti_hermiticity_error() <= HERMITIAN_CLASSIFY_TOL * scale {
        // A = iK with K = -iA Hermitian.
        let k = a.scale(-I);
        hermitian_function(&k, |x| C64::from_polar(1.0, x))
    } else {
        Ok(ComplexMatrix::from_nalgebra(&a.to_nalgebra().exp()))
    }
}

/// `exp(-i H dt)` for Hermitian `H`.
pub fn unitary_step(h: &ComplexMatrix, dt: f64) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(QsimError::NotSquare { rows: h.rows, cols: h.cols });
    }
    hermitian_function(h, |x| C64::from_polar(1.0, -x * dt))
}

/// `exp(−iH dt)ψ` by its Taylor series, for `‖H‖₁ dt ≤ 1`. Terms are added
/// until they fall below `1e-17 ‖ψ‖`.
pub fn unitary_step_apply(h: &ComplexMatrix, dt: f64, psi: &Ket) -> Result<Ket> {
    let scale = h.one_norm() * dt.abs();
    if scale > 1.0 {
        return Err(QsimError::InvalidArgument(format!("series step needs ‖H‖dt ≤ 1, got {scale:.3e}")));
    }
    let floor = 1e-17 * psi.norm();
    let mut out = psi.clone();
    let mut term = psi.clone();
    for k in 1..=40 {
        term = h.apply(&term)?;
        let c = C64::new(0.0, -dt / k as f64);
        term.0.iter_mut().for_each(|z| *z *= c);
        out.0.iter_mut().zip(&term.0).for_each(|(o, t)| *o += t);
        if term.norm() < floor {
            break;
        }
    }
    Ok(out)
}

/// Global-phase-insensitive operator distance.
///
/// Aligns `b` to `a` with the phase maximizing `|tr(a† b)|`, then returns the
/// largest entrywise modulus of the difference.
pub fn phase_aligned_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(QsimError::DimensionMismatch {
            context: "phase_aligned_distance",
            expected: a.rows * a.cols,
            found: b.rows * b.cols,
        });
    }
    let overlap: C64 = a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { ONE };
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y * phase).norm()).fold(0.0, f64::max))
}

/// Column state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket(Vec<C64>);

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        Self(amplitudes)
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self(self.0.iter().map(|z| z / n).collect())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|self⟩⟨self|`.
    pub fn projector(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m.data[r * n + c] = self.0[r] * self.0[c].conj();
            }
        }
        m
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        let mut v = Vec::with_capacity(self.dim() * other.dim());
        for &a in &self.0 {
            for &b in &other.0 {
                v.push(a * b);
            }
        }
        Ket(v)
    }
}

impl Index<usize> for Ket {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

/// Compressed sparse rows, used for operator-times-dense products in the
/// master-equation right-hand side.
#[derive(Clone, Debug)]
pub(crate) struct Csr {
    dim: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<C64>,
}

impl Csr {
    pub(crate) fn from_dense(m: &ComplexMatrix) -> Self {
        let mut out = Self { dim: m.rows, row_ptr: Vec::with_capacity(m.rows + 1), col: Vec::new(), val: Vec::new() };
        out.refill(m);
        out
    }

    /// Re-extracts the nonzero pattern of `m`, reusing allocations.
    pub(crate) fn refill(&mut self, m: &ComplexMatrix) {
        debug_assert!(m.is_square());
        self.dim = m.rows;
        self.row_ptr.clear();
        self.col.clear();
        self.val.clear();
        self.row_ptr.push(0);
        for r in 0..m.rows {
            for (c, &z) in m.row(r).iter().enumerate() {
                if z != ZERO {
                    self.col.push(c);
                    self.val.push(z);
                }
            }
            self.row_ptr.push(self.col.len());
        }
    }

    /// `out = self * x` for dense square `x`.
    pub(crate) fn mul_dense_into(&self, x: &ComplexMatrix, out: &mut ComplexMatrix) {
        let n = self.dim;
        debug_assert_eq!((x.rows, x.cols), (n, n));
        out.data.iter_mut().for_each(|z| *z = ZERO);
        for r in 0..n {
            let out_row = &mut out.data[r * n..(r + 1) * n];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.val[k];
                let x_row = &x.data[self.col[k] * n..(self.col[k] + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(x_row) {
                    *o += a * b;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sx() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn kron_of_identities_is_identity() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_sigma_x_identity_flips_most_significant_bit() {
        let op = kron(&sx(), &ComplexMatrix::identity(2));
        let out = op.apply(&Ket::basis(4, 0b00)).unwrap();
        assert_eq!(out, Ket::basis(4, 0b10));
    }

    #[test]
    fn kron_xx_squares_to_identity() {
        let xx = kron(&sx(), &sx());
        // Direct 4x4 multiplication: XX is the anti-diagonal permutation.
        let mut anti = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            anti[(i, 3 - i)] = ONE;
        }
        assert_eq!(xx, anti);
        assert!((&xx * &xx).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn matexp_of_zero_is_identity() {
        let e = matexp(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert!(e.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn matexp_of_diagonal_phases() {
        let (t1, t2) = (0.3, -1.7);
        let e = matexp(&ComplexMatrix::from_diag(&[C64::new(0.0, t1), C64::new(0.0, t2)])).unwrap();
        let expected = ComplexMatrix::from_diag(&[C64::from_polar(1.0, t1), C64::from_polar(1.0, t2)]);
        assert!(e.max_abs_diff(&expected) < 1e-14);
    }

    /// Truncated Taylor series with enough terms for the small norms used here.
    fn taylor_exp(a: &ComplexMatrix, terms: usize) -> ComplexMatrix {
        let n = a.rows();
        let mut sum = ComplexMatrix::identity(n);
        let mut term = ComplexMatrix::identity(n);
        for k in 1..terms {
            term = (&term * a).scale_real(1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn matexp_xx_quarter_turn_matches_closed_form_and_series() {
        let xx = kron(&sx(), &sx());
        let theta = std::f64::consts::FRAC_PI_4;
        let a = xx.scale(C64::new(0.0, -theta));
        let closed = ComplexMatrix::identity(4).scale_real(theta.cos()) - xx.scale(C64::new(0.0, theta.sin()));
        let e = matexp(&a).unwrap();
        assert!(e.max_abs_diff(&closed) < 1e-14);
        assert!(e.max_abs_diff(&taylor_exp(&a, 30)) < 1e-14);
        assert!(e.is_unitary(1e-12));
    }

    #[test]
    fn series_step_matches_eigen_step() {
        let h = ComplexMatrix::from_vec(
            3,
            3,
            vec![
                C64::new(1.0, 0.0),
                C64::new(0.5, -0.2),
                C64::new(0.0, 0.3),
                C64::new(0.5, 0.2),
                C64::new(-0.4, 0.0),
                C64::new(0.7, 0.0),
                C64::new(0.0, -0.3),
                C64::new(0.7, 0.0),
                C64::new(0.2, 0.0),
            ],
        )
        .unwrap();
        let psi = Ket::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), ZERO]);
        let dt = 0.2;
        let eig = unitary_step(&h, dt).unwrap().apply(&psi).unwrap();
        let series = unitary_step_apply(&h, dt, &psi).unwrap();
        let diff = eig.as_slice().iter().zip(series.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-14, "{diff}");
        assert!(unitary_step_apply(&h, 10.0, &psi).is_err());
    }

    #[test]
    fn matexp_general_path_matches_series() {
        let a = ComplexMatrix::from_vec(
            3,
            3,
            vec![
                C64::new(0.1, 0.2),
                C64::new(0.5, 0.0),
                C64::new(0.0, -0.3),
                C64::new(-0.2, 0.0),
                C64::new(0.3, 0.1),
                C64::new(0.1, 0.1),
                C64::new(0.0, 0.4),
                C64::new(0.2, -0.2),
                C64::new(-0.4, 0.0),
            ],
        )
        .unwrap();
        assert!(a.hermiticity_error() > 0.1);
        let e = matexp(&a).unwrap();
        assert!(e.max_abs_diff(&taylor_exp(&a, 40)) < 1e-12);
    }

    #[test]
    fn matexp_rejects_non_square() {
        assert!(matches!(matexp(&ComplexMatrix::zeros(2, 3)), Err(QsimError::NotSquare { .. })));
    }

    #[test]
    fn phase_aligned_distance_ignores_global_phase() {
        let u = matexp(&kron(&sx(), &sx()).scale(C64::new(0.0, -0.4))).unwrap();
        let v = u.scale(C64::from_polar(1.0, 2.1));
        assert!(phase_aligned_distance(&u, &v).unwrap() < 1e-14);
        assert!(phase_aligned_distance(&u, &ComplexMatrix::identity(4)).unwrap() > 0.1);
    }

    #[test]
    fn csr_products_match_dense() {
        let a = kron(&sx(), &ComplexMatrix::from_real(2, 2, &[0.0, 2.0, 0.0, -1.0]).unwrap()).scale(C64::new(0.5, 0.5));
        let x =
            ComplexMatrix::from_vec(4, 4, (0..16).map(|k| C64::new(k as f64, (k * k) as f64 * 0.1)).collect()).unwrap();
        let csr = Csr::from_dense(&a);
        let mut out = ComplexMatrix::zeros(4, 4);
        csr.mul_dense_into(&x, &mut out);
        assert!(out.max_abs_diff(&(&a * &x)) < 1e-12);
    }
}
