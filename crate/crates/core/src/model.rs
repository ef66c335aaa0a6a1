// SPDX-License-Identifier: Apache-2.0

//! Hamiltonians, couplings, gate unitaries and target states of the driven
//! cavity-mediated qubit interaction.
//!
//! Unit convention: every rate is measured in units of a reference coupling
//! η (so η = 1 in the equal-coupling case) and time in units of 1/η. Use
//! [`time_in_ns`] to attach physical units for a given η/2π in MHz.

use std::f64::consts::{PI, SQRT_2, TAU};

use crate::dynamics::Hamiltonian;
use crate::error::{QsimError, Result};
use crate::linalg::{kron, matexp, ComplexMatrix, Ket, C64, I};
use crate::space::{annihilation, embed, pauli_x, plus_minus, HilbertSpace, Site};

/// Reference coupling η/2π in MHz for converting dimensionless times.
pub const REFERENCE_ETA_MHZ: f64 = 10.0;

/// Converts a time in units of 1/η to nanoseconds, given η/2π in MHz.
pub fn time_in_ns(t_over_eta: f64, eta_mhz: f64) -> f64 {
    t_over_eta / (TAU * eta_mhz * 1e6) * 1e9
}

/// Bare coupling parameters of one qubit. All four are angular frequencies
/// in a common unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Qubit–cavity coupling `G`.
    pub g: f64,
    /// Microwave drive strength `Ω_L`.
    pub omega_l: f64,
    /// Large detuning `Δ = ω_e1 − ω_L`.
    pub delta_big: f64,
    /// Small detuning `δ = ω_01 + ω_L − ω_c`.
    pub delta_small: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingApprox {
    /// `(G Ω_L / 2)(1/(Δ + δ) + 1/Δ)`.
    Exact,
    /// `G Ω_L / Δ`, valid for `Δ ≫ δ`.
    LargeDetuning,
}

/// Effective cavity-assisted coupling η after eliminating the excited level.
pub fn effective_coupling(p: &PhysicalParams, approx: CouplingApprox) -> Result<f64> {
    if !(p.delta_big > 0.0) || !(p.delta_big + p.delta_small > 0.0) {
        return Err(QsimError::InvalidArgument(format!(
            "detunings must satisfy Δ > 0 and Δ + δ > 0 (Δ = {}, δ = {})",
            p.delta_big, p.delta_small
        )));
    }
    if p.delta_big < 10.0 * p.delta_small.abs() {
        log::warn!("Δ = {} is not much larger than δ = {}; elimination is marginal", p.delta_big, p.delta_small);
    }
    Ok(match approx {
        CouplingApprox::Exact => 0.5 * p.g * p.omega_l * (1.0 / (p.delta_big + p.delta_small) + 1.0 / p.delta_big),
        CouplingApprox::LargeDetuning => p.g * p.omega_l / p.delta_big,
    })
}

/// Drive configuration, in units of η.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveParams {
    /// Per-qubit effective couplings η_j.
    pub etas: Vec<f64>,
    /// Per-qubit drive phases φ_j in radians.
    pub phis: Vec<f64>,
    /// Common detuning δ.
    pub delta: f64,
    /// Rabi strength Ω of the resonant qubit drive; only the full
    /// rotated-frame Hamiltonian uses it.
    pub omega: f64,
}

impl DriveParams {
    /// Equal couplings η_j = 1 and zero phases.
    pub fn uniform(n_qubits: usize, delta: f64, omega: f64) -> Self {
        Self { etas: vec![1.0; n_qubits], phis: vec![0.0; n_qubits], delta, omega }
    }

    pub fn with_phis(mut self, phis: Vec<f64>) -> Self {
        self.phis = phis;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.etas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.etas.len() != self.phis.len() {
            return Err(QsimError::InvalidArgument(format!(
                "{} couplings but {} phases",
                self.etas.len(),
                self.phis.len()
            )));
        }
        let all = self.etas.iter().chain(&self.phis).chain([&self.delta, &self.omega]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(QsimError::InvalidArgument("drive parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Which pieces of the rotated-frame interaction to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// Spin-dependent force plus the terms oscillating at Ω ± δ.
    Full,
    /// Spin-dependent force only (fast terms dropped under strong driving).
    StrongDrive,
}

/// Time-dependent Hamiltonian of N driven qubits sharing one cavity mode, in
/// the frame rotating with the resonant qubit drive.
///
/// With `c_j(t) = η_j e^{i(δt + φ_j)}` it is
/// `Σ_j c_j(t) a [σ_j^x + e^{iΩt}|+⟩⟨−|_j − e^{−iΩt}|−⟩⟨+|_j] + h.c.`,
/// where the bracketed fast terms are present only in [`Frame::Full`].
#[derive(Clone, Debug)]
pub struct DrivenCavity {
    drive: DriveParams,
    space: HilbertSpace,
    frame: Frame,
    force: Vec<Triplets>,
    raise_fast: Vec<Triplets>,
    lower_fast: Vec<Triplets>,
}

type Triplets = Vec<(usize, usize, C64)>;

/// `out += z·M + (z·M)†` for `M` given by its non-zero entries.
fn add_hermitian_part(out: &mut [C64], n: usize, z: C64, m: &Triplets) {
    for &(r, c, v) in m {
        let w = z * v;
        out[r * n + c] += w;
        out[c * n + r] += w.conj();
    }
}

impl DrivenCavity {
    pub fn new(drive: DriveParams, space: HilbertSpace, frame: Frame) -> Result<Self> {
        drive.validate()?;
        if drive.n_qubits() != space.n_qubits() {
            return Err(QsimError::DimensionMismatch {
                context: "drive parameters vs Hilbert space",
                expected: space.n_qubits(),
                found: drive.n_qubits(),
            });
        }
        let a = annihilation(space.cavity_dim())?;
        let register = HilbertSpace::qubits_only(space.n_qubits())?;
        let on_qubit = |op: &ComplexMatrix, j: usize| -> Result<Triplets> {
            Ok(kron(&embed(op, Site::Qubit(j), &register)?, &a).scale_real(drive.etas[j]).nonzero_entries())
        };
        let pm = plus_minus();
        let mp = pm.dagger();
        let n = space.n_qubits();
        let force = (0..n).map(|j| on_qubit(&pauli_x(), j)).collect::<Result<_>>()?;
        let (raise_fast, lower_fast) = match frame {
            Frame::Full => (
                (0..n).map(|j| on_qubit(&pm, j)).collect::<Result<_>>()?,
                (0..n).map(|j| on_qubit(&mp, j)).collect::<Result<_>>()?,
            ),
            Frame::StrongDrive => (Vec::new(), Vec::new()),
        };
        Ok(Self { drive, space, frame, force, raise_fast, lower_fast })
    }

    pub fn drive(&self) -> &DriveParams {
        &self.drive
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }
}

impl Hamiltonian for DrivenCavity {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn write_at(&self, t: f64, out: &mut ComplexMatrix) {
        let n = self.space.dim();
        let dst = out.as_mut_slice();
        dst.fill(C64::new(0.0, 0.0));
        for j in 0..self.force.len() {
            let c = C64::from_polar(1.0, self.drive.delta * t + self.drive.phis[j]);
            add_hermitian_part(dst, n, c, &self.force[j]);
            if self.frame == Frame::Full {
                let fast = C64::from_polar(1.0, self.drive.omega * t);
                add_hermitian_part(dst, n, c * fast, &self.raise_fast[j]);
                add_hermitian_part(dst, n, -c * fast.conj(), &self.lower_fast[j]);
            }
        }
    }

    fn max_frequency(&self) -> f64 {
        match self.frame {
            Frame::StrongDrive => self.drive.delta.abs(),
            Frame::Full => self.drive.omega.abs() + self.drive.delta.abs(),
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(QsimError::InvalidArgument(format!("time must be finite and non-negative, got {t}")))
    }
}

/// Full rotated-frame Hamiltonian at time `t`, including the terms
/// oscillating at Ω ± δ.
pub fn hamiltonian_h1(drive: &DriveParams, space: &HilbertSpace, t: f64) -> Result<ComplexMatrix> {
    check_time(t)?;
    Ok(DrivenCavity::new(drive.clone(), *space, Frame::Full)?.at(t))
}

/// Strong-driving Hamiltonian at time `t`:
/// `Σ_j η_j [a e^{i(δt+φ_j)} + a† e^{−i(δt+φ_j)}] σ_j^x`.
pub fn hamiltonian_h2(drive: &DriveParams, space: &HilbertSpace, t: f64) -> Result<ComplexMatrix> {
    check_time(t)?;
    Ok(DrivenCavity::new(drive.clone(), *space, Frame::StrongDrive)?.at(t))
}

/// Closed phase-space loop of the cavity under a single-qubit force.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
}

impl Trajectory {
    /// The loop traced by the opposite σ^x branch, i.e. the point reflection
    /// through the origin.
    pub fn mirrored(&self) -> Self {
        Self {
            times: self.times.clone(),
            xs: self.xs.iter().map(|x| -x).collect(),
            ps: self.ps.iter().map(|p| -p).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `x(t) = √2 η (1 − cos δt)/δ`, `p(t) = √2 η sin(δt)/δ`.
///
/// Under `−iH` evolution this loop is followed by the cavity when the
/// qubit sits in the σ^x = −1 eigenstate; the σ^x = +1 state traces
/// [`Trajectory::mirrored`]. All points lie on the circle of radius
/// `√2η/δ` centred at `(√2η/δ, 0)`.
pub fn trajectory(eta: f64, delta: f64, times: &[f64]) -> Result<Trajectory> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(QsimError::InvalidArgument(format!("detuning must be finite and non-zero, got {delta}")));
    }
    let unit = SQRT_2 * eta / delta;
    Ok(Trajectory {
        times: times.to_vec(),
        xs: times.iter().map(|&t| unit * (1.0 - (delta * t).cos())).collect(),
        ps: times.iter().map(|&t| unit * (delta * t).sin()).collect(),
    })
}

/// `λ = 2η²/δ`.
pub fn geometric_coupling(eta: f64, delta: f64) -> f64 {
    2.0 * eta * eta / delta
}

/// Duration `τ_n = 2nπ/|δ|` of `n` closed loops.
pub fn gate_time(delta: f64, n_loops: u32) -> f64 {
    TAU * n_loops as f64 / delta.abs()
}

/// Detuning `δ = 4√n η` that yields θ = π/4 after `n` loops.
pub fn quarter_turn_detuning(eta: f64, n_loops: u32) -> f64 {
    4.0 * (n_loops as f64).sqrt() * eta
}

/// Geometric phase angle `θ = λ τ_n cos φ = 4nπη² cos φ / δ²`.
pub fn theta_of_schedule(eta: f64, delta: f64, n_loops: u32, phi1: f64) -> Result<f64> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(QsimError::InvalidArgument(format!("detuning must be finite and non-zero, got {delta}")));
    }
    if n_loops == 0 {
        return Err(QsimError::InvalidArgument("at least one loop is required".into()));
    }
    Ok(geometric_coupling(eta, delta) * gate_time(delta, n_loops) * phi1.cos())
}

fn xx(register: &HilbertSpace, j: usize, k: usize) -> Result<ComplexMatrix> {
    let x = pauli_x();
    Ok(&embed(&x, Site::Qubit(j), register)? * &embed(&x, Site::Qubit(k), register)?)
}

/// Two-qubit effective Hamiltonian `λ cos φ₁ σ₁^x σ₂^x`.
pub fn effective_pair_hamiltonian(lambda: f64, phi1: f64) -> ComplexMatrix {
    kron(&pauli_x(), &pauli_x()).scale_real(lambda * phi1.cos())
}

/// All-to-all effective Hamiltonian `λ Σ_{j<k} cos(φ_j − φ_k) σ_j^x σ_k^x` on
/// a qubit register (`cavity_dim` must be 1).
pub fn effective_all_to_all(lambda: f64, phis: &[f64], register: &HilbertSpace) -> Result<ComplexMatrix> {
    let n = register.n_qubits();
    if register.cavity_dim() != 1 {
        return Err(QsimError::InvalidArgument("effective Hamiltonians act on the qubit register only (d = 1)".into()));
    }
    if n < 2 {
        return Err(QsimError::InvalidArgument(format!("need at least two qubits, got {n}")));
    }
    if phis.len() != n {
        return Err(QsimError::DimensionMismatch {
            context: "effective_all_to_all phases",
            expected: n,
            found: phis.len(),
        });
    }
    let mut h = ComplexMatrix::zeros(register.dim(), register.dim());
    for j in 0..n {
        for k in (j + 1)..n {
            h.axpy(C64::new(lambda * (phis[j] - phis[k]).cos(), 0.0), &xx(register, j, k)?);
        }
    }
    Ok(h)
}

/// Nearest-neighbour chain `λ' Σ_j cos(φ_j − φ_{j+1}) σ_j^x σ_{j+1}^x`.
pub fn effective_chain(lambda_prime: f64, phis: &[f64], n: usize) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(QsimError::InvalidArgument(format!("need at least two qubits, got {n}")));
    }
    if phis.len() != n {
        return Err(QsimError::DimensionMismatch { context: "effective_chain phases", expected: n, found: phis.len() });
    }
    let register = HilbertSpace::qubits_only(n)?;
    let mut h = ComplexMatrix::zeros(register.dim(), register.dim());
    for j in 0..n - 1 {
        h.axpy(C64::new(lambda_prime * (phis[j] - phis[j + 1]).cos(), 0.0), &xx(&register, j, j + 1)?);
    }
    Ok(h)
}

/// Collective spin `Σ_j σ_j^x` on an `n`-qubit register.
pub fn collective_x(n: usize) -> Result<ComplexMatrix> {
    let register = HilbertSpace::qubits_only(n)?;
    let mut s = ComplexMatrix::zeros(register.dim(), register.dim());
    for j in 0..n {
        s += &embed(&pauli_x(), Site::Qubit(j), &register)?;
    }
    Ok(s)
}

/// `U(θ) = exp[−i(θ/2)(Σ_j σ_j^x)²]`. For two qubits this is `exp(−iθσ₁^xσ₂^x)`
/// times the global phase `e^{−iθ}`.
pub fn gate_unitary(theta: f64, n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(QsimError::InvalidArgument("gate needs at least one qubit".into()));
    }
    let s = collective_x(n)?;
    matexp(&(&s * &s).scale(-I * (theta / 2.0)))
}

/// `U(π/4)|00⟩`, a maximally entangled two-qubit state.
pub fn bell_target() -> Ket {
    gate_unitary(PI / 4.0, 2).and_then(|u| u.apply(&Ket::basis(4, 0))).expect("fixed dimensions").normalized()
}

/// `U(π/4)|0…0⟩` on `n` qubits.
pub fn ghz_target(n: usize) -> Result<Ket> {
    if n < 2 {
        return Err(QsimError::InvalidArgument(format!("GHZ target needs at least two qubits, got {n}")));
    }
    Ok(gate_unitary(PI / 4.0, n)?.apply(&Ket::basis(1 << n, 0))?.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{creation, quadrature_p, quadrature_x};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn effective_coupling_reference_point() {
        // G = Ω_L = 0.1, Δ = 1 (units of 2π GHz) gives η = 0.01 = 2π × 10 MHz.
        let p = PhysicalParams { g: 0.1, omega_l: 0.1, delta_big: 1.0, delta_small: 0.0 };
        let eta = effective_coupling(&p, CouplingApprox::LargeDetuning).unwrap();
        assert!((eta - 0.01).abs() < 1e-15);
    }

    #[test]
    fn effective_coupling_exact_branch() {
        // 0.005 * (1/1.04 + 1) = 0.00980769...
        let p = PhysicalParams { g: 0.1, omega_l: 0.1, delta_big: 1.0, delta_small: 0.04 };
        let eta = effective_coupling(&p, CouplingApprox::Exact).unwrap();
        assert!((eta - 0.009_807_692_307_692_308).abs() < 1e-15);
        assert!((eta * 1000.0 - 9.8077).abs() < 1e-4);
    }

    #[test]
    fn effective_coupling_without_drive_vanishes() {
        let p = PhysicalParams { g: 0.1, omega_l: 0.0, delta_big: 1.0, delta_small: 0.04 };
        assert_eq!(effective_coupling(&p, CouplingApprox::Exact).unwrap(), 0.0);
        assert_eq!(effective_coupling(&p, CouplingApprox::LargeDetuning).unwrap(), 0.0);
    }

    #[test]
    fn effective_coupling_rejects_bad_denominators() {
        let p = PhysicalParams { g: 0.1, omega_l: 0.1, delta_big: 0.0, delta_small: 0.0 };
        assert!(effective_coupling(&p, CouplingApprox::Exact).is_err());
        let p = PhysicalParams { g: 0.1, omega_l: 0.1, delta_big: 1.0, delta_small: -1.0 };
        assert!(effective_coupling(&p, CouplingApprox::Exact).is_err());
    }

    #[test]
    fn time_conversion() {
        // τ₁ = π/2 in units of 1/η at η/2π = 10 MHz is 25 ns.
        assert!((time_in_ns(FRAC_PI_2, REFERENCE_ETA_MHZ) - 25.0).abs() < 1e-12);
    }

    fn space(n: usize, d: usize) -> HilbertSpace {
        HilbertSpace::new(n, d).unwrap()
    }

    #[test]
    fn h1_vanishes_without_coupling() {
        let mut drive = DriveParams::uniform(2, 4.0, 50.0);
        drive.etas = vec![0.0, 0.0];
        let h = hamiltonian_h1(&drive, &space(2, 4), 0.3).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn h1_minus_h2_is_the_fast_part() {
        let s = space(2, 4);
        let drive = DriveParams::uniform(2, 4.0, 30.0).with_phis(vec![0.2, -0.5]);
        let t = 0.37;
        let diff = hamiltonian_h1(&drive, &s, t).unwrap() - hamiltonian_h2(&drive, &s, t).unwrap();
        // Independent assembly of the fast terms via embed.
        let a = embed(&annihilation(4).unwrap(), Site::Cavity, &s).unwrap();
        let mut fast = ComplexMatrix::zeros(s.dim(), s.dim());
        for j in 0..2 {
            let pm = embed(&plus_minus(), Site::Qubit(j), &s).unwrap();
            let c = C64::from_polar(1.0, 4.0 * t + drive.phis[j]);
            let w = C64::from_polar(1.0, 30.0 * t);
            let term = &a * &(pm.scale(w) - pm.dagger().scale(w.conj()));
            fast += &term.scale(c);
        }
        let fast = &fast + &fast.dagger();
        assert!(diff.max_abs_diff(&fast) < 1e-12);
    }

    #[test]
    fn h1_force_part_at_origin() {
        let s = space(1, 5);
        let drive = DriveParams::uniform(1, 4.0, 40.0);
        let a = annihilation(5).unwrap();
        let force = kron(&pauli_x(), &(&a + &creation(5).unwrap()));
        let h2 = hamiltonian_h2(&drive, &s, 0.0).unwrap();
        assert!(h2.max_abs_diff(&force) < 1e-15);
    }

    #[test]
    fn h2_reduces_to_position_and_momentum_forces() {
        let d = 6;
        let s = space(1, d);
        let drive = DriveParams::uniform(1, 4.0, 0.0);
        let x = kron(&pauli_x(), &quadrature_x(d).unwrap());
        let p = kron(&pauli_x(), &quadrature_p(d).unwrap());
        let h0 = hamiltonian_h2(&drive, &s, 0.0).unwrap();
        assert!(h0.max_abs_diff(&x.scale_real(SQRT_2)) < 1e-14);
        let hq = hamiltonian_h2(&drive, &s, FRAC_PI_2 / 4.0).unwrap();
        assert!(hq.max_abs_diff(&p.scale_real(-SQRT_2)) < 1e-14);
    }

    #[test]
    fn h2_phase_shift_by_pi_flips_sign() {
        let s = space(2, 4);
        let drive = DriveParams::uniform(2, 4.0, 0.0).with_phis(vec![0.3, 1.1]);
        let shifted = drive.clone().with_phis(vec![0.3 + PI, 1.1 + PI]);
        let t = 0.81;
        let h = hamiltonian_h2(&drive, &s, t).unwrap();
        let hs = hamiltonian_h2(&shifted, &s, t).unwrap();
        assert!((h + hs).max_abs() < 1e-13);
    }

    #[test]
    fn builders_reject_mismatched_register() {
        let drive = DriveParams::uniform(3, 4.0, 0.0);
        assert!(hamiltonian_h2(&drive, &space(2, 4), 0.0).is_err());
        assert!(hamiltonian_h2(&DriveParams::uniform(2, 4.0, 0.0), &space(2, 4), -1.0).is_err());
        let mut bad = DriveParams::uniform(2, 4.0, 0.0);
        bad.phis.pop();
        assert!(hamiltonian_h1(&bad, &space(2, 4), 0.0).is_err());
    }

    #[test]
    fn trajectory_landmarks() {
        let delta = 4.0;
        let tr = trajectory(1.0, delta, &[TAU / delta, PI / delta, PI / (2.0 * delta)]).unwrap();
        assert!(tr.xs[0].abs() < 1e-15 && tr.ps[0].abs() < 1e-15);
        assert!((tr.xs[1] - 2.0 * SQRT_2 / 4.0).abs() < 1e-15 && tr.ps[1].abs() < 1e-15);
        assert!((tr.xs[2] - SQRT_2 / 4.0).abs() < 1e-15 && (tr.ps[2] - SQRT_2 / 4.0).abs() < 1e-15);
        assert!(trajectory(1.0, 0.0, &[0.0]).is_err());
        let m = tr.mirrored();
        assert_eq!(m.xs[1], -tr.xs[1]);
    }

    #[test]
    fn pair_hamiltonian_switching() {
        let xx = kron(&pauli_x(), &pauli_x());
        assert!(effective_pair_hamiltonian(0.5, FRAC_PI_2).max_abs() < 1e-16);
        assert!(effective_pair_hamiltonian(0.5, 0.0).max_abs_diff(&xx.scale_real(0.5)) < 1e-16);
        assert!(effective_pair_hamiltonian(0.5, PI).max_abs_diff(&xx.scale_real(-0.5)) < 1e-16);
    }

    #[test]
    fn all_to_all_small_cases() {
        let r2 = HilbertSpace::qubits_only(2).unwrap();
        let h = effective_all_to_all(0.7, &[0.4, 1.3], &r2).unwrap();
        assert!(h.max_abs_diff(&effective_pair_hamiltonian(0.7, 0.4 - 1.3)) < 1e-15);

        let r3 = HilbertSpace::qubits_only(3).unwrap();
        let sum = (&(&xx(&r3, 0, 1).unwrap() + &xx(&r3, 0, 2).unwrap()) + &xx(&r3, 1, 2).unwrap()).scale_real(0.7);
        let h = effective_all_to_all(0.7, &[0.9, 0.9, 0.9], &r3).unwrap();
        assert!(h.max_abs_diff(&sum) < 1e-15);

        // cos(−π/2) = 0, cos(−π) = −1, cos(−π/2) = 0.
        let h = effective_all_to_all(0.7, &[0.0, FRAC_PI_2, PI], &r3).unwrap();
        assert!(h.max_abs_diff(&xx(&r3, 0, 2).unwrap().scale_real(-0.7)) < 1e-15);

        assert!(effective_all_to_all(0.7, &[0.0], &HilbertSpace::qubits_only(1).unwrap()).is_err());
        assert!(effective_all_to_all(0.7, &[0.0, 0.0], &HilbertSpace::new(2, 2).unwrap()).is_err());
    }

    #[test]
    fn chain_small_cases() {
        let h2 = effective_chain(0.3, &[0.2, 0.5], 2).unwrap();
        assert!(h2.max_abs_diff(&effective_pair_hamiltonian(0.3, -0.3)) < 1e-15);

        let r3 = HilbertSpace::qubits_only(3).unwrap();
        let h3 = effective_chain(1.0, &[0.0, 0.0, 0.0], 3).unwrap();
        // Coefficient of σ₁^xσ₃^x: tr(H · X₁X₃)/8.
        let c13 = crate::state::expectation(&h3, &xx(&r3, 0, 2).unwrap()).unwrap() / 8.0;
        assert_eq!(c13.norm(), 0.0);

        let r4 = HilbertSpace::qubits_only(4).unwrap();
        let h4 = effective_chain(0.6, &[0.0, PI, 0.0, PI], 4).unwrap();
        let mut expected = ComplexMatrix::zeros(16, 16);
        for j in 0..3 {
            expected.axpy(C64::new(-0.6, 0.0), &xx(&r4, j, j + 1).unwrap());
        }
        assert!(h4.max_abs_diff(&expected) < 1e-15);
        assert!(effective_chain(0.6, &[0.0], 1).is_err());
    }

    #[test]
    fn gate_identity_and_bell_action() {
        assert!(gate_unitary(0.0, 3).unwrap().max_abs_diff(&ComplexMatrix::identity(8)) < 1e-14);
        let psi = gate_unitary(PI / 4.0, 2).unwrap().apply(&Ket::basis(4, 0)).unwrap();
        // exp(−i(π/4)XX)|00⟩ = (|00⟩ − i|11⟩)/√2, computed from (XX)² = I.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = Ket::new(vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -h)]);
        assert!((psi.inner(&expected).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gate_two_qubit_equals_pair_exponential_up_to_phase() {
        let theta = 0.37;
        let u13 = gate_unitary(theta, 2).unwrap();
        let u8 = matexp(&kron(&pauli_x(), &pauli_x()).scale(-I * theta)).unwrap();
        assert!(crate::linalg::phase_aligned_distance(&u8, &u13).unwrap() < 1e-13);
        // The phase is e^{−iθ}, from the identity part of (Σσ^x)² = 2 + 2XX.
        assert!(u13.max_abs_diff(&u8.scale(C64::from_polar(1.0, -theta))) < 1e-13);
    }

    #[test]
    fn four_qubit_gate_makes_ghz() {
        let psi = ghz_target(4).unwrap();
        assert!((psi[0].norm_sqr() - 0.5).abs() < 1e-13);
        assert!((psi[15].norm_sqr() - 0.5).abs() < 1e-13);
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        assert!(ghz_target(1).is_err());
    }

    #[test]
    fn bell_target_properties() {
        let b = bell_target();
        assert!((b.norm() - 1.0).abs() < 1e-14);
        assert!((b[0].norm_sqr() - 0.5).abs() < 1e-14);
        assert!((b[3].norm_sqr() - 0.5).abs() < 1e-14);
        assert!(b[1].norm() < 1e-14 && b[2].norm() < 1e-14);
        assert!((ghz_target(2).unwrap().inner(&b).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn theta_schedule() {
        for n in 1..=4u32 {
            let d = quarter_turn_detuning(1.0, n);
            assert!((theta_of_schedule(1.0, d, n, 0.0).unwrap() - PI / 4.0).abs() < 1e-14);
        }
        assert!(theta_of_schedule(1.0, 4.0, 1, FRAC_PI_2).unwrap().abs() < 1e-15);
        assert!((theta_of_schedule(1.0, 4.0, 2, 0.0).unwrap() - FRAC_PI_2).abs() < 1e-14);
        assert!(theta_of_schedule(1.0, 0.0, 1, 0.0).is_err());
        assert!(theta_of_schedule(1.0, 4.0, 0, 0.0).is_err());
    }
}
