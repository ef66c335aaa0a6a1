// SPDX-License-Identifier: Apache-2.0

use fluxqed::dynamics::{evolve_unitary, IntegratorConfig};
use fluxqed::linalg::phase_aligned_distance;
use fluxqed::model::{
    effective_pair_hamiltonian, gate_time, gate_unitary, hamiltonian_h1, hamiltonian_h2, theta_of_schedule,
    DriveParams, DrivenCavity, Frame,
};
use fluxqed::space::{annihilation, pauli_x, pauli_y, pauli_z};
use fluxqed::state::trace_out_cavity;
use fluxqed::{embed, kron, matexp, ComplexMatrix, HilbertSpace, Ket, Site, C64};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(), rows * cols).prop_map(move |v| ComplexMatrix::from_vec(rows, cols, v).unwrap())
}

fn square(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n, n)
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    square(n).prop_map(|a| (&a + &a.dagger()).scale_real(0.5))
}

fn space() -> impl Strategy<Value = HilbertSpace> {
    (0usize..3, 2usize..4).prop_map(|(n, d)| HilbertSpace::new(n, d).unwrap())
}

fn drive(n: usize) -> impl Strategy<Value = DriveParams> {
    (prop::collection::vec(0.1..2.0f64, n), prop::collection::vec(-PI..PI, n), 1.0..8.0f64, 10.0..60.0f64)
        .prop_map(|(etas, phis, delta, omega)| DriveParams { etas, phis, delta, omega })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_is_associative(a in square(2), b in square(3), c in square(2)) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn kron_is_associative_rectangular(a in matrix(2, 3), b in matrix(3, 2), c in matrix(2, 2)) {
        prop_assert!(kron(&kron(&a, &b), &c).max_abs_diff(&kron(&a, &kron(&b, &c))) < 1e-12);
    }

    #[test]
    fn hermitian_exponential_is_unitary(h in (1usize..7).prop_flat_map(hermitian), t in -5.0..5.0f64) {
        let norm = h.one_norm();
        prop_assume!(norm * t.abs() <= 50.0);
        let u = matexp(&h.scale(C64::new(0.0, -t))).unwrap();
        prop_assert!(u.is_unitary(1e-10), "unitarity error {}", u.unitarity_error());
    }

    #[test]
    fn partial_trace_preserves_trace(
        (s, rho) in space().prop_flat_map(|s| (Just(s), square(s.dim())))
    ) {
        let reduced = trace_out_cavity(&rho, &s).unwrap();
        prop_assert!((reduced.trace() - rho.trace()).norm() < 1e-10);
    }

    #[test]
    fn partial_trace_is_linear(
        (s, r1, r2) in space().prop_flat_map(|s| (Just(s), square(s.dim()), square(s.dim()))),
        alpha in complex(),
        beta in complex(),
    ) {
        let mix = &r1.scale(alpha) + &r2.scale(beta);
        let lhs = trace_out_cavity(&mix, &s).unwrap();
        let rhs = &trace_out_cavity(&r1, &s).unwrap().scale(alpha) + &trace_out_cavity(&r2, &s).unwrap().scale(beta);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn embed_respects_products_on_a_qubit(
        (s, j) in (1usize..4, 1usize..4).prop_flat_map(|(n, d)| (Just(HilbertSpace::new(n, d).unwrap()), 0..n)),
        a in square(2),
        b in square(2),
    ) {
        let site = Site::Qubit(j);
        let lhs = embed(&(&a * &b), site, &s).unwrap();
        let rhs = &embed(&a, site, &s).unwrap() * &embed(&b, site, &s).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn embed_respects_products_on_the_cavity(
        (s, a, b) in (0usize..3, 2usize..4)
            .prop_flat_map(|(n, d)| (Just(HilbertSpace::new(n, d).unwrap()), square(d), square(d))),
    ) {
        let lhs = embed(&(&a * &b), Site::Cavity, &s).unwrap();
        let rhs = &embed(&a, Site::Cavity, &s).unwrap() * &embed(&b, Site::Cavity, &s).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn operators_on_different_sites_commute(a in square(2), c in square(3)) {
        let s = HilbertSpace::new(2, 3).unwrap();
        let qa = embed(&a, Site::Qubit(1), &s).unwrap();
        let cc = embed(&c, Site::Cavity, &s).unwrap();
        prop_assert!(qa.commutator(&cc).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn builders_are_hermitian(
        (n, d, p) in (1usize..3, 2usize..5).prop_flat_map(|(n, d)| (Just(n), Just(d), drive(n))),
        t in 0.0..10.0f64,
    ) {
        let s = HilbertSpace::new(n, d).unwrap();
        prop_assert!(hamiltonian_h1(&p, &s, t).unwrap().hermiticity_error() < 1e-12);
        prop_assert!(hamiltonian_h2(&p, &s, t).unwrap().hermiticity_error() < 1e-12);
    }

    #[test]
    fn strong_drive_phase_shift_is_time_shift(
        (n, p) in (1usize..3).prop_flat_map(|n| (Just(n), drive(n))),
        t in 0.0..5.0f64,
        c in 0.0..6.0f64,
    ) {
        let s = HilbertSpace::new(n, 3).unwrap();
        let shifted = DriveParams { phis: p.phis.iter().map(|x| x + c).collect(), ..p.clone() };
        let lhs = hamiltonian_h2(&shifted, &s, t).unwrap();
        let rhs = hamiltonian_h2(&p, &s, t + c / p.delta).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn gate_angles_add(n in 1usize..4, t1 in -3.0..3.0f64, t2 in -3.0..3.0f64) {
        let prod = &gate_unitary(t1, n).unwrap() * &gate_unitary(t2, n).unwrap();
        prop_assert!(prod.max_abs_diff(&gate_unitary(t1 + t2, n).unwrap()) < 1e-12);
    }

    #[test]
    fn pair_coupling_peaks_in_phase_and_vanishes_in_quadrature(lambda in 0.1..3.0f64, phi in -PI..PI) {
        let size = |p: f64| effective_pair_hamiltonian(lambda, p).frobenius_norm();
        let peak = size(0.0);
        prop_assert!(size(phi) <= peak + 1e-12);
        prop_assert!((size(PI) - peak).abs() < 1e-12);
        prop_assert!(size(FRAC_PI_2) < 1e-12);
    }
}

/// Columns of `m` whose input has the cavity in one of its lowest `k` levels.
fn low_fock_columns(m: &ComplexMatrix, s: &HilbertSpace, k: usize) -> ComplexMatrix {
    let cols: Vec<usize> = (0..s.dim()).filter(|i| i % s.cavity_dim() < k).collect();
    let mut out = ComplexMatrix::zeros(s.dim(), cols.len());
    for r in 0..s.dim() {
        for (b, &c) in cols.iter().enumerate() {
            out[(r, b)] = m[(r, c)];
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    // The propagator acts as `G ⊗ I` on every cavity state that the loop
    // keeps inside the truncation. Level 0 and, for N < 3, level 1 qualify.
    #[test]
    fn strong_drive_loop_is_the_geometric_gate(n in 1usize..4, extra_d in 0usize..5, delta in 4.0..6.0f64) {
        let d = 16 + extra_d;
        let k = if n < 3 { 2 } else { 1 };
        let s = HilbertSpace::new(n, d).unwrap();
        let h = DrivenCavity::new(DriveParams::uniform(n, delta, 0.0), s, Frame::StrongDrive).unwrap();
        let tau = gate_time(delta, 1);
        let cfg = IntegratorConfig::with_steps(tau, 400, 400, delta).unwrap();
        let (_, u) = evolve_unitary(&h, &Ket::basis(s.dim(), 0), &cfg).unwrap();
        let theta = theta_of_schedule(1.0, delta, 1, 0.0).unwrap();
        let g = kron(&gate_unitary(theta, n).unwrap(), &ComplexMatrix::identity(d));
        let dist = phase_aligned_distance(&low_fock_columns(&u, &s, k), &low_fock_columns(&g, &s, k)).unwrap();
        prop_assert!(dist < 1e-4, "distance {dist:.3e}");
    }
}

#[test]
fn pauli_algebra() {
    let i = C64::new(0.0, 1.0);
    let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
    assert!((&x * &y).max_abs_diff(&z.scale(i)) < 1e-15);
    assert!(x.commutator(&y).unwrap().max_abs_diff(&z.scale(2.0 * i)) < 1e-15);
    let a = annihilation(4).unwrap();
    assert!(a.dagger().dagger().max_abs_diff(&a) == 0.0);
}
