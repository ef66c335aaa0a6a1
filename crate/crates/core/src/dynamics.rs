// SPDX-License-Identifier: Apache-2.0

//! Time propagation: Lindblad master equation with fixed-step RK4, and
//! unitary propagation by midpoint-rule exponentials.
//!
//! The master equation is
//! `ρ̇ = −i[H(t), ρ] + (κ/2)L(a) + Σ_j [(γ₁/2)L(σ_j⁻) + (γ₂/2)L(σ_j^z)]`
//! with `L(A) = 2AρA† − A†Aρ − ρA†A`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{QsimError, Result};
use crate::linalg::{
    eigh, min_eigenvalue_hermitian, unitary_step, unitary_step_apply, ComplexMatrix, Csr, Ket, C64, I,
};
use crate::space::{annihilation, embed, pauli_z, sigma_minus, HilbertSpace, Site};
use crate::state::{trace_out_cavity, QuantumState};

/// Abort threshold on `|tr ρ − 1|`.
pub const TRACE_DRIFT_TOL: f64 = 1e-6;
/// Abort threshold on `|‖ψ‖ − 1|` for unitary propagation.
pub const NORM_DRIFT_TOL: f64 = 1e-8;
/// Samples required per period of the fastest frequency.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 100.0;
/// Samples per period used for the default step.
pub const DEFAULT_SAMPLES_PER_PERIOD: f64 = 200.0;

/// A Hamiltonian evaluated on demand.
pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `H(t)` into `out`, which is `dim × dim`.
    fn write_at(&self, t: f64, out: &mut ComplexMatrix);

    /// Largest angular frequency present, used to bound the step size.
    fn max_frequency(&self) -> f64;

    fn at(&self, t: f64) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim(), self.dim());
        self.write_at(t, &mut out);
        out
    }
}

impl<T: Hamiltonian + ?Sized> Hamiltonian for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn write_at(&self, t: f64, out: &mut ComplexMatrix) {
        (**self).write_at(t, out)
    }
    fn max_frequency(&self) -> f64 {
        (**self).max_frequency()
    }
}

/// Time-independent Hamiltonian. Its frequency scale is the spectral width.
#[derive(Clone, Debug)]
pub struct StaticHamiltonian {
    h: ComplexMatrix,
    width: f64,
}

impl StaticHamiltonian {
    pub fn new(h: ComplexMatrix) -> Result<Self> {
        let herm = h.hermiticity_error();
        if herm > 1e-12 {
            return Err(QsimError::InvalidArgument(format!("Hamiltonian is not Hermitian (error {herm:.3e})")));
        }
        let (w, _) = eigh(&h)?;
        let width = w.last().unwrap_or(&0.0) - w.first().unwrap_or(&0.0);
        Ok(Self { h, width })
    }

    pub fn zero(dim: usize) -> Self {
        Self { h: ComplexMatrix::zeros(dim, dim), width: 0.0 }
    }
}

impl Hamiltonian for StaticHamiltonian {
    fn dim(&self) -> usize {
        self.h.rows()
    }
    fn write_at(&self, _t: f64, out: &mut ComplexMatrix) {
        out.as_mut_slice().copy_from_slice(self.h.as_slice());
    }
    fn max_frequency(&self) -> f64 {
        self.width
    }
}

/// Decay rates in units of η.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoherenceRates {
    pub kappa: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl DecoherenceRates {
    pub fn new(kappa: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("gamma1", gamma1), ("gamma2", gamma2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(QsimError::InvalidArgument(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(Self { kappa, gamma1, gamma2 })
    }

    pub fn zero() -> Self {
        Self { kappa: 0.0, gamma1: 0.0, gamma2: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.kappa == 0.0 && self.gamma1 == 0.0 && self.gamma2 == 0.0
    }
}

/// Fixed-step integration grid.
///
/// `dt` is shrunk (never grown) from the requested value so that an integer
/// number of steps lands exactly on `t_end`. Records are taken at step 0,
/// every `record_stride` steps, and at the final step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    dt: f64,
    t_end: f64,
    steps: usize,
    record_stride: usize,
    positivity_every: usize,
}

impl IntegratorConfig {
    /// Checks `dt ≤ 2π/(100 f_max)` against the supplied frequency scale.
    pub fn new(dt: f64, t_end: f64, record_stride: usize, max_frequency: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(QsimError::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !(t_end >= dt) || !t_end.is_finite() {
            return Err(QsimError::InvalidArgument(format!("t_end = {t_end} must be at least dt = {dt}")));
        }
        if record_stride == 0 {
            return Err(QsimError::InvalidArgument("record_stride must be positive".into()));
        }
        let steps = (t_end / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = t_end / steps as f64;
        if max_frequency > 0.0 && dt > TAU / (MIN_SAMPLES_PER_PERIOD * max_frequency) {
            return Err(QsimError::InvalidArgument(format!(
                "dt = {dt:.4e} does not resolve frequency {max_frequency} (limit {:.4e})",
                TAU / (MIN_SAMPLES_PER_PERIOD * max_frequency)
            )));
        }
        Ok(Self { dt, t_end, steps, record_stride, positivity_every: 10 })
    }

    /// Exactly `steps` steps over `[0, t_end]`.
    pub fn with_steps(t_end: f64, steps: usize, record_stride: usize, max_frequency: f64) -> Result<Self> {
        if steps == 0 {
            return Err(QsimError::InvalidArgument("steps must be positive".into()));
        }
        Self::new(t_end / steps as f64, t_end, record_stride, max_frequency)
    }

    /// `2π/(200 f_max)`, or `t_end/200` when nothing oscillates.
    pub fn default_dt(max_frequency: f64, t_end: f64) -> f64 {
        if max_frequency > 0.0 {
            TAU / (DEFAULT_SAMPLES_PER_PERIOD * max_frequency)
        } else {
            t_end / DEFAULT_SAMPLES_PER_PERIOD
        }
    }

    /// Spot-check positivity every `n` records (0 disables).
    pub fn with_positivity_every(mut self, n: usize) -> Self {
        self.positivity_every = n;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn record_stride(&self) -> usize {
        self.record_stride
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn is_record_step(&self, step: usize) -> bool {
        step.is_multiple_of(self.record_stride) || step == self.steps
    }

    pub fn record_count(&self) -> usize {
        self.steps / self.record_stride + 1 + usize::from(!self.steps.is_multiple_of(self.record_stride))
    }
}

/// Time series recorded by [`evolve_lindblad`].
#[derive(Clone, Debug, Default)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub fidelities: Vec<f64>,
    pub traces: Vec<f64>,
    pub purities: Vec<f64>,
    /// Real parts of `tr(ρ O)` for each named observable.
    pub observables: BTreeMap<String, Vec<f64>>,
    /// `(time, λ_min(ρ))` at spot-checked records.
    pub min_eigenvalues: Vec<(f64, f64)>,
    /// Largest `|ρ − ρ†|` seen before re-symmetrization.
    pub max_hermiticity_error: f64,
    pub final_rho: Option<ComplexMatrix>,
}

impl EvolutionResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.traces.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_recorded_eigenvalue(&self) -> Option<f64> {
        self.min_eigenvalues.iter().map(|&(_, v)| v).reduce(f64::min)
    }
}

/// Jump term `Σ rate · L ρ L†`, grouped by operator structure.
enum JumpKernel {
    /// Diagonal operators merged into one elementwise weight:
    /// `Σ_k rate_k l_k[r] conj(l_k[c]) ρ[r, c]`.
    Diagonal {
        weights: Vec<C64>,
    },
    /// At most one non-zero per row, `L[r, src] = coef`; `active` lists the
    /// non-empty rows as `(r, src, coef)`. Then
    /// `(LρL†)[r, c] = coef_r conj(coef_c) ρ[src_r, src_c]`.
    Monomial {
        rate: f64,
        active: Vec<(usize, usize, C64)>,
    },
    General {
        rate: f64,
        op: Csr,
    },
}

/// Sorts collapse operators into the cheapest kernels that represent them.
fn build_kernels(ops: &[(f64, ComplexMatrix)], n: usize) -> Vec<JumpKernel> {
    let mut kernels = Vec::new();
    let mut diagonal: Option<Vec<C64>> = None;
    for (rate, op) in ops {
        let entries = op.nonzero_entries();
        let mut seen = vec![false; n];
        let monomial = entries.iter().all(|&(r, _, _)| !std::mem::replace(&mut seen[r], true));
        if !monomial {
            kernels.push(JumpKernel::General { rate: *rate, op: Csr::from_dense(op) });
        } else if entries.iter().all(|&(r, c, _)| r == c) {
            let mut diag = vec![C64::new(0.0, 0.0); n];
            for &(r, _, v) in &entries {
                diag[r] = v;
            }
            let w = diagonal.get_or_insert_with(|| vec![C64::new(0.0, 0.0); n * n]);
            for r in 0..n {
                for c in 0..n {
                    w[r * n + c] += diag[r] * diag[c].conj() * *rate;
                }
            }
        } else {
            kernels.push(JumpKernel::Monomial { rate: *rate, active: entries });
        }
    }
    if let Some(weights) = diagonal {
        kernels.push(JumpKernel::Diagonal { weights });
    }
    kernels
}

impl JumpKernel {
    fn accumulate(&self, rho: &ComplexMatrix, out: &mut ComplexMatrix, work: &mut Workspace) {
        let n = rho.rows();
        match self {
            JumpKernel::Diagonal { weights } => {
                for ((o, &r), &w) in out.as_mut_slice().iter_mut().zip(rho.as_slice()).zip(weights) {
                    *o += w * r;
                }
            }
            JumpKernel::Monomial { rate, active } => {
                let r_in = rho.as_slice();
                let o = out.as_mut_slice();
                for &(r, sr, cr) in active {
                    let w = cr * *rate;
                    let in_row = &r_in[sr * n..(sr + 1) * n];
                    let out_row = &mut o[r * n..(r + 1) * n];
                    for &(c, sc, cc) in active {
                        out_row[c] += w * cc.conj() * in_row[sc];
                    }
                }
            }
            JumpKernel::General { rate, op } => {
                op.mul_dense_into(rho, &mut work.a);
                dagger_into(&work.a, &mut work.b);
                op.mul_dense_into(&work.b, &mut work.a);
                out.axpy(C64::new(*rate, 0.0), &work.a);
            }
        }
    }
}

/// Lindblad propagation for one Hamiltonian and set of decay channels.
pub struct LindbladSolver<H: Hamiltonian> {
    h: H,
    space: HilbertSpace,
    collapses: Vec<JumpKernel>,
    /// `Σ_k rate_k L_k† L_k`.
    decay_generator: ComplexMatrix,
    observables: Vec<(String, ComplexMatrix)>,
}

impl<H: Hamiltonian> LindbladSolver<H> {
    pub fn new(h: H, space: HilbertSpace, rates: DecoherenceRates) -> Result<Self> {
        if h.dim() != space.dim() {
            return Err(QsimError::DimensionMismatch {
                context: "Hamiltonian vs space",
                expected: space.dim(),
                found: h.dim(),
            });
        }
        let mut dense_ops = Vec::new();
        if rates.kappa > 0.0 && space.cavity_dim() >= 2 {
            dense_ops.push((rates.kappa, embed(&annihilation(space.cavity_dim())?, Site::Cavity, &space)?));
        }
        for j in 0..space.n_qubits() {
            if rates.gamma1 > 0.0 {
                dense_ops.push((rates.gamma1, embed(&sigma_minus(), Site::Qubit(j), &space)?));
            }
            if rates.gamma2 > 0.0 {
                dense_ops.push((rates.gamma2, embed(&pauli_z(), Site::Qubit(j), &space)?));
            }
        }
        let n = space.dim();
        let mut decay_generator = ComplexMatrix::zeros(n, n);
        for (rate, op) in &dense_ops {
            decay_generator.axpy(C64::new(*rate, 0.0), &(&op.dagger() * op));
        }
        let collapses = build_kernels(&dense_ops, n);
        Ok(Self { h, space, collapses, decay_generator, observables: Vec::new() })
    }

    /// Records the real part of `tr(ρ op)` alongside the fidelity.
    pub fn observe(mut self, name: impl Into<String>, op: ComplexMatrix) -> Result<Self> {
        if op.rows() != self.space.dim() || !op.is_square() {
            return Err(QsimError::DimensionMismatch {
                context: "observable",
                expected: self.space.dim(),
                found: op.rows(),
            });
        }
        self.observables.push((name.into(), op));
        Ok(self)
    }

    /// `H_eff = H(t) − (i/2) Σ rate L†L` in sparse form.
    fn effective_generator(&self, t: f64, dense: &mut ComplexMatrix, csr: &mut Csr) {
        self.h.write_at(t, dense);
        dense.axpy(C64::new(0.0, -0.5), &self.decay_generator);
        csr.refill(dense);
    }

    /// `out = −i H_eff ρ + (−i H_eff ρ)† + Σ rate L ρ L†`, valid for Hermitian `ρ`.
    fn rhs(&self, heff: &Csr, rho: &ComplexMatrix, out: &mut ComplexMatrix, work: &mut Workspace) {
        let n = rho.rows();
        heff.mul_dense_into(rho, &mut work.a);
        {
            let y = work.a.as_slice();
            let o = out.as_mut_slice();
            // −i·y[r,c] + conj(−i·y[c,r]), tiled for the transposed read.
            const TILE: usize = 32;
            for r0 in (0..n).step_by(TILE) {
                for c0 in (0..n).step_by(TILE) {
                    for r in r0..(r0 + TILE).min(n) {
                        for c in c0..(c0 + TILE).min(n) {
                            o[r * n + c] = -I * y[r * n + c] + I * y[c * n + r].conj();
                        }
                    }
                }
            }
        }
        for col in &self.collapses {
            col.accumulate(rho, out, work);
        }
    }

    /// Integrates from `initial`, recording `⟨target|ρ_q|target⟩`.
    pub fn run(&self, initial: &QuantumState, target: &Ket, cfg: &IntegratorConfig) -> Result<EvolutionResult> {
        if *initial.space() != self.space {
            return Err(QsimError::DimensionMismatch {
                context: "initial state space",
                expected: self.space.dim(),
                found: initial.space().dim(),
            });
        }
        if target.dim() != self.space.qubit_dim() {
            return Err(QsimError::DimensionMismatch {
                context: "fidelity target",
                expected: self.space.qubit_dim(),
                found: target.dim(),
            });
        }
        if self.h.max_frequency() > 0.0 && cfg.dt() > TAU / (MIN_SAMPLES_PER_PERIOD * self.h.max_frequency()) {
            return Err(QsimError::InvalidArgument(format!(
                "dt = {:.4e} does not resolve the Hamiltonian frequency {}",
                cfg.dt(),
                self.h.max_frequency()
            )));
        }
        let n = self.space.dim();
        let dt = cfg.dt();
        let mut rho = initial.rho().clone();
        let mut work = Workspace::new(n);
        let mut h_dense = ComplexMatrix::zeros(n, n);
        let mut heff_start = Csr::from_dense(&h_dense);
        let mut heff_mid = heff_start.clone();
        let mut heff_end = heff_start.clone();
        let (mut k1, mut k2, mut k3, mut k4) = (
            ComplexMatrix::zeros(n, n),
            ComplexMatrix::zeros(n, n),
            ComplexMatrix::zeros(n, n),
            ComplexMatrix::zeros(n, n),
        );
        let mut stage = ComplexMatrix::zeros(n, n);

        let mut result = EvolutionResult {
            observables: self
                .observables
                .iter()
                .map(|(k, _)| (k.clone(), Vec::with_capacity(cfg.record_count())))
                .collect(),
            ..Default::default()
        };
        self.record(&rho, target, cfg, 0, &mut result)?;

        self.effective_generator(0.0, &mut h_dense, &mut heff_start);
        for step in 0..cfg.steps() {
            let t = cfg.time(step);
            self.effective_generator(t + 0.5 * dt, &mut h_dense, &mut heff_mid);
            self.effective_generator(cfg.time(step + 1), &mut h_dense, &mut heff_end);

            self.rhs(&heff_start, &rho, &mut k1, &mut work);
            combine(&mut stage, &rho, 0.5 * dt, &k1);
            self.rhs(&heff_mid, &stage, &mut k2, &mut work);
            combine(&mut stage, &rho, 0.5 * dt, &k2);
            self.rhs(&heff_mid, &stage, &mut k3, &mut work);
            combine(&mut stage, &rho, dt, &k3);
            self.rhs(&heff_end, &stage, &mut k4, &mut work);
            std::mem::swap(&mut heff_start, &mut heff_end);

            {
                let r = rho.as_mut_slice();
                let (a, b, c, d) = (k1.as_slice(), k2.as_slice(), k3.as_slice(), k4.as_slice());
                let w = dt / 6.0;
                for i in 0..r.len() {
                    r[i] += (a[i] + (b[i] + c[i]) * 2.0 + d[i]) * w;
                }
            }
            result.max_hermiticity_error = result.max_hermiticity_error.max(rho.hermiticity_error());
            rho.symmetrize_hermitian();

            let done = step + 1;
            let t_new = cfg.time(done);
            if !rho.is_finite() {
                return Err(QsimError::NonFinite { time: t_new, step: done });
            }
            let drift = (rho.trace().re - 1.0).abs();
            if drift > TRACE_DRIFT_TOL {
                return Err(QsimError::TraceDrift { time: t_new, step: done, drift });
            }
            if cfg.is_record_step(done) {
                self.record(&rho, target, cfg, done, &mut result)?;
            }
        }
        result.final_rho = Some(rho);
        Ok(result)
    }

    fn record(
        &self,
        rho: &ComplexMatrix,
        target: &Ket,
        cfg: &IntegratorConfig,
        step: usize,
        out: &mut EvolutionResult,
    ) -> Result<()> {
        let t = cfg.time(step);
        let rho_q = trace_out_cavity(rho, &self.space)?;
        out.times.push(t);
        out.fidelities.push(fidelity(&rho_q, target)?);
        out.traces.push(rho.trace().re);
        // tr(ρ²) = Σ|ρ_ij|² for Hermitian ρ.
        out.purities.push(rho.as_slice().iter().map(|z| z.norm_sqr()).sum());
        for (name, op) in &self.observables {
            let v = crate::state::expectation(rho, op)?.re;
            out.observables.get_mut(name).expect("registered").push(v);
        }
        let index = out.times.len() - 1;
        if cfg.positivity_every > 0 && (index.is_multiple_of(cfg.positivity_every) || step == cfg.steps()) {
            out.min_eigenvalues.push((t, min_eigenvalue_hermitian(rho)?));
        }
        Ok(())
    }
}

struct Workspace {
    a: ComplexMatrix,
    b: ComplexMatrix,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self { a: ComplexMatrix::zeros(n, n), b: ComplexMatrix::zeros(n, n) }
    }
}

fn dagger_into(src: &ComplexMatrix, dst: &mut ComplexMatrix) {
    let n = src.rows();
    let s = src.as_slice();
    let d = dst.as_mut_slice();
    for r in 0..n {
        for c in 0..n {
            d[c * n + r] = s[r * n + c].conj();
        }
    }
}

/// `out = base + h * k`.
fn combine(out: &mut ComplexMatrix, base: &ComplexMatrix, h: f64, k: &ComplexMatrix) {
    for ((o, &b), &kk) in out.as_mut_slice().iter_mut().zip(base.as_slice()).zip(k.as_slice()) {
        *o = b + kk * h;
    }
}

/// Integrates the master equation with decay channels set by `rates` and
/// records the fidelity of the reduced qubit state against `target`.
pub fn evolve_lindblad<H: Hamiltonian>(
    h: H,
    rates: DecoherenceRates,
    initial: &QuantumState,
    target: &Ket,
    cfg: &IntegratorConfig,
) -> Result<EvolutionResult> {
    LindbladSolver::new(h, *initial.space(), rates)?.run(initial, target, cfg)
}

/// Output of [`UnitaryPropagator::run`].
#[derive(Clone, Debug)]
pub struct UnitaryEvolution {
    pub state: Ket,
    pub propagator: Option<ComplexMatrix>,
    pub times: Vec<f64>,
    pub observables: BTreeMap<String, Vec<f64>>,
}

/// Midpoint-rule propagation `ψ ← exp(−i H(t + dt/2) dt) ψ`.
pub struct UnitaryPropagator<H: Hamiltonian> {
    h: H,
    track_propagator: bool,
    observables: Vec<(String, ComplexMatrix)>,
}

impl<H: Hamiltonian> UnitaryPropagator<H> {
    pub fn new(h: H) -> Self {
        Self { h, track_propagator: false, observables: Vec::new() }
    }

    pub fn track_propagator(mut self, on: bool) -> Self {
        self.track_propagator = on;
        self
    }

    pub fn observe(mut self, name: impl Into<String>, op: ComplexMatrix) -> Result<Self> {
        if op.rows() != self.h.dim() || !op.is_square() {
            return Err(QsimError::DimensionMismatch {
                context: "observable",
                expected: self.h.dim(),
                found: op.rows(),
            });
        }
        self.observables.push((name.into(), op));
        Ok(self)
    }

    pub fn run(&self, initial: &Ket, cfg: &IntegratorConfig) -> Result<UnitaryEvolution> {
        let n = self.h.dim();
        if initial.dim() != n {
            return Err(QsimError::DimensionMismatch { context: "initial state", expected: n, found: initial.dim() });
        }
        let norm0 = initial.norm();
        if (norm0 - 1.0).abs() > NORM_DRIFT_TOL {
            return Err(QsimError::InvalidArgument(format!("initial state norm is {norm0}, expected 1")));
        }
        let mut psi = initial.clone();
        let mut propagator = self.track_propagator.then(|| ComplexMatrix::identity(n));
        let mut out = UnitaryEvolution {
            state: psi.clone(),
            propagator: None,
            times: Vec::with_capacity(cfg.record_count()),
            observables: self.observables.iter().map(|(k, _)| (k.clone(), Vec::new())).collect(),
        };
        self.record(&psi, 0.0, &mut out);
        let mut h = ComplexMatrix::zeros(n, n);
        for step in 0..cfg.steps() {
            self.h.write_at(cfg.time(step) + 0.5 * cfg.dt(), &mut h);
            match propagator.as_mut() {
                Some(p) => {
                    let u = unitary_step(&h, cfg.dt())?;
                    psi = u.apply(&psi)?;
                    *p = &u * p;
                }
                None if h.one_norm() * cfg.dt() <= 0.5 => psi = unitary_step_apply(&h, cfg.dt(), &psi)?,
                None => psi = unitary_step(&h, cfg.dt())?.apply(&psi)?,
            }
            let done = step + 1;
            let drift = (psi.norm() - 1.0).abs();
            if !drift.is_finite() {
                return Err(QsimError::NonFinite { time: cfg.time(done), step: done });
            }
            if drift > NORM_DRIFT_TOL {
                return Err(QsimError::NormDrift { time: cfg.time(done), step: done, drift });
            }
            if cfg.is_record_step(done) {
                self.record(&psi, cfg.time(done), &mut out);
            }
        }
        if let Some(p) = &propagator {
            let err = p.unitarity_error();
            if err > NORM_DRIFT_TOL {
                return Err(QsimError::NormDrift { time: cfg.t_end(), step: cfg.steps(), drift: err });
            }
        }
        out.state = psi;
        out.propagator = propagator;
        Ok(out)
    }

    fn record(&self, psi: &Ket, t: f64, out: &mut UnitaryEvolution) {
        out.times.push(t);
        for (name, op) in &self.observables {
            let v = psi.inner(&op.apply(psi).expect("checked")).re;
            out.observables.get_mut(name).expect("registered").push(v);
        }
    }
}

/// Final state and accumulated propagator of a closed-system run.
pub fn evolve_unitary<H: Hamiltonian>(h: H, initial: &Ket, cfg: &IntegratorConfig) -> Result<(Ket, ComplexMatrix)> {
    let run = UnitaryPropagator::new(h).track_propagator(true).run(initial, cfg)?;
    Ok((run.state, run.propagator.expect("tracked")))
}

/// `⟨target|ρ_q|target⟩`.
pub fn fidelity(rho_q: &ComplexMatrix, target: &Ket) -> Result<f64> {
    if rho_q.rows() != target.dim() || !rho_q.is_square() {
        return Err(QsimError::DimensionMismatch { context: "fidelity", expected: rho_q.rows(), found: target.dim() });
    }
    let value = target.inner(&rho_q.apply(target)?);
    if value.im.abs() > 1e-10 {
        return Err(QsimError::InvalidState(format!("fidelity has imaginary part {:.3e}", value.im)));
    }
    Ok(value.re)
}

/// Time and value of the largest recorded fidelity; ties go to the earliest.
pub fn max_fidelity(result: &EvolutionResult) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (&t, &f) in result.times.iter().zip(&result.fidelities) {
        if best.is_none_or(|(_, b)| f > b) {
            best = Some((t, f));
        }
    }
    best.ok_or_else(|| QsimError::InvalidArgument("empty evolution result".into()))
}
