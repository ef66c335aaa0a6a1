// SPDX-License-Identifier: Apache-2.0

//! The experiments behind the `fluxqed` binary: Bell-state preparation, the
//! GHZ decay sweep, the cavity phase-space loop, and the strong-drive check.
//!
//! Every scenario returns a [`Table`] and writes it as CSV when
//! `output_path` is set. The first line of each file is a `#` comment holding
//! the resolved [`ScenarioSpec`] as `key=value` pairs; the second is the
//! column header. All times are in units of 1/η.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::{
    evolve_lindblad, max_fidelity, DecoherenceRates, EvolutionResult, Hamiltonian, IntegratorConfig, UnitaryPropagator,
};
use crate::error::{QsimError, Result};
use crate::linalg::{Ket, C64};
use crate::model::{
    bell_target, gate_time, ghz_target, theta_of_schedule, time_in_ns, trajectory, DriveParams, DrivenCavity, Frame,
    Trajectory,
};
use crate::space::{embed, quadrature_p, quadrature_x, HilbertSpace, Site};
use crate::state::{displaced_vacuum, fock, QuantumState};

/// Default sweep of `m = γ/κ`.
pub const DEFAULT_M_VALUES: [f64; 6] = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
/// Default drive strengths Ω/η for the strong-drive scan.
pub const DEFAULT_OMEGA_VALUES: [f64; 4] = [25.0, 50.0, 100.0, 200.0];
/// Minimum number of samples in the GHZ search window.
pub const GHZ_MIN_SAMPLES: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Bell,
    GhzSweep,
    Trajectory,
    RwaScan,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bell => "bell",
            Self::GhzSweep => "ghz-sweep",
            Self::Trajectory => "trajectory",
            Self::RwaScan => "rwa-scan",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Initial state of the cavity mode. The qubits always start in `|0…0⟩`
/// (or `|−⟩` for the trajectory).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CavityState {
    Vacuum,
    Fock(usize),
    /// Displaced vacuum `D(α)|0⟩`.
    Coherent(C64),
}

impl CavityState {
    pub fn ket(&self, d: usize) -> Result<Ket> {
        match *self {
            Self::Vacuum => fock(d, 0),
            Self::Fock(n) => fock(d, n),
            Self::Coherent(alpha) => displaced_vacuum(d, alpha),
        }
    }
}

impl fmt::Display for CavityState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Vacuum => f.write_str("vacuum"),
            Self::Fock(n) => write!(f, "fock:{n}"),
            Self::Coherent(a) if a.im == 0.0 => write!(f, "coherent:{:e}", a.re),
            Self::Coherent(a) => write!(f, "coherent:{:e}:{:e}", a.re, a.im),
        }
    }
}

/// Parses `vacuum`, `fock:N`, `coherent:RE` or `coherent:RE:IM`.
impl FromStr for CavityState {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || QsimError::InvalidArgument(format!("unrecognised cavity state '{s}'"));
        let mut parts = s.split(':');
        let state = match parts.next() {
            Some("vacuum") => Self::Vacuum,
            Some("fock") => Self::Fock(parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?),
            Some("coherent") => {
                let re: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let im: f64 = parts.next().map_or(Ok(0.0), str::parse).map_err(|_| bad())?;
                Self::Coherent(C64::new(re, im))
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(state)
    }
}

/// Resolved scenario parameters, all rates and frequencies in units of η.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_qubits: usize,
    pub delta_over_eta: f64,
    pub n_loops: u32,
    /// Per-qubit drive phases; empty means all zero.
    pub phis: Vec<f64>,
    pub kappa_over_eta: f64,
    /// Ignored by the GHZ sweep, which sets γ₁ = γ₂ = mκ.
    pub gamma1_over_eta: f64,
    pub gamma2_over_eta: f64,
    /// `None` picks 16 for up to two qubits and 24 above.
    pub cavity_dim: Option<usize>,
    pub dt_override: Option<f64>,
    pub record_stride: usize,
    pub cavity_state: CavityState,
    /// Trajectory only: add simulated `⟨x⟩, ⟨p⟩` columns.
    pub simulate: bool,
    /// Only used to add a nanosecond time column.
    pub eta_mhz: Option<f64>,
    pub output_path: Option<PathBuf>,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> Self {
        let n_qubits = match kind {
            ScenarioKind::Bell | ScenarioKind::RwaScan => 2,
            ScenarioKind::GhzSweep => 4,
            ScenarioKind::Trajectory => 1,
        };
        Self {
            kind,
            n_qubits,
            delta_over_eta: 4.0,
            n_loops: 1,
            phis: Vec::new(),
            kappa_over_eta: 1e-3,
            gamma1_over_eta: 1e-3,
            gamma2_over_eta: 1e-3,
            cavity_dim: None,
            dt_override: None,
            record_stride: 1,
            cavity_state: CavityState::Vacuum,
            simulate: true,
            eta_mhz: None,
            output_path: None,
        }
    }

    pub fn resolved_cavity_dim(&self) -> usize {
        self.cavity_dim.unwrap_or(if self.n_qubits <= 2 { 16 } else { 24 })
    }

    pub fn resolved_phis(&self) -> Vec<f64> {
        if self.phis.is_empty() {
            vec![0.0; self.n_qubits]
        } else {
            self.phis.clone()
        }
    }

    /// `τ_n = 2nπ/δ`.
    pub fn gate_time(&self) -> f64 {
        gate_time(self.delta_over_eta, self.n_loops)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(QsimError::InvalidArgument(msg));
        match self.kind {
            ScenarioKind::Bell if self.n_qubits != 2 => {
                return fail(format!("bell needs 2 qubits, got {}", self.n_qubits))
            }
            ScenarioKind::GhzSweep if self.n_qubits < 2 => {
                return fail(format!("ghz-sweep needs at least 2 qubits, got {}", self.n_qubits))
            }
            ScenarioKind::Trajectory if self.n_qubits != 1 => {
                return fail(format!("trajectory needs 1 qubit, got {}", self.n_qubits))
            }
            ScenarioKind::RwaScan if self.n_qubits == 0 => return fail("rwa-scan needs at least 1 qubit".into()),
            _ => {}
        }
        if self.kind == ScenarioKind::Trajectory && self.phis.iter().any(|&p| p != 0.0) {
            return fail("trajectory is defined for zero drive phase".into());
        }
        if !self.delta_over_eta.is_finite() || self.delta_over_eta == 0.0 {
            return fail(format!("delta must be finite and non-zero, got {}", self.delta_over_eta));
        }
        if self.n_loops == 0 {
            return fail("n_loops must be at least 1".into());
        }
        if !self.phis.is_empty() && self.phis.len() != self.n_qubits {
            return fail(format!("{} phases given for {} qubits", self.phis.len(), self.n_qubits));
        }
        if self.phis.iter().any(|p| !p.is_finite()) {
            return fail("phases must be finite".into());
        }
        for (name, rate) in
            [("kappa", self.kappa_over_eta), ("gamma1", self.gamma1_over_eta), ("gamma2", self.gamma2_over_eta)]
        {
            if !(rate >= 0.0) || !rate.is_finite() {
                return fail(format!("{name} must be a non-negative finite rate, got {rate}"));
            }
        }
        let d = self.resolved_cavity_dim();
        if d < 2 {
            return fail(format!("cavity dimension must be at least 2, got {d}"));
        }
        if let Some(dt) = self.dt_override {
            if !(dt > 0.0) || !dt.is_finite() {
                return fail(format!("dt must be positive, got {dt}"));
            }
        }
        if self.record_stride == 0 {
            return fail("record stride must be positive".into());
        }
        match self.cavity_state {
            CavityState::Fock(n) if n >= d => return fail(format!("Fock level {n} outside truncation {d}")),
            CavityState::Coherent(a) if !(a.re.is_finite() && a.im.is_finite()) => {
                return fail("coherent amplitude must be finite".into())
            }
            _ => {}
        }
        if let Some(eta) = self.eta_mhz {
            if !(eta > 0.0) || !eta.is_finite() {
                return fail(format!("eta_mhz must be positive, got {eta}"));
            }
        }
        HilbertSpace::new(self.n_qubits, d)?;
        Ok(())
    }

    fn expect_kind(&self, kind: ScenarioKind) -> Result<()> {
        if self.kind != kind {
            return Err(QsimError::InvalidArgument(format!("parameters are for {}, expected {kind}", self.kind)));
        }
        self.validate()
    }

    fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::new(self.n_qubits, self.resolved_cavity_dim())
    }

    fn drive(&self, omega: f64) -> DriveParams {
        DriveParams::uniform(self.n_qubits, self.delta_over_eta, omega).with_phis(self.resolved_phis())
    }

    fn rates(&self) -> Result<DecoherenceRates> {
        DecoherenceRates::new(self.kappa_over_eta, self.gamma1_over_eta, self.gamma2_over_eta)
    }

    /// `qubits ⊗ cavity`.
    fn initial_ket(&self, space: &HilbertSpace, qubits: &Ket) -> Result<Ket> {
        let cavity = self.cavity_state.ket(space.cavity_dim())?;
        debug_assert_eq!(qubits.dim(), space.qubit_dim());
        Ok(qubits.kron(&cavity))
    }

    fn config(&self, t_end: f64, max_frequency: f64, default_dt: f64) -> Result<IntegratorConfig> {
        IntegratorConfig::new(self.dt_override.unwrap_or(default_dt), t_end, self.record_stride, max_frequency)
    }

    /// The `# key=value ...` line recorded at the top of every CSV.
    pub fn metadata(&self, extra: &[(&str, String)]) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";");
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:e}"));
        let mut fields = vec![
            ("kind", self.kind.to_string()),
            ("n_qubits", self.n_qubits.to_string()),
            ("delta_over_eta", format!("{:e}", self.delta_over_eta)),
            ("n_loops", self.n_loops.to_string()),
            ("phis", list(&self.resolved_phis())),
            ("kappa_over_eta", format!("{:e}", self.kappa_over_eta)),
            ("gamma1_over_eta", format!("{:e}", self.gamma1_over_eta)),
            ("gamma2_over_eta", format!("{:e}", self.gamma2_over_eta)),
            ("cavity_dim", self.resolved_cavity_dim().to_string()),
            ("cavity_state", self.cavity_state.to_string()),
            ("dt_override", opt(self.dt_override)),
            ("record_stride", self.record_stride.to_string()),
            ("eta_mhz", opt(self.eta_mhz)),
        ];
        fields.extend(extra.iter().map(|(k, v)| (*k, v.clone())));
        let body: Vec<String> = fields.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# {}", body.join(" "))
    }
}

/// Named columns of `f64` with a metadata comment line.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub metadata: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(metadata: String, header: &[&str]) -> Self {
        Self { metadata, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Values use the shortest round-trip scientific form, so re-running a
    /// scenario reproduces the file byte for byte.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.metadata);
        out.push('\n');
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn emit(&self, spec: &ScenarioSpec) -> Result<()> {
        if let Some(path) = &spec.output_path {
            std::fs::write(path, self.to_csv_string())?;
            log::info!("wrote {} rows to {}", self.rows.len(), path.display());
        }
        Ok(())
    }
}

/// Structural health of one open-system run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    /// Smallest spot-checked eigenvalue of ρ.
    pub min_eigenvalue: Option<f64>,
}

impl From<&EvolutionResult> for Diagnostics {
    fn from(r: &EvolutionResult) -> Self {
        Self {
            max_trace_drift: r.max_trace_drift(),
            max_hermiticity_error: r.max_hermiticity_error,
            min_eigenvalue: r.min_recorded_eigenvalue(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BellReport {
    pub table: Table,
    pub gate_time: f64,
    /// `F` at the last record, `t = τ_n`.
    pub fidelity_at_gate: f64,
    pub diagnostics: Diagnostics,
}

/// Two qubits prepared in `|00⟩`, driven through `n` loops under the
/// strong-drive Hamiltonian with cavity and qubit decoherence. The fidelity
/// is taken against `U(π/4)|00⟩`.
pub fn run_bell(spec: &ScenarioSpec) -> Result<BellReport> {
    spec.expect_kind(ScenarioKind::Bell)?;
    let phis = spec.resolved_phis();
    let theta = theta_of_schedule(1.0, spec.delta_over_eta, spec.n_loops, phis[0] - phis[1])?;
    if (theta - std::f64::consts::FRAC_PI_4).abs() > 1e-9 {
        log::warn!("schedule gives θ = {theta:.6}, target is still U(π/4)|00⟩");
    }
    let space = spec.space()?;
    let h = DrivenCavity::new(spec.drive(0.0), space, Frame::StrongDrive)?;
    let t_end = spec.gate_time();
    let f = h.max_frequency();
    let cfg = spec.config(t_end, f, IntegratorConfig::default_dt(f, t_end))?;
    let initial = QuantumState::from_ket(space, &spec.initial_ket(&space, &Ket::basis(4, 0))?)?;
    let result = evolve_lindblad(&h, spec.rates()?, &initial, &bell_target(), &cfg).inspect_err(|e| {
        log::error!("bell run aborted: {e}");
    })?;

    let mut header = vec!["eta_t_over_pi", "fidelity", "trace", "purity"];
    if spec.eta_mhz.is_some() {
        header.push("t_ns");
    }
    let meta = spec.metadata(&[
        ("dt", format!("{:e}", cfg.dt())),
        ("steps", cfg.steps().to_string()),
        ("t_end", format!("{:e}", t_end)),
        ("target", "U(pi/4)|00>".into()),
    ]);
    let mut table = Table::new(meta, &header);
    for k in 0..result.len() {
        let t = result.times[k];
        let mut row = vec![t / std::f64::consts::PI, result.fidelities[k], result.traces[k], result.purities[k]];
        if let Some(eta) = spec.eta_mhz {
            row.push(time_in_ns(t, eta));
        }
        table.rows.push(row);
    }
    let fidelity_at_gate = *result.fidelities.last().expect("at least two records");
    log::info!("bell: F(τ_{}) = {fidelity_at_gate:.6}", spec.n_loops);
    table.emit(spec)?;
    Ok(BellReport { table, gate_time: t_end, fidelity_at_gate, diagnostics: (&result).into() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GhzPoint {
    pub m: f64,
    pub f_max: f64,
    pub t_at_max: f64,
    /// Fidelity at the record closest to `τ_n`.
    pub fidelity_at_gate: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug)]
pub struct GhzReport {
    pub table: Table,
    pub window: f64,
    pub samples: usize,
    /// Sorted by ascending `m`.
    pub points: Vec<GhzPoint>,
}

/// `N` qubits from `|0…0⟩` against `U(π/4)|0…0⟩`, with `κ` from the parameters and
/// `γ₁ = γ₂ = mκ`. The maximum fidelity is searched over `[0, 2τ_n]`; without
/// a `dt` override the step is shortened until the window holds at least
/// [`GHZ_MIN_SAMPLES`] steps. Points run in parallel and come back in
/// ascending `m`.
pub fn run_ghz_sweep(spec: &ScenarioSpec, m_values: &[f64]) -> Result<GhzReport> {
    spec.expect_kind(ScenarioKind::GhzSweep)?;
    let ms = sorted_unique(m_values, "m")?;
    if ms.iter().any(|&m| m < 0.0) {
        return Err(QsimError::InvalidArgument("m must be non-negative".into()));
    }
    let space = spec.space()?;
    let h = DrivenCavity::new(spec.drive(0.0), space, Frame::StrongDrive)?;
    let tau = spec.gate_time();
    let window = 2.0 * tau;
    let f = h.max_frequency();
    let default_dt = IntegratorConfig::default_dt(f, window).min(window / GHZ_MIN_SAMPLES as f64);
    let cfg = spec.config(window, f, default_dt)?;
    if cfg.record_count() < GHZ_MIN_SAMPLES {
        log::warn!("only {} samples in the search window", cfg.record_count());
    }
    let target = ghz_target(spec.n_qubits)?;
    let initial = QuantumState::from_ket(space, &spec.initial_ket(&space, &Ket::basis(space.qubit_dim(), 0))?)?;
    let kappa = spec.kappa_over_eta;

    let points = ms
        .par_iter()
        .map(|&m| -> Result<GhzPoint> {
            let rates = DecoherenceRates::new(kappa, m * kappa, m * kappa)?;
            let result = evolve_lindblad(&h, rates, &initial, &target, &cfg).inspect_err(|e| {
                log::error!("ghz run at m = {m} aborted: {e}");
            })?;
            let (t_at_max, f_max) = max_fidelity(&result)?;
            let at_gate = nearest_index(&result.times, tau);
            log::info!("ghz m = {m}: f_max = {f_max:.6} at ηt = {t_at_max:.4}");
            Ok(GhzPoint {
                m,
                f_max,
                t_at_max,
                fidelity_at_gate: result.fidelities[at_gate],
                diagnostics: (&result).into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut header = vec!["m", "f_max", "t_at_max"];
    if spec.eta_mhz.is_some() {
        header.push("t_at_max_ns");
    }
    let m_list = ms.iter().map(|m| format!("{m:e}")).collect::<Vec<_>>().join(";");
    let meta = spec.metadata(&[
        ("m_values", m_list),
        ("gamma", "m*kappa".into()),
        ("window", format!("{window:e}")),
        ("dt", format!("{:e}", cfg.dt())),
        ("steps", cfg.steps().to_string()),
        ("target", format!("U(pi/4)|0^{}>", spec.n_qubits)),
    ]);
    let mut table = Table::new(meta, &header);
    for p in &points {
        let mut row = vec![p.m, p.f_max, p.t_at_max];
        if let Some(eta) = spec.eta_mhz {
            row.push(time_in_ns(p.t_at_max, eta));
        }
        table.rows.push(row);
    }
    table.emit(spec)?;
    Ok(GhzReport { table, window, samples: cfg.record_count(), points })
}

#[derive(Clone, Debug)]
pub struct TrajectoryReport {
    pub table: Table,
    /// Analytic loop of the `x_plus` columns.
    pub analytic: Trajectory,
    /// `⟨x⟩, ⟨p⟩` from unitary propagation of `|−⟩ ⊗ cavity`.
    pub simulated: Option<Trajectory>,
}

/// One loop of the cavity in phase space, `t ∈ [0, τ_n]`.
///
/// `x_plus, p_plus` hold `√2η(1 − cos δt)/δ, √2η sin(δt)/δ` and the `minus`
/// columns their reflection. Under the sign convention of the Hamiltonian
/// builders the first loop is the one followed from the σ^x = −1 state, which
/// is what the optional `x_sim, p_sim` columns propagate.
pub fn run_trajectory(spec: &ScenarioSpec) -> Result<TrajectoryReport> {
    spec.expect_kind(ScenarioKind::Trajectory)?;
    let space = spec.space()?;
    let h = DrivenCavity::new(spec.drive(0.0), space, Frame::StrongDrive)?;
    let t_end = spec.gate_time();
    let f = h.max_frequency();
    let cfg = spec.config(t_end, f, IntegratorConfig::default_dt(f, t_end))?;
    let times: Vec<f64> = (0..=cfg.steps()).filter(|&s| cfg.is_record_step(s)).map(|s| cfg.time(s)).collect();
    let analytic = trajectory(1.0, spec.delta_over_eta, &times)?;
    let mirror = analytic.mirrored();

    let simulated = if spec.simulate {
        let d = space.cavity_dim();
        let h_ = std::f64::consts::FRAC_1_SQRT_2;
        let minus = Ket::new(vec![C64::new(h_, 0.0), C64::new(-h_, 0.0)]);
        let run = UnitaryPropagator::new(&h)
            .observe("x", embed(&quadrature_x(d)?, Site::Cavity, &space)?)?
            .observe("p", embed(&quadrature_p(d)?, Site::Cavity, &space)?)?
            .run(&spec.initial_ket(&space, &minus)?, &cfg)?;
        Some(Trajectory { times: run.times, xs: run.observables["x"].clone(), ps: run.observables["p"].clone() })
    } else {
        None
    };

    let mut header = vec!["t", "x_plus", "p_plus", "x_minus", "p_minus"];
    if simulated.is_some() {
        header.extend(["x_sim", "p_sim"]);
    }
    if spec.eta_mhz.is_some() {
        header.push("t_ns");
    }
    let meta = spec.metadata(&[
        ("dt", format!("{:e}", cfg.dt())),
        ("steps", cfg.steps().to_string()),
        ("unit", format!("{:e}", std::f64::consts::SQRT_2 / spec.delta_over_eta)),
        ("simulated_qubit", if simulated.is_some() { "sigma_x_minus" } else { "none" }.into()),
    ]);
    let mut table = Table::new(meta, &header);
    for k in 0..analytic.len() {
        let mut row = vec![times[k], analytic.xs[k], analytic.ps[k], mirror.xs[k], mirror.ps[k]];
        if let Some(sim) = &simulated {
            row.extend([sim.xs[k], sim.ps[k]]);
        }
        if let Some(eta) = spec.eta_mhz {
            row.push(time_in_ns(times[k], eta));
        }
        table.rows.push(row);
    }
    table.emit(spec)?;
    Ok(TrajectoryReport { table, analytic, simulated })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RwaPoint {
    pub omega: f64,
    pub infidelity: f64,
    /// Slope of `ln(infidelity)` against `ln Ω` to the previous point (the
    /// next one for the first).
    pub local_exponent: f64,
}

#[derive(Clone, Debug)]
pub struct RwaReport {
    pub table: Table,
    pub points: Vec<RwaPoint>,
    /// Least-squares slope of `ln(infidelity)` against `ln Ω`.
    pub slope: f64,
}

/// Closed-system propagation of `|0…0⟩ ⊗ cavity` over `[0, τ_n]` with the
/// full rotated-frame Hamiltonian and with its strong-drive limit, on the
/// same time grid. Records the state infidelity `1 − |⟨ψ_strong|ψ_full⟩|²`
/// per drive strength.
pub fn run_rwa_scan(spec: &ScenarioSpec, omega_values: &[f64]) -> Result<RwaReport> {
    spec.expect_kind(ScenarioKind::RwaScan)?;
    let omegas = sorted_unique(omega_values, "omega")?;
    if omegas.iter().any(|&w| w <= 0.0) {
        return Err(QsimError::InvalidArgument("drive strengths must be positive".into()));
    }
    for &w in &omegas {
        if w < 10.0 * spec.delta_over_eta.abs() {
            log::warn!("Ω = {w} is not well above δ = {}", spec.delta_over_eta);
        }
    }
    let space = spec.space()?;
    let t_end = spec.gate_time();
    let initial = spec.initial_ket(&space, &Ket::basis(space.qubit_dim(), 0))?;

    let runs = omegas
        .par_iter()
        .map(|&omega| -> Result<(f64, IntegratorConfig)> {
            let full = DrivenCavity::new(spec.drive(omega), space, Frame::Full)?;
            let strong = DrivenCavity::new(spec.drive(omega), space, Frame::StrongDrive)?;
            let f = full.max_frequency();
            // Twice the default resolution keeps the midpoint-rule floor
            // below the smallest leak in the default scan.
            let mut cfg = spec.config(t_end, f, IntegratorConfig::default_dt(f, t_end) / 2.0)?;
            cfg = IntegratorConfig::with_steps(t_end, cfg.steps(), cfg.steps(), f)?;
            let psi_full = UnitaryPropagator::new(&full).run(&initial, &cfg)?.state;
            let psi_strong = UnitaryPropagator::new(&strong).run(&initial, &cfg)?.state;
            let infidelity = 1.0 - psi_strong.inner(&psi_full).norm_sqr();
            log::info!("rwa Ω = {omega}: infidelity = {infidelity:.4e}");
            Ok((infidelity, cfg))
        })
        .collect::<Result<Vec<_>>>()?;

    let logs: Vec<(f64, f64)> = omegas.iter().zip(&runs).map(|(&w, (inf, _))| (w.ln(), inf.ln())).collect();
    let local = |a: usize, b: usize| (logs[b].1 - logs[a].1) / (logs[b].0 - logs[a].0);
    let points: Vec<RwaPoint> = (0..omegas.len())
        .map(|i| RwaPoint {
            omega: omegas[i],
            infidelity: runs[i].0,
            local_exponent: match (i, omegas.len()) {
                (_, 1) => f64::NAN,
                (0, _) => local(0, 1),
                _ => local(i - 1, i),
            },
        })
        .collect();
    let slope = least_squares_slope(&logs);
    if !slope.is_finite() {
        log::warn!("log-log slope is undefined (non-positive infidelity or single point)");
    }

    let meta = spec.metadata(&[
        ("omega_values", omegas.iter().map(|w| format!("{w:e}")).collect::<Vec<_>>().join(";")),
        ("steps", runs.iter().map(|(_, c)| c.steps().to_string()).collect::<Vec<_>>().join(";")),
        ("t_end", format!("{t_end:e}")),
        ("slope", format!("{slope:e}")),
    ]);
    let mut table = Table::new(meta, &["omega_over_eta", "infidelity", "fitted_local_exponent"]);
    for p in &points {
        table.rows.push(vec![p.omega, p.infidelity, p.local_exponent]);
    }
    table.emit(spec)?;
    Ok(RwaReport { table, points, slope })
}

fn sorted_unique(values: &[f64], what: &str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(QsimError::InvalidArgument(format!("no {what} values given")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(QsimError::InvalidArgument(format!("{what} values must be finite")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

fn nearest_index(times: &[f64], t: f64) -> usize {
    (0..times.len()).min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs())).unwrap_or(0)
}

/// Ordinary least-squares slope of `y` on `x`; NaN for fewer than two
/// points or non-finite data.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 || points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return f64::NAN;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
