// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. Exit codes: 0 success, 2 invalid parameters,
//! 3 integrator abort, 1 anything else (I/O).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fluxqed::scenarios::{
    run_bell, run_ghz_sweep, run_rwa_scan, run_trajectory, CavityState, ScenarioKind, ScenarioSpec, DEFAULT_M_VALUES,
    DEFAULT_OMEGA_VALUES,
};
use fluxqed::QsimError;

#[derive(Parser)]
#[command(name = "fluxqed", version, about = "Driven-cavity flux-qubit entangling scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-qubit Bell-state fidelity over one gate.
    Bell(Common),
    /// Maximum GHZ fidelity as the qubit decay rate grows, γ = mκ.
    GhzSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        m_values: Option<Vec<f64>>,
    },
    /// Cavity phase-space loop under the spin-dependent force.
    Trajectory {
        #[command(flatten)]
        common: Common,
        /// Skip the simulated columns.
        #[arg(long)]
        analytic_only: bool,
    },
    /// Infidelity of the strong-drive approximation versus Ω.
    RwaScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        omega_values: Option<Vec<f64>>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    n_qubits: Option<usize>,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    delta_over_eta: f64,
    #[arg(long, default_value_t = 1)]
    n_loops: u32,
    /// Comma-separated drive phases in radians.
    #[arg(long = "phi", value_delimiter = ',', allow_hyphen_values = true)]
    phis: Vec<f64>,
    #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
    kappa_over_eta: f64,
    #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
    gamma1_over_eta: f64,
    #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
    gamma2_over_eta: f64,
    #[arg(long)]
    cavity_dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    dt_over_eta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    record_stride: usize,
    /// vacuum, fock:N, coherent:RE or coherent:RE:IM.
    #[arg(long, default_value = "vacuum")]
    cavity_state: String,
    /// Coupling in MHz, used only to add a nanosecond time column.
    #[arg(long, allow_hyphen_values = true)]
    eta_mhz: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn spec(self, kind: ScenarioKind) -> Result<ScenarioSpec, QsimError> {
        let mut spec = ScenarioSpec::new(kind);
        if let Some(n) = self.n_qubits {
            spec.n_qubits = n;
        }
        spec.delta_over_eta = self.delta_over_eta;
        spec.n_loops = self.n_loops;
        spec.phis = self.phis;
        spec.kappa_over_eta = self.kappa_over_eta;
        spec.gamma1_over_eta = self.gamma1_over_eta;
        spec.gamma2_over_eta = self.gamma2_over_eta;
        spec.cavity_dim = self.cavity_dim;
        spec.dt_override = self.dt_over_eta;
        spec.record_stride = self.record_stride;
        spec.cavity_state = self.cavity_state.parse::<CavityState>()?;
        spec.eta_mhz = self.eta_mhz;
        spec.output_path = self.out;
        spec.validate()?;
        Ok(spec)
    }
}

fn run(command: Command) -> Result<(), QsimError> {
    match command {
        Command::Bell(common) => {
            let spec = common.spec(ScenarioKind::Bell)?;
            let report = run_bell(&spec)?;
            println!("F(tau) = {:.6} at eta*t = {:.6}", report.fidelity_at_gate, report.gate_time);
            if spec.output_path.is_none() {
                print!("{}", report.table.to_csv_string());
            }
        }
        Command::GhzSweep { common, m_values } => {
            let spec = common.spec(ScenarioKind::GhzSweep)?;
            let report = run_ghz_sweep(&spec, m_values.as_deref().unwrap_or(&DEFAULT_M_VALUES))?;
            for p in &report.points {
                println!("m = {:<6} f_max = {:.6} at eta*t = {:.6}", p.m, p.f_max, p.t_at_max);
            }
            if spec.output_path.is_none() {
                print!("{}", report.table.to_csv_string());
            }
        }
        Command::Trajectory { common, analytic_only } => {
            let mut spec = common.spec(ScenarioKind::Trajectory)?;
            spec.simulate = !analytic_only;
            let report = run_trajectory(&spec)?;
            if spec.output_path.is_none() {
                print!("{}", report.table.to_csv_string());
            }
        }
        Command::RwaScan { common, omega_values } => {
            let spec = common.spec(ScenarioKind::RwaScan)?;
            let report = run_rwa_scan(&spec, omega_values.as_deref().unwrap_or(&DEFAULT_OMEGA_VALUES))?;
            for p in &report.points {
                println!("Omega = {:<8} infidelity = {:.4e}", p.omega, p.infidelity);
            }
            println!("log-log slope = {:.4}", report.slope);
            if spec.output_path.is_none() {
                print!("{}", report.table.to_csv_string());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match &e {
                e if e.is_integrator_abort() => 3,
                QsimError::Io(_) => 1,
                _ => 2,
            })
        }
    }
}
