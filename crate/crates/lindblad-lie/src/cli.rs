//! Command-line front end: JSON run configurations, solver dispatch,
//! CSV/JSON emission, and the cross-solver comparison harness.
//!
//! Output is deterministic byte for byte: time-series values print with
//! fifteen significant digits, reports use ordered struct serialization,
//! and no command consults the environment.

use crate::eigensolver::{evolve_eigendecomposition, heff_spectrum, hom_dip, spectrum_multiset};
use crate::fock::{coincidence, number_expectation, DensityMatrix, FockBasis};
use crate::linalg::trace_distance;
use crate::liouville::{Schedule, SystemParams};
use crate::oracle::{integrate_master, IntegratorConfig, Trajectory};
use crate::structure::{decomposition_report, DecompositionReport, KillingSignature};
use crate::weinorman::evolve_weinorman;
use crate::{Error, Result, C64};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Largest admitted pairwise trace distance when running every solver.
pub const COMPARE_THRESHOLD: f64 = 1e-5;

/// Which propagation route a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    /// Direct adaptive integration of the full master equation.
    Oracle,
    /// Spectral decomposition of the generator.
    Eigen,
    /// Exponential-product expansion.
    Weinorman,
    /// All three, cross-checked pairwise.
    All,
}

/// Optional integrator overrides in a run configuration.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_steps: Option<usize>,
    pub initial_step: Option<f64>,
}

/// Initial density matrix: a number state or a mixture of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialStateSpec {
    Fock { occupations: Vec<u32> },
    Mixture { terms: Vec<MixtureTerm> },
}

/// One weighted number state inside a mixture.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureTerm {
    pub weight: f64,
    pub occupations: Vec<u32>,
}

/// A complete run description, read from a single JSON file.
///
/// Parameter entries are either plain numbers or piecewise-linear
/// schedules `{"times": [...], "values": [...]}` with strictly
/// increasing times starting at zero.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub modes: usize,
    pub max_total: u32,
    pub sigma: Vec<Schedule>,
    pub gamma: Vec<Schedule>,
    pub kappa: Vec<Schedule>,
    pub initial_state: InitialStateSpec,
    pub t_final: f64,
    pub samples: usize,
    pub solver: SolverChoice,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

impl RunConfig {
    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig {
            reason: format!("{}: {e}", path.display()),
        })
    }

    /// Chain parameters with the configured mode count enforced.
    pub fn system_params(&self) -> Result<SystemParams> {
        if self.modes == 0 {
            return Err(Error::InvalidConfig { reason: "modes must be at least 1".into() });
        }
        if self.sigma.len() != self.modes
            || self.gamma.len() != self.modes
            || self.kappa.len() + 1 != self.modes
        {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "{} modes need {0} sigma, {0} gamma, {} kappa entries; got {}, {}, {}",
                    self.modes,
                    self.modes - 1,
                    self.sigma.len(),
                    self.gamma.len(),
                    self.kappa.len()
                ),
            });
        }
        for s in self.sigma.iter().chain(&self.gamma).chain(&self.kappa) {
            if let Schedule::PiecewiseLinear { times, .. } = s {
                if times.first() != Some(&0.0) {
                    return Err(Error::InvalidConfig {
                        reason: "schedule times must start at 0".into(),
                    });
                }
            }
        }
        SystemParams::new(self.sigma.clone(), self.gamma.clone(), self.kappa.clone())
    }

    /// Fock basis at the configured truncation.
    pub fn fock_basis(&self) -> Arc<FockBasis> {
        Arc::new(FockBasis::new(self.modes, self.max_total))
    }

    /// Initial density matrix on `basis`.
    pub fn initial_state(&self, basis: &Arc<FockBasis>) -> Result<DensityMatrix> {
        match &self.initial_state {
            InitialStateSpec::Fock { occupations } => {
                DensityMatrix::fock_state(basis.clone(), occupations)
            }
            InitialStateSpec::Mixture { terms } => {
                let pairs: Vec<(f64, Vec<u32>)> =
                    terms.iter().map(|t| (t.weight, t.occupations.clone())).collect();
                DensityMatrix::mixture(basis.clone(), &pairs)
            }
        }
    }

    /// Uniform sample grid over [0, t_final] with `samples` points.
    pub fn time_grid(&self) -> Result<Vec<f64>> {
        if self.samples == 0 {
            return Err(Error::InvalidConfig { reason: "empty sample grid".into() });
        }
        if !self.t_final.is_finite() || self.t_final <= 0.0 {
            return Err(Error::InvalidConfig {
                reason: format!("t_final must be positive and finite, got {}", self.t_final),
            });
        }
        if self.samples == 1 {
            return Ok(vec![0.0]);
        }
        let last = (self.samples - 1) as f64;
        Ok((0..self.samples).map(|k| self.t_final * k as f64 / last).collect())
    }

    /// Integrator settings with any configured overrides applied.
    pub fn integrator(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::default();
        if let Some(r) = self.tolerances.rtol {
            cfg.rtol = r;
        }
        if let Some(a) = self.tolerances.atol {
            cfg.atol = a;
        }
        if let Some(m) = self.tolerances.max_steps {
            cfg.max_steps = m;
        }
        if let Some(h) = self.tolerances.initial_step {
            cfg.initial_step = Some(h);
        }
        cfg
    }
}

fn solve_one(cfg: &RunConfig, solver: SolverChoice) -> Result<Trajectory> {
    let params = cfg.system_params()?;
    let basis = cfg.fock_basis();
    let rho0 = cfg.initial_state(&basis)?;
    let grid = cfg.time_grid()?;
    match solver {
        SolverChoice::Oracle => integrate_master(&params, &rho0, &grid, &cfg.integrator()),
        SolverChoice::Eigen => evolve_eigendecomposition(&params, &rho0, &grid),
        SolverChoice::Weinorman => evolve_weinorman(&params, &rho0, &grid, &cfg.integrator()),
        SolverChoice::All => unreachable!("dispatched per solver"),
    }
}

/// Pairwise maxima of the trace distance between the three solver
/// outputs over the whole sample grid.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonSummary {
    pub threshold: f64,
    pub oracle_vs_eigen: f64,
    pub oracle_vs_weinorman: f64,
    pub eigen_vs_weinorman: f64,
    pub max_distance: f64,
}

/// CSV time series plus the comparison summary when every solver ran.
pub struct EvolveOutput {
    pub csv: String,
    pub comparison: Option<ComparisonSummary>,
}

fn max_trace_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| trace_distance(&x.matrix().view(), &y.matrix().view()))
        .fold(0.0, f64::max)
}

/// Formats one observable row set per sample time: trace, per-mode
/// occupations, same-time pair correlations, purity.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let basis = traj.states[0].basis().clone();
    let n = basis.n_modes();
    let mut out = String::from("t,trace");
    for k in 1..=n {
        write!(out, ",n_{k}").expect("string write");
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            write!(out, ",G_{i}{j}").expect("string write");
        }
    }
    out.push_str(",purity\n");
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        write!(out, "{:.14e},{:.14e}", t, rho.trace()).expect("string write");
        for k in 0..n {
            write!(out, ",{:.14e}", number_expectation(rho, k)?).expect("string write");
        }
        for i in 0..n {
            for j in (i + 1)..n {
                write!(out, ",{:.14e}", coincidence(rho, i, j)?).expect("string write");
            }
        }
        writeln!(out, ",{:.14e}", rho.purity()).expect("string write");
    }
    Ok(out)
}

/// Runs the configured solver (or all of them) and renders the time
/// series; with `solver = "all"` the CSV comes from the direct
/// integrator and the summary holds the pairwise distances.
pub fn run_evolve(cfg: &RunConfig) -> Result<EvolveOutput> {
    if cfg.solver != SolverChoice::All {
        let traj = solve_one(cfg, cfg.solver)?;
        return Ok(EvolveOutput { csv: trajectory_csv(&traj)?, comparison: None });
    }
    let oracle = solve_one(cfg, SolverChoice::Oracle)?;
    let eigen = solve_one(cfg, SolverChoice::Eigen)?;
    let wn = solve_one(cfg, SolverChoice::Weinorman)?;
    let oracle_vs_eigen = max_trace_distance(&oracle, &eigen);
    let oracle_vs_weinorman = max_trace_distance(&oracle, &wn);
    let eigen_vs_weinorman = max_trace_distance(&eigen, &wn);
    let max_distance = oracle_vs_eigen.max(oracle_vs_weinorman).max(eigen_vs_weinorman);
    Ok(EvolveOutput {
        csv: trajectory_csv(&oracle)?,
        comparison: Some(ComparisonSummary {
            threshold: COMPARE_THRESHOLD,
            oracle_vs_eigen,
            oracle_vs_weinorman,
            eigen_vs_weinorman,
            max_distance,
        }),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
struct ComplexOut {
    re: f64,
    im: f64,
}

impl From<C64> for ComplexOut {
    fn from(z: C64) -> Self {
        ComplexOut { re: z.re, im: z.im }
    }
}

#[derive(Debug, Serialize)]
struct ExponentOut {
    alpha: Vec<u32>,
    beta: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize)]
struct SpectrumOutput {
    modes: usize,
    lambdas: Vec<ComplexOut>,
    ep_condition: f64,
    liouville_multiset: Vec<ComplexOut>,
    exponents: Vec<ExponentOut>,
}

/// Mode eigenvalues, the full replicated eigenvalue multiset, and every
/// decay exponent reachable within the configured truncation, sorted
/// with the slowest-decaying first.
pub fn run_spectrum(cfg: &RunConfig) -> Result<String> {
    let params = cfg.system_params()?;
    let spec = heff_spectrum(&params)?;
    let mut multiset = spectrum_multiset(&spec);
    multiset.sort_by(|a, b| {
        (-a.re, a.im).partial_cmp(&(-b.re, b.im)).expect("finite eigenvalues")
    });
    let occupations: Vec<Vec<u32>> = FockBasis::new(cfg.modes, cfg.max_total)
        .states()
        .map(|occ| occ.to_vec())
        .collect();
    let mut exponents = Vec::with_capacity(occupations.len() * occupations.len());
    for alpha in &occupations {
        for beta in &occupations {
            let mut z = C64::new(0.0, 0.0);
            for (k, l) in spec.lambdas.iter().enumerate() {
                z += f64::from(alpha[k]) * l + f64::from(beta[k]) * l.conj();
            }
            exponents.push(ExponentOut { alpha: alpha.clone(), beta: beta.clone(), re: z.re, im: z.im });
        }
    }
    exponents.sort_by(|a, b| {
        (-a.re, a.im, &a.alpha, &a.beta)
            .partial_cmp(&(-b.re, b.im, &b.alpha, &b.beta))
            .expect("finite exponents")
    });
    let out = SpectrumOutput {
        modes: cfg.modes,
        lambdas: spec.lambdas.iter().map(|&z| z.into()).collect(),
        ep_condition: spec.ep_condition,
        liouville_multiset: multiset.into_iter().map(ComplexOut::from).collect(),
        exponents,
    };
    Ok(serde_json::to_string_pretty(&out).expect("plain struct serialization"))
}

/// Coincidence-dip scan: one CSV row per loss rate, flagging rates at
/// or beyond twice the coupling, where the two uncoupled decay channels
/// no longer mix into an oscillating pair.
pub fn run_hom_scan(kappa: f64, gammas: &[f64], resolution: usize) -> Result<String> {
    if gammas.is_empty() {
        return Err(Error::InvalidConfig { reason: "no loss rates to scan".into() });
    }
    let mut out = String::from("gamma_over_kappa,kappa_t_dip,Gamma_min,outside_pt_phase\n");
    for &gamma in gammas {
        let (t_dip, g_min) = hom_dip(kappa, gamma, resolution)?;
        let flagged = gamma >= 2.0 * kappa;
        writeln!(
            out,
            "{:.14e},{:.14e},{:.14e},{}",
            gamma / kappa,
            kappa * t_dip,
            g_min,
            u8::from(flagged)
        )
        .expect("string write");
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct StructureDims {
    total: usize,
    nilpotent: usize,
    abelian: usize,
    sl_left: usize,
    sl_right: usize,
}

#[derive(Debug, Serialize)]
struct StructureJson {
    dims: StructureDims,
    closure_residual: f64,
    jacobi_residual: f64,
    killing_signature: KillingSignature,
    radical_dim: usize,
    derived_dim: usize,
    left_killing_gap: Option<f64>,
    right_killing_gap: Option<f64>,
    mutual_commutator_residual: f64,
}

/// Machine-readable summary of a decomposition report.
pub fn structure_json(report: &DecompositionReport) -> String {
    let out = StructureJson {
        dims: StructureDims {
            total: report.total_dim,
            nilpotent: report.nilpotent_dim,
            abelian: report.abelian_dim,
            sl_left: report.left_dim,
            sl_right: report.right_dim,
        },
        closure_residual: report.closure_residual,
        jacobi_residual: report.jacobi_residual,
        killing_signature: report.killing_signature,
        radical_dim: report.radical_dim,
        derived_dim: report.derived_dim,
        left_killing_gap: report.left_killing_gap,
        right_killing_gap: report.right_killing_gap,
        mutual_commutator_residual: report.mutual_commutator_residual,
    };
    serde_json::to_string_pretty(&out).expect("plain struct serialization")
}

/// Command-line interface of the solver binary.
#[derive(Debug, Parser)]
#[command(
    name = "lindblad-lie",
    version,
    about = "Lossy coupled-oscillator chains: direct, spectral, and product-form solvers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a configured chain and write the observable time series.
    Evolve {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; with solver "all" a comparison summary lands
        /// next to it as <out>.compare.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print mode eigenvalues, the replicated eigenvalue multiset, and
    /// decay exponents as JSON.
    Spectrum {
        /// JSON run configuration (constant parameters only).
        #[arg(long)]
        config: PathBuf,
    },
    /// Locate the first coincidence dip for each loss rate.
    HomScan {
        /// Coupling strength, must be positive.
        #[arg(long)]
        kappa: f64,
        /// Comma-separated loss rates for the first mode.
        #[arg(long, value_delimiter = ',', required = true)]
        gammas: Vec<f64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Scan points used to bracket the dip before refinement.
        #[arg(long, default_value_t = 4096)]
        resolution: usize,
    },
    /// Analyze the quadratic superoperator algebra of an N-mode chain.
    Structure {
        /// Chain length.
        #[arg(long)]
        modes: usize,
        /// Emit the machine-readable summary instead of the report.
        #[arg(long)]
        json: bool,
    },
    /// Evolve with every solver and cross-check them pairwise.
    Compare {
        /// JSON run configuration; its solver entry is ignored.
        #[arg(long)]
        config: PathBuf,
        /// Optional CSV path; without it only the comparison summary is
        /// printed to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".compare.json");
    PathBuf::from(name)
}

fn finish_comparison(summary: &ComparisonSummary) -> Result<()> {
    if summary.max_distance > summary.threshold {
        return Err(Error::SolverDisagreement {
            distance: summary.max_distance,
            threshold: summary.threshold,
        });
    }
    Ok(())
}

/// Executes one parsed command; callers map the error class to an exit
/// code (configuration problems 1, numerical failures 2).
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let output = run_evolve(&cfg)?;
            std::fs::write(&out, &output.csv)?;
            if let Some(summary) = output.comparison {
                let json = serde_json::to_string_pretty(&summary)
                    .expect("plain struct serialization");
                std::fs::write(sidecar_path(&out), json + "\n")?;
                finish_comparison(&summary)?;
            }
            Ok(())
        }
        Command::Spectrum { config } => {
            let cfg = RunConfig::load(&config)?;
            println!("{}", run_spectrum(&cfg)?);
            Ok(())
        }
        Command::HomScan { kappa, gammas, out, resolution } => {
            let csv = run_hom_scan(kappa, &gammas, resolution)?;
            std::fs::write(&out, csv)?;
            Ok(())
        }
        Command::Structure { modes, json } => {
            let report = decomposition_report(modes)?;
            if json {
                println!("{}", structure_json(&report));
            } else {
                print!("{report}");
            }
            Ok(())
        }
        Command::Compare { config, out } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.solver = SolverChoice::All;
            let output = run_evolve(&cfg)?;
            let summary = output.comparison.expect("solver all always compares");
            let json =
                serde_json::to_string_pretty(&summary).expect("plain struct serialization");
            match out {
                Some(path) => {
                    std::fs::write(&path, &output.csv)?;
                    std::fs::write(sidecar_path(&path), json + "\n")?;
                }
                None => println!("{json}"),
            }
            finish_comparison(&summary)
        }
    }
}
