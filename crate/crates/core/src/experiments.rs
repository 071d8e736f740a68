//! Experiment harness: TOML configuration, the thermalization study
//! (memoryless chain vs. two measured-chain scenarios), CP scans, the
//! solver cross-check, and CSV emission.

use std::io::Write;
use std::path::Path;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::collision::{
    collision_map_superop, gaussian_weights, markov_evolve, measurement_channel_mixed, pswap,
    probabilistic_trajectory, CollisionSpec, MeasurementSpec,
};
use crate::error::{Error, Result};
use crate::lindblad::from_collision_map;
use crate::pmme::{
    cp_scan, integrate_pmme_direct, propagate, solve_w, MemoryKernel, PMMEProblem, TimeGrid,
};
use crate::qcore::{fidelity, trace_distance, CMat, DensityMatrix};

/// Full experiment configuration. Every field has a default reproducing the
/// qubit thermalization study: initial state `(1/sqrt5)|0> + (2/sqrt5)|1>`,
/// ancilla `diag(3/5, 2/5)`, partial-swap angles `alpha = 0.1` (collision)
/// and `beta = 0.9` (pre-measurement), sigma-x measurement basis, N = 200
/// collisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub ancilla: AncillaConfig,
    pub collision: CollisionConfig,
    pub weights: WeightsConfig,
    pub kernel: KernelConfig,
    pub solver: SolverConfig,
    /// Default output path; the CLI `--out` flag overrides it.
    pub output: Option<String>,
    /// Reserved: every run is deterministic, no randomness is consumed.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            ancilla: AncillaConfig::default(),
            collision: CollisionConfig::default(),
            weights: WeightsConfig::default(),
            kernel: KernelConfig::default(),
            solver: SolverConfig::default(),
            output: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub dim: usize,
    /// Pure initial state as `[re, im]` amplitude pairs. Ignored when
    /// `initial_matrix` is set.
    pub initial_state: Option<Vec<[f64; 2]>>,
    /// Full density matrix, row by row, entries as `[re, im]`.
    pub initial_matrix: Option<Vec<Vec<[f64; 2]>>>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let a = 1.0 / 5f64.sqrt();
        Self {
            dim: 2,
            initial_state: Some(vec![[a, 0.0], [2.0 * a, 0.0]]),
            initial_matrix: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AncillaConfig {
    pub dim: usize,
    /// Diagonal ancilla state.
    pub populations: Vec<f64>,
}

impl Default for AncillaConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            populations: vec![0.6, 0.4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollisionConfig {
    /// Partial-swap angle of each collision.
    pub alpha: f64,
    /// Partial-swap angle of the pre-measurement unitary.
    pub beta: f64,
    /// Measurement basis tag: "x" or "z".
    pub basis: String,
    /// Collision duration.
    pub tau: f64,
    /// Number of collisions N.
    pub collisions: usize,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.9,
            basis: "x".into(),
            tau: 0.1,
            collisions: 200,
        }
    }
}

/// Discrete Gaussian weight profiles for the measured chain, as fractions of
/// the collision count N: centers `ceil(f N)` and width `w N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsConfig {
    pub early_center_fraction: f64,
    pub intermediate_center_fraction: f64,
    pub width_fraction: f64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self {
            early_center_fraction: 0.1,
            intermediate_center_fraction: 0.5,
            width_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    /// "delta" | "exponential" | "truncated-gaussian" | "tabulated"
    pub variant: String,
    pub gamma: f64,
    pub center: f64,
    pub width: f64,
    pub support: f64,
    pub samples: Vec<f64>,
    pub spacing: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            variant: "exponential".into(),
            gamma: 1.0,
            center: 1.0,
            width: 0.3,
            support: 3.0,
            samples: vec![],
            spacing: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub t_max: f64,
    pub steps: usize,
    /// Step of the direct time-domain integrator.
    pub dt: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            steps: 200,
            dt: 5e-3,
        }
    }
}

impl ExperimentConfig {
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        if let Some(rows) = &self.system.initial_matrix {
            let d = self.system.dim;
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidConfig(format!(
                    "system.initial_matrix must be {d}x{d}"
                )));
            }
            let mut mat = CMat::zeros((d, d));
            for (i, row) in rows.iter().enumerate() {
                for (j, &[re, im]) in row.iter().enumerate() {
                    mat[[i, j]] = C64::new(re, im);
                }
            }
            return DensityMatrix::new(mat)
                .map_err(|e| Error::InvalidConfig(format!("system.initial_matrix: {e}")));
        }
        let amps = self.system.initial_state.as_ref().ok_or_else(|| {
            Error::InvalidConfig("system needs initial_state or initial_matrix".into())
        })?;
        if amps.len() != self.system.dim {
            return Err(Error::InvalidConfig(format!(
                "system.initial_state has {} amplitudes, dim is {}",
                amps.len(),
                self.system.dim
            )));
        }
        let v: Array1<C64> = amps.iter().map(|&[re, im]| C64::new(re, im)).collect();
        DensityMatrix::pure(&v)
            .map_err(|e| Error::InvalidConfig(format!("system.initial_state: {e}")))
    }

    pub fn ancilla_state(&self) -> Result<DensityMatrix> {
        if self.ancilla.populations.len() != self.ancilla.dim {
            return Err(Error::InvalidConfig(format!(
                "ancilla.populations has {} entries, dim is {}",
                self.ancilla.populations.len(),
                self.ancilla.dim
            )));
        }
        DensityMatrix::from_diagonal(&self.ancilla.populations)
            .map_err(|e| Error::InvalidConfig(format!("ancilla.populations: {e}")))
    }

    /// Partial-swap collision spec; requires system and ancilla of equal
    /// dimension.
    pub fn collision_spec(&self) -> Result<CollisionSpec> {
        if self.system.dim != self.ancilla.dim {
            return Err(Error::InvalidConfig(
                "collision.alpha uses a partial swap, which needs system and ancilla of equal dimension"
                    .into(),
            ));
        }
        CollisionSpec::new(
            self.system.dim,
            self.ancilla.dim,
            pswap(self.collision.alpha, self.system.dim),
            self.collision.tau,
        )
    }

    pub fn measurement_spec(&self) -> Result<MeasurementSpec> {
        let basis = match self.collision.basis.as_str() {
            "x" => {
                if self.ancilla.dim != 2 {
                    return Err(Error::InvalidConfig(
                        "collision.basis = \"x\" needs a qubit ancilla".into(),
                    ));
                }
                MeasurementSpec::sigma_x_basis()
            }
            "z" => MeasurementSpec::sigma_z_basis(self.ancilla.dim),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "collision.basis must be \"x\" or \"z\", got \"{other}\""
                )))
            }
        };
        MeasurementSpec::new(basis, pswap(self.collision.beta, self.ancilla.dim))
    }

    pub fn memory_kernel(&self) -> Result<MemoryKernel> {
        match self.kernel.variant.as_str() {
            "delta" => Ok(MemoryKernel::DiracDeltaAtZero),
            "exponential" => MemoryKernel::exponential(self.kernel.gamma)
                .map_err(|e| Error::InvalidConfig(format!("kernel.gamma: {e}"))),
            "truncated-gaussian" => MemoryKernel::truncated_gaussian(
                self.kernel.center,
                self.kernel.width,
                self.kernel.support,
            )
            .map_err(|e| Error::InvalidConfig(format!("kernel.width/support: {e}"))),
            "tabulated" => {
                MemoryKernel::tabulated_normalized(self.kernel.samples.clone(), self.kernel.spacing)
                    .map_err(|e| Error::InvalidConfig(format!("kernel.samples: {e}")))
            }
            other => Err(Error::InvalidConfig(format!(
                "kernel.variant must be delta|exponential|truncated-gaussian|tabulated, got \"{other}\""
            ))),
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.solver.t_max, self.solver.steps)
            .map_err(|e| Error::InvalidConfig(format!("solver grid: {e}")))
    }

    /// Assemble the continuum problem: generator extracted from one
    /// collision step, measurement channel from the measured collision.
    pub fn build_problem(&self) -> Result<PMMEProblem> {
        let spec = self.collision_spec()?;
        let eta = self.ancilla_state()?;
        let xi = collision_map_superop(&spec, &eta)?;
        let generator = from_collision_map(&xi, self.collision.tau)?;
        let mspec = self.measurement_spec()?;
        let channel = measurement_channel_mixed(&spec, &mspec, &eta)?;
        PMMEProblem::new(generator, channel, self.memory_kernel()?)
    }
}

/// Parse and validate a configuration file. An empty file yields the full
/// default configuration.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    // eager validation so every entry point reports bad values up front
    cfg.initial_state()?;
    cfg.ancilla_state()?;
    self_check_angles(&cfg)?;
    Ok(cfg)
}

fn self_check_angles(cfg: &ExperimentConfig) -> Result<()> {
    if !cfg.collision.alpha.is_finite() || !cfg.collision.beta.is_finite() {
        return Err(Error::InvalidConfig(
            "collision.alpha and collision.beta must be finite".into(),
        ));
    }
    if cfg.collision.collisions == 0 {
        return Err(Error::InvalidConfig(
            "collision.collisions must be >= 1".into(),
        ));
    }
    Ok(())
}

/// A per-scenario fidelity-vs-collision-count record.
#[derive(Debug, Clone)]
pub struct FidelityTrajectory {
    pub scenario: String,
    /// `(collision index, fidelity to the ancilla state)`.
    pub rows: Vec<(usize, f64)>,
}

impl FidelityTrajectory {
    /// First collision index with fidelity at or above `threshold`.
    pub fn first_crossing(&self, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|&&(_, f)| f >= threshold)
            .map(|&(n, _)| n)
    }

    pub fn final_fidelity(&self) -> f64 {
        self.rows.last().map(|&(_, f)| f).unwrap_or(0.0)
    }
}

/// The thermalization study: the plain collision chain plus two measured
/// chains whose Gaussian measurement weights sit in the early and the
/// intermediate part of the run.
pub fn run_thermalization(cfg: &ExperimentConfig) -> Result<Vec<FidelityTrajectory>> {
    let spec = cfg.collision_spec()?;
    let mspec = cfg.measurement_spec()?;
    let eta = cfg.ancilla_state()?;
    let rho0 = cfg.initial_state()?;
    let n = cfg.collision.collisions;
    let width = cfg.weights.width_fraction * n as f64;
    let center_of = |fraction: f64| (fraction * n as f64).ceil() as usize;

    let fidelities = |states: &[DensityMatrix]| -> Result<Vec<(usize, f64)>> {
        states
            .iter()
            .enumerate()
            .map(|(i, s)| Ok((i, fidelity(s.matrix(), eta.matrix())?.clamp(0.0, 1.0))))
            .collect()
    };

    let markov = markov_evolve(&spec, &eta, &rho0, n)?;
    let early_w = gaussian_weights(center_of(cfg.weights.early_center_fraction), width, n)?;
    let early = probabilistic_trajectory(&spec, &mspec, &eta, &rho0, &early_w, n)?;
    let mid_w = gaussian_weights(
        center_of(cfg.weights.intermediate_center_fraction),
        width,
        n,
    )?;
    let mid = probabilistic_trajectory(&spec, &mspec, &eta, &rho0, &mid_w, n)?;

    Ok(vec![
        FidelityTrajectory {
            scenario: "markov".into(),
            rows: fidelities(&markov)?,
        },
        FidelityTrajectory {
            scenario: "pm-early".into(),
            rows: fidelities(&early)?,
        },
        FidelityTrajectory {
            scenario: "pm-intermediate".into(),
            rows: fidelities(&mid)?,
        },
    ])
}

/// The raw measured chain with early-centered Gaussian weights:
/// `(n, t, fidelity, state entries)` rows.
pub struct SimulationRow {
    pub n: usize,
    pub t: f64,
    pub fidelity: f64,
    pub state: DensityMatrix,
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Vec<SimulationRow>> {
    let spec = cfg.collision_spec()?;
    let mspec = cfg.measurement_spec()?;
    let eta = cfg.ancilla_state()?;
    let rho0 = cfg.initial_state()?;
    let n = cfg.collision.collisions;
    let weights = gaussian_weights(
        (cfg.weights.early_center_fraction * n as f64).ceil() as usize,
        cfg.weights.width_fraction * n as f64,
        n,
    )?;
    let traj = probabilistic_trajectory(&spec, &mspec, &eta, &rho0, &weights, n)?;
    traj.into_iter()
        .enumerate()
        .map(|(i, state)| {
            Ok(SimulationRow {
                n: i,
                t: i as f64 * cfg.collision.tau,
                fidelity: fidelity(state.matrix(), eta.matrix())?.clamp(0.0, 1.0),
                state,
            })
        })
        .collect()
}

/// CP scan over the solver grid.
pub struct CpScanReport {
    /// `(t, min Choi eigenvalue, CP at this time)`.
    pub rows: Vec<(f64, f64, bool)>,
    pub verdict_cp: bool,
    pub construction_deviation: f64,
}

pub fn run_cp_scan(cfg: &ExperimentConfig) -> Result<CpScanReport> {
    let problem = cfg.build_problem()?;
    let grid = cfg.time_grid()?;
    let w = solve_w(&problem, &grid)?;
    let scan = cp_scan(&problem, &w)?;
    let rows: Vec<(f64, f64, bool)> = scan
        .points
        .iter()
        .map(|&(t, e)| (t, e, e >= -1e-8))
        .collect();
    Ok(CpScanReport {
        verdict_cp: scan.is_cp(-1e-8),
        construction_deviation: scan.max_construction_deviation,
        rows,
    })
}

/// Laplace-domain solution vs. the direct time-domain integrator.
pub struct SolverCompareReport {
    /// `(t, trace distance between the two solutions)`.
    pub rows: Vec<(f64, f64)>,
    pub max_distance: f64,
}

pub fn run_solver_compare(cfg: &ExperimentConfig) -> Result<SolverCompareReport> {
    let problem = cfg.build_problem()?;
    let grid = cfg.time_grid()?;
    let rho0 = cfg.initial_state()?;
    let w = solve_w(&problem, &grid)?;
    let direct = integrate_pmme_direct(&problem, &rho0, grid.t_max(), cfg.solver.dt)?;
    let mut rows = Vec::new();
    let mut max_distance: f64 = 0.0;
    for &t in grid.times() {
        // sample the direct trajectory at the solver grid times
        let idx = (t / cfg.solver.dt).round() as usize;
        let (t_direct, state) = direct.get(idx).ok_or(Error::TimeOffGrid(t))?;
        if (t_direct - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::TimeOffGrid(t));
        }
        let exact = propagate(&problem, &w, &rho0, t)?;
        let dist = trace_distance(state.matrix(), exact.matrix())?.clamp(0.0, 1.0);
        max_distance = max_distance.max(dist);
        rows.push((t, dist));
    }
    Ok(SolverCompareReport { rows, max_distance })
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with header, 17 significant digits, LF line endings.
pub fn write_thermalization_csv(out: &mut dyn Write, trajs: &[FidelityTrajectory]) -> Result<()> {
    writeln!(out, "scenario,n,fidelity")?;
    for traj in trajs {
        for &(n, f) in &traj.rows {
            writeln!(out, "{},{},{}", traj.scenario, n, fmt(f))?;
        }
    }
    Ok(())
}

pub fn write_cp_scan_csv(out: &mut dyn Write, report: &CpScanReport) -> Result<()> {
    writeln!(out, "t,min_choi_eigenvalue,cp")?;
    for &(t, e, ok) in &report.rows {
        writeln!(out, "{},{},{}", fmt(t), fmt(e), ok)?;
    }
    Ok(())
}

pub fn write_solver_compare_csv(out: &mut dyn Write, report: &SolverCompareReport) -> Result<()> {
    writeln!(out, "t,trace_distance")?;
    for &(t, d) in &report.rows {
        writeln!(out, "{},{}", fmt(t), fmt(d))?;
    }
    Ok(())
}

pub fn write_simulation_csv(out: &mut dyn Write, rows: &[SimulationRow]) -> Result<()> {
    writeln!(out, "n,t,fidelity,rho00_re,rho01_re,rho01_im,rho11_re")?;
    for row in rows {
        let m = row.state.matrix();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.n,
            fmt(row.t),
            fmt(row.fidelity),
            fmt(m[[0, 0]].re),
            fmt(m[[0, 1]].re),
            fmt(m[[0, 1]].im),
            fmt(m[[1, 1]].re),
        )?;
    }
    Ok(())
}
