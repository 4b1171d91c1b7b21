//! Observation records, the single-sinusoid spectral-line experiment, and the
//! per-method estimate → spectrum pipeline.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::divergences::{
    bures_hellinger, kl_gaussian, likelihood_divergence, log_deviation, wasserstein2, KlDirection,
    MetricKind,
};
use crate::error::{CovError, Result};
use crate::matops::{min_eig, project_psd, SymMatrix};
use crate::solvers::{
    solve_kl, solve_log_linear, solve_ml, solve_nuclear, solve_stoica, solve_transport,
    AdmmOptions, DescentOptions, SolveReport, SolveStatus,
};
use crate::spectral::{
    burg_ar, levinson_truncating, me_spectrum, ARModel, SpectrumGrid, DEFAULT_GRID,
};
use crate::structure::{matrix_to_params, params_to_matrix, toeplitz_structure, ToeplitzParams};

/// Fixed noise realization added to the sinusoid (zero mean, variance 1e-4).
pub const PAPER_NOISE: [f64; 11] = [
    0.000562, -0.019127, 0.007377, -0.000149, -0.007479, -0.013960, 0.003510, 0.012380, 0.006979,
    0.003092, 0.010053,
];

/// Estimates with `r_0` below this (relative to `max(‖T̂‖_F, 1)`) are treated
/// as zero; it matches the default solver tolerances.
pub const ZERO_REL: f64 = 1e-8;

/// Angular frequency of the sinusoid in the experiment.
pub const PAPER_FREQ: f64 = PI / 4.0;

/// `m` records of common length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    records: Vec<Vec<f64>>,
}

impl ObservationSet {
    pub fn new(records: Vec<Vec<f64>>) -> Result<Self> {
        let n = records.first().ok_or(CovError::Empty)?.len();
        if n == 0 {
            return Err(CovError::Empty);
        }
        if let Some(bad) = records.iter().find(|r| r.len() != n) {
            return Err(CovError::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Ok(ObservationSet { records })
    }

    pub fn n(&self) -> usize {
        self.records[0].len()
    }

    pub fn m(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }
}

/// `T̂ = (1/m) Σ x_k x_k'`.
pub fn sample_covariance(obs: &ObservationSet) -> SymMatrix {
    let n = obs.n();
    let m = obs.m() as f64;
    SymMatrix::from_fn(n, |i, j| {
        obs.records().iter().map(|x| x[i] * x[j]).sum::<f64>() / m
    })
}

/// One record `x(t) = cos(πt/4 + ψ) + v(t)`, `t = 0..=10`, with the fixed noise.
pub fn paper_signal(psi: f64) -> ObservationSet {
    let x = PAPER_NOISE
        .iter()
        .enumerate()
        .map(|(t, v)| (PAPER_FREQ * t as f64 + psi).cos() + v)
        .collect();
    ObservationSet { records: vec![x] }
}

/// Phases used in the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Pi4,
    Pi2,
    ThreePi4,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Pi4, Phase::Pi2, Phase::ThreePi4];

    pub fn radians(self) -> f64 {
        match self {
            Phase::Pi4 => PI / 4.0,
            Phase::Pi2 => PI / 2.0,
            Phase::ThreePi4 => 3.0 * PI / 4.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Phase::Pi4 => "pi4",
            Phase::Pi2 => "pi2",
            Phase::ThreePi4 => "3pi4",
        }
    }
}

impl FromStr for Phase {
    type Err = CovError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pi4" => Ok(Phase::Pi4),
            "pi2" => Ok(Phase::Pi2),
            "3pi4" => Ok(Phase::ThreePi4),
            _ => Err(CovError::InvalidArgument(format!("unknown phase '{s}'"))),
        }
    }
}

/// Estimation methods; the declaration order is the output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Burg,
    Kl,
    Loglin,
    Ml,
    Nuclear,
    Stoica,
    Transport,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Burg,
        Method::Kl,
        Method::Loglin,
        Method::Ml,
        Method::Nuclear,
        Method::Stoica,
        Method::Transport,
    ];

    /// Methods shown in the experiment's figures.
    pub const FIGURES: [Method; 3] = [Method::Burg, Method::Ml, Method::Transport];

    pub fn name(self) -> &'static str {
        match self {
            Method::Burg => "burg",
            Method::Kl => "kl",
            Method::Loglin => "loglin",
            Method::Ml => "ml",
            Method::Nuclear => "nuclear",
            Method::Stoica => "stoica",
            Method::Transport => "transport",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CovError;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| CovError::InvalidArgument(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub psi: f64,
    pub grid: usize,
    pub ar_order: usize,
    pub methods: Vec<Method>,
    pub admm: AdmmOptions,
    pub descent: DescentOptions,
    /// Extra starting points for the likelihood multi-start.
    pub ml_extra_starts: Vec<SymMatrix>,
}

impl ExperimentConfig {
    pub fn for_phase(phase: Phase) -> Self {
        ExperimentConfig {
            psi: phase.radians(),
            grid: DEFAULT_GRID,
            ar_order: 10,
            methods: Method::FIGURES.to_vec(),
            admm: AdmmOptions::default(),
            descent: DescentOptions::default(),
            ml_extra_starts: Vec::new(),
        }
    }
}

/// Solver diagnostics attached to a matrix estimate.
#[derive(Debug, Clone)]
pub struct SolverInfo {
    pub status: SolveStatus,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl From<&SolveReport> for SolverInfo {
    fn from(r: &SolveReport) -> Self {
        SolverInfo {
            status: r.status,
            objective: r.objective,
            iterations: r.iterations,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
        }
    }
}

/// Output of one method: covariance estimate, its AR model and spectrum.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub estimate: SymMatrix,
    pub model: ARModel,
    pub spectrum: SpectrumGrid,
    pub solver: Option<SolverInfo>,
    /// AR order at which the Levinson recursion hit a vanishing prediction error.
    pub truncated_at: Option<usize>,
    /// Distances from `T̂`; `None` where the metric is undefined for the pair.
    pub distances: Vec<(MetricKind, Option<f64>)>,
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub outcome: std::result::Result<MethodOutcome, CovError>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub psi: f64,
    pub observations: ObservationSet,
    pub t_hat: SymMatrix,
    pub results: Vec<MethodResult>,
}

impl ExperimentReport {
    pub fn result(&self, m: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == m)
    }

    pub fn any_error(&self) -> bool {
        self.results.iter().any(|r| r.outcome.is_err())
    }
}

/// Distances from `t_hat` to `t` under every metric defined for the pair.
///
/// Solver output is PSD only up to the solver tolerance, so an estimate with
/// `λ_min ≥ -ZERO_REL * max(‖T̂‖_F, 1)` is evaluated at its PSD projection.
pub fn distances_from(t_hat: &SymMatrix, t: &SymMatrix) -> Vec<(MetricKind, Option<f64>)> {
    let scale = t_hat.frobenius_norm().max(1.0);
    let projected;
    let t = match min_eig(t) {
        Ok(l) if l < 0.0 && l >= -ZERO_REL * scale => {
            projected = project_psd(t).unwrap_or_else(|_| t.clone());
            &projected
        }
        _ => t,
    };
    vec![
        (
            MetricKind::Likelihood,
            likelihood_divergence(t, t_hat).ok().map(|v| v.value),
        ),
        (
            MetricKind::Kl,
            kl_gaussian(t, t_hat, KlDirection::ModelFirst)
                .ok()
                .map(|v| v.value),
        ),
        (
            MetricKind::LogDeviation,
            log_deviation(t, t_hat).ok().map(|v| v.value),
        ),
        (
            MetricKind::Hellinger,
            bures_hellinger(t, t_hat).ok().map(|v| v.value),
        ),
        (
            MetricKind::Wasserstein2,
            wasserstein2(t, t_hat).ok().map(|v| v.value),
        ),
    ]
}

/// Toeplitz estimate → AR model (order capped at `ar_order`) → spectrum.
///
/// An estimate with `r_0 ≤ ZERO_REL * scale` is the zero process: it gets a
/// zero-variance white model and `truncated_at = Some(0)`.
pub fn spectrum_of_estimate(
    t: &SymMatrix,
    ar_order: usize,
    grid: usize,
    scale: f64,
) -> Result<(ARModel, SpectrumGrid, Option<usize>)> {
    let mut p = matrix_to_params(t)?;
    if p.r[0] <= ZERO_REL * scale {
        let m = ARModel::white(0.0);
        let g = me_spectrum(&m, grid);
        return Ok((m, g, Some(0)));
    }
    p.r.truncate(ar_order + 1);
    let tm = levinson_truncating(&p)?;
    let g = me_spectrum(&tm.model, grid);
    Ok((tm.model, g, tm.truncated_at))
}

/// Estimates `T` from a sample covariance with one of the matrix methods.
/// Burg works on the records themselves and is rejected here.
pub fn estimate_from_covariance(
    t_hat: &SymMatrix,
    method: Method,
    cfg: &ExperimentConfig,
) -> Result<(SymMatrix, Option<SolverInfo>)> {
    let l = toeplitz_structure(t_hat.n());
    let from = |r: SolveReport| (r.t_star.clone(), Some(SolverInfo::from(&r)));
    Ok(match method {
        Method::Burg => {
            return Err(CovError::InvalidArgument(
                "burg needs observation records, not a covariance matrix".into(),
            ))
        }
        Method::Ml => from(solve_ml(t_hat, &l, &cfg.ml_extra_starts, &cfg.descent)?.report),
        Method::Transport => from(solve_transport(t_hat, &l, &cfg.admm)?.report),
        Method::Kl => from(solve_kl(t_hat, &l, &cfg.descent)?),
        Method::Loglin => from(solve_log_linear(t_hat, &l, &cfg.admm)?),
        Method::Stoica => from(solve_stoica(t_hat, &l, &cfg.admm)?),
        Method::Nuclear => from(solve_nuclear(t_hat, &l, &cfg.admm)?),
    })
}

/// Estimates `T` from the observations with one method.
pub fn estimate(
    obs: &ObservationSet,
    method: Method,
    cfg: &ExperimentConfig,
) -> Result<(SymMatrix, Option<SolverInfo>)> {
    if method == Method::Burg {
        return Ok((burg_estimate(obs, cfg.ar_order)?.1, None));
    }
    estimate_from_covariance(&sample_covariance(obs), method, cfg)
}

fn burg_estimate(obs: &ObservationSet, ar_order: usize) -> Result<(ARModel, SymMatrix)> {
    let m = burg_ar(obs.records(), ar_order.min(obs.n() - 1))?;
    let t = params_to_matrix(&ToeplitzParams::new(m.autocovariance(obs.n())))?;
    Ok((m, t))
}

fn run_method(
    obs: &ObservationSet,
    t_hat: &SymMatrix,
    method: Method,
    cfg: &ExperimentConfig,
) -> Result<MethodOutcome> {
    let (est, solver, model, spectrum, truncated_at) = if method == Method::Burg {
        let (m, est) = burg_estimate(obs, cfg.ar_order)?;
        let g = me_spectrum(&m, cfg.grid);
        (est, None, m, g, None)
    } else {
        let (est, solver) = estimate_from_covariance(t_hat, method, cfg)?;
        let scale = t_hat.frobenius_norm().max(1.0);
        let (m, g, tr) = spectrum_of_estimate(&est, cfg.ar_order, cfg.grid, scale)?;
        (est, solver, m, g, tr)
    };
    Ok(MethodOutcome {
        distances: distances_from(t_hat, &est),
        estimate: est,
        model,
        spectrum,
        solver,
        truncated_at,
    })
}

/// Runs every configured method on an observation set. Failures are kept
/// per method; results are ordered by method name.
pub fn run_on(obs: &ObservationSet, cfg: &ExperimentConfig, psi: f64) -> ExperimentReport {
    let t_hat = sample_covariance(obs);
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    let results = methods
        .into_iter()
        .map(|method| MethodResult {
            method,
            outcome: run_method(obs, &t_hat, method, cfg),
        })
        .collect();
    ExperimentReport {
        psi,
        observations: obs.clone(),
        t_hat,
        results,
    }
}

/// The spectral-line experiment at the configured phase.
pub fn run_experiment(cfg: &ExperimentConfig) -> ExperimentReport {
    run_on(&paper_signal(cfg.psi), cfg, cfg.psi)
}

/// Energy bookkeeping for an estimate: `r_0` and the excess over the
/// smallest eigenvalue (a proxy for the energy of the line component).
#[derive(Debug, Clone, Copy)]
pub struct EnergyProxy {
    pub r0: f64,
    pub noise_floor: f64,
    pub line_energy: f64,
}

pub fn energy_proxy(t: &SymMatrix) -> Result<EnergyProxy> {
    let r0 = t.trace() / t.n() as f64;
    let floor = min_eig(t)?.max(0.0);
    Ok(EnergyProxy {
        r0,
        noise_floor: floor,
        line_energy: r0 - floor,
    })
}
