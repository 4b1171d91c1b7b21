use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use covest::divergences::{
    bures_hellinger, fisher_quadratic_gaussian, kl_gaussian, likelihood_divergence, log_deviation,
    rao_quadratic, wasserstein2, KlDirection,
};
use covest::experiment::{
    estimate, estimate_from_covariance, paper_signal, run_experiment, sample_covariance,
    spectrum_of_estimate, ExperimentConfig, Method, Phase, PAPER_FREQ,
};
use covest::io::{
    read_matrix, read_observations, spectra_svg, spectrum_to_csv, summary_rows, write_matrix,
    Panel, SUMMARY_HEADER,
};
use covest::solvers::random_toeplitz_starts;
use covest::spectral::{burg_ar, me_spectrum};
use covest::CovError;

#[derive(Parser)]
#[command(
    name = "covest",
    version,
    about = "Structured covariance estimation and maximum-entropy spectra"
)]
struct Cli {
    #[command(flatten)]
    solver: SolverArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverArgs {
    /// Relative stopping tolerance (ADMM residuals and descent gradient).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// ADMM penalty parameter.
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Adds 8 seeded random starting points to the likelihood multi-start.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Nearest positive semidefinite Toeplitz covariance to the sample covariance.
    Estimate {
        /// Observation CSV, one record per row (or a matrix with --covariance).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long, value_enum, default_value_t = Structure::Toeplitz)]
        structure: Structure,
        #[arg(long)]
        out: PathBuf,
        /// Treat the input as a covariance matrix.
        #[arg(long)]
        covariance: bool,
        /// AR order for Burg.
        #[arg(long, default_value_t = 10)]
        order: usize,
    },
    /// Distance or divergence between two covariance matrices.
    Distance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// likelihood, kl, log_deviation, hellinger, wasserstein2, rao_quadratic, fisher_quadratic
        #[arg(long)]
        metric: String,
    },
    /// Maximum-entropy spectrum: Burg on records, or Levinson on a Toeplitz matrix.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        order: usize,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Treat the input as a Toeplitz covariance matrix.
        #[arg(long)]
        covariance: bool,
    },
    /// Runs the single-sinusoid experiment and writes spectra, plots and a summary.
    ReproPaper {
        #[arg(long, value_enum, default_value_t = PhaseArg::All)]
        phase: PhaseArg,
        #[arg(long)]
        outdir: PathBuf,
        /// Comma-separated method list.
        #[arg(long, value_delimiter = ',', default_value = "burg,ml,transport")]
        methods: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Structure {
    Toeplitz,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Pi4,
    Pi2,
    #[value(name = "3pi4")]
    ThreePi4,
    All,
}

enum Failure {
    /// Bad usage or unreadable/unwritable files.
    Usage(String),
    /// A computation failed.
    Method(String),
}

impl From<CovError> for Failure {
    fn from(e: CovError) -> Self {
        match e {
            CovError::Io(_) | CovError::Parse { .. } | CovError::InvalidArgument(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Method(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn read_sym(path: &Path) -> Result<covest::SymMatrix, Failure> {
    read_matrix(path).map_err(|e| match e {
        CovError::Io(_)
        | CovError::Parse { .. }
        | CovError::InvalidArgument(_)
        | CovError::Empty
        | CovError::DimensionMismatch { .. } => io_err(path, e),
        other => other.into(),
    })
}

fn read_obs(path: &Path) -> Result<covest::experiment::ObservationSet, Failure> {
    read_observations(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn config(args: &SolverArgs) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_phase(Phase::Pi4);
    if let Some(t) = args.tol {
        cfg.admm.eps_primal = t;
        cfg.admm.eps_dual = t;
        cfg.descent.grad_tol = t;
    }
    if let Some(m) = args.max_iters {
        cfg.admm.max_iters = m;
        cfg.descent.max_iters = m;
    }
    if let Some(r) = args.rho {
        cfg.admm.rho = r;
    }
    cfg
}

fn parse_method(s: &str) -> Result<Method, Failure> {
    s.parse::<Method>()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn validate(args: &SolverArgs) -> Result<(), Failure> {
    if args.tol.is_some_and(|t| !t.is_finite() || t <= 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    if args.rho.is_some_and(|r| !r.is_finite() || r <= 0.0) {
        return Err(Failure::Usage("--rho must be positive".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    validate(&cli.solver)?;
    let mut cfg = config(&cli.solver);
    match cli.command {
        Command::Estimate {
            input,
            method,
            structure: Structure::Toeplitz,
            out,
            covariance,
            order,
        } => {
            let method = parse_method(&method)?;
            cfg.ar_order = order;
            let (t_hat, obs) = if covariance {
                (read_sym(&input)?, None)
            } else {
                let obs = read_obs(&input)?;
                (sample_covariance(&obs), Some(obs))
            };
            if let Some(seed) = cli.solver.seed {
                cfg.ml_extra_starts = random_toeplitz_starts(&t_hat, 8, seed);
            }
            let (t, info) = match &obs {
                Some(o) => estimate(o, method, &cfg)?,
                None => estimate_from_covariance(&t_hat, method, &cfg)?,
            };
            write_matrix(&out, t.as_matrix()).map_err(|e| io_err(&out, e))?;
            if let Some(s) = info {
                eprintln!(
                    "{method}: status={} iterations={} objective={} primal={} dual={}",
                    s.status.name(),
                    s.iterations,
                    s.objective,
                    s.primal_residual,
                    s.dual_residual
                );
            }
            Ok(())
        }
        Command::Distance { a, b, metric } => {
            let a = read_sym(&a)?;
            let b = read_sym(&b)?;
            let v = match metric.as_str() {
                "likelihood" => likelihood_divergence(&a, &b)?,
                "kl" => kl_gaussian(&a, &b, KlDirection::ModelFirst)?,
                "log_deviation" => log_deviation(&a, &b)?,
                "hellinger" => bures_hellinger(&a, &b)?,
                "wasserstein2" => wasserstein2(&a, &b)?,
                "rao_quadratic" => rao_quadratic(&a, &b.sub(&a))?,
                "fisher_quadratic" => fisher_quadratic_gaussian(&a, &b.sub(&a), 1.0)?,
                other => return Err(Failure::Usage(format!("unknown metric '{other}'"))),
            };
            println!("{}", v.value);
            Ok(())
        }
        Command::Spectrum {
            input,
            order,
            grid,
            out,
            svg,
            covariance,
        } => {
            if grid == 0 {
                return Err(Failure::Usage("--grid must be positive".into()));
            }
            let g = if covariance {
                let t = read_sym(&input)?;
                let scale = t.frobenius_norm().max(1.0);
                spectrum_of_estimate(&t, order, grid, scale)?.1
            } else {
                let obs = read_obs(&input)?;
                me_spectrum(&burg_ar(obs.records(), order)?, grid)
            };
            write(&out, &spectrum_to_csv(&g))?;
            if let Some(path) = svg {
                let panel = Panel {
                    label: format!("order {order}"),
                    grid: &g,
                };
                write(
                    &path,
                    &spectra_svg("Maximum-entropy spectrum", &[panel], PAPER_FREQ),
                )?;
            }
            Ok(())
        }
        Command::ReproPaper {
            phase,
            outdir,
            methods,
        } => {
            cfg.methods = methods
                .iter()
                .map(|m| parse_method(m.trim()))
                .collect::<Result<_, _>>()?;
            let phases: Vec<Phase> = match phase {
                PhaseArg::Pi4 => vec![Phase::Pi4],
                PhaseArg::Pi2 => vec![Phase::Pi2],
                PhaseArg::ThreePi4 => vec![Phase::ThreePi4],
                PhaseArg::All => Phase::ALL.to_vec(),
            };
            fs::create_dir_all(&outdir).map_err(|e| io_err(&outdir, e))?;
            let mut summary = format!("{SUMMARY_HEADER}\n");
            let mut failed = Vec::new();
            for ph in phases {
                let mut cfg = cfg.clone();
                cfg.psi = ph.radians();
                if let Some(seed) = cli.solver.seed {
                    let t_hat = sample_covariance(&paper_signal(cfg.psi));
                    cfg.ml_extra_starts = random_toeplitz_starts(&t_hat, 8, seed);
                }
                let rep = run_experiment(&cfg);
                let tag = ph.tag();
                let mut panels = Vec::new();
                for r in &rep.results {
                    match &r.outcome {
                        Ok(o) => {
                            let stem = format!("{tag}_{}", r.method.name());
                            write(
                                &outdir.join(format!("spectrum_{stem}.csv")),
                                &spectrum_to_csv(&o.spectrum),
                            )?;
                            write_matrix(
                                &outdir.join(format!("estimate_{stem}.csv")),
                                o.estimate.as_matrix(),
                            )
                            .map_err(|e| io_err(&outdir, e))?;
                            panels.push(Panel {
                                label: r.method.name().to_string(),
                                grid: &o.spectrum,
                            });
                        }
                        Err(e) => {
                            eprintln!("{tag} {}: {e}", r.method.name());
                            failed.push(format!("{tag}/{}", r.method.name()));
                        }
                    }
                }
                let title = format!("x(t) = cos(πt/4 + ψ) + v(t), ψ = {tag}");
                write(
                    &outdir.join(format!("spectra_{tag}.svg")),
                    &spectra_svg(&title, &panels, PAPER_FREQ),
                )?;
                summary.push_str(&summary_rows(tag, &rep));
            }
            write(&outdir.join("summary.csv"), &summary)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Method(format!(
                    "methods failed: {}",
                    failed.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Method(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
