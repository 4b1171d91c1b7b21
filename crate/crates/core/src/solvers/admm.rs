use crate::divergences::CouplingSolution;
use crate::error::{CovError, Result};
use crate::matops::{cholesky_solve, norms, project_psd, sqrtm_psd, sym_eig, Matrix, SymMatrix};
use crate::structure::LinearStructure;

use super::{scale_of, AdmmOptions, SolveReport, SolveStatus};

/// A two-block splitting `min f(x) + g(z)  s.t.  x = z` over a flat vector.
trait Splitting {
    fn prox_f(&self, v: &[f64], rho: f64) -> Result<Vec<f64>>;
    fn prox_g(&self, w: &[f64], rho: f64) -> Result<Vec<f64>>;
}

struct AdmmRun {
    x: Vec<f64>,
    iterations: usize,
    primal: f64,
    dual: f64,
    status: SolveStatus,
}

const RHO_UPDATE_EVERY: usize = 10;
const RHO_BALANCE: f64 = 10.0;
const RHO_FACTOR: f64 = 2.0;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Scaled-form ADMM:
/// `x ← prox_f(z − u)`, `z ← prox_g(x + u)`, `u ← u + x − z`.
fn run_admm(
    split: &impl Splitting,
    z0: Vec<f64>,
    opts: &AdmmOptions,
    scale: f64,
) -> Result<AdmmRun> {
    if !opts.rho.is_finite() || opts.rho <= 0.0 {
        return Err(CovError::InvalidArgument("rho must be positive".into()));
    }
    let mut rho = opts.rho;
    let eps_p = opts.eps_primal * scale;
    let eps_d = opts.eps_dual * scale;
    let mut z = z0;
    let mut u = vec![0.0; z.len()];
    let mut x = z.clone();
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let v: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
        x = split.prox_f(&v, rho)?;
        let w: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
        let z_next = split.prox_g(&w, rho)?;
        for ((ui, xi), zi) in u.iter_mut().zip(&x).zip(&z_next) {
            *ui += xi - zi;
        }
        primal = dist(&x, &z_next);
        dual = rho * dist(&z_next, &z);
        z = z_next;
        if primal <= eps_p && dual <= eps_d {
            return Ok(AdmmRun {
                x,
                iterations: it,
                primal,
                dual,
                status: SolveStatus::Converged,
            });
        }
        if opts.adaptive_rho && it % RHO_UPDATE_EVERY == 0 {
            // residual balancing; u is the scaled dual so it rescales with 1/rho
            let factor = if primal > RHO_BALANCE * dual {
                RHO_FACTOR
            } else if dual > RHO_BALANCE * primal {
                1.0 / RHO_FACTOR
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u.iter_mut().for_each(|ui| *ui /= factor);
            }
        }
    }
    Ok(AdmmRun {
        x,
        iterations: opts.max_iters,
        primal,
        dual,
        status: SolveStatus::MaxIters,
    })
}

fn sym_from(n: usize, data: &[f64]) -> SymMatrix {
    SymMatrix::from_matrix(&Matrix::from_vec(n, n, data.to_vec())).expect("square block")
}

fn check_dims(t_hat: &SymMatrix, l: &LinearStructure) -> Result<()> {
    if t_hat.n() != l.n() {
        return Err(CovError::DimensionMismatch {
            expected: l.n(),
            got: t_hat.n(),
        });
    }
    Ok(())
}

/// How the top-left block of the joint covariance is constrained.
enum TopBlock<'a> {
    Structured(&'a LinearStructure),
    Fixed(&'a SymMatrix),
}

/// Joint-covariance splitting for `min trace(T + T̂ − S − S')` subject to
/// `[[T, S], [S', T̂]] ⪰ 0`.
///
/// With `R = T̂^{1/2}` every feasible coupling factors as `S = K R` where
/// `[[T, K], [K', I]] ⪰ 0`, so the program is solved over that block instead.
/// The lower-right block is then the identity rather than a possibly singular
/// `T̂`, which keeps the LMI strictly feasible. The affine copy fixes the
/// identity block and constrains the `T` block; the cone copy is projected
/// onto the PSD cone.
struct TransportSplit<'a> {
    n: usize,
    root: SymMatrix,
    top: TopBlock<'a>,
}

impl<'a> TransportSplit<'a> {
    fn new(t_hat: &SymMatrix, top: TopBlock<'a>) -> Result<Self> {
        Ok(TransportSplit {
            n: t_hat.n(),
            root: sqrtm_psd(t_hat, 0.0)?,
            top,
        })
    }

    fn start(&self) -> Vec<f64> {
        let n = self.n;
        let top = match self.top {
            TopBlock::Structured(_) => self.root.matmul(self.root.as_matrix()),
            TopBlock::Fixed(t) => t.as_matrix().clone(),
        };
        let mut z = Matrix::zeros(2 * n, 2 * n);
        z.set_block(0, 0, &top);
        z.set_block(n, n, &Matrix::identity(n));
        z.into_vec()
    }
}

impl Splitting for TransportSplit<'_> {
    fn prox_f(&self, v: &[f64], rho: f64) -> Result<Vec<f64>> {
        let n = self.n;
        let mut m = Matrix::from_vec(2 * n, 2 * n, v.to_vec());
        // shift by -C/ρ with C = [[I, -R], [-R, 0]]
        for i in 0..n {
            m[(i, i)] -= 1.0 / rho;
            for j in 0..n {
                let r = self.root.get(i, j) / rho;
                m[(i, n + j)] += r;
                m[(n + i, j)] += r;
            }
        }
        let top = match self.top {
            TopBlock::Structured(l) => l.project(&SymMatrix::from_matrix(&m.block(0, 0, n, n))?)?,
            TopBlock::Fixed(t) => t.clone(),
        };
        let k = m
            .block(0, n, n, n)
            .add(&m.block(n, 0, n, n).transpose())
            .scale(0.5);
        let mut out = Matrix::zeros(2 * n, 2 * n);
        out.set_block(0, 0, top.as_matrix());
        out.set_block(0, n, &k);
        out.set_block(n, 0, &k.transpose());
        out.set_block(n, n, &Matrix::identity(n));
        Ok(out.into_vec())
    }

    fn prox_g(&self, w: &[f64], _rho: f64) -> Result<Vec<f64>> {
        let z = sym_from(2 * self.n, w);
        Ok(project_psd(&z)?.into_matrix().into_vec())
    }
}

/// Transport-distance approximation together with the optimal coupling.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub report: SolveReport,
    pub s_star: Matrix,
    /// `√objective`: the Wasserstein-2 / Bures distance from `T̂` to the admissible set.
    pub distance: f64,
}

fn transport_from_run(
    run: AdmmRun,
    split: &TransportSplit,
    t_hat: &SymMatrix,
) -> TransportSolution {
    let n = split.n;
    let x = Matrix::from_vec(2 * n, 2 * n, run.x);
    let t_star = SymMatrix::from_matrix(&x.block(0, 0, n, n)).expect("square");
    let s_star = x.block(0, n, n, n).matmul(split.root.as_matrix());
    let objective = t_star.trace() + t_hat.trace() - 2.0 * s_star.trace();
    TransportSolution {
        distance: objective.max(0.0).sqrt(),
        report: SolveReport {
            t_star,
            objective,
            iterations: run.iterations,
            primal_residual: run.primal,
            dual_residual: run.dual,
            status: run.status,
        },
        s_star,
    }
}

/// Nearest admissible covariance in the transport (Bures/Hellinger) distance,
/// solved as the semidefinite program over the joint covariance. `T̂` may be
/// singular.
pub fn solve_transport(
    t_hat: &SymMatrix,
    l: &LinearStructure,
    opts: &AdmmOptions,
) -> Result<TransportSolution> {
    check_dims(t_hat, l)?;
    let split = TransportSplit::new(t_hat, TopBlock::Structured(l))?;
    let run = run_admm(&split, split.start(), opts, scale_of(t_hat))?;
    Ok(transport_from_run(run, &split, t_hat))
}

/// The inner coupling problem with both marginals fixed, solved by the same
/// ADMM machinery (checked against the closed form in tests).
pub fn solve_coupling(
    t: &SymMatrix,
    t_hat: &SymMatrix,
    opts: &AdmmOptions,
) -> Result<(CouplingSolution, SolveReport)> {
    if t.n() != t_hat.n() {
        return Err(CovError::DimensionMismatch {
            expected: t_hat.n(),
            got: t.n(),
        });
    }
    let split = TransportSplit::new(t_hat, TopBlock::Fixed(t))?;
    let scale = scale_of(t_hat).max(t.frobenius_norm());
    let run = run_admm(&split, split.start(), opts, scale)?;
    let sol = transport_from_run(run, &split, t_hat);
    Ok((
        CouplingSolution {
            s: sol.s_star.clone(),
            cost: sol.report.objective,
        },
        sol.report,
    ))
}

enum SecondProx {
    /// `trace(W) + indicator(W ⪰ 0)`.
    TracePsd,
    /// `‖W‖_*`.
    Nuclear,
}

/// Splitting over the pair `(T, W)` with `W = T̂ − T`, `T` structured.
struct GapSplit<'a> {
    n: usize,
    t_hat: &'a SymMatrix,
    l: &'a LinearStructure,
    second: SecondProx,
}

impl Splitting for GapSplit<'_> {
    fn prox_f(&self, v: &[f64], _rho: f64) -> Result<Vec<f64>> {
        let nn = self.n * self.n;
        let a = sym_from(self.n, &v[..nn]);
        let b = sym_from(self.n, &v[nn..]);
        let t = self.l.project(&a.add(self.t_hat).sub(&b).scale(0.5))?;
        let w = self.t_hat.sub(&t);
        let mut out = t.into_matrix().into_vec();
        out.extend(w.into_matrix().into_vec());
        Ok(out)
    }

    fn prox_g(&self, w: &[f64], rho: f64) -> Result<Vec<f64>> {
        let nn = self.n * self.n;
        let first = project_psd(&sym_from(self.n, &w[..nn]))?;
        let e = sym_eig(&sym_from(self.n, &w[nn..]))?;
        let th = 1.0 / rho;
        let second = match self.second {
            SecondProx::TracePsd => e.map(|l| (l - th).max(0.0)),
            SecondProx::Nuclear => e.map(|l| l.signum() * (l.abs() - th).max(0.0)),
        };
        let mut out = first.into_matrix().into_vec();
        out.extend(second.into_matrix().into_vec());
        Ok(out)
    }
}

fn gap_run(
    t_hat: &SymMatrix,
    l: &LinearStructure,
    opts: &AdmmOptions,
    second: SecondProx,
) -> Result<(SymMatrix, AdmmRun)> {
    check_dims(t_hat, l)?;
    let n = t_hat.n();
    let split = GapSplit {
        n,
        t_hat,
        l,
        second,
    };
    let mut z0 = SymMatrix::zeros(n).into_matrix().into_vec();
    z0.extend(t_hat.as_matrix().as_slice());
    let mut run = run_admm(&split, z0, opts, scale_of(t_hat))?;
    let t_star = sym_from(n, &run.x[..n * n]);
    run.x.clear();
    Ok((t_star, run))
}

fn report(t_star: SymMatrix, objective: f64, run: AdmmRun) -> SolveReport {
    SolveReport {
        t_star,
        objective,
        iterations: run.iterations,
        primal_residual: run.primal,
        dual_residual: run.dual,
        status: run.status,
    }
}

/// Largest admissible `T` below `T̂`: `min trace(T̂ − T)` with `T̂ − T ⪰ 0`.
pub fn solve_stoica(
    t_hat: &SymMatrix,
    l: &LinearStructure,
    opts: &AdmmOptions,
) -> Result<SolveReport> {
    let (t_star, run) = gap_run(t_hat, l, opts, SecondProx::TracePsd)?;
    let objective = t_hat.trace() - t_star.trace();
    Ok(report(t_star, objective, run))
}

/// `min ‖T̂ − T‖_*` over admissible `T`.
pub fn solve_nuclear(
    t_hat: &SymMatrix,
    l: &LinearStructure,
    opts: &AdmmOptions,
) -> Result<SolveReport> {
    let (t_star, run) = gap_run(t_hat, l, opts, SecondProx::Nuclear)?;
    let objective = norms(&t_hat.sub(&t_star))?.nuclear;
    Ok(report(t_star, objective, run))
}

/// Noise covariances realizing `T̂ + Q̂ = T + Q` with minimal `trace(Q + Q̂)`.
#[derive(Debug, Clone)]
pub struct NuclearSplit {
    pub q: SymMatrix,
    pub q_hat: SymMatrix,
    pub trace_sum: f64,
    pub nuclear: f64,
}

/// Splits `T̂ − T` into its positive part `Q` and negative part `Q̂`; the
/// pair is feasible and `trace(Q + Q̂)` equals the nuclear norm of `T̂ − T`.
pub fn verify_nuclear_identity(t_hat: &SymMatrix, t: &SymMatrix) -> Result<NuclearSplit> {
    if t.n() != t_hat.n() {
        return Err(CovError::DimensionMismatch {
            expected: t_hat.n(),
            got: t.n(),
        });
    }
    let e = sym_eig(&t_hat.sub(t))?;
    let q = e.map(|l| l.max(0.0));
    let q_hat = e.map(|l| (-l).max(0.0));
    Ok(NuclearSplit {
        trace_sum: q.trace() + q_hat.trace(),
        nuclear: e.values.iter().map(|l| l.abs()).sum(),
        q,
        q_hat,
    })
}

/// Structured least squares step of the linearized log-deviation problem:
/// `min ½‖T̂^{-1/2} T T̂^{-1/2} − I‖² + ρ/2 ‖T − V‖²` over `T ∈ span(L)`.
struct LogLinearSplit<'a> {
    n: usize,
    l: &'a LinearStructure,
    gram: Matrix,
    rhs0: Vec<f64>,
}

impl Splitting for LogLinearSplit<'_> {
    fn prox_f(&self, v: &[f64], rho: f64) -> Result<Vec<f64>> {
        let vm = sym_from(self.n, v);
        let k = self.l.dim();
        let mut a = self.gram.clone();
        for i in 0..k {
            a[(i, i)] += rho;
        }
        let rhs: Vec<f64> = self
            .l
            .basis()
            .iter()
            .zip(&self.rhs0)
            .map(|(q, b)| b + rho * q.dot(&vm))
            .collect();
        let c = cholesky_solve(&a, &rhs)?;
        Ok(self.l.from_coords(&c)?.into_matrix().into_vec())
    }

    fn prox_g(&self, w: &[f64], _rho: f64) -> Result<Vec<f64>> {
        Ok(project_psd(&sym_from(self.n, w))?.into_matrix().into_vec())
    }
}

/// `‖T̂^{-1/2} T T̂^{-1/2} − I‖_F`.
pub(crate) fn log_linear_objective(t: &SymMatrix, inv_root_hat: &SymMatrix) -> f64 {
    t.congruence(inv_root_hat.as_matrix())
        .sub(&SymMatrix::identity(t.n()))
        .frobenius_norm()
}

/// Linearized log-deviation approximation `min ‖T̂^{-1/2} T T̂^{-1/2} − I‖_F`.
pub fn solve_log_linear(
    t_hat: &SymMatrix,
    l: &LinearStructure,
    opts: &AdmmOptions,
) -> Result<SolveReport> {
    check_dims(t_hat, l)?;
    let n = t_hat.n();
    let e = sym_eig(t_hat)?;
    if e.min() <= crate::matops::PD_TOL * t_hat.frobenius_norm() {
        return Err(CovError::SingularData { min_eig: e.min() });
    }
    let inv = e.map(|v| 1.0 / v);
    let inv_root = e.map(|v| 1.0 / v.sqrt());
    let k = l.dim();
    // G_kl = trace(T̂⁻¹ Q_k T̂⁻¹ Q_l), b_k = trace(T̂⁻¹ Q_k)
    let whitened: Vec<SymMatrix> = l
        .basis()
        .iter()
        .map(|q| q.congruence(inv_root.as_matrix()))
        .collect();
    let gram = Matrix::from_fn(k, k, |i, j| whitened[i].dot(&whitened[j]));
    let rhs0: Vec<f64> = l.basis().iter().map(|q| q.dot(&inv)).collect();
    let split = LogLinearSplit { n, l, gram, rhs0 };
    let z0 = project_psd(&l.project(t_hat)?)?.into_matrix().into_vec();
    let run = run_admm(&split, z0, opts, scale_of(t_hat))?;
    let t_star = sym_from(n, &run.x);
    let objective = log_linear_objective(&t_star, &inv_root);
    Ok(report(t_star, objective, run))
}
