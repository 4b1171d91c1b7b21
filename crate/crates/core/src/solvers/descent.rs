use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::divergences::likelihood_objective;
use crate::error::{CovError, Result};
use crate::matops::{cholesky_solve, sym_eig, EigDecomp, Matrix, SymMatrix, PD_TOL};
use crate::structure::LinearStructure;

use super::{scale_of, DescentOptions, SolveReport, SolveStatus};

/// Ridge levels (times `trace(T̂)/n`) used by the default multi-start.
pub const ML_RIDGES: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];

#[derive(Debug, Clone, Copy)]
enum Objective {
    /// `log|T| + trace(T̂ T⁻¹)`
    Likelihood,
    /// `−log|T| + trace(T T̂⁻¹)`
    Kl,
}

struct Problem<'a> {
    kind: Objective,
    t_hat: &'a SymMatrix,
    /// `T̂⁻¹`, only for the KL objective.
    t_hat_inv: Option<SymMatrix>,
    l: &'a LinearStructure,
}

struct Eval {
    value: f64,
    eig: EigDecomp,
}

impl Problem<'_> {
    /// Objective at `T`, or `None` when `T` violates the positivity floor.
    fn eval(&self, t: &SymMatrix, floor: f64) -> Result<Option<Eval>> {
        let eig = sym_eig(t)?;
        if eig.min() <= floor {
            return Ok(None);
        }
        let logdet: f64 = eig.values.iter().map(|l| l.ln()).sum();
        let value = match self.kind {
            Objective::Likelihood => {
                let inv = eig.map(|l| 1.0 / l);
                logdet + self.t_hat.dot(&inv)
            }
            Objective::Kl => -logdet + t.dot(self.t_hat_inv.as_ref().expect("KL needs T̂⁻¹")),
        };
        Ok(Some(Eval { value, eig }))
    }

    /// Gradient in basis coordinates and the Fisher metric `tr(T⁻¹Q_kT⁻¹Q_l)`.
    fn gradient_and_metric(&self, eig: &EigDecomp) -> (Vec<f64>, Matrix) {
        let inv = eig.map(|l| 1.0 / l);
        let g_mat = match self.kind {
            Objective::Likelihood => {
                let inner = self.t_hat.congruence(inv.as_matrix());
                inv.sub(&inner)
            }
            Objective::Kl => self.t_hat_inv.as_ref().expect("KL needs T̂⁻¹").sub(&inv),
        };
        let basis = self.l.basis();
        let grad: Vec<f64> = basis.iter().map(|q| g_mat.dot(q)).collect();
        let inv_root = eig.map(|l| 1.0 / l.sqrt());
        let w: Vec<SymMatrix> = basis
            .iter()
            .map(|q| q.congruence(inv_root.as_matrix()))
            .collect();
        let k = basis.len();
        let metric = Matrix::from_fn(k, k, |i, j| w[i].dot(&w[j]));
        (grad, metric)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fisher-preconditioned descent with Armijo backtracking. Steps that would
/// push `λ_min(T)` below the floor are rejected like non-decreasing ones.
fn descend(p: &Problem<'_>, init: &SymMatrix, opts: &DescentOptions) -> Result<SolveReport> {
    let scale = scale_of(p.t_hat);
    let floor = opts.pd_floor * scale;
    let mut c = p.l.coords(init)?;
    let mut t = p.l.from_coords(&c)?;
    let defect = t.sub(init).frobenius_norm();
    if defect > 1e-10 * init.frobenius_norm().max(1.0) {
        return Err(CovError::InitInfeasible(format!(
            "initial point lies {defect:e} away from the structure"
        )));
    }
    let mut cur = p
        .eval(&t, floor)?
        .ok_or_else(|| CovError::InitInfeasible("initial point is not positive definite".into()))?;

    let mut status = SolveStatus::MaxIters;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..=opts.max_iters {
        let (grad, metric) = p.gradient_and_metric(&cur.eig);
        grad_norm = norm2(&grad);
        iterations = it;
        if grad_norm <= opts.grad_tol * scale {
            status = SolveStatus::Converged;
            break;
        }
        if it == opts.max_iters {
            break;
        }
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let dir = cholesky_solve(&metric, &neg).unwrap_or(neg);
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-16 {
            let trial: Vec<f64> = c.iter().zip(&dir).map(|(ci, di)| ci + step * di).collect();
            let tt = p.l.from_coords(&trial)?;
            if let Some(ev) = p.eval(&tt, floor)? {
                if ev.value <= cur.value + opts.armijo * step * slope {
                    accepted = Some((trial, tt, ev));
                    break;
                }
            }
            step *= opts.shrink;
        }
        match accepted {
            Some((nc, nt, ev)) => {
                c = nc;
                t = nt;
                cur = ev;
            }
            None => {
                status = SolveStatus::Stalled;
                break;
            }
        }
    }
    Ok(SolveReport {
        t_star: t,
        objective: cur.value,
        iterations,
        primal_residual: 0.0,
        dual_residual: grad_norm,
        status,
    })
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

/// Likelihood objective `log|T| + trace(T̂ T⁻¹)`.
pub fn ml_objective(t: &SymMatrix, t_hat: &SymMatrix) -> Result<f64> {
    likelihood_objective(t, t_hat)
}

/// `∂f/∂c_k = trace((T⁻¹ − T⁻¹T̂T⁻¹) Q_k)` in the coordinates of `l`.
pub fn ml_gradient(t: &SymMatrix, t_hat: &SymMatrix, l: &LinearStructure) -> Result<Vec<f64>> {
    check_dims(t_hat, l)?;
    let eig = sym_eig(t)?;
    if eig.min() <= PD_TOL * t.frobenius_norm() {
        return Err(CovError::SingularModel { min_eig: eig.min() });
    }
    let p = Problem {
        kind: Objective::Likelihood,
        t_hat,
        t_hat_inv: None,
        l,
    };
    Ok(p.gradient_and_metric(&eig).0)
}

/// `P_L(T̂) + (λ + shift) P_L(I)` with the shift making the result
/// positive definite, `λ = ridge * trace(T̂)/n`.
pub fn default_ml_init(t_hat: &SymMatrix, l: &LinearStructure, ridge: f64) -> Result<SymMatrix> {
    check_dims(t_hat, l)?;
    let base = l.project(t_hat)?;
    let dir = l.project(&SymMatrix::identity(l.n()))?;
    let dir_min = sym_eig(&dir)?.min();
    if dir_min <= 0.0 {
        return Err(CovError::InitInfeasible(
            "structure has no positive definite ridge direction; supply an initial point".into(),
        ));
    }
    let lambda = ridge * t_hat.trace() / t_hat.n() as f64;
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(CovError::InitInfeasible(
            "data covariance has zero trace".into(),
        ));
    }
    let shift = (-sym_eig(&base)?.min() / dir_min).max(0.0);
    Ok(base.add(&dir.scale(lambda + shift)))
}

/// Maximum-likelihood descent from a caller-supplied strictly admissible start.
pub fn solve_ml_from(
    t_hat: &SymMatrix,
    l: &LinearStructure,
    init: &SymMatrix,
    opts: &DescentOptions,
) -> Result<SolveReport> {
    check_dims(t_hat, l)?;
    check_dims(init, l)?;
    let p = Problem {
        kind: Objective::Likelihood,
        t_hat,
        t_hat_inv: None,
        l,
    };
    descend(&p, init, opts)
}

#[derive(Debug, Clone)]
pub struct StartOutcome {
    /// Ridge multiplier of the start, or `None` for a random start.
    pub ridge: Option<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct MlSolution {
    pub report: SolveReport,
    /// Every start in the order it was run; disagreement between converged
    /// starts indicates multiple local optima.
    pub starts: Vec<StartOutcome>,
}

impl MlSolution {
    /// Spread of objective values among converged starts.
    pub fn converged_spread(&self) -> Option<f64> {
        let vals: Vec<f64> = self
            .starts
            .iter()
            .filter(|s| s.status == SolveStatus::Converged)
            .map(|s| s.objective)
            .collect();
        if vals.is_empty() {
            return None;
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(hi - lo)
    }
}

/// Random strictly positive definite Toeplitz starts: a few random spectral
/// lines plus a white floor, scaled to the data power.
pub fn random_toeplitz_starts(t_hat: &SymMatrix, count: usize, seed: u64) -> Vec<SymMatrix> {
    let n = t_hat.n();
    let power = (t_hat.trace() / n as f64).max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let lines: Vec<(f64, f64)> = (0..3)
                .map(|_| (rng.gen_range(0.0..std::f64::consts::PI), rng.gen::<f64>()))
                .collect();
            let floor = rng.gen_range(0.05..0.5);
            let total: f64 = lines.iter().map(|l| l.1).sum::<f64>() + floor;
            let r: Vec<f64> = (0..n)
                .map(|k| {
                    let s: f64 = lines.iter().map(|(w, a)| a * (w * k as f64).cos()).sum();
                    power * (s + if k == 0 { floor } else { 0.0 }) / total
                })
                .collect();
            SymMatrix::from_fn(n, |i, j| r[j - i])
        })
        .collect()
}

/// Maximum-likelihood estimate with a fixed multi-start over ridge levels
/// (plus any `extra` starts), keeping the best objective. Converged starts
/// take precedence over non-converged ones.
pub fn solve_ml(
    t_hat: &SymMatrix,
    l: &LinearStructure,
    extra: &[SymMatrix],
    opts: &DescentOptions,
) -> Result<MlSolution> {
    check_dims(t_hat, l)?;
    let mut starts = Vec::new();
    let mut best: Option<SolveReport> = None;
    let inits = ML_RIDGES
        .iter()
        .map(|&r| (Some(r), default_ml_init(t_hat, l, r)))
        .chain(extra.iter().map(|s| (None, Ok(s.clone()))));
    for (ridge, init) in inits {
        let rep = solve_ml_from(t_hat, l, &init?, opts)?;
        starts.push(StartOutcome {
            ridge,
            objective: rep.objective,
            status: rep.status,
            iterations: rep.iterations,
        });
        let better = match &best {
            None => true,
            Some(b) => {
                let rc = rep.status == SolveStatus::Converged;
                let bc = b.status == SolveStatus::Converged;
                (rc && !bc) || (rc == bc && rep.objective < b.objective)
            }
        };
        if better {
            best = Some(rep);
        }
    }
    Ok(MlSolution {
        report: best.expect("at least one start"),
        starts,
    })
}

/// `min −log|T| + trace(T T̂⁻¹)` over admissible `T`; convex, requires `T̂ ≻ 0`.
pub fn solve_kl(
    t_hat: &SymMatrix,
    l: &LinearStructure,
    opts: &DescentOptions,
) -> Result<SolveReport> {
    check_dims(t_hat, l)?;
    let e = sym_eig(t_hat)?;
    if e.min() <= PD_TOL * t_hat.frobenius_norm() {
        return Err(CovError::SingularData { min_eig: e.min() });
    }
    let p = Problem {
        kind: Objective::Kl,
        t_hat,
        t_hat_inv: Some(e.map(|v| 1.0 / v)),
        l,
    };
    let init = default_ml_init(t_hat, l, 1e-3)?;
    descend(&p, &init, opts)
}
