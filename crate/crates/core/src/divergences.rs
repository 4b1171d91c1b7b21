//! Distances, divergences and quadratic metrics between zero-mean Gaussian
//! covariances, and the closed-form optimal transport coupling.
//!
//! Conventions: `t` is the model covariance `T`, `t_hat` the data covariance
//! `T̂`. Tolerances scale with `max(||T||_F, ||T̂||_F, 1)`.

use crate::error::{CovError, Result};
use crate::matops::{sqrtm_psd, sym_eig, EigDecomp, Matrix, SymMatrix, PD_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Likelihood,
    Kl,
    LogDeviation,
    Hellinger,
    Wasserstein2,
    RaoQuadratic,
    FisherQuadratic,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Likelihood => "likelihood",
            MetricKind::Kl => "kl",
            MetricKind::LogDeviation => "log_deviation",
            MetricKind::Hellinger => "hellinger",
            MetricKind::Wasserstein2 => "wasserstein2",
            MetricKind::RaoQuadratic => "rao_quadratic",
            MetricKind::FisherQuadratic => "fisher_quadratic",
        }
    }
}

/// A nonnegative, finite dissimilarity value tagged with its kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub kind: MetricKind,
}

impl MetricValue {
    fn new(kind: MetricKind, raw: f64) -> Self {
        debug_assert!(raw.is_finite(), "{} evaluated to {raw}", kind.name());
        // roundoff can push exact-zero cases to -1e-16
        MetricValue {
            value: raw.max(0.0),
            kind,
        }
    }
}

/// Which argument plays the role of the first density in `KL(p‖q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlDirection {
    /// `KL(p‖p̂)`: the model density `p ~ N(0, T)` comes first.
    ModelFirst,
    /// `KL(p̂‖p)`: the data density comes first; equals the likelihood divergence.
    DataFirst,
}

fn check_same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(CovError::DimensionMismatch {
            expected: a.n(),
            got: b.n(),
        });
    }
    Ok(())
}

fn is_singular(e: &EigDecomp, a: &SymMatrix) -> bool {
    e.min() <= PD_TOL * a.frobenius_norm()
}

fn logdet_or(a: &SymMatrix, err: fn(f64) -> CovError) -> Result<(f64, EigDecomp)> {
    let e = sym_eig(a)?;
    if is_singular(&e, a) {
        return Err(err(e.min()));
    }
    Ok((e.values.iter().map(|l| l.ln()).sum(), e))
}

fn model_err(min_eig: f64) -> CovError {
    CovError::SingularModel { min_eig }
}

fn data_err(min_eig: f64) -> CovError {
    CovError::SingularData { min_eig }
}

/// `trace(A B^{-1})` given the eigendecomposition of `B`.
fn trace_a_binv(a: &SymMatrix, b_eig: &EigDecomp) -> f64 {
    let inv = b_eig.map(|l| 1.0 / l);
    a.dot(&inv)
}

/// Likelihood objective `log|T| + trace(T̂ T^{-1})`.
///
/// Well defined for singular `T̂`; it differs from twice the likelihood
/// divergence by the constant `-log|T̂| - n`.
pub fn likelihood_objective(t: &SymMatrix, t_hat: &SymMatrix) -> Result<f64> {
    check_same_dim(t, t_hat)?;
    let (logdet_t, e) = logdet_or(t, model_err)?;
    Ok(logdet_t + trace_a_binv(t_hat, &e))
}

/// Likelihood divergence `½(log|T| − log|T̂| + trace(T̂T⁻¹) − n)`.
///
/// Undefined (`SingularData`) when `T̂` is singular; use
/// [`likelihood_objective`] for optimization in that case.
pub fn likelihood_divergence(t: &SymMatrix, t_hat: &SymMatrix) -> Result<MetricValue> {
    check_same_dim(t, t_hat)?;
    let (logdet_t, e) = logdet_or(t, model_err)?;
    let (logdet_hat, _) = logdet_or(t_hat, data_err)?;
    let n = t.n() as f64;
    let v = 0.5 * (logdet_t - logdet_hat + trace_a_binv(t_hat, &e) - n);
    Ok(MetricValue::new(MetricKind::Likelihood, v))
}

type ErrFn = fn(f64) -> CovError;

/// Kullback-Leibler divergence between `N(0, T)` and `N(0, T̂)`.
pub fn kl_gaussian(
    t: &SymMatrix,
    t_hat: &SymMatrix,
    direction: KlDirection,
) -> Result<MetricValue> {
    check_same_dim(t, t_hat)?;
    // KL(N(0,A) ‖ N(0,B)) = ½(log|B| − log|A| + tr(A B⁻¹) − n)
    let (a, b, a_err, b_err): (_, _, ErrFn, ErrFn) = match direction {
        KlDirection::ModelFirst => (t, t_hat, model_err, data_err),
        KlDirection::DataFirst => (t_hat, t, data_err, model_err),
    };
    let (logdet_b, eb) = logdet_or(b, b_err)?;
    let (logdet_a, _) = logdet_or(a, a_err)?;
    let n = t.n() as f64;
    let v = 0.5 * (logdet_b - logdet_a + trace_a_binv(a, &eb) - n);
    Ok(MetricValue::new(MetricKind::Kl, v))
}

fn inv_sqrt_model(t: &SymMatrix) -> Result<SymMatrix> {
    let e = sym_eig(t)?;
    if is_singular(&e, t) {
        return Err(model_err(e.min()));
    }
    Ok(e.map(|l| 1.0 / l.sqrt()))
}

/// `Δ_T = T^{-1/2} Δ T^{-1/2}`.
pub fn normalized_perturbation(t: &SymMatrix, delta: &SymMatrix) -> Result<SymMatrix> {
    check_same_dim(t, delta)?;
    let w = inv_sqrt_model(t)?;
    Ok(delta.congruence(w.as_matrix()))
}

/// Rao quadratic form `‖T^{-1/2} Δ T^{-1/2}‖_F²`.
pub fn rao_quadratic(t: &SymMatrix, delta: &SymMatrix) -> Result<MetricValue> {
    let d = normalized_perturbation(t, delta)?;
    let f = d.frobenius_norm();
    Ok(MetricValue::new(MetricKind::RaoQuadratic, f * f))
}

/// Fisher information quadratic form of the density perturbation induced by
/// `T → T + εΔ`, in closed form `det(I − ε²Δ_T²)^{-1/2} − 1`.
pub fn fisher_quadratic_gaussian(
    t: &SymMatrix,
    delta: &SymMatrix,
    eps: f64,
) -> Result<MetricValue> {
    let d = normalized_perturbation(t, delta)?;
    let norm = eps.abs() * d.frobenius_norm();
    if norm >= 1.0 {
        return Err(CovError::PerturbationTooLarge { norm });
    }
    let e = sym_eig(&d)?;
    let half_log = -0.5
        * e.values
            .iter()
            .map(|&mu| (-(eps * mu) * (eps * mu)).ln_1p())
            .sum::<f64>();
    Ok(MetricValue::new(
        MetricKind::FisherQuadratic,
        half_log.exp_m1(),
    ))
}

/// Log-deviation `‖log(T̂^{-1/2} T T̂^{-1/2})‖_F`, the Rao geodesic distance.
pub fn log_deviation(t: &SymMatrix, t_hat: &SymMatrix) -> Result<MetricValue> {
    check_same_dim(t, t_hat)?;
    let e_hat = sym_eig(t_hat)?;
    if is_singular(&e_hat, t_hat) {
        return Err(data_err(e_hat.min()));
    }
    let e_t = sym_eig(t)?;
    if is_singular(&e_t, t) {
        return Err(model_err(e_t.min()));
    }
    let w = e_hat.map(|l| 1.0 / l.sqrt());
    let c = t.congruence(w.as_matrix());
    let ec = sym_eig(&c)?;
    if ec.min() <= 0.0 {
        return Err(model_err(ec.min()));
    }
    let s: f64 = ec.values.iter().map(|l| l.ln().powi(2)).sum();
    Ok(MetricValue::new(MetricKind::LogDeviation, s.sqrt()))
}

/// `(T̂^{1/2} T T̂^{1/2})^{1/2}` together with `T̂^{1/2}`.
fn fidelity_root(t: &SymMatrix, t_hat: &SymMatrix) -> Result<(SymMatrix, SymMatrix)> {
    check_same_dim(t, t_hat)?;
    let root_hat = sqrtm_psd(t_hat, 0.0)?;
    // validates T as a covariance
    sqrtm_psd(t, 0.0)?;
    let m = t.congruence(root_hat.as_matrix());
    Ok((sqrtm_psd(&m, 0.0)?, root_hat))
}

/// Bures/Hellinger distance `(trace(T + T̂ − 2(T̂^{1/2} T T̂^{1/2})^{1/2}))^{1/2}`.
/// Singular arguments are fine.
pub fn bures_hellinger(t: &SymMatrix, t_hat: &SymMatrix) -> Result<MetricValue> {
    let (root_m, _) = fidelity_root(t, t_hat)?;
    let sq = (t.trace() + t_hat.trace() - 2.0 * root_m.trace()).max(0.0);
    Ok(MetricValue::new(MetricKind::Hellinger, sq.sqrt()))
}

#[derive(Debug, Clone)]
pub struct Procrustes {
    pub distance: f64,
    pub u: Matrix,
}

/// Hellinger distance through its defining minimization over orthogonal `U`,
/// returning the minimizer `U = T^{-1/2} T̂^{-1/2} (T̂^{1/2} T T̂^{1/2})^{1/2}`.
pub fn hellinger_procrustes(t: &SymMatrix, t_hat: &SymMatrix) -> Result<Procrustes> {
    check_same_dim(t, t_hat)?;
    let e_t = sym_eig(t)?;
    if is_singular(&e_t, t) {
        return Err(model_err(e_t.min()));
    }
    let e_hat = sym_eig(t_hat)?;
    if is_singular(&e_hat, t_hat) {
        return Err(data_err(e_hat.min()));
    }
    let root_t = e_t.map(f64::sqrt);
    let inv_root_t = e_t.map(|l| 1.0 / l.sqrt());
    let root_hat = e_hat.map(f64::sqrt);
    let inv_root_hat = e_hat.map(|l| 1.0 / l.sqrt());
    let root_m = sqrtm_psd(&t.congruence(root_hat.as_matrix()), 0.0)?;
    let u = inv_root_t
        .matmul(inv_root_hat.as_matrix())
        .matmul(root_m.as_matrix());
    let distance = root_t.matmul(&u).sub(root_hat.as_matrix()).frobenius_norm();
    Ok(Procrustes { distance, u })
}

/// Optimal cross-correlation between `N(0,T)` and `N(0,T̂)` and its cost.
#[derive(Debug, Clone)]
pub struct CouplingSolution {
    /// `S = E(X Y')`.
    pub s: Matrix,
    /// Squared transport distance `trace(T + T̂ − S − S')`.
    pub cost: f64,
}

/// Closed-form optimal coupling `S₀ = T̂^{-1/2}(T̂^{1/2} T T̂^{1/2})^{1/2} T̂^{1/2}`.
///
/// Requires `T̂` nonsingular; the transport SDP solver handles the singular case.
pub fn optimal_coupling(t: &SymMatrix, t_hat: &SymMatrix) -> Result<CouplingSolution> {
    check_same_dim(t, t_hat)?;
    let e_hat = sym_eig(t_hat)?;
    if is_singular(&e_hat, t_hat) {
        return Err(data_err(e_hat.min()));
    }
    sqrtm_psd(t, 0.0)?;
    let root_hat = e_hat.map(f64::sqrt);
    let inv_root_hat = e_hat.map(|l| 1.0 / l.sqrt());
    let root_m = sqrtm_psd(&t.congruence(root_hat.as_matrix()), 0.0)?;
    let s = inv_root_hat
        .matmul(root_m.as_matrix())
        .matmul(root_hat.as_matrix());
    let cost = (t.trace() + t_hat.trace() - 2.0 * s.trace()).max(0.0);
    Ok(CouplingSolution { s, cost })
}

/// Wasserstein-2 distance between `N(0,T)` and `N(0,T̂)` via the optimal coupling.
pub fn wasserstein2(t: &SymMatrix, t_hat: &SymMatrix) -> Result<MetricValue> {
    let c = optimal_coupling(t, t_hat)?;
    Ok(MetricValue::new(MetricKind::Wasserstein2, c.cost.sqrt()))
}

/// Smallest eigenvalue of the joint covariance `[[T, S], [S', T̂]]`.
pub fn joint_min_eig(t: &SymMatrix, s: &Matrix, t_hat: &SymMatrix) -> Result<f64> {
    let n = t.n();
    let mut z = Matrix::zeros(2 * n, 2 * n);
    z.set_block(0, 0, t.as_matrix());
    z.set_block(0, n, s);
    z.set_block(n, 0, &s.transpose());
    z.set_block(n, n, t_hat.as_matrix());
    Ok(sym_eig(&SymMatrix::from_matrix(&z)?)?.min())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> SymMatrix {
        SymMatrix::diag(&[v])
    }

    fn spd3() -> SymMatrix {
        SymMatrix::from_rows(&[
            vec![2.0, 0.3, -0.1],
            vec![0.3, 1.5, 0.2],
            vec![-0.1, 0.2, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn likelihood_scalar_and_identity() {
        let v = likelihood_divergence(&s(2.0), &s(1.0)).unwrap().value;
        assert!((v - 0.5 * (2f64.ln() + 0.5 - 1.0)).abs() < 1e-15);
        assert!((v - 0.096574).abs() < 1e-6);
        assert_eq!(likelihood_divergence(&spd3(), &spd3()).unwrap().value, 0.0);
    }

    #[test]
    fn likelihood_rejects_singular_arguments() {
        let sing = SymMatrix::diag(&[1.0, 0.0]);
        let id = SymMatrix::identity(2);
        assert!(matches!(
            likelihood_divergence(&sing, &id),
            Err(CovError::SingularModel { .. })
        ));
        assert!(matches!(
            likelihood_divergence(&id, &sing),
            Err(CovError::SingularData { .. })
        ));
        // the objective form stays finite
        assert!((likelihood_objective(&id, &sing).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kl_scalar_direction() {
        let v = kl_gaussian(&s(1.0), &s(2.0), KlDirection::ModelFirst)
            .unwrap()
            .value;
        assert!((v - 0.5 * (2f64.ln() + 0.5 - 1.0)).abs() < 1e-15);
        let w = kl_gaussian(&s(1.0), &s(2.0), KlDirection::DataFirst)
            .unwrap()
            .value;
        assert!((w - 0.5 * (-(2f64.ln()) + 2.0 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rao_examples() {
        let d = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, -1.0]]).unwrap();
        assert_eq!(
            rao_quadratic(&spd3(), &SymMatrix::zeros(3)).unwrap().value,
            0.0
        );
        let v = rao_quadratic(&SymMatrix::identity(2), &d).unwrap().value;
        assert!((v - 10.0).abs() < 1e-13);
        assert!((rao_quadratic(&s(4.0), &s(2.0)).unwrap().value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fisher_examples() {
        let d = SymMatrix::identity(3);
        assert_eq!(
            fisher_quadratic_gaussian(&spd3(), &d, 0.0).unwrap().value,
            0.0
        );
        let v = fisher_quadratic_gaussian(&s(1.0), &s(1.0), 0.5)
            .unwrap()
            .value;
        assert!((v - (0.75f64.powf(-0.5) - 1.0)).abs() < 1e-15);
        assert!((v - 0.154700).abs() < 1e-6);
        assert!(matches!(
            fisher_quadratic_gaussian(&s(1.0), &s(1.0), 1.0),
            Err(CovError::PerturbationTooLarge { .. })
        ));
    }

    #[test]
    fn log_deviation_examples() {
        assert!(log_deviation(&spd3(), &spd3()).unwrap().value < 1e-12);
        let e2 = std::f64::consts::E.powi(2);
        assert!((log_deviation(&s(e2), &s(1.0)).unwrap().value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hellinger_examples() {
        assert!(bures_hellinger(&spd3(), &spd3()).unwrap().value < 1e-7);
        assert!((bures_hellinger(&s(4.0), &s(1.0)).unwrap().value - 1.0).abs() < 1e-14);
        let a = SymMatrix::diag(&[1.0, 4.0]);
        let b = SymMatrix::diag(&[4.0, 1.0]);
        assert!((bures_hellinger(&a, &b).unwrap().value - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn hellinger_accepts_singular_inputs() {
        let a = SymMatrix::diag(&[1.0, 0.0]);
        let b = SymMatrix::diag(&[0.0, 1.0]);
        assert!((bures_hellinger(&a, &b).unwrap().value - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn procrustes_identity_case() {
        let p = hellinger_procrustes(&spd3(), &spd3()).unwrap();
        assert!(p.distance < 1e-7);
    }

    #[test]
    fn coupling_examples() {
        let c = optimal_coupling(&s(4.0), &s(1.0)).unwrap();
        assert!((c.s[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((c.cost - 1.0).abs() < 1e-14);
        let t = spd3();
        let c = optimal_coupling(&t, &t).unwrap();
        assert!(c.s.sub(t.as_matrix()).max_abs() < 1e-7);
        assert!(c.cost < 1e-7);
        assert!(matches!(
            optimal_coupling(&t, &SymMatrix::zeros(3)),
            Err(CovError::SingularData { .. })
        ));
    }
}
