//! Linear matrix structures: the symmetric Toeplitz subspace and a generic
//! orthonormal-basis hook for other linearly constrained covariance classes.

use crate::error::{CovError, Result};
use crate::matops::{min_eig, SymMatrix};

/// Residual norm (relative to the candidate's own norm) below which a
/// spanning-set element is considered linearly dependent and dropped.
pub const GRAM_SCHMIDT_DROP_TOL: f64 = 1e-10;

/// Tolerance on diagonal constancy accepted by [`matrix_to_params`].
pub const TOEPLITZ_TOL: f64 = 1e-10;

/// A subspace of symmetric matrices described by a trace-orthonormal basis.
#[derive(Debug, Clone)]
pub struct LinearStructure {
    n: usize,
    basis: Vec<SymMatrix>,
    toeplitz: bool,
}

impl LinearStructure {
    /// Builds a structure from an arbitrary spanning set, orthonormalizing it
    /// with modified Gram-Schmidt under the trace inner product.
    pub fn from_spanning_set(n: usize, spanning: &[SymMatrix]) -> Result<Self> {
        if n == 0 {
            return Err(CovError::Empty);
        }
        let mut basis: Vec<SymMatrix> = Vec::new();
        for q in spanning {
            if q.n() != n {
                return Err(CovError::DimensionMismatch {
                    expected: n,
                    got: q.n(),
                });
            }
            let original = q.frobenius_norm();
            let mut v = q.clone();
            // two passes keep orthogonality at the 1e-15 level
            for _ in 0..2 {
                for b in &basis {
                    let c = v.dot(b);
                    v = v.sub(&b.scale(c));
                }
            }
            let norm = v.frobenius_norm();
            if norm <= GRAM_SCHMIDT_DROP_TOL * original.max(1.0) {
                continue;
            }
            basis.push(v.scale(1.0 / norm));
        }
        if basis.is_empty() {
            return Err(CovError::InvalidArgument(
                "spanning set has no nonzero element".into(),
            ));
        }
        Ok(LinearStructure {
            n,
            basis,
            toeplitz: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[SymMatrix] {
        &self.basis
    }

    pub fn is_toeplitz(&self) -> bool {
        self.toeplitz
    }

    fn check_dim(&self, a: &SymMatrix) -> Result<()> {
        if a.n() != self.n {
            return Err(CovError::DimensionMismatch {
                expected: self.n,
                got: a.n(),
            });
        }
        Ok(())
    }

    /// Coordinates `trace(A Q_k)` of the orthogonal projection of `A`.
    pub fn coords(&self, a: &SymMatrix) -> Result<Vec<f64>> {
        self.check_dim(a)?;
        Ok(self.basis.iter().map(|q| a.dot(q)).collect())
    }

    /// `Σ c_k Q_k`.
    pub fn from_coords(&self, c: &[f64]) -> Result<SymMatrix> {
        if c.len() != self.dim() {
            return Err(CovError::DimensionMismatch {
                expected: self.dim(),
                got: c.len(),
            });
        }
        let mut out = SymMatrix::zeros(self.n);
        for (q, &ck) in self.basis.iter().zip(c) {
            if ck != 0.0 {
                out = out.add(&q.scale(ck));
            }
        }
        Ok(out)
    }

    /// Orthogonal (Frobenius-nearest) projection onto the subspace.
    pub fn project(&self, a: &SymMatrix) -> Result<SymMatrix> {
        if self.toeplitz {
            self.check_dim(a)?;
            return Ok(toeplitz_average(a));
        }
        self.from_coords(&self.coords(a)?)
    }

    /// Admissibility against this structure: distance to the subspace and
    /// smallest eigenvalue, both compared at `tol * max(||T||_F, 1)`.
    pub fn admissibility(&self, t: &SymMatrix, tol: f64) -> Result<Admissibility> {
        let defect = t.sub(&self.project(t)?).frobenius_norm();
        let lo = min_eig(t)?;
        let scale = t.frobenius_norm().max(1.0);
        Ok(Admissibility {
            toeplitz_defect: defect,
            min_eig: lo,
            admissible: defect <= tol * scale && lo >= -tol * scale,
        })
    }
}

/// Symmetric Toeplitz structure of size `n`: `Q_0 = I/√n` and, for `k ≥ 1`,
/// ones on the ±k-th diagonals scaled to unit Frobenius norm.
pub fn toeplitz_structure(n: usize) -> LinearStructure {
    assert!(n >= 1, "toeplitz_structure requires n >= 1");
    let basis = (0..n)
        .map(|k| {
            let count = if k == 0 { n } else { 2 * (n - k) };
            let w = 1.0 / (count as f64).sqrt();
            SymMatrix::from_fn(n, |i, j| if j - i == k { w } else { 0.0 })
        })
        .collect();
    LinearStructure {
        n,
        basis,
        toeplitz: true,
    }
}

/// Per-diagonal averaging; equals projection onto the Toeplitz subspace.
fn toeplitz_average(a: &SymMatrix) -> SymMatrix {
    let n = a.n();
    let means: Vec<f64> = (0..n)
        .map(|k| (0..n - k).map(|i| a.get(i, i + k)).sum::<f64>() / (n - k) as f64)
        .collect();
    SymMatrix::from_fn(n, |i, j| means[j - i])
}

/// Autocovariance sequence `(r_0, …, r_{n-1})` defining a symmetric Toeplitz matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzParams {
    pub r: Vec<f64>,
}

impl ToeplitzParams {
    pub fn new(r: Vec<f64>) -> Self {
        ToeplitzParams { r }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

pub fn params_to_matrix(p: &ToeplitzParams) -> Result<SymMatrix> {
    if p.is_empty() {
        return Err(CovError::Empty);
    }
    Ok(SymMatrix::from_fn(p.len(), |i, j| p.r[j - i]))
}

/// Reads the first row of an exactly Toeplitz matrix.
pub fn matrix_to_params(t: &SymMatrix) -> Result<ToeplitzParams> {
    let n = t.n();
    let scale = t.as_matrix().max_abs().max(1.0);
    let mut defect: f64 = 0.0;
    for k in 0..n {
        let first = t.get(0, k);
        for i in 1..n - k {
            defect = defect.max((t.get(i, i + k) - first).abs());
        }
    }
    if defect > TOEPLITZ_TOL * scale {
        return Err(CovError::NotToeplitz { defect });
    }
    Ok(ToeplitzParams::new((0..n).map(|k| t.get(0, k)).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub toeplitz_defect: f64,
    pub min_eig: f64,
    pub admissible: bool,
}

/// Membership test for the PSD Toeplitz set.
pub fn is_admissible(t: &SymMatrix, tol: f64) -> Result<Admissibility> {
    toeplitz_structure(t.n()).admissibility(t, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toeplitz_basis_small_sizes() {
        let s = toeplitz_structure(1);
        assert_eq!(s.dim(), 1);
        assert_eq!(s.basis()[0].get(0, 0), 1.0);

        let s = toeplitz_structure(2);
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(s.basis()[0], SymMatrix::diag(&[h, h]));
        assert_eq!(
            s.basis()[1],
            SymMatrix::from_rows(&[vec![0.0, h], vec![h, 0.0]]).unwrap()
        );
    }

    #[test]
    fn basis_is_orthonormal() {
        let s = toeplitz_structure(6);
        for (i, a) in s.basis().iter().enumerate() {
            for (j, b) in s.basis().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.dot(b) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_matches_coordinates_path() {
        let s = toeplitz_structure(4);
        let a = SymMatrix::from_fn(4, |i, j| (i * 7 + j * 3) as f64 * 0.1 - 0.4);
        let via_coords = s.from_coords(&s.coords(&a).unwrap()).unwrap();
        let direct = s.project(&a).unwrap();
        assert!(via_coords.sub(&direct).frobenius_norm() < 1e-13);
    }

    #[test]
    fn project_two_by_two_example() {
        let s = toeplitz_structure(2);
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let p = s.project(&a).unwrap();
        assert_eq!(p, SymMatrix::from_fn(2, |_, _| 2.5));
    }

    #[test]
    fn project_rejects_wrong_dimension() {
        let s = toeplitz_structure(3);
        assert!(matches!(
            s.project(&SymMatrix::identity(2)),
            Err(CovError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn params_examples() {
        let t = params_to_matrix(&ToeplitzParams::new(vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(t, SymMatrix::identity(3));
        let t = params_to_matrix(&ToeplitzParams::new(vec![2.0, 1.0])).unwrap();
        assert_eq!(
            t,
            SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()
        );
        assert_eq!(matrix_to_params(&t).unwrap().r, vec![2.0, 1.0]);
    }

    #[test]
    fn matrix_to_params_rejects_non_toeplitz() {
        let a = SymMatrix::diag(&[1.0, 2.0]);
        assert!(matches!(
            matrix_to_params(&a),
            Err(CovError::NotToeplitz { .. })
        ));
    }

    #[test]
    fn admissibility_examples() {
        let a = is_admissible(&SymMatrix::identity(3), 1e-6).unwrap();
        assert!(a.admissible);
        assert_eq!(a.toeplitz_defect, 0.0);
        assert!((a.min_eig - 1.0).abs() < 1e-14);

        let b = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let a = is_admissible(&b, 1e-6).unwrap();
        assert_eq!(a.toeplitz_defect, 0.0);
        assert!((a.min_eig + 1.0).abs() < 1e-14);
        assert!(!a.admissible);
    }

    #[test]
    fn gram_schmidt_drops_dependent_elements() {
        let i = SymMatrix::identity(3);
        let e = SymMatrix::diag(&[1.0, 0.0, 0.0]);
        let s = LinearStructure::from_spanning_set(3, &[i.clone(), i.scale(2.0), e]).unwrap();
        assert_eq!(s.dim(), 2);
        let g = s.basis()[0].dot(&s.basis()[1]);
        assert!(g.abs() < 1e-14);
    }
}
