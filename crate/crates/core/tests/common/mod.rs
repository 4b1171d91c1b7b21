#![allow(dead_code)]

use covest::{Matrix, SymMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `G G' / n + floor I` with Gaussian `G`.
pub fn random_spd(rng: &mut impl Rng, n: usize, floor: f64) -> SymMatrix {
    let g = gaussian(rng, n, n);
    SymMatrix::from_matrix(&g.matmul(&g.transpose()).scale(1.0 / n as f64))
        .unwrap()
        .shift(floor)
}

pub fn random_sym(rng: &mut impl Rng, n: usize) -> SymMatrix {
    let g = gaussian(rng, n, n);
    SymMatrix::from_matrix(&g.add(&g.transpose()).scale(0.5)).unwrap()
}

/// Orthogonal matrix from Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Matrix {
    let g = gaussian(rng, n, n);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| g[(i, j)]).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|a| a / norm).collect());
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn toeplitz(r: &[f64]) -> SymMatrix {
    let n = r.len();
    SymMatrix::from_fn(n, |i, j| r[j - i])
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut m = a.clone();
    let mut inv = Matrix::identity(n);
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[(i, c)].abs().total_cmp(&m[(j, c)].abs()))
            .unwrap();
        for k in 0..n {
            let (x, y) = (m[(c, k)], m[(p, k)]);
            m[(c, k)] = y;
            m[(p, k)] = x;
            let (x, y) = (inv[(c, k)], inv[(p, k)]);
            inv[(c, k)] = y;
            inv[(p, k)] = x;
        }
        let d = m[(c, c)];
        for k in 0..n {
            m[(c, k)] /= d;
            inv[(c, k)] /= d;
        }
        for i in 0..n {
            if i != c {
                let f = m[(i, c)];
                for k in 0..n {
                    m[(i, k)] -= f * m[(c, k)];
                    inv[(i, k)] -= f * inv[(c, k)];
                }
            }
        }
    }
    inv
}

/// Principal square root of an SPD matrix by the Denman-Beavers iteration.
pub fn sqrtm_db(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut y = a.clone();
    let mut z = Matrix::identity(n);
    for _ in 0..100 {
        let yi = inverse(&y);
        let zi = inverse(&z);
        let y_next = y.add(&zi).scale(0.5);
        let z_next = z.add(&yi).scale(0.5);
        let change = y_next.sub(&y).frobenius_norm();
        y = y_next;
        z = z_next;
        if change <= 1e-15 * y.frobenius_norm() {
            break;
        }
    }
    y.add(&y.transpose()).scale(0.5)
}

/// Closed-form transport cost and optimal coupling from the Denman-Beavers roots.
pub fn coupling_oracle(t: &SymMatrix, t_hat: &SymMatrix) -> (f64, Matrix) {
    let r = sqrtm_db(t_hat.as_matrix());
    let m = r.matmul(t.as_matrix()).matmul(&r);
    let root_m = sqrtm_db(&m.add(&m.transpose()).scale(0.5));
    let cost = t.trace() + t_hat.trace() - 2.0 * root_m.trace();
    let s = inverse(&r).matmul(&root_m).matmul(&r);
    (cost, s)
}
