mod common;

use std::f64::consts::PI;

use common::rng;
use covest::experiment::{paper_signal, sample_covariance};
use covest::spectral::{burg_ar, levinson, levinson_truncating, me_spectrum, ARModel};
use covest::structure::ToeplitzParams;
use covest::CovError;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Simulates `x_t = -Σ a_k x_{t-k} + e_t` after a burn-in.
fn simulate(a: &[f64], len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let burn = 500;
    let mut x = vec![0.0; len + burn];
    for t in 0..x.len() {
        let mut v: f64 = r.sample(StandardNormal);
        for (k, ak) in a.iter().enumerate() {
            if t > k {
                v -= ak * x[t - 1 - k];
            }
        }
        x[t] = v;
    }
    x.split_off(burn)
}

/// Roots of `z^p + a_1 z^{p-1} + … + a_p` by Durand-Kerner.
fn poly_roots(a: &[f64]) -> Vec<Complex64> {
    let p = a.len();
    let eval = |z: Complex64| {
        let mut acc = Complex64::new(1.0, 0.0);
        for &c in a {
            acc = acc * z + c;
        }
        acc
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..p).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let prev = roots.clone();
        for i in 0..p {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..p {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
        }
        let change: f64 = roots.iter().zip(&prev).map(|(a, b)| (a - b).norm()).sum();
        if change < 1e-14 {
            break;
        }
    }
    roots
}

/// Yule-Walker coefficients by a dense solve of the normal equations.
fn yule_walker(r: &[f64]) -> Vec<f64> {
    let p = r.len() - 1;
    let m = covest::Matrix::from_fn(p, p, |i, j| r[i.abs_diff(j)]);
    let inv = common::inverse(&m);
    let rhs: Vec<f64> = (1..=p).map(|k| -r[k]).collect();
    inv.mul_vec(&rhs)
}

#[test]
fn burg_recovers_ar2_coefficients() {
    let a = [-1.2, 0.8];
    let x = simulate(&a, 4096, 21);
    let m = burg_ar(&[x], 2).unwrap();
    assert!((m.coeffs[0] - a[0]).abs() < 0.05, "{:?}", m.coeffs);
    assert!((m.coeffs[1] - a[1]).abs() < 0.05, "{:?}", m.coeffs);
    assert!((m.noise_var - 1.0).abs() < 0.1);
}

#[test]
fn burg_uses_every_record() {
    let a = [-1.2, 0.8];
    let recs: Vec<Vec<f64>> = (0..8).map(|s| simulate(&a, 256, 100 + s)).collect();
    let m = burg_ar(&recs, 2).unwrap();
    assert!((m.coeffs[0] - a[0]).abs() < 0.06 && (m.coeffs[1] - a[1]).abs() < 0.06);
    assert!(burg_ar(&[vec![0.0; 16]], 2).is_err());
}

#[test]
fn burg_models_are_minimum_phase() {
    for seed in 0..5 {
        let x = simulate(&[-0.5, 0.3, -0.2], 64, 200 + seed);
        let m = burg_ar(&[x], 8).unwrap();
        assert!(m.reflections.iter().all(|k| k.abs() <= 1.0));
        for z in poly_roots(&m.coeffs) {
            assert!(z.norm() < 1.0, "root {z}");
        }
    }
    for psi in [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0] {
        let m = burg_ar(paper_signal(psi).records(), 10).unwrap();
        for z in poly_roots(&m.coeffs) {
            assert!(z.norm() < 1.0 + 1e-9);
        }
    }
}

#[test]
fn levinson_roundtrip_and_yule_walker_oracle() {
    let mut r = rng(22);
    for p in 1..8 {
        let ks: Vec<f64> = (0..p).map(|_| r.gen_range(-0.9..0.9)).collect();
        let model = ARModel::from_reflections(&ks, 1.7);
        let cov = model.autocovariance(p + 1);
        let back = levinson(&ToeplitzParams::new(cov.clone())).unwrap();
        for (x, y) in back.coeffs.iter().zip(&model.coeffs) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in back.reflections.iter().zip(&ks) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((back.noise_var - 1.7).abs() < 1e-10);
        let yw = yule_walker(&cov);
        for (x, y) in yw.iter().zip(&back.coeffs) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn autocovariance_extension_follows_the_recursion() {
    let model = ARModel::from_reflections(&[0.5, -0.3], 1.0);
    let r = model.autocovariance(10);
    for m in 3..10 {
        let pred = -(model.coeffs[0] * r[m - 1] + model.coeffs[1] * r[m - 2]);
        assert!((r[m] - pred).abs() < 1e-12);
    }
}

#[test]
fn spectrum_integrates_to_the_variance() {
    let model = ARModel::from_reflections(&[0.6, -0.4, 0.2], 0.8);
    let r0 = model.autocovariance(1)[0];
    let g = me_spectrum(&model, 4000);
    let h = PI / 4000.0;
    let integral: f64 = g.psd.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
    assert!((integral / PI - r0).abs() < 1e-6 * r0);
}

#[test]
fn ar2_peak_location() {
    // A(z) = 1 + a1 z^-1 + a2 z^-2 peaks where cos ω = -a1 (1 + a2) / (4 a2)
    let (rho, theta): (f64, f64) = (0.95, 0.3 * PI);
    let a1 = -2.0 * rho * theta.cos();
    let a2 = rho * rho;
    let model = ARModel {
        coeffs: vec![a1, a2],
        noise_var: 1.0,
        reflections: vec![],
    };
    let g = me_spectrum(&model, 200);
    let w = (-a1 * (1.0 + a2) / (4.0 * a2)).acos();
    let want = (w / g.step()).round() as usize;
    assert_eq!(g.top_peak().unwrap().index, want);
    assert_eq!(g.peaks.len(), 1);
}

#[test]
fn levinson_flags_line_spectra() {
    let r: Vec<f64> = (0..6).map(|k| (0.3 * PI * k as f64).cos()).collect();
    assert!(matches!(
        levinson(&ToeplitzParams::new(r.clone())),
        Err(CovError::NotPositiveDefinite { .. })
    ));
    let t = levinson_truncating(&ToeplitzParams::new(r)).unwrap();
    assert_eq!(t.truncated_at, Some(2));
    assert_eq!(me_spectrum(&t.model, 200).top_peak().unwrap().index, 60);
}

#[test]
fn paper_burg_spectra() {
    let tops: Vec<usize> = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]
        .iter()
        .map(|&psi| {
            let m = burg_ar(paper_signal(psi).records(), 10).unwrap();
            me_spectrum(&m, 200).top_peak().unwrap().index
        })
        .collect();
    assert_eq!(tops, vec![63, 50, 34]);
    let t_hat = sample_covariance(&paper_signal(PI / 4.0));
    assert_eq!(t_hat.n(), 11);
}
