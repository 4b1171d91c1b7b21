//! Maximum-entropy spectra: Burg's lattice recursion on raw records,
//! Levinson-Durbin from autocovariances, spectrum evaluation and peak picking.

use std::f64::consts::PI;

use crate::error::{CovError, Result};
use crate::structure::ToeplitzParams;

/// Denominator floor below which Burg's reflection update is undefined.
pub const BURG_DENOM_FLOOR: f64 = 1e-300;
/// Levinson stops when the prediction error drops to this fraction of `r_0`.
pub const LEVINSON_REL_FLOOR: f64 = 1e-12;
/// Default grid size: resolution `π/200`.
pub const DEFAULT_GRID: usize = 200;

/// Autoregressive model with prediction polynomial `1 + Σ a_k z^{-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ARModel {
    pub coeffs: Vec<f64>,
    /// Innovation variance, always positive.
    pub noise_var: f64,
    /// Reflection (partial correlation) coefficients that generated `coeffs`.
    pub reflections: Vec<f64>,
}

impl ARModel {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn white(noise_var: f64) -> Self {
        ARModel {
            coeffs: Vec::new(),
            noise_var,
            reflections: Vec::new(),
        }
    }

    /// Builds a model from reflection coefficients via the Levinson step-up
    /// recursion.
    pub fn from_reflections(reflections: &[f64], noise_var: f64) -> Self {
        let mut a: Vec<f64> = Vec::with_capacity(reflections.len());
        for &k in reflections {
            step_up(&mut a, k);
        }
        ARModel {
            coeffs: a,
            noise_var,
            reflections: reflections.to_vec(),
        }
    }

    /// First `lags` autocovariances of the stationary process the model
    /// describes. Lags beyond the model order follow the AR recursion, which is
    /// the maximum-entropy extension.
    pub fn autocovariance(&self, lags: usize) -> Vec<f64> {
        let p = self.order();
        let ks = step_down(&self.coeffs);
        // r_0 from the innovation variance: σ² = r_0 Π(1 - k_m²)
        let mut r0 = self.noise_var;
        for k in &ks {
            r0 /= 1.0 - k * k;
        }
        let mut r = vec![r0];
        let mut a: Vec<f64> = Vec::new();
        let mut err = r0;
        for (m, &k) in ks.iter().enumerate() {
            // r_{m+1} = -k_{m+1} E_m - Σ_{i=1..m} a_i r_{m+1-i}
            let s: f64 = a.iter().enumerate().map(|(i, ai)| ai * r[m - i]).sum();
            r.push(-k * err - s);
            step_up(&mut a, k);
            err *= 1.0 - k * k;
        }
        while r.len() < lags.max(1) {
            let m = r.len();
            let s: f64 = (0..p).map(|i| self.coeffs[i] * r[m - 1 - i]).sum();
            r.push(-s);
        }
        r.truncate(lags.max(1));
        r
    }
}

fn step_up(a: &mut Vec<f64>, k: f64) {
    let prev = a.clone();
    let m = prev.len();
    for i in 0..m {
        a[i] = prev[i] + k * prev[m - 1 - i];
    }
    a.push(k);
}

/// Inverse of the step-up recursion: reflection coefficients from `a`.
fn step_down(coeffs: &[f64]) -> Vec<f64> {
    let mut a = coeffs.to_vec();
    let mut ks = vec![0.0; a.len()];
    while let Some(&k) = a.last() {
        let m = a.len();
        ks[m - 1] = k;
        let denom = 1.0 - k * k;
        let prev: Vec<f64> = (0..m - 1)
            .map(|i| (a[i] - k * a[m - 2 - i]) / denom)
            .collect();
        a = prev;
    }
    ks
}

/// Burg's method over one or more records of equal length.
///
/// Each stage picks the reflection coefficient minimizing the summed forward
/// and backward prediction error energy.
pub fn burg_ar(records: &[Vec<f64>], order: usize) -> Result<ARModel> {
    let first = records.first().ok_or(CovError::Empty)?;
    let len = first.len();
    if records.iter().any(|r| r.len() != len) {
        return Err(CovError::InvalidArgument(
            "records must share one length".into(),
        ));
    }
    if order < 1 || len <= order {
        return Err(CovError::InvalidArgument(format!(
            "need record length > order >= 1 (length {len}, order {order})"
        )));
    }
    let total: usize = records.len() * len;
    let mut err = records.iter().flatten().map(|x| x * x).sum::<f64>() / total as f64;
    let mut fwd: Vec<Vec<f64>> = records.to_vec();
    let mut bwd: Vec<Vec<f64>> = records.to_vec();
    let mut a: Vec<f64> = Vec::with_capacity(order);
    let mut ks = Vec::with_capacity(order);

    for m in 1..=order {
        let mut num = 0.0;
        let mut den = 0.0;
        for (f, b) in fwd.iter().zip(&bwd) {
            for t in m..len {
                num += f[t] * b[t - 1];
                den += f[t] * f[t] + b[t - 1] * b[t - 1];
            }
        }
        if den < BURG_DENOM_FLOOR {
            return Err(CovError::DegenerateSignal {
                order: m,
                denominator: den,
            });
        }
        let k = (-2.0 * num / den).clamp(-1.0, 1.0);
        for (f, b) in fwd.iter_mut().zip(bwd.iter_mut()) {
            for t in (m..len).rev() {
                let ft = f[t];
                let bt = b[t - 1];
                f[t] = ft + k * bt;
                b[t] = bt + k * ft;
            }
        }
        step_up(&mut a, k);
        ks.push(k);
        err *= 1.0 - k * k;
    }
    let floor = f64::EPSILON * records.iter().flatten().map(|x| x * x).sum::<f64>() / total as f64;
    Ok(ARModel {
        coeffs: a,
        noise_var: err.max(floor).max(f64::MIN_POSITIVE),
        reflections: ks,
    })
}

/// Levinson-Durbin: order-`(n-1)` AR model matching `r_0..r_{n-1}` exactly.
pub fn levinson(r: &ToeplitzParams) -> Result<ARModel> {
    match levinson_inner(&r.r)? {
        LevinsonOutcome::Complete(m) => Ok(m),
        LevinsonOutcome::Truncated { min_err, .. } => {
            Err(CovError::NotPositiveDefinite { min_eig: min_err })
        }
    }
}

/// Result of [`levinson_truncating`].
#[derive(Debug, Clone)]
pub struct TruncatedModel {
    pub model: ARModel,
    /// Order at which the prediction error collapsed, if it did.
    pub truncated_at: Option<usize>,
}

/// Levinson recursion tolerant of rank-deficient (line-spectrum) inputs.
///
/// When the prediction error collapses at order `m`, the recursion stops there:
/// the order-`m` model is kept with its reflection coefficient pulled just
/// inside the unit circle and the innovation variance floored at
/// `1e-12 * r_0`, so the spectrum shows the lines as sharp finite peaks.
pub fn levinson_truncating(r: &ToeplitzParams) -> Result<TruncatedModel> {
    match levinson_inner(&r.r)? {
        LevinsonOutcome::Complete(model) => Ok(TruncatedModel {
            model,
            truncated_at: None,
        }),
        LevinsonOutcome::Truncated { model, order, .. } => Ok(TruncatedModel {
            model,
            truncated_at: Some(order),
        }),
    }
}

enum LevinsonOutcome {
    Complete(ARModel),
    Truncated {
        model: ARModel,
        order: usize,
        min_err: f64,
    },
}

fn levinson_inner(r: &[f64]) -> Result<LevinsonOutcome> {
    let r0 = *r.first().ok_or(CovError::Empty)?;
    if r0 <= 0.0 || !r0.is_finite() {
        return Err(CovError::NotPositiveDefinite { min_eig: r0 });
    }
    let floor = LEVINSON_REL_FLOOR * r0;
    let mut a: Vec<f64> = Vec::with_capacity(r.len());
    let mut ks = Vec::with_capacity(r.len());
    let mut err = r0;
    for m in 1..r.len() {
        let acc: f64 = r[m]
            + a.iter()
                .enumerate()
                .map(|(i, ai)| ai * r[m - 1 - i])
                .sum::<f64>();
        let k = -acc / err;
        let next = err * (1.0 - k * k);
        if next <= floor || k.abs() >= 1.0 {
            let kk = k.clamp(-1.0 + 1e-12, 1.0 - 1e-12);
            step_up(&mut a, kk);
            ks.push(kk);
            return Ok(LevinsonOutcome::Truncated {
                model: ARModel {
                    coeffs: a,
                    noise_var: floor,
                    reflections: ks,
                },
                order: m,
                min_err: next,
            });
        }
        step_up(&mut a, k);
        ks.push(k);
        err = next;
    }
    Ok(LevinsonOutcome::Complete(ARModel {
        coeffs: a,
        noise_var: err,
        reflections: ks,
    }))
}

/// Spectrum sampled on the uniform grid `ω_i = iπ/M`, `i = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    pub peaks: Vec<Peak>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub freq: f64,
    pub value: f64,
}

impl SpectrumGrid {
    pub fn grid_size(&self) -> usize {
        self.freqs.len() - 1
    }

    pub fn step(&self) -> f64 {
        PI / self.grid_size() as f64
    }

    pub fn top_peak(&self) -> Option<Peak> {
        self.peaks.first().copied()
    }

    /// Peaks strictly inside `(0, π)`.
    pub fn interior_peaks(&self) -> Vec<Peak> {
        let last = self.grid_size();
        self.peaks
            .iter()
            .copied()
            .filter(|p| p.index != 0 && p.index != last)
            .collect()
    }
}

/// `Φ(ω) = σ² / |1 + Σ a_k e^{-ikω}|²` on `M + 1` grid points.
pub fn me_spectrum(m: &ARModel, grid: usize) -> SpectrumGrid {
    assert!(grid >= 1, "grid must have at least one interval");
    let freqs: Vec<f64> = (0..=grid).map(|i| i as f64 * PI / grid as f64).collect();
    let psd: Vec<f64> = freqs
        .iter()
        .map(|&w| {
            let (mut re, mut im) = (1.0, 0.0);
            for (k, &ak) in m.coeffs.iter().enumerate() {
                let ph = (k + 1) as f64 * w;
                re += ak * ph.cos();
                im -= ak * ph.sin();
            }
            m.noise_var / (re * re + im * im)
        })
        .collect();
    let mut g = SpectrumGrid {
        freqs,
        psd,
        peaks: Vec::new(),
    };
    g.peaks = find_peaks(&g);
    g
}

/// Strict local maxima sorted by value descending (ties by frequency).
/// Endpoints count when they exceed their single neighbour.
pub fn find_peaks(g: &SpectrumGrid) -> Vec<Peak> {
    let p = &g.psd;
    let n = p.len();
    let mut out = Vec::new();
    for i in 0..n {
        let left = i == 0 || p[i] > p[i - 1];
        let right = i + 1 == n || p[i] > p[i + 1];
        if left && right && n > 1 {
            out.push(Peak {
                index: i,
                freq: g.freqs[i],
                value: p[i],
            });
        }
    }
    out.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.index.cmp(&b.index)));
    out
}
