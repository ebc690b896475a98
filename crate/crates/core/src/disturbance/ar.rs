use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::DisturbanceError;
use crate::linalg::solve_dense;

pub const DEFAULT_AR_ORDER: usize = 8;

/// `x_t = Σ_k coeffs[k-1]·x_{t-k} + e_t` with `e_t ~ N(0, sigma2)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArModel {
    pub order: usize,
    pub coeffs: Vec<f64>,
    pub sigma2: f64,
}

impl ArModel {
    pub fn new(coeffs: Vec<f64>, sigma2: f64) -> Result<Self, DisturbanceError> {
        let m = Self {
            order: coeffs.len(),
            coeffs,
            sigma2,
        };
        m.validate()?;
        Ok(m)
    }

    /// Model with the given reflection (partial autocorrelation)
    /// coefficients; stationary whenever every `|k| < 1`.
    pub fn from_reflection(ks: &[f64], sigma2: f64) -> Result<Self, DisturbanceError> {
        let mut a: Vec<f64> = Vec::with_capacity(ks.len());
        for &k in ks {
            let prev = a.clone();
            let m = prev.len();
            for j in 0..m {
                a[j] = prev[j] - k * prev[m - 1 - j];
            }
            a.push(k);
        }
        Self::new(a, sigma2)
    }

    pub fn validate(&self) -> Result<(), DisturbanceError> {
        if self.order == 0 || self.coeffs.len() != self.order {
            return Err(DisturbanceError::ZeroOrder);
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(DisturbanceError::NonFinite);
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(DisturbanceError::BadVariance);
        }
        if self.reflection().is_none() {
            return Err(DisturbanceError::NonStationary);
        }
        Ok(())
    }

    /// Reflection coefficients by step-down recursion, or `None` if any
    /// reaches magnitude 1, which happens iff a characteristic root lies on
    /// or outside the unit circle.
    pub fn reflection(&self) -> Option<Vec<f64>> {
        let mut a = self.coeffs.clone();
        let mut ks = vec![0.0; a.len()];
        while let Some(&k) = a.last() {
            let m = a.len();
            if !(k.abs() < 1.0) {
                return None;
            }
            ks[m - 1] = k;
            let d = 1.0 - k * k;
            let prev: Vec<f64> = (0..m - 1).map(|j| (a[j] + k * a[m - 2 - j]) / d).collect();
            a = prev;
        }
        Some(ks)
    }

    pub fn is_stationary(&self) -> bool {
        self.reflection().is_some()
    }

    /// Theoretical autocovariances at lags `0..=max_lag`.
    pub fn autocovariance(&self, max_lag: usize) -> Vec<f64> {
        let p = self.order;
        let n = p + 1;
        // γ_m − Σ_k a_k γ_{|m−k|} = σ²·[m = 0], m = 0..p.
        let mut m = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        rhs[0] = self.sigma2;
        for row in 0..n {
            m[row * n + row] += 1.0;
            for k in 1..=p {
                let lag = row.abs_diff(k);
                m[row * n + lag] -= self.coeffs[k - 1];
            }
        }
        solve_dense(&mut m, &mut rhs, n, 1e-14).expect("stationary model has a unique autocovariance");
        let mut g = rhs;
        for lag in n..=max_lag {
            let v = (1..=p).map(|k| self.coeffs[k - 1] * g[lag - k]).sum();
            g.push(v);
        }
        g.truncate(max_lag + 1);
        g
    }

    /// One-sided density at `f` Hz for sample rate `fs`.
    pub fn psd(&self, f: f64, fs: f64) -> f64 {
        let w = 2.0 * core::f64::consts::PI * f / fs;
        let (mut re, mut im) = (1.0, 0.0);
        for (k, a) in self.coeffs.iter().enumerate() {
            let (s, c) = (w * (k + 1) as f64).sin_cos();
            re -= a * c;
            im += a * s;
        }
        2.0 * self.sigma2 / fs / (re * re + im * im)
    }
}

/// Biased (`1/N`) autocovariances of the mean-removed series at lags
/// `0..=max_lag`.
pub fn sample_autocovariance(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    (0..=max_lag)
        .map(|lag| {
            if lag >= n {
                return 0.0;
            }
            let s: f64 = (0..n - lag).map(|t| (x[t] - mean) * (x[t + lag] - mean)).sum();
            s / n as f64
        })
        .collect()
}

/// Yule-Walker estimate by Levinson-Durbin recursion on the biased sample
/// autocovariances, which keeps every reflection coefficient below 1.
pub fn yule_walker_fit(signal: &[f64], order: usize) -> Result<ArModel, DisturbanceError> {
    if order == 0 {
        return Err(DisturbanceError::ZeroOrder);
    }
    if signal.len() < 10 * order {
        return Err(DisturbanceError::InsufficientData {
            need: 10 * order,
            got: signal.len(),
        });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(DisturbanceError::NonFinite);
    }
    let r = sample_autocovariance(signal, order);
    let scale = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(r[0] > 1e-24 * scale * scale) {
        return Err(DisturbanceError::Singular);
    }
    let mut a: Vec<f64> = Vec::with_capacity(order);
    let mut err = r[0];
    for m in 1..=order {
        let acc: f64 = (1..m).map(|j| a[j - 1] * r[m - j]).sum();
        let k = (r[m] - acc) / err;
        let prev = a.clone();
        for j in 1..m {
            a[j - 1] = prev[j - 1] - k * prev[m - j - 1];
        }
        a.push(k);
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            return Err(DisturbanceError::Singular);
        }
    }
    ArModel::new(a, err)
}

/// `n` samples of the model driven by seeded Gaussian noise, after
/// discarding `burn_in` samples started from zero.
pub fn ar_generate(model: &ArModel, n: usize, seed: u64, burn_in: usize) -> Result<Vec<f64>, DisturbanceError> {
    model.validate()?;
    let p = model.order;
    if burn_in < 10 * p {
        return Err(DisturbanceError::BurnInTooShort { need: 10 * p });
    }
    let noise = Normal::new(0.0, model.sigma2.sqrt()).map_err(|_| DisturbanceError::BadVariance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Ring of the last p outputs, newest at `head`.
    let mut hist = vec![0.0; p];
    let mut head = 0;
    let mut out = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        let mut x = noise.sample(&mut rng);
        for (k, a) in model.coeffs.iter().enumerate() {
            x += a * hist[(head + p - k) % p];
        }
        head = (head + 1) % p;
        hist[head] = x;
        if t >= burn_in {
            out.push(x);
        }
    }
    Ok(out)
}
