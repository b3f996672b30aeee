//! A deliberately plain estimator used as an independent oracle: every lag
//! from `-(n-1)` to `n-1`, quantiles by definition of the generalized
//! inverse, integer arithmetic for the quantile half-width.
#![allow(dead_code)]

use std::f64::consts::PI;

use qspec::Complex64;

pub fn parzen(u: f64) -> f64 {
    let a = u.abs();
    if a <= 0.5 {
        1.0 - 6.0 * a.powi(2) + 6.0 * a.powi(3)
    } else if a <= 1.0 {
        2.0 * (1.0 - a).powi(3)
    } else {
        0.0
    }
}

/// Largest `h` with `h^5 <= m^4`.
pub fn halfwidth(m: usize) -> usize {
    let target = (m as u128).pow(4);
    let mut h = 0u128;
    while (h + 1).pow(5) <= target {
        h += 1;
    }
    h as usize
}

/// Smallest window value `v` with `#{x <= v} / c >= tau`.
pub fn quantile(window: &[f64], tau: f64) -> f64 {
    let c = window.len() as f64;
    let mut best = f64::INFINITY;
    for &v in window {
        let cnt = window.iter().filter(|&&x| x <= v).count() as f64;
        if cnt / c >= tau && v < best {
            best = v;
        }
    }
    best
}

/// `gamma(k)` for `k = -(n-1)..=n-1` (index `k + n - 1`) in the window
/// centered at `t0` (1-based).
pub fn covariances(x: &[f64], t0: usize, n: usize, tau1: f64, tau2: f64) -> Vec<f64> {
    let len = x.len();
    let h = halfwidth(n / 2) as i64;
    let lo = (t0 as i64 - h).max(1) as usize;
    let hi = (t0 as i64 + h).min(len as i64) as usize;
    let qwin = &x[lo - 1..hi];
    let q1 = quantile(qwin, tau1);
    let q2 = quantile(qwin, tau2);
    let first = t0 + 1 - n / 2;
    let last = t0 + n / 2;
    let mut out = Vec::with_capacity(2 * n - 1);
    for k in -(n as i64 - 1)..=(n as i64 - 1) {
        let mut g = 0.0;
        for t in first..=last {
            let s = t as i64 + k;
            if s < first as i64 || s > last as i64 {
                continue;
            }
            let a = if x[t - 1] <= q1 { 1.0 } else { 0.0 } - tau1;
            let b = if x[s as usize - 1] <= q2 { 1.0 } else { 0.0 } - tau2;
            g += a * b;
        }
        out.push(g / n as f64);
    }
    out
}

/// `(1/2pi) sum_k K(k/B) gamma(k) e^{-i omega k}` over all lags.
pub fn fourier(gamma: &[f64], kernel: impl Fn(f64) -> f64, bandwidth: f64, omega: f64) -> Complex64 {
    let n = gamma.len().div_ceil(2);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, g) in gamma.iter().enumerate() {
        let k = i as f64 - (n as f64 - 1.0);
        acc += Complex64::from_polar(kernel(k / bandwidth) * g, -omega * k);
    }
    acc / (2.0 * PI)
}

/// Estimator at window center `t0` (1-based) and frequency `omega`.
pub fn estimate(
    x: &[f64],
    t0: usize,
    n: usize,
    kernel: impl Fn(f64) -> f64,
    bandwidth: f64,
    tau1: f64,
    tau2: f64,
    omega: f64,
) -> Complex64 {
    fourier(&covariances(x, t0, n, tau1, tau2), kernel, bandwidth, omega)
}
