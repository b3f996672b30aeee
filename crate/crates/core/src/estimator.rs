//! Local empirical quantiles and the local lag-window estimator of the
//! time-varying copula spectral density.
//!
//! For a window `N` of `n` observations centered at `t0`, local quantile
//! estimates `q(tau)` and a lag window `K` with bandwidth `B_n`, the
//! estimator at a Fourier frequency `omega` is
//!
//! ```text
//! f(omega, tau1, tau2) = 1/(2 pi) sum_{|k| <= n-1} K(k/B_n) e^{-i omega k} g_k
//! g_k = 1/n sum_{t in N, t+k in N} (1{x_t <= q(tau1)} - tau1)(1{x_{t+k} <= q(tau2)} - tau2)
//! ```
//!
//! Arbitrary frequencies in `(0, pi)` are first snapped to the nearest
//! Fourier frequency. Lags `k` and `-k` are always accumulated as a pair,
//! which makes `f(tau2, tau1)` the exact conjugate of `f(tau1, tau2)` and the
//! diagonal `tau1 == tau2` exactly real.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::domain::{
    neighborhood, snap_index, EstimationPlan, Neighborhood, QuantileLevel, Series, SpectralField,
};
use crate::error::{Error, Result};

/// Local quantile estimates around one window center.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalQuantileSet {
    pub t0: usize,
    pub h_q: usize,
    pub levels: Vec<QuantileLevel>,
    /// `q_hat(levels[i])`, one of the observations in the quantile window.
    pub values: Vec<f64>,
}

/// Observations `x_t` with `|t - t0| <= h_q`, clipped to `1..=T`.
fn quantile_window(series: &Series, t0: usize, h_q: usize) -> Result<&[f64]> {
    let len = series.len();
    if t0 < 1 || t0 > len {
        return Err(Error::Domain(format!(
            "quantile window center t0={t0} outside 1..={len}"
        )));
    }
    if h_q < 1 {
        return Err(Error::Config("quantile half-width must be at least 1".into()));
    }
    let lo = t0.saturating_sub(h_q).max(1);
    let hi = (t0 + h_q).min(len);
    Ok(&series.values()[lo - 1..hi])
}

/// 1-based rank `ceil(tau * c)` of the order statistic that inverts an
/// empirical distribution function over `c` points. The small slack keeps
/// `0.1 * 170` from rounding up to 18.
pub(crate) fn order_stat_rank(tau: f64, c: usize) -> usize {
    ((tau * c as f64 - 1e-9).ceil() as usize).clamp(1, c)
}

/// Type-1 empirical quantile: the `ceil(p * len)`-th smallest value. Sorts
/// `values` in place.
pub(crate) fn order_statistic(values: &mut [f64], p: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    values[order_stat_rank(p, values.len()) - 1]
}

/// Local empirical distribution function at `x` over the quantile window.
pub fn local_ecdf(series: &Series, t0: usize, h_q: usize, x: f64) -> Result<f64> {
    let w = quantile_window(series, t0, h_q)?;
    if w.is_empty() {
        return Err(Error::Internal("empty quantile window".into()));
    }
    let below = w.iter().filter(|&&v| v <= x).count();
    Ok(below as f64 / w.len() as f64)
}

/// Generalized inverse of [`local_ecdf`]: the `ceil(tau c)`-th order
/// statistic of the quantile window.
pub fn local_quantile(series: &Series, t0: usize, h_q: usize, tau: QuantileLevel) -> Result<f64> {
    local_quantiles(series, t0, h_q, &[tau]).map(|s| s.values[0])
}

/// Local quantiles for several levels, sharing one sort of the window.
pub fn local_quantiles(
    series: &Series,
    t0: usize,
    h_q: usize,
    levels: &[QuantileLevel],
) -> Result<LocalQuantileSet> {
    let w = quantile_window(series, t0, h_q)?;
    let mut sorted = w.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let c = sorted.len();
    let values = levels
        .iter()
        .map(|tau| sorted[order_stat_rank(tau.value(), c) - 1])
        .collect();
    Ok(LocalQuantileSet {
        t0,
        h_q,
        levels: levels.to_vec(),
        values,
    })
}

/// Windowed indicator cross-covariance at lag `k`:
/// `1/n sum_{t in T(k)} (1{x_t <= q1} - tau1)(1{x_{t+k} <= q2} - tau2)` with
/// `T(k) = {t in N : t + k in N}`. The divisor is the window size `n`.
pub fn indicator_ccov(
    series: &Series,
    nb: &Neighborhood,
    k: i64,
    q1: f64,
    q2: f64,
    tau1: f64,
    tau2: f64,
) -> f64 {
    let n = nb.len();
    if k.unsigned_abs() as usize >= n {
        return 0.0;
    }
    let x = nb.slice(series);
    let ind = |v: f64, q: f64, tau: f64| if v <= q { 1.0 - tau } else { -tau };
    let mut acc = 0.0;
    if k >= 0 {
        let k = k as usize;
        for i in 0..n - k {
            acc += ind(x[i], q1, tau1) * ind(x[i + k], q2, tau2);
        }
    } else {
        let k = (-k) as usize;
        for i in k..n {
            acc += ind(x[i], q1, tau1) * ind(x[i - k], q2, tau2);
        }
    }
    acc / n as f64
}

/// Estimator at a single `(t0, omega, tau1, tau2)`; `omega` is snapped to the
/// nearest Fourier frequency of the plan's window.
pub fn lag_window_estimate(
    series: &Series,
    t0: usize,
    plan: &EstimationPlan,
    tau1: QuantileLevel,
    tau2: QuantileLevel,
    omega: f64,
) -> Result<Complex64> {
    let n = plan.n();
    let nb = neighborhood(t0, n, series.len())?;
    let j = snap_index(omega, n)?;
    let omega = plan.freq_grid().freqs()[j - 1];
    let qs = local_quantiles(series, t0, plan.quantile_halfwidth(), &[tau1, tau2])?;
    let (q1, q2) = (qs.values[0], qs.values[1]);
    let (t1, t2) = (tau1.value(), tau2.value());
    let diagonal = t1 == t2;

    let mut re = 0.0;
    let mut im = 0.0;
    for (k, w) in plan.active_lags() {
        if k == 0 {
            re += w * indicator_ccov(series, &nb, 0, q1, q2, t1, t2);
            continue;
        }
        let plus = indicator_ccov(series, &nb, k as i64, q1, q2, t1, t2);
        let minus = indicator_ccov(series, &nb, -(k as i64), q1, q2, t1, t2);
        let arg = omega * k as f64;
        re += w * (plus + minus) * arg.cos();
        im -= w * (plus - minus) * arg.sin();
    }
    let scale = 1.0 / (2.0 * PI);
    Ok(Complex64::new(
        re * scale,
        if diagonal { 0.0 } else { im * scale },
    ))
}

/// Precomputed lag weights and trigonometric tables for one plan.
pub(crate) struct WindowEstimator {
    n: usize,
    h_q: usize,
    levels: Vec<QuantileLevel>,
    /// `(k, K(k / B_n))` for `k >= 1`.
    lags: Vec<(usize, f64)>,
    /// `K(0)`, zero only for degenerate windows.
    w0: f64,
    /// `cos(omega_j k)` and `sin(omega_j k)`, row-major in `(j, lag)`.
    cos: Vec<f64>,
    sin: Vec<f64>,
    n_freq: usize,
}

impl WindowEstimator {
    pub(crate) fn new(plan: &EstimationPlan) -> Self {
        let all = plan.active_lags();
        let w0 = all
            .iter()
            .find(|l| l.0 == 0)
            .map(|l| l.1)
            .unwrap_or(0.0);
        let lags: Vec<(usize, f64)> = all.into_iter().filter(|l| l.0 > 0).collect();
        let freqs = plan.freq_grid().freqs();
        let mut cos = Vec::with_capacity(freqs.len() * lags.len());
        let mut sin = Vec::with_capacity(freqs.len() * lags.len());
        for &omega in freqs {
            for &(k, _) in &lags {
                let arg = omega * k as f64;
                cos.push(arg.cos());
                sin.push(arg.sin());
            }
        }
        WindowEstimator {
            n: plan.n(),
            h_q: plan.quantile_halfwidth(),
            levels: plan.quantiles().to_vec(),
            lags,
            w0,
            cos,
            sin,
            n_freq: freqs.len(),
        }
    }

    /// Number of values written by [`Self::block`].
    pub(crate) fn block_len(&self) -> usize {
        self.n_freq * self.levels.len() * self.levels.len()
    }

    /// Fills `out` (laid out as `(omega, tau1, tau2)`) with the estimator for
    /// the window centered at `t0`.
    pub(crate) fn block(&self, series: &Series, t0: usize, out: &mut [Complex64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.block_len());
        let n = self.n;
        let nb = neighborhood(t0, n, series.len())?;
        let qs = local_quantiles(series, t0, self.h_q, &self.levels)?;
        let x = nb.slice(series);
        let nq = self.levels.len();

        let indicators: Vec<Vec<f64>> = self
            .levels
            .iter()
            .zip(&qs.values)
            .map(|(tau, &q)| {
                let tau = tau.value();
                x.iter()
                    .map(|&v| if v <= q { 1.0 - tau } else { -tau })
                    .collect()
            })
            .collect();

        let nl = self.lags.len();
        let nf = n as f64;
        let scale = 1.0 / (2.0 * PI);
        let mut sum_pm = vec![0.0; nl];
        let mut diff_pm = vec![0.0; nl];
        for a in 0..nq {
            for b in a..nq {
                let ia = &indicators[a];
                let ib = &indicators[b];
                let mut g0 = 0.0;
                for (u, v) in ia.iter().zip(ib) {
                    g0 += u * v;
                }
                let g0 = g0 / nf;
                for (l, &(k, w)) in self.lags.iter().enumerate() {
                    // same summation order and `/ n` rounding as `indicator_ccov`
                    let (plus, minus) = lagged_products(ia, ib, k);
                    let (plus, minus) = (plus / nf, minus / nf);
                    sum_pm[l] = w * (plus + minus);
                    diff_pm[l] = w * (plus - minus);
                }
                for wi in 0..self.n_freq {
                    let row = wi * nl;
                    let mut re = self.w0 * g0;
                    let mut im = 0.0;
                    for l in 0..nl {
                        re += sum_pm[l] * self.cos[row + l];
                        im -= diff_pm[l] * self.sin[row + l];
                    }
                    let base = wi * nq * nq;
                    if a == b {
                        out[base + a * nq + a] = Complex64::new(re * scale, 0.0);
                    } else {
                        let z = Complex64::new(re * scale, im * scale);
                        out[base + a * nq + b] = z;
                        out[base + b * nq + a] = z.conj();
                    }
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn lagged_products(ia: &[f64], ib: &[f64], k: usize) -> (f64, f64) {
    let n = ia.len();
    let mut plus = 0.0;
    let mut minus = 0.0;
    for i in 0..n - k {
        plus += ia[i] * ib[i + k];
    }
    for i in k..n {
        minus += ia[i] * ib[i - k];
    }
    (plus, minus)
}

/// Evaluates the estimator on the plan's full `(t0, omega, tau1, tau2)` grid.
///
/// Each unordered quantile pair is computed once and its mirror filled by
/// conjugation. Windows are processed in parallel; the output does not depend
/// on the schedule.
pub fn sweep(series: &Series, plan: &EstimationPlan) -> Result<SpectralField> {
    plan.check_len(series.len())?;
    let engine = WindowEstimator::new(plan);
    let mut field = SpectralField::zeros(plan);
    let blocks: Vec<Result<Vec<Complex64>>> = plan
        .t0_grid()
        .par_iter()
        .map(|&t0| {
            let mut block = vec![Complex64::new(0.0, 0.0); engine.block_len()];
            engine.block(series, t0, &mut block)?;
            Ok(block)
        })
        .collect();
    for (ti, block) in blocks.into_iter().enumerate() {
        field.t0_block_mut(ti).copy_from_slice(&block?);
    }
    Ok(field)
}
