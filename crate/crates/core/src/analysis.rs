//! Reference quantities for judging the estimator: analytic i.i.d. spectra,
//! Monte-Carlo ground truth, the Wigner-Ville indicator spectrum, bandwidth
//! formulas and distances between fields.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::domain::{EstimationPlan, Part, QuantileLevel, SpectralField};
use crate::error::{Error, Result};
use crate::estimator::{order_statistic, WindowEstimator};
use crate::kernel::LagWindow;
use crate::models::{simulate_replication, simulate_stationary_replication, ProcessModel, SimOptions};
use crate::Complex64;

/// `(min(tau1, tau2) - tau1 tau2) / (2 pi)`: the copula spectrum of white noise.
pub fn theoretical_iid_spectrum(tau1: f64, tau2: f64) -> Result<f64> {
    let a = QuantileLevel::new(tau1)?.value();
    let b = QuantileLevel::new(tau2)?.value();
    Ok((a.min(b) - a * b) / (2.0 * PI))
}

/// `int K(u)^2 du` by composite Simpson quadrature with knots at the window's
/// breakpoints.
pub fn window_square_integral(kernel: LagWindow) -> f64 {
    const PIECES: usize = 4000;
    let f = |u: f64| kernel.eval(u).powi(2);
    // integrate [0, 1/2] and [1/2, 1] separately, then use evenness
    let simpson = |a: f64, b: f64| {
        let h = (b - a) / PIECES as f64;
        let mut s = f(a) + f(b);
        for i in 1..PIECES {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    };
    2.0 * (simpson(0.0, 0.5) + simpson(0.5, 1.0))
}

/// Monte-Carlo mean of the estimator and its standard error.
///
/// Both fields share axes. The standard error field holds the standard
/// errors of the real and imaginary parts in its real and imaginary slots.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub mean: SpectralField,
    pub std_error: SpectralField,
}

/// Averages the single-window estimator over `replications` paths of the
/// stationary approximation at each `theta = t0 / t_len`.
///
/// Every path has `length` observations and is estimated in the window
/// centered at `length / 2` with the plan's `n`, bandwidth, kernel and
/// quantiles. The output's t0 axis is `t0s`. Path `r` at the `i`-th center
/// uses RNG stream `i * replications + r`.
pub fn ground_truth(
    model: &ProcessModel,
    t0s: &[usize],
    t_len: usize,
    replications: usize,
    length: usize,
    plan: &EstimationPlan,
    seed: u64,
) -> Result<GroundTruth> {
    if replications < 2 {
        return Err(Error::Domain(format!(
            "ground truth needs at least 2 replications, got {replications}"
        )));
    }
    if t0s.is_empty() || t0s.iter().any(|&t| t == 0 || t >= t_len) {
        return Err(Error::Domain(format!(
            "window centers must lie strictly inside 1..{t_len}"
        )));
    }
    let window = plan.with_t0_grid(vec![length / 2])?;
    window.check_len(length)?;
    let engine = WindowEstimator::new(&window);
    let block_len = engine.block_len();
    let grid_plan = plan.with_t0_grid(t0s.to_vec())?;
    let mut mean = SpectralField::zeros(&grid_plan);
    let mut std_error = SpectralField::zeros(&grid_plan);
    let rf = replications as f64;

    for (ti, &t0) in t0s.iter().enumerate() {
        let theta = t0 as f64 / t_len as f64;
        let blocks: Vec<Vec<Complex64>> = (0..replications)
            .into_par_iter()
            .map(|r| {
                let stream = (ti * replications + r) as u64;
                let ctx = |e: Error| e.with_context(format!("theta={theta}, replication {r}"));
                let path = simulate_stationary_replication(
                    model,
                    theta,
                    length,
                    seed,
                    stream,
                    SimOptions::default(),
                )
                .map_err(ctx)?;
                let mut block = vec![Complex64::new(0.0, 0.0); block_len];
                engine.block(&path, length / 2, &mut block)?;
                Ok(block)
            })
            .collect::<Result<_>>()?;

        let m = mean.t0_block_mut(ti);
        for b in &blocks {
            for (acc, z) in m.iter_mut().zip(b) {
                *acc += z;
            }
        }
        for acc in m.iter_mut() {
            *acc /= rf;
        }
        let m = m.to_vec();
        let se = std_error.t0_block_mut(ti);
        for b in &blocks {
            for ((acc, z), mu) in se.iter_mut().zip(b).zip(&m) {
                let d = z - mu;
                acc.re += d.re * d.re;
                acc.im += d.im * d.im;
            }
        }
        for acc in se.iter_mut() {
            acc.re = (acc.re / (rf - 1.0) / rf).sqrt();
            acc.im = (acc.im / (rf - 1.0) / rf).sqrt();
        }
    }
    Ok(GroundTruth { mean, std_error })
}

/// `(1/2pi) sum_{|s| <= S} cov(s) e^{-i omega s}` for an indicator covariance
/// oracle `cov(s) = Cov(1{X_{t0 + s/2} <= q1}, 1{X_{t0 - s/2} <= q2})`.
pub fn wigner_ville(
    cov: impl Fn(i64) -> Result<f64>,
    truncation: usize,
    omega: f64,
) -> Result<Complex64> {
    let s_max = truncation as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for s in -s_max..=s_max {
        let c = cov(s)?;
        let arg = -omega * s as f64;
        acc += Complex64::new(c * arg.cos(), c * arg.sin());
    }
    Ok(acc / (2.0 * PI))
}

/// Indicator covariance oracle of an i.i.d. sequence.
pub fn iid_indicator_cov(tau1: f64, tau2: f64) -> Result<impl Fn(i64) -> Result<f64>> {
    let c0 = theoretical_iid_spectrum(tau1, tau2)? * 2.0 * PI;
    Ok(move |s: i64| Ok(if s == 0 { c0 } else { 0.0 }))
}

/// Default number of paths behind [`MonteCarloOracle`].
pub const DEFAULT_ORACLE_REPLICATIONS: usize = 2000;

/// Empirical indicator covariances across independent realizations of the
/// triangular array around `t0`. Quantiles at each time are pooled over
/// realizations.
#[derive(Debug, Clone)]
pub struct MonteCarloOracle {
    first: usize,
    t0: usize,
    /// `paths[t - first][r]`
    paths: Vec<Vec<f64>>,
}

impl MonteCarloOracle {
    pub fn new(
        model: &ProcessModel,
        t_len: usize,
        t0: usize,
        truncation: usize,
        replications: usize,
        seed: u64,
    ) -> Result<Self> {
        let half = truncation.div_ceil(2);
        if replications < 2 {
            return Err(Error::Domain("oracle needs at least 2 replications".into()));
        }
        if t0 <= half || t0 + half > t_len {
            return Err(Error::Domain(format!(
                "lags up to {truncation} around t0={t0} leave 1..={t_len}"
            )));
        }
        let first = t0 - half;
        let last = t0 + half;
        let rows: Vec<Vec<f64>> = (0..replications as u64)
            .into_par_iter()
            .map(|r| {
                let s = simulate_replication(model, t_len, seed, r, SimOptions::default())
                    .map_err(|e| e.with_context(format!("replication {r}")))?;
                Ok(s.values()[first - 1..last].to_vec())
            })
            .collect::<Result<_>>()?;
        let width = last - first + 1;
        let paths = (0..width)
            .map(|i| rows.iter().map(|row| row[i]).collect())
            .collect();
        Ok(MonteCarloOracle { first, t0, paths })
    }

    fn indicators(&self, t: usize, tau: f64) -> Vec<f64> {
        let col = &self.paths[t - self.first];
        let q = order_statistic(&mut col.clone(), tau);
        col.iter().map(|v| if *v <= q { 1.0 } else { 0.0 }).collect()
    }

    /// Empirical `Cov(1{X_a <= q_a(tau1)}, 1{X_b <= q_b(tau2)})` with
    /// `a = t0 + floor(s/2)` and `b = t0 + floor(-s/2)`.
    pub fn cov(&self, s: i64, tau1: f64, tau2: f64) -> Result<f64> {
        let a = self.t0 as i64 + s.div_euclid(2);
        let b = self.t0 as i64 + (-s).div_euclid(2);
        let last = (self.first + self.paths.len() - 1) as i64;
        if a.min(b) < self.first as i64 || a.max(b) > last {
            return Err(Error::Domain(format!("lag {s} exceeds the simulated span")));
        }
        let ia = self.indicators(a as usize, tau1);
        let ib = self.indicators(b as usize, tau2);
        let r = ia.len() as f64;
        let ma = ia.iter().sum::<f64>() / r;
        let mb = ib.iter().sum::<f64>() / r;
        let mab = ia.iter().zip(&ib).map(|(x, y)| x * y).sum::<f64>() / r;
        Ok(mab - ma * mb)
    }
}

/// Constants of the asymptotic mean squared error of the real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthInputs {
    /// Asymptotic variance constant.
    pub sigma2: f64,
    /// Time-direction bias constant.
    pub b_u: f64,
    /// Frequency-direction bias constant.
    pub b_omega: f64,
    /// Characteristic exponent of the lag window.
    pub r: u32,
    /// Sample length.
    pub t_len: f64,
}

impl BandwidthInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) {
            return Err(Error::Domain("sigma2 must be positive".into()));
        }
        if self.b_u == 0.0 || self.b_omega == 0.0 {
            return Err(Error::Domain("bias constants must be non-zero".into()));
        }
        if self.r < 1 {
            return Err(Error::Domain("characteristic exponent must be at least 1".into()));
        }
        if !(self.t_len >= 2.0) {
            return Err(Error::Domain("sample length must be at least 2".into()));
        }
        Ok(())
    }

    fn positive(&self) -> Result<()> {
        self.validate()?;
        if !(self.b_u > 0.0 && self.b_omega > 0.0) {
            return Err(Error::Domain(
                "bias constants must be positive for fractional powers".into(),
            ));
        }
        Ok(())
    }
}

/// Closed-form window length and bandwidth:
///
/// `n = T^{1 - r/(2+5r)} (s2 bw^{-1/r} bu^{2+1/r} (2r+4) (r/2)^{-r/(r+1)})^{r/(2+5r)}`,
/// `B = T^{2/(2+5r)} (s2^{-1} bu^{-1/2} bw^{5/2} (2r+4))^{2/(2+5r)} (2/r)^{-3/(2+5r)}`.
///
/// `B` minimizes [`asymptotic_mse`]; `n` does not (see [`mse_minimizer`]).
pub fn optimal_parameters(inputs: &BandwidthInputs) -> Result<(f64, f64)> {
    inputs.positive()?;
    let BandwidthInputs {
        sigma2: s2,
        b_u: bu,
        b_omega: bw,
        t_len: t,
        ..
    } = *inputs;
    let r = inputs.r as f64;
    let d = 2.0 + 5.0 * r;
    let n = t.powf(1.0 - r / d)
        * (s2 * bw.powf(-1.0 / r) * bu.powf(2.0 + 1.0 / r) * (2.0 * r + 4.0)
            * (r / 2.0).powf(-r / (r + 1.0)))
        .powf(r / d);
    let b = t.powf(2.0 / d)
        * (bu.powf(-0.5) * bw.powf(2.5) * (2.0 * r + 4.0) / s2).powf(2.0 / d)
        * (2.0 / r).powf(-3.0 / d);
    Ok((n, b))
}

/// Exact joint minimizer `(n, B)` of [`asymptotic_mse`]:
/// `B = (T r (r+2) (r/2)^{1/2} bw^{5/2} bu^{-1/2} / s2)^{2/(5r+2)}` and
/// `n = T (r bw / (2 bu))^{1/2} B^{-r/2}`.
pub fn mse_minimizer(inputs: &BandwidthInputs) -> Result<(f64, f64)> {
    inputs.positive()?;
    let BandwidthInputs {
        sigma2: s2,
        b_u: bu,
        b_omega: bw,
        t_len: t,
        ..
    } = *inputs;
    let r = inputs.r as f64;
    let b = (t * r * (r + 2.0) * (r / 2.0).sqrt() * bw.powf(2.5) / (bu.sqrt() * s2))
        .powf(2.0 / (5.0 * r + 2.0));
    let n = t * (r * bw / (2.0 * bu)).sqrt() * b.powf(-r / 2.0);
    Ok((n, b))
}

/// Variance and the two bias contributions at `(n, B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseTerms {
    /// `(B/n) s2`
    pub variance: f64,
    /// `bu n^2 / T^2`
    pub time_bias: f64,
    /// `bw B^{-r}`
    pub frequency_bias: f64,
}

impl MseTerms {
    /// Variance plus squared total bias.
    pub fn total(&self) -> f64 {
        let bias = self.time_bias + self.frequency_bias;
        self.variance + bias * bias
    }
}

pub fn mse_terms(n: f64, bandwidth: f64, inputs: &BandwidthInputs) -> MseTerms {
    MseTerms {
        variance: bandwidth / n * inputs.sigma2,
        time_bias: inputs.b_u * n * n / (inputs.t_len * inputs.t_len),
        frequency_bias: inputs.b_omega * bandwidth.powi(-(inputs.r as i32)),
    }
}

/// `(B/n) s2 + (bu n^2/T^2 + bw B^{-r})^2`.
pub fn asymptotic_mse(n: f64, bandwidth: f64, inputs: &BandwidthInputs) -> Result<f64> {
    if !(n > 0.0 && bandwidth > 0.0) {
        return Err(Error::Domain("n and B_n must be positive".into()));
    }
    Ok(mse_terms(n, bandwidth, inputs).total())
}

/// Which `(tau1, tau2, part)` components a distance runs over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub tau1: f64,
    pub tau2: f64,
    pub part: Part,
}

impl Component {
    pub fn new(tau1: f64, tau2: f64, part: Part) -> Self {
        Component { tau1, tau2, part }
    }
}

/// Sum over the selected components and all `(t0, omega)` of squared
/// differences of the selected part.
pub fn field_l2_distance(a: &SpectralField, b: &SpectralField, select: &[Component]) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::Config("fields have different grids".into()));
    }
    let mut total = 0.0;
    for c in select {
        let (i, j) = match (a.quantile_index(c.tau1), a.quantile_index(c.tau2)) {
            (Some(i), Some(j)) => (i, j),
            _ => {
                return Err(Error::Config(format!(
                    "fields lack quantile pair ({}, {})",
                    c.tau1, c.tau2
                )))
            }
        };
        total += a
            .component(i, j, c.part)
            .zip(b.component(i, j, c.part))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>();
    }
    Ok(total)
}
