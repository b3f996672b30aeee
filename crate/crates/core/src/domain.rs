//! Domain types, grids and index arithmetic shared by every module.
//!
//! Time indices are 1-based throughout the public API: a series of length `T`
//! holds observations `x_1 ..= x_T`, and window centers `t0` refer to that
//! numbering.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::LagWindow;

/// One realization `x_1, ..., x_T` of a real-valued process.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("a series needs at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value {} at t={}",
                values[i],
                i + 1
            )));
        }
        Ok(Series { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Observation `x_t` with 1-based `t`.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    /// Applies `g` elementwise; fails if `g` produces a non-finite value.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Series> {
        Series::new(self.values.iter().map(|&x| g(x)).collect())
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A quantile level strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct QuantileLevel(f64);

impl QuantileLevel {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(QuantileLevel(tau))
        } else {
            Err(Error::Domain(format!(
                "quantile level {tau} is not inside (0, 1)"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - tau`, the mirrored level.
    pub fn mirrored(self) -> Self {
        QuantileLevel(1.0 - self.0)
    }

    pub(crate) fn approx_eq(self, other: f64) -> bool {
        (self.0 - other).abs() <= 1e-12
    }
}

/// Builds a list of quantile levels, rejecting values outside `(0, 1)`.
pub fn quantile_levels(taus: &[f64]) -> Result<Vec<QuantileLevel>> {
    taus.iter().map(|&t| QuantileLevel::new(t)).collect()
}

/// The interior Fourier frequencies `2 pi j / n`, `j = 1, ..., n/2 - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    n: usize,
    freqs: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(n: usize) -> Result<Self> {
        check_window_len(n)?;
        let freqs = (1..n / 2).map(|j| fourier_frequency(j, n)).collect();
        Ok(FrequencyGrid { n, freqs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Position in `freqs()` of the grid point nearest to `omega`.
    pub fn nearest_index(&self, omega: f64) -> Result<usize> {
        snap_index(omega, self.n).map(|j| j - 1)
    }
}

#[inline]
fn fourier_frequency(j: usize, n: usize) -> f64 {
    j as f64 * (2.0 * PI / n as f64)
}

fn check_window_len(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "window length must be even and at least 4, got {n}"
        )));
    }
    Ok(())
}

/// Index `j` (1-based) of the Fourier frequency `2 pi j / n` closest to
/// `omega`; exact ties go to the larger `j`.
pub(crate) fn snap_index(omega: f64, n: usize) -> Result<usize> {
    check_window_len(n)?;
    if !(omega > 0.0 && omega < PI) {
        return Err(Error::Domain(format!("frequency {omega} is not inside (0, pi)")));
    }
    let top = n / 2 - 1;
    let step = 2.0 * PI / n as f64;
    let lo = ((omega / step).floor() as usize).clamp(1, top);
    if lo == top || omega <= fourier_frequency(lo, n) {
        return Ok(lo);
    }
    let d_lo = omega - fourier_frequency(lo, n);
    let d_hi = fourier_frequency(lo + 1, n) - omega;
    // ties are resolved upward; a few ulps of slack absorbs the rounding of
    // midpoints such as 3pi/8
    if d_hi <= d_lo + 4.0 * f64::EPSILON * PI {
        Ok(lo + 1)
    } else {
        Ok(lo)
    }
}

/// Maps `omega` in `(0, pi)` to the nearest interior Fourier frequency of a
/// window of length `n`.
pub fn fourier_snap(omega: f64, n: usize) -> Result<f64> {
    snap_index(omega, n).map(|j| fourier_frequency(j, n))
}

/// The estimation window `{t : t0 - n/2 < t <= t0 + n/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighborhood {
    first: usize,
    len: usize,
}

impl Neighborhood {
    /// First (smallest) 1-based index in the window.
    pub fn first(&self) -> usize {
        self.first
    }

    pub fn last(&self) -> usize {
        self.first + self.len - 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, t: i64) -> bool {
        t >= self.first as i64 && t <= self.last() as i64
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.first..=self.last()
    }

    /// The window's observations as a slice of `series`.
    pub fn slice<'a>(&self, series: &'a Series) -> &'a [f64] {
        &series.values()[self.first - 1..self.last()]
    }
}

/// Window of length `n` centered at `t0` inside a sample of length `len`.
/// Windows that leave `1..=len` are rejected, never clipped.
pub fn neighborhood(t0: usize, n: usize, len: usize) -> Result<Neighborhood> {
    let m = n / 2;
    if n == 0 || !n.is_multiple_of(2) || t0 < m || t0 + m > len {
        return Err(Error::Boundary { t0, n, len });
    }
    Ok(Neighborhood {
        first: t0 - m + 1,
        len: n,
    })
}

/// Default window-center grid `{ n/2 (k+1) : k = 0, ..., floor(2(T-n)/n) }`.
pub fn default_t0_grid(len: usize, n: usize) -> Result<Vec<usize>> {
    check_window_len(n)?;
    if n > len {
        return Err(Error::Config(format!(
            "window length {n} exceeds the series length {len}"
        )));
    }
    let kmax = 2 * (len - n) / n;
    Ok((0..=kmax).map(|k| n / 2 * (k + 1)).collect())
}

/// Window centers `n/2, n/2 + stride, ...` up to `T - n/2`.
pub fn strided_t0_grid(len: usize, n: usize, stride: usize) -> Result<Vec<usize>> {
    check_window_len(n)?;
    if stride == 0 {
        return Err(Error::Config("t0 stride must be positive".into()));
    }
    if n > len {
        return Err(Error::Config(format!(
            "window length {n} exceeds the series length {len}"
        )));
    }
    Ok((n / 2..=len - n / 2).step_by(stride).collect())
}

/// `floor(m^{4/5})`, guarded against `powf` landing just below an integer.
pub fn quantile_halfwidth(m: usize) -> usize {
    ((m as f64).powf(0.8) + 1e-9).floor() as usize
}

/// Everything needed to evaluate the local lag-window estimator on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationPlan {
    n: usize,
    bandwidth: f64,
    kernel: LagWindow,
    t0_grid: Vec<usize>,
    quantiles: Vec<QuantileLevel>,
    freq_grid: FrequencyGrid,
    quantile_halfwidth: usize,
}

impl EstimationPlan {
    pub fn new(
        n: usize,
        bandwidth: f64,
        kernel: LagWindow,
        t0_grid: Vec<usize>,
        quantiles: Vec<QuantileLevel>,
    ) -> Result<Self> {
        let freq_grid = FrequencyGrid::new(n)?;
        if !(bandwidth >= 1.0 && bandwidth < n as f64) {
            return Err(Error::Config(format!(
                "bandwidth must satisfy 1 <= B_n < n = {n}, got {bandwidth}"
            )));
        }
        if t0_grid.is_empty() {
            return Err(Error::Config("empty t0 grid".into()));
        }
        if quantiles.is_empty() {
            return Err(Error::Config("no quantile levels".into()));
        }
        let quantile_halfwidth = quantile_halfwidth(n / 2);
        if quantile_halfwidth < 1 {
            return Err(Error::Config("quantile half-width is zero".into()));
        }
        Ok(EstimationPlan {
            n,
            bandwidth,
            kernel,
            t0_grid,
            quantiles,
            freq_grid,
            quantile_halfwidth,
        })
    }

    /// Plan for a series of exactly `n` observations with one centered window.
    pub fn single_window(
        n: usize,
        bandwidth: f64,
        kernel: LagWindow,
        quantiles: Vec<QuantileLevel>,
    ) -> Result<Self> {
        Self::new(n, bandwidth, kernel, vec![n / 2], quantiles)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> usize {
        self.n / 2
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> LagWindow {
        self.kernel
    }

    pub fn t0_grid(&self) -> &[usize] {
        &self.t0_grid
    }

    pub fn quantiles(&self) -> &[QuantileLevel] {
        &self.quantiles
    }

    pub fn freq_grid(&self) -> &FrequencyGrid {
        &self.freq_grid
    }

    pub fn quantile_halfwidth(&self) -> usize {
        self.quantile_halfwidth
    }

    pub fn smoothing(&self) -> Smoothing {
        Smoothing {
            bandwidth: self.bandwidth,
            kernel: self.kernel,
        }
    }

    /// Same smoothing and quantiles, different window centers.
    pub fn with_t0_grid(&self, t0_grid: Vec<usize>) -> Result<Self> {
        Self::new(
            self.n,
            self.bandwidth,
            self.kernel,
            t0_grid,
            self.quantiles.clone(),
        )
    }

    /// Checks that every window of the plan fits in a sample of length `len`.
    pub fn check_len(&self, len: usize) -> Result<()> {
        for &t0 in &self.t0_grid {
            neighborhood(t0, self.n, len)?;
        }
        Ok(())
    }

    /// Non-negative lags `k <= n - 1` with non-zero weight `K(k / B_n)`.
    pub fn active_lags(&self) -> Vec<(usize, f64)> {
        (0..self.n)
            .map(|k| (k, self.kernel.eval(k as f64 / self.bandwidth)))
            .take_while(|&(k, _)| k as f64 <= self.bandwidth)
            .filter(|&(_, w)| w != 0.0)
            .collect()
    }
}

/// Lag-window parameters a field was computed with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    pub bandwidth: f64,
    pub kernel: LagWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    pub fn of(self, z: Complex64) -> f64 {
        match self {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Part::Re => "re",
            Part::Im => "im",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "re" | "real" => Ok(Part::Re),
            "im" | "imag" => Ok(Part::Im),
            other => Err(Error::Config(format!("unknown complex part '{other}'"))),
        }
    }
}

/// Complex values indexed by `(t0, omega, tau1, tau2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n: usize,
    t0s: Vec<usize>,
    freqs: Vec<f64>,
    quantiles: Vec<QuantileLevel>,
    smoothing: Option<Smoothing>,
    values: Vec<Complex64>,
}

impl SpectralField {
    /// A zero-filled field over the plan's grids.
    pub fn zeros(plan: &EstimationPlan) -> Self {
        Self::from_parts(
            plan.n(),
            plan.t0_grid().to_vec(),
            plan.freq_grid().freqs().to_vec(),
            plan.quantiles().to_vec(),
            Some(plan.smoothing()),
            Vec::new(),
        )
        .expect("zero field is well-formed")
    }

    /// Assembles a field from raw axes and values in `(t0, omega, tau1, tau2)`
    /// row-major order. An empty `values` is filled with zeros.
    pub fn from_parts(
        n: usize,
        t0s: Vec<usize>,
        freqs: Vec<f64>,
        quantiles: Vec<QuantileLevel>,
        smoothing: Option<Smoothing>,
        mut values: Vec<Complex64>,
    ) -> Result<Self> {
        let size = t0s.len() * freqs.len() * quantiles.len() * quantiles.len();
        if values.is_empty() {
            values = vec![Complex64::new(0.0, 0.0); size];
        }
        if values.len() != size {
            return Err(Error::Config(format!(
                "field expects {size} values, got {}",
                values.len()
            )));
        }
        Ok(SpectralField {
            n,
            t0s,
            freqs,
            quantiles,
            smoothing,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t0s(&self) -> &[usize] {
        &self.t0s
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn quantiles(&self) -> &[QuantileLevel] {
        &self.quantiles
    }

    pub fn smoothing(&self) -> Option<Smoothing> {
        self.smoothing
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    fn index(&self, ti: usize, wi: usize, a: usize, b: usize) -> usize {
        let q = self.quantiles.len();
        ((ti * self.freqs.len() + wi) * q + a) * q + b
    }

    /// Value at grid positions (not labels) `ti`, `wi`, `a`, `b`.
    #[inline]
    pub fn get(&self, ti: usize, wi: usize, a: usize, b: usize) -> Complex64 {
        self.values[self.index(ti, wi, a, b)]
    }

    #[inline]
    pub fn set(&mut self, ti: usize, wi: usize, a: usize, b: usize, z: Complex64) {
        let i = self.index(ti, wi, a, b);
        self.values[i] = z;
    }

    /// Contiguous block of all `(omega, tau1, tau2)` values for one window.
    pub(crate) fn t0_block_mut(&mut self, ti: usize) -> &mut [Complex64] {
        let q = self.quantiles.len();
        let len = self.freqs.len() * q * q;
        &mut self.values[ti * len..(ti + 1) * len]
    }

    /// Position of quantile level `tau` on the field's quantile axis.
    pub fn quantile_index(&self, tau: f64) -> Option<usize> {
        self.quantiles.iter().position(|q| q.approx_eq(tau))
    }

    /// Whether two fields share all grids (window length, centers, frequencies
    /// and quantile levels).
    pub fn same_grid(&self, other: &SpectralField) -> bool {
        self.n == other.n
            && self.t0s == other.t0s
            && self.freqs == other.freqs
            && self.quantiles == other.quantiles
    }

    /// Iterates over the selected part of `(tau1, tau2)` across all
    /// `(t0, omega)` cells.
    pub fn component(&self, a: usize, b: usize, part: Part) -> impl Iterator<Item = f64> + '_ {
        (0..self.t0s.len()).flat_map(move |ti| {
            (0..self.freqs.len()).map(move |wi| part.of(self.get(ti, wi, a, b)))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_rejects_non_finite_and_empty() {
        assert!(Series::new(vec![]).is_err());
        assert!(Series::new(vec![1.0, f64::NAN]).is_err());
        assert!(Series::new(vec![f64::INFINITY]).is_err());
        assert_eq!(Series::new(vec![1.0, 2.0]).unwrap().at(2), 2.0);
    }

    #[test]
    fn quantile_level_bounds() {
        assert!(QuantileLevel::new(0.0).is_err());
        assert!(QuantileLevel::new(1.0).is_err());
        assert!(QuantileLevel::new(f64::NAN).is_err());
        assert_eq!(QuantileLevel::new(0.25).unwrap().value(), 0.25);
    }

    #[test]
    fn frequency_grid_layout() {
        let g = FrequencyGrid::new(8).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.freqs()[0], 2.0 * PI / 8.0);
        assert!(FrequencyGrid::new(7).is_err());
        assert!(FrequencyGrid::new(2).is_err());

        let g = FrequencyGrid::new(512).unwrap();
        let ulp_pi = 2.0 * f64::EPSILON;
        for w in g.freqs().windows(2) {
            assert!(w[1] > w[0]);
            assert!(((w[1] - w[0]) - g.spacing()).abs() <= ulp_pi);
        }
        assert!(g.freqs().iter().all(|&w| w > 0.0 && w < PI));
    }

    #[test]
    fn snap_examples() {
        assert_eq!(fourier_snap(2.0 * PI / 8.0, 8).unwrap(), 2.0 * PI / 8.0);
        assert_eq!(fourier_snap(1.0, 8).unwrap(), 2.0 * PI / 8.0);
        // 1.0 is 0.2146 from 2pi/8 and 0.5708 from 4pi/8
        assert!((1.0 - 2.0 * PI / 8.0 - 0.2146).abs() < 1e-4);
        assert!((4.0 * PI / 8.0 - 1.0 - 0.5708).abs() < 1e-4);
        assert_eq!(fourier_snap(3.0 * PI / 8.0, 8).unwrap(), 4.0 * PI / 8.0);
        let g = FrequencyGrid::new(8).unwrap();
        let mid = 0.5 * (g.freqs()[0] + g.freqs()[1]);
        assert_eq!(fourier_snap(mid, 8).unwrap(), g.freqs()[1]);
    }

    #[test]
    fn snap_errors() {
        assert!(matches!(fourier_snap(0.0, 8), Err(Error::Domain(_))));
        assert!(matches!(fourier_snap(PI, 8), Err(Error::Domain(_))));
        assert!(matches!(fourier_snap(-1.0, 8), Err(Error::Domain(_))));
        assert!(matches!(fourier_snap(1.0, 2), Err(Error::Config(_))));
    }

    #[test]
    fn snap_extremes_clamp_to_interior() {
        assert_eq!(fourier_snap(1e-9, 16).unwrap(), 2.0 * PI / 16.0);
        assert_eq!(fourier_snap(PI - 1e-9, 16).unwrap(), 7.0 * 2.0 * PI / 16.0);
    }

    #[test]
    fn neighborhood_examples() {
        let nb = neighborhood(256, 512, 1024).unwrap();
        assert_eq!((nb.first(), nb.last(), nb.len()), (1, 512, 512));
        let nb = neighborhood(512, 512, 1024).unwrap();
        assert_eq!((nb.first(), nb.last()), (257, 768));
        assert!(matches!(
            neighborhood(100, 512, 1024),
            Err(Error::Boundary { t0: 100, .. })
        ));
        assert!(neighborhood(769, 512, 1024).is_err());
        assert!(neighborhood(768, 512, 1024).is_ok());
    }

    #[test]
    fn default_grid_keeps_windows_inside() {
        let g = default_t0_grid(8192, 512).unwrap();
        assert_eq!(g.len(), 31);
        assert_eq!(g[0], 256);
        assert_eq!(*g.last().unwrap(), 7936);
        for &t0 in &g {
            assert!(neighborhood(t0, 512, 8192).is_ok());
        }
        let s = strided_t0_grid(12992, 512, 256).unwrap();
        assert_eq!(s[0], 256);
        assert!(neighborhood(*s.last().unwrap(), 512, 12992).is_ok());
    }

    #[test]
    fn plan_validation() {
        let q = quantile_levels(&[0.5]).unwrap();
        assert!(EstimationPlan::new(512, 0.5, LagWindow::Parzen, vec![256], q.clone()).is_err());
        assert!(EstimationPlan::new(512, 512.0, LagWindow::Parzen, vec![256], q.clone()).is_err());
        assert!(EstimationPlan::new(512, 10.0, LagWindow::Parzen, vec![], q.clone()).is_err());
        let p = EstimationPlan::new(512, 10.0, LagWindow::Parzen, vec![256], q).unwrap();
        assert_eq!(p.quantile_halfwidth(), 84);
        assert!(p.check_len(512).is_ok());
        assert!(p.check_len(511).is_err());
        let lags: Vec<usize> = p.active_lags().iter().map(|l| l.0).collect();
        assert_eq!(lags, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn quantile_halfwidth_exact_powers() {
        assert_eq!(quantile_halfwidth(32), 16);
        assert_eq!(quantile_halfwidth(1024), 256);
        assert_eq!(quantile_halfwidth(1), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn snap_is_idempotent(omega in 1e-6f64..(PI - 1e-6), half in 2usize..600) {
                let n = 2 * half;
                let s = fourier_snap(omega, n).unwrap();
                prop_assert_eq!(fourier_snap(s, n).unwrap(), s);
                let g = FrequencyGrid::new(n).unwrap();
                prop_assert!(g.freqs().contains(&s));
                let best = g.freqs().iter().map(|f| (f - omega).abs()).fold(f64::INFINITY, f64::min);
                prop_assert!((s - omega).abs() <= best + 1e-12);
            }

            #[test]
            fn neighborhood_has_n_points(half in 2usize..200, extra in 0usize..400, off in 0usize..400) {
                let n = 2 * half;
                let len = n + extra;
                let t0 = half + off.min(extra);
                let nb = neighborhood(t0, n, len).unwrap();
                prop_assert_eq!(nb.iter().count(), n);
                prop_assert!(nb.first() >= 1 && nb.last() <= len);
            }
        }
    }
}
