use std::sync::Arc;

use super::simulate::{simulate_replication, SimOptions};
use super::ProcessModel;
use crate::domain::Series;
use crate::error::{Error, Result};
use crate::kernel::LagWindow;

/// Local standard deviations `sigma_t`, `t = 1..=T`, all positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPath {
    values: Vec<f64>,
    halfwidth: usize,
}

impl SigmaPath {
    pub fn new(values: Vec<f64>, halfwidth: usize) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(
                "sigma path must be non-empty with positive finite values".into(),
            ));
        }
        Ok(SigmaPath { values, halfwidth })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn halfwidth(&self) -> usize {
        self.halfwidth
    }
}

/// `(4/3) * Parzen(x)`, which integrates to one.
fn kbar(x: f64) -> f64 {
    4.0 / 3.0 * LagWindow::Parzen.eval(x)
}

/// Raw kernel variance estimates `sigma^2_t` before any flooring.
///
/// The window `|s - t| <= n_v` is clipped at the sample edges. The local mean
/// is the plain average of the clipped window. With `paper_exact` the weighted
/// sum is divided by `2 n_v + 1`; otherwise by the sum of the weights used.
pub fn local_variance(series: &Series, n_v: usize, paper_exact: bool) -> Result<Vec<f64>> {
    let x = series.values();
    let len = x.len();
    if n_v == 0 {
        return Err(Error::Domain("variance halfwidth must be at least 1".into()));
    }
    if len < 2 * n_v + 1 {
        return Err(Error::Domain(format!(
            "series of length {len} is shorter than 2 n_v + 1 = {}",
            2 * n_v + 1
        )));
    }
    let weights: Vec<f64> = (0..=n_v).map(|d| kbar(d as f64 / n_v as f64)).collect();
    let full = (2 * n_v + 1) as f64;
    let out = (0..len)
        .map(|t| {
            let lo = t.saturating_sub(n_v);
            let hi = (t + n_v).min(len - 1);
            let win = &x[lo..=hi];
            let mean = win.iter().sum::<f64>() / win.len() as f64;
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (s, v) in (lo..=hi).zip(win) {
                let w = weights[s.abs_diff(t)];
                acc += w * (v - mean) * (v - mean);
                wsum += w;
            }
            if paper_exact {
                acc / full
            } else {
                acc / wsum
            }
        })
        .collect();
    Ok(out)
}

/// `sigma_t = sqrt(sigma^2_t)`, floored at `EPSILON * max|x|` (or `EPSILON`
/// for an all-zero series).
pub fn estimate_local_variance(series: &Series, n_v: usize, paper_exact: bool) -> Result<SigmaPath> {
    let raw = local_variance(series, n_v, paper_exact)?;
    let scale = series.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = f64::EPSILON * if scale > 0.0 { scale } else { 1.0 };
    let mut floored = 0usize;
    let values = raw
        .into_iter()
        .map(|v2| {
            let s = v2.max(0.0).sqrt();
            if s < floor {
                floored += 1;
                floor
            } else {
                s
            }
        })
        .collect();
    if floored > 0 {
        log::warn!("local variance vanished at {floored} time points; floored sigma at {floor:e}");
    }
    SigmaPath::new(values, n_v)
}

/// Resamples standardized residuals `x_t / sigma_t` with replacement and
/// returns `sigma_t Z_t`.
pub fn tvarch0_bootstrap(series: &Series, sigma: &SigmaPath, seed: u64) -> Result<Series> {
    tvarch0_bootstrap_replication(series, sigma, seed, 0)
}

pub fn tvarch0_bootstrap_replication(
    series: &Series,
    sigma: &SigmaPath,
    seed: u64,
    replication: u64,
) -> Result<Series> {
    if series.len() != sigma.len() {
        return Err(Error::Config(format!(
            "series length {} differs from sigma path length {}",
            series.len(),
            sigma.len()
        )));
    }
    let pool: Vec<f64> = series
        .values()
        .iter()
        .zip(sigma.values())
        .map(|(x, s)| x / s)
        .collect();
    let model = ProcessModel::TvArch0Bootstrap {
        sigma: Arc::new(sigma.values().to_vec()),
        pool: Arc::new(pool),
    };
    // the model is not recursive, so no burn-in is needed
    simulate_replication(
        &model,
        series.len(),
        seed,
        replication,
        SimOptions { burn_in: 0 },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{simulate, Noise};

    fn mean(x: &[f64]) -> f64 {
        x.iter().sum::<f64>() / x.len() as f64
    }

    #[test]
    fn constant_series_has_zero_variance() {
        let s = Series::new(vec![3.0; 200]).unwrap();
        let raw = local_variance(&s, 10, false).unwrap();
        assert!(raw.iter().all(|v| *v == 0.0));
        let p = estimate_local_variance(&s, 10, false).unwrap();
        assert!(p.values().iter().all(|v| *v == 3.0 * f64::EPSILON));
    }

    #[test]
    fn iid_unit_variance_is_recovered() {
        let s = simulate(&ProcessModel::Iid(Noise::Gaussian), 10_000, 17).unwrap();
        let raw = local_variance(&s, 50, false).unwrap();
        let m = mean(&raw[50..10_000 - 50]);
        assert!((m - 1.0).abs() < 0.1, "{m}");

        let exact = local_variance(&s, 50, true).unwrap();
        let wsum: f64 = (-50i32..=50).map(|d| kbar(d as f64 / 50.0)).sum();
        let ratio = mean(&exact[50..10_000 - 50]) / m;
        assert!((ratio - wsum / 101.0).abs() < 1e-9, "{ratio}");
        assert!((ratio - 0.5).abs() < 0.02);
    }

    #[test]
    fn too_short_series() {
        let s = Series::new(vec![1.0; 20]).unwrap();
        assert!(local_variance(&s, 10, false).is_err());
    }

    #[test]
    fn degenerate_pool_returns_sigma() {
        let sig: Vec<f64> = (1..=300).map(|i| 0.5 + (i as f64 / 40.0).sin().abs()).collect();
        let path = SigmaPath::new(sig.clone(), 5).unwrap();
        let s = Series::new(sig.clone()).unwrap();
        let b = tvarch0_bootstrap(&s, &path, 3).unwrap();
        assert_eq!(b.values(), sig.as_slice());
    }

    #[test]
    fn bootstrap_resamples_the_pool() {
        let s = simulate(&ProcessModel::Iid(Noise::Gaussian), 2000, 2).unwrap();
        let path = estimate_local_variance(&s, 50, false).unwrap();
        let pool: Vec<f64> = s.values().iter().zip(path.values()).map(|(x, v)| x / v).collect();
        let mut sorted_pool = pool.clone();
        sorted_pool.sort_by(f64::total_cmp);
        let a = tvarch0_bootstrap(&s, &path, 1).unwrap();
        let b = tvarch0_bootstrap(&s, &path, 2).unwrap();
        assert_ne!(a.values(), b.values());
        for out in [&a, &b] {
            let z: Vec<f64> = out.values().iter().zip(path.values()).map(|(x, v)| x / v).collect();
            for v in &z {
                // every standardized draw is a pool member up to rounding
                let i = sorted_pool.partition_point(|p| *p < v - 1e-12);
                assert!((sorted_pool[i] - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
            let vz = mean(&z.iter().map(|v| v * v).collect::<Vec<_>>()) - mean(&z).powi(2);
            let vp = mean(&pool.iter().map(|v| v * v).collect::<Vec<_>>()) - mean(&pool).powi(2);
            assert!((vz / vp - 1.0).abs() < 0.15, "{vz} vs {vp}");
        }
    }

    #[test]
    fn bootstrap_length_mismatch() {
        let s = Series::new(vec![1.0; 10]).unwrap();
        let p = SigmaPath::new(vec![1.0; 9], 1).unwrap();
        assert!(matches!(tvarch0_bootstrap(&s, &p, 0), Err(Error::Config(_))));
    }
}
