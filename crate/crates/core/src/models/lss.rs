use rayon::prelude::*;

use super::simulate::{simulate_prefix, simulate_stationary_replication, SimOptions};
use super::ProcessModel;
use crate::error::{Error, Result};

const GRID: usize = 50;

/// Offset separating stationary-approximation streams from triangular-array
/// streams under one seed.
const STATIONARY_STREAM_OFFSET: u64 = 1 << 40;

/// Monte-Carlo sup-distance between the bivariate distribution of
/// `(X_{t,T}, X_{t+k,T})` and that of the frozen pair `(X^theta_s, X^theta_{s+k})`.
///
/// Each side uses `mc_samples` independent paths. Both empirical CDFs are
/// evaluated on a `50 x 50` grid of pooled marginal quantiles.
pub fn lss_distance(
    model: &ProcessModel,
    theta: f64,
    t: usize,
    t_len: usize,
    lag: i64,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    if mc_samples < 1000 {
        return Err(Error::Domain(format!(
            "lss_distance needs at least 1000 Monte-Carlo samples, got {mc_samples}"
        )));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    let second = t as i64 + lag;
    if t == 0 || t > t_len || second < 1 || second > t_len as i64 {
        return Err(Error::Domain(format!(
            "pair ({t}, {second}) is outside 1..={t_len}"
        )));
    }
    model.validate()?;
    let second = second as usize;
    let last = t.max(second);

    let opts = SimOptions::default();
    let array: Vec<(f64, f64)> = (0..mc_samples as u64)
        .into_par_iter()
        .map(|r| {
            let p = simulate_prefix(model, t_len, last, seed, r, opts)
                .map_err(|e| e.with_context(format!("replication {r}")))?;
            Ok((p[t - 1], p[second - 1]))
        })
        .collect::<Result<_>>()?;

    let span = lag.unsigned_abs() as usize + 1;
    let (a, b) = if lag >= 0 { (0, span - 1) } else { (span - 1, 0) };
    let frozen: Vec<(f64, f64)> = (0..mc_samples as u64)
        .into_par_iter()
        .map(|r| {
            let p = simulate_stationary_replication(
                model,
                theta,
                span,
                seed,
                STATIONARY_STREAM_OFFSET + r,
                opts,
            )
            .map_err(|e| e.with_context(format!("replication {r}")))?;
            Ok((p.values()[a], p.values()[b]))
        })
        .collect::<Result<_>>()?;

    let gx = pooled_grid(array.iter().chain(&frozen).map(|p| p.0));
    let gy = pooled_grid(array.iter().chain(&frozen).map(|p| p.1));
    let fa = ecdf_on_grid(&array, &gx, &gy);
    let fb = ecdf_on_grid(&frozen, &gx, &gy);
    Ok(fa
        .iter()
        .zip(&fb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Quantiles at levels `i / (GRID + 1)`, `i = 1..=GRID`.
fn pooled_grid(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (1..=GRID)
        .map(|i| {
            let rank = ((i * n) as f64 / (GRID + 1) as f64).ceil() as usize;
            v[rank.clamp(1, n) - 1]
        })
        .collect()
}

/// `F(gx[i], gy[j])` in row-major order.
fn ecdf_on_grid(pairs: &[(f64, f64)], gx: &[f64], gy: &[f64]) -> Vec<f64> {
    let mut counts = vec![0u64; GRID * GRID];
    for &(x, y) in pairs {
        let i = gx.partition_point(|g| *g < x);
        let j = gy.partition_point(|g| *g < y);
        if i < GRID && j < GRID {
            counts[i * GRID + j] += 1;
        }
    }
    for i in 0..GRID {
        for j in 0..GRID {
            let mut c = counts[i * GRID + j];
            if i > 0 {
                c += counts[(i - 1) * GRID + j];
            }
            if j > 0 {
                c += counts[i * GRID + j - 1];
            }
            if i > 0 && j > 0 {
                c -= counts[(i - 1) * GRID + j - 1];
            }
            counts[i * GRID + j] = c;
        }
    }
    let n = pairs.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}
