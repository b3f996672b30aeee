//! Files, configuration, rendering and the returns workflow.

mod io;
mod render;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use io::{
    export_field, field_from_csv, field_to_csv, import_field, ingest_csv, log_returns,
    series_to_csv, write_atomic, write_series, ColumnSelector, FIELD_HEADER,
};
pub use render::{panel_content, rasterize, render_heatmap, HeatmapLayout, PanelContent, Raster};

use crate::analysis::{field_l2_distance, Component};
use crate::domain::{
    default_t0_grid, quantile_levels, strided_t0_grid, EstimationPlan, Part, Series, SpectralField,
};
use crate::error::{Error, Result};
use crate::estimator::sweep;
use crate::kernel::LagWindow;
use crate::models::{estimate_local_variance, tvarch0_bootstrap_replication, SigmaPath};

/// Settings shared by the command-line tools. Every field has a config-file
/// key of the same name.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub column: ColumnSelector,
    pub preset: Option<String>,
    /// Series length for simulation.
    pub t_len: usize,
    pub n: usize,
    pub bandwidth: f64,
    pub kernel: LagWindow,
    /// Window-center spacing; `None` uses centers `n/2 (k+1)`.
    pub stride: Option<usize>,
    pub quantiles: Vec<f64>,
    /// Calibration replications.
    pub m: usize,
    pub seed: u64,
    pub bands: Option<PathBuf>,
    /// Ground-truth replications.
    pub r: usize,
    /// Ground-truth path length.
    pub length: usize,
    /// Bootstrap replications.
    pub j: usize,
    /// Local variance halfwidth.
    pub n_v: usize,
    pub paper_exact: bool,
    pub render: bool,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            column: ColumnSelector::default(),
            preset: None,
            t_len: 8192,
            n: 512,
            bandwidth: 10.0,
            kernel: LagWindow::Parzen,
            stride: None,
            quantiles: vec![0.1, 0.5, 0.9],
            m: 1000,
            seed: 0,
            bands: None,
            r: 200,
            length: 2048,
            j: 10,
            n_v: 50,
            paper_exact: false,
            render: true,
            output: PathBuf::from("out"),
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    /// Settings of the returns study: `n = 512`, `B_n = 25`, stride 256.
    pub fn returns_preset() -> Self {
        RunConfig {
            bandwidth: 25.0,
            stride: Some(256),
            ..RunConfig::default()
        }
    }

    /// Sets one key. Keys use the config-file spelling (`T` or `t_len`,
    /// `B` or `bandwidth`, ...).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("invalid {what} '{value}' for key '{key}'"));
        let int = || value.parse::<usize>().map_err(|_| bad("integer"));
        match key.trim().replace('-', "_").as_str() {
            "input" => self.input = Some(PathBuf::from(value)),
            "column" => self.column = ColumnSelector::parse(value),
            "preset" | "model" => self.preset = Some(value.to_string()),
            "T" | "t_len" => self.t_len = int()?,
            "n" => self.n = int()?,
            "B" | "bandwidth" => self.bandwidth = value.parse().map_err(|_| bad("number"))?,
            "kernel" => self.kernel = value.parse()?,
            "stride" => {
                self.stride = match value {
                    "" | "default" | "none" => None,
                    _ => Some(int()?),
                }
            }
            "quantiles" => {
                self.quantiles = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|_| bad("quantile list")))
                    .collect::<Result<_>>()?
            }
            "M" | "m" => self.m = int()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "bands" => self.bands = Some(PathBuf::from(value)),
            "R" | "r" => self.r = int()?,
            "length" => self.length = int()?,
            "J" | "j" => self.j = int()?,
            "n_v" | "nv" => self.n_v = int()?,
            "paper_exact" => self.paper_exact = parse_bool(value).ok_or_else(|| bad("flag"))?,
            "render" => self.render = parse_bool(value).ok_or_else(|| bad("flag"))?,
            "output" => self.output = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                row: i as u64 + 1,
                column: 1,
                message: "expected 'key = value'".into(),
            })?;
            self.set(k, v).map_err(|e| match e {
                Error::Config(m) => Error::Parse {
                    row: i as u64 + 1,
                    column: 1,
                    message: m,
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.merge_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(Error::Config(format!("n must be even and at least 4, got {}", self.n)));
        }
        if self.quantiles.is_empty() {
            return Err(Error::Config("empty quantile list".into()));
        }
        quantile_levels(&self.quantiles)?;
        if self.quantiles.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("quantiles must be sorted and distinct".into()));
        }
        if self.stride == Some(0) {
            return Err(Error::Config("stride must be positive".into()));
        }
        Ok(())
    }

    /// Estimation plan for a series of length `len`.
    pub fn plan(&self, len: usize) -> Result<EstimationPlan> {
        self.validate()?;
        if self.n > len {
            return Err(Error::Config(format!(
                "window length n = {} exceeds the series length {len}",
                self.n
            )));
        }
        let grid = match self.stride {
            None => default_t0_grid(len, self.n)?,
            Some(s) => strided_t0_grid(len, self.n, s)?,
        };
        EstimationPlan::new(
            self.n,
            self.bandwidth,
            self.kernel,
            grid,
            quantile_levels(&self.quantiles)?,
        )
    }

    /// Plan with the single centered window used by calibration.
    pub fn calibration_plan(&self) -> Result<EstimationPlan> {
        self.validate()?;
        EstimationPlan::single_window(
            self.n,
            self.bandwidth,
            self.kernel,
            quantile_levels(&self.quantiles)?,
        )
    }
}

/// The components compared when matching bootstrap fields to the data:
/// `Re f(0.1, 0.1)`, `Re f(0.9, 0.9)` and `Im f(0.9, 0.1)`.
pub fn match_components() -> [Component; 3] {
    [
        Component::new(0.1, 0.1, Part::Re),
        Component::new(0.9, 0.9, Part::Re),
        Component::new(0.9, 0.1, Part::Im),
    ]
}

/// 1-based index of the candidate closest to `target` in the summed distance
/// over [`match_components`], with all distances. Ties go to the lower index.
pub fn best_match(target: &SpectralField, candidates: &[SpectralField]) -> Result<(usize, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate fields".into()));
    }
    let comps = match_components();
    let d = candidates
        .iter()
        .map(|c| field_l2_distance(target, c, &comps))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, v) in d.iter().enumerate() {
        if *v < d[best] {
            best = i;
        }
    }
    Ok((best + 1, d))
}

#[derive(Debug, Clone)]
pub struct ReturnsReport {
    pub returns: Series,
    pub sigma: SigmaPath,
    pub field: SpectralField,
    /// 1-based index of the best-matching bootstrap replicate.
    pub best: usize,
    pub distances: Vec<f64>,
    pub best_series: Series,
    pub best_field: SpectralField,
}

/// Prices to log returns, local volatility, `J` tvARCH(0) bootstrap series,
/// their fields, and the replicate whose field is closest to the data's.
///
/// Replicate `j` uses RNG stream `j` under `cfg.seed`.
pub fn returns_pipeline(prices: &Series, cfg: &RunConfig) -> Result<ReturnsReport> {
    if cfg.j == 0 {
        return Err(Error::Config("need at least one bootstrap replicate".into()));
    }
    let returns = log_returns(prices)?;
    let sigma = estimate_local_variance(&returns, cfg.n_v, cfg.paper_exact)?;
    let plan = cfg.plan(returns.len())?;
    for c in match_components() {
        if !plan.quantiles().iter().any(|q| (q.value() - c.tau1).abs() < 1e-12)
            || !plan.quantiles().iter().any(|q| (q.value() - c.tau2).abs() < 1e-12)
        {
            return Err(Error::Config(
                "the returns workflow needs quantile levels 0.1 and 0.9".into(),
            ));
        }
    }
    let field = sweep(&returns, &plan)?;
    let boots: Vec<(Series, SpectralField)> = (1..=cfg.j as u64)
        .into_par_iter()
        .map(|j| {
            let s = tvarch0_bootstrap_replication(&returns, &sigma, cfg.seed, j)?;
            let f = sweep(&s, &plan)?;
            Ok((s, f))
        })
        .collect::<Result<_>>()?;
    let fields: Vec<SpectralField> = boots.iter().map(|b| b.1.clone()).collect();
    let (best, distances) = best_match(&field, &fields)?;
    let (best_series, best_field) = boots.into_iter().nth(best - 1).expect("index in range");
    Ok(ReturnsReport {
        returns,
        sigma,
        field,
        best,
        distances,
        best_series,
        best_field,
    })
}
