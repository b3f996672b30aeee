use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use qspec::analysis::ground_truth;
use qspec::calibration::{calibrate, CalibrationBands};
use qspec::estimator::sweep;
use qspec::models::{simulate, simulate_stationary, ProcessModel};
use qspec::pipeline::{
    export_field, import_field, ingest_csv, render_heatmap, returns_pipeline, write_atomic,
    write_series, RunConfig,
};
use qspec::{Series, SpectralField};

#[derive(Parser, Debug)]
#[command(name = "qspec", version, about = "Local copula spectral analysis of time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a model preset and write the series as CSV.
    Simulate {
        #[command(flatten)]
        opts: Opts,
        /// Sample the stationary approximation frozen at this rescaled time.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Estimate the local spectral field of a series.
    Estimate {
        #[command(flatten)]
        opts: Opts,
    },
    /// Simulate white-noise significance bands.
    Calibrate {
        #[command(flatten)]
        opts: Opts,
    },
    /// Monte-Carlo ground-truth field of a model preset.
    Truth {
        #[command(flatten)]
        opts: Opts,
        /// Also write the standard errors to this file.
        #[arg(long)]
        se_file: Option<PathBuf>,
    },
    /// Render a field with calibrated bands as a PNG heatmap.
    Render {
        #[command(flatten)]
        opts: Opts,
        /// Field CSV to render.
        #[arg(long)]
        field: PathBuf,
    },
    /// Prices to returns, volatility, bootstrap replicates and best match.
    ReturnsPipeline {
        #[command(flatten)]
        opts: Opts,
    },
}

/// Flags mirroring the config-file keys. Flags win over the file.
#[derive(Args, Debug, Default)]
struct Opts {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Column index (0-based) or header name of the input CSV.
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    /// Series length.
    #[arg(long = "T")]
    t_len: Option<usize>,
    /// Window length.
    #[arg(long)]
    n: Option<usize>,
    /// Lag-window bandwidth.
    #[arg(long = "B", alias = "bandwidth")]
    bandwidth: Option<f64>,
    #[arg(long)]
    kernel: Option<String>,
    /// Window-center spacing, or "default".
    #[arg(long)]
    stride: Option<String>,
    /// Comma-separated quantile levels.
    #[arg(long)]
    quantiles: Option<String>,
    /// Calibration replications.
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Calibration bands file (read if present, written otherwise).
    #[arg(long)]
    bands: Option<PathBuf>,
    /// Ground-truth replications.
    #[arg(long = "R")]
    r: Option<usize>,
    /// Ground-truth path length.
    #[arg(long)]
    length: Option<usize>,
    /// Bootstrap replicates.
    #[arg(long = "J")]
    j: Option<usize>,
    /// Local variance halfwidth.
    #[arg(long)]
    n_v: Option<usize>,
    /// Divide the local variance by 2 n_v + 1 instead of the weight sum.
    #[arg(long)]
    paper_exact: Option<bool>,
    #[arg(long)]
    render: Option<bool>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output file, overriding the default name inside the output directory.
    #[arg(long)]
    file: Option<PathBuf>,
}

impl Opts {
    fn config(&self) -> Result<RunConfig> {
        self.config_over(RunConfig::default())
    }

    /// `preset`, then the config file, then the flags.
    fn config_over(&self, preset: RunConfig) -> Result<RunConfig> {
        let mut cfg = preset;
        if let Some(p) = &self.config {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            cfg.merge_text(&text)
                .with_context(|| format!("in config file {}", p.display()))?;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let pairs: [(&str, Option<String>); 19] = [
            ("input", path(&self.input)),
            ("column", self.column.clone()),
            ("preset", self.preset.clone()),
            ("T", self.t_len.map(|v| v.to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("B", self.bandwidth.map(|v| v.to_string())),
            ("kernel", self.kernel.clone()),
            ("stride", self.stride.clone()),
            ("quantiles", self.quantiles.clone()),
            ("M", self.m.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("bands", path(&self.bands)),
            ("R", self.r.map(|v| v.to_string())),
            ("length", self.length.map(|v| v.to_string())),
            ("J", self.j.map(|v| v.to_string())),
            ("n_v", self.n_v.map(|v| v.to_string())),
            ("paper_exact", self.paper_exact.map(|v| v.to_string())),
            ("render", self.render.map(|v| v.to_string())),
            ("output", path(&self.output)),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn target(&self, cfg: &RunConfig, default_name: &str) -> Result<PathBuf> {
        let p = match &self.file {
            Some(f) => f.clone(),
            None => cfg.output.join(default_name),
        };
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(p)
    }
}

fn input_series(cfg: &RunConfig) -> Result<Series> {
    let Some(path) = &cfg.input else {
        bail!("no input file given (use --input or the 'input' config key)");
    };
    Ok(ingest_csv(path, &cfg.column)?)
}

fn model(cfg: &RunConfig) -> Result<ProcessModel> {
    let Some(name) = &cfg.preset else {
        bail!("no model preset given (use --preset)");
    };
    Ok(ProcessModel::preset(name)?)
}

/// Loads cached bands when they match the plan; otherwise calibrates and
/// caches them at `path`.
fn bands_for(cfg: &RunConfig, path: &Path) -> Result<CalibrationBands> {
    if path.exists() {
        let b = CalibrationBands::load(path)?;
        if b.matches(cfg.n, cfg.bandwidth, cfg.kernel) {
            info!("using cached bands {}", path.display());
            return Ok(b);
        }
        info!("cached bands {} do not match the plan; recalibrating", path.display());
    }
    let b = calibrate(&cfg.calibration_plan()?, cfg.m, cfg.seed)?;
    b.save(path)?;
    Ok(b)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { opts, theta } => {
            let cfg = opts.config()?;
            let m = model(&cfg)?;
            let s = match theta {
                Some(th) => simulate_stationary(&m, th, cfg.t_len, cfg.seed)?,
                None => simulate(&m, cfg.t_len, cfg.seed)?,
            };
            let out = opts.target(&cfg, "series.csv")?;
            write_series(&s, &out)?;
            info!("wrote {}", out.display());
        }
        Command::Estimate { opts } => {
            let cfg = opts.config()?;
            let s = input_series(&cfg)?;
            let f = sweep(&s, &cfg.plan(s.len())?)?;
            let out = opts.target(&cfg, "field.csv")?;
            export_field(&f, &out)?;
            info!("wrote {}", out.display());
        }
        Command::Calibrate { opts } => {
            let cfg = opts.config()?;
            let b = calibrate(&cfg.calibration_plan()?, cfg.m, cfg.seed)?;
            let out = match (&opts.file, &cfg.bands) {
                (None, Some(p)) => p.clone(),
                _ => opts.target(&cfg, "bands.txt")?,
            };
            b.save(&out)?;
            info!("wrote {}", out.display());
        }
        Command::Truth { opts, se_file } => {
            let cfg = opts.config()?;
            let m = model(&cfg)?;
            let plan = cfg.plan(cfg.t_len)?;
            let g = ground_truth(&m, plan.t0_grid(), cfg.t_len, cfg.r, cfg.length, &plan, cfg.seed)?;
            let out = opts.target(&cfg, "truth.csv")?;
            export_field(&g.mean, &out)?;
            if let Some(p) = se_file {
                export_field(&g.std_error, &p)?;
            }
            info!("wrote {}", out.display());
        }
        Command::Render { opts, field } => {
            let cfg = opts.config()?;
            let f: SpectralField = import_field(&field)?;
            let Some(bp) = &cfg.bands else {
                bail!("render needs --bands");
            };
            let bands = CalibrationBands::load(bp)?;
            let out = opts.target(&cfg, "heatmap.png")?;
            render_heatmap(&f, &bands, &out)?;
            info!("wrote {}", out.display());
        }
        Command::ReturnsPipeline { opts } => {
            let cfg = opts.config_over(RunConfig::returns_preset())?;
            let prices = input_series(&cfg)?;
            let rep = returns_pipeline(&prices, &cfg)?;
            let dir = &cfg.output;
            fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
            write_series(&rep.returns, &dir.join("returns.csv"))?;
            write_series(&Series::new(rep.sigma.values().to_vec())?, &dir.join("sigma.csv"))?;
            write_series(&rep.best_series, &dir.join("best_series.csv"))?;
            export_field(&rep.field, &dir.join("field.csv"))?;
            export_field(&rep.best_field, &dir.join("best_field.csv"))?;
            let mut summary = String::from("replicate,distance\n");
            for (j, d) in rep.distances.iter().enumerate() {
                summary.push_str(&format!("{},{}\n", j + 1, d));
            }
            write_atomic(&dir.join("distances.csv"), summary.as_bytes())?;
            write_atomic(&dir.join("best.txt"), format!("{}\n", rep.best).as_bytes())?;
            if cfg.render {
                let bp = cfg.bands.clone().unwrap_or_else(|| dir.join("bands.txt"));
                let bands = bands_for(&cfg, &bp)?;
                render_heatmap(&rep.field, &bands, &dir.join("field.png"))?;
                render_heatmap(&rep.best_field, &bands, &dir.join("best_field.png"))?;
            }
            println!("best replicate {} of {}", rep.best, rep.distances.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("QSPEC_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("qspec: cannot configure {n} threads: {e}");
                    return ExitCode::FAILURE;
                }
            }
            _ => {
                eprintln!("qspec: QSPEC_THREADS must be a positive integer, got '{v}'");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qspec: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
