//! White-noise significance bands by simulation, and the heatmap color scale.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::domain::{EstimationPlan, Part, QuantileLevel, Series, SpectralField};
use crate::error::{Error, Result};
use crate::estimator::{order_statistic, WindowEstimator};
use crate::kernel::LagWindow;
use crate::pipeline::write_atomic;
use crate::rng::stream;
use crate::Complex64;

/// Smallest replication count accepted by [`calibrate`].
pub const MIN_REPLICATIONS: usize = 100;
/// Level of the upper band edge.
pub const UPPER_LEVEL: f64 = 0.995;
/// Level of the lower band edge.
pub const LOWER_LEVEL: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub tau1: f64,
    pub tau2: f64,
    pub part: Part,
    pub q_min: f64,
    pub q_max: f64,
}

/// Per `(tau1, tau2, part)` band edges plus the parameters they were
/// simulated with.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBands {
    pub n: usize,
    pub bandwidth: f64,
    pub kernel: LagWindow,
    pub replications: usize,
    pub seed: u64,
    pub bands: Vec<Band>,
}

impl CalibrationBands {
    pub fn get(&self, tau1: f64, tau2: f64, part: Part) -> Option<&Band> {
        self.bands.iter().find(|b| {
            b.part == part && (b.tau1 - tau1).abs() <= 1e-12 && (b.tau2 - tau2).abs() <= 1e-12
        })
    }

    /// Whether the bands were simulated with the plan's window length and smoothing.
    pub fn matches(&self, n: usize, bandwidth: f64, kernel: LagWindow) -> bool {
        self.n == n && self.bandwidth == bandwidth && self.kernel == kernel
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# calibration bands: band = tau1 tau2 part q_min q_max");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "bandwidth = {}", self.bandwidth);
        let _ = writeln!(s, "kernel = {}", self.kernel);
        let _ = writeln!(s, "replications = {}", self.replications);
        let _ = writeln!(s, "seed = {}", self.seed);
        for b in &self.bands {
            let _ = writeln!(
                s,
                "band = {} {} {} {} {}",
                b.tau1,
                b.tau2,
                b.part.name(),
                b.q_min,
                b.q_max
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut bandwidth = None;
        let mut kernel = None;
        let mut replications = None;
        let mut seed = None;
        let mut bands = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let row = i as u64 + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |column: usize, message: String| Error::Parse {
                row,
                column,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(1, "expected 'key = value'".into()))?;
            let value = value.trim();
            match key.trim() {
                "n" => n = Some(parse_num::<usize>(value, row, 2)?),
                "bandwidth" => bandwidth = Some(parse_num::<f64>(value, row, 2)?),
                "kernel" => {
                    kernel = Some(value.parse::<LagWindow>().map_err(|e| perr(2, e.to_string()))?)
                }
                "replications" => replications = Some(parse_num::<usize>(value, row, 2)?),
                "seed" => seed = Some(parse_num::<u64>(value, row, 2)?),
                "band" => {
                    let f: Vec<&str> = value.split_whitespace().collect();
                    if f.len() != 5 {
                        return Err(perr(2, format!("band needs 5 fields, got {}", f.len())));
                    }
                    let part = Part::parse(f[2]).map_err(|e| perr(2, e.to_string()))?;
                    let band = Band {
                        tau1: parse_num(f[0], row, 2)?,
                        tau2: parse_num(f[1], row, 2)?,
                        part,
                        q_min: parse_num(f[3], row, 2)?,
                        q_max: parse_num(f[4], row, 2)?,
                    };
                    if !(band.q_min <= band.q_max) {
                        return Err(perr(2, "q_min exceeds q_max".into()));
                    }
                    bands.push(band);
                }
                other => return Err(perr(1, format!("unknown key '{other}'"))),
            }
        }
        let missing = |k: &str| Error::Config(format!("bands file lacks '{k}'"));
        Ok(CalibrationBands {
            n: n.ok_or_else(|| missing("n"))?,
            bandwidth: bandwidth.ok_or_else(|| missing("bandwidth"))?,
            kernel: kernel.ok_or_else(|| missing("kernel"))?,
            replications: replications.ok_or_else(|| missing("replications"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            bands,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, row: u64, column: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| Error::Parse {
        row,
        column,
        message: format!("'{s}': {e}"),
    })
}

/// White-noise series used by replication `m` of a calibration run.
pub fn calibration_series(n: usize, seed: u64, m: u64) -> Series {
    let mut rng = stream(seed, m);
    Series::new((0..n).map(|_| rng.random::<f64>()).collect()).expect("uniform draws are finite")
}

/// Simulates `replications` i.i.d. uniform series of length `n`, evaluates the
/// estimator in the single centered window over all Fourier frequencies, and
/// takes the 0.5% quantile of the per-series minima and the 99.5% quantile of
/// the per-series maxima for every `(tau1, tau2, part)`.
pub fn calibrate(plan: &EstimationPlan, replications: usize, seed: u64) -> Result<CalibrationBands> {
    calibrate_with(plan, replications, seed, calibration_series)
}

/// [`calibrate`] with a caller-supplied white-noise generator `(n, seed, m)`.
pub fn calibrate_with(
    plan: &EstimationPlan,
    replications: usize,
    seed: u64,
    noise: impl Fn(usize, u64, u64) -> Series + Sync,
) -> Result<CalibrationBands> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::Config(format!(
            "calibration needs at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    let n = plan.n();
    if plan.t0_grid() != [n / 2] {
        return Err(Error::Config(format!(
            "calibration plan must have the single window center t0 = {}",
            n / 2
        )));
    }
    let engine = WindowEstimator::new(plan);
    let nq = plan.quantiles().len();
    let nf = plan.freq_grid().len();
    let cells = nq * nq * 2;

    // per replication: (min, max) for each (a, b, part)
    let extremes: Vec<Vec<(f64, f64)>> = (0..replications as u64)
        .into_par_iter()
        .map(|m| {
            let series = noise(n, seed, m);
            let mut block = vec![Complex64::new(0.0, 0.0); engine.block_len()];
            engine.block(&series, n / 2, &mut block)?;
            let mut ext = vec![(f64::INFINITY, f64::NEG_INFINITY); cells];
            for wi in 0..nf {
                for ab in 0..nq * nq {
                    let z = block[wi * nq * nq + ab];
                    for (p, v) in [(0, z.re), (1, z.im)] {
                        let e = &mut ext[ab * 2 + p];
                        e.0 = e.0.min(v);
                        e.1 = e.1.max(v);
                    }
                }
            }
            Ok(ext)
        })
        .collect::<Result<_>>()?;

    let taus = plan.quantiles();
    let mut bands = Vec::with_capacity(cells);
    for a in 0..nq {
        for b in 0..nq {
            for (p, part) in [(0, Part::Re), (1, Part::Im)] {
                let c = (a * nq + b) * 2 + p;
                let mut lows: Vec<f64> = extremes.iter().map(|e| e[c].0).collect();
                let mut highs: Vec<f64> = extremes.iter().map(|e| e[c].1).collect();
                bands.push(Band {
                    tau1: taus[a].value(),
                    tau2: taus[b].value(),
                    part,
                    q_min: order_statistic(&mut lows, LOWER_LEVEL),
                    q_max: order_statistic(&mut highs, UPPER_LEVEL),
                });
            }
        }
    }
    Ok(CalibrationBands {
        n,
        bandwidth: plan.bandwidth(),
        kernel: plan.kernel(),
        replications,
        seed,
        bands,
    })
}

/// A band widened to the range of a particular field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEntry {
    pub q_min: f64,
    pub q_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl ScaleEntry {
    /// Position on the palette: `-1` at `v_min` (cyan), `0` inside the band
    /// (dark blue), `1` at `v_max` (red). Nondecreasing in `value`.
    pub fn position(&self, value: f64) -> f64 {
        if value < self.q_min {
            let w = self.q_min - self.v_min;
            if w <= 0.0 {
                return -1.0;
            }
            -((self.q_min - value) / w).min(1.0)
        } else if value > self.q_max {
            let w = self.v_max - self.q_max;
            if w <= 0.0 {
                return 1.0;
            }
            ((value - self.q_max) / w).min(1.0)
        } else {
            0.0
        }
    }
}

/// Color scales for every `(tau1, tau2, part)` of a field, indexed like the
/// field's quantile axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorScale {
    quantiles: Vec<QuantileLevel>,
    entries: Vec<ScaleEntry>,
}

impl ColorScale {
    pub fn quantiles(&self) -> &[QuantileLevel] {
        &self.quantiles
    }

    /// Entry at quantile-axis positions `a`, `b`.
    pub fn entry(&self, a: usize, b: usize, part: Part) -> ScaleEntry {
        let q = self.quantiles.len();
        self.entries[(a * q + b) * 2 + part_index(part)]
    }
}

fn part_index(part: Part) -> usize {
    match part {
        Part::Re => 0,
        Part::Im => 1,
    }
}

/// `v_min = min(field min, q_min - w)`, `v_max = max(field max, q_max + w)`
/// with `w = q_max - q_min`, per `(tau1, tau2, part)`.
pub fn extend_scale(bands: &CalibrationBands, field: &SpectralField) -> Result<ColorScale> {
    if field.n() != bands.n {
        return Err(Error::Config(format!(
            "bands were calibrated for n = {}, field has n = {}",
            bands.n,
            field.n()
        )));
    }
    if let Some(s) = field.smoothing() {
        if !bands.matches(field.n(), s.bandwidth, s.kernel) {
            return Err(Error::Config(format!(
                "bands use B_n = {} with {}, field uses B_n = {} with {}",
                bands.bandwidth, bands.kernel, s.bandwidth, s.kernel
            )));
        }
    }
    let qs = field.quantiles();
    let mut entries = Vec::with_capacity(qs.len() * qs.len() * 2);
    for (a, ta) in qs.iter().enumerate() {
        for (b, tb) in qs.iter().enumerate() {
            for part in [Part::Re, Part::Im] {
                let band = bands.get(ta.value(), tb.value(), part).ok_or_else(|| {
                    Error::Config(format!(
                        "no band for ({}, {}, {})",
                        ta.value(),
                        tb.value(),
                        part.name()
                    ))
                })?;
                let (lo, hi) = field
                    .component(a, b, part)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                        (l.min(v), h.max(v))
                    });
                let w = band.q_max - band.q_min;
                entries.push(ScaleEntry {
                    q_min: band.q_min,
                    q_max: band.q_max,
                    v_min: lo.min(band.q_min - w),
                    v_max: hi.max(band.q_max + w),
                });
            }
        }
    }
    Ok(ColorScale {
        quantiles: qs.to_vec(),
        entries,
    })
}

pub const CYAN: [u8; 3] = [0, 255, 255];
pub const LIGHT_BLUE: [u8; 3] = [100, 150, 255];
pub const DARK_BLUE: [u8; 3] = [0, 0, 139];
pub const YELLOW: [u8; 3] = [255, 255, 0];
pub const ORANGE: [u8; 3] = [255, 140, 0];
pub const RED: [u8; 3] = [255, 0, 0];

/// Palette anchors on the position axis of [`ScaleEntry::position`].
const ANCHORS: [(f64, [u8; 3]); 6] = [
    (-1.0, CYAN),
    (-0.5, LIGHT_BLUE),
    (0.0, DARK_BLUE),
    (0.5, YELLOW),
    (0.75, ORANGE),
    (1.0, RED),
];

/// Color at a palette position in `[-1, 1]`, linear between anchors.
pub fn palette(position: f64) -> [u8; 3] {
    let p = position.clamp(-1.0, 1.0);
    for w in ANCHORS.windows(2) {
        let (p0, c0) = w[0];
        let (p1, c1) = w[1];
        if p <= p1 {
            let s = (p - p0) / (p1 - p0);
            let mut out = [0u8; 3];
            for i in 0..3 {
                let v = c0[i] as f64 + s * (c1[i] as f64 - c0[i] as f64);
                out[i] = v.round().clamp(0.0, 255.0) as u8;
            }
            return out;
        }
    }
    RED
}

pub fn colorize(value: f64, entry: &ScaleEntry) -> [u8; 3] {
    palette(entry.position(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::quantile_levels;

    fn plan(n: usize, b: f64, taus: &[f64]) -> EstimationPlan {
        EstimationPlan::single_window(n, b, LagWindow::Parzen, quantile_levels(taus).unwrap())
            .unwrap()
    }

    fn entry() -> ScaleEntry {
        ScaleEntry {
            q_min: -1.0,
            q_max: 1.0,
            v_min: -3.0,
            v_max: 5.0,
        }
    }

    #[test]
    fn palette_anchors() {
        let e = entry();
        assert_eq!(colorize(0.0, &e), DARK_BLUE);
        assert_eq!(colorize(5.0, &e), RED);
        assert_eq!(colorize(3.0, &e), YELLOW);
        assert_eq!(colorize(4.0, &e), ORANGE);
        assert_eq!(colorize(-3.0, &e), CYAN);
        assert_eq!(colorize(-2.0, &e), LIGHT_BLUE);
        assert_eq!(colorize(100.0, &e), RED);
        assert_eq!(colorize(-100.0, &e), CYAN);
        assert_eq!(colorize(1.0, &e), DARK_BLUE);
        assert_eq!(colorize(-1.0, &e), DARK_BLUE);
    }

    #[test]
    fn palette_position_is_monotone() {
        let e = entry();
        let mut last = -2.0;
        for i in -500..=700 {
            let p = e.position(i as f64 / 100.0);
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn degenerate_entry() {
        let e = ScaleEntry {
            q_min: 0.0,
            q_max: 0.0,
            v_min: 0.0,
            v_max: 0.0,
        };
        assert_eq!(colorize(0.0, &e), DARK_BLUE);
        assert_eq!(colorize(1.0, &e), RED);
        assert_eq!(colorize(-1.0, &e), CYAN);
    }

    #[test]
    fn rejects_few_replications_and_multiple_windows() {
        let p = plan(64, 5.0, &[0.5]);
        assert!(matches!(calibrate(&p, 99, 1), Err(Error::Config(_))));
        let multi = p.with_t0_grid(vec![32, 40]).unwrap();
        assert!(matches!(calibrate(&multi, 100, 1), Err(Error::Config(_))));
    }

    #[test]
    fn band_structure() {
        let p = plan(128, 6.0, &[0.1, 0.5, 0.9]);
        let bands = calibrate(&p, 200, 5).unwrap();
        assert_eq!(bands.bands.len(), 18);
        for b in &bands.bands {
            assert!(b.q_min <= b.q_max);
            if b.tau1 == b.tau2 && b.part == Part::Im {
                assert_eq!((b.q_min, b.q_max), (0.0, 0.0));
            }
        }
        // deterministic
        assert_eq!(bands, calibrate(&p, 200, 5).unwrap());
        // text round trip
        let back = CalibrationBands::from_text(&bands.to_text()).unwrap();
        assert_eq!(back, bands);
    }

    #[test]
    fn distribution_free() {
        // rank invariance: a monotone transform of each uniform series gives
        // bit-identical bands
        let p = plan(128, 6.0, &[0.25, 0.5]);
        let a = calibrate(&p, 150, 9).unwrap();
        let b = calibrate_with(&p, 150, 9, |n, s, m| {
            calibration_series(n, s, m).map(|u| (u / (1.0 - u)).ln()).unwrap()
        })
        .unwrap();
        assert_eq!(a.bands, b.bands);
    }

    #[test]
    fn extend_scale_branches() {
        let p = plan(64, 4.0, &[0.5]);
        let bands = CalibrationBands {
            n: 64,
            bandwidth: 4.0,
            kernel: LagWindow::Parzen,
            replications: 100,
            seed: 0,
            bands: vec![
                Band {
                    tau1: 0.5,
                    tau2: 0.5,
                    part: Part::Re,
                    q_min: 0.02,
                    q_max: 0.06,
                },
                Band {
                    tau1: 0.5,
                    tau2: 0.5,
                    part: Part::Im,
                    q_min: 0.0,
                    q_max: 0.0,
                },
            ],
        };
        let mut field = SpectralField::zeros(&p);
        for wi in 0..field.freqs().len() {
            field.set(0, wi, 0, 0, Complex64::new(0.04, 0.0));
        }
        let sc = extend_scale(&bands, &field).unwrap();
        let e = sc.entry(0, 0, Part::Re);
        assert!((e.v_min - (-0.02)).abs() < 1e-15 && (e.v_max - 0.1).abs() < 1e-15);
        let im = sc.entry(0, 0, Part::Im);
        assert_eq!((im.v_min, im.v_max), (0.0, 0.0));

        field.set(0, 3, 0, 0, Complex64::new(0.12, 0.0));
        let e = extend_scale(&bands, &field).unwrap().entry(0, 0, Part::Re);
        assert_eq!(e.v_max, 0.12);

        let other = plan(64, 5.0, &[0.5]);
        assert!(extend_scale(&bands, &SpectralField::zeros(&other)).is_err());
        let other_n = plan(32, 4.0, &[0.5]);
        assert!(extend_scale(&bands, &SpectralField::zeros(&other_n)).is_err());
    }

    #[test]
    fn bands_file_errors() {
        let err = CalibrationBands::from_text("n = 64\nbandwidth = x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
        assert!(CalibrationBands::from_text("n = 64\n").is_err());
    }
}
