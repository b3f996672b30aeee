use rand::Rng;

use super::{Noise, ProcessModel};
use crate::domain::Series;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};

/// Burn-in steps discarded before the first emitted observation.
pub const DEFAULT_BURN_IN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub burn_in: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

/// Fixed-capacity history, most recent value first.
struct Lags {
    buf: Vec<f64>,
    head: usize,
}

impl Lags {
    fn new(cap: usize) -> Self {
        Lags {
            buf: vec![0.0; cap.max(1)],
            head: 0,
        }
    }

    fn push(&mut self, v: f64) {
        self.head = (self.head + self.buf.len() - 1) % self.buf.len();
        self.buf[self.head] = v;
    }

    /// `j = 1` is the most recently pushed value.
    #[inline]
    fn lag(&self, j: usize) -> f64 {
        self.buf[(self.head + j - 1) % self.buf.len()]
    }
}

struct State {
    x: Lags,
    /// Innovations (tvMA) or conditional variances (tvGARCH).
    aux: Lags,
}

impl State {
    fn for_model(model: &ProcessModel) -> Self {
        let (nx, naux) = match model {
            ProcessModel::TvAr2 { .. } => (2, 1),
            ProcessModel::TvMa { coefs, .. } => (1, coefs.len()),
            ProcessModel::TvArchInf { coefs, .. } => (coefs.len(), 1),
            ProcessModel::TvGarch { alpha, beta, .. } => (alpha.len(), beta.len()),
            _ => (1, 1),
        };
        State {
            x: Lags::new(nx),
            aux: Lags::new(naux),
        }
    }
}

impl ProcessModel {
    /// One innovation draw. For tvQAR(1) this is the uniform `U_t`.
    pub(crate) fn innovation<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ProcessModel::Iid(noise)
            | ProcessModel::TvAr2 { noise }
            | ProcessModel::TvArch1 { noise }
            | ProcessModel::TvMa { noise, .. }
            | ProcessModel::TvArchInf { noise, .. }
            | ProcessModel::TvGarch { noise, .. } => noise.sample(rng),
            ProcessModel::TvQar1 => Noise::Uniform.sample(rng),
            ProcessModel::TvArch0Bootstrap { pool, .. } => pool[rng.random_range(0..pool.len())],
        }
    }

    fn step(&self, u: f64, z: f64, st: &mut State) -> f64 {
        match self {
            ProcessModel::Iid(_) => z,
            ProcessModel::TvAr2 { .. } => {
                let x = Self::tvar2_a1(u) * st.x.lag(1) + Self::TVAR2_A2 * st.x.lag(2) + z;
                st.x.push(x);
                x
            }
            ProcessModel::TvArch1 { .. } => {
                let p = st.x.lag(1);
                let x = (0.5 + 0.9 * u * p * p).sqrt() * z;
                st.x.push(x);
                x
            }
            ProcessModel::TvQar1 => {
                let x = Self::tvqar1_coefficient(z, u) * st.x.lag(1) + (z - 0.5);
                st.x.push(x);
                x
            }
            ProcessModel::TvMa { mean, coefs, .. } => {
                st.aux.push(z);
                let mut x = mean.at(u);
                for j in 0..coefs.len() {
                    x += coefs.at(u, j) * st.aux.lag(j + 1);
                }
                x
            }
            ProcessModel::TvArchInf { a0, coefs, .. } => {
                let mut s2 = a0.at(u);
                for j in 0..coefs.len() {
                    let p = st.x.lag(j + 1);
                    s2 += coefs.at(u, j) * p * p;
                }
                let x = s2.sqrt() * z;
                st.x.push(x);
                x
            }
            ProcessModel::TvGarch { a0, alpha, beta, .. } => {
                let mut s2 = a0.at(u);
                for (j, a) in alpha.iter().enumerate() {
                    let p = st.x.lag(j + 1);
                    s2 += a.at(u) * p * p;
                }
                for (j, b) in beta.iter().enumerate() {
                    s2 += b.at(u) * st.aux.lag(j + 1);
                }
                let x = s2.sqrt() * z;
                st.x.push(x);
                st.aux.push(s2);
                x
            }
            ProcessModel::TvArch0Bootstrap { sigma, .. } => {
                let t = (u * sigma.len() as f64).round() as usize;
                sigma[t.clamp(1, sigma.len()) - 1] * z
            }
        }
    }

    /// Seeds the conditional variance history of a GARCH recursion with its
    /// unconditional level at `u` so that short burn-ins start near stationarity.
    fn prime(&self, u: f64, st: &mut State) {
        if let Some(v) = self.garch_stationary_variance(u) {
            if v.is_finite() && v > 0.0 {
                if let ProcessModel::TvGarch { beta, .. } = self {
                    for _ in 0..beta.len() {
                        st.aux.push(v);
                    }
                }
            }
        }
    }
}

/// Runs `burn_in` steps at `u_burn` and then `emit` steps at `u_of(t)`,
/// `t = 1..=emit`. Innovations come from `draw`.
fn run(
    model: &ProcessModel,
    burn_in: usize,
    u_burn: f64,
    emit: usize,
    u_of: impl Fn(usize) -> f64,
    mut draw: impl FnMut() -> f64,
) -> Result<Vec<f64>> {
    let mut st = State::for_model(model);
    model.prime(u_burn, &mut st);
    for s in 0..burn_in {
        let x = model.step(u_burn, draw(), &mut st);
        if !x.is_finite() {
            return Err(Error::Simulation {
                t: s as i64 - burn_in as i64 + 1,
                context: " during burn-in".into(),
            });
        }
    }
    let mut out = Vec::with_capacity(emit);
    for t in 1..=emit {
        let x = model.step(u_of(t), draw(), &mut st);
        if !x.is_finite() {
            return Err(Error::Simulation {
                t: t as i64,
                context: String::new(),
            });
        }
        out.push(x);
    }
    Ok(out)
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::Domain("series length must be at least 1".into()));
    }
    Ok(())
}

/// First `prefix` observations of the triangular-array row of length `t_len`.
pub(crate) fn simulate_prefix(
    model: &ProcessModel,
    t_len: usize,
    prefix: usize,
    seed: u64,
    replication: u64,
    opts: SimOptions,
) -> Result<Vec<f64>> {
    let mut rng: StreamRng = stream(seed, replication);
    let tf = t_len as f64;
    run(
        model,
        opts.burn_in,
        1.0 / tf,
        prefix,
        |t| t as f64 / tf,
        || model.innovation(&mut rng),
    )
}

/// Frozen simulation with externally supplied innovations.
#[cfg(test)]
pub(crate) fn simulate_with_innovations(
    model: &ProcessModel,
    theta: f64,
    burn_in: usize,
    innovations: &[f64],
) -> Result<Vec<f64>> {
    let emit = innovations.len() - burn_in;
    let mut it = innovations.iter().copied();
    run(model, burn_in, theta, emit, |_| theta, || it.next().unwrap_or(0.0))
}

/// One realization `X_{1,T}, ..., X_{T,T}` on replication stream 0.
pub fn simulate(model: &ProcessModel, t_len: usize, seed: u64) -> Result<Series> {
    simulate_replication(model, t_len, seed, 0, SimOptions::default())
}

pub fn simulate_replication(
    model: &ProcessModel,
    t_len: usize,
    seed: u64,
    replication: u64,
    opts: SimOptions,
) -> Result<Series> {
    check_len(t_len)?;
    model.validate()?;
    let v = simulate_prefix(model, t_len, t_len, seed, replication, opts)?;
    Series::new(v)
}

/// A path of the stationary approximation with coefficients frozen at `theta`.
pub fn simulate_stationary(
    model: &ProcessModel,
    theta: f64,
    len: usize,
    seed: u64,
) -> Result<Series> {
    simulate_stationary_replication(model, theta, len, seed, 0, SimOptions::default())
}

pub fn simulate_stationary_replication(
    model: &ProcessModel,
    theta: f64,
    len: usize,
    seed: u64,
    replication: u64,
    opts: SimOptions,
) -> Result<Series> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    check_len(len)?;
    model.validate()?;
    let mut rng: StreamRng = stream(seed, replication);
    let v = run(
        model,
        opts.burn_in,
        theta,
        len,
        |_| theta,
        || model.innovation(&mut rng),
    )
    .map_err(|e| e.with_context(format!("theta={theta}")))?;
    Series::new(v)
}
