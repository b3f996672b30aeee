//! Locally stationary process models, their frozen stationary
//! approximations, and volatility tools for the tvARCH(0) bootstrap.
//!
//! Coefficients are functions of rescaled time `u = t/T`. Freezing a model
//! at `theta` evaluates every coefficient at `u = theta`.

mod lss;
mod simulate;
mod volatility;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};

use crate::error::{Error, Result};

pub use lss::lss_distance;
pub use simulate::{
    simulate, simulate_replication, simulate_stationary, simulate_stationary_replication,
    SimOptions, DEFAULT_BURN_IN,
};
pub use volatility::{
    estimate_local_variance, local_variance, tvarch0_bootstrap, tvarch0_bootstrap_replication,
    SigmaPath,
};


/// Innovation distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    /// Standard normal.
    Gaussian,
    /// Standard Cauchy (location 0, scale 1).
    Cauchy,
    /// Uniform on `[0, 1)`.
    Uniform,
    /// Degenerate at zero; useful to check recursions.
    Zero,
}

impl Noise {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Noise::Gaussian => StandardNormal.sample(rng),
            Noise::Cauchy => Cauchy::new(0.0, 1.0).expect("unit scale").sample(rng),
            Noise::Uniform => rng.random::<f64>(),
            Noise::Zero => 0.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" | "gauss" => Ok(Noise::Gaussian),
            "cauchy" => Ok(Noise::Cauchy),
            "uniform" => Ok(Noise::Uniform),
            "zero" => Ok(Noise::Zero),
            other => Err(Error::Config(format!("unknown noise distribution '{other}'"))),
        }
    }
}

/// A real coefficient function of rescaled time.
#[derive(Clone)]
pub enum Coef {
    Const(f64),
    /// `start + (end - start) u`.
    Linear { start: f64, end: f64 },
    Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coef {
    pub fn func(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coef::Func(Arc::new(f))
    }

    #[inline]
    pub fn at(&self, u: f64) -> f64 {
        match self {
            Coef::Const(c) => *c,
            Coef::Linear { start, end } => start + (end - start) * u,
            Coef::Func(f) => f(u),
        }
    }
}

impl fmt::Debug for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coef::Const(c) => write!(f, "Const({c})"),
            Coef::Linear { start, end } => write!(f, "Linear({start} -> {end})"),
            Coef::Func(_) => f.write_str("Func(..)"),
        }
    }
}

/// A (truncated) sequence of coefficient functions `a_j(u)`.
#[derive(Debug, Clone)]
pub enum CoefSeq {
    Explicit(Vec<Coef>),
    /// `a_j(u) = scale(u) * rate(u)^j` for `j < len`.
    Geometric { scale: Coef, rate: Coef, len: usize },
}

impl CoefSeq {
    pub fn len(&self) -> usize {
        match self {
            CoefSeq::Explicit(v) => v.len(),
            CoefSeq::Geometric { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `a_j(u)` with `j` counted from the start of the sequence.
    pub fn at(&self, u: f64, j: usize) -> f64 {
        match self {
            CoefSeq::Explicit(v) => v[j].at(u),
            CoefSeq::Geometric { scale, rate, .. } => scale.at(u) * rate.at(u).powi(j as i32),
        }
    }
}

/// Default truncation of infinite coefficient sequences.
pub const DEFAULT_TRUNCATION: usize = 100;

/// Number of rescaled-time points used for numerical coefficient checks.
const U_GRID: usize = 1024;

#[derive(Debug, Clone)]
pub enum ProcessModel {
    /// Independent draws from one distribution.
    Iid(Noise),
    /// `X_t = 1.8 cos(1.5 - cos(2 pi u)) X_{t-1} - 0.81 X_{t-2} + Z_t`.
    TvAr2 { noise: Noise },
    /// `X_t = sqrt(1/2 + 0.9 u X_{t-1}^2) Z_t`.
    TvArch1 { noise: Noise },
    /// `X_t = [(1.9 U_t - 0.95) u + (-1.9 U_t + 0.95)(1 - u)] X_{t-1} + (U_t - 1/2)`
    /// with `U_t` uniform.
    TvQar1,
    /// `X_t = mu(u) + sum_{j=0}^{J} a(u, j) xi_{t-j}`.
    TvMa {
        mean: Coef,
        coefs: CoefSeq,
        noise: Noise,
    },
    /// `X_t = sigma_t Z_t`, `sigma_t^2 = a_0(u) + sum_{j=1}^{J} a_j(u) X_{t-j}^2`;
    /// `coefs[0]` is `a_1`.
    TvArchInf {
        a0: Coef,
        coefs: CoefSeq,
        noise: Noise,
    },
    /// `X_t = sigma_t Z_t`,
    /// `sigma_t^2 = a_0(u) + sum_j alpha_j(u) X_{t-j}^2 + sum_j beta_j(u) sigma_{t-j}^2`.
    TvGarch {
        a0: Coef,
        alpha: Vec<Coef>,
        beta: Vec<Coef>,
        noise: Noise,
    },
    /// `X_t = sigma_t Z_t` with `Z_t` drawn with replacement from `pool`.
    TvArch0Bootstrap {
        sigma: Arc<Vec<f64>>,
        pool: Arc<Vec<f64>>,
    },
}

/// Names accepted by [`ProcessModel::preset`].
pub const PRESETS: [&str; 6] = [
    "tvar2-gauss",
    "tvar2-cauchy",
    "tvarch1",
    "tvqar1",
    "iid-gauss",
    "iid-uniform",
];

impl ProcessModel {
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "tvar2-gauss" => ProcessModel::TvAr2 {
                noise: Noise::Gaussian,
            },
            "tvar2-cauchy" => ProcessModel::TvAr2 {
                noise: Noise::Cauchy,
            },
            "tvarch1" => ProcessModel::TvArch1 {
                noise: Noise::Gaussian,
            },
            "tvqar1" => ProcessModel::TvQar1,
            "iid-gauss" => ProcessModel::Iid(Noise::Gaussian),
            "iid-uniform" => ProcessModel::Iid(Noise::Uniform),
            other => {
                return Err(Error::Config(format!(
                    "unknown model preset '{other}' (known: {})",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    /// Whether the model's law changes with rescaled time.
    pub fn is_time_varying(&self) -> bool {
        !matches!(self, ProcessModel::Iid(_))
    }

    /// Checks the coefficient conditions numerically on a grid of rescaled
    /// times.
    pub fn validate(&self) -> Result<()> {
        let grid = (0..U_GRID).map(|i| (i as f64 + 0.5) / U_GRID as f64);
        match self {
            ProcessModel::TvMa { coefs, .. } => {
                if coefs.is_empty() {
                    return Err(Error::Config("tvMA needs at least one coefficient".into()));
                }
            }
            ProcessModel::TvArchInf { a0, coefs, .. } => {
                for u in grid {
                    if a0.at(u) <= 0.0 {
                        return Err(Error::Config(format!("tvARCH: a_0({u}) is not positive")));
                    }
                    if (0..coefs.len()).any(|j| coefs.at(u, j) < 0.0) {
                        return Err(Error::Config(format!(
                            "tvARCH: negative coefficient at u={u}"
                        )));
                    }
                }
            }
            ProcessModel::TvGarch { a0, alpha, beta, .. } => {
                for u in grid {
                    if a0.at(u) <= 0.0 {
                        return Err(Error::Config(format!("tvGARCH: a_0({u}) is not positive")));
                    }
                    let mut total = 0.0;
                    for c in alpha.iter().chain(beta) {
                        let v = c.at(u);
                        if v < 0.0 {
                            return Err(Error::Config(format!(
                                "tvGARCH: negative coefficient at u={u}"
                            )));
                        }
                        total += v;
                    }
                    if total >= 1.0 {
                        return Err(Error::Config(format!(
                            "tvGARCH: coefficient sum {total} >= 1 at u={u}"
                        )));
                    }
                }
            }
            ProcessModel::TvArch0Bootstrap { sigma, pool } => {
                if pool.is_empty() {
                    return Err(Error::Config("bootstrap residual pool is empty".into()));
                }
                if sigma.is_empty() || sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(Error::Config(
                        "bootstrap sigma path must be non-empty, positive and finite".into(),
                    ));
                }
            }
            ProcessModel::Iid(_)
            | ProcessModel::TvAr2 { .. }
            | ProcessModel::TvArch1 { .. }
            | ProcessModel::TvQar1 => {}
        }
        Ok(())
    }

    /// tvAR(2) lag-one coefficient `1.8 cos(1.5 - cos(2 pi u))`.
    pub fn tvar2_a1(u: f64) -> f64 {
        1.8 * (1.5 - (2.0 * std::f64::consts::PI * u).cos()).cos()
    }

    /// tvAR(2) lag-two coefficient.
    pub const TVAR2_A2: f64 = -0.81;

    /// tvQAR(1) random coefficient for uniform draw `uniform` at rescaled time `u`.
    pub fn tvqar1_coefficient(uniform: f64, u: f64) -> f64 {
        (1.9 * uniform - 0.95) * u + (-1.9 * uniform + 0.95) * (1.0 - u)
    }

    /// `a_0 / (1 - sum alpha - sum beta)` of a GARCH frozen at `theta`.
    pub fn garch_stationary_variance(&self, theta: f64) -> Option<f64> {
        match self {
            ProcessModel::TvGarch { a0, alpha, beta, .. } => {
                let s: f64 = alpha.iter().chain(beta).map(|c| c.at(theta)).sum();
                Some(a0.at(theta) / (1.0 - s))
            }
            _ => None,
        }
    }
}
