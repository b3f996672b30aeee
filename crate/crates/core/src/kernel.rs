//! Lag-window generators.
//!
//! Every window is even, equals one at the origin, is bounded by one in
//! absolute value and vanishes outside `[-1, 1]`. The characteristic exponent
//! `r` and constant `C_K(r) = lim_{u->0} (1 - K(u)) / |u|^r` govern the
//! frequency-direction bias of the smoothed estimator.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LagWindow {
    /// `1 - 6u^2 + 6|u|^3` on `|u| <= 1/2`, `2(1 - |u|)^3` on `1/2 <= |u| <= 1`.
    Parzen,
    /// Triangular window `1 - |u|`.
    Bartlett,
    /// Raised cosine `(1 + cos(pi u)) / 2`.
    TukeyHanning,
}

impl LagWindow {
    pub fn eval(self, u: f64) -> f64 {
        let a = u.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self {
            LagWindow::Parzen => {
                if a <= 0.5 {
                    1.0 - 6.0 * a * a + 6.0 * a * a * a
                } else {
                    let b = 1.0 - a;
                    2.0 * b * b * b
                }
            }
            LagWindow::Bartlett => 1.0 - a,
            LagWindow::TukeyHanning => 0.5 * (1.0 + (PI * a).cos()),
        }
    }

    pub fn char_exponent(self) -> u32 {
        match self {
            LagWindow::Parzen | LagWindow::TukeyHanning => 2,
            LagWindow::Bartlett => 1,
        }
    }

    /// `C_K(r)` for the window's characteristic exponent.
    pub fn c_k_r(self) -> f64 {
        match self {
            LagWindow::Parzen => 6.0,
            LagWindow::Bartlett => 1.0,
            LagWindow::TukeyHanning => PI * PI / 4.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LagWindow::Parzen => "parzen",
            LagWindow::Bartlett => "bartlett",
            LagWindow::TukeyHanning => "tukey-hanning",
        }
    }
}

impl fmt::Display for LagWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LagWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parzen" => Ok(LagWindow::Parzen),
            "bartlett" => Ok(LagWindow::Bartlett),
            "tukey-hanning" | "tukey" | "hanning" => Ok(LagWindow::TukeyHanning),
            other => Err(Error::Config(format!("unknown lag window '{other}'"))),
        }
    }
}
