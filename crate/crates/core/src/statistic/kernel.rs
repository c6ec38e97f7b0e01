//! Lag-window kernels with `K(0) = 1` and support in `[-1, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FtsError, FtsResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `1 − |x|` on `|x| < 1`.
    Bartlett,
    /// Cubic taper: `1 − 6x² + 6|x|³` on `|x| ≤ ½`, `2(1 − |x|)³` on `½ < |x| ≤ 1`.
    Parzen,
    /// Trapezoid: `1` on `|x| ≤ ½`, `2(1 − |x|)` on `½ < |x| ≤ 1`.
    FlatTop,
}

impl KernelFamily {
    pub fn eval(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            KernelFamily::Bartlett => {
                if a < 1.0 {
                    1.0 - a
                } else {
                    0.0
                }
            }
            KernelFamily::Parzen => {
                if a <= 0.5 {
                    1.0 - 6.0 * a * a + 6.0 * a * a * a
                } else if a <= 1.0 {
                    2.0 * (1.0 - a).powi(3)
                } else {
                    0.0
                }
            }
            KernelFamily::FlatTop => {
                if a <= 0.5 {
                    1.0
                } else if a <= 1.0 {
                    2.0 * (1.0 - a)
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width `c` of the support: `K(u) = 0` for `|u| > c`.
    pub fn support(self) -> f64 {
        1.0
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            KernelFamily::Bartlett => "bartlett",
            KernelFamily::Parzen => "parzen",
            KernelFamily::FlatTop => "flattop",
        };
        f.write_str(name)
    }
}

impl FromStr for KernelFamily {
    type Err = FtsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "bartlett" => Ok(KernelFamily::Bartlett),
            "parzen" => Ok(KernelFamily::Parzen),
            "flattop" => Ok(KernelFamily::FlatTop),
            other => Err(FtsError::InvalidKernel(format!(
                "unknown kernel {other:?} (expected bartlett, parzen or flattop)"
            ))),
        }
    }
}

/// A kernel family together with its window `w`; lag `ℓ` gets weight `K(ℓ/w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub window: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, window: f64) -> FtsResult<Self> {
        if !(window > 0.0) || !window.is_finite() {
            return Err(FtsError::InvalidKernel(format!(
                "window must be positive and finite, got {window}"
            )));
        }
        Ok(Self { family, window })
    }

    pub fn bartlett(window: f64) -> FtsResult<Self> {
        Self::new(KernelFamily::Bartlett, window)
    }

    /// Weight of lag `lag`.
    pub fn weight(&self, lag: i64) -> f64 {
        self.family.eval(lag as f64 / self.window)
    }

    /// Largest lag with a possibly nonzero weight.
    pub fn max_lag(&self) -> u64 {
        (self.family.support() * self.window).floor() as u64
    }
}

/// `K(x)` for the kernel's family; the caller supplies `x = ℓ/w`.
pub fn kernel_eval(spec: &KernelSpec, x: f64) -> f64 {
    spec.family.eval(x)
}

/// `⌊r^{1/4}⌋`, computed exactly in integers.
pub fn fourth_root_floor(r: usize) -> usize {
    let mut k = (r as f64).powf(0.25).floor() as usize;
    while (k + 1).checked_pow(4).is_some_and(|p| p <= r) {
        k += 1;
    }
    while k > 0 && k.pow(4) > r {
        k -= 1;
    }
    k
}

/// Rule-of-thumb window `max(1, ⌊r^{1/4}⌋)`.
pub fn default_window(r: usize) -> f64 {
    fourth_root_floor(r).max(1) as f64
}
