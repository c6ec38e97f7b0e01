//! The portmanteau statistic `T̂_{n,H}`, the kernel estimators of its
//! centering `μ` and scale `σ²`, and the normalized statistic
//!
//! ```text
//! V_{n,H} = (n T̂_{n,H} − (2H+1) μ̂_n) / ((2H+1)^{1/2} σ̂_n)
//! ```
//!
//! which is asymptotically standard normal when X and Y are independent.
//! Large values of `V` indicate dependence; the p-value is `1 − Φ(V)`.
//!
//! All estimators work from the centered Gram matrices of the two samples
//! (see [`crate::covariance`]); `σ̂²` additionally needs every
//! `∫∫ γ̂_ℓ γ̂_ℓ'`, which [`LagProductTable`] supplies.

pub mod kernel;
pub mod normal;

use serde::{Deserialize, Serialize};

use crate::covariance::{xi_from_grams, CenteredGram, LagProductTable};
use crate::error::{FtsError, FtsResult};
use crate::functional::FunctionalSample;

pub use kernel::{default_window, fourth_root_floor, kernel_eval, KernelFamily, KernelSpec};
pub use normal::{std_normal_cdf, std_normal_sf};

/// Default floor below which `σ̂²` is treated as degenerate.
pub const DEFAULT_SIGMA2_FLOOR: f64 = 1e-14;

/// Lag horizon, kernels and windows for one test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    #[serde(rename = "H")]
    pub horizon: usize,
    pub kernel_mu: KernelSpec,
    pub kernel_sigma: KernelSpec,
    pub sigma2_floor: f64,
}

impl TestConfig {
    /// Bartlett kernels with `H = w₁ = ⌊n^{1/4}⌋` and `w₂ = ⌊H^{1/4}⌋`.
    pub fn defaults_for(n: usize) -> FtsResult<Self> {
        Self::with_horizon(n, fourth_root_floor(n).max(1))
    }

    /// Bartlett kernels with `w₁ = ⌊n^{1/4}⌋`, `w₂ = ⌊H^{1/4}⌋` and the given `H`.
    pub fn with_horizon(n: usize, horizon: usize) -> FtsResult<Self> {
        let config = Self {
            horizon,
            kernel_mu: KernelSpec::bartlett(default_window(n))?,
            kernel_sigma: KernelSpec::bartlett(default_window(horizon))?,
            sigma2_floor: DEFAULT_SIGMA2_FLOOR,
        };
        config.validate(n)?;
        Ok(config)
    }

    pub fn validate(&self, n: usize) -> FtsResult<()> {
        check_horizon(self.horizon, n)?;
        if !(self.sigma2_floor >= 0.0) {
            return Err(FtsError::InvalidKernel(format!(
                "variance floor must be nonnegative, got {}",
                self.sigma2_floor
            )));
        }
        KernelSpec::new(self.kernel_mu.family, self.kernel_mu.window)?;
        KernelSpec::new(self.kernel_sigma.family, self.kernel_sigma.window)?;
        Ok(())
    }
}

fn check_horizon(horizon: usize, n: usize) -> FtsResult<()> {
    if horizon < 1 {
        return Err(FtsError::InvalidHorizon);
    }
    if horizon >= n {
        return Err(FtsError::HorizonTooLarge { horizon, n });
    }
    Ok(())
}

/// Contribution `ξ̂_h = ∫∫ Ĉ²_{n,h}` of one lag to `T̂_{n,H}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagTerm {
    pub h: i64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub n: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub t_stat: f64,
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub v_stat: f64,
    pub p_value: f64,
    pub per_lag: Vec<LagTerm>,
}

impl TestResult {
    pub const CSV_HEADER: &'static str = "n,H,t_stat,mu_hat,sigma2_hat,v_stat,p_value";

    /// One CSV record matching [`TestResult::CSV_HEADER`].
    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.horizon,
            self.t_stat,
            self.mu_hat,
            self.sigma2_hat,
            self.v_stat,
            self.p_value
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("test result serializes")
    }
}

/// Precomputed Gram matrices of a pair of samples; all estimators for the
/// pair are evaluated from here. The lag-product tables used by `σ̂²` are
/// built on first use.
pub struct PairEstimator {
    x: CenteredGram,
    y: CenteredGram,
    tables: Option<(LagProductTable, LagProductTable)>,
}

impl PairEstimator {
    pub fn new(x: &FunctionalSample, y: &FunctionalSample) -> FtsResult<Self> {
        if x.n() != y.n() {
            return Err(FtsError::LengthMismatch {
                left: x.n(),
                right: y.n(),
            });
        }
        if x.grid().points() != y.grid().points() {
            return Err(FtsError::GridMismatch);
        }
        Ok(Self {
            x: CenteredGram::new(x),
            y: CenteredGram::new(y),
            tables: None,
        })
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    /// `ξ̂_h = ∫∫ Ĉ²_{n,h}`.
    pub fn xi(&self, h: i64) -> f64 {
        xi_from_grams(&self.x, &self.y, h)
    }

    /// `T̂_{n,H}` and its per-lag terms for `h = −H, …, H`.
    pub fn t_stat(&self, horizon: usize) -> (f64, Vec<LagTerm>) {
        let hmax = horizon as i64;
        let per_lag: Vec<LagTerm> = (-hmax..=hmax)
            .map(|h| LagTerm { h, xi: self.xi(h) })
            .collect();
        // pair ±h before accumulating so that swapping X and Y is exact
        let mid = horizon;
        let mut total = per_lag[mid].xi;
        for k in 1..=horizon {
            total += per_lag[mid - k].xi + per_lag[mid + k].xi;
        }
        (total, per_lag)
    }

    /// `μ̂_n = Σ_ℓ K₁(ℓ/w₁) ∫γ̂_{X,ℓ} ∫γ̂_{Y,ℓ}`, with `∫γ̂_ℓ = ∫ γ̂_ℓ(t, t) dt`.
    pub fn mu(&self, kernel: &KernelSpec) -> f64 {
        let n = self.n() as i64;
        let reach = (kernel.max_lag() as i64).min(n - 1);
        let term = |l: i64| kernel.weight(l) * (self.x.trace_autocov(l) * self.y.trace_autocov(l));
        let mut total = term(0);
        for l in 1..=reach {
            total += term(-l) + term(l);
        }
        total
    }

    fn tables(&mut self) -> &(LagProductTable, LagProductTable) {
        if self.tables.is_none() {
            self.tables = Some(LagProductTable::pair(&self.x, &self.y));
        }
        self.tables.as_ref().expect("tables were just built")
    }

    /// `τ̂_{n,h}` with the taper `(1 − |ℓ|/n)` on the X lag, exactly as the
    /// quadruple-integral definition reads:
    /// `2 ∫∫∫∫ (Σ_ℓ (1 − |ℓ|/n) γ̂_{X,ℓ}(t,s) γ̂_{Y,ℓ+h}(u,v))²`.
    pub fn tau_directional(&mut self, h: i64) -> f64 {
        let n = self.n();
        let (tx, ty) = self.tables();
        2.0 * contract(tx, ty, n, h, TaperPlacement::First)
    }

    /// Role-symmetric `τ̂_{n,h}`: the average of the directional estimator
    /// with the taper on the X lag and with the taper on the Y lag.
    pub fn tau(&mut self, h: i64) -> f64 {
        let n = self.n();
        let (tx, ty) = self.tables();
        contract(tx, ty, n, h, TaperPlacement::Both)
    }

    /// `σ̂²_n = Σ_{|h| ≤ 2H} K₂(h/w₂) τ̂_{n,h}`.
    pub fn sigma2(&mut self, horizon: usize, kernel: &KernelSpec) -> f64 {
        let reach = (kernel.max_lag() as i64).min(2 * horizon as i64);
        let mut total = 0.0;
        for h in -reach..=reach {
            let weight = kernel.weight(h);
            if weight != 0.0 {
                total += weight * self.tau(h);
            }
        }
        total
    }

    /// Runs the full test.
    pub fn test(&mut self, config: &TestConfig) -> FtsResult<TestResult> {
        let n = self.n();
        config.validate(n)?;
        let horizon = config.horizon;
        let (t_stat, per_lag) = self.t_stat(horizon);
        let mu_hat = self.mu(&config.kernel_mu);
        let sigma2_hat = self.sigma2(horizon, &config.kernel_sigma);
        if !(sigma2_hat > config.sigma2_floor) {
            return Err(FtsError::DegenerateVariance {
                sigma2: sigma2_hat,
                floor: config.sigma2_floor,
            });
        }
        let lags = (2 * horizon + 1) as f64;
        let v_stat = (n as f64 * t_stat - lags * mu_hat) / (lags.sqrt() * sigma2_hat.sqrt());
        Ok(TestResult {
            n,
            horizon,
            t_stat,
            mu_hat,
            sigma2_hat,
            v_stat,
            p_value: std_normal_sf(v_stat),
            per_lag,
        })
    }
}

#[derive(Clone, Copy)]
enum TaperPlacement {
    First,
    Both,
}

/// `Σ_{ℓ,ℓ'} W(ℓ,ℓ') G^X[ℓ,ℓ'] G^Y[ℓ+h,ℓ'+h]` with `c_ℓ = 1 − |ℓ|/n` and
/// `W = c_ℓ c_ℓ'` (`First`) or `W = c_ℓ c_ℓ' + c_{ℓ+h} c_{ℓ'+h}` (`Both`).
fn contract(
    tx: &LagProductTable,
    ty: &LagProductTable,
    n: usize,
    h: i64,
    placement: TaperPlacement,
) -> f64 {
    let top = n as i64 - 1;
    let lo = (-top).max(-top - h);
    let hi = top.min(top - h);
    if lo > hi {
        return 0.0;
    }
    let taper = |l: i64| 1.0 - l.unsigned_abs() as f64 / n as f64;
    let own: Vec<f64> = (lo..=hi).map(taper).collect();
    let shifted: Vec<f64> = (lo..=hi).map(|l| taper(l + h)).collect();
    let start = (lo + top) as usize;
    let len = (hi - lo + 1) as usize;
    let ystart = (lo + h + top) as usize;

    let mut total = 0.0;
    for (k, l) in (lo..=hi).enumerate() {
        let xrow = &tx.row(l)[start..start + len];
        let yrow = &ty.row(l + h)[ystart..ystart + len];
        match placement {
            TaperPlacement::First => {
                let s: f64 = xrow
                    .iter()
                    .zip(yrow)
                    .zip(&own)
                    .map(|((a, b), c)| c * a * b)
                    .sum();
                total += own[k] * s;
            }
            TaperPlacement::Both => {
                let mut s1 = 0.0;
                let mut s2 = 0.0;
                for j in 0..len {
                    let p = xrow[j] * yrow[j];
                    s1 += own[j] * p;
                    s2 += shifted[j] * p;
                }
                total += own[k] * s1 + shifted[k] * s2;
            }
        }
    }
    total
}

/// `T̂_{n,H} = Σ_{h=−H}^{H} ∫∫ Ĉ²_{n,h}` with its per-lag terms.
pub fn compute_t_stat(
    x: &FunctionalSample,
    y: &FunctionalSample,
    horizon: usize,
) -> FtsResult<(f64, Vec<LagTerm>)> {
    let est = PairEstimator::new(x, y)?;
    check_horizon(horizon, est.n())?;
    Ok(est.t_stat(horizon))
}

/// Kernel estimator `μ̂_n` of the centering term.
pub fn estimate_mu(
    x: &FunctionalSample,
    y: &FunctionalSample,
    kernel_mu: &KernelSpec,
) -> FtsResult<f64> {
    Ok(PairEstimator::new(x, y)?.mu(kernel_mu))
}

/// Role-symmetric `τ̂_{n,h}` (see [`PairEstimator::tau`]).
pub fn estimate_tau(x: &FunctionalSample, y: &FunctionalSample, h: i64) -> FtsResult<f64> {
    Ok(PairEstimator::new(x, y)?.tau(h))
}

/// Kernel long-run variance estimator `σ̂²_n`.
pub fn estimate_sigma2(
    x: &FunctionalSample,
    y: &FunctionalSample,
    horizon: usize,
    kernel_sigma: &KernelSpec,
) -> FtsResult<f64> {
    let mut est = PairEstimator::new(x, y)?;
    check_horizon(horizon, est.n())?;
    Ok(est.sigma2(horizon, kernel_sigma))
}

/// Computes `V_{n,H}` and its p-value `1 − Φ(V)`.
pub fn independence_test(
    x: &FunctionalSample,
    y: &FunctionalSample,
    config: &TestConfig,
) -> FtsResult<TestResult> {
    PairEstimator::new(x, y)?.test(config)
}
