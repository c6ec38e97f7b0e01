//! Data-generating processes and the Monte Carlo size study.
//!
//! Two DGPs are provided: independent standard Brownian motions, and the
//! functional autoregression `X_i = Ψ_q X_{i−1} + W_i` with integral kernel
//! `ψ_q(t, u) = q·min(t, u)` and Brownian innovations.
//!
//! Random numbers come from ChaCha8 streams keyed by
//! `(seed, replication, series, purpose)`, so a replication's data never
//! depends on which thread runs it or on how many replications precede it.

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FtsError, FtsResult};
use crate::functional::{make_uniform_grid, FunctionalSample, Grid};
use crate::statistic::normal::{Z_01, Z_05, Z_10};
use crate::statistic::{PairEstimator, TestConfig};

/// Default number of discarded autoregressive iterations.
pub const DEFAULT_BURN_IN: usize = 100;
/// Default number of grid points for simulated curves.
pub const DEFAULT_GRID_POINTS: usize = 100;

/// Which sample of a pair a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    X = 0,
    Y = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    Recorded = 0,
    BurnIn = 1,
}

fn stream(seed: u64, replication: u64, series: Series, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replication << 8) | ((series as u64) << 4) | purpose as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpFamily {
    IidBm,
    Far1,
}

/// Recipe for one simulated functional sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub family: DgpFamily,
    /// Autoregressive scale (FAR1 only).
    pub q: f64,
    pub burn_in: usize,
    pub n: usize,
    /// Number of uniform grid points on `[0, 1]`.
    pub m: usize,
    pub seed: u64,
}

impl DgpSpec {
    pub fn iid(n: usize, m: usize, seed: u64) -> Self {
        Self {
            family: DgpFamily::IidBm,
            q: 0.0,
            burn_in: 0,
            n,
            m,
            seed,
        }
    }

    pub fn far1(q: f64, n: usize, m: usize, seed: u64) -> Self {
        Self {
            family: DgpFamily::Far1,
            q,
            burn_in: DEFAULT_BURN_IN,
            n,
            m,
            seed,
        }
    }

    /// Short label such as `IID` or `FAR_0.75`.
    pub fn label(&self) -> String {
        match self.family {
            DgpFamily::IidBm => "IID".to_string(),
            DgpFamily::Far1 => format!("FAR_{}", self.q),
        }
    }

    pub fn validate(&self) -> FtsResult<()> {
        if self.n < 2 {
            return Err(FtsError::InvalidDgp(format!("n must be at least 2, got {}", self.n)));
        }
        if self.m < 2 {
            return Err(FtsError::InvalidGrid(format!(
                "need at least 2 grid points, got {}",
                self.m
            )));
        }
        if self.family == DgpFamily::Far1 {
            if !(self.q >= 0.0) || !self.q.is_finite() {
                return Err(FtsError::InvalidDgp(format!(
                    "q must be finite and nonnegative, got {}",
                    self.q
                )));
            }
            let norm = psi_hs_norm(self.q);
            if norm >= 1.0 {
                return Err(FtsError::NonStationaryKernel { q: self.q, norm });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> FtsResult<Grid> {
        make_uniform_grid(self.m)
    }

    /// Draws the sample for one replication.
    pub fn sample(&self, replication: u64, series: Series) -> FtsResult<FunctionalSample> {
        self.validate()?;
        let grid = self.grid()?;
        match self.family {
            DgpFamily::IidBm => {
                let mut rng = stream(self.seed, replication, series, Purpose::Recorded);
                Ok(iid_bm_sample(self.n, &grid, &mut rng))
            }
            DgpFamily::Far1 => {
                let mut recorded = stream(self.seed, replication, series, Purpose::Recorded);
                let mut burn = stream(self.seed, replication, series, Purpose::BurnIn);
                far1_sample(self.q, self.n, self.burn_in, &grid, &mut recorded, &mut burn)
            }
        }
    }
}

/// Standard Brownian motion on the grid: `W(0) = 0` and independent
/// Gaussian increments with variance equal to the spacing.
pub fn brownian_motion_path<R: rand::Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Array1<f64> {
    let t = grid.points();
    let mut path = Array1::zeros(t.len());
    let mut level = 0.0;
    let mut prev = 0.0;
    for (j, &tj) in t.iter().enumerate() {
        let dt = tj - prev;
        if dt > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            level += dt.sqrt() * z;
        }
        path[j] = level;
        prev = tj;
    }
    path
}

/// `n` independent Brownian motions.
pub fn iid_bm_sample<R: rand::Rng + ?Sized>(n: usize, grid: &Grid, rng: &mut R) -> FunctionalSample {
    let mut values = Array2::zeros((n, grid.len()));
    for mut row in values.rows_mut() {
        row.assign(&brownian_motion_path(grid, rng));
    }
    FunctionalSample::new(values, grid.clone()).expect("Brownian paths are finite")
}

/// `g(t) = ∫ q·min(t, u) f(u) du` by trapezoid quadrature on the grid,
/// evaluated in `O(m)` as `Σ_{u_k ≤ t} w_k u_k f_k + t Σ_{u_k > t} w_k f_k`.
pub fn apply_psi(q: f64, f: ArrayView1<'_, f64>, grid: &Grid) -> Array1<f64> {
    let t = grid.points();
    let w = grid.weights();
    let m = t.len();
    // below[j] = Σ_{k ≤ j} w_k u_k f_k ; above[j] = Σ_{k > j} w_k f_k
    let mut below = vec![0.0; m];
    let mut acc = 0.0;
    for k in 0..m {
        acc += w[k] * t[k] * f[k];
        below[k] = acc;
    }
    let mut above = vec![0.0; m];
    let mut acc = 0.0;
    for k in (0..m).rev() {
        above[k] = acc;
        acc += w[k] * f[k];
    }
    Array1::from_shape_fn(m, |j| q * (below[j] + t[j] * above[j]))
}

/// `q·(∫∫ min(t, u)² dt du)^{1/2} = q/√6`, the Hilbert–Schmidt norm of `Ψ_q`.
pub fn psi_hs_norm(q: f64) -> f64 {
    q / 6f64.sqrt()
}

/// FAR(1) sample: the recursion starts from an independent innovation and
/// runs `burn_in` steps (innovations from `burn_rng`) before the `n`
/// recorded curves (innovations from `rng`). With `q = 0` the output equals
/// the IID sample drawn from `rng`.
pub fn far1_sample<R: rand::Rng + ?Sized, B: rand::Rng + ?Sized>(
    q: f64,
    n: usize,
    burn_in: usize,
    grid: &Grid,
    rng: &mut R,
    burn_rng: &mut B,
) -> FtsResult<FunctionalSample> {
    let norm = psi_hs_norm(q);
    if norm >= 1.0 {
        return Err(FtsError::NonStationaryKernel { q, norm });
    }
    let mut state = brownian_motion_path(grid, burn_rng);
    for _ in 0..burn_in {
        state = apply_psi(q, state.view(), grid) + brownian_motion_path(grid, burn_rng);
    }
    let mut values = Array2::zeros((n, grid.len()));
    for mut row in values.rows_mut() {
        let innovation = brownian_motion_path(grid, rng);
        state = apply_psi(q, state.view(), grid) + innovation;
        row.assign(&state);
    }
    FunctionalSample::new(values, grid.clone())
}

/// Everything needed to rerun a size study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloPlan {
    pub dgp_x: DgpSpec,
    pub dgp_y: DgpSpec,
    pub replications: usize,
    pub config: TestConfig,
}

impl MonteCarloPlan {
    pub fn validate(&self) -> FtsResult<()> {
        self.dgp_x.validate()?;
        self.dgp_y.validate()?;
        if self.dgp_x.n != self.dgp_y.n {
            return Err(FtsError::LengthMismatch {
                left: self.dgp_x.n,
                right: self.dgp_y.n,
            });
        }
        if self.dgp_x.m != self.dgp_y.m {
            return Err(FtsError::GridMismatch);
        }
        if self.replications == 0 {
            return Err(FtsError::InvalidDgp("replications must be at least 1".into()));
        }
        self.config.validate(self.dgp_x.n)
    }
}

/// Rejection frequencies at the 10%, 5% and 1% nominal levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionRates {
    #[serde(rename = "0.10")]
    pub at_10: f64,
    #[serde(rename = "0.05")]
    pub at_05: f64,
    #[serde(rename = "0.01")]
    pub at_01: f64,
}

/// Outcome of a size study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub plan: MonteCarloPlan,
    pub n: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub m: usize,
    pub replications: usize,
    /// Replications whose test was undefined (degenerate variance).
    pub failures: usize,
    pub rejection_rates: RejectionRates,
    pub mean_v: f64,
    pub var_v: f64,
}

impl McReport {
    pub fn from_outcomes(plan: &MonteCarloPlan, outcomes: &[FtsResult<f64>]) -> Self {
        let values: Vec<f64> = outcomes.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
        let failures = outcomes.len() - values.len();
        let count = values.len().max(1) as f64;
        let rate = |z: f64| values.iter().filter(|v| **v > z).count() as f64 / count;
        let mean_v = values.iter().sum::<f64>() / count;
        let var_v = if values.len() > 1 {
            values.iter().map(|v| (v - mean_v).powi(2)).sum::<f64>() / (values.len() - 1) as f64
        } else {
            0.0
        };
        Self {
            plan: plan.clone(),
            n: plan.dgp_x.n,
            horizon: plan.config.horizon,
            m: plan.dgp_x.m,
            replications: outcomes.len(),
            failures,
            rejection_rates: RejectionRates {
                at_10: rate(Z_10),
                at_05: rate(Z_05),
                at_01: rate(Z_01),
            },
            mean_v,
            var_v,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Column label of this report's DGP pair.
    pub fn dgp_label(&self) -> String {
        let (x, y) = (self.plan.dgp_x.label(), self.plan.dgp_y.label());
        if x == y {
            x
        } else {
            format!("{x}/{y}")
        }
    }
}

/// Table of rejection percentages: one row per `(n, H)`, three columns per
/// DGP label (10%, 5%, 1%).
pub fn table_csv(reports: &[McReport]) -> String {
    let mut labels: Vec<String> = Vec::new();
    let mut rows: Vec<(usize, usize)> = Vec::new();
    for r in reports {
        let label = r.dgp_label();
        if !labels.contains(&label) {
            labels.push(label);
        }
        if !rows.contains(&(r.n, r.horizon)) {
            rows.push((r.n, r.horizon));
        }
    }
    let mut out = String::from("n,H");
    for label in &labels {
        for level in ["10%", "5%", "1%"] {
            out.push_str(&format!(",{label} {level}"));
        }
    }
    out.push('\n');
    for (n, h) in rows {
        out.push_str(&format!("{n},{h}"));
        for label in &labels {
            match reports
                .iter()
                .find(|r| r.n == n && r.horizon == h && &r.dgp_label() == label)
            {
                Some(r) => {
                    let rr = r.rejection_rates;
                    for v in [rr.at_10, rr.at_05, rr.at_01] {
                        out.push_str(&format!(",{:.1}", 100.0 * v));
                    }
                }
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}

/// `V_{n,H}` for one replication.
pub fn replicate(plan: &MonteCarloPlan, replication: u64) -> FtsResult<f64> {
    let x = plan.dgp_x.sample(replication, Series::X)?;
    let y = plan.dgp_y.sample(replication, Series::Y)?;
    Ok(PairEstimator::new(&x, &y)?.test(&plan.config)?.v_stat)
}

/// `V_{n,H}` for every replication, in replication order.
pub fn simulate_statistics(plan: &MonteCarloPlan, threads: usize) -> FtsResult<Vec<FtsResult<f64>>> {
    plan.validate()?;
    let run = || {
        (0..plan.replications as u64)
            .into_par_iter()
            .map(|r| replicate(plan, r))
            .collect::<Vec<_>>()
    };
    if threads == 0 {
        return Ok(run());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| FtsError::InvalidDgp(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(run))
}

/// Size study: simulate, test, and tabulate rejection rates. Replications
/// with a degenerate variance estimate are counted in `failures`.
pub fn run_monte_carlo(plan: &MonteCarloPlan, threads: usize) -> FtsResult<McReport> {
    let outcomes = simulate_statistics(plan, threads)?;
    if let Some(Err(e)) = outcomes.iter().find(|o| {
        matches!(o, Err(e) if !matches!(e, FtsError::DegenerateVariance { .. }))
    }) {
        return Err(FtsError::InvalidDgp(format!("replication failed: {e}")));
    }
    Ok(McReport::from_outcomes(plan, &outcomes))
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `values` and `cdf`.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::integrated_autocov;

    #[test]
    fn brownian_path_starts_at_zero() {
        let grid = make_uniform_grid(50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            assert_eq!(brownian_motion_path(&grid, &mut rng)[0], 0.0);
        }
    }

    #[test]
    fn brownian_moments() {
        let grid = make_uniform_grid(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let reps = 10_000;
        let (mut s1, mut s11, mut sa, mut sb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..reps {
            let p = brownian_motion_path(&grid, &mut rng);
            s1 += p[100];
            s11 += p[100] * p[100];
            sa += p[25];
            sb += p[75];
            sab += p[25] * p[75];
        }
        let r = reps as f64;
        let var1 = s11 / r - (s1 / r).powi(2);
        let cov = sab / r - (sa / r) * (sb / r);
        assert!((var1 - 1.0).abs() < 0.05, "Var W(1) = {var1}");
        assert!((cov - 0.25).abs() < 0.03, "Cov = {cov}");
    }

    #[test]
    fn psi_on_simple_inputs() {
        let grid = make_uniform_grid(100).unwrap();
        let zero = Array1::zeros(100);
        assert!(apply_psi(1.3, zero.view(), &grid).iter().all(|v| *v == 0.0));
        let one = Array1::from_elem(100, 1.0);
        let g = apply_psi(2.0, one.view(), &grid);
        for (j, t) in grid.points().iter().enumerate() {
            assert!((g[j] - 2.0 * (t - t * t / 2.0)).abs() < 1e-3);
        }
    }

    #[test]
    fn psi_matches_direct_quadrature_and_is_linear() {
        let grid = make_uniform_grid(37).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = brownian_motion_path(&grid, &mut rng);
        let g = brownian_motion_path(&grid, &mut rng);
        let fast = apply_psi(0.9, f.view(), &grid);
        for (j, t) in grid.points().iter().enumerate() {
            let direct: f64 = grid
                .points()
                .iter()
                .zip(grid.weights())
                .enumerate()
                .map(|(k, (u, w))| w * 0.9 * t.min(*u) * f[k])
                .sum();
            assert!((fast[j] - direct).abs() < 1e-13);
        }
        let combo = &f * 2.5 - &g * 0.75;
        let lhs = apply_psi(0.9, combo.view(), &grid);
        let rhs = apply_psi(0.9, f.view(), &grid) * 2.5 - apply_psi(0.9, g.view(), &grid) * 0.75;
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hs_norm_values() {
        assert_eq!(psi_hs_norm(0.0), 0.0);
        assert!((psi_hs_norm(1.0) - 0.408_248_290_463_863).abs() < 1e-6);
        assert!((psi_hs_norm(2.25) - 0.918_558_653_543_692).abs() < 1e-6);
        assert!(psi_hs_norm(2.25) < 1.0);
        assert!(psi_hs_norm(2.5) >= 1.0);
    }

    #[test]
    fn far_with_zero_q_reproduces_iid_bitwise() {
        let far = DgpSpec {
            q: 0.0,
            ..DgpSpec::far1(0.0, 20, 30, 77)
        };
        let iid = DgpSpec::iid(20, 30, 77);
        for rep in [0, 5] {
            assert_eq!(
                far.sample(rep, Series::Y).unwrap().values(),
                iid.sample(rep, Series::Y).unwrap().values()
            );
        }
    }

    #[test]
    fn nonstationary_q_is_rejected() {
        let spec = DgpSpec::far1(2.5, 10, 10, 1);
        assert!(matches!(spec.validate(), Err(FtsError::NonStationaryKernel { .. })));
        assert!(matches!(
            spec.sample(0, Series::X),
            Err(FtsError::NonStationaryKernel { .. })
        ));
    }

    #[test]
    fn streams_differ_by_series_and_replication() {
        let spec = DgpSpec::iid(3, 10, 1);
        let a = spec.sample(0, Series::X).unwrap();
        let b = spec.sample(0, Series::Y).unwrap();
        let c = spec.sample(1, Series::X).unwrap();
        assert_ne!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
        assert_eq!(a.values(), spec.sample(0, Series::X).unwrap().values());
    }

    #[test]
    fn strong_far_stays_bounded_with_positive_lag_one_dependence() {
        for rep in 0..20 {
            let x = DgpSpec::far1(2.25, 300, 50, 9).sample(rep, Series::X).unwrap();
            let max_norm = x
                .values()
                .rows()
                .into_iter()
                .map(|r| x.grid().integrate((&r * &r).view()))
                .fold(0.0, f64::max);
            assert!(max_norm < 100.0, "max ∫X² = {max_norm}");
            assert!(integrated_autocov(&x, 1) > 0.0);
        }
    }

    #[test]
    fn ks_distance_basics() {
        let uniform: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_distance(&uniform, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
        let shifted: Vec<f64> = uniform.iter().map(|u| u * 0.5).collect();
        assert!(ks_distance(&shifted, |x| x.clamp(0.0, 1.0)) > 0.49);
    }

    #[test]
    fn single_replication_rates_are_binary() {
        let plan = MonteCarloPlan {
            dgp_x: DgpSpec::iid(40, 20, 1),
            dgp_y: DgpSpec::iid(40, 20, 2),
            replications: 1,
            config: TestConfig::with_horizon(40, 2).unwrap(),
        };
        let report = run_monte_carlo(&plan, 1).unwrap();
        for r in [
            report.rejection_rates.at_10,
            report.rejection_rates.at_05,
            report.rejection_rates.at_01,
        ] {
            assert!(r == 0.0 || r == 1.0);
        }
    }

    #[test]
    fn table_layout() {
        let plan = MonteCarloPlan {
            dgp_x: DgpSpec::iid(30, 10, 1),
            dgp_y: DgpSpec::iid(30, 10, 2),
            replications: 4,
            config: TestConfig::with_horizon(30, 2).unwrap(),
        };
        let report = run_monte_carlo(&plan, 1).unwrap();
        let csv = table_csv(&[report]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,H,IID 10%,IID 5%,IID 1%");
        assert!(lines.next().unwrap().starts_with("30,2,"));
    }
}
