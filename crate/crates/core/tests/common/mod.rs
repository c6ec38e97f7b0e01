//! Brute-force evaluations of the estimators straight from their defining
//! sums and integrals, independent of the Gram-matrix machinery.
#![allow(dead_code)]

use fts_core::{make_uniform_grid, FunctionalSample, KernelSpec};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_sample(n: usize, m: usize, rng: &mut ChaCha8Rng) -> FunctionalSample {
    let grid = make_uniform_grid(m).unwrap();
    let values = Array2::from_shape_fn((n, m), |_| rng.random_range(-2.0..2.0));
    FunctionalSample::new(values, grid).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// `Ĉ_h(t,s) = n⁻¹ Σ_i (X_i(t) − X̄(t))(Y_{i+h}(s) − Ȳ(s))` over the valid `i`.
pub fn surface(x: &FunctionalSample, y: &FunctionalSample, h: i64) -> Vec<Vec<f64>> {
    let (n, m) = (x.n() as i64, x.m());
    let xv = x.values();
    let yv = y.values();
    let mean = |v: &Array2<f64>, t: usize| (0..n as usize).map(|i| v[[i, t]]).sum::<f64>() / n as f64;
    let xbar: Vec<f64> = (0..m).map(|t| mean(xv, t)).collect();
    let ybar: Vec<f64> = (0..m).map(|t| mean(yv, t)).collect();
    let mut out = vec![vec![0.0; m]; m];
    for t in 0..m {
        for s in 0..m {
            let mut acc = 0.0;
            for i in 0..n {
                let j = i + h;
                if j < 0 || j >= n {
                    continue;
                }
                acc += (xv[[i as usize, t]] - xbar[t]) * (yv[[j as usize, s]] - ybar[s]);
            }
            out[t][s] = acc / n as f64;
        }
    }
    out
}

fn weights(x: &FunctionalSample) -> Vec<f64> {
    x.grid().weights().to_vec()
}

/// `∫∫ Ĉ_h²` by quadrature on the `m × m` grid.
pub fn xi(x: &FunctionalSample, y: &FunctionalSample, h: i64) -> f64 {
    let w = weights(x);
    let c = surface(x, y, h);
    let mut total = 0.0;
    for t in 0..w.len() {
        for s in 0..w.len() {
            total += w[t] * w[s] * c[t][s] * c[t][s];
        }
    }
    total
}

pub fn t_stat(x: &FunctionalSample, y: &FunctionalSample, horizon: i64) -> f64 {
    (-horizon..=horizon).map(|h| xi(x, y, h)).sum()
}

/// `∫ γ̂_ℓ(t, t) dt`.
pub fn trace_autocov(x: &FunctionalSample, l: i64) -> f64 {
    let w = weights(x);
    let g = surface(x, x, l);
    (0..w.len()).map(|t| w[t] * g[t][t]).sum()
}

pub fn mu(x: &FunctionalSample, y: &FunctionalSample, k: &KernelSpec) -> f64 {
    let n = x.n() as i64;
    (1 - n..n)
        .map(|l| k.weight(l) * trace_autocov(x, l) * trace_autocov(y, l))
        .sum()
}

/// `∫∫ γ̂_ℓ γ̂_ℓ'` by quadrature.
pub fn autocov_product(x: &FunctionalSample, l1: i64, l2: i64) -> f64 {
    let w = weights(x);
    let a = surface(x, x, l1);
    let b = surface(x, x, l2);
    let mut total = 0.0;
    for t in 0..w.len() {
        for s in 0..w.len() {
            total += w[t] * w[s] * a[t][s] * b[t][s];
        }
    }
    total
}

/// `2 ∫∫∫∫ (Σ_ℓ (1 − |ℓ|/n) γ̂_{X,ℓ}(t,s) γ̂_{Y,ℓ+h}(u,v))²` on the `m⁴` grid.
pub fn tau_directional(x: &FunctionalSample, y: &FunctionalSample, h: i64) -> f64 {
    let n = x.n() as i64;
    let w = weights(x);
    let m = w.len();
    let lags: Vec<i64> = (1 - n..n).filter(|l| (l + h).abs() < n).collect();
    let gx: Vec<_> = lags.iter().map(|&l| surface(x, x, l)).collect();
    let gy: Vec<_> = lags.iter().map(|&l| surface(y, y, l + h)).collect();
    let taper: Vec<f64> = lags.iter().map(|&l| 1.0 - l.abs() as f64 / n as f64).collect();
    let mut total = 0.0;
    for t in 0..m {
        for s in 0..m {
            for u in 0..m {
                for v in 0..m {
                    let inner: f64 = (0..lags.len())
                        .map(|k| taper[k] * gx[k][t][s] * gy[k][u][v])
                        .sum();
                    total += w[t] * w[s] * w[u] * w[v] * inner * inner;
                }
            }
        }
    }
    2.0 * total
}

/// Average of the directional estimator with the taper on either series.
pub fn tau(x: &FunctionalSample, y: &FunctionalSample, h: i64) -> f64 {
    0.5 * (tau_directional(x, y, h) + tau_directional(y, x, -h))
}

pub fn sigma2(x: &FunctionalSample, y: &FunctionalSample, horizon: i64, k: &KernelSpec) -> f64 {
    (-2 * horizon..=2 * horizon)
        .map(|h| k.weight(h))
        .zip(-2 * horizon..=2 * horizon)
        .filter(|(w, _)| *w != 0.0)
        .map(|(w, h)| w * tau(x, y, h))
        .sum()
}

pub fn v_stat(
    x: &FunctionalSample,
    y: &FunctionalSample,
    horizon: i64,
    k_mu: &KernelSpec,
    k_sigma: &KernelSpec,
) -> f64 {
    let n = x.n() as f64;
    let lags = (2 * horizon + 1) as f64;
    (n * t_stat(x, y, horizon) - lags * mu(x, y, k_mu)) / (lags * sigma2(x, y, horizon, k_sigma)).sqrt()
}

/// Draws one small random instance (`n ≤ 6`, `m ≤ 4`, `H ≤ 2`, random
/// kernels and windows) and compares every estimator with its brute-force
/// counterpart. Returns a description of the first mismatch.
pub fn check_random_instance(seed: u64, tol: f64) -> Result<(), String> {
    use fts_core::statistic::{KernelFamily, PairEstimator, TestConfig, DEFAULT_SIGMA2_FLOOR};

    let mut rng = seeded(seed);
    let n = rng.random_range(3..=6);
    let m = rng.random_range(2..=4);
    let horizon = rng.random_range(1..=2usize.min(n - 1));
    let x = random_sample(n, m, &mut rng);
    let y = random_sample(n, m, &mut rng);
    let families = [KernelFamily::Bartlett, KernelFamily::Parzen, KernelFamily::FlatTop];
    let k_mu = KernelSpec::new(families[rng.random_range(0..3)], rng.random_range(0.5..7.0)).unwrap();
    let k_sigma = KernelSpec::new(families[rng.random_range(0..3)], rng.random_range(0.5..5.0)).unwrap();
    let config = TestConfig {
        horizon,
        kernel_mu: k_mu,
        kernel_sigma: k_sigma,
        sigma2_floor: DEFAULT_SIGMA2_FLOOR,
    };
    let hmax = horizon as i64;
    let label = format!("seed={seed} n={n} m={m} H={horizon}");
    let check = |what: String, fast: f64, slow: f64| {
        if rel_close(fast, slow, tol) || (fast - slow).abs() < 1e-14 {
            Ok(())
        } else {
            Err(format!("{label}: {what}: fast={fast:e} oracle={slow:e}"))
        }
    };

    let mut est = PairEstimator::new(&x, &y).unwrap();
    for h in -hmax..=hmax {
        check(format!("xi({h})"), est.xi(h), xi(&x, &y, h))?;
    }
    for h in -2 * hmax..=2 * hmax {
        check(format!("tau({h})"), est.tau(h), tau(&x, &y, h))?;
        check(
            format!("tau_directional({h})"),
            est.tau_directional(h),
            tau_directional(&x, &y, h),
        )?;
    }
    check("mu".into(), est.mu(&k_mu), mu(&x, &y, &k_mu))?;
    check(
        "sigma2".into(),
        est.sigma2(horizon, &k_sigma),
        sigma2(&x, &y, hmax, &k_sigma),
    )?;
    let result = est.test(&config).map_err(|e| format!("{label}: {e}"))?;
    check("T".into(), result.t_stat, t_stat(&x, &y, hmax))?;
    check("V".into(), result.v_stat, v_stat(&x, &y, hmax, &k_mu, &k_sigma))?;
    Ok(())
}

/// `date,time,price` CSV for `days` trading days of one-minute prices
/// `P(t) = P₀·exp(σ W(t))` from 09:30 to 16:00, `W` a Brownian motion in
/// trading-day time.
pub fn simulated_price_csv(days: usize, start_price: f64, rng: &mut ChaCha8Rng) -> String {
    use rand_distr::{Distribution, StandardNormal};
    let minutes = 390;
    let step = (1.0 / minutes as f64).sqrt();
    let mut out = String::from("date,time,price\n");
    let mut open = start_price;
    for d in 0..days {
        let date = format!("2013-{:02}-{:02}", 1 + d / 28, 1 + d % 28);
        let mut w = 0.0;
        for k in 0..=minutes {
            if k > 0 {
                let z: f64 = StandardNormal.sample(rng);
                w += step * z;
            }
            let minute = 9 * 60 + 30 + k;
            let price = open * (0.01 * w).exp();
            out.push_str(&format!("{date},{:02}:{:02},{price}\n", minute / 60, minute % 60));
            if k == minutes {
                open = price;
            }
        }
    }
    out
}
