//! Intraday prices to cumulative intraday return (CIDR) curves, and
//! pairwise independence tests between tickers.
//!
//! Input files are CSV with a header and the columns `date,time,price`
//! (ISO dates, `HH:MM` or `HH:MM:SS` times), rows grouped by date and
//! sorted by time within a day. Each day becomes one curve
//! `R(t_j) = 100·ln(P(t_j)/P(t_1))`, linearly interpolated onto a common
//! grid on `[0, 1]`.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FtsError, FtsResult};
use crate::functional::{FunctionalSample, Grid};
use crate::statistic::{PairEstimator, TestConfig};

/// How intraday clock times are mapped onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeWindow {
    /// Each day's first and last timestamps map to 0 and 1.
    #[default]
    PerDay,
    /// A fixed trading session, in seconds after midnight.
    Fixed { open: u32, close: u32 },
}

impl TimeWindow {
    /// Parses `HH:MM-HH:MM`.
    pub fn parse_fixed(spec: &str) -> FtsResult<Self> {
        let bad = || FtsError::Parse {
            line: 0,
            message: format!("bad trading window {spec:?}; expected HH:MM-HH:MM"),
        };
        let (a, b) = spec.split_once('-').ok_or_else(bad)?;
        let open = parse_clock(a.trim()).ok_or_else(bad)?;
        let close = parse_clock(b.trim()).ok_or_else(bad)?;
        if close <= open {
            return Err(bad());
        }
        Ok(TimeWindow::Fixed { open, close })
    }
}

/// One trading day: `(time fraction, price)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub date: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub ticker: String,
    pub days: Vec<DayRecord>,
}

/// CIDR values at the day's own observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCurve {
    pub date: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// CIDR curves of one ticker on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CidrSample {
    pub ticker: String,
    pub dates: Vec<String>,
    pub sample: FunctionalSample,
    /// Days dropped for having fewer than two observations.
    pub skipped_days: usize,
}

fn parse_clock(s: &str) -> Option<u32> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return None;
    }
    let mut nums = [0u32; 3];
    for (k, p) in parts.iter().enumerate() {
        if p.is_empty() || p.len() > 2 || !p.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        nums[k] = p.parse().ok()?;
    }
    let [h, m, sec] = nums;
    if h > 23 || m > 59 || sec > 59 {
        return None;
    }
    Some(h * 3600 + m * 60 + sec)
}

fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
}

/// Parses a `date,time,price` CSV into one record per date.
pub fn parse_price_csv<R: Read>(input: R, ticker: &str, window: TimeWindow) -> FtsResult<PricePanel> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header_err = |message: String| FtsError::Parse { line: 1, message };
    let headers = reader
        .headers()
        .map_err(|e| header_err(e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| header_err(format!("missing column {name:?}")))
    };
    let (c_date, c_time, c_price) = (column("date")?, column("time")?, column("price")?);

    // (date, [(seconds, price)])
    let mut raw_days: Vec<(String, Vec<(u32, f64)>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| FtsError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| record.get(k).unwrap_or("");
        let date = field(c_date);
        if !is_iso_date(date) {
            return Err(FtsError::Parse {
                line,
                message: format!("bad date {date:?}"),
            });
        }
        let secs = parse_clock(field(c_time)).ok_or_else(|| FtsError::Parse {
            line,
            message: format!("bad time {:?}", field(c_time)),
        })?;
        let price: f64 = field(c_price).parse().map_err(|_| FtsError::Parse {
            line,
            message: format!("bad price {:?}", field(c_price)),
        })?;
        if !price.is_finite() {
            return Err(FtsError::Parse {
                line,
                message: format!("bad price {:?}", field(c_price)),
            });
        }
        if price <= 0.0 {
            return Err(FtsError::InvalidPrice { line, price });
        }
        if let TimeWindow::Fixed { open, close } = window {
            if secs < open || secs > close {
                return Err(FtsError::Parse {
                    line,
                    message: format!("time {} outside the trading window", field(c_time)),
                });
            }
        }
        match raw_days.last_mut() {
            Some((d, points)) if d == date => {
                if let Some(&(prev, _)) = points.last() {
                    if secs <= prev {
                        return Err(FtsError::Parse {
                            line,
                            message: "times within a day must be strictly increasing".into(),
                        });
                    }
                }
                points.push((secs, price));
            }
            _ => {
                if raw_days.iter().any(|(d, _)| d == date) {
                    return Err(FtsError::Parse {
                        line,
                        message: format!("rows for {date} are not contiguous"),
                    });
                }
                raw_days.push((date.to_string(), vec![(secs, price)]));
            }
        }
    }

    let days = raw_days
        .into_iter()
        .map(|(date, points)| {
            let (lo, hi) = match window {
                TimeWindow::PerDay => (points[0].0, points[points.len() - 1].0),
                TimeWindow::Fixed { open, close } => (open, close),
            };
            let span = (hi - lo) as f64;
            let points = points
                .into_iter()
                .map(|(s, p)| {
                    let frac = if span > 0.0 { (s - lo) as f64 / span } else { 0.0 };
                    (frac, p)
                })
                .collect();
            DayRecord { date, points }
        })
        .collect();
    Ok(PricePanel {
        ticker: ticker.to_string(),
        days,
    })
}

/// `R(t_j) = 100·ln(P(t_j)/P(t_1))` for every day; `R(t_1) = 0`.
pub fn cidr_transform(panel: &PricePanel) -> Vec<RawCurve> {
    panel
        .days
        .iter()
        .map(|day| {
            let base = day.points.first().map_or(1.0, |p| p.1);
            RawCurve {
                date: day.date.clone(),
                times: day.points.iter().map(|p| p.0).collect(),
                values: day
                    .points
                    .iter()
                    .map(|&(_, p)| if p == base { 0.0 } else { 100.0 * (p / base).ln() })
                    .collect(),
            }
        })
        .collect()
}

/// Piecewise-linear interpolation of `(times, values)` at the grid points,
/// holding the first/last value outside the observed range.
pub fn resample_to_grid(times: &[f64], values: &[f64], grid: &Grid) -> FtsResult<Array1<f64>> {
    if times.len() < 2 || times.len() != values.len() {
        return Err(FtsError::DaySkipped {
            points: times.len().min(values.len()),
        });
    }
    let last = times.len() - 1;
    let mut k = 0;
    Ok(grid
        .points()
        .iter()
        .map(|&t| {
            if t <= times[0] {
                return values[0];
            }
            if t >= times[last] {
                return values[last];
            }
            while times[k + 1] < t {
                k += 1;
            }
            if times[k + 1] == t {
                return values[k + 1];
            }
            let frac = (t - times[k]) / (times[k + 1] - times[k]);
            values[k] + frac * (values[k + 1] - values[k])
        })
        .collect())
}

/// CIDR curves of a panel on `grid`; days with fewer than two observations
/// are dropped and counted.
pub fn build_cidr_sample(panel: &PricePanel, grid: &Grid) -> FtsResult<CidrSample> {
    let mut rows = Vec::new();
    let mut dates = Vec::new();
    let mut skipped_days = 0;
    for curve in cidr_transform(panel) {
        match resample_to_grid(&curve.times, &curve.values, grid) {
            Ok(row) => {
                rows.push(row.to_vec());
                dates.push(curve.date);
            }
            Err(FtsError::DaySkipped { .. }) => skipped_days += 1,
            Err(e) => return Err(e),
        }
    }
    if rows.is_empty() {
        return Err(FtsError::InvalidSample(format!(
            "{}: no day has at least two observations",
            panel.ticker
        )));
    }
    Ok(CidrSample {
        ticker: panel.ticker.clone(),
        dates,
        sample: FunctionalSample::from_rows(&rows, grid.clone())?,
        skipped_days,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub a: String,
    pub b: String,
    pub v_stat: f64,
    pub p_value: f64,
}

/// All pairwise tests among a set of tickers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub tickers: Vec<String>,
    pub pairs: Vec<PairResult>,
    /// Symmetric p-value matrix; the diagonal is empty.
    pub p_values: Vec<Vec<Option<f64>>>,
    #[serde(rename = "frac_below_0.05")]
    pub frac_below_05: f64,
    pub config: TestConfig,
}

impl PairwiseReport {
    pub fn p_value(&self, a: usize, b: usize) -> Option<f64> {
        self.p_values[a][b]
    }

    /// Matrix CSV with the tickers as header row and first column.
    pub fn write_matrix_csv<W: Write>(&self, mut out: W) -> FtsResult<()> {
        writeln!(out, ",{}", self.tickers.join(","))?;
        for (i, t) in self.tickers.iter().enumerate() {
            write!(out, "{t}")?;
            for p in &self.p_values[i] {
                match p {
                    Some(v) => write!(out, ",{v}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Runs the test on every unordered pair. `config` defaults to
/// `H = w₁ = ⌊N^{1/4}⌋`, `w₂ = ⌊H^{1/4}⌋` with Bartlett kernels.
pub fn pairwise_matrix(
    samples: &[(String, FunctionalSample)],
    config: Option<TestConfig>,
) -> FtsResult<PairwiseReport> {
    if samples.len() < 2 {
        return Err(FtsError::Alignment("need at least two samples".into()));
    }
    let (first_name, first) = &samples[0];
    for (name, s) in &samples[1..] {
        if s.n() != first.n() {
            return Err(FtsError::Alignment(format!(
                "{name} has {} curves but {first_name} has {}",
                s.n(),
                first.n()
            )));
        }
        if s.grid().points() != first.grid().points() {
            return Err(FtsError::Alignment(format!(
                "{name} and {first_name} use different grids"
            )));
        }
    }
    let config = match config {
        Some(c) => c,
        None => TestConfig::defaults_for(first.n())?,
    };
    config.validate(first.n())?;

    let k = samples.len();
    let index: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let results: Vec<FtsResult<(usize, usize, f64, f64)>> = index
        .par_iter()
        .map(|&(i, j)| {
            let r = PairEstimator::new(&samples[i].1, &samples[j].1)?.test(&config)?;
            Ok((i, j, r.v_stat, r.p_value))
        })
        .collect();

    let mut p_values = vec![vec![None; k]; k];
    let mut pairs = Vec::with_capacity(results.len());
    for r in results {
        let (i, j, v, p) = r?;
        p_values[i][j] = Some(p);
        p_values[j][i] = Some(p);
        pairs.push(PairResult {
            a: samples[i].0.clone(),
            b: samples[j].0.clone(),
            v_stat: v,
            p_value: p,
        });
    }
    let below = pairs.iter().filter(|p| p.p_value < 0.05).count();
    Ok(PairwiseReport {
        tickers: samples.iter().map(|s| s.0.clone()).collect(),
        frac_below_05: below as f64 / pairs.len() as f64,
        pairs,
        p_values,
        config,
    })
}

/// Stacks curves from several sources into one sample (rows in order).
pub fn stack_rows(rows: &[Array1<f64>], grid: &Grid) -> FtsResult<FunctionalSample> {
    let m = grid.len();
    let mut values = Array2::zeros((rows.len(), m));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != m {
            return Err(FtsError::GridMismatch);
        }
        values.row_mut(i).assign(r);
    }
    FunctionalSample::new(values, grid.clone())
}
