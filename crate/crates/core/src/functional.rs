//! Discrete functional data: grids on `[0, 1]`, trapezoid quadrature,
//! inner products, centering and Gram matrices.
//!
//! Curves are stored densely as rows of an `n × m` array evaluated on a
//! shared [`Grid`]. Every quantity the independence test needs is a
//! function of `L²` inner products, so the Gram matrix of the centered
//! curves is the only summary the estimators consume.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{FtsError, FtsResult};

/// Quadrature grid on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Validates and builds a grid from explicit points and weights.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> FtsResult<Self> {
        if points.len() < 2 {
            return Err(FtsError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.len() != weights.len() {
            return Err(FtsError::InvalidGrid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if !points.iter().all(|t| t.is_finite()) {
            return Err(FtsError::InvalidGrid("non-finite grid point".into()));
        }
        if points[0] < 0.0 || points[points.len() - 1] > 1.0 {
            return Err(FtsError::InvalidGrid("points must lie in [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FtsError::InvalidGrid(
                "points must be strictly increasing".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(FtsError::InvalidGrid("weights must be positive".into()));
        }
        let span = points[points.len() - 1] - points[0];
        let total: f64 = weights.iter().sum();
        if (total - span).abs() > 1e-9 {
            return Err(FtsError::InvalidGrid(format!(
                "weights sum to {total}, expected {span}"
            )));
        }
        Ok(Self { points, weights })
    }

    /// Trapezoid-rule grid on arbitrary strictly increasing points.
    pub fn trapezoid(points: Vec<f64>) -> FtsResult<Self> {
        if points.len() < 2 {
            return Err(FtsError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        let m = points.len();
        let mut weights = vec![0.0; m];
        for j in 0..m - 1 {
            let half = 0.5 * (points[j + 1] - points[j]);
            weights[j] += half;
            weights[j + 1] += half;
        }
        Self::new(points, weights)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when the points are equally spaced (to rounding).
    pub fn is_uniform(&self) -> bool {
        let m = self.points.len();
        let step = (self.points[m - 1] - self.points[0]) / (m - 1) as f64;
        self.points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-12 * step.max(1.0))
    }

    /// Quadrature of a single curve, `∫ f`.
    pub fn integrate(&self, f: ArrayView1<'_, f64>) -> f64 {
        self.weights.iter().zip(f.iter()).map(|(w, v)| w * v).sum()
    }
}

/// `m` equally spaced points spanning `[0, 1]` with trapezoid weights.
pub fn make_uniform_grid(m: usize) -> FtsResult<Grid> {
    if m < 2 {
        return Err(FtsError::InvalidGrid(format!(
            "need at least 2 points, got {m}"
        )));
    }
    let denom = (m - 1) as f64;
    let points: Vec<f64> = (0..m).map(|j| j as f64 / denom).collect();
    let delta = 1.0 / denom;
    let mut weights = vec![delta; m];
    weights[0] = 0.5 * delta;
    weights[m - 1] = 0.5 * delta;
    Grid::new(points, weights)
}

/// `n` curves evaluated on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    values: Array2<f64>,
    grid: Grid,
}

impl FunctionalSample {
    pub fn new(values: Array2<f64>, grid: Grid) -> FtsResult<Self> {
        if values.nrows() == 0 {
            return Err(FtsError::InvalidSample("sample has no curves".into()));
        }
        if values.ncols() != grid.len() {
            return Err(FtsError::InvalidSample(format!(
                "curves have {} values but the grid has {} points",
                values.ncols(),
                grid.len()
            )));
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(FtsError::InvalidSample(format!(
                "non-finite value in curve {i} at grid point {j}"
            )));
        }
        Ok(Self { values, grid })
    }

    /// Builds a sample from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], grid: Grid) -> FtsResult<Self> {
        let m = grid.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(FtsError::InvalidSample(format!(
                "curve {bad} has {} values, expected {m}",
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), m), flat)
            .map_err(|e| FtsError::InvalidSample(e.to_string()))?;
        Self::new(values, grid)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of grid points.
    pub fn m(&self) -> usize {
        self.values.ncols()
    }

    pub fn curve(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Pointwise sample mean curve.
    pub fn mean_curve(&self) -> Array1<f64> {
        self.values
            .mean_axis(Axis(0))
            .expect("sample has at least one curve")
    }

    /// Adds a fixed curve to every observation.
    pub fn shifted(&self, offset: ArrayView1<'_, f64>) -> FtsResult<Self> {
        if offset.len() != self.m() {
            return Err(FtsError::GridMismatch);
        }
        let values = &self.values + &offset;
        Self::new(values, self.grid.clone())
    }

    /// Reverses the time order of the curves.
    pub fn reversed(&self) -> Self {
        let values = self.values.slice(ndarray::s![..;-1, ..]).to_owned();
        Self {
            values,
            grid: self.grid.clone(),
        }
    }

    /// Writes the sample as CSV: a `#grid` row with the grid points, then
    /// one row per curve.
    pub fn write_csv<W: Write>(&self, mut out: W) -> FtsResult<()> {
        write!(out, "#grid")?;
        for t in self.grid.points() {
            write!(out, ",{t}")?;
        }
        writeln!(out)?;
        for row in self.values.rows() {
            let mut first = true;
            for v in row {
                if first {
                    write!(out, "{v}")?;
                    first = false;
                } else {
                    write!(out, ",{v}")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Reads a sample written by [`FunctionalSample::write_csv`]. Without a
    /// `#grid` row the curves are assumed to sit on a uniform grid.
    pub fn read_csv<R: BufRead>(input: R) -> FtsResult<Self> {
        let mut grid_points: Option<Vec<f64>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("#grid") {
                if grid_points.is_some() || !rows.is_empty() {
                    return Err(FtsError::Parse {
                        line: lineno,
                        message: "#grid row must come first".into(),
                    });
                }
                let rest = rest.strip_prefix(',').unwrap_or(rest);
                grid_points = Some(parse_fields(rest, lineno)?);
                continue;
            }
            rows.push(parse_fields(trimmed, lineno)?);
        }
        if rows.is_empty() {
            return Err(FtsError::InvalidSample("file contains no curves".into()));
        }
        let grid = match grid_points {
            Some(points) => {
                let uniform = make_uniform_grid(points.len())?;
                if uniform.points() == points.as_slice() {
                    uniform
                } else {
                    Grid::trapezoid(points)?
                }
            }
            None => make_uniform_grid(rows[0].len())?,
        };
        Self::from_rows(&rows, grid)
    }
}

fn parse_fields(line: &str, lineno: usize) -> FtsResult<Vec<f64>> {
    line.split(',')
        .map(|field| {
            field.trim().parse::<f64>().map_err(|e| FtsError::Parse {
                line: lineno,
                message: format!("bad number {:?}: {e}", field.trim()),
            })
        })
        .collect()
}

/// `∫ f g`, by trapezoid quadrature on the shared grid.
pub fn inner_product(
    f: ArrayView1<'_, f64>,
    g: ArrayView1<'_, f64>,
    grid: &Grid,
) -> FtsResult<f64> {
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(FtsError::GridMismatch);
    }
    Ok(grid
        .weights()
        .iter()
        .zip(f.iter().zip(g.iter()))
        .map(|(w, (a, b))| w * (a * b))
        .sum())
}

/// Subtracts the pointwise sample mean from every curve.
pub fn center(sample: &FunctionalSample) -> FunctionalSample {
    let mean = sample.mean_curve();
    FunctionalSample {
        values: &sample.values - &mean,
        grid: sample.grid.clone(),
    }
}

/// Symmetric matrix of pairwise inner products `⟨f_i, f_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(Array2<f64>);

impl GramMatrix {
    pub fn entries(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }
}

/// Gram matrix of the curves of `sample` (no centering).
pub fn gram_matrix(sample: &FunctionalSample) -> GramMatrix {
    let weights = ArrayView1::from(sample.grid.weights());
    let weighted = &sample.values * &weights;
    let mut gram = weighted.dot(&sample.values.t());
    // exact symmetry
    let n = gram.nrows();
    for i in 0..n {
        for j in 0..i {
            gram[[i, j]] = gram[[j, i]];
        }
    }
    GramMatrix(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_grid_small_cases() {
        let g2 = make_uniform_grid(2).unwrap();
        assert_eq!(g2.points(), &[0.0, 1.0]);
        assert_eq!(g2.weights(), &[0.5, 0.5]);
        let g3 = make_uniform_grid(3).unwrap();
        assert_eq!(g3.points(), &[0.0, 0.5, 1.0]);
        assert_eq!(g3.weights(), &[0.25, 0.5, 0.25]);
        assert!(matches!(make_uniform_grid(1), Err(FtsError::InvalidGrid(_))));
        assert!(matches!(make_uniform_grid(0), Err(FtsError::InvalidGrid(_))));
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let grid = make_uniform_grid(101).unwrap();
        let f = Array1::from(grid.points().to_vec());
        assert!((grid.integrate(f.view()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(Grid::new(vec![0.0, 0.5, 0.4], vec![0.2, 0.2, 0.0]).is_err());
        assert!(Grid::new(vec![0.0, 1.2], vec![0.6, 0.6]).is_err());
        assert!(Grid::new(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(Grid::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(Grid::trapezoid(vec![0.1, 0.3, 0.9]).is_ok());
    }

    #[test]
    fn inner_product_examples() {
        let grid = make_uniform_grid(101).unwrap();
        let one = Array1::from_elem(101, 1.0);
        let zero = Array1::zeros(101);
        let t = Array1::from(grid.points().to_vec());
        assert!((inner_product(one.view(), one.view(), &grid).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(inner_product(zero.view(), t.view(), &grid).unwrap(), 0.0);
        let tt = inner_product(t.view(), t.view(), &grid).unwrap();
        assert!((tt - 1.0 / 3.0).abs() < 1e-4);
        let short = Array1::from_elem(7, 1.0);
        assert!(matches!(
            inner_product(short.view(), one.view(), &grid),
            Err(FtsError::GridMismatch)
        ));
    }

    #[test]
    fn center_examples() {
        let grid = make_uniform_grid(3).unwrap();
        let single = FunctionalSample::new(array![[1.0, -2.0, 3.0]], grid.clone()).unwrap();
        assert!(center(&single).values().iter().all(|v| *v == 0.0));

        let same = FunctionalSample::new(array![[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]], grid.clone())
            .unwrap();
        assert!(center(&same).values().iter().all(|v| *v == 0.0));

        let anti = FunctionalSample::new(array![[1.0, 2.0, 3.0], [-1.0, -2.0, -3.0]], grid)
            .unwrap();
        assert_eq!(center(&anti).values(), anti.values());
    }

    #[test]
    fn gram_examples() {
        let grid = make_uniform_grid(5).unwrap();
        let one = FunctionalSample::new(Array2::from_elem((1, 5), 1.0), grid.clone()).unwrap();
        let g = gram_matrix(&one);
        assert!((g.get(0, 0) - 1.0).abs() < 1e-15);

        // hat functions at distinct interior knots are orthogonal under
        // trapezoid weights
        let hats = FunctionalSample::new(
            array![[0.0, 1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, 0.0]],
            grid,
        )
        .unwrap();
        let g = gram_matrix(&hats);
        assert_eq!(g.get(0, 1), 0.0);
        assert_eq!(g.get(1, 0), 0.0);
    }

    #[test]
    fn gram_matches_pairwise_loop() {
        let grid = make_uniform_grid(4).unwrap();
        let s = FunctionalSample::new(
            array![
                [0.3, -1.2, 2.5, 0.7],
                [1.1, 0.4, -0.9, 2.2],
                [-0.6, 1.9, 0.05, -1.4]
            ],
            grid.clone(),
        )
        .unwrap();
        let g = gram_matrix(&s);
        for i in 0..3 {
            for j in 0..3 {
                let direct = inner_product(s.curve(i), s.curve(j), &grid).unwrap();
                assert!((g.get(i, j) - direct).abs() < 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sample_rejects_non_finite() {
        let grid = make_uniform_grid(2).unwrap();
        assert!(FunctionalSample::new(array![[0.0, f64::NAN]], grid.clone()).is_err());
        assert!(FunctionalSample::new(Array2::zeros((0, 2)), grid.clone()).is_err());
        assert!(FunctionalSample::new(Array2::zeros((1, 3)), grid).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = make_uniform_grid(7).unwrap();
        let values = Array2::from_shape_fn((3, 7), |(i, j)| {
            ((i * 7 + j) as f64 * 0.123456789).sin() / 3.0
        });
        let s = FunctionalSample::new(values, grid).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = FunctionalSample::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values(), s.values());
        assert_eq!(back.grid().points(), s.grid().points());
    }

    #[test]
    fn csv_without_grid_row_uses_uniform_grid() {
        let text = "1,2,3\n4,5,6\n";
        let s = FunctionalSample::read_csv(text.as_bytes()).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.grid().points(), &[0.0, 0.5, 1.0]);
        let bad = "1,2,x\n";
        assert!(matches!(
            FunctionalSample::read_csv(bad.as_bytes()),
            Err(FtsError::Parse { line: 1, .. })
        ));
    }
}
