//! Factorial dataset simulation with exact sample moments: per-cell means
//! and standard deviations (and, for within designs, correlations) equal the
//! specification exactly, not just in expectation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::design::{Dataset, Factor};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone)]
pub enum SdSpec {
    Scalar(f64),
    /// Same shape as the means matrix.
    Matrix(DenseMatrix),
}

#[derive(Debug, Clone)]
pub enum CorrelationSpec {
    /// One correlation for every pair of within cells, broadcast to every
    /// between cell.
    Scalar(f64),
    /// One w x w matrix per between cell.
    PerCell(Vec<DenseMatrix>),
}

#[derive(Debug, Clone)]
pub struct DesignSpec {
    pub between_levels: Vec<usize>,
    pub within_levels: Vec<usize>,
    pub n_per_cell: usize,
    /// Rows = between-cell combinations (first factor slowest), columns =
    /// within-cell combinations.
    pub means: DenseMatrix,
    pub sd: SdSpec,
    pub correlation: Option<CorrelationSpec>,
    pub seed: u64,
    /// Round the response to integers after moment forcing.
    pub round_dv: bool,
}

impl DesignSpec {
    pub fn n_between_cells(&self) -> usize {
        self.between_levels.iter().product::<usize>().max(1)
    }

    pub fn n_within_cells(&self) -> usize {
        self.within_levels.iter().product::<usize>().max(1)
    }

    fn validate(&self) -> Result<()> {
        if self
            .between_levels
            .iter()
            .chain(&self.within_levels)
            .any(|&k| k < 2)
        {
            return Err(Error::InvalidArgument(
                "every factor needs at least 2 levels".into(),
            ));
        }
        if self.n_per_cell < 2 {
            return Err(Error::InvalidArgument(
                "n_per_cell must be at least 2 (the sample SD is undefined for n = 1)".into(),
            ));
        }
        let (b, w) = (self.n_between_cells(), self.n_within_cells());
        if self.means.n_rows() != b || self.means.n_cols() != w {
            return Err(Error::DimensionMismatch(format!(
                "means matrix is {}x{}, design needs {}x{} (between cells x within cells)",
                self.means.n_rows(),
                self.means.n_cols(),
                b,
                w
            )));
        }
        match &self.sd {
            SdSpec::Scalar(s) => {
                if *s <= 0.0 || s.is_nan() {
                    return Err(Error::InvalidArgument("sd must be positive".into()));
                }
            }
            SdSpec::Matrix(m) => {
                if m.n_rows() != b || m.n_cols() != w {
                    return Err(Error::DimensionMismatch(format!(
                        "sd matrix is {}x{}, needs {}x{}",
                        m.n_rows(),
                        m.n_cols(),
                        b,
                        w
                    )));
                }
                if m.values().iter().any(|&v| v <= 0.0 || v.is_nan()) {
                    return Err(Error::InvalidArgument(
                        "all sd entries must be positive".into(),
                    ));
                }
            }
        }
        if let Some(corr) = &self.correlation {
            if self.within_levels.is_empty() {
                return Err(Error::InvalidArgument(
                    "a correlation needs at least one within-subjects factor".into(),
                ));
            }
            if self.n_per_cell <= w {
                return Err(Error::InvalidArgument(format!(
                    "exact correlations need n_per_cell > {} within cells, got {}",
                    w, self.n_per_cell
                )));
            }
            match corr {
                CorrelationSpec::Scalar(r) => {
                    if *r <= -1.0 || *r >= 1.0 || r.is_nan() {
                        return Err(Error::InvalidArgument(format!(
                            "scalar correlation must lie in (-1, 1), got {}",
                            r
                        )));
                    }
                }
                CorrelationSpec::PerCell(mats) => {
                    if mats.len() != b {
                        return Err(Error::DimensionMismatch(format!(
                            "{} correlation matrices for {} between cells",
                            mats.len(),
                            b
                        )));
                    }
                    for m in mats {
                        validate_correlation_matrix(m, w)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn sd_at(&self, bc: usize, wc: usize) -> f64 {
        match &self.sd {
            SdSpec::Scalar(s) => *s,
            SdSpec::Matrix(m) => m.get(bc, wc),
        }
    }

    fn correlation_at(&self, bc: usize) -> Option<DenseMatrix> {
        let w = self.n_within_cells();
        match &self.correlation {
            None => None,
            Some(CorrelationSpec::Scalar(r)) => {
                let mut m = DenseMatrix::identity(w);
                for i in 0..w {
                    for j in 0..w {
                        if i != j {
                            m.set(i, j, *r);
                        }
                    }
                }
                Some(m)
            }
            Some(CorrelationSpec::PerCell(mats)) => Some(mats[bc].clone()),
        }
    }
}

fn validate_correlation_matrix(m: &DenseMatrix, w: usize) -> Result<()> {
    if m.n_rows() != w || m.n_cols() != w {
        return Err(Error::DimensionMismatch(format!(
            "correlation matrix is {}x{}, needs {}x{}",
            m.n_rows(),
            m.n_cols(),
            w,
            w
        )));
    }
    for i in 0..w {
        if (m.get(i, i) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "correlation diagonal must be 1".into(),
            ));
        }
        for j in 0..w {
            if (m.get(i, j) - m.get(j, i)).abs() > 1e-12 {
                return Err(Error::InvalidArgument(
                    "correlation matrix must be symmetric".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Lower-triangular Cholesky factor; errors when not positive definite.
fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = m.n_rows();
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 1e-12 {
                    return Err(Error::NotPositiveDefinite);
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

const MAX_REDRAWS: usize = 10;

/// Simulate the design. Between factors are named B_A, B_B, ... with levels
/// A1..Ak, B1..Bk, ...; within factors W_A, ...; plus an `id` factor and the
/// response `DV`. Rows are ordered with between cells slowest, then subject,
/// then within cells.
pub fn mixed_design(spec: &DesignSpec) -> Result<Dataset> {
    spec.validate()?;
    let b_cells = spec.n_between_cells();
    let w_cells = spec.n_within_cells();
    let n = spec.n_per_cell;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // per between cell: n x w matrix of responses
    let mut responses: Vec<Vec<Vec<f64>>> = Vec::with_capacity(b_cells);
    for bc in 0..b_cells {
        let corr = spec.correlation_at(bc);
        let scores = match corr {
            None => independent_scores(&mut rng, n, w_cells)?,
            Some(r) => correlated_scores(&mut rng, n, w_cells, &r)?,
        };
        let mut cell = vec![vec![0.0; w_cells]; n];
        for (i, row) in cell.iter_mut().enumerate() {
            for (wc, v) in row.iter_mut().enumerate() {
                let raw = spec.means.get(bc, wc) + spec.sd_at(bc, wc) * scores[i][wc];
                *v = if spec.round_dv { raw.round() } else { raw };
            }
        }
        responses.push(cell);
    }

    // assemble long-format dataset
    let n_rows = b_cells * n * w_cells;
    let letters = |i: usize| (b'A' + i as u8) as char;
    let mut factors: Vec<Factor> = Vec::new();
    for (fi, &k) in spec.between_levels.iter().enumerate() {
        factors.push(Factor {
            name: format!("B_{}", letters(fi)),
            levels: (1..=k).map(|l| format!("{}{}", letters(fi), l)).collect(),
            codes: Vec::with_capacity(n_rows),
        });
    }
    let n_between_factors = factors.len();
    for (fi, &k) in spec.within_levels.iter().enumerate() {
        factors.push(Factor {
            name: format!("W_{}", letters(fi)),
            levels: (1..=k).map(|l| format!("{}{}", letters(fi), l)).collect(),
            codes: Vec::with_capacity(n_rows),
        });
    }
    let n_subjects = b_cells * n;
    let mut id = Factor {
        name: "id".into(),
        levels: (1..=n_subjects).map(|i| i.to_string()).collect(),
        codes: Vec::with_capacity(n_rows),
    };
    let mut dv = Vec::with_capacity(n_rows);

    for bc in 0..b_cells {
        let b_digits = mixed_radix(bc, &spec.between_levels);
        for subj in 0..n {
            for wc in 0..w_cells {
                let w_digits = mixed_radix(wc, &spec.within_levels);
                for (fi, &d) in b_digits.iter().enumerate() {
                    factors[fi].codes.push(d);
                }
                for (fi, &d) in w_digits.iter().enumerate() {
                    factors[n_between_factors + fi].codes.push(d);
                }
                id.codes.push(bc * n + subj);
                dv.push(responses[bc][subj][wc]);
            }
        }
    }
    factors.push(id);
    Ok(Dataset {
        factors,
        numeric: vec![("DV".into(), dv)],
        n: n_rows,
    })
}

/// Digits of `idx` with the first factor varying slowest.
fn mixed_radix(idx: usize, levels: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; levels.len()];
    let mut rem = idx;
    for (i, &k) in levels.iter().enumerate().rev() {
        digits[i] = rem % k;
        rem /= k;
    }
    digits
}

fn draw_normals(rng: &mut ChaCha8Rng, n: usize, w: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..w).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

/// Per-column z-scoring: exact mean 0 and sample SD 1 in every column.
fn independent_scores(rng: &mut ChaCha8Rng, n: usize, w: usize) -> Result<Vec<Vec<f64>>> {
    'attempt: for _ in 0..MAX_REDRAWS {
        let mut z = draw_normals(rng, n, w);
        for wc in 0..w {
            let mean = z.iter().map(|row| row[wc]).sum::<f64>() / n as f64;
            let var = z.iter().map(|row| (row[wc] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            if var.sqrt() < 1e-12 {
                continue 'attempt;
            }
            let sd = var.sqrt();
            for row in z.iter_mut() {
                row[wc] = (row[wc] - mean) / sd;
            }
        }
        return Ok(z);
    }
    Err(Error::DegenerateDraw(MAX_REDRAWS))
}

/// Whiten the n x w draw against the constant vector via Gram-Schmidt, scale
/// to unit sample variance, then color by the Cholesky factor of the target
/// correlation: sample means 0, SDs 1, and correlations exactly R.
fn correlated_scores(
    rng: &mut ChaCha8Rng,
    n: usize,
    w: usize,
    r: &DenseMatrix,
) -> Result<Vec<Vec<f64>>> {
    let l = cholesky(r)?;
    'attempt: for _ in 0..MAX_REDRAWS {
        let z = draw_normals(rng, n, w);
        // orthonormal basis of span{1, z_1, .., z_w} starting from the
        // constant vector; q[j] for j >= 1 have zero mean
        let inv_sqrt_n = 1.0 / (n as f64).sqrt();
        let mut q: Vec<Vec<f64>> = vec![vec![inv_sqrt_n; n]];
        for wc in 0..w {
            let mut v: Vec<f64> = z.iter().map(|row| row[wc]).collect();
            for _ in 0..2 {
                for b in &q {
                    let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= dot * bi;
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-10 {
                continue 'attempt;
            }
            q.push(v.iter().map(|x| x / norm).collect());
        }
        // unit-sample-variance whitened columns, then color: Y = U L^T
        let scale = ((n - 1) as f64).sqrt();
        let mut out = vec![vec![0.0; w]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for t in 0..=j {
                    acc += l.get(j, t) * q[t + 1][i] * scale;
                }
                *v = acc;
            }
        }
        return Ok(out);
    }
    Err(Error::DegenerateDraw(MAX_REDRAWS))
}
