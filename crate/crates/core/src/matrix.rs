//! Dense row-major matrices, the generalized (Moore-Penrose) inverse, and the
//! labeled text format used by the CLI.
//!
//! The pseudoinverse is computed from a one-sided Jacobi SVD with the
//! truncation threshold `max(n_rows, n_cols) * eps * sigma_max`, so
//! rank-deficient inputs are handled without special cases.

use crate::error::{Error, Result};

/// Row-major real matrix with optional row/column labels.
///
/// Labels are advisory: numeric operations never consult them, they only
/// travel along so printed output stays readable.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    pub row_labels: Option<Vec<String>>,
    pub col_labels: Option<Vec<String>>,
}

impl DenseMatrix {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} values, got {}",
                n_rows,
                n_cols,
                n_rows * n_cols,
                values.len()
            )));
        }
        Ok(DenseMatrix {
            n_rows,
            n_cols,
            values,
            row_labels: None,
            col_labels: None,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
            row_labels: None,
            col_labels: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a slice of rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch(
                "matrix needs at least one row".into(),
            ));
        }
        let n_cols = rows[0].len();
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("rows have unequal lengths".into()));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), n_cols, values)
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        DenseMatrix {
            n_rows: values.len(),
            n_cols: 1,
            values: values.to_vec(),
            row_labels: None,
            col_labels: None,
        }
    }

    pub fn with_labels(
        mut self,
        row_labels: Option<Vec<String>>,
        col_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if let Some(ref r) = row_labels {
            if r.len() != self.n_rows {
                return Err(Error::LabelMismatch(format!(
                    "{} row labels for {} rows",
                    r.len(),
                    self.n_rows
                )));
            }
        }
        if let Some(ref c) = col_labels {
            if c.len() != self.n_cols {
                return Err(Error::LabelMismatch(format!(
                    "{} column labels for {} columns",
                    c.len(),
                    self.n_cols
                )));
            }
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n_cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values[i * self.n_cols..(i + 1) * self.n_cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t.row_labels = self.col_labels.clone();
        t.col_labels = self.row_labels.clone();
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut out = Self::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.n_cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out.row_labels = self.row_labels.clone();
        out.col_labels = other.col_labels.clone();
        Ok(out)
    }

    /// Multiply by a vector, returning the result as a plain Vec.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.n_rows,
                self.n_cols,
                v.len()
            )));
        }
        Ok((0..self.n_rows)
            .map(|i| (0..self.n_cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect())
    }

    /// Horizontal concatenation.
    pub fn hcat(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_rows != other.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot hcat {} rows with {} rows",
                self.n_rows, other.n_rows
            )));
        }
        let mut out = Self::zeros(self.n_rows, self.n_cols + other.n_cols);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out.set(i, j, self.get(i, j));
            }
            for j in 0..other.n_cols {
                out.set(i, self.n_cols + j, other.get(i, j));
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        jacobi_svd(self).sigma
    }

    /// Number of singular values exceeding `tol * sigma_max`. `tol` must be
    /// positive.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        if tol <= 0.0 {
            return Err(Error::InvalidArgument(
                "rank tolerance must be positive".into(),
            ));
        }
        let sigma = self.singular_values();
        let smax = sigma.first().copied().unwrap_or(0.0);
        Ok(sigma.iter().filter(|&&s| s > tol * smax).count())
    }

    /// Rank at the default pseudoinverse threshold.
    pub fn rank_default(&self) -> usize {
        let sigma = self.singular_values();
        let smax = sigma.first().copied().unwrap_or(0.0);
        let tol = self.n_rows.max(self.n_cols) as f64 * f64::EPSILON * smax;
        sigma.iter().filter(|&&s| s > tol).count()
    }

    /// Moore-Penrose pseudoinverse. Labels are transferred transposed.
    pub fn ginv(&self) -> DenseMatrix {
        let svd = jacobi_svd(self);
        let smax = svd.sigma.first().copied().unwrap_or(0.0);
        let tol = self.n_rows.max(self.n_cols) as f64 * f64::EPSILON * smax;
        // A+ = sum_j v_j (1/s_j) u_j^T over singular values above threshold
        let mut out = Self::zeros(self.n_cols, self.n_rows);
        for (k, &s) in svd.sigma.iter().enumerate() {
            if s <= tol {
                break;
            }
            let inv = 1.0 / s;
            for i in 0..self.n_cols {
                let vi = svd.v[k][i] * inv;
                if vi == 0.0 {
                    continue;
                }
                for j in 0..self.n_rows {
                    let val = out.get(i, j) + vi * svd.u[k][j];
                    out.set(i, j, val);
                }
            }
        }
        out.row_labels = self.col_labels.clone();
        out.col_labels = self.row_labels.clone();
        out
    }

    /// Condition number sigma_max / sigma_min over singular values above the
    /// default threshold; infinite for rank-deficient input.
    pub fn condition_number(&self) -> f64 {
        let sigma = self.singular_values();
        let smax = sigma.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return f64::INFINITY;
        }
        let tol = self.n_rows.max(self.n_cols) as f64 * f64::EPSILON * smax;
        if sigma.iter().any(|&s| s <= tol) {
            return f64::INFINITY;
        }
        let smin = sigma.last().copied().unwrap_or(0.0);
        smax / smin
    }
}

struct Svd {
    /// Left singular vectors, one Vec per singular value (length n_rows).
    u: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    /// Right singular vectors, one Vec per singular value (length n_cols).
    v: Vec<Vec<f64>>,
}

/// One-sided Jacobi SVD. Plenty for the small dense matrices used here;
/// singular values come out accurate to near machine precision.
fn jacobi_svd(a: &DenseMatrix) -> Svd {
    if a.n_rows() < a.n_cols() {
        let t = jacobi_svd(&a.transpose());
        return Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    let m = a.n_rows();
    let n = a.n_cols();
    // Work on columns of A; V accumulates the applied rotations.
    let mut u: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let eps = f64::EPSILON;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u[p][i];
                    let uq = u[q][i];
                    u[p][i] = c * up - s * uq;
                    u[q][i] = s * up + c * uq;
                }
                for i in 0..n {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = u
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut su = Vec::with_capacity(n);
    let mut sv = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for &k in &order {
        let s = norms[k];
        sigma.push(s);
        if s > 0.0 {
            su.push(u[k].iter().map(|x| x / s).collect());
        } else {
            su.push(vec![0.0; m]);
        }
        sv.push(v[k].clone());
    }
    Svd {
        u: su,
        sigma,
        v: sv,
    }
}

/// Render a value as the smallest fraction p/q with q <= 64 when one matches
/// within 1e-9, mirroring how the reference output prints contrast weights.
/// Falls back to a trimmed decimal.
pub fn format_value(x: f64) -> String {
    if let Some((p, q)) = as_fraction(x) {
        if q == 1 {
            return format!("{}", p);
        }
        return format!("{}/{}", p, q);
    }
    let s = format!("{:.4}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Nearest p/q with q <= 64 within 1e-9, in lowest terms.
pub fn as_fraction(x: f64) -> Option<(i64, i64)> {
    if !x.is_finite() || x.abs() > 1e12 {
        return None;
    }
    for q in 1..=64i64 {
        let p = (x * q as f64).round();
        if (x - p / q as f64).abs() <= 1e-9 {
            let p = p as i64;
            let g = gcd(p.unsigned_abs(), q.unsigned_abs()).max(1) as i64;
            return Some((p / g, q / g));
        }
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Parse a single field: either a plain float or a fraction "p/q".
pub fn parse_value(field: &str) -> Result<f64> {
    let field = field.trim();
    if let Some((num, den)) = field.split_once('/') {
        let p: f64 = num.trim().parse().map_err(|_| Error::Parse {
            position: 0,
            message: format!("bad numerator in '{}'", field),
        })?;
        let q: f64 = den.trim().parse().map_err(|_| Error::Parse {
            position: 0,
            message: format!("bad denominator in '{}'", field),
        })?;
        if q == 0.0 {
            return Err(Error::Parse {
                position: 0,
                message: format!("zero denominator in '{}'", field),
            });
        }
        return Ok(p / q);
    }
    field.parse().map_err(|_| Error::Parse {
        position: 0,
        message: format!("not a number: '{}'", field),
    })
}

impl DenseMatrix {
    /// Labeled text format: a header row of column labels, then one labeled
    /// row per line, tab-separated. Near-rational entries print as fractions.
    pub fn to_text(&self) -> String {
        let col_labels: Vec<String> = match &self.col_labels {
            Some(c) => c.clone(),
            None => (1..=self.n_cols).map(|j| format!("c{}", j)).collect(),
        };
        let row_labels: Vec<String> = match &self.row_labels {
            Some(r) => r.clone(),
            None => (1..=self.n_rows).map(|i| format!("r{}", i)).collect(),
        };
        let mut out = String::new();
        out.push('\t');
        out.push_str(&col_labels.join("\t"));
        out.push('\n');
        for i in 0..self.n_rows {
            out.push_str(&row_labels[i]);
            for j in 0..self.n_cols {
                out.push('\t');
                out.push_str(&format_value(self.get(i, j)));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the labeled text format. Fields split on tabs when present,
    /// otherwise on runs of spaces. Fractions are accepted.
    pub fn from_text(text: &str) -> Result<DenseMatrix> {
        let split = |line: &str| -> Vec<String> {
            if line.contains('\t') {
                line.split('\t').map(|f| f.trim().to_string()).collect()
            } else {
                line.split_whitespace().map(|f| f.to_string()).collect()
            }
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::Parse {
            position: 0,
            message: "empty matrix text".into(),
        })?;
        let mut header_fields = split(header);
        if header_fields.first().map(|s| s.is_empty()).unwrap_or(false) {
            header_fields.remove(0);
        }
        let n_cols = header_fields.len();
        if n_cols == 0 {
            return Err(Error::Parse {
                position: 0,
                message: "matrix header has no column labels".into(),
            });
        }
        let mut row_labels = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in lines {
            let fields = split(line);
            if fields.len() != n_cols + 1 {
                return Err(Error::Parse {
                    position: 0,
                    message: format!(
                        "row '{}' has {} fields, expected label plus {} values",
                        fields.first().map(String::as_str).unwrap_or(""),
                        fields.len(),
                        n_cols
                    ),
                });
            }
            row_labels.push(fields[0].clone());
            rows.push(
                fields[1..]
                    .iter()
                    .map(|f| parse_value(f))
                    .collect::<Result<Vec<f64>>>()?,
            );
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                position: 0,
                message: "matrix text has no rows".into(),
            });
        }
        DenseMatrix::from_rows(&rows)?.with_labels(Some(row_labels), Some(header_fields))
    }
}
