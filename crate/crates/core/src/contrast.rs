//! Contrast families, hypothesis-matrix conversion through the generalized
//! inverse, and centering/orthogonality diagnostics.
//!
//! The conversion convention: a hypothesis matrix stores one weight row per
//! hypothesis over the k condition means. Applying the generalized inverse to
//! the stacked rows yields the k x m contrast matrix, and vice versa.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Centering / all-ones checks use this absolute tolerance.
pub const CENTER_TOL: f64 = 1e-9;

/// Built-in contrast families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastKind {
    Treatment,
    Sum,
    ScaledSum,
    Repeated,
    Polynomial,
    Helmert,
}

impl ContrastKind {
    pub fn parse(name: &str) -> Option<ContrastKind> {
        match name {
            "treatment" => Some(ContrastKind::Treatment),
            "sum" => Some(ContrastKind::Sum),
            "scaled_sum" => Some(ContrastKind::ScaledSum),
            "repeated" => Some(ContrastKind::Repeated),
            "polynomial" => Some(ContrastKind::Polynomial),
            "helmert" => Some(ContrastKind::Helmert),
            _ => None,
        }
    }
}

/// A k-level factor's contrast coding: k x m matrix with m <= k-1 named
/// columns. Unless constructed with `allow_deficient`, the columns together
/// with the intercept must be linearly independent.
#[derive(Debug, Clone)]
pub struct ContrastMatrix {
    pub levels: Vec<String>,
    pub matrix: DenseMatrix,
    pub column_names: Vec<String>,
}

impl ContrastMatrix {
    pub fn new(
        levels: Vec<String>,
        matrix: DenseMatrix,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let c = Self::new_allow_deficient(levels, matrix, column_names)?;
        let with_intercept = intercept_column(c.k()).hcat(&c.matrix)?;
        let rank = with_intercept.rank_default();
        if rank < c.m() + 1 {
            let dependent = dependent_columns(&with_intercept, &c.column_names);
            return Err(Error::RankDeficient(format!(
                "contrast columns are collinear with the intercept; dependent column(s): {}",
                dependent.join(", ")
            )));
        }
        Ok(c)
    }

    /// Skip the collinearity check; fewer-than-maximal or dependent columns
    /// are then the caller's responsibility.
    pub fn new_allow_deficient(
        levels: Vec<String>,
        matrix: DenseMatrix,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let k = levels.len();
        if k < 2 {
            return Err(Error::InvalidArgument(
                "a contrast needs at least 2 levels".into(),
            ));
        }
        if matrix.n_rows() != k {
            return Err(Error::DimensionMismatch(format!(
                "contrast matrix has {} rows for {} levels",
                matrix.n_rows(),
                k
            )));
        }
        let m = matrix.n_cols();
        if m == 0 || m > k - 1 {
            return Err(Error::DimensionMismatch(format!(
                "a {}-level factor takes 1..{} contrast columns, got {}",
                k,
                k - 1,
                m
            )));
        }
        if column_names.len() != m {
            return Err(Error::LabelMismatch(format!(
                "{} column names for {} contrast columns",
                column_names.len(),
                m
            )));
        }
        let matrix = matrix.with_labels(Some(levels.clone()), Some(column_names.clone()))?;
        Ok(ContrastMatrix {
            levels,
            matrix,
            column_names,
        })
    }

    pub fn k(&self) -> usize {
        self.levels.len()
    }

    pub fn m(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Same coefficients bound to a different set of level labels.
    pub fn with_levels(&self, levels: Vec<String>) -> Result<ContrastMatrix> {
        if levels.len() != self.k() {
            return Err(Error::LabelMismatch(format!(
                "contrast has {} levels, factor has {}",
                self.k(),
                levels.len()
            )));
        }
        let matrix = self
            .matrix
            .clone()
            .with_labels(Some(levels.clone()), Some(self.column_names.clone()))?;
        Ok(ContrastMatrix {
            levels,
            matrix,
            column_names: self.column_names.clone(),
        })
    }
}

fn intercept_column(k: usize) -> DenseMatrix {
    DenseMatrix::new(k, 1, vec![1.0; k]).unwrap()
}

/// Greedy Gram-Schmidt over the columns of `m` (intercept first); returns the
/// names of columns that add no new direction.
fn dependent_columns(m: &DenseMatrix, names: &[String]) -> Vec<String> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dependent = Vec::new();
    let scale = m.frobenius_norm().max(1.0);
    for j in 0..m.n_cols() {
        let mut v = m.col(j);
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 * scale {
            basis.push(v.iter().map(|x| x / norm).collect());
        } else if j > 0 {
            dependent.push(names[j - 1].clone());
        }
    }
    dependent
}

fn default_levels(k: usize) -> Vec<String> {
    (1..=k).map(|i| i.to_string()).collect()
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 levels, got {}",
            k
        )));
    }
    Ok(())
}

/// Treatment contrasts: column j is the indicator of level j+1, level 1 is
/// the baseline. Columns are named after the non-baseline levels.
pub fn treatment(k: usize) -> Result<ContrastMatrix> {
    treatment_for(&default_levels(k))
}

pub fn treatment_for(levels: &[String]) -> Result<ContrastMatrix> {
    let k = levels.len();
    check_k(k)?;
    let mut m = DenseMatrix::zeros(k, k - 1);
    for j in 0..k - 1 {
        m.set(j + 1, j, 1.0);
    }
    ContrastMatrix::new(levels.to_vec(), m, levels[1..].to_vec())
}

/// Sum contrasts: column j has +1 at level j, -1 at the last level.
pub fn sum_contrast(k: usize) -> Result<ContrastMatrix> {
    check_k(k)?;
    let mut m = DenseMatrix::zeros(k, k - 1);
    for j in 0..k - 1 {
        m.set(j, j, 1.0);
        m.set(k - 1, j, -1.0);
    }
    ContrastMatrix::new(
        default_levels(k),
        m,
        (1..k).map(|j| j.to_string()).collect(),
    )
}

/// Scaled sum contrasts. For k = 2 the single column is (-0.5, +0.5) so the
/// slope estimates mean(level 2) - mean(level 1); for k > 2 it is
/// sum_contrast(k) / 2.
pub fn scaled_sum(k: usize) -> Result<ContrastMatrix> {
    check_k(k)?;
    if k == 2 {
        let m = DenseMatrix::new(2, 1, vec![-0.5, 0.5])?;
        return ContrastMatrix::new(default_levels(2), m, vec!["1".into()]);
    }
    let mut c = sum_contrast(k)?;
    let mut m = DenseMatrix::zeros(k, k - 1);
    for i in 0..k {
        for j in 0..k - 1 {
            m.set(i, j, c.matrix.get(i, j) / 2.0);
        }
    }
    c.matrix = m.with_labels(Some(c.levels.clone()), Some(c.column_names.clone()))?;
    Ok(c)
}

/// Repeated (successive difference) contrasts: column j tests level j+1
/// minus level j. Column j holds -(k-j)/k for the first j rows and j/k after.
pub fn repeated(k: usize) -> Result<ContrastMatrix> {
    check_k(k)?;
    let mut m = DenseMatrix::zeros(k, k - 1);
    for j in 1..k {
        for i in 0..k {
            let v = if i < j {
                -((k - j) as f64) / k as f64
            } else {
                j as f64 / k as f64
            };
            m.set(i, j - 1, v);
        }
    }
    let names = (2..=k).map(|j| format!("c{}vs{}", j, j - 1)).collect();
    ContrastMatrix::new(default_levels(k), m, names)
}

/// Orthonormal polynomial contrasts over equally spaced levels: Gram-Schmidt
/// on the monomials x^0..x^(k-1) at x = 1..k, in increasing degree and with
/// no sign flips; the constant column is dropped.
pub fn polynomial(k: usize) -> Result<ContrastMatrix> {
    check_k(k)?;
    let x: Vec<f64> = (1..=k).map(|i| i as f64).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for degree in 0..k {
        let mut v: Vec<f64> = x.iter().map(|&xi| xi.powi(degree as i32)).collect();
        // two orthogonalization passes keep the high-degree columns clean
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::RankDeficient("degenerate polynomial basis".into()));
        }
        basis.push(v.iter().map(|a| a / norm).collect());
    }
    let mut m = DenseMatrix::zeros(k, k - 1);
    for (j, col) in basis.iter().skip(1).enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    let names = (1..k)
        .map(|d| match d {
            1 => ".L".to_string(),
            2 => ".Q".to_string(),
            3 => ".C".to_string(),
            d => format!("^{}", d),
        })
        .collect();
    ContrastMatrix::new(default_levels(k), m, names)
}

/// Helmert contrasts: column j compares the mean of the first j levels with
/// level j+1 (-1 for rows 1..j, j at row j+1, 0 after).
pub fn helmert(k: usize) -> Result<ContrastMatrix> {
    check_k(k)?;
    let mut m = DenseMatrix::zeros(k, k - 1);
    for j in 1..k {
        for i in 0..j {
            m.set(i, j - 1, -1.0);
        }
        m.set(j, j - 1, j as f64);
    }
    ContrastMatrix::new(
        default_levels(k),
        m,
        (1..k).map(|j| j.to_string()).collect(),
    )
}

pub fn build(kind: ContrastKind, k: usize) -> Result<ContrastMatrix> {
    match kind {
        ContrastKind::Treatment => treatment(k),
        ContrastKind::Sum => sum_contrast(k),
        ContrastKind::ScaledSum => scaled_sum(k),
        ContrastKind::Repeated => repeated(k),
        ContrastKind::Polynomial => polynomial(k),
        ContrastKind::Helmert => helmert(k),
    }
}

/// Build a family for a concrete set of level labels (treatment columns take
/// the level names, matching how design-matrix columns are titled).
pub fn build_for_levels(kind: ContrastKind, levels: &[String]) -> Result<ContrastMatrix> {
    match kind {
        ContrastKind::Treatment => treatment_for(levels),
        _ => build(kind, levels.len())?.with_levels(levels.to_vec()),
    }
}

/// Wrap user-supplied columns as a contrast, validating shape and (unless
/// `allow_deficient`) collinearity with the intercept.
pub fn custom(
    matrix: DenseMatrix,
    levels: Vec<String>,
    allow_deficient: bool,
) -> Result<ContrastMatrix> {
    let names = match &matrix.col_labels {
        Some(c) => c.clone(),
        None => (1..=matrix.n_cols()).map(|j| format!("c{}", j)).collect(),
    };
    if allow_deficient {
        ContrastMatrix::new_allow_deficient(levels, matrix, names)
    } else {
        ContrastMatrix::new(levels, matrix, names)
    }
}

/// Result of turning predicted condition means into a single contrast:
/// centered, and divided by the common rational scale when one exists.
pub struct PredictedMeansContrast {
    pub contrast: ContrastMatrix,
    /// The divisor applied after centering; None means no common rational
    /// scale was found within tolerance and the centered reals were kept.
    pub scale: Option<f64>,
}

/// Turn a vector of predicted means into one centered contrast column,
/// reduced to the smallest integer pattern when the centered values share a
/// common real scale (tolerance 1e-9).
pub fn from_predicted_means(means: &[f64]) -> Result<PredictedMeansContrast> {
    if means.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 predicted means".into(),
        ));
    }
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let centered: Vec<f64> = means.iter().map(|m| m - mean).collect();
    let max_abs = centered.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max_abs < CENTER_TOL {
        return Err(Error::ZeroContrast("all predicted means are equal".into()));
    }

    let scale = common_scale(&centered);
    let column = match scale {
        Some(s) => centered
            .iter()
            .map(|c| (c / s).round())
            .collect::<Vec<f64>>(),
        None => centered.clone(),
    };
    let k = means.len();
    let m = DenseMatrix::new(k, 1, column)?;
    let contrast = ContrastMatrix::new(default_levels(k), m, vec!["c1".into()])?;
    Ok(PredictedMeansContrast { contrast, scale })
}

/// Greatest common real divisor of the nonzero centered values, such that
/// every value is an integer multiple of it within 1e-9 of its magnitude.
fn common_scale(centered: &[f64]) -> Option<f64> {
    let tol = 1e-9 * centered.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    let mut g = 0.0f64;
    for &c in centered {
        let c = c.abs();
        if c <= tol {
            continue;
        }
        g = if g == 0.0 { c } else { real_gcd(g, c, tol) };
    }
    if g <= tol {
        return None;
    }
    for &c in centered {
        let q = c / g;
        if (q - q.round()).abs() > 1e-9 * q.abs().max(1.0) || q.abs().round() > 1e6 {
            return None;
        }
    }
    Some(g)
}

fn real_gcd(a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a.max(b), a.min(b));
    while b > tol {
        let q = (a / b).round();
        let r = (a - q * b).abs();
        a = b;
        b = r;
    }
    a
}

/// One weight row per hypothesis over the k condition means. When an
/// intercept row is included it comes first and its weights sum to 1.
#[derive(Debug, Clone)]
pub struct HypothesisMatrix {
    pub levels: Vec<String>,
    pub rows: DenseMatrix,
    pub includes_intercept: bool,
    pub row_names: Vec<String>,
}

impl HypothesisMatrix {
    pub fn new(
        levels: Vec<String>,
        rows: DenseMatrix,
        includes_intercept: bool,
        row_names: Vec<String>,
    ) -> Result<Self> {
        if rows.n_cols() != levels.len() {
            return Err(Error::DimensionMismatch(format!(
                "hypothesis rows have {} weights for {} levels",
                rows.n_cols(),
                levels.len()
            )));
        }
        if row_names.len() != rows.n_rows() {
            return Err(Error::LabelMismatch(format!(
                "{} row names for {} hypothesis rows",
                row_names.len(),
                rows.n_rows()
            )));
        }
        if includes_intercept {
            let s: f64 = rows.row(0).iter().sum();
            if (s - 1.0).abs() > CENTER_TOL {
                return Err(Error::InterceptWeights(s));
            }
        }
        let rows = rows.with_labels(Some(row_names.clone()), Some(levels.clone()))?;
        Ok(HypothesisMatrix {
            levels,
            rows,
            includes_intercept,
            row_names,
        })
    }

    /// Interpret a labeled matrix as hypothesis rows. A unique row whose
    /// weights sum to 1 is taken as the intercept and moved to the front;
    /// every other row must be centered.
    pub fn from_matrix_rows(m: &DenseMatrix) -> Result<Self> {
        let levels = m
            .col_labels
            .clone()
            .unwrap_or_else(|| (1..=m.n_cols()).map(|j| j.to_string()).collect());
        let names = m
            .row_labels
            .clone()
            .unwrap_or_else(|| (1..=m.n_rows()).map(|i| format!("h{}", i)).collect());
        let mut intercept_idx = None;
        for i in 0..m.n_rows() {
            let s: f64 = m.row(i).iter().sum();
            if (s - 1.0).abs() <= CENTER_TOL {
                if intercept_idx.is_some() {
                    return Err(Error::InvalidArgument(
                        "more than one hypothesis row sums to 1; only one intercept row is allowed"
                            .into(),
                    ));
                }
                intercept_idx = Some(i);
            } else if s.abs() > CENTER_TOL {
                return Err(Error::NotCentered(format!(
                    "hypothesis row '{}' sums to {}; rows must be centered (sum 0) or be the intercept row (sum 1)",
                    names[i], s
                )));
            }
        }
        let mut order: Vec<usize> = (0..m.n_rows()).collect();
        if let Some(idx) = intercept_idx {
            order.retain(|&i| i != idx);
            order.insert(0, idx);
        }
        let rows = DenseMatrix::from_rows(&order.iter().map(|&i| m.row(i)).collect::<Vec<_>>())?;
        let row_names = order.iter().map(|&i| names[i].clone()).collect();
        HypothesisMatrix::new(levels, rows, intercept_idx.is_some(), row_names)
    }

    pub fn n_hypotheses(&self) -> usize {
        self.rows.n_rows()
    }
}

/// Convert hypothesis rows to the contrast matrix via the generalized
/// inverse. With an intercept row the resulting all-ones column is verified
/// and dropped; without one, every row must already be centered.
pub fn hypothesis_to_contrast(h: &HypothesisMatrix) -> Result<ContrastMatrix> {
    let r = h.rows.n_rows();
    if h.rows.rank_default() < r {
        return Err(Error::RankDeficient(
            "hypothesis rows are linearly dependent; each row must encode an independent hypothesis"
                .into(),
        ));
    }
    if !h.includes_intercept {
        for i in 0..r {
            let s: f64 = h.rows.row(i).iter().sum();
            if s.abs() > CENTER_TOL {
                return Err(Error::NotCentered(format!(
                    "hypothesis row '{}' sums to {}; add an intercept row (weights summing to 1) to convert non-centered hypotheses",
                    h.row_names[i], s
                )));
            }
        }
    }
    let x = h.rows.ginv();
    if h.includes_intercept {
        for i in 0..x.n_rows() {
            if (x.get(i, 0) - 1.0).abs() > CENTER_TOL {
                return Err(Error::InterceptWeights(h.rows.row(0).iter().sum()));
            }
        }
        let mut cols = Vec::with_capacity(x.n_cols() - 1);
        for j in 1..x.n_cols() {
            cols.push(x.col(j));
        }
        let k = x.n_rows();
        let mut m = DenseMatrix::zeros(k, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        ContrastMatrix::new(h.levels.clone(), m, h.row_names[1..].to_vec())
    } else {
        ContrastMatrix::new(h.levels.clone(), x, h.row_names.clone())
    }
}

/// Invert a contrast matrix back to its hypothesis matrix; `with_intercept`
/// prepends the all-ones column before inverting.
pub fn contrast_to_hypothesis(
    c: &ContrastMatrix,
    with_intercept: bool,
) -> Result<HypothesisMatrix> {
    if with_intercept {
        let x = intercept_column(c.k()).hcat(&c.matrix)?;
        let h = x.ginv();
        let mut names = vec!["intercept".to_string()];
        names.extend(c.column_names.iter().cloned());
        HypothesisMatrix::new(c.levels.clone(), h, true, names)
    } else {
        let h = c.matrix.ginv();
        HypothesisMatrix::new(c.levels.clone(), h, false, c.column_names.clone())
    }
}

/// Centering, orthogonality, and collinearity report for a contrast matrix.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub column_names: Vec<String>,
    pub column_sums: Vec<f64>,
    pub centered: Vec<bool>,
    pub dot_products: DenseMatrix,
    pub correlations: DenseMatrix,
    pub rank_with_intercept: usize,
    pub full_rank: bool,
}

pub fn diagnostics(c: &ContrastMatrix) -> Diagnostics {
    let k = c.k();
    let m = c.m();
    let column_sums: Vec<f64> = (0..m).map(|j| c.matrix.col(j).iter().sum()).collect();
    let centered = column_sums.iter().map(|s| s.abs() < CENTER_TOL).collect();
    let mut dots = DenseMatrix::zeros(m, m);
    let mut cors = DenseMatrix::zeros(m, m);
    let means: Vec<f64> = column_sums.iter().map(|s| s / k as f64).collect();
    for a in 0..m {
        for b in 0..m {
            let ca = c.matrix.col(a);
            let cb = c.matrix.col(b);
            let dot: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
            dots.set(a, b, dot);
            let cov: f64 = ca
                .iter()
                .zip(&cb)
                .map(|(x, y)| (x - means[a]) * (y - means[b]))
                .sum();
            let va: f64 = ca.iter().map(|x| (x - means[a]).powi(2)).sum();
            let vb: f64 = cb.iter().map(|y| (y - means[b]).powi(2)).sum();
            let cor = if va > 0.0 && vb > 0.0 {
                cov / (va * vb).sqrt()
            } else {
                f64::NAN
            };
            cors.set(a, b, cor);
        }
    }
    let with_intercept = intercept_column(k).hcat(&c.matrix).unwrap();
    let rank = with_intercept.rank_default();
    Diagnostics {
        column_names: c.column_names.clone(),
        column_sums,
        centered,
        dot_products: dots,
        correlations: cors,
        rank_with_intercept: rank,
        full_rank: rank == m + 1,
    }
}
