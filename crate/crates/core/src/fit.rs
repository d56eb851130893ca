//! Ordinary least squares through the generalized inverse, coefficient
//! statistics, cell means, and Type-I (sequential) ANOVA tables.

use std::ops::Range;

use crate::contrast::HypothesisMatrix;
use crate::design::{expand_design, ContrastSet, Dataset, ModelSpec, Term};
use crate::dist;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub aliased: bool,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Vec<Coefficient>,
    /// Residual standard deviation sqrt(rss / df_resid).
    pub sigma: f64,
    pub df_resid: usize,
    pub rss: f64,
    pub n: usize,
    pub fitted: Vec<f64>,
    pub column_map: Vec<(String, Range<usize>)>,
    /// Reported when above 1e8.
    pub condition_number: Option<f64>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub allow_deficient: bool,
    pub ci_level: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            allow_deficient: false,
            ci_level: 0.95,
        }
    }
}

/// OLS fit: beta = ginv(x) y, with standard errors from sigma^2 (X'X)^-1,
/// two-sided t tests and confidence intervals on the residual df.
pub fn fit(x: &DenseMatrix, y: &[f64]) -> Result<FitResult> {
    fit_with(x, y, FitOptions::default())
}

pub fn fit_with(x: &DenseMatrix, y: &[f64], opts: FitOptions) -> Result<FitResult> {
    let n = x.n_rows();
    let p = x.n_cols();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows, response has {}",
            n,
            y.len()
        )));
    }
    if n < p + 1 {
        return Err(Error::TooFewObservations { n, required: p + 1 });
    }

    let names: Vec<String> = x
        .col_labels
        .clone()
        .unwrap_or_else(|| (1..=p).map(|j| format!("x{}", j)).collect());

    let rank = x.rank_default();
    let aliased = aliased_columns(x);
    if rank < p && !opts.allow_deficient {
        let named: Vec<&str> = aliased
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(j, _)| names[j].as_str())
            .collect();
        return Err(Error::RankDeficient(format!(
            "design matrix has rank {} with {} columns; aliased column(s): {}",
            rank,
            p,
            named.join(", ")
        )));
    }

    let xplus = x.ginv();
    let beta = xplus.matvec(y)?;
    let fitted = x.matvec(&beta)?;
    let rss: f64 = y
        .iter()
        .zip(&fitted)
        .map(|(yi, fi)| (yi - fi) * (yi - fi))
        .sum();
    let df_resid = n - rank;
    let sigma = (rss / df_resid as f64).sqrt();

    let mut warnings = Vec::new();
    let scale: f64 = y.iter().map(|v| v * v).sum::<f64>().max(1.0);
    let perfect = rss <= 1e-20 * scale;
    if perfect {
        warnings.push("zero residual variance: standard errors are 0 and t undefined".into());
    }
    if rank < p {
        warnings.push(format!(
            "rank deficient fit: least-norm solution, {} aliased column(s)",
            p - rank
        ));
    }

    // (X'X)^-1 from one factorization: ginv(X) ginv(X)'
    let xtx_inv = xplus.matmul(&xplus.transpose())?;
    let cond = x.condition_number();
    let condition_number = if cond > 1e8 {
        warnings.push(format!(
            "ill-conditioned design matrix: condition number {:.3e}",
            cond
        ));
        Some(cond)
    } else {
        None
    };

    let tq = dist::t_quantile(1.0 - (1.0 - opts.ci_level) / 2.0, df_resid as f64)?;
    let mut coefficients = Vec::with_capacity(p);
    for j in 0..p {
        let estimate = beta[j];
        if aliased[j] && rank < p {
            coefficients.push(Coefficient {
                name: names[j].clone(),
                estimate,
                std_error: f64::NAN,
                t_value: f64::NAN,
                p_value: f64::NAN,
                ci_low: f64::NAN,
                ci_high: f64::NAN,
                aliased: true,
            });
            continue;
        }
        let std_error = if perfect {
            0.0
        } else {
            sigma * xtx_inv.get(j, j).max(0.0).sqrt()
        };
        let (t_value, p_value, ci_low, ci_high) = if std_error > 0.0 {
            let t = estimate / std_error;
            (
                t,
                dist::t_two_sided_p(t, df_resid as f64)?,
                estimate - tq * std_error,
                estimate + tq * std_error,
            )
        } else {
            (f64::NAN, f64::NAN, estimate, estimate)
        };
        coefficients.push(Coefficient {
            name: names[j].clone(),
            estimate,
            std_error,
            t_value,
            p_value,
            ci_low,
            ci_high,
            aliased: false,
        });
    }

    Ok(FitResult {
        coefficients,
        sigma,
        df_resid,
        rss,
        n,
        fitted,
        column_map: names
            .iter()
            .cloned()
            .zip((0..p).map(|j| j..j + 1))
            .collect(),
        condition_number,
        warnings,
    })
}

/// Greedy Gram-Schmidt pivoting; a column that adds no new direction given
/// the columns before it is aliased.
fn aliased_columns(x: &DenseMatrix) -> Vec<bool> {
    let scale = x.frobenius_norm().max(1.0);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut aliased = vec![false; x.n_cols()];
    for j in 0..x.n_cols() {
        let mut v = x.col(j);
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-10 * scale {
            basis.push(v.iter().map(|a| a / norm).collect());
        } else {
            aliased[j] = true;
        }
    }
    aliased
}

/// Expand the model and fit it; the column map records which design columns
/// each term produced.
pub fn fit_model(
    data: &Dataset,
    spec: &ModelSpec,
    contrasts: &ContrastSet,
    opts: FitOptions,
) -> Result<FitResult> {
    let design = expand_design(data, spec, contrasts)?;
    let y = data.response(&spec.response)?;
    let mut result = fit_with(&design.x, y, opts)?;
    let mut map: Vec<(String, Range<usize>)> = Vec::new();
    if spec.intercept {
        map.push(("(Intercept)".into(), 0..1));
    }
    for (term, range) in &design.terms {
        map.push((term.display_name(), range.clone()));
    }
    result.column_map = map;
    Ok(result)
}

/// Per-cell summary over one or more factors; cells ordered with the first
/// factor varying slowest.
#[derive(Debug, Clone)]
pub struct CellMeans {
    pub factor_names: Vec<String>,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub labels: Vec<String>,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
    pub se: f64,
}

impl CellMeans {
    pub fn labels_joined(&self) -> Vec<String> {
        self.cells.iter().map(|c| c.labels.join(":")).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.mean).collect()
    }

    /// Unweighted mean of cell means.
    pub fn grand_mean(&self) -> f64 {
        self.means().iter().sum::<f64>() / self.cells.len() as f64
    }
}

pub fn cell_means(data: &Dataset, factor_names: &[&str], response: &str) -> Result<CellMeans> {
    let y = data.response(response)?;
    let factors: Vec<&crate::design::Factor> = factor_names
        .iter()
        .map(|name| {
            data.factor(name)
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))
        })
        .collect::<Result<_>>()?;
    let sizes: Vec<usize> = factors.iter().map(|f| f.k()).collect();
    let n_cells: usize = sizes.iter().product();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); n_cells];
    for i in 0..data.n {
        // first factor varies slowest
        let mut idx = 0;
        for (f, &k) in factors.iter().zip(&sizes) {
            idx = idx * k + f.codes[i];
        }
        groups[idx].push(y[i]);
    }
    let mut cells = Vec::with_capacity(n_cells);
    for (idx, group) in groups.iter().enumerate() {
        let mut labels = Vec::with_capacity(factors.len());
        let mut rem = idx;
        for (f, &k) in factors.iter().zip(&sizes).rev() {
            labels.push(f.levels[rem % k].clone());
            rem /= k;
        }
        labels.reverse();
        if group.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "empty cell {} in cell-means computation",
                labels.join(":")
            )));
        }
        let n = group.len();
        let mean = group.iter().sum::<f64>() / n as f64;
        let sd = if n >= 2 {
            (group.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            f64::NAN
        };
        let se = if n >= 2 {
            sd / (n as f64).sqrt()
        } else {
            f64::NAN
        };
        cells.push(Cell {
            labels,
            mean,
            sd,
            n,
            se,
        });
    }
    Ok(CellMeans {
        factor_names: factor_names.iter().map(|s| s.to_string()).collect(),
        cells,
    })
}

/// Regression coefficients straight from condition means: beta = H mu.
pub fn coefficients_from_means(
    h: &HypothesisMatrix,
    means: &CellMeans,
) -> Result<Vec<(String, f64)>> {
    let cell_labels = means.labels_joined();
    if h.levels.len() != cell_labels.len() {
        return Err(Error::LabelMismatch(format!(
            "hypothesis matrix has {} levels, cell means have {} cells",
            h.levels.len(),
            cell_labels.len()
        )));
    }
    if h.levels != cell_labels {
        return Err(Error::LabelMismatch(format!(
            "hypothesis levels {:?} do not match cells {:?}",
            h.levels, cell_labels
        )));
    }
    let beta = h.rows.matvec(&means.means())?;
    Ok(h.row_names.iter().cloned().zip(beta).collect())
}

#[derive(Debug, Clone)]
pub struct AnovaRow {
    pub term: String,
    pub df: usize,
    pub sum_sq: f64,
    pub mean_sq: f64,
    pub f_value: f64,
    pub p_value: f64,
    pub eta_sq_g: f64,
}

#[derive(Debug, Clone)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub residual_df: usize,
    pub residual_sum_sq: f64,
    pub residual_mean_sq: f64,
    /// Corrected total sum of squares (about the mean).
    pub total_sum_sq: f64,
}

/// Type-I (sequential) sum of squares: terms enter in model order,
/// each tested against the full-model residual. Generalized eta squared is
/// the between-subjects form SS / (SS + SS_resid).
pub fn anova_sequential(
    data: &Dataset,
    spec: &ModelSpec,
    contrasts: &ContrastSet,
) -> Result<AnovaTable> {
    if spec.terms.is_empty() {
        return Err(Error::InvalidArgument(
            "ANOVA needs at least one model term".into(),
        ));
    }
    let design = expand_design(data, spec, contrasts)?;
    let y = data.response(&spec.response)?;
    anova_from_design(&design.x, &design.terms, spec.intercept, y)
}

pub(crate) fn anova_from_design(
    x: &DenseMatrix,
    terms: &[(Term, Range<usize>)],
    intercept: bool,
    y: &[f64],
) -> Result<AnovaTable> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(
            "response length does not match design".into(),
        ));
    }
    let ybar = y.iter().sum::<f64>() / n as f64;
    let total_sum_sq: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();

    let base_cols = if intercept { 1 } else { 0 };
    let mut prev_rss = if intercept {
        total_sum_sq
    } else {
        y.iter().map(|v| v * v).sum()
    };
    let mut prev_rank = if intercept { 1 } else { 0 };

    struct Partial {
        term: String,
        df: usize,
        sum_sq: f64,
    }
    let mut partials = Vec::new();
    let mut full_rss = prev_rss;
    let mut full_rank = prev_rank;
    for (term, range) in terms {
        let upto = base_cols.max(range.end);
        let sub = submatrix(x, upto);
        let rank = sub.rank_default();
        if rank < sub.n_cols() {
            return Err(Error::RankDeficient(format!(
                "sequential model through term '{}' is rank deficient",
                term.display_name()
            )));
        }
        let beta = sub.ginv().matvec(y)?;
        let fitted = sub.matvec(&beta)?;
        let rss: f64 = y
            .iter()
            .zip(&fitted)
            .map(|(yi, fi)| (yi - fi) * (yi - fi))
            .sum();
        let df = rank - prev_rank;
        partials.push(Partial {
            term: term.display_name(),
            df,
            sum_sq: prev_rss - rss,
        });
        prev_rss = rss;
        prev_rank = rank;
        full_rss = rss;
        full_rank = rank;
    }

    if n <= full_rank {
        return Err(Error::TooFewObservations {
            n,
            required: full_rank + 1,
        });
    }
    let residual_df = n - full_rank;
    let residual_mean_sq = full_rss / residual_df as f64;

    let mut rows = Vec::with_capacity(partials.len());
    for p in partials {
        let mean_sq = if p.df > 0 {
            p.sum_sq / p.df as f64
        } else {
            f64::NAN
        };
        let f_value = mean_sq / residual_mean_sq;
        let p_value = if p.df > 0 {
            dist::f_upper_p(f_value, p.df as f64, residual_df as f64)?
        } else {
            f64::NAN
        };
        rows.push(AnovaRow {
            term: p.term,
            df: p.df,
            sum_sq: p.sum_sq,
            mean_sq,
            f_value,
            p_value,
            eta_sq_g: p.sum_sq / (p.sum_sq + full_rss),
        });
    }
    Ok(AnovaTable {
        rows,
        residual_df,
        residual_sum_sq: full_rss,
        residual_mean_sq,
        total_sum_sq,
    })
}

fn submatrix(x: &DenseMatrix, n_cols: usize) -> DenseMatrix {
    let mut sub = DenseMatrix::zeros(x.n_rows(), n_cols);
    for i in 0..x.n_rows() {
        for j in 0..n_cols {
            sub.set(i, j, x.get(i, j));
        }
    }
    sub
}
