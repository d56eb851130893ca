//! Per-contrast variance decomposition (SS_contrast, r2_alerting) and
//! a priori interaction-contrast partitioning.

use crate::contrast::CENTER_TOL;
use crate::design::{ContrastSet, Dataset, Term};
use crate::dist;
use crate::error::{Error, Result};
use crate::fit::{anova_from_design, cell_means, AnovaRow, CellMeans};
use crate::matrix::DenseMatrix;

/// Variance attributed to one centered contrast over cell means:
/// (sum_j c_j mu_j)^2 / (sum_j c_j^2 / n_j).
pub fn ss_contrast(c: &[f64], means: &CellMeans) -> Result<f64> {
    if c.len() != means.cells.len() {
        return Err(Error::DimensionMismatch(format!(
            "contrast has {} coefficients, design has {} cells",
            c.len(),
            means.cells.len()
        )));
    }
    let sum: f64 = c.iter().sum();
    if sum.abs() > CENTER_TOL {
        return Err(Error::NotCentered(format!(
            "contrast coefficients sum to {}",
            sum
        )));
    }
    let denom: f64 = c
        .iter()
        .zip(&means.cells)
        .map(|(cj, cell)| cj * cj / cell.n as f64)
        .sum();
    if denom == 0.0 {
        return Err(Error::ZeroContrast(
            "all contrast coefficients are zero".into(),
        ));
    }
    let num: f64 = c
        .iter()
        .zip(&means.cells)
        .map(|(cj, cell)| cj * cell.mean)
        .sum();
    Ok(num * num / denom)
}

#[derive(Debug, Clone)]
pub struct AlertingEntry {
    pub name: String,
    pub ss_contrast: f64,
    pub r2_alerting: f64,
}

#[derive(Debug, Clone)]
pub struct AlertingReport {
    pub entries: Vec<AlertingEntry>,
    pub ss_effect: f64,
    /// Whether the contrasts' SS sum recovers the omnibus effect SS.
    pub spanning: bool,
    pub warnings: Vec<String>,
}

/// r2_alerting = SS_contrast / SS_effect for each named contrast.
pub fn r2_alerting(contrast_ss: &[(String, f64)], ss_effect: f64) -> Result<AlertingReport> {
    if ss_effect <= 0.0 || ss_effect.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "effect sum of squares must be positive, got {}",
            ss_effect
        )));
    }
    let entries: Vec<AlertingEntry> = contrast_ss
        .iter()
        .map(|(name, ss)| AlertingEntry {
            name: name.clone(),
            ss_contrast: *ss,
            r2_alerting: ss / ss_effect,
        })
        .collect();
    let sum: f64 = contrast_ss.iter().map(|(_, ss)| ss).sum();
    let spanning = (sum - ss_effect).abs() <= 1e-8 * ss_effect.max(1.0);
    Ok(AlertingReport {
        entries,
        ss_effect,
        spanning,
        warnings: Vec::new(),
    })
}

/// Per-contrast decomposition of one factor's effect: SS of each assigned
/// contrast column via the cell-means formula against the factor's omnibus
/// sequential SS. Warns when the columns are not orthogonal in the data, in
/// which case the footnote formula no longer matches sequential SS.
pub fn alerting_for_factor(
    data: &Dataset,
    factor_name: &str,
    contrasts: &ContrastSet,
    response: &str,
) -> Result<AlertingReport> {
    let factor = data
        .factor(factor_name)
        .ok_or_else(|| Error::UnknownVariable(factor_name.to_string()))?;
    let c = contrasts.resolve(factor)?;
    let means = cell_means(data, &[factor_name], response)?;

    let mut named = Vec::with_capacity(c.m());
    for j in 0..c.m() {
        let col = c.matrix.col(j);
        let ss = ss_contrast(&col, &means)?;
        named.push((format!("{}{}", factor_name, c.column_names[j]), ss));
    }

    // omnibus SS for the factor from the one-term sequential model
    let spec = crate::design::ModelSpec {
        response: response.to_string(),
        intercept: true,
        terms: vec![Term::Main(factor_name.to_string())],
    };
    let table = crate::fit::anova_sequential(data, &spec, contrasts)?;
    let ss_effect = table.rows[0].sum_sq;

    let mut report = r2_alerting(&named, ss_effect)?;
    let balanced = means.cells.windows(2).all(|w| w[0].n == w[1].n);
    let orthogonal = (0..c.m()).all(|a| {
        (a + 1..c.m()).all(|b| {
            let ca = c.matrix.col(a);
            let cb = c.matrix.col(b);
            ca.iter().zip(&cb).map(|(x, y)| x * y).sum::<f64>().abs() < CENTER_TOL
        })
    });
    if !balanced || !orthogonal {
        report.warnings.push(
            "contrasts are not orthogonal in this design; per-contrast SS no longer matches sequential SS"
                .into(),
        );
    }
    Ok(report)
}

fn realign_cells(
    m: &DenseMatrix,
    row_levels: &[String],
    col_levels: &[String],
) -> Result<DenseMatrix> {
    let axis_order = |labels: &Option<Vec<String>>,
                      levels: &[String],
                      what: &str|
     -> Result<Option<Vec<usize>>> {
        match labels {
            Some(ls) if ls.iter().all(|l| levels.contains(l)) => {
                let order = levels
                    .iter()
                    .map(|lv| {
                        ls.iter().position(|l| l == lv).ok_or_else(|| {
                            Error::LabelMismatch(format!("{} label '{}' missing", what, lv))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()?;
                Ok(Some(order))
            }
            _ => Ok(None),
        }
    };
    let rows = axis_order(&m.row_labels, row_levels, "row")?;
    let cols = axis_order(&m.col_labels, col_levels, "column")?;
    if rows.is_none() && cols.is_none() {
        return Ok(m.clone());
    }
    let rows = rows.unwrap_or_else(|| (0..m.n_rows()).collect());
    let cols = cols.unwrap_or_else(|| (0..m.n_cols()).collect());
    let mut out = DenseMatrix::zeros(m.n_rows(), m.n_cols());
    for (i, &ri) in rows.iter().enumerate() {
        for (j, &cj) in cols.iter().enumerate() {
            out.set(i, j, m.get(ri, cj));
        }
    }
    Ok(out)
}

/// A priori interaction contrast split: omnibus interaction SS decomposed
/// into the 1-df contrast plus its residual.
#[derive(Debug, Clone)]
pub struct InteractionPartition {
    pub main_rows: Vec<AnovaRow>,
    pub omnibus: AnovaRow,
    pub apriori: AnovaRow,
    pub contrast_residual: AnovaRow,
    pub residual_df: usize,
    pub residual_sum_sq: f64,
    pub residual_mean_sq: f64,
    pub r2_apriori: f64,
    pub r2_contrast_residual: f64,
}

/// Fit order: main effects of `a` and `b`, then the flattened a priori cell
/// contrast, then a basis for the remaining interaction space. The a priori
/// matrix must have every row and column sum equal to zero, otherwise it is
/// contaminated by main effects.
pub fn partition_interaction(
    data: &Dataset,
    factor_a: &str,
    factor_b: &str,
    apriori: &DenseMatrix,
    response: &str,
) -> Result<InteractionPartition> {
    let fa = data
        .factor(factor_a)
        .ok_or_else(|| Error::UnknownVariable(factor_a.to_string()))?;
    let fb = data
        .factor(factor_b)
        .ok_or_else(|| Error::UnknownVariable(factor_b.to_string()))?;
    let (ka, kb) = (fa.k(), fb.k());
    if apriori.n_rows() != ka || apriori.n_cols() != kb {
        return Err(Error::DimensionMismatch(format!(
            "a priori contrast is {}x{}, design cells are {}x{}",
            apriori.n_rows(),
            apriori.n_cols(),
            ka,
            kb
        )));
    }
    // labeled matrices are realigned to the factors' level order; unlabeled
    // (or generically labeled) ones are taken positionally
    let apriori = realign_cells(apriori, &fa.levels, &fb.levels)?;
    let apriori = &apriori;
    let scale = apriori.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale < CENTER_TOL {
        return Err(Error::ZeroContrast(
            "a priori interaction contrast is all zeros".into(),
        ));
    }
    for i in 0..ka {
        let s: f64 = apriori.row(i).iter().sum();
        if s.abs() > CENTER_TOL * scale.max(1.0) {
            return Err(Error::NotCentered(format!(
                "row '{}' of the a priori contrast sums to {}; row sums must be zero or the contrast captures main effects",
                fa.levels[i], s
            )));
        }
    }
    for j in 0..kb {
        let s: f64 = apriori.col(j).iter().sum();
        if s.abs() > CENTER_TOL * scale.max(1.0) {
            return Err(Error::NotCentered(format!(
                "column '{}' of the a priori contrast sums to {}; column sums must be zero or the contrast captures main effects",
                fb.levels[j], s
            )));
        }
    }

    // cell-level contrast vector, cells ordered a-level slowest
    let apriori_cells: Vec<f64> = (0..ka)
        .flat_map(|i| (0..kb).map(move |j| (i, j)))
        .map(|(i, j)| apriori.get(i, j))
        .collect();

    // interaction space basis at cell level: products of sum contrasts
    let sum_a = crate::contrast::sum_contrast(ka)?;
    let sum_b = crate::contrast::sum_contrast(kb)?;
    let mut products: Vec<Vec<f64>> = Vec::new();
    for jb in 0..kb - 1 {
        for ja in 0..ka - 1 {
            let col: Vec<f64> = (0..ka * kb)
                .map(|cell| {
                    let (i, j) = (cell / kb, cell % kb);
                    sum_a.matrix.get(i, ja) * sum_b.matrix.get(j, jb)
                })
                .collect();
            products.push(col);
        }
    }
    let df_interaction = (ka - 1) * (kb - 1);

    // residual basis: orthogonal complement of the a priori vector within the
    // interaction space (Gram-Schmidt; the split is basis invariant)
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let norm_ap = apriori_cells.iter().map(|v| v * v).sum::<f64>().sqrt();
    basis.push(apriori_cells.iter().map(|v| v / norm_ap).collect());
    let mut residual_cells: Vec<Vec<f64>> = Vec::new();
    for col in &products {
        let mut v = col.clone();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            let unit: Vec<f64> = v.iter().map(|x| x / norm).collect();
            basis.push(unit.clone());
            residual_cells.push(unit);
        }
    }
    if residual_cells.len() != df_interaction - 1 {
        return Err(Error::RankDeficient(format!(
            "interaction residual space has dimension {}, expected {}",
            residual_cells.len(),
            df_interaction - 1
        )));
    }

    // assemble per-observation design: intercept | A | B | apriori | residual
    let n = data.n;
    let y = data.response(response)?;
    let cell_of = |i: usize| fa.codes[i] * kb + fb.codes[i];
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    columns.push(("(Intercept)".into(), vec![1.0; n]));
    let mut spans: Vec<(Term, std::ops::Range<usize>)> = Vec::new();

    let push_block = |name: Term,
                      cols: Vec<(String, Vec<f64>)>,
                      columns: &mut Vec<(String, Vec<f64>)>,
                      spans: &mut Vec<(Term, std::ops::Range<usize>)>| {
        let start = columns.len();
        columns.extend(cols);
        spans.push((name, start..columns.len()));
    };

    let a_cols: Vec<(String, Vec<f64>)> = (0..ka - 1)
        .map(|j| {
            (
                format!("{}{}", factor_a, j + 1),
                (0..n).map(|i| sum_a.matrix.get(fa.codes[i], j)).collect(),
            )
        })
        .collect();
    push_block(
        Term::Main(factor_a.into()),
        a_cols,
        &mut columns,
        &mut spans,
    );
    let b_cols: Vec<(String, Vec<f64>)> = (0..kb - 1)
        .map(|j| {
            (
                format!("{}{}", factor_b, j + 1),
                (0..n).map(|i| sum_b.matrix.get(fb.codes[i], j)).collect(),
            )
        })
        .collect();
    push_block(
        Term::Main(factor_b.into()),
        b_cols,
        &mut columns,
        &mut spans,
    );
    push_block(
        Term::Main("apriori".into()),
        vec![(
            "apriori".into(),
            (0..n).map(|i| apriori_cells[cell_of(i)]).collect(),
        )],
        &mut columns,
        &mut spans,
    );
    let resid_cols: Vec<(String, Vec<f64>)> = residual_cells
        .iter()
        .enumerate()
        .map(|(idx, cells)| {
            (
                format!("int_resid{}", idx + 1),
                (0..n).map(|i| cells[cell_of(i)]).collect(),
            )
        })
        .collect();
    push_block(
        Term::Main("contrast_residual".into()),
        resid_cols,
        &mut columns,
        &mut spans,
    );

    let mut x = DenseMatrix::zeros(n, columns.len());
    for (j, (_, col)) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            x.set(i, j, v);
        }
    }
    let names: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
    let x = x.with_labels(None, Some(names))?;
    if x.rank_default() < x.n_cols() {
        return Err(Error::RankDeficient(
            "a priori contrast is collinear with the main effects".into(),
        ));
    }

    let table = anova_from_design(&x, &spans, true, y)?;
    let main_rows = vec![
        AnovaRow {
            term: factor_a.to_string(),
            ..table.rows[0].clone()
        },
        AnovaRow {
            term: factor_b.to_string(),
            ..table.rows[1].clone()
        },
    ];
    let apriori_row = AnovaRow {
        term: "apriori".into(),
        ..table.rows[2].clone()
    };
    let residual_row = AnovaRow {
        term: "contrast residual".into(),
        ..table.rows[3].clone()
    };

    let ss_int = apriori_row.sum_sq + residual_row.sum_sq;
    let ms_int = ss_int / df_interaction as f64;
    let f_int = ms_int / table.residual_mean_sq;
    let omnibus = AnovaRow {
        term: format!("{}:{}", factor_a, factor_b),
        df: df_interaction,
        sum_sq: ss_int,
        mean_sq: ms_int,
        f_value: f_int,
        p_value: dist::f_upper_p(f_int, df_interaction as f64, table.residual_df as f64)?,
        eta_sq_g: ss_int / (ss_int + table.residual_sum_sq),
    };

    Ok(InteractionPartition {
        main_rows,
        r2_apriori: apriori_row.sum_sq / ss_int,
        r2_contrast_residual: residual_row.sum_sq / ss_int,
        apriori: apriori_row,
        contrast_residual: residual_row,
        omnibus,
        residual_df: table.residual_df,
        residual_sum_sq: table.residual_sum_sq,
        residual_mean_sq: table.residual_mean_sq,
    })
}
