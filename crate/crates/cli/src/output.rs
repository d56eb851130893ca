//! Text tables, display rounding, and JSON assembly for CLI output.
//!
//! Display rounding follows the reference tables (estimates trimmed to four
//! decimals, t to two, p to four); JSON always carries full precision.

use contrastlab::fit::{AnovaRow, AnovaTable, FitResult};
use contrastlab::matrix::{format_value, DenseMatrix};
use serde_json::{json, Value};

/// Estimate-style number: up to four decimals, trailing zeros trimmed.
pub fn fmt_est(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x != 0.0 && (x.abs() >= 1e6 || x.abs() < 1e-4) {
        return format!("{:.4e}", x);
    }
    let s = format!("{:.4}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn fmt_t(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{:.2}", x)
    }
}

pub fn fmt_p(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{:.4}", x)
    }
}

/// Right-aligned table with a left-aligned label column.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let n_cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            widths[j] = widths[j].max(cell.len());
        }
    }
    let mut out = String::new();
    for (j, h) in headers.iter().enumerate() {
        if j == 0 {
            out.push_str(&format!("{:<width$}", h, width = widths[j]));
        } else {
            out.push_str(&format!("  {:>width$}", h, width = widths[j]));
        }
    }
    out.push('\n');
    for row in rows {
        for j in 0..n_cols {
            let cell = row.get(j).map(String::as_str).unwrap_or("");
            if j == 0 {
                out.push_str(&format!("{:<width$}", cell, width = widths[j]));
            } else {
                out.push_str(&format!("  {:>width$}", cell, width = widths[j]));
            }
        }
        out.push('\n');
    }
    out
}

/// Labeled matrix with fraction-formatted entries, aligned.
pub fn render_matrix(m: &DenseMatrix) -> String {
    let col_labels: Vec<String> = m
        .col_labels
        .clone()
        .unwrap_or_else(|| (1..=m.n_cols()).map(|j| format!("c{}", j)).collect());
    let row_labels: Vec<String> = m
        .row_labels
        .clone()
        .unwrap_or_else(|| (1..=m.n_rows()).map(|i| format!("r{}", i)).collect());
    let headers: Vec<&str> = std::iter::once("")
        .chain(col_labels.iter().map(String::as_str))
        .collect();
    let rows: Vec<Vec<String>> = (0..m.n_rows())
        .map(|i| {
            std::iter::once(row_labels[i].clone())
                .chain((0..m.n_cols()).map(|j| format_value(m.get(i, j))))
                .collect()
        })
        .collect();
    render_table(&headers, &rows)
}

pub fn matrix_json(m: &DenseMatrix) -> Value {
    let rows: Vec<Vec<f64>> = (0..m.n_rows()).map(|i| m.row(i)).collect();
    json!({
        "row_labels": m.row_labels,
        "col_labels": m.col_labels,
        "values": rows,
    })
}

pub fn fit_text(f: &FitResult) -> String {
    let rows: Vec<Vec<String>> = f
        .coefficients
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                fmt_est(c.estimate),
                fmt_est(c.std_error),
                format!("[{}, {}]", fmt_est(c.ci_low), fmt_est(c.ci_high)),
                fmt_t(c.t_value),
                fmt_p(c.p_value),
            ]
        })
        .collect();
    let mut out = render_table(
        &["Predictor", "Estimate", "Std.Error", "95% CI", "t", "p"],
        &rows,
    );
    out.push_str(&format!(
        "sigma {} on {} residual df, n = {}\n",
        fmt_est(f.sigma),
        f.df_resid,
        f.n
    ));
    for w in &f.warnings {
        out.push_str(&format!("warning: {}\n", w));
    }
    out
}

pub fn fit_json(f: &FitResult) -> Value {
    json!({
        "coefficients": f.coefficients.iter().map(|c| json!({
            "name": c.name,
            "estimate": c.estimate,
            "se": c.std_error,
            "t": c.t_value,
            "p": c.p_value,
            "ci": [c.ci_low, c.ci_high],
            "aliased": c.aliased,
        })).collect::<Vec<_>>(),
        "sigma": f.sigma,
        "df_resid": f.df_resid,
        "rss": f.rss,
        "n": f.n,
        "warnings": f.warnings,
    })
}

fn anova_row_cells(r: &AnovaRow) -> Vec<String> {
    vec![
        r.term.clone(),
        r.df.to_string(),
        fmt_est(r.sum_sq),
        fmt_est(r.mean_sq),
        fmt_t(r.f_value),
        fmt_p(r.p_value),
        format!("{:.3}", r.eta_sq_g),
    ]
}

pub fn anova_text(t: &AnovaTable) -> String {
    let mut rows: Vec<Vec<String>> = t.rows.iter().map(anova_row_cells).collect();
    rows.push(vec![
        "Residuals".into(),
        t.residual_df.to_string(),
        fmt_est(t.residual_sum_sq),
        fmt_est(t.residual_mean_sq),
        String::new(),
        String::new(),
        String::new(),
    ]);
    render_table(
        &["Term", "Df", "Sum Sq", "Mean Sq", "F", "p", "eta^2_G"],
        &rows,
    )
}

pub fn anova_row_json(r: &AnovaRow) -> Value {
    json!({
        "term": r.term,
        "df": r.df,
        "sum_sq": r.sum_sq,
        "mean_sq": r.mean_sq,
        "f": r.f_value,
        "p": r.p_value,
        "eta_sq_g": r.eta_sq_g,
    })
}

pub fn anova_json(t: &AnovaTable) -> Value {
    json!({
        "rows": t.rows.iter().map(anova_row_json).collect::<Vec<_>>(),
        "residual": {
            "df": t.residual_df,
            "sum_sq": t.residual_sum_sq,
            "mean_sq": t.residual_mean_sq,
        },
        "total_sum_sq": t.total_sum_sq,
    })
}
