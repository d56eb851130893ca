//! Plain-text spec files: simulation designs (key/value plus inline
//! matrices) and per-factor contrast assignments.

use crate::contrast::{self, ContrastKind, HypothesisMatrix};
use crate::design::ContrastSet;
use crate::error::{Error, Result};
use crate::matrix::{parse_value, DenseMatrix};
use crate::sim::{CorrelationSpec, DesignSpec, SdSpec};

fn parse_err(line_no: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position: line_no,
        message: message.into(),
    }
}

/// Parse a simulation spec, e.g.:
///
/// ```text
/// between = 2, 2
/// n = 5
/// sd = 10
/// means:
/// 10 20
/// 10 40
/// ```
///
/// Keys: `between`, `within` (comma-separated level counts), `n`, `seed`,
/// `sd` (scalar or `sd:` block), `correlation` (scalar or one or more
/// `correlation:` blocks, one per between cell), `means:` block (rows =
/// between cells, columns = within cells). Matrix blocks are unlabeled rows
/// of numbers and end at the next key or blank line.
pub fn parse_design_spec(text: &str, default_seed: u64) -> Result<DesignSpec> {
    let lines: Vec<&str> = text.lines().collect();
    let mut between = Vec::new();
    let mut within = Vec::new();
    let mut n_per_cell = None;
    let mut seed = default_seed;
    let mut sd: Option<SdSpec> = None;
    let mut means: Option<DenseMatrix> = None;
    let mut corr_scalar: Option<f64> = None;
    let mut corr_blocks: Vec<DenseMatrix> = Vec::new();

    let mut i = 0;
    while i < lines.len() {
        let raw = lines[i];
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        if let Some(key) = line.strip_suffix(':') {
            let (block, next) = read_block(&lines, i + 1)?;
            match key.trim() {
                "means" => means = Some(block),
                "sd" => sd = Some(SdSpec::Matrix(block)),
                "correlation" => corr_blocks.push(block),
                other => {
                    return Err(parse_err(
                        i + 1,
                        format!("unknown matrix block '{}'", other),
                    ))
                }
            }
            i = next;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, format!("expected 'key = value', got '{}'", line)))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "between" => between = parse_levels(value, i + 1)?,
            "within" => within = parse_levels(value, i + 1)?,
            "n" => {
                n_per_cell = Some(value.parse::<usize>().map_err(|_| {
                    parse_err(
                        i + 1,
                        format!("n must be a positive integer, got '{}'", value),
                    )
                })?)
            }
            "seed" => {
                seed = value.parse::<u64>().map_err(|_| {
                    parse_err(
                        i + 1,
                        format!("seed must be a non-negative integer, got '{}'", value),
                    )
                })?
            }
            "sd" => sd = Some(SdSpec::Scalar(parse_value(value)?)),
            "correlation" => corr_scalar = Some(parse_value(value)?),
            other => return Err(parse_err(i + 1, format!("unknown key '{}'", other))),
        }
        i += 1;
    }

    let means = means.ok_or_else(|| parse_err(0, "spec needs a 'means:' block"))?;
    let n_per_cell = n_per_cell.ok_or_else(|| parse_err(0, "spec needs 'n = <count>'"))?;
    let sd = sd.ok_or_else(|| parse_err(0, "spec needs 'sd = <value>' or an 'sd:' block"))?;
    let correlation = match (corr_scalar, corr_blocks.is_empty()) {
        (Some(_), false) => {
            return Err(parse_err(
                0,
                "give either a scalar correlation or matrix blocks, not both",
            ))
        }
        (Some(r), true) => Some(CorrelationSpec::Scalar(r)),
        (None, false) => {
            let n_cells = between.iter().product::<usize>().max(1);
            let blocks = if corr_blocks.len() == 1 && n_cells > 1 {
                vec![corr_blocks[0].clone(); n_cells]
            } else {
                corr_blocks
            };
            Some(CorrelationSpec::PerCell(blocks))
        }
        (None, true) => None,
    };

    Ok(DesignSpec {
        between_levels: between,
        within_levels: within,
        n_per_cell,
        means,
        sd,
        correlation,
        seed,
        round_dv: false,
    })
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_levels(value: &str, line_no: usize) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("bad level count '{}'", v.trim())))
        })
        .collect()
}

/// Read an unlabeled numeric block starting at `start`; stops at a blank
/// line, a `key = value` line, or a new block header.
fn read_block(lines: &[&str], start: usize) -> Result<(DenseMatrix, usize)> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut i = start;
    while i < lines.len() {
        let line = strip_comment(lines[i]).trim().to_string();
        if line.is_empty() || line.contains('=') || line.ends_with(':') {
            break;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        let row: Vec<f64> = fields
            .iter()
            .map(|f| parse_value(f))
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(i + 1, "ragged matrix block"));
            }
        }
        rows.push(row);
        i += 1;
    }
    if rows.is_empty() {
        return Err(parse_err(start, "empty matrix block"));
    }
    Ok((DenseMatrix::from_rows(&rows)?, i))
}

/// Parse a contrast assignment file: one section per factor, e.g.
///
/// ```text
/// factor F
/// use repeated
///
/// factor G
/// use custom
///     c1
/// a   -3
/// b   -3
/// c   1
/// d   5
/// ```
///
/// Builders: treatment, sum, scaled_sum, repeated, polynomial, helmert,
/// custom, hypothesis. `custom` takes a labeled matrix (rows = levels) in
/// the matrix text format; `hypothesis` takes labeled hypothesis rows
/// (columns = levels) which are converted through the generalized inverse.
pub fn parse_contrast_spec(text: &str) -> Result<ContrastSet> {
    let lines: Vec<&str> = text.lines().collect();
    let mut set = ContrastSet::new();
    let mut i = 0;
    while i < lines.len() {
        let line = strip_comment(lines[i]).trim().to_string();
        if line.is_empty() {
            i += 1;
            continue;
        }
        let factor = line
            .strip_prefix("factor ")
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .ok_or_else(|| parse_err(i + 1, format!("expected 'factor <name>', got '{}'", line)))?
            .to_string();
        i += 1;
        // find the builder line
        while i < lines.len() && strip_comment(lines[i]).trim().is_empty() {
            i += 1;
        }
        let builder_line = lines
            .get(i)
            .map(|l| strip_comment(l).trim().to_string())
            .filter(|l| l.starts_with("use "))
            .ok_or_else(|| {
                parse_err(
                    i + 1,
                    format!("factor '{}' needs a 'use <builder>' line", factor),
                )
            })?;
        let builder = builder_line.trim_start_matches("use ").trim().to_string();
        i += 1;
        match builder.as_str() {
            "custom" | "hypothesis" => {
                let start = i;
                let mut end = i;
                while end < lines.len() {
                    let l = strip_comment(lines[end]).trim().to_string();
                    if l.is_empty() || l.starts_with("factor ") {
                        break;
                    }
                    end += 1;
                }
                let block: String = lines[start..end].join("\n");
                let m = DenseMatrix::from_text(&block)?;
                if builder == "custom" {
                    set.assign_matrix(&factor, contrast::custom(m.clone(), m.row_labels.clone().unwrap(), false)?);
                } else {
                    let h = HypothesisMatrix::from_matrix_rows(&m)?;
                    set.assign_matrix(&factor, contrast::hypothesis_to_contrast(&h)?);
                }
                i = end;
            }
            name => match ContrastKind::parse(name) {
                Some(kind) => set.assign_kind(&factor, kind),
                None => {
                    return Err(parse_err(
                        i,
                        format!(
                            "unknown builder '{}' (expected treatment|sum|scaled_sum|repeated|polynomial|helmert|custom|hypothesis)",
                            name
                        ),
                    ))
                }
            },
        }
    }
    Ok(set)
}
