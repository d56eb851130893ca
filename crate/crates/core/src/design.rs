//! Model formula parsing, CSV ingestion, and expansion of factors plus
//! contrast assignments into the per-observation design matrix.

use std::collections::HashMap;
use std::io::Read;

use crate::contrast::{self, ContrastKind, ContrastMatrix};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// A categorical column: ordered levels plus one level index per observation.
#[derive(Debug, Clone)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
    pub codes: Vec<usize>,
}

impl Factor {
    pub fn k(&self) -> usize {
        self.levels.len()
    }
}

/// Columnar table: factors plus named numeric columns. The response is just
/// a numeric column; the model formula names it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub factors: Vec<Factor>,
    pub numeric: Vec<(String, Vec<f64>)>,
    pub n: usize,
}

impl Dataset {
    pub fn factor(&self, name: &str) -> Option<&Factor> {
        self.factors.iter().find(|f| f.name == name)
    }

    pub fn numeric_column(&self, name: &str) -> Option<&[f64]> {
        self.numeric
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn response(&self, name: &str) -> Result<&[f64]> {
        if self.factor(name).is_some() {
            return Err(Error::InvalidArgument(format!(
                "response column '{}' is a factor; it must be numeric",
                name
            )));
        }
        self.numeric_column(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Read a CSV table: header row, factor columns as text, numeric columns
    /// as numbers. A column listed in `level_overrides` becomes a factor with
    /// exactly that level order; otherwise any fully numeric column is
    /// numeric and the rest are factors with levels in first-appearance
    /// order. Missing values are rejected.
    pub fn from_csv_reader<R: Read>(
        reader: R,
        level_overrides: &HashMap<String, Vec<String>>,
    ) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut columns: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for (row_idx, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::Parse {
                    position: row_idx + 2,
                    message: format!(
                        "row {} has {} fields, header has {}",
                        row_idx + 2,
                        record.len(),
                        headers.len()
                    ),
                });
            }
            for (j, field) in record.iter().enumerate() {
                let field = field.trim();
                if field.is_empty() || field.eq_ignore_ascii_case("na") {
                    return Err(Error::MissingValue {
                        column: headers[j].clone(),
                        row: row_idx + 2,
                    });
                }
                columns[j].push(field.to_string());
            }
        }
        let n = columns.first().map(|c| c.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidArgument("dataset has no rows".into()));
        }

        let mut factors = Vec::new();
        let mut numeric = Vec::new();
        for (name, raw) in headers.into_iter().zip(columns) {
            if let Some(levels) = level_overrides.get(&name) {
                factors.push(make_factor(&name, &raw, Some(levels))?);
                continue;
            }
            let parsed: Option<Vec<f64>> = raw.iter().map(|v| v.parse::<f64>().ok()).collect();
            match parsed {
                Some(values) => numeric.push((name, values)),
                None => factors.push(make_factor(&name, &raw, None)?),
            }
        }
        Ok(Dataset {
            factors,
            numeric,
            n,
        })
    }

    pub fn from_csv_path(
        path: &std::path::Path,
        level_overrides: &HashMap<String, Vec<String>>,
    ) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, level_overrides)
    }

    /// Write the table as CSV: factor columns first, then numeric columns.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.factors.iter().map(|f| f.name.as_str()).collect();
        header.extend(self.numeric.iter().map(|(n, _)| n.as_str()));
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut row: Vec<String> = self
                .factors
                .iter()
                .map(|f| f.levels[f.codes[i]].clone())
                .collect();
            row.extend(self.numeric.iter().map(|(_, v)| format!("{}", v[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn make_factor(name: &str, raw: &[String], levels: Option<&Vec<String>>) -> Result<Factor> {
    let levels: Vec<String> = match levels {
        Some(l) => l.clone(),
        None => {
            let mut seen = Vec::new();
            for v in raw {
                if !seen.contains(v) {
                    seen.push(v.clone());
                }
            }
            seen
        }
    };
    let mut codes = Vec::with_capacity(raw.len());
    for v in raw {
        match levels.iter().position(|l| l == v) {
            Some(idx) => codes.push(idx),
            None => {
                return Err(Error::InvalidArgument(format!(
                    "value '{}' in column '{}' is not in the declared level list {:?}",
                    v, name, levels
                )))
            }
        }
    }
    Ok(Factor {
        name: name.to_string(),
        levels,
        codes,
    })
}

/// One model term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Main(String),
    Interaction(Vec<String>),
    /// Child's contrast columns nested within each level of the parent.
    Nested {
        parent: String,
        child: String,
    },
}

impl Term {
    pub fn display_name(&self) -> String {
        match self {
            Term::Main(v) => v.clone(),
            Term::Interaction(vs) => vs.join(":"),
            Term::Nested { parent, child } => format!("{}:{}", parent, child),
        }
    }

    fn key(&self) -> String {
        match self {
            Term::Main(v) => format!("m:{}", v),
            Term::Interaction(vs) => {
                let mut s = vs.clone();
                s.sort();
                format!("i:{}", s.join(","))
            }
            Term::Nested { parent, child } => format!("n:{}/{}", parent, child),
        }
    }
}

/// Parsed model: response, intercept flag, ordered terms.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub response: String,
    pub intercept: bool,
    pub terms: Vec<Term>,
}

#[derive(Debug, PartialEq)]
enum Token {
    Ident(String),
    Number(String),
    Tilde,
    Plus,
    Minus,
    Star,
    Colon,
    Slash,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let mut tokens = Vec::new();
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '~' => Token::Tilde,
            '+' => Token::Plus,
            '-' => Token::Minus,
            '*' => Token::Star,
            ':' => Token::Colon,
            '/' => Token::Slash,
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                tokens.push((start, Token::Number(bytes[start..i].iter().collect())));
                continue;
            }
            c if c.is_alphabetic() || c == '_' || c == '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_alphanumeric() || bytes[i] == '_' || bytes[i] == '.')
                {
                    i += 1;
                }
                tokens.push((start, Token::Ident(bytes[start..i].iter().collect())));
                continue;
            }
            other => {
                return Err(Error::Parse {
                    position: i,
                    message: format!("unexpected character '{}'", other),
                })
            }
        };
        tokens.push((i, tok));
        i += 1;
    }
    Ok(tokens)
}

/// Parse a model formula: `response ~ term + term + ...` where a term is
/// `1` / `0` / `-1` (intercept control), a variable, `A*B` (main effects
/// plus interaction), `A:B` (interaction only) or `B/A` (A nested within B).
pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let tokens = tokenize(text)?;
    let mut pos = 0;

    let response = match tokens.get(pos) {
        Some((_, Token::Ident(name))) => name.clone(),
        Some((p, _)) => {
            return Err(Error::Parse {
                position: *p,
                message: "expected response name".into(),
            })
        }
        None => {
            return Err(Error::Parse {
                position: 0,
                message: "empty formula".into(),
            })
        }
    };
    pos += 1;
    match tokens.get(pos) {
        Some((_, Token::Tilde)) => pos += 1,
        _ => {
            return Err(Error::Parse {
                position: tokens.get(pos).map(|(p, _)| *p).unwrap_or(text.len()),
                message: "expected '~' after response".into(),
            })
        }
    }

    let mut intercept = true;
    let mut terms: Vec<Term> = Vec::new();
    let mut keys: Vec<String> = Vec::new();
    let push = |term: Term, terms: &mut Vec<Term>, keys: &mut Vec<String>| {
        let k = term.key();
        if !keys.contains(&k) {
            keys.push(k);
            terms.push(term);
        }
    };

    loop {
        match tokens.get(pos) {
            Some((_, Token::Number(n))) if n == "1" => {
                intercept = true;
                pos += 1;
            }
            Some((_, Token::Number(n))) if n == "0" => {
                intercept = false;
                pos += 1;
            }
            Some((p, Token::Number(n))) => {
                return Err(Error::Parse {
                    position: *p,
                    message: format!("unexpected number '{}' in formula", n),
                })
            }
            Some((_, Token::Minus)) => {
                pos += 1;
                match tokens.get(pos) {
                    Some((_, Token::Number(n))) if n == "1" => {
                        intercept = false;
                        pos += 1;
                    }
                    _ => {
                        return Err(Error::Parse {
                            position: tokens.get(pos).map(|(p, _)| *p).unwrap_or(text.len()),
                            message: "'-' is only supported as '-1' (remove intercept)".into(),
                        })
                    }
                }
            }
            Some((_, Token::Ident(_))) => {
                // variable chain joined by one of * : /
                let mut vars = Vec::new();
                let mut op: Option<Token> = None;
                loop {
                    match tokens.get(pos) {
                        Some((_, Token::Ident(name))) => {
                            vars.push(name.clone());
                            pos += 1;
                        }
                        Some((p, _)) => {
                            return Err(Error::Parse {
                                position: *p,
                                message: "expected variable name".into(),
                            })
                        }
                        None => {
                            return Err(Error::Parse {
                                position: text.len(),
                                message: "expected variable name".into(),
                            })
                        }
                    }
                    match tokens.get(pos) {
                        Some((p, t @ (Token::Star | Token::Colon | Token::Slash))) => {
                            match &op {
                                Some(prev) if prev != t => {
                                    return Err(Error::Parse {
                                        position: *p,
                                        message:
                                            "mixing '*', ':' and '/' in one term is not supported"
                                                .into(),
                                    })
                                }
                                _ => {}
                            }
                            op = Some(match t {
                                Token::Star => Token::Star,
                                Token::Colon => Token::Colon,
                                _ => Token::Slash,
                            });
                            pos += 1;
                        }
                        _ => break,
                    }
                }
                match op {
                    None => push(Term::Main(vars[0].clone()), &mut terms, &mut keys),
                    Some(Token::Colon) => push(Term::Interaction(vars), &mut terms, &mut keys),
                    Some(Token::Star) => {
                        // all non-empty subsets: mains, then pairs, etc.
                        for size in 1..=vars.len() {
                            for combo in subsets(&vars, size) {
                                if size == 1 {
                                    push(Term::Main(combo[0].clone()), &mut terms, &mut keys);
                                } else {
                                    push(Term::Interaction(combo), &mut terms, &mut keys);
                                }
                            }
                        }
                    }
                    Some(Token::Slash) => {
                        if vars.len() != 2 {
                            return Err(Error::Parse {
                                position: 0,
                                message: "nesting supports exactly one parent and one child (B/A)"
                                    .into(),
                            });
                        }
                        push(Term::Main(vars[0].clone()), &mut terms, &mut keys);
                        push(
                            Term::Nested {
                                parent: vars[0].clone(),
                                child: vars[1].clone(),
                            },
                            &mut terms,
                            &mut keys,
                        );
                    }
                    _ => unreachable!(),
                }
            }
            Some((p, _)) => {
                return Err(Error::Parse {
                    position: *p,
                    message: "expected a term".into(),
                })
            }
            None => {
                return Err(Error::Parse {
                    position: text.len(),
                    message: "expected a term".into(),
                })
            }
        }
        match tokens.get(pos) {
            Some((_, Token::Plus)) => pos += 1,
            Some((p, _)) => {
                return Err(Error::Parse {
                    position: *p,
                    message: "expected '+' between terms".into(),
                })
            }
            None => break,
        }
    }

    Ok(ModelSpec {
        response,
        intercept,
        terms,
    })
}

fn subsets(vars: &[String], size: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let n = vars.len();
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.iter().map(|&i| vars[i].clone()).collect());
        // advance combination
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - size {
                idx[i] += 1;
                for j in i + 1..size {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Per-factor contrast assignment; factors without an entry default to
/// treatment contrasts.
#[derive(Debug, Clone, Default)]
pub struct ContrastSet {
    assignments: HashMap<String, ContrastChoice>,
}

#[derive(Debug, Clone)]
pub enum ContrastChoice {
    Kind(ContrastKind),
    Matrix(ContrastMatrix),
}

impl ContrastSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign_kind(&mut self, factor: &str, kind: ContrastKind) {
        self.assignments
            .insert(factor.to_string(), ContrastChoice::Kind(kind));
    }

    pub fn assign_matrix(&mut self, factor: &str, matrix: ContrastMatrix) {
        self.assignments
            .insert(factor.to_string(), ContrastChoice::Matrix(matrix));
    }

    /// Resolve the contrast for a factor, rebinding or reordering level
    /// labels as needed.
    pub fn resolve(&self, factor: &Factor) -> Result<ContrastMatrix> {
        match self.assignments.get(&factor.name) {
            None => contrast::build_for_levels(ContrastKind::Treatment, &factor.levels),
            Some(ContrastChoice::Kind(kind)) => contrast::build_for_levels(*kind, &factor.levels),
            Some(ContrastChoice::Matrix(m)) => {
                if m.k() != factor.k() {
                    return Err(Error::DimensionMismatch(format!(
                        "contrast for '{}' has {} rows, factor has {} levels",
                        factor.name,
                        m.k(),
                        factor.k()
                    )));
                }
                if m.levels == factor.levels {
                    return Ok(m.clone());
                }
                // generic numeric labels rebind positionally
                let generic: Vec<String> = (1..=m.k()).map(|i| i.to_string()).collect();
                if m.levels == generic {
                    return m.with_levels(factor.levels.clone());
                }
                // labeled rows may come in any order; realign to the factor
                let mut rows = Vec::with_capacity(m.k());
                for level in &factor.levels {
                    match m.levels.iter().position(|l| l == level) {
                        Some(i) => rows.push(m.matrix.row(i)),
                        None => {
                            return Err(Error::LabelMismatch(format!(
                                "contrast for '{}' has no row for level '{}'",
                                factor.name, level
                            )))
                        }
                    }
                }
                ContrastMatrix::new_allow_deficient(
                    factor.levels.clone(),
                    DenseMatrix::from_rows(&rows)?,
                    m.column_names.clone(),
                )
            }
        }
    }
}

/// A named design-matrix column under construction.
struct BuiltColumn {
    name: String,
    values: Vec<f64>,
}

/// The expanded design: per-observation matrix plus the column span of each
/// term.
#[derive(Debug, Clone)]
pub struct ExpandedDesign {
    pub x: DenseMatrix,
    pub terms: Vec<(Term, std::ops::Range<usize>)>,
    pub warnings: Vec<String>,
}

impl ExpandedDesign {
    pub fn column_names(&self) -> Vec<String> {
        self.x.col_labels.clone().unwrap_or_default()
    }
}

/// Expand factors plus contrast assignments into the design matrix: optional
/// intercept, then per term the contrast/covariate columns, elementwise
/// products for interactions, and parent-indicator-times-child-contrast
/// columns for nested terms. Without an intercept, the first factor term
/// expands to one indicator per level (cell-means parameterization).
pub fn expand_design(
    data: &Dataset,
    spec: &ModelSpec,
    contrasts: &ContrastSet,
) -> Result<ExpandedDesign> {
    let n = data.n;
    let mut columns: Vec<BuiltColumn> = Vec::new();
    let mut terms: Vec<(Term, std::ops::Range<usize>)> = Vec::new();
    let mut warnings = Vec::new();

    if spec.intercept {
        columns.push(BuiltColumn {
            name: "(Intercept)".into(),
            values: vec![1.0; n],
        });
    }

    let mut first_factor_main = !spec.intercept;
    for term in &spec.terms {
        let start = columns.len();
        match term {
            Term::Main(var) => {
                if let Some(f) = data.factor(var) {
                    if first_factor_main {
                        // cell-means parameterization: one indicator per level
                        for (idx, level) in f.levels.iter().enumerate() {
                            let values = f
                                .codes
                                .iter()
                                .map(|&c| if c == idx { 1.0 } else { 0.0 })
                                .collect();
                            columns.push(BuiltColumn {
                                name: format!("{}{}", f.name, level),
                                values,
                            });
                        }
                        first_factor_main = false;
                    } else {
                        columns.extend(factor_columns(f, contrasts)?);
                    }
                } else if let Some(v) = data.numeric_column(var) {
                    columns.push(BuiltColumn {
                        name: var.clone(),
                        values: v.to_vec(),
                    });
                } else {
                    return Err(Error::UnknownVariable(var.clone()));
                }
            }
            Term::Interaction(vars) => {
                let mut parts: Vec<Vec<BuiltColumn>> = Vec::new();
                for var in vars {
                    if let Some(f) = data.factor(var) {
                        parts.push(factor_columns(f, contrasts)?);
                    } else if let Some(v) = data.numeric_column(var) {
                        parts.push(vec![BuiltColumn {
                            name: var.clone(),
                            values: v.to_vec(),
                        }]);
                    } else {
                        return Err(Error::UnknownVariable(var.clone()));
                    }
                }
                columns.extend(product_columns(&parts, n));
            }
            Term::Nested { parent, child } => {
                let pf = data
                    .factor(parent)
                    .ok_or_else(|| Error::UnknownVariable(parent.clone()))?;
                let cf = data
                    .factor(child)
                    .ok_or_else(|| Error::UnknownVariable(child.clone()))?;
                let child_cols = factor_columns(cf, contrasts)?;
                // parent levels in level order, child contrast within each
                for (lvl_idx, level) in pf.levels.iter().enumerate() {
                    for cc in &child_cols {
                        let values = (0..n)
                            .map(|i| {
                                if pf.codes[i] == lvl_idx {
                                    cc.values[i]
                                } else {
                                    0.0
                                }
                            })
                            .collect();
                        columns.push(BuiltColumn {
                            name: format!("{}{}:{}", pf.name, level, cc.name),
                            values,
                        });
                    }
                }
            }
        }
        terms.push((term.clone(), start..columns.len()));
    }

    let n_cols = columns.len();
    if n_cols == 0 {
        return Err(Error::InvalidArgument("model has no columns".into()));
    }
    let mut x = DenseMatrix::zeros(n, n_cols);
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.values.iter().enumerate() {
            x.set(i, j, v);
        }
    }
    let names: Vec<String> = columns.iter().map(|c| c.name.clone()).collect();
    let x = x.with_labels(None, Some(names))?;

    if x.rank_default() < n_cols {
        warnings.push(format!(
            "design matrix is rank deficient ({} columns, rank {})",
            n_cols,
            x.rank_default()
        ));
    }

    Ok(ExpandedDesign { x, terms, warnings })
}

fn factor_columns(f: &Factor, contrasts: &ContrastSet) -> Result<Vec<BuiltColumn>> {
    let c = contrasts.resolve(f)?;
    let mut out = Vec::with_capacity(c.m());
    for j in 0..c.m() {
        let values = f.codes.iter().map(|&code| c.matrix.get(code, j)).collect();
        out.push(BuiltColumn {
            name: format!("{}{}", f.name, c.column_names[j]),
            values,
        });
    }
    Ok(out)
}

/// Elementwise products over the cartesian combination of the parts' columns,
/// first part varying fastest.
fn product_columns(parts: &[Vec<BuiltColumn>], n: usize) -> Vec<BuiltColumn> {
    let sizes: Vec<usize> = parts.iter().map(|p| p.len()).collect();
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    for combo in 0..total {
        let mut rem = combo;
        let mut values = vec![1.0; n];
        let mut names = Vec::new();
        for (part, &size) in parts.iter().zip(&sizes) {
            let j = rem % size;
            rem /= size;
            names.push(part[j].name.clone());
            for (v, pv) in values.iter_mut().zip(&part[j].values) {
                *v *= pv;
            }
        }
        out.push(BuiltColumn {
            name: names.join(":"),
            values,
        });
    }
    out
}
