//! Command-line surface: contrast generation, hypothesis/contrast
//! conversion, diagnostics, simulation, fitting, ANOVA, effect sizes, and
//! reproduction of the reference tables.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/validation error,
//! 3 numerical failure.

mod output;
mod repro;

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use contrastlab::contrast::{
    self, contrast_to_hypothesis, diagnostics, hypothesis_to_contrast, ContrastKind,
    HypothesisMatrix,
};
use contrastlab::design::{parse_model, ContrastSet, Dataset};
use contrastlab::effect::{alerting_for_factor, partition_interaction};
use contrastlab::fit::{anova_sequential, fit_model, FitOptions};
use contrastlab::matrix::DenseMatrix;
use contrastlab::sim::mixed_design;
use contrastlab::specfile;
use contrastlab::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(
    name = "contrastlab",
    about = "Contrast coding, generalized-inverse conversion, OLS fitting, ANOVA decomposition, and exact-moment simulation",
    version
)]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,

    /// Seed for anything that simulates data
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Level-order override, e.g. --levels F=low,medium,high (repeatable)
    #[arg(long, global = true, value_name = "FACTOR=L1,L2,...")]
    levels: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a built-in contrast matrix with diagnostics
    Gen {
        /// treatment | sum | scaled_sum | repeated | polynomial | helmert
        kind: String,
        /// Number of factor levels (>= 2)
        k: usize,
    },
    /// Convert a labeled matrix between hypothesis and contrast form
    Invert {
        /// Matrix file in the labeled text format
        #[arg(long)]
        file: PathBuf,
        /// h2c: rows are hypotheses; c2h: rows are levels, columns contrasts
        #[arg(long)]
        direction: Direction,
        /// For c2h: prepend the all-ones intercept column before inverting
        #[arg(long)]
        intercept: bool,
    },
    /// Centering / orthogonality / collinearity diagnostics for a contrast
    Check {
        /// Contrast matrix file (rows = levels)
        #[arg(long)]
        file: PathBuf,
    },
    /// Simulate a factorial dataset with exact sample moments
    Simulate {
        /// Design spec file
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV path
        #[arg(short, long)]
        out: PathBuf,
        /// Round the response to integers
        #[arg(long)]
        round_dv: bool,
    },
    /// Fit an OLS model and print the coefficient table
    Fit(ModelArgs),
    /// Sequential (Type-I) ANOVA table
    Anova(ModelArgs),
    /// Per-contrast SS and r2_alerting for one factor
    Alerting {
        data: PathBuf,
        /// Factor to decompose
        #[arg(long)]
        factor: String,
        /// Response column
        #[arg(long)]
        response: String,
        /// Contrast spec file
        #[arg(long)]
        contrasts: Option<PathBuf>,
    },
    /// Split an interaction into an a priori contrast plus residual
    Partition {
        data: PathBuf,
        #[arg(long)]
        factor_a: String,
        #[arg(long)]
        factor_b: String,
        /// Cell contrast file: rows = factor-a levels, columns = factor-b levels
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        response: String,
    },
    /// Re-run a reference table end to end and diff against expectations
    Repro {
        /// Table id or 'all'
        table: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    H2c,
    C2h,
}

#[derive(Args)]
struct ModelArgs {
    /// Data CSV (header row; text columns become factors)
    data: PathBuf,
    /// Model formula, e.g. "DV ~ 1 + A*B"
    #[arg(long)]
    model: String,
    /// Contrast spec file (defaults to treatment contrasts)
    #[arg(long)]
    contrasts: Option<PathBuf>,
    /// Keep going on rank-deficient designs (least-norm fit, aliased columns flagged)
    #[arg(long)]
    allow_deficient: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(1);
        }
    };
    match run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(exit_code(&e));
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::RankDeficient(_) | Error::NotPositiveDefinite | Error::DegenerateDraw(_) => 3,
        _ => 2,
    }
}

fn parse_level_overrides(specs: &[String]) -> Result<HashMap<String, Vec<String>>, Error> {
    let mut map = HashMap::new();
    for s in specs {
        let (factor, levels) = s.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("--levels expects FACTOR=a,b,c, got '{}'", s))
        })?;
        map.insert(
            factor.trim().to_string(),
            levels.split(',').map(|l| l.trim().to_string()).collect(),
        );
    }
    Ok(map)
}

fn load_contrasts(path: &Option<PathBuf>) -> Result<ContrastSet, Error> {
    match path {
        None => Ok(ContrastSet::new()),
        Some(p) => specfile::parse_contrast_spec(&std::fs::read_to_string(p)?),
    }
}

fn load_data(path: &std::path::Path, levels: &[String]) -> Result<Dataset, Error> {
    let overrides = parse_level_overrides(levels)?;
    Dataset::from_csv_path(path, &overrides)
}

fn diagnostics_json(d: &contrastlab::Diagnostics) -> serde_json::Value {
    json!({
        "column_names": d.column_names,
        "column_sums": d.column_sums,
        "centered": d.centered,
        "dot_products": (0..d.dot_products.n_rows()).map(|i| d.dot_products.row(i)).collect::<Vec<_>>(),
        "correlations": (0..d.correlations.n_rows()).map(|i| d.correlations.row(i)).collect::<Vec<_>>(),
        "rank_with_intercept": d.rank_with_intercept,
        "full_rank": d.full_rank,
    })
}

fn diagnostics_text(d: &contrastlab::Diagnostics) -> String {
    let mut out = String::new();
    let rows: Vec<Vec<String>> = d
        .column_names
        .iter()
        .zip(&d.column_sums)
        .zip(&d.centered)
        .map(|((name, sum), centered)| {
            vec![
                name.clone(),
                output::fmt_est(*sum),
                if *centered { "yes".into() } else { "no".into() },
            ]
        })
        .collect();
    out.push_str(&output::render_table(&["Column", "Sum", "Centered"], &rows));
    out.push_str("\nPairwise correlations:\n");
    let cor = d
        .correlations
        .clone()
        .with_labels(Some(d.column_names.clone()), Some(d.column_names.clone()))
        .unwrap_or_else(|_| d.correlations.clone());
    out.push_str(&output::render_matrix(&cor));
    out.push_str(&format!(
        "rank with intercept: {} ({})\n",
        d.rank_with_intercept,
        if d.full_rank {
            "full rank"
        } else {
            "RANK DEFICIENT"
        }
    ));
    out
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Gen { kind, k } => {
            let kind_parsed = ContrastKind::parse(kind).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown contrast kind '{}' (treatment|sum|scaled_sum|repeated|polynomial|helmert)",
                    kind
                ))
            });
            let kind_parsed = match kind_parsed {
                Ok(kp) => kp,
                Err(e) => {
                    // bad kind/k are usage errors
                    eprintln!("error: {}", e);
                    std::process::exit(1);
                }
            };
            if *k < 2 {
                eprintln!("error: k must be at least 2, got {}", k);
                std::process::exit(1);
            }
            let c = contrast::build(kind_parsed, *k)?;
            let d = diagnostics(&c);
            match cli.format {
                Format::Text => {
                    println!("{} contrast matrix for {} levels:", kind, k);
                    print!("{}", output::render_matrix(&c.matrix));
                    println!();
                    print!("{}", diagnostics_text(&d));
                }
                Format::Json => {
                    let v = json!({
                        "kind": kind,
                        "k": k,
                        "levels": c.levels,
                        "column_names": c.column_names,
                        "matrix": output::matrix_json(&c.matrix),
                        "diagnostics": diagnostics_json(&d),
                    });
                    println!("{}", serde_json::to_string_pretty(&v).unwrap());
                }
            }
            Ok(())
        }
        Command::Invert {
            file,
            direction,
            intercept,
        } => {
            let text = std::fs::read_to_string(file)?;
            let m = DenseMatrix::from_text(&text)?;
            match direction {
                Direction::H2c => {
                    let h = HypothesisMatrix::from_matrix_rows(&m)?;
                    let c = hypothesis_to_contrast(&h)?;
                    match cli.format {
                        Format::Text => {
                            println!("contrast matrix (levels as rows):");
                            print!("{}", output::render_matrix(&c.matrix));
                        }
                        Format::Json => {
                            let v = json!({
                                "direction": "h2c",
                                "levels": c.levels,
                                "column_names": c.column_names,
                                "matrix": output::matrix_json(&c.matrix),
                            });
                            println!("{}", serde_json::to_string_pretty(&v).unwrap());
                        }
                    }
                }
                Direction::C2h => {
                    let levels = m
                        .row_labels
                        .clone()
                        .unwrap_or_else(|| (1..=m.n_rows()).map(|i| i.to_string()).collect());
                    let names = m
                        .col_labels
                        .clone()
                        .unwrap_or_else(|| (1..=m.n_cols()).map(|j| format!("c{}", j)).collect());
                    let c = contrastlab::ContrastMatrix::new_allow_deficient(levels, m, names)?;
                    let h = contrast_to_hypothesis(&c, *intercept)?;
                    let centered = (0..c.m())
                        .all(|j| c.matrix.col(j).iter().sum::<f64>().abs() < contrast::CENTER_TOL);
                    match cli.format {
                        Format::Text => {
                            println!("hypothesis matrix (transposed: levels as rows, hypotheses as columns):");
                            print!("{}", output::render_matrix(&h.rows.transpose()));
                            if !*intercept && !centered {
                                println!(
                                    "warning: contrast is not centered and the intercept was \
                                     excluded; these hypothesis rows test raw condition means, \
                                     not differences (re-run with --intercept)"
                                );
                            }
                        }
                        Format::Json => {
                            let v = json!({
                                "direction": "c2h",
                                "includes_intercept": h.includes_intercept,
                                "levels": h.levels,
                                "row_names": h.row_names,
                                "rows": output::matrix_json(&h.rows),
                                "centered": centered,
                            });
                            println!("{}", serde_json::to_string_pretty(&v).unwrap());
                        }
                    }
                }
            }
            Ok(())
        }
        Command::Check { file } => {
            let text = std::fs::read_to_string(file)?;
            let m = DenseMatrix::from_text(&text)?;
            let levels = m
                .row_labels
                .clone()
                .unwrap_or_else(|| (1..=m.n_rows()).map(|i| i.to_string()).collect());
            let names = m
                .col_labels
                .clone()
                .unwrap_or_else(|| (1..=m.n_cols()).map(|j| format!("c{}", j)).collect());
            let c = contrastlab::ContrastMatrix::new_allow_deficient(levels, m, names)?;
            let d = diagnostics(&c);
            match cli.format {
                Format::Text => print!("{}", diagnostics_text(&d)),
                Format::Json => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&diagnostics_json(&d)).unwrap()
                    )
                }
            }
            Ok(())
        }
        Command::Simulate {
            spec,
            out,
            round_dv,
        } => {
            let text = std::fs::read_to_string(spec)?;
            let mut design = specfile::parse_design_spec(&text, cli.seed)?;
            design.round_dv = *round_dv;
            let data = mixed_design(&design)?;
            let file = std::fs::File::create(out)?;
            data.write_csv(file)?;
            match cli.format {
                Format::Text => println!(
                    "wrote {} rows x {} columns to {}",
                    data.n,
                    data.factors.len() + data.numeric.len(),
                    out.display()
                ),
                Format::Json => {
                    let v = json!({
                        "rows": data.n,
                        "columns": data.factors.len() + data.numeric.len(),
                        "path": out.display().to_string(),
                        "seed": design.seed,
                    });
                    println!("{}", serde_json::to_string_pretty(&v).unwrap());
                }
            }
            Ok(())
        }
        Command::Fit(args) => {
            let data = load_data(&args.data, &cli.levels)?;
            let spec = parse_model(&args.model)?;
            let contrasts = load_contrasts(&args.contrasts)?;
            let f = fit_model(
                &data,
                &spec,
                &contrasts,
                FitOptions {
                    allow_deficient: args.allow_deficient,
                    ..Default::default()
                },
            )?;
            match cli.format {
                Format::Text => print!("{}", output::fit_text(&f)),
                Format::Json => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&output::fit_json(&f)).unwrap()
                    )
                }
            }
            Ok(())
        }
        Command::Anova(args) => {
            let data = load_data(&args.data, &cli.levels)?;
            let spec = parse_model(&args.model)?;
            let contrasts = load_contrasts(&args.contrasts)?;
            let t = anova_sequential(&data, &spec, &contrasts)?;
            match cli.format {
                Format::Text => {
                    println!("Type-I (sequential) sum of squares; terms in model order");
                    print!("{}", output::anova_text(&t));
                }
                Format::Json => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&output::anova_json(&t)).unwrap()
                    )
                }
            }
            Ok(())
        }
        Command::Alerting {
            data,
            factor,
            response,
            contrasts,
        } => {
            let data = load_data(data, &cli.levels)?;
            let contrasts = load_contrasts(contrasts)?;
            let report = alerting_for_factor(&data, factor, &contrasts, response)?;
            match cli.format {
                Format::Text => {
                    let rows: Vec<Vec<String>> = report
                        .entries
                        .iter()
                        .map(|e| {
                            vec![
                                e.name.clone(),
                                output::fmt_est(e.ss_contrast),
                                format!("{:.2}", e.r2_alerting),
                            ]
                        })
                        .collect();
                    print!(
                        "{}",
                        output::render_table(&["Contrast", "SS", "r2_alerting"], &rows)
                    );
                    println!(
                        "SS_effect = {} ({}spanning set)",
                        output::fmt_est(report.ss_effect),
                        if report.spanning { "" } else { "NOT a " }
                    );
                    for w in &report.warnings {
                        println!("warning: {}", w);
                    }
                }
                Format::Json => {
                    let v = json!({
                        "entries": report.entries.iter().map(|e| json!({
                            "name": e.name,
                            "ss_contrast": e.ss_contrast,
                            "r2_alerting": e.r2_alerting,
                        })).collect::<Vec<_>>(),
                        "ss_effect": report.ss_effect,
                        "spanning": report.spanning,
                        "warnings": report.warnings,
                    });
                    println!("{}", serde_json::to_string_pretty(&v).unwrap());
                }
            }
            Ok(())
        }
        Command::Partition {
            data,
            factor_a,
            factor_b,
            matrix,
            response,
        } => {
            let data = load_data(data, &cli.levels)?;
            let text = std::fs::read_to_string(matrix)?;
            let m = DenseMatrix::from_text(&text)?;
            let p = partition_interaction(&data, factor_a, factor_b, &m, response)?;
            match cli.format {
                Format::Text => {
                    println!(
                        "sequential order: main effects, a priori contrast, contrast residual"
                    );
                    let mut rows: Vec<&contrastlab::AnovaRow> = p.main_rows.iter().collect();
                    rows.push(&p.omnibus);
                    rows.push(&p.apriori);
                    rows.push(&p.contrast_residual);
                    let cells: Vec<Vec<String>> = rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.term.clone(),
                                r.df.to_string(),
                                output::fmt_est(r.sum_sq),
                                output::fmt_t(r.f_value),
                                output::fmt_p(r.p_value),
                                format!("{:.3}", r.eta_sq_g),
                            ]
                        })
                        .collect();
                    print!(
                        "{}",
                        output::render_table(
                            &["Effect", "Df", "Sum Sq", "F", "p", "eta^2_G"],
                            &cells
                        )
                    );
                    println!(
                        "residuals: df {}, SS {}, MS {}",
                        p.residual_df,
                        output::fmt_est(p.residual_sum_sq),
                        output::fmt_est(p.residual_mean_sq)
                    );
                    println!(
                        "r2_alerting: a priori {:.2}, contrast residual {:.2}",
                        p.r2_apriori, p.r2_contrast_residual
                    );
                }
                Format::Json => {
                    let v = json!({
                        "main": p.main_rows.iter().map(output::anova_row_json).collect::<Vec<_>>(),
                        "omnibus": output::anova_row_json(&p.omnibus),
                        "apriori": output::anova_row_json(&p.apriori),
                        "contrast_residual": output::anova_row_json(&p.contrast_residual),
                        "residual": {
                            "df": p.residual_df,
                            "sum_sq": p.residual_sum_sq,
                            "mean_sq": p.residual_mean_sq,
                        },
                        "r2_alerting": {
                            "apriori": p.r2_apriori,
                            "contrast_residual": p.r2_contrast_residual,
                        },
                    });
                    println!("{}", serde_json::to_string_pretty(&v).unwrap());
                }
            }
            Ok(())
        }
        Command::Repro { table } => {
            let ids: Vec<&str> = if table == "all" {
                repro::TABLE_IDS.to_vec()
            } else {
                if !repro::TABLE_IDS.contains(&table.as_str()) {
                    eprintln!(
                        "error: unknown table id '{}'; known: {} or 'all'",
                        table,
                        repro::TABLE_IDS.join(", ")
                    );
                    std::process::exit(1);
                }
                vec![table.as_str()]
            };
            let mut all_pass = true;
            let mut reports = Vec::new();
            for id in ids {
                let report = repro::run_table(id, cli.seed)?;
                all_pass &= report.pass();
                reports.push(report);
            }
            match cli.format {
                Format::Text => {
                    for r in &reports {
                        println!(
                            "{}: {} ({})",
                            r.id,
                            if r.pass() { "PASS" } else { "FAIL" },
                            r.description
                        );
                        for c in &r.checks {
                            let mark = if c.pass() { "ok  " } else { "FAIL" };
                            println!(
                                "  {} {:<36} got {:>14} want {:>14} (tol {})",
                                mark,
                                c.name,
                                output::fmt_est(c.got),
                                output::fmt_est(c.want),
                                c.tol
                            );
                        }
                    }
                    println!("overall: {}", if all_pass { "PASS" } else { "FAIL" });
                }
                Format::Json => {
                    let v = json!({
                        "tables": reports.iter().map(|r| json!({
                            "id": r.id,
                            "description": r.description,
                            "pass": r.pass(),
                            "checks": r.checks.iter().map(|c| json!({
                                "name": c.name,
                                "got": c.got,
                                "want": c.want,
                                "tol": c.tol,
                                "pass": c.pass(),
                            })).collect::<Vec<_>>(),
                        })).collect::<Vec<_>>(),
                        "pass": all_pass,
                    });
                    println!("{}", serde_json::to_string_pretty(&v).unwrap());
                }
            }
            if !all_pass {
                std::process::exit(3);
            }
            Ok(())
        }
    }
}
