//! CSV rendering of aggregated experiment results.
//!
//! Output is UTF-8 with LF line endings, a header row, '.' as the decimal
//! separator, and every numeric value printed to six significant digits.
//! Columns appear in a fixed order derived from the requested statistics so
//! identical inputs always produce identical bytes.

use mtm::diagnostics::AggregateSummary;

use crate::error::{HarnessError, Result};
use crate::experiment::{RowOutcome, StatKind};

/// A finished table: column names plus one row per experiment.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

/// A single row: its key plus one optional value per data column.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub key: String,
    pub values: Vec<Option<f64>>,
}

/// Expands the requested statistics into mean/std column names.
///
/// `dim` controls how many `lag1_corr_<c>` pairs appear and `groups` how
/// many `sel_rate_<g>` pairs.
pub fn column_names(stats: &[StatKind], dim: usize, groups: usize) -> Vec<String> {
    let mut columns = Vec::new();
    let mut push_pair = |base: String| {
        columns.push(format!("{base}_mean"));
        columns.push(format!("{base}_std"));
    };
    for stat in stats {
        match stat {
            StatKind::AcceptRate => push_pair("accept_rate".to_string()),
            StatKind::Lag1Corr => {
                for c in 1..=dim {
                    push_pair(format!("lag1_corr_{c}"));
                }
            }
            StatKind::ModeJumpRate => push_pair("mode_jump_rate".to_string()),
            StatKind::NormconstRecip => push_pair("normconst_recip".to_string()),
            StatKind::SelRate => {
                for g in 1..=groups {
                    push_pair(format!("sel_rate_{g}"));
                }
            }
        }
    }
    columns
}

fn push_stat_values(
    values: &mut Vec<Option<f64>>,
    stat: StatKind,
    aggregate: &AggregateSummary,
    dim: usize,
    groups: usize,
) {
    let mut push_pair = |pair: Option<(f64, f64)>| {
        values.push(pair.map(|p| p.0));
        values.push(pair.map(|p| p.1));
    };
    match stat {
        StatKind::AcceptRate => push_pair(Some(aggregate.acceptance_rate)),
        StatKind::Lag1Corr => {
            for c in 0..dim {
                push_pair(aggregate.lag1_corr.get(c).copied().flatten());
            }
        }
        StatKind::ModeJumpRate => push_pair(aggregate.mode_jump_rate),
        StatKind::NormconstRecip => push_pair(aggregate.normconst_recip),
        StatKind::SelRate => {
            for g in 0..groups {
                push_pair(aggregate.group_selection.get(g).copied());
            }
        }
    }
}

/// Assembles a table from per-row outcomes.
///
/// All rows must share the statistic list, coordinate dimension, and group
/// count that shape the columns; rows that track fewer groups (for example
/// a single-proposal row alongside a two-group row) leave the extra
/// selection columns empty.
pub fn build_table(
    stats: &[StatKind],
    dim: usize,
    groups: usize,
    rows: &[RowOutcome],
) -> Result<ResultTable> {
    let columns = column_names(stats, dim, groups);
    let mut table_rows = Vec::with_capacity(rows.len());
    for row in rows {
        if row.dim != dim {
            return Err(HarnessError::config(
                "all rows in a table must share the coordinate dimension",
            ));
        }
        let mut values = Vec::with_capacity(columns.len());
        for &stat in stats {
            if !row.stats.contains(&stat) {
                // The row did not request this statistic; leave it empty.
                let width = match stat {
                    StatKind::Lag1Corr => 2 * dim,
                    StatKind::SelRate => 2 * groups,
                    _ => 2,
                };
                values.extend(std::iter::repeat_n(None, width));
                continue;
            }
            push_stat_values(&mut values, stat, &row.aggregate, dim, groups);
        }
        debug_assert_eq!(values.len(), columns.len());
        table_rows.push(TableRow { key: row.key.clone(), values });
    }
    Ok(ResultTable { columns, rows: table_rows })
}

/// Formats a value to six significant digits with a fixed decimal point.
pub fn format_sig(value: f64) -> String {
    if value == 0.0 {
        return "0.000000".to_string();
    }
    if !value.is_finite() {
        return if value.is_nan() {
            "nan".to_string()
        } else if value > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let formatted = format!("{value:.decimals$}");
    // Rounding can bump the magnitude (0.9999995 -> 1.000000); reformat so
    // the digit count stays at six.
    let reparsed: f64 = formatted.parse().unwrap_or(value);
    if reparsed != 0.0 {
        let new_magnitude = reparsed.abs().log10().floor() as i32;
        if new_magnitude != magnitude {
            let decimals = (5 - new_magnitude).max(0) as usize;
            return format!("{value:.decimals$}");
        }
    }
    formatted
}

fn escape_field(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Renders the table to CSV text.
pub fn render_csv(table: &ResultTable) -> String {
    let mut out = String::new();
    out.push_str("row");
    for column in &table.columns {
        out.push(',');
        out.push_str(&escape_field(column));
    }
    out.push('\n');
    for row in &table.rows {
        out.push_str(&escape_field(&row.key));
        for value in &row.values {
            out.push(',');
            if let Some(v) = value {
                out.push_str(&format_sig(*v));
            }
        }
        out.push('\n');
    }
    out
}
