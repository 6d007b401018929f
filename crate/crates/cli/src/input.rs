//! CSV ingestion for curve tables.
//!
//! Wide form: `id, group, v1, …, vS`, one row per subject. Long form:
//! `id, group, s, value`, one row per (subject, occasion). Group labels are
//! mapped to `1..=G` in sorted order (numerically when every label is a
//! number).

use std::collections::HashMap;
use std::io::Read;

use clap::ValueEnum;
use drt_core::simgen::unit_grid;
use drt_core::CurveSet;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    /// Long form if the header is exactly id, group, s, value; wide otherwise
    Auto,
    Wide,
    Long,
}

#[derive(Debug)]
pub struct Table {
    pub curves: CurveSet,
    /// `labels[g - 1]` is the original label of group `g`.
    pub labels: Vec<String>,
    pub warnings: Vec<String>,
}

const LONG_HEADER: [&str; 4] = ["id", "group", "s", "value"];

pub fn read_table<R: Read>(reader: R, source: &str, layout: Layout) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(source, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let lower: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    let is_long = match layout {
        Layout::Long => true,
        Layout::Wide => false,
        Layout::Auto => {
            lower.len() == 4 && LONG_HEADER.iter().all(|h| lower.iter().any(|l| l == h))
        }
    };
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(CliError::Input(format!("{source}: no data rows")));
    }
    if is_long {
        read_long(&lower, &records, source)
    } else {
        read_wide(&headers, &lower, &records, source)
    }
}

fn csv_error(source: &str, e: csv::Error) -> CliError {
    CliError::Input(format!("{source}: malformed CSV: {e}"))
}

fn parse_number(field: &str, line: u64, column: &str, source: &str) -> Result<f64, CliError> {
    if field.is_empty() {
        return Err(CliError::Input(format!(
            "{source}: line {line}, column '{column}': missing value (curves must be complete)"
        )));
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Input(format!(
            "{source}: line {line}, column '{column}': expected a finite number, found '{field}'"
        ))),
    }
}

fn read_wide(
    headers: &[String],
    lower: &[String],
    records: &[(u64, csv::StringRecord)],
    source: &str,
) -> Result<Table, CliError> {
    if headers.len() < 3 || lower[0] != "id" || lower[1] != "group" {
        return Err(CliError::Input(format!(
            "{source}: wide form needs a header 'id,group,<value columns…>' with at least one value \
             column (long form is 'id,group,s,value')"
        )));
    }
    let value_cols = &headers[2..];
    let mut warnings = Vec::new();
    let grid = match numeric_grid(value_cols) {
        Some(g) => g,
        None => {
            warnings.push(format!(
                "{source}: value column headers are not increasing numbers; using an equally \
                 spaced grid on [0, 1]"
            ));
            unit_grid(value_cols.len())
        }
    };
    let mut seen = HashMap::new();
    let mut rows = Vec::with_capacity(records.len());
    let mut raw_groups = Vec::with_capacity(records.len());
    for (line, rec) in records {
        let id = &rec[0];
        if let Some(first) = seen.insert(id.to_owned(), *line) {
            return Err(CliError::Input(format!(
                "{source}: line {line}: subject id '{id}' already used on line {first}"
            )));
        }
        raw_groups.push(group_field(&rec[1], *line, source)?);
        let values = value_cols
            .iter()
            .enumerate()
            .map(|(j, col)| parse_number(&rec[j + 2], *line, col, source))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(values);
    }
    build(rows, grid, raw_groups, warnings, source)
}

fn read_long(
    lower: &[String],
    records: &[(u64, csv::StringRecord)],
    source: &str,
) -> Result<Table, CliError> {
    let col = |name: &str| {
        lower.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Input(format!(
                "{source}: long form needs columns id, group, s, value; '{name}' is missing"
            ))
        })
    };
    let (ci, cg, cs, cv) = (col("id")?, col("group")?, col("s")?, col("value")?);

    let mut subjects: Vec<(String, String)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut cells: Vec<(usize, f64, f64, u64)> = Vec::with_capacity(records.len());
    for (line, rec) in records {
        let id = &rec[ci];
        let group = group_field(&rec[cg], *line, source)?;
        let k = match index.get(id) {
            Some(&k) => {
                if subjects[k].1 != group {
                    return Err(CliError::Input(format!(
                        "{source}: line {line}: subject '{id}' is in group '{}' elsewhere but '{group}' here",
                        subjects[k].1
                    )));
                }
                k
            }
            None => {
                index.insert(id.to_owned(), subjects.len());
                subjects.push((id.to_owned(), group));
                subjects.len() - 1
            }
        };
        let s = parse_number(&rec[cs], *line, "s", source)?;
        let v = parse_number(&rec[cv], *line, "value", source)?;
        cells.push((k, s, v, *line));
    }

    let mut grid: Vec<f64> = cells.iter().map(|c| c.1).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut rows = vec![vec![f64::NAN; grid.len()]; subjects.len()];
    let mut filled = vec![vec![0u64; grid.len()]; subjects.len()];
    for &(k, s, v, line) in &cells {
        let j = grid
            .binary_search_by(|g| g.total_cmp(&s))
            .expect("grid built from cells");
        if filled[k][j] != 0 {
            return Err(CliError::Input(format!(
                "{source}: line {line}: subject '{}' already has a value at s = {s} (line {})",
                subjects[k].0, filled[k][j]
            )));
        }
        rows[k][j] = v;
        filled[k][j] = line;
    }
    for (k, row) in filled.iter().enumerate() {
        if let Some(j) = row.iter().position(|&l| l == 0) {
            let missing = row.iter().filter(|&&l| l == 0).count();
            return Err(CliError::Input(format!(
                "{source}: subject '{}' has no value at s = {} ({missing} of {} occasions missing; \
                 curves must be complete)",
                subjects[k].0,
                grid[j],
                grid.len()
            )));
        }
    }
    let raw_groups = subjects.into_iter().map(|(_, g)| g).collect();
    build(rows, grid, raw_groups, Vec::new(), source)
}

fn group_field(field: &str, line: u64, source: &str) -> Result<String, CliError> {
    if field.is_empty() {
        return Err(CliError::Input(format!(
            "{source}: line {line}, column 'group': missing group label"
        )));
    }
    Ok(field.to_owned())
}

fn numeric_grid(cols: &[String]) -> Option<Vec<f64>> {
    let grid: Vec<f64> = cols
        .iter()
        .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()?;
    grid.windows(2).all(|w| w[0] < w[1]).then_some(grid)
}

/// Sorted distinct labels: numeric order when all labels are numbers.
fn sorted_labels(raw: &[String]) -> Vec<String> {
    let mut labels: Vec<String> = raw.to_vec();
    labels.sort();
    labels.dedup();
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        let mut paired: Vec<(f64, String)> = nums.into_iter().zip(labels).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        labels = paired.into_iter().map(|(_, l)| l).collect();
    }
    labels
}

fn build(
    rows: Vec<Vec<f64>>,
    grid: Vec<f64>,
    raw_groups: Vec<String>,
    warnings: Vec<String>,
    source: &str,
) -> Result<Table, CliError> {
    let labels = sorted_labels(&raw_groups);
    if labels.len() < 2 {
        return Err(CliError::Input(format!(
            "{source}: need at least two groups, found only '{}'",
            labels[0]
        )));
    }
    let code: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i + 1))
        .collect();
    let groups = raw_groups.iter().map(|g| code[g.as_str()]).collect();
    let curves = CurveSet::from_rows(&rows, grid, groups)
        .map_err(|e| CliError::Input(format!("{source}: {e}")))?;
    Ok(Table {
        curves,
        labels,
        warnings,
    })
}
