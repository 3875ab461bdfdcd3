//! CSV readers and writers for designs, responses and simulation tables,
//! plus cyclic Plackett-Burman designs.

use std::fs;
use std::path::Path;

use crate::design::Design;
use crate::error::{Result, ScreeningError};

/// Parses one design cell. With `zero_one`, `0` codes the low level.
fn parse_setting(cell: &str, zero_one: bool) -> Option<i8> {
    match cell {
        "+" => return Some(1),
        "-" => return Some(-1),
        _ => {}
    }
    let v: f64 = cell.parse().ok()?;
    if v == 1.0 {
        Some(1)
    } else if v == -1.0 || (zero_one && v == 0.0) {
        Some(-1)
    } else {
        None
    }
}

fn is_numeric_token(cell: &str) -> bool {
    cell == "+" || cell == "-" || cell.parse::<f64>().is_ok()
}

fn read_records(text: &str) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ScreeningError::Parse {
            row: i + 1,
            col: 0,
            msg: e.to_string(),
        })?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

/// Parses a comma-separated design. A first row containing any non-numeric
/// token is taken as the factor names.
pub fn parse_design_csv(text: &str, zero_one: bool) -> Result<Design> {
    let mut records = read_records(text)?;
    if records.is_empty() {
        return Err(ScreeningError::InvalidDesign("empty design file".into()));
    }
    let names = if records[0].iter().any(|c| !is_numeric_token(c)) {
        Some(records.remove(0))
    } else {
        None
    };
    let width = names.as_ref().map_or(records.first().map_or(0, Vec::len), Vec::len);
    let mut rows = Vec::with_capacity(records.len());
    let offset = usize::from(names.is_some());
    for (r, rec) in records.iter().enumerate() {
        let line = r + 1 + offset;
        if rec.len() != width {
            return Err(ScreeningError::Parse {
                row: line,
                col: rec.len().min(width) + 1,
                msg: format!("ragged row: {} cells, expected {width}", rec.len()),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                parse_setting(cell, zero_one).ok_or_else(|| ScreeningError::Parse {
                    row: line,
                    col: c + 1,
                    msg: format!("cell {cell:?} is not a two-level setting"),
                })
            })
            .collect::<Result<Vec<i8>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ScreeningError::InvalidDesign("design file has no runs".into()));
    }
    Design::new(rows, names)
}

pub fn load_design_csv(path: impl AsRef<Path>, zero_one: bool) -> Result<Design> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| {
        ScreeningError::Io(format!("{}: {e}", path.as_ref().display()))
    })?;
    parse_design_csv(&text, zero_one)
}

/// Writes a design with a header row of factor names and `1`/`-1` cells.
pub fn write_design_csv(design: &Design) -> String {
    let mut out = design.names().join(",");
    out.push('\n');
    for r in 0..design.runs() {
        let cells: Vec<String> = design.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a response given as a single column or a single row of reals.
pub fn parse_response_csv(text: &str, n: usize) -> Result<Vec<f64>> {
    let records = read_records(text)?;
    let cells: Vec<(usize, usize, &str)> = if records.len() == 1 {
        records[0].iter().enumerate().map(|(c, v)| (1, c + 1, v.as_str())).collect()
    } else {
        let mut out = Vec::with_capacity(records.len());
        for (r, rec) in records.iter().enumerate() {
            if rec.len() != 1 {
                return Err(ScreeningError::Parse {
                    row: r + 1,
                    col: 2,
                    msg: "response must be a single column or a single row".into(),
                });
            }
            out.push((r + 1, 1, rec[0].as_str()));
        }
        out
    };
    let values = cells
        .into_iter()
        .map(|(row, col, cell)| match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ScreeningError::Parse {
                row,
                col,
                msg: format!("{cell:?} is not a finite number"),
            }),
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != n {
        return Err(ScreeningError::LengthMismatch {
            expected: n,
            found: values.len(),
        });
    }
    Ok(values)
}

pub fn load_response_csv(path: impl AsRef<Path>, n: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| {
        ScreeningError::Io(format!("{}: {e}", path.as_ref().display()))
    })?;
    parse_response_csv(&text, n)
}

const PB12: &str = "++-+++---+-";
const PB20: &str = "++--++++-+-+----++-";
const PB24: &str = "+++++-+-++--++--+-+----";

/// Cyclic Plackett-Burman design with `n` runs and `n - 1` columns for
/// `n` in {12, 20, 24}: rows are left shifts of a generator row, followed by
/// a row of all low levels.
pub fn plackett_burman(n: usize) -> Result<Design> {
    let generator = match n {
        12 => PB12,
        20 => PB20,
        24 => PB24,
        _ => {
            return Err(ScreeningError::InvalidConfig(format!(
                "no cyclic Plackett-Burman generator for {n} runs"
            )))
        }
    };
    let g: Vec<i8> = generator.chars().map(|c| if c == '+' { 1 } else { -1 }).collect();
    let k = g.len();
    let mut rows: Vec<Vec<i8>> = (0..k).map(|r| (0..k).map(|c| g[(c + r) % k]).collect()).collect();
    rows.push(vec![-1; k]);
    Design::new(rows, None)
}

/// The 12-run, 11-factor Plackett-Burman design.
pub fn plackett_burman_12() -> Design {
    plackett_burman(12).expect("12-run generator is built in")
}

/// First `m` columns of a Plackett-Burman design.
pub fn plackett_burman_columns(n: usize, m: usize) -> Result<Design> {
    let full = plackett_burman(n)?;
    if m < 2 || m > full.factors() {
        return Err(ScreeningError::InvalidConfig(format!(
            "a {n}-run Plackett-Burman design has {} columns, asked for {m}",
            full.factors()
        )));
    }
    let rows = (0..full.runs()).map(|r| full.row(r)[..m].to_vec()).collect();
    Design::new(rows, None)
}

/// `%g`-style formatting with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let mut s = format!("{x:.decimals$}");
        // Rounding can carry into a new digit (e.g. 9.999995 -> 10.00000).
        let digits = s.trim_start_matches('-').replace('.', "");
        let sig = digits.trim_start_matches('0').len();
        if sig > 6 && decimals > 0 {
            let d = decimals - 1;
            s = format!("{x:.d$}");
        }
        s
    } else {
        format!("{x:.5e}")
    };
    strip_zeros(&s)
}

fn strip_zeros(s: &str) -> String {
    if let Some(epos) = s.find('e') {
        let (mant, exp) = s.split_at(epos);
        return format!("{}{}", strip_zeros(mant), exp);
    }
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
