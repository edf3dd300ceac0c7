//! Arrays as CSV: one line per row, symbols separated by commas, no header.
//!
//! Rows may differ in length and an empty line is an empty row, so every
//! line including the last ends with `\n`. No quoting is supported; symbols
//! must not contain commas, quotes or line breaks.

use rowex_core::measures::Alphabet;

use crate::error::{CliError, CliResult};

pub fn check_symbol(symbol: &str) -> CliResult<()> {
    if symbol.is_empty() || symbol.contains([',', '"', '\n', '\r']) {
        return Err(CliError::input(format!(
            "symbol {symbol:?} cannot be stored in CSV (empty, or contains a comma, quote or line break)"
        )));
    }
    Ok(())
}

pub fn write_array(alphabet: &Alphabet, rows: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for row in rows {
        let line: Vec<&str> = row.iter().map(|&s| alphabet.symbol(s)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parses CSV text into rows of symbol labels. A trailing `\r` on a line is
/// ignored.
pub fn parse_rows(text: &str) -> CliResult<Vec<Vec<String>>> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Err(CliError::input("array file is empty; an array needs at least one row"));
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() {
                return Ok(Vec::new());
            }
            line.split(',')
                .enumerate()
                .map(|(j, cell)| {
                    if cell.is_empty() {
                        Err(CliError::input(format!("row {} column {}: empty cell", i + 1, j + 1)))
                    } else {
                        Ok(cell.to_string())
                    }
                })
                .collect()
        })
        .collect()
}

/// Parses and encodes against `alphabet`; unknown symbols are reported with
/// their 1-based row and column.
pub fn read_array(alphabet: &Alphabet, text: &str) -> CliResult<Vec<Vec<usize>>> {
    parse_rows(text)?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, s)| {
                    alphabet.index_of(s).ok_or_else(|| {
                        CliError::input(format!(
                            "row {} column {}: unknown symbol {s:?}; alphabet is {:?}",
                            i + 1,
                            j + 1,
                            alphabet.symbols()
                        ))
                    })
                })
                .collect()
        })
        .collect()
}
