//! Plain tabular output in txt, csv, json or markdown.

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Txt,
    Csv,
    Json,
    Md,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "txt" => Ok(Format::Txt),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "md" => Ok(Format::Md),
            _ => Err(Error::Parse(format!("unknown format {s:?} (txt, csv, json, md)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Txt => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Md => "md",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    /// An exact integer, kept as its decimal digits.
    Int(String),
    Float(f64),
    /// A float shown as `{:.4e}` in txt/md and at full precision otherwise.
    Sci(f64),
    Text(String),
    Bool(bool),
    Na,
}

impl Cell {
    pub fn int(v: impl fmt::Display) -> Self {
        Cell::Int(v.to_string())
    }

    fn text(&self, format: Format) -> String {
        match self {
            Cell::Int(s) | Cell::Text(s) => s.clone(),
            Cell::Float(v) => round_trip(*v),
            Cell::Sci(v) => match format {
                Format::Txt | Format::Md => format!("{v:.4e}"),
                _ => round_trip(*v),
            },
            Cell::Bool(b) => b.to_string(),
            Cell::Na => "NA".into(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(s) => s
                .parse::<u64>()
                .map(Value::from)
                .unwrap_or_else(|_| Value::String(s.clone())),
            Cell::Float(v) | Cell::Sci(v) => serde_json::Number::from_f64(*v)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(round_trip(*v))),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Na => Value::Null,
        }
    }

    fn numeric(&self) -> bool {
        matches!(self, Cell::Int(_) | Cell::Float(_) | Cell::Sci(_))
    }
}

/// Shortest decimal that reads back to the same `f64`; exponent form
/// outside `[1e-4, 1e16)`.
pub fn round_trip(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rows as objects keyed by column name.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Txt => self.render_txt(),
            Format::Csv => self.render_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json values serialize");
                s.push('\n');
                s
            }
            Format::Md => self.render_md(),
        }
    }

    fn cells(&self, format: Format) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|c| c.text(format)).collect())
            .collect()
    }

    fn render_txt(&self) -> String {
        let cells = self.cells(Format::Txt);
        let mut width: Vec<usize> = self.columns.iter().map(String::len).collect();
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        // text columns are left aligned, judged by the first row
        let left: Vec<bool> = (0..self.columns.len())
            .map(|i| self.rows.first().is_some_and(|r| !r[i].numeric()))
            .collect();
        let header: Vec<String> = self
            .columns
            .iter()
            .zip(&width)
            .zip(&left)
            .map(|((c, w), l)| if *l { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(header.join("  ").trim_end());
        out.push('\n');
        for (row, raw) in cells.iter().zip(&self.rows) {
            let line: Vec<String> = row
                .iter()
                .zip(&width)
                .zip(raw)
                .map(|((c, w), cell)| {
                    if cell.numeric() {
                        format!("{c:>w$}")
                    } else {
                        format!("{c:<w$}")
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in self.cells(Format::Csv) {
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    fn render_md(&self) -> String {
        let mut out = format!("| {} |\n", self.columns.join(" | "));
        out.push_str(&format!("|{}\n", "---|".repeat(self.columns.len())));
        for row in self.cells(Format::Md) {
            out.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        out
    }
}
