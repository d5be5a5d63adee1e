//! Reader for World Bank wide-format indicator CSVs.
//!
//! The files carry an optional metadata preamble, then a header row
//! `"Country Name","Country Code","Indicator Name","Indicator Code",1960,...`
//! and one row per country with one cell per year.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// Inclusive range of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub first: i32,
    pub last: i32,
}

impl YearWindow {
    pub const fn new(first: i32, last: i32) -> Self {
        YearWindow { first, last }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.first..=self.last).contains(&year)
    }

    pub fn len(&self) -> usize {
        if self.last < self.first {
            0
        } else {
            (self.last - self.first + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for YearWindow {
    /// 1960 through 2013, 54 years.
    fn default() -> Self {
        YearWindow::new(1960, 2013)
    }
}

/// One indicator's values keyed by country code, then year. `None` marks a
/// missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawIndicatorTable {
    pub indicator_code: String,
    pub window: YearWindow,
    pub rows: BTreeMap<String, BTreeMap<i32, Option<f64>>>,
    pub country_names: BTreeMap<String, String>,
}

impl RawIndicatorTable {
    pub fn value(&self, country: &str, year: i32) -> Option<f64> {
        self.rows.get(country)?.get(&year).copied().flatten()
    }

    pub fn has_country(&self, country: &str) -> bool {
        self.rows.contains_key(country)
    }
}

const HEADER_FIELDS: [&str; 4] = [
    "Country Name",
    "Country Code",
    "Indicator Name",
    "Indicator Code",
];

fn preview(text: &str) -> String {
    let mut end = text.len().min(80);
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    text[..end].to_string()
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == ".."
}

/// Parses a wide-format CSV, keeping year columns inside `window`.
///
/// Rows whose `Indicator Code` differs from `indicator_code` are skipped, so a
/// file holding several indicators can be read once per indicator.
pub fn parse_worldbank_csv(
    text: &str,
    indicator_code: &str,
    window: YearWindow,
) -> Result<RawIndicatorTable, IngestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut table = RawIndicatorTable {
        indicator_code: indicator_code.to_string(),
        window,
        rows: BTreeMap::new(),
        country_names: BTreeMap::new(),
    };
    // (column index, year) for year columns inside the window
    let mut year_columns: Vec<(usize, i32)> = Vec::new();
    let mut col_code = 0;
    let mut col_name = 0;
    let mut col_indicator = 0;

    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let Some(head) = header.as_ref() else {
            let fields: Vec<String> = record.iter().map(|f| f.trim().to_string()).collect();
            if HEADER_FIELDS.iter().all(|h| fields.iter().any(|f| f == h)) {
                let find = |name: &str| fields.iter().position(|f| f == name).unwrap();
                col_name = find("Country Name");
                col_code = find("Country Code");
                col_indicator = find("Indicator Code");
                year_columns = fields
                    .iter()
                    .enumerate()
                    .filter_map(|(i, f)| f.parse::<i32>().ok().map(|y| (i, y)))
                    .filter(|(_, y)| window.contains(*y))
                    .collect();
                header = Some(fields);
            }
            continue;
        };

        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        if field(col_indicator) != indicator_code {
            continue;
        }
        let code = field(col_code).to_string();
        let mut values = BTreeMap::new();
        for &(col, year) in &year_columns {
            let cell = field(col);
            let value = if is_missing(cell) {
                None
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    _ => {
                        return Err(IngestError::Parse {
                            row: line,
                            column: col + 1,
                            header: head[col].clone(),
                            value: cell.to_string(),
                        })
                    }
                }
            };
            values.insert(year, value);
        }
        table
            .country_names
            .insert(code.clone(), field(col_name).to_string());
        table.rows.insert(code, values);
    }

    if header.is_none() {
        return Err(IngestError::Format {
            preview: preview(text),
        });
    }
    Ok(table)
}
