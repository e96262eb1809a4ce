//! CSV dialect: comma separated, double-quote escaping, no comments, no
//! trimming. Line numbers in errors are 1-based and count the header.

use std::collections::{BTreeSet, HashMap};

use simpson_core::detector::{Column, ColumnData, RecordTable};
use simpson_core::tables::{Counts, StratifiedComparison, Stratum};

pub const TABLE_HEADER: [&str; 4] = ["stratum", "group", "total", "positive"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CsvError {
    #[error("line 1: header must be `stratum,group,total,positive`, found `{found}`")]
    BadHeader { found: String },
    #[error("no data rows")]
    EmptyData,
    #[error("line {line}: stratum `{stratum}` already has a row for group `{group}`")]
    DuplicateCell {
        line: u64,
        stratum: String,
        group: String,
    },
    #[error("stratum `{stratum}` has no row for group `{group}`")]
    MissingCell { stratum: String, group: String },
    #[error("expected exactly two groups, found {}: {}", .found.len(), .found.join(", "))]
    NotTwoGroups { found: Vec<String> },
    #[error("group `{0}` does not occur in the input")]
    UnknownGroup(String),
    #[error("line {line}, column `{column}`: `{value}` is not a non-negative integer")]
    BadCount {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: {message}")]
    InvalidCell { line: u64, message: String },
    #[error("line {line}: outcome `{value}` is neither true nor false")]
    BadOutcomeValue { line: u64, value: String },
    #[error("line {line}, column `{column}`: `{value}` is not a finite number")]
    BadNumber {
        line: u64,
        column: String,
        value: String,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("{0}")]
    InvalidTable(String),
    #[error("{0}")]
    Malformed(String),
}

impl CsvError {
    pub fn code(&self) -> &'static str {
        match self {
            CsvError::BadHeader { .. } => "bad_header",
            CsvError::EmptyData => "empty_data",
            CsvError::DuplicateCell { .. } => "duplicate_cell",
            CsvError::MissingCell { .. } => "missing_cell",
            CsvError::NotTwoGroups { .. } => "not_two_groups",
            CsvError::UnknownGroup(_) => "unknown_group",
            CsvError::BadCount { .. } => "bad_count",
            CsvError::InvalidCell { .. } => "invalid_cell",
            CsvError::BadOutcomeValue { .. } => "bad_outcome_value",
            CsvError::BadNumber { .. } => "bad_number",
            CsvError::MissingColumn(_) => "missing_column",
            CsvError::RaggedRow { .. } => "ragged_row",
            CsvError::DuplicateColumn(_) => "duplicate_column",
            CsvError::InvalidTable(_) => "invalid_table",
            CsvError::Malformed(_) => "malformed_csv",
        }
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes())
}

fn malformed(e: csv::Error) -> CsvError {
    let line = e.position().map(|p| p.line());
    match line {
        Some(line) => CsvError::Malformed(format!("line {line}: {e}")),
        None => CsvError::Malformed(e.to_string()),
    }
}

/// Header fields and `(line, record)` pairs.
type Parsed = (Vec<String>, Vec<(u64, csv::StringRecord)>);

fn records(text: &str) -> Result<Parsed, CsvError> {
    let mut rdr = reader(text);
    let header: Vec<String> = rdr
        .headers()
        .map_err(malformed)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(malformed)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(CsvError::RaggedRow {
                line,
                expected: header.len(),
                found: rec.len(),
            });
        }
        rows.push((line, rec));
    }
    Ok((header, rows))
}

fn count(line: u64, column: &'static str, value: &str) -> Result<u64, CsvError> {
    let bad = || CsvError::BadCount {
        line,
        column,
        value: value.to_string(),
    };
    if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    value.parse().map_err(|_| bad())
}

/// Parse a stratified two-group table.
///
/// With `groups` set, rows for any other group are ignored and the pair is
/// used in the given order; otherwise the file must hold exactly two groups,
/// taken in order of first appearance.
pub fn parse_table_csv(
    text: &str,
    groups: Option<(&str, &str)>,
) -> Result<StratifiedComparison, CsvError> {
    if text.is_empty() {
        return Err(CsvError::BadHeader {
            found: String::new(),
        });
    }
    let (header, rows) = records(text)?;
    if header != TABLE_HEADER {
        return Err(CsvError::BadHeader {
            found: header.join(","),
        });
    }
    if rows.is_empty() {
        return Err(CsvError::EmptyData);
    }

    let mut seen_groups: Vec<String> = Vec::new();
    let mut strata: Vec<String> = Vec::new();
    let mut cells: HashMap<(String, String), Counts> = HashMap::new();
    for (line, rec) in &rows {
        let (stratum, group) = (&rec[0], &rec[1]);
        let total = count(*line, "total", &rec[2])?;
        let positive = count(*line, "positive", &rec[3])?;
        let counts = Counts::new(total, positive).map_err(|e| CsvError::InvalidCell {
            line: *line,
            message: e.to_string(),
        })?;
        if !seen_groups.iter().any(|g| g == group) {
            seen_groups.push(group.to_string());
        }
        if let Some((a, b)) = groups {
            if group != a && group != b {
                continue;
            }
        }
        if !strata.iter().any(|s| s == stratum) {
            strata.push(stratum.to_string());
        }
        if cells
            .insert((stratum.to_string(), group.to_string()), counts)
            .is_some()
        {
            return Err(CsvError::DuplicateCell {
                line: *line,
                stratum: stratum.to_string(),
                group: group.to_string(),
            });
        }
    }

    let (first, second) = match groups {
        Some((a, b)) => {
            for g in [a, b] {
                if !seen_groups.iter().any(|s| s == g) {
                    return Err(CsvError::UnknownGroup(g.to_string()));
                }
            }
            (a.to_string(), b.to_string())
        }
        None => match seen_groups.as_slice() {
            [a, b] => (a.clone(), b.clone()),
            _ => return Err(CsvError::NotTwoGroups { found: seen_groups }),
        },
    };

    let mut out = Vec::with_capacity(strata.len());
    for s in strata {
        let mut cell = |g: &str| {
            cells
                .remove(&(s.clone(), g.to_string()))
                .ok_or_else(|| CsvError::MissingCell {
                    stratum: s.clone(),
                    group: g.to_string(),
                })
        };
        let a = cell(&first)?;
        let b = cell(&second)?;
        out.push(Stratum::new(s, a, b));
    }
    StratifiedComparison::new(first, second, out).map_err(|e| CsvError::InvalidTable(e.to_string()))
}

/// Inverse of [`parse_table_csv`]: one row per stratum and group, first
/// group first.
pub fn write_table_csv(sc: &StratifiedComparison) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = "writing to memory cannot fail";
    w.write_record(TABLE_HEADER).expect(io);
    for s in sc.strata() {
        for (label, c) in [(sc.first_label(), s.first), (sc.second_label(), s.second)] {
            w.write_record([
                s.label.as_str(),
                label,
                &c.total().to_string(),
                &c.positive().to_string(),
            ])
            .expect(io);
        }
    }
    String::from_utf8(w.into_inner().expect(io)).expect("input was UTF-8")
}

/// Accepted spellings of a binary outcome, compared case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub truthy: Vec<String>,
    pub falsy: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self {
            truthy: vec!["1".into(), "true".into(), "yes".into()],
            falsy: vec!["0".into(), "false".into(), "no".into()],
        }
    }
}

impl Lexicon {
    fn parse(&self, value: &str) -> Option<bool> {
        let hit = |set: &[String]| set.iter().any(|s| s.eq_ignore_ascii_case(value));
        if hit(&self.truthy) {
            Some(true)
        } else if hit(&self.falsy) {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RecordSchema {
    /// Parsed with the lexicon into a boolean column.
    pub outcome: Option<String>,
    /// Parsed as finite decimals. Every other column except the outcome is
    /// categorical.
    pub numeric: Vec<String>,
    /// Must exist but keep their inferred type.
    pub required: Vec<String>,
    pub lexicon: Lexicon,
}

pub fn parse_records_csv(text: &str, schema: &RecordSchema) -> Result<RecordTable, CsvError> {
    let (header, rows) = records(text)?;
    let mut names = BTreeSet::new();
    for h in &header {
        if !names.insert(h.as_str()) {
            return Err(CsvError::DuplicateColumn(h.clone()));
        }
    }
    let wanted = schema
        .outcome
        .iter()
        .chain(&schema.numeric)
        .chain(&schema.required);
    for name in wanted {
        if !names.contains(name.as_str()) {
            return Err(CsvError::MissingColumn(name.clone()));
        }
    }
    if rows.is_empty() {
        return Err(CsvError::EmptyData);
    }

    let mut columns = Vec::with_capacity(header.len());
    for (i, name) in header.iter().enumerate() {
        let cells = rows.iter().map(|(line, rec)| (*line, &rec[i]));
        let data = if schema.outcome.as_ref() == Some(name) {
            ColumnData::Boolean(
                cells
                    .map(|(line, v)| {
                        schema
                            .lexicon
                            .parse(v)
                            .ok_or_else(|| CsvError::BadOutcomeValue {
                                line,
                                value: v.to_string(),
                            })
                    })
                    .collect::<Result<_, _>>()?,
            )
        } else if schema.numeric.contains(name) {
            ColumnData::Numeric(
                cells
                    .map(|(line, v)| {
                        v.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| CsvError::BadNumber {
                                line,
                                column: name.clone(),
                                value: v.to_string(),
                            })
                    })
                    .collect::<Result<_, _>>()?,
            )
        } else {
            ColumnData::Categorical(cells.map(|(_, v)| v.to_string()).collect())
        };
        columns.push(Column::new(name.clone(), data));
    }
    RecordTable::new(columns).map_err(|e| CsvError::Malformed(e.to_string()))
}
