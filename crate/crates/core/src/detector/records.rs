use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};

/// Values of one typed column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Categorical(Vec<String>),
    Numeric(Vec<f64>),
    Boolean(Vec<bool>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Boolean(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            ColumnData::Categorical(_) => "categorical",
            ColumnData::Numeric(_) => "numeric",
            ColumnData::Boolean(_) => "boolean",
        }
    }

    fn select(&self, keep: &[usize]) -> ColumnData {
        match self {
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(keep.iter().map(|&i| v[i].clone()).collect())
            }
            ColumnData::Numeric(v) => ColumnData::Numeric(keep.iter().map(|&i| v[i]).collect()),
            ColumnData::Boolean(v) => ColumnData::Boolean(keep.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn new(name: impl Into<String>, data: ColumnData) -> Self {
        Self {
            name: name.into(),
            data,
        }
    }
}

/// Row-level data stored column-wise. Every column has the same length and
/// numeric columns hold only finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordTable {
    columns: Vec<Column>,
    rows: usize,
}

impl RecordTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.data.len());
        let mut names = HashSet::new();
        for column in &columns {
            if !names.insert(column.name.as_str()) {
                return Err(Error::DuplicateColumn(column.name.clone()));
            }
            if column.data.len() != rows {
                return Err(Error::ColumnLength {
                    column: column.name.clone(),
                    expected: rows,
                    found: column.data.len(),
                });
            }
            if let ColumnData::Numeric(values) = &column.data {
                if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        column: column.name.clone(),
                        row,
                    });
                }
            }
        }
        Ok(Self { columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn column(&self, name: &str) -> Result<&ColumnData> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| &c.data)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn categorical(&self, name: &str) -> Result<&[String]> {
        match self.column(name)? {
            ColumnData::Categorical(v) => Ok(v),
            _ => Err(wrong_type(name, "categorical")),
        }
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column(name)? {
            ColumnData::Numeric(v) => Ok(v),
            _ => Err(wrong_type(name, "numeric")),
        }
    }

    pub fn boolean(&self, name: &str) -> Result<&[bool]> {
        match self.column(name)? {
            ColumnData::Boolean(v) => Ok(v),
            _ => Err(wrong_type(name, "boolean")),
        }
    }

    /// Distinct values of a categorical column in lexicographic order.
    pub fn distinct(&self, name: &str) -> Result<Vec<String>> {
        let values: BTreeSet<&String> = self.categorical(name)?.iter().collect();
        Ok(values.into_iter().cloned().collect())
    }

    /// Keep only the rows whose `column` value is one of `values`.
    pub fn retain_values(&self, column: &str, values: &[&str]) -> Result<RecordTable> {
        let col = self.categorical(column)?;
        let keep: Vec<usize> = (0..self.rows)
            .filter(|&i| values.contains(&col[i].as_str()))
            .collect();
        Ok(RecordTable {
            columns: self
                .columns
                .iter()
                .map(|c| Column::new(c.name.clone(), c.data.select(&keep)))
                .collect(),
            rows: keep.len(),
        })
    }
}

fn wrong_type(column: &str, expected: &'static str) -> Error {
    Error::WrongColumnType {
        column: column.to_string(),
        expected,
    }
}
