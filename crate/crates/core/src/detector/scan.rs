use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{bin_numeric, BinEdges, BinStrategy};
use super::records::{ColumnData, RecordTable};
use super::{detect_reversal_with, DetectorConfig, ReversalReport};
use crate::error::{Error, Result};
use crate::tables::{Counts, StratifiedComparison, Stratum};

/// How numeric covariates are cut into strata. Categorical and boolean
/// covariates are always used as-is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binning {
    pub strategy: BinStrategy,
    pub bins: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Self {
            strategy: BinStrategy::Quantile,
            bins: 4,
        }
    }
}

/// How the strata of a finding were formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StratumBinning {
    Categorical,
    Numeric {
        strategy: BinStrategy,
        edges: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub binning: Binning,
    /// Strata with fewer subjects (both groups together) are dropped.
    pub min_stratum_size: u64,
    pub allow_tied_strata: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            binning: Binning::default(),
            min_stratum_size: 1,
            allow_tied_strata: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub covariate: String,
    pub binning: StratumBinning,
    pub report: ReversalReport,
    /// Rows per retained stratum, in stratum order.
    pub stratum_sizes: Vec<u64>,
    pub comparison: StratifiedComparison,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkipReason {
    AllStrataFiltered,
    EmptyStratumSide { stratum: String },
    Failed { code: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub covariate: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScanEntry {
    Finding(Finding),
    Skipped(SkipRecord),
}

impl ScanEntry {
    pub fn covariate(&self) -> &str {
        match self {
            ScanEntry::Finding(f) => &f.covariate,
            ScanEntry::Skipped(s) => &s.covariate,
        }
    }

    pub fn finding(&self) -> Option<&Finding> {
        match self {
            ScanEntry::Finding(f) => Some(f),
            ScanEntry::Skipped(_) => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            ScanEntry::Finding(f) => f.report.classification.rank(),
            ScanEntry::Skipped(_) => u8::MAX,
        }
    }
}

struct Tally {
    label: String,
    first: Counts,
    second: Counts,
}

struct Groups<'a> {
    first: String,
    second: String,
    column: &'a [String],
    outcome: &'a [bool],
}

fn two_groups<'a>(
    records: &'a RecordTable,
    group_col: &str,
    outcome_col: &str,
) -> Result<Groups<'a>> {
    let column = records.categorical(group_col)?;
    let outcome = records.boolean(outcome_col)?;
    let values = records.distinct(group_col)?;
    if values.len() != 2 {
        return Err(Error::NotTwoGroups {
            column: group_col.to_string(),
            found: values.len(),
            values,
        });
    }
    let mut values = values.into_iter();
    Ok(Groups {
        first: values.next().unwrap_or_default(),
        second: values.next().unwrap_or_default(),
        column,
        outcome,
    })
}

/// Assign each row a stratum index and build stratum labels in stratum order.
fn stratum_keys(
    records: &RecordTable,
    covariate: &str,
    binning: Binning,
) -> Result<(Vec<usize>, Vec<String>, StratumBinning)> {
    match records.column(covariate)? {
        ColumnData::Categorical(values) => Ok(categorical_keys(values.iter().map(String::as_str))),
        ColumnData::Boolean(values) => Ok(categorical_keys(values.iter().map(|&b| {
            if b {
                "true"
            } else {
                "false"
            }
        }))),
        ColumnData::Numeric(values) => {
            let edges: BinEdges = bin_numeric(values, binning.strategy, binning.bins)?;
            let keys = values
                .iter()
                .map(|&v| edges.bin_of(v).expect("edges span the data"))
                .collect();
            let labels = (0..edges.bins()).map(|b| edges.label(b)).collect();
            Ok((
                keys,
                labels,
                StratumBinning::Numeric {
                    strategy: binning.strategy,
                    edges: edges.edges,
                },
            ))
        }
    }
}

fn categorical_keys<'a>(
    values: impl Iterator<Item = &'a str> + Clone,
) -> (Vec<usize>, Vec<String>, StratumBinning) {
    let index: BTreeMap<&str, usize> = {
        let mut levels: Vec<&str> = values.clone().collect();
        levels.sort_unstable();
        levels.dedup();
        levels
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect()
    };
    let keys = values.map(|v| index[v]).collect();
    let labels = index.keys().map(|l| l.to_string()).collect();
    (keys, labels, StratumBinning::Categorical)
}

fn tally(
    records: &RecordTable,
    groups: &Groups<'_>,
    covariate: &str,
    binning: Binning,
) -> Result<(Vec<Tally>, StratumBinning)> {
    let (keys, labels, description) = stratum_keys(records, covariate, binning)?;
    // [first total, first positive, second total, second positive]
    let mut cells = vec![[0u64; 4]; labels.len()];
    for (row, &key) in keys.iter().enumerate() {
        let offset = if groups.column[row] == groups.first {
            0
        } else {
            2
        };
        cells[key][offset] += 1;
        cells[key][offset + 1] += u64::from(groups.outcome[row]);
    }
    let tallies = labels
        .into_iter()
        .zip(cells)
        .filter(|(_, c)| c[0] + c[2] > 0)
        .map(|(label, c)| {
            Ok(Tally {
                label,
                first: Counts::new(c[0], c[1])?,
                second: Counts::new(c[2], c[3])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((tallies, description))
}

fn into_comparison(groups: &Groups<'_>, tallies: Vec<Tally>) -> Result<StratifiedComparison> {
    if let Some(t) = tallies
        .iter()
        .find(|t| t.first.total() == 0 || t.second.total() == 0)
    {
        return Err(Error::EmptyStratumSide(t.label.clone()));
    }
    StratifiedComparison::new(
        groups.first.clone(),
        groups.second.clone(),
        tallies
            .into_iter()
            .map(|t| Stratum::new(t.label, t.first, t.second))
            .collect(),
    )
}

/// Tally a two-group record table into one stratum per covariate level or
/// numeric bin. Groups are ordered lexicographically (the smaller value is
/// the first group).
pub fn stratify(
    records: &RecordTable,
    group_col: &str,
    outcome_col: &str,
    covariate: &str,
    binning: Binning,
) -> Result<StratifiedComparison> {
    let groups = two_groups(records, group_col, outcome_col)?;
    let (tallies, _) = tally(records, &groups, covariate, binning)?;
    into_comparison(&groups, tallies)
}

/// Stratify by each candidate and classify the result.
///
/// Candidates are evaluated in parallel; the output order depends only on
/// the inputs: full reversals, then mixed, then consistent findings, then
/// skipped candidates, each group sorted by covariate name.
pub fn scan(
    records: &RecordTable,
    group_col: &str,
    outcome_col: &str,
    candidates: &[String],
    config: &ScanConfig,
) -> Result<Vec<ScanEntry>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let groups = two_groups(records, group_col, outcome_col)?;
    let mut entries: Vec<(usize, ScanEntry)> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, covariate)| (i, scan_one(records, &groups, covariate, config)))
        .collect();
    entries.sort_by(|(ia, a), (ib, b)| {
        (a.rank(), a.covariate(), ia).cmp(&(b.rank(), b.covariate(), ib))
    });
    Ok(entries.into_iter().map(|(_, e)| e).collect())
}

fn scan_one(
    records: &RecordTable,
    groups: &Groups<'_>,
    covariate: &str,
    config: &ScanConfig,
) -> ScanEntry {
    let skip = |reason| {
        ScanEntry::Skipped(SkipRecord {
            covariate: covariate.to_string(),
            reason,
        })
    };
    let failed = |e: Error| {
        skip(SkipReason::Failed {
            code: e.code().to_string(),
            message: e.to_string(),
        })
    };

    let (tallies, binning) = match tally(records, groups, covariate, config.binning) {
        Ok(t) => t,
        Err(e) => return failed(e),
    };
    let kept: Vec<Tally> = tallies
        .into_iter()
        .filter(|t| t.first.total() + t.second.total() >= config.min_stratum_size)
        .collect();
    if kept.is_empty() {
        return skip(SkipReason::AllStrataFiltered);
    }
    let stratum_sizes = kept
        .iter()
        .map(|t| t.first.total() + t.second.total())
        .collect();
    let comparison = match into_comparison(groups, kept) {
        Ok(sc) => sc,
        Err(Error::EmptyStratumSide(stratum)) => {
            return skip(SkipReason::EmptyStratumSide { stratum })
        }
        Err(e) => return failed(e),
    };
    let detector = DetectorConfig {
        allow_tied_strata: config.allow_tied_strata,
    };
    match detect_reversal_with(&comparison, detector) {
        Ok(report) => ScanEntry::Finding(Finding {
            covariate: covariate.to_string(),
            binning,
            report,
            stratum_sizes,
            comparison,
        }),
        Err(e) => failed(e),
    }
}
