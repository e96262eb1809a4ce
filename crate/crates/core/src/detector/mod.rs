//! Reversal classification for stratified comparisons, plus the record-level
//! machinery used to search raw data for covariates that induce a reversal.

mod binning;
mod records;
mod scan;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tables::{compare, pooled_rate, rate, zero_side, Direction, Side, StratifiedComparison};

pub use binning::{assign_bin, bin_numeric, BinEdges, BinStrategy};
pub use records::{Column, ColumnData, RecordTable};
pub use scan::{
    scan, stratify, Binning, Finding, ScanConfig, ScanEntry, SkipReason, SkipRecord, StratumBinning,
};

/// The three possible verdicts on a stratified comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    /// Every stratum favours one group; the pooled table favours the other.
    FullReversal,
    /// Every non-tied stratum agrees with the pooled direction.
    Consistent,
    Mixed,
}

impl Classification {
    /// Sort key used to rank scan findings.
    pub fn rank(self) -> u8 {
        match self {
            Classification::FullReversal => 0,
            Classification::Mixed => 1,
            Classification::Consistent => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::FullReversal => "FULL_REVERSAL",
            Classification::Consistent => "CONSISTENT",
            Classification::Mixed => "MIXED",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumDirection {
    pub stratum: String,
    pub direction: Direction,
}

/// Per-stratum and pooled directions with the resulting verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReversalReport {
    pub stratum_directions: Vec<StratumDirection>,
    pub aggregate_direction: Direction,
    pub classification: Classification,
    /// Most common non-tied stratum direction, `Tie` when there is no mode.
    pub majority_direction: Direction,
}

impl ReversalReport {
    pub fn directions(&self) -> Vec<Direction> {
        self.stratum_directions
            .iter()
            .map(|s| s.direction)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Let tied strata coexist with a full reversal of the remaining strata.
    pub allow_tied_strata: bool,
}

/// Classify `sc` with the default (strict) configuration.
pub fn detect_reversal(sc: &StratifiedComparison) -> Result<ReversalReport> {
    detect_reversal_with(sc, DetectorConfig::default())
}

pub fn detect_reversal_with(
    sc: &StratifiedComparison,
    config: DetectorConfig,
) -> Result<ReversalReport> {
    let mut stratum_directions = Vec::with_capacity(sc.len());
    for stratum in sc.strata() {
        let first = rate(stratum.first).map_err(|_| zero_side(sc, stratum, Side::First))?;
        let second = rate(stratum.second).map_err(|_| zero_side(sc, stratum, Side::Second))?;
        stratum_directions.push(StratumDirection {
            stratum: stratum.label.clone(),
            direction: compare(&first, &second),
        });
    }
    let aggregate_direction = compare(
        &pooled_rate(sc, Side::First)?,
        &pooled_rate(sc, Side::Second)?,
    );
    let directions: Vec<Direction> = stratum_directions.iter().map(|s| s.direction).collect();
    Ok(ReversalReport {
        classification: classify(&directions, aggregate_direction, config.allow_tied_strata),
        majority_direction: majority(&directions),
        aggregate_direction,
        stratum_directions,
    })
}

fn classify(strata: &[Direction], aggregate: Direction, allow_tied: bool) -> Classification {
    let mut decided = strata.iter().copied().filter(|d| !d.is_tie());
    let has_ties = strata.iter().any(|d| d.is_tie());

    if let Some(lead) = decided.clone().next() {
        let unanimous = decided.clone().all(|d| d == lead);
        if unanimous && (allow_tied || !has_ties) && aggregate == lead.opposite() {
            return Classification::FullReversal;
        }
    }
    if decided.all(|d| d == aggregate) {
        Classification::Consistent
    } else {
        Classification::Mixed
    }
}

fn majority(strata: &[Direction]) -> Direction {
    let first = strata
        .iter()
        .filter(|d| **d == Direction::FirstHigher)
        .count();
    let second = strata
        .iter()
        .filter(|d| **d == Direction::SecondHigher)
        .count();
    first.cmp(&second).into()
}
