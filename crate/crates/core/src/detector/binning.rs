use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStrategy {
    #[default]
    Quantile,
    EqualWidth,
}

/// Ascending bin boundaries, first and last edges included. Bin `i` is
/// `[edges[i], edges[i + 1])`; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    pub edges: Vec<f64>,
}

impl BinEdges {
    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Edges strictly between the data minimum and maximum.
    pub fn inner(&self) -> &[f64] {
        &self.edges[1..self.edges.len() - 1]
    }

    pub fn bin_of(&self, value: f64) -> Option<usize> {
        assign_bin(&self.edges, value)
    }

    pub fn label(&self, bin: usize) -> String {
        let close = if bin + 1 == self.bins() { ']' } else { ')' };
        format!("[{}, {}{}", self.edges[bin], self.edges[bin + 1], close)
    }
}

/// Index of the bin holding `value`, or `None` outside the covered range.
pub fn assign_bin(edges: &[f64], value: f64) -> Option<usize> {
    let bins = edges.len().checked_sub(1)?;
    if bins == 0 || !(value >= edges[0] && value <= edges[bins]) {
        return None;
    }
    // first edge strictly greater than value, among the inner edges
    let idx = edges[1..bins].partition_point(|&e| e <= value);
    Some(idx)
}

/// Split `values` into `k` bins.
///
/// Quantile edges use linear interpolation between order statistics; edges
/// that coincide because of tied values are merged, so heavily tied data can
/// yield fewer than `k` bins.
pub fn bin_numeric(values: &[f64], strategy: BinStrategy, k: usize) -> Result<BinEdges> {
    if k < 2 {
        return Err(Error::InvalidBinCount(k));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("values must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    let distinct = if sorted.is_empty() { 0 } else { distinct };

    let needed = match strategy {
        BinStrategy::Quantile => k,
        BinStrategy::EqualWidth => 2,
    };
    if distinct < needed {
        return Err(Error::TooFewDistinctValues {
            needed,
            found: distinct,
        });
    }

    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let mut edges = Vec::with_capacity(k + 1);
    edges.push(min);
    for j in 1..k {
        let p = j as f64 / k as f64;
        edges.push(match strategy {
            BinStrategy::Quantile => interpolated_quantile(&sorted, p),
            BinStrategy::EqualWidth => min + (max - min) * p,
        });
    }
    edges.push(max);
    edges.dedup();
    Ok(BinEdges { edges })
}

fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
