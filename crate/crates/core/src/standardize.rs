//! Direct standardization: compare the two groups' stratum rates under one
//! shared set of stratum weights instead of each group's own exposure mix.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{rate, zero_side, Direction, Side, StratifiedComparison};

/// Absolute tolerance for the weight sum and for standardized-rate ties.
pub const TOLERANCE: f64 = 1e-12;

/// Source of the common stratum weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Stratum shares of both groups pooled together.
    #[default]
    Combined,
    First,
    Second,
    Equal,
}

impl Reference {
    pub fn as_str(self) -> &'static str {
        match self {
            Reference::Combined => "combined",
            Reference::First => "first",
            Reference::Second => "second",
            Reference::Equal => "equal",
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumWeight {
    pub stratum: String,
    pub weight: f64,
}

/// Non-negative per-stratum weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<StratumWeight>", into = "Vec<StratumWeight>")]
pub struct WeightVector {
    weights: Vec<StratumWeight>,
}

impl TryFrom<Vec<StratumWeight>> for WeightVector {
    type Error = Error;

    fn try_from(weights: Vec<StratumWeight>) -> Result<Self> {
        WeightVector::new(weights)
    }
}

impl From<WeightVector> for Vec<StratumWeight> {
    fn from(w: WeightVector) -> Self {
        w.weights
    }
}

impl WeightVector {
    pub fn new(weights: Vec<StratumWeight>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        if let Some(w) = weights
            .iter()
            .find(|w| !w.weight.is_finite() || w.weight < 0.0)
        {
            return Err(Error::InvalidWeights(format!(
                "weight for `{}` is {}",
                w.stratum, w.weight
            )));
        }
        let sum: f64 = weights.iter().map(|w| w.weight).sum();
        if (sum - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        Ok(Self { weights })
    }

    /// Build from `(label, weight)` pairs.
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(stratum, weight)| StratumWeight {
                    stratum: stratum.into(),
                    weight,
                })
                .collect(),
        )
    }

    pub fn weights(&self) -> &[StratumWeight] {
        &self.weights
    }

    pub fn get(&self, stratum: &str) -> Option<f64> {
        self.weights
            .iter()
            .find(|w| w.stratum == stratum)
            .map(|w| w.weight)
    }
}

fn shares(labels: &[&str], sizes: &[u128]) -> Result<WeightVector> {
    let grand: u128 = sizes.iter().sum();
    if grand == 0 {
        return Err(Error::ZeroTotal("reference population is empty".into()));
    }
    WeightVector::from_pairs(
        labels
            .iter()
            .zip(sizes)
            .map(|(l, &n)| (*l, n as f64 / grand as f64)),
    )
}

pub fn reference_weights(sc: &StratifiedComparison, reference: Reference) -> Result<WeightVector> {
    let labels: Vec<&str> = sc.strata().iter().map(|s| s.label.as_str()).collect();
    match reference {
        Reference::Equal => {
            let w = 1.0 / sc.len() as f64;
            WeightVector::from_pairs(labels.into_iter().map(|l| (l, w)))
        }
        Reference::Combined => {
            let sizes: Vec<u128> = sc.strata().iter().map(|s| s.size()).collect();
            shares(&labels, &sizes)
        }
        Reference::First | Reference::Second => {
            let side = if reference == Reference::First {
                Side::First
            } else {
                Side::Second
            };
            let mut sizes = Vec::with_capacity(sc.len());
            for stratum in sc.strata() {
                let total = stratum.side(side).total();
                if total == 0 {
                    return Err(zero_side(sc, stratum, side));
                }
                sizes.push(u128::from(total));
            }
            shares(&labels, &sizes)
        }
    }
}

/// `sum_k w_k * rate_k` for one group. Weights are matched to strata by label.
pub fn standardized_rate(sc: &StratifiedComparison, side: Side, w: &WeightVector) -> Result<f64> {
    if w.weights().len() != sc.len() {
        return Err(Error::WeightMismatch(format!(
            "{} weights for {} strata",
            w.weights().len(),
            sc.len()
        )));
    }
    let by_label: HashMap<&str, f64> = w
        .weights()
        .iter()
        .map(|sw| (sw.stratum.as_str(), sw.weight))
        .collect();
    let mut total = 0.0;
    for stratum in sc.strata() {
        let weight = *by_label.get(stratum.label.as_str()).ok_or_else(|| {
            Error::WeightMismatch(format!("no weight for stratum `{}`", stratum.label))
        })?;
        let r = rate(stratum.side(side)).map_err(|_| zero_side(sc, stratum, side))?;
        total += weight * r.to_f64();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedComparison {
    pub reference: Reference,
    pub weights: WeightVector,
    pub rate_first: f64,
    pub rate_second: f64,
    pub direction: Direction,
}

pub fn standardized_comparison(
    sc: &StratifiedComparison,
    reference: Reference,
) -> Result<StandardizedComparison> {
    let weights = reference_weights(sc, reference)?;
    standardized_comparison_with(sc, reference, weights)
}

/// Like [`standardized_comparison`] with caller-supplied weights.
pub fn standardized_comparison_with(
    sc: &StratifiedComparison,
    reference: Reference,
    weights: WeightVector,
) -> Result<StandardizedComparison> {
    let rate_first = standardized_rate(sc, Side::First, &weights)?;
    let rate_second = standardized_rate(sc, Side::Second, &weights)?;
    let direction = if (rate_first - rate_second).abs() <= TOLERANCE {
        Direction::Tie
    } else if rate_first > rate_second {
        Direction::FirstHigher
    } else {
        Direction::SecondHigher
    };
    Ok(StandardizedComparison {
        reference,
        weights,
        rate_first,
        rate_second,
        direction,
    })
}
