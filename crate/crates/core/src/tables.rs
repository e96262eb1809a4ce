//! Contingency-table primitives: counts, exact rates, aggregation and comparison.
//!
//! Every direction decision in this crate goes through [`compare`], which
//! cross-multiplies in `u128` so that no rounding can turn a strict
//! inequality into a tie or the reverse.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subjects and outcome events for one group within one stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCounts")]
pub struct Counts {
    total: u64,
    positive: u64,
}

#[derive(Deserialize)]
struct RawCounts {
    total: u64,
    positive: u64,
}

impl TryFrom<RawCounts> for Counts {
    type Error = Error;

    fn try_from(raw: RawCounts) -> Result<Self> {
        Counts::new(raw.total, raw.positive)
    }
}

impl Counts {
    pub fn new(total: u64, positive: u64) -> Result<Self> {
        if positive > total {
            return Err(Error::PositiveExceedsTotal { total, positive });
        }
        Ok(Self { total, positive })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn positive(&self) -> u64 {
        self.positive
    }

    pub fn rate(&self) -> Result<Rate> {
        rate(*self)
    }
}

/// An unreduced fraction `positive / total` with `0 <= numerator <= denominator`.
///
/// Equality on this type is structural (`1/2 != 2/4`); use [`compare`] or
/// [`Rate::cmp_value`] for value comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRate")]
pub struct Rate {
    numerator: u64,
    denominator: u64,
}

#[derive(Deserialize)]
struct RawRate {
    numerator: u64,
    denominator: u64,
}

impl TryFrom<RawRate> for Rate {
    type Error = Error;

    fn try_from(raw: RawRate) -> Result<Self> {
        Rate::new(raw.numerator, raw.denominator)
    }
}

impl Rate {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::ZeroTotal("rate denominator".into()));
        }
        if numerator > denominator {
            return Err(Error::PositiveExceedsTotal {
                total: denominator,
                positive: numerator,
            });
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// Exact value ordering by cross-multiplication.
    pub fn cmp_value(&self, other: &Rate) -> Ordering {
        let lhs = u128::from(self.numerator) * u128::from(other.denominator);
        let rhs = u128::from(other.numerator) * u128::from(self.denominator);
        lhs.cmp(&rhs)
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Percentage in tenths of a percent, rounded half-up (`36/60` -> 600).
    pub fn percent_tenths(&self) -> u64 {
        let num = u128::from(self.numerator) * 2000 + u128::from(self.denominator);
        let den = u128::from(self.denominator) * 2;
        // Result is at most 1000, so the narrowing is lossless.
        (num / den) as u64
    }

    /// Percentage rounded half-up to one decimal place.
    pub fn percent_rounded(&self) -> f64 {
        self.percent_tenths() as f64 / 10.0
    }

    /// Display form such as `62.1%`.
    pub fn percent_display(&self) -> String {
        let tenths = self.percent_tenths();
        format!("{}.{}%", tenths / 10, tenths % 10)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Which of the two compared groups has the higher rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    FirstHigher,
    SecondHigher,
    Tie,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::FirstHigher => Direction::SecondHigher,
            Direction::SecondHigher => Direction::FirstHigher,
            Direction::Tie => Direction::Tie,
        }
    }

    pub fn is_tie(self) -> bool {
        self == Direction::Tie
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::FirstHigher => "FIRST_HIGHER",
            Direction::SecondHigher => "SECOND_HIGHER",
            Direction::Tie => "TIE",
        }
    }
}

impl From<Ordering> for Direction {
    fn from(ord: Ordering) -> Self {
        match ord {
            Ordering::Greater => Direction::FirstHigher,
            Ordering::Less => Direction::SecondHigher,
            Ordering::Equal => Direction::Tie,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Selects one of the two groups of a [`StratifiedComparison`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    First,
    Second,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::First => "first",
            Side::Second => "second",
        }
    }
}

/// One stratum of a two-group comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    pub first: Counts,
    pub second: Counts,
}

impl Stratum {
    pub fn new(label: impl Into<String>, first: Counts, second: Counts) -> Self {
        Self {
            label: label.into(),
            first,
            second,
        }
    }

    pub fn side(&self, side: Side) -> Counts {
        match side {
            Side::First => self.first,
            Side::Second => self.second,
        }
    }

    /// Subjects in this stratum across both groups.
    pub fn size(&self) -> u128 {
        u128::from(self.first.total) + u128::from(self.second.total)
    }
}

/// Two named groups compared across `K >= 1` named strata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawComparison")]
pub struct StratifiedComparison {
    first_label: String,
    second_label: String,
    strata: Vec<Stratum>,
}

#[derive(Deserialize)]
struct RawComparison {
    first_label: String,
    second_label: String,
    strata: Vec<Stratum>,
}

impl TryFrom<RawComparison> for StratifiedComparison {
    type Error = Error;

    fn try_from(raw: RawComparison) -> Result<Self> {
        StratifiedComparison::new(raw.first_label, raw.second_label, raw.strata)
    }
}

impl StratifiedComparison {
    pub fn new(
        first_label: impl Into<String>,
        second_label: impl Into<String>,
        strata: Vec<Stratum>,
    ) -> Result<Self> {
        let first_label = first_label.into();
        let second_label = second_label.into();
        if first_label == second_label {
            return Err(Error::SameGroupLabels(first_label));
        }
        if strata.is_empty() {
            return Err(Error::NoStrata);
        }
        let mut seen = HashSet::with_capacity(strata.len());
        for stratum in &strata {
            if !seen.insert(stratum.label.as_str()) {
                return Err(Error::DuplicateStratum(stratum.label.clone()));
            }
            if stratum.first.total == 0 && stratum.second.total == 0 {
                return Err(Error::EmptyStratum(stratum.label.clone()));
            }
        }
        Ok(Self {
            first_label,
            second_label,
            strata,
        })
    }

    pub fn first_label(&self) -> &str {
        &self.first_label
    }

    pub fn second_label(&self) -> &str {
        &self.second_label
    }

    pub fn label(&self, side: Side) -> &str {
        match side {
            Side::First => &self.first_label,
            Side::Second => &self.second_label,
        }
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    /// The per-stratum counts of one group, in stratum order.
    pub fn cells(&self, side: Side) -> Vec<Counts> {
        self.strata.iter().map(|s| s.side(side)).collect()
    }

    /// Total subjects across both groups and all strata.
    pub fn subject_count(&self) -> u128 {
        self.strata
            .iter()
            .map(|s| u128::from(s.first.total) + u128::from(s.second.total))
            .sum()
    }

    /// The same table with the two groups exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            first_label: self.second_label.clone(),
            second_label: self.first_label.clone(),
            strata: self
                .strata
                .iter()
                .map(|s| Stratum::new(s.label.clone(), s.second, s.first))
                .collect(),
        }
    }
}

/// `positive / total` for one cell.
pub fn rate(c: Counts) -> Result<Rate> {
    if c.total == 0 {
        return Err(Error::ZeroTotal("cell has no subjects".into()));
    }
    Rate::new(c.positive, c.total)
}

/// Componentwise sum of cells; overflow is reported, never wrapped.
pub fn aggregate(cells: &[Counts]) -> Result<Counts> {
    if cells.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut total = 0u64;
    let mut positive = 0u64;
    for c in cells {
        total = total.checked_add(c.total).ok_or(Error::Overflow)?;
        positive = positive.checked_add(c.positive).ok_or(Error::Overflow)?;
    }
    Counts::new(total, positive)
}

pub fn compare(r1: &Rate, r2: &Rate) -> Direction {
    r1.cmp_value(r2).into()
}

/// Rate of the amalgamated counts of one group.
pub fn pooled_rate(sc: &StratifiedComparison, side: Side) -> Result<Rate> {
    let pooled = aggregate(&sc.cells(side))?;
    if pooled.total == 0 {
        return Err(Error::ZeroTotal(format!(
            "group `{}` has no subjects",
            sc.label(side)
        )));
    }
    rate(pooled)
}

/// Arithmetic mean of the stratum rates of one group, ignoring stratum sizes.
pub fn unweighted_mean_rate(sc: &StratifiedComparison, side: Side) -> Result<f64> {
    let mut sum = 0.0;
    for stratum in sc.strata() {
        let r = rate(stratum.side(side)).map_err(|_| zero_side(sc, stratum, side))?;
        sum += r.to_f64();
    }
    Ok(sum / sc.len() as f64)
}

pub(crate) fn zero_side(sc: &StratifiedComparison, stratum: &Stratum, side: Side) -> Error {
    Error::ZeroTotal(format!(
        "stratum `{}` has no subjects in group `{}`",
        stratum.label,
        sc.label(side)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(total: u64, positive: u64) -> Counts {
        Counts::new(total, positive).unwrap()
    }

    fn r(n: u64, d: u64) -> Rate {
        Rate::new(n, d).unwrap()
    }

    fn hospital() -> StratifiedComparison {
        StratifiedComparison::new(
            "A",
            "B",
            vec![
                Stratum::new("non-healthy", c(60, 36), c(20, 14)),
                Stratum::new("healthy", c(20, 4), c(60, 18)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rate_keeps_unreduced_form() {
        let x = rate(c(60, 36)).unwrap();
        assert_eq!((x.numerator(), x.denominator()), (36, 60));
        assert_eq!(x.percent_display(), "60.0%");
    }

    #[test]
    fn rate_of_zero_positive() {
        for n in [1, 7, 1000] {
            assert_eq!(rate(c(n, 0)).unwrap().to_f64(), 0.0);
        }
    }

    #[test]
    fn rate_display_rounds_half_up() {
        assert_eq!(r(512, 825).percent_display(), "62.1%");
        assert_eq!(r(557, 1835).percent_display(), "30.4%");
        // 1/8 = 12.5% exactly; 1/16 = 6.25% rounds up to 6.3%
        assert_eq!(r(1, 8).percent_display(), "12.5%");
        assert_eq!(r(1, 16).percent_display(), "6.3%");
        assert_eq!(r(1, 1).percent_display(), "100.0%");
        assert_eq!(r(0, 3).percent_display(), "0.0%");
    }

    #[test]
    fn rate_rejects_zero_total() {
        assert!(matches!(rate(c(0, 0)), Err(Error::ZeroTotal(_))));
    }

    #[test]
    fn counts_reject_positive_above_total() {
        assert!(Counts::new(3, 4).is_err());
    }

    #[test]
    fn aggregate_table_one() {
        assert_eq!(aggregate(&[c(60, 36), c(20, 4)]).unwrap(), c(80, 40));
        assert_eq!(aggregate(&[c(5, 2)]).unwrap(), c(5, 2));
        assert_eq!(aggregate(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn aggregate_berkeley_men() {
        let men = [
            c(825, 512),
            c(560, 353),
            c(325, 120),
            c(417, 138),
            c(191, 53),
            c(373, 22),
        ];
        assert_eq!(aggregate(&men).unwrap(), c(2691, 1198));
    }

    #[test]
    fn aggregate_overflow_is_error() {
        let big = c(u64::MAX, 0);
        assert_eq!(aggregate(&[big, c(1, 0)]), Err(Error::Overflow));
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare(&r(36, 60), &r(14, 20)), Direction::SecondHigher);
        assert_eq!(compare(&r(40, 80), &r(32, 80)), Direction::FirstHigher);
        assert_eq!(compare(&r(1, 2), &r(2, 4)), Direction::Tie);
    }

    #[test]
    fn compare_near_u64_max_is_exact() {
        let m = u64::MAX;
        // (m-1)/m < m/m, and (m-2)/(m-1) < (m-1)/m
        assert_eq!(compare(&r(m - 1, m), &r(m, m)), Direction::SecondHigher);
        assert_eq!(
            compare(&r(m - 2, m - 1), &r(m - 1, m)),
            Direction::SecondHigher
        );
    }

    #[test]
    fn pooled_rates() {
        let sc = hospital();
        assert_eq!(pooled_rate(&sc, Side::First).unwrap(), r(40, 80));
        assert_eq!(pooled_rate(&sc, Side::Second).unwrap(), r(32, 80));
        let single =
            StratifiedComparison::new("x", "y", vec![Stratum::new("s", c(9, 4), c(3, 1))]).unwrap();
        assert_eq!(pooled_rate(&single, Side::First).unwrap(), r(4, 9));
    }

    #[test]
    fn unweighted_means() {
        let sc = hospital();
        assert!((unweighted_mean_rate(&sc, Side::First).unwrap() - 0.40).abs() < 1e-15);
        assert!((unweighted_mean_rate(&sc, Side::Second).unwrap() - 0.50).abs() < 1e-15);
    }

    #[test]
    fn unweighted_mean_names_empty_stratum() {
        let sc = StratifiedComparison::new(
            "x",
            "y",
            vec![
                Stratum::new("full", c(4, 1), c(4, 2)),
                Stratum::new("hollow", c(0, 0), c(4, 2)),
            ],
        )
        .unwrap();
        let err = unweighted_mean_rate(&sc, Side::First).unwrap_err();
        assert!(err.to_string().contains("hollow"), "{err}");
    }

    #[test]
    fn comparison_invariants() {
        let s = |l: &str| Stratum::new(l, c(1, 0), c(1, 1));
        assert_eq!(
            StratifiedComparison::new("a", "a", vec![s("x")]),
            Err(Error::SameGroupLabels("a".into()))
        );
        assert_eq!(
            StratifiedComparison::new("a", "b", vec![]),
            Err(Error::NoStrata)
        );
        assert_eq!(
            StratifiedComparison::new("a", "b", vec![s("x"), s("x")]),
            Err(Error::DuplicateStratum("x".into()))
        );
        assert_eq!(
            StratifiedComparison::new("a", "b", vec![Stratum::new("e", c(0, 0), c(0, 0))]),
            Err(Error::EmptyStratum("e".into()))
        );
    }

    #[test]
    fn deserialization_validates_counts() {
        assert!(Counts::try_from(RawCounts {
            total: 2,
            positive: 3
        })
        .is_err());
        assert!(Rate::try_from(RawRate {
            numerator: 1,
            denominator: 0
        })
        .is_err());
    }
}
