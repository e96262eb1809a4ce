//! Strata as vectors `(total, positive)` in the plane.
//!
//! A rate is the slope of its vector and pooling is vector addition, so a
//! reversal shows up as one group's stratum chords all being steeper while its
//! origin-to-terminal chord is shallower.

mod svg;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{
    aggregate, compare, rate, Counts, Direction, Rate, Side, StratifiedComparison,
};

pub use svg::{render_svg, RenderOptions};

/// A point in data coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: u64,
    pub y: u64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0, y: 0 };
}

/// Cumulative polyline of one group: `points[0]` is the origin and
/// `points[k + 1] - points[k]` is the vector of stratum `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupVectors {
    pub label: String,
    pub strata: Vec<String>,
    pub points: Vec<Point>,
    pub segment_slopes: Vec<Rate>,
    pub terminal_slope: Rate,
}

impl GroupVectors {
    pub fn from_cells(
        label: impl Into<String>,
        strata: Vec<String>,
        cells: &[Counts],
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptyInput);
        }
        if strata.len() != cells.len() {
            return Err(Error::InvalidParameter(format!(
                "{} stratum labels for {} cells",
                strata.len(),
                cells.len()
            )));
        }
        let mut points = Vec::with_capacity(cells.len() + 1);
        let mut segment_slopes = Vec::with_capacity(cells.len());
        let mut at = Point::ORIGIN;
        points.push(at);
        for (cell, name) in cells.iter().zip(&strata) {
            segment_slopes.push(
                rate(*cell)
                    .map_err(|_| Error::ZeroTotal(format!("stratum `{name}` has no subjects")))?,
            );
            at = Point {
                x: at.x.checked_add(cell.total()).ok_or(Error::Overflow)?,
                y: at.y.checked_add(cell.positive()).ok_or(Error::Overflow)?,
            };
            points.push(at);
        }
        let terminal_slope = rate(aggregate(cells)?)?;
        Ok(Self {
            label: label.into(),
            strata,
            points,
            segment_slopes,
            terminal_slope,
        })
    }

    pub fn terminal(&self) -> Point {
        *self.points.last().expect("polyline starts at the origin")
    }

    /// Per-stratum displacement vectors.
    pub fn vectors(&self) -> Vec<Point> {
        self.points
            .windows(2)
            .map(|w| Point {
                x: w[1].x - w[0].x,
                y: w[1].y - w[0].y,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorDiagram {
    pub x_label: String,
    pub y_label: String,
    pub groups: Vec<GroupVectors>,
}

impl VectorDiagram {
    /// Reversal read off the chords: one group strictly steeper on every
    /// stratum vector, strictly shallower on the origin-to-terminal chord.
    ///
    /// Works on the point coordinates only. Needs exactly two groups with the
    /// same number of strata.
    pub fn shows_reversal(&self) -> Result<bool> {
        let [a, b] = self.groups.as_slice() else {
            return Err(Error::InvalidParameter(format!(
                "chord comparison needs two groups, diagram has {}",
                self.groups.len()
            )));
        };
        let (va, vb) = (a.vectors(), b.vectors());
        if va.len() != vb.len() {
            return Err(Error::InvalidParameter(
                "groups have different strata".into(),
            ));
        }
        let steeper = |p: Point, q: Point| {
            (u128::from(p.y) * u128::from(q.x)).cmp(&(u128::from(q.y) * u128::from(p.x)))
        };
        let chords: Vec<Ordering> = va.iter().zip(&vb).map(|(&p, &q)| steeper(p, q)).collect();
        let Some(&lead) = chords.first() else {
            return Ok(false);
        };
        if lead == Ordering::Equal || chords.iter().any(|&o| o != lead) {
            return Ok(false);
        }
        Ok(steeper(a.terminal(), b.terminal()) == lead.reverse())
    }
}

/// Build the two cumulative polylines of a comparison.
pub fn to_vectors(sc: &StratifiedComparison) -> Result<VectorDiagram> {
    let labels: Vec<String> = sc.strata().iter().map(|s| s.label.clone()).collect();
    let group = |side: Side| {
        GroupVectors::from_cells(sc.label(side), labels.clone(), &sc.cells(side)).map_err(|e| {
            match e {
                Error::ZeroTotal(msg) => {
                    Error::ZeroTotal(format!("{msg} in group `{}`", sc.label(side)))
                }
                other => other,
            }
        })
    };
    Ok(VectorDiagram {
        x_label: "total".into(),
        y_label: "positive".into(),
        groups: vec![group(Side::First)?, group(Side::Second)?],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeBounds {
    pub min: Rate,
    pub max: Rate,
    pub aggregate: Rate,
}

/// Smallest and largest cell rate together with the pooled (mediant) rate.
pub fn slope_bounds(cells: &[Counts]) -> Result<SlopeBounds> {
    let rates = cells.iter().map(|c| rate(*c)).collect::<Result<Vec<_>>>()?;
    let mut iter = rates.iter().copied();
    let first = iter.next().ok_or(Error::EmptyInput)?;
    let (min, max) = iter.fold((first, first), |(lo, hi), r| {
        let lo = if compare(&r, &lo) == Direction::SecondHigher {
            r
        } else {
            lo
        };
        let hi = if compare(&r, &hi) == Direction::FirstHigher {
            r
        } else {
            hi
        };
        (lo, hi)
    });
    Ok(SlopeBounds {
        min,
        max,
        aggregate: rate(aggregate(cells)?)?,
    })
}
