//! Between-group / within-group decomposition of the covariance of two
//! numeric columns.
//!
//! All moments use the population convention (divide by `N`), under which
//! `total = between + within` holds exactly in exact arithmetic:
//!
//! * between: covariance of the group means, each weighted by group size;
//! * within: size-weighted mean of the in-group covariances.
//!
//! A correlation is `None` when either variance it depends on vanishes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::detector::RecordTable;
use crate::error::{Error, Result};

/// Variances at or below this fraction of the total variance of the same
/// column are treated as zero when forming correlations.
const RELATIVE_ZERO_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub mean_x: f64,
    pub mean_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcologicalDecomposition {
    pub total_cov: f64,
    pub between_cov: f64,
    pub within_cov: f64,
    pub total_corr: Option<f64>,
    pub between_corr: Option<f64>,
    pub within_corr: Option<f64>,
    pub group_summaries: Vec<GroupSummary>,
    /// Always `"population"`; recorded so reports are self-describing.
    pub convention: String,
}

struct Moments {
    cov: f64,
    var_x: f64,
    var_y: f64,
}

impl Moments {
    fn zero() -> Self {
        Self {
            cov: 0.0,
            var_x: 0.0,
            var_y: 0.0,
        }
    }
}

type Grouped<'a> = BTreeMap<&'a str, Vec<(f64, f64)>>;

fn grouped<'a>(
    records: &'a RecordTable,
    group_col: &str,
    x_col: &str,
    y_col: &str,
) -> Result<Grouped<'a>> {
    let groups = records.categorical(group_col)?;
    let xs = records.numeric(x_col)?;
    let ys = records.numeric(y_col)?;
    let mut out: Grouped<'a> = BTreeMap::new();
    for ((g, &x), &y) in groups.iter().zip(xs).zip(ys) {
        out.entry(g.as_str()).or_default().push((x, y));
    }
    Ok(out)
}

fn mean(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    (sx / n, sy / n)
}

/// Centred second moments, summed (not divided).
fn centred_sums(points: &[(f64, f64)], (mx, my): (f64, f64)) -> Moments {
    points.iter().fold(Moments::zero(), |m, &(x, y)| {
        let (dx, dy) = (x - mx, y - my);
        Moments {
            cov: m.cov + dx * dy,
            var_x: m.var_x + dx * dx,
            var_y: m.var_y + dy * dy,
        }
    })
}

/// Per-group sizes and means, ordered by group label.
pub fn group_means(
    records: &RecordTable,
    group_col: &str,
    x_col: &str,
    y_col: &str,
) -> Result<Vec<GroupSummary>> {
    Ok(grouped(records, group_col, x_col, y_col)?
        .into_iter()
        .map(|(label, points)| {
            let (mean_x, mean_y) = mean(&points);
            GroupSummary {
                label: label.to_string(),
                n: points.len(),
                mean_x,
                mean_y,
            }
        })
        .collect())
}

pub fn decompose(
    records: &RecordTable,
    group_col: &str,
    x_col: &str,
    y_col: &str,
) -> Result<EcologicalDecomposition> {
    let groups = grouped(records, group_col, x_col, y_col)?;
    let all: Vec<(f64, f64)> = groups.values().flatten().copied().collect();
    if all.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 rows, found {}",
            all.len()
        )));
    }
    let n = all.len() as f64;
    let grand = mean(&all);
    let total = centred_sums(&all, grand);

    let mut within = Moments::zero();
    let mut between = Moments::zero();
    let mut summaries = Vec::with_capacity(groups.len());
    for (label, points) in &groups {
        let m = mean(points);
        let w = points.len() as f64;
        let inner = centred_sums(points, m);
        within.cov += inner.cov;
        within.var_x += inner.var_x;
        within.var_y += inner.var_y;
        let (dx, dy) = (m.0 - grand.0, m.1 - grand.1);
        between.cov += w * dx * dy;
        between.var_x += w * dx * dx;
        between.var_y += w * dy * dy;
        summaries.push(GroupSummary {
            label: label.to_string(),
            n: points.len(),
            mean_x: m.0,
            mean_y: m.1,
        });
    }

    let corr = |m: &Moments| {
        let degenerate = |v: f64, t: f64| v <= 0.0 || v <= RELATIVE_ZERO_VARIANCE * t;
        if degenerate(m.var_x, total.var_x) || degenerate(m.var_y, total.var_y) {
            None
        } else {
            Some((m.cov / (m.var_x.sqrt() * m.var_y.sqrt())).clamp(-1.0, 1.0))
        }
    };

    Ok(EcologicalDecomposition {
        total_cov: total.cov / n,
        between_cov: between.cov / n,
        within_cov: within.cov / n,
        total_corr: corr(&total),
        between_corr: corr(&between),
        within_corr: corr(&within),
        group_summaries: summaries,
        convention: "population".to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DivergenceStatus {
    Divergent,
    NotDivergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignDivergence {
    pub status: DivergenceStatus,
    pub between_corr: f64,
    pub within_corr: f64,
}

/// Flags group-level and individual-level associations of strictly opposite sign.
pub fn sign_divergence_report(d: &EcologicalDecomposition) -> Result<SignDivergence> {
    let between_corr = d
        .between_corr
        .ok_or(Error::UndefinedCorrelation("between"))?;
    let within_corr = d.within_corr.ok_or(Error::UndefinedCorrelation("within"))?;
    let status = if between_corr * within_corr < 0.0 {
        DivergenceStatus::Divergent
    } else {
        DivergenceStatus::NotDivergent
    };
    Ok(SignDivergence {
        status,
        between_corr,
        within_corr,
    })
}
