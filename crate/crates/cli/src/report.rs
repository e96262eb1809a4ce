//! Versioned report model shared by the JSON and text outputs.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use simpson_core::detector::{BinStrategy, ReversalReport, ScanEntry, SkipReason, StratumBinning};
use simpson_core::ecological::{EcologicalDecomposition, SignDivergence};
use simpson_core::standardize::StandardizedComparison;
use simpson_core::tables::{pooled_rate, Counts, Direction, Side, StratifiedComparison};

/// Bumped on any incompatible change to the JSON layout.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format_version: u32,
    pub command: String,
    pub input: InputDigest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reversal: Option<ReversalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardized: Option<StandardizedComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub findings: Option<Vec<ScanEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<EcologicalDecomposition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<SignDivergence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<StratifiedComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSummary>,
}

/// What was read: data rows, and for stratified input the strata and groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub rows: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub positive: u64,
    pub total: u64,
    /// Percentage rounded half-up to one decimal.
    pub percent: f64,
}

impl RateCell {
    fn new(c: Counts) -> Option<Self> {
        let r = c.rate().ok()?;
        Some(Self {
            positive: c.positive(),
            total: c.total(),
            percent: r.percent_rounded(),
        })
    }

    fn text(cell: &Option<RateCell>) -> String {
        match cell {
            Some(c) => format!("{}/{} = {:.1}%", c.positive, c.total, c.percent),
            None => "-".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub stratum: String,
    /// First group, then second; `null` for a group with no subjects.
    pub cells: [Option<RateCell>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesTable {
    pub groups: [String; 2],
    pub strata: Vec<RateRow>,
    pub pooled: [Option<RateCell>; 2],
}

impl RatesTable {
    pub fn new(sc: &StratifiedComparison) -> Self {
        let pooled = |side| {
            pooled_rate(sc, side)
                .ok()
                .and_then(|r| RateCell::new(Counts::new(r.denominator(), r.numerator()).ok()?))
        };
        Self {
            groups: [sc.first_label().to_string(), sc.second_label().to_string()],
            strata: sc
                .strata()
                .iter()
                .map(|s| RateRow {
                    stratum: s.label.clone(),
                    cells: [RateCell::new(s.first), RateCell::new(s.second)],
                })
                .collect(),
            pooled: [pooled(Side::First), pooled(Side::Second)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotSummary {
    pub out: String,
    pub bytes: usize,
    pub shows_reversal: bool,
}

impl AnalysisReport {
    pub fn new(command: &str, input: InputDigest) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            input,
            rates: None,
            reversal: None,
            standardized: None,
            findings: None,
            decomposition: None,
            divergence: None,
            table: None,
            plot: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is always serializable");
        s.push('\n');
        s
    }
}

/// ANSI styling, applied only when enabled.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    pub color: bool,
}

impl Style {
    fn paint(self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn bold(self, text: &str) -> String {
        self.paint("1", text)
    }

    fn verdict(self, text: &str) -> String {
        match text {
            "FULL_REVERSAL" | "DIVERGENT" => self.paint("1;31", text),
            "MIXED" => self.paint("1;33", text),
            _ => self.paint("1;32", text),
        }
    }
}

fn direction_text(d: Direction, groups: &[String; 2]) -> String {
    match d {
        Direction::FirstHigher => format!("{} higher", groups[0]),
        Direction::SecondHigher => format!("{} higher", groups[1]),
        Direction::Tie => "tie".into(),
    }
}

fn table(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|i| {
            rows.iter()
                .filter_map(|r| r.get(i))
                .map(|c| c.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in rows {
        let mut line = String::from(" ");
        for (i, cell) in row.iter().enumerate() {
            line.push(' ');
            line.push_str(cell);
            if i + 1 < row.len() {
                line.extend(std::iter::repeat_n(
                    ' ',
                    widths[i] - cell.chars().count() + 1,
                ));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

fn render_rates(
    out: &mut String,
    rates: &RatesTable,
    reversal: Option<&ReversalReport>,
    style: Style,
) {
    let mut rows = vec![vec![
        "stratum".to_string(),
        rates.groups[0].clone(),
        rates.groups[1].clone(),
        "direction".to_string(),
    ]];
    for (i, row) in rates.strata.iter().enumerate() {
        let dir = reversal
            .and_then(|r| r.stratum_directions.get(i))
            .map(|d| direction_text(d.direction, &rates.groups))
            .unwrap_or_default();
        rows.push(vec![
            row.stratum.clone(),
            RateCell::text(&row.cells[0]),
            RateCell::text(&row.cells[1]),
            dir,
        ]);
    }
    rows.push(vec![
        "(pooled)".to_string(),
        RateCell::text(&rates.pooled[0]),
        RateCell::text(&rates.pooled[1]),
        reversal
            .map(|r| direction_text(r.aggregate_direction, &rates.groups))
            .unwrap_or_default(),
    ]);
    let _ = writeln!(
        out,
        "{}",
        style.bold(&format!("{} vs {}", rates.groups[0], rates.groups[1]))
    );
    table(out, &rows);
}

fn render_reversal(out: &mut String, r: &ReversalReport, groups: &[String; 2], style: Style) {
    let _ = writeln!(
        out,
        "classification: {}",
        style.verdict(r.classification.as_str())
    );
    let _ = writeln!(
        out,
        "majority of strata: {}",
        direction_text(r.majority_direction, groups)
    );
}

fn render_standardized(out: &mut String, s: &StandardizedComparison, groups: &[String; 2]) {
    let _ = writeln!(out, "standardized ({} weights):", s.reference);
    let mut rows = Vec::new();
    for w in s.weights.weights() {
        rows.push(vec![
            format!("weight {}", w.stratum),
            format!("{:.6}", w.weight),
        ]);
    }
    rows.push(vec![
        groups[0].clone(),
        format!("{:.4}%", 100.0 * s.rate_first),
    ]);
    rows.push(vec![
        groups[1].clone(),
        format!("{:.4}%", 100.0 * s.rate_second),
    ]);
    table(out, &rows);
    let _ = writeln!(
        out,
        "standardized direction: {}",
        direction_text(s.direction, groups)
    );
}

fn render_findings(out: &mut String, findings: &[ScanEntry], style: Style) {
    let mut rows = vec![vec![
        "covariate".to_string(),
        "result".to_string(),
        "strata".to_string(),
        "detail".to_string(),
    ]];
    for e in findings {
        match e {
            ScanEntry::Finding(f) => {
                let detail = match &f.binning {
                    StratumBinning::Categorical => "categorical".to_string(),
                    StratumBinning::Numeric { strategy, edges } => {
                        let edges: Vec<String> = edges.iter().map(|e| format!("{e}")).collect();
                        let name = match strategy {
                            BinStrategy::Quantile => "quantile",
                            BinStrategy::EqualWidth => "equal-width",
                        };
                        format!("{name} bins, edges {}", edges.join(" | "))
                    }
                };
                rows.push(vec![
                    f.covariate.clone(),
                    f.report.classification.as_str().to_string(),
                    f.comparison.len().to_string(),
                    detail,
                ]);
            }
            ScanEntry::Skipped(s) => {
                let why = match &s.reason {
                    SkipReason::AllStrataFiltered => {
                        "every stratum below the size threshold".to_string()
                    }
                    SkipReason::EmptyStratumSide { stratum } => {
                        format!("stratum `{stratum}` lacks one group")
                    }
                    SkipReason::Failed { code, message } => format!("{code}: {message}"),
                };
                rows.push(vec![s.covariate.clone(), "skipped".into(), "-".into(), why]);
            }
        }
    }
    // colour after layout so escape codes do not count towards widths
    let mut tmp = String::new();
    table(&mut tmp, &rows);
    if style.color {
        for line in tmp.lines() {
            let mut line = line.to_string();
            for v in ["FULL_REVERSAL", "MIXED", "CONSISTENT"] {
                if let Some(pos) = line.find(v) {
                    line.replace_range(pos..pos + v.len(), &style.verdict(v));
                    break;
                }
            }
            out.push_str(&line);
            out.push('\n');
        }
    } else {
        out.push_str(&tmp);
    }
    for e in findings {
        if let ScanEntry::Finding(f) = e {
            out.push('\n');
            let _ = writeln!(
                out,
                "{}",
                style.bold(&format!("stratified by {}", f.covariate))
            );
            let rates = RatesTable::new(&f.comparison);
            render_rates(out, &rates, Some(&f.report), style);
        }
    }
}

fn corr_text(c: Option<f64>) -> String {
    c.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

fn render_decomposition(out: &mut String, d: &EcologicalDecomposition) {
    let _ = writeln!(out, "covariance decomposition ({} moments):", d.convention);
    table(
        out,
        &[
            vec!["".into(), "covariance".into(), "correlation".into()],
            vec![
                "total".into(),
                format!("{:.6}", d.total_cov),
                corr_text(d.total_corr),
            ],
            vec![
                "between".into(),
                format!("{:.6}", d.between_cov),
                corr_text(d.between_corr),
            ],
            vec![
                "within".into(),
                format!("{:.6}", d.within_cov),
                corr_text(d.within_corr),
            ],
        ],
    );
    let mut rows = vec![vec![
        "group".to_string(),
        "n".into(),
        "mean x".into(),
        "mean y".into(),
    ]];
    for g in &d.group_summaries {
        rows.push(vec![
            g.label.clone(),
            g.n.to_string(),
            format!("{:.6}", g.mean_x),
            format!("{:.6}", g.mean_y),
        ]);
    }
    table(out, &rows);
}

/// Human-readable rendering; carries the same verdicts as the JSON form.
pub fn render_text(r: &AnalysisReport, style: Style) -> String {
    let mut out = String::new();
    if let Some(rates) = &r.rates {
        render_rates(&mut out, rates, r.reversal.as_ref(), style);
        out.push('\n');
        if let Some(rev) = &r.reversal {
            render_reversal(&mut out, rev, &rates.groups, style);
        }
        if let Some(s) = &r.standardized {
            if r.reversal.is_some() {
                out.push('\n');
            }
            render_standardized(&mut out, s, &rates.groups);
        }
    }
    if let Some(findings) = &r.findings {
        render_findings(&mut out, findings, style);
    }
    if let Some(d) = &r.decomposition {
        render_decomposition(&mut out, d);
    }
    match (&r.divergence, &r.decomposition) {
        (Some(div), _) => {
            let _ = writeln!(out, "sign divergence: {}", style.verdict(div_str(div)));
        }
        (None, Some(_)) => {
            out.push_str("sign divergence: undefined (a correlation is undefined)\n")
        }
        (None, None) => {}
    }
    if let Some(p) = &r.plot {
        let _ = writeln!(
            out,
            "wrote {} ({} bytes); chords show a reversal: {}",
            p.out, p.bytes, p.shows_reversal
        );
    }
    out
}

fn div_str(d: &SignDivergence) -> &'static str {
    match d.status {
        simpson_core::ecological::DivergenceStatus::Divergent => "DIVERGENT",
        simpson_core::ecological::DivergenceStatus::NotDivergent => "NOT_DIVERGENT",
    }
}
