//! The `simpson` command line: read CSV input, run one analysis, print a
//! text or JSON report.
//!
//! Exit codes: 0 success, 2 bad input (unreadable file, malformed CSV,
//! invalid flags), 3 the input is well formed but the analysis cannot run on
//! it. Diagnostics go to stderr as `error:<code>: <message>`.

pub mod csv_io;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use simpson_core::detector::{
    detect_reversal_with, scan, BinStrategy, Binning, DetectorConfig, RecordTable, ScanConfig,
};
use simpson_core::ecological::{decompose, sign_divergence_report};
use simpson_core::geometry::{render_svg, to_vectors, RenderOptions};
use simpson_core::standardize::{standardized_comparison, Reference};
use simpson_core::synth::{generate_reversal, minimal_reversal};
use simpson_core::tables::StratifiedComparison;

use csv_io::{
    parse_records_csv, parse_table_csv, write_table_csv, CsvError, Lexicon, RecordSchema,
};
use report::{render_text, AnalysisReport, InputDigest, PlotSummary, RatesTable, Style};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ANALYSIS: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "simpson",
    version,
    about = "Detect and explain aggregation reversals in stratified data"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReferenceArg {
    Combined,
    First,
    Second,
    Equal,
}

impl From<ReferenceArg> for Reference {
    fn from(r: ReferenceArg) -> Self {
        match r {
            ReferenceArg::Combined => Reference::Combined,
            ReferenceArg::First => Reference::First,
            ReferenceArg::Second => Reference::Second,
            ReferenceArg::Equal => Reference::Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Quantile,
    EqualWidth,
}

#[derive(Debug, Args)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct GroupPair {
    /// Compare exactly these two groups, in this order (`A,B`).
    #[arg(long, value_name = "A,B", value_parser = parse_pair)]
    groups: Option<(String, String)>,
}

#[derive(Debug, Args)]
struct RecordFlags {
    /// Column holding the binary outcome.
    #[arg(long)]
    outcome: String,
    /// Columns to parse as numbers (comma separated).
    #[arg(long, value_delimiter = ',')]
    numeric: Vec<String>,
    /// Spellings of a positive outcome (comma separated, case-insensitive).
    #[arg(long, value_delimiter = ',', default_value = "1,true,yes")]
    true_values: Vec<String>,
    /// Spellings of a negative outcome.
    #[arg(long, value_delimiter = ',', default_value = "0,false,no")]
    false_values: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rates, directions and verdict for a stratified table.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        pair: GroupPair,
        /// Also compare directly standardized rates.
        #[arg(long, value_enum)]
        standardize: Option<ReferenceArg>,
        /// Tied strata do not block a full reversal.
        #[arg(long)]
        allow_tied_strata: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Try each candidate column of a record file as the stratifying variable.
    Scan {
        file: PathBuf,
        /// Column naming the two groups.
        #[arg(long)]
        group: String,
        #[command(flatten)]
        records: RecordFlags,
        /// Columns to try (comma separated); default: every other column.
        #[arg(long, value_delimiter = ',')]
        candidates: Vec<String>,
        #[arg(long, value_enum, default_value_t = StrategyArg::Quantile)]
        binning: StrategyArg,
        /// Bins per numeric covariate.
        #[arg(long, default_value_t = 4)]
        bins: usize,
        /// Drop strata with fewer subjects than this.
        #[arg(long, default_value_t = 1)]
        min_stratum_size: u64,
        #[command(flatten)]
        pair: GroupPair,
        #[arg(long)]
        allow_tied_strata: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Directly standardized rates of a stratified table.
    Standardize {
        file: PathBuf,
        #[command(flatten)]
        pair: GroupPair,
        #[arg(long, value_enum, default_value_t = ReferenceArg::Combined)]
        reference: ReferenceArg,
        #[command(flatten)]
        common: Common,
    },
    /// Split the covariance of two numeric columns into between- and
    /// within-group parts.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        group: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[command(flatten)]
        common: Common,
    },
    /// Emit a table that shows a full reversal (CSV in text mode).
    Generate {
        /// Number of strata.
        #[arg(long, default_value_t = 2)]
        strata: usize,
        /// Largest cell total.
        #[arg(long, default_value_t = 100)]
        scale: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the smallest reversal instead of a random one.
        #[arg(long)]
        minimal: bool,
        /// Subject budget for `--minimal`.
        #[arg(long, default_value_t = 160)]
        max_total: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Draw the vector diagram of a stratified table as SVG.
    Plot {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pair: GroupPair,
        /// Draw only the fan of stratum chords from the origin.
        #[arg(long)]
        no_completion: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() && a != b && !b.contains(',') => {
            Ok((a.to_string(), b.to_string()))
        }
        _ => Err("expected two distinct group names as `A,B`".into()),
    }
}

/// A failed run: exit code plus the diagnostic.
#[derive(Debug)]
struct Failure {
    exit: i32,
    code: String,
    message: String,
}

impl Failure {
    fn input(code: &str, message: impl Into<String>) -> Self {
        Self {
            exit: EXIT_INPUT,
            code: code.to_string(),
            message: message.into(),
        }
    }
}

impl From<CsvError> for Failure {
    fn from(e: CsvError) -> Self {
        Failure::input(e.code(), e.to_string())
    }
}

/// Errors raised by the analysis itself, after input was accepted.
fn analysis(e: simpson_core::Error) -> Failure {
    Failure {
        exit: EXIT_ANALYSIS,
        code: e.code().to_string(),
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))
}

fn read_table(path: &Path, pair: &GroupPair) -> Result<(StratifiedComparison, u64), Failure> {
    let text = read(path)?;
    let groups = pair.groups.as_ref().map(|(a, b)| (a.as_str(), b.as_str()));
    let sc = parse_table_csv(&text, groups)?;
    let rows = text.lines().skip(1).filter(|l| !l.is_empty()).count() as u64;
    Ok((sc, rows))
}

fn table_digest(sc: &StratifiedComparison, rows: u64) -> InputDigest {
    InputDigest {
        rows,
        strata: Some(sc.len()),
        groups: vec![sc.first_label().to_string(), sc.second_label().to_string()],
    }
}

fn record_digest(t: &RecordTable) -> InputDigest {
    InputDigest {
        rows: t.len() as u64,
        strata: None,
        groups: Vec::new(),
    }
}

enum Output {
    Report(Box<AnalysisReport>, Format),
    /// Already rendered, printed verbatim.
    Raw(String),
}

fn execute(cli: Cli) -> Result<Output, Failure> {
    match cli.command {
        Command::Analyze {
            file,
            pair,
            standardize,
            allow_tied_strata,
            common,
        } => {
            let (sc, rows) = read_table(&file, &pair)?;
            let mut r = AnalysisReport::new("analyze", table_digest(&sc, rows));
            r.rates = Some(RatesTable::new(&sc));
            r.reversal = Some(
                detect_reversal_with(&sc, DetectorConfig { allow_tied_strata })
                    .map_err(analysis)?,
            );
            if let Some(reference) = standardize {
                r.standardized =
                    Some(standardized_comparison(&sc, reference.into()).map_err(analysis)?);
            }
            Ok(Output::Report(Box::new(r), common.format))
        }
        Command::Scan {
            file,
            group,
            records,
            candidates,
            binning,
            bins,
            min_stratum_size,
            pair,
            allow_tied_strata,
            common,
        } => {
            let text = read(&file)?;
            let schema = RecordSchema {
                outcome: Some(records.outcome.clone()),
                numeric: records.numeric,
                required: std::iter::once(group.clone())
                    .chain(candidates.iter().cloned())
                    .collect(),
                lexicon: Lexicon {
                    truthy: records.true_values,
                    falsy: records.false_values,
                },
            };
            let mut table = parse_records_csv(&text, &schema)?;
            if let Some((a, b)) = &pair.groups {
                for g in [a, b] {
                    let present = table.distinct(&group).map_err(analysis)?;
                    if !present.contains(g) {
                        return Err(CsvError::UnknownGroup(g.clone()).into());
                    }
                }
                table = table.retain_values(&group, &[a, b]).map_err(analysis)?;
            }
            let candidates = if candidates.is_empty() {
                table
                    .column_names()
                    .filter(|c| *c != group && *c != records.outcome)
                    .map(str::to_string)
                    .collect()
            } else {
                candidates
            };
            let config = ScanConfig {
                binning: Binning {
                    strategy: match binning {
                        StrategyArg::Quantile => BinStrategy::Quantile,
                        StrategyArg::EqualWidth => BinStrategy::EqualWidth,
                    },
                    bins,
                },
                min_stratum_size,
                allow_tied_strata,
            };
            let findings =
                scan(&table, &group, &records.outcome, &candidates, &config).map_err(analysis)?;
            let mut r = AnalysisReport::new("scan", record_digest(&table));
            r.findings = Some(findings);
            Ok(Output::Report(Box::new(r), common.format))
        }
        Command::Standardize {
            file,
            pair,
            reference,
            common,
        } => {
            let (sc, rows) = read_table(&file, &pair)?;
            let mut r = AnalysisReport::new("standardize", table_digest(&sc, rows));
            r.rates = Some(RatesTable::new(&sc));
            r.standardized =
                Some(standardized_comparison(&sc, reference.into()).map_err(analysis)?);
            Ok(Output::Report(Box::new(r), common.format))
        }
        Command::Decompose {
            file,
            group,
            x,
            y,
            common,
        } => {
            let text = read(&file)?;
            let table = parse_records_csv(&text, &numeric_schema(&group, &x, &y))?;
            let d = decompose(&table, &group, &x, &y).map_err(analysis)?;
            let mut r = AnalysisReport::new("decompose", record_digest(&table));
            r.divergence = sign_divergence_report(&d).ok();
            r.decomposition = Some(d);
            Ok(Output::Report(Box::new(r), common.format))
        }
        Command::Generate {
            strata,
            scale,
            seed,
            minimal,
            max_total,
            common,
        } => {
            let sc = if minimal {
                minimal_reversal(max_total)
            } else {
                generate_reversal(strata, scale, seed)
            }
            .map_err(analysis)?;
            match common.format {
                Format::Text => Ok(Output::Raw(write_table_csv(&sc))),
                Format::Json => {
                    let mut r =
                        AnalysisReport::new("generate", table_digest(&sc, 2 * sc.len() as u64));
                    r.reversal = Some(
                        detect_reversal_with(&sc, DetectorConfig::default()).map_err(analysis)?,
                    );
                    r.table = Some(sc);
                    Ok(Output::Report(Box::new(r), Format::Json))
                }
            }
        }
        Command::Plot {
            file,
            out,
            pair,
            no_completion,
            common,
        } => {
            let (sc, rows) = read_table(&file, &pair)?;
            let diagram = to_vectors(&sc).map_err(analysis)?;
            let opts = RenderOptions {
                completion_chords: !no_completion,
                ..RenderOptions::default()
            };
            let svg = render_svg(&diagram, &opts).map_err(analysis)?;
            std::fs::write(&out, &svg)
                .map_err(|e| Failure::input("io", format!("{}: {e}", out.display())))?;
            let mut r = AnalysisReport::new("plot", table_digest(&sc, rows));
            r.plot = Some(PlotSummary {
                out: out.display().to_string(),
                bytes: svg.len(),
                shows_reversal: diagram.shows_reversal().map_err(analysis)?,
            });
            Ok(Output::Report(Box::new(r), common.format))
        }
    }
}

fn numeric_schema(group: &str, x: &str, y: &str) -> RecordSchema {
    RecordSchema {
        outcome: None,
        numeric: vec![x.to_string(), y.to_string()],
        required: vec![group.to_string()],
        lexicon: Lexicon::default(),
    }
}

/// Run with explicit streams. `color` enables ANSI styling of text reports.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let exit = if e.use_stderr() {
                let rendered = e.to_string();
                let first = rendered.lines().next().unwrap_or_default();
                let _ = writeln!(
                    stderr,
                    "error:usage: {}",
                    first.trim_start_matches("error: ")
                );
                let _ = write!(
                    stderr,
                    "{}",
                    rendered
                        .lines()
                        .skip(1)
                        .map(|l| format!("{l}\n"))
                        .collect::<String>()
                );
                EXIT_INPUT
            } else {
                // --help and --version
                let _ = write!(stdout, "{}", e.render());
                0
            };
            return exit;
        }
    };
    match execute(cli) {
        Ok(Output::Report(r, Format::Json)) => emit(stdout, stderr, &r.to_json()),
        Ok(Output::Report(r, Format::Text)) => {
            emit(stdout, stderr, &render_text(&r, Style { color }))
        }
        Ok(Output::Raw(s)) => emit(stdout, stderr, &s),
        Err(f) => {
            let _ = writeln!(stderr, "error:{}: {}", f.code, f.message);
            f.exit
        }
    }
}

fn emit(stdout: &mut dyn Write, stderr: &mut dyn Write, text: &str) -> i32 {
    match stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
    {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error:io: {e}");
            EXIT_INPUT
        }
    }
}
