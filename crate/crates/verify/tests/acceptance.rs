//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always shown; exits non-zero if any criterion
//! fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use simpson_cli::csv_io::{parse_table_csv, write_table_csv};
use simpson_cli::run_with;
use simpson_core::detector::{detect_reversal, Classification, Column, ColumnData, RecordTable};
use simpson_core::ecological::{decompose, sign_divergence_report, DivergenceStatus};
use simpson_core::geometry::{slope_bounds, to_vectors};
use simpson_core::standardize::{
    standardized_comparison, standardized_comparison_with, Reference, WeightVector,
};
use simpson_core::synth::{
    brute_force_classify, generate_reversal, minimal_reversal, random_comparison,
};
use simpson_core::tables::{
    aggregate, compare, rate, Counts, Direction, Side, StratifiedComparison, Stratum,
};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn load(name: &str) -> StratifiedComparison {
    parse_table_csv(&std::fs::read_to_string(data(name)).unwrap(), None).unwrap()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(
        std::iter::once("simpson").chain(args.iter().copied()),
        &mut out,
        &mut err,
        false,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Exact: `positive / total` is within 0.05 percentage points of `tenths / 10` %.
fn within_rounding(c: Counts, tenths: u64) -> bool {
    let (p, t) = (u128::from(c.positive()), u128::from(c.total()));
    (2000 * p).abs_diff(2 * u128::from(tenths) * t) <= t
}

fn c1_hospital() -> Verdict {
    let start = Instant::now();
    let (code, out, err) = cli(&["analyze", &data("hospital.csv"), "--format", "json"]);
    let (tcode, text, _) = cli(&["analyze", &data("hospital.csv")]);
    let elapsed = start.elapsed();
    check(code == 0 && tcode == 0, || format!("exit {code}: {err}"))?;
    let v: Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;

    let sc = load("hospital.csv");
    let exact = [(3, 5), (7, 10), (1, 5), (3, 10)];
    let cells = [
        sc.strata()[0].first,
        sc.strata()[0].second,
        sc.strata()[1].first,
        sc.strata()[1].second,
    ];
    for (c, (n, d)) in cells.iter().zip(exact) {
        let r = rate(*c).unwrap();
        check(
            compare(&r, &simpson_core::tables::Rate::new(n, d).unwrap()) == Direction::Tie,
            || format!("{r} is not exactly {n}/{d}"),
        )?;
    }
    let pooled: Vec<Direction> = [(Side::First, (1, 2)), (Side::Second, (2, 5))]
        .iter()
        .map(|&(side, (n, d))| {
            let r = rate(aggregate(&sc.cells(side)).unwrap()).unwrap();
            compare(&r, &simpson_core::tables::Rate::new(n, d).unwrap())
        })
        .collect();
    check(pooled == [Direction::Tie, Direction::Tie], || {
        "pooled rates are not exactly 1/2 and 2/5".into()
    })?;

    let pct: Vec<f64> = v["rates"]["strata"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|row| {
            row["cells"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| c["percent"].as_f64().unwrap())
        })
        .collect();
    check(pct == [60.0, 70.0, 20.0, 30.0], || {
        format!("stratum percents {pct:?}")
    })?;
    let pooled: Vec<f64> = v["rates"]["pooled"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["percent"].as_f64().unwrap())
        .collect();
    check(pooled == [50.0, 40.0], || {
        format!("pooled percents {pooled:?}")
    })?;
    check(v["reversal"]["classification"] == "FULL_REVERSAL", || {
        format!("classification {}", v["reversal"]["classification"])
    })?;
    check(text.contains("FULL_REVERSAL"), || {
        "text report lacks the verdict".into()
    })?;
    check(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "60/70/20/30 -> 50 vs 40 exact, FULL_REVERSAL, {elapsed:.2?}"
    ))
}

fn c2_berkeley() -> Verdict {
    let sc = load("berkeley.csv");
    check(sc.len() == 6, || format!("{} strata", sc.len()))?;
    // printed percentages in tenths: (men, women) per department
    let printed = [
        (621, 824),
        (600, 680),
        (369, 340),
        (331, 349),
        (277, 239),
        (59, 70),
    ];
    let mut problems = Vec::new();
    for (s, (m, w)) in sc.strata().iter().zip(printed) {
        for (c, tenths, who) in [(s.first, m, "men"), (s.second, w, "women")] {
            if !within_rounding(c, tenths) {
                problems.push(format!(
                    "{} {who}: {}/{} = {:.2}% vs printed {:.1}%",
                    s.label,
                    c.positive(),
                    c.total(),
                    100.0 * c.positive() as f64 / c.total() as f64,
                    tenths as f64 / 10.0
                ));
            }
        }
    }
    let (men, women) = (
        aggregate(&sc.cells(Side::First)).unwrap(),
        aggregate(&sc.cells(Side::Second)).unwrap(),
    );
    if !within_rounding(men, 445) || !within_rounding(women, 304) {
        problems.push("totals differ from 44.5% / 30.4%".into());
    }
    let report = detect_reversal(&sc).unwrap();
    use Direction::{FirstHigher as M, SecondHigher as W};
    if report.directions() != [W, W, M, W, M, W] {
        problems.push(format!("directions {:?}", report.directions()));
    }
    if report.classification != Classification::Mixed || report.aggregate_direction != M {
        problems.push(format!(
            "{:?} / aggregate {:?}",
            report.classification, report.aggregate_direction
        ));
    }
    if problems.is_empty() {
        Ok(
            "12 rates within 0.05 pts, totals 44.5 vs 30.4, W W M W M W, MIXED favouring men"
                .into(),
        )
    } else {
        Err(problems.join("; "))
    }
}

fn c3_standardization() -> Verdict {
    let s = standardized_comparison(&load("berkeley.csv"), Reference::Combined).unwrap();
    // frozen from an independent exact recomputation of the table
    let (men, women) = (0.38731858268942226, 0.4299553804607252);
    check(
        s.rate_second > s.rate_first && s.direction == Direction::SecondHigher,
        || format!("men {} women {}", s.rate_first, s.rate_second),
    )?;
    check(
        (s.rate_first - men).abs() <= 1e-12 && (s.rate_second - women).abs() <= 1e-12,
        || {
            format!(
                "men {} women {} differ from the frozen values",
                s.rate_first, s.rate_second
            )
        },
    )?;
    let (code, out, _) = cli(&[
        "analyze",
        &data("berkeley.csv"),
        "--standardize",
        "combined",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_str(&out).map_err(|e| format!("exit {code}: {e}"))?;
    check(
        v["standardized"]["direction"] == "SECOND_HIGHER"
            && v["reversal"]["classification"] == "MIXED",
        || "CLI report disagrees".into(),
    )?;
    Ok(format!(
        "men {:.4}% < women {:.4}%",
        100.0 * s.rate_first,
        100.0 * s.rate_second
    ))
}

fn random_counts(rng: &mut ChaCha8Rng, max: u64) -> Counts {
    let t = rng.gen_range(1..=max);
    Counts::new(t, rng.gen_range(0..=t)).unwrap()
}

fn c4_common_weight_dominance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut tested = 0;
    let mut violations = 0;
    while tested < 1000 {
        let k = rng.gen_range(1..=6);
        let mut strata = Vec::new();
        for i in 0..k {
            let (a, b) = (random_counts(&mut rng, 500), random_counts(&mut rng, 500));
            let (lo, hi) = match compare(&rate(a).unwrap(), &rate(b).unwrap()) {
                Direction::SecondHigher => (a, b),
                Direction::FirstHigher => (b, a),
                Direction::Tie => break,
            };
            strata.push(Stratum::new(format!("s{i}"), lo, hi));
        }
        if strata.len() != k {
            continue;
        }
        let sc = StratifiedComparison::new("low", "high", strata).unwrap();
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(1..1000) as f64).collect();
        let sum: f64 = raw.iter().sum();
        let weights = WeightVector::from_pairs(
            sc.strata()
                .iter()
                .zip(&raw)
                .map(|(s, w)| (s.label.clone(), w / sum)),
        );
        let Ok(weights) = weights else { continue };
        let reference = standardized_comparison_with(&sc, Reference::Combined, weights).unwrap();
        let own = [
            Reference::Combined,
            Reference::First,
            Reference::Second,
            Reference::Equal,
        ]
        .map(|r| standardized_comparison(&sc, r).unwrap().direction);
        if reference.direction != Direction::SecondHigher
            || own.iter().any(|d| *d != Direction::SecondHigher)
        {
            violations += 1;
        }
        tested += 1;
    }
    check(violations == 0, || format!("{violations} violations"))?;
    Ok(format!(
        "{tested} strictly dominating tables, 0 violations (random and built-in weights)"
    ))
}

fn c5_mediant() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=8);
        let cells: Vec<Counts> = (0..k).map(|_| random_counts(&mut rng, 1000)).collect();
        let b = slope_bounds(&cells).unwrap();
        let inside = compare(&b.aggregate, &b.min) != Direction::SecondHigher
            && compare(&b.aggregate, &b.max) != Direction::FirstHigher;
        let strict = compare(&b.min, &b.max) == Direction::Tie
            || (compare(&b.aggregate, &b.min) == Direction::FirstHigher
                && compare(&b.aggregate, &b.max) == Direction::SecondHigher);
        if !(inside && strict) {
            violations += 1;
        }
    }
    check(violations == 0, || format!("{violations} violations"))?;
    Ok("10000 groups, 0 violations".into())
}

fn c6_differential() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut disagreements = Vec::new();
    let mut instances = Vec::new();
    for i in 0..10_000u64 {
        let k = rng.gen_range(2..=6);
        let scale = rng.gen_range(10..=500);
        instances.push(generate_reversal(k, scale, i).map_err(|e| format!("seed {i}: {e}"))?);
    }
    let generated = instances.len();
    // unconstrained tables reach MIXED and CONSISTENT too
    for i in 0..10_000u64 {
        let k = rng.gen_range(1..=6);
        let scale = rng.gen_range(10..=60);
        instances.push(random_comparison(k, scale, i).unwrap());
    }
    instances.push(load("hospital.csv"));
    instances.push(load("berkeley.csv"));
    for (i, sc) in instances.iter().enumerate() {
        let fast = detect_reversal(sc);
        let slow = brute_force_classify(sc);
        if fast != slow {
            disagreements.push(i);
        }
    }
    let elapsed = start.elapsed();
    check(disagreements.is_empty(), || {
        format!(
            "disagreements at {:?}",
            &disagreements[..disagreements.len().min(10)]
        )
    })?;
    check(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{generated} generated + 10000 random + 2 fixtures, 0 disagreements, {elapsed:.2?}"
    ))
}

fn c7_generator() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..1000u64 {
        let seed = rng.gen::<u64>();
        let k = rng.gen_range(2..=8);
        let scale = rng.gen_range(10..=10_000);
        let sc = generate_reversal(k, scale, seed).map_err(|e| format!("#{i}: {e}"))?;
        let c = detect_reversal(&sc).unwrap().classification;
        check(c == Classification::FullReversal, || {
            format!("#{i} (seed {seed}) is {c}")
        })?;
        let again = generate_reversal(k, scale, seed).unwrap();
        check(write_table_csv(&sc) == write_table_csv(&again), || {
            format!("seed {seed} not reproducible")
        })?;
    }
    let (_, a, _) = cli(&["generate", "--strata", "3", "--seed", "42"]);
    let (_, b, _) = cli(&["generate", "--strata", "3", "--seed", "42"]);
    check(!a.is_empty() && a == b, || {
        "CLI generation not reproducible".into()
    })?;
    Ok("1000 outputs FULL_REVERSAL, same seed byte-identical".into())
}

fn c8_minimal() -> Verdict {
    let sc = minimal_reversal(160).map_err(|e| e.to_string())?;
    let again = minimal_reversal(160).unwrap();
    check(sc == again, || "not stable".into())?;
    let n = sc.subject_count();
    check(n < 160, || format!("{n} subjects"))?;
    // frozen from the exhaustive search
    let c = |t, p| Counts::new(t, p).unwrap();
    let expected = StratifiedComparison::new(
        "first",
        "second",
        vec![
            Stratum::new("s1", c(1, 0), c(4, 1)),
            Stratum::new("s2", c(3, 2), c(1, 1)),
        ],
    )
    .unwrap();
    check(sc == expected, || {
        format!("unexpected witness\n{}", write_table_csv(&sc))
    })?;
    check(
        detect_reversal(&sc).unwrap().classification == Classification::FullReversal,
        || "not a reversal".into(),
    )?;
    check(minimal_reversal(n as u64 - 1).is_err(), || {
        "a smaller witness exists".into()
    })?;
    Ok(format!("{n} subjects: 0/1, 2/3 vs 1/4, 1/1"))
}

fn c9_ecological() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..200);
        let g = rng.gen_range(1..8);
        let groups: Vec<String> = (0..n)
            .map(|_| format!("g{}", rng.gen_range(0..g)))
            .collect();
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let t = RecordTable::new(vec![
            Column::new("g", ColumnData::Categorical(groups)),
            Column::new("x", ColumnData::Numeric(xs)),
            Column::new("y", ColumnData::Numeric(ys)),
        ])
        .unwrap();
        let d = decompose(&t, "g", "x", "y").unwrap();
        worst = worst.max((d.total_cov - d.between_cov - d.within_cov).abs());
    }
    check(worst <= 1e-9, || format!("identity off by {worst:e}"))?;

    let text = std::fs::read_to_string(data("robinson_synthetic.csv")).unwrap();
    let schema = simpson_cli::csv_io::RecordSchema {
        numeric: vec!["immigrant_share".into(), "literacy".into()],
        ..Default::default()
    };
    let t = simpson_cli::csv_io::parse_records_csv(&text, &schema).unwrap();
    let d = decompose(&t, "region", "immigrant_share", "literacy").unwrap();
    let (within, between) = (
        d.within_corr.unwrap_or(f64::NAN),
        d.between_corr.unwrap_or(f64::NAN),
    );
    check(within < 0.0 && 0.0 < between, || {
        format!("within {within}, between {between}")
    })?;
    let status = sign_divergence_report(&d)
        .map_err(|e| e.to_string())?
        .status;
    check(status == DivergenceStatus::Divergent, || {
        format!("{status:?}")
    })?;
    check(
        (d.total_cov - 8.2).abs() <= 1e-9
            && (d.between_cov - 19.0).abs() <= 1e-9
            && (d.within_cov + 10.8).abs() <= 1e-9,
        || {
            format!(
                "covariances {} {} {}",
                d.total_cov, d.between_cov, d.within_cov
            )
        },
    )?;
    Ok(format!("1000 datasets, max residual {worst:.1e}; within {within:.4} < 0 < between {between:.4}, DIVERGENT"))
}

fn c10_geometry() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut checked = 0;
    for i in 0..1000u64 {
        let k = rng.gen_range(2..=6);
        let generated = generate_reversal(k, rng.gen_range(10..=1000), i).unwrap();
        let random = random_comparison(rng.gen_range(1..=6), rng.gen_range(10..=40), i).unwrap();
        for sc in [generated, random] {
            let full = detect_reversal(&sc).unwrap().classification == Classification::FullReversal;
            let chords = to_vectors(&sc).unwrap().shows_reversal().unwrap();
            check(full == chords, || {
                format!("instance {i}: detector {full}, chords {chords}")
            })?;
            checked += 1;
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let paths = [dir.path().join("a.svg"), dir.path().join("b.svg")];
    for p in &paths {
        let (code, _, err) = cli(&["plot", &data("hospital.csv"), "--out", p.to_str().unwrap()]);
        check(code == 0, || err)?;
    }
    let a = std::fs::read(&paths[0]).unwrap();
    check(a == std::fs::read(&paths[1]).unwrap(), || {
        "plot bytes differ".into()
    })?;
    Ok(format!(
        "{checked} diagrams agree (1000 generated), plot {} bytes identical",
        a.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("hospital fixture", c1_hospital),
        ("berkeley fixture", c2_berkeley),
        ("standardization", c3_standardization),
        ("common-weight dominance", c4_common_weight_dominance),
        ("mediant", c5_mediant),
        ("differential oracle", c6_differential),
        ("generator soundness", c7_generator),
        ("minimal witness", c8_minimal),
        ("ecological decomposition", c9_ecological),
        ("geometry agreement", c10_geometry),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(detail) => println!("PASS criterion {:>2} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({name}): {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
