//! Reversal instances: a seeded generator, an exhaustive search for the
//! smallest two-stratum reversal, and a brute-force classifier that serves as
//! an independent oracle for [`crate::detector`].

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detector::{detect_reversal, Classification, ReversalReport, StratumDirection};
use crate::error::{Error, Result};
use crate::tables::{Counts, Direction, StratifiedComparison, Stratum};

/// Attempts made by [`generate_reversal`] before giving up.
pub const ATTEMPT_BUDGET: u64 = 100_000;

fn check_shape(k: usize, scale: u64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "a reversal needs at least 2 strata, got {k}"
        )));
    }
    if scale < 10 {
        return Err(Error::InvalidParameter(format!(
            "scale must be at least 10, got {scale}"
        )));
    }
    Ok(())
}

fn stratum_label(i: usize) -> String {
    format!("s{}", i + 1)
}

/// A table with `k` strata and counts up to `scale` whose classification is
/// a full reversal. The same arguments always give the same table.
///
/// Tables are built by skewing exposure: the group with the lower rate in
/// every stratum is concentrated in the highest-rate stratum, the other group
/// in the lowest. Half of the attempt budget is spent on that recipe, the rest
/// on plain rejection sampling.
pub fn generate_reversal(k: usize, scale: u64, seed: u64) -> Result<StratifiedComparison> {
    check_shape(k, scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..ATTEMPT_BUDGET {
        let candidate = if attempt < ATTEMPT_BUDGET / 2 {
            skewed_candidate(k, scale, &mut rng)
        } else {
            Some(random_candidate(k, scale, &mut rng))
        };
        let Some(sc) = candidate else { continue };
        if detect_reversal(&sc)?.classification == Classification::FullReversal {
            return Ok(sc);
        }
    }
    Err(Error::GenerationFailed {
        budget: ATTEMPT_BUDGET,
    })
}

fn skewed_candidate(k: usize, scale: u64, rng: &mut ChaCha8Rng) -> Option<StratifiedComparison> {
    let mut levels: Vec<f64> = (0..k).map(|_| rng.gen_range(0.02..0.98)).collect();
    levels.sort_by(f64::total_cmp);
    let gap = rng.gen_range(0.01..0.1);
    let heavy = rng.gen_range(scale * 6 / 10..=scale);
    let light_cap = (heavy / (3 * k as u64)).max(1);

    let mut strata = Vec::with_capacity(k);
    for (i, &level) in levels.iter().enumerate() {
        let light = rng.gen_range(1..=light_cap);
        let low_total = if i == k - 1 { heavy } else { light };
        let high_total = if i == 0 {
            heavy
        } else {
            rng.gen_range(1..=light_cap)
        };
        let mut low_pos = (((level - gap / 2.0).max(0.0)) * low_total as f64).floor() as u64;
        let mut high_pos = ((level + gap / 2.0).min(1.0) * high_total as f64).ceil() as u64;
        high_pos = high_pos.min(high_total);
        // enforce low_pos/low_total < high_pos/high_total
        while u128::from(low_pos) * u128::from(high_total)
            >= u128::from(high_pos) * u128::from(low_total)
        {
            if high_pos < high_total {
                high_pos += 1;
            } else if low_pos > 0 {
                low_pos -= 1;
            } else {
                return None;
            }
        }
        strata.push((
            Counts::new(low_total, low_pos).ok()?,
            Counts::new(high_total, high_pos).ok()?,
        ));
    }

    let low_first = rng.gen_bool(0.5);
    let mut rows: Vec<Stratum> = strata
        .into_iter()
        .enumerate()
        .map(|(i, (low, high))| {
            let (first, second) = if low_first { (low, high) } else { (high, low) };
            Stratum::new(stratum_label(i), first, second)
        })
        .collect();
    rows.shuffle(rng);
    StratifiedComparison::new("A", "B", rows).ok()
}

fn random_candidate(k: usize, scale: u64, rng: &mut ChaCha8Rng) -> StratifiedComparison {
    let cell = |rng: &mut ChaCha8Rng| {
        let total = rng.gen_range(1..=scale);
        Counts::new(total, rng.gen_range(0..=total)).expect("positive within total")
    };
    let rows = (0..k)
        .map(|i| Stratum::new(stratum_label(i), cell(rng), cell(rng)))
        .collect();
    StratifiedComparison::new("A", "B", rows).expect("labels unique and totals positive")
}

/// A uniformly random table: every cell total in `1..=scale`, positives
/// uniform in `0..=total`. Any classification can come out.
pub fn random_comparison(k: usize, scale: u64, seed: u64) -> Result<StratifiedComparison> {
    if k == 0 || scale == 0 {
        return Err(Error::InvalidParameter(
            "k and scale must be positive".into(),
        ));
    }
    Ok(random_candidate(
        k,
        scale,
        &mut ChaCha8Rng::seed_from_u64(seed),
    ))
}

/// The two-stratum full reversal with the fewest subjects, at most
/// `max_total`. Ties on subject count go to the lexicographically smallest
/// `(a, b, c, d, A, B, C, D)`, where `(a, b)` and `(c, d)` are the first
/// group's `(total, positive)` in strata 1 and 2 and capitals the second's.
pub fn minimal_reversal(max_total: u64) -> Result<StratifiedComparison> {
    if max_total < 2 {
        return Err(Error::InvalidParameter(format!(
            "max_total must be at least 2, got {max_total}"
        )));
    }
    for n in 4..=max_total {
        if let Some(t) = first_witness(n) {
            let c = |total, positive| Counts::new(total, positive).expect("enumerated in range");
            return StratifiedComparison::new(
                "first",
                "second",
                vec![
                    Stratum::new("s1", c(t[0], t[1]), c(t[4], t[5])),
                    Stratum::new("s2", c(t[2], t[3]), c(t[6], t[7])),
                ],
            );
        }
    }
    Err(Error::NotFound { max_total })
}

/// Sign of `p1/t1 - p2/t2`.
fn cross(p1: u64, t1: u64, p2: u64, t2: u64) -> i8 {
    let (l, r) = (
        u128::from(p1) * u128::from(t2),
        u128::from(p2) * u128::from(t1),
    );
    (l > r) as i8 - (l < r) as i8
}

fn first_witness(n: u64) -> Option<[u64; 8]> {
    for a in 1..n {
        for b in 0..=a {
            for c in 1..n - a {
                for d in 0..=c {
                    for big_a in 1..n - a - c {
                        let big_c = n - a - c - big_a;
                        for big_b in 0..=big_a {
                            let s1 = cross(b, a, big_b, big_a);
                            if s1 == 0 {
                                continue;
                            }
                            for big_d in 0..=big_c {
                                if cross(d, c, big_d, big_c) == s1
                                    && cross(b + d, a + c, big_b + big_d, big_a + big_c) == -s1
                                {
                                    return Some([a, b, c, d, big_a, big_b, big_c, big_d]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    None
}

/// Same contract as [`detect_reversal`], evaluated directly with
/// arbitrary-precision integers.
pub fn brute_force_classify(sc: &StratifiedComparison) -> Result<ReversalReport> {
    brute_force_classify_with(sc, false)
}

pub fn brute_force_classify_with(
    sc: &StratifiedComparison,
    allow_tied_strata: bool,
) -> Result<ReversalReport> {
    let big = |v: u64| BigInt::from(v);
    let sign = |p1: &BigInt, t1: &BigInt, p2: &BigInt, t2: &BigInt| -> i32 {
        let diff = p1 * t2 - p2 * t1;
        match diff.sign() {
            num_bigint::Sign::Plus => 1,
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
        }
    };
    let as_direction = |s: i32| match s {
        1 => Direction::FirstHigher,
        -1 => Direction::SecondHigher,
        _ => Direction::Tie,
    };

    let mut sums = [big(0), big(0), big(0), big(0)];
    let mut signs = Vec::with_capacity(sc.len());
    for s in sc.strata() {
        if s.first.total() == 0 || s.second.total() == 0 {
            return Err(Error::ZeroTotal(format!(
                "stratum `{}` is missing subjects on one side",
                s.label
            )));
        }
        let cells = [
            big(s.first.positive()),
            big(s.first.total()),
            big(s.second.positive()),
            big(s.second.total()),
        ];
        signs.push(sign(&cells[0], &cells[1], &cells[2], &cells[3]));
        for (acc, v) in sums.iter_mut().zip(cells) {
            *acc += v;
        }
    }
    let pooled = sign(&sums[0], &sums[1], &sums[2], &sums[3]);

    let first_wins = signs.iter().filter(|&&s| s == 1).count();
    let second_wins = signs.iter().filter(|&&s| s == -1).count();
    let ties = signs.len() - first_wins - second_wins;

    let (agreeing, opposing) = match pooled {
        1 => (first_wins, second_wins),
        -1 => (second_wins, first_wins),
        _ => (0, first_wins + second_wins),
    };
    let classification =
        if pooled != 0 && agreeing == 0 && opposing > 0 && (allow_tied_strata || ties == 0) {
            Classification::FullReversal
        } else if opposing == 0 && (pooled != 0 || agreeing == 0) {
            Classification::Consistent
        } else {
            Classification::Mixed
        };

    Ok(ReversalReport {
        stratum_directions: sc
            .strata()
            .iter()
            .zip(&signs)
            .map(|(s, &sg)| StratumDirection {
                stratum: s.label.clone(),
                direction: as_direction(sg),
            })
            .collect(),
        aggregate_direction: as_direction(pooled),
        classification,
        majority_direction: as_direction((first_wins as i64 - second_wins as i64).signum() as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(total: u64, positive: u64) -> Counts {
        Counts::new(total, positive).unwrap()
    }

    #[test]
    fn generator_is_deterministic_and_sound() {
        let a = generate_reversal(2, 80, 7).unwrap();
        let b = generate_reversal(2, 80, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            detect_reversal(&a).unwrap().classification,
            Classification::FullReversal
        );
        assert_eq!(
            brute_force_classify(&a).unwrap().classification,
            Classification::FullReversal
        );
        for cell in a.cells(crate::tables::Side::First) {
            assert!(cell.total() <= 80);
        }
    }

    #[test]
    fn generator_preconditions() {
        assert!(matches!(
            generate_reversal(1, 80, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            generate_reversal(2, 9, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn minimal_reversal_regression() {
        // Frozen from an exhaustive search run outside this crate.
        assert_eq!(minimal_reversal(2), Err(Error::NotFound { max_total: 2 }));
        assert_eq!(minimal_reversal(8), Err(Error::NotFound { max_total: 8 }));
        let w = minimal_reversal(40).unwrap();
        let cells: Vec<_> = w
            .strata()
            .iter()
            .flat_map(|s| [s.first, s.second])
            .collect();
        assert_eq!(cells, vec![c(1, 0), c(4, 1), c(3, 2), c(1, 1)]);
        assert_eq!(w.subject_count(), 9);
        assert_eq!(minimal_reversal(9).unwrap(), w);
        assert_eq!(minimal_reversal(160).unwrap(), w);
    }

    #[test]
    fn brute_force_on_fixtures() {
        let hospital = StratifiedComparison::new(
            "A",
            "B",
            vec![
                Stratum::new("non-healthy", c(60, 36), c(20, 14)),
                Stratum::new("healthy", c(20, 4), c(60, 18)),
            ],
        )
        .unwrap();
        assert_eq!(
            brute_force_classify(&hospital).unwrap(),
            detect_reversal(&hospital).unwrap()
        );
        let err = brute_force_classify(
            &StratifiedComparison::new("a", "b", vec![Stratum::new("s", c(2, 1), c(0, 0))])
                .unwrap(),
        )
        .unwrap_err();
        assert_eq!(err.code(), "zero_total");
    }

    #[test]
    fn tie_handling_matches_detector_contract() {
        // stratum ties with the rest reversed
        let sc = StratifiedComparison::new(
            "a",
            "b",
            vec![
                Stratum::new("tie", c(2, 1), c(4, 2)),
                Stratum::new("low", c(1, 0), c(4, 1)),
                Stratum::new("high", c(3, 2), c(1, 1)),
            ],
        )
        .unwrap();
        for allow in [false, true] {
            let config = crate::detector::DetectorConfig {
                allow_tied_strata: allow,
            };
            assert_eq!(
                brute_force_classify_with(&sc, allow).unwrap(),
                crate::detector::detect_reversal_with(&sc, config).unwrap()
            );
        }
    }
}
