//! Corpus-level counters and rates.
//!
//! Rates are exact rationals so the identity
//! `overall_misuse = misuse_rate * compilation_rate` can be checked without
//! rounding. Rendering to percent strings happens only at the edges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SampleResult;
use crate::rules::VerdictStatus;

/// Reduced non-negative rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rat {
    pub num: u64,
    pub den: u64,
}

impl Rat {
    pub fn new(num: u64, den: u64) -> Rat {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den);
        Rat { num: num / g, den: den / g }
    }

    pub fn zero() -> Rat {
        Rat { num: 0, den: 1 }
    }

    pub fn mul(self, other: Rat) -> Rat {
        // Cross-reduce before multiplying to stay within u64.
        let g1 = gcd(self.num, other.den);
        let g2 = gcd(other.num, self.den);
        Rat::new(
            (self.num / g1) * (other.num / g2),
            (self.den / g2) * (other.den / g1),
        )
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Percentage with two decimals, half-up: 3/7 renders as "42.86%".
    pub fn percent(self) -> String {
        let scaled = (self.num as u128 * 10_000 + self.den as u128 / 2) / self.den as u128;
        format!("{}.{:02}%", scaled / 100, scaled % 100)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Three-bucket grouping used by the metrics. `api-not-used` joins the pass
/// bucket: code that avoids the risky API commits no misuse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bucket {
    Misuse,
    Pass,
    NonCompilable,
}

pub fn bucket_of(status: VerdictStatus) -> Bucket {
    match status {
        VerdictStatus::Misuse => Bucket::Misuse,
        VerdictStatus::Pass | VerdictStatus::ApiNotUsed => Bucket::Pass,
        VerdictStatus::NonParsable => Bucket::NonCompilable,
    }
}

/// Counters and rates for one API group. `n_api_not_used` is informational;
/// those samples are already inside `n_pass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiCounters {
    pub n_misuse: usize,
    pub n_pass: usize,
    pub n_noncomp: usize,
    pub n_api_not_used: usize,
    /// `None` when no sample compiled (the undefined marker).
    pub misuse_rate: Option<Rat>,
    pub compilation_rate: Rat,
    pub overall_misuse: Rat,
}

impl ApiCounters {
    fn from_counts(n_misuse: usize, n_pass: usize, n_noncomp: usize, n_api_not_used: usize) -> Self {
        let n_total = n_misuse + n_pass + n_noncomp;
        let compilable = n_misuse + n_pass;
        ApiCounters {
            n_misuse,
            n_pass,
            n_noncomp,
            n_api_not_used,
            misuse_rate: (compilable > 0)
                .then(|| Rat::new(n_misuse as u64, compilable as u64)),
            compilation_rate: if n_total > 0 {
                Rat::new(compilable as u64, n_total as u64)
            } else {
                Rat::zero()
            },
            overall_misuse: if n_total > 0 {
                Rat::new(n_misuse as u64, n_total as u64)
            } else {
                Rat::zero()
            },
        }
    }

    pub fn n_total(&self) -> usize {
        self.n_misuse + self.n_pass + self.n_noncomp
    }
}

/// Whole-corpus metrics. Invariants: the buckets partition the corpus, and
/// `overall_misuse == misuse_rate * compilation_rate` exactly whenever the
/// misuse rate is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub n_total: usize,
    pub n_misuse: usize,
    pub n_pass: usize,
    pub n_noncomp: usize,
    pub misuse_rate: Option<Rat>,
    pub compilation_rate: Rat,
    pub overall_misuse: Rat,
    pub per_api: BTreeMap<String, ApiCounters>,
}

#[derive(Debug, Error)]
#[error("no results to compute metrics over")]
pub struct EmptyResults;

/// Metrics from already-computed counts; rates follow the three formulas.
pub fn metrics_from_counts(n_misuse: usize, n_pass: usize, n_noncomp: usize) -> EvalMetrics {
    let totals = ApiCounters::from_counts(n_misuse, n_pass, n_noncomp, 0);
    EvalMetrics {
        n_total: totals.n_total(),
        n_misuse,
        n_pass,
        n_noncomp,
        misuse_rate: totals.misuse_rate,
        compilation_rate: totals.compilation_rate,
        overall_misuse: totals.overall_misuse,
        per_api: BTreeMap::new(),
    }
}

/// Count the results into buckets and derive all rates, globally and per
/// API.
pub fn compute_metrics(results: &[SampleResult]) -> Result<EvalMetrics, EmptyResults> {
    if results.is_empty() {
        return Err(EmptyResults);
    }
    let mut global = [0usize; 3];
    let mut per_api_raw: BTreeMap<String, [usize; 4]> = BTreeMap::new();
    for r in results {
        let counts = per_api_raw.entry(r.api.clone()).or_default();
        match bucket_of(r.verdict.status) {
            Bucket::Misuse => {
                global[0] += 1;
                counts[0] += 1;
            }
            Bucket::Pass => {
                global[1] += 1;
                counts[1] += 1;
                if r.verdict.status == VerdictStatus::ApiNotUsed {
                    counts[3] += 1;
                }
            }
            Bucket::NonCompilable => {
                global[2] += 1;
                counts[2] += 1;
            }
        }
    }
    let mut metrics = metrics_from_counts(global[0], global[1], global[2]);
    metrics.per_api = per_api_raw
        .into_iter()
        .map(|(api, c)| (api, ApiCounters::from_counts(c[0], c[1], c[2], c[3])))
        .collect();
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_buckets_3_4_3() {
        let m = metrics_from_counts(3, 4, 3);
        assert_eq!(m.n_total, 10);
        assert_eq!(m.misuse_rate, Some(Rat::new(3, 7)));
        assert_eq!(m.compilation_rate, Rat::new(7, 10));
        assert_eq!(m.overall_misuse, Rat::new(3, 10));
        assert_eq!(m.misuse_rate.unwrap().percent(), "42.86%");
        assert_eq!(m.compilation_rate.percent(), "70.00%");
        assert_eq!(m.overall_misuse.percent(), "30.00%");
    }

    #[test]
    fn gpt35_zero_shot_row_reproduced() {
        // 602 misuses and 354 passes among 1208 questions give the published
        // 62.97% / 79.14% / 49.83% row at two decimals.
        let m = metrics_from_counts(602, 354, 252);
        assert_eq!(m.n_total, 1208);
        assert_eq!(m.misuse_rate.unwrap().percent(), "62.97%");
        assert_eq!(m.compilation_rate.percent(), "79.14%");
        assert_eq!(m.overall_misuse.percent(), "49.83%");
        assert_eq!(
            m.misuse_rate.unwrap().mul(m.compilation_rate),
            m.overall_misuse
        );
    }

    #[test]
    fn all_non_parsable_has_undefined_misuse_rate() {
        let m = metrics_from_counts(0, 0, 5);
        assert_eq!(m.misuse_rate, None);
        assert_eq!(m.compilation_rate, Rat::zero());
        assert_eq!(m.overall_misuse, Rat::zero());
    }

    #[test]
    fn identity_holds_exactly_on_many_counts() {
        for misuse in 0..12usize {
            for pass in 0..12usize {
                for noncomp in 0..6usize {
                    if misuse + pass + noncomp == 0 {
                        continue;
                    }
                    let m = metrics_from_counts(misuse, pass, noncomp);
                    assert_eq!(m.n_misuse + m.n_pass + m.n_noncomp, m.n_total);
                    if let Some(rate) = m.misuse_rate {
                        assert_eq!(rate.mul(m.compilation_rate), m.overall_misuse);
                    }
                }
            }
        }
    }

    #[test]
    fn rational_reduction_and_percent_rounding() {
        assert_eq!(Rat::new(6, 8), Rat::new(3, 4));
        assert_eq!(Rat::new(0, 7), Rat::zero());
        assert_eq!(Rat::new(1, 3).percent(), "33.33%");
        assert_eq!(Rat::new(2, 3).percent(), "66.67%");
        assert_eq!(Rat::new(1, 1).percent(), "100.00%");
        // Half-up at the second decimal: 1/800 = 0.125% -> 0.13%.
        assert_eq!(Rat::new(1, 800).percent(), "0.13%");
    }

    #[test]
    fn large_counts_do_not_overflow() {
        let big = u32::MAX as usize;
        let m = metrics_from_counts(big, big, big);
        assert!(m.misuse_rate.unwrap().percent().starts_with("50.00"));
    }
}
