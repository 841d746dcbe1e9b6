//! Report rendering: canonical JSON, CSV and markdown.
//!
//! JSON is the machine format: fixed field order, sorted maps, byte-stable
//! for identical inputs, and loadable back without loss. CSV carries one row
//! per API plus a totals row. Markdown renders the headline metrics and the
//! per-API misuse-rate table. Undefined rates render as "—".

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ApiCounters, EvalMetrics, Rat, SampleResult};

pub const UNDEFINED_RATE: &str = "—";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// Exact rational plus its rendered percent, as stored in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub num: u64,
    pub den: u64,
    pub percent: String,
}

impl From<Rat> for RateEntry {
    fn from(r: Rat) -> Self {
        RateEntry { num: r.num, den: r.den, percent: r.percent() }
    }
}

impl RateEntry {
    pub fn rat(&self) -> Rat {
        Rat::new(self.num, self.den)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSection {
    pub n_total: usize,
    pub n_misuse: usize,
    pub n_pass: usize,
    pub n_noncomp: usize,
    /// `null` when no sample compiled.
    pub misuse_rate: Option<RateEntry>,
    pub compilation_rate: RateEntry,
    pub overall_misuse: RateEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiSection {
    pub n_misuse: usize,
    pub n_pass: usize,
    pub n_noncomp: usize,
    pub n_api_not_used: usize,
    pub misuse_rate: Option<RateEntry>,
    pub compilation_rate: RateEntry,
    pub overall_misuse: RateEntry,
}

impl From<&ApiCounters> for ApiSection {
    fn from(c: &ApiCounters) -> Self {
        ApiSection {
            n_misuse: c.n_misuse,
            n_pass: c.n_pass,
            n_noncomp: c.n_noncomp,
            n_api_not_used: c.n_api_not_used,
            misuse_rate: c.misuse_rate.map(RateEntry::from),
            compilation_rate: c.compilation_rate.into(),
            overall_misuse: c.overall_misuse.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub id: String,
    pub api: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_rule: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_block: Option<usize>,
}

/// The canonical report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metrics: MetricsSection,
    pub per_api: BTreeMap<String, ApiSection>,
    pub results: Vec<ResultRow>,
}

impl Report {
    pub fn build(
        metrics: &EvalMetrics,
        breakdown: &BTreeMap<String, ApiCounters>,
        results: &[SampleResult],
    ) -> Report {
        Report {
            metrics: MetricsSection {
                n_total: metrics.n_total,
                n_misuse: metrics.n_misuse,
                n_pass: metrics.n_pass,
                n_noncomp: metrics.n_noncomp,
                misuse_rate: metrics.misuse_rate.map(RateEntry::from),
                compilation_rate: metrics.compilation_rate.into(),
                overall_misuse: metrics.overall_misuse.into(),
            },
            per_api: breakdown
                .iter()
                .map(|(api, c)| (api.clone(), ApiSection::from(c)))
                .collect(),
            results: results
                .iter()
                .map(|r| ResultRow {
                    id: r.id.clone(),
                    api: r.api.clone(),
                    status: r.verdict.status.as_str().to_string(),
                    best_rule: r.verdict.best_rule,
                    code_block: r.code_block_used,
                })
                .collect(),
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Report, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(
            "api,n_misuse,n_pass,n_noncomp,n_api_not_used,misuse_rate,compilation_rate,overall_misuse\n",
        );
        let rate = |r: &Option<RateEntry>| {
            r.as_ref()
                .map(|e| e.percent.clone())
                .unwrap_or_else(|| UNDEFINED_RATE.to_string())
        };
        for (api, c) in &self.per_api {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                api,
                c.n_misuse,
                c.n_pass,
                c.n_noncomp,
                c.n_api_not_used,
                rate(&c.misuse_rate),
                c.compilation_rate.percent,
                c.overall_misuse.percent,
            ));
        }
        let m = &self.metrics;
        out.push_str(&format!(
            "TOTAL,{},{},{},,{},{},{}\n",
            m.n_misuse,
            m.n_pass,
            m.n_noncomp,
            rate(&m.misuse_rate),
            m.compilation_rate.percent,
            m.overall_misuse.percent,
        ));
        out.into_bytes()
    }

    pub fn to_markdown(&self) -> Vec<u8> {
        let m = &self.metrics;
        let rate = |r: &Option<RateEntry>| {
            r.as_ref()
                .map(|e| e.percent.clone())
                .unwrap_or_else(|| UNDEFINED_RATE.to_string())
        };
        let mut out = String::new();
        out.push_str("# API misuse report\n\n");
        out.push_str("| Metric | Value |\n|---|---|\n");
        out.push_str(&format!("| Samples | {} |\n", m.n_total));
        out.push_str(&format!("| Misuse | {} |\n", m.n_misuse));
        out.push_str(&format!("| Pass | {} |\n", m.n_pass));
        out.push_str(&format!("| Non-compilable | {} |\n", m.n_noncomp));
        out.push_str(&format!("| Misuse rate | {} |\n", rate(&m.misuse_rate)));
        out.push_str(&format!("| Compilation rate | {} |\n", m.compilation_rate.percent));
        out.push_str(&format!("| Overall misuse | {} |\n", m.overall_misuse.percent));
        out.push_str("\n## Per API\n\n");
        out.push_str("| API | Misuse | Pass | Non-comp | Not used | Misuse rate |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for (api, c) in &self.per_api {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                api,
                c.n_misuse,
                c.n_pass,
                c.n_noncomp,
                c.n_api_not_used,
                rate(&c.misuse_rate),
            ));
        }
        out.into_bytes()
    }

    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Markdown => self.to_markdown(),
        }
    }
}

/// Render a report in the given format.
pub fn emit_report(
    metrics: &EvalMetrics,
    breakdown: &BTreeMap<String, ApiCounters>,
    results: &[SampleResult],
    format: ReportFormat,
) -> Vec<u8> {
    Report::build(metrics, breakdown, results).render(format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::metrics_from_counts;

    fn sample_report() -> Report {
        let metrics = metrics_from_counts(3, 4, 3);
        Report::build(&metrics, &BTreeMap::new(), &[])
    }

    #[test]
    fn markdown_contains_rounded_percent() {
        let md = String::from_utf8(sample_report().to_markdown()).unwrap();
        assert!(md.contains("42.86%"), "markdown was:\n{md}");
        assert!(md.contains("70.00%"));
        assert!(md.contains("30.00%"));
    }

    #[test]
    fn empty_breakdown_gives_headers_only_csv() {
        let csv = String::from_utf8(sample_report().to_csv()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("api,"));
        // Header plus the totals row.
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("TOTAL,"));
    }

    #[test]
    fn json_round_trips_without_loss() {
        let report = sample_report();
        let bytes = report.to_json();
        let back = Report::from_json(&bytes).unwrap();
        assert_eq!(back, report);
        // And re-serializing is byte-identical.
        assert_eq!(back.to_json(), bytes);
    }

    #[test]
    fn undefined_rate_renders_as_dash() {
        let metrics = metrics_from_counts(0, 0, 4);
        let report = Report::build(&metrics, &BTreeMap::new(), &[]);
        let md = String::from_utf8(report.to_markdown()).unwrap();
        assert!(md.contains(&format!("| Misuse rate | {UNDEFINED_RATE} |")));
        let json: serde_json::Value = serde_json::from_slice(&report.to_json()).unwrap();
        assert!(json["metrics"]["misuse_rate"].is_null());
    }
}
