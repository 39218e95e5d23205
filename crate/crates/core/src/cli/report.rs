use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{AngleEstimate, ComparisonVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One labelled entry of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultRecord {
    Estimate {
        label: String,
        estimate: AngleEstimate,
    },
    Comparison {
        label: String,
        left: String,
        right: String,
        verdict: ComparisonVerdict,
    },
    /// A deterministic pass/fail condition (counts, trends, bounds).
    Check {
        label: String,
        passed: bool,
        detail: String,
    },
    Value {
        label: String,
        #[serde(with = "crate::decimal")]
        value: f64,
    },
}

impl ResultRecord {
    pub fn label(&self) -> &str {
        match self {
            ResultRecord::Estimate { label, .. }
            | ResultRecord::Comparison { label, .. }
            | ResultRecord::Check { label, .. }
            | ResultRecord::Value { label, .. } => label,
        }
    }

    fn passes(&self) -> bool {
        match self {
            ResultRecord::Comparison { verdict, .. } => verdict.pass,
            ResultRecord::Check { passed, .. } => *passed,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub dimension: usize,
    pub parameters: BTreeMap<String, String>,
    pub shards: usize,
    pub results: Vec<ResultRecord>,
    pub verdict: Verdict,
    #[serde(with = "crate::decimal::option")]
    pub wall_time: Option<f64>,
}

/// Pass iff every comparison and every check passes.
pub fn derive_verdict(results: &[ResultRecord]) -> Verdict {
    if results.iter().all(ResultRecord::passes) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

impl ExperimentReport {
    pub fn new(
        experiment: &str,
        dimension: usize,
        parameters: BTreeMap<String, String>,
        shards: usize,
        results: Vec<ResultRecord>,
    ) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            dimension,
            parameters,
            shards,
            verdict: derive_verdict(&results),
            results,
            wall_time: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Re-evaluates every comparison from its recorded numbers and the
    /// verdict from the records.
    pub fn is_consistent(&self) -> bool {
        let comparisons_ok = self.results.iter().all(|r| match r {
            ResultRecord::Comparison { verdict, .. } => verdict.is_consistent(),
            _ => true,
        });
        comparisons_ok && derive_verdict(&self.results) == self.verdict
    }

    pub fn without_timing(mut self) -> Self {
        self.wall_time = None;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad report: {e}")))
    }

    /// Flat export of the estimates and values:
    /// `experiment,d,label,value,std_error,n`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let d = self.dimension.to_string();
        w.write_record(["experiment", "d", "label", "value", "std_error", "n"])
            .expect("in-memory write");
        for r in &self.results {
            let row = match r {
                ResultRecord::Estimate { label, estimate } => [
                    self.experiment.clone(),
                    d.clone(),
                    label.clone(),
                    crate::decimal::format(estimate.value),
                    crate::decimal::format(estimate.std_error),
                    estimate.n_samples.to_string(),
                ],
                ResultRecord::Value { label, value } => [
                    self.experiment.clone(),
                    d.clone(),
                    label.clone(),
                    crate::decimal::format(*value),
                    String::new(),
                    String::new(),
                ],
                _ => continue,
            };
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn record(&self, label: &str) -> Option<&ResultRecord> {
        self.results.iter().find(|r| r.label() == label)
    }

    pub fn estimate(&self, label: &str) -> Option<&AngleEstimate> {
        match self.record(label)? {
            ResultRecord::Estimate { estimate, .. } => Some(estimate),
            _ => None,
        }
    }

    pub fn comparison(&self, label: &str) -> Option<&ComparisonVerdict> {
        match self.record(label)? {
            ResultRecord::Comparison { verdict, .. } => Some(verdict),
            _ => None,
        }
    }

    pub fn check(&self, label: &str) -> Option<bool> {
        match self.record(label)? {
            ResultRecord::Check { passed, .. } => Some(*passed),
            _ => None,
        }
    }

    pub fn value(&self, label: &str) -> Option<f64> {
        match self.record(label)? {
            ResultRecord::Value { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn comparisons(&self) -> impl Iterator<Item = (&str, &ComparisonVerdict)> {
        self.results.iter().filter_map(|r| match r {
            ResultRecord::Comparison { label, verdict, .. } => Some((label.as_str(), verdict)),
            _ => None,
        })
    }

    pub fn failures(&self) -> Vec<&str> {
        self.results
            .iter()
            .filter(|r| !r.passes())
            .map(ResultRecord::label)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{compare, Method};

    fn sample_report() -> ExperimentReport {
        let a = AngleEstimate {
            value: 1.0 / 3.0,
            std_error: 2.0f64.sqrt() * 1e-4,
            n_samples: 1_000_000,
            method: Method::Hull,
            seed: u64::MAX,
            stream_id: 17,
        };
        let b = AngleEstimate::exact(1.0 / 3.0 + 1e-5);
        let results = vec![
            ResultRecord::Estimate {
                label: "a".into(),
                estimate: a.clone(),
            },
            ResultRecord::Estimate {
                label: "b".into(),
                estimate: b.clone(),
            },
            ResultRecord::Comparison {
                label: "a vs b".into(),
                left: "a".into(),
                right: "b".into(),
                verdict: compare(&a, &b),
            },
            ResultRecord::Check {
                label: "count".into(),
                passed: true,
                detail: "6 of 6".into(),
            },
            ResultRecord::Value {
                label: "pi".into(),
                value: std::f64::consts::PI,
            },
        ];
        let mut params = BTreeMap::new();
        params.insert("seed".into(), "42".into());
        let mut r = ExperimentReport::new("test", 3, params, 1, results);
        r.wall_time = Some(0.125);
        r
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample_report();
        let text = r.to_json();
        assert!(text.contains("\"3.3333333333333331e-1\""));
        let back = ExperimentReport::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
        assert!(back.is_consistent());
        assert!(back.passed());
    }

    #[test]
    fn verdict_follows_records() {
        let mut r = sample_report();
        assert_eq!(r.verdict, Verdict::Pass);
        r.results.push(ResultRecord::Check {
            label: "trend".into(),
            passed: false,
            detail: String::new(),
        });
        assert!(!r.is_consistent());
        assert_eq!(derive_verdict(&r.results), Verdict::Fail);
        assert_eq!(r.failures(), vec!["trend"]);
    }

    #[test]
    fn tampered_comparison_is_detected() {
        let mut r = sample_report();
        if let ResultRecord::Comparison { verdict, .. } = &mut r.results[2] {
            verdict.difference = 1.0;
        }
        assert!(!r.is_consistent());
    }

    #[test]
    fn csv_export() {
        let csv = sample_report().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "experiment,d,label,value,std_error,n");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("test,3,a,3.3333333333333331e-1,"));
        assert!(lines[3].ends_with(",,"));
    }

    #[test]
    fn lookups() {
        let r = sample_report();
        assert!(r.estimate("a").is_some());
        assert!(r.estimate("count").is_none());
        assert_eq!(r.check("count"), Some(true));
        assert_eq!(r.value("pi"), Some(std::f64::consts::PI));
        assert_eq!(r.comparisons().count(), 1);
    }
}
