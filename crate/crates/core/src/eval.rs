//! Scoring: confusion tallies, the standard derived metrics, the reliability
//! score, and multi-model comparison reports that recompute every metric from
//! raw counts and flag externally stated numbers that do not match.

use serde::Serialize;
use thiserror::Error;

use crate::ingest::Label;
use crate::prompt::{Risk, Verdict};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn new(true_pos: u64, false_pos: u64, true_neg: u64, false_neg: u64) -> Self {
        ConfusionCounts {
            true_pos,
            false_pos,
            true_neg,
            false_neg,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    /// The same outcomes viewed with the negative class as positive.
    pub fn swap_classes(&self) -> Self {
        ConfusionCounts {
            true_pos: self.true_neg,
            false_pos: self.false_neg,
            true_neg: self.true_pos,
            false_neg: self.false_pos,
        }
    }
}

/// Derived metrics; a metric is `None` when its denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub false_pos_rate: Option<f64>,
    pub false_neg_rate: Option<f64>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("record {0} has no ground-truth label")]
    MissingLabel(String),
    #[error("nothing to score")]
    EmptyCounts,
}

/// Tally of scoreable outcomes. Records whose classification failed carry no
/// verdict; they are excluded from the counts and reported separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub counts: ConfusionCounts,
    pub unscored: u64,
}

/// Builds confusion counts from (ground truth, predicted) pairs. Phishing is
/// the positive class. A missing label is an error: scoring an unlabeled
/// record silently would corrupt every downstream number.
pub fn confusion_counts<'a, I>(outcomes: I) -> Result<Tally, EvalError>
where
    I: IntoIterator<Item = (Option<Label>, Option<&'a Verdict>)>,
{
    let mut tally = Tally::default();
    for (i, (label, verdict)) in outcomes.into_iter().enumerate() {
        let label = label.ok_or_else(|| EvalError::MissingLabel(format!("#{i}")))?;
        let Some(verdict) = verdict else {
            tally.unscored += 1;
            continue;
        };
        match (label, verdict.is_phishing) {
            (Label::Phishing, true) => tally.counts.true_pos += 1,
            (Label::Phishing, false) => tally.counts.false_neg += 1,
            (Label::Legit, true) => tally.counts.false_pos += 1,
            (Label::Legit, false) => tally.counts.true_neg += 1,
        }
    }
    Ok(tally)
}

/// Computes the derived metrics from raw counts.
pub fn compute_metrics(counts: &ConfusionCounts) -> Result<Metrics, EvalError> {
    if counts.total() == 0 {
        return Err(EvalError::EmptyCounts);
    }
    let ratio = |num: u64, den: u64| -> Option<f64> {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let tp = counts.true_pos;
    let accuracy = ratio(tp + counts.true_neg, counts.total());
    let precision = ratio(tp, tp + counts.false_pos);
    let recall = ratio(tp, tp + counts.false_neg);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    let false_pos_rate = ratio(counts.false_pos, counts.false_pos + counts.true_neg);
    let false_neg_rate = ratio(counts.false_neg, counts.false_neg + counts.true_pos);
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
        false_pos_rate,
        false_neg_rate,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ReliabilityResult {
    pub score: f64,
    pub full_marks: u64,
    pub half_marks: u64,
    pub zero_marks: u64,
}

/// Scores each labeled verdict: full mark for a correct classification, half
/// mark when a true phishing email was called legitimate but still rated
/// Medium risk (the analysis stayed useful), zero otherwise. The score is the
/// mean mark.
pub fn reliability_score<'a, I>(outcomes: I) -> Result<ReliabilityResult, EvalError>
where
    I: IntoIterator<Item = (Option<Label>, &'a Verdict)>,
{
    let mut result = ReliabilityResult::default();
    let mut sum = 0.0;
    let mut n = 0u64;
    for (i, (label, verdict)) in outcomes.into_iter().enumerate() {
        let label = label.ok_or_else(|| EvalError::MissingLabel(format!("#{i}")))?;
        n += 1;
        let correct = matches!(
            (label, verdict.is_phishing),
            (Label::Phishing, true) | (Label::Legit, false)
        );
        if correct {
            result.full_marks += 1;
            sum += 1.0;
        } else if label == Label::Phishing && verdict.risk == Risk::Medium {
            result.half_marks += 1;
            sum += 0.5;
        } else {
            result.zero_marks += 1;
        }
    }
    if n == 0 {
        return Err(EvalError::EmptyCounts);
    }
    result.score = sum / n as f64;
    Ok(result)
}

// ---------------------------------------------------------------------------
// Comparison reports

/// Stated metrics from an external source (a published table, another tool)
/// to audit against recomputation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StatedMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Per-model input to [`render_report`].
#[derive(Debug, Clone, Default)]
pub struct ModelResult {
    pub model: String,
    pub counts: ConfusionCounts,
    pub unscored: u64,
    pub stated: Option<StatedMetrics>,
    pub reliability: Option<ReliabilityResult>,
}

/// A stated metric further than [`STATED_METRIC_TOLERANCE`] from its
/// recomputed value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub model: String,
    pub metric: &'static str,
    pub stated: f64,
    pub recomputed: f64,
}

/// Gap beyond which a stated metric is flagged. Four-decimal rounding or
/// truncation keeps honest values within 1e-4 of recomputation; anything
/// past 2e-4 means the number does not follow from the counts.
pub const STATED_METRIC_TOLERANCE: f64 = 2e-4;

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub model: String,
    pub counts: ConfusionCounts,
    pub unscored: u64,
    pub metrics: Metrics,
    pub reliability: Option<f64>,
    /// Names of this model's flagged metrics.
    pub flags: Vec<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    /// Rows sorted by recomputed accuracy, best first.
    pub rows: Vec<ReportRow>,
    pub discrepancies: Vec<Discrepancy>,
}

/// Recomputes metrics for every model from raw counts, compares any stated
/// numbers, and renders a ranked comparison.
pub fn render_report(results: &[ModelResult]) -> Result<Report, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyCounts);
    }
    let mut rows = Vec::new();
    let mut discrepancies = Vec::new();
    for result in results {
        let metrics = compute_metrics(&result.counts)?;
        let mut flags = Vec::new();
        if let Some(stated) = result.stated {
            let checks = [
                ("precision", stated.precision, metrics.precision),
                ("recall", stated.recall, metrics.recall),
                ("f1", stated.f1, metrics.f1),
                ("accuracy", stated.accuracy, metrics.accuracy),
            ];
            for (name, stated_value, recomputed) in checks {
                let (Some(stated_value), Some(recomputed)) = (stated_value, recomputed) else {
                    continue;
                };
                if (stated_value - recomputed).abs() > STATED_METRIC_TOLERANCE {
                    flags.push(name);
                    discrepancies.push(Discrepancy {
                        model: result.model.clone(),
                        metric: name,
                        stated: stated_value,
                        recomputed,
                    });
                }
            }
        }
        rows.push(ReportRow {
            model: result.model.clone(),
            counts: result.counts,
            unscored: result.unscored,
            metrics,
            reliability: result.reliability.map(|r| r.score),
            flags,
        });
    }
    rows.sort_by(|a, b| {
        let key = |r: &ReportRow| r.metrics.accuracy.unwrap_or(f64::NEG_INFINITY);
        key(b).partial_cmp(&key(a)).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(Report { rows, discrepancies })
}

/// Formats a metric the way comparison tables print them: truncated (not
/// rounded) to four decimals. `None` renders as `undef`.
pub fn fmt_metric(value: Option<f64>) -> String {
    match value {
        // The epsilon absorbs float noise just below a clean boundary.
        Some(v) => format!("{:.4}", (v * 10000.0 + 1e-6).floor() / 10000.0),
        None => "undef".to_string(),
    }
}

impl Report {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "model,tp,fp,tn,fn,unscored,accuracy,precision,recall,f1,fpr,fnr,reliability,flags\n",
        );
        for row in &self.rows {
            let c = &row.counts;
            let m = &row.metrics;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.model,
                c.true_pos,
                c.false_pos,
                c.true_neg,
                c.false_neg,
                row.unscored,
                fmt_metric(m.accuracy),
                fmt_metric(m.precision),
                fmt_metric(m.recall),
                fmt_metric(m.f1),
                fmt_metric(m.false_pos_rate),
                fmt_metric(m.false_neg_rate),
                fmt_metric(row.reliability),
                row.flags.join(";"),
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<18} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
            "model", "accuracy", "precision", "recall", "f1", "fpr", "reliab."
        ));
        for row in &self.rows {
            let m = &row.metrics;
            out.push_str(&format!(
                "{:<18} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
                row.model,
                fmt_metric(m.accuracy),
                fmt_metric(m.precision),
                fmt_metric(m.recall),
                fmt_metric(m.f1),
                fmt_metric(m.false_pos_rate),
                fmt_metric(row.reliability),
            ));
        }
        out.push('\n');
        for row in &self.rows {
            let c = &row.counts;
            out.push_str(&format!(
                "{}: tp={} fp={} tn={} fn={} unscored={}\n",
                row.model, c.true_pos, c.false_pos, c.true_neg, c.false_neg, row.unscored
            ));
        }
        if !self.discrepancies.is_empty() {
            out.push('\n');
            for d in &self.discrepancies {
                out.push_str(&format!(
                    "flag: {} {} stated {} but counts give {}\n",
                    d.model,
                    d.metric,
                    fmt_metric(Some(d.stated)),
                    fmt_metric(Some(d.recomputed)),
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(is_phishing: bool, risk: Risk) -> Verdict {
        Verdict {
            is_phishing,
            risk,
            social_engineering_elements: vec![],
            actions: vec![],
            reason: "r".into(),
        }
    }

    #[test]
    fn counts_from_outcome_pairs() {
        let phish_hit = verdict(true, Risk::High);
        let phish_miss = verdict(false, Risk::Low);
        let outcomes = vec![
            (Some(Label::Phishing), Some(&phish_hit)),
            (Some(Label::Phishing), Some(&phish_miss)),
            (Some(Label::Legit), Some(&phish_hit)),
            (Some(Label::Legit), Some(&phish_miss)),
            (Some(Label::Phishing), None),
        ];
        let tally = confusion_counts(outcomes).unwrap();
        assert_eq!(tally.counts, ConfusionCounts::new(1, 1, 1, 1));
        assert_eq!(tally.unscored, 1);
    }

    #[test]
    fn missing_label_is_an_error() {
        let v = verdict(true, Risk::High);
        let outcomes = vec![(None, Some(&v))];
        assert!(matches!(
            confusion_counts(outcomes),
            Err(EvalError::MissingLabel(_))
        ));
    }

    #[test]
    fn metrics_match_published_counts() {
        // tp/fp/tn/fn tallies of four models over the same 6866-email corpus,
        // with metric values computed independently by hand.
        let cases: [(ConfusionCounts, [f64; 5]); 4] = [
            (
                ConfusionCounts::new(4806, 93, 1869, 98),
                [0.9721817652, 0.9810165340, 0.9800163132, 0.9805161685, 0.0474006116],
            ),
            (
                ConfusionCounts::new(4882, 301, 1661, 22),
                [0.9529565977, 0.9419255258, 0.9955138662, 0.9679785863, 0.1534148828],
            ),
            (
                ConfusionCounts::new(4863, 760, 1202, 41),
                [0.8833381882, 0.8648408323, 0.9916394780, 0.9239099459, 0.3873598369],
            ),
            (
                ConfusionCounts::new(4899, 1337, 625, 5),
                [0.8045441305, 0.7855997434, 0.9989804241, 0.8795332136, 0.6814475025],
            ),
        ];
        for (counts, [acc, p, r, f1, fpr]) in cases {
            assert_eq!(counts.total(), 6866);
            let m = compute_metrics(&counts).unwrap();
            assert!((m.accuracy.unwrap() - acc).abs() < 1e-9);
            assert!((m.precision.unwrap() - p).abs() < 1e-9);
            assert!((m.recall.unwrap() - r).abs() < 1e-9);
            assert!((m.f1.unwrap() - f1).abs() < 1e-9);
            assert!((m.false_pos_rate.unwrap() - fpr).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_denominators_are_none_not_nan() {
        // All negatives: no positive predictions, no positive truths.
        let m = compute_metrics(&ConfusionCounts::new(0, 0, 5, 0)).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.false_neg_rate, None);
        assert_eq!(m.accuracy, Some(1.0));
        assert!(matches!(
            compute_metrics(&ConfusionCounts::default()),
            Err(EvalError::EmptyCounts)
        ));
    }

    #[test]
    fn swapping_classes_swaps_error_rates() {
        let counts = ConfusionCounts::new(40, 7, 30, 3);
        let m = compute_metrics(&counts).unwrap();
        let swapped = compute_metrics(&counts.swap_classes()).unwrap();
        assert_eq!(m.false_pos_rate, swapped.false_neg_rate);
        assert_eq!(m.false_neg_rate, swapped.false_pos_rate);
        assert_eq!(m.accuracy, swapped.accuracy);
    }

    #[test]
    fn reliability_hand_case() {
        let hit = verdict(true, Risk::High);
        let medium_miss = verdict(false, Risk::Medium);
        let outcomes = vec![
            (Some(Label::Phishing), &hit),
            (Some(Label::Phishing), &medium_miss),
        ];
        let r = reliability_score(outcomes).unwrap();
        assert!((r.score - 0.75).abs() < 1e-12);
        assert_eq!((r.full_marks, r.half_marks, r.zero_marks), (1, 1, 0));
    }

    #[test]
    fn reliability_zero_for_low_risk_miss_and_false_positive() {
        let low_miss = verdict(false, Risk::Low);
        let false_alarm = verdict(true, Risk::High);
        let outcomes = vec![
            (Some(Label::Phishing), &low_miss),
            (Some(Label::Legit), &false_alarm),
        ];
        let r = reliability_score(outcomes).unwrap();
        assert_eq!(r.score, 0.0);
        assert_eq!(r.zero_marks, 2);
    }

    #[test]
    fn report_ranks_by_accuracy_and_flags_stated_mismatches() {
        let results = vec![
            ModelResult {
                model: "weaker".into(),
                counts: ConfusionCounts::new(4899, 1337, 625, 5),
                stated: Some(StatedMetrics {
                    precision: Some(0.7855),
                    recall: Some(0.9989),
                    // Stated f1/accuracy that do not follow from the counts.
                    f1: Some(0.8045),
                    accuracy: Some(0.8795),
                }),
                ..ModelResult::default()
            },
            ModelResult {
                model: "stronger".into(),
                counts: ConfusionCounts::new(4806, 93, 1869, 98),
                stated: Some(StatedMetrics {
                    precision: Some(0.9810),
                    recall: Some(0.9800),
                    f1: Some(0.9805),
                    accuracy: Some(0.9721),
                }),
                ..ModelResult::default()
            },
        ];
        let report = render_report(&results).unwrap();
        assert_eq!(report.rows[0].model, "stronger");
        assert_eq!(report.rows[1].model, "weaker");
        assert!(report.rows[0].flags.is_empty());
        let flagged: Vec<&str> = report.discrepancies.iter().map(|d| d.metric).collect();
        assert_eq!(flagged, vec!["f1", "accuracy"]);
        let text = report.to_text();
        assert!(text.contains("flag: weaker f1"));
    }

    #[test]
    fn four_decimal_truncation_matches_table_style() {
        assert_eq!(fmt_metric(Some(0.9721817652)), "0.9721");
        assert_eq!(fmt_metric(Some(0.9679785863)), "0.9679");
        assert_eq!(fmt_metric(Some(0.9989804241)), "0.9989");
        assert_eq!(fmt_metric(Some(0.98)), "0.9800");
        assert_eq!(fmt_metric(Some(1.0)), "1.0000");
        assert_eq!(fmt_metric(None), "undef");
    }

    #[test]
    fn csv_report_has_count_columns() {
        let report = render_report(&[ModelResult {
            model: "m".into(),
            counts: ConfusionCounts::new(4806, 93, 1869, 98),
            ..ModelResult::default()
        }])
        .unwrap();
        let csv = report.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("model,tp,fp,tn,fn"));
        assert!(lines[1].starts_with("m,4806,93,1869,98,0,0.9721,"));
    }
}
