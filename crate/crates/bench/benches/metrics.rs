//! Scoring paths: confusion tallying over large outcome sets, metric
//! computation, and report rendering.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use phishtriage_core::{
    compute_metrics, confusion_counts, reliability_score, render_report, ConfusionCounts, Label,
    ModelResult, Risk, Verdict,
};

fn verdict(is_phishing: bool, risk: Risk) -> Verdict {
    Verdict {
        is_phishing,
        risk,
        social_engineering_elements: vec!["urgency".to_string()],
        actions: vec!["Report the email.".to_string()],
        reason: "benchmark fixture".to_string(),
    }
}

/// Deterministic mix of the four confusion cells plus some risk variety.
fn outcome_set(n: usize) -> Vec<(Option<Label>, Verdict)> {
    (0..n)
        .map(|i| {
            let label = if i % 10 < 7 { Label::Phishing } else { Label::Legit };
            let predicted = match i % 10 {
                0..=5 => true,
                6 => false,
                7 | 8 => false,
                _ => true,
            };
            let risk = match i % 3 {
                0 => Risk::High,
                1 => Risk::Medium,
                _ => Risk::Low,
            };
            (Some(label), verdict(predicted, risk))
        })
        .collect()
}

fn bench_confusion_counts(c: &mut Criterion) {
    let mut group = c.benchmark_group("confusion_counts");
    for n in [1_000usize, 10_000] {
        let outcomes = outcome_set(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &outcomes, |b, outcomes| {
            b.iter(|| {
                confusion_counts(
                    outcomes
                        .iter()
                        .map(|(label, verdict)| (*label, Some(black_box(verdict)))),
                )
                .unwrap()
            });
        });
    }
    group.finish();
}

fn bench_reliability(c: &mut Criterion) {
    let outcomes = outcome_set(10_000);
    c.bench_function("reliability_score/10000", |b| {
        b.iter(|| {
            reliability_score(
                outcomes
                    .iter()
                    .map(|(label, verdict)| (*label, black_box(verdict))),
            )
            .unwrap()
        });
    });
}

fn bench_compute_metrics(c: &mut Criterion) {
    let counts = ConfusionCounts::new(4806, 93, 1869, 98);
    c.bench_function("compute_metrics", |b| {
        b.iter(|| compute_metrics(black_box(&counts)).unwrap());
    });
}

fn bench_render_report(c: &mut Criterion) {
    let rows: Vec<ModelResult> = [
        (4806u64, 93u64, 1869u64, 98u64),
        (4882, 301, 1661, 22),
        (4863, 760, 1202, 41),
        (4899, 1337, 625, 5),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(tp, fp, tn, fn_))| ModelResult {
        model: format!("model-{i}"),
        counts: ConfusionCounts::new(tp, fp, tn, fn_),
        unscored: 0,
        stated: None,
        reliability: None,
    })
    .collect();
    c.bench_function("render_report/4", |b| {
        b.iter(|| render_report(black_box(&rows)).unwrap());
    });
}

criterion_group!(
    benches,
    bench_confusion_counts,
    bench_reliability,
    bench_compute_metrics,
    bench_render_report
);
criterion_main!(benches);
