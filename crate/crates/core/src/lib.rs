//! Phishing-email triage pipeline: tolerant email ingestion, HTML reduction
//! to an evidence-preserving text form, corpus cleaning and filtering,
//! structured LLM classification, URL risk analysis, evaluation metrics,
//! and a mailbox gateway that quarantines what the classifier flags.
//!
//! The crates above this one (CLI, benches) work exclusively through the
//! types re-exported here.

pub mod cleaner;
pub mod client;
pub mod eval;
pub mod gateway;
pub mod ingest;
pub mod pipeline;
pub mod prompt;
pub mod reduce;
pub mod urlscan;

pub use cleaner::{
    clean_text, clean_text_with, corpus_stats, filter_corpus, read_corpus_csv, read_records_jsonl,
    write_corpus_csv, write_records_jsonl, CleaningConfig, Corpus, CorpusStats, StatsSummary,
    MAX_BODY_CHARS, MIN_BODY_CHARS,
};
pub use client::{
    classify_batch, classify_email, summarize_outcomes, BatchSummary, ClassificationOutcome,
    Credential, DiskCache, LlmClient, ModelConfig, OutcomeError, RateLimiter,
};
pub use eval::{
    compute_metrics, confusion_counts, fmt_metric, reliability_score, render_report,
    ConfusionCounts, Discrepancy, EvalError, Metrics, ModelResult, ReliabilityResult, Report,
    ReportRow, StatedMetrics, Tally, STATED_METRIC_TOLERANCE,
};
pub use gateway::{
    extract_address, generate_user_report, run_loop, Disposition, DispositionKind, FailPolicy,
    Gateway, GatewayError, LoopOptions, LoopStats, MailboxAdapter, MaildirAdapter, Whitelist,
};
pub use ingest::{
    email_record_from_eml, load_tabular_dataset, normalize_record, parse_eml, ColumnMapping,
    EmailRecord, IngestError, Label, LabelSynonyms, LoadReport, RawEmail, TabularFormat,
    UniformRecord,
};
pub use pipeline::{reduce_and_normalize, uniform_from_eml, PipelineOutput};
pub use prompt::{
    build_request, build_request_with, canonical_json, parse_verdict, verdict_schema,
    ClassificationRequest, PromptOptions, Risk, Verdict, VerdictError, PERSONA_PROMPT,
};
pub use reduce::{reduce_html, truncate_url, Image, Link, ReducedBody, URL_TOKEN_LIMIT};
pub use urlscan::{
    extract_urls, url_host, BrandMismatch, BrandTable, HttpReputationClient, PublicSuffixList,
    Reputation, ReputationClient, ReputationError, ShortenerList, StubReputationClient,
    UrlAnalyzer, UrlFinding, UrlReport,
};
