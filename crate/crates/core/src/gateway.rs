//! Mailbox gateway: polls an inbox, short-circuits whitelisted senders,
//! classifies the rest, quarantines phishing with a plain-language report
//! for the recipient, and applies a configurable fail policy when
//! classification is unavailable.

use std::collections::HashSet;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::client::{ClassificationOutcome, ConfigError, LlmClient, ModelConfig, OutcomeError};
use crate::ingest::email_record_from_eml;
use crate::pipeline::reduce_and_normalize;
use crate::prompt::{build_request_with, PromptOptions, Verdict};
use crate::urlscan::{UrlAnalyzer, UrlReport};

/// Abstract mailbox the gateway drives. Implementations must tolerate
/// repeated calls for the same message id.
pub trait MailboxAdapter {
    /// New (unprocessed) messages as `(id, raw bytes)`.
    fn poll_new(&self) -> io::Result<Vec<(String, Vec<u8>)>>;
    fn move_to_spam(&self, id: &str) -> io::Result<()>;
    fn deliver_report(&self, id: &str, report: &str) -> io::Result<()>;
    /// Marks a message done so later polls skip it.
    fn mark_processed(&self, id: &str) -> io::Result<()>;
}

/// Directory-backed mailbox: `inbox/`, `spam/`, `reports/`, and a
/// `.processed` ledger of finished message ids.
pub struct MaildirAdapter {
    root: PathBuf,
}

impl MaildirAdapter {
    pub fn open(root: impl AsRef<Path>) -> io::Result<Self> {
        let root = root.as_ref().to_path_buf();
        for sub in ["inbox", "spam", "reports"] {
            std::fs::create_dir_all(root.join(sub))?;
        }
        Ok(MaildirAdapter { root })
    }

    pub fn inbox_dir(&self) -> PathBuf {
        self.root.join("inbox")
    }

    pub fn spam_dir(&self) -> PathBuf {
        self.root.join("spam")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    fn ledger_path(&self) -> PathBuf {
        self.root.join(".processed")
    }

    fn processed_set(&self) -> io::Result<HashSet<String>> {
        match std::fs::read_to_string(self.ledger_path()) {
            Ok(content) => Ok(content.lines().map(str::to_string).collect()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(HashSet::new()),
            Err(e) => Err(e),
        }
    }

    /// Drops a message into the inbox, for tests and manual feeding.
    pub fn deposit(&self, id: &str, raw: &[u8]) -> io::Result<()> {
        std::fs::write(self.inbox_dir().join(id), raw)
    }
}

impl MailboxAdapter for MaildirAdapter {
    fn poll_new(&self) -> io::Result<Vec<(String, Vec<u8>)>> {
        let done = self.processed_set()?;
        let mut found = Vec::new();
        for entry in std::fs::read_dir(self.inbox_dir())? {
            let entry = entry?;
            if !entry.file_type()?.is_file() {
                continue;
            }
            let id = entry.file_name().to_string_lossy().into_owned();
            if id.starts_with('.') || done.contains(&id) {
                continue;
            }
            let raw = std::fs::read(entry.path())?;
            found.push((id, raw));
        }
        found.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(found)
    }

    fn move_to_spam(&self, id: &str) -> io::Result<()> {
        let from = self.inbox_dir().join(id);
        let to = self.spam_dir().join(id);
        match std::fs::rename(&from, &to) {
            Ok(()) => Ok(()),
            // Already moved by an earlier attempt.
            Err(_) if to.exists() && !from.exists() => Ok(()),
            Err(e) => Err(e),
        }
    }

    fn deliver_report(&self, id: &str, report: &str) -> io::Result<()> {
        let path = self.reports_dir().join(format!("{id}.report.txt"));
        let tmp = self.reports_dir().join(format!(".{id}.tmp"));
        std::fs::write(&tmp, report)?;
        std::fs::rename(tmp, path)
    }

    fn mark_processed(&self, id: &str) -> io::Result<()> {
        use std::io::Write;
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.ledger_path())?;
        writeln!(f, "{id}")
    }
}

// ---------------------------------------------------------------------------
// Whitelist

/// Trusted senders: exact addresses and domains (subdomains included).
/// Matching is on the address inside angle brackets, so a spoofed display
/// name never earns trust.
#[derive(Debug, Clone, Default)]
pub struct Whitelist {
    addresses: HashSet<String>,
    domains: HashSet<String>,
}

impl Whitelist {
    pub fn new(entries: impl IntoIterator<Item = String>) -> Self {
        let mut list = Whitelist::default();
        for entry in entries {
            let entry = entry.trim().trim_start_matches('@').to_ascii_lowercase();
            if entry.is_empty() {
                continue;
            }
            if entry.contains('@') {
                list.addresses.insert(entry);
            } else {
                list.domains.insert(entry);
            }
        }
        list
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty() && self.domains.is_empty()
    }

    pub fn is_trusted(&self, sender_header: &str) -> bool {
        let Some(addr) = extract_address(sender_header) else {
            return false;
        };
        if self.addresses.contains(&addr) {
            return true;
        }
        let Some((_, domain)) = addr.split_once('@') else {
            return false;
        };
        self.domains.contains(domain)
            || self
                .domains
                .iter()
                .any(|d| domain.ends_with(&format!(".{d}")))
    }
}

/// The machine address from a From-style header: the `<...>` part when
/// present, otherwise the whole value if it looks like a bare address.
/// Returns lowercase; None when nothing address-shaped is found.
pub fn extract_address(header: &str) -> Option<String> {
    let candidate = match header.rfind('<') {
        Some(start) => {
            let rest = &header[start + 1..];
            let end = rest.find('>')?;
            &rest[..end]
        }
        None => header,
    };
    let candidate = candidate.trim();
    let (local, domain) = candidate.split_once('@')?;
    if local.is_empty()
        || domain.is_empty()
        || domain.contains('@')
        || candidate.contains(char::is_whitespace)
        || candidate.contains(',')
    {
        return None;
    }
    Some(candidate.to_ascii_lowercase())
}

// ---------------------------------------------------------------------------
// Gateway

/// What to do with mail when classification itself fails: deliver it
/// unscanned (open) or hold it for a later poll (closed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailPolicy {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispositionKind {
    /// Whitelisted sender, no classification performed.
    DeliveredTrusted,
    /// Classified, not phishing.
    DeliveredClean,
    /// Classified as phishing and quarantined.
    MovedToSpam,
    /// Classification failed and the fail-open policy let it through.
    DeliveredUnscanned,
}

#[derive(Debug, Clone)]
pub struct Disposition {
    pub kind: DispositionKind,
    pub verdict: Option<Verdict>,
    pub error: Option<OutcomeError>,
    /// HTTP attempts spent on this message; zero for trusted senders.
    pub llm_calls: u32,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("mailbox {op} failed for {id}: {source}")]
    Adapter {
        op: &'static str,
        id: String,
        #[source]
        source: io::Error,
    },
    /// Fail-closed: the message stays unprocessed and is retried next poll.
    #[error("message {id} deferred: {reason}")]
    Deferred { id: String, reason: String },
}

pub struct Gateway {
    client: LlmClient,
    whitelist: Whitelist,
    fail_policy: FailPolicy,
    analyzer: Option<UrlAnalyzer>,
    prompt_options: PromptOptions,
}

impl Gateway {
    pub fn new(
        model: ModelConfig,
        whitelist: Whitelist,
        fail_policy: FailPolicy,
    ) -> Result<Self, ConfigError> {
        Ok(Gateway {
            client: LlmClient::new(model)?,
            whitelist,
            fail_policy,
            analyzer: None,
            prompt_options: PromptOptions::default(),
        })
    }

    /// Enables the URL-analysis stage; its findings are appended to the
    /// prompt and to quarantine reports.
    pub fn with_analyzer(mut self, analyzer: UrlAnalyzer) -> Self {
        self.analyzer = Some(analyzer);
        self
    }

    pub fn with_prompt_options(mut self, options: PromptOptions) -> Self {
        self.prompt_options = options;
        self
    }

    /// Runs one message through the gateway. On `Ok` the message has been
    /// marked processed; `Deferred` leaves it for the next poll.
    pub fn process_incoming(
        &self,
        adapter: &dyn MailboxAdapter,
        id: &str,
        raw: &[u8],
    ) -> Result<Disposition, GatewayError> {
        let record = match email_record_from_eml(raw, id, None) {
            Ok(r) => r,
            Err(e) => return self.handle_unscannable(adapter, id, e.to_string()),
        };

        // Trusted senders skip classification entirely: no model call, no
        // URL lookups. Trust is checked against the parsed From header, not
        // the flattened text, so a crafted subject cannot inject a sender.
        if self.whitelist.is_trusted(&record.sender) {
            adapter_op(adapter, "mark_processed", id, || adapter.mark_processed(id))?;
            return Ok(Disposition {
                kind: DispositionKind::DeliveredTrusted,
                verdict: None,
                error: None,
                llm_calls: 0,
            });
        }

        let output = reduce_and_normalize(&record);
        let url_report = self
            .analyzer
            .as_ref()
            .map(|a| a.analyze(&output.reduced, &output.uniform.email_text));

        let mut options = self.prompt_options.clone();
        if let Some(report) = &url_report {
            if !report.is_empty() {
                options.url_report = Some(report.to_prompt_text(8));
            }
        }
        let request = match build_request_with(&output.uniform, &options) {
            Ok(r) => r,
            Err(e) => return self.handle_unscannable(adapter, id, e.to_string()),
        };

        let outcome = self.client.classify(&output.uniform.id, &request);
        self.apply_outcome(adapter, id, outcome, url_report)
    }

    fn apply_outcome(
        &self,
        adapter: &dyn MailboxAdapter,
        id: &str,
        outcome: ClassificationOutcome,
        url_report: Option<UrlReport>,
    ) -> Result<Disposition, GatewayError> {
        match (outcome.verdict, outcome.error) {
            (Some(verdict), _) if verdict.is_phishing => {
                adapter_op(adapter, "move_to_spam", id, || adapter.move_to_spam(id))?;
                let report = generate_user_report(&verdict, url_report.as_ref());
                adapter_op(adapter, "deliver_report", id, || {
                    adapter.deliver_report(id, &report)
                })?;
                adapter_op(adapter, "mark_processed", id, || adapter.mark_processed(id))?;
                Ok(Disposition {
                    kind: DispositionKind::MovedToSpam,
                    verdict: Some(verdict),
                    error: None,
                    llm_calls: outcome.attempts,
                })
            }
            (Some(verdict), _) => {
                adapter_op(adapter, "mark_processed", id, || adapter.mark_processed(id))?;
                Ok(Disposition {
                    kind: DispositionKind::DeliveredClean,
                    verdict: Some(verdict),
                    error: None,
                    llm_calls: outcome.attempts,
                })
            }
            (None, error) => {
                let reason = error
                    .as_ref()
                    .map(|e| e.to_string())
                    .unwrap_or_else(|| "no verdict".to_string());
                match self.fail_policy {
                    FailPolicy::Open => {
                        adapter_op(adapter, "mark_processed", id, || adapter.mark_processed(id))?;
                        Ok(Disposition {
                            kind: DispositionKind::DeliveredUnscanned,
                            verdict: None,
                            error,
                            llm_calls: outcome.attempts,
                        })
                    }
                    FailPolicy::Closed => Err(GatewayError::Deferred {
                        id: id.to_string(),
                        reason,
                    }),
                }
            }
        }
    }

    /// For messages that cannot even be turned into a classification request
    /// (unparseable, empty). The fail policy decides their fate.
    fn handle_unscannable(
        &self,
        adapter: &dyn MailboxAdapter,
        id: &str,
        reason: String,
    ) -> Result<Disposition, GatewayError> {
        match self.fail_policy {
            FailPolicy::Open => {
                adapter_op(adapter, "mark_processed", id, || adapter.mark_processed(id))?;
                Ok(Disposition {
                    kind: DispositionKind::DeliveredUnscanned,
                    verdict: None,
                    error: Some(OutcomeError::Schema(reason)),
                    llm_calls: 0,
                })
            }
            FailPolicy::Closed => Err(GatewayError::Deferred {
                id: id.to_string(),
                reason,
            }),
        }
    }
}

/// Runs an adapter operation, retrying once on failure.
fn adapter_op(
    _adapter: &dyn MailboxAdapter,
    op: &'static str,
    id: &str,
    mut f: impl FnMut() -> io::Result<()>,
) -> Result<(), GatewayError> {
    if f().is_ok() {
        return Ok(());
    }
    f().map_err(|source| GatewayError::Adapter {
        op,
        id: id.to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// User-facing report

const REPORT_CHAR_CAP: usize = 4000;

/// Plain-language explanation delivered to the recipient when their message
/// is quarantined. Sections with nothing to say are omitted.
pub fn generate_user_report(verdict: &Verdict, url_report: Option<&UrlReport>) -> String {
    let mut out = String::new();
    out.push_str("Phishing alert\n\n");
    out.push_str(&format!(
        "This message was classified as phishing (risk: {}) and moved to your spam folder.\n",
        verdict.risk
    ));
    if !verdict.reason.trim().is_empty() {
        out.push_str(&format!("\nWhy: {}\n", verdict.reason.trim()));
    }
    if !verdict.social_engineering_elements.is_empty() {
        out.push_str("\nTactics observed:\n");
        for item in &verdict.social_engineering_elements {
            out.push_str(&format!("- {item}\n"));
        }
    }
    if !verdict.actions.is_empty() {
        out.push_str("\nRecommended actions:\n");
        for item in &verdict.actions {
            out.push_str(&format!("- {item}\n"));
        }
    }
    if let Some(report) = url_report {
        if !report.is_empty() {
            out.push_str("\nLink analysis:\n");
            out.push_str(&report.to_prompt_text(8));
            out.push('\n');
        }
    }
    if out.chars().count() > REPORT_CHAR_CAP {
        let mut capped: String = out.chars().take(REPORT_CHAR_CAP).collect();
        capped.push_str("\n[report truncated]");
        return capped;
    }
    out
}

// ---------------------------------------------------------------------------
// Polling loop

#[derive(Debug, Clone)]
pub struct LoopOptions {
    pub poll_interval: Duration,
    /// Stop after this many polls; None runs until the process is killed.
    pub max_cycles: Option<u64>,
}

impl Default for LoopOptions {
    fn default() -> Self {
        LoopOptions {
            poll_interval: Duration::from_secs(5),
            max_cycles: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoopStats {
    pub cycles: u64,
    pub delivered_trusted: usize,
    pub delivered_clean: usize,
    pub moved_to_spam: usize,
    pub delivered_unscanned: usize,
    pub deferred: usize,
    pub failures: usize,
}

/// Polls the mailbox until the cycle budget runs out, feeding every new
/// message through the gateway. Errors are counted, never fatal.
pub fn run_loop(
    gateway: &Gateway,
    adapter: &dyn MailboxAdapter,
    options: &LoopOptions,
) -> LoopStats {
    let mut stats = LoopStats::default();
    loop {
        stats.cycles += 1;
        match adapter.poll_new() {
            Ok(batch) => {
                for (id, raw) in batch {
                    match gateway.process_incoming(adapter, &id, &raw) {
                        Ok(d) => match d.kind {
                            DispositionKind::DeliveredTrusted => stats.delivered_trusted += 1,
                            DispositionKind::DeliveredClean => stats.delivered_clean += 1,
                            DispositionKind::MovedToSpam => stats.moved_to_spam += 1,
                            DispositionKind::DeliveredUnscanned => stats.delivered_unscanned += 1,
                        },
                        Err(GatewayError::Deferred { id, reason }) => {
                            log::warn!("deferred {id}: {reason}");
                            stats.deferred += 1;
                        }
                        Err(e) => {
                            log::error!("{e}");
                            stats.failures += 1;
                        }
                    }
                }
            }
            Err(e) => {
                log::error!("poll failed: {e}");
                stats.failures += 1;
            }
        }
        if let Some(max) = options.max_cycles {
            if stats.cycles >= max {
                return stats;
            }
        }
        std::thread::sleep(options.poll_interval);
    }
}
