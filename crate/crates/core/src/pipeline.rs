//! End-to-end preprocessing: raw message bytes to the uniform prompt-ready
//! record, via HTML reduction and text cleaning.

use crate::cleaner::clean_text;
use crate::ingest::{
    email_record_from_eml, normalize_record, EmailRecord, IngestError, Label, UniformRecord,
};
use crate::reduce::{reduce_html, ReducedBody};

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub uniform: UniformRecord,
    /// Reduced body, kept for URL analysis. For plain-text messages this
    /// carries the raw text with no links or images.
    pub reduced: ReducedBody,
    pub body_is_html: bool,
}

/// Reduces (HTML bodies), cleans, and normalizes one parsed email. An HTML
/// body is preferred over a plain-text alternative when both exist, since
/// markup is where the evasion tricks live.
pub fn reduce_and_normalize(record: &EmailRecord) -> PipelineOutput {
    let (reduced, body_is_html) = match (&record.body_html, &record.body_text) {
        (Some(html), _) => (reduce_html(html), true),
        (None, Some(text)) => (
            ReducedBody {
                text: text.clone(),
                ..ReducedBody::default()
            },
            false,
        ),
        (None, None) => (ReducedBody::default(), false),
    };
    let body = clean_text(&reduced.text);
    let mut uniform = normalize_record(record, &body);
    // Subject and sender can carry emoji and control characters too.
    uniform.email_text = clean_text(&uniform.email_text);
    PipelineOutput {
        uniform,
        reduced,
        body_is_html,
    }
}

/// Raw `.eml` bytes straight to a pipeline output.
pub fn uniform_from_eml(
    raw: &[u8],
    source: &str,
    label: Option<Label>,
) -> Result<PipelineOutput, IngestError> {
    let record = email_record_from_eml(raw, source, label)?;
    Ok(reduce_and_normalize(&record))
}
