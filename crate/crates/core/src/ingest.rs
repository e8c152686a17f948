//! Email ingestion: tolerant `.eml`/MIME parsing, transfer-encoding and
//! charset decoding, tabular dataset loading, and normalization into the
//! uniform record format used by the rest of the pipeline.
//!
//! Real-world corpora are full of structurally broken messages, so the parser
//! never rejects input: malformed structure degrades to an opaque single-part
//! message and undecodable content becomes a null body. The only hard error
//! is empty input.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Ground-truth class of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Phishing,
    Legit,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Phishing => "Phishing",
            Label::Legit => "Legit",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferEncoding {
    None,
    QuotedPrintable,
    Base64,
    Other,
}

/// A leaf MIME part. `payload` holds the raw bytes exactly as they appeared;
/// decoding happens at body-selection time.
#[derive(Debug, Clone)]
pub struct MimePart {
    /// Lowercased media type, e.g. `text/html`.
    pub content_type: String,
    pub charset: Option<String>,
    pub transfer_encoding: TransferEncoding,
    pub payload: Vec<u8>,
}

/// Parsed message: unfolded headers in original order plus flattened leaf parts.
#[derive(Debug, Clone)]
pub struct RawEmail {
    headers: Vec<(String, String)>,
    pub parts: Vec<MimePart>,
}

impl RawEmail {
    /// First value of a header, case-insensitive on the name.
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn headers<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> {
        self.headers
            .iter()
            .filter(move |(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn all_headers(&self) -> &[(String, String)] {
        &self.headers
    }

    /// Subject with RFC 2047 encoded words decoded; empty when absent.
    pub fn subject(&self) -> String {
        decode_encoded_words(self.header("Subject").unwrap_or(""))
    }

    /// From header with encoded words decoded, display name kept verbatim.
    pub fn sender(&self) -> String {
        decode_encoded_words(self.header("From").unwrap_or(""))
    }
}

/// One email after ingestion, before reduction and cleaning.
#[derive(Debug, Clone)]
pub struct EmailRecord {
    /// Short content hash; stable across runs for identical input and source.
    pub id: String,
    pub subject: String,
    pub sender: String,
    pub body_text: Option<String>,
    pub body_html: Option<String>,
    pub label: Option<Label>,
    /// Dataset or mailbox tag this record came from.
    pub source: String,
}

impl EmailRecord {
    /// Both bodies absent, e.g. after a failed base64 decode.
    pub fn is_null_body(&self) -> bool {
        self.body_text.is_none() && self.body_html.is_none()
    }
}

/// Flattened single-string form every email is normalized into before
/// classification. `email_text` is never split back apart; the auxiliary
/// fields carry what downstream stages need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformRecord {
    pub id: String,
    #[serde(rename = "email")]
    pub email_text: String,
    #[serde(rename = "class")]
    pub label: Option<Label>,
    /// Character count of the body portion, measured at normalization time.
    /// Zero for null bodies and for records loaded from two-column CSV, where
    /// the body is no longer separable.
    #[serde(default)]
    pub body_chars: usize,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty input")]
    EmptyInput,
}

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {detail}")]
    Unparseable { path: String, detail: String },
    #[error("column {0:?} not present in input")]
    UnknownColumn(String),
}

// ---------------------------------------------------------------------------
// MIME parsing

/// Parses raw `.eml` bytes. Returns a single opaque part when the structure
/// is malformed; errs only on empty input.
pub fn parse_eml(raw: &[u8]) -> Result<RawEmail, IngestError> {
    if raw.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let (headers, body) = split_headers(raw);
    let parts = collect_parts(&headers, body, 0);
    Ok(RawEmail { headers, parts })
}

/// Splits a message region into unfolded headers and the body bytes that
/// follow. Header parsing stops at the first blank line or at the first line
/// that is neither a header nor a continuation; everything after joins the body.
fn split_headers(raw: &[u8]) -> (Vec<(String, String)>, &[u8]) {
    let mut headers: Vec<(String, String)> = Vec::new();
    let mut pos = 0usize;

    while pos < raw.len() {
        let line_end = raw[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .unwrap_or(raw.len());
        let mut line = &raw[pos..line_end];
        if line.ends_with(b"\r") {
            line = &line[..line.len() - 1];
        }
        let next = (line_end + 1).min(raw.len());

        if line.is_empty() {
            // Blank separator: body starts after it.
            return (headers, &raw[next..]);
        }

        if line[0] == b' ' || line[0] == b'\t' {
            // Continuation of the previous header.
            if headers.is_empty() {
                return (headers, &raw[pos..]);
            }
            let (_, value) = headers.last_mut().unwrap();
            let cont = String::from_utf8_lossy(line);
            let cont = cont.trim();
            if !cont.is_empty() {
                if !value.is_empty() {
                    value.push(' ');
                }
                value.push_str(cont);
            }
            pos = next;
            continue;
        }

        match split_header_line(line) {
            Some((name, value)) => {
                headers.push((name, value));
                pos = next;
            }
            // Not a header: the body starts here, separator or not.
            None => return (headers, &raw[pos..]),
        }
    }
    (headers, &[])
}

fn split_header_line(line: &[u8]) -> Option<(String, String)> {
    let colon = line.iter().position(|&b| b == b':')?;
    let name = &line[..colon];
    if name.is_empty() || name.iter().any(|&b| b == b' ' || b == b'\t') {
        return None;
    }
    let name = String::from_utf8_lossy(name).into_owned();
    let value = String::from_utf8_lossy(&line[colon + 1..]).trim().to_string();
    Some((name, value))
}

const MAX_MULTIPART_DEPTH: usize = 8;

fn collect_parts(headers: &[(String, String)], body: &[u8], depth: usize) -> Vec<MimePart> {
    let content_type = header_value(headers, "Content-Type");
    let (media_type, params) = parse_content_type(content_type.unwrap_or(""));

    if media_type.starts_with("multipart/") && depth < MAX_MULTIPART_DEPTH {
        if let Some(boundary) = params_get(&params, "boundary") {
            let sections = split_multipart(body, boundary.as_bytes());
            if !sections.is_empty() {
                let mut parts = Vec::new();
                for section in sections {
                    let (sub_headers, sub_body) = split_headers(section);
                    parts.extend(collect_parts(&sub_headers, sub_body, depth + 1));
                }
                if !parts.is_empty() {
                    return parts;
                }
            }
        }
        // Boundary missing or never found: fall through to an opaque part.
    }

    let charset = params_get(&params, "charset");
    let cte = header_value(headers, "Content-Transfer-Encoding")
        .map(parse_transfer_encoding)
        .unwrap_or(TransferEncoding::None);
    vec![MimePart {
        content_type: if media_type.is_empty() {
            "text/plain".to_string()
        } else {
            media_type
        },
        charset,
        transfer_encoding: cte,
        payload: body.to_vec(),
    }]
}

fn header_value<'a>(headers: &'a [(String, String)], name: &str) -> Option<&'a str> {
    headers
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, v)| v.as_str())
}

fn parse_transfer_encoding(value: &str) -> TransferEncoding {
    match value.trim().to_ascii_lowercase().as_str() {
        "base64" => TransferEncoding::Base64,
        "quoted-printable" => TransferEncoding::QuotedPrintable,
        "" | "7bit" | "8bit" | "binary" => TransferEncoding::None,
        _ => TransferEncoding::Other,
    }
}

/// Returns (lowercased media type, parameters).
fn parse_content_type(value: &str) -> (String, Vec<(String, String)>) {
    let mut segments = value.split(';');
    let media_type = segments.next().unwrap_or("").trim().to_ascii_lowercase();
    let mut params = Vec::new();
    for seg in segments {
        if let Some((name, val)) = seg.split_once('=') {
            let name = name.trim().to_ascii_lowercase();
            let val = val.trim().trim_matches('"').to_string();
            if !name.is_empty() && !val.is_empty() {
                params.push((name, val));
            }
        }
    }
    (media_type, params)
}

fn params_get(params: &[(String, String)], name: &str) -> Option<String> {
    params
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, v)| v.clone())
}

/// Splits a multipart body on `--boundary` delimiter lines. Returns the raw
/// sections between delimiters; empty when the boundary never occurs.
fn split_multipart<'a>(body: &'a [u8], boundary: &[u8]) -> Vec<&'a [u8]> {
    let mut delim = Vec::with_capacity(boundary.len() + 2);
    delim.extend_from_slice(b"--");
    delim.extend_from_slice(boundary);

    let mut marks: Vec<(usize, usize, bool)> = Vec::new(); // (line start, content start, terminator)
    let mut pos = 0usize;
    while pos <= body.len() {
        let line_end = body[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .unwrap_or(body.len());
        let mut line = &body[pos..line_end];
        if line.ends_with(b"\r") {
            line = &line[..line.len() - 1];
        }
        if line.starts_with(&delim) {
            let rest = &line[delim.len()..];
            let terminator = rest.starts_with(b"--");
            marks.push((pos, (line_end + 1).min(body.len()), terminator));
            if terminator {
                break;
            }
        }
        if line_end >= body.len() {
            break;
        }
        pos = line_end + 1;
    }

    let mut sections = Vec::new();
    for window in marks.windows(2) {
        let (_, content_start, _) = window[0];
        let (next_line_start, _, _) = window[1];
        let mut end = next_line_start;
        // Drop the newline that precedes the delimiter line.
        if end > content_start && body[end - 1] == b'\n' {
            end -= 1;
            if end > content_start && body[end - 1] == b'\r' {
                end -= 1;
            }
        }
        sections.push(&body[content_start..end]);
    }
    // An unterminated final part still counts.
    if let Some(&(_, content_start, terminator)) = marks.last() {
        if !terminator && content_start < body.len() {
            sections.push(&body[content_start..]);
        }
    }
    sections
}

// ---------------------------------------------------------------------------
// Body selection and decoding

/// Picks the preferred displayable part and decodes it: first `text/html`
/// part if any, otherwise the first `text/plain`. Returns `(is_html, text)`,
/// or `None` when no such part exists or decoding fails (the null-body policy
/// for undecodable base64 content).
pub fn select_body(msg: &RawEmail) -> Option<(bool, String)> {
    let part = msg
        .parts
        .iter()
        .find(|p| p.content_type == "text/html")
        .map(|p| (true, p))
        .or_else(|| {
            msg.parts
                .iter()
                .find(|p| p.content_type == "text/plain")
                .map(|p| (false, p))
        })?;
    let (is_html, part) = part;
    decode_part(part).map(|text| (is_html, text))
}

/// Applies the transfer encoding, then the declared charset (lossy). Declared
/// or detected base64 that fails to decode yields `None`.
pub fn decode_part(part: &MimePart) -> Option<String> {
    let bytes: Vec<u8> = match part.transfer_encoding {
        TransferEncoding::Base64 => decode_base64_tolerant(&part.payload)?,
        TransferEncoding::QuotedPrintable => decode_quoted_printable(&part.payload),
        TransferEncoding::None => {
            if looks_like_base64(&part.payload) {
                decode_base64_tolerant(&part.payload)?
            } else {
                part.payload.clone()
            }
        }
        TransferEncoding::Other => part.payload.clone(),
    };
    Some(decode_charset(&bytes, part.charset.as_deref()))
}

fn decode_charset(bytes: &[u8], charset: Option<&str>) -> String {
    let encoding = charset
        .and_then(|label| encoding_rs::Encoding::for_label(label.trim().as_bytes()))
        .unwrap_or(encoding_rs::UTF_8);
    let (text, _, _) = encoding.decode(bytes);
    text.into_owned()
}

/// Strips whitespace, restores missing padding, and decodes. `None` on any
/// remaining error.
fn decode_base64_tolerant(payload: &[u8]) -> Option<Vec<u8>> {
    let mut compact: Vec<u8> = payload
        .iter()
        .copied()
        .filter(|b| !b.is_ascii_whitespace())
        .collect();
    match compact.len() % 4 {
        0 => {}
        1 => return None,
        n => compact.extend(std::iter::repeat(b'=').take(4 - n)),
    }
    BASE64.decode(&compact).ok()
}

/// Heuristic for bodies that are base64 without a declaring header: at least
/// 20 characters, at least 95% of them from the base64 alphabet, no interior
/// spaces or tabs (line wrapping is fine), and a length that pads out to a
/// multiple of four. Long unbroken alphanumeric tokens can still trip this;
/// prose with normal spacing never does.
pub fn looks_like_base64(payload: &[u8]) -> bool {
    let trimmed = payload.trim_ascii();
    let mut total = 0usize;
    let mut alphabet = 0usize;
    for &b in trimmed {
        if b == b'\r' || b == b'\n' {
            continue;
        }
        if b == b' ' || b == b'\t' {
            return false;
        }
        total += 1;
        if b.is_ascii_alphanumeric() || b == b'+' || b == b'/' || b == b'=' {
            alphabet += 1;
        }
    }
    total >= 20 && total % 4 != 1 && alphabet * 100 >= total * 95
}

fn decode_quoted_printable(input: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(input.len());
    let mut i = 0;
    while i < input.len() {
        let b = input[i];
        if b != b'=' {
            out.push(b);
            i += 1;
            continue;
        }
        // Soft line break: `=` at end of line.
        if input[i + 1..].starts_with(b"\r\n") {
            i += 3;
            continue;
        }
        if input[i + 1..].starts_with(b"\n") {
            i += 2;
            continue;
        }
        let hex = input.get(i + 1..i + 3).and_then(|pair| {
            let hi = (pair[0] as char).to_digit(16)?;
            let lo = (pair[1] as char).to_digit(16)?;
            Some((hi * 16 + lo) as u8)
        });
        match hex {
            Some(byte) => {
                out.push(byte);
                i += 3;
            }
            None => {
                // Malformed escape kept verbatim.
                out.push(b);
                i += 1;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// RFC 2047 encoded words

/// Decodes `=?charset?B|Q?data?=` words in a header value. Undecodable words
/// are left verbatim.
pub fn decode_encoded_words(value: &str) -> String {
    // Whitespace between adjacent encoded words is transparent per RFC 2047.
    let joined = value.replace("?= =?", "?==?").replace("?=\t=?", "?==?");
    let mut out = String::with_capacity(joined.len());
    let mut rest = joined.as_str();
    while let Some(start) = rest.find("=?") {
        out.push_str(&rest[..start]);
        let candidate = &rest[start..];
        match decode_one_encoded_word(candidate) {
            Some((decoded, consumed)) => {
                out.push_str(&decoded);
                rest = &candidate[consumed..];
            }
            None => {
                out.push_str("=?");
                rest = &candidate[2..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Decodes a single encoded word at the start of `s`; returns the decoded
/// text and the byte length consumed.
fn decode_one_encoded_word(s: &str) -> Option<(String, usize)> {
    let inner = s.strip_prefix("=?")?;
    let q1 = inner.find('?')?;
    let charset = &inner[..q1];
    let after_charset = &inner[q1 + 1..];
    let q2 = after_charset.find('?')?;
    let encoding = &after_charset[..q2];
    let after_encoding = &after_charset[q2 + 1..];
    let end = after_encoding.find("?=")?;
    let data = &after_encoding[..end];
    let consumed = 2 + q1 + 1 + q2 + 1 + end + 2;

    let bytes = match encoding {
        "B" | "b" => decode_base64_tolerant(data.as_bytes())?,
        "Q" | "q" => {
            let unescaped: Vec<u8> = data
                .bytes()
                .map(|b| if b == b'_' { b' ' } else { b })
                .collect();
            decode_quoted_printable(&unescaped)
        }
        _ => return None,
    };
    let charset = charset.split('*').next().unwrap_or(charset);
    encoding_rs::Encoding::for_label(charset.as_bytes())
        .map(|enc| (enc.decode(&bytes).0.into_owned(), consumed))
}

// ---------------------------------------------------------------------------
// Record construction

fn short_hash(chunks: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for chunk in chunks {
        hasher.update(chunk);
        hasher.update([0u8]);
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Parses raw message bytes into an [`EmailRecord`]. The id is a content hash
/// of the raw bytes and the source tag, so reruns are reproducible.
pub fn email_record_from_eml(
    raw: &[u8],
    source: &str,
    label: Option<Label>,
) -> Result<EmailRecord, IngestError> {
    let msg = parse_eml(raw)?;
    let html = msg
        .parts
        .iter()
        .find(|p| p.content_type == "text/html")
        .and_then(decode_part);
    let text = msg
        .parts
        .iter()
        .find(|p| p.content_type == "text/plain")
        .and_then(decode_part);
    Ok(EmailRecord {
        id: short_hash(&[source.as_bytes(), raw]),
        subject: msg.subject(),
        sender: msg.sender(),
        body_text: text,
        body_html: html,
        label,
        source: source.to_string(),
    })
}

/// Flattens a record into the uniform single-string format. `body` is the
/// cleaned body text chosen upstream (reduced HTML or plain text).
pub fn normalize_record(rec: &EmailRecord, body: &str) -> UniformRecord {
    UniformRecord {
        id: rec.id.clone(),
        email_text: format!(
            "SUBJECT: {}, FROM: {}, EMAIL: {}",
            rec.subject, rec.sender, body
        ),
        label: rec.label,
        body_chars: body.chars().count(),
        source: rec.source.clone(),
    }
}

// ---------------------------------------------------------------------------
// Tabular datasets

/// Which input columns (CSV) or keys (JSON) map onto record fields.
#[derive(Debug, Clone, Default)]
pub struct ColumnMapping {
    pub subject: Option<String>,
    pub sender: Option<String>,
    pub body: Option<String>,
    pub label: Option<String>,
}

/// Label spellings accepted for each class, compared lowercased and trimmed.
#[derive(Debug, Clone)]
pub struct LabelSynonyms {
    phishing: HashSet<String>,
    legit: HashSet<String>,
}

impl Default for LabelSynonyms {
    fn default() -> Self {
        let phishing = ["phishing", "phish", "spam", "fraud", "scam", "malicious", "1"];
        let legit = ["legit", "legitimate", "ham", "non-spam", "benign", "safe", "normal", "0"];
        LabelSynonyms {
            phishing: phishing.iter().map(|s| s.to_string()).collect(),
            legit: legit.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl LabelSynonyms {
    pub fn new(
        phishing: impl IntoIterator<Item = String>,
        legit: impl IntoIterator<Item = String>,
    ) -> Self {
        LabelSynonyms {
            phishing: phishing.into_iter().map(|s| s.to_lowercase()).collect(),
            legit: legit.into_iter().map(|s| s.to_lowercase()).collect(),
        }
    }
}

pub fn normalize_label(raw: &str, synonyms: &LabelSynonyms) -> Option<Label> {
    let key = raw.trim().to_lowercase();
    if synonyms.phishing.contains(&key) {
        Some(Label::Phishing)
    } else if synonyms.legit.contains(&key) {
        Some(Label::Legit)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TabularFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct RowFailure {
    /// 1-based data row (CSV) or array index (JSON).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct LoadReport {
    pub records: Vec<EmailRecord>,
    pub row_failures: Vec<RowFailure>,
}

/// Loads a CSV or JSON dataset. Per-row problems are collected in the report
/// instead of aborting the load; only unreadable or structurally unusable
/// files error out.
pub fn load_tabular_dataset(
    path: &Path,
    format: TabularFormat,
    mapping: &ColumnMapping,
    synonyms: &LabelSynonyms,
    source: &str,
) -> Result<LoadReport, TabularError> {
    let mut file = std::fs::File::open(path).map_err(|e| TabularError::UnreadableFile {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut contents = Vec::new();
    file.read_to_end(&mut contents)
        .map_err(|e| TabularError::UnreadableFile {
            path: path.display().to_string(),
            source: e,
        })?;
    match format {
        TabularFormat::Csv => load_csv(&contents, path, mapping, synonyms, source),
        TabularFormat::Json => load_json(&contents, path, mapping, synonyms, source),
    }
}

fn load_csv(
    contents: &[u8],
    path: &Path,
    mapping: &ColumnMapping,
    synonyms: &LabelSynonyms,
    source: &str,
) -> Result<LoadReport, TabularError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(contents);
    let headers = reader
        .headers()
        .map_err(|e| TabularError::Unparseable {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?
        .clone();

    let index_of = |wanted: &Option<String>| -> Result<Option<usize>, TabularError> {
        match wanted {
            None => Ok(None),
            Some(name) => headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .map(Some)
                .ok_or_else(|| TabularError::UnknownColumn(name.clone())),
        }
    };
    let subject_idx = index_of(&mapping.subject)?;
    let sender_idx = index_of(&mapping.sender)?;
    let body_idx = index_of(&mapping.body)?;
    let label_idx = index_of(&mapping.label)?;

    let mut report = LoadReport::default();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.row_failures.push(RowFailure {
                    row: row_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let field = |idx: Option<usize>| idx.and_then(|j| row.get(j)).unwrap_or("").to_string();
        let label_raw = field(label_idx);
        let label = match resolve_label(&label_raw, synonyms) {
            Ok(l) => l,
            Err(reason) => {
                report.row_failures.push(RowFailure { row: row_no, reason });
                continue;
            }
        };
        report.records.push(build_tabular_record(
            field(subject_idx),
            field(sender_idx),
            field(body_idx),
            label,
            source,
        ));
    }
    Ok(report)
}

fn load_json(
    contents: &[u8],
    path: &Path,
    mapping: &ColumnMapping,
    synonyms: &LabelSynonyms,
    source: &str,
) -> Result<LoadReport, TabularError> {
    let value: serde_json::Value =
        serde_json::from_slice(contents).map_err(|e| TabularError::Unparseable {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
    let rows = value.as_array().ok_or_else(|| TabularError::Unparseable {
        path: path.display().to_string(),
        detail: "top-level value is not an array".to_string(),
    })?;

    let mut report = LoadReport::default();
    for (i, row) in rows.iter().enumerate() {
        let obj = match row.as_object() {
            Some(o) => o,
            None => {
                report.row_failures.push(RowFailure {
                    row: i,
                    reason: "row is not an object".to_string(),
                });
                continue;
            }
        };
        // Missing keys degrade to empty fields; JSON rows are often sparse.
        let field = |wanted: &Option<String>| -> String {
            wanted
                .as_ref()
                .and_then(|k| obj.get(k))
                .map(json_value_to_string)
                .unwrap_or_default()
        };
        let label_raw = field(&mapping.label);
        let label = match resolve_label(&label_raw, synonyms) {
            Ok(l) => l,
            Err(reason) => {
                report.row_failures.push(RowFailure { row: i, reason });
                continue;
            }
        };
        report.records.push(build_tabular_record(
            field(&mapping.subject),
            field(&mapping.sender),
            field(&mapping.body),
            label,
            source,
        ));
    }
    Ok(report)
}

fn json_value_to_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Empty label cell means unlabeled; a non-empty cell must resolve through
/// the synonym table.
fn resolve_label(raw: &str, synonyms: &LabelSynonyms) -> Result<Option<Label>, String> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    normalize_label(trimmed, synonyms)
        .map(Some)
        .ok_or_else(|| format!("unrecognized label {trimmed:?}"))
}

fn build_tabular_record(
    subject: String,
    sender: String,
    body: String,
    label: Option<Label>,
    source: &str,
) -> EmailRecord {
    let id = short_hash(&[
        source.as_bytes(),
        subject.as_bytes(),
        sender.as_bytes(),
        body.as_bytes(),
    ]);
    EmailRecord {
        id,
        subject,
        sender,
        body_text: Some(body),
        body_html: None,
        label,
        source: source.to_string(),
    }
}
