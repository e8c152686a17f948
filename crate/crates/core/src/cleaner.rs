//! Text cleaning and corpus preparation: emoji/control-character removal,
//! whitespace normalization, length filtering, deduplication, and the
//! two on-disk corpus formats (two-column CSV and JSONL).

use std::collections::HashSet;
use std::io::{BufRead, Read, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Label, UniformRecord};

/// Codepoint ranges the cleaner strips, parsed from an auditable config
/// (`START..END` per line, hex, inclusive) rather than hardcoded.
#[derive(Debug, Clone)]
pub struct CleaningConfig {
    ranges: Vec<(u32, u32)>,
}

#[derive(Debug, Error)]
#[error("bad range on line {line}: {detail}")]
pub struct RangeParseError {
    pub line: usize,
    pub detail: String,
}

impl CleaningConfig {
    pub fn parse(text: &str) -> Result<Self, RangeParseError> {
        let mut ranges = Vec::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |detail: &str| RangeParseError {
                line: i + 1,
                detail: detail.to_string(),
            };
            let (start, end) = line.split_once("..").ok_or_else(|| err("missing `..`"))?;
            let start = u32::from_str_radix(start.trim(), 16)
                .map_err(|_| err("start is not hex"))?;
            let end = u32::from_str_radix(end.trim(), 16).map_err(|_| err("end is not hex"))?;
            if start > end {
                return Err(err("start exceeds end"));
            }
            ranges.push((start, end));
        }
        ranges.sort_unstable();
        Ok(CleaningConfig { ranges })
    }

    /// The ranges bundled with the crate.
    pub fn bundled() -> &'static CleaningConfig {
        static BUNDLED: OnceLock<CleaningConfig> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            CleaningConfig::parse(include_str!("data/emoji_ranges.txt"))
                .expect("bundled emoji ranges parse")
        })
    }

    pub fn ranges(&self) -> &[(u32, u32)] {
        &self.ranges
    }

    /// True when the char falls in a configured range or is a non-whitespace
    /// control character.
    pub fn removes(&self, c: char) -> bool {
        if c.is_control() && !c.is_whitespace() {
            return true;
        }
        let cp = c as u32;
        self.ranges
            .binary_search_by(|&(start, end)| {
                if cp < start {
                    std::cmp::Ordering::Greater
                } else if cp > end {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }
}

/// Removes configured codepoints and collapses whitespace runs to single
/// spaces, trimming the ends. Idempotent.
pub fn clean_text(text: &str) -> String {
    clean_text_with(text, CleaningConfig::bundled())
}

pub fn clean_text_with(text: &str, config: &CleaningConfig) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if config.removes(c) {
            continue;
        }
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

// ---------------------------------------------------------------------------
// Corpus filtering

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub phishing: usize,
    pub legit: usize,
    pub unlabeled: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub records: Vec<UniformRecord>,
    pub stats: CorpusStats,
}

impl Corpus {
    /// Wraps records without filtering, e.g. after loading a saved corpus.
    pub fn from_records(records: Vec<UniformRecord>) -> Self {
        let stats = tally(&records);
        Corpus { records, stats }
    }
}

fn tally(records: &[UniformRecord]) -> CorpusStats {
    let mut stats = CorpusStats {
        total: records.len(),
        ..CorpusStats::default()
    };
    for r in records {
        match r.label {
            Some(Label::Phishing) => stats.phishing += 1,
            Some(Label::Legit) => stats.legit += 1,
            None => stats.unlabeled += 1,
        }
    }
    stats
}

/// Default body-length window, in characters.
pub const MIN_BODY_CHARS: usize = 500;
pub const MAX_BODY_CHARS: usize = 2000;

/// Drops null bodies, deduplicates exact `email_text` matches (first instance
/// wins, order preserved), and keeps bodies inside the inclusive
/// `[min_chars, max_chars]` window.
pub fn filter_corpus(
    records: impl IntoIterator<Item = UniformRecord>,
    min_chars: usize,
    max_chars: usize,
) -> Corpus {
    let mut seen: HashSet<String> = HashSet::new();
    let mut kept = Vec::new();
    for rec in records {
        if rec.body_chars == 0 {
            continue;
        }
        if rec.body_chars < min_chars || rec.body_chars > max_chars {
            continue;
        }
        if !seen.insert(rec.email_text.clone()) {
            continue;
        }
        kept.push(rec);
    }
    Corpus::from_records(kept)
}

/// Distribution summary for a corpus, over body lengths.
#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub counts: CorpusStats,
    pub len_min: usize,
    pub len_max: usize,
    pub len_mean: f64,
    /// Nearest-rank deciles p10..p90.
    pub len_deciles: [usize; 9],
}

pub fn corpus_stats(corpus: &Corpus) -> StatsSummary {
    let mut lengths: Vec<usize> = corpus.records.iter().map(|r| r.body_chars).collect();
    lengths.sort_unstable();
    if lengths.is_empty() {
        return StatsSummary {
            counts: corpus.stats,
            len_min: 0,
            len_max: 0,
            len_mean: 0.0,
            len_deciles: [0; 9],
        };
    }
    let n = lengths.len();
    let sum: usize = lengths.iter().sum();
    let mut deciles = [0usize; 9];
    for (i, d) in deciles.iter_mut().enumerate() {
        let rank = ((i + 1) * n).div_ceil(10);
        *d = lengths[rank.saturating_sub(1)];
    }
    StatsSummary {
        counts: corpus.stats,
        len_min: lengths[0],
        len_max: lengths[n - 1],
        len_mean: sum as f64 / n as f64,
        len_deciles: deciles,
    }
}

// ---------------------------------------------------------------------------
// Corpus serialization

#[derive(Debug, Error)]
pub enum CorpusIoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {detail}")]
    BadLine { line: usize, detail: String },
}

/// Writes the canonical two-column corpus CSV (`Email,Class`). Unlabeled
/// records get an empty class cell.
pub fn write_corpus_csv<W: Write>(writer: W, corpus: &Corpus) -> Result<(), CorpusIoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["Email", "Class"])?;
    for rec in &corpus.records {
        let class = rec.label.map(|l| l.as_str()).unwrap_or("");
        w.write_record([rec.email_text.as_str(), class])?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a two-column corpus CSV. The body is no longer separable from the
/// flattened text, so `body_chars` is zero: such corpora feed classification
/// and scoring, not another round of length filtering.
pub fn read_corpus_csv<R: Read>(reader: R) -> Result<Vec<UniformRecord>, CorpusIoError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let email = row.get(0).unwrap_or("").to_string();
        let class = row.get(1).unwrap_or("").trim();
        let label = match class {
            "" => None,
            "Phishing" => Some(Label::Phishing),
            "Legit" => Some(Label::Legit),
            other => {
                return Err(CorpusIoError::BadLine {
                    line: i + 2,
                    detail: format!("unknown class {other:?}"),
                })
            }
        };
        let id = {
            use sha2::Digest as _;
            hex::encode(&sha2::Sha256::digest(email.as_bytes())[..8])
        };
        records.push(UniformRecord {
            id,
            email_text: email,
            label,
            body_chars: 0,
            source: "csv".to_string(),
        });
    }
    Ok(records)
}

/// Writes records as JSONL, one object per line, preserving ids and sources.
pub fn write_records_jsonl<W: Write>(
    mut writer: W,
    records: &[UniformRecord],
) -> Result<(), CorpusIoError> {
    for rec in records {
        let line = serde_json::to_string(rec).expect("record serializes");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records_jsonl<R: Read>(reader: R) -> Result<Vec<UniformRecord>, CorpusIoError> {
    let buf = std::io::BufReader::new(reader);
    let mut records = Vec::new();
    for (i, line) in buf.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: UniformRecord =
            serde_json::from_str(&line).map_err(|e| CorpusIoError::BadLine {
                line: i + 1,
                detail: e.to_string(),
            })?;
        records.push(rec);
    }
    Ok(records)
}
