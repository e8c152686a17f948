//! Prompt assembly and verdict parsing for structured phishing
//! classification. The model is addressed with a fixed expert persona and
//! must answer with a five-field JSON object; parsing is strict so that a
//! drifting model surfaces as an explicit schema error instead of a silently
//! wrong score.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::ingest::UniformRecord;

/// Default system prompt.
pub const PERSONA_PROMPT: &str = "You are a cybersecurity expert specialized in detecting and analyzing phishing emails. Analyze the provided email (including subject line, body text, sender information, and links) to determine whether it is a phishing email or a legitimate email. Your result must follow the provided function call.";

/// Risk tier reported by the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Risk {
    High,
    Medium,
    Low,
}

impl Risk {
    pub fn as_str(&self) -> &'static str {
        match self {
            Risk::High => "High",
            Risk::Medium => "Medium",
            Risk::Low => "Low",
        }
    }

    /// Case-insensitive parse to the canonical tier.
    pub fn parse(s: &str) -> Option<Risk> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Some(Risk::High),
            "medium" => Some(Risk::Medium),
            "low" => Some(Risk::Low),
            _ => None,
        }
    }
}

impl std::fmt::Display for Risk {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Structured verdict. Field names on the wire are exactly the schema's:
/// `Is_Phishing`, `Risk`, `Social_Engineering_Elements`, `Actions`, `Reason`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(rename = "Is_Phishing")]
    pub is_phishing: bool,
    #[serde(rename = "Risk")]
    pub risk: Risk,
    #[serde(rename = "Social_Engineering_Elements")]
    pub social_engineering_elements: Vec<String>,
    #[serde(rename = "Actions")]
    pub actions: Vec<String>,
    #[serde(rename = "Reason")]
    pub reason: String,
}

/// JSON schema the model output must satisfy.
pub fn verdict_schema() -> Value {
    json!({
        "type": "object",
        "properties": {
            "Is_Phishing": {
                "type": "boolean",
                "description": "Whether the email is a phishing email"
            },
            "Risk": {
                "type": "string",
                "enum": ["High", "Medium", "Low"],
                "description": "Risk level of the email"
            },
            "Social_Engineering_Elements": {
                "type": "array",
                "items": { "type": "string" },
                "description": "Social engineering tactics identified in the email"
            },
            "Actions": {
                "type": "array",
                "items": { "type": "string" },
                "description": "Recommended actions for the recipient"
            },
            "Reason": {
                "type": "string",
                "description": "Explanation of the classification"
            }
        },
        "required": [
            "Is_Phishing",
            "Risk",
            "Social_Engineering_Elements",
            "Actions",
            "Reason"
        ],
        "additionalProperties": false
    })
}

/// A fully assembled classification request.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationRequest {
    pub system_prompt: String,
    pub user_content: String,
    pub output_schema: Value,
}

/// Knobs for request assembly. The persona is used verbatim; extra material
/// (URL findings, embedded schema) goes into the user content so the system
/// prompt never mutates at runtime.
#[derive(Debug, Clone)]
pub struct PromptOptions {
    pub persona: String,
    /// For endpoints without native structured output: restate the schema in
    /// the user content.
    pub embed_schema: bool,
    /// Rendered URL-analysis findings to append, when that stage is enabled.
    pub url_report: Option<String>,
}

impl Default for PromptOptions {
    fn default() -> Self {
        PromptOptions {
            persona: PERSONA_PROMPT.to_string(),
            embed_schema: false,
            url_report: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("record {0} has empty email text")]
    EmptyEmail(String),
}

pub fn build_request(record: &UniformRecord) -> Result<ClassificationRequest, PromptError> {
    build_request_with(record, &PromptOptions::default())
}

pub fn build_request_with(
    record: &UniformRecord,
    options: &PromptOptions,
) -> Result<ClassificationRequest, PromptError> {
    if record.email_text.is_empty() {
        return Err(PromptError::EmptyEmail(record.id.clone()));
    }
    let mut user_content = record.email_text.clone();
    if let Some(report) = options.url_report.as_deref() {
        if !report.is_empty() {
            user_content.push_str("\n\nURL ANALYSIS:\n");
            user_content.push_str(report);
        }
    }
    if options.embed_schema {
        user_content.push_str(
            "\n\nRespond with a single JSON object matching this schema and nothing else:\n",
        );
        user_content.push_str(&verdict_schema().to_string());
    }
    Ok(ClassificationRequest {
        system_prompt: options.persona.clone(),
        user_content,
        output_schema: verdict_schema(),
    })
}

#[derive(Debug, Error)]
pub enum VerdictError {
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("unknown risk tier {0:?}")]
    UnknownRisk(String),
}

/// Parses a model payload into a [`Verdict`]. Tolerates code fences and
/// surrounding whitespace and accepts any casing of the risk tier; everything
/// else is strict. Unknown extra fields are ignored.
pub fn parse_verdict(payload: &str) -> Result<Verdict, VerdictError> {
    let stripped = strip_code_fences(payload);
    let value: Value = serde_json::from_str(stripped)
        .map_err(|e| VerdictError::MalformedPayload(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| VerdictError::MalformedPayload("top level is not an object".into()))?;

    let field = |name: &str| -> Result<&Value, VerdictError> {
        obj.get(name)
            .ok_or_else(|| VerdictError::SchemaViolation(format!("missing field `{name}`")))
    };

    let is_phishing = field("Is_Phishing")?
        .as_bool()
        .ok_or_else(|| VerdictError::SchemaViolation("`Is_Phishing` is not a boolean".into()))?;

    let risk_raw = field("Risk")?
        .as_str()
        .ok_or_else(|| VerdictError::SchemaViolation("`Risk` is not a string".into()))?;
    let risk = Risk::parse(risk_raw).ok_or_else(|| VerdictError::UnknownRisk(risk_raw.into()))?;

    let string_list = |name: &str| -> Result<Vec<String>, VerdictError> {
        let items = field(name)?
            .as_array()
            .ok_or_else(|| VerdictError::SchemaViolation(format!("`{name}` is not an array")))?;
        items
            .iter()
            .map(|v| {
                v.as_str().map(str::to_string).ok_or_else(|| {
                    VerdictError::SchemaViolation(format!("`{name}` contains a non-string item"))
                })
            })
            .collect()
    };
    let social_engineering_elements = string_list("Social_Engineering_Elements")?;
    let actions = string_list("Actions")?;

    let reason = field("Reason")?
        .as_str()
        .ok_or_else(|| VerdictError::SchemaViolation("`Reason` is not a string".into()))?
        .to_string();

    Ok(Verdict {
        is_phishing,
        risk,
        social_engineering_elements,
        actions,
        reason,
    })
}

/// Canonical serialization: schema field names, fixed order.
pub fn canonical_json(verdict: &Verdict) -> String {
    serde_json::to_string(verdict).expect("verdict serializes")
}

fn strip_code_fences(payload: &str) -> &str {
    let trimmed = payload.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    // Drop the info string (e.g. ```json) through the first newline.
    let body = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => rest,
    };
    body.trim_end()
        .strip_suffix("```")
        .unwrap_or(body)
        .trim()
}
