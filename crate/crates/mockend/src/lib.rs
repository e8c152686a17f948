//! Scripted HTTP endpoint for exercising the chat-completions client and the
//! URL reputation client without touching the network. Responses are keyed by
//! a hash of the request content, so tests stay deterministic and fixtures
//! can be shared across suites. Also hosts the canned `.eml` builders used by
//! the integration tests.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Deserialize;
use sha2::{Digest, Sha256};

pub mod fixtures;

/// One scripted reply. Entries in a script are consumed in order; the last
/// entry repeats once the script is exhausted. `status: 0` drops the
/// connection without writing a response, simulating a dead endpoint.
#[derive(Debug, Clone, Deserialize)]
pub struct ScriptEntry {
    pub status: u16,
    #[serde(default)]
    pub content: String,
    #[serde(default)]
    pub delay_ms: u64,
    /// Overrides the chat-completion envelope entirely when set.
    #[serde(default)]
    pub raw_body: Option<String>,
}

impl ScriptEntry {
    pub fn ok(content: impl Into<String>) -> Self {
        ScriptEntry {
            status: 200,
            content: content.into(),
            delay_ms: 0,
            raw_body: None,
        }
    }

    pub fn status(status: u16) -> Self {
        ScriptEntry {
            status,
            content: String::new(),
            delay_ms: 0,
            raw_body: None,
        }
    }

    pub fn with_delay(mut self, ms: u64) -> Self {
        self.delay_ms = ms;
        self
    }

    pub fn with_raw_body(mut self, body: impl Into<String>) -> Self {
        self.raw_body = Some(body.into());
        self
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ChatFixture {
    /// Script used when no per-hash script matches.
    #[serde(default)]
    pub default: Vec<ScriptEntry>,
    /// Scripts keyed by `content_hash` of the last user message.
    #[serde(default)]
    pub by_hash: HashMap<String, Vec<ScriptEntry>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReputationEntry {
    #[serde(default)]
    pub malicious: u32,
    #[serde(default)]
    pub suspicious: u32,
    #[serde(default)]
    pub harmless: u32,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReputationFixture {
    /// Status for reputation responses; non-200 simulates provider failure.
    #[serde(default = "default_status")]
    pub status: u16,
    #[serde(default)]
    pub default: Option<ReputationEntry>,
    /// Analysis stats keyed by the host of the queried URL.
    #[serde(default)]
    pub by_domain: HashMap<String, ReputationEntry>,
}

fn default_status() -> u16 {
    200
}

impl Default for ReputationFixture {
    fn default() -> Self {
        ReputationFixture {
            status: 200,
            default: None,
            by_domain: HashMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct MockFixture {
    #[serde(default)]
    pub chat: ChatFixture,
    #[serde(default)]
    pub reputation: ReputationFixture,
}

impl MockFixture {
    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Fixture that answers every chat request with the same assistant content.
    pub fn answering(content: impl Into<String>) -> Self {
        MockFixture {
            chat: ChatFixture {
                default: vec![ScriptEntry::ok(content)],
                ..ChatFixture::default()
            },
            reputation: ReputationFixture::default(),
        }
    }

    pub fn script_for(mut self, user_content: &str, script: Vec<ScriptEntry>) -> Self {
        self.chat.by_hash.insert(content_hash(user_content), script);
        self
    }

    pub fn with_default_script(mut self, script: Vec<ScriptEntry>) -> Self {
        self.chat.default = script;
        self
    }

    pub fn with_reputation(mut self, domain: &str, entry: ReputationEntry) -> Self {
        self.reputation.by_domain.insert(domain.to_string(), entry);
        self
    }

    pub fn with_reputation_status(mut self, status: u16) -> Self {
        self.reputation.status = status;
        self
    }
}

/// Key used to script chat responses: hex SHA-256 of the last user message.
pub fn content_hash(user_content: &str) -> String {
    hex::encode(Sha256::digest(user_content.as_bytes()))
}

#[derive(Default)]
struct Counters {
    chat_requests: AtomicU64,
    reputation_requests: AtomicU64,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    per_hash: Mutex<HashMap<String, u64>>,
    cursors: Mutex<HashMap<String, usize>>,
}

pub struct MockEndpoint {
    addr: SocketAddr,
    counters: Arc<Counters>,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockEndpoint {
    pub fn start(fixture: MockFixture) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let counters = Arc::new(Counters::default());
        let shutdown = Arc::new(AtomicBool::new(false));
        let fixture = Arc::new(fixture);

        let c = Arc::clone(&counters);
        let s = Arc::clone(&shutdown);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if s.load(Ordering::SeqCst) {
                    break;
                }
                let stream = match stream {
                    Ok(st) => st,
                    Err(_) => continue,
                };
                let fixture = Arc::clone(&fixture);
                let counters = Arc::clone(&c);
                std::thread::spawn(move || {
                    let _ = handle_connection(stream, &fixture, &counters);
                });
            }
        });

        Ok(MockEndpoint {
            addr,
            counters,
            shutdown,
            handle: Some(handle),
        })
    }

    /// Base URL, e.g. `http://127.0.0.1:41234`.
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Chat requests that actually hit the endpoint (cache hits never do).
    pub fn chat_requests(&self) -> u64 {
        self.counters.chat_requests.load(Ordering::SeqCst)
    }

    pub fn reputation_requests(&self) -> u64 {
        self.counters.reputation_requests.load(Ordering::SeqCst)
    }

    /// High-water mark of chat requests being served at the same time.
    pub fn max_in_flight(&self) -> usize {
        self.counters.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn requests_for(&self, user_content: &str) -> u64 {
        let hash = content_hash(user_content);
        self.counters
            .per_hash
            .lock()
            .unwrap()
            .get(&hash)
            .copied()
            .unwrap_or(0)
    }
}

impl Drop for MockEndpoint {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Poke the listener so the accept loop observes the flag.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn handle_connection(
    stream: TcpStream,
    fixture: &MockFixture,
    counters: &Counters,
) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    let mut reader = BufReader::new(stream.try_clone()?);

    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or("").to_string();
    let target = parts.next().unwrap_or("").to_string();

    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }

    let mut body = vec![0u8; content_length];
    if content_length > 0 {
        reader.read_exact(&mut body)?;
    }

    let mut stream = stream;
    if method == "POST" && target.ends_with("/chat/completions") {
        serve_chat(&mut stream, &body, fixture, counters)
    } else if method == "GET" && target.contains("/report") {
        serve_reputation(&mut stream, &target, fixture, counters)
    } else {
        write_response(&mut stream, 404, "application/json", b"{\"error\":\"no route\"}")
    }
}

fn serve_chat(
    stream: &mut TcpStream,
    body: &[u8],
    fixture: &MockFixture,
    counters: &Counters,
) -> std::io::Result<()> {
    counters.chat_requests.fetch_add(1, Ordering::SeqCst);
    let now = counters.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    counters.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let result = serve_chat_inner(stream, body, fixture, counters);
    counters.in_flight.fetch_sub(1, Ordering::SeqCst);
    result
}

fn serve_chat_inner(
    stream: &mut TcpStream,
    body: &[u8],
    fixture: &MockFixture,
    counters: &Counters,
) -> std::io::Result<()> {
    let parsed: serde_json::Value = serde_json::from_slice(body).unwrap_or_default();
    let user_content = parsed["messages"]
        .as_array()
        .and_then(|msgs| {
            msgs.iter()
                .rev()
                .find(|m| m["role"].as_str() == Some("user"))
        })
        .and_then(|m| m["content"].as_str())
        .unwrap_or("")
        .to_string();
    let hash = content_hash(&user_content);

    *counters
        .per_hash
        .lock()
        .unwrap()
        .entry(hash.clone())
        .or_insert(0) += 1;

    let script = fixture
        .chat
        .by_hash
        .get(&hash)
        .filter(|s| !s.is_empty())
        .or(Some(&fixture.chat.default))
        .filter(|s| !s.is_empty());

    let entry = match script {
        Some(script) => {
            let mut cursors = counters.cursors.lock().unwrap();
            let cursor = cursors.entry(hash).or_insert(0);
            let entry = script[(*cursor).min(script.len() - 1)].clone();
            *cursor += 1;
            entry
        }
        None => ScriptEntry::status(500),
    };

    if entry.delay_ms > 0 {
        std::thread::sleep(Duration::from_millis(entry.delay_ms));
    }
    if entry.status == 0 {
        // Drop the connection on the floor.
        let _ = stream.shutdown(std::net::Shutdown::Both);
        return Ok(());
    }

    let body = match &entry.raw_body {
        Some(raw) => raw.clone(),
        None => serde_json::json!({
            "id": "mock-cmpl",
            "object": "chat.completion",
            "choices": [{
                "index": 0,
                "message": { "role": "assistant", "content": entry.content },
                "finish_reason": "stop"
            }]
        })
        .to_string(),
    };
    write_response(stream, entry.status, "application/json", body.as_bytes())
}

fn serve_reputation(
    stream: &mut TcpStream,
    target: &str,
    fixture: &MockFixture,
    counters: &Counters,
) -> std::io::Result<()> {
    counters.reputation_requests.fetch_add(1, Ordering::SeqCst);

    if fixture.reputation.status != 200 {
        return write_response(
            stream,
            fixture.reputation.status,
            "application/json",
            b"{\"error\":\"scripted failure\"}",
        );
    }

    let resource = target
        .split_once('?')
        .map(|(_, q)| q)
        .unwrap_or("")
        .split('&')
        .find_map(|kv| kv.strip_prefix("resource="))
        .map(percent_decode)
        .unwrap_or_default();
    let host = host_of(&resource);

    let entry = fixture
        .reputation
        .by_domain
        .get(&host)
        .or(fixture.reputation.default.as_ref());

    match entry {
        Some(e) => {
            let body = serde_json::json!({
                "data": {
                    "attributes": {
                        "last_analysis_stats": {
                            "malicious": e.malicious,
                            "suspicious": e.suspicious,
                            "harmless": e.harmless
                        }
                    }
                }
            })
            .to_string();
            write_response(stream, 200, "application/json", body.as_bytes())
        }
        None => write_response(stream, 404, "application/json", b"{\"error\":\"not found\"}"),
    }
}

fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'%' if i + 2 < bytes.len() => {
                let hi = (bytes[i + 1] as char).to_digit(16);
                let lo = (bytes[i + 2] as char).to_digit(16);
                match (hi, lo) {
                    (Some(h), Some(l)) => {
                        out.push((h * 16 + l) as u8);
                        i += 3;
                    }
                    _ => {
                        out.push(bytes[i]);
                        i += 1;
                    }
                }
            }
            b'+' => {
                out.push(b' ');
                i += 1;
            }
            b => {
                out.push(b);
                i += 1;
            }
        }
    }
    String::from_utf8_lossy(&out).into_owned()
}

fn host_of(url: &str) -> String {
    let rest = url.split_once("://").map(|(_, r)| r).unwrap_or(url);
    let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let auth = &rest[..end];
    let host = auth.rsplit_once('@').map(|(_, h)| h).unwrap_or(auth);
    let host = host.split_once(':').map(|(h, _)| h).unwrap_or(host);
    host.to_ascii_lowercase()
}

fn write_response(
    stream: &mut TcpStream,
    status: u16,
    content_type: &str,
    body: &[u8],
) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        401 => "Unauthorized",
        403 => "Forbidden",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        502 => "Bad Gateway",
        503 => "Service Unavailable",
        _ => "Mock",
    };
    let header = format!(
        "HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        status,
        reason,
        content_type,
        body.len()
    );
    stream.write_all(header.as_bytes())?;
    stream.write_all(body)?;
    stream.flush()
}
