//! HTML reduction: collapses an HTML body to analysis text that keeps only
//! anchor and image markup, with every other tag replaced by spacing. Designed
//! for adversarial mail, so it is a tolerant tag-soup scanner rather than a
//! DOM parser: nothing panics, malformed constructs degrade to text, and the
//! output is a fixpoint (reducing it again changes nothing). One caveat: text
//! that spells an entity only after a removed inline tag glued its halves
//! (`&am<b>p;`) stays as those glyphs, because that is what the reader sees.
//!
//! Rules of the reduction:
//! - `<a href>` and `<img src>` survive as markup with their URL, everything
//!   else becomes a space (inline tags like `<b>` vanish without spacing so
//!   words split across them stay intact).
//! - script/style bodies, comments, CDATA, and doctypes are dropped.
//! - Text inside zero-font-size elements is removed and counted. Retained
//!   `img` markup survives even inside hidden regions: an invisible tracking
//!   pixel is evidence, not noise, and its URL must reach the URL analyzer.
//! - Character entities are decoded to a fixpoint, then stray angle brackets
//!   in text become spaces, so decoded text can never reintroduce markup.
//! - URLs keep at most [`URL_TOKEN_LIMIT`] path/query/fragment tokens.

use serde::{Deserialize, Serialize};

/// Maximum path tokens kept in a URL; query string and fragment count as one
/// token each and are dropped first.
pub const URL_TOKEN_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub href: String,
    pub anchor_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image {
    pub src: String,
}

/// Output of [`reduce_html`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedBody {
    /// Flattened text with retained `<a>`/`<img>` markup inline.
    pub text: String,
    pub links: Vec<Link>,
    pub images: Vec<Image>,
    /// Number of elements whose style hid their text (zero font size).
    pub hidden_removals: usize,
}

const VOID_TAGS: &[&str] = &[
    "area", "base", "basefont", "br", "col", "embed", "frame", "hr", "img", "input", "isindex",
    "keygen", "link", "meta", "param", "source", "track", "wbr",
];

// Tags that do not split words; everything else becomes a space.
const INLINE_TAGS: &[&str] = &[
    "a", "abbr", "acronym", "b", "bdi", "bdo", "big", "cite", "code", "data", "del", "dfn", "em",
    "font", "i", "ins", "kbd", "label", "mark", "nobr", "q", "s", "samp", "small", "span",
    "strike", "strong", "sub", "sup", "time", "tt", "u", "var", "wbr",
];

fn is_void(name: &str) -> bool {
    VOID_TAGS.contains(&name)
}

fn is_inline(name: &str) -> bool {
    INLINE_TAGS.contains(&name)
}

/// Reduces an HTML fragment or document. Never fails; non-HTML input passes
/// through as plain text (minus stray angle brackets).
pub fn reduce_html(html: &str) -> ReducedBody {
    let mut scanner = Scanner { src: html, pos: 0 };
    let mut reducer = Reducer::default();
    while let Some(tok) = scanner.next_token() {
        match tok {
            Tok::Text(t) => reducer.text(&t),
            Tok::Open(tag) => {
                if !tag.self_closing && (tag.name == "script" || tag.name == "style") {
                    scanner.skip_rawtext(&tag.name);
                    continue;
                }
                reducer.open(tag);
            }
            Tok::Close(name) => reducer.close(&name),
        }
    }
    reducer.finish()
}

// ---------------------------------------------------------------------------
// Reduction driver

#[derive(Default)]
struct Reducer {
    out: String,
    links: Vec<Link>,
    images: Vec<Image>,
    hidden_removals: usize,
    /// Count of active hidden regions; text is suppressed while > 0.
    hidden: usize,
    stack: Vec<StackEntry>,
    anchor: Option<AnchorState>,
}

struct StackEntry {
    name: String,
    hides: bool,
    is_anchor: bool,
}

struct AnchorState {
    href: String,
    /// Emitted content, may contain retained `<img>` markup.
    content: String,
    /// Plain text only, recorded as the link's anchor text.
    text: String,
}

impl Reducer {
    fn emit(&mut self, s: &str, is_text: bool) {
        match self.anchor.as_mut() {
            Some(a) => {
                a.content.push_str(s);
                if is_text {
                    a.text.push_str(s);
                }
            }
            None => self.out.push_str(s),
        }
    }

    fn text(&mut self, t: &str) {
        if self.hidden > 0 {
            return;
        }
        let decoded = decode_entities(t);
        let cleaned: String = decoded
            .chars()
            .map(|c| if c == '<' || c == '>' { ' ' } else { c })
            .collect();
        self.emit(&cleaned, true);
    }

    fn separator(&mut self, name: &str) {
        if self.hidden == 0 && !is_inline(name) {
            self.emit(" ", true);
        }
    }

    fn open(&mut self, tag: Tag) {
        let hides = tag
            .attr("style")
            .map(style_hides_text)
            .unwrap_or(false);

        if tag.name == "img" {
            match prepare_url(tag.attr("src").unwrap_or("")) {
                // Kept even in hidden regions: tracking-pixel URLs are signal.
                Some(src) => {
                    let markup = format!("<img src=\"{src}\">");
                    self.emit(&markup, false);
                    self.images.push(Image { src });
                }
                None => self.separator(&tag.name),
            }
            return;
        }

        if tag.name == "a" && !tag.self_closing && self.anchor.is_none() {
            if let Some(href) = prepare_url(tag.attr("href").unwrap_or("")) {
                self.anchor = Some(AnchorState {
                    href,
                    content: String::new(),
                    text: String::new(),
                });
                self.push_entry("a", hides, true);
                return;
            }
        }

        self.separator(&tag.name);
        if !tag.self_closing && !is_void(&tag.name) {
            self.push_entry(&tag.name, hides, false);
        }
    }

    fn push_entry(&mut self, name: &str, hides: bool, is_anchor: bool) {
        if hides {
            self.hidden += 1;
            self.hidden_removals += 1;
        }
        self.stack.push(StackEntry {
            name: name.to_string(),
            hides,
            is_anchor,
        });
    }

    fn close(&mut self, name: &str) {
        // Stray closes are ignored; a matching open pops everything above it.
        let Some(found) = self.stack.iter().rposition(|e| e.name == name) else {
            return;
        };
        while self.stack.len() > found {
            let entry = self.stack.pop().unwrap();
            self.pop_entry(entry);
        }
    }

    fn pop_entry(&mut self, entry: StackEntry) {
        if entry.hides {
            self.hidden -= 1;
        }
        if entry.is_anchor {
            self.finalize_anchor();
        } else {
            self.separator(&entry.name);
        }
    }

    fn finalize_anchor(&mut self) {
        let Some(a) = self.anchor.take() else { return };
        let content = squash(&a.content);
        let text = squash(&a.text);
        self.out
            .push_str(&format!("<a href=\"{}\">{content}</a>", a.href));
        self.links.push(Link {
            href: a.href,
            anchor_text: text,
        });
    }

    fn finish(mut self) -> ReducedBody {
        while let Some(entry) = self.stack.pop() {
            self.pop_entry(entry);
        }
        ReducedBody {
            text: squash(&self.out),
            links: self.links,
            images: self.images,
            hidden_removals: self.hidden_removals,
        }
    }
}

/// Sanitizes an attribute URL (no whitespace, quotes, brackets, or controls,
/// so it can be re-emitted inside markup) and applies token truncation.
fn prepare_url(value: &str) -> Option<String> {
    let cleaned: String = value
        .chars()
        .filter(|c| !c.is_whitespace() && !c.is_control() && !matches!(c, '"' | '\'' | '<' | '>'))
        .collect();
    if cleaned.is_empty() {
        None
    } else {
        Some(truncate_url(&cleaned, URL_TOKEN_LIMIT))
    }
}

/// True when an inline style declares a zero font size.
fn style_hides_text(style: &str) -> bool {
    for decl in style.split(';') {
        let Some((prop, value)) = decl.split_once(':') else {
            continue;
        };
        if !prop.trim().eq_ignore_ascii_case("font-size") {
            continue;
        }
        let value = value.trim().trim_end_matches("!important").trim();
        let digits_end = value
            .find(|c: char| !c.is_ascii_digit() && c != '.')
            .unwrap_or(value.len());
        let (num, unit) = value.split_at(digits_end);
        let is_unit = unit.chars().all(|c| c.is_ascii_alphabetic() || c == '%');
        if let Ok(size) = num.parse::<f64>() {
            if is_unit && size == 0.0 {
                return true;
            }
        }
    }
    false
}

fn squash(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending = false;
    for c in s.chars() {
        if c.is_whitespace() {
            pending = !out.is_empty();
        } else {
            if pending {
                out.push(' ');
                pending = false;
            }
            out.push(c);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// URL truncation

/// Keeps at most `limit` tokens of a URL's tail: each non-empty path segment
/// is a token, the query string is one token, the fragment is one token.
/// Tokens are dropped from the end (fragment first, then query, then path)
/// and the result is always a prefix of the input. Strings without a
/// `scheme://` prefix pass through unchanged.
pub fn truncate_url(url: &str, limit: usize) -> String {
    let Some(after_scheme) = scheme_end(url) else {
        return url.to_string();
    };
    let bytes = url.as_bytes();
    let authority_end = url[after_scheme..]
        .find(['/', '?', '#'])
        .map(|i| after_scheme + i)
        .unwrap_or(url.len());

    let mut path_ends: Vec<usize> = Vec::new();
    let mut i = authority_end;
    while i < bytes.len() && bytes[i] == b'/' {
        let seg_start = i + 1;
        let seg_end = url[seg_start..]
            .find(['/', '?', '#'])
            .map(|j| seg_start + j)
            .unwrap_or(url.len());
        if seg_end > seg_start {
            path_ends.push(seg_end);
        }
        i = seg_end;
    }
    let mut query_end: Option<usize> = None;
    if i < bytes.len() && bytes[i] == b'?' {
        let qe = url[i..].find('#').map(|j| i + j).unwrap_or(url.len());
        query_end = Some(qe);
        i = qe;
    }
    let has_fragment = i < bytes.len() && bytes[i] == b'#';

    let mut count = path_ends.len() + query_end.iter().len() + usize::from(has_fragment);
    if count <= limit {
        return url.to_string();
    }
    let path_cut = |kept: usize| -> usize {
        if kept == 0 {
            authority_end
        } else {
            path_ends[kept - 1]
        }
    };
    if has_fragment {
        count -= 1;
        if count <= limit {
            let cut = query_end.unwrap_or_else(|| path_cut(path_ends.len()));
            return url[..cut].to_string();
        }
    }
    if query_end.is_some() {
        count -= 1;
        if count <= limit {
            return url[..path_cut(path_ends.len())].to_string();
        }
    }
    url[..path_cut(limit)].to_string()
}

fn scheme_end(url: &str) -> Option<usize> {
    let idx = url.find("://")?;
    let scheme = &url[..idx];
    let mut chars = scheme.chars();
    let first = chars.next()?;
    if !first.is_ascii_alphabetic() {
        return None;
    }
    if chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        Some(idx + 3)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Entity decoding

/// Decodes character entities repeatedly until the text stops changing, so
/// layered encodings like `&amp;lt;` cannot smuggle markup past one pass.
/// Every decode strictly shrinks the text, so this terminates.
pub fn decode_entities(s: &str) -> String {
    let mut current = decode_entities_once(s);
    loop {
        let next = decode_entities_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn decode_entities_once(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        match parse_entity(tail) {
            Some((replacement, consumed)) => {
                out.push_str(&replacement);
                rest = &tail[consumed..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Parses one entity at the start of `s` (which begins with `&`); returns the
/// replacement and bytes consumed. Unknown or malformed entities return None
/// and stay verbatim.
fn parse_entity(s: &str) -> Option<(String, usize)> {
    let semi = s[1..].find(';')? + 1;
    if semi == 1 || semi > 32 {
        return None;
    }
    let body = &s[1..semi];
    let consumed = semi + 1;
    if let Some(num) = body.strip_prefix('#') {
        let cp = if let Some(hex) = num.strip_prefix(['x', 'X']) {
            u32::from_str_radix(hex, 16).ok()?
        } else {
            num.parse::<u32>().ok()?
        };
        return char::from_u32(cp).map(|c| (c.to_string(), consumed));
    }
    let named = match body {
        "amp" => "&",
        "lt" => "<",
        "gt" => ">",
        "quot" => "\"",
        "apos" => "'",
        "nbsp" => "\u{a0}",
        "copy" => "\u{a9}",
        "reg" => "\u{ae}",
        "trade" => "\u{2122}",
        "hellip" => "\u{2026}",
        "mdash" => "\u{2014}",
        "ndash" => "\u{2013}",
        "lsquo" => "\u{2018}",
        "rsquo" => "\u{2019}",
        "ldquo" => "\u{201c}",
        "rdquo" => "\u{201d}",
        "bull" => "\u{2022}",
        "middot" => "\u{b7}",
        "euro" => "\u{20ac}",
        "pound" => "\u{a3}",
        "yen" => "\u{a5}",
        "cent" => "\u{a2}",
        "sect" => "\u{a7}",
        "deg" => "\u{b0}",
        "plusmn" => "\u{b1}",
        "times" => "\u{d7}",
        "divide" => "\u{f7}",
        "laquo" => "\u{ab}",
        "raquo" => "\u{bb}",
        _ => return None,
    };
    Some((named.to_string(), consumed))
}

// ---------------------------------------------------------------------------
// Tag-soup scanner

enum Tok {
    Text(String),
    Open(Tag),
    Close(String),
}

struct Tag {
    name: String,
    attrs: Vec<(String, String)>,
    self_closing: bool,
}

impl Tag {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }
}

enum Construct {
    Skip,
    Open(Tag),
    Close(String),
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn next_token(&mut self) -> Option<Tok> {
        let mut text = String::new();
        loop {
            if self.pos >= self.src.len() {
                return if text.is_empty() {
                    None
                } else {
                    Some(Tok::Text(text))
                };
            }
            if self.src.as_bytes()[self.pos] == b'<' {
                let save = self.pos;
                match self.try_construct() {
                    Some(c) => {
                        if !text.is_empty() {
                            // Deliver pending text first; reparse next call.
                            self.pos = save;
                            return Some(Tok::Text(text));
                        }
                        match c {
                            Construct::Skip => continue,
                            Construct::Open(tag) => return Some(Tok::Open(tag)),
                            Construct::Close(name) => return Some(Tok::Close(name)),
                        }
                    }
                    None => self.pos = save,
                }
            }
            let ch = self.src[self.pos..].chars().next().unwrap();
            text.push(ch);
            self.pos += ch.len_utf8();
        }
    }

    /// Attempts to parse a markup construct at `pos` (which is at `<`).
    /// Advances past it on success; returns None on stray/unterminated
    /// brackets, which the caller treats as literal text.
    fn try_construct(&mut self) -> Option<Construct> {
        let rest = &self.src[self.pos..];
        if let Some(after) = rest.strip_prefix("<!--") {
            self.pos += 4 + after.find("-->").map(|i| i + 3).unwrap_or(after.len());
            return Some(Construct::Skip);
        }
        if let Some(after) = rest.strip_prefix("<![CDATA[") {
            self.pos += 9 + after.find("]]>").map(|i| i + 3).unwrap_or(after.len());
            return Some(Construct::Skip);
        }
        if rest.starts_with("<!") || rest.starts_with("<?") {
            self.pos += rest.find('>').map(|i| i + 1).unwrap_or(rest.len());
            return Some(Construct::Skip);
        }
        if let Some(after) = rest.strip_prefix("</") {
            let name_len = tag_name_len(after);
            if name_len == 0 {
                // Bogus end tag, e.g. `</ >`: swallowed to the next `>`.
                return match rest.find('>') {
                    Some(i) => {
                        self.pos += i + 1;
                        Some(Construct::Skip)
                    }
                    None => None,
                };
            }
            let name = after[..name_len].to_ascii_lowercase();
            match after[name_len..].find('>') {
                Some(i) => {
                    self.pos += 2 + name_len + i + 1;
                    Some(Construct::Close(name))
                }
                None => None,
            }
        } else {
            self.parse_open_tag()
        }
    }

    fn parse_open_tag(&mut self) -> Option<Construct> {
        let rest = &self.src[self.pos..];
        let after = &rest[1..];
        let name_len = tag_name_len(after);
        if name_len == 0 {
            return None;
        }
        let name = after[..name_len].to_ascii_lowercase();
        let bytes = rest.as_bytes();
        let mut i = 1 + name_len;
        let mut attrs: Vec<(String, String)> = Vec::new();
        let mut self_closing = false;

        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i >= bytes.len() {
                return None; // Unterminated tag: literal text.
            }
            match bytes[i] {
                b'>' => {
                    i += 1;
                    break;
                }
                b'/' => {
                    if bytes.get(i + 1) == Some(&b'>') {
                        self_closing = true;
                        i += 2;
                        break;
                    }
                    i += 1;
                }
                _ => {
                    let name_start = i;
                    while i < bytes.len()
                        && !bytes[i].is_ascii_whitespace()
                        && !matches!(bytes[i], b'=' | b'>' | b'/')
                    {
                        i += 1;
                    }
                    if i == name_start {
                        i += 1;
                        continue;
                    }
                    let attr_name = rest[name_start..i].to_ascii_lowercase();
                    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                        i += 1;
                    }
                    let mut value = String::new();
                    if i < bytes.len() && bytes[i] == b'=' {
                        i += 1;
                        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                            i += 1;
                        }
                        if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                            let quote = bytes[i];
                            i += 1;
                            let val_start = i;
                            while i < bytes.len() && bytes[i] != quote {
                                i += 1;
                            }
                            if i >= bytes.len() {
                                return None; // Unterminated quote.
                            }
                            value = rest[val_start..i].to_string();
                            i += 1;
                        } else {
                            let val_start = i;
                            while i < bytes.len()
                                && !bytes[i].is_ascii_whitespace()
                                && bytes[i] != b'>'
                            {
                                i += 1;
                            }
                            value = rest[val_start..i].to_string();
                        }
                    }
                    attrs.push((attr_name, decode_entities(&value)));
                }
            }
        }
        self.pos += i;
        Some(Construct::Open(Tag {
            name,
            attrs,
            self_closing,
        }))
    }

    /// Skips raw text content (script/style) through its end tag.
    fn skip_rawtext(&mut self, name: &str) {
        let hay = self.src[self.pos..].to_ascii_lowercase();
        let needle = format!("</{name}");
        match hay.find(&needle) {
            Some(i) => {
                let after = i + needle.len();
                let close = hay[after..].find('>').map(|j| after + j + 1);
                self.pos += close.unwrap_or(hay.len());
            }
            None => self.pos = self.src.len(),
        }
    }
}

/// Length of a tag name at the start of `s`: ASCII letter, then letters,
/// digits, or hyphens.
fn tag_name_len(s: &str) -> usize {
    let bytes = s.as_bytes();
    if bytes.is_empty() || !bytes[0].is_ascii_alphabetic() {
        return 0;
    }
    let mut i = 1;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
        i += 1;
    }
    i
}
