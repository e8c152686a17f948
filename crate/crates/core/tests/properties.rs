//! Randomized invariant checks. Each property states a contract the rest of
//! the toolkit leans on; proptest shrinks any counterexample to a minimal
//! reproduction.

use proptest::prelude::*;
use std::collections::HashSet;

use phishtriage_core::{
    build_request_with, canonical_json, clean_text, compute_metrics, confusion_counts,
    email_record_from_eml, extract_urls, parse_verdict, reduce_html, reliability_score,
    truncate_url, uniform_from_eml, url_host, BrandTable, CleaningConfig, ConfusionCounts, Label,
    PromptOptions, PublicSuffixList, Risk, ShortenerList, Tally, UniformRecord, UrlAnalyzer,
    Verdict, Whitelist, PERSONA_PROMPT, URL_TOKEN_LIMIT,
};

// ---------------------------------------------------------------------------
// Strategies

/// URL-shaped strings: schemed and schemeless, odd ports, empty path
/// segments, queries, fragments.
fn url_like() -> impl Strategy<Value = String> {
    let scheme = prop::sample::select(vec![
        "http://",
        "https://",
        "ftp://",
        "x+y-1.z://",
        "",
        "//",
        "mailto:user@",
    ]);
    let host = prop::collection::vec("[a-z0-9]{1,8}", 1..4).prop_map(|ls| ls.join("."));
    let port = prop::option::of(1u16..=65535u16);
    let segments = prop::collection::vec(
        prop_oneof![Just(String::new()), "[a-zA-Z0-9._~-]{1,7}"],
        0..18,
    );
    (
        scheme,
        host,
        port,
        segments,
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(scheme, host, port, segments, slash, query, fragment)| {
            let mut url = format!("{scheme}{host}");
            if let Some(p) = port {
                url.push_str(&format!(":{p}"));
            }
            for seg in &segments {
                url.push('/');
                url.push_str(seg);
            }
            if slash && !segments.is_empty() {
                url.push('/');
            }
            if query {
                url.push_str("?token=abc123&next=home");
            }
            if fragment {
                url.push_str("#section-5");
            }
            url
        })
}

/// One fragment of adversarial HTML. Concatenations of these cover broken
/// nesting, unterminated tags, hidden styles, comments, CDATA, entities, and
/// stray brackets.
fn soup_fragment() -> impl Strategy<Value = String> {
    let tag = prop::sample::select(vec![
        "div", "p", "span", "b", "i", "u", "em", "strong", "font", "table", "tr", "td", "h1",
        "ul", "li", "center", "script", "style", "iframe", "form", "input", "br",
    ]);
    let attr = prop::sample::select(vec![
        "",
        " class=\"x\"",
        " style=\"font-size:0px\"",
        " style=\"font-size: 0\"",
        " style=\"font-size:12px\"",
        " style=\"color:#333;font-size:0%\"",
        " data-q='1' checked",
    ]);
    let special = prop::sample::select(vec![
        "3 < 5 and x > y",
        "&lt;div&gt; &amp;amp; &#65;&#x42; &bogus;",
        "<!-- comment <b>hidden</b> -->",
        "<![CDATA[ <span>raw</span> ]]>",
        "<?pi data?><!doctype html>",
        "<div class=\"never closed",
        "tail<",
        ">head",
    ]);
    prop_oneof![
        4 => "[A-Za-z0-9 .,]{0,12}",
        4 => special.prop_map(str::to_string),
        3 => (tag.clone(), attr.clone()).prop_map(|(t, a)| format!("<{t}{a}>")),
        2 => tag.clone().prop_map(|t| format!("</{t}>")),
        1 => (tag, attr.clone()).prop_map(|(t, a)| format!("<{t}{a}/>")),
        2 => url_like().prop_map(|u| format!("<a href=\"{u}\">")),
        2 => Just("</a>".to_string()),
        2 => url_like().prop_map(|u| format!("<img src='{u}'>")),
        1 => (attr, url_like()).prop_map(|(a, u)| format!("<a{a} href={u}>click here</a>")),
    ]
}

fn html_soup() -> impl Strategy<Value = String> {
    prop::collection::vec(soup_fragment(), 0..40).prop_map(|v| v.concat())
}

/// Arbitrary unicode text. U+FEFF is excluded: a leading BOM is consumed by
/// charset decoding, which would make byte-level round-trip oracles lie.
fn unicode_text(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(any::<char>().prop_filter("no BOM", |c| *c != '\u{FEFF}'), 0..max)
        .prop_map(String::from_iter)
}

fn arb_verdict() -> impl Strategy<Value = Verdict> {
    (
        any::<bool>(),
        prop::sample::select(vec![Risk::High, Risk::Medium, Risk::Low]),
        prop::collection::vec(unicode_text(12), 0..4),
        prop::collection::vec(unicode_text(12), 0..4),
        unicode_text(24),
    )
        .prop_map(|(is_phishing, risk, tactics, actions, reason)| Verdict {
            is_phishing,
            risk,
            social_engineering_elements: tactics,
            actions,
            reason,
        })
}

/// Loosely email-shaped byte blobs: plausible headers over junk bodies, with
/// mismatched boundaries, bogus charsets, and broken encodings.
fn eml_soup() -> impl Strategy<Value = Vec<u8>> {
    let header = prop::sample::select(vec![
        "Subject: =?utf-8?B?8J+YgA==?=",
        "Subject: =?utf-8?Q?caf=C3=A9_deadline?=",
        "Subject: plain",
        "From: \"A B\" <a@b.com>",
        "From: broken <",
        "Content-Type: multipart/alternative; boundary=\"b1\"",
        "Content-Type: multipart/mixed; boundary=b1",
        "Content-Type: text/html; charset=koi8-r",
        "Content-Type: text/plain; charset=banana",
        "Content-Transfer-Encoding: base64",
        "Content-Transfer-Encoding: quoted-printable",
        "Content-Transfer-Encoding: 7bit",
        ": nameless header",
        "bare line without a colon",
    ]);
    let body_chunk = prop::sample::select(vec![
        "--b1",
        "--b1--",
        "--b2",
        "SGVsbG8=",
        "!!!not base64!!!",
        "=E2=98=83 and =ZZ broken",
        "plain text line",
        "<html><body>x</body>",
        "",
    ]);
    let structured = (
        prop::collection::vec(header, 0..8),
        prop::collection::vec(body_chunk, 0..12),
        any::<bool>(),
    )
        .prop_map(|(headers, body, crlf)| {
            let nl = if crlf { "\r\n" } else { "\n" };
            let mut out = headers.join(nl);
            out.push_str(nl);
            out.push_str(nl);
            out.push_str(&body.join(nl));
            out.into_bytes()
        });
    prop_oneof![
        2 => structured,
        1 => prop::collection::vec(any::<u8>(), 0..1024),
    ]
}

// ---------------------------------------------------------------------------
// Oracles

/// Mirrors the scheme detection the truncator uses, independently.
fn has_scheme(url: &str) -> bool {
    let Some(pos) = url.find("://") else {
        return false;
    };
    let scheme = &url[..pos];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '.' | '-'))
}

/// Independent token counter: non-empty path segments, plus one for a query,
/// plus one for a fragment.
fn token_count(url: &str) -> usize {
    let after_scheme = url.find("://").map(|i| i + 3).unwrap_or(0);
    let rest = &url[after_scheme..];
    let authority_len = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let tail = &rest[authority_len..];
    let (tail, fragment) = match tail.split_once('#') {
        Some((t, _)) => (t, 1),
        None => (tail, 0),
    };
    let (path, query) = match tail.split_once('?') {
        Some((p, _)) => (p, 1),
        None => (tail, 0),
    };
    path.split('/').filter(|s| !s.is_empty()).count() + query + fragment
}

/// Minimal standard-alphabet encoder used as the round-trip oracle.
fn b64_encode(data: &[u8]) -> String {
    const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    let mut out = String::new();
    for chunk in data.chunks(3) {
        let b = [chunk[0], *chunk.get(1).unwrap_or(&0), *chunk.get(2).unwrap_or(&0)];
        let n = ((b[0] as u32) << 16) | ((b[1] as u32) << 8) | b[2] as u32;
        out.push(ALPHABET[(n >> 18) as usize & 63] as char);
        out.push(ALPHABET[(n >> 12) as usize & 63] as char);
        out.push(if chunk.len() > 1 {
            ALPHABET[(n >> 6) as usize & 63] as char
        } else {
            '='
        });
        out.push(if chunk.len() > 2 {
            ALPHABET[n as usize & 63] as char
        } else {
            '='
        });
    }
    out
}

/// Wraps base64 output the way mail transports do.
fn wrap_lines(s: &str, width: usize) -> String {
    s.as_bytes()
        .chunks(width)
        .map(|c| std::str::from_utf8(c).unwrap())
        .collect::<Vec<_>>()
        .join("\r\n")
}

fn verdict_saying(is_phishing: bool) -> Verdict {
    Verdict {
        is_phishing,
        risk: if is_phishing { Risk::High } else { Risk::Low },
        social_engineering_elements: vec![],
        actions: vec![],
        reason: "r".to_string(),
    }
}

fn label_of(phishing: bool) -> Label {
    if phishing {
        Label::Phishing
    } else {
        Label::Legit
    }
}

// ---------------------------------------------------------------------------
// HTML reduction

proptest! {
    /// Whatever the input, the only markup surviving reduction is anchor and
    /// image markup.
    #[test]
    fn reduced_text_keeps_only_anchor_and_image_markup(soup in html_soup()) {
        let tag = regex::Regex::new(r"<\s*/?\s*([a-zA-Z][a-zA-Z0-9]*)").unwrap();
        let reduced = reduce_html(&soup);
        for cap in tag.captures_iter(&reduced.text) {
            let name = cap[1].to_ascii_lowercase();
            prop_assert!(
                name == "a" || name == "img",
                "tag <{}> leaked through: {:?}",
                name,
                reduced.text
            );
        }
    }

    /// Reduction is a fixpoint: feeding the output back in reproduces the
    /// same text, links, and images.
    #[test]
    fn reduction_is_a_fixpoint(soup in html_soup()) {
        let once = reduce_html(&soup);
        let twice = reduce_html(&once.text);
        prop_assert_eq!(&once.text, &twice.text);
        prop_assert_eq!(&once.links, &twice.links);
        prop_assert_eq!(&once.images, &twice.images);
    }

    /// Truncation returns a byte prefix, never exceeds the token budget on
    /// schemed URLs, passes everything else through, and is idempotent.
    #[test]
    fn url_truncation_returns_a_bounded_prefix(url in prop_oneof![url_like(), ".{0,60}"]) {
        let t = truncate_url(&url, URL_TOKEN_LIMIT);
        prop_assert!(url.as_bytes().starts_with(t.as_bytes()));
        prop_assert_eq!(truncate_url(&t, URL_TOKEN_LIMIT), t.clone());
        if has_scheme(&url) {
            prop_assert!(token_count(&t) <= URL_TOKEN_LIMIT);
            if token_count(&url) <= URL_TOKEN_LIMIT {
                prop_assert_eq!(&t, &url);
            }
        } else {
            prop_assert_eq!(&t, &url);
        }
    }
}

// ---------------------------------------------------------------------------
// Text cleaning and ingestion

proptest! {
    /// Cleaning is idempotent, drops exactly the configured codepoints, and
    /// keeps every survivor in order with single spaces between runs.
    #[test]
    fn cleaning_is_idempotent_and_keeps_survivors_in_order(s in unicode_text(64)) {
        let config = CleaningConfig::bundled();
        let once = clean_text(&s);
        prop_assert_eq!(clean_text(&once), once.clone());
        prop_assert!(once.chars().all(|c| !config.removes(c)));
        prop_assert!(once.chars().all(|c| !c.is_whitespace() || c == ' '));
        prop_assert!(!once.contains("  "));
        prop_assert!(!once.starts_with(' ') && !once.ends_with(' '));

        let survivors: String = s
            .chars()
            .filter(|c| !config.removes(*c) && !c.is_whitespace())
            .collect();
        let kept: String = once.chars().filter(|c| *c != ' ').collect();
        prop_assert_eq!(kept, survivors);
    }

    /// A base64 body of any unicode content comes back out of ingestion as
    /// the same text, normalized.
    #[test]
    fn base64_bodies_round_trip_through_ingestion(body in unicode_text(120)) {
        let encoded = wrap_lines(&b64_encode(body.as_bytes()), 60);
        let eml = format!(
            "Subject: t\r\nFrom: a@b.com\r\nContent-Type: text/plain; charset=utf-8\r\n\
             Content-Transfer-Encoding: base64\r\n\r\n{encoded}\r\n"
        );
        let out = uniform_from_eml(eml.as_bytes(), "prop", None).unwrap();
        let expected = clean_text(&format!("SUBJECT: t, FROM: a@b.com, EMAIL: {body}"));
        prop_assert_eq!(out.uniform.email_text, expected);
    }

    /// No byte blob may panic the parser, and anything it accepts normalizes
    /// to the uniform layout.
    #[test]
    fn arbitrary_bytes_never_panic_ingestion(raw in eml_soup()) {
        let _ = email_record_from_eml(&raw, "fuzz", None);
        if let Ok(out) = uniform_from_eml(&raw, "fuzz", None) {
            prop_assert!(out.uniform.email_text.starts_with("SUBJECT: "));
        }
    }
}

// ---------------------------------------------------------------------------
// Scoring math

proptest! {
    /// Every derived metric matches its direct formula, with None exactly on
    /// zero denominators, and all values stay in [0, 1].
    #[test]
    fn metrics_match_direct_formulas(
        tp in 0u64..1500,
        fp in 0u64..1500,
        tn in 0u64..1500,
        fneg in 0u64..1500,
    ) {
        let counts = ConfusionCounts::new(tp, fp, tn, fneg);
        if counts.total() == 0 {
            prop_assert!(compute_metrics(&counts).is_err());
            return Ok(());
        }
        let m = compute_metrics(&counts).unwrap();
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        prop_assert_eq!(m.accuracy, ratio(tp + tn, tp + fp + tn + fneg));
        prop_assert_eq!(m.precision, ratio(tp, tp + fp));
        prop_assert_eq!(m.recall, ratio(tp, tp + fneg));
        prop_assert_eq!(m.false_pos_rate, ratio(fp, fp + tn));
        prop_assert_eq!(m.false_neg_rate, ratio(fneg, fneg + tp));
        match (m.precision, m.recall) {
            (Some(p), Some(r)) if p + r > 0.0 => {
                prop_assert_eq!(m.f1, Some(2.0 * p * r / (p + r)))
            }
            _ => prop_assert_eq!(m.f1, None),
        }
        for v in [m.accuracy, m.precision, m.recall, m.f1, m.false_pos_rate, m.false_neg_rate]
            .into_iter()
            .flatten()
        {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    /// Viewing the matrix with classes swapped exchanges the two error rates
    /// and keeps accuracy; swapping twice is the identity.
    #[test]
    fn class_swap_exchanges_error_rates(
        tp in 0u64..1500,
        fp in 0u64..1500,
        tn in 0u64..1500,
        fneg in 0u64..1500,
    ) {
        let counts = ConfusionCounts::new(tp, fp, tn, fneg);
        prop_assert_eq!(counts.swap_classes().swap_classes(), counts);
        if counts.total() == 0 {
            return Ok(());
        }
        let m = compute_metrics(&counts).unwrap();
        let s = compute_metrics(&counts.swap_classes()).unwrap();
        prop_assert_eq!(s.false_pos_rate, m.false_neg_rate);
        prop_assert_eq!(s.false_neg_rate, m.false_pos_rate);
        prop_assert_eq!(s.accuracy, m.accuracy);
        if let (Some(swapped_recall), Some(fpr)) = (s.recall, m.false_pos_rate) {
            prop_assert!((swapped_recall - (1.0 - fpr)).abs() < 1e-12);
        }
    }

    /// The tally agrees with a brute-force count, and scoreable plus
    /// unscored always adds up to the input size.
    #[test]
    fn confusion_tally_matches_a_brute_force_count(
        rows in prop::collection::vec((any::<bool>(), prop::option::of(any::<bool>())), 0..60),
    ) {
        let yes = verdict_saying(true);
        let no = verdict_saying(false);
        let pairs = rows.iter().map(|(label, predicted)| {
            (
                Some(label_of(*label)),
                predicted.map(|p| if p { &yes } else { &no }),
            )
        });
        let tally = confusion_counts(pairs).unwrap();

        let mut expected = Tally::default();
        for (label, predicted) in &rows {
            match predicted {
                None => expected.unscored += 1,
                Some(p) => match (label, p) {
                    (true, true) => expected.counts.true_pos += 1,
                    (true, false) => expected.counts.false_neg += 1,
                    (false, true) => expected.counts.false_pos += 1,
                    (false, false) => expected.counts.true_neg += 1,
                },
            }
        }
        prop_assert_eq!(tally, expected);
        prop_assert_eq!(tally.counts.total() + tally.unscored, rows.len() as u64);
    }

    /// A single unlabeled record poisons the whole tally rather than being
    /// silently skipped.
    #[test]
    fn unlabeled_records_refuse_to_score(
        rows in prop::collection::vec(any::<bool>(), 0..20),
        at in any::<prop::sample::Index>(),
    ) {
        let verdict = verdict_saying(true);
        let mut pairs: Vec<(Option<Label>, Option<&Verdict>)> = rows
            .iter()
            .map(|p| (Some(label_of(*p)), Some(&verdict)))
            .collect();
        pairs.insert(at.index(pairs.len() + 1), (None, Some(&verdict)));
        prop_assert!(confusion_counts(pairs).is_err());
    }

    /// The reliability score is exactly the mean mark: one point per correct
    /// call, half a point when true phishing was missed at Medium risk.
    #[test]
    fn reliability_score_is_the_mean_mark(
        rows in prop::collection::vec((any::<bool>(), any::<bool>(), 0usize..3), 1..60),
    ) {
        let verdicts: Vec<Verdict> = rows
            .iter()
            .map(|(_, called_phishing, risk)| Verdict {
                is_phishing: *called_phishing,
                risk: [Risk::High, Risk::Medium, Risk::Low][*risk],
                social_engineering_elements: vec![],
                actions: vec![],
                reason: String::new(),
            })
            .collect();
        let pairs = rows
            .iter()
            .zip(&verdicts)
            .map(|((label, _, _), v)| (Some(label_of(*label)), v));
        let result = reliability_score(pairs).unwrap();

        let (mut full, mut half, mut zero) = (0u64, 0u64, 0u64);
        for (label, called_phishing, risk) in &rows {
            if label == called_phishing {
                full += 1;
            } else if *label && [Risk::High, Risk::Medium, Risk::Low][*risk] == Risk::Medium {
                half += 1;
            } else {
                zero += 1;
            }
        }
        prop_assert_eq!((result.full_marks, result.half_marks, result.zero_marks), (full, half, zero));
        prop_assert_eq!(result.score, (full as f64 + 0.5 * half as f64) / rows.len() as f64);
        prop_assert!((0.0..=1.0).contains(&result.score));
    }
}

// ---------------------------------------------------------------------------
// Verdicts and request assembly

proptest! {
    /// Serializing a verdict and parsing it back is lossless for any field
    /// content.
    #[test]
    fn canonical_verdict_json_round_trips(verdict in arb_verdict()) {
        let parsed = parse_verdict(&canonical_json(&verdict)).unwrap();
        prop_assert_eq!(parsed, verdict);
    }

    /// Request assembly keeps the email text first, appends the URL section
    /// only when there is one, appends the schema only when asked, and never
    /// touches the system prompt.
    #[test]
    fn request_assembly_layers_sections_in_order(
        email in "[ -~]{1,80}",
        report in prop::option::of("[ -~]{0,60}"),
        embed in any::<bool>(),
    ) {
        let record = UniformRecord {
            id: "r1".to_string(),
            email_text: email.clone(),
            label: None,
            body_chars: 0,
            source: String::new(),
        };
        let options = PromptOptions {
            persona: PERSONA_PROMPT.to_string(),
            embed_schema: embed,
            url_report: report.clone(),
        };
        let request = build_request_with(&record, &options).unwrap();
        prop_assert_eq!(&request.system_prompt, PERSONA_PROMPT);
        prop_assert!(request.user_content.starts_with(&email));

        let mut expected = email;
        if let Some(r) = &report {
            if !r.is_empty() {
                expected.push_str("\n\nURL ANALYSIS:\n");
                expected.push_str(r);
            }
        }
        if embed {
            expected.push_str(
                "\n\nRespond with a single JSON object matching this schema and nothing else:\n",
            );
            expected.push_str(&phishtriage_core::verdict_schema().to_string());
        }
        prop_assert_eq!(request.user_content, expected);
    }
}

// ---------------------------------------------------------------------------
// URL analysis

proptest! {
    /// A registrable domain is a dot-suffix of its host, stable under
    /// re-resolution, and independent of input casing.
    #[test]
    fn registrable_domains_are_stable_dot_suffixes(
        labels in prop::collection::vec("[a-z0-9]{1,8}", 1..5),
        tld in prop::sample::select(vec![
            "com", "org", "net", "uk", "co.uk", "jp", "de", "xyz", "info", "zz",
        ]),
    ) {
        let psl = PublicSuffixList::bundled();
        let host = format!("{}.{tld}", labels.join("."));
        let resolved = psl.registrable_domain(&host);
        prop_assert_eq!(psl.registrable_domain(&host.to_ascii_uppercase()), resolved.clone());
        if let Some(rd) = resolved {
            prop_assert!(
                host == rd || host.ends_with(&format!(".{rd}")),
                "{rd} is not a suffix of {host}"
            );
            prop_assert_eq!(psl.registrable_domain(&rd), Some(rd.clone()));
            prop_assert_eq!(rd.to_ascii_lowercase(), rd);
        }
    }

    /// The host extractor recovers exactly the authority's host, lowercased,
    /// with userinfo and port stripped.
    #[test]
    fn hosts_parse_from_assembled_authorities(
        scheme in prop::sample::select(vec!["http", "https"]),
        user in prop::option::of("[a-z0-9.@]{1,8}"),
        host_labels in prop::collection::vec("[a-zA-Z0-9]{1,8}", 1..4),
        port in prop::option::of(1u16..=65535u16),
        tail in prop::sample::select(vec!["", "/", "/x/y", "?q=1", "#f"]),
    ) {
        let host = host_labels.join(".");
        let mut url = format!("{scheme}://");
        if let Some(u) = &user {
            url.push_str(u);
            url.push('@');
        }
        url.push_str(&host);
        if let Some(p) = port {
            url.push_str(&format!(":{p}"));
        }
        url.push_str(tail);
        prop_assert_eq!(url_host(&url), Some(host.to_ascii_lowercase()));
    }

    /// Extracted URLs are unique, absolute, resolvable to a host, and cover
    /// every usable link target and image source.
    #[test]
    fn extracted_urls_are_deduplicated_and_parseable(soup in html_soup()) {
        let reduced = reduce_html(&soup);
        let urls = extract_urls(&reduced);
        let distinct: HashSet<&String> = urls.iter().collect();
        prop_assert_eq!(distinct.len(), urls.len());
        for url in &urls {
            prop_assert!(url.starts_with("http://") || url.starts_with("https://"));
            prop_assert!(url_host(url).is_some());
        }
        let trailing: &[char] = &['.', ',', ';', ':', '!', '?', ')', ']', '}'];
        let candidates = reduced
            .links
            .iter()
            .map(|l| l.href.as_str())
            .chain(reduced.images.iter().map(|i| i.src.as_str()));
        for candidate in candidates {
            let trimmed = candidate.trim_end_matches(trailing);
            let absolute = trimmed.starts_with("http://") || trimmed.starts_with("https://");
            if absolute && url_host(trimmed).is_some() {
                prop_assert!(urls.iter().any(|u| u == trimmed));
            }
        }
    }

    /// Links on a brand's own registrable domain are never flagged against
    /// that brand, wherever they sit in the subdomain tree.
    #[test]
    fn official_domain_links_never_flag_their_own_brand(
        sub in prop::option::of("[a-z0-9]{1,6}"),
        path in "[a-z0-9/]{0,12}",
    ) {
        let brands = BrandTable::parse("ExampleBank=examplebank.com").unwrap();
        let analyzer = UrlAnalyzer::new().with_tables(
            PublicSuffixList::bundled().clone(),
            brands,
            ShortenerList::bundled().clone(),
        );
        let host = match &sub {
            Some(s) => format!("{s}.examplebank.com"),
            None => "examplebank.com".to_string(),
        };
        let html = format!("<a href=\"https://{host}/{path}\">ExampleBank login</a>");
        let report = analyzer.analyze(&reduce_html(&html), "Your ExampleBank statement is ready");
        prop_assert!(!report.findings.is_empty());
        for finding in &report.findings {
            prop_assert!(finding.brand_mismatch.is_none(), "flagged {:?}", finding);
        }
    }

    /// When a brand is mentioned and no link reaches its domain, every
    /// foreign link is flagged with the official domain.
    #[test]
    fn off_domain_brand_mentions_flag_every_foreign_url(
        label in "[a-z0-9]{1,8}",
        second in prop::option::of("[a-z0-9]{1,8}"),
    ) {
        let brands = BrandTable::parse("ExampleBank=examplebank.com").unwrap();
        let analyzer = UrlAnalyzer::new().with_tables(
            PublicSuffixList::bundled().clone(),
            brands,
            ShortenerList::bundled().clone(),
        );
        let mut html = format!("<a href=\"https://{label}.net/login\">verify</a>");
        if let Some(s) = &second {
            html.push_str(&format!("<img src='http://{s}.org/pixel.png'>"));
        }
        let report = analyzer.analyze(&reduce_html(&html), "ExampleBank password reset");
        prop_assert!(!report.findings.is_empty());
        for finding in &report.findings {
            let mismatch = finding.brand_mismatch.as_ref();
            prop_assert!(mismatch.is_some(), "missed {:?}", finding);
            prop_assert_eq!(mismatch.unwrap().expected_domain.as_str(), "examplebank.com");
        }
    }
}

// ---------------------------------------------------------------------------
// Gateway trust

proptest! {
    /// Trust covers the exact domain and its subdomains; lookalike domains
    /// and display names naming the trusted domain earn nothing.
    #[test]
    fn display_names_never_earn_whitelist_trust(
        dom in "[a-z0-9]{1,8}\\.[a-z]{2,5}",
        sub in "[a-z0-9]{1,6}",
        user in "[a-z0-9.]{1,8}",
    ) {
        let whitelist = Whitelist::new([dom.clone()]);
        let bare = format!("{user}@{dom}");
        let subdomain = format!("Some One <{user}@{sub}.{dom}>");
        let lookalike = format!("{user}@{sub}x{dom}");
        let quoted_name = format!("\"{user}@{dom}\" <{user}@evil.example>");
        let display_name = format!("{dom} Support <{user}@evil.example>");
        prop_assert!(whitelist.is_trusted(&bare));
        prop_assert!(whitelist.is_trusted(&subdomain));
        prop_assert!(!whitelist.is_trusted(&lookalike));
        prop_assert!(!whitelist.is_trusted(&quoted_name));
        prop_assert!(!whitelist.is_trusted(&display_name));
    }
}
