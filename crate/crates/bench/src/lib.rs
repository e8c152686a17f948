//! Synthetic inputs for the benchmarks: deterministic, allocation-heavy
//! enough to exercise the hot paths, no I/O.

use std::fmt::Write;

/// Marketing-style HTML email with `links` anchors, tracking images, styled
/// spans (some invisible), comments, and entity-laden text.
pub fn synthetic_html_email(links: usize) -> String {
    let mut html = String::from(
        "<!doctype html><html><head><title>Offer</title>\
         <style>p { color: #333; }</style>\
         <script>var t = 'nope';</script></head><body>",
    );
    for i in 0..links {
        write!(
            html,
            "<div class=\"row r{i}\"><h2>Deal &num;{i}</h2>\
             <p style=\"font-family:sans-serif\">Save 20&percnt; on item {i} &mdash; \
             today &amp; tomorrow only.</p>\
             <a href=\"http://shop.example.com/item/{i}?campaign=q3&user=abc{i}\" \
             class=\"btn\" onclick=\"track({i})\">Buy item {i}</a>\
             <img src=\"http://shop.example.com/pixel/{i}.gif\" width=\"1\">\
             <span style=\"font-size:0px\">invisible filler {i}</span>\
             <!-- segment {i} ends --></div>",
        )
        .unwrap();
    }
    html.push_str("</body></html>");
    html
}

/// Plain text with irregular whitespace runs and zero-width separators mixed
/// in, the shape the cleaner sees after reduction.
pub fn noisy_text(paragraphs: usize) -> String {
    let mut text = String::new();
    for i in 0..paragraphs {
        write!(
            text,
            "Paragraph {i}\twith  ragged\u{200b}   spacing,\r\n a zero\u{200b}width \
             joiner here\u{fe0f}, and trailing blanks   \n\n",
        )
        .unwrap();
    }
    text
}

/// Single-part HTML .eml carrying the synthetic body, base64 encoded the way
/// mail clients ship it.
pub fn synthetic_eml(links: usize) -> Vec<u8> {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    let body = STANDARD.encode(synthetic_html_email(links));
    let wrapped: Vec<&str> = body
        .as_bytes()
        .chunks(76)
        .map(|c| std::str::from_utf8(c).unwrap())
        .collect();
    format!(
        "From: Shop News <news@shop.example.com>\r\n\
         To: you@example.com\r\n\
         Subject: =?utf-8?q?This_week=27s_deals?=\r\n\
         MIME-Version: 1.0\r\n\
         Content-Type: text/html; charset=\"utf-8\"\r\n\
         Content-Transfer-Encoding: base64\r\n\r\n{}\r\n",
        wrapped.join("\r\n")
    )
    .into_bytes()
}

/// A long URL with many path segments, a query, and a fragment.
pub fn deep_url(segments: usize) -> String {
    let mut url = String::from("https://tracking.example.net");
    for i in 0..segments {
        write!(url, "/segment-{i:03}").unwrap();
    }
    url.push_str("?session=9f8e7d6c5b4a&campaign=renewal&step=4#receipt");
    url
}
