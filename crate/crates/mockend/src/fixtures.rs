//! Canned emails and verdict payloads shared by integration tests.

/// Social-media credential-phish with a spoofed display name, hidden tracking
/// image, zero-font-size filler text, and a shortened link.
pub fn facebook_spoof_eml() -> String {
    concat!(
        "From: \"Facebook\" <5a83h@92e4fsmb2e.com>\r\n",
        "To: phishing@pot\r\n",
        "Subject: New login to your Facebook account\r\n",
        "Date: Mon, 4 Mar 2024 09:14:02 +0000\r\n",
        "MIME-Version: 1.0\r\n",
        "Content-Type: text/html; charset=\"utf-8\"\r\n",
        "\r\n",
        "<html><body>\r\n",
        "<p>Hi phishing@pot,</p>\r\n",
        "<p>Someone tried to log in to your Facebook account from a new device.</p>\r\n",
        "<p>If this wasn't you, please secure your account now.</p>\r\n",
        "<a href=\"http://thema214.com/ssecnewsso/report\">Report the user</a>\r\n",
        "<a href=\"http://bit.ly/fdasgfcxv\">Yes, me</a>\r\n",
        "<img src=\"http://thema214.com/track/o49\">\r\n",
        "<span style=\"font-size:0px\">kqx vmzr hlwt padding tokens jfud qery</span>\r\n",
        "</body></html>\r\n",
    )
    .to_string()
}

/// Plain-text internal mail from a sender the whitelist should trust.
pub fn trusted_eml(from: &str) -> String {
    format!(
        concat!(
            "From: {}\r\n",
            "To: staff@company.com\r\n",
            "Subject: Quarterly all-hands moved to Thursday\r\n",
            "Content-Type: text/plain; charset=\"utf-8\"\r\n",
            "\r\n",
            "The all-hands is moving from Wednesday to Thursday at 10:00.\r\n",
            "Same room, same agenda. Recording will be shared afterwards.\r\n",
        ),
        from
    )
}

/// Minimal single-part plain-text message.
pub fn plain_eml(subject: &str, from: &str, body: &str) -> String {
    format!(
        "From: {from}\r\nTo: someone@example.com\r\nSubject: {subject}\r\nContent-Type: text/plain; charset=\"utf-8\"\r\n\r\n{body}\r\n"
    )
}

/// multipart/alternative with a plain part and an html part.
pub fn multipart_alternative_eml(subject: &str, from: &str, plain: &str, html: &str) -> String {
    format!(
        concat!(
            "From: {from}\r\n",
            "To: someone@example.com\r\n",
            "Subject: {subject}\r\n",
            "MIME-Version: 1.0\r\n",
            "Content-Type: multipart/alternative; boundary=\"sep42\"\r\n",
            "\r\n",
            "--sep42\r\n",
            "Content-Type: text/plain; charset=\"utf-8\"\r\n",
            "\r\n",
            "{plain}\r\n",
            "--sep42\r\n",
            "Content-Type: text/html; charset=\"utf-8\"\r\n",
            "\r\n",
            "{html}\r\n",
            "--sep42--\r\n",
        ),
        from = from,
        subject = subject,
        plain = plain,
        html = html,
    )
}

/// Verdict payload in the five-field wire shape.
pub fn verdict_json(is_phishing: bool, risk: &str, reason: &str) -> String {
    serde_json::json!({
        "Is_Phishing": is_phishing,
        "Risk": risk,
        "Social_Engineering_Elements": if is_phishing {
            vec!["urgency", "authority spoofing"]
        } else {
            Vec::new()
        },
        "Actions": if is_phishing {
            vec![
                "Do not interact with any links or buttons in the email.",
                "Report the email to your security team.",
            ]
        } else {
            Vec::new()
        },
        "Reason": reason
    })
    .to_string()
}

/// Verdict the mock model returns for the spoofed social-media mail.
pub fn spoof_verdict_json() -> String {
    serde_json::json!({
        "Is_Phishing": true,
        "Risk": "High",
        "Social_Engineering_Elements": [
            "spoofed brand display name",
            "login alert urgency",
            "mismatched sender domain"
        ],
        "Actions": [
            "Do not interact with any links or buttons in the email.",
            "Delete the email and report it as phishing."
        ],
        "Reason": "The sender domain has no relation to the brand named in the display name, the message pressures the reader to react to a login alert, and the links point at an unrelated domain plus a link shortener. A tracking image is also embedded."
    })
    .to_string()
}

/// Verdict the mock model returns for ordinary legitimate mail.
pub fn legit_verdict_json() -> String {
    serde_json::json!({
        "Is_Phishing": false,
        "Risk": "Low",
        "Social_Engineering_Elements": [],
        "Actions": [],
        "Reason": "Routine internal announcement with no links, no credential request, and a sender consistent with the content."
    })
    .to_string()
}
