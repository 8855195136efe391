use regex::Regex;

use crate::doc::{Document, Span, SpanAttribute};
use crate::error::{Result, SieveError};

pub const EMAIL_PATTERN: &str =
    r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,}";

/// `+66` or a trunk `0`, then a mobile number (6/8/9 and eight more digits)
/// or a landline (area 2–7 and seven more digits). A single space or hyphen
/// may separate any two digits.
pub const PHONE_TH_PATTERN: &str =
    r"(?:\+66[ \-]?|0)(?:[689](?:[ \-]?[0-9]){8}|[2-7](?:[ \-]?[0-9]){7})";

pub const IP_PATTERN: &str = r"[0-9]{1,3}(?:\.[0-9]{1,3}){3}";

pub const ATTRIBUTE_NAMES: [&str; 3] = ["pii.email", "pii.phone_th", "pii.ip"];

/// Regular expressions for e-mail addresses, Thai phone numbers and IPv4
/// addresses. Matches must sit on token-like boundaries.
#[derive(Debug, Clone)]
pub struct PiiRules {
    email: Regex,
    phone: Regex,
    ip: Regex,
}

impl Default for PiiRules {
    fn default() -> Self {
        Self::new(EMAIL_PATTERN, PHONE_TH_PATTERN, IP_PATTERN).expect("built-in patterns compile")
    }
}

fn before(text: &str, i: usize) -> Option<char> {
    text[..i].chars().next_back()
}

fn after(text: &str, i: usize) -> Option<char> {
    text[i..].chars().next()
}

impl PiiRules {
    pub fn new(email: &str, phone: &str, ip: &str) -> Result<Self> {
        let compile = |p: &str| {
            Regex::new(p).map_err(|e| SieveError::Config(format!("bad PII pattern {p:?}: {e}")))
        };
        Ok(PiiRules {
            email: compile(email)?,
            phone: compile(phone)?,
            ip: compile(ip)?,
        })
    }

    pub fn emails(&self, text: &str) -> Vec<(usize, usize)> {
        find_bounded(&self.email, text, |s, e| {
            let ok_before = before(text, s)
                .is_none_or(|c| !(c.is_ascii_alphanumeric() || "._%+-".contains(c)));
            let ok_after = after(text, e).is_none_or(|c| !c.is_ascii_alphanumeric());
            ok_before && ok_after
        })
    }

    pub fn phones(&self, text: &str) -> Vec<(usize, usize)> {
        find_bounded(&self.phone, text, |s, e| {
            let ok_before = before(text, s).is_none_or(|c| !(c.is_ascii_alphanumeric() || c == '+'));
            let ok_after = after(text, e).is_none_or(|c| !c.is_ascii_alphanumeric());
            ok_before && ok_after
        })
    }

    pub fn ips(&self, text: &str) -> Vec<(usize, usize)> {
        find_bounded(&self.ip, text, |s, e| {
            let ok_before = before(text, s).is_none_or(|c| !(c.is_ascii_alphanumeric() || c == '.'));
            let rest = &text[e..];
            let ok_after = match rest.chars().next() {
                None => true,
                Some('.') => !rest[1..].starts_with(|c: char| c.is_ascii_digit()),
                Some(c) => !c.is_ascii_alphanumeric(),
            };
            ok_before && ok_after && text[s..e].split('.').all(|o| o.parse::<u32>().is_ok_and(|v| v <= 255))
        })
    }

    /// Spans per rule, with overlaps resolved in favour of e-mail, then
    /// phone, then IP.
    pub fn detect(&self, text: &str) -> [Vec<Span>; 3] {
        let mut taken: Vec<(usize, usize)> = Vec::new();
        let mut out: [Vec<Span>; 3] = Default::default();
        let found = [self.emails(text), self.phones(text), self.ips(text)];
        for (slot, matches) in out.iter_mut().zip(found) {
            for (s, e) in matches {
                if taken.iter().all(|&(ts, te)| e <= ts || s >= te) {
                    taken.push((s, e));
                    slot.push(Span::new(s, e, 1.0));
                }
            }
        }
        out
    }
}

/// Leftmost matches that pass `accept`; a rejected candidate restarts the
/// search one character later.
fn find_bounded(re: &Regex, text: &str, accept: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos <= text.len() {
        let Some(m) = re.find_at(text, pos) else { break };
        if accept(m.start(), m.end()) {
            out.push((m.start(), m.end()));
            pos = m.end();
        } else {
            pos = m.start() + after(text, m.start()).map_or(1, char::len_utf8);
        }
    }
    out
}

pub fn tag_pii(doc: &Document, rules: &PiiRules) -> Vec<SpanAttribute> {
    ATTRIBUTE_NAMES
        .iter()
        .zip(rules.detect(&doc.text))
        .map(|(name, spans)| SpanAttribute {
            name: name.to_string(),
            spans,
        })
        .collect()
}
