//! `$NAME$` placeholder substitution for prompt templates.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template placeholder ${0}$ has no binding")]
    MissingParam(String),
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_'
}

/// Splits a template into literal and placeholder segments.
///
/// A placeholder is `$` + one or more of `[A-Z0-9_]` + `$`. Any other `$`
/// is literal text.
fn segments(template: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut literal_start = 0;
    let mut i = 0;
    let bytes = template.as_bytes();
    while i < bytes.len() {
        if bytes[i] == b'$' {
            let rest = &template[i + 1..];
            let name_len = rest.find(|c: char| !is_name_char(c)).unwrap_or(rest.len());
            if name_len > 0 && rest[name_len..].starts_with('$') {
                if literal_start < i {
                    out.push(Segment::Literal(&template[literal_start..i]));
                }
                out.push(Segment::Placeholder(&rest[..name_len]));
                i += name_len + 2;
                literal_start = i;
                continue;
            }
        }
        i += 1;
    }
    if literal_start < template.len() {
        out.push(Segment::Literal(&template[literal_start..]));
    }
    out
}

enum Segment<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

/// Names of all placeholders in `template`, in order of first appearance.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for seg in segments(template) {
        if let Segment::Placeholder(name) = seg {
            if !names.iter().any(|n| n == name) {
                names.push(name.to_string());
            }
        }
    }
    names
}

/// Replaces every `$NAME$` in `template` with `params[NAME]`.
///
/// Substituted values are not rescanned, so parameter text containing `$`
/// is inserted verbatim. Unused parameters are ignored.
pub fn instantiate_prompt(
    template: &str,
    params: &BTreeMap<String, String>,
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    for seg in segments(template) {
        match seg {
            Segment::Literal(text) => out.push_str(text),
            Segment::Placeholder(name) => match params.get(name) {
                Some(value) => out.push_str(value),
                None => return Err(TemplateError::MissingParam(name.to_string())),
            },
        }
    }
    Ok(out)
}
