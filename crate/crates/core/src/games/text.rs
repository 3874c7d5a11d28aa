//! Keyword matching shared by the response parsers.

fn chars_eq_ignore_case(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Strips `prefix` from the start of `line`, comparing case-insensitively.
fn strip_prefix_ignore_case<'a>(line: &'a str, prefix: &str) -> Option<&'a str> {
    let mut rest = line.char_indices();
    for pc in prefix.chars() {
        match rest.next() {
            Some((_, lc)) if chars_eq_ignore_case(lc, pc) => {}
            _ => return None,
        }
    }
    let offset = rest.next().map(|(i, _)| i).unwrap_or(line.len());
    Some(&line[offset..])
}

/// Finds the first line starting with `prefix` (case-insensitive, leading
/// whitespace ignored) and returns the rest of that line, trimmed.
pub fn find_prefixed<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|line| strip_prefix_ignore_case(line.trim_start(), prefix.trim()))
        .map(str::trim)
}

/// Like [`find_prefixed`] but returns everything after the prefix up to the
/// end of the text.
pub fn find_prefixed_block<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_start();
        let lead = line.len() - trimmed.len();
        if let Some(rest) = strip_prefix_ignore_case(trimmed, prefix.trim()) {
            let start = offset + lead + (trimmed.len() - rest.len());
            return Some(text[start..].trim());
        }
        offset += line.len();
    }
    None
}

/// Lowercases a token and drops every non-alphanumeric character.
pub fn normalize_token(token: &str) -> String {
    token
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Whitespace-separated normalized tokens, empty ones dropped.
pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn eq_ignore_case(a: &str, b: &str) -> bool {
    a.chars().count() == b.chars().count()
        && a.chars().zip(b.chars()).all(|(x, y)| chars_eq_ignore_case(x, y))
}
