use std::io;
use std::path::Path;

use super::wordle::is_wordle_word;
use super::Flow;

/// One line of a word pool: the word plus optional tab-separated columns.
///
/// Taboo reads the second column as comma-separated related words; the
/// wordle clue variants read it as the clue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub word: String,
    pub extra: Option<String>,
}

impl PoolEntry {
    pub fn related_words(&self) -> Vec<String> {
        self.extra
            .as_deref()
            .unwrap_or_default()
            .split(',')
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordPool {
    entries: Vec<PoolEntry>,
}

impl WordPool {
    /// Parses newline-delimited text. Blank lines and `#` comments are
    /// skipped; duplicate words keep their first entry.
    pub fn parse(text: &str) -> Self {
        let mut entries: Vec<PoolEntry> = Vec::new();
        for line in text.lines() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = line.splitn(2, '\t');
            let word = cols.next().unwrap_or_default().trim().to_lowercase();
            let extra = cols.next().map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
            if !entries.iter().any(|e| e.word == word) {
                entries.push(PoolEntry { word, extra });
            }
        }
        WordPool { entries }
    }

    pub fn from_file(path: &Path) -> io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    /// The English pool shipped for `flow` (empty for grid games).
    pub fn builtin(flow: Flow) -> Self {
        match flow {
            Flow::Taboo => Self::parse(include_str!("../../resources/pools/taboo_en.txt")),
            f if f.is_wordle() => Self::parse(include_str!("../../resources/pools/wordle_en.txt")),
            _ => WordPool::default(),
        }
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries a generator for `flow` may draw from.
    pub fn eligible(&self, flow: Flow) -> Vec<&PoolEntry> {
        self.entries
            .iter()
            .filter(|e| match flow {
                Flow::Wordle => is_wordle_word(&e.word),
                Flow::WordleClue | Flow::WordleCritic => is_wordle_word(&e.word) && e.extra.is_some(),
                Flow::Taboo => {
                    let related = e.related_words();
                    !e.word.chars().any(char::is_whitespace)
                        && related.len() == 3
                        && !related.contains(&e.word)
                }
                Flow::Reference | Flow::Drawing => false,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_columns_comments_and_duplicates() {
        let pool = WordPool::parse("# header\ncrane\tbird or machine\n\nSLATE\ncrane\n");
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.entries()[0].extra.as_deref(), Some("bird or machine"));
        assert_eq!(pool.entries()[1].word, "slate");
        assert_eq!(pool.eligible(Flow::Wordle).len(), 2);
        assert_eq!(pool.eligible(Flow::WordleClue).len(), 1);
    }

    #[test]
    fn taboo_needs_three_related_words() {
        let pool = WordPool::parse("plane\tfly, wing, airport\ncar\twheel,road\n");
        let eligible = pool.eligible(Flow::Taboo);
        assert_eq!(eligible.len(), 1);
        assert_eq!(eligible[0].related_words(), vec!["fly", "wing", "airport"]);
    }

    #[test]
    fn shipped_pools_have_fifty_eligible_words() {
        assert_eq!(WordPool::builtin(Flow::Taboo).eligible(Flow::Taboo).len(), 50);
        assert_eq!(WordPool::builtin(Flow::Wordle).eligible(Flow::Wordle).len(), 50);
        assert_eq!(WordPool::builtin(Flow::WordleClue).eligible(Flow::WordleClue).len(), 50);
    }
}
