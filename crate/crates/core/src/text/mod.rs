//! Text cleaning: titles, synopsis tokenization and adaptation detection.

mod stem;

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use stem::stem;

static STOP_WORDS_SRC: &str = include_str!("../data/stopwords.txt");
static ADAPTATION_SRC: &str = include_str!("../data/adaptation_keywords.txt");

fn stop_words() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOP_WORDS_SRC
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_stop_word(token: &str) -> bool {
    stop_words().contains(token)
}

/// Removes `*` and `-`, collapses whitespace runs to one space and trims.
pub fn clean_title(raw: &str) -> String {
    raw.split_whitespace()
        .map(|w| w.replace(['*', '-'], ""))
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercases, strips punctuation, removes stop words and stems.
pub fn preprocess_synopsis(raw: &str) -> Vec<String> {
    let lowered = raw.to_lowercase();
    lowered
        .split(|c: char| c.is_whitespace() || matches!(c, '-' | '/' | '\u{2014}' | '\u{2013}'))
        .map(|chunk| chunk.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
        .filter(|t| !t.is_empty() && !is_stop_word(t))
        .map(|t| stem(&t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    Comic,
    TrueStory,
    Book,
}

impl Adaptation {
    pub const ALL: [Adaptation; 3] = [Adaptation::Comic, Adaptation::TrueStory, Adaptation::Book];

    pub fn as_str(self) -> &'static str {
        match self {
            Adaptation::Comic => "comic",
            Adaptation::TrueStory => "true_story",
            Adaptation::Book => "book",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "comic" => Some(Adaptation::Comic),
            "true_story" => Some(Adaptation::TrueStory),
            "book" | "novel" => Some(Adaptation::Book),
            _ => None,
        }
    }
}

struct AdaptationRule {
    kind: Adaptation,
    phrase: String,
}

fn adaptation_rules() -> &'static [AdaptationRule] {
    static RULES: OnceLock<Vec<AdaptationRule>> = OnceLock::new();
    RULES.get_or_init(|| {
        ADAPTATION_SRC
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let (kind, phrase) = l.split_once('\t')?;
                Some(AdaptationRule {
                    kind: Adaptation::parse(kind)?,
                    phrase: phrase.trim().to_lowercase(),
                })
            })
            .collect()
    })
}

/// Detects source adaptations from the synopsis and metadata keywords.
///
/// Keywords that name a kind directly (`comic`, `true_story`, `book`) are
/// taken as-is; everything else is phrase-matched like the synopsis.
pub fn detect_adaptation<'a, I>(synopsis: &str, metadata_keywords: I) -> BTreeSet<Adaptation>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut found = BTreeSet::new();
    let mut haystacks = vec![normalize_for_match(synopsis)];
    for kw in metadata_keywords {
        match Adaptation::parse(kw) {
            Some(kind) => {
                found.insert(kind);
            }
            None => haystacks.push(normalize_for_match(kw)),
        }
    }
    for rule in adaptation_rules() {
        if haystacks.iter().any(|h| contains_phrase(h, &rule.phrase)) {
            found.insert(rule.kind);
        }
    }
    found
}

fn normalize_for_match(s: &str) -> String {
    let cleaned: String = s
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' })
        .collect();
    format!(" {} ", cleaned.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn contains_phrase(haystack: &str, phrase: &str) -> bool {
    haystack.contains(&format!(" {phrase} "))
}
