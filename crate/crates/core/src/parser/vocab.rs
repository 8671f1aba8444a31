use std::sync::OnceLock;

use serde::Deserialize;

static BUNDLED: &str = include_str!("../../data/vocabulary.toml");

#[derive(Debug, Clone, Deserialize)]
pub struct GeometryWords {
    pub right_cylinder: Vec<String>,
    pub parallelepiped: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct StateWords {
    pub fluid: Vec<String>,
    pub solid: Vec<String>,
    pub insulator: Vec<String>,
}

/// Word lists that drive the frame parser.
#[derive(Debug, Clone, Deserialize)]
pub struct Vocabulary {
    pub connection: Vec<String>,
    pub bridging: Vec<String>,
    pub inheritance: Vec<String>,
    pub instantiation: Vec<String>,
    pub copular: Vec<String>,
    pub phrases: Vec<String>,
    pub definition: Vec<String>,
    pub find: Vec<String>,
    pub property_heads: Vec<String>,
    pub geometry: GeometryWords,
    pub state: StateWords,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbKind {
    Connection { bridging: bool },
    Inheritance,
    Definition,
    Find,
    Copular,
    Other,
}

impl Vocabulary {
    pub fn bundled() -> &'static Vocabulary {
        static V: OnceLock<Vocabulary> = OnceLock::new();
        V.get_or_init(|| Vocabulary::from_toml(BUNDLED).expect("bundled vocabulary is valid"))
    }

    pub fn from_toml(src: &str) -> Result<Vocabulary, toml::de::Error> {
        toml::from_str(src)
    }

    /// Every multi-word verb phrase known to the vocabulary.
    pub fn verb_phrases(&self) -> impl Iterator<Item = &str> {
        self.connection
            .iter()
            .chain(&self.inheritance)
            .chain(&self.copular)
            .chain(&self.phrases)
            .chain(&self.definition)
            .chain(&self.find)
            .map(String::as_str)
    }

    pub fn kind_of(&self, phrase: &str) -> VerbKind {
        let has = |list: &[String]| list.iter().any(|p| p == phrase);
        if has(&self.connection) {
            VerbKind::Connection { bridging: has(&self.bridging) }
        } else if has(&self.inheritance) {
            VerbKind::Inheritance
        } else if has(&self.definition) {
            VerbKind::Definition
        } else if has(&self.find) {
            VerbKind::Find
        } else if has(&self.copular) {
            VerbKind::Copular
        } else {
            VerbKind::Other
        }
    }

    /// Longest property head that is a suffix of `words`.
    pub fn property_head(&self, words: &[String]) -> Option<(String, usize)> {
        let mut best: Option<(String, usize)> = None;
        for head in &self.property_heads {
            let hw: Vec<&str> = head.split_whitespace().collect();
            if hw.len() > words.len() {
                continue;
            }
            let tail = &words[words.len() - hw.len()..];
            if tail.iter().zip(&hw).all(|(a, b)| a == b) && best.as_ref().is_none_or(|(_, n)| hw.len() > *n) {
                best = Some((head.clone(), hw.len()));
            }
        }
        best
    }
}

/// True if the word sequence `phrase` occurs in `text` as whole words.
pub fn contains_phrase(text: &str, phrase: &str) -> bool {
    let words: Vec<&str> = text.split(|c: char| !c.is_alphanumeric() && c != '-').filter(|w| !w.is_empty()).collect();
    let pw: Vec<&str> = phrase.split_whitespace().collect();
    !pw.is_empty() && words.windows(pw.len()).any(|w| w == pw.as_slice())
}
