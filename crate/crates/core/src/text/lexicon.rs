use std::collections::HashMap;
use std::sync::OnceLock;

use super::{Pos, Tense};

static BUNDLED: &str = include_str!("../../data/lexicon.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub pos: Pos,
    pub tense: Tense,
    pub lemma: String,
}

/// Closed word list with inflected forms expanded at load time.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    forms: HashMap<String, LexiconEntry>,
}

impl Lexicon {
    pub fn bundled() -> &'static Lexicon {
        static LEX: OnceLock<Lexicon> = OnceLock::new();
        LEX.get_or_init(|| Lexicon::parse(BUNDLED))
    }

    /// Parses the line format documented at the top of `data/lexicon.txt`.
    /// The first definition of a surface form wins.
    pub fn parse(src: &str) -> Lexicon {
        let mut lex = Lexicon::default();
        for line in src.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(kind), Some(first)) = (parts.next(), parts.next()) else { continue };
            let rest: Vec<&str> = parts.collect();
            match kind {
                "n" => {
                    let (lemma, plural) = match first.split_once(':') {
                        Some((l, p)) => (l.to_string(), p.to_string()),
                        None => (first.to_string(), default_plural(first)),
                    };
                    lex.add(&lemma, Pos::Noun, Tense::NotApplicable, &lemma);
                    lex.add(&plural, Pos::Noun, Tense::NotApplicable, &lemma);
                }
                "v" => {
                    let lemma = first;
                    lex.add(lemma, Pos::Verb, Tense::Present, lemma);
                    let (main, extra_past) = match rest.iter().position(|w| *w == "|") {
                        Some(i) => (&rest[..i], &rest[i + 1..]),
                        None => (&rest[..], &[][..]),
                    };
                    let tenses = [Tense::Present, Tense::Past, Tense::Other];
                    for (i, form) in main.iter().enumerate() {
                        let tense = tenses.get(i).copied().unwrap_or(Tense::Present);
                        lex.add(form, Pos::Verb, tense, lemma);
                    }
                    for form in extra_past {
                        lex.add(form, Pos::Verb, Tense::Past, lemma);
                    }
                }
                "m" => lex.add(first, Pos::Verb, Tense::Present, first),
                "a" => lex.add(first, Pos::Adj, Tense::NotApplicable, first),
                "p" => lex.add(first, Pos::Adp, Tense::NotApplicable, first),
                "d" => lex.add(first, Pos::Det, Tense::NotApplicable, first),
                "c" => lex.add(first, Pos::Conj, Tense::NotApplicable, first),
                _ => {}
            }
        }
        lex
    }

    fn add(&mut self, form: &str, pos: Pos, tense: Tense, lemma: &str) {
        self.forms.entry(form.to_lowercase()).or_insert_with(|| LexiconEntry { pos, tense, lemma: lemma.to_lowercase() });
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn lookup(&self, word: &str) -> Option<&LexiconEntry> {
        self.forms.get(&word.to_lowercase())
    }

    /// Lexicon lookup with suffix-rule fallback; unknown words become nouns.
    pub fn tag(&self, word: &str) -> LexiconEntry {
        let lower = word.to_lowercase();
        if let Some(e) = self.forms.get(&lower) {
            return e.clone();
        }
        if lower.chars().all(|c| c.is_ascii_digit()) {
            return noun(&lower);
        }
        if let Some(stem) = lower.strip_suffix('s') {
            if let Some(e) = self.forms.get(stem) {
                if e.pos == Pos::Noun {
                    return noun(&e.lemma);
                }
            }
        }
        if lower.len() > 4 && lower.ends_with("ly") {
            return LexiconEntry { pos: Pos::Adj, tense: Tense::NotApplicable, lemma: lower };
        }
        if lower.len() > 5 && lower.ends_with("ing") {
            return LexiconEntry { pos: Pos::Verb, tense: Tense::Other, lemma: lower };
        }
        if lower.len() > 4 && lower.ends_with("ed") {
            return LexiconEntry { pos: Pos::Verb, tense: Tense::Past, lemma: lower };
        }
        for suffix in ["ous", "ical", "ive", "able", "ible", "ful", "less"] {
            if lower.len() > suffix.len() + 2 && lower.ends_with(suffix) {
                return LexiconEntry { pos: Pos::Adj, tense: Tense::NotApplicable, lemma: lower };
            }
        }
        noun(&lower)
    }
}

fn noun(lemma: &str) -> LexiconEntry {
    LexiconEntry { pos: Pos::Noun, tense: Tense::NotApplicable, lemma: lemma.to_string() }
}

fn default_plural(lemma: &str) -> String {
    if lemma.ends_with('s') || lemma.ends_with('x') || lemma.ends_with("ch") || lemma.ends_with("sh") {
        format!("{lemma}es")
    } else if lemma.ends_with('y') && !lemma.ends_with("ay") && !lemma.ends_with("ey") && !lemma.ends_with("oy") {
        format!("{}ies", &lemma[..lemma.len() - 1])
    } else {
        format!("{lemma}s")
    }
}
