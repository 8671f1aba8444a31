use std::sync::OnceLock;

use serde::Deserialize;

use super::{Mark, Pos, Tense, Token};

static BUNDLED: &str = include_str!("../../data/overrides.toml");

/// One retagging rule. All present conditions must hold.
#[derive(Debug, Clone, Deserialize)]
pub struct OverrideRule {
    pub word: String,
    #[serde(default)]
    pub prev_pos: Option<Pos>,
    #[serde(default)]
    pub next_pos: Option<Pos>,
    #[serde(default)]
    pub prev_lemma: Option<String>,
    #[serde(default)]
    pub next_word: Option<String>,
    #[serde(default)]
    pub from_pos: Option<Pos>,
    #[serde(default)]
    pub pos: Option<Pos>,
    #[serde(default)]
    pub mark: Option<MarkName>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkName {
    Definition,
    Predicate,
    Modifier,
}

impl From<MarkName> for Mark {
    fn from(m: MarkName) -> Mark {
        match m {
            MarkName::Definition => Mark::Definition,
            MarkName::Predicate => Mark::Predicate,
            MarkName::Modifier => Mark::Modifier,
        }
    }
}

#[derive(Deserialize)]
struct RuleFile {
    rule: Vec<OverrideRule>,
}

pub fn bundled_rules() -> &'static [OverrideRule] {
    static RULES: OnceLock<Vec<OverrideRule>> = OnceLock::new();
    RULES.get_or_init(|| toml::from_str::<RuleFile>(BUNDLED).expect("bundled override table is valid").rule)
}

impl OverrideRule {
    fn matches(&self, tokens: &[Token], i: usize) -> bool {
        let t = &tokens[i];
        if self.word != "*" && t.lower() != self.word {
            return false;
        }
        let prev = i.checked_sub(1).map(|j| &tokens[j]);
        let next = tokens.get(i + 1);
        if let Some(p) = self.from_pos {
            if t.pos != p {
                return false;
            }
        }
        if let Some(p) = self.prev_pos {
            if prev.map(|x| x.pos) != Some(p) {
                return false;
            }
        }
        if let Some(p) = self.next_pos {
            if next.map(|x| x.pos) != Some(p) {
                return false;
            }
        }
        if let Some(l) = &self.prev_lemma {
            if prev.map(|x| x.lemma.as_str()) != Some(l.as_str()) {
                return false;
            }
        }
        if let Some(w) = &self.next_word {
            if next.map(|x| x.lower()).as_deref() != Some(w.as_str()) {
                return false;
            }
        }
        true
    }
}

/// Applies frame-specific retags from the bundled override table.
pub fn prepare_syntax(tokens: Vec<Token>) -> Vec<Token> {
    apply_rules(tokens, bundled_rules())
}

pub fn apply_rules(mut tokens: Vec<Token>, rules: &[OverrideRule]) -> Vec<Token> {
    // Conditions look at the tags before this pass so rule order within a
    // sentence does not depend on earlier rewrites.
    let original = tokens.clone();
    for (i, t) in tokens.iter_mut().enumerate() {
        if t.pos.is_math() {
            continue;
        }
        if let Some(rule) = rules.iter().find(|r| r.matches(&original, i)) {
            if let Some(p) = rule.pos {
                t.pos = p;
                if p != Pos::Verb {
                    t.tense = Tense::NotApplicable;
                }
            }
            if let Some(m) = rule.mark {
                t.mark = Some(m.into());
            }
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use crate::text::{analyze, Mark, Pos};

    fn doc(s: &str) -> Vec<crate::text::Token> {
        analyze(s, "t").unwrap().sentences.remove(0)
    }

    #[test]
    fn normal_becomes_noun_before_of() {
        let t = doc("the normal of the face");
        assert_eq!(t[1].pos, Pos::Noun);
    }

    #[test]
    fn definition_verbs_are_marked() {
        let t = doc("Let $h_in$ denote the heat transfer coefficient");
        assert_eq!(t[0].mark, Some(Mark::Definition));
        assert_eq!(t[2].mark, Some(Mark::Definition));
        assert_eq!(t[5].pos, Pos::Noun);
    }

    #[test]
    fn insulated_after_copula_is_predicate() {
        let t = doc("The remainder of the boundary is insulated");
        let ins = t.iter().find(|x| x.text == "insulated").unwrap();
        assert_eq!((ins.pos, ins.mark), (Pos::Adj, Some(Mark::Predicate)));
    }

    #[test]
    fn no_hits_is_identity() {
        let raw = crate::text::normalize_markup("A cup contains tea", "t").unwrap();
        let tagged = crate::text::tag_tokens(&raw.sentences[0], 0, &[], crate::text::Lexicon::bundled());
        assert_eq!(super::prepare_syntax(tagged.clone()), tagged);
    }
}
