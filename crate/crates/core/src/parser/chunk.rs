//! Shallow chunking and clause detection.
//!
//! A sentence becomes a flat list of chunks (noun phrases, verb groups, math,
//! function words). Clauses are anchored at present-tense verb groups; the
//! subject is the coordinated noun-phrase list just before the anchor and the
//! predicate runs up to the next clause's subject.

use std::ops::Range;

use super::vocab::{VerbKind, Vocabulary};
use crate::text::{Mark, Pos, SpanKind, Tense, Token};

#[derive(Debug, Clone, PartialEq)]
pub struct NounPhrase {
    pub det: Option<String>,
    /// Lowercase surface words, determiner excluded.
    pub words: Vec<String>,
    pub tags: Vec<Pos>,
}

impl NounPhrase {
    pub fn text(&self) -> String {
        self.words.join(" ")
    }

    pub fn is_quantified(&self, vocab: &Vocabulary) -> bool {
        self.det.as_ref().is_some_and(|d| vocab.instantiation.contains(d))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerbGroup {
    /// Vocabulary phrase or joined lemmas.
    pub phrase: String,
    pub first_lemma: String,
    pub tense: Tense,
    pub kind: VerbKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Chunk {
    Np(NounPhrase),
    Verb(VerbGroup),
    Math { kind: SpanKind, text: String },
    Adp(String),
    Conj(String),
    Punct(String),
    Adj(String),
}

impl Chunk {
    pub fn is_adp(&self, w: &str) -> bool {
        matches!(self, Chunk::Adp(a) if a == w)
    }

    pub fn is_separator(&self) -> bool {
        matches!(self, Chunk::Punct(p) if p == ",") || matches!(self, Chunk::Conj(c) if c == "and" || c == "or")
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            Chunk::Math { kind: SpanKind::Symbol, text } => Some(text),
            _ => None,
        }
    }

    pub fn equation(&self) -> Option<&str> {
        match self {
            Chunk::Math { kind: SpanKind::Equation, text } => Some(text),
            _ => None,
        }
    }

    pub fn np(&self) -> Option<&NounPhrase> {
        match self {
            Chunk::Np(np) => Some(np),
            _ => None,
        }
    }

    fn surface(&self) -> String {
        match self {
            Chunk::Np(np) => match &np.det {
                Some(d) => format!("{d} {}", np.text()),
                None => np.text(),
            },
            Chunk::Verb(v) => v.phrase.clone(),
            Chunk::Math { text, .. } => format!("${text}$"),
            Chunk::Adp(w) | Chunk::Conj(w) | Chunk::Punct(w) | Chunk::Adj(w) => w.clone(),
        }
    }
}

pub fn surface(chunks: &[Chunk]) -> String {
    let mut out = String::new();
    for c in chunks {
        let s = c.surface();
        if !out.is_empty() && !matches!(c, Chunk::Punct(p) if p == "," || p == ":" || p == ")") && !out.ends_with('(') {
            out.push(' ');
        }
        out.push_str(&s);
    }
    out
}

fn token_matches(t: &Token, word: &str) -> bool {
    !t.pos.is_math() && (t.lemma == word || t.lower() == word)
}

fn match_phrase(tokens: &[Token], vocab: &Vocabulary) -> Option<(String, usize)> {
    let mut best: Option<(String, usize)> = None;
    for phrase in vocab.verb_phrases() {
        let words: Vec<&str> = phrase.split_whitespace().collect();
        if words.len() > tokens.len() {
            continue;
        }
        if words.iter().zip(tokens).all(|(w, t)| token_matches(t, w)) && best.as_ref().is_none_or(|(_, n)| words.len() > *n) {
            best = Some((phrase.to_string(), words.len()));
        }
    }
    best
}

pub fn chunk_sentence(tokens: &[Token], vocab: &Vocabulary) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        match t.pos {
            Pos::Symbol | Pos::Equation | Pos::Num => {
                let kind = match t.pos {
                    Pos::Symbol => SpanKind::Symbol,
                    Pos::Equation => SpanKind::Equation,
                    _ => SpanKind::Number,
                };
                chunks.push(Chunk::Math { kind, text: t.text.clone() });
                i += 1;
            }
            Pos::Verb => {
                let (phrase, len) = match match_phrase(&tokens[i..], vocab) {
                    Some(m) => m,
                    None => {
                        let n = tokens[i..].iter().take_while(|x| x.pos == Pos::Verb).count();
                        let lemmas: Vec<&str> = tokens[i..i + n].iter().map(|x| x.lemma.as_str()).collect();
                        (lemmas.join(" "), n)
                    }
                };
                let kind = if t.mark == Some(Mark::Definition) { VerbKind::Definition } else { vocab.kind_of(&phrase) };
                chunks.push(Chunk::Verb(VerbGroup { phrase, first_lemma: t.lemma.clone(), tense: t.tense, kind }));
                i += len;
            }
            Pos::Det | Pos::Adj | Pos::Noun => {
                let det = (t.pos == Pos::Det).then(|| t.lower());
                let start = if det.is_some() { i + 1 } else { i };
                let run = tokens[start..]
                    .iter()
                    .take_while(|x| x.pos == Pos::Noun || (x.pos == Pos::Adj && x.mark != Some(Mark::Predicate)))
                    .count();
                let last_noun = tokens[start..start + run].iter().rposition(|x| x.pos == Pos::Noun);
                match last_noun {
                    Some(n) => {
                        let body = &tokens[start..start + n + 1];
                        chunks.push(Chunk::Np(NounPhrase {
                            det,
                            words: body.iter().map(Token::lower).collect(),
                            tags: body.iter().map(|x| x.pos).collect(),
                        }));
                        i = start + n + 1;
                    }
                    None if det.is_some() => i += 1,
                    None => {
                        chunks.push(Chunk::Adj(t.lower()));
                        i += 1;
                    }
                }
            }
            Pos::Adp => {
                chunks.push(Chunk::Adp(t.lower()));
                i += 1;
            }
            Pos::Conj => {
                chunks.push(Chunk::Conj(t.lower()));
                i += 1;
            }
            Pos::Punct => {
                chunks.push(Chunk::Punct(t.text.clone()));
                i += 1;
            }
        }
    }
    chunks
}

/// A present-tense clause.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub sentence: usize,
    pub verb: VerbGroup,
    /// Chunk indices of the subject noun phrases / symbols.
    pub subjects: Vec<usize>,
    /// Chunk range of the predicate after the verb group.
    pub region: Range<usize>,
}

fn is_subject_item(c: &Chunk) -> bool {
    matches!(c, Chunk::Np(_)) || c.symbol().is_some()
}

/// Coordinated subject list ending right before `anchor`, not crossing `floor`.
fn subject_before(chunks: &[Chunk], anchor: usize, floor: usize) -> Vec<usize> {
    let mut j = anchor;
    while j > floor && matches!(&chunks[j - 1], Chunk::Conj(c) if c == "also") {
        j -= 1;
    }
    if j == floor || !is_subject_item(&chunks[j - 1]) {
        return Vec::new();
    }
    // "the coordinate through the wall", "the domain of the layer": the head
    // noun phrase comes before the prepositional modifiers.
    let head_of = |mut k: usize| {
        while k >= floor + 2 && matches!(chunks[k - 1], Chunk::Adp(_)) && matches!(chunks[k - 2], Chunk::Np(_)) {
            k -= 2;
        }
        k
    };
    let mut k = head_of(j - 1);
    let mut items = vec![k];
    let mut saw_conj = false;
    loop {
        let mut s = k;
        let mut conj_here = false;
        while s > floor && chunks[s - 1].is_separator() {
            conj_here |= matches!(chunks[s - 1], Chunk::Conj(_));
            s -= 1;
        }
        if s == k || s == floor || !is_subject_item(&chunks[s - 1]) {
            break;
        }
        saw_conj |= conj_here;
        k = head_of(s - 1);
        items.push(k);
    }
    if items.len() > 1 && !saw_conj {
        items.truncate(1);
    }
    items.reverse();
    items
}

pub fn find_clauses(chunks: &[Chunk], sentence: usize) -> Vec<Clause> {
    struct Anchor {
        at: usize,
        verb_end: usize,
        subjects: Vec<usize>,
        start: usize,
    }
    let mut anchors: Vec<Anchor> = Vec::new();
    let mut i = 0;
    let mut floor = 0;
    while i < chunks.len() {
        let Chunk::Verb(vg) = &chunks[i] else {
            i += 1;
            continue;
        };
        if vg.tense != Tense::Present {
            i += 1;
            continue;
        }
        // "let S denote ...": the symbol is the subject of the definition verb.
        if vg.first_lemma == "let" {
            if let (Some(sym), Some(Chunk::Verb(_))) = (chunks.get(i + 1), chunks.get(i + 2)) {
                if sym.symbol().is_some() {
                    anchors.push(Anchor { at: i + 2, verb_end: i + 3, subjects: vec![i + 1], start: i });
                    floor = i + 3;
                    i += 3;
                    continue;
                }
            }
        }
        let subjects = subject_before(chunks, i, floor);
        let start = subjects.first().copied().unwrap_or(i);
        anchors.push(Anchor { at: i, verb_end: i + 1, subjects, start });
        floor = i + 1;
        i += 1;
    }

    let mut clauses = Vec::new();
    for (n, a) in anchors.iter().enumerate() {
        let mut end = anchors.get(n + 1).map_or(chunks.len(), |next| next.start);
        while end > a.verb_end && chunks[end - 1].is_separator() {
            end -= 1;
        }
        let Chunk::Verb(vg) = &chunks[a.at] else { unreachable!() };
        clauses.push(Clause { sentence, verb: vg.clone(), subjects: a.subjects.clone(), region: a.verb_end..end });
    }
    clauses
}

/// Leading coordinated list of noun phrases / symbols starting at `start`.
pub fn coordinated(chunks: &[Chunk], range: Range<usize>) -> Vec<usize> {
    let mut items = Vec::new();
    let mut k = range.start;
    while k < range.end && is_subject_item(&chunks[k]) {
        items.push(k);
        let mut s = k + 1;
        while s < range.end && chunks[s].is_separator() {
            s += 1;
        }
        if s == k + 1 {
            break;
        }
        k = s;
    }
    items
}

/// Items of a list introduced by a colon, plus participial connections
/// between consecutive items ("a head connected to a handle").
pub fn colon_list(chunks: &[Chunk], range: Range<usize>) -> (Vec<usize>, Vec<(usize, usize, String)>) {
    let mut items = Vec::new();
    let mut links = Vec::new();
    let mut k = range.start;
    let mut pending: Option<String> = None;
    while k < range.end {
        match &chunks[k] {
            Chunk::Np(_) => {
                if let (Some(word), Some(prev)) = (pending.take(), items.last().copied()) {
                    links.push((prev, k, word));
                }
                items.push(k);
            }
            c if c.is_separator() => {}
            Chunk::Verb(vg) if matches!(vg.kind, VerbKind::Connection { .. }) && !items.is_empty() => {
                pending = Some(vg.phrase.clone());
            }
            _ => break,
        }
        k += 1;
    }
    (items, links)
}
