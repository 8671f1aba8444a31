//! Text frontend: math-markup normalization, sentence splitting and a
//! deterministic lexicon tagger for controlled English.
//!
//! Math is delimited by `$...$`. A span whose content contains `<`, `=` or
//! `>` is an equation, a bare decimal literal is a number, anything else is a
//! symbol. Sentences end at `.` or `;` outside math.

mod lexicon;
mod prepare;

use std::ops::Range;

use serde::Serialize;

pub use lexicon::{Lexicon, LexiconEntry};
pub use prepare::{prepare_syntax, OverrideRule};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("input is empty")]
    EmptyInput,
    #[error("unbalanced '$' math delimiter ({0} delimiters found)")]
    UnbalancedDelimiter(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanKind {
    Symbol,
    Equation,
    Number,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MathSpan {
    pub sentence: usize,
    /// Character range of the span content (delimiters excluded) within the
    /// normalized sentence.
    pub range: Range<usize>,
    pub kind: SpanKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkedText {
    pub sentences: Vec<String>,
    pub math_spans: Vec<MathSpan>,
    pub source_name: String,
}

impl MarkedText {
    pub fn spans_of(&self, sentence: usize) -> Vec<MathSpan> {
        self.math_spans.iter().filter(|s| s.sentence == sentence).cloned().collect()
    }

    pub fn span_text(&self, span: &MathSpan) -> String {
        self.sentences[span.sentence].chars().skip(span.range.start).take(span.range.len()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adp,
    Det,
    Conj,
    Punct,
    Num,
    Symbol,
    Equation,
}

impl Pos {
    pub fn is_math(self) -> bool {
        matches!(self, Pos::Num | Pos::Symbol | Pos::Equation)
    }

    pub fn parse(tag: &str) -> Option<Pos> {
        Some(match tag {
            "NOUN" => Pos::Noun,
            "VERB" => Pos::Verb,
            "ADJ" => Pos::Adj,
            "ADP" => Pos::Adp,
            "DET" => Pos::Det,
            "CONJ" => Pos::Conj,
            "PUNCT" => Pos::Punct,
            "NUM" => Pos::Num,
            "SYMBOL" => Pos::Symbol,
            "EQUATION" => Pos::Equation,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tense {
    Present,
    Past,
    Other,
    NotApplicable,
}

/// Frame-specific annotation added by [`prepare_syntax`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    /// `let`, `denote`: introduces a symbol definition.
    Definition,
    /// Adjective used as a predicate after the copula (`is insulated`).
    Predicate,
    /// Word used attributively inside a noun phrase (`inside air`).
    Modifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub text: String,
    pub lemma: String,
    pub pos: Pos,
    pub tense: Tense,
    pub mark: Option<Mark>,
    pub sentence_index: usize,
    /// Character offset in the normalized sentence (the `$` for math tokens).
    pub position: usize,
}

impl Token {
    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }

    /// Surface form as it appears in the normalized sentence.
    pub fn surface(&self) -> String {
        if self.pos.is_math() {
            format!("${}$", self.text)
        } else {
            self.text.clone()
        }
    }
}

fn classify_span(content: &str) -> SpanKind {
    if content.contains(['<', '=', '>']) || content.contains("\\le") || content.contains("\\ge") {
        SpanKind::Equation
    } else if crate::expr::parse_number(content).is_some() {
        SpanKind::Number
    } else {
        SpanKind::Symbol
    }
}

/// Splits raw text into normalized sentences and classifies math spans.
///
/// Normalization collapses whitespace runs to one space, trims each
/// sentence and each math span's content, and drops the terminating `.`/`;`.
pub fn normalize_markup(raw: &str, source_name: &str) -> Result<MarkedText, TextError> {
    if raw.trim().is_empty() {
        return Err(TextError::EmptyInput);
    }
    let dollars = raw.matches('$').count();
    if dollars % 2 == 1 {
        return Err(TextError::UnbalancedDelimiter(dollars));
    }

    let chars: Vec<char> = raw.chars().collect();
    let mut sentences: Vec<String> = Vec::new();
    let mut spans: Vec<MathSpan> = Vec::new();
    let mut pending: Vec<(Range<usize>, SpanKind)> = Vec::new();
    let mut current: Vec<char> = Vec::new();

    let mut flush = |current: &mut Vec<char>, pending: &mut Vec<(Range<usize>, SpanKind)>| {
        while current.last().is_some_and(|c| *c == ' ') {
            current.pop();
        }
        if !current.is_empty() {
            let idx = sentences.len();
            sentences.push(current.iter().collect());
            spans.extend(pending.drain(..).map(|(range, kind)| MathSpan { sentence: idx, range, kind }));
        }
        current.clear();
        pending.clear();
    };

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '$' {
            let close = (i + 1..chars.len()).find(|&j| chars[j] == '$').expect("balanced");
            let inner: String = chars[i + 1..close].iter().collect();
            let content = inner.split_whitespace().collect::<Vec<_>>().join(" ");
            if !current.is_empty() && current.last() != Some(&' ') && needs_space_before_math(*current.last().unwrap()) {
                current.push(' ');
            }
            current.push('$');
            let start = current.len();
            current.extend(content.chars());
            let end = current.len();
            current.push('$');
            pending.push((start..end, classify_span(&content)));
            i = close + 1;
            continue;
        }
        if c.is_whitespace() {
            if !current.is_empty() && current.last() != Some(&' ') {
                current.push(' ');
            }
        } else if c == ';' || (c == '.' && !is_decimal_point(&chars, i)) {
            flush(&mut current, &mut pending);
        } else {
            current.push(c);
        }
        i += 1;
    }
    flush(&mut current, &mut pending);

    if sentences.is_empty() {
        return Err(TextError::EmptyInput);
    }
    Ok(MarkedText { sentences, math_spans: spans, source_name: source_name.to_string() })
}

fn needs_space_before_math(prev: char) -> bool {
    prev.is_alphanumeric()
}

fn is_decimal_point(chars: &[char], i: usize) -> bool {
    i > 0 && i + 1 < chars.len() && chars[i - 1].is_ascii_digit() && chars[i + 1].is_ascii_digit()
}

/// Splits a normalized sentence into raw word/punctuation/math pieces and
/// tags each one.
pub fn tag_tokens(sentence: &str, sentence_index: usize, spans: &[MathSpan], lexicon: &Lexicon) -> Vec<Token> {
    let chars: Vec<char> = sentence.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '$' {
            let span = spans.iter().find(|s| s.range.start == i + 1).expect("math span registered for every delimiter");
            let text: String = chars[span.range.clone()].iter().collect();
            let pos = match span.kind {
                SpanKind::Symbol => Pos::Symbol,
                SpanKind::Equation => Pos::Equation,
                SpanKind::Number => Pos::Num,
            };
            tokens.push(Token {
                lemma: text.clone(),
                text,
                pos,
                tense: Tense::NotApplicable,
                mark: None,
                sentence_index,
                position: i,
            });
            i = span.range.end + 1;
        } else if c == ' ' {
            i += 1;
        } else if c.is_alphanumeric() {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric()
                    || ((chars[i] == '-' || chars[i] == '\'')
                        && i + 1 < chars.len()
                        && chars[i + 1].is_alphanumeric()
                        && chars[i - 1].is_alphanumeric()))
            {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let entry = lexicon.tag(&word);
            tokens.push(Token {
                text: word,
                lemma: entry.lemma,
                pos: entry.pos,
                tense: entry.tense,
                mark: None,
                sentence_index,
                position: start,
            });
        } else {
            tokens.push(Token {
                text: c.to_string(),
                lemma: c.to_string(),
                pos: Pos::Punct,
                tense: Tense::NotApplicable,
                mark: None,
                sentence_index,
                position: i,
            });
            i += 1;
        }
    }
    tokens
}

/// Rebuilds the normalized sentence from its tokens.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut len = 0usize;
    for t in tokens {
        while len < t.position {
            out.push(' ');
            len += 1;
        }
        let s = t.surface();
        len += s.chars().count();
        out.push_str(&s);
    }
    out
}

/// A statement after the frontend: normalized text plus prepared tokens per sentence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Document {
    pub marked: MarkedText,
    pub sentences: Vec<Vec<Token>>,
}

pub fn analyze(raw: &str, source_name: &str) -> Result<Document, TextError> {
    let marked = normalize_markup(raw, source_name)?;
    let lexicon = Lexicon::bundled();
    let sentences = marked
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| prepare_syntax(tag_tokens(s, i, &marked.spans_of(i), lexicon)))
        .collect();
    Ok(Document { marked, sentences })
}
