//! Token sequences, tokenizers and the word-piece <-> word mapping.
//!
//! The merge engine works on word pieces (`_ro sa l ie`), the metrics work on
//! whole words (`rosalie`). A piece starting with [`WORD_BOUNDARY`] opens a
//! new word; any other piece continues the current one.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker opening a new word inside a word-piece sequence.
pub const WORD_BOUNDARY: char = '_';

/// Ordered, non-empty tokens of one hypothesis.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if let Some(pos) = tokens.iter().position(String::is_empty) {
            return Err(Error::EmptyToken(pos));
        }
        Ok(Self(tokens))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Whitespace tokenization; never fails since split pieces are non-empty.
    pub fn from_text(text: &str) -> Self {
        Self(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// First `len` tokens.
    pub fn prefix(&self, len: usize) -> Self {
        Self(self.0[..len.min(self.0.len())].to_vec())
    }

    /// Keeps the first `max(len - trim, 1)` tokens; an empty sequence stays empty.
    pub fn trimmed(&self, trim: usize) -> Self {
        if self.0.is_empty() {
            return Self::empty();
        }
        self.prefix(self.0.len().saturating_sub(trim).max(1))
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl TryFrom<Vec<String>> for TokenSeq {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Self::new(tokens)
    }
}

impl From<TokenSeq> for Vec<String> {
    fn from(seq: TokenSeq) -> Self {
        seq.0
    }
}

impl<'a> FromIterator<&'a str> for TokenSeq {
    /// Empty strings are dropped.
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        Self(
            iter.into_iter()
                .filter(|t| !t.is_empty())
                .map(str::to_owned)
                .collect(),
        )
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

/// Splits hypothesis text into tokens and joins them back.
///
/// Implementations must round-trip: `split(join(split(s))) == split(s)`.
pub trait Tokenizer {
    fn split(&self, text: &str) -> TokenSeq;
    fn join(&self, tokens: &TokenSeq) -> String;
}

/// One token per whitespace-delimited piece; joins with a single space.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn split(&self, text: &str) -> TokenSeq {
        TokenSeq::from_text(text)
    }

    fn join(&self, tokens: &TokenSeq) -> String {
        tokens.join()
    }
}

/// One token per Unicode scalar value, whitespace included.
#[derive(Debug, Clone, Copy, Default)]
pub struct CodepointTokenizer;

impl Tokenizer for CodepointTokenizer {
    fn split(&self, text: &str) -> TokenSeq {
        TokenSeq(text.chars().map(String::from).collect())
    }

    fn join(&self, tokens: &TokenSeq) -> String {
        tokens.concat()
    }
}

/// Glues word pieces into words at [`WORD_BOUNDARY`] markers.
pub fn pieces_to_words(pieces: &[String]) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    for piece in pieces {
        match piece.strip_prefix(WORD_BOUNDARY) {
            Some(rest) => words.push(rest.to_owned()),
            None => match words.last_mut() {
                Some(word) => word.push_str(piece),
                None => words.push(piece.clone()),
            },
        }
    }
    words.retain(|w| !w.is_empty());
    words
}

/// Convenience for `pieces_to_words` on space-joined piece text.
pub fn text_to_words(text: &str) -> Vec<String> {
    let pieces: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
    pieces_to_words(&pieces)
}

/// Deterministic word-piece split used by the simulator: a boundary-marked
/// head of up to three characters, then tails of up to two characters.
pub fn word_to_pieces(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() <= 4 {
        return vec![format!("{WORD_BOUNDARY}{word}")];
    }
    let mut pieces = vec![format!("{WORD_BOUNDARY}{}", chars[..3].iter().collect::<String>())];
    pieces.extend(chars[3..].chunks(2).map(|c| c.iter().collect::<String>()));
    pieces
}

pub fn words_to_pieces<S: AsRef<str>>(words: &[S]) -> Vec<String> {
    words
        .iter()
        .flat_map(|w| word_to_pieces(w.as_ref()))
        .collect()
}
