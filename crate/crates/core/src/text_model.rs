//! Text representation shared by every stage of the pipeline.
//!
//! A [`Prompt`] is an ordered list of [`Word`]s plus the separator runs
//! between them, so the normalized source text can always be rebuilt
//! exactly. Words are split on whitespace; leading and trailing punctuation
//! is detached into the separators while word-internal characters (the
//! apostrophe in `don't`, the hyphen in `t-shirt`) stay attached. A chunk
//! with no letter or digit at all (`-`, `...`) is a separator.

use std::fmt;

use thiserror::Error;

/// Bits used to put one character on the wire.
pub const BITS_PER_CHAR: u32 = 8;

/// Number of valid source symbols (7-bit ASCII).
pub const ALPHABET_SIZE: usize = 128;

/// Punctuation detached from the end of a word.
const TRAILING_PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', '"', '\'', ')', ']', '}'];

/// Punctuation detached from the start of a word.
const LEADING_PUNCT: &[char] = &['"', '\'', '(', '[', '{'];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("text contains no words")]
    EmptyText,
    #[error("character {ch:?} at offset {offset} has no ASCII equivalent")]
    NonAsciiCharacter { offset: usize, ch: char },
    #[error("control character {code:#04x} at offset {offset} is not allowed in source text")]
    ControlCharacter { offset: usize, code: u8 },
}

/// The 128-symbol source alphabet, each symbol carried in 8 bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Alphabet;

impl Alphabet {
    pub const fn ascii() -> Self {
        Alphabet
    }

    pub const fn bits_per_char(&self) -> u32 {
        BITS_PER_CHAR
    }

    pub const fn len(&self) -> usize {
        ALPHABET_SIZE
    }

    pub const fn is_empty(&self) -> bool {
        false
    }

    /// All symbols in code order.
    pub fn symbols(&self) -> impl Iterator<Item = char> {
        (0u8..ALPHABET_SIZE as u8).map(char::from)
    }

    /// Index of `ch` in the alphabet, `None` outside 7-bit ASCII.
    pub fn index_of(&self, ch: char) -> Option<u8> {
        if ch.is_ascii() {
            Some(ch as u8)
        } else {
            None
        }
    }

    pub fn symbol(&self, index: u8) -> Option<char> {
        (index < ALPHABET_SIZE as u8).then(|| char::from(index))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    text: String,
    index: usize,
    /// Byte offset of the word in the normalized source text.
    offset: usize,
}

impl Word {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Number of characters, `|x_i|`.
    pub fn char_count(&self) -> usize {
        self.text.len()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// An ordered sequence of words with the separators needed to rebuild the
/// normalized text they came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Prompt {
    words: Vec<Word>,
    /// `separators[i]` precedes word `i`; the last entry trails the final word.
    separators: Vec<String>,
    source_text: String,
}

impl Prompt {
    /// Builds a prompt from bare words joined by single spaces.
    ///
    /// Each entry must already be a single token as [`tokenize`] would
    /// produce it.
    pub fn from_words<I, S>(words: I) -> Result<Prompt, TextError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let joined = words
            .into_iter()
            .map(|w| w.as_ref().to_owned())
            .collect::<Vec<_>>()
            .join(" ");
        tokenize(&joined)
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, index: usize) -> Option<&Word> {
        self.words.get(index)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn separators(&self) -> &[String] {
        &self.separators
    }

    /// Total word characters, separators excluded.
    pub fn char_count(&self) -> usize {
        self.words.iter().map(Word::char_count).sum()
    }

    /// Word texts in order.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(Word::text)
    }

    /// Words joined by single spaces, i.e. the text a receiver reassembles.
    pub fn joined(&self) -> String {
        self.texts().collect::<Vec<_>>().join(" ")
    }

    /// Rebuilds the normalized source text from words and separators.
    pub fn detokenize(&self) -> String {
        let mut out = String::with_capacity(self.source_text.len());
        for (sep, word) in self.separators.iter().zip(&self.words) {
            out.push_str(sep);
            out.push_str(&word.text);
        }
        if let Some(tail) = self.separators.last() {
            out.push_str(tail);
        }
        out
    }

    /// Joined text with `words[index]` replaced by `mask`.
    pub fn masked(&self, index: usize, mask: &str) -> String {
        self.words
            .iter()
            .map(|w| {
                if w.index == index {
                    mask
                } else {
                    w.text.as_str()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The first `len` words as a new prompt, `h(t)` for `t = len`.
    pub fn prefix(&self, len: usize) -> Result<Prompt, TextError> {
        Prompt::from_words(self.texts().take(len))
    }
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_text)
    }
}

/// Folds common Unicode punctuation to ASCII and rejects anything else
/// outside 7-bit ASCII. Offsets in errors are character offsets.
pub fn normalize(text: &str) -> Result<String, TextError> {
    let mut out = String::with_capacity(text.len());
    for (offset, ch) in text.chars().enumerate() {
        if ch.is_ascii() {
            out.push(ch);
            continue;
        }
        let folded = match ch {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' => "'",
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' => "\"",
            '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2015}'
            | '\u{2212}' => "-",
            '\u{2026}' => "...",
            '\u{00A0}' | '\u{2002}' | '\u{2003}' | '\u{2009}' | '\u{202F}' => " ",
            '\u{200B}' | '\u{FEFF}' => "",
            _ => return Err(TextError::NonAsciiCharacter { offset, ch }),
        };
        out.push_str(folded);
    }
    Ok(out)
}

/// Normalizes `text` and splits it into words.
pub fn tokenize(text: &str) -> Result<Prompt, TextError> {
    let normalized = normalize(text)?;
    if let Some((offset, b)) = normalized
        .bytes()
        .enumerate()
        .find(|(_, b)| b.is_ascii_control() && !b.is_ascii_whitespace())
    {
        return Err(TextError::ControlCharacter { offset, code: b });
    }

    let mut words = Vec::new();
    let mut separators = Vec::new();
    let mut pending = String::new();
    let bytes = normalized.as_bytes();
    let mut pos = 0;

    while pos < bytes.len() {
        if bytes[pos].is_ascii_whitespace() {
            pending.push(bytes[pos] as char);
            pos += 1;
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let chunk = &normalized[start..pos];
        let body_start = chunk
            .find(|c: char| !LEADING_PUNCT.contains(&c))
            .unwrap_or(chunk.len());
        let body_end = chunk[body_start..]
            .rfind(|c: char| !TRAILING_PUNCT.contains(&c))
            .map(|i| body_start + i + 1)
            .unwrap_or(body_start);
        if !chunk[body_start..body_end]
            .bytes()
            .any(|b| b.is_ascii_alphanumeric())
        {
            pending.push_str(chunk);
            continue;
        }
        pending.push_str(&chunk[..body_start]);
        separators.push(std::mem::take(&mut pending));
        words.push(Word {
            text: chunk[body_start..body_end].to_owned(),
            index: words.len(),
            offset: start + body_start,
        });
        pending.push_str(&chunk[body_end..]);
    }

    if words.is_empty() {
        return Err(TextError::EmptyText);
    }
    separators.push(pending);

    Ok(Prompt {
        words,
        separators,
        source_text: normalized,
    })
}
