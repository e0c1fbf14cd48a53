//! Tokenization with character offsets, budgeted segmentation of long
//! notes, WordPiece-style subword encoding and IOB2 label alignment.

mod segment;
mod vocab;

use serde::{Deserialize, Serialize};

use crate::corpus::{EntityAnnotation, EntityType};
use crate::crf_ner::tags::{Tag, TagSequence};
use crate::error::{Error, Result};

pub use segment::{paragraph_pieces, segment, segment_by_cost, Chunk};
pub use vocab::{decode_subwords, encode_subwords, encode_words, EncodedWords, Vocabulary, CLS, PAD, SEP, UNK};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub is_subword_continuation: bool,
}

impl Token {
    fn word(surface: &str, start: usize, end: usize) -> Self {
        Self { surface: surface.to_string(), start, end, is_subword_continuation: false }
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

/// If an entity mask token such as `@Drug$` starts at `s`, return its length.
fn mask_at(s: &str) -> Option<usize> {
    if !s.starts_with('@') {
        return None;
    }
    EntityType::ALL
        .iter()
        .map(|t| t.mask_token())
        .find(|m| s.starts_with(m.as_str()))
        .map(|m| m.len())
}

/// Split on whitespace, detaching every punctuation character as its own
/// token. Entity mask tokens (`@Drug$`, ...) are kept whole.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word: Option<(usize, usize)> = None; // (char start, byte start)
    let flush = |word: &mut Option<(usize, usize)>, end_char: usize, end_byte: usize, tokens: &mut Vec<Token>| {
        if let Some((cs, bs)) = word.take() {
            tokens.push(Token::word(&text[bs..end_byte], cs, end_char));
        }
    };

    let mut char_pos = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((b, c)) = iter.next() {
        if c.is_whitespace() {
            flush(&mut word, char_pos, b, &mut tokens);
        } else if let Some(len) = (c == '@').then(|| mask_at(&text[b..])).flatten() {
            flush(&mut word, char_pos, b, &mut tokens);
            let surface = &text[b..b + len];
            let n_chars = surface.chars().count();
            tokens.push(Token::word(surface, char_pos, char_pos + n_chars));
            for _ in 1..n_chars {
                iter.next();
            }
            char_pos += n_chars;
            continue;
        } else if is_punct(c) {
            flush(&mut word, char_pos, b, &mut tokens);
            tokens.push(Token::word(&text[b..b + c.len_utf8()], char_pos, char_pos + 1));
        } else if word.is_none() {
            word = Some((char_pos, b));
        }
        char_pos += 1;
    }
    flush(&mut word, char_pos, text.len(), &mut tokens);
    tokens
}

/// IOB2 tags for word tokens: the first token of an entity gets `B-<Type>`,
/// the rest `I-<Type>`, everything else `O`.
pub fn align_labels(tokens: &[Token], entities: &[EntityAnnotation]) -> Result<TagSequence> {
    let mut tags = vec![Tag::O; tokens.len()];
    let mut sorted: Vec<&EntityAnnotation> = entities.iter().collect();
    sorted.sort_by_key(|e| (e.start, e.end));
    for pair in sorted.windows(2) {
        if pair[0].overlaps(pair[1]) {
            return Err(Error::Integrity(format!("entities {} and {} overlap", pair[0].id, pair[1].id)));
        }
    }
    for e in sorted {
        let first = tokens.partition_point(|t| t.start < e.start);
        let misaligned = || Error::Alignment { entity_id: e.id.clone() };
        if first >= tokens.len() || tokens[first].start != e.start {
            return Err(misaligned());
        }
        let last = tokens.partition_point(|t| t.end <= e.end);
        if last == 0 || last <= first || tokens[last - 1].end != e.end {
            return Err(misaligned());
        }
        tags[first] = Tag::B(e.entity_type);
        for tag in &mut tags[first + 1..last] {
            *tag = Tag::I(e.entity_type);
        }
    }
    Ok(tags)
}

/// Expand word-level tags to subword level: continuation pieces carry the
/// `I-` tag of their word (`O` stays `O`).
pub fn subword_tags(word_tags: &[Tag], pieces_per_word: &[usize]) -> Vec<Tag> {
    let mut out = Vec::new();
    for (&tag, &n) in word_tags.iter().zip(pieces_per_word) {
        out.push(tag);
        let cont = match tag {
            Tag::O => Tag::O,
            Tag::B(t) | Tag::I(t) => Tag::I(t),
        };
        out.extend(std::iter::repeat_n(cont, n.saturating_sub(1)));
    }
    out
}

/// Upper bound on subword pieces for one word; longer words become `[UNK]`.
pub const MAX_PIECES_PER_WORD: usize = 16;

fn piece_cap(max_len: usize) -> usize {
    MAX_PIECES_PER_WORD.min(max_len.saturating_sub(2).max(1))
}

/// Chunk a document so every chunk encodes to at most `max_len` ids
/// including `[CLS]` and `[SEP]`.
pub fn chunk_for_encoder(doc_id: &str, tokens: &[Token], text: &str, vocab: &Vocabulary, max_len: usize) -> Vec<Chunk> {
    let cap = piece_cap(max_len);
    segment_by_cost(doc_id, tokens, text, max_len.saturating_sub(2).max(1), |t| {
        let n = vocab.wordpieces(&t.surface).len();
        if n > cap { 1 } else { n }
    })
}

/// Encode tokens for a model with input length `max_len`, truncating to fit.
pub fn encode_for_encoder(tokens: &[Token], vocab: &Vocabulary, max_len: usize) -> EncodedWords {
    let mut enc = encode_words(tokens, vocab, piece_cap(max_len));
    if enc.ids.len() > max_len && max_len >= 2 {
        enc.ids.truncate(max_len - 1);
        enc.ids.push(vocab.sep_id());
        let kept = enc.word_starts.partition_point(|&p| p < max_len - 1);
        enc.word_starts.truncate(kept);
        enc.pieces_per_word.truncate(kept);
    }
    enc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::char_slice;
    use proptest::prelude::*;

    fn surfaces(t: &[Token]) -> Vec<&str> {
        t.iter().map(|t| t.surface.as_str()).collect()
    }

    #[test]
    fn tokenize_example() {
        let t = tokenize("Lisinopril 20mg.");
        assert_eq!(surfaces(&t), vec!["Lisinopril", "20mg", "."]);
        let offs: Vec<_> = t.iter().map(|t| (t.start, t.end)).collect();
        assert_eq!(offs, vec![(0, 10), (11, 15), (15, 16)]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n ").is_empty());
    }

    #[test]
    fn masks_are_atomic() {
        let t = tokenize("@Drug$ @Strength$, x@ADE$.");
        assert_eq!(surfaces(&t), vec!["@Drug$", "@Strength$", ",", "x", "@ADE$", "."]);
        assert_eq!(surfaces(&tokenize("@Foo$")), vec!["@", "Foo", "$"]);
    }

    #[test]
    fn align_examples() {
        let t = tokenize("Lisinopril 20mg");
        let e = vec![
            EntityAnnotation::new("T1", EntityType::Drug, 0, 10, "Lisinopril"),
            EntityAnnotation::new("T2", EntityType::Strength, 11, 15, "20mg"),
        ];
        assert_eq!(align_labels(&t, &e).unwrap(), vec![Tag::B(EntityType::Drug), Tag::B(EntityType::Strength)]);
        assert_eq!(align_labels(&t, &[]).unwrap(), vec![Tag::O, Tag::O]);

        let t = tokenize("for one more week");
        let e = vec![EntityAnnotation::new("T3", EntityType::Duration, 4, 17, "one more week")];
        let d = EntityType::Duration;
        assert_eq!(align_labels(&t, &e).unwrap(), vec![Tag::O, Tag::B(d), Tag::I(d), Tag::I(d)]);
    }

    #[test]
    fn align_rejects_partial_token() {
        let t = tokenize("Lisinopril 20mg");
        let e = vec![EntityAnnotation::new("T9", EntityType::Strength, 11, 13, "20")];
        match align_labels(&t, &e) {
            Err(Error::Alignment { entity_id }) => assert_eq!(entity_id, "T9"),
            other => panic!("expected alignment error, got {other:?}"),
        }
    }

    #[test]
    fn continuation_convention() {
        let d = EntityType::Drug;
        let tags = subword_tags(&[Tag::B(d), Tag::O, Tag::I(d)], &[3, 2, 1]);
        assert_eq!(tags, vec![Tag::B(d), Tag::I(d), Tag::I(d), Tag::O, Tag::O, Tag::I(d)]);
    }

    proptest! {
        #[test]
        fn offsets_slice_back(text in "[a-zA-Z0-9 .,;:!?()\\n\\t@$é-]{0,80}") {
            let tokens = tokenize(&text);
            let mut prev_end = 0;
            for t in &tokens {
                prop_assert!(t.start < t.end);
                prop_assert!(t.start >= prev_end);
                prop_assert_eq!(char_slice(&text, t.start, t.end), Some(t.surface.as_str()));
                let gap = char_slice(&text, prev_end, t.start).unwrap();
                prop_assert!(gap.chars().all(char::is_whitespace));
                prev_end = t.end;
            }
            let tail = char_slice(&text, prev_end, text.chars().count()).unwrap();
            prop_assert!(tail.chars().all(char::is_whitespace));
        }
    }
}
