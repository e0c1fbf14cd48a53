use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::Token;
use crate::corpus::EntityType;
use crate::error::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

const MAX_WORD_CHARS: usize = 100;

/// Subword inventory. Ids are dense from 0; the first thirteen entries are
/// always `[PAD] [UNK] [CLS] [SEP]` followed by the nine entity masks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    pieces: Vec<String>,
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(pieces: Vec<String>) -> Result<Self> {
        Self::from_pieces(pieces)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.pieces
    }
}

fn reserved() -> Vec<String> {
    let mut r: Vec<String> = [PAD, UNK, CLS, SEP].iter().map(|s| s.to_string()).collect();
    r.extend(EntityType::ALL.iter().map(|t| t.mask_token()));
    r
}

impl Vocabulary {
    pub const N_RESERVED: usize = 13;

    fn from_pieces(pieces: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            if p.is_empty() || p.contains('\n') {
                return Err(Error::Invalid(format!("invalid vocabulary entry at line {}", i + 1)));
            }
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary entry {p:?}")));
            }
        }
        let expected = reserved();
        if pieces.len() < expected.len() || pieces[..expected.len()] != expected[..] {
            return Err(Error::Invalid("vocabulary must start with the reserved tokens".into()));
        }
        Ok(Self { pieces, index })
    }

    /// Build from training words: every word becomes a piece, plus digit/letter
    /// runs (`20mg` → `20`, `##mg`) and every character as both a word-initial
    /// and a `##` continuation piece so any word over seen characters encodes
    /// without `[UNK]`.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let reserved = reserved();
        let mut set = BTreeSet::new();
        for w in words {
            if w.is_empty() || reserved.iter().any(|r| r == w) || w.chars().count() > MAX_WORD_CHARS {
                continue;
            }
            set.insert(w.to_string());
            let mut run_start = 0;
            let chars: Vec<(usize, char)> = w.char_indices().collect();
            for k in 1..=chars.len() {
                let boundary = k == chars.len() || chars[k].1.is_ascii_digit() != chars[k - 1].1.is_ascii_digit();
                if boundary {
                    let b0 = chars[run_start].0;
                    let b1 = if k == chars.len() { w.len() } else { chars[k].0 };
                    let run = &w[b0..b1];
                    set.insert(if run_start == 0 { run.to_string() } else { format!("##{run}") });
                    run_start = k;
                }
            }
            for c in w.chars() {
                set.insert(c.to_string());
                set.insert(format!("##{c}"));
            }
        }
        let mut pieces = reserved;
        pieces.extend(set.into_iter().filter(|p| !pieces_contains_reserved(p)));
        Self::from_pieces(pieces).expect("built vocabulary is valid")
    }

    /// Parse the one-piece-per-line file format.
    pub fn from_text(content: &str) -> Result<Self> {
        Self::from_pieces(content.lines().map(str::to_string).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = self.pieces.join("\n");
        s.push('\n');
        s
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn id(&self, piece: &str) -> Option<usize> {
        self.index.get(piece).copied()
    }

    pub fn piece(&self, id: usize) -> Option<&str> {
        self.pieces.get(id).map(String::as_str)
    }

    pub fn unk_id(&self) -> usize {
        1
    }
    pub fn cls_id(&self) -> usize {
        2
    }
    pub fn sep_id(&self) -> usize {
        3
    }

    pub fn mask_id(&self, t: EntityType) -> usize {
        4 + t.index()
    }

    /// Greedy longest-prefix decomposition of one word; a word with any
    /// unmatched remainder becomes a single `[UNK]`.
    pub fn wordpieces(&self, word: &str) -> Vec<usize> {
        if let Some(id) = self.id(word) {
            return vec![id];
        }
        let chars: Vec<usize> = word.char_indices().map(|(b, _)| b).chain(std::iter::once(word.len())).collect();
        if chars.len() - 1 > MAX_WORD_CHARS {
            return vec![self.unk_id()];
        }
        let mut out = Vec::new();
        let mut start = 0;
        let n = chars.len() - 1;
        while start < n {
            let mut found = None;
            for end in (start + 1..=n).rev() {
                let sub = &word[chars[start]..chars[end]];
                let key = if start == 0 { sub.to_string() } else { format!("##{sub}") };
                if let Some(id) = self.id(&key) {
                    found = Some((id, end));
                    break;
                }
            }
            match found {
                Some((id, end)) => {
                    out.push(id);
                    start = end;
                }
                None => return vec![self.unk_id()],
            }
        }
        out
    }
}

fn pieces_contains_reserved(p: &str) -> bool {
    reserved().iter().any(|r| r == p)
}

/// Subword ids of a word sequence plus the position of each word's first
/// piece (after the leading `[CLS]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedWords {
    pub ids: Vec<usize>,
    pub word_starts: Vec<usize>,
    pub pieces_per_word: Vec<usize>,
}

/// `[CLS] pieces... [SEP]` for a token sequence. Words whose decomposition
/// would exceed `max_pieces_per_word` collapse to `[UNK]`.
pub fn encode_words(tokens: &[Token], vocab: &Vocabulary, max_pieces_per_word: usize) -> EncodedWords {
    let mut ids = vec![vocab.cls_id()];
    let mut word_starts = Vec::with_capacity(tokens.len());
    let mut pieces_per_word = Vec::with_capacity(tokens.len());
    for t in tokens {
        let mut pieces = vocab.wordpieces(&t.surface);
        if pieces.len() > max_pieces_per_word {
            pieces = vec![vocab.unk_id()];
        }
        word_starts.push(ids.len());
        pieces_per_word.push(pieces.len());
        ids.extend(pieces);
    }
    ids.push(vocab.sep_id());
    EncodedWords { ids, word_starts, pieces_per_word }
}

pub fn encode_subwords(tokens: &[Token], vocab: &Vocabulary) -> Vec<usize> {
    encode_words(tokens, vocab, usize::MAX).ids
}

/// Inverse of [`encode_subwords`] for words made of known pieces: drops
/// `[CLS]`/`[SEP]`/`[PAD]`, glues `##` pieces to their word, joins words with
/// single spaces.
pub fn decode_subwords(ids: &[usize], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for &id in ids {
        let p = vocab.piece(id).unwrap_or(UNK);
        if p == CLS || p == SEP || p == PAD {
            continue;
        }
        if let Some(rest) = p.strip_prefix("##") {
            out.push_str(rest);
        } else {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::tokenize;
    use proptest::prelude::*;

    #[test]
    fn reserved_layout() {
        let v = Vocabulary::build(["hello"]);
        assert_eq!(v.piece(0), Some(PAD));
        assert_eq!(v.piece(3), Some(SEP));
        assert_eq!(v.piece(4), Some("@Drug$"));
        assert_eq!(v.piece(12), Some("@ADE$"));
        assert_eq!(v.mask_id(EntityType::Ade), 12);
        let round = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(round, v);
    }

    #[test]
    fn subword_split() {
        let v = Vocabulary::from_text(&(reserved().join("\n") + "\n20\n##mg\n")).unwrap();
        let t = tokenize("20mg");
        let ids = encode_subwords(&t, &v);
        assert_eq!(ids, vec![v.cls_id(), v.id("20").unwrap(), v.id("##mg").unwrap(), v.sep_id()]);
        let t = tokenize("zzz");
        assert_eq!(encode_subwords(&t, &v), vec![2, v.unk_id(), 3]);
    }

    #[test]
    fn mask_tokens_encode_atomically() {
        let v = Vocabulary::build(["x"]);
        let ids = encode_subwords(&tokenize("@Drug$ @Strength$"), &v);
        assert_eq!(ids, vec![2, 4, 5, 3]);
    }

    #[test]
    fn build_adds_digit_runs() {
        let v = Vocabulary::build(["20mg"]);
        assert!(v.id("20").is_some());
        assert!(v.id("##mg").is_some());
        // unseen strength decomposes through the runs
        assert_eq!(v.wordpieces("20mg"), vec![v.id("20mg").unwrap()]);
        let p = v.wordpieces("02mg");
        assert!(!p.contains(&v.unk_id()));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Vocabulary::from_text("a\nb\n").is_err());
        let dup = reserved().join("\n") + "\nx\nx\n";
        assert!(Vocabulary::from_text(&dup).is_err());
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(words in proptest::collection::vec("[a-z0-9]{1,8}", 1..20), pick in proptest::collection::vec(0usize..100, 1..10)) {
            let v = Vocabulary::build(words.iter().map(String::as_str));
            let sample: Vec<&str> = pick.iter().map(|i| words[i % words.len()].as_str()).collect();
            let text = sample.join(" ");
            let ids = encode_subwords(&tokenize(&text), &v);
            prop_assert_eq!(decode_subwords(&ids, &v), text);
        }
    }
}
