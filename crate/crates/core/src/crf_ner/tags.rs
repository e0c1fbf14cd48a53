//! The IOB2 tag inventory and span codec.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{EntityAnnotation, EntityType};
use crate::error::{Error, Result};
use crate::span::CharIndex;
use crate::textprep::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    O,
    B(EntityType),
    I(EntityType),
}

pub type TagSequence = Vec<Tag>;

/// Number of tags: `O` plus `B-`/`I-` for each of the nine entity types.
pub const NUM_TAGS: usize = 1 + 2 * EntityType::ALL.len();

impl Tag {
    pub fn index(self) -> usize {
        match self {
            Tag::O => 0,
            Tag::B(t) => 1 + 2 * t.index(),
            Tag::I(t) => 2 + 2 * t.index(),
        }
    }

    pub fn from_index(i: usize) -> Option<Tag> {
        match i {
            0 => Some(Tag::O),
            i if i < NUM_TAGS => {
                let t = EntityType::ALL[(i - 1) / 2];
                Some(if i % 2 == 1 { Tag::B(t) } else { Tag::I(t) })
            }
            _ => None,
        }
    }

    pub fn entity_type(self) -> Option<EntityType> {
        match self {
            Tag::O => None,
            Tag::B(t) | Tag::I(t) => Some(t),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(t) => write!(f, "B-{t}"),
            Tag::I(t) => write!(f, "I-{t}"),
        }
    }
}

/// Ordered tag names; index 0 is `O`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSet {
    names: Vec<String>,
}

impl Default for TagSet {
    fn default() -> Self {
        Self { names: (0..NUM_TAGS).map(|i| Tag::from_index(i).unwrap().to_string()).collect() }
    }
}

impl TagSet {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn parse(&self, name: &str) -> Option<Tag> {
        self.names.iter().position(|n| n == name).and_then(Tag::from_index)
    }
}

pub fn to_indices(tags: &[Tag]) -> Vec<usize> {
    tags.iter().map(|t| t.index()).collect()
}

pub fn from_indices(idx: &[usize]) -> Result<TagSequence> {
    idx.iter()
        .map(|&i| Tag::from_index(i).ok_or_else(|| Error::Invalid(format!("tag index {i} out of range"))))
        .collect()
}

/// Rewrite every orphan `I-T` (not preceded by `B-T` or `I-T`) to `B-T`.
pub fn repair(tags: &[Tag]) -> TagSequence {
    let mut out: TagSequence = Vec::with_capacity(tags.len());
    for &tag in tags {
        let fixed = match tag {
            Tag::I(t) => match out.last() {
                Some(Tag::B(p)) | Some(Tag::I(p)) if *p == t => tag,
                _ => Tag::B(t),
            },
            other => other,
        };
        out.push(fixed);
    }
    out
}

/// True when no `I-T` follows anything but `B-T`/`I-T`.
pub fn is_valid(tags: &[Tag]) -> bool {
    repair(tags) == tags
}

/// Word-level tags → entity spans. Tags are repaired first; each maximal
/// `B-T I-T*` run becomes one entity whose offsets run from its first token's
/// start to its last token's end. Ids are `T1`, `T2`, ... in text order.
pub fn iob2_decode(tags: &[Tag], tokens: &[Token], text: &str) -> Result<Vec<EntityAnnotation>> {
    if tags.len() != tokens.len() {
        return Err(Error::Shape(format!("{} tags for {} tokens", tags.len(), tokens.len())));
    }
    let tags = repair(tags);
    let index = CharIndex::new(text);
    let mut spans: Vec<(EntityType, usize, usize)> = Vec::new();
    let mut current: Option<(EntityType, usize, usize)> = None;
    for (tag, tok) in tags.iter().zip(tokens) {
        match *tag {
            Tag::B(t) => {
                spans.extend(current.take());
                current = Some((t, tok.start, tok.end));
            }
            Tag::I(_) => {
                if let Some(c) = current.as_mut() {
                    c.2 = tok.end;
                }
            }
            Tag::O => spans.extend(current.take()),
        }
    }
    spans.extend(current);
    spans
        .into_iter()
        .enumerate()
        .map(|(i, (t, s, e))| {
            let surface = index
                .slice(s, e)
                .ok_or_else(|| Error::Shape(format!("token offsets ({s}, {e}) outside text")))?;
            Ok(EntityAnnotation::new(format!("T{}", i + 1), t, s, e, surface))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{align_labels, tokenize};
    use proptest::prelude::*;

    const D: EntityType = EntityType::Drug;

    #[test]
    fn inventory() {
        let ts = TagSet::default();
        assert_eq!(ts.len(), 19);
        assert_eq!(ts.names()[0], "O");
        assert_eq!(ts.names()[1], "B-Drug");
        assert_eq!(ts.names()[18], "I-ADE");
        for i in 0..NUM_TAGS {
            assert_eq!(Tag::from_index(i).unwrap().index(), i);
            assert_eq!(ts.parse(&ts.names()[i]), Tag::from_index(i));
        }
    }

    #[test]
    fn decode_examples() {
        let text = "Lisinopril 20mg";
        let t = tokenize(text);
        let e = iob2_decode(&[Tag::B(D), Tag::B(EntityType::Strength)], &t, text).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].entity_type, e[0].start, e[0].end), (D, 0, 10));
        assert_eq!((e[1].entity_type, e[1].start, e[1].end), (EntityType::Strength, 11, 15));
        assert!(iob2_decode(&[Tag::O, Tag::O], &t, text).unwrap().is_empty());

        let e = iob2_decode(&[Tag::I(D), Tag::I(D)], &t, text).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].surface, "Lisinopril 20mg");
        assert!(iob2_decode(&[Tag::O], &t, text).is_err());
    }

    #[test]
    fn repair_rules() {
        let f = EntityType::Form;
        assert_eq!(repair(&[Tag::I(D), Tag::I(D)]), vec![Tag::B(D), Tag::I(D)]);
        assert_eq!(repair(&[Tag::B(f), Tag::I(D)]), vec![Tag::B(f), Tag::B(D)]);
        assert_eq!(repair(&[Tag::O, Tag::I(f)]), vec![Tag::O, Tag::B(f)]);
    }

    fn any_tag() -> impl Strategy<Value = Tag> {
        (0..NUM_TAGS).prop_map(|i| Tag::from_index(i).unwrap())
    }

    proptest! {
        #[test]
        fn repaired_is_valid(tags in proptest::collection::vec(any_tag(), 0..30)) {
            let r = repair(&tags);
            prop_assert!(is_valid(&r));
            prop_assert_eq!(r.len(), tags.len());
        }

        #[test]
        fn decode_inverts_align(spec in proptest::collection::vec((0usize..9, 1usize..4, 0usize..3), 0..8)) {
            // build text of words with entities of given type/length separated by gap words
            let mut words = Vec::new();
            let mut ents = Vec::new();
            let mut pos = 0usize;
            for (k, (ty, len, gap)) in spec.iter().enumerate() {
                for _ in 0..*gap { words.push("x".to_string()); pos += 2; }
                let start = pos;
                let mut surface = Vec::new();
                for j in 0..*len { let w = format!("w{k}{j}"); pos += w.len() + 1; surface.push(w.clone()); words.push(w); }
                let s = surface.join(" ");
                ents.push(EntityAnnotation::new(format!("T{}", k + 1), EntityType::ALL[*ty], start, start + s.len(), s));
            }
            let text = words.join(" ");
            let tokens = tokenize(&text);
            let tags = align_labels(&tokens, &ents).unwrap();
            let back = iob2_decode(&tags, &tokens, &text).unwrap();
            prop_assert_eq!(back, ents);
        }
    }
}
