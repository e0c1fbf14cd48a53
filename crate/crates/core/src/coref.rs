//! Coreference of drug mentions by a deterministic two-pass sieve, and
//! text substitution with an offset map back to the original note.
//!
//! Pass 1 clusters repeated Titlecase mentions by exact string. Pass 2 links
//! `it`, `they`, `this medication` and `the drug` to the nearest preceding
//! drug-like mention in the same or the previous sentence.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::synthetic::DRUGS;
use crate::error::{Error, Result};
use crate::span::CharIndex;
use crate::textprep::{tokenize, Token};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionCluster {
    pub representative: Mention,
    pub mentions: Vec<Mention>,
}

/// Anything that can group coreferent mentions in a note.
pub trait CorefResolver {
    fn resolve(&self, text: &str) -> Vec<MentionCluster>;
}

/// Capitalized words that never start a pass-1 mention.
pub const STOPWORDS: &[&str] = &[
    "The", "A", "An", "It", "They", "This", "That", "These", "Those", "He", "She", "We", "I", "His", "Her",
    "Their", "Its", "Patient", "Pt", "No", "Yes", "Continue", "Started", "Take", "Follow", "Vital", "Labs",
    "Discharge", "Admission", "History", "Plan",
];

const SINGLE_PRONOUNS: &[&str] = &["it", "they"];
const PHRASE_PRONOUNS: &[[&str; 2]] = &[["this", "medication"], ["the", "drug"]];

/// The rule-based sieve. `lexicon` holds lowercase drug names.
#[derive(Debug, Clone)]
pub struct Sieve {
    lexicon: HashSet<String>,
}

impl Default for Sieve {
    fn default() -> Self {
        Self::new(DRUGS.iter().copied())
    }
}

fn is_titlecase(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(char::is_uppercase) && s.chars().any(char::is_lowercase) && s.chars().all(char::is_alphabetic)
}

impl Sieve {
    pub fn new<'a>(lexicon: impl IntoIterator<Item = &'a str>) -> Self {
        Self { lexicon: lexicon.into_iter().map(str::to_lowercase).collect() }
    }

    fn is_drug_like(&self, t: &Token) -> bool {
        t.surface.chars().next().is_some_and(char::is_uppercase) && self.lexicon.contains(&t.surface.to_lowercase())
    }
}

fn mention(tokens: &[Token], index: &CharIndex, from: usize, to: usize) -> Mention {
    let (start, end) = (tokens[from].start, tokens[to - 1].end);
    Mention { start, end, surface: index.slice(start, end).unwrap().to_string() }
}

fn run_word(t: &Token) -> bool {
    is_titlecase(&t.surface) && !STOPWORDS.contains(&t.surface.as_str())
}

/// Sentence number of every token; a sentence ends after `.`, `!` or `?`.
fn sentence_ids(tokens: &[Token]) -> Vec<usize> {
    let mut ids = Vec::with_capacity(tokens.len());
    let mut s = 0;
    for t in tokens {
        ids.push(s);
        if matches!(t.surface.as_str(), "." | "!" | "?") {
            s += 1;
        }
    }
    ids
}

impl CorefResolver for Sieve {
    fn resolve(&self, text: &str) -> Vec<MentionCluster> {
        let tokens = tokenize(text);
        let index = CharIndex::new(text);
        let sentence = sentence_ids(&tokens);

        // pass 1: repeated Titlecase runs
        let mut by_surface: BTreeMap<String, Vec<Mention>> = BTreeMap::new();
        let mut i = 0;
        while i < tokens.len() {
            if !run_word(&tokens[i]) {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < tokens.len()
                && run_word(&tokens[j])
                && tokens[j].start == tokens[j - 1].end + 1
                && sentence[j] == sentence[i]
            {
                j += 1;
            }
            let m = mention(&tokens, &index, i, j);
            by_surface.entry(m.surface.clone()).or_default().push(m);
            i = j;
        }
        let mut clusters: Vec<MentionCluster> = by_surface
            .into_values()
            .filter(|ms| ms.len() >= 2)
            .map(|ms| MentionCluster { representative: ms[0].clone(), mentions: ms })
            .collect();

        // pass 2: pronouns to nearest preceding drug-like mention
        let mut k = 0;
        while k < tokens.len() {
            let lower = tokens[k].surface.to_lowercase();
            let width = if SINGLE_PRONOUNS.contains(&lower.as_str()) {
                1
            } else if k + 1 < tokens.len()
                && PHRASE_PRONOUNS.iter().any(|p| p[0] == lower && p[1] == tokens[k + 1].surface.to_lowercase())
            {
                2
            } else {
                0
            };
            if width == 0 {
                k += 1;
                continue;
            }
            let antecedent = (0..k)
                .rev()
                .take_while(|&a| sentence[a] + 1 >= sentence[k])
                .find(|&a| self.is_drug_like(&tokens[a]));
            if let Some(a) = antecedent {
                let ante = mention(&tokens, &index, a, a + 1);
                let pron = mention(&tokens, &index, k, k + width);
                let taken = clusters.iter().flat_map(|c| &c.mentions).any(|m| m.start < pron.end && pron.start < m.end);
                if taken {
                    k += width;
                    continue;
                }
                match clusters.iter_mut().find(|c| c.mentions.iter().any(|m| m.start <= ante.start && ante.end <= m.end)) {
                    Some(c) => c.mentions.push(pron),
                    None => clusters.push(MentionCluster { representative: ante.clone(), mentions: vec![ante, pron] }),
                }
            }
            k += width;
        }

        for c in &mut clusters {
            c.mentions.sort();
        }
        clusters.sort_by(|a, b| a.representative.cmp(&b.representative));
        clusters
    }
}

/// Resolve with the default sieve over the built-in drug lexicon.
pub fn resolve(text: &str) -> Vec<MentionCluster> {
    Sieve::default().resolve(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Segment {
    new_start: usize,
    new_end: usize,
    orig_start: usize,
    orig_end: usize,
    replaced: bool,
}

/// Maps char offsets in substituted text back to the original text. Offsets
/// inside a replaced region map to that region's original bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetMap {
    segments: Vec<Segment>,
    new_len: usize,
    orig_len: usize,
}

impl OffsetMap {
    pub fn identity(len: usize) -> Self {
        let seg = Segment { new_start: 0, new_end: len, orig_start: 0, orig_end: len, replaced: false };
        Self { segments: vec![seg], new_len: len, orig_len: len }
    }

    pub fn new_len(&self) -> usize {
        self.new_len
    }

    fn segment(&self, pos: usize) -> &Segment {
        let i = self.segments.partition_point(|s| s.new_end < pos);
        &self.segments[i.min(self.segments.len() - 1)]
    }

    /// Original offset for a span start at `pos`.
    pub fn to_original_start(&self, pos: usize) -> usize {
        assert!(pos <= self.new_len, "offset {pos} beyond substituted text");
        let s = self.segment(pos);
        if pos == s.new_end {
            return s.orig_end;
        }
        if s.replaced { s.orig_start } else { s.orig_start + (pos - s.new_start) }
    }

    /// Original offset for a span end at `pos`.
    pub fn to_original_end(&self, pos: usize) -> usize {
        assert!(pos <= self.new_len, "offset {pos} beyond substituted text");
        let s = self.segment(pos);
        if pos == s.new_start {
            return s.orig_start;
        }
        if s.replaced { s.orig_end } else { s.orig_start + (pos - s.new_start) }
    }

    pub fn map_span(&self, start: usize, end: usize) -> (usize, usize) {
        (self.to_original_start(start), self.to_original_end(end).max(self.to_original_start(start)))
    }
}

/// Replace every non-representative mention with its representative's
/// surface.
pub fn substitute(text: &str, clusters: &[MentionCluster]) -> Result<(String, OffsetMap)> {
    let mut edits: Vec<(&Mention, &str)> = clusters
        .iter()
        .flat_map(|c| c.mentions.iter().filter(move |m| **m != c.representative).map(move |m| (m, c.representative.surface.as_str())))
        .collect();
    edits.sort_by_key(|(m, _)| (m.start, m.end));
    for w in edits.windows(2) {
        if w[0].0.end > w[1].0.start {
            return Err(Error::Invalid(format!(
                "overlapping replacements at ({}, {}) and ({}, {})",
                w[0].0.start, w[0].0.end, w[1].0.start, w[1].0.end
            )));
        }
    }
    let index = CharIndex::new(text);
    let mut out = String::with_capacity(text.len());
    let mut segments = Vec::new();
    let (mut orig, mut new) = (0usize, 0usize);
    for (m, rep) in edits {
        if m.end > index.len() || index.slice(m.start, m.end) != Some(m.surface.as_str()) {
            return Err(Error::Invalid(format!("mention {:?} does not match the text", m.surface)));
        }
        if m.start > orig {
            let keep = index.slice(orig, m.start).unwrap();
            out.push_str(keep);
            let n = m.start - orig;
            segments.push(Segment { new_start: new, new_end: new + n, orig_start: orig, orig_end: m.start, replaced: false });
            new += n;
        }
        out.push_str(rep);
        let n = rep.chars().count();
        segments.push(Segment { new_start: new, new_end: new + n, orig_start: m.start, orig_end: m.end, replaced: true });
        new += n;
        orig = m.end;
    }
    if orig < index.len() || segments.is_empty() {
        out.push_str(index.slice(orig, index.len()).unwrap());
        let n = index.len() - orig;
        segments.push(Segment { new_start: new, new_end: new + n, orig_start: orig, orig_end: index.len(), replaced: false });
        new += n;
    }
    Ok((out, OffsetMap { segments, new_len: new, orig_len: index.len() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::char_slice;
    use proptest::prelude::*;

    #[test]
    fn pronoun_links_to_drug() {
        let c = resolve("Lisinopril was started. It was stopped.");
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].representative.surface, "Lisinopril");
        let s: Vec<&str> = c[0].mentions.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(s, vec!["Lisinopril", "It"]);
    }

    #[test]
    fn nothing_to_resolve() {
        assert!(resolve("Vital signs stable. Follow up in two weeks.").is_empty());
        assert!(resolve("").is_empty());
    }

    #[test]
    fn exact_match_cluster() {
        let c = resolve("Aspirin 81mg daily. then Aspirin was held.");
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].mentions.len(), 2);
        assert!(c[0].mentions.iter().all(|m| m.surface == "Aspirin"));
    }

    #[test]
    fn phrase_pronouns_and_sentence_window() {
        let c = resolve("Started Coumadin. We reviewed labs. The drug caused bleeding.");
        assert!(c.is_empty(), "antecedent two sentences back must not link: {c:?}");
        let c = resolve("Started Coumadin. This medication caused bleeding.");
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].mentions[1].surface, "This medication");
    }

    #[test]
    fn substitution_and_offsets() {
        let text = "Lisinopril was started. It was stopped.";
        let clusters = resolve(text);
        let (new, map) = substitute(text, &clusters).unwrap();
        assert_eq!(new, "Lisinopril was started. Lisinopril was stopped.");
        // "was stopped" moves by +8
        let orig_was = text.rfind("was").unwrap();
        let new_was = new.rfind("was").unwrap();
        assert_eq!(new_was, orig_was + 8);
        assert_eq!(map.to_original_start(new_was), orig_was);
        assert_eq!(map.map_span(24, 34), (24, 26));
        assert_eq!(map.new_len(), new.len());
    }

    #[test]
    fn identity_without_clusters() {
        let (new, map) = substitute("abc def", &[]).unwrap();
        assert_eq!(new, "abc def");
        assert_eq!(map, OffsetMap::identity(7));
        for p in 0..=7 {
            assert_eq!(map.to_original_start(p), p);
            assert_eq!(map.to_original_end(p), p);
        }
        let (new, _) = substitute("", &[]).unwrap();
        assert_eq!(new, "");
    }

    #[test]
    fn overlapping_replacements_rejected() {
        let m = |s: usize, e: usize, t: &str| Mention { start: s, end: e, surface: t.into() };
        let clusters = vec![
            MentionCluster { representative: m(0, 1, "a"), mentions: vec![m(0, 1, "a"), m(2, 5, "cde")] },
            MentionCluster { representative: m(6, 7, "g"), mentions: vec![m(6, 7, "g"), m(3, 4, "d")] },
        ];
        assert!(substitute("ab cde g", &clusters).is_err());
    }

    #[test]
    fn idempotent_after_substitution() {
        let text = "Lisinopril was started. It was stopped.";
        let (new, _) = substitute(text, &resolve(text)).unwrap();
        let again = resolve(&new);
        assert_eq!(again.len(), 1);
        assert!(again[0].mentions.iter().all(|m| m.surface == "Lisinopril"));
        let (third, _) = substitute(&new, &again).unwrap();
        assert_eq!(third, new);
    }

    #[test]
    fn clusters_serialize() {
        let c = resolve("Lisinopril was started. It was stopped.");
        let json = serde_json::to_string(&c[0]).unwrap();
        assert!(json.starts_with("{\"representative\":{\"start\":0,\"end\":10,\"surface\":\"Lisinopril\"}"));
    }

    proptest! {
        #[test]
        fn mentions_never_overlap(words in proptest::collection::vec(prop_oneof!["Aspirin", "Coumadin", "It", "they", "This", "medication", "the", "drug", "Drug", "\\."], 1..30)) {
            let text = words.join(" ");
            let clusters = resolve(&text);
            let mut all: Vec<&Mention> = clusters.iter().flat_map(|c| &c.mentions).collect();
            all.sort();
            for w in all.windows(2) {
                prop_assert!(w[0].end <= w[1].start, "{:?} overlaps {:?}", w[0], w[1]);
            }
            prop_assert!(substitute(&text, &clusters).is_ok());
        }

        #[test]
        fn mapped_spans_slice_original(drugs in proptest::collection::vec(0usize..DRUGS.len(), 1..5), fillers in proptest::collection::vec(0usize..4, 1..5)) {
            let fill = ["Vital signs stable.", "It was held.", "No change.", "They were given."];
            let mut text = String::new();
            for (i, d) in drugs.iter().enumerate() {
                text.push_str(&format!("Started {} today. ", DRUGS[*d]));
                text.push_str(fill[fillers[i % fillers.len()]]);
                text.push(' ');
            }
            let clusters = resolve(&text);
            let (new, map) = substitute(&text, &clusters).unwrap();
            prop_assert_eq!(map.new_len(), new.chars().count());
            let mut prev = 0;
            for p in 0..=map.new_len() {
                let o = map.to_original_start(p);
                prop_assert!(o >= prev);
                prev = o;
            }
            for c in &clusters {
                for m in &c.mentions {
                    // find the substituted region for this mention by mapping its original start
                    let new_start = (0..=map.new_len()).find(|&p| map.to_original_start(p) == m.start).unwrap();
                    let new_end = new_start + if *m == c.representative { m.surface.chars().count() } else { c.representative.surface.chars().count() };
                    let (os, oe) = map.map_span(new_start, new_end);
                    let back = char_slice(&text, os, oe).unwrap();
                    prop_assert!(back == m.surface || back == c.representative.surface);
                }
            }
            for t in tokenize(&new) {
                let (os, oe) = map.map_span(t.start, t.end);
                let back = char_slice(&text, os, oe).unwrap();
                let is_mention = clusters.iter().any(|c| c.mentions.iter().any(|m| m.start == os && m.end == oe));
                prop_assert!(back == t.surface || is_mention, "{} vs {}", back, t.surface);
            }
        }
    }
}
