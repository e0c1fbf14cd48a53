use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::Token;
use crate::span::CharIndex;

/// A contiguous run of a document's tokens that fits the model input budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub chunk_index: usize,
    pub tokens: Vec<Token>,
    /// Indices of `tokens` within the full document token list.
    pub token_range: Range<usize>,
    pub char_range: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gap {
    Inline,
    Line,
    SentenceEndLine,
    Paragraph,
}

/// Classify the whitespace before each token (index 0 is unused).
fn gaps(tokens: &[Token], text: &str) -> Vec<Gap> {
    let index = CharIndex::new(text);
    let mut out = vec![Gap::Inline; tokens.len()];
    for k in 1..tokens.len() {
        let between = index.slice(tokens[k - 1].end, tokens[k].start).unwrap_or("");
        let newlines = between.matches('\n').count();
        out[k] = if newlines >= 2 {
            Gap::Paragraph
        } else if newlines == 1 {
            if tokens[k - 1].surface.ends_with(['.', '!', '?']) {
                Gap::SentenceEndLine
            } else {
                Gap::Line
            }
        } else {
            Gap::Inline
        };
    }
    out
}

/// Segment with every token costing one unit of the `max_seq_len` budget.
pub fn segment(doc_id: &str, tokens: &[Token], text: &str, max_seq_len: usize) -> Vec<Chunk> {
    segment_by_cost(doc_id, tokens, text, max_seq_len, |_| 1)
}

/// Split a token stream into chunks whose summed `cost` stays within
/// `budget`. From each chunk start the split point is, in priority order:
/// the last paragraph boundary (blank line) that fits, else the last line
/// ending in `.`, `!` or `?` that fits, else as many tokens as fit.
///
/// A single token costing more than the budget becomes a chunk of its own.
pub fn segment_by_cost(
    doc_id: &str,
    tokens: &[Token],
    text: &str,
    budget: usize,
    cost: impl Fn(&Token) -> usize,
) -> Vec<Chunk> {
    let budget = budget.max(1);
    let gaps = gaps(tokens, text);
    let n = tokens.len();
    let mut chunks = Vec::new();
    let mut s = 0;
    while s < n {
        let mut fit = s;
        let mut acc = 0;
        while fit < n && acc + cost(&tokens[fit]) <= budget {
            acc += cost(&tokens[fit]);
            fit += 1;
        }
        let fit = fit.max(s + 1);
        let end = if fit == n {
            n
        } else {
            let last_with = |g: Gap| (s + 1..=fit).rev().find(|&k| gaps[k] == g);
            last_with(Gap::Paragraph)
                .or_else(|| last_with(Gap::SentenceEndLine))
                .unwrap_or(fit)
        };
        chunks.push(Chunk {
            doc_id: doc_id.to_string(),
            chunk_index: chunks.len(),
            tokens: tokens[s..end].to_vec(),
            token_range: s..end,
            char_range: (tokens[s].start, tokens[end - 1].end),
        });
        s = end;
    }
    chunks
}

/// Paragraph-delimited pieces of a chunk, as ranges of document token
/// indices.
pub fn paragraph_pieces(chunk: &Chunk, text: &str) -> Vec<Range<usize>> {
    let g = gaps(&chunk.tokens, text);
    let base = chunk.token_range.start;
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..chunk.tokens.len() {
        if g[k] == Gap::Paragraph {
            out.push(base + start..base + k);
            start = k;
        }
    }
    if !chunk.tokens.is_empty() {
        out.push(base + start..base + chunk.tokens.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::tokenize;

    fn words(n: usize, word: &str) -> String {
        vec![word; n].join(" ")
    }

    fn sizes(chunks: &[Chunk]) -> Vec<usize> {
        chunks.iter().map(|c| c.tokens.len()).collect()
    }

    #[test]
    fn fits_entirely() {
        let text = format!("{}\n\n{}", words(60, "a"), words(60, "b"));
        let t = tokenize(&text);
        assert_eq!(sizes(&segment("d", &t, &text, 128)), vec![120]);
    }

    #[test]
    fn splits_at_paragraph() {
        let text = format!("{}\n\n{}", words(100, "a"), words(100, "b"));
        let t = tokenize(&text);
        let c = segment("d", &t, &text, 128);
        assert_eq!(sizes(&c), vec![100, 100]);
        assert_eq!(c[1].tokens[0].surface, "b");
    }

    #[test]
    fn hard_split() {
        let text = words(300, "w");
        let t = tokenize(&text);
        assert_eq!(sizes(&segment("d", &t, &text, 128)), vec![128, 128, 44]);
    }

    #[test]
    fn sentence_end_line_fallback() {
        // one paragraph: a 50-token line ending in '.', then 100 more tokens
        let text = format!("{} .\n{}", words(49, "a"), words(100, "b"));
        let t = tokenize(&text);
        let c = segment("d", &t, &text, 128);
        assert_eq!(sizes(&c), vec![50, 100]);
        // a line break without terminal punctuation is not a split point
        let text = format!("{}\n{}", words(50, "a"), words(100, "b"));
        let t = tokenize(&text);
        assert_eq!(sizes(&segment("d", &t, &text, 128)), vec![128, 22]);
    }

    #[test]
    fn chunk_ranges_and_pieces() {
        let text = "Aspirin 81mg daily.\n\nVital signs stable.\nMore text here.";
        let t = tokenize(text);
        let c = segment("d", &t, text, 128);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].char_range, (0, text.chars().count()));
        let pieces = paragraph_pieces(&c[0], text);
        assert_eq!(pieces, vec![0..4, 4..t.len()]);
    }

    #[test]
    fn oversize_token_gets_own_chunk() {
        let text = "a bbbb c";
        let t = tokenize(text);
        let c = segment_by_cost("d", &t, text, 2, |t| t.surface.len());
        assert_eq!(sizes(&c), vec![1, 1, 1]);
    }
}
