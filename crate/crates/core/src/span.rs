//! Character-offset helpers. All public offsets in this crate count Unicode
//! scalar values, matching standoff annotation conventions.

/// Byte offset of every char boundary, plus the end of the string.
pub fn char_boundaries(text: &str) -> Vec<usize> {
    let mut out: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
    out.push(text.len());
    out
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slice `text` by char offsets `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut it = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let b_start = it.nth(start)?;
    let b_end = if end == start { b_start } else { it.nth(end - start - 1)? };
    Some(&text[b_start..b_end])
}

/// A precomputed char→byte index for repeated slicing of one text.
#[derive(Debug, Clone)]
pub struct CharIndex<'a> {
    text: &'a str,
    bounds: Vec<usize>,
}

impl<'a> CharIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        Self { text, bounds: char_boundaries(text) }
    }

    pub fn len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice(&self, start: usize, end: usize) -> Option<&'a str> {
        if start > end || end > self.len() {
            return None;
        }
        Some(&self.text[self.bounds[start]..self.bounds[end]])
    }

    pub fn byte(&self, char_offset: usize) -> usize {
        self.bounds[char_offset]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_by_chars() {
        let t = "héllo wörld";
        assert_eq!(char_slice(t, 0, 5), Some("héllo"));
        assert_eq!(char_slice(t, 6, 11), Some("wörld"));
        assert_eq!(char_slice(t, 3, 3), Some(""));
        assert_eq!(char_slice(t, 11, 11), Some(""));
        assert_eq!(char_slice(t, 6, 12), None);
        let idx = CharIndex::new(t);
        assert_eq!(idx.len(), 11);
        assert_eq!(idx.slice(1, 2), Some("é"));
    }
}
