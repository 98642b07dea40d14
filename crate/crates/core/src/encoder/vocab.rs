use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::split_identifier;

pub const UNK: &str = "<unk>";
pub const UNK_ID: u32 = 0;

/// Lowercase word pieces of free text or joined code tokens.
///
/// Punctuation is dropped and identifiers are split on camel-case and
/// underscores, so `bubbleSort(arr)` and "bubble sort the array" share pieces.
pub fn pieces(text: &str) -> Vec<String> {
    split_identifier(text)
}

/// Pieces of a lexed code body.
pub fn code_pieces(tokens: &[String]) -> Vec<String> {
    pieces(&tokens.join(" "))
}

/// Token-to-index map. Index 0 is always the unknown token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Keeps the `max_size - 1` most frequent pieces; ties break alphabetically.
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a [String]>, max_size: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            for tok in doc {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(t, _)| *t != UNK).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let mut tokens = vec![UNK.to_string()];
        tokens.extend(
            ranked
                .into_iter()
                .take(max_size.saturating_sub(1))
                .map(|(t, _)| t.to_string()),
        );
        tokens.into()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    /// Maps pieces to ids, keeping at most `max_len` from the front.
    pub fn encode(&self, pieces: &[String], max_len: usize) -> Vec<u32> {
        pieces.iter().take(max_len).map(|p| self.id(p)).collect()
    }

    /// Ids of free text, never empty (a text with no word pieces becomes `[UNK]`).
    pub fn text_ids(&self, text: &str) -> Vec<u32> {
        non_empty(self.encode(&pieces(text), super::MAX_TEXT_LEN))
    }

    /// Ids of a lexed code body, never empty.
    pub fn code_ids(&self, tokens: &[String]) -> Vec<u32> {
        non_empty(self.encode(&code_pieces(tokens), super::MAX_CODE_LEN))
    }
}

fn non_empty(ids: Vec<u32>) -> Vec<u32> {
    if ids.is_empty() {
        vec![UNK_ID]
    } else {
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pieces_split_code_and_text() {
        let code: Vec<String> = ["def", "bubbleSort", "(", "arr", ")", ":", "\"in order\""]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(code_pieces(&code), ["def", "bubble", "sort", "arr", "in", "order"]);
        assert_eq!(pieces("Sort the input, ascending."), ["sort", "the", "input", "ascending"]);
    }

    #[test]
    fn build_orders_by_frequency_and_caps() {
        let docs: Vec<Vec<String>> = vec![
            vec!["b".into(), "a".into(), "a".into()],
            vec!["c".into(), "b".into(), "a".into()],
        ];
        let vocab = Vocab::build(docs.iter().map(Vec::as_slice), 3);
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.token(0), UNK);
        assert_eq!(vocab.token(1), "a");
        assert_eq!(vocab.token(2), "b");
        assert_eq!(vocab.id("c"), UNK_ID);
        assert_eq!(vocab.encode(&["a".into(), "zzz".into(), "b".into()], 2), vec![1, 0]);
    }

    #[test]
    fn serde_roundtrip_keeps_index() {
        let vocab: Vocab = vec![UNK.to_string(), "x".to_string()].into();
        let json = serde_json::to_string(&vocab).unwrap();
        assert_eq!(json, r#"["<unk>","x"]"#);
        let back: Vocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back.id("x"), 1);
    }
}
