//! Comment merging and filtering, plus the trivial-function rule.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::names::normalize_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommentKind {
    Line,
    Block,
}

/// A comment as it appears in source, markers already stripped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawComment {
    pub text: String,
    /// 1-based line of the first character of the comment.
    pub line: usize,
    pub kind: CommentKind,
}

impl RawComment {
    pub fn line(text: impl Into<String>, line: usize) -> Self {
        assert!(line >= 1, "comment lines are 1-based");
        Self {
            text: text.into(),
            line,
            kind: CommentKind::Line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    /// Comments with fewer whitespace tokens than this are dropped.
    pub min_tokens: usize,
    /// Fraction of code-looking tokens at which a comment counts as commented-out code.
    pub code_token_ratio: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            min_tokens: 4,
            code_token_ratio: 0.5,
        }
    }
}

static LINTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(linter|lint:|noqa|eslint|pylint|checkstyle)").unwrap());

// A token looks like code when it carries statement punctuation or is a call.
static CODE_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[;{}=]|^[A-Za-z_$][\w.$]*\(|\)$").unwrap());

/// Strips comment markers (`//`, `#`, `/*`, `*/`, leading `*`) and collapses whitespace.
pub fn strip_markers(raw: &str) -> String {
    let mut body = raw.trim();
    for open in ["/**", "/*", "//", "#"] {
        if let Some(rest) = body.strip_prefix(open) {
            body = rest;
            break;
        }
    }
    let body = body.strip_suffix("*/").unwrap_or(body);
    body.lines()
        .map(|l| l.trim().trim_start_matches('*').trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// True when at least `ratio` of the comment's tokens look like source code.
pub fn looks_like_code(text: &str, ratio: f64) -> bool {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.is_empty() {
        return false;
    }
    let code = tokens.iter().filter(|t| CODE_TOKEN.is_match(t)).count();
    code as f64 >= ratio * tokens.len() as f64
}

fn keep(text: &str, config: &CleanConfig) -> bool {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() < config.min_tokens.max(1) {
        return false;
    }
    if tokens[0].get(..4).is_some_and(|p| p.eq_ignore_ascii_case("todo")) {
        return false;
    }
    if LINTER.is_match(text) {
        return false;
    }
    !looks_like_code(text, config.code_token_ratio)
}

/// Merges comments on consecutive lines, then drops low-information ones.
pub fn clean_comments(raw: &[RawComment]) -> Vec<String> {
    clean_comments_with(raw, &CleanConfig::default())
}

pub fn clean_comments_with(raw: &[RawComment], config: &CleanConfig) -> Vec<String> {
    merge_consecutive(raw)
        .into_iter()
        .filter(|c| keep(c, config))
        .collect()
}

/// Joins comments whose lines are adjacent into one space-separated string.
pub fn merge_consecutive(raw: &[RawComment]) -> Vec<String> {
    let mut merged: Vec<String> = Vec::new();
    let mut last_line: Option<usize> = None;
    for comment in raw {
        let text = comment.text.split_whitespace().collect::<Vec<_>>().join(" ");
        if text.is_empty() {
            continue;
        }
        match (merged.last_mut(), last_line) {
            (Some(prev), Some(l)) if comment.line == l + 1 => {
                prev.push(' ');
                prev.push_str(&text);
            }
            _ => merged.push(text),
        }
        let span = comment.text.lines().count().max(1) - 1;
        last_line = Some(comment.line + span);
    }
    merged
}

/// Normalized names of functions that carry little semantic information.
pub const TRIVIAL_NAMES: &[&str] = &[
    "getter",
    "setter",
    "get",
    "set",
    "del",
    "getattr",
    "setattr",
    "delattr",
    "getattribute",
    "getitem",
    "setitem",
    "delitem",
    "str",
    "repr",
    "eq",
    "hash",
    "to string",
    "equals",
    "hash code",
];

/// True for accessors and boilerplate overrides, which get no code-comment pairs.
///
/// Besides the fixed list, plain two-word accessors such as `getName` or
/// `set_value` count as trivial.
pub fn is_trivial_function(name: &str) -> bool {
    let normalized = normalize_name(name);
    if TRIVIAL_NAMES.contains(&normalized.as_str()) {
        return true;
    }
    let words: Vec<&str> = normalized.split(' ').collect();
    words.len() == 2 && matches!(words[0], "get" | "set")
}
