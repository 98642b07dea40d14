#![allow(dead_code)]

pub mod fd;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use coderet::corpus::{parse_corpus, FunctionRecord, Language};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

pub fn toy_corpus() -> Vec<FunctionRecord> {
    let langs = Language::parse_set("python,java").unwrap();
    parse_corpus(&fixture_dir().join("src"), &langs).unwrap().records
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Planted duplicate pairs and planted same-name mismatches, lower id first.
pub fn ground_truth() -> (Vec<(String, String)>, Vec<(String, String)>) {
    let text = std::fs::read_to_string(fixture_dir().join("ground_truth.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let read = |k: &str| {
        v[k].as_array()
            .unwrap()
            .iter()
            .map(|p| ordered(p[0].as_str().unwrap(), p[1].as_str().unwrap()))
            .collect()
    };
    (read("planted_pairs"), read("planted_mismatches"))
}

pub fn pair_keys(pairs: &[coderet::pairmine::TrainingPair]) -> HashSet<(String, String)> {
    pairs.iter().map(|p| ordered(&p.left_id, &p.right_id)).collect()
}

pub fn record(id: &str, lang: Language, name: &str, doc: Option<&str>, comments: &[&str], code: &str) -> FunctionRecord {
    FunctionRecord {
        id: id.to_string(),
        language: lang,
        name: name.to_string(),
        name_normalized: coderet::corpus::normalize_name(name),
        doc: doc.map(str::to_string),
        comments: comments.iter().map(|c| c.to_string()).collect(),
        code_tokens: code.split_whitespace().map(str::to_string).collect(),
        source_path: id.split("::").next().unwrap().to_string(),
        line_span: (1, 1),
    }
}
