//! Corpus ingestion: walk a source tree, split every function into code,
//! documentation and cleaned in-line comments.

mod clean;
mod extract;
pub mod lexer;
mod names;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

pub use clean::{
    clean_comments, clean_comments_with, is_trivial_function, looks_like_code, merge_consecutive,
    strip_markers, CleanConfig, CommentKind, RawComment, TRIVIAL_NAMES,
};
pub use extract::{extract_functions, ExtractedFunction};
pub use names::{normalize_name, split_identifier};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Java,
    Go,
    Javascript,
    Ruby,
    Php,
}

impl Language {
    pub const ALL: [Language; 6] = [
        Language::Python,
        Language::Java,
        Language::Go,
        Language::Javascript,
        Language::Ruby,
        Language::Php,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::Python => "python",
            Language::Java => "java",
            Language::Go => "go",
            Language::Javascript => "javascript",
            Language::Ruby => "ruby",
            Language::Php => "php",
        }
    }

    pub fn from_extension(ext: &str) -> Option<Language> {
        Some(match ext {
            "py" => Language::Python,
            "java" => Language::Java,
            "go" => Language::Go,
            "js" | "mjs" | "cjs" | "jsx" => Language::Javascript,
            "rb" => Language::Ruby,
            "php" => Language::Php,
            _ => return None,
        })
    }

    /// Parses a comma-separated list such as `python,java`.
    pub fn parse_set(csv: &str) -> Result<BTreeSet<Language>> {
        csv.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Language::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("js") && *l == Language::Javascript))
            .ok_or_else(|| Error::UnsupportedLanguage(s.to_string()))
    }
}

/// One parsed function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub id: String,
    pub language: Language,
    pub name: String,
    pub name_normalized: String,
    pub doc: Option<String>,
    pub comments: Vec<String>,
    pub code_tokens: Vec<String>,
    pub source_path: String,
    pub line_span: (usize, usize),
}

impl FunctionRecord {
    /// Documentation if present and non-blank.
    pub fn doc_text(&self) -> Option<&str> {
        self.doc.as_deref().filter(|d| !d.trim().is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub records: Vec<FunctionRecord>,
    pub warnings: Vec<ParseWarning>,
}

/// Builds records for one file. `rel_path` becomes part of every id.
pub fn parse_source(source: &str, lang: Language, rel_path: &str) -> Vec<FunctionRecord> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    extract_functions(source, lang)
        .into_iter()
        .filter(|f| !f.code_tokens.is_empty())
        .map(|f| {
            let n = seen.entry(f.name.clone()).or_default();
            *n += 1;
            let id = if *n == 1 {
                format!("{rel_path}::{}", f.name)
            } else {
                format!("{rel_path}::{}#{n}", f.name)
            };
            FunctionRecord {
                id,
                language: lang,
                name_normalized: normalize_name(&f.name),
                name: f.name,
                doc: f.doc,
                comments: clean_comments(&f.comments),
                code_tokens: f.code_tokens,
                source_path: rel_path.to_string(),
                line_span: (f.start_line, f.end_line),
            }
        })
        .collect()
}

/// Walks `root` and parses every file whose extension maps to one of `languages`.
///
/// Output is sorted by relative path, then start line. Files that cannot be
/// read or are not UTF-8 are skipped and reported in `warnings`.
pub fn parse_corpus(root: &Path, languages: &BTreeSet<Language>) -> Result<ParsedCorpus> {
    if languages.is_empty() {
        return Err(Error::InvalidConfig("no languages requested".into()));
    }
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus root is not a directory"),
        ));
    }

    let mut files: Vec<(String, PathBuf, Language)> = Vec::new();
    let mut warnings = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        let entry = match entry {
            Ok(e) => e,
            Err(err) => {
                warnings.push(ParseWarning {
                    path: err.path().map(|p| p.display().to_string()).unwrap_or_default(),
                    message: err.to_string(),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let Some(lang) = path
            .extension()
            .and_then(|e| e.to_str())
            .and_then(Language::from_extension)
            .filter(|l| languages.contains(l))
        else {
            continue;
        };
        let rel = path
            .strip_prefix(root)
            .unwrap_or(path)
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        files.push((rel, path.to_path_buf(), lang));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));

    let parsed: Vec<std::result::Result<Vec<FunctionRecord>, ParseWarning>> = files
        .par_iter()
        .map(|(rel, path, lang)| match fs::read_to_string(path) {
            Ok(src) => Ok(parse_source(&src, *lang, rel)),
            Err(err) => Err(ParseWarning {
                path: rel.clone(),
                message: err.to_string(),
            }),
        })
        .collect();

    let mut records = Vec::new();
    for result in parsed {
        match result {
            Ok(recs) => records.extend(recs),
            Err(w) => {
                log::warn!("skipping {}: {}", w.path, w.message);
                warnings.push(w);
            }
        }
    }
    records.sort_by(|a, b| {
        a.source_path
            .cmp(&b.source_path)
            .then(a.line_span.0.cmp(&b.line_span.0))
            .then(a.id.cmp(&b.id))
    });
    Ok(ParsedCorpus { records, warnings })
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| Error::json(path.display().to_string(), e))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{}:{}", path.display(), n + 1), e))?;
        items.push(item);
    }
    Ok(items)
}
