//! Finds function definitions in a token stream and splits each into
//! name, documentation, in-line comments and pure code tokens.

use super::clean::{strip_markers, CommentKind, RawComment};
use super::lexer::{lex, TokKind, Token};
use super::Language;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedFunction {
    pub name: String,
    pub start_line: usize,
    pub end_line: usize,
    pub doc: Option<String>,
    pub comments: Vec<RawComment>,
    pub code_tokens: Vec<String>,
}

const C_KEYWORDS: &[&str] = &[
    "if", "for", "while", "switch", "catch", "return", "new", "else", "do", "try", "synchronized",
    "with", "function", "throw", "typeof", "sizeof", "super", "this", "foreach", "elseif", "match",
    "fn", "await", "yield", "delete", "void", "case",
];

pub fn extract_functions(source: &str, lang: Language) -> Vec<ExtractedFunction> {
    let all = lex(source, lang);
    let (comments, code): (Vec<Token>, Vec<Token>) = all.into_iter().partition(Token::is_comment);
    let spans = match lang {
        Language::Python => python_spans(&code),
        Language::Ruby => ruby_spans(&code),
        Language::Java | Language::Javascript | Language::Go | Language::Php => {
            brace_spans(&code, &comments, lang)
        }
    };
    spans
        .into_iter()
        .map(|span| assemble(span, &code, &comments, lang))
        .collect()
}

/// Token-index span of one function within the code-token stream.
struct Span {
    name: String,
    /// First token of the declaration (modifiers, `def`, `func`...).
    decl: usize,
    /// Last token of the body, inclusive.
    last: usize,
    /// Index of a docstring token inside the body (Python only).
    docstring: Option<usize>,
}

fn matching(code: &[Token], open_idx: usize, open: &str, close: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, tok) in code.iter().enumerate().skip(open_idx) {
        if tok.kind != TokKind::Punct {
            continue;
        }
        if tok.is(open) {
            depth += 1;
        } else if tok.is(close) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

fn is_name(tok: &Token) -> bool {
    tok.kind == TokKind::Ident && !C_KEYWORDS.contains(&tok.text.as_str())
}

fn brace_spans(code: &[Token], comments: &[Token], lang: Language) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < code.len() {
        match detect_brace_function(code, i, lang) {
            Some((name, body_open)) => {
                let Some(last) = matching(code, body_open, "{", "}") else {
                    break;
                };
                spans.push(Span {
                    name,
                    decl: declaration_start(code, comments, i),
                    last,
                    docstring: None,
                });
                i = last + 1;
            }
            None => i += 1,
        }
    }
    spans
}

/// Walks back from a header token to just after the previous `;`, `{` or `}`,
/// stopping early at a comment so that documentation stays outside the span.
fn declaration_start(code: &[Token], comments: &[Token], from: usize) -> usize {
    let mut start = from;
    while start > 0 {
        let prev = &code[start - 1];
        if prev.kind == TokKind::Punct && (prev.is(";") || prev.is("{") || prev.is("}")) {
            break;
        }
        let cur = &code[start];
        let comment_between = comments.iter().any(|c| {
            (c.line, c.col) < (cur.line, cur.col)
                && (c.line > prev.end_line || (c.line == prev.end_line && c.col > prev.col))
        });
        if comment_between {
            break;
        }
        start -= 1;
    }
    start
}

/// After a closing paren, skips return types or `throws` lists up to the body brace.
fn body_brace_after(code: &[Token], close_paren: usize, lang: Language) -> Option<usize> {
    let mut j = close_paren + 1;
    while let Some(tok) = code.get(j) {
        if tok.kind == TokKind::Punct {
            match tok.text.as_str() {
                "{" => return Some(j),
                ";" | "}" | "=" | "=>" => return None,
                "(" if lang == Language::Go => j = matching(code, j, "(", ")")?,
                "(" | ")" => return None,
                _ => {}
            }
        } else if lang == Language::Javascript {
            return None;
        }
        j += 1;
    }
    None
}

fn detect_brace_function(code: &[Token], i: usize, lang: Language) -> Option<(String, usize)> {
    let tok = &code[i];
    let at = |k: usize| code.get(k);
    let punct = |k: usize, p: &str| at(k).is_some_and(|t| t.kind == TokKind::Punct && t.is(p));

    match lang {
        Language::Go if tok.is("func") => {
            let mut j = i + 1;
            if punct(j, "(") {
                j = matching(code, j, "(", ")")? + 1;
            }
            let name = at(j).filter(|t| t.kind == TokKind::Ident)?;
            if !punct(j + 1, "(") {
                return None;
            }
            let close = matching(code, j + 1, "(", ")")?;
            Some((name.text.clone(), body_brace_after(code, close, lang)?))
        }
        Language::Php | Language::Javascript if tok.is("function") => {
            let mut j = i + 1;
            if punct(j, "*") || punct(j, "&") {
                j += 1;
            }
            let name = at(j).filter(|t| t.kind == TokKind::Ident)?;
            if !punct(j + 1, "(") {
                return None;
            }
            let close = matching(code, j + 1, "(", ")")?;
            Some((name.text.clone(), body_brace_after(code, close, lang)?))
        }
        Language::Javascript if is_name(tok) && (punct(i + 1, "=") || punct(i + 1, ":")) => {
            // name = function (...) {  |  name = (...) => {  |  name = x => {
            let mut j = i + 2;
            if at(j).is_some_and(|t| t.is("async")) {
                j += 1;
            }
            if at(j).is_some_and(|t| t.is("function")) {
                j += 1;
                if !punct(j, "(") {
                    return None;
                }
                let close = matching(code, j, "(", ")")?;
                return Some((tok.text.clone(), body_brace_after(code, close, lang)?));
            }
            let after_params = if punct(j, "(") {
                matching(code, j, "(", ")")? + 1
            } else if at(j).is_some_and(|t| t.kind == TokKind::Ident) {
                j + 1
            } else {
                return None;
            };
            (punct(after_params, "=>") && punct(after_params + 1, "{"))
                .then(|| (tok.text.clone(), after_params + 1))
        }
        Language::Java | Language::Javascript if is_name(tok) && punct(i + 1, "(") => {
            let prev = i.checked_sub(1).map(|p| &code[p]);
            if prev.is_some_and(|p| p.is(".") || p.is("new") || p.is("function") || p.is("=")) {
                return None;
            }
            if lang == Language::Java && prev.is_some_and(|p| p.kind == TokKind::Punct && !p.is(">") && !p.is("]") && !p.is("{") && !p.is("}") && !p.is(";")) {
                return None;
            }
            let close = matching(code, i + 1, "(", ")")?;
            Some((tok.text.clone(), body_brace_after(code, close, lang)?))
        }
        _ => None,
    }
}

fn first_on_line(code: &[Token], i: usize) -> bool {
    i == 0 || code[i - 1].end_line < code[i].line
}

fn python_spans(code: &[Token]) -> Vec<Span> {
    let mut spans = Vec::new();
    for (i, tok) in code.iter().enumerate() {
        if !tok.is("def") || tok.kind != TokKind::Ident {
            continue;
        }
        let decl = if i > 0 && code[i - 1].is("async") && first_on_line(code, i - 1) {
            i - 1
        } else if first_on_line(code, i) {
            i
        } else {
            continue;
        };
        let Some(name) = code.get(i + 1).filter(|t| t.kind == TokKind::Ident) else {
            continue;
        };
        let indent = code[decl].col;
        // The header ends at the first `:` outside parentheses.
        let mut depth = 0i32;
        let mut colon = None;
        for (j, t) in code.iter().enumerate().skip(i + 2) {
            if t.kind != TokKind::Punct {
                continue;
            }
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ":" if depth == 0 => {
                    colon = Some(j);
                    break;
                }
                _ => {}
            }
        }
        let Some(colon) = colon else { continue };
        let mut last = colon;
        for (j, t) in code.iter().enumerate().skip(colon + 1) {
            if t.line > code[colon].line && first_on_line(code, j) && t.col <= indent {
                break;
            }
            last = j;
        }
        let docstring = code
            .get(colon + 1)
            .filter(|t| t.kind == TokKind::Str && colon < last)
            .filter(|_| code.get(colon + 2).is_none_or(|n| n.line > code[colon + 1].end_line || colon + 1 == last))
            .map(|_| colon + 1);
        spans.push(Span {
            name: name.text.clone(),
            decl,
            last,
            docstring,
        });
    }
    spans
}

const RUBY_OPENERS: &[&str] = &["def", "class", "module", "do", "begin", "case"];
const RUBY_STATEMENT_OPENERS: &[&str] = &["if", "unless", "while", "until", "for"];

fn ruby_spans(code: &[Token]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < code.len() {
        let tok = &code[i];
        if !(tok.kind == TokKind::Ident && tok.is("def")) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        // def self.name / def Klass.name
        if code.get(j + 1).is_some_and(|t| t.is(".")) {
            j += 2;
        }
        let Some(name) = code.get(j).filter(|t| t.kind == TokKind::Ident || t.kind == TokKind::Punct) else {
            break;
        };
        let mut depth = 0usize;
        let mut last = None;
        for (k, t) in code.iter().enumerate().skip(i) {
            if t.kind != TokKind::Ident {
                continue;
            }
            let opens = RUBY_OPENERS.contains(&t.text.as_str())
                || (RUBY_STATEMENT_OPENERS.contains(&t.text.as_str())
                    && (first_on_line(code, k) || code[k - 1].is("=") || code[k - 1].is("(")));
            if opens && !(k > 0 && code[k - 1].is(".")) {
                depth += 1;
            } else if t.is("end") && !(k > 0 && code[k - 1].is(".")) {
                depth -= 1;
                if depth == 0 {
                    last = Some(k);
                    break;
                }
            }
        }
        let Some(last) = last else { break };
        spans.push(Span {
            name: name.text.clone(),
            decl: i,
            last,
            docstring: None,
        });
        i = last + 1;
    }
    spans
}

fn clean_doc(text: &str) -> Option<String> {
    let mut paragraph = Vec::new();
    for line in text.lines() {
        let line = line.trim().trim_start_matches('*').trim();
        if line.starts_with('@') {
            break;
        }
        if line.is_empty() {
            if paragraph.is_empty() {
                continue;
            }
            break;
        }
        paragraph.push(line);
    }
    let doc = paragraph.join(" ").split_whitespace().collect::<Vec<_>>().join(" ");
    (!doc.is_empty()).then_some(doc)
}

fn strip_string_quotes(lit: &str) -> &str {
    let body = lit.trim_start_matches(|c: char| "rbufRBUF".contains(c));
    for q in ["\"\"\"", "'''", "\"", "'"] {
        if let Some(inner) = body.strip_prefix(q).and_then(|b| b.strip_suffix(q)) {
            return inner;
        }
    }
    body
}

fn comment_body(tok: &Token) -> String {
    if tok.text.starts_with("=begin") {
        let inner = tok.text.trim_start_matches("=begin").trim_end_matches("=end");
        return inner.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join("\n");
    }
    match tok.kind {
        TokKind::BlockComment => {
            let inner = tok.text.trim_start_matches("/**").trim_start_matches("/*").trim_end_matches("*/");
            inner
                .lines()
                .map(|l| l.trim().trim_start_matches('*').trim())
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join("\n")
        }
        _ => strip_markers(&tok.text),
    }
}

/// Documentation that sits directly above the declaration.
fn preceding_doc(decl: &Token, prev_code_line: usize, comments: &[Token], lang: Language) -> Option<String> {
    let above: Vec<&Token> = comments
        .iter()
        .filter(|c| c.line > prev_code_line && c.end_line <= decl.line)
        .filter(|c| c.end_line < decl.line || c.col < decl.col)
        .collect();
    match lang {
        Language::Go | Language::Ruby => {
            // Contiguous line comments ending right above the declaration.
            let mut block: Vec<&Token> = Vec::new();
            let mut expect = decl.line;
            for c in above.iter().rev() {
                if c.kind != TokKind::LineComment || c.end_line + 1 != expect {
                    break;
                }
                expect = c.line;
                block.push(c);
            }
            block.reverse();
            let text = block.iter().map(|c| strip_markers(&c.text)).collect::<Vec<_>>().join("\n");
            clean_doc(&text)
        }
        _ => above
            .iter()
            .rev()
            .find(|c| c.kind == TokKind::BlockComment && c.text.starts_with("/**"))
            .and_then(|c| clean_doc(&comment_body(c))),
    }
}

fn assemble(span: Span, code: &[Token], comments: &[Token], lang: Language) -> ExtractedFunction {
    let decl = &code[span.decl];
    let start_line = decl.line;
    let end_line = code[span.last].end_line;
    let prev_code_line = span.decl.checked_sub(1).map_or(0, |p| code[p].end_line);

    let doc = match span.docstring {
        Some(d) => clean_doc(strip_string_quotes(&code[d].text)),
        None => preceding_doc(decl, prev_code_line, comments, lang),
    };

    let first_col_on_start = decl.col;
    let inline: Vec<RawComment> = comments
        .iter()
        .filter(|c| c.line >= start_line && c.line <= end_line)
        .filter(|c| !(c.line == start_line && c.col < first_col_on_start))
        .map(|c| RawComment {
            text: comment_body(c),
            line: c.line,
            kind: if c.kind == TokKind::BlockComment {
                CommentKind::Block
            } else {
                CommentKind::Line
            },
        })
        .filter(|c| !c.text.is_empty())
        .collect();

    let code_tokens = (span.decl..=span.last)
        .filter(|&i| Some(i) != span.docstring)
        .map(|i| code[i].text.clone())
        .collect();

    ExtractedFunction {
        name: span.name,
        start_line,
        end_line,
        doc,
        comments: inline,
        code_tokens,
    }
}
