//! A small per-language lexer: strings, comments, identifiers, numbers, punctuation.
//!
//! It does not build a syntax tree. Function boundaries are found on top of
//! the token stream in [`super::extract`].

use super::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Number,
    Str,
    Punct,
    LineComment,
    BlockComment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    /// 1-based line of the first character.
    pub line: usize,
    /// 1-based line of the last character.
    pub end_line: usize,
    /// 0-based column (in chars) of the first character.
    pub col: usize,
}

impl Token {
    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokKind::LineComment | TokKind::BlockComment)
    }

    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }
}

struct Spec {
    line_comments: &'static [&'static str],
    block_comment: Option<(&'static str, &'static str)>,
    quotes: &'static [char],
    triple_quotes: bool,
    string_prefixes: bool,
    ident_extra: &'static [char],
    ruby_begin_end: bool,
}

fn spec(lang: Language) -> Spec {
    match lang {
        Language::Python => Spec {
            line_comments: &["#"],
            block_comment: None,
            quotes: &['"', '\''],
            triple_quotes: true,
            string_prefixes: true,
            ident_extra: &[],
            ruby_begin_end: false,
        },
        Language::Java => Spec {
            line_comments: &["//"],
            block_comment: Some(("/*", "*/")),
            quotes: &['"', '\''],
            triple_quotes: true,
            string_prefixes: false,
            ident_extra: &['$'],
            ruby_begin_end: false,
        },
        Language::Javascript => Spec {
            line_comments: &["//"],
            block_comment: Some(("/*", "*/")),
            quotes: &['"', '\'', '`'],
            triple_quotes: false,
            string_prefixes: false,
            ident_extra: &['$'],
            ruby_begin_end: false,
        },
        Language::Go => Spec {
            line_comments: &["//"],
            block_comment: Some(("/*", "*/")),
            quotes: &['"', '\'', '`'],
            triple_quotes: false,
            string_prefixes: false,
            ident_extra: &[],
            ruby_begin_end: false,
        },
        Language::Php => Spec {
            line_comments: &["//", "#"],
            block_comment: Some(("/*", "*/")),
            quotes: &['"', '\''],
            triple_quotes: false,
            string_prefixes: false,
            ident_extra: &['$'],
            ruby_begin_end: false,
        },
        Language::Ruby => Spec {
            line_comments: &["#"],
            block_comment: None,
            quotes: &['"', '\''],
            triple_quotes: false,
            string_prefixes: false,
            ident_extra: &[],
            ruby_begin_end: true,
        },
    }
}

const OPERATORS: &[&str] = &[
    "===", "!==", "**=", "<<=", ">>=", "...", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "->", "=>", "::", "<<", ">>", "**", ":=",
];

struct Cursor<'a> {
    chars: &'a [char],
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn at_line_start(&self) -> bool {
        self.chars[..self.pos]
            .iter()
            .rev()
            .take_while(|&&c| c != '\n')
            .all(|c| c.is_whitespace())
    }
}

fn is_ident_start(c: char, spec: &Spec) -> bool {
    c.is_alphabetic() || c == '_' || spec.ident_extra.contains(&c)
}

fn is_ident_char(c: char, spec: &Spec) -> bool {
    c.is_alphanumeric() || c == '_' || spec.ident_extra.contains(&c)
}

/// Tokenizes `source` for `lang`. Unterminated strings and comments run to end of input.
pub fn lex(source: &str, lang: Language) -> Vec<Token> {
    let spec = spec(lang);
    let chars: Vec<char> = source.chars().collect();
    let mut cur = Cursor {
        chars: &chars,
        pos: 0,
        line: 1,
        col: 0,
    };
    let mut out = Vec::new();

    while let Some(c) = cur.peek(0) {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let kind;

        if spec.ruby_begin_end && cur.at_line_start() && cur.starts_with("=begin") {
            while cur.peek(0).is_some() && !(cur.at_line_start() && cur.starts_with("=end")) {
                cur.bump();
            }
            cur.bump_n(4);
            kind = TokKind::BlockComment;
        } else if let Some((open, close)) = spec.block_comment.filter(|(o, _)| cur.starts_with(o)) {
            cur.bump_n(open.len());
            while cur.peek(0).is_some() && !cur.starts_with(close) {
                cur.bump();
            }
            cur.bump_n(close.len());
            kind = TokKind::BlockComment;
        } else if spec.line_comments.iter().any(|m| cur.starts_with(m)) {
            while cur.peek(0).is_some_and(|c| c != '\n') {
                cur.bump();
            }
            kind = TokKind::LineComment;
        } else if let Some(skip) = string_start(&cur, &spec) {
            lex_string(&mut cur, &spec, skip);
            kind = TokKind::Str;
        } else if is_ident_start(c, &spec) {
            while cur.peek(0).is_some_and(|c| is_ident_char(c, &spec)) {
                cur.bump();
            }
            if lang == Language::Ruby
                && matches!(cur.peek(0), Some('?' | '!'))
                && cur.peek(1) != Some('=')
            {
                cur.bump();
            }
            kind = TokKind::Ident;
        } else if c.is_ascii_digit() {
            while cur
                .peek(0)
                .is_some_and(|c| c.is_alphanumeric() || c == '_' || (c == '.' && cur.peek(1).is_some_and(|n| n.is_ascii_digit())))
            {
                cur.bump();
            }
            kind = TokKind::Number;
        } else {
            let op = OPERATORS.iter().find(|op| cur.starts_with(op));
            cur.bump_n(op.map_or(1, |op| op.len()));
            kind = TokKind::Punct;
        }

        out.push(Token {
            kind,
            text: chars[start..cur.pos].iter().collect(),
            line,
            end_line: if cur.pos > start && chars[cur.pos - 1] == '\n' {
                cur.line - 1
            } else {
                cur.line
            },
            col,
        });
    }
    out
}

/// Returns the length of a string prefix (e.g. `rb` in `rb"..."`) if a string starts here.
fn string_start(cur: &Cursor<'_>, spec: &Spec) -> Option<usize> {
    let c = cur.peek(0)?;
    if spec.quotes.contains(&c) {
        return Some(0);
    }
    if spec.string_prefixes {
        for len in 1..=2 {
            let prefix: String = (0..len).filter_map(|i| cur.peek(i)).collect();
            if prefix.len() == len
                && prefix.chars().all(|p| "rbufRBUF".contains(p))
                && cur.peek(len).is_some_and(|q| spec.quotes.contains(&q))
            {
                return Some(len);
            }
        }
    }
    None
}

fn lex_string(cur: &mut Cursor<'_>, spec: &Spec, prefix: usize) {
    cur.bump_n(prefix);
    let quote = cur.peek(0).expect("string_start saw a quote");
    let triple: String = std::iter::repeat_n(quote, 3).collect();
    if spec.triple_quotes && quote != '`' && cur.starts_with(&triple) {
        cur.bump_n(3);
        while cur.peek(0).is_some() && !cur.starts_with(&triple) {
            if cur.peek(0) == Some('\\') {
                cur.bump();
            }
            cur.bump();
        }
        cur.bump_n(3);
        return;
    }
    cur.bump();
    // Backtick strings may span lines; ordinary strings stop at a newline.
    let multiline = quote == '`';
    while let Some(c) = cur.peek(0) {
        if c == '\\' {
            cur.bump_n(2);
            continue;
        }
        if c == quote {
            cur.bump();
            return;
        }
        if c == '\n' && !multiline {
            return;
        }
        cur.bump();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str, lang: Language) -> Vec<(TokKind, String)> {
        lex(src, lang).into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn python_strings_and_comments() {
        let toks = kinds("x = r'a#b'  # trailing\n\"\"\"doc\n# not comment\"\"\"", Language::Python);
        assert_eq!(toks[2], (TokKind::Str, "r'a#b'".into()));
        assert_eq!(toks[3], (TokKind::LineComment, "# trailing".into()));
        assert_eq!(toks[4].0, TokKind::Str);
        assert!(toks[4].1.contains("# not comment"));
        assert_eq!(toks.len(), 5);
    }

    #[test]
    fn java_block_comment_lines() {
        let toks = lex("/** a\n * b\n */\nint x;", Language::Java);
        assert_eq!(toks[0].kind, TokKind::BlockComment);
        assert_eq!((toks[0].line, toks[0].end_line), (1, 3));
        assert_eq!(toks[1].line, 4);
        assert_eq!(toks[1].text, "int");
    }

    #[test]
    fn escaped_quote_and_operators() {
        let toks = kinds(r#"s = "a\"b"; if (a == b) {}"#, Language::Javascript);
        assert_eq!(toks[2], (TokKind::Str, r#""a\"b""#.into()));
        assert!(toks.iter().any(|t| t.1 == "=="));
    }

    #[test]
    fn ruby_predicate_and_begin_end() {
        let toks = kinds("=begin\nnotes\n=end\ndef empty?\nend", Language::Ruby);
        assert_eq!(toks[0].0, TokKind::BlockComment);
        assert_eq!(toks[2], (TokKind::Ident, "empty?".into()));
    }

    #[test]
    fn php_hash_comment_and_vars() {
        let toks = kinds("$total = 1; # note", Language::Php);
        assert_eq!(toks[0], (TokKind::Ident, "$total".into()));
        assert_eq!(toks.last().unwrap().0, TokKind::LineComment);
    }

    #[test]
    fn columns() {
        let toks = lex("def f():\n    return 1\n", Language::Python);
        let ret = toks.iter().find(|t| t.text == "return").unwrap();
        assert_eq!((ret.line, ret.col), (2, 4));
    }
}
