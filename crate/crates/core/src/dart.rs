//! Lexical scanner for Dart sources.
//!
//! Only what the analysis needs is recognised: identifiers, string literals
//! (with escape and interpolation handling), punctuation, and the
//! `import`/`export`/`part` directives built from them. Comments, including
//! nested block comments, are skipped.

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    /// A string literal. `interpolated` is set when the literal contains
    /// `$name` or `${...}`; `value` then holds only the literal parts.
    Str {
        value: String,
        interpolated: bool,
    },
    Number,
    Punct(char),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
}

impl Token {
    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.kind == TokenKind::Punct(c)
    }

    /// Literal value of a non-interpolated string token.
    pub fn plain_str(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::Str { value, interpolated: false } => Some(value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectiveKind {
    Import,
    Export,
    Part,
    PartOf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub kind: DirectiveKind,
    pub uri: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LexedFile {
    pub tokens: Vec<Token>,
    pub directives: Vec<Directive>,
    /// Lexical problems such as unterminated literals, with line numbers.
    pub problems: Vec<(usize, String)>,
}

pub fn lex(src: &str) -> LexedFile {
    let mut lx = Lexer { chars: src.chars().collect(), pos: 0, line: 1, problems: Vec::new() };
    let mut tokens = Vec::new();
    while let Some(t) = lx.next_token() {
        tokens.push(t);
    }
    let directives = directives(&tokens);
    LexedFile { tokens, directives, problems: lx.problems }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    problems: Vec<(usize, String)>,
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let start = self.line;
                    self.bump();
                    self.bump();
                    let mut depth = 1;
                    while depth > 0 {
                        match (self.peek(0), self.peek(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                depth -= 1;
                            }
                            (Some('/'), Some('*')) => {
                                self.bump();
                                self.bump();
                                depth += 1;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => {
                                self.problems.push((start, "unterminated block comment".into()));
                                return;
                            }
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn next_token(&mut self) -> Option<Token> {
        self.skip_trivia();
        let line = self.line;
        let c = self.peek(0)?;
        let kind = if c == 'r' && matches!(self.peek(1), Some('\'' | '"')) {
            self.bump();
            self.string(true)
        } else if c == '\'' || c == '"' {
            self.string(false)
        } else if c.is_alphabetic() || c == '_' || c == '$' {
            let mut s = String::new();
            while let Some(c) = self.peek(0) {
                if c.is_alphanumeric() || c == '_' || c == '$' {
                    s.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            TokenKind::Ident(s)
        } else if c.is_ascii_digit() {
            while let Some(c) = self.peek(0) {
                if c.is_ascii_alphanumeric() || c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit()) {
                    self.bump();
                } else {
                    break;
                }
            }
            TokenKind::Number
        } else {
            self.bump();
            TokenKind::Punct(c)
        };
        Some(Token { kind, line })
    }

    fn string(&mut self, raw: bool) -> TokenKind {
        let start_line = self.line;
        let quote = self.bump().expect("quote");
        let triple = self.peek(0) == Some(quote) && self.peek(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let mut value = String::new();
        let mut interpolated = false;
        loop {
            let Some(c) = self.peek(0) else {
                self.problems.push((start_line, "unterminated string literal".into()));
                break;
            };
            if c == quote {
                if !triple {
                    self.bump();
                    break;
                }
                if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                    self.bump();
                    self.bump();
                    self.bump();
                    break;
                }
            }
            if c == '\n' && !triple {
                self.problems.push((start_line, "unterminated string literal".into()));
                break;
            }
            if c == '\\' && !raw {
                self.bump();
                match self.bump() {
                    Some('n') => value.push('\n'),
                    Some('t') => value.push('\t'),
                    Some('r') => value.push('\r'),
                    Some(other) => value.push(other),
                    None => {}
                }
                continue;
            }
            if c == '$' && !raw {
                match self.peek(1) {
                    Some('{') => {
                        interpolated = true;
                        self.bump();
                        self.bump();
                        let mut depth = 1usize;
                        while depth > 0 {
                            match self.next_token() {
                                Some(t) if t.is_punct('{') => depth += 1,
                                Some(t) if t.is_punct('}') => depth -= 1,
                                Some(_) => {}
                                None => break,
                            }
                        }
                        continue;
                    }
                    Some(n) if n.is_alphabetic() || n == '_' => {
                        interpolated = true;
                        self.bump();
                        while self.peek(0).is_some_and(|c| c.is_alphanumeric() || c == '_') {
                            self.bump();
                        }
                        continue;
                    }
                    _ => {}
                }
            }
            value.push(c);
            self.bump();
        }
        TokenKind::Str { value, interpolated }
    }
}

// A directive is a top-level keyword directly followed by a URI string and
// terminated by `;`. Conditional-import alternatives (`if (...) 'uri'`) are
// collected as well; strings inside the condition parentheses are not.
fn directives(tokens: &[Token]) -> Vec<Directive> {
    let mut out = Vec::new();
    let mut brace_depth = 0usize;
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.is_punct('{') {
            brace_depth += 1;
        } else if t.is_punct('}') {
            brace_depth = brace_depth.saturating_sub(1);
        }
        if brace_depth > 0 {
            i += 1;
            continue;
        }
        let (kind, uri_at) = match t.ident() {
            Some("import") => (DirectiveKind::Import, i + 1),
            Some("export") => (DirectiveKind::Export, i + 1),
            Some("part") if tokens.get(i + 1).and_then(Token::ident) == Some("of") => (DirectiveKind::PartOf, i + 2),
            Some("part") => (DirectiveKind::Part, i + 1),
            _ => {
                i += 1;
                continue;
            }
        };
        let Some(first) = tokens.get(uri_at).and_then(Token::plain_str) else {
            i += 1;
            continue;
        };
        out.push(Directive { kind, uri: first.to_string(), line: t.line });
        let mut j = uri_at + 1;
        let mut paren = 0usize;
        while j < tokens.len() && !(paren == 0 && tokens[j].is_punct(';')) {
            let tj = &tokens[j];
            if tj.is_punct('(') {
                paren += 1;
            } else if tj.is_punct(')') {
                paren = paren.saturating_sub(1);
            } else if paren == 0 {
                if let Some(s) = tj.plain_str() {
                    out.push(Directive { kind, uri: s.to_string(), line: tj.line });
                }
            }
            j += 1;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uris(src: &str) -> Vec<(DirectiveKind, String)> {
        lex(src).directives.into_iter().map(|d| (d.kind, d.uri)).collect()
    }

    #[test]
    fn basic_directives() {
        let src = r#"
            library foo;
            import 'package:flutter/material.dart';
            import "widgets/a.dart" as a show A;
            export 'b.dart';
            part 'c.dart';
            part of 'lib.dart';
        "#;
        assert_eq!(
            uris(src),
            vec![
                (DirectiveKind::Import, "package:flutter/material.dart".into()),
                (DirectiveKind::Import, "widgets/a.dart".into()),
                (DirectiveKind::Export, "b.dart".into()),
                (DirectiveKind::Part, "c.dart".into()),
                (DirectiveKind::PartOf, "lib.dart".into()),
            ]
        );
    }

    #[test]
    fn comments_and_strings_hide_directives() {
        let src = r#"
            // import 'commented.dart';
            /* import 'block.dart'; /* nested */ import 'still_comment.dart'; */
            const s = "import 'in_string.dart';";
            const t = '''
            import 'triple.dart';
            ''';
            import 'real.dart';
        "#;
        assert_eq!(uris(src), vec![(DirectiveKind::Import, "real.dart".into())]);
    }

    #[test]
    fn conditional_import() {
        let src = "import 'stub.dart' if (dart.library.io) 'io.dart' if (dart.library.html) 'web.dart';";
        let got: Vec<String> = uris(src).into_iter().map(|(_, u)| u).collect();
        assert_eq!(got, vec!["stub.dart", "io.dart", "web.dart"]);
    }

    #[test]
    fn interpolation_and_escapes() {
        let toks = lex(r#"a('x_${b("y")}_z'); c("p\'q"); d(r'\n'); e('$name');"#).tokens;
        let strs: Vec<_> = toks
            .iter()
            .filter_map(|t| match &t.kind {
                TokenKind::Str { value, interpolated } => Some((value.clone(), *interpolated)),
                _ => None,
            })
            .collect();
        assert_eq!(
            strs,
            vec![
                ("x__z".to_string(), true),
                ("p'q".to_string(), false),
                ("\\n".to_string(), false),
                ("".to_string(), true),
            ]
        );
    }

    #[test]
    fn line_numbers() {
        let f = lex("\n\nimport 'a.dart';\n/* \n */ ValueKey('k')");
        assert_eq!(f.directives[0].line, 3);
        let k = f.tokens.iter().find(|t| t.plain_str() == Some("k")).unwrap();
        assert_eq!(k.line, 5);
    }

    #[test]
    fn unterminated_literal_reported() {
        let f = lex("var a = 'oops\nvar b = 1;");
        assert_eq!(f.problems.len(), 1);
        assert_eq!(f.problems[0].0, 1);
    }

    #[test]
    fn nested_braces_do_not_yield_directives() {
        let f = lex("class A { void f() { import('x.dart'); } }");
        assert!(f.directives.is_empty());
    }
}
