use super::diagnostic::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Num(_) => "number".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, u32, u32) {
        (self.pos, self.line, self.col)
    }

    fn span_from(&self, (start, line, col): (usize, u32, u32)) -> Span {
        Span { start, end: self.pos, line, col }
    }
}

/// Splits source text into tokens. Lexical errors are reported and the
/// offending characters skipped, so lexing always reaches the end.
pub(crate) fn lex(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor { src, pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        let start = cur.mark();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() || (c == '.' && cur.peek2().is_some_and(|d| d.is_ascii_digit())) {
            match lex_number(&mut cur) {
                Ok(v) => Tok::Num(v),
                Err(msg) => {
                    diags.push(Diagnostic::syntax(cur.span_from(start), msg));
                    continue;
                }
            }
        } else if c == '"' {
            match lex_string(&mut cur) {
                Ok(s) => Tok::Str(s),
                Err(msg) => {
                    diags.push(Diagnostic::syntax(cur.span_from(start), msg));
                    continue;
                }
            }
        } else {
            cur.bump();
            match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '=' => Tok::Eq,
                ':' if cur.peek() == Some('=') => {
                    cur.bump();
                    Tok::Assign
                }
                '<' if cur.peek() == Some('=') => {
                    cur.bump();
                    Tok::Le
                }
                '>' if cur.peek() == Some('=') => {
                    cur.bump();
                    Tok::Ge
                }
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                other => {
                    diags.push(Diagnostic::syntax(
                        cur.span_from(start),
                        format!("unexpected character `{other}`"),
                    ));
                    continue;
                }
            }
        };
        tokens.push(Token { tok, span: cur.span_from(start) });
    }
    let end = cur.mark();
    tokens.push(Token { tok: Tok::Eof, span: cur.span_from(end) });
    (tokens, diags)
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<f64, String> {
    let start = cur.pos;
    let digits = |cur: &mut Cursor<'_>| {
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    };
    digits(cur);
    if cur.peek() == Some('.') {
        cur.bump();
        digits(cur);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let after = cur.peek2();
        let signed = matches!(after, Some('+' | '-'));
        let mut probe = cur.src[cur.pos..].chars().skip(if signed { 2 } else { 1 });
        if probe.next().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
            if signed {
                cur.bump();
            }
            digits(cur);
        }
    }
    let text = &cur.src[start..cur.pos];
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("number `{text}` is out of range")),
    }
}

fn lex_string(cur: &mut Cursor<'_>) -> Result<String, String> {
    cur.bump();
    let mut s = String::new();
    loop {
        match cur.bump() {
            None => return Err("unterminated string".into()),
            Some('\n') => return Err("line break inside string (use \\n)".into()),
            Some('"') => return Ok(s),
            Some('\\') => match cur.bump() {
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some(other) => return Err(format!("unknown escape `\\{other}`")),
                None => return Err("unterminated string".into()),
            },
            Some(c) => s.push(c),
        }
    }
}

/// Quotes `s` so that [`lex`] reads it back unchanged.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        let (t, d) = lex(src);
        assert!(d.is_empty(), "{d:?}");
        t.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_operators_and_comments() {
        assert_eq!(
            toks("score := last(M-1) >= 0.5 # tail\n;"),
            vec![
                Tok::Ident("score".into()),
                Tok::Assign,
                Tok::Ident("last".into()),
                Tok::LParen,
                Tok::Ident("M-1".into()),
                Tok::RParen,
                Tok::Ge,
                Tok::Num(0.5),
                Tok::Semi,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers_with_exponent() {
        assert_eq!(toks("1e3 2.5E-2 7"), vec![Tok::Num(1000.0), Tok::Num(0.025), Tok::Num(7.0), Tok::Eof]);
    }

    #[test]
    fn string_escapes_round_trip() {
        let raw = "a \"quoted\" \\ line\nnext\ttab";
        assert_eq!(toks(&quote(raw)), vec![Tok::Str(raw.into()), Tok::Eof]);
    }

    #[test]
    fn spans_track_lines() {
        let (t, _) = lex("a\n  b");
        assert_eq!((t[1].span.line, t[1].span.col), (2, 3));
    }

    #[test]
    fn reports_and_skips_bad_characters() {
        let (t, d) = lex("a @ b \"open");
        assert_eq!(d.len(), 2);
        assert_eq!(t.len(), 3);
    }
}
