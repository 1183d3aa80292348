//! Line-oriented tokenizer for `.scn` sources.
//!
//! Newlines are significant (one declaration per line); `#` starts a
//! comment running to end of line. The lexer never fails: unknown
//! characters become `Unknown` tokens the parser reports as syntax errors.

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Num(f64),
    Str(String),
    /// An unterminated string literal; carried so the parser can diagnose it.
    BadStr,
    Assign,  // =
    LParen,  // (
    RParen,  // )
    Comma,   // ,
    Plus,    // +
    Minus,   // -
    Star,    // *
    Slash,   // /
    Lt,      // <
    Le,      // <=
    Gt,      // >
    Ge,      // >=
    EqEq,    // ==
    Ne,      // !=
    Newline,
    Eof,
    Unknown(char),
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Num(n) => format!("number `{n}`"),
            TokenKind::Str(s) => format!("string {s:?}"),
            TokenKind::BadStr => "unterminated string".into(),
            TokenKind::Assign => "`=`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Lt => "`<`".into(),
            TokenKind::Le => "`<=`".into(),
            TokenKind::Gt => "`>`".into(),
            TokenKind::Ge => "`>=`".into(),
            TokenKind::EqEq => "`==`".into(),
            TokenKind::Ne => "`!=`".into(),
            TokenKind::Newline => "end of line".into(),
            TokenKind::Eof => "end of file".into(),
            TokenKind::Unknown(c) => format!("`{c}`"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    /// 1-based.
    pub line: u32,
    /// 1-based column of the token start.
    pub col: u32,
}

pub fn tokenize(source: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = source.chars().peekable();

    macro_rules! push {
        ($kind:expr, $c:expr) => {
            tokens.push(Token {
                kind: $kind,
                line,
                col: $c,
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let start_col = col;
        match c {
            '\n' => {
                chars.next();
                // Collapse repeated newlines; empty lines carry no tokens.
                if !matches!(tokens.last().map(|t| &t.kind), Some(TokenKind::Newline) | None) {
                    push!(TokenKind::Newline, start_col);
                }
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '"' => {
                chars.next();
                col += 1;
                let mut s = String::new();
                let mut closed = false;
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                    if c2 == '"' {
                        closed = true;
                        break;
                    }
                    if c2 == '\\' {
                        if let Some(&esc) = chars.peek() {
                            chars.next();
                            col += 1;
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                        }
                    } else {
                        s.push(c2);
                    }
                }
                if closed {
                    push!(TokenKind::Str(s), start_col);
                } else {
                    push!(TokenKind::BadStr, start_col);
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut s = String::new();
                while let Some(&c2) = chars.peek() {
                    if c2.is_ascii_digit() || c2 == '.' {
                        s.push(c2);
                        chars.next();
                        col += 1;
                    } else if (c2 == 'e' || c2 == 'E') && !s.is_empty() {
                        // Exponent; may be followed by a sign.
                        let mut clone = chars.clone();
                        clone.next();
                        match clone.peek() {
                            Some(&n) if n.is_ascii_digit() || n == '+' || n == '-' => {
                                s.push(c2);
                                chars.next();
                                col += 1;
                                if let Some(&sign) = chars.peek() {
                                    if sign == '+' || sign == '-' {
                                        s.push(sign);
                                        chars.next();
                                        col += 1;
                                    }
                                }
                            }
                            _ => break,
                        }
                    } else {
                        break;
                    }
                }
                match s.parse::<f64>() {
                    Ok(n) => push!(TokenKind::Num(n), start_col),
                    Err(_) => push!(TokenKind::Unknown('.'), start_col),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c2) = chars.peek() {
                    if c2.is_ascii_alphanumeric() || c2 == '_' {
                        s.push(c2);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(TokenKind::Ident(s), start_col);
            }
            _ => {
                chars.next();
                col += 1;
                let two = |chars: &mut std::iter::Peekable<std::str::Chars>, col: &mut u32| {
                    chars.next();
                    *col += 1;
                };
                let kind = match c {
                    '=' => {
                        if chars.peek() == Some(&'=') {
                            two(&mut chars, &mut col);
                            TokenKind::EqEq
                        } else {
                            TokenKind::Assign
                        }
                    }
                    '!' => {
                        if chars.peek() == Some(&'=') {
                            two(&mut chars, &mut col);
                            TokenKind::Ne
                        } else {
                            TokenKind::Unknown('!')
                        }
                    }
                    '<' => {
                        if chars.peek() == Some(&'=') {
                            two(&mut chars, &mut col);
                            TokenKind::Le
                        } else {
                            TokenKind::Lt
                        }
                    }
                    '>' => {
                        if chars.peek() == Some(&'=') {
                            two(&mut chars, &mut col);
                            TokenKind::Ge
                        } else {
                            TokenKind::Gt
                        }
                    }
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ',' => TokenKind::Comma,
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '*' => TokenKind::Star,
                    '/' => TokenKind::Slash,
                    other => TokenKind::Unknown(other),
                };
                push!(kind, start_col);
            }
        }
    }
    if !matches!(tokens.last().map(|t| &t.kind), Some(TokenKind::Newline) | None) {
        tokens.push(Token {
            kind: TokenKind::Newline,
            line,
            col,
        });
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        col,
    });
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn tokenizes_param_line() {
        let ks = kinds("param d = uniform(5, 20)");
        assert_eq!(
            ks,
            vec![
                TokenKind::Ident("param".into()),
                TokenKind::Ident("d".into()),
                TokenKind::Assign,
                TokenKind::Ident("uniform".into()),
                TokenKind::LParen,
                TokenKind::Num(5.0),
                TokenKind::Comma,
                TokenKind::Num(20.0),
                TokenKind::RParen,
                TokenKind::Newline,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let ks = kinds("# header\n\n  # indented comment\nrequire x > 1\n");
        assert_eq!(ks[0], TokenKind::Ident("require".into()));
    }

    #[test]
    fn tracks_line_and_column() {
        let toks = tokenize("param a = 1\nparam b = uniform(2, 1)");
        let uniform = toks
            .iter()
            .find(|t| t.kind == TokenKind::Ident("uniform".into()))
            .unwrap();
        assert_eq!(uniform.line, 2);
        assert_eq!(uniform.col, 11);
    }

    #[test]
    fn unterminated_string_becomes_bad_token() {
        let ks = kinds("map \"oops");
        assert!(ks.contains(&TokenKind::BadStr));
    }

    #[test]
    fn never_panics_on_garbage() {
        for src in ["\u{0}\u{1}??", "!!!", "1.2.3.4", "\"\\", "@@@ ###"] {
            let _ = tokenize(src);
        }
    }
}
