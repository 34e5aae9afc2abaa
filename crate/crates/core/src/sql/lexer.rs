use super::SqlError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokenKind {
    /// Unquoted identifiers and keywords, already lower-cased.
    Word(String),
    /// `"Quoted"` identifiers keep their case.
    QuotedIdent(String),
    Number(i64),
    Str(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

impl Token {
    /// Source-like rendering used in diagnostics.
    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Word(w) => w.clone(),
            TokenKind::QuotedIdent(w) => format!("\"{w}\""),
            TokenKind::Number(n) => n.to_string(),
            TokenKind::Str(s) => format!("'{s}'"),
            TokenKind::Comma => ",".into(),
            TokenKind::Dot => ".".into(),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Semicolon => ";".into(),
            TokenKind::Star => "*".into(),
            TokenKind::Plus => "+".into(),
            TokenKind::Minus => "-".into(),
            TokenKind::Slash => "/".into(),
            TokenKind::Percent => "%".into(),
            TokenKind::Concat => "||".into(),
            TokenKind::Eq => "=".into(),
            TokenKind::Ne => "<>".into(),
            TokenKind::Lt => "<".into(),
            TokenKind::Le => "<=".into(),
            TokenKind::Gt => ">".into(),
            TokenKind::Ge => ">=".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }

    pub fn is_word(&self, word: &str) -> bool {
        matches!(&self.kind, TokenKind::Word(w) if w == word)
    }
}

pub(crate) fn tokenize(input: &str) -> Result<Vec<Token>, SqlError> {
    let chars: Vec<char> = input.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut column) = (0usize, 1usize, 1usize);

    let advance = |i: &mut usize, line: &mut usize, column: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *column = 1;
        } else {
            *column += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, column);
        let push = |tokens: &mut Vec<Token>, kind| {
            tokens.push(Token {
                kind,
                line: start_line,
                column: start_col,
            })
        };

        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut column, c);
            continue;
        }
        // -- line comments
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut column, ch);
                }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                word.push(chars[i].to_ascii_lowercase());
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut column, ch);
                }
            }
            push(&mut tokens, TokenKind::Word(word));
            continue;
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                digits.push(chars[i]);
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut column, ch);
                }
            }
            if i < chars.len() && chars[i] == '.' {
                return Err(SqlError::Unsupported {
                    feature: "non-integer numeric literal".into(),
                    line: start_line,
                    column: start_col,
                });
            }
            let value = digits.parse::<i64>().map_err(|_| SqlError::Syntax {
                line: start_line,
                column: start_col,
                token: digits.clone(),
                expected: "an integer that fits in 64 bits".into(),
            })?;
            push(&mut tokens, TokenKind::Number(value));
            continue;
        }
        if c == '\'' || c == '"' {
            let quote = c;
            advance(&mut i, &mut line, &mut column, c);
            let mut text = String::new();
            loop {
                match chars.get(i) {
                    None => {
                        return Err(SqlError::Syntax {
                            line: start_line,
                            column: start_col,
                            token: format!("{quote}{text}"),
                            expected: format!("closing {quote}"),
                        })
                    }
                    Some(&q) if q == quote => {
                        advance(&mut i, &mut line, &mut column, q);
                        if chars.get(i) == Some(&quote) {
                            text.push(quote);
                            advance(&mut i, &mut line, &mut column, quote);
                        } else {
                            break;
                        }
                    }
                    Some(&other) => {
                        text.push(other);
                        advance(&mut i, &mut line, &mut column, other);
                    }
                }
            }
            let kind = if quote == '\'' {
                TokenKind::Str(text)
            } else {
                TokenKind::QuotedIdent(text)
            };
            push(&mut tokens, kind);
            continue;
        }

        let next = chars.get(i + 1).copied();
        let (kind, width) = match (c, next) {
            ('<', Some('=')) => (TokenKind::Le, 2),
            ('<', Some('>')) => (TokenKind::Ne, 2),
            ('>', Some('=')) => (TokenKind::Ge, 2),
            ('!', Some('=')) => (TokenKind::Ne, 2),
            ('|', Some('|')) => (TokenKind::Concat, 2),
            ('<', _) => (TokenKind::Lt, 1),
            ('>', _) => (TokenKind::Gt, 1),
            ('=', _) => (TokenKind::Eq, 1),
            (',', _) => (TokenKind::Comma, 1),
            ('.', _) => (TokenKind::Dot, 1),
            ('(', _) => (TokenKind::LParen, 1),
            (')', _) => (TokenKind::RParen, 1),
            (';', _) => (TokenKind::Semicolon, 1),
            ('*', _) => (TokenKind::Star, 1),
            ('+', _) => (TokenKind::Plus, 1),
            ('-', _) => (TokenKind::Minus, 1),
            ('/', _) => (TokenKind::Slash, 1),
            ('%', _) => (TokenKind::Percent, 1),
            _ => {
                return Err(SqlError::Syntax {
                    line,
                    column,
                    token: c.to_string(),
                    expected: "a token".into(),
                })
            }
        };
        for _ in 0..width {
            {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut column, ch);
            }
        }
        push(&mut tokens, kind);
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        column,
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_case() {
        let toks = tokenize("SELECT a\n  FROM \"T\"").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Word("select".into()));
        assert_eq!((toks[2].line, toks[2].column), (2, 3));
        assert_eq!(toks[3].kind, TokenKind::QuotedIdent("T".into()));
    }

    #[test]
    fn string_escapes_and_operators() {
        let toks = tokenize("'it''s' <> <= != ||").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Str("it's".into()));
        assert_eq!(toks[1].kind, TokenKind::Ne);
        assert_eq!(toks[2].kind, TokenKind::Le);
        assert_eq!(toks[3].kind, TokenKind::Ne);
        assert_eq!(toks[4].kind, TokenKind::Concat);
    }

    #[test]
    fn unterminated_string() {
        assert!(matches!(
            tokenize("select 'abc"),
            Err(SqlError::Syntax {
                line: 1,
                column: 8,
                ..
            })
        ));
    }
}
