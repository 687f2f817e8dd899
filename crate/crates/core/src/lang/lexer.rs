use super::{LangError, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Number(f64),
    Str(String),
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Assign,
    DotDot,
    Plus,
    Minus,
    Star,
    Slash,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Eof => "end of input".into(),
            other => format!("'{}'", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Assign => "=",
            Tok::DotDot => "..",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
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

    fn here(&self) -> Span {
        Span {
            line: self.line,
            column: self.col,
            start: self.pos,
            end: self.pos,
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LangError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '/' && cur.peek2() == Some('/') {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let mut span = cur.here();
        let Some(c) = cur.bump() else {
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        let two = |cur: &mut Cursor, next: char, yes: Tok, no: Tok| {
            if cur.peek() == Some(next) {
                cur.bump();
                yes
            } else {
                no
            }
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '=' => two(&mut cur, '=', Tok::EqEq, Tok::Assign),
            '!' => two(&mut cur, '=', Tok::NotEq, Tok::Bang),
            '<' => two(&mut cur, '=', Tok::Le, Tok::Lt),
            '>' => two(&mut cur, '=', Tok::Ge, Tok::Gt),
            '&' if cur.peek() == Some('&') => {
                cur.bump();
                Tok::AndAnd
            }
            '|' if cur.peek() == Some('|') => {
                cur.bump();
                Tok::OrOr
            }
            '.' if cur.peek() == Some('.') => {
                cur.bump();
                Tok::DotDot
            }
            '"' => lex_string(&mut cur, span)?,
            c if c.is_ascii_digit() => lex_number(&mut cur, span.start)?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    cur.bump();
                }
                Tok::Ident(src[span.start..cur.pos].to_string())
            }
            other => {
                span.end = cur.pos;
                return Err(LangError::syntax(format!("unexpected character '{other}'"), span));
            }
        };
        span.end = cur.pos;
        out.push(Token { tok, span });
    }
}

fn lex_number(cur: &mut Cursor, start: usize) -> Result<Tok, LangError> {
    let digits = |cur: &mut Cursor| {
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    };
    digits(cur);
    // `0..3` is a range, not the start of a fraction
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        digits(cur);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let save = (cur.pos, cur.line, cur.col);
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        if cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            digits(cur);
        } else {
            (cur.pos, cur.line, cur.col) = save;
        }
    }
    let text = &cur.src[start..cur.pos];
    text.parse::<f64>().map(Tok::Number).map_err(|_| {
        LangError::syntax(
            format!("malformed number '{text}'"),
            Span {
                line: cur.line,
                column: cur.col,
                start,
                end: cur.pos,
            },
        )
    })
}

fn lex_string(cur: &mut Cursor, span: Span) -> Result<Tok, LangError> {
    let mut s = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => {
                return Err(LangError::syntax("unterminated string literal", span));
            }
            Some('"') => return Ok(Tok::Str(s)),
            Some('\\') => match cur.bump() {
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                _ => return Err(LangError::syntax("invalid escape in string literal", cur.here())),
            },
            Some(c) => s.push(c),
        }
    }
}
