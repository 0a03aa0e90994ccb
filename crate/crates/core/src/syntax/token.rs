use std::fmt;

use crate::diag::{Diagnostic, Diagnostics, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Context,
    Invariant,
    Pre,
    Post,
    Let,
    In,
    If,
    Then,
    Else,
    Endif,
    Implies,
    And,
    Or,
    Xor,
    Not,
    Action,
    On,
    Do,
    Called,
    Event,
    Constant,
    Executable,
    Loose,
    True,
    False,
    SelfKw,
}

impl Keyword {
    const ALL: [(&'static str, Keyword); 26] = [
        ("context", Keyword::Context),
        ("invariant", Keyword::Invariant),
        ("pre", Keyword::Pre),
        ("post", Keyword::Post),
        ("let", Keyword::Let),
        ("in", Keyword::In),
        ("if", Keyword::If),
        ("then", Keyword::Then),
        ("else", Keyword::Else),
        ("endif", Keyword::Endif),
        ("implies", Keyword::Implies),
        ("and", Keyword::And),
        ("or", Keyword::Or),
        ("xor", Keyword::Xor),
        ("not", Keyword::Not),
        ("action", Keyword::Action),
        ("on", Keyword::On),
        ("do", Keyword::Do),
        ("called", Keyword::Called),
        ("event", Keyword::Event),
        ("constant", Keyword::Constant),
        ("executable", Keyword::Executable),
        ("loose", Keyword::Loose),
        ("true", Keyword::True),
        ("false", Keyword::False),
        ("self", Keyword::SelfKw),
    ];

    pub fn from_word(word: &str) -> Option<Keyword> {
        Self::ALL.iter().find(|(w, _)| *w == word).map(|(_, k)| *k)
    }

    pub fn as_str(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, k)| *k == self)
            .map(|(w, _)| *w)
            .unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Kw(Keyword),
    Int(i64),
    Real(f64),
    Str(String),
    Dot,
    Arrow,
    ColonColon,
    Colon,
    Comma,
    Semi,
    Bar,
    LParen,
    RParen,
    LBrace,
    RBrace,
    AtPre,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    EqEq,
    Neq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier '{s}'"),
            Tok::Kw(k) => return write!(f, "'{}'", k.as_str()),
            Tok::Int(i) => return write!(f, "integer {i}"),
            Tok::Real(r) => return write!(f, "real {r}"),
            Tok::Str(_) => return f.write_str("string literal"),
            Tok::Dot => ".",
            Tok::Arrow => "->",
            Tok::ColonColon => "::",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Bar => "|",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::AtPre => "@pre",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::EqEq => "==",
            Tok::Neq => "<>",
        };
        write!(f, "'{s}'")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Lexer {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.i).copied()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }
}

/// Splits `text` into tokens. Whitespace and `--` comments are dropped.
pub fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostics> {
    let mut lx = Lexer {
        chars: text.chars().collect(),
        i: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = lx.peek(0) {
        let pos = lx.pos();
        if c.is_whitespace() {
            lx.bump();
            continue;
        }
        if c == '-' && lx.peek(1) == Some('-') {
            while let Some(c) = lx.peek(0) {
                if c == '\n' {
                    break;
                }
                lx.bump();
            }
            continue;
        }
        let tok = if c.is_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(c) = lx.peek(0) {
                if c.is_alphanumeric() || c == '_' {
                    word.push(c);
                    lx.bump();
                } else {
                    break;
                }
            }
            match Keyword::from_word(&word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() {
            lex_number(&mut lx, pos)?
        } else if c == '\'' {
            lex_string(&mut lx, pos)?
        } else {
            lx.bump();
            let next = lx.peek(0);
            let two = |t: Tok, lx: &mut Lexer| {
                lx.bump();
                t
            };
            match (c, next) {
                ('-', Some('>')) => two(Tok::Arrow, &mut lx),
                (':', Some(':')) => two(Tok::ColonColon, &mut lx),
                ('<', Some('=')) => two(Tok::Le, &mut lx),
                ('<', Some('>')) => two(Tok::Neq, &mut lx),
                ('>', Some('=')) => two(Tok::Ge, &mut lx),
                ('=', Some('=')) => two(Tok::EqEq, &mut lx),
                ('@', _) => {
                    let word: String = lx.chars[lx.i..].iter().take(3).collect();
                    let after = lx.peek(3);
                    if word == "pre" && !after.is_some_and(|c| c.is_alphanumeric() || c == '_') {
                        for _ in 0..3 {
                            lx.bump();
                        }
                        Tok::AtPre
                    } else {
                        return Err(Diagnostics::single(Diagnostic::error(
                            pos,
                            "'@' must be followed by 'pre'",
                        )));
                    }
                }
                ('.', _) => Tok::Dot,
                (':', _) => Tok::Colon,
                (',', _) => Tok::Comma,
                (';', _) => Tok::Semi,
                ('|', _) => Tok::Bar,
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                ('{', _) => Tok::LBrace,
                ('}', _) => Tok::RBrace,
                ('+', _) => Tok::Plus,
                ('-', _) => Tok::Minus,
                ('*', _) => Tok::Star,
                ('/', _) => Tok::Slash,
                ('<', _) => Tok::Lt,
                ('>', _) => Tok::Gt,
                ('=', _) => Tok::Eq,
                _ => {
                    return Err(Diagnostics::single(Diagnostic::error(
                        pos,
                        format!("illegal character '{c}'"),
                    )))
                }
            }
        };
        out.push(Token { tok, pos });
    }
    Ok(out)
}

fn lex_number(lx: &mut Lexer, pos: Pos) -> Result<Tok, Diagnostics> {
    let mut s = String::new();
    while let Some(c) = lx.peek(0).filter(char::is_ascii_digit) {
        s.push(c);
        lx.bump();
    }
    let mut real = false;
    if lx.peek(0) == Some('.') && lx.peek(1).is_some_and(|c| c.is_ascii_digit()) {
        real = true;
        s.push('.');
        lx.bump();
        while let Some(c) = lx.peek(0).filter(char::is_ascii_digit) {
            s.push(c);
            lx.bump();
        }
    }
    if matches!(lx.peek(0), Some('e' | 'E')) {
        let sign = matches!(lx.peek(1), Some('+' | '-'));
        let digit_at = if sign { 2 } else { 1 };
        if lx.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
            real = true;
            s.push('e');
            lx.bump();
            if sign {
                s.push(lx.bump().unwrap());
            }
            while let Some(c) = lx.peek(0).filter(char::is_ascii_digit) {
                s.push(c);
                lx.bump();
            }
        }
    }
    if real {
        s.parse::<f64>().map(Tok::Real).map_err(|_| {
            Diagnostics::single(Diagnostic::error(
                pos,
                format!("malformed real literal '{s}'"),
            ))
        })
    } else {
        s.parse::<i64>().map(Tok::Int).map_err(|_| {
            Diagnostics::single(Diagnostic::error(
                pos,
                format!("integer literal '{s}' out of range"),
            ))
        })
    }
}

fn lex_string(lx: &mut Lexer, pos: Pos) -> Result<Tok, Diagnostics> {
    lx.bump();
    let mut s = String::new();
    loop {
        match lx.bump() {
            None | Some('\n') => {
                return Err(Diagnostics::single(Diagnostic::error(
                    pos,
                    "unterminated string literal",
                )))
            }
            Some('\'') => return Ok(Tok::Str(s)),
            Some('\\') => {
                let at = lx.pos();
                match lx.bump() {
                    Some('\'') => s.push('\''),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    None => {
                        return Err(Diagnostics::single(Diagnostic::error(
                            pos,
                            "unterminated string literal",
                        )))
                    }
                    Some(c) => {
                        return Err(Diagnostics::single(Diagnostic::error(
                            at,
                            format!("unknown escape '\\{c}'"),
                        )))
                    }
                }
            }
            Some(c) => s.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<Tok> {
        tokenize(text).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn first_hotel_rule() {
        assert_eq!(
            kinds("guests->size <= numberOfBeds"),
            vec![
                Tok::Ident("guests".into()),
                Tok::Arrow,
                Tok::Ident("size".into()),
                Tok::Le,
                Tok::Ident("numberOfBeds".into()),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(kinds("").is_empty());
        assert!(kinds("  -- only a comment\n").is_empty());
    }

    #[test]
    fn at_pre() {
        assert_eq!(
            kinds("usage@pre + 1"),
            vec![
                Tok::Ident("usage".into()),
                Tok::AtPre,
                Tok::Plus,
                Tok::Int(1)
            ]
        );
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(
            kinds("2.5 1e3 7 x.y"),
            vec![
                Tok::Real(2.5),
                Tok::Real(1000.0),
                Tok::Int(7),
                Tok::Ident("x".into()),
                Tok::Dot,
                Tok::Ident("y".into())
            ]
        );
        assert_eq!(kinds(r"'it\'s'"), vec![Tok::Str("it's".into())]);
    }

    #[test]
    fn keywords_are_distinguished() {
        assert_eq!(
            kinds("context invariant loose"),
            vec![
                Tok::Kw(Keyword::Context),
                Tok::Kw(Keyword::Invariant),
                Tok::Kw(Keyword::Loose)
            ]
        );
    }

    #[test]
    fn errors_have_positions() {
        let e = tokenize("a\n  # b").unwrap_err();
        assert_eq!(e.0[0].pos, Pos::new(2, 3));
        assert!(e.0[0].message.contains("illegal character"));
        let e = tokenize("x = 'abc").unwrap_err();
        assert_eq!(e.0[0].pos, Pos::new(1, 5));
        assert!(e.0[0].message.contains("unterminated"));
        assert!(tokenize("99999999999999999999").is_err());
    }
}
