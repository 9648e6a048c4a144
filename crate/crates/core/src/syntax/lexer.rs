//! Tokenizer shared by the pipeline IR and the intent language.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    /// `[]` written without whitespace.
    Box,
    /// `<>` written without whitespace.
    Diamond,
    Semi,
    Colon,
    Comma,
    Dot,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Amp,
    Pipe,
    Caret,
    Tilde,
    Bang,
    AndAnd,
    OrOr,
    Shl,
    Shr,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Int(n) => return write!(f, "integer `{n}`"),
            Tok::Str(s) => return write!(f, "string \"{s}\""),
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Box => "[]",
            Tok::Diamond => "<>",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Caret => "^",
            Tok::Tilde => "~",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Shl => "<<",
            Tok::Shr => ">>",
            Tok::Arrow => "->",
            Tok::Eof => "end of input",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct LexError {
    pub pos: Pos,
    pub msg: String,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        let pos = Pos { line, col };
        let next = chars.get(i + 1).copied();
        // comments
        if c == '/' && next == Some('/') || c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && next == Some('*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(LexError { pos, msg: "unterminated block comment".into() });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            out.push(Token { tok: Tok::Ident(s), pos });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                if chars[i] != '_' {
                    s.push(chars[i]);
                }
                bump!();
            }
            let parsed = if let Some(h) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
                u64::from_str_radix(h, 16)
            } else if let Some(b) = s.strip_prefix("0b").or_else(|| s.strip_prefix("0B")) {
                u64::from_str_radix(b, 2)
            } else {
                s.parse::<u64>()
            };
            let n = parsed.map_err(|_| LexError { pos, msg: format!("invalid integer literal `{s}`") })?;
            out.push(Token { tok: Tok::Int(n), pos });
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err(LexError { pos, msg: "unterminated string literal".into() });
                }
                if chars[i] == '"' {
                    bump!();
                    break;
                }
                s.push(chars[i]);
                bump!();
            }
            out.push(Token { tok: Tok::Str(s), pos });
            continue;
        }
        let two = |a: char, b: char| c == a && next == Some(b);
        let (tok, len) = if two('[', ']') {
            (Tok::Box, 2)
        } else if two('<', '>') {
            (Tok::Diamond, 2)
        } else if two('=', '=') {
            (Tok::EqEq, 2)
        } else if two('!', '=') {
            (Tok::NotEq, 2)
        } else if two('<', '=') {
            (Tok::Le, 2)
        } else if two('>', '=') {
            (Tok::Ge, 2)
        } else if two('&', '&') {
            (Tok::AndAnd, 2)
        } else if two('|', '|') {
            (Tok::OrOr, 2)
        } else if two('<', '<') {
            (Tok::Shl, 2)
        } else if two('>', '>') {
            (Tok::Shr, 2)
        } else if two('-', '>') {
            (Tok::Arrow, 2)
        } else {
            let t = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '=' => Tok::Assign,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '^' => Tok::Caret,
                '~' => Tok::Tilde,
                '!' => Tok::Bang,
                other => return Err(LexError { pos, msg: format!("unexpected character `{other}`") }),
            };
            (t, 1)
        };
        for _ in 0..len {
            bump!();
        }
        out.push(Token { tok, pos });
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn temporal_tokens_need_adjacency() {
        assert_eq!(toks("[] <>"), vec![Tok::Box, Tok::Diamond, Tok::Eof]);
        assert_eq!(toks("[ ]"), vec![Tok::LBracket, Tok::RBracket, Tok::Eof]);
        assert_eq!(toks("bit<8>"), vec![Tok::Ident("bit".into()), Tok::Lt, Tok::Int(8), Tok::Gt, Tok::Eof]);
    }

    #[test]
    fn literals_and_positions() {
        let t = tokenize("x = 0x1f;\n  y").unwrap();
        assert_eq!(t[2].tok, Tok::Int(31));
        assert_eq!(t[4].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(toks("a // b\n /* c */ d # e"), vec![Tok::Ident("a".into()), Tok::Ident("d".into()), Tok::Eof]);
    }

    #[test]
    fn bad_character_is_located() {
        let e = tokenize("a\n  $").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 3 });
    }
}
