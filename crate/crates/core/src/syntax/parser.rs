//! Token cursor and the expression grammar.

use super::expr::{BinOp, Expr, RawPath, UnOp, VarRef};
use super::lexer::{tokenize, Pos, Tok, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

pub type PResult<T> = Result<T, ParseError>;

pub struct Cursor {
    toks: Vec<Token>,
    i: usize,
}

impl Cursor {
    pub fn new(src: &str) -> PResult<Cursor> {
        let toks = tokenize(src).map_err(|e| ParseError { pos: e.pos, msg: e.msg })?;
        Ok(Cursor { toks, i: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError { pos: self.pos(), msg: msg.into() })
    }

    pub fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.unexpected(&t.to_string())
        }
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    pub fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("identifier"),
        }
    }

    pub fn int(&mut self) -> PResult<u64> {
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("integer"),
        }
    }

    pub fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("string"),
        }
    }

    /// `bit<w>`
    pub fn bit_type(&mut self) -> PResult<(u64, Pos)> {
        self.expect_kw("bit")?;
        self.expect(Tok::Lt)?;
        let pos = self.pos();
        let w = self.int()?;
        self.expect(Tok::Gt)?;
        Ok((w, pos))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Arrow => BinOp::Implies,
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Pipe => BinOp::BitOr,
            Tok::Caret => BinOp::BitXor,
            Tok::Amp => BinOp::BitAnd,
            Tok::Shl => BinOp::Shl,
            Tok::Shr => BinOp::Shr,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let p = op.prec();
            if p < min {
                break;
            }
            self.bump();
            let next = if op == BinOp::Implies { p } else { p + 1 };
            let rhs = self.binary(next)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Bang) {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Tilde) {
            return Ok(Expr::Unary(UnOp::BitNot, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Expr::Int(1))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Expr::Int(0))
            }
            Tok::Ident(_) => Ok(Expr::Var(VarRef::Raw(self.path()?))),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.unexpected("expression"),
        }
    }

    pub fn path(&mut self) -> PResult<RawPath> {
        let mut segs = vec![self.ident()?];
        while *self.peek() == Tok::Dot {
            self.bump();
            segs.push(self.ident()?);
        }
        let index = if self.eat(&Tok::LBracket) {
            let e = self.expr()?;
            self.expect(Tok::RBracket)?;
            Some(Box::new(e))
        } else {
            None
        };
        let call = if *self.peek() == Tok::LParen && *self.peek_at(1) == Tok::RParen {
            self.bump();
            self.bump();
            true
        } else {
            false
        };
        Ok(RawPath { segs, index, call })
    }
}

pub fn parse_expr_str(src: &str) -> PResult<Expr> {
    let mut c = Cursor::new(src)?;
    let e = c.expr()?;
    if !c.at_eof() {
        return c.unexpected("end of expression");
    }
    Ok(e)
}
