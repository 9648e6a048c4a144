//! Parser for `.spec` files.

use std::collections::HashSet;

use super::ast::*;
use crate::syntax::lexer::Tok;
use crate::syntax::{Cursor, PResult, ParseError, Pos};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("{0}")]
    Syntax(#[from] ParseError),
    #[error("{pos}: duplicate alias `{alias}`")]
    DuplicateAlias { pos: Pos, alias: String },
    #[error("{pos}: unknown temporal operator `{op}`")]
    UnknownTemporalOperator { pos: Pos, op: String },
}

pub fn parse_spec(src: &str) -> Result<Spec, SpecError> {
    let mut p = SpecParser { c: Cursor::new(src)?, aliases: HashSet::new() };
    p.spec()
}

struct SpecParser {
    c: Cursor,
    aliases: HashSet<String>,
}

impl SpecParser {
    fn spec(&mut self) -> Result<Spec, SpecError> {
        let mut s = Spec::default();
        while !self.c.at_eof() {
            let pos = self.c.pos();
            if self.c.eat_kw("import") {
                let alias = self.c.ident()?;
                self.c.expect_kw("from")?;
                let program = self.c.string()?;
                let entries = if self.c.eat_kw("entries") { Some(self.c.string()?) } else { None };
                self.c.expect(Tok::Semi)?;
                if !self.aliases.insert(alias.clone()) {
                    return Err(SpecError::DuplicateAlias { pos, alias });
                }
                s.imports.push(Import { alias, program, entries });
            } else if self.c.eat_kw("topology") {
                self.c.expect(Tok::LBrace)?;
                while !self.c.eat(&Tok::RBrace) {
                    s.links.push(self.link()?);
                }
                self.c.eat(&Tok::Semi);
            } else if self.c.is_kw("link") {
                s.links.push(self.link()?);
            } else if self.c.eat_kw("local") {
                s.locals.push(self.local()?);
            } else if self.c.eat_kw("global") {
                self.c.expect(Tok::LBrace)?;
                while !self.c.eat(&Tok::RBrace) {
                    self.c.expect_kw("ltl")?;
                    let name = self.c.ident()?;
                    self.c.expect(Tok::LBrace)?;
                    let formula = self.ltl()?;
                    self.c.expect(Tok::RBrace)?;
                    self.c.eat(&Tok::Semi);
                    s.globals.push(GlobalRule { name, formula });
                }
                self.c.eat(&Tok::Semi);
            } else if self.c.eat_kw("host") {
                let name = self.c.ident()?;
                let steps = self.host_block()?;
                s.hosts.push(HostProcess { name, steps });
            } else {
                return Err(self.c.unexpected::<()>("`import`, `topology`, `local`, `global` or `host`").unwrap_err().into());
            }
        }
        Ok(s)
    }

    fn link(&mut self) -> PResult<LinkDecl> {
        self.c.expect_kw("link")?;
        let from = self.c.ident()?;
        self.c.expect(Tok::Arrow)?;
        let to = self.c.ident()?;
        let port = if self.c.eat_kw("ALL") { None } else { Some(self.c.int()?) };
        let loss = if self.c.eat_kw("lossy") {
            self.c.expect(Tok::LParen)?;
            let n = self.c.int()?;
            self.c.expect(Tok::RParen)?;
            u32::try_from(n).or_else(|_| self.c.error("loss budget too large"))?
        } else {
            0
        };
        self.c.expect(Tok::Semi)?;
        Ok(LinkDecl { from, to, port, loss })
    }

    fn local(&mut self) -> PResult<LocalBlock> {
        let device = self.c.ident()?;
        let mut b = LocalBlock { device, ..Default::default() };
        self.c.expect(Tok::LBrace)?;
        while !self.c.eat(&Tok::RBrace) {
            if self.c.eat_kw("let") {
                let id = self.c.ident()?;
                self.c.expect(Tok::Assign)?;
                let e = self.c.expr()?;
                self.c.expect(Tok::Semi)?;
                b.lets.push((id, e));
            } else if self.c.eat_kw("assert") {
                let e = self.c.expr()?;
                self.c.expect(Tok::Semi)?;
                b.asserts.push(e);
            } else {
                return self.c.unexpected("`let` or `assert`");
            }
        }
        self.c.eat(&Tok::Semi);
        Ok(b)
    }

    fn host_block(&mut self) -> PResult<Vec<HostStep>> {
        self.c.expect(Tok::LBrace)?;
        let mut steps = Vec::new();
        while !self.c.eat(&Tok::RBrace) {
            if self.c.eat_kw("send") {
                let target = self.c.ident()?;
                let fields = self.packet_literal()?;
                self.c.expect(Tok::Semi)?;
                steps.push(HostStep::Send { target, fields });
            } else if self.c.eat_kw("choice") {
                self.c.expect(Tok::LBrace)?;
                let mut alts = Vec::new();
                while *self.c.peek() != Tok::RBrace {
                    alts.push(self.host_block()?);
                }
                self.c.bump();
                if alts.is_empty() {
                    return self.c.error("`choice` needs at least one alternative");
                }
                self.c.eat(&Tok::Semi);
                steps.push(HostStep::Choice(alts));
            } else if self.c.eat_kw("repeat") {
                let n = self.c.int()?;
                let body = self.host_block()?;
                self.c.eat(&Tok::Semi);
                steps.push(HostStep::Repeat(n, body));
            } else {
                return self.c.unexpected("`send`, `choice` or `repeat`");
            }
        }
        Ok(steps)
    }

    fn packet_literal(&mut self) -> PResult<Vec<FieldInit>> {
        self.c.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.c.eat(&Tok::RBrace) {
            let path = self.c.path()?;
            let segs: Vec<&str> = path.segs.iter().map(|s| s.as_str()).collect();
            let (header, field) = match segs.as_slice() {
                ["hdr", h, f] | [h, f] if path.index.is_none() && !path.call => (h.to_string(), f.to_string()),
                _ => return self.c.error(format!("packet literal fields are written `header.field`, found `{}`", path.segs.join("."))),
            };
            self.c.expect(Tok::Assign)?;
            let value = self.c.int()?;
            out.push(FieldInit { header, field, value });
            if !self.c.eat(&Tok::Comma) && *self.c.peek() != Tok::RBrace {
                return self.c.unexpected("`,` or `}`");
            }
        }
        Ok(out)
    }

    // ltl := until ( '->' ltl )?  with || and && in between
    fn ltl(&mut self) -> Result<Ltl, SpecError> {
        let lhs = self.ltl_or()?;
        if self.c.eat(&Tok::Arrow) {
            let rhs = self.ltl()?;
            return Ok(Ltl::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn ltl_or(&mut self) -> Result<Ltl, SpecError> {
        let mut lhs = self.ltl_and()?;
        while self.c.eat(&Tok::OrOr) {
            lhs = Ltl::Or(Box::new(lhs), Box::new(self.ltl_and()?));
        }
        Ok(lhs)
    }

    fn ltl_and(&mut self) -> Result<Ltl, SpecError> {
        let mut lhs = self.ltl_until()?;
        while self.c.eat(&Tok::AndAnd) {
            lhs = Ltl::And(Box::new(lhs), Box::new(self.ltl_until()?));
        }
        Ok(lhs)
    }

    fn ltl_until(&mut self) -> Result<Ltl, SpecError> {
        let lhs = self.ltl_unary()?;
        match self.c.peek().clone() {
            Tok::Ident(s) if s == "U" => {
                self.c.bump();
                let rhs = self.ltl_until()?;
                Ok(Ltl::Until(Box::new(lhs), Box::new(rhs)))
            }
            Tok::Ident(s) => Err(SpecError::UnknownTemporalOperator { pos: self.c.pos(), op: s }),
            _ => Ok(lhs),
        }
    }

    fn ltl_unary(&mut self) -> Result<Ltl, SpecError> {
        let pos = self.c.pos();
        match self.c.peek().clone() {
            Tok::Box => {
                self.c.bump();
                Ok(Ltl::Always(Box::new(self.ltl_unary()?)))
            }
            Tok::Diamond => {
                self.c.bump();
                Ok(Ltl::Eventually(Box::new(self.ltl_unary()?)))
            }
            Tok::Bang => {
                self.c.bump();
                Ok(Ltl::Not(Box::new(self.ltl_unary()?)))
            }
            Tok::Ident(s) if s == "X" => {
                self.c.bump();
                Ok(Ltl::Next(Box::new(self.ltl_unary()?)))
            }
            Tok::Ident(s) => Err(SpecError::UnknownTemporalOperator { pos, op: s }),
            Tok::LBrace => {
                self.c.bump();
                let e = self.c.expr()?;
                self.c.expect(Tok::RBrace)?;
                Ok(Ltl::Atom(e))
            }
            Tok::LParen => {
                self.c.bump();
                let f = self.ltl()?;
                self.c.expect(Tok::RParen)?;
                Ok(f)
            }
            _ => Err(self.c.unexpected::<()>("temporal formula").unwrap_err().into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const FIG8: &str = r#"
import s0 from "netchain.p4" entries "entries_0";
import s1 from "netchain.p4" entries "entries_1";
import s2 from "netchain.p4" entries "entries_2";
topology { link s0 -> s1 ALL; link s1 -> s2 ALL; }
global { ltl sequence_monotonicity { [] { (s0.seq[0] >= s1.seq[0]) && (s1.seq[0] >= s2.seq[0]) } }; }
"#;

    #[test]
    fn fig8_structure() {
        let s = parse_spec(FIG8).unwrap();
        assert_eq!(s.imports.len(), 3);
        assert!(s.imports.iter().all(|i| i.entries.is_some()));
        assert_eq!(s.links.len(), 2);
        assert!(s.links.iter().all(|l| l.port.is_none()));
        assert_eq!(s.globals.len(), 1);
        assert_eq!(s.globals[0].name, "sequence_monotonicity");
        assert!(matches!(s.globals[0].formula, Ltl::Always(_)));
    }

    #[test]
    fn empty_topology() {
        let s = parse_spec("import a from \"a.pir\"; topology { }").unwrap();
        assert!(s.links.is_empty());
    }

    #[test]
    fn hosts_and_lossy_links() {
        let s = parse_spec(
            "import a from \"a.pir\"; link a -> a 3 lossy(2);
             host h { send a { nc.op = 1, hdr.nc.seq = 2 }; choice { { send a { nc.op = 3 }; } { } } repeat 2 { send a { }; } }",
        )
        .unwrap();
        assert_eq!(s.links[0], LinkDecl { from: "a".into(), to: "a".into(), port: Some(3), loss: 2 });
        assert_eq!(s.hosts[0].steps.len(), 3);
        let HostStep::Send { fields, .. } = &s.hosts[0].steps[0] else { panic!() };
        assert_eq!(fields[1], FieldInit { header: "nc".into(), field: "seq".into(), value: 2 });
    }

    #[test]
    fn ltl_operators_and_errors() {
        let s = parse_spec("global { ltl p { <> [] { a } -> { b } U X { c } }; }").unwrap();
        let Ltl::Implies(l, r) = &s.globals[0].formula else { panic!() };
        assert!(matches!(**l, Ltl::Eventually(_)));
        assert!(matches!(**r, Ltl::Until(..)));
        let text = s.globals[0].formula.to_string();
        let again = parse_spec(&format!("global {{ ltl p {{ {text} }}; }}")).unwrap();
        assert_eq!(again.globals[0].formula, s.globals[0].formula);

        assert!(matches!(parse_spec("global { ltl p { G { a } }; }"), Err(SpecError::UnknownTemporalOperator { .. })));
        assert!(matches!(parse_spec("global { ltl p { { a } W { b } }; }"), Err(SpecError::UnknownTemporalOperator { .. })));
        assert!(matches!(
            parse_spec("import a from \"x\"; import a from \"y\";"),
            Err(SpecError::DuplicateAlias { .. })
        ));
    }
}
