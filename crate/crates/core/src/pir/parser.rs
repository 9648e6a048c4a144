//! Parser for `.pir` device files. Produces an unresolved AST; see [`super::validate`].

use super::ast::*;
use crate::syntax::lexer::Tok;
use crate::syntax::{Cursor, Expr, PResult, VarRef};

const INTRINSICS: [&str; 4] = ["mark_drop", "recirculate", "clone", "set_egress_port"];

pub fn parse_raw(src: &str) -> PResult<DeviceProgram> {
    let mut c = Cursor::new(src)?;
    c.expect_kw("device")?;
    let name = c.ident()?;
    let mut prog = DeviceProgram::empty(&name);
    c.expect(Tok::LBrace)?;
    let (mut seen_parser, mut seen_ingress, mut seen_egress, mut seen_deparser) = (false, false, false, false);
    while !c.eat(&Tok::RBrace) {
        let kw = match c.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return c.unexpected("declaration"),
        };
        let dup = |c: &Cursor, seen: &mut bool| -> PResult<()> {
            if *seen {
                return c.error(format!("duplicate `{kw}` section"));
            }
            *seen = true;
            Ok(())
        };
        match kw.as_str() {
            "header" => {
                c.bump();
                let name = c.ident()?;
                c.expect(Tok::LBrace)?;
                let mut fields = Vec::new();
                while !c.eat(&Tok::RBrace) {
                    fields.push(field_decl(&mut c)?);
                    c.expect(Tok::Semi)?;
                }
                prog.headers.push(HeaderDecl { name, fields });
            }
            "metadata" => {
                c.bump();
                c.expect(Tok::LBrace)?;
                while !c.eat(&Tok::RBrace) {
                    let transient = c.eat_kw("transient");
                    let f = field_decl(&mut c)?;
                    c.expect(Tok::Semi)?;
                    prog.metadata.push(MetaField { name: f.name, width: f.width, transient });
                }
            }
            "register" => {
                c.bump();
                let name = c.ident()?;
                c.expect(Tok::LBracket)?;
                let size = c.int()?;
                c.expect(Tok::RBracket)?;
                c.expect(Tok::Colon)?;
                let (w, _) = c.bit_type()?;
                c.expect(Tok::Semi)?;
                prog.registers.push(RegisterDecl { name, size, width: width(w) });
            }
            "table" => {
                c.bump();
                prog.tables.push(table(&mut c)?);
            }
            "parser" => {
                dup(&c, &mut seen_parser)?;
                c.bump();
                prog.parser = parser_machine(&mut c)?;
            }
            "egress_parser" => {
                if prog.egress_parser.is_some() {
                    return c.error("duplicate `egress_parser` section");
                }
                c.bump();
                prog.egress_parser = Some(parser_machine(&mut c)?);
            }
            "ingress" => {
                dup(&c, &mut seen_ingress)?;
                c.bump();
                prog.ingress = block(&mut c)?;
            }
            "egress" => {
                dup(&c, &mut seen_egress)?;
                c.bump();
                prog.egress = block(&mut c)?;
            }
            "deparser" => {
                dup(&c, &mut seen_deparser)?;
                c.bump();
                prog.deparser = deparser(&mut c)?;
            }
            "egress_deparser" => {
                if prog.egress_deparser.is_some() {
                    return c.error("duplicate `egress_deparser` section");
                }
                c.bump();
                prog.egress_deparser = Some(deparser(&mut c)?);
            }
            other => return c.error(format!("unknown declaration `{other}`")),
        }
    }
    if !c.at_eof() {
        return c.unexpected("end of file");
    }
    Ok(prog)
}

// Out-of-range widths are kept so validation can report them.
fn width(w: u64) -> u32 {
    w.min(u32::MAX as u64) as u32
}

fn field_decl(c: &mut Cursor) -> PResult<FieldDecl> {
    let name = c.ident()?;
    c.expect(Tok::Colon)?;
    let (w, _) = c.bit_type()?;
    Ok(FieldDecl { name, width: width(w) })
}

fn table(c: &mut Cursor) -> PResult<TableDecl> {
    let name = c.ident()?;
    c.expect(Tok::LBrace)?;
    let mut key = None;
    let mut actions = Vec::new();
    let mut default = None;
    while !c.eat(&Tok::RBrace) {
        if c.eat_kw("key") {
            c.expect(Tok::Assign)?;
            key = Some(c.expr()?);
            c.expect(Tok::Semi)?;
        } else if c.eat_kw("action") {
            let name = c.ident()?;
            c.expect(Tok::LParen)?;
            let mut params = Vec::new();
            if !c.eat(&Tok::RParen) {
                loop {
                    params.push(field_decl(c)?);
                    if c.eat(&Tok::RParen) {
                        break;
                    }
                    c.expect(Tok::Comma)?;
                }
            }
            let body = block(c)?;
            actions.push(ActionDecl { name, params, body });
        } else if c.eat_kw("default") {
            c.expect(Tok::Assign)?;
            default = Some(action_call(c)?);
            c.expect(Tok::Semi)?;
        } else {
            return c.unexpected("`key`, `action` or `default`");
        }
    }
    let Some(key) = key else { return c.error(format!("table `{name}` has no key")) };
    let Some(default) = default else { return c.error(format!("table `{name}` has no default action")) };
    Ok(TableDecl { name, key, actions, default })
}

pub(crate) fn action_call(c: &mut Cursor) -> PResult<ActionCall> {
    let name = c.ident()?;
    c.expect(Tok::LParen)?;
    let mut args = Vec::new();
    if !c.eat(&Tok::RParen) {
        loop {
            args.push(c.int()?);
            if c.eat(&Tok::RParen) {
                break;
            }
            c.expect(Tok::Comma)?;
        }
    }
    Ok(ActionCall { name, args })
}

fn parser_machine(c: &mut Cursor) -> PResult<ParserMachine> {
    c.expect(Tok::LBrace)?;
    let mut states = Vec::new();
    while !c.eat(&Tok::RBrace) {
        let name = c.ident()?;
        c.expect(Tok::Colon)?;
        let mut extracts = Vec::new();
        while c.eat_kw("extract") {
            c.expect(Tok::LParen)?;
            extracts.push(c.ident()?);
            c.expect(Tok::RParen)?;
            c.expect(Tok::Semi)?;
        }
        let transition = if c.eat_kw("accept") {
            c.expect(Tok::Semi)?;
            Transition::Accept
        } else if c.eat_kw("reject") {
            c.expect(Tok::Semi)?;
            Transition::Reject
        } else if c.eat_kw("goto") {
            let t = c.ident()?;
            c.expect(Tok::Semi)?;
            Transition::Goto(t)
        } else if c.eat_kw("select") {
            c.expect(Tok::LParen)?;
            let on = c.expr()?;
            c.expect(Tok::RParen)?;
            c.expect(Tok::LBrace)?;
            let mut cases = Vec::new();
            let default;
            loop {
                if c.eat_kw("default") {
                    c.expect(Tok::Arrow)?;
                    default = c.ident()?;
                    c.expect(Tok::Semi)?;
                    c.expect(Tok::RBrace)?;
                    break;
                }
                let v = c.int()?;
                c.expect(Tok::Arrow)?;
                let t = c.ident()?;
                c.expect(Tok::Semi)?;
                cases.push((v, t));
            }
            Transition::Select { on, cases, default }
        } else {
            return c.unexpected("`extract`, `accept`, `reject`, `goto` or `select`");
        };
        states.push(ParserState { name, extracts, transition });
    }
    if states.is_empty() {
        return c.error("parser has no states");
    }
    Ok(ParserMachine { states })
}

fn deparser(c: &mut Cursor) -> PResult<Deparser> {
    Ok(Deparser { emits: emits(c)? })
}

fn emits(c: &mut Cursor) -> PResult<Vec<Emit>> {
    c.expect(Tok::LBrace)?;
    let mut out = Vec::new();
    while !c.eat(&Tok::RBrace) {
        if c.eat_kw("emit") {
            c.expect(Tok::LParen)?;
            out.push(Emit::Emit(c.ident()?));
            c.expect(Tok::RParen)?;
            c.expect(Tok::Semi)?;
        } else if c.eat_kw("if") {
            c.expect(Tok::LParen)?;
            let cond = c.expr()?;
            c.expect(Tok::RParen)?;
            out.push(Emit::If(cond, emits(c)?));
        } else {
            return c.unexpected("`emit` or `if`");
        }
    }
    Ok(out)
}

pub(crate) fn block(c: &mut Cursor) -> PResult<Block> {
    c.expect(Tok::LBrace)?;
    let mut out = Vec::new();
    while !c.eat(&Tok::RBrace) {
        out.push(stmt(c)?);
    }
    Ok(out)
}

fn call_args(c: &mut Cursor) -> PResult<Vec<Expr>> {
    c.expect(Tok::LParen)?;
    let mut args = Vec::new();
    if !c.eat(&Tok::RParen) {
        loop {
            args.push(c.expr()?);
            if c.eat(&Tok::RParen) {
                break;
            }
            c.expect(Tok::Comma)?;
        }
    }
    Ok(args)
}

fn arity(c: &Cursor, what: &str, args: &[Expr], n: usize) -> PResult<()> {
    if args.len() != n {
        return c.error(format!("`{what}` takes {n} argument(s), found {}", args.len()));
    }
    Ok(())
}

fn stmt(c: &mut Cursor) -> PResult<Stmt> {
    let Tok::Ident(head) = c.peek().clone() else { return c.unexpected("statement") };
    if head == "if" {
        c.bump();
        c.expect(Tok::LParen)?;
        let cond = c.expr()?;
        c.expect(Tok::RParen)?;
        let then = block(c)?;
        let els = if c.eat_kw("else") {
            if c.is_kw("if") {
                vec![stmt(c)?]
            } else {
                block(c)?
            }
        } else {
            vec![]
        };
        return Ok(Stmt::If(cond, then, els));
    }
    if head == "assert" {
        return c.error("assertions belong in the specification's local block");
    }
    if INTRINSICS.contains(&head.as_str()) && *c.peek_at(1) == Tok::LParen {
        c.bump();
        let s = match head.as_str() {
            "mark_drop" => {
                c.expect(Tok::LParen)?;
                c.expect(Tok::RParen)?;
                Stmt::MarkDrop
            }
            "recirculate" => {
                c.expect(Tok::LParen)?;
                c.expect(Tok::RParen)?;
                Stmt::Recirculate
            }
            "clone" => {
                c.expect(Tok::LParen)?;
                let spec = match c.ident()?.as_str() {
                    "I2E" => CloneSpec::I2E,
                    "I2I" => CloneSpec::I2I,
                    "E2E" => CloneSpec::E2E,
                    other => return c.error(format!("unknown clone kind `{other}`, expected I2E, I2I or E2E")),
                };
                c.expect(Tok::RParen)?;
                Stmt::Clone(spec)
            }
            _ => {
                let mut args = call_args(c)?;
                arity(c, "set_egress_port", &args, 1)?;
                Stmt::SetEgressPort(args.remove(0))
            }
        };
        c.expect(Tok::Semi)?;
        return Ok(s);
    }
    let method = matches!(c.peek_at(1), Tok::Dot)
        && matches!(c.peek_at(2), Tok::Ident(m) if m == "apply" || m == "read" || m == "write")
        && *c.peek_at(3) == Tok::LParen
        && head != "hdr"
        && head != "meta";
    if method {
        c.bump();
        c.bump();
        let m = c.ident()?;
        let mut args = call_args(c)?;
        let s = match m.as_str() {
            "apply" => {
                arity(c, "apply", &args, 0)?;
                Stmt::Apply(head)
            }
            "read" => {
                arity(c, "read", &args, 2)?;
                let index = args.pop().unwrap();
                let Expr::Var(dest) = args.pop().unwrap() else {
                    return c.error("first argument of `read` must be a field reference");
                };
                Stmt::RegRead { dest, reg: head, index }
            }
            _ => {
                arity(c, "write", &args, 2)?;
                let value = args.pop().unwrap();
                let index = args.pop().unwrap();
                Stmt::RegWrite { reg: head, index, value }
            }
        };
        c.expect(Tok::Semi)?;
        return Ok(s);
    }
    let pos = c.pos();
    let lv = c.path()?;
    if lv.index.is_some() {
        return Err(crate::syntax::ParseError {
            pos,
            msg: format!("indexed assignment to `{}`; use `{}.write(index, value)`", lv.segs.join("."), lv.segs.join(".")),
        });
    }
    c.expect(Tok::Assign)?;
    let e = c.expr()?;
    c.expect(Tok::Semi)?;
    Ok(Stmt::Assign(VarRef::Raw(lv), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_device() {
        let p = parse_raw("device d { header h { f: bit<8>; } ingress { } }").unwrap();
        assert_eq!(p.headers.len(), 1);
        assert!(p.ingress.is_empty());
    }

    #[test]
    fn else_if_chains_nest() {
        let p = parse_raw("device d { ingress { if (1) { mark_drop(); } else if (0) { recirculate(); } } }").unwrap();
        let Stmt::If(_, _, els) = &p.ingress[0] else { panic!() };
        assert!(matches!(els[0], Stmt::If(..)));
    }

    #[test]
    fn syntax_error_has_location() {
        let e = parse_raw("device d {\n ingress { mark_drop() }\n}").unwrap_err();
        assert_eq!((e.pos.line, e.pos.col), (2, 24));
    }

    #[test]
    fn indexed_assignment_is_rejected() {
        let e = parse_raw("device d { register r[2]: bit<8>; ingress { r[0] = 1; } }").unwrap_err();
        assert!(e.msg.contains("write"), "{e}");
    }
}
