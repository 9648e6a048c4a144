//! Name resolution and static checks for device programs.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::printer::stmt_line;
use crate::syntax::{Expr, ParseError, RawPath, UnOp, VarRef};

pub const MAX_INDEX_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PirError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("undeclared identifier: {0}")]
    Undeclared(String),
    #[error("width error: {0}")]
    Width(String),
    #[error("invalid program: {0}")]
    Invalid(String),
}

type R<T> = Result<T, PirError>;

fn dup_check<'a>(what: &str, names: impl IntoIterator<Item = &'a str>) -> R<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(PirError::Invalid(format!("duplicate {what} `{n}`")));
        }
    }
    Ok(())
}

fn width_ok(what: &str, w: u32) -> R<()> {
    if !(1..=64).contains(&w) {
        return Err(PirError::Width(format!("{what} has width {w}, expected 1..=64")));
    }
    Ok(())
}

/// Bind a raw path in device scope; `params` are the enclosing action's parameters.
pub fn resolve_var(prog: &DeviceProgram, params: &[FieldDecl], v: &VarRef) -> R<VarRef> {
    let VarRef::Raw(RawPath { segs, index, call }) = v else {
        return match v {
            VarRef::Reg { .. } | VarRef::At { .. } => Err(PirError::Invalid(format!("`{v}` is not allowed in device code"))),
            _ => Ok(v.clone()),
        };
    };
    let name = v.to_string();
    if index.is_some() {
        return Err(PirError::Invalid(format!("indexed reference `{name}`; registers are accessed with read/write")));
    }
    let s: Vec<&str> = segs.iter().map(|s| s.as_str()).collect();
    let r = match (s.as_slice(), *call) {
        (["hdr", h, "isValid"], true) => {
            prog.header(h).ok_or_else(|| PirError::Undeclared(format!("header `{h}` in `{name}`")))?;
            VarRef::Valid(h.to_string())
        }
        (_, true) => return Err(PirError::Invalid(format!("unknown call `{name}`"))),
        (["hdr", h, f], false) => {
            if prog.header(h).is_none() {
                return Err(PirError::Undeclared(format!("header `{h}` in `{name}`")));
            }
            if prog.field_width(h, f).is_none() {
                return Err(PirError::Undeclared(format!("field `{f}` of header `{h}` in `{name}`")));
            }
            VarRef::Field { header: h.to_string(), field: f.to_string() }
        }
        (["meta", "egress_port"], false) => VarRef::EgressPort,
        (["meta", m], false) => {
            prog.meta(m).ok_or_else(|| PirError::Undeclared(format!("metadata field `{m}` in `{name}`")))?;
            VarRef::Meta(m.to_string())
        }
        ([p], false) if params.iter().any(|f| f.name == *p) => VarRef::Param(p.to_string()),
        _ => return Err(PirError::Undeclared(format!("`{name}`"))),
    };
    Ok(r)
}

pub fn resolve_expr(prog: &DeviceProgram, params: &[FieldDecl], e: &Expr) -> R<Expr> {
    e.try_map_vars(&mut |v| resolve_var(prog, params, v).map(Expr::Var))
}

/// Static width of an expression; `None` for untyped literals.
pub fn static_width(prog: &DeviceProgram, params: &[FieldDecl], e: &Expr) -> Option<u32> {
    match e {
        Expr::Int(_) => None,
        Expr::Var(v) => prog.var_width(v, params),
        Expr::Unary(UnOp::Not, _) => Some(1),
        Expr::Unary(UnOp::BitNot, a) => static_width(prog, params, a),
        Expr::Binary(op, a, b) => {
            use crate::syntax::BinOp::*;
            if op.is_boolean() {
                return Some(1);
            }
            if matches!(op, Shl | Shr) {
                return static_width(prog, params, a);
            }
            match (static_width(prog, params, a), static_width(prog, params, b)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, None) => x,
                (None, y) => y,
            }
        }
    }
}

fn fits(v: u64, w: u32) -> bool {
    w >= 64 || v >> w == 0
}

struct Checker<'a> {
    prog: &'a DeviceProgram,
}

impl Checker<'_> {
    fn lvalue(&self, params: &[FieldDecl], v: &VarRef, s: &Stmt) -> R<VarRef> {
        let r = resolve_var(self.prog, params, v)?;
        match r {
            VarRef::Field { .. } | VarRef::Meta(_) => Ok(r),
            VarRef::EgressPort => Err(PirError::Invalid(format!("assign the egress port with set_egress_port in `{}`", stmt_line(s)))),
            _ => Err(PirError::Invalid(format!("`{r}` is not assignable in `{}`", stmt_line(s)))),
        }
    }

    fn register(&self, name: &str, s: &Stmt) -> R<&RegisterDecl> {
        self.prog
            .register(name)
            .ok_or_else(|| PirError::Undeclared(format!("register `{name}` in `{}`", stmt_line(s))))
    }

    fn index(&self, params: &[FieldDecl], index: &Expr, s: &Stmt) -> R<Expr> {
        let index = resolve_expr(self.prog, params, index)?;
        if let Some(w) = static_width(self.prog, params, &index) {
            if w > MAX_INDEX_WIDTH {
                return Err(PirError::Width(format!(
                    "register index is bit<{w}>, wider than bit<{MAX_INDEX_WIDTH}>, in `{}`",
                    stmt_line(s)
                )));
            }
        }
        Ok(index)
    }

    fn same_width(&self, params: &[FieldDecl], e: &Expr, reg: &RegisterDecl, role: &str, s: &Stmt) -> R<()> {
        match (e, static_width(self.prog, params, e)) {
            (Expr::Int(n), _) if !fits(*n, reg.width) => Err(PirError::Width(format!(
                "literal {n} does not fit register `{}` of bit<{}> in `{}`",
                reg.name,
                reg.width,
                stmt_line(s)
            ))),
            (_, Some(w)) if w != reg.width => Err(PirError::Width(format!(
                "{role} is bit<{w}> but register `{}` is bit<{}> in `{}`",
                reg.name,
                reg.width,
                stmt_line(s)
            ))),
            _ => Ok(()),
        }
    }

    fn block(&self, params: &[FieldDecl], b: &Block, in_action: bool) -> R<Block> {
        b.iter().map(|s| self.stmt(params, s, in_action)).collect()
    }

    fn stmt(&self, params: &[FieldDecl], s: &Stmt, in_action: bool) -> R<Stmt> {
        let p = self.prog;
        Ok(match s {
            Stmt::Assign(lv, e) => Stmt::Assign(self.lvalue(params, lv, s)?, resolve_expr(p, params, e)?),
            Stmt::If(c, a, b) => Stmt::If(resolve_expr(p, params, c)?, self.block(params, a, in_action)?, self.block(params, b, in_action)?),
            Stmt::RegRead { dest, reg, index } => {
                let r = self.register(reg, s)?;
                let dest = self.lvalue(params, dest, s)?;
                let index = self.index(params, index, s)?;
                self.same_width(params, &Expr::Var(dest.clone()), r, "destination", s)?;
                Stmt::RegRead { dest, reg: reg.clone(), index }
            }
            Stmt::RegWrite { reg, index, value } => {
                let r = self.register(reg, s)?;
                let index = self.index(params, index, s)?;
                let value = resolve_expr(p, params, value)?;
                self.same_width(params, &value, r, "value", s)?;
                Stmt::RegWrite { reg: reg.clone(), index, value }
            }
            Stmt::Apply(t) => {
                if in_action {
                    return Err(PirError::Invalid(format!("table `{t}` applied inside an action")));
                }
                p.table(t).ok_or_else(|| PirError::Undeclared(format!("table `{t}`")))?;
                Stmt::Apply(t.clone())
            }
            Stmt::SetEgressPort(e) => Stmt::SetEgressPort(resolve_expr(p, params, e)?),
            Stmt::AssertLocal { id, cond } => Stmt::AssertLocal {
                id: *id,
                cond: cond.try_map_vars(&mut |v| match v {
                    VarRef::Reg { .. } => Ok(Expr::Var(v.clone())),
                    _ => resolve_var(p, params, v).map(Expr::Var),
                })?,
            },
            Stmt::MarkDrop | Stmt::Clone(_) | Stmt::Recirculate => s.clone(),
        })
    }

    fn parser(&self, m: &ParserMachine) -> R<ParserMachine> {
        dup_check("parser state", m.states.iter().map(|s| s.name.as_str()))?;
        let names: HashSet<&str> = m.states.iter().map(|s| s.name.as_str()).collect();
        if !names.contains("start") {
            return Err(PirError::Invalid("parser has no `start` state".into()));
        }
        for n in ["accept", "reject"] {
            if names.contains(n) {
                return Err(PirError::Invalid(format!("parser state may not be named `{n}`")));
            }
        }
        let target = |t: &str| -> R<()> {
            if t == "accept" || t == "reject" || names.contains(t) {
                Ok(())
            } else {
                Err(PirError::Undeclared(format!("parser state `{t}`")))
            }
        };
        let mut states = Vec::new();
        for st in &m.states {
            for h in &st.extracts {
                self.prog.header(h).ok_or_else(|| PirError::Undeclared(format!("header `{h}` extracted in state `{}`", st.name)))?;
            }
            let transition = match &st.transition {
                Transition::Goto(t) => {
                    target(t)?;
                    st.transition.clone()
                }
                Transition::Select { on, cases, default } => {
                    let on = resolve_expr(self.prog, &[], on)?;
                    for (_, t) in cases {
                        target(t)?;
                    }
                    target(default)?;
                    Transition::Select { on, cases: cases.clone(), default: default.clone() }
                }
                t => t.clone(),
            };
            states.push(ParserState { name: st.name.clone(), extracts: st.extracts.clone(), transition });
        }
        // cycle check by depth-first colouring
        let succ: HashMap<&str, Vec<&str>> = m
            .states
            .iter()
            .map(|s| {
                let v: Vec<&str> = match &s.transition {
                    Transition::Goto(t) => vec![t.as_str()],
                    Transition::Select { cases, default, .. } => {
                        cases.iter().map(|(_, t)| t.as_str()).chain(std::iter::once(default.as_str())).collect()
                    }
                    _ => vec![],
                };
                (s.name.as_str(), v)
            })
            .collect();
        fn visit<'a>(n: &'a str, succ: &HashMap<&'a str, Vec<&'a str>>, colour: &mut HashMap<&'a str, u8>) -> R<()> {
            match colour.get(n) {
                Some(1) => return Err(PirError::Invalid(format!("parser states form a loop through `{n}`"))),
                Some(_) => return Ok(()),
                None => {}
            }
            colour.insert(n, 1);
            for &t in succ.get(n).into_iter().flatten() {
                if succ.contains_key(t) {
                    visit(t, succ, colour)?;
                }
            }
            colour.insert(n, 2);
            Ok(())
        }
        let mut colour = HashMap::new();
        for s in &m.states {
            visit(&s.name, &succ, &mut colour)?;
        }
        Ok(ParserMachine { states })
    }

    fn emits(&self, es: &[Emit]) -> R<Vec<Emit>> {
        es.iter()
            .map(|e| match e {
                Emit::Emit(h) => {
                    self.prog.header(h).ok_or_else(|| PirError::Undeclared(format!("header `{h}` in emit")))?;
                    Ok(e.clone())
                }
                Emit::If(c, body) => Ok(Emit::If(resolve_expr(self.prog, &[], c)?, self.emits(body)?)),
            })
            .collect()
    }
}

/// Resolve every reference and check all static rules. Idempotent on resolved programs.
pub fn validate(prog: &DeviceProgram) -> R<DeviceProgram> {
    dup_check("header", prog.headers.iter().map(|h| h.name.as_str()))?;
    for h in &prog.headers {
        dup_check(&format!("field in header `{}`", h.name), h.fields.iter().map(|f| f.name.as_str()))?;
        for f in &h.fields {
            width_ok(&format!("field `{}.{}`", h.name, f.name), f.width)?;
        }
    }
    dup_check("metadata field", prog.metadata.iter().map(|m| m.name.as_str()))?;
    for m in &prog.metadata {
        if m.name == "egress_port" {
            return Err(PirError::Invalid("`egress_port` is a built-in metadata field".into()));
        }
        width_ok(&format!("metadata field `{}`", m.name), m.width)?;
    }
    dup_check("register", prog.registers.iter().map(|r| r.name.as_str()))?;
    for r in &prog.registers {
        width_ok(&format!("register `{}`", r.name), r.width)?;
        if r.size == 0 {
            return Err(PirError::Invalid(format!("register `{}` has size 0", r.name)));
        }
    }
    dup_check("table", prog.tables.iter().map(|t| t.name.as_str()))?;
    let ck = Checker { prog };
    let mut tables = Vec::new();
    for t in &prog.tables {
        dup_check(&format!("action in table `{}`", t.name), t.actions.iter().map(|a| a.name.as_str()))?;
        let key = resolve_expr(prog, &[], &t.key)?;
        if !matches!(key, Expr::Var(VarRef::Field { .. } | VarRef::Meta(_) | VarRef::EgressPort)) {
            return Err(PirError::Invalid(format!("key of table `{}` must be a field reference, found `{key}`", t.name)));
        }
        let mut actions = Vec::new();
        for a in &t.actions {
            dup_check(&format!("parameter of action `{}`", a.name), a.params.iter().map(|p| p.name.as_str()))?;
            for p in &a.params {
                width_ok(&format!("parameter `{}` of action `{}`", p.name, a.name), p.width)?;
            }
            actions.push(ActionDecl { name: a.name.clone(), params: a.params.clone(), body: ck.block(&a.params, &a.body, true)? });
        }
        let Some(def) = t.action(&t.default.name) else {
            return Err(PirError::Invalid(format!("default action `{}` of table `{}` is not declared", t.default.name, t.name)));
        };
        check_args(t, def, &t.default.args, "default action")?;
        tables.push(TableDecl { name: t.name.clone(), key, actions, default: t.default.clone() });
    }
    let out = DeviceProgram {
        name: prog.name.clone(),
        headers: prog.headers.clone(),
        metadata: prog.metadata.clone(),
        registers: prog.registers.clone(),
        tables,
        parser: ck.parser(&prog.parser)?,
        egress_parser: prog.egress_parser.as_ref().map(|m| ck.parser(m)).transpose()?,
        ingress: ck.block(&[], &prog.ingress, false)?,
        egress: ck.block(&[], &prog.egress, false)?,
        deparser: Deparser { emits: ck.emits(&prog.deparser.emits)? },
        egress_deparser: prog.egress_deparser.as_ref().map(|d| ck.emits(&d.emits).map(|emits| Deparser { emits })).transpose()?,
    };
    Ok(out)
}

pub(crate) fn check_args(t: &TableDecl, a: &ActionDecl, args: &[u64], what: &str) -> R<()> {
    if args.len() != a.params.len() {
        return Err(PirError::Invalid(format!(
            "{what} `{}` of table `{}` takes {} argument(s), found {}",
            a.name,
            t.name,
            a.params.len(),
            args.len()
        )));
    }
    for (v, p) in args.iter().zip(&a.params) {
        if !fits(*v, p.width) {
            return Err(PirError::Width(format!("argument {v} does not fit parameter `{}` of bit<{}>", p.name, p.width)));
        }
    }
    Ok(())
}

/// Parse and validate a `.pir` source.
pub fn parse_device_program(src: &str) -> R<DeviceProgram> {
    let raw = super::parser::parse_raw(src)?;
    validate(&raw)
}
