//! Translation of a built system into SPIN's input language.

use std::collections::BTreeSet;

use super::model::SystemModel;
use crate::intent::{HostInstr, Ltl};
use crate::pir::{Deparser, Emit, ParserMachine, Stmt, Transition, EGRESS_PORT_WIDTH};
use crate::semantics::DeviceCtx;
use crate::syntax::{BinOp, Expr, UnOp, VarRef};

fn ident(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn mask_of(w: u32) -> Option<u64> {
    (w < 31).then(|| (1u64 << w) - 1)
}

struct Out {
    text: String,
    depth: usize,
}

impl Out {
    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.text.push_str("    ");
        }
        self.text.push_str(s);
        self.text.push('\n');
    }

    fn open(&mut self, s: &str) {
        self.line(s);
        self.depth += 1;
    }

    fn close(&mut self, s: &str) {
        self.depth -= 1;
        self.line(s);
    }
}

/// How expressions inside one device body are named.
struct Scope<'a> {
    alias: String,
    pkt: &'a str,
    params: Vec<(String, u64)>,
}

fn var(v: &VarRef, sc: &Scope) -> String {
    match v {
        VarRef::Field { header, field } => format!("{}.f_{}_{}", sc.pkt, ident(header), ident(field)),
        VarRef::Valid(h) => format!("{}.valid_{}", sc.pkt, ident(h)),
        VarRef::Meta(m) => format!("{}.m_{}", sc.pkt, ident(m)),
        VarRef::EgressPort => format!("{}.egress_spec", sc.pkt),
        VarRef::Param(p) => sc.params.iter().find(|(n, _)| n == p).map(|(_, v)| v.to_string()).unwrap_or_else(|| "0".into()),
        VarRef::Reg { name, index } => format!("{}_{}[{index}]", ident(&sc.alias), ident(name)),
        VarRef::At { actor, var } => match &**var {
            VarRef::Reg { name, index } => format!("{}_{}[{index}]", ident(actor), ident(name)),
            other => obs_name(actor, other),
        },
        VarRef::Raw(r) => ident(&r.segs.join("_")),
    }
}

fn obs_name(actor: &str, v: &VarRef) -> String {
    let tail = match v {
        VarRef::Field { header, field } => format!("{}_{}", ident(header), ident(field)),
        VarRef::Meta(m) => format!("meta_{}", ident(m)),
        VarRef::EgressPort => "egress_port".into(),
        other => ident(&other.to_string()),
    };
    format!("obs_{}_{tail}", ident(actor))
}

fn expr(e: &Expr, sc: &Scope) -> String {
    match e {
        Expr::Int(n) => n.to_string(),
        Expr::Var(v) => var(v, sc),
        Expr::Unary(UnOp::Not, a) => format!("!({})", expr(a, sc)),
        Expr::Unary(UnOp::BitNot, a) => format!("~({})", expr(a, sc)),
        Expr::Binary(BinOp::Implies, a, b) => format!("(!({}) || ({}))", expr(a, sc), expr(b, sc)),
        Expr::Binary(op, a, b) => format!("({} {} {})", expr(a, sc), op.symbol(), expr(b, sc)),
    }
}

fn masked(e: String, w: u32) -> String {
    match mask_of(w) {
        Some(m) => format!("({e}) & {m}"),
        None => e,
    }
}

fn stmts(o: &mut Out, ctx: &DeviceCtx, body: &[Stmt], sc: &Scope) {
    if body.is_empty() {
        o.line("skip;");
    }
    for s in body {
        stmt(o, ctx, s, sc);
    }
}

fn width(ctx: &DeviceCtx, v: &VarRef) -> u32 {
    ctx.prog.var_width(v, &[]).unwrap_or(32)
}

fn stmt(o: &mut Out, ctx: &DeviceCtx, s: &Stmt, sc: &Scope) {
    let a = ident(&sc.alias);
    match s {
        Stmt::Assign(lv, e) => o.line(&format!("{} = {};", var(lv, sc), masked(expr(e, sc), width(ctx, lv)))),
        Stmt::If(c, t, f) => {
            o.open("if");
            o.open(&format!(":: {} ->", expr(c, sc)));
            stmts(o, ctx, t, sc);
            o.close(":: else ->");
            o.depth += 1;
            stmts(o, ctx, f, sc);
            o.depth -= 1;
            o.close("fi;");
        }
        Stmt::RegRead { dest, reg, index } => {
            let size = ctx.prog.register(reg).map(|r| r.size).unwrap_or(1);
            o.line(&format!("idx = {};", expr(index, sc)));
            o.line(&format!("assert(idx < {size});"));
            o.line(&format!("{} = {};", var(dest, sc), masked(format!("{a}_{}[idx]", ident(reg)), width(ctx, dest))));
        }
        Stmt::RegWrite { reg, index, value } => {
            let r = ctx.prog.register(reg);
            let size = r.map(|r| r.size).unwrap_or(1);
            o.line(&format!("idx = {};", expr(index, sc)));
            o.line(&format!("assert(idx < {size});"));
            o.line(&format!("{a}_{}[idx] = {};", ident(reg), masked(expr(value, sc), r.map(|r| r.width).unwrap_or(32))));
        }
        Stmt::Apply(t) => {
            let Some(table) = ctx.prog.table(t) else { return };
            let key = expr(&table.key, sc);
            o.open("if");
            let entries = ctx.entries.tables.get(t).cloned().unwrap_or_default();
            let mut seen = BTreeSet::new();
            for e in entries.iter().filter(|e| seen.insert(e.key)) {
                o.open(&format!(":: {key} == {} -> /* {}.{} */", e.key, t, e.action.name));
                action(o, ctx, table.action(&e.action.name), &e.action.args, sc);
                o.depth -= 1;
            }
            o.open(&format!(":: else -> /* {}.{} */", t, table.default.name));
            action(o, ctx, table.action(&table.default.name), &table.default.args, sc);
            o.close("fi;");
        }
        Stmt::MarkDrop => o.line(&format!("{}.drop_flag = true;", sc.pkt)),
        Stmt::Clone(c) => o.line(&format!("{}.clone_spec = {};", sc.pkt, clone_name(c.name()))),
        Stmt::Recirculate => o.line(&format!("{}.recirc_flag = true;", sc.pkt)),
        Stmt::SetEgressPort(e) => o.line(&format!("{}.egress_spec = {};", sc.pkt, masked(expr(e, sc), EGRESS_PORT_WIDTH))),
        Stmt::AssertLocal { id, cond } => o.line(&format!("assert({}); /* local {}:{id} */", expr(cond, sc), sc.alias)),
    }
}

fn clone_name(n: &str) -> &str {
    if n == "NONE" {
        "NO_CLONE"
    } else {
        n
    }
}

fn action(o: &mut Out, ctx: &DeviceCtx, a: Option<&crate::pir::ActionDecl>, args: &[u64], sc: &Scope) {
    let Some(a) = a else {
        o.line("skip;");
        return;
    };
    let params = a.params.iter().zip(args).map(|(p, &v)| (p.name.clone(), v)).collect();
    let inner = Scope { alias: sc.alias.clone(), pkt: sc.pkt, params };
    stmts(o, ctx, &a.body, &inner);
}

fn parser(o: &mut Out, m: &ParserMachine, state: &str, sc: &Scope, depth: usize) {
    if depth > 32 {
        o.line("ok = false;");
        return;
    }
    match state {
        "accept" => return o.line("skip;"),
        "reject" => return o.line(&format!("ok = false; {}.drop_flag = true;", sc.pkt)),
        _ => {}
    }
    let Some(st) = m.state(state) else { return o.line("ok = false;") };
    for h in &st.extracts {
        o.line(&format!("{}.valid_{} = true;", sc.pkt, ident(h)));
    }
    match &st.transition {
        Transition::Accept => o.line("skip;"),
        Transition::Reject => parser(o, m, "reject", sc, depth + 1),
        Transition::Goto(t) => parser(o, m, t, sc, depth + 1),
        Transition::Select { on, cases, default } => {
            let on = expr(on, sc);
            o.open("if");
            for (v, t) in cases {
                o.open(&format!(":: {on} == {v} ->"));
                parser(o, m, t, sc, depth + 1);
                o.depth -= 1;
            }
            o.open(":: else ->");
            parser(o, m, default, sc, depth + 1);
            o.close("fi;");
        }
    }
}

fn deparser(o: &mut Out, m: &SystemModel, d: &Deparser, sc: &Scope) {
    fn walk(o: &mut Out, es: &[Emit], sc: &Scope) {
        for e in es {
            match e {
                Emit::Emit(h) => o.line(&format!("em_{} = true;", ident(h))),
                Emit::If(c, body) => {
                    o.open("if");
                    o.open(&format!(":: {} ->", expr(c, sc)));
                    walk(o, body, sc);
                    o.line("skip;");
                    o.close(":: else -> skip");
                    o.line("fi;");
                }
            }
        }
    }
    for h in &m.layout.headers {
        o.line(&format!("em_{} = false;", ident(&h.name)));
    }
    walk(o, &d.emits, sc);
    for h in &m.layout.headers {
        o.line(&format!("{}.valid_{h} = em_{h};", sc.pkt, h = ident(&h.name)));
    }
}

fn ltl(f: &Ltl, sc: &Scope) -> String {
    match f {
        Ltl::Atom(e) => expr(e, sc),
        Ltl::Not(a) => format!("!({})", ltl(a, sc)),
        Ltl::And(a, b) => format!("({} && {})", ltl(a, sc), ltl(b, sc)),
        Ltl::Or(a, b) => format!("({} || {})", ltl(a, sc), ltl(b, sc)),
        Ltl::Implies(a, b) => format!("({} -> {})", ltl(a, sc), ltl(b, sc)),
        Ltl::Always(a) => format!("[] ({})", ltl(a, sc)),
        Ltl::Eventually(a) => format!("<> ({})", ltl(a, sc)),
        Ltl::Next(a) => format!("X ({})", ltl(a, sc)),
        Ltl::Until(a, b) => format!("(({}) U ({}))", ltl(a, sc), ltl(b, sc)),
    }
}

/// Summary of an export: process and channel names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportSummary {
    pub processes: Vec<String>,
    pub channels: Vec<String>,
    pub ltl_blocks: usize,
}

pub fn export_promela(m: &SystemModel) -> (String, ExportSummary) {
    let mut o = Out { text: String::new(), depth: 0 };
    let b = &m.bounds;
    o.line("/* pipecheck model: one process per device, one ingress channel per device */");
    o.line(&format!("#define Q_IN {}", b.q_in));
    o.line(&format!("#define Q_EG {}", b.q_eg));
    o.line(&format!("#define RECIRC_BOUND {}", b.recirc));
    o.line("");
    o.line("mtype = { NO_CLONE, I2E, I2I, E2E };");
    o.line("");
    o.open("typedef packet_t {");
    o.line("mtype clone_spec;");
    o.line("bool drop_flag;");
    o.line("bool recirc_flag;");
    o.line("bool is_i2i_clone;");
    o.line("int egress_spec;");
    o.line("byte recirc_count;");
    for h in &m.layout.headers {
        o.line(&format!("bool valid_{};", ident(&h.name)));
        for f in &h.fields {
            o.line(&format!("int f_{}_{}; /* bit<{}> */", ident(&h.name), ident(&f.name), f.width));
        }
    }
    let mut metas = BTreeSet::new();
    for c in &m.ctxs {
        for mf in &c.prog.metadata {
            metas.insert(ident(&mf.name));
        }
    }
    for mf in &metas {
        o.line(&format!("int m_{mf};"));
    }
    o.close("}");
    o.line("");

    let mut channels = Vec::new();
    for a in &m.aliases {
        let c = format!("{}_ingress", ident(a));
        o.line(&format!("chan {c} = [Q_IN] of {{ packet_t }};"));
        channels.push(c);
    }
    for (a, c) in m.aliases.iter().zip(&m.ctxs) {
        for r in &c.prog.registers {
            o.line(&format!("int {}_{}[{}]; /* bit<{}> */", ident(a), ident(&r.name), r.size, r.width));
        }
    }
    for (a, v) in &m.observed {
        o.line(&format!("int {};", obs_name(&m.aliases[*a], v)));
    }
    for (i, l) in m.links.links.iter().enumerate() {
        if l.loss > 0 {
            o.line(&format!("byte loss_{i} = {};", l.loss));
        }
    }
    o.line("");

    o.open("inline wire_image(pkt) {");
    for h in &m.layout.headers {
        o.open("if");
        o.open(&format!(":: !pkt.valid_{} ->", ident(&h.name)));
        for f in &h.fields {
            o.line(&format!("pkt.f_{}_{} = 0;", ident(&h.name), ident(&f.name)));
        }
        o.close(":: else -> skip");
        o.line("fi;");
    }
    o.line("skip");
    o.close("}");
    o.line("");
    o.open("inline to_wire(pkt) {");
    o.line("wire_image(pkt);");
    for mf in &metas {
        o.line(&format!("pkt.m_{mf} = 0;"));
    }
    o.line("pkt.clone_spec = NO_CLONE; pkt.drop_flag = false; pkt.recirc_flag = false;");
    o.line("pkt.is_i2i_clone = false; pkt.egress_spec = 0; pkt.recirc_count = 0");
    o.close("}");
    o.line("");

    // Links: the only place a device sends into another device's ingress.
    o.open("inline send_to(self, port, pkt) {");
    o.line("to_wire(pkt);");
    o.open("if");
    for (d, a) in m.aliases.iter().enumerate() {
        let mine: Vec<(usize, &crate::semantics::Link)> = m.links.links.iter().enumerate().filter(|(_, l)| l.from == d).collect();
        let explicit: Vec<u64> = mine.iter().filter_map(|(_, l)| l.port).collect();
        for (i, l) in &mine {
            let guard = match l.port {
                Some(p) => format!("self == {d} && port == {p}"),
                None if explicit.is_empty() => format!("self == {d}"),
                None => format!("self == {d} && {}", explicit.iter().map(|p| format!("port != {p}")).collect::<Vec<_>>().join(" && ")),
            };
            let target = &channels[l.to];
            o.open(&format!(":: {guard} -> /* {a} -> {} */", m.aliases[l.to]));
            if l.loss > 0 {
                o.open("if");
                o.line(&format!(":: true -> assert(len({target}) < Q_IN); {target} ! pkt"));
                o.line(&format!(":: loss_{i} > 0 -> loss_{i}--"));
                o.close("fi");
            } else {
                o.line(&format!("assert(len({target}) < Q_IN);"));
                o.line(&format!("{target} ! pkt"));
            }
            o.depth -= 1;
        }
    }
    o.line(":: else -> skip");
    o.close("fi");
    o.close("}");
    o.line("");

    o.open("inline TrafficManager(p, c) {");
    o.open("if");
    o.line(":: p.drop_flag -> skip");
    o.open(":: else ->");
    o.open("if");
    o.open(":: p.clone_spec == I2E ->");
    o.line("c = p;");
    o.line("egress_q ! p;");
    o.line("egress_q ! c");
    o.depth -= 1;
    o.open(":: p.clone_spec == I2I ->");
    o.line("c = p;");
    o.line("c.is_i2i_clone = true;");
    o.line("egress_q ! p;");
    o.line("egress_q ! c");
    o.depth -= 1;
    o.line(":: else -> egress_q ! p");
    o.close("fi");
    o.close("fi");
    o.close("}");
    o.line("");

    o.open("inline FinalDispatch(self, pe, c) {");
    o.open("if");
    o.line(":: pe.drop_flag -> skip");
    o.open(":: pe.recirc_flag || pe.is_i2i_clone ->");
    o.line("assert(pe.recirc_count < RECIRC_BOUND);");
    o.line("assert(len(my_ingress) < Q_IN);");
    o.line("wire_image(pe);");
    o.line("pe.clone_spec = NO_CLONE; pe.drop_flag = false; pe.recirc_flag = false; pe.is_i2i_clone = false;");
    o.line("pe.recirc_count++;");
    o.line("my_ingress ! pe");
    o.depth -= 1;
    o.open(":: pe.clone_spec == E2E ->");
    o.line("c = pe;");
    o.line("assert(len(reinject_q) < Q_EG);");
    o.line("reinject_q ! c;");
    o.line("send_to(self, pe.egress_spec, pe)");
    o.depth -= 1;
    o.line(":: else -> send_to(self, pe.egress_spec, pe)");
    o.close("fi");
    o.close("}");
    o.line("");

    let mut processes = Vec::new();
    for (d, (a, ctx)) in m.aliases.iter().zip(&m.ctxs).enumerate() {
        let ai = ident(a);
        let sc = Scope { alias: a.clone(), pkt: "p", params: vec![] };
        let esc = Scope { alias: a.clone(), pkt: "pe", params: vec![] };
        let pname = format!("device_{ai}");
        o.open(&format!("proctype {pname}(chan my_ingress) {{"));
        o.line("chan egress_q = [Q_EG] of { packet_t };");
        o.line("chan reinject_q = [Q_EG] of { packet_t };");
        o.line("packet_t p;");
        o.line("packet_t pe;");
        o.line("packet_t c;");
        o.line("bool ok;");
        o.line("int idx;");
        for h in &m.layout.headers {
            o.line(&format!("bool em_{};", ident(&h.name)));
        }
        o.open("do");
        o.open(":: my_ingress ? p ->");
        o.open("atomic {");
        o.line("/* ingress parser */");
        o.line("ok = true;");
        for h in &m.layout.headers {
            o.line(&format!("p.valid_{} = false;", ident(&h.name)));
        }
        parser(&mut o, &ctx.prog.parser, "start", &sc, 0);
        o.open("if");
        o.open(":: ok ->");
        o.line("/* ingress */");
        stmts(&mut o, ctx, &ctx.prog.ingress, &sc);
        o.line("/* ingress deparser */");
        deparser(&mut o, m, &ctx.prog.deparser, &sc);
        o.depth -= 1;
        o.line(":: else -> skip");
        o.close("fi;");
        o.line("TrafficManager(p, c);");
        o.open("do");
        o.open(":: len(reinject_q) > 0 || len(egress_q) > 0 ->");
        o.open("if");
        o.line(":: len(reinject_q) > 0 -> reinject_q ? pe");
        o.line(":: else -> egress_q ? pe");
        o.close("fi;");
        o.line("pe.clone_spec = NO_CLONE;");
        o.line("ok = true;");
        for h in &m.layout.headers {
            o.line(&format!("pe.valid_{} = false;", ident(&h.name)));
        }
        parser(&mut o, ctx.prog.egress_parser(), "start", &esc, 0);
        o.open("if");
        o.open(":: ok ->");
        o.line("/* egress */");
        stmts(&mut o, ctx, &ctx.prog.egress, &esc);
        deparser(&mut o, m, ctx.prog.egress_deparser(), &esc);
        o.depth -= 1;
        o.line(":: else -> skip");
        o.close("fi;");
        for (b, v) in &m.observed {
            if *b == d {
                o.line(&format!("{} = {};", obs_name(a, v), var(v, &esc)));
            }
        }
        o.line(&format!("FinalDispatch({d}, pe, c)"));
        o.depth -= 1;
        o.line(":: else -> break");
        o.close("od");
        o.close("}");
        o.depth -= 1;
        o.close("od");
        o.line("}");
        o.line("");
        processes.push(pname);
    }

    for h in &m.hosts {
        let pname = format!("host_{}", ident(&h.name));
        o.open(&format!("proctype {pname}() {{"));
        o.line("packet_t p;");
        for (pc, ins) in h.code.iter().enumerate() {
            o.line(&format!("L{pc}:"));
            match ins {
                HostInstr::Send { target, fields } => {
                    o.line("to_wire(p);");
                    for hd in &m.layout.headers {
                        o.line(&format!("p.valid_{} = false;", ident(&hd.name)));
                    }
                    for f in fields {
                        if m.layout.field_slot(&f.header, &f.field).is_some() {
                            o.line(&format!("p.valid_{} = true;", ident(&f.header)));
                            o.line(&format!("p.f_{}_{} = {};", ident(&f.header), ident(&f.field), f.value));
                        }
                    }
                    o.line(&format!("{} ! p;", channels[*target]));
                }
                HostInstr::Choice(alts) => {
                    o.open("if");
                    for a in alts {
                        o.line(&format!(":: goto L{a}"));
                    }
                    o.close("fi;");
                }
                HostInstr::Jump(t) => o.line(&format!("goto L{t};")),
            }
        }
        o.line(&format!("L{}:", h.code.len()));
        o.line("skip");
        o.line("}");
        o.line("");
        processes.push(pname);
    }

    o.open("init {");
    o.open("atomic {");
    for (a, c) in m.aliases.iter().zip(&channels) {
        o.line(&format!("run device_{}({c});", ident(a)));
    }
    for h in &m.hosts {
        o.line(&format!("run host_{}();", ident(&h.name)));
    }
    o.close("}");
    o.close("}");

    for g in &m.globals {
        o.line("");
        let sc = Scope { alias: String::new(), pkt: "p", params: vec![] };
        o.line(&format!("ltl {} {{ {} }}", ident(&g.name), ltl(&g.formula, &sc)));
    }
    let summary = ExportSummary { processes, channels, ltl_blocks: m.globals.len() };
    (o.text, summary)
}

/// Lightweight well-formedness check: balanced delimiters and block keywords.
pub fn structural_check(text: &str) -> Result<(), String> {
    let mut stack: Vec<&str> = Vec::new();
    let mut in_comment = false;
    for (ln, line) in text.lines().enumerate() {
        let mut clean = String::new();
        let mut rest = line;
        loop {
            if in_comment {
                match rest.find("*/") {
                    Some(i) => {
                        in_comment = false;
                        rest = &rest[i + 2..];
                    }
                    None => break,
                }
            } else {
                match rest.find("/*") {
                    Some(i) => {
                        clean.push_str(&rest[..i]);
                        in_comment = true;
                        rest = &rest[i + 2..];
                    }
                    None => {
                        clean.push_str(rest);
                        break;
                    }
                }
            }
        }
        let mut word = String::new();
        let chars: Vec<char> = clean.chars().chain([' ']).collect();
        for ch in chars {
            if ch.is_ascii_alphanumeric() || ch == '_' {
                word.push(ch);
                continue;
            }
            match word.as_str() {
                "if" => stack.push("if"),
                "do" => stack.push("do"),
                "fi" | "od" => {
                    let want = if word == "fi" { "if" } else { "do" };
                    if stack.pop() != Some(want) {
                        return Err(format!("line {}: unmatched `{word}`", ln + 1));
                    }
                }
                _ => {}
            }
            word.clear();
            let close = match ch {
                '{' | '(' | '[' => {
                    stack.push(match ch {
                        '{' => "{",
                        '(' => "(",
                        _ => "[",
                    });
                    None
                }
                '}' => Some("{"),
                ')' => Some("("),
                ']' => Some("["),
                _ => None,
            };
            if let Some(want) = close {
                if stack.pop() != Some(want) {
                    return Err(format!("line {}: unbalanced `{ch}`", ln + 1));
                }
            }
        }
    }
    if in_comment {
        return Err("unterminated comment".into());
    }
    match stack.last() {
        None => Ok(()),
        Some(open) => Err(format!("unclosed `{open}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::model::tests::system;

    const FWD: &str = "device d { header h { v: bit<8>; } register seen[2]: bit<8>;
        table t { key = hdr.h.v; action set(x: bit<8>) { seen.write(0, x); } action none() { } default = none(); }
        parser { start: extract(h); select(hdr.h.v) { 0 -> reject; default -> accept; } } deparser { if (hdr.h.v == 1) { emit(h); } }
        ingress { t.apply(); set_egress_port(10); if (hdr.h.v == 3) { clone(I2I); } } egress { clone(E2E); } }";

    #[test]
    fn one_device_one_link() {
        let m = system(FWD, "import a from \"x\"; import b from \"x\"; link a -> b 10; host h { send a { h.v = 1 }; }", &["a", "b"]);
        let (text, s) = export_promela(&m);
        structural_check(&text).unwrap();
        assert_eq!(s.processes, vec!["device_a", "device_b", "host_h"]);
        assert_eq!(text.matches("proctype device_").count(), 2);
        assert_eq!(text.matches("chan a_ingress = [Q_IN]").count(), 1);
        assert!(text.contains("assert(len(my_ingress) < Q_IN);"));
        assert!(text.contains(":: self == 0 && port == 10 -> /* a -> b */"));
        assert!(text.contains("pe.is_i2i_clone"));
        assert!(text.contains(":: pe.clone_spec == E2E ->"));
        assert!(text.contains("run device_a(a_ingress);"));
    }

    #[test]
    fn properties_become_ltl_blocks() {
        let m = system(
            FWD,
            "import a from \"x\"; import b from \"x\"; global { ltl mono { [] { a.seen[0] >= b.seen[0] && a.seen[1] >= b.seen[1] } }; }",
            &["a", "b"],
        );
        let (text, s) = export_promela(&m);
        assert_eq!(s.ltl_blocks, 1);
        assert!(text.contains("ltl mono { [] (((a_seen[0] >= b_seen[0]) && (a_seen[1] >= b_seen[1]))) }"), "{text}");
    }

    #[test]
    fn lossy_links_get_a_budget() {
        let m = system(FWD, "import a from \"x\"; import b from \"x\"; link a -> b ALL lossy(2);", &["a", "b"]);
        let (text, _) = export_promela(&m);
        assert!(text.contains("byte loss_0 = 2;"));
        assert!(text.contains(":: loss_0 > 0 -> loss_0--"));
        structural_check(&text).unwrap();
    }

    #[test]
    fn structural_check_catches_imbalance() {
        assert!(structural_check("init { if :: skip fi }").is_ok());
        assert!(structural_check("init { if :: skip }").is_err());
        assert!(structural_check("init { do :: break fi }").is_err());
        assert!(structural_check("/* { */ init { }").is_ok());
    }
}
