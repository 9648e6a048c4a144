//! Pretty printer; `parse_device_program(print(p)) == p` for user-written programs.

use std::fmt::Write;

use super::ast::*;

/// One-line rendering of a statement, used in diagnostics and traces.
pub fn stmt_line(s: &Stmt) -> String {
    match s {
        Stmt::Assign(lv, e) => format!("{lv} = {e};"),
        Stmt::If(c, ..) => format!("if ({c})"),
        Stmt::RegRead { dest, reg, index } => format!("{reg}.read({dest}, {index});"),
        Stmt::RegWrite { reg, index, value } => format!("{reg}.write({index}, {value});"),
        Stmt::Apply(t) => format!("{t}.apply();"),
        Stmt::MarkDrop => "mark_drop();".into(),
        Stmt::Clone(c) => format!("clone({});", c.name()),
        Stmt::Recirculate => "recirculate();".into(),
        Stmt::SetEgressPort(e) => format!("set_egress_port({e});"),
        Stmt::AssertLocal { cond, .. } => format!("assert({cond});"),
    }
}

fn indent(out: &mut String, n: usize) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

pub fn print_block(out: &mut String, b: &[Stmt], depth: usize) {
    for s in b {
        indent(out, depth);
        match s {
            Stmt::If(c, then, els) => {
                let _ = writeln!(out, "if ({c}) {{");
                print_block(out, then, depth + 1);
                indent(out, depth);
                if els.is_empty() {
                    out.push_str("}\n");
                } else {
                    out.push_str("} else {\n");
                    print_block(out, els, depth + 1);
                    indent(out, depth);
                    out.push_str("}\n");
                }
            }
            // injected checks are not device code
            Stmt::AssertLocal { id, cond } => {
                let _ = writeln!(out, "// local assert #{id}: {cond}");
            }
            _ => {
                out.push_str(&stmt_line(s));
                out.push('\n');
            }
        }
    }
}

fn print_parser(out: &mut String, kw: &str, m: &ParserMachine) {
    let _ = writeln!(out, "  {kw} {{");
    for s in &m.states {
        let _ = write!(out, "    {}:", s.name);
        for h in &s.extracts {
            let _ = write!(out, " extract({h});");
        }
        match &s.transition {
            Transition::Accept => out.push_str(" accept;\n"),
            Transition::Reject => out.push_str(" reject;\n"),
            Transition::Goto(t) => {
                let _ = writeln!(out, " goto {t};");
            }
            Transition::Select { on, cases, default } => {
                let _ = writeln!(out, " select({on}) {{");
                for (v, t) in cases {
                    let _ = writeln!(out, "      {v} -> {t};");
                }
                let _ = writeln!(out, "      default -> {default};");
                out.push_str("    }\n");
            }
        }
    }
    out.push_str("  }\n");
}

fn print_emits(out: &mut String, es: &[Emit], depth: usize) {
    for e in es {
        indent(out, depth);
        match e {
            Emit::Emit(h) => {
                let _ = writeln!(out, "emit({h});");
            }
            Emit::If(c, body) => {
                let _ = writeln!(out, "if ({c}) {{");
                print_emits(out, body, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
    }
}

fn params(ps: &[FieldDecl]) -> String {
    ps.iter().map(|p| format!("{}: bit<{}>", p.name, p.width)).collect::<Vec<_>>().join(", ")
}

pub fn print_program(p: &DeviceProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "device {} {{", p.name);
    for h in &p.headers {
        let _ = write!(out, "  header {} {{", h.name);
        for f in &h.fields {
            let _ = write!(out, " {}: bit<{}>;", f.name, f.width);
        }
        out.push_str(" }\n");
    }
    if !p.metadata.is_empty() {
        out.push_str("  metadata {\n");
        for m in &p.metadata {
            let t = if m.transient { "transient " } else { "" };
            let _ = writeln!(out, "    {t}{}: bit<{}>;", m.name, m.width);
        }
        out.push_str("  }\n");
    }
    for r in &p.registers {
        let _ = writeln!(out, "  register {}[{}]: bit<{}>;", r.name, r.size, r.width);
    }
    for t in &p.tables {
        let _ = writeln!(out, "  table {} {{", t.name);
        let _ = writeln!(out, "    key = {};", t.key);
        for a in &t.actions {
            let _ = writeln!(out, "    action {}({}) {{", a.name, params(&a.params));
            print_block(&mut out, &a.body, 3);
            out.push_str("    }\n");
        }
        let args: Vec<String> = t.default.args.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(out, "    default = {}({});", t.default.name, args.join(", "));
        out.push_str("  }\n");
    }
    print_parser(&mut out, "parser", &p.parser);
    if let Some(m) = &p.egress_parser {
        print_parser(&mut out, "egress_parser", m);
    }
    out.push_str("  ingress {\n");
    print_block(&mut out, &p.ingress, 2);
    out.push_str("  }\n  egress {\n");
    print_block(&mut out, &p.egress, 2);
    out.push_str("  }\n  deparser {\n");
    print_emits(&mut out, &p.deparser.emits, 2);
    out.push_str("  }\n");
    if let Some(d) = &p.egress_deparser {
        out.push_str("  egress_deparser {\n");
        print_emits(&mut out, &d.emits, 2);
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pir::parse_device_program;

    #[test]
    fn round_trip_full_program() {
        let src = r#"
device d {
  header h { op: bit<8>; seq: bit<2>; }
  header g { x: bit<16>; }
  metadata { tmp: bit<2>; transient pass: bit<1>; }
  register seq[1]: bit<2>;
  table role {
    key = hdr.h.op;
    action head() { seq.read(meta.tmp, 0); meta.tmp = meta.tmp + 1; seq.write(0, meta.tmp); }
    action fwd(p: bit<9>) { set_egress_port(p); }
    default = fwd(1);
  }
  parser { start: extract(h); select(hdr.h.op) { 1 -> more; default -> accept; } more: extract(g); accept; }
  ingress { role.apply(); if (!hdr.g.isValid() && meta.pass == 0) { clone(I2I); } else { mark_drop(); } }
  egress { if (meta.tmp == 3) { recirculate(); } }
  deparser { emit(h); if (hdr.h.op == 1) { emit(g); } }
}"#;
        let p = parse_device_program(src).unwrap();
        let text = print_program(&p);
        assert_eq!(parse_device_program(&text).unwrap(), p, "{text}");
    }
}
