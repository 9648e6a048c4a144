//! Actor semantics of a switch: each device reacts atomically to the head of its
//! ingress channel and emits enqueue events through final dispatch.

pub mod arch;
pub mod device;
pub mod layout;
pub mod packet;

use std::collections::VecDeque;

pub use arch::{
    actor_react, deparse_packet, drain, emit_set, final_dispatch, parse_packet, traffic_manager, Dispatch, DrainResult, Event, FdRule, Link,
    Links, ParseOutcome, Reaction,
};
pub use device::{exec_pipeline, DeviceCtx, PacketEnv};
pub use layout::{HeaderLayout, Layout, LayoutError};
pub use packet::Packet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Bounds {
    pub q_in: usize,
    pub q_eg: usize,
    pub recirc: u32,
    /// Maximum egress re-injections within one reaction.
    pub drain: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { q_in: 8, q_eg: 8, recirc: 8, drain: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActorState {
    pub registers: Vec<Vec<u64>>,
    pub ingress: VecDeque<Packet>,
}

impl ActorState {
    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend((self.registers.len() as u32).to_le_bytes());
        for r in &self.registers {
            out.extend((r.len() as u32).to_le_bytes());
            for v in r {
                out.extend(v.to_le_bytes());
            }
        }
        out.extend((self.ingress.len() as u32).to_le_bytes());
        for p in &self.ingress {
            p.write_canonical(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, thiserror::Error)]
pub enum Fault {
    #[error("{device}: register `{reg}` index {index} out of bounds (size {size}) in `{stmt}`")]
    RegisterOob { device: String, reg: String, index: u64, size: u64, stmt: String },
    #[error("{device}: read of `{header}.{field}` while `{header}` is invalid in `{stmt}`")]
    InvalidRead { device: String, header: String, field: String, stmt: String },
    #[error("{device}: local assertion #{id} failed: {cond}")]
    AssertFailed { device: String, id: usize, cond: String },
    #[error("egress channel holds {len} packets, capacity {cap}")]
    EgressOverflow { len: usize, cap: usize },
    #[error("ingress channel of `{target}` is full (capacity {cap})")]
    IngressOverflow { target: String, cap: usize },
    #[error("{device}: recirculation bound {bound} exceeded")]
    RecircBound { device: String, bound: u32 },
    #[error("{device}: more than {bound} egress re-injections in one reaction")]
    DrainBound { device: String, bound: usize },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pir::{load_table_entries, parse_device_program, CloneSpec, Deparser, Emit};
    use std::sync::Arc;

    fn ctx(src: &str, entries: &str) -> DeviceCtx {
        let prog = parse_device_program(src).unwrap();
        let e = load_table_entries(entries, &prog).unwrap();
        let layout = Arc::new(Layout::unify([&prog]).unwrap());
        DeviceCtx::new("d", prog, e, layout)
    }

    const TWO: &str = "device d { header h0 { t: bit<8>; } header h1 { x: bit<8>; }
        parser { start: extract(h0); select(hdr.h0.t) { 1 -> s1; default -> accept; } s1: extract(h1); accept; } }";

    #[test]
    fn parser_paths() {
        let c = ctx(TWO, "");
        let mut p = c.fresh_packet();
        p.fields[0] = 1;
        assert!(parse_packet(&c, &mut p, &c.prog.parser).accepted);
        assert_eq!(p.valid, vec![true, true]);
        p.fields[0] = 0;
        parse_packet(&c, &mut p, &c.prog.parser);
        assert_eq!(p.valid, vec![true, false]);
        let m = crate::pir::ParserMachine::accept_all();
        parse_packet(&c, &mut p, &m);
        assert_eq!(p.valid, vec![false, false]);
    }

    #[test]
    fn select_before_extract_rejects() {
        let c = ctx(
            "device d { header h0 { t: bit<8>; } parser { start: select(hdr.h0.t) { default -> accept; } } }",
            "",
        );
        let mut p = c.fresh_packet();
        let o = parse_packet(&c, &mut p, &c.prog.parser);
        assert!(!o.accepted && p.drop && o.note.is_some());
    }

    #[test]
    fn deparser_emits() {
        let c = ctx(TWO, "");
        let mut p = c.fresh_packet();
        p.valid = vec![true, true];
        deparse_packet(&c, &mut p, &Deparser::default());
        assert_eq!(p.valid, vec![false, false]);
        p.valid = vec![true, true];
        deparse_packet(&c, &mut p, &Deparser { emits: vec![Emit::Emit("h1".into())] });
        assert_eq!(p.valid, vec![false, true]);
    }

    #[test]
    fn wraparound_and_default_action() {
        let c = ctx(
            "device d { header h { op: bit<8>; } metadata { tmp: bit<2>; v: bit<8>; } register seq[1]: bit<2>;
             table t { key = hdr.h.op; action store(x: bit<8>) { meta.v = x; } action none() { meta.v = 99; } default = none(); }
             ingress { seq.read(meta.tmp, 0); meta.tmp = meta.tmp + 1; seq.write(0, meta.tmp); t.apply(); } }",
            "t : 1 -> store(5)",
        );
        let mut regs = vec![vec![3]];
        let mut p = c.fresh_packet();
        p.valid = vec![true];
        for (op, want) in [(1, 5), (2, 99)] {
            p.fields[0] = op;
            assert!(exec_pipeline(&c, &c.prog.ingress, &mut regs, &mut p).is_empty());
            assert_eq!(p.meta[1], want);
        }
        assert_eq!(regs[0][0], 1);
    }

    #[test]
    fn empty_body_changes_nothing() {
        let c = ctx(TWO, "");
        let mut regs = c.initial_registers();
        let mut p = c.fresh_packet();
        let before = (regs.clone(), p.clone());
        assert!(exec_pipeline(&c, &[], &mut regs, &mut p).is_empty());
        assert_eq!((regs, p), before);
    }

    #[test]
    fn faults_are_reported() {
        let c = ctx(
            "device d { header h { i: bit<8>; } register r[2]: bit<8>; ingress { r.write(hdr.h.i, 1); } }",
            "",
        );
        let mut regs = c.initial_registers();
        let mut p = c.fresh_packet();
        let f = exec_pipeline(&c, &c.prog.ingress, &mut regs, &mut p);
        assert!(matches!(f[0], Fault::InvalidRead { .. }));
        p.valid = vec![true];
        p.fields[0] = 3;
        let f = exec_pipeline(&c, &c.prog.ingress, &mut regs, &mut p);
        assert!(matches!(f[0], Fault::RegisterOob { index: 3, size: 2, .. }));
        assert_eq!(regs[0], vec![0, 1]);
    }

    #[test]
    fn traffic_manager_rules() {
        let c = ctx(TWO, "");
        let b = Bounds::default();
        let p = c.fresh_packet();
        assert_eq!(traffic_manager(p.clone(), &b).unwrap(), VecDeque::from([p.clone()]));
        let mut d = p.clone();
        d.drop = true;
        assert!(traffic_manager(d, &b).unwrap().is_empty());
        for spec in [CloneSpec::I2E, CloneSpec::I2I] {
            let mut q = p.clone();
            q.clone_spec = spec;
            let e = traffic_manager(q.clone(), &b).unwrap();
            assert_eq!(e.len(), 2);
            let mut expect = q.clone();
            expect.i2i = spec == CloneSpec::I2I;
            assert_eq!(e[0], q);
            assert_eq!(e[1], expect);
        }
    }

    fn links() -> Links {
        Links { links: vec![Link { from: 0, port: Some(10), to: 2, loss: 0 }] }
    }

    #[test]
    fn final_dispatch_rules() {
        let c = ctx(TWO, "");
        let b = Bounds::default();
        let mut p = c.fresh_packet();
        p.valid = vec![true, false];
        p.egress_port = 10;

        let d = final_dispatch(&c, &p, 0, &links(), &b);
        assert_eq!(d.events.len(), 1);
        assert_eq!((d.events[0].target(), d.events[0].rule()), (2, FdRule::Forward));

        let mut r = p.clone();
        r.recirc = true;
        let d = final_dispatch(&c, &r, 0, &links(), &b);
        assert_eq!((d.events[0].target(), d.events[0].packet().recirc_count), (0, 1));
        assert!(!d.events[0].packet().recirc);

        let mut i = p.clone();
        i.i2i = true;
        assert_eq!(final_dispatch(&c, &i, 0, &links(), &b).events[0].rule(), FdRule::I2IClone);

        let mut e = p.clone();
        e.clone_spec = CloneSpec::E2E;
        let d = final_dispatch(&c, &e, 0, &links(), &b);
        assert_eq!((d.events.len(), d.reinject.len()), (1, 1));
        assert_eq!(d.reinject[0], e);

        let mut x = p.clone();
        x.egress_port = 99;
        assert_eq!(final_dispatch(&c, &x, 0, &links(), &b), Dispatch { note: d_note(99), ..Default::default() });

        let mut dr = r.clone();
        dr.drop = true;
        assert_eq!(final_dispatch(&c, &dr, 0, &links(), &b), Dispatch::default());

        let mut all = links();
        all.links.push(Link { from: 0, port: None, to: 1, loss: 0 });
        assert_eq!(final_dispatch(&c, &x, 0, &all, &b).events[0].target(), 1);
    }

    fn d_note(port: u64) -> Option<String> {
        Some(format!("no link for port {port}: dropped"))
    }

    #[test]
    fn recirculation_bound() {
        let c = ctx(TWO, "");
        let b = Bounds { recirc: 2, ..Bounds::default() };
        let mut p = c.fresh_packet();
        p.recirc = true;
        p.recirc_count = 2;
        assert!(matches!(final_dispatch(&c, &p, 0, &links(), &b).fault, Some(Fault::RecircBound { .. })));
    }

    #[test]
    fn drain_orders_e2e_clone_after_send() {
        let c = ctx(
            "device d { header h { n: bit<8>; } metadata { k: bit<1>; }
             parser { start: extract(h); accept; }
             egress { if (hdr.h.n == 0) { hdr.h.n = 1; clone(E2E); set_egress_port(10); } else { set_egress_port(10); } }
             deparser { emit(h); } }",
            "",
        );
        let mut regs = c.initial_registers();
        let p = c.fresh_packet();
        let r = drain(&c, &mut regs, VecDeque::from([p]), 0, &links(), &Bounds::default());
        assert_eq!(r.events.len(), 2);
        assert_eq!(r.events[0].rule(), FdRule::E2ESend);
        assert_eq!(r.events[1].rule(), FdRule::Forward);
        assert_eq!((r.fd_calls, r.reinjections), (2, 1));
        let empty = drain(&c, &mut regs, VecDeque::new(), 0, &links(), &Bounds::default());
        assert_eq!(empty, DrainResult::default());
    }

    #[test]
    fn reaction_consumes_head_and_appends_recirculation() {
        let c = ctx(
            "device d { header h { n: bit<8>; } register r[1]: bit<8>;
             parser { start: extract(h); accept; }
             ingress { r.write(0, hdr.h.n); if (hdr.h.n == 1) { recirculate(); } if (hdr.h.n == 2) { mark_drop(); } }
             deparser { emit(h); } }",
            "",
        );
        let mk = |n| {
            let mut p = c.fresh_packet();
            p.fields[0] = n;
            p
        };
        let a = ActorState { registers: c.initial_registers(), ingress: VecDeque::from([mk(1), mk(3)]) };
        let r = actor_react(&c, &a, 0, &Links::default(), &Bounds::default()).unwrap();
        assert_eq!(r.consumed, mk(1));
        assert_eq!(r.state.ingress.len(), 2);
        assert_eq!(r.state.ingress[0], mk(3));
        assert_eq!(r.state.ingress[1].recirc_count, 1);
        let again = actor_react(&c, &a, 0, &Links::default(), &Bounds::default()).unwrap();
        assert_eq!(again, r);

        let a = ActorState { registers: c.initial_registers(), ingress: VecDeque::from([mk(2)]) };
        let r = actor_react(&c, &a, 0, &Links::default(), &Bounds::default()).unwrap();
        assert!(r.events.is_empty());
        assert_eq!(r.state.registers[0][0], 2);
        assert_eq!(r.fd_calls, 0);
    }
}
