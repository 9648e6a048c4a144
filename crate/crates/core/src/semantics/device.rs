//! Per-device execution context and the statement interpreter.

use std::collections::HashMap;
use std::sync::Arc;

use super::layout::Layout;
use super::packet::Packet;
use super::Fault;
use crate::pir::{stmt_line, DeviceProgram, EntrySet, Stmt, EGRESS_PORT_WIDTH};
use crate::syntax::{eval, mask, Env, EvalError, Expr, VarRef};

#[derive(Debug, Clone)]
pub struct DeviceCtx {
    pub alias: String,
    pub prog: DeviceProgram,
    pub entries: EntrySet,
    pub layout: Arc<Layout>,
    fields: HashMap<String, HashMap<String, (usize, u32, usize)>>,
    meta: HashMap<String, (usize, u32)>,
    regs: HashMap<String, usize>,
}

impl DeviceCtx {
    pub fn new(alias: &str, prog: DeviceProgram, entries: EntrySet, layout: Arc<Layout>) -> DeviceCtx {
        let mut fields: HashMap<String, HashMap<String, (usize, u32, usize)>> = HashMap::new();
        for h in &layout.headers {
            for f in &h.fields {
                let slot = layout.field_slot(&h.name, &f.name).expect("own field");
                fields.entry(h.name.clone()).or_default().insert(f.name.clone(), slot);
            }
        }
        let meta = prog.metadata.iter().enumerate().map(|(i, m)| (m.name.clone(), (i, m.width))).collect();
        let regs = prog.registers.iter().enumerate().map(|(i, r)| (r.name.clone(), i)).collect();
        DeviceCtx { alias: alias.into(), prog, entries, layout, fields, meta, regs }
    }

    pub fn field(&self, header: &str, field: &str) -> Option<(usize, u32, usize)> {
        self.fields.get(header)?.get(field).copied()
    }

    pub fn meta_slot(&self, name: &str) -> Option<(usize, u32)> {
        self.meta.get(name).copied()
    }

    pub fn reg_index(&self, name: &str) -> Option<usize> {
        self.regs.get(name).copied()
    }

    pub fn meta_len(&self) -> usize {
        self.prog.metadata.len()
    }

    pub fn initial_registers(&self) -> Vec<Vec<u64>> {
        self.prog.registers.iter().map(|r| vec![0; r.size as usize]).collect()
    }

    pub fn fresh_packet(&self) -> Packet {
        Packet::new(&self.layout, self.meta_len())
    }
}

/// Expression environment over one packet.
pub struct PacketEnv<'a> {
    pub ctx: &'a DeviceCtx,
    pub p: &'a Packet,
    pub params: &'a [(String, u64, u32)],
    pub check_valid: bool,
    pub regs: Option<&'a [Vec<u64>]>,
}

impl Env for PacketEnv<'_> {
    fn read(&self, v: &VarRef) -> Result<(u64, u32), EvalError> {
        match v {
            VarRef::Field { header, field } => {
                let (slot, w, h) = self.ctx.field(header, field).ok_or_else(|| EvalError::Unbound(v.to_string()))?;
                if self.check_valid && !self.p.valid[h] {
                    return Err(EvalError::InvalidHeader { header: header.clone(), field: field.clone() });
                }
                Ok((self.p.fields[slot], w))
            }
            VarRef::Valid(h) => {
                let hi = self.ctx.layout.header_index(h).ok_or_else(|| EvalError::Unbound(v.to_string()))?;
                Ok((self.p.valid[hi] as u64, 1))
            }
            VarRef::Meta(m) => {
                let (i, w) = self.ctx.meta_slot(m).ok_or_else(|| EvalError::Unbound(v.to_string()))?;
                Ok((self.p.meta.get(i).copied().unwrap_or(0), w))
            }
            VarRef::EgressPort => Ok((self.p.egress_port, EGRESS_PORT_WIDTH)),
            VarRef::Param(n) => self
                .params
                .iter()
                .find(|(p, ..)| p == n)
                .map(|&(_, v, w)| (v, w))
                .ok_or_else(|| EvalError::Unbound(n.clone())),
            VarRef::Reg { name, index } => {
                let (regs, ri) = self.regs.zip(self.ctx.reg_index(name)).ok_or_else(|| EvalError::Unbound(v.to_string()))?;
                Ok((regs[ri][*index as usize], self.ctx.prog.registers[ri].width))
            }
            _ => Err(EvalError::Unbound(v.to_string())),
        }
    }
}

pub(crate) struct Exec<'a> {
    pub ctx: &'a DeviceCtx,
    pub regs: &'a mut Vec<Vec<u64>>,
    pub faults: &'a mut Vec<Fault>,
}

impl Exec<'_> {
    fn eval(&mut self, e: &Expr, p: &Packet, params: &[(String, u64, u32)], s: &Stmt) -> Option<u64> {
        let env = PacketEnv { ctx: self.ctx, p, params, check_valid: true, regs: Some(self.regs) };
        match eval(e, &env) {
            Ok(v) => Some(v.v),
            Err(EvalError::InvalidHeader { header, field }) => {
                self.faults.push(Fault::InvalidRead { device: self.ctx.alias.clone(), header, field, stmt: stmt_line(s) });
                None
            }
            Err(EvalError::Unbound(n)) => panic!("unbound `{n}` in validated program"),
        }
    }

    fn store(&mut self, lv: &VarRef, v: u64, p: &mut Packet) {
        match lv {
            VarRef::Field { header, field } => {
                let (slot, w, _) = self.ctx.field(header, field).expect("validated field");
                p.fields[slot] = mask(v, w);
            }
            VarRef::Meta(m) => {
                let (i, w) = self.ctx.meta_slot(m).expect("validated metadata");
                p.meta[i] = mask(v, w);
            }
            _ => unreachable!("validated lvalue"),
        }
    }

    fn index(&mut self, reg: &str, idx: u64, s: &Stmt) -> (usize, usize) {
        let ri = self.ctx.reg_index(reg).expect("validated register");
        let size = self.regs[ri].len() as u64;
        if idx >= size {
            self.faults.push(Fault::RegisterOob { device: self.ctx.alias.clone(), reg: reg.into(), index: idx, size, stmt: stmt_line(s) });
        }
        (ri, (idx % size) as usize)
    }

    pub fn block(&mut self, b: &[Stmt], p: &mut Packet, params: &[(String, u64, u32)]) {
        for s in b {
            self.stmt(s, p, params);
        }
    }

    fn stmt(&mut self, s: &Stmt, p: &mut Packet, params: &[(String, u64, u32)]) {
        match s {
            Stmt::Assign(lv, e) => {
                if let Some(v) = self.eval(e, p, params, s) {
                    self.store(lv, v, p);
                }
            }
            Stmt::If(c, a, b) => {
                if let Some(v) = self.eval(c, p, params, s) {
                    self.block(if v != 0 { a } else { b }, p, params);
                }
            }
            Stmt::RegRead { dest, reg, index } => {
                if let Some(i) = self.eval(index, p, params, s) {
                    let (ri, i) = self.index(reg, i, s);
                    let v = self.regs[ri][i];
                    self.store(dest, v, p);
                }
            }
            Stmt::RegWrite { reg, index, value } => {
                let (Some(i), Some(v)) = (self.eval(index, p, params, s), self.eval(value, p, params, s)) else { return };
                let (ri, i) = self.index(reg, i, s);
                self.regs[ri][i] = mask(v, self.ctx.prog.registers[ri].width);
            }
            Stmt::Apply(t) => {
                let ctx = self.ctx;
                let table = ctx.prog.table(t).expect("validated table");
                let Some(key) = self.eval(&table.key, p, &[], s) else { return };
                let call = ctx.entries.resolve(&ctx.prog, t, key);
                let action = table.action(&call.name).expect("validated action");
                let bound: Vec<(String, u64, u32)> =
                    action.params.iter().zip(&call.args).map(|(f, &v)| (f.name.clone(), v, f.width)).collect();
                self.block(&action.body, p, &bound);
            }
            Stmt::MarkDrop => p.drop = true,
            Stmt::Clone(c) => p.clone_spec = *c,
            Stmt::Recirculate => p.recirc = true,
            Stmt::SetEgressPort(e) => {
                if let Some(v) = self.eval(e, p, params, s) {
                    p.egress_port = mask(v, EGRESS_PORT_WIDTH);
                }
            }
            Stmt::AssertLocal { id, cond } => {
                if let Some(v) = self.eval(cond, p, params, s) {
                    if v == 0 {
                        self.faults.push(Fault::AssertFailed { device: self.ctx.alias.clone(), id: *id, cond: cond.to_string() });
                    }
                }
            }
        }
    }
}

/// Run a statement block against a register store and packet.
pub fn exec_pipeline(ctx: &DeviceCtx, body: &[Stmt], regs: &mut Vec<Vec<u64>>, p: &mut Packet) -> Vec<Fault> {
    let mut faults = Vec::new();
    Exec { ctx, regs, faults: &mut faults }.block(body, p, &[]);
    faults
}
