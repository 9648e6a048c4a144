use crate::syntax::{Expr, VarRef};

pub const EGRESS_PORT_WIDTH: u32 = 9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceProgram {
    pub name: String,
    pub headers: Vec<HeaderDecl>,
    pub metadata: Vec<MetaField>,
    pub registers: Vec<RegisterDecl>,
    pub tables: Vec<TableDecl>,
    pub parser: ParserMachine,
    pub egress_parser: Option<ParserMachine>,
    pub ingress: Block,
    pub egress: Block,
    pub deparser: Deparser,
    pub egress_deparser: Option<Deparser>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaField {
    pub name: String,
    pub width: u32,
    /// Cleared when the packet re-enters the device.
    pub transient: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterDecl {
    pub name: String,
    pub size: u64,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDecl {
    pub name: String,
    pub params: Vec<FieldDecl>,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionCall {
    pub name: String,
    pub args: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDecl {
    pub name: String,
    pub key: Expr,
    pub actions: Vec<ActionDecl>,
    pub default: ActionCall,
}

impl TableDecl {
    pub fn action(&self, name: &str) -> Option<&ActionDecl> {
        self.actions.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transition {
    Accept,
    Reject,
    Goto(String),
    Select { on: Expr, cases: Vec<(u64, String)>, default: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParserState {
    pub name: String,
    pub extracts: Vec<String>,
    pub transition: Transition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParserMachine {
    pub states: Vec<ParserState>,
}

impl ParserMachine {
    pub fn accept_all() -> ParserMachine {
        ParserMachine { states: vec![ParserState { name: "start".into(), extracts: vec![], transition: Transition::Accept }] }
    }

    pub fn state(&self, name: &str) -> Option<&ParserState> {
        self.states.iter().find(|s| s.name == name)
    }

    /// Fields inspected by `select` transitions.
    pub fn select_vars(&self) -> Vec<&VarRef> {
        let mut out = Vec::new();
        for s in &self.states {
            if let Transition::Select { on, .. } = &s.transition {
                out.extend(on.vars());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Emit {
    Emit(String),
    If(Expr, Vec<Emit>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Deparser {
    pub emits: Vec<Emit>,
}

impl Deparser {
    pub fn condition_vars(&self) -> Vec<&VarRef> {
        fn walk<'a>(es: &'a [Emit], out: &mut Vec<&'a VarRef>) {
            for e in es {
                if let Emit::If(c, body) = e {
                    out.extend(c.vars());
                    walk(body, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.emits, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum CloneSpec {
    None,
    I2E,
    I2I,
    E2E,
}

impl CloneSpec {
    pub fn name(self) -> &'static str {
        match self {
            CloneSpec::None => "NONE",
            CloneSpec::I2E => "I2E",
            CloneSpec::I2I => "I2I",
            CloneSpec::E2E => "E2E",
        }
    }
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign(VarRef, Expr),
    If(Expr, Block, Block),
    RegRead { dest: VarRef, reg: String, index: Expr },
    RegWrite { reg: String, index: Expr, value: Expr },
    Apply(String),
    MarkDrop,
    Clone(CloneSpec),
    Recirculate,
    SetEgressPort(Expr),
    /// Injected from a specification, never written in device code.
    AssertLocal { id: usize, cond: Expr },
}

impl Stmt {
    pub fn count(block: &[Stmt]) -> usize {
        block
            .iter()
            .map(|s| match s {
                Stmt::If(_, a, b) => 1 + Stmt::count(a) + Stmt::count(b),
                _ => 1,
            })
            .sum()
    }

    /// Walk every statement of a block in pre-order.
    pub fn walk<'a>(block: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
        for s in block {
            f(s);
            if let Stmt::If(_, a, b) = s {
                Stmt::walk(a, f);
                Stmt::walk(b, f);
            }
        }
    }
}

/// Where a statement lives in the source tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Root {
    Ingress,
    Egress,
    Action { table: usize, action: usize },
}

/// Path to a statement: the root block, then alternating statement index and branch index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StmtPath {
    pub root: Root,
    pub steps: Vec<usize>,
}

impl DeviceProgram {
    pub fn empty(name: &str) -> DeviceProgram {
        DeviceProgram {
            name: name.into(),
            headers: vec![],
            metadata: vec![],
            registers: vec![],
            tables: vec![],
            parser: ParserMachine::accept_all(),
            egress_parser: None,
            ingress: vec![],
            egress: vec![],
            deparser: Deparser::default(),
            egress_deparser: None,
        }
    }

    pub fn header(&self, name: &str) -> Option<&HeaderDecl> {
        self.headers.iter().find(|h| h.name == name)
    }

    pub fn field_width(&self, header: &str, field: &str) -> Option<u32> {
        self.header(header)?.fields.iter().find(|f| f.name == field).map(|f| f.width)
    }

    pub fn meta(&self, name: &str) -> Option<&MetaField> {
        self.metadata.iter().find(|m| m.name == name)
    }

    pub fn register(&self, name: &str) -> Option<&RegisterDecl> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&TableDecl> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name == name)
    }

    pub fn egress_parser(&self) -> &ParserMachine {
        self.egress_parser.as_ref().unwrap_or(&self.parser)
    }

    pub fn egress_deparser(&self) -> &Deparser {
        self.egress_deparser.as_ref().unwrap_or(&self.deparser)
    }

    pub fn block(&self, root: Root) -> &Block {
        match root {
            Root::Ingress => &self.ingress,
            Root::Egress => &self.egress,
            Root::Action { table, action } => &self.tables[table].actions[action].body,
        }
    }

    /// Width of a resolved variable, if declared.
    pub fn var_width(&self, v: &VarRef, params: &[FieldDecl]) -> Option<u32> {
        match v {
            VarRef::Field { header, field } => self.field_width(header, field),
            VarRef::Valid(_) => Some(1),
            VarRef::Meta(m) => self.meta(m).map(|m| m.width),
            VarRef::EgressPort => Some(EGRESS_PORT_WIDTH),
            VarRef::Param(p) => params.iter().find(|f| &f.name == p).map(|f| f.width),
            VarRef::Reg { name, .. } => self.register(name).map(|r| r.width),
            VarRef::Raw(_) | VarRef::At { .. } => None,
        }
    }

    /// True when some statement recirculates or clones back into the device.
    pub fn needs_loop_edge(&self) -> bool {
        let mut found = false;
        let mut check = |s: &Stmt| {
            if matches!(s, Stmt::Recirculate | Stmt::Clone(CloneSpec::I2I) | Stmt::Clone(CloneSpec::E2E)) {
                found = true;
            }
        };
        Stmt::walk(&self.ingress, &mut check);
        Stmt::walk(&self.egress, &mut check);
        for t in &self.tables {
            for a in &t.actions {
                Stmt::walk(&a.body, &mut check);
            }
        }
        found
    }
}
