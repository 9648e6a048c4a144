//! Expressions shared by device code and specifications, plus their evaluator.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "->",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn prec(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne => 4,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::BitOr => 6,
            BinOp::BitXor => 7,
            BinOp::BitAnd => 8,
            BinOp::Shl | BinOp::Shr => 9,
            BinOp::Add | BinOp::Sub => 10,
            BinOp::Mul => 11,
        }
    }

    pub fn is_boolean(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::And | BinOp::Or | BinOp::Implies
        )
    }

    pub const ALL: [BinOp; 17] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::BitAnd,
        BinOp::BitOr,
        BinOp::BitXor,
        BinOp::Shl,
        BinOp::Shr,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
        BinOp::Implies,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Not,
    BitNot,
}

/// A dotted name as written, before it is bound to anything.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RawPath {
    pub segs: Vec<String>,
    pub index: Option<Box<Expr>>,
    pub call: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Raw(RawPath),
    Field { header: String, field: String },
    Valid(String),
    Meta(String),
    EgressPort,
    Param(String),
    /// A constant register slot; only appears in specifications.
    Reg { name: String, index: u64 },
    /// State of another device, named by its import alias.
    At { actor: String, var: Box<VarRef> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Int(u64),
    Var(VarRef),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn var(v: VarRef) -> Expr {
        Expr::Var(v)
    }

    pub fn field(h: &str, f: &str) -> Expr {
        Expr::Var(VarRef::Field { header: h.into(), field: f.into() })
    }

    pub fn meta(f: &str) -> Expr {
        Expr::Var(VarRef::Meta(f.into()))
    }

    /// Visit every variable reference, including those inside raw indices.
    pub fn for_each_var<'a>(&'a self, f: &mut dyn FnMut(&'a VarRef)) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(v) => {
                f(v);
                if let VarRef::Raw(RawPath { index: Some(i), .. }) = v {
                    i.for_each_var(f);
                }
            }
            Expr::Unary(_, a) => a.for_each_var(f),
            Expr::Binary(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    pub fn vars(&self) -> Vec<&VarRef> {
        let mut out = Vec::new();
        self.for_each_var(&mut |v| out.push(v));
        out
    }

    /// Rewrite every variable reference bottom-up.
    pub fn try_map_vars<E>(&self, f: &mut dyn FnMut(&VarRef) -> Result<Expr, E>) -> Result<Expr, E> {
        Ok(match self {
            Expr::Int(n) => Expr::Int(*n),
            Expr::Var(v) => f(v)?,
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.try_map_vars(f)?)),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(a.try_map_vars(f)?), Box::new(b.try_map_vars(f)?)),
        })
    }

    pub fn as_const(&self) -> Option<u64> {
        struct NoVars;
        impl Env for NoVars {
            fn read(&self, _: &VarRef) -> Result<(u64, u32), EvalError> {
                Err(EvalError::Unbound("variable".into()))
            }
        }
        eval(self, &NoVars).ok().map(|v| v.v)
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::Raw(p) => {
                write!(f, "{}", p.segs.join("."))?;
                if let Some(i) = &p.index {
                    write!(f, "[{i}]")?;
                }
                if p.call {
                    write!(f, "()")?;
                }
                Ok(())
            }
            VarRef::Field { header, field } => write!(f, "hdr.{header}.{field}"),
            VarRef::Valid(h) => write!(f, "hdr.{h}.isValid()"),
            VarRef::Meta(m) => write!(f, "meta.{m}"),
            VarRef::EgressPort => write!(f, "meta.egress_port"),
            VarRef::Param(p) => write!(f, "{p}"),
            VarRef::Reg { name, index } => write!(f, "{name}[{index}]"),
            VarRef::At { actor, var } => write!(f, "{actor}.{var}"),
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parent: u8, right: bool) -> fmt::Result {
    let needs = match e {
        Expr::Binary(op, ..) => {
            let p = op.prec();
            p < parent || (right && p == parent)
        }
        _ => false,
    };
    if needs {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Unary(op, a) => {
                let s = match op {
                    UnOp::Not => "!",
                    UnOp::BitNot => "~",
                };
                match **a {
                    Expr::Binary(..) => write!(f, "{s}({a})"),
                    _ => write!(f, "{s}{a}"),
                }
            }
            Expr::Binary(op, a, b) => {
                // `->` groups to the right, everything else to the left
                let p = op.prec();
                if *op == BinOp::Implies {
                    write_child(f, a, p, true)?;
                    write!(f, " -> ")?;
                    write_child(f, b, p, false)
                } else {
                    write_child(f, a, p, false)?;
                    write!(f, " {} ", op.symbol())?;
                    write_child(f, b, p, true)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("read of field `{field}` of invalid header `{header}`")]
    InvalidHeader { header: String, field: String },
    #[error("unbound reference `{0}`")]
    Unbound(String),
}

/// Variable lookup used by [`eval`]; returns the value and its declared width.
pub trait Env {
    fn read(&self, v: &VarRef) -> Result<(u64, u32), EvalError>;
}

/// A value with its width, `None` for untyped literals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Value {
    pub v: u64,
    pub w: Option<u32>,
}

pub fn mask(v: u64, w: u32) -> u64 {
    if w >= 64 {
        v
    } else {
        v & ((1u64 << w) - 1)
    }
}

fn join(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn boolean(b: bool) -> Value {
    Value { v: b as u64, w: Some(1) }
}

pub fn eval(e: &Expr, env: &dyn Env) -> Result<Value, EvalError> {
    match e {
        Expr::Int(n) => Ok(Value { v: *n, w: None }),
        Expr::Var(v) => {
            let (x, w) = env.read(v)?;
            Ok(Value { v: mask(x, w), w: Some(w) })
        }
        Expr::Unary(UnOp::Not, a) => Ok(boolean(eval(a, env)?.v == 0)),
        Expr::Unary(UnOp::BitNot, a) => {
            let a = eval(a, env)?;
            Ok(Value { v: mask(!a.v, a.w.unwrap_or(64)), w: a.w })
        }
        Expr::Binary(op, a, b) => {
            let x = eval(a, env)?;
            match op {
                BinOp::And if x.v == 0 => return Ok(boolean(false)),
                BinOp::Or if x.v != 0 => return Ok(boolean(true)),
                BinOp::Implies if x.v == 0 => return Ok(boolean(true)),
                _ => {}
            }
            let y = eval(b, env)?;
            Ok(apply(*op, x, y))
        }
    }
}

pub fn apply(op: BinOp, x: Value, y: Value) -> Value {
    let w = join(x.w, y.w);
    let arith = |v: u64, w: Option<u32>| Value { v: mask(v, w.unwrap_or(64)), w };
    match op {
        BinOp::Add => arith(x.v.wrapping_add(y.v), w),
        BinOp::Sub => arith(x.v.wrapping_sub(y.v), w),
        BinOp::Mul => arith(x.v.wrapping_mul(y.v), w),
        BinOp::BitAnd => arith(x.v & y.v, w),
        BinOp::BitOr => arith(x.v | y.v, w),
        BinOp::BitXor => arith(x.v ^ y.v, w),
        BinOp::Shl => arith(if y.v >= 64 { 0 } else { x.v << y.v }, x.w),
        BinOp::Shr => arith(if y.v >= 64 { 0 } else { x.v >> y.v }, x.w),
        BinOp::Eq => boolean(x.v == y.v),
        BinOp::Ne => boolean(x.v != y.v),
        BinOp::Lt => boolean(x.v < y.v),
        BinOp::Le => boolean(x.v <= y.v),
        BinOp::Gt => boolean(x.v > y.v),
        BinOp::Ge => boolean(x.v >= y.v),
        BinOp::And => boolean(x.v != 0 && y.v != 0),
        BinOp::Or => boolean(x.v != 0 || y.v != 0),
        BinOp::Implies => boolean(x.v == 0 || y.v != 0),
    }
}
