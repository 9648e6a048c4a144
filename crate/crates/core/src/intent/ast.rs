use std::fmt;

use crate::syntax::Expr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    pub alias: String,
    pub program: String,
    pub entries: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkDecl {
    pub from: String,
    pub to: String,
    /// `None` for `ALL`.
    pub port: Option<u64>,
    pub loss: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalBlock {
    pub device: String,
    pub lets: Vec<(String, Expr)>,
    pub asserts: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ltl {
    Atom(Expr),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    Always(Box<Ltl>),
    Eventually(Box<Ltl>),
    Next(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
}

impl Ltl {
    pub fn atoms(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.walk_atoms(&mut |e| out.push(e));
        out
    }

    fn walk_atoms<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Ltl::Atom(e) => f(e),
            Ltl::Not(a) | Ltl::Always(a) | Ltl::Eventually(a) | Ltl::Next(a) => a.walk_atoms(f),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) | Ltl::Until(a, b) => {
                a.walk_atoms(f);
                b.walk_atoms(f);
            }
        }
    }

    pub fn try_map_atoms<E>(&self, f: &mut dyn FnMut(&Expr) -> Result<Expr, E>) -> Result<Ltl, E> {
        let b = |x: &Ltl, f: &mut dyn FnMut(&Expr) -> Result<Expr, E>| x.try_map_atoms(f).map(Box::new);
        Ok(match self {
            Ltl::Atom(e) => Ltl::Atom(f(e)?),
            Ltl::Not(a) => Ltl::Not(b(a, f)?),
            Ltl::Always(a) => Ltl::Always(b(a, f)?),
            Ltl::Eventually(a) => Ltl::Eventually(b(a, f)?),
            Ltl::Next(a) => Ltl::Next(b(a, f)?),
            Ltl::And(x, y) => Ltl::And(b(x, f)?, b(y, f)?),
            Ltl::Or(x, y) => Ltl::Or(b(x, f)?, b(y, f)?),
            Ltl::Implies(x, y) => Ltl::Implies(b(x, f)?, b(y, f)?),
            Ltl::Until(x, y) => Ltl::Until(b(x, f)?, b(y, f)?),
        })
    }

    fn prec(&self) -> u8 {
        match self {
            Ltl::Implies(..) => 1,
            Ltl::Or(..) => 2,
            Ltl::And(..) => 3,
            Ltl::Until(..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, c: &Ltl, min: u8| {
            if c.prec() < min {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        };
        match self {
            Ltl::Atom(e) => write!(f, "{{ {e} }}"),
            Ltl::Not(a) => {
                write!(f, "!")?;
                child(f, a, 5)
            }
            Ltl::Always(a) => {
                write!(f, "[] ")?;
                child(f, a, 5)
            }
            Ltl::Eventually(a) => {
                write!(f, "<> ")?;
                child(f, a, 5)
            }
            Ltl::Next(a) => {
                write!(f, "X ")?;
                child(f, a, 5)
            }
            Ltl::And(a, b) => {
                child(f, a, 3)?;
                write!(f, " && ")?;
                child(f, b, 4)
            }
            Ltl::Or(a, b) => {
                child(f, a, 2)?;
                write!(f, " || ")?;
                child(f, b, 3)
            }
            Ltl::Implies(a, b) => {
                child(f, a, 2)?;
                write!(f, " -> ")?;
                child(f, b, 1)
            }
            Ltl::Until(a, b) => {
                child(f, a, 5)?;
                write!(f, " U ")?;
                child(f, b, 4)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalRule {
    pub name: String,
    pub formula: Ltl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldInit {
    pub header: String,
    pub field: String,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HostStep {
    Send { target: String, fields: Vec<FieldInit> },
    Choice(Vec<Vec<HostStep>>),
    Repeat(u64, Vec<HostStep>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostProcess {
    pub name: String,
    pub steps: Vec<HostStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Spec {
    pub imports: Vec<Import>,
    pub links: Vec<LinkDecl>,
    pub locals: Vec<LocalBlock>,
    pub globals: Vec<GlobalRule>,
    pub hosts: Vec<HostProcess>,
}
