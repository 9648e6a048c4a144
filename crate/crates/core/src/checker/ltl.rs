//! Finite-trace LTL: negation normal form, formula progression and a direct evaluator.

use std::collections::HashMap;

use crate::intent::Ltl;
use crate::syntax::Expr;

pub type FormulaId = u32;

/// Hash-consed formula node. `End` holds when the run has no further state,
/// `NotEnd` when it has one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    End,
    NotEnd,
    Atom(usize, bool),
    And(Vec<FormulaId>),
    Or(Vec<FormulaId>),
    /// Strong next.
    Next(FormulaId),
    /// Weak next.
    WeakNext(FormulaId),
    Until(FormulaId, FormulaId),
    Release(FormulaId, FormulaId),
}

#[derive(Debug, Clone, Default)]
pub struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, FormulaId>,
}

pub const TRUE: FormulaId = 0;
pub const FALSE: FormulaId = 1;
const END: FormulaId = 2;
const NOT_END: FormulaId = 3;

impl Arena {
    pub fn new() -> Arena {
        let mut a = Arena::default();
        for n in [Node::True, Node::False, Node::End, Node::NotEnd] {
            a.intern(n);
        }
        a
    }

    pub fn node(&self, id: FormulaId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn intern(&mut self, n: Node) -> FormulaId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len() as FormulaId;
        self.nodes.push(n.clone());
        self.index.insert(n, id);
        id
    }

    fn junction(&mut self, and: bool, parts: Vec<FormulaId>) -> FormulaId {
        let (unit, zero) = if and { (TRUE, FALSE) } else { (FALSE, TRUE) };
        let mut flat = Vec::new();
        for p in parts {
            match self.node(p) {
                Node::And(xs) if and => flat.extend(xs.iter().copied()),
                Node::Or(xs) if !and => flat.extend(xs.iter().copied()),
                _ => flat.push(p),
            }
        }
        flat.retain(|&p| p != unit);
        if flat.contains(&zero) || (flat.contains(&END) && flat.contains(&NOT_END)) {
            return zero;
        }
        flat.sort_unstable();
        flat.dedup();
        match flat.len() {
            0 => unit,
            1 => flat[0],
            _ => self.intern(if and { Node::And(flat) } else { Node::Or(flat) }),
        }
    }

    pub fn and(&mut self, parts: Vec<FormulaId>) -> FormulaId {
        self.junction(true, parts)
    }

    pub fn or(&mut self, parts: Vec<FormulaId>) -> FormulaId {
        self.junction(false, parts)
    }

    /// Negation normal form; atoms are numbered through `atom`.
    pub fn from_ltl(&mut self, f: &Ltl, atom: &mut dyn FnMut(&Expr) -> usize) -> FormulaId {
        self.nnf(f, true, atom)
    }

    fn nnf(&mut self, f: &Ltl, pos: bool, atom: &mut dyn FnMut(&Expr) -> usize) -> FormulaId {
        match f {
            Ltl::Atom(e) => {
                let i = atom(e);
                self.intern(Node::Atom(i, pos))
            }
            Ltl::Not(a) => self.nnf(a, !pos, atom),
            Ltl::And(a, b) | Ltl::Or(a, b) => {
                let x = self.nnf(a, pos, atom);
                let y = self.nnf(b, pos, atom);
                if matches!(f, Ltl::And(..)) == pos {
                    self.and(vec![x, y])
                } else {
                    self.or(vec![x, y])
                }
            }
            Ltl::Implies(a, b) => {
                let x = self.nnf(a, !pos, atom);
                let y = self.nnf(b, pos, atom);
                if pos {
                    self.or(vec![x, y])
                } else {
                    self.and(vec![x, y])
                }
            }
            Ltl::Always(a) => {
                let x = self.nnf(a, pos, atom);
                self.intern(if pos { Node::Release(FALSE, x) } else { Node::Until(TRUE, x) })
            }
            Ltl::Eventually(a) => {
                let x = self.nnf(a, pos, atom);
                self.intern(if pos { Node::Until(TRUE, x) } else { Node::Release(FALSE, x) })
            }
            Ltl::Next(a) => {
                let x = self.nnf(a, pos, atom);
                self.intern(if pos { Node::Next(x) } else { Node::WeakNext(x) })
            }
            Ltl::Until(a, b) => {
                let x = self.nnf(a, pos, atom);
                let y = self.nnf(b, pos, atom);
                self.intern(if pos { Node::Until(x, y) } else { Node::Release(x, y) })
            }
        }
    }

    /// Obligation for the rest of the run after observing a state with atom values `v`.
    pub fn progress(&mut self, f: FormulaId, v: &[bool]) -> FormulaId {
        let mut memo = HashMap::new();
        self.prog(f, v, &mut memo)
    }

    fn prog(&mut self, f: FormulaId, v: &[bool], memo: &mut HashMap<FormulaId, FormulaId>) -> FormulaId {
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let r = match self.node(f).clone() {
            Node::True => TRUE,
            Node::False | Node::End => FALSE,
            Node::NotEnd => TRUE,
            Node::Atom(i, pos) => {
                if v[i] == pos {
                    TRUE
                } else {
                    FALSE
                }
            }
            Node::And(xs) => {
                let ys = xs.iter().map(|&x| self.prog(x, v, memo)).collect();
                self.and(ys)
            }
            Node::Or(xs) => {
                let ys = xs.iter().map(|&x| self.prog(x, v, memo)).collect();
                self.or(ys)
            }
            Node::Next(a) => self.and(vec![NOT_END, a]),
            Node::WeakNext(a) => self.or(vec![END, a]),
            Node::Until(a, b) => {
                let pb = self.prog(b, v, memo);
                let pa = self.prog(a, v, memo);
                let stay = self.and(vec![pa, NOT_END, f]);
                self.or(vec![pb, stay])
            }
            Node::Release(a, b) => {
                let pb = self.prog(b, v, memo);
                let pa = self.prog(a, v, memo);
                let stay = self.or(vec![pa, END, f]);
                self.and(vec![pb, stay])
            }
        };
        memo.insert(f, r);
        r
    }

    /// Whether an obligation is met when the run ends here.
    pub fn accepts_end(&self, f: FormulaId) -> bool {
        match self.node(f) {
            Node::True | Node::End | Node::WeakNext(_) | Node::Release(..) => true,
            Node::False | Node::NotEnd | Node::Atom(..) | Node::Next(_) | Node::Until(..) => false,
            Node::And(xs) => xs.iter().all(|&x| self.accepts_end(x)),
            Node::Or(xs) => xs.iter().any(|&x| self.accepts_end(x)),
        }
    }
}

/// Direct finite-trace semantics: `run[i][k]` is atom `k` at position `i`.
pub fn eval_ltl(f: &Ltl, run: &[Vec<bool>], atom: &dyn Fn(&Expr) -> usize) -> bool {
    assert!(!run.is_empty(), "runs are non-empty");
    eval_at(f, run, 0, atom)
}

fn eval_at(f: &Ltl, run: &[Vec<bool>], i: usize, atom: &dyn Fn(&Expr) -> usize) -> bool {
    let n = run.len();
    match f {
        Ltl::Atom(e) => run[i][atom(e)],
        Ltl::Not(a) => !eval_at(a, run, i, atom),
        Ltl::And(a, b) => eval_at(a, run, i, atom) && eval_at(b, run, i, atom),
        Ltl::Or(a, b) => eval_at(a, run, i, atom) || eval_at(b, run, i, atom),
        Ltl::Implies(a, b) => !eval_at(a, run, i, atom) || eval_at(b, run, i, atom),
        Ltl::Always(a) => (i..n).all(|j| eval_at(a, run, j, atom)),
        Ltl::Eventually(a) => (i..n).any(|j| eval_at(a, run, j, atom)),
        Ltl::Next(a) => i + 1 < n && eval_at(a, run, i + 1, atom),
        Ltl::Until(a, b) => (i..n).any(|j| eval_at(b, run, j, atom) && (i..j).all(|k| eval_at(a, run, k, atom))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr_str;
    use proptest::prelude::*;

    fn a(k: u64) -> Ltl {
        Ltl::Atom(Expr::Int(k))
    }

    fn idx(e: &Expr) -> usize {
        e.as_const().unwrap() as usize
    }

    fn progression(f: &Ltl, run: &[Vec<bool>]) -> bool {
        let mut ar = Arena::new();
        let mut r = ar.from_ltl(f, &mut |e| idx(e));
        for v in run {
            r = ar.progress(r, v);
        }
        ar.accepts_end(r)
    }

    #[test]
    fn textbook_cases() {
        let t = vec![true];
        let f = vec![false];
        assert!(eval_ltl(&Ltl::Always(Box::new(a(0))), &[t.clone(), t.clone()], &idx));
        assert!(!eval_ltl(&Ltl::Eventually(Box::new(a(0))), &[f.clone(), f.clone()], &idx));
        // p U q, q first at step 3
        let run = vec![vec![true, false], vec![true, false], vec![true, false], vec![false, true]];
        let u = Ltl::Until(Box::new(a(0)), Box::new(a(1)));
        assert!(eval_ltl(&u, &run, &idx));
        assert!(progression(&u, &run));
        assert!(!eval_ltl(&Ltl::Next(Box::new(a(0))), std::slice::from_ref(&t), &idx));
        assert!(eval_ltl(&Ltl::Not(Box::new(Ltl::Next(Box::new(a(0))))), &[t], &idx));
    }

    #[test]
    fn violation_is_detected_early() {
        let mut ar = Arena::new();
        let f = ar.from_ltl(&Ltl::Always(Box::new(a(0))), &mut |e| idx(e));
        let r = ar.progress(f, &[true]);
        assert_ne!(r, FALSE);
        assert_eq!(ar.progress(r, &[false]), FALSE);
    }

    #[test]
    fn atoms_keep_their_expressions() {
        let e = parse_expr_str("x == 1").unwrap();
        let mut seen = Vec::new();
        let mut ar = Arena::new();
        ar.from_ltl(&Ltl::Eventually(Box::new(Ltl::Atom(e.clone()))), &mut |x| {
            seen.push(x.clone());
            0
        });
        assert_eq!(seen, vec![e]);
    }

    fn formula() -> impl Strategy<Value = Ltl> {
        let leaf = (0u64..3).prop_map(a);
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|x| Ltl::Not(Box::new(x))),
                inner.clone().prop_map(|x| Ltl::Always(Box::new(x))),
                inner.clone().prop_map(|x| Ltl::Eventually(Box::new(x))),
                inner.clone().prop_map(|x| Ltl::Next(Box::new(x))),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Ltl::And(Box::new(x), Box::new(y))),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Ltl::Or(Box::new(x), Box::new(y))),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Ltl::Implies(Box::new(x), Box::new(y))),
                (inner.clone(), inner).prop_map(|(x, y)| Ltl::Until(Box::new(x), Box::new(y))),
            ]
        })
    }

    proptest! {
        #[test]
        fn progression_matches_direct_semantics(f in formula(), run in prop::collection::vec(prop::collection::vec(any::<bool>(), 3), 1..7)) {
            prop_assert_eq!(progression(&f, &run), eval_ltl(&f, &run, &idx));
        }
    }
}
