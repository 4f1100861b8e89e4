//! Syntax, values, machine states and the flow vocabulary shared by the
//! interpreter, the instrumentation passes and the analyzer.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::pp::ProgramPoint;
use crate::trace::Trace;

/// Variable or field name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

impl Ident {
    pub fn new(name: &str) -> Self {
        Ident(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Ident {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// Heap address. Handed out by [`State::next_loc`] in increasing order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc(pub u64);

impl fmt::Debug for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Const(bool),
    Loc(Loc),
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Const(b) => Some(b),
            Value::Loc(_) => None,
        }
    }

    pub fn as_loc(self) -> Option<Loc> {
        match self {
            Value::Loc(l) => Some(l),
            Value::Const(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(b) => write!(f, "{b}"),
            Value::Loc(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BinOp {
    Eq,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Eq => "==",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Concrete operator table. `==` compares any two values (locations by
    /// identity); the boolean connectives are undefined on locations.
    pub fn apply(self, lhs: Value, rhs: Value) -> Option<Value> {
        match self {
            BinOp::Eq => Some(Value::Const(lhs == rhs)),
            BinOp::And => Some(Value::Const(lhs.as_bool()? && rhs.as_bool()?)),
            BinOp::Or => Some(Value::Const(lhs.as_bool()? || rhs.as_bool()?)),
        }
    }
}

/// Program points attached to a node by the annotation transformation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Decor {
    pub before: ProgramPoint,
    pub after: ProgramPoint,
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub pp: Option<Decor>,
}

#[derive(Clone, PartialEq, Debug)]
pub enum ExprKind {
    Cst(bool),
    Var(Ident),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    ObjNew,
    Fld(Box<Expr>, Ident),
}

const RED_ZONE: usize = 1024 * 1024;
const STACK_CHUNK: usize = 8 * 1024 * 1024;

/// Runs `f` on a fresh stack segment when the current one is nearly used up.
/// Every recursion over syntax trees and derivations goes through here.
pub(crate) fn deep<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(RED_ZONE, STACK_CHUNK, f)
}

#[derive(Debug)]
pub struct Stat {
    pub kind: StatKind,
    pub pp: Option<Decor>,
}

#[derive(Clone, PartialEq, Debug)]
pub enum StatKind {
    Skip,
    Seq(Box<Stat>, Box<Stat>),
    If(Expr, Box<Stat>, Box<Stat>),
    While(Expr, Box<Stat>),
    Asg(Ident, Expr),
    FldAsg(Expr, Ident, Expr),
    Del(Expr, Ident),
}

// Structural equality deliberately skips `pp`; see `decorated_eq`.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl PartialEq for Stat {
    fn eq(&self, other: &Self) -> bool {
        deep(|| self.kind == other.kind)
    }
}

impl Clone for Stat {
    fn clone(&self) -> Self {
        deep(|| Stat {
            kind: self.kind.clone(),
            pp: self.pp.clone(),
        })
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, pp: None }
    }

    pub fn cst(b: bool) -> Self {
        Expr::new(ExprKind::Cst(b))
    }

    pub fn var(x: &str) -> Self {
        Expr::new(ExprKind::Var(Ident::new(x)))
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::new(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)))
    }

    pub fn obj() -> Self {
        Expr::new(ExprKind::ObjNew)
    }

    pub fn fld(base: Expr, f: &str) -> Self {
        Expr::new(ExprKind::Fld(Box::new(base), Ident::new(f)))
    }

    /// Name of the syntactic construct, which is also the name of the
    /// normal rule evaluating it.
    pub fn construct(&self) -> RuleName {
        match self.kind {
            ExprKind::Cst(_) => RuleName::Cst,
            ExprKind::Var(_) => RuleName::Var,
            ExprKind::Bin(..) => RuleName::Bin,
            ExprKind::ObjNew => RuleName::Obj,
            ExprKind::Fld(..) => RuleName::Fld,
        }
    }

    fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Cst(_) | ExprKind::Var(_) | ExprKind::ObjNew => vec![],
            ExprKind::Bin(_, a, b) => vec![a, b],
            ExprKind::Fld(e, _) => vec![e],
        }
    }

    /// Equality including program-point decorations.
    pub fn decorated_eq(&self, other: &Expr) -> bool {
        if self.pp != other.pp {
            return false;
        }
        match (&self.kind, &other.kind) {
            (ExprKind::Bin(o1, a1, b1), ExprKind::Bin(o2, a2, b2)) => {
                o1 == o2 && a1.decorated_eq(a2) && b1.decorated_eq(b2)
            }
            (ExprKind::Fld(e1, f1), ExprKind::Fld(e2, f2)) => f1 == f2 && e1.decorated_eq(e2),
            (a, b) => a == b,
        }
    }

    fn decoration_counts(&self, acc: &mut (usize, usize)) {
        match self.pp {
            Some(_) => acc.0 += 1,
            None => acc.1 += 1,
        }
        for c in self.children() {
            c.decoration_counts(acc);
        }
    }

    pub fn visit_decors<'a>(&'a self, out: &mut Vec<(RuleName, &'a Decor)>) {
        if let Some(d) = &self.pp {
            out.push((self.construct(), d));
        }
        for c in self.children() {
            c.visit_decors(out);
        }
    }
}

impl Stat {
    pub fn new(kind: StatKind) -> Self {
        Stat { kind, pp: None }
    }

    pub fn skip() -> Self {
        Stat::new(StatKind::Skip)
    }

    pub fn seq(a: Stat, b: Stat) -> Self {
        Stat::new(StatKind::Seq(Box::new(a), Box::new(b)))
    }

    pub fn if_(cond: Expr, then: Stat, els: Stat) -> Self {
        Stat::new(StatKind::If(cond, Box::new(then), Box::new(els)))
    }

    pub fn while_(cond: Expr, body: Stat) -> Self {
        Stat::new(StatKind::While(cond, Box::new(body)))
    }

    pub fn asg(x: &str, rhs: Expr) -> Self {
        Stat::new(StatKind::Asg(Ident::new(x), rhs))
    }

    pub fn fld_asg(target: Expr, f: &str, rhs: Expr) -> Self {
        Stat::new(StatKind::FldAsg(target, Ident::new(f), rhs))
    }

    pub fn del(target: Expr, f: &str) -> Self {
        Stat::new(StatKind::Del(target, Ident::new(f)))
    }

    /// Right-nested sequence of the given statements (`skip` when empty).
    pub fn seq_all(mut stmts: Vec<Stat>) -> Self {
        let Some(mut acc) = stmts.pop() else {
            return Stat::skip();
        };
        while let Some(s) = stmts.pop() {
            acc = Stat::seq(s, acc);
        }
        acc
    }

    pub fn construct(&self) -> RuleName {
        match self.kind {
            StatKind::Skip => RuleName::Skip,
            StatKind::Seq(..) => RuleName::Seq,
            StatKind::If(..) => RuleName::If,
            StatKind::While(..) => RuleName::While,
            StatKind::Asg(..) => RuleName::Asg,
            StatKind::FldAsg(..) => RuleName::FldAsg,
            StatKind::Del(..) => RuleName::Del,
        }
    }

    pub fn decorated_eq(&self, other: &Stat) -> bool {
        if self.pp != other.pp {
            return false;
        }
        deep(|| match (&self.kind, &other.kind) {
            (StatKind::Skip, StatKind::Skip) => true,
            (StatKind::Seq(a1, b1), StatKind::Seq(a2, b2)) => {
                a1.decorated_eq(a2) && b1.decorated_eq(b2)
            }
            (StatKind::If(c1, t1, e1), StatKind::If(c2, t2, e2)) => {
                c1.decorated_eq(c2) && t1.decorated_eq(t2) && e1.decorated_eq(e2)
            }
            (StatKind::While(c1, b1), StatKind::While(c2, b2)) => {
                c1.decorated_eq(c2) && b1.decorated_eq(b2)
            }
            (StatKind::Asg(x1, e1), StatKind::Asg(x2, e2)) => x1 == x2 && e1.decorated_eq(e2),
            (StatKind::FldAsg(t1, f1, e1), StatKind::FldAsg(t2, f2, e2)) => {
                f1 == f2 && t1.decorated_eq(t2) && e1.decorated_eq(e2)
            }
            (StatKind::Del(t1, f1), StatKind::Del(t2, f2)) => f1 == f2 && t1.decorated_eq(t2),
            _ => false,
        })
    }

    /// `(decorated, bare)` node counts over the whole tree.
    pub fn decoration_counts(&self) -> (usize, usize) {
        let mut acc = (0, 0);
        self.count_into(&mut acc);
        acc
    }

    fn count_into(&self, acc: &mut (usize, usize)) {
        match self.pp {
            Some(_) => acc.0 += 1,
            None => acc.1 += 1,
        }
        deep(|| match &self.kind {
            StatKind::Skip => {}
            StatKind::Seq(a, b) => {
                a.count_into(acc);
                b.count_into(acc);
            }
            StatKind::If(c, t, e) => {
                c.decoration_counts(acc);
                t.count_into(acc);
                e.count_into(acc);
            }
            StatKind::While(c, b) => {
                c.decoration_counts(acc);
                b.count_into(acc);
            }
            StatKind::Asg(_, e) => e.decoration_counts(acc),
            StatKind::FldAsg(t, _, e) => {
                t.decoration_counts(acc);
                e.decoration_counts(acc);
            }
            StatKind::Del(t, _) => t.decoration_counts(acc),
        })
    }

    pub fn is_fully_decorated(&self) -> bool {
        self.decoration_counts().1 == 0
    }

    pub fn is_bare(&self) -> bool {
        self.decoration_counts().0 == 0
    }

    /// Every decoration in the tree, paired with its node's construct name.
    pub fn decors(&self) -> Vec<(RuleName, &Decor)> {
        let mut out = Vec::new();
        self.visit_decors(&mut out);
        out
    }

    fn visit_decors<'a>(&'a self, out: &mut Vec<(RuleName, &'a Decor)>) {
        if let Some(d) = &self.pp {
            out.push((self.construct(), d));
        }
        deep(|| match &self.kind {
            StatKind::Skip => {}
            StatKind::Seq(a, b) => {
                a.visit_decors(out);
                b.visit_decors(out);
            }
            StatKind::If(c, t, e) => {
                c.visit_decors(out);
                t.visit_decors(out);
                e.visit_decors(out);
            }
            StatKind::While(c, b) => {
                c.visit_decors(out);
                b.visit_decors(out);
            }
            StatKind::Asg(_, e) => e.visit_decors(out),
            StatKind::FldAsg(t, _, e) => {
                t.visit_decors(out);
                e.visit_decors(out);
            }
            StatKind::Del(t, _) => t.visit_decors(out),
        })
    }

    /// Drops all decorations.
    pub fn strip(&self) -> Stat {
        fn strip_expr(e: &Expr) -> Expr {
            let kind = match &e.kind {
                ExprKind::Bin(op, a, b) => {
                    ExprKind::Bin(*op, Box::new(strip_expr(a)), Box::new(strip_expr(b)))
                }
                ExprKind::Fld(b, f) => ExprKind::Fld(Box::new(strip_expr(b)), f.clone()),
                k => k.clone(),
            };
            Expr::new(kind)
        }
        let kind = deep(|| match &self.kind {
            StatKind::Skip => StatKind::Skip,
            StatKind::Seq(a, b) => StatKind::Seq(Box::new(a.strip()), Box::new(b.strip())),
            StatKind::If(c, t, e) => {
                StatKind::If(strip_expr(c), Box::new(t.strip()), Box::new(e.strip()))
            }
            StatKind::While(c, b) => StatKind::While(strip_expr(c), Box::new(b.strip())),
            StatKind::Asg(x, e) => StatKind::Asg(x.clone(), strip_expr(e)),
            StatKind::FldAsg(t, f, e) => StatKind::FldAsg(strip_expr(t), f.clone(), strip_expr(e)),
            StatKind::Del(t, f) => StatKind::Del(strip_expr(t), f.clone()),
        });
        Stat::new(kind)
    }

    /// Variables and fields mentioned anywhere in the program.
    pub fn identifiers(
        &self,
    ) -> (
        std::collections::BTreeSet<Ident>,
        std::collections::BTreeSet<Ident>,
    ) {
        use std::collections::BTreeSet;
        fn expr(e: &Expr, vars: &mut BTreeSet<Ident>, fields: &mut BTreeSet<Ident>) {
            match &e.kind {
                ExprKind::Var(x) => {
                    vars.insert(x.clone());
                }
                ExprKind::Bin(_, a, b) => {
                    expr(a, vars, fields);
                    expr(b, vars, fields);
                }
                ExprKind::Fld(b, f) => {
                    fields.insert(f.clone());
                    expr(b, vars, fields);
                }
                ExprKind::Cst(_) | ExprKind::ObjNew => {}
            }
        }
        fn stat(s: &Stat, vars: &mut BTreeSet<Ident>, fields: &mut BTreeSet<Ident>) {
            deep(|| match &s.kind {
                StatKind::Skip => {}
                StatKind::Seq(a, b) => {
                    stat(a, vars, fields);
                    stat(b, vars, fields);
                }
                StatKind::If(c, t, e) => {
                    expr(c, vars, fields);
                    stat(t, vars, fields);
                    stat(e, vars, fields);
                }
                StatKind::While(c, b) => {
                    expr(c, vars, fields);
                    stat(b, vars, fields);
                }
                StatKind::Asg(x, e) => {
                    vars.insert(x.clone());
                    expr(e, vars, fields);
                }
                StatKind::FldAsg(t, f, e) => {
                    fields.insert(f.clone());
                    expr(t, vars, fields);
                    expr(e, vars, fields);
                }
                StatKind::Del(t, f) => {
                    fields.insert(f.clone());
                    expr(t, vars, fields);
                }
            })
        }
        let (mut vars, mut fields) = (BTreeSet::new(), BTreeSet::new());
        stat(self, &mut vars, &mut fields);
        (vars, fields)
    }

    /// Number of statement nodes.
    pub fn size(&self) -> usize {
        deep(|| match &self.kind {
            StatKind::Skip | StatKind::Asg(..) | StatKind::FldAsg(..) | StatKind::Del(..) => 1,
            StatKind::Seq(a, b) => 1 + a.size() + b.size(),
            StatKind::If(_, t, e) => 1 + t.size() + e.size(),
            StatKind::While(_, b) => 1 + b.size(),
        })
    }
}

pub type Object = im::OrdMap<Ident, Value>;

/// Concrete machine state.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct State {
    pub env: im::OrdMap<Ident, Value>,
    pub heap: im::OrdMap<Loc, Object>,
    pub next_loc: u64,
}

impl State {
    pub fn empty() -> Self {
        State::default()
    }

    /// Binds a fresh empty object and returns its location.
    pub fn alloc(&self) -> (State, Loc) {
        let l = Loc(self.next_loc);
        let mut s = self.clone();
        s.heap.insert(l, Object::new());
        s.next_loc += 1;
        (s, l)
    }

    /// The allocation counter is ahead of every bound location, and every
    /// location reachable from the environment or an object is bound.
    pub fn is_well_formed(&self) -> bool {
        let bound = |v: &Value| match v {
            Value::Loc(l) => self.heap.contains_key(l),
            Value::Const(_) => true,
        };
        self.heap.keys().all(|l| l.0 < self.next_loc)
            && self.env.values().all(bound)
            && self.heap.values().all(|o| o.values().all(bound))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "env {{")?;
        for (i, (x, v)) in self.env.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}={v}")?;
        }
        write!(f, "}} heap {{")?;
        for (i, (l, o)) in self.heap.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}={{")?;
            for (j, (fld, v)) in o.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{fld}={v}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

pub fn wf_state(s: &State) -> bool {
    s.is_well_formed()
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StatResult {
    Ok(State),
    Err(State),
}

impl StatResult {
    pub fn state(&self) -> &State {
        match self {
            StatResult::Ok(s) | StatResult::Err(s) => s,
        }
    }

    pub fn is_err(&self) -> bool {
        matches!(self, StatResult::Err(_))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ExprResult {
    Val(State, Value),
    Err(State),
}

impl ExprResult {
    pub fn state(&self) -> &State {
        match self {
            ExprResult::Val(s, _) | ExprResult::Err(s) => s,
        }
    }
}

/// The 26 rules of the semantics.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum RuleName {
    Skip,
    Seq,
    Seq1,
    If,
    IfTrue,
    IfFalse,
    While,
    WhileTrue1,
    WhileTrue2,
    WhileFalse,
    Asg,
    Asg1,
    FldAsg,
    FldAsg1,
    FldAsg2,
    Del,
    Del1,
    Cst,
    Var,
    Bin,
    Bin1,
    Bin2,
    Obj,
    Fld,
    Fld1,
    Abort,
}

impl RuleName {
    pub const ALL: [RuleName; 26] = [
        RuleName::Skip,
        RuleName::Seq,
        RuleName::Seq1,
        RuleName::If,
        RuleName::IfTrue,
        RuleName::IfFalse,
        RuleName::While,
        RuleName::WhileTrue1,
        RuleName::WhileTrue2,
        RuleName::WhileFalse,
        RuleName::Asg,
        RuleName::Asg1,
        RuleName::FldAsg,
        RuleName::FldAsg1,
        RuleName::FldAsg2,
        RuleName::Del,
        RuleName::Del1,
        RuleName::Cst,
        RuleName::Var,
        RuleName::Bin,
        RuleName::Bin1,
        RuleName::Bin2,
        RuleName::Obj,
        RuleName::Fld,
        RuleName::Fld1,
        RuleName::Abort,
    ];

    /// Rules for non-extended terms.
    pub fn is_normal(self) -> bool {
        matches!(
            self,
            RuleName::Skip
                | RuleName::Seq
                | RuleName::If
                | RuleName::While
                | RuleName::Asg
                | RuleName::FldAsg
                | RuleName::Del
                | RuleName::Cst
                | RuleName::Var
                | RuleName::Bin
                | RuleName::Obj
                | RuleName::Fld
        )
    }

    pub fn is_extended(self) -> bool {
        !self.is_normal()
    }

    pub fn is_axiom(self) -> bool {
        matches!(
            self,
            RuleName::Skip
                | RuleName::WhileFalse
                | RuleName::Asg1
                | RuleName::FldAsg2
                | RuleName::Del1
                | RuleName::Cst
                | RuleName::Var
                | RuleName::Bin2
                | RuleName::Obj
                | RuleName::Fld1
                | RuleName::Abort
        )
    }

    /// Number of inductive premises.
    pub fn arity(self) -> usize {
        match self {
            r if r.is_axiom() => 0,
            RuleName::Seq1 | RuleName::IfTrue | RuleName::IfFalse | RuleName::WhileTrue2 => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleName::Skip => "Skip",
            RuleName::Seq => "Seq",
            RuleName::Seq1 => "Seq1",
            RuleName::If => "If",
            RuleName::IfTrue => "IfTrue",
            RuleName::IfFalse => "IfFalse",
            RuleName::While => "While",
            RuleName::WhileTrue1 => "WhileTrue1",
            RuleName::WhileTrue2 => "WhileTrue2",
            RuleName::WhileFalse => "WhileFalse",
            RuleName::Asg => "Asg",
            RuleName::Asg1 => "Asg1",
            RuleName::FldAsg => "FldAsg",
            RuleName::FldAsg1 => "FldAsg1",
            RuleName::FldAsg2 => "FldAsg2",
            RuleName::Del => "Del",
            RuleName::Del1 => "Del1",
            RuleName::Cst => "Cst",
            RuleName::Var => "Var",
            RuleName::Bin => "Bin",
            RuleName::Bin1 => "Bin1",
            RuleName::Bin2 => "Bin2",
            RuleName::Obj => "Obj",
            RuleName::Fld => "Fld",
            RuleName::Fld1 => "Fld1",
            RuleName::Abort => "Abort",
        }
    }

    pub fn from_name(s: &str) -> Option<RuleName> {
        RuleName::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Something whose value can flow somewhere: an annotated allocation or a
/// previously written store.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Source {
    Alloc(Loc, Trace),
    Store(Store),
}

/// A written place, with the time it was written.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Store {
    /// Variable and its modification time.
    Var(Ident, Trace),
    /// Location, its allocation time, field, modification time.
    Field(Loc, Trace, Ident, Trace),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Flow {
    pub src: Source,
    pub dst: Store,
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Store::Var(x, t) => write!(f, "{x}@{}", t.short(6)),
            Store::Field(l, ta, fld, tm) => {
                write!(f, "({l}@{}).{fld}@{}", ta.short(6), tm.short(6))
            }
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Alloc(l, t) => write!(f, "{l}@{}", t.short(6)),
            Source::Store(s) => s.fmt(f),
        }
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.src, self.dst)
    }
}
