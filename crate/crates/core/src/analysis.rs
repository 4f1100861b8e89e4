//! Static flow analysis over allocation-site abstractions.
//!
//! Objects are abstracted by the program point of the `{}` that created
//! them. Abstract values carry the allocation sites a value may point to and
//! the sources it may depend on. Heap writes are weak.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::{deep, Decor, Expr, ExprKind, Ident, Stat, StatKind};
use crate::parser::annotate;
use crate::pp::{PathAtom, ProgramPoint};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum AbsStore {
    Var(Ident, ProgramPoint),
    /// Allocation site, field, program point of the write or read.
    Field(ProgramPoint, Ident, ProgramPoint),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum AbsSource {
    Obj(ProgramPoint),
    Store(AbsStore),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AbsFlow {
    pub src: AbsSource,
    pub dst: AbsStore,
}

impl AbsSource {
    pub fn var(x: &str, p: ProgramPoint) -> Self {
        AbsSource::Store(AbsStore::Var(Ident::new(x), p))
    }
}

impl fmt::Display for AbsStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsStore::Var(x, p) => write!(f, "{x}@{p}"),
            AbsStore::Field(a, fld, p) => write!(f, "obj@{a}.{fld}@{p}"),
        }
    }
}

impl fmt::Display for AbsSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsSource::Obj(p) => write!(f, "obj@{p}"),
            AbsSource::Store(s) => s.fmt(f),
        }
    }
}

impl fmt::Display for AbsFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.src, self.dst)
    }
}

pub type AbsLoc = BTreeSet<ProgramPoint>;
pub type AbsFlows = BTreeSet<AbsFlow>;

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct AbsVal {
    pub locs: AbsLoc,
    pub deps: BTreeSet<AbsSource>,
}

impl AbsVal {
    pub fn bottom() -> Self {
        AbsVal::default()
    }

    pub fn is_bottom(&self) -> bool {
        self.locs.is_empty() && self.deps.is_empty()
    }

    pub fn join(&self, other: &AbsVal) -> AbsVal {
        AbsVal {
            locs: self.locs.union(&other.locs).cloned().collect(),
            deps: self.deps.union(&other.deps).cloned().collect(),
        }
    }

    pub fn join_in(&mut self, other: &AbsVal) {
        self.locs.extend(other.locs.iter().cloned());
        self.deps.extend(other.deps.iter().cloned());
    }

    pub fn leq(&self, other: &AbsVal) -> bool {
        self.locs.is_subset(&other.locs) && self.deps.is_subset(&other.deps)
    }

    /// Everything the value may carry into a store.
    pub fn sources(&self) -> impl Iterator<Item = AbsSource> + '_ {
        self.locs
            .iter()
            .map(|p| AbsSource::Obj(p.clone()))
            .chain(self.deps.iter().cloned())
    }
}

pub fn val_join(a: &AbsVal, b: &AbsVal) -> AbsVal {
    a.join(b)
}

pub fn val_leq(a: &AbsVal, b: &AbsVal) -> bool {
    a.leq(b)
}

/// Absent variables are ⊥.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct AbsEnv(pub BTreeMap<Ident, AbsVal>);

/// Keyed by allocation site and field; absent entries are ⊥.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct AbsHeap(pub BTreeMap<(ProgramPoint, Ident), AbsVal>);

fn map_join<K: Ord + Clone>(
    a: &BTreeMap<K, AbsVal>,
    b: &BTreeMap<K, AbsVal>,
) -> BTreeMap<K, AbsVal> {
    let mut out = a.clone();
    for (k, v) in b {
        out.entry(k.clone()).or_default().join_in(v);
    }
    out
}

fn map_leq<K: Ord>(a: &BTreeMap<K, AbsVal>, b: &BTreeMap<K, AbsVal>) -> bool {
    a.iter().all(|(k, v)| match b.get(k) {
        Some(w) => v.leq(w),
        None => v.is_bottom(),
    })
}

impl AbsEnv {
    pub fn get(&self, x: &Ident) -> AbsVal {
        self.0.get(x).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, x: Ident, v: AbsVal) {
        self.0.insert(x, v);
    }

    pub fn join(&self, other: &AbsEnv) -> AbsEnv {
        AbsEnv(map_join(&self.0, &other.0))
    }

    pub fn leq(&self, other: &AbsEnv) -> bool {
        map_leq(&self.0, &other.0)
    }
}

impl AbsHeap {
    pub fn get(&self, site: &ProgramPoint, f: &Ident) -> AbsVal {
        self.0
            .get(&(site.clone(), f.clone()))
            .cloned()
            .unwrap_or_default()
    }

    pub fn join(&self, other: &AbsHeap) -> AbsHeap {
        AbsHeap(map_join(&self.0, &other.0))
    }

    pub fn leq(&self, other: &AbsHeap) -> bool {
        map_leq(&self.0, &other.0)
    }
}

pub fn env_join(a: &AbsEnv, b: &AbsEnv) -> AbsEnv {
    a.join(b)
}

pub fn env_leq(a: &AbsEnv, b: &AbsEnv) -> bool {
    a.leq(b)
}

pub fn heap_join(a: &AbsHeap, b: &AbsHeap) -> AbsHeap {
    a.join(b)
}

pub fn heap_leq(a: &AbsHeap, b: &AbsHeap) -> bool {
    a.leq(b)
}

/// Join of field `f` over every site in `locs`.
pub fn heap_read(h: &AbsHeap, locs: &AbsLoc, f: &Ident) -> AbsVal {
    let mut out = AbsVal::bottom();
    for p in locs {
        if let Some(v) = h.0.get(&(p.clone(), f.clone())) {
            out.join_in(v);
        }
    }
    out
}

/// Weak update of field `f` at every site in `locs`.
pub fn heap_write(h: &AbsHeap, locs: &AbsLoc, f: &Ident, v: &AbsVal) -> AbsHeap {
    let mut out = h.clone();
    for p in locs {
        out.0.entry((p.clone(), f.clone())).or_default().join_in(v);
    }
    out
}

fn union(mut a: AbsFlows, mut b: AbsFlows) -> AbsFlows {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    a.extend(b);
    a
}

/// Statistics of one `while` fixpoint computation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LoopRecord {
    pub pp: ProgramPoint,
    /// Body analyses performed.
    pub rounds: usize,
    /// The loop input is below the invariant.
    pub input_below: bool,
    /// The body's output from the invariant is below the invariant.
    pub body_below: bool,
    pub capped: bool,
}

#[derive(Clone, Debug)]
pub struct Analyzer {
    pub cap: usize,
    pub loops: Vec<LoopRecord>,
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer {
            cap: Analyzer::DEFAULT_CAP,
            loops: Vec::new(),
        }
    }
}

fn decor(pp: &Option<Decor>) -> &Decor {
    pp.as_ref()
        .expect("analysis requires a program annotated with program points")
}

impl Analyzer {
    pub const DEFAULT_CAP: usize = 10_000;

    pub fn new() -> Self {
        Analyzer::default()
    }

    pub fn expr(&self, env: &AbsEnv, heap: &AbsHeap, e: &Expr) -> AbsVal {
        match &e.kind {
            ExprKind::Cst(_) => AbsVal::bottom(),
            ExprKind::Var(x) => {
                let mut v = env.get(x);
                v.deps.insert(AbsSource::Store(AbsStore::Var(
                    x.clone(),
                    decor(&e.pp).after.clone(),
                )));
                v
            }
            // Operators are over-approximated by joining their operands.
            ExprKind::Bin(_, a, b) => self.expr(env, heap, a).join(&self.expr(env, heap, b)),
            ExprKind::ObjNew => AbsVal {
                locs: [decor(&e.pp).after.clone()].into(),
                deps: BTreeSet::new(),
            },
            ExprKind::Fld(base, f) => {
                let v = self.expr(env, heap, base);
                let read = heap_read(heap, &v.locs, f);
                let at = &decor(&e.pp).after;
                let mut deps = v.deps;
                deps.extend(read.deps);
                for m in &v.locs {
                    deps.insert(AbsSource::Store(AbsStore::Field(
                        m.clone(),
                        f.clone(),
                        at.clone(),
                    )));
                }
                AbsVal {
                    locs: read.locs,
                    deps,
                }
            }
        }
    }

    pub fn stat(&mut self, env: &AbsEnv, heap: &AbsHeap, s: &Stat) -> (AbsEnv, AbsHeap, AbsFlows) {
        deep(|| self.stat_inner(env, heap, s))
    }

    fn stat_inner(
        &mut self,
        env: &AbsEnv,
        heap: &AbsHeap,
        s: &Stat,
    ) -> (AbsEnv, AbsHeap, AbsFlows) {
        match &s.kind {
            StatKind::Skip => (env.clone(), heap.clone(), AbsFlows::new()),
            StatKind::Seq(a, b) => {
                let (e1, h1, d1) = self.stat(env, heap, a);
                let (e2, h2, d2) = self.stat(&e1, &h1, b);
                (e2, h2, union(d1, d2))
            }
            StatKind::If(_, t, f) => {
                let (e1, h1, d1) = self.stat(env, heap, t);
                let (e2, h2, d2) = self.stat(env, heap, f);
                (e1.join(&e2), h1.join(&h2), union(d1, d2))
            }
            StatKind::While(c, body) => {
                self.while_fixpoint_at(&decor(&s.pp).before, env, heap, c, body)
            }
            StatKind::Asg(x, e) => {
                let v = self.expr(env, heap, e);
                let dst = AbsStore::Var(x.clone(), decor(&s.pp).before.clone());
                let flows = v
                    .sources()
                    .map(|src| AbsFlow {
                        src,
                        dst: dst.clone(),
                    })
                    .collect();
                let mut out = env.clone();
                out.set(x.clone(), v);
                (out, heap.clone(), flows)
            }
            StatKind::FldAsg(e1, f, e2) => {
                let target = self.expr(env, heap, e1);
                let v = self.expr(env, heap, e2);
                let at = &decor(&s.pp).before;
                let mut flows = AbsFlows::new();
                for m in &target.locs {
                    let dst = AbsStore::Field(m.clone(), f.clone(), at.clone());
                    for src in v.sources() {
                        flows.insert(AbsFlow {
                            src,
                            dst: dst.clone(),
                        });
                    }
                }
                (env.clone(), heap_write(heap, &target.locs, f, &v), flows)
            }
            StatKind::Del(e, f) => {
                let target = self.expr(env, heap, e);
                let at = &decor(&s.pp).before;
                let mut flows = AbsFlows::new();
                for m in &target.locs {
                    let dst = AbsStore::Field(m.clone(), f.clone(), at.clone());
                    for src in &target.deps {
                        flows.insert(AbsFlow {
                            src: src.clone(),
                            dst: dst.clone(),
                        });
                    }
                }
                (env.clone(), heap.clone(), flows)
            }
        }
    }

    fn while_fixpoint_at(
        &mut self,
        pp: &ProgramPoint,
        env: &AbsEnv,
        heap: &AbsHeap,
        _cond: &Expr,
        body: &Stat,
    ) -> (AbsEnv, AbsHeap, AbsFlows) {
        let (mut e0, mut h0) = (env.clone(), heap.clone());
        let mut flows = AbsFlows::new();
        let mut rounds = 0;
        let (mut body_below, mut capped) = (false, false);
        loop {
            rounds += 1;
            let (e1, h1, d) = self.stat(&e0, &h0, body);
            flows.extend(d);
            if e1.leq(&e0) && h1.leq(&h0) {
                body_below = true;
                break;
            }
            if rounds >= self.cap {
                capped = true;
                break;
            }
            e0 = e0.join(&e1);
            h0 = h0.join(&h1);
        }
        let input_below = env.leq(&e0) && heap.leq(&h0);
        debug_assert!(input_below);
        self.loops.push(LoopRecord {
            pp: pp.clone(),
            rounds,
            input_below,
            body_below,
            capped,
        });
        (e0, h0, flows)
    }

    pub fn while_fixpoint(
        &mut self,
        env: &AbsEnv,
        heap: &AbsHeap,
        cond: &Expr,
        body: &Stat,
    ) -> (AbsEnv, AbsHeap, AbsFlows) {
        let pp = cond
            .pp
            .as_ref()
            .and_then(|d| {
                let atoms = d.before.atoms();
                atoms
                    .split_last()
                    .filter(|(l, _)| **l == PathAtom::WhileE)
                    .map(|(_, init)| ProgramPoint::from_atoms(init.to_vec()))
            })
            .unwrap_or_default();
        self.while_fixpoint_at(&pp, env, heap, cond, body)
    }
}

pub fn analyze_expr(env: &AbsEnv, heap: &AbsHeap, e: &Expr) -> AbsVal {
    Analyzer::new().expr(env, heap, e)
}

pub fn analyze_stat(env: &AbsEnv, heap: &AbsHeap, s: &Stat) -> (AbsEnv, AbsHeap, AbsFlows) {
    Analyzer::new().stat(env, heap, s)
}

pub fn while_fixpoint(
    env: &AbsEnv,
    heap: &AbsHeap,
    cond: &Expr,
    body: &Stat,
) -> (AbsEnv, AbsHeap, AbsFlows) {
    Analyzer::new().while_fixpoint(env, heap, cond, body)
}

/// Result of analyzing a whole program from ⊥.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub program: Stat,
    pub env: AbsEnv,
    pub heap: AbsHeap,
    pub flows: AbsFlows,
    pub loops: Vec<LoopRecord>,
}

/// Analyzes `s` from the empty abstract state, annotating it first if needed.
pub fn analyze_program(s: &Stat) -> Analysis {
    let program = if s.is_bare() {
        annotate(s).expect("bare program")
    } else {
        s.clone()
    };
    let mut a = Analyzer::new();
    let (env, heap, flows) = a.stat(&AbsEnv::default(), &AbsHeap::default(), &program);
    Analysis {
        program,
        env,
        heap,
        flows,
        loops: a.loops,
    }
}
