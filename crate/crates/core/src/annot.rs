//! Annotation passes threaded through derivations by the interpreter.
//!
//! Every rule application calls `init` on the annotation it receives. Axioms
//! then call `axiom`. A one-premise rule calls `up`, evaluates its premise and
//! calls `down`. A two-premise rule calls `up`, evaluates the first premise,
//! calls `next` with that premise's output, evaluates the second premise and
//! calls `down`.
//!
//! Passes stack: [`compose`] runs the lower pass first at each hook and hands
//! its fresh annotations to the upper one through the [`Layer`] trait.

use std::fmt;

use crate::ast::{BinOp, Decor, Flow, Ident, Loc, RuleName, Source, Store, Value};
use crate::trace::Trace;

/// Rule-local data made available to the hooks of one rule application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleData {
    None,
    Cst {
        value: Value,
    },
    /// Read of a bound variable.
    Var {
        x: Ident,
        value: Value,
    },
    /// Freshly allocated location.
    Obj {
        loc: Loc,
    },
    Bin2 {
        op: BinOp,
        value: Value,
    },
    /// Field read `loc.field = value`.
    Fld1 {
        loc: Loc,
        field: Ident,
        value: Value,
    },
    Asg1 {
        x: Ident,
        value: Value,
    },
    FldAsg2 {
        loc: Loc,
        field: Ident,
        value: Value,
    },
    Del1 {
        loc: Loc,
        field: Ident,
    },
}

/// Context passed to every hook.
#[derive(Clone, Debug)]
pub struct Hook<'a> {
    pub rule: RuleName,
    pub data: RuleData,
    /// Program points of the term, for normal rules on annotated programs.
    pub node: Option<&'a Decor>,
}

impl<'a> Hook<'a> {
    pub fn new(rule: RuleName) -> Self {
        Hook {
            rule,
            data: RuleData::None,
            node: None,
        }
    }

    pub fn with_data(rule: RuleName, data: RuleData) -> Self {
        Hook {
            rule,
            data,
            node: None,
        }
    }

    pub fn at(rule: RuleName, node: Option<&'a Decor>) -> Self {
        Hook {
            rule,
            data: RuleData::None,
            node,
        }
    }
}

pub trait Pass {
    type Left: Clone;
    type Right: Clone;

    /// Annotation handed to the root rule.
    fn start(&self) -> Self::Left;
    fn init(&self, h: &Hook, incoming: &Self::Left) -> Self::Left;
    fn axiom(&self, h: &Hook, left: &Self::Left) -> Self::Right;
    fn up(&self, h: &Hook, left: &Self::Left) -> Self::Left;
    fn next(&self, h: &Hook, left: &Self::Left, first: &Self::Right) -> Self::Left;
    fn down(&self, h: &Hook, left: &Self::Left, last: &Self::Right) -> Self::Right;
}

/// A pass stacked over `B`. Each hook also receives the annotations `B`
/// produced at the same hook (`b_*` arguments).
pub trait Layer<B: Pass> {
    type Left: Clone;
    type Right: Clone;

    fn start(&self, b_start: &B::Left) -> Self::Left;
    fn init(&self, h: &Hook, incoming: &Self::Left, b_left: &B::Left) -> Self::Left;
    fn axiom(
        &self,
        h: &Hook,
        left: &Self::Left,
        b_left: &B::Left,
        b_right: &B::Right,
    ) -> Self::Right;
    fn up(&self, h: &Hook, left: &Self::Left, b_left: &B::Left, b_up: &B::Left) -> Self::Left;
    #[allow(clippy::too_many_arguments)]
    fn next(
        &self,
        h: &Hook,
        left: &Self::Left,
        first: &Self::Right,
        b_left: &B::Left,
        b_first: &B::Right,
        b_next: &B::Left,
    ) -> Self::Left;
    #[allow(clippy::too_many_arguments)]
    fn down(
        &self,
        h: &Hook,
        left: &Self::Left,
        last: &Self::Right,
        b_left: &B::Left,
        b_last: &B::Right,
        b_down: &B::Right,
    ) -> Self::Right;
}

// A self-contained pass ignores whatever is beneath it.
impl<B: Pass, T: Pass> Layer<B> for T {
    type Left = T::Left;
    type Right = T::Right;

    fn start(&self, _: &B::Left) -> T::Left {
        Pass::start(self)
    }

    fn init(&self, h: &Hook, incoming: &T::Left, _: &B::Left) -> T::Left {
        Pass::init(self, h, incoming)
    }

    fn axiom(&self, h: &Hook, left: &T::Left, _: &B::Left, _: &B::Right) -> T::Right {
        Pass::axiom(self, h, left)
    }

    fn up(&self, h: &Hook, left: &T::Left, _: &B::Left, _: &B::Left) -> T::Left {
        Pass::up(self, h, left)
    }

    fn next(
        &self,
        h: &Hook,
        left: &T::Left,
        first: &T::Right,
        _: &B::Left,
        _: &B::Right,
        _: &B::Left,
    ) -> T::Left {
        Pass::next(self, h, left, first)
    }

    fn down(
        &self,
        h: &Hook,
        left: &T::Left,
        last: &T::Right,
        _: &B::Left,
        _: &B::Right,
        _: &B::Right,
    ) -> T::Right {
        Pass::down(self, h, left, last)
    }
}

/// `Q` stacked over `P`; carriers are pairs `(P, Q)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Stack<P, Q> {
    pub lower: P,
    pub upper: Q,
}

pub fn compose<P: Pass, Q: Layer<P>>(lower: P, upper: Q) -> Stack<P, Q> {
    Stack { lower, upper }
}

impl<P: Pass, Q: Layer<P>> Pass for Stack<P, Q> {
    type Left = (P::Left, Q::Left);
    type Right = (P::Right, Q::Right);

    fn start(&self) -> Self::Left {
        let b = self.lower.start();
        let q = self.upper.start(&b);
        (b, q)
    }

    fn init(&self, h: &Hook, incoming: &Self::Left) -> Self::Left {
        let b = self.lower.init(h, &incoming.0);
        let q = self.upper.init(h, &incoming.1, &b);
        (b, q)
    }

    fn axiom(&self, h: &Hook, left: &Self::Left) -> Self::Right {
        let b = self.lower.axiom(h, &left.0);
        let q = self.upper.axiom(h, &left.1, &left.0, &b);
        (b, q)
    }

    fn up(&self, h: &Hook, left: &Self::Left) -> Self::Left {
        let b = self.lower.up(h, &left.0);
        let q = self.upper.up(h, &left.1, &left.0, &b);
        (b, q)
    }

    fn next(&self, h: &Hook, left: &Self::Left, first: &Self::Right) -> Self::Left {
        let b = self.lower.next(h, &left.0, &first.0);
        let q = self.upper.next(h, &left.1, &first.1, &left.0, &first.0, &b);
        (b, q)
    }

    fn down(&self, h: &Hook, left: &Self::Left, last: &Self::Right) -> Self::Right {
        let b = self.lower.down(h, &left.0, &last.0);
        let q = self.upper.down(h, &left.1, &last.1, &left.0, &last.0, &b);
        (b, q)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct UnitPass;

pub fn unit_pass() -> UnitPass {
    UnitPass
}

impl Pass for UnitPass {
    type Left = ();
    type Right = ();

    fn start(&self) {}
    fn init(&self, _: &Hook, _: &()) {}
    fn axiom(&self, _: &Hook, _: &()) {}
    fn up(&self, _: &Hook, _: &()) {}
    fn next(&self, _: &Hook, _: &(), _: &()) {}
    fn down(&self, _: &Hook, _: &(), _: &()) {}
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TracePass;

pub fn trace_pass() -> TracePass {
    TracePass
}

impl Pass for TracePass {
    type Left = Trace;
    type Right = Trace;

    fn start(&self) -> Trace {
        Trace::new()
    }

    fn init(&self, h: &Hook, incoming: &Trace) -> Trace {
        incoming.enter(h.rule)
    }

    fn axiom(&self, h: &Hook, left: &Trace) -> Trace {
        left.exit(h.rule)
    }

    fn up(&self, _: &Hook, left: &Trace) -> Trace {
        left.clone()
    }

    fn next(&self, _: &Hook, _: &Trace, first: &Trace) -> Trace {
        first.clone()
    }

    fn down(&self, h: &Hook, _: &Trace, last: &Trace) -> Trace {
        last.exit(h.rule)
    }
}

/// Keys of the last-modified map.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ModKey {
    Loc(Loc),
    Var(Ident),
    /// Location, its creation time, field.
    Field(Loc, Trace, Ident),
}

impl fmt::Display for ModKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModKey::Loc(l) => write!(f, "{l}"),
            ModKey::Var(x) => write!(f, "{x}"),
            ModKey::Field(l, t, fld) => write!(f, "({l}@{}).{fld}", t.short(6)),
        }
    }
}

/// Creation time of every location, last write time of every variable and
/// field.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ModMap(pub im::OrdMap<ModKey, Trace>);

impl ModMap {
    pub fn get(&self, k: &ModKey) -> Option<&Trace> {
        self.0.get(k)
    }

    pub fn loc(&self, l: Loc) -> Option<&Trace> {
        self.0.get(&ModKey::Loc(l))
    }

    pub fn var(&self, x: &Ident) -> Option<&Trace> {
        self.0.get(&ModKey::Var(x.clone()))
    }

    /// Key of field `f` of `l`, stamped with `l`'s creation time.
    pub fn field_key(&self, l: Loc, f: &Ident) -> ModKey {
        ModKey::Field(l, self.loc(l).cloned().unwrap_or_default(), f.clone())
    }

    pub fn field(&self, l: Loc, f: &Ident) -> Option<&Trace> {
        self.0.get(&self.field_key(l, f))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DepSet(pub im::OrdSet<Source>);

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FlowSet(pub im::OrdSet<Flow>);

impl FlowSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Flow> {
        self.0.iter()
    }
}

pub trait HasTrace {
    fn trace(&self) -> &Trace;
}

pub trait HasModMap {
    fn modmap(&self) -> &ModMap;
}

pub trait HasDeps {
    fn deps(&self) -> &DepSet;
}

pub trait HasFlows {
    fn flows(&self) -> &FlowSet;
}

impl HasTrace for Trace {
    fn trace(&self) -> &Trace {
        self
    }
}

impl<A: HasTrace, X> HasTrace for (A, X) {
    fn trace(&self) -> &Trace {
        self.0.trace()
    }
}

impl<A> HasModMap for (A, ModMap) {
    fn modmap(&self) -> &ModMap {
        &self.1
    }
}

impl<A: HasModMap> HasModMap for (A, DepSet) {
    fn modmap(&self) -> &ModMap {
        self.0.modmap()
    }
}

impl<A: HasModMap> HasModMap for (A, FlowSet) {
    fn modmap(&self) -> &ModMap {
        self.0.modmap()
    }
}

impl<A> HasDeps for (A, DepSet) {
    fn deps(&self) -> &DepSet {
        &self.1
    }
}

impl<A: HasDeps> HasDeps for (A, FlowSet) {
    fn deps(&self) -> &DepSet {
        self.0.deps()
    }
}

impl<A> HasFlows for (A, FlowSet) {
    fn flows(&self) -> &FlowSet {
        &self.1
    }
}

/// Last-modified map. Needs traces beneath it.
#[derive(Clone, Copy, Debug, Default)]
pub struct LastModPass;

pub fn lastmod_pass() -> LastModPass {
    LastModPass
}

impl<B: Pass> Layer<B> for LastModPass
where
    B::Right: HasTrace,
{
    type Left = ModMap;
    type Right = ModMap;

    fn start(&self, _: &B::Left) -> ModMap {
        ModMap::default()
    }

    fn init(&self, _: &Hook, incoming: &ModMap, _: &B::Left) -> ModMap {
        incoming.clone()
    }

    fn axiom(&self, h: &Hook, m: &ModMap, _: &B::Left, b_right: &B::Right) -> ModMap {
        let now = b_right.trace().clone();
        let key = match &h.data {
            RuleData::Obj { loc } => ModKey::Loc(*loc),
            RuleData::Asg1 { x, .. } => ModKey::Var(x.clone()),
            RuleData::FldAsg2 { loc, field, .. } | RuleData::Del1 { loc, field } => {
                m.field_key(*loc, field)
            }
            _ => return m.clone(),
        };
        ModMap(m.0.update(key, now))
    }

    fn up(&self, _: &Hook, m: &ModMap, _: &B::Left, _: &B::Left) -> ModMap {
        m.clone()
    }

    fn next(
        &self,
        _: &Hook,
        _: &ModMap,
        first: &ModMap,
        _: &B::Left,
        _: &B::Right,
        _: &B::Left,
    ) -> ModMap {
        first.clone()
    }

    fn down(
        &self,
        _: &Hook,
        _: &ModMap,
        last: &ModMap,
        _: &B::Left,
        _: &B::Right,
        _: &B::Right,
    ) -> ModMap {
        last.clone()
    }
}

/// Pending dependencies of the expression being evaluated. Needs traces and
/// the last-modified map beneath it.
#[derive(Clone, Copy, Debug, Default)]
pub struct DepPass;

pub fn dep_pass() -> DepPass {
    DepPass
}

impl<B: Pass> Layer<B> for DepPass
where
    B::Left: HasModMap,
    B::Right: HasTrace,
{
    type Left = DepSet;
    type Right = DepSet;

    fn start(&self, _: &B::Left) -> DepSet {
        DepSet::default()
    }

    fn init(&self, _: &Hook, incoming: &DepSet, _: &B::Left) -> DepSet {
        incoming.clone()
    }

    fn axiom(&self, h: &Hook, d: &DepSet, b_left: &B::Left, b_right: &B::Right) -> DepSet {
        let m = b_left.modmap();
        let src = match &h.data {
            RuleData::Var { x, .. } => {
                Source::Store(Store::Var(x.clone(), m.var(x).cloned().unwrap_or_default()))
            }
            RuleData::Obj { loc } => Source::Alloc(*loc, b_right.trace().clone()),
            RuleData::Fld1 { loc, field, .. } => Source::Store(Store::Field(
                *loc,
                m.loc(*loc).cloned().unwrap_or_default(),
                field.clone(),
                m.field(*loc, field).cloned().unwrap_or_default(),
            )),
            RuleData::Asg1 { .. } | RuleData::FldAsg2 { .. } => return DepSet::default(),
            _ => return d.clone(),
        };
        DepSet(d.0.update(src))
    }

    fn up(&self, _: &Hook, d: &DepSet, _: &B::Left, _: &B::Left) -> DepSet {
        d.clone()
    }

    fn next(
        &self,
        h: &Hook,
        _: &DepSet,
        first: &DepSet,
        _: &B::Left,
        _: &B::Right,
        _: &B::Left,
    ) -> DepSet {
        match h.rule {
            // Condition and target dependencies are dropped.
            RuleName::If | RuleName::While | RuleName::FldAsg | RuleName::Del => DepSet::default(),
            _ => first.clone(),
        }
    }

    fn down(
        &self,
        _: &Hook,
        _: &DepSet,
        last: &DepSet,
        _: &B::Left,
        _: &B::Right,
        _: &B::Right,
    ) -> DepSet {
        last.clone()
    }
}

/// Direct flows. Needs traces, the last-modified map and dependencies
/// beneath it.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlowPass;

pub fn flow_pass() -> FlowPass {
    FlowPass
}

impl<B: Pass> Layer<B> for FlowPass
where
    B::Left: HasModMap + HasDeps,
    B::Right: HasTrace,
{
    type Left = FlowSet;
    type Right = FlowSet;

    fn start(&self, _: &B::Left) -> FlowSet {
        FlowSet::default()
    }

    fn init(&self, _: &Hook, incoming: &FlowSet, _: &B::Left) -> FlowSet {
        incoming.clone()
    }

    fn axiom(&self, h: &Hook, delta: &FlowSet, b_left: &B::Left, b_right: &B::Right) -> FlowSet {
        let now = b_right.trace();
        let dst = match &h.data {
            RuleData::Asg1 { x, .. } => Store::Var(x.clone(), now.clone()),
            RuleData::FldAsg2 { loc, field, .. } => Store::Field(
                *loc,
                b_left.modmap().loc(*loc).cloned().unwrap_or_default(),
                field.clone(),
                now.clone(),
            ),
            _ => return delta.clone(),
        };
        let mut out = delta.0.clone();
        for src in b_left.deps().0.iter() {
            out.insert(Flow {
                src: src.clone(),
                dst: dst.clone(),
            });
        }
        FlowSet(out)
    }

    fn up(&self, _: &Hook, delta: &FlowSet, _: &B::Left, _: &B::Left) -> FlowSet {
        delta.clone()
    }

    fn next(
        &self,
        _: &Hook,
        _: &FlowSet,
        first: &FlowSet,
        _: &B::Left,
        _: &B::Right,
        _: &B::Left,
    ) -> FlowSet {
        first.clone()
    }

    fn down(
        &self,
        _: &Hook,
        _: &FlowSet,
        last: &FlowSet,
        _: &B::Left,
        _: &B::Right,
        _: &B::Right,
    ) -> FlowSet {
        last.clone()
    }
}

pub type TraceModPass = Stack<TracePass, LastModPass>;
pub type TraceModDepPass = Stack<TraceModPass, DepPass>;
/// Traces, last-modified map, dependencies and flows.
pub type FullPass = Stack<TraceModDepPass, FlowPass>;
pub type FullAnn = (((Trace, ModMap), DepSet), FlowSet);

pub fn full_pass() -> FullPass {
    compose(
        compose(compose(trace_pass(), lastmod_pass()), dep_pass()),
        flow_pass(),
    )
}
