//! Fueled pretty-big-step evaluator.
//!
//! Extended terms are not materialized: each extended rule is its own code
//! path and fires its own hooks. Every rule application, `Abort` included,
//! consumes one unit of fuel.

use crate::annot::{Hook, Pass, RuleData, UnitPass};
use crate::ast::{
    deep, BinOp, Expr, ExprKind, ExprResult, Ident, RuleName, Stat, StatKind, StatResult, State,
    Value,
};

/// Budget of rule applications.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Fuel(pub u64);

impl Fuel {
    pub const DEFAULT: Fuel = Fuel(1_000_000);

    /// `OWHILE_FUEL` when set to a positive integer, the default otherwise.
    pub fn from_env() -> Fuel {
        std::env::var("OWHILE_FUEL")
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .filter(|&n| n > 0)
            .map(Fuel)
            .unwrap_or(Fuel::DEFAULT)
    }
}

impl Default for Fuel {
    fn default() -> Self {
        Fuel::DEFAULT
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Outcome<R> {
    Done(R),
    Exhausted,
}

impl<R> Outcome<R> {
    pub fn done(self) -> Option<R> {
        match self {
            Outcome::Done(r) => Some(r),
            Outcome::Exhausted => None,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self, Outcome::Exhausted)
    }

    pub fn map<S>(self, f: impl FnOnce(R) -> S) -> Outcome<S> {
        match self {
            Outcome::Done(r) => Outcome::Done(f(r)),
            Outcome::Exhausted => Outcome::Exhausted,
        }
    }
}

/// Observer of rule applications, called with the machine state.
pub trait Monitor<P: Pass> {
    /// After `init`; `state` is the state the rule starts from.
    fn enter(&mut self, _h: &Hook, _incoming: &P::Left, _left: &P::Left, _state: &State) {}
    /// After the conclusion's annotation is built; `state` is the result state.
    fn exit(
        &mut self,
        _h: &Hook,
        _incoming: &P::Left,
        _left: &P::Left,
        _right: &P::Right,
        _state: &State,
    ) {
    }
}

impl<P: Pass> Monitor<P> for () {}

struct Exhausted;

type Res<T> = Result<T, Exhausted>;

trait HasState {
    fn st(&self) -> &State;
}

impl HasState for StatResult {
    fn st(&self) -> &State {
        self.state()
    }
}

impl HasState for ExprResult {
    fn st(&self) -> &State {
        self.state()
    }
}

struct Machine<'a, P: Pass, M: Monitor<P>> {
    pass: &'a P,
    monitor: &'a mut M,
    fuel: u64,
}

impl<'a, P: Pass, M: Monitor<P>> Machine<'a, P, M> {
    fn tick(&mut self) -> Res<()> {
        if self.fuel == 0 {
            return Err(Exhausted);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn axiom<R: HasState>(
        &mut self,
        h: Hook,
        incoming: &P::Left,
        start: &State,
        result: R,
    ) -> Res<(R, P::Right)> {
        self.tick()?;
        let left = self.pass.init(&h, incoming);
        self.monitor.enter(&h, incoming, &left, start);
        let right = self.pass.axiom(&h, &left);
        self.monitor.exit(&h, incoming, &left, &right, result.st());
        Ok((result, right))
    }

    fn abort<R: HasState>(&mut self, incoming: &P::Left, result: R) -> Res<(R, P::Right)> {
        let start = result.st().clone();
        self.axiom(Hook::new(RuleName::Abort), incoming, &start, result)
    }

    fn rule1<R: HasState>(
        &mut self,
        h: Hook,
        incoming: &P::Left,
        start: &State,
        premise: impl FnOnce(&mut Self, &P::Left) -> Res<(R, P::Right)>,
    ) -> Res<(R, P::Right)> {
        self.tick()?;
        let left = self.pass.init(&h, incoming);
        self.monitor.enter(&h, incoming, &left, start);
        let up = self.pass.up(&h, &left);
        let (r, child) = premise(self, &up)?;
        let right = self.pass.down(&h, &left, &child);
        self.monitor.exit(&h, incoming, &left, &right, r.st());
        Ok((r, right))
    }

    fn rule2<R1, R: HasState>(
        &mut self,
        h: Hook,
        incoming: &P::Left,
        start: &State,
        first: impl FnOnce(&mut Self, &P::Left) -> Res<(R1, P::Right)>,
        second: impl FnOnce(&mut Self, R1, &P::Left) -> Res<(R, P::Right)>,
    ) -> Res<(R, P::Right)> {
        self.tick()?;
        let left = self.pass.init(&h, incoming);
        self.monitor.enter(&h, incoming, &left, start);
        let up = self.pass.up(&h, &left);
        let (r1, c1) = first(self, &up)?;
        let next = self.pass.next(&h, &left, &c1);
        let (r, c2) = second(self, r1, &next)?;
        let right = self.pass.down(&h, &left, &c2);
        self.monitor.exit(&h, incoming, &left, &right, r.st());
        Ok((r, right))
    }

    fn stat(&mut self, st: &State, s: &Stat, inc: &P::Left) -> Res<(StatResult, P::Right)> {
        deep(|| self.stat_inner(st, s, inc))
    }

    fn stat_inner(&mut self, st: &State, s: &Stat, inc: &P::Left) -> Res<(StatResult, P::Right)> {
        let node = s.pp.as_ref();
        match &s.kind {
            StatKind::Skip => self.axiom(
                Hook::at(RuleName::Skip, node),
                inc,
                st,
                StatResult::Ok(st.clone()),
            ),
            StatKind::Seq(s1, s2) => self.rule2(
                Hook::at(RuleName::Seq, node),
                inc,
                st,
                |m, l| m.stat(st, s1, l),
                |m, r1, l| m.seq1(r1, s2, l),
            ),
            StatKind::If(c, s1, s2) => self.rule2(
                Hook::at(RuleName::If, node),
                inc,
                st,
                |m, l| m.expr(st, c, l),
                |m, r, l| m.if1(r, s1, s2, l),
            ),
            StatKind::While(..) => self.rule2(
                Hook::at(RuleName::While, node),
                inc,
                st,
                |m, l| match &s.kind {
                    StatKind::While(c, _) => m.expr(st, c, l),
                    _ => unreachable!(),
                },
                |m, r, l| m.while1(r, s, l),
            ),
            StatKind::Asg(x, e) => self.rule2(
                Hook::at(RuleName::Asg, node),
                inc,
                st,
                |m, l| m.expr(st, e, l),
                |m, r, l| m.asg1(r, x, l),
            ),
            StatKind::FldAsg(e1, f, e2) => self.rule2(
                Hook::at(RuleName::FldAsg, node),
                inc,
                st,
                |m, l| m.expr(st, e1, l),
                |m, r, l| m.fldasg1(r, f, e2, l),
            ),
            StatKind::Del(e, f) => self.rule2(
                Hook::at(RuleName::Del, node),
                inc,
                st,
                |m, l| m.expr(st, e, l),
                |m, r, l| m.del1(r, f, l),
            ),
        }
    }

    fn seq1(&mut self, r1: StatResult, s2: &Stat, inc: &P::Left) -> Res<(StatResult, P::Right)> {
        match r1 {
            StatResult::Err(_) => self.abort(inc, r1),
            StatResult::Ok(st) => self.rule1(Hook::new(RuleName::Seq1), inc, &st, |m, l| {
                m.stat(&st, s2, l)
            }),
        }
    }

    fn if1(
        &mut self,
        r: ExprResult,
        s1: &Stat,
        s2: &Stat,
        inc: &P::Left,
    ) -> Res<(StatResult, P::Right)> {
        match r {
            ExprResult::Val(st, Value::Const(b)) => {
                let (rule, branch) = if b {
                    (RuleName::IfTrue, s1)
                } else {
                    (RuleName::IfFalse, s2)
                };
                self.rule1(Hook::new(rule), inc, &st, |m, l| m.stat(&st, branch, l))
            }
            ExprResult::Val(st, Value::Loc(_)) | ExprResult::Err(st) => {
                self.abort(inc, StatResult::Err(st))
            }
        }
    }

    /// `w` is the whole loop.
    fn while1(&mut self, r: ExprResult, w: &Stat, inc: &P::Left) -> Res<(StatResult, P::Right)> {
        let StatKind::While(_, body) = &w.kind else {
            unreachable!()
        };
        match r {
            ExprResult::Val(st, Value::Const(true)) => self.rule2(
                Hook::new(RuleName::WhileTrue1),
                inc,
                &st,
                |m, l| m.stat(&st, body, l),
                |m, r1, l| m.while2(r1, w, l),
            ),
            ExprResult::Val(st, Value::Const(false)) => self.axiom(
                Hook::new(RuleName::WhileFalse),
                inc,
                &st,
                StatResult::Ok(st.clone()),
            ),
            ExprResult::Val(st, Value::Loc(_)) | ExprResult::Err(st) => {
                self.abort(inc, StatResult::Err(st))
            }
        }
    }

    fn while2(&mut self, r1: StatResult, w: &Stat, inc: &P::Left) -> Res<(StatResult, P::Right)> {
        match r1 {
            StatResult::Err(_) => self.abort(inc, r1),
            StatResult::Ok(st) => self.rule1(Hook::new(RuleName::WhileTrue2), inc, &st, |m, l| {
                m.stat(&st, w, l)
            }),
        }
    }

    fn asg1(&mut self, r: ExprResult, x: &Ident, inc: &P::Left) -> Res<(StatResult, P::Right)> {
        match r {
            ExprResult::Err(st) => self.abort(inc, StatResult::Err(st)),
            ExprResult::Val(st, v) => {
                let mut out = st.clone();
                out.env.insert(x.clone(), v);
                let h = Hook::with_data(
                    RuleName::Asg1,
                    RuleData::Asg1 {
                        x: x.clone(),
                        value: v,
                    },
                );
                self.axiom(h, inc, &st, StatResult::Ok(out))
            }
        }
    }

    fn fldasg1(
        &mut self,
        r: ExprResult,
        f: &Ident,
        e2: &Expr,
        inc: &P::Left,
    ) -> Res<(StatResult, P::Right)> {
        match r {
            ExprResult::Val(st, Value::Loc(l)) if st.heap.contains_key(&l) => self.rule2(
                Hook::new(RuleName::FldAsg1),
                inc,
                &st,
                |m, lft| m.expr(&st, e2, lft),
                |m, r2, lft| m.fldasg2(l, f, r2, lft),
            ),
            ExprResult::Val(st, _) | ExprResult::Err(st) => self.abort(inc, StatResult::Err(st)),
        }
    }

    fn fldasg2(
        &mut self,
        l: crate::ast::Loc,
        f: &Ident,
        r: ExprResult,
        inc: &P::Left,
    ) -> Res<(StatResult, P::Right)> {
        match r {
            ExprResult::Val(st, v) if st.heap.contains_key(&l) => {
                let mut out = st.clone();
                let obj = out.heap[&l].update(f.clone(), v);
                out.heap.insert(l, obj);
                let h = Hook::with_data(
                    RuleName::FldAsg2,
                    RuleData::FldAsg2 {
                        loc: l,
                        field: f.clone(),
                        value: v,
                    },
                );
                self.axiom(h, inc, &st, StatResult::Ok(out))
            }
            ExprResult::Val(st, _) | ExprResult::Err(st) => self.abort(inc, StatResult::Err(st)),
        }
    }

    fn del1(&mut self, r: ExprResult, f: &Ident, inc: &P::Left) -> Res<(StatResult, P::Right)> {
        match r {
            ExprResult::Val(st, Value::Loc(l))
                if st.heap.get(&l).is_some_and(|o| o.contains_key(f)) =>
            {
                let mut out = st.clone();
                let obj = out.heap[&l].without(f);
                out.heap.insert(l, obj);
                let h = Hook::with_data(
                    RuleName::Del1,
                    RuleData::Del1 {
                        loc: l,
                        field: f.clone(),
                    },
                );
                self.axiom(h, inc, &st, StatResult::Ok(out))
            }
            ExprResult::Val(st, _) | ExprResult::Err(st) => self.abort(inc, StatResult::Err(st)),
        }
    }

    fn expr(&mut self, st: &State, e: &Expr, inc: &P::Left) -> Res<(ExprResult, P::Right)> {
        deep(|| self.expr_inner(st, e, inc))
    }

    fn expr_inner(&mut self, st: &State, e: &Expr, inc: &P::Left) -> Res<(ExprResult, P::Right)> {
        let node = e.pp.as_ref();
        match &e.kind {
            ExprKind::Cst(b) => {
                let value = Value::Const(*b);
                let h = Hook {
                    rule: RuleName::Cst,
                    data: RuleData::Cst { value },
                    node,
                };
                self.axiom(h, inc, st, ExprResult::Val(st.clone(), value))
            }
            ExprKind::Var(x) => match st.env.get(x) {
                Some(&value) => {
                    let h = Hook {
                        rule: RuleName::Var,
                        data: RuleData::Var {
                            x: x.clone(),
                            value,
                        },
                        node,
                    };
                    self.axiom(h, inc, st, ExprResult::Val(st.clone(), value))
                }
                None => self.abort(inc, ExprResult::Err(st.clone())),
            },
            ExprKind::ObjNew => {
                let (out, loc) = st.alloc();
                let h = Hook {
                    rule: RuleName::Obj,
                    data: RuleData::Obj { loc },
                    node,
                };
                self.axiom(h, inc, st, ExprResult::Val(out, Value::Loc(loc)))
            }
            ExprKind::Bin(op, e1, e2) => self.rule2(
                Hook::at(RuleName::Bin, node),
                inc,
                st,
                |m, l| m.expr(st, e1, l),
                |m, r, l| m.bin1(r, *op, e2, l),
            ),
            ExprKind::Fld(e1, f) => self.rule2(
                Hook::at(RuleName::Fld, node),
                inc,
                st,
                |m, l| m.expr(st, e1, l),
                |m, r, l| m.fld1(r, f, l),
            ),
        }
    }

    fn bin1(
        &mut self,
        r: ExprResult,
        op: BinOp,
        e2: &Expr,
        inc: &P::Left,
    ) -> Res<(ExprResult, P::Right)> {
        match r {
            ExprResult::Err(_) => self.abort(inc, r),
            ExprResult::Val(st, v1) => self.rule2(
                Hook::new(RuleName::Bin1),
                inc,
                &st,
                |m, l| m.expr(&st, e2, l),
                |m, r2, l| m.bin2(v1, op, r2, l),
            ),
        }
    }

    fn bin2(
        &mut self,
        v1: Value,
        op: BinOp,
        r: ExprResult,
        inc: &P::Left,
    ) -> Res<(ExprResult, P::Right)> {
        match r {
            ExprResult::Err(_) => self.abort(inc, r),
            ExprResult::Val(st, v2) => match op.apply(v1, v2) {
                Some(value) => {
                    let h = Hook::with_data(RuleName::Bin2, RuleData::Bin2 { op, value });
                    let out = ExprResult::Val(st.clone(), value);
                    self.axiom(h, inc, &st, out)
                }
                None => self.abort(inc, ExprResult::Err(st)),
            },
        }
    }

    fn fld1(&mut self, r: ExprResult, f: &Ident, inc: &P::Left) -> Res<(ExprResult, P::Right)> {
        match r {
            ExprResult::Val(st, Value::Loc(l)) => {
                match st.heap.get(&l).and_then(|o| o.get(f)).copied() {
                    Some(value) => {
                        let h = Hook::with_data(
                            RuleName::Fld1,
                            RuleData::Fld1 {
                                loc: l,
                                field: f.clone(),
                                value,
                            },
                        );
                        let out = ExprResult::Val(st.clone(), value);
                        self.axiom(h, inc, &st, out)
                    }
                    None => self.abort(inc, ExprResult::Err(st)),
                }
            }
            ExprResult::Val(st, _) | ExprResult::Err(st) => self.abort(inc, ExprResult::Err(st)),
        }
    }
}

/// Evaluates `s` from `state`, starting the pass from `incoming` and reporting
/// every rule application to `monitor`.
pub fn eval_stat_with<P: Pass, M: Monitor<P>>(
    state: &State,
    s: &Stat,
    fuel: Fuel,
    pass: &P,
    incoming: &P::Left,
    monitor: &mut M,
) -> Outcome<(StatResult, P::Right)> {
    let mut m = Machine {
        pass,
        monitor,
        fuel: fuel.0,
    };
    match m.stat(state, s, incoming) {
        Ok(r) => Outcome::Done(r),
        Err(Exhausted) => Outcome::Exhausted,
    }
}

pub fn eval_expr_with<P: Pass, M: Monitor<P>>(
    state: &State,
    e: &Expr,
    fuel: Fuel,
    pass: &P,
    incoming: &P::Left,
    monitor: &mut M,
) -> Outcome<(ExprResult, P::Right)> {
    let mut m = Machine {
        pass,
        monitor,
        fuel: fuel.0,
    };
    match m.expr(state, e, incoming) {
        Ok(r) => Outcome::Done(r),
        Err(Exhausted) => Outcome::Exhausted,
    }
}

pub fn eval_stat<P: Pass>(
    state: &State,
    s: &Stat,
    fuel: Fuel,
    pass: &P,
) -> Outcome<(StatResult, P::Right)> {
    eval_stat_with(state, s, fuel, pass, &pass.start(), &mut ())
}

pub fn eval_expr<P: Pass>(
    state: &State,
    e: &Expr,
    fuel: Fuel,
    pass: &P,
) -> Outcome<(ExprResult, P::Right)> {
    eval_expr_with(state, e, fuel, pass, &pass.start(), &mut ())
}

/// Runs `s` from the empty state without instrumentation.
pub fn run(s: &Stat, fuel: Fuel) -> Outcome<StatResult> {
    eval_stat(&State::empty(), s, fuel, &UnitPass).map(|(r, ())| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annot::{full_pass, trace_pass, HasFlows, HasModMap};
    use crate::ast::{Loc, Object};
    use crate::parser::parse_str;

    fn ok_state(o: Outcome<StatResult>) -> State {
        match o {
            Outcome::Done(StatResult::Ok(s)) => s,
            other => panic!("expected Ok, got {other:?}"),
        }
    }

    fn err_state(o: Outcome<StatResult>) -> State {
        match o {
            Outcome::Done(StatResult::Err(s)) => s,
            other => panic!("expected Err, got {other:?}"),
        }
    }

    fn env_of(s: &State) -> Vec<(String, Value)> {
        s.env.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn two_assignments() {
        let s = ok_state(run(&parse_str("x = true; y = x").unwrap(), Fuel(100)));
        assert_eq!(
            env_of(&s),
            vec![
                ("x".into(), Value::Const(true)),
                ("y".into(), Value::Const(true))
            ]
        );
        assert!(s.heap.is_empty());
    }

    #[test]
    fn skip_keeps_state() {
        let (st, _) = State::empty().alloc();
        let out = eval_stat(&st, &Stat::skip(), Fuel(1), &UnitPass);
        assert_eq!(out, Outcome::Done((StatResult::Ok(st), ())));
        assert!(eval_stat(&State::empty(), &Stat::skip(), Fuel(0), &UnitPass).is_exhausted());
    }

    #[test]
    fn delete_on_unbound_variable() {
        let st = err_state(run(&parse_str("delete x.f").unwrap(), Fuel(100)));
        assert_eq!(st, State::empty());
    }

    #[test]
    fn expression_results() {
        let e = Expr::cst(true);
        assert_eq!(
            eval_expr(&State::empty(), &e, Fuel(10), &UnitPass),
            Outcome::Done((ExprResult::Val(State::empty(), Value::Const(true)), ()))
        );
        let Outcome::Done((ExprResult::Val(st, v), ())) =
            eval_expr(&State::empty(), &Expr::obj(), Fuel(10), &UnitPass)
        else {
            panic!()
        };
        assert_eq!(v, Value::Loc(Loc(0)));
        assert_eq!(st.next_loc, 1);
        assert_eq!(st.heap.get(&Loc(0)), Some(&Object::new()));

        let mut st = State::empty();
        st.env.insert(Ident::new("x"), Value::Const(true));
        for (a, b) in [(true, true), (true, false), (false, true), (false, false)] {
            for op in [BinOp::And, BinOp::Or, BinOp::Eq] {
                let e = Expr::bin(op, Expr::cst(a), Expr::cst(b));
                let want = match op {
                    BinOp::And => a & b,
                    BinOp::Or => a | b,
                    BinOp::Eq => a == b,
                };
                let got = eval_expr(&st, &e, Fuel(10), &UnitPass).done().unwrap().0;
                assert_eq!(got, ExprResult::Val(st.clone(), Value::Const(want)));
            }
        }
        let e = Expr::bin(BinOp::And, Expr::var("x"), Expr::cst(false));
        let got = eval_expr(&st, &e, Fuel(10), &UnitPass).done().unwrap().0;
        assert_eq!(got, ExprResult::Val(st, Value::Const(false)));
    }

    #[test]
    fn branch_alloc_final_state() {
        let p = parse_str("x = {}; x.f = {}; if false then { y = x.f } else { y = {} }").unwrap();
        let s = ok_state(run(&p, Fuel(1000)));
        assert_eq!(
            s.to_string(),
            "env {x=#0, y=#2} heap {#0={f=#1}, #1={}, #2={}}"
        );
    }

    #[test]
    fn divergence_exhausts() {
        let p = parse_str("while true do { skip }").unwrap();
        assert_eq!(run(&p, Fuel(50)), Outcome::Exhausted);
    }

    #[test]
    fn fuel_counts_every_rule_application() {
        // Seq, Asg, Cst, Asg1, Seq1, Asg, Var, Asg1
        let p = parse_str("x = true; y = x").unwrap();
        assert!(run(&p, Fuel(7)).is_exhausted());
        assert!(!run(&p, Fuel(8)).is_exhausted());
        // Asg, Abort (unbound z), Abort (Asg1 on error)
        let p = parse_str("y = z").unwrap();
        assert!(run(&p, Fuel(2)).is_exhausted());
        assert!(!run(&p, Fuel(3)).is_exhausted());
    }

    #[test]
    fn long_loop_does_not_overflow() {
        let p = parse_str("x = true; while x do { skip }").unwrap();
        assert!(run(&p, Fuel(300_000)).is_exhausted());
    }

    #[test]
    fn loop_with_guard() {
        let p = parse_str("g = true; while g do { x = {}; g = false }").unwrap();
        let s = ok_state(run(&p, Fuel(100)));
        assert_eq!(s.to_string(), "env {g=false, x=#0} heap {#0={}}");
    }

    #[test]
    fn error_cases() {
        let cases = [
            ("x = true; y = z", "env {x=true} heap {}"),
            (
                "x = {}; if x then { skip } else { skip }",
                "env {x=#0} heap {#0={}}",
            ),
            ("x = {}; while x do { skip }", "env {x=#0} heap {#0={}}"),
            ("x = {}; y = x && true", "env {x=#0} heap {#0={}}"),
            ("x = true; y = x.f", "env {x=true} heap {}"),
            ("x = {}; y = x.f", "env {x=#0} heap {#0={}}"),
            ("x = false; x.f = true", "env {x=false} heap {}"),
            ("x = true; delete x.f", "env {x=true} heap {}"),
            ("x = {}; delete x.f", "env {x=#0} heap {#0={}}"),
        ];
        for (src, want) in cases {
            let st = err_state(run(&parse_str(src).unwrap(), Fuel(1000)));
            assert_eq!(st.to_string(), want, "{src}");
            assert!(st.is_well_formed());
        }
    }

    fn expr_in(st: &State, src: &str) -> ExprResult {
        let p = parse_str(&format!("r = {src}")).unwrap();
        let StatKind::Asg(_, e) = p.kind else {
            panic!()
        };
        eval_expr(st, &e, Fuel(100), &UnitPass).done().unwrap().0
    }

    #[test]
    fn unbound_locations_abort() {
        // Only reachable from ill-formed states.
        let mut st = State::empty();
        st.env.insert(Ident::new("d"), Value::Loc(Loc(7)));
        assert_eq!(expr_in(&st, "d.f"), ExprResult::Err(st.clone()));
        let fa = parse_str("d.f = true").unwrap();
        assert_eq!(
            eval_stat(&st, &fa, Fuel(100), &UnitPass).done().unwrap().0,
            StatResult::Err(st.clone())
        );
        let del = parse_str("delete d.f").unwrap();
        assert_eq!(
            eval_stat(&st, &del, Fuel(100), &UnitPass).done().unwrap().0,
            StatResult::Err(st.clone())
        );
        // The target is removed while the right-hand side is evaluated.
        let mut ctl = Machine {
            pass: &UnitPass,
            monitor: &mut (),
            fuel: 100,
        };
        let (r, ()) = ctl
            .fldasg2(
                Loc(7),
                &Ident::new("f"),
                ExprResult::Val(st.clone(), Value::Const(true)),
                &(),
            )
            .ok()
            .unwrap();
        assert_eq!(r, StatResult::Err(st));
    }

    #[test]
    fn abort_propagates_through_nesting() {
        let p = parse_str(
            "c = true; while c do { if true then { x = {}; y = x.g } else { skip }; c = false }",
        )
        .unwrap();
        let (r, t) = eval_stat(&State::empty(), &p, Fuel(1000), &trace_pass())
            .done()
            .unwrap();
        assert_eq!(r.state().to_string(), "env {c=true, x=#0} heap {#0={}}");
        assert!(r.is_err());
        let aborts = t
            .to_vec()
            .iter()
            .filter(|a| a.name == RuleName::Abort)
            .count();
        // Fld1, Asg1, Seq1 of the loop body, WhileTrue2.
        assert_eq!(aborts, 8);
        assert!(t.is_balanced());
    }

    #[test]
    fn instrumented_run_matches_plain_run() {
        let p = parse_str("x = {}; x.f = {}; if false then { y = x.f } else { y = {} }").unwrap();
        let plain = run(&p, Fuel(1000)).done().unwrap();
        let (full, ann) = eval_stat(&State::empty(), &p, Fuel(1000), &full_pass())
            .done()
            .unwrap();
        assert_eq!(plain, full);
        assert_eq!(ann.flows().len(), 3);
        assert!(ann.modmap().len() >= 5);
    }
}
