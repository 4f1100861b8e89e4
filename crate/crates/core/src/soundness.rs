//! Executable checks of the instrumentation invariants and of analysis
//! soundness, plus a random program generator to drive them.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{analyze_program, AbsSource, AbsStore};
use crate::annot::{
    full_pass, trace_pass, FullAnn, FullPass, HasDeps, HasFlows, HasModMap, HasTrace, Hook, ModKey,
    RuleData, TracePass,
};
use crate::ast::{BinOp, Expr, Ident, Loc, Object, RuleName, Source, Stat, State, Store};
use crate::interp::{eval_stat_with, run, Fuel, Monitor, Outcome};
use crate::parser::annotate;
use crate::pp::{PathAtom, ProgramPoint};
use crate::ppmap::PrefixMemo;
use crate::trace::Trace;

const MAX_WITNESSES: usize = 20;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Status {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "skipped-nonterminating")]
    SkippedNonterminating,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::SkippedNonterminating => "skipped-nonterminating",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckReport {
    pub program_id: String,
    pub check_name: String,
    pub status: Status,
    pub witnesses: Vec<String>,
}

impl CheckReport {
    fn new(check: &str, witnesses: Vec<String>) -> Self {
        CheckReport {
            program_id: String::new(),
            check_name: check.to_string(),
            status: if witnesses.is_empty() {
                Status::Pass
            } else {
                Status::Fail
            },
            witnesses,
        }
    }

    fn skipped(check: &str) -> Self {
        CheckReport {
            program_id: String::new(),
            check_name: check.to_string(),
            status: Status::SkippedNonterminating,
            witnesses: Vec::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.program_id = id.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}",
            self.program_id, self.check_name, self.status
        )?;
        for w in &self.witnesses {
            write!(f, "\n  {w}")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Witnesses(Vec<String>);

impl Witnesses {
    fn push(&mut self, w: impl FnOnce() -> String) {
        if self.0.len() < MAX_WITNESSES {
            self.0.push(w());
        }
    }
}

fn terminates(s: &Stat, fuel: Fuel) -> bool {
    !run(s, fuel).is_exhausted()
}

fn annotated(s: &Stat) -> Stat {
    if s.is_bare() {
        annotate(s).expect("bare program")
    } else {
        s.clone()
    }
}

struct Prop1 {
    memo: PrefixMemo,
    w: Witnesses,
}

impl Prop1 {
    fn expect(&mut self, h: &Hook, what: &str, t: &Trace, want: &ProgramPoint) {
        let (got, left) = self.memo.eval(t);
        if got != *want || !left.is_empty() {
            let rule = h.rule;
            self.w.push(|| {
                format!(
                    "{rule} {what}: trace {} maps to {got} with unmatched {left:?}, expected {want}",
                    t.short(8)
                )
            });
        }
    }
}

impl Monitor<TracePass> for Prop1 {
    fn enter(&mut self, h: &Hook, incoming: &Trace, _: &Trace, _: &State) {
        if !h.rule.is_normal() {
            return;
        }
        let Some(d) = h.node else {
            let rule = h.rule;
            self.w
                .push(|| format!("{rule}: term carries no program points"));
            return;
        };
        let construct = PathAtom::construct(h.rule).expect("normal rule");
        if d.after != d.before.child(construct) {
            let (b, a) = (d.before.clone(), d.after.clone());
            self.w
                .push(|| format!("{construct:?}: after point {a} is not {b}/{construct:?}"));
        }
        self.expect(h, "before", incoming, &d.before);
    }

    fn exit(&mut self, h: &Hook, _: &Trace, _: &Trace, right: &Trace, _: &State) {
        if let (true, Some(d)) = (h.rule.is_normal(), h.node) {
            self.expect(h, "after", right, &d.after);
        }
    }
}

/// Program points are recovered exactly from the traces around every normal
/// rule application.
pub fn check_prop1(s: &Stat, fuel: Fuel) -> CheckReport {
    const NAME: &str = "prop1";
    if !terminates(s, fuel) {
        return CheckReport::skipped(NAME);
    }
    let prog = annotated(s);
    let pass = trace_pass();
    let mut mon = Prop1 {
        memo: PrefixMemo::new(),
        w: Witnesses::default(),
    };
    let out = eval_stat_with(&State::empty(), &prog, fuel, &pass, &Trace::new(), &mut mon);
    if out.is_exhausted() {
        return CheckReport::skipped(NAME);
    }
    CheckReport::new(NAME, mon.w.0)
}

/// Heap snapshots taken whenever a field's modification time is set.
#[derive(Default)]
struct Snapshots(BTreeMap<usize, im::OrdMap<Loc, Object>>);

struct Prop2 {
    snaps: Snapshots,
    w: Witnesses,
}

impl Monitor<FullPass> for Prop2 {
    fn exit(&mut self, h: &Hook, _: &FullAnn, _: &FullAnn, right: &FullAnn, st: &State) {
        if !matches!(h.rule, RuleName::Obj | RuleName::FldAsg2 | RuleName::Del1) {
            return;
        }
        if matches!(h.rule, RuleName::FldAsg2 | RuleName::Del1) {
            self.snaps.0.insert(right.trace().len(), st.heap.clone());
        }
        let m = right.modmap();
        for (k, t1) in m.0.iter() {
            let ModKey::Field(l, t0, f) = k else { continue };
            if m.loc(*l) != Some(t0) {
                self.w
                    .push(|| format!("field key {k} stamped with a stale creation time"));
            }
            let now = st.heap.get(l).and_then(|o| o.get(f));
            let then = self
                .snaps
                .0
                .get(&t1.len())
                .map(|hp| hp.get(l).and_then(|o| o.get(f)));
            match then {
                None => self
                    .w
                    .push(|| format!("no heap snapshot at {}", t1.short(6))),
                Some(then) if then != now => self.w.push(|| {
                    format!(
                        "{k} last modified at {} held {then:?}, heap now holds {now:?}",
                        t1.short(6)
                    )
                }),
                _ => {}
            }
        }
    }
}

/// Field modification times agree with creation times and with the heap.
pub fn check_prop2(s: &Stat, fuel: Fuel) -> CheckReport {
    const NAME: &str = "prop2";
    if !terminates(s, fuel) {
        return CheckReport::skipped(NAME);
    }
    let pass = full_pass();
    let mut mon = Prop2 {
        snaps: Snapshots::default(),
        w: Witnesses::default(),
    };
    let prog = annotated(s);
    let out = eval_stat_with(
        &State::empty(),
        &prog,
        fuel,
        &pass,
        &pass_start(&pass),
        &mut mon,
    );
    if out.is_exhausted() {
        return CheckReport::skipped(NAME);
    }
    CheckReport::new(NAME, mon.w.0)
}

fn pass_start(p: &FullPass) -> FullAnn {
    crate::annot::Pass::start(p)
}

/// Destination written by an assignment axiom, stamped with `now`.
fn written_store(h: &Hook, left: &FullAnn, now: &Trace) -> Option<Store> {
    match &h.data {
        RuleData::Asg1 { x, .. } => Some(Store::Var(x.clone(), now.clone())),
        RuleData::FldAsg2 { loc, field, .. } => Some(Store::Field(
            *loc,
            left.modmap().loc(*loc).cloned().unwrap_or_default(),
            field.clone(),
            now.clone(),
        )),
        _ => None,
    }
}

struct Prop3 {
    w: Witnesses,
}

impl Monitor<FullPass> for Prop3 {
    fn exit(&mut self, h: &Hook, _: &FullAnn, left: &FullAnn, right: &FullAnn, _: &State) {
        let Some(dst) = written_store(h, left, right.trace()) else {
            return;
        };
        for src in left.deps().0.iter() {
            let flow = crate::ast::Flow {
                src: src.clone(),
                dst: dst.clone(),
            };
            if !right.flows().0.contains(&flow) {
                self.w.push(|| format!("flow {flow} missing after write"));
            }
            if let Source::Store(Store::Var(x, t1)) = src {
                // Compared against the map before the write, so `x = x`
                // still refers to the previous write of x.
                let last = left.modmap().var(x);
                if last != Some(t1) {
                    self.w.push(|| {
                        format!(
                            "flow {flow}: last write of {x} was at {}",
                            last.map(|t| t.short(6)).unwrap_or_else(|| "never".into())
                        )
                    });
                }
            }
        }
    }
}

/// Variable sources of flows name the latest write of the variable.
pub fn check_prop3(s: &Stat, fuel: Fuel) -> CheckReport {
    const NAME: &str = "prop3";
    if !terminates(s, fuel) {
        return CheckReport::skipped(NAME);
    }
    let pass = full_pass();
    let mut mon = Prop3 {
        w: Witnesses::default(),
    };
    let prog = annotated(s);
    let out = eval_stat_with(
        &State::empty(),
        &prog,
        fuel,
        &pass,
        &pass_start(&pass),
        &mut mon,
    );
    if out.is_exhausted() {
        return CheckReport::skipped(NAME);
    }
    CheckReport::new(NAME, mon.w.0)
}

struct Prop4 {
    adj: BTreeMap<Source, BTreeSet<Store>>,
    checked: HashSet<(Loc, Ident, usize)>,
    w: Witnesses,
}

impl Prop4 {
    fn chain(&self, from: Source, to: &Store) -> bool {
        let mut seen: HashSet<Source> = HashSet::new();
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            if !seen.insert(s.clone()) {
                continue;
            }
            for d in self.adj.get(&s).into_iter().flatten() {
                if d == to {
                    return true;
                }
                queue.push_back(Source::Store(d.clone()));
            }
        }
        false
    }
}

impl Monitor<FullPass> for Prop4 {
    fn exit(&mut self, h: &Hook, _: &FullAnn, left: &FullAnn, right: &FullAnn, st: &State) {
        let Some(dst) = written_store(h, left, right.trace()) else {
            return;
        };
        for src in left.deps().0.iter() {
            self.adj.entry(src.clone()).or_default().insert(dst.clone());
        }
        if h.rule != RuleName::FldAsg2 {
            return;
        }
        let m = right.modmap();
        for (l2, obj) in st.heap.iter() {
            for (f, v) in obj.iter() {
                let Some(l) = v.as_loc() else { continue };
                let Some(tm) = m.field(*l2, f) else {
                    self.w
                        .push(|| format!("{l2}.{f} holds {l} but was never written"));
                    continue;
                };
                if !self.checked.insert((*l2, f.clone(), tm.len())) {
                    continue;
                }
                let from = Source::Alloc(l, m.loc(l).cloned().unwrap_or_default());
                let to = Store::Field(
                    *l2,
                    m.loc(*l2).cloned().unwrap_or_default(),
                    f.clone(),
                    tm.clone(),
                );
                if !self.chain(from.clone(), &to) {
                    self.w
                        .push(|| format!("no chain of flows from {from} to {to}"));
                }
            }
        }
    }
}

/// Every location stored in a field reached it through a chain of flows.
pub fn check_prop4(s: &Stat, fuel: Fuel) -> CheckReport {
    const NAME: &str = "prop4";
    if !terminates(s, fuel) {
        return CheckReport::skipped(NAME);
    }
    let pass = full_pass();
    let mut mon = Prop4 {
        adj: BTreeMap::new(),
        checked: HashSet::new(),
        w: Witnesses::default(),
    };
    let prog = annotated(s);
    let out = eval_stat_with(
        &State::empty(),
        &prog,
        fuel,
        &pass,
        &pass_start(&pass),
        &mut mon,
    );
    if out.is_exhausted() {
        return CheckReport::skipped(NAME);
    }
    CheckReport::new(NAME, mon.w.0)
}

/// How an abstract source is compared with an abstracted concrete one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
enum SourceKey {
    Obj(ProgramPoint),
    Var(Ident),
    Field(ProgramPoint, Ident),
}

fn source_key(s: &AbsSource) -> SourceKey {
    match s {
        AbsSource::Obj(p) => SourceKey::Obj(p.clone()),
        AbsSource::Store(AbsStore::Var(x, _)) => SourceKey::Var(x.clone()),
        AbsSource::Store(AbsStore::Field(a, f, _)) => SourceKey::Field(a.clone(), f.clone()),
    }
}

/// Concrete flows of a run, each mapped to program points, with the
/// abstract flows computed for the same program.
pub struct FlowComparison {
    pub concrete: Vec<crate::analysis::AbsFlow>,
    pub unmatched: Vec<crate::analysis::AbsFlow>,
}

/// Runs `s` concretely and abstractly and pairs every concrete flow with an
/// abstract one. Stores must agree exactly; sources agree on allocation site
/// (objects), on name (variables), or on allocation site and field (fields).
pub fn compare_flows(s: &Stat, fuel: Fuel) -> Option<FlowComparison> {
    let prog = annotated(s);
    let pass = full_pass();
    let out = eval_stat_with(
        &State::empty(),
        &prog,
        fuel,
        &pass,
        &pass_start(&pass),
        &mut (),
    );
    let Outcome::Done((_, ann)) = out else {
        return None;
    };
    let analysis = analyze_program(&prog);
    let index: HashSet<(SourceKey, AbsStore)> = analysis
        .flows
        .iter()
        .map(|f| (source_key(&f.src), f.dst.clone()))
        .collect();
    let mut memo = PrefixMemo::new();
    let concrete: Vec<_> = ann.flows().iter().map(|f| memo.flow(f)).collect();
    let unmatched = concrete
        .iter()
        .filter(|f| !index.contains(&(source_key(&f.src), f.dst.clone())))
        .cloned()
        .collect();
    Some(FlowComparison {
        concrete,
        unmatched,
    })
}

/// Every concrete flow has an abstract counterpart.
pub fn check_soundness(s: &Stat, fuel: Fuel) -> CheckReport {
    const NAME: &str = "soundness";
    if !terminates(s, fuel) {
        return CheckReport::skipped(NAME);
    }
    match compare_flows(s, fuel) {
        None => CheckReport::skipped(NAME),
        Some(c) => CheckReport::new(
            NAME,
            c.unmatched
                .iter()
                .take(MAX_WITNESSES)
                .map(|f| format!("concrete flow {f} has no abstract counterpart"))
                .collect(),
        ),
    }
}

/// All checks on one program.
pub fn check_all(id: &str, s: &Stat, fuel: Fuel) -> Vec<CheckReport> {
    if !terminates(s, fuel) {
        return ["prop1", "prop2", "prop3", "prop4", "soundness"]
            .into_iter()
            .map(|n| CheckReport::skipped(n).with_id(id))
            .collect();
    }
    [
        check_prop1(s, fuel),
        check_prop2(s, fuel),
        check_prop3(s, fuel),
        check_prop4(s, fuel),
        check_soundness(s, fuel),
    ]
    .into_iter()
    .map(|r| r.with_id(id))
    .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: usize,
    pub max_stmts: usize,
    pub var_pool: Vec<String>,
    pub field_pool: Vec<String>,
    pub while_probability: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_depth: 4,
            max_stmts: 12,
            var_pool: ["x", "y", "z", "w"].map(String::from).to_vec(),
            field_pool: ["f", "g"].map(String::from).to_vec(),
            while_probability: 0.15,
        }
    }
}

impl GenConfig {
    /// Configuration of the `i`-th program of a batch.
    pub fn sample(&self, i: u64) -> GenConfig {
        GenConfig {
            seed: self
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i),
            ..self.clone()
        }
    }

    fn validate(&self) {
        assert!(!self.var_pool.is_empty() && !self.field_pool.is_empty());
        assert!(self.max_depth >= 1 && self.max_stmts >= 1);
        assert!((0.0..=1.0).contains(&self.while_probability));
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    cfg: &'a GenConfig,
    budget: usize,
}

impl Gen<'_> {
    fn pick<'s>(&mut self, pool: &'s [String]) -> &'s str {
        &pool[self.rng.gen_range(0..pool.len())]
    }

    fn var(&mut self) -> Expr {
        let x = self.pick(&self.cfg.var_pool);
        Expr::var(x)
    }

    fn field(&mut self) -> String {
        self.pick(&self.cfg.field_pool).to_string()
    }

    fn expr(&mut self, depth: usize) -> Expr {
        let roll = self.rng.gen_range(0..100);
        match roll {
            0..=39 => self.var(),
            40..=57 => Expr::obj(),
            58..=69 => Expr::cst(self.rng.gen_bool(0.5)),
            70..=84 => {
                let f = self.field();
                let base = if depth < 2 {
                    self.expr(depth + 1)
                } else {
                    self.var()
                };
                Expr::fld(base, &f)
            }
            _ if depth < 2 => {
                let op = [BinOp::Eq, BinOp::And, BinOp::Or][self.rng.gen_range(0..3)];
                Expr::bin(op, self.expr(depth + 1), self.expr(depth + 1))
            }
            _ => self.var(),
        }
    }

    fn cond(&mut self) -> Expr {
        match self.rng.gen_range(0..4) {
            0 => Expr::cst(self.rng.gen_bool(0.5)),
            1 => self.var(),
            2 => Expr::bin(BinOp::Eq, self.var(), self.var()),
            _ => self.expr(1),
        }
    }

    fn simple(&mut self) -> Stat {
        self.budget = self.budget.saturating_sub(1);
        match self.rng.gen_range(0..100) {
            0..=49 => {
                let x = self.pick(&self.cfg.var_pool).to_string();
                Stat::asg(&x, self.expr(0))
            }
            50..=79 => {
                let f = self.field();
                let target = if self.rng.gen_bool(0.8) {
                    self.var()
                } else {
                    self.expr(1)
                };
                Stat::fld_asg(target, &f, self.expr(0))
            }
            80..=89 => {
                let f = self.field();
                Stat::del(self.var(), &f)
            }
            _ => Stat::skip(),
        }
    }

    fn stmt(&mut self, depth: usize) -> Stat {
        if depth >= self.cfg.max_depth || self.budget < 2 {
            return self.simple();
        }
        let roll: f64 = self.rng.gen();
        if roll < self.cfg.while_probability {
            self.budget -= 1;
            self.while_loop(depth)
        } else if roll < self.cfg.while_probability + 0.2 {
            self.budget -= 1;
            let c = self.cond();
            let t = self.block(depth + 1);
            let e = self.block(depth + 1);
            Stat::if_(c, t, e)
        } else {
            self.simple()
        }
    }

    /// Loops mostly follow guard patterns that stop after one or two rounds.
    fn while_loop(&mut self, depth: usize) -> Stat {
        let g = format!("g{depth}");
        let h = format!("h{depth}");
        let body = self.block(depth + 1);
        match self.rng.gen_range(0..100) {
            0..=44 => Stat::seq_all(vec![
                Stat::asg(&g, Expr::cst(self.rng.gen_bool(0.8))),
                Stat::while_(
                    Expr::var(&g),
                    Stat::seq(body, Stat::asg(&g, Expr::cst(false))),
                ),
            ]),
            45..=84 => Stat::seq_all(vec![
                Stat::asg(&g, Expr::cst(true)),
                Stat::asg(&h, Expr::cst(true)),
                Stat::while_(
                    Expr::var(&g),
                    Stat::seq_all(vec![
                        body,
                        Stat::asg(&g, Expr::var(&h)),
                        Stat::asg(&h, Expr::cst(false)),
                    ]),
                ),
            ]),
            _ => Stat::while_(self.cond(), body),
        }
    }

    fn block(&mut self, depth: usize) -> Stat {
        let n = self.rng.gen_range(1..=3);
        let mut stmts = vec![self.stmt(depth)];
        for _ in 1..n {
            if self.budget == 0 {
                break;
            }
            stmts.push(self.stmt(depth));
        }
        Stat::seq_all(stmts)
    }
}

/// A random program; the same configuration always gives the same program.
pub fn gen_program(cfg: &GenConfig) -> Stat {
    cfg.validate();
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg,
        budget: cfg.max_stmts,
    };
    let mut stmts = Vec::new();
    for x in &cfg.var_pool {
        if g.budget > 1 && g.rng.gen_bool(0.6) {
            g.budget -= 1;
            let e = if g.rng.gen_bool(0.75) {
                Expr::obj()
            } else {
                Expr::cst(g.rng.gen_bool(0.5))
            };
            stmts.push(Stat::asg(x, e));
        }
    }
    let target = g.rng.gen_range(1..=g.budget.max(1));
    let floor = g.budget.saturating_sub(target);
    loop {
        stmts.push(g.stmt(0));
        if g.budget <= floor {
            break;
        }
    }
    Stat::seq_all(stmts)
}

/// `n` programs from consecutive samples of `cfg`.
pub fn gen_programs(cfg: &GenConfig, n: usize) -> Vec<Stat> {
    (0..n as u64).map(|i| gen_program(&cfg.sample(i))).collect()
}
