//! An interpreter for a small imperative language with heap objects, written
//! as a pretty-big-step semantics whose derivations are instrumented by
//! stackable annotation passes (traces, last-modified times, dependencies,
//! direct flows), together with a static analysis computing flows over
//! allocation sites and checkers relating the two.
//!
//! ```
//! use owhile::{parse_str, run, Fuel, Outcome, StatResult};
//!
//! let p = parse_str("x = {}; x.f = true; y = x.f").unwrap();
//! let Outcome::Done(StatResult::Ok(s)) = run(&p, Fuel::DEFAULT) else { panic!() };
//! assert_eq!(s.to_string(), "env {x=#0, y=true} heap {#0={f=true}}");
//! ```

pub mod analysis;
pub mod annot;
pub mod ast;
pub mod interp;
pub mod parser;
pub mod pp;
pub mod ppmap;
pub mod soundness;
pub mod trace;

pub use analysis::{
    analyze_expr, analyze_program, analyze_stat, heap_read, heap_write, while_fixpoint, AbsEnv,
    AbsFlow, AbsFlows, AbsHeap, AbsLoc, AbsSource, AbsStore, AbsVal, Analysis, Analyzer,
    LoopRecord,
};
pub use annot::{
    compose, dep_pass, flow_pass, full_pass, lastmod_pass, trace_pass, unit_pass, DepSet, FlowSet,
    FullAnn, FullPass, HasDeps, HasFlows, HasModMap, HasTrace, Hook, Layer, ModKey, ModMap, Pass,
    RuleData, Stack,
};
pub use ast::{
    wf_state, BinOp, Decor, Expr, ExprKind, ExprResult, Flow, Ident, Loc, Object, RuleName, Source,
    Stat, StatKind, StatResult, State, Store, Value,
};
pub use interp::{
    eval_expr, eval_expr_with, eval_stat, eval_stat_with, run, Fuel, Monitor, Outcome,
};
pub use parser::{
    annotate, annotate_pp, parse, parse_str, pretty, pretty_expr, ParseError, SourceProgram,
};
pub use pp::{PathAtom, ProgramPoint};
pub use ppmap::{abstract_flow, abstract_source, abstract_store, trace_to_pp, PrefixMemo};
pub use soundness::{
    check_all, check_prop1, check_prop2, check_prop3, check_prop4, check_soundness, compare_flows,
    gen_program, gen_programs, CheckReport, GenConfig, Status,
};
pub use trace::{Dir, Trace, TraceAtom};
