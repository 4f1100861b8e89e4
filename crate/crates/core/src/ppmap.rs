//! Recovering program points from traces.
//!
//! A trace is read from its most recent atom backwards. While the pending
//! stack is empty, each atom contributes (at most) one path atom to the front
//! of the program point. A pending exit `o:R` makes the reader skip the
//! sub-derivation of `R` until the matching `i:R`.

use std::collections::HashMap;

use crate::analysis::{AbsFlow, AbsSource, AbsStore};
use crate::ast::{Flow, RuleName, Source, Store};
use crate::pp::{PathAtom, ProgramPoint};
use crate::trace::{Dir, Trace, TraceAtom};

/// Path atom contributed by leaving rule `r`.
fn app_o(r: RuleName) -> Option<PathAtom> {
    PathAtom::construct(r)
}

/// Path atom contributed by entering rule `r`.
fn app_i(r: RuleName) -> Option<PathAtom> {
    Some(match r {
        RuleName::Seq => PathAtom::Seq1,
        RuleName::Seq1 => PathAtom::Seq2,
        RuleName::If => PathAtom::IfE,
        RuleName::IfTrue => PathAtom::If1,
        RuleName::IfFalse => PathAtom::If2,
        RuleName::While => PathAtom::WhileE,
        RuleName::WhileTrue1 => PathAtom::WhileS,
        RuleName::Asg => PathAtom::AsgE,
        RuleName::FldAsg => PathAtom::FldAsg1,
        RuleName::FldAsg1 => PathAtom::FldAsg2,
        RuleName::Del => PathAtom::DelE,
        RuleName::Bin => PathAtom::Bin1,
        RuleName::Bin1 => PathAtom::Bin2,
        RuleName::Fld => PathAtom::FldE,
        _ => return None,
    })
}

/// Exit to skip back to after leaving rule `r`.
fn push_o(r: RuleName) -> Option<RuleName> {
    r.is_normal().then_some(r)
}

/// Exit to skip back to after entering rule `r`: the normal rule whose
/// earlier premises precede it.
fn push_i(r: RuleName) -> Option<RuleName> {
    Some(match r {
        RuleName::Seq1 => RuleName::Seq,
        RuleName::IfTrue | RuleName::IfFalse => RuleName::If,
        RuleName::WhileTrue1 | RuleName::WhileTrue2 => RuleName::While,
        RuleName::Asg1 => RuleName::Asg,
        RuleName::FldAsg1 | RuleName::FldAsg2 => RuleName::FldAsg,
        RuleName::Bin1 | RuleName::Bin2 => RuleName::Bin,
        RuleName::Del1 => RuleName::Del,
        RuleName::Fld1 => RuleName::Fld,
        _ => return None,
    })
}

/// Program point of the moment `trace` ends, and the exits still unmatched
/// when the trace is used up.
pub fn trace_to_pp(trace: &Trace) -> (ProgramPoint, Vec<RuleName>) {
    let mut pending: Vec<RuleName> = Vec::new();
    let mut rev: Vec<PathAtom> = Vec::new();
    for TraceAtom { name, dir } in trace.iter_rev() {
        if let Some(&top) = pending.last() {
            if name == top {
                match dir {
                    Dir::Exit => pending.push(top),
                    Dir::Enter => {
                        pending.pop();
                    }
                }
            }
            continue;
        }
        let (push, app) = match dir {
            Dir::Exit => (push_o(name), app_o(name)),
            Dir::Enter => (push_i(name), app_i(name)),
        };
        pending.extend(push);
        rev.extend(app);
    }
    rev.reverse();
    (ProgramPoint::from_atoms(rev), pending)
}

/// Memoizing [`trace_to_pp`] for traces that are all prefixes of a single
/// run, which is what every annotation of one derivation is.
#[derive(Default)]
pub struct PrefixMemo {
    memo: HashMap<usize, (ProgramPoint, Vec<RuleName>)>,
}

impl PrefixMemo {
    pub fn new() -> Self {
        PrefixMemo::default()
    }

    pub fn eval(&mut self, trace: &Trace) -> (ProgramPoint, Vec<RuleName>) {
        if let Some(r) = self.memo.get(&trace.len()) {
            return r.clone();
        }
        let mut pending: Vec<RuleName> = Vec::new();
        let mut rev: Vec<PathAtom> = Vec::new();
        let mut remaining = trace.len();
        let mut tail: Option<(ProgramPoint, Vec<RuleName>)> = None;
        for TraceAtom { name, dir } in trace.iter_rev() {
            if pending.is_empty() {
                if let Some(r) = self.memo.get(&remaining) {
                    tail = Some(r.clone());
                    break;
                }
            }
            remaining -= 1;
            if let Some(&top) = pending.last() {
                if name == top {
                    match dir {
                        Dir::Exit => pending.push(top),
                        Dir::Enter => {
                            pending.pop();
                        }
                    }
                }
                continue;
            }
            let (push, app) = match dir {
                Dir::Exit => (push_o(name), app_o(name)),
                Dir::Enter => (push_i(name), app_i(name)),
            };
            pending.extend(push);
            rev.extend(app);
        }
        rev.reverse();
        let result = match tail {
            Some((p, left)) => {
                let mut atoms = p.atoms().to_vec();
                atoms.extend(rev);
                (ProgramPoint::from_atoms(atoms), left)
            }
            None => (ProgramPoint::from_atoms(rev), pending),
        };
        self.memo.insert(trace.len(), result.clone());
        result
    }
}

/// The program point of `trace`, ignoring leftovers.
pub fn pp_of(trace: &Trace) -> ProgramPoint {
    trace_to_pp(trace).0
}

/// `trace ≺ pp`: the trace is fully consumed and lands on `pp`.
pub fn abstracts_to(trace: &Trace, pp: &ProgramPoint) -> bool {
    let (p, left) = trace_to_pp(trace);
    left.is_empty() && p == *pp
}

pub fn abstract_store(s: &Store) -> AbsStore {
    match s {
        Store::Var(x, t) => AbsStore::Var(x.clone(), pp_of(t)),
        Store::Field(_, ta, f, tm) => AbsStore::Field(pp_of(ta), f.clone(), pp_of(tm)),
    }
}

pub fn abstract_source(s: &Source) -> AbsSource {
    match s {
        Source::Alloc(_, t) => AbsSource::Obj(pp_of(t)),
        Source::Store(st) => AbsSource::Store(abstract_store(st)),
    }
}

pub fn abstract_flow(f: &Flow) -> AbsFlow {
    AbsFlow {
        src: abstract_source(&f.src),
        dst: abstract_store(&f.dst),
    }
}

impl PrefixMemo {
    pub fn store(&mut self, s: &Store) -> AbsStore {
        match s {
            Store::Var(x, t) => AbsStore::Var(x.clone(), self.eval(t).0),
            Store::Field(_, ta, f, tm) => {
                AbsStore::Field(self.eval(ta).0, f.clone(), self.eval(tm).0)
            }
        }
    }

    pub fn source(&mut self, s: &Source) -> AbsSource {
        match s {
            Source::Alloc(_, t) => AbsSource::Obj(self.eval(t).0),
            Source::Store(st) => AbsSource::Store(self.store(st)),
        }
    }

    pub fn flow(&mut self, f: &Flow) -> AbsFlow {
        AbsFlow {
            src: self.source(&f.src),
            dst: self.store(&f.dst),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Ident, Loc};

    fn tr(atoms: &str) -> Trace {
        let v: Vec<TraceAtom> = atoms
            .split_whitespace()
            .map(|a| TraceAtom::parse(a).unwrap())
            .collect();
        Trace::from_atoms(&v)
    }

    fn pp(s: &str) -> ProgramPoint {
        ProgramPoint::parse(s).unwrap()
    }

    const TWO_ASG: &str = "i:Seq i:Asg i:Cst o:Cst i:Asg1 o:Asg1 o:Asg i:Seq1 i:Asg i:Var o:Var \
                        i:Asg1 o:Asg1 o:Asg o:Seq1 o:Seq";

    fn two_asg_prefix(n: usize) -> Trace {
        let v: Vec<_> = TWO_ASG.split_whitespace().take(n).collect();
        tr(&v.join(" "))
    }

    #[test]
    fn single_skip() {
        assert_eq!(trace_to_pp(&tr("i:Skip o:Skip")), (pp("Skip"), vec![]));
        assert_eq!(trace_to_pp(&Trace::new()), (ProgramPoint::root(), vec![]));
    }

    #[test]
    fn prefixes_of_two_assignments() {
        let want = [
            (1, "Seq1"),
            (2, "Seq1/AsgE"),
            (4, "Seq1/AsgE/Cst"),
            (6, "Seq1"),
            (7, "Seq1/Asg"),
            (8, "Seq2"),
            (11, "Seq2/AsgE/Var"),
            (13, "Seq2"),
            (14, "Seq2/Asg"),
            (16, "Seq"),
        ];
        for (n, p) in want {
            assert_eq!(
                trace_to_pp(&two_asg_prefix(n)),
                (pp(p), vec![]),
                "prefix {n}"
            );
        }
    }

    #[test]
    fn loop_iterations_share_points() {
        // while c do { skip } run for one true and one false test
        let t = "i:While i:Var o:Var i:WhileTrue1 i:Skip o:Skip i:WhileTrue2 \
                 i:While i:Var o:Var i:WhileFalse o:WhileFalse o:While o:WhileTrue2 \
                 o:WhileTrue1 o:While";
        let all: Vec<_> = t.split_whitespace().collect();
        let at = |n: usize| trace_to_pp(&tr(&all[..n].join(" ")));
        assert_eq!(at(3), (pp("WhileE/Var"), vec![]));
        assert_eq!(at(6), (pp("WhileS/Skip"), vec![]));
        // Second test of the condition, same point as the first.
        assert_eq!(at(7), (ProgramPoint::root(), vec![]));
        assert_eq!(at(10), (pp("WhileE/Var"), vec![]));
        assert_eq!(at(13), (pp("While"), vec![]));
        assert_eq!(at(16), (pp("While"), vec![]));
    }

    #[test]
    fn allocation_and_field_store_points() {
        let t = tr("i:Asg i:Obj o:Obj");
        assert_eq!(pp_of(&t), pp("AsgE/Obj"));
        let t = tr("i:FldAsg i:Var o:Var i:FldAsg1 i:Cst o:Cst i:FldAsg2 o:FldAsg2");
        assert_eq!(trace_to_pp(&t), (ProgramPoint::root(), vec![]));
        let t2 = t.exit(RuleName::FldAsg);
        assert_eq!(pp_of(&t2), pp("FldAsg"));
    }

    #[test]
    fn unmatched_exits_are_reported() {
        let (_, left) = trace_to_pp(&tr("o:Asg"));
        assert_eq!(left, vec![RuleName::Asg]);
        assert!(!abstracts_to(&tr("o:Asg"), &pp("Asg")));
        assert!(abstracts_to(&two_asg_prefix(6), &pp("Seq1")));
    }

    #[test]
    fn abstracting_flows() {
        let f = Flow {
            src: Source::Store(Store::Var(Ident::new("x"), two_asg_prefix(6))),
            dst: Store::Var(Ident::new("y"), two_asg_prefix(13)),
        };
        assert_eq!(abstract_flow(&f).to_string(), "x@Seq1 -> y@Seq2");
        let a = Source::Alloc(Loc(0), tr("i:Seq i:Asg i:Obj o:Obj"));
        assert_eq!(abstract_source(&a).to_string(), "obj@Seq1/AsgE/Obj");
    }

    #[test]
    fn memo_agrees_with_direct_reading() {
        let all: Vec<_> = TWO_ASG.split_whitespace().collect();
        let mut memo = PrefixMemo::new();
        for n in (0..=all.len()).rev().chain(0..=all.len()) {
            let t = tr(&all[..n].join(" "));
            assert_eq!(memo.eval(&t), trace_to_pp(&t), "prefix {n}");
        }
    }
}
