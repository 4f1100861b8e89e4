use std::collections::BTreeSet;

use owhile::{
    analyze_stat, annotate, compose, eval_stat, full_pass, gen_program, parse_str, pretty, run,
    trace_pass, unit_pass, AbsEnv, AbsHeap, AbsVal, Fuel, GenConfig, HasFlows, HasModMap, HasTrace,
    ProgramPoint, Stat, State,
};
use proptest::prelude::*;

fn program(seed: u64, size: usize) -> Stat {
    gen_program(&GenConfig {
        seed,
        max_stmts: size,
        ..GenConfig::default()
    })
}

fn fuel() -> Fuel {
    Fuel(5_000)
}

/// Abstract environment over the program's variables, drawing locations
/// from its program points.
fn env_from(s: &Stat, picks: &[(usize, usize)]) -> AbsEnv {
    let (vars, _) = s.identifiers();
    let vars: Vec<_> = vars.into_iter().collect();
    let pps: Vec<ProgramPoint> = s
        .decors()
        .into_iter()
        .map(|(_, d)| d.after.clone())
        .collect();
    let mut env = AbsEnv::default();
    if vars.is_empty() || pps.is_empty() {
        return env;
    }
    for &(v, p) in picks {
        let x = vars[v % vars.len()].clone();
        let mut val = env.get(&x);
        val.join_in(&AbsVal {
            locs: [pps[p % pps.len()].clone()].into(),
            deps: BTreeSet::new(),
        });
        env.set(x, val);
    }
    env
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pretty_then_parse_is_identity(seed in any::<u64>(), size in 1usize..16) {
        let s = program(seed, size);
        let text = pretty(&s);
        prop_assert_eq!(parse_str(&text).unwrap(), s.clone());
        prop_assert_eq!(pretty(&parse_str(&text).unwrap()), text);
    }

    #[test]
    fn runs_are_deterministic_and_fuel_monotone(seed in any::<u64>(), f in 1u64..2_000) {
        let s = program(seed, 10);
        let a = run(&s, Fuel(f));
        prop_assert_eq!(&a, &run(&s, Fuel(f)));
        if let Some(r) = a.done() {
            prop_assert_eq!(run(&s, Fuel(f * 3)).done(), Some(r));
        }
    }

    #[test]
    fn unit_layers_are_identities(seed in any::<u64>()) {
        let s = program(seed, 8);
        let st = State::empty();
        let Some((r, t)) = eval_stat(&st, &s, fuel(), &trace_pass()).done() else {
            return Ok(());
        };
        let (r1, ((), t1)) = eval_stat(&st, &s, fuel(), &compose(unit_pass(), trace_pass()))
            .done()
            .unwrap();
        let (r2, (t2, ())) = eval_stat(&st, &s, fuel(), &compose(trace_pass(), unit_pass()))
            .done()
            .unwrap();
        prop_assert_eq!(&r1, &r);
        prop_assert_eq!(&r2, &r);
        prop_assert_eq!(&t1, &t);
        prop_assert_eq!(&t2, &t);
    }

    #[test]
    fn composition_is_associative(seed in any::<u64>()) {
        let s = program(seed, 8);
        let st = State::empty();
        let left = compose(compose(trace_pass(), unit_pass()), trace_pass());
        let right = compose(trace_pass(), compose(unit_pass(), trace_pass()));
        let a = eval_stat(&st, &s, fuel(), &left);
        let b = eval_stat(&st, &s, fuel(), &right);
        match (a.done(), b.done()) {
            (Some((ra, ((t1, ()), t2))), Some((rb, (u1, ((), u2))))) => {
                prop_assert_eq!(ra, rb);
                prop_assert_eq!(t1, u1);
                prop_assert_eq!(t2, u2);
            }
            (None, None) => {}
            _ => prop_assert!(false, "one side exhausted"),
        }
    }

    #[test]
    fn instrumentation_does_not_interfere(seed in any::<u64>()) {
        let s = program(seed, 10);
        let st = State::empty();
        let plain = eval_stat(&st, &s, fuel(), &unit_pass()).map(|(r, ())| r);
        let full = eval_stat(&st, &s, fuel(), &full_pass());
        let traced = eval_stat(&st, &s, fuel(), &trace_pass());
        prop_assert_eq!(plain, full.clone().map(|(r, _)| r));
        prop_assert_eq!(
            traced.map(|(_, t)| t),
            full.map(|(_, ann)| ann.trace().clone())
        );
    }

    #[test]
    fn analysis_is_monotone(
        seed in any::<u64>(),
        small in prop::collection::vec((0usize..8, 0usize..64), 0..4),
        extra in prop::collection::vec((0usize..8, 0usize..64), 0..4),
    ) {
        let s = annotate(&program(seed, 8)).unwrap();
        let e1 = env_from(&s, &small);
        let e2 = e1.join(&env_from(&s, &extra));
        let h = AbsHeap::default();
        let (o1, h1, d1) = analyze_stat(&e1, &h, &s);
        let (o2, h2, d2) = analyze_stat(&e2, &h, &s);
        prop_assert!(o1.leq(&o2));
        prop_assert!(h1.leq(&h2));
        prop_assert!(d1.is_subset(&d2));
    }
}

#[test]
fn two_assignments_annotations() {
    let s = parse_str("x = true; y = x").unwrap();
    let (_, ann) = eval_stat(&State::empty(), &s, Fuel(100), &full_pass())
        .done()
        .unwrap();
    let t = ann.trace().to_vec();
    assert_eq!(t.len(), 16);
    let prefix = |n: usize| owhile::Trace::from_atoms(&t[..n]);
    let m = ann.modmap();
    assert_eq!(m.len(), 2);
    assert_eq!(m.var(&owhile::Ident::new("x")), Some(&prefix(6)));
    assert_eq!(m.var(&owhile::Ident::new("y")), Some(&prefix(13)));
    let flows: Vec<_> = ann.flows().iter().cloned().collect();
    assert_eq!(
        flows,
        vec![owhile::Flow {
            src: owhile::Source::Store(owhile::Store::Var(owhile::Ident::new("x"), prefix(6))),
            dst: owhile::Store::Var(owhile::Ident::new("y"), prefix(13)),
        }]
    );

    let (_, t) = eval_stat(
        &State::empty(),
        &parse_str("x = true").unwrap(),
        Fuel(10),
        &trace_pass(),
    )
    .done()
    .unwrap();
    assert_eq!(t.to_string(), "i:Asg.i:Cst.o:Cst.i:Asg1.o:Asg1.o:Asg");
}

#[test]
fn generated_programs_mostly_terminate() {
    let cfg = GenConfig {
        seed: 42,
        ..GenConfig::default()
    };
    let n = 500;
    let done = owhile::gen_programs(&cfg, n)
        .iter()
        .filter(|s| !run(s, Fuel(10_000)).is_exhausted())
        .count();
    assert!(done * 100 >= n * 80, "{done}/{n} terminate");
}
