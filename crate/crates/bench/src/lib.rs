//! Shared workloads for the benchmarks.

use owhile::{gen_programs, parse_str, GenConfig, Stat};

/// Builds a list of `n` cells, then walks it back.
pub fn list_program(n: usize) -> Stat {
    let mut src = String::from("head = {}; i = true;");
    for _ in 0..n {
        src.push_str(" cell = {}; cell.next = head; cell.v = i; head = cell;");
    }
    src.push_str(" cur = head; go = true; while go do { v = cur.v; cur = cur.next; go = v }");
    parse_str(&src).expect("list program parses")
}

/// A counter-free loop that runs `n` iterations of a small heap body.
pub fn loop_program(n: usize) -> Stat {
    let mut src = String::from("o = {}; o.f = true;");
    for k in 0..n {
        src.push_str(&format!(" g{k} = true;"));
    }
    src.push_str(" c = true; while c do { p = {}; p.f = o; o = p; c = false }");
    parse_str(&src).expect("loop program parses")
}

pub fn random_programs(n: usize, size: usize) -> Vec<Stat> {
    gen_programs(
        &GenConfig {
            seed: 42,
            max_stmts: size,
            ..GenConfig::default()
        },
        n,
    )
}
