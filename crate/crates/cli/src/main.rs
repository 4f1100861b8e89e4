use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use owhile::{
    analyze_program, check_all, eval_stat, full_pass, gen_program, parse, pretty, trace_pass,
    AbsVal, CheckReport, Flow, FlowSet, Fuel, GenConfig, HasFlows, Outcome, PrefixMemo, Source,
    SourceProgram, Stat, StatResult, State, Store, Value,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value as Json};

const EXIT_PROGRAM_ERROR: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_EXHAUSTED: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "owhile",
    version,
    about = "Run, trace and analyze owhile programs"
)]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Rule-application budget for each run.
    #[arg(
        long,
        global = true,
        env = "OWHILE_FUEL",
        default_value_t = Fuel::DEFAULT.0,
        value_parser = clap::value_parser!(u64).range(1..)
    )]
    fuel: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute a program and print its final state.
    Run { file: PathBuf },
    /// Print the trace of a run.
    Trace { file: PathBuf },
    /// Print the direct flows of a run.
    Flows {
        file: PathBuf,
        /// Show sources and stores at program points instead of traces.
        #[arg(long)]
        pp: bool,
    },
    /// Run the static flow analysis.
    Analyze { file: PathBuf },
    /// Check instrumentation invariants and analysis soundness on a file or
    /// every `.ow` file under a directory.
    Check { path: PathBuf },
    /// Check randomly generated programs.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Statement budget per program.
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(1..))]
        size: u64,
    },
}

/// Failure with a chosen exit code.
#[derive(Debug)]
struct Exit(u8);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn load(path: &Path) -> Result<Stat> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(|e| {
            eprintln!("error: {e:#}");
            anyhow::Error::new(Exit(EXIT_USAGE))
        })?;
    parse(&SourceProgram::with_path(text, path.display().to_string())).map_err(|e| {
        eprintln!("error: {e}");
        anyhow::Error::new(Exit(EXIT_USAGE))
    })
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Const(b) => json!(b),
        Value::Loc(l) => json!(l.to_string()),
    }
}

fn state_json(s: &State) -> (Json, Json) {
    let env: serde_json::Map<_, _> = s
        .env
        .iter()
        .map(|(x, v)| (x.to_string(), value_json(v)))
        .collect();
    let heap: serde_json::Map<_, _> = s
        .heap
        .iter()
        .map(|(l, o)| {
            let fields: serde_json::Map<_, _> = o
                .iter()
                .map(|(f, v)| (f.to_string(), value_json(v)))
                .collect();
            (l.to_string(), Json::Object(fields))
        })
        .collect();
    (Json::Object(env), Json::Object(heap))
}

fn print_state(s: &State) {
    for (x, v) in s.env.iter() {
        println!("{x} = {v}");
    }
    for (l, o) in s.heap.iter() {
        let fields: Vec<String> = o.iter().map(|(f, v)| format!("{f}={v}")).collect();
        println!("{l} = {{{}}}", fields.join(", "));
    }
}

/// Exit status of a finished run.
fn run_status(r: &StatResult) -> Result<()> {
    if r.is_err() {
        eprintln!("error: execution aborted");
        return Err(Exit(EXIT_PROGRAM_ERROR).into());
    }
    Ok(())
}

fn exhausted(json: bool, fuel: u64) -> Result<()> {
    if json {
        println!("{}", json!({"status": "exhausted", "env": {}, "heap": {}}));
    }
    eprintln!("error: fuel exhausted after {fuel} rule applications");
    Err(Exit(EXIT_EXHAUSTED).into())
}

fn cmd_run(file: &Path, fuel: u64, json: bool) -> Result<()> {
    let s = load(file)?;
    let out = eval_stat(&State::empty(), &s, Fuel(fuel), &owhile::unit_pass());
    let Outcome::Done((r, ())) = out else {
        return exhausted(json, fuel);
    };
    if json {
        let (env, heap) = state_json(r.state());
        let status = if r.is_err() { "err" } else { "ok" };
        println!("{}", json!({"status": status, "env": env, "heap": heap}));
    } else {
        print_state(r.state());
    }
    run_status(&r)
}

fn cmd_trace(file: &Path, fuel: u64, json: bool) -> Result<()> {
    let s = load(file)?;
    let Outcome::Done((r, t)) = eval_stat(&State::empty(), &s, Fuel(fuel), &trace_pass()) else {
        return exhausted(false, fuel);
    };
    let atoms: Vec<String> = t.to_vec().iter().map(|a| a.to_string()).collect();
    if json {
        println!("{}", json!({ "atoms": atoms }));
    } else {
        for a in &atoms {
            println!("{a}");
        }
    }
    run_status(&r)
}

fn full_store(s: &Store) -> String {
    match s {
        Store::Var(x, t) => format!("{x}@{t}"),
        Store::Field(l, ta, f, tm) => format!("({l}@{ta}).{f}@{tm}"),
    }
}

fn full_source(s: &Source) -> String {
    match s {
        Source::Alloc(l, t) => format!("{l}@{t}"),
        Source::Store(st) => full_store(st),
    }
}

#[derive(Serialize, PartialEq, Eq, PartialOrd, Ord)]
struct FlowOut {
    src: String,
    dst: String,
}

fn flow_lines(flows: &FlowSet, pp: bool, full: bool) -> Vec<FlowOut> {
    let mut memo = PrefixMemo::new();
    let mut out: Vec<FlowOut> = flows
        .iter()
        .map(|f: &Flow| {
            if pp {
                let a = memo.flow(f);
                FlowOut {
                    src: a.src.to_string(),
                    dst: a.dst.to_string(),
                }
            } else if full {
                FlowOut {
                    src: full_source(&f.src),
                    dst: full_store(&f.dst),
                }
            } else {
                FlowOut {
                    src: f.src.to_string(),
                    dst: f.dst.to_string(),
                }
            }
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn cmd_flows(file: &Path, pp: bool, fuel: u64, json: bool) -> Result<()> {
    let s = load(file)?;
    let pass = full_pass();
    let Outcome::Done((r, ann)) = eval_stat(&State::empty(), &s, Fuel(fuel), &pass) else {
        return exhausted(false, fuel);
    };
    let flows = flow_lines(ann.flows(), pp, json);
    if json {
        println!("{}", json!({"flows": flows, "ppMapped": pp}));
    } else {
        for f in &flows {
            println!("{} -> {}", f.src, f.dst);
        }
    }
    run_status(&r)
}

fn abs_val_json(v: &AbsVal) -> Json {
    let locs: Vec<String> = v.locs.iter().map(|p| p.to_string()).collect();
    let deps: Vec<String> = v.deps.iter().map(|d| d.to_string()).collect();
    json!({"locs": locs, "deps": deps})
}

fn abs_val_text(v: &AbsVal) -> String {
    let locs: Vec<String> = v.locs.iter().map(|p| p.to_string()).collect();
    let deps: Vec<String> = v.deps.iter().map(|d| d.to_string()).collect();
    format!("({{{}}}, {{{}}})", locs.join(", "), deps.join(", "))
}

fn cmd_analyze(file: &Path, json: bool) -> Result<()> {
    let s = load(file)?;
    let a = analyze_program(&s);
    if json {
        let env: serde_json::Map<_, _> = a
            .env
            .0
            .iter()
            .map(|(x, v)| (x.to_string(), abs_val_json(v)))
            .collect();
        let heap: Vec<Json> = a
            .heap
            .0
            .iter()
            .map(|((site, f), v)| {
                json!({"site": site.to_string(), "field": f.to_string(), "value": abs_val_json(v)})
            })
            .collect();
        let flows: Vec<FlowOut> = a
            .flows
            .iter()
            .map(|f| FlowOut {
                src: f.src.to_string(),
                dst: f.dst.to_string(),
            })
            .collect();
        println!(
            "{}",
            json!({"absEnv": env, "absHeap": heap, "flows": flows})
        );
    } else {
        println!("env");
        for (x, v) in &a.env.0 {
            println!("  {x} = {}", abs_val_text(v));
        }
        println!("heap");
        for ((site, f), v) in &a.heap.0 {
            println!("  {site}.{f} = {}", abs_val_text(v));
        }
        println!("flows");
        for f in &a.flows {
            println!("  {f}");
        }
    }
    Ok(())
}

fn collect_programs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))?;
    for entry in entries {
        let p = entry?.path();
        if p.is_dir() {
            collect_programs(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "ow") {
            out.push(p);
        }
    }
    Ok(())
}

fn report(reports: &[CheckReport], json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string(reports)?);
    } else {
        for r in reports {
            println!("{r}");
        }
    }
    if reports.iter().any(CheckReport::failed) {
        return Err(Exit(EXIT_CHECK_FAILED).into());
    }
    Ok(())
}

fn cmd_check(path: &Path, fuel: u64, json: bool) -> Result<()> {
    let mut files = Vec::new();
    if path.is_dir() {
        collect_programs(path, &mut files).map_err(|e| {
            eprintln!("error: {e:#}");
            anyhow::Error::new(Exit(EXIT_USAGE))
        })?;
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    let programs: Vec<(String, Stat)> = files
        .iter()
        .map(|f| Ok((f.display().to_string(), load(f)?)))
        .collect::<Result<_>>()?;
    let reports: Vec<CheckReport> = programs
        .par_iter()
        .map(|(id, s)| check_all(id, s, Fuel(fuel)))
        .collect::<Vec<_>>()
        .concat();
    report(&reports, json)
}

fn cmd_fuzz(count: u64, seed: u64, size: u64, fuel: u64, json: bool) -> Result<()> {
    let cfg = GenConfig {
        seed,
        max_stmts: size as usize,
        ..GenConfig::default()
    };
    let reports: Vec<CheckReport> = (0..count)
        .into_par_iter()
        .map(|i| {
            let s = gen_program(&cfg.sample(i));
            let mut rs = check_all(&format!("fuzz-{seed}-{i}"), &s, Fuel(fuel));
            for r in rs.iter_mut().filter(|r| r.failed()) {
                r.witnesses.insert(0, format!("program: {}", pretty(&s)));
            }
            rs
        })
        .collect::<Vec<_>>()
        .concat();
    report(&reports, json)
}

fn dispatch(cli: Cli) -> Result<()> {
    let fuel = cli.fuel;
    let json = cli.json;
    match cli.command {
        Command::Run { file } => cmd_run(&file, fuel, json),
        Command::Trace { file } => cmd_trace(&file, fuel, json),
        Command::Flows { file, pp } => cmd_flows(&file, pp, fuel, json),
        Command::Analyze { file } => cmd_analyze(&file, json),
        Command::Check { path } => cmd_check(&path, fuel, json),
        Command::Fuzz { count, seed, size } => cmd_fuzz(count, seed, size, fuel, json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<Exit>() {
            Some(Exit(code)) => ExitCode::from(*code),
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_USAGE)
            }
        },
    }
}
