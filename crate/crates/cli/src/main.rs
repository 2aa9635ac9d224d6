mod literal;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use minicogent::corpus;
use minicogent::dynsem::Semantics;
use minicogent::ffi::library_registry;
use minicogent::lowmachine::LowMachine;
use minicogent::refine::{
    heap_digest, monomorphise, place, reify_low, reify_u, run_suite, store_digest, walkthrough,
    Case, CheckConfig, CheckReport, GenConfig, SUITES,
};
use minicogent::shallow::ShallowEnv;
use minicogent::syntax::{parse_program, Program};
use minicogent::typecheck::typecheck_program;

#[derive(Parser)]
#[command(name = "minicogent", version, about = "Typecheck, run and cross-check minicogent programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Layer {
    Shallow,
    Value,
    Update,
    Low,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
struct Common {
    /// Seed for every randomised choice.
    #[arg(long, env = "MINICOGENT_SEED", default_value_t = 0)]
    seed: u64,
    /// Size of the machine heap.
    #[arg(long, default_value_t = minicogent::lowmachine::DEFAULT_HEAP_BYTES)]
    heap_bytes: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and typecheck a program.
    Typecheck { path: PathBuf },
    /// Run a program's entry function at one semantic layer.
    ///
    /// PROGRAM is a file, or one of the shipped programs `sum` and
    /// `binsearch` when no such file exists. Arguments are literals such as
    /// `[1,2,3]`, `(1, True)` or `7`; several arguments fill a tuple
    /// parameter.
    Run {
        program: String,
        args: Vec<String>,
        #[arg(long, value_enum, default_value_t = Layer::Value)]
        layer: Layer,
        /// Function to call; defaults to the last monomorphic function.
        #[arg(long)]
        entry: Option<String>,
        /// Print a hex dump of the final heap (low layer only).
        #[arg(long)]
        dump_heap: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a randomised check suite.
    Check {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = GenConfig::default().max_array_len)]
        array_len_max: u32,
        #[arg(long, default_value_t = GenConfig::default().max_depth)]
        max_depth: usize,
        /// Leave wall-clock fields out of the output.
        #[arg(long)]
        no_timestamp: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Walk a shipped example through all five layers.
    Demo {
        name: String,
        #[arg(long, default_value_t = minicogent::lowmachine::DEFAULT_HEAP_BYTES)]
        heap_bytes: u32,
    },
}

/// Failure with the exit code it maps to.
struct Fail {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail { code: 2, msg: msg.into() }
}

fn failure(msg: impl Into<String>) -> Fail {
    Fail { code: 1, msg: msg.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Typecheck { path } => cmd_typecheck(&path),
        Command::Run {
            program,
            args,
            layer,
            entry,
            dump_heap,
            common,
        } => cmd_run(&program, &args, layer, entry.as_deref(), dump_heap, &common),
        Command::Check {
            suite,
            trials,
            array_len_max,
            max_depth,
            no_timestamp,
            common,
        } => {
            let cfg = CheckConfig {
                seed: common.seed,
                trials,
                heap_bytes: common.heap_bytes,
                gen: GenConfig {
                    max_depth,
                    max_array_len: array_len_max,
                },
            };
            cmd_check(&suite, &cfg, common.format, no_timestamp)
        }
        Command::Demo { name, heap_bytes } => cmd_demo(&name, heap_bytes),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.msg.is_empty() {
                eprintln!("error: {}", f.msg);
            }
            ExitCode::from(f.code)
        }
    }
}

fn read_program(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load(src: &str) -> Result<Program, Fail> {
    let p = parse_program(src).map_err(|e| failure(format!("parse error: {e}")))?;
    typecheck_program(&p)
        .map(|t| t.program)
        .map_err(|e| failure(format!("type error: {e}")))
}

fn cmd_typecheck(path: &Path) -> Result<(), Fail> {
    let p = load(&read_program(path)?)?;
    println!("ok: {} functions", p.functions.len());
    Ok(())
}

fn shipped(name: &str) -> Option<&'static str> {
    match name {
        "sum" => Some(corpus::SUM),
        "binsearch" | "binary_search" => Some(corpus::BINARY_SEARCH),
        _ => None,
    }
}

fn cmd_run(
    program: &str,
    args: &[String],
    layer: Layer,
    entry: Option<&str>,
    dump_heap: bool,
    common: &Common,
) -> Result<(), Fail> {
    let path = Path::new(program);
    let src = if path.exists() {
        read_program(path)?
    } else if let Some(s) = shipped(program) {
        s.to_string()
    } else {
        return Err(usage(format!("{program}: no such file or shipped program")));
    };
    let p = load(&src)?;
    let f = match entry {
        Some(name) => p
            .function(name)
            .ok_or_else(|| usage(format!("no function `{name}`")))?,
        None => p
            .default_entry()
            .ok_or_else(|| usage("program has no monomorphic function to run"))?,
    };
    if !f.tyvars.is_empty() || f.is_foreign() {
        return Err(usage(format!("`{}` cannot be run directly", f.name)));
    }
    let name = f.name.clone();
    let v = literal::entry_argument(args, &f.arg_ty).map_err(usage)?;
    let reg = library_registry();
    let m = monomorphise(&p, &[&name]).map_err(|e| failure(e.to_string()))?;
    let sem_m = Semantics::new(&m.program, &reg).with_aliases(m.aliases.clone());
    let machine = LowMachine::new(&m.program, &reg, &m.aliases);
    let input = place(&v, &f.arg_ty, &sem_m.typing_env(), machine.table(), common.heap_bytes)
        .map_err(failure)?;
    let out = |value: String, digest: Option<(&str, String)>| {
        match common.format {
            Format::Text => {
                println!("{value}");
                if let Some((what, d)) = &digest {
                    println!("{what}: {d}");
                }
            }
            Format::Json => {
                let mut o = json!({ "layer": format!("{layer:?}").to_lowercase(), "result": value });
                if let Some((what, d)) = digest {
                    o[what] = json!(d);
                }
                println!("{o}");
            }
        }
    };
    match layer {
        Layer::Shallow => {
            let known = [corpus::sum_program(), corpus::binary_search_program()]
                .iter()
                .any(|q| typecheck_program(q).is_ok_and(|t| t.program == p));
            if !known {
                return Err(failure("shallow embeddings exist only for the shipped programs"));
            }
            let s = ShallowEnv::new(&reg)
                .call(&name, input.s)
                .map_err(|e| failure(e.to_string()))?;
            out(s.to_string(), None);
        }
        Layer::Value => {
            let r = Semantics::new(&p, &reg)
                .call_v(&name, &[], v)
                .map_err(|e| failure(e.to_string()))?;
            out(r.to_string(), None);
        }
        Layer::Update => {
            let (u, store) = sem_m
                .call_u(&name, &[], input.u, input.store)
                .map_err(|e| failure(e.to_string()))?;
            let shown = reify_u(&u, &store).map_or_else(|| format!("{u:?}"), |v| v.to_string());
            out(shown, Some(("store", store_digest(&store))));
        }
        Layer::Low => {
            let (x, heap) = machine
                .call(&name, input.low, input.heap)
                .map_err(|e| failure(e.to_string()))?;
            let shown = reify_low(&x, &f.ret_ty, &heap, machine.table())
                .map_or_else(|| format!("{x:?}"), |v| v.to_string());
            out(shown, Some(("heap", heap_digest(&heap))));
            if dump_heap {
                print!("{}", heap.hex_dump());
            }
        }
    }
    Ok(())
}

fn cmd_check(suite: &str, cfg: &CheckConfig, format: Format, no_timestamp: bool) -> Result<(), Fail> {
    let mut reports: Vec<CheckReport> =
        run_suite(suite, cfg).ok_or_else(|| usage(format!("unknown suite {suite}")))?;
    if no_timestamp {
        for r in &mut reports {
            r.elapsed_ms = None;
        }
    }
    let passed = reports.iter().all(CheckReport::passed);
    match format {
        Format::Text => {
            for r in &reports {
                let mut line = format!(
                    "{} {} ({} trials, {} failures)",
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.theorem,
                    r.trials,
                    r.failures
                );
                if let Some(ms) = r.elapsed_ms {
                    line += &format!(" {ms} ms");
                }
                println!("{line}");
                if let Some(c) = &r.counterexample {
                    println!("  counterexample: {c}");
                }
            }
            println!(
                "{suite}: {} of {} checks passed, seed {}",
                reports.iter().filter(|r| r.passed()).count(),
                reports.len(),
                cfg.seed
            );
        }
        Format::Json => {
            let mut o = json!({
                "suite": suite,
                "seed": cfg.seed,
                "passed": passed,
                "reports": reports,
            });
            if !no_timestamp {
                let now = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs());
                o["timestamp"] = json!(now);
            }
            println!("{}", serde_json::to_string_pretty(&o).expect("report serialises"));
        }
    }
    if passed {
        Ok(())
    } else {
        Err(failure(""))
    }
}

fn cmd_demo(name: &str, heap_bytes: u32) -> Result<(), Fail> {
    use minicogent::dynsem::VValue;
    let (case, input) = match name {
        "sum" => (Case::Sum, VValue::u32_array(&[3, 1, 4, 1, 5, 9, 2, 6])),
        "binsearch" => (
            Case::BinarySearch,
            VValue::Prod(vec![VValue::u32_array(&[1, 3, 5, 7, 9, 11, 13]), VValue::U32(9)]),
        ),
        other => return Err(usage(format!("unknown demo `{other}` (try sum or binsearch)"))),
    };
    let w = walkthrough(case, &input, heap_bytes).map_err(failure)?;
    println!("{} on {}", w.program, w.input);
    for l in &w.layers {
        match &l.digest {
            Some(d) => println!("  {:<20} {}    [{d}]", l.layer, l.value),
            None => println!("  {:<20} {}", l.layer, l.value),
        }
    }
    for v in &w.verdicts {
        if v.holds {
            println!("  holds   {}", v.relation);
        } else {
            println!("  FAILS   {}: {}", v.relation, v.detail);
        }
    }
    if w.all_hold() {
        println!("all relations hold");
        Ok(())
    } else {
        Err(failure("a relation failed"))
    }
}
