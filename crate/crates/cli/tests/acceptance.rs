//! Acceptance criteria, each at its stated trial count and tolerance. One
//! PASS/FAIL line per criterion goes straight to stderr so it shows up
//! even when test output is captured.

use std::io::Write;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use minicogent::ffi::{check_abs_type_obligations, planted_mutant, ArrayType, CLAUSES};
use minicogent::refine::{
    check_combined, check_corres, check_early_exit, check_frame, check_mono, check_preservation,
    check_value_update, Case, CheckConfig, CheckReport, GenConfig, BOUNDARIES, OPS,
};

const SEED: u64 = 42;

fn cfg(trials: u64) -> CheckConfig {
    CheckConfig {
        seed: SEED,
        trials,
        ..CheckConfig::default()
    }
}

struct Outcome {
    name: &'static str,
    problems: Vec<String>,
    elapsed: Duration,
}

fn criterion(name: &'static str, body: impl FnOnce(&mut Vec<String>)) -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    body(&mut problems);
    let o = Outcome {
        name,
        problems,
        elapsed: start.elapsed(),
    };
    let mut err = std::io::stderr();
    let status = if o.problems.is_empty() { "PASS" } else { "FAIL" };
    let _ = writeln!(err, "[{status}] {} ({:.1} s)", o.name, o.elapsed.as_secs_f64());
    for p in &o.problems {
        let _ = writeln!(err, "       {p}");
    }
    o
}

fn expect_clean(r: &CheckReport, trials: u64, problems: &mut Vec<String>) {
    if r.trials != trials {
        problems.push(format!("{}: ran {} trials, wanted {trials}", r.theorem, r.trials));
    }
    if !r.passed() {
        problems.push(format!(
            "{}: {} failures, first: {}",
            r.theorem,
            r.failures,
            r.counterexample.as_deref().unwrap_or("-")
        ));
    }
}

fn within(limit: Duration, start: Instant, what: &str, problems: &mut Vec<String>) {
    let took = start.elapsed();
    if took > limit {
        problems.push(format!("{what} took {:.1} s, limit {} s", took.as_secs_f64(), limit.as_secs()));
    }
}

fn preservation_and_frame() -> Outcome {
    criterion("preservation and frame over 1000 generated programs, under 60 s", |p| {
        let c = CheckConfig {
            gen: GenConfig {
                max_depth: 6,
                max_array_len: 64,
            },
            ..cfg(1000)
        };
        let start = Instant::now();
        expect_clean(&check_preservation(&c, None), 1000, p);
        expect_clean(&check_frame(&c, None), 1000, p);
        within(Duration::from_secs(60), start, "preservation and frame", p);
    })
}

fn value_update() -> Outcome {
    criterion("update semantics refines value semantics, 1000 trials", |p| {
        expect_clean(&check_value_update(&cfg(1000), None), 1000, p);
    })
}

fn obligations() -> Outcome {
    criterion("array type obligations: 500 clean trials per clause, mutants caught within 200", |p| {
        for r in check_abs_type_obligations(Arc::new(ArrayType), SEED, 500) {
            if r.trials != 500 || r.failures != 0 {
                p.push(format!("{}: {} of {} trials failed: {:?}", r.clause, r.failures, r.trials, r.counterexample));
            }
        }
        for clause in CLAUSES {
            let mutant = planted_mutant(clause).expect("every clause has a mutant");
            let reports = check_abs_type_obligations(mutant, SEED, 200);
            let r = reports.iter().find(|r| r.clause == clause).expect("clause reported");
            if r.failures == 0 {
                p.push(format!("mutant breaking {clause} survived 200 trials"));
            }
        }
    })
}

fn per_operation() -> Outcome {
    criterion("library operations correspond across each boundary, 500 trials each", |p| {
        for op in OPS {
            for b in BOUNDARIES {
                expect_clean(&check_corres(op, b, &cfg(500), None), 500, p);
            }
        }
    })
}

fn monomorphisation() -> Outcome {
    criterion("monomorphisation preserves sum and binary search on 500 inputs", |p| {
        for case in [Case::Sum, Case::BinarySearch] {
            expect_clean(&check_mono(case, &cfg(500), None), 500, p);
        }
    })
}

fn binary_search_end_to_end() -> Outcome {
    criterion("binary search end to end on 1000 sorted arrays up to 4096 long, under 30 s", |p| {
        let c = CheckConfig {
            gen: GenConfig {
                max_array_len: 1 << 12,
                ..GenConfig::default()
            },
            ..cfg(1000)
        };
        let start = Instant::now();
        expect_clean(&check_combined(Case::BinarySearch, &c, None), 1000, p);
        within(Duration::from_secs(30), start, "binary search end to end", p);
    })
}

fn sum_end_to_end() -> Outcome {
    criterion("sum agrees across all five layers on 1000 arrays up to 64 long", |p| {
        expect_clean(&check_combined(Case::Sum, &cfg(1000), None), 1000, p);
    })
}

fn early_exit() -> Outcome {
    criterion("binary search takes at most ceil(log2 n) + 1 steps for n = 1 .. 4096", |p| {
        expect_clean(&check_early_exit(&cfg(100)), 100, p);
    })
}

fn determinism() -> Outcome {
    criterion("check all --seed 42 is byte-identical across runs", |p| {
        for format in ["json", "text"] {
            let run = || {
                Command::new(env!("CARGO_BIN_EXE_minicogent"))
                    .args(["check", "all", "--seed", "42", "--no-timestamp", "--format", format])
                    .env_remove("MINICOGENT_SEED")
                    .output()
                    .expect("binary runs")
            };
            let (a, b) = (run(), run());
            if !a.status.success() {
                p.push(format!("{format}: exit status {}", a.status));
            }
            if a.stdout.is_empty() || a.stdout != b.stdout {
                p.push(format!("{format}: outputs differ or are empty"));
            }
        }
    })
}

#[test]
fn acceptance_criteria() {
    let outcomes = vec![
        preservation_and_frame(),
        value_update(),
        obligations(),
        per_operation(),
        monomorphisation(),
        binary_search_end_to_end(),
        sum_end_to_end(),
        early_exit(),
        determinism(),
    ];
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.problems.is_empty())
        .map(|o| o.name)
        .collect();
    let _ = writeln!(
        std::io::stderr(),
        "{} of {} acceptance criteria met",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    assert!(failed.is_empty(), "unmet: {failed:#?}");
}
