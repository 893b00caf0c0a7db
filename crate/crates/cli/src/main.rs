//! `blds`: generate, solve, benchmark, simulate, reduce, and verify data
//! source selection instances from the command line.
//!
//! Exit codes: 0 success, 1 infeasible instance or failed validation,
//! 2 usage error.

use blds_core::bounds;
use blds_core::harness::{
    self, emit_bound_curve, emit_histogram, gen_instance, run_benchmark, report_to_csv,
    GenConfig, GenMode, RatioKind,
};
use blds_core::model::{instance_from_json, instance_to_json, validate_instance};
use blds_core::objective::Evaluator;
use blds_core::rational::{parse_rat, Rat};
use blds_core::simulate::{limit_belief, run_bayes};
use blds_core::solvers::{
    exact_solve, fast_greedy_solve, greedy_solve, reduce_set_cover, solve_report_json,
    FastGreedyConfig, SetCoverInstance, SolveError,
};
use blds_core::{all_subsets, BitSet};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "blds", version, about = "Data source selection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instances as JSON.
    Gen(GenArgs),
    /// Solve an instance and print the solution with its bounds.
    Solve(SolveArgs),
    /// Run a benchmark sweep and write CSV/SVG reports.
    Bench(BenchArgs),
    /// Simulate the belief recursion on an instance.
    Simulate(SimArgs),
    /// Reduce a set cover instance to a selection instance.
    Reduce(ReduceArgs),
    /// Check structural properties of an instance exhaustively.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Raw,
    Realizable,
}

impl From<ModeArg> for GenMode {
    fn from(m: ModeArg) -> GenMode {
        match m {
            ModeArg::Raw => GenMode::Raw,
            ModeArg::Realizable => GenMode::Realizable,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Number of sources.
    #[arg(long)]
    n: usize,
    /// Number of states.
    #[arg(long)]
    m: usize,
    /// Budget numerator; every budget is r/m.
    #[arg(long)]
    r: u32,
    #[arg(long, default_value_t = 10)]
    cost_max: u32,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Base seed; BLDS_SEED overrides this default when the flag is absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Raw)]
    mode: ModeArg,
    /// Raw-mode inclusion probability, as a rational like 1/2.
    #[arg(long, default_value = "1/2")]
    include_prob: String,
    /// Directory for instance files; without it JSON goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Greedy,
    Fast,
    Exact,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Threshold decay for the fast algorithm, as a rational like 1/10.
    #[arg(long, default_value = "1/10")]
    epsilon: String,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 15)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    cost_max: u32,
    /// Instances per budget level.
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Raw)]
    mode: ModeArg,
    #[arg(long, default_value = "1/2")]
    include_prob: String,
    /// Comma-separated budget numerators to sweep.
    #[arg(long, default_value = "0,1,2,3,4,5,6,7,8,9,10,11,12,13")]
    r_values: String,
    #[arg(long, default_value = "1/10")]
    epsilon: String,
    /// Output directory for report.csv, bound_curve.csv/svg, histograms.
    #[arg(long)]
    out: PathBuf,
    /// Budget levels to emit ratio histograms for (repeatable).
    #[arg(long = "hist-r")]
    hist_r: Vec<u32>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated selected source indices; empty selects nothing.
    #[arg(long, default_value = "")]
    select: String,
    #[arg(long)]
    true_state: usize,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectory CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    /// Set cover JSON: {"universe_size": d, "subsets": [[0,1], ...]}.
    #[arg(long)]
    setcover: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Cap on sources for exhaustive subset checks.
    #[arg(long, default_value_t = 12)]
    max_sources: usize,
}

fn usage_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn infeasible_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INFEASIBLE)
}

fn resolve_seed(flag: Option<u64>, default: u64) -> Result<u64, String> {
    match flag {
        Some(s) => Ok(s),
        None => harness::seed_from_env(default).map_err(|e| format!("BLDS_SEED: {e}")),
    }
}

fn parse_rat_flag(name: &str, text: &str) -> Result<Rat, String> {
    parse_rat(text).map_err(|e| format!("--{name}: {e}"))
}

fn parse_index_list(text: &str) -> Result<Vec<usize>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad index `{p}`: {e}")))
        .collect()
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_gen(args: GenArgs) -> ExitCode {
    let include_prob = match parse_rat_flag("include-prob", &args.include_prob) {
        Ok(p) => p,
        Err(e) => return usage_err(e),
    };
    let seed = match resolve_seed(args.seed, 42) {
        Ok(s) => s,
        Err(e) => return usage_err(e),
    };
    let cfg = GenConfig {
        n: args.n,
        m: args.m,
        r: args.r,
        cost_max: args.cost_max,
        count: args.count,
        seed,
        mode: args.mode.into(),
        include_prob,
    };
    if let Err(e) = cfg.validate() {
        return usage_err(e);
    }
    for idx in 0..cfg.count as u64 {
        let inst = gen_instance(&cfg, idx);
        let validated = validate_instance(inst).expect("generated instances are valid");
        let json = instance_to_json(&validated);
        match &args.out {
            Some(dir) => {
                if let Err(e) = std::fs::create_dir_all(dir) {
                    return infeasible_err(format!("{}: {e}", dir.display()));
                }
                let path = dir.join(format!("instance_{idx:04}.json"));
                if let Err(e) = std::fs::write(&path, json) {
                    return infeasible_err(format!("{}: {e}", path.display()));
                }
            }
            None => println!("{json}"),
        }
    }
    ExitCode::SUCCESS
}

fn cmd_solve(args: SolveArgs) -> ExitCode {
    let text = match read_file(&args.instance) {
        Ok(t) => t,
        Err(e) => return infeasible_err(e),
    };
    let inst = match instance_from_json(&text) {
        Ok(i) => i,
        Err(e) => return infeasible_err(e),
    };
    let result = match args.algo {
        AlgoArg::Greedy => greedy_solve(&inst).map(|(sol, trace)| {
            let bounds = bounds::report_for_greedy(&trace, &inst, None);
            (sol, Some(trace), bounds)
        }),
        AlgoArg::Fast => {
            let eps = match parse_rat_flag("epsilon", &args.epsilon) {
                Ok(e) => e,
                Err(e) => return usage_err(e),
            };
            let cfg = match FastGreedyConfig::new(eps) {
                Ok(c) => c,
                Err(e) => return usage_err(e),
            };
            fast_greedy_solve(&inst, &cfg).map(|(sol, trace)| {
                let bounds = bounds::report_for_fast(&trace, &inst, None);
                (sol, Some(trace), bounds)
            })
        }
        AlgoArg::Exact => {
            exact_solve(&inst).map(|sol| (sol, None, bounds::BoundsReport::empty()))
        }
    };
    match result {
        Ok((sol, trace, bounds)) => {
            let mut report = solve_report_json(&sol, trace.as_ref());
            report["bounds"] = bounds.to_json();
            println!("{}", serde_json::to_string_pretty(&report).expect("valid JSON"));
            ExitCode::SUCCESS
        }
        Err(e @ SolveError::Infeasible(_)) => infeasible_err(e),
        Err(e @ SolveError::TooLarge(_)) => usage_err(e),
    }
}

fn parse_r_values(text: &str) -> Result<Vec<u32>, String> {
    let values: Result<Vec<u32>, String> = text
        .split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|e| format!("bad R value `{p}`: {e}")))
        .collect();
    let values = values?;
    if values.is_empty() {
        return Err("need at least one R value".into());
    }
    Ok(values)
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<(), ExitCode> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| infeasible_err(format!("{}: {e}", path.display())))
}

fn cmd_bench(args: BenchArgs) -> ExitCode {
    let include_prob = match parse_rat_flag("include-prob", &args.include_prob) {
        Ok(p) => p,
        Err(e) => return usage_err(e),
    };
    let epsilon = match parse_rat_flag("epsilon", &args.epsilon) {
        Ok(e) => e,
        Err(e) => return usage_err(e),
    };
    if epsilon <= Rat::new(0, 1) || epsilon >= Rat::new(1, 1) {
        return usage_err("--epsilon must lie strictly between 0 and 1");
    }
    let r_values = match parse_r_values(&args.r_values) {
        Ok(v) => v,
        Err(e) => return usage_err(e),
    };
    let seed = match resolve_seed(args.seed, 42) {
        Ok(s) => s,
        Err(e) => return usage_err(e),
    };
    let cfg = GenConfig {
        n: args.n,
        m: args.m,
        r: r_values[0],
        cost_max: args.cost_max,
        count: args.count,
        seed,
        mode: args.mode.into(),
        include_prob,
    };
    let report = match run_benchmark(&cfg, &r_values, &epsilon) {
        Ok(r) => r,
        Err(e) => return usage_err(e),
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        return infeasible_err(format!("{}: {e}", args.out.display()));
    }
    if let Err(code) = write_out(&args.out, "report.csv", &report_to_csv(&report)) {
        return code;
    }
    let (curve_csv, curve_svg) = emit_bound_curve(&report);
    for (name, content) in [("bound_curve.csv", curve_csv), ("bound_curve.svg", curve_svg)] {
        if let Err(code) = write_out(&args.out, name, &content) {
            return code;
        }
    }
    for &r in &args.hist_r {
        for (kind, tag) in [(RatioKind::Greedy, "greedy"), (RatioKind::Fast, "fast")] {
            let (csv, svg) = match emit_histogram(&report, r, kind, args.bins) {
                Ok(x) => x,
                Err(e) => return usage_err(e),
            };
            if let Err(code) = write_out(&args.out, &format!("hist_{tag}_r{r}.csv"), &csv) {
                return code;
            }
            if let Err(code) = write_out(&args.out, &format!("hist_{tag}_r{r}.svg"), &svg) {
                return code;
            }
        }
    }
    println!(
        "wrote {} rows across {} budget levels to {} ({} redraws)",
        report.rows.len(),
        r_values.len(),
        args.out.display(),
        report.total_redraws
    );
    ExitCode::SUCCESS
}

fn cmd_simulate(args: SimArgs) -> ExitCode {
    let text = match read_file(&args.instance) {
        Ok(t) => t,
        Err(e) => return infeasible_err(e),
    };
    let inst = match instance_from_json(&text) {
        Ok(i) => i,
        Err(e) => return infeasible_err(e),
    };
    let indices = match parse_index_list(&args.select) {
        Ok(v) => v,
        Err(e) => return usage_err(e),
    };
    if indices.iter().any(|&i| i >= inst.num_sources()) {
        return usage_err("--select index out of range");
    }
    if args.true_state >= inst.num_states() {
        return usage_err("--true-state out of range");
    }
    let selected: BitSet = indices.into_iter().collect();
    let seed = match resolve_seed(args.seed, 7) {
        Ok(s) => s,
        Err(e) => return usage_err(e),
    };
    let traj = match run_bayes(&inst, selected, args.true_state, args.steps, seed) {
        Ok(t) => t,
        Err(e) => return infeasible_err(e),
    };
    let limit: Vec<String> = limit_belief(&inst, selected, args.true_state)
        .iter()
        .map(blds_core::rational::format_rat)
        .collect();
    let meta = serde_json::json!({
        "seed": seed,
        "selected": selected.iter().collect::<Vec<_>>(),
        "true_state": args.true_state,
        "steps": args.steps,
        "limit_belief": limit,
    });
    let mut out = format!("# {meta}\n");
    out.push_str("step");
    for t in 1..=inst.num_states() {
        out.push_str(&format!(",theta_{t}"));
    }
    out.push('\n');
    for (step, belief) in traj.beliefs.iter().enumerate() {
        out.push_str(&step.to_string());
        for b in belief {
            out.push_str(&format!(",{b:.12}"));
        }
        out.push('\n');
    }
    match &args.out {
        Some(path) => match std::fs::write(path, out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => infeasible_err(format!("{}: {e}", path.display())),
        },
        None => {
            print!("{out}");
            ExitCode::SUCCESS
        }
    }
}

#[derive(Deserialize)]
struct SetCoverJson {
    universe_size: usize,
    subsets: Vec<Vec<usize>>,
}

fn cmd_reduce(args: ReduceArgs) -> ExitCode {
    let text = match read_file(&args.setcover) {
        Ok(t) => t,
        Err(e) => return infeasible_err(e),
    };
    let wire: SetCoverJson = match serde_json::from_str(&text) {
        Ok(w) => w,
        Err(e) => return infeasible_err(format!("malformed set cover JSON: {e}")),
    };
    if wire
        .subsets
        .iter()
        .flatten()
        .any(|&q| q >= wire.universe_size)
    {
        return usage_err("subset element out of universe range");
    }
    let sc = SetCoverInstance {
        universe_size: wire.universe_size,
        subsets: wire
            .subsets
            .iter()
            .map(|s| s.iter().copied().collect())
            .collect(),
    };
    let inst = reduce_set_cover(&sc);
    let validated = validate_instance(inst).expect("reduction output is always valid");
    println!("{}", instance_to_json(&validated));
    ExitCode::SUCCESS
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let text = match read_file(&args.instance) {
        Ok(t) => t,
        Err(e) => return infeasible_err(e),
    };
    let inst = match instance_from_json(&text) {
        Ok(i) => i,
        Err(e) => return infeasible_err(e),
    };
    let n = inst.num_sources();
    if n > args.max_sources {
        return usage_err(format!(
            "instance has {n} sources; exhaustive checks are capped at {} (--max-sources)",
            args.max_sources
        ));
    }
    let eval = Evaluator::new(&inst);
    let z_full = eval.z_scaled(BitSet::full(n));
    let mut violations = 0u64;

    // Monotonicity: adding any source never decreases coverage.
    for set in all_subsets(n) {
        let base = eval.z_scaled(set);
        for i in 0..n {
            if !set.contains(i) && eval.z_scaled(set.insert(i)) < base {
                violations += 1;
            }
        }
    }
    println!("monotonicity: {}", if violations == 0 { "ok" } else { "FAILED" });
    let mono = violations;

    // Submodularity: marginal gains shrink on supersets.
    violations = 0;
    for a in all_subsets(n) {
        for b in all_subsets(n) {
            if !a.is_subset_of(b) {
                continue;
            }
            let za = eval.z_scaled(a);
            let zb = eval.z_scaled(b);
            for i in 0..n {
                if !b.contains(i)
                    && eval.z_scaled(a.insert(i)) - za < eval.z_scaled(b.insert(i)) - zb
                {
                    violations += 1;
                }
            }
        }
    }
    println!("submodularity: {}", if violations == 0 { "ok" } else { "FAILED" });
    let sub = violations;

    // Coverage criterion matches the per-state error constraints.
    violations = 0;
    for set in all_subsets(n) {
        if (eval.z_scaled(set) == z_full) != eval.is_feasible_direct(set) {
            violations += 1;
        }
    }
    println!(
        "feasibility equivalence: {}",
        if violations == 0 { "ok" } else { "FAILED" }
    );

    if mono + sub + violations > 0 {
        return ExitCode::from(EXIT_INFEASIBLE);
    }
    match eval.check_solvable() {
        Ok(()) => {
            println!("solvable: ok");
            ExitCode::SUCCESS
        }
        Err(e) => infeasible_err(e),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Reduce(args) => cmd_reduce(args),
        Command::Verify(args) => cmd_verify(args),
    }
}
