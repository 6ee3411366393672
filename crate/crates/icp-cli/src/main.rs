//! Command-line front end for the icp toolkit.
//!
//! Six subcommands cover the toolkit's surface: `check` (static
//! analysis), `run` (resolve a query), `tree` (print a derivation
//! tree), `model` (fixpoint model computation), `terminate`
//! (acceptability check plus nontermination probe), and `bench`
//! (classify a corpus against an expected table).
//!
//! Exit codes: 0 when the command's verdict is positive, 1 when it is
//! negative, 2 on usage or input errors, and 3 when a depth or fuel
//! bound prevented a verdict either way.  Every command takes `--json`
//! to emit one machine-readable document instead of text.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use icp_core::analysis::{
    check_input_consistent, check_selection_equivalence, check_simple_delays, check_simply_moded,
};
use icp_core::bench::{run_benchmarks, RowOutcome};
use icp_core::engine::{derive, Bounds, SelectionRule};
use icp_core::frontend::{parse_program, parse_query, Program};
use icp_core::semantics::{
    compute_model, compute_partial_model, load_interpretation, validate_model, AtomMode,
    FixpointBounds, Interpretation,
};
use icp_core::term::VarNames;
use icp_core::termination::{
    check_simply_acceptable, probe_termination, sample_queries, LevelMapping, SampleBounds,
    TerminationError,
};

/// Moded logic programs under dynamic scheduling: derivations, models,
/// and termination certificates.
#[derive(Parser)]
#[command(name = "icp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Statically analyze a program: moding discipline, input
    /// consistency, delay declarations, selection equivalence.
    Check(CheckArgs),
    /// Resolve a query and print the derivation trace and its answers.
    Run(RunArgs),
    /// Print a full derivation tree for a query.
    Tree(TreeArgs),
    /// Compute a model (or partial-derivation model) by fixpoint
    /// iteration and dump it.
    Model(ModelArgs),
    /// Check simple acceptability and probe for nontermination
    /// evidence.
    Terminate(TerminateArgs),
    /// Classify every program in a corpus and compare the results
    /// against an expected table.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Program file.
    file: PathBuf,
    /// Emit one JSON document instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    /// Branch over every input-consuming step of every atom.
    Ic,
    /// Commit to the leftmost atom with an input-consuming step.
    Lic,
    /// Select the leftmost atom whose delay conditions are satisfied.
    Delay,
    /// Always select the leftmost atom.
    Leftmost,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    /// All input-consuming steps of all atoms.
    Ic,
    /// The committed local tree.
    Lic,
    /// All clauses for every delay-selectable atom.
    Delay,
}

#[derive(Args)]
struct RunArgs {
    /// Program file.
    file: PathBuf,
    /// The query to resolve, e.g. "append([a,b],X,Y)".
    #[arg(long)]
    query: String,
    /// Selection rule.
    #[arg(long, value_enum, default_value_t = RuleArg::Ic)]
    rule: RuleArg,
    /// Maximum derivation depth.
    #[arg(long, default_value_t = 16)]
    depth: usize,
    /// Maximum number of tree nodes.
    #[arg(long, default_value_t = 100_000)]
    fuel: usize,
    /// Inclusive integer range backing the comparison predicates.
    #[arg(long, value_parser = parse_range, default_value = "0..64")]
    compare_range: (i64, i64),
    /// Emit one JSON document instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TreeArgs {
    /// Program file.
    file: PathBuf,
    /// The query to grow the tree from.
    #[arg(long)]
    query: String,
    /// Tree family.
    #[arg(long, value_enum, default_value_t = KindArg::Ic)]
    kind: KindArg,
    /// Maximum derivation depth.
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Maximum number of tree nodes.
    #[arg(long, default_value_t = 100_000)]
    fuel: usize,
    /// Inclusive integer range backing the comparison predicates.
    #[arg(long, value_parser = parse_range, default_value = "0..64")]
    compare_range: (i64, i64),
    /// Emit one JSON document instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ModelArgs {
    /// Program file.
    file: PathBuf,
    /// Include partial derivations (seed the fixpoint with one
    /// schematic atom per declared predicate).
    #[arg(long)]
    partial: bool,
    /// Maximum fixpoint iterations.
    #[arg(long, default_value_t = 8)]
    iters: usize,
    /// Term-depth bound on kept atoms.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Fresh variables added to the input universe.
    #[arg(long, default_value_t = 1)]
    pool: usize,
    /// Enumerate ground input instances instead of schematic atoms.
    #[arg(long)]
    ground: bool,
    /// Inclusive integer range backing the comparison predicates.
    #[arg(long, value_parser = parse_range, default_value = "0..64")]
    compare_range: (i64, i64),
    /// Emit one JSON document instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TerminateArgs {
    /// Program file.
    file: PathBuf,
    /// Named level-mapping source; only "declared" (the program's
    /// `:- level` directives) is defined.
    #[arg(long, conflicts_with = "canonical")]
    level: Option<String>,
    /// Measure atoms by committed derivation-tree size instead of
    /// declared levels.
    #[arg(long)]
    canonical: bool,
    /// Depth bound for the probe and for canonical level measurement.
    #[arg(long, default_value_t = 32)]
    depth: usize,
    /// Load the model from a dump instead of computing it.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Fixpoint iterations when computing the model.
    #[arg(long, default_value_t = 8)]
    model_iters: usize,
    /// Term-depth bound when computing the model.
    #[arg(long, default_value_t = 3)]
    model_depth: usize,
    /// Fresh-variable pool when computing the model.
    #[arg(long, default_value_t = 1)]
    model_pool: usize,
    /// Term-depth bound on sampled input instantiations.
    #[arg(long, default_value_t = 2)]
    universe_depth: usize,
    /// Fresh variables added to the sampling universe.
    #[arg(long, default_value_t = 1)]
    sample_pool: usize,
    /// Cap on sampled input tuples per predicate or clause.
    #[arg(long, default_value_t = 64)]
    cap: usize,
    /// Inclusive integer range backing the comparison predicates.
    #[arg(long, value_parser = parse_range, default_value = "0..64")]
    compare_range: (i64, i64),
    /// Emit one JSON document instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Corpus directory holding one `<name>.icp` per table row.
    dir: PathBuf,
    /// Expected table (CSV `name,moding,SM,IC,L`).
    #[arg(long)]
    expected: PathBuf,
    /// Emit one JSON document instead of text.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Run(args) => cmd_run(args),
        Command::Tree(args) => cmd_tree(args),
        Command::Model(args) => cmd_model(args),
        Command::Terminate(args) => cmd_terminate(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

/// Parses an inclusive integer range written `LO..HI`.
fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected LO..HI")?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

/// Reads and parses a program file; when a comparison range is given,
/// the comparison predicates are backed with fact tables over it.
fn load_program(path: &Path, range: Option<(i64, i64)>) -> Result<Program> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("program")
        .to_string();
    let mut program =
        parse_program(&text, &name).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    if let Some((lo, hi)) = range {
        program.materialize_comparisons(lo, hi)?;
    }
    Ok(program)
}

/// Program variable names extended with the query's.
fn merged_names(program: &Program, query_names: &VarNames) -> VarNames {
    let mut names = program.var_names.clone();
    for (v, n) in query_names {
        names.insert(*v, n.clone());
    }
    names
}

fn cmd_check(args: CheckArgs) -> Result<u8> {
    let program = load_program(&args.file, None)?;
    let sm = check_simply_moded(&program);
    let ic = check_input_consistent(&program);
    let delays = check_simple_delays(&program);
    let se = check_selection_equivalence(&program);
    let verdict = sm.holds && ic.holds && delays.simple;

    if args.json {
        let controlled: serde_json::Map<String, serde_json::Value> = delays
            .controlled
            .iter()
            .map(|((p, a), set)| {
                let positions: Vec<usize> = set.iter().map(|i| i + 1).collect();
                (format!("{p}/{a}"), json!(positions))
            })
            .collect();
        let doc = json!({
            "command": "check",
            "program": program.name,
            "clauses": program.clauses.len(),
            "predicates": program.defined_predicates().len(),
            "simply_moded": { "holds": sm.holds, "witness": sm.witness },
            "input_consistent": { "holds": ic.holds, "witness": ic.witness },
            "delays": { "simple": delays.simple, "witness": delays.witness, "controlled": controlled },
            "selection_equivalence": {
                "holds": se.holds(),
                "applicable": se.applicable,
                "free_positions_hold_variables": se.free_positions_hold_variables,
                "controlled_positions_hold_flat_terms": se.controlled_positions_hold_flat_terms,
                "witness": se.witness,
            },
            "verdict": verdict,
        });
        println!("{doc:#}");
    } else {
        println!(
            "program: {} — clauses: {}, predicates: {}",
            program.name,
            program.clauses.len(),
            program.defined_predicates().len()
        );
        report_line("simply moded", sm.holds, &sm.witness);
        report_line("input consistent", ic.holds, &ic.witness);
        report_line("delay declarations simple", delays.simple, &delays.witness);
        if delays.simple && !delays.controlled.values().all(|s| s.is_empty()) {
            let rendered: Vec<String> = delays
                .controlled
                .iter()
                .filter(|(_, set)| !set.is_empty())
                .map(|((p, a), set)| {
                    let positions: Vec<String> = set.iter().map(|i| (i + 1).to_string()).collect();
                    format!("{p}/{a}: {}", positions.join(","))
                })
                .collect();
            println!("  controlled positions: {}", rendered.join("; "));
        }
        report_line("selection equivalence", se.holds(), &se.witness);
        println!("verdict: {}", if verdict { "pass" } else { "fail" });
    }
    Ok(if verdict { 0 } else { 1 })
}

fn report_line(label: &str, holds: bool, witness: &Option<String>) {
    println!("{label}: {}", if holds { "yes" } else { "no" });
    if !holds {
        if let Some(w) = witness {
            println!("  witness: {w}");
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let program = load_program(&args.file, Some(args.compare_range))?;
    let parsed = parse_query(&args.query, &program).map_err(|e| anyhow!("query: {e}"))?;
    let rule = match args.rule {
        RuleArg::Ic => SelectionRule::IcAny,
        RuleArg::Lic => SelectionRule::Lic,
        RuleArg::Delay => SelectionRule::DelayLeftmost,
        RuleArg::Leftmost => SelectionRule::Leftmost,
    };
    let bounds = Bounds { depth: args.depth, fuel: args.fuel };
    let tree = derive(&program, &parsed.query, rule, bounds, parsed.next_var)?;
    let names = merged_names(&program, &parsed.var_names);
    let answers = tree.answers();
    let rendered: Vec<String> = answers.iter().map(|a| a.display(&names).to_string()).collect();
    let verdict = if !answers.is_empty() {
        "success"
    } else if tree.truncated {
        "undetermined"
    } else {
        "no-success"
    };

    if args.json {
        let doc = json!({
            "command": "run",
            "program": program.name,
            "query": parsed.query.display(&names).to_string(),
            "rule": format!("{rule:?}"),
            "depth": args.depth,
            "fuel": args.fuel,
            "lnodes": tree.lnodes(),
            "truncated": tree.truncated,
            "answers": rendered,
            "trace": tree.trace(&program, &names),
            "verdict": verdict,
        });
        println!("{doc:#}");
    } else {
        println!("program: {}", program.name);
        println!("query: {}", parsed.query.display(&names));
        println!("rule: {rule:?}, depth {}, fuel {}", args.depth, args.fuel);
        println!("--- trace ---");
        print!("{}", tree.trace(&program, &names));
        println!("--- answers ({}) ---", rendered.len());
        for a in &rendered {
            println!("  {a}");
        }
        println!("truncated: {}", if tree.truncated { "yes" } else { "no" });
        println!("verdict: {verdict}");
    }
    Ok(match verdict {
        "success" => 0,
        "no-success" => 1,
        _ => 3,
    })
}

fn cmd_tree(args: TreeArgs) -> Result<u8> {
    let program = load_program(&args.file, Some(args.compare_range))?;
    let parsed = parse_query(&args.query, &program).map_err(|e| anyhow!("query: {e}"))?;
    let rule = match args.kind {
        KindArg::Ic => SelectionRule::IcAny,
        KindArg::Lic => SelectionRule::Lic,
        KindArg::Delay => SelectionRule::DelayAny,
    };
    let bounds = Bounds { depth: args.depth, fuel: args.fuel };
    let tree = derive(&program, &parsed.query, rule, bounds, parsed.next_var)?;
    let names = merged_names(&program, &parsed.var_names);

    if args.json {
        let doc = json!({
            "command": "tree",
            "program": program.name,
            "query": parsed.query.display(&names).to_string(),
            "kind": format!("{:?}", tree.kind),
            "depth": args.depth,
            "fuel": args.fuel,
            "lnodes": tree.lnodes(),
            "success_nodes": tree.success_nodes().len(),
            "truncated": tree.truncated,
            "trace": tree.trace(&program, &names),
        });
        println!("{doc:#}");
    } else {
        println!("program: {}", program.name);
        println!("query: {}", parsed.query.display(&names));
        println!("kind: {:?}, depth {}, fuel {}", tree.kind, args.depth, args.fuel);
        println!("lnodes: {}", tree.lnodes());
        println!("truncated: {}", if tree.truncated { "yes" } else { "no" });
        print!("{}", tree.trace(&program, &names));
    }
    Ok(0)
}

fn cmd_model(args: ModelArgs) -> Result<u8> {
    let program = load_program(&args.file, Some(args.compare_range))?;
    let bounds = FixpointBounds::new(args.iters, args.depth, args.pool);
    let mode = if args.ground { AtomMode::GroundEnumeration } else { AtomMode::Symbolic };
    let interp = if args.partial {
        compute_partial_model(&program, bounds, mode)?
    } else {
        compute_model(&program, bounds, mode)?
    };

    if args.json {
        let atoms: Vec<String> = interp.atoms.iter().map(|a| a.to_string()).collect();
        let doc = json!({
            "command": "model",
            "program": program.name,
            "partial": args.partial,
            "mode": mode.to_string(),
            "iters": args.iters,
            "depth": args.depth,
            "pool": args.pool,
            "fixpoint": interp.fixpoint,
            "pruned": interp.pruned,
            "atoms": atoms,
        });
        println!("{doc:#}");
    } else {
        println!("# program: {}", program.name);
        print!("{}", interp.dump());
    }
    Ok(if interp.fixpoint { 0 } else { 3 })
}

/// Where the terminate command's model came from, for reporting.
enum ModelSource {
    Computed(FixpointBounds),
    Loaded(PathBuf),
}

fn cmd_terminate(args: TerminateArgs) -> Result<u8> {
    let program = load_program(&args.file, Some(args.compare_range))?;
    let sample = SampleBounds::new(args.universe_depth, args.sample_pool, args.cap);

    let (model, source): (Interpretation, ModelSource) = match &args.model {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let interp =
                load_interpretation(&text, &program).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            let validation = validate_model(&program, &interp)?;
            if !validation.holds() {
                bail!(
                    "{} is not a model of the program: {}",
                    path.display(),
                    validation.witness.unwrap_or_else(|| "validation failed".to_string())
                );
            }
            (interp, ModelSource::Loaded(path.clone()))
        }
        None => {
            let bounds = FixpointBounds::new(args.model_iters, args.model_depth, args.model_pool);
            (compute_partial_model(&program, bounds, AtomMode::Symbolic)?, ModelSource::Computed(bounds))
        }
    };

    let mapping_name = if args.canonical {
        "canonical"
    } else {
        match args.level.as_deref() {
            None | Some("declared") => "declared",
            Some(other) => bail!("unknown level mapping {other:?}; only \"declared\" is defined"),
        }
    };

    let evidence = probe_termination(&program, sample, args.depth)?;
    let sampled = sample_queries(&program, sample).len();

    let mapping = if mapping_name == "canonical" {
        if let Some(e) = &evidence {
            eprintln!("canonical levels are unavailable: {e}");
            return finish_terminate(&args, &program, mapping_name, &source, None, &evidence, sampled, 1);
        }
        LevelMapping::Canonical { tree_depth: args.depth }
    } else {
        LevelMapping::Declared
    };

    let report = match check_simply_acceptable(&program, &mapping, &model, sample) {
        Ok(report) => report,
        Err(TerminationError::UnboundedLevel { atom }) => {
            eprintln!("no verdict: the level of {atom} exceeds the depth bound {}", args.depth);
            return Ok(3);
        }
        Err(e) => return Err(e.into()),
    };

    let accepted = report.accepted;
    let code = if accepted && evidence.is_none() { 0 } else { 1 };
    finish_terminate(&args, &program, mapping_name, &source, Some(&report), &evidence, sampled, code)
}

#[allow(clippy::too_many_arguments)]
fn finish_terminate(
    args: &TerminateArgs,
    program: &Program,
    mapping: &str,
    source: &ModelSource,
    report: Option<&icp_core::termination::AcceptabilityReport>,
    evidence: &Option<String>,
    sampled: usize,
    code: u8,
) -> Result<u8> {
    let source_text = match source {
        ModelSource::Computed(b) => format!(
            "computed (iters={} depth={} pool={})",
            b.max_iterations, b.term_depth, b.fresh_pool
        ),
        ModelSource::Loaded(path) => format!("loaded from {}", path.display()),
    };
    if args.json {
        let doc = json!({
            "command": "terminate",
            "program": program.name,
            "mapping": mapping,
            "model": source_text,
            "depth": args.depth,
            "sampled_queries": sampled,
            "acceptability": report.map(|r| json!({
                "accepted": r.accepted,
                "obligations_checked": r.obligations_checked,
                "counterexample": r.counterexample,
            })),
            "probe_evidence": evidence,
            "verdict": code == 0,
        });
        println!("{doc:#}");
    } else {
        println!("program: {}", program.name);
        println!("mapping: {mapping}");
        println!("model: {source_text}");
        match report {
            Some(r) if r.accepted => {
                println!("acceptability: accepted ({} obligations checked)", r.obligations_checked)
            }
            Some(r) => {
                println!("acceptability: REJECTED after {} obligations", r.obligations_checked);
                if let Some(c) = &r.counterexample {
                    println!("  counterexample: {c}");
                }
            }
            None => println!("acceptability: not checked"),
        }
        match evidence {
            Some(e) => println!("probe: EVIDENCE — {e}"),
            None => println!("probe: no evidence at depth {} ({} queries sampled)", args.depth, sampled),
        }
        println!(
            "verdict: {}",
            if code == 0 { "terminating (bounded certificate)" } else { "not certified" }
        );
    }
    Ok(code)
}

fn cmd_bench(args: BenchArgs) -> Result<u8> {
    let report = run_benchmarks(&args.dir, &args.expected)?;
    if args.json {
        let rows: Vec<serde_json::Value> = report
            .rows
            .iter()
            .map(|r| {
                let (computed, status) = match &r.outcome {
                    RowOutcome::Classified(c) => (Some(c.to_string()), "classified".to_string()),
                    RowOutcome::Skipped => (None, "skipped".to_string()),
                    RowOutcome::Missing => (None, "missing".to_string()),
                    RowOutcome::Unreadable(why) => (None, format!("unreadable: {why}")),
                };
                json!({
                    "name": r.name,
                    "moding": r.moding,
                    "expected": r.expected.map(|c| c.to_string()),
                    "computed": computed,
                    "status": status,
                    "matches": r.matches,
                })
            })
            .collect();
        let doc = json!({
            "command": "bench",
            "corpus": args.dir.display().to_string(),
            "expected": args.expected.display().to_string(),
            "rows": rows,
            "compared": report.compared(),
            "all_match": report.all_match(),
        });
        println!("{doc:#}");
    } else {
        print!("{}", report.render());
    }
    Ok(if report.all_match() { 0 } else { 1 })
}
