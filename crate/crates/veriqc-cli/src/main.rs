//! Command-line front end: compile circuits through pass pipelines, verify
//! passes against their declared obligations, certify the rewrite-rule
//! catalog, and validate translations after the fact.
//!
//! Exit codes are a stable contract: 0 for success, 1 for usage and
//! configuration errors (bad flags, unparseable input, a routing pass
//! without a coupling map), 2 when the tools ran and the answer is bad (a
//! pass refuted, a validation inequivalent, a rule failing certification).
//!
//! Human-readable progress goes to stderr. Machine-readable JSON goes to
//! the `--report` path when one is given, otherwise to stdout, so a
//! harness can always parse what it asked for.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use veriqc::circuit::Layout;
use veriqc::coupling::CouplingMap;
use veriqc::passes::{
    build_pipeline, demo_registry, find_pass, registry, run_pipeline, Pass, PassConfig,
};
use veriqc::qasm::{emit_qasm, parse_qasm};
use veriqc::soundness::{check_embedding, check_rule, EMBED_TRIALS, RULE_SAMPLES};
use veriqc::symbolic::builtin_rules;
use veriqc::tolerances::DEFAULT_SEED;
use veriqc::verifier::{
    validate_stage, validate_translation, verify_pass, ValidationMode, VerificationReport,
};

// ====================================================================
// Argument grammar
// ====================================================================

#[derive(Parser)]
#[command(
    name = "veriqc",
    version,
    about = "Verified quantum circuit compilation: compile, verify, certify, validate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a pass pipeline over a QASM circuit and emit the result.
    Compile(CompileArgs),
    /// Generate and discharge the proof obligations of compiler passes.
    Verify(VerifyArgs),
    /// Certify every rewrite rule against the dense matrix oracle.
    CheckRules(CheckRulesArgs),
    /// Decide whether two circuits denote the same program.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CompileArgs {
    /// Input circuit (QASM subset).
    input: PathBuf,
    /// Where to write the compiled circuit.
    output: PathBuf,
    /// Comma-separated pass names, run in order. Empty means a round trip.
    #[arg(long, value_delimiter = ',')]
    passes: Vec<String>,
    /// Coupling map document (JSON) for routing and direction passes.
    #[arg(long)]
    coupling: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Check each stage's output against its input after running.
    #[arg(long, value_enum, default_value_t = ValidateFlag::Off)]
    validate: ValidateFlag,
    /// Write the JSON compilation report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Allow the deliberately broken demonstration passes by name.
    #[arg(long)]
    demo_bugs: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Verify one pass by name.
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    pass: Option<String>,
    /// Verify every registered pass.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Concurrent verification jobs when fanning out over passes.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Include the deliberately broken demonstration passes.
    #[arg(long)]
    demo_bugs: bool,
}

#[derive(Args)]
struct CheckRulesArgs {
    /// Oracle samples per rule for the local fragment check.
    #[arg(long, default_value_t = RULE_SAMPLES)]
    samples: usize,
    /// Random-context embedding trials per rule.
    #[arg(long, default_value_t = EMBED_TRIALS)]
    embed_trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the JSON certificate report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// The original circuit (QASM subset).
    original: PathBuf,
    /// The compiled circuit to check against it.
    compiled: PathBuf,
    /// Output permutation as comma-separated program wires, e.g. "2,0,1":
    /// physical wire i of the compiled circuit carries program wire perm[i].
    #[arg(long)]
    perm: Option<String>,
    /// Write a small JSON verdict here as well.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Validation discipline for `compile`. `off` skips checking entirely;
/// the other three pick which engines may decide.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ValidateFlag {
    Off,
    Symbolic,
    Oracle,
    Both,
}

impl ValidateFlag {
    fn mode(self) -> Option<ValidationMode> {
        match self {
            ValidateFlag::Off => None,
            ValidateFlag::Symbolic => Some(ValidationMode::Symbolic),
            ValidateFlag::Oracle => Some(ValidationMode::Oracle),
            ValidateFlag::Both => Some(ValidationMode::Both),
        }
    }
    fn name(self) -> &'static str {
        match self {
            ValidateFlag::Off => "off",
            ValidateFlag::Symbolic => "symbolic",
            ValidateFlag::Oracle => "oracle",
            ValidateFlag::Both => "both",
        }
    }
}

// ====================================================================
// Entry point
// ====================================================================

/// Ran fine but the answer is bad: verification refuted, validation
/// inequivalent, certification failed.
const EXIT_FAILED: u8 = 2;
/// Bad flags, unreadable files, unknown passes, missing coupling maps.
const EXIT_USAGE: u8 = 1;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version displays are success; real grammar errors
            // are usage errors, and clap's own code for them (2) would
            // collide with the verification-failure code.
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Compile(args) => cmd_compile(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::CheckRules(args) => cmd_check_rules(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

/// Write a report where it was asked for: the `--report` path, or stdout.
fn deliver_report(path: Option<&Path>, json: &str) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, json).with_context(|| format!("writing report {}", p.display()))?;
            eprintln!("report written to {}", p.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn read_circuit(path: &Path) -> Result<veriqc::Circuit> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_qasm(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_coupling(path: Option<&Path>) -> Result<Option<CouplingMap>> {
    let Some(path) = path else { return Ok(None) };
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let map = CouplingMap::from_json(&text)
        .with_context(|| format!("parsing coupling map {}", path.display()))?;
    Ok(Some(map))
}

// ====================================================================
// compile
// ====================================================================

fn cmd_compile(args: &CompileArgs) -> Result<u8> {
    let input = read_circuit(&args.input)?;
    let coupling = load_coupling(args.coupling.as_deref())?;
    let config = PassConfig { coupling, seed: args.seed, ..PassConfig::default() };
    let pipeline = build_pipeline(&args.passes, &config, args.demo_bugs)?;

    let started = Instant::now();
    let outcome = match run_pipeline(&pipeline, &input, &config) {
        Ok(o) => o,
        Err(e) => {
            // The configuration was fine; the compilation itself failed.
            eprintln!("compilation failed: {e}");
            return Ok(EXIT_FAILED);
        }
    };
    let total_millis = started.elapsed().as_secs_f64() * 1e3;

    let mode = args.validate.mode();
    let mut all_valid = true;
    let mut stage_rows = Vec::with_capacity(outcome.stages.len());
    for stage in &outcome.stages {
        let validation = match mode {
            None => None,
            Some(mode) => {
                let v = validate_stage(&stage.pass, &stage.input, &stage.outcome, mode)?;
                if !v.equivalent {
                    all_valid = false;
                    eprintln!(
                        "stage {} failed validation ({} tier{})",
                        stage.pass.name,
                        v.tier.name(),
                        v.deviation.map_or(String::new(), |d| format!(", deviation {d:.3e}")),
                    );
                }
                Some(v)
            }
        };
        eprintln!(
            "{:<28} {:>8.2} ms   {:>4} -> {:<4} gates",
            stage.pass.name,
            stage.millis,
            stage.input.len(),
            stage.outcome.circuit.len(),
        );
        stage_rows.push(serde_json::json!({
            "pass": stage.pass.name,
            "millis": stage.millis,
            "gates_in": stage.input.len(),
            "gates_out": stage.outcome.circuit.len(),
            "layout": stage.outcome.layout.as_ref().map(Layout::as_slice),
            "validation": validation,
        }));
    }

    fs::write(&args.output, emit_qasm(&outcome.circuit))
        .with_context(|| format!("writing {}", args.output.display()))?;
    eprintln!(
        "compiled {} -> {} ({} gates in, {} out, {:.2} ms)",
        args.input.display(),
        args.output.display(),
        input.len(),
        outcome.circuit.len(),
        total_millis,
    );

    let report = serde_json::json!({
        "input": args.input.display().to_string(),
        "output": args.output.display().to_string(),
        "seed": args.seed,
        "validation": args.validate.name(),
        "nqreg_in": input.nqreg,
        "nqreg_out": outcome.circuit.nqreg,
        "gates_in": input.len(),
        "gates_out": outcome.circuit.len(),
        "stages": stage_rows,
        "total_millis": total_millis,
        "valid": if mode.is_some() { serde_json::json!(all_valid) } else { serde_json::Value::Null },
    });
    deliver_report(args.report.as_deref(), &serde_json::to_string_pretty(&report)?)?;

    Ok(if all_valid { 0 } else { EXIT_FAILED })
}

// ====================================================================
// verify
// ====================================================================

/// Discharge a slice of passes over up to `jobs` worker threads. Each
/// pass's obligations stay sequential; parallelism is per pass, which is
/// where the independent work is.
fn verify_fan_out(
    passes: &[Pass],
    config: &PassConfig,
    jobs: usize,
) -> Vec<veriqc::Result<VerificationReport>> {
    let jobs = jobs.clamp(1, passes.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<veriqc::Result<VerificationReport>>>> =
        Mutex::new((0..passes.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= passes.len() {
                    break;
                }
                let report = verify_pass(&passes[i], config);
                slots.lock().expect("no panics hold this lock")[i] = Some(report);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|slot| slot.expect("every index was claimed"))
        .collect()
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8> {
    let passes: Vec<Pass> = if args.all {
        let mut all = registry();
        if args.demo_bugs {
            all.extend(demo_registry());
        }
        all
    } else {
        let name = args.pass.as_deref().expect("clap requires --pass without --all");
        vec![find_pass(name, args.demo_bugs)?]
    };

    let config = PassConfig { seed: args.seed, ..PassConfig::default() };
    let results = verify_fan_out(&passes, &config, args.jobs);

    let mut reports = Vec::with_capacity(results.len());
    let mut all_verified = true;
    for (pass, result) in passes.iter().zip(results) {
        match result {
            Ok(report) => {
                if report.verified {
                    eprintln!(
                        "{:<36} Verified   ({} obligations, {} subgoals, {} ms)",
                        report.pass,
                        report.obligations.len(),
                        report.subgoals,
                        report.millis,
                    );
                } else {
                    all_verified = false;
                    let bad: Vec<&str> = report
                        .obligations
                        .iter()
                        .filter(|o| !o.is_proved())
                        .map(|o| o.id.as_str())
                        .collect();
                    eprintln!(
                        "{:<36} FAILED     ({} ms; not proved: {})",
                        report.pass,
                        report.millis,
                        bad.join(", "),
                    );
                }
                reports.push(report);
            }
            Err(e) => {
                all_verified = false;
                eprintln!("{:<36} ERROR      ({e})", pass.name());
            }
        }
    }

    let json = if args.all {
        serde_json::to_string_pretty(&reports)?
    } else if let Some(report) = reports.first() {
        report.to_json()?
    } else {
        bail!("verification produced no report");
    };
    deliver_report(args.report.as_deref(), &json)?;

    Ok(if all_verified { 0 } else { EXIT_FAILED })
}

// ====================================================================
// check-rules
// ====================================================================

fn cmd_check_rules(args: &CheckRulesArgs) -> Result<u8> {
    let rules = builtin_rules();
    let mut rows = Vec::with_capacity(rules.len());
    let mut all_sound = true;
    let started = Instant::now();
    for rule in &rules {
        let local = check_rule(rule, args.samples, args.seed)?;
        let embedded = check_embedding(rule, args.embed_trials, args.seed)?;
        let sound = local.is_sound() && embedded.is_sound();
        if sound {
            eprintln!(
                "ok    {:<28} local {:>9.3e} ({} samples)   embedded {:>9.3e} ({} trials)",
                rule.name,
                local.worst_deviation,
                local.trials,
                embedded.worst_deviation,
                embedded.trials,
            );
        } else {
            all_sound = false;
            let cx = local.counterexample.as_ref().or(embedded.counterexample.as_ref());
            eprintln!(
                "FAIL  {:<28} deviation {:.3e} on {} qubits",
                rule.name,
                cx.map_or(f64::MAX, |c| c.deviation),
                cx.map_or(0, |c| c.nqreg),
            );
        }
        rows.push(serde_json::json!({
            "rule": rule.name,
            "certified": sound,
            "local": local,
            "embedded": embedded,
        }));
    }
    let total_millis = started.elapsed().as_secs_f64() * 1e3;
    eprintln!(
        "{} of {} rules certified in {:.1} ms",
        rows.iter().filter(|r| r["certified"] == true).count(),
        rules.len(),
        total_millis,
    );

    let report = serde_json::json!({
        "rules": rows,
        "samples": args.samples,
        "embed_trials": args.embed_trials,
        "seed": args.seed,
        "certified": all_sound,
        "total_millis": total_millis,
    });
    deliver_report(args.report.as_deref(), &serde_json::to_string_pretty(&report)?)?;

    Ok(if all_sound { 0 } else { EXIT_FAILED })
}

// ====================================================================
// validate
// ====================================================================

fn parse_perm(text: &str) -> Result<Layout> {
    let wires: Vec<usize> = text
        .split(',')
        .map(|part| part.trim().parse::<usize>().context("permutation entries are wire indices"))
        .collect::<Result<_>>()?;
    Ok(Layout::new(wires)?)
}

fn cmd_validate(args: &ValidateArgs) -> Result<u8> {
    let original = read_circuit(&args.original)?;
    let compiled = read_circuit(&args.compiled)?;
    if original.nqreg != compiled.nqreg {
        bail!(
            "register mismatch: {} has {} qubits, {} has {}",
            args.original.display(),
            original.nqreg,
            args.compiled.display(),
            compiled.nqreg,
        );
    }
    let perm = args.perm.as_deref().map(parse_perm).transpose()?;

    let verdict = validate_translation(&original, &compiled, perm.as_ref())?;
    let deviation = verdict
        .deviation
        .map_or(String::new(), |d| format!(", deviation {d:.3e}"));
    println!(
        "{} ({} tier{})",
        if verdict.equivalent { "equivalent" } else { "not equivalent" },
        verdict.tier.name(),
        deviation,
    );

    if args.report.is_some() {
        let report = serde_json::json!({
            "original": args.original.display().to_string(),
            "compiled": args.compiled.display().to_string(),
            "perm": perm.as_ref().map(Layout::as_slice),
            "verdict": verdict,
        });
        deliver_report(args.report.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    }

    Ok(if verdict.equivalent { 0 } else { EXIT_FAILED })
}
