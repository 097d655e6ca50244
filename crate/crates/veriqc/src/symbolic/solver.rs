//! Off-the-shelf SMT solver access.
//!
//! Exported scripts are standard SMT-LIB 2, so any UFLRA-capable solver
//! can check them. Discovery tries, in order: an explicit binary named by
//! the `VERIQC_Z3` environment variable, `z3` on PATH, `cvc5` on PATH,
//! and finally a Node.js shim around the official Z3 WebAssembly build,
//! provisioned on demand into a local toolchain directory via npm. The
//! result is cached per process.
//!
//! Quantified uninterpreted-function problems that are satisfiable can
//! send solvers into unbounded quantifier instantiation. For those,
//! `check_with_closure` retries with a finite-domain axiom (`every qubit
//! term equals one of k constants`); a model over a closed domain is still
//! a model, so `sat` under closure is trusted, while `unsat` under closure
//! proves nothing and is reported as unknown.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

// ====================================================================
// Outcomes
// ====================================================================

/// Solver verdict on one script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmtOutcome {
    Unsat,
    Sat,
    /// Timeout, resource-out, or anything else inconclusive; the payload
    /// is the solver's own words.
    Unknown(String),
}

impl SmtOutcome {
    fn parse(output: &str) -> SmtOutcome {
        // Tokenize so that "unsat" never matches inside other words.
        for tok in output.split_whitespace() {
            match tok {
                "unsat" => return SmtOutcome::Unsat,
                "sat" => return SmtOutcome::Sat,
                _ => {}
            }
        }
        SmtOutcome::Unknown(output.trim().replace('\n', " "))
    }
}

// ====================================================================
// Discovery
// ====================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinStyle {
    Z3,
    Cvc5,
}

#[derive(Debug, Clone)]
enum Route {
    Binary { path: PathBuf, style: BinStyle },
    Node { node: PathBuf, shim: PathBuf },
}

/// Handle to whichever solver was found.
#[derive(Debug, Clone)]
pub struct SmtSolver {
    route: Route,
}

static CACHE: OnceLock<std::result::Result<SmtSolver, String>> = OnceLock::new();

fn runs(path: &Path, arg: &str) -> bool {
    Command::new(path)
        .arg(arg)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn on_path(name: &str) -> Option<PathBuf> {
    let p = PathBuf::from(name);
    runs(&p, "--version").then_some(p)
}

impl SmtSolver {
    /// Locate a solver, trying each route once per process.
    pub fn discover() -> Result<SmtSolver> {
        let cached = CACHE.get_or_init(|| {
            let mut attempts: Vec<String> = Vec::new();

            if let Ok(envpath) = std::env::var("VERIQC_Z3") {
                let p = PathBuf::from(&envpath);
                if runs(&p, "--version") {
                    return Ok(SmtSolver {
                        route: Route::Binary { path: p, style: BinStyle::Z3 },
                    });
                }
                attempts.push(format!("VERIQC_Z3={envpath} did not run"));
            } else {
                attempts.push("VERIQC_Z3 unset".into());
            }

            if let Some(p) = on_path("z3") {
                return Ok(SmtSolver { route: Route::Binary { path: p, style: BinStyle::Z3 } });
            }
            attempts.push("no z3 on PATH".into());

            if let Some(p) = on_path("cvc5") {
                return Ok(SmtSolver {
                    route: Route::Binary { path: p, style: BinStyle::Cvc5 },
                });
            }
            attempts.push("no cvc5 on PATH".into());

            match on_path("node") {
                Some(node) => match provision_node_toolchain() {
                    Ok(shim) => return Ok(SmtSolver { route: Route::Node { node, shim } }),
                    Err(e) => attempts.push(format!("node toolchain provisioning failed: {e}")),
                },
                None => attempts.push("no node on PATH".into()),
            }

            Err(attempts.join("; "))
        });
        cached
            .clone()
            .map_err(|msg| Error::SolverUnavailable { msg })
    }

    /// Human-readable description of the discovered route.
    pub fn describe(&self) -> String {
        match &self.route {
            Route::Binary { path, style } => format!(
                "{} binary at {}",
                match style {
                    BinStyle::Z3 => "z3",
                    BinStyle::Cvc5 => "cvc5",
                },
                path.display()
            ),
            Route::Node { shim, .. } => {
                format!("z3 wasm via node ({})", shim.display())
            }
        }
    }

    // ----------------------------------------------------------------
    // Checking
    // ----------------------------------------------------------------

    /// Check one script.
    pub fn check(&self, script: &str, timeout_ms: u64) -> Result<SmtOutcome> {
        Ok(self
            .check_batch_mode(std::slice::from_ref(&script.to_string()), timeout_ms, false)?
            .into_iter()
            .next()
            .expect("one outcome per script"))
    }

    /// Check many scripts; the node route amortizes WebAssembly startup
    /// across the whole batch.
    pub fn check_batch(&self, scripts: &[String], timeout_ms: u64) -> Result<Vec<SmtOutcome>> {
        self.check_batch_mode(scripts, timeout_ms, false)
    }

    fn check_batch_mode(
        &self,
        scripts: &[String],
        timeout_ms: u64,
        model_find: bool,
    ) -> Result<Vec<SmtOutcome>> {
        if scripts.is_empty() {
            return Ok(Vec::new());
        }
        // The z3 routes take the model-finding config as script text,
        // cvc5 as a command-line flag.
        let z3_flavored = !matches!(
            self.route,
            Route::Binary { style: BinStyle::Cvc5, .. }
        );
        let dir = tempfile::tempdir()?;
        let mut files = Vec::with_capacity(scripts.len());
        for (i, s) in scripts.iter().enumerate() {
            let path = dir.path().join(format!("goal_{i}.smt2"));
            if model_find && z3_flavored {
                std::fs::write(&path, z3_model_finding_script(s))?;
            } else {
                std::fs::write(&path, s)?;
            }
            files.push(path);
        }
        match &self.route {
            Route::Binary { path, style } => files
                .iter()
                .map(|f| run_binary(path, *style, f, timeout_ms, model_find))
                .collect(),
            Route::Node { node, shim } => run_node_batch(node, shim, &files, timeout_ms),
        }
    }

    /// Check a script expected to be satisfiable. If the plain run is
    /// inconclusive (quantifier instantiation can diverge on sat
    /// problems), retry under finite-domain closure axioms of increasing
    /// size with the solver switched into model-finding mode, trusting
    /// only `sat` answers from the closed runs.
    pub fn check_with_closure(&self, script: &str, timeout_ms: u64) -> Result<SmtOutcome> {
        let plain = self.check(script, timeout_ms)?;
        if plain != SmtOutcome::Unsat && !matches!(plain, SmtOutcome::Sat) {
            for k in 2..=4 {
                let closed = add_domain_closure(script, k);
                let outcome = self
                    .check_batch_mode(&[closed], timeout_ms, true)?
                    .into_iter()
                    .next()
                    .expect("one outcome per script");
                if let SmtOutcome::Sat = outcome {
                    return Ok(SmtOutcome::Sat);
                }
            }
        }
        Ok(plain)
    }
}

/// Rewrite a script for a model-finding attempt on the z3 routes.
///
/// E-matching instantiates permutative equations (the commuting-CX rules)
/// without bound, so it cannot answer `sat` and can even exhaust the
/// WebAssembly build's memory. With E-matching off and MBQI on, and the
/// fixed logic dropped so the option takes effect, z3 decides the
/// finite-domain-closed scripts immediately. cvc5 reaches the same mode
/// through `--finite-model-find` instead; its scripts pass through.
fn z3_model_finding_script(script: &str) -> String {
    let mut out = String::with_capacity(script.len() + 64);
    out.push_str("(set-option :smt.ematching false)\n(set-option :smt.mbqi true)\n");
    for line in script.lines() {
        if line.trim_start().starts_with("(set-logic") {
            continue;
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Insert `k` domain constants and a closure axiom before `(check-sat)`.
fn add_domain_closure(script: &str, k: usize) -> String {
    let mut decls = String::new();
    for i in 0..k {
        decls.push_str(&format!("(declare-const dc{i} Q)\n"));
    }
    let eqs: Vec<String> = (0..k).map(|i| format!("(= x dc{i})")).collect();
    decls.push_str(&format!(
        "(assert (forall ((x Q)) (or {})))\n",
        eqs.join(" ")
    ));
    match script.rfind("(check-sat)") {
        Some(pos) => format!("{}{}{}", &script[..pos], decls, &script[pos..]),
        None => format!("{script}\n{decls}(check-sat)\n"),
    }
}

// ====================================================================
// Binary route
// ====================================================================

fn run_binary(
    path: &Path,
    style: BinStyle,
    file: &Path,
    timeout_ms: u64,
    model_find: bool,
) -> Result<SmtOutcome> {
    let mut cmd = Command::new(path);
    match style {
        BinStyle::Z3 => {
            cmd.arg("-smt2").arg(format!("-t:{timeout_ms}"));
        }
        BinStyle::Cvc5 => {
            cmd.arg("--lang").arg("smt2").arg(format!("--tlimit={timeout_ms}"));
            if model_find {
                cmd.arg("--finite-model-find");
            }
        }
    }
    cmd.arg(file);
    let out = wait_with_deadline(cmd, Duration::from_millis(timeout_ms * 2 + 30_000))?;
    Ok(SmtOutcome::parse(&out))
}

// ====================================================================
// Node / WebAssembly route
// ====================================================================

/// The shim feeds script files through the official Z3 WebAssembly build.
/// Kept dependency-free beyond the z3-solver npm package itself.
const SHIM_SOURCE: &str = r#"// Feeds SMT-LIB files through the z3-solver WebAssembly build.
// Usage: node shim.mjs <timeout_ms> <file...>
// Prints one "RESULT <index> <verdict...>" line per file.
import { createRequire } from 'module';
import { readFileSync } from 'fs';
const require = createRequire(import.meta.url);
const { init } = require('z3-solver');

const timeoutMs = parseInt(process.argv[2], 10) || 0;
const files = process.argv.slice(3);
const { Z3 } = await init();
if (timeoutMs > 0) {
  Z3.global_param_set('timeout', String(timeoutMs));
}
for (let i = 0; i < files.length; i++) {
  let verdict;
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);
  try {
    const script = readFileSync(files[i], 'utf8');
    const out = await Z3.eval_smtlib2_string(ctx, script);
    const toks = out.trim().split(/\s+/);
    if (toks.includes('unsat')) verdict = 'unsat';
    else if (toks.includes('sat')) verdict = 'sat';
    else verdict = 'unknown ' + out.trim().replace(/\n/g, ' ');
  } catch (e) {
    verdict = 'unknown error ' + String(e).replace(/\n/g, ' ');
  } finally {
    Z3.del_context(ctx);
  }
  console.log(`RESULT ${i} ${verdict}`);
}
// The wasm build keeps worker threads alive; exit explicitly.
process.exit(0);
"#;

fn toolchain_dir() -> PathBuf {
    if let Ok(d) = std::env::var("VERIQC_SMT_DIR") {
        return PathBuf::from(d);
    }
    // Prefer the build tree when running from a workspace checkout.
    let target = Path::new("target");
    if target.is_dir() {
        return target.join("smt-toolchain");
    }
    std::env::temp_dir().join("veriqc-smt-toolchain")
}

/// Marker content identifying the shim revision, so a toolchain left
/// behind by an older build gets refreshed instead of trusted.
fn ready_stamp() -> String {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    SHIM_SOURCE.hash(&mut h);
    format!("shim-{:016x}\n", h.finish())
}

fn toolchain_ready(ready: &Path, module: &Path, shim: &Path) -> bool {
    module.exists()
        && shim.exists()
        && std::fs::read_to_string(ready).map(|s| s == ready_stamp()).unwrap_or(false)
}

/// Install the z3-solver npm package and the shim, once, with a lock file
/// guarding against concurrent provisioners.
fn provision_node_toolchain() -> Result<PathBuf> {
    let dir = toolchain_dir();
    let shim = dir.join("shim.mjs");
    let ready = dir.join(".ready");
    let module = dir.join("node_modules").join("z3-solver");
    if toolchain_ready(&ready, &module, &shim) {
        return Ok(shim);
    }
    std::fs::create_dir_all(&dir)?;
    let lock = dir.join(".lock");
    let started = Instant::now();
    loop {
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                let result = install_toolchain(&dir, &shim, &ready);
                let _ = std::fs::remove_file(&lock);
                return result.map(|_| shim);
            }
            Err(_) => {
                // Someone else is provisioning; wait for them.
                if toolchain_ready(&ready, &module, &shim) {
                    return Ok(shim);
                }
                if started.elapsed() > Duration::from_secs(120) {
                    // Stale lock from a dead process; take over.
                    let _ = std::fs::remove_file(&lock);
                }
                if started.elapsed() > Duration::from_secs(600) {
                    return Err(Error::SolverUnavailable {
                        msg: "timed out waiting for another process to provision the \
                              node smt toolchain"
                            .into(),
                    });
                }
                std::thread::sleep(Duration::from_millis(250));
            }
        }
    }
}

fn install_toolchain(dir: &Path, shim: &Path, ready: &Path) -> Result<()> {
    let pkg = dir.join("package.json");
    if !pkg.exists() {
        std::fs::write(&pkg, "{\"private\": true}\n")?;
    }
    let module = dir.join("node_modules").join("z3-solver");
    if !module.exists() {
        let mut cmd = Command::new("npm");
        cmd.arg("install")
            .arg("z3-solver")
            .arg("--no-audit")
            .arg("--no-fund")
            .arg("--prefix")
            .arg(dir);
        let output = wait_with_deadline(cmd, Duration::from_secs(420))?;
        if !module.exists() {
            return Err(Error::SolverUnavailable {
                msg: format!("npm install z3-solver did not produce the module: {output}"),
            });
        }
    }
    std::fs::write(shim, SHIM_SOURCE)?;
    std::fs::write(ready, ready_stamp())?;
    Ok(())
}

fn run_node_batch(
    node: &Path,
    shim: &Path,
    files: &[PathBuf],
    timeout_ms: u64,
) -> Result<Vec<SmtOutcome>> {
    let mut cmd = Command::new(node);
    cmd.arg(shim).arg(timeout_ms.to_string());
    for f in files {
        cmd.arg(f);
    }
    // Startup plus per-script budget, generously padded: killing the
    // process mid-batch loses every remaining verdict.
    let deadline = Duration::from_millis(90_000 + timeout_ms.saturating_mul(files.len() as u64 + 1));
    let stdout = wait_with_deadline(cmd, deadline)?;

    let mut outcomes = vec![SmtOutcome::Unknown("no output".into()); files.len()];
    for line in stdout.lines() {
        let mut parts = line.splitn(3, ' ');
        if parts.next() != Some("RESULT") {
            continue;
        }
        let Some(Ok(idx)) = parts.next().map(str::parse::<usize>) else {
            continue;
        };
        if idx < outcomes.len() {
            outcomes[idx] = SmtOutcome::parse(parts.next().unwrap_or(""));
        }
    }
    Ok(outcomes)
}

/// Run a command, killing it if the deadline passes; returns combined
/// stdout regardless of exit status (solvers signal results textually).
fn wait_with_deadline(mut cmd: Command, deadline: Duration) -> Result<String> {
    cmd.stdout(std::process::Stdio::piped());
    cmd.stderr(std::process::Stdio::piped());
    let start = Instant::now();
    let mut child = cmd.spawn()?;
    loop {
        if let Some(_status) = child.try_wait()? {
            let mut out = String::new();
            if let Some(mut s) = child.stdout.take() {
                use std::io::Read;
                let _ = s.read_to_string(&mut out);
            }
            if let Some(mut e) = child.stderr.take() {
                use std::io::Read;
                let mut err = String::new();
                let _ = e.read_to_string(&mut err);
                if !err.trim().is_empty() {
                    out.push('\n');
                    out.push_str(&err);
                }
            }
            return Ok(out);
        }
        if start.elapsed() > deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Ok("unknown process-deadline-exceeded".to_string());
        }
        std::thread::sleep(Duration::from_millis(40));
    }
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_parsing_tokenizes() {
        assert_eq!(SmtOutcome::parse("unsat\n"), SmtOutcome::Unsat);
        assert_eq!(SmtOutcome::parse("sat"), SmtOutcome::Sat);
        // "unsat" must not be found inside other text, nor "sat" inside
        // "unsat".
        assert!(matches!(
            SmtOutcome::parse("unsatisfactory"),
            SmtOutcome::Unknown(_)
        ));
        assert_eq!(SmtOutcome::parse("blah\nunsat"), SmtOutcome::Unsat);
    }

    #[test]
    fn model_finding_rewrite_swaps_engines() {
        let script = "(set-logic UFLRA)\n(declare-sort Q 0)\n(check-sat)\n";
        let out = z3_model_finding_script(script);
        assert!(out.starts_with("(set-option :smt.ematching false)"));
        assert!(out.contains(":smt.mbqi true"));
        assert!(!out.contains("set-logic"));
        assert!(out.contains("(declare-sort Q 0)"));
    }

    #[test]
    fn closure_axioms_precede_check_sat() {
        let script = "(set-logic UFLRA)\n(declare-sort Q 0)\n(check-sat)\n";
        let closed = add_domain_closure(script, 2);
        let closure_pos = closed.find("(assert (forall ((x Q))").unwrap();
        let check_pos = closed.find("(check-sat)").unwrap();
        assert!(closure_pos < check_pos);
        assert!(closed.contains("dc0"));
        assert!(closed.contains("dc1"));
    }

    /// End-to-end smoke test against whatever solver the environment
    /// offers. Skips (with a note) when none is reachable; the acceptance
    /// suite enforces availability separately.
    #[test]
    fn trivial_sat_and_unsat_roundtrip() {
        let solver = match SmtSolver::discover() {
            Ok(s) => s,
            Err(e) => {
                eprintln!("skipping solver smoke test: {e}");
                return;
            }
        };
        let sat = "(set-logic UFLRA)\n(declare-const x Real)\n(assert (= x 0.5))\n(check-sat)\n";
        let unsat = "(set-logic UFLRA)\n(assert false)\n(check-sat)\n";
        let outcomes = solver
            .check_batch(&[sat.to_string(), unsat.to_string()], 10_000)
            .unwrap();
        assert_eq!(outcomes[0], SmtOutcome::Sat, "via {}", solver.describe());
        assert_eq!(outcomes[1], SmtOutcome::Unsat, "via {}", solver.describe());
    }
}
