//! Command-line front end. [`run`] takes its streams as arguments so the
//! whole binary can be driven from tests.
//!
//! Exit codes: 0 success, 1 parse/validation/I-O/usage error, 2 nonlinear
//! clause, 3 unsupported sort or logic, 4 the equivalence check found a
//! discrepancy, 5 an oracle budget was exceeded.

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::horn::HornError;
use crate::oracle::{check_equivalence, Domain, Limits, OracleError};
use crate::script::ScriptError;
use crate::sexpr::line_col;
use crate::translate::{simplify_inline, translate_system, TransitionSystem};
use crate::vmt::{emit_bmc, emit_vmt};
use crate::{load_system, random, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NONLINEAR: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_DISCREPANCY: i32 = 4;
pub const EXIT_BUDGET: i32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Emit the VMT transition system.
    Translate,
    /// Compare Horn derivability with transition-system reachability.
    Check,
    /// Emit a bounded model checking script unrolled `--k` times.
    Bmc,
    /// Print size statistics as `key=value` lines.
    Stats,
}

/// Translate linear CHC systems (SMT-LIB HORN) into VMT transition systems.
#[derive(Debug, Parser)]
#[command(name = "chc2vmt", version)]
pub struct RunConfig {
    pub command: Command,
    /// Input file; `-` or absent reads standard input.
    pub input: Option<PathBuf>,
    /// Write output here instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Inline inputs pinned to place variables.
    #[arg(long)]
    pub simplify: bool,
    /// Integer domain for `check`, as LO:HI.
    #[arg(long, value_parser = parse_domain, default_value = "-8:8", allow_hyphen_values = true)]
    pub domain: Domain,
    /// Derivation depth and exploration steps for `check`.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Unrolling depth for `bmc`.
    #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
    pub k: i64,
    /// Check N generated systems instead of reading input.
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
    /// Seed for --random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = Limits::default().max_facts)]
    pub max_facts: usize,
    #[arg(long, default_value_t = Limits::default().max_states)]
    pub max_states: usize,
    /// Use this declared 0-ary relation as the query instead of a fresh one.
    #[arg(long, value_name = "NAME")]
    pub query: Option<String>,
    /// Remove frame conjunct I of disjunct D before checking (testing aid).
    #[arg(long, value_name = "D:I", value_parser = parse_pair, hide = true)]
    pub drop_frame: Option<(usize, usize)>,
}

fn parse_domain(s: &str) -> Result<Domain, String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Domain::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected D:I")?;
    Ok((a.parse().map_err(|e| format!("{e}"))?, b.parse().map_err(|e| format!("{e}"))?))
}

/// Failure of a CLI run: exit code plus the message for standard error.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Horn(HornError::NonlinearClause { .. }) => EXIT_NONLINEAR,
        Error::Horn(HornError::Script(
            ScriptError::UnsupportedSort { .. }
            | ScriptError::UnsupportedLogic { .. }
            | ScriptError::MissingLogic,
        )) => EXIT_UNSUPPORTED,
        _ => EXIT_ERROR,
    }
}

fn describe(e: &Error, file: &str, source: &str) -> String {
    let at = |span: Option<crate::sexpr::Span>| match span {
        Some(s) => {
            let (l, c) = line_col(source, s.start);
            format!("{file}:{l}:{c}")
        }
        None => file.to_string(),
    };
    if let Error::Horn(HornError::Invalid(ds)) = e {
        return ds.iter().map(|d| format!("{}: {d}", at(d.span))).collect::<Vec<_>>().join("\nerror: ");
    }
    format!("{}: {e}", at(e.span()))
}

fn oracle_failure(e: OracleError) -> Failure {
    match e {
        OracleError::BudgetExceeded { .. } => Failure::new(EXIT_BUDGET, e.to_string()),
        e => Failure::new(EXIT_ERROR, e.to_string()),
    }
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run(
    args: impl IntoIterator<Item = impl Into<std::ffi::OsString> + Clone>,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cfg, stdin) {
        Ok((text, code)) => {
            if let Err(e) = deliver(&cfg, &text, stdout) {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_ERROR;
            }
            code
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn deliver(cfg: &RunConfig, text: &str, stdout: &mut dyn Write) -> Result<(), String> {
    match &cfg.output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn read_input(cfg: &RunConfig, stdin: &mut dyn Read) -> Result<(String, String), Failure> {
    match &cfg.input {
        Some(p) if p.as_os_str() != "-" => {
            let name = p.display().to_string();
            let text = fs::read_to_string(p).map_err(|e| Failure::new(EXIT_ERROR, format!("{name}: {e}")))?;
            Ok((name, text))
        }
        _ => {
            let mut text = String::new();
            stdin.read_to_string(&mut text).map_err(|e| Failure::new(EXIT_ERROR, format!("<stdin>: {e}")))?;
            Ok(("<stdin>".into(), text))
        }
    }
}

fn execute(cfg: &RunConfig, stdin: &mut dyn Read) -> Result<(String, i32), Failure> {
    if let Some(n) = cfg.random {
        if cfg.command != Command::Check {
            return Err(Failure::new(EXIT_ERROR, "--random is only supported with `check`"));
        }
        return check_random(cfg, n);
    }
    let (file, source) = read_input(cfg, stdin)?;
    let sys = load_system(&source, cfg.query.as_deref())
        .map_err(|e| Failure::new(exit_code(&e), describe(&e, &file, &source)))?;
    let mut ts = translate_system(&sys);
    if cfg.simplify {
        ts = simplify_inline(&ts);
    }
    match cfg.command {
        Command::Translate => Ok((emit_vmt(&ts), EXIT_OK)),
        Command::Bmc => {
            emit_bmc(&ts, cfg.k).map(|t| (t, EXIT_OK)).map_err(|e| Failure::new(EXIT_ERROR, e.to_string()))
        }
        Command::Stats => {
            let text = format!(
                "relations={}\nsum_arity={}\nclauses={}\nstate_vars={}\ninputs={}\ndisjuncts={}\n",
                sys.relations.len(),
                sys.sum_arity(),
                sys.clauses.len(),
                ts.state_vars().len(),
                ts.input_vars().len(),
                ts.disjuncts.len(),
            );
            Ok((text, EXIT_OK))
        }
        Command::Check => {
            if let Some((d, i)) = cfg.drop_frame {
                ts = drop_frame_conjunct(&ts, d, i).ok_or_else(|| {
                    Failure::new(EXIT_ERROR, format!("no frame conjunct {i} in disjunct {d}"))
                })?;
            }
            let report =
                check_equivalence(&sys, &ts, &cfg.domain, cfg.depth, limits(cfg)).map_err(oracle_failure)?;
            let code = if report.is_equivalent() { EXIT_OK } else { EXIT_DISCREPANCY };
            Ok((report.render(), code))
        }
    }
}

fn limits(cfg: &RunConfig) -> Limits {
    Limits { max_facts: cfg.max_facts, max_states: cfg.max_states }
}

/// Copy of `ts` without the `i`-th frame conjunct of disjunct `d`.
pub fn drop_frame_conjunct(ts: &TransitionSystem, d: usize, i: usize) -> Option<TransitionSystem> {
    let mut out = ts.clone();
    let disjunct = out.disjuncts.get_mut(d)?;
    let mut kept: Vec<_> = disjunct.frame.conjuncts().into_iter().cloned().collect();
    if i >= kept.len() {
        return None;
    }
    kept.remove(i);
    disjunct.frame = crate::term::Term::conj(kept);
    Some(out)
}

fn check_random(cfg: &RunConfig, n: usize) -> Result<(String, i32), Failure> {
    let (dom, depth) = (cfg.domain, cfg.depth);
    let mut out = String::new();
    let mut failures = 0;
    for (i, text) in random::random_systems(cfg.seed, n).enumerate() {
        let sys = load_system(&text, None).map_err(|e| {
            Failure::new(
                EXIT_ERROR,
                format!("generated system {i}: {}\n{text}", describe(&e, "<generated>", &text)),
            )
        })?;
        let ts = translate_system(&sys);
        let variants = [("plain", ts.clone()), ("simplified", simplify_inline(&ts))];
        for (label, ts) in &variants {
            let report = check_equivalence(&sys, ts, &dom, depth, limits(cfg)).map_err(|e| {
                Failure::new(oracle_failure(e.clone()).code, format!("system {i} ({label}): {e}"))
            })?;
            if report.is_equivalent() {
                continue;
            }
            failures += 1;
            out.push_str(&format!("system {i} ({label}): NOT equivalent\n{text}{}", report.render()));
        }
    }
    out.push_str(&format!(
        "checked {n} systems (seed {}, domain [{}, {}], depth {depth}): {failures} failures\n",
        cfg.seed,
        dom.lo(),
        dom.hi()
    ));
    Ok((out, if failures == 0 { EXIT_OK } else { EXIT_DISCREPANCY }))
}
