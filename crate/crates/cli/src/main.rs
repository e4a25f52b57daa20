//! `conifold`: command-line front end for the blowup-family verifier.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 numerical or
//! internal error, 4 oracle inconclusive. When a run both fails a check and
//! has an inconclusive oracle, the failure wins.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conifold_core::oracle::{OracleConfig, SearchStatus};
use conifold_core::polyroots::Precision;
use conifold_core::report::{self, RunConfig, SweepReport, VerificationReport};
use conifold_core::verifier::{verify_case_inequalities, CaseReport};
use conifold_core::{Error, FamilyParams};

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "conifold", version, about = "Verify the conifold conditions for blowups of P^n along P^r")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pipeline for one family: roots, conditions, bounds, case inequality.
    Verify(FamilyCmd),
    /// Run every family in an (m, k) box.
    Sweep(SweepCmd),
    /// Dump the certified roots of u with their critical values.
    Roots(FamilyCmd),
    /// Compare against the multistart oracle on the full mirror.
    Oracle(FamilyCmd),
    /// Evaluate the case inequality for one family.
    Cases(FamilyCmd),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Structured,
    Tabular,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PrecisionMode {
    Double,
    Extended,
}

#[derive(Args, Debug)]
struct Selector {
    #[arg(long, allow_hyphen_values = true)]
    n: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<i64>,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    circle_tol: Option<f64>,
    #[arg(long)]
    match_tol: Option<f64>,
    #[arg(long)]
    slack_tol: Option<f64>,
    /// Root residual bound, relative to the coefficient 1-norm.
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    disagreement_tol: Option<f64>,
    #[arg(long, value_enum, default_value = "double")]
    precision: PrecisionMode,
    #[arg(long, default_value_t = 128)]
    mantissa_bits: usize,
    /// Enable the multistart oracle (always on for the `oracle` subcommand).
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path. Relative paths resolve against the output directory when one is set.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, env = "CONIFOLD_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "structured")]
    format: Format,
    /// Record stage timings in the report.
    #[arg(long)]
    timings: bool,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug)]
struct FamilyCmd {
    #[command(flatten)]
    selector: Selector,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SweepCmd {
    /// Inclusive range such as `1..10`, or a single value.
    #[arg(long, default_value = "1..10", value_parser = parse_range)]
    m: (u32, u32),
    #[arg(long, default_value = "1..10", value_parser = parse_range)]
    k: (u32, u32),
    /// Only evaluate the case inequalities.
    #[arg(long)]
    cases_only: bool,
    #[command(flatten)]
    common: Common,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad bound {t:?}: {e}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            Ok((parse(a)?, parse(b)?))
        }
        None => {
            let v = parse(s)?;
            Ok((v, v))
        }
    }
}

/// A failed run, carrying the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::of(&e)
    }
}

impl Failure {
    fn of(e: &Error) -> Self {
        let cause = e.root_cause();
        let code = match cause {
            Error::Domain(_) | Error::Config(_) => EXIT_USAGE,
            Error::OracleInconclusive { .. } => EXIT_INCONCLUSIVE,
            _ if e.is_verification_failure() => EXIT_FAIL,
            _ => EXIT_NUMERICAL,
        };
        let message = match e.stage() {
            Some(stage) => format!("error[{stage}]: {cause}"),
            None => format!("error: {cause}"),
        };
        Failure { code, message }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: format!("error: {}", message.into()),
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(c) => cmd_verify(&c, false),
        Command::Oracle(c) => cmd_verify(&c, true),
        Command::Roots(c) => cmd_roots(&c),
        Command::Cases(c) => cmd_cases(&c),
        Command::Sweep(c) => cmd_sweep(&c),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn resolve_params(s: &Selector) -> Result<FamilyParams, Failure> {
    let params = match (s.n, s.r, s.m, s.k) {
        (Some(n), Some(r), None, None) => FamilyParams::from_nr(n, r),
        (None, None, Some(m), Some(k)) => FamilyParams::from_mk(m, k),
        _ => return Err(usage("give exactly one of --n/--r or --m/--k")),
    };
    params.map_err(Failure::from)
}

fn run_config(c: &Common, with_oracle: bool) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    let t = &mut cfg.tolerances;
    for (dst, src) in [
        (&mut t.circle_tol, c.circle_tol),
        (&mut t.match_tol, c.match_tol),
        (&mut t.slack_tol, c.slack_tol),
        (&mut cfg.roots.residual_tol, c.residual_tol),
        (&mut cfg.roots.disagreement_tol, c.disagreement_tol),
    ] {
        if let Some(v) = src {
            if !(v.is_finite() && v > 0.0) {
                return Err(usage(format!("tolerance must be positive and finite, got {v}")));
            }
            *dst = v;
        }
    }
    cfg.roots.precision = match c.precision {
        PrecisionMode::Double => Precision::Double,
        PrecisionMode::Extended => {
            if c.mantissa_bits < 64 {
                return Err(usage("--mantissa-bits must be at least 64"));
            }
            Precision::Extended {
                mantissa_bits: c.mantissa_bits,
            }
        }
    };
    if with_oracle || c.oracle {
        let mut o = OracleConfig::default();
        if let Some(s) = c.starts {
            o.num_starts = s;
        }
        if let Some(s) = c.seed {
            o.seed = s;
        }
        cfg.oracle = Some(o);
    } else if c.starts.is_some() {
        return Err(usage("--starts needs --oracle"));
    }
    cfg.record_timings = c.timings;
    Ok(cfg)
}

fn output_path(c: &Common, default_name: &str) -> Option<PathBuf> {
    match (&c.output, &c.out_dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join(default_name)),
        (None, None) => None,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::from(Error::Io(e)))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::from(Error::Io(e)))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn family_line(p: &FamilyParams) -> String {
    format!(
        "family n={} r={} m={} k={} rho={} deg_u={}",
        p.n,
        p.r,
        p.m,
        p.k,
        p.rho,
        p.degree()
    )
}

fn pass_word(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn report_code(report: &VerificationReport) -> u8 {
    if !report.conditions.all_pass() || !report.case_report.pass {
        EXIT_FAIL
    } else if report.oracle_inconclusive() {
        EXIT_INCONCLUSIVE
    } else if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn print_case(case: &CaseReport) {
    println!(
        "case {} lhs {:.12} threshold {} {}",
        case.case_id,
        case.lhs_value,
        case.threshold,
        pass_word(case.pass)
    );
    if let Some(mi) = &case.minorant {
        println!("case_minorant {:.12} threshold {} {}", mi.value, mi.threshold, pass_word(mi.pass));
    }
    if let Some(aux) = &case.auxiliary {
        println!("case_iv r_minus {:.12} r0 {:.12} v(r0) {:.12}", aux.r_minus, aux.r0, aux.v_at_r0);
    }
}

fn print_oracle(report: &VerificationReport) {
    let Some(o) = &report.oracle else { return };
    let status = match o.status {
        SearchStatus::Complete => "complete",
        SearchStatus::Shortfall => "shortfall",
        SearchStatus::Excess => "excess",
    };
    println!(
        "oracle seed {} starts {} converged {} clusters {} expected {} status {}",
        o.seed, o.num_starts, o.converged_starts, o.clusters_found, o.expected, status
    );
    if let (Some(d), Some(tol)) = (o.max_pair_distance, o.match_tolerance) {
        println!(
            "oracle_match {}<->{} max_distance {:.3e} tolerance {:.3e}",
            o.clusters_found, o.expected, d, tol
        );
    }
    println!(
        "oracle_checks gradient_fd {:.3e} hessian_fd {:.3e} hessian_symmetric {} det_at_conifold {:.6e}",
        o.gradient_fd_error, o.hessian_fd_error, o.hessian_symmetric, o.hessian_det_at_conifold
    );
    println!("oracle {}", if o.pass { "pass" } else if o.status == SearchStatus::Shortfall { "INCONCLUSIVE" } else { "FAIL" });
}

fn cmd_verify(c: &FamilyCmd, oracle_cmd: bool) -> CmdResult {
    let p = resolve_params(&c.selector)?;
    let cfg = run_config(&c.common, oracle_cmd)?;
    if let Some(o) = &cfg.oracle {
        o.validate(&p)?;
    }
    let report = report::run_family(&p, &cfg)?;
    let cond = &report.conditions;

    println!("{}", family_line(&p));
    if !oracle_cmd || c.common.verbose > 0 {
        println!("r_plus {:.15}", report.r_plus);
        println!("t_con {:.15}", report.t_con);
        println!("r0 {:.15}", report.r0);
        println!(
            "roots {} square_free {} method {:?}",
            report.roots.len(),
            report.square_free.is_square_free(),
            report.root_method
        );
        println!(
            "circle {} on |x| = r_plus, predicted rho = {}",
            cond.circle_count, cond.predicted_circle_count
        );
        for row in report.roots.iter().filter(|r| r.on_circle) {
            let d = row.d.map_or("-".to_string(), |d| d.to_string());
            let label = if row.re < 0.0 && row.im.abs() < 1e-12 {
                " (-r_plus)"
            } else if row.re > 0.0 && row.im.abs() < 1e-12 {
                " (r_plus)"
            } else {
                ""
            };
            println!("equality_root d={d} alpha={:.12}{:+.12}i{label}", row.re, row.im);
        }
        if c.common.verbose > 0 {
            for row in &report.roots {
                println!(
                    "root {:.15}{:+.15}i modulus {:.15} residual {:.3e} g {:.12}{:+.12}i",
                    row.re, row.im, row.modulus, row.residual, row.g_re, row.g_im
                );
            }
            let l = &report.lemma_margins;
            println!(
                "lemma lower {:.3e} upper {:.6e} envelope_excess {:.6e} identity_gap {:.3e}",
                l.lower, l.upper, l.envelope_excess, l.identity_gap
            );
        }
        println!(
            "condition1 {} margin {:.6e} off_circle_margin {:.6e}",
            pass_word(cond.cond1_pass),
            cond.cond1_margin,
            cond.off_circle_margin
        );
        println!("condition2 {}", pass_word(cond.cond2_pass));
        println!("condition3 {}", pass_word(cond.cond3_pass));
        println!("circle_law {}", pass_word(cond.circle_law_pass));
        println!("conditions {}/3", cond.passed_count());
        print_case(&report.case_report);
        for d in &cond.diagnostics {
            println!("diagnostic {d}");
        }
    }
    print_oracle(&report);
    if let Some(t) = &report.timings {
        for (stage, ms) in t {
            println!("timing {stage} {ms:.3} ms");
        }
    }

    let code = report_code(&report);
    println!(
        "result {}",
        match code {
            EXIT_PASS => "PASS",
            EXIT_INCONCLUSIVE => "INCONCLUSIVE",
            _ => "FAIL",
        }
    );

    let stem = format!("{}_n{}_r{}", if oracle_cmd { "oracle" } else { "verify" }, p.n, p.r);
    match c.common.format {
        Format::Structured => {
            if let Some(path) = output_path(&c.common, &format!("{stem}.json")) {
                write_file(&path, &report::serialize(&report)?)?;
            }
        }
        Format::Tabular => {
            if let Some(path) = output_path(&c.common, &format!("{stem}.csv")) {
                write_file(&path, report.roots_csv().as_bytes())?;
            }
        }
    }
    Ok(code)
}

fn cmd_roots(c: &FamilyCmd) -> CmdResult {
    let p = resolve_params(&c.selector)?;
    let mut cfg = run_config(&c.common, false)?;
    cfg.oracle = None;
    let report = report::run_family(&p, &cfg)?;
    let body = match c.common.format {
        Format::Tabular => report.roots_csv().into_bytes(),
        Format::Structured => report::serialize(&report.roots)?,
    };
    let ext = if c.common.format == Format::Tabular { "csv" } else { "json" };
    match output_path(&c.common, &format!("roots_n{}_r{}.{ext}", p.n, p.r)) {
        Some(path) => {
            println!("{}", family_line(&p));
            write_file(&path, &body)?;
        }
        None => print!("{}", String::from_utf8_lossy(&body)),
    }
    Ok(EXIT_PASS)
}

fn cmd_cases(c: &FamilyCmd) -> CmdResult {
    let p = resolve_params(&c.selector)?;
    let case = verify_case_inequalities(&p);
    println!("{}", family_line(&p));
    print_case(&case);
    if let Some(path) = output_path(&c.common, &format!("cases_n{}_r{}.json", p.n, p.r)) {
        write_file(&path, &report::serialize(&case)?)?;
    }
    Ok(if case.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_sweep(c: &SweepCmd) -> CmdResult {
    let (m_lo, m_hi) = c.m;
    let (k_lo, k_hi) = c.k;
    if m_lo > m_hi || k_lo > k_hi {
        return Err(usage(format!("empty sweep range m in {m_lo}..{m_hi}, k in {k_lo}..{k_hi}")));
    }
    if c.cases_only {
        return sweep_cases(c);
    }
    let cfg = run_config(&c.common, false)?;
    if let Some(o) = &cfg.oracle {
        let worst = FamilyParams::from_mk(i64::from(m_hi), i64::from(k_hi))?;
        o.validate(&worst)?;
    }
    let outcome = report::run_sweep(m_lo..=m_hi, k_lo..=k_hi, &cfg)?;
    let sweep = &outcome.report;
    print_matrix(sweep);
    for f in &sweep.failures {
        let stage = f.stage.map_or("-".to_string(), |s| s.to_string());
        println!("failure m={} k={} stage={stage} {}", f.m, f.k, f.message);
    }
    if c.common.verbose > 0 {
        for e in &sweep.entries {
            println!(
                "entry m={} k={} n={} r={} rho={} t_con {} circle {} case {} {}",
                e.m,
                e.k,
                e.n,
                e.r,
                e.rho,
                e.t_con.map_or("-".into(), |t| format!("{t:.12}")),
                e.circle_count.map_or("-".into(), |n| n.to_string()),
                e.case_id.map_or("-".into(), |id| id.to_string()),
                pass_word(e.passed)
            );
        }
    }
    let total = sweep.entries.len();
    println!("passed {}/{}", sweep.totals.passed, total);

    let stem = format!("sweep_m{m_lo}-{m_hi}_k{k_lo}-{k_hi}");
    match c.common.format {
        Format::Structured => {
            if let Some(path) = output_path(&c.common, &format!("{stem}.json")) {
                write_file(&path, &report::serialize(sweep)?)?;
            }
        }
        Format::Tabular => {
            if let Some(path) = output_path(&c.common, &format!("{stem}.csv")) {
                write_file(&path, sweep_csv(sweep).as_bytes())?;
            }
        }
    }

    let hard_error = outcome
        .families
        .iter()
        .filter_map(|r| r.as_ref().err())
        .map(Failure::of)
        .find(|f| f.code != EXIT_FAIL);
    if let Some(f) = hard_error {
        eprintln!("{}", f.message);
        return Ok(f.code);
    }
    if sweep.totals.failed > 0 {
        return Ok(EXIT_FAIL);
    }
    let inconclusive = outcome
        .families
        .iter()
        .any(|r| r.as_ref().is_ok_and(|rep| rep.oracle_inconclusive()));
    Ok(if inconclusive { EXIT_INCONCLUSIVE } else { EXIT_PASS })
}

fn print_matrix(sweep: &SweepReport) {
    let (k_lo, k_hi) = sweep.k_range;
    let mut header = String::from("m\\k");
    for k in k_lo..=k_hi {
        header.push_str(&format!(" {k:>2}"));
    }
    println!("{header}");
    let (m_lo, m_hi) = sweep.m_range;
    for m in m_lo..=m_hi {
        let mut line = format!("{m:>3}");
        for k in k_lo..=k_hi {
            let mark = sweep
                .entries
                .iter()
                .find(|e| e.m == m && e.k == k)
                .map_or("?", |e| if e.passed { "P" } else { "F" });
            line.push_str(&format!(" {mark:>2}"));
        }
        println!("{line}");
    }
}

fn sweep_csv(sweep: &SweepReport) -> String {
    let mut out = String::from("m,k,n,r,rho,passed,t_con,r_plus,circle_count,case,case_lhs\n");
    let opt = |v: Option<f64>| v.map(report::fmt17).unwrap_or_default();
    for e in &sweep.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            e.m,
            e.k,
            e.n,
            e.r,
            e.rho,
            e.passed,
            opt(e.t_con),
            opt(e.r_plus),
            e.circle_count.map(|c| c.to_string()).unwrap_or_default(),
            e.case_id.map(|c| c.to_string()).unwrap_or_default(),
            opt(e.case_lhs)
        ));
    }
    out
}

fn sweep_cases(c: &SweepCmd) -> CmdResult {
    let (m_lo, m_hi) = c.m;
    let (k_lo, k_hi) = c.k;
    let mut cases = Vec::new();
    let mut failed = 0;
    for m in m_lo..=m_hi {
        for k in k_lo..=k_hi {
            let p = FamilyParams::from_mk(i64::from(m), i64::from(k))?;
            let case = verify_case_inequalities(&p);
            let minorant = case
                .minorant
                .as_ref()
                .map_or(String::new(), |mi| format!(" minorant {:.12}", mi.value));
            println!(
                "m={m} k={k} case {} lhs {:.12}{minorant} {}",
                case.case_id,
                case.lhs_value,
                pass_word(case.pass)
            );
            if !case.pass {
                failed += 1;
            }
            cases.push(case);
        }
    }
    println!("passed {}/{}", cases.len() - failed, cases.len());
    if let Some(path) = output_path(&c.common, &format!("cases_m{m_lo}-{m_hi}_k{k_lo}-{k_hi}.json")) {
        write_file(&path, &report::serialize(&cases)?)?;
    }
    Ok(if failed == 0 { EXIT_PASS } else { EXIT_FAIL })
}
