//! Per-family orchestration, parameter sweeps and the on-disk formats.
//!
//! Reports are UTF-8 JSON documents carrying a `schema_version`, the tool
//! version, every tolerance and seed used, so a report can be re-run from its
//! own header. Floats are written with 17 significant digits. Root tables
//! export as CSV with the header `re,im,modulus,residual,g_re,g_im,on_circle,d`.

use std::collections::BTreeMap;
use std::io;
use std::ops::RangeInclusive;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result, Stage, StageExt};
use crate::family::{conifold_vector, radius_bound_r0, reduced_polynomial, reduced_polynomial_exact, FamilyParams};
use crate::oracle::{
    compare_spectra, full_hessian, gradient_fd_error, hessian_fd_error, hessian_nondegenerate,
    multistart_critical_points, random_points, reduction_pattern_defect, OracleConfig, SearchStatus,
};
use crate::polyroots::{all_roots, find_positive_root, square_free_check, RootConfig, RootMethod, SquareFreeCheck};
use crate::verifier::{
    check_conditions, classify_spectrum, verify_case_inequalities, verify_lemma_bounds, CaseReport,
    ConditionReport, CriticalDatum, LemmaMargins, Tolerances,
};
use crate::TOOL_VERSION;

pub const SCHEMA_VERSION: u32 = 1;

/// Seed recorded when the oracle is disabled.
pub const DEFAULT_SEED: u64 = 42;

/// Points per family for the finite-difference gradient check.
const FD_POINTS: usize = 100;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub roots: RootConfig,
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    /// Largest `deg u = (m+1)(k+1)` accepted.
    pub max_degree: usize,
    /// Wall-clock timings make reports non-reproducible, so they are opt-in.
    pub record_timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            roots: RootConfig::default(),
            tolerances: Tolerances::default(),
            oracle: None,
            max_degree: 200,
            record_timings: false,
        }
    }
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.oracle.map_or(DEFAULT_SEED, |o| o.seed)
    }

    fn check_degree(&self, p: &FamilyParams) -> Result<()> {
        if p.degree() > self.max_degree {
            return Err(Error::Config(format!(
                "deg u = (m+1)(k+1) = {} for (m, k) = ({}, {}) exceeds max degree {}",
                p.degree(),
                p.m,
                p.k,
                self.max_degree
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootRow {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub residual: f64,
    pub error_radius: f64,
    pub g_re: f64,
    pub g_im: f64,
    pub on_circle: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub seed: u64,
    pub num_starts: usize,
    pub converged_starts: usize,
    pub clusters_found: usize,
    pub expected: usize,
    pub status: SearchStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_pair_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_tolerance: Option<f64>,
    /// Worst `(head spread, tail spread, relation defect)` over the clusters.
    pub max_pattern_defect: (f64, f64, f64),
    pub gradient_fd_error: f64,
    pub hessian_fd_error: f64,
    pub hessian_symmetric: bool,
    pub hessian_det_at_conifold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub params: FamilyParams,
    pub config: RunConfig,
    pub seed: u64,
    pub r_plus: f64,
    pub r_plus_bracket: (f64, f64),
    pub t_con: f64,
    pub r0: f64,
    pub square_free: SquareFreeCheck,
    pub root_method: RootMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_check_distance: Option<f64>,
    pub roots: Vec<RootRow>,
    pub conditions: ConditionReport,
    pub lemma_margins: LemmaMargins,
    pub case_report: CaseReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl VerificationReport {
    /// Conditions, circle law, case inequality and (when run) a conclusive oracle all pass.
    pub fn passed(&self) -> bool {
        self.conditions.all_pass() && self.case_report.pass && self.oracle.as_ref().is_none_or(|o| o.pass)
    }

    pub fn oracle_inconclusive(&self) -> bool {
        self.oracle.as_ref().is_some_and(|o| o.status == SearchStatus::Shortfall)
    }

    pub fn roots_csv(&self) -> String {
        let mut out = String::from("re,im,modulus,residual,g_re,g_im,on_circle,d\n");
        for r in &self.roots {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt17(r.re),
                fmt17(r.im),
                fmt17(r.modulus),
                fmt17(r.residual),
                fmt17(r.g_re),
                fmt17(r.g_im),
                r.on_circle,
                r.d.map(|d| d.to_string()).unwrap_or_default()
            ));
        }
        out
    }
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

struct Timer {
    enabled: bool,
    marks: BTreeMap<String, f64>,
}

impl Timer {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.marks
                .insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        }
        out
    }
}

/// Family construction followed by root finding, verification and the
/// optional oracle. A failing condition is reported, not raised.
pub fn run_family(p: &FamilyParams, cfg: &RunConfig) -> Result<VerificationReport> {
    let mut timer = Timer {
        enabled: cfg.record_timings,
        marks: BTreeMap::new(),
    };

    let (u, square_free, r0) = timer.time("family", || -> Result<_> {
        cfg.check_degree(p)?;
        p.check_fano_divisibility()?;
        let u = reduced_polynomial(p);
        let square_free = square_free_check(&reduced_polynomial_exact(p));
        if !square_free.is_square_free() {
            return Err(Error::InternalConsistency(format!(
                "u is not square-free: deg gcd(u, u') = {}",
                square_free.gcd_degree
            )));
        }
        Ok((u, square_free, radius_bound_r0(p)))
    })
    .at(Stage::Family)?;

    let (roots, r_plus) = timer
        .time("polyroots", || -> Result<_> {
            let roots = all_roots(&u, &cfg.roots)?;
            if !roots.clustered.is_empty() {
                return Err(Error::Numerical {
                    message: format!("{} roots are not separated from a neighbour", roots.clustered.len()),
                    worst_residual: roots.worst_residual(),
                });
            }
            let r_plus = find_positive_root(&u, p)?;
            let positives: Vec<_> = roots
                .roots
                .iter()
                .filter(|r| r.value.re > 0.0 && r.value.im.abs() <= 1e-10)
                .collect();
            if positives.len() != 1 || (positives[0].value.re - r_plus.r_plus).abs() > 1e-10 {
                return Err(Error::InternalConsistency(format!(
                    "bisection r+ = {} does not match a unique positive root among {} candidates",
                    r_plus.r_plus,
                    positives.len()
                )));
            }
            Ok((roots, r_plus))
        })
        .at(Stage::Polyroots)?;

    let tol = &cfg.tolerances;
    let (data, conditions, lemma_margins, case_report) = timer
        .time("verifier", || -> Result<_> {
            let data = classify_spectrum(p, &roots, &r_plus, tol)?;
            let conditions = check_conditions(p, &data, &r_plus, tol)?;
            let lemma = verify_lemma_bounds(p, &data, &r_plus, r0, tol)?;
            let cases = verify_case_inequalities(p);
            Ok((data, conditions, lemma, cases))
        })
        .at(Stage::Verifier)?;

    let oracle = match &cfg.oracle {
        Some(ocfg) => Some(
            timer
                .time("oracle", || run_oracle(p, ocfg, &data, r_plus.r_plus))
                .at(Stage::Oracle)?,
        ),
        None => None,
    };

    let roots_table = roots
        .roots
        .iter()
        .zip(&data)
        .map(|(root, d)| RootRow {
            re: root.value.re,
            im: root.value.im,
            modulus: d.modulus_root,
            residual: root.residual,
            error_radius: root.error_radius,
            g_re: d.critical_value.re,
            g_im: d.critical_value.im,
            on_circle: d.on_circle,
            d: d.equality_class_d,
        })
        .collect();

    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        params: *p,
        config: cfg.clone(),
        seed: cfg.seed(),
        r_plus: r_plus.r_plus,
        r_plus_bracket: r_plus.bracket,
        t_con: conditions.t_con,
        r0,
        square_free,
        root_method: roots.method,
        cross_check_distance: roots.cross_check_distance,
        roots: roots_table,
        conditions,
        lemma_margins,
        case_report,
        oracle,
        timings: cfg.record_timings.then_some(timer.marks),
    })
}

/// [`run_family`] from raw `(n, r)`; invalid parameters surface as a
/// `params`-stage domain error.
pub fn run_family_nr(n: i64, r: i64, cfg: &RunConfig) -> Result<VerificationReport> {
    let p = FamilyParams::from_nr(n, r).at(Stage::Params)?;
    run_family(&p, cfg)
}

fn run_oracle(p: &FamilyParams, ocfg: &OracleConfig, data: &[CriticalDatum], r_plus: f64) -> Result<OracleSummary> {
    let search = multistart_critical_points(p, ocfg)?;
    if search.status == SearchStatus::Excess {
        return Err(Error::OracleMismatch(format!(
            "found {} critical-point clusters, more than deg u = {}",
            search.points.len(),
            search.expected
        )));
    }
    let (max_pair_distance, match_tolerance) = if search.status == SearchStatus::Complete {
        let report = compare_spectra(&search.points, p, data)?;
        (Some(report.max_pair_distance), Some(report.tolerance))
    } else {
        (None, None)
    };
    let max_pattern_defect = search.points.iter().fold((0.0f64, 0.0f64, 0.0f64), |acc, x| {
        let (a, b, c) = reduction_pattern_defect(p, x);
        (acc.0.max(a), acc.1.max(b), acc.2.max(c))
    });
    let (head, tail, rel) = max_pattern_defect;
    if head > 1e-8 || tail > 1e-8 || rel > 1e-7 {
        return Err(Error::OracleMismatch(format!(
            "critical point breaks the reduction pattern: spreads ({head:e}, {tail:e}), relation defect {rel:e}"
        )));
    }

    let gradient_fd_error = gradient_fd_error(p, &random_points(p, FD_POINTS, ocfg.seed), FD_STEP);
    let x_con = conifold_vector(p, r_plus)?;
    let x_con_c: Vec<Complex64> = x_con.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let hessian = full_hessian(p, &x_con_c)?;
    let hessian_symmetric = hessian == hessian.transpose();
    let hessian_fd_error = hessian_fd_error(p, &x_con_c, FD_STEP);
    let (hessian_det_at_conifold, nondegenerate) = hessian_nondegenerate(p, &x_con)?;

    let pass = search.status == SearchStatus::Complete
        && gradient_fd_error <= 1e-6
        && hessian_fd_error <= 1e-5
        && hessian_symmetric
        && nondegenerate;
    Ok(OracleSummary {
        seed: ocfg.seed,
        num_starts: ocfg.num_starts,
        converged_starts: search.converged_starts,
        clusters_found: search.points.len(),
        expected: search.expected,
        status: search.status,
        max_pair_distance,
        match_tolerance,
        max_pattern_defect,
        gradient_fd_error,
        hessian_fd_error,
        hessian_symmetric,
        hessian_det_at_conifold,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub m: u32,
    pub k: u32,
    pub n: u32,
    pub r: u32,
    pub rho: u32,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_con: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_id: Option<crate::verifier::CaseId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_lhs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub m: u32,
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub m_range: (u32, u32),
    pub k_range: (u32, u32),
    pub config: RunConfig,
    pub seed: u64,
    pub entries: Vec<SweepEntry>,
    pub failures: Vec<SweepFailure>,
    pub totals: Totals,
}

/// Aggregate sweep report plus the per-family reports that produced it,
/// in `(m, k)` order.
#[derive(Debug)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub families: Vec<Result<VerificationReport>>,
}

pub fn run_sweep(m_range: RangeInclusive<u32>, k_range: RangeInclusive<u32>, cfg: &RunConfig) -> Result<SweepOutcome> {
    if m_range.is_empty() || k_range.is_empty() {
        return Err(Error::Config(format!(
            "empty sweep range m in {m_range:?}, k in {k_range:?}"
        )));
    }
    if *m_range.start() < 1 || *k_range.start() < 1 {
        return Err(Error::Config("sweep ranges must start at 1 or above".into()));
    }
    let worst = FamilyParams::from_mk(i64::from(*m_range.end()), i64::from(*k_range.end()))?;
    cfg.check_degree(&worst)?;

    let pairs: Vec<(u32, u32)> = m_range
        .clone()
        .flat_map(|m| k_range.clone().map(move |k| (m, k)))
        .collect();
    let families: Vec<Result<VerificationReport>> = pairs
        .par_iter()
        .map(|&(m, k)| {
            let p = FamilyParams::from_mk(i64::from(m), i64::from(k)).at(Stage::Params)?;
            run_family(&p, cfg)
        })
        .collect();

    let mut entries = Vec::with_capacity(pairs.len());
    let mut failures = Vec::new();
    for (&(m, k), outcome) in pairs.iter().zip(&families) {
        let p = FamilyParams::from_mk(i64::from(m), i64::from(k))?;
        let mut entry = SweepEntry {
            m,
            k,
            n: p.n,
            r: p.r,
            rho: p.rho,
            passed: false,
            t_con: None,
            r_plus: None,
            circle_count: None,
            case_id: None,
            case_lhs: None,
        };
        match outcome {
            Ok(report) => {
                entry.t_con = Some(report.t_con);
                entry.r_plus = Some(report.r_plus);
                entry.circle_count = Some(report.conditions.circle_count);
                entry.case_id = Some(report.case_report.case_id);
                entry.case_lhs = Some(report.case_report.lhs_value);
                entry.passed = report.passed();
                if !entry.passed {
                    let mut reasons = report.conditions.diagnostics.clone();
                    if !report.case_report.pass {
                        reasons.push(format!("case {} inequality fails", report.case_report.case_id));
                    }
                    if report.oracle.as_ref().is_some_and(|o| !o.pass) {
                        reasons.push("oracle did not pass".into());
                    }
                    failures.push(SweepFailure {
                        m,
                        k,
                        stage: Some(Stage::Verifier),
                        message: reasons.join("; "),
                    });
                }
            }
            Err(e) => failures.push(SweepFailure {
                m,
                k,
                stage: e.stage(),
                message: e.root_cause().to_string(),
            }),
        }
        entries.push(entry);
    }
    let passed = entries.iter().filter(|e| e.passed).count();
    let report = SweepReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        m_range: (*m_range.start(), *m_range.end()),
        k_range: (*k_range.start(), *k_range.end()),
        config: cfg.clone(),
        seed: cfg.seed(),
        totals: Totals {
            passed,
            failed: entries.len() - passed,
        },
        entries,
        failures,
    };
    Ok(SweepOutcome { report, families })
}

/// Pretty JSON with every float at 17 significant digits; refuses NaN and
/// infinities.
struct ReportFormatter {
    inner: PrettyFormatter<'static>,
}

impl Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("non-finite number {value} in report"),
            ));
        }
        writer.write_all(fmt17(value).as_bytes())
    }

    // Absent options are skipped, so a null can only come from a non-finite
    // float that serde_json short-circuited past write_f64.
    fn write_null<W: ?Sized + io::Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "null (non-finite number) in report",
        ))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes any report type to the canonical document form.
pub fn serialize<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        ReportFormatter {
            inner: PrettyFormatter::new(),
        },
    );
    value.serialize(&mut ser).map_err(|e| {
        if e.is_io() {
            Error::InternalConsistency(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    })?;
    out.push(b'\n');
    Ok(out)
}

/// Parses a report, checking `schema_version` before the body.
pub fn load<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Parse("missing schema_version".into()))?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(Error::SchemaMigration {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))
}
