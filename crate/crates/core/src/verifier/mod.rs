//! Classification of the critical spectrum and the checks built on it.
//!
//! Every root `alpha` of `u` gives the critical value `g(alpha)`. The checks
//! here establish, root by root:
//!
//! * `r+ <= |alpha| < r0`, with the envelope chain
//!   `|g(alpha)| <= h(|alpha|) <= h(r+) = T_con`;
//! * the roots on the circle `|alpha| = r+` are exactly `zeta_m^d r+` with
//!   `m | (k+1)d`, and there are `gcd(m, k+1)` of them;
//! * the three conifold conditions on `T_con = g(r+)`.
//!
//! Equality is decided structurally: a root near the circle must also pass the
//! `zeta_m^d` reconstruction and the integer divisibility test.

mod cases;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{critical_value_g, envelope_h, reduced_polynomial, FamilyParams};
use crate::polyroots::{PositiveRoot, RootSet};

pub use cases::{
    case_iii_direct_lhs, case_iii_minorant, case_iv_minorant, case_iv_polynomial, case_lhs,
    verify_case_inequalities, CaseId, CaseIvAux, CaseReport, Minorant,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative to `r+`: `||alpha| - r+| <= circle_tol * r+` puts a root on the circle.
    pub circle_tol: f64,
    /// Relative to `T_con`, for matching critical values.
    pub match_tol: f64,
    /// Relative slack on `|g(alpha)| <= T_con`.
    pub slack_tol: f64,
    /// Absolute envelope tolerance, as a multiple of `T_con`.
    pub abs_tol: f64,
    /// Relative to `r+`: allowed `|alpha - zeta_m^d r+|`.
    pub recon_tol: f64,
    /// Relative to `r+`: allowed shortfall of `|alpha|` below `r+`.
    pub lower_bound_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            circle_tol: 1e-8,
            match_tol: 1e-7,
            slack_tol: 1e-9,
            abs_tol: 1e-9,
            recon_tol: 1e-8,
            lower_bound_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalDatum {
    pub alpha: Complex64,
    pub critical_value: Complex64,
    pub modulus_value: f64,
    pub modulus_root: f64,
    pub on_circle: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equality_class_d: Option<u32>,
}

impl CriticalDatum {
    /// The datum of `r+` itself.
    pub fn is_conifold(&self) -> bool {
        self.on_circle && self.equality_class_d == Some(0)
    }
}

/// `{d in [0, m) : m | (k+1)d}`.
pub fn equality_classes(p: &FamilyParams) -> BTreeSet<u32> {
    let m = u64::from(p.m);
    let k1 = u64::from(p.k) + 1;
    (0..p.m).filter(|&d| (k1 * u64::from(d)) % m == 0).collect()
}

fn zeta(m: u32, d: u32) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * f64::from(d) / f64::from(m))
}

/// `T_con = g(r+)`.
pub fn conifold_value(p: &FamilyParams, r_plus: f64) -> f64 {
    critical_value_g(p, Complex64::new(r_plus, 0.0)).re
}

pub fn classify_spectrum(
    p: &FamilyParams,
    roots: &RootSet,
    r_plus: &PositiveRoot,
    tol: &Tolerances,
) -> Result<Vec<CriticalDatum>> {
    let rp = r_plus.r_plus;
    let m = p.m;
    let k1 = u64::from(p.k) + 1;
    roots
        .roots
        .iter()
        .map(|root| {
            let alpha = root.value;
            let critical_value = critical_value_g(p, alpha);
            let modulus_root = alpha.norm();
            let on_circle = (modulus_root - rp).abs() <= tol.circle_tol * rp;
            let equality_class_d = if on_circle {
                let theta = (alpha / rp).arg();
                let d = (f64::from(m) * theta / (2.0 * PI)).round() as i64;
                let d = d.rem_euclid(i64::from(m)) as u32;
                let recon = (alpha - zeta(m, d) * rp).norm();
                if recon > tol.recon_tol * rp {
                    return Err(Error::TheoremViolation {
                        root: alpha,
                        message: format!(
                            "root on the circle |x| = r+ is {recon:e} away from zeta_{m}^{d} r+"
                        ),
                    });
                }
                if (k1 * u64::from(d)) % u64::from(m) != 0 {
                    return Err(Error::TheoremViolation {
                        root: alpha,
                        message: format!("equality class d = {d} fails {m} | {k1}*{d}"),
                    });
                }
                Some(d)
            } else {
                None
            };
            Ok(CriticalDatum {
                alpha,
                critical_value,
                modulus_value: critical_value.norm(),
                modulus_root,
                on_circle,
                equality_class_d,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub t_con: f64,
    pub cond1_pass: bool,
    /// `T_con` minus the largest `|g|` away from the conifold root; zero when
    /// other roots reach the bound.
    pub cond1_margin: f64,
    /// `T_con` minus the largest `|g|` over roots off the circle `|x| = r+`.
    pub off_circle_margin: f64,
    pub cond2_pass: bool,
    pub cond3_pass: bool,
    pub circle_count: usize,
    pub predicted_circle_count: usize,
    pub circle_law_pass: bool,
    /// The root maximising `|g|` lies on the circle `|x| = r+`.
    pub argmax_on_circle: bool,
    pub diagnostics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offending_root: Option<Complex64>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.cond1_pass
            && self.cond2_pass
            && self.cond3_pass
            && self.circle_law_pass
            && self.argmax_on_circle
    }

    pub fn passed_count(&self) -> usize {
        [self.cond1_pass, self.cond2_pass, self.cond3_pass]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    /// Converts a failing report into a verification-failure error.
    pub fn ensure_pass(self) -> Result<Self> {
        if self.all_pass() {
            Ok(self)
        } else {
            Err(Error::VerificationFailure {
                message: self.diagnostics.join("; "),
                root: self.offending_root,
            })
        }
    }
}

pub fn check_conditions(
    p: &FamilyParams,
    data: &[CriticalDatum],
    r_plus: &PositiveRoot,
    tol: &Tolerances,
) -> Result<ConditionReport> {
    if data.len() != p.degree() {
        return Err(Error::Precondition(format!(
            "spectrum has {} entries, expected deg u = {}",
            data.len(),
            p.degree()
        )));
    }
    let rp = r_plus.r_plus;
    let t_con = conifold_value(p, rp);
    let mut diagnostics = Vec::new();
    let mut offending_root = None;
    let mut flag = |msg: String, root: Complex64, diags: &mut Vec<String>| {
        diags.push(msg);
        offending_root.get_or_insert(root);
    };

    // (1) every |g(alpha)| <= T_con
    let mut cond1_pass = true;
    for d in data {
        if d.modulus_value > t_con * (1.0 + tol.slack_tol) {
            cond1_pass = false;
            flag(
                format!("|g({})| = {} exceeds T_con = {t_con}", d.alpha, d.modulus_value),
                d.alpha,
                &mut diagnostics,
            );
        }
    }
    let max_other = data
        .iter()
        .filter(|d| !d.is_conifold())
        .map(|d| d.modulus_value)
        .fold(0.0, f64::max);
    let cond1_margin = if max_other >= t_con * (1.0 - tol.match_tol) {
        0.0
    } else {
        t_con - max_other
    };
    let off_circle_margin = t_con
        - data
            .iter()
            .filter(|d| !d.on_circle)
            .map(|d| d.modulus_value)
            .fold(0.0, f64::max);

    // (2) r+ is a simple root and the only one mapping to T_con
    let mut cond2_pass = true;
    let du = reduced_polynomial(p).derivative().eval(rp);
    if !(du > 0.0) {
        cond2_pass = false;
        flag(format!("u'(r+) = {du} is not positive"), Complex64::new(rp, 0.0), &mut diagnostics);
    }
    let conifold_roots = data.iter().filter(|d| d.is_conifold()).count();
    if conifold_roots != 1 {
        cond2_pass = false;
        flag(
            format!("{conifold_roots} roots identified with r+ (expected exactly 1)"),
            Complex64::new(rp, 0.0),
            &mut diagnostics,
        );
    }
    for d in data.iter().filter(|d| !d.is_conifold()) {
        if (d.critical_value - t_con).norm() <= tol.match_tol * t_con {
            cond2_pass = false;
            flag(
                format!("root {} also maps to T_con (g = {})", d.alpha, d.critical_value),
                d.alpha,
                &mut diagnostics,
            );
        }
    }

    // (3) every maximal-modulus value is a rho-th root of unity times T_con
    let mut cond3_pass = true;
    let rho = p.rho;
    for d in data {
        if d.modulus_value < t_con * (1.0 - tol.match_tol) {
            continue;
        }
        let Some(class) = d.equality_class_d.filter(|_| d.on_circle) else {
            cond3_pass = false;
            flag(
                format!("root {} attains |g| = T_con off the circle |x| = r+", d.alpha),
                d.alpha,
                &mut diagnostics,
            );
            continue;
        };
        if (u64::from(class) * u64::from(rho)) % u64::from(p.m) != 0 {
            cond3_pass = false;
            flag(
                format!("(zeta_{}^{class})^{rho} != 1", p.m),
                d.alpha,
                &mut diagnostics,
            );
        }
        let expected = zeta(p.m, class) * t_con;
        if (d.critical_value - expected).norm() > tol.match_tol * t_con {
            cond3_pass = false;
            flag(
                format!(
                    "g({}) = {} differs from zeta_{}^{class} T_con = {expected}",
                    d.alpha, d.critical_value, p.m
                ),
                d.alpha,
                &mut diagnostics,
            );
        }
        let power = (d.critical_value / t_con).powu(rho);
        if (power - 1.0).norm() > tol.match_tol * f64::from(rho) {
            cond3_pass = false;
            flag(
                format!("(g/T_con)^{rho} = {power} is not 1"),
                d.alpha,
                &mut diagnostics,
            );
        }
    }

    let circle_count = data.iter().filter(|d| d.on_circle).count();
    let predicted_circle_count = p.m.gcd(&(p.k + 1)) as usize;
    let circle_law_pass = circle_count == predicted_circle_count;
    if !circle_law_pass {
        flag(
            format!("{circle_count} roots on |x| = r+, expected gcd(m, k+1) = {predicted_circle_count}"),
            Complex64::new(rp, 0.0),
            &mut diagnostics,
        );
    }

    let argmax = data
        .iter()
        .max_by(|a, b| a.modulus_value.total_cmp(&b.modulus_value))
        .expect("nonempty spectrum");
    let argmax_on_circle = (argmax.modulus_root - rp).abs() <= tol.circle_tol * rp;
    if !argmax_on_circle {
        flag(
            format!("max |g| attained at {} with |alpha| != r+", argmax.alpha),
            argmax.alpha,
            &mut diagnostics,
        );
    }

    Ok(ConditionReport {
        t_con,
        cond1_pass,
        cond1_margin,
        off_circle_margin,
        cond2_pass,
        cond3_pass,
        circle_count,
        predicted_circle_count,
        circle_law_pass,
        argmax_on_circle,
        diagnostics,
        offending_root,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaMargins {
    /// `min |alpha| - r+`; may be slightly negative within tolerance.
    pub lower: f64,
    /// `r0 - max |alpha|`; strictly positive.
    pub upper: f64,
    /// Largest `|g(alpha)| - h(|alpha|)` over the roots.
    pub envelope_excess: f64,
    /// Largest `h(|alpha|) - h(r+)` over the roots.
    pub monotone_excess: f64,
    /// `|h(r+) - g(r+)|`.
    pub identity_gap: f64,
}

pub fn verify_lemma_bounds(
    p: &FamilyParams,
    data: &[CriticalDatum],
    r_plus: &PositiveRoot,
    r0: f64,
    tol: &Tolerances,
) -> Result<LemmaMargins> {
    if data.is_empty() {
        return Err(Error::Precondition("empty spectrum".into()));
    }
    let rp = r_plus.r_plus;
    let t_con = conifold_value(p, rp);
    let h_rp = envelope_h(p, rp)?;
    let abs_tol = tol.abs_tol * t_con;

    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut envelope_excess = f64::NEG_INFINITY;
    let mut monotone_excess = f64::NEG_INFINITY;
    for d in data {
        let low = d.modulus_root - rp;
        if low < -tol.lower_bound_tol * rp {
            return Err(Error::LemmaViolation {
                root: d.alpha,
                message: format!("|alpha| = {} is below r+ = {rp}", d.modulus_root),
            });
        }
        let up = r0 - d.modulus_root;
        if !(up > 0.0) {
            return Err(Error::LemmaViolation {
                root: d.alpha,
                message: format!("|alpha| = {} is not below r0 = {r0}", d.modulus_root),
            });
        }
        let h = envelope_h(p, d.modulus_root)?;
        let e1 = d.modulus_value - h;
        let e2 = h - h_rp;
        if e1 > abs_tol || e2 > abs_tol {
            return Err(Error::LemmaViolation {
                root: d.alpha,
                message: format!(
                    "envelope chain |g| <= h(|alpha|) <= h(r+) broken: |g| = {}, h(|alpha|) = {h}, h(r+) = {h_rp}",
                    d.modulus_value
                ),
            });
        }
        lower = lower.min(low);
        upper = upper.min(up);
        envelope_excess = envelope_excess.max(e1);
        monotone_excess = monotone_excess.max(e2);
    }
    Ok(LemmaMargins {
        lower,
        upper,
        envelope_excess,
        monotone_excess,
        identity_gap: (h_rp - t_con).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::radius_bound_r0;
    use crate::polyroots::{all_roots, find_positive_root, RootConfig};

    fn spectrum(m: i64, k: i64) -> (FamilyParams, Vec<CriticalDatum>, PositiveRoot) {
        let p = FamilyParams::from_mk(m, k).unwrap();
        let u = reduced_polynomial(&p);
        let roots = all_roots(&u, &RootConfig::default()).unwrap();
        let pr = find_positive_root(&u, &p).unwrap();
        let data = classify_spectrum(&p, &roots, &pr, &Tolerances::default()).unwrap();
        (p, data, pr)
    }

    #[test]
    fn equality_class_examples() {
        let set = |m, k| equality_classes(&FamilyParams::from_mk(m, k).unwrap());
        assert_eq!(set(2, 3), BTreeSet::from([0, 1]));
        assert_eq!(set(2, 2), BTreeSet::from([0]));
        // exhaustive oracle for {d in [0,6) : 6 | 4d}
        let oracle: BTreeSet<u32> = (0..6).filter(|d| (4 * d) % 6 == 0).collect();
        assert_eq!(oracle, BTreeSet::from([0, 3]));
        assert_eq!(set(6, 3), oracle);
        for m in 1..=12 {
            for k in 1..=12 {
                let p = FamilyParams::from_mk(m, k).unwrap();
                let classes = equality_classes(&p);
                assert_eq!(classes.len() as u32, p.rho);
                assert!(classes.iter().all(|&d| (p.rho * d).is_multiple_of(p.m)));
            }
        }
    }

    #[test]
    fn m2_k3_has_two_circle_roots() {
        let (p, data, pr) = spectrum(2, 3);
        let circle: Vec<_> = data.iter().filter(|d| d.on_circle).collect();
        assert_eq!(circle.len(), 2);
        let t_con = conifold_value(&p, pr.r_plus);
        let minus = circle.iter().find(|d| d.equality_class_d == Some(1)).unwrap();
        assert!((minus.alpha + pr.r_plus).norm() < 1e-12);
        assert!((minus.critical_value + t_con).norm() < 1e-10 * t_con);
        // u(-r+) = 0 since u(x) = x^{m+k+1}(x^m+1)^k - 1 with m even, m+k+1 = 6 even
        let u = reduced_polynomial(&p);
        assert!(u.eval(-pr.r_plus).abs() < 1e-14);
        let report = check_conditions(&p, &data, &pr, &Tolerances::default()).unwrap();
        assert!(report.all_pass(), "{:?}", report.diagnostics);
        assert_eq!(report.circle_count, 2);
        assert_eq!(report.cond1_margin, 0.0);
    }

    #[test]
    fn m1_k1_only_r_plus_on_circle() {
        let (_, data, pr) = spectrum(1, 1);
        let circle: Vec<_> = data.iter().filter(|d| d.on_circle).collect();
        assert_eq!(circle.len(), 1);
        assert!(circle[0].is_conifold());
        assert!((circle[0].alpha.re - pr.r_plus).abs() < 1e-14);
        assert!((circle[0].critical_value.re - 3.799_604_753_596_071_7).abs() < 1e-12);
    }

    #[test]
    fn m2_k2_conditions() {
        let (p, data, pr) = spectrum(2, 2);
        let report = check_conditions(&p, &data, &pr, &Tolerances::default()).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.passed_count(), 3);
        assert_eq!(report.circle_count, 1);
        assert_eq!(report.predicted_circle_count, 1);
        assert!(report.cond1_margin > 0.0);
        assert!((report.t_con - 5.704_616_958_250_659).abs() < 1e-12);
    }

    #[test]
    fn missing_roots_is_precondition_error() {
        let (p, data, pr) = spectrum(2, 2);
        let err = check_conditions(&p, &data[..5], &pr, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn tampered_spectrum_fails_cond1() {
        let (p, mut data, pr) = spectrum(2, 2);
        let i = data.iter().position(|d| !d.on_circle).unwrap();
        data[i].critical_value *= 10.0;
        data[i].modulus_value *= 10.0;
        let report = check_conditions(&p, &data, &pr, &Tolerances::default()).unwrap();
        assert!(!report.cond1_pass);
        assert_eq!(report.offending_root, Some(data[i].alpha));
        assert!(matches!(report.ensure_pass(), Err(Error::VerificationFailure { .. })));
    }

    #[test]
    fn reconstruction_failure_is_theorem_violation() {
        let p = FamilyParams::from_mk(2, 2).unwrap();
        let u = reduced_polynomial(&p);
        let mut roots = all_roots(&u, &RootConfig::default()).unwrap();
        let pr = find_positive_root(&u, &p).unwrap();
        // a fake root on the circle at angle pi/2 is not zeta_2^d r+
        roots.roots[1].value = Complex64::new(0.0, pr.r_plus);
        let err = classify_spectrum(&p, &roots, &pr, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::TheoremViolation { .. }));
        // -r+ reconstructs as d = 1 but 2 does not divide 3
        roots.roots[1].value = Complex64::new(-pr.r_plus, 0.0);
        let err = classify_spectrum(&p, &roots, &pr, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::TheoremViolation { ref message, .. } if message.contains("d = 1")));
    }

    #[test]
    fn lemma_bounds_m1_k1() {
        let (p, data, pr) = spectrum(1, 1);
        let r0 = radius_bound_r0(&p);
        let margins = verify_lemma_bounds(&p, &data, &pr, r0, &Tolerances::default()).unwrap();
        assert!(margins.lower.abs() < 1e-14);
        assert!((margins.upper - (4f64.cbrt() - 1.380_277_569_097_6)).abs() < 1e-10);
        assert!(margins.identity_gap < 1e-12 * conifold_value(&p, pr.r_plus));
        let mut moduli: Vec<f64> = data.iter().map(|d| d.modulus_root).collect();
        moduli.sort_by(f64::total_cmp);
        for (got, want) in moduli.iter().zip([0.819_172_513_396, 0.940_435_682_699, 0.940_435_682_699, 1.380_277_569_1]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn lemma_violation_detected() {
        let (p, mut data, pr) = spectrum(1, 1);
        data[3].modulus_root = 2.0;
        let err = verify_lemma_bounds(&p, &data, &pr, radius_bound_r0(&p), &Tolerances::default())
            .unwrap_err();
        assert!(matches!(err, Error::LemmaViolation { .. }));
    }
}
