//! Root finding for the reduced polynomial.
//!
//! All complex roots come from Aberth–Ehrlich simultaneous iteration, with the
//! balanced companion matrix as fallback and cross-check. Each root is Newton
//! polished and carries a residual and an error radius. The positive root
//! `r+` is isolated separately by bisection on `(0, 1)`.

mod aberth;
mod companion;
mod extended;
mod squarefree;

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilyParams;
use crate::polynomial::DensePolynomial;

pub use squarefree::{gcd_degree_rational, square_free_check, GcdMethod, SquareFreeCheck};

const POLISH_STEPS: usize = 50;

/// Arithmetic used for Newton polishing and residual evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Precision {
    Double,
    Extended { mantissa_bits: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootConfig {
    /// Residual bound relative to the coefficient 1-norm.
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Largest allowed distance between matched roots of the two methods.
    pub disagreement_tol: f64,
    /// Run the companion-matrix method even when Aberth converges.
    pub cross_check: bool,
    pub precision: Precision,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            max_iters: 500,
            disagreement_tol: 1e-8,
            cross_check: true,
            precision: Precision::Double,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    Simple,
    /// Derivative too small to certify a simple root.
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedRoot {
    pub value: Complex64,
    /// `|u(value)|` on the stored coefficients.
    pub residual: f64,
    /// Upper bound on the distance from `value` to some root of `u`.
    pub error_radius: f64,
    pub newton_steps: usize,
    pub status: RootStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    Aberth,
    Companion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<CertifiedRoot>,
    pub polynomial_degree: usize,
    pub method: RootMethod,
    /// Max distance between matched roots of the two methods, when both ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_check_distance: Option<f64>,
    /// Indices of roots not separated from a neighbour by twice the largest
    /// error radius.
    pub clustered: Vec<usize>,
}

impl RootSet {
    pub fn values(&self) -> Vec<Complex64> {
        self.roots.iter().map(|r| r.value).collect()
    }

    pub fn max_error_radius(&self) -> f64 {
        self.roots.iter().map(|r| r.error_radius).fold(0.0, f64::max)
    }

    pub fn worst_residual(&self) -> f64 {
        self.roots.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.roots.iter().enumerate() {
            for b in &self.roots[i + 1..] {
                best = best.min((a.value - b.value).norm());
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositiveRoot {
    pub r_plus: f64,
    /// `u(lo) < 0 < u(hi)`.
    pub bracket: (f64, f64),
    pub width: f64,
    pub bisection_steps: usize,
    pub newton_steps: usize,
}

/// Bisection on `[lo, hi]` for an increasing `f`, halving until
/// `hi - lo <= rel_width * lo`. Returns the final bracket and step count;
/// an exact zero at a midpoint collapses the bracket onto it.
pub(crate) fn bisect_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_width: f64,
    max_steps: usize,
) -> (f64, f64, usize) {
    let mut steps = 0;
    while hi - lo > rel_width * lo && steps < max_steps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        steps += 1;
        if v < 0.0 {
            lo = mid;
        } else if v > 0.0 {
            hi = mid;
        } else {
            return (mid, mid, steps);
        }
    }
    (lo, hi, steps)
}

/// Isolates the positive root of `u` on `(0, 1)`.
///
/// Bisection halves the bracket until its width is at most `1e-14 * lo`;
/// a Newton polish from the midpoint supplies the point estimate if it stays
/// inside the bracket.
pub fn find_positive_root(u: &DensePolynomial, p: &FamilyParams) -> Result<PositiveRoot> {
    let (u0, u1) = (u.eval(0.0), u.eval(1.0));
    if !(u0 < 0.0 && u1 > 0.0) {
        return Err(Error::InternalConsistency(format!(
            "u has no sign change on (0, 1) for (m, k) = ({}, {}): u(0) = {u0}, u(1) = {u1}",
            p.m, p.k
        )));
    }
    let (lo, hi, bisection_steps) = bisect_increasing(|x| u.eval(x), 0.0, 1.0, 1e-14, 200);
    if lo == hi {
        return Ok(PositiveRoot {
            r_plus: lo,
            bracket: (lo, hi),
            width: 0.0,
            bisection_steps,
            newton_steps: 0,
        });
    }
    let du = u.derivative();
    let mut x = 0.5 * (lo + hi);
    let mut newton_steps = 0;
    for _ in 0..8 {
        let step = u.eval(x) / du.eval(x);
        let next = x - step;
        if !(next > lo && next < hi) || next == x {
            break;
        }
        x = next;
        newton_steps += 1;
    }
    Ok(PositiveRoot {
        r_plus: x,
        bracket: (lo, hi),
        width: hi - lo,
        bisection_steps,
        newton_steps,
    })
}

/// Newton-polishes `z0` at double precision and certifies the result.
pub fn polish_root(u: &DensePolynomial, z0: Complex64) -> CertifiedRoot {
    polish_root_with(u, z0, Precision::Double)
}

pub fn polish_root_with(u: &DensePolynomial, z0: Complex64, precision: Precision) -> CertifiedRoot {
    let (value, residual, derivative, steps) = match precision {
        Precision::Double => polish_double(u, z0),
        Precision::Extended { mantissa_bits } => {
            let out = extended::polish(u.coefficients(), z0, mantissa_bits, POLISH_STEPS);
            (out.value, out.residual, out.derivative, out.steps)
        }
    };
    certify(u, value, residual, derivative, steps)
}

fn polish_double(u: &DensePolynomial, z0: Complex64) -> (Complex64, f64, f64, usize) {
    let mut z = z0;
    let (mut value, mut deriv) = u.eval_with_derivative(z);
    let mut steps = 0;
    while steps < POLISH_STEPS && value.norm() > 0.0 && deriv.norm() > 0.0 {
        let step = value / deriv;
        let next = z - step;
        let (nv, nd) = u.eval_with_derivative(next);
        if !(nv.norm() < value.norm()) {
            break;
        }
        z = next;
        value = nv;
        deriv = nd;
        steps += 1;
        if step.norm() <= 2.0 * f64::EPSILON * z.norm() {
            break;
        }
    }
    (z, value.norm(), deriv.norm(), steps)
}

fn certify(u: &DensePolynomial, value: Complex64, residual: f64, derivative: f64, steps: usize) -> CertifiedRoot {
    let degree = u.degree() as f64;
    let scale = u.l1_norm() * value.norm().max(1.0).powi(u.degree() as i32);
    let derivative_floor = f64::EPSILON.sqrt() * scale;
    let simple = residual == 0.0 || derivative > derivative_floor;
    if simple && derivative > 0.0 {
        CertifiedRoot {
            value,
            residual,
            error_radius: degree * residual / derivative,
            newton_steps: steps,
            status: RootStatus::Simple,
        }
    } else if residual == 0.0 {
        CertifiedRoot {
            value,
            residual,
            error_radius: 0.0,
            newton_steps: steps,
            status: RootStatus::Simple,
        }
    } else {
        // |u(z)| = |lead| * prod |z - root_i| bounds the nearest root.
        CertifiedRoot {
            value,
            residual,
            error_radius: (residual / u.leading().abs()).powf(1.0 / degree),
            newton_steps: steps,
            status: RootStatus::Cluster,
        }
    }
}

/// All complex roots of `u`, listed with multiplicity.
pub fn all_roots(u: &DensePolynomial, cfg: &RootConfig) -> Result<RootSet> {
    let degree = u.degree();
    if degree == 0 {
        return Err(Error::Precondition("constant polynomial has no roots".into()));
    }
    let coeffs = u.coefficients();
    let tol = cfg.residual_tol * u.l1_norm();
    let polish_all = |values: &[Complex64]| -> Vec<CertifiedRoot> {
        values
            .iter()
            .map(|&z| polish_root_with(u, z, cfg.precision))
            .collect()
    };
    let acceptable = |roots: &[CertifiedRoot]| {
        roots.len() == degree
            && roots.iter().all(|r| {
                r.residual <= tol
                    && r.error_radius.is_finite()
                    && r.value.re.is_finite()
                    && r.value.im.is_finite()
            })
    };

    let aberth = aberth::aberth_ehrlich(coeffs, aberth::initial_guesses(coeffs), cfg.max_iters);
    let aberth_roots = aberth.converged.then(|| polish_all(&aberth.roots));
    let aberth_ok = aberth_roots.as_deref().is_some_and(acceptable);

    let companion_roots = if cfg.cross_check || !aberth_ok {
        companion::companion_roots(coeffs, cfg.max_iters).map(|v| polish_all(&v))
    } else {
        None
    };
    let companion_ok = companion_roots.as_deref().is_some_and(acceptable);

    let (mut roots, method, cross_check_distance) = match (aberth_ok, companion_ok) {
        (true, true) => {
            let a = aberth_roots.unwrap();
            let b = companion_roots.unwrap();
            let distance = matched_distance(&a, &b);
            if distance > cfg.disagreement_tol {
                return Err(Error::MethodDisagreement(format!(
                    "Aberth and companion roots differ by {distance:e} (> {:e}) for degree {degree}",
                    cfg.disagreement_tol
                )));
            }
            (a, RootMethod::Aberth, Some(distance))
        }
        (true, false) => (aberth_roots.unwrap(), RootMethod::Aberth, None),
        (false, true) => (companion_roots.unwrap(), RootMethod::Companion, None),
        (false, false) => {
            let worst = [aberth_roots.as_deref(), companion_roots.as_deref()]
                .into_iter()
                .flatten()
                .flat_map(|rs| rs.iter().map(|r| r.residual))
                .fold(f64::NAN, f64::max);
            return Err(Error::Numerical {
                message: format!(
                    "no root method certified all {degree} roots within {} iterations",
                    cfg.max_iters
                ),
                worst_residual: worst,
            });
        }
    };

    roots.sort_by(canonical_order);
    let clustered = clustered_indices(&roots);
    Ok(RootSet {
        roots,
        polynomial_degree: degree,
        method,
        cross_check_distance,
        clustered,
    })
}

/// Roots ordered by modulus, then argument.
// Moduli are compared after rounding so that a conjugate pair, whose two
// members can differ in the last bits, is ordered by argument alone.
fn canonical_order(a: &CertifiedRoot, b: &CertifiedRoot) -> Ordering {
    let key = |z: Complex64| (z.norm() * 1e10).round();
    key(a.value)
        .total_cmp(&key(b.value))
        .then(a.value.arg().total_cmp(&b.value.arg()))
}

fn clustered_indices(roots: &[CertifiedRoot]) -> Vec<usize> {
    let radius = roots.iter().map(|r| r.error_radius).fold(0.0, f64::max);
    let mut out = Vec::new();
    for (i, a) in roots.iter().enumerate() {
        let crowded = roots
            .iter()
            .enumerate()
            .any(|(j, b)| j != i && (a.value - b.value).norm() <= 2.0 * radius);
        if crowded || a.status == RootStatus::Cluster {
            out.push(i);
        }
    }
    out
}

/// Greedy minimum-distance matching of two equal-length root lists; returns
/// the largest matched distance.
fn matched_distance(a: &[CertifiedRoot], b: &[CertifiedRoot]) -> f64 {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x.value - y.value).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
            matched += 1;
        }
    }
    if matched < a.len().max(b.len()) {
        f64::INFINITY
    } else {
        worst
    }
}

/// Roots of `u` via the companion matrix alone, unpolished. Exposed for
/// independent cross-checks.
pub fn companion_eigenvalues(u: &DensePolynomial, max_iters: usize) -> Option<Vec<Complex64>> {
    companion::companion_roots(u.coefficients(), max_iters)
}
