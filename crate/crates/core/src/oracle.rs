//! Brute-force corroboration of the univariate reduction.
//!
//! Solves the full `n`-variable critical-point system of the mirror with
//! multistart Newton, clusters the converged points, and matches their
//! critical values against `{g(alpha)}`. Also hosts the finite-difference
//! checks of the analytic derivatives and a plain-bisection `r+`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{build_mirror, FamilyParams};
use crate::verifier::CriticalDatum;

/// Largest ambient dimension the oracle accepts.
pub const MAX_ORACLE_DIMENSION: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub num_starts: usize,
    pub seed: u64,
    /// Max-norm gradient threshold for a converged start.
    pub newton_tol: f64,
    /// Max-norm coordinate distance for merging converged points.
    pub cluster_radius: f64,
    pub max_newton_iters: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            num_starts: 2000,
            seed: 42,
            newton_tol: 1e-10,
            cluster_radius: 1e-6,
            max_newton_iters: 100,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self, p: &FamilyParams) -> Result<()> {
        if p.n > MAX_ORACLE_DIMENSION {
            return Err(Error::Config(format!(
                "oracle limited to n <= {MAX_ORACLE_DIMENSION}, got n = {}",
                p.n
            )));
        }
        let min_starts = 10 * p.degree();
        if self.num_starts < min_starts {
            return Err(Error::Config(format!(
                "oracle needs at least 10*(m+1)(k+1) = {min_starts} starts, got {}",
                self.num_starts
            )));
        }
        if !(self.cluster_radius > self.newton_tol) {
            return Err(Error::Config(format!(
                "cluster_radius {} must exceed newton_tol {}",
                self.cluster_radius, self.newton_tol
            )));
        }
        Ok(())
    }
}

/// `P = 1/(x_1...x_n)` and `Q = 1/(x_1...x_k)`.
fn inverse_products(p: &FamilyParams, x: &[Complex64]) -> (Complex64, Complex64) {
    let k = p.k as usize;
    let head: Complex64 = x[..k].iter().product();
    let tail: Complex64 = x[k..].iter().product();
    let q = head.inv();
    (q / tail, q)
}

fn check_nonzero(x: &[Complex64]) -> Result<()> {
    if let Some(i) = x.iter().position(|z| z.norm() == 0.0) {
        return Err(Error::Domain(format!("coordinate x{} is zero", i + 1)));
    }
    Ok(())
}

/// `df/dx_i = 1 - P/x_i - [i <= k] Q/x_i`.
pub fn full_gradient(p: &FamilyParams, x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.len() != p.n as usize {
        return Err(Error::Domain(format!("expected {} coordinates, got {}", p.n, x.len())));
    }
    check_nonzero(x)?;
    Ok(gradient_unchecked(p, x))
}

fn gradient_unchecked(p: &FamilyParams, x: &[Complex64]) -> Vec<Complex64> {
    let (pp, q) = inverse_products(p, x);
    let k = p.k as usize;
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let s = if i < k { pp + q } else { pp };
            Complex64::new(1.0, 0.0) - s / xi
        })
        .collect()
}

/// `d2f/dx_i dx_j = (1 + [i = j]) (P + [i, j <= k] Q) / (x_i x_j)`.
pub fn full_hessian(p: &FamilyParams, x: &[Complex64]) -> Result<DMatrix<Complex64>> {
    if x.len() != p.n as usize {
        return Err(Error::Domain(format!("expected {} coordinates, got {}", p.n, x.len())));
    }
    check_nonzero(x)?;
    Ok(hessian_unchecked(p, x))
}

fn hessian_unchecked(p: &FamilyParams, x: &[Complex64]) -> DMatrix<Complex64> {
    let n = x.len();
    let k = p.k as usize;
    let (pp, q) = inverse_products(p, x);
    DMatrix::from_fn(n, n, |i, j| {
        let s = if i < k && j < k { pp + q } else { pp };
        let diag = if i == j { 2.0 } else { 1.0 };
        s * diag / (x[i] * x[j])
    })
}

/// `|det H|` at a positive real point, and whether it exceeds `1e-10`.
pub fn hessian_nondegenerate(p: &FamilyParams, x: &[f64]) -> Result<(f64, bool)> {
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("Hessian check needs a strictly positive point".into()));
    }
    let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let h = full_hessian(p, &z)?.map(|c| c.re);
    let det = h.determinant().abs();
    Ok((det, det > 1e-10))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Complete,
    /// Fewer clusters than `deg u`; statistical, rerun with more starts.
    Shortfall,
    /// More clusters than `deg u`; the reduction missed critical points.
    Excess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointSearch {
    pub points: Vec<Vec<Complex64>>,
    pub expected: usize,
    pub converged_starts: usize,
    pub status: SearchStatus,
    pub seed: u64,
}

/// `F_i = x_i df/dx_i = x_i - P - [i <= k] Q`. On the torus its zeros are
/// exactly the critical points of `f`.
fn toric_gradient(p: &FamilyParams, x: &[Complex64]) -> Vec<Complex64> {
    let (pp, q) = inverse_products(p, x);
    let k = p.k as usize;
    x.iter()
        .enumerate()
        .map(|(i, &xi)| if i < k { xi - pp - q } else { xi - pp })
        .collect()
}

/// Jacobian of `F` in `y = log x`: `diag(x) + P 11^T + Q 1_k 1_k^T`.
fn toric_jacobian(p: &FamilyParams, x: &[Complex64]) -> DMatrix<Complex64> {
    let k = p.k as usize;
    let (pp, q) = inverse_products(p, x);
    DMatrix::from_fn(x.len(), x.len(), |i, j| {
        let mut v = pp;
        if i < k && j < k {
            v += q;
        }
        if i == j {
            v += x[i];
        }
        v
    })
}

const MAX_LOG_STEP: f64 = 2.0;
const MAX_HALVINGS: usize = 30;

/// Damped Newton on `F(exp(y)) = 0` with backtracking on `|F|`; converged
/// when the plain gradient is below `newton_tol`.
fn newton(p: &FamilyParams, mut x: Vec<Complex64>, cfg: &OracleConfig) -> Option<(Vec<Complex64>, f64)> {
    let inf_norm = |g: &[Complex64]| g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sane = |x: &[Complex64]| {
        x.iter()
            .all(|z| z.re.is_finite() && z.im.is_finite() && z.norm() > 1e-8 && z.norm() < 1e8)
    };
    let mut residual = inf_norm(&toric_gradient(p, &x));
    for _ in 0..cfg.max_newton_iters {
        let g = inf_norm(&gradient_unchecked(p, &x));
        if g <= cfg.newton_tol {
            // two extra steps tighten the representative; keep them only if they help
            for _ in 0..2 {
                let rhs = DVector::from_iterator(x.len(), toric_gradient(p, &x).into_iter().map(|z| -z));
                let Some(delta) = toric_jacobian(p, &x).lu().solve(&rhs) else { break };
                let next: Vec<Complex64> = x.iter().zip(delta.iter()).map(|(a, d)| a * d.exp()).collect();
                if sane(&next) && inf_norm(&gradient_unchecked(p, &next)) < inf_norm(&gradient_unchecked(p, &x)) {
                    x = next;
                } else {
                    break;
                }
            }
            let g = inf_norm(&gradient_unchecked(p, &x));
            return Some((x, g));
        }
        let rhs = DVector::from_iterator(x.len(), toric_gradient(p, &x).into_iter().map(|z| -z));
        let mut delta = toric_jacobian(p, &x).lu().solve(&rhs)?;
        let size = delta.iter().map(|d| d.norm()).fold(0.0, f64::max);
        if !size.is_finite() {
            return None;
        }
        if size > MAX_LOG_STEP {
            delta *= Complex64::new(MAX_LOG_STEP / size, 0.0);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<Complex64> = x.iter().zip(delta.iter()).map(|(a, d)| a * (d * t).exp()).collect();
            if sane(&trial) {
                let r = inf_norm(&toric_gradient(p, &trial));
                if r < (1.0 - 0.25 * t) * residual {
                    accepted = Some((trial, r));
                    break;
                }
            }
            t *= 0.5;
        }
        let (next, r) = accepted?;
        x = next;
        residual = r;
    }
    None
}

fn lexicographic(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

fn max_norm_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Multistart damped Newton on the full critical-point system, iterated in
/// log coordinates on `x_i df/dx_i`.
///
/// Starts are drawn up front from a seeded ChaCha8 stream (moduli uniform
/// in `[0.3, 3]`, angles uniform), solved in parallel, then sorted and
/// clustered serially so the output does not depend on scheduling.
pub fn multistart_critical_points(p: &FamilyParams, cfg: &OracleConfig) -> Result<CriticalPointSearch> {
    cfg.validate(p)?;
    let n = p.n as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<Vec<Complex64>> = (0..cfg.num_starts)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let modulus = rng.gen_range(0.3..=3.0);
                    let angle = rng.gen_range(0.0..2.0 * PI);
                    Complex64::from_polar(modulus, angle)
                })
                .collect()
        })
        .collect();

    let mut converged: Vec<(Vec<Complex64>, f64)> = starts
        .into_par_iter()
        .filter_map(|x0| newton(p, x0, cfg))
        .collect();
    converged.sort_by(|a, b| lexicographic(&a.0, &b.0));
    let converged_starts = converged.len();

    let mut clusters: Vec<(Vec<Complex64>, f64)> = Vec::new();
    for (x, g) in converged {
        match clusters
            .iter_mut()
            .find(|(rep, _)| max_norm_distance(rep, &x) <= cfg.cluster_radius)
        {
            Some(slot) => {
                if g < slot.1 {
                    *slot = (x, g);
                }
            }
            None => clusters.push((x, g)),
        }
    }
    let expected = p.degree();
    let status = match clusters.len().cmp(&expected) {
        Ordering::Equal => SearchStatus::Complete,
        Ordering::Less => SearchStatus::Shortfall,
        Ordering::Greater => SearchStatus::Excess,
    };
    Ok(CriticalPointSearch {
        points: clusters.into_iter().map(|(x, _)| x).collect(),
        expected,
        converged_starts,
        status,
        seed: cfg.seed,
    })
}

/// Spread of the first `k` coordinates, spread of the last `m`, and the
/// defect in `x_1 = x_n^{m+1} + x_n`.
pub fn reduction_pattern_defect(p: &FamilyParams, x: &[Complex64]) -> (f64, f64, f64) {
    let k = p.k as usize;
    let spread = |s: &[Complex64]| s.iter().map(|z| (z - s[0]).norm()).fold(0.0, f64::max);
    let head = &x[..k];
    let tail = &x[k..];
    let t = tail[0];
    let relation = (head[0] - (t.powu(p.m + 1) + t)).norm();
    (spread(head), spread(tail), relation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub oracle_values: Vec<Complex64>,
    pub reduced_values: Vec<Complex64>,
    /// `(oracle index, reduced index, distance)`.
    pub matched_pairs: Vec<(usize, usize, f64)>,
    pub max_pair_distance: f64,
    pub unmatched_oracle: Vec<usize>,
    pub unmatched_reduced: Vec<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Greedy minimum-distance matching of oracle critical values against the
/// reduced ones; never fails, see [`compare_spectra`] for the checked form.
pub fn match_spectra(oracle_pts: &[Vec<Complex64>], p: &FamilyParams, reduced: &[CriticalDatum]) -> MatchReport {
    let f = build_mirror(p);
    let oracle_values: Vec<Complex64> = oracle_pts.iter().map(|x| f.eval(x)).collect();
    let reduced_values: Vec<Complex64> = reduced.iter().map(|d| d.critical_value).collect();
    let t_con = reduced
        .iter()
        .find(|d| d.is_conifold())
        .map(|d| d.critical_value.re)
        .unwrap_or_else(|| reduced.iter().map(|d| d.modulus_value).fold(0.0, f64::max));
    let tolerance = 1e-7 * (1.0 + t_con);

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in oracle_values.iter().enumerate() {
        for (j, b) in reduced_values.iter().enumerate() {
            pairs.push(((a - b).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_o = vec![false; oracle_values.len()];
    let mut used_r = vec![false; reduced_values.len()];
    let mut matched_pairs = Vec::new();
    for (d, i, j) in pairs {
        if !used_o[i] && !used_r[j] && d <= tolerance {
            used_o[i] = true;
            used_r[j] = true;
            matched_pairs.push((i, j, d));
        }
    }
    matched_pairs.sort_by_key(|&(i, j, _)| (i, j));
    let unmatched_oracle: Vec<usize> = (0..oracle_values.len()).filter(|&i| !used_o[i]).collect();
    let unmatched_reduced: Vec<usize> = (0..reduced_values.len()).filter(|&j| !used_r[j]).collect();
    let max_pair_distance = matched_pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    let pass = unmatched_oracle.is_empty() && unmatched_reduced.is_empty() && max_pair_distance <= tolerance;
    MatchReport {
        oracle_values,
        reduced_values,
        matched_pairs,
        max_pair_distance,
        unmatched_oracle,
        unmatched_reduced,
        tolerance,
        pass,
    }
}

/// Perfect matching of `f` at the oracle points against `{g(alpha)}`.
pub fn compare_spectra(oracle_pts: &[Vec<Complex64>], p: &FamilyParams, reduced: &[CriticalDatum]) -> Result<MatchReport> {
    if oracle_pts.is_empty() {
        return Err(Error::Precondition("oracle produced no critical points".into()));
    }
    if reduced.is_empty() {
        return Err(Error::Precondition("reduced spectrum is empty".into()));
    }
    let report = match_spectra(oracle_pts, p, reduced);
    if report.pass {
        Ok(report)
    } else {
        let show = |vals: &[Complex64], idx: &[usize]| -> String {
            idx.iter().map(|&i| vals[i].to_string()).collect::<Vec<_>>().join(", ")
        };
        Err(Error::OracleMismatch(format!(
            "{} oracle values and {} reduced values unmatched within {:e}: oracle [{}], reduced [{}]",
            report.unmatched_oracle.len(),
            report.unmatched_reduced.len(),
            report.tolerance,
            show(&report.oracle_values, &report.unmatched_oracle),
            show(&report.reduced_values, &report.unmatched_reduced),
        )))
    }
}

/// Plain bisection for `r+` on `(0, 1)` using the factored form of `u`,
/// no Newton steps.
pub fn bisection_r_plus(p: &FamilyParams) -> f64 {
    let m1 = p.m as i32 + 1;
    let k = p.k as i32;
    let u = |x: f64| x.powi(m1) * (x.powi(m1) + x).powi(k) - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if u(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Seeded random points with moduli in `[0.5, 2]`.
pub fn random_points(p: &FamilyParams, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..p.n)
                .map(|_| Complex64::from_polar(rng.gen_range(0.5..=2.0), rng.gen_range(0.0..2.0 * PI)))
                .collect()
        })
        .collect()
}

/// Largest `|analytic - central difference|` of the gradient over `points`,
/// differencing the generic monomial evaluation of the mirror.
pub fn gradient_fd_error(p: &FamilyParams, points: &[Vec<Complex64>], step: f64) -> f64 {
    let f = build_mirror(p);
    let mut worst: f64 = 0.0;
    for x in points {
        let analytic = gradient_unchecked(p, x);
        for i in 0..x.len() {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[i] += step;
            minus[i] -= step;
            let fd = (f.eval(&plus) - f.eval(&minus)) / (2.0 * step);
            worst = worst.max((fd - analytic[i]).norm());
        }
    }
    worst
}

/// Largest entrywise `|analytic - central difference of the gradient|` of
/// the Hessian at `x`.
pub fn hessian_fd_error(p: &FamilyParams, x: &[Complex64], step: f64) -> f64 {
    let h = hessian_unchecked(p, x);
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[j] += step;
        minus[j] -= step;
        let gp = gradient_unchecked(p, &plus);
        let gm = gradient_unchecked(p, &minus);
        for i in 0..x.len() {
            let fd = (gp[i] - gm[i]) / (2.0 * step);
            worst = worst.max((fd - h[(i, j)]).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{conifold_vector, derive_params};
    use crate::polyroots::{find_positive_root, RootConfig};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn gradient_hand_values() {
        let p = derive_params(2, 0).unwrap();
        let g = full_gradient(&p, &[c(1.0), c(1.0)]).unwrap();
        assert_eq!(g, vec![c(-1.0), c(0.0)]);
        assert!(full_gradient(&p, &[c(0.0), c(1.0)]).is_err());
        assert!(full_gradient(&p, &[c(1.0)]).is_err());
    }

    #[test]
    fn gradient_vanishes_at_conifold_point() {
        for (n, r) in [(2, 0), (3, 1), (5, 2), (6, 0)] {
            let p = derive_params(n, r).unwrap();
            let u = crate::family::reduced_polynomial(&p);
            let rp = find_positive_root(&u, &p).unwrap().r_plus;
            let x: Vec<Complex64> = conifold_vector(&p, rp).unwrap().into_iter().map(c).collect();
            let g = full_gradient(&p, &x).unwrap();
            assert!(g.iter().all(|z| z.norm() <= 1e-9), "{g:?}");
        }
    }

    #[test]
    fn hessian_symmetric_and_matches_fd() {
        let p = derive_params(4, 1).unwrap();
        for x in random_points(&p, 20, 7) {
            let h = full_hessian(&p, &x).unwrap();
            assert_eq!(h, h.transpose());
            assert!(hessian_fd_error(&p, &x, 1e-6) <= 1e-5);
        }
    }

    #[test]
    fn gradient_matches_fd() {
        let p = derive_params(3, 1).unwrap();
        let pts = random_points(&p, 100, 11);
        assert!(gradient_fd_error(&p, &pts, 1e-6) <= 1e-6);
    }

    #[test]
    fn conifold_hessian_nondegenerate() {
        let p = derive_params(2, 0).unwrap();
        let rp = bisection_r_plus(&p);
        let x = conifold_vector(&p, rp).unwrap();
        let (det, ok) = hessian_nondegenerate(&p, &x).unwrap();
        assert!(ok && det > 1e-10);
        assert!(hessian_nondegenerate(&p, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn bisection_agrees_with_polyroots() {
        for (m, k) in [(1, 1), (1, 2), (3, 2)] {
            let p = FamilyParams::from_mk(m, k).unwrap();
            let u = crate::family::reduced_polynomial(&p);
            let a = bisection_r_plus(&p);
            let b = find_positive_root(&u, &p).unwrap().r_plus;
            assert!((a - b).abs() < 1e-10);
        }
        assert!((bisection_r_plus(&FamilyParams::from_mk(1, 1).unwrap()) - 0.819_172_5).abs() < 1e-7);
    }

    #[test]
    fn r_plus_decreases_in_k() {
        for m in 1..=5 {
            let rs: Vec<f64> = (1..=8)
                .map(|k| bisection_r_plus(&FamilyParams::from_mk(m, k).unwrap()))
                .collect();
            assert!(rs.windows(2).all(|w| w[1] < w[0]), "m = {m}: {rs:?}");
        }
    }

    #[test]
    fn config_guards() {
        let p = derive_params(3, 1).unwrap();
        let cfg = OracleConfig {
            num_starts: 10,
            ..OracleConfig::default()
        };
        assert!(matches!(cfg.validate(&p), Err(Error::Config(_))));
        let cfg = OracleConfig {
            cluster_radius: 1e-12,
            ..OracleConfig::default()
        };
        assert!(cfg.validate(&p).is_err());
        let big = derive_params(7, 1).unwrap();
        assert!(OracleConfig::default().validate(&big).is_err());
    }

    #[test]
    fn two_dimensional_search_and_match() {
        let p = derive_params(2, 0).unwrap();
        let search = multistart_critical_points(&p, &OracleConfig::default()).unwrap();
        assert_eq!(search.status, SearchStatus::Complete);
        assert_eq!(search.points.len(), 4);
        for x in &search.points {
            let (head, tail, rel) = reduction_pattern_defect(&p, x);
            assert!(head <= 1e-8 && tail <= 1e-8 && rel <= 1e-7);
        }
        let u = crate::family::reduced_polynomial(&p);
        let roots = crate::polyroots::all_roots(&u, &RootConfig::default()).unwrap();
        let pr = find_positive_root(&u, &p).unwrap();
        let data = crate::verifier::classify_spectrum(&p, &roots, &pr, &Default::default()).unwrap();
        let report = compare_spectra(&search.points, &p, &data).unwrap();
        assert_eq!(report.matched_pairs.len(), 4);
        assert!(compare_spectra(&[], &p, &data).is_err());
        // a wrong spectrum is a hard mismatch
        let mut wrong = data.clone();
        wrong[0].critical_value += 1.0;
        assert!(matches!(compare_spectra(&search.points, &p, &wrong), Err(Error::OracleMismatch(_))));
    }

    #[test]
    fn search_is_deterministic() {
        let p = derive_params(3, 0).unwrap();
        let cfg = OracleConfig {
            num_starts: 300,
            ..OracleConfig::default()
        };
        let a = multistart_critical_points(&p, &cfg).unwrap();
        let b = multistart_critical_points(&p, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
