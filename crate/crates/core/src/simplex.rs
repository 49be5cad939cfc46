//! Geometry of the ordered probability simplex.
//!
//! Everything here lives in the affine hyperplane `sum(w) = 1`. The level set
//! of the effective number, `A_nu = {w sorted : nu <= 1/|w|^2 < nu + 1}`, is a
//! spherical shell about the barycenter `b_[n]` cut by the ordered simplex,
//! and the retained mass is the linear functional `phi_nu(w) = w_1 + ... +
//! w_nu`. This module provides the pieces needed to check the closed-form
//! infimum of `phi_nu` over `A_nu` independently: barycenters, ball radii,
//! the extremal point, and a sampling + local-search minimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::tight_lower_bound;
use crate::error::{domain, Error, Result};
use crate::rule::{emp_decide, ScoreVector};

/// Tolerance on `|w - b|^2` when classifying against a ball boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Tolerance on the coordinate sum for hyperplane membership.
pub const HYPERPLANE_TOL: f64 = 1e-9;
/// Largest `n` the brute-force minimizer accepts.
pub const ORACLE_MAX_N: usize = 12;
/// Smallest sample budget the brute-force minimizer accepts.
pub const ORACLE_MIN_BUDGET: usize = 100_000;

/// A point of the ordered simplex: non-increasing, nonnegative, summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderedSimplexPoint(Vec<f64>);

impl OrderedSimplexPoint {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSimplexPoint("no coordinates".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidSimplexPoint("negative or non-finite coordinate".into()));
        }
        if weights.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::InvalidSimplexPoint("coordinates are not non-increasing".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSimplexPoint(format!("coordinates sum to {sum}")));
        }
        Ok(Self(weights))
    }

    /// Sorts `weights` descending first.
    pub fn from_unsorted(mut weights: Vec<f64>) -> Result<Self> {
        weights.sort_by(|a, b| b.total_cmp(a));
        Self::new(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.0
    }
}

/// `b_[j]`: first `j` coordinates `1/j`, the rest zero.
pub fn barycenter(n: usize, j: usize) -> Result<Vec<f64>> {
    if j < 1 || j > n {
        return domain(format!("barycenter index must lie in 1..={n}, got {j}"));
    }
    let mut b = vec![0.0; n];
    b[..j].fill(1.0 / j as f64);
    Ok(b)
}

/// `r_nu^2 = 1/nu - 1/n`.
pub fn radius_sq(n: usize, nu: usize) -> f64 {
    1.0 / nu as f64 - 1.0 / n as f64
}

/// Barycenters `b_[1..=n]` and ball radii `r_1..=r_n` for one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryContext {
    n: usize,
    barycenters: Vec<Vec<f64>>,
    radii: Vec<f64>,
}

impl GeometryContext {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return domain(format!("n must be at least 2, got {n}"));
        }
        let barycenters = (1..=n).map(|j| barycenter(n, j)).collect::<Result<_>>()?;
        let radii = (1..=n).map(|nu| radius_sq(n, nu).max(0.0).sqrt()).collect();
        Ok(Self {
            n,
            barycenters,
            radii,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `b_[j]`, 1-based.
    pub fn barycenter(&self, j: usize) -> &[f64] {
        &self.barycenters[j - 1]
    }

    /// `r_nu`, 1-based.
    pub fn radius(&self, nu: usize) -> f64 {
        self.radii[nu - 1]
    }

    pub fn center(&self) -> &[f64] {
        self.barycenter(self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Classifies `w` against the ball `B_nu` of radius `r_nu` about `b_[n]`.
pub fn ball_membership(w: &[f64], nu: usize, ctx: &GeometryContext) -> Result<Membership> {
    if w.len() != ctx.n {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, context has {}",
            w.len(),
            ctx.n
        )));
    }
    if nu < 1 || nu > ctx.n {
        return domain(format!("nu must lie in 1..={}, got {nu}", ctx.n));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > HYPERPLANE_TOL {
        return Err(Error::NotOnHyperplane(sum));
    }
    let d2 = dist_sq(w, ctx.center());
    let r2 = radius_sq(ctx.n, nu);
    Ok(if (d2 - r2).abs() <= BOUNDARY_TOL {
        Membership::Boundary
    } else if d2 < r2 {
        Membership::Inside
    } else {
        Membership::Outside
    })
}

fn check_extremal(n: usize, nu: usize) -> Result<()> {
    if n < 3 || nu < 2 || nu >= n {
        return domain(format!("extremal point needs 2 <= nu <= n - 1, got n = {n}, nu = {nu}"));
    }
    Ok(())
}

/// `p_nu = b_[n] + (r_{nu+1} / r_1) (b_[1] - b_[n])`: the point on the edge
/// from the center to the vertex `e_1` at distance `r_{nu+1}` from the center.
pub fn extremal_point(n: usize, nu: usize) -> Result<OrderedSimplexPoint> {
    check_extremal(n, nu)?;
    let center = barycenter(n, n)?;
    let vertex = barycenter(n, 1)?;
    let t = (radius_sq(n, nu + 1).max(0.0) / radius_sq(n, 1)).sqrt();
    let p = center
        .iter()
        .zip(&vertex)
        .map(|(c, v)| c + t * (v - c))
        .collect();
    OrderedSimplexPoint::new(p)
}

/// Coordinate form of [`extremal_point`]:
/// `p_1 = (1 + sqrt((n-1)(n-nu-1)/(nu+1))) / n`, the other `n - 1`
/// coordinates `(1 - sqrt((n-nu-1)/((n-1)(nu+1)))) / n`.
pub fn extremal_point_coordinates(n: usize, nu: usize) -> Result<OrderedSimplexPoint> {
    check_extremal(n, nu)?;
    let (nf, vf) = (n as f64, nu as f64);
    let first = (1.0 + ((nf - 1.0) * (nf - vf - 1.0) / (vf + 1.0)).sqrt()) / nf;
    let rest = (1.0 - ((nf - vf - 1.0) / ((nf - 1.0) * (vf + 1.0))).sqrt()) / nf;
    let mut p = vec![rest; n];
    p[0] = first;
    OrderedSimplexPoint::new(p)
}

/// Sum of the first `nu` coordinates.
pub fn phi(w: &OrderedSimplexPoint, nu: usize) -> Result<f64> {
    if nu < 1 || nu > w.len() {
        return domain(format!("nu must lie in 1..={}, got {nu}", w.len()));
    }
    Ok(w.weights()[..nu].iter().sum())
}

/// Fills `out` with a symmetric Dirichlet(`alpha`) draw and returns the raw
/// gamma variates' sum. The raw draws (before normalisation) are left in
/// `raw`.
pub fn sample_dirichlet<R: Rng + ?Sized>(
    rng: &mut R,
    alpha: f64,
    raw: &mut [f64],
    out: &mut [f64],
) -> f64 {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha must be positive");
    let mut total = 0.0;
    for r in raw.iter_mut() {
        // Tiny alphas can underflow to zero; keep every draw strictly positive.
        *r = gamma.sample(rng).max(f64::MIN_POSITIVE);
        total += *r;
    }
    for (o, r) in out.iter_mut().zip(raw.iter()) {
        *o = r / total;
    }
    total
}

/// Symmetric Dirichlet concentration whose mean `sum(w^2)` equals
/// `1 / (nu + 1/2)`, i.e. the middle of the `A_nu` shell.
pub fn shell_concentration(n: usize, nu: usize) -> f64 {
    let q = 1.0 / (nu as f64 + 0.5);
    ((1.0 - q) / (q * n as f64 - 1.0)).max(1e-3)
}

fn in_level_set(w: &[f64], nu: usize) -> bool {
    let inv = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    inv >= nu as f64 && inv < (nu + 1) as f64
}

fn top_sum(w: &[f64], nu: usize) -> f64 {
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[..nu].iter().sum()
}

/// Result of [`brute_force_min_phi`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceMin {
    pub min_value: f64,
    pub argmin: OrderedSimplexPoint,
    /// Samples that landed in `A_nu`.
    pub feasible_samples: usize,
    /// Best value among the raw samples, before local refinement.
    pub best_sampled: f64,
}

/// Minimizes `phi_nu` over `A_nu` without using the closed form.
///
/// Draws `budget` Dirichlet points (alternating the uniform Dirichlet(1) with
/// a concentration aimed at the `A_nu` shell), keeps those that fall in
/// `A_nu`, and refines the best one by derivative-free coordinate descent:
/// pairwise mass transfers plus the three-coordinate exchange
/// `x = e_1 + t e_i - (1 + t) e_j` (`i <= nu < j`), which is tangent to the
/// sphere `|w| = const`. After each move the point is pulled radially back
/// into the shell if it left it. Step sizes halve over 40 rounds.
pub fn brute_force_min_phi(n: usize, nu: usize, budget: usize, seed: u64) -> Result<BruteForceMin> {
    check_extremal(n, nu)?;
    if n > ORACLE_MAX_N {
        return domain(format!("brute force is limited to n <= {ORACLE_MAX_N}, got {n}"));
    }
    if budget < ORACLE_MIN_BUDGET {
        return domain(format!("budget must be at least {ORACLE_MIN_BUDGET}, got {budget}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shell_alpha = shell_concentration(n, nu);
    let mut raw = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible = 0usize;
    for draw in 0..budget {
        let alpha = if draw % 2 == 0 { 1.0 } else { shell_alpha };
        sample_dirichlet(&mut rng, alpha, &mut raw, &mut w);
        if !in_level_set(&w, nu) {
            continue;
        }
        feasible += 1;
        let v = top_sum(&w, nu);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, w.clone()));
        }
    }
    let (best_sampled, start) = best.ok_or(Error::InfeasibleRegion { n, nu })?;
    let (min_value, argmin) = refine(start, nu);
    Ok(BruteForceMin {
        min_value: min_value.min(best_sampled),
        argmin: OrderedSimplexPoint::from_unsorted(argmin)?,
        feasible_samples: feasible,
        best_sampled,
    })
}

/// Radially moves `w` (about the center) into the shell `A_nu` if needed.
/// Returns `None` if the result is infeasible.
fn project_into_shell(mut w: Vec<f64>, nu: usize) -> Option<Vec<f64>> {
    if w.iter().any(|x| *x < 0.0) {
        return None;
    }
    let n = w.len();
    let c = 1.0 / n as f64;
    let d2: f64 = w.iter().map(|x| (x - c) * (x - c)).sum();
    let outer = radius_sq(n, nu);
    let inner = radius_sq(n, nu + 1);
    let target = if d2 <= inner {
        inner + (outer - inner) * 1e-9
    } else if d2 > outer {
        outer
    } else {
        return in_level_set(&w, nu).then_some(w);
    };
    if d2 == 0.0 {
        return None;
    }
    let scale = (target / d2).sqrt();
    for x in w.iter_mut() {
        *x = c + scale * (*x - c);
    }
    (w.iter().all(|x| *x >= 0.0) && in_level_set(&w, nu)).then_some(w)
}

fn refine(start: Vec<f64>, nu: usize) -> (f64, Vec<f64>) {
    let n = start.len();
    let mut w = start;
    w.sort_by(|a, b| b.total_cmp(a));
    let mut value = top_sum(&w, nu);
    let mut step = 0.25;
    for _round in 0..40 {
        for _iter in 0..10_000 {
            let mut improved = false;
            for dir in directions(&w, nu) {
                let cand: Vec<f64> = w.iter().zip(&dir).map(|(x, d)| x + step * d).collect();
                let Some(mut cand) = project_into_shell(cand, nu) else {
                    continue;
                };
                let v = top_sum(&cand, nu);
                if v < value - 1e-16 {
                    cand.sort_by(|a, b| b.total_cmp(a));
                    w = cand;
                    value = v;
                    improved = true;
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        step *= 0.5;
    }
    debug_assert_eq!(w.len(), n);
    (value, w)
}

/// Candidate move directions at a sorted point `w`.
fn directions(w: &[f64], nu: usize) -> Vec<Vec<f64>> {
    let n = w.len();
    let mut dirs = Vec::with_capacity(n * n + nu * n);
    // three-coordinate exchange, largest first: it is the descent direction
    // that keeps |w| fixed to first order
    for i in 1..nu {
        for j in nu..n {
            if w[i] <= w[j] {
                continue;
            }
            let t = (w[j] - w[0]) / (w[i] - w[j]);
            let mut d = vec![0.0; n];
            d[0] = 1.0;
            d[i] = t;
            d[j] = -(1.0 + t);
            let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            d.iter_mut().for_each(|x| *x /= scale);
            dirs.push(d);
        }
    }
    for from in 0..n {
        for to in 0..n {
            if from != to {
                let mut d = vec![0.0; n];
                d[from] = -1.0;
                d[to] = 1.0;
                dirs.push(d);
            }
        }
    }
    dirs
}

/// One row of [`verify_proposition`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRow {
    pub n: usize,
    pub nu: usize,
    pub closed_form: f64,
    pub brute_force_min: f64,
    pub phi_at_extremal: f64,
    pub feasible_samples: usize,
    /// Brute-force minimum never undercuts the closed form (by more than 1e-9).
    pub lower_bound_ok: bool,
    /// Brute-force minimum comes within 1e-3 of the closed form.
    pub tightness_ok: bool,
    /// `phi_nu(p_nu)` equals the closed form within 1e-12.
    pub extremal_value_ok: bool,
    /// `p_nu` lies in the closure of `A_nu`.
    pub extremal_in_closure_ok: bool,
    pub error: Option<String>,
}

impl VerificationRow {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.lower_bound_ok
            && self.tightness_ok
            && self.extremal_value_ok
            && self.extremal_in_closure_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub n: usize,
    pub budget: usize,
    pub seed: u64,
    pub rows: Vec<VerificationRow>,
}

impl VerificationReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.passed()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.failures() == 0
    }
}

/// Checks the closed-form infimum of `phi_nu` over `A_nu` for every `nu` in
/// `nus` against the brute-force oracle and the extremal point. Each `nu` gets
/// its own seed stream; rows come back in `nus` order.
pub fn verify_proposition(n: usize, nus: &[usize], budget: usize, seed: u64) -> Result<VerificationReport> {
    if n > ORACLE_MAX_N || n < 3 {
        return domain(format!("verification needs 3 <= n <= {ORACLE_MAX_N}, got {n}"));
    }
    let rows = nus
        .par_iter()
        .map(|&nu| verify_cell(n, nu, budget, cell_seed(seed, n, nu)))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport {
        n,
        budget,
        seed,
        rows,
    })
}

fn cell_seed(seed: u64, n: usize, nu: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((n as u64) << 32 | nu as u64)
}

fn verify_cell(n: usize, nu: usize, budget: usize, seed: u64) -> Result<VerificationRow> {
    let closed_form = tight_lower_bound(n, nu)?;
    let p = extremal_point(n, nu)?;
    let phi_at_extremal = phi(&p, nu)?;
    let inv = 1.0 / p.weights().iter().map(|x| x * x).sum::<f64>();
    let extremal_in_closure_ok =
        inv >= nu as f64 - 1e-9 && inv <= (nu + 1) as f64 + 1e-9;
    let mut row = VerificationRow {
        n,
        nu,
        closed_form,
        brute_force_min: f64::NAN,
        phi_at_extremal,
        feasible_samples: 0,
        lower_bound_ok: false,
        tightness_ok: false,
        extremal_value_ok: (phi_at_extremal - closed_form).abs() <= 1e-12,
        extremal_in_closure_ok,
        error: None,
    };
    match brute_force_min_phi(n, nu, budget, seed) {
        Ok(bf) => {
            row.brute_force_min = bf.min_value;
            row.feasible_samples = bf.feasible_samples;
            row.lower_bound_ok = bf.min_value >= closed_form - 1e-9;
            row.tightness_ok = bf.min_value <= closed_form + 1e-3;
        }
        Err(Error::InfeasibleRegion { .. }) => {
            row.error = Some("no feasible sample within budget".into());
        }
        Err(e) => return Err(e),
    }
    Ok(row)
}

/// Statistics of one `(n, nu)` cell of the retained-mass certification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationCell {
    pub n: usize,
    pub nu: usize,
    pub samples: usize,
    pub draws: usize,
    pub tight_bound: f64,
    /// Smallest observed `s_eff - tight_bound`.
    pub min_slack: f64,
    pub violations: usize,
}

/// Draws random score vectors of length `n` until `samples` of them have
/// effective number `nu`, runs the pruning rule on each, and records how
/// close the retained mass gets to the tight lower bound. Scores are gamma
/// draws with random signs, so their normalisation is a Dirichlet point; the
/// concentration alternates around the value that centers the `A_nu` shell.
pub fn certify_tight_bound(n: usize, nu: usize, samples: usize, seed: u64) -> Result<CertificationCell> {
    if n < 3 || nu < 2 || nu >= n {
        return domain(format!("certification needs 2 <= nu < n, got n = {n}, nu = {nu}"));
    }
    let tight = tight_lower_bound(n, nu)?;
    let base = shell_concentration(n, nu);
    let alphas = [base * 0.5, base, base * 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut cell = CertificationCell {
        n,
        nu,
        samples: 0,
        draws: 0,
        tight_bound: tight,
        min_slack: f64::INFINITY,
        violations: 0,
    };
    let max_draws = samples.saturating_mul(1000).max(1_000_000);
    while cell.samples < samples {
        if cell.draws >= max_draws {
            return Err(Error::InfeasibleRegion { n, nu });
        }
        let alpha = alphas[cell.draws % alphas.len()];
        cell.draws += 1;
        sample_dirichlet(&mut rng, alpha, &mut raw, &mut w);
        for r in raw.iter_mut() {
            if rng.random::<bool>() {
                *r = -*r;
            }
        }
        let d = emp_decide(&ScoreVector::new(raw.clone())?, 1.0)?;
        if d.n_eff != nu {
            continue;
        }
        cell.samples += 1;
        let slack = d.s_eff - tight;
        cell.min_slack = cell.min_slack.min(slack);
        if slack < -1e-12 {
            cell.violations += 1;
        }
    }
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{effective_number, normalize, SimplexPoint};
    use approx::assert_abs_diff_eq;

    #[test]
    fn barycenter_examples() {
        assert_eq!(barycenter(4, 1).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(barycenter(4, 4).unwrap(), vec![0.25; 4]);
        assert_eq!(barycenter(3, 2).unwrap(), vec![0.5, 0.5, 0.0]);
        assert!(barycenter(3, 0).is_err());
        assert!(barycenter(3, 4).is_err());
    }

    #[test]
    fn context_radii() {
        for n in 2..30 {
            let ctx = GeometryContext::new(n).unwrap();
            assert_eq!(ctx.radius(n), 0.0);
            assert_abs_diff_eq!(ctx.radius(1), (1.0 - 1.0 / n as f64).sqrt(), epsilon = 1e-15);
            assert!((1..n).all(|nu| ctx.radius(nu) > ctx.radius(nu + 1)));
        }
        assert!(GeometryContext::new(1).is_err());
    }

    #[test]
    fn membership_examples() {
        let ctx = GeometryContext::new(4).unwrap();
        for nu in 1..=4 {
            assert_eq!(
                ball_membership(ctx.barycenter(nu), nu, &ctx).unwrap(),
                Membership::Boundary
            );
        }
        for nu in 1..4 {
            assert_eq!(ball_membership(ctx.center(), nu, &ctx).unwrap(), Membership::Inside);
        }
        assert_eq!(
            ball_membership(&[1.0, 0.0, 0.0, 0.0], 2, &ctx).unwrap(),
            Membership::Outside
        );
        assert!(matches!(
            ball_membership(&[0.5, 0.0, 0.0, 0.0], 2, &ctx),
            Err(Error::NotOnHyperplane(_))
        ));
    }

    #[test]
    fn vertices_relative_to_balls() {
        // b_[1..nu-1] outside B_nu, b_[nu] on it, b_[nu+1..n] inside
        let n = 9;
        let ctx = GeometryContext::new(n).unwrap();
        for nu in 1..=n {
            for j in 1..=n {
                let m = ball_membership(ctx.barycenter(j), nu, &ctx).unwrap();
                let expected = match j.cmp(&nu) {
                    std::cmp::Ordering::Less => Membership::Outside,
                    std::cmp::Ordering::Equal => Membership::Boundary,
                    std::cmp::Ordering::Greater => Membership::Inside,
                };
                assert_eq!(m, expected, "nu = {nu}, j = {j}");
            }
        }
    }

    #[test]
    fn extremal_examples() {
        let p = extremal_point(4, 2).unwrap();
        let q = extremal_point_coordinates(4, 2).unwrap();
        let expected = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for ((a, b), e) in p.weights().iter().zip(q.weights()).zip(expected) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-12);
            assert_abs_diff_eq!(*b, e, epsilon = 1e-12);
        }
        let p = extremal_point(3, 2).unwrap();
        for x in p.weights() {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-15);
        }
        let p = extremal_point_coordinates(5, 3).unwrap();
        assert_abs_diff_eq!(p.weights()[0], 0.4, epsilon = 1e-15);
        for x in &p.weights()[1..] {
            assert_abs_diff_eq!(*x, 0.15, epsilon = 1e-15);
        }
        assert!(extremal_point(4, 1).is_err());
        assert!(extremal_point(4, 4).is_err());
    }

    #[test]
    fn extremal_point_sits_on_next_ball() {
        for n in 3..40 {
            for nu in 2..n {
                let p = extremal_point(n, nu).unwrap();
                let c = barycenter(n, n).unwrap();
                assert_abs_diff_eq!(dist_sq(p.weights(), &c), radius_sq(n, nu + 1), epsilon = 1e-12);
                let inv = 1.0 / p.weights().iter().map(|x| x * x).sum::<f64>();
                assert_abs_diff_eq!(inv, (nu + 1) as f64, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn phi_examples() {
        let w = OrderedSimplexPoint::new(vec![0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]).unwrap();
        assert_abs_diff_eq!(phi(&w, 2).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi(&w, 4).unwrap(), 1.0, epsilon = 1e-15);
        let c = OrderedSimplexPoint::new(vec![0.2; 5]).unwrap();
        for k in 1..=5 {
            assert_abs_diff_eq!(phi(&c, k).unwrap(), k as f64 / 5.0, epsilon = 1e-15);
        }
        assert!(phi(&c, 0).is_err());
        assert!(phi(&c, 6).is_err());
        // phi_nu(w) = nu * <w, b_[nu]>
        let b2 = barycenter(4, 2).unwrap();
        assert_abs_diff_eq!(phi(&w, 2).unwrap(), 2.0 * dot(w.weights(), &b2), epsilon = 1e-15);
    }

    #[test]
    fn ordered_point_validation() {
        assert!(OrderedSimplexPoint::new(vec![0.2, 0.8]).is_err());
        assert!(OrderedSimplexPoint::from_unsorted(vec![0.2, 0.8]).is_ok());
        assert!(OrderedSimplexPoint::new(vec![0.6, 0.6]).is_err());
    }

    #[test]
    fn sorting_preserves_effective_number() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut raw, mut w) = (vec![0.0; 7], vec![0.0; 7]);
        for _ in 0..2000 {
            sample_dirichlet(&mut rng, 0.7, &mut raw, &mut w);
            let p = SimplexPoint::new(w.clone()).unwrap();
            let sorted = p.sorted();
            assert!(sorted.weights().windows(2).all(|x| x[0] >= x[1]));
            assert_eq!(effective_number(&p), effective_number(&sorted));
        }
    }

    #[test]
    fn brute_force_examples() {
        let bf = brute_force_min_phi(4, 2, ORACLE_MIN_BUDGET, 0).unwrap();
        assert!(bf.min_value >= 2.0 / 3.0 - 1e-9);
        assert!(bf.min_value <= 2.0 / 3.0 + 1e-4, "{}", bf.min_value);

        let bf = brute_force_min_phi(5, 2, ORACLE_MIN_BUDGET, 1).unwrap();
        assert!(bf.min_value >= 0.644949 - 1e-6 - 1e-9);
        assert!(bf.min_value >= tight_lower_bound(5, 2).unwrap() - 1e-9);

        let bf = brute_force_min_phi(3, 2, ORACLE_MIN_BUDGET, 2).unwrap();
        assert!(bf.min_value >= 2.0 / 3.0 - 1e-9);
        for x in bf.argmin.weights() {
            assert!((x - 1.0 / 3.0).abs() < 1e-2, "{:?}", bf.argmin);
        }
    }

    #[test]
    fn brute_force_rejects_bad_arguments() {
        assert!(brute_force_min_phi(13, 2, ORACLE_MIN_BUDGET, 0).is_err());
        assert!(brute_force_min_phi(5, 2, 10, 0).is_err());
        assert!(brute_force_min_phi(5, 5, ORACLE_MIN_BUDGET, 0).is_err());
    }

    #[test]
    fn verification_small() {
        let r = verify_proposition(4, &[2, 3], ORACLE_MIN_BUDGET, 0).unwrap();
        assert!(r.all_passed(), "{r:#?}");
        let r = verify_proposition(3, &[2], ORACLE_MIN_BUDGET, 0).unwrap();
        assert!(r.all_passed(), "{r:#?}");
        assert!((r.rows[0].brute_force_min - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn projection_keeps_points_in_shell() {
        let p = project_into_shell(vec![0.25; 4], 2);
        // the center cannot be moved radially
        assert!(p.is_none());
        let w = normalize(&ScoreVector::new(vec![5.0, 1.0, 1.0, 1.0]).unwrap()).unwrap();
        let p = project_into_shell(w.weights().to_vec(), 2).unwrap();
        assert!(in_level_set(&p, 2));
    }

    #[test]
    fn certification_cell_smoke() {
        let c = certify_tight_bound(6, 3, 5_000, 9).unwrap();
        assert_eq!(c.samples, 5_000);
        assert_eq!(c.violations, 0);
        assert!(c.min_slack >= -1e-12);
    }
}
