//! Closed-form bounds on the retained mass `s_eff` and on the loss change of
//! a magnitude-pruned network.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

fn check_n_nu(n: usize, nu: usize) -> Result<()> {
    if n < 2 {
        return domain(format!("n must be at least 2, got {n}"));
    }
    if nu < 1 || nu > n {
        return domain(format!("nu must lie in 1..={n}, got {nu}"));
    }
    Ok(())
}

fn check_interior(n: usize, nu: usize) -> Result<()> {
    check_n_nu(n, nu)?;
    if nu < 2 || nu >= n {
        return domain(format!("nu must lie in 2..{n}, got {nu}"));
    }
    Ok(())
}

/// `nu / n`: the retained mass can never fall below it.
pub fn trivial_lower_bound(n: usize, nu: usize) -> Result<f64> {
    check_n_nu(n, nu)?;
    Ok(nu as f64 / n as f64)
}

/// Infimum of `s_eff` over all score vectors of length `n` whose effective
/// number is `nu`:
///
/// `nu/n + ((n - nu)/n) * sqrt((n - nu - 1) / ((nu + 1)(n - 1)))`
///
/// with `1/2` at `nu = 1` and `1` at `nu = n`.
pub fn tight_lower_bound(n: usize, nu: usize) -> Result<f64> {
    check_n_nu(n, nu)?;
    if nu == n {
        return Ok(1.0);
    }
    if nu == 1 {
        return Ok(0.5);
    }
    let (nf, vf) = (n as f64, nu as f64);
    let radical = ((nf - vf - 1.0) / ((vf + 1.0) * (nf - 1.0))).sqrt();
    Ok(vf / nf + (nf - vf) / nf * radical)
}

/// Exact upper bound on `1 - s_eff` for `2 <= nu < n`; equals
/// `1 - tight_lower_bound(n, nu)`.
pub fn exact_gap_bound(n: usize, nu: usize) -> Result<f64> {
    check_interior(n, nu)?;
    let (nf, vf) = (n as f64, nu as f64);
    let radical = ((nf - vf - 1.0) / ((vf + 1.0) * (nf - 1.0))).sqrt();
    Ok((nf - vf) / nf * (1.0 - radical))
}

/// Large-`n` approximation of [`exact_gap_bound`]:
/// `((n - nu)/n) * (1 - sqrt((n - nu) / (n nu)))`.
pub fn approx_upper_gap(n: usize, nu: usize) -> Result<f64> {
    check_interior(n, nu)?;
    let (nf, vf) = (n as f64, nu as f64);
    Ok((nf - vf) / nf * (1.0 - ((nf - vf) / (nf * vf)).sqrt()))
}

/// All retained-mass bounds for one `(n, nu)` cell, optionally against an
/// observed `s_eff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub nu: usize,
    pub trivial_bound: f64,
    pub tight_bound: f64,
    /// `1 - approx_upper_gap`; only defined for `2 <= nu < n`.
    pub approx_bound: Option<f64>,
    pub observed_s_eff: Option<f64>,
    /// `observed - tight`.
    pub slack: Option<f64>,
}

impl BoundReport {
    pub fn new(n: usize, nu: usize, observed_s_eff: Option<f64>) -> Result<Self> {
        let trivial_bound = trivial_lower_bound(n, nu)?;
        let tight_bound = tight_lower_bound(n, nu)?;
        let approx_bound = approx_upper_gap(n, nu).ok().map(|g| 1.0 - g);
        Ok(Self {
            n,
            nu,
            trivial_bound,
            tight_bound,
            approx_bound,
            observed_s_eff,
            slack: observed_s_eff.map(|o| o - tight_bound),
        })
    }
}

/// One row of a `nu` sweep for fixed `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu: usize,
    pub trivial: f64,
    pub tight: f64,
    /// `1 - tight`.
    pub gap: f64,
}

/// Bounds for every `nu` in `1..=n`.
pub fn sweep(n: usize) -> Result<Vec<SweepRow>> {
    check_n_nu(n, 1)?;
    (1..=n)
        .map(|nu| {
            let tight = tight_lower_bound(n, nu)?;
            Ok(SweepRow {
                nu,
                trivial: nu as f64 / n as f64,
                tight,
                gap: 1.0 - tight,
            })
        })
        .collect()
}

/// Inputs to the loss-change bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBoundInputs {
    /// Kept fraction `k / n`, in `(0, 1)`.
    pub rho: f64,
    pub n: usize,
    /// `||theta*||_1`.
    pub theta_l1: f64,
    /// Trace of the loss Hessian at the trained parameters.
    pub trace_h: f64,
    /// `||theta* - theta^k||_2^2`.
    pub delta_theta_sq: Option<f64>,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        domain(format!("rho must lie in (0, 1), got {rho}"))
    }
}

/// `eps <= (1 - rho) / (2 n rho) * Tr(H) * ||theta* - theta^k||^2`.
pub fn epsilon_bound_lemma(inp: &LossBoundInputs) -> Result<f64> {
    let delta_sq = inp.delta_theta_sq.ok_or(Error::MissingDeltaTheta)?;
    check_rho(inp.rho)?;
    if inp.n == 0 {
        return domain("n must be positive");
    }
    if inp.trace_h < 0.0 || delta_sq < 0.0 {
        return domain("Tr(H) and the displacement norm must be nonnegative");
    }
    Ok((1.0 - inp.rho) / (2.0 * inp.n as f64 * inp.rho) * inp.trace_h * delta_sq)
}

/// Asymptotic loss-change bound
/// `||theta*||_1^2 Tr(H) (1 - rho)^4 / (2 rho) * (1 - sqrt((1 - rho)/(n rho)))^2`.
pub fn epsilon_bound_asymptotic(inp: &LossBoundInputs) -> Result<f64> {
    check_rho(inp.rho)?;
    if inp.n < 2 {
        return domain(format!("n must be at least 2, got {}", inp.n));
    }
    let rho = inp.rho;
    let shape = (1.0 - rho).powi(4) / (2.0 * rho)
        * (1.0 - ((1.0 - rho) / (inp.n as f64 * rho)).sqrt()).powi(2);
    Ok(inp.theta_l1 * inp.theta_l1 * inp.trace_h * shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn inputs(rho: f64, n: usize, theta_l1: f64, trace_h: f64, d: Option<f64>) -> LossBoundInputs {
        LossBoundInputs {
            rho,
            n,
            theta_l1,
            trace_h,
            delta_theta_sq: d,
        }
    }

    #[test]
    fn tight_bound_examples() {
        assert_abs_diff_eq!(tight_lower_bound(4, 2).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tight_lower_bound(4, 3).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(
            tight_lower_bound(5, 2).unwrap(),
            0.4 + 0.6 * (1.0f64 / 6.0).sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(tight_lower_bound(5, 2).unwrap(), 0.644949, epsilon = 1e-6);
        for n in 2..50 {
            assert_eq!(tight_lower_bound(n, n).unwrap(), 1.0);
            assert_eq!(tight_lower_bound(n, 1).unwrap(), 0.5);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(tight_lower_bound(1, 1).is_err());
        assert!(tight_lower_bound(4, 0).is_err());
        assert!(tight_lower_bound(4, 5).is_err());
        assert!(exact_gap_bound(4, 4).is_err());
        assert!(exact_gap_bound(4, 1).is_err());
        assert!(approx_upper_gap(4, 4).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_abs_diff_eq!(approx_upper_gap(1000, 500).unwrap(), 0.5 * (1.0 - 0.001f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(approx_upper_gap(1000, 500).unwrap(), 0.484189, epsilon = 1e-6);
        assert_abs_diff_eq!(approx_upper_gap(4, 2).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(exact_gap_bound(4, 2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(exact_gap_bound(4, 3).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn approx_gap_decreases_towards_n() {
        // The gap rises from nu = 2 to an interior peak, then falls to ~0
        // as nu approaches n; the upper half is always on the falling side.
        for n in [10usize, 100, 1000] {
            let gaps: Vec<f64> = (n / 2..n).map(|nu| approx_upper_gap(n, nu).unwrap()).collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "n = {n}");
            assert!(*gaps.last().unwrap() < 1.0 / n as f64);
        }
    }

    #[test]
    fn exact_gap_curve_at_1000() {
        // Shape of the N = 1000 curve: ~0.578 at nu = 2, a dip to a minimum
        // near nu ~ 100, then a rise to 1 at nu = n, always above nu / n.
        let rows = sweep(1000).unwrap();
        assert_eq!(rows.len(), 1000);
        assert_abs_diff_eq!(rows[1].tight, 0.578, epsilon = 1e-3);
        let (argmin, _) = rows
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.tight.total_cmp(&b.1.tight))
            .unwrap();
        assert!((50..200).contains(&(argmin + 1)), "minimum at nu = {}", argmin + 1);
        assert!(rows[argmin..].windows(2).all(|w| w[1].tight > w[0].tight));
        assert!(rows.iter().all(|r| r.tight >= r.trivial));
        let g200 = exact_gap_bound(1000, 200).unwrap();
        assert!(g200 > 0.0 && g200 < 0.8);
        assert_abs_diff_eq!(g200, 1.0 - tight_lower_bound(1000, 200).unwrap(), epsilon = 1e-12);
        assert!(rows[199].tight > rows[199].trivial);
    }

    #[test]
    fn report_fields() {
        let r = BoundReport::new(4, 2, Some(0.8)).unwrap();
        assert_eq!(r.trivial_bound, 0.5);
        assert_abs_diff_eq!(r.tight_bound, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.approx_bound.unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(r.slack.unwrap(), 0.8 - 2.0 / 3.0, epsilon = 1e-15);
        assert!(BoundReport::new(4, 4, None).unwrap().approx_bound.is_none());
    }

    #[test]
    fn lemma_bound_examples() {
        // (1 - 0.5) / (2 * 100 * 0.5) * 10 * 4 = 0.005 * 40
        let v = epsilon_bound_lemma(&inputs(0.5, 100, 0.0, 10.0, Some(4.0))).unwrap();
        assert_abs_diff_eq!(v, 0.2, epsilon = 1e-15);
        assert_eq!(epsilon_bound_lemma(&inputs(0.5, 100, 0.0, 10.0, Some(0.0))).unwrap(), 0.0);
        let near_one = epsilon_bound_lemma(&inputs(1.0 - 1e-12, 100, 0.0, 10.0, Some(4.0))).unwrap();
        assert!(near_one < 1e-12);
        assert!(matches!(
            epsilon_bound_lemma(&inputs(0.5, 100, 0.0, 10.0, None)),
            Err(Error::MissingDeltaTheta)
        ));
        assert!(epsilon_bound_lemma(&inputs(1.0, 100, 0.0, 10.0, Some(1.0))).is_err());
        assert!(epsilon_bound_lemma(&inputs(0.0, 100, 0.0, 10.0, Some(1.0))).is_err());
    }

    #[test]
    fn asymptotic_bound_examples() {
        let v = epsilon_bound_asymptotic(&inputs(0.5, 1000, 1.0, 1.0, None)).unwrap();
        assert_abs_diff_eq!(v, 0.0625 * (1.0 - 0.001f64.sqrt()).powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.058610, epsilon = 1e-6);
        let v = epsilon_bound_asymptotic(&inputs(0.2, 1000, 1.0, 1.0, None)).unwrap();
        assert_abs_diff_eq!(v, 0.8986, epsilon = 1e-4);
        let v = epsilon_bound_asymptotic(&inputs(1.0 - 1e-4, 1000, 1.0, 1.0, None)).unwrap();
        assert!(v < 1e-15);
        // prefactor scales linearly in Tr(H) and quadratically in ||theta||_1
        let base = epsilon_bound_asymptotic(&inputs(0.3, 1000, 1.0, 1.0, None)).unwrap();
        let scaled = epsilon_bound_asymptotic(&inputs(0.3, 1000, 2.0, 3.0, None)).unwrap();
        assert_abs_diff_eq!(scaled, 12.0 * base, epsilon = 1e-14);
    }
}
