//! Strong-stability-preservation certification of the explicit part.
//!
//! Feasibility of a stepsize ratio `gamma` is characterized by four
//! componentwise nonnegativity conditions on combinations of the explicit
//! coefficient matrices. For a fixed method the feasible set is an interval
//! `[0, C]`, so the SSP coefficient is certified by bisection rather than by
//! nonlinear programming.

use crate::tableau::Tableau;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Componentwise slack allowed in the nonnegativity checks; absorbs the
/// 16-digit truncation of published coefficients. Exact zero entries occur
/// at the optimum (forward Euler has `1 - gamma = 0` at `gamma = 1`).
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Certified SSP coefficient with the bracket that proves it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SspCertificate {
    pub method: String,
    /// Certified coefficient; equals `gamma_feasible`.
    pub coefficient: f64,
    /// Effective coefficient `C / s`.
    pub effective: f64,
    /// Largest gamma verified feasible.
    pub gamma_feasible: f64,
    /// Smallest gamma verified infeasible.
    pub gamma_infeasible: f64,
    /// Bracket width `gamma_infeasible - gamma_feasible`.
    pub tolerance: f64,
    /// Set when even `gamma = 0` is infeasible (then `C = 0`).
    pub infeasible_at_zero: bool,
}

/// Checks the four feasibility conditions at a given `gamma`:
/// `(I+gA)^{-1}U >= 0`, `I - (I+gA)^{-1} >= 0`, `V - gB(I+gA)^{-1}U >= 0`
/// and `gB(I+gA)^{-1} >= 0`, all componentwise with slack `tol`.
pub fn spijker_feasible(t: &Tableau, gamma: f64, tol: f64) -> bool {
    let s = t.s;
    let identity = DMatrix::<f64>::identity(s, s);
    // I + gamma A is unit lower triangular, hence always invertible.
    let m = (&identity + gamma * &t.a)
        .try_inverse()
        .expect("unit lower triangular matrix");
    let c1 = &m * &t.u;
    let c2 = &identity - &m;
    let c3 = &t.v - gamma * &t.b * &m * &t.u;
    let c4 = gamma * &t.b * &m;
    [c1, c2, c3, c4].iter().all(|mat| mat.min() >= -tol)
}

/// Certifies the SSP coefficient of the explicit part by bisection on the
/// feasibility interval. The initial bracket `[0, 2s]` is doubled until
/// infeasible.
pub fn ssp_coefficient(t: &Tableau, bracket_tol: f64) -> SspCertificate {
    if !spijker_feasible(t, 0.0, FEASIBILITY_TOL) {
        return SspCertificate {
            method: t.name.clone(),
            coefficient: 0.0,
            effective: 0.0,
            gamma_feasible: 0.0,
            gamma_infeasible: 0.0,
            tolerance: 0.0,
            infeasible_at_zero: true,
        };
    }
    let mut lo = 0.0_f64;
    let mut hi = 2.0 * t.s as f64;
    while spijker_feasible(t, hi, FEASIBILITY_TOL) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            break;
        }
    }
    while hi - lo > bracket_tol {
        let mid = 0.5 * (lo + hi);
        if spijker_feasible(t, mid, FEASIBILITY_TOL) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    SspCertificate {
        method: t.name.clone(),
        coefficient: lo,
        effective: lo / t.s as f64,
        gamma_feasible: lo,
        gamma_infeasible: hi,
        tolerance: hi - lo,
        infeasible_at_zero: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::catalog;
    use approx::assert_relative_eq;

    #[test]
    fn forward_euler_feasibility() {
        // The explicit part of the order-1 pair is forward Euler: feasible
        // exactly up to gamma = 1, where V - gB(I+gA)^{-1}U = 1 - gamma.
        let t = catalog("DIMSIM1A").unwrap();
        assert!(spijker_feasible(&t, 1.0, FEASIBILITY_TOL));
        assert!(!spijker_feasible(&t, 1.5, FEASIBILITY_TOL));
    }

    #[test]
    fn dimsim2a_table_bracket() {
        let t = catalog("DIMSIM2A").unwrap();
        assert!(spijker_feasible(&t, 1.38, FEASIBILITY_TOL));
        assert!(!spijker_feasible(&t, 1.45, FEASIBILITY_TOL));
    }

    #[test]
    fn euler_pair_coefficient_is_one() {
        for name in ["DIMSIM1A", "DIMSIM1L"] {
            let cert = ssp_coefficient(&catalog(name).unwrap(), 1e-10);
            assert_relative_eq!(cert.coefficient, 1.0, epsilon = 1e-8);
            assert_relative_eq!(cert.effective, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn catalog_coefficients_match_published_values() {
        for (name, expected) in [
            ("DIMSIM2A", 1.38),
            ("DIMSIM2L", 1.17),
            ("DIMSIM3A", 0.99),
            ("DIMSIM3L", 0.85),
            ("DIMSIM4A", 0.51),
        ] {
            let t = catalog(name).unwrap();
            let cert = ssp_coefficient(&t, 1e-8);
            assert!(
                (cert.coefficient - expected).abs() <= 0.01,
                "{name}: C = {:.4}, expected {expected} +/- 0.01",
                cert.coefficient
            );
            assert_relative_eq!(cert.effective, cert.coefficient / t.s as f64);
            assert!(cert.gamma_feasible <= cert.coefficient);
            assert!(cert.coefficient <= cert.gamma_infeasible);
            assert!(cert.tolerance <= 1e-8);
        }
    }

    #[test]
    fn feasibility_is_monotone_on_gamma_grid() {
        // Once infeasible, larger gamma stays infeasible: the bisection is
        // justified by the feasible set being an interval.
        for name in crate::tableau::CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let mut seen_infeasible = false;
            for k in -30..=20 {
                let gamma = 10f64.powf(k as f64 / 10.0);
                let ok = spijker_feasible(&t, gamma, FEASIBILITY_TOL);
                if seen_infeasible {
                    assert!(!ok, "{name}: feasibility regained at gamma = {gamma}");
                }
                if !ok {
                    seen_infeasible = true;
                }
            }
        }
    }
}
