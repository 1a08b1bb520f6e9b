//! Adsorption-desorption transport: `u` advects with a time-dependent,
//! sign-changing velocity while a very fast source exchanges mass between
//! `u` and the adsorbed phase `v`. Advection uses the upwind fifth-order
//! non-oscillatory derivative with ghost values prescribed on the inflow
//! side and extrapolated on the outflow side.
//!
//! State layout: `(u_0, v_0, ..., u_N, v_N, t)` on the nodes `x_i = i/N`.

use crate::integrator::SplitProblem;
use crate::problems::weno::{upwind_derivative, WenoBoundary};

pub const KAPPA: f64 = 1e6;
pub const K1: f64 = 50.0;
pub const K2: f64 = 100.0;
pub const T_END: f64 = 1.25;

/// Advection velocity: positive (adsorption phase) until `t = 1`, negative
/// (desorption) afterwards.
pub fn velocity(t: f64) -> f64 {
    -(100.0 * (t - 1.0)).atan() / std::f64::consts::PI
}

/// Inflow value at the left boundary during the adsorption phase.
pub fn inflow(t: f64) -> f64 {
    1.0 - (6.0 * std::f64::consts::PI * t).cos().powi(2)
}

fn phi(u: f64) -> f64 {
    K1 * u / (1.0 + K2 * u)
}

fn phi_prime(u: f64) -> f64 {
    K1 / (1.0 + K2 * u).powi(2)
}

/// Builds the split problem on `n` intervals (`n + 1` nodes, all evolved;
/// inflow enters through ghost values).
pub fn adsorption_desorption(n: usize) -> SplitProblem {
    assert!(n >= 16, "need at least 16 intervals");
    let nodes = n + 1;
    let dx = 1.0 / n as f64;
    let dim = 2 * nodes + 1;
    let mut y0 = vec![0.0; dim];
    y0[2 * nodes] = 0.0; // clock starts at zero, u = v = 0

    let f = move |y: &[f64], out: &mut [f64]| {
        let t = y[2 * nodes];
        let a = velocity(t);
        let u: Vec<f64> = (0..nodes).map(|i| y[2 * i]).collect();
        let bc = if a >= 0.0 {
            WenoBoundary::Ghost {
                left: [inflow(t); 3],
                right: [u[nodes - 1]; 3],
            }
        } else {
            WenoBoundary::Ghost {
                left: [u[0]; 3],
                right: [0.0; 3],
            }
        };
        let mut du = vec![0.0; nodes];
        upwind_derivative(&u, a >= 0.0, &bc, dx, &mut du);
        for i in 0..nodes {
            out[2 * i] = -a * du[i];
            out[2 * i + 1] = 0.0;
        }
        out[2 * nodes] = 1.0;
    };

    let g = move |y: &[f64], out: &mut [f64]| {
        for i in 0..nodes {
            let (u, v) = (y[2 * i], y[2 * i + 1]);
            let exchange = KAPPA * (v - phi(u));
            out[2 * i] = exchange;
            out[2 * i + 1] = -exchange;
        }
        out[2 * nodes] = 0.0;
    };

    let jac = move |y: &[f64], jac: &mut crate::integrator::BlockDiag| {
        for b in 0..nodes {
            let u = y[2 * b];
            let d = &mut jac.data[4 * b..4 * b + 4];
            d[0] = -KAPPA * phi_prime(u);
            d[1] = KAPPA;
            d[2] = KAPPA * phi_prime(u);
            d[3] = -KAPPA;
        }
        if jac.dim % 2 == 1 {
            jac.data[4 * nodes] = 0.0;
        }
    };

    SplitProblem {
        name: format!("adsorption-desorption(N={n})"),
        dim,
        physical_dim: 2 * nodes,
        t0: 0.0,
        t_end: T_END,
        y0,
        f: Box::new(f),
        g: Box::new(g),
        jac_block: 2,
        jac_g: Some(Box::new(jac)),
        derivatives: None,
        exact: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::Counters;

    #[test]
    fn velocity_phases() {
        assert!(velocity(0.0) > 0.0, "adsorption phase at start");
        assert!(velocity(0.5) > 0.0);
        assert!(velocity(T_END) < 0.0, "desorption phase at the end");
    }

    #[test]
    fn source_vanishes_at_zero_state() {
        // phi(0) = 0, so the exchange term vanishes on the zero initial data
        let prob = adsorption_desorption(20);
        let mut g = vec![0.0; prob.dim];
        let mut counters = Counters::default();
        prob.eval_g(&prob.y0, &mut g, &mut counters);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stiff_block_eigenvalues_are_large() {
        // per-node Jacobian has eigenvalues {0, -kappa (1 + phi'(u))}: at
        // u = 0 that is -kappa (1 + k1)
        let prob = adsorption_desorption(20);
        let mut jac = crate::integrator::BlockDiag::zeros(prob.dim, 2);
        let mut counters = Counters::default();
        prob.fill_jacobian(&prob.y0, &mut jac, &mut counters);
        let d = &jac.data[0..4];
        let trace = d[0] + d[3];
        let det = d[0] * d[3] - d[1] * d[2];
        assert!(det.abs() < 1e-3, "one eigenvalue is zero, det = {det}");
        let expected = -KAPPA * (1.0 + phi_prime(0.0));
        assert!(
            (trace - expected).abs() < 1e-6 * expected.abs(),
            "trace {trace} vs {expected}"
        );
        assert!(trace.abs() >= 1e6);
    }

    #[test]
    fn jacobian_consistent_with_finite_differences() {
        let n = 20;
        let prob = adsorption_desorption(n);
        // probe at a structured nonzero state
        let mut y = prob.y0.clone();
        for i in 0..=n {
            y[2 * i] = 0.01 + 0.002 * i as f64;
            y[2 * i + 1] = 0.005 * (i as f64).sin().abs();
        }
        let mut analytic = crate::integrator::BlockDiag::zeros(prob.dim, 2);
        let mut counters = Counters::default();
        prob.fill_jacobian(&y, &mut analytic, &mut counters);
        let fd_prob = SplitProblem {
            jac_g: None,
            ..adsorption_desorption(n)
        };
        let mut fd = crate::integrator::BlockDiag::zeros(prob.dim, 2);
        fd_prob.fill_jacobian(&y, &mut fd, &mut counters);
        for (a, b) in analytic.data.iter().zip(&fd.data) {
            let scale = KAPPA;
            assert!((a - b).abs() / scale < 1e-6, "{a} vs {b}");
        }
    }
}
