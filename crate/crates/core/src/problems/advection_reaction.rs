//! Linear advection-reaction system on the unit interval: `u` advects to the
//! right with unit speed against a time-dependent inflow value while a fast
//! linear reaction couples `u` and `v` (which does not advect). Advection is
//! discretized by fourth-order central differences inside the domain and
//! third-order biased stencils at the edges.
//!
//! State layout: `(u_1, v_1, ..., u_N, v_N, t)` on the nodes `x_i = i/N`,
//! `i = 1..=N`; the boundary node carries the prescribed inflow value. The
//! split system is affine, so smooth starting derivatives of any order
//! follow from the recursion `y^(k+1) = L y^(k) + b^(k)(t0)`.

use crate::integrator::SplitProblem;
use crate::problems::fd::derivative_dirichlet_left;

pub const K1: f64 = 1e6;
pub const K2: f64 = 2e6;
pub const S1: f64 = 0.0;
pub const S2: f64 = 1.0;
pub const ALPHA1: f64 = 1.0;

/// Inflow value `1 - sin(12 t)^4`, written through its cosine expansion so
/// arbitrary derivatives have closed form.
pub fn inflow(t: f64) -> f64 {
    0.625 + 0.5 * (24.0 * t).cos() - 0.125 * (48.0 * t).cos()
}

/// k-th derivative of the inflow value, `k >= 1`.
pub fn inflow_derivative(k: usize, t: f64) -> f64 {
    let shift = k as f64 * std::f64::consts::FRAC_PI_2;
    0.5 * 24f64.powi(k as i32) * (24.0 * t + shift).cos()
        - 0.125 * 48f64.powi(k as i32) * (48.0 * t + shift).cos()
}

fn advection(u_nodes: &[f64], boundary: f64, dx: f64, out: &mut [f64]) {
    derivative_dirichlet_left(u_nodes, boundary, dx, out);
    for d in out.iter_mut() {
        *d = -ALPHA1 * *d;
    }
}

/// Builds the split problem on `n` intervals (`n + 1` nodes).
pub fn advection_reaction(n: usize) -> SplitProblem {
    assert!(n >= 8, "need at least 8 intervals");
    let dx = 1.0 / n as f64;
    let dim = 2 * n + 1;

    let mut y0 = vec![0.0; dim];
    for i in 1..=n {
        let x = i as f64 * dx;
        let u = 1.0 + S2 * x;
        y0[2 * (i - 1)] = u;
        y0[2 * (i - 1) + 1] = (K1 * u + S2) / K2;
    }

    let unpack_u = move |y: &[f64]| -> Vec<f64> { (0..n).map(|i| y[2 * i]).collect() };

    let f = move |y: &[f64], out: &mut [f64]| {
        let t = y[2 * n];
        let u = unpack_u(y);
        let mut du = vec![0.0; n];
        advection(&u, inflow(t), dx, &mut du);
        for i in 0..n {
            out[2 * i] = du[i];
            out[2 * i + 1] = 0.0;
        }
        out[2 * n] = 1.0;
    };

    let g = move |y: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let (u, v) = (y[2 * i], y[2 * i + 1]);
            out[2 * i] = -K1 * u + K2 * v + S1;
            out[2 * i + 1] = K1 * u - K2 * v + S2;
        }
        out[2 * n] = 0.0;
    };

    let jac = move |_y: &[f64], jac: &mut crate::integrator::BlockDiag| {
        for b in 0..n {
            let d = &mut jac.data[4 * b..4 * b + 4];
            d[0] = -K1;
            d[1] = K2;
            d[2] = K1;
            d[3] = -K2;
        }
        // trailing clock block stays zero
        if jac.dim % 2 == 1 {
            jac.data[4 * n] = 0.0;
        }
    };

    // Smooth derivatives at t0 = 0 by the affine recursion
    // y^(k+1) = L y^(k) + b^(k)(0), with L = advection + linear reaction.
    // The first level uses the initial relation k2 v - k1 u = s2 directly:
    // evaluating the reaction of the equilibrium data in floating point
    // would leave cancellation noise of size eps*k1 that the recursion then
    // amplifies by the fast reaction rate at every level.
    let y0_for_derivs = y0.clone();
    let derivatives = move |k: usize| -> Vec<f64> {
        let mut d = y0_for_derivs.clone();
        for level in 0..k {
            let mut next = vec![0.0; dim];
            let u: Vec<f64> = (0..n).map(|i| d[2 * i]).collect();
            let boundary = if level == 0 {
                inflow(0.0)
            } else {
                inflow_derivative(level, 0.0)
            };
            let mut du = vec![0.0; n];
            advection(&u, boundary, dx, &mut du);
            if level == 0 {
                for i in 0..n {
                    next[2 * i] = du[i] + S2 + S1;
                    next[2 * i + 1] = 0.0;
                }
                next[2 * n] = 1.0;
            } else {
                for i in 0..n {
                    let (uu, vv) = (d[2 * i], d[2 * i + 1]);
                    next[2 * i] = du[i] - K1 * uu + K2 * vv;
                    next[2 * i + 1] = K1 * uu - K2 * vv;
                }
            }
            d = next;
        }
        d
    };

    SplitProblem {
        name: format!("advection-reaction(N={n})"),
        dim,
        physical_dim: 2 * n,
        t0: 0.0,
        t_end: 1.0,
        y0,
        f: Box::new(f),
        g: Box::new(g),
        jac_block: 2,
        jac_g: Some(Box::new(jac)),
        derivatives: Some(Box::new(derivatives)),
        exact: None,
    }
}
