//! One-dimensional shallow water flow with stiff velocity relaxation: mass
//! and momentum advect through fifth-order non-oscillatory flux differences
//! while the source drives the momentum toward the equilibrium `hv = h^2/2`
//! on the relaxation scale `epsilon`. Periodic on the unit interval.
//!
//! State layout: `(h_0, hv_0, ..., h_{N-1}, hv_{N-1})` at `x_i = i/N`.
//!
//! Starting derivatives deliberately follow the smooth (relaxed) solution:
//! the exact solution leaves the equilibrium manifold through an initial
//! layer of width `epsilon` whose time derivatives blow up like
//! `epsilon^(1-k)`, so differentiating the reduced equilibrium dynamics is
//! the correct input for the starting vector.

use crate::integrator::SplitProblem;
use crate::problems::weno::{lf_flux_divergence, WenoBoundary};
use std::sync::OnceLock;

/// Spacing of the stencil used to differentiate the reduced trajectory.
const DERIV_SPACING: f64 = 1.25e-3;
/// Reduced-system integration substeps per stencil node.
const DERIV_SUBSTEPS: usize = 4;
/// Highest starting derivative provided.
const MAX_DERIV: usize = 4;

fn initial_height(x: f64) -> f64 {
    1.0 + 0.2 * (8.0 * std::f64::consts::PI * x).sin()
}

/// Flux divergence of the convective part at the given `(h, hv)` arrays.
fn convective_divergence(h: &[f64], hv: &[f64], dx: f64, div_h: &mut [f64], div_hv: &mut [f64]) {
    let n = h.len();
    let alpha = h
        .iter()
        .map(|&hi| (1.0 + hi).sqrt())
        .fold(0.0_f64, f64::max);
    let flux2: Vec<f64> = h.iter().map(|&hi| hi + 0.5 * hi * hi).collect();
    lf_flux_divergence(
        hv,
        h,
        alpha,
        &WenoBoundary::Periodic,
        &WenoBoundary::Periodic,
        dx,
        div_h,
    );
    lf_flux_divergence(
        &flux2,
        hv,
        alpha,
        &WenoBoundary::Periodic,
        &WenoBoundary::Periodic,
        dx,
        div_hv,
    );
    debug_assert_eq!(div_h.len(), n);
}

/// Builds the split problem on `n` periodic points with relaxation scale
/// `epsilon`.
pub fn shallow_water(n: usize, epsilon: f64) -> SplitProblem {
    assert!(n >= 16, "need at least 16 points");
    assert!(epsilon > 0.0);
    let dx = 1.0 / n as f64;
    let dim = 2 * n;

    let mut y0 = vec![0.0; dim];
    for i in 0..n {
        let h = initial_height(i as f64 * dx);
        y0[2 * i] = h;
        y0[2 * i + 1] = 0.5 * h * h;
    }

    let f = move |y: &[f64], out: &mut [f64]| {
        let h: Vec<f64> = (0..n).map(|i| y[2 * i]).collect();
        let hv: Vec<f64> = (0..n).map(|i| y[2 * i + 1]).collect();
        if h.iter().any(|&hi| hi <= 0.0) {
            // physics violation: poison the output so the step fails
            out.fill(f64::NAN);
            return;
        }
        let mut div_h = vec![0.0; n];
        let mut div_hv = vec![0.0; n];
        convective_divergence(&h, &hv, dx, &mut div_h, &mut div_hv);
        for i in 0..n {
            out[2 * i] = -div_h[i];
            out[2 * i + 1] = -div_hv[i];
        }
    };

    let g = move |y: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let (h, hv) = (y[2 * i], y[2 * i + 1]);
            out[2 * i] = 0.0;
            out[2 * i + 1] = (0.5 * h * h - hv) / epsilon;
        }
    };

    let jac = move |y: &[f64], jac: &mut crate::integrator::BlockDiag| {
        for b in 0..n {
            let h = y[2 * b];
            let d = &mut jac.data[4 * b..4 * b + 4];
            d[0] = 0.0;
            d[1] = 0.0;
            d[2] = h / epsilon;
            d[3] = -1.0 / epsilon;
        }
    };

    // Reduced-system bootstrap: integrate h' = -d/dx(h^2/2) (the height
    // component of the convective divergence on the equilibrium manifold)
    // with the classical fourth-order one-step method, then differentiate
    // the full equilibrium states on the stencil grid.
    let h0: Vec<f64> = (0..n).map(|i| initial_height(i as f64 * dx)).collect();
    let cache: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let derivatives = move |k: usize| -> Vec<f64> {
        assert!(k <= MAX_DERIV, "starting derivatives available up to order {MAX_DERIV}");
        let table = cache.get_or_init(|| {
            let reduced_rhs = |h: &[f64]| -> Vec<f64> {
                let hv: Vec<f64> = h.iter().map(|&x| 0.5 * x * x).collect();
                let mut div_h = vec![0.0; n];
                let mut div_hv = vec![0.0; n];
                convective_divergence(h, &hv, dx, &mut div_h, &mut div_hv);
                div_h.iter().map(|&d| -d).collect()
            };
            let tau = DERIV_SPACING / DERIV_SUBSTEPS as f64;
            let n_nodes = MAX_DERIV + 7;
            let mut h = h0.clone();
            let mut node_states: Vec<Vec<f64>> = Vec::with_capacity(n_nodes);
            let full_state = |h: &[f64]| -> Vec<f64> {
                let mut s = vec![0.0; 2 * n];
                for i in 0..n {
                    s[2 * i] = h[i];
                    s[2 * i + 1] = 0.5 * h[i] * h[i];
                }
                s
            };
            node_states.push(full_state(&h));
            for _ in 1..n_nodes {
                for _ in 0..DERIV_SUBSTEPS {
                    let k1 = reduced_rhs(&h);
                    let h2: Vec<f64> = h.iter().zip(&k1).map(|(a, b)| a + 0.5 * tau * b).collect();
                    let k2 = reduced_rhs(&h2);
                    let h3: Vec<f64> = h.iter().zip(&k2).map(|(a, b)| a + 0.5 * tau * b).collect();
                    let k3 = reduced_rhs(&h3);
                    let h4: Vec<f64> = h.iter().zip(&k3).map(|(a, b)| a + tau * b).collect();
                    let k4 = reduced_rhs(&h4);
                    for i in 0..n {
                        h[i] += tau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    }
                }
                node_states.push(full_state(&h));
            }
            (0..=MAX_DERIV)
                .map(|order| {
                    let w = crate::integrator::fornberg_weights(n_nodes, order, DERIV_SPACING);
                    let mut d = vec![0.0; 2 * n];
                    for (j, wj) in w.iter().enumerate() {
                        for (x, &v) in d.iter_mut().zip(&node_states[j]) {
                            *x += wj * v;
                        }
                    }
                    d
                })
                .collect()
        });
        table[k].clone()
    };

    SplitProblem {
        name: format!("shallow-water(N={n},eps={epsilon:.1e})"),
        dim,
        physical_dim: dim,
        t0: 0.0,
        t_end: 0.1,
        y0,
        f: Box::new(f),
        g: Box::new(g),
        jac_block: 2,
        jac_g: Some(Box::new(jac)),
        derivatives: Some(Box::new(derivatives)),
        exact: None,
    }
}
