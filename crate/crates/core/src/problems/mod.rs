//! Benchmark split problems: the scalar linear test equation, a smooth
//! nonlinear stiff-relaxation problem with known solution, and the three
//! semidiscretized transport problems. All problems are autonomous; time
//! dependence enters through an augmented clock component.

pub mod advection_reaction;
pub mod adsorption;
pub mod fd;
pub mod shallow_water;
pub mod weno;

pub use advection_reaction::advection_reaction;
pub use adsorption::adsorption_desorption;
pub use shallow_water::shallow_water;

use crate::error::{Error, Result};
use crate::integrator::SplitProblem;
use num_complex::Complex64;

/// Uniform spatial grid on `[0, 1]` with `n` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub n: usize,
    pub dx: f64,
    pub boundary: BoundaryKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    DirichletLeft,
    Periodic,
}

impl Grid1D {
    pub fn unit(n: usize, boundary: BoundaryKind) -> Self {
        Grid1D {
            n,
            dx: 1.0 / n as f64,
            boundary,
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }
}

/// Complex multiplication as a real 2x2 block.
fn rot(lambda: Complex64) -> [f64; 4] {
    [lambda.re, -lambda.im, lambda.im, lambda.re]
}

fn apply(block: &[f64; 4], x: f64, y: f64) -> (f64, f64) {
    (block[0] * x + block[1] * y, block[2] * x + block[3] * y)
}

/// Scalar linear test equation `y' = lambda0 y + lambda1 y` with the
/// non-stiff part `lambda0 y` and the stiff part `lambda1 y`, realified to
/// two components so the parameters may be complex. Exact solution
/// `exp((lambda0 + lambda1) t) y0` with `y0 = 1`.
pub fn test_equation(lambda0: Complex64, lambda1: Complex64) -> SplitProblem {
    test_equation_span(lambda0, lambda1, 1.0)
}

pub fn test_equation_span(lambda0: Complex64, lambda1: Complex64, t_end: f64) -> SplitProblem {
    let r0 = rot(lambda0);
    let r1 = rot(lambda1);
    let total = lambda0 + lambda1;
    let y0 = vec![1.0, 0.0];
    let exact = move |t: f64| -> Vec<f64> {
        let z = (total * t).exp();
        vec![z.re, z.im]
    };
    let derivatives = move |k: usize| -> Vec<f64> {
        let z = total.powu(k as u32);
        vec![z.re, z.im]
    };
    SplitProblem {
        name: "test".to_string(),
        dim: 2,
        physical_dim: 2,
        t0: 0.0,
        t_end,
        y0,
        f: Box::new(move |y, out| {
            let (a, b) = apply(&r0, y[0], y[1]);
            out[0] = a;
            out[1] = b;
        }),
        g: Box::new(move |y, out| {
            let (a, b) = apply(&r1, y[0], y[1]);
            out[0] = a;
            out[1] = b;
        }),
        jac_block: 2,
        jac_g: Some(Box::new(move |_y, jac| {
            jac.data[..4].copy_from_slice(&r1);
        })),
        derivatives: Some(Box::new(derivatives)),
        exact: Some(Box::new(exact)),
    }
}

/// Smooth nonlinear stiff relaxation with known solution `y(t) = cos t`:
/// the stiff part `mu (y - cos t) + (y - cos t)^2` vanishes on the solution
/// and attracts with rate `|mu|`, the non-stiff part is `-sin t`. State is
/// `(y, t)`.
pub fn stiff_relaxation(mu: f64, t_end: f64) -> SplitProblem {
    let derivatives = move |k: usize| -> Vec<f64> {
        // d^k cos at 0 cycles (1, 0, -1, 0); clock derivative is 1 at k = 1
        let y = match k % 4 {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        };
        let tau = if k == 1 { 1.0 } else { 0.0 };
        vec![y, tau]
    };
    SplitProblem {
        name: "stiff-relaxation".to_string(),
        dim: 2,
        physical_dim: 1,
        t0: 0.0,
        t_end,
        y0: vec![1.0, 0.0],
        f: Box::new(|y, out| {
            out[0] = -y[1].sin();
            out[1] = 1.0;
        }),
        g: Box::new(move |y, out| {
            let d = y[0] - y[1].cos();
            out[0] = mu * d + d * d;
            out[1] = 0.0;
        }),
        jac_block: 2,
        jac_g: Some(Box::new(move |y, jac| {
            let d = y[0] - y[1].cos();
            jac.data[0] = mu + 2.0 * d;
            jac.data[1] = (mu + 2.0 * d) * y[1].sin();
            jac.data[2] = 0.0;
            jac.data[3] = 0.0;
        })),
        derivatives: Some(Box::new(derivatives)),
        exact: Some(Box::new(|t| vec![t.cos(), t])),
    }
}

/// Problem registry used by the command line.
#[derive(Debug, Clone)]
pub struct ProblemParams {
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub lambda0: Complex64,
    pub lambda1: Complex64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams {
            n: None,
            epsilon: None,
            lambda0: Complex64::new(0.0, 0.0),
            lambda1: Complex64::new(-1.0, 0.0),
        }
    }
}

pub const PROBLEM_NAMES: [&str; 5] = [
    "test",
    "stiff-relaxation",
    "advection-reaction",
    "adsorption-desorption",
    "shallow-water",
];

pub fn by_name(name: &str, params: &ProblemParams) -> Result<SplitProblem> {
    match name {
        "test" => Ok(test_equation(params.lambda0, params.lambda1)),
        "stiff-relaxation" => Ok(stiff_relaxation(-1e6, 2.0)),
        "advection-reaction" => Ok(advection_reaction(params.n.unwrap_or(400))),
        "adsorption-desorption" => Ok(adsorption_desorption(params.n.unwrap_or(100))),
        "shallow-water" => Ok(shallow_water(
            params.n.unwrap_or(201),
            params.epsilon.unwrap_or(1e-8),
        )),
        other => Err(Error::UnknownMethod(format!("problem {other}"))),
    }
}
