//! Fixed-step integration of split systems `y' = f(y) + g(y)` with the
//! method pairs of this crate: explicit accumulation of the non-stiff part,
//! a modified-Newton solve per stage for the stiff part, external-stage
//! update, and the starting and finishing procedures.
//!
//! Problems are autonomous by convention; time-dependent right-hand sides
//! augment the state with a clock component inside the problem definition.

use crate::error::{Error, Result};
use crate::tableau::Tableau;
use serde::{Deserialize, Serialize};

/// Block-diagonal matrix with an optional smaller trailing block, the shape
/// of every stiff Jacobian in this crate (reaction and relaxation terms act
/// per node; an augmented clock contributes a trailing 1x1 zero block).
#[derive(Debug, Clone)]
pub struct BlockDiag {
    pub block: usize,
    pub dim: usize,
    /// Concatenated row-major blocks; full blocks first, then the remainder.
    pub data: Vec<f64>,
}

impl BlockDiag {
    pub fn zeros(dim: usize, block: usize) -> Self {
        let full = dim / block;
        let rem = dim % block;
        BlockDiag {
            block,
            dim,
            data: vec![0.0; full * block * block + rem * rem],
        }
    }

    fn block_ranges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (state offset, data offset, size)
        let full = self.dim / self.block;
        let rem = self.dim % self.block;
        (0..full)
            .map(move |b| (b * self.block, b * self.block * self.block, self.block))
            .chain((rem > 0).then(|| (full * self.block, full * self.block * self.block, rem)))
    }
}

/// LU factors of `I - scale * J` for a block-diagonal `J`, with partial
/// pivoting per block.
#[derive(Debug, Clone)]
pub struct BlockLu {
    shape: BlockDiag,
    pivots: Vec<usize>,
}

impl BlockLu {
    pub fn factor(jac: &BlockDiag, scale: f64) -> Result<Self> {
        let mut shape = jac.clone();
        let mut pivots = vec![0usize; jac.dim];
        for (state_off, data_off, k) in jac.block_ranges() {
            let m = &mut shape.data[data_off..data_off + k * k];
            // form I - scale * J in place
            for i in 0..k {
                for j in 0..k {
                    let v = -scale * m[i * k + j];
                    m[i * k + j] = if i == j { 1.0 + v } else { v };
                }
            }
            // dense LU with partial pivoting
            for col in 0..k {
                let mut p = col;
                for row in (col + 1)..k {
                    if m[row * k + col].abs() > m[p * k + col].abs() {
                        p = row;
                    }
                }
                if m[p * k + col].abs() < 1e-300 {
                    return Err(Error::SingularMatrix("stage Newton matrix".into()));
                }
                if p != col {
                    for j in 0..k {
                        m.swap(col * k + j, p * k + j);
                    }
                }
                pivots[state_off + col] = p;
                let inv = 1.0 / m[col * k + col];
                for row in (col + 1)..k {
                    let factor = m[row * k + col] * inv;
                    m[row * k + col] = factor;
                    for j in (col + 1)..k {
                        m[row * k + j] -= factor * m[col * k + j];
                    }
                }
            }
        }
        Ok(BlockLu { shape, pivots })
    }

    pub fn solve_in_place(&self, v: &mut [f64]) {
        for (state_off, data_off, k) in self.shape.block_ranges() {
            let m = &self.shape.data[data_off..data_off + k * k];
            let x = &mut v[state_off..state_off + k];
            for col in 0..k {
                let p = self.pivots[state_off + col];
                if p != col {
                    x.swap(col, p);
                }
                for row in (col + 1)..k {
                    x[row] -= m[row * k + col] * x[col];
                }
            }
            for col in (0..k).rev() {
                x[col] /= m[col * k + col];
                for row in 0..col {
                    x[row] -= m[row * k + col] * x[col];
                }
            }
        }
    }
}

/// Work counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Counters {
    pub f_evals: u64,
    pub g_evals: u64,
    pub newton_iters: u64,
    pub factorizations: u64,
    pub jacobian_evals: u64,
}

type RhsFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type JacFn = Box<dyn Fn(&[f64], &mut BlockDiag) + Send + Sync>;
type DerivFn = Box<dyn Fn(usize) -> Vec<f64> + Send + Sync>;
type ExactFn = Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A split initial value problem. `f` is the non-stiff part, `g` the stiff
/// part with block-diagonal Jacobian structure of width `jac_block`.
pub struct SplitProblem {
    pub name: String,
    pub dim: usize,
    /// Leading components that carry physical meaning; error norms ignore
    /// the rest (an augmented clock).
    pub physical_dim: usize,
    pub t0: f64,
    pub t_end: f64,
    pub y0: Vec<f64>,
    pub f: RhsFn,
    pub g: RhsFn,
    pub jac_block: usize,
    /// Analytic Jacobian of `g`; a central finite-difference fallback fills
    /// the blocks when absent.
    pub jac_g: Option<JacFn>,
    /// Smooth time derivatives `y^(k)(t0)` for the exact starting mode.
    pub derivatives: Option<DerivFn>,
    /// Exact (or trusted reference) solution.
    pub exact: Option<ExactFn>,
}

impl SplitProblem {
    pub fn eval_f(&self, y: &[f64], out: &mut [f64], counters: &mut Counters) {
        (self.f)(y, out);
        counters.f_evals += 1;
    }

    pub fn eval_g(&self, y: &[f64], out: &mut [f64], counters: &mut Counters) {
        (self.g)(y, out);
        counters.g_evals += 1;
    }

    /// Fills the block-diagonal Jacobian of `g`, analytically when provided,
    /// otherwise by blockwise central differences (all blocks share column
    /// structure, so one probe pair per in-block column suffices).
    pub fn fill_jacobian(&self, y: &[f64], jac: &mut BlockDiag, counters: &mut Counters) {
        counters.jacobian_evals += 1;
        if let Some(j) = &self.jac_g {
            j(y, jac);
            return;
        }
        let n = self.dim;
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        let mut gp = vec![0.0; n];
        let mut gm = vec![0.0; n];
        for col in 0..self.jac_block {
            let mut any = false;
            for (state_off, _, k) in jac.block_ranges() {
                if col < k {
                    let idx = state_off + col;
                    let step = 1e-7 * (1.0 + y[idx].abs());
                    yp[idx] = y[idx] + step;
                    ym[idx] = y[idx] - step;
                    any = true;
                }
            }
            if !any {
                continue;
            }
            self.eval_g(&yp, &mut gp, counters);
            self.eval_g(&ym, &mut gm, counters);
            let ranges: Vec<_> = jac.block_ranges().collect();
            for (state_off, data_off, k) in ranges {
                if col >= k {
                    continue;
                }
                let idx = state_off + col;
                let step = yp[idx] - y[idx];
                for row in 0..k {
                    jac.data[data_off + row * k + col] =
                        (gp[state_off + row] - gm[state_off + row]) / (2.0 * step);
                }
                yp[idx] = y[idx];
                ym[idx] = y[idx];
            }
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// Scaled discrete L2 distance over the physical components.
pub fn error_norm(a: &[f64], b: &[f64], physical_dim: usize) -> f64 {
    let m = physical_dim.min(a.len()).min(b.len());
    let sum: f64 = (0..m).map(|i| (a[i] - b[i]).powi(2)).sum();
    (sum / m as f64).sqrt()
}

/// Integration state: the external stage blocks, the most recent internal
/// stages, and the running solution estimate (the last stage, whose
/// abscissa is 1).
#[derive(Debug, Clone)]
pub struct StepperState {
    pub t: f64,
    pub h: f64,
    pub y_ext: Vec<Vec<f64>>,
    pub stages: Vec<Vec<f64>>,
    pub solution: Vec<f64>,
    pub steps_taken: usize,
    pub counters: Counters,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// Absolute residual tolerance; `None` derives
    /// `max(min(1e-12, h^(p+1)), floor)` per run.
    pub tol: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iters: 25,
            tol: None,
        }
    }
}

/// How the starting vector is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartMode {
    /// Problem-supplied smooth derivatives at `t0`.
    ExactDerivatives,
    /// Short auxiliary integrations at stepsize `h/100` differentiated
    /// numerically; self-contained but less accurate than supplied
    /// derivatives, adequate up to moderate orders.
    ReferenceBootstrap,
    /// Exact derivatives when available, bootstrap otherwise.
    Auto,
}

/// The stepper: owns the Newton cache for one (tableau, problem) pairing.
pub struct Stepper<'p> {
    pub tableau: Tableau,
    pub problem: &'p SplitProblem,
    pub newton: NewtonOptions,
    jac: BlockDiag,
    jac_norm: f64,
    lu: Option<BlockLu>,
    lu_scale: f64,
    jac_fresh: bool,
}

impl<'p> Stepper<'p> {
    pub fn new(tableau: Tableau, problem: &'p SplitProblem, newton: NewtonOptions) -> Self {
        let jac = BlockDiag::zeros(problem.dim, problem.jac_block);
        Stepper {
            tableau,
            problem,
            newton,
            jac,
            jac_norm: 0.0,
            lu: None,
            lu_scale: f64::NAN,
            jac_fresh: false,
        }
    }

    fn refresh_jacobian(&mut self, y: &[f64], counters: &mut Counters) {
        self.problem.fill_jacobian(y, &mut self.jac, counters);
        self.jac_fresh = true;
        // max absolute row sum, used for the residual noise floor
        let mut norm = 0.0_f64;
        for (_, data_off, k) in self.jac.block_ranges().collect::<Vec<_>>() {
            for row in 0..k {
                let sum: f64 = (0..k)
                    .map(|col| self.jac.data[data_off + row * k + col].abs())
                    .sum();
                norm = norm.max(sum);
            }
        }
        self.jac_norm = norm;
    }

    fn newton_tol(&self, h: f64, scale: f64) -> f64 {
        match self.newton.tol {
            Some(t) => t,
            None => {
                let p = self.tableau.p as i32;
                let nominal = 1e-12_f64.min(h.powi(p + 1));
                nominal.max(32.0 * f64::EPSILON * (1.0 + scale))
            }
        }
    }

    /// Solves `Y = rhs + h*lambda*g(Y)` by modified Newton with Jacobian
    /// reuse; the factorization refreshes when the residual contraction
    /// stalls. Returns the solution and `g` evaluated there.
    pub fn newton_stage_solve(
        &mut self,
        h: f64,
        rhs: &[f64],
        guess: &[f64],
        counters: &mut Counters,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.problem.dim;
        let lambda = self.tableau.lambda;
        let scale_factor = h * lambda;
        let mut y = guess.to_vec();
        let mut g = vec![0.0; n];
        let mut residual = vec![0.0; n];
        let rhs_norm = inf_norm(rhs);
        let tol = self.newton_tol(h, rhs_norm);
        let mut prev_norm = f64::INFINITY;
        for iter in 0..=self.newton.max_iters {
            self.problem.eval_g(&y, &mut g, counters);
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("stiff right-hand side".into()));
            }
            for i in 0..n {
                residual[i] = y[i] - scale_factor * g[i] - rhs[i];
            }
            let rnorm = inf_norm(&residual);
            // the residual cannot be evaluated below the rounding noise of
            // its own terms; for strongly stiff g the dominant term is
            // h*lambda*J*y
            let y_norm = inf_norm(&y);
            let noise_floor = 32.0 * f64::EPSILON * (rhs_norm + y_norm)
                + 8.0 * f64::EPSILON * scale_factor.abs() * self.jac_norm * (1.0 + y_norm);
            if rnorm <= tol.max(noise_floor) {
                return Ok((y, g));
            }
            if iter == self.newton.max_iters {
                return Err(Error::NewtonDiverged {
                    iters: iter,
                    residual: rnorm,
                });
            }
            let stalled = rnorm > 0.5 * prev_norm;
            let needs_factor = self.lu.is_none() || self.lu_scale != scale_factor;
            if needs_factor || (stalled && !self.jac_fresh) {
                if self.lu.is_none() || (stalled && !self.jac_fresh) {
                    self.refresh_jacobian(&y, counters);
                }
                self.lu = Some(BlockLu::factor(&self.jac, scale_factor)?);
                self.lu_scale = scale_factor;
                counters.factorizations += 1;
            }
            let lu = self.lu.as_ref().expect("factorization present");
            lu.solve_in_place(&mut residual);
            for i in 0..n {
                y[i] -= residual[i];
            }
            counters.newton_iters += 1;
            // a negligible update means the iterate is at the attainable
            // accuracy even when the residual noise floor is underestimated
            if inf_norm(&residual) <= 4.0 * f64::EPSILON * (1.0 + inf_norm(&y)) {
                self.problem.eval_g(&y, &mut g, counters);
                return Ok((y, g));
            }
            prev_norm = rnorm;
        }
        unreachable!()
    }

    /// Advances one step. The order-1 pair composes forward Euler on `f`
    /// with an implicit one-leg stage on `g`; everything else runs the
    /// shared-stage scheme.
    pub fn step(&mut self, state: &mut StepperState) -> Result<()> {
        // stepping invalidates the Jacobian slowly; keep it but allow the
        // stall logic to refresh
        self.jac_fresh = false;
        if self.tableau.euler_split {
            self.step_euler_split(state)
        } else {
            self.step_shared(state)
        }
    }

    fn step_euler_split(&mut self, state: &mut StepperState) -> Result<()> {
        let n = self.problem.dim;
        let h = state.h;
        let y_prev = state.y_ext[0].clone();
        let mut f_val = vec![0.0; n];
        self.problem.eval_f(&y_prev, &mut f_val, &mut state.counters);
        if f_val.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("non-stiff right-hand side".into()));
        }
        let mut w = vec![0.0; n];
        for i in 0..n {
            w[i] = y_prev[i] + h * f_val[i];
        }
        let mut counters = state.counters;
        let (y_stage, g_at_stage) = self.newton_stage_solve(h, &w, &w, &mut counters)?;
        state.counters = counters;
        let mut y_new = vec![0.0; n];
        for i in 0..n {
            y_new[i] = w[i] + h * g_at_stage[i];
        }
        state.stages = vec![y_prev, y_stage];
        state.solution = y_new.clone();
        state.y_ext[0] = y_new;
        state.t += h;
        state.steps_taken += 1;
        Ok(())
    }

    fn step_shared(&mut self, state: &mut StepperState) -> Result<()> {
        let t = self.tableau.clone();
        let n = self.problem.dim;
        let (s, r) = (t.s, t.r);
        let h = state.h;
        let mut f_vals: Vec<Vec<f64>> = Vec::with_capacity(s);
        let mut g_vals: Vec<Vec<f64>> = Vec::with_capacity(s);
        let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
        for i in 0..s {
            let mut rhs = vec![0.0; n];
            for j in 0..r {
                let u_ij = t.u[(i, j)];
                if u_ij != 0.0 {
                    for (x, &e) in rhs.iter_mut().zip(&state.y_ext[j]) {
                        *x += u_ij * e;
                    }
                }
            }
            for j in 0..i {
                let (a_ij, as_ij) = (t.a[(i, j)], t.a_star[(i, j)]);
                for k in 0..n {
                    rhs[k] += h * (a_ij * f_vals[j][k] + as_ij * g_vals[j][k]);
                }
            }
            let guess = if i > 0 { stages[i - 1].clone() } else { rhs.clone() };
            let mut counters = state.counters;
            let (y_stage, g_stage) = self.newton_stage_solve(h, &rhs, &guess, &mut counters)?;
            state.counters = counters;
            let mut f_stage = vec![0.0; n];
            self.problem.eval_f(&y_stage, &mut f_stage, &mut state.counters);
            if f_stage.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("non-stiff right-hand side".into()));
            }
            f_vals.push(f_stage);
            g_vals.push(g_stage);
            stages.push(y_stage);
        }
        let mut y_new: Vec<Vec<f64>> = vec![vec![0.0; n]; r];
        for i in 0..r {
            for j in 0..r {
                let v_ij = t.v[(i, j)];
                if v_ij != 0.0 {
                    for (x, &e) in y_new[i].iter_mut().zip(&state.y_ext[j]) {
                        *x += v_ij * e;
                    }
                }
            }
            for j in 0..s {
                let (b_ij, bs_ij) = (t.b[(i, j)], t.b_star[(i, j)]);
                for k in 0..n {
                    y_new[i][k] += h * (b_ij * f_vals[j][k] + bs_ij * g_vals[j][k]);
                }
            }
        }
        state.solution = stages[s - 1].clone();
        state.stages = stages;
        state.y_ext = y_new;
        state.t += h;
        state.steps_taken += 1;
        Ok(())
    }
}

/// Builds the starting vector from smooth solution data at `t0`.
///
/// The external stages of the coupled pair carry a two-sided expansion in
/// which the non-stiff and stiff parts contribute separately, so no single
/// set of derivative weights reproduces it on split problems. Instead the
/// starting vector is read off the stage relation itself: with
/// `Y_i = y(t0 + c_i h)` accurate to `O(h^(p+1))`,
/// `y_ext = U^{-1} (Y - h A f(Y) - h A* g(Y))` makes the first step's
/// stages exact to the same order. Solution values at the abscissae come
/// from the Taylor polynomial of the supplied (or bootstrapped) smooth
/// derivatives.
pub fn start(
    tableau: &Tableau,
    problem: &SplitProblem,
    h: f64,
    mode: StartMode,
) -> Result<StepperState> {
    let mut counters = Counters::default();
    let y_ext = if tableau.euler_split {
        // the order-1 pair consumes the solution value itself
        vec![problem.y0.clone()]
    } else {
        let derivs = starting_derivatives(tableau, problem, h, mode)?;
        stage_consistent_blocks(tableau, problem, h, &derivs, &mut counters)?
    };
    Ok(StepperState {
        t: problem.t0,
        h,
        y_ext,
        stages: Vec::new(),
        solution: problem.y0.clone(),
        steps_taken: 0,
        counters,
    })
}

fn stage_consistent_blocks(
    tableau: &Tableau,
    problem: &SplitProblem,
    h: f64,
    derivs: &[Vec<f64>],
    counters: &mut Counters,
) -> Result<Vec<Vec<f64>>> {
    let n = problem.dim;
    let s = tableau.s;
    // Taylor values of the solution at the first step's abscissae
    let mut stage_values: Vec<Vec<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let ch = tableau.c[i] * h;
        let mut val = vec![0.0; n];
        let mut factor = 1.0;
        for (k, d) in derivs.iter().enumerate() {
            if k > 0 {
                factor *= ch / k as f64;
            }
            for (x, &dv) in val.iter_mut().zip(d) {
                *x += factor * dv;
            }
        }
        stage_values.push(val);
    }
    let mut rhs = stage_values.clone();
    let mut work = vec![0.0; n];
    for j in 0..s {
        problem.eval_f(&stage_values[j], &mut work, counters);
        for i in 0..s {
            let w = h * tableau.a[(i, j)];
            if w != 0.0 {
                for (x, &fv) in rhs[i].iter_mut().zip(&work) {
                    *x -= w * fv;
                }
            }
        }
        problem.eval_g(&stage_values[j], &mut work, counters);
        for i in 0..s {
            let w = h * tableau.a_star[(i, j)];
            if w != 0.0 {
                for (x, &gv) in rhs[i].iter_mut().zip(&work) {
                    *x -= w * gv;
                }
            }
        }
    }
    // y_ext = U^{-1} rhs, applied componentwise across the state
    let u_lu = tableau.u.clone().lu();
    let mut y_ext = vec![vec![0.0; n]; tableau.r];
    let mut col = nalgebra::DVector::<f64>::zeros(s);
    for comp in 0..n {
        for i in 0..s {
            col[i] = rhs[i][comp];
        }
        let sol = u_lu
            .solve(&col)
            .ok_or_else(|| Error::SingularMatrix("tableau U".into()))?;
        for i in 0..tableau.r {
            y_ext[i][comp] = sol[i];
        }
    }
    Ok(y_ext)
}

fn starting_derivatives(
    tableau: &Tableau,
    problem: &SplitProblem,
    h: f64,
    mode: StartMode,
) -> Result<Vec<Vec<f64>>> {
    let p = tableau.p;
    let use_exact = match mode {
        StartMode::ExactDerivatives => true,
        StartMode::ReferenceBootstrap => false,
        StartMode::Auto => problem.derivatives.is_some(),
    };
    if use_exact {
        let handle = problem
            .derivatives
            .as_ref()
            .ok_or(Error::MissingDerivatives)?;
        let mut out = vec![problem.y0.clone()];
        for k in 1..=p {
            out.push(handle(k));
        }
        return Ok(out);
    }
    bootstrap_derivatives(problem, h, p)
}

/// Self-contained starting derivatives: a short reference trajectory at
/// stepsize `h/100` (order-1 warmup ladder followed by the order-3 L-stable
/// method) differentiated by one-sided finite-difference stencils on a
/// coarser subgrid. Accuracy degrades with the derivative order; supplied
/// derivative handles are preferred when available.
fn bootstrap_derivatives(problem: &SplitProblem, h: f64, p: usize) -> Result<Vec<Vec<f64>>> {
    let n = problem.dim;
    let mut out = vec![problem.y0.clone()];
    if p == 0 {
        return Ok(out);
    }
    // first derivative directly from the split right-hand side
    let mut d1 = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut counters = Counters::default();
    problem.eval_f(&problem.y0, &mut d1, &mut counters);
    problem.eval_g(&problem.y0, &mut scratch, &mut counters);
    for (a, b) in d1.iter_mut().zip(&scratch) {
        *a += b;
    }
    out.push(d1);
    if p == 1 {
        return Ok(out);
    }

    // trajectory values on the stencil grid t0 + j*delta, j = 0..p+6
    let delta = h / 4.0;
    let n_nodes = p + 7;
    let h_boot = h / 100.0;
    let sub = (delta / h_boot).round() as usize;
    let warm = crate::tableau::catalog("DIMSIM1L").expect("catalog");
    let fine = crate::tableau::catalog("DIMSIM3L").expect("catalog");

    // warmup pass at h/200 provides first/second derivative estimates that
    // seed the order-3 pass
    let coarse_vals = short_trajectory(&warm, problem, h_boot / 2.0, 2 * sub, n_nodes, None)?;
    let warm_derivs = stencil_derivatives(&coarse_vals, delta, 2.min(p));
    let mut seed = vec![problem.y0.clone(), out[1].clone()];
    seed.extend(warm_derivs.into_iter().skip(2));
    let vals = short_trajectory(&fine, problem, h_boot, sub, n_nodes, Some(seed))?;
    let mut derivs = stencil_derivatives(&vals, delta, p);
    derivs[0] = problem.y0.clone();
    derivs[1] = out[1].clone();
    Ok(derivs)
}

/// Integrates `n_nodes - 1` spans of `sub` substeps each, returning the
/// solution at every span boundary (including `t0`).
fn short_trajectory(
    tableau: &Tableau,
    problem: &SplitProblem,
    h: f64,
    sub: usize,
    n_nodes: usize,
    seed_derivs: Option<Vec<Vec<f64>>>,
) -> Result<Vec<Vec<f64>>> {
    let mut state = match seed_derivs {
        // without a seed only order-1 tableaux are used here, whose
        // bootstrap needs nothing beyond the split right-hand side
        None => start(tableau, problem, h, StartMode::ReferenceBootstrap)?,
        Some(derivs) => {
            let mut counters = Counters::default();
            let y_ext = stage_consistent_blocks(
                tableau,
                problem,
                h,
                &derivs[..(tableau.p + 1).min(derivs.len())],
                &mut counters,
            )?;
            StepperState {
                t: problem.t0,
                h,
                y_ext,
                stages: Vec::new(),
                solution: problem.y0.clone(),
                steps_taken: 0,
                counters,
            }
        }
    };
    let mut stepper = Stepper::new(tableau.clone(), problem, NewtonOptions::default());
    let mut vals = vec![problem.y0.clone()];
    for _ in 1..n_nodes {
        for _ in 0..sub {
            stepper.step(&mut state)?;
        }
        vals.push(state.solution.clone());
    }
    Ok(vals)
}

/// One-sided finite-difference derivatives of orders `0..=p` from equally
/// spaced samples, using all available nodes (order of accuracy
/// `n_nodes - k`).
fn stencil_derivatives(vals: &[Vec<f64>], delta: f64, p: usize) -> Vec<Vec<f64>> {
    let n_nodes = vals.len();
    let dim = vals[0].len();
    let mut out = Vec::with_capacity(p + 1);
    for k in 0..=p {
        let w = fornberg_weights(n_nodes, k, delta);
        let mut d = vec![0.0; dim];
        for (j, wj) in w.iter().enumerate() {
            if *wj != 0.0 {
                for (x, &v) in d.iter_mut().zip(&vals[j]) {
                    *x += wj * v;
                }
            }
        }
        out.push(d);
    }
    out
}

/// Fornberg weights for the k-th derivative at the left end of a uniform
/// grid `0, delta, ..., (n-1)*delta`.
pub fn fornberg_weights(n: usize, k: usize, delta: f64) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|i| i as f64 * delta).collect();
    let z = 0.0;
    let mut c = vec![vec![0.0; k + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(k);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for s in (1..=mn).rev() {
                    c[i][s] = c1 * (s as f64 * c[i - 1][s - 1] - c5 * c[i - 1][s]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for s in (1..=mn).rev() {
                c[j][s] = (c4 * c[j][s] - s as f64 * c[j][s - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[k]).collect()
}

/// Returns the solution estimate at the current time: the last internal
/// stage of the most recent step (its abscissa is 1).
pub fn finish(state: &StepperState) -> Result<Vec<f64>> {
    if state.steps_taken == 0 {
        return Err(Error::NoStepTaken);
    }
    Ok(state.solution.clone())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub start_mode: StartMode,
    pub newton: NewtonOptions,
    /// Record the solution estimate after every step.
    pub store_trajectory: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            start_mode: StartMode::Auto,
            newton: NewtonOptions::default(),
            store_trajectory: false,
        }
    }
}

/// Outcome of a fixed-step run.
pub struct Run {
    pub times: Vec<f64>,
    pub trajectory: Vec<Vec<f64>>,
    pub final_solution: Vec<f64>,
    pub final_state: StepperState,
    pub counters: Counters,
}

/// Integrates over the problem's time span with constant stepsize `h`,
/// which must divide the span to rounding accuracy.
pub fn integrate(
    tableau: &Tableau,
    problem: &SplitProblem,
    h: f64,
    options: &IntegrateOptions,
) -> Result<Run> {
    let span = problem.t_end - problem.t0;
    if h <= 0.0 {
        return Err(Error::InvalidParameter("stepsize must be positive".into()));
    }
    let ratio = span / h;
    let n_steps = ratio.round();
    if (ratio - n_steps).abs() > 4.0 * f64::EPSILON * ratio.abs().max(1.0) || n_steps < 1.0 {
        return Err(Error::GridMismatch { t_span: span, h });
    }
    let n_steps = n_steps as usize;
    let mut state = start(tableau, problem, h, options.start_mode)?;
    let mut stepper = Stepper::new(tableau.clone(), problem, options.newton);
    let mut times = Vec::new();
    let mut trajectory = Vec::new();
    if options.store_trajectory {
        times.push(state.t);
        trajectory.push(problem.y0.clone());
    }
    for _ in 0..n_steps {
        stepper.step(&mut state)?;
        if options.store_trajectory {
            times.push(state.t);
            trajectory.push(state.solution.clone());
        }
    }
    let final_solution = finish(&state)?;
    Ok(Run {
        times,
        trajectory,
        final_solution,
        counters: state.counters,
        final_state: state,
    })
}

/// One row of a stepsize study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    /// Observed order against the previous (coarser) row.
    pub pairwise_order: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub method: String,
    pub problem: String,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log error` against `log h` over successful
    /// rows.
    pub observed_order: f64,
    /// Raised for the order-4 method, whose accuracy is sensitive to the
    /// starting procedure.
    pub start_sensitivity_flag: bool,
}

/// Reference terminal state: the exact solution when available, otherwise
/// self-convergence with the order-3 L-stable method at `h_min / 20`.
pub fn reference_solution(problem: &SplitProblem, h_min: f64) -> Result<Vec<f64>> {
    if let Some(exact) = &problem.exact {
        return Ok(exact(problem.t_end));
    }
    let reference_method = crate::tableau::catalog("DIMSIM3L")?;
    let run = integrate(
        &reference_method,
        problem,
        h_min / 20.0,
        &IntegrateOptions::default(),
    )?;
    Ok(run.final_solution)
}

/// Runs the method over a stepsize sequence and reports terminal errors
/// against the reference, continuing past failed rows.
pub fn convergence_study(
    tableau: &Tableau,
    problem: &SplitProblem,
    hs: &[f64],
    options: &IntegrateOptions,
) -> Result<ConvergenceStudy> {
    let h_min = hs.iter().copied().fold(f64::INFINITY, f64::min);
    let reference = reference_solution(problem, h_min)?;
    convergence_study_against(tableau, problem, hs, options, &reference)
}

/// [`convergence_study`] with a precomputed reference terminal state, so
/// several methods can share one reference run.
pub fn convergence_study_against(
    tableau: &Tableau,
    problem: &SplitProblem,
    hs: &[f64],
    options: &IntegrateOptions,
    reference: &[f64],
) -> Result<ConvergenceStudy> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &h in hs {
        match integrate(tableau, problem, h, options) {
            Ok(run) => {
                let error = error_norm(&run.final_solution, reference, problem.physical_dim);
                let pairwise = rows.iter().rev().find(|r| r.failure.is_none()).map(|prev| {
                    (prev.error / error).ln() / (prev.h / h).ln()
                });
                rows.push(ConvergenceRow {
                    h,
                    error,
                    pairwise_order: pairwise,
                    failure: None,
                });
            }
            Err(e) => rows.push(ConvergenceRow {
                h,
                error: f64::NAN,
                pairwise_order: None,
                failure: Some(e.to_string()),
            }),
        }
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.failure.is_none() && r.error > 0.0 && r.error.is_finite())
        .map(|r| (r.h.ln(), r.error.ln()))
        .collect();
    let observed_order = least_squares_slope(&pts);
    Ok(ConvergenceStudy {
        method: tableau.name.clone(),
        problem: problem.name.clone(),
        rows,
        observed_order,
        start_sensitivity_flag: tableau.p >= 4,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{stiff_relaxation, test_equation, test_equation_span};
    use crate::stability::stability_matrix;
    use crate::tableau::{catalog, q_vectors, CATALOG_NAMES};
    use num_complex::Complex64;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// One step of the realified scalar test equation from arbitrary complex
    /// external stages, compared against multiplication by the stability
    /// matrix.
    fn one_step_matches_matrix(name: &str, z0: Complex64, z1: Complex64, tol: f64) {
        let t = catalog(name).unwrap();
        let h = 1.0;
        let prob = test_equation(z0, z1);
        let mut state = start(&t, &prob, h, StartMode::ExactDerivatives).unwrap();
        // overwrite the starting blocks with a deterministic complex vector
        let mut blocks = Vec::new();
        for i in 0..t.r {
            let v = c64(0.3 + 0.2 * i as f64, -0.4 + 0.15 * i as f64);
            state.y_ext[i] = vec![v.re, v.im];
            blocks.push(v);
        }
        let mut stepper = Stepper::new(t.clone(), &prob, NewtonOptions::default());
        stepper.step(&mut state).unwrap();
        let m = stability_matrix(&t, z0, z1).unwrap();
        for i in 0..t.r {
            let mut expect = c64(0.0, 0.0);
            for j in 0..t.r {
                expect += m[(i, j)] * blocks[j];
            }
            let got = c64(state.y_ext[i][0], state.y_ext[i][1]);
            assert!(
                (got - expect).norm() <= tol * (1.0 + expect.norm()),
                "{name} at ({z0}, {z1}): block {i}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn step_equals_stability_matrix_product() {
        let mut seed = 0x51ab_u64;
        let mut next = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for name in CATALOG_NAMES {
            for _ in 0..20 {
                let z0 = c64(-3.0 * next(), 4.0 * next() - 2.0);
                let z1 = c64(-3.0 * next(), 4.0 * next() - 2.0);
                one_step_matches_matrix(name, z0, z1, 1e-13);
            }
        }
    }

    #[test]
    fn zero_stepsize_applies_v() {
        let t = catalog("DIMSIM3A").unwrap();
        let prob = test_equation(c64(-0.5, 0.0), c64(-1.0, 0.0));
        let mut state = start(&t, &prob, 0.25, StartMode::ExactDerivatives).unwrap();
        state.h = 0.0;
        let before = state.y_ext.clone();
        let mut stepper = Stepper::new(t.clone(), &prob, NewtonOptions::default());
        stepper.step(&mut state).unwrap();
        for i in 0..t.r {
            for comp in 0..2 {
                let expect: f64 = (0..t.r).map(|j| t.v[(i, j)] * before[j][comp]).sum();
                assert!((state.y_ext[i][comp] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn newton_solves_quadratic_stage() {
        // Y + 0.1 Y^2 = 1 has the root (sqrt(1.4) - 1) / 0.2
        let prob = SplitProblem {
            name: "quadratic".into(),
            dim: 1,
            physical_dim: 1,
            t0: 0.0,
            t_end: 1.0,
            y0: vec![1.0],
            f: Box::new(|_, out| out[0] = 0.0),
            g: Box::new(|y, out| out[0] = -y[0] * y[0]),
            jac_block: 1,
            jac_g: Some(Box::new(|y, jac| jac.data[0] = -2.0 * y[0])),
            derivatives: None,
            exact: None,
        };
        let t = catalog("DIMSIM1L").unwrap(); // lambda = 1
        let mut stepper = Stepper::new(t, &prob, NewtonOptions::default());
        let mut counters = Counters::default();
        let (y, _) = stepper
            .newton_stage_solve(0.1, &[1.0], &[1.0], &mut counters)
            .unwrap();
        let expected = (1.4_f64.sqrt() - 1.0) / 0.2;
        assert!((y[0] - expected).abs() < 1e-12, "{} vs {expected}", y[0]);
        assert!((y[0] - 0.9161).abs() < 1e-4);
    }

    #[test]
    fn singular_newton_matrix_is_reported() {
        // g(y) = y / (h lambda) makes I - h lambda J exactly singular
        let h = 0.5;
        let lambda = 1.0;
        let scale = 1.0 / (h * lambda);
        let prob = SplitProblem {
            name: "singular".into(),
            dim: 1,
            physical_dim: 1,
            t0: 0.0,
            t_end: 1.0,
            y0: vec![1.0],
            f: Box::new(|_, out| out[0] = 0.0),
            g: Box::new(move |y, out| out[0] = scale * y[0]),
            jac_block: 1,
            jac_g: Some(Box::new(move |_, jac| jac.data[0] = scale)),
            derivatives: None,
            exact: None,
        };
        let t = catalog("DIMSIM1L").unwrap();
        let mut stepper = Stepper::new(t, &prob, NewtonOptions::default());
        let mut counters = Counters::default();
        let err = stepper
            .newton_stage_solve(h, &[1.0], &[2.0], &mut counters)
            .unwrap_err();
        assert!(matches!(err, Error::SingularMatrix(_)), "{err}");
    }

    #[test]
    fn decay_error_halves_quadratically() {
        // order-2 method on y' = -y (all stiff): halving h divides the
        // terminal error by about 4
        let t = catalog("DIMSIM2A").unwrap();
        let err = |h: f64| -> f64 {
            let prob = test_equation(c64(0.0, 0.0), c64(-1.0, 0.0));
            let run = integrate(&t, &prob, h, &IntegrateOptions::default()).unwrap();
            let exact = (-1.0_f64).exp();
            (run.final_solution[0] - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
    }

    #[test]
    fn start_constant_problem_uses_leading_weights() {
        let prob = SplitProblem {
            name: "constant".into(),
            dim: 1,
            physical_dim: 1,
            t0: 0.0,
            t_end: 1.0,
            y0: vec![2.5],
            f: Box::new(|_, out| out[0] = 0.0),
            g: Box::new(|_, out| out[0] = 0.0),
            jac_block: 1,
            jac_g: Some(Box::new(|_, jac| jac.data[0] = 0.0)),
            derivatives: Some(Box::new(|_| vec![0.0])),
            exact: Some(Box::new(|_| vec![2.5])),
        };
        for name in ["DIMSIM1L", "DIMSIM2A", "DIMSIM4A"] {
            let t = catalog(name).unwrap();
            let qv = q_vectors(&t);
            let state = start(&t, &prob, 0.1, StartMode::ExactDerivatives).unwrap();
            for i in 0..t.r {
                assert!(
                    (state.y_ext[i][0] - qv.q[0][i] * 2.5).abs() < 1e-14,
                    "{name} block {i}"
                );
            }
        }
    }

    #[test]
    fn start_single_stage_combines_value_and_slope() {
        // single-stage tableau with abscissa 1 on a purely non-stiff
        // problem: the starting block reduces to y0 + h y'(t0)
        let t = crate::tableau::Tableau::new(
            "euler-like",
            1,
            nalgebra::DVector::from_element(1, 1.0),
            nalgebra::DMatrix::from_element(1, 1, 0.0),
            nalgebra::DMatrix::from_element(1, 1, 1.0),
            nalgebra::DMatrix::from_element(1, 1, 1.0),
            nalgebra::DMatrix::from_element(1, 1, 1.0),
            nalgebra::DMatrix::from_element(1, 1, 1.0),
            nalgebra::DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let prob = test_equation(c64(-2.0, 0.0), c64(0.0, 0.0));
        let h = 0.05;
        let state = start(&t, &prob, h, StartMode::ExactDerivatives).unwrap();
        // y' = -2 y0 = -2; the stiff part vanishes, so the block is the
        // stage value itself
        assert!(
            (state.y_ext[0][0] - (1.0 + h * -2.0)).abs() < 1e-14,
            "{}",
            state.y_ext[0][0]
        );
    }

    #[test]
    fn local_error_after_exact_start_is_high_order() {
        // one step of the order-3 method from exact starting data: the
        // local defect against the exact flow scales like h^4
        let t = catalog("DIMSIM3A").unwrap();
        let local = |h: f64| -> f64 {
            let prob = test_equation(c64(-0.3, 0.0), c64(-0.7, 0.0));
            let mut state = start(&t, &prob, h, StartMode::ExactDerivatives).unwrap();
            let mut stepper = Stepper::new(t.clone(), &prob, NewtonOptions::default());
            stepper.step(&mut state).unwrap();
            let exact = prob.exact.as_ref().unwrap()(h);
            (state.solution[0] - exact[0]).abs()
        };
        let r = local(0.08) / local(0.04);
        let order = r.log2();
        assert!(
            (order - 4.0).abs() < 0.5,
            "local order {order} (ratio {r})"
        );
    }

    #[test]
    fn finish_requires_a_step() {
        let t = catalog("DIMSIM2L").unwrap();
        let prob = test_equation(c64(0.0, 0.0), c64(-1.0, 0.0));
        let state = start(&t, &prob, 0.1, StartMode::ExactDerivatives).unwrap();
        assert!(matches!(finish(&state), Err(Error::NoStepTaken)));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let t = catalog("DIMSIM2L").unwrap();
        let prob = test_equation(c64(0.0, 0.0), c64(-1.0, 0.0));
        assert!(matches!(
            integrate(&t, &prob, 0.3, &IntegrateOptions::default()),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn trivial_problem_stays_constant() {
        let t = catalog("DIMSIM3L").unwrap();
        let prob = test_equation(c64(0.0, 0.0), c64(0.0, 0.0));
        let run = integrate(
            &t,
            &prob,
            0.125,
            &IntegrateOptions {
                store_trajectory: true,
                ..IntegrateOptions::default()
            },
        )
        .unwrap();
        // constant up to the rounding of the external-stage combinations
        for snap in &run.trajectory {
            assert!((snap[0] - 1.0).abs() < 1e-13, "{}", snap[0]);
            assert!(snap[1].abs() < 1e-13);
        }
    }

    #[test]
    fn terminal_value_matches_matrix_power() {
        // the whole fixed-step run on the linear test equation equals
        // applying the stability matrix N times to the starting vector
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let (z0, z1) = (c64(-0.4, 0.2), c64(-0.9, -0.3));
            let h = 0.25;
            let n_steps = 8;
            let prob = test_equation_span(z0 / h, z1 / h, h * n_steps as f64);
            let state0 = start(&t, &prob, h, StartMode::ExactDerivatives).unwrap();
            let mut blocks: Vec<Complex64> = state0
                .y_ext
                .iter()
                .map(|b| c64(b[0], b[1]))
                .collect();
            let m = stability_matrix(&t, z0, z1).unwrap();
            for _ in 0..n_steps {
                let prev = blocks.clone();
                for i in 0..t.r {
                    blocks[i] = (0..t.r).map(|j| m[(i, j)] * prev[j]).sum();
                }
            }
            let run = integrate(&t, &prob, h, &IntegrateOptions::default()).unwrap();
            for i in 0..t.r {
                let got = c64(run.final_state.y_ext[i][0], run.final_state.y_ext[i][1]);
                assert!(
                    (got - blocks[i]).norm() < 1e-12 * (1.0 + blocks[i].norm()),
                    "{name} block {i}: {got} vs {}",
                    blocks[i]
                );
            }
        }
    }

    #[test]
    fn counters_respect_budgets() {
        let t = catalog("DIMSIM3L").unwrap();
        let prob = stiff_relaxation(-1e6, 2.0);
        let opts = IntegrateOptions::default();
        let run = integrate(&t, &prob, 0.125, &opts).unwrap();
        let steps = (2.0 / 0.125) as u64;
        // one f evaluation per stage per step, plus s from the start
        assert_eq!(run.counters.f_evals, (steps + 1) * t.s as u64);
        let max_iters = opts.newton.max_iters as u64;
        assert!(run.counters.g_evals <= (steps + 1) * t.s as u64 * (max_iters + 1));
    }

    #[test]
    fn stage_values_track_the_solution() {
        // internal stages approximate y(t_n + c_i h) at stage order q = p:
        // errors shrink by about 2^(q+1) when h halves
        let t = catalog("DIMSIM2L").unwrap();
        let stage_err = |h: f64| -> f64 {
            let prob = test_equation(c64(-0.4, 0.0), c64(-0.6, 0.0));
            let mut state = start(&t, &prob, h, StartMode::ExactDerivatives).unwrap();
            let mut stepper = Stepper::new(t.clone(), &prob, NewtonOptions::default());
            stepper.step(&mut state).unwrap();
            let exact = prob.exact.as_ref().unwrap();
            let mut worst = 0.0_f64;
            for (i, stage) in state.stages.iter().enumerate() {
                let at = exact(t.c[i] * h);
                worst = worst.max((stage[0] - at[0]).abs());
            }
            worst
        };
        let ratio = stage_err(0.1) / stage_err(0.05);
        let order = ratio.log2();
        assert!(
            order > 2.5 && order < 3.8,
            "stage error ratio {ratio} (order {order})"
        );
    }

    #[test]
    fn fornberg_weights_reproduce_taylor_table() {
        // third derivative at the left end of a five-point grid
        let w = fornberg_weights(5, 3, 1.0);
        let expected = [-2.5, 9.0, -12.0, 7.0, -1.5];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn bootstrap_start_matches_exact_on_smooth_problem() {
        // mildly stiff smooth problem: the self-contained bootstrap start
        // stays close to the supplied-derivative start
        let t = catalog("DIMSIM2L").unwrap();
        let prob = stiff_relaxation(-50.0, 2.0);
        let h = 1.0 / 64.0;
        let exact_state = start(&t, &prob, h, StartMode::ExactDerivatives).unwrap();
        let boot_state = start(&t, &prob, h, StartMode::ReferenceBootstrap).unwrap();
        for i in 0..t.r {
            let d = (exact_state.y_ext[i][0] - boot_state.y_ext[i][0]).abs();
            assert!(d < 1e-5, "block {i} differs by {d:e}");
        }
    }
}
