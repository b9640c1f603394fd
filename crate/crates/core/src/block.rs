//! Implicit residual block `y = x + h[(1−θ) F(x) + θ F(y)]` with
//! `F(v) = σ(W v + b)`.
//!
//! The forward pass solves the nonlinear equation for `y`; the backward pass
//! never differentiates through that solver. Differentiating the block
//! equation itself gives
//!
//! ```text
//! (I − hθ ∂F(y)/∂y) dy = (I + h(1−θ) ∂F(x)/∂x) dx + h(1−θ) ∂F(x)/∂W dW + hθ ∂F(y)/∂W dW
//! ```
//!
//! so every cotangent costs one transposed solve with `I − hθ ∂F(y)/∂y`.
//! With `θ = 0` the block is an ordinary explicit residual layer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{lu_solve_in_place, norm_inf, skew_symmetrize, Matrix, Vector};

pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;
pub const DEFAULT_SOLVER_MAX_ITER: usize = 100;

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
/// Step budget of the residual-descent fallback.
const DESCENT_MAX_STEPS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Identity,
    #[serde(alias = "ReLU")]
    Relu,
    Tanh,
    Sigmoid,
}

impl ActivationKind {
    #[inline]
    pub fn value(self, u: f64) -> f64 {
        match self {
            ActivationKind::Identity => u,
            ActivationKind::Relu => u.max(0.0),
            ActivationKind::Tanh => u.tanh(),
            ActivationKind::Sigmoid => sigmoid(u),
        }
    }

    #[inline]
    pub fn derivative(self, u: f64) -> f64 {
        self.value_and_derivative(u).1
    }

    #[inline]
    pub fn value_and_derivative(self, u: f64) -> (f64, f64) {
        match self {
            ActivationKind::Identity => (u, 1.0),
            ActivationKind::Relu => {
                if u > 0.0 {
                    (u, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            ActivationKind::Tanh => {
                let t = u.tanh();
                (t, 1.0 - t * t)
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(u);
                (s, s * (1.0 - s))
            }
        }
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    Raw,
    #[serde(alias = "skew")]
    SkewSymmetric,
}

/// Parameters of one block. The effective weight is `a` itself or `a − aᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub a: Matrix,
    pub b: Vector,
    pub mode: WeightMode,
}

impl BlockParams {
    pub fn new(a: Matrix, b: Vector, mode: WeightMode) -> Result<Self> {
        let p = Self { a, b, mode };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(n: usize, mode: WeightMode) -> Self {
        Self {
            a: Matrix::zeros(n, n),
            b: Vector::zeros(n),
            mode,
        }
    }

    pub fn width(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.b.len();
        if n == 0 || self.a.rows() != n || self.a.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "block weight {}x{} with bias of length {n}",
                self.a.rows(),
                self.a.cols()
            )));
        }
        Ok(())
    }

    pub fn effective_weight(&self) -> Matrix {
        match self.mode {
            WeightMode::Raw => self.a.clone(),
            WeightMode::SkewSymmetric => skew_symmetrize(&self.a).expect("validated square"),
        }
    }

    pub fn param_count(&self) -> usize {
        self.a.rows() * self.a.cols() + self.b.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImplicitBlockConfig {
    pub theta: f64,
    pub h: f64,
    pub activation: ActivationKind,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    /// Drop the `θ ∂F(y)/∂W` term from the parameter gradient. Only useful
    /// for demonstrating that the reduced formula is wrong.
    pub paper_param_grad: bool,
}

impl ImplicitBlockConfig {
    pub fn new(theta: f64, h: f64, activation: ActivationKind) -> Result<Self> {
        let cfg = Self {
            theta,
            h,
            activation,
            solver_tol: DEFAULT_SOLVER_TOL,
            solver_max_iter: DEFAULT_SOLVER_MAX_ITER,
            paper_param_grad: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!("theta {} outside [0, 1]", self.theta)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidConfig(format!("step size h must be positive, got {}", self.h)));
        }
        if self.solver_tol.is_nan() || self.solver_tol <= 0.0 {
            return Err(Error::InvalidConfig("solver_tol must be positive".into()));
        }
        Ok(())
    }

    /// Weight of `F(y)`: `hθ`.
    pub fn implicit_weight(&self) -> f64 {
        self.h * self.theta
    }

    /// Weight of `F(x)`: `h(1−θ)`.
    pub fn explicit_weight(&self) -> f64 {
        self.h * (1.0 - self.theta)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub fixed_point_iters: usize,
    pub descent_iters: usize,
    pub residual: f64,
    /// False when the linearized initial guess hit a singular system.
    pub used_linear_guess: bool,
}

/// What the backward pass needs from one forward evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct TapeEntry {
    pub x: Vector,
    pub y: Vector,
    /// `∂F/∂x` at `x`.
    pub jx: Matrix,
    /// `∂F/∂y` at `y`.
    pub jy: Matrix,
    /// `σ′(W x + b)`.
    pub act_deriv_x: Vector,
    /// `σ′(W y + b)`.
    pub act_deriv_y: Vector,
    pub stats: SolveStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockGrads {
    pub grad_x: Vector,
    pub grad_a: Matrix,
    pub grad_b: Vector,
}

/// `F` with the effective weight materialized once.
pub(crate) struct BlockFn<'p> {
    w: Matrix,
    b: &'p [f64],
    act: ActivationKind,
}

impl<'p> BlockFn<'p> {
    pub(crate) fn new(params: &'p BlockParams, act: ActivationKind) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            w: params.effective_weight(),
            b: &params.b,
            act,
        })
    }

    fn width(&self) -> usize {
        self.b.len()
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.width() {
            return Err(Error::DimensionMismatch(format!(
                "input of length {} for a block of width {}",
                v.len(),
                self.width()
            )));
        }
        Ok(())
    }

    /// `out = F(v)`.
    fn eval_into(&self, v: &[f64], out: &mut [f64]) {
        self.w.matvec_into(v, out);
        for (o, b) in out.iter_mut().zip(self.b) {
            *o = self.act.value(*o + b);
        }
    }

    /// `(F(v), σ′(W v + b))`.
    fn eval_with_deriv(&self, v: &[f64]) -> (Vector, Vector) {
        let mut f = Vector::zeros(self.width());
        self.w.matvec_into(v, &mut f);
        let mut d = Vector::zeros(self.width());
        for ((o, dd), b) in f.iter_mut().zip(d.iter_mut()).zip(self.b) {
            let (val, der) = self.act.value_and_derivative(*o + b);
            *o = val;
            *dd = der;
        }
        (f, d)
    }

    /// `diag(d) W`.
    fn jacobian(&self, act_deriv: &[f64]) -> Matrix {
        let n = self.width();
        let mut j = self.w.clone();
        for (i, d) in act_deriv.iter().enumerate() {
            for v in &mut j.as_mut_slice()[i * n..(i + 1) * n] {
                *v *= d;
            }
        }
        j
    }
}

/// `F(v) = σ(W v + b)`.
pub fn block_fn(params: &BlockParams, act: ActivationKind, v: &[f64]) -> Result<Vector> {
    let f = BlockFn::new(params, act)?;
    f.check(v)?;
    let mut out = Vector::zeros(f.width());
    f.eval_into(v, &mut out);
    Ok(out)
}

/// `∂F/∂v = diag(σ′(W v + b)) W`.
pub fn block_jacobian_x(params: &BlockParams, act: ActivationKind, v: &[f64]) -> Result<Matrix> {
    let f = BlockFn::new(params, act)?;
    f.check(v)?;
    let (_, d) = f.eval_with_deriv(v);
    Ok(f.jacobian(&d))
}

/// `I − s·J`, row-major.
fn shifted_identity(j: &Matrix, s: f64) -> Vec<f64> {
    let n = j.rows();
    let mut m: Vec<f64> = j.as_slice().iter().map(|v| -s * v).collect();
    for i in 0..n {
        m[i * n + i] += 1.0;
    }
    m
}

fn transpose_flat(m: &mut [f64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            m.swap(i * n + j, j * n + i);
        }
    }
}

/// Solves `v = c + α F(v)`: fixed-point iteration from `init`, then damped
/// descent on `½‖v − c − α F(v)‖²` if the iteration has not converged.
fn solve_fixed_point(
    f: &BlockFn<'_>,
    c: &[f64],
    alpha: f64,
    init: Vector,
    tol: f64,
    max_iter: usize,
    stats: &mut SolveStats,
) -> Result<Vector> {
    let n = c.len();
    let mut v = init;
    let mut g = Vector::zeros(n);
    let mut best = (f64::INFINITY, v.clone());

    for k in 0..=max_iter {
        f.eval_into(&v, &mut g);
        let mut res = 0.0_f64;
        for i in 0..n {
            g[i] = c[i] + alpha * g[i];
            res = res.max((v[i] - g[i]).abs());
        }
        if res <= tol {
            stats.fixed_point_iters = k;
            stats.residual = res;
            return Ok(v);
        }
        if res < best.0 {
            best = (res, v.clone());
        }
        if k < max_iter {
            std::mem::swap(&mut v, &mut g);
        }
    }
    stats.fixed_point_iters = max_iter;

    let (res, v) = residual_descent(f, c, alpha, best.1, tol, DESCENT_MAX_STEPS, stats);
    stats.residual = res;
    if res <= tol {
        Ok(v)
    } else {
        Err(Error::SolverDiverged {
            residual: res,
            iterations: stats.fixed_point_iters + stats.descent_iters,
            layer: None,
        })
    }
}

/// Gradient descent on `φ(v) = ½‖r(v)‖²`, `r(v) = v − c − α F(v)`, along
/// `(I − α ∂F/∂v)ᵀ r` with Armijo backtracking from a unit step.
fn residual_descent(
    f: &BlockFn<'_>,
    c: &[f64],
    alpha: f64,
    mut v: Vector,
    tol: f64,
    max_steps: usize,
    stats: &mut SolveStats,
) -> (f64, Vector) {
    let n = c.len();
    let residual = |v: &[f64], out: &mut Vector| {
        f.eval_into(v, out);
        for i in 0..n {
            out[i] = v[i] - c[i] - alpha * out[i];
        }
    };
    let mut r = Vector::zeros(n);
    residual(&v, &mut r);
    let mut trial = Vector::zeros(n);
    let mut r_trial = Vector::zeros(n);

    for it in 0..max_steps {
        let res = r.norm_inf();
        if res <= tol {
            stats.descent_iters = it;
            return (res, v);
        }
        let phi = 0.5 * r.dot(&r);
        let (_, d) = f.eval_with_deriv(&v);
        let jac = f.jacobian(&d);
        // (I − α J)ᵀ r = r − α Jᵀ r
        let jt_r = jac.matvec_transpose(&r);
        let dir: Vec<f64> = (0..n).map(|i| r[i] - alpha * jt_r[i]).collect();
        let dir_sq: f64 = dir.iter().map(|x| x * x).sum();
        if dir_sq == 0.0 {
            stats.descent_iters = it;
            return (res, v);
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            for i in 0..n {
                trial[i] = v[i] - step * dir[i];
            }
            residual(&trial, &mut r_trial);
            let phi_trial = 0.5 * r_trial.dot(&r_trial);
            if phi_trial <= phi - ARMIJO_C * step * dir_sq {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            stats.descent_iters = it;
            return (res, v);
        }
        std::mem::swap(&mut v, &mut trial);
        std::mem::swap(&mut r, &mut r_trial);
    }
    stats.descent_iters = max_steps;
    (r.norm_inf(), v)
}

/// Solves the block equation for `y`. Returns only the output; see
/// [`forward`] for the variant that records a tape.
pub fn forward_output(cfg: &ImplicitBlockConfig, params: &BlockParams, x: &[f64]) -> Result<Vector> {
    let f = BlockFn::new(params, cfg.activation)?;
    f.check(x)?;
    solve_block(cfg, &f, x).map(|(y, _, _, _)| y)
}

fn solve_block(
    cfg: &ImplicitBlockConfig,
    f: &BlockFn<'_>,
    x: &[f64],
) -> Result<(Vector, Vector, Matrix, SolveStats)> {
    let n = x.len();
    let (fx, dx) = f.eval_with_deriv(x);
    let jx = f.jacobian(&dx);
    let mut stats = SolveStats::default();

    let beta = cfg.explicit_weight();
    let c: Vector = (0..n).map(|i| x[i] + beta * fx[i]).collect::<Vec<_>>().into();
    let alpha = cfg.implicit_weight();
    if alpha == 0.0 {
        return Ok((c, dx, jx, stats));
    }

    // Linearizing F around x gives y ≈ x + h (I − hθ ∂F(x)/∂x)⁻¹ F(x).
    let mut guess = fx.clone();
    let init = match lu_solve_in_place(n, shifted_identity(&jx, alpha), &mut guess) {
        Ok(()) => {
            stats.used_linear_guess = true;
            (0..n).map(|i| x[i] + cfg.h * guess[i]).collect::<Vec<_>>().into()
        }
        Err(Error::SingularMatrix { .. }) => Vector::from(x),
        Err(e) => return Err(e),
    };
    let y = solve_fixed_point(f, &c, alpha, init, cfg.solver_tol, cfg.solver_max_iter, &mut stats)?;
    Ok((y, dx, jx, stats))
}

/// Solves the block equation for `y` and records what backpropagation needs.
pub fn forward(cfg: &ImplicitBlockConfig, params: &BlockParams, x: &[f64]) -> Result<(Vector, TapeEntry)> {
    let f = BlockFn::new(params, cfg.activation)?;
    f.check(x)?;
    let (y, act_deriv_x, jx, stats) = solve_block(cfg, &f, x)?;
    let (_, act_deriv_y) = f.eval_with_deriv(&y);
    let jy = f.jacobian(&act_deriv_y);
    let tape = TapeEntry {
        x: Vector::from(x),
        y: y.clone(),
        jx,
        jy,
        act_deriv_x,
        act_deriv_y,
        stats,
    };
    Ok((y, tape))
}

/// Builds the tape for a known input/output pair without solving anything.
/// Used when states are recovered by [`reconstruct_input`].
pub fn tape_from_states(
    cfg: &ImplicitBlockConfig,
    params: &BlockParams,
    x: Vector,
    y: Vector,
) -> Result<TapeEntry> {
    let f = BlockFn::new(params, cfg.activation)?;
    f.check(&x)?;
    f.check(&y)?;
    let (_, act_deriv_x) = f.eval_with_deriv(&x);
    let (_, act_deriv_y) = f.eval_with_deriv(&y);
    Ok(TapeEntry {
        jx: f.jacobian(&act_deriv_x),
        jy: f.jacobian(&act_deriv_y),
        x,
        y,
        act_deriv_x,
        act_deriv_y,
        stats: SolveStats::default(),
    })
}

/// Pulls `grad_y = ∇_y L` back through one block.
pub fn backward(
    cfg: &ImplicitBlockConfig,
    params: &BlockParams,
    tape: &TapeEntry,
    grad_y: &[f64],
) -> Result<BlockGrads> {
    let n = params.width();
    if grad_y.len() != n || tape.x.len() != n || tape.y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "backward through a width-{n} block with gradient of length {}",
            grad_y.len()
        )));
    }
    let alpha = cfg.implicit_weight();
    let beta = cfg.explicit_weight();

    // w = (I − hθ ∂F(y)/∂y)⁻ᵀ grad_y
    let mut w = Vector::from(grad_y);
    if alpha != 0.0 {
        let mut m = shifted_identity(&tape.jy, alpha);
        transpose_flat(&mut m, n);
        lu_solve_in_place(n, m, &mut w)?;
    }

    // grad_x = (I + h(1−θ) ∂F(x)/∂x)ᵀ w
    let jt_w = tape.jx.matvec_transpose(&w);
    let grad_x: Vector = (0..n).map(|i| w[i] + beta * jt_w[i]).collect::<Vec<_>>().into();

    let include_implicit = !cfg.paper_param_grad && alpha != 0.0;
    let mut grad_w = Matrix::zeros(n, n);
    let mut grad_b = Vector::zeros(n);
    for i in 0..n {
        let gx = beta * tape.act_deriv_x[i] * w[i];
        let gy = if include_implicit {
            alpha * tape.act_deriv_y[i] * w[i]
        } else {
            0.0
        };
        grad_b[i] = gx + gy;
        for j in 0..n {
            grad_w[(i, j)] = gx * tape.x[j] + gy * tape.y[j];
        }
    }
    let grad_a = match params.mode {
        WeightMode::Raw => grad_w,
        WeightMode::SkewSymmetric => skew_symmetrize(&grad_w)?,
    };
    Ok(BlockGrads {
        grad_x,
        grad_a,
        grad_b,
    })
}

/// Recovers the block input from its output by solving
/// `x = y − h(1−θ) F(x) − hθ F(y)`, starting from `x₀ = y − h F(y)`.
pub fn reconstruct_input(cfg: &ImplicitBlockConfig, params: &BlockParams, y: &[f64]) -> Result<Vector> {
    let f = BlockFn::new(params, cfg.activation)?;
    f.check(y)?;
    let n = y.len();
    let mut fy = Vector::zeros(n);
    f.eval_into(y, &mut fy);
    let alpha = cfg.implicit_weight();
    let c: Vector = (0..n).map(|i| y[i] - alpha * fy[i]).collect::<Vec<_>>().into();
    let beta = cfg.explicit_weight();
    if beta == 0.0 {
        return Ok(c);
    }
    let init: Vector = (0..n).map(|i| y[i] - cfg.h * fy[i]).collect::<Vec<_>>().into();
    let mut stats = SolveStats::default();
    solve_fixed_point(&f, &c, -beta, init, cfg.solver_tol, cfg.solver_max_iter, &mut stats)
}

/// The first `count + 1` iterates of the plain fixed-point map
/// `y ↦ x + h(1−θ) F(x) + hθ F(y)` from `y0`.
pub fn fixed_point_trace(
    cfg: &ImplicitBlockConfig,
    params: &BlockParams,
    x: &[f64],
    y0: &[f64],
    count: usize,
) -> Result<Vec<Vector>> {
    let f = BlockFn::new(params, cfg.activation)?;
    f.check(x)?;
    f.check(y0)?;
    let n = x.len();
    let mut fx = Vector::zeros(n);
    f.eval_into(x, &mut fx);
    let (alpha, beta) = (cfg.implicit_weight(), cfg.explicit_weight());
    let mut out = vec![Vector::from(y0)];
    let mut fy = Vector::zeros(n);
    for _ in 0..count {
        let prev = out.last().expect("nonempty");
        f.eval_into(prev, &mut fy);
        let next: Vec<f64> = (0..n).map(|i| x[i] + beta * fx[i] + alpha * fy[i]).collect();
        out.push(next.into());
    }
    Ok(out)
}

/// `‖y − x − h(1−θ) F(x) − hθ F(y)‖∞`.
pub fn block_residual(cfg: &ImplicitBlockConfig, params: &BlockParams, x: &[f64], y: &[f64]) -> Result<f64> {
    let fx = block_fn(params, cfg.activation, x)?;
    let fy = block_fn(params, cfg.activation, y)?;
    let (alpha, beta) = (cfg.implicit_weight(), cfg.explicit_weight());
    let r: Vec<f64> = (0..x.len())
        .map(|i| y[i] - x[i] - beta * fx[i] - alpha * fy[i])
        .collect();
    Ok(norm_inf(&r))
}
