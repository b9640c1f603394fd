use serde::{Deserialize, Serialize};

use crate::block::{
    self, ActivationKind, BlockParams, ImplicitBlockConfig, TapeEntry, WeightMode, DEFAULT_SOLVER_MAX_ITER,
    DEFAULT_SOLVER_TOL,
};
use crate::error::{Error, Result};
use crate::numkit::{glorot_uniform, Matrix, Rng, Vector};

fn default_horizon() -> f64 {
    1.0
}
fn default_output_activation() -> ActivationKind {
    ActivationKind::Identity
}
fn default_weight_mode() -> WeightMode {
    WeightMode::SkewSymmetric
}
fn default_reg_coeff() -> f64 {
    0.1
}
fn default_solver_tol() -> f64 {
    DEFAULT_SOLVER_TOL
}
fn default_solver_max_iter() -> usize {
    DEFAULT_SOLVER_MAX_ITER
}

/// Architecture of a stacked implicit network: an affine lift into the
/// hidden width, `depth` implicit blocks with step `h = horizon / depth`, and
/// an affine projection followed by `output_activation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub depth: usize,
    pub theta: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub activation: ActivationKind,
    #[serde(default = "default_output_activation")]
    pub output_activation: ActivationKind,
    #[serde(default = "default_weight_mode")]
    pub weight_mode: WeightMode,
    #[serde(default = "default_reg_coeff")]
    pub reg_coeff: f64,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_solver_max_iter")]
    pub solver_max_iter: usize,
    #[serde(default)]
    pub paper_param_grad: bool,
}

impl ModelSpec {
    pub fn new(
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        depth: usize,
        theta: f64,
        activation: ActivationKind,
    ) -> Self {
        Self {
            input_dim,
            hidden_dim,
            output_dim,
            depth,
            theta,
            horizon: default_horizon(),
            activation,
            output_activation: default_output_activation(),
            weight_mode: default_weight_mode(),
            reg_coeff: default_reg_coeff(),
            solver_tol: default_solver_tol(),
            solver_max_iter: default_solver_max_iter(),
            paper_param_grad: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidConfig("model dimensions must be positive".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.reg_coeff.is_nan() || self.reg_coeff < 0.0 {
            return Err(Error::InvalidConfig("reg_coeff must be nonnegative".into()));
        }
        self.block_config().validate()
    }

    /// `h = horizon / depth` (the whole horizon when there are no blocks).
    pub fn step_size(&self) -> f64 {
        self.horizon / self.depth.max(1) as f64
    }

    pub fn block_config(&self) -> ImplicitBlockConfig {
        ImplicitBlockConfig {
            theta: self.theta,
            h: self.step_size(),
            activation: self.activation,
            solver_tol: self.solver_tol,
            solver_max_iter: self.solver_max_iter,
            paper_param_grad: self.paper_param_grad,
        }
    }
}

/// `v ↦ w v + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub w: Matrix,
    pub b: Vector,
}

impl Affine {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Matrix::zeros(output, input),
            b: Vector::zeros(output),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vector {
        let mut out = self.w.matvec(v);
        for (o, b) in out.iter_mut().zip(self.b.iter()) {
            *o += b;
        }
        out
    }

    fn accumulate(&mut self, g_out: &[f64], input: &[f64]) {
        let cols = self.w.cols();
        let w = self.w.as_mut_slice();
        for (i, g) in g_out.iter().enumerate() {
            self.b[i] += g;
            for (wij, xj) in w[i * cols..(i + 1) * cols].iter_mut().zip(input) {
                *wij += g * xj;
            }
        }
    }
}

/// Gradient of one block's stored parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockGrad {
    pub a: Matrix,
    pub b: Vector,
}

/// Gradients laid out like the model's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads {
    pub lift: Affine,
    pub blocks: Vec<BlockGrad>,
    pub proj: Affine,
}

impl ModelGrads {
    pub fn zeros_like(m: &Model) -> Self {
        let n = m.spec.hidden_dim;
        Self {
            lift: Affine::zeros(m.spec.input_dim, n),
            blocks: (0..m.blocks.len())
                .map(|_| BlockGrad {
                    a: Matrix::zeros(n, n),
                    b: Vector::zeros(n),
                })
                .collect(),
            proj: Affine::zeros(n, m.spec.output_dim),
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.lift.w.as_slice(), &self.lift.b];
        for g in &self.blocks {
            out.push(g.a.as_slice());
            out.push(&g.b);
        }
        out.push(self.proj.w.as_slice());
        out.push(&self.proj.b);
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.lift.w.as_mut_slice(), &mut self.lift.b];
        for g in &mut self.blocks {
            out.push(g.a.as_mut_slice());
            out.push(&mut g.b);
        }
        out.push(self.proj.w.as_mut_slice());
        out.push(&mut self.proj.b);
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn scale(&mut self, s: f64) {
        for sl in self.slices_mut() {
            sl.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn add_assign(&mut self, other: &ModelGrads) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.slices()
            .into_iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub lift: Affine,
    pub blocks: Vec<BlockParams>,
    pub proj: Affine,
}

impl Model {
    /// Glorot-uniform weights (lift, blocks, projection) and zero biases.
    pub fn init(spec: ModelSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        let n = spec.hidden_dim;
        let lift = Affine {
            w: glorot_uniform(rng, spec.input_dim, n),
            b: Vector::zeros(n),
        };
        let blocks = (0..spec.depth)
            .map(|_| BlockParams {
                a: glorot_uniform(rng, n, n),
                b: Vector::zeros(n),
                mode: spec.weight_mode,
            })
            .collect();
        let proj = Affine {
            w: glorot_uniform(rng, n, spec.output_dim),
            b: Vector::zeros(spec.output_dim),
        };
        Ok(Self {
            spec,
            lift,
            blocks,
            proj,
        })
    }

    /// All parameters zero.
    pub fn zeros(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.hidden_dim;
        Ok(Self {
            lift: Affine::zeros(spec.input_dim, n),
            blocks: (0..spec.depth).map(|_| BlockParams::zeros(n, spec.weight_mode)).collect(),
            proj: Affine::zeros(n, spec.output_dim),
            spec,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let s = &self.spec;
        let n = s.hidden_dim;
        let affine_ok = |a: &Affine, i: usize, o: usize| a.w.rows() == o && a.w.cols() == i && a.b.len() == o;
        if !affine_ok(&self.lift, s.input_dim, n) || !affine_ok(&self.proj, n, s.output_dim) {
            return Err(Error::DimensionMismatch("lift/projection shapes disagree with the spec".into()));
        }
        if self.blocks.len() != s.depth {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks for depth {}",
                self.blocks.len(),
                s.depth
            )));
        }
        for b in &self.blocks {
            b.validate()?;
            if b.width() != n || b.mode != s.weight_mode {
                return Err(Error::DimensionMismatch("block disagrees with the spec".into()));
            }
        }
        Ok(())
    }

    pub fn block_config(&self) -> ImplicitBlockConfig {
        self.spec.block_config()
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.lift.w.as_slice(), &self.lift.b];
        for b in &self.blocks {
            out.push(b.a.as_slice());
            out.push(&b.b);
        }
        out.push(self.proj.w.as_slice());
        out.push(&self.proj.b);
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.lift.w.as_mut_slice(), &mut self.lift.b];
        for b in &mut self.blocks {
            out.push(b.a.as_mut_slice());
            out.push(&mut b.b);
        }
        out.push(self.proj.w.as_mut_slice());
        out.push(&mut self.proj.b);
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Human-readable name of flat parameter `index`, e.g. `blocks[3].a[1,2]`.
    pub fn param_name(&self, index: usize) -> String {
        let n = self.spec.hidden_dim;
        let mut names: Vec<(String, usize, usize)> = vec![
            ("lift.w".into(), self.lift.w.len_flat(), self.lift.w.cols()),
            ("lift.b".into(), n, 0),
        ];
        for k in 0..self.blocks.len() {
            names.push((format!("blocks[{k}].a"), n * n, n));
            names.push((format!("blocks[{k}].b"), n, 0));
        }
        names.push(("proj.w".into(), self.proj.w.len_flat(), self.proj.w.cols()));
        names.push(("proj.b".into(), self.spec.output_dim, 0));
        let mut rem = index;
        for (name, len, cols) in names {
            if rem < len {
                return match rem.checked_div(cols) {
                    Some(row) => format!("{name}[{row},{}]", rem % cols),
                    None => format!("{name}[{rem}]"),
                };
            }
            rem -= len;
        }
        format!("param[{index}]")
    }

    /// `self ← self − lr · grads`.
    pub fn apply_step(&mut self, grads: &ModelGrads, lr: f64) {
        for (p, g) in self.slices_mut().into_iter().zip(grads.slices()) {
            p.iter_mut().zip(g).for_each(|(p, g)| *p -= lr * g);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().into_iter().flatten().all(|v| v.is_finite())
    }
}

impl Matrix {
    fn len_flat(&self) -> usize {
        self.rows() * self.cols()
    }
}

fn output_layer(m: &Model, z: &[f64]) -> (Vector, Vector) {
    let u = m.proj.apply(z);
    let out = u.iter().map(|&v| m.spec.output_activation.value(v)).collect::<Vec<_>>();
    (out.into(), u)
}

fn check_input(m: &Model, x: &[f64]) -> Result<()> {
    if x.len() != m.spec.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "input of length {} for a model with input_dim {}",
            x.len(),
            m.spec.input_dim
        )));
    }
    Ok(())
}

/// Full forward pass, recording one tape entry per block.
pub fn model_forward(m: &Model, x: &[f64]) -> Result<(Vector, Vec<TapeEntry>)> {
    check_input(m, x)?;
    let cfg = m.block_config();
    let mut z = m.lift.apply(x);
    let mut tapes = Vec::with_capacity(m.blocks.len());
    for (k, params) in m.blocks.iter().enumerate() {
        let (y, tape) = block::forward(&cfg, params, &z).map_err(|e| e.at_layer(k))?;
        tapes.push(tape);
        z = y;
    }
    Ok((output_layer(m, &z).0, tapes))
}

/// Forward pass that keeps only the current hidden state.
pub fn predict(m: &Model, x: &[f64]) -> Result<Vector> {
    Ok(hidden_and_output(m, x)?.1)
}

fn hidden_and_output(m: &Model, x: &[f64]) -> Result<(Vector, Vector)> {
    check_input(m, x)?;
    let cfg = m.block_config();
    let mut z = m.lift.apply(x);
    for (k, params) in m.blocks.iter().enumerate() {
        z = block::forward_output(&cfg, params, &z).map_err(|e| e.at_layer(k))?;
    }
    let out = output_layer(m, &z).0;
    Ok((z, out))
}

/// Number of parameters. `blocks_only` counts `depth · (n² + n)`; otherwise
/// the lift and projection are added.
pub fn param_count(m: &Model, blocks_only: bool) -> usize {
    let blocks: usize = m.blocks.iter().map(|b| b.param_count()).sum();
    if blocks_only {
        blocks
    } else {
        blocks + m.lift.w.len_flat() + m.lift.b.len() + m.proj.w.len_flat() + m.proj.b.len()
    }
}

/// Same as [`param_count`] computed from the architecture alone.
pub fn spec_param_count(spec: &ModelSpec, blocks_only: bool) -> usize {
    let n = spec.hidden_dim;
    let blocks = spec.depth * (n * n + n);
    if blocks_only {
        blocks
    } else {
        blocks + (spec.input_dim + 1) * n + (n + 1) * spec.output_dim
    }
}

/// Weight smoothness penalty `(c/L) Σ_{k≥2} ‖w_k − w_{k−1}‖²` over the
/// concatenated block parameters `w_k = (a_k, b_k)`, with its gradient.
pub fn regularizer(m: &Model) -> (f64, Vec<BlockGrad>) {
    let depth = m.blocks.len();
    let n = m.spec.hidden_dim;
    let mut grads: Vec<BlockGrad> = (0..depth)
        .map(|_| BlockGrad {
            a: Matrix::zeros(n, n),
            b: Vector::zeros(n),
        })
        .collect();
    if depth < 2 || m.spec.reg_coeff == 0.0 {
        return (0.0, grads);
    }
    let scale = m.spec.reg_coeff / depth as f64;
    let mut value = 0.0;
    for k in 1..depth {
        let (prev, cur) = (&m.blocks[k - 1], &m.blocks[k]);
        let pairs = [
            (prev.a.as_slice(), cur.a.as_slice()),
            (prev.b.as_slice(), cur.b.as_slice()),
        ];
        for (part, (p, c)) in pairs.into_iter().enumerate() {
            for (i, (pv, cv)) in p.iter().zip(c).enumerate() {
                let d = cv - pv;
                value += d * d;
                let g = 2.0 * scale * d;
                let (lo, hi) = grads.split_at_mut(k);
                let (gp, gc) = (&mut lo[k - 1], &mut hi[0]);
                if part == 0 {
                    gc.a.as_mut_slice()[i] += g;
                    gp.a.as_mut_slice()[i] -= g;
                } else {
                    gc.b[i] += g;
                    gp.b[i] -= g;
                }
            }
        }
    }
    (scale * value, grads)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// `½‖out − y‖²`.
    SquaredError,
    /// `−Σ [y ln p + (1−y) ln(1−p)]` with `p` clamped to `[1e−12, 1 − 1e−12]`.
    BinaryCrossEntropy,
}

const PROB_CLAMP: f64 = 1e-12;

impl LossKind {
    /// Per-sample loss and its gradient with respect to the model output.
    pub fn value_and_grad(self, out: &[f64], target: &[f64]) -> (f64, Vector) {
        match self {
            LossKind::SquaredError => {
                let d: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
                (0.5 * d.iter().map(|v| v * v).sum::<f64>(), d.into())
            }
            LossKind::BinaryCrossEntropy => {
                let mut loss = 0.0;
                let mut g = Vec::with_capacity(out.len());
                for (&p, &y) in out.iter().zip(target) {
                    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                    loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
                    g.push(-y / p + (1.0 - y) / (1.0 - p));
                }
                (loss, g.into())
            }
        }
    }

    pub fn value(self, out: &[f64], target: &[f64]) -> f64 {
        self.value_and_grad(out, target).0
    }
}

/// Result of backpropagating one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrad {
    pub loss: f64,
    pub grad_input: Vector,
    /// Largest number of hidden-state vectors alive at once.
    pub peak_states: usize,
}

/// Backpropagates one sample and adds `scale · ∇L` into `grads`.
///
/// With `reversible`, no tape is kept: the forward pass retains only the
/// current state and the backward pass recovers each block input with
/// [`block::reconstruct_input`].
pub fn accumulate_sample_grad(
    m: &Model,
    x: &[f64],
    target: &[f64],
    loss: LossKind,
    reversible: bool,
    scale: f64,
    grads: &mut ModelGrads,
) -> Result<SampleGrad> {
    if target.len() != m.spec.output_dim {
        return Err(Error::DimensionMismatch(format!(
            "target of length {} for output_dim {}",
            target.len(),
            m.spec.output_dim
        )));
    }
    let cfg = m.block_config();
    let (z_last, tapes) = if reversible {
        (hidden_and_output(m, x)?.0, Vec::new())
    } else {
        check_input(m, x)?;
        let mut z = m.lift.apply(x);
        let mut tapes = Vec::with_capacity(m.blocks.len());
        for (k, params) in m.blocks.iter().enumerate() {
            let (y, tape) = block::forward(&cfg, params, &z).map_err(|e| e.at_layer(k))?;
            tapes.push(tape);
            z = y;
        }
        (z, tapes)
    };
    let peak_states = if reversible { 2 } else { tapes.len() + 1 };

    let (out, u) = output_layer(m, &z_last);
    let (value, dl_dout) = loss.value_and_grad(&out, target);
    let g_u: Vec<f64> = dl_dout
        .iter()
        .zip(u.iter())
        .map(|(g, &u)| scale * g * m.spec.output_activation.derivative(u))
        .collect();
    grads.proj.accumulate(&g_u, &z_last);
    let mut g_z = m.proj.w.matvec_transpose(&g_u);

    if reversible {
        let mut y = z_last;
        for k in (0..m.blocks.len()).rev() {
            let params = &m.blocks[k];
            let x_k = block::reconstruct_input(&cfg, params, &y).map_err(|e| e.at_layer(k))?;
            let tape = block::tape_from_states(&cfg, params, x_k.clone(), y)?;
            g_z = pull_back(&cfg, params, &tape, &g_z, &mut grads.blocks[k]).map_err(|e| e.at_layer(k))?;
            y = x_k;
        }
    } else {
        for (k, tape) in tapes.iter().enumerate().rev() {
            g_z = pull_back(&cfg, &m.blocks[k], tape, &g_z, &mut grads.blocks[k]).map_err(|e| e.at_layer(k))?;
        }
    }

    grads.lift.accumulate(&g_z, x);
    let grad_input = m.lift.w.matvec_transpose(&g_z);
    Ok(SampleGrad {
        loss: value,
        grad_input,
        peak_states,
    })
}

fn pull_back(
    cfg: &ImplicitBlockConfig,
    params: &BlockParams,
    tape: &TapeEntry,
    g: &[f64],
    acc: &mut BlockGrad,
) -> Result<Vector> {
    let bg = block::backward(cfg, params, tape, g)?;
    for (a, d) in acc.a.as_mut_slice().iter_mut().zip(bg.grad_a.as_slice()) {
        *a += d;
    }
    for (a, d) in acc.b.iter_mut().zip(bg.grad_b.iter()) {
        *a += d;
    }
    Ok(bg.grad_x)
}

/// Mean per-sample loss over `batch` plus the regularizer, and its gradient.
pub fn batch_loss_and_grad(
    m: &Model,
    batch: &[(&Vector, &Vector)],
    loss: LossKind,
    reversible: bool,
) -> Result<(f64, ModelGrads)> {
    if batch.is_empty() {
        return Err(Error::InvalidCount("empty batch".into()));
    }
    let mut grads = ModelGrads::zeros_like(m);
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for (x, y) in batch {
        total += accumulate_sample_grad(m, x, y, loss, reversible, scale, &mut grads)?.loss;
    }
    let (reg, reg_grads) = regularizer(m);
    for (g, r) in grads.blocks.iter_mut().zip(&reg_grads) {
        for (a, d) in g.a.as_mut_slice().iter_mut().zip(r.a.as_slice()) {
            *a += d;
        }
        for (a, d) in g.b.iter_mut().zip(r.b.iter()) {
            *a += d;
        }
    }
    let value = total * scale + reg;
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok((value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(depth: usize, theta: f64) -> ModelSpec {
        ModelSpec::new(2, 3, 1, depth, theta, ActivationKind::Tanh)
    }

    #[test]
    fn depth_zero_is_affine() {
        let mut rng = Rng::new(1);
        let mut spec = small_spec(0, 0.5);
        spec.output_activation = ActivationKind::Sigmoid;
        let m = Model::init(spec, &mut rng).unwrap();
        let x = [0.3, -0.2];
        let (out, tapes) = model_forward(&m, &x).unwrap();
        assert!(tapes.is_empty());
        let u = m.proj.apply(&m.lift.apply(&x));
        assert_eq!(out[0], ActivationKind::Sigmoid.value(u[0]));
    }

    #[test]
    fn zero_blocks_are_identity_maps() {
        let mut rng = Rng::new(2);
        let mut spec = small_spec(4, 0.5);
        spec.activation = ActivationKind::Identity;
        let mut m = Model::init(spec, &mut rng).unwrap();
        for b in &mut m.blocks {
            *b = BlockParams::zeros(3, WeightMode::SkewSymmetric);
        }
        let x = [0.7, 0.1];
        let out = predict(&m, &x).unwrap();
        assert_eq!(out, m.proj.apply(&m.lift.apply(&x)));
    }

    #[test]
    fn scalar_chain_reproduces_block_value() {
        let mut spec = ModelSpec::new(1, 1, 1, 1, 0.5, ActivationKind::Identity);
        spec.weight_mode = WeightMode::Raw;
        let mut m = Model::zeros(spec).unwrap();
        m.lift.w[(0, 0)] = 1.0;
        m.proj.w[(0, 0)] = 1.0;
        m.blocks[0].a[(0, 0)] = 0.5;
        let (out, _) = model_forward(&m, &[1.0]).unwrap();
        assert!((out[0] - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn param_counts() {
        let count = |n, depth| {
            let spec = ModelSpec::new(1, n, 1, depth, 0.5, ActivationKind::Relu);
            let m = Model::zeros(spec.clone()).unwrap();
            assert_eq!(param_count(&m, false), spec_param_count(&spec, false));
            assert_eq!(param_count(&m, false), m.num_params());
            param_count(&m, true)
        };
        assert_eq!(count(5, 100), 3000);
        assert_eq!(count(5, 10), 300);
        assert_eq!(count(6, 25), 1050);
    }

    #[test]
    fn regularizer_examples() {
        let mut spec = small_spec(3, 0.5);
        spec.hidden_dim = 2;
        let mut m = Model::zeros(spec).unwrap();
        for b in &mut m.blocks {
            b.a = Matrix::from_rows(&[[0.3, -0.1], [0.2, 0.4]]);
            b.b = Vector::from(vec![0.5, -0.5]);
        }
        let (v, g) = regularizer(&m);
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|g| g.a.max_abs() == 0.0 && g.b.norm_inf() == 0.0));

        let mut spec = small_spec(2, 0.5);
        spec.hidden_dim = 2;
        let mut m = Model::zeros(spec).unwrap();
        m.blocks[1].a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        m.blocks[1].b = Vector::from(vec![1.0, 1.0]);
        let (v, _) = regularizer(&m);
        assert!((v - 0.05 * 6.0).abs() < 1e-15);
    }

    #[test]
    fn loss_examples() {
        let (l, g) = LossKind::SquaredError.value_and_grad(&[0.3, -1.0], &[0.3, -1.0]);
        assert_eq!(l, 0.0);
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
        let l = LossKind::BinaryCrossEntropy.value(&[0.5], &[1.0]);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(LossKind::BinaryCrossEntropy.value(&[0.0], &[1.0]).is_finite());
    }

    #[test]
    fn solver_failure_names_layer() {
        let mut spec = ModelSpec::new(1, 1, 1, 3, 0.5, ActivationKind::Identity);
        spec.weight_mode = WeightMode::Raw;
        spec.horizon = 3.0;
        let mut m = Model::zeros(spec).unwrap();
        m.lift.w[(0, 0)] = 1.0;
        // Second block: hθw = 1 with no solution for a nonzero input.
        m.blocks[1].a[(0, 0)] = 2.0;
        let err = model_forward(&m, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::SolverDiverged { layer: Some(1), .. }), "{err}");
    }

    #[test]
    fn param_names() {
        let m = Model::zeros(small_spec(2, 0.5)).unwrap();
        assert_eq!(m.param_name(0), "lift.w[0,0]");
        assert_eq!(m.param_name(6), "lift.b[0]");
        assert_eq!(m.param_name(9), "blocks[0].a[0,0]");
        assert_eq!(m.param_name(9 + 12 + 5), "blocks[1].a[1,2]");
        assert_eq!(m.param_name(m.num_params() - 1), "proj.b[0]");
    }
}
