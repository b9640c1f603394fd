#![allow(dead_code)]

use imres_core::block::{self, ActivationKind, BlockParams, ImplicitBlockConfig, WeightMode};
use imres_core::network::relative_error;
use imres_core::{Matrix, Rng, Vector};

pub const FD_STEP: f64 = 1e-6;

pub fn random_vector(rng: &mut Rng, n: usize, scale: f64) -> Vector {
    (0..n).map(|_| rng.uniform(-scale, scale)).collect::<Vec<_>>().into()
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.uniform(-scale, scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Random block whose effective weight satisfies `hθ‖W‖∞ ≤ bound`.
pub fn random_block(rng: &mut Rng, cfg: &ImplicitBlockConfig, n: usize, mode: WeightMode, bound: f64) -> BlockParams {
    let mut params = BlockParams::new(random_matrix(rng, n, n, 1.0), random_vector(rng, n, 0.5), mode).unwrap();
    let lip = cfg.implicit_weight() * params.effective_weight().norm_inf();
    if lip > bound {
        params.a = params.a.scale(bound / lip);
    }
    params
}

#[derive(Clone, Debug)]
pub struct SweepCase {
    pub cfg: ImplicitBlockConfig,
    pub params: BlockParams,
    pub x: Vector,
    /// Weights of the scalar loss `L(y) = c · y`.
    pub c: Vector,
}

/// Twenty block configurations covering n ∈ {1,3,5}, θ ∈ {0, ¼, ½, ¾},
/// h ∈ {0.05, 0.1, 0.5}, Tanh and Identity, raw and skew weights, with
/// `hθ‖W‖∞ ≤ 0.5`.
pub fn sweep_cases() -> Vec<SweepCase> {
    const NS: [usize; 3] = [1, 3, 5];
    const THETAS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];
    const HS: [f64; 3] = [0.05, 0.1, 0.5];
    const ACTS: [ActivationKind; 2] = [ActivationKind::Tanh, ActivationKind::Identity];
    (0..20)
        .map(|i| {
            let mut rng = Rng::new(1000 + i as u64);
            let n = NS[i % 3];
            let mut cfg = ImplicitBlockConfig::new(THETAS[i % 4], HS[(i / 2) % 3], ACTS[(i / 4) % 2]).unwrap();
            cfg.solver_tol = 1e-13;
            let mode = if i >= 10 { WeightMode::SkewSymmetric } else { WeightMode::Raw };
            let params = random_block(&mut rng, &cfg, n, mode, 0.5);
            SweepCase {
                x: random_vector(&mut rng, n, 1.0),
                c: random_vector(&mut rng, n, 1.0),
                cfg,
                params,
            }
        })
        .collect()
}

fn scalar_loss(case: &SweepCase, params: &BlockParams, x: &[f64]) -> f64 {
    let y = block::forward_output(&case.cfg, params, x).unwrap();
    case.c.dot(&y)
}

fn central<F: FnMut(f64) -> f64>(mut f: F, v: f64) -> f64 {
    (f(v + FD_STEP) - f(v - FD_STEP)) / (2.0 * FD_STEP)
}

/// Largest relative error over all components of (grad_x, grad_a, grad_b),
/// and the same maximum over grad_a alone.
pub fn block_gradient_errors(case: &SweepCase) -> (f64, f64) {
    let (_, tape) = block::forward(&case.cfg, &case.params, &case.x).unwrap();
    let g = block::backward(&case.cfg, &case.params, &tape, &case.c).unwrap();
    let n = case.x.len();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let num = central(
            |v| {
                let mut x = case.x.clone();
                x[j] = v;
                scalar_loss(case, &case.params, &x)
            },
            case.x[j],
        );
        worst = worst.max(relative_error(g.grad_x[j], num));
    }
    let mut worst_a: f64 = 0.0;
    for k in 0..n * n {
        let num = central(
            |v| {
                let mut p = case.params.clone();
                p.a.as_mut_slice()[k] = v;
                scalar_loss(case, &p, &case.x)
            },
            case.params.a.as_slice()[k],
        );
        worst_a = worst_a.max(relative_error(g.grad_a.as_slice()[k], num));
    }
    for k in 0..n {
        let num = central(
            |v| {
                let mut p = case.params.clone();
                p.b[k] = v;
                scalar_loss(case, &p, &case.x)
            },
            case.params.b[k],
        );
        worst = worst.max(relative_error(g.grad_b[k], num));
    }
    (worst.max(worst_a), worst_a)
}

/// `y = (I − θhW)⁻¹[(I + (1−θ)hW)x + hb]` for an Identity-activation block.
pub fn linear_block_solution(cfg: &ImplicitBlockConfig, params: &BlockParams, x: &[f64]) -> Vector {
    let n = x.len();
    let w = params.effective_weight();
    let (alpha, beta) = (cfg.implicit_weight(), cfg.explicit_weight());
    let lhs = Matrix::identity(n).sub(&w.scale(alpha)).unwrap();
    let wx = w.matvec(x);
    let rhs: Vec<f64> = (0..n).map(|i| x[i] + beta * wx[i] + cfg.h * params.b[i]).collect();
    imres_core::numkit::lu_solve(&lhs, &rhs).unwrap()
}
