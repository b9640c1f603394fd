//! Fixtures shared by the Criterion benchmarks in `benches/`.

use imres_core::block::{ActivationKind, BlockParams, ImplicitBlockConfig, WeightMode};
use imres_core::datasets::{make_regression, LabeledSet};
use imres_core::network::{Model, ModelSpec};
use imres_core::numkit::glorot_uniform;
use imres_core::{Matrix, Rng, Vector};

/// A width-`n` Tanh block with `θ = 1/2`, `h = 0.1` and Glorot weights.
pub fn block_fixture(n: usize, seed: u64) -> (ImplicitBlockConfig, BlockParams, Vector) {
    let mut rng = Rng::new(seed);
    let cfg = ImplicitBlockConfig::new(0.5, 0.1, ActivationKind::Tanh).expect("valid config");
    let params = BlockParams::new(glorot_uniform(&mut rng, n, n), Vector::zeros(n), WeightMode::SkewSymmetric)
        .expect("square weight");
    let x = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<_>>().into();
    (cfg, params, x)
}

/// A diagonally dominant `n × n` system.
pub fn linear_system(n: usize, seed: u64) -> (Matrix, Vector) {
    let mut rng = Rng::new(seed);
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = rng.uniform(-1.0, 1.0);
        }
        a[(i, i)] += n as f64;
    }
    let b = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<_>>().into();
    (a, b)
}

/// The first example's depth-`depth` network and its training set.
pub fn example_one(depth: usize, theta: f64) -> (Model, LabeledSet) {
    let spec = ModelSpec::new(1, 5, 1, depth, theta, ActivationKind::Relu);
    let model = Model::init(spec, &mut Rng::new(0)).expect("valid spec");
    let (train, _) = make_regression(0, 100, 200).expect("valid sizes");
    (model, train)
}
