use serde::Serialize;

use crate::error::Result;
use crate::numkit::{Rng, Vector};

use super::model::{accumulate_sample_grad, predict, regularizer, LossKind, Model, ModelGrads, ModelSpec};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// Solver tolerance used while checking, so that solve noise divided by the
/// difference step stays far below the checked accuracy.
pub const CHECK_SOLVER_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradcheckReport {
    /// Largest `|analytic − numeric| / (1 + |numeric|)` over all coordinates.
    pub max_rel_err: f64,
    pub worst_coordinate: String,
    /// The same maximum restricted to block weight matrices.
    pub max_block_weight_err: f64,
    pub worst_block_weight: String,
    pub checked: usize,
    pub tol: f64,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (1.0 + numeric.abs())
}

/// Single-sample loss plus the regularizer.
fn objective(m: &Model, x: &[f64], y: &[f64], loss: LossKind) -> Result<f64> {
    let out = predict(m, x)?;
    Ok(loss.value(&out, y) + regularizer(m).0)
}

/// Compares the analytic gradient of one sample's loss (plus the
/// regularizer) with central differences over every parameter and every
/// input coordinate.
pub fn gradcheck(m: &Model, x: &[f64], y: &[f64], loss: LossKind, tol: f64) -> Result<GradcheckReport> {
    let mut m = m.clone();
    m.spec.solver_tol = m.spec.solver_tol.min(CHECK_SOLVER_TOL);
    m.validate()?;

    let mut grads = ModelGrads::zeros_like(&m);
    let sample = accumulate_sample_grad(&m, x, y, loss, false, 1.0, &mut grads)?;
    let reg = regularizer(&m).1;
    grads.blocks.iter_mut().zip(&reg).for_each(|(g, r)| {
        g.a.as_mut_slice().iter_mut().zip(r.a.as_slice()).for_each(|(g, r)| *g += r);
        g.b.iter_mut().zip(r.b.iter()).for_each(|(g, r)| *g += r);
    });
    let analytic = grads.flatten();

    let mut report = GradcheckReport {
        max_rel_err: 0.0,
        worst_coordinate: String::new(),
        max_block_weight_err: 0.0,
        worst_block_weight: String::new(),
        checked: 0,
        tol,
        passed: false,
    };
    let mut params = m.flatten();
    for (i, &g) in analytic.iter().enumerate() {
        let orig = params[i];
        params[i] = orig + FD_STEP;
        set_flat(&mut m, &params);
        let plus = objective(&m, x, y, loss)?;
        params[i] = orig - FD_STEP;
        set_flat(&mut m, &params);
        let minus = objective(&m, x, y, loss)?;
        params[i] = orig;
        let err = relative_error(g, (plus - minus) / (2.0 * FD_STEP));
        let name = m.param_name(i);
        if name.starts_with("blocks[") && name.contains("].a[") && err > report.max_block_weight_err {
            report.max_block_weight_err = err;
            report.worst_block_weight = name.clone();
        }
        report.record(err, name);
    }
    set_flat(&mut m, &params);

    let mut xp = Vector::from(x);
    for (j, &g) in sample.grad_input.iter().enumerate() {
        xp[j] = x[j] + FD_STEP;
        let plus = objective(&m, &xp, y, loss)?;
        xp[j] = x[j] - FD_STEP;
        let minus = objective(&m, &xp, y, loss)?;
        xp[j] = x[j];
        report.record(relative_error(g, (plus - minus) / (2.0 * FD_STEP)), format!("input[{j}]"));
    }
    report.passed = report.max_rel_err <= tol;
    Ok(report)
}

impl GradcheckReport {
    fn record(&mut self, err: f64, name: String) {
        self.checked += 1;
        if err > self.max_rel_err || self.worst_coordinate.is_empty() {
            self.max_rel_err = self.max_rel_err.max(err);
            self.worst_coordinate = name;
        }
    }
}

/// A freshly initialized model with a random input in `[−1, 1]` and targets
/// in `[2, 3]`, far enough from the initial outputs that every gradient
/// component is of order one.
pub fn random_gradcheck_case(spec: ModelSpec, seed: u64) -> Result<(Model, Vector, Vector)> {
    let mut rng = Rng::new(seed);
    let m = Model::init(spec, &mut rng)?;
    let x = (0..m.spec.input_dim).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<_>>();
    let y = (0..m.spec.output_dim).map(|_| rng.uniform(2.0, 3.0)).collect::<Vec<_>>();
    Ok((m, x.into(), y.into()))
}

/// Overwrites all parameters from a flat vector in [`Model::flatten`] order.
pub fn set_flat(m: &mut Model, flat: &[f64]) {
    let mut offset = 0;
    for s in m.slices_mut() {
        s.copy_from_slice(&flat[offset..offset + s.len()]);
        offset += s.len();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{ActivationKind, WeightMode};
    use crate::network::ModelSpec;
    use crate::numkit::Rng;

    #[test]
    fn linear_zero_model_agrees() {
        let spec = ModelSpec::new(2, 3, 2, 2, 0.5, ActivationKind::Identity);
        let m = Model::zeros(spec).unwrap();
        let r = gradcheck(&m, &[0.4, -0.3], &[1.0, -2.0], LossKind::SquaredError, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.checked, m.num_params() + 2);
    }

    #[test]
    fn random_model_agrees() {
        let spec = ModelSpec::new(2, 3, 1, 2, 0.5, ActivationKind::Tanh);
        let m = Model::init(spec, &mut Rng::new(11)).unwrap();
        let r = gradcheck(&m, &[0.5, -0.8], &[2.0], LossKind::SquaredError, 1e-5).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn reduced_variant_fails_on_block_weights() {
        let mut spec = ModelSpec::new(2, 3, 1, 2, 0.5, ActivationKind::Tanh);
        spec.paper_param_grad = true;
        spec.weight_mode = WeightMode::Raw;
        let m = Model::init(spec, &mut Rng::new(11)).unwrap();
        let r = gradcheck(&m, &[0.5, -0.8], &[3.0], LossKind::SquaredError, 1e-5).unwrap();
        assert!(!r.passed);
        assert!(r.max_block_weight_err > 0.1, "{r:?}");
    }

    #[test]
    fn random_cases_separate_full_and_reduced_gradients() {
        for seed in 0..10 {
            for theta in [0.5, 0.75] {
                let mut spec = ModelSpec::new(2, 3, 1, 2, theta, ActivationKind::Tanh);
                let (m, x, y) = random_gradcheck_case(spec.clone(), seed).unwrap();
                let r = gradcheck(&m, &x, &y, LossKind::SquaredError, 1e-5).unwrap();
                assert!(r.passed, "{r:?}");
                spec.paper_param_grad = true;
                let (m, x, y) = random_gradcheck_case(spec, seed).unwrap();
                let r = gradcheck(&m, &x, &y, LossKind::SquaredError, 1e-5).unwrap();
                assert!(r.max_block_weight_err > 0.1, "seed {seed} theta {theta}: {r:?}");
            }
        }
    }

    #[test]
    fn set_flat_round_trips() {
        let spec = ModelSpec::new(2, 3, 1, 2, 0.5, ActivationKind::Tanh);
        let m = Model::init(spec.clone(), &mut Rng::new(1)).unwrap();
        let mut z = Model::zeros(spec).unwrap();
        set_flat(&mut z, &m.flatten());
        assert_eq!(z, m);
    }
}
