use std::fs;
use std::path::Path;

use imres_core::datasets::{self, regression_grid, regression_target, to_csv, LabeledSet};
use imres_core::network::{
    gradcheck, param_count, predict, random_gradcheck_case, save_checkpoint, train, Model, ModelSpec, TrainRecord,
};
use imres_core::stability::{self, SchemeKind, TestSystem, Trajectory};
use imres_core::{ActivationKind, Error, LossKind, Rng};

use crate::config::{DataConfig, ExperimentConfig};
use crate::svg::{Chart, Series};

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_GRADCHECK: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;

pub const GRADCHECK_TOL: f64 = 1e-5;
pub const SPECTRA_SAMPLES: usize = 301;
pub const SPECTRA_MAX_H_OMEGA: f64 = 3.0;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(EXIT_IO, e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::new(EXIT_IO, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_IO, e.to_string())
    }
}

fn usage(e: Error) -> Failure {
    Failure::new(EXIT_USAGE, e.to_string())
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", dir.display())))
}

pub struct StabilityArgs<'a> {
    pub schemes: Vec<SchemeKind>,
    pub omega: f64,
    pub h: f64,
    pub steps: usize,
    pub y0: f64,
    pub z0: f64,
    pub out: &'a Path,
    pub svg: bool,
}

/// Rows `step,y,z,energy`; a diverged run ends with `k,inf,inf,inf` where
/// `k` is the step that overflowed.
pub fn write_phase_csv(path: &Path, sys: &TestSystem, traj: &Trajectory) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "y", "z", "energy"])?;
    for (k, &(y, z)) in traj.states.iter().enumerate() {
        w.write_record([k.to_string(), y.to_string(), z.to_string(), sys.energy(y, z).to_string()])?;
    }
    if let Some(k) = traj.diverged_at {
        let inf = f64::INFINITY.to_string();
        w.write_record([k.to_string(), inf.clone(), inf.clone(), inf])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectra_csv(path: &Path) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["h_omega", "scheme", "rho"])?;
    for r in stability::spectral_sweep(SPECTRA_MAX_H_OMEGA, SPECTRA_SAMPLES) {
        w.write_record([r.h_omega.to_string(), r.scheme.to_string(), r.spectral_radius.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_stability(args: &StabilityArgs) -> Result<(), Failure> {
    let sys = TestSystem::new(args.omega).map_err(usage)?;
    if !(args.h > 0.0 && args.h.is_finite()) {
        return Err(Failure::new(EXIT_USAGE, format!("--h must be positive, got {}", args.h)));
    }
    if !(args.y0.is_finite() && args.z0.is_finite()) {
        return Err(Failure::new(EXIT_USAGE, "initial state must be finite"));
    }
    create_dir(args.out)?;
    for &scheme in &args.schemes {
        let traj = stability::integrate(scheme, &sys, args.y0, args.z0, args.h, args.steps).map_err(usage)?;
        write_phase_csv(&args.out.join(format!("phase_{scheme}.csv")), &sys, &traj)?;
        if args.svg {
            let chart = Chart {
                title: &format!("{scheme}, h = {}, omega = {}", args.h, args.omega),
                x_label: "y",
                y_label: "omega * z",
                log_y: false,
                series: vec![Series {
                    label: scheme.to_string(),
                    points: traj.states.iter().map(|&(y, z)| (y, args.omega * z)).collect(),
                }],
            };
            fs::write(args.out.join(format!("phase_{scheme}.svg")), chart.render())?;
        }
        let (y, z) = *traj.states.last().expect("initial state");
        match traj.diverged_at {
            Some(k) => println!("{scheme}: diverged at step {k}"),
            None => println!(
                "{scheme}: {} steps, energy {:.6e} -> {:.6e}",
                args.steps,
                sys.energy(args.y0, args.z0),
                sys.energy(y, z)
            ),
        }
    }
    write_spectra_csv(&args.out.join("spectra.csv"))?;
    Ok(())
}

pub struct GradcheckArgs {
    pub seed: u64,
    pub theta: f64,
    pub depth: usize,
    pub width: usize,
    pub paper_param_grad: bool,
}

/// Input width 2, one output, Tanh blocks, squared error.
pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<(), Failure> {
    let mut spec = ModelSpec::new(2, args.width, 1, args.depth, args.theta, ActivationKind::Tanh);
    spec.paper_param_grad = args.paper_param_grad;
    spec.validate().map_err(usage)?;
    let (m, x, y) = random_gradcheck_case(spec, args.seed)?;
    let r = gradcheck(&m, &x, &y, LossKind::SquaredError, GRADCHECK_TOL)?;
    println!("checked {} coordinates", r.checked);
    println!("max relative error: {:.3e} at {}", r.max_rel_err, r.worst_coordinate);
    if !r.worst_block_weight.is_empty() {
        println!(
            "max block-weight error: {:.3e} at {}",
            r.max_block_weight_err, r.worst_block_weight
        );
    }
    if r.passed {
        println!("PASS (tolerance {GRADCHECK_TOL:e})");
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_GRADCHECK,
            format!(
                "FAIL: relative error {:.3e} exceeds {GRADCHECK_TOL:e} (worst block weight {})",
                r.max_rel_err, r.worst_block_weight
            ),
        ))
    }
}

pub fn write_history(path: &Path, rec: &TrainRecord, with_accuracy: bool) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["epoch", "train_loss", "val_loss"];
    if with_accuracy {
        header.push("val_accuracy");
    }
    w.write_record(&header)?;
    for e in std::iter::once(&rec.initial).chain(&rec.epochs) {
        let mut row = vec![e.epoch.to_string(), e.train_loss.to_string(), e.val_loss.to_string()];
        if with_accuracy {
            row.push(e.val_accuracy.map_or_else(String::new, |a| a.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub const REGRESSION_PLOT_POINTS: usize = 201;
pub const CLASSIFIER_GRID: usize = 61;
pub const CLASSIFIER_EXTENT: f64 = 1.2;

/// Example 1: `x,output,target` on a grid of `[−1, 1]`. Example 2:
/// `x0,x1,probability` on a grid of `[−1.2, 1.2]²`.
pub fn write_predictions(path: &Path, m: &Model, data: &DataConfig) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    match data {
        DataConfig::Regression { .. } => {
            w.write_record(["x", "output", "target"])?;
            for x in regression_grid(REGRESSION_PLOT_POINTS) {
                let out = predict(m, &[x])?;
                w.write_record([x.to_string(), out[0].to_string(), regression_target(x).to_string()])?;
            }
        }
        DataConfig::Spirals { .. } => {
            w.write_record(["x0", "x1", "probability"])?;
            let step = 2.0 * CLASSIFIER_EXTENT / (CLASSIFIER_GRID - 1) as f64;
            for i in 0..CLASSIFIER_GRID {
                for j in 0..CLASSIFIER_GRID {
                    let x = [-CLASSIFIER_EXTENT + i as f64 * step, -CLASSIFIER_EXTENT + j as f64 * step];
                    let out = predict(m, &x)?;
                    w.write_record([x[0].to_string(), x[1].to_string(), out[0].to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn loss_chart(rec: &TrainRecord, title: &str) -> String {
    let epochs = || std::iter::once(&rec.initial).chain(&rec.epochs);
    Chart {
        title,
        x_label: "epoch",
        y_label: "loss",
        log_y: true,
        series: vec![
            Series {
                label: "train".into(),
                points: epochs().map(|e| (e.epoch as f64, e.train_loss)).collect(),
            },
            Series {
                label: "validation".into(),
                points: epochs().map(|e| (e.epoch as f64, e.val_loss)).collect(),
            },
        ],
    }
    .render()
}

pub fn cmd_train(config_path: &Path, out_override: Option<&Path>) -> Result<(), Failure> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", config_path.display())))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let out = out_override.unwrap_or(&cfg.output.dir);
    create_dir(out)?;

    let (train_set, val_set) = cfg.data.build()?;
    let mut model = Model::init(cfg.model.clone(), &mut Rng::new(cfg.train.seed))?;
    println!("block parameters: {}", param_count(&model, true));
    println!("total parameters: {}", param_count(&model, false));

    let rec = train(&mut model, &train_set, &val_set, &cfg.train)?;
    let binary = matches!(cfg.data, DataConfig::Spirals { .. });
    write_history(&out.join("history.csv"), &rec, binary)?;
    if cfg.output.svg {
        fs::write(out.join("loss.svg"), loss_chart(&rec, "training history"))?;
    }
    if rec.diverged {
        return Err(Failure::new(
            EXIT_DIVERGED,
            format!("training diverged after {} completed epochs", rec.epochs.len()),
        ));
    }
    save_checkpoint(&model, out.join("checkpoint.json"))?;
    write_predictions(&out.join("predictions.csv"), &model, &cfg.data)?;
    let last = rec.last();
    print!(
        "epochs: {}, train loss {:.6e} -> {:.6e}, val loss {:.6e}",
        rec.epochs.len(),
        rec.initial.train_loss,
        last.train_loss,
        last.val_loss
    );
    match last.val_accuracy {
        Some(a) => println!(", val accuracy {a:.4}"),
        None => println!(),
    }
    Ok(())
}

pub fn write_sets(out: &Path, sets: &[(&str, &LabeledSet)]) -> Result<(), Failure> {
    create_dir(out)?;
    for (name, set) in sets {
        to_csv(set, out.join(format!("{name}.csv")))?;
        println!("{name}: {} rows", set.len());
    }
    Ok(())
}

pub fn cmd_dataset_regression(out: &Path, seed: u64) -> Result<(), Failure> {
    let (tr, va) = datasets::make_regression(seed, 100, 200)?;
    write_sets(out, &[("train", &tr), ("val", &va)])
}

pub fn cmd_dataset_spirals(out: &Path) -> Result<(), Failure> {
    let (tr, va) = datasets::make_spirals(513)?;
    write_sets(out, &[("train", &tr), ("val", &va)])
}
