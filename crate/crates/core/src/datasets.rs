//! The two benchmark datasets and their CSV form.
//!
//! CSV layout: a header `x0,…,x{d-1},y0,…,y{k-1}` followed by one row per
//! sample, every value written with 17 significant digits so that reading a
//! file back reproduces the set bit for bit.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{Rng, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Regression,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub inputs: Vec<Vector>,
    pub targets: Vec<Vector>,
    pub kind: TaskKind,
}

impl LabeledSet {
    pub fn new(inputs: Vec<Vector>, targets: Vec<Vector>, kind: TaskKind) -> Result<Self> {
        let set = Self {
            inputs,
            targets,
            kind,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} inputs but {} targets",
                self.inputs.len(),
                self.targets.len()
            )));
        }
        let (din, dout) = (self.input_dim(), self.target_dim());
        if self.inputs.iter().any(|x| x.len() != din) || self.targets.iter().any(|y| y.len() != dout) {
            return Err(Error::DimensionMismatch("ragged samples".into()));
        }
        if self.kind == TaskKind::Binary
            && self.targets.iter().flat_map(|t| t.iter()).any(|&v| v != 0.0 && v != 1.0)
        {
            return Err(Error::InvalidConfig("binary targets must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, |v| v.len())
    }

    pub fn target_dim(&self) -> usize {
        self.targets.first().map_or(0, |v| v.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vector, &Vector)> {
        self.inputs.iter().zip(&self.targets)
    }
}

/// `f(x) = sin(2πx) · exp(−x²/2)`.
pub fn regression_target(x: f64) -> f64 {
    (2.0 * PI * x).sin() * (-x * x / 2.0).exp()
}

/// Equispaced grid of `n` points on `[-1, 1]`.
pub fn regression_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![-1.0];
    }
    (0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64).collect()
}

/// Training inputs drawn uniformly on `[-1, 1]`, validation inputs on the
/// equispaced grid; targets are exact.
pub fn make_regression(seed: u64, n_train: usize, n_val: usize) -> Result<(LabeledSet, LabeledSet)> {
    if n_train == 0 || n_val == 0 {
        return Err(Error::InvalidCount("regression sets need at least one point each".into()));
    }
    let mut rng = Rng::new(seed);
    let xs: Vec<f64> = (0..n_train).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let build = |xs: Vec<f64>| LabeledSet {
        targets: xs.iter().map(|&x| Vector::from(vec![regression_target(x)])).collect(),
        inputs: xs.into_iter().map(|x| Vector::from(vec![x])).collect(),
        kind: TaskKind::Regression,
    };
    Ok((build(xs), build(regression_grid(n_val))))
}

/// Point `j` of a spiral arm with `n_class` points: `t = j/(n_class−1)`,
/// angle `3πt + class·π`, radius `0.2 + 0.8t`.
pub fn spiral_point(class: usize, j: usize, n_class: usize) -> (f64, f64) {
    let t = if n_class > 1 {
        j as f64 / (n_class - 1) as f64
    } else {
        0.0
    };
    let phi = 3.0 * PI * t + class as f64 * PI;
    let r = 0.2 + 0.8 * t;
    (r * phi.cos(), r * phi.sin())
}

/// Two interleaved spirals, `⌈n/2⌉` points labelled 0 and `⌊n/2⌋` labelled 1.
///
/// Along each arm every other point goes to validation: points with odd arm
/// index form the validation set, even ones the training set. Both sets keep
/// the classes interleaved.
pub fn make_spirals(n_total: usize) -> Result<(LabeledSet, LabeledSet)> {
    if n_total < 4 {
        return Err(Error::InvalidCount(format!("spirals need at least 4 points, got {n_total}")));
    }
    let counts = [n_total.div_ceil(2), n_total / 2];
    let empty = || LabeledSet {
        inputs: Vec::new(),
        targets: Vec::new(),
        kind: TaskKind::Binary,
    };
    let (mut train, mut val) = (empty(), empty());
    for j in 0..counts[0] {
        for (class, &n_class) in counts.iter().enumerate() {
            if j >= n_class {
                continue;
            }
            let (px, py) = spiral_point(class, j, n_class);
            let dest = if j % 2 == 0 { &mut train } else { &mut val };
            dest.inputs.push(Vector::from(vec![px, py]));
            dest.targets.push(Vector::from(vec![class as f64]));
        }
    }
    Ok((train, val))
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(set: &LabeledSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = (0..set.input_dim())
        .map(|i| format!("x{i}"))
        .chain((0..set.target_dim()).map(|i| format!("y{i}")))
        .collect();
    w.write_record(&header).map_err(csv_to_io)?;
    for (x, y) in set.iter() {
        w.write_record(x.iter().chain(y.iter()).map(|&v| fmt_f64(v)))
            .map_err(csv_to_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv(set: &LabeledSet, path: impl AsRef<Path>) -> Result<()> {
    write_csv(set, File::create(path)?)
}

fn csv_to_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Reads a set written by [`write_csv`]. The task kind is `Binary` when every
/// target is 0 or 1 and `Regression` otherwise.
pub fn read_csv<R: Read>(input: R) -> Result<LabeledSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = rdr.records();
    let header = match records.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file, expected a header".into(),
            })
        }
        Some(r) => r.map_err(|e| parse_err(1, e))?,
    };
    let din = header.iter().take_while(|h| h.starts_with('x')).count();
    let dout = header.len() - din;
    let expected: Vec<String> = (0..din)
        .map(|i| format!("x{i}"))
        .chain((0..dout).map(|i| format!("y{i}")))
        .collect();
    if din == 0 || dout == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            line: 1,
            message: format!("bad header, expected {}", expected.join(",")),
        });
    }

    let (mut inputs, mut targets) = (Vec::new(), Vec::new());
    for (idx, rec) in records.enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| parse_err(line, e))?;
        if rec.len() != din + dout {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", din + dout, rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(rec.len());
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("not a number: '{field}'"),
            })?;
            vals.push(v);
        }
        targets.push(Vector::from(vals.split_off(din)));
        inputs.push(Vector::from(vals));
    }
    if inputs.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    let binary = targets.iter().flat_map(|t| t.iter()).all(|&v| v == 0.0 || v == 1.0);
    let kind = if binary {
        TaskKind::Binary
    } else {
        TaskKind::Regression
    };
    LabeledSet::new(inputs, targets, kind)
}

fn parse_err(line: usize, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

pub fn from_csv(path: impl AsRef<Path>) -> Result<LabeledSet> {
    read_csv(File::open(path)?)
}
