//! JSON checkpoints.
//!
//! ```json
//! { "format": "imres-checkpoint", "version": 1,
//!   "model": { "spec": {..}, "lift": {"w": {"rows","cols","data"}, "b": [..]},
//!              "blocks": [{"a": {..}, "b": [..], "mode": "skew-symmetric"}, ..],
//!              "proj": {..} } }
//! ```
//!
//! Floats are written in shortest round-trip form, so loading a saved model
//! gives back identical bits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::Model;

pub const CHECKPOINT_FORMAT: &str = "imres-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<M> {
    format: String,
    version: u32,
    model: M,
}

pub fn write_checkpoint<W: Write>(m: &Model, out: W) -> Result<()> {
    let env = Envelope {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        model: m,
    };
    serde_json::to_writer_pretty(out, &env).map_err(json_err)
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<Model> {
    let env: Envelope<Model> = serde_json::from_reader(input).map_err(json_err)?;
    if env.format != CHECKPOINT_FORMAT {
        return Err(Error::InvalidConfig(format!("not a checkpoint: format {:?}", env.format)));
    }
    if env.version != CHECKPOINT_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported checkpoint version {}",
            env.version
        )));
    }
    env.model.validate()?;
    Ok(env.model)
}

pub fn save_checkpoint(m: &Model, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(m, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

fn json_err(e: serde_json::Error) -> Error {
    if e.is_io() {
        return Error::Io(e.into());
    }
    Error::Parse {
        line: e.line(),
        message: e.to_string(),
    }
}
