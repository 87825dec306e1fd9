use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Parameters, Tensor};
use crate::scenario::{read_json, write_json};
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Serialized parameter tree with a shape manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub kind: String,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn capture<M: Parameters>(kind: &str, model: &M) -> Self {
        let mut tensors = Vec::new();
        model.visit("", &mut |name, t| {
            tensors.push(NamedTensor {
                name,
                shape: t.shape().to_vec(),
                data: t.data().to_vec(),
            })
        });
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            kind: kind.to_string(),
            tensors,
        }
    }

    /// Copies the stored values into `model`, which must have exactly the
    /// same parameter names and shapes.
    pub fn restore<M: Parameters>(&self, kind: &str, model: &mut M) -> Result<()> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::FormatVersion {
                found: self.format_version,
                expected: CHECKPOINT_VERSION,
            });
        }
        if self.kind != kind {
            return Err(Error::Shape(format!(
                "checkpoint holds a '{}' model, expected '{kind}'",
                self.kind
            )));
        }
        let mut targets: Vec<(String, &mut Tensor)> = Vec::new();
        model.visit_mut("", &mut |n, t| targets.push((n, t)));
        if targets.len() != self.tensors.len() {
            return Err(Error::Shape(format!(
                "checkpoint has {} tensors, model has {}",
                self.tensors.len(),
                targets.len()
            )));
        }
        for ((name, t), stored) in targets.iter().zip(&self.tensors) {
            if *name != stored.name || t.shape() != stored.shape.as_slice() || stored.data.len() != t.len() {
                return Err(Error::Shape(format!(
                    "checkpoint tensor {} {:?} does not match model tensor {} {:?}",
                    stored.name,
                    stored.shape,
                    name,
                    t.shape()
                )));
            }
        }
        for ((_, t), stored) in targets.into_iter().zip(&self.tensors) {
            t.data_mut().copy_from_slice(&stored.data);
        }
        Ok(())
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(t) = ckpt.tensors.iter().find(|t| t.data.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFinite(format!("tensor {} cannot be checkpointed", t.name)));
    }
    write_json(path, ckpt)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_json(path)
}
