use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::sim::{Movement, RoadNetwork};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Roadnet file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDims>,
    pub intersections: Vec<IntersectionSpec>,
    pub lanes: Vec<LaneSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionSpec {
    pub id: String,
    pub phases: Vec<PhaseSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub name: String,
    /// `[incoming lane, outgoing lane]` pairs.
    pub movements: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneSpec {
    pub id: String,
    pub road: String,
    /// Upstream intersection; absent for lanes entering the network.
    pub from: Option<String>,
    /// Downstream intersection; absent for lanes leaving the network.
    pub to: Option<String>,
    pub length: f64,
    pub capacity: usize,
    pub movement: Movement,
    #[serde(default)]
    pub connects_to: Vec<String>,
}

/// Reads and validates a roadnet file.
pub fn load_roadnet(path: impl AsRef<Path>) -> Result<NetworkSpec> {
    let path = path.as_ref();
    let spec: NetworkSpec = read_json(path)?;
    if spec.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: spec.format_version,
            expected: FORMAT_VERSION,
        });
    }
    RoadNetwork::build(&spec)?;
    Ok(spec)
}

pub fn save_roadnet(spec: &NetworkSpec, path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), spec)
}
