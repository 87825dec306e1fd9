//! Road-network and traffic-flow descriptions: file formats, validation and
//! generators (grid roadnets, the synthetic peak-hour schedule).

mod flow;
mod grid;
mod spec;

pub use flow::{
    constant_flow, gen_synthetic_peak, load_flow, save_flow, Arrival, ArrivalSampler, FlowSchedule,
    FlowWindow, RouteSpec, Sampling, SYNTHETIC_PEAK_RATES, SYNTHETIC_PEAK_WINDOW,
};
pub use grid::{gen_grid, grid_route_specs, grid_routes, Heading, LaneParams, RouteWeighting};
pub use spec::{
    load_roadnet, save_roadnet, GridDims, IntersectionSpec, LaneSpec, NetworkSpec, PhaseSpec,
    FORMAT_VERSION,
};

use std::path::Path;

use crate::{Error, Result};

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {} column {}: {e}", e.line(), e.column()),
    })
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
