use std::sync::Arc;

use super::{FlowKind, ScenarioConfig};
use crate::scenario::{
    constant_flow, gen_grid, gen_synthetic_peak, grid_route_specs, load_flow, load_roadnet, FlowSchedule, LaneParams,
    NetworkSpec,
};
use crate::sim::{LaneId, RoadNetwork};
use crate::Result;

/// A validated network, its resolved routes and the flow program.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: NetworkSpec,
    pub net: Arc<RoadNetwork>,
    pub routes: Arc<[Vec<LaneId>]>,
    pub flow: FlowSchedule,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        let (spec, flow) = match config {
            ScenarioConfig::Grid {
                rows,
                cols,
                flow,
                weighting,
                lane_length,
                lane_capacity,
                horizon,
            } => {
                let spec = gen_grid(
                    *rows,
                    *cols,
                    &LaneParams {
                        length: *lane_length,
                        capacity: *lane_capacity,
                    },
                )?;
                let net = RoadNetwork::build(&spec)?;
                let routes = grid_route_specs(&net, *weighting)?;
                let flow = match flow {
                    FlowKind::SyntheticPeak => gen_synthetic_peak(*horizon, routes, 0)?,
                    FlowKind::Constant { rate } => constant_flow(*rate, *horizon, routes, 0)?,
                };
                (spec, flow)
            }
            ScenarioConfig::Files { roadnet, flow } => (load_roadnet(roadnet)?, load_flow(flow)?),
        };
        Self::from_parts(spec, flow)
    }

    pub fn from_parts(spec: NetworkSpec, flow: FlowSchedule) -> Result<Self> {
        let net = Arc::new(RoadNetwork::build(&spec)?);
        let routes: Arc<[Vec<LaneId>]> = flow.resolve_routes(&net)?.into();
        Ok(Scenario { spec, net, routes, flow })
    }

    pub fn horizon(&self) -> u64 {
        self.flow.horizon
    }

    pub fn num_intersections(&self) -> usize {
        self.net.num_intersections()
    }
}
