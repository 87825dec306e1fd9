//! Deterministic discrete-time queue-based traffic simulator.
//!
//! Time advances in 1 s ticks. A vehicle entering a lane traverses it at free
//! flow, joins the FIFO queue at the stop line, and leaves once its lane has
//! had two consecutive green ticks (a 2 s saturation headway) and the next
//! lane on its route has room. Queue membership is what "stopped" means here.

mod network;
mod state;

pub use network::{
    free_flow_ticks, Intersection, IntersectionId, Lane, LaneId, Movement, Phase, RoadNetwork,
    FREE_FLOW_SPEED,
};
pub use state::{
    GlobalStats, Observation, SimState, Simulation, TickReport, TripRecord, Vehicle, VehicleId,
    VehicleStatus, SATURATION_HEADWAY,
};
