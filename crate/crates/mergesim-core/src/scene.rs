//! Subject-centric snapshots of nearby traffic.
//!
//! A [`Scene`] is what one decision maker sees: its own state plus the
//! adjacent vehicles it interacts with. Every behavioral evaluation,
//! likelihood computation, and prediction runs off a scene.

use serde::{Deserialize, Serialize};

use crate::geometry::{RoadGeometry, VehicleDims, VehicleState};

/// Maximum number of adjacent vehicles a driver reasons about.
pub const MAX_NEIGHBORS: usize = 8;

/// One vehicle as seen in a scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneVehicle {
    pub state: VehicleState,
    pub dims: VehicleDims,
    /// Lane center the driver is assumed to steer toward [m].
    pub goal_y: f64,
}

impl SceneVehicle {
    pub fn new(state: VehicleState, dims: VehicleDims, goal_y: f64) -> Self {
        Self {
            state,
            dims,
            goal_y,
        }
    }
}

/// The traffic one decision maker reasons about.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub subject: SceneVehicle,
    pub neighbors: Vec<SceneVehicle>,
}

impl Scene {
    pub fn new(subject: SceneVehicle, neighbors: Vec<SceneVehicle>) -> Self {
        Self { subject, neighbors }
    }

    /// Index of the neighbor nearest to the subject, if any.
    pub fn nearest_neighbor(&self) -> Option<usize> {
        let s = &self.subject.state;
        (0..self.neighbors.len()).min_by(|&a, &b| {
            s.distance_to(&self.neighbors[a].state)
                .total_cmp(&s.distance_to(&self.neighbors[b].state))
        })
    }
}

/// Lane center a driver is assumed to steer toward: the first mainline lane
/// for ramp vehicles (the ramp ends), otherwise the current lane center.
pub fn assumed_goal(road: &RoadGeometry, state: &VehicleState) -> f64 {
    if road.in_ramp_band(state.y) {
        road.lane_centers[0]
    } else {
        road.nearest_lane_center(state.y)
    }
}

/// Pick the adjacent set of vehicle `subject` out of `all`: the nearest
/// vehicles within `radius`, capped at `cap`, ordered by ascending distance.
/// Returns indices into `all`.
pub fn adjacent_indices(
    all: &[VehicleState],
    subject: usize,
    radius: f64,
    cap: usize,
) -> Vec<usize> {
    let s = &all[subject];
    let mut candidates: Vec<(usize, f64)> = all
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != subject)
        .map(|(i, st)| (i, s.distance_to(st)))
        .filter(|&(_, d)| d <= radius)
        .collect();
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    candidates.truncate(cap);
    candidates.into_iter().map(|(i, _)| i).collect()
}
