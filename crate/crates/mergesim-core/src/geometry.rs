//! Bicycle-model kinematics, road layout, and shared simulation constants.
//!
//! The continuous-time model is
//! `x' = v cos(phi + beta)`, `y' = v sin(phi + beta)`,
//! `phi' = (v / l_r) sin(beta)`, `v' = a`, with sideslip
//! `beta = atan(l_r / (l_r + l_f) * tan(delta))`. Discrete states are
//! produced by one classical RK4 step per sampling period with zero-order
//! held controls, followed by an optional additive disturbance.

use serde::{Deserialize, Serialize};

/// Vehicle state at the center of gravity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Longitudinal CoG position [m].
    pub x: f64,
    /// Lateral CoG position [m].
    pub y: f64,
    /// Heading angle [rad].
    pub phi: f64,
    /// Speed [m/s].
    pub v: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, phi: f64, v: f64) -> Self {
        Self { x, y, phi, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.phi.is_finite() && self.v.is_finite()
    }

    /// Lateral velocity component [m/s].
    pub fn lateral_rate(&self) -> f64 {
        self.v * self.phi.sin()
    }

    /// Euclidean distance between CoG positions [m].
    pub fn distance_to(&self, other: &VehicleState) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Longitudinal acceleration and front steering angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Longitudinal acceleration [m/s^2].
    pub a: f64,
    /// Front wheel steering angle [rad], |delta| <= MAX_STEER.
    pub delta: f64,
}

impl ControlInput {
    pub const fn new(a: f64, delta: f64) -> Self {
        Self { a, delta }
    }

    pub const fn coast() -> Self {
        Self { a: 0.0, delta: 0.0 }
    }
}

/// Steering magnitude cap [rad].
pub const MAX_STEER: f64 = 0.6;

/// Bounding box and axle layout of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleDims {
    /// CoG to front axle [m].
    pub l_f: f64,
    /// CoG to rear axle [m].
    pub l_r: f64,
    /// Bounding-box length [m].
    pub length: f64,
    /// Bounding-box width [m].
    pub width: f64,
}

impl VehicleDims {
    pub fn new(l_f: f64, l_r: f64, length: f64, width: f64) -> Self {
        Self {
            l_f,
            l_r,
            length,
            width,
        }
    }

    /// Typical passenger car.
    pub fn car() -> Self {
        Self {
            l_f: 1.4,
            l_r: 1.4,
            length: 5.0,
            width: 2.0,
        }
    }

    /// Distance between axles [m].
    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }
}

impl Default for VehicleDims {
    fn default() -> Self {
        Self::car()
    }
}

/// Straight multi-lane highway with an on-ramp that ends at `x_ramp`.
///
/// Lane centers are ordered by increasing lateral coordinate with the ramp
/// lane sitting below the first mainline lane. The ramp lane exists only for
/// `x` in `[x_ramp - l_ramp, x_ramp]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadGeometry {
    /// Number of mainline lanes.
    pub lane_count: usize,
    /// Lane width [m].
    pub w_lane: f64,
    /// Mainline lane centers, strictly increasing, spaced by `w_lane` [m].
    pub lane_centers: Vec<f64>,
    /// Longitudinal coordinate of the ramp end [m].
    pub x_ramp: f64,
    /// Ramp length [m].
    pub l_ramp: f64,
    /// Lateral center of the ramp lane [m].
    pub y_ramp: f64,
    /// Ramp lane width [m].
    pub w_ramp: f64,
}

impl RoadGeometry {
    /// Mainline lanes at centers `0, w_lane, 2*w_lane, ...` with the ramp one
    /// lane width below the first mainline lane.
    pub fn highway_with_ramp(lane_count: usize, x_ramp: f64, l_ramp: f64) -> Self {
        let w_lane = 3.5;
        let lane_centers = (0..lane_count).map(|i| i as f64 * w_lane).collect();
        Self {
            lane_count,
            w_lane,
            lane_centers,
            x_ramp,
            l_ramp,
            y_ramp: -w_lane,
            w_ramp: w_lane,
        }
    }

    /// Whether a lateral coordinate lies in the ramp lane band.
    pub fn in_ramp_band(&self, y: f64) -> bool {
        (y - self.y_ramp).abs() < self.w_ramp / 2.0
    }

    /// Whether a CoG position is on the ramp lane proper.
    pub fn on_ramp(&self, x: f64, y: f64) -> bool {
        self.in_ramp_band(y) && x >= self.x_ramp - self.l_ramp && x <= self.x_ramp
    }

    /// Mainline lane center closest to `y`.
    pub fn nearest_lane_center(&self, y: f64) -> f64 {
        let mut best = self.lane_centers[0];
        for &c in &self.lane_centers {
            if (y - c).abs() < (y - best).abs() {
                best = c;
            }
        }
        best
    }

    /// Lane center of the band (ramp included) that contains `y`.
    pub fn current_lane_center(&self, y: f64) -> f64 {
        if self.in_ramp_band(y) {
            self.y_ramp
        } else {
            self.nearest_lane_center(y)
        }
    }

    /// Adjacent lane center one lane to the left (+y), if any.
    ///
    /// The ramp counts as a lane of origin but never as a target: its only
    /// neighbor is the first mainline lane.
    pub fn left_neighbor(&self, y: f64) -> Option<f64> {
        let current = self.current_lane_center(y);
        if self.in_ramp_band(y) {
            return Some(self.lane_centers[0]);
        }
        self.lane_centers
            .iter()
            .copied()
            .find(|&c| (c - current - self.w_lane).abs() < 1e-6)
    }

    /// Adjacent lane center one lane to the right (-y), if any.
    pub fn right_neighbor(&self, y: f64) -> Option<f64> {
        if self.in_ramp_band(y) {
            return None;
        }
        let current = self.current_lane_center(y);
        self.lane_centers
            .iter()
            .copied()
            .find(|&c| (current - c - self.w_lane).abs() < 1e-6)
    }

    /// Outer lateral bounds of the mainline band [m].
    pub fn mainline_bounds(&self) -> (f64, f64) {
        (
            self.lane_centers[0] - self.w_lane / 2.0,
            self.lane_centers[self.lane_count - 1] + self.w_lane / 2.0,
        )
    }

    /// Longitudinal window of the ramp lane [m].
    pub fn ramp_window(&self) -> (f64, f64) {
        (self.x_ramp - self.l_ramp, self.x_ramp)
    }
}

/// Timing grid, speed and acceleration limits shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConstants {
    /// Base sampling period [s].
    pub dt: f64,
    /// Steps per trajectory (horizon N).
    pub n_horizon: usize,
    /// Steps per decision period (N').
    pub n_decision: usize,
    /// Duration of a complete lane change [s].
    pub t_lane: f64,
    /// Minimum speed [m/s].
    pub v_min: f64,
    /// Maximum speed [m/s].
    pub v_max: f64,
    /// Minimum longitudinal acceleration [m/s^2].
    pub a_min: f64,
    /// Maximum longitudinal acceleration [m/s^2].
    pub a_max: f64,
}

impl Default for SimConstants {
    fn default() -> Self {
        Self {
            dt: 0.05,
            n_horizon: 120,
            n_decision: 10,
            t_lane: 4.0,
            v_min: 2.0,
            v_max: 34.0,
            a_min: -6.0,
            a_max: 6.0,
        }
    }
}

impl SimConstants {
    /// Steps in a complete lane change.
    pub fn n_lane(&self) -> usize {
        (self.t_lane / self.dt).round() as usize
    }

    /// Decision period [s].
    pub fn decision_period(&self) -> f64 {
        self.n_decision as f64 * self.dt
    }

    /// Trajectory duration [s].
    pub fn horizon_secs(&self) -> f64 {
        self.n_horizon as f64 * self.dt
    }

    /// Step index ranges `(start, end)` of the per-decision-period reward
    /// segments, for n = 0 ..= floor(N/N'). The nominal end of the last
    /// segment exceeds the horizon, so it is clamped to the final state.
    pub fn segment_bounds(&self) -> Vec<(usize, usize)> {
        let count = self.n_horizon / self.n_decision;
        (0..=count)
            .map(|n| {
                let start = n * self.n_decision;
                let end = ((n + 1) * self.n_decision).min(self.n_horizon);
                (start, end)
            })
            .collect()
    }
}

/// Sideslip angle from the front steering angle.
pub fn sideslip(delta: f64, dims: &VehicleDims) -> f64 {
    (dims.l_r / (dims.l_r + dims.l_f) * delta.tan()).atan()
}

fn derivative(s: [f64; 4], a: f64, beta: f64, l_r: f64) -> [f64; 4] {
    let [_, _, phi, v] = s;
    [
        v * (phi + beta).cos(),
        v * (phi + beta).sin(),
        v / l_r * beta.sin(),
        a,
    ]
}

/// Advance one sampling period with zero-order-held controls.
///
/// One classical RK4 step integrates the continuous model over `dt`; the
/// disturbance, if any, is added to the integrated state. Speed is clamped
/// at zero from below.
pub fn step(
    s: &VehicleState,
    u: &ControlInput,
    dims: &VehicleDims,
    dt: f64,
    disturbance: Option<[f64; 4]>,
) -> VehicleState {
    let beta = sideslip(u.delta, dims);
    let y0 = [s.x, s.y, s.phi, s.v];

    let k1 = derivative(y0, u.a, beta, dims.l_r);
    let mid1 = add_scaled(y0, k1, dt / 2.0);
    let k2 = derivative(mid1, u.a, beta, dims.l_r);
    let mid2 = add_scaled(y0, k2, dt / 2.0);
    let k3 = derivative(mid2, u.a, beta, dims.l_r);
    let end = add_scaled(y0, k3, dt);
    let k4 = derivative(end, u.a, beta, dims.l_r);

    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if let Some(w) = disturbance {
        for i in 0..4 {
            out[i] += w[i];
        }
    }
    out[3] = out[3].max(0.0);
    VehicleState::new(out[0], out[1], out[2], out[3])
}

fn add_scaled(base: [f64; 4], dir: [f64; 4], h: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = base[i] + h * dir[i];
    }
    out
}

/// State sequence produced by repeated disturbance-free steps.
///
/// The result has one more entry than `controls`.
pub fn rollout(
    s0: &VehicleState,
    controls: &[ControlInput],
    dims: &VehicleDims,
    dt: f64,
) -> Vec<VehicleState> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(*s0);
    let mut current = *s0;
    for u in controls {
        current = step(&current, u, dims, dt, None);
        states.push(current);
    }
    states
}
