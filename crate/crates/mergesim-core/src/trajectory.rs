//! State-dependent action space built from a fixed library of 225 control
//! sequences: 15 longitudinal profiles crossed with 15 lateral maneuvers.
//!
//! Lateral maneuvers follow 5th-order polynomials whose coefficients are
//! re-solved at every sampling step from the inherited lateral rates, with
//! the longitudinal acceleration held constant for the remainder of the
//! change. The steering profile is recovered afterwards by inverting the
//! kinematics heading equation between consecutive states.

use crate::error::{Error, Result};
use crate::geometry::{
    rollout, ControlInput, RoadGeometry, SimConstants, VehicleDims, VehicleState, MAX_STEER,
};

/// Constant accelerations of the 13 fixed longitudinal profiles [m/s^2].
pub const CONSTANT_ACCELS: [f64; 13] = [
    -6.0, -4.5, -3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0, 4.5, 6.0,
];

/// Longitudinal control profile over the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LonProfile {
    /// Constant acceleration for the whole horizon.
    Constant(f64),
    /// `a` until `switch_time` seconds, zero afterwards.
    ThenCoast { a: f64, switch_time: f64 },
}

impl LonProfile {
    pub fn accel_at(&self, t: f64) -> f64 {
        match *self {
            LonProfile::Constant(a) => a,
            LonProfile::ThenCoast { a, switch_time } => {
                if t < switch_time - 1e-9 {
                    a
                } else {
                    0.0
                }
            }
        }
    }
}

/// Side of a lateral maneuver; left is +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneSide {
    Left,
    Right,
}

/// Lateral maneuver of a library entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatManeuver {
    Keep,
    /// Complete lane change beginning at `start_step`.
    Change { side: LaneSide, start_step: usize },
    /// Change beginning at step 0, re-targeting the original lane center at
    /// `revert_step`.
    Abort { side: LaneSide, revert_step: usize },
}

/// One of the 225 abstract maneuver descriptors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverDescriptor {
    pub library_index: usize,
    pub lon: LonProfile,
    pub lat: LatManeuver,
}

/// The fixed 15 x 15 control library.
///
/// Index `m = lat_index * 15 + lon_index` where longitudinal profiles are the
/// 13 constants of [`CONSTANT_ACCELS`] followed by accelerate-then-coast
/// (+2 m/s^2 for 2 s) and decelerate-then-coast (-2 m/s^2 for 2 s), and
/// lateral maneuvers are keep, five left-change starts, five right-change
/// starts, two left aborts, and two right aborts.
pub fn control_library(consts: &SimConstants) -> Vec<ManeuverDescriptor> {
    let steps_per_half_sec = (0.5 / consts.dt).round() as usize;
    let mut lats = Vec::with_capacity(15);
    lats.push(LatManeuver::Keep);
    for side in [LaneSide::Left, LaneSide::Right] {
        for k in 0..5 {
            lats.push(LatManeuver::Change {
                side,
                start_step: k * steps_per_half_sec,
            });
        }
    }
    for side in [LaneSide::Left, LaneSide::Right] {
        for k in [2, 4] {
            lats.push(LatManeuver::Abort {
                side,
                revert_step: k * steps_per_half_sec,
            });
        }
    }

    let mut lons = Vec::with_capacity(15);
    for a in CONSTANT_ACCELS {
        lons.push(LonProfile::Constant(a));
    }
    lons.push(LonProfile::ThenCoast {
        a: 2.0,
        switch_time: 2.0,
    });
    lons.push(LonProfile::ThenCoast {
        a: -2.0,
        switch_time: 2.0,
    });

    let mut out = Vec::with_capacity(225);
    for (li, lat) in lats.iter().enumerate() {
        for (ji, lon) in lons.iter().enumerate() {
            out.push(ManeuverDescriptor {
                library_index: li * 15 + ji,
                lon: *lon,
                lat: *lat,
            });
        }
    }
    out
}

/// Number of entries in the fixed control library.
pub const LIBRARY_SIZE: usize = 225;

/// Quintic coefficients for both axes, constant term first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticCoeffs {
    /// Longitudinal coefficients.
    pub p: [f64; 6],
    /// Lateral coefficients.
    pub q: [f64; 6],
}

/// Position, velocity, and acceleration imposed on one axis at `t0` and `t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBoundary {
    pub t0: f64,
    pub t1: f64,
    pub pos0: f64,
    pub vel0: f64,
    pub acc0: f64,
    pub pos1: f64,
    pub vel1: f64,
    pub acc1: f64,
}

pub fn poly_eval(c: &[f64; 6], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
}

pub fn poly_d1(c: &[f64; 6], t: f64) -> f64 {
    (1..6).rev().fold(0.0, |acc, i| acc * t + i as f64 * c[i])
}

pub fn poly_d2(c: &[f64; 6], t: f64) -> f64 {
    (2..6)
        .rev()
        .fold(0.0, |acc, i| acc * t + (i * (i - 1)) as f64 * c[i])
}

/// Solve one axis of the two-point boundary-value problem by Gaussian
/// elimination on the 6x6 Vandermonde-style system.
fn solve_axis(b: &AxisBoundary) -> Result<[f64; 6]> {
    if (b.t1 - b.t0).abs() < 1e-12 {
        return Err(Error::SingularSystem);
    }
    let mut m = [[0.0f64; 7]; 6];
    for (row, &(t, order, rhs)) in [
        (b.t0, 0usize, b.pos0),
        (b.t0, 1, b.vel0),
        (b.t0, 2, b.acc0),
        (b.t1, 0, b.pos1),
        (b.t1, 1, b.vel1),
        (b.t1, 2, b.acc1),
    ]
    .iter()
    .enumerate()
    {
        for j in 0..6 {
            m[row][j] = match order {
                0 => t.powi(j as i32),
                1 => {
                    if j >= 1 {
                        j as f64 * t.powi(j as i32 - 1)
                    } else {
                        0.0
                    }
                }
                _ => {
                    if j >= 2 {
                        (j * (j - 1)) as f64 * t.powi(j as i32 - 2)
                    } else {
                        0.0
                    }
                }
            };
        }
        m[row][6] = rhs;
    }

    // Partial-pivot elimination.
    for col in 0..6 {
        let pivot = (col..6)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-12 {
            return Err(Error::SingularSystem);
        }
        m.swap(col, pivot);
        for row in (col + 1)..6 {
            let f = m[row][col] / m[col][col];
            for j in col..7 {
                m[row][j] -= f * m[col][j];
            }
        }
    }
    let mut c = [0.0f64; 6];
    for row in (0..6).rev() {
        let mut acc = m[row][6];
        for j in (row + 1)..6 {
            acc -= m[row][j] * c[j];
        }
        c[row] = acc / m[row][row];
    }
    Ok(c)
}

/// Unique degree-5 coefficients satisfying both axes' boundary conditions.
pub fn solve_quintic(x_bc: &AxisBoundary, y_bc: &AxisBoundary) -> Result<QuinticCoeffs> {
    Ok(QuinticCoeffs {
        p: solve_axis(x_bc)?,
        q: solve_axis(y_bc)?,
    })
}

/// Closed-form quintic in time shifted so the start sits at u = 0. Same
/// polynomial as the 6x6 solve, cheaper in the per-step recursion.
#[derive(Debug, Clone, Copy)]
struct ShiftedQuintic {
    c: [f64; 6],
}

impl ShiftedQuintic {
    fn solve(tau: f64, p0: f64, v0: f64, a0: f64, p1: f64, v1: f64, a1: f64) -> Self {
        let dp = p1 - (p0 + v0 * tau + 0.5 * a0 * tau * tau);
        let dv = v1 - (v0 + a0 * tau);
        let da = a1 - a0;
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let c3 = (10.0 * dp - 4.0 * dv * tau + 0.5 * da * t2) / t3;
        let c4 = (-15.0 * dp + 7.0 * dv * tau - da * t2) / (t3 * tau);
        let c5 = (6.0 * dp - 3.0 * dv * tau + 0.5 * da * t2) / (t3 * t2);
        Self {
            c: [p0, v0, 0.5 * a0, c3, c4, c5],
        }
    }

    fn eval(&self, u: f64) -> (f64, f64, f64) {
        (poly_eval(&self.c, u), poly_d1(&self.c, u), poly_d2(&self.c, u))
    }
}

/// A synthesized lateral-maneuver leg.
struct LaneChangeLeg {
    states: Vec<VehicleState>,
    controls: Vec<ControlInput>,
    end_lat_rates: (f64, f64),
}

/// Per-step re-solve of the lane-change polynomial.
///
/// `accel_of_step(k)` supplies the longitudinal acceleration at local step k;
/// the current value is held constant through the remainder of the change
/// when imposing the terminal conditions. `advance_steps` may stop the leg
/// early (abort maneuvers), while the polynomial horizon always ends at
/// `duration` seconds.
fn lane_change_leg(
    s0: &VehicleState,
    lat_rates0: (f64, f64),
    y_target: f64,
    duration: f64,
    advance_steps: usize,
    accel_of_step: &dyn Fn(usize) -> f64,
    consts: &SimConstants,
    dims: &VehicleDims,
) -> LaneChangeLeg {
    let dt = consts.dt;
    let mut states = Vec::with_capacity(advance_steps + 1);
    let mut controls = Vec::with_capacity(advance_steps);
    states.push(*s0);

    let (mut y, mut yd, mut ydd) = (s0.y, lat_rates0.0, lat_rates0.1);
    let (mut x, mut v, mut phi) = (s0.x, s0.v, s0.phi);

    for k in 0..advance_steps {
        let a = accel_of_step(k);
        let remaining = duration - k as f64 * dt;
        let lat = ShiftedQuintic::solve(remaining, y, yd, ydd, y_target, 0.0, 0.0);

        // Longitudinal boundary conditions admit the constant-acceleration
        // quadratic as their exact solution.
        let x_next = x + v * dt + 0.5 * a * dt * dt;
        let vx_next = v + a * dt;
        let (y_next, yd_next, ydd_next) = lat.eval(dt);

        let phi_next = yd_next.atan2(vx_next);
        let dphi = phi_next - phi;
        let sin_beta = if v * dt > 1e-9 {
            (dphi * dims.l_r / (v * dt)).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let beta = sin_beta.asin();
        let delta = (beta.tan() * dims.wheelbase() / dims.l_r)
            .atan()
            .clamp(-MAX_STEER, MAX_STEER);
        controls.push(ControlInput::new(a, delta));

        x = x_next;
        v = vx_next;
        phi = phi_next;
        y = y_next;
        yd = yd_next;
        ydd = ydd_next;
        states.push(VehicleState::new(x, y, phi, v.max(0.0)));
    }

    LaneChangeLeg {
        states,
        controls,
        end_lat_rates: (yd, ydd),
    }
}

/// Lane-change segment over the full change duration, starting from the
/// vehicle's own lateral rates.
pub fn synthesize_lane_change(
    s0: &VehicleState,
    y_target: f64,
    accels: &[f64],
    consts: &SimConstants,
    dims: &VehicleDims,
) -> (Vec<VehicleState>, Vec<ControlInput>) {
    let rates = (s0.lateral_rate(), 0.0);
    let leg = lane_change_leg(
        s0,
        rates,
        y_target,
        consts.t_lane,
        consts.n_lane(),
        &|k| accels.get(k).copied().unwrap_or(0.0),
        consts,
        dims,
    );
    (leg.states, leg.controls)
}

/// Maneuver classification carried by every trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverTag {
    pub lat: LatManeuver,
    /// Step window `[start, end)` during which lateral motion occurs.
    pub lateral_window: Option<(usize, usize)>,
}

impl ManeuverTag {
    pub fn overlaps(&self, seg_start: usize, seg_end: usize) -> bool {
        match self.lateral_window {
            None => false,
            Some((a, b)) => seg_start < b && a < seg_end.max(seg_start + 1),
        }
    }
}

/// A sampled trajectory plus the control sequence that shaped it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Index into the fixed 225-entry library.
    pub library_index: usize,
    /// N+1 states sampled every dt.
    pub states: Vec<VehicleState>,
    /// N controls.
    pub controls: Vec<ControlInput>,
    pub maneuver: ManeuverTag,
}

impl Trajectory {
    /// State one decision period ahead.
    pub fn decision_state(&self, consts: &SimConstants) -> &VehicleState {
        &self.states[consts.n_decision.min(self.states.len() - 1)]
    }
}

/// Safety-filtered action space for one vehicle state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub trajectories: Vec<Trajectory>,
}

impl TrajectorySet {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn by_library_index(&self, m: usize) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.library_index == m)
    }

    /// Library indices of the safe trajectories, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.trajectories.iter().map(|t| t.library_index).collect()
    }
}

fn straight_run(
    start: &VehicleState,
    from_step: usize,
    to_step: usize,
    lon: &LonProfile,
    consts: &SimConstants,
    states: &mut Vec<VehicleState>,
    controls: &mut Vec<ControlInput>,
) {
    let dt = consts.dt;
    let (cos_phi, sin_phi) = (start.phi.cos(), start.phi.sin());
    let mut s = *start;
    for k in from_step..to_step {
        let a = lon.accel_at(k as f64 * dt);
        let ds = s.v * dt + 0.5 * a * dt * dt;
        let v_next = (s.v + a * dt).max(0.0);
        s = VehicleState::new(s.x + ds * cos_phi, s.y + ds * sin_phi, s.phi, v_next);
        controls.push(ControlInput::new(a, 0.0));
        states.push(s);
    }
}

/// Instantiate one descriptor from a state; `None` when the maneuver has no
/// adjacent target lane.
fn instantiate(
    desc: &ManeuverDescriptor,
    s0: &VehicleState,
    road: &RoadGeometry,
    consts: &SimConstants,
    dims: &VehicleDims,
) -> Option<Trajectory> {
    let n = consts.n_horizon;
    let origin_center = road.current_lane_center(s0.y);
    let target_of = |side: LaneSide| -> Option<f64> {
        match side {
            LaneSide::Left => road.left_neighbor(s0.y),
            LaneSide::Right => road.right_neighbor(s0.y),
        }
    };

    let mut states = Vec::with_capacity(n + 1);
    let mut controls = Vec::with_capacity(n);
    states.push(*s0);

    let lateral_window = match desc.lat {
        LatManeuver::Keep => {
            straight_run(s0, 0, n, &desc.lon, consts, &mut states, &mut controls);
            None
        }
        LatManeuver::Change { side, start_step } => {
            let y_target = target_of(side)?;
            straight_run(s0, 0, start_step, &desc.lon, consts, &mut states, &mut controls);
            let at_start = *states.last().unwrap();
            let leg = lane_change_leg(
                &at_start,
                (at_start.lateral_rate(), 0.0),
                y_target,
                consts.t_lane,
                consts.n_lane(),
                &|k| desc.lon.accel_at((start_step + k) as f64 * consts.dt),
                consts,
                dims,
            );
            states.extend_from_slice(&leg.states[1..]);
            controls.extend_from_slice(&leg.controls);
            let change_end = start_step + consts.n_lane();
            let resume = *states.last().unwrap();
            straight_run(
                &resume,
                change_end,
                n,
                &desc.lon,
                consts,
                &mut states,
                &mut controls,
            );
            Some((start_step, change_end))
        }
        LatManeuver::Abort { side, revert_step } => {
            let y_target = target_of(side)?;
            let out_leg = lane_change_leg(
                s0,
                (s0.lateral_rate(), 0.0),
                y_target,
                consts.t_lane,
                revert_step,
                &|k| desc.lon.accel_at(k as f64 * consts.dt),
                consts,
                dims,
            );
            states.extend_from_slice(&out_leg.states[1..]);
            controls.extend_from_slice(&out_leg.controls);
            let mid = *states.last().unwrap();
            let back_leg = lane_change_leg(
                &mid,
                out_leg.end_lat_rates,
                origin_center,
                consts.t_lane,
                consts.n_lane(),
                &|k| desc.lon.accel_at((revert_step + k) as f64 * consts.dt),
                consts,
                dims,
            );
            states.extend_from_slice(&back_leg.states[1..]);
            controls.extend_from_slice(&back_leg.controls);
            let end = revert_step + consts.n_lane();
            let resume = *states.last().unwrap();
            straight_run(&resume, end, n, &desc.lon, consts, &mut states, &mut controls);
            Some((0, end))
        }
    };

    Some(Trajectory {
        library_index: desc.library_index,
        states,
        controls,
        maneuver: ManeuverTag {
            lat: desc.lat,
            lateral_window,
        },
    })
}

fn speeds_in_range(traj: &Trajectory, consts: &SimConstants) -> bool {
    traj.states
        .iter()
        .all(|s| s.v >= consts.v_min - 1e-9 && s.v <= consts.v_max + 1e-9)
}

/// Axis-aligned corners of the vehicle footprint at a state.
pub fn footprint_corners(s: &VehicleState, dims: &VehicleDims) -> [[f64; 2]; 4] {
    let (c, si) = (s.phi.cos(), s.phi.sin());
    let (hl, hw) = (dims.length / 2.0, dims.width / 2.0);
    let mut out = [[0.0; 2]; 4];
    for (i, (sx, sy)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)]
        .iter()
        .enumerate()
    {
        out[i] = [
            s.x + sx * hl * c - sy * hw * si,
            s.y + sx * hl * si + sy * hw * c,
        ];
    }
    out
}

/// A footprint corner must lie in the mainline band, or in the ramp band at
/// or before the ramp end. Anything else is off the road; in particular a
/// ramp vehicle may never carry its footprint past the end of the ramp.
fn within_road(traj: &Trajectory, road: &RoadGeometry, dims: &VehicleDims) -> bool {
    let (low, high) = road.mainline_bounds();
    let (ramp_low, ramp_high) = (road.y_ramp - road.w_ramp / 2.0, road.y_ramp + road.w_ramp / 2.0);
    for s in &traj.states {
        for [cx, cy] in footprint_corners(s, dims) {
            let in_mainline = cy >= low - 1e-9 && cy <= high + 1e-9;
            let in_ramp = cy >= ramp_low - 1e-9 && cy < low && cx <= road.x_ramp + 1e-9;
            let _ = ramp_high;
            if !(in_mainline || in_ramp) {
                return false;
            }
        }
    }
    true
}

/// Build the safety-filtered action space at a state.
///
/// Descriptors whose lateral maneuver has no adjacent lane are dropped, as
/// are trajectories leaving the road, continuing on the ramp past its end,
/// or violating the speed limits anywhere along the horizon. The seed speed
/// is clamped into `[v_min, v_max]` so that slightly disturbed observations
/// still generate a usable library.
pub fn action_space(
    s: &VehicleState,
    road: &RoadGeometry,
    consts: &SimConstants,
    dims: &VehicleDims,
) -> TrajectorySet {
    let mut seed = *s;
    seed.v = seed.v.clamp(consts.v_min, consts.v_max);
    let mut trajectories = Vec::new();
    for desc in control_library(consts) {
        if let Some(traj) = instantiate(&desc, &seed, road, consts, dims) {
            if speeds_in_range(&traj, consts) && within_road(&traj, road, dims) {
                trajectories.push(traj);
            }
        }
    }
    TrajectorySet { trajectories }
}

/// Maximum-braking keep-lane trajectory used when every branch of the
/// decision tree has been trimmed. Brakes at `a_min` down to `v_min`, then
/// holds speed.
pub fn braking_fallback(s: &VehicleState, consts: &SimConstants, dims: &VehicleDims) -> Trajectory {
    let mut controls = Vec::with_capacity(consts.n_horizon);
    let mut v = s.v.max(consts.v_min);
    for _ in 0..consts.n_horizon {
        let a = if v + consts.a_min * consts.dt >= consts.v_min {
            consts.a_min
        } else {
            (consts.v_min - v) / consts.dt
        };
        controls.push(ControlInput::new(a, 0.0));
        v += a * consts.dt;
    }
    let start = VehicleState::new(s.x, s.y, s.phi, s.v.max(consts.v_min));
    let states = rollout(&start, &controls, dims, consts.dt);
    Trajectory {
        library_index: LIBRARY_SIZE,
        states,
        controls,
        maneuver: ManeuverTag {
            lat: LatManeuver::Keep,
            lateral_window: None,
        },
    }
}
