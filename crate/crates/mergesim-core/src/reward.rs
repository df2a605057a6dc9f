//! Personal and social rewards of interacting drivers.
//!
//! A driver's personal reward blends collision avoidance, safety
//! consciousness (normalized time-to-collision), traveling time, and control
//! effort. Social value orientation mixes the driver's own reward with the
//! average reward of its neighbors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SimConstants, VehicleDims, VehicleState};
use crate::trajectory::Trajectory;

/// Normalization cap for time-to-collision [s].
pub const TTC_MAX: f64 = 10.0;

/// Weights assumed for drivers whose objectives are unknown.
pub const NEUTRAL_WEIGHTS: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

/// Social value orientation category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SvoCategory {
    Altruistic,
    Prosocial,
    Egoistic,
    Competitive,
}

impl SvoCategory {
    pub const ALL: [SvoCategory; 4] = [
        SvoCategory::Altruistic,
        SvoCategory::Prosocial,
        SvoCategory::Egoistic,
        SvoCategory::Competitive,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SvoCategory::Altruistic => "altruistic",
            SvoCategory::Prosocial => "prosocial",
            SvoCategory::Egoistic => "egoistic",
            SvoCategory::Competitive => "competitive",
        }
    }
}

/// Self-reward and others-reward mixing coefficients per SVO category.
pub fn svo_coefficients(svo: SvoCategory) -> (f64, f64) {
    match svo {
        SvoCategory::Altruistic => (0.0, 1.0),
        SvoCategory::Prosocial => (0.5, 0.5),
        SvoCategory::Egoistic => (1.0, 0.0),
        SvoCategory::Competitive => (0.5, -0.5),
    }
}

/// Non-negative weights over the (h, tau, e) objectives, summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights(pub [f64; 3]);

impl RewardWeights {
    pub fn new(w: [f64; 3]) -> Self {
        Self(w)
    }

    pub fn neutral() -> Self {
        Self(NEUTRAL_WEIGHTS)
    }

    pub fn dot(&self, terms: [f64; 3]) -> f64 {
        self.0[0] * terms[0] + self.0[1] * terms[1] + self.0[2] * terms[2]
    }

    /// The finite weight set drivers are assumed to draw from.
    pub fn admissible_set() -> [RewardWeights; 7] {
        [
            RewardWeights([0.0, 0.0, 1.0]),
            RewardWeights([0.0, 0.5, 0.5]),
            RewardWeights([0.0, 1.0, 0.0]),
            RewardWeights(NEUTRAL_WEIGHTS),
            RewardWeights([0.5, 0.0, 0.5]),
            RewardWeights([0.5, 0.5, 0.0]),
            RewardWeights([1.0, 0.0, 0.0]),
        ]
    }
}

/// Latent behavioral parameters of one driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverParams {
    pub svo: SvoCategory,
    pub weights: RewardWeights,
}

impl DriverParams {
    pub fn new(svo: SvoCategory, weights: RewardWeights) -> Self {
        Self { svo, weights }
    }

    /// The 22 admissible parameter combinations: the altruistic driver
    /// (weights irrelevant, pinned to neutral) plus 7 weight vectors for
    /// each of the remaining three categories.
    pub fn grid() -> Vec<DriverParams> {
        let mut out = Vec::with_capacity(22);
        out.push(DriverParams::new(SvoCategory::Altruistic, RewardWeights::neutral()));
        for svo in [
            SvoCategory::Prosocial,
            SvoCategory::Egoistic,
            SvoCategory::Competitive,
        ] {
            for w in RewardWeights::admissible_set() {
                out.push(DriverParams::new(svo, w));
            }
        }
        out
    }

    pub fn label(&self) -> String {
        if self.svo == SvoCategory::Altruistic {
            self.svo.label().to_string()
        } else {
            format!(
                "{} w=[{:.2},{:.2},{:.2}]",
                self.svo.label(),
                self.weights.0[0],
                self.weights.0[1],
                self.weights.0[2]
            )
        }
    }
}

/// Number of entries in [`DriverParams::grid`].
pub const HYPOTHESIS_COUNT: usize = 22;

// --- collision -------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Obb {
    cx: f64,
    cy: f64,
    cos: f64,
    sin: f64,
    hl: f64,
    hw: f64,
}

impl Obb {
    fn of(s: &VehicleState, dims: &VehicleDims) -> Self {
        Self {
            cx: s.x,
            cy: s.y,
            cos: s.phi.cos(),
            sin: s.phi.sin(),
            hl: dims.length / 2.0,
            hw: dims.width / 2.0,
        }
    }

    fn radius(&self) -> f64 {
        (self.hl * self.hl + self.hw * self.hw).sqrt()
    }
}

fn separated_on(axis: (f64, f64), a: &Obb, b: &Obb) -> bool {
    let (ux, uy) = axis;
    let d = ((b.cx - a.cx) * ux + (b.cy - a.cy) * uy).abs();
    let ra = a.hl * (a.cos * ux + a.sin * uy).abs() + a.hw * (-a.sin * ux + a.cos * uy).abs();
    let rb = b.hl * (b.cos * ux + b.sin * uy).abs() + b.hw * (-b.sin * ux + b.cos * uy).abs();
    d > ra + rb
}

/// Oriented-rectangle overlap via the separating-axis test.
pub fn rect_overlap(
    s_a: &VehicleState,
    dims_a: &VehicleDims,
    s_b: &VehicleState,
    dims_b: &VehicleDims,
) -> bool {
    let a = Obb::of(s_a, dims_a);
    let b = Obb::of(s_b, dims_b);
    // cheap circle reject
    let dx = b.cx - a.cx;
    let dy = b.cy - a.cy;
    let r = a.radius() + b.radius();
    if dx * dx + dy * dy > r * r {
        return false;
    }
    for axis in [
        (a.cos, a.sin),
        (-a.sin, a.cos),
        (b.cos, b.sin),
        (-b.sin, b.cos),
    ] {
        if separated_on(axis, &a, &b) {
            return false;
        }
    }
    true
}

/// Whether two time-aligned state segments collide at any common sample.
pub fn collision(
    seg_a: &[VehicleState],
    seg_b: &[VehicleState],
    dims_a: &VehicleDims,
    dims_b: &VehicleDims,
) -> Result<bool> {
    if seg_a.len() != seg_b.len() {
        return Err(Error::LengthMismatch {
            left: seg_a.len(),
            right: seg_b.len(),
        });
    }
    Ok(seg_a
        .iter()
        .zip(seg_b)
        .any(|(a, b)| rect_overlap(a, dims_a, b, dims_b)))
}

// --- objective terms ---------------------------------------------------------

/// Normalized time-to-collision against a leading vehicle, in [0, 1].
///
/// One when `j` is not ahead of `i` in the same lane or when the gap is not
/// closing; zero at contact.
pub fn headway_h(
    s_i: &VehicleState,
    s_j: &VehicleState,
    dims_i: &VehicleDims,
    dims_j: &VehicleDims,
    w_lane: f64,
) -> f64 {
    let same_lane = (s_j.y - s_i.y).abs() <= w_lane / 2.0;
    let ahead = s_j.x > s_i.x;
    if !(same_lane && ahead) {
        return 1.0;
    }
    let gap = (s_j.x - dims_j.length / 2.0) - (s_i.x + dims_i.length / 2.0);
    if gap <= 0.0 {
        return 0.0;
    }
    let closing = s_i.v - s_j.v;
    if closing <= 0.0 {
        return 1.0;
    }
    let ttc = gap / closing;
    ttc.min(TTC_MAX) / TTC_MAX
}

/// Closeness to the goal: speed fraction plus lateral closeness, each worth
/// half, in [0, 1].
pub fn travel_tau(s: &VehicleState, goal_y: f64, w_lane: f64, consts: &SimConstants) -> f64 {
    let speed_term = ((s.v - consts.v_min) / (consts.v_max - consts.v_min)).clamp(0.0, 1.0);
    let lateral_term = 1.0 - (s.y - goal_y).abs().min(w_lane) / w_lane;
    0.5 * speed_term + 0.5 * lateral_term
}

/// Control effort of a segment: penalizes mean |a| and lateral maneuvers.
pub fn effort_e(mean_abs_accel: f64, lateral_overlap: bool, a_max: f64) -> f64 {
    1.0 - 0.5 * (mean_abs_accel / a_max).clamp(0.0, 1.0)
        - if lateral_overlap { 0.5 } else { 0.0 }
}

// --- segment views -----------------------------------------------------------

/// One reward-evaluation window of a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub states: &'a [VehicleState],
    pub dims: &'a VehicleDims,
    pub goal_y: f64,
    pub mean_abs_accel: f64,
    pub lateral_overlap: bool,
}

impl<'a> Segment<'a> {
    /// Window `[start, end]` of a trajectory (inclusive ends, clamped tail).
    pub fn of(
        traj: &'a Trajectory,
        dims: &'a VehicleDims,
        goal_y: f64,
        start: usize,
        end: usize,
    ) -> Self {
        let states = &traj.states[start..=end.min(traj.states.len() - 1)];
        let controls = &traj.controls[start.min(traj.controls.len())..end.min(traj.controls.len())];
        let mean_abs_accel = if controls.is_empty() {
            0.0
        } else {
            controls.iter().map(|u| u.a.abs()).sum::<f64>() / controls.len() as f64
        };
        Self {
            states,
            dims,
            goal_y,
            mean_abs_accel,
            lateral_overlap: traj.maneuver.overlaps(start, end),
        }
    }

    pub fn end_state(&self) -> &VehicleState {
        self.states.last().expect("segment is never empty")
    }
}

/// Personal reward of driver `i` interacting with `j` over aligned segments.
///
/// Zero whenever the segments collide; otherwise the weighted sum of the
/// headway, traveling-time, and effort terms evaluated per their
/// definitions (h and tau at the segment end states).
pub fn personal_reward(
    seg_i: &Segment,
    seg_j: Option<&Segment>,
    weights: &RewardWeights,
    w_lane: f64,
    consts: &SimConstants,
) -> Result<f64> {
    let (c, h) = match seg_j {
        Some(seg_j) => {
            let c = collision(seg_i.states, seg_j.states, seg_i.dims, seg_j.dims)?;
            let h = headway_h(
                seg_i.end_state(),
                seg_j.end_state(),
                seg_i.dims,
                seg_j.dims,
                w_lane,
            );
            (c, h)
        }
        None => (false, 1.0),
    };
    if c {
        return Ok(0.0);
    }
    let tau = travel_tau(seg_i.end_state(), seg_i.goal_y, w_lane, consts);
    let e = effort_e(seg_i.mean_abs_accel, seg_i.lateral_overlap, consts.a_max);
    Ok(weights.dot([h, tau, e]))
}

/// SVO-weighted multi-modal reward of driver `i` over one segment window.
///
/// The self term pairs the driver with its nearest neighbor (by segment
/// start distance); the others term averages the neighbors' own rewards
/// against the driver, evaluated under neutral weights.
pub fn multimodal_reward(
    seg_i: &Segment,
    neighbor_segs: &[Segment],
    params: &DriverParams,
    w_lane: f64,
    consts: &SimConstants,
) -> Result<f64> {
    let (alpha, beta) = svo_coefficients(params.svo);

    let self_term = if alpha != 0.0 {
        let designated = neighbor_segs.iter().min_by(|a, b| {
            seg_i.states[0]
                .distance_to(&a.states[0])
                .total_cmp(&seg_i.states[0].distance_to(&b.states[0]))
        });
        personal_reward(seg_i, designated, &params.weights, w_lane, consts)?
    } else {
        0.0
    };

    let others_term = if beta != 0.0 && !neighbor_segs.is_empty() {
        let mut acc = 0.0;
        for seg_j in neighbor_segs {
            acc += personal_reward(seg_j, Some(seg_i), &RewardWeights::neutral(), w_lane, consts)?;
        }
        acc / neighbor_segs.len() as f64
    } else {
        0.0
    };

    Ok(alpha * self_term + beta * others_term)
}
