//! Receding-horizon behavioral model of interacting drivers: discounted
//! cumulative reward over the action space, argmax trajectory choice, and
//! the softmax policy distribution.
//!
//! The cumulative reward takes an expectation over the neighbors' own
//! trajectory sets, drawn independently and uniformly. Because the social
//! reward is a sum of pairwise terms, each depending on a single neighbor's
//! draw, that expectation factorizes into per-neighbor marginal means and is
//! evaluated exactly here. A scene evaluation precomputes the
//! hypothesis-independent tensors once, after which the policies of all 22
//! parameter hypotheses are cheap.

use crate::error::{Error, Result};
use crate::geometry::{RoadGeometry, SimConstants, VehicleDims, VehicleState};
use crate::reward::{
    effort_e, headway_h, rect_overlap, svo_coefficients, travel_tau, DriverParams, SvoCategory,
};
use crate::scene::Scene;
use crate::trajectory::{action_space, braking_fallback, Trajectory, TrajectorySet, LIBRARY_SIZE};

/// Discount factor of the per-segment reward sum.
pub const DISCOUNT: f64 = 0.8;

/// Probability vector over the fixed 225-entry control library.
///
/// Entries outside the support (the safety-filtered trajectory indices) are
/// exactly zero; the rest sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    pub probs: Vec<f64>,
    pub support: Vec<usize>,
}

impl PolicyDistribution {
    /// Softmax of values over `support`, stabilized by max subtraction.
    pub fn softmax(support: &[usize], values: &[f64]) -> Self {
        assert_eq!(support.len(), values.len());
        let mut probs = vec![0.0; LIBRARY_SIZE];
        if support.is_empty() {
            return Self {
                probs,
                support: Vec::new(),
            };
        }
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (&m, &v) in support.iter().zip(values) {
            let e = (v - max).exp();
            probs[m] = e;
            total += e;
        }
        for &m in support {
            probs[m] /= total;
        }
        Self {
            probs,
            support: support.to_vec(),
        }
    }

    /// Renormalized restriction of raw non-negative scores to a support.
    pub fn from_masked_scores(support: &[usize], scores: &[f64]) -> Self {
        assert_eq!(scores.len(), LIBRARY_SIZE);
        let mut probs = vec![0.0; LIBRARY_SIZE];
        let total: f64 = support.iter().map(|&m| scores[m].max(0.0)).sum();
        if total > 0.0 {
            for &m in support {
                probs[m] = scores[m].max(0.0) / total;
            }
        } else if !support.is_empty() {
            let u = 1.0 / support.len() as f64;
            for &m in support {
                probs[m] = u;
            }
        }
        Self {
            probs,
            support: support.to_vec(),
        }
    }

    /// Belief-weighted mixture of distributions sharing a support.
    pub fn mixture(components: &[(f64, &PolicyDistribution)]) -> Self {
        assert!(!components.is_empty());
        let support = components[0].1.support.clone();
        let mut probs = vec![0.0; LIBRARY_SIZE];
        for (w, dist) in components {
            for &m in &dist.support {
                probs[m] += w * dist.probs[m];
            }
        }
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            for p in probs.iter_mut() {
                *p /= total;
            }
        }
        Self { probs, support }
    }

    pub fn prob_of(&self, library_index: usize) -> f64 {
        self.probs[library_index]
    }

    /// Highest-probability support index, ties to the lowest index.
    pub fn mode(&self) -> Option<usize> {
        self.support
            .iter()
            .copied()
            .max_by(|&a, &b| self.probs[a].total_cmp(&self.probs[b]).then(b.cmp(&a)))
    }

    /// Check the distribution invariants to the given tolerance.
    pub fn is_valid(&self, tol: f64) -> bool {
        let sum: f64 = self.probs.iter().sum();
        if self.support.is_empty() {
            return self.probs.iter().all(|&p| p == 0.0);
        }
        if (sum - 1.0).abs() > tol {
            return false;
        }
        let in_support = |m: usize| self.support.contains(&m);
        self.probs
            .iter()
            .enumerate()
            .all(|(m, &p)| p >= 0.0 && (p == 0.0 || in_support(m)))
    }
}

// --- per-segment features ----------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct SegFeature {
    end: VehicleState,
    tau: f64,
    effort: f64,
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

/// Per-trajectory, per-segment reward features of one vehicle's set.
#[derive(Debug, Clone)]
pub(crate) struct SetFeatures {
    pub(crate) dims: VehicleDims,
    segs: Vec<SegFeature>, // [traj * n_segments + n]
    n_segments: usize,
    radius: f64,
}

impl SetFeatures {
    pub(crate) fn build(
        set: &TrajectorySet,
        dims: &VehicleDims,
        goal_y: f64,
        consts: &SimConstants,
        bounds: &[(usize, usize)],
    ) -> Self {
        let radius = (dims.length * dims.length + dims.width * dims.width).sqrt() / 2.0;
        let mut segs = Vec::with_capacity(set.len() * bounds.len());
        for traj in &set.trajectories {
            for &(start, end) in bounds {
                let window = &traj.states[start..=end.min(traj.states.len() - 1)];
                let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
                let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
                for s in window {
                    min_x = min_x.min(s.x);
                    max_x = max_x.max(s.x);
                    min_y = min_y.min(s.y);
                    max_y = max_y.max(s.y);
                }
                let controls =
                    &traj.controls[start.min(traj.controls.len())..end.min(traj.controls.len())];
                let mean_abs = if controls.is_empty() {
                    0.0
                } else {
                    controls.iter().map(|u| u.a.abs()).sum::<f64>() / controls.len() as f64
                };
                let end_state = window[window.len() - 1];
                segs.push(SegFeature {
                    end: end_state,
                    tau: travel_tau(&end_state, goal_y, 3.5, consts),
                    effort: effort_e(mean_abs, traj.maneuver.overlaps(start, end), consts.a_max),
                    min_x,
                    max_x,
                    min_y,
                    max_y,
                });
            }
        }
        Self {
            dims: *dims,
            segs,
            n_segments: bounds.len(),
            radius,
        }
    }

    fn seg(&self, traj: usize, n: usize) -> &SegFeature {
        &self.segs[traj * self.n_segments + n]
    }
}

/// Whether two segment bounding boxes, inflated by footprint radii, overlap.
fn seg_boxes_overlap(a: &SegFeature, ra: f64, b: &SegFeature, rb: f64) -> bool {
    let r = ra + rb;
    a.min_x - r <= b.max_x
        && b.min_x - r <= a.max_x
        && a.min_y - r <= b.max_y
        && b.min_y - r <= a.max_y
}

/// Whether two aligned trajectory windows collide at any sample.
pub(crate) fn segment_collides(
    a: &Trajectory,
    dims_a: &VehicleDims,
    b: &Trajectory,
    dims_b: &VehicleDims,
    start: usize,
    end: usize,
) -> bool {
    let e = end.min(a.states.len() - 1).min(b.states.len() - 1);
    for k in start..=e {
        if rect_overlap(&a.states[k], dims_a, &b.states[k], dims_b) {
            return true;
        }
    }
    false
}

// --- scene evaluation ----------------------------------------------------------

/// Trait over policy sources: the analytic behavioral model or a learned
/// imitation of it. An evaluation is built once per scene and queried for
/// any number of parameter hypotheses.
pub trait PolicyEvaluator {
    /// The subject's safety-filtered action space the policies range over.
    fn trajectories(&self) -> &TrajectorySet;

    /// Policy distribution under one parameter hypothesis.
    fn policy(&self, params: &DriverParams) -> Result<PolicyDistribution>;
}

/// A behavioral model that can evaluate scenes.
pub trait BehaviorModel {
    fn evaluate(&self, scene: &Scene) -> Box<dyn PolicyEvaluator + '_>;
}

/// Hypothesis-independent reward tensors of one scene.
pub struct AnalyticEvaluator {
    trajectories: TrajectorySet,
    /// Mean over the designated neighbor's draws of noncollision-gated
    /// [h, tau, e], per subject trajectory and segment.
    self_terms: Vec<[f64; 3]>,
    /// Mean over neighbors of their expected neutral-weight reward against
    /// the subject, per subject trajectory and segment.
    others_terms: Vec<f64>,
    n_segments: usize,
}

impl AnalyticEvaluator {
    pub fn new(scene: &Scene, road: &RoadGeometry, consts: &SimConstants) -> Self {
        let subject_set = action_space(&scene.subject.state, road, consts, &scene.subject.dims);

        // Neighbors whose own action space is empty are pinned to a single
        // braking trajectory; they must do something.
        let neighbor_sets: Vec<(TrajectorySet, VehicleDims, f64)> = scene
            .neighbors
            .iter()
            .map(|nb| {
                let set = action_space(&nb.state, road, consts, &nb.dims);
                let set = if set.is_empty() {
                    TrajectorySet {
                        trajectories: vec![braking_fallback(&nb.state, consts, &nb.dims)],
                    }
                } else {
                    set
                };
                (set, nb.dims, nb.goal_y)
            })
            .collect();

        Self::from_parts(
            subject_set,
            &scene.subject.dims,
            scene.subject.goal_y,
            &neighbor_sets,
            scene.nearest_neighbor(),
            consts,
        )
    }

    /// Build the reward tensors from prebuilt trajectory sets. The
    /// designated neighbor index feeds the self term of the social reward.
    pub(crate) fn from_parts(
        subject_set: TrajectorySet,
        subject_dims: &VehicleDims,
        subject_goal: f64,
        neighbor_sets: &[(TrajectorySet, VehicleDims, f64)],
        designated: Option<usize>,
        consts: &SimConstants,
    ) -> Self {
        let bounds = consts.segment_bounds();
        let n_segments = bounds.len();

        let subject_features =
            SetFeatures::build(&subject_set, subject_dims, subject_goal, consts, &bounds);
        let neighbor_features: Vec<SetFeatures> = neighbor_sets
            .iter()
            .map(|(set, dims, goal)| SetFeatures::build(set, dims, *goal, consts, &bounds))
            .collect();
        let m_count = subject_set.len();
        let mut self_terms = vec![[1.0, 0.0, 0.0]; m_count * n_segments];
        let mut others_terms = vec![0.0; m_count * n_segments];

        // With no neighbors the self term degenerates to [1, tau, e].
        for mi in 0..m_count {
            for n in 0..n_segments {
                let f = subject_features.seg(mi, n);
                self_terms[mi * n_segments + n] = [1.0, f.tau, f.effort];
            }
        }

        for (jj, ((nb_set, _, _), nb_feat)) in
            neighbor_sets.iter().zip(&neighbor_features).enumerate()
        {
            let mj_count = nb_set.len() as f64;
            for (mi, ti) in subject_set.trajectories.iter().enumerate() {
                for n in 0..n_segments {
                    let fi = subject_features.seg(mi, n);
                    let (start, end) = bounds[n];
                    let mut free_h_sum = 0.0; // sum of !c * h(i, j)
                    let mut free_sum = 0.0; // sum of !c
                    let mut other_sum = 0.0; // sum of !c * mean([h_j, tau_j, e_j])
                    for (mj, tj) in nb_set.trajectories.iter().enumerate() {
                        let fj = nb_feat.seg(mj, n);
                        let c = seg_boxes_overlap(fi, subject_features.radius, fj, nb_feat.radius)
                            && segment_collides(
                                ti,
                                &subject_features.dims,
                                tj,
                                &nb_feat.dims,
                                start,
                                end,
                            );
                        if c {
                            continue;
                        }
                        free_sum += 1.0;
                        free_h_sum += headway_h(
                            &fi.end,
                            &fj.end,
                            &subject_features.dims,
                            &nb_feat.dims,
                            3.5,
                        );
                        let h_ji = headway_h(
                            &fj.end,
                            &fi.end,
                            &nb_feat.dims,
                            &subject_features.dims,
                            3.5,
                        );
                        other_sum += (h_ji + fj.tau + fj.effort) / 3.0;
                    }
                    let idx = mi * n_segments + n;
                    if Some(jj) == designated {
                        self_terms[idx] = [
                            free_h_sum / mj_count,
                            fi.tau * free_sum / mj_count,
                            fi.effort * free_sum / mj_count,
                        ];
                    }
                    others_terms[idx] += other_sum / mj_count / neighbor_sets.len() as f64;
                }
            }
        }

        Self {
            trajectories: subject_set,
            self_terms,
            others_terms,
            n_segments,
        }
    }

    /// Discounted cumulative reward of every trajectory in the action space,
    /// aligned with `trajectories()`.
    pub fn q_values(&self, params: &DriverParams) -> Vec<f64> {
        let (alpha, beta) = svo_coefficients(params.svo);
        let mut out = Vec::with_capacity(self.trajectories.len());
        for mi in 0..self.trajectories.len() {
            let mut q = 0.0;
            let mut discount = 1.0;
            for n in 0..self.n_segments {
                let idx = mi * self.n_segments + n;
                let st = self.self_terms[idx];
                let r = alpha * params.weights.dot(st) + beta * self.others_terms[idx];
                q += discount * r;
                discount *= DISCOUNT;
            }
            out.push(q);
        }
        out
    }

    /// Argmax trajectory under one hypothesis, ties to the lowest library
    /// index.
    pub fn best_trajectory(&self, params: &DriverParams) -> Result<&Trajectory> {
        if self.trajectories.is_empty() {
            return Err(Error::EmptyActionSpace);
        }
        let q = self.q_values(params);
        let mut best = 0;
        for (i, v) in q.iter().enumerate() {
            if *v > q[best] {
                best = i;
            }
        }
        Ok(&self.trajectories.trajectories[best])
    }
}

impl PolicyEvaluator for AnalyticEvaluator {
    fn trajectories(&self) -> &TrajectorySet {
        &self.trajectories
    }

    fn policy(&self, params: &DriverParams) -> Result<PolicyDistribution> {
        if self.trajectories.is_empty() {
            return Err(Error::EmptyActionSpace);
        }
        let q = self.q_values(params);
        Ok(PolicyDistribution::softmax(
            &self.trajectories.support(),
            &q,
        ))
    }
}

/// The analytic behavioral model over a fixed road and constants.
#[derive(Debug, Clone)]
pub struct AnalyticBehavior {
    pub road: RoadGeometry,
    pub consts: SimConstants,
}

impl AnalyticBehavior {
    pub fn new(road: RoadGeometry, consts: SimConstants) -> Self {
        Self { road, consts }
    }

    pub fn evaluator(&self, scene: &Scene) -> AnalyticEvaluator {
        AnalyticEvaluator::new(scene, &self.road, &self.consts)
    }
}

impl BehaviorModel for AnalyticBehavior {
    fn evaluate(&self, scene: &Scene) -> Box<dyn PolicyEvaluator + '_> {
        Box::new(self.evaluator(scene))
    }
}

// --- spec-shaped convenience wrappers -----------------------------------------

/// Discounted cumulative reward of one trajectory in a scene.
pub fn cumulative_q(
    traj: &Trajectory,
    scene: &Scene,
    params: &DriverParams,
    road: &RoadGeometry,
    consts: &SimConstants,
) -> Result<f64> {
    let eval = AnalyticEvaluator::new(scene, road, consts);
    let pos = eval
        .trajectories
        .trajectories
        .iter()
        .position(|t| t.library_index == traj.library_index)
        .ok_or(Error::EmptyActionSpace)?;
    Ok(eval.q_values(params)[pos])
}

/// Argmax trajectory of a driver in a scene.
pub fn best_trajectory(
    scene: &Scene,
    params: &DriverParams,
    road: &RoadGeometry,
    consts: &SimConstants,
) -> Result<Trajectory> {
    let eval = AnalyticEvaluator::new(scene, road, consts);
    eval.best_trajectory(params).cloned()
}

/// Softmax policy distribution of a driver in a scene.
pub fn policy(
    scene: &Scene,
    params: &DriverParams,
    road: &RoadGeometry,
    consts: &SimConstants,
) -> Result<PolicyDistribution> {
    AnalyticEvaluator::new(scene, road, consts).policy(params)
}

/// True when an egoistic hypothesis makes the others-term irrelevant.
pub fn is_self_only(params: &DriverParams) -> bool {
    params.svo == SvoCategory::Egoistic
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::VehicleDims;
    use crate::reward::{personal_reward, RewardWeights, Segment, SvoCategory, NEUTRAL_WEIGHTS};
    use crate::scene::SceneVehicle;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn road() -> RoadGeometry {
        RoadGeometry::highway_with_ramp(3, 1000.0, 200.0)
    }

    fn consts() -> SimConstants {
        SimConstants::default()
    }

    fn vehicle(x: f64, y: f64, v: f64, goal: f64) -> SceneVehicle {
        SceneVehicle::new(VehicleState::new(x, y, 0.0, v), VehicleDims::car(), goal)
    }

    /// Social reward of one joint segment choice, with the designated
    /// neighbor for the self term fixed at scene time.
    fn reward_of_combo(
        seg_i: &Segment,
        neighbor_segs: &[Segment],
        designated: Option<usize>,
        params: &DriverParams,
        consts: &SimConstants,
    ) -> f64 {
        let (alpha, beta) = crate::reward::svo_coefficients(params.svo);
        let self_term = match designated {
            Some(j) => {
                personal_reward(seg_i, Some(&neighbor_segs[j]), &params.weights, 3.5, consts)
                    .unwrap()
            }
            None => personal_reward(seg_i, None, &params.weights, 3.5, consts).unwrap(),
        };
        let others = if neighbor_segs.is_empty() {
            0.0
        } else {
            neighbor_segs
                .iter()
                .map(|sj| {
                    personal_reward(sj, Some(seg_i), &RewardWeights::neutral(), 3.5, consts)
                        .unwrap()
                })
                .sum::<f64>()
                / neighbor_segs.len() as f64
        };
        alpha * self_term + beta * others
    }

    /// Brute-force joint enumeration of the cumulative reward, the semantic
    /// reference the factorized evaluation must match.
    fn joint_enumeration_q(
        traj: &Trajectory,
        scene: &Scene,
        params: &DriverParams,
        road: &RoadGeometry,
        consts: &SimConstants,
    ) -> f64 {
        let bounds = consts.segment_bounds();
        let sets: Vec<TrajectorySet> = scene
            .neighbors
            .iter()
            .map(|nb| {
                let set = action_space(&nb.state, road, consts, &nb.dims);
                assert!(!set.is_empty());
                set
            })
            .collect();
        let combos: Vec<Vec<usize>> = {
            let mut acc: Vec<Vec<usize>> = vec![vec![]];
            for set in &sets {
                let mut next = Vec::new();
                for prefix in &acc {
                    for mj in 0..set.len() {
                        let mut p = prefix.clone();
                        p.push(mj);
                        next.push(p);
                    }
                }
                acc = next;
            }
            acc
        };
        let designated = scene.nearest_neighbor();
        let mut total = 0.0;
        for combo in &combos {
            let mut q = 0.0;
            let mut discount = 1.0;
            for &(start, end) in &bounds {
                let seg_i =
                    Segment::of(traj, &scene.subject.dims, scene.subject.goal_y, start, end);
                let neighbor_segs: Vec<Segment> = combo
                    .iter()
                    .enumerate()
                    .map(|(jj, &mj)| {
                        Segment::of(
                            &sets[jj].trajectories[mj],
                            &scene.neighbors[jj].dims,
                            scene.neighbors[jj].goal_y,
                            start,
                            end,
                        )
                    })
                    .collect();
                q += discount * reward_of_combo(&seg_i, &neighbor_segs, designated, params, consts);
                discount *= DISCOUNT;
            }
            total += q;
        }
        total / combos.len() as f64
    }

    #[test]
    fn factorized_q_matches_joint_enumeration() {
        let r = road();
        let c = consts();
        // Keep the neighbor's library tiny by pinning it near the speed cap.
        let scene = Scene::new(
            vehicle(100.0, 0.0, 20.0, 0.0),
            vec![vehicle(125.0, 0.0, 33.5, 0.0)],
        );
        let eval = AnalyticEvaluator::new(&scene, &r, &c);
        let nb_set = action_space(&scene.neighbors[0].state, &r, &c, &scene.neighbors[0].dims);
        assert!(nb_set.len() <= 60, "oracle needs a small joint space");

        for params in [
            DriverParams::new(SvoCategory::Egoistic, RewardWeights::new([0.2, 0.5, 0.3])),
            DriverParams::new(SvoCategory::Prosocial, RewardWeights::new([0.0, 1.0, 0.0])),
            DriverParams::new(SvoCategory::Competitive, RewardWeights::new(NEUTRAL_WEIGHTS)),
            DriverParams::new(SvoCategory::Altruistic, RewardWeights::neutral()),
        ] {
            let q = eval.q_values(&params);
            for probe in [0, eval.trajectories.len() / 2, eval.trajectories.len() - 1] {
                let traj = &eval.trajectories.trajectories[probe];
                let brute = joint_enumeration_q(traj, &scene, &params, &r, &c);
                assert_abs_diff_eq!(q[probe], brute, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sampled_estimate_agrees_within_three_standard_errors() {
        let r = road();
        let c = consts();
        let scene = Scene::new(
            vehicle(100.0, 0.0, 20.0, 0.0),
            vec![
                vehicle(130.0, 0.0, 18.0, 0.0),
                vehicle(80.0, 3.5, 22.0, 3.5),
            ],
        );
        let eval = AnalyticEvaluator::new(&scene, &r, &c);
        let params = DriverParams::new(SvoCategory::Prosocial, RewardWeights::neutral());
        let q_exact = eval.q_values(&params);
        let bounds = c.segment_bounds();
        let sets: Vec<TrajectorySet> = scene
            .neighbors
            .iter()
            .map(|nb| action_space(&nb.state, &r, &c, &nb.dims))
            .collect();

        let designated = scene.nearest_neighbor();
        for seed in 0..10u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let probe = (seed as usize * 17) % eval.trajectories.len();
            let traj = &eval.trajectories.trajectories[probe];
            let mut samples = Vec::with_capacity(256);
            for _ in 0..256 {
                let combo: Vec<usize> = sets
                    .iter()
                    .map(|set| rng.random_range(0..set.len()))
                    .collect();
                let mut q = 0.0;
                let mut discount = 1.0;
                for &(start, end) in &bounds {
                    let seg_i =
                        Segment::of(traj, &scene.subject.dims, scene.subject.goal_y, start, end);
                    let neighbor_segs: Vec<Segment> = combo
                        .iter()
                        .enumerate()
                        .map(|(jj, &mj)| {
                            Segment::of(
                                &sets[jj].trajectories[mj],
                                &scene.neighbors[jj].dims,
                                scene.neighbors[jj].goal_y,
                                start,
                                end,
                            )
                        })
                        .collect();
                    q += discount
                        * reward_of_combo(&seg_i, &neighbor_segs, designated, &params, &c);
                    discount *= DISCOUNT;
                }
                samples.push(q);
            }
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
                / (samples.len() - 1) as f64;
            let se = (var / samples.len() as f64).sqrt();
            assert!(
                (mean - q_exact[probe]).abs() <= 3.0 * se.max(1e-9),
                "seed {seed}: sampled {mean} vs exact {} (se {se})",
                q_exact[probe]
            );
        }
    }

    #[test]
    fn discounted_sum_of_constant_rewards() {
        // Constant per-segment reward of one: the geometric series over the
        // 12 whole segments plus the clamped tail segment.
        let expected: f64 = (0..=12).map(|n| DISCOUNT.powi(n)).sum();
        assert_abs_diff_eq!(expected, 4.725122093, epsilon = 1e-8);

        // An egoistic pure-effort driver alone on the road earns exactly
        // that: no collisions, e = 1 on the coasting keep-lane trajectory.
        let r = road();
        let c = consts();
        let scene = Scene::new(vehicle(100.0, 3.5, 20.0, 3.5), vec![]);
        let eval = AnalyticEvaluator::new(&scene, &r, &c);
        let params = DriverParams::new(SvoCategory::Egoistic, RewardWeights::new([0.0, 0.0, 1.0]));
        let q = eval.q_values(&params);
        let coast_pos = eval
            .trajectories
            .trajectories
            .iter()
            .position(|t| t.library_index == 6)
            .unwrap();
        assert_abs_diff_eq!(q[coast_pos], expected, epsilon = 1e-9);
    }

    #[test]
    fn colliding_everything_zeroes_egoistic_q() {
        let r = road();
        let c = consts();
        // One subject trajectory against a neighbor set that shadows it
        // exactly: every segment of every combination collides, so the
        // egoistic cumulative reward is identically zero.
        let scene = Scene::new(vehicle(100.0, 0.0, 20.0, 0.0), vec![]);
        let full = AnalyticEvaluator::new(&scene, &r, &c).trajectories;
        let coast = full.by_library_index(6).unwrap().clone();
        let subject_set = TrajectorySet {
            trajectories: vec![coast.clone()],
        };
        let shadow_set = TrajectorySet {
            trajectories: vec![coast],
        };
        let dims = VehicleDims::car();
        let eval = AnalyticEvaluator::from_parts(
            subject_set,
            &dims,
            0.0,
            &[(shadow_set, dims, 0.0)],
            Some(0),
            &c,
        );
        let params = DriverParams::new(SvoCategory::Egoistic, RewardWeights::neutral());
        let q = eval.q_values(&params);
        assert_eq!(q.len(), 1);
        assert_abs_diff_eq!(q[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_road_pure_effort_picks_coasting_keep_lane() {
        let r = road();
        let c = consts();
        let scene = Scene::new(vehicle(100.0, 3.5, 20.0, 3.5), vec![]);
        let params = DriverParams::new(SvoCategory::Egoistic, RewardWeights::new([0.0, 0.0, 1.0]));
        let best = best_trajectory(&scene, &params, &r, &c).unwrap();
        // Keep lane at constant speed: library index 6 is (keep, a = 0).
        assert_eq!(best.library_index, 6);
    }

    #[test]
    fn competitive_time_maximizer_overtakes_slow_leader() {
        let r = road();
        let c = consts();
        // A crawling leader blocks the lane and the driver is headed down
        // the passing lane: the traveling-time maximizer pulls out and
        // accelerates past.
        let scene = Scene::new(
            vehicle(100.0, 0.0, 20.0, 3.5),
            vec![vehicle(140.0, 0.0, 3.0, 0.0)],
        );
        let params =
            DriverParams::new(SvoCategory::Competitive, RewardWeights::new([0.0, 1.0, 0.0]));
        let best = best_trajectory(&scene, &params, &r, &c).unwrap();
        assert!(
            matches!(
                best.maneuver.lat,
                crate::trajectory::LatManeuver::Change { .. }
            ),
            "expected a lane change, got {:?}",
            best.maneuver.lat
        );
    }

    #[test]
    fn argmax_invariant_under_positive_scaling() {
        let r = road();
        let c = consts();
        let scene = Scene::new(
            vehicle(100.0, 0.0, 20.0, 0.0),
            vec![vehicle(140.0, 0.0, 16.0, 0.0)],
        );
        let eval = AnalyticEvaluator::new(&scene, &r, &c);
        let params = DriverParams::new(SvoCategory::Prosocial, RewardWeights::neutral());
        let q = eval.q_values(&params);
        let argmax = |vals: &[f64]| {
            let mut b = 0;
            for (i, v) in vals.iter().enumerate() {
                if *v > vals[b] {
                    b = i;
                }
            }
            b
        };
        let scaled: Vec<f64> = q.iter().map(|v| 3.7 * v).collect();
        assert_eq!(argmax(&q), argmax(&scaled));
    }

    #[test]
    fn policy_is_valid_uniform_when_q_constant() {
        let support = vec![3, 7, 9, 200];
        let p = PolicyDistribution::softmax(&support, &[2.0, 2.0, 2.0, 2.0]);
        assert!(p.is_valid(1e-9));
        for &m in &support {
            assert_abs_diff_eq!(p.probs[m], 0.25, epsilon = 1e-12);
        }
        assert_eq!(p.probs[0], 0.0);
    }

    #[test]
    fn policy_dominated_by_large_gap() {
        let p = PolicyDistribution::softmax(&[0, 1, 2], &[21.0, 1.0, 1.0]);
        assert!(p.probs[0] > 0.999);
    }

    #[test]
    fn policy_shift_invariance() {
        let r = road();
        let c = consts();
        let scene = Scene::new(
            vehicle(100.0, 0.0, 20.0, 0.0),
            vec![vehicle(135.0, 0.0, 15.0, 0.0)],
        );
        let eval = AnalyticEvaluator::new(&scene, &r, &c);
        let params = DriverParams::new(SvoCategory::Egoistic, RewardWeights::neutral());
        let q = eval.q_values(&params);
        let support = eval.trajectories.support();
        let base = PolicyDistribution::softmax(&support, &q);
        let shifted: Vec<f64> = q.iter().map(|v| v + 123.456).collect();
        let moved = PolicyDistribution::softmax(&support, &shifted);
        for m in 0..LIBRARY_SIZE {
            assert_abs_diff_eq!(base.probs[m], moved.probs[m], epsilon = 1e-12);
        }
    }

    #[test]
    fn policy_zero_exactly_on_filtered_indices() {
        let r = road();
        let c = consts();
        // Near the ramp end most of the library is filtered away.
        let scene = Scene::new(
            SceneVehicle::new(
                VehicleState::new(910.0, -3.5, 0.0, 20.0),
                VehicleDims::car(),
                0.0,
            ),
            vec![],
        );
        let eval = AnalyticEvaluator::new(&scene, &r, &c);
        assert!(eval.trajectories.len() < 225);
        assert!(!eval.trajectories.is_empty());
        let p = eval
            .policy(&DriverParams::new(
                SvoCategory::Egoistic,
                RewardWeights::neutral(),
            ))
            .unwrap();
        assert!(p.is_valid(1e-9));
        let support = eval.trajectories.support();
        for m in 0..LIBRARY_SIZE {
            if !support.contains(&m) {
                assert_eq!(p.probs[m], 0.0);
            }
        }
    }

    #[test]
    fn best_trajectory_matches_policy_mode() {
        let r = road();
        let c = consts();
        let scene = Scene::new(
            vehicle(100.0, 0.0, 22.0, 0.0),
            vec![
                vehicle(128.0, 0.0, 14.0, 0.0),
                vehicle(90.0, 3.5, 26.0, 3.5),
            ],
        );
        let eval = AnalyticEvaluator::new(&scene, &r, &c);
        for params in DriverParams::grid() {
            let best = eval.best_trajectory(&params).unwrap().library_index;
            let mode = eval.policy(&params).unwrap().mode().unwrap();
            assert_eq!(best, mode);
        }
    }

    #[test]
    fn mixture_mode_can_differ_from_component_modes() {
        let mk = |vals: [(usize, f64); 3]| {
            let mut s = vec![0.0; LIBRARY_SIZE];
            for (i, v) in vals {
                s[i] = v;
            }
            PolicyDistribution::from_masked_scores(&[0, 1, 2], &s)
        };
        let a = mk([(0, 0.5), (1, 0.4), (2, 0.1)]);
        let b = mk([(0, 0.1), (1, 0.4), (2, 0.5)]);
        let mix = PolicyDistribution::mixture(&[(0.5, &a), (0.5, &b)]);
        assert_eq!(a.mode(), Some(0));
        assert_eq!(b.mode(), Some(2));
        assert_eq!(mix.mode(), Some(1));
    }
}
