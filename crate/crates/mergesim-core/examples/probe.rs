// scratch probe: evaluator timing
use mergesim_core::behavior::{AnalyticEvaluator, PolicyEvaluator};
use mergesim_core::geometry::*;
use mergesim_core::reward::*;
use mergesim_core::scene::*;
use std::time::Instant;

fn main() {
    let road = RoadGeometry::highway_with_ramp(3, 1000.0, 200.0);
    let c = SimConstants::default();
    let dims = VehicleDims::car();
    for n_nb in [1usize, 2, 4, 8] {
        let neighbors: Vec<SceneVehicle> = (0..n_nb)
            .map(|k| {
                let lane = (k % 3) as f64 * 3.5;
                SceneVehicle::new(VehicleState::new(120.0 + 18.0 * k as f64, lane, 0.0, 19.0 + k as f64), dims, lane)
            })
            .collect();
        let scene = Scene::new(SceneVehicle::new(VehicleState::new(100.0, 0.0, 0.0, 22.0), dims, 0.0), neighbors);
        let t0 = Instant::now();
        let reps = 10;
        for _ in 0..reps {
            let eval = AnalyticEvaluator::new(&scene, &road, &c);
            std::hint::black_box(eval.policy(&DriverParams::new(SvoCategory::Prosocial, RewardWeights::neutral())).unwrap());
        }
        let dt = t0.elapsed().as_secs_f64() / reps as f64;
        // plus all-22 policy query cost after one build
        let eval = AnalyticEvaluator::new(&scene, &road, &c);
        let t1 = Instant::now();
        for p in DriverParams::grid() {
            std::hint::black_box(eval.policy(&p).unwrap());
        }
        let dt22 = t1.elapsed().as_secs_f64();
        println!("{n_nb} neighbors: build+1policy {:.1} ms, 22 policies {:.2} ms", dt * 1e3, dt22 * 1e3);
    }
}
