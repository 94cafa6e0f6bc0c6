use proptest::prelude::*;
use uav_energy_core::comms::GroundNode;
use uav_energy_core::eval::{above_nodes_plan, check_feasibility, exact_energy, geometric_center_plan, per_gn_throughput, ViolationKind};
use uav_energy_core::fhc::{fhc_to_trajectory, solve_multi_gn};
use uav_energy_core::{DiscretizedTrajectory, Point2, Scenario, SolverSettings};

#[test]
fn hover_with_transmission() {
    let s = Scenario::default();
    let p = Point2::new(50.0, 50.0);
    let t = DiscretizedTrajectory::new(vec![p, p], vec![10.0], vec![vec![10.0, 0.0, 0.0]]).unwrap();
    let e = exact_energy(&t, &s.rotor, 50.0).unwrap();
    assert!((e.total - 14192.245).abs() < 0.01, "{}", e.total);
    assert_eq!(e.total, e.propulsion + e.communication);
}

#[test]
fn one_leg_near_max_range_speed() {
    let s = Scenario::default();
    let sp = s.rotor.characteristic_speeds(s.v_max).unwrap();
    let t = DiscretizedTrajectory::new(vec![Point2::ORIGIN, Point2::new(390.0, 0.0)], vec![10.0], vec![vec![0.0; 3]]).unwrap();
    let e = exact_energy(&t, &s.rotor, s.comm_power).unwrap().total;
    assert!((e - 10.0 * s.rotor.power(39.0).unwrap()).abs() < 1e-9 * e);
    assert!((e - 390.0 * sp.min_energy_per_meter).abs() < 1e-3 * e, "{e}");
    assert!((e - 1.22e4).abs() < 0.01 * 1.22e4, "{e}");
}

proptest! {
    #[test]
    fn subdividing_at_constant_speed_keeps_energy(len in 0.0f64..500.0, t in 0.5f64..60.0, cut in 0.05f64..0.95) {
        let s = Scenario::default();
        let a = Point2::new(10.0, 20.0);
        let b = a + Point2::new(len * 0.6, len * 0.8);
        let mid = a.lerp(b, cut);
        let whole = DiscretizedTrajectory::new(vec![a, b], vec![t], vec![vec![0.0; 3]]).unwrap();
        let split = DiscretizedTrajectory::new(vec![a, mid, b], vec![t * cut, t * (1.0 - cut)], vec![vec![0.0; 3]; 2]).unwrap();
        let e1 = exact_energy(&whole, &s.rotor, 0.0).unwrap().total;
        let e2 = exact_energy(&split, &s.rotor, 0.0).unwrap().total;
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1 * 4.0, "{} vs {}", e1, e2);
    }
}

#[test]
fn throughput_delegates_to_channel() {
    let s = Scenario::default();
    let st = SolverSettings::default();
    let plan = solve_multi_gn(&s, &st).unwrap();
    let traj = fhc_to_trajectory(&plan, &s, st.delta_max).unwrap();
    let bits = per_gn_throughput(&traj, &s).unwrap();
    for (k, node) in s.nodes.iter().enumerate() {
        let column: Vec<f64> = traj.alloc.iter().map(|r| r[k]).collect();
        let direct = s.channel.throughput(&traj.waypoints[..traj.num_segments()], &column, node).unwrap();
        assert_eq!(bits[k], direct);
    }
    assert!(check_feasibility(&traj, &s, &st).is_empty());
}

#[test]
fn reports_speed_and_allocation_violations() {
    let s = Scenario::default();
    let st = SolverSettings::default();
    let plan = solve_multi_gn(&s, &st).unwrap();
    let traj = fhc_to_trajectory(&plan, &s, st.delta_max).unwrap();
    let m = (0..traj.num_segments()).find(|&m| traj.segment_length(m) > 5.0).unwrap();

    let mut fast = traj.clone();
    fast.durations[m] *= 0.5;
    let v = check_feasibility(&fast, &s, &st);
    let flagged = fast.speed(m) > s.v_max;
    assert_eq!(v.iter().any(|x| x.kind == ViolationKind::SpeedCap && x.index == Some(m)), flagged);

    let mut over = traj.clone();
    over.alloc[m][0] = over.durations[m] + 1.0;
    let v = check_feasibility(&over, &s, &st);
    let hit = v.iter().find(|x| x.kind == ViolationKind::AllocationCap).unwrap();
    assert_eq!(hit.index, Some(m));
    assert!((hit.magnitude - 1.0).abs() < 1e-9);

    let mut short = traj;
    let last = short.num_segments() - 1;
    short.waypoints[last + 1] = Point2::new(700.0, 800.0);
    let v = check_feasibility(&short, &s, &st);
    assert!(v.iter().any(|x| x.kind == ViolationKind::EndPin));
}

#[test]
fn one_node_benchmarks_coincide() {
    let s = Scenario {
        nodes: vec![GroundNode::new(Point2::new(300.0, 500.0), 80e6)],
        ..Scenario::default()
    };
    let st = SolverSettings::default();
    let a = geometric_center_plan(&s).unwrap();
    let b = above_nodes_plan(&s, &st).unwrap();
    assert_eq!(a.total_energy, b.total_energy);
}

#[test]
fn benchmarks_cross_over_and_are_dominated() {
    let base = Scenario::default();
    let st = SolverSettings::default();
    let mut signs = Vec::new();
    for q in [1e6, 10e6, 50e6, 100e6, 200e6] {
        let s = base.with_uniform_demand(q);
        let c = geometric_center_plan(&s).unwrap().total_energy;
        let a = above_nodes_plan(&s, &st).unwrap().total_energy;
        let f = solve_multi_gn(&s, &st).unwrap().total_energy;
        assert!(f <= c.min(a) + 1e-6, "{q}: {f} vs {c}, {a}");
        signs.push(c < a);
    }
    assert!(signs[0]);
    assert!(!signs[signs.len() - 1]);
}
