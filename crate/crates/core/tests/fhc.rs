use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uav_energy_core::comms::GroundNode;
use uav_energy_core::fhc::{fhc_to_trajectory, fixed_hover_plan, solve_multi_gn, solve_single_gn, TravelModel};
use uav_energy_core::{Point2, Scenario, SolverSettings};

fn settings() -> SolverSettings {
    SolverSettings::default()
}

#[test]
fn single_node_matches_fine_grid() {
    let s = Scenario {
        nodes: vec![GroundNode::new(Point2::new(600.0, 800.0), 100e6)],
        endpoints_enabled: false,
        ..Scenario::default()
    };
    let plan = solve_single_gn(&s).unwrap();
    let tm = TravelModel::new(&s).unwrap();
    let hc = tm.hover_power + s.comm_power;
    let cost = |d: f64| d * tm.energy_per_meter + hc * 100.0 / s.channel.rate_at_squared_distance((1000.0 - d).powi(2));
    let (mut best_d, mut best) = (0.0, f64::INFINITY);
    for i in 0..=10_000 {
        let d = i as f64 * 0.1;
        if cost(d) < best {
            best = cost(d);
            best_d = d;
        }
    }
    assert!((plan.travel_distance - best_d).abs() <= 0.5, "{} vs {best_d}", plan.travel_distance);
    assert!(plan.total_energy <= best * (1.0 + 1e-9));
}

#[test]
fn one_node_at_both_endpoints_hovers_overhead() {
    let w = Point2::new(300.0, 400.0);
    let s = Scenario {
        nodes: vec![GroundNode::new(w, 100e6)],
        start: w,
        end: w,
        ..Scenario::default()
    };
    let plan = solve_multi_gn(&s, &settings()).unwrap();
    assert!(plan.hover_points[0].distance(w) < 1e-3, "{:?}", plan.hover_points[0]);
    assert!(plan.travel_distance < 2e-3);
    let hc = s.rotor.hover_power() + s.comm_power;
    let expect = hc * 100.0 / s.channel.peak_rate();
    assert!((plan.total_energy - expect).abs() <= 1e-4 * expect);
}

#[test]
fn one_iteration_matches_grid_over_the_approach_line() {
    // With endpoints disabled and one node, the hover point lies on the
    // start→node segment; the first convex restriction is then a 1-D problem
    // in the remaining distance r with z = r² and η at its bound.
    let s = Scenario {
        nodes: vec![GroundNode::new(Point2::new(0.0, 800.0), 60e6)],
        endpoints_enabled: false,
        ..Scenario::default()
    };
    let st = SolverSettings {
        max_sca_iters: 1,
        ..settings()
    };
    let plan = solve_multi_gn(&s, &st).unwrap();
    let tm = TravelModel::new(&s).unwrap();
    let c = (tm.hover_power + s.comm_power) * 60.0;
    let (h2, g0) = (100.0f64 * 100.0, s.channel.gamma0);
    let g = (1.0 + g0 / h2).log2();
    let rho = -g0 * std::f64::consts::LOG2_E / (h2 * (h2 + g0));
    let mut best = f64::INFINITY;
    for i in 0..=8000 {
        let r = i as f64 * 0.1;
        let eta = g + rho * r * r;
        if eta > 0.0 {
            best = best.min((800.0 - r) * tm.energy_per_meter + c / eta);
        }
    }
    let obj = plan.trace[0];
    assert!((obj - best).abs() <= 1e-3 * best, "{obj} vs {best}");
}

fn random_scenario(rng: &mut ChaCha8Rng, k: usize) -> Scenario {
    let nodes = (0..k)
        .map(|_| {
            GroundNode::new(
                Point2::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)),
                rng.random_range(20e6..300e6),
            )
        })
        .collect();
    Scenario {
        nodes,
        end: Point2::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)),
        ..Scenario::default()
    }
}

#[test]
fn traces_are_monotone_and_plans_beat_fixed_hovering() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..6 {
        let s = random_scenario(&mut rng, 3 + trial % 4);
        let plan = solve_multi_gn(&s, &settings()).unwrap();
        assert!(plan.trace.len() <= 50);
        for w in plan.trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-7), "{:?}", plan.trace);
        }
        let above = fixed_hover_plan(&s, &plan.tour.order, &s.node_positions()).unwrap();
        let c = s.geometric_center();
        let center = fixed_hover_plan(&s, &plan.tour.order, &vec![c; s.nodes.len()]).unwrap();
        assert!(plan.total_energy <= above.total_energy + 1e-6);
        assert!(plan.total_energy <= center.total_energy + 1e-6);
        for (i, n) in s.nodes.iter().enumerate() {
            let bits = s.channel.bandwidth * plan.hover_times[i] * s.channel.spectral_rate(plan.hover_points[i], n);
            assert!((bits - n.demand_bits).abs() <= 1e-9 * n.demand_bits);
        }
    }
}

#[test]
fn larger_demand_pulls_hover_points_closer() {
    let dist = |bits: f64| {
        let s = Scenario::default().with_uniform_demand(bits);
        let plan = solve_multi_gn(&s, &settings()).unwrap();
        plan.slack_radii.iter().map(|z| z.sqrt()).collect::<Vec<_>>()
    };
    let small = dist(50e6);
    let large = dist(200e6);
    for (a, b) in small.iter().zip(&large) {
        assert!(b < a, "{small:?} vs {large:?}");
    }
}

#[test]
fn trajectory_reproduces_plan_energy() {
    let s = Scenario::default();
    let plan = solve_multi_gn(&s, &settings()).unwrap();
    let traj = fhc_to_trajectory(&plan, &s, 10.0).unwrap();
    let mut energy = 0.0;
    for m in 0..traj.num_segments() {
        let l = traj.segment_length(m);
        assert!(l <= 10.0 + 1e-9);
        let v = l / traj.durations[m];
        energy += traj.durations[m] * s.rotor.power(v).unwrap();
        energy += s.comm_power * traj.alloc[m].iter().sum::<f64>();
    }
    assert!((energy - plan.total_energy).abs() <= 5e-3 * plan.total_energy);
    assert_eq!(traj.waypoints[0], s.start);
    assert_eq!(*traj.waypoints.last().unwrap(), s.end);
}

#[test]
fn hover_becomes_one_zero_length_segment() {
    let w = Point2::new(0.0, 0.0);
    let s = Scenario {
        nodes: vec![GroundNode::new(w, 100e6)],
        start: w,
        end: w,
        ..Scenario::default()
    };
    let plan = fixed_hover_plan(&s, &[0], &[w]).unwrap();
    let traj = fhc_to_trajectory(&plan, &s, 10.0).unwrap();
    assert_eq!(traj.num_segments(), 1);
    assert!((traj.durations[0] - 15.019).abs() < 1e-3);
    assert_eq!(traj.alloc[0][0], traj.durations[0]);
}
