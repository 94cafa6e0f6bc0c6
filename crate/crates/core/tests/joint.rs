use uav_energy_core::comms::GroundNode;
use uav_energy_core::eval::{check_feasibility, exact_energy, per_gn_throughput};
use uav_energy_core::fhc::solve_multi_gn;
use uav_energy_core::joint::{
    build_subproblem, compute_slacks, exact_objective, init_from_fhc, init_from_plan, optimize, optimize_from, ObjectiveKind, SlackState,
};
use uav_energy_core::kernel::{self, Atom, KernelSettings};
use uav_energy_core::{DiscretizedTrajectory, Point2, Scenario, SolverSettings};

fn settings(delta_max: f64) -> SolverSettings {
    SolverSettings {
        delta_max,
        ..SolverSettings::default()
    }
}

fn linearization_point(sp: &uav_energy_core::joint::Subproblem, traj: &DiscretizedTrajectory, sl: &SlackState) -> Vec<f64> {
    let l = &sp.layout;
    let mut x = vec![0.0; sp.program.num_vars()];
    for (m, q) in l.q.iter().enumerate() {
        if let Some(v) = q {
            x[v[0]] = traj.waypoints[m].x;
            x[v[1]] = traj.waypoints[m].y;
        }
    }
    for m in 0..l.t.len() {
        x[l.t[m]] = traj.durations[m];
        if let Some(y) = l.y[m] {
            x[y] = sl.y[m];
        }
        for k in 0..l.tau[m].len() {
            x[l.tau[m][k]] = traj.alloc[m][k];
            x[l.a[m][k]] = sl.a[m][k];
        }
    }
    x
}

#[test]
fn uniform_duration_matches_linear_solve_for_one_node() {
    let s = Scenario {
        nodes: vec![GroundNode::new(Point2::new(400.0, 400.0), 300e6)],
        ..Scenario::default()
    };
    let st = settings(20.0);
    let plan = solve_multi_gn(&s, &st).unwrap();
    let init = init_from_plan(&s, &st, &plan).unwrap();
    let n = init.num_segments();
    let rate_sum: f64 = (0..n).map(|m| s.channel.spectral_rate(init.waypoints[m], &s.nodes[0])).sum();
    let exact = s.nodes[0].normalized_demand(&s.channel) / rate_sum;
    let t_bar = init.durations[0];
    assert!(init.durations.iter().all(|&t| t == t_bar));
    assert!(t_bar >= exact && t_bar - exact <= 1e-3 + 1e-12, "{t_bar} vs {exact}");
}

#[test]
fn initial_trajectory_is_feasible() {
    let s = Scenario::default();
    let st = settings(10.0);
    let init = init_from_fhc(&s, &st).unwrap();
    assert!(check_feasibility(&init, &s, &st).is_empty());
    let bits = per_gn_throughput(&init, &s).unwrap();
    for (b, n) in bits.iter().zip(&s.nodes) {
        assert!(*b >= n.demand_bits * (1.0 - 1e-6));
    }
}

#[test]
fn halving_segment_cap_doubles_waypoints() {
    let s = Scenario::default();
    for dm in [40.0, 20.0, 10.0] {
        let m1 = init_from_fhc(&s, &settings(dm)).unwrap().num_segments() as i64 - 1;
        let m2 = init_from_fhc(&s, &settings(dm / 2.0)).unwrap().num_segments() as i64 - 1;
        assert!((m2 - 2 * m1).abs() <= 1, "{dm}: {m1} -> {m2}");
    }
}

#[test]
fn rate_bound_coefficient_overhead() {
    let w = Point2::new(200.0, 700.0);
    let mut s = Scenario::default();
    s.nodes.truncate(1);
    s.nodes[0].position = w;
    let traj = DiscretizedTrajectory::new(
        vec![s.start, w, w + Point2::new(5.0, 0.0), s.end],
        vec![50.0, 5.0, 50.0],
        vec![vec![0.0], vec![5.0], vec![0.0]],
    )
    .unwrap();
    let sl = compute_slacks(&traj, &s);
    let st = settings(2000.0);
    let sp = build_subproblem(&s, &st, &traj, &sl, ObjectiveKind::Energy).unwrap();
    let con = sp.program.constraints().iter().find(|c| c.label == "rate1_1").unwrap();
    let beta = con
        .atoms
        .iter()
        .find_map(|a| match a {
            Atom::SquaredNorm { scale, .. } => Some(*scale),
            _ => None,
        })
        .unwrap();
    let h = 1e-3;
    let rate = |u: f64| s.channel.rate_at_squared_distance(u);
    let slope = (rate(0.0) - rate(h)) / h;
    assert!((beta - slope).abs() < 1e-6 * slope, "{beta} vs {slope}");
    assert!((beta - 1.428410931573e-4).abs() < 1e-15, "{beta:e}");
}

#[test]
fn bounds_are_tight_at_the_linearization_point() {
    let s = Scenario::default();
    let st = settings(40.0);
    let traj = init_from_fhc(&s, &st).unwrap();
    let sl = compute_slacks(&traj, &s);
    let sp = build_subproblem(&s, &st, &traj, &sl, ObjectiveKind::Energy).unwrap();
    let x = linearization_point(&sp, &traj, &sl);
    let (_, cons) = kernel::evaluate(&sp.program, &x).unwrap();
    for (c, v) in sp.program.constraints().iter().zip(&cons) {
        if c.label.starts_with("rate") || c.label.starts_with("induced") {
            let v = v.unwrap();
            assert!(v.abs() < 1e-9, "{} = {v}", c.label);
        }
    }
}

#[test]
fn slack_definition_holds() {
    let s = Scenario::default();
    let traj = init_from_fhc(&s, &settings(20.0)).unwrap();
    let sl = compute_slacks(&traj, &s);
    let v0 = s.rotor.derived.hover_induced_velocity;
    for m in 0..traj.num_segments() {
        let t = traj.durations[m];
        let d2 = traj.segment_length(m).powi(2);
        let direct = (t.powi(4) + d2 * d2 / (4.0 * v0.powi(4))).sqrt() - d2 / (2.0 * v0 * v0);
        assert!((sl.y[m] * sl.y[m] - direct).abs() <= 1e-9 * (1.0 + direct));
        for k in 0..s.nodes.len() {
            let r = s.channel.spectral_rate(traj.waypoints[m], &s.nodes[k]);
            assert!((sl.a[m][k].powi(2) - traj.alloc[m][k] * r).abs() <= 1e-9 * (1.0 + traj.alloc[m][k] * r));
        }
    }
}

#[test]
fn one_subproblem_solution_is_feasible_with_exact_expressions() {
    let s = Scenario::default().with_uniform_demand(50e6);
    let st = settings(20.0);
    let traj = init_from_fhc(&s, &st).unwrap();
    let sl = compute_slacks(&traj, &s);
    let sp = build_subproblem(&s, &st, &traj, &sl, ObjectiveKind::Energy).unwrap();
    let sol = kernel::solve(&sp.program, &sp.start_point(&s, &traj, &sl), &KernelSettings::from(&st)).unwrap();
    let next = sp.extract(&sol).unwrap();
    assert!(check_feasibility(&next, &s, &st).is_empty());
    let exact = exact_objective(&next, &s, ObjectiveKind::Energy).unwrap();
    assert!(exact <= sol.objective * (1.0 + 1e-6), "{exact} vs {}", sol.objective);
}

#[test]
fn energy_optimization_beats_fly_hover_communicate() {
    let s = Scenario::default().with_uniform_demand(50e6);
    let st = settings(10.0);
    let fhc = solve_multi_gn(&s, &st).unwrap();
    let r = optimize(&s, &st, ObjectiveKind::Energy).unwrap();
    assert!(check_feasibility(&r.trajectory, &s, &st).is_empty());
    for w in r.trace.windows(2) {
        assert!(w[1].subproblem_objective <= w[0].subproblem_objective * (1.0 + 1e-9));
    }
    let e = exact_energy(&r.trajectory, &s.rotor, s.comm_power).unwrap().total;
    assert!(e <= r.initial_objective);
    assert!(e <= fhc.total_energy + 1e-6, "{e} vs {}", fhc.total_energy);
    let last = r.trace.last().unwrap();
    assert!((last.subproblem_objective - e).abs() <= 0.02 * e);

    let again = SolverSettings { max_sca_iters: 1, ..st };
    let fresh = optimize_from(&s, &again, ObjectiveKind::Energy, r.trajectory.clone()).unwrap();
    assert!(fresh.trace[0].subproblem_objective <= last.subproblem_objective * (1.0 + 1e-6));

    let time = optimize(&s, &st, ObjectiveKind::Time).unwrap();
    assert!(check_feasibility(&time.trajectory, &s, &st).is_empty());
    assert!(time.trajectory.mission_time() <= fhc.mission_time + 1e-6);
    let et = exact_energy(&time.trajectory, &s.rotor, s.comm_power).unwrap().total;
    assert!((et - e).abs() > 0.01 * e);
}
