//! Fly-hover-communicate planning: the UAV flies at the maximum-range speed
//! between hovering points and talks to each node only while hovering.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result, SubproblemFailure};
use crate::geometry::Point2;
use crate::kernel::{self, Affine, Atom, ConvexProgram, KernelSettings, Status};
use crate::scenario::{Scenario, SolverSettings};
use crate::search::scan_then_golden;
use crate::trajectory::DiscretizedTrajectory;
use crate::tsp::{self, Tour};

const SCAN_STEP: f64 = 1.0;
const SEARCH_TOL: f64 = 1e-4;
const ETA_FLOOR: f64 = 1e-9;

/// Speed and per-meter energy used for all travel legs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TravelModel {
    pub speed: f64,
    pub energy_per_meter: f64,
    pub hover_power: f64,
}

impl TravelModel {
    pub fn new(s: &Scenario) -> Result<Self> {
        let sp = s.rotor.characteristic_speeds(s.v_max)?;
        Ok(TravelModel {
            speed: sp.max_range,
            energy_per_meter: sp.min_energy_per_meter,
            hover_power: s.rotor.hover_power(),
        })
    }
}

/// Single-node plan: fly `travel_distance` toward the node, then hover.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SingleGnPlan {
    pub travel_distance: f64,
    pub hover_point: Point2,
    pub hover_time: f64,
    pub travel_speed: f64,
    pub travel_energy: f64,
    pub hover_comm_energy: f64,
    pub total_energy: f64,
}

fn single_gn_parts(s: &Scenario) -> Result<(f64, f64, TravelModel)> {
    if s.nodes.len() != 1 {
        return Err(Error::invalid("number of ground nodes", "exactly 1 for the single-node solver"));
    }
    if s.endpoints_enabled {
        return Err(Error::invalid("endpoints_enabled", "false for the single-node solver"));
    }
    let node = &s.nodes[0];
    let d_bar = s.start.distance(node.position);
    let q = node.normalized_demand(&s.channel);
    Ok((d_bar, q, TravelModel::new(s)?))
}

/// Minimizes `D·E0* + (P_h+P_c)·Q / log2(1 + γ0/(H² + (D̄−D)²))` over
/// `D ∈ [0, D̄]` by a 1 m scan followed by golden-section refinement.
pub fn solve_single_gn(s: &Scenario) -> Result<SingleGnPlan> {
    let (d_bar, q, tm) = single_gn_parts(s)?;
    let hc = tm.hover_power + s.comm_power;
    let cost = |d: f64| {
        let rest = d_bar - d;
        d * tm.energy_per_meter + hc * q / s.channel.rate_at_squared_distance(rest * rest)
    };
    let d = scan_then_golden(cost, 0.0, d_bar, SCAN_STEP, SEARCH_TOL);
    let node = s.nodes[0].position;
    let hover_point = if d_bar > 0.0 { s.start.lerp(node, d / d_bar) } else { node };
    let hover_time = s.channel.hover_time(hover_point, &s.nodes[0]);
    let travel_energy = d * tm.energy_per_meter;
    let hover_comm_energy = hc * hover_time;
    Ok(SingleGnPlan {
        travel_distance: d,
        hover_point,
        hover_time,
        travel_speed: tm.speed,
        travel_energy,
        hover_comm_energy,
        total_energy: travel_energy + hover_comm_energy,
    })
}

/// Low-SNR asymptotic solution of the single-node problem.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LowSnrSolution {
    pub travel_distance: f64,
    /// Normalized demand (bits/Hz) at or below which the UAV does not move.
    pub threshold_demand: f64,
}

pub fn low_snr_closed_form(s: &Scenario) -> Result<LowSnrSolution> {
    let (d_bar, q, tm) = single_gn_parts(s)?;
    let hc = tm.hover_power + s.comm_power;
    let k = s.channel.gamma0 * tm.energy_per_meter / (2.0 * core::f64::consts::LN_2 * hc);
    Ok(LowSnrSolution {
        travel_distance: (d_bar - k / q).max(0.0),
        threshold_demand: k / d_bar,
    })
}

/// Multi-node plan. Per-node vectors are indexed by node, not by visit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FhcPlan {
    pub tour: Tour,
    pub hover_points: Vec<Point2>,
    pub hover_times: Vec<f64>,
    /// Squared hover-point-to-node distances (m²).
    pub slack_radii: Vec<f64>,
    pub travel_distance: f64,
    pub travel: TravelModel,
    pub travel_energy: f64,
    pub hover_comm_energy: f64,
    pub total_energy: f64,
    pub mission_time: f64,
    /// Subproblem optimum of every SCA iteration; empty for fixed plans.
    pub trace: Vec<f64>,
}

fn end_point(s: &Scenario) -> Option<Point2> {
    s.endpoints_enabled.then_some(s.end)
}

/// Plan that visits `hover_points[order[i]]` in tour order and delivers
/// every demand while hovering there.
pub fn fixed_hover_plan(s: &Scenario, order: &[usize], hover_points: &[Point2]) -> Result<FhcPlan> {
    let k = s.nodes.len();
    if hover_points.len() != k {
        return Err(Error::Dimension(format!("{k} nodes but {} hover points", hover_points.len())));
    }
    let tm = TravelModel::new(s)?;
    let travel_distance = tsp::tour_length(order, hover_points, s.start, end_point(s))?;
    let hover_times: Vec<f64> = s.nodes.iter().zip(hover_points).map(|(n, &p)| s.channel.hover_time(p, n)).collect();
    let slack_radii = s
        .nodes
        .iter()
        .zip(hover_points)
        .map(|(n, &p)| (p - n.position).norm_squared())
        .collect();
    let hover_total: f64 = hover_times.iter().sum();
    let travel_energy = travel_distance * tm.energy_per_meter;
    let hover_comm_energy = (tm.hover_power + s.comm_power) * hover_total;
    Ok(FhcPlan {
        tour: Tour {
            order: order.to_vec(),
            length: tsp::tour_length(order, &s.node_positions(), s.start, end_point(s))?,
        },
        hover_points: hover_points.to_vec(),
        hover_times,
        slack_radii,
        travel_distance,
        travel: tm,
        travel_energy,
        hover_comm_energy,
        total_energy: travel_energy + hover_comm_energy,
        mission_time: travel_distance / tm.speed + hover_total,
        trace: Vec::new(),
    })
}

struct P33 {
    prog: ConvexProgram,
    d: usize,
    q: Vec<[usize; 2]>,
    z: Vec<usize>,
    eta: Vec<usize>,
}

/// Convex restriction around squared distances `z_l` (indexed by node).
fn build_p33(s: &Scenario, tm: &TravelModel, order: &[usize], z_l: &[f64]) -> P33 {
    let k = s.nodes.len();
    let mut prog = ConvexProgram::new();
    let d = prog.scalar("D_tr", Some(0.0));
    let mut q = vec![[0, 0]; k];
    let mut z = vec![0; k];
    let mut eta = vec![0; k];
    for i in 0..k {
        q[i] = prog.vec2(format!("q{}", i + 1), None);
        z[i] = prog.scalar(format!("z{}", i + 1), None);
        eta[i] = prog.scalar(format!("eta{}", i + 1), Some(ETA_FLOOR));
    }
    prog.minimize(Atom::Linear(Affine::default().term(d, tm.energy_per_meter)));
    let hc = tm.hover_power + s.comm_power;
    for (i, node) in s.nodes.iter().enumerate() {
        prog.minimize(Atom::Reciprocal {
            scale: hc * node.normalized_demand(&s.channel),
            den: Affine::var(eta[i]),
        });
    }
    let point = |p: Point2| [Affine::constant(p.x), Affine::constant(p.y)];
    let var = |v: [usize; 2]| [Affine::var(v[0]), Affine::var(v[1])];
    let diff = |a: &[Affine; 2], b: &[Affine; 2]| -> Vec<Affine> {
        vec![
            a[0].clone().add(&b[0].clone().scaled(-1.0)),
            a[1].clone().add(&b[1].clone().scaled(-1.0)),
        ]
    };
    let mut legs = Vec::with_capacity(k + 1);
    let mut prev = point(s.start);
    for &i in order {
        let cur = var(q[i]);
        legs.push(diff(&cur, &prev));
        prev = cur;
    }
    if let Some(e) = end_point(s) {
        legs.push(diff(&point(e), &prev));
    }
    prog.sum_of_norms_le("travel", legs, Affine::var(d));
    let h2 = s.channel.altitude * s.channel.altitude;
    let g0 = s.channel.gamma0;
    for (i, node) in s.nodes.iter().enumerate() {
        prog.constrain(
            format!("disk{}", i + 1),
            vec![
                Atom::SquaredNorm {
                    scale: 1.0,
                    arg: diff(&var(q[i]), &point(node.position)),
                },
                Atom::Linear(Affine::default().term(z[i], -1.0)),
            ],
        );
        let zl = z_l[i];
        let g = s.channel.rate_at_squared_distance(zl);
        let rho = -g0 * core::f64::consts::LOG2_E / ((h2 + zl) * (h2 + zl + g0));
        // η ≤ g + ρ (z − z_l)
        prog.affine_le(
            format!("rate{}", i + 1),
            Affine::var(eta[i]),
            &Affine::constant(g - rho * zl).term(z[i], rho),
        );
    }
    P33 { prog, d, q, z, eta }
}

/// Algorithm: visiting order from the tour heuristic, then successive convex
/// approximation over hovering points starting directly above each node.
pub fn solve_multi_gn(s: &Scenario, st: &SolverSettings) -> Result<FhcPlan> {
    let k = s.nodes.len();
    let positions = s.node_positions();
    let tour = tsp::solve_open_tour_with(&positions, s.start, end_point(s), st.rng_seed, st.tsp_restarts)?;
    let tm = TravelModel::new(s)?;
    let ks = KernelSettings::from(st);
    let mut hover = positions.clone();
    let mut trace = Vec::new();
    for iter in 1..=st.max_sca_iters.max(1) {
        let z_l: Vec<f64> = hover.iter().zip(&positions).map(|(h, w)| (*h - *w).norm_squared()).collect();
        let p = build_p33(s, &tm, &tour.order, &z_l);
        let mut x0 = vec![0.0; p.prog.num_vars()];
        for i in 0..k {
            x0[p.q[i][0]] = hover[i].x;
            x0[p.q[i][1]] = hover[i].y;
            x0[p.z[i]] = z_l[i] + 1e-3 * (1.0 + z_l[i]);
            x0[p.eta[i]] = 0.5 * s.channel.rate_at_squared_distance(x0[p.z[i]]);
        }
        x0[p.d] = tsp::tour_length(&tour.order, &hover, s.start, end_point(s))? * 1.01 + 1.0;
        let sol = kernel::solve(&p.prog, &x0, &ks)?;
        if sol.status != Status::Optimal {
            let last = fixed_hover_plan(s, &tour.order, &hover)
                .and_then(|plan| fhc_to_trajectory(&plan, s, st.delta_max))
                .ok();
            return Err(Error::Subproblem(Box::new(SubproblemFailure {
                iteration: iter,
                status: sol.status,
                trace,
                last_trajectory: last,
                program_dump: p.prog.to_string(),
            })));
        }
        for i in 0..k {
            hover[i] = Point2::new(sol.x[p.q[i][0]], sol.x[p.q[i][1]]);
        }
        let obj = sol.objective;
        let prev = trace.last().copied();
        trace.push(obj);
        if let Some(prev) = prev {
            if (prev - obj) / prev.abs().max(f64::MIN_POSITIVE) < st.epsilon_sca {
                break;
            }
        }
    }
    let mut plan = fixed_hover_plan(s, &tour.order, &hover)?;
    plan.tour = tour;
    plan.trace = trace;
    Ok(plan)
}

fn legs_to(out: &mut (Vec<Point2>, Vec<f64>, Vec<Vec<f64>>), to: Point2, speed: f64, delta_max: f64, k: usize) {
    let from = *out.0.last().unwrap();
    let len = from.distance(to);
    if len == 0.0 {
        return;
    }
    let mut n = (len / delta_max).ceil().max(1.0) as usize;
    if len / n as f64 > delta_max {
        n += 1;
    }
    for j in 1..=n {
        let p = if j == n { to } else { from.lerp(to, j as f64 / n as f64) };
        let seg = out.0.last().unwrap().distance(p);
        out.0.push(p);
        out.1.push(seg / speed);
        out.2.push(vec![0.0; k]);
    }
}

/// Samples the plan's flight legs every `delta_max` meters at the travel
/// speed; each hover becomes one zero-length segment whose whole duration is
/// allocated to its node.
pub fn fhc_to_trajectory(plan: &FhcPlan, s: &Scenario, delta_max: f64) -> Result<DiscretizedTrajectory> {
    if !(delta_max > 0.0) {
        return Err(Error::invalid("delta_max", "positive"));
    }
    let k = s.nodes.len();
    let speed = plan.travel.speed;
    let mut out = (vec![s.start], Vec::new(), Vec::new());
    for &i in &plan.tour.order {
        legs_to(&mut out, plan.hover_points[i], speed, delta_max, k);
        let mut tau = vec![0.0; k];
        tau[i] = plan.hover_times[i];
        out.0.push(plan.hover_points[i]);
        out.1.push(plan.hover_times[i]);
        out.2.push(tau);
    }
    if let Some(e) = end_point(s) {
        legs_to(&mut out, e, speed, delta_max, k);
    }
    DiscretizedTrajectory::new(out.0, out.1, out.2)
}
