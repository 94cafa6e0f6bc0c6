//! Joint trajectory and communication-time planning on a discretized path,
//! solved by successive convex approximation.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result, SubproblemFailure};
use crate::fhc::{self, FhcPlan};
use crate::geometry::Point2;
use crate::kernel::{self, Affine, Atom, ConvexProgram, KernelSettings, KernelSolution, Status};
use crate::scenario::{Scenario, SolverSettings};
use crate::trajectory::DiscretizedTrajectory;

pub const MIN_DURATION: f64 = 1e-3;
pub const MIN_Y: f64 = 1e-3;
pub const MIN_ALLOC: f64 = 1e-6;
const PATH_MARGIN: f64 = 1.2;
const BISECTION_RES: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ObjectiveKind {
    Energy,
    Time,
}

/// Auxiliary variables of the convex reformulation evaluated on a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackState {
    /// `y_m² = √(T_m⁴ + Δ_m⁴/(4v0⁴)) − Δ_m²/(2v0²)`.
    pub y: Vec<f64>,
    /// `A_mk = √(τ_mk · r_mk)`.
    pub a: Vec<Vec<f64>>,
}

pub fn compute_slacks(traj: &DiscretizedTrajectory, s: &Scenario) -> SlackState {
    let v0 = s.rotor.derived.hover_induced_velocity;
    let y = (0..traj.num_segments())
        .map(|m| {
            let t = traj.durations[m];
            let d2 = traj.waypoints[m].distance(traj.waypoints[m + 1]).powi(2);
            let half = d2 / (2.0 * v0 * v0);
            let t4 = t * t * t * t;
            (t4 / ((t4 + half * half).sqrt() + half)).sqrt()
        })
        .collect();
    let a = traj
        .alloc
        .iter()
        .enumerate()
        .map(|(m, row)| {
            row.iter()
                .zip(&s.nodes)
                .map(|(&tau, n)| (tau.max(0.0) * s.channel.spectral_rate(traj.waypoints[m], n)).sqrt())
                .collect()
        })
        .collect();
    SlackState { y, a }
}

/// Energy (J) or mission time (s) of a trajectory from the exact power model.
pub fn exact_objective(traj: &DiscretizedTrajectory, s: &Scenario, kind: ObjectiveKind) -> Result<f64> {
    match kind {
        ObjectiveKind::Time => Ok(traj.mission_time()),
        ObjectiveKind::Energy => {
            let mut e = 0.0;
            for m in 0..traj.num_segments() {
                let t = traj.durations[m];
                e += t * s.rotor.power(traj.segment_length(m) / t)?;
                e += s.comm_power * traj.alloc[m].iter().sum::<f64>();
            }
            Ok(e)
        }
    }
}

fn path_points(plan: &FhcPlan, s: &Scenario) -> Vec<Point2> {
    let mut pts = vec![s.start];
    for &i in &plan.tour.order {
        pts.push(plan.hover_points[i]);
    }
    if s.endpoints_enabled {
        pts.push(s.end);
    }
    pts
}

/// Resamples the polyline into `ceil(1.2·L/Δ_max)+1` segments, distributed
/// over its legs in proportion to their lengths (corners are kept).
fn resample(pts: &[Point2], delta_max: f64) -> Vec<Point2> {
    let legs: Vec<(Point2, Point2, f64)> = pts
        .windows(2)
        .map(|w| (w[0], w[1], w[0].distance(w[1])))
        .filter(|l| l.2 > 0.0)
        .collect();
    let total: f64 = legs.iter().map(|l| l.2).sum();
    let m = (PATH_MARGIN * total / delta_max).ceil().max(1.0) as usize;
    if legs.is_empty() {
        return vec![pts[0]; m + 2];
    }
    let n_seg = (m + 1).max(legs.len());
    let shares: Vec<f64> = legs.iter().map(|l| l.2 / total * n_seg as f64).collect();
    let mut counts: Vec<usize> = shares.iter().map(|x| (x.floor() as usize).max(1)).collect();
    while counts.iter().sum::<usize>() < n_seg {
        let j = (0..legs.len())
            .max_by(|&a, &b| {
                (shares[a] - counts[a] as f64)
                    .total_cmp(&(shares[b] - counts[b] as f64))
                    .then(b.cmp(&a))
            })
            .unwrap();
        counts[j] += 1;
    }
    while counts.iter().sum::<usize>() > n_seg {
        let j = (0..legs.len())
            .filter(|&j| counts[j] > 1)
            .min_by(|&a, &b| (shares[a] - counts[a] as f64).total_cmp(&(shares[b] - counts[b] as f64)))
            .unwrap();
        counts[j] -= 1;
    }
    for (l, c) in legs.iter().zip(counts.iter_mut()) {
        while l.2 / *c as f64 > delta_max {
            *c += 1;
        }
    }
    let mut out = vec![legs[0].0];
    for (l, &c) in legs.iter().zip(&counts) {
        for j in 1..=c {
            out.push(if j == c { l.1 } else { l.0.lerp(l.1, j as f64 / c as f64) });
        }
    }
    out
}

/// Path of an existing plan with a uniform segment duration `T̄` and an equal
/// time split `T̄/K`, where `T̄` is the smallest duration (bisection to 1 ms)
/// meeting every demand and the speed limit.
pub fn init_from_plan(s: &Scenario, st: &SolverSettings, plan: &FhcPlan) -> Result<DiscretizedTrajectory> {
    let waypoints = resample(&path_points(plan, s), st.delta_max);
    let n = waypoints.len() - 1;
    let k = s.nodes.len();
    let max_len = waypoints.windows(2).map(|w| w[0].distance(w[1])).fold(0.0, f64::max);
    let sums: Vec<f64> = s
        .nodes
        .iter()
        .map(|node| waypoints[..n].iter().map(|&q| s.channel.spectral_rate(q, node)).sum())
        .collect();
    let feasible = |t: f64| {
        s.nodes
            .iter()
            .zip(&sums)
            .all(|(node, sum)| s.channel.bandwidth * (t / k as f64) * sum >= node.demand_bits)
    };
    let mut lo = (max_len / s.v_max).max(MIN_DURATION);
    let mut hi = lo;
    let mut doublings = 0;
    while !feasible(hi) {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(Error::Bracket("no uniform segment duration meets the demands".into()));
        }
    }
    while hi - lo > BISECTION_RES {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    DiscretizedTrajectory::new(waypoints, vec![hi; n], vec![vec![hi / k as f64; k]; n])
}

pub fn init_from_fhc(s: &Scenario, st: &SolverSettings) -> Result<DiscretizedTrajectory> {
    let plan = fhc::solve_multi_gn(s, st)?;
    init_from_plan(s, st, &plan)
}

/// Variable indices of a subproblem. Fixed waypoints have no variables.
#[derive(Debug, Clone)]
pub struct Layout {
    pub q: Vec<Option<[usize; 2]>>,
    pub t: Vec<usize>,
    pub y: Vec<Option<usize>>,
    pub tau: Vec<Vec<usize>>,
    pub a: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Subproblem {
    pub program: ConvexProgram,
    pub layout: Layout,
    fixed: Vec<Option<Point2>>,
}

fn coords(layout: &Layout, fixed: &[Option<Point2>], m: usize) -> [Affine; 2] {
    match (layout.q[m], fixed[m]) {
        (Some(v), _) => [Affine::var(v[0]), Affine::var(v[1])],
        (None, Some(p)) => [Affine::constant(p.x), Affine::constant(p.y)],
        (None, None) => unreachable!(),
    }
}

fn sub(a: &[Affine; 2], b: &[Affine; 2]) -> Vec<Affine> {
    vec![
        a[0].clone().add(&b[0].clone().scaled(-1.0)),
        a[1].clone().add(&b[1].clone().scaled(-1.0)),
    ]
}

/// Convex restriction of the discretized problem around `traj`.
pub fn build_subproblem(
    s: &Scenario,
    st: &SolverSettings,
    traj: &DiscretizedTrajectory,
    slacks: &SlackState,
    kind: ObjectiveKind,
) -> Result<Subproblem> {
    let n = traj.num_segments();
    let k = s.nodes.len();
    if traj.num_nodes() != k || slacks.y.len() != n || slacks.a.len() != n || slacks.a.iter().any(|r| r.len() != k) {
        return Err(Error::Dimension("trajectory, slacks and scenario disagree".into()));
    }
    let mut prog = ConvexProgram::new();
    let mut fixed = vec![None; n + 1];
    fixed[0] = Some(s.start);
    if s.endpoints_enabled {
        fixed[n] = Some(s.end);
    }
    let energy = kind == ObjectiveKind::Energy;
    let mut layout = Layout {
        q: vec![None; n + 1],
        t: Vec::with_capacity(n),
        y: vec![None; n],
        tau: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
    };
    for m in 0..n {
        if fixed[m].is_none() {
            layout.q[m] = Some(prog.vec2(format!("q{m}"), None));
        }
        layout.t.push(prog.scalar(format!("T{m}"), Some(MIN_DURATION)));
        if energy {
            layout.y[m] = Some(prog.scalar(format!("y{m}"), Some(MIN_Y)));
        }
        layout
            .tau
            .push((0..k).map(|j| prog.scalar(format!("tau{m}_{}", j + 1), Some(MIN_ALLOC))).collect());
        layout
            .a
            .push((0..k).map(|j| prog.scalar(format!("A{m}_{}", j + 1), None)).collect());
    }
    if fixed[n].is_none() {
        layout.q[n] = Some(prog.vec2(format!("q{n}"), None));
    }

    let d = &s.rotor.derived;
    let p0 = d.blade_profile_power;
    let utip2 = d.tip_speed * d.tip_speed;
    let parasite = 0.5 * d.fuselage_drag_ratio * s.rotor.raw.rho * d.solidity * d.disc_area;
    let v0sq = d.hover_induced_velocity * d.hover_induced_velocity;
    let h2 = s.channel.altitude * s.channel.altitude;
    let g0 = s.channel.gamma0;

    for m in 0..n {
        let t = layout.t[m];
        let delta = sub(&coords(&layout, &fixed, m + 1), &coords(&layout, &fixed, m));
        if energy {
            let y = layout.y[m].unwrap();
            let mut lin = Affine::default().term(t, p0).term(y, d.induced_power);
            for &tau in &layout.tau[m] {
                lin = lin.term(tau, s.comm_power);
            }
            prog.minimize(Atom::Linear(lin));
            prog.minimize(Atom::QuadOverLin {
                scale: 3.0 * p0 / utip2,
                num: delta.clone(),
                den: Affine::var(t),
            });
            prog.minimize(Atom::CubicOverQuad {
                scale: parasite,
                num: delta.clone(),
                den: Affine::var(t),
            });
            // T⁴/y² ≤ y_l² + 2y_l(y − y_l) − ‖Δ_l‖²/v0² + (2/v0²)Δ_lᵀΔ
            let yl = slacks.y[m];
            let dl = traj.waypoints[m + 1] - traj.waypoints[m];
            let rhs = Affine::constant(-yl * yl - dl.norm_squared() / v0sq)
                .term(y, 2.0 * yl)
                .add(&delta[0].clone().scaled(2.0 * dl.x / v0sq))
                .add(&delta[1].clone().scaled(2.0 * dl.y / v0sq));
            prog.le(
                format!("induced{m}"),
                vec![Atom::FourthOverSquare {
                    scale: 1.0,
                    num: Affine::var(t),
                    den: Affine::var(y),
                }],
                rhs,
            );
        } else {
            prog.minimize(Atom::Linear(Affine::var(t)));
        }
        prog.le(
            format!("length{m}"),
            vec![Atom::SquaredNorm {
                scale: 1.0 / (st.delta_max * st.delta_max),
                arg: delta.clone(),
            }],
            Affine::constant(1.0),
        );
        prog.le(
            format!("speed{m}"),
            vec![Atom::QuadOverLin {
                scale: 1.0 / (s.v_max * s.v_max),
                num: delta,
                den: Affine::var(t),
            }],
            Affine::var(t),
        );
        let mut share = Affine::default();
        for &tau in &layout.tau[m] {
            share = share.term(tau, 1.0);
        }
        prog.affine_le(format!("share{m}"), share, &Affine::var(t));
        let here = coords(&layout, &fixed, m);
        for (j, node) in s.nodes.iter().enumerate() {
            let rate_atom = Atom::QuadOverLin {
                scale: 1.0,
                num: vec![Affine::var(layout.a[m][j])],
                den: Affine::var(layout.tau[m][j]),
            };
            match fixed[m] {
                Some(p) => prog.le(
                    format!("rate{m}_{}", j + 1),
                    vec![rate_atom],
                    Affine::constant(s.channel.spectral_rate(p, node)),
                ),
                None => {
                    let ul = (traj.waypoints[m] - node.position).norm_squared();
                    let beta = core::f64::consts::LOG2_E * g0 / ((h2 + ul) * (h2 + ul + g0));
                    let rl = s.channel.rate_at_squared_distance(ul);
                    let w = [Affine::constant(node.position.x), Affine::constant(node.position.y)];
                    prog.le(
                        format!("rate{m}_{}", j + 1),
                        vec![
                            rate_atom,
                            Atom::SquaredNorm {
                                scale: beta,
                                arg: sub(&here, &w),
                            },
                        ],
                        Affine::constant(rl + beta * ul),
                    );
                }
            }
        }
    }
    for (j, node) in s.nodes.iter().enumerate() {
        let q = node.normalized_demand(&s.channel);
        if q <= 0.0 {
            continue;
        }
        // Σ_m (2A_l A − A_l²) ≥ Q
        let mut e = Affine::constant(q);
        for m in 0..n {
            let al = slacks.a[m][j];
            e = e.plus(al * al).term(layout.a[m][j], -2.0 * al);
        }
        prog.constrain(format!("throughput{}", j + 1), vec![Atom::Linear(e)]);
    }
    Ok(Subproblem {
        program: prog,
        layout,
        fixed,
    })
}

impl Subproblem {
    /// Point near the linearization point, strictly inside every constraint
    /// that the linearization point satisfies with equality.
    pub fn start_point(&self, s: &Scenario, traj: &DiscretizedTrajectory, slacks: &SlackState) -> Vec<f64> {
        const DELTA: f64 = 1e-3;
        let l = &self.layout;
        let v0 = s.rotor.derived.hover_induced_velocity;
        let mut x = vec![0.0; self.program.num_vars()];
        for (m, q) in l.q.iter().enumerate() {
            if let Some(v) = q {
                x[v[0]] = traj.waypoints[m].x;
                x[v[1]] = traj.waypoints[m].y;
            }
        }
        for m in 0..l.t.len() {
            let t = traj.durations[m].max(MIN_DURATION) * (1.0 + 3.0 * DELTA);
            x[l.t[m]] = t;
            if let Some(yi) = l.y[m] {
                let yl = slacks.y[m].max(MIN_Y);
                let d2 = traj.waypoints[m].distance(traj.waypoints[m + 1]).powi(2) / (v0 * v0);
                let t4 = t * t * t * t;
                let mut y = yl * (1.0 + DELTA);
                for _ in 0..10_000 {
                    if t4 / (y * y) - 2.0 * yl * y + yl * yl - d2 < -DELTA * t4 / (y * y) {
                        break;
                    }
                    y *= 1.01;
                }
                x[yi] = y;
            }
            for j in 0..l.tau[m].len() {
                x[l.tau[m][j]] = traj.alloc[m][j].max(0.0) * (1.0 + 2.0 * DELTA) + MIN_ALLOC;
                x[l.a[m][j]] = slacks.a[m][j] * (1.0 + 0.5 * DELTA);
            }
        }
        x
    }

    pub fn extract(&self, sol: &KernelSolution) -> Result<DiscretizedTrajectory> {
        let l = &self.layout;
        let waypoints =
            l.q.iter()
                .zip(&self.fixed)
                .map(|(q, f)| match (q, f) {
                    (Some(v), _) => Point2::new(sol.x[v[0]], sol.x[v[1]]),
                    (None, Some(p)) => *p,
                    (None, None) => unreachable!(),
                })
                .collect();
        let durations = l.t.iter().map(|&i| sol.x[i]).collect();
        let alloc = l.tau.iter().map(|row| row.iter().map(|&i| sol.x[i]).collect()).collect();
        DiscretizedTrajectory::new(waypoints, durations, alloc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceEntry {
    pub iteration: usize,
    pub subproblem_objective: f64,
    pub exact_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointResult {
    pub trajectory: DiscretizedTrajectory,
    pub kind: ObjectiveKind,
    pub initial_objective: f64,
    pub trace: Vec<TraceEntry>,
}

/// Successive convex approximation from `init`.
pub fn optimize_from(s: &Scenario, st: &SolverSettings, kind: ObjectiveKind, init: DiscretizedTrajectory) -> Result<JointResult> {
    let ks = KernelSettings::from(st);
    let initial_objective = exact_objective(&init, s, kind)?;
    let mut traj = init;
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut prev = initial_objective;
    for iteration in 1..=st.max_sca_iters.max(1) {
        let slacks = compute_slacks(&traj, s);
        let sp = build_subproblem(s, st, &traj, &slacks, kind)?;
        let x0 = sp.start_point(s, &traj, &slacks);
        let sol = kernel::solve(&sp.program, &x0, &ks)?;
        if sol.status != Status::Optimal {
            return Err(Error::Subproblem(Box::new(SubproblemFailure {
                iteration,
                status: sol.status,
                trace: trace.iter().map(|e| e.subproblem_objective).collect(),
                last_trajectory: Some(traj),
                program_dump: sp.program.to_string(),
            })));
        }
        traj = sp.extract(&sol)?;
        let exact = exact_objective(&traj, s, kind)?;
        trace.push(TraceEntry {
            iteration,
            subproblem_objective: sol.objective,
            exact_objective: exact,
        });
        let decrease = (prev - sol.objective) / prev.abs().max(f64::MIN_POSITIVE);
        prev = sol.objective;
        if decrease < st.epsilon_sca {
            break;
        }
    }
    Ok(JointResult {
        trajectory: traj,
        kind,
        initial_objective,
        trace,
    })
}

/// Fly-hover-communicate plan, uniform-duration initialization, then
/// successive convex approximation.
pub fn optimize(s: &Scenario, st: &SolverSettings, kind: ObjectiveKind) -> Result<JointResult> {
    let init = init_from_fhc(s, st)?;
    optimize_from(s, st, kind, init)
}
