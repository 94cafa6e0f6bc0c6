//! Independent evaluation of plans: energy and throughput recomputed from the
//! raw model expressions, feasibility checks, benchmark schemes and sweeps.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fhc::{self, FhcPlan};
use crate::geometry::Point2;
use crate::joint::{self, ObjectiveKind};
use crate::rotor::RotorParams;
use crate::scenario::{Scenario, SolverSettings};
use crate::trajectory::DiscretizedTrajectory;
use crate::tsp;

/// Relative slack allowed on every checked constraint.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ViolationKind {
    StartPin,
    EndPin,
    SpeedCap,
    SegmentCap,
    AllocationCap,
    NegativeDuration,
    NegativeAllocation,
    Throughput,
    Shape,
}

/// One violated constraint. `index` is the segment (or node, for
/// throughput) and `magnitude` the absolute excess in the constraint's unit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryViolation {
    pub kind: ViolationKind,
    pub index: Option<usize>,
    pub magnitude: f64,
}

impl core::fmt::Display for TrajectoryViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.index {
            Some(i) => write!(f, "{:?} at {i}: exceeds by {:e}", self.kind, self.magnitude),
            None => write!(f, "{:?}: exceeds by {:e}", self.kind, self.magnitude),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyBreakdown {
    pub propulsion: f64,
    pub communication: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationReport {
    pub propulsion_energy: f64,
    pub communication_energy: f64,
    pub total_energy: f64,
    pub mission_time: f64,
    pub delivered_bits: Vec<f64>,
    pub violations: Vec<TrajectoryViolation>,
}

impl EvaluationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Propulsion energy of flying `length` meters in `duration` seconds.
fn segment_propulsion(rotor: &RotorParams, length: f64, duration: f64) -> f64 {
    let d = &rotor.derived;
    if length == 0.0 {
        return duration * (d.blade_profile_power + d.induced_power);
    }
    let u2 = d.tip_speed * d.tip_speed;
    let v0sq = d.hover_induced_velocity * d.hover_induced_velocity;
    let parasite = 0.5 * d.fuselage_drag_ratio * rotor.raw.rho * d.solidity * d.disc_area;
    let t2 = duration * duration;
    let half = length * length / (2.0 * v0sq);
    // T·sqrt(sqrt(1 + Δ⁴/(4v0⁴T⁴)) − Δ²/(2v0²T²)), rearranged to avoid cancellation
    let induced = t2 / ((t2 * t2 + half * half).sqrt() + half).sqrt();
    d.blade_profile_power * (duration + 3.0 * length * length / (u2 * duration))
        + d.induced_power * induced
        + parasite * length * length * length / t2
}

/// Energy of a trajectory, summed segment by segment.
pub fn exact_energy(traj: &DiscretizedTrajectory, rotor: &RotorParams, comm_power: f64) -> Result<EnergyBreakdown> {
    let mut propulsion = 0.0;
    let mut communication = 0.0;
    for m in 0..traj.num_segments() {
        let t = traj.durations[m];
        let len = traj.segment_length(m);
        if !(t > 0.0) && !(t == 0.0 && len == 0.0) {
            return Err(Error::invalid(format!("duration of segment {m}"), "positive"));
        }
        if t > 0.0 {
            propulsion += segment_propulsion(rotor, len, t);
        }
        communication += comm_power * traj.alloc[m].iter().sum::<f64>();
    }
    Ok(EnergyBreakdown {
        propulsion,
        communication,
        total: propulsion + communication,
    })
}

/// Bits delivered to every node.
pub fn per_gn_throughput(traj: &DiscretizedTrajectory, s: &Scenario) -> Result<Vec<f64>> {
    s.channel
        .throughput_per_node(&traj.waypoints[..traj.num_segments()], &traj.alloc, &s.nodes)
}

fn excess(value: f64, cap: f64) -> Option<f64> {
    let over = value - cap;
    (over > FEASIBILITY_TOL * (1.0 + cap.abs())).then_some(over)
}

pub fn check_feasibility(traj: &DiscretizedTrajectory, s: &Scenario, st: &SolverSettings) -> Vec<TrajectoryViolation> {
    let mut out = Vec::new();
    let mut push = |kind, index, magnitude| out.push(TrajectoryViolation { kind, index, magnitude });
    if traj.num_nodes() != s.nodes.len() {
        push(ViolationKind::Shape, None, (traj.num_nodes() as f64 - s.nodes.len() as f64).abs());
        return out;
    }
    let n = traj.num_segments();
    if let Some(e) = excess(traj.waypoints[0].distance(s.start), 0.0) {
        push(ViolationKind::StartPin, Some(0), e);
    }
    if s.endpoints_enabled {
        if let Some(e) = excess(traj.waypoints[n].distance(s.end), 0.0) {
            push(ViolationKind::EndPin, Some(n), e);
        }
    }
    for m in 0..n {
        let t = traj.durations[m];
        let len = traj.segment_length(m);
        if t < 0.0 {
            push(ViolationKind::NegativeDuration, Some(m), -t);
        }
        if let Some(e) = excess(len, s.v_max * t.max(0.0)) {
            push(ViolationKind::SpeedCap, Some(m), e);
        }
        if let Some(e) = excess(len, st.delta_max) {
            push(ViolationKind::SegmentCap, Some(m), e);
        }
        let lowest = traj.alloc[m].iter().copied().fold(f64::INFINITY, f64::min);
        if lowest < 0.0 {
            push(ViolationKind::NegativeAllocation, Some(m), -lowest);
        }
        if let Some(e) = excess(traj.alloc[m].iter().sum(), t) {
            push(ViolationKind::AllocationCap, Some(m), e);
        }
    }
    if let Ok(bits) = per_gn_throughput(traj, s) {
        for (k, (b, node)) in bits.iter().zip(&s.nodes).enumerate() {
            let short = node.demand_bits - b;
            if short > FEASIBILITY_TOL * node.demand_bits {
                push(ViolationKind::Throughput, Some(k), short);
            }
        }
    }
    out
}

pub fn evaluate(traj: &DiscretizedTrajectory, s: &Scenario, st: &SolverSettings) -> Result<EvaluationReport> {
    let e = exact_energy(traj, &s.rotor, s.comm_power)?;
    Ok(EvaluationReport {
        propulsion_energy: e.propulsion,
        communication_energy: e.communication,
        total_energy: e.total,
        mission_time: traj.mission_time(),
        delivered_bits: per_gn_throughput(traj, s)?,
        violations: check_feasibility(traj, s, st),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Scheme {
    GeometricCenter,
    AboveNodes,
    OptimizedFhc,
    JointEnergy,
    JointTime,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::GeometricCenter,
        Scheme::AboveNodes,
        Scheme::OptimizedFhc,
        Scheme::JointEnergy,
        Scheme::JointTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::GeometricCenter => "geometric-center",
            Scheme::AboveNodes => "above-nodes",
            Scheme::OptimizedFhc => "optimized-fhc",
            Scheme::JointEnergy => "joint-energy",
            Scheme::JointTime => "joint-time",
        }
    }
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hover at the mean node position and serve every node from there.
pub fn geometric_center_plan(s: &Scenario) -> Result<FhcPlan> {
    let c = s.geometric_center();
    let order: Vec<usize> = (0..s.nodes.len()).collect();
    fhc::fixed_hover_plan(s, &order, &vec![c; s.nodes.len()])
}

/// Hover directly above each node, visited in tour order.
pub fn above_nodes_plan(s: &Scenario, st: &SolverSettings) -> Result<FhcPlan> {
    let pts = s.node_positions();
    let tour = tsp::solve_open_tour_with(&pts, s.start, s.final_point(), st.rng_seed, st.tsp_restarts)?;
    fhc::fixed_hover_plan(s, &tour.order, &pts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub result: core::result::Result<(DiscretizedTrajectory, EvaluationReport), String>,
}

impl SchemeOutcome {
    pub fn energy(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|(_, r)| r.total_energy)
    }

    pub fn time(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|(_, r)| r.mission_time)
    }
}

pub fn trajectory_for(scheme: Scheme, s: &Scenario, st: &SolverSettings) -> Result<DiscretizedTrajectory> {
    match scheme {
        Scheme::GeometricCenter => fhc::fhc_to_trajectory(&geometric_center_plan(s)?, s, st.delta_max),
        Scheme::AboveNodes => fhc::fhc_to_trajectory(&above_nodes_plan(s, st)?, s, st.delta_max),
        Scheme::OptimizedFhc => fhc::fhc_to_trajectory(&fhc::solve_multi_gn(s, st)?, s, st.delta_max),
        Scheme::JointEnergy => joint::optimize(s, st, ObjectiveKind::Energy).map(|r| r.trajectory),
        Scheme::JointTime => joint::optimize(s, st, ObjectiveKind::Time).map(|r| r.trajectory),
    }
}

pub fn run_scheme(scheme: Scheme, s: &Scenario, st: &SolverSettings) -> SchemeOutcome {
    let result = trajectory_for(scheme, s, st)
        .and_then(|t| evaluate(&t, s, st).map(|r| (t, r)))
        .map_err(|e| e.to_string());
    SchemeOutcome { scheme, result }
}

/// All five schemes on one scenario.
pub fn run_benchmarks(s: &Scenario, st: &SolverSettings) -> Vec<SchemeOutcome> {
    Scheme::ALL.iter().map(|&k| run_scheme(k, s, st)).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub demand_bits: f64,
    pub scheme: Scheme,
    pub energy: Option<f64>,
    pub time: Option<f64>,
    pub feasible: bool,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn from_outcome(demand_bits: f64, o: &SchemeOutcome) -> Self {
        match &o.result {
            Ok((_, r)) => SweepRow {
                demand_bits,
                scheme: o.scheme,
                energy: Some(r.total_energy),
                time: Some(r.mission_time),
                feasible: r.is_feasible(),
                error: None,
            },
            Err(e) => SweepRow {
                demand_bits,
                scheme: o.scheme,
                energy: None,
                time: None,
                feasible: false,
                error: Some(e.clone()),
            },
        }
    }
}

/// Sequential sweep over uniform demands.
pub fn sweep(s: &Scenario, demands: &[f64], st: &SolverSettings) -> Result<Vec<SweepRow>> {
    if demands.is_empty() || demands.iter().any(|&q| !(q > 0.0)) {
        return Err(Error::invalid("sweep demands", "a nonempty list of positive values"));
    }
    let mut rows = Vec::new();
    for &q in demands {
        let sq = s.with_uniform_demand(q);
        rows.extend(run_benchmarks(&sq, st).iter().map(|o| SweepRow::from_outcome(q, o)));
    }
    Ok(rows)
}

/// Minimum flight speed over segments starting within `radius` of `p`.
pub fn min_speed_near(traj: &DiscretizedTrajectory, p: Point2, radius: f64) -> Option<f64> {
    (0..traj.num_segments())
        .filter(|&m| traj.waypoints[m].distance(p) <= radius)
        .map(|m| traj.speed(m))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
}
