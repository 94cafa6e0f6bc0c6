//! Result files. Every number is written with 12 significant digits and
//! every CSV header carries its unit in brackets.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use uav_energy_core::eval::{EvaluationReport, SweepRow, TrajectoryViolation};
use uav_energy_core::joint::TraceEntry;
use uav_energy_core::rotor::PowerBreakdown;
use uav_energy_core::{DiscretizedTrajectory, Point2};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` with 12 significant digits, fixed notation for moderate magnitudes and
/// scientific otherwise. Trailing zeros are dropped.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// `x` rounded to what [`fmt_num`] prints.
pub fn round_num(x: f64) -> f64 {
    if x.is_finite() {
        fmt_num(x).parse().expect("formatted numbers parse")
    } else {
        x
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

pub fn trajectory_header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t_start [s]", "x [m]", "y [m]", "T [s]"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=k).map(|j| format!("tau_{j} [s]")));
    h
}

/// One row per segment plus a final row holding the last waypoint with zero
/// duration and allocation.
pub fn write_trajectory_to<W: Write>(w: W, traj: &DiscretizedTrajectory) -> Result<()> {
    let k = traj.num_nodes();
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(trajectory_header(k))?;
    let mut starts = traj.start_times();
    starts.push(traj.mission_time());
    for (m, q) in traj.waypoints.iter().enumerate() {
        let mut row = vec![fmt_num(starts[m]), fmt_num(q.x), fmt_num(q.y)];
        if m < traj.num_segments() {
            row.push(fmt_num(traj.durations[m]));
            row.extend(traj.alloc[m].iter().map(|&t| fmt_num(t)));
        } else {
            row.extend(std::iter::repeat_n("0".to_string(), k + 1));
        }
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, traj: &DiscretizedTrajectory) -> Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_trajectory_to(std::io::BufWriter::new(f), traj)
}

pub fn read_trajectory_from<R: Read>(r: R) -> Result<DiscretizedTrajectory> {
    let mut rd = csv::Reader::from_reader(r);
    let cols = rd.headers()?.len();
    if cols < 5 {
        bail!("trajectory needs t_start, x, y, T and at least one tau column");
    }
    let k = cols - 4;
    let mut waypoints = Vec::new();
    let mut durations = Vec::new();
    let mut alloc = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("row {} holds a non-numeric field", i + 2))?;
        waypoints.push(Point2::new(v[1], v[2]));
        durations.push(v[3]);
        alloc.push(v[4..4 + k].to_vec());
    }
    durations.pop();
    alloc.pop();
    Ok(DiscretizedTrajectory::new(waypoints, durations, alloc)?)
}

pub fn read_trajectory(path: &Path) -> Result<DiscretizedTrajectory> {
    let f = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_trajectory_from(f)
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub total_energy_j: f64,
    pub propulsion_energy_j: f64,
    pub communication_energy_j: f64,
    pub mission_time_s: f64,
    pub delivered_bits: Vec<f64>,
    pub violations: Vec<TrajectoryViolation>,
}

impl From<&EvaluationReport> for Summary {
    fn from(r: &EvaluationReport) -> Self {
        Summary {
            total_energy_j: round_num(r.total_energy),
            propulsion_energy_j: round_num(r.propulsion_energy),
            communication_energy_j: round_num(r.communication_energy),
            mission_time_s: round_num(r.mission_time),
            delivered_bits: r.delivered_bits.iter().map(|&b| round_num(b)).collect(),
            violations: r
                .violations
                .iter()
                .map(|v| TrajectoryViolation {
                    magnitude: round_num(v.magnitude),
                    ..v.clone()
                })
                .collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_trace(path: &Path, trace: &[TraceEntry], unit: &str) -> Result<()> {
    let mut wr = csv_writer(path)?;
    wr.write_record([
        "iteration",
        &format!("subproblem_objective [{unit}]"),
        &format!("exact_objective [{unit}]"),
    ])?;
    for e in trace {
        wr.write_record([e.iteration.to_string(), fmt_num(e.subproblem_objective), fmt_num(e.exact_objective)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Trace of a planner whose iterations only have one objective value.
pub fn write_plain_trace(path: &Path, trace: &[f64], unit: &str) -> Result<()> {
    let mut wr = csv_writer(path)?;
    wr.write_record(["iteration", &format!("objective [{unit}]")])?;
    for (i, v) in trace.iter().enumerate() {
        wr.write_record([(i + 1).to_string(), fmt_num(*v)])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_power_curve(path: &Path, rows: &[(f64, PowerBreakdown)]) -> Result<()> {
    let mut wr = csv_writer(path)?;
    wr.write_record(["V [m/s]", "P_total [W]", "P_blade [W]", "P_induced [W]", "P_parasite [W]"])?;
    for (v, b) in rows {
        wr.write_record([
            fmt_num(*v),
            fmt_num(b.total()),
            fmt_num(b.blade_profile),
            fmt_num(b.induced),
            fmt_num(b.parasite),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut wr = csv_writer(path)?;
    wr.write_record(["Q [bit]", "scheme", "energy [J]", "time [s]", "feasible", "status"])?;
    for r in rows {
        wr.write_record([
            fmt_num(r.demand_bits),
            r.scheme.name().to_string(),
            opt_num(r.energy),
            opt_num(r.time),
            r.feasible.to_string(),
            r.error.clone().unwrap_or_else(|| "ok".into()),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
