//! Command-line front end.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use uav_energy_core::eval::{self, EvaluationReport, SchemeOutcome};
use uav_energy_core::fhc::{self, FhcPlan};
use uav_energy_core::joint::{self, ObjectiveKind};
use uav_energy_core::{tsp, DiscretizedTrajectory, Error, Scenario, SolverSettings};

use crate::config;
use crate::output::{self, fmt_num, round_num, Summary};
use crate::sweep;

/// Exit status when an evaluated or planned trajectory violates a constraint.
pub const EXIT_VIOLATIONS: i32 = 2;
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "uav-energy",
    version,
    about = "Energy-aware UAV trajectory planning for ground-node data collection"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory, created when missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for the visiting-order heuristic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Dotted-key override applied after loading, e.g. chan.gamma0_db=60.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Fractional-decrease threshold of the SCA loops.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Maximum path segment length (m).
    #[arg(long = "delta-max", global = true)]
    pub delta_max: Option<f64>,
    #[arg(long, value_enum, global = true, default_value_t = Objective::Energy)]
    pub objective: Objective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Energy,
    Time,
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Energy => ObjectiveKind::Energy,
            Objective::Time => ObjectiveKind::Time,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Propulsion power and its three components versus speed.
    PowerCurve {
        /// Speed step (m/s).
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// Largest speed (m/s); defaults to V_max.
        #[arg(long)]
        upto: Option<f64>,
    },
    /// Maximum-endurance and maximum-range speeds.
    Speeds,
    /// Visiting order of the ground nodes.
    Route,
    /// Fly-hover-communicate plan.
    PlanFhc,
    /// Joint trajectory and communication design; see --objective.
    PlanJoint,
    /// Joint design minimizing mission time.
    PlanTimeMin,
    /// Energy, throughput and feasibility of a trajectory file.
    Evaluate {
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// All schemes over a list of uniform per-node demands.
    Sweep {
        /// Comma-separated demands (bits).
        #[arg(long, value_delimiter = ',', default_value = "1e6,1e7,5e7,1e8,2e8,4e8")]
        demands: Vec<f64>,
    },
    /// All schemes on the scenario as given.
    Compare,
}

pub fn load(common: &Common) -> Result<(Scenario, SolverSettings)> {
    let mut overrides = common
        .set
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = common.seed {
        overrides.push(("solver.rng_seed".into(), toml::Value::Integer(seed as i64)));
    }
    if let Some(e) = common.epsilon {
        overrides.push(("solver.epsilon_sca".into(), toml::Value::Float(e)));
    }
    if let Some(d) = common.delta_max {
        overrides.push(("solver.delta_max".into(), toml::Value::Float(d)));
    }
    let loaded = match &common.scenario {
        Some(p) => config::load_scenario(p, &overrides)?,
        None => config::load_str("", &overrides)?,
    };
    Ok(loaded)
}

struct Ctx {
    s: Scenario,
    st: SolverSettings,
    out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let (s, st) = load(&cli.common)?;
    std::fs::create_dir_all(&cli.common.out).with_context(|| format!("cannot create {}", cli.common.out.display()))?;
    let ctx = Ctx {
        s,
        st,
        out: cli.common.out.clone(),
    };
    config::save_scenario(&ctx.path("scenario.toml"), &ctx.s, &ctx.st)?;
    match cli.command {
        Command::PowerCurve { step, upto } => power_curve(&ctx, step, upto),
        Command::Speeds => speeds(&ctx),
        Command::Route => route(&ctx),
        Command::PlanFhc => plan_fhc(&ctx),
        Command::PlanJoint => plan_joint(&ctx, cli.common.objective.into()),
        Command::PlanTimeMin => plan_joint(&ctx, ObjectiveKind::Time),
        Command::Evaluate { trajectory } => evaluate(&ctx, &trajectory),
        Command::Sweep { demands } => run_sweep(&ctx, &demands),
        Command::Compare => compare(&ctx),
    }
}

fn power_curve(ctx: &Ctx, step: f64, upto: Option<f64>) -> Result<i32> {
    let top = upto.unwrap_or(ctx.s.v_max);
    if !(step > 0.0) || !(top >= 0.0) {
        return Err(anyhow!("step must be positive and the upper speed nonnegative"));
    }
    let n = (top / step + 1e-9).floor() as usize;
    let rows = (0..=n)
        .map(|i| {
            let v = (i as f64 * step).min(top);
            Ok((v, ctx.s.rotor.power_breakdown(v)?))
        })
        .collect::<Result<Vec<_>>>()?;
    output::write_power_curve(&ctx.path("power_curve.csv"), &rows)?;
    println!("wrote {} rows to {}", rows.len(), ctx.path("power_curve.csv").display());
    Ok(0)
}

#[derive(Serialize)]
struct SpeedsOut {
    v_me_mps: f64,
    v_mr_mps: f64,
    e0_star_jpm: f64,
    hover_power_w: f64,
}

fn speeds(ctx: &Ctx) -> Result<i32> {
    let c = ctx.s.rotor.characteristic_speeds(ctx.s.v_max)?;
    let out = SpeedsOut {
        v_me_mps: round_num(c.max_endurance),
        v_mr_mps: round_num(c.max_range),
        e0_star_jpm: round_num(c.min_energy_per_meter),
        hover_power_w: round_num(ctx.s.rotor.hover_power()),
    };
    println!("V_me = {} m/s", fmt_num(c.max_endurance));
    println!("V_mr = {} m/s", fmt_num(c.max_range));
    println!("E0* = {} J/m", fmt_num(c.min_energy_per_meter));
    output::write_json(&ctx.path("speeds.json"), &out)?;
    Ok(0)
}

fn route(ctx: &Ctx) -> Result<i32> {
    let pts = ctx.s.node_positions();
    let tour = tsp::solve_open_tour_with(&pts, ctx.s.start, ctx.s.final_point(), ctx.st.rng_seed, ctx.st.tsp_restarts)?;
    let mut wr = csv::Writer::from_path(ctx.path("route.csv"))?;
    wr.write_record(["visit", "gn", "x [m]", "y [m]"])?;
    for (i, &k) in tour.order.iter().enumerate() {
        wr.write_record([(i + 1).to_string(), (k + 1).to_string(), fmt_num(pts[k].x), fmt_num(pts[k].y)])?;
    }
    wr.flush()?;
    let order: Vec<String> = tour.order.iter().map(|k| (k + 1).to_string()).collect();
    println!("order {} length {} m", order.join(" -> "), fmt_num(tour.length));
    Ok(0)
}

fn report(ctx: &Ctx, traj: &DiscretizedTrajectory) -> Result<(EvaluationReport, i32)> {
    let r = eval::evaluate(traj, &ctx.s, &ctx.st)?;
    output::write_trajectory(&ctx.path("trajectory.csv"), traj)?;
    output::write_json(&ctx.path("summary.json"), &Summary::from(&r))?;
    println!(
        "energy {} J (propulsion {} J, communication {} J), time {} s",
        fmt_num(r.total_energy),
        fmt_num(r.propulsion_energy),
        fmt_num(r.communication_energy),
        fmt_num(r.mission_time)
    );
    for v in &r.violations {
        eprintln!("violation: {v}");
    }
    let code = if r.is_feasible() { 0 } else { EXIT_VIOLATIONS };
    Ok((r, code))
}

fn write_hover(path: &Path, plan: &FhcPlan) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    wr.write_record(["visit", "gn", "x [m]", "y [m]", "hover_time [s]"])?;
    for (i, &k) in plan.tour.order.iter().enumerate() {
        let p = plan.hover_points[k];
        wr.write_record([
            (i + 1).to_string(),
            (k + 1).to_string(),
            fmt_num(p.x),
            fmt_num(p.y),
            fmt_num(plan.hover_times[k]),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn plan_fhc(ctx: &Ctx) -> Result<i32> {
    let plan = match fhc::solve_multi_gn(&ctx.s, &ctx.st) {
        Ok(p) => p,
        Err(e) => return failed(ctx, e),
    };
    write_hover(&ctx.path("hover.csv"), &plan)?;
    output::write_plain_trace(&ctx.path("trace.csv"), &plan.trace, "J")?;
    let traj = fhc::fhc_to_trajectory(&plan, &ctx.s, ctx.st.delta_max)?;
    Ok(report(ctx, &traj)?.1)
}

fn plan_joint(ctx: &Ctx, kind: ObjectiveKind) -> Result<i32> {
    let r = match joint::optimize(&ctx.s, &ctx.st, kind) {
        Ok(r) => r,
        Err(e) => return failed(ctx, e),
    };
    let unit = if kind == ObjectiveKind::Energy { "J" } else { "s" };
    output::write_trace(&ctx.path("trace.csv"), &r.trace, unit)?;
    println!("{} SCA iterations", r.trace.len());
    Ok(report(ctx, &r.trajectory)?.1)
}

/// Writes whatever a failed planner left behind, marked as partial.
fn failed(ctx: &Ctx, e: Error) -> Result<i32> {
    if let Error::Subproblem(f) = &e {
        if let Some(t) = &f.last_trajectory {
            output::write_trajectory(&ctx.path("trajectory.partial.csv"), t)?;
        }
        output::write_plain_trace(&ctx.path("trace.partial.csv"), &f.trace, "objective")?;
        std::fs::write(ctx.path("failed_program.txt"), &f.program_dump)?;
        eprintln!("partial outputs written to {}", ctx.out.display());
    }
    Err(e.into())
}

fn evaluate(ctx: &Ctx, path: &Path) -> Result<i32> {
    let traj = output::read_trajectory(path)?;
    if traj.num_nodes() != ctx.s.nodes.len() {
        return Err(anyhow!(
            "trajectory has {} allocation columns but the scenario has {} nodes",
            traj.num_nodes(),
            ctx.s.nodes.len()
        ));
    }
    let r = eval::evaluate(&traj, &ctx.s, &ctx.st)?;
    output::write_json(&ctx.path("summary.json"), &Summary::from(&r))?;
    println!("energy {} J, time {} s", fmt_num(r.total_energy), fmt_num(r.mission_time));
    for v in &r.violations {
        eprintln!("violation: {v}");
    }
    Ok(if r.is_feasible() { 0 } else { EXIT_VIOLATIONS })
}

fn run_sweep(ctx: &Ctx, demands: &[f64]) -> Result<i32> {
    let rows = sweep::sweep(&ctx.s, demands, &ctx.st)?;
    output::write_sweep(&ctx.path("sweep.csv"), &rows)?;
    let bad: Vec<_> = rows.iter().filter(|r| !r.feasible).collect();
    for r in &bad {
        eprintln!(
            "{} at Q = {} bit: {}",
            r.scheme,
            fmt_num(r.demand_bits),
            r.error.as_deref().unwrap_or("infeasible result")
        );
    }
    println!("wrote {} rows to {}", rows.len(), ctx.path("sweep.csv").display());
    Ok(if bad.is_empty() { 0 } else { EXIT_ERROR })
}

fn compare(ctx: &Ctx) -> Result<i32> {
    let outcomes: Vec<SchemeOutcome> = sweep::compare(&ctx.s, &ctx.st);
    let mut wr = csv::Writer::from_path(ctx.path("compare.csv"))?;
    wr.write_record(["scheme", "energy [J]", "time [s]", "feasible", "status"])?;
    let mut code = 0;
    for o in &outcomes {
        match &o.result {
            Ok((traj, r)) => {
                output::write_trajectory(&ctx.path(&format!("trajectory_{}.csv", o.scheme)), traj)?;
                wr.write_record([
                    o.scheme.to_string(),
                    fmt_num(r.total_energy),
                    fmt_num(r.mission_time),
                    r.is_feasible().to_string(),
                    "ok".into(),
                ])?;
                println!(
                    "{:<16} {:>16} J {:>14} s",
                    o.scheme.name(),
                    fmt_num(r.total_energy),
                    fmt_num(r.mission_time)
                );
                if !r.is_feasible() {
                    code = EXIT_VIOLATIONS;
                }
            }
            Err(e) => {
                wr.write_record([o.scheme.to_string(), String::new(), String::new(), "false".into(), e.clone()])?;
                eprintln!("{}: {e}", o.scheme);
                code = EXIT_ERROR;
            }
        }
    }
    wr.flush()?;
    Ok(code)
}
