//! Mission description, solver settings and their validation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::comms::{ChannelParams, GroundNode};
use crate::geometry::Point2;
use crate::rotor::{DerivedRotorConstants, RotorParams, DERIVED_CONSISTENCY_TOL};

/// Everything that defines a planning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub rotor: RotorParams,
    pub channel: ChannelParams,
    pub nodes: Vec<GroundNode>,
    /// Initial horizontal location q_I (m).
    pub start: Point2,
    /// Final horizontal location q_F (m); only enforced when
    /// `endpoints_enabled` is set.
    pub end: Point2,
    /// Maximum flying speed (m/s).
    pub v_max: f64,
    /// Communication-related power (W).
    pub comm_power: f64,
    pub endpoints_enabled: bool,
}

/// Node layout used when a scenario lists no ground nodes. These positions
/// are illustrative, not taken from any published figure.
pub const DEFAULT_NODE_POSITIONS: [Point2; 3] = [Point2::new(200.0, 700.0), Point2::new(600.0, 250.0), Point2::new(750.0, 650.0)];

pub const DEFAULT_DEMAND_BITS: f64 = 100e6;

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            rotor: RotorParams::default(),
            channel: ChannelParams::default(),
            nodes: DEFAULT_NODE_POSITIONS
                .iter()
                .map(|&p| GroundNode::new(p, DEFAULT_DEMAND_BITS))
                .collect(),
            start: Point2::new(0.0, 0.0),
            end: Point2::new(800.0, 800.0),
            v_max: 60.0,
            comm_power: 50.0,
            endpoints_enabled: true,
        }
    }
}

impl Scenario {
    /// Copy of the scenario with every node's demand set to `bits`.
    pub fn with_uniform_demand(&self, bits: f64) -> Scenario {
        let mut s = self.clone();
        for n in &mut s.nodes {
            n.demand_bits = bits;
        }
        s
    }

    pub fn final_point(&self) -> Option<Point2> {
        self.endpoints_enabled.then_some(self.end)
    }

    pub fn node_positions(&self) -> Vec<Point2> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    /// Arithmetic mean of the node positions.
    pub fn geometric_center(&self) -> Point2 {
        let k = self.nodes.len().max(1) as f64;
        let sum = self.nodes.iter().fold(Point2::ORIGIN, |acc, n| acc + n.position);
        sum * (1.0 / k)
    }
}

/// Tuning knobs of the planners and of the convex kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverSettings {
    /// SCA stops once the fractional objective decrease drops below this.
    pub epsilon_sca: f64,
    pub max_sca_iters: usize,
    /// Maximum length of a path segment (m).
    pub delta_max: f64,
    pub kernel_feas_tol: f64,
    /// Relative duality-gap target of the convex kernel.
    pub kernel_opt_tol: f64,
    pub rng_seed: u64,
    /// Restarts of the visiting-order heuristic.
    pub tsp_restarts: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            epsilon_sca: 1e-4,
            max_sca_iters: 50,
            delta_max: 10.0,
            kernel_feas_tol: 1e-6,
            kernel_opt_tol: 1e-8,
            rng_seed: 0,
            tsp_restarts: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Severity {
    Warning,
    Error,
}

/// One failed check of [`validate`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub severity: Severity,
    /// Dotted name of the offending field.
    pub field: String,
    pub message: String,
}

impl Violation {
    fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        }
    }

    fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Checks every scenario invariant. An empty list means the scenario is usable;
/// warnings flag legal but suspicious input.
pub fn validate(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = s.rotor.raw.validate() {
        out.push(Violation::error("rotor", e.to_string()));
    } else {
        let expected = DerivedRotorConstants::from_raw(&s.rotor.raw);
        for name in s.rotor.derived.inconsistent_fields(&expected, DERIVED_CONSISTENCY_TOL) {
            out.push(Violation::error(
                format!("rotor.{name}"),
                "inconsistent with the raw rotor parameters",
            ));
        }
    }
    for (name, v) in [
        ("chan.gamma0", s.channel.gamma0),
        ("chan.bandwidth", s.channel.bandwidth),
        ("chan.altitude", s.channel.altitude),
    ] {
        if !positive(v) {
            out.push(Violation::error(name, "must be positive"));
        }
    }
    if !positive(s.v_max) {
        out.push(Violation::error("V_max", "V_max must be positive"));
    }
    if !(s.comm_power >= 0.0 && s.comm_power.is_finite()) {
        out.push(Violation::error("P_c", "P_c must be nonnegative"));
    }
    if !s.start.is_finite() {
        out.push(Violation::error("q_I", "must be finite"));
    }
    if !s.end.is_finite() {
        out.push(Violation::error("q_F", "must be finite"));
    }
    if s.nodes.is_empty() {
        out.push(Violation::error("gns", "at least one ground node is required"));
    }
    for (k, n) in s.nodes.iter().enumerate() {
        if !n.position.is_finite() {
            out.push(Violation::error(format!("gns.{k}.position"), "must be finite"));
        }
        if !positive(n.demand_bits) {
            out.push(Violation::error(format!("gns.{k}.demand_bits"), "must be positive"));
        }
        for (j, other) in s.nodes.iter().enumerate().take(k) {
            if other.position == n.position {
                out.push(Violation::warning(
                    format!("gns.{k}.position"),
                    format!("duplicates the position of node {j}"),
                ));
            }
        }
    }
    out
}

pub fn validate_settings(st: &SolverSettings) -> Vec<Violation> {
    let mut out = vec![];
    for (name, v) in [
        ("solver.epsilon_sca", st.epsilon_sca),
        ("solver.delta_max", st.delta_max),
        ("solver.kernel_feas_tol", st.kernel_feas_tol),
        ("solver.kernel_opt_tol", st.kernel_opt_tol),
    ] {
        if !positive(v) {
            out.push(Violation::error(name, "must be positive"));
        }
    }
    if st.max_sca_iters == 0 {
        out.push(Violation::error("solver.max_sca_iters", "must be at least 1"));
    }
    if st.tsp_restarts == 0 {
        out.push(Violation::error("solver.tsp_restarts", "must be at least 1"));
    }
    out
}

/// Turns error-level violations into an [`crate::Error`].
pub fn ensure_valid(s: &Scenario, st: &SolverSettings) -> crate::Result<()> {
    let mut all = validate(s);
    all.extend(validate_settings(st));
    match all.into_iter().find(|v| v.severity == Severity::Error) {
        Some(v) => Err(crate::Error::Invalid {
            name: v.field,
            requirement: v.message,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_clean() {
        assert!(validate(&Scenario::default()).is_empty());
        assert!(validate_settings(&SolverSettings::default()).is_empty());
    }

    #[test]
    fn negative_speed_limit_is_reported() {
        let s = Scenario {
            v_max: -1.0,
            ..Scenario::default()
        };
        let v = validate(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].message, "V_max must be positive");
        assert!(ensure_valid(&s, &SolverSettings::default()).is_err());
    }

    #[test]
    fn inconsistent_disc_area_is_named() {
        let mut s = Scenario::default();
        s.rotor.derived.disc_area *= 1.01;
        let v = validate(&s);
        assert!(v.iter().any(|x| x.field == "rotor.disc_area"));
    }

    #[test]
    fn duplicate_positions_only_warn() {
        let mut s = Scenario::default();
        s.nodes[2].position = s.nodes[0].position;
        let v = validate(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].severity, Severity::Warning);
        assert!(ensure_valid(&s, &SolverSettings::default()).is_ok());
    }

    #[test]
    fn empty_node_list_is_an_error() {
        let mut s = Scenario::default();
        s.nodes.clear();
        assert!(ensure_valid(&s, &SolverSettings::default()).is_err());
    }

    #[test]
    fn geometric_center_is_mean() {
        let c = Scenario::default().geometric_center();
        assert!((c.x - 1550.0 / 3.0).abs() < 1e-12);
        assert!((c.y - 1600.0 / 3.0).abs() < 1e-12);
    }
}
