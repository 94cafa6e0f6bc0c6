//! Scenario files: TOML with nested sections, SI units, and dB only where
//! the key ends in `_db`.
//!
//! ```toml
//! V_max = 60.0
//! P_c = 50.0
//! q_I = [0.0, 0.0]
//! q_F = [800.0, 800.0]
//! demand_bits = 1e8
//!
//! [rotor]
//! profile = "reference"
//!
//! [chan]
//! gamma0_db = 60.0
//!
//! [[gns]]
//! position = [200.0, 700.0]
//!
//! [solver]
//! delta_max = 10.0
//! ```
//!
//! Every key is optional. A file without `gns` gets the built-in three-node
//! layout.

use std::path::Path;

use serde::{Deserialize, Serialize};
use uav_energy_core::comms::{db_to_linear, ChannelParams, GroundNode};
use uav_energy_core::rotor::{DerivedRotorConstants, RotorRawParams};
use uav_energy_core::scenario::{validate, validate_settings, Severity, Violation, DEFAULT_NODE_POSITIONS};
use uav_energy_core::{Point2, RotorParams, Scenario, SolverSettings};

/// Names accepted for the built-in rotor profile.
pub const REFERENCE_PROFILES: [&str; 2] = ["reference", RotorRawParams::REFERENCE_PROFILE_NAME];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid override `{0}`: expected KEY=VALUE")]
    Override(String),
    #[error("invalid scenario:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blades: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chord: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_fp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Pre-computed constants; checked against the raw values when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derived: Option<DerivedRotorConstants>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub altitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub position: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand_bits: Option<f64>,
}

/// On-disk layout of a scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "V_max", skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(rename = "P_c", skip_serializing_if = "Option::is_none")]
    pub comm_power: Option<f64>,
    #[serde(rename = "q_I", skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
    #[serde(rename = "q_F", skip_serializing_if = "Option::is_none")]
    pub end: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoints_enabled: Option<bool>,
    /// Demand of every node that does not set its own (bits).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand_bits: Option<f64>,
    #[serde(default)]
    pub rotor: RotorSection,
    #[serde(default)]
    pub chan: ChannelSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gns: Option<Vec<NodeEntry>>,
    #[serde(default)]
    pub solver: SolverSettings,
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(vec![Violation {
        severity: Severity::Error,
        field: field.into(),
        message: message.into(),
    }])
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<(Scenario, SolverSettings), ConfigError> {
        let d = Scenario::default();
        let r = &self.rotor;
        if let Some(p) = &r.profile {
            if !REFERENCE_PROFILES.contains(&p.as_str()) {
                return Err(invalid("rotor.profile", format!("unknown profile `{p}`")));
            }
        }
        let base = RotorRawParams::REFERENCE;
        let raw = RotorRawParams {
            weight: r.weight.unwrap_or(base.weight),
            rho: r.rho.unwrap_or(base.rho),
            radius: r.radius.unwrap_or(base.radius),
            omega: r.omega.unwrap_or(base.omega),
            blades: r.blades.unwrap_or(base.blades),
            chord: r.chord.unwrap_or(base.chord),
            s_fp: r.s_fp.unwrap_or(base.s_fp),
            k: r.k.unwrap_or(base.k),
            delta: r.delta.unwrap_or(base.delta),
        };
        if let Err(e) = raw.validate() {
            return Err(invalid("rotor", e.to_string()));
        }
        let rotor = RotorParams {
            raw,
            derived: r.derived.unwrap_or_else(|| DerivedRotorConstants::from_raw(&raw)),
        };

        let c = &self.chan;
        let gamma0 = match (c.gamma0, c.gamma0_db) {
            (Some(_), Some(_)) => return Err(invalid("chan.gamma0", "give either gamma0 or gamma0_db, not both")),
            (Some(g), None) => g,
            (None, Some(db)) => db_to_linear(db),
            (None, None) => d.channel.gamma0,
        };
        let channel = ChannelParams {
            gamma0,
            bandwidth: c.bandwidth.unwrap_or(d.channel.bandwidth),
            altitude: c.altitude.unwrap_or(d.channel.altitude),
        };

        let default_demand = self.demand_bits.unwrap_or(uav_energy_core::scenario::DEFAULT_DEMAND_BITS);
        let nodes = match &self.gns {
            Some(list) => list
                .iter()
                .map(|n| GroundNode::new(n.position.into(), n.demand_bits.unwrap_or(default_demand)))
                .collect(),
            None => DEFAULT_NODE_POSITIONS.iter().map(|&p| GroundNode::new(p, default_demand)).collect(),
        };
        let s = Scenario {
            rotor,
            channel,
            nodes,
            start: self.start.map_or(d.start, Point2::from),
            end: self.end.map_or(d.end, Point2::from),
            v_max: self.v_max.unwrap_or(d.v_max),
            comm_power: self.comm_power.unwrap_or(d.comm_power),
            endpoints_enabled: self.endpoints_enabled.unwrap_or(d.endpoints_enabled),
        };
        let mut problems: Vec<Violation> = validate(&s);
        problems.extend(validate_settings(&self.solver));
        problems.retain(|v| v.severity == Severity::Error);
        if !problems.is_empty() {
            return Err(ConfigError::Invalid(problems));
        }
        Ok((s, self.solver))
    }

    /// Fully explicit file for `s`; loading it reproduces `s` exactly.
    pub fn from_scenario(s: &Scenario, st: &SolverSettings) -> Self {
        let raw = s.rotor.raw;
        ScenarioFile {
            v_max: Some(s.v_max),
            comm_power: Some(s.comm_power),
            start: Some(s.start.into()),
            end: Some(s.end.into()),
            endpoints_enabled: Some(s.endpoints_enabled),
            demand_bits: None,
            rotor: RotorSection {
                profile: None,
                weight: Some(raw.weight),
                rho: Some(raw.rho),
                radius: Some(raw.radius),
                omega: Some(raw.omega),
                blades: Some(raw.blades),
                chord: Some(raw.chord),
                s_fp: Some(raw.s_fp),
                k: Some(raw.k),
                delta: Some(raw.delta),
                derived: Some(s.rotor.derived),
            },
            chan: ChannelSection {
                gamma0: Some(s.channel.gamma0),
                gamma0_db: None,
                bandwidth: Some(s.channel.bandwidth),
                altitude: Some(s.channel.altitude),
            },
            gns: Some(
                s.nodes
                    .iter()
                    .map(|n| NodeEntry {
                        position: n.position.into(),
                        demand_bits: Some(n.demand_bits),
                    })
                    .collect(),
            ),
            solver: *st,
        }
    }
}

/// Splits `KEY=VALUE`. The value is read as a TOML literal when it parses as
/// one and as a bare string otherwise.
pub fn parse_override(spec: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, value) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.into()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(spec.into()));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.into()));
    Ok((key.into(), parsed))
}

/// Sets a dotted key inside a parsed file. `gns.N.field` addresses the N-th
/// node.
pub fn apply_override(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if last {
            cur.insert((*part).into(), value);
            return Ok(());
        }
        let next = cur
            .entry((*part).to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match next {
            toml::Value::Table(t) => t,
            toml::Value::Array(items) => {
                let idx: usize = parts[i + 1]
                    .parse()
                    .map_err(|_| ConfigError::Parse(format!("override `{key}`: `{}` is not an index", parts[i + 1])))?;
                let rest = parts[i + 2..].join(".");
                let item = items
                    .get_mut(idx)
                    .ok_or_else(|| ConfigError::Parse(format!("override `{key}`: no element {idx}")))?;
                return match item {
                    toml::Value::Table(t) if !rest.is_empty() => apply_override(t, &rest, value),
                    _ if rest.is_empty() => {
                        *item = value;
                        Ok(())
                    }
                    _ => Err(ConfigError::Parse(format!("override `{key}`: element {idx} is not a table"))),
                };
            }
            _ => return Err(ConfigError::Parse(format!("override `{key}`: `{part}` is not a table"))),
        };
    }
    Ok(())
}

/// Parses file text, applies overrides, validates.
pub fn load_str(text: &str, overrides: &[(String, toml::Value)]) -> Result<(Scenario, SolverSettings), ConfigError> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    for (k, v) in overrides {
        apply_override(&mut doc, k, v.clone())?;
    }
    let file: ScenarioFile = doc.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    file.into_scenario()
}

pub fn load_scenario(path: &Path, overrides: &[(String, toml::Value)]) -> Result<(Scenario, SolverSettings), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(&text, overrides).map_err(|e| match e {
        ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn to_toml_string(s: &Scenario, st: &SolverSettings) -> String {
    toml::to_string(&ScenarioFile::from_scenario(s, st)).expect("scenario files always serialize")
}

pub fn save_scenario(path: &Path, s: &Scenario, st: &SolverSettings) -> std::io::Result<()> {
    std::fs::write(path, to_toml_string(s, st))
}
