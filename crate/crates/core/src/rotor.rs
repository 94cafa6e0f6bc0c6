//! Rotary-wing propulsion power model.
//!
//! Power required for straight level flight at speed `V` is the sum of three
//! components:
//!
//! ```text
//! P(V) = P0 (1 + 3V²/U_tip²)                          blade profile
//!      + Pi (sqrt(1 + V⁴/(4 v0⁴)) - V²/(2 v0²))^(1/2)  induced
//!      + ½ d0 ρ s A V³                                 parasite
//! ```
//!
//! with `P0 = (δ/8) ρ s A Ω³ R³` and `Pi = (1 + k) W^(3/2) / sqrt(2 ρ A)`.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::search::scan_then_golden;

/// Relative tolerance used when pre-derived constants are supplied next to the
/// raw aircraft parameters.
pub const DERIVED_CONSISTENCY_TOL: f64 = 1e-6;

/// Physical aircraft constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotorRawParams {
    /// Aircraft weight (N).
    pub weight: f64,
    /// Air density (kg/m³).
    pub rho: f64,
    /// Rotor radius (m).
    pub radius: f64,
    /// Blade angular velocity (rad/s).
    pub omega: f64,
    /// Number of blades.
    pub blades: u32,
    /// Blade chord length (m).
    pub chord: f64,
    /// Fuselage equivalent flat plate area (m²).
    pub s_fp: f64,
    /// Incremental correction factor to induced power.
    pub k: f64,
    /// Profile drag coefficient.
    pub delta: f64,
}

impl RotorRawParams {
    /// The reference multicopter profile.
    pub const REFERENCE: RotorRawParams = RotorRawParams {
        weight: 100.0,
        rho: 1.225,
        radius: 0.5,
        omega: 400.0,
        blades: 4,
        chord: 0.0196,
        s_fp: 0.0118,
        k: 0.1,
        delta: 0.012,
    };

    /// Alternate profile name accepted in scenario files.
    pub const REFERENCE_PROFILE_NAME: &'static str = "paper-table-1";

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("weight", self.weight),
            ("rho", self.rho),
            ("radius", self.radius),
            ("omega", self.omega),
            ("chord", self.chord),
            ("s_fp", self.s_fp),
            ("k", self.k),
            ("delta", self.delta),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(name, "positive and finite"));
            }
        }
        if self.blades < 2 {
            return Err(Error::invalid("blades", "at least 2"));
        }
        Ok(())
    }
}

/// Constants derived from [`RotorRawParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivedRotorConstants {
    /// Rotor disc area A (m²).
    pub disc_area: f64,
    /// Blade tip speed U_tip (m/s).
    pub tip_speed: f64,
    /// Rotor solidity s.
    pub solidity: f64,
    /// Fuselage drag ratio d0.
    pub fuselage_drag_ratio: f64,
    /// Mean rotor induced velocity in hover v0 (m/s).
    pub hover_induced_velocity: f64,
    /// Blade profile power in hover P0 (W).
    pub blade_profile_power: f64,
    /// Induced power in hover Pi (W).
    pub induced_power: f64,
    /// Hover power P_h = P0 + Pi (W).
    pub hover_power: f64,
}

impl DerivedRotorConstants {
    pub fn from_raw(raw: &RotorRawParams) -> Self {
        let pi = core::f64::consts::PI;
        let disc_area = pi * raw.radius * raw.radius;
        let tip_speed = raw.omega * raw.radius;
        let solidity = raw.blades as f64 * raw.chord / (pi * raw.radius);
        let fuselage_drag_ratio = raw.s_fp / (solidity * disc_area);
        let hover_induced_velocity = (raw.weight / (2.0 * raw.rho * disc_area)).sqrt();
        let blade_profile_power = raw.delta / 8.0 * raw.rho * solidity * disc_area * raw.omega.powi(3) * raw.radius.powi(3);
        let induced_power = (1.0 + raw.k) * raw.weight.powf(1.5) / (2.0 * raw.rho * disc_area).sqrt();
        DerivedRotorConstants {
            disc_area,
            tip_speed,
            solidity,
            fuselage_drag_ratio,
            hover_induced_velocity,
            blade_profile_power,
            induced_power,
            hover_power: blade_profile_power + induced_power,
        }
    }

    fn fields(&self) -> [(&'static str, f64); 8] {
        [
            ("disc_area", self.disc_area),
            ("tip_speed", self.tip_speed),
            ("solidity", self.solidity),
            ("fuselage_drag_ratio", self.fuselage_drag_ratio),
            ("hover_induced_velocity", self.hover_induced_velocity),
            ("blade_profile_power", self.blade_profile_power),
            ("induced_power", self.induced_power),
            ("hover_power", self.hover_power),
        ]
    }

    /// Names of fields whose relative deviation from `reference` exceeds `tol`.
    pub fn inconsistent_fields(&self, reference: &DerivedRotorConstants, tol: f64) -> alloc::vec::Vec<&'static str> {
        self.fields()
            .iter()
            .zip(reference.fields().iter())
            .filter(|((_, a), (_, b))| !((a - b).abs() <= tol * b.abs()))
            .map(|((name, _), _)| *name)
            .collect()
    }
}

/// Aircraft constants together with the derived power constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotorParams {
    pub raw: RotorRawParams,
    pub derived: DerivedRotorConstants,
}

/// Propulsion power split into its three physical components (W).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub blade_profile: f64,
    pub induced: f64,
    pub parasite: f64,
}

impl PowerBreakdown {
    pub fn total(&self) -> f64 {
        self.blade_profile + self.induced + self.parasite
    }
}

/// Speeds of minimum power and minimum energy per meter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicSpeeds {
    /// Maximum-endurance speed V_me (m/s).
    pub max_endurance: f64,
    /// Maximum-range speed V_mr (m/s).
    pub max_range: f64,
    /// Energy per meter at V_mr (J/m).
    pub min_energy_per_meter: f64,
}

impl Default for RotorParams {
    fn default() -> Self {
        RotorParams::derive(RotorRawParams::REFERENCE).expect("reference profile is valid")
    }
}

impl RotorParams {
    /// Derives all power constants from the raw aircraft parameters.
    pub fn derive(raw: RotorRawParams) -> Result<Self> {
        raw.validate()?;
        Ok(RotorParams {
            raw,
            derived: DerivedRotorConstants::from_raw(&raw),
        })
    }

    /// Accepts externally supplied derived constants after checking them
    /// against the raw parameters.
    pub fn with_derived(raw: RotorRawParams, derived: DerivedRotorConstants) -> Result<Self> {
        raw.validate()?;
        let expected = DerivedRotorConstants::from_raw(&raw);
        let bad = derived.inconsistent_fields(&expected, DERIVED_CONSISTENCY_TOL);
        if let Some(name) = bad.first() {
            return Err(Error::invalid(*name, "consistent with the raw rotor parameters to 1e-6 relative"));
        }
        Ok(RotorParams { raw, derived })
    }

    pub fn hover_power(&self) -> f64 {
        self.derived.hover_power
    }

    fn parasite_coefficient(&self) -> f64 {
        let d = &self.derived;
        0.5 * d.fuselage_drag_ratio * self.raw.rho * d.solidity * d.disc_area
    }

    /// `(sqrt(kappa² + V⁴/(4v0⁴)) - V²/(2v0²))^(1/2)`, evaluated without the
    /// cancellation that the direct form suffers at high speed.
    fn induced_factor(&self, speed: f64, kappa: f64) -> f64 {
        let v0 = self.derived.hover_induced_velocity;
        let half_ratio = speed * speed / (2.0 * v0 * v0);
        let root = (kappa * kappa + half_ratio * half_ratio).sqrt();
        (kappa * kappa / (root + half_ratio)).sqrt()
    }

    pub fn power_breakdown(&self, speed: f64) -> Result<PowerBreakdown> {
        check_speed(speed)?;
        let d = &self.derived;
        let u = d.tip_speed;
        Ok(PowerBreakdown {
            blade_profile: d.blade_profile_power * (1.0 + 3.0 * speed * speed / (u * u)),
            induced: d.induced_power * self.induced_factor(speed, 1.0),
            parasite: self.parasite_coefficient() * speed.powi(3),
        })
    }

    /// Propulsion power at forward speed `speed` (W).
    pub fn power(&self, speed: f64) -> Result<f64> {
        self.power_breakdown(speed).map(|b| b.total())
    }

    /// Convex high-speed approximation replacing the induced term by `Pi v0 / V`.
    pub fn power_approx(&self, speed: f64) -> Result<f64> {
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(Error::Domain {
                what: "speed for the high-speed power approximation",
                value: speed,
            });
        }
        let d = &self.derived;
        let u = d.tip_speed;
        Ok(d.blade_profile_power * (1.0 + 3.0 * speed * speed / (u * u))
            + d.induced_power * d.hover_induced_velocity / speed
            + self.parasite_coefficient() * speed.powi(3))
    }

    /// Energy per unit travelled distance `P(V)/V` (J/m).
    pub fn energy_per_meter(&self, speed: f64) -> Result<f64> {
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(Error::Domain {
                what: "speed for energy per meter",
                value: speed,
            });
        }
        Ok(self.power(speed)? / speed)
    }

    /// Mean rotor induced velocity at forward speed `speed` and thrust-to-weight
    /// ratio `kappa` (m/s).
    pub fn induced_velocity(&self, speed: f64, kappa: f64) -> Result<f64> {
        check_speed(speed)?;
        check_kappa(kappa)?;
        Ok(self.derived.hover_induced_velocity * self.induced_factor(speed, kappa))
    }

    /// Forward-flight power for a general thrust-to-weight ratio (W).
    pub fn power_full(&self, speed: f64, kappa: f64) -> Result<f64> {
        check_speed(speed)?;
        check_kappa(kappa)?;
        let d = &self.derived;
        let u = d.tip_speed;
        Ok(d.blade_profile_power * (1.0 + 3.0 * speed * speed / (u * u))
            + d.induced_power * kappa * self.induced_factor(speed, kappa)
            + self.parasite_coefficient() * speed.powi(3))
    }

    /// Maximum-endurance and maximum-range speeds on `[0, v_max]`.
    pub fn characteristic_speeds(&self, v_max: f64) -> Result<CharacteristicSpeeds> {
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(Error::invalid("V_max", "positive"));
        }
        const SCAN_STEP: f64 = 0.5;
        const TOL: f64 = 1e-7;
        const MIN_RANGE_SPEED: f64 = 1e-3;
        let power = |v: f64| self.power(v).unwrap_or(f64::INFINITY);
        let max_endurance = scan_then_golden(power, 0.0, v_max, SCAN_STEP, TOL);
        let lo = MIN_RANGE_SPEED.min(v_max);
        let epm = |v: f64| self.energy_per_meter(v).unwrap_or(f64::INFINITY);
        let max_range = scan_then_golden(epm, lo, v_max, SCAN_STEP, TOL);
        Ok(CharacteristicSpeeds {
            max_endurance,
            max_range,
            min_energy_per_meter: self.energy_per_meter(max_range)?,
        })
    }
}

fn check_speed(speed: f64) -> Result<()> {
    if speed >= 0.0 && speed.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "speed",
            value: speed,
        })
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "thrust-to-weight ratio",
            value: kappa,
        })
    }
}

impl core::fmt::Display for PowerBreakdown {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "blade {:.3} W + induced {:.3} W + parasite {:.3} W",
            self.blade_profile, self.induced, self.parasite
        )
    }
}
