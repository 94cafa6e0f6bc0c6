use uav_energy::config::{self, ConfigError, ScenarioFile};
use uav_energy_core::rotor::DerivedRotorConstants;
use uav_energy_core::{Point2, Scenario, SolverSettings};

const MINIMAL: &str = r#"
[[gns]]
position = [100.0, 200.0]

[[gns]]
position = [700.0, 50.0]
demand_bits = 3e7
"#;

#[test]
fn minimal_file_takes_defaults() {
    let (s, st) = config::load_str(MINIMAL, &[]).unwrap();
    let d = Scenario::default();
    assert_eq!(s.nodes.len(), 2);
    assert_eq!(s.nodes[0].position, Point2::new(100.0, 200.0));
    assert_eq!(s.nodes[0].demand_bits, d.nodes[0].demand_bits);
    assert_eq!(s.nodes[1].demand_bits, 3e7);
    assert_eq!(s.v_max, d.v_max);
    assert_eq!(s.rotor, d.rotor);
    assert_eq!(s.channel, d.channel);
    assert_eq!(st, SolverSettings::default());
}

#[test]
fn decibel_reference_snr() {
    let text = format!("[chan]\ngamma0_db = 60\n{MINIMAL}");
    let (s, _) = config::load_str(&text, &[]).unwrap();
    assert!((s.channel.gamma0 - 1e6).abs() < 1e-6);
    let both = format!("[chan]\ngamma0_db = 60\ngamma0 = 1e6\n{MINIMAL}");
    assert!(config::load_str(&both, &[]).is_err());
}

#[test]
fn round_trip_is_bit_exact() {
    let mut s = Scenario::default().with_uniform_demand(123456789.123);
    s.channel.gamma0 = 0.1 + 0.2;
    s.comm_power = 1.0 / 3.0;
    let st = SolverSettings {
        epsilon_sca: 3e-5,
        ..SolverSettings::default()
    };
    let text = config::to_toml_string(&s, &st);
    let (back, st_back) = config::load_str(&text, &[]).unwrap();
    assert_eq!(back, s);
    assert_eq!(st_back, st);
    assert_eq!(config::to_toml_string(&back, &st_back), text);
}

#[test]
fn overrides_replace_values() {
    let ov = vec![
        config::parse_override("V_max=25").unwrap(),
        config::parse_override("gns.1.demand_bits=5e6").unwrap(),
        config::parse_override("solver.delta_max=20").unwrap(),
    ];
    let (s, st) = config::load_str(MINIMAL, &ov).unwrap();
    assert_eq!(s.v_max, 25.0);
    assert_eq!(s.nodes[1].demand_bits, 5e6);
    assert_eq!(st.delta_max, 20.0);
    assert!(matches!(config::parse_override("no-equals-sign"), Err(ConfigError::Override(_))));
}

#[test]
fn parse_errors_point_at_the_line() {
    let err = config::load_str("V_max = 30\nP_c = = 5\n", &[]).unwrap_err();
    assert!(matches!(err, ConfigError::Parse(_)));
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn inconsistent_derived_constants_are_rejected() {
    let mut f = ScenarioFile::from_scenario(&Scenario::default(), &SolverSettings::default());
    let mut d = DerivedRotorConstants::from_raw(&Scenario::default().rotor.raw);
    d.disc_area *= 1.5;
    f.rotor.derived = Some(d);
    match f.into_scenario() {
        Err(ConfigError::Invalid(v)) => assert!(v.iter().any(|x| x.field.contains("disc_area")), "{v:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_values_are_reported() {
    let err = config::load_str(MINIMAL, &[config::parse_override("V_max=-1").unwrap()]).unwrap_err();
    assert!(err.to_string().contains("V_max must be positive"), "{err}");
}

#[test]
fn files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    config::save_scenario(&path, &Scenario::default(), &SolverSettings::default()).unwrap();
    let (s, _) = config::load_scenario(&path, &[]).unwrap();
    assert_eq!(s, Scenario::default());
    assert!(matches!(
        config::load_scenario(&dir.path().join("missing.toml"), &[]),
        Err(ConfigError::Io { .. })
    ));
}
