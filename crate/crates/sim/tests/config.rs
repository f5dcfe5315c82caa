use std::path::Path;

use drive_sim::config::{parse_config, ConfigError};
use drive_sim::{OuterMode, SimConfig};

fn parse(text: &str) -> Result<SimConfig, ConfigError> {
    parse_config(text, Path::new("test.toml"))
}

#[test]
fn empty_file_gives_defaults() {
    let cfg = parse("").unwrap();
    assert_eq!(cfg, SimConfig::default());
    assert_eq!(cfg.plant_steps_per_tick(), 10);
    assert_eq!(cfg.ticks_per_trigger(), 4);
    assert_eq!(cfg.n_ticks(), 40_000);
}

#[test]
fn minimal_file_sets_mode_and_seed() {
    let cfg = parse("outer_mode = \"ofo\"\nseed = 7\n[scenario]\nkind = \"reference_step\"\n").unwrap();
    assert_eq!(cfg.outer_mode, OuterMode::Ofo);
    assert_eq!(cfg.seed, 7);
}

#[test]
fn unstable_ofo_gain_is_rejected() {
    let err = parse("[ofo]\nk_mu = 2000.0\n").unwrap_err();
    assert!(matches!(err, ConfigError::Invalid(ref m) if m.contains("ofo")), "{err}");
}

#[test]
fn trigger_period_must_be_a_multiple_of_the_control_period() {
    let err = parse("[ofo]\nt_s = 0.0011\n").unwrap_err();
    assert!(err.to_string().contains("multiple"), "{err}");
    let err = parse("[timing]\nt_c = 0.00026\n").unwrap_err();
    assert!(err.to_string().contains("multiple"), "{err}");
}

#[test]
fn unknown_keys_are_parse_errors() {
    assert!(matches!(parse("[ofo]\nkmu = 1.0\n"), Err(ConfigError::Parse { .. })));
}

#[test]
fn custom_kind_requires_profiles() {
    assert!(parse("[scenario]\nkind = \"custom\"\n").is_err());
}

#[test]
fn schema_lists_every_table_and_parses_back() {
    let s = drive_sim::config::schema();
    for table in ["[design]", "[tuning]", "[af]", "[ofo]", "[timing]", "[scenario]", "[output]"] {
        assert!(s.contains(table), "missing {table}");
    }
    parse(&s).expect("schema is itself a valid configuration");
}
