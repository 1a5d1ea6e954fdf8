//! The shipped scenario files must stay loadable and self-consistent.

use std::collections::BTreeSet;
use std::path::PathBuf;

use tilthex_harness::scenario::ScenarioSpec;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn shipped_scenarios_parse_and_validate() {
    let mut names = BTreeSet::new();
    let mut count = 0;
    for entry in std::fs::read_dir(scenario_dir()).expect("scenarios directory") {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let spec: ScenarioSpec =
            toml::from_str(&text).unwrap_or_else(|e| panic!("parsing {}: {e}", path.display()));
        spec.validate()
            .unwrap_or_else(|e| panic!("validating {}: {e}", path.display()));
        assert!(spec.duration > 0.0);
        assert!(!names.contains(&spec.name), "duplicate name {}", spec.name);
        names.insert(spec.name.clone());
        count += 1;
    }
    assert!(
        count >= 5,
        "expected the five stock scenarios, found {count}"
    );
    for expected in [
        "hover-transition",
        "lateral-sinusoid-level",
        "lateral-sinusoid-tilted",
        "roll-sinusoid-level",
        "roll-sinusoid-tilted",
    ] {
        assert!(names.contains(expected), "missing scenario {expected}");
    }
}

#[test]
fn hover_transition_schedule_steps_through_both_configurations() {
    let text = std::fs::read_to_string(scenario_dir().join("hover_transition.toml")).unwrap();
    let spec: ScenarioSpec = toml::from_str(&text).unwrap();
    assert_eq!(spec.tilt_command(0.0), 0.0);
    assert_eq!(spec.tilt_command(25.0), 30f64.to_radians());
    assert_eq!(spec.tilt_command(75.0), 0.0);
}
