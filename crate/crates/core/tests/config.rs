use std::path::Path;

use bubblelab::experiments::config::FromLadder;
use bubblelab::experiments::{preset, EpsilonList, ExperimentConfig, ExperimentKind};
use bubblelab::Error;

const MINIMAL: &str = r#"
experiment = "modulated_scaling"
epsilon_list = [0.2, 0.1, 0.05]

[model]
dim = 1
m = 3
s = 0.1

[ladder]
rungs = 2
ladder = { kind = "geometric", h0 = 1.0, gamma = 0.25 }

[grid]
n = 1024
length = 16.0
"#;

fn with(extra: &str) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::from_toml(&format!("{extra}\n{MINIMAL}"))
}

fn is_config_err<T: std::fmt::Debug>(r: Result<T, Error>) -> bool {
    matches!(r, Err(Error::Config(_)))
}

#[test]
fn minimal_config_fills_defaults() {
    let cfg = with("").unwrap();
    assert_eq!(cfg.sigma_list, vec![0.5, 1.0]);
    assert_eq!(cfg.lifespan_horizon, 100.0);
    assert_eq!(cfg.epsilons().unwrap(), vec![0.2, 0.1, 0.05]);
}

#[test]
fn unknown_key_is_rejected() {
    assert!(is_config_err(with("threads = 4")));
}

#[test]
fn epsilons_must_strictly_decrease() {
    let text = MINIMAL.replace("[0.2, 0.1, 0.05]", "[0.2, 0.2, 0.05]");
    assert!(is_config_err(ExperimentConfig::from_toml(&text)));
    let text = MINIMAL.replace("[0.2, 0.1, 0.05]", "[0.05, 0.1, 0.2]");
    assert!(is_config_err(ExperimentConfig::from_toml(&text)));
    let text = MINIMAL.replace("[0.2, 0.1, 0.05]", "[0.2, 0.1, 0.0]");
    assert!(is_config_err(ExperimentConfig::from_toml(&text)));
}

#[test]
fn two_epsilons_cannot_give_a_slope() {
    let text = MINIMAL.replace("[0.2, 0.1, 0.05]", "[0.2, 0.1]");
    assert!(is_config_err(ExperimentConfig::from_toml(&text)));
}

#[test]
fn sigma_outside_range_is_rejected() {
    assert!(is_config_err(with("sigma_list = [0.5, 2.5]")));
    assert!(is_config_err(with("sigma_list = [0.0]")));
    assert!(with("sigma_list = [2.0]").is_ok());
}

#[test]
fn t_grid_stays_in_first_half() {
    assert!(is_config_err(with("t_grid = [0.6]")));
    assert!(with("t_grid = [0.0, 0.5]").is_ok());
}

#[test]
fn ladder_keyword_takes_rung_epsilons() {
    let text = MINIMAL.replace("epsilon_list = [0.2, 0.1, 0.05]", "epsilon_list = \"ladder\"");
    let mut cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(cfg.epsilon_list, EpsilonList::Derived(FromLadder::Ladder));
    // with |log h|^m the rung epsilons grow until h ~ e^{-1/(s_c - s)}
    assert!(is_config_err(cfg.epsilons()));
    cfg.ladder.as_mut().unwrap().log_factor = false;
    let ladder = cfg.build_ladder().unwrap();
    assert_eq!(cfg.epsilons().unwrap(), vec![ladder.epsilon(1).unwrap(), ladder.epsilon(2).unwrap()]);
}

#[test]
fn missing_ladder_is_rejected_where_needed() {
    let text = MINIMAL.replace("[ladder]\nrungs = 2\nladder = { kind = \"geometric\", h0 = 1.0, gamma = 0.25 }\n", "");
    assert!(is_config_err(ExperimentConfig::from_toml(&text)));
    let text = text.replace("modulated_scaling", "commutator_sweep");
    assert!(ExperimentConfig::from_toml(&text).is_ok());
}

#[test]
fn under_resolved_grid_names_epsilon() {
    let cfg = with("").unwrap();
    match cfg.resolved_points(&[0.2, 0.1, 0.001]) {
        Err(Error::Resolution(msg)) => assert!(msg.contains("0.001"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn shipped_configs_match_presets() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for kind in ExperimentKind::all() {
        let path = dir.join(format!("{}.toml", kind.name()));
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(cfg, preset(kind), "{}", path.display());
    }
}

#[test]
fn presets_round_trip_through_toml() {
    for kind in ExperimentKind::all() {
        let cfg = preset(kind);
        cfg.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}
