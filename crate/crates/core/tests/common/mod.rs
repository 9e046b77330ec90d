#![allow(dead_code)]

use std::path::PathBuf;

use spindet::io::RunConfig;
use spindet::sim::{simulate_sequence, SimOutput};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

pub fn scenario(name: &str) -> RunConfig {
    RunConfig::load(&scenario_path(name)).expect("bundled scenario loads")
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn simulate(cfg: &RunConfig) -> SimOutput {
    simulate_sequence(
        &cfg.scene,
        &cfg.platform,
        &cfg.sensor,
        cfg.simulation.duration_us,
        cfg.seed,
    )
    .expect("simulation runs")
}
