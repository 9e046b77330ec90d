use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{
    demux_triggers, read_triggers_csv, save_events, write_ground_truth_csv, write_triggers_csv, RunConfig,
    TriggerSource,
};
use crate::sim::simulate_sequence;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub events: usize,
    pub rotation_triggers: usize,
    pub pps_triggers: usize,
    pub ground_truth_samples: usize,
    pub events_path: PathBuf,
    pub triggers_path: PathBuf,
    pub ground_truth_path: PathBuf,
}

/// Simulates the configured scene and writes `events.evb`, `triggers.csv`
/// and `ground_truth.csv` to `cfg.output.dir`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimSummary> {
    cfg.validate()?;
    let out = simulate_sequence(
        &cfg.scene,
        &cfg.platform,
        &cfg.sensor,
        cfg.simulation.duration_us,
        cfg.seed,
    )?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let events_path = dir.join("events.evb");
    let triggers_path = dir.join("triggers.csv");
    let ground_truth_path = dir.join("ground_truth.csv");
    save_events(&events_path, &out.events, false)?;
    write_triggers_csv(&out.triggers, BufWriter::new(File::create(&triggers_path)?))?;
    write_ground_truth_csv(
        &out.ground_truth,
        BufWriter::new(File::create(&ground_truth_path)?),
    )?;
    let count = |s: TriggerSource| out.triggers.iter().filter(|r| r.source == s).count();
    Ok(SimSummary {
        events: out.events.len(),
        rotation_triggers: count(TriggerSource::Rotation),
        pps_triggers: count(TriggerSource::Pps),
        ground_truth_samples: out.ground_truth.len(),
        events_path,
        triggers_path,
        ground_truth_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemuxSummary {
    pub pps: usize,
    pub rotation: usize,
    pub unknown: usize,
    /// Fraction of labeled input triggers assigned their label; `None` if the
    /// input carries no labels.
    pub labeled_accuracy: Option<f64>,
    pub output_path: PathBuf,
}

/// Splits a merged trigger log into PPS and rotation pulses and writes
/// `demuxed_triggers.csv` to `cfg.output.dir`.
pub fn cmd_demux(cfg: &RunConfig, triggers_path: &Path) -> Result<DemuxSummary> {
    cfg.validate()?;
    let records = read_triggers_csv(File::open(triggers_path)?)?;
    let period = cfg
        .platform
        .rotation_period_us()
        .ok_or_else(|| Error::Config("platform omega is zero; no rotation period to demultiplex".into()))?;
    let merged: Vec<u64> = records.iter().map(|r| r.t).collect();
    let demuxed = demux_triggers(
        &merged,
        cfg.triggers.pps_period_us,
        period,
        cfg.triggers.jitter_tolerance_us,
    )?;
    let assigned = demuxed.records();
    let labeled: Vec<_> = records
        .iter()
        .filter(|r| r.source != TriggerSource::Unknown)
        .collect();
    let labeled_accuracy = (!labeled.is_empty()).then(|| {
        let correct = labeled
            .iter()
            .filter(|r| assigned.iter().any(|a| a.t == r.t && a.source == r.source))
            .count();
        correct as f64 / labeled.len() as f64
    });
    std::fs::create_dir_all(&cfg.output.dir)?;
    let output_path = cfg.output.dir.join("demuxed_triggers.csv");
    write_triggers_csv(&assigned, BufWriter::new(File::create(&output_path)?))?;
    Ok(DemuxSummary {
        pps: demuxed.pps.len(),
        rotation: demuxed.rotation.len(),
        unknown: demuxed.unknown.len(),
        labeled_accuracy,
        output_path,
    })
}
