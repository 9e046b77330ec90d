//! File formats and run configuration.

mod config;
pub mod evb;
mod text;
mod triggers;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

pub use config::{
    DetectorKind, DetectorSettings, EvalSettings, MsrSettings, OutputSettings, RunConfig, SimulationSettings,
    TriggerSettings, WindowAnchor,
};
pub use evb::{decode_events, encode_events, read_events, write_events};
pub use text::{
    read_events_csv, read_ground_truth_csv, read_triggers_csv, write_bearings_csv, write_detections_csv,
    write_events_csv, write_ground_truth_csv, write_triggers_csv, BearingRecord,
};
pub use triggers::{demux_triggers, Demuxed, TriggerRecord, TriggerSource};

use crate::error::Result;
use crate::event::{EventStream, SensorConfig};

/// Loads `.evb` or `.csv` events. CSV files take their dimensions from `sensor`.
pub fn load_events(path: &Path, sensor: &SensorConfig) -> Result<EventStream> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let file = BufReader::new(File::open(path)?);
    if is_csv {
        read_events_csv(file, sensor.width, sensor.height)
    } else {
        read_events(file)
    }
}

/// Writes events as `.evb`, or CSV when `csv` is set. Returns bytes written for `.evb`.
pub fn save_events(path: &Path, stream: &EventStream, csv: bool) -> Result<usize> {
    let file = BufWriter::new(File::create(path)?);
    if csv {
        write_events_csv(stream, file)?;
        Ok(std::fs::metadata(path)?.len() as usize)
    } else {
        write_events(stream, file)
    }
}
