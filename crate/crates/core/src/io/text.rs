//! CSV formats: events, triggers, ground truth, detections and bearing samples.

use std::io::{Read, Write};

use nalgebra::Vector3;

use crate::detection::Detection;
use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity, Timestamp};
use crate::io::{TriggerRecord, TriggerSource};
use crate::sim::GroundTruthSample;

fn reader<R: Read>(src: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(src)
}

fn csv_error(e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::format(offset, format!("{kind:?}")),
    }
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, name: &str, offset: u64) -> Result<&'a str> {
    rec.get(i)
        .ok_or_else(|| Error::format(offset, format!("missing column {name}")))
}

fn parse<T: std::str::FromStr>(s: &str, name: &str, offset: u64) -> Result<T> {
    s.parse()
        .map_err(|_| Error::format(offset, format!("cannot parse {name} from {s:?}")))
}

/// Iterates data rows, skipping a leading header row whose first field is not numeric.
fn rows<R: Read>(src: R) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> {
    let mut rdr = reader(src);
    let mut first = true;
    std::iter::from_fn(move || loop {
        let mut rec = csv::StringRecord::new();
        match rdr.read_record(&mut rec) {
            Err(e) => return Some(Err(csv_error(e))),
            Ok(false) => return None,
            Ok(true) => {
                let offset = rec.position().map_or(0, |p| p.byte());
                let is_header = first && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err());
                first = false;
                if is_header || (rec.len() == 1 && rec.get(0) == Some("")) {
                    continue;
                }
                return Some(Ok((offset, rec)));
            }
        }
    })
}

/// Reads `t,x,y,p` rows. Sensor size is supplied by the caller since CSV has no header block.
pub fn read_events_csv<R: Read>(src: R, width: u16, height: u16) -> Result<EventStream> {
    let mut events = Vec::new();
    let mut prev = 0;
    for row in rows(src) {
        let (at, rec) = row?;
        let t: Timestamp = parse(field(&rec, 0, "t", at)?, "t", at)?;
        let x: u16 = parse(field(&rec, 1, "x", at)?, "x", at)?;
        let y: u16 = parse(field(&rec, 2, "y", at)?, "y", at)?;
        let p: i8 = parse(field(&rec, 3, "p", at)?, "p", at)?;
        let p =
            Polarity::from_i8(p).ok_or_else(|| Error::format(at, format!("polarity {p} is not +1/-1")))?;
        if x >= width || y >= height {
            return Err(Error::format(
                at,
                format!("pixel ({x}, {y}) outside {width}x{height} sensor"),
            ));
        }
        if !events.is_empty() && t < prev {
            return Err(Error::format(at, format!("timestamp {t} precedes {prev}")));
        }
        prev = t;
        events.push(Event { t, x, y, p });
    }
    Ok(EventStream::new(width, height, events))
}

pub fn write_events_csv<W: Write>(stream: &EventStream, dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(["t", "x", "y", "p"]).map_err(csv_error)?;
    for e in &stream.events {
        w.write_record([
            e.t.to_string(),
            e.x.to_string(),
            e.y.to_string(),
            e.p.sign().to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_triggers_csv<W: Write>(records: &[TriggerRecord], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(["t", "source"]).map_err(csv_error)?;
    for r in records {
        w.write_record([r.t.to_string(), r.source.as_str().to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `t[,source]` rows; a missing source column reads as `UNKNOWN`.
pub fn read_triggers_csv<R: Read>(src: R) -> Result<Vec<TriggerRecord>> {
    let mut out = Vec::new();
    for row in rows(src) {
        let (at, rec) = row?;
        let t = parse(field(&rec, 0, "t", at)?, "t", at)?;
        let source = match rec.get(1) {
            None | Some("") => TriggerSource::Unknown,
            Some(s) => TriggerSource::parse(s)
                .ok_or_else(|| Error::format(at, format!("unknown trigger source {s:?}")))?,
        };
        out.push(TriggerRecord { t, source });
    }
    Ok(out)
}

pub fn write_ground_truth_csv<W: Write>(samples: &[GroundTruthSample], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(["t", "bx", "by", "bz", "in_fov", "apparent_size"])
        .map_err(csv_error)?;
    for g in samples {
        w.write_record([
            g.t.to_string(),
            g.bearing.x.to_string(),
            g.bearing.y.to_string(),
            g.bearing.z.to_string(),
            u8::from(g.in_fov).to_string(),
            g.apparent_size.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth_csv<R: Read>(src: R) -> Result<Vec<GroundTruthSample>> {
    let mut out: Vec<GroundTruthSample> = Vec::new();
    for row in rows(src) {
        let (at, rec) = row?;
        let t: Timestamp = parse(field(&rec, 0, "t", at)?, "t", at)?;
        let bx: f64 = parse(field(&rec, 1, "bx", at)?, "bx", at)?;
        let by: f64 = parse(field(&rec, 2, "by", at)?, "by", at)?;
        let bz: f64 = parse(field(&rec, 3, "bz", at)?, "bz", at)?;
        let in_fov = match field(&rec, 4, "in_fov", at)? {
            "1" | "true" => true,
            "0" | "false" => false,
            s => return Err(Error::format(at, format!("in_fov must be 0/1, got {s:?}"))),
        };
        let apparent_size: f64 = parse(field(&rec, 5, "apparent_size", at)?, "apparent_size", at)?;
        let bearing = Vector3::new(bx, by, bz);
        let norm = bearing.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
            return Err(Error::format(at, "bearing is not a unit vector"));
        }
        if out.last().is_some_and(|p| p.t >= t) {
            return Err(Error::format(
                at,
                "ground-truth times must be strictly increasing",
            ));
        }
        out.push(GroundTruthSample {
            t,
            bearing,
            in_fov,
            apparent_size,
        });
    }
    Ok(out)
}

pub fn write_detections_csv<W: Write>(dets: &[Detection], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(["t", "cx", "cy", "w", "h", "score"])
        .map_err(csv_error)?;
    for d in dets {
        w.write_record([
            d.t.to_string(),
            d.bbox.cx.to_string(),
            d.bbox.cy.to_string(),
            d.bbox.w.to_string(),
            d.bbox.h.to_string(),
            d.score.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// One scored bearing estimate, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingRecord {
    pub t: Timestamp,
    pub theta_est: f64,
    pub phi_est: f64,
    pub theta_gt: f64,
    pub phi_gt: f64,
    pub gamma: f64,
}

pub fn write_bearings_csv<W: Write>(rows: &[BearingRecord], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(["t", "theta_est", "phi_est", "theta_gt", "phi_gt", "gamma"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.theta_est.to_string(),
            r.phi_est.to_string(),
            r.theta_gt.to_string(),
            r.phi_gt.to_string(),
            r.gamma.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
