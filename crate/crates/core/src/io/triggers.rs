//! Separation of the merged PPS and rotation-switch trigger line.
//!
//! Both pulse trains reach the camera through a single trigger input; they
//! can only be told apart by their periods. Each train is modeled as a comb
//! `phase + k * period`, the phase is fitted robustly against the merged
//! timestamps, and a timestamp is assigned to the comb whose nearest tooth
//! lies within the jitter tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TriggerSource {
    Pps,
    Rotation,
    Unknown,
}

impl TriggerSource {
    pub fn as_str(self) -> &'static str {
        match self {
            TriggerSource::Pps => "PPS",
            TriggerSource::Rotation => "ROTATION",
            TriggerSource::Unknown => "UNKNOWN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PPS" => Some(TriggerSource::Pps),
            "ROTATION" => Some(TriggerSource::Rotation),
            "UNKNOWN" => Some(TriggerSource::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriggerRecord {
    pub t: Timestamp,
    pub source: TriggerSource,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Demuxed {
    pub pps: Vec<Timestamp>,
    pub rotation: Vec<Timestamp>,
    pub unknown: Vec<Timestamp>,
}

impl Demuxed {
    pub fn records(&self) -> Vec<TriggerRecord> {
        let mut out: Vec<TriggerRecord> = self
            .pps
            .iter()
            .map(|&t| (t, TriggerSource::Pps))
            .chain(self.rotation.iter().map(|&t| (t, TriggerSource::Rotation)))
            .chain(self.unknown.iter().map(|&t| (t, TriggerSource::Unknown)))
            .map(|(t, source)| TriggerRecord { t, source })
            .collect();
        out.sort_by_key(|r| r.t);
        out
    }
}

/// Signed distance from `x` to the nearest tooth of the comb, in `[-P/2, P/2)`.
fn residual(x: f64, phase: f64, period: f64) -> f64 {
    (x - phase + period / 2.0).rem_euclid(period) - period / 2.0
}

/// Fitted comb phase (relative to the first timestamp).
///
/// Candidate phases are taken from every timestamp; the one with the lowest
/// total truncated absolute residual wins. The phase is then re-centered on
/// the midrange of its inliers so that every tooth within the jitter band
/// ends up within tolerance.
fn fit_phase(rel: &[f64], period: f64, tol: f64) -> f64 {
    let cost = |phase: f64| -> f64 {
        rel.iter()
            .map(|&x| residual(x, phase, period).abs().min(tol))
            .sum()
    };
    let mut best = (f64::INFINITY, 0.0);
    for &cand in rel {
        let phase = cand.rem_euclid(period);
        let c = cost(phase);
        if c < best.0 {
            best = (c, phase);
        }
    }
    let mut phase = best.1;
    for gate in [2.0 * tol, tol] {
        let (lo, hi) = rel
            .iter()
            .map(|&x| residual(x, phase, period))
            .filter(|r| r.abs() <= gate)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r), hi.max(r))
            });
        if lo.is_finite() {
            phase += (lo + hi) / 2.0;
        }
    }
    phase
}

/// Splits merged trigger timestamps into PPS, rotation and unclassifiable
/// pulses. Periods and tolerance are in µs. Timestamps within tolerance of
/// both combs, or of neither, are reported as unknown.
pub fn demux_triggers(
    merged: &[Timestamp],
    pps_period: f64,
    rotation_period: f64,
    jitter_tolerance: f64,
) -> Result<Demuxed> {
    if merged.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 trigger timestamps, got {}",
            merged.len()
        )));
    }
    if !(jitter_tolerance >= 0.0 && jitter_tolerance.is_finite()) {
        return Err(Error::InvalidArgument("jitter tolerance must be >= 0".into()));
    }
    if !(pps_period.is_finite() && rotation_period.is_finite())
        || pps_period <= 2.0 * jitter_tolerance
        || rotation_period <= 2.0 * jitter_tolerance
    {
        return Err(Error::InvalidArgument(
            "trigger periods must exceed twice the jitter tolerance".into(),
        ));
    }
    if pps_period == rotation_period {
        return Err(Error::InvalidArgument(
            "PPS and rotation periods must differ".into(),
        ));
    }

    let base = *merged.iter().min().expect("non-empty");
    let rel: Vec<f64> = merged.iter().map(|&t| (t - base) as f64).collect();
    let pps_phase = fit_phase(&rel, pps_period, jitter_tolerance);
    let rot_phase = fit_phase(&rel, rotation_period, jitter_tolerance);

    let mut out = Demuxed::default();
    for (&t, &x) in merged.iter().zip(&rel) {
        let on_pps = residual(x, pps_phase, pps_period).abs() <= jitter_tolerance;
        let on_rot = residual(x, rot_phase, rotation_period).abs() <= jitter_tolerance;
        match (on_pps, on_rot) {
            (true, false) => out.pps.push(t),
            (false, true) => out.rotation.push(t),
            _ => out.unknown.push(t),
        }
    }
    Ok(out)
}
