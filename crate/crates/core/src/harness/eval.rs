use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::mpsc::sync_channel;
use std::time::Instant;

use serde::Serialize;

use super::plot::{bearing_plot_svg, Series};
use super::{summarize, PoseTimeline, StageTiming, WindowTiming};
use crate::detection::{
    classify_tracks, extract_components, BBox, Detection, Detector, GroundTruthIndex, OracleDetector,
};
use crate::error::{Error, Result};
use crate::event::{window, EventStream, SensorConfig, Timestamp};
use crate::geometry::{angular_error, pixel_to_bearing, to_spherical, BearingVector, SphericalBearing};
use crate::io::{
    load_events, read_ground_truth_csv, read_triggers_csv, write_bearings_csv, write_detections_csv,
    BearingRecord, DetectorKind, DetectorSettings, EvalSettings, MsrSettings, RunConfig, SimulationSettings,
    TriggerRecord, TriggerSettings, WindowAnchor,
};
use crate::metrics::{
    compute_ap, eiou_loss, error_stats, iou, ApReport, ErrorStats, ScoredBox, COCO_IOU_THRESHOLDS,
};
use crate::representation::{build_msr, Msr, MsrConfig};
use crate::sim::{world_to_pixel, GroundTruthSample, PlatformPose, Scene};

pub const REPORT_SCHEMA: u32 = 1;

const GROUND_TRUTH_NOTE: &str = "Angular errors are measured against simulator ground truth, not \
GNSS/LiDAR field data. With the oracle detector and 4 ms windows the expected bound is mean <= 0.3 deg \
and max <= 0.6 deg: pixel pitch of about 0.129 deg plus the window anchoring offset of at most \
omega*window/2. Field-recorded error levels are not reproduced by this setup.";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WindowCounts {
    pub total: usize,
    pub evaluated: usize,
    /// Windows outside the ground-truth time range.
    pub skipped_no_ground_truth: usize,
    pub in_fov: usize,
    /// In-view windows where the target is at least `min_apparent_size` wide.
    pub eligible: usize,
    /// Eligible windows with a matching detection.
    pub detected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBounds {
    pub pixel_pitch_deg: f64,
    pub anchor_offset_max_deg: f64,
}

/// Run parameters echoed into the report (output location excluded so the
/// report does not depend on where it is written).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub sensor: SensorConfig,
    pub platform: PlatformPose,
    pub msr: MsrSettings,
    pub detector: DetectorSettings,
    pub scene: Scene,
    pub simulation: SimulationSettings,
    pub triggers: TriggerSettings,
    pub eval: EvalSettings,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(c: &RunConfig) -> Self {
        Self {
            seed: c.seed,
            sensor: c.sensor,
            platform: c.platform,
            msr: c.msr,
            detector: c.detector.clone(),
            scene: c.scene.clone(),
            simulation: c.simulation,
            triggers: c.triggers,
            eval: c.eval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub schema: u32,
    pub sequence: String,
    pub detector: DetectorKind,
    pub windows: WindowCounts,
    /// `detected / eligible`; `None` without eligible windows.
    pub recall: Option<f64>,
    pub detections: usize,
    pub matched: usize,
    pub false_positives: usize,
    /// Over matched detections.
    pub bearing_error: Option<ErrorStats>,
    pub mean_eiou: Option<f64>,
    pub detection_metrics: ApReport,
    pub error_bounds: ErrorBounds,
    pub note: String,
    pub config: ConfigEcho,
    /// Wall-clock dependent, so written separately from the report.
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: EvalReport,
    /// Every detection, in window order.
    pub detections: Vec<Detection>,
    /// One row per matched detection.
    pub bearings: Vec<BearingRecord>,
}

enum Truth {
    /// Sequence without a target: every detection is a false positive.
    NoTarget,
    Skipped,
    Target(GroundTruthSample),
}

struct WindowResult {
    msr_cfg: MsrConfig,
    detections: Vec<Detection>,
    estimates: Vec<(BearingVector, SphericalBearing)>,
    anchor: Timestamp,
    truth: Truth,
}

enum DetectorImpl {
    Oracle(OracleDetector),
    Reference,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    detector: DetectorImpl,
    timeline: PoseTimeline,
    gt: GroundTruthIndex,
}

fn anchor_time(cfg: &MsrConfig, anchor: WindowAnchor) -> Timestamp {
    match anchor {
        WindowAnchor::Start => cfg.start,
        WindowAnchor::Midpoint => cfg.midpoint(),
        WindowAnchor::End => cfg.end(),
    }
}

impl Context<'_> {
    fn process(&self, msr: &Msr, timing: &mut WindowTiming) -> Result<WindowResult> {
        let mid = msr.config.midpoint();
        let detections = match &self.detector {
            DetectorImpl::Oracle(o) => {
                let t = Instant::now();
                let d = o.detect(msr)?;
                timing.0[WindowTiming::INFERENCE] = t.elapsed();
                d
            }
            DetectorImpl::Reference => {
                let params = &self.cfg.detector.reference;
                let t = Instant::now();
                let comps = extract_components(msr, &params.filter());
                timing.0[WindowTiming::INPUT] = t.elapsed();
                let t = Instant::now();
                let pose = self.timeline.pose_at(mid);
                let d = classify_tracks(&comps, &msr.config, &pose, &self.cfg.sensor, params);
                timing.0[WindowTiming::INFERENCE] = t.elapsed();
                d
            }
        };

        let t = Instant::now();
        let anchor = anchor_time(&msr.config, self.cfg.eval.anchor);
        let pose = self.timeline.pose_at(anchor);
        let estimates = detections
            .iter()
            .map(|d| pixel_to_bearing(d.bbox.cx, d.bbox.cy, anchor, &self.cfg.sensor, &pose))
            .collect::<Result<Vec<_>>>()?;
        let truth = if self.gt.samples().is_empty() {
            Truth::NoTarget
        } else {
            match self.gt.interpolate(mid) {
                Some(s) => Truth::Target(s),
                None => Truth::Skipped,
            }
        };
        timing.0[WindowTiming::BEARING] = t.elapsed();
        Ok(WindowResult {
            msr_cfg: msr.config,
            detections,
            estimates,
            anchor,
            truth,
        })
    }
}

fn window_starts(stream: &EventStream, cfg: &RunConfig) -> Vec<Timestamp> {
    let (Some(first), Some(last)) = (stream.first_time(), stream.last_time()) else {
        return Vec::new();
    };
    let dt = cfg.msr.window_us;
    let mut starts = Vec::new();
    let mut s = first;
    while s + dt <= last + 1 {
        starts.push(s);
        if cfg.eval.max_windows > 0 && starts.len() == cfg.eval.max_windows {
            break;
        }
        s += dt;
    }
    starts
}

/// Data processing and representation for one window.
pub(crate) fn prepare_window(
    stream: &EventStream,
    start: Timestamp,
    msr: &MsrSettings,
    timing: &mut WindowTiming,
) -> Result<Msr> {
    let t = Instant::now();
    let events = window(stream, start, msr.window_us)?;
    timing.0[WindowTiming::DATA] = t.elapsed();
    let t = Instant::now();
    let m = build_msr(&events, &MsrConfig::new(start, msr.window_us, msr.slices)?)?;
    timing.0[WindowTiming::IMAGE] = t.elapsed();
    Ok(m)
}

fn run_serial(
    ctx: &Context,
    stream: &EventStream,
    starts: &[Timestamp],
) -> Result<(Vec<WindowResult>, Vec<WindowTiming>)> {
    let mut results = Vec::with_capacity(starts.len());
    let mut timings = Vec::with_capacity(starts.len());
    for &s in starts {
        let mut timing = WindowTiming::default();
        let wall = Instant::now();
        let msr = prepare_window(stream, s, &ctx.cfg.msr, &mut timing)?;
        results.push(ctx.process(&msr, &mut timing)?);
        timing.0[WindowTiming::OTHER] = wall.elapsed().saturating_sub(timing.total());
        timings.push(timing);
    }
    Ok((results, timings))
}

/// Representation on a producer thread, detection and bearing on the caller's,
/// joined by a bounded queue. Time spent waiting on the queue counts as `other`.
fn run_pipelined(
    ctx: &Context,
    stream: &EventStream,
    starts: &[Timestamp],
) -> Result<(Vec<WindowResult>, Vec<WindowTiming>)> {
    let (tx, rx) = sync_channel::<Result<(Msr, WindowTiming)>>(ctx.cfg.eval.queue_depth);
    std::thread::scope(|scope| {
        let msr_settings = ctx.cfg.msr;
        scope.spawn(move || {
            for &s in starts {
                let mut timing = WindowTiming::default();
                let item = prepare_window(stream, s, &msr_settings, &mut timing).map(|m| (m, timing));
                let failed = item.is_err();
                if tx.send(item).is_err() || failed {
                    return;
                }
            }
        });
        let mut results = Vec::with_capacity(starts.len());
        let mut timings = Vec::with_capacity(starts.len());
        loop {
            let wait = Instant::now();
            let Ok(item) = rx.recv() else { break };
            let waited = wait.elapsed();
            let (msr, mut timing) = item?;
            timing.0[WindowTiming::OTHER] = waited;
            results.push(ctx.process(&msr, &mut timing)?);
            timings.push(timing);
        }
        Ok((results, timings))
    })
}

fn ground_truth_box(s: &GroundTruthSample, t: Timestamp, cfg: &RunConfig) -> Option<BBox> {
    if !s.in_fov {
        return None;
    }
    let p = world_to_pixel(&s.bearing, t, &cfg.platform, &cfg.sensor)?;
    let size = s.apparent_size.max(1.0);
    BBox::new(p.u, p.v, size, size).clamp_to(&cfg.sensor)
}

/// Evaluates the configured detector over every full window of `stream`.
///
/// `triggers` re-anchor the platform angle; without them the configured pose
/// is used throughout. An empty `ground_truth` marks a sequence with no target.
pub fn run_eval(
    cfg: &RunConfig,
    stream: &EventStream,
    ground_truth: &[GroundTruthSample],
    triggers: Option<&[TriggerRecord]>,
) -> Result<EvalOutcome> {
    cfg.validate()?;
    if (stream.width, stream.height) != (cfg.sensor.width, cfg.sensor.height) {
        return Err(Error::Config(format!(
            "event stream is {}x{} but the sensor is configured as {}x{}",
            stream.width, stream.height, cfg.sensor.width, cfg.sensor.height
        )));
    }
    let gt = GroundTruthIndex::new(ground_truth.to_vec());
    let timeline = match triggers {
        Some(t) => PoseTimeline::from_triggers(cfg.platform, t, cfg.triggers),
        None => PoseTimeline::new(cfg.platform, Vec::new(), cfg.triggers),
    };
    let detector = match cfg.detector.kind {
        DetectorKind::Oracle => DetectorImpl::Oracle(OracleDetector {
            ground_truth: gt.clone(),
            sensor: cfg.sensor,
            pose: cfg.platform,
            quantize: cfg.detector.oracle_quantize,
        }),
        DetectorKind::Reference => {
            if cfg.msr.slices < 3 {
                return Err(Error::Config(format!(
                    "reference detector needs at least 3 slices, got {}",
                    cfg.msr.slices
                )));
            }
            DetectorImpl::Reference
        }
    };
    let ctx = Context {
        cfg,
        detector,
        timeline,
        gt,
    };
    let starts = window_starts(stream, cfg);
    let (results, timings) = if cfg.eval.pipelined {
        run_pipelined(&ctx, stream, &starts)?
    } else {
        run_serial(&ctx, stream, &starts)?
    };

    let mut counts = WindowCounts {
        total: starts.len(),
        ..Default::default()
    };
    let mut all_dets = Vec::new();
    let mut bearings = Vec::new();
    let mut gammas = Vec::new();
    let mut eious = Vec::new();
    let mut ap_dets: Vec<Vec<ScoredBox>> = Vec::new();
    let mut ap_gts: Vec<Vec<BBox>> = Vec::new();
    let mut false_positives = 0;
    for r in results {
        let mid = r.msr_cfg.midpoint();
        let sample = match r.truth {
            Truth::Skipped => {
                counts.skipped_no_ground_truth += 1;
                continue;
            }
            Truth::NoTarget => None,
            Truth::Target(s) => Some(s),
        };
        counts.evaluated += 1;
        let gt_box = sample.as_ref().and_then(|s| ground_truth_box(s, mid, cfg));
        let eligible = gt_box.is_some()
            && sample
                .as_ref()
                .is_some_and(|s| s.apparent_size >= cfg.eval.min_apparent_size);
        if gt_box.is_some() {
            counts.in_fov += 1;
        }
        if eligible {
            counts.eligible += 1;
        }
        let matched = gt_box.and_then(|g| {
            r.detections
                .iter()
                .position(|d| iou(&d.bbox, &g) >= cfg.eval.match_iou)
                .map(|i| (i, g))
        });
        false_positives += r.detections.len() - usize::from(matched.is_some());
        if let (Some((i, g)), Some(s)) = (matched, sample.as_ref()) {
            if eligible {
                counts.detected += 1;
            }
            let (est_vec, est) = &r.estimates[i];
            let gamma = angular_error(&est_vec.v, &s.bearing)?;
            let gt_sph = to_spherical(&BearingVector::platform(s.bearing.x, s.bearing.y, s.bearing.z))?;
            gammas.push(gamma);
            eious.push(eiou_loss(&r.detections[i].bbox, &g).total);
            bearings.push(BearingRecord {
                t: r.anchor,
                theta_est: est.azimuth_deg,
                phi_est: est.elevation_deg,
                theta_gt: gt_sph.azimuth_deg,
                phi_gt: gt_sph.elevation_deg,
                gamma,
            });
        }
        ap_dets.push(r.detections.iter().map(ScoredBox::from).collect());
        ap_gts.push(gt_box.into_iter().collect());
        all_dets.extend(r.detections);
    }

    let detection_metrics = compute_ap(&ap_dets, &ap_gts, &COCO_IOU_THRESHOLDS)?;
    let report = EvalReport {
        schema: REPORT_SCHEMA,
        sequence: cfg.name.clone(),
        detector: cfg.detector.kind,
        windows: counts,
        recall: (counts.eligible > 0).then(|| counts.detected as f64 / counts.eligible as f64),
        detections: all_dets.len(),
        matched: gammas.len(),
        false_positives,
        bearing_error: if gammas.is_empty() {
            None
        } else {
            Some(error_stats(&gammas)?)
        },
        mean_eiou: (!eious.is_empty()).then(|| eious.iter().sum::<f64>() / eious.len() as f64),
        detection_metrics,
        error_bounds: ErrorBounds {
            pixel_pitch_deg: cfg.sensor.vertical_fov_deg() / f64::from(cfg.sensor.height),
            anchor_offset_max_deg: (cfg.platform.omega.abs() * cfg.msr.window_us as f64 * 1e-6 / 2.0)
                .to_degrees(),
        },
        note: GROUND_TRUTH_NOTE.to_string(),
        config: ConfigEcho::from(cfg),
        timings: summarize(&timings),
    };
    Ok(EvalOutcome {
        report,
        detections: all_dets,
        bearings,
    })
}

/// Loads inputs, evaluates, and writes `report.json`, `timing.json`,
/// `detections.csv`, `bearings.csv` and optional SVG plots to `cfg.output.dir`.
pub fn cmd_eval(
    cfg: &RunConfig,
    events_path: &Path,
    ground_truth_path: &Path,
    triggers_path: Option<&Path>,
) -> Result<EvalOutcome> {
    let stream = load_events(events_path, &cfg.sensor)?;
    let gt = read_ground_truth_csv(File::open(ground_truth_path)?)?;
    let triggers = triggers_path
        .map(|p| -> Result<_> { read_triggers_csv(File::open(p)?) })
        .transpose()?;
    let out = run_eval(cfg, &stream, &gt, triggers.as_deref())?;

    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), out.report.to_json() + "\n")?;
    let timing = serde_json::to_string_pretty(&out.report.timings).expect("timings serialize");
    std::fs::write(dir.join("timing.json"), timing + "\n")?;
    write_detections_csv(
        &out.detections,
        BufWriter::new(File::create(dir.join("detections.csv"))?),
    )?;
    write_bearings_csv(
        &out.bearings,
        BufWriter::new(File::create(dir.join("bearings.csv"))?),
    )?;
    if cfg.eval.plots {
        let ts: Vec<f64> = out.bearings.iter().map(|b| b.t as f64 * 1e-6).collect();
        let pick = |f: fn(&BearingRecord) -> f64| out.bearings.iter().map(f).collect::<Vec<_>>();
        for (file, title, est, gt) in [
            (
                "azimuth.svg",
                "azimuth [deg]",
                pick(|b| b.theta_est),
                pick(|b| b.theta_gt),
            ),
            (
                "elevation.svg",
                "elevation [deg]",
                pick(|b| b.phi_est),
                pick(|b| b.phi_gt),
            ),
        ] {
            let svg = bearing_plot_svg(
                title,
                &[
                    Series {
                        label: "GT",
                        color: "#1f77b4",
                        t: &ts,
                        values: &gt,
                    },
                    Series {
                        label: "Est.",
                        color: "#d62728",
                        t: &ts,
                        values: &est,
                    },
                ],
            );
            std::fs::write(dir.join(file), svg)?;
        }
    }
    Ok(out)
}
