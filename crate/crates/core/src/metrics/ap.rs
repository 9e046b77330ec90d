//! COCO-style average precision and recall.
//!
//! Per IoU threshold: detections of each image are sorted by score and
//! greedily matched, each to the still-unmatched ground truth of highest IoU
//! at or above the threshold (ties go to the later ground truth). Scores are
//! then pooled over images and the precision envelope is sampled at 101
//! recall points.
//!
//! With no ground truth at all the metrics are 1 if there are also no
//! detections and 0 otherwise.

use serde::Serialize;

use super::boxes::iou;
use crate::detection::{BBox, Detection};
use crate::error::{Error, Result};

pub const COCO_IOU_THRESHOLDS: [f64; 10] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];
pub const MAX_DETECTIONS: usize = 100;
/// Ground-truth area below which an object counts as small, px².
pub const SMALL_AREA: f64 = 32.0 * 32.0;
const RECALL_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredBox {
    pub bbox: BBox,
    pub score: f64,
}

impl From<&Detection> for ScoredBox {
    fn from(d: &Detection) -> Self {
        Self {
            bbox: d.bbox,
            score: d.score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApReport {
    pub ap: f64,
    pub ap75: f64,
    pub ar100: f64,
    /// AP over small ground truth only; `None` when there is none.
    pub ap_small: Option<f64>,
}

struct ThresholdResult {
    precision: f64,
    recall: f64,
}

/// Score-sorted, truncated detections for one image.
fn ranked(dets: &[ScoredBox]) -> Vec<ScoredBox> {
    let mut d = dets.to_vec();
    d.sort_by(|a, b| b.score.total_cmp(&a.score));
    d.truncate(MAX_DETECTIONS);
    d
}

/// `small_only` restricts evaluation to small ground truth: larger ground
/// truth is ignored, as are detections matched to it or unmatched large ones.
fn evaluate_threshold(
    dets: &[Vec<ScoredBox>],
    gts: &[Vec<BBox>],
    threshold: f64,
    small_only: bool,
) -> ThresholdResult {
    let in_range = |b: &BBox| !small_only || b.area() < SMALL_AREA;
    let mut pooled: Vec<(f64, bool)> = Vec::new(); // (score, is_tp)
    let mut positives = 0usize;
    let t = threshold.min(1.0 - 1e-10);
    for (img_dets, img_gts) in dets.iter().zip(gts) {
        // Non-ignored ground truth first, as the greedy rule relies on it.
        let mut order: Vec<usize> = (0..img_gts.len()).collect();
        order.sort_by_key(|&g| !in_range(&img_gts[g]));
        let ignored: Vec<bool> = order.iter().map(|&g| !in_range(&img_gts[g])).collect();
        positives += ignored.iter().filter(|&&i| !i).count();
        let mut taken = vec![false; order.len()];
        for d in ranked(img_dets) {
            let mut best = t;
            let mut m: Option<usize> = None;
            for (k, &g) in order.iter().enumerate() {
                if taken[k] {
                    continue;
                }
                if let Some(mk) = m {
                    if !ignored[mk] && ignored[k] {
                        break;
                    }
                }
                let o = iou(&d.bbox, &img_gts[g]);
                if o < best {
                    continue;
                }
                best = o;
                m = Some(k);
            }
            match m {
                Some(k) => {
                    taken[k] = true;
                    if !ignored[k] {
                        pooled.push((d.score, true));
                    }
                }
                None => {
                    if in_range(&d.bbox) {
                        pooled.push((d.score, false));
                    }
                }
            }
        }
    }
    if positives == 0 {
        let v = if pooled.is_empty() { 1.0 } else { 0.0 };
        return ThresholdResult {
            precision: v,
            recall: v,
        };
    }
    // Stable: equal scores keep image order, then rank order.
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut rc = Vec::with_capacity(pooled.len());
    let mut pr = Vec::with_capacity(pooled.len());
    for &(_, is_tp) in &pooled {
        if is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        rc.push(tp as f64 / positives as f64);
        pr.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (1..pr.len()).rev() {
        if pr[i] > pr[i - 1] {
            pr[i - 1] = pr[i];
        }
    }
    let mut sum = 0.0;
    for r in 0..RECALL_POINTS {
        let level = r as f64 / (RECALL_POINTS - 1) as f64;
        let idx = rc.partition_point(|&x| x < level);
        if idx < pr.len() {
            sum += pr[idx];
        }
    }
    ThresholdResult {
        precision: sum / RECALL_POINTS as f64,
        recall: rc.last().copied().unwrap_or(0.0),
    }
}

fn check_inputs(dets: &[Vec<ScoredBox>], gts: &[Vec<BBox>], thresholds: &[f64]) -> Result<()> {
    if dets.len() != gts.len() {
        return Err(Error::InvalidArgument(format!(
            "{} detection lists for {} images",
            dets.len(),
            gts.len()
        )));
    }
    if thresholds.is_empty() || thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidArgument(
            "IoU thresholds must be non-empty and in [0, 1]".into(),
        ));
    }
    if dets.iter().flatten().any(|d| !(0.0..=1.0).contains(&d.score)) {
        return Err(Error::InvalidArgument(
            "detection scores must lie in [0, 1]".into(),
        ));
    }
    Ok(())
}

/// AP averaged over `thresholds`, AP at 0.75, mean recall at 100 detections
/// per image, and the small-object AP split.
pub fn compute_ap(dets: &[Vec<ScoredBox>], gts: &[Vec<BBox>], thresholds: &[f64]) -> Result<ApReport> {
    check_inputs(dets, gts, thresholds)?;
    let n = thresholds.len() as f64;
    let (mut ap, mut ar) = (0.0, 0.0);
    for &t in thresholds {
        let r = evaluate_threshold(dets, gts, t, false);
        ap += r.precision;
        ar += r.recall;
    }
    let ap75 = evaluate_threshold(dets, gts, 0.75, false).precision;
    let any_small = gts.iter().flatten().any(|g| g.area() < SMALL_AREA);
    let ap_small = any_small.then(|| {
        thresholds
            .iter()
            .map(|&t| evaluate_threshold(dets, gts, t, true).precision)
            .sum::<f64>()
            / n
    });
    Ok(ApReport {
        ap: ap / n,
        ap75,
        ar100: ar / n,
        ap_small,
    })
}
