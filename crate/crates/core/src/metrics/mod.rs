//! Box overlap losses, detection scoring and angular-error summaries.

mod ap;
mod boxes;
mod stats;

pub use ap::{compute_ap, ApReport, ScoredBox, COCO_IOU_THRESHOLDS, MAX_DETECTIONS, SMALL_AREA};
pub use boxes::{eiou_loss, iou, EiouBreakdown};
pub use stats::{error_stats, ErrorStats};
