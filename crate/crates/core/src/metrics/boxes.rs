//! Overlap measures between axis-aligned boxes.

use serde::Serialize;

use crate::detection::BBox;

/// Intersection over union in `[0, 1]`.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    // corner round-off would otherwise leave identical boxes just below 1
    if a == b && a.is_valid() {
        return 1.0;
    }
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Terms of the efficient-IoU loss; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EiouBreakdown {
    pub l_iou: f64,
    /// Squared center distance over the squared diagonal of the enclosing box.
    pub center_term: f64,
    /// Squared width difference over the squared enclosing width.
    pub width_term: f64,
    /// Squared height difference over the squared enclosing height.
    pub height_term: f64,
    pub total: f64,
}

/// `L = (1 - IoU) + ρ²(b, b_gt)/c² + (w - w_gt)²/w_c² + (h - h_gt)²/h_c²`,
/// with `w_c`, `h_c`, `c` the width, height and diagonal of the smallest
/// box enclosing both.
pub fn eiou_loss(b: &BBox, gt: &BBox) -> EiouBreakdown {
    let (ax0, ay0, ax1, ay1) = b.corners();
    let (bx0, by0, bx1, by1) = gt.corners();
    let wc = ax1.max(bx1) - ax0.min(bx0);
    let hc = ay1.max(by1) - ay0.min(by0);
    let c2 = wc * wc + hc * hc;
    let rho2 = (b.cx - gt.cx).powi(2) + (b.cy - gt.cy).powi(2);
    let l_iou = 1.0 - iou(b, gt);
    let center_term = rho2 / c2;
    let width_term = (b.w - gt.w).powi(2) / (wc * wc);
    let height_term = (b.h - gt.h).powi(2) / (hc * hc);
    EiouBreakdown {
        l_iou,
        center_term,
        width_term,
        height_term,
        total: l_iou + center_term + width_term + height_term,
    }
}
